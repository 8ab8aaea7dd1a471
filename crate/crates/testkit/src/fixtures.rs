// SPDX-License-Identifier: Apache-2.0

//! Synthetic CSV and JSON fixtures for the four datasets and for predictions.

use crate::calendar::{iso, next_day, week_starts, Ymd};

pub const INFODENGUE_HEADER: &str = "data_iniSE,SE,casos,casos_est,casos_prov,municipio_geocodigo,p_rt1,p_inc100k,nivel,versao_modelo,Rt,municipio_nome,pop,receptivo,transmissao,nivel_inc,disease";

pub const CLIMATE_HEADER: &str = "date,geocodigo,temp_min,temp_med,temp_max,precip_min,precip_med,precip_max,precip_tot,pressao_min,pressao_med,pressao_max,umid_min,umid_med,umid_max";

pub const EPISCANNER_HEADER: &str = "disease,CID10,year,geocode,muni_name,peak_week,beta,gamma,R0,total_cases,alpha,sum_res,ep_ini,ep_end,ep_dur";

pub const OVITRAP_HEADER: &str = "trap_id,latitude,longitude,install_date,collection_date,epi_week,year,egg_count,status,municipality_geocode";

/// Minas Gerais municipalities (IBGE geocode, name, population).
pub const MG_TOWNS: [(u32, &str, u64); 3] = [
    (3106200, "Belo Horizonte", 2_315_560),
    (3170206, "Uberlândia", 713_232),
    (3136702, "Juiz de Fora", 540_756),
];

/// One infodengue row with the fields tests care about; the rest are
/// derived deterministically.
#[derive(Debug, Clone)]
pub struct CaseWeek {
    pub week_start: String,
    pub se: u32,
    pub geocode: u32,
    pub name: String,
    pub pop: u64,
    pub casos: u64,
    pub disease: String,
}

impl CaseWeek {
    pub fn to_csv_line(&self) -> String {
        let casos_est = self.casos as f64 * 1.125;
        let p_inc = self.casos as f64 / self.pop as f64 * 1e5;
        let nivel = 1 + (self.casos % 4);
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.week_start,
            self.se,
            self.casos,
            casos_est,
            self.casos.saturating_sub(1),
            self.geocode,
            (self.casos % 11) as f64 / 10.0,
            p_inc,
            nivel,
            "v2024.1",
            0.5 + (self.casos % 7) as f64 * 0.25,
            self.name,
            self.pop,
            self.casos % 4,
            (self.casos + 1) % 4,
            self.casos % 3,
            self.disease,
        )
    }
}

/// `weeks` consecutive epidemiological weeks from `from`, one row per town
/// per week, with `casos = f(week_index, town_index)`.
pub fn case_weeks(
    from: Ymd,
    weeks: usize,
    towns: &[(u32, &str, u64)],
    disease: &str,
    f: impl Fn(usize, usize) -> u64,
) -> Vec<CaseWeek> {
    let starts = week_starts(from, weeks);
    let mut out = Vec::new();
    for (wi, (date, se)) in starts.iter().enumerate() {
        for (ti, &(geocode, name, pop)) in towns.iter().enumerate() {
            out.push(CaseWeek {
                week_start: date.clone(),
                se: *se,
                geocode,
                name: name.to_string(),
                pop,
                casos: f(wi, ti),
                disease: disease.to_string(),
            });
        }
    }
    out
}

pub fn infodengue_csv(rows: &[CaseWeek]) -> String {
    let mut s = String::from(INFODENGUE_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.to_csv_line());
        s.push('\n');
    }
    s
}

/// `n` synthetic infodengue rows spread over as many towns as needed, with
/// diseases alternating dengue/chikungunya when `mixed` is set.
pub fn synthetic_infodengue(n: usize, mixed: bool) -> String {
    let mut rows = Vec::with_capacity(n);
    let starts = week_starts((2023, 1, 1), 52);
    let mut i = 0usize;
    'outer: for town in 0.. {
        let geocode = 3100000 + 100 * town as u32 + 6;
        for (date, se) in &starts {
            if rows.len() == n {
                break 'outer;
            }
            rows.push(CaseWeek {
                week_start: date.clone(),
                se: *se,
                geocode,
                name: format!("Town {town}"),
                pop: 10_000 + town as u64,
                casos: (i * 7 % 53) as u64,
                disease: if mixed && i % 2 == 1 {
                    "chikungunya".into()
                } else {
                    "dengue".into()
                },
            });
            i += 1;
        }
    }
    infodengue_csv(&rows)
}

pub fn climate_csv(from: Ymd, days: usize, geocode: u32) -> String {
    let mut s = String::from(CLIMATE_HEADER);
    s.push('\n');
    let mut d = from;
    for i in 0..days {
        let t = 18.0 + (i % 5) as f64 * 0.5;
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            iso(d),
            geocode,
            t,
            t + 4.25,
            t + 9.5,
            0.0,
            (i % 3) as f64 * 0.75,
            (i % 3) as f64 * 2.5,
            (i % 3) as f64 * 6.0,
            0.9981,
            1.0012,
            1.0043,
            40.0 + i as f64 % 10.0,
            65.5,
            93.25,
        ));
        d = next_day(d);
    }
    s
}

pub fn episcanner_csv() -> String {
    format!(
        "{EPISCANNER_HEADER}\n\
         dengue,A90,2023,3106200,Belo Horizonte,14.6,0.41,0.29,1.41,18543,0.87,1234.5,202306,202321,16\n\
         dengue,A90,2024,3106200,Belo Horizonte,11.2,0.52,0.31,1.68,95412,0.91,2411.75,202403,202419,17\n\
         chik,A92,2023,3170206,Uberlândia,18.0,0.35,0.27,1.30,1280,0.72,88.125,202310,202324,15\n"
    )
}

pub fn ovitrap_csv() -> String {
    format!(
        "{OVITRAP_HEADER}\n\
         OV-001,-19.9167,-43.9345,2024-01-07,2024-01-14,202403,2024,57,positive,3106200\n\
         OV-001,-19.9167,-43.9345,2024-01-14,2024-01-21,202404,2024,0,negative,3106200\n\
         OV-002,-18.9186,-48.2772,2024-01-07,2024-01-14,202403,2024,12,positive,3170206\n"
    )
}

/// A prediction upload body as the server and client accept it.
pub fn prediction_json(
    model: u64,
    commit: &str,
    predict_date: &str,
    rows: &[(String, f64, f64, f64)],
    adm_1: &str,
) -> String {
    let rows: Vec<String> = rows
        .iter()
        .map(|(date, pred, lower, upper)| {
            format!(
                r#"{{"date":"{date}","pred":{pred},"lower":{lower},"upper":{upper},"adm_0":"BR","adm_1":"{adm_1}"}}"#
            )
        })
        .collect();
    format!(
        r#"{{"model":{model},"description":"synthetic","commit":"{commit}","predict_date":"{predict_date}","prediction":[{}]}}"#,
        rows.join(",")
    )
}

pub const COMMIT: &str = "3f786850e387550fdab836ed7e6dc881de23001b";
