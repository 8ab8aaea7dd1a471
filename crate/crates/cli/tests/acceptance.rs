// SPDX-License-Identifier: Apache-2.0

//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! A criterion listed in `EXPECTED_FAILURES` is one whose stated tolerance no
//! correct implementation can meet; it still prints FAIL with the measured
//! numbers, but only an unexpected result changes the exit status.

mod common;

use std::collections::{BTreeSet, HashMap};
use std::io::Cursor;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use chrono::NaiveDate;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::{json, Value};

use arbohub::commands;
use arbohub::rows::rows_from_json;
use arbohub::score::{score_offline, OfflineOptions};
use arbohub::CliError;
use arbohub_core::datastore::{DatasetKind, DatasetQuery, IngestOptions};
use arbohub_core::domain::calendar::epiweek_from_date;
use arbohub_core::scoring::{crps_normal, log_score_normal, sigma_from_interval};
use arbohub_core::storage::FileBackend;
use arbohub_core::{Datastore, Metric, ScoreReport};
use arbohub_server::{Hub, Settings};
use arbohub_testkit::calendar::{label_days, week_starts};
use arbohub_testkit::crps::crps_by_quadrature;
use arbohub_testkit::fixtures::{
    case_weeks, climate_csv, episcanner_csv, infodengue_csv, ovitrap_csv, prediction_json,
    synthetic_infodengue, COMMIT, MG_TOWNS,
};

type Verdict = Result<String, String>;

/// Criteria whose stated tolerance is below the error of the stated value.
const EXPECTED_FAILURES: &[u32] = &[2];

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn crps_oracle_grid() -> Verdict {
    let started = Instant::now();
    let mut worst = 0.0f64;
    let mut n = 0;
    for mu in -5..=5 {
        for sigma in [0.1, 1.0, 10.0] {
            for k in 0..=40 {
                let y = -10.0 + 0.5 * k as f64;
                let mu = mu as f64;
                let got = crps_normal(mu, sigma, y).map_err(|e| e.to_string())?;
                let want = crps_by_quadrature(mu, sigma, y);
                let d = (got - want).abs();
                ensure(d < 1e-6, || format!("mu={mu} sigma={sigma} y={y}: {got} vs quadrature {want}"))?;
                worst = worst.max(d);
                n += 1;
            }
        }
    }
    let secs = started.elapsed().as_secs_f64();
    ensure(secs < 5.0, || format!("took {secs:.2} s"))?;
    Ok(format!("{n} cases, max |Δ| {worst:.1e}, {secs:.2} s"))
}

fn analytic_spot_values() -> Verdict {
    let c0 = crps_normal(0.0, 1.0, 0.0).map_err(|e| e.to_string())?;
    let c1 = crps_normal(0.0, 1.0, 1.0).map_err(|e| e.to_string())?;
    let ls = log_score_normal(0.0, 1.0, 0.0).map_err(|e| e.to_string())?;
    let sigma = sigma_from_interval(2.0, 10.0).map_err(|e| e.to_string())?;
    ensure((c0 - 0.2336949).abs() <= 1e-6, || format!("crps(0,1,0) = {c0}"))?;
    ensure((c1 - 0.6024413).abs() <= 1e-6, || format!("crps(0,1,1) = {c1}"))?;
    ensure(sigma == 2.0, || format!("sigma_from_interval(2,10) = {sigma}"))?;
    let exact = -0.5 * (2.0 * std::f64::consts::PI).ln();
    ensure((ls - exact).abs() <= 1e-15, || format!("log_score(0,1,0) = {ls}, -ln(2π)/2 = {exact}"))?;
    let stated = -0.9189385;
    ensure((ls - stated).abs() <= 1e-9, || {
        format!(
            "crps(0,1,0)={c0:.9} crps(0,1,1)={c1:.9} sigma=2 ok; log_score(0,1,0)={ls:.15} equals -ln(2π)/2 \
             but is {:.1e} from the stated -0.9189385, which is that value rounded to 7 decimals (tolerance 1e-9)",
            (ls - stated).abs()
        )
    })?;
    Ok(format!("crps {c0:.9} / {c1:.9}, log score {ls:.12}, sigma {sigma}"))
}

fn crps_properties() -> Verdict {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let (mut worst_shift, mut worst_scale, mut worst_point) = (0.0f64, 0.0f64, 0.0f64);
    for case in 0..1000 {
        let mu = rng.random_range(-10.0..10.0);
        let y = rng.random_range(-10.0..10.0);
        let sigma = rng.random_range(0.1..10.0);
        let c = rng.random_range(-10.0..10.0);
        let k = rng.random_range(0.1..10.0);
        let base = crps_normal(mu, sigma, y).unwrap();
        ensure(base >= 0.0, || format!("case {case}: negative crps {base}"))?;
        let shifted = crps_normal(mu + c, sigma, y + c).unwrap();
        let scaled = crps_normal(k * mu, k * sigma, k * y).unwrap();
        let point = crps_normal(mu, 1e-9, y).unwrap();
        let d_shift = (shifted - base).abs();
        let d_scale = (scaled - k * base).abs();
        let d_point = (point - (y - mu).abs()).abs();
        ensure(d_shift <= 1e-12, || format!("case {case}: translation off by {d_shift:e}"))?;
        ensure(d_scale <= 1e-12, || format!("case {case}: scaling off by {d_scale:e}"))?;
        ensure(d_point < 1e-6, || format!("case {case}: point limit off by {d_point:e}"))?;
        worst_shift = worst_shift.max(d_shift);
        worst_scale = worst_scale.max(d_scale);
        worst_point = worst_point.max(d_point);
    }
    Ok(format!(
        "1000 cases; max Δ translation {worst_shift:.1e}, scale {worst_scale:.1e}, point limit {worst_point:.1e}"
    ))
}

fn model_doc() -> Value {
    json!({
        "name": "acceptance", "description": "", "repository": "https://github.com/example/acceptance",
        "implementation_language": "R", "disease": "dengue", "temporal": true, "spatial": false,
        "categorical": false, "adm_level": 1, "time_resolution": "week", "sprint": true
    })
}

async fn validation_protocol() -> Verdict {
    let hub = common::start().await;
    let client = hub.authed();
    let model = commands::register_model(&client, &model_doc()).await.map_err(|e| e.to_string())?;
    let rows: Vec<(String, f64, f64, f64)> = week_starts((2024, 1, 7), 4)
        .into_iter()
        .map(|(d, _)| (d, 10.0, 6.0, 14.0))
        .collect();
    let good: Value = serde_json::from_str(&prediction_json(model.id, COMMIT, "2024-01-01", &rows, "MG")).unwrap();
    client
        .post_json("api/registry/predictions", &good)
        .await
        .map_err(|e| format!("rows with adm_1 refused: {e}"))?;

    let mut missing = good.clone();
    missing["prediction"][1].as_object_mut().unwrap().remove("adm_1");
    let mut disordered = good.clone();
    disordered["prediction"][2]["lower"] = json!(11.0);
    disordered["prediction"][3]["pred"] = json!(20.0);

    let mut notes = Vec::new();
    for (doc, want) in [(&missing, vec![(1, "adm_1")]), (&disordered, vec![(2, "pred"), (3, "pred")])] {
        match client.post_json("api/registry/predictions", doc).await {
            Err(CliError::Server { status: 422, body }) => {
                let got: Vec<(usize, String)> = body
                    .details
                    .iter()
                    .filter_map(|e| e.row.map(|r| (r, e.field.clone())))
                    .collect();
                for (row, field) in &want {
                    ensure(got.iter().any(|(r, f)| r == row && f == field), || {
                        format!("expected {field} at row {row}, got {got:?}")
                    })?;
                }
                notes.push(format!("{got:?}"));
            }
            other => return Err(format!("expected 422, got {other:?}")),
        }
    }
    Ok(format!("adm_1 rows accepted; 422 details {}", notes.join(" and ")))
}

async fn pagination() -> Verdict {
    let hub = common::start().await;
    hub.ingest(DatasetKind::Infodengue, &synthetic_infodengue(250, false));
    let client = hub.client(None);
    let mut sizes = Vec::new();
    let mut keys = BTreeSet::new();
    let mut total = 0;
    for page in 1..=4 {
        let q = [("page".to_string(), page.to_string()), ("per_page".to_string(), "100".to_string())];
        let body = client.get_json("api/datastore/infodengue", &q).await.map_err(|e| e.to_string())?;
        let envelope: BTreeSet<&str> = body.as_object().unwrap().keys().map(String::as_str).collect();
        ensure(envelope == BTreeSet::from(["items", "pagination"]), || format!("envelope keys {envelope:?}"))?;
        ensure(body["pagination"]["total_pages"] == 3, || format!("pagination {}", body["pagination"]))?;
        let items = body["items"].as_array().unwrap();
        sizes.push(items.len());
        for it in items {
            total += 1;
            keys.insert((it["disease"].to_string(), it["municipio_geocodigo"].to_string(), it["SE"].to_string()));
        }
    }
    ensure(sizes == [100, 100, 50, 0], || format!("page sizes {sizes:?}"))?;
    ensure(total == 250 && keys.len() == 250, || format!("{total} items, {} distinct", keys.len()))?;
    Ok("pages 100/100/50, total_pages 3, 250 distinct rows, envelope {items, pagination}".into())
}

fn approx(a: Option<f64>, b: f64, tol: f64) -> bool {
    a.is_some_and(|a| (a - b).abs() <= tol)
}

async fn end_to_end() -> Verdict {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let hub = Arc::new(Hub::open(dir.path(), Settings::default()).map_err(|e| e.to_string())?);
    let (_, key) = hub.registry.issue_key("acceptance").map_err(|e| e.to_string())?;
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(arbohub_server::serve(listener, hub.clone()));
    let running = common::Running {
        hub,
        addr,
        token: key.token,
    };
    let client = running.authed();

    let model = commands::register_model(&client, &model_doc()).await.map_err(|e| e.to_string())?;
    let truth = |w: usize, t: usize| (20 + (w * 13 + t * 7) % 90) as u64;
    let weeks = week_starts((2023, 1, 1), 52);
    let rows: Vec<(String, f64, f64, f64)> = weeks
        .iter()
        .enumerate()
        .map(|(w, (d, _))| {
            let y: u64 = (0..MG_TOWNS.len()).map(|t| truth(w, t)).sum();
            let y = y as f64;
            (d.clone(), y, y - 2.0, y + 2.0)
        })
        .collect();
    let doc: Value = serde_json::from_str(&prediction_json(model.id, COMMIT, "2022-12-31", &rows, "MG")).unwrap();
    let created = commands::upload_prediction(&client, &doc).await.map_err(|e| e.to_string())?;

    // Observed data arrives afterwards through a separate handle, as the
    // admin ingest command would write it.
    let backend = Arc::new(FileBackend::open(dir.path()).map_err(|e| e.to_string())?);
    let admin = Datastore::open(backend, Default::default()).map_err(|e| e.to_string())?;
    let csv = infodengue_csv(&case_weeks((2023, 1, 1), 52, &MG_TOWNS, "dengue", truth));
    let report = admin
        .ingest(DatasetKind::Infodengue, Cursor::new(csv), &IngestOptions::default())
        .map_err(|e| e.to_string())?;
    ensure(report.inserted == 156, || format!("ingested {report:?}"))?;

    let body = running
        .client(None)
        .get_json(&format!("api/registry/predictions/{}/score", created.id), &[])
        .await
        .map_err(|e| e.to_string())?;
    let r: ScoreReport = serde_json::from_value(body).map_err(|e| e.to_string())?;
    let s = r.scores;
    ensure(Metric::ALL.iter().all(|&m| s.get(m).is_some()), || format!("scores {s:?}"))?;
    ensure(r.n_matched == 52, || format!("{} rows matched", r.n_matched))?;
    ensure(s.mae == Some(0.0) && s.mse == Some(0.0), || format!("mae {:?} mse {:?}", s.mae, s.mse))?;
    ensure(approx(s.crps, 0.2336949, 1e-6), || format!("crps {:?}", s.crps))?;
    ensure(approx(s.log_score, -0.9189385, 1e-6), || format!("log_score {:?}", s.log_score))?;
    Ok(format!(
        "52 rows scored: mae {} mse {} crps {:.9} log_score {:.9}",
        s.mae.unwrap(),
        s.mse.unwrap(),
        s.crps.unwrap(),
        s.log_score.unwrap()
    ))
}

fn epiweek_oracle() -> Verdict {
    let days = label_days(2010, 2030);
    ensure(days.len() == 7670, || format!("oracle produced {} days", days.len()))?;
    for d in &days {
        let (y, m, day) = d.date;
        let date = NaiveDate::from_ymd_opt(y, m, day).unwrap();
        let got = epiweek_from_date(date);
        ensure((got.year(), got.week()) == (d.epi_year, d.epi_week), || {
            format!("{date}: {}/{} vs oracle {}/{}", got.year(), got.week(), d.epi_year, d.epi_week)
        })?;
    }
    let boundary = epiweek_from_date(NaiveDate::from_ymd_opt(2022, 1, 1).unwrap());
    ensure(boundary.encode() == 202152, || format!("2022-01-01 -> {}", boundary.encode()))?;
    Ok("7670 dates agree, 2022-01-01 -> 202152".into())
}

fn parse_csv(text: &str) -> Vec<HashMap<String, String>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers().unwrap().clone();
    r.records()
        .map(|rec| {
            let rec = rec.unwrap();
            headers.iter().zip(rec.iter()).map(|(h, v)| (h.to_string(), v.to_string())).collect()
        })
        .collect()
}

fn same_field(source: &str, stored: Option<&Value>) -> bool {
    match stored {
        None | Some(Value::Null) => source.is_empty(),
        Some(Value::Number(n)) => source
            .parse::<f64>()
            .is_ok_and(|s| (s - n.as_f64().unwrap()).abs() <= 1e-9 * s.abs().max(1.0)),
        Some(Value::String(s)) => s == source,
        Some(other) => other.to_string() == source,
    }
}

fn all_items(store: &Datastore, kind: DatasetKind) -> Vec<Value> {
    let q = DatasetQuery::from_pairs(kind, &[("per_page", "300")], store.limits()).unwrap();
    let page = serde_json::to_value(store.query(kind, &q)).unwrap();
    page["items"].as_array().unwrap().clone()
}

fn ingestion() -> Verdict {
    let fixtures = [
        (DatasetKind::Infodengue, synthetic_infodengue(60, true)),
        (DatasetKind::Climate, climate_csv((2024, 2, 1), 29, 3106200)),
        (DatasetKind::Episcanner, episcanner_csv()),
        (DatasetKind::Ovitrap, ovitrap_csv()),
    ];
    let mut notes = Vec::new();
    for (kind, csv) in &fixtures {
        let store = Datastore::in_memory();
        let first = store.ingest(*kind, Cursor::new(csv.clone()), &IngestOptions::default()).unwrap();
        let source = parse_csv(csv);
        ensure(first.inserted == source.len() && first.rejected == 0, || format!("{kind}: {first:?}"))?;
        let items = all_items(&store, *kind);
        let mut used = vec![false; items.len()];
        for (i, row) in source.iter().enumerate() {
            let hit = items.iter().enumerate().position(|(j, item)| {
                !used[j] && row.iter().all(|(col, v)| same_field(v, item.get(col)))
            });
            let j = hit.ok_or_else(|| format!("{kind}: source row {i} not found field-for-field"))?;
            used[j] = true;
        }
        let second = store.ingest(*kind, Cursor::new(csv.clone()), &IngestOptions::default()).unwrap();
        ensure(second.inserted == 0 && second.updated == source.len(), || format!("{kind} again: {second:?}"))?;
        ensure(all_items(&store, *kind) == items, || format!("{kind}: second ingest changed records"))?;
        notes.push(format!("{kind} {}", source.len()));
    }

    let weeks = case_weeks((2024, 1, 7), 3, &MG_TOWNS[..1], "dengue", |w, _| 10 + w as u64);
    let csv = infodengue_csv(&weeks);
    let nivel = arbohub_testkit::fixtures::INFODENGUE_HEADER.split(',').position(|c| c == "nivel").unwrap();
    let mut lines: Vec<String> = csv.lines().map(String::from).collect();
    let mut cells: Vec<&str> = lines[2].split(',').collect();
    cells[nivel] = "7";
    lines[2] = cells.join(",");
    let store = Datastore::in_memory();
    let r = store
        .ingest(DatasetKind::Infodengue, Cursor::new(lines.join("\n")), &IngestOptions::default())
        .unwrap();
    ensure(r.inserted == 2 && r.rejected == 1, || format!("nivel file: {r:?}"))?;
    let why = &r.rejections[0];
    ensure(why.line == 3 && why.reason.contains("nivel"), || format!("rejection {why:?}"))?;
    Ok(format!(
        "field equality for {}; re-ingest idempotent; line {} rejected ({}), 2 rows kept",
        notes.join(", "),
        why.line,
        why.reason
    ))
}

async fn parity() -> Verdict {
    let hub = common::start().await;
    let observed = common::mg_observed(|w, t| ((w * 29 + t * 17) % 41) as u64);
    hub.ingest(DatasetKind::Infodengue, &observed);
    let client = hub.authed();
    let model = commands::register_model(&client, &model_doc()).await.map_err(|e| e.to_string())?;
    let dates = week_starts((2024, 1, 7), 8);
    let fixtures: Vec<Vec<(String, f64, f64, f64)>> = vec![
        dates.iter().map(|(d, _)| (d.clone(), 40.0, 30.0, 50.0)).collect(),
        dates
            .iter()
            .enumerate()
            .map(|(i, (d, _))| {
                let p = 35.0 + 12.0 * (i as f64 * 0.9).cos();
                (d.clone(), p, p - 1.5 - i as f64, p + 0.25 + 2.0 * i as f64)
            })
            .collect(),
        dates.iter().take(3).map(|(d, _)| (d.clone(), 1e3, 0.0, 2e3)).collect(),
    ];
    let mut worst = 0.0f64;
    for rows in &fixtures {
        let doc: Value = serde_json::from_str(&prediction_json(model.id, COMMIT, "2024-01-01", rows, "MG")).unwrap();
        let id = commands::upload_prediction(&client, &doc).await.map_err(|e| e.to_string())?.id;
        let stored = client.get_json(&format!("api/registry/predictions/{id}"), &[]).await.map_err(|e| e.to_string())?;
        let online: ScoreReport = serde_json::from_value(
            client
                .get_json(&format!("api/registry/predictions/{id}/score"), &[])
                .await
                .map_err(|e| e.to_string())?,
        )
        .map_err(|e| e.to_string())?;
        let file = rows_from_json(&stored.to_string())?;
        let offline = score_offline(&file, observed.as_bytes(), &OfflineOptions::default())
            .map_err(|e| e.to_string())?
            .report;
        for m in Metric::ALL {
            let (a, b) = (offline.scores.get(m).unwrap(), online.scores.get(m).unwrap());
            ensure((a - b).abs() <= 1e-9, || format!("prediction {id} {}: offline {a} online {b}", m.as_str()))?;
            worst = worst.max((a - b).abs());
        }
        let mut a = offline.clone();
        let mut b = online.clone();
        a.scores = Default::default();
        b.scores = Default::default();
        ensure(a == b, || format!("prediction {id}: reports differ beyond scores"))?;
    }
    Ok(format!("{} fixtures, max |Δ| {worst:.1e}", fixtures.len()))
}

fn main() -> ExitCode {
    let rt = tokio::runtime::Runtime::new().expect("runtime");
    let results: Vec<(u32, &str, Verdict)> = vec![
        (1, "CRPS matches numerical integration", crps_oracle_grid()),
        (2, "analytic spot values", analytic_spot_values()),
        (3, "CRPS properties", crps_properties()),
        (4, "validation protocol", rt.block_on(validation_protocol())),
        (5, "pagination invariant", rt.block_on(pagination())),
        (6, "end to end", rt.block_on(end_to_end())),
        (7, "epi-week oracle", epiweek_oracle()),
        (8, "ingestion", ingestion()),
        (9, "offline/online parity", rt.block_on(parity())),
    ];
    let mut unexpected = 0;
    let mut failed = 0;
    for (n, title, verdict) in &results {
        let expected_fail = EXPECTED_FAILURES.contains(n);
        match verdict {
            Ok(detail) => {
                println!("[PASS] {n} {title}: {detail}");
                if expected_fail {
                    println!("       {n} is listed as an expected failure but passed");
                    unexpected += 1;
                }
            }
            Err(detail) => {
                failed += 1;
                let tag = if expected_fail { " (expected)" } else { "" };
                println!("[FAIL] {n} {title}{tag}: {detail}");
                if !expected_fail {
                    unexpected += 1;
                }
            }
        }
    }
    println!(
        "{} passed, {failed} failed, {unexpected} unexpected",
        results.len() - failed
    );
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
