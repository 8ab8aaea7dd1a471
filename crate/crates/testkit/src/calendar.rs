// SPDX-License-Identifier: Apache-2.0

//! Brute-force epidemiological-week enumeration.
//!
//! Walks every day in a range with a hand-rolled Gregorian calendar, and
//! numbers Sunday-to-Saturday weeks by the literal rule: a week is week 1 of
//! year Y when its Saturday is the first Saturday of January of Y that falls on
//! day 4 or later. Every other week is the previous week plus one.

/// A civil date as (year, month, day).
pub type Ymd = (i32, u32, u32);

pub fn is_leap(y: i32) -> bool {
    (y % 4 == 0 && y % 100 != 0) || y % 400 == 0
}

pub fn days_in_month(y: i32, m: u32) -> u32 {
    match m {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 if is_leap(y) => 29,
        2 => 28,
        _ => panic!("month {m}"),
    }
}

pub fn next_day((y, m, d): Ymd) -> Ymd {
    if d < days_in_month(y, m) {
        (y, m, d + 1)
    } else if m < 12 {
        (y, m + 1, 1)
    } else {
        (y + 1, 1, 1)
    }
}

/// Zeller's congruence. 0 = Sunday .. 6 = Saturday.
pub fn weekday((y, m, d): Ymd) -> u32 {
    let (yy, mm) = if m < 3 { (y - 1, m + 12) } else { (y, m) };
    let k = yy.rem_euclid(100);
    let j = yy.div_euclid(100);
    let h = (d as i32 + (13 * (mm as i32 + 1)) / 5 + k + k / 4 + j / 4 + 5 * j).rem_euclid(7);
    // Zeller: 0 = Saturday, 1 = Sunday, ...
    ((h + 6) % 7) as u32
}

pub fn iso(date: Ymd) -> String {
    format!("{:04}-{:02}-{:02}", date.0, date.1, date.2)
}

/// One labelled day.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelledDay {
    pub date: Ymd,
    pub epi_year: i32,
    pub epi_week: u32,
}

impl LabelledDay {
    pub fn code(&self) -> u32 {
        self.epi_year as u32 * 100 + self.epi_week
    }
}

/// Labels every day from Jan 1 of `first_year` to Dec 31 of `last_year`.
///
/// Enumeration starts two years early so the first requested day already
/// sits inside a week whose number was reached by counting.
pub fn label_days(first_year: i32, last_year: i32) -> Vec<LabelledDay> {
    let mut days = Vec::new();
    let mut cur: Ymd = (first_year - 2, 1, 1);
    let end: Ymd = (last_year + 1, 12, 31);
    while cur <= end {
        days.push(cur);
        cur = next_day(cur);
    }

    let mut out = Vec::new();
    let mut state: Option<(i32, u32)> = None;
    let mut i = 0;
    while i + 7 <= days.len() {
        if weekday(days[i]) != 0 {
            i += 1;
            continue;
        }
        let saturday = days[i + 6];
        debug_assert_eq!(weekday(saturday), 6);
        let (sy, sm, sd) = saturday;
        let starts_year = sm == 1 && sd >= 4 && sd <= 10;
        state = match state {
            _ if starts_year => Some((sy, 1)),
            Some((y, w)) => Some((y, w + 1)),
            None => None,
        };
        if let Some((y, w)) = state {
            for &date in &days[i..i + 7] {
                if date.0 >= first_year && date.0 <= last_year {
                    out.push(LabelledDay {
                        date,
                        epi_year: y,
                        epi_week: w,
                    });
                }
            }
        }
        i += 7;
    }
    out
}

/// The Sunday opening each epidemiological week, in order, starting with the
/// week containing `from`.
pub fn week_starts(from: Ymd, count: usize) -> Vec<(String, u32)> {
    let days = label_days(from.0 - 1, from.0 + 2 + (count / 52) as i32);
    let pos = days
        .iter()
        .position(|d| d.date == from)
        .expect("date inside enumerated range");
    let first_sunday = (0..=pos)
        .rev()
        .find(|&i| weekday(days[i].date) == 0)
        .expect("a Sunday precedes every labelled day");
    days[first_sunday..]
        .iter()
        .filter(|d| weekday(d.date) == 0)
        .take(count)
        .map(|d| (iso(d.date), d.code()))
        .collect()
}
