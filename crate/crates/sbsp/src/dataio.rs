//! Data containers, CSV ingestion, and sufficient statistics.
//!
//! Two input shapes are supported:
//!
//! * **per-user long CSV** (`user_id,day,count` header) describing daily
//!   trigger counts over an observation window of `d0` days, loaded into an
//!   [`ActivityPanel`];
//! * **aggregate CSV** (`day,new_users[,total_triggers]` header) describing
//!   only daily totals, loaded into a [`FirstTriggerSeries`].
//!
//! Model fitting and posterior construction consume a compact
//! [`SufficientStats`] extracted from either container.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Observation model for per-user daily activity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    /// Bernoulli daily activity: a user either triggers on a day or not.
    Be,
    /// Truncated-geometric first trigger: only the day of the first trigger
    /// is modeled and each user contributes exactly once.
    Tg,
    /// Negative-binomial daily counts with shared dispersion `r`.
    Nb,
}

impl Model {
    /// Stable lowercase name used in CLI arguments and JSON reports.
    pub fn name(&self) -> &'static str {
        match self {
            Model::Be => "be",
            Model::Tg => "tg",
            Model::Nb => "nb",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "be" => Ok(Model::Be),
            "tg" => Ok(Model::Tg),
            "nb" => Ok(Model::Nb),
            other => Err(Error::invalid(format!(
                "unknown model '{other}' (expected be, tg, or nb)"
            ))),
        }
    }
}

/// One user's daily trigger counts over the observation window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserActivity {
    pub id: String,
    /// `counts[d - 1]` is the trigger count on day `d`, `1 <= d <= d0`.
    pub counts: Vec<u32>,
}

impl UserActivity {
    /// Day of the first positive count, if any.
    pub fn first_trigger_day(&self) -> Option<u32> {
        self.counts.iter().position(|&c| c > 0).map(|i| i as u32 + 1)
    }

    /// Number of days with a positive count.
    pub fn active_days(&self) -> u32 {
        self.counts.iter().filter(|&&c| c > 0).count() as u32
    }

    /// Sum of all counts.
    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }
}

/// Per-user daily counts over days `1..=d0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityPanel {
    pub d0: u32,
    pub users: Vec<UserActivity>,
}

impl ActivityPanel {
    /// Number of observed users.
    pub fn n_users(&self) -> u64 {
        self.users.len() as u64
    }

    /// Sum of all counts across users and days.
    pub fn total_triggers(&self) -> u64 {
        self.users.iter().map(UserActivity::total).sum()
    }

    /// Checks structural invariants: count vectors span exactly `d0` days
    /// and every user has at least one positive count.
    pub fn validate(&self) -> Result<()> {
        for user in &self.users {
            if user.counts.len() != self.d0 as usize {
                return Err(Error::data(format!(
                    "user '{}' has {} days of counts, expected {}",
                    user.id,
                    user.counts.len(),
                    self.d0
                )));
            }
            if user.counts.iter().all(|&c| c == 0) {
                return Err(Error::data(format!(
                    "user '{}' has no triggers inside the observation window",
                    user.id
                )));
            }
        }
        Ok(())
    }

    /// Restricts the panel to the first `d0` days, dropping users whose
    /// first trigger falls outside the shortened window.
    pub fn restrict(&self, d0: u32) -> Result<ActivityPanel> {
        if d0 == 0 || d0 > self.d0 {
            return Err(Error::invalid(format!(
                "cannot restrict a {}-day panel to {} days",
                self.d0, d0
            )));
        }
        let users = self
            .users
            .iter()
            .filter_map(|u| {
                let counts: Vec<u32> = u.counts[..d0 as usize].to_vec();
                if counts.iter().any(|&c| c > 0) {
                    Some(UserActivity {
                        id: u.id.clone(),
                        counts,
                    })
                } else {
                    None
                }
            })
            .collect();
        Ok(ActivityPanel { d0, users })
    }

    /// First-trigger day of every user, in stored order.
    pub fn first_trigger_days(&self) -> Vec<u32> {
        self.users
            .iter()
            .filter_map(UserActivity::first_trigger_day)
            .collect()
    }
}

/// Daily aggregate view: how many new users appeared each day, and
/// optionally how many triggers occurred each day in total.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FirstTriggerSeries {
    /// `new_users_per_day[d - 1]` users triggered for the first time on day `d`.
    pub new_users_per_day: Vec<u64>,
    /// Optional matching daily trigger totals.
    pub total_triggers_per_day: Option<Vec<u64>>,
}

impl FirstTriggerSeries {
    /// Length of the observation window.
    pub fn d0(&self) -> u32 {
        self.new_users_per_day.len() as u32
    }

    /// Total number of users observed by the end of the window.
    pub fn n_users(&self) -> u64 {
        self.new_users_per_day.iter().sum()
    }

    /// Users observed within the first `d0` days.
    pub fn n_users_through(&self, d0: u32) -> u64 {
        self.new_users_per_day
            .iter()
            .take(d0 as usize)
            .sum()
    }
}

/// Aggregate statistics sufficient for likelihood evaluation and posterior
/// construction.
///
/// `per_user` histograms collapse users by their per-user statistic: active
/// days for [`Model::Be`], first-trigger day for [`Model::Tg`], and total
/// triggers for [`Model::Nb`]. For [`Model::Nb`], `daily_counts` additionally
/// histograms every positive single-day count, which the likelihood needs on
/// top of per-user totals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SufficientStats {
    pub model: Model,
    pub d0: u32,
    pub n_users: u64,
    /// Per-user statistic -> number of users with that value.
    pub per_user: BTreeMap<u64, u64>,
    /// Positive single-day count -> number of (user, day) cells with that
    /// count. Empty unless `model` is [`Model::Nb`].
    pub daily_counts: BTreeMap<u64, u64>,
    /// Total triggers across the panel, when the input carried counts.
    pub total_triggers: Option<u64>,
}

impl SufficientStats {
    /// Total triggers recomputed from the histograms, if available.
    pub fn n_users_check(&self) -> u64 {
        self.per_user.values().sum()
    }
}

/// Side information produced while extracting statistics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StatsMeta {
    /// Number of users whose statistic was clamped to stay inside the
    /// window (never expected for well-formed panels).
    pub clamped_users: usize,
}

/// Result of parsing a per-user CSV.
#[derive(Debug, Clone)]
pub struct ParsedPanel {
    pub panel: ActivityPanel,
    /// Users present in the file whose counts were all zero and were
    /// therefore dropped.
    pub dropped_users: usize,
}

fn parse_field<T: FromStr>(field: &str, line: usize, what: &str) -> Result<T> {
    field.trim().parse::<T>().map_err(|_| Error::Parse {
        line,
        message: format!("invalid {what} '{}'", field.trim()),
    })
}

/// Parses `user_id,day,count` rows into a panel.
///
/// Days are 1-based. When `declared_d0` is given it fixes the window length
/// and any row with a larger day is rejected; otherwise the window is the
/// maximum day present. Duplicate `(user, day)` rows are summed. Users whose
/// counts are all zero are dropped and counted in
/// [`ParsedPanel::dropped_users`].
pub fn parse_long_csv(text: &str, declared_d0: Option<u32>) -> Result<ParsedPanel> {
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((i, l)) if l.trim().is_empty() => {
                if i > 0 {
                    return Err(Error::Parse {
                        line: i + 1,
                        message: "blank line before header".into(),
                    });
                }
            }
            Some((i, l)) => break (i, l),
            None => {
                return Err(Error::Parse {
                    line: 1,
                    message: "empty input, expected 'user_id,day,count' header".into(),
                })
            }
        }
    };
    if header.1.trim() != "user_id,day,count" {
        return Err(Error::Parse {
            line: header.0 + 1,
            message: format!(
                "expected header 'user_id,day,count', found '{}'",
                header.1.trim()
            ),
        });
    }

    let mut per_user: BTreeMap<String, BTreeMap<u32, u64>> = BTreeMap::new();
    let mut max_day = 0u32;
    for (i, raw) in lines {
        let line_no = i + 1;
        let row = raw.trim();
        if row.is_empty() {
            continue;
        }
        let mut fields = row.split(',');
        let (id, day, count) = match (fields.next(), fields.next(), fields.next(), fields.next()) {
            (Some(a), Some(b), Some(c), None) => (a.trim(), b, c),
            _ => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected 3 comma-separated fields, found '{row}'"),
                })
            }
        };
        if id.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                message: "empty user_id".into(),
            });
        }
        let day: u32 = parse_field(day, line_no, "day")?;
        let count: u64 = parse_field(count, line_no, "count")?;
        if day == 0 {
            return Err(Error::Parse {
                line: line_no,
                message: "day must be >= 1".into(),
            });
        }
        if let Some(d0) = declared_d0 {
            if day > d0 {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("day {day} exceeds declared window of {d0} days"),
                });
            }
        }
        if count > u32::MAX as u64 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("count {count} too large"),
            });
        }
        max_day = max_day.max(day);
        let cell = per_user.entry(id.to_string()).or_default().entry(day).or_insert(0);
        *cell = cell.checked_add(count).ok_or_else(|| Error::Parse {
            line: line_no,
            message: format!("accumulated count for user '{id}' day {day} overflows"),
        })?;
        if *cell > u32::MAX as u64 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("accumulated count for user '{id}' day {day} too large"),
            });
        }
    }

    let d0 = declared_d0.unwrap_or(max_day);
    let mut users = Vec::with_capacity(per_user.len());
    let mut dropped = 0usize;
    for (id, days) in per_user {
        let mut counts = vec![0u32; d0 as usize];
        for (day, count) in days {
            counts[day as usize - 1] = count as u32;
        }
        if counts.iter().any(|&c| c > 0) {
            users.push(UserActivity { id, counts });
        } else {
            dropped += 1;
        }
    }
    Ok(ParsedPanel {
        panel: ActivityPanel { d0, users },
        dropped_users: dropped,
    })
}

/// Parses `day,new_users[,total_triggers]` rows into a series. Days must be
/// contiguous and ascending starting at 1.
pub fn parse_aggregate_csv(text: &str) -> Result<FirstTriggerSeries> {
    let mut lines = text.lines().enumerate();
    let (header_line, header) = lines.next().ok_or_else(|| Error::Parse {
        line: 1,
        message: "empty input, expected 'day,new_users' header".into(),
    })?;
    let with_totals = match header.trim() {
        "day,new_users" => false,
        "day,new_users,total_triggers" => true,
        other => {
            return Err(Error::Parse {
                line: header_line + 1,
                message: format!(
                    "expected header 'day,new_users' or 'day,new_users,total_triggers', found '{other}'"
                ),
            })
        }
    };

    let mut new_users = Vec::new();
    let mut totals = Vec::new();
    for (i, raw) in lines {
        let line_no = i + 1;
        let row = raw.trim();
        if row.is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').collect();
        let expected = if with_totals { 3 } else { 2 };
        if fields.len() != expected {
            return Err(Error::Parse {
                line: line_no,
                message: format!(
                    "expected {expected} comma-separated fields, found '{row}'"
                ),
            });
        }
        let day: u32 = parse_field(fields[0], line_no, "day")?;
        let expected_day = new_users.len() as u32 + 1;
        if day != expected_day {
            return Err(Error::Parse {
                line: line_no,
                message: format!("days must run 1, 2, ... without gaps; expected day {expected_day}, found {day}"),
            });
        }
        new_users.push(parse_field::<u64>(fields[1], line_no, "new_users")?);
        if with_totals {
            totals.push(parse_field::<u64>(fields[2], line_no, "total_triggers")?);
        }
    }
    if new_users.is_empty() {
        return Err(Error::Parse {
            line: 2,
            message: "no data rows".into(),
        });
    }
    Ok(FirstTriggerSeries {
        new_users_per_day: new_users,
        total_triggers_per_day: if with_totals { Some(totals) } else { None },
    })
}

/// Serializes a panel back to the long CSV shape (zero cells omitted).
pub fn panel_to_long_csv(panel: &ActivityPanel) -> String {
    let mut out = String::from("user_id,day,count\n");
    for user in &panel.users {
        for (i, &c) in user.counts.iter().enumerate() {
            if c > 0 {
                out.push_str(&format!("{},{},{}\n", user.id, i + 1, c));
            }
        }
    }
    out
}

/// Serializes a series to the aggregate CSV shape.
pub fn series_to_aggregate_csv(series: &FirstTriggerSeries) -> String {
    let mut out = String::new();
    match &series.total_triggers_per_day {
        Some(totals) => {
            out.push_str("day,new_users,total_triggers\n");
            for (i, (&n, &t)) in series
                .new_users_per_day
                .iter()
                .zip(totals.iter())
                .enumerate()
            {
                out.push_str(&format!("{},{},{}\n", i + 1, n, t));
            }
        }
        None => {
            out.push_str("day,new_users\n");
            for (i, &n) in series.new_users_per_day.iter().enumerate() {
                out.push_str(&format!("{},{}\n", i + 1, n));
            }
        }
    }
    out
}

/// Collapses a panel to the daily aggregate view.
pub fn series_from_panel(panel: &ActivityPanel) -> FirstTriggerSeries {
    let d0 = panel.d0 as usize;
    let mut new_users = vec![0u64; d0];
    let mut totals = vec![0u64; d0];
    for user in &panel.users {
        if let Some(f) = user.first_trigger_day() {
            new_users[f as usize - 1] += 1;
        }
        for (i, &c) in user.counts.iter().enumerate() {
            totals[i] += c as u64;
        }
    }
    FirstTriggerSeries {
        new_users_per_day: new_users,
        total_triggers_per_day: Some(totals),
    }
}

/// Extracts model-specific sufficient statistics from a panel.
pub fn stats_from_panel(panel: &ActivityPanel, model: Model) -> Result<(SufficientStats, StatsMeta)> {
    panel.validate()?;
    let mut per_user = BTreeMap::new();
    let mut daily_counts = BTreeMap::new();
    let meta = StatsMeta::default();
    for user in &panel.users {
        let stat = match model {
            Model::Be => user.active_days() as u64,
            Model::Tg => user
                .first_trigger_day()
                .expect("validated users trigger at least once") as u64,
            Model::Nb => user.total(),
        };
        *per_user.entry(stat).or_insert(0) += 1;
        if model == Model::Nb {
            for &c in &user.counts {
                if c > 0 {
                    *daily_counts.entry(c as u64).or_insert(0) += 1;
                }
            }
        }
    }
    Ok((
        SufficientStats {
            model,
            d0: panel.d0,
            n_users: panel.n_users(),
            per_user,
            daily_counts,
            total_triggers: Some(panel.total_triggers()),
        },
        meta,
    ))
}

/// Builds first-trigger statistics straight from an aggregate series.
///
/// Only [`Model::Tg`] is identified by aggregate data: the per-user
/// statistic is the first-trigger day, which the series records exactly.
pub fn tg_stats_from_series(series: &FirstTriggerSeries) -> SufficientStats {
    let mut per_user = BTreeMap::new();
    for (i, &n) in series.new_users_per_day.iter().enumerate() {
        if n > 0 {
            *per_user.entry(i as u64 + 1).or_insert(0) += n;
        }
    }
    SufficientStats {
        model: Model::Tg,
        d0: series.d0(),
        n_users: series.n_users(),
        per_user,
        daily_counts: BTreeMap::new(),
        total_triggers: series
            .total_triggers_per_day
            .as_ref()
            .map(|t| t.iter().sum()),
    }
}
