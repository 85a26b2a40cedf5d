//! Synthetic logs from declared per-bin counts.
//!
//! A replay fixture bypasses simulation: it states how many interest,
//! neutral and other videos a user was shown in each bin, and the replay
//! writes a log with exactly those counts so the analysis can be checked
//! against known totals and known drift.
//!
//! ```toml
//! name = "flatearth-totals"
//! topic = "flatearth"
//! n_bins = 30
//! stance_split = 0.5
//!
//! [totals]            # or [[counts]] per bin, or [shares]
//! interest = 472
//! neutral = 2675
//! other = 6822
//! ```

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::agent::{
    write_log, FeedSource, Gender, Group, InteractionEvent, SessionSchedule, UserProfile,
};
use crate::analytics::report::{analyze_experiment, AnalysisOptions, CohortReport, CohortSpec};
use crate::analytics::AnalyticsError;
use crate::catalog::{Stance, TopicId};
use crate::experiment::{ExperimentError, Manifest, ManifestUser};
use crate::predictor::{Action, Annotation};

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("invalid replay fixture: {0}")]
    Invalid(String),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Log(#[from] crate::agent::LogError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinSpec {
    pub interest: u64,
    pub neutral: u64,
    pub other: u64,
}

/// Per-bin shares moving linearly from the first to the last bin.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SharesSpec {
    pub events_per_bin: u64,
    /// `[first, last]`
    pub interest: [f64; 2],
    pub neutral: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplayFixture {
    pub name: String,
    pub topic: TopicId,
    #[serde(default = "default_group")]
    pub group: Group,
    #[serde(default = "default_stance")]
    pub stance: Stance,
    #[serde(default = "default_split")]
    pub stance_split: f64,
    #[serde(default)]
    pub n_bins: Option<usize>,
    #[serde(default)]
    pub counts: Option<Vec<BinSpec>>,
    #[serde(default)]
    pub totals: Option<BinSpec>,
    #[serde(default)]
    pub shares: Option<SharesSpec>,
}

fn default_group() -> Group {
    Group::G2
}

fn default_stance() -> Stance {
    Stance::Support
}

fn default_split() -> f64 {
    0.5
}

/// Splits `total` over `n` parts as evenly as possible, remainder first.
pub fn spread_evenly(total: u64, n: usize) -> Vec<u64> {
    let base = total / n as u64;
    let rem = (total % n as u64) as usize;
    (0..n).map(|i| base + u64::from(i < rem)).collect()
}

/// Rounds nonnegative shares of `total` to integers summing to `total`,
/// handing leftover units to the largest fractional parts (earliest first
/// on ties).
pub fn largest_remainder(total: u64, shares: &[f64]) -> Vec<u64> {
    let raw: Vec<f64> = shares.iter().map(|s| s * total as f64).collect();
    let mut out: Vec<u64> = raw.iter().map(|r| r.floor() as u64).collect();
    let assigned: u64 = out.iter().sum();
    let mut order: Vec<usize> = (0..shares.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = raw[a] - raw[a].floor();
        let fb = raw[b] - raw[b].floor();
        fb.partial_cmp(&fa)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned) as usize) {
        out[i] += 1;
    }
    out
}

impl ReplayFixture {
    pub fn from_toml_str(text: &str) -> Result<Self, ReplayError> {
        toml::from_str(text).map_err(|e| ReplayError::Invalid(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ReplayError> {
        Self::from_toml_str(&fs::read_to_string(path)?)
    }

    fn profile(&self) -> Result<UserProfile, ReplayError> {
        let stance_set: BTreeSet<Stance> = match self.group {
            Group::G3 => [Stance::Support, Stance::Oppose].into_iter().collect(),
            _ => [self.stance].into_iter().collect(),
        };
        let p = UserProfile {
            user_id: format!("replay-{}-01", self.topic),
            group: self.group,
            topic: self.topic,
            stance_set,
            age_bracket: "18-24".into(),
            gender: Gender::F,
        };
        p.validate().map_err(ReplayError::Invalid)?;
        Ok(p)
    }

    /// Per-bin counts declared by the fixture.
    pub fn bins(&self) -> Result<Vec<BinSpec>, ReplayError> {
        if !self
            .name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
            || self.name.is_empty()
        {
            return Err(ReplayError::Invalid(
                "name must be nonempty [A-Za-z0-9_-]".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.stance_split) {
            return Err(ReplayError::Invalid(
                "stance_split must be in [0, 1]".into(),
            ));
        }
        let bins = match (&self.counts, &self.totals, &self.shares) {
            (Some(c), None, None) => {
                if self.n_bins.is_some_and(|n| n != c.len()) {
                    return Err(ReplayError::Invalid(
                        "n_bins disagrees with the number of [[counts]]".into(),
                    ));
                }
                c.clone()
            }
            (None, Some(t), None) => {
                let n = self
                    .n_bins
                    .ok_or_else(|| ReplayError::Invalid("[totals] needs n_bins".into()))?;
                if n == 0 {
                    return Err(ReplayError::Invalid("n_bins must be positive".into()));
                }
                let (i, ne, o) = (
                    spread_evenly(t.interest, n),
                    spread_evenly(t.neutral, n),
                    spread_evenly(t.other, n),
                );
                (0..n)
                    .map(|b| BinSpec {
                        interest: i[b],
                        neutral: ne[b],
                        other: o[b],
                    })
                    .collect()
            }
            (None, None, Some(s)) => {
                let n = self
                    .n_bins
                    .ok_or_else(|| ReplayError::Invalid("[shares] needs n_bins".into()))?;
                if n == 0 {
                    return Err(ReplayError::Invalid("n_bins must be positive".into()));
                }
                let mut out = Vec::with_capacity(n);
                for b in 0..n {
                    let x = if n > 1 {
                        b as f64 / (n - 1) as f64
                    } else {
                        0.0
                    };
                    let i = s.interest[0] + (s.interest[1] - s.interest[0]) * x;
                    let ne = s.neutral[0] + (s.neutral[1] - s.neutral[0]) * x;
                    let o = 1.0 - i - ne;
                    if i < 0.0 || ne < 0.0 || o < -1e-9 {
                        return Err(ReplayError::Invalid(format!(
                            "bin {b}: shares leave [0, 1]"
                        )));
                    }
                    let r = largest_remainder(s.events_per_bin, &[i, ne, o.max(0.0)]);
                    out.push(BinSpec {
                        interest: r[0],
                        neutral: r[1],
                        other: r[2],
                    });
                }
                out
            }
            _ => {
                return Err(ReplayError::Invalid(
                    "exactly one of [[counts]], [totals] or [shares] is required".into(),
                ))
            }
        };
        if bins.is_empty() || bins.iter().all(|b| b.interest + b.neutral + b.other == 0) {
            return Err(ReplayError::Invalid("fixture declares no events".into()));
        }
        Ok(bins)
    }

    /// The synthetic log: events spaced evenly through each 30-minute bin.
    pub fn events(&self) -> Result<Vec<InteractionEvent>, ReplayError> {
        let bins = self.bins()?;
        let profile = self.profile()?;
        let schedule = SessionSchedule::default();
        let mut events = Vec::new();
        for (b, spec) in bins.iter().enumerate() {
            let day = (b / 2) as u32 + 1;
            let bin_start_ms = schedule.session_start_ms(day) + (b % 2) as u64 * 1_800_000;
            let support = (spec.interest as f64 * self.stance_split).round() as u64;
            let mut items: Vec<Annotation> = Vec::new();
            items.extend((0..support).map(|_| Annotation::interest(Stance::Support)));
            items.extend((support..spec.interest).map(|_| Annotation::interest(Stance::Oppose)));
            items.extend((0..spec.neutral).map(|_| Annotation::neutral()));
            items.extend((0..spec.other).map(|_| Annotation::other()));
            let n = items.len() as u64;
            if n > 1_800_000 {
                return Err(ReplayError::Invalid(format!(
                    "bin {b}: more than one event per millisecond"
                )));
            }
            let step_ms = if n > 0 { 1_800_000 / n } else { 0 };
            for (j, a) in items.into_iter().enumerate() {
                let watch = a.topic_class() != crate::predictor::TopicClass::Other;
                events.push(InteractionEvent {
                    virtual_time_s: (bin_start_ms + j as u64 * step_ms) as f64 / 1000.0,
                    session_day: day,
                    user_id: profile.user_id.clone(),
                    video_id: format!("r{b:03}-{j:05}"),
                    feed_source: FeedSource::Foryou,
                    annotation: a,
                    action: if watch {
                        Action::WatchLikeBookmark
                    } else {
                        Action::Skip
                    },
                    watch_duration_s: if watch {
                        step_ms.max(1) as f64 / 1000.0
                    } else {
                        1.0
                    },
                });
            }
        }
        Ok(events)
    }
}

/// Writes `<out_root>/<name>/` with a manifest and the synthetic log, then
/// analyzes it as cohort `all` and emits the report.
pub fn run_replay(
    fixture: &ReplayFixture,
    out_root: &Path,
) -> Result<(PathBuf, CohortReport), ReplayError> {
    let events = fixture.events()?;
    let profile = fixture.profile()?;
    let n_bins = fixture.bins()?.len();
    let dir = out_root.join(&fixture.name);
    fs::create_dir_all(&dir)?;
    write_log(&Manifest::log_path(&dir, &profile.user_id), &events)?;
    Manifest {
        experiment_name: fixture.name.clone(),
        master_seed: 0,
        session_budget_s: 3600.0,
        bin_width_s: 1800.0,
        users: vec![ManifestUser {
            profile,
            days: n_bins.div_ceil(2) as u32,
            predictor_failures: 0,
        }],
    }
    .save(&dir)?;
    let report = analyze_experiment(&dir, &CohortSpec::default(), &AnalysisOptions::default())?;
    crate::analytics::report::emit_report(
        &dir.join(crate::analytics::report::REPORT_DIR),
        &report,
    )?;
    Ok((dir, report))
}
