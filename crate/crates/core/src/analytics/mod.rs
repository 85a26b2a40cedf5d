//! Drift analytics over interaction logs.
//!
//! Events are binned into 30-minute in-session intervals, counts are summed
//! across a cohort, and three normalized ratios are computed per bin:
//!
//! * preference-aligned: `(interest + neutral) / (interest + neutral + other)`
//! * polarisation-topic: `(interest - neutral) / (interest + neutral)`
//! * polarisation-stance: `(support - oppose) / (support + oppose)`
//!
//! Ratios are always taken on summed counts, never averaged across users.

mod hashtags;
mod mann_whitney;
mod regression;
pub mod report;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::agent::{FeedSource, InteractionEvent, LogError, SessionSchedule};
use crate::catalog::Stance;
use crate::predictor::TopicClass;

pub use hashtags::{hashtag_popularity, TopicHashtags, DEFAULT_BLOCKLIST};
pub use mann_whitney::{
    mann_whitney_u, mann_whitney_u_with, UMethod, UMode, UTestResult, EXACT_AUTO_MAX,
    EXACT_MAX_TOTAL,
};
pub use regression::{fit_drift, fit_series, RegressionFit};

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("events for {user} are not sorted by time (line {index})")]
    Unsorted { user: String, index: usize },
    #[error("event for {user} at {time_s} s precedes the day {day} session")]
    OutsideSession { user: String, day: u32, time_s: f64 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("empty sample")]
    EmptySample,
    #[error("exact test limited to {max} observations, got {n}")]
    TooLarge { n: usize, max: usize },
    #[error("cohort `{0}` matches no users with logs")]
    CohortEmpty(String),
    #[error("invalid cohort spec: {0}")]
    InvalidCohort(String),
    #[error("invalid experiment directory: {0}")]
    InvalidExperiment(String),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct BinCounts {
    pub bin_index: usize,
    pub n_interest: u64,
    pub n_neutral: u64,
    pub n_other: u64,
    pub n_support: u64,
    pub n_oppose: u64,
}

impl BinCounts {
    pub fn empty(bin_index: usize) -> Self {
        Self {
            bin_index,
            ..Self::default()
        }
    }

    pub fn total(&self) -> u64 {
        self.n_interest + self.n_neutral + self.n_other
    }

    pub fn add(&mut self, other: &BinCounts) {
        self.n_interest += other.n_interest;
        self.n_neutral += other.n_neutral;
        self.n_other += other.n_other;
        self.n_support += other.n_support;
        self.n_oppose += other.n_oppose;
    }

    fn record(&mut self, class: TopicClass, stance: Stance) {
        match class {
            TopicClass::Interest => {
                self.n_interest += 1;
                match stance {
                    Stance::Support => self.n_support += 1,
                    Stance::Oppose => self.n_oppose += 1,
                    Stance::None => {}
                }
            }
            TopicClass::Neutral => self.n_neutral += 1,
            TopicClass::Other => self.n_other += 1,
        }
    }
}

/// How in-session time maps to bins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinningConfig {
    pub bin_width_s: f64,
    pub session_budget_s: f64,
    pub schedule: SessionSchedule,
}

impl Default for BinningConfig {
    fn default() -> Self {
        Self {
            bin_width_s: 1800.0,
            session_budget_s: 3600.0,
            schedule: SessionSchedule::default(),
        }
    }
}

impl BinningConfig {
    pub fn bins_per_session(&self) -> usize {
        (self.session_budget_s / self.bin_width_s).ceil().max(1.0) as usize
    }

    /// Bin of an event `in_session_s` into the session of interaction day
    /// `day` (1-based). Events past the budget land in the last bin.
    pub fn bin_of(&self, day: u32, in_session_s: f64) -> usize {
        let per = self.bins_per_session();
        let within = ((in_session_s / self.bin_width_s).floor() as usize).min(per - 1);
        (day as usize - 1) * per + within
    }
}

/// Per-bin counts of For You events, dense from bin 0 to the last bin seen.
/// Seed-phase (search) events are ignored. Each user's events must be in
/// time order.
pub fn bin_events(
    events: &[InteractionEvent],
    config: &BinningConfig,
) -> Result<Vec<BinCounts>, AnalyticsError> {
    let mut last: HashMap<&str, f64> = HashMap::new();
    let mut bins: Vec<BinCounts> = Vec::new();
    for (i, e) in events.iter().enumerate() {
        let prev = last.entry(e.user_id.as_str()).or_insert(f64::NEG_INFINITY);
        if e.virtual_time_s < *prev {
            return Err(AnalyticsError::Unsorted {
                user: e.user_id.clone(),
                index: i + 1,
            });
        }
        *prev = e.virtual_time_s;
        if e.feed_source != FeedSource::Foryou {
            continue;
        }
        let in_session = e.virtual_time_s - config.schedule.session_start_s(e.session_day);
        if e.session_day == 0 || in_session < 0.0 {
            return Err(AnalyticsError::OutsideSession {
                user: e.user_id.clone(),
                day: e.session_day,
                time_s: e.virtual_time_s,
            });
        }
        let b = config.bin_of(e.session_day, in_session);
        if bins.len() <= b {
            let start = bins.len();
            bins.extend((start..=b).map(BinCounts::empty));
        }
        bins[b].record(e.annotation.topic_class(), e.annotation.stance());
    }
    Ok(bins)
}

/// Elementwise sum; shorter series are padded with empty bins.
pub fn aggregate_users(per_user: &[Vec<BinCounts>]) -> Vec<BinCounts> {
    let len = per_user.iter().map(Vec::len).max().unwrap_or(0);
    let mut out: Vec<BinCounts> = (0..len).map(BinCounts::empty).collect();
    for series in per_user {
        for (o, b) in out.iter_mut().zip(series) {
            o.add(b);
        }
    }
    out
}

pub fn totals(bins: &[BinCounts]) -> BinCounts {
    let mut t = BinCounts::empty(0);
    for b in bins {
        t.add(b);
    }
    t
}

fn normalized(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}

pub fn preference_aligned(b: &BinCounts) -> Option<f64> {
    let aligned = (b.n_interest + b.n_neutral) as f64;
    normalized(aligned, aligned + b.n_other as f64)
}

pub fn polarisation_topic(b: &BinCounts) -> Option<f64> {
    normalized(
        b.n_interest as f64 - b.n_neutral as f64,
        (b.n_interest + b.n_neutral) as f64,
    )
}

pub fn polarisation_stance(b: &BinCounts) -> Option<f64> {
    normalized(
        b.n_support as f64 - b.n_oppose as f64,
        (b.n_support + b.n_oppose) as f64,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    PreferenceAligned,
    PolarisationTopic,
    PolarisationStance,
}

impl Metric {
    pub const ALL: [Metric; 3] = [
        Metric::PreferenceAligned,
        Metric::PolarisationTopic,
        Metric::PolarisationStance,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::PreferenceAligned => "preference_aligned",
            Metric::PolarisationTopic => "polarisation_topic",
            Metric::PolarisationStance => "polarisation_stance",
        }
    }

    pub fn value(self, b: &BinCounts) -> Option<f64> {
        match self {
            Metric::PreferenceAligned => preference_aligned(b),
            Metric::PolarisationTopic => polarisation_topic(b),
            Metric::PolarisationStance => polarisation_stance(b),
        }
    }

    /// Value range, for plotting.
    pub fn range(self) -> (f64, f64) {
        match self {
            Metric::PreferenceAligned => (0.0, 1.0),
            _ => (-1.0, 1.0),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown metric `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftSeries {
    pub metric: Metric,
    pub values: Vec<Option<f64>>,
    pub fit: Option<RegressionFit>,
    /// Ratio on the totals over all bins.
    pub overall: Option<f64>,
    pub n_users: usize,
}

pub fn drift_series(metric: Metric, bins: &[BinCounts], n_users: usize) -> DriftSeries {
    let values: Vec<Option<f64>> = bins.iter().map(|b| metric.value(b)).collect();
    DriftSeries {
        metric,
        fit: fit_series(&values).ok(),
        overall: metric.value(&totals(bins)),
        values,
        n_users,
    }
}

/// Sample construction for a significance test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TestPairing {
    /// Defined per-bin values of a metric, first half of the bins against
    /// the second half.
    HalfSplit(Metric),
    /// Per-bin support counts against per-bin oppose counts.
    StanceCounts,
    /// Per-bin interest counts of support-seeded users against those of
    /// oppose-seeded users.
    SeededStanceCohorts,
}

impl TestPairing {
    pub fn name(&self) -> String {
        match self {
            TestPairing::HalfSplit(m) => format!("half_split_{m}"),
            TestPairing::StanceCounts => "stance_counts".into(),
            TestPairing::SeededStanceCohorts => "seeded_stance_cohorts".into(),
        }
    }
}

/// First-half vs second-half test on a metric's defined per-bin values.
pub fn half_split_test(bins: &[BinCounts], metric: Metric) -> Result<UTestResult, AnalyticsError> {
    let mid = bins.len() / 2;
    let pick = |bs: &[BinCounts]| {
        bs.iter()
            .filter_map(|b| metric.value(b))
            .collect::<Vec<f64>>()
    };
    mann_whitney_u(&pick(&bins[..mid]), &pick(&bins[mid..]))
}

pub fn stance_counts_test(bins: &[BinCounts]) -> Result<UTestResult, AnalyticsError> {
    let s: Vec<f64> = bins.iter().map(|b| b.n_support as f64).collect();
    let o: Vec<f64> = bins.iter().map(|b| b.n_oppose as f64).collect();
    mann_whitney_u(&s, &o)
}

pub fn seeded_stance_test(
    support_seeded: &[BinCounts],
    oppose_seeded: &[BinCounts],
) -> Result<UTestResult, AnalyticsError> {
    let s: Vec<f64> = support_seeded.iter().map(|b| b.n_interest as f64).collect();
    let o: Vec<f64> = oppose_seeded.iter().map(|b| b.n_interest as f64).collect();
    mann_whitney_u(&s, &o)
}
