//! Cohort selection, the experiment-directory analysis pipeline and report
//! files.
//!
//! Report layout under `<experiment>/report/`:
//!
//! * `<cohort>_<metric>.csv`: `bin,n_interest,n_neutral,n_other,n_support,n_oppose,value`,
//!   one row per bin, `value` empty where the ratio is undefined.
//! * `<cohort>_<metric>.svg`: per-bin points with the fitted line.
//! * `summary.json`: one entry per analyzed cohort with fits, overall
//!   ratios, test results, cohort size and totals.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{
    aggregate_users, bin_events, drift_series, half_split_test, hashtag_popularity,
    seeded_stance_test, stance_counts_test, totals, AnalyticsError, BinCounts, BinningConfig,
    DriftSeries, Metric, TestPairing, TopicHashtags, UTestResult, DEFAULT_BLOCKLIST,
};
use crate::agent::{read_log, Group, InteractionEvent, SessionSchedule, UserProfile};
use crate::catalog::{Catalog, Stance, TopicId};
use crate::experiment::{Manifest, CATALOG_FILE, POPULARITY_FILE};

pub const REPORT_DIR: &str = "report";
pub const SUMMARY_FILE: &str = "summary.json";

/// Filter over user profiles, written `group=G2,topic=us_politics,stance=support`.
/// Every key is optional; `all` (or an empty string) selects everyone.
/// `stance=mixed` selects users seeded with both stances.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CohortSpec {
    pub group: Option<Group>,
    pub topic: Option<TopicId>,
    pub stance: Option<StanceFilter>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StanceFilter {
    Only(Stance),
    Mixed,
}

impl CohortSpec {
    pub fn parse(text: &str) -> Result<Self, AnalyticsError> {
        let mut spec = CohortSpec::default();
        let text = text.trim();
        if text.is_empty() || text.eq_ignore_ascii_case("all") {
            return Ok(spec);
        }
        for part in text.split(',') {
            let (k, v) = part.split_once('=').ok_or_else(|| {
                AnalyticsError::InvalidCohort(format!("`{part}` is not key=value"))
            })?;
            let (k, v) = (k.trim(), v.trim());
            let bad = |m: String| AnalyticsError::InvalidCohort(m);
            match k {
                "group" if spec.group.is_none() => spec.group = Some(v.parse().map_err(bad)?),
                "topic" if spec.topic.is_none() => spec.topic = Some(v.parse().map_err(bad)?),
                "stance" if spec.stance.is_none() => {
                    spec.stance = Some(match v {
                        "mixed" => StanceFilter::Mixed,
                        s => match s.parse().map_err(bad)? {
                            Stance::None => {
                                return Err(bad("stance must be support, oppose or mixed".into()))
                            }
                            st => StanceFilter::Only(st),
                        },
                    })
                }
                "group" | "topic" | "stance" => return Err(bad(format!("`{k}` given twice"))),
                _ => return Err(bad(format!("unknown key `{k}`"))),
            }
        }
        Ok(spec)
    }

    pub fn matches(&self, p: &UserProfile) -> bool {
        self.group.is_none_or(|g| g == p.group)
            && self.topic.is_none_or(|t| t == p.topic)
            && self.stance.is_none_or(|s| match s {
                StanceFilter::Only(st) => p.stance_set.len() == 1 && p.stance_set.contains(&st),
                StanceFilter::Mixed => p.stance_set.len() == 2,
            })
    }

    /// File-name stem, e.g. `g2_us_politics_support`.
    pub fn name(&self) -> String {
        let mut parts = Vec::new();
        if let Some(g) = self.group {
            parts.push(g.as_str().to_lowercase());
        }
        if let Some(t) = self.topic {
            parts.push(t.to_string());
        }
        match self.stance {
            Some(StanceFilter::Only(s)) => parts.push(s.to_string()),
            Some(StanceFilter::Mixed) => parts.push("mixed".into()),
            None => {}
        }
        if parts.is_empty() {
            "all".into()
        } else {
            parts.join("_")
        }
    }
}

impl std::fmt::Display for CohortSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut parts = Vec::new();
        if let Some(g) = self.group {
            parts.push(format!("group={g}"));
        }
        if let Some(t) = self.topic {
            parts.push(format!("topic={t}"));
        }
        match self.stance {
            Some(StanceFilter::Only(s)) => parts.push(format!("stance={s}")),
            Some(StanceFilter::Mixed) => parts.push("stance=mixed".into()),
            None => {}
        }
        if parts.is_empty() {
            f.write_str("all")
        } else {
            f.write_str(&parts.join(","))
        }
    }
}

#[derive(Debug, Clone)]
pub struct AnalysisOptions {
    pub pairings: Vec<TestPairing>,
    pub blocklist: BTreeSet<String>,
    pub top_k: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            pairings: vec![
                TestPairing::HalfSplit(Metric::PreferenceAligned),
                TestPairing::HalfSplit(Metric::PolarisationTopic),
                TestPairing::HalfSplit(Metric::PolarisationStance),
                TestPairing::StanceCounts,
                TestPairing::SeededStanceCohorts,
            ],
            blocklist: DEFAULT_BLOCKLIST.iter().map(|s| s.to_string()).collect(),
            top_k: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum TestOutcome {
    Done(UTestResult),
    Skipped { skipped: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSummary {
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub residual_sse: Option<f64>,
    pub defined_bins: usize,
    pub overall: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohortReport {
    pub cohort: CohortSpec,
    pub users: Vec<String>,
    pub bins: Vec<BinCounts>,
    pub series: Vec<DriftSeries>,
    pub tests: BTreeMap<String, TestOutcome>,
    pub hashtags: Option<BTreeMap<TopicId, TopicHashtags>>,
}

impl CohortReport {
    pub fn totals(&self) -> BinCounts {
        totals(&self.bins)
    }

    pub fn series(&self, metric: Metric) -> &DriftSeries {
        self.series
            .iter()
            .find(|s| s.metric == metric)
            .expect("every metric is computed")
    }

    fn summary_json(&self) -> serde_json::Value {
        let t = self.totals();
        let metrics: BTreeMap<&str, MetricSummary> = self
            .series
            .iter()
            .map(|s| {
                (
                    s.metric.as_str(),
                    MetricSummary {
                        slope: s.fit.map(|f| f.slope),
                        intercept: s.fit.map(|f| f.intercept),
                        residual_sse: s.fit.map(|f| f.residual_sse),
                        defined_bins: s.values.iter().flatten().count(),
                        overall: s.overall,
                    },
                )
            })
            .collect();
        serde_json::json!({
            "cohort": self.cohort.to_string(),
            "n_users": self.users.len(),
            "n_bins": self.bins.len(),
            "totals": {
                "n_interest": t.n_interest,
                "n_neutral": t.n_neutral,
                "n_other": t.n_other,
                "n_support": t.n_support,
                "n_oppose": t.n_oppose,
                "total": t.total(),
            },
            "metrics": metrics,
            "tests": self.tests,
            "hashtags": self.hashtags.as_ref().map(|h| {
                h.iter().map(|(k, v)| (k.to_string(), v)).collect::<BTreeMap<_, _>>()
            }),
        })
    }
}

/// Bins, aggregates and tests one cohort from already-loaded logs. Each
/// user's series is padded to `days × bins-per-session`.
pub fn analyze_users(
    cohort: &CohortSpec,
    users: &[(UserProfile, u32, Vec<InteractionEvent>)],
    binning: &BinningConfig,
    opts: &AnalysisOptions,
    catalog: Option<&Catalog>,
) -> Result<CohortReport, AnalyticsError> {
    let selected: Vec<&(UserProfile, u32, Vec<InteractionEvent>)> =
        users.iter().filter(|(p, _, _)| cohort.matches(p)).collect();
    if selected.is_empty() {
        return Err(AnalyticsError::CohortEmpty(cohort.to_string()));
    }
    let per_session = binning.bins_per_session();
    let mut per_user = Vec::with_capacity(selected.len());
    for (_, days, events) in &selected {
        let mut b = bin_events(events, binning)?;
        let want = *days as usize * per_session;
        while b.len() < want {
            b.push(BinCounts::empty(b.len()));
        }
        per_user.push(b);
    }
    let bins = aggregate_users(&per_user);
    let n = selected.len();
    let series: Vec<DriftSeries> = Metric::ALL
        .iter()
        .map(|&m| drift_series(m, &bins, n))
        .collect();

    let mut tests = BTreeMap::new();
    for pairing in &opts.pairings {
        let r = match pairing {
            TestPairing::HalfSplit(m) => half_split_test(&bins, *m),
            TestPairing::StanceCounts => stance_counts_test(&bins),
            TestPairing::SeededStanceCohorts => {
                let side = |s: Stance| {
                    let v: Vec<Vec<BinCounts>> = selected
                        .iter()
                        .zip(&per_user)
                        .filter(|((p, _, _), _)| {
                            p.stance_set.len() == 1 && p.stance_set.contains(&s)
                        })
                        .map(|(_, b)| b.clone())
                        .collect();
                    aggregate_users(&v)
                };
                let (sup, opp) = (side(Stance::Support), side(Stance::Oppose));
                if sup.is_empty() || opp.is_empty() {
                    Err(AnalyticsError::InsufficientData(
                        "cohort lacks one of the seeded stances".into(),
                    ))
                } else {
                    seeded_stance_test(&sup, &opp)
                }
            }
        };
        let outcome = match r {
            Ok(t) => TestOutcome::Done(t),
            Err(e) => TestOutcome::Skipped {
                skipped: e.to_string(),
            },
        };
        tests.insert(pairing.name(), outcome);
    }

    let hashtags = match catalog {
        Some(c) => {
            let seed = selected
                .iter()
                .flat_map(|(p, _, ev)| ev.iter().map(move |e| (p.topic, e)));
            Some(hashtag_popularity(seed, c, &opts.blocklist, opts.top_k)?)
        }
        None => None,
    };

    Ok(CohortReport {
        cohort: cohort.clone(),
        users: selected.iter().map(|(p, _, _)| p.user_id.clone()).collect(),
        bins,
        series,
        tests,
        hashtags,
    })
}

/// Loads the manifest and logs of an experiment directory and analyzes one
/// cohort. Hashtag popularity is included when the catalog files are present.
pub fn analyze_experiment(
    dir: &Path,
    cohort: &CohortSpec,
    opts: &AnalysisOptions,
) -> Result<CohortReport, AnalyticsError> {
    let manifest =
        Manifest::load(dir).map_err(|e| AnalyticsError::InvalidExperiment(e.to_string()))?;
    let binning = BinningConfig {
        bin_width_s: manifest.bin_width_s,
        session_budget_s: manifest.session_budget_s,
        schedule: SessionSchedule::default(),
    };
    let mut users = Vec::new();
    for u in manifest.users.iter().filter(|u| cohort.matches(&u.profile)) {
        let path = Manifest::log_path(dir, &u.profile.user_id);
        if !path.exists() {
            continue;
        }
        users.push((u.profile.clone(), u.days, read_log(&path)?));
    }
    let catalog_path = dir.join(CATALOG_FILE);
    let catalog = if catalog_path.exists() {
        let pop = dir.join(POPULARITY_FILE);
        Some(
            Catalog::load(&catalog_path, pop.exists().then_some(pop.as_path()))
                .map_err(|e| AnalyticsError::InvalidExperiment(e.to_string()))?,
        )
    } else {
        None
    };
    analyze_users(cohort, &users, &binning, opts, catalog.as_ref())
}

fn fmt_value(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

pub fn series_csv(bins: &[BinCounts], series: &DriftSeries) -> String {
    let mut out = String::from("bin,n_interest,n_neutral,n_other,n_support,n_oppose,value\n");
    for (b, v) in bins.iter().zip(&series.values) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            b.bin_index,
            b.n_interest,
            b.n_neutral,
            b.n_other,
            b.n_support,
            b.n_oppose,
            fmt_value(*v)
        );
    }
    out
}

pub fn series_svg(title: &str, series: &DriftSeries) -> String {
    let (w, h) = (640.0, 360.0);
    let (left, right, top, bottom) = (56.0, 16.0, 32.0, 40.0);
    let (pw, ph) = (w - left - right, h - top - bottom);
    let (lo, hi) = series.metric.range();
    let n = series.values.len().max(2);
    let x = |i: f64| left + pw * i / (n - 1) as f64;
    let y = |v: f64| top + ph * (hi - v.clamp(lo, hi)) / (hi - lo);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        w / 2.0,
        xml_escape(title)
    );
    let _ = writeln!(
        s,
        r#"<line x1="{left}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        top + ph,
        left + pw,
        top + ph
    );
    let _ = writeln!(
        s,
        r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{}" stroke="black"/>"#,
        top + ph
    );
    for tick in [lo, (lo + hi) / 2.0, hi] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{tick}</text>"#,
            left - 6.0,
            y(tick) + 4.0
        );
        let _ = writeln!(
            s,
            r##"<line x1="{left}" y1="{0:.2}" x2="{1}" y2="{0:.2}" stroke="#ddd"/>"##,
            y(tick),
            left + pw
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">bin (30 min)</text>"#,
        left + pw / 2.0,
        h - 8.0
    );
    for (i, v) in series.values.iter().enumerate() {
        if let Some(v) = v {
            let _ = writeln!(
                s,
                r##"<circle cx="{:.2}" cy="{:.2}" r="3" fill="#1f77b4"/>"##,
                x(i as f64),
                y(*v)
            );
        }
    }
    if let Some(f) = series.fit {
        let last = (series.values.len().max(1) - 1) as f64;
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#d62728" stroke-width="2"/>"##,
            x(0.0),
            y(f.predict(0.0)),
            x(last),
            y(f.predict(last))
        );
    }
    s.push_str("</svg>\n");
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Writes the CSV and SVG files of a cohort and merges its entry into
/// `summary.json`. Returns the paths written.
pub fn emit_report(
    report_dir: &Path,
    report: &CohortReport,
) -> Result<Vec<PathBuf>, AnalyticsError> {
    fs::create_dir_all(report_dir)?;
    let name = report.cohort.name();
    let mut written = Vec::new();
    for s in &report.series {
        let stem = format!("{name}_{}", s.metric);
        let csv = report_dir.join(format!("{stem}.csv"));
        fs::write(&csv, series_csv(&report.bins, s))?;
        let svg = report_dir.join(format!("{stem}.svg"));
        fs::write(
            &svg,
            series_svg(&format!("{} / {}", report.cohort, s.metric), s),
        )?;
        written.push(csv);
        written.push(svg);
    }
    let summary_path = report_dir.join(SUMMARY_FILE);
    let mut summary: serde_json::Map<String, serde_json::Value> =
        match fs::read_to_string(&summary_path) {
            Ok(text) => serde_json::from_str(&text).unwrap_or_default(),
            Err(_) => serde_json::Map::new(),
        };
    summary.insert(name, report.summary_json());
    let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    text.push('\n');
    fs::write(&summary_path, text)?;
    written.push(summary_path);
    Ok(written)
}
