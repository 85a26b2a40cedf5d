//! Experiment configuration and the parallel runner.

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{self, Agent, AgentError, Gender, Group, LogError, SessionConfig, UserProfile};
use crate::catalog::{generate_catalog, Catalog, CatalogError, CatalogSpec, Stance, TopicId};
use crate::platform::{AdaptiveConfig, Recommender, ScenarioConfig};
use crate::predictor::{
    AnnotationCache, Annotator, NoiseModel, OracleAnnotator, PredictorError, RemoteConfig,
    RemotePredictor,
};
use crate::queries::QueryBook;
use crate::rng;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CATALOG_FILE: &str = "catalog.jsonl";
pub const POPULARITY_FILE: &str = "hashtag_popularity.tsv";
pub const DEFAULT_OUTPUT_DIR: &str = "runs";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid config: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Predictor(#[from] PredictorError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("worker pool: {0}")]
    Pool(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PlatformConfig {
    /// Category mixtures from a named preset or a scenario file.
    Scripted {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        preset: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        scenario_file: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        feed_batch_size: Option<usize>,
    },
    Adaptive(AdaptiveConfig),
}

impl PlatformConfig {
    pub fn preset(name: &str) -> Self {
        PlatformConfig::Scripted {
            preset: Some(name.to_string()),
            scenario_file: None,
            feed_batch_size: None,
        }
    }

    fn build(
        &self,
        n_bins: usize,
        catalog: &Catalog,
        base_dir: &Path,
    ) -> Result<Recommender, String> {
        match self {
            PlatformConfig::Scripted {
                preset,
                scenario_file,
                feed_batch_size,
            } => {
                let mut scenario = match (preset, scenario_file) {
                    (Some(p), None) => {
                        ScenarioConfig::preset(p, n_bins).map_err(|e| e.to_string())?
                    }
                    (None, Some(f)) => {
                        let path = base_dir.join(f);
                        let s = ScenarioConfig::load(&path)
                            .map_err(|e| format!("{}: {e}", path.display()))?;
                        if s.bins.len() < n_bins {
                            return Err(format!(
                                "scenario `{}` has {} bins but the cohort needs {n_bins}",
                                s.name,
                                s.bins.len()
                            ));
                        }
                        s
                    }
                    _ => {
                        return Err(
                            "scripted mode needs exactly one of `preset` or `scenario_file`".into(),
                        )
                    }
                };
                if let Some(n) = feed_batch_size {
                    scenario.feed_batch_size = *n;
                }
                scenario.validate().map_err(|e| e.to_string())?;
                Ok(Recommender::Scripted(scenario))
            }
            PlatformConfig::Adaptive(cfg) => {
                cfg.validate().map_err(|e| e.to_string())?;
                Ok(Recommender::adaptive(*cfg, catalog))
            }
        }
    }
}

impl Default for PlatformConfig {
    fn default() -> Self {
        Self::preset("equilibrium")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PredictorConfig {
    Oracle {
        #[serde(default)]
        topic_error_rate: f64,
        #[serde(default)]
        stance_error_rate: f64,
    },
    Remote(RemoteConfig),
}

impl Default for PredictorConfig {
    fn default() -> Self {
        PredictorConfig::Oracle {
            topic_error_rate: 0.0,
            stance_error_rate: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohortConfig {
    pub group: Group,
    pub topic: TopicId,
    /// One set of users per stance for G1/G2; G3 users hold every listed
    /// stance at once; empty for cooking baselines.
    #[serde(default)]
    pub stances: Vec<Stance>,
    /// Users per stance (G1/G2) or in total (G3, baselines).
    pub users: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub days: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub platform: Option<PlatformConfig>,
}

impl CohortConfig {
    pub fn days(&self) -> u32 {
        self.days.unwrap_or_else(|| self.group.default_days())
    }

    fn profiles(&self) -> Vec<UserProfile> {
        let mut out = Vec::new();
        let sets: Vec<(String, BTreeSet<Stance>)> = match self.group {
            _ if self.stances.is_empty() => vec![("baseline".into(), BTreeSet::new())],
            Group::G3 => vec![("mixed".into(), self.stances.iter().copied().collect())],
            _ => self
                .stances
                .iter()
                .map(|&s| (s.to_string(), [s].into_iter().collect()))
                .collect(),
        };
        for (label, set) in sets {
            for i in 0..self.users {
                out.push(UserProfile {
                    user_id: format!(
                        "{}-{}-{}-{:02}",
                        self.group.as_str().to_lowercase(),
                        self.topic,
                        label,
                        i + 1
                    ),
                    group: self.group,
                    topic: self.topic,
                    stance_set: set.clone(),
                    age_bracket: "18-24".into(),
                    gender: if i % 2 == 0 { Gender::F } else { Gender::M },
                });
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryOverride {
    pub topic: TopicId,
    pub stance: Stance,
    pub list: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment_name: String,
    pub master_seed: u64,
    #[serde(default = "default_budget")]
    pub session_budget_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub catalog: CatalogSpec,
    #[serde(default)]
    pub platform: PlatformConfig,
    #[serde(default)]
    pub predictor: PredictorConfig,
    #[serde(default)]
    pub cohorts: Vec<CohortConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub queries: Vec<QueryOverride>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hashtag_blocklist: Option<Vec<String>>,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_budget() -> f64 {
    agent::SESSION_BUDGET_S
}

/// One user ready to run.
#[derive(Debug, Clone)]
pub struct PlannedUser {
    pub profile: UserProfile,
    pub days: u32,
    pub cohort: usize,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ExperimentError> {
        toml::from_str(text).map_err(|e| ExperimentError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let mut cfg = Self::from_toml_str(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    /// 68 users: four per topic and stance in G1 and G2, four mixed-stance
    /// US-politics users in G3, each cohort on the feed regime observed for
    /// it.
    pub fn reference(master_seed: u64) -> Self {
        let mut cohorts = Vec::new();
        for group in [Group::G1, Group::G2] {
            for topic in TopicId::POLARISING {
                let preset = match (group, topic) {
                    (Group::G1, _) => "neutral-domination",
                    (_, TopicId::UsPolitics) => "equilibrium",
                    _ => "neutralising",
                };
                cohorts.push(CohortConfig {
                    group,
                    topic,
                    stances: vec![Stance::Support, Stance::Oppose],
                    users: 4,
                    days: None,
                    platform: Some(PlatformConfig::preset(preset)),
                });
            }
        }
        cohorts.push(CohortConfig {
            group: Group::G3,
            topic: TopicId::UsPolitics,
            stances: vec![Stance::Support, Stance::Oppose],
            users: 4,
            days: None,
            platform: Some(PlatformConfig::preset("stance-preference")),
        });
        Self {
            experiment_name: "reference".into(),
            master_seed,
            session_budget_s: agent::SESSION_BUDGET_S,
            workers: None,
            output_dir: None,
            catalog: CatalogSpec::default(),
            platform: PlatformConfig::default(),
            predictor: PredictorConfig::default(),
            cohorts,
            queries: Vec::new(),
            hashtag_blocklist: None,
            base_dir: PathBuf::new(),
        }
    }

    pub fn query_book(&self) -> QueryBook {
        let mut book = QueryBook::builtin();
        for q in &self.queries {
            book.set(q.topic, q.stance, q.list.clone());
        }
        book
    }

    pub fn users(&self) -> Vec<PlannedUser> {
        self.cohorts
            .iter()
            .enumerate()
            .flat_map(|(cohort, c)| {
                c.profiles().into_iter().map(move |profile| PlannedUser {
                    profile,
                    days: c.days(),
                    cohort,
                })
            })
            .collect()
    }

    fn session_config(&self) -> SessionConfig {
        SessionConfig {
            session_budget_s: self.session_budget_s,
            ..SessionConfig::default()
        }
    }

    fn cohort_platform(&self, i: usize) -> &PlatformConfig {
        self.cohorts[i].platform.as_ref().unwrap_or(&self.platform)
    }

    /// Every problem found, each prefixed with the offending field.
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let mut errs = Vec::new();
        if self.experiment_name.is_empty()
            || self
                .experiment_name
                .chars()
                .any(|c| c == '/' || c == '\\' || c.is_whitespace())
        {
            errs.push(
                "experiment_name: must be nonempty without whitespace or path separators"
                    .to_string(),
            );
        }
        if !(self.session_budget_s > 0.0 && self.session_budget_s.is_finite()) {
            errs.push("session_budget_s: must be positive".into());
        }
        if self.workers == Some(0) {
            errs.push("workers: must be at least 1".into());
        }
        if let Err(e) = self.catalog.validate() {
            errs.push(format!("catalog: {e}"));
        }
        match &self.predictor {
            PredictorConfig::Oracle {
                topic_error_rate,
                stance_error_rate,
            } => {
                for (name, p) in [
                    ("topic_error_rate", topic_error_rate),
                    ("stance_error_rate", stance_error_rate),
                ] {
                    if !(0.0..=1.0).contains(p) {
                        errs.push(format!("predictor.{name}: must be in [0, 1]"));
                    }
                }
            }
            PredictorConfig::Remote(r) => {
                if let Err(e) = r.validate() {
                    errs.push(format!("predictor: {e}"));
                }
            }
        }
        let remote = matches!(self.predictor, PredictorConfig::Remote(_));
        if self.cohorts.is_empty() {
            errs.push("cohorts: at least one cohort is required".into());
        }
        let book = self.query_book();
        let mut ids = HashSet::new();
        let mut n_users = 0;
        for (i, c) in self.cohorts.iter().enumerate() {
            let field = format!("cohorts[{i}]");
            if c.users == 0 {
                errs.push(format!("{field}.users: must be at least 1"));
            }
            if c.days() == 0 {
                errs.push(format!("{field}.days: must be at least 1"));
            }
            if remote && c.topic == TopicId::Cooking {
                errs.push(format!(
                    "{field}.topic: cooking baselines need the oracle predictor"
                ));
            }
            let mut stance_dupes = BTreeSet::new();
            if c.stances.iter().any(|s| !stance_dupes.insert(*s)) {
                errs.push(format!("{field}.stances: duplicate stance"));
            }
            let profiles = c.profiles();
            if let Some(p) = profiles.first() {
                if let Err(e) = p.validate() {
                    errs.push(format!("{field}: {e}"));
                }
            }
            for p in &profiles {
                n_users += 1;
                if !ids.insert(p.user_id.clone()) {
                    errs.push(format!("{field}: duplicate user id {}", p.user_id));
                }
            }
            let mut needed: Vec<(TopicId, Stance)> =
                c.stances.iter().map(|&s| (c.topic, s)).collect();
            if c.group == Group::G1 {
                needed.push((TopicId::Cooking, Stance::None));
            }
            for (t, s) in needed {
                if book.get(t, s).is_empty() {
                    errs.push(format!(
                        "queries: no seed queries for {t}/{s} needed by {field}"
                    ));
                }
            }
        }
        if !self.cohorts.is_empty() && n_users == 0 {
            errs.push("cohorts: configuration defines zero users".into());
        }
        // Platform parameters are checked against an empty-shaped catalog;
        // only the scenario shape matters here.
        if self.catalog.validate().is_ok() {
            let probe =
                Catalog::from_records(Vec::new(), Default::default()).expect("empty catalog");
            for (i, c) in self.cohorts.iter().enumerate() {
                let bins = c.days() as usize * self.session_config().bins_per_session();
                let field = if c.platform.is_some() {
                    format!("cohorts[{i}].platform")
                } else {
                    "platform".into()
                };
                if let Err(e) = self.cohort_platform(i).build(bins, &probe, &self.base_dir) {
                    errs.push(format!("{field}: {e}"));
                }
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            errs.dedup();
            Err(ExperimentError::Invalid(errs))
        }
    }
}

/// Overrides applied on top of a config at run time.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestUser {
    #[serde(flatten)]
    pub profile: UserProfile,
    pub days: u32,
    pub predictor_failures: usize,
}

/// Written next to the logs; tells the analysis which user is which.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment_name: String,
    pub master_seed: u64,
    pub session_budget_s: f64,
    pub bin_width_s: f64,
    pub users: Vec<ManifestUser>,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self, ExperimentError> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, dir: &Path) -> Result<(), ExperimentError> {
        let path = dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(&path, text).map_err(io_err(&path))
    }

    pub fn log_path(dir: &Path, user_id: &str) -> PathBuf {
        dir.join(format!("{user_id}.log"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub users: usize,
    pub events: usize,
    pub predictor_failures: usize,
    pub remote_calls: usize,
}

pub fn experiment_dir(config: &ExperimentConfig, opts: &RunOptions) -> PathBuf {
    let root = opts
        .out_dir
        .clone()
        .or_else(|| config.output_dir.as_ref().map(|d| config.base_dir.join(d)))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
    root.join(&config.experiment_name)
}

/// Runs every user and writes `<out>/<experiment>/`: one log per user, the
/// catalog, its hashtag-popularity table and a manifest.
pub fn run_experiment(
    config: &ExperimentConfig,
    opts: &RunOptions,
) -> Result<RunSummary, ExperimentError> {
    config.validate()?;
    let seed = opts.seed.unwrap_or(config.master_seed);
    let dir = experiment_dir(config, opts);
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    clear_stale_logs(&dir)?;

    let catalog = generate_catalog(&config.catalog, seed)?;
    catalog.write_records(&dir.join(CATALOG_FILE))?;
    catalog.write_hashtag_popularity(&dir.join(POPULARITY_FILE))?;

    let session = config.session_config();
    let recommenders: Vec<Recommender> = (0..config.cohorts.len())
        .map(|i| {
            let bins = config.cohorts[i].days() as usize * session.bins_per_session();
            config
                .cohort_platform(i)
                .build(bins, &catalog, &config.base_dir)
        })
        .collect::<Result<_, _>>()
        .map_err(|e| ExperimentError::Invalid(vec![format!("platform: {e}")]))?;
    let queries = config.query_book();

    let remote = match &config.predictor {
        PredictorConfig::Remote(r) => {
            let cache = match &r.cache_path {
                Some(p) if config.base_dir.join(p).exists() => {
                    AnnotationCache::load(&config.base_dir.join(p))?
                }
                _ => AnnotationCache::new(),
            };
            Some(Arc::new(RemotePredictor::new(r.clone(), Arc::new(cache))?))
        }
        PredictorConfig::Oracle { .. } => None,
    };

    let users = config.users();
    let workers = opts.workers.or(config.workers).unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    });
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| ExperimentError::Pool(e.to_string()))?;

    let results: Vec<Result<(Vec<agent::InteractionEvent>, usize), ExperimentError>> = pool
        .install(|| {
            users
                .par_iter()
                .map(|u| {
                    let annotator: Box<dyn Annotator + Send> = match (&config.predictor, &remote) {
                        (_, Some(r)) => Box::new(Arc::clone(r)),
                        (
                            PredictorConfig::Oracle {
                                topic_error_rate,
                                stance_error_rate,
                            },
                            None,
                        ) => {
                            let noise = NoiseModel::new(
                                *topic_error_rate,
                                *stance_error_rate,
                                rng::stream(seed, &u.profile.user_id, "oracle"),
                            )?;
                            Box::new(OracleAnnotator::new(noise))
                        }
                        (PredictorConfig::Remote(_), None) => {
                            unreachable!("remote predictor is built above")
                        }
                    };
                    let mut agent = Agent::new(
                        seed,
                        u.profile.clone(),
                        &catalog,
                        &recommenders[u.cohort],
                        &queries,
                        annotator,
                        session,
                    )?;
                    agent.run_protocol(u.days)?;
                    let failures = agent.predictor_failures();
                    Ok((agent.into_events(), failures))
                })
                .collect()
        });

    let mut manifest = Manifest {
        experiment_name: config.experiment_name.clone(),
        master_seed: seed,
        session_budget_s: config.session_budget_s,
        bin_width_s: session.bin_width_s,
        users: Vec::with_capacity(users.len()),
    };
    let (mut events, mut failures) = (0, 0);
    for (u, r) in users.iter().zip(results) {
        let (log, f) = r?;
        agent::write_log(&Manifest::log_path(&dir, &u.profile.user_id), &log)?;
        events += log.len();
        failures += f;
        manifest.users.push(ManifestUser {
            profile: u.profile.clone(),
            days: u.days,
            predictor_failures: f,
        });
    }
    manifest.save(&dir)?;

    let mut remote_calls = 0;
    if let (Some(r), PredictorConfig::Remote(cfg)) = (&remote, &config.predictor) {
        remote_calls = r.remote_calls();
        if let Some(p) = &cfg.cache_path {
            r.cache().save(&config.base_dir.join(p))?;
        }
    }
    Ok(RunSummary {
        dir,
        users: users.len(),
        events,
        predictor_failures: failures,
        remote_calls,
    })
}

fn clear_stale_logs(dir: &Path) -> Result<(), ExperimentError> {
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        if path.extension().is_some_and(|e| e == "log") {
            fs::remove_file(&path).map_err(io_err(&path))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_config_has_68_users() {
        let cfg = ExperimentConfig::reference(1);
        cfg.validate().unwrap();
        let users = cfg.users();
        assert_eq!(users.len(), 68);
        assert_eq!(
            users
                .iter()
                .filter(|u| u.profile.group == Group::G1)
                .count(),
            32
        );
        assert_eq!(
            users
                .iter()
                .filter(|u| u.profile.group == Group::G3)
                .count(),
            4
        );
        let fe_g2 = users
            .iter()
            .filter(|u| u.profile.group == Group::G2 && u.profile.topic == TopicId::Flatearth)
            .count();
        assert_eq!(fe_g2, 8);
        assert!(users
            .iter()
            .all(|u| u.days == if u.profile.group == Group::G3 { 9 } else { 15 }));
    }

    #[test]
    fn user_ids_and_demographics() {
        let users = ExperimentConfig::reference(1).users();
        assert_eq!(users[0].profile.user_id, "g1-flatearth-support-01");
        assert_eq!(users[0].profile.gender, Gender::F);
        assert_eq!(users[1].profile.gender, Gender::M);
        assert!(users.iter().all(|u| u.profile.age_bracket == "18-24"));
        let g3 = users.iter().find(|u| u.profile.group == Group::G3).unwrap();
        assert_eq!(g3.profile.user_id, "g3-us_politics-mixed-01");
        assert_eq!(g3.profile.stance_set.len(), 2);
    }

    #[test]
    fn validation_lists_every_offending_field() {
        let mut cfg = ExperimentConfig::reference(1);
        cfg.session_budget_s = 0.0;
        cfg.cohorts[0].users = 0;
        cfg.cohorts[1].platform = Some(PlatformConfig::preset("nope"));
        let Err(ExperimentError::Invalid(errs)) = cfg.validate() else {
            panic!("expected invalid")
        };
        assert!(
            errs.iter().any(|e| e.starts_with("session_budget_s")),
            "{errs:?}"
        );
        assert!(
            errs.iter().any(|e| e.starts_with("cohorts[0].users")),
            "{errs:?}"
        );
        assert!(
            errs.iter().any(|e| e.starts_with("cohorts[1].platform")),
            "{errs:?}"
        );
    }

    #[test]
    fn zero_users_is_invalid() {
        let mut cfg = ExperimentConfig::reference(1);
        cfg.cohorts.clear();
        assert!(matches!(cfg.validate(), Err(ExperimentError::Invalid(_))));
    }

    #[test]
    fn g3_must_be_politics() {
        let mut cfg = ExperimentConfig::reference(1);
        cfg.cohorts.last_mut().unwrap().topic = TopicId::Vaccines;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn empty_query_override_is_caught() {
        let mut cfg = ExperimentConfig::reference(1);
        cfg.queries.push(QueryOverride {
            topic: TopicId::Vaccines,
            stance: Stance::Oppose,
            list: vec![],
        });
        let Err(ExperimentError::Invalid(errs)) = cfg.validate() else {
            panic!()
        };
        assert!(errs.iter().any(|e| e.contains("vaccines/oppose")));
    }

    #[test]
    fn toml_config_parses() {
        let text = r#"
experiment_name = "small"
master_seed = 7

[platform]
mode = "adaptive"
exploration_rate = 0.3

[predictor]
kind = "oracle"
topic_error_rate = 0.05

[[cohorts]]
group = "G2"
topic = "vaccines"
stances = ["support"]
users = 2
days = 3
platform = { mode = "scripted", preset = "neutralising" }
"#;
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.users().len(), 2);
        assert!(
            matches!(cfg.platform, PlatformConfig::Adaptive(a) if a.exploration_rate == 0.3 && a.feed_batch_size == 8)
        );
        assert!(ExperimentConfig::from_toml_str(
            "experiment_name = \"x\"\nmaster_seed = 1\nbogus = 2\n"
        )
        .is_err());
    }
}
