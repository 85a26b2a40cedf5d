//! Simulated "For You" feed.
//!
//! Two recommenders are available. The scripted one draws each slot's
//! category from a per-bin mixture, so the drift it produces is known by
//! construction. The adaptive one mixes uniform exploration with
//! exploitation proportional to learned interest scores, so drift emerges
//! from the agent's feedback.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{Catalog, Stance, TopicId, VideoRecord};
use crate::predictor::Action;
use crate::rng::{self, StreamRng};

pub const DEFAULT_FEED_BATCH_SIZE: usize = 8;

#[derive(Debug, Error)]
pub enum PlatformError {
    #[error("scenario `{scenario}` has {bins} bins; bin {bin} requested")]
    ScenarioExhausted {
        scenario: String,
        bin: usize,
        bins: usize,
    },
    #[error("insufficient catalog: {0}")]
    InsufficientCatalog(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Category shares for one 30-minute bin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureTarget {
    pub interest_share: f64,
    pub neutral_share: f64,
    pub other_share: f64,
    /// Fraction of interest videos with support stance.
    pub stance_split: f64,
}

impl MixtureTarget {
    pub fn new(
        interest_share: f64,
        neutral_share: f64,
        other_share: f64,
        stance_split: f64,
    ) -> Self {
        Self {
            interest_share,
            neutral_share,
            other_share,
            stance_split,
        }
    }

    /// Builds a mixture from the preference-aligned share (interest plus
    /// neutral) and the normalized interest-vs-neutral difference.
    pub fn from_drift(preference_share: f64, topic_difference: f64, stance_split: f64) -> Self {
        let interest = preference_share * (1.0 + topic_difference) / 2.0;
        let neutral = preference_share * (1.0 - topic_difference) / 2.0;
        Self::new(interest, neutral, 1.0 - preference_share, stance_split)
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("interest_share", self.interest_share),
            ("neutral_share", self.neutral_share),
            ("other_share", self.other_share),
            ("stance_split", self.stance_split),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("{name} = {v} is outside [0, 1]"));
            }
        }
        let sum = self.interest_share + self.neutral_share + self.other_share;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(format!("shares sum to {sum}, expected 1"));
        }
        Ok(())
    }

    /// Expected polarisation-topic value for this bin.
    pub fn topic_difference(&self) -> Option<f64> {
        let d = self.interest_share + self.neutral_share;
        (d > 0.0).then(|| (self.interest_share - self.neutral_share) / d)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub bins: Vec<MixtureTarget>,
    pub feed_batch_size: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct ScenarioFile {
    name: String,
    #[serde(default = "default_batch")]
    feed_batch_size: usize,
    bins: Vec<ScenarioFileBin>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ScenarioFileBin {
    bin: usize,
    interest_share: f64,
    neutral_share: f64,
    other_share: f64,
    stance_split: f64,
}

fn default_batch() -> usize {
    DEFAULT_FEED_BATCH_SIZE
}

pub const PRESETS: [&str; 4] = [
    "neutral-domination",
    "neutralising",
    "equilibrium",
    "stance-preference",
];

impl ScenarioConfig {
    pub fn new(
        name: impl Into<String>,
        bins: Vec<MixtureTarget>,
        feed_batch_size: usize,
    ) -> Result<Self, PlatformError> {
        let s = Self {
            name: name.into(),
            bins,
            feed_batch_size,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), PlatformError> {
        if self.feed_batch_size == 0 {
            return Err(PlatformError::InvalidScenario(
                "feed_batch_size must be positive".into(),
            ));
        }
        if self.bins.is_empty() {
            return Err(PlatformError::InvalidScenario(format!(
                "scenario `{}` has no bins",
                self.name
            )));
        }
        for (i, b) in self.bins.iter().enumerate() {
            b.validate()
                .map_err(|m| PlatformError::InvalidScenario(format!("bin {i}: {m}")))?;
        }
        Ok(())
    }

    /// Shares following `f(x)` for `x` running from 0 at the first bin to 1
    /// at the last.
    fn curve(name: &str, n_bins: usize, f: impl Fn(f64) -> MixtureTarget) -> Self {
        let bins = (0..n_bins)
            .map(|b| {
                f(if n_bins > 1 {
                    b as f64 / (n_bins - 1) as f64
                } else {
                    0.0
                })
            })
            .collect();
        Self {
            name: name.to_string(),
            bins,
            feed_batch_size: DEFAULT_FEED_BATCH_SIZE,
        }
    }

    /// Polarisation-topic difference moving linearly from `start` to `end`
    /// with a constant preference-aligned share.
    pub fn linear_topic_drift(
        n_bins: usize,
        start: f64,
        end: f64,
        preference_share: f64,
    ) -> Result<Self, PlatformError> {
        let s = Self::curve("linear-topic-drift", n_bins, |x| {
            MixtureTarget::from_drift(preference_share, start + (end - start) * x, 0.5)
        });
        s.validate()?;
        Ok(s)
    }

    /// Built-in regimes. Curves are calibration fixtures shaped after the
    /// qualitative behaviour seen on the live platform.
    pub fn preset(name: &str, n_bins: usize) -> Result<Self, PlatformError> {
        if n_bins == 0 {
            return Err(PlatformError::InvalidScenario(
                "preset needs at least one bin".into(),
            ));
        }
        let s = match name {
            // Neutral content takes over while personalisation climbs fast.
            "neutral-domination" => Self::curve(name, n_bins, |x| {
                let pref = 0.3 + 0.4 * (1.0 - (-5.0 * x).exp());
                MixtureTarget::from_drift(pref, -0.6 - 0.3 * x, 0.5)
            }),
            // Polarising content is displaced by neutral content over time.
            "neutralising" => Self::curve(name, n_bins, |x| {
                MixtureTarget::from_drift(0.15 + 0.55 * x, 0.2 - 1.15 * x, 0.5)
            }),
            "equilibrium" => {
                Self::curve(name, n_bins, |_| MixtureTarget::new(0.6, 0.25, 0.15, 0.5))
            }
            // Mostly interest content with a slow slide toward the oppose side.
            "stance-preference" => Self::curve(name, n_bins, |x| {
                let stance_diff = -0.7 - 0.1 * x;
                MixtureTarget::from_drift(0.75 - 0.1 * x, 0.9, (1.0 + stance_diff) / 2.0)
            }),
            other => {
                return Err(PlatformError::InvalidScenario(format!(
                    "unknown preset `{other}` (known: {})",
                    PRESETS.join(", ")
                )))
            }
        };
        s.validate()?;
        Ok(s)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, PlatformError> {
        let file: ScenarioFile =
            toml::from_str(text).map_err(|e| PlatformError::InvalidScenario(e.to_string()))?;
        for (i, b) in file.bins.iter().enumerate() {
            if b.bin != i {
                return Err(PlatformError::InvalidScenario(format!(
                    "bins must be listed in order from 0; entry {i} has bin {}",
                    b.bin
                )));
            }
        }
        let bins = file
            .bins
            .iter()
            .map(|b| {
                MixtureTarget::new(
                    b.interest_share,
                    b.neutral_share,
                    b.other_share,
                    b.stance_split,
                )
            })
            .collect();
        Self::new(file.name, bins, file.feed_batch_size)
    }

    pub fn load(path: &Path) -> Result<Self, PlatformError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        let file = ScenarioFile {
            name: self.name.clone(),
            feed_batch_size: self.feed_batch_size,
            bins: self
                .bins
                .iter()
                .enumerate()
                .map(|(bin, b)| ScenarioFileBin {
                    bin,
                    interest_share: b.interest_share,
                    neutral_share: b.neutral_share,
                    other_share: b.other_share,
                    stance_split: b.stance_split,
                })
                .collect(),
        };
        toml::to_string(&file).expect("scenario serializes")
    }
}

/// Parameters of the feedback-driven recommender.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdaptiveConfig {
    pub exploration_rate: f64,
    /// Score increment for a watch-like-bookmark.
    pub reward: f64,
    /// Multiplier applied to the skipped video's score; 1.0 leaves it as is.
    pub skip_decay: f64,
    pub feed_batch_size: usize,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        Self {
            exploration_rate: 0.2,
            reward: 1.0,
            skip_decay: 1.0,
            feed_batch_size: DEFAULT_FEED_BATCH_SIZE,
        }
    }
}

impl AdaptiveConfig {
    pub fn validate(&self) -> Result<(), PlatformError> {
        let bad = |m: &str| Err(PlatformError::InvalidScenario(m.to_string()));
        if !(0.0..=1.0).contains(&self.exploration_rate) {
            return bad("exploration_rate must be in [0, 1]");
        }
        if !(self.reward >= 0.0 && self.reward.is_finite()) {
            return bad("reward must be nonnegative");
        }
        if !(self.skip_decay >= 0.0 && self.skip_decay.is_finite()) {
            return bad("skip_decay must be nonnegative");
        }
        if self.feed_batch_size == 0 {
            return bad("feed_batch_size must be positive");
        }
        Ok(())
    }
}

/// Per-user recommender state. Never shared between users.
#[derive(Debug, Clone)]
pub struct FeedState {
    pub user_id: String,
    pub interest_topic: TopicId,
    pub interest_scores: BTreeMap<(TopicId, Stance), f64>,
    pub exploration_rate: f64,
    rng: StreamRng,
}

pub fn register_user(
    seed: u64,
    user_id: &str,
    interest_topic: TopicId,
    exploration_rate: f64,
) -> FeedState {
    FeedState {
        user_id: user_id.to_string(),
        interest_topic,
        interest_scores: BTreeMap::new(),
        exploration_rate,
        rng: rng::stream(seed, user_id, "feed"),
    }
}

impl FeedState {
    pub fn score(&self, topic: TopicId, stance: Stance) -> f64 {
        self.interest_scores
            .get(&(topic, stance))
            .copied()
            .unwrap_or(0.0)
    }
}

#[derive(Clone, Copy)]
enum Slot {
    Interest(Stance),
    Neutral,
    Other,
}

fn pick_slot(target: &MixtureTarget, rng: &mut StreamRng) -> Slot {
    let u: f64 = rng.random();
    let mut slot = None;
    let mut acc = 0.0;
    for (share, s) in [
        (target.interest_share, Slot::Interest(Stance::Support)),
        (target.neutral_share, Slot::Neutral),
        (target.other_share, Slot::Other),
    ] {
        if share <= 0.0 {
            continue;
        }
        acc += share;
        slot = Some(s);
        if u < acc {
            break;
        }
    }
    let slot = slot.unwrap_or(Slot::Other);
    match slot {
        Slot::Interest(_) => {
            let stance = if rng.random::<f64>() < target.stance_split {
                Stance::Support
            } else {
                Stance::Oppose
            };
            Slot::Interest(stance)
        }
        s => s,
    }
}

/// Uniform draw from `pool` avoiding positions already in `taken`.
fn draw_fresh(pool: &[usize], taken: &[usize], rng: &mut StreamRng) -> Option<usize> {
    if pool.is_empty() {
        return None;
    }
    for _ in 0..32 {
        let i = pool[rng.random_range(0..pool.len())];
        if !taken.contains(&i) {
            return Some(i);
        }
    }
    let free: Vec<usize> = pool
        .iter()
        .copied()
        .filter(|i| !taken.contains(i))
        .collect();
    (!free.is_empty()).then(|| free[rng.random_range(0..free.len())])
}

pub fn next_feed_batch_scripted<'c>(
    scenario: &ScenarioConfig,
    catalog: &'c Catalog,
    bin_index: usize,
    state: &mut FeedState,
) -> Result<Vec<&'c VideoRecord>, PlatformError> {
    let target = scenario
        .bins
        .get(bin_index)
        .ok_or_else(|| PlatformError::ScenarioExhausted {
            scenario: scenario.name.clone(),
            bin: bin_index,
            bins: scenario.bins.len(),
        })?;
    let mut taken: Vec<usize> = Vec::with_capacity(scenario.feed_batch_size);
    for _ in 0..scenario.feed_batch_size {
        let (topic, stance) = match pick_slot(target, &mut state.rng) {
            // Neutral-only baselines have no polarising interest to serve.
            Slot::Interest(_) if !state.interest_topic.is_polarising() => {
                (TopicId::Cooking, Stance::None)
            }
            Slot::Interest(s) => (state.interest_topic, s),
            Slot::Neutral => (TopicId::Cooking, Stance::None),
            Slot::Other => (TopicId::Other, Stance::None),
        };
        let pool = catalog.category(topic, stance);
        let i = draw_fresh(pool, &taken, &mut state.rng).ok_or_else(|| {
            PlatformError::InsufficientCatalog(format!(
                "no unused {topic}/{stance} video left for a batch of {}",
                scenario.feed_batch_size
            ))
        })?;
        taken.push(i);
    }
    Ok(taken.into_iter().map(|i| &catalog.videos()[i]).collect())
}

/// Popularity-weighted lookup tables per label, built once per catalog.
#[derive(Debug, Clone)]
pub struct AdaptiveIndex {
    categories: Vec<CategoryWeights>,
}

#[derive(Debug, Clone)]
struct CategoryWeights {
    label: (TopicId, Stance),
    positions: Vec<usize>,
    cumulative: Vec<f64>,
}

impl CategoryWeights {
    fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    fn draw(&self, rng: &mut StreamRng) -> usize {
        let u = rng.random::<f64>() * self.total();
        let k = self
            .cumulative
            .partition_point(|&c| c <= u)
            .min(self.positions.len() - 1);
        self.positions[k]
    }
}

impl AdaptiveIndex {
    pub fn new(catalog: &Catalog) -> Self {
        let categories = catalog
            .topic_index()
            .map(|(label, _)| {
                let positions = catalog.category(label.0, label.1).to_vec();
                let mut acc = 0.0;
                let cumulative = positions
                    .iter()
                    .map(|&i| {
                        acc += catalog.videos()[i].popularity_weight;
                        acc
                    })
                    .collect();
                CategoryWeights {
                    label,
                    positions,
                    cumulative,
                }
            })
            .collect();
        Self { categories }
    }

    /// Total popularity weight of a label.
    pub fn category_weight(&self, topic: TopicId, stance: Stance) -> f64 {
        self.categories
            .iter()
            .find(|c| c.label == (topic, stance))
            .map_or(0.0, CategoryWeights::total)
    }
}

pub fn next_feed_batch_adaptive<'c>(
    config: &AdaptiveConfig,
    index: &AdaptiveIndex,
    state: &mut FeedState,
    catalog: &'c Catalog,
) -> Result<Vec<&'c VideoRecord>, PlatformError> {
    if catalog.is_empty() {
        return Err(PlatformError::InsufficientCatalog(
            "catalog is empty".into(),
        ));
    }
    let weights: Vec<f64> = index
        .categories
        .iter()
        .map(|c| state.score(c.label.0, c.label.1) * c.total())
        .collect();
    let exploit_total: f64 = weights.iter().sum();
    let mut batch = Vec::with_capacity(config.feed_batch_size);
    for _ in 0..config.feed_batch_size {
        let explore = state.rng.random::<f64>() < state.exploration_rate;
        let i = if explore || exploit_total <= 0.0 {
            state.rng.random_range(0..catalog.len())
        } else {
            let u = state.rng.random::<f64>() * exploit_total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (c, w) in index.categories.iter().zip(&weights) {
                if *w <= 0.0 {
                    continue;
                }
                acc += w;
                chosen = Some(c);
                if u < acc {
                    break;
                }
            }
            chosen
                .expect("positive exploit total has a category")
                .draw(&mut state.rng)
        };
        batch.push(&catalog.videos()[i]);
    }
    Ok(batch)
}

pub fn record_feedback(
    config: &AdaptiveConfig,
    state: &mut FeedState,
    video: &VideoRecord,
    action: Action,
) {
    let key = (video.true_topic, video.true_stance);
    match action {
        Action::WatchLikeBookmark => {
            *state.interest_scores.entry(key).or_insert(0.0) += config.reward
        }
        Action::Skip => {
            if config.skip_decay != 1.0 {
                if let Some(s) = state.interest_scores.get_mut(&key) {
                    *s *= config.skip_decay;
                }
            }
        }
    }
}

/// Feed source used by an experiment.
#[derive(Debug, Clone)]
pub enum Recommender {
    Scripted(ScenarioConfig),
    Adaptive {
        config: AdaptiveConfig,
        index: AdaptiveIndex,
    },
}

impl Recommender {
    pub fn adaptive(config: AdaptiveConfig, catalog: &Catalog) -> Self {
        Recommender::Adaptive {
            config,
            index: AdaptiveIndex::new(catalog),
        }
    }

    pub fn exploration_rate(&self) -> f64 {
        match self {
            Recommender::Scripted(_) => 0.0,
            Recommender::Adaptive { config, .. } => config.exploration_rate,
        }
    }

    pub fn next_batch<'c>(
        &self,
        catalog: &'c Catalog,
        bin_index: usize,
        state: &mut FeedState,
    ) -> Result<Vec<&'c VideoRecord>, PlatformError> {
        match self {
            Recommender::Scripted(s) => next_feed_batch_scripted(s, catalog, bin_index, state),
            Recommender::Adaptive { config, index } => {
                next_feed_batch_adaptive(config, index, state, catalog)
            }
        }
    }

    /// Scripted feeds ignore feedback.
    pub fn record_feedback(&self, state: &mut FeedState, video: &VideoRecord, action: Action) {
        if let Recommender::Adaptive { config, .. } = self {
            record_feedback(config, state, video, action);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{generate_catalog, CatalogSpec, CategoryCount};

    fn catalog() -> Catalog {
        let mut spec = CatalogSpec::default();
        spec.counts = vec![
            CategoryCount {
                topic: TopicId::Flatearth,
                stance: Stance::Support,
                count: 60,
            },
            CategoryCount {
                topic: TopicId::Flatearth,
                stance: Stance::Oppose,
                count: 60,
            },
            CategoryCount {
                topic: TopicId::Cooking,
                stance: Stance::None,
                count: 100,
            },
            CategoryCount {
                topic: TopicId::Other,
                stance: Stance::None,
                count: 200,
            },
        ];
        generate_catalog(&spec, 3).unwrap()
    }

    fn scenario(target: MixtureTarget, batch: usize) -> ScenarioConfig {
        ScenarioConfig::new("t", vec![target], batch).unwrap()
    }

    #[test]
    fn degenerate_mixture_yields_only_interest() {
        let cat = catalog();
        let mut st = register_user(1, "u", TopicId::Flatearth, 0.0);
        let batch = next_feed_batch_scripted(
            &scenario(MixtureTarget::new(1.0, 0.0, 0.0, 0.5), 10),
            &cat,
            0,
            &mut st,
        )
        .unwrap();
        assert_eq!(batch.len(), 10);
        assert!(batch.iter().all(|v| v.true_topic == TopicId::Flatearth));
        let mut ids: Vec<&str> = batch.iter().map(|v| v.video_id.as_str()).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 10, "batch draws without replacement");
    }

    #[test]
    fn zero_stance_split_means_all_oppose() {
        let cat = catalog();
        let mut st = register_user(1, "u", TopicId::Flatearth, 0.0);
        let sc = scenario(MixtureTarget::new(1.0, 0.0, 0.0, 0.0), 8);
        for _ in 0..20 {
            for v in next_feed_batch_scripted(&sc, &cat, 0, &mut st).unwrap() {
                assert_eq!(v.true_stance, Stance::Oppose);
            }
        }
    }

    #[test]
    fn empirical_shares_match_target() {
        let cat = catalog();
        let mut st = register_user(2, "u", TopicId::Flatearth, 0.0);
        let sc = scenario(MixtureTarget::new(0.5, 0.25, 0.25, 0.5), 8);
        let mut counts = [0usize; 3];
        for _ in 0..10_000 {
            for v in next_feed_batch_scripted(&sc, &cat, 0, &mut st).unwrap() {
                counts[match v.true_topic {
                    TopicId::Cooking => 1,
                    TopicId::Other => 2,
                    _ => 0,
                }] += 1;
            }
        }
        let n = 80_000.0;
        for (c, want) in counts.iter().zip([0.5, 0.25, 0.25]) {
            assert!((*c as f64 / n - want).abs() <= 0.02, "{counts:?}");
        }
    }

    #[test]
    fn scripted_errors() {
        let cat = catalog();
        let mut st = register_user(1, "u", TopicId::Flatearth, 0.0);
        let sc = scenario(MixtureTarget::new(1.0, 0.0, 0.0, 0.5), 8);
        assert!(matches!(
            next_feed_batch_scripted(&sc, &cat, 1, &mut st),
            Err(PlatformError::ScenarioExhausted {
                bin: 1,
                bins: 1,
                ..
            })
        ));
        let mut st = register_user(1, "u", TopicId::Vaccines, 0.0);
        assert!(matches!(
            next_feed_batch_scripted(&sc, &cat, 0, &mut st),
            Err(PlatformError::InsufficientCatalog(_))
        ));
        let big = scenario(MixtureTarget::new(1.0, 0.0, 0.0, 1.0), 61);
        let mut st = register_user(1, "u", TopicId::Flatearth, 0.0);
        assert!(matches!(
            next_feed_batch_scripted(&big, &cat, 0, &mut st),
            Err(PlatformError::InsufficientCatalog(_))
        ));
    }

    #[test]
    fn scripted_is_deterministic_per_user_stream() {
        let cat = catalog();
        let sc = ScenarioConfig::preset("equilibrium", 4).unwrap();
        let run = |user: &str| {
            let mut st = register_user(9, user, TopicId::Flatearth, 0.0);
            (0..4)
                .flat_map(|b| next_feed_batch_scripted(&sc, &cat, b, &mut st).unwrap())
                .map(|v| v.video_id.clone())
                .collect::<Vec<_>>()
        };
        assert_eq!(run("a"), run("a"));
        assert_ne!(run("a"), run("b"));
    }

    #[test]
    fn zero_scores_fall_back_to_uniform() {
        let cat = catalog();
        let cfg = AdaptiveConfig {
            exploration_rate: 0.0,
            ..AdaptiveConfig::default()
        };
        let idx = AdaptiveIndex::new(&cat);
        let mut st = register_user(1, "u", TopicId::Flatearth, 0.0);
        let mut topics = std::collections::BTreeSet::new();
        for _ in 0..200 {
            for v in next_feed_batch_adaptive(&cfg, &idx, &mut st, &cat).unwrap() {
                topics.insert(v.true_topic);
            }
        }
        assert_eq!(topics.len(), 3);
    }

    #[test]
    fn exploitation_only_serves_scored_category() {
        let cat = catalog();
        let cfg = AdaptiveConfig {
            exploration_rate: 0.0,
            ..AdaptiveConfig::default()
        };
        let idx = AdaptiveIndex::new(&cat);
        let mut st = register_user(1, "u", TopicId::Flatearth, 0.0);
        st.interest_scores
            .insert((TopicId::Cooking, Stance::None), 10.0);
        for _ in 0..100 {
            let batch = next_feed_batch_adaptive(&cfg, &idx, &mut st, &cat).unwrap();
            assert_eq!(batch.len(), cfg.feed_batch_size);
            assert!(batch.iter().all(|v| v.true_topic == TopicId::Cooking));
        }
    }

    #[test]
    fn adaptive_draw_ratio_matches_closed_form() {
        let cat = catalog();
        let cfg = AdaptiveConfig {
            exploration_rate: 0.2,
            feed_batch_size: 1,
            ..AdaptiveConfig::default()
        };
        let idx = AdaptiveIndex::new(&cat);
        let mut st = register_user(4, "u", TopicId::Flatearth, cfg.exploration_rate);
        st.interest_scores
            .insert((TopicId::Cooking, Stance::None), 1.0);
        st.interest_scores
            .insert((TopicId::Flatearth, Stance::Support), 1.0);

        // Closed form: P(label) = eps * n_label / N + (1 - eps) * w_label / (w_c + w_f)
        let n = cat.len() as f64;
        let wc: f64 = cat
            .category(TopicId::Cooking, Stance::None)
            .iter()
            .map(|&i| cat.videos()[i].popularity_weight)
            .sum();
        let wf: f64 = cat
            .category(TopicId::Flatearth, Stance::Support)
            .iter()
            .map(|&i| cat.videos()[i].popularity_weight)
            .sum();
        let pc = 0.2 * 100.0 / n + 0.8 * wc / (wc + wf);
        let pf = 0.2 * 60.0 / n + 0.8 * wf / (wc + wf);
        let expected = pc / pf;

        let (mut c, mut f) = (0usize, 0usize);
        for _ in 0..200_000 {
            let v = next_feed_batch_adaptive(&cfg, &idx, &mut st, &cat).unwrap()[0];
            match (v.true_topic, v.true_stance) {
                (TopicId::Cooking, _) => c += 1,
                (TopicId::Flatearth, Stance::Support) => f += 1,
                _ => {}
            }
        }
        let measured = c as f64 / f as f64;
        assert!(
            (measured / expected - 1.0).abs() <= 0.03,
            "measured {measured}, expected {expected}"
        );
    }

    #[test]
    fn feedback_accumulates_and_skip_is_noop_by_default() {
        let cat = catalog();
        let cfg = AdaptiveConfig::default();
        let mut st = register_user(1, "u", TopicId::Flatearth, 0.2);
        let fe = &cat.videos()[cat.category(TopicId::Flatearth, Stance::Support)[0]];
        let ck = &cat.videos()[cat.category(TopicId::Cooking, Stance::None)[0]];
        record_feedback(&cfg, &mut st, fe, Action::WatchLikeBookmark);
        assert_eq!(st.score(TopicId::Flatearth, Stance::Support), 1.0);
        assert_eq!(st.interest_scores.len(), 1);
        let before = st.interest_scores.clone();
        record_feedback(&cfg, &mut st, fe, Action::Skip);
        assert_eq!(st.interest_scores, before);

        let mut st = register_user(1, "u", TopicId::Flatearth, 0.2);
        for _ in 0..25 {
            record_feedback(&cfg, &mut st, ck, Action::WatchLikeBookmark);
        }
        for _ in 0..25 {
            record_feedback(&cfg, &mut st, fe, Action::WatchLikeBookmark);
        }
        assert_eq!(st.score(TopicId::Cooking, Stance::None), 25.0);
        assert_eq!(st.score(TopicId::Flatearth, Stance::Support), 25.0);
    }

    #[test]
    fn presets_are_valid_mixtures() {
        for name in PRESETS {
            for n in [1, 18, 30] {
                let s = ScenarioConfig::preset(name, n).unwrap();
                assert_eq!(s.bins.len(), n);
            }
        }
        assert!(ScenarioConfig::preset("nope", 30).is_err());
        let eq = ScenarioConfig::preset("equilibrium", 30).unwrap();
        assert!(eq
            .bins
            .iter()
            .all(|b| b.interest_share == 0.6 && b.neutral_share == 0.25));
    }

    #[test]
    fn linear_drift_hits_endpoints() {
        let s = ScenarioConfig::linear_topic_drift(30, 0.6, -0.8, 0.7).unwrap();
        assert!((s.bins[0].topic_difference().unwrap() - 0.6).abs() < 1e-12);
        assert!((s.bins[29].topic_difference().unwrap() + 0.8).abs() < 1e-12);
    }

    #[test]
    fn scenario_file_round_trip_and_validation() {
        let s = ScenarioConfig::preset("neutralising", 6).unwrap();
        let back = ScenarioConfig::from_toml_str(&s.to_toml_string()).unwrap();
        assert_eq!(back.bins.len(), 6);
        assert_eq!(back.name, "neutralising");
        let bad = "name = \"x\"\nfeed_batch_size = 8\n[[bins]]\nbin = 0\ninterest_share = 0.5\nneutral_share = 0.5\nother_share = 0.5\nstance_split = 0.5\n";
        assert!(ScenarioConfig::from_toml_str(bad).is_err());
        let out_of_order = "name = \"x\"\n[[bins]]\nbin = 1\ninterest_share = 1.0\nneutral_share = 0.0\nother_share = 0.0\nstance_split = 0.5\n";
        assert!(ScenarioConfig::from_toml_str(out_of_order).is_err());
    }
}
