//! Sock-puppet agents executing the two-phase audit protocol.
//!
//! A user first seeds the platform through search, waits a day, then
//! spends a fixed budget of virtual time on the For You feed every day.

mod clock;
mod log;

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{Catalog, CatalogError, Stance, TopicId, VideoRecord};
use crate::platform::{FeedState, PlatformError, Recommender};
use crate::predictor::{decide, Action, Annotation, Annotator, Phase, PredictorError, SeedStage};
use crate::queries::QueryBook;
use crate::rng::{self, StreamRng};

pub use clock::{ms_to_s, s_to_ms, SessionSchedule, VirtualClock, DAY_S};
pub use log::{format_event, parse_event, read_log, write_log, LogError};

/// Search results considered per query.
pub const SEARCH_LIMIT: usize = 51;
pub const SEED_TARGET: usize = 25;
pub const SESSION_BUDGET_S: f64 = 3600.0;
/// G1 users repeat the polarising seed after this interaction day.
pub const RESEED_AFTER_DAY: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Group {
    /// Seeded with neutral and polarising content; interacts with both.
    G1,
    /// Seeded with polarising content only; interacts with neutral too.
    G2,
    /// Seeded with both stances of one topic; ignores neutral content.
    G3,
}

impl Group {
    pub const ALL: [Group; 3] = [Group::G1, Group::G2, Group::G3];

    pub fn as_str(self) -> &'static str {
        match self {
            Group::G1 => "G1",
            Group::G2 => "G2",
            Group::G3 => "G3",
        }
    }

    pub fn default_days(self) -> u32 {
        match self {
            Group::G1 | Group::G2 => 15,
            Group::G3 => 9,
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Group {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "G1" => Ok(Group::G1),
            "G2" => Ok(Group::G2),
            "G3" => Ok(Group::G3),
            _ => Err(format!("unknown group `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    F,
    M,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: String,
    pub group: Group,
    /// Polarising topic, or cooking for neutral-only baselines.
    pub topic: TopicId,
    pub stance_set: BTreeSet<Stance>,
    pub age_bracket: String,
    pub gender: Gender,
}

impl UserProfile {
    pub fn validate(&self) -> Result<(), String> {
        if self.user_id.is_empty() || self.user_id.chars().any(|c| c.is_whitespace() || c == '/') {
            return Err(format!(
                "user_id `{}` must be nonempty without whitespace or '/'",
                self.user_id
            ));
        }
        if self.stance_set.contains(&Stance::None) {
            return Err(format!(
                "{}: stance_set may only hold support/oppose",
                self.user_id
            ));
        }
        match (self.group, self.topic) {
            (_, TopicId::Other) => Err(format!(
                "{}: topic `other` cannot be a user interest",
                self.user_id
            )),
            (Group::G3, TopicId::UsPolitics) if self.stance_set.len() == 2 => Ok(()),
            (Group::G3, _) => Err(format!(
                "{}: G3 users follow us_politics with both stances",
                self.user_id
            )),
            (Group::G1, TopicId::Cooking) if self.stance_set.is_empty() => Ok(()),
            (_, TopicId::Cooking) => Err(format!(
                "{}: only G1 supports a cooking baseline",
                self.user_id
            )),
            (_, _) if self.stance_set.len() == 1 => Ok(()),
            _ => Err(format!(
                "{}: G1/G2 users hold exactly one stance",
                self.user_id
            )),
        }
    }

    /// Neutral-only baseline users have no polarising interest.
    pub fn is_baseline(&self) -> bool {
        self.topic == TopicId::Cooking
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeedSource {
    Search,
    Foryou,
}

impl fmt::Display for FeedSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeedSource::Search => "search",
            FeedSource::Foryou => "foryou",
        })
    }
}

impl FromStr for FeedSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "search" => Ok(FeedSource::Search),
            "foryou" => Ok(FeedSource::Foryou),
            _ => Err(format!("unknown feed source `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InteractionEvent {
    pub virtual_time_s: f64,
    /// 0 for the initial seed phase, otherwise the interaction day.
    pub session_day: u32,
    pub user_id: String,
    pub video_id: String,
    pub feed_source: FeedSource,
    pub annotation: Annotation,
    pub action: Action,
    pub watch_duration_s: f64,
}

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("{user}: seed starvation for {topic}/{stance}: every query exhausted with {watched} of {target} videos watched")]
    SeedStarvation {
        user: String,
        topic: TopicId,
        stance: Stance,
        watched: usize,
        target: usize,
    },
    #[error("{user}: no seed queries for {topic}/{stance}")]
    MissingQueries {
        user: String,
        topic: TopicId,
        stance: Stance,
    },
    #[error("{user}, day {day}: {source}")]
    Platform {
        user: String,
        day: u32,
        source: PlatformError,
    },
    #[error("{user}: {source}")]
    Predictor {
        user: String,
        source: PredictorError,
    },
    #[error("{user}: {source}")]
    Catalog { user: String, source: CatalogError },
    #[error("invalid profile: {0}")]
    Profile(String),
}

/// Protocol timing and sizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionConfig {
    pub session_budget_s: f64,
    pub bin_width_s: f64,
    pub seed_target: usize,
    pub search_limit: usize,
    pub schedule: SessionSchedule,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            session_budget_s: SESSION_BUDGET_S,
            bin_width_s: 1800.0,
            seed_target: SEED_TARGET,
            search_limit: SEARCH_LIMIT,
            schedule: SessionSchedule::default(),
        }
    }
}

impl SessionConfig {
    pub fn bins_per_session(&self) -> usize {
        (self.session_budget_s / self.bin_width_s).ceil().max(1.0) as usize
    }

    /// Global bin index of an in-session offset on interaction day `day`.
    pub fn bin_index(&self, day: u32, in_session_s: f64) -> usize {
        let per = self.bins_per_session();
        let within = ((in_session_s / self.bin_width_s).floor().max(0.0) as usize).min(per - 1);
        (day as usize - 1) * per + within
    }
}

/// One user's run: owns its clock, feed state and log.
pub struct Agent<'a> {
    profile: UserProfile,
    catalog: &'a Catalog,
    recommender: &'a Recommender,
    queries: &'a QueryBook,
    annotator: Box<dyn Annotator + Send + 'a>,
    feed: FeedState,
    clock: VirtualClock,
    config: SessionConfig,
    query_rng: StreamRng,
    delay_rng: StreamRng,
    seed_watched: HashSet<String>,
    predictor_failures: usize,
    events: Vec<InteractionEvent>,
}

impl<'a> Agent<'a> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        seed: u64,
        profile: UserProfile,
        catalog: &'a Catalog,
        recommender: &'a Recommender,
        queries: &'a QueryBook,
        annotator: Box<dyn Annotator + Send + 'a>,
        config: SessionConfig,
    ) -> Result<Self, AgentError> {
        profile.validate().map_err(AgentError::Profile)?;
        let feed = crate::platform::register_user(
            seed,
            &profile.user_id,
            profile.topic,
            recommender.exploration_rate(),
        );
        let query_rng = rng::stream(seed, &profile.user_id, "seed-queries");
        let delay_rng = rng::stream(seed, &profile.user_id, "skip-delay");
        Ok(Self {
            profile,
            catalog,
            recommender,
            queries,
            annotator,
            feed,
            clock: VirtualClock::at_ms(config.schedule.seed_start_ms()),
            config,
            query_rng,
            delay_rng,
            seed_watched: HashSet::new(),
            predictor_failures: 0,
            events: Vec::new(),
        })
    }

    pub fn profile(&self) -> &UserProfile {
        &self.profile
    }

    pub fn clock(&self) -> VirtualClock {
        self.clock
    }

    pub fn feed_state(&self) -> &FeedState {
        &self.feed
    }

    pub fn events(&self) -> &[InteractionEvent] {
        &self.events
    }

    pub fn into_events(self) -> Vec<InteractionEvent> {
        self.events
    }

    /// Annotations that failed and were treated as skips.
    pub fn predictor_failures(&self) -> usize {
        self.predictor_failures
    }

    fn annotate(&mut self, video: &VideoRecord) -> Result<Option<Annotation>, AgentError> {
        match self.annotator.annotate(video, &self.profile) {
            Ok(a) => Ok(Some(a)),
            Err(PredictorError::Parse(_) | PredictorError::RemoteUnavailable { .. }) => {
                self.predictor_failures += 1;
                Ok(None)
            }
            Err(source) => Err(AgentError::Predictor {
                user: self.profile.user_id.clone(),
                source,
            }),
        }
    }

    fn log(
        &mut self,
        day: u32,
        source: FeedSource,
        video: &VideoRecord,
        annotation: Annotation,
        action: Action,
        dur_ms: u64,
    ) {
        self.events.push(InteractionEvent {
            virtual_time_s: self.clock.now_s(),
            session_day: day,
            user_id: self.profile.user_id.clone(),
            video_id: video.video_id.clone(),
            feed_source: source,
            annotation,
            action,
            watch_duration_s: ms_to_s(dur_ms),
        });
        self.clock.advance_ms(dur_ms);
    }

    fn seed_targets(&self, stage: SeedStage) -> Vec<(TopicId, Stance)> {
        match stage {
            SeedStage::Neutral => vec![(TopicId::Cooking, Stance::None)],
            SeedStage::Polarising => self
                .profile
                .stance_set
                .iter()
                .map(|&s| (self.profile.topic, s))
                .collect(),
        }
    }

    /// Seeds one stage through search. With several targets (mixed-polarity
    /// users) the stance alternates strictly per query draw and only videos
    /// annotated with the drawn stance count toward it.
    fn seed_stage(&mut self, stage: SeedStage, day: u32) -> Result<usize, AgentError> {
        let targets = self.seed_targets(stage);
        let goal = self.config.seed_target;
        let mut watched = vec![0usize; targets.len()];
        let mut exhausted: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); targets.len()];
        let lists: Vec<Vec<String>> = targets
            .iter()
            .map(|&(t, s)| self.queries.get(t, s).to_vec())
            .collect();
        for (k, &(topic, stance)) in targets.iter().enumerate() {
            if lists[k].is_empty() {
                return Err(AgentError::MissingQueries {
                    user: self.profile.user_id.clone(),
                    topic,
                    stance,
                });
            }
        }
        let mut turn = 0usize;
        loop {
            let open: Vec<usize> = (0..targets.len()).filter(|&k| watched[k] < goal).collect();
            if open.is_empty() {
                break;
            }
            let k = open[turn % open.len()];
            turn += 1;
            let (topic, stance) = targets[k];
            let live: Vec<usize> = (0..lists[k].len())
                .filter(|q| !exhausted[k].contains(q))
                .collect();
            if live.is_empty() {
                return Err(AgentError::SeedStarvation {
                    user: self.profile.user_id.clone(),
                    topic,
                    stance,
                    watched: watched[k],
                    target: goal,
                });
            }
            let q = live[self.query_rng.random_range(0..live.len())];
            let results = self
                .catalog
                .search(&lists[k][q], self.config.search_limit)
                .map_err(|source| AgentError::Catalog {
                    user: self.profile.user_id.clone(),
                    source,
                })?;
            let mut new = 0;
            for video in results {
                if watched[k] >= goal {
                    break;
                }
                if self.seed_watched.contains(&video.video_id) {
                    continue;
                }
                let Some(annotation) = self.annotate(video)? else {
                    continue;
                };
                if decide(&annotation, video, &self.profile, Phase::Seed(stage))
                    != Action::WatchLikeBookmark
                {
                    continue;
                }
                if stage == SeedStage::Polarising && annotation.stance() != stance {
                    continue;
                }
                self.seed_watched.insert(video.video_id.clone());
                self.recommender
                    .record_feedback(&mut self.feed, video, Action::WatchLikeBookmark);
                self.log(
                    day,
                    FeedSource::Search,
                    video,
                    annotation,
                    Action::WatchLikeBookmark,
                    s_to_ms(video.duration_s),
                );
                watched[k] += 1;
                new += 1;
            }
            if new == 0 {
                exhausted[k].insert(q);
            }
        }
        Ok(watched.iter().sum())
    }

    /// Initial seeding on day 0 followed by the wait.
    pub fn run_seed_phase(&mut self) -> Result<usize, AgentError> {
        let mut n = 0;
        if self.profile.group == Group::G1 {
            n += self.seed_stage(SeedStage::Neutral, 0)?;
        }
        if !self.profile.is_baseline() {
            n += self.seed_stage(SeedStage::Polarising, 0)?;
        }
        self.clock
            .advance_ms(self.config.schedule.wait_days * DAY_S * 1000);
        Ok(n)
    }

    /// Additional polarising seed, logged under the day it follows.
    pub fn run_reseed(&mut self, after_day: u32) -> Result<usize, AgentError> {
        if self.profile.is_baseline() {
            return Ok(0);
        }
        self.seed_stage(SeedStage::Polarising, after_day)
    }

    /// One daily For You session. Returns the number of events logged.
    pub fn run_interaction_day(&mut self, day: u32) -> Result<usize, AgentError> {
        assert!(day >= 1, "interaction days are 1-based");
        let start_ms = self.config.schedule.session_start_ms(day);
        self.clock.advance_to_ms(start_ms);
        let start_ms = self.clock.now_ms();
        let budget_ms = s_to_ms(self.config.session_budget_s);
        let before = self.events.len();
        'session: loop {
            let elapsed = self.clock.now_ms() - start_ms;
            let bin = self.config.bin_index(day, ms_to_s(elapsed));
            let batch = self
                .recommender
                .next_batch(self.catalog, bin, &mut self.feed)
                .map_err(|source| AgentError::Platform {
                    user: self.profile.user_id.clone(),
                    day,
                    source,
                })?;
            for video in batch {
                if self.clock.now_ms() - start_ms >= budget_ms {
                    break 'session;
                }
                let (annotation, action) = match self.annotate(video)? {
                    Some(a) => (a, decide(&a, video, &self.profile, Phase::Interaction)),
                    None => (Annotation::other(), Action::Skip),
                };
                let dur_ms = match action {
                    Action::WatchLikeBookmark => s_to_ms(video.duration_s),
                    Action::Skip => self.delay_rng.random_range(1000..=2000),
                };
                self.recommender
                    .record_feedback(&mut self.feed, video, action);
                self.log(day, FeedSource::Foryou, video, annotation, action, dur_ms);
            }
            if self.clock.now_ms() - start_ms >= budget_ms {
                break;
            }
        }
        Ok(self.events.len() - before)
    }

    /// Seed, wait, then `days` sessions; G1 users re-seed after day 3.
    pub fn run_protocol(&mut self, days: u32) -> Result<(), AgentError> {
        self.run_seed_phase()?;
        for day in 1..=days {
            self.run_interaction_day(day)?;
            if self.profile.group == Group::G1 && day == RESEED_AFTER_DAY {
                self.run_reseed(day)?;
            }
        }
        Ok(())
    }
}
