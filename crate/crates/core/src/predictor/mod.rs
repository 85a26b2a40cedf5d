//! User interaction predictor.
//!
//! Annotates each encountered video with a topic class and stance relative
//! to the user's assigned topic, then decides between a full
//! watch-like-bookmark and a skip. Two annotators are provided: a
//! ground-truth oracle with calibrated error injection, and a remote
//! text-model client speaking a plain HTTP protocol.

mod prompt;
mod remote;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{Group, UserProfile};
use crate::catalog::{Stance, TopicId, VideoRecord};
use crate::rng::StreamRng;

pub use prompt::{build_prompt, parse_response, prompt_topic_name, wire_body, SYSTEM_PREAMBLE};
pub use remote::{AnnotationCache, CacheKey, RemoteConfig, RemotePredictor};

/// Videos longer than this are skipped without annotation mattering.
pub const MAX_WATCH_DURATION_S: f64 = 300.0;

#[derive(Debug, Error)]
pub enum PredictorError {
    #[error("no annotation prompt exists for topic {0}")]
    UnsupportedTopic(TopicId),
    #[error("unparseable response: {0}")]
    Parse(String),
    #[error("remote annotator unavailable after {attempts} attempt(s): {last_error}")]
    RemoteUnavailable { attempts: usize, last_error: String },
    #[error("invalid predictor config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopicClass {
    Interest,
    Neutral,
    Other,
}

impl TopicClass {
    pub const ALL: [TopicClass; 3] = [TopicClass::Interest, TopicClass::Neutral, TopicClass::Other];

    pub fn as_str(self) -> &'static str {
        match self {
            TopicClass::Interest => "interest",
            TopicClass::Neutral => "neutral",
            TopicClass::Other => "other",
        }
    }
}

impl fmt::Display for TopicClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TopicClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TopicClass::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown topic class `{s}`"))
    }
}

/// Topic class plus stance. Interest carries support or oppose; every
/// other class carries `none`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Annotation {
    topic_class: TopicClass,
    stance: Stance,
}

impl Annotation {
    pub fn new(topic_class: TopicClass, stance: Stance) -> Result<Self, String> {
        let ok = match topic_class {
            TopicClass::Interest => stance != Stance::None,
            _ => stance == Stance::None,
        };
        if ok {
            Ok(Self {
                topic_class,
                stance,
            })
        } else {
            Err(format!(
                "stance {stance} is not valid for class {topic_class}"
            ))
        }
    }

    pub fn interest(stance: Stance) -> Self {
        assert!(stance != Stance::None, "interest annotations need a side");
        Self {
            topic_class: TopicClass::Interest,
            stance,
        }
    }

    pub fn neutral() -> Self {
        Self {
            topic_class: TopicClass::Neutral,
            stance: Stance::None,
        }
    }

    pub fn other() -> Self {
        Self {
            topic_class: TopicClass::Other,
            stance: Stance::None,
        }
    }

    pub fn topic_class(&self) -> TopicClass {
        self.topic_class
    }

    pub fn stance(&self) -> Stance {
        self.stance
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    WatchLikeBookmark,
    Skip,
}

impl Action {
    pub fn as_str(self) -> &'static str {
        match self {
            Action::WatchLikeBookmark => "watch_like_bookmark",
            Action::Skip => "skip",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Action {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "watch_like_bookmark" => Ok(Action::WatchLikeBookmark),
            "skip" => Ok(Action::Skip),
            _ => Err(format!("unknown action `{s}`")),
        }
    }
}

/// Which part of the audit protocol the decision is made in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Seeding through search, targeting either the neutral topic or the
    /// user's polarising topic.
    Seed(SeedStage),
    Interaction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedStage {
    Neutral,
    Polarising,
}

/// Error injection for the oracle annotator.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    topic_error_rate: f64,
    stance_error_rate: f64,
    rng: StreamRng,
}

impl NoiseModel {
    pub fn new(
        topic_error_rate: f64,
        stance_error_rate: f64,
        rng: StreamRng,
    ) -> Result<Self, PredictorError> {
        for (name, p) in [
            ("topic_error_rate", topic_error_rate),
            ("stance_error_rate", stance_error_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(PredictorError::Config(format!(
                    "{name} must be in [0, 1], got {p}"
                )));
            }
        }
        Ok(Self {
            topic_error_rate,
            stance_error_rate,
            rng,
        })
    }

    pub fn noiseless(rng: StreamRng) -> Self {
        Self {
            topic_error_rate: 0.0,
            stance_error_rate: 0.0,
            rng,
        }
    }
}

/// The correct annotation of `video` for a user interested in `topic`.
pub fn ground_truth(video: &VideoRecord, topic: TopicId) -> Annotation {
    match video.true_topic {
        TopicId::Cooking => Annotation::neutral(),
        t if t == topic => Annotation::interest(video.true_stance),
        _ => Annotation::other(),
    }
}

pub fn annotate_oracle(
    video: &VideoRecord,
    profile: &UserProfile,
    noise: &mut NoiseModel,
) -> Annotation {
    let truth = ground_truth(video, profile.topic);
    // Both draws happen unconditionally so a stream's position does not
    // depend on the outcome.
    let topic_roll: f64 = noise.rng.random();
    let topic_pick: bool = noise.rng.random();
    let stance_roll: f64 = noise.rng.random();
    let stance_pick: bool = noise.rng.random();

    let class = if topic_roll < noise.topic_error_rate {
        let wrong: Vec<TopicClass> = TopicClass::ALL
            .into_iter()
            .filter(|c| *c != truth.topic_class)
            .collect();
        wrong[usize::from(topic_pick)]
    } else {
        truth.topic_class
    };
    match class {
        TopicClass::Interest => {
            let stance = if truth.topic_class == TopicClass::Interest {
                if stance_roll < noise.stance_error_rate {
                    truth.stance.opposite()
                } else {
                    truth.stance
                }
            } else if stance_pick {
                Stance::Support
            } else {
                Stance::Oppose
            };
            Annotation::interest(stance)
        }
        TopicClass::Neutral => Annotation::neutral(),
        TopicClass::Other => Annotation::other(),
    }
}

/// Watch-like-bookmark or skip. Livestreams and videos over five minutes
/// are always skipped.
pub fn decide(
    annotation: &Annotation,
    video: &VideoRecord,
    profile: &UserProfile,
    phase: Phase,
) -> Action {
    if video.is_livestream || video.duration_s > MAX_WATCH_DURATION_S {
        return Action::Skip;
    }
    let interest_match = annotation.topic_class == TopicClass::Interest
        && profile.stance_set.contains(&annotation.stance);
    let neutral = annotation.topic_class == TopicClass::Neutral;
    let watch = match phase {
        Phase::Interaction => {
            interest_match || (neutral && matches!(profile.group, Group::G1 | Group::G2))
        }
        Phase::Seed(SeedStage::Polarising) => interest_match,
        Phase::Seed(SeedStage::Neutral) => neutral && profile.group == Group::G1,
    };
    if watch {
        Action::WatchLikeBookmark
    } else {
        Action::Skip
    }
}

/// Anything that can annotate a video for a user.
pub trait Annotator {
    fn annotate(
        &mut self,
        video: &VideoRecord,
        profile: &UserProfile,
    ) -> Result<Annotation, PredictorError>;
}

/// Ground-truth annotator with error injection.
pub struct OracleAnnotator {
    noise: NoiseModel,
}

impl OracleAnnotator {
    pub fn new(noise: NoiseModel) -> Self {
        Self { noise }
    }
}

impl Annotator for OracleAnnotator {
    fn annotate(
        &mut self,
        video: &VideoRecord,
        profile: &UserProfile,
    ) -> Result<Annotation, PredictorError> {
        Ok(annotate_oracle(video, profile, &mut self.noise))
    }
}
