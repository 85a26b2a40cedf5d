//! Predictor accuracy on a labeled 350-video fixture.
//!
//! The fixture holds 25 support and 25 oppose videos per polarising topic,
//! 50 cooking videos and 100 unrelated ones. For each polarising topic a
//! user interested in it annotates all 350 videos; topic accuracy counts
//! correct three-way classes, and stance accuracy is measured on that
//! topic's 50 videos only, where a topic miss also counts as a stance miss.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::agent::{Gender, Group, UserProfile};
use crate::catalog::{
    generate_catalog, Catalog, CatalogError, CatalogSpec, CategoryCount, Stance, TopicId,
    VideoRecord,
};
use crate::experiment::PredictorConfig;
use crate::predictor::{
    ground_truth, AnnotationCache, Annotator, NoiseModel, OracleAnnotator, PredictorError,
    RemotePredictor,
};
use crate::rng;

pub const FIXTURE_SIZE: usize = 350;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("fixture shape: {0}")]
    FixtureShape(String),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Predictor(#[from] PredictorError),
    #[error("invalid predictor config: {0}")]
    Config(String),
}

fn expected_shape() -> BTreeMap<(TopicId, Stance), usize> {
    let mut m = BTreeMap::new();
    for t in TopicId::POLARISING {
        m.insert((t, Stance::Support), 25);
        m.insert((t, Stance::Oppose), 25);
    }
    m.insert((TopicId::Cooking, Stance::None), 50);
    m.insert((TopicId::Other, Stance::None), 100);
    m
}

pub fn check_fixture_shape(videos: &[VideoRecord]) -> Result<(), EvalError> {
    let mut seen: BTreeMap<(TopicId, Stance), usize> = BTreeMap::new();
    for v in videos {
        *seen.entry((v.true_topic, v.true_stance)).or_insert(0) += 1;
    }
    let want = expected_shape();
    if videos.len() != FIXTURE_SIZE || seen != want {
        let describe = |m: &BTreeMap<(TopicId, Stance), usize>| {
            m.iter()
                .map(|((t, s), n)| format!("{t}/{s}={n}"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        return Err(EvalError::FixtureShape(format!(
            "expected {FIXTURE_SIZE} videos ({}), found {} ({})",
            describe(&want),
            videos.len(),
            describe(&seen)
        )));
    }
    Ok(())
}

/// A deterministic fixture of the required shape drawn from the default
/// catalog generator, short non-live videos only.
pub fn make_eval_fixture(seed: u64) -> Result<Vec<VideoRecord>, EvalError> {
    let spec = CatalogSpec {
        counts: expected_shape()
            .into_iter()
            .map(|((topic, stance), n)| CategoryCount {
                topic,
                stance,
                count: n as i64,
            })
            .collect(),
        long_video_fraction: 0.0,
        livestream_fraction: 0.0,
        ..CatalogSpec::default()
    };
    let mut videos = generate_catalog(&spec, seed)?.videos().to_vec();
    for (i, v) in videos.iter_mut().enumerate() {
        v.video_id = format!("e{i:03}");
    }
    Ok(videos)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopicAccuracy {
    pub topic: TopicId,
    pub topic_correct: usize,
    pub topic_total: usize,
    pub stance_correct: usize,
    pub stance_total: usize,
}

impl TopicAccuracy {
    pub fn topic_accuracy(&self) -> f64 {
        self.topic_correct as f64 / self.topic_total as f64
    }

    pub fn stance_accuracy(&self) -> f64 {
        self.stance_correct as f64 / self.stance_total as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub rows: Vec<TopicAccuracy>,
    pub remote_calls: usize,
}

impl EvalReport {
    /// Correct topic classes over every annotation made.
    pub fn pooled_topic(&self) -> (usize, usize) {
        self.rows
            .iter()
            .fold((0, 0), |(c, n), r| (c + r.topic_correct, n + r.topic_total))
    }

    pub fn pooled_stance(&self) -> (usize, usize) {
        self.rows.iter().fold((0, 0), |(c, n), r| {
            (c + r.stance_correct, n + r.stance_total)
        })
    }

    pub fn table(&self) -> String {
        let mut s = format!("{:<14} {:>10} {:>10}\n", "topic", "topic_acc", "stance_acc");
        for r in &self.rows {
            s.push_str(&format!(
                "{:<14} {:>9.1}% {:>9.1}%\n",
                r.topic.as_str(),
                100.0 * r.topic_accuracy(),
                100.0 * r.stance_accuracy()
            ));
        }
        let (c, n) = self.pooled_topic();
        let (sc, sn) = self.pooled_stance();
        s.push_str(&format!(
            "{:<14} {:>9.1}% {:>9.1}%\n",
            "pooled",
            100.0 * c as f64 / n as f64,
            100.0 * sc as f64 / sn as f64
        ));
        s
    }
}

fn eval_profile(topic: TopicId) -> UserProfile {
    UserProfile {
        user_id: format!("eval-{topic}"),
        group: Group::G2,
        topic,
        stance_set: [Stance::Support].into_iter().collect(),
        age_bracket: "18-24".into(),
        gender: Gender::F,
    }
}

pub fn evaluate(
    videos: &[VideoRecord],
    predictor: &PredictorConfig,
    seed: u64,
) -> Result<EvalReport, EvalError> {
    check_fixture_shape(videos)?;
    let remote = match predictor {
        PredictorConfig::Remote(r) => Some(Arc::new(RemotePredictor::new(
            r.clone(),
            Arc::new(AnnotationCache::new()),
        )?)),
        PredictorConfig::Oracle { .. } => None,
    };
    let mut rows = Vec::new();
    for topic in TopicId::POLARISING {
        let profile = eval_profile(topic);
        let mut annotator: Box<dyn Annotator> = match (predictor, &remote) {
            (_, Some(r)) => Box::new(Arc::clone(r)),
            (
                PredictorConfig::Oracle {
                    topic_error_rate,
                    stance_error_rate,
                },
                None,
            ) => Box::new(OracleAnnotator::new(NoiseModel::new(
                *topic_error_rate,
                *stance_error_rate,
                rng::stream(seed, &profile.user_id, "oracle"),
            )?)),
            (PredictorConfig::Remote(_), None) => unreachable!("remote predictor is built above"),
        };
        let mut row = TopicAccuracy {
            topic,
            topic_correct: 0,
            topic_total: 0,
            stance_correct: 0,
            stance_total: 0,
        };
        for v in videos {
            let truth = ground_truth(v, topic);
            let got = annotator.annotate(v, &profile)?;
            row.topic_total += 1;
            row.topic_correct += usize::from(got.topic_class() == truth.topic_class());
            if v.true_topic == topic {
                row.stance_total += 1;
                row.stance_correct += usize::from(got == truth);
            }
        }
        rows.push(row);
    }
    Ok(EvalReport {
        rows,
        remote_calls: remote.map_or(0, |r| r.remote_calls()),
    })
}

pub fn load_fixture(path: &Path) -> Result<Vec<VideoRecord>, EvalError> {
    let videos = Catalog::read_records(path)?;
    Ok(videos)
}
