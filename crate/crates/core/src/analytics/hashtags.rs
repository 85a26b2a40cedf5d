//! Topic popularity from the hashtags of seed-phase videos.
//!
//! For each topic, hashtags of the distinct videos watched while seeding
//! are counted, generic platform tags are dropped, the `k` most common are
//! kept (ties broken alphabetically) and their platform-wide popularity is
//! summed.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use super::AnalyticsError;
use crate::agent::{FeedSource, InteractionEvent};
use crate::catalog::{Catalog, TopicId};
use crate::predictor::{Action, TopicClass};

pub const DEFAULT_BLOCKLIST: [&str; 8] = [
    "fyp",
    "foryou",
    "foryoupage",
    "viral",
    "trending",
    "tiktok",
    "fy",
    "xyzbca",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TopicHashtags {
    /// Kept hashtags with their occurrence counts, most common first.
    pub top: Vec<(String, u64)>,
    pub popularity: u64,
}

/// `seed_events` pairs each event with the interest topic of its user.
pub fn hashtag_popularity<'e>(
    seed_events: impl IntoIterator<Item = (TopicId, &'e InteractionEvent)>,
    catalog: &Catalog,
    blocklist: &BTreeSet<String>,
    k: usize,
) -> Result<BTreeMap<TopicId, TopicHashtags>, AnalyticsError> {
    let mut videos: BTreeMap<TopicId, BTreeSet<&str>> = BTreeMap::new();
    for (interest, e) in seed_events {
        if e.feed_source != FeedSource::Search || e.action != Action::WatchLikeBookmark {
            continue;
        }
        let topic = match e.annotation.topic_class() {
            TopicClass::Interest => interest,
            TopicClass::Neutral => TopicId::Cooking,
            TopicClass::Other => continue,
        };
        videos.entry(topic).or_default().insert(e.video_id.as_str());
    }

    let mut out = BTreeMap::new();
    for (topic, ids) in videos {
        let mut counts: HashMap<&str, u64> = HashMap::new();
        for id in ids {
            let v = catalog.get(id).ok_or_else(|| {
                AnalyticsError::InvalidExperiment(format!("video {id} is not in the catalog"))
            })?;
            for tag in &v.hashtags {
                if !blocklist.contains(tag.as_str()) {
                    *counts.entry(tag.as_str()).or_insert(0) += 1;
                }
            }
        }
        let mut ranked: Vec<(&str, u64)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        ranked.truncate(k);
        let popularity = ranked
            .iter()
            .map(|(t, _)| catalog.hashtag_popularity().get(*t).copied().unwrap_or(0))
            .sum();
        out.insert(
            topic,
            TopicHashtags {
                top: ranked
                    .into_iter()
                    .map(|(t, c)| (t.to_string(), c))
                    .collect(),
                popularity,
            },
        );
    }
    Ok(out)
}
