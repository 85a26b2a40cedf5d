//! Synthetic video universe with ground-truth labels and keyword search.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::queries::default_queries;
use crate::rng;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("invalid catalog spec: {0}")]
    InvalidSpec(String),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("catalog record {line}: {message}")]
    Record { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopicId {
    Flatearth,
    Vaccines,
    ClimateChange,
    UsPolitics,
    Cooking,
    Other,
}

impl TopicId {
    pub const ALL: [TopicId; 6] = [
        TopicId::Flatearth,
        TopicId::Vaccines,
        TopicId::ClimateChange,
        TopicId::UsPolitics,
        TopicId::Cooking,
        TopicId::Other,
    ];

    pub const POLARISING: [TopicId; 4] = [
        TopicId::Flatearth,
        TopicId::Vaccines,
        TopicId::ClimateChange,
        TopicId::UsPolitics,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TopicId::Flatearth => "flatearth",
            TopicId::Vaccines => "vaccines",
            TopicId::ClimateChange => "climate_change",
            TopicId::UsPolitics => "us_politics",
            TopicId::Cooking => "cooking",
            TopicId::Other => "other",
        }
    }

    pub fn is_polarising(self) -> bool {
        !matches!(self, TopicId::Cooking | TopicId::Other)
    }
}

impl fmt::Display for TopicId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TopicId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TopicId::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown topic `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stance {
    Support,
    Oppose,
    None,
}

impl Stance {
    pub const ALL: [Stance; 3] = [Stance::Support, Stance::Oppose, Stance::None];

    pub fn as_str(self) -> &'static str {
        match self {
            Stance::Support => "support",
            Stance::Oppose => "oppose",
            Stance::None => "none",
        }
    }

    pub fn opposite(self) -> Stance {
        match self {
            Stance::Support => Stance::Oppose,
            Stance::Oppose => Stance::Support,
            Stance::None => Stance::None,
        }
    }
}

impl fmt::Display for Stance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stance::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown stance `{s}`"))
    }
}

/// Whether a `(topic, stance)` pair is a legal label.
pub fn is_valid_label(topic: TopicId, stance: Stance) -> bool {
    topic.is_polarising() != (stance == Stance::None)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoRecord {
    pub video_id: String,
    pub author: String,
    pub description: String,
    pub hashtags: Vec<String>,
    pub transcript: String,
    pub stickers: String,
    pub duration_s: f64,
    pub is_livestream: bool,
    pub true_topic: TopicId,
    pub true_stance: Stance,
    pub popularity_weight: f64,
}

impl VideoRecord {
    fn validate(&self) -> Result<(), String> {
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(format!("{}: duration_s must be positive", self.video_id));
        }
        if !is_valid_label(self.true_topic, self.true_stance) {
            return Err(format!(
                "{}: stance {} is not valid for topic {}",
                self.video_id, self.true_stance, self.true_topic
            ));
        }
        if !(self.popularity_weight >= 0.0 && self.popularity_weight.is_finite()) {
            return Err(format!(
                "{}: popularity_weight must be nonnegative",
                self.video_id
            ));
        }
        if self.video_id.is_empty() || self.video_id.chars().any(char::is_whitespace) {
            return Err(format!(
                "video_id `{}` must be nonempty without whitespace",
                self.video_id
            ));
        }
        Ok(())
    }
}

/// Requested number of videos for one label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryCount {
    pub topic: TopicId,
    pub stance: Stance,
    pub count: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HashtagPool {
    pub tags: Vec<String>,
    /// Platform-wide video count around which each tag's popularity is drawn.
    pub base_popularity: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CatalogSpec {
    pub counts: Vec<CategoryCount>,
    pub duration_min_s: f64,
    pub duration_max_s: f64,
    /// Fraction of non-live videos longer than five minutes.
    pub long_video_fraction: f64,
    pub livestream_fraction: f64,
    /// Log-normal popularity weight: median and log-space sigma.
    pub popularity_median: f64,
    pub popularity_sigma: f64,
    pub hashtag_pools: BTreeMap<TopicId, HashtagPool>,
    pub generic_tags: Vec<String>,
    pub generic_popularity: u64,
    pub generic_tag_probability: f64,
    pub min_tags: usize,
    pub max_tags: usize,
    pub transcript_probability: f64,
    pub sticker_probability: f64,
}

impl Default for CatalogSpec {
    fn default() -> Self {
        let mut counts = Vec::new();
        for topic in TopicId::POLARISING {
            for stance in [Stance::Support, Stance::Oppose] {
                counts.push(CategoryCount {
                    topic,
                    stance,
                    count: 400,
                });
            }
        }
        counts.push(CategoryCount {
            topic: TopicId::Cooking,
            stance: Stance::None,
            count: 1500,
        });
        counts.push(CategoryCount {
            topic: TopicId::Other,
            stance: Stance::None,
            count: 4000,
        });

        // Per-tag base popularity is a tenth of the summed top-10 hashtag
        // popularity measured per topic on the live platform.
        let pool = |tags: &[&str], base: u64| HashtagPool {
            tags: tags.iter().map(|t| t.to_string()).collect(),
            base_popularity: base,
        };
        let hashtag_pools = BTreeMap::from([
            (
                TopicId::Flatearth,
                pool(
                    &[
                        "flatearth",
                        "flatearther",
                        "firmament",
                        "globeearth",
                        "antarctica",
                        "icewall",
                        "earthisflat",
                        "globebusters",
                        "nasalies",
                        "flatearthdebunked",
                        "roundearth",
                        "spacefacts",
                    ],
                    59_370,
                ),
            ),
            (
                TopicId::Vaccines,
                pool(
                    &[
                        "vaccines",
                        "vaccine",
                        "covid",
                        "covidvaccine",
                        "vaxxed",
                        "antivax",
                        "pfizer",
                        "moderna",
                        "immunity",
                        "publichealth",
                        "vaccineinjury",
                        "mrna",
                    ],
                    2_233_060,
                ),
            ),
            (
                TopicId::ClimateChange,
                pool(
                    &[
                        "climatechange",
                        "globalwarming",
                        "climate",
                        "climatecrisis",
                        "greendeal",
                        "co2",
                        "climateaction",
                        "sustainability",
                        "climatehoax",
                        "netzero",
                        "fridaysforfuture",
                        "carbonfootprint",
                    ],
                    119_790,
                ),
            ),
            (
                TopicId::UsPolitics,
                pool(
                    &[
                        "politics",
                        "trump",
                        "maga",
                        "republican",
                        "democrat",
                        "biden",
                        "kamalaharris",
                        "election",
                        "conservative",
                        "liberal",
                        "uspolitics",
                        "politicalnews",
                    ],
                    3_113_970,
                ),
            ),
            (
                TopicId::Cooking,
                pool(
                    &[
                        "cooking",
                        "recipe",
                        "food",
                        "foodtok",
                        "easyrecipe",
                        "dinner",
                        "homecooking",
                        "baking",
                        "pasta",
                        "mealprep",
                        "chef",
                        "foodie",
                    ],
                    17_760_000,
                ),
            ),
            (
                TopicId::Other,
                pool(
                    &[
                        "dance",
                        "comedy",
                        "pets",
                        "travel",
                        "fitness",
                        "gaming",
                        "music",
                        "fashion",
                        "dayinmylife",
                        "skincare",
                        "cars",
                        "football",
                    ],
                    5_000_000,
                ),
            ),
        ]);

        Self {
            counts,
            duration_min_s: 8.0,
            duration_max_s: 180.0,
            long_video_fraction: 0.03,
            livestream_fraction: 0.02,
            popularity_median: 1.0,
            popularity_sigma: 1.0,
            hashtag_pools,
            generic_tags: ["fyp", "foryou", "foryoupage", "viral", "trending"]
                .iter()
                .map(|t| t.to_string())
                .collect(),
            generic_popularity: 1_000_000_000,
            generic_tag_probability: 0.15,
            min_tags: 2,
            max_tags: 4,
            transcript_probability: 0.7,
            sticker_probability: 0.4,
        }
    }
}

impl CatalogSpec {
    pub fn validate(&self) -> Result<(), CatalogError> {
        let bad = |m: String| Err(CatalogError::InvalidSpec(m));
        let mut seen = BTreeSet::new();
        let mut total: i64 = 0;
        for c in &self.counts {
            if c.count < 0 {
                return bad(format!(
                    "negative count {} for {}/{}",
                    c.count, c.topic, c.stance
                ));
            }
            if !is_valid_label(c.topic, c.stance) {
                return bad(format!(
                    "stance {} is not valid for topic {}",
                    c.stance, c.topic
                ));
            }
            if !seen.insert((c.topic, c.stance)) {
                return bad(format!(
                    "duplicate count entry for {}/{}",
                    c.topic, c.stance
                ));
            }
            total += c.count;
        }
        if total == 0 {
            return bad("catalog must contain at least one video".into());
        }
        if !(self.duration_min_s > 0.0 && self.duration_min_s <= self.duration_max_s) {
            return bad("duration bounds must satisfy 0 < min <= max".into());
        }
        if self.duration_max_s > 300.0 {
            return bad("duration_max_s must not exceed 300 s; use long_video_fraction".into());
        }
        for (name, p) in [
            ("long_video_fraction", self.long_video_fraction),
            ("livestream_fraction", self.livestream_fraction),
            ("generic_tag_probability", self.generic_tag_probability),
            ("transcript_probability", self.transcript_probability),
            ("sticker_probability", self.sticker_probability),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must be a probability"));
            }
        }
        if self.long_video_fraction + self.livestream_fraction > 1.0 {
            return bad("long_video_fraction + livestream_fraction must not exceed 1".into());
        }
        if !(self.popularity_median > 0.0
            && self.popularity_sigma >= 0.0
            && self.popularity_sigma.is_finite())
        {
            return bad(
                "popularity_median must be positive and popularity_sigma nonnegative".into(),
            );
        }
        if self.min_tags > self.max_tags {
            return bad("min_tags must not exceed max_tags".into());
        }
        for c in &self.counts {
            if c.count > 0 {
                match self.hashtag_pools.get(&c.topic) {
                    Some(p) if p.tags.len() >= self.max_tags => {}
                    _ => {
                        return bad(format!(
                            "topic {} needs a hashtag pool with at least {} tags",
                            c.topic, self.max_tags
                        ))
                    }
                }
            }
        }
        Ok(())
    }
}

const UNRELATED_PHRASES: &[&str] = &[
    "my morning routine before work",
    "funny cat compilation part 3",
    "trying the viral dance challenge",
    "gym progress after six months",
    "rating every car at the meet",
    "skincare routine for dry winter skin",
    "outfit ideas for a rainy day",
    "road trip vlog day two",
    "reacting to my old videos",
    "ranking the best football goals",
    "guitar cover of a classic song",
    "day in my life as a student",
    "unboxing the new headphones",
    "speedrun attempt gone wrong",
    "prank on my roommate",
    "room makeover on a budget",
    "puppy meets the baby for the first time",
    "hiking the coast at sunrise",
    "street interview asking strangers",
    "minecraft build timelapse",
];

const COOKING_PHRASES: &[&str] = &[
    "easy pasta recipe in 15 minutes",
    "homemade bread for beginners",
    "one pan chicken dinner",
    "how to make the perfect omelette",
    "meal prep for the week",
    "garlic butter steak bites",
    "healthy breakfast ideas",
    "baking chocolate chip cookies",
    "grandma's soup recipe",
    "budget friendly dinner recipes",
];

const TRANSCRIPT_OPENERS: &[&str] = &[
    "okay so today I want to talk about",
    "you guys asked me about",
    "let me tell you something about",
    "real quick, here is the thing about",
];

fn description_phrases(topic: TopicId, stance: Stance) -> Vec<&'static str> {
    match topic {
        TopicId::Other => UNRELATED_PHRASES.to_vec(),
        TopicId::Cooking => {
            let mut v = COOKING_PHRASES.to_vec();
            v.extend(default_queries(topic, stance).unwrap_or(&[]));
            v
        }
        _ => default_queries(topic, stance).unwrap_or(&[]).to_vec(),
    }
}

/// Lowercase alphanumeric tokens, deduplicated.
pub fn tokenize(text: &str) -> BTreeSet<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Immutable after construction; shared read-only across agents.
#[derive(Debug, Clone)]
pub struct Catalog {
    videos: Vec<VideoRecord>,
    by_id: HashMap<String, usize>,
    topic_index: BTreeMap<(TopicId, Stance), Vec<usize>>,
    hashtag_popularity: BTreeMap<String, u64>,
    postings: HashMap<String, Vec<usize>>,
}

impl Catalog {
    pub fn from_records(
        videos: Vec<VideoRecord>,
        hashtag_popularity: BTreeMap<String, u64>,
    ) -> Result<Self, CatalogError> {
        let mut by_id = HashMap::with_capacity(videos.len());
        let mut topic_index: BTreeMap<(TopicId, Stance), Vec<usize>> = BTreeMap::new();
        let mut postings: HashMap<String, Vec<usize>> = HashMap::new();
        let mut popularity = hashtag_popularity;
        for (i, v) in videos.iter().enumerate() {
            v.validate().map_err(|m| CatalogError::Record {
                line: i + 1,
                message: m,
            })?;
            if by_id.insert(v.video_id.clone(), i).is_some() {
                return Err(CatalogError::Record {
                    line: i + 1,
                    message: format!("duplicate video_id {}", v.video_id),
                });
            }
            topic_index
                .entry((v.true_topic, v.true_stance))
                .or_default()
                .push(i);
            for tag in &v.hashtags {
                popularity.entry(tag.clone()).or_insert(0);
            }
            let mut text = v.description.clone();
            for tag in &v.hashtags {
                text.push(' ');
                text.push_str(tag);
            }
            for tok in tokenize(&text) {
                postings.entry(tok).or_default().push(i);
            }
        }
        Ok(Self {
            videos,
            by_id,
            topic_index,
            hashtag_popularity: popularity,
            postings,
        })
    }

    pub fn videos(&self) -> &[VideoRecord] {
        &self.videos
    }

    pub fn len(&self) -> usize {
        self.videos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.videos.is_empty()
    }

    pub fn get(&self, video_id: &str) -> Option<&VideoRecord> {
        self.by_id.get(video_id).map(|&i| &self.videos[i])
    }

    /// Catalog positions of every video with the given label.
    pub fn category(&self, topic: TopicId, stance: Stance) -> &[usize] {
        self.topic_index
            .get(&(topic, stance))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn topic_index(&self) -> impl Iterator<Item = ((TopicId, Stance), Vec<&str>)> + '_ {
        self.topic_index.iter().map(|(k, ids)| {
            (
                *k,
                ids.iter()
                    .map(|&i| self.videos[i].video_id.as_str())
                    .collect(),
            )
        })
    }

    pub fn hashtag_popularity(&self) -> &BTreeMap<String, u64> {
        &self.hashtag_popularity
    }

    /// Keyword search: case-insensitive token overlap between the query and
    /// description plus hashtags, ranked by score, then popularity, then id.
    pub fn search(&self, query: &str, limit: usize) -> Result<Vec<&VideoRecord>, CatalogError> {
        if limit == 0 {
            return Err(CatalogError::InvalidQuery(
                "limit must be at least 1".into(),
            ));
        }
        let tokens = tokenize(query);
        if tokens.is_empty() {
            return Err(CatalogError::InvalidQuery(
                "query has no searchable tokens".into(),
            ));
        }
        let mut scores: HashMap<usize, u32> = HashMap::new();
        for tok in &tokens {
            if let Some(list) = self.postings.get(tok) {
                for &i in list {
                    *scores.entry(i).or_insert(0) += 1;
                }
            }
        }
        let mut ranked: Vec<(usize, u32)> = scores.into_iter().collect();
        ranked.sort_by(|&(a, sa), &(b, sb)| {
            sb.cmp(&sa)
                .then_with(|| {
                    self.videos[b]
                        .popularity_weight
                        .total_cmp(&self.videos[a].popularity_weight)
                })
                .then_with(|| self.videos[a].video_id.cmp(&self.videos[b].video_id))
        });
        Ok(ranked
            .into_iter()
            .take(limit)
            .map(|(i, _)| &self.videos[i])
            .collect())
    }

    pub fn write_records(&self, path: &Path) -> Result<(), CatalogError> {
        let mut out = BufWriter::new(File::create(path)?);
        for v in &self.videos {
            serde_json::to_writer(&mut out, v).map_err(std::io::Error::other)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_hashtag_popularity(&self, path: &Path) -> Result<(), CatalogError> {
        let mut out = BufWriter::new(File::create(path)?);
        for (tag, n) in &self.hashtag_popularity {
            writeln!(out, "{tag}\t{n}")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_records(path: &Path) -> Result<Vec<VideoRecord>, CatalogError> {
        let reader = BufReader::new(File::open(path)?);
        let mut videos = Vec::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let v: VideoRecord = serde_json::from_str(&line).map_err(|e| CatalogError::Record {
                line: n + 1,
                message: e.to_string(),
            })?;
            videos.push(v);
        }
        Ok(videos)
    }

    /// Loads a catalog written by [`Catalog::write_records`], with an optional
    /// hashtag-popularity table.
    pub fn load(records: &Path, popularity: Option<&Path>) -> Result<Self, CatalogError> {
        let videos = Self::read_records(records)?;
        let mut table = BTreeMap::new();
        if let Some(p) = popularity {
            let reader = BufReader::new(File::open(p)?);
            for (n, line) in reader.lines().enumerate() {
                let line = line?;
                let Some((tag, count)) = line.split_once('\t') else {
                    return Err(CatalogError::Record {
                        line: n + 1,
                        message: "expected `<hashtag>\\t<count>`".into(),
                    });
                };
                let count = count.trim().parse().map_err(|_| CatalogError::Record {
                    line: n + 1,
                    message: format!("bad popularity `{count}`"),
                })?;
                table.insert(tag.to_string(), count);
            }
        }
        Self::from_records(videos, table)
    }
}

fn round_ms(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

pub fn generate_catalog(spec: &CatalogSpec, seed: u64) -> Result<Catalog, CatalogError> {
    spec.validate()?;
    let mut rng = rng::stream(seed, "catalog", "generate");
    // libm keeps the log-normal draw bit-identical across build profiles.
    let log_median = libm::log(spec.popularity_median);

    let mut hashtag_popularity = BTreeMap::new();
    for (topic, pool) in &spec.hashtag_pools {
        let mut tag_rng = rng::stream(seed, "catalog-hashtags", topic.as_str());
        for tag in &pool.tags {
            let factor: f64 = tag_rng.random_range(0.75..1.25);
            hashtag_popularity.insert(
                tag.clone(),
                (pool.base_popularity as f64 * factor).round() as u64,
            );
        }
    }
    for tag in &spec.generic_tags {
        hashtag_popularity.insert(tag.clone(), spec.generic_popularity);
    }

    let mut videos = Vec::new();
    let mut next_id = 0usize;
    for entry in &spec.counts {
        let phrases = description_phrases(entry.topic, entry.stance);
        let pool = spec.hashtag_pools.get(&entry.topic);
        for _ in 0..entry.count {
            let mut description = if phrases.is_empty() {
                format!("{} video", entry.topic)
            } else {
                phrases
                    .choose(&mut rng)
                    .copied()
                    .unwrap_or_default()
                    .to_string()
            };
            if rng.random_bool(0.3) {
                description.push_str(" 🔥");
            }

            let mut hashtags: Vec<String> = Vec::new();
            if let Some(pool) = pool {
                let n = rng.random_range(spec.min_tags..=spec.max_tags);
                let mut tags: Vec<&String> = pool.tags.iter().collect();
                tags.shuffle(&mut rng);
                hashtags.extend(tags.into_iter().take(n).cloned());
            }
            for g in &spec.generic_tags {
                if rng.random_bool(spec.generic_tag_probability) {
                    hashtags.push(g.clone());
                }
            }

            let transcript = if rng.random_bool(spec.transcript_probability) {
                let opener = TRANSCRIPT_OPENERS
                    .choose(&mut rng)
                    .copied()
                    .unwrap_or_default();
                let topic_phrase = phrases.choose(&mut rng).copied().unwrap_or("this");
                format!("{opener} {}", topic_phrase.to_lowercase())
            } else {
                String::new()
            };
            let stickers = if rng.random_bool(spec.sticker_probability) {
                phrases
                    .choose(&mut rng)
                    .copied()
                    .unwrap_or_default()
                    .to_uppercase()
            } else {
                String::new()
            };

            let kind: f64 = rng.random();
            let (duration_s, is_livestream) = if kind < spec.livestream_fraction {
                (round_ms(rng.random_range(600.0..=3600.0)), true)
            } else if kind < spec.livestream_fraction + spec.long_video_fraction {
                (round_ms(rng.random_range(300.001..=900.0)), false)
            } else {
                (
                    round_ms(rng.random_range(spec.duration_min_s..=spec.duration_max_s)),
                    false,
                )
            };
            let z: f64 = rng.sample(StandardNormal);
            let popularity_weight = libm::exp(log_median + spec.popularity_sigma * z);
            let author = format!("@creator_{:04}", rng.random_range(0..5000u32));

            videos.push(VideoRecord {
                video_id: format!("v{next_id:06}"),
                author,
                description,
                hashtags,
                transcript,
                stickers,
                duration_s,
                is_livestream,
                true_topic: entry.topic,
                true_stance: entry.stance,
                popularity_weight,
            });
            next_id += 1;
        }
    }
    Catalog::from_records(videos, hashtag_popularity)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> CatalogSpec {
        let mut spec = CatalogSpec::default();
        spec.counts = vec![
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
        for topic in TopicId::POLARISING {
            spec.counts.push(CategoryCount {
                topic,
                stance: Stance::Support,
                count: 25,
            });
            spec.counts.push(CategoryCount {
                topic,
                stance: Stance::Oppose,
                count: 25,
            });
        }
        spec
    }

    fn record(id: &str, description: &str, weight: f64) -> VideoRecord {
        VideoRecord {
            video_id: id.into(),
            author: "@a".into(),
            description: description.into(),
            hashtags: vec![],
            transcript: String::new(),
            stickers: String::new(),
            duration_s: 30.0,
            is_livestream: false,
            true_topic: TopicId::Other,
            true_stance: Stance::None,
            popularity_weight: weight,
        }
    }

    #[test]
    fn requested_counts_are_exact() {
        let cat = generate_catalog(&small_spec(), 7).unwrap();
        assert_eq!(cat.len(), 500);
        assert_eq!(cat.category(TopicId::Flatearth, Stance::Support).len(), 25);
        assert_eq!(cat.category(TopicId::Cooking, Stance::None).len(), 100);
        let indexed: usize = cat.topic_index().map(|(_, ids)| ids.len()).sum();
        assert_eq!(indexed, cat.len());
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_catalog(&small_spec(), 7).unwrap();
        let b = generate_catalog(&small_spec(), 7).unwrap();
        assert_eq!(a.videos(), b.videos());
        let c = generate_catalog(&small_spec(), 8).unwrap();
        assert_ne!(a.videos(), c.videos());
    }

    #[test]
    fn serialized_form_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let (p1, p2) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
        generate_catalog(&small_spec(), 3)
            .unwrap()
            .write_records(&p1)
            .unwrap();
        generate_catalog(&small_spec(), 3)
            .unwrap()
            .write_records(&p2)
            .unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn round_trips_through_files() {
        let dir = tempfile::tempdir().unwrap();
        let cat = generate_catalog(&small_spec(), 3).unwrap();
        let (r, h) = (dir.path().join("c.jsonl"), dir.path().join("h.tsv"));
        cat.write_records(&r).unwrap();
        cat.write_hashtag_popularity(&h).unwrap();
        let back = Catalog::load(&r, Some(&h)).unwrap();
        assert_eq!(back.videos(), cat.videos());
        assert_eq!(back.hashtag_popularity(), cat.hashtag_popularity());
    }

    #[test]
    fn labels_respect_stance_rule() {
        let cat = generate_catalog(&CatalogSpec::default(), 1).unwrap();
        for v in cat.videos() {
            assert!(is_valid_label(v.true_topic, v.true_stance));
            assert!(v.duration_s > 0.0);
            for tag in &v.hashtags {
                assert!(cat.hashtag_popularity().contains_key(tag));
                assert_eq!(tag, &tag.to_lowercase());
            }
        }
    }

    #[test]
    fn negative_or_empty_spec_is_rejected() {
        let mut spec = small_spec();
        spec.counts[0].count = -1;
        assert!(matches!(
            generate_catalog(&spec, 0),
            Err(CatalogError::InvalidSpec(_))
        ));
        let mut spec = small_spec();
        spec.counts.iter_mut().for_each(|c| c.count = 0);
        assert!(matches!(
            generate_catalog(&spec, 0),
            Err(CatalogError::InvalidSpec(_))
        ));
        let mut spec = small_spec();
        spec.counts.push(CategoryCount {
            topic: TopicId::Cooking,
            stance: Stance::Support,
            count: 1,
        });
        assert!(matches!(
            generate_catalog(&spec, 0),
            Err(CatalogError::InvalidSpec(_))
        ));
    }

    #[test]
    fn search_finds_matching_tokens_first() {
        let cat = generate_catalog(&small_spec(), 7).unwrap();
        let hits = cat.search("proof earth is flat", 51).unwrap();
        assert!(!hits.is_empty() && hits.len() <= 51);
        let q = tokenize("proof earth is flat");
        let mut text = hits[0].description.clone();
        text.push(' ');
        text.push_str(&hits[0].hashtags.join(" "));
        assert!(tokenize(&text).intersection(&q).next().is_some());
    }

    #[test]
    fn search_without_matches_is_empty() {
        let cat = generate_catalog(&small_spec(), 7).unwrap();
        assert!(cat.search("zzzqqq xyzzy", 10).unwrap().is_empty());
    }

    #[test]
    fn search_rejects_empty_query_and_zero_limit() {
        let cat = generate_catalog(&small_spec(), 7).unwrap();
        assert!(matches!(
            cat.search("   ", 5),
            Err(CatalogError::InvalidQuery(_))
        ));
        assert!(matches!(
            cat.search("flat", 0),
            Err(CatalogError::InvalidQuery(_))
        ));
    }

    #[test]
    fn search_ties_break_on_weight_then_lower_id() {
        let cat = Catalog::from_records(
            vec![
                record("v2", "flat earth", 1.0),
                record("v1", "flat earth", 1.0),
                record("v0", "flat earth", 0.5),
                record("v3", "earth", 9.0),
            ],
            BTreeMap::new(),
        )
        .unwrap();
        let ids: Vec<&str> = cat
            .search("Flat EARTH", 10)
            .unwrap()
            .iter()
            .map(|v| v.video_id.as_str())
            .collect();
        assert_eq!(ids, ["v1", "v2", "v0", "v3"]);
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let err = Catalog::from_records(
            vec![record("v1", "a", 1.0), record("v1", "b", 1.0)],
            BTreeMap::new(),
        );
        assert!(err.is_err());
    }
}
