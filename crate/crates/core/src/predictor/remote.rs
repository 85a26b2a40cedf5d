//! HTTP client for an external text-model annotator, with a shared cache.
//!
//! Wire protocol: `POST <endpoint>` with a `text/plain; charset=utf-8` body
//! holding the system preamble, a blank line and the user prompt. Any 2xx
//! reply body is handed to [`parse_response`]. Non-2xx statuses, transport
//! failures and unparseable replies all count as failed attempts.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex, RwLock};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::agent::UserProfile;
use crate::catalog::{Stance, TopicId, VideoRecord};

use super::{parse_response, wire_body, Annotation, Annotator, PredictorError, TopicClass};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteConfig {
    pub endpoint: String,
    #[serde(default = "default_timeout")]
    pub timeout_s: f64,
    /// Extra attempts after the first one.
    #[serde(default = "default_retries")]
    pub retries: usize,
    /// Maximum requests in flight across all agents.
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    #[serde(default)]
    pub cache_path: Option<PathBuf>,
}

fn default_timeout() -> f64 {
    30.0
}

fn default_retries() -> usize {
    2
}

fn default_concurrency() -> usize {
    4
}

impl RemoteConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            timeout_s: default_timeout(),
            retries: default_retries(),
            concurrency: default_concurrency(),
            cache_path: None,
        }
    }

    pub fn validate(&self) -> Result<(), PredictorError> {
        if !self.endpoint.starts_with("http://") && !self.endpoint.starts_with("https://") {
            return Err(PredictorError::Config(format!(
                "endpoint `{}` is not an http(s) URL",
                self.endpoint
            )));
        }
        if !(self.timeout_s > 0.0) {
            return Err(PredictorError::Config("timeout_s must be positive".into()));
        }
        if self.concurrency == 0 {
            return Err(PredictorError::Config(
                "concurrency must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CacheKey {
    pub video_id: String,
    pub topic: TopicId,
}

type Slot = Arc<Mutex<Option<Annotation>>>;

/// Annotations keyed by `(video_id, topic)`. Lookups take a shared lock; a
/// miss serializes callers of the same key on that key's slot so that only
/// one of them reaches the remote service.
#[derive(Debug, Default)]
pub struct AnnotationCache {
    slots: RwLock<HashMap<CacheKey, Slot>>,
}

impl AnnotationCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn slot(&self, key: &CacheKey) -> Slot {
        if let Some(s) = self.slots.read().expect("cache lock poisoned").get(key) {
            return s.clone();
        }
        self.slots
            .write()
            .expect("cache lock poisoned")
            .entry(key.clone())
            .or_default()
            .clone()
    }

    pub fn get(&self, key: &CacheKey) -> Option<Annotation> {
        let slot = self
            .slots
            .read()
            .expect("cache lock poisoned")
            .get(key)
            .cloned()?;
        let value = *slot.lock().expect("cache slot poisoned");
        value
    }

    pub fn insert(&self, key: CacheKey, annotation: Annotation) {
        *self.slot(&key).lock().expect("cache slot poisoned") = Some(annotation);
    }

    /// Returns the cached value or runs `fill` once under the key's slot lock.
    pub fn get_or_try_fill<F>(&self, key: &CacheKey, fill: F) -> Result<Annotation, PredictorError>
    where
        F: FnOnce() -> Result<Annotation, PredictorError>,
    {
        let slot = self.slot(key);
        let mut guard = slot.lock().expect("cache slot poisoned");
        if let Some(a) = *guard {
            return Ok(a);
        }
        let a = fill()?;
        *guard = Some(a);
        Ok(a)
    }

    pub fn entries(&self) -> Vec<(CacheKey, Annotation)> {
        let map = self.slots.read().expect("cache lock poisoned");
        let mut out: Vec<(CacheKey, Annotation)> = map
            .iter()
            .filter_map(|(k, s)| (*s.lock().expect("cache slot poisoned")).map(|a| (k.clone(), a)))
            .collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    pub fn len(&self) -> usize {
        self.entries().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// One `video_id \t topic \t topic_class \t stance` record per line.
    pub fn save(&self, path: &Path) -> Result<(), PredictorError> {
        let mut out = BufWriter::new(File::create(path)?);
        for (k, a) in self.entries() {
            writeln!(
                out,
                "{}\t{}\t{}\t{}",
                k.video_id,
                k.topic,
                a.topic_class(),
                a.stance()
            )?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, PredictorError> {
        let cache = Self::new();
        let reader = BufReader::new(File::open(path)?);
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let bad =
                |m: String| PredictorError::Config(format!("{}:{}: {m}", path.display(), n + 1));
            let cols: Vec<&str> = line.split('\t').collect();
            let [video_id, topic, class, stance] = cols[..] else {
                return Err(bad("expected 4 tab-separated fields".into()));
            };
            let topic: TopicId = topic.parse().map_err(bad)?;
            let class: TopicClass = class.parse().map_err(bad)?;
            let stance: Stance = stance.parse().map_err(bad)?;
            let a = Annotation::new(class, stance).map_err(bad)?;
            cache.insert(
                CacheKey {
                    video_id: video_id.to_string(),
                    topic,
                },
                a,
            );
        }
        Ok(cache)
    }
}

/// Counting semaphore bounding in-flight requests.
#[derive(Debug)]
struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Gate {
    fn new(n: usize) -> Self {
        Self {
            free: Mutex::new(n),
            cv: Condvar::new(),
        }
    }

    fn run<T>(&self, f: impl FnOnce() -> T) -> T {
        {
            let mut free = self.free.lock().expect("gate poisoned");
            while *free == 0 {
                free = self.cv.wait(free).expect("gate poisoned");
            }
            *free -= 1;
        }
        let out = f();
        *self.free.lock().expect("gate poisoned") += 1;
        self.cv.notify_one();
        out
    }
}

/// Shared across agents; clone the `Arc` per user.
pub struct RemotePredictor {
    config: RemoteConfig,
    agent: ureq::Agent,
    cache: Arc<AnnotationCache>,
    gate: Gate,
    calls: AtomicUsize,
}

impl RemotePredictor {
    pub fn new(config: RemoteConfig, cache: Arc<AnnotationCache>) -> Result<Self, PredictorError> {
        config.validate()?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.timeout_s)))
            .http_status_as_error(false)
            .build()
            .into();
        let gate = Gate::new(config.concurrency);
        Ok(Self {
            config,
            agent,
            cache,
            gate,
            calls: AtomicUsize::new(0),
        })
    }

    pub fn cache(&self) -> &Arc<AnnotationCache> {
        &self.cache
    }

    /// Number of HTTP requests issued so far.
    pub fn remote_calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    fn attempt(&self, body: &str, topic: TopicId) -> Result<Annotation, String> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let mut resp = self
            .agent
            .post(&self.config.endpoint)
            .content_type("text/plain; charset=utf-8")
            .send(body)
            .map_err(|e| format!("transport: {e}"))?;
        let status = resp.status();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| format!("body: {e}"))?;
        if !status.is_success() {
            return Err(format!("status {status}"));
        }
        parse_response(&text, topic).map_err(|e| e.to_string())
    }

    pub fn annotate_remote(
        &self,
        video: &VideoRecord,
        profile: &UserProfile,
    ) -> Result<Annotation, PredictorError> {
        let key = CacheKey {
            video_id: video.video_id.clone(),
            topic: profile.topic,
        };
        self.cache.get_or_try_fill(&key, || {
            let body = wire_body(video, profile)?;
            let attempts = self.config.retries + 1;
            let mut last_error = String::new();
            for _ in 0..attempts {
                match self.gate.run(|| self.attempt(&body, profile.topic)) {
                    Ok(a) => return Ok(a),
                    Err(e) => last_error = e,
                }
            }
            Err(PredictorError::RemoteUnavailable {
                attempts,
                last_error,
            })
        })
    }
}

impl Annotator for Arc<RemotePredictor> {
    fn annotate(
        &mut self,
        video: &VideoRecord,
        profile: &UserProfile,
    ) -> Result<Annotation, PredictorError> {
        self.annotate_remote(video, profile)
    }
}
