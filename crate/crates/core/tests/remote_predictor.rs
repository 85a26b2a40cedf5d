use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use driftlab_core::agent::{Gender, Group, UserProfile};
use driftlab_core::catalog::{Stance, TopicId, VideoRecord};
use driftlab_core::predictor::{
    wire_body, Annotation, AnnotationCache, Annotator, PredictorError, RemoteConfig,
    RemotePredictor, SYSTEM_PREAMBLE,
};

type Handler = dyn Fn(&str) -> (u16, String) + Send + Sync;

struct Server {
    url: String,
    hits: Arc<AtomicUsize>,
    bodies: Arc<Mutex<Vec<(String, String)>>>,
    peak: Arc<AtomicUsize>,
}

fn read_request(stream: &mut TcpStream) -> Option<(String, String)> {
    let mut reader = BufReader::new(stream.try_clone().ok()?);
    let mut headers = String::new();
    let mut len = 0usize;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line).ok()? == 0 {
            return None;
        }
        if line == "\r\n" {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                len = v.trim().parse().ok()?;
            }
        }
        headers.push_str(&line);
    }
    let mut body = vec![0; len];
    reader.read_exact(&mut body).ok()?;
    Some((headers, String::from_utf8(body).ok()?))
}

/// Minimal HTTP/1.1 server; each connection is answered on its own thread.
fn serve(handler: Arc<Handler>, delay: Duration) -> Server {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/annotate", listener.local_addr().unwrap());
    let hits = Arc::new(AtomicUsize::new(0));
    let bodies = Arc::new(Mutex::new(Vec::new()));
    let live = Arc::new(AtomicUsize::new(0));
    let peak = Arc::new(AtomicUsize::new(0));
    let (h, b, l, p) = (hits.clone(), bodies.clone(), live.clone(), peak.clone());
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let (handler, h, b, l, p) =
                (handler.clone(), h.clone(), b.clone(), l.clone(), p.clone());
            thread::spawn(move || {
                let Some((headers, body)) = read_request(&mut stream) else {
                    return;
                };
                let now = l.fetch_add(1, Ordering::SeqCst) + 1;
                p.fetch_max(now, Ordering::SeqCst);
                h.fetch_add(1, Ordering::SeqCst);
                thread::sleep(delay);
                let (status, reply) = handler(&body);
                b.lock().unwrap().push((headers, body));
                l.fetch_sub(1, Ordering::SeqCst);
                let _ = write!(
                    stream,
                    "HTTP/1.1 {status} X\r\nContent-Type: text/plain\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
                    reply.len()
                );
            });
        }
    });
    Server {
        url,
        hits,
        bodies,
        peak,
    }
}

fn video(id: &str) -> VideoRecord {
    VideoRecord {
        video_id: id.into(),
        author: "@a".into(),
        description: "earth is flat".into(),
        hashtags: vec!["flatearth".into()],
        transcript: String::new(),
        stickers: String::new(),
        duration_s: 30.0,
        is_livestream: false,
        true_topic: TopicId::Flatearth,
        true_stance: Stance::Support,
        popularity_weight: 1.0,
    }
}

fn profile(topic: TopicId) -> UserProfile {
    UserProfile {
        user_id: "u".into(),
        group: Group::G2,
        topic,
        stance_set: [Stance::Support].into_iter().collect(),
        age_bracket: "18-24".into(),
        gender: Gender::F,
    }
}

fn predictor(url: &str, retries: usize, concurrency: usize) -> Arc<RemotePredictor> {
    let mut cfg = RemoteConfig::new(url);
    cfg.retries = retries;
    cfg.concurrency = concurrency;
    cfg.timeout_s = 5.0;
    Arc::new(RemotePredictor::new(cfg, Arc::new(AnnotationCache::new())).unwrap())
}

fn answer(body: &str) -> (u16, String) {
    if body.contains("1) political;") {
        (200, "Topic: other\nStance: support".into())
    } else {
        (200, "Topic: flatearth\nStance: support".into())
    }
}

#[test]
fn same_video_and_topic_hits_the_service_once() {
    let server = serve(Arc::new(answer), Duration::ZERO);
    let mut p = predictor(&server.url, 0, 2);
    let v = video("v1");
    let a = p.annotate(&v, &profile(TopicId::Flatearth)).unwrap();
    let b = p.annotate(&v, &profile(TopicId::Flatearth)).unwrap();
    assert_eq!(a, Annotation::interest(Stance::Support));
    assert_eq!(a, b);
    assert_eq!(server.hits.load(Ordering::SeqCst), 1);
    assert_eq!(p.remote_calls(), 1);
}

#[test]
fn request_body_is_preamble_plus_prompt() {
    let server = serve(Arc::new(answer), Duration::ZERO);
    let mut p = predictor(&server.url, 0, 1);
    let v = video("v1");
    p.annotate(&v, &profile(TopicId::Flatearth)).unwrap();
    let bodies = server.bodies.lock().unwrap();
    let (headers, body) = &bodies[0];
    assert!(headers.starts_with("POST /annotate"));
    assert!(headers
        .to_ascii_lowercase()
        .contains("content-type: text/plain; charset=utf-8"));
    assert!(body.starts_with(&format!("{SYSTEM_PREAMBLE}\n\n")));
    assert_eq!(body, &wire_body(&v, &profile(TopicId::Flatearth)).unwrap());
}

#[test]
fn distinct_topics_are_cached_separately() {
    let server = serve(Arc::new(answer), Duration::ZERO);
    let mut p = predictor(&server.url, 0, 2);
    let v = video("v1");
    p.annotate(&v, &profile(TopicId::Flatearth)).unwrap();
    let pol = p.annotate(&v, &profile(TopicId::UsPolitics)).unwrap();
    assert_eq!(pol, Annotation::other());
    assert_eq!(server.hits.load(Ordering::SeqCst), 2);
    assert_eq!(p.cache().len(), 2);
}

#[test]
fn unparseable_replies_exhaust_retries() {
    let server = serve(
        Arc::new(|_: &str| (200, "I think it is about the earth.".to_string())),
        Duration::ZERO,
    );
    let mut p = predictor(&server.url, 1, 1);
    let err = p
        .annotate(&video("v1"), &profile(TopicId::Flatearth))
        .unwrap_err();
    assert!(
        matches!(err, PredictorError::RemoteUnavailable { attempts: 2, .. }),
        "{err}"
    );
    assert_eq!(server.hits.load(Ordering::SeqCst), 2);
    assert!(p.cache().is_empty());
}

#[test]
fn server_errors_are_retried_then_succeed() {
    let n = Arc::new(AtomicUsize::new(0));
    let n2 = n.clone();
    let server = serve(
        Arc::new(move |b: &str| {
            if n2.fetch_add(1, Ordering::SeqCst) == 0 {
                (503, "busy".into())
            } else {
                answer(b)
            }
        }),
        Duration::ZERO,
    );
    let mut p = predictor(&server.url, 2, 1);
    assert_eq!(
        p.annotate(&video("v1"), &profile(TopicId::Flatearth))
            .unwrap(),
        Annotation::interest(Stance::Support)
    );
    assert_eq!(server.hits.load(Ordering::SeqCst), 2);
}

#[test]
fn unreachable_endpoint_is_reported() {
    let port = TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let mut p = predictor(&format!("http://127.0.0.1:{port}/x"), 1, 1);
    let err = p
        .annotate(&video("v1"), &profile(TopicId::Flatearth))
        .unwrap_err();
    assert!(matches!(
        err,
        PredictorError::RemoteUnavailable { attempts: 2, .. }
    ));
}

#[test]
fn concurrency_cap_bounds_requests_in_flight() {
    let server = serve(Arc::new(answer), Duration::from_millis(40));
    let p = predictor(&server.url, 0, 2);
    let handles: Vec<_> = (0..8)
        .map(|i| {
            let mut p = Arc::clone(&p);
            thread::spawn(move || {
                p.annotate(&video(&format!("v{i}")), &profile(TopicId::Flatearth))
                    .unwrap()
            })
        })
        .collect();
    for h in handles {
        h.join().unwrap();
    }
    assert_eq!(server.hits.load(Ordering::SeqCst), 8);
    assert!(
        server.peak.load(Ordering::SeqCst) <= 2,
        "peak {}",
        server.peak.load(Ordering::SeqCst)
    );
}

#[test]
fn concurrent_requests_for_one_key_share_a_call() {
    let server = serve(Arc::new(answer), Duration::from_millis(30));
    let p = predictor(&server.url, 0, 4);
    let handles: Vec<_> = (0..6)
        .map(|_| {
            let mut p = Arc::clone(&p);
            thread::spawn(move || {
                p.annotate(&video("same"), &profile(TopicId::Flatearth))
                    .unwrap()
            })
        })
        .collect();
    for h in handles {
        h.join().unwrap();
    }
    assert_eq!(server.hits.load(Ordering::SeqCst), 1);
}
