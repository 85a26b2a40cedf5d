use std::collections::{BTreeSet, HashMap};

use driftlab_core::agent::{
    Agent, AgentError, FeedSource, Gender, Group, InteractionEvent, SessionConfig, UserProfile,
};
use driftlab_core::catalog::{
    generate_catalog, Catalog, CatalogSpec, CategoryCount, Stance, TopicId,
};
use driftlab_core::platform::{MixtureTarget, Recommender, ScenarioConfig};
use driftlab_core::predictor::{
    decide, ground_truth, Action, Annotation, NoiseModel, OracleAnnotator, Phase, TopicClass,
};
use driftlab_core::queries::QueryBook;
use driftlab_core::rng;

const SEED: u64 = 17;

fn catalog() -> Catalog {
    generate_catalog(&CatalogSpec::default(), SEED).unwrap()
}

fn profile(id: &str, group: Group, topic: TopicId, stances: &[Stance]) -> UserProfile {
    UserProfile {
        user_id: id.into(),
        group,
        topic,
        stance_set: stances.iter().copied().collect(),
        age_bracket: "18-24".into(),
        gender: Gender::M,
    }
}

fn oracle(user: &str) -> Box<OracleAnnotator> {
    Box::new(OracleAnnotator::new(NoiseModel::noiseless(rng::stream(
        SEED, user, "oracle",
    ))))
}

fn run(p: &UserProfile, cat: &Catalog, rec: &Recommender, days: u32) -> Vec<InteractionEvent> {
    let book = QueryBook::builtin();
    let mut a = Agent::new(
        SEED,
        p.clone(),
        cat,
        rec,
        &book,
        oracle(&p.user_id),
        SessionConfig::default(),
    )
    .unwrap();
    a.run_protocol(days).unwrap();
    a.into_events()
}

fn seed_events(ev: &[InteractionEvent]) -> Vec<&InteractionEvent> {
    ev.iter()
        .filter(|e| e.feed_source == FeedSource::Search)
        .collect()
}

fn equilibrium(days: u32) -> Recommender {
    Recommender::Scripted(ScenarioConfig::preset("equilibrium", days as usize * 2).unwrap())
}

#[test]
fn g2_seeds_exactly_25_matching_videos() {
    let cat = catalog();
    let p = profile("g2", Group::G2, TopicId::Flatearth, &[Stance::Support]);
    let ev = run(&p, &cat, &equilibrium(1), 1);
    let seed = seed_events(&ev);
    assert_eq!(seed.len(), 25);
    for e in &seed {
        assert_eq!(e.annotation, Annotation::interest(Stance::Support));
        assert_eq!(e.action, Action::WatchLikeBookmark);
        assert_eq!(e.session_day, 0);
    }
    let ids: BTreeSet<&str> = seed.iter().map(|e| e.video_id.as_str()).collect();
    assert_eq!(ids.len(), 25);
}

#[test]
fn g1_seeds_neutral_first_then_polarising_and_reseeds() {
    let cat = catalog();
    let p = profile("g1", Group::G1, TopicId::Vaccines, &[Stance::Oppose]);
    let ev = run(&p, &cat, &equilibrium(4), 4);
    let seed = seed_events(&ev);
    assert_eq!(seed.len(), 75);
    assert!(seed[..25]
        .iter()
        .all(|e| e.annotation == Annotation::neutral() && e.session_day == 0));
    assert!(seed[25..50]
        .iter()
        .all(|e| e.annotation == Annotation::interest(Stance::Oppose) && e.session_day == 0));
    assert!(seed[50..]
        .iter()
        .all(|e| e.annotation == Annotation::interest(Stance::Oppose) && e.session_day == 3));
    let polarising: BTreeSet<&str> = seed[25..].iter().map(|e| e.video_id.as_str()).collect();
    assert_eq!(
        polarising.len(),
        50,
        "re-seed picks videos not watched before"
    );
    // Re-seed happens after the day-3 session and before day 4.
    let day3_end = ev
        .iter()
        .filter(|e| e.session_day == 3 && e.feed_source == FeedSource::Foryou)
        .last()
        .unwrap();
    let day4_start = ev.iter().find(|e| e.session_day == 4).unwrap();
    assert!(seed[50].virtual_time_s > day3_end.virtual_time_s);
    assert!(seed[74].virtual_time_s < day4_start.virtual_time_s);
}

#[test]
fn g3_alternates_stances_25_each() {
    let cat = catalog();
    let p = profile(
        "g3",
        Group::G3,
        TopicId::UsPolitics,
        &[Stance::Support, Stance::Oppose],
    );
    let ev = run(&p, &cat, &equilibrium(1), 1);
    let seed = seed_events(&ev);
    assert_eq!(seed.len(), 50);
    let support = seed
        .iter()
        .filter(|e| e.annotation.stance() == Stance::Support)
        .count();
    assert_eq!(support, 25);
    // Draws alternate, so consecutive runs of one stance switch over at least once.
    let runs = seed
        .windows(2)
        .filter(|w| w[0].annotation.stance() != w[1].annotation.stance())
        .count()
        + 1;
    assert!(runs >= 2);
    assert!(seed
        .iter()
        .all(|e| e.annotation.topic_class() == TopicClass::Interest));
}

#[test]
fn cooking_baseline_seeds_only_neutral() {
    let cat = catalog();
    let p = profile("base", Group::G1, TopicId::Cooking, &[]);
    let ev = run(&p, &cat, &equilibrium(4), 4);
    let seed = seed_events(&ev);
    assert_eq!(seed.len(), 25);
    assert!(seed.iter().all(|e| e.annotation == Annotation::neutral()));
}

#[test]
fn seed_starvation_names_the_category() {
    let mut spec = CatalogSpec::default();
    for c in spec.counts.iter_mut() {
        if c.topic == TopicId::Flatearth && c.stance == Stance::Support {
            c.count = 5;
        }
    }
    let cat = generate_catalog(&spec, SEED).unwrap();
    let p = profile("starved", Group::G2, TopicId::Flatearth, &[Stance::Support]);
    let rec = equilibrium(1);
    let book = QueryBook::builtin();
    let mut a = Agent::new(
        SEED,
        p,
        &cat,
        &rec,
        &book,
        oracle("starved"),
        SessionConfig::default(),
    )
    .unwrap();
    match a.run_seed_phase() {
        Err(AgentError::SeedStarvation {
            topic,
            stance,
            watched,
            ..
        }) => {
            assert_eq!((topic, stance), (TopicId::Flatearth, Stance::Support));
            assert!(watched <= 5);
        }
        other => panic!("expected starvation, got {other:?}"),
    }
}

#[test]
fn interaction_events_respect_session_windows_and_durations() {
    let cat = catalog();
    let p = profile("w", Group::G2, TopicId::ClimateChange, &[Stance::Support]);
    let days = 3;
    let ev = run(&p, &cat, &equilibrium(days), days);
    let cfg = SessionConfig::default();
    for day in 1..=days {
        let start = cfg.schedule.session_start_s(day);
        let session: Vec<&InteractionEvent> = ev
            .iter()
            .filter(|e| e.session_day == day && e.feed_source == FeedSource::Foryou)
            .collect();
        assert!(!session.is_empty());
        for e in &session {
            assert!(
                e.virtual_time_s >= start && e.virtual_time_s < start + 3600.0,
                "{e:?}"
            );
        }
        // The last event either crosses the budget or ends exactly on it.
        let last = session.last().unwrap();
        assert!(last.virtual_time_s + last.watch_duration_s >= start + 3600.0);
    }
    for e in ev.iter().filter(|e| e.feed_source == FeedSource::Foryou) {
        let v = cat.get(&e.video_id).unwrap();
        match e.action {
            Action::WatchLikeBookmark => assert_eq!(e.watch_duration_s, v.duration_s),
            Action::Skip => assert!((1.0..=2.0).contains(&e.watch_duration_s)),
        }
    }
    assert!(ev
        .windows(2)
        .all(|w| w[0].virtual_time_s <= w[1].virtual_time_s));
}

#[test]
fn zero_noise_watches_obey_the_relevance_rule() {
    let cat = catalog();
    let by_id: HashMap<&str, _> = cat
        .videos()
        .iter()
        .map(|v| (v.video_id.as_str(), v))
        .collect();
    for p in [
        profile("a", Group::G1, TopicId::Flatearth, &[Stance::Support]),
        profile("b", Group::G2, TopicId::Vaccines, &[Stance::Oppose]),
        profile(
            "c",
            Group::G3,
            TopicId::UsPolitics,
            &[Stance::Support, Stance::Oppose],
        ),
    ] {
        let ev = run(&p, &cat, &equilibrium(2), 2);
        for e in ev.iter().filter(|e| e.feed_source == FeedSource::Foryou) {
            let v = by_id[e.video_id.as_str()];
            let truth = ground_truth(v, p.topic);
            assert_eq!(e.annotation, truth);
            assert_eq!(e.action, decide(&truth, v, &p, Phase::Interaction));
            if e.action == Action::WatchLikeBookmark {
                let ok = match truth.topic_class() {
                    TopicClass::Interest => p.stance_set.contains(&truth.stance()),
                    TopicClass::Neutral => p.group != Group::G3,
                    TopicClass::Other => false,
                };
                assert!(ok && v.duration_s <= 300.0 && !v.is_livestream);
            }
        }
    }
}

#[test]
fn g2_watches_cooking_during_interaction() {
    let cat = catalog();
    let p = profile("g2c", Group::G2, TopicId::Flatearth, &[Stance::Support]);
    let ev = run(&p, &cat, &equilibrium(1), 1);
    let cooking_watch = ev
        .iter()
        .filter(|e| e.feed_source == FeedSource::Foryou && e.annotation == Annotation::neutral())
        .filter(|e| cat.get(&e.video_id).unwrap().duration_s <= 300.0)
        .all(|e| e.action == Action::WatchLikeBookmark);
    assert!(cooking_watch);
}

#[test]
fn all_skip_session_has_between_1800_and_3600_events() {
    let cat = catalog();
    // Only unrelated videos: a polarising user skips every one.
    let only_other =
        ScenarioConfig::new("other", vec![MixtureTarget::new(0.0, 0.0, 1.0, 0.5); 2], 8).unwrap();
    let rec = Recommender::Scripted(only_other);
    let p = profile("skipper", Group::G2, TopicId::Flatearth, &[Stance::Support]);
    let book = QueryBook::builtin();
    let mut a = Agent::new(
        SEED,
        p,
        &cat,
        &rec,
        &book,
        oracle("skipper"),
        SessionConfig::default(),
    )
    .unwrap();
    a.run_seed_phase().unwrap();
    let n = a.run_interaction_day(1).unwrap();
    assert!((1800..=3600).contains(&n), "{n} events");
    assert!(a
        .events()
        .iter()
        .filter(|e| e.session_day == 1)
        .all(|e| e.action == Action::Skip));
}

#[test]
fn runs_are_deterministic_and_users_independent() {
    let cat = catalog();
    let rec = equilibrium(2);
    let p = profile("det", Group::G2, TopicId::Flatearth, &[Stance::Oppose]);
    let a = run(&p, &cat, &rec, 2);
    let b = run(&p, &cat, &rec, 2);
    assert_eq!(a, b);
    let q = profile("det2", Group::G2, TopicId::Flatearth, &[Stance::Oppose]);
    let c = run(&q, &cat, &rec, 2);
    let ids = |v: &[InteractionEvent]| v.iter().map(|e| e.video_id.clone()).collect::<Vec<_>>();
    assert_ne!(ids(&a), ids(&c));
}

#[test]
fn adaptive_feedback_follows_watches() {
    let cat = catalog();
    let rec = Recommender::adaptive(Default::default(), &cat);
    let p = profile("ad", Group::G2, TopicId::Flatearth, &[Stance::Support]);
    let book = QueryBook::builtin();
    let mut a = Agent::new(
        SEED,
        p,
        &cat,
        &rec,
        &book,
        oracle("ad"),
        SessionConfig::default(),
    )
    .unwrap();
    a.run_seed_phase().unwrap();
    assert_eq!(
        a.feed_state().score(TopicId::Flatearth, Stance::Support),
        25.0
    );
    a.run_interaction_day(1).unwrap();
    let watched_fe = a
        .events()
        .iter()
        .filter(|e| {
            e.action == Action::WatchLikeBookmark
                && e.annotation == Annotation::interest(Stance::Support)
        })
        .count() as f64;
    assert_eq!(
        a.feed_state().score(TopicId::Flatearth, Stance::Support),
        watched_fe
    );
    assert!(a.feed_state().interest_scores.values().all(|s| *s >= 0.0));
}

#[test]
fn invalid_profiles_are_rejected() {
    let cat = catalog();
    let rec = equilibrium(1);
    let book = QueryBook::builtin();
    for p in [
        profile(
            "x",
            Group::G3,
            TopicId::Flatearth,
            &[Stance::Support, Stance::Oppose],
        ),
        profile(
            "x",
            Group::G2,
            TopicId::Flatearth,
            &[Stance::Support, Stance::Oppose],
        ),
        profile("x", Group::G2, TopicId::Cooking, &[]),
        profile("bad id", Group::G2, TopicId::Flatearth, &[Stance::Support]),
    ] {
        assert!(Agent::new(
            SEED,
            p,
            &cat,
            &rec,
            &book,
            oracle("x"),
            SessionConfig::default()
        )
        .is_err());
    }
}

#[test]
fn small_catalog_still_seeds_through_search() {
    let spec = CatalogSpec {
        counts: vec![
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
        ],
        ..CatalogSpec::default()
    };
    let cat = generate_catalog(&spec, SEED).unwrap();
    let p = profile("small", Group::G1, TopicId::Flatearth, &[Stance::Oppose]);
    let ev = run(&p, &cat, &equilibrium(1), 1);
    assert_eq!(seed_events(&ev).len(), 50);
}
