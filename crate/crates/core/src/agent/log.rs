//! Interaction log: one tab-separated event per line, no header.
//!
//! Columns: virtual_time_s, session_day, user_id, video_id, feed_source,
//! topic_class, stance, action, watch_duration_s. Times carry six decimals.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use super::InteractionEvent;
use crate::catalog::Stance;
use crate::predictor::{Action, Annotation, TopicClass};

#[derive(Debug, Error)]
pub enum LogError {
    #[error("{path}:{line}: {message}")]
    Malformed {
        path: String,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn format_event(e: &InteractionEvent) -> String {
    format!(
        "{:.6}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{:.6}",
        e.virtual_time_s,
        e.session_day,
        e.user_id,
        e.video_id,
        e.feed_source,
        e.annotation.topic_class(),
        e.annotation.stance(),
        e.action,
        e.watch_duration_s
    )
}

pub fn parse_event(line: &str) -> Result<InteractionEvent, String> {
    let cols: Vec<&str> = line.split('\t').collect();
    let [time, day, user, video, source, class, stance, action, watch] = cols[..] else {
        return Err(format!(
            "expected 9 tab-separated fields, found {}",
            cols.len()
        ));
    };
    let num = |name: &str, v: &str| -> Result<f64, String> {
        v.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite() && *x >= 0.0)
            .ok_or_else(|| format!("{name} `{v}` is not a nonnegative number"))
    };
    let class: TopicClass = class.parse()?;
    let stance: Stance = stance.parse()?;
    Ok(InteractionEvent {
        virtual_time_s: num("virtual_time_s", time)?,
        session_day: day
            .parse()
            .map_err(|_| format!("session_day `{day}` is not an integer"))?,
        user_id: user.to_string(),
        video_id: video.to_string(),
        feed_source: source.parse()?,
        annotation: Annotation::new(class, stance)?,
        action: action.parse::<Action>()?,
        watch_duration_s: num("watch_duration_s", watch)?,
    })
}

pub fn write_log(path: &Path, events: &[InteractionEvent]) -> Result<(), LogError> {
    let mut out = BufWriter::new(File::create(path)?);
    for e in events {
        writeln!(out, "{}", format_event(e))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_log(path: &Path) -> Result<Vec<InteractionEvent>, LogError> {
    let reader = BufReader::new(File::open(path)?);
    let mut events = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        events.push(parse_event(&line).map_err(|message| LogError::Malformed {
            path: path.display().to_string(),
            line: n + 1,
            message,
        })?);
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::FeedSource;

    fn event() -> InteractionEvent {
        InteractionEvent {
            virtual_time_s: 216_000.25,
            session_day: 1,
            user_id: "g2-flatearth-support-01".into(),
            video_id: "v000042".into(),
            feed_source: FeedSource::Foryou,
            annotation: Annotation::interest(Stance::Support),
            action: Action::WatchLikeBookmark,
            watch_duration_s: 42.125,
        }
    }

    #[test]
    fn line_format_is_stable() {
        assert_eq!(
            format_event(&event()),
            "216000.250000\t1\tg2-flatearth-support-01\tv000042\tforyou\tinterest\tsupport\twatch_like_bookmark\t42.125000"
        );
    }

    #[test]
    fn round_trip() {
        let e = event();
        assert_eq!(parse_event(&format_event(&e)).unwrap(), e);
    }

    #[test]
    fn malformed_lines_are_rejected() {
        assert!(parse_event("1.0\t1\tu").is_err());
        let bad_stance = format_event(&event()).replace("interest\tsupport", "interest\tnone");
        assert!(parse_event(&bad_stance).is_err());
        let bad_action = format_event(&event()).replace("watch_like_bookmark", "like");
        assert!(parse_event(&bad_action).is_err());
    }
}
