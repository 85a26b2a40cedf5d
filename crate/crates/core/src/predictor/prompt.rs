use crate::agent::UserProfile;
use crate::catalog::{Stance, TopicId, VideoRecord};

use super::{Annotation, PredictorError};

pub const SYSTEM_PREAMBLE: &str = "You will be provided with an instruction from user regarding video topic and stance annotation. Provide the topic and stance based on the choices and description provided by the user.";

/// Name the model sees for a polarising topic.
pub fn prompt_topic_name(topic: TopicId) -> Result<&'static str, PredictorError> {
    match topic {
        TopicId::Flatearth => Ok("flatearth"),
        TopicId::Vaccines => Ok("vaccines"),
        TopicId::ClimateChange => Ok("climate change"),
        TopicId::UsPolitics => Ok("political"),
        TopicId::Cooking | TopicId::Other => Err(PredictorError::UnsupportedTopic(topic)),
    }
}

fn topic_description(topic: TopicId) -> Result<&'static str, PredictorError> {
    Ok(match topic {
        TopicId::Flatearth => "flatearth should be given to anything related to the flatearth conspiracy, including things like firmament or flatearth experiments. The support stance should be given to anything that claims that earth is flat. The oppose stance should be given to anything that claims that earth is not flat, debunks flatearth conspiracy or makes fun of flatearthers.",
        TopicId::Vaccines => "vaccines should be given to anything related to the vaccines and the discussion on their potential side effects. The support stance should be given to anything that supports vaccinations, motivates people to get vaccinated, debunks vaccine misinformation, acknowledges that there are potential adverse effects in specific cases, acknowledges that you can get covid even if vaccinated, makes fun of people claiming ridiculous side effects or show why people that think vaccines are dangerous do not really understand them. The oppose stance should be given to anything that has anti-vaccination sentiment, claims that vaccines are dangerous for everyone or that vaccines do not work.",
        TopicId::ClimateChange => "climate change should be given to anything related to climate change, global warming or policies that deal with climate change, such as the green deal or reducing co2. The support stance should be given to anything that debunks climate change deniers, claims that we need to changes, shows how the climate change affects us or supports the policies. The oppose stance should be given to anything that denies climate changes, makes fun of it, claims that the earth was always warming, claims there is cooling or opposes the policies for fighting climate change.",
        TopicId::UsPolitics => "political should be given to anything that deals with politics, elections and other political issues and events in the USA. The support stance should be given to anything related to Trump, republicans, conservatives or any other right leaning content. The oppose stance should be given to anything on the other side of spectrum, such as Biden, Harris, democrats, liberals or anything left learning.",
        TopicId::Cooking | TopicId::Other => return Err(PredictorError::UnsupportedTopic(topic)),
    })
}

/// User part of the annotation prompt for `video` as seen by `profile`.
///
/// Metadata lines whose field is empty are left out.
pub fn build_prompt(video: &VideoRecord, profile: &UserProfile) -> Result<String, PredictorError> {
    let name = prompt_topic_name(profile.topic)?;
    let description = topic_description(profile.topic)?;
    let mut p = format!(
        "Your task is to determine the topic and the stance of the video given its available metadata. \
The only possible answers for the topic is: 1) {name}; 2) cooking; 3) other. \
For stance, the possibilities are: 1) support; 2) oppose. Use only these possibilities when answering.\n\
{description}\n\
cooking should be given to anything that is related to recipes or cooking. In this case, the stance does not matter so always put support.\n\
other should be given anything that is not related to previous topics. The stance does not matter so always put support.\n\
Provide the answer in structured form that looks like this:\n\
\n\
Topic: {name}/cooking/other\n\
Stance: support/oppose\n\
\n\
Here is the video information."
    );

    let mut desc_and_tags = video.description.trim().to_string();
    for tag in &video.hashtags {
        if !desc_and_tags.is_empty() {
            desc_and_tags.push(' ');
        }
        desc_and_tags.push('#');
        desc_and_tags.push_str(tag);
    }
    for (label, value) in [
        ("Author", video.author.trim()),
        ("Video description and hashtags", desc_and_tags.as_str()),
        ("Video transcript", video.transcript.trim()),
        ("Text stickers in video", video.stickers.trim()),
    ] {
        if !value.is_empty() {
            p.push('\n');
            p.push_str(label);
            p.push_str(": ");
            p.push_str(value);
        }
    }
    Ok(p)
}

/// Request body sent to a remote annotator: system preamble, blank line,
/// user prompt.
pub fn wire_body(video: &VideoRecord, profile: &UserProfile) -> Result<String, PredictorError> {
    Ok(format!(
        "{SYSTEM_PREAMBLE}\n\n{}",
        build_prompt(video, profile)?
    ))
}

fn field<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    text.lines().find_map(|line| {
        let line = line.trim();
        let (k, v) = line.split_once(':')?;
        k.trim().eq_ignore_ascii_case(key).then(|| v.trim())
    })
}

/// Parses a `Topic: ...` / `Stance: ...` reply for a user interested in
/// `topic`. Values must match exactly up to case and surrounding whitespace.
pub fn parse_response(text: &str, topic: TopicId) -> Result<Annotation, PredictorError> {
    let name = prompt_topic_name(topic)?;
    let raw_topic = field(text, "topic")
        .ok_or_else(|| PredictorError::Parse("missing `Topic:` line".into()))?;
    let value = raw_topic.to_lowercase();
    if value == "cooking" {
        return Ok(Annotation::neutral());
    }
    if value == "other" {
        return Ok(Annotation::other());
    }
    if value != name {
        return Err(PredictorError::Parse(format!(
            "unrecognized topic `{raw_topic}`"
        )));
    }
    let raw_stance = field(text, "stance")
        .ok_or_else(|| PredictorError::Parse("missing `Stance:` line".into()))?;
    match raw_stance.to_lowercase().as_str() {
        "support" => Ok(Annotation::interest(Stance::Support)),
        "oppose" => Ok(Annotation::interest(Stance::Oppose)),
        _ => Err(PredictorError::Parse(format!(
            "unrecognized stance `{raw_stance}`"
        ))),
    }
}
