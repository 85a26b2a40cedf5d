//! Default seed-phase search queries per topic and stance.
//!
//! The lists are the ones used to seed sockpuppet accounts in the original
//! audit. They double as phrase templates for synthetic video descriptions
//! so that keyword search over the catalog has realistic recall.

use std::collections::BTreeMap;

use crate::catalog::{Stance, TopicId};

const FLATEARTH_SUPPORT: &[&str] = &[
    "proof earth is flat",
    "flat earth facts they don’t want you to know",
    "NASA lies flat earth truth",
    "real photos of flat earth",
    "why the globe is a hoax",
    "best flat earth TikTok accounts",
    "flat earth community on TikTok",
    "flat earth videos debunking globe",
    "viral flat earth TikToks",
    "flat earth experiments",
    "flat earth explained simple",
    "how flat earth works",
    "flat earth map vs globe map",
    "how gravity works on flat earth",
    "flight paths that prove flat earth",
    "government hiding flat earth",
    "why science is wrong about earth",
    "flat earth truth banned videos",
    "schools lie about earth shape",
    "hidden flat earth documents",
    "sun and moon on flat earth model",
    "edge of the world Antarctica wall",
    "flat earth dome theory animation",
    "flat earth experiments you can try",
    "stars and planets on flat earth",
    "uncovering truth about flat earth",
    "seek the truth flat earth",
    "flat earth proof firmament beyond",
];

const FLATEARTH_OPPOSE: &[&str] = &[
    "debunking flat earth theory",
    "science proves earth is round",
    "flat earth vs globe explained",
    "how we know earth is a sphere",
    "physics that destroys flat earth claims",
    "funniest flat earth TikToks",
    "flat earther gets owned",
    "flat earth logic fails",
    "watch flat earther get roasted",
    "globehead reacts to flat earth TikToks",
    "real earth curvature footage",
    "globe model experiments",
    "proof of gravity and round earth",
    "responding to flat earth claims",
    "scientist reacts to flat earth TikTok",
    "teacher explains why earth isn’t flat",
    "pilot explains earth curvature",
    "astronauts prove earth is round",
    "why do people believe in flat earth?",
    "how flat earth conspiracy spreads",
    "flat earth is just a cult",
    "watch me argue with a flat earther",
    "disproving flat earth theories",
];

const VACCINES_SUPPORT: &[&str] = &[
    "how vaccines work explained",
    "why vaccines are safe and effective",
    "vaccine science made simple",
    "covid vaccine saves lives",
    "what anti-vaxxers get wrong",
    "debunking anti-vax claims",
    "doctor reacts to anti-vax TikTok",
    "myth vs fact: covid vaccine",
    "watch this anti-vaxxer get fact checked",
    "explaining vaccine side effects",
    "vaccines and herd immunity",
    "how vaccines stopped pandemics",
    "why vaccine mandates make sense",
    "nurse explains vaccine side effects",
    "why I got vaccinated as a doctor",
    "covid ICU stories from unvaccinated",
    "frontline workers vs anti-vaxxers",
    "calling out anti-vax influencers",
    "fighting vaccine misinformation",
    "spreading facts not fear",
    "covid vaccine is not a conspiracy",
    "protect the vulnerable get vaccinated",
    "anti-vaxx logic be like…",
    "watch this anti-vaxxer get owned",
    "funniest anti-vax TikToks",
    "satire: anti-vax commercial parody",
    "this anti-vax argument makes no sense",
    "vaccine privilege in the west",
    "global vaccination efforts 2025",
    "why vaccines matter worldwide",
    "covid isn’t over for everyone",
    "vaccine equity explained",
];

const VACCINES_OPPOSE: &[&str] = &[
    "why vaccines are dangerous",
    "do not get vaccinated",
    "truth about what’s in vaccines",
    "vaccines don’t prevent illness",
    "how to detox after a vaccine",
    "covid vax injury stories",
    "covid vaccine doesn’t work",
    "refusing the covid shot 2025",
    "my body my choice covid vaccine",
    "natural immunity is better than vaccine",
    "stand against vaccine mandates",
    "vaccine choice is human right",
    "forced vaccination is tyranny",
    "how to avoid vaccine passport",
    "doctors speaking out against vaccine",
    "banned vaccine truth videos",
    "vaccine data they don’t want you to see",
    "vaccine linked to health issues",
    "vaxxed vs unvaxxed health comparison",
    "covid vaccine long term effects",
    "5g and vaccine connection?",
    "elite agenda behind vaccination",
    "watch this vaxxed person still get covid",
    "covid cult logic fail",
    "vaccine believers getting triggered",
    "libs trust Pfizer more than God",
    "satire: vaccine commercial parody",
    "vaccine-free and healthy",
    "how I stayed unvaxxed and safe",
    "home remedies over shots",
];

const CLIMATE_SUPPORT: &[&str] = &[
    "proof climate change is real",
    "how we know climate change is manmade",
    "climate science explained simply",
    "what co2 does to the atmosphere",
    "climate change effects around the world",
    "why we need climate action now",
    "climate policy explained",
    "debunking climate change misinformation",
    "responding to climate denial TikToks",
    "how climate myths spread online",
    "scientist reacts to climate skeptic",
    "climate denier gets schooled",
    "climate change disasters 2024",
    "melting glaciers time lapse",
    "sea level rise explained visually",
    "climate crisis is already here",
    "how to reduce your carbon footprint",
    "climate hope stories",
    "gen z fighting for the planet",
    "climate deniers be like…",
    "funniest climate change denial TikToks",
    "watch this guy say co2 is good lol",
    "climate denier vs 6th grader",
    "climate change explained for conspiracy bros",
];

const CLIMATE_OPPOSE: &[&str] = &[
    "is the earth really getting warmer?",
    "global cooling not warming",
    "climate change myth explained",
    "fake climate crisis exposed",
    "evidence earth isn’t warming",
    "climate change is natural not manmade",
    "earth temperature always changes",
    "co2 is not the cause of warming",
    "sun cycles explain climate changes",
    "climate changes every 100 years",
    "climate change agenda exposed",
    "why climate policies don’t work",
    "climate lockdowns coming?",
    "green energy scam",
    "world economic forum climate control",
    "real scientists against climate change",
    "climate truth community",
    "banned climate truth videos",
    "climate change scam facts",
    "volcanoes cause more emissions than people",
    "ice caps aren’t melting",
    "sea levels not rising proof",
    "climate data manipulation exposed",
    "how climate activists lie",
    "climate cult videos",
    "Greta Thunberg meme TikTok",
    "climate doomsday predictions gone wrong",
    "climate hoax",
    "climate change truth seeker",
    "no climate change",
    "climate change truth",
    "is climate change real?",
    "climate skeptic",
    "stop green deal",
    "green deal truth",
    "co2 is not a problem",
    "is green deal a scam",
    "climate wake up",
    "no global warming",
    "humans do not cause climate change",
    "global cooling",
    "climate hoax",
    "stop climate fearmongering",
    "the world is getting colder",
    "climate change was a myth",
];

const POLITICS_SUPPORT: &[&str] = &[
    "Donald Trump achievements",
    "Why Donald Trump is a good president",
    "Donald Trump's positive impact on the economy",
    "Donald Trump's successful policies",
    "Donald Trump's leadership qualities",
    "Donald Trump's support for American workers",
    "Donald Trump's foreign policy successes",
    "Donald Trump's contributions to national security",
    "Donald Trump's support for law enforcement",
    "Donald Trump's efforts to secure the border",
    "Donald Trump's pro-life stance",
    "Donald Trump's support for the Second Amendment",
    "Donald Trump's fight against fake news",
    "Donald Trump's support for religious freedom",
    "Donald Trump's commitment to America First",
    "Donald Trump's support for small businesses",
    "Donald Trump's tax cuts and their benefits",
    "Donald Trump's deregulation efforts",
    "Donald Trump's support for veterans",
    "Donald Trump's energy independence policies",
];

const POLITICS_OPPOSE: &[&str] = &[
    "Donald Trump controversies",
    "Why Donald Trump is a bad president",
    "Donald Trump's negative impact on the economy",
    "Donald Trump's failed policies",
    "Donald Trump's leadership flaws",
    "Donald Trump's lack of support for American workers",
    "Donald Trump's foreign policy failures",
    "Donald Trump's threats to national security",
    "Donald Trump's criticism of law enforcement",
    "Donald Trump's border wall failures",
    "Donald Trump's anti-immigration stance",
    "Donald Trump's opposition to gun control",
    "Donald Trump's spread of misinformation",
    "Donald Trump's attacks on religious minorities",
    "Donald Trump's disregard for international alliances",
    "Donald Trump's impact on small businesses",
    "Donald Trump's tax cuts and their drawbacks",
    "Donald Trump's deregulation and environmental impact",
    "Donald Trump's lack of support for veterans",
    "Donald Trump's energy policies and climate change",
];

const COOKING: &[&str] = &["cooking recipes", "easy dinner recipes"];

/// Built-in query list for a category; `None` for unrelated content.
pub fn default_queries(topic: TopicId, stance: Stance) -> Option<&'static [&'static str]> {
    use Stance::*;
    use TopicId::*;
    Some(match (topic, stance) {
        (Flatearth, Support) => FLATEARTH_SUPPORT,
        (Flatearth, Oppose) => FLATEARTH_OPPOSE,
        (Vaccines, Support) => VACCINES_SUPPORT,
        (Vaccines, Oppose) => VACCINES_OPPOSE,
        (ClimateChange, Support) => CLIMATE_SUPPORT,
        (ClimateChange, Oppose) => CLIMATE_OPPOSE,
        (UsPolitics, Support) => POLITICS_SUPPORT,
        (UsPolitics, Oppose) => POLITICS_OPPOSE,
        (Cooking, None) => COOKING,
        _ => return Option::None,
    })
}

/// Query lists keyed by `(topic, stance)`; overridable per experiment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryBook {
    lists: BTreeMap<(TopicId, Stance), Vec<String>>,
}

impl QueryBook {
    pub fn builtin() -> Self {
        let mut lists = BTreeMap::new();
        for topic in TopicId::ALL {
            for stance in Stance::ALL {
                if let Some(qs) = default_queries(topic, stance) {
                    lists.insert((topic, stance), qs.iter().map(|q| q.to_string()).collect());
                }
            }
        }
        Self { lists }
    }

    pub fn empty() -> Self {
        Self {
            lists: BTreeMap::new(),
        }
    }

    pub fn set(&mut self, topic: TopicId, stance: Stance, queries: Vec<String>) {
        self.lists.insert((topic, stance), queries);
    }

    pub fn get(&self, topic: TopicId, stance: Stance) -> &[String] {
        self.lists
            .get(&(topic, stance))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }
}
