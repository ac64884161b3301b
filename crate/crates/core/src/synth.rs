//! Synthetic corpus with planted amplification: genuine tweets are shared
//! inside an organic population with loose interest groups, fake tweets are
//! pushed by small dedicated bot communities reusing a skewed vocabulary.

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, Label, Tweet};

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("amplification {amplification} exceeds bot community size {size}")]
    Amplification { amplification: usize, size: usize },
    #[error("infeasible spec: {0}")]
    Infeasible(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub n_genuine: usize,
    pub n_fake: usize,
    pub bot_community_count: usize,
    pub bot_community_size: usize,
    /// Bots retweeting each fake tweet.
    pub amplification: usize,
    pub organic_pool: usize,
    pub organic_groups: usize,
    /// Retweeter count range for genuine tweets.
    pub organic_retweets_min: usize,
    pub organic_retweets_max: usize,
    /// Chance an organic retweeter comes from the author's own group.
    pub in_group_prob: f64,
    /// Chance a tweet also picks up one retweeter from the other population.
    pub leak_prob: f64,
    /// Share of a fake tweet's words drawn from the loaded keyword list.
    pub fake_keyword_share: f64,
    /// Share of a genuine tweet's words drawn from the same list.
    pub genuine_keyword_share: f64,
    pub words_min: usize,
    pub words_max: usize,
    pub start_timestamp: u64,
    pub span_days: u64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_genuine: 1500,
            n_fake: 500,
            bot_community_count: 2,
            bot_community_size: 20,
            amplification: 8,
            organic_pool: 300,
            organic_groups: 6,
            organic_retweets_min: 3,
            organic_retweets_max: 8,
            in_group_prob: 0.7,
            leak_prob: 0.05,
            fake_keyword_share: 0.5,
            genuine_keyword_share: 0.05,
            words_min: 8,
            words_max: 16,
            start_timestamp: 1_646_092_800, // 2022-03-01T00:00:00Z
            span_days: 30,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub corpus: Corpus,
    /// Account names of each bot community.
    pub bot_communities: Vec<Vec<String>>,
}

impl SyntheticCorpus {
    pub fn is_bot(&self, name: &str) -> bool {
        self.bot_communities.iter().any(|c| c.iter().any(|b| b == name))
    }
}

const COMMON_WORDS: &[&str] = &[
    "today",
    "people",
    "city",
    "report",
    "support",
    "local",
    "news",
    "weather",
    "market",
    "school",
    "family",
    "community",
    "update",
    "week",
    "government",
    "minister",
    "meeting",
    "plan",
    "energy",
    "prices",
    "food",
    "health",
    "hospital",
    "doctors",
    "children",
    "teachers",
    "students",
    "volunteers",
    "help",
    "refugees",
    "border",
    "train",
    "station",
    "river",
    "bridge",
    "road",
    "power",
    "water",
    "heating",
    "winter",
    "spring",
    "morning",
    "evening",
    "concert",
    "museum",
    "football",
    "match",
    "team",
    "season",
    "budget",
    "economy",
    "business",
    "jobs",
    "workers",
    "farmers",
    "harvest",
    "grain",
    "export",
    "shipping",
    "port",
    "airport",
    "flight",
    "travel",
    "visa",
    "embassy",
    "president",
    "parliament",
    "vote",
    "election",
    "law",
    "court",
    "police",
    "safety",
    "shelter",
    "donations",
    "charity",
    "aid",
    "convoy",
    "medicine",
    "vaccine",
    "research",
    "university",
    "science",
    "technology",
    "internet",
    "phone",
    "photo",
    "video",
    "interview",
    "journalist",
    "press",
    "conference",
    "statement",
    "official",
    "data",
    "survey",
    "analysis",
    "history",
    "culture",
    "language",
    "church",
    "festival",
    "park",
    "garden",
    "housing",
    "rent",
    "repair",
    "construction",
];

const LOADED_WORDS: &[&str] = &[
    "hoax",
    "staged",
    "biolabs",
    "puppet",
    "regime",
    "nazis",
    "coverup",
    "traitors",
    "globalists",
    "lies",
    "propaganda",
    "crisis",
    "actors",
    "fake",
    "secret",
    "exposed",
    "truth",
    "censored",
    "agenda",
    "elites",
    "provocation",
    "false",
    "flag",
    "collapse",
    "betrayal",
    "sanctions",
    "backfire",
    "mercenaries",
    "plot",
    "banned",
];

const GENUINE_TAGS: &[&str] = &["news", "ukraine", "help", "support", "update", "community"];
const FAKE_TAGS: &[&str] = &["truth", "wakeup", "exposed", "ukraine", "hoax"];

fn sentence(rng: &mut ChaCha8Rng, spec: &SyntheticSpec, keyword_share: f64) -> String {
    let n = rng.gen_range(spec.words_min..=spec.words_max);
    (0..n)
        .map(|_| {
            let list = if rng.gen_bool(keyword_share) {
                LOADED_WORDS
            } else {
                COMMON_WORDS
            };
            *list.choose(rng).expect("word lists are nonempty")
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn hashtags(rng: &mut ChaCha8Rng, pool: &[&str]) -> Vec<String> {
    let n = rng.gen_range(0..=2);
    index::sample(rng, pool.len(), n)
        .into_iter()
        .map(|i| pool[i].to_string())
        .collect()
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.n_fake > 0 {
            if self.bot_community_count == 0 || self.bot_community_size == 0 {
                return Err(SynthError::Infeasible(
                    "fake tweets need at least one nonempty bot community".into(),
                ));
            }
            if self.amplification > self.bot_community_size {
                return Err(SynthError::Amplification {
                    amplification: self.amplification,
                    size: self.bot_community_size,
                });
            }
        }
        if self.n_genuine > 0 && (self.organic_pool == 0 || self.organic_groups == 0) {
            return Err(SynthError::Infeasible(
                "genuine tweets need an organic pool with at least one group".into(),
            ));
        }
        if self.organic_groups > self.organic_pool.max(1) {
            return Err(SynthError::Infeasible("more organic groups than organic users".into()));
        }
        if self.organic_retweets_min > self.organic_retweets_max || self.organic_retweets_max > self.organic_pool {
            return Err(SynthError::Infeasible(
                "organic retweet range must satisfy min <= max <= pool".into(),
            ));
        }
        for (name, p) in [
            ("in_group_prob", self.in_group_prob),
            ("leak_prob", self.leak_prob),
            ("fake_keyword_share", self.fake_keyword_share),
            ("genuine_keyword_share", self.genuine_keyword_share),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SynthError::Infeasible(format!("{name} must lie in [0, 1]")));
            }
        }
        if self.words_min == 0 || self.words_min > self.words_max {
            return Err(SynthError::Infeasible(
                "word count range must satisfy 1 <= min <= max".into(),
            ));
        }
        if self.span_days == 0 {
            return Err(SynthError::Infeasible("span_days must be at least 1".into()));
        }
        Ok(())
    }
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticCorpus, SynthError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let organic: Vec<String> = (0..spec.organic_pool).map(|i| format!("user{i:04}")).collect();
    let group_of = |i: usize| i % spec.organic_groups.max(1);
    let groups: Vec<Vec<usize>> = (0..spec.organic_groups)
        .map(|g| (0..spec.organic_pool).filter(|&i| group_of(i) == g).collect())
        .collect();
    let bot_communities: Vec<Vec<String>> = if spec.n_fake > 0 {
        (0..spec.bot_community_count)
            .map(|c| {
                (0..spec.bot_community_size)
                    .map(|j| format!("acct{c}x{j:03}"))
                    .collect()
            })
            .collect()
    } else {
        Vec::new()
    };
    let all_bots: Vec<&String> = bot_communities.iter().flatten().collect();

    let mut plan: Vec<bool> = std::iter::repeat_n(false, spec.n_genuine)
        .chain(std::iter::repeat_n(true, spec.n_fake))
        .collect();
    plan.shuffle(&mut rng);

    let span = spec.span_days * 86_400;
    let mut tweets = Vec::with_capacity(plan.len());
    for (k, &fake) in plan.iter().enumerate() {
        let timestamp = spec.start_timestamp + rng.gen_range(0..span);
        let (author, text, tags, retweeters) = if fake {
            let community = &bot_communities[rng.gen_range(0..bot_communities.len())];
            let author = community[rng.gen_range(0..community.len())].clone();
            let mut rts: Vec<String> = index::sample(&mut rng, community.len(), spec.amplification)
                .into_iter()
                .map(|i| community[i].clone())
                .collect();
            if !organic.is_empty() && rng.gen_bool(spec.leak_prob) {
                rts.push(organic[rng.gen_range(0..organic.len())].clone());
            }
            let text = sentence(&mut rng, spec, spec.fake_keyword_share);
            (author, text, hashtags(&mut rng, FAKE_TAGS), rts)
        } else {
            let a = rng.gen_range(0..organic.len());
            let own = &groups[group_of(a)];
            let n = rng.gen_range(spec.organic_retweets_min..=spec.organic_retweets_max);
            let mut picked: Vec<usize> = Vec::with_capacity(n);
            let mut guard = 0;
            while picked.len() < n && guard < 100 * (n + 1) {
                guard += 1;
                let cand = if rng.gen_bool(spec.in_group_prob) {
                    own[rng.gen_range(0..own.len())]
                } else {
                    rng.gen_range(0..organic.len())
                };
                if cand != a && !picked.contains(&cand) {
                    picked.push(cand);
                }
            }
            let mut rts: Vec<String> = picked.into_iter().map(|i| organic[i].clone()).collect();
            if !all_bots.is_empty() && rng.gen_bool(spec.leak_prob) {
                rts.push(all_bots[rng.gen_range(0..all_bots.len())].clone());
            }
            let text = sentence(&mut rng, spec, spec.genuine_keyword_share);
            (organic[a].clone(), text, hashtags(&mut rng, GENUINE_TAGS), rts)
        };
        tweets.push(Tweet {
            id: format!("t{k:06}"),
            text,
            author,
            retweeters,
            hashtags: tags,
            timestamp,
            label: Some(if fake { Label::Fake } else { Label::Genuine }),
        });
    }
    let corpus = Corpus::new(tweets).map_err(|e| SynthError::Infeasible(e.to_string()))?;
    Ok(SyntheticCorpus {
        corpus,
        bot_communities,
    })
}
