//! Seeded synthetic comment corpora.
//!
//! Each comment gets a target class (40% Positive, 30% Neutral, 30% Negative)
//! and 3 to 12 words. Positive and Negative targets draw one to four
//! sentiment words of the matching sign from the lexicon, Zipf-weighted by
//! alphabetical rank; the rest are neutral filler words. With probability
//! `noise_rate` one filler is replaced by a sentiment word of the opposite
//! sign (a random sign for Neutral targets). Casing and trailing punctuation are varied so preprocessing has
//! something to do.

use chrono::{DateTime, Duration, TimeZone, Utc};
use thiserror::Error;

use crate::corpus::{Comment, Dataset, Provenance, SentimentClass};
use crate::polarity::Lexicon;
use crate::rng::SplitRng;
use crate::text::surface_tokens;

pub const MIN_WORDS: usize = 3;
pub const MAX_WORDS: usize = 12;

/// Target class proportions, canonical order.
pub const CLASS_MIX: [(SentimentClass, f64); 3] = [
    (SentimentClass::Positive, 0.4),
    (SentimentClass::Neutral, 0.3),
    (SentimentClass::Negative, 0.3),
];

const FILLERS: &[&str] = &[
    "game", "games", "graphics", "boss", "bosses", "level", "levels", "story", "map", "quest",
    "combat", "player", "players", "character", "characters", "playing", "played", "hours",
    "ending", "dlc", "console", "pc", "controller", "trailer", "review", "ign", "sequel",
    "studio", "weapon", "weapons", "world", "open", "mission", "missions", "gameplay",
    "soundtrack", "music", "voice", "acting", "price", "update", "patch", "release", "online",
    "mode", "friends", "camera", "animation", "frames", "texture", "horse", "dragon", "kong",
    "elden", "ring", "arthur", "skull", "island", "honestly", "really", "just", "the", "this",
    "is", "and", "it", "my", "that", "was", "of", "to", "2023", "10", "pc", "ps5", "xbox",
];

const ENDINGS: &[&str] = &["", "", "", "!", "!!!", ".", "?", " 🔥", "...", " :)"];

#[derive(Debug, Error, PartialEq)]
pub enum SyntheticError {
    #[error("synthetic corpus size must be positive")]
    EmptyCorpus,
    #[error("noise rate {0} is outside [0, 1]")]
    NoiseRate(f64),
    #[error("lexicon needs at least one positive and one negative single-word entry")]
    DegenerateLexicon,
}

fn base_time() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2023, 1, 1, 0, 0, 0).unwrap()
}

/// Single-token lexicon words with polarity of the requested sign, sorted.
fn sentiment_words(lexicon: &Lexicon, positive: bool) -> Vec<String> {
    lexicon
        .sorted_entries()
        .into_iter()
        .filter(|&(_, p)| if positive { p > 0.0 } else { p < 0.0 })
        .filter(|&(w, _)| {
            let toks = surface_tokens(w);
            toks.len() == 1 && toks[0].as_str() == w
        })
        .map(|(w, _)| w.to_string())
        .collect()
}

/// Words drawn with probability proportional to `1 / rank`, so a few
/// sentiment words are common and most are rare, as in real comments.
struct ZipfPool {
    words: Vec<String>,
    cumulative: Vec<f64>,
}

impl ZipfPool {
    fn new(words: Vec<String>) -> Self {
        let mut total = 0.0;
        let cumulative = (1..=words.len())
            .map(|rank| {
                total += 1.0 / rank as f64;
                total
            })
            .collect();
        ZipfPool { words, cumulative }
    }

    fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    fn sample(&self, rng: &mut SplitRng) -> &str {
        let u = rng.unit_f64() * self.cumulative.last().copied().unwrap_or(0.0);
        let i = self.cumulative.partition_point(|&c| c <= u);
        &self.words[i.min(self.words.len() - 1)]
    }
}

pub fn generate_synthetic(
    n: usize,
    seed: u64,
    noise_rate: f64,
    lexicon: &Lexicon,
) -> Result<Dataset, SyntheticError> {
    generate_with_targets(n, seed, noise_rate, lexicon).map(|(d, _)| d)
}

/// Like [`generate_synthetic`], also returning each comment's target class.
pub fn generate_with_targets(
    n: usize,
    seed: u64,
    noise_rate: f64,
    lexicon: &Lexicon,
) -> Result<(Dataset, Vec<SentimentClass>), SyntheticError> {
    if n == 0 {
        return Err(SyntheticError::EmptyCorpus);
    }
    if !(0.0..=1.0).contains(&noise_rate) {
        return Err(SyntheticError::NoiseRate(noise_rate));
    }
    let positive = ZipfPool::new(sentiment_words(lexicon, true));
    let negative = ZipfPool::new(sentiment_words(lexicon, false));
    if positive.is_empty() || negative.is_empty() {
        return Err(SyntheticError::DegenerateLexicon);
    }
    let fillers: Vec<&str> = FILLERS
        .iter()
        .copied()
        .filter(|w| {
            surface_tokens(w)
                .iter()
                .all(|t| lexicon.polarity(t.as_str()).is_none() && !lexicon.is_negator(t.as_str()))
        })
        .collect();

    let mut rng = SplitRng::new(seed);
    let mut comments = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    let mut clock = base_time();
    for i in 0..n {
        let u = rng.unit_f64();
        let target = if u < CLASS_MIX[0].1 {
            SentimentClass::Positive
        } else if u < CLASS_MIX[0].1 + CLASS_MIX[1].1 {
            SentimentClass::Neutral
        } else {
            SentimentClass::Negative
        };
        let len = rng.range_inclusive(MIN_WORDS, MAX_WORDS);
        let mut words: Vec<String> = Vec::with_capacity(len);
        let pool = match target {
            SentimentClass::Positive => Some(&positive),
            SentimentClass::Negative => Some(&negative),
            SentimentClass::Neutral => None,
        };
        if let Some(pool) = pool {
            let k = rng.range_inclusive(1, (len / 3).max(1));
            for _ in 0..k {
                words.push(pool.sample(&mut rng).to_string());
            }
        }
        let first_filler = words.len();
        while words.len() < len {
            words.push(rng.choose(&fillers).to_string());
        }
        if rng.bernoulli(noise_rate) {
            let opposite = match target {
                SentimentClass::Positive => &negative,
                SentimentClass::Negative => &positive,
                SentimentClass::Neutral => {
                    if rng.bernoulli(0.5) {
                        &positive
                    } else {
                        &negative
                    }
                }
            };
            let slot = first_filler + rng.below(len - first_filler);
            words[slot] = opposite.sample(&mut rng).to_string();
        }
        rng.shuffle(&mut words);
        if rng.bernoulli(0.1) {
            let j = rng.below(words.len());
            words[j] = words[j].to_uppercase();
        }
        if rng.bernoulli(0.3) {
            let mut chars = words[0].chars();
            if let Some(first) = chars.next() {
                words[0] = first.to_uppercase().chain(chars).collect();
            }
        }
        let mut text = words.join(" ");
        text.push_str(rng.choose(ENDINGS));

        targets.push(target);
        clock += Duration::seconds(60 + rng.below(3600) as i64);
        comments.push(Comment {
            id: format!("syn-{seed}-{i:06}"),
            video_id: "synthetic".to_string(),
            text,
            published_at: clock,
            like_count: rng.below(500) as u64,
        });
    }
    let dataset = Dataset::from_comments(
        comments,
        Provenance {
            sources: vec!["synthetic".to_string()],
            fetched_at: None,
            seed: Some(seed),
        },
    );
    Ok((dataset, targets))
}
