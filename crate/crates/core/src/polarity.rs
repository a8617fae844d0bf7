//! Lexicon-based polarity scoring and the three-way labeler.
//!
//! Each token found in the lexicon contributes its polarity, multiplied by the
//! negation factor when the token right before it is a negator. The comment
//! score is the mean contribution, clamped to `[-1, 1]`; a comment with no
//! lexicon hits scores exactly zero.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::corpus::{Annotation, Dataset, Record, SentimentClass};
use crate::text::{surface_tokens, LemmaRules, Token};

const DEFAULT_LEXICON: &str = include_str!("../resources/lexicon.tsv");

pub const DEFAULT_NEGATORS: [&str; 4] = ["not", "no", "never", "nt"];
pub const DEFAULT_NEGATION_FACTOR: f64 = -0.5;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("lexicon file not found: {0}")]
    NotFound(String),
    #[error("failed to read lexicon {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Malformed {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: polarity {value} for {word:?} is outside [-1, 1]")]
    OutOfRange {
        path: String,
        line: usize,
        word: String,
        value: f64,
    },
}

#[derive(Debug, Error, PartialEq)]
#[error("polarity {0} is outside [-1, 1]")]
pub struct PolarityOutOfRange(pub f64);

#[derive(Debug, Clone)]
pub struct Lexicon {
    polarities: HashMap<String, f64>,
    negators: HashSet<String>,
    negation_factor: f64,
    lemma_fallback: Option<LemmaRules>,
}

impl Lexicon {
    /// Lexicon with the default negators and no lemma fallback.
    pub fn new(polarities: HashMap<String, f64>) -> Self {
        Lexicon {
            polarities,
            negators: DEFAULT_NEGATORS.iter().map(|s| s.to_string()).collect(),
            negation_factor: DEFAULT_NEGATION_FACTOR,
            lemma_fallback: None,
        }
    }

    pub fn from_entries<'a>(entries: impl IntoIterator<Item = (&'a str, f64)>) -> Self {
        Self::new(entries.into_iter().map(|(w, p)| (w.to_string(), p)).collect())
    }

    /// Lookups that miss on the surface form retry with the word's lemma.
    pub fn with_lemma_fallback(mut self, rules: LemmaRules) -> Self {
        self.lemma_fallback = Some(rules);
        self
    }

    pub fn with_negation_factor(mut self, factor: f64) -> Self {
        self.negation_factor = factor;
        self
    }

    /// Same lexicon with every polarity sign-flipped.
    pub fn negated(&self) -> Self {
        let mut out = self.clone();
        for p in out.polarities.values_mut() {
            *p = -*p;
        }
        out
    }

    pub fn len(&self) -> usize {
        self.polarities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polarities.is_empty()
    }

    pub fn negation_factor(&self) -> f64 {
        self.negation_factor
    }

    pub fn is_negator(&self, word: &str) -> bool {
        self.negators.contains(word)
    }

    /// Entries sorted by word, for deterministic iteration.
    pub fn sorted_entries(&self) -> Vec<(&str, f64)> {
        let mut entries: Vec<_> = self.polarities.iter().map(|(w, &p)| (w.as_str(), p)).collect();
        entries.sort_by(|a, b| a.0.cmp(b.0));
        entries
    }

    pub fn polarity(&self, word: &str) -> Option<f64> {
        if let Some(&p) = self.polarities.get(word) {
            return Some(p);
        }
        let rules = self.lemma_fallback.as_ref()?;
        let lemma = rules.lemma_of(word);
        if lemma == word {
            None
        } else {
            self.polarities.get(&lemma).copied()
        }
    }

    pub fn max_abs_polarity(&self) -> f64 {
        self.polarities.values().fold(0.0, |m, p| m.max(p.abs()))
    }
}

impl Default for Lexicon {
    /// The shipped gaming lexicon with lemma fallback.
    fn default() -> Self {
        parse_lexicon(DEFAULT_LEXICON, "<embedded>")
            .expect("embedded lexicon parses")
            .with_lemma_fallback(LemmaRules::default())
    }
}

fn parse_lexicon(text: &str, path: &str) -> Result<Lexicon, LexiconError> {
    let negators: HashSet<&str> = DEFAULT_NEGATORS.into_iter().collect();
    let mut polarities = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let malformed = |message: String| LexiconError::Malformed {
            path: path.to_string(),
            line: i + 1,
            message,
        };
        let (word, value) = line
            .split_once('\t')
            .ok_or_else(|| malformed("expected `word<TAB>polarity`".into()))?;
        let word = word.trim().to_lowercase();
        if word.is_empty() {
            return Err(malformed("empty word".into()));
        }
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| malformed(format!("cannot parse polarity {:?}", value.trim())))?;
        if !(-1.0..=1.0).contains(&value) {
            return Err(LexiconError::OutOfRange {
                path: path.to_string(),
                line: i + 1,
                word,
                value,
            });
        }
        if negators.contains(word.as_str()) {
            return Err(malformed(format!("{word:?} is a negator and cannot carry polarity")));
        }
        polarities.insert(word, value);
    }
    Ok(Lexicon::new(polarities))
}

/// Reads a `word<TAB>polarity` file. The lemma fallback is not attached.
pub fn load_lexicon(path: &Path) -> Result<Lexicon, LexiconError> {
    let display = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            LexiconError::NotFound(display.clone())
        } else {
            LexiconError::Io {
                path: display.clone(),
                source,
            }
        }
    })?;
    parse_lexicon(&text, &display)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarityScore {
    pub value: f64,
    pub matched_count: usize,
}

/// Scores surface tokens (before stopword removal).
pub fn score(tokens: &[Token], lexicon: &Lexicon) -> PolarityScore {
    let mut sum = 0.0;
    let mut matched = 0usize;
    let mut prev: Option<&str> = None;
    for token in tokens {
        let word = token.as_str();
        if let Some(p) = lexicon.polarity(word) {
            let negated = prev.is_some_and(|w| lexicon.is_negator(w));
            sum += if negated { p * lexicon.negation_factor } else { p };
            matched += 1;
        }
        prev = Some(word);
    }
    if matched == 0 {
        return PolarityScore {
            value: 0.0,
            matched_count: 0,
        };
    }
    PolarityScore {
        value: (sum / matched as f64).clamp(-1.0, 1.0),
        matched_count: matched,
    }
}

pub fn score_text(text: &str, lexicon: &Lexicon) -> PolarityScore {
    score(&surface_tokens(text), lexicon)
}

/// Sign rule: exactly zero is Neutral.
pub fn classify(polarity: f64) -> Result<SentimentClass, PolarityOutOfRange> {
    classify_with_band(polarity, 0.0)
}

/// Scores with `|polarity| <= band` are Neutral.
pub fn classify_with_band(polarity: f64, band: f64) -> Result<SentimentClass, PolarityOutOfRange> {
    if !(-1.0..=1.0).contains(&polarity) {
        return Err(PolarityOutOfRange(polarity));
    }
    Ok(if polarity > band {
        SentimentClass::Positive
    } else if polarity < -band {
        SentimentClass::Negative
    } else {
        SentimentClass::Neutral
    })
}

pub fn label_dataset(dataset: &Dataset, lexicon: &Lexicon) -> Dataset {
    label_dataset_with_band(dataset, lexicon, 0.0)
}

pub fn label_dataset_with_band(dataset: &Dataset, lexicon: &Lexicon, band: f64) -> Dataset {
    let records = dataset
        .records()
        .iter()
        .map(|r| {
            let polarity = score_text(&r.comment.text, lexicon).value;
            let label = classify_with_band(polarity, band).expect("scores are clamped");
            Record {
                comment: r.comment.clone(),
                annotation: Some(Annotation { polarity, label }),
            }
        })
        .collect();
    Dataset::new(records, dataset.provenance.clone())
}

/// `[negative, neutral, positive]` counts for a labeled dataset.
pub fn distribution(dataset: &Dataset) -> [usize; 3] {
    dataset.class_counts()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tests::comment;
    use crate::corpus::Provenance;
    use proptest::prelude::*;

    fn toks(words: &[&str]) -> Vec<Token> {
        words.iter().map(|w| Token::new(*w).unwrap()).collect()
    }

    fn small() -> Lexicon {
        Lexicon::from_entries([("good", 0.7), ("bad", -0.7)])
    }

    #[test]
    fn score_examples() {
        let lex = small();
        assert_eq!(
            score(&toks(&["good"]), &lex),
            PolarityScore {
                value: 0.7,
                matched_count: 1
            }
        );
        assert_eq!(score(&toks(&["good", "bad"]), &lex).value, 0.0);
        // 0.7 * -0.5
        let negated = score(&toks(&["not", "good"]), &lex);
        assert!((negated.value - -0.35).abs() < 1e-15);
        assert_eq!(negated.matched_count, 1);
        assert_eq!(score(&[], &lex).value, 0.0);
    }

    #[test]
    fn negation_window_is_one_token() {
        let lex = small();
        assert_eq!(score(&toks(&["not", "really", "good"]), &lex).value, 0.7);
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify(0.0), Ok(SentimentClass::Neutral));
        assert_eq!(classify(0.001), Ok(SentimentClass::Positive));
        assert_eq!(classify(-1.0), Ok(SentimentClass::Negative));
        assert_eq!(classify(1.5), Err(PolarityOutOfRange(1.5)));
        assert!(classify(f64::NAN).is_err());
        assert_eq!(classify_with_band(0.04, 0.05), Ok(SentimentClass::Neutral));
    }

    #[test]
    fn label_dataset_examples() {
        let lex = small();
        let d = Dataset::from_comments(
            vec![
                comment("1", "This is GOOD!"),
                comment("2", "it exists"),
                comment("3", "not good, bad"),
            ],
            Provenance::source("t"),
        );
        let labeled = label_dataset(&d, &lex);
        let labels: Vec<_> = labeled.records().iter().map(|r| r.label().unwrap()).collect();
        assert_eq!(
            labels,
            [
                SentimentClass::Positive,
                SentimentClass::Neutral,
                SentimentClass::Negative
            ]
        );
        // (-0.35 + -0.7) / 2
        assert!((labeled.records()[2].polarity().unwrap() - -0.525).abs() < 1e-15);
        assert_eq!(label_dataset(&labeled, &lex), labeled);
        assert!(label_dataset(&Dataset::default(), &lex).is_empty());
    }

    #[test]
    fn default_lexicon_shape() {
        let lex = Lexicon::default();
        assert!(lex.len() >= 190);
        assert_eq!(lex.polarity("masterpiece"), Some(1.0));
        assert_eq!(lex.polarity("great"), Some(0.8));
        assert_eq!(lex.polarity("awful"), Some(-0.8));
        assert_eq!(lex.polarity("broken"), Some(-0.6));
        // lemma fallback: "glitches" -> "glitch"
        assert_eq!(lex.polarity("glitches"), lex.polarity("glitch"));
        for neg in DEFAULT_NEGATORS {
            assert_eq!(lex.polarity(neg), None);
        }
    }

    #[test]
    fn load_lexicon_examples() {
        let dir = tempfile::tempdir().unwrap();
        let ok = dir.path().join("ok.tsv");
        fs::write(&ok, "# comment\ngreat\t0.8\nawful\t-0.8\n").unwrap();
        assert_eq!(load_lexicon(&ok).unwrap().len(), 2);

        let range = dir.path().join("range.tsv");
        fs::write(&range, "good\t0.5\ngreat\t1.5\n").unwrap();
        assert!(matches!(
            load_lexicon(&range),
            Err(LexiconError::OutOfRange { line: 2, .. })
        ));

        let empty = dir.path().join("empty.tsv");
        fs::write(&empty, "").unwrap();
        let lex = load_lexicon(&empty).unwrap();
        assert!(lex.is_empty());
        assert_eq!(score_text("great game", &lex).value, 0.0);

        let bad = dir.path().join("bad.tsv");
        fs::write(&bad, "great 0.8\n").unwrap();
        assert!(matches!(
            load_lexicon(&bad),
            Err(LexiconError::Malformed { line: 1, .. })
        ));
        assert!(matches!(
            load_lexicon(&dir.path().join("nope.tsv")),
            Err(LexiconError::NotFound(_))
        ));
    }

    fn arb_words() -> impl Strategy<Value = Vec<Token>> {
        const VOCAB: [&str; 10] = ["good", "bad", "great", "awful", "not", "never", "game", "boss", "fun", "lag"];
        proptest::collection::vec(proptest::sample::select(&VOCAB[..]), 0..15)
            .prop_map(|ws| ws.into_iter().map(|w| Token::new(w).unwrap()).collect())
    }

    fn lex4() -> Lexicon {
        Lexicon::from_entries([("good", 0.7), ("bad", -0.7), ("great", 0.8), ("awful", -0.9), ("fun", 0.3), ("lag", -0.2)])
    }

    proptest! {
        #[test]
        fn antisymmetry(tokens in arb_words()) {
            let lex = lex4();
            let a = score(&tokens, &lex).value;
            let b = score(&tokens, &lex.negated()).value;
            prop_assert_eq!(a, -b);
            if a != 0.0 {
                prop_assert_eq!(a.to_bits(), (-b).to_bits());
            }
        }

        #[test]
        fn bounded_by_max_abs(tokens in arb_words()) {
            let lex = lex4();
            prop_assert!(score(&tokens, &lex).value.abs() <= lex.max_abs_polarity());
        }

        #[test]
        fn permutation_invariant_without_negators(mut tokens in arb_words(), seed in any::<u64>()) {
            let lex = lex4();
            tokens.retain(|t| !lex.is_negator(t.as_str()));
            let a = score(&tokens, &lex);
            let mut shuffled = tokens.clone();
            shuffled.rotate_left(if tokens.is_empty() { 0 } else { (seed as usize) % tokens.len() });
            shuffled.reverse();
            let b = score(&shuffled, &lex);
            prop_assert_eq!(a.matched_count, b.matched_count);
            prop_assert!((a.value - b.value).abs() < 1e-12);
        }

        #[test]
        fn no_match_is_neutral(tokens in proptest::collection::vec("[a-z]{2,6}", 0..10)) {
            let lex = Lexicon::from_entries([("zzzzzzz", 0.5)]);
            let tokens: Vec<Token> = tokens.into_iter().map(|w| Token::new(w).unwrap()).collect();
            let s = score(&tokens, &lex);
            prop_assert_eq!(s.matched_count, 0);
            prop_assert_eq!(classify(s.value), Ok(SentimentClass::Neutral));
        }
    }
}
