//! Comment preprocessing.
//!
//! Six stages applied in a fixed order:
//! lowercase → strip_special → clean_whitespace → tokenize → remove_stopwords → lemmatize.
//!
//! Every stage is a pure function and can be called on its own. [`preprocess`]
//! is exactly the composition of all six.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const DEFAULT_STOPWORDS: &str = include_str!("../resources/stopwords.txt");
const DEFAULT_EXCEPTIONS: &str = include_str!("../resources/lemma_exceptions.tsv");
const DEFAULT_KNOWN_WORDS: &str = include_str!("../resources/known_words.txt");

/// Tokens shorter than this are dropped unless they are numeric.
pub const MIN_TOKEN_CHARS: usize = 2;

#[derive(Debug, Error)]
pub enum TextError {
    #[error("invalid token {0:?}: tokens must be non-empty lowercase alphanumerics")]
    InvalidToken(String),
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: expected `form<TAB>lemma`")]
    MalformedLine { path: String, line: usize },
}

/// A single normalized word: non-empty, lowercase, alphanumeric only.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Token(String);

impl Token {
    pub fn new(surface: impl Into<String>) -> Result<Self, TextError> {
        let surface = surface.into();
        if !surface.is_empty() && surface.chars().all(is_token_char) {
            Ok(Token(surface))
        } else {
            Err(TextError::InvalidToken(surface))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Token {
    type Error = TextError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Token::new(value)
    }
}

impl From<Token> for String {
    fn from(t: Token) -> Self {
        t.0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Token {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Letters with no lowercase mapping (e.g. `ϒ`) stay uppercase after
/// [`lowercase`]; they are treated as separators so tokens never carry them.
fn is_token_char(c: char) -> bool {
    c.is_alphanumeric() && !c.is_uppercase()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopwordList {
    words: HashSet<String>,
}

impl StopwordList {
    /// Builds a list from arbitrary words; entries are lowercased.
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let words = words
            .into_iter()
            .map(|w| w.as_ref().trim().to_lowercase())
            .filter(|w| !w.is_empty())
            .collect();
        StopwordList { words }
    }

    fn parse(text: &str) -> Self {
        Self::from_words(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    /// One word per line; `#` lines are comments.
    pub fn load(path: &Path) -> Result<Self, TextError> {
        let text = fs::read_to_string(path).map_err(|source| TextError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(Self::parse(&text))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

impl Default for StopwordList {
    fn default() -> Self {
        Self::parse(DEFAULT_STOPWORDS)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuffixRule {
    pub suffix: String,
    pub replacement: String,
    pub min_stem_len: usize,
}

impl SuffixRule {
    pub fn new(suffix: &str, replacement: &str, min_stem_len: usize) -> Self {
        SuffixRule {
            suffix: suffix.to_string(),
            replacement: replacement.to_string(),
            min_stem_len,
        }
    }
}

/// Rule-based lemmatizer tables.
///
/// A word found in `known_words` is already a lemma and is returned unchanged.
/// Otherwise the exception table is consulted, then each suffix rule in order.
/// A rule fires only when the stripped stem is long enough and, if
/// `known_words` is non-empty, the candidate lemma is a known word. For rules
/// with an empty replacement a doubled final consonant is also undone
/// (`runn` → `run`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LemmaRules {
    pub exceptions: HashMap<String, String>,
    pub suffix_rules: Vec<SuffixRule>,
    pub known_words: HashSet<String>,
}

impl LemmaRules {
    pub fn new(
        exceptions: HashMap<String, String>,
        suffix_rules: Vec<SuffixRule>,
        known_words: HashSet<String>,
    ) -> Self {
        LemmaRules {
            exceptions,
            suffix_rules,
            known_words,
        }
    }

    /// The shipped suffix rules, in application order.
    pub fn default_suffix_rules() -> Vec<SuffixRule> {
        vec![
            SuffixRule::new("ies", "y", 2),
            SuffixRule::new("ied", "y", 2),
            SuffixRule::new("sses", "ss", 2),
            SuffixRule::new("es", "", 2),
            SuffixRule::new("s", "", 3),
            SuffixRule::new("ing", "", 3),
            SuffixRule::new("ing", "e", 2),
            SuffixRule::new("ed", "", 3),
            SuffixRule::new("ed", "e", 2),
        ]
    }

    /// Replaces the exception table with a `form<TAB>lemma` file.
    pub fn with_exceptions_file(mut self, path: &Path) -> Result<Self, TextError> {
        let display = path.display().to_string();
        let text = fs::read_to_string(path).map_err(|source| TextError::Io {
            path: display.clone(),
            source,
        })?;
        self.exceptions = parse_exceptions(&text, &display)?;
        for lemma in self.exceptions.values() {
            self.known_words.insert(lemma.clone());
        }
        Ok(self)
    }

    pub fn lemma_of(&self, word: &str) -> String {
        if self.known_words.contains(word) {
            return word.to_string();
        }
        if let Some(lemma) = self.exceptions.get(word) {
            return lemma.clone();
        }
        for rule in &self.suffix_rules {
            let Some(stem) = word.strip_suffix(rule.suffix.as_str()) else {
                continue;
            };
            if stem.chars().count() < rule.min_stem_len {
                continue;
            }
            let candidate = format!("{stem}{}", rule.replacement);
            if self.known_words.is_empty() {
                return candidate;
            }
            if self.known_words.contains(&candidate) {
                return candidate;
            }
            if rule.replacement.is_empty() {
                if let Some(undoubled) = undouble(stem) {
                    if self.known_words.contains(undoubled) {
                        return undoubled.to_string();
                    }
                }
            }
        }
        word.to_string()
    }
}

impl Default for LemmaRules {
    fn default() -> Self {
        let exceptions =
            parse_exceptions(DEFAULT_EXCEPTIONS, "<embedded>").expect("embedded exceptions parse");
        let mut known_words: HashSet<String> = DEFAULT_KNOWN_WORDS
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_string)
            .collect();
        known_words.extend(exceptions.values().cloned());
        LemmaRules::new(exceptions, Self::default_suffix_rules(), known_words)
    }
}

fn parse_exceptions(text: &str, path: &str) -> Result<HashMap<String, String>, TextError> {
    let mut out = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split('\t');
        match (parts.next(), parts.next(), parts.next()) {
            (Some(form), Some(lemma), None) if !form.is_empty() && !lemma.is_empty() => {
                out.insert(form.trim().to_lowercase(), lemma.trim().to_lowercase());
            }
            _ => {
                return Err(TextError::MalformedLine {
                    path: path.to_string(),
                    line: i + 1,
                })
            }
        }
    }
    Ok(out)
}

/// `stopp` → `stop`; vowels and `l`/`s`/`z` doubles are left alone.
fn undouble(stem: &str) -> Option<&str> {
    let mut rev = stem.chars().rev();
    let last = rev.next()?;
    let prev = rev.next()?;
    if last == prev && last.is_ascii_alphabetic() && !"aeioulsz".contains(last) {
        Some(&stem[..stem.len() - last.len_utf8()])
    } else {
        None
    }
}

pub fn lowercase(text: &str) -> String {
    text.to_lowercase()
}

/// Replaces every character that is not a letter, digit or whitespace with a space.
pub fn strip_special(text: &str) -> String {
    text.chars()
        .map(|c| {
            if c.is_alphanumeric() || c.is_whitespace() {
                c
            } else {
                ' '
            }
        })
        .collect()
}

pub fn clean_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Splits on whitespace after applying [`lowercase`] and [`strip_special`].
///
/// Single-character tokens are discarded unless they are numeric.
pub fn tokenize(text: &str) -> Vec<Token> {
    split_tokens(&strip_special(&lowercase(text)))
}

fn split_tokens(text: &str) -> Vec<Token> {
    text.split(|c: char| !is_token_char(c))
        .filter(|seg| !seg.is_empty())
        .filter(|seg| {
            let mut chars = seg.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => c.is_numeric(),
                _ => seg.chars().count() >= MIN_TOKEN_CHARS,
            }
        })
        .map(|seg| Token(seg.to_string()))
        .collect()
}

pub fn remove_stopwords(tokens: &[Token], stops: &StopwordList) -> Vec<Token> {
    tokens
        .iter()
        .filter(|t| !stops.contains(t.as_str()))
        .cloned()
        .collect()
}

pub fn lemmatize(tokens: &[Token], rules: &LemmaRules) -> Vec<Token> {
    tokens
        .iter()
        .map(|t| {
            let lemma = rules.lemma_of(t.as_str());
            Token::new(lemma).unwrap_or_else(|_| t.clone())
        })
        .collect()
}

/// Tokens for the polarity labeler: lowercased, stripped, tokenized, with
/// stopwords and inflections kept so negators survive.
pub fn surface_tokens(text: &str) -> Vec<Token> {
    split_tokens(&clean_whitespace(&strip_special(&lowercase(text))))
}

/// The full six-stage pipeline.
pub fn preprocess(text: &str, stops: &StopwordList, rules: &LemmaRules) -> Vec<Token> {
    let cleaned = clean_whitespace(&strip_special(&lowercase(text)));
    lemmatize(&remove_stopwords(&tokenize(&cleaned), stops), rules)
}

/// Stopword list and lemmatizer bundled for repeated use.
#[derive(Debug, Clone, Default)]
pub struct Preprocessor {
    pub stops: StopwordList,
    pub rules: LemmaRules,
}

impl Preprocessor {
    pub fn new(stops: StopwordList, rules: LemmaRules) -> Self {
        Preprocessor { stops, rules }
    }

    pub fn run(&self, text: &str) -> Vec<Token> {
        preprocess(text, &self.stops, &self.rules)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(words: &[&str]) -> Vec<Token> {
        words.iter().map(|w| Token::new(*w).unwrap()).collect()
    }

    fn strs(tokens: &[Token]) -> Vec<&str> {
        tokens.iter().map(Token::as_str).collect()
    }

    #[test]
    fn lowercase_examples() {
        assert_eq!(lowercase("Hello WORLD"), "hello world");
        assert_eq!(lowercase(""), "");
    }

    #[test]
    fn strip_special_replaces_with_spaces() {
        assert_eq!(strip_special("great!!!"), "great   ");
        assert_eq!(strip_special("10/10"), "10 10");
        assert_eq!(strip_special("🔥🔥"), "  ");
        assert_eq!(strip_special("don't"), "don t");
    }

    #[test]
    fn clean_whitespace_examples() {
        assert_eq!(clean_whitespace("  a   b  "), "a b");
        assert_eq!(clean_whitespace(""), "");
        assert_eq!(clean_whitespace("a\n\tb"), "a b");
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(strs(&tokenize("game great")), ["game", "great"]);
        assert!(tokenize("").is_empty());
        assert_eq!(strs(&tokenize("ab  cd")), ["ab", "cd"]);
        assert_eq!(strs(&tokenize("don't")), ["don"]);
        assert_eq!(strs(&tokenize("a 7 b 10")), ["7", "10"]);
    }

    #[test]
    fn tokenize_splits_on_uncased_capitals() {
        // U+03D2 is uppercase with no lowercase mapping.
        assert_eq!(strs(&tokenize("abϒcd")), ["ab", "cd"]);
    }

    #[test]
    fn stopword_list_contents() {
        let stops = StopwordList::default();
        for w in ["the", "and", "is", "are"] {
            assert!(stops.contains(w), "{w}");
        }
        for w in ["not", "no", "never", "nt", "n't"] {
            assert!(!stops.contains(w), "{w}");
        }
        assert!(stops.len() >= 170, "{}", stops.len());
    }

    #[test]
    fn remove_stopwords_examples() {
        let stops = StopwordList::default();
        let out = remove_stopwords(&toks(&["the", "game", "is", "great"]), &stops);
        assert_eq!(strs(&out), ["game", "great"]);
        assert!(remove_stopwords(&[], &stops).is_empty());
        let content = toks(&["game", "great"]);
        assert_eq!(remove_stopwords(&content, &stops), content);
    }

    #[test]
    fn lemmatize_examples() {
        let rules = LemmaRules::default();
        assert_eq!(strs(&lemmatize(&toks(&["games"]), &rules)), ["game"]);
        assert_eq!(strs(&lemmatize(&toks(&["running"]), &rules)), ["run"]);
        assert_eq!(strs(&lemmatize(&toks(&["game"]), &rules)), ["game"]);
        assert_eq!(strs(&lemmatize(&toks(&["bosses"]), &rules)), ["boss"]);
        assert_eq!(strs(&lemmatize(&toks(&["enemies"]), &rules)), ["enemy"]);
        assert_eq!(strs(&lemmatize(&toks(&["stopped"]), &rules)), ["stop"]);
        assert_eq!(strs(&lemmatize(&toks(&["played"]), &rules)), ["play"]);
        assert_eq!(strs(&lemmatize(&toks(&["unknownish"]), &rules)), ["unknownish"]);
    }

    #[test]
    fn suffix_rule_by_hand_without_known_words() {
        let rules = LemmaRules::new(
            HashMap::new(),
            vec![SuffixRule::new("s", "", 3)],
            HashSet::new(),
        );
        assert_eq!(rules.lemma_of("games"), "game");
        // stem "is" is shorter than 3
        assert_eq!(rules.lemma_of("iss"), "iss");
    }

    #[test]
    fn shipped_lemmas_are_fixed_points() {
        let rules = LemmaRules::default();
        for lemma in rules.exceptions.values() {
            assert_eq!(&rules.lemma_of(lemma), lemma);
        }
        for w in &rules.known_words {
            assert_eq!(&rules.lemma_of(w), w);
        }
    }

    #[test]
    fn preprocess_examples() {
        let p = Preprocessor::default();
        assert_eq!(strs(&p.run("The game is GREAT!!!")), ["game", "great"]);
        assert!(p.run("").is_empty());
        assert!(p.run("???!!!").is_empty());
    }

    #[test]
    fn exceptions_file_errors_name_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ex.tsv");
        fs::write(&path, "went\tgo\nbroken line\n").unwrap();
        match LemmaRules::default().with_exceptions_file(&path) {
            Err(TextError::MalformedLine { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn token_rejects_bad_surfaces() {
        assert!(Token::new("").is_err());
        assert!(Token::new("Game").is_err());
        assert!(Token::new("a b").is_err());
        assert!(Token::new("x!").is_err());
        assert!(Token::new("ok").is_ok());
    }

    proptest! {
        #[test]
        fn lowercase_is_idempotent(s in any::<String>()) {
            let once = lowercase(&s);
            prop_assert_eq!(lowercase(&once), once);
        }

        #[test]
        fn clean_whitespace_is_idempotent(s in any::<String>()) {
            let once = clean_whitespace(&s);
            prop_assert_eq!(clean_whitespace(&once), once);
        }

        #[test]
        fn preprocess_matches_stage_chain(s in any::<String>()) {
            let p = Preprocessor::default();
            let chained = lemmatize(
                &remove_stopwords(
                    &tokenize(&clean_whitespace(&strip_special(&lowercase(&s)))),
                    &p.stops,
                ),
                &p.rules,
            );
            let out = p.run(&s);
            prop_assert_eq!(&out, &chained);
            for t in &out {
                prop_assert!(t.as_str().chars().all(|c| c.is_alphanumeric() && !c.is_uppercase()));
            }
            let joined = out.iter().map(Token::as_str).collect::<Vec<_>>().join(" ");
            prop_assert_eq!(tokenize(&joined), out);
        }

        #[test]
        fn stage_lengths(words in proptest::collection::vec("[a-z]{2,8}", 0..20)) {
            let p = Preprocessor::default();
            let tokens: Vec<Token> = words.iter().map(|w| Token::new(w.clone()).unwrap()).collect();
            let kept = remove_stopwords(&tokens, &p.stops);
            prop_assert!(kept.len() <= tokens.len());
            let lemmas = lemmatize(&kept, &p.rules);
            prop_assert_eq!(lemmas.len(), kept.len());
            prop_assert_eq!(lemmatize(&lemmas, &p.rules), lemmas);
        }
    }
}
