//! Vocabulary fitting and sparse Bag-of-Words / TF-IDF features.
//!
//! TF is the raw count, IDF is the smoothed `ln((1 + N) / (1 + df)) + 1`, and
//! TF-IDF vectors are L2-normalized. Out-of-vocabulary tokens are ignored.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::text::{Preprocessor, Token};

#[derive(Debug, Error)]
pub enum VectorizerError {
    #[error("cannot fit a vocabulary on an empty corpus")]
    EmptyCorpus,
    #[error("no token reaches min_df = {0}")]
    EmptyVocabulary(usize),
    #[error("I/O error on {path}: {source}")]
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
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Bow,
    #[default]
    Tfidf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    doc_freq: Vec<usize>,
    n_docs: usize,
    min_df: usize,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn min_df(&self) -> usize {
        self.min_df
    }

    pub fn column(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, column: usize) -> Option<&str> {
        self.tokens.get(column).map(String::as_str)
    }

    pub fn doc_freq(&self, token: &str) -> Option<usize> {
        self.column(token).map(|c| self.doc_freq[c])
    }

    pub fn idf_at(&self, column: usize) -> f64 {
        ((1 + self.n_docs) as f64 / (1 + self.doc_freq[column]) as f64).ln() + 1.0
    }

    pub fn idf(&self, token: &str) -> Option<f64> {
        self.column(token).map(|c| self.idf_at(c))
    }

    /// Content hash of the serialized vocabulary; models record it.
    pub fn id(&self) -> String {
        let digest = Sha256::digest(self.to_tsv().as_bytes());
        hex::encode(&digest[..8])
    }

    /// Header `#n_docs=N\tmin_df=M`, then `token<TAB>column<TAB>doc_freq` per line.
    pub fn to_tsv(&self) -> String {
        let mut out = format!("#n_docs={}\tmin_df={}\n", self.n_docs, self.min_df);
        for (col, token) in self.tokens.iter().enumerate() {
            let _ = writeln!(out, "{token}\t{col}\t{}", self.doc_freq[col]);
        }
        out
    }

    pub fn from_tsv(text: &str, path: &str) -> Result<Self, VectorizerError> {
        let malformed = |line: usize, message: &str| VectorizerError::Malformed {
            path: path.to_string(),
            line,
            message: message.to_string(),
        };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| malformed(1, "missing header"))?;
        let header = header
            .strip_prefix('#')
            .ok_or_else(|| malformed(1, "header must start with '#'"))?;
        let mut n_docs = None;
        let mut min_df = None;
        for field in header.split('\t') {
            match field.split_once('=') {
                Some(("n_docs", v)) => n_docs = v.parse().ok(),
                Some(("min_df", v)) => min_df = v.parse().ok(),
                _ => return Err(malformed(1, "unknown header field")),
            }
        }
        let (Some(n_docs), Some(min_df)) = (n_docs, min_df) else {
            return Err(malformed(1, "header needs n_docs and min_df"));
        };
        let mut tokens = Vec::new();
        let mut doc_freq = Vec::new();
        for (i, line) in lines {
            let parts: Vec<&str> = line.split('\t').collect();
            let [token, col, df] = parts[..] else {
                return Err(malformed(i + 1, "expected token<TAB>column<TAB>doc_freq"));
            };
            let col: usize = col.parse().map_err(|_| malformed(i + 1, "bad column"))?;
            let df: usize = df.parse().map_err(|_| malformed(i + 1, "bad doc_freq"))?;
            if col != tokens.len() {
                return Err(malformed(i + 1, "columns must be contiguous from 0"));
            }
            if df > n_docs || df < min_df {
                return Err(malformed(i + 1, "doc_freq outside [min_df, n_docs]"));
            }
            tokens.push(token.to_string());
            doc_freq.push(df);
        }
        let index: HashMap<String, usize> = tokens.iter().cloned().zip(0..).collect();
        if index.len() != tokens.len() {
            return Err(malformed(1, "duplicate token"));
        }
        Ok(Vocabulary {
            tokens,
            index,
            doc_freq,
            n_docs,
            min_df,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), VectorizerError> {
        fs::write(path, self.to_tsv()).map_err(|source| VectorizerError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, VectorizerError> {
        let display = path.display().to_string();
        let text = fs::read_to_string(path).map_err(|source| VectorizerError::Io {
            path: display.clone(),
            source,
        })?;
        Self::from_tsv(&text, &display)
    }
}

/// Sparse vector with strictly increasing column ids and no stored zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    entries: Vec<(usize, f64)>,
    dimension: usize,
}

impl FeatureVector {
    pub fn zeros(dimension: usize) -> Self {
        FeatureVector {
            entries: Vec::new(),
            dimension,
        }
    }

    /// Sums duplicate columns and drops zeros.
    ///
    /// Panics if a column is `>= dimension`.
    pub fn from_pairs(dimension: usize, pairs: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
        for (col, w) in pairs {
            assert!(col < dimension, "column {col} out of range for dimension {dimension}");
            *acc.entry(col).or_insert(0.0) += w;
        }
        FeatureVector {
            entries: acc.into_iter().filter(|&(_, w)| w != 0.0).collect(),
            dimension,
        }
    }

    pub fn from_dense(values: &[f64]) -> Self {
        Self::from_pairs(values.len(), values.iter().copied().enumerate())
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, column: usize) -> f64 {
        self.entries
            .binary_search_by_key(&column, |&(c, _)| c)
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(c, w)| w * dense[c]).sum()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_pairs(self.dimension, self.entries.iter().map(|&(c, w)| (c, w * factor)))
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dimension];
        for &(c, w) in &self.entries {
            out[c] = w;
        }
        out
    }
}

pub fn fit<T: AsRef<str>>(train_docs: &[Vec<T>], min_df: usize) -> Result<Vocabulary, VectorizerError> {
    if train_docs.is_empty() {
        return Err(VectorizerError::EmptyCorpus);
    }
    let mut order: Vec<&str> = Vec::new();
    let mut df: HashMap<&str, usize> = HashMap::new();
    for doc in train_docs {
        let mut seen = HashSet::new();
        for tok in doc {
            let tok = tok.as_ref();
            if !seen.insert(tok) {
                continue;
            }
            let count = df.entry(tok).or_insert_with(|| {
                order.push(tok);
                0
            });
            *count += 1;
        }
    }
    let mut tokens = Vec::new();
    let mut doc_freq = Vec::new();
    for tok in order {
        let f = df[tok];
        if f >= min_df {
            tokens.push(tok.to_string());
            doc_freq.push(f);
        }
    }
    if tokens.is_empty() {
        return Err(VectorizerError::EmptyVocabulary(min_df));
    }
    let index = tokens.iter().cloned().zip(0..).collect();
    Ok(Vocabulary {
        tokens,
        index,
        doc_freq,
        n_docs: train_docs.len(),
        min_df,
    })
}

pub fn fit_tokens(train_docs: &[Vec<Token>], min_df: usize) -> Result<Vocabulary, VectorizerError> {
    fit(train_docs, min_df)
}

pub fn transform_bow<T: AsRef<str>>(doc: &[T], vocab: &Vocabulary) -> FeatureVector {
    FeatureVector::from_pairs(
        vocab.len(),
        doc.iter().filter_map(|t| vocab.column(t.as_ref())).map(|c| (c, 1.0)),
    )
}

pub fn transform_tfidf<T: AsRef<str>>(doc: &[T], vocab: &Vocabulary) -> FeatureVector {
    let counts = transform_bow(doc, vocab);
    let raw = FeatureVector::from_pairs(
        vocab.len(),
        counts.entries().iter().map(|&(c, n)| (c, n * vocab.idf_at(c))),
    );
    let norm = raw.norm();
    if norm == 0.0 {
        raw
    } else {
        raw.scaled(1.0 / norm)
    }
}

pub fn transform<T: AsRef<str>>(doc: &[T], vocab: &Vocabulary, kind: FeatureKind) -> FeatureVector {
    match kind {
        FeatureKind::Bow => transform_bow(doc, vocab),
        FeatureKind::Tfidf => transform_tfidf(doc, vocab),
    }
}

/// Raw comment text to feature vector: preprocessing, then BoW or TF-IDF.
#[derive(Debug, Clone)]
pub struct Featurizer {
    pub preprocessor: Preprocessor,
    pub vocabulary: Vocabulary,
    pub kind: FeatureKind,
}

impl Featurizer {
    /// Fits the vocabulary on `train_texts` only.
    pub fn fit<S: AsRef<str>>(
        preprocessor: Preprocessor,
        train_texts: &[S],
        min_df: usize,
        kind: FeatureKind,
    ) -> Result<Self, VectorizerError> {
        let docs: Vec<Vec<Token>> = train_texts.iter().map(|t| preprocessor.run(t.as_ref())).collect();
        let vocabulary = fit(&docs, min_df)?;
        Ok(Featurizer {
            preprocessor,
            vocabulary,
            kind,
        })
    }

    pub fn featurize(&self, text: &str) -> FeatureVector {
        transform(&self.preprocessor.run(text), &self.vocabulary, self.kind)
    }
}
