//! Sentiment analysis pipeline for YouTube comments.
//!
//! Comments are fetched from the YouTube Data API (or generated), labeled by a
//! lexicon scorer, preprocessed, turned into TF-IDF features and used to train
//! three linear classifiers whose test-set metrics are compared.

pub mod classifiers;
pub mod corpus;
pub mod evaluation;
pub mod pipeline;
pub mod polarity;
pub mod rng;
pub mod synthetic;
pub mod text;
pub mod vectorizer;
pub mod youtube;
pub mod report;
