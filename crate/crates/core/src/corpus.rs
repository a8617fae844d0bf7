//! Comment data model and JSON Lines corpus files.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus file not found: {0}")]
    NotFound(String),
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
    #[error("{path}:{line}: duplicate comment id {id:?}")]
    DuplicateId {
        path: String,
        line: usize,
        id: String,
    },
}

/// Three-way sentiment label. Declaration order is the canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SentimentClass {
    Negative,
    Neutral,
    Positive,
}

impl SentimentClass {
    pub const ALL: [SentimentClass; 3] = [
        SentimentClass::Negative,
        SentimentClass::Neutral,
        SentimentClass::Positive,
    ];

    /// Position in the canonical order.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SentimentClass::Negative => "negative",
            SentimentClass::Neutral => "neutral",
            SentimentClass::Positive => "positive",
        }
    }
}

impl fmt::Display for SentimentClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SentimentClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "negative" => Ok(SentimentClass::Negative),
            "neutral" => Ok(SentimentClass::Neutral),
            "positive" => Ok(SentimentClass::Positive),
            other => Err(format!("unknown sentiment label {other:?}")),
        }
    }
}

/// A top-level YouTube comment. `text` is kept exactly as received.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comment {
    pub id: String,
    pub video_id: String,
    pub text: String,
    pub published_at: DateTime<Utc>,
    pub like_count: u64,
}

/// Polarity score and the label derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub polarity: f64,
    pub label: SentimentClass,
}

/// A comment, optionally annotated by the labeler.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub comment: Comment,
    pub annotation: Option<Annotation>,
}

impl Record {
    pub fn unlabeled(comment: Comment) -> Self {
        Record {
            comment,
            annotation: None,
        }
    }

    pub fn label(&self) -> Option<SentimentClass> {
        self.annotation.map(|a| a.label)
    }

    pub fn polarity(&self) -> Option<f64> {
        self.annotation.map(|a| a.polarity)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// Video ids, corpus paths, or `"synthetic"`.
    pub sources: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fetched_at: Option<DateTime<Utc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Provenance {
    pub fn source(name: impl Into<String>) -> Self {
        Provenance {
            sources: vec![name.into()],
            ..Default::default()
        }
    }
}

/// An ordered collection of records with unique ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    records: Vec<Record>,
    pub provenance: Provenance,
}

impl Dataset {
    /// Builds a dataset, dropping records whose id was already seen.
    pub fn new(records: Vec<Record>, provenance: Provenance) -> Self {
        let mut seen = HashSet::new();
        let records = records
            .into_iter()
            .filter(|r| seen.insert(r.comment.id.clone()))
            .collect();
        Dataset {
            records,
            provenance,
        }
    }

    pub fn from_comments(comments: Vec<Comment>, provenance: Provenance) -> Self {
        Self::new(comments.into_iter().map(Record::unlabeled).collect(), provenance)
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn into_records(self) -> Vec<Record> {
        self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn is_labeled(&self) -> bool {
        self.records.iter().all(|r| r.annotation.is_some())
    }

    /// Per-class counts in canonical order; unlabeled records are not counted.
    pub fn class_counts(&self) -> [usize; 3] {
        let mut counts = [0; 3];
        for label in self.records.iter().filter_map(Record::label) {
            counts[label.index()] += 1;
        }
        counts
    }
}

/// Concatenates `a` then `b`, keeping the first record for each id.
pub fn merge(a: &Dataset, b: &Dataset) -> Dataset {
    let mut provenance = a.provenance.clone();
    for s in &b.provenance.sources {
        if !provenance.sources.contains(s) {
            provenance.sources.push(s.clone());
        }
    }
    provenance.fetched_at = match (a.provenance.fetched_at, b.provenance.fetched_at) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, y) => x.or(y),
    };
    let records = a.records.iter().chain(b.records.iter()).cloned().collect();
    Dataset::new(records, provenance)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordLine {
    id: String,
    video_id: String,
    text: String,
    published_at: DateTime<Utc>,
    like_count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    polarity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<SentimentClass>,
}

impl From<&Record> for RecordLine {
    fn from(r: &Record) -> Self {
        let c = &r.comment;
        RecordLine {
            id: c.id.clone(),
            video_id: c.video_id.clone(),
            text: c.text.clone(),
            published_at: c.published_at,
            like_count: c.like_count,
            polarity: r.polarity(),
            label: r.label(),
        }
    }
}

impl RecordLine {
    fn into_record(self) -> Result<Record, String> {
        let annotation = match (self.polarity, self.label) {
            (Some(polarity), Some(label)) => {
                if !(-1.0..=1.0).contains(&polarity) {
                    return Err(format!("polarity {polarity} outside [-1, 1]"));
                }
                Some(Annotation { polarity, label })
            }
            (None, None) => None,
            _ => return Err("`polarity` and `label` must appear together".into()),
        };
        Ok(Record {
            comment: Comment {
                id: self.id,
                video_id: self.video_id,
                text: self.text,
                published_at: self.published_at,
                like_count: self.like_count,
            },
            annotation,
        })
    }
}

pub fn load_jsonl(path: &Path) -> Result<Dataset, CorpusError> {
    let display = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            CorpusError::NotFound(display.clone())
        } else {
            CorpusError::Io {
                path: display.clone(),
                source,
            }
        }
    })?;
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.split('\n').enumerate() {
        if line.is_empty() {
            continue;
        }
        let malformed = |message: String| CorpusError::Malformed {
            path: display.clone(),
            line: i + 1,
            message,
        };
        let parsed: RecordLine = serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;
        let record = parsed.into_record().map_err(malformed)?;
        if !seen.insert(record.comment.id.clone()) {
            return Err(CorpusError::DuplicateId {
                path: display,
                line: i + 1,
                id: record.comment.id,
            });
        }
        records.push(record);
    }
    Ok(Dataset {
        records,
        provenance: Provenance::source(display),
    })
}

pub fn save_jsonl(dataset: &Dataset, path: &Path) -> Result<(), CorpusError> {
    let io_err = |source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = fs::File::create(path).map_err(io_err)?;
    let mut out = BufWriter::new(file);
    for record in dataset.records() {
        let line = serde_json::to_string(&RecordLine::from(record)).expect("record serializes");
        out.write_all(line.as_bytes()).map_err(io_err)?;
        out.write_all(b"\n").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use chrono::TimeZone;
    use proptest::prelude::*;

    pub(crate) fn comment(id: &str, text: &str) -> Comment {
        Comment {
            id: id.to_string(),
            video_id: "vid".to_string(),
            text: text.to_string(),
            published_at: Utc.with_ymd_and_hms(2023, 10, 20, 12, 0, 0).unwrap(),
            like_count: 3,
        }
    }

    fn dataset(ids: &[&str]) -> Dataset {
        Dataset::from_comments(
            ids.iter().map(|id| comment(id, &format!("text {id}"))).collect(),
            Provenance::source("test"),
        )
    }

    #[test]
    fn class_ordering_is_canonical() {
        assert!(SentimentClass::Negative < SentimentClass::Neutral);
        assert!(SentimentClass::Neutral < SentimentClass::Positive);
        assert_eq!(
            serde_json::to_string(&SentimentClass::Neutral).unwrap(),
            "\"neutral\""
        );
    }

    #[test]
    fn save_and_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let mut records = dataset(&["a", "b", "c"]).into_records();
        records[1].annotation = Some(Annotation {
            polarity: -0.35,
            label: SentimentClass::Negative,
        });
        records[2].comment.text = "Emoji 🔥 and \"quotes\"\nnewline".into();
        let d = Dataset::new(records, Provenance::source("x"));
        save_jsonl(&d, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 3);
        let back = load_jsonl(&path).unwrap();
        assert_eq!(back.records(), d.records());

        let path2 = dir.path().join("c2.jsonl");
        save_jsonl(&back, &path2).unwrap();
        assert_eq!(fs::read(&path).unwrap(), fs::read(&path2).unwrap());
    }

    #[test]
    fn empty_dataset_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.jsonl");
        save_jsonl(&Dataset::default(), &path).unwrap();
        assert_eq!(fs::read(&path).unwrap().len(), 0);
        assert!(load_jsonl(&path).unwrap().is_empty());
    }

    #[test]
    fn load_reports_missing_field_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        let good = serde_json::to_string(&RecordLine::from(&Record::unlabeled(comment("a", "x")))).unwrap();
        let bad = r#"{"id":"b","video_id":"v","published_at":"2023-01-01T00:00:00Z","like_count":0}"#;
        fs::write(&path, format!("{good}\n{bad}\n")).unwrap();
        match load_jsonl(&path) {
            Err(CorpusError::Malformed { line, message, .. }) => {
                assert_eq!(line, 2);
                assert!(message.contains("text"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn load_rejects_duplicates_and_missing_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dup.jsonl");
        let line = serde_json::to_string(&RecordLine::from(&Record::unlabeled(comment("a", "x")))).unwrap();
        fs::write(&path, format!("{line}\n{line}\n")).unwrap();
        assert!(matches!(
            load_jsonl(&path),
            Err(CorpusError::DuplicateId { line: 2, .. })
        ));
        assert!(matches!(
            load_jsonl(&dir.path().join("missing.jsonl")),
            Err(CorpusError::NotFound(_))
        ));
    }

    #[test]
    fn load_rejects_half_annotations() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("half.jsonl");
        fs::write(
            &path,
            r#"{"id":"b","video_id":"v","text":"t","published_at":"2023-01-01T00:00:00Z","like_count":0,"polarity":0.5}"#,
        )
        .unwrap();
        assert!(matches!(load_jsonl(&path), Err(CorpusError::Malformed { line: 1, .. })));
    }

    #[test]
    fn merge_examples() {
        let a = dataset(&["1", "2", "3"]);
        let b = dataset(&["4", "5"]);
        assert_eq!(merge(&a, &b).len(), 5);
        assert_eq!(merge(&a, &a).records(), a.records());
        assert_eq!(merge(&Dataset::default(), &a).records(), a.records());
    }

    #[test]
    fn merge_keeps_first_occurrence() {
        let a = dataset(&["1"]);
        let mut b = dataset(&["1", "2"]).into_records();
        b[0].comment.text = "refetched".into();
        let b = Dataset::new(b, Provenance::source("other"));
        let m = merge(&a, &b);
        assert_eq!(m.records()[0].comment.text, "text 1");
        assert_eq!(m.provenance.sources, ["test", "other"]);
    }

    fn arb_record() -> impl Strategy<Value = Record> {
        (
            "[a-z0-9]{1,6}",
            any::<String>(),
            0i64..2_000_000_000,
            any::<u32>(),
            proptest::option::of((-1.0f64..=1.0, 0usize..3)),
        )
            .prop_map(|(id, text, secs, likes, ann)| Record {
                comment: Comment {
                    id,
                    video_id: "v".into(),
                    text,
                    published_at: Utc.timestamp_opt(secs, 0).unwrap(),
                    like_count: likes as u64,
                },
                annotation: ann.map(|(polarity, i)| Annotation {
                    polarity,
                    label: SentimentClass::from_index(i).unwrap(),
                }),
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn jsonl_round_trip(records in proptest::collection::vec(arb_record(), 0..12)) {
            let d = Dataset::new(records, Provenance::default());
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("p.jsonl");
            save_jsonl(&d, &path).unwrap();
            let back = load_jsonl(&path).unwrap();
            prop_assert_eq!(back.records(), d.records());
        }

        #[test]
        fn merge_is_associative(
            a in proptest::collection::vec(arb_record(), 0..6),
            b in proptest::collection::vec(arb_record(), 0..6),
            c in proptest::collection::vec(arb_record(), 0..6),
        ) {
            let (a, b, c) = (
                Dataset::new(a, Provenance::default()),
                Dataset::new(b, Provenance::default()),
                Dataset::new(c, Provenance::default()),
            );
            let left = merge(&merge(&a, &b), &c);
            let right = merge(&a, &merge(&b, &c));
            prop_assert_eq!(left.records(), right.records());
        }
    }
}
