//! Labeled datasets and exact-match scoring of extracted segments.
//!
//! Datasets and predictions are JSON Lines files. A labeled record looks
//! like `{"page_id": "p1", "image_key": "0:img/a.jpg", "category":
//! "business", "text": ["red bag", "shop"]}`; a prediction is the same
//! without `category`. Unknown fields are ignored. When annotators disagree
//! on a segment's extent, the larger section is the one to record.

use std::collections::{HashMap, HashSet};
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::location::PageCategory;

/// Trim, collapse internal whitespace and lowercase.
pub fn normalize_text(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

fn normalize_all(texts: &[String]) -> Vec<String> {
    let mut out: Vec<String> = texts.iter().map(|t| normalize_text(t)).filter(|t| !t.is_empty()).collect();
    out.sort();
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSegment {
    pub page_id: String,
    pub image_key: String,
    pub category: PageCategory,
    pub text: Vec<String>,
}

impl LabeledSegment {
    /// Build a record with normalized, sorted text. Fails when no text is
    /// left after normalization.
    pub fn new(page_id: impl Into<String>, image_key: impl Into<String>, category: PageCategory, text: &[String]) -> Result<Self> {
        let seg = LabeledSegment {
            page_id: page_id.into(),
            image_key: image_key.into(),
            category,
            text: normalize_all(text),
        };
        if seg.text.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "segment `{}` on page `{}` has no text",
                seg.image_key, seg.page_id
            )));
        }
        Ok(seg)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub page_id: String,
    pub image_key: String,
    pub text: Vec<String>,
}

impl Prediction {
    pub fn new(page_id: impl Into<String>, image_key: impl Into<String>, text: &[String]) -> Self {
        Prediction {
            page_id: page_id.into(),
            image_key: image_key.into(),
            text: normalize_all(text),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub actual: usize,
    pub extracted: usize,
    pub correct: usize,
    pub precision: f64,
    pub recall: f64,
}

impl EvalReport {
    /// Ratios from raw counts; a zero denominator gives 0.
    pub fn from_counts(actual: usize, extracted: usize, correct: usize) -> Result<Self> {
        if correct > actual || correct > extracted {
            return Err(Error::InvalidArgument(format!(
                "correct ({correct}) exceeds actual ({actual}) or extracted ({extracted})"
            )));
        }
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        Ok(EvalReport {
            actual,
            extracted,
            correct,
            precision: ratio(correct, extracted),
            recall: ratio(correct, actual),
        })
    }
}

/// A prediction is correct when a truth record with the same page and image
/// key has exactly the same text multiset after normalization.
pub fn score(truth: &[LabeledSegment], predicted: &[Prediction]) -> Result<EvalReport> {
    let mut expected: HashMap<(&str, &str), Vec<String>> = HashMap::new();
    for t in truth {
        if expected
            .insert((&t.page_id, &t.image_key), normalize_all(&t.text))
            .is_some()
        {
            return Err(duplicate(&t.page_id, &t.image_key));
        }
    }
    let mut seen: HashSet<(&str, &str)> = HashSet::new();
    let mut correct = 0;
    for p in predicted {
        let key = (p.page_id.as_str(), p.image_key.as_str());
        if !seen.insert(key) {
            return Err(duplicate(&p.page_id, &p.image_key));
        }
        if expected.get(&key).is_some_and(|want| *want == normalize_all(&p.text)) {
            correct += 1;
        }
    }
    EvalReport::from_counts(truth.len(), predicted.len(), correct)
}

fn duplicate(page_id: &str, image_key: &str) -> Error {
    Error::DuplicateKey {
        page_id: page_id.to_string(),
        image_key: image_key.to_string(),
    }
}

fn parse_lines<T: DeserializeOwned>(jsonl: &str, origin: &str) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in jsonl.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(line)
            .map_err(|e| Error::parse(origin, i + 1, format!("record {}: {e}", out.len() + 1)))?;
        out.push(record);
    }
    Ok(out)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Parse a labeled dataset, normalizing text and checking that every record
/// has text and a key unique within its page.
pub fn parse_dataset(jsonl: &str, origin: &str) -> Result<Vec<LabeledSegment>> {
    let raw: Vec<LabeledSegment> = parse_lines(jsonl, origin)?;
    let mut seen = HashSet::new();
    raw.into_iter()
        .map(|r| {
            if !seen.insert((r.page_id.clone(), r.image_key.clone())) {
                return Err(duplicate(&r.page_id, &r.image_key));
            }
            LabeledSegment::new(r.page_id, r.image_key, r.category, &r.text)
        })
        .collect()
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<LabeledSegment>> {
    let path = path.as_ref();
    parse_dataset(&read(path)?, &path.display().to_string())
}

/// Parse predictions, e.g. segmentations produced by another tool.
pub fn parse_predictions(jsonl: &str, origin: &str) -> Result<Vec<Prediction>> {
    let raw: Vec<Prediction> = parse_lines(jsonl, origin)?;
    Ok(raw
        .into_iter()
        .map(|r| Prediction::new(r.page_id, r.image_key, &r.text))
        .collect())
}

pub fn load_external_segments(path: impl AsRef<Path>) -> Result<Vec<Prediction>> {
    let path = path.as_ref();
    parse_predictions(&read(path)?, &path.display().to_string())
}

/// One JSON object per line.
pub fn to_jsonl<T: Serialize>(records: &[T]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}

pub fn save_dataset(path: impl AsRef<Path>, records: &[LabeledSegment]) -> Result<()> {
    let path = path.as_ref();
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(to_jsonl(records).as_bytes()).map_err(|e| Error::io(path, e))
}
