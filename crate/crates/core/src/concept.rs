//! Lexicon-based tagging of contextual phrases into five concept classes.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConceptClass {
    /// Low-level visual words: colour, shape, texture.
    Signal,
    /// Individual entities, living or not.
    Object,
    /// The image as a whole: beach, city, portrait.
    Scene,
    /// Intangible or symbolic knowledge about the image.
    Abstract,
    /// Relations between objects, or metadata such as author or date.
    Relational,
}

impl ConceptClass {
    pub const ALL: [ConceptClass; 5] = [
        ConceptClass::Signal,
        ConceptClass::Object,
        ConceptClass::Scene,
        ConceptClass::Abstract,
        ConceptClass::Relational,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ConceptClass::Signal => "signal",
            ConceptClass::Object => "object",
            ConceptClass::Scene => "scene",
            ConceptClass::Abstract => "abstract",
            ConceptClass::Relational => "relational",
        }
    }
}

impl fmt::Display for ConceptClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConceptClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ConceptClass::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown concept class `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConceptLexicon {
    entries: HashMap<String, ConceptClass>,
    default_class: ConceptClass,
    longest: usize,
}

const STARTER_TSV: &str = include_str!("../data/starter_lexicon.tsv");

fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

impl ConceptLexicon {
    pub fn new(default_class: ConceptClass) -> Self {
        ConceptLexicon {
            entries: HashMap::new(),
            default_class,
            longest: 0,
        }
    }

    /// Example terms for each class plus common colour names, falling back
    /// to `Object`.
    pub fn starter() -> Self {
        Self::from_tsv(STARTER_TSV, "<builtin lexicon>", ConceptClass::Object).expect("builtin lexicon is valid")
    }

    pub fn default_class(&self) -> ConceptClass {
        self.default_class
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Add or replace an entry. Phrases without any word are ignored.
    pub fn insert(&mut self, phrase: &str, class: ConceptClass) {
        let toks = tokens(phrase);
        if toks.is_empty() {
            return;
        }
        self.longest = self.longest.max(toks.len());
        self.entries.insert(toks.join(" "), class);
    }

    pub fn get(&self, phrase: &str) -> Option<ConceptClass> {
        self.entries.get(&tokens(phrase).join(" ")).copied()
    }

    /// Parse `phrase<TAB>class` lines. Blank lines and lines starting with
    /// `#` are skipped.
    pub fn from_tsv(tsv: &str, origin: &str, default_class: ConceptClass) -> Result<Self> {
        let mut lexicon = ConceptLexicon::new(default_class);
        for (i, line) in tsv.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (phrase, class) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(origin, i + 1, "expected `phrase<TAB>class`"))?;
            let class = class
                .parse()
                .map_err(|e: Error| Error::parse(origin, i + 1, e.to_string()))?;
            if tokens(phrase).is_empty() {
                return Err(Error::parse(origin, i + 1, "empty phrase"));
            }
            lexicon.insert(phrase, class);
        }
        Ok(lexicon)
    }

    pub fn load(path: impl AsRef<Path>, default_class: ConceptClass) -> Result<Self> {
        let path = path.as_ref();
        let tsv = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_tsv(&tsv, &path.display().to_string(), default_class)
    }
}

/// Classify a phrase: the longest run of consecutive words found in the
/// lexicon decides, earliest run first on ties; otherwise the lexicon's
/// default class.
pub fn tag(item_text: &str, lexicon: &ConceptLexicon) -> Result<ConceptClass> {
    let toks = tokens(item_text);
    if toks.is_empty() {
        return Err(Error::InvalidArgument("cannot tag empty text".into()));
    }
    for len in (1..=toks.len().min(lexicon.longest)).rev() {
        for window in toks.windows(len) {
            if let Some(class) = lexicon.entries.get(&window.join(" ")) {
                return Ok(*class);
            }
        }
    }
    Ok(lexicon.default_class)
}

/// Percentage of each concept class; all five classes are present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptDistribution {
    pub total: usize,
    pub percent: BTreeMap<ConceptClass, f64>,
}

impl ConceptDistribution {
    pub fn get(&self, class: ConceptClass) -> f64 {
        self.percent.get(&class).copied().unwrap_or(0.0)
    }

    pub fn sum(&self) -> f64 {
        self.percent.values().sum()
    }
}

pub fn concept_distribution(tagged: &[ConceptClass]) -> Result<ConceptDistribution> {
    if tagged.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    let total = tagged.len();
    let percent = ConceptClass::ALL
        .into_iter()
        .map(|c| {
            let n = tagged.iter().filter(|t| **t == c).count();
            (c, 100.0 * n as f64 / total as f64)
        })
        .collect();
    Ok(ConceptDistribution { total, percent })
}
