//! HTML locations of contextual text, page categories and the reference
//! frequency tables shipped with the crate.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Where in the HTML source a piece of contextual text was found.
///
/// The string form is `ATTR:<TAG>:<ATTRIBUTE>`, `ENCL:<TAG>`, `SCRIPT` or
/// `COMMENT`. `ATTR:META:CONTENT` and `ENCL:TITLE` parse to the
/// document-level [`MetaContent`](Self::MetaContent) and
/// [`PageTitle`](Self::PageTitle).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LocationDescriptor {
    AttributeOf { tag: String, attribute: String },
    EnclosedBy(String),
    ScriptTag,
    CommentTag,
    MetaContent,
    PageTitle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Visibility {
    Visible,
    Hidden,
}

impl LocationDescriptor {
    pub fn attribute(tag: &str, attribute: &str) -> Self {
        let tag = tag.trim().to_ascii_uppercase();
        let attribute = attribute.trim().to_ascii_uppercase();
        if tag == "META" && attribute == "CONTENT" {
            return LocationDescriptor::MetaContent;
        }
        LocationDescriptor::AttributeOf { tag, attribute }
    }

    pub fn enclosed(tag: &str) -> Self {
        let tag = tag.trim().to_ascii_uppercase();
        match tag.as_str() {
            "TITLE" => LocationDescriptor::PageTitle,
            "SCRIPT" => LocationDescriptor::ScriptTag,
            _ => LocationDescriptor::EnclosedBy(tag),
        }
    }

    pub fn visibility(&self) -> Visibility {
        match self {
            LocationDescriptor::EnclosedBy(_) | LocationDescriptor::PageTitle => Visibility::Visible,
            _ => Visibility::Hidden,
        }
    }
}

impl fmt::Display for LocationDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LocationDescriptor::AttributeOf { tag, attribute } => write!(f, "ATTR:{tag}:{attribute}"),
            LocationDescriptor::EnclosedBy(tag) => write!(f, "ENCL:{tag}"),
            LocationDescriptor::ScriptTag => f.write_str("SCRIPT"),
            LocationDescriptor::CommentTag => f.write_str("COMMENT"),
            LocationDescriptor::MetaContent => f.write_str("ATTR:META:CONTENT"),
            LocationDescriptor::PageTitle => f.write_str("ENCL:TITLE"),
        }
    }
}

impl FromStr for LocationDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("unrecognized location descriptor `{s}`"));
        let valid_name = |n: &str| !n.is_empty() && n.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
        let parts: Vec<&str> = s.trim().split(':').collect();
        match parts.as_slice() {
            [kind, tag, attr] if kind.eq_ignore_ascii_case("ATTR") && valid_name(tag) && valid_name(attr) => {
                Ok(Self::attribute(tag, attr))
            }
            [kind, tag] if kind.eq_ignore_ascii_case("ENCL") && valid_name(tag) => Ok(Self::enclosed(tag)),
            [kind] if kind.eq_ignore_ascii_case("SCRIPT") => Ok(LocationDescriptor::ScriptTag),
            [kind] if kind.eq_ignore_ascii_case("COMMENT") => Ok(LocationDescriptor::CommentTag),
            _ => Err(bad()),
        }
    }
}

impl Serialize for LocationDescriptor {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LocationDescriptor {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PageCategory {
    Business,
    #[serde(alias = "info")]
    Informational,
    News,
    Advocacy,
    Personal,
    Unknown,
}

impl PageCategory {
    /// The five surveyed categories, in table column order.
    pub const SURVEYED: [PageCategory; 5] = [
        PageCategory::Business,
        PageCategory::Informational,
        PageCategory::News,
        PageCategory::Advocacy,
        PageCategory::Personal,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PageCategory::Business => "business",
            PageCategory::Informational => "informational",
            PageCategory::News => "news",
            PageCategory::Advocacy => "advocacy",
            PageCategory::Personal => "personal",
            PageCategory::Unknown => "unknown",
        }
    }
}

impl fmt::Display for PageCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PageCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "business" => Ok(PageCategory::Business),
            "informational" | "information" | "info" => Ok(PageCategory::Informational),
            "news" => Ok(PageCategory::News),
            "advocacy" => Ok(PageCategory::Advocacy),
            "personal" => Ok(PageCategory::Personal),
            "unknown" => Ok(PageCategory::Unknown),
            _ => Err(Error::InvalidArgument(format!("unknown page category `{s}`"))),
        }
    }
}

/// Per-category significant locations with optional percentage weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificantLocationTable {
    pub significant: BTreeMap<PageCategory, BTreeSet<LocationDescriptor>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<BTreeMap<PageCategory, BTreeMap<LocationDescriptor, f64>>>,
}

const SIGNIFICANT_JSON: &str = include_str!("../data/significant_locations.json");
const SURVEY_TSV: &str = include_str!("../data/survey_locations.tsv");
const OBSERVATION_TSV: &str = include_str!("../data/observation_locations.tsv");

/// Tolerance on per-category weight sums, covering one-decimal rounding.
pub const WEIGHT_SUM_TOLERANCE: f64 = 0.5;

/// Locations found significant by the user survey for each category, with
/// survey frequencies as weights. Pages of unknown category use the eight
/// locations that carry relevant text in every category.
pub fn default_significant_locations() -> SignificantLocationTable {
    let mut table = SignificantLocationTable::from_json_str(SIGNIFICANT_JSON, "<builtin>")
        .expect("builtin location table is valid");
    table.weights = Some(survey_distribution().as_weights());
    table
}

impl SignificantLocationTable {
    pub fn from_json_str(json: &str, origin: &str) -> Result<Self> {
        let table: SignificantLocationTable =
            serde_json::from_str(json).map_err(|e| Error::parse(origin, e.line(), e.to_string()))?;
        table.validate(origin)?;
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let json = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&json, &path.display().to_string())
    }

    fn validate(&self, origin: &str) -> Result<()> {
        let Some(weights) = &self.weights else {
            return Ok(());
        };
        for (category, row) in weights {
            if row.values().any(|w| !w.is_finite() || *w < 0.0) {
                return Err(Error::parse(origin, 0, format!("negative or non-finite weight for {category}")));
            }
            let sum: f64 = row.values().sum();
            if (sum - 100.0).abs() > WEIGHT_SUM_TOLERANCE + 1e-9 {
                return Err(Error::parse(
                    origin,
                    0,
                    format!("weights for {category} sum to {sum:.2}, expected 100"),
                ));
            }
        }
        Ok(())
    }

    /// Locations to extract for `category`; categories missing from the
    /// table fall back to the `unknown` entry.
    pub fn locations(&self, category: PageCategory) -> BTreeSet<LocationDescriptor> {
        self.significant
            .get(&category)
            .or_else(|| self.significant.get(&PageCategory::Unknown))
            .cloned()
            .unwrap_or_default()
    }

    pub fn is_significant(&self, category: PageCategory, location: &LocationDescriptor) -> bool {
        self.significant
            .get(&category)
            .or_else(|| self.significant.get(&PageCategory::Unknown))
            .is_some_and(|set| set.contains(location))
    }

    pub fn weight(&self, category: PageCategory, location: &LocationDescriptor) -> Option<f64> {
        self.weights.as_ref()?.get(&category)?.get(location).copied()
    }
}

/// A location-by-category percentage table.
#[derive(Debug, Clone, PartialEq)]
pub struct LocationFrequencyTable {
    pub rows: Vec<(LocationDescriptor, [f64; 5])>,
}

impl LocationFrequencyTable {
    pub fn from_tsv(tsv: &str, origin: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (i, line) in tsv.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 6 {
                return Err(Error::parse(origin, i + 1, "expected a location and 5 percentages"));
            }
            let location = fields[0]
                .parse()
                .map_err(|e: Error| Error::parse(origin, i + 1, e.to_string()))?;
            let mut values = [0.0; 5];
            for (v, f) in values.iter_mut().zip(&fields[1..]) {
                *v = f
                    .trim()
                    .parse()
                    .map_err(|_| Error::parse(origin, i + 1, format!("`{f}` is not a number")))?;
            }
            rows.push((location, values));
        }
        Ok(LocationFrequencyTable { rows })
    }

    /// Column for one surveyed category; `None` for `Unknown`.
    pub fn column(&self, category: PageCategory) -> Option<Vec<(LocationDescriptor, f64)>> {
        let idx = PageCategory::SURVEYED.iter().position(|c| *c == category)?;
        Some(self.rows.iter().map(|(l, v)| (l.clone(), v[idx])).collect())
    }

    /// Number of locations with a nonzero share in the category.
    pub fn nonzero_rows(&self, category: PageCategory) -> usize {
        self.column(category)
            .map_or(0, |c| c.iter().filter(|(_, v)| *v > 0.0).count())
    }

    pub fn locations(&self) -> impl Iterator<Item = &LocationDescriptor> {
        self.rows.iter().map(|(l, _)| l)
    }

    fn as_weights(&self) -> BTreeMap<PageCategory, BTreeMap<LocationDescriptor, f64>> {
        PageCategory::SURVEYED
            .iter()
            .map(|c| {
                let col = self.column(*c).unwrap_or_default();
                (*c, col.into_iter().filter(|(_, v)| *v > 0.0).collect())
            })
            .collect()
    }
}

/// Relevant-text location shares from the user survey.
pub fn survey_distribution() -> LocationFrequencyTable {
    LocationFrequencyTable::from_tsv(SURVEY_TSV, "<builtin survey>").expect("builtin survey table is valid")
}

/// Relevant-text location shares from the web observation study. Its
/// nonzero rows define the candidate locations per category.
pub fn observation_distribution() -> LocationFrequencyTable {
    LocationFrequencyTable::from_tsv(OBSERVATION_TSV, "<builtin observation>")
        .expect("builtin observation table is valid")
}

/// Every location that appears in either reference table.
pub fn location_vocabulary() -> BTreeSet<LocationDescriptor> {
    survey_distribution()
        .locations()
        .chain(observation_distribution().locations())
        .cloned()
        .collect()
}
