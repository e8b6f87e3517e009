//! Label taxonomy: categories, label names, detector prompt serialization and
//! resolution of detected label names back to a browse category.
//!
//! The taxonomy document grammar is described at the top of
//! `data/taxonomy.txt`, which is also the default taxonomy.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Maximum number of (label, category) entries the detector prompt can carry.
pub const LABEL_CAPACITY: usize = 120;

/// Separator placed between label names in a detector prompt.
pub const PROMPT_SEPARATOR: &str = ". ";

const DEFAULT_DOCUMENT: &str = include_str!("../data/taxonomy.txt");

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TaxonomyError {
    #[error("no entries")]
    NoEntries,
    #[error("exceeds label capacity {LABEL_CAPACITY} ({0} entries)")]
    CapacityExceeded(usize),
    #[error("unknown category {0:?}")]
    UnknownCategory(String),
    #[error("empty name on line {0}")]
    EmptyName(usize),
    #[error("label {name:?} on line {line} contains '.'")]
    NameContainsStop { name: String, line: usize },
    #[error("duplicate entry ({name}, {category})")]
    DuplicateEntry { name: String, category: Category },
    #[error("malformed document on line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("empty segment")]
    EmptySegment,
    #[error("malformed separator after {0:?}")]
    MalformedSeparator(String),
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
}

/// The fixed set of browse categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    Animal,
    Architecture,
    Christianity,
    Clothing,
    Food,
    Furniture,
    Human,
    Instrument,
    Interior,
    Nature,
    Occultism,
    Vehicle,
    Weaponry,
}

impl Category {
    pub const ALL: [Category; 13] = [
        Category::Animal,
        Category::Architecture,
        Category::Christianity,
        Category::Clothing,
        Category::Food,
        Category::Furniture,
        Category::Human,
        Category::Instrument,
        Category::Interior,
        Category::Nature,
        Category::Occultism,
        Category::Vehicle,
        Category::Weaponry,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Animal => "Animal",
            Category::Architecture => "Architecture",
            Category::Christianity => "Christianity",
            Category::Clothing => "Clothing",
            Category::Food => "Food",
            Category::Furniture => "Furniture",
            Category::Human => "Human",
            Category::Instrument => "Instrument",
            Category::Interior => "Interior",
            Category::Nature => "Nature",
            Category::Occultism => "Occultism",
            Category::Vehicle => "Vehicle",
            Category::Weaponry => "Weaponry",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = TaxonomyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL.into_iter().find(|c| c.as_str() == s).ok_or_else(|| TaxonomyError::UnknownCategory(s.to_string()))
    }
}

/// One (name, category) entry.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Label {
    pub name: String,
    pub category: Category,
}

/// An immutable, validated label set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Taxonomy {
    entries: Vec<Label>,
    precedence: Vec<Category>,
}

impl Taxonomy {
    /// Builds a taxonomy from entries and the categories to consult first when
    /// a name is ambiguous. Categories absent from `precedence` follow in
    /// canonical order.
    pub fn new(entries: Vec<Label>, precedence: &[Category]) -> Result<Self, TaxonomyError> {
        if entries.is_empty() {
            return Err(TaxonomyError::NoEntries);
        }
        if entries.len() > LABEL_CAPACITY {
            return Err(TaxonomyError::CapacityExceeded(entries.len()));
        }
        let mut seen = HashSet::new();
        for label in &entries {
            if label.name.trim().is_empty() {
                return Err(TaxonomyError::EmptyName(0));
            }
            if label.name.contains('.') {
                return Err(TaxonomyError::NameContainsStop { name: label.name.clone(), line: 0 });
            }
            if !seen.insert((label.name.as_str(), label.category)) {
                return Err(TaxonomyError::DuplicateEntry { name: label.name.clone(), category: label.category });
            }
        }
        Ok(Self { entries, precedence: full_precedence(precedence) })
    }

    /// The label set shipped with the crate.
    pub fn default_table() -> Self {
        Self::parse(DEFAULT_DOCUMENT).expect("bundled taxonomy document is valid")
    }

    pub fn default_document() -> &'static str {
        DEFAULT_DOCUMENT
    }

    /// Parses a taxonomy document.
    pub fn parse(source: &str) -> Result<Self, TaxonomyError> {
        let mut entries = Vec::new();
        let mut precedence = Vec::new();
        let mut current: Option<Category> = None;

        for (idx, raw) in source.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("@precedence") {
                if current.is_some() {
                    return Err(TaxonomyError::Malformed {
                        line: line_no,
                        reason: "@precedence must precede the first category block".into(),
                    });
                }
                for item in rest.split(',') {
                    let item = item.trim();
                    if item.is_empty() {
                        continue;
                    }
                    precedence.push(item.parse::<Category>()?);
                }
                continue;
            }
            if line.starts_with('[') {
                let name = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')).ok_or_else(|| {
                    TaxonomyError::Malformed { line: line_no, reason: "unterminated category header".into() }
                })?;
                current = Some(name.trim().parse()?);
                continue;
            }
            let category = current.ok_or_else(|| TaxonomyError::Malformed {
                line: line_no,
                reason: "label names before the first category header".into(),
            })?;
            let body = line.strip_suffix(',').unwrap_or(line);
            for item in body.split(',') {
                let name = item.trim();
                if name.is_empty() {
                    return Err(TaxonomyError::EmptyName(line_no));
                }
                if name.contains('.') {
                    return Err(TaxonomyError::NameContainsStop { name: name.into(), line: line_no });
                }
                entries.push(Label { name: name.to_string(), category });
            }
        }
        Self::new(entries, &precedence)
    }

    pub fn entries(&self) -> &[Label] {
        &self.entries
    }

    pub fn precedence(&self) -> &[Category] {
        &self.precedence
    }

    /// Categories in order of first appearance in the document.
    pub fn categories(&self) -> Vec<Category> {
        let mut out: Vec<Category> = Vec::new();
        for label in &self.entries {
            if !out.contains(&label.category) {
                out.push(label.category);
            }
        }
        out
    }

    /// Unique label names in first-occurrence order.
    pub fn unique_names(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.entries.iter().map(|l| l.name.as_str()).filter(|n| seen.insert(*n)).collect()
    }

    pub fn labels_in(&self, category: Category) -> impl Iterator<Item = &str> {
        self.entries.iter().filter(move |l| l.category == category).map(|l| l.name.as_str())
    }

    pub fn contains_name(&self, name: &str) -> bool {
        self.entries.iter().any(|l| l.name == name)
    }

    pub fn has_entry(&self, name: &str, category: Category) -> bool {
        self.entries.iter().any(|l| l.name == name && l.category == category)
    }

    /// Detector prompt: unique names joined by `". "`, no trailing stop.
    pub fn build_prompt(&self) -> String {
        self.unique_names().join(PROMPT_SEPARATOR)
    }

    /// Resolves a detected label name to its browse category.
    pub fn category_of(&self, name: &str) -> Result<Category, TaxonomyError> {
        let mut owners = self.entries.iter().filter(|l| l.name == name).map(|l| l.category);
        let first = owners.next().ok_or_else(|| TaxonomyError::UnknownLabel(name.to_string()))?;
        let rest: Vec<Category> = owners.collect();
        if rest.is_empty() {
            return Ok(first);
        }
        Ok(self
            .precedence
            .iter()
            .copied()
            .find(|c| *c == first || rest.contains(c))
            .expect("precedence covers every category"))
    }
}

fn full_precedence(preferred: &[Category]) -> Vec<Category> {
    let mut out: Vec<Category> = Vec::with_capacity(Category::ALL.len());
    for c in preferred.iter().copied().chain(Category::ALL) {
        if !out.contains(&c) {
            out.push(c);
        }
    }
    out
}

/// Splits a detector prompt back into label names.
///
/// Every name after the first must be introduced by exactly `". "`.
pub fn parse_prompt(text: &str) -> Result<Vec<String>, TaxonomyError> {
    let mut names = Vec::new();
    for (i, segment) in text.split('.').enumerate() {
        let name = if i == 0 || segment.is_empty() {
            segment
        } else {
            segment
                .strip_prefix(' ')
                .ok_or_else(|| TaxonomyError::MalformedSeparator(names.last().cloned().unwrap_or_default()))?
        };
        if name.is_empty() {
            return Err(TaxonomyError::EmptySegment);
        }
        names.push(name.to_string());
    }
    Ok(names)
}
