//! In-memory dataset: everything needed to build the knowledge graph, plus
//! the raw feature table, held-out test truth and optional ingested
//! pseudo-labels. Synthetic and file-backed datasets share this type.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::{CategoryId, Split};
use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LabelKey {
    pub category: CategoryId,
    pub value: String,
}

impl LabelKey {
    pub fn new(category: CategoryId, value: impl Into<String>) -> Self {
        Self {
            category,
            value: value.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArtworkRecord {
    pub key: String,
    pub split: Split,
    /// Row of [`Dataset::features`], if the artwork has raw features.
    pub feature_ref: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Assignment {
    pub artwork: String,
    pub category: CategoryId,
    pub value: String,
}

impl Assignment {
    pub fn new(artwork: impl Into<String>, category: CategoryId, value: impl Into<String>) -> Self {
        Self {
            artwork: artwork.into(),
            category,
            value: value.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelLink {
    pub from: LabelKey,
    pub to: LabelKey,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub categories: Vec<String>,
    pub artworks: Vec<ArtworkRecord>,
    /// Ground-truth assignments of train and validation artworks.
    pub assignments: Vec<Assignment>,
    pub links: Vec<LabelLink>,
    pub features: Matrix,
    /// Ground-truth assignments of test artworks; never enters the graph.
    pub truth: Vec<Assignment>,
    pub pseudo: Option<Vec<Assignment>>,
}

impl Dataset {
    pub fn category_id(&self, name: &str) -> Result<CategoryId> {
        self.categories
            .iter()
            .position(|c| c == name)
            .map(CategoryId)
            .ok_or_else(|| Error::UnknownCategory(name.into()))
    }

    pub fn category_name(&self, id: CategoryId) -> &str {
        &self.categories[id.0]
    }

    pub fn num_categories(&self) -> usize {
        self.categories.len()
    }

    pub fn graph_artworks(&self) -> impl Iterator<Item = &ArtworkRecord> {
        self.artworks.iter().filter(|a| a.split != Split::Test)
    }

    pub fn test_artworks(&self) -> impl Iterator<Item = &ArtworkRecord> {
        self.artworks.iter().filter(|a| a.split == Split::Test)
    }

    pub fn artwork(&self, key: &str) -> Option<&ArtworkRecord> {
        self.artworks.iter().find(|a| a.key == key)
    }

    /// Test truth as `(artwork, category) → value`.
    pub fn truth_map(&self) -> BTreeMap<(String, CategoryId), String> {
        self.truth
            .iter()
            .map(|a| ((a.artwork.clone(), a.category), a.value.clone()))
            .collect()
    }

    /// Distinct label values of a category among training assignments, sorted.
    pub fn observed_values(&self, category: CategoryId) -> Vec<String> {
        let train: BTreeSet<&str> = self
            .artworks
            .iter()
            .filter(|a| a.split == Split::Train)
            .map(|a| a.key.as_str())
            .collect();
        let values: BTreeSet<&String> = self
            .assignments
            .iter()
            .filter(|a| a.category == category && train.contains(a.artwork.as_str()))
            .map(|a| &a.value)
            .collect();
        values.into_iter().cloned().collect()
    }

    pub fn feature_row(&self, artwork: &ArtworkRecord) -> Option<&[f64]> {
        artwork
            .feature_ref
            .filter(|&r| r < self.features.rows())
            .map(|r| self.features.row(r))
    }
}
