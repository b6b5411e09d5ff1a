use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::graph::{CategoryId, PseudoLabels};

/// Non-fatal findings of a run, kept alongside its metrics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Warning {
    /// Label values the baseline labeler had no training example for.
    AbsentClasses { category: CategoryId, values: Vec<String> },
    /// Test ground-truth values never seen in training; always scored wrong.
    UnseenTruth { category: CategoryId, values: Vec<String> },
}

impl Warning {
    pub fn render(&self, names: &[String]) -> String {
        let (what, category, values) = match self {
            Warning::AbsentClasses { category, values } => {
                ("classes absent from baseline training", category, values)
            }
            Warning::UnseenTruth { category, values } => {
                ("test ground-truth values unseen in training", category, values)
            }
        };
        let name = names.get(category.0).map_or("?", String::as_str);
        alloc::format!("{name}: {what}: {}", values.join(", "))
    }
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::AbsentClasses { category, values } => {
                write!(f, "category #{}: {} classes absent from baseline training", category.0, values.len())
            }
            Warning::UnseenTruth { category, values } => {
                write!(f, "category #{}: {} unseen test values", category.0, values.len())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CategoryMetrics {
    pub category: CategoryId,
    /// `None` when no test node was evaluated.
    pub accuracy: Option<f64>,
    pub evaluated: usize,
    pub correct: usize,
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Metrics {
    pub per_category: Vec<CategoryMetrics>,
    pub warnings: Vec<Warning>,
}

impl Metrics {
    pub fn accuracy(&self, category: CategoryId) -> Option<f64> {
        self.per_category.get(category.0).and_then(|m| m.accuracy)
    }
}

/// Top-1 accuracy per category over test nodes not listed in `excluded`.
///
/// `truth` maps `(artwork, category)` to the true value, `known_values[c]`
/// holds the values of category `c` seen in training.
pub fn evaluate(
    predictions: &PseudoLabels,
    truth: &BTreeMap<(String, CategoryId), String>,
    excluded: &BTreeSet<(String, CategoryId)>,
    known_values: &[BTreeSet<String>],
    category_names: &[String],
) -> Result<Metrics> {
    let n = known_values.len();
    let mut per_category: Vec<CategoryMetrics> = (0..n)
        .map(|c| CategoryMetrics {
            category: CategoryId(c),
            accuracy: None,
            evaluated: 0,
            correct: 0,
            excluded: 0,
        })
        .collect();
    let mut unseen: Vec<BTreeSet<String>> = (0..n).map(|_| BTreeSet::new()).collect();
    for ((artwork, c), value) in truth {
        let Some(m) = per_category.get_mut(c.0) else {
            return Err(Error::UnknownCategory(alloc::format!("#{}", c.0)));
        };
        if excluded.contains(&(artwork.clone(), *c)) {
            m.excluded += 1;
            continue;
        }
        let predicted = predictions
            .get(artwork)
            .and_then(|p| p.get(c))
            .ok_or_else(|| Error::MissingPrediction {
                artwork: artwork.clone(),
                category: category_names.get(c.0).cloned().unwrap_or_default(),
            })?;
        m.evaluated += 1;
        if predicted == value {
            m.correct += 1;
        }
        if !known_values[c.0].contains(value) {
            unseen[c.0].insert(value.clone());
        }
    }
    for m in &mut per_category {
        if m.evaluated > 0 {
            m.accuracy = Some(m.correct as f64 / m.evaluated as f64);
        }
    }
    let warnings = unseen
        .into_iter()
        .enumerate()
        .filter(|(_, v)| !v.is_empty())
        .map(|(c, v)| Warning::UnseenTruth {
            category: CategoryId(c),
            values: v.into_iter().collect(),
        })
        .collect();
    Ok(Metrics {
        per_category,
        warnings,
    })
}
