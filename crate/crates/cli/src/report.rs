//! Ablation report files: `report.json` and its flat mirror `report.csv`,
//! one CSV line per (strategy row, category).

use std::fmt::Write as _;
use std::path::Path;

use gcnboost_core::graph::{degree_histogram, DegreeSources};
use gcnboost_core::pipeline::{AblationReport, Metrics};
use gcnboost_core::{CategoryId, ExtendedKG};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::fsutil::{csv_bytes, read, write_atomic, write_csv};

pub const REPORT_JSON: &str = "report.json";
pub const REPORT_CSV: &str = "report.csv";
pub const HISTOGRAMS: &str = "degree_histograms.csv";

const CSV_HEADER: [&str; 11] = [
    "row",
    "strategy",
    "categories",
    "category",
    "accuracy",
    "evaluated",
    "correct",
    "excluded",
    "duplicate_of",
    "seed",
    "fingerprint",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryResult {
    pub category: String,
    pub accuracy: Option<f64>,
    pub evaluated: usize,
    pub correct: usize,
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowResult {
    pub row: usize,
    pub strategy: String,
    /// Sorted names of the pseudo-labeled categories, joined with `+`.
    pub categories: String,
    pub duplicate_of: Option<usize>,
    pub metrics: Vec<CategoryResult>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub seed: u64,
    pub fingerprint: String,
    pub categories: Vec<String>,
    pub warnings: Vec<String>,
    pub rows: Vec<RowResult>,
}

pub fn category_results(metrics: &Metrics, names: &[String]) -> Vec<CategoryResult> {
    metrics
        .per_category
        .iter()
        .map(|m| CategoryResult {
            category: names[m.category.0].clone(),
            accuracy: m.accuracy,
            evaluated: m.evaluated,
            correct: m.correct,
            excluded: m.excluded,
        })
        .collect()
}

impl ReportFile {
    pub fn from_report(report: &AblationReport) -> Self {
        let names = &report.category_names;
        Self {
            seed: report.seed,
            fingerprint: report.fingerprint.clone(),
            categories: names.clone(),
            warnings: report.warnings.iter().map(|w| w.render(names)).collect(),
            rows: report
                .rows
                .iter()
                .enumerate()
                .map(|(i, r)| RowResult {
                    row: i,
                    strategy: r.strategy.tag().to_string(),
                    categories: r.categories.clone(),
                    duplicate_of: r.duplicate_of,
                    metrics: category_results(&r.metrics, names),
                    warnings: r.metrics.warnings.iter().map(|w| w.render(names)).collect(),
                })
                .collect(),
        }
    }

    pub fn csv(&self, path: &Path) -> Result<Vec<u8>> {
        let mut lines = Vec::new();
        for r in &self.rows {
            for m in &r.metrics {
                lines.push([
                    r.row.to_string(),
                    r.strategy.clone(),
                    r.categories.clone(),
                    m.category.clone(),
                    m.accuracy.map(|a| format!("{a:.6}")).unwrap_or_default(),
                    m.evaluated.to_string(),
                    m.correct.to_string(),
                    m.excluded.to_string(),
                    r.duplicate_of.map(|d| d.to_string()).unwrap_or_default(),
                    self.seed.to_string(),
                    self.fingerprint.clone(),
                ]);
            }
        }
        csv_bytes(path, &CSV_HEADER, lines)
    }

    /// Write `report.json` and `report.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let json_path = dir.join(REPORT_JSON);
        let mut json = serde_json::to_vec_pretty(self).map_err(|e| CliError::Json { path: json_path.clone(), source: e })?;
        json.push(b'\n');
        write_atomic(&json_path, &json)?;
        let csv_path = dir.join(REPORT_CSV);
        write_atomic(&csv_path, &self.csv(&csv_path)?)
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(REPORT_JSON);
        serde_json::from_slice(&read(&path)?).map_err(|e| CliError::Json { path, source: e })
    }

    /// Fixed-width accuracy table, one line per strategy row.
    pub fn table(&self) -> String {
        let width = self.rows.iter().map(|r| r.categories.len()).max().unwrap_or(0).max(10);
        let mut out = String::new();
        let _ = write!(out, "{:>3}  {:<5} {:<width$}", "row", "tag", "pseudo");
        for c in &self.categories {
            let _ = write!(out, " {:>10}", truncate(c, 10));
        }
        out.push('\n');
        for r in &self.rows {
            let _ = write!(out, "{:>3}  {:<5} {:<width$}", r.row, r.strategy, r.categories);
            for m in &r.metrics {
                match m.accuracy {
                    Some(a) => {
                        let _ = write!(out, " {a:>10.3}");
                    }
                    None => {
                        let _ = write!(out, " {:>10}", "-");
                    }
                }
            }
            if let Some(d) = r.duplicate_of {
                let _ = write!(out, "  (same as row {d})");
            }
            out.push('\n');
        }
        let _ = writeln!(out, "seed {}  config {}", self.seed, self.fingerprint);
        out
    }
}

fn truncate(s: &str, n: usize) -> &str {
    s.char_indices().nth(n).map_or(s, |(i, _)| &s[..i])
}

/// Label-degree histograms of every category of `graph`, with and without
/// pseudo-edges.
pub fn write_histograms(path: &Path, graph: &ExtendedKG) -> Result<()> {
    let mut rows = Vec::new();
    for (c, name) in graph.categories().iter().enumerate() {
        for sources in [DegreeSources::TrainOnly, DegreeSources::TrainPlusPseudo] {
            let h = degree_histogram(graph, CategoryId(c), sources)?;
            for (degree, count) in h.buckets {
                rows.push([name.clone(), degree.to_string(), count.to_string(), sources.as_str().into()]);
            }
        }
    }
    write_csv(path, &["category", "degree", "count", "sources"], rows)
}
