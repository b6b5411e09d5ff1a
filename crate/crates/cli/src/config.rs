//! TOML run configuration and generator spec files.
//!
//! A run configuration is flattened into dotted keys: `[gcn] lr = 0.01`
//! becomes `gcn.lr = "0.01"`. The keys `dataset`, `out` and `strategy` belong
//! to the run itself; every other key must be a pipeline key.

use std::path::{Path, PathBuf};

use gcnboost_core::pipeline::PipelineConfig;
use gcnboost_core::synth::{CategorySpec, CorrelationRule, SizeDistribution, SyntheticSpec};
use serde::Deserialize;

use crate::error::{CliError, Result};
use crate::fsutil::read;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    pub out: Option<PathBuf>,
    /// `TAG[:cat1,cat2]`, used by `train`.
    pub strategy: Option<String>,
    pub pipeline: PipelineConfig,
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "dataset" => self.dataset = Some(value.into()),
            "out" => self.out = Some(value.into()),
            "strategy" => self.strategy = Some(value.into()),
            _ => self.pipeline.apply(key, value)?,
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        let mut flat = Vec::new();
        flatten("", &toml::Value::Table(table), &mut flat)?;
        let mut cfg = Self::default();
        for (k, v) in flat {
            cfg.set(&k, &v)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = read(path)?;
        let text = String::from_utf8(bytes).map_err(|_| CliError::Config(format!("{}: not UTF-8", path.display())))?;
        Self::from_toml(&text)
    }
}

fn scalar(key: &str, v: &toml::Value) -> Result<String> {
    match v {
        toml::Value::String(s) => Ok(s.clone()),
        toml::Value::Integer(i) => Ok(i.to_string()),
        toml::Value::Float(f) => Ok(f.to_string()),
        toml::Value::Boolean(b) => Ok(b.to_string()),
        _ => Err(CliError::Config(format!("`{key}` must be a scalar"))),
    }
}

fn flatten(prefix: &str, v: &toml::Value, out: &mut Vec<(String, String)>) -> Result<()> {
    match v {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out)?;
            }
        }
        // Category subsets: [["A", "B"], ["C", "D"]] or ["A+B", "C+D"].
        toml::Value::Array(items) => {
            let parts = items
                .iter()
                .map(|item| match item {
                    toml::Value::Array(inner) => {
                        inner.iter().map(|x| scalar(prefix, x)).collect::<Result<Vec<_>>>().map(|v| v.join("+"))
                    }
                    other => scalar(prefix, other),
                })
                .collect::<Result<Vec<_>>>()?;
            out.push((prefix.into(), parts.join(";")));
        }
        other => out.push((prefix.into(), scalar(prefix, other)?)),
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CategoryEntry {
    name: String,
    classes: usize,
    #[serde(default)]
    sizes: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CorrelationEntry {
    from: String,
    to: String,
    coverage: f64,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Rates {
    One(f64),
    Each(Vec<f64>),
}

/// Generator spec file: an optional preset overridden field by field.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    preset: Option<String>,
    seed: Option<u64>,
    train: Option<usize>,
    validation: Option<usize>,
    test: Option<usize>,
    feature_dim: Option<usize>,
    separation: Option<f64>,
    noise: Option<f64>,
    pseudo_corruption: Option<Rates>,
    categories: Option<Vec<CategoryEntry>>,
    correlations: Option<Vec<CorrelationEntry>>,
}

fn preset(name: &str) -> Result<SyntheticSpec> {
    SyntheticSpec::preset(name).ok_or_else(|| CliError::Config(format!("unknown preset `{name}`")))
}

fn size_distribution(text: Option<&str>) -> Result<SizeDistribution> {
    match text.map(str::trim) {
        None | Some("uniform") => Ok(SizeDistribution::Uniform),
        Some(s) => s
            .strip_prefix("zipf:")
            .and_then(|e| e.trim().parse().ok())
            .map(SizeDistribution::Zipf)
            .ok_or_else(|| CliError::Config(format!("`sizes`: expected `uniform` or `zipf:S`, got `{s}`"))),
    }
}

/// Parse a spec file into the generator spec and its optional seed.
pub fn parse_spec(text: &str) -> Result<(SyntheticSpec, Option<u64>)> {
    let file: SpecFile = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    let mut spec = preset(file.preset.as_deref().unwrap_or("easy"))?;
    let default_rate = spec.pseudo_corruption.first().copied().unwrap_or(0.0);
    macro_rules! set {
        ($($field:ident),*) => { $( if let Some(v) = file.$field { spec.$field = v; } )* };
    }
    set!(train, validation, test, feature_dim, separation, noise);
    if let Some(cats) = file.categories {
        spec.categories = cats
            .into_iter()
            .map(|c| {
                Ok(CategorySpec { sizes: size_distribution(c.sizes.as_deref())?, name: c.name, classes: c.classes })
            })
            .collect::<Result<_>>()?;
        spec.pseudo_corruption = vec![default_rate; spec.categories.len()];
    }
    if let Some(rules) = file.correlations {
        spec.correlations = rules
            .into_iter()
            .map(|r| CorrelationRule { from: r.from, to: r.to, coverage: r.coverage })
            .collect();
    }
    match file.pseudo_corruption {
        Some(Rates::One(r)) => spec.pseudo_corruption = vec![r; spec.categories.len()],
        Some(Rates::Each(v)) => spec.pseudo_corruption = v,
        None => {}
    }
    spec.validate()?;
    Ok((spec, file.seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_tables_flatten_to_pipeline_keys() {
        let cfg = RunConfig::from_toml(
            r#"
            seed = 7
            dataset = "data"
            filter = "Author:5"
            [gcn]
            lr = 0.01
            max_iterations = 200
            [ablate]
            pairs = [["Type", "School"], ["School", "Author"]]
            "#,
        )
        .unwrap();
        assert_eq!(cfg.dataset.as_deref(), Some(Path::new("data")));
        assert_eq!(cfg.pipeline.seed, 7);
        assert_eq!(cfg.pipeline.gcn.learning_rate, 0.01);
        assert_eq!(cfg.pipeline.gcn.max_iterations, 200);
        assert_eq!(cfg.pipeline.pairs.as_ref().unwrap()[1], ["School", "Author"]);
        assert_eq!(cfg.pipeline.filter.as_ref().unwrap().min_train_degree, 5);
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        let err = RunConfig::from_toml("[gcn]\ndropout = 0.5\n").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("gcn.dropout"));
        assert_eq!(RunConfig::from_toml("seed = [").unwrap_err().exit_code(), 2);
    }

    #[test]
    fn spec_overrides_and_rejections() {
        let (spec, seed) = parse_spec("preset = \"longtail\"\nseed = 3\ntest = 50\npseudo_corruption = 0.2\n").unwrap();
        assert_eq!(seed, Some(3));
        assert_eq!(spec.test, 50);
        assert_eq!(spec.pseudo_corruption, vec![0.2; 3]);

        let err = parse_spec("pseudo_corruption = 1.5\n").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("pseudo_corruption"));

        let err = parse_spec("colour = 1\n").unwrap_err();
        assert!(err.to_string().contains("colour"));

        let (spec, _) = parse_spec(
            "[[categories]]\nname = \"A\"\nclasses = 3\n[[categories]]\nname = \"B\"\nclasses = 9\nsizes = \"zipf:1.2\"\n",
        )
        .unwrap();
        assert_eq!(spec.categories[1].sizes, SizeDistribution::Zipf(1.2));
        assert_eq!(spec.pseudo_corruption.len(), 2);
    }
}
