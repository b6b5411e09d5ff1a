use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::str::FromStr;

use sha2::{Digest, Sha256};

use crate::embed::{InitScheme, ProjectionMethod, SkipGramParams, WalkParams};
use crate::error::{Error, Result};
use crate::gcn::TrainConfig;

/// Where the pseudo-labels of model-driven strategies come from. `S0`
/// always draws random labels regardless of this setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PseudoSource {
    Random,
    BaselineModel,
    Ingested,
}

impl PseudoSource {
    pub fn as_str(self) -> &'static str {
        match self {
            PseudoSource::Random => "random",
            PseudoSource::BaselineModel => "baseline_model",
            PseudoSource::Ingested => "ingested",
        }
    }
}

impl FromStr for PseudoSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(PseudoSource::Random),
            "baseline_model" | "baseline" => Ok(PseudoSource::BaselineModel),
            "ingested" | "ingested_file" => Ok(PseudoSource::Ingested),
            _ => Err(Error::param("pseudo.source", format!("unknown source `{s}`"))),
        }
    }
}

/// Full-batch multinomial logistic regression used as the stand-in
/// pseudo-labeler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineConfig {
    pub learning_rate: f64,
    pub iterations: usize,
    pub l2: f64,
    pub seed: u64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.5,
            iterations: 300,
            l2: 1e-4,
            seed: 0,
        }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::param("baseline.lr", "must be positive"));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::param("baseline.l2", "must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeFilter {
    pub category: String,
    pub min_train_degree: usize,
}

impl FromStr for DegreeFilter {
    type Err = Error;

    /// `CATEGORY:MIN_DEGREE`.
    fn from_str(s: &str) -> Result<Self> {
        let (category, min) = s
            .rsplit_once(':')
            .ok_or_else(|| Error::param("filter", "expected CATEGORY:MIN_DEGREE"))?;
        if category.is_empty() {
            return Err(Error::param("filter", "empty category name"));
        }
        Ok(Self {
            category: category.into(),
            min_train_degree: parse("filter", min)?,
        })
    }
}

/// Every tunable of a pipeline run, addressable by flat namespaced keys.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub seed: u64,
    pub walk: WalkParams,
    pub skipgram: SkipGramParams,
    pub init_scheme: InitScheme,
    /// Overrides the seed derived from `seed` for test-node initialization.
    pub init_seed: Option<u64>,
    pub projection: ProjectionMethod,
    pub gcn: TrainConfig,
    pub baseline: BaselineConfig,
    pub pseudo_source: PseudoSource,
    pub refresh_every: Option<usize>,
    pub filter: Option<DegreeFilter>,
    /// Category-name pairs for the S2 rows; `None` means all pairs.
    pub pairs: Option<Vec<Vec<String>>>,
    pub triples: Option<Vec<Vec<String>>>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            walk: WalkParams::default(),
            skipgram: SkipGramParams::default(),
            init_scheme: InitScheme::N2vPlusRandom,
            init_seed: None,
            projection: ProjectionMethod::SeededRandomProjection,
            gcn: TrainConfig::default(),
            baseline: BaselineConfig::default(),
            pseudo_source: PseudoSource::BaselineModel,
            refresh_every: None,
            filter: None,
            pairs: None,
            triples: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::param(key, format!("cannot parse `{value}`")))
}

/// `A+B;C+D` into `[[A, B], [C, D]]`.
fn parse_subsets(value: &str) -> Vec<Vec<String>> {
    value
        .split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.split('+').map(|c| c.trim().to_string()).collect())
        .collect()
}

fn join_subsets(subsets: &[Vec<String>]) -> String {
    subsets
        .iter()
        .map(|s| s.join("+"))
        .collect::<Vec<_>>()
        .join(";")
}

impl PipelineConfig {
    pub const KEYS: &'static [&'static str] = &[
        "ablate.pairs",
        "ablate.triples",
        "baseline.iterations",
        "baseline.l2",
        "baseline.lr",
        "filter",
        "gcn.beta1",
        "gcn.beta2",
        "gcn.epsilon",
        "gcn.hidden",
        "gcn.lr",
        "gcn.max_iterations",
        "gcn.patience",
        "init.projection",
        "init.scheme",
        "init.seed",
        "n2v.p",
        "n2v.q",
        "n2v.walk_length",
        "n2v.walks_per_node",
        "pseudo.source",
        "refresh.every",
        "seed",
        "sg.dim",
        "sg.epochs",
        "sg.lr",
        "sg.negatives",
        "sg.window",
    ];

    /// Set one key from its textual value. Unknown keys are rejected.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "seed" => self.seed = parse(key, value)?,
            "n2v.p" => self.walk.return_bias = parse(key, value)?,
            "n2v.q" => self.walk.inout_bias = parse(key, value)?,
            "n2v.walk_length" => self.walk.walk_length = parse(key, value)?,
            "n2v.walks_per_node" => self.walk.walks_per_node = parse(key, value)?,
            "sg.dim" => self.skipgram.dim = parse(key, value)?,
            "sg.window" => self.skipgram.window = parse(key, value)?,
            "sg.negatives" => self.skipgram.negatives_per_positive = parse(key, value)?,
            "sg.epochs" => self.skipgram.epochs = parse(key, value)?,
            "sg.lr" => self.skipgram.learning_rate = parse(key, value)?,
            "init.scheme" => {
                self.init_scheme = match value.trim() {
                    "n2v_plus_random" => InitScheme::N2vPlusRandom,
                    "visual_plus_n2v" => InitScheme::VisualPlusN2v,
                    other => return Err(Error::param(key, format!("unknown scheme `{other}`"))),
                }
            }
            "init.seed" => self.init_seed = Some(parse(key, value)?),
            "init.projection" => {
                self.projection = match value.trim() {
                    "random_projection" => ProjectionMethod::SeededRandomProjection,
                    "truncate" => ProjectionMethod::Truncate,
                    other => return Err(Error::param(key, format!("unknown method `{other}`"))),
                }
            }
            "gcn.hidden" => self.gcn.hidden = parse(key, value)?,
            "gcn.lr" => self.gcn.learning_rate = parse(key, value)?,
            "gcn.max_iterations" => self.gcn.max_iterations = parse(key, value)?,
            "gcn.patience" => self.gcn.patience = parse(key, value)?,
            "gcn.beta1" => self.gcn.adam_beta1 = parse(key, value)?,
            "gcn.beta2" => self.gcn.adam_beta2 = parse(key, value)?,
            "gcn.epsilon" => self.gcn.adam_epsilon = parse(key, value)?,
            "baseline.lr" => self.baseline.learning_rate = parse(key, value)?,
            "baseline.iterations" => self.baseline.iterations = parse(key, value)?,
            "baseline.l2" => self.baseline.l2 = parse(key, value)?,
            "pseudo.source" => self.pseudo_source = value.trim().parse()?,
            "refresh.every" => {
                let k: usize = parse(key, value)?;
                if k == 0 {
                    return Err(Error::param(key, "must be at least 1"));
                }
                self.refresh_every = Some(k);
            }
            "filter" => self.filter = Some(value.parse()?),
            "ablate.pairs" => self.pairs = Some(parse_subsets(value)),
            "ablate.triples" => self.triples = Some(parse_subsets(value)),
            _ => return Err(Error::param(key, "unknown configuration key")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.walk.validate()?;
        self.skipgram.validate()?;
        self.gcn.validate()?;
        self.baseline.validate()?;
        if self.refresh_every == Some(0) {
            return Err(Error::param("refresh.every", "must be at least 1"));
        }
        for (key, subsets, size) in [("ablate.pairs", &self.pairs, 2), ("ablate.triples", &self.triples, 3)] {
            if let Some(subsets) = subsets {
                if subsets.iter().any(|s| s.len() != size) {
                    return Err(Error::param(key, format!("every subset needs {size} categories")));
                }
            }
        }
        Ok(())
    }

    /// Resolved configuration as sorted `(key, value)` pairs; unset
    /// optional keys are listed with an empty value.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let opt = |v: Option<String>| v.unwrap_or_default();
        let mut out = Vec::with_capacity(Self::KEYS.len());
        for &key in Self::KEYS {
            let value = match key {
                "ablate.pairs" => opt(self.pairs.as_deref().map(join_subsets)),
                "ablate.triples" => opt(self.triples.as_deref().map(join_subsets)),
                "baseline.iterations" => self.baseline.iterations.to_string(),
                "baseline.l2" => self.baseline.l2.to_string(),
                "baseline.lr" => self.baseline.learning_rate.to_string(),
                "filter" => opt(self
                    .filter
                    .as_ref()
                    .map(|f| format!("{}:{}", f.category, f.min_train_degree))),
                "gcn.beta1" => self.gcn.adam_beta1.to_string(),
                "gcn.beta2" => self.gcn.adam_beta2.to_string(),
                "gcn.epsilon" => self.gcn.adam_epsilon.to_string(),
                "gcn.hidden" => self.gcn.hidden.to_string(),
                "gcn.lr" => self.gcn.learning_rate.to_string(),
                "gcn.max_iterations" => self.gcn.max_iterations.to_string(),
                "gcn.patience" => self.gcn.patience.to_string(),
                "init.projection" => self.projection.as_str().into(),
                "init.scheme" => self.init_scheme.as_str().into(),
                "init.seed" => opt(self.init_seed.map(|s| s.to_string())),
                "n2v.p" => self.walk.return_bias.to_string(),
                "n2v.q" => self.walk.inout_bias.to_string(),
                "n2v.walk_length" => self.walk.walk_length.to_string(),
                "n2v.walks_per_node" => self.walk.walks_per_node.to_string(),
                "pseudo.source" => self.pseudo_source.as_str().into(),
                "refresh.every" => opt(self.refresh_every.map(|k| k.to_string())),
                "seed" => self.seed.to_string(),
                "sg.dim" => self.skipgram.dim.to_string(),
                "sg.epochs" => self.skipgram.epochs.to_string(),
                "sg.lr" => self.skipgram.learning_rate.to_string(),
                "sg.negatives" => self.skipgram.negatives_per_positive.to_string(),
                "sg.window" => self.skipgram.window.to_string(),
                _ => unreachable!("key list and match arms disagree"),
            };
            out.push((key, value));
        }
        out
    }

    /// First 16 hex digits of the SHA-256 of the `key=value` listing.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for (k, v) in self.entries() {
            hasher.update(k.as_bytes());
            hasher.update(b"=");
            hasher.update(v.as_bytes());
            hasher.update(b"\n");
        }
        hasher.finalize()[..8]
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
