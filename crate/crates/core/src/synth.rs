//! Seeded synthetic datasets and a brute-force label-propagation oracle.
//!
//! Every artwork gets one class per category. Class sizes follow a uniform
//! or Zipf profile, correlation rules make one category a deterministic
//! function of another for a fraction of the artworks, and the raw feature
//! vector of an artwork is the sum of its per-category class centers plus
//! isotropic noise.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::dataset::{ArtworkRecord, Assignment, Dataset, LabelKey, LabelLink};
use crate::error::{Error, Result};
use crate::gcn::TaskLabels;
use crate::graph::{CategoryId, ExtendedKG, Node, NodeId, Split};
use crate::linalg::Matrix;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SizeDistribution {
    Uniform,
    /// Class `k` (0-based) gets weight `1/(k+1)^s`.
    Zipf(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategorySpec {
    pub name: String,
    pub classes: usize,
    pub sizes: SizeDistribution,
}

/// Category `to` is a fixed function of category `from` on a `coverage`
/// fraction of the artworks.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationRule {
    pub from: String,
    pub to: String,
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
    pub categories: Vec<CategorySpec>,
    pub correlations: Vec<CorrelationRule>,
    pub feature_dim: usize,
    /// Minimum distance between two class centers of one category.
    pub separation: f64,
    pub noise: f64,
    /// Per category, the rate at which emitted pseudo-labels are wrong.
    pub pseudo_corruption: Vec<f64>,
}

fn category(name: &str, classes: usize, sizes: SizeDistribution) -> CategorySpec {
    CategorySpec {
        name: name.into(),
        classes,
        sizes,
    }
}

impl SyntheticSpec {
    /// Well separated, uniform, uncorrelated classes.
    pub fn easy() -> Self {
        Self {
            train: 300,
            validation: 100,
            test: 100,
            categories: vec![
                category("Type", 5, SizeDistribution::Uniform),
                category("School", 6, SizeDistribution::Uniform),
                category("TimeFrame", 5, SizeDistribution::Uniform),
                category("Author", 10, SizeDistribution::Uniform),
            ],
            correlations: Vec::new(),
            feature_dim: 32,
            separation: 6.0,
            noise: 1.0,
            pseudo_corruption: vec![0.1; 4],
        }
    }

    /// Each author belongs to one school and one time frame.
    pub fn correlated() -> Self {
        Self {
            train: 400,
            validation: 100,
            test: 100,
            categories: vec![
                category("Type", 5, SizeDistribution::Uniform),
                category("Author", 24, SizeDistribution::Uniform),
                category("School", 6, SizeDistribution::Uniform),
                category("TimeFrame", 5, SizeDistribution::Uniform),
            ],
            correlations: vec![
                CorrelationRule {
                    from: "Author".into(),
                    to: "School".into(),
                    coverage: 1.0,
                },
                CorrelationRule {
                    from: "Author".into(),
                    to: "TimeFrame".into(),
                    coverage: 1.0,
                },
            ],
            feature_dim: 32,
            separation: 2.0,
            noise: 1.0,
            pseudo_corruption: vec![0.15; 4],
        }
    }

    /// Zipf-distributed authors with many rare classes.
    pub fn longtail() -> Self {
        Self {
            train: 400,
            validation: 100,
            test: 100,
            categories: vec![
                category("Type", 4, SizeDistribution::Uniform),
                category("School", 6, SizeDistribution::Uniform),
                category("Author", 40, SizeDistribution::Zipf(1.5)),
            ],
            correlations: vec![CorrelationRule {
                from: "Author".into(),
                to: "School".into(),
                coverage: 1.0,
            }],
            feature_dim: 64,
            separation: 2.5,
            noise: 1.0,
            pseudo_corruption: vec![0.1; 3],
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "easy" => Some(Self::easy()),
            "correlated" => Some(Self::correlated()),
            "longtail" => Some(Self::longtail()),
            _ => None,
        }
    }

    pub fn total(&self) -> usize {
        self.train + self.validation + self.test
    }

    fn category_index(&self, name: &str) -> Result<usize> {
        self.categories
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::param("correlations", format!("unknown category `{name}`")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.train == 0 {
            return Err(Error::param("train", "must be at least 1"));
        }
        if self.categories.is_empty() {
            return Err(Error::param("categories", "at least one category is required"));
        }
        let mut names = BTreeSet::new();
        for c in &self.categories {
            if c.name.is_empty() || c.name.contains([',', '\n', '"']) || !names.insert(c.name.as_str()) {
                return Err(Error::param("categories", format!("invalid or repeated name `{}`", c.name)));
            }
            if c.classes < 2 {
                return Err(Error::param("classes", format!("category `{}` needs at least 2 classes", c.name)));
            }
            if let SizeDistribution::Zipf(s) = c.sizes {
                if !(s > 0.0 && s.is_finite()) {
                    return Err(Error::param("zipf", "exponent must be positive"));
                }
            }
        }
        if self.feature_dim == 0 {
            return Err(Error::param("feature_dim", "must be at least 1"));
        }
        if !(self.separation > 0.0 && self.separation.is_finite()) {
            return Err(Error::param("separation", "must be positive"));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::param("noise", "must be non-negative"));
        }
        if self.pseudo_corruption.len() != self.categories.len() {
            return Err(Error::param("pseudo_corruption", "one rate per category is required"));
        }
        if self.pseudo_corruption.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(Error::param("pseudo_corruption", "rates must lie in [0, 1]"));
        }
        let mut targets = BTreeSet::new();
        for r in &self.correlations {
            if !(0.0..=1.0).contains(&r.coverage) {
                return Err(Error::param("coverage", "must lie in [0, 1]"));
            }
            let (a, b) = (self.category_index(&r.from)?, self.category_index(&r.to)?);
            if a == b || !targets.insert(b) {
                return Err(Error::param("correlations", format!("invalid rule `{}` -> `{}`", r.from, r.to)));
            }
            if r.coverage == 1.0 && self.categories[b].classes > self.categories[a].classes {
                return Err(Error::param(
                    "correlations",
                    format!(
                        "`{}` has more classes than `{}`; a full-coverage map cannot reach them all",
                        r.to, r.from
                    ),
                ));
            }
        }
        for r in &self.correlations {
            let a = self.category_index(&r.from)?;
            if targets.contains(&a) {
                return Err(Error::param("correlations", format!("`{}` is both a source and a target", r.from)));
            }
        }
        Ok(())
    }
}

/// Largest-remainder apportionment of `total` items over the class weights,
/// giving every class at least one item when possible. The result is
/// non-increasing whenever the weights are.
pub fn class_sizes(total: usize, classes: usize, dist: SizeDistribution) -> Vec<usize> {
    let weights: Vec<f64> = (0..classes)
        .map(|k| match dist {
            SizeDistribution::Uniform => 1.0,
            SizeDistribution::Zipf(s) => 1.0 / libm::pow((k + 1) as f64, s),
        })
        .collect();
    let floor = if total >= classes { 1 } else { 0 };
    let rest = total - floor * classes;
    let sum: f64 = weights.iter().sum();
    let quotas: Vec<f64> = weights.iter().map(|w| rest as f64 * w / sum).collect();
    let mut sizes: Vec<usize> = quotas.iter().map(|q| floor + libm::floor(*q) as usize).collect();
    let mut order: Vec<usize> = (0..classes).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (quotas[a] - libm::floor(quotas[a]), quotas[b] - libm::floor(quotas[b]));
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let missing = total - sizes.iter().sum::<usize>();
    for &k in order.iter().take(missing) {
        sizes[k] += 1;
    }
    sizes
}

fn sample_weighted<R: Rng>(rng: &mut R, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut x = rng.random_range(0.0..total);
    for (k, w) in weights.iter().enumerate() {
        if x < *w {
            return k;
        }
        x -= w;
    }
    weights.len() - 1
}

fn value_name(c: &CategorySpec, k: usize) -> String {
    let width = format!("{}", c.classes - 1).len();
    format!("{}_{:0width$}", c.name, k)
}

fn class_centers(classes: usize, dim: usize, separation: f64, seed: u64) -> Matrix {
    let mut rng = seed::rng(seed);
    let mut m = Matrix::from_vec(
        classes,
        dim,
        (0..classes * dim).map(|_| StandardNormal.sample(&mut rng)).collect(),
    );
    let mut min = f64::INFINITY;
    for i in 0..classes {
        for j in i + 1..classes {
            let d: f64 = m.row(i).iter().zip(m.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
            min = min.min(libm::sqrt(d));
        }
    }
    if min > 0.0 && min.is_finite() {
        let scale = separation / min;
        m.as_mut_slice().iter_mut().for_each(|v| *v *= scale);
    }
    m
}

/// Draw a dataset from `spec`. Identical spec and seed give an identical
/// dataset.
pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    let n = spec.total();
    let nc = spec.categories.len();
    let mut labels: Vec<Vec<usize>> = vec![Vec::new(); nc];
    let incoming: BTreeMap<usize, &CorrelationRule> = spec
        .correlations
        .iter()
        .map(|r| Ok((spec.category_index(&r.to)?, r)))
        .collect::<Result<_>>()?;

    for (c, cat) in spec.categories.iter().enumerate() {
        if incoming.contains_key(&c) {
            continue;
        }
        let mut rng = seed::rng_for(seed, &format!("synth.classes/{}", cat.name));
        let sizes = class_sizes(n, cat.classes, cat.sizes);
        let mut v: Vec<usize> = sizes.iter().enumerate().flat_map(|(k, &s)| core::iter::repeat(k).take(s)).collect();
        v.shuffle(&mut rng);
        labels[c] = v;
    }

    let mut links = Vec::new();
    let mut maps: Vec<(usize, usize, Vec<usize>)> = Vec::new();
    for r in &spec.correlations {
        let (a, b) = (spec.category_index(&r.from)?, spec.category_index(&r.to)?);
        let (ka, kb) = (spec.categories[a].classes, spec.categories[b].classes);
        let mut rng = seed::rng_for(seed, &format!("synth.map/{}/{}", r.from, r.to));
        let mut perm: Vec<usize> = (0..ka).collect();
        perm.shuffle(&mut rng);
        let mut map = vec![0; ka];
        for (pos, &class) in perm.iter().enumerate() {
            map[class] = pos % kb;
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let covered = libm::round(r.coverage * n as f64) as usize;
        let weights: Vec<f64> = class_sizes(n, kb, spec.categories[b].sizes).iter().map(|&s| s as f64).collect();
        let mut v = vec![0; n];
        for (rank, &i) in order.iter().enumerate() {
            v[i] = if rank < covered {
                map[labels[a][i]]
            } else {
                sample_weighted(&mut rng, &weights)
            };
        }
        labels[b] = v;
        maps.push((a, b, map));
    }

    let mut split_rng = seed::rng_for(seed, "synth.splits");
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut split_rng);
    let mut splits = vec![Split::Test; n];
    for (rank, &i) in order.iter().enumerate() {
        splits[i] = if rank < spec.train {
            Split::Train
        } else if rank < spec.train + spec.validation {
            Split::Validation
        } else {
            Split::Test
        };
    }

    let width = format!("{}", n.saturating_sub(1)).len();
    let keys: Vec<String> = (0..n).map(|i| format!("art{:0width$}", i)).collect();
    let artworks: Vec<ArtworkRecord> = (0..n)
        .map(|i| ArtworkRecord {
            key: keys[i].clone(),
            split: splits[i],
            feature_ref: Some(i),
        })
        .collect();

    let mut assignments = Vec::new();
    let mut truth = Vec::new();
    for i in 0..n {
        for (c, cat) in spec.categories.iter().enumerate() {
            let a = Assignment::new(keys[i].clone(), CategoryId(c), value_name(cat, labels[c][i]));
            if splits[i] == Split::Test {
                truth.push(a);
            } else {
                assignments.push(a);
            }
        }
    }

    let in_graph: BTreeSet<(usize, usize)> = (0..n)
        .filter(|&i| splits[i] != Split::Test)
        .flat_map(|i| (0..nc).map(move |c| (c, i)))
        .map(|(c, i)| (c, labels[c][i]))
        .collect();
    for (a, b, map) in &maps {
        let used: BTreeSet<usize> = labels[*a].iter().copied().collect();
        for &k in &used {
            if !in_graph.contains(&(*a, k)) && !in_graph.contains(&(*b, map[k])) {
                continue;
            }
            links.push(LabelLink {
                from: LabelKey::new(CategoryId(*a), value_name(&spec.categories[*a], k)),
                to: LabelKey::new(CategoryId(*b), value_name(&spec.categories[*b], map[k])),
            });
        }
    }

    let dim = spec.feature_dim;
    let centers: Vec<Matrix> = spec
        .categories
        .iter()
        .map(|c| {
            class_centers(
                c.classes,
                dim,
                spec.separation,
                seed::derive_seed(seed, &format!("synth.centers/{}", c.name)),
            )
        })
        .collect();
    let noise = Normal::new(0.0, spec.noise).map_err(|_| Error::param("noise", "invalid scale"))?;
    let mut noise_rng = seed::rng_for(seed, "synth.noise");
    let mut features = Matrix::zeros(n, dim);
    #[allow(clippy::needless_range_loop)]
    for i in 0..n {
        let row = features.row_mut(i);
        for (c, center) in centers.iter().enumerate() {
            for (v, m) in row.iter_mut().zip(center.row(labels[c][i])) {
                *v += m;
            }
        }
        for v in row.iter_mut() {
            *v += noise.sample(&mut noise_rng);
        }
    }

    let mut pseudo_rng = seed::rng_for(seed, "synth.pseudo");
    let mut pseudo = Vec::new();
    for i in (0..n).filter(|&i| splits[i] == Split::Test) {
        for (c, cat) in spec.categories.iter().enumerate() {
            let t = labels[c][i];
            let k = if pseudo_rng.random_bool(spec.pseudo_corruption[c]) {
                let wrong = pseudo_rng.random_range(0..cat.classes - 1);
                if wrong >= t {
                    wrong + 1
                } else {
                    wrong
                }
            } else {
                t
            };
            pseudo.push(Assignment::new(keys[i].clone(), CategoryId(c), value_name(cat, k)));
        }
    }

    Ok(Dataset {
        categories: spec.categories.iter().map(|c| c.name.clone()).collect(),
        artworks,
        assignments,
        links,
        features,
        truth,
        pseudo: Some(pseudo),
    })
}

/// Iterative plurality vote over `ekg`. Label nodes pass on the class
/// histogram of their currently labeled artworks; every artwork outside the
/// train mask takes the plurality of the summed histograms of its
/// neighbors. Updates are synchronous; nodes that received no vote get
/// class 0.
pub fn oracle_label_propagation(
    ekg: &ExtendedKG,
    task: &TaskLabels,
    max_rounds: usize,
) -> Result<BTreeMap<NodeId, usize>> {
    if task.train_mask.is_empty() {
        return Err(Error::EmptyInput("train mask"));
    }
    let lists = ekg.neighbor_lists();
    let n = ekg.node_count();
    let k = task.classes;
    let mut state: Vec<Option<usize>> = vec![None; n];
    for (node, target) in task.masked(&task.train_mask)? {
        state[node] = Some(target);
    }
    let free: Vec<usize> = ekg
        .nodes()
        .filter(|node| matches!(node, Node::Artwork(_)) && !task.train_mask.contains(&node.id()))
        .map(|node| node.id().0)
        .collect();
    let is_label: Vec<bool> = ekg.nodes().map(|node| matches!(node, Node::Label(_))).collect();

    for _ in 0..max_rounds {
        let mut hist = vec![0usize; n * k];
        for v in (0..n).filter(|&v| is_label[v]) {
            for &u in lists.neighbors(v) {
                if let Some(c) = state[u].filter(|_| !is_label[u]) {
                    hist[v * k + c] += 1;
                }
            }
        }
        let mut next = state.clone();
        for &u in &free {
            let mut votes = vec![0usize; k];
            for &v in lists.neighbors(u) {
                if is_label[v] {
                    votes.iter_mut().zip(&hist[v * k..(v + 1) * k]).for_each(|(a, b)| *a += b);
                } else if let Some(c) = state[v] {
                    votes[c] += 1;
                }
            }
            let best = votes.iter().copied().max().unwrap_or(0);
            next[u] = (best > 0).then(|| votes.iter().position(|&x| x == best).unwrap_or(0));
        }
        if next == state {
            break;
        }
        state = next;
    }
    Ok(free.into_iter().map(|u| (NodeId(u), state[u].unwrap_or(0))).collect())
}
