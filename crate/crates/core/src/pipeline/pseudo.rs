use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::config::{BaselineConfig, PseudoSource};
use super::strategy::Strategy;
use crate::error::{Error, Result};
use crate::gcn::argmax;
use crate::graph::{CategoryId, PseudoLabels};
use crate::linalg::{add_transpose_product, matmul_bias, Matrix};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PseudoLabelAssignment {
    pub strategy: Strategy,
    pub per_node: PseudoLabels,
    pub source: PseudoSource,
}

impl PseudoLabelAssignment {
    /// Keep only the strategy's categories of `labels`.
    pub fn restrict(strategy: &Strategy, labels: &PseudoLabels, source: PseudoSource) -> Self {
        let per_node = labels
            .iter()
            .map(|(k, m)| {
                let kept = m
                    .iter()
                    .filter(|(c, _)| strategy.categories().contains(c))
                    .map(|(&c, v)| (c, v.clone()))
                    .collect();
                (k.clone(), kept)
            })
            .collect();
        Self {
            strategy: strategy.clone(),
            per_node,
            source,
        }
    }
}

/// Uniform draws over each category's label values, node-major in the given
/// order. `values[i]` lists the candidate values of `categories[i]`.
pub fn random_pseudo_labels(
    test_nodes: &[String],
    categories: &[(CategoryId, Vec<String>)],
    seed: u64,
) -> Result<PseudoLabels> {
    if categories.iter().any(|(_, v)| v.is_empty()) {
        return Err(Error::EmptyInput("label values of a category"));
    }
    let mut rng = seed::rng(seed);
    let mut out = PseudoLabels::new();
    for key in test_nodes {
        let mut labels = BTreeMap::new();
        for (c, values) in categories {
            labels.insert(*c, values[rng.random_range(0..values.len())].clone());
        }
        out.insert(key.clone(), labels);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineOutcome {
    pub predictions: Vec<usize>,
    /// Classes with no training example; they are never predicted.
    pub absent_classes: Vec<usize>,
}

fn standardizer(x: &Matrix) -> (Vec<f64>, Vec<f64>) {
    let (n, d) = (x.rows() as f64, x.cols());
    let mut mean = vec![0.0; d];
    for i in 0..x.rows() {
        for (m, v) in mean.iter_mut().zip(x.row(i)) {
            *m += v / n;
        }
    }
    let mut var = vec![0.0; d];
    for i in 0..x.rows() {
        for ((s, v), m) in var.iter_mut().zip(x.row(i)).zip(&mean) {
            *s += (v - m) * (v - m) / n;
        }
    }
    let scale = var
        .into_iter()
        .map(|v| if v > 1e-24 { 1.0 / libm::sqrt(v) } else { 1.0 })
        .collect();
    (mean, scale)
}

fn standardize(x: &Matrix, mean: &[f64], scale: &[f64]) -> Matrix {
    let mut out = x.clone();
    for i in 0..out.rows() {
        for ((v, m), s) in out.row_mut(i).iter_mut().zip(mean).zip(scale) {
            *v = (*v - m) * s;
        }
    }
    out
}

/// Multinomial logistic regression on standardized features, trained by
/// full-batch gradient descent on the mean cross-entropy plus an L2 term.
pub fn baseline_pseudo_labeler(
    train_x: &Matrix,
    train_y: &[usize],
    classes: usize,
    test_x: &Matrix,
    config: &BaselineConfig,
) -> Result<BaselineOutcome> {
    config.validate()?;
    if train_x.rows() == 0 || classes == 0 {
        return Err(Error::EmptyInput("baseline training set"));
    }
    if train_x.rows() != train_y.len() || train_x.cols() != test_x.cols() {
        return Err(Error::DimensionMismatch(alloc::format!(
            "{}x{} training features, {} targets, {}-wide test features",
            train_x.rows(),
            train_x.cols(),
            train_y.len(),
            test_x.cols()
        )));
    }
    if let Some(&t) = train_y.iter().find(|&&t| t >= classes) {
        return Err(Error::TargetOutOfRange { target: t, classes });
    }
    let (n, d) = (train_x.rows(), train_x.cols());
    let (mean, scale) = standardizer(train_x);
    let x = standardize(train_x, &mean, &scale);

    let mut rng = seed::rng(config.seed);
    let init = Normal::new(0.0, 0.01).expect("valid normal");
    let mut w: Vec<f64> = (0..d * classes).map(|_| init.sample(&mut rng)).collect();
    let mut b = vec![0.0; classes];
    let mut logits = Matrix::zeros(n, classes);
    let mut grad_w = vec![0.0; d * classes];
    for _ in 0..config.iterations {
        matmul_bias(&x, &w, Some(&b), &mut logits);
        let mut grad_b = vec![0.0; classes];
        for (i, &t) in train_y.iter().enumerate() {
            let row = logits.row_mut(i);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for v in row.iter_mut() {
                *v = libm::exp(*v - max);
                sum += *v;
            }
            for (k, v) in row.iter_mut().enumerate() {
                *v = (*v / sum - if k == t { 1.0 } else { 0.0 }) / n as f64;
                grad_b[k] += *v;
            }
        }
        grad_w.iter_mut().zip(&w).for_each(|(g, w)| *g = config.l2 * w);
        add_transpose_product(&x, &logits, &mut grad_w);
        for (w, g) in w.iter_mut().zip(&grad_w) {
            *w -= config.learning_rate * g;
        }
        for (b, g) in b.iter_mut().zip(&grad_b) {
            *b -= config.learning_rate * g;
        }
    }
    if w.iter().chain(&b).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "baseline weights",
            iteration: config.iterations,
        });
    }

    let tx = standardize(test_x, &mean, &scale);
    let mut test_logits = Matrix::zeros(tx.rows(), classes);
    matmul_bias(&tx, &w, Some(&b), &mut test_logits);
    let predictions = (0..tx.rows()).map(|i| argmax(test_logits.row(i))).collect();
    let mut seen = vec![false; classes];
    for &t in train_y {
        seen[t] = true;
    }
    let absent_classes = (0..classes).filter(|&k| !seen[k]).collect();
    Ok(BaselineOutcome {
        predictions,
        absent_classes,
    })
}
