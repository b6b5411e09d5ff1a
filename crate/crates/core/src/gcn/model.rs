use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::task::TaskLabels;
use crate::error::{Error, Result};
use crate::graph::{NodeId, NormalizedAdjacency};
use crate::linalg::{add_transpose_product, column_sums, matmul_bias, matmul_transpose_right, Matrix};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GcnDims {
    pub input: usize,
    pub hidden: usize,
    pub classes: usize,
}

impl GcnDims {
    pub fn param_count(&self) -> usize {
        self.input * self.hidden + self.hidden + self.hidden * self.classes + self.classes
    }

    fn offsets(&self) -> [usize; 4] {
        let w1 = 0;
        let b1 = self.input * self.hidden;
        let w2 = b1 + self.hidden;
        let b2 = w2 + self.hidden * self.classes;
        [w1, b1, w2, b2]
    }
}

/// Parameters stored flat as `[W¹ (d×h), b¹ (h), W² (h×k), b² (k)]`,
/// matrices row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnModel {
    dims: GcnDims,
    params: Vec<f64>,
}

/// Same layout as [`GcnModel`].
pub type Gradients = GcnModel;

macro_rules! views {
    ($($get:ident, $get_mut:ident, $idx:expr, $len:expr;)*) => {
        $(
            pub fn $get(&self) -> &[f64] {
                let o = self.dims.offsets()[$idx];
                let len = $len(&self.dims);
                &self.params[o..o + len]
            }

            pub fn $get_mut(&mut self) -> &mut [f64] {
                let o = self.dims.offsets()[$idx];
                let len = $len(&self.dims);
                &mut self.params[o..o + len]
            }
        )*
    };
}

impl GcnModel {
    pub fn zeros(dims: GcnDims) -> Self {
        Self {
            dims,
            params: vec![0.0; dims.param_count()],
        }
    }

    /// Uniform Glorot initialization of both weight matrices, zero biases.
    pub fn glorot(dims: GcnDims, seed: u64) -> Self {
        let mut model = Self::zeros(dims);
        let mut rng = seed::rng_for(seed, "glorot");
        let b1 = libm::sqrt(6.0 / (dims.input + dims.hidden) as f64);
        for w in model.w1_mut() {
            *w = rng.random_range(-b1..b1);
        }
        let b2 = libm::sqrt(6.0 / (dims.hidden + dims.classes) as f64);
        for w in model.w2_mut() {
            *w = rng.random_range(-b2..b2);
        }
        model
    }

    pub fn from_params(dims: GcnDims, params: Vec<f64>) -> Result<Self> {
        if params.len() != dims.param_count() {
            return Err(Error::DimensionMismatch(alloc::format!(
                "{} parameters for dims {:?}",
                params.len(),
                dims
            )));
        }
        Ok(Self { dims, params })
    }

    pub fn dims(&self) -> GcnDims {
        self.dims
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    views! {
        w1, w1_mut, 0, |d: &GcnDims| d.input * d.hidden;
        b1, b1_mut, 1, |d: &GcnDims| d.hidden;
        w2, w2_mut, 2, |d: &GcnDims| d.hidden * d.classes;
        b2, b2_mut, 3, |d: &GcnDims| d.classes;
    }
}

/// Every intermediate of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    /// `Â·H⁰`
    pub propagated_input: Matrix,
    /// `Â·H⁰·W¹ + b¹`
    pub pre_activation: Matrix,
    pub hidden: Matrix,
    /// `Â·hidden`
    pub propagated_hidden: Matrix,
    pub logits: Matrix,
    pub probs: Matrix,
}

fn check_dims(model: &GcnModel, adj: &NormalizedAdjacency, h0: &Matrix) -> Result<()> {
    if h0.cols() != model.dims.input {
        return Err(Error::DimensionMismatch(alloc::format!(
            "feature width {} but model input {}",
            h0.cols(),
            model.dims.input
        )));
    }
    if h0.rows() != adj.dim() {
        return Err(Error::DimensionMismatch(alloc::format!(
            "{} feature rows for a {}-node adjacency",
            h0.rows(),
            adj.dim()
        )));
    }
    Ok(())
}

pub(crate) fn softmax_rows(logits: &Matrix) -> Matrix {
    let mut probs = logits.clone();
    for i in 0..probs.rows() {
        let row = probs.row_mut(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = libm::exp(*v - max);
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    probs
}

/// Forward intermediates that depend on the parameters.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Activations {
    pub pre_activation: Matrix,
    pub hidden: Matrix,
    pub propagated_hidden: Matrix,
    pub logits: Matrix,
    pub probs: Matrix,
}

/// Forward pass from an already propagated input `Â·H⁰`.
pub(crate) fn activations(
    model: &GcnModel,
    adj: &NormalizedAdjacency,
    propagated_input: &Matrix,
) -> Activations {
    let d = model.dims;
    let n = propagated_input.rows();
    let mut pre_activation = Matrix::zeros(n, d.hidden);
    matmul_bias(propagated_input, model.w1(), Some(model.b1()), &mut pre_activation);
    let mut hidden = pre_activation.clone();
    for v in hidden.as_mut_slice() {
        *v = v.max(0.0);
    }
    let propagated_hidden = adj.multiply(&hidden);
    let mut logits = Matrix::zeros(n, d.classes);
    matmul_bias(&propagated_hidden, model.w2(), Some(model.b2()), &mut logits);
    let probs = softmax_rows(&logits);
    Activations {
        pre_activation,
        hidden,
        propagated_hidden,
        logits,
        probs,
    }
}

pub fn forward(model: &GcnModel, adj: &NormalizedAdjacency, h0: &Matrix) -> Result<Forward> {
    check_dims(model, adj, h0)?;
    let propagated_input = adj.multiply(h0);
    let a = activations(model, adj, &propagated_input);
    Ok(Forward {
        propagated_input,
        pre_activation: a.pre_activation,
        hidden: a.hidden,
        propagated_hidden: a.propagated_hidden,
        logits: a.logits,
        probs: a.probs,
    })
}

/// `−Σ_{i∈mask} ln probs[i, target_i]`; zero for an empty mask.
pub fn loss(probs: &Matrix, task: &TaskLabels, mask: &BTreeSet<NodeId>) -> Result<f64> {
    let pairs = task.masked(mask)?;
    masked_loss(probs, &pairs)
}

pub(crate) fn masked_loss(probs: &Matrix, pairs: &[(usize, usize)]) -> Result<f64> {
    let mut total = 0.0;
    for &(i, t) in pairs {
        if t >= probs.cols() {
            return Err(Error::TargetOutOfRange {
                target: t,
                classes: probs.cols(),
            });
        }
        total -= libm::log(probs.get(i, t));
    }
    Ok(total)
}

/// Same quantity as [`masked_loss`] computed from logits with a shifted
/// log-sum-exp, so saturated rows stay finite.
pub(crate) fn masked_loss_from_logits(logits: &Matrix, pairs: &[(usize, usize)]) -> f64 {
    let mut total = 0.0;
    for &(i, t) in pairs {
        let row = logits.row(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + libm::log(row.iter().map(|&v| libm::exp(v - max)).sum::<f64>());
        total += lse - row[t];
    }
    total
}

pub(crate) fn backward_from(
    model: &GcnModel,
    adj: &NormalizedAdjacency,
    propagated_input: &Matrix,
    fwd: &Activations,
    pairs: &[(usize, usize)],
) -> Gradients {
    let d = model.dims;
    let n = fwd.probs.rows();
    let mut grads = GcnModel::zeros(d);
    if pairs.is_empty() {
        return grads;
    }
    let mut d_logits = Matrix::zeros(n, d.classes);
    for &(i, t) in pairs {
        let row = d_logits.row_mut(i);
        row.copy_from_slice(fwd.probs.row(i));
        row[t] -= 1.0;
    }
    add_transpose_product(&fwd.propagated_hidden, &d_logits, grads.w2_mut());
    column_sums(&d_logits, grads.b2_mut());

    let mut d_prop_hidden = Matrix::zeros(n, d.hidden);
    matmul_transpose_right(&d_logits, model.w2(), &mut d_prop_hidden);
    // Â is symmetric, so Âᵀ·g = Â·g.
    let mut d_pre = adj.multiply(&d_prop_hidden);
    for (g, &z) in d_pre
        .as_mut_slice()
        .iter_mut()
        .zip(fwd.pre_activation.as_slice())
    {
        if z <= 0.0 {
            *g = 0.0;
        }
    }
    add_transpose_product(propagated_input, &d_pre, grads.w1_mut());
    column_sums(&d_pre, grads.b1_mut());
    grads
}

/// Analytic gradients of [`loss`] over `mask` with respect to every parameter.
pub fn backward(
    model: &GcnModel,
    adj: &NormalizedAdjacency,
    h0: &Matrix,
    task: &TaskLabels,
    mask: &BTreeSet<NodeId>,
) -> Result<Gradients> {
    let pairs = task.masked(mask)?;
    check_dims(model, adj, h0)?;
    let propagated_input = adj.multiply(h0);
    let act = activations(model, adj, &propagated_input);
    Ok(backward_from(model, adj, &propagated_input, &act, &pairs))
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{CategoryId, NeighborLists};
    use alloc::collections::BTreeMap;

    fn path3() -> NormalizedAdjacency {
        let edges = [(NodeId(0), NodeId(1)), (NodeId(1), NodeId(2))].into_iter().collect();
        NormalizedAdjacency::from_neighbor_lists(&NeighborLists::from_edges(3, &edges))
    }

    #[test]
    fn zero_model_gives_uniform_probs() {
        let adj = path3();
        let model = GcnModel::zeros(GcnDims { input: 2, hidden: 3, classes: 4 });
        let h0 = Matrix::from_rows(&[vec![1.0, 2.0], vec![-1.0, 0.5], vec![0.0, 3.0]]);
        let f = forward(&model, &adj, &h0).unwrap();
        assert!(f.logits.as_slice().iter().all(|&v| v == 0.0));
        assert!(f.probs.as_slice().iter().all(|&p| p == 0.25));
    }

    #[test]
    fn isolated_node_identity_composition() {
        let adj = NormalizedAdjacency::from_neighbor_lists(&NeighborLists::from_edges(1, &BTreeSet::new()));
        let dims = GcnDims { input: 3, hidden: 3, classes: 2 };
        let mut model = GcnModel::zeros(dims);
        for i in 0..3 {
            model.w1_mut()[i * 3 + i] = 1.0;
        }
        let h0 = Matrix::from_rows(&[vec![0.5, 0.0, 2.0]]);
        let f = forward(&model, &adj, &h0).unwrap();
        assert_eq!(f.hidden.row(0), &[0.5, 0.0, 2.0]);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let adj = path3();
        let model = GcnModel::zeros(GcnDims { input: 2, hidden: 2, classes: 2 });
        let bad = Matrix::zeros(3, 5);
        assert!(matches!(forward(&model, &adj, &bad), Err(Error::DimensionMismatch(_))));
        assert!(GcnModel::from_params(model.dims(), vec![0.0; 3]).is_err());
    }

    fn task(targets: &[(usize, usize)], k: usize) -> TaskLabels {
        let t: BTreeMap<_, _> = targets.iter().map(|&(n, c)| (NodeId(n), c)).collect();
        let mask = t.keys().copied().collect();
        TaskLabels { category: CategoryId(0), classes: k, targets: t, train_mask: mask, val_mask: BTreeSet::new() }
    }

    #[test]
    fn loss_values() {
        let probs = Matrix::from_rows(&[vec![0.5, 0.5], vec![0.25, 0.75]]);
        let t = task(&[(0, 0)], 2);
        assert!((loss(&probs, &t, &t.train_mask).unwrap() - core::f64::consts::LN_2).abs() < 1e-12);
        let t = task(&[(0, 1), (1, 0)], 2);
        assert!((loss(&probs, &t, &t.train_mask).unwrap() - 2.079_441_541_679_836).abs() < 1e-12);
        let one_hot = Matrix::from_rows(&[vec![1.0, 0.0]]);
        let t = task(&[(0, 0)], 2);
        assert_eq!(loss(&one_hot, &t, &t.train_mask).unwrap(), 0.0);
        assert_eq!(loss(&probs, &t, &BTreeSet::new()).unwrap(), 0.0);
        let bad = task(&[(0, 2)], 2);
        assert!(matches!(loss(&probs, &bad, &bad.train_mask), Err(Error::TargetOutOfRange { .. })));
    }

    #[test]
    fn zero_model_bias_gradient_closed_form() {
        let adj = path3();
        let model = GcnModel::zeros(GcnDims { input: 2, hidden: 2, classes: 3 });
        let h0 = Matrix::from_rows(&[vec![1.0, 2.0], vec![-1.0, 0.5], vec![0.0, 3.0]]);
        let t = task(&[(0, 2), (2, 2), (1, 0)], 3);
        let g = backward(&model, &adj, &h0, &t, &t.train_mask).unwrap();
        let expected = [1.0 - 1.0, 1.0, 1.0 - 2.0];
        for (a, e) in g.b2().iter().zip(expected) {
            assert!((a - e).abs() < 1e-15);
        }
        let empty = backward(&model, &adj, &h0, &t, &BTreeSet::new()).unwrap();
        assert!(empty.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn argmax_ties_and_shift() {
        assert_eq!(argmax(&[0.25; 4]), 0);
        assert_eq!(argmax(&[0.1, 0.7, 0.2]), 1);
        assert_eq!(argmax(&[3.1, 9.7, 5.2]), argmax(&[3.1 + 40.0, 9.7 + 40.0, 5.2 + 40.0]));
    }
}
