use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use super::adam::{AdamConfig, AdamState};
use super::model::{
    activations, argmax, backward_from, forward, masked_loss_from_logits, Activations, GcnDims, GcnModel,
};
use super::task::TaskLabels;
use crate::error::{Error, Result};
use crate::graph::{NodeId, NormalizedAdjacency};
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub hidden: usize,
    pub learning_rate: f64,
    pub max_iterations: usize,
    /// Consecutive iterations without a strict improvement of the best
    /// validation loss before training stops.
    pub patience: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: 16,
            learning_rate: 0.001,
            max_iterations: 2000,
            patience: 100,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            epsilon: self.adam_epsilon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 {
            return Err(Error::param("gcn.hidden", "must be at least 1"));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::param("gcn.lr", "must be a non-negative number"));
        }
        if self.patience == 0 {
            return Err(Error::param("gcn.patience", "must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return Err(Error::param("gcn.beta1", "Adam betas must lie in [0, 1)"));
        }
        if self.adam_epsilon.is_nan() || self.adam_epsilon <= 0.0 {
            return Err(Error::param("gcn.epsilon", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryRow {
    pub iteration: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    pub rows: Vec<HistoryRow>,
    pub stopped_at: usize,
    pub best_val_loss: Option<f64>,
    pub best_iteration: Option<usize>,
}

/// Full-batch training state for one task. [`train`] drives it to
/// completion; the pipeline steps several trainers in lockstep when
/// pseudo-labels are refreshed during training.
#[derive(Debug, Clone)]
pub struct Trainer {
    config: TrainConfig,
    model: GcnModel,
    best: Option<GcnModel>,
    adam: AdamState,
    train_pairs: Vec<(usize, usize)>,
    val_pairs: Vec<(usize, usize)>,
    history: TrainHistory,
    stalled: usize,
    done: bool,
}

impl Trainer {
    pub fn new(input_dim: usize, task: &TaskLabels, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        if task.classes == 0 {
            return Err(Error::EmptyInput("task has no classes"));
        }
        let dims = GcnDims {
            input: input_dim,
            hidden: config.hidden,
            classes: task.classes,
        };
        let model = GcnModel::glorot(dims, config.seed);
        Ok(Self {
            config,
            adam: AdamState::new(dims.param_count()),
            model,
            best: None,
            train_pairs: task.masked(&task.train_mask)?,
            val_pairs: task.masked(&task.val_mask)?,
            history: TrainHistory::default(),
            stalled: 0,
            done: config.max_iterations == 0,
        })
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn iteration(&self) -> usize {
        self.history.stopped_at
    }

    /// Parameters the trainer would return if it stopped now.
    pub fn current(&self) -> &GcnModel {
        self.best.as_ref().unwrap_or(&self.model)
    }

    /// One iteration: evaluate losses at the current parameters, update the
    /// early-stopping state, then take an Adam step unless training ended.
    pub fn step(&mut self, adj: &NormalizedAdjacency, propagated_input: &Matrix) -> Result<()> {
        if self.done {
            return Ok(());
        }
        let iteration = self.history.stopped_at + 1;
        let fwd = activations(&self.model, adj, propagated_input);
        let train_loss = masked_loss_from_logits(&fwd.logits, &self.train_pairs);
        if !train_loss.is_finite() {
            return Err(Error::NonFinite { what: "training loss", iteration });
        }
        let val_loss = if self.val_pairs.is_empty() {
            None
        } else {
            let v = masked_loss_from_logits(&fwd.logits, &self.val_pairs);
            if !v.is_finite() {
                return Err(Error::NonFinite { what: "validation loss", iteration });
            }
            Some(v)
        };
        self.history.rows.push(HistoryRow { iteration, train_loss, val_loss });
        self.history.stopped_at = iteration;

        if let Some(v) = val_loss {
            if self.history.best_val_loss.map_or(true, |b| v < b) {
                self.history.best_val_loss = Some(v);
                self.history.best_iteration = Some(iteration);
                self.best = Some(self.model.clone());
                self.stalled = 0;
            } else {
                self.stalled += 1;
                if self.stalled >= self.config.patience {
                    self.done = true;
                    return Ok(());
                }
            }
        }
        if iteration >= self.config.max_iterations {
            self.done = true;
            if self.val_pairs.is_empty() {
                // Without validation the final parameters are returned.
                self.apply_step(adj, propagated_input, &fwd)?;
            }
            return Ok(());
        }
        self.apply_step(adj, propagated_input, &fwd)
    }

    fn apply_step(
        &mut self,
        adj: &NormalizedAdjacency,
        propagated_input: &Matrix,
        fwd: &Activations,
    ) -> Result<()> {
        let grads = backward_from(&self.model, adj, propagated_input, fwd, &self.train_pairs);
        let iteration = self.history.stopped_at;
        self.adam
            .update(self.model.params_mut(), grads.as_slice(), &self.config.adam())
            .map_err(|_| Error::NonFinite { what: "gradient", iteration })
    }

    pub fn finish(self) -> (GcnModel, TrainHistory) {
        let model = if self.val_pairs.is_empty() {
            self.model
        } else {
            self.best.unwrap_or(self.model)
        };
        (model, self.history)
    }
}

/// Early-stopped full-batch training of one task. Returns the parameters
/// with the best validation loss (final parameters when the validation
/// mask is empty).
pub fn train(
    adj: &NormalizedAdjacency,
    h0: &Matrix,
    task: &TaskLabels,
    config: &TrainConfig,
) -> Result<(GcnModel, TrainHistory)> {
    if task.train_mask.is_empty() {
        return Err(Error::EmptyInput("train mask"));
    }
    if h0.rows() != adj.dim() {
        return Err(Error::DimensionMismatch(alloc::format!(
            "{} feature rows for a {}-node adjacency",
            h0.rows(),
            adj.dim()
        )));
    }
    let propagated = adj.multiply(h0);
    let mut trainer = Trainer::new(h0.cols(), task, *config)?;
    while !trainer.is_done() {
        trainer.step(adj, &propagated)?;
    }
    Ok(trainer.finish())
}

/// Class with the highest probability for each node; ties go to the lowest
/// class index.
pub fn predict(
    model: &GcnModel,
    adj: &NormalizedAdjacency,
    h0: &Matrix,
    nodes: &BTreeSet<NodeId>,
) -> Result<BTreeMap<NodeId, usize>> {
    let fwd = forward(model, adj, h0)?;
    nodes
        .iter()
        .map(|&n| {
            if n.0 >= adj.dim() {
                return Err(Error::MissingRow { what: "graph node", node: n });
            }
            Ok((n, argmax(fwd.probs.row(n.0))))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{CategoryId, NeighborLists};
    use crate::seed;
    use rand::Rng;

    /// Two 20-node communities, each a ring with chords; class = community.
    fn two_communities() -> (NormalizedAdjacency, Matrix, TaskLabels) {
        let mut edges = BTreeSet::new();
        for c in 0..2 {
            let base = c * 20;
            for i in 0..20 {
                edges.insert((NodeId(base + i), NodeId(base + (i + 1) % 20)));
                edges.insert((NodeId(base + i), NodeId(base + (i + 5) % 20)));
            }
        }
        edges.insert((NodeId(0), NodeId(20)));
        let edges = edges.into_iter().map(|(a, b)| if a < b { (a, b) } else { (b, a) }).collect();
        let adj = NormalizedAdjacency::from_neighbor_lists(&NeighborLists::from_edges(40, &edges));
        let mut rng = seed::rng(5);
        let h0 = Matrix::from_vec(40, 4, (0..160).map(|_| rng.random_range(-1.0..1.0)).collect());
        let targets: BTreeMap<_, _> = (0..40).map(|i| (NodeId(i), i / 20)).collect();
        let train_mask = (0..40).filter(|i| i % 4 != 3).map(NodeId).collect();
        let val_mask = (0..40).filter(|i| i % 4 == 3).map(NodeId).collect();
        let task = TaskLabels::new(CategoryId(0), 2, targets, train_mask, val_mask).unwrap();
        (adj, h0, task)
    }

    #[test]
    fn separable_graph_loss_drops() {
        let (adj, h0, task) = two_communities();
        let cfg = TrainConfig { learning_rate: 0.01, max_iterations: 1500, patience: 2000, hidden: 8, seed: 1, ..TrainConfig::default() };
        let (_, hist) = train(&adj, &h0, &task, &cfg).unwrap();
        let first = hist.rows.first().unwrap().train_loss;
        let last = hist.rows.last().unwrap().train_loss;
        assert!(last < 0.1 * first, "{first} -> {last}");
    }

    #[test]
    fn stalled_validation_stops_at_two() {
        let (adj, h0, task) = two_communities();
        let cfg = TrainConfig { learning_rate: 0.0, patience: 1, ..TrainConfig::default() };
        let (_, hist) = train(&adj, &h0, &task, &cfg).unwrap();
        assert_eq!(hist.stopped_at, 2);
        assert_eq!(hist.rows.len(), 2);
        assert_eq!(hist.best_iteration, Some(1));
    }

    #[test]
    fn training_is_deterministic() {
        let (adj, h0, task) = two_communities();
        let cfg = TrainConfig { max_iterations: 200, seed: 9, ..TrainConfig::default() };
        let a = train(&adj, &h0, &task, &cfg).unwrap();
        let b = train(&adj, &h0, &task, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.1.stopped_at <= cfg.max_iterations);
    }

    #[test]
    fn empty_validation_disables_early_stopping() {
        let (adj, h0, mut task) = two_communities();
        task.val_mask.clear();
        let cfg = TrainConfig { max_iterations: 30, patience: 1, ..TrainConfig::default() };
        let (_, hist) = train(&adj, &h0, &task, &cfg).unwrap();
        assert_eq!(hist.stopped_at, 30);
        assert!(hist.rows.iter().all(|r| r.val_loss.is_none()));
        task.train_mask.clear();
        assert!(train(&adj, &h0, &task, &cfg).is_err());
    }

    #[test]
    fn zero_model_predicts_class_zero() {
        let (adj, h0, _) = two_communities();
        let model = GcnModel::zeros(GcnDims { input: 4, hidden: 3, classes: 5 });
        let nodes: BTreeSet<_> = (0..40).map(NodeId).collect();
        let pred = predict(&model, &adj, &h0, &nodes).unwrap();
        assert!(pred.values().all(|&c| c == 0));
    }
}
