//! Pseudo-labeling, strategy runs, evaluation and the ablation grid.
//!
//! A [`BoostContext`] holds everything that is shared by all strategies of
//! one dataset and configuration: the knowledge graph, the node2vec table of
//! its nodes and the model pseudo-labels. [`BoostContext::run_strategy`]
//! then extends the graph for one strategy, trains one GCN per category on
//! it and scores the test artworks.

mod ablation;
mod config;
mod metrics;
mod pseudo;
mod strategy;

pub use ablation::{ablation_suite, AblationReport, ReportRow};
pub use config::{BaselineConfig, DegreeFilter, PipelineConfig, PseudoSource};
pub use metrics::{evaluate, CategoryMetrics, Metrics, Warning};
pub use pseudo::{baseline_pseudo_labeler, random_pseudo_labels, BaselineOutcome, PseudoLabelAssignment};
pub use strategy::{strategy_grid, Strategy, StrategyTag};

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::dataset::{ArtworkRecord, Dataset};
use crate::embed::{
    assemble_initial_features, node2vec_walks, train_skipgram, EmbeddingTable, FeatureSources,
    InitScheme, SkipGramParams, WalkParams,
};
use crate::error::{Error, Result};
use crate::gcn::{argmax, forward, GcnModel, TaskLabels, TrainConfig, TrainHistory, Trainer};
use crate::graph::{
    build_kg, extend_kg, filter_low_degree, normalized_adjacency, CategoryId, ExtendedKG,
    KnowledgeGraph, Node, NodeId, NormalizedAdjacency, PseudoLabels, Split,
};
use crate::linalg::Matrix;
use crate::seed::derive_seed;

/// Targets of one category on `ekg`. Classes are the category's label nodes
/// in id order; train and validation artworks with an assignment edge into
/// the category form the two masks.
pub fn task_labels(ekg: &ExtendedKG, category: CategoryId) -> Result<(TaskLabels, Vec<NodeId>)> {
    let classes = ekg.label_nodes(category);
    let index: BTreeMap<NodeId, usize> = classes.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let mut targets = BTreeMap::new();
    let mut train_mask = BTreeSet::new();
    let mut val_mask = BTreeSet::new();
    for &(artwork, label) in ekg.base().assignment_edges() {
        let Some(&class) = index.get(&label) else { continue };
        targets.insert(artwork, class);
        match ekg.node(artwork).as_artwork().map(|a| a.split) {
            Some(Split::Train) => train_mask.insert(artwork),
            Some(Split::Validation) => val_mask.insert(artwork),
            _ => false,
        };
    }
    let task = TaskLabels::new(category, classes.len(), targets, train_mask, val_mask)?;
    Ok((task, classes))
}

/// Replace the pseudo-edges of each model's category with the model's
/// current test-node predictions, and recompute the adjacency.
pub fn refresh_pseudo_labels(
    ekg: &ExtendedKG,
    adj: &NormalizedAdjacency,
    h0: &Matrix,
    models: &[(CategoryId, &GcnModel, &[NodeId])],
) -> Result<(ExtendedKG, NormalizedAdjacency)> {
    let mut labels: BTreeMap<NodeId, BTreeMap<CategoryId, NodeId>> = BTreeMap::new();
    let mut categories = BTreeSet::new();
    for &(c, model, classes) in models {
        categories.insert(c);
        let fwd = forward(model, adj, h0)?;
        for &t in ekg.test_nodes() {
            let class = argmax(fwd.probs.row(t.0));
            labels.entry(t).or_default().insert(c, classes[class]);
        }
    }
    let next = ekg.with_pseudo_edges(&categories, &labels)?;
    let adj = normalized_adjacency(&next);
    Ok((next, adj))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskRun {
    pub category: CategoryId,
    /// Label node of each class index.
    pub classes: Vec<NodeId>,
    pub model: GcnModel,
    pub history: TrainHistory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyRun {
    pub strategy: Strategy,
    pub pseudo: PseudoLabelAssignment,
    /// Graph the models were trained on (after filtering and refreshes).
    pub graph: ExtendedKG,
    pub features: Matrix,
    pub tasks: Vec<TaskRun>,
    /// Test-artwork predictions, keyed like pseudo-labels.
    pub predictions: PseudoLabels,
    pub metrics: Metrics,
    pub excluded_values: BTreeSet<String>,
}

/// State shared by every strategy run over one dataset and configuration.
#[derive(Debug, Clone)]
pub struct BoostContext<'a> {
    dataset: &'a Dataset,
    config: PipelineConfig,
    kg: KnowledgeGraph,
    test_artworks: Vec<ArtworkRecord>,
    observed: Vec<Vec<String>>,
    known: Vec<BTreeSet<String>>,
    truth: BTreeMap<(String, CategoryId), String>,
    base_embedding: Option<EmbeddingTable>,
    model_labels: PseudoLabels,
    filter: Option<(CategoryId, usize)>,
    warnings: Vec<Warning>,
}

impl<'a> BoostContext<'a> {
    pub fn prepare(dataset: &'a Dataset, config: &PipelineConfig) -> Result<Self> {
        config.validate()?;
        let graph_artworks: Vec<ArtworkRecord> = dataset.graph_artworks().cloned().collect();
        let kg = build_kg(&dataset.categories, &graph_artworks, &dataset.assignments, &dataset.links)?;
        let observed: Vec<Vec<String>> = (0..dataset.num_categories())
            .map(|c| dataset.observed_values(CategoryId(c)))
            .collect();
        let filter = match &config.filter {
            Some(f) => {
                let c = dataset
                    .category_id(&f.category)
                    .map_err(|_| Error::param("filter", format!("unknown category `{}`", f.category)))?;
                Some((c, f.min_train_degree))
            }
            None => None,
        };
        let mut ctx = Self {
            dataset,
            config: config.clone(),
            kg,
            test_artworks: dataset.test_artworks().cloned().collect(),
            known: observed.iter().map(|v| v.iter().cloned().collect()).collect(),
            observed,
            truth: dataset.truth_map(),
            base_embedding: None,
            model_labels: PseudoLabels::new(),
            filter,
            warnings: Vec::new(),
        };
        if config.init_scheme == InitScheme::N2vPlusRandom {
            let base = extend_kg(&ctx.kg, &[], &BTreeSet::new(), &PseudoLabels::new())?;
            ctx.base_embedding = Some(ctx.embed(&base)?);
        }
        ctx.model_labels = ctx.model_pseudo_labels()?;
        Ok(ctx)
    }

    pub fn dataset(&self) -> &Dataset {
        self.dataset
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn knowledge_graph(&self) -> &KnowledgeGraph {
        &self.kg
    }

    pub fn model_labels(&self) -> &PseudoLabels {
        &self.model_labels
    }

    pub fn warnings(&self) -> &[Warning] {
        &self.warnings
    }

    fn num_categories(&self) -> usize {
        self.dataset.num_categories()
    }

    fn embed(&self, graph: &ExtendedKG) -> Result<EmbeddingTable> {
        let seed = self.config.seed;
        let walk = WalkParams {
            seed: derive_seed(seed, "n2v.walks"),
            ..self.config.walk
        };
        let sg = SkipGramParams {
            seed: derive_seed(seed, "n2v.skipgram"),
            ..self.config.skipgram
        };
        train_skipgram(&node2vec_walks(graph, &walk)?, &sg)
    }

    fn test_keys(&self) -> Vec<String> {
        self.test_artworks.iter().map(|a| a.key.clone()).collect()
    }

    fn random_labels(&self, tag: &str) -> Result<PseudoLabels> {
        let cats: Vec<(CategoryId, Vec<String>)> = self
            .observed
            .iter()
            .enumerate()
            .map(|(c, v)| (CategoryId(c), v.clone()))
            .collect();
        random_pseudo_labels(&self.test_keys(), &cats, derive_seed(self.config.seed, tag))
    }

    fn model_pseudo_labels(&mut self) -> Result<PseudoLabels> {
        match self.config.pseudo_source {
            PseudoSource::Random => self.random_labels("pseudo.model"),
            PseudoSource::Ingested => {
                let rows = self
                    .dataset
                    .pseudo
                    .as_ref()
                    .ok_or(Error::EmptyInput("ingested pseudo-labels"))?;
                let mut out = PseudoLabels::new();
                for a in rows {
                    out.entry(a.artwork.clone()).or_default().insert(a.category, a.value.clone());
                }
                Ok(out)
            }
            PseudoSource::BaselineModel => {
                let mut out = PseudoLabels::new();
                for c in 0..self.num_categories() {
                    self.baseline_for(CategoryId(c), &mut out)?;
                }
                Ok(out)
            }
        }
    }

    fn baseline_for(&mut self, c: CategoryId, out: &mut PseudoLabels) -> Result<()> {
        let ds = self.dataset;
        let values = &self.observed[c.0];
        if values.is_empty() {
            return Err(Error::EmptyInput("training labels of a category"));
        }
        let value_index: BTreeMap<&str, usize> =
            values.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
        let assigned: BTreeMap<&str, &str> = ds
            .assignments
            .iter()
            .filter(|a| a.category == c)
            .map(|a| (a.artwork.as_str(), a.value.as_str()))
            .collect();
        let features = |a: &ArtworkRecord| ds.feature_row(a).ok_or_else(|| Error::MissingFeatures(a.key.clone()));
        let mut train_rows = Vec::new();
        let mut train_y = Vec::new();
        for a in ds.artworks.iter().filter(|a| a.split == Split::Train) {
            if let Some(v) = assigned.get(a.key.as_str()) {
                train_rows.push(features(a)?.to_vec());
                train_y.push(value_index[v]);
            }
        }
        let test_rows = self
            .test_artworks
            .iter()
            .map(|a| features(a).map(<[f64]>::to_vec))
            .collect::<Result<Vec<_>>>()?;
        let width = ds.features.cols();
        let train_x = Matrix::from_vec(train_rows.len(), width, train_rows.concat());
        let test_x = Matrix::from_vec(test_rows.len(), width, test_rows.concat());
        let cfg = BaselineConfig {
            seed: derive_seed(self.config.seed, &format!("baseline/{}", ds.category_name(c))),
            ..self.config.baseline
        };
        let outcome = baseline_pseudo_labeler(&train_x, &train_y, values.len(), &test_x, &cfg)?;
        if !outcome.absent_classes.is_empty() {
            self.warnings.push(Warning::AbsentClasses {
                category: c,
                values: outcome.absent_classes.iter().map(|&k| values[k].clone()).collect(),
            });
        }
        for (a, &p) in self.test_artworks.iter().zip(&outcome.predictions) {
            out.entry(a.key.clone()).or_default().insert(c, values[p].clone());
        }
        Ok(())
    }

    /// The configured ablation grid with category names resolved.
    pub fn strategy_grid(&self) -> Result<Vec<Strategy>> {
        let resolve = |key: &str, subsets: &Option<Vec<Vec<String>>>| -> Result<Option<Vec<Vec<CategoryId>>>> {
            subsets
                .as_ref()
                .map(|s| {
                    s.iter()
                        .map(|names| {
                            names
                                .iter()
                                .map(|n| {
                                    self.dataset
                                        .category_id(n)
                                        .map_err(|_| Error::param(key, format!("unknown category `{n}`")))
                                })
                                .collect()
                        })
                        .collect()
                })
                .transpose()
        };
        let pairs = resolve("ablate.pairs", &self.config.pairs)?;
        let triples = resolve("ablate.triples", &self.config.triples)?;
        strategy_grid(self.num_categories(), pairs.as_deref(), triples.as_deref())
    }

    /// Pseudo-labels a strategy adds to the graph.
    pub fn pseudo_labels(&self, strategy: &Strategy) -> Result<PseudoLabelAssignment> {
        if strategy.uses_random_labels() {
            let labels = self.random_labels("pseudo.random")?;
            return Ok(PseudoLabelAssignment::restrict(strategy, &labels, PseudoSource::Random));
        }
        Ok(PseudoLabelAssignment::restrict(strategy, &self.model_labels, self.config.pseudo_source))
    }

    fn initial_features(&self, ekg: &ExtendedKG) -> Result<Matrix> {
        let owned;
        let table = match self.config.init_scheme {
            InitScheme::N2vPlusRandom => self.base_embedding.as_ref(),
            InitScheme::VisualPlusN2v => {
                owned = self.embed(ekg)?;
                Some(&owned)
            }
        };
        let sources = FeatureSources {
            node2vec: table,
            visual: Some(&self.dataset.features),
            projection: self.config.projection,
        };
        let seed = self
            .config
            .init_seed
            .unwrap_or_else(|| derive_seed(self.config.seed, "init"));
        let h0 = assemble_initial_features(ekg, self.config.init_scheme, &sources, self.config.skipgram.dim, seed)?;
        Ok(h0.into_matrix())
    }

    fn gcn_config(&self, c: CategoryId) -> TrainConfig {
        TrainConfig {
            seed: derive_seed(self.config.seed, &format!("gcn/{}", self.dataset.category_name(c))),
            ..self.config.gcn
        }
    }

    /// Build the strategy's graph, train one model per category and score
    /// the test artworks.
    pub fn run_strategy(&self, strategy: &Strategy) -> Result<StrategyRun> {
        let pseudo = self.pseudo_labels(strategy)?;
        let used: BTreeSet<CategoryId> = strategy.categories().iter().copied().collect();
        let full = extend_kg(&self.kg, &self.test_artworks, &used, &pseudo.per_node)?;
        let full_h0 = self.initial_features(&full)?;

        let mut excluded = BTreeSet::new();
        let mut excluded_values = BTreeSet::new();
        let (graph, h0) = match self.filter {
            Some((c, min)) => {
                let out = filter_low_degree(&full, c, min)?;
                let mut h0 = Matrix::zeros(out.kept.len(), full_h0.cols());
                for (i, old) in out.kept.iter().enumerate() {
                    h0.row_mut(i).copy_from_slice(full_h0.row(old.0));
                }
                for a in &self.test_artworks {
                    let key = (a.key.clone(), c);
                    if self.truth.get(&key).is_some_and(|v| out.excluded_values.contains(v)) {
                        excluded.insert(key);
                    }
                }
                excluded_values = out.excluded_values;
                (out.graph, h0)
            }
            None => (full, full_h0),
        };

        let mut tasks = Vec::with_capacity(self.num_categories());
        for c in 0..self.num_categories() {
            let c = CategoryId(c);
            let (task, classes) = task_labels(&graph, c)?;
            if task.train_mask.is_empty() {
                return Err(Error::EmptyInput("train mask of a category"));
            }
            tasks.push((Trainer::new(h0.cols(), &task, self.gcn_config(c))?, classes, c));
        }

        let mut graph = graph;
        let mut adj = normalized_adjacency(&graph);
        let mut propagated = adj.multiply(&h0);
        match self.config.refresh_every {
            None => {
                for (trainer, _, _) in &mut tasks {
                    while !trainer.is_done() {
                        trainer.step(&adj, &propagated)?;
                    }
                }
            }
            Some(k) => {
                let mut iteration = 0;
                while tasks.iter().any(|(t, _, _)| !t.is_done()) {
                    for (trainer, _, _) in &mut tasks {
                        trainer.step(&adj, &propagated)?;
                    }
                    iteration += 1;
                    if iteration % k == 0 && tasks.iter().any(|(t, _, _)| !t.is_done()) {
                        let models: Vec<(CategoryId, &GcnModel, &[NodeId])> = tasks
                            .iter()
                            .filter(|(_, _, c)| used.contains(c))
                            .map(|(t, classes, c)| (*c, t.current(), classes.as_slice()))
                            .collect();
                        let (g, a) = refresh_pseudo_labels(&graph, &adj, &h0, &models)?;
                        graph = g;
                        adj = a;
                        propagated = adj.multiply(&h0);
                    }
                }
            }
        }

        let mut predictions = PseudoLabels::new();
        let mut runs = Vec::with_capacity(tasks.len());
        for (trainer, classes, c) in tasks {
            let (model, history) = trainer.finish();
            let fwd = forward(&model, &adj, &h0)?;
            for &t in graph.test_nodes() {
                let label = classes[argmax(fwd.probs.row(t.0))];
                let (Node::Artwork(a), Node::Label(l)) = (graph.node(t), graph.node(label)) else {
                    unreachable!("test nodes are artworks and classes are labels");
                };
                predictions.entry(a.key.clone()).or_default().insert(c, l.value.clone());
            }
            runs.push(TaskRun {
                category: c,
                classes,
                model,
                history,
            });
        }
        let metrics = evaluate(&predictions, &self.truth, &excluded, &self.known, &self.dataset.categories)?;
        Ok(StrategyRun {
            strategy: strategy.clone(),
            pseudo,
            graph,
            features: h0,
            tasks: runs,
            predictions,
            metrics,
            excluded_values,
        })
    }
}
