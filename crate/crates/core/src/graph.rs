//! Knowledge graph over artworks and attribute labels.
//!
//! A [`KnowledgeGraph`] holds the training and validation artworks, the label
//! nodes they are assigned to, and label-to-label links. [`extend_kg`] adds
//! the test artworks and one pseudo-label edge per test artwork and used
//! category, producing an [`ExtendedKG`]. The graph is simple and
//! undirected; node ids are dense and stable for the lifetime of a graph.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::dataset::{ArtworkRecord, Assignment, LabelKey, LabelLink};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CategoryId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl core::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "validation" | "val" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(Error::param("split", alloc::format!("unknown split `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArtworkNode {
    pub id: NodeId,
    pub key: String,
    pub split: Split,
    pub feature_ref: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelNode {
    pub id: NodeId,
    pub category: CategoryId,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Artwork(ArtworkNode),
    Label(LabelNode),
}

impl Node {
    pub fn id(&self) -> NodeId {
        match self {
            Node::Artwork(a) => a.id,
            Node::Label(l) => l.id,
        }
    }

    pub fn as_artwork(&self) -> Option<&ArtworkNode> {
        match self {
            Node::Artwork(a) => Some(a),
            Node::Label(_) => None,
        }
    }

    pub fn as_label(&self) -> Option<&LabelNode> {
        match self {
            Node::Label(l) => Some(l),
            Node::Artwork(_) => None,
        }
    }

    fn with_id(&self, id: NodeId) -> Node {
        match self {
            Node::Artwork(a) => Node::Artwork(ArtworkNode { id, ..a.clone() }),
            Node::Label(l) => Node::Label(LabelNode { id, ..l.clone() }),
        }
    }
}

fn undirected(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnowledgeGraph {
    categories: Vec<String>,
    nodes: Vec<Node>,
    artwork_index: BTreeMap<String, NodeId>,
    label_index: BTreeMap<LabelKey, NodeId>,
    /// `(artwork, label)` pairs.
    assignment_edges: BTreeSet<(NodeId, NodeId)>,
    /// `(lo, hi)` label pairs.
    label_link_edges: BTreeSet<(NodeId, NodeId)>,
}

impl KnowledgeGraph {
    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn edge_count(&self) -> usize {
        self.assignment_edges.len() + self.label_link_edges.len()
    }

    pub fn assignment_edges(&self) -> &BTreeSet<(NodeId, NodeId)> {
        &self.assignment_edges
    }

    pub fn label_link_edges(&self) -> &BTreeSet<(NodeId, NodeId)> {
        &self.label_link_edges
    }

    /// All edges as normalized `(lo, hi)` pairs, sorted.
    pub fn edges(&self) -> BTreeSet<(NodeId, NodeId)> {
        self.assignment_edges
            .iter()
            .map(|&(a, b)| undirected(a, b))
            .chain(self.label_link_edges.iter().copied())
            .collect()
    }

    pub fn artwork_id(&self, key: &str) -> Option<NodeId> {
        self.artwork_index.get(key).copied()
    }

    pub fn label_id(&self, category: CategoryId, value: &str) -> Option<NodeId> {
        self.label_index
            .get(&LabelKey::new(category, value))
            .copied()
    }

    fn category_check(&self, category: CategoryId) -> Result<()> {
        if category.0 < self.categories.len() {
            Ok(())
        } else {
            Err(Error::UnknownCategory(alloc::format!("#{}", category.0)))
        }
    }

    fn add_label(&mut self, key: LabelKey) -> NodeId {
        if let Some(&id) = self.label_index.get(&key) {
            return id;
        }
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node::Label(LabelNode {
            id,
            category: key.category,
            value: key.value.clone(),
        }));
        self.label_index.insert(key, id);
        id
    }
}

/// Build the knowledge graph from training/validation artworks, their label
/// assignments and label-to-label links.
///
/// Artwork nodes come first in input order, label nodes follow in order of
/// first mention (assignments, then links). A link may introduce a new label
/// node as long as its other endpoint is already known; a link between two
/// unknown labels is rejected.
pub fn build_kg(
    categories: &[String],
    artworks: &[ArtworkRecord],
    assignments: &[Assignment],
    links: &[LabelLink],
) -> Result<KnowledgeGraph> {
    let mut kg = KnowledgeGraph {
        categories: categories.to_vec(),
        nodes: Vec::new(),
        artwork_index: BTreeMap::new(),
        label_index: BTreeMap::new(),
        assignment_edges: BTreeSet::new(),
        label_link_edges: BTreeSet::new(),
    };
    for a in artworks {
        if a.split == Split::Test {
            return Err(Error::WrongSplit(a.key.clone(), "test", "train or validation"));
        }
        if kg.artwork_index.contains_key(&a.key) {
            return Err(Error::DuplicateArtwork(a.key.clone()));
        }
        let id = NodeId(kg.nodes.len());
        kg.nodes.push(Node::Artwork(ArtworkNode {
            id,
            key: a.key.clone(),
            split: a.split,
            feature_ref: a.feature_ref,
        }));
        kg.artwork_index.insert(a.key.clone(), id);
    }

    let mut seen: BTreeMap<(NodeId, CategoryId), &str> = BTreeMap::new();
    for asg in assignments {
        kg.category_check(asg.category)?;
        let artwork = kg
            .artwork_id(&asg.artwork)
            .ok_or_else(|| Error::UnknownArtwork(asg.artwork.clone()))?;
        if let Some(prev) = seen.insert((artwork, asg.category), &asg.value) {
            if prev != asg.value {
                return Err(Error::ConflictingAssignment {
                    artwork: asg.artwork.clone(),
                    category: categories[asg.category.0].clone(),
                    first: prev.into(),
                    second: asg.value.clone(),
                });
            }
            continue;
        }
        let label = kg.add_label(LabelKey::new(asg.category, asg.value.clone()));
        kg.assignment_edges.insert((artwork, label));
    }

    for link in links {
        kg.category_check(link.from.category)?;
        kg.category_check(link.to.category)?;
        let known_from = kg.label_index.contains_key(&link.from);
        let known_to = kg.label_index.contains_key(&link.to);
        if !known_from && !known_to {
            return Err(Error::UnknownLabel {
                category: categories[link.from.category.0].clone(),
                value: link.from.value.clone(),
            });
        }
        let a = kg.add_label(link.from.clone());
        let b = kg.add_label(link.to.clone());
        if a != b {
            kg.label_link_edges.insert(undirected(a, b));
        }
    }
    Ok(kg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PseudoEdge {
    pub artwork: NodeId,
    pub label: NodeId,
    pub category: CategoryId,
}

/// Test-artwork pseudo-labels keyed by artwork key and category.
pub type PseudoLabels = BTreeMap<String, BTreeMap<CategoryId, String>>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtendedKG {
    base: KnowledgeGraph,
    /// Test artworks followed by label nodes first named by a pseudo-label.
    extra_nodes: Vec<Node>,
    test_nodes: Vec<NodeId>,
    label_index: BTreeMap<LabelKey, NodeId>,
    pseudo_edges: BTreeSet<PseudoEdge>,
}

impl ExtendedKG {
    pub fn base(&self) -> &KnowledgeGraph {
        &self.base
    }

    pub fn categories(&self) -> &[String] {
        self.base.categories()
    }

    pub fn node_count(&self) -> usize {
        self.base.node_count() + self.extra_nodes.len()
    }

    pub fn node(&self, id: NodeId) -> &Node {
        let n = self.base.node_count();
        if id.0 < n {
            self.base.node(id)
        } else {
            &self.extra_nodes[id.0 - n]
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.base.nodes().iter().chain(self.extra_nodes.iter())
    }

    pub fn test_nodes(&self) -> &[NodeId] {
        &self.test_nodes
    }

    pub fn pseudo_edges(&self) -> &BTreeSet<PseudoEdge> {
        &self.pseudo_edges
    }

    pub fn edge_count(&self) -> usize {
        self.base.edge_count() + self.pseudo_edges.len()
    }

    /// Every edge of ℰ′ as a normalized `(lo, hi)` pair, sorted.
    pub fn edges(&self) -> BTreeSet<(NodeId, NodeId)> {
        let mut all = self.base.edges();
        all.extend(
            self.pseudo_edges
                .iter()
                .map(|e| undirected(e.artwork, e.label)),
        );
        all
    }

    pub fn label_id(&self, category: CategoryId, value: &str) -> Option<NodeId> {
        self.label_index
            .get(&LabelKey::new(category, value))
            .copied()
    }

    pub fn artwork_id(&self, key: &str) -> Option<NodeId> {
        self.base.artwork_id(key).or_else(|| {
            self.test_nodes
                .iter()
                .copied()
                .find(|&t| self.node(t).as_artwork().is_some_and(|a| a.key == key))
        })
    }

    /// Label nodes of one category, in id order.
    pub fn label_nodes(&self, category: CategoryId) -> Vec<NodeId> {
        self.nodes()
            .filter_map(Node::as_label)
            .filter(|l| l.category == category)
            .map(|l| l.id)
            .collect()
    }

    /// Category set covered by the pseudo-edges of the first test node.
    pub fn pseudo_categories(&self) -> BTreeSet<CategoryId> {
        let Some(&first) = self.test_nodes.first() else {
            return BTreeSet::new();
        };
        self.pseudo_edges
            .iter()
            .filter(|e| e.artwork == first)
            .map(|e| e.category)
            .collect()
    }

    pub fn neighbor_lists(&self) -> NeighborLists {
        NeighborLists::from_edges(self.node_count(), &self.edges())
    }

    /// Replace the pseudo-edges of the given categories. `labels` maps each
    /// test node to its new label node for every category in `categories`.
    pub fn with_pseudo_edges(
        &self,
        categories: &BTreeSet<CategoryId>,
        labels: &BTreeMap<NodeId, BTreeMap<CategoryId, NodeId>>,
    ) -> Result<ExtendedKG> {
        let mut out = self.clone();
        out.pseudo_edges.retain(|e| !categories.contains(&e.category));
        for &t in &self.test_nodes {
            for &c in categories {
                let label = labels
                    .get(&t)
                    .and_then(|m| m.get(&c))
                    .copied()
                    .ok_or_else(|| Error::MissingPseudoLabel {
                        artwork: self.artwork_key(t).into(),
                        category: self.categories()[c.0].clone(),
                    })?;
                match self.node(label) {
                    Node::Label(l) if l.category == c => {}
                    _ => {
                        return Err(Error::DimensionMismatch(alloc::format!(
                            "node {label} is not a label of category #{}",
                            c.0
                        )))
                    }
                }
                out.pseudo_edges.insert(PseudoEdge {
                    artwork: t,
                    label,
                    category: c,
                });
            }
        }
        Ok(out)
    }

    fn artwork_key(&self, id: NodeId) -> &str {
        self.node(id).as_artwork().map_or("", |a| a.key.as_str())
    }
}

/// Extend the knowledge graph with test artworks and their pseudo-label edges.
///
/// `used` is the strategy's category set; every test artwork must carry a
/// pseudo-label for exactly these categories. Pseudo-label values without a
/// label node create one.
pub fn extend_kg(
    kg: &KnowledgeGraph,
    test_artworks: &[ArtworkRecord],
    used: &BTreeSet<CategoryId>,
    pseudo: &PseudoLabels,
) -> Result<ExtendedKG> {
    for &c in used {
        kg.category_check(c)?;
    }
    let mut ekg = ExtendedKG {
        base: kg.clone(),
        extra_nodes: Vec::new(),
        test_nodes: Vec::new(),
        label_index: kg.label_index.clone(),
        pseudo_edges: BTreeSet::new(),
    };
    let mut test_keys = BTreeSet::new();
    for a in test_artworks {
        if kg.artwork_index.contains_key(&a.key) || !test_keys.insert(a.key.as_str()) {
            return Err(Error::DuplicateArtwork(a.key.clone()));
        }
        let id = NodeId(ekg.node_count());
        ekg.extra_nodes.push(Node::Artwork(ArtworkNode {
            id,
            key: a.key.clone(),
            split: Split::Test,
            feature_ref: a.feature_ref,
        }));
        ekg.test_nodes.push(id);
    }
    for (i, a) in test_artworks.iter().enumerate() {
        let artwork = ekg.test_nodes[i];
        let empty = BTreeMap::new();
        let labels = pseudo.get(&a.key).unwrap_or(&empty);
        for &c in labels.keys() {
            if !used.contains(&c) {
                return Err(Error::UnexpectedPseudoLabel {
                    artwork: a.key.clone(),
                    category: kg.categories.get(c.0).cloned().unwrap_or_default(),
                });
            }
        }
        for &c in used {
            let value = labels.get(&c).ok_or_else(|| Error::MissingPseudoLabel {
                artwork: a.key.clone(),
                category: kg.categories[c.0].clone(),
            })?;
            let key = LabelKey::new(c, value.clone());
            let label = match ekg.label_index.get(&key) {
                Some(&id) => id,
                None => {
                    let id = NodeId(ekg.node_count());
                    ekg.extra_nodes.push(Node::Label(LabelNode {
                        id,
                        category: c,
                        value: value.clone(),
                    }));
                    ekg.label_index.insert(key, id);
                    id
                }
            };
            ekg.pseudo_edges.insert(PseudoEdge {
                artwork,
                label,
                category: c,
            });
        }
    }
    Ok(ekg)
}

/// Compressed sorted neighbor lists of an undirected graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborLists {
    offsets: Vec<usize>,
    targets: Vec<usize>,
}

impl NeighborLists {
    pub fn from_edges(n: usize, edges: &BTreeSet<(NodeId, NodeId)>) -> Self {
        let mut lists: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a != b {
                lists[a.0].push(b.0);
                lists[b.0].push(a.0);
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::with_capacity(2 * edges.len());
        offsets.push(0);
        for mut l in lists {
            l.sort_unstable();
            l.dedup();
            targets.extend(l);
            offsets.push(targets.len());
        }
        Self { offsets, targets }
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.neighbors(a).binary_search(&b).is_ok()
    }
}

/// `D̃^{-1/2} (A + I) D̃^{-1/2}` in CSR form, with `d̃_i = deg(i) + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency {
    dim: usize,
    offsets: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
}

impl NormalizedAdjacency {
    pub fn from_neighbor_lists(lists: &NeighborLists) -> Self {
        let n = lists.node_count();
        let weight = |i: usize, j: usize| {
            let di = (lists.degree(i) + 1) as f64;
            let dj = (lists.degree(j) + 1) as f64;
            1.0 / libm::sqrt(di * dj)
        };
        let mut offsets = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut values = Vec::new();
        offsets.push(0);
        for i in 0..n {
            let nbrs = lists.neighbors(i);
            let split = nbrs.partition_point(|&j| j < i);
            for &j in &nbrs[..split] {
                cols.push(j);
                values.push(weight(i, j));
            }
            cols.push(i);
            values.push(1.0 / (lists.degree(i) + 1) as f64);
            for &j in &nbrs[split..] {
                cols.push(j);
                values.push(weight(i, j));
            }
            offsets.push(cols.len());
        }
        Self {
            dim: n,
            offsets,
            cols,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let row = &self.cols[self.offsets[i]..self.offsets[i + 1]];
        match row.binary_search(&j) {
            Ok(k) => self.values[self.offsets[i] + k],
            Err(_) => 0.0,
        }
    }

    /// Stored `(row, col, value)` triples in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |i| {
            (self.offsets[i]..self.offsets[i + 1]).map(move |k| (i, self.cols[k], self.values[k]))
        })
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.offsets[i]..self.offsets[i + 1];
        (&self.cols[r.clone()], &self.values[r])
    }

    /// `Â · x`.
    pub fn multiply(&self, x: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(self.dim, x.cols());
        self.multiply_into(x, &mut out);
        out
    }

    pub fn multiply_into(&self, x: &Matrix, out: &mut Matrix) {
        assert_eq!(x.rows(), self.dim, "adjacency/feature row mismatch");
        for i in 0..self.dim {
            let (cols, vals) = self.row(i);
            let dst = out.row_mut(i);
            dst.fill(0.0);
            for (&j, &a) in cols.iter().zip(vals) {
                for (d, &v) in dst.iter_mut().zip(x.row(j)) {
                    *d += a * v;
                }
            }
        }
    }

    pub fn to_dense(&self) -> Matrix {
        let mut m = Matrix::zeros(self.dim, self.dim);
        for (i, j, v) in self.iter() {
            m.set(i, j, v);
        }
        m
    }
}

pub fn normalized_adjacency(ekg: &ExtendedKG) -> NormalizedAdjacency {
    NormalizedAdjacency::from_neighbor_lists(&ekg.neighbor_lists())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegreeSources {
    TrainOnly,
    TrainPlusPseudo,
}

impl DegreeSources {
    pub fn as_str(self) -> &'static str {
        match self {
            DegreeSources::TrainOnly => "train_only",
            DegreeSources::TrainPlusPseudo => "train_plus_pseudo",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeDistribution {
    pub category: CategoryId,
    pub sources: DegreeSources,
    /// degree → number of label nodes with that degree.
    pub buckets: BTreeMap<usize, usize>,
}

/// Histogram of label-node degrees for one category, counting assignment
/// edges and optionally pseudo-edges (label links are not counted).
pub fn degree_histogram(
    ekg: &ExtendedKG,
    category: CategoryId,
    sources: DegreeSources,
) -> Result<DegreeDistribution> {
    ekg.base.category_check(category)?;
    let mut degree: BTreeMap<NodeId, usize> = ekg
        .label_nodes(category)
        .into_iter()
        .map(|id| (id, 0))
        .collect();
    for (_, label) in ekg.base.assignment_edges() {
        if let Some(d) = degree.get_mut(label) {
            *d += 1;
        }
    }
    if sources == DegreeSources::TrainPlusPseudo {
        for e in ekg.pseudo_edges() {
            if let Some(d) = degree.get_mut(&e.label) {
                *d += 1;
            }
        }
    }
    let mut buckets = BTreeMap::new();
    for d in degree.into_values() {
        *buckets.entry(d).or_insert(0) += 1;
    }
    Ok(DegreeDistribution {
        category,
        sources,
        buckets,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterOutcome {
    pub graph: ExtendedKG,
    pub excluded_values: BTreeSet<String>,
    /// Train/validation artworks that lost their ground-truth label node.
    pub excluded_artworks: BTreeSet<String>,
    /// Id in the input graph of every node of `graph`, in new id order.
    pub kept: Vec<NodeId>,
}

/// Remove label nodes of `category` with fewer than `min_train_degree`
/// incident assignment edges from training artworks, together with all of
/// their edges. Remaining node ids are compacted in order.
pub fn filter_low_degree(
    ekg: &ExtendedKG,
    category: CategoryId,
    min_train_degree: usize,
) -> Result<FilterOutcome> {
    ekg.base.category_check(category)?;
    let mut train_degree: BTreeMap<NodeId, usize> = ekg
        .label_nodes(category)
        .into_iter()
        .map(|id| (id, 0))
        .collect();
    for (artwork, label) in ekg.base.assignment_edges() {
        let is_train = ekg
            .node(*artwork)
            .as_artwork()
            .is_some_and(|a| a.split == Split::Train);
        if is_train {
            if let Some(d) = train_degree.get_mut(label) {
                *d += 1;
            }
        }
    }
    let removed: BTreeSet<NodeId> = train_degree
        .into_iter()
        .filter(|&(_, d)| d < min_train_degree)
        .map(|(id, _)| id)
        .collect();
    let excluded_values = removed
        .iter()
        .filter_map(|&id| ekg.node(id).as_label().map(|l| l.value.clone()))
        .collect();
    let excluded_artworks = ekg
        .base
        .assignment_edges()
        .iter()
        .filter(|(_, l)| removed.contains(l))
        .filter_map(|(a, _)| ekg.node(*a).as_artwork().map(|a| a.key.clone()))
        .collect();
    let kept = (0..ekg.node_count())
        .map(NodeId)
        .filter(|id| !removed.contains(id))
        .collect();
    let graph = if removed.is_empty() {
        ekg.clone()
    } else {
        remove_nodes(ekg, &removed)
    };
    Ok(FilterOutcome {
        graph,
        excluded_values,
        excluded_artworks,
        kept,
    })
}

fn remove_nodes(ekg: &ExtendedKG, removed: &BTreeSet<NodeId>) -> ExtendedKG {
    let mut remap: Vec<Option<NodeId>> = Vec::with_capacity(ekg.node_count());
    let mut next = 0;
    for i in 0..ekg.node_count() {
        if removed.contains(&NodeId(i)) {
            remap.push(None);
        } else {
            remap.push(Some(NodeId(next)));
            next += 1;
        }
    }
    let map = |id: NodeId| remap[id.0];
    let keep_nodes = |nodes: &[Node]| -> Vec<Node> {
        nodes
            .iter()
            .filter_map(|n| map(n.id()).map(|id| n.with_id(id)))
            .collect()
    };
    let base_nodes = keep_nodes(ekg.base.nodes());
    let extra_nodes = keep_nodes(&ekg.extra_nodes);
    let index_of = |nodes: &[Node]| -> (BTreeMap<String, NodeId>, BTreeMap<LabelKey, NodeId>) {
        let mut artworks = BTreeMap::new();
        let mut labels = BTreeMap::new();
        for n in nodes {
            match n {
                Node::Artwork(a) => {
                    artworks.insert(a.key.clone(), a.id);
                }
                Node::Label(l) => {
                    labels.insert(LabelKey::new(l.category, l.value.clone()), l.id);
                }
            }
        }
        (artworks, labels)
    };
    let (artwork_index, base_labels) = index_of(&base_nodes);
    let (_, extra_labels) = index_of(&extra_nodes);
    let mut label_index = base_labels.clone();
    label_index.extend(extra_labels);
    let remap_pairs = |set: &BTreeSet<(NodeId, NodeId)>| -> BTreeSet<(NodeId, NodeId)> {
        set.iter()
            .filter_map(|&(a, b)| Some((map(a)?, map(b)?)))
            .collect()
    };
    let base = KnowledgeGraph {
        categories: ekg.base.categories.clone(),
        nodes: base_nodes,
        artwork_index,
        label_index: base_labels,
        assignment_edges: remap_pairs(&ekg.base.assignment_edges),
        label_link_edges: remap_pairs(&ekg.base.label_link_edges),
    };
    ExtendedKG {
        base,
        extra_nodes,
        test_nodes: ekg.test_nodes.iter().filter_map(|&t| map(t)).collect(),
        label_index,
        pseudo_edges: ekg
            .pseudo_edges
            .iter()
            .filter_map(|e| {
                Some(PseudoEdge {
                    artwork: map(e.artwork)?,
                    label: map(e.label)?,
                    category: e.category,
                })
            })
            .collect(),
    }
}

impl fmt::Display for KnowledgeGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "KnowledgeGraph({} nodes, {} assignment edges, {} label links)",
            self.nodes.len(),
            self.assignment_edges.len(),
            self.label_link_edges.len()
        )
    }
}

/// Convenience for tests and small fixtures: artworks from `(key, split)`.
pub fn artworks_from(keys: &[(&str, Split)]) -> Vec<ArtworkRecord> {
    keys.iter()
        .map(|&(k, split)| ArtworkRecord {
            key: k.to_string(),
            split,
            feature_ref: None,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn cats(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    const TYPE: CategoryId = CategoryId(0);
    const SCHOOL: CategoryId = CategoryId(1);
    const AUTHOR: CategoryId = CategoryId(3);

    fn semart() -> Vec<String> {
        cats(&["Type", "School", "TimeFrame", "Author"])
    }

    #[test]
    fn shared_label_node() {
        let arts = artworks_from(&[("a1", Split::Train), ("a2", Split::Train)]);
        let asg = [
            Assignment::new("a1", TYPE, "portrait"),
            Assignment::new("a2", TYPE, "portrait"),
        ];
        let kg = build_kg(&semart(), &arts, &asg, &[]).unwrap();
        assert_eq!(kg.node_count(), 3);
        assert_eq!(kg.edge_count(), 2);
    }

    #[test]
    fn author_school_link_creates_school_node() {
        let arts = artworks_from(&[("a1", Split::Train)]);
        let asg = [Assignment::new("a1", AUTHOR, "van Gogh")];
        let links = [LabelLink {
            from: LabelKey::new(AUTHOR, "van Gogh"),
            to: LabelKey::new(SCHOOL, "Dutch"),
        }];
        let kg = build_kg(&semart(), &arts, &asg, &links).unwrap();
        assert_eq!(kg.node_count(), 3);
        assert_eq!(kg.edge_count(), 2);
        assert_eq!(kg.label_link_edges().len(), 1);
    }

    #[test]
    fn vacuous_graph() {
        let arts = artworks_from(&[("a1", Split::Train), ("a2", Split::Validation)]);
        let kg = build_kg(&semart(), &arts, &[], &[]).unwrap();
        assert_eq!(kg.node_count(), 2);
        assert_eq!(kg.edge_count(), 0);
    }

    #[test]
    fn conflicting_assignment_names_artwork() {
        let arts = artworks_from(&[("a1", Split::Train)]);
        let asg = [
            Assignment::new("a1", TYPE, "portrait"),
            Assignment::new("a1", TYPE, "portrait"),
            Assignment::new("a1", TYPE, "landscape"),
        ];
        match build_kg(&semart(), &arts, &asg, &[]) {
            Err(Error::ConflictingAssignment { artwork, .. }) => assert_eq!(artwork, "a1"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn link_between_unknown_labels_rejected() {
        let arts = artworks_from(&[("a1", Split::Train)]);
        let links = [LabelLink {
            from: LabelKey::new(AUTHOR, "nobody"),
            to: LabelKey::new(SCHOOL, "nowhere"),
        }];
        assert!(matches!(
            build_kg(&semart(), &arts, &[], &links),
            Err(Error::UnknownLabel { .. })
        ));
    }

    #[test]
    fn undeclared_and_test_artworks_rejected() {
        let arts = artworks_from(&[("a1", Split::Train)]);
        let asg = [Assignment::new("ghost", TYPE, "portrait")];
        assert_eq!(
            build_kg(&semart(), &arts, &asg, &[]),
            Err(Error::UnknownArtwork("ghost".into()))
        );
        let test = artworks_from(&[("t1", Split::Test)]);
        assert!(matches!(
            build_kg(&semart(), &test, &[], &[]),
            Err(Error::WrongSplit(..))
        ));
    }

    fn ten_edge_kg() -> KnowledgeGraph {
        let arts = artworks_from(&[
            ("a", Split::Train),
            ("b", Split::Train),
            ("c", Split::Train),
            ("d", Split::Validation),
            ("e", Split::Train),
        ]);
        let mut asg = Vec::new();
        for (i, k) in ["a", "b", "c", "d", "e"].iter().enumerate() {
            asg.push(Assignment::new(*k, TYPE, alloc::format!("t{}", i % 2)));
            asg.push(Assignment::new(*k, AUTHOR, alloc::format!("p{}", i % 3)));
        }
        build_kg(&semart(), &arts, &asg, &[]).unwrap()
    }

    fn pseudo_for(keys: &[&str], used: &[CategoryId]) -> PseudoLabels {
        keys.iter()
            .map(|k| {
                (
                    k.to_string(),
                    used.iter()
                        .map(|&c| (c, alloc::format!("guess{}", c.0)))
                        .collect(),
                )
            })
            .collect()
    }

    #[test]
    fn extension_counting_identity() {
        let kg = ten_edge_kg();
        assert_eq!(kg.edge_count(), 10);
        let keys = ["t1", "t2", "t3", "t4", "t5"];
        let test = artworks_from(&keys.map(|k| (k, Split::Test)));
        let all: BTreeSet<_> = (0..4).map(CategoryId).collect();
        let ekg = extend_kg(&kg, &test, &all, &pseudo_for(&keys, &[CategoryId(0), CategoryId(1), CategoryId(2), CategoryId(3)])).unwrap();
        assert_eq!(ekg.edge_count(), 30);

        let two: BTreeSet<_> = [SCHOOL, AUTHOR].into_iter().collect();
        let ekg = extend_kg(&kg, &test, &two, &pseudo_for(&keys, &[SCHOOL, AUTHOR])).unwrap();
        assert_eq!(ekg.pseudo_edges().len(), 10);
        let lists = ekg.neighbor_lists();
        for &t in ekg.test_nodes() {
            assert_eq!(lists.degree(t.0), 2);
        }
    }

    #[test]
    fn extension_with_no_tests_is_identity() {
        let kg = ten_edge_kg();
        let ekg = extend_kg(&kg, &[], &BTreeSet::new(), &PseudoLabels::new()).unwrap();
        assert_eq!(ekg.node_count(), kg.node_count());
        assert_eq!(ekg.edges(), kg.edges());
    }

    #[test]
    fn extension_rejects_colliding_test_ids_and_missing_pseudo() {
        let kg = ten_edge_kg();
        let test = artworks_from(&[("a", Split::Test)]);
        assert_eq!(
            extend_kg(&kg, &test, &BTreeSet::new(), &PseudoLabels::new()),
            Err(Error::DuplicateArtwork("a".into()))
        );
        let test = artworks_from(&[("t", Split::Test)]);
        let used: BTreeSet<_> = [TYPE].into_iter().collect();
        assert!(matches!(
            extend_kg(&kg, &test, &used, &PseudoLabels::new()),
            Err(Error::MissingPseudoLabel { .. })
        ));
        assert!(matches!(
            extend_kg(&kg, &test, &used, &pseudo_for(&["t"], &[TYPE, AUTHOR])),
            Err(Error::UnexpectedPseudoLabel { .. })
        ));
    }

    fn adjacency_of(n: usize, edges: &[(usize, usize)]) -> NormalizedAdjacency {
        let set = edges.iter().map(|&(a, b)| undirected(NodeId(a), NodeId(b))).collect();
        NormalizedAdjacency::from_neighbor_lists(&NeighborLists::from_edges(n, &set))
    }

    #[test]
    fn normalization_closed_forms() {
        let single = adjacency_of(2, &[(0, 1)]);
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(single.entry(i, j), 0.5);
            }
        }
        let tri = adjacency_of(3, &[(0, 1), (1, 2), (0, 2)]);
        for (_, _, v) in tri.iter() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(tri.nnz(), 9);
        let path = adjacency_of(3, &[(0, 1), (1, 2)]);
        assert_eq!(path.entry(0, 0), 0.5);
        assert!((path.entry(1, 1) - 1.0 / 3.0).abs() < 1e-15);
        assert!((path.entry(0, 1) - 0.408_248_290_463_863).abs() < 1e-12);
        assert_eq!(path.entry(0, 2), 0.0);
        let isolated = adjacency_of(1, &[]);
        assert_eq!(isolated.entry(0, 0), 1.0);
    }

    fn star_ekg(train_paintings: usize, pseudo_paintings: usize) -> ExtendedKG {
        let keys: Vec<String> = (0..train_paintings).map(|i| alloc::format!("p{i}")).collect();
        let arts: Vec<ArtworkRecord> = keys
            .iter()
            .map(|k| ArtworkRecord { key: k.clone(), split: Split::Train, feature_ref: None })
            .collect();
        let asg: Vec<Assignment> = keys.iter().map(|k| Assignment::new(k.clone(), AUTHOR, "Rembrandt")).collect();
        let kg = build_kg(&semart(), &arts, &asg, &[]).unwrap();
        let tkeys: Vec<String> = (0..pseudo_paintings).map(|i| alloc::format!("t{i}")).collect();
        let test: Vec<ArtworkRecord> = tkeys
            .iter()
            .map(|k| ArtworkRecord { key: k.clone(), split: Split::Test, feature_ref: None })
            .collect();
        let pseudo: PseudoLabels = tkeys
            .iter()
            .map(|k| (k.clone(), [(AUTHOR, "Rembrandt".to_string())].into_iter().collect()))
            .collect();
        let used: BTreeSet<_> = if pseudo_paintings > 0 { [AUTHOR].into_iter().collect() } else { BTreeSet::new() };
        extend_kg(&kg, &test, &used, &pseudo).unwrap()
    }

    #[test]
    fn degree_histograms() {
        let ekg = star_ekg(5, 2);
        let h = degree_histogram(&ekg, AUTHOR, DegreeSources::TrainOnly).unwrap();
        assert_eq!(h.buckets, [(5, 1)].into_iter().collect());
        let h = degree_histogram(&ekg, AUTHOR, DegreeSources::TrainPlusPseudo).unwrap();
        assert_eq!(h.buckets, [(7, 1)].into_iter().collect());
        let h = degree_histogram(&ekg, TYPE, DegreeSources::TrainOnly).unwrap();
        assert!(h.buckets.is_empty());
        assert!(matches!(
            degree_histogram(&ekg, CategoryId(9), DegreeSources::TrainOnly),
            Err(Error::UnknownCategory(_))
        ));
    }

    #[test]
    fn low_degree_filter() {
        let ekg = star_ekg(3, 1);
        let out = filter_low_degree(&ekg, AUTHOR, 5).unwrap();
        assert_eq!(out.excluded_values.len(), 1);
        assert_eq!(out.excluded_artworks.len(), 3);
        assert_eq!(out.graph.node_count(), ekg.node_count() - 1);
        assert_eq!(out.graph.edge_count(), 0);
        assert_eq!(out.graph.test_nodes().len(), 1);

        let same = filter_low_degree(&ekg, AUTHOR, 0).unwrap();
        assert_eq!(same.graph, ekg);
        assert!(same.excluded_values.is_empty());

        let again = filter_low_degree(&out.graph, AUTHOR, 5).unwrap();
        assert_eq!(again.graph, out.graph);
    }

    #[test]
    fn pseudo_edge_replacement() {
        let ekg = star_ekg(4, 3);
        let label = ekg.label_id(AUTHOR, "Rembrandt").unwrap();
        let cats: BTreeSet<_> = [AUTHOR].into_iter().collect();
        let labels = ekg
            .test_nodes()
            .iter()
            .map(|&t| (t, [(AUTHOR, label)].into_iter().collect()))
            .collect();
        let same = ekg.with_pseudo_edges(&cats, &labels).unwrap();
        assert_eq!(same, ekg);
    }
}
