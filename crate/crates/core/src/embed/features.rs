use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::skipgram::EmbeddingTable;
use crate::error::{Error, Result};
use crate::graph::{ExtendedKG, Node, NodeId};
use crate::linalg::{matmul_bias, Matrix};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionMethod {
    /// Multiply by a seeded Gaussian matrix with entries scaled by `1/√target_dim`.
    SeededRandomProjection,
    /// Keep the first `target_dim` columns.
    Truncate,
}

impl ProjectionMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            ProjectionMethod::SeededRandomProjection => "random_projection",
            ProjectionMethod::Truncate => "truncate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitScheme {
    /// node2vec rows for nodes of the base graph, small uniform noise for
    /// test artworks and labels first named by a pseudo-label.
    N2vPlusRandom,
    /// Projected raw features for artworks, node2vec rows for labels.
    VisualPlusN2v,
}

impl InitScheme {
    pub fn as_str(self) -> &'static str {
        match self {
            InitScheme::N2vPlusRandom => "n2v_plus_random",
            InitScheme::VisualPlusN2v => "visual_plus_n2v",
        }
    }
}

/// Project every row of `raw` to `target_dim` columns.
pub fn project_rows(
    raw: &Matrix,
    target_dim: usize,
    method: ProjectionMethod,
    seed: u64,
) -> Result<Matrix> {
    if target_dim == 0 {
        return Err(Error::param("sg.dim", "target dimension must be at least 1"));
    }
    match method {
        ProjectionMethod::Truncate => {
            if raw.cols() < target_dim {
                return Err(Error::DimensionMismatch(alloc::format!(
                    "cannot truncate {}-wide rows to {target_dim}",
                    raw.cols()
                )));
            }
            let mut out = Matrix::zeros(raw.rows(), target_dim);
            for i in 0..raw.rows() {
                out.row_mut(i).copy_from_slice(&raw.row(i)[..target_dim]);
            }
            Ok(out)
        }
        ProjectionMethod::SeededRandomProjection => {
            let scale = 1.0 / libm::sqrt(target_dim as f64);
            let mut rng = seed::rng(seed);
            let basis: Vec<f64> = (0..raw.cols() * target_dim)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    z * scale
                })
                .collect();
            let mut out = Matrix::zeros(raw.rows(), target_dim);
            matmul_bias(raw, &basis, None, &mut out);
            Ok(out)
        }
    }
}

pub fn project_features(
    raw: &EmbeddingTable,
    target_dim: usize,
    method: ProjectionMethod,
    seed: u64,
) -> Result<EmbeddingTable> {
    let rows = project_rows(raw.rows(), target_dim, method, seed)?;
    EmbeddingTable::new(raw.ids().to_vec(), rows)
}

/// The `|V′| × d` initial feature stack, row `i` for node `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix(Matrix);

impl FeatureMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::NonFinite { what: "initial features", iteration: 0 });
        }
        Ok(Self(m))
    }

    pub fn dim(&self) -> usize {
        self.0.cols()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FeatureSources<'a> {
    pub node2vec: Option<&'a EmbeddingTable>,
    /// Raw visual features, indexed by each artwork's `feature_ref`.
    pub visual: Option<&'a Matrix>,
    pub projection: ProjectionMethod,
}

fn n2v_row(table: Option<&EmbeddingTable>, id: NodeId, dim: usize) -> Result<&[f64]> {
    let row = table
        .and_then(|t| t.get(id))
        .ok_or(Error::MissingRow { what: "node2vec embedding", node: id })?;
    if row.len() != dim {
        return Err(Error::DimensionMismatch(alloc::format!(
            "node2vec width {} but feature width {dim}",
            row.len()
        )));
    }
    Ok(row)
}

/// Stack the initial features of every node of `ekg` in id order.
pub fn assemble_initial_features(
    ekg: &ExtendedKG,
    scheme: InitScheme,
    sources: &FeatureSources<'_>,
    dim: usize,
    seed: u64,
) -> Result<FeatureMatrix> {
    let n = ekg.node_count();
    let mut out = Matrix::zeros(n, dim);
    match scheme {
        InitScheme::N2vPlusRandom => {
            let bound = 0.5 / dim as f64;
            let mut rng = seed::rng_for(seed, "test-node-init");
            let base = ekg.base().node_count();
            for node in ekg.nodes() {
                let id = node.id();
                if id.0 >= base {
                    for v in out.row_mut(id.0) {
                        *v = rng.random_range(-bound..=bound);
                    }
                } else {
                    out.row_mut(id.0)
                        .copy_from_slice(n2v_row(sources.node2vec, id, dim)?);
                }
            }
        }
        InitScheme::VisualPlusN2v => {
            let visual = sources.visual.ok_or(Error::EmptyInput("visual features"))?;
            let projected = project_rows(
                visual,
                dim,
                sources.projection,
                seed::derive_seed(seed, "projection"),
            )?;
            for node in ekg.nodes() {
                let id = node.id();
                match node {
                    Node::Artwork(a) => {
                        let r = a
                            .feature_ref
                            .filter(|&r| r < projected.rows())
                            .ok_or(Error::MissingRow { what: "visual feature", node: id })?;
                        out.row_mut(id.0).copy_from_slice(projected.row(r));
                    }
                    Node::Label(_) => out
                        .row_mut(id.0)
                        .copy_from_slice(n2v_row(sources.node2vec, id, dim)?),
                }
            }
        }
    }
    FeatureMatrix::new(out)
}
