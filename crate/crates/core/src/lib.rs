//! Transductive multi-category classification over an extended knowledge graph.
//!
//! Labeled artworks and their attribute labels form a knowledge graph; test
//! artworks are attached to it through pseudo-label edges, and one two-layer
//! graph convolutional network per category is trained on the resulting
//! graph. The crate is `no_std` and only needs `alloc`: every operation is a
//! pure, seeded function of its inputs. Dataset files, reports and the
//! command line live in the companion `gcnboost-cli` crate.
//!
//! Module map:
//!
//! | module | contents |
//! |--------|----------|
//! | [`graph`] | knowledge graph, extension with pseudo-edges, normalized adjacency, degree analyses |
//! | [`embed`] | node2vec walks, skip-gram with negative sampling, feature projection, initial feature stack |
//! | [`gcn`] | forward pass, masked cross-entropy, analytic gradients, Adam, early-stopped training |
//! | [`pipeline`] | pseudo-labelers, strategy runs, evaluation, ablation grid |
//! | [`synth`] | synthetic dataset generator and the label-propagation oracle |
#![no_std]

extern crate alloc;

pub mod dataset;
pub mod embed;
pub mod error;
pub mod gcn;
pub mod graph;
pub mod linalg;
pub mod pipeline;
pub mod seed;
pub mod synth;

pub use dataset::{Assignment, ArtworkRecord, Dataset, LabelKey, LabelLink};
pub use error::{Error, Result};
pub use graph::{CategoryId, ExtendedKG, KnowledgeGraph, NodeId, NormalizedAdjacency, Split};
