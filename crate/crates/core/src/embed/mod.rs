//! Initial node features: node2vec walks, skip-gram embeddings, projection of
//! raw visual features, and assembly of the feature stack fed to the GCN.

mod features;
mod skipgram;
mod walk;

pub use features::{
    assemble_initial_features, project_features, project_rows, FeatureMatrix, FeatureSources,
    InitScheme, ProjectionMethod,
};
pub use skipgram::{train_skipgram, EmbeddingTable, SkipGram, SkipGramParams};
pub use walk::{next_step, node2vec_walks, transition_weights, walks_on, WalkCorpus, WalkParams};
