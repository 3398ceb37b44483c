//! Locally linear re-embedding of labeled vectors.
//!
//! Each training point is reconstructed from its `c` nearest neighbors,
//! optionally restricted to its own class, and the training set is mapped
//! to the low-dimensional coordinates that best preserve those
//! reconstruction weights. Unseen vectors are placed by reusing the same
//! weights against their nearest training points, and classified by a cosine
//! nearest-neighbor vote.

pub mod classify;
pub mod data;
pub mod error;
pub mod io;
pub mod metrics;
pub mod neighbors;
pub mod pipeline;
pub mod spectral;
pub mod synth;
pub mod transform;
pub mod weights;

pub use classify::{baseline_no_reembed, cosine_similarity, knn_predict};
pub use data::{LabeledEmbeddings, NeighborMode, ReembedConfig};
pub use error::{Error, ErrorKind, Result};
pub use io::{load_embeddings, save_embeddings, Format};
pub use metrics::{aggregate_seeds, info_nce_loss, EvalReport, InfoNceVariant, MeanStd, SeedRun};
pub use neighbors::{fit_graph, intra_class_neighbors, unconstrained_neighbors, NeighborGraph};
pub use pipeline::{evaluate_reembedder, evaluate_strategy, Strategy};
pub use spectral::{build_m, embed, Embedding, Spectrum};
pub use transform::{fit, FitDiagnostics, PreparedFit, Reembedder, Transformed};
pub use weights::{reconstruction_weights, solve_local_weights, WeightMatrix};
