//! Downstream learners on embeddings and their evaluation metrics.

mod kmeans;
mod logistic;
mod metrics;

pub use kmeans::{kmeans_objective, kmeans_spectral, lloyd, lloyd_from_assignment, ClusteringResult};
pub use logistic::{logistic_objective, predict_score, train_logistic, LogisticConfig, LogisticModel};
pub use metrics::{adjusted_rand_index, auc, matching_accuracy};
