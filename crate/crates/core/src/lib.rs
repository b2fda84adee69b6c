//! Latent factor point processes for patient representation.
//!
//! High-dimensional code-occurrence processes driven by a low-dimensional
//! latent Poisson process: simulation, kernel-smoothed cross-covariance
//! estimation, Fourier-Eigen embeddings, baselines, and the downstream
//! learners used to compare them.

pub mod baselines;
pub mod config;
pub mod covariance;
pub mod error;
pub mod events;
pub mod harness;
pub mod learn;
pub mod model;
pub mod quad;
pub mod rng;
pub mod simulate;
pub mod spectral;

pub use covariance::{analytic_cross_covariance, estimate_cross_covariance, CovarianceCurve};
pub use config::{EstimatorConfig, SmoothingKernel, SpectralConfig};
pub use error::{Error, Result};
pub use events::{Dataset, EventSequence, Record};
pub use harness::{run_grid, ExperimentGrid, Method, Metric, ResultTable};
pub use model::{Group, ModelSpec, TransferBank, TransferKernel};
pub use rng::{seeded_rng, Rng};
pub use spectral::{
    fourier_eigen_embedding, fourier_transform_curve, hermitian_eigenvalues, population_embedding,
    separation_diagnostic, Embedding, FourierEigenEmbedder, PopulationOracle, SpectralMatrix,
};
