//! Comparison embeddings: raw per-code counts and per-patient PMI spectra.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::EventSequence;
use crate::spectral::Embedding;

/// Occurrence count of every code over the observation window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountVector {
    pub values: Vec<u64>,
}

impl CountVector {
    pub fn to_features(&self) -> Vec<f64> {
        self.values.iter().map(|&v| v as f64).collect()
    }

    pub fn total(&self) -> u64 {
        self.values.iter().sum()
    }
}

pub fn count_embedding(seq: &EventSequence) -> CountVector {
    CountVector {
        values: seq.counts().into_iter().map(|c| c as u64).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PmiConfig {
    /// Bin width as a fraction of the observation window.
    pub window_fraction: f64,
    /// Additive smoothing; `None` means one over the number of bins.
    pub smoothing: Option<f64>,
    pub embed_dim: usize,
}

impl Default for PmiConfig {
    fn default() -> Self {
        PmiConfig {
            window_fraction: 0.05,
            smoothing: None,
            embed_dim: 2,
        }
    }
}

impl PmiConfig {
    pub fn validate(&self, d: usize) -> Result<()> {
        if !(self.window_fraction > 0.0 && self.window_fraction.is_finite()) {
            return Err(Error::InvalidConfig("window_fraction must be > 0".into()));
        }
        if let Some(eps) = self.smoothing {
            if !(eps > 0.0) {
                return Err(Error::InvalidConfig("smoothing must be > 0".into()));
            }
        }
        if self.embed_dim == 0 || self.embed_dim > d {
            return Err(Error::InvalidConfig(format!("embed_dim must lie in [1, {d}]")));
        }
        Ok(())
    }
}

/// Smoothed PMI matrix of binary code occurrence in consecutive bins of
/// width `window` (half-open bins; the last may be partial and also holds
/// events at exactly `T`).
pub fn pmi_matrix(seq: &EventSequence, window: f64, smoothing: Option<f64>) -> Result<DMatrix<f64>> {
    if !(window > 0.0 && window.is_finite()) {
        return Err(Error::InvalidConfig(format!("PMI window must be > 0, got {window}")));
    }
    let t_end = seq.window_end();
    let bins = ((t_end / window).ceil() as usize).max(1);
    let d = seq.dim();
    let mut occupied = DMatrix::<f64>::zeros(bins, d);
    for j in 0..d {
        for &t in seq.component(j) {
            let b = ((t / window) as usize).min(bins - 1);
            occupied[(b, j)] = 1.0;
        }
    }
    let joint = occupied.transpose() * &occupied / bins as f64;
    let eps = smoothing.unwrap_or(1.0 / bins as f64);
    Ok(DMatrix::from_fn(d, d, |j, jp| {
        let pj = joint[(j, j)] + eps;
        let pjp = joint[(jp, jp)] + eps;
        ((joint[(j, jp)] + eps) / (pj * pjp)).ln()
    }))
}

/// Top-`embed_dim` eigenvalues of the PMI matrix with bins of width
/// `window_fraction * T`.
pub fn pmi_embedding(seq: &EventSequence, cfg: &PmiConfig) -> Result<Embedding> {
    cfg.validate(seq.dim())?;
    let m = pmi_matrix(seq, cfg.window_fraction * seq.window_end(), cfg.smoothing)?;
    let mut values: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values.truncate(cfg.embed_dim);
    Embedding::new(values)
}
