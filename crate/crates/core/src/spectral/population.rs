//! Population spectral matrices `W diag(mu) W^dagger` and the group
//! separation diagnostic built on them.

use nalgebra::{Complex, DMatrix};

use super::{hermitian_eigen, Embedding, SpectralMatrix, C64};
use crate::error::{Error, Result};
use crate::model::{Group, ModelSpec};

/// Population quantities of a model at one frequency.
#[derive(Debug, Clone)]
pub struct PopulationOracle {
    pub frequency: f64,
    /// `W_{jl} = F{omega_{jl}}(xi)`, `d x k`.
    pub w: DMatrix<C64>,
    pub groups: Vec<Group>,
    pub spectral: Vec<SpectralMatrix>,
    pub embeddings: Vec<Embedding>,
    /// Top-`k` unit eigenvectors per group, each column's largest-modulus
    /// entry rotated to be real positive.
    pub eigenvectors: Vec<DMatrix<C64>>,
    pub sigma_max: f64,
    /// `k`-th singular value of `W`.
    pub sigma_min: f64,
    /// `rho[g][r] = ||U_g^dagger U_r - I||_F`.
    pub rho: Vec<Vec<f64>>,
}

impl PopulationOracle {
    pub fn new(model: &ModelSpec, frequency: f64) -> Result<Self> {
        model.validate()?;
        let bank = &model.transfer;
        let beta_hat = bank.kernel_fourier(frequency);
        let w = DMatrix::from_fn(bank.d, bank.k, |j, l| beta_hat * bank.coefficient(j, l));
        Self::from_transfer_matrix(w, model.groups.clone(), frequency)
    }

    /// Oracle for an explicit `d x k` matrix `W` and latent rates.
    pub fn from_transfer_matrix(w: DMatrix<C64>, groups: Vec<Group>, frequency: f64) -> Result<Self> {
        let (d, k) = w.shape();
        if k == 0 || k > d {
            return Err(Error::InvalidModel(format!("W must be d x k with 1 <= k <= d, got {d} x {k}")));
        }
        if let Some(g) = groups.iter().find(|g| g.mu.len() != k) {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: g.mu.len(),
            });
        }
        let sv = w.clone().svd(false, false).singular_values;
        let sigma_max = sv.max();
        let mut sorted: Vec<f64> = sv.iter().copied().collect();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let sigma_min = sorted[k - 1];
        if sigma_min < 1e-8 {
            log::warn!("W({frequency}) is rank deficient: sigma_k = {sigma_min:.3e}");
        }

        let mut spectral = Vec::with_capacity(groups.len());
        let mut embeddings = Vec::with_capacity(groups.len());
        let mut eigenvectors = Vec::with_capacity(groups.len());
        for g in &groups {
            let entries = DMatrix::from_fn(d, d, |j, jp| {
                (0..k)
                    .map(|l| w[(j, l)] * w[(jp, l)].conj() * g.mu[l])
                    .sum::<C64>()
            });
            let mut s = SpectralMatrix::new(frequency, entries)?;
            s.symmetrize();
            let eig = hermitian_eigen(&s)?;
            embeddings.push(Embedding::new(eig.values[..k].to_vec())?);
            let mut u = eig.vectors.columns(0, k).into_owned();
            for mut col in u.column_iter_mut() {
                let pivot = col.iter().copied().fold(Complex::new(0.0, 0.0), |best: C64, z| {
                    if z.norm() > best.norm() {
                        z
                    } else {
                        best
                    }
                });
                if pivot.norm() > 0.0 {
                    let rot = pivot.conj() / pivot.norm();
                    col.iter_mut().for_each(|z| *z *= rot);
                }
            }
            eigenvectors.push(u);
            spectral.push(s);
        }
        let rho = eigenvectors
            .iter()
            .map(|ug| {
                eigenvectors
                    .iter()
                    .map(|ur| (ug.adjoint() * ur - DMatrix::<C64>::identity(k, k)).norm())
                    .collect()
            })
            .collect();
        Ok(PopulationOracle {
            frequency,
            w,
            groups,
            spectral,
            embeddings,
            eigenvectors,
            sigma_max,
            sigma_min,
            rho,
        })
    }

    pub fn group_index(&self, label: &str) -> Option<usize> {
        self.groups.iter().position(|g| g.label == label)
    }

    fn require(&self, label: &str) -> Result<usize> {
        self.group_index(label)
            .ok_or_else(|| Error::InvalidModel(format!("unknown group {label:?}")))
    }
}

/// Population embedding of one group together with the oracle it came from.
pub fn population_embedding(model: &ModelSpec, group: &str, frequency: f64) -> Result<(Embedding, PopulationOracle)> {
    let oracle = PopulationOracle::new(model, frequency)?;
    let g = oracle.require(group)?;
    Ok((oracle.embeddings[g].clone(), oracle))
}

/// Both sides of the lower bound on population embedding separation,
/// `(1/k)||f_g - f_r|| >= s_k^2 ||mu_g - mu_r|| - 3 s_1^2 min(||mu_g||, ||mu_r||) max(rho, rho^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparationReport {
    pub left: f64,
    pub right: f64,
    pub rho: f64,
    pub holds: bool,
}

pub fn separation_diagnostic(oracle: &PopulationOracle, g: &str, r: &str) -> Result<SeparationReport> {
    let (gi, ri) = (oracle.require(g)?, oracle.require(r)?);
    let k = oracle.w.ncols() as f64;
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let (mg, mr) = (&oracle.groups[gi].mu, &oracle.groups[ri].mu);
    let diff: Vec<f64> = mg.iter().zip(mr).map(|(a, b)| a - b).collect();
    let rho = oracle.rho[gi][ri];
    let left = oracle.embeddings[gi].distance(&oracle.embeddings[ri]) / k;
    let right = oracle.sigma_min.powi(2) * norm(&diff)
        - 3.0 * oracle.sigma_max.powi(2) * norm(mg).min(norm(mr)) * rho.max(rho * rho);
    let holds = left >= right - 1e-9 * right.abs().max(1.0);
    Ok(SeparationReport { left, right, rho, holds })
}
