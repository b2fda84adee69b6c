//! Spectral matrices at a fixed frequency and the Fourier-Eigen embedding
//! read off their leading eigenvalues.

mod fused;
mod population;

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::config::{EstimatorConfig, SpectralConfig};
use crate::covariance::{estimate_cross_covariance, CovarianceCurve};
use crate::error::{Error, Result};
use crate::events::EventSequence;

pub use fused::FourierEigenEmbedder;
pub use population::{population_embedding, separation_diagnostic, PopulationOracle, SeparationReport};

pub type C64 = Complex<f64>;

/// Complex `d x d` matrix `F{V}(xi)` at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMatrix {
    frequency: f64,
    entries: DMatrix<C64>,
}

impl SpectralMatrix {
    pub fn new(frequency: f64, entries: DMatrix<C64>) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows(),
                found: entries.ncols(),
            });
        }
        Ok(SpectralMatrix { frequency, entries })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    /// `max |S - S^dagger|` over all entries.
    pub fn hermitian_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for j in 0..d {
            for k in j..d {
                worst = worst.max((self.entries[(j, k)] - self.entries[(k, j)].conj()).norm());
            }
        }
        worst
    }

    /// Replaces `S` by `(S + S^dagger) / 2`; the result is exactly Hermitian.
    pub fn symmetrize(&mut self) {
        let d = self.dim();
        for j in 0..d {
            let re = self.entries[(j, j)].re;
            self.entries[(j, j)] = Complex::new(re, 0.0);
            for k in j + 1..d {
                let avg = (self.entries[(j, k)] + self.entries[(k, j)].conj()) * 0.5;
                self.entries[(j, k)] = avg;
                self.entries[(k, j)] = avg.conj();
            }
        }
    }

    fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Leading eigenvalues of a spectral matrix, sorted non-increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    values: Vec<f64>,
}

impl Embedding {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("embedding has non-finite entries".into()));
        }
        if values.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidConfig("embedding values must be non-increasing".into()));
        }
        Ok(Embedding { values })
    }

    pub fn zeros(k: usize) -> Self {
        Embedding { values: vec![0.0; k] }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    /// Euclidean distance to another embedding of the same length.
    pub fn distance(&self, other: &Embedding) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Trapezoid weights on a grid of `n` points with spacing `step`.
pub(crate) fn trapezoid_weights(n: usize, step: f64) -> Vec<f64> {
    let mut w = vec![step; n];
    if n > 0 {
        w[0] = 0.5 * step;
        w[n - 1] = 0.5 * step;
    }
    if n == 1 {
        w[0] = 0.0;
    }
    w
}

fn uniform_step(lags: &[f64]) -> Result<f64> {
    if lags.len() < 2 {
        return Ok(0.0);
    }
    let step = lags[1] - lags[0];
    let scale = lags[lags.len() - 1].abs().max(1.0);
    for w in lags.windows(2) {
        if ((w[1] - w[0]) - step).abs() > 1e-9 * scale {
            return Err(Error::InvalidConfig("lag grid must be evenly spaced".into()));
        }
    }
    Ok(step)
}

/// Trapezoid quadrature of `V(tau) e^{-i 2 pi xi tau}` over the lag grid,
/// entry by entry, before any symmetrization.
pub fn fourier_transform_raw(curve: &CovarianceCurve, xi: f64) -> Result<SpectralMatrix> {
    let lags = curve.lags();
    let step = uniform_step(lags)?;
    let weights = trapezoid_weights(lags.len(), step);
    let d = curve.dim();
    let mut entries = DMatrix::<C64>::zeros(d, d);
    for (m, (&tau, &w)) in lags.iter().zip(&weights).enumerate() {
        let phase = Complex::from_polar(w, -2.0 * std::f64::consts::PI * xi * tau);
        for j in 0..d {
            for jp in 0..d {
                entries[(j, jp)] += phase * curve.get(m, j, jp);
            }
        }
    }
    SpectralMatrix::new(xi, entries)
}

/// Fourier transform of a covariance curve at `xi`, Hermitian-symmetrized.
pub fn fourier_transform_curve(curve: &CovarianceCurve, xi: f64) -> Result<SpectralMatrix> {
    let mut s = fourier_transform_raw(curve, xi)?;
    s.symmetrize();
    Ok(s)
}

/// Eigenvalues (descending) and matching unit eigenvectors (columns).
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

fn check_hermitian(matrix: &SpectralMatrix) -> Result<()> {
    let defect = matrix.hermitian_defect();
    if defect > 1e-10 * matrix.max_abs().max(1.0) {
        return Err(Error::NotHermitian(defect));
    }
    Ok(())
}

pub fn hermitian_eigen(matrix: &SpectralMatrix) -> Result<HermitianEigen> {
    check_hermitian(matrix)?;
    let eig = matrix.entries.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..matrix.dim()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(matrix.dim(), matrix.dim(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(HermitianEigen { values, vectors })
}

/// All real eigenvalues of a Hermitian matrix, sorted descending.
pub fn hermitian_eigenvalues(matrix: &SpectralMatrix) -> Result<Vec<f64>> {
    check_hermitian(matrix)?;
    let mut values: Vec<f64> = matrix.entries.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

/// Top-`k` eigenvalues of a Hermitian spectral matrix.
pub fn leading_eigenvalues(matrix: &SpectralMatrix, k: usize) -> Result<Embedding> {
    let mut values = hermitian_eigenvalues(matrix)?;
    if k > values.len() {
        return Err(Error::DimensionMismatch {
            expected: values.len(),
            found: k,
        });
    }
    values.truncate(k);
    Embedding::new(values)
}

/// Fourier-Eigen embedding by the reference route: estimate the full
/// covariance curve, transform it, take the top eigenvalues.
pub fn fourier_eigen_embedding(
    seq: &EventSequence,
    est_cfg: &EstimatorConfig,
    sp_cfg: &SpectralConfig,
) -> Result<Embedding> {
    sp_cfg.validate(seq.dim())?;
    let curve = estimate_cross_covariance(seq, est_cfg)?;
    let s = fourier_transform_curve(&curve, sp_cfg.frequency)?;
    leading_eigenvalues(&s, sp_cfg.embed_dim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;
    use proptest::prelude::*;
    use rand::Rng as _;
    use std::f64::consts::PI;

    fn from_real(d: usize, lags: Vec<f64>, f: impl Fn(f64, usize, usize) -> f64) -> CovarianceCurve {
        let mut values = Vec::new();
        for &tau in &lags {
            for j in 0..d {
                for jp in 0..d {
                    values.push(f(tau, j, jp));
                }
            }
        }
        CovarianceCurve::from_values(d, lags, values).unwrap()
    }

    fn grid(threshold: f64, step: f64) -> Vec<f64> {
        let m = (threshold / step).round() as i64;
        (-m..=m).map(|i| i as f64 * step).collect()
    }

    #[test]
    fn zero_curve_transforms_to_zero() {
        let c = CovarianceCurve::zeros(3, grid(5.0, 0.05)).unwrap();
        let s = fourier_transform_curve(&c, 1.0).unwrap();
        assert!(s.entries().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn gaussian_is_its_own_transform() {
        let c = from_real(1, grid(5.0, 0.01), |t, _, _| (-PI * t * t).exp());
        let s = fourier_transform_curve(&c, 1.0).unwrap();
        assert!((s.entries()[(0, 0)].re - (-PI).exp()).abs() < 1e-4);
        assert!(s.entries()[(0, 0)].im.abs() < 1e-12);
    }

    #[test]
    fn swap_symmetric_curve_transforms_to_hermitian() {
        let mut rng = seeded_rng(3, 0);
        let d = 4;
        let coef: Vec<f64> = (0..d * d).map(|_| rng.random::<f64>()).collect();
        // V_{jj'}(tau) = c_{jj'} g(tau - s_{jj'}) with s antisymmetric keeps swap symmetry
        let c = from_real(d, grid(5.0, 0.05), |t, j, jp| {
            let (a, b) = (j.min(jp), j.max(jp));
            let shift = if j <= jp { 0.3 } else { -0.3 } * (b - a) as f64;
            coef[a * d + b] * (-(t - shift) * (t - shift)).exp()
        });
        assert!(c.swap_symmetry_defect() < 1e-15);
        let raw = fourier_transform_raw(&c, 0.7).unwrap();
        assert!(raw.hermitian_defect() < 1e-10);
        let sym = fourier_transform_curve(&c, 0.7).unwrap();
        assert_eq!(sym.hermitian_defect(), 0.0);
    }

    #[test]
    fn eigenvalues_of_simple_matrices() {
        let id = SpectralMatrix::new(0.0, DMatrix::identity(3, 3)).unwrap();
        assert_eq!(hermitian_eigenvalues(&id).unwrap(), vec![1.0, 1.0, 1.0]);
        let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex::new(2.0, 0.0),
            Complex::new(0.0, 0.0),
            Complex::new(-1.0, 0.0),
        ]));
        let m = SpectralMatrix::new(0.0, diag).unwrap();
        let v = hermitian_eigenvalues(&m).unwrap();
        for (a, b) in v.iter().zip([2.0, 0.0, -1.0]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut e = DMatrix::<C64>::zeros(2, 2);
        e[(0, 1)] = Complex::new(1.0, 0.0);
        let m = SpectralMatrix::new(0.0, e).unwrap();
        assert!(matches!(hermitian_eigenvalues(&m), Err(Error::NotHermitian(_))));
    }

    proptest! {
        #[test]
        fn two_by_two_matches_quadratic_formula(
            a in -10.0f64..10.0, c in -10.0f64..10.0, br in -10.0f64..10.0, bi in -10.0f64..10.0
        ) {
            let mut e = DMatrix::<C64>::zeros(2, 2);
            e[(0, 0)] = Complex::new(a, 0.0);
            e[(1, 1)] = Complex::new(c, 0.0);
            e[(0, 1)] = Complex::new(br, bi);
            e[(1, 0)] = Complex::new(br, -bi);
            let v = hermitian_eigenvalues(&SpectralMatrix::new(0.0, e).unwrap()).unwrap();
            let mid = 0.5 * (a + c);
            let rad = (0.25 * (a - c) * (a - c) + br * br + bi * bi).sqrt();
            prop_assert!((v[0] - (mid + rad)).abs() < 1e-10);
            prop_assert!((v[1] - (mid - rad)).abs() < 1e-10);
        }
    }

    #[test]
    fn eigenvectors_reconstruct_matrix() {
        let mut rng = seeded_rng(9, 0);
        let d = 5;
        let b = DMatrix::<C64>::from_fn(d, d, |_, _| Complex::new(rng.random(), rng.random()));
        let h = &b + b.adjoint();
        let eig = hermitian_eigen(&SpectralMatrix::new(0.0, h.clone()).unwrap()).unwrap();
        let lam = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            d,
            eig.values.iter().map(|v| Complex::new(*v, 0.0)),
        ));
        let rec = &eig.vectors * lam * eig.vectors.adjoint();
        assert!((rec - h).norm() < 1e-10);
        assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn empty_sequence_embeds_to_zero() {
        let seq = EventSequence::empty(4, 20.0).unwrap();
        let e = fourier_eigen_embedding(&seq, &EstimatorConfig::default(), &SpectralConfig::default()).unwrap();
        assert_eq!(e.values(), &[0.0, 0.0]);
    }

    #[test]
    fn embedding_is_invariant_to_code_relabelling() {
        let mut rng = seeded_rng(21, 0);
        let d = 5;
        let mut events = vec![Vec::new(); d];
        for _ in 0..200 {
            events[rng.random_range(0..d)].push(rng.random::<f64>() * 50.0);
        }
        let seq = EventSequence::from_unsorted(50.0, events).unwrap();
        let cfg = EstimatorConfig::default();
        let sp = SpectralConfig {
            frequency: 0.3,
            embed_dim: 3,
        };
        let base = fourier_eigen_embedding(&seq, &cfg, &sp).unwrap();
        let permuted = fourier_eigen_embedding(&seq.permute(&[3, 0, 4, 2, 1]).unwrap(), &cfg, &sp).unwrap();
        assert!(base.distance(&permuted) < 1e-10);
        let again = fourier_eigen_embedding(&seq, &cfg, &sp).unwrap();
        assert_eq!(base, again);
    }

    #[test]
    fn embedding_rejects_unsorted_values() {
        assert!(Embedding::new(vec![1.0, 2.0]).is_err());
        assert!(Embedding::new(vec![f64::NAN]).is_err());
        assert!(Embedding::new(vec![2.0, 2.0, -1.0]).is_ok());
    }
}
