//! Generative model specification: transfer kernels, the transfer bank and
//! the per-group latent intensities.

use std::f64::consts::PI;

use nalgebra::Complex;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;
use crate::rng::Rng;

/// Shape of the transfer function shared by every (code, factor) pair.
///
/// All kernels map `t >= 0` to a nonnegative value and are identically zero
/// for negative arguments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransferKernel {
    /// `exp(-t^2 / 2)`
    Gauss,
    /// `|sin t| / (t + 1)` on `[0, pi)`
    SincDecay,
    /// `1 - sqrt(t)` on `[0, 1)`
    SqrtRamp,
    /// `1 - t` on `[0, 1)`
    LinRamp,
    /// `4^-t` on `[0, 2)`
    Exp4,
}

impl TransferKernel {
    pub const ALL: [TransferKernel; 5] = [
        TransferKernel::Gauss,
        TransferKernel::SincDecay,
        TransferKernel::SqrtRamp,
        TransferKernel::LinRamp,
        TransferKernel::Exp4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TransferKernel::Gauss => "gauss",
            TransferKernel::SincDecay => "sinc_decay",
            TransferKernel::SqrtRamp => "sqrt_ramp",
            TransferKernel::LinRamp => "lin_ramp",
            TransferKernel::Exp4 => "exp4",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Radius past which the kernel is treated as exactly zero. The Gaussian
    /// has no compact support; it is cut at 6 where its value is below 2e-8.
    pub fn default_support(self) -> f64 {
        match self {
            TransferKernel::Gauss => 6.0,
            TransferKernel::SincDecay => PI,
            TransferKernel::SqrtRamp | TransferKernel::LinRamp => 1.0,
            TransferKernel::Exp4 => 2.0,
        }
    }

    /// Upper bound of the kernel on its support, used as the thinning envelope.
    pub fn sup(self) -> f64 {
        match self {
            // max of sin t / (t + 1) is ~0.4240 at t ~ 1.132
            TransferKernel::SincDecay => 0.425,
            _ => 1.0,
        }
    }

    fn raw(self, t: f64) -> f64 {
        match self {
            TransferKernel::Gauss => (-0.5 * t * t).exp(),
            TransferKernel::SincDecay => {
                if t < PI {
                    t.sin().abs() / (t + 1.0)
                } else {
                    0.0
                }
            }
            TransferKernel::SqrtRamp => {
                if t < 1.0 {
                    1.0 - t.sqrt()
                } else {
                    0.0
                }
            }
            TransferKernel::LinRamp => {
                if t < 1.0 {
                    1.0 - t
                } else {
                    0.0
                }
            }
            TransferKernel::Exp4 => {
                if t < 2.0 {
                    4f64.powf(-t)
                } else {
                    0.0
                }
            }
        }
    }
}

impl std::fmt::Display for TransferKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.name())
    }
}

/// Transfer functions `omega_{jl}(t) = a_{jl} * beta(t)` for `d` codes and `k`
/// latent factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferBank {
    pub d: usize,
    pub k: usize,
    /// Row `j` holds `a_{j1}, ..., a_{jk}`.
    pub coefficients: Vec<Vec<f64>>,
    pub kernel: TransferKernel,
    pub support_radius: f64,
}

impl TransferBank {
    pub fn new(coefficients: Vec<Vec<f64>>, kernel: TransferKernel) -> Result<Self> {
        let d = coefficients.len();
        let k = coefficients.first().map_or(0, Vec::len);
        let bank = TransferBank {
            d,
            k,
            coefficients,
            kernel,
            support_radius: kernel.default_support(),
        };
        bank.validate()?;
        Ok(bank)
    }

    /// Coefficients drawn i.i.d. from `Unif(lo, hi)`, row by row.
    pub fn random_uniform(
        d: usize,
        k: usize,
        kernel: TransferKernel,
        lo: f64,
        hi: f64,
        rng: &mut Rng,
    ) -> Result<Self> {
        if !(0.0 <= lo && lo <= hi) {
            return Err(Error::InvalidModel(format!(
                "coefficient range [{lo}, {hi}] must be nonnegative and ordered"
            )));
        }
        let coefficients = (0..d)
            .map(|_| (0..k).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect())
            .collect();
        Self::new(coefficients, kernel)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.k == 0 {
            return Err(Error::InvalidModel("transfer bank needs d >= 1 and k >= 1".into()));
        }
        if self.coefficients.len() != self.d {
            return Err(Error::InvalidModel(format!(
                "expected {} coefficient rows, found {}",
                self.d,
                self.coefficients.len()
            )));
        }
        for (j, row) in self.coefficients.iter().enumerate() {
            if row.len() != self.k {
                return Err(Error::InvalidModel(format!(
                    "coefficient row {j} has {} entries, expected {}",
                    row.len(),
                    self.k
                )));
            }
            if let Some(a) = row.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
                return Err(Error::InvalidModel(format!(
                    "coefficient {a} in row {j} is not a finite nonnegative number"
                )));
            }
        }
        if !(self.support_radius.is_finite() && self.support_radius >= 0.0) {
            return Err(Error::InvalidModel("support radius must be finite and >= 0".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn coefficient(&self, j: usize, l: usize) -> f64 {
        self.coefficients[j][l]
    }

    /// `beta(t)`, zero outside `[0, support_radius)`.
    #[inline]
    pub fn kernel_value(&self, t: f64) -> f64 {
        if t < 0.0 || t >= self.support_radius {
            0.0
        } else {
            self.kernel.raw(t)
        }
    }

    /// `omega_{jl}(t)`.
    #[inline]
    pub fn eval(&self, j: usize, l: usize, t: f64) -> f64 {
        self.coefficients[j][l] * self.kernel_value(t)
    }

    /// Integral of `beta` over its support.
    pub fn kernel_integral(&self) -> f64 {
        quad::integrate(|t| self.kernel_value(t), 0.0, self.support_radius, 1e-12)
    }

    /// Autocorrelation `C(tau) = int beta(s) beta(s - |tau|) ds`, so that the
    /// lag-`tau` covariance of codes `j, j'` is
    /// `sum_l mu_l a_{jl} a_{j'l} C(tau)`.
    pub fn kernel_autocorrelation(&self, tau: f64) -> f64 {
        let lag = tau.abs();
        let b0 = self.support_radius;
        if lag >= b0 {
            return 0.0;
        }
        if self.kernel == TransferKernel::Gauss {
            // int_{lag}^inf e^{-s^2/2} e^{-(s-lag)^2/2} ds; the tail past b0 = 6
            // is below 3e-9 and ignored.
            return 0.5 * PI.sqrt() * (-0.25 * lag * lag).exp() * libm::erfc(0.5 * lag);
        }
        quad::integrate(
            |s| self.kernel_value(s) * self.kernel_value(s - lag),
            lag,
            b0,
            1e-10,
        )
    }

    /// Fourier transform `int beta(t) e^{-i 2 pi xi t} dt` of the one-sided kernel.
    pub fn kernel_fourier(&self, xi: f64) -> Complex<f64> {
        let w = 2.0 * PI * xi;
        let b0 = self.support_radius;
        let re = quad::integrate(|t| self.kernel_value(t) * (w * t).cos(), 0.0, b0, 1e-11);
        let im = quad::integrate(|t| -self.kernel_value(t) * (w * t).sin(), 0.0, b0, 1e-11);
        Complex::new(re, im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Group {
    pub label: String,
    /// Latent intensity vector `mu^(g)`, one rate per factor.
    pub mu: Vec<f64>,
}

/// Full generative specification: transfer bank, constant baseline rate per
/// code, latent groups and their prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub transfer: TransferBank,
    pub baseline: Vec<f64>,
    pub groups: Vec<Group>,
    pub prior: Vec<f64>,
}

impl ModelSpec {
    pub fn new(
        transfer: TransferBank,
        baseline: Vec<f64>,
        groups: Vec<Group>,
        prior: Vec<f64>,
    ) -> Result<Self> {
        let spec = ModelSpec {
            transfer,
            baseline,
            groups,
            prior,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn d(&self) -> usize {
        self.transfer.d
    }

    pub fn k(&self) -> usize {
        self.transfer.k
    }

    pub fn validate(&self) -> Result<()> {
        self.transfer.validate()?;
        if self.baseline.len() != self.d() {
            return Err(Error::InvalidModel(format!(
                "baseline has {} entries, expected d = {}",
                self.baseline.len(),
                self.d()
            )));
        }
        if self.baseline.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidModel("baseline rates must be finite and >= 0".into()));
        }
        if self.groups.len() < 2 {
            return Err(Error::InvalidModel("at least two groups are required".into()));
        }
        for (i, g) in self.groups.iter().enumerate() {
            if self.groups[..i].iter().any(|h| h.label == g.label) {
                return Err(Error::InvalidModel(format!("duplicate group label {:?}", g.label)));
            }
            if g.mu.len() != self.k() {
                return Err(Error::InvalidModel(format!(
                    "group {:?} has {} latent rates, expected k = {}",
                    g.label,
                    g.mu.len(),
                    self.k()
                )));
            }
            if g.mu.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
                return Err(Error::InvalidModel(format!(
                    "group {:?} has a negative or non-finite latent rate",
                    g.label
                )));
            }
        }
        if self.prior.len() != self.groups.len() {
            return Err(Error::InvalidModel(format!(
                "prior has {} entries for {} groups",
                self.prior.len(),
                self.groups.len()
            )));
        }
        if self.prior.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::InvalidModel("every prior entry must be > 0".into()));
        }
        let total: f64 = self.prior.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidModel(format!("prior sums to {total}, not 1")));
        }
        Ok(())
    }

    pub fn group_index(&self, label: &str) -> Option<usize> {
        self.groups.iter().position(|g| g.label == label)
    }

    /// Stationary mean intensity of every code in group `g`:
    /// `nu_j + sum_l mu_l a_{jl} int beta`.
    pub fn mean_intensity(&self, g: usize) -> Vec<f64> {
        let integral = self.transfer.kernel_integral();
        let mu = &self.groups[g].mu;
        (0..self.d())
            .map(|j| {
                self.baseline[j]
                    + integral
                        * mu.iter()
                            .enumerate()
                            .map(|(l, m)| m * self.transfer.coefficient(j, l))
                            .sum::<f64>()
            })
            .collect()
    }
}

/// How two group rate vectors are placed at a given separation `delta`
/// along `u = (1, -1, 0, ...) / sqrt(2)` (or `u = 1` when `k = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateDesign {
    /// Group 0 sits at the base rates, group 1 at `base + delta u`.
    #[default]
    Anchored,
    /// `base -/+ (delta / 2) u`, centred on the base rates.
    Symmetric,
}

/// Latent rates for two groups separated by `delta` in Euclidean norm. Both
/// designs keep the total latent rate identical across groups.
pub fn two_group_rates(base: &[f64], delta: f64, design: RateDesign) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = base.len();
    if k == 0 {
        return Err(Error::InvalidModel("base latent rate vector is empty".into()));
    }
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(Error::InvalidModel(format!("separation {delta} must be finite and >= 0")));
    }
    let mut dir = vec![0.0; k];
    if k == 1 {
        dir[0] = 1.0;
    } else {
        dir[0] = std::f64::consts::FRAC_1_SQRT_2;
        dir[1] = -std::f64::consts::FRAC_1_SQRT_2;
    }
    let shift = |step: f64| -> Vec<f64> { base.iter().zip(&dir).map(|(b, u)| b + step * u).collect() };
    let (lo, hi) = match design {
        RateDesign::Anchored => (base.to_vec(), shift(delta)),
        RateDesign::Symmetric => (shift(-0.5 * delta), shift(0.5 * delta)),
    };
    if lo.iter().chain(&hi).any(|m| *m < 0.0) {
        return Err(Error::InvalidModel(format!(
            "separation {delta} is too large for base rates {base:?} under the {design:?} design: \
             a latent rate would be negative"
        )));
    }
    Ok((lo, hi))
}

/// Two equally likely groups labelled "0" and "1" separated by `delta`.
pub fn two_group_model(
    transfer: TransferBank,
    baseline: Vec<f64>,
    base_mu: &[f64],
    delta: f64,
    design: RateDesign,
) -> Result<ModelSpec> {
    let (mu0, mu1) = two_group_rates(base_mu, delta, design)?;
    ModelSpec::new(
        transfer,
        baseline,
        vec![
            Group {
                label: "0".into(),
                mu: mu0,
            },
            Group {
                label: "1".into(),
                mu: mu1,
            },
        ],
        vec![0.5, 0.5],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;

    fn bank(kernel: TransferKernel) -> TransferBank {
        TransferBank::new(vec![vec![0.4, 0.1], vec![0.2, 0.3]], kernel).unwrap()
    }

    #[test]
    fn kernels_vanish_outside_support() {
        for kernel in TransferKernel::ALL {
            let b = bank(kernel);
            assert_eq!(b.kernel_value(-1e-12), 0.0);
            assert_eq!(b.kernel_value(-3.0), 0.0);
            assert_eq!(b.kernel_value(b.support_radius), 0.0);
            assert_eq!(b.kernel_value(b.support_radius + 1.0), 0.0);
            assert!(b.kernel_value(0.0) >= 0.0);
        }
    }

    #[test]
    fn sup_bounds_the_kernel() {
        for kernel in TransferKernel::ALL {
            let b = bank(kernel);
            let max = (0..100_000)
                .map(|i| b.kernel_value(i as f64 * b.support_radius / 100_000.0))
                .fold(0.0, f64::max);
            assert!(max <= kernel.sup(), "{kernel}: {max} > {}", kernel.sup());
            assert!(kernel.sup() - max < 0.01, "{kernel}: loose bound");
        }
    }

    #[test]
    fn kernel_integrals_match_closed_forms() {
        let cases = [
            (TransferKernel::Gauss, (PI / 2.0).sqrt()),
            (TransferKernel::SqrtRamp, 1.0 / 3.0),
            (TransferKernel::LinRamp, 0.5),
            (TransferKernel::Exp4, (1.0 - 1.0 / 16.0) / 4f64.ln()),
        ];
        for (kernel, exact) in cases {
            let v = bank(kernel).kernel_integral();
            assert!((v - exact).abs() < 1e-8, "{kernel}: {v} vs {exact}");
        }
    }

    #[test]
    fn gauss_autocorrelation_matches_quadrature() {
        let b = bank(TransferKernel::Gauss);
        for tau in [0.0, 0.3, -1.2, 2.5, 5.0] {
            let lag = f64::abs(tau);
            let q = quad::integrate(
                |s| b.kernel_value(s) * b.kernel_value(s - lag),
                lag,
                6.0,
                1e-12,
            );
            assert!((b.kernel_autocorrelation(tau) - q).abs() < 1e-8);
        }
        assert!((b.kernel_autocorrelation(0.0) - PI.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn lin_ramp_autocorrelation_closed_form() {
        // int_lag^1 (1-s)(1-s+lag) ds = (1-lag)^3/3 + lag (1-lag)^2 / 2
        let b = bank(TransferKernel::LinRamp);
        for lag in [0.0, 0.25, 0.5, 0.9] {
            let u: f64 = 1.0 - lag;
            let exact = u.powi(3) / 3.0 + lag * u * u / 2.0;
            assert!((b.kernel_autocorrelation(lag) - exact).abs() < 1e-9);
        }
        assert_eq!(b.kernel_autocorrelation(1.0), 0.0);
    }

    #[test]
    fn fourier_at_zero_is_integral() {
        for kernel in TransferKernel::ALL {
            let b = bank(kernel);
            let f = b.kernel_fourier(0.0);
            assert!((f.re - b.kernel_integral()).abs() < 1e-9);
            assert!(f.im.abs() < 1e-12);
        }
    }

    #[test]
    fn lin_ramp_fourier_closed_form() {
        // int_0^1 (1-t) e^{-iwt} dt = 1/(iw) - (1 - e^{-iw})/(iw)^2 ... via direct formula
        let b = bank(TransferKernel::LinRamp);
        let xi = 0.7;
        let w = 2.0 * PI * xi;
        let iw = Complex::new(0.0, w);
        let e = Complex::new(w.cos(), -w.sin());
        let exact = Complex::new(1.0, 0.0) / iw - (Complex::new(1.0, 0.0) - e) / (iw * iw);
        let f = b.kernel_fourier(xi);
        assert!((f - exact).norm() < 1e-10, "{f} vs {exact}");
    }

    #[test]
    fn rejects_bad_models() {
        let t = bank(TransferKernel::Gauss);
        let groups = vec![
            Group { label: "a".into(), mu: vec![1.0, 1.0] },
            Group { label: "b".into(), mu: vec![0.5, 1.5] },
        ];
        assert!(ModelSpec::new(t.clone(), vec![0.1, 0.1], groups.clone(), vec![0.5, 0.5]).is_ok());
        let err = ModelSpec::new(t.clone(), vec![0.1, 0.1], groups.clone(), vec![0.5, 0.5 + 1e-10]);
        assert!(err.is_err());
        let err = ModelSpec::new(t.clone(), vec![0.1, 0.1], groups.clone(), vec![1.0, 0.0]);
        assert!(err.is_err());
        let mut neg = groups.clone();
        neg[0].mu[1] = -0.1;
        assert!(ModelSpec::new(t.clone(), vec![0.1, 0.1], neg, vec![0.5, 0.5]).is_err());
        assert!(ModelSpec::new(t.clone(), vec![0.1], groups.clone(), vec![0.5, 0.5]).is_err());
        assert!(ModelSpec::new(t, vec![0.1, 0.1], groups[..1].to_vec(), vec![1.0]).is_err());
        assert!(TransferBank::new(vec![vec![0.1, -0.2]], TransferKernel::Gauss).is_err());
    }

    #[test]
    fn two_group_rates_have_requested_separation() {
        for design in [RateDesign::Anchored, RateDesign::Symmetric] {
            let (a, b) = two_group_rates(&[1.0, 1.0], 1.2, design).unwrap();
            let dist = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            assert!((dist - 1.2).abs() < 1e-12);
            assert!((a.iter().sum::<f64>() - b.iter().sum::<f64>()).abs() < 1e-12);
        }
        let (a, _) = two_group_rates(&[1.0, 1.0], 1.2, RateDesign::Anchored).unwrap();
        assert_eq!(a, vec![1.0, 1.0]);
        // anchored at (1, 1) the second group leaves the orthant past sqrt(2)
        assert!(two_group_rates(&[1.0, 1.0], 1.6, RateDesign::Anchored).is_err());
        assert!(two_group_rates(&[1.0, 1.0], 1.6, RateDesign::Symmetric).is_ok());
        assert!(two_group_rates(&[1.0, 1.0], 3.0, RateDesign::Symmetric).is_err());
        assert!(two_group_rates(&[1.0, 1.0], -0.1, RateDesign::Symmetric).is_err());
    }

    #[test]
    fn random_bank_in_range() {
        let mut rng = seeded_rng(3, 0);
        let b = TransferBank::random_uniform(50, 3, TransferKernel::Exp4, 0.0, 0.5, &mut rng).unwrap();
        assert!(b.coefficients.iter().flatten().all(|a| (0.0..0.5).contains(a)));
    }
}
