//! Lag-indexed cross-covariance: the kernel-smoothing estimator and the
//! closed-form population curve it targets.

use std::io::Write;
use std::path::Path;

use crate::config::EstimatorConfig;
use crate::error::{Error, Result};
use crate::events::EventSequence;
use crate::model::ModelSpec;

/// Cross-covariance matrices `V(tau)` on a symmetric lag grid.
///
/// Values are stored lag-major: `values[(m * dim + j) * dim + j']`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceCurve {
    dim: usize,
    lags: Vec<f64>,
    values: Vec<f64>,
}

impl CovarianceCurve {
    pub fn zeros(dim: usize, lags: Vec<f64>) -> Result<Self> {
        check_symmetric_grid(&lags)?;
        let len = lags.len() * dim * dim;
        Ok(CovarianceCurve {
            dim,
            lags,
            values: vec![0.0; len],
        })
    }

    pub fn from_values(dim: usize, lags: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        check_symmetric_grid(&lags)?;
        if values.len() != lags.len() * dim * dim {
            return Err(Error::DimensionMismatch {
                expected: lags.len() * dim * dim,
                found: values.len(),
            });
        }
        Ok(CovarianceCurve { dim, lags, values })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lags(&self) -> &[f64] {
        &self.lags
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, m: usize, j: usize, jp: usize) -> f64 {
        self.values[(m * self.dim + j) * self.dim + jp]
    }

    #[inline]
    fn get_mut(&mut self, m: usize, j: usize, jp: usize) -> &mut f64 {
        &mut self.values[(m * self.dim + j) * self.dim + jp]
    }

    /// The series `tau -> V_{j j'}(tau)` over the grid.
    pub fn entry_series(&self, j: usize, jp: usize) -> Vec<f64> {
        (0..self.lags.len()).map(|m| self.get(m, j, jp)).collect()
    }

    /// Index of lag 0.
    pub fn zero_index(&self) -> usize {
        self.lags.len() / 2
    }

    /// Largest `|V_{jj'}(tau) - V_{j'j}(-tau)|` over the grid.
    pub fn swap_symmetry_defect(&self) -> f64 {
        let n = self.lags.len();
        let mut worst = 0.0f64;
        for m in 0..n {
            for j in 0..self.dim {
                for jp in 0..self.dim {
                    worst = worst.max((self.get(m, j, jp) - self.get(n - 1 - m, jp, j)).abs());
                }
            }
        }
        worst
    }

    /// Frobenius norm of the whole curve (all lags, all entries).
    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `||self - reference||_F / ||reference||_F` over all lags and entries.
    pub fn relative_frobenius_error(&self, reference: &CovarianceCurve) -> Result<f64> {
        self.check_compatible(reference)?;
        let diff = self
            .values
            .iter()
            .zip(&reference.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        Ok(diff / reference.frobenius_norm())
    }

    /// Entrywise mean of several curves on the same grid.
    pub fn mean(curves: &[CovarianceCurve]) -> Result<CovarianceCurve> {
        let first = curves
            .first()
            .ok_or_else(|| Error::InvalidConfig("cannot average zero curves".into()))?;
        let mut out = CovarianceCurve::zeros(first.dim, first.lags.clone())?;
        for c in curves {
            out.check_compatible(c)?;
            for (o, v) in out.values.iter_mut().zip(&c.values) {
                *o += v;
            }
        }
        let n = curves.len() as f64;
        out.values.iter_mut().for_each(|v| *v /= n);
        Ok(out)
    }

    fn check_compatible(&self, other: &CovarianceCurve) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        if self.lags != other.lags {
            return Err(Error::InvalidConfig("curves are on different lag grids".into()));
        }
        Ok(())
    }

    /// Writes `tau,j,j_prime,value` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "tau,j,j_prime,value")?;
        for (m, tau) in self.lags.iter().enumerate() {
            for j in 0..self.dim {
                for jp in 0..self.dim {
                    writeln!(w, "{tau},{j},{jp},{}", self.get(m, j, jp))?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn check_symmetric_grid(lags: &[f64]) -> Result<()> {
    let n = lags.len();
    if n % 2 == 0 {
        return Err(Error::InvalidConfig("lag grid must have odd length and contain 0".into()));
    }
    if lags.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig("lag grid must be strictly ascending".into()));
    }
    let scale = lags[n - 1].abs().max(1.0);
    for m in 0..n {
        if (lags[m] + lags[n - 1 - m]).abs() > 1e-12 * scale {
            return Err(Error::InvalidConfig("lag grid is not symmetric about 0".into()));
        }
    }
    Ok(())
}

/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default)]
struct Neumaier {
    sum: f64,
    carry: f64,
}

impl Neumaier {
    #[inline]
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Kernel-smoothing estimate of the cross-covariance on the grid of `cfg`.
///
/// For lag `tau` and codes `(j, j')` the estimate is
/// `(1 / (T h)) sum K(((t' - t) + tau) / h) - N_j N_j' / T^2` over event
/// pairs `t in N_j, t' in N_j'`, excluding an event paired with itself.
/// Pairs are visited once each by a forward sweep over the merged event
/// list, limited to separations the truncated kernel can reach from the
/// grid, and the `j > j'` blocks are mirrored from `j < j'`, so the swap
/// symmetry `V_{jj'}(tau) = V_{j'j}(-tau)` holds bit-for-bit.
pub fn estimate_cross_covariance(seq: &EventSequence, cfg: &EstimatorConfig) -> Result<CovarianceCurve> {
    cfg.validate()?;
    let t_end = seq.window_end();
    if !(t_end > 0.0) {
        return Err(Error::InvalidEvents("empty observation window".into()));
    }
    let d = seq.dim();
    let lags = cfg.lags();
    let half = cfg.half_lags() as i64;
    let step = cfg.lag_grid_step;
    let h = cfg.bandwidth;
    let reach = cfg.kernel_reach();
    let max_sep = cfg.lag_threshold + reach;
    let mut curve = CovarianceCurve::zeros(d, lags)?;

    // pair sums run to thousands of terms; compensate so the result does not
    // depend on summation order
    let mut sums = vec![Neumaier::default(); curve.values.len()];
    let at = |m: i64, j: usize, jp: usize| ((m + half) as usize * d + j) * d + jp;
    let events = seq.flatten();
    for (i, &(t, p)) in events.iter().enumerate() {
        for &(tp, q) in &events[i + 1..] {
            let s = tp - t;
            if s > max_sep {
                break;
            }
            // grid lags with |s + tau| or |-s + tau| within reach; one extra
            // index each side, the truncated kernel zeroes anything beyond
            let lo = (((-reach - s) / step).floor() as i64 - 1).max(-half);
            let hi = (((reach - s) / step).ceil() as i64 + 1).min(half);
            if p < q {
                for m in lo..=hi {
                    let tau = m as f64 * step;
                    sums[at(m, p, q)].add(cfg.kernel((s + tau) / h));
                }
            } else if p > q {
                // seen from q: t' - t = -s
                for m in -hi..=-lo {
                    let tau = m as f64 * step;
                    sums[at(m, q, p)].add(cfg.kernel((tau - s) / h));
                }
            } else {
                let (lo, hi) = (lo.min(-hi), hi.max(-lo));
                for m in lo..=hi {
                    let tau = m as f64 * step;
                    let acc = &mut sums[at(m, p, p)];
                    acc.add(cfg.kernel((s + tau) / h));
                    acc.add(cfg.kernel((tau - s) / h));
                }
            }
        }
    }
    for (v, acc) in curve.values.iter_mut().zip(&sums) {
        *v = acc.total();
    }

    let counts = seq.counts();
    let n_lags = curve.lags.len();
    let scale = 1.0 / (t_end * h);
    for m in 0..n_lags {
        for j in 0..d {
            for jp in j..d {
                let mean = counts[j] as f64 * counts[jp] as f64 / (t_end * t_end);
                let v = curve.get_mut(m, j, jp);
                *v = *v * scale - mean;
            }
        }
    }
    for m in 0..n_lags {
        for j in 0..d {
            for jp in 0..j {
                let mirrored = curve.get(n_lags - 1 - m, jp, j);
                *curve.get_mut(m, j, jp) = mirrored;
            }
        }
    }
    Ok(curve)
}

/// Population cross-covariance of group `group`:
/// `V_{jj'}(tau) = sum_l mu_l (omega_{jl} * omega_{j'l})(tau)`, where the
/// pairing is the lag correlation `int omega_{jl}(s) omega_{j'l}(s - tau) ds`
/// of the causal transfer functions.
pub fn analytic_cross_covariance(model: &ModelSpec, group: usize, lags: &[f64]) -> Result<CovarianceCurve> {
    model.validate()?;
    let mu = &model
        .groups
        .get(group)
        .ok_or_else(|| Error::InvalidModel(format!("no group with index {group}")))?
        .mu;
    let bank = &model.transfer;
    let d = bank.d;
    let loading: Vec<f64> = (0..d * d)
        .map(|idx| {
            let (j, jp) = (idx / d, idx % d);
            (0..bank.k)
                .map(|l| mu[l] * (bank.coefficient(j, l) * bank.coefficient(jp, l)))
                .sum()
        })
        .collect();
    let mut curve = CovarianceCurve::zeros(d, lags.to_vec())?;
    for (m, &tau) in lags.iter().enumerate() {
        let c = bank.kernel_autocorrelation(tau);
        for (idx, load) in loading.iter().enumerate() {
            curve.values[m * d * d + idx] = c * load;
        }
    }
    Ok(curve)
}
