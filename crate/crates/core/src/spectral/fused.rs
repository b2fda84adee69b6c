//! Direct event-pairs-to-spectral-matrix path.
//!
//! Transforming the estimated curve is linear, so each event pair at
//! separation `s` contributes
//! `g(s) = sum_m w_m K((s + tau_m) / h) e^{-i 2 pi xi tau_m}` to one entry
//! of the spectral matrix and `conj(g(s))` to the transposed entry. `g` is
//! smooth between the points where a lag enters or leaves the truncated
//! kernel's support, so it is tabulated once as piecewise Chebyshev series
//! and each pair then costs one short polynomial evaluation instead of a pass
//! over the whole lag grid.

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix};
use rayon::prelude::*;

use super::{leading_eigenvalues, trapezoid_weights, Embedding, SpectralMatrix, C64};
use crate::config::{EstimatorConfig, SpectralConfig};
use crate::error::{Error, Result};
use crate::events::EventSequence;

const NODES: usize = 16;

#[derive(Debug, Clone)]
struct PairKernelTable {
    max_sep: f64,
    breaks: Vec<f64>,
    /// Per piece: `NODES` real monomial coefficients in the local variable
    /// `x in [-1, 1]`, then `NODES` imaginary ones.
    coeffs: Vec<f64>,
    /// Per piece: centre and inverse half-width of its interval.
    mids: Vec<f64>,
    inv_halves: Vec<f64>,
    /// Coefficients needed by the worst piece; every piece is evaluated to
    /// this length so the recurrence has a fixed trip count.
    terms: usize,
    /// Inverse piece width when the pieces form a uniform grid.
    uniform: Option<f64>,
}

impl PairKernelTable {
    fn build(est: &EstimatorConfig, xi: f64) -> Self {
        let lags = est.lags();
        let weights = trapezoid_weights(lags.len(), est.lag_grid_step);
        let phases: Vec<C64> = lags
            .iter()
            .zip(&weights)
            .map(|(&tau, &w)| Complex::from_polar(w, -2.0 * PI * xi * tau))
            .collect();
        let reach = est.kernel_reach();
        let max_sep = est.lag_threshold + reach;
        let direct = |s: f64| -> C64 {
            let mut acc = Complex::new(0.0, 0.0);
            for (tau, ph) in lags.iter().zip(&phases) {
                let k = est.kernel((s + tau) / est.bandwidth);
                if k != 0.0 {
                    acc += ph * k;
                }
            }
            acc
        };

        let tol = 1e-12 * max_sep;
        let mut cuts = vec![0.0, max_sep];
        for &tau in &lags {
            for b in [reach - tau, -reach - tau] {
                if b > tol && b < max_sep - tol {
                    cuts.push(b);
                }
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() <= tol);
        let max_width = 0.5 * est.bandwidth;
        let mut breaks = vec![0.0];
        for w in cuts.windows(2) {
            let pieces = ((w[1] - w[0]) / max_width).ceil().max(1.0) as usize;
            for i in 1..=pieces {
                breaks.push(if i == pieces {
                    w[1]
                } else {
                    w[0] + (w[1] - w[0]) * i as f64 / pieces as f64
                });
            }
        }

        let mut coeffs = Vec::with_capacity((breaks.len() - 1) * 2 * NODES);
        let nodes: Vec<f64> = (0..NODES)
            .map(|k| (PI * (k as f64 + 0.5) / NODES as f64).cos())
            .collect();
        let mut scale = 0.0f64;
        for w in breaks.windows(2) {
            let (mid, half) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
            let vals: Vec<C64> = nodes.iter().map(|x| direct(mid + half * x)).collect();
            scale = vals.iter().fold(scale, |m, v| m.max(v.norm()));
            let mut re = [0.0; NODES];
            let mut im = [0.0; NODES];
            for j in 0..NODES {
                let mut acc = Complex::new(0.0, 0.0);
                for (k, v) in vals.iter().enumerate() {
                    acc += v * (PI * j as f64 * (k as f64 + 0.5) / NODES as f64).cos();
                }
                let scale = if j == 0 { 1.0 } else { 2.0 } / NODES as f64;
                re[j] = acc.re * scale;
                im[j] = acc.im * scale;
            }
            coeffs.extend_from_slice(&re);
            coeffs.extend_from_slice(&im);
        }
        // trailing coefficients whose total weight is below rounding are skipped
        let terms = coeffs
            .chunks(2 * NODES)
            .map(|c| {
                let mut tail = 0.0;
                let mut keep = NODES;
                while keep > 1 {
                    tail += c[keep - 1].abs() + c[NODES + keep - 1].abs();
                    if tail > 1e-14 * scale {
                        break;
                    }
                    keep -= 1;
                }
                keep
            })
            .max()
            .unwrap_or(1);

        let mut mono = vec![0.0; coeffs.len()];
        for (cheb, out) in coeffs.chunks(NODES).zip(mono.chunks_mut(NODES)) {
            chebyshev_to_monomial(&cheb[..terms], &mut out[..terms]);
        }

        let width = breaks[1] - breaks[0];
        let uniform = breaks
            .iter()
            .enumerate()
            .all(|(i, b)| (b - i as f64 * width).abs() <= tol)
            .then(|| 1.0 / width);
        PairKernelTable {
            max_sep,
            mids: breaks.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect(),
            inv_halves: breaks.windows(2).map(|w| 2.0 / (w[1] - w[0])).collect(),
            breaks,
            coeffs: mono,
            terms,
            uniform,
        }
    }

    /// Index of the piece holding `s`, searching forward from `hint`.
    #[inline]
    fn locate(&self, s: f64, mut hint: usize) -> usize {
        let last = self.breaks.len() - 2;
        if let Some(inv) = self.uniform {
            return ((s * inv) as usize).min(last);
        }
        while hint < last && s > self.breaks[hint + 1] {
            hint += 1;
        }
        hint
    }

    #[inline(always)]
    fn eval_fixed<const N: usize>(&self, s: f64, piece: usize) -> C64 {
        let x = (s - self.mids[piece]) * self.inv_halves[piece];
        let c = &self.coeffs[piece * 2 * NODES..(piece + 1) * 2 * NODES];
        let (re, im) = c.split_at(NODES);
        Complex::new(estrin::<N>(re, x), estrin::<N>(im, x))
    }

    /// Adds `g(t_b - t_a)` into `acc[code_a * d + code_b]` for every ordered
    /// pair of events `a` before `b` within `max_sep`.
    fn accumulate<const N: usize>(&self, events: &[(f64, usize)], d: usize, acc: &mut [C64]) {
        for (i, &(t, p)) in events.iter().enumerate() {
            let row = &mut acc[p * d..(p + 1) * d];
            let mut piece = 0;
            for &(tp, q) in &events[i + 1..] {
                let s = tp - t;
                if s > self.max_sep {
                    break;
                }
                piece = self.locate(s, piece);
                row[q] += self.eval_fixed::<N>(s, piece);
            }
        }
    }

    fn accumulate_all(&self, events: &[(f64, usize)], d: usize, acc: &mut [C64]) {
        match self.terms {
            0..=4 => self.accumulate::<4>(events, d, acc),
            5..=6 => self.accumulate::<6>(events, d, acc),
            7..=8 => self.accumulate::<8>(events, d, acc),
            9..=10 => self.accumulate::<10>(events, d, acc),
            11..=12 => self.accumulate::<12>(events, d, acc),
            _ => self.accumulate::<NODES>(events, d, acc),
        }
    }

    #[cfg(test)]
    fn eval(&self, s: f64) -> C64 {
        self.eval_fixed::<NODES>(s, self.locate(s, 0))
    }
}

/// Rewrites `sum_j c_j T_j(x)` as `sum_j m_j x^j`.
fn chebyshev_to_monomial(cheb: &[f64], mono: &mut [f64]) {
    let n = cheb.len();
    mono.fill(0.0);
    let mut prev = vec![0.0; n];
    let mut cur = vec![0.0; n];
    prev[0] = 1.0;
    if n > 1 {
        cur[1] = 1.0;
    }
    for (j, &c) in cheb.iter().enumerate() {
        let t = if j == 0 { &prev } else { &cur };
        for (m, v) in mono.iter_mut().zip(t) {
            *m += c * v;
        }
        if j >= 1 && j + 1 < n {
            // T_{j+1} = 2x T_j - T_{j-1}
            let mut next = vec![0.0; n];
            for i in 0..n - 1 {
                next[i + 1] += 2.0 * cur[i];
            }
            for i in 0..n {
                next[i] -= prev[i];
            }
            prev = std::mem::replace(&mut cur, next);
        }
    }
}

/// Polynomial with coefficients `c[..N]` at `x`, by pairwise (Estrin)
/// reduction so the dependency chain is logarithmic in `N`.
#[inline(always)]
fn estrin<const N: usize>(c: &[f64], x: f64) -> f64 {
    let mut buf = [0.0; N];
    buf.copy_from_slice(&c[..N]);
    let mut len = N;
    let mut p = x;
    while len > 1 {
        let half = len.div_ceil(2);
        for i in 0..half {
            let hi = if 2 * i + 1 < len { buf[2 * i + 1] } else { 0.0 };
            buf[i] = buf[2 * i] + hi * p;
        }
        len = half;
        p *= p;
    }
    buf[0]
}

/// Fourier-Eigen embeddings computed straight from event pairs.
///
/// Agrees with estimating the covariance curve and transforming it
/// (`fourier_eigen_embedding`) up to floating-point rounding, but never
/// materializes the `d x d x lags` curve.
#[derive(Debug, Clone)]
pub struct FourierEigenEmbedder {
    est: EstimatorConfig,
    sp: SpectralConfig,
    table: PairKernelTable,
    /// Transform of a constant curve equal to 1.
    unit_transform: f64,
}

impl FourierEigenEmbedder {
    pub fn new(est: EstimatorConfig, sp: SpectralConfig) -> Result<Self> {
        est.validate()?;
        if !sp.frequency.is_finite() || sp.embed_dim == 0 {
            return Err(Error::InvalidConfig(format!("invalid spectral config {sp:?}")));
        }
        let lags = est.lags();
        let weights = trapezoid_weights(lags.len(), est.lag_grid_step);
        let unit_transform = lags
            .iter()
            .zip(&weights)
            .map(|(tau, w)| w * (2.0 * PI * sp.frequency * tau).cos())
            .sum();
        Ok(FourierEigenEmbedder {
            table: PairKernelTable::build(&est, sp.frequency),
            est,
            sp,
            unit_transform,
        })
    }

    pub fn estimator_config(&self) -> &EstimatorConfig {
        &self.est
    }

    pub fn spectral_config(&self) -> &SpectralConfig {
        &self.sp
    }

    /// Estimated spectral matrix; exactly Hermitian by construction.
    pub fn spectral_matrix(&self, seq: &EventSequence) -> Result<SpectralMatrix> {
        let t_end = seq.window_end();
        let d = seq.dim();
        let mut acc = vec![Complex::new(0.0, 0.0); d * d];
        self.table.accumulate_all(&seq.flatten(), d, &mut acc);
        let counts = seq.counts();
        let scale = 1.0 / (t_end * self.est.bandwidth);
        let entries = DMatrix::from_fn(d, d, |j, k| {
            let mean = counts[j] as f64 * counts[k] as f64 / (t_end * t_end);
            // acc only holds pairs whose earlier event is in the row code
            (acc[j * d + k] + acc[k * d + j].conj()) * scale - Complex::new(mean * self.unit_transform, 0.0)
        });
        SpectralMatrix::new(self.sp.frequency, entries)
    }

    pub fn embed(&self, seq: &EventSequence) -> Result<Embedding> {
        if self.sp.embed_dim > seq.dim() {
            return Err(Error::InvalidConfig(format!(
                "embed_dim {} exceeds code dimension {}",
                self.sp.embed_dim,
                seq.dim()
            )));
        }
        leading_eigenvalues(&self.spectral_matrix(seq)?, self.sp.embed_dim)
    }

    /// Embeds every sequence in parallel; output order follows input order.
    pub fn embed_all<'a, I>(&self, seqs: I) -> Result<Vec<Embedding>>
    where
        I: IntoParallelIterator<Item = &'a EventSequence>,
        I::Iter: IndexedParallelIterator,
    {
        seqs.into_par_iter().map(|s| self.embed(s)).collect()
    }
}
