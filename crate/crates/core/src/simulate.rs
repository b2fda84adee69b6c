//! Cohort simulation from the latent factor point process.
//!
//! A patient is generated in two stages: a homogeneous Poisson latent process
//! at the group's rates, then each code as an inhomogeneous Poisson process
//! whose rate is the baseline plus the transfer-filtered latent history. The
//! second stage uses thinning under a piecewise-constant envelope.

use rand::Rng as _;
use rand_distr::{Distribution, Exp, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{Dataset, EventSequence, Record};
use crate::model::ModelSpec;
use crate::rng::{seeded_rng, Rng};

/// Acceptance ratios above `1 + RATIO_SLACK` mean the envelope is broken.
const RATIO_SLACK: f64 = 1e-9;

/// Draws a group index with probability `prior[g]`.
pub fn sample_group(prior: &[f64], rng: &mut Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (g, p) in prior.iter().enumerate() {
        acc += p;
        if u < acc {
            return g;
        }
    }
    // u landed in the rounding gap above the last cumulative sum
    prior.iter().rposition(|p| *p > 0.0).unwrap_or(0)
}

/// Homogeneous Poisson process with rate `mu[l]` in component `l` on `[0, T]`.
pub fn sample_latent(mu: &[f64], window_end: f64, rng: &mut Rng) -> Result<EventSequence> {
    let mut events = Vec::with_capacity(mu.len());
    for &rate in mu {
        let mean = rate * window_end;
        let count = if mean > 0.0 {
            Poisson::new(mean)
                .map_err(|e| Error::InvalidModel(format!("latent rate {rate}: {e}")))?
                .sample(rng) as usize
        } else {
            0
        };
        let mut times: Vec<f64> = (0..count).map(|_| window_end * rng.random::<f64>()).collect();
        times.sort_by(f64::total_cmp);
        events.push(times);
    }
    EventSequence::new(window_end, events)
}

/// Rate of code `j` at time `t`: `nu_j + sum_l sum_{u < t} omega_{jl}(t - u)`.
///
/// Only latent events strictly before `t` and within the transfer support
/// contribute; each component is scanned over that window only.
pub fn conditional_intensity(model: &ModelSpec, latent: &EventSequence, j: usize, t: f64) -> f64 {
    let bank = &model.transfer;
    let b0 = bank.support_radius;
    let mut rate = model.baseline[j];
    for l in 0..bank.k {
        let a = bank.coefficient(j, l);
        if a == 0.0 {
            continue;
        }
        rate += a * history_sum(bank, latent.component(l), t, b0);
    }
    rate
}

#[inline]
fn history_sum(bank: &crate::model::TransferBank, times: &[f64], t: f64, b0: f64) -> f64 {
    let hi = times.partition_point(|&u| u < t);
    let lo = times[..hi].partition_point(|&u| t - u >= b0);
    times[lo..hi].iter().map(|&u| bank.kernel_value(t - u)).sum()
}

/// Observed codes over the whole latent window `[0, T]`.
pub fn simulate_observed(model: &ModelSpec, latent: &EventSequence, rng: &mut Rng) -> Result<EventSequence> {
    simulate_observed_from(model, latent, 0.0, rng)
}

/// Observed codes on `[start, T]`, returned shifted to `[0, T - start]`.
///
/// Latent events before `start` still drive the intensity, which is how the
/// burn-in makes the observed window stationary.
pub fn simulate_observed_from(
    model: &ModelSpec,
    latent: &EventSequence,
    start: f64,
    rng: &mut Rng,
) -> Result<EventSequence> {
    let bank = &model.transfer;
    if latent.dim() != bank.k {
        return Err(Error::DimensionMismatch {
            expected: bank.k,
            found: latent.dim(),
        });
    }
    let end = latent.window_end();
    if !(0.0 <= start && start < end) {
        return Err(Error::InvalidConfig(format!(
            "observation start {start} must lie in [0, {end})"
        )));
    }
    let b0 = bank.support_radius;
    let sup = bank.kernel.sup();
    let segments = envelope_segments(latent, start, end, b0);

    let mut observed = Vec::with_capacity(bank.d);
    for j in 0..bank.d {
        let nu = model.baseline[j];
        let coef = &bank.coefficients[j];
        let mut times = Vec::new();
        for seg in &segments {
            let bound = nu
                + sup
                    * coef
                        .iter()
                        .zip(&seg.active)
                        .map(|(a, n)| a * *n as f64)
                        .sum::<f64>();
            if bound <= 0.0 {
                continue;
            }
            let gap = Exp::new(bound).expect("positive rate");
            let mut t = seg.start;
            loop {
                t += gap.sample(rng);
                if t >= seg.end {
                    break;
                }
                let rate = conditional_intensity(model, latent, j, t);
                let ratio = rate / bound;
                if ratio > 1.0 + RATIO_SLACK {
                    return Err(Error::DominatingBound { code: j, time: t, ratio });
                }
                if rng.random::<f64>() < ratio {
                    times.push(t - start);
                }
            }
        }
        observed.push(times);
    }
    EventSequence::new(end - start, observed)
}

struct Segment {
    start: f64,
    end: f64,
    /// Latent events per component inside `(t - b0, t)` for `t` in the segment.
    active: Vec<usize>,
}

/// Splits `[start, end)` at every latent event time `u` and expiry `u + b0`;
/// the active latent set is constant between consecutive cut points.
fn envelope_segments(latent: &EventSequence, start: f64, end: f64, b0: f64) -> Vec<Segment> {
    let k = latent.dim();
    // (time, component, +1 entering / -1 leaving)
    let mut changes: Vec<(f64, usize, i32)> = Vec::new();
    let mut active = vec![0usize; k];
    for l in 0..k {
        for &u in latent.component(l) {
            if u < start && u + b0 > start {
                active[l] += 1;
            }
            if u >= start && u < end {
                changes.push((u, l, 1));
            }
            let expiry = u + b0;
            if expiry > start && expiry < end && u < end {
                changes.push((expiry, l, -1));
            }
        }
    }
    changes.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)));

    let mut segments = Vec::with_capacity(changes.len() + 1);
    let mut cursor = start;
    for (time, l, delta) in changes {
        if time > cursor {
            segments.push(Segment {
                start: cursor,
                end: time,
                active: active.clone(),
            });
            cursor = time;
        }
        if delta > 0 {
            active[l] += 1;
        } else {
            active[l] -= 1;
        }
    }
    if end > cursor {
        segments.push(Segment {
            start: cursor,
            end,
            active,
        });
    }
    segments
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObservationTimes {
    Common(f64),
    PerPatient(Vec<f64>),
}

impl ObservationTimes {
    fn get(&self, i: usize) -> f64 {
        match self {
            ObservationTimes::Common(t) => *t,
            ObservationTimes::PerPatient(ts) => ts[i],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationPlan {
    pub model: ModelSpec,
    pub n: usize,
    pub observation_times: ObservationTimes,
    pub seed: u64,
    /// Assign groups in exact prior proportions (largest remainder) instead
    /// of sampling them.
    #[serde(default)]
    pub stratified: bool,
    /// Latent history simulated before time 0; defaults to the transfer
    /// support radius.
    #[serde(default)]
    pub burn_in: Option<f64>,
}

impl SimulationPlan {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.n == 0 {
            return Err(Error::InvalidConfig("cohort size must be >= 1".into()));
        }
        match &self.observation_times {
            ObservationTimes::Common(t) if !(t.is_finite() && *t > 0.0) => {
                return Err(Error::InvalidConfig(format!("observation time {t} must be > 0")));
            }
            ObservationTimes::PerPatient(ts) => {
                if ts.len() != self.n {
                    return Err(Error::InvalidConfig(format!(
                        "{} observation times for {} patients",
                        ts.len(),
                        self.n
                    )));
                }
                if ts.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
                    return Err(Error::InvalidConfig("observation times must be > 0".into()));
                }
            }
            _ => {}
        }
        if let Some(b) = self.burn_in {
            if !(b.is_finite() && b >= 0.0) {
                return Err(Error::InvalidConfig(format!("burn-in {b} must be >= 0")));
            }
        }
        Ok(())
    }

    fn burn_in(&self) -> f64 {
        self.burn_in.unwrap_or(self.model.transfer.support_radius)
    }
}

/// Group counts in exact prior proportions, remainders to the largest
/// fractional parts (ties to the lower index).
pub fn stratified_counts(prior: &[f64], n: usize) -> Vec<usize> {
    let raw: Vec<f64> = prior.iter().map(|p| p * n as f64).collect();
    let mut counts: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();
    let mut left = n - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..prior.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = raw[a] - raw[a].floor();
        let fb = raw[b] - raw[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for g in order.into_iter().cycle() {
        if left == 0 {
            break;
        }
        counts[g] += 1;
        left -= 1;
    }
    counts
}

/// One patient of group `g` observed for `window_end` after `burn_in`.
pub fn simulate_patient(
    model: &ModelSpec,
    g: usize,
    window_end: f64,
    burn_in: f64,
    rng: &mut Rng,
) -> Result<EventSequence> {
    let latent = sample_latent(&model.groups[g].mu, window_end + burn_in, rng)?;
    simulate_observed_from(model, &latent, burn_in, rng)
}

/// Simulates `plan.n` labelled patients; patient `i` uses stream `i` of the
/// plan seed, so output is independent of thread scheduling.
pub fn simulate_cohort(plan: &SimulationPlan) -> Result<Dataset> {
    plan.validate()?;
    let model = &plan.model;
    let burn_in = plan.burn_in();
    let assigned: Option<Vec<usize>> = plan.stratified.then(|| {
        stratified_counts(&model.prior, plan.n)
            .into_iter()
            .enumerate()
            .flat_map(|(g, c)| std::iter::repeat_n(g, c))
            .collect()
    });
    let records = (0..plan.n)
        .into_par_iter()
        .map(|i| {
            let mut rng = seeded_rng(plan.seed, i as u64);
            let g = match &assigned {
                Some(groups) => groups[i],
                None => sample_group(&model.prior, &mut rng),
            };
            let events = simulate_patient(model, g, plan.observation_times.get(i), burn_in, &mut rng)?;
            Ok(Record {
                id: i.to_string(),
                events,
                label: Some(model.groups[g].label.clone()),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{two_group_model, RateDesign, Group, TransferBank, TransferKernel};

    fn model(coefs: Vec<Vec<f64>>, nu: Vec<f64>, kernel: TransferKernel, mu: Vec<f64>) -> ModelSpec {
        let k = mu.len();
        ModelSpec::new(
            TransferBank::new(coefs, kernel).unwrap(),
            nu,
            vec![
                Group { label: "0".into(), mu: mu.clone() },
                Group { label: "1".into(), mu: vec![0.0; k] },
            ],
            vec![0.5, 0.5],
        )
        .unwrap()
    }

    #[test]
    fn degenerate_prior_always_picks_group_zero() {
        let mut rng = seeded_rng(1, 0);
        assert!((0..1000).all(|_| sample_group(&[1.0, 0.0], &mut rng) == 0));
    }

    #[test]
    fn group_frequencies_follow_prior() {
        for prior in [[0.5, 0.5], [0.3, 0.7]] {
            let mut rng = seeded_rng(2, 0);
            let mut counts = [0usize; 2];
            for _ in 0..10_000 {
                counts[sample_group(&prior, &mut rng)] += 1;
            }
            for g in 0..2 {
                let frac = counts[g] as f64 / 10_000.0;
                assert!((frac - prior[g]).abs() < 0.02, "{prior:?}: {frac}");
            }
        }
    }

    #[test]
    fn zero_rate_latent_is_empty() {
        let mut rng = seeded_rng(3, 0);
        let s = sample_latent(&[0.0, 0.0], 50.0, &mut rng).unwrap();
        assert_eq!(s.total_events(), 0);
        assert_eq!(s.dim(), 2);
    }

    #[test]
    fn latent_counts_are_poisson() {
        let mut rng = seeded_rng(4, 0);
        let reps = 500;
        let total: usize = (0..reps)
            .map(|_| {
                let s = sample_latent(&[2.0], 100.0, &mut rng).unwrap();
                assert!(s.component(0).iter().all(|t| (0.0..=100.0).contains(t)));
                s.total_events()
            })
            .sum();
        let mean = total as f64 / reps as f64;
        let se = (200.0f64 / reps as f64).sqrt();
        assert!((mean - 200.0).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn intensity_without_history_is_baseline() {
        let m = model(vec![vec![0.4]], vec![0.1], TransferKernel::Gauss, vec![1.0]);
        let latent = EventSequence::empty(1, 10.0).unwrap();
        assert_eq!(conditional_intensity(&m, &latent, 0, 5.0), 0.1);
    }

    #[test]
    fn intensity_sums_past_latent_events() {
        let m = model(vec![vec![0.0, 0.4]], vec![0.1], TransferKernel::Gauss, vec![1.0, 1.0]);
        let latent = EventSequence::new(10.0, vec![vec![], vec![1.0]]).unwrap();
        let v = conditional_intensity(&m, &latent, 0, 2.0);
        assert!((v - (0.1 + 0.4 * (-0.5f64).exp())).abs() < 1e-15);
        // strict history: an event exactly at t is excluded
        assert_eq!(conditional_intensity(&m, &latent, 0, 1.0), 0.1);
    }

    #[test]
    fn pure_baseline_counts_are_poisson() {
        let m = model(vec![vec![0.0]], vec![0.5], TransferKernel::Gauss, vec![1.0]);
        let mut rng = seeded_rng(5, 0);
        let reps = 40;
        let total: usize = (0..reps)
            .map(|_| {
                let latent = sample_latent(&[1.0], 1000.0, &mut rng).unwrap();
                simulate_observed(&m, &latent, &mut rng).unwrap().total_events()
            })
            .sum();
        let mean = total as f64 / reps as f64;
        let se = (500.0 / reps as f64).sqrt();
        assert!((mean - 500.0).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn empty_latent_and_zero_baseline_is_empty() {
        let m = model(vec![vec![0.3], vec![0.2]], vec![0.0, 0.0], TransferKernel::Gauss, vec![1.0]);
        let mut rng = seeded_rng(6, 0);
        let latent = EventSequence::empty(1, 100.0).unwrap();
        let obs = simulate_observed(&m, &latent, &mut rng).unwrap();
        assert_eq!(obs.total_events(), 0);
        assert_eq!(obs.dim(), 2);
    }

    #[test]
    fn first_moment_matches_stationary_rate() {
        // d = 2, k = 1: E[dN_j]/dt = nu_j + a_j mu int beta
        let m = model(vec![vec![0.4], vec![0.25]], vec![0.1, 0.2], TransferKernel::Gauss, vec![1.0]);
        let expected = m.mean_intensity(0);
        let mut rng = seeded_rng(7, 0);
        let t = 2000.0;
        let b0 = m.transfer.support_radius;
        let reps = 4;
        let mut counts = [0usize; 2];
        for _ in 0..reps {
            let s = simulate_patient(&m, 0, t, b0, &mut rng).unwrap();
            for j in 0..2 {
                counts[j] += s.component(j).len();
            }
        }
        for j in 0..2 {
            let rate = counts[j] as f64 / (reps as f64 * t);
            assert!((rate / expected[j] - 1.0).abs() < 0.05, "code {j}: {rate} vs {}", expected[j]);
        }
    }

    #[test]
    fn envelope_holds_for_every_kernel() {
        for kernel in TransferKernel::ALL {
            let bank = TransferBank::new(vec![vec![0.5, 0.5], vec![0.1, 0.4]], kernel).unwrap();
            let m = two_group_model(bank, vec![0.0, 0.05], &[3.0, 3.0], 0.5, RateDesign::Symmetric).unwrap();
            let mut rng = seeded_rng(8, 0);
            for _ in 0..5 {
                simulate_patient(&m, 1, 200.0, kernel.default_support(), &mut rng).unwrap();
            }
        }
    }

    #[test]
    fn stratified_assignment_is_exact() {
        assert_eq!(stratified_counts(&[0.5, 0.5], 4), vec![2, 2]);
        assert_eq!(stratified_counts(&[0.5, 0.5], 5), vec![3, 2]);
        assert_eq!(stratified_counts(&[0.2, 0.3, 0.5], 10), vec![2, 3, 5]);
        let m = model(vec![vec![0.2]], vec![0.1], TransferKernel::LinRamp, vec![1.0]);
        let plan = SimulationPlan {
            model: m,
            n: 4,
            observation_times: ObservationTimes::Common(10.0),
            seed: 1,
            stratified: true,
            burn_in: None,
        };
        let data = simulate_cohort(&plan).unwrap();
        let labels = data.labels().unwrap();
        assert_eq!(labels.iter().filter(|l| **l == "0").count(), 2);
    }

    #[test]
    fn cohort_is_deterministic() {
        let bank = TransferBank::new(vec![vec![0.3, 0.1]; 5], TransferKernel::Exp4).unwrap();
        let m = two_group_model(bank, vec![0.1; 5], &[1.0, 1.0], 0.5, RateDesign::Symmetric).unwrap();
        let plan = SimulationPlan {
            model: m,
            n: 6,
            observation_times: ObservationTimes::PerPatient(vec![5.0, 10.0, 15.0, 20.0, 25.0, 30.0]),
            seed: 11,
            stratified: false,
            burn_in: None,
        };
        let a = simulate_cohort(&plan).unwrap();
        let b = simulate_cohort(&plan).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.records[3].events.window_end(), 20.0);
    }

    #[test]
    fn observed_codes_are_conditionally_independent() {
        // Given one latent path, bin counts of two codes should be uncorrelated
        // across repeated observed draws.
        let m = model(vec![vec![0.5], vec![0.5]], vec![0.2, 0.2], TransferKernel::Gauss, vec![1.0]);
        let mut rng = seeded_rng(9, 0);
        let latent = sample_latent(&[1.0], 100.0, &mut rng).unwrap();
        let reps = 400;
        let bins = 20;
        let mut cov_sum = 0.0;
        let mut var_sum = [0.0; 2];
        let draws: Vec<Vec<Vec<f64>>> = (0..reps)
            .map(|_| {
                let obs = simulate_observed(&m, &latent, &mut rng).unwrap();
                (0..2)
                    .map(|j| {
                        let mut c = vec![0.0; bins];
                        for &t in obs.component(j) {
                            c[((t / 5.0) as usize).min(bins - 1)] += 1.0;
                        }
                        c
                    })
                    .collect()
            })
            .collect();
        for b in 0..bins {
            let mean: Vec<f64> = (0..2)
                .map(|j| draws.iter().map(|d| d[j][b]).sum::<f64>() / reps as f64)
                .collect();
            for d in &draws {
                cov_sum += (d[0][b] - mean[0]) * (d[1][b] - mean[1]);
                var_sum[0] += (d[0][b] - mean[0]).powi(2);
                var_sum[1] += (d[1][b] - mean[1]).powi(2);
            }
        }
        let corr = cov_sum / (var_sum[0] * var_sum[1]).sqrt();
        // pooled over 20 bins x 400 draws; sd of the estimate ~ 0.011
        assert!(corr.abs() < 0.05, "conditional correlation {corr}");
    }
}
