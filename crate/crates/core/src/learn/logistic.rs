use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticConfig {
    /// Ridge strength on the weights (the bias is not penalized).
    pub reg: f64,
    /// Gradient-norm stopping tolerance.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            reg: 1e-4,
            tol: 1e-8,
            max_iter: 100,
        }
    }
}

/// Binary logistic regression fitted on standardized features.
///
/// `weights` and `bias` act on `(x - mean) / scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub iterations: usize,
    pub objective: f64,
    pub grad_norm: f64,
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
#[inline]
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Average logistic loss plus `reg ||w||^2 / 2` on already standardized rows.
pub fn logistic_objective(rows: &[Vec<f64>], labels: &[bool], weights: &[f64], bias: f64, reg: f64) -> f64 {
    let n = rows.len() as f64;
    let loss: f64 = rows
        .iter()
        .zip(labels)
        .map(|(x, &y)| {
            let z = bias + x.iter().zip(weights).map(|(a, b)| a * b).sum::<f64>();
            softplus(z) - if y { z } else { 0.0 }
        })
        .sum();
    loss / n + 0.5 * reg * weights.iter().map(|w| w * w).sum::<f64>()
}

pub fn train_logistic(features: &[Vec<f64>], labels: &[bool], cfg: &LogisticConfig) -> Result<LogisticModel> {
    let n = features.len();
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: labels.len(),
        });
    }
    let positives = labels.iter().filter(|l| **l).count();
    if positives == 0 || positives == n {
        return Err(Error::SingleClass {
            positives,
            negatives: n - positives,
        });
    }
    let k = features[0].len();
    if let Some(bad) = features.iter().find(|f| f.len() != k) {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: bad.len(),
        });
    }
    if features.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig("features must be finite".into()));
    }
    if !(cfg.reg >= 0.0 && cfg.tol > 0.0) {
        return Err(Error::InvalidConfig(format!("invalid logistic config {cfg:?}")));
    }

    let nf = n as f64;
    let mean: Vec<f64> = (0..k).map(|c| features.iter().map(|f| f[c]).sum::<f64>() / nf).collect();
    let scale: Vec<f64> = (0..k)
        .map(|c| {
            let var = features.iter().map(|f| (f[c] - mean[c]).powi(2)).sum::<f64>() / nf;
            if var > 0.0 {
                var.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let rows: Vec<Vec<f64>> = features
        .iter()
        .map(|f| (0..k).map(|c| (f[c] - mean[c]) / scale[c]).collect())
        .collect();

    // parameter vector: k weights then the bias
    let p = k + 1;
    let mut theta = DVector::<f64>::zeros(p);
    let objective = |t: &DVector<f64>| logistic_objective(&rows, labels, &t.as_slice()[..k], t[k], cfg.reg);
    let mut obj = objective(&theta);
    let mut iterations = 0;
    loop {
        let mut grad = DVector::<f64>::zeros(p);
        let mut hess = DMatrix::<f64>::zeros(p, p);
        for (x, &y) in rows.iter().zip(labels) {
            let z = theta[k] + x.iter().zip(theta.iter()).map(|(a, b)| a * b).sum::<f64>();
            let prob = sigmoid(z);
            let r = prob - if y { 1.0 } else { 0.0 };
            let w = prob * (1.0 - prob);
            for a in 0..p {
                let xa = if a < k { x[a] } else { 1.0 };
                grad[a] += r * xa;
                for b in 0..=a {
                    let xb = if b < k { x[b] } else { 1.0 };
                    hess[(a, b)] += w * xa * xb;
                }
            }
        }
        grad /= nf;
        hess /= nf;
        for a in 0..p {
            for b in 0..a {
                hess[(b, a)] = hess[(a, b)];
            }
        }
        for a in 0..k {
            grad[a] += cfg.reg * theta[a];
            hess[(a, a)] += cfg.reg;
        }
        let grad_norm = grad.norm();
        let hint = "the classes may be perfectly separable; use reg > 0";
        if cfg.reg == 0.0 && separates(&rows, labels, &theta) {
            // the unpenalized optimum is at infinity; any stopping point is arbitrary
            return Err(Error::NotConverged {
                iterations,
                grad_norm,
                hint,
            });
        }
        if grad_norm <= cfg.tol {
            return Ok(LogisticModel {
                weights: theta.as_slice()[..k].to_vec(),
                bias: theta[k],
                mean,
                scale,
                iterations,
                objective: obj,
                grad_norm,
            });
        }
        if iterations >= cfg.max_iter {
            return Err(Error::NotConverged {
                iterations,
                grad_norm,
                hint: if cfg.reg == 0.0 { hint } else { "raise max_iter or loosen tol" },
            });
        }
        iterations += 1;
        let step = match hess.cholesky() {
            Some(ch) => ch.solve(&grad),
            None => {
                return Err(Error::NotConverged {
                    iterations,
                    grad_norm,
                    hint,
                })
            }
        };
        // backtracking on the objective. Once the predicted decrease is below
        // what the objective can resolve, comparisons are rounding noise, so
        // take the full Newton step and let the gradient test decide.
        let slope = grad.dot(&step);
        let accepted = slope <= 64.0 * f64::EPSILON * obj.abs().max(1.0);
        let mut t = 1.0;
        while !accepted && t > 1e-12 {
            let candidate = &theta - &step * t;
            let c_obj = objective(&candidate);
            if c_obj <= obj - 1e-4 * t * slope {
                theta = candidate;
                obj = c_obj;
                break;
            }
            t *= 0.5;
        }
        if accepted || t <= 1e-12 {
            theta -= &step;
            obj = objective(&theta);
        }
    }
}

fn separates(rows: &[Vec<f64>], labels: &[bool], theta: &DVector<f64>) -> bool {
    let k = theta.len() - 1;
    rows.iter().zip(labels).all(|(x, &y)| {
        let z = theta[k] + x.iter().zip(theta.iter()).map(|(a, b)| a * b).sum::<f64>();
        if y {
            z > 0.0
        } else {
            z < 0.0
        }
    })
}

/// Predicted probability of the positive class.
pub fn predict_score(model: &LogisticModel, feature: &[f64]) -> Result<f64> {
    if feature.len() != model.weights.len() {
        return Err(Error::DimensionMismatch {
            expected: model.weights.len(),
            found: feature.len(),
        });
    }
    let z = model.bias
        + feature
            .iter()
            .zip(&model.weights)
            .zip(model.mean.iter().zip(&model.scale))
            .map(|((x, w), (m, s))| w * (x - m) / s)
            .sum::<f64>();
    Ok(sigmoid(z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;
    use rand::Rng as _;

    #[test]
    fn separable_sign_problem() {
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..100 {
            features.push(vec![-1.0]);
            labels.push(false);
            features.push(vec![1.0]);
            labels.push(true);
        }
        let m = train_logistic(&features, &labels, &LogisticConfig::default()).unwrap();
        assert!(m.weights[0] > 0.0);
        assert!(m.grad_norm <= 1e-8);
        let correct = features
            .iter()
            .zip(&labels)
            .filter(|(f, &y)| (predict_score(&m, f).unwrap() > 0.5) == y)
            .count();
        assert_eq!(correct, 200);
    }

    #[test]
    fn separable_without_ridge_reports_guidance() {
        let features = vec![vec![-1.0], vec![-2.0], vec![1.0], vec![2.0]];
        let labels = vec![false, false, true, true];
        let cfg = LogisticConfig {
            reg: 0.0,
            ..Default::default()
        };
        assert!(matches!(
            train_logistic(&features, &labels, &cfg),
            Err(Error::NotConverged { .. })
        ));
    }

    #[test]
    fn uninformative_features_give_base_rate() {
        let features = vec![vec![2.5, -1.0]; 40];
        let labels: Vec<bool> = (0..40).map(|i| i < 10).collect();
        let m = train_logistic(&features, &labels, &LogisticConfig::default()).unwrap();
        assert!(m.weights.iter().all(|w| w.abs() < 1e-12));
        assert!((predict_score(&m, &[2.5, -1.0]).unwrap() - 0.25).abs() < 1e-9);
    }

    #[test]
    fn null_model_scores_half() {
        let m = LogisticModel {
            weights: vec![0.0, 0.0],
            bias: 0.0,
            mean: vec![0.0; 2],
            scale: vec![1.0; 2],
            iterations: 0,
            objective: 0.0,
            grad_norm: 0.0,
        };
        assert_eq!(predict_score(&m, &[3.0, -4.0]).unwrap(), 0.5);
        assert!(predict_score(&m, &[1.0]).is_err());
        let mut prev = 0.0;
        for b in [-3.0, -1.0, 0.0, 1.0, 3.0] {
            let s = predict_score(&LogisticModel { bias: b, ..m.clone() }, &[1.0, 1.0]).unwrap();
            assert!(s > prev);
            prev = s;
        }
    }

    #[test]
    fn serialization_round_trip_preserves_scores() {
        let mut rng = seeded_rng(2, 0);
        let features: Vec<Vec<f64>> = (0..50).map(|_| vec![rng.random::<f64>() * 4.0, rng.random()]).collect();
        let labels: Vec<bool> = features.iter().map(|f| f[0] + rng.random::<f64>() > 2.5).collect();
        let m = train_logistic(&features, &labels, &LogisticConfig::default()).unwrap();
        let back: LogisticModel = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        for f in &features {
            assert_eq!(predict_score(&m, f).unwrap(), predict_score(&back, f).unwrap());
        }
    }

    #[test]
    fn optimum_matches_grid_search() {
        let mut rng = seeded_rng(8, 0);
        for _ in 0..5 {
            // pre-standardized 1-dim data so the oracle works in raw coordinates
            let mut xs: Vec<f64> = (0..30).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let mu = xs.iter().sum::<f64>() / 30.0;
            xs.iter_mut().for_each(|x| *x -= mu);
            let sd = (xs.iter().map(|x| x * x).sum::<f64>() / 30.0).sqrt();
            xs.iter_mut().for_each(|x| *x /= sd);
            let labels: Vec<bool> = xs.iter().map(|x| rng.random::<f64>() < sigmoid(1.5 * x + 0.3)).collect();
            let rows: Vec<Vec<f64>> = xs.iter().map(|x| vec![*x]).collect();
            let cfg = LogisticConfig {
                reg: 0.01,
                ..Default::default()
            };
            let m = train_logistic(&rows, &labels, &cfg).unwrap();
            assert!(m.grad_norm <= 1e-8);

            let (mut cw, mut cb, mut half) = (0.0, 0.0, 8.0);
            let mut best = f64::INFINITY;
            for _ in 0..30 {
                let (mut bw, mut bb) = (cw, cb);
                for i in 0..=40 {
                    for j in 0..=40 {
                        let w = cw - half + 2.0 * half * i as f64 / 40.0;
                        let b = cb - half + 2.0 * half * j as f64 / 40.0;
                        let o = logistic_objective(&rows, &labels, &[w], b, cfg.reg);
                        if o < best {
                            best = o;
                            bw = w;
                            bb = b;
                        }
                    }
                }
                cw = bw;
                cb = bb;
                half *= 0.25;
            }
            assert!((m.objective - best).abs() < 1e-6);
            assert!(m.objective <= best + 1e-12);
        }
    }

    #[test]
    fn rejects_single_class() {
        assert!(matches!(
            train_logistic(&[vec![1.0], vec![2.0]], &[true, true], &LogisticConfig::default()),
            Err(Error::SingleClass { .. })
        ));
    }

    #[test]
    fn newton_finishes_when_objective_cannot_resolve_the_step() {
        // near the optimum the predicted decrease drops below rounding in the
        // objective; a tight tolerance must still be reached in a few steps
        use rand_distr::{Distribution, StandardNormal};
        for seed in 0..40 {
            let mut rng = seeded_rng(seed, 9);
            let sep = 0.1 + (seed % 5) as f64 * 0.1;
            let mut features = Vec::new();
            let mut labels = Vec::new();
            for i in 0..500 {
                let s = if i % 2 == 0 { sep } else { -sep };
                let a: f64 = StandardNormal.sample(&mut rng);
                let b: f64 = StandardNormal.sample(&mut rng);
                features.push(vec![a + s, 0.6 * a + 0.8 * b + s * rng.random::<f64>()]);
                labels.push(i % 2 == 0);
            }
            let cfg = LogisticConfig { tol: 1e-12, max_iter: 12, ..Default::default() };
            let m = train_logistic(&features, &labels, &cfg).unwrap();
            assert!(m.iterations <= 8, "seed {seed}: {} iterations", m.iterations);
        }
    }
}
