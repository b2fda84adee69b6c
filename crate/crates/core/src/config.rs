use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symmetric smoothing kernel for the cross-covariance estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothingKernel {
    /// Standard normal density.
    #[default]
    Gaussian,
    /// `3/4 (1 - x^2)` on `[-1, 1]`.
    Epanechnikov,
}

impl SmoothingKernel {
    /// Kernel value, even in `x` bit-for-bit.
    #[inline]
    pub fn eval(self, x: f64) -> f64 {
        let x2 = x * x;
        match self {
            SmoothingKernel::Gaussian => (-0.5 * x2).exp() * (0.5 / PI).sqrt(),
            SmoothingKernel::Epanechnikov => {
                if x2 <= 1.0 {
                    0.75 * (1.0 - x2)
                } else {
                    0.0
                }
            }
        }
    }

    fn natural_support(self) -> f64 {
        match self {
            SmoothingKernel::Gaussian => f64::INFINITY,
            SmoothingKernel::Epanechnikov => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorConfig {
    pub bandwidth: f64,
    pub smoothing_kernel: SmoothingKernel,
    pub lag_threshold: f64,
    pub lag_grid_step: f64,
    /// Standardized radius past which the smoothing kernel counts as zero.
    pub kernel_truncation_radius: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            bandwidth: 1.0,
            smoothing_kernel: SmoothingKernel::Gaussian,
            lag_threshold: 5.0,
            lag_grid_step: 0.05,
            kernel_truncation_radius: 4.0,
        }
    }
}

impl EstimatorConfig {
    /// Bandwidth `c1 * T^(-1/5)`.
    pub fn scheduled_bandwidth(window_end: f64, c1: f64) -> f64 {
        c1 * window_end.powf(-0.2)
    }

    pub fn with_bandwidth(mut self, bandwidth: f64) -> Self {
        self.bandwidth = bandwidth;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} must be finite and > 0, got {v}")))
            }
        };
        positive("bandwidth", self.bandwidth)?;
        positive("lag_threshold", self.lag_threshold)?;
        positive("lag_grid_step", self.lag_grid_step)?;
        positive("kernel_truncation_radius", self.kernel_truncation_radius)?;
        let ratio = self.lag_threshold / self.lag_grid_step;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::InvalidConfig(format!(
                "lag_grid_step {} does not divide lag_threshold {}",
                self.lag_grid_step, self.lag_threshold
            )));
        }
        Ok(())
    }

    /// Number of positive grid lags `M`; the grid is `m * step` for
    /// `m = -M..=M`.
    pub fn half_lags(&self) -> usize {
        (self.lag_threshold / self.lag_grid_step).round() as usize
    }

    pub fn lags(&self) -> Vec<f64> {
        let m = self.half_lags() as i64;
        (-m..=m).map(|i| i as f64 * self.lag_grid_step).collect()
    }

    /// Radius, in time units, of the smoothing kernel after truncation.
    pub fn kernel_reach(&self) -> f64 {
        self.kernel_truncation_radius
            .min(self.smoothing_kernel.natural_support())
            * self.bandwidth
    }

    /// Truncated smoothing kernel at standardized argument `x`.
    #[inline]
    pub fn kernel(&self, x: f64) -> f64 {
        if x.abs() > self.kernel_truncation_radius {
            0.0
        } else {
            self.smoothing_kernel.eval(x)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpectralConfig {
    pub frequency: f64,
    pub embed_dim: usize,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig {
            frequency: 1.0,
            embed_dim: 2,
        }
    }
}

impl SpectralConfig {
    pub fn validate(&self, d: usize) -> Result<()> {
        if !self.frequency.is_finite() {
            return Err(Error::InvalidConfig("frequency must be finite".into()));
        }
        if self.embed_dim == 0 || self.embed_dim > d {
            return Err(Error::InvalidConfig(format!(
                "embed_dim must lie in [1, d = {d}], got {}",
                self.embed_dim
            )));
        }
        Ok(())
    }
}
