// SPDX-License-Identifier: Apache-2.0

//! Scoring rules for a Gaussian predictive distribution, and point metrics.

use std::f64::consts::PI;

use statrs::function::erf::erfc;

use super::ScoringError;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;

fn std_normal_pdf(w: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * w * w).exp()
}

fn std_normal_cdf(w: f64) -> f64 {
    0.5 * erfc(-w / std::f64::consts::SQRT_2)
}

fn check_finite(values: &[f64]) -> Result<(), ScoringError> {
    match values.iter().find(|v| !v.is_finite()) {
        Some(&v) => Err(ScoringError::InvalidNumber(v)),
        None => Ok(()),
    }
}

fn check_scale(sigma: f64) -> Result<(), ScoringError> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(ScoringError::InvalidScale(sigma))
    }
}

/// Scale of the Gaussian implied by a central interval `[lower, upper]`,
/// taken as `(upper − lower) / 4`.
pub fn sigma_from_interval(lower: f64, upper: f64) -> Result<f64, ScoringError> {
    check_finite(&[lower, upper])?;
    if upper <= lower {
        return Err(ScoringError::DegenerateInterval { lower, upper });
    }
    Ok((upper - lower) / 4.0)
}

/// Normal predictive distribution built from a median and an interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianForecast {
    mu: f64,
    sigma: f64,
}

impl GaussianForecast {
    pub fn new(mu: f64, sigma: f64) -> Result<Self, ScoringError> {
        check_finite(&[mu])?;
        check_scale(sigma)?;
        Ok(Self { mu, sigma })
    }

    pub fn from_interval(pred: f64, lower: f64, upper: f64) -> Result<Self, ScoringError> {
        Self::new(pred, sigma_from_interval(lower, upper)?)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `σ·{ω(2Φ(ω) − 1) + 2φ(ω) − 1/√π}` with `ω = (y − μ)/σ`.
    pub fn crps(&self, y: f64) -> f64 {
        let w = (y - self.mu) / self.sigma;
        self.sigma * (w * (2.0 * std_normal_cdf(w) - 1.0) + 2.0 * std_normal_pdf(w) - FRAC_1_SQRT_PI)
    }

    /// `log(φ(ω)/σ)`, evaluated in log space so it stays finite for large ω.
    pub fn log_score(&self, y: f64) -> f64 {
        let w = (y - self.mu) / self.sigma;
        -0.5 * w * w - 0.5 * (2.0 * PI).ln() - self.sigma.ln()
    }
}

/// Continuous ranked probability score of N(mu, sigma²) at `y`. Lower is better.
pub fn crps_normal(mu: f64, sigma: f64, y: f64) -> Result<f64, ScoringError> {
    check_finite(&[y])?;
    Ok(GaussianForecast::new(mu, sigma)?.crps(y))
}

/// Log predictive density of N(mu, sigma²) at `y`. Higher is better.
pub fn log_score_normal(mu: f64, sigma: f64, y: f64) -> Result<f64, ScoringError> {
    check_finite(&[y])?;
    Ok(GaussianForecast::new(mu, sigma)?.log_score(y))
}

fn paired(pred: &[f64], obs: &[f64]) -> Result<(), ScoringError> {
    if pred.len() != obs.len() {
        return Err(ScoringError::LengthMismatch {
            pred: pred.len(),
            obs: obs.len(),
        });
    }
    if pred.is_empty() {
        return Err(ScoringError::EmptyInput);
    }
    check_finite(pred)?;
    check_finite(obs)
}

/// Mean absolute error.
pub fn mae(pred: &[f64], obs: &[f64]) -> Result<f64, ScoringError> {
    paired(pred, obs)?;
    let sum: f64 = pred.iter().zip(obs).map(|(p, y)| (p - y).abs()).sum();
    Ok(sum / pred.len() as f64)
}

/// Mean squared error.
pub fn mse(pred: &[f64], obs: &[f64]) -> Result<f64, ScoringError> {
    paired(pred, obs)?;
    let sum: f64 = pred.iter().zip(obs).map(|(p, y)| (p - y) * (p - y)).sum();
    Ok(sum / pred.len() as f64)
}
