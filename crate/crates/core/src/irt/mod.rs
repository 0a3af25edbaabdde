//! Rasch-model counterparts: a unidimensional θ on a fixed grid, adaptive
//! item selection, feature-based difficulty models and on-line calibration.

mod calibrate;
mod cat;
mod lltm;
mod pool;

pub use calibrate::{
    calibrate_rasch_online, calibrate_rasch_startup, ItemEstimate, NormalPrior, RaschCalibration, RaschMcmcConfig,
};
pub use cat::{run_cat, select_next, CatConfig, CatStep, CatTrace, Selection, StopReason};
pub use lltm::{lltm_fit, lltm_predict, FeatureEffects};
pub use pool::{ItemPool, PoolEntry};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A calibrated item: difficulty β in logits and optional LLTM features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaschItem {
    pub id: String,
    pub beta: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub features: Vec<f64>,
}

impl RaschItem {
    pub fn new(id: &str, beta: f64) -> Result<Self> {
        if !beta.is_finite() {
            return Err(Error::InvalidParameter(format!("β of `{id}` is not finite")));
        }
        Ok(RaschItem {
            id: id.to_string(),
            beta,
            features: Vec::new(),
        })
    }
}

/// P(correct | θ, β) = logistic(θ − β).
pub fn rasch_prob(theta: f64, beta: f64) -> f64 {
    logistic(theta - beta)
}

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// ln P(x | θ, β) without cancellation in the tails.
pub fn rasch_log_prob(theta: f64, beta: f64, x: u8) -> f64 {
    let z = if x == 1 { theta - beta } else { beta - theta };
    // ln logistic(z) = -ln(1 + e^{-z})
    if z >= 0.0 {
        -(-z).exp().ln_1p()
    } else {
        z - z.exp().ln_1p()
    }
}

/// A discrete distribution for θ on fixed, strictly increasing points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaGrid {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl ThetaGrid {
    pub fn new(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != weights.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} grid points, {} weights",
                points.len(),
                weights.len()
            )));
        }
        if points.iter().any(|p| !p.is_finite()) || points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("grid points must be finite and strictly increasing".to_string()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidParameter("grid weights must be finite and nonnegative".to_string()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("grid weights sum to {total}")));
        }
        Ok(ThetaGrid { points, weights })
    }

    /// N(mean, sd²) discretized on `n` equally spaced points over `[lo, hi]`.
    pub fn normal(mean: f64, sd: f64, n: usize, lo: f64, hi: f64) -> Result<Self> {
        if n < 2 || !(lo < hi) || !(sd > 0.0) {
            return Err(Error::InvalidParameter(format!("grid N({mean}, {sd}²) on {n} points over [{lo}, {hi}]")));
        }
        let step = (hi - lo) / (n - 1) as f64;
        let points: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
        let raw: Vec<f64> = points.iter().map(|x| (-0.5 * ((x - mean) / sd).powi(2)).exp()).collect();
        let total: f64 = raw.iter().sum();
        ThetaGrid::new(points, raw.iter().map(|w| w / total).collect())
    }

    /// Standard normal on 61 points over [−4, 4].
    pub fn standard() -> Self {
        ThetaGrid::normal(0.0, 1.0, 61, -4.0, 4.0).expect("valid default grid")
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Posterior after response `x` to an item of difficulty `beta`.
    pub fn update(&self, beta: f64, x: u8) -> Result<ThetaGrid> {
        if x > 1 {
            return Err(Error::InvalidParameter(format!("response {x} is not 0/1")));
        }
        let mut w: Vec<f64> = self
            .points
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| {
                let p = rasch_prob(t, beta);
                w * if x == 1 { p } else { 1.0 - p }
            })
            .collect();
        let total: f64 = w.iter().sum();
        if !total.is_finite() {
            return Err(Error::NonFinite("grid posterior mass".to_string()));
        }
        if total <= 0.0 {
            return Err(Error::ZeroMass);
        }
        w.iter_mut().for_each(|v| *v /= total);
        Ok(ThetaGrid {
            points: self.points.clone(),
            weights: w,
        })
    }

    /// (mean, variance).
    pub fn moments(&self) -> (f64, f64) {
        let m: f64 = self.points.iter().zip(&self.weights).map(|(t, w)| t * w).sum();
        let v: f64 = self.points.iter().zip(&self.weights).map(|(t, w)| w * (t - m) * (t - m)).sum();
        (m, v.max(0.0))
    }

    /// Predictive probability of a correct response.
    pub fn predictive(&self, beta: f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * rasch_prob(t, beta))
            .sum()
    }
}

/// E over x of Var(θ | current responses, x) for an item of difficulty `beta`.
pub fn expected_posterior_variance(grid: &ThetaGrid, beta: f64) -> f64 {
    // accumulate both outcomes' unnormalized moments in one pass
    let (mut m1, mut s1, mut q1, mut m0, mut s0, mut q0) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for (&t, &w) in grid.points.iter().zip(&grid.weights) {
        let p = rasch_prob(t, beta);
        let (a, b) = (w * p, w * (1.0 - p));
        m1 += a;
        s1 += a * t;
        q1 += a * t * t;
        m0 += b;
        s0 += b * t;
        q0 += b * t * t;
    }
    let var = |m: f64, s: f64, q: f64| {
        if m <= 0.0 {
            0.0
        } else {
            (q / m - (s / m) * (s / m)).max(0.0)
        }
    };
    // the unnormalized masses are exactly the predictive probabilities
    m1 * var(m1, s1, q1) + m0 * var(m0, s0, q0)
}
