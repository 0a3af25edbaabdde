//! Item difficulty as a linear function of item features.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::irt::NormalPrior;

/// Least-squares feature effects with residual variance and standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureEffects {
    pub eta: Vec<f64>,
    pub sigma2: f64,
    pub std_errors: Vec<f64>,
}

/// Fits β_j = Σ_k Y_jk η_k + ε_j by least squares. `features[j]` is row j of Y.
pub fn lltm_fit(betas: &[f64], features: &[Vec<f64>]) -> Result<FeatureEffects> {
    let j = betas.len();
    if features.len() != j {
        return Err(Error::DimensionMismatch(format!("{j} difficulties, {} feature rows", features.len())));
    }
    let k = features.first().map_or(0, Vec::len);
    if k == 0 || features.iter().any(|r| r.len() != k) {
        return Err(Error::DimensionMismatch("feature rows must share a nonzero length".to_string()));
    }
    if j < k + 1 {
        return Err(Error::InvalidParameter(format!("{j} items cannot fit {k} effects with a residual variance")));
    }
    if betas.iter().chain(features.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("LLTM input".to_string()));
    }

    let x = DMatrix::from_fn(j, k, |r, c| features[r][c]);
    let y = DVector::from_column_slice(betas);
    let svd = x.clone().svd(true, true);
    let sv = &svd.singular_values;
    let tol = sv.max() * (j.max(k) as f64) * f64::EPSILON;
    let rank = sv.iter().filter(|&&s| s > tol).count();
    if rank < k {
        return Err(Error::RankDeficient { rank, columns: k });
    }
    let eta = svd
        .solve(&y, tol)
        .map_err(|e| Error::InvalidParameter(format!("least squares: {e}")))?;
    let resid = &y - &x * &eta;
    let sigma2 = resid.norm_squared() / (j - k) as f64;

    // (X'X)^{-1} = V diag(1/s²) V'
    let v_t = svd.v_t.as_ref().expect("V computed");
    let std_errors = (0..k)
        .map(|c| {
            let d: f64 = (0..k).map(|r| v_t[(r, c)].powi(2) / sv[r].powi(2)).sum();
            (sigma2 * d).sqrt()
        })
        .collect();
    Ok(FeatureEffects {
        eta: eta.iter().copied().collect(),
        sigma2,
        std_errors,
    })
}

/// Prior for the difficulty of a new item with features `y`: mean y·η,
/// variance σ².
pub fn lltm_predict(y: &[f64], effects: &FeatureEffects) -> Result<NormalPrior> {
    if y.len() != effects.eta.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} features for {} effects",
            y.len(),
            effects.eta.len()
        )));
    }
    Ok(NormalPrior {
        mean: y.iter().zip(&effects.eta).map(|(a, b)| a * b).sum(),
        var: effects.sigma2,
    })
}
