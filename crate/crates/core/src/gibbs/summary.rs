//! Posterior summaries: moment-matched Beta pairs and effective sample sizes.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::ParamKey;
use crate::model::BetaPrior;
use crate::stats::{mean, sample_variance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSummary {
    pub name: String,
    pub key: ParamKey,
    pub mean: f64,
    pub sd: f64,
    pub alpha_hat: f64,
    pub beta_hat: f64,
    /// `alpha_hat + beta_hat` minus the reference prior's pseudo-counts.
    pub n_hat: f64,
    pub prior: BetaPrior,
    pub rhat: Option<f64>,
}

/// Beta(α, β) with mean `m` and standard deviation `s`.
pub fn moment_match_beta(m: f64, s: f64) -> Result<(f64, f64)> {
    if !(m > 0.0 && m < 1.0) {
        return Err(Error::MomentMatch(format!("mean {m} outside (0, 1)")));
    }
    let var = s * s;
    if !(var > 0.0) {
        return Err(Error::MomentMatch(format!("sd {s} is not positive")));
    }
    if var >= m * (1.0 - m) {
        return Err(Error::MomentMatch(format!("variance {var} ≥ m(1 - m) = {}", m * (1.0 - m))));
    }
    let nu = m * (1.0 - m) / var - 1.0;
    Ok((m * nu, (1.0 - m) * nu))
}

/// Dirichlet concentrations from component means and standard deviations.
///
/// Each component's Beta marginal implies its own total ν_k; a Dirichlet has
/// a single total, so the average of the ν_k is used and the means are kept
/// exactly. The result is an approximation whenever the ν_k disagree.
pub fn moment_match_dirichlet(means: &[f64], sds: &[f64]) -> Result<Vec<f64>> {
    if means.len() != sds.len() || means.len() < 2 {
        return Err(Error::MomentMatch(format!(
            "{} means and {} sds for a Dirichlet",
            means.len(),
            sds.len()
        )));
    }
    let sum: f64 = means.iter().sum();
    if !((sum - 1.0).abs() < 1e-9) {
        return Err(Error::MomentMatch(format!("means sum to {sum}, not 1")));
    }
    let mut nus = Vec::with_capacity(means.len());
    for (&m, &s) in means.iter().zip(sds) {
        let (a, b) = moment_match_beta(m, s)?;
        nus.push(a + b);
    }
    let total = mean(&nus);
    Ok(means.iter().map(|m| m / sum * total).collect())
}

/// Mean, sample SD, moment-matched Beta and n̂ of one scalar parameter.
pub fn summarize(key: ParamKey, draws: &[f64], prior: BetaPrior) -> Result<ParameterSummary> {
    let name = key.to_string();
    if draws.len() < 2 {
        return Err(Error::InvalidConfig(format!("`{name}` needs at least 2 draws")));
    }
    if draws.iter().all(|&d| d == draws[0]) {
        return Err(Error::DegenerateChain(name));
    }
    let m = mean(draws);
    let sd = sample_variance(draws).sqrt();
    let (alpha_hat, beta_hat) = moment_match_beta(m, sd)?;
    Ok(ParameterSummary {
        name,
        key,
        mean: m,
        sd,
        alpha_hat,
        beta_hat,
        n_hat: alpha_hat + beta_hat - prior.total(),
        prior,
        rhat: None,
    })
}

/// Fixed-width table: means and SDs to two decimals, α̂, β̂ and n̂ rounded.
pub fn format_summary_table(summaries: &[ParameterSummary]) -> String {
    let width = summaries.iter().map(|s| s.name.chars().count()).max().unwrap_or(0).max(9);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:>5}  {:>5}  {:>6}  {:>6}  {:>6}  {:>5}",
        "Parameter", "Mean", "SD", "Alpha", "Beta", "n", "R-hat"
    );
    for s in summaries {
        let rhat = s.rhat.map_or("-".to_string(), |r| format!("{r:.2}"));
        let _ = writeln!(
            out,
            "{:<width$}  {:>5.2}  {:>5.2}  {:>6.0}  {:>6.0}  {:>6.0}  {:>5}",
            s.name, s.mean, s.sd, s.alpha_hat, s.beta_hat, s.n_hat, rhat
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_beta() {
        // ν = 1 ⇔ s² = m(1 - m) / 2
        let (a, b) = moment_match_beta(0.5, (0.125f64).sqrt()).unwrap();
        assert!((a - 0.5).abs() < 1e-12 && (b - 0.5).abs() < 1e-12);
        let (a, b) = moment_match_beta(0.5, (0.25f64 / 3.0).sqrt()).unwrap();
        assert!((a - 1.0).abs() < 1e-12 && (b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_moments() {
        assert!(moment_match_beta(0.5, 0.5).is_err());
        assert!(moment_match_beta(0.0, 0.1).is_err());
        assert!(moment_match_beta(0.3, 0.0).is_err());
        assert!(moment_match_dirichlet(&[0.5, 0.6], &[0.1, 0.1]).is_err());
    }

    #[test]
    fn degenerate_draws() {
        let key = ParamKey::Pi {
            task: "1".into(),
            positive: true,
        };
        let err = summarize(key, &[0.3; 10], BetaPrior { alpha: 21.0, beta: 6.0 }).unwrap_err();
        assert!(matches!(err, Error::DegenerateChain(_)));
    }

    #[test]
    fn table_layout() {
        let key = ParamKey::Pi {
            task: "4".into(),
            positive: true,
        };
        let s = ParameterSummary {
            name: key.to_string(),
            key,
            mean: 0.923,
            sd: 0.0183,
            alpha_hat: 193.0,
            beta_hat: 16.0,
            n_hat: 182.0,
            prior: BetaPrior { alpha: 21.0, beta: 6.0 },
            rhat: Some(1.001),
        };
        let t = format_summary_table(&[s]);
        let row = t.lines().nth(1).unwrap();
        assert!(row.contains(" 0.92 ") && row.contains(" 193 ") && row.contains(" 182 ") && row.ends_with("1.00"));
    }
}
