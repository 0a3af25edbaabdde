//! Rasch difficulty estimation by Metropolis-within-grid sampling.
//!
//! Each sweep draws every examinee's θ exactly from its grid posterior given
//! the current difficulties, then updates each unknown difficulty with one
//! random-walk Metropolis step. Items with known difficulty are never moved.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::responses::ResponseMatrix;
use crate::error::{Error, Result};
use crate::irt::{rasch_log_prob, RaschItem, ThetaGrid};
use crate::stats::{mean, sample_log_categorical, sample_variance, stream_seed};

/// Acceptance rates outside this band produce a warning.
const ACCEPTANCE_BAND: (f64, f64) = (0.05, 0.95);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalPrior {
    pub mean: f64,
    pub var: f64,
}

impl NormalPrior {
    fn log_density(&self, x: f64) -> f64 {
        -0.5 * (x - self.mean).powi(2) / self.var
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RaschMcmcConfig {
    pub chains: usize,
    pub burn_in: usize,
    pub kept: usize,
    pub proposal_sd: f64,
    pub seed: u64,
}

impl Default for RaschMcmcConfig {
    fn default() -> Self {
        RaschMcmcConfig {
            chains: 3,
            burn_in: 1000,
            kept: 2000,
            proposal_sd: 0.2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemEstimate {
    pub id: String,
    pub mean: f64,
    pub sd: f64,
    pub n_responses: usize,
    /// `None` when the item had no responses and was not sampled.
    pub acceptance_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaschCalibration {
    pub items: Vec<ItemEstimate>,
    pub warnings: Vec<String>,
}

impl RaschCalibration {
    /// Posterior means as calibrated items.
    pub fn to_items(&self) -> Result<Vec<RaschItem>> {
        self.items.iter().map(|e| RaschItem::new(&e.id, e.mean)).collect()
    }
}

/// Estimates the difficulties of `new` items, treating `old` items'
/// difficulties as known. Every examinee must have answered an old item.
pub fn calibrate_rasch_online(
    responses: &ResponseMatrix,
    old: &[RaschItem],
    new: &[(String, NormalPrior)],
    grid: &ThetaGrid,
    config: &RaschMcmcConfig,
) -> Result<RaschCalibration> {
    let known = old
        .iter()
        .map(|it| Ok((responses.task_index(&it.id)?, it.beta)))
        .collect::<Result<Vec<_>>>()?;
    for i in 0..responses.n_examinees() {
        if known.iter().all(|&(j, _)| responses.get(i, j).is_none()) {
            return Err(Error::InvalidParameter(format!(
                "examinee `{}` answered no item of known difficulty",
                responses.examinees()[i]
            )));
        }
    }
    sample(responses, &known, new, grid, config)
}

/// Startup calibration of every item in `items` with independent N(0, 4)
/// priors.
pub fn calibrate_rasch_startup(
    responses: &ResponseMatrix,
    items: &[String],
    grid: &ThetaGrid,
    config: &RaschMcmcConfig,
) -> Result<RaschCalibration> {
    let prior = NormalPrior { mean: 0.0, var: 4.0 };
    let new: Vec<(String, NormalPrior)> = items.iter().map(|id| (id.clone(), prior)).collect();
    sample(responses, &[], &new, grid, config)
}

fn sample(
    responses: &ResponseMatrix,
    known: &[(usize, f64)],
    new: &[(String, NormalPrior)],
    grid: &ThetaGrid,
    config: &RaschMcmcConfig,
) -> Result<RaschCalibration> {
    if config.chains == 0 || config.kept < 2 || !(config.proposal_sd > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "chains ({}) ≥ 1, kept ({}) ≥ 2 and proposal_sd ({}) > 0 required",
            config.chains, config.kept, config.proposal_sd
        )));
    }
    for (id, p) in new {
        if !(p.var > 0.0 && p.mean.is_finite() && p.var.is_finite()) {
            return Err(Error::InvalidParameter(format!("prior N({}, {}) for `{id}`", p.mean, p.var)));
        }
    }
    let points = grid.points();
    let n = responses.n_examinees();
    let g = points.len();
    let log_prior: Vec<f64> = grid.weights().iter().map(|w| w.ln()).collect();

    // fixed part of every examinee's grid log-likelihood
    let mut base = vec![0.0; n * g];
    for i in 0..n {
        for &(j, beta) in known {
            if let Some(x) = responses.get(i, j) {
                for (k, &t) in points.iter().enumerate() {
                    base[i * g + k] += rasch_log_prob(t, beta, x);
                }
            }
        }
    }

    // responders of each unknown item
    let mut columns = Vec::with_capacity(new.len());
    for (id, _) in new {
        let j = responses.task_index(id)?;
        let obs: Vec<(usize, u8)> = (0..n).filter_map(|i| responses.get(i, j).map(|x| (i, x))).collect();
        columns.push(obs);
    }

    let proposal = Normal::new(0.0, config.proposal_sd).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut draws: Vec<Vec<f64>> = vec![Vec::new(); new.len()];
    let mut accepted = vec![0usize; new.len()];
    let mut proposed = vec![0usize; new.len()];
    let mut item_ll = vec![0.0; g];
    let mut lw = vec![0.0; g];
    let mut scratch = Vec::new();

    for chain in 0..config.chains as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(config.seed, chain));
        let mut beta: Vec<f64> = new.iter().map(|(_, p)| p.mean).collect();
        let mut ll = base.clone();
        for (m, obs) in columns.iter().enumerate() {
            for &(i, x) in obs {
                for (k, &t) in points.iter().enumerate() {
                    ll[i * g + k] += rasch_log_prob(t, beta[m], x);
                }
            }
        }
        let mut theta = vec![0usize; n];
        for sweep in 0..config.burn_in + config.kept {
            for (i, th) in theta.iter_mut().enumerate() {
                for k in 0..g {
                    lw[k] = log_prior[k] + ll[i * g + k];
                }
                *th = sample_log_categorical(&mut rng, &lw, &mut scratch)?;
            }
            for (m, obs) in columns.iter().enumerate() {
                if obs.is_empty() {
                    continue;
                }
                let prior = &new[m].1;
                let cur = beta[m];
                let prop = cur + proposal.sample(&mut rng);
                let mut log_ratio = prior.log_density(prop) - prior.log_density(cur);
                for &(i, x) in obs {
                    let t = points[theta[i]];
                    log_ratio += rasch_log_prob(t, prop, x) - rasch_log_prob(t, cur, x);
                }
                if !log_ratio.is_finite() && log_ratio != f64::NEG_INFINITY {
                    return Err(Error::NonFinite(format!("Metropolis ratio for `{}`", new[m].0)));
                }
                let keep_stats = sweep >= config.burn_in;
                if keep_stats {
                    proposed[m] += 1;
                }
                if rng.random::<f64>().ln() < log_ratio {
                    beta[m] = prop;
                    if keep_stats {
                        accepted[m] += 1;
                    }
                    for &(i, x) in obs {
                        for (k, &t) in points.iter().enumerate() {
                            item_ll[k] = rasch_log_prob(t, prop, x) - rasch_log_prob(t, cur, x);
                        }
                        for k in 0..g {
                            ll[i * g + k] += item_ll[k];
                        }
                    }
                }
            }
            if sweep >= config.burn_in {
                for (m, d) in draws.iter_mut().enumerate() {
                    d.push(beta[m]);
                }
            }
        }
    }

    let mut items = Vec::with_capacity(new.len());
    let mut warnings = Vec::new();
    for (m, (id, prior)) in new.iter().enumerate() {
        let n_responses = columns[m].len();
        if n_responses == 0 {
            items.push(ItemEstimate {
                id: id.clone(),
                mean: prior.mean,
                sd: prior.var.sqrt(),
                n_responses,
                acceptance_rate: None,
            });
            continue;
        }
        let rate = accepted[m] as f64 / proposed[m] as f64;
        if rate <= ACCEPTANCE_BAND.0 || rate >= ACCEPTANCE_BAND.1 {
            warnings.push(format!("item `{id}`: Metropolis acceptance rate {rate:.3}"));
        }
        items.push(ItemEstimate {
            id: id.clone(),
            mean: mean(&draws[m]),
            sd: sample_variance(&draws[m]).sqrt(),
            n_responses,
            acceptance_rate: Some(rate),
        });
    }
    Ok(RaschCalibration { items, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unanswered_item_keeps_prior() {
        let r = ResponseMatrix::new(vec!["a".into()], vec!["old".into(), "new".into()], vec![Some(1), None]).unwrap();
        let old = [RaschItem::new("old", 0.0).unwrap()];
        let prior = NormalPrior { mean: 0.7, var: 0.3 };
        let out = calibrate_rasch_online(
            &r,
            &old,
            &[("new".into(), prior)],
            &ThetaGrid::standard(),
            &RaschMcmcConfig {
                chains: 1,
                burn_in: 10,
                kept: 20,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(out.items[0].mean, 0.7);
        assert_eq!(out.items[0].sd, 0.3f64.sqrt());
        assert_eq!(out.items[0].acceptance_rate, None);
    }

    #[test]
    fn examinee_without_old_items_rejected() {
        let r = ResponseMatrix::new(vec!["a".into()], vec!["old".into(), "new".into()], vec![None, Some(1)]).unwrap();
        let old = [RaschItem::new("old", 0.0).unwrap()];
        let prior = NormalPrior { mean: 0.0, var: 1.0 };
        let err = calibrate_rasch_online(&r, &old, &[("new".into(), prior)], &ThetaGrid::standard(), &Default::default());
        assert!(err.is_err());
    }
}
