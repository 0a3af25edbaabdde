//! Sequential adaptive testing sessions.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::irt::{expected_posterior_variance, RaschItem, ThetaGrid};

type Constraint = Arc<dyn Fn(&RaschItem) -> bool + Send + Sync>;

/// Stopping rule and eligibility filter of a session.
#[derive(Clone)]
pub struct CatConfig {
    stop_sd: f64,
    max_items: usize,
    constraint: Option<Constraint>,
}

impl fmt::Debug for CatConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CatConfig")
            .field("stop_sd", &self.stop_sd)
            .field("max_items", &self.max_items)
            .field("constraint", &self.constraint.is_some())
            .finish()
    }
}

impl CatConfig {
    pub fn new(stop_sd: f64, max_items: usize) -> Result<Self> {
        if !(stop_sd > 0.0) || max_items == 0 {
            return Err(Error::InvalidConfig(format!(
                "stop_sd ({stop_sd}) must be > 0 and max_items ({max_items}) ≥ 1"
            )));
        }
        Ok(CatConfig {
            stop_sd,
            max_items,
            constraint: None,
        })
    }

    /// Only items for which `eligible` returns true may be administered.
    pub fn with_constraint<F: Fn(&RaschItem) -> bool + Send + Sync + 'static>(mut self, eligible: F) -> Self {
        self.constraint = Some(Arc::new(eligible));
        self
    }

    pub fn stop_sd(&self) -> f64 {
        self.stop_sd
    }

    pub fn max_items(&self) -> usize {
        self.max_items
    }

    fn eligible(&self, item: &RaschItem, administered: &BTreeSet<String>) -> bool {
        !administered.contains(&item.id) && self.constraint.as_ref().is_none_or(|c| c(item))
    }
}

/// Relative gap below which two expected variances count as tied.
const TIE_TOLERANCE: f64 = 1e-12;

/// The eligible item with the smallest expected posterior variance; ties go
/// to the lowest id.
pub fn select_next<'p>(
    grid: &ThetaGrid,
    pool: &'p [RaschItem],
    config: &CatConfig,
    administered: &BTreeSet<String>,
) -> Result<&'p RaschItem> {
    let scored: Vec<(f64, &RaschItem)> = pool
        .iter()
        .filter(|i| config.eligible(i, administered))
        .map(|i| (expected_posterior_variance(grid, i.beta), i))
        .collect();
    let min = scored.iter().map(|(v, _)| *v).fold(f64::INFINITY, f64::min);
    scored
        .into_iter()
        .filter(|(v, _)| *v <= min + TIE_TOLERANCE * min.abs())
        .map(|(_, i)| i)
        .min_by(|a, b| a.id.cmp(&b.id))
        .ok_or(Error::NoEligibleItem)
}

/// How the next item is chosen.
pub enum Selection<'r, R: Rng> {
    Adaptive,
    /// Uniformly among eligible items.
    Random(&'r mut R),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Precision,
    MaxItems,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatStep {
    pub item: String,
    pub beta: f64,
    pub response: u8,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatTrace {
    pub steps: Vec<CatStep>,
    pub stop: StopReason,
}

impl CatTrace {
    pub fn final_mean(&self) -> f64 {
        self.steps.last().map_or(f64::NAN, |s| s.mean)
    }

    pub fn final_sd(&self) -> f64 {
        self.steps.last().map_or(f64::NAN, |s| s.sd)
    }

    /// CSV with columns `step,item,beta,response,mean,sd`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["step", "item", "beta", "response", "mean", "sd"])?;
        for (k, s) in self.steps.iter().enumerate() {
            w.write_record([
                (k + 1).to_string(),
                s.item.clone(),
                format!("{:?}", s.beta),
                s.response.to_string(),
                format!("{:?}", s.mean),
                format!("{:?}", s.sd),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Administers items one at a time until the posterior SD reaches
/// `config.stop_sd` or `config.max_items` items have been given.
pub fn run_cat<F, R>(
    mut responder: F,
    pool: &[RaschItem],
    prior: &ThetaGrid,
    config: &CatConfig,
    mut selection: Selection<'_, R>,
) -> Result<CatTrace>
where
    F: FnMut(&RaschItem) -> Result<u8>,
    R: Rng,
{
    if pool.is_empty() {
        return Err(Error::NoEligibleItem);
    }
    let mut grid = prior.clone();
    let mut administered = BTreeSet::new();
    let mut steps = Vec::new();
    loop {
        let item = match &mut selection {
            Selection::Adaptive => select_next(&grid, pool, config, &administered)?,
            Selection::Random(rng) => {
                let eligible: Vec<&RaschItem> =
                    pool.iter().filter(|i| config.eligible(i, &administered)).collect();
                *eligible.choose(*rng).ok_or(Error::NoEligibleItem)?
            }
        };
        let x = responder(item)?;
        if x > 1 {
            return Err(Error::Responder(format!("response {x} to `{}` is not 0/1", item.id)));
        }
        grid = grid.update(item.beta, x)?;
        administered.insert(item.id.clone());
        let (mean, var) = grid.moments();
        let sd = var.sqrt();
        steps.push(CatStep {
            item: item.id.clone(),
            beta: item.beta,
            response: x,
            mean,
            sd,
        });
        if sd <= config.stop_sd {
            return Ok(CatTrace {
                steps,
                stop: StopReason::Precision,
            });
        }
        if steps.len() >= config.max_items {
            return Ok(CatTrace {
                steps,
                stop: StopReason::MaxItems,
            });
        }
    }
}
