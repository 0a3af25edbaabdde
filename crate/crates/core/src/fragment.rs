//! Exact belief updating for one examinee.
//!
//! A [`BeliefState`] is the distribution over every joint skill configuration.
//! Docking an [`EvidenceFragment`] multiplies that table by the fragment's
//! likelihood for the observed response and renormalizes; the fragment is not
//! retained afterwards.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{skill_conjunction, JointSpace, Lambda, Misclassification, QMatrixRow, SkillGraph};

/// Total mass below which an update is treated as contradicted evidence.
const ZERO_MASS: f64 = 1e-300;

/// An evidence-model fragment bound to one task: the skills it requires and
/// the misclassification probabilities of its single observable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceFragment {
    pub task: String,
    pub skills_required: QMatrixRow,
    pub pi: Misclassification,
}

impl EvidenceFragment {
    /// P(x | δ).
    pub fn likelihood(&self, delta: bool, x: u8) -> f64 {
        let p = self.pi.correct(delta);
        if x == 1 {
            p
        } else {
            1.0 - p
        }
    }
}

/// One observed response X_ij.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub task: String,
    pub value: u8,
}

impl Observation {
    pub fn new(task: &str, value: u8) -> Self {
        Observation {
            task: task.to_string(),
            value,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BeliefState {
    space: Arc<JointSpace>,
    probs: Vec<f64>,
}

/// Fresh belief p(θ | λ) over the full joint space of `graph`.
pub fn init_belief(graph: &SkillGraph, lambda: &Lambda) -> Result<BeliefState> {
    let space = Arc::new(JointSpace::new(Arc::new(graph.clone()))?);
    BeliefState::new(space, lambda)
}

impl BeliefState {
    pub fn new(space: Arc<JointSpace>, lambda: &Lambda) -> Result<Self> {
        let probs = space.prior(lambda)?;
        Ok(BeliefState { space, probs })
    }

    pub fn space(&self) -> &Arc<JointSpace> {
        &self.space
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Posterior after observing `x` on the fragment's task.
    pub fn absorb(&self, fragment: &EvidenceFragment, x: u8) -> Result<BeliefState> {
        if x > 1 {
            return Err(Error::InvalidParameter(format!("response {x} is not 0/1")));
        }
        let mut probs = Vec::with_capacity(self.probs.len());
        for (c, &p) in self.probs.iter().enumerate() {
            let delta = skill_conjunction(&self.space.reporting_state(c), &fragment.skills_required)?;
            probs.push(p * fragment.likelihood(delta, x));
        }
        let total: f64 = probs.iter().sum();
        if !total.is_finite() {
            return Err(Error::NonFinite(format!("belief mass after absorbing `{}`", fragment.task)));
        }
        if total < ZERO_MASS {
            return Err(Error::ZeroMass);
        }
        probs.iter_mut().for_each(|p| *p /= total);
        Ok(BeliefState {
            space: Arc::clone(&self.space),
            probs,
        })
    }

    /// Distribution over the states of `variable`.
    pub fn marginal(&self, variable: &str) -> Result<Vec<f64>> {
        let graph = self.space.graph();
        let v = graph.variable_index(variable)?;
        let mut out = vec![0.0; graph.variables()[v].cardinality];
        for (c, &p) in self.probs.iter().enumerate() {
            out[self.space.state(c)[v] as usize] += p;
        }
        Ok(out)
    }

    /// Probability of a correct response to the fragment's task.
    pub fn predictive(&self, fragment: &EvidenceFragment) -> Result<f64> {
        let mut p1 = 0.0;
        for (c, &p) in self.probs.iter().enumerate() {
            let delta = skill_conjunction(&self.space.reporting_state(c), &fragment.skills_required)?;
            p1 += p * fragment.pi.correct(delta);
        }
        Ok(p1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillProfile {
    pub skill: String,
    pub prior: f64,
    pub posterior: f64,
}

/// Prior and posterior P(skill = 1) for every reporting skill.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub responses: Vec<(String, u8)>,
    pub skills: Vec<SkillProfile>,
}

impl fmt::Display for ScoreReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.skills.iter().map(|s| s.skill.len()).max().unwrap_or(0).max(5);
        writeln!(f, "{:<width$}  {:>11}  {:>15}", "SKILL", "PRIOR PROB.", "POSTERIOR PROB.")?;
        for s in &self.skills {
            writeln!(f, "{:<width$}  {:>11.3}  {:>15.3}", s.skill, s.prior, s.posterior)?;
        }
        Ok(())
    }
}

/// Absorbs `responses` one at a time, starting from p(θ | λ).
pub fn score_examinee(
    space: Arc<JointSpace>,
    lambda: &Lambda,
    fragments: &BTreeMap<String, EvidenceFragment>,
    responses: &[Observation],
) -> Result<ScoreReport> {
    let prior = BeliefState::new(space, lambda)?;
    let mut belief = prior.clone();
    for obs in responses {
        let fragment = fragments
            .get(&obs.task)
            .ok_or_else(|| Error::UnknownTask(obs.task.clone()))?;
        belief = belief.absorb(fragment, obs.value)?;
    }
    let graph = prior.space.graph();
    let skills = graph
        .reporting()
        .iter()
        .map(|name| {
            Ok(SkillProfile {
                skill: name.clone(),
                prior: prior.marginal(name)?[1],
                posterior: belief.marginal(name)?[1],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScoreReport {
        responses: responses.iter().map(|o| (o.task.clone(), o.value)).collect(),
        skills,
    })
}
