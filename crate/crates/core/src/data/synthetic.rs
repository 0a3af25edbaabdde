//! Simulated examinees with known generating parameters.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::io::SCHEMA_VERSION;
use crate::data::responses::ResponseMatrix;
use crate::error::{Error, Result};
use crate::model::{AssessmentModel, JointSpace, Lambda, Misclassification, NamedLambda, SlotPrior};
use crate::stats::{sample_beta, sample_categorical, sample_dirichlet};

/// Generating parameters and latent skill states behind a synthetic matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTruth {
    pub version: u64,
    pub seed: u64,
    pub lambda: NamedLambda,
    pub pi: BTreeMap<String, Misclassification>,
    pub examinees: Vec<String>,
    /// Full skill state per examinee, variables in graph order.
    pub theta: Vec<Vec<u8>>,
}

/// Draws λ and every task's π from the model's priors.
pub fn sample_truth(model: &AssessmentModel, seed: u64) -> Result<(Lambda, BTreeMap<String, Misclassification>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let graph = &model.graph;
    let mut slots = Vec::with_capacity(graph.families().len());
    for f in graph.families() {
        let priors = model
            .lambda_priors
            .get(&f.name)
            .ok_or_else(|| Error::InvalidModel(format!("no prior for `{}`", f.name)))?;
        let mut levels = Vec::with_capacity(priors.len());
        for p in priors {
            levels.push(match p {
                SlotPrior::Beta(b) => {
                    let x = sample_beta(&mut rng, b.alpha, b.beta)?;
                    vec![1.0 - x, x]
                }
                SlotPrior::Dirichlet(a) => sample_dirichlet(&mut rng, a)?,
            });
        }
        slots.push(levels);
    }
    let lambda = Lambda::from_slots(graph, slots)?;

    let mut pi = BTreeMap::new();
    for t in &model.tasks {
        let em = model.task_model(&t.id)?;
        let false_pos = sample_beta(&mut rng, em.prior_false_pos.alpha, em.prior_false_pos.beta)?;
        let true_pos = sample_beta(&mut rng, em.prior_true_pos.alpha, em.prior_true_pos.beta)?;
        pi.insert(t.id.clone(), Misclassification::new(false_pos, true_pos)?);
    }
    Ok((lambda, pi))
}

/// Draws `n` examinees from p(θ | λ) and their responses to every model task
/// from the misclassification probabilities `pi`.
pub fn generate_synthetic(
    model: &AssessmentModel,
    lambda: &Lambda,
    pi: &BTreeMap<String, Misclassification>,
    n: usize,
    seed: u64,
) -> Result<(ResponseMatrix, SyntheticTruth)> {
    if n == 0 {
        return Err(Error::InvalidParameter("number of examinees must be ≥ 1".to_string()));
    }
    let space = JointSpace::new(Arc::new(model.graph.clone()))?;
    let prior = space.prior(lambda)?;

    let mut columns = Vec::with_capacity(model.tasks.len());
    for t in &model.tasks {
        let p = *pi.get(&t.id).ok_or_else(|| Error::MissingSummary(format!("pi_{}", t.id)))?;
        let delta = space.delta(&model.task_model(&t.id)?.skills_required)?;
        columns.push((p, delta));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = n.to_string().len();
    let mut examinees = Vec::with_capacity(n);
    let mut theta = Vec::with_capacity(n);
    let mut cells = Vec::with_capacity(n * columns.len());
    let mut scratch = Vec::new();
    for i in 0..n {
        let c = sample_categorical(&mut rng, &prior, &mut scratch)?;
        for (p, delta) in &columns {
            let x = rng.random::<f64>() < p.correct(delta[c]);
            cells.push(Some(x as u8));
        }
        examinees.push(format!("e{:0width$}", i + 1));
        theta.push(space.state(c).to_vec());
    }

    let matrix = ResponseMatrix::new(examinees.clone(), model.tasks.iter().map(|t| t.id.clone()).collect(), cells)?;
    let truth = SyntheticTruth {
        version: SCHEMA_VERSION,
        seed,
        lambda: lambda.to_named(&model.graph),
        pi: pi.clone(),
        examinees,
        theta,
    };
    Ok((matrix, truth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::assets::builtin_fraction_assets;

    #[test]
    fn perfect_tasks_reproduce_delta() {
        let model = builtin_fraction_assets();
        let (lambda, _) = sample_truth(&model, 3).unwrap();
        let pi: BTreeMap<_, _> = model
            .tasks
            .iter()
            .map(|t| (t.id.clone(), Misclassification::new(0.0, 1.0).unwrap()))
            .collect();
        let (x, truth) = generate_synthetic(&model, &lambda, &pi, 200, 9).unwrap();
        let k: Vec<usize> = model.graph.reporting_indices().to_vec();
        for i in 0..200 {
            let skills: Vec<u8> = k.iter().map(|&j| truth.theta[i][j]).collect();
            for (j, t) in model.tasks.iter().enumerate() {
                let row = &model.task_model(&t.id).unwrap().skills_required;
                let delta = crate::model::skill_conjunction(&skills, row).unwrap();
                assert_eq!(x.get(i, j), Some(delta as u8));
            }
        }
    }

    #[test]
    fn seeded_generation_is_reproducible() {
        let model = builtin_fraction_assets();
        let (lambda, pi) = sample_truth(&model, 11).unwrap();
        let a = generate_synthetic(&model, &lambda, &pi, 50, 5).unwrap();
        let b = generate_synthetic(&model, &lambda, &pi, 50, 5).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic(&model, &lambda, &pi, 50, 6).unwrap();
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn zero_examinees_rejected() {
        let model = builtin_fraction_assets();
        let (lambda, pi) = sample_truth(&model, 1).unwrap();
        assert!(generate_synthetic(&model, &lambda, &pi, 0, 1).is_err());
    }
}
