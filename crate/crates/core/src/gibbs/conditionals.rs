//! Full conditional distributions of the three parameter blocks.

use rand::Rng;

use crate::error::{Error, Result};
use crate::gibbs::CalibrationProblem;
use crate::model::{BetaPrior, Lambda, Misclassification, SlotKind};
use crate::stats::{sample_beta, sample_dirichlet, sample_log_categorical};

/// Hyperparameters laid out to match the problem: λ pseudo-counts as
/// `[family][level][category]` (Bernoulli as `[β, α]`) and per-task
/// `[false-positive, true-positive]` Beta priors.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedPriors {
    pub lambda: Vec<Vec<Vec<f64>>>,
    pub pi: Vec<[BetaPrior; 2]>,
}

// ln P(x | δ) indexed [δ][x]
fn log_table(pi: &Misclassification) -> [[f64; 2]; 2] {
    let row = |p: f64| [(1.0 - p).ln(), p.ln()];
    [row(pi.false_pos), row(pi.true_pos)]
}

fn log_prior(problem: &CalibrationProblem, lambda: &Lambda) -> Vec<f64> {
    let space = problem.space();
    (0..space.len())
        .map(|c| {
            space
                .terms(c)
                .iter()
                .map(|t| lambda.slot(t.family, t.level)[t.state].ln())
                .sum()
        })
        .collect()
}

/// Unnormalized log conditional of examinee `i` over all configurations.
fn theta_log_weights(
    problem: &CalibrationProblem,
    log_prior: &[f64],
    tables: &[[[f64; 2]; 2]],
    i: usize,
    group_ll: &mut Vec<[f64; 2]>,
    out: &mut Vec<f64>,
) {
    group_ll.clear();
    group_ll.resize(problem.n_groups(), [0.0, 0.0]);
    for &(j, x) in problem.observations(i) {
        let g = problem.task_group(j);
        let t = &tables[j];
        group_ll[g][0] += t[0][x as usize];
        group_ll[g][1] += t[1][x as usize];
    }
    out.clear();
    out.extend(log_prior.iter().enumerate().map(|(c, &lp)| {
        group_ll
            .iter()
            .enumerate()
            .fold(lp, |acc, (g, ll)| acc + ll[problem.group_delta(g)[c] as usize])
    }));
}

fn check_pi(problem: &CalibrationProblem, pi: &[Misclassification]) -> Result<()> {
    if pi.len() != problem.n_tasks() {
        return Err(Error::DimensionMismatch(format!(
            "{} π pairs for {} tasks",
            pi.len(),
            problem.n_tasks()
        )));
    }
    Ok(())
}

/// p(θ_i = c | x_i, λ, π) for every configuration c.
pub fn theta_conditional(problem: &CalibrationProblem, lambda: &Lambda, pi: &[Misclassification], i: usize) -> Result<Vec<f64>> {
    check_pi(problem, pi)?;
    lambda.validate(problem.space().graph())?;
    let tables: Vec<_> = pi.iter().map(log_table).collect();
    let lp = log_prior(problem, lambda);
    let mut lw = Vec::new();
    theta_log_weights(problem, &lp, &tables, i, &mut Vec::new(), &mut lw);
    let max = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::ZeroMass);
    }
    if !max.is_finite() {
        return Err(Error::NonFinite("log weight".to_string()));
    }
    let w: Vec<f64> = lw.iter().map(|&l| (l - max).exp()).collect();
    let total: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / total).collect())
}

/// Draws every examinee's configuration from its exact categorical
/// conditional, writing configuration indices into `theta`.
pub fn draw_theta<R: Rng + ?Sized>(
    problem: &CalibrationProblem,
    lambda: &Lambda,
    pi: &[Misclassification],
    rng: &mut R,
    theta: &mut [usize],
) -> Result<()> {
    check_pi(problem, pi)?;
    if theta.len() != problem.n_examinees() {
        return Err(Error::DimensionMismatch(format!(
            "{} configurations for {} examinees",
            theta.len(),
            problem.n_examinees()
        )));
    }
    let tables: Vec<_> = pi.iter().map(log_table).collect();
    let lp = log_prior(problem, lambda);
    let mut group_ll = Vec::new();
    let mut lw = Vec::new();
    let mut scratch = Vec::new();
    for (i, slot) in theta.iter_mut().enumerate() {
        theta_log_weights(problem, &lp, &tables, i, &mut group_ll, &mut lw);
        *slot = sample_log_categorical(rng, &lw, &mut scratch)?;
    }
    Ok(())
}

/// Posterior pseudo-counts of every λ slot given the imputed configurations.
pub fn lambda_conditionals(problem: &CalibrationProblem, theta: &[usize], priors: &ResolvedPriors) -> Vec<Vec<Vec<f64>>> {
    let mut post = priors.lambda.clone();
    let space = problem.space();
    for &c in theta {
        for t in space.terms(c) {
            post[t.family][t.level][t.state] += 1.0;
        }
    }
    post
}

/// Posterior `[false-positive, true-positive]` Beta pairs of every task.
pub fn pi_conditionals(problem: &CalibrationProblem, theta: &[usize], priors: &ResolvedPriors) -> Vec<[BetaPrior; 2]> {
    let mut post = priors.pi.clone();
    for (i, &c) in theta.iter().enumerate() {
        for &(j, x) in problem.observations(i) {
            let d = problem.group_delta(problem.task_group(j))[c] as usize;
            if x == 1 {
                post[j][d].alpha += 1.0;
            } else {
                post[j][d].beta += 1.0;
            }
        }
    }
    post
}

/// Draws λ from its conjugate conditional.
pub fn draw_lambda<R: Rng + ?Sized>(
    problem: &CalibrationProblem,
    theta: &[usize],
    priors: &ResolvedPriors,
    rng: &mut R,
) -> Result<Lambda> {
    sample_lambda(problem, &lambda_conditionals(problem, theta, priors), rng)
}

/// Draws every task's π from its conjugate conditional.
pub fn draw_pi<R: Rng + ?Sized>(
    problem: &CalibrationProblem,
    theta: &[usize],
    priors: &ResolvedPriors,
    rng: &mut R,
) -> Result<Vec<Misclassification>> {
    sample_pi(&pi_conditionals(problem, theta, priors), rng)
}

pub(crate) fn sample_lambda<R: Rng + ?Sized>(
    problem: &CalibrationProblem,
    counts: &[Vec<Vec<f64>>],
    rng: &mut R,
) -> Result<Lambda> {
    let graph = problem.space().graph();
    let mut slots = Vec::with_capacity(counts.len());
    for (family, levels) in graph.families().iter().zip(counts) {
        let mut drawn = Vec::with_capacity(levels.len());
        for c in levels {
            drawn.push(match family.kind {
                SlotKind::Bernoulli => {
                    let p = sample_beta(rng, c[1], c[0])?;
                    vec![1.0 - p, p]
                }
                SlotKind::Categorical => sample_dirichlet(rng, c)?,
            });
        }
        slots.push(drawn);
    }
    Lambda::from_slots(graph, slots)
}

pub(crate) fn sample_pi<R: Rng + ?Sized>(posts: &[[BetaPrior; 2]], rng: &mut R) -> Result<Vec<Misclassification>> {
    posts
        .iter()
        .map(|[f, t]| Misclassification::new(sample_beta(rng, f.alpha, f.beta)?, sample_beta(rng, t.alpha, t.beta)?))
        .collect()
}
