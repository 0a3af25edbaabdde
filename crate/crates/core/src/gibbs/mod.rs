//! Gibbs calibration of the student-model and task parameters.
//!
//! Each sweep draws every examinee's configuration Θ, then the task
//! misclassification probabilities π, then the population parameters λ, each
//! from its exact conditional given the most recent values of the others.
//! Hyperparameters are fixed configuration.

mod conditionals;
mod diagnostics;
mod summary;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use conditionals::{
    draw_lambda, draw_pi, draw_theta, lambda_conditionals, pi_conditionals, theta_conditional, ResolvedPriors,
};
pub use diagnostics::gelman_rubin;
pub use summary::{format_summary_table, moment_match_beta, moment_match_dirichlet, summarize, ParameterSummary};

use crate::data::io::SCHEMA_VERSION;
use crate::data::responses::ResponseMatrix;
use crate::error::{Error, Result};
use crate::model::{
    AssessmentModel, BetaPrior, JointSpace, Lambda, Misclassification, NamedLambda, QMatrixRow, SlotKind, SlotPrior,
};
use crate::stats::stream_seed;

/// Responses arranged for sampling: observed cells per examinee and the δ
/// vector of each distinct skill requirement over the joint space.
#[derive(Debug, Clone)]
pub struct CalibrationProblem {
    space: Arc<JointSpace>,
    tasks: Vec<String>,
    examinees: Vec<String>,
    task_group: Vec<usize>,
    group_delta: Vec<Vec<u8>>,
    observations: Vec<Vec<(usize, u8)>>,
}

impl CalibrationProblem {
    /// Tasks are the columns of `data`; each must exist in `model`.
    pub fn new(model: &AssessmentModel, data: &ResponseMatrix) -> Result<Self> {
        let rows = data
            .tasks()
            .iter()
            .map(|t| Ok(model.task_model(t)?.skills_required.clone()))
            .collect::<Result<Vec<_>>>()?;
        let space = Arc::new(JointSpace::new(Arc::new(model.graph.clone()))?);
        Self::from_rows(space, &rows, data)
    }

    /// `rows[j]` is the skill requirement of column `j` of `data`.
    pub fn from_rows(space: Arc<JointSpace>, rows: &[QMatrixRow], data: &ResponseMatrix) -> Result<Self> {
        if rows.len() != data.n_tasks() {
            return Err(Error::DimensionMismatch(format!(
                "{} Q-matrix rows for {} tasks",
                rows.len(),
                data.n_tasks()
            )));
        }
        let mut distinct: Vec<&QMatrixRow> = Vec::new();
        let mut task_group = Vec::with_capacity(rows.len());
        for row in rows {
            let g = match distinct.iter().position(|r| *r == row) {
                Some(g) => g,
                None => {
                    distinct.push(row);
                    distinct.len() - 1
                }
            };
            task_group.push(g);
        }
        let group_delta = distinct
            .iter()
            .map(|row| Ok(space.delta(row)?.into_iter().map(u8::from).collect()))
            .collect::<Result<Vec<Vec<u8>>>>()?;
        let observations = (0..data.n_examinees())
            .map(|i| {
                data.row(i)
                    .iter()
                    .enumerate()
                    .filter_map(|(j, x)| x.map(|x| (j, x)))
                    .collect()
            })
            .collect();
        Ok(CalibrationProblem {
            space,
            tasks: data.tasks().to_vec(),
            examinees: data.examinees().to_vec(),
            task_group,
            group_delta,
            observations,
        })
    }

    pub fn space(&self) -> &Arc<JointSpace> {
        &self.space
    }

    pub fn tasks(&self) -> &[String] {
        &self.tasks
    }

    pub fn examinees(&self) -> &[String] {
        &self.examinees
    }

    pub fn n_tasks(&self) -> usize {
        self.tasks.len()
    }

    pub fn n_examinees(&self) -> usize {
        self.examinees.len()
    }

    pub fn n_groups(&self) -> usize {
        self.group_delta.len()
    }

    pub fn task_group(&self, task: usize) -> usize {
        self.task_group[task]
    }

    /// δ of requirement group `g` for every configuration.
    pub fn group_delta(&self, g: usize) -> &[u8] {
        &self.group_delta[g]
    }

    /// Observed `(task index, response)` pairs of examinee `i`.
    pub fn observations(&self, i: usize) -> &[(usize, u8)] {
        &self.observations[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskPrior {
    pub false_pos: BetaPrior,
    pub true_pos: BetaPrior,
}

/// Beta or Dirichlet hyperparameters of every λ slot and every task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSet {
    pub lambda: BTreeMap<String, Vec<SlotPrior>>,
    pub tasks: BTreeMap<String, TaskPrior>,
}

impl PriorSet {
    /// The model's λ priors and, for every task, its evidence model's priors.
    pub fn from_model(model: &AssessmentModel) -> Result<Self> {
        let tasks = model
            .tasks
            .iter()
            .map(|t| {
                let em = model.task_model(&t.id)?;
                Ok((
                    t.id.clone(),
                    TaskPrior {
                        false_pos: em.prior_false_pos,
                        true_pos: em.prior_true_pos,
                    },
                ))
            })
            .collect::<Result<_>>()?;
        Ok(PriorSet {
            lambda: model.lambda_priors.clone(),
            tasks,
        })
    }

    /// Lays the hyperparameters out in the problem's family and task order.
    pub fn resolve(&self, problem: &CalibrationProblem) -> Result<ResolvedPriors> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        let mut lambda = Vec::new();
        for f in problem.space().graph().families() {
            let priors = self
                .lambda
                .get(&f.name)
                .ok_or_else(|| Error::InvalidConfig(format!("no prior for `{}`", f.name)))?;
            if priors.len() != f.levels {
                return Err(Error::InvalidConfig(format!(
                    "`{}` has {} priors for {} levels",
                    f.name,
                    priors.len(),
                    f.levels
                )));
            }
            let mut levels = Vec::with_capacity(f.levels);
            for p in priors {
                let counts = p.pseudo_counts();
                if counts.len() != f.categories || !counts.iter().all(|&c| positive(c)) {
                    return Err(Error::InvalidConfig(format!("invalid prior {p:?} for `{}`", f.name)));
                }
                levels.push(counts);
            }
            lambda.push(levels);
        }
        let mut pi = Vec::with_capacity(problem.n_tasks());
        for t in problem.tasks() {
            let p = self
                .tasks
                .get(t)
                .ok_or_else(|| Error::InvalidConfig(format!("no prior for task `{t}`")))?;
            for b in [p.false_pos, p.true_pos] {
                if !(positive(b.alpha) && positive(b.beta)) {
                    return Err(Error::InvalidConfig(format!("invalid prior {b:?} for task `{t}`")));
                }
            }
            pi.push([p.false_pos, p.true_pos]);
        }
        Ok(ResolvedPriors { lambda, pi })
    }
}

/// The current imputation of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    /// Joint configuration index per examinee.
    pub theta: Vec<usize>,
    pub lambda: Lambda,
    /// Per task, in problem order.
    pub pi: Vec<Misclassification>,
    pub iteration: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GibbsConfig {
    pub chains: usize,
    pub burn_in: usize,
    pub kept: usize,
    pub thin: usize,
    pub seed: u64,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        GibbsConfig {
            chains: 3,
            burn_in: 2000,
            kept: 5000,
            thin: 1,
            seed: 0,
        }
    }
}

impl GibbsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chains == 0 || self.kept == 0 || self.thin == 0 {
            return Err(Error::InvalidConfig(format!(
                "chains ({}), kept draws ({}) and thinning ({}) must all be ≥ 1",
                self.chains, self.kept, self.thin
            )));
        }
        Ok(())
    }
}

/// Identifies one scalar parameter.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParamKey {
    /// P(state 1) of a Bernoulli slot (`category` absent) or one component of
    /// a categorical slot.
    Lambda {
        family: String,
        level: usize,
        category: Option<usize>,
    },
    /// False-positive (`positive = false`) or true-positive probability.
    Pi { task: String, positive: bool },
}

impl fmt::Display for ParamKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamKey::Lambda {
                family,
                level,
                category: None,
            } => write!(f, "{family}[z={level}]"),
            ParamKey::Lambda {
                family,
                level,
                category: Some(k),
            } => write!(f, "{family}[z={level},k={k}]"),
            ParamKey::Pi { task, positive } => {
                write!(f, "pi{task}.{}", if *positive { "true_pos" } else { "false_pos" })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    Startup,
    Full,
    EmpiricalBayes,
}

/// Retained draws, `[chain][parameter][iteration]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Draws {
    pub names: Vec<String>,
    pub chains: Vec<Vec<Vec<f64>>>,
}

impl Draws {
    /// Per-chain draws of the named parameter.
    pub fn param(&self, name: &str) -> Option<Vec<&[f64]>> {
        let p = self.names.iter().position(|n| n == name)?;
        Some(self.chains.iter().map(|c| c[p].as_slice()).collect())
    }

    /// CSV with columns `chain,iteration,<parameters…>`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["chain".to_string(), "iteration".to_string()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header)?;
        for (c, chain) in self.chains.iter().enumerate() {
            let n = chain.first().map_or(0, Vec::len);
            for t in 0..n {
                let mut rec = vec![c.to_string(), t.to_string()];
                rec.extend(chain.iter().map(|d| format!("{:?}", d[t])));
                w.write_record(&rec)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// A finished calibration: configuration, posterior summaries with R̂, point
/// estimates, and the model with calibrated π filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRun {
    pub version: u64,
    pub mode: RunMode,
    pub config: GibbsConfig,
    pub chain_seeds: Vec<u64>,
    pub tasks: Vec<String>,
    pub new_tasks: Vec<String>,
    pub n_examinees: usize,
    pub summaries: Vec<ParameterSummary>,
    /// Posterior means of λ, or the fixed values.
    pub lambda: NamedLambda,
    /// Posterior means of π for every task in the data, or the fixed values.
    pub pi: BTreeMap<String, Misclassification>,
    pub model: AssessmentModel,
    #[serde(skip)]
    pub draws: Option<Draws>,
}

impl CalibrationRun {
    pub fn summary(&self, key: &ParamKey) -> Option<&ParameterSummary> {
        self.summaries.iter().find(|s| &s.key == key)
    }

    pub fn lambda_estimate(&self) -> Result<Lambda> {
        Lambda::from_named(&self.model.graph, &self.lambda)
    }

    pub fn summary_table(&self) -> String {
        format_summary_table(&self.summaries)
    }
}

/// One chain's sampler. Blocks may be fixed, in which case they are never
/// redrawn.
pub struct Sampler<'a> {
    problem: &'a CalibrationProblem,
    priors: ResolvedPriors,
    fixed_lambda: Option<Lambda>,
    fixed_pi: Vec<Option<Misclassification>>,
    rng: ChaCha8Rng,
    seed: u64,
}

impl<'a> Sampler<'a> {
    pub fn new(problem: &'a CalibrationProblem, priors: &PriorSet, seed: u64) -> Result<Self> {
        Ok(Sampler {
            problem,
            priors: priors.resolve(problem)?,
            fixed_lambda: None,
            fixed_pi: vec![None; problem.n_tasks()],
            rng: ChaCha8Rng::seed_from_u64(seed),
            seed,
        })
    }

    pub fn priors(&self) -> &ResolvedPriors {
        &self.priors
    }

    pub fn fix_lambda(&mut self, lambda: Lambda) -> Result<()> {
        lambda.validate(self.problem.space().graph())?;
        self.fixed_lambda = Some(lambda);
        Ok(())
    }

    pub fn fix_pi(&mut self, task: &str, pi: Misclassification) -> Result<()> {
        let j = self
            .problem
            .tasks()
            .iter()
            .position(|t| t == task)
            .ok_or_else(|| Error::UnknownTask(task.to_string()))?;
        self.fixed_pi[j] = Some(pi);
        Ok(())
    }

    /// λ and π drawn from their priors (or fixed values), then Θ from its
    /// conditional.
    pub fn init_state(&mut self) -> Result<ChainState> {
        let lambda = match &self.fixed_lambda {
            Some(l) => l.clone(),
            None => conditionals::sample_lambda(self.problem, &self.priors.lambda, &mut self.rng)?,
        };
        let mut pi = conditionals::sample_pi(&self.priors.pi, &mut self.rng)?;
        self.apply_fixed_pi(&mut pi);
        self.init_at(lambda, pi)
    }

    /// Starts from the given λ and π with Θ drawn from its conditional.
    pub fn init_at(&mut self, lambda: Lambda, pi: Vec<Misclassification>) -> Result<ChainState> {
        let mut theta = vec![0; self.problem.n_examinees()];
        draw_theta(self.problem, &lambda, &pi, &mut self.rng, &mut theta)?;
        Ok(ChainState {
            theta,
            lambda,
            pi,
            iteration: 0,
            seed: self.seed,
        })
    }

    fn apply_fixed_pi(&self, pi: &mut [Misclassification]) {
        for (p, fixed) in pi.iter_mut().zip(&self.fixed_pi) {
            if let Some(f) = fixed {
                *p = *f;
            }
        }
    }

    /// One systematic scan: Θ, then π, then λ.
    pub fn sweep(&mut self, state: &mut ChainState) -> Result<()> {
        draw_theta(self.problem, &state.lambda, &state.pi, &mut self.rng, &mut state.theta)?;
        if self.fixed_pi.iter().any(Option::is_none) {
            let mut pi = draw_pi(self.problem, &state.theta, &self.priors, &mut self.rng)?;
            self.apply_fixed_pi(&mut pi);
            state.pi = pi;
        }
        if self.fixed_lambda.is_none() {
            state.lambda = draw_lambda(self.problem, &state.theta, &self.priors, &mut self.rng)?;
        }
        state.iteration += 1;
        Ok(())
    }
}

enum Source {
    Lambda { family: usize, level: usize, category: usize },
    Pi { task: usize, positive: bool },
}

struct Scalar {
    key: ParamKey,
    source: Source,
    reference: BetaPrior,
}

impl Scalar {
    fn read(&self, state: &ChainState) -> f64 {
        match self.source {
            Source::Lambda { family, level, category } => state.lambda.slot(family, level)[category],
            Source::Pi { task, positive } => state.pi[task].correct(positive),
        }
    }
}

/// Free scalars of a run, with the Beta reference prior each one's n̂ is
/// measured against.
fn free_scalars(problem: &CalibrationProblem, reference: &ResolvedPriors, lambda_free: bool, pi_free: &[bool]) -> Vec<Scalar> {
    let mut out = Vec::new();
    if lambda_free {
        for (f, family) in problem.space().graph().families().iter().enumerate() {
            for level in 0..family.levels {
                let counts = &reference.lambda[f][level];
                match family.kind {
                    SlotKind::Bernoulli => out.push(Scalar {
                        key: ParamKey::Lambda {
                            family: family.name.clone(),
                            level,
                            category: None,
                        },
                        source: Source::Lambda { family: f, level, category: 1 },
                        reference: BetaPrior {
                            alpha: counts[1],
                            beta: counts[0],
                        },
                    }),
                    SlotKind::Categorical => {
                        let total: f64 = counts.iter().sum();
                        for (k, &a) in counts.iter().enumerate() {
                            out.push(Scalar {
                                key: ParamKey::Lambda {
                                    family: family.name.clone(),
                                    level,
                                    category: Some(k),
                                },
                                source: Source::Lambda { family: f, level, category: k },
                                reference: BetaPrior { alpha: a, beta: total - a },
                            });
                        }
                    }
                }
            }
        }
    }
    for (j, task) in problem.tasks().iter().enumerate() {
        if !pi_free[j] {
            continue;
        }
        for positive in [false, true] {
            out.push(Scalar {
                key: ParamKey::Pi {
                    task: task.clone(),
                    positive,
                },
                source: Source::Pi { task: j, positive },
                reference: reference.pi[j][positive as usize],
            });
        }
    }
    out
}

struct Plan<'p> {
    mode: RunMode,
    priors: &'p PriorSet,
    reference: &'p PriorSet,
    fixed_lambda: Option<Lambda>,
    fixed_pi: BTreeMap<String, Misclassification>,
    new_tasks: Vec<String>,
}

fn execute(model: &AssessmentModel, data: &ResponseMatrix, plan: Plan<'_>, config: &GibbsConfig) -> Result<CalibrationRun> {
    config.validate()?;
    let problem = CalibrationProblem::new(model, data)?;
    let reference = plan.reference.resolve(&problem)?;
    let pi_free: Vec<bool> = problem.tasks().iter().map(|t| !plan.fixed_pi.contains_key(t)).collect();
    let scalars = free_scalars(&problem, &reference, plan.fixed_lambda.is_none(), &pi_free);

    let chain_seeds: Vec<u64> = (0..config.chains as u64).map(|c| stream_seed(config.seed, c)).collect();
    let mut chains = Vec::with_capacity(config.chains);
    for &seed in &chain_seeds {
        let mut sampler = Sampler::new(&problem, plan.priors, seed)?;
        if let Some(l) = &plan.fixed_lambda {
            sampler.fix_lambda(l.clone())?;
        }
        for (task, pi) in &plan.fixed_pi {
            sampler.fix_pi(task, *pi)?;
        }
        let mut state = sampler.init_state()?;
        for _ in 0..config.burn_in {
            sampler.sweep(&mut state)?;
        }
        let mut draws: Vec<Vec<f64>> = scalars.iter().map(|_| Vec::with_capacity(config.kept)).collect();
        for _ in 0..config.kept {
            for _ in 0..config.thin {
                sampler.sweep(&mut state)?;
            }
            for (d, s) in draws.iter_mut().zip(&scalars) {
                d.push(s.read(&state));
            }
        }
        chains.push(draws);
    }

    let mut summaries = Vec::with_capacity(scalars.len());
    for (p, s) in scalars.iter().enumerate() {
        let per_chain: Vec<&[f64]> = chains.iter().map(|c| c[p].as_slice()).collect();
        let pooled: Vec<f64> = per_chain.concat();
        let mut summary = summarize(s.key.clone(), &pooled, s.reference)?;
        if config.chains >= 2 && config.kept >= 10 {
            summary.rhat = Some(gelman_rubin(&per_chain)?);
        }
        summaries.push(summary);
    }

    let graph = problem.space().graph();
    let lambda = match plan.fixed_lambda {
        Some(l) => l,
        None => {
            let means: BTreeMap<&ParamKey, f64> = summaries.iter().map(|s| (&s.key, s.mean)).collect();
            let mut slots = Vec::new();
            for family in graph.families() {
                let mut levels = Vec::new();
                for level in 0..family.levels {
                    let get = |category| {
                        means[&ParamKey::Lambda {
                            family: family.name.clone(),
                            level,
                            category,
                        }]
                    };
                    levels.push(match family.kind {
                        SlotKind::Bernoulli => {
                            let m = get(None);
                            vec![1.0 - m, m]
                        }
                        SlotKind::Categorical => {
                            let v: Vec<f64> = (0..family.categories).map(|k| get(Some(k))).collect();
                            let total: f64 = v.iter().sum();
                            v.iter().map(|x| x / total).collect()
                        }
                    });
                }
                slots.push(levels);
            }
            Lambda::from_slots(graph, slots)?
        }
    };

    let mut pi = BTreeMap::new();
    for task in problem.tasks() {
        let p = match plan.fixed_pi.get(task) {
            Some(p) => *p,
            None => {
                let m = |positive| {
                    summaries
                        .iter()
                        .find(|s| {
                            s.key
                                == ParamKey::Pi {
                                    task: task.clone(),
                                    positive,
                                }
                        })
                        .map(|s| s.mean)
                        .expect("free task has summaries")
                };
                Misclassification::new(m(false), m(true))?
            }
        };
        pi.insert(task.clone(), p);
    }

    let mut calibrated = model.clone();
    for t in calibrated.tasks.iter_mut() {
        if let Some(p) = pi.get(&t.id) {
            t.pi = Some(*p);
        }
    }
    calibrated.validate()?;

    Ok(CalibrationRun {
        version: SCHEMA_VERSION,
        mode: plan.mode,
        config: *config,
        chain_seeds,
        tasks: problem.tasks().to_vec(),
        new_tasks: plan.new_tasks,
        n_examinees: problem.n_examinees(),
        summaries,
        lambda: lambda.to_named(graph),
        pi,
        model: calibrated,
        draws: Some(Draws {
            names: scalars.iter().map(|s| s.key.to_string()).collect(),
            chains,
        }),
    })
}

/// Startup calibration of λ and every task in `data`.
pub fn run_gibbs(model: &AssessmentModel, data: &ResponseMatrix, priors: &PriorSet, config: &GibbsConfig) -> Result<CalibrationRun> {
    execute(
        model,
        data,
        Plan {
            mode: RunMode::Startup,
            priors,
            reference: priors,
            fixed_lambda: None,
            fixed_pi: BTreeMap::new(),
            new_tasks: Vec::new(),
        },
        config,
    )
}

fn summary_of(previous: &CalibrationRun, key: ParamKey) -> Result<&ParameterSummary> {
    previous
        .summary(&key)
        .ok_or_else(|| Error::MissingSummary(key.to_string()))
}

fn check_new_tasks(data: &ResponseMatrix, new_tasks: &[String]) -> Result<BTreeSet<String>> {
    for t in new_tasks {
        data.task_index(t)?;
    }
    Ok(new_tasks.iter().cloned().collect())
}

/// Online calibration that re-estimates everything, with priors for λ and
/// the old tasks moment-matched to the previous run's posteriors.
///
/// `model` must contain every task in `data`; tasks listed in `new_tasks`
/// take their evidence model's priors. n̂ is measured against `model`'s
/// original priors.
pub fn calibrate_new_full(
    previous: &CalibrationRun,
    model: &AssessmentModel,
    data: &ResponseMatrix,
    new_tasks: &[String],
    config: &GibbsConfig,
) -> Result<CalibrationRun> {
    let new = check_new_tasks(data, new_tasks)?;
    let reference = PriorSet::from_model(model)?;

    let mut lambda = BTreeMap::new();
    for family in model.graph.families() {
        let mut levels = Vec::with_capacity(family.levels);
        for level in 0..family.levels {
            let key = |category| ParamKey::Lambda {
                family: family.name.clone(),
                level,
                category,
            };
            levels.push(match family.kind {
                SlotKind::Bernoulli => {
                    let s = summary_of(previous, key(None))?;
                    SlotPrior::Beta(BetaPrior {
                        alpha: s.alpha_hat,
                        beta: s.beta_hat,
                    })
                }
                SlotKind::Categorical => {
                    let s = (0..family.categories)
                        .map(|k| summary_of(previous, key(Some(k))))
                        .collect::<Result<Vec<_>>>()?;
                    let means: Vec<f64> = s.iter().map(|s| s.mean).collect();
                    let sds: Vec<f64> = s.iter().map(|s| s.sd).collect();
                    SlotPrior::Dirichlet(moment_match_dirichlet(&means, &sds)?)
                }
            });
        }
        lambda.insert(family.name.clone(), levels);
    }

    let mut tasks = BTreeMap::new();
    for t in data.tasks() {
        let prior = if new.contains(t) {
            *reference.tasks.get(t).ok_or_else(|| Error::UnknownTask(t.clone()))?
        } else {
            let beta = |positive| {
                summary_of(
                    previous,
                    ParamKey::Pi {
                        task: t.clone(),
                        positive,
                    },
                )
                .map(|s| BetaPrior {
                    alpha: s.alpha_hat,
                    beta: s.beta_hat,
                })
            };
            TaskPrior {
                false_pos: beta(false)?,
                true_pos: beta(true)?,
            }
        };
        tasks.insert(t.clone(), prior);
    }
    let priors = PriorSet { lambda, tasks };

    execute(
        model,
        data,
        Plan {
            mode: RunMode::Full,
            priors: &priors,
            reference: &reference,
            fixed_lambda: None,
            fixed_pi: BTreeMap::new(),
            new_tasks: new_tasks.to_vec(),
        },
        config,
    )
}

/// Online calibration with λ and the old tasks' π fixed at the previous
/// run's point estimates; only Θ and the new tasks' π are sampled.
pub fn calibrate_new_eb(
    previous: &CalibrationRun,
    model: &AssessmentModel,
    data: &ResponseMatrix,
    new_tasks: &[String],
    config: &GibbsConfig,
) -> Result<CalibrationRun> {
    let new = check_new_tasks(data, new_tasks)?;
    let priors = PriorSet::from_model(model)?;
    let lambda = previous.lambda_estimate()?;
    let mut fixed_pi = BTreeMap::new();
    for t in data.tasks() {
        if !new.contains(t) {
            let p = previous
                .pi
                .get(t)
                .ok_or_else(|| Error::MissingSummary(format!("pi{t}")))?;
            fixed_pi.insert(t.clone(), *p);
        }
    }
    execute(
        model,
        data,
        Plan {
            mode: RunMode::EmpiricalBayes,
            priors: &priors,
            reference: &priors,
            fixed_lambda: Some(lambda),
            fixed_pi,
            new_tasks: new_tasks.to_vec(),
        },
        config,
    )
}
