//! `generate`, `calibrate` and `calibrate-new`.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::bail;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use skillnet::data::io::load_json;
use skillnet::data::responses::ResponseMatrix;
use skillnet::data::synthetic::{generate_synthetic, sample_truth};
use skillnet::gibbs::{calibrate_new_eb, calibrate_new_full, run_gibbs, CalibrationRun, ParameterSummary, PriorSet};
use skillnet::model::Lambda;
use skillnet::stats::stream_seed;

use crate::manifest::{absolute, Session};
use crate::util::{absolute_opt, emit, model_or_builtin, ChainArgs, ParamsFile};
use crate::Global;

/// R̂ above this draws a warning.
const RHAT_WARNING: f64 = 1.1;

#[derive(Debug, Clone, clap::Args, Serialize, Deserialize)]
pub struct GenerateArgs {
    /// Model file; the bundled fractions model if omitted.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// File with the generating λ and π (a truth file works).
    #[arg(long, conflicts_with = "sample_truth")]
    pub truth: Option<PathBuf>,
    /// Draw λ and π from the model's priors (the default without --truth).
    #[arg(long)]
    pub sample_truth: bool,
    /// Number of examinees.
    #[arg(long, default_value_t = 325)]
    pub n: usize,
}

impl GenerateArgs {
    pub fn absolutize(&mut self) -> anyhow::Result<()> {
        absolute_opt(&mut self.model)?;
        absolute_opt(&mut self.truth)
    }
}

pub fn generate(args: &GenerateArgs, global: &Global, session: &mut Session) -> anyhow::Result<()> {
    let model = model_or_builtin(args.model.as_deref(), session)?;
    let (lambda, pi) = match &args.truth {
        Some(path) => {
            let params: ParamsFile = load_json(session.input(path))?;
            (Lambda::from_named(&model.graph, &params.lambda)?, params.pi)
        }
        None => sample_truth(&model, stream_seed(global.seed, 0))?,
    };
    let (data, truth) = generate_synthetic(&model, &lambda, &pi, args.n, stream_seed(global.seed, 1))?;
    let mut csv = Vec::new();
    data.write_csv(&mut csv)?;
    session.write("responses.csv", &csv)?;
    session.write_json("truth.json", &truth)?;
    session.write_json("model.json", &model)?;

    let text = format!(
        "{} examinees x {} tasks written to {}\n",
        data.n_examinees(),
        data.n_tasks(),
        global.out.display()
    );
    emit(global, &text, &truth)
}

#[derive(Debug, Clone, clap::Args, Serialize, Deserialize)]
pub struct CalibrateArgs {
    /// Model file; the bundled fractions model if omitted.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Response CSV.
    #[arg(long)]
    pub responses: PathBuf,
    /// Prior file replacing the model's hyperparameters.
    #[arg(long)]
    pub priors: Option<PathBuf>,
    #[command(flatten)]
    pub chains: ChainArgs,
    /// Calibrate on a seeded random sample of this many examinees; the
    /// others are written to `excluded.csv`.
    #[arg(long)]
    pub examinee_subset: Option<usize>,
    /// Keep only the first N tasks (after --drop-tasks).
    #[arg(long)]
    pub task_subset: Option<usize>,
    /// Comma-separated task ids to leave out.
    #[arg(long, value_delimiter = ',')]
    pub drop_tasks: Vec<String>,
    /// Also write every retained draw to `run-draws.csv`.
    #[arg(long)]
    pub save_draws: bool,
}

impl CalibrateArgs {
    pub fn absolutize(&mut self) -> anyhow::Result<()> {
        absolute_opt(&mut self.model)?;
        absolute(&mut self.responses)?;
        absolute_opt(&mut self.priors)
    }
}

/// Prior file: hyperparameters of every λ slot and task.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct PriorsFile {
    version: u64,
    #[serde(flatten)]
    priors: PriorSet,
}

#[derive(Serialize)]
struct RunOutput<'a> {
    summaries: &'a [ParameterSummary],
    warnings: Vec<String>,
}

fn rhat_warnings(run: &CalibrationRun) -> Vec<String> {
    run.summaries
        .iter()
        .filter_map(|s| {
            s.rhat
                .filter(|&r| !(r < RHAT_WARNING))
                .map(|r| format!("R-hat {r:.3} for {} exceeds {RHAT_WARNING}", s.name))
        })
        .collect()
}

fn warn(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn save_run(session: &mut Session, name: &str, run: &CalibrationRun, draws: bool) -> anyhow::Result<()> {
    session.write_json(&format!("{name}.json"), run)?;
    if draws {
        if let Some(d) = &run.draws {
            let mut csv = Vec::new();
            d.write_csv(&mut csv)?;
            session.write(&format!("{name}-draws.csv"), &csv)?;
        }
    }
    Ok(())
}

pub fn calibrate(args: &CalibrateArgs, global: &Global, session: &mut Session) -> anyhow::Result<()> {
    let model = model_or_builtin(args.model.as_deref(), session)?;
    let all = ResponseMatrix::load_csv(session.input(&args.responses))?;
    let priors = match &args.priors {
        Some(p) => load_json::<PriorsFile>(session.input(p))?.priors,
        None => PriorSet::from_model(&model)?,
    };

    let mut data = all.clone();
    let mut excluded = None;
    if let Some(k) = args.examinee_subset {
        let n = all.n_examinees();
        if k == 0 || k > n {
            bail!("--examinee-subset {k} must be between 1 and {n}");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(global.seed, 1));
        let mut chosen = rand::seq::index::sample(&mut rng, n, k).into_vec();
        chosen.sort_unstable();
        let picked: BTreeSet<usize> = chosen.iter().copied().collect();
        let rest: Vec<usize> = (0..n).filter(|i| !picked.contains(i)).collect();
        data = all.select_examinees(&chosen)?;
        if !rest.is_empty() {
            excluded = Some(all.select_examinees(&rest)?);
        }
    }
    for t in &args.drop_tasks {
        data.task_index(t)?;
    }
    let mut tasks: Vec<String> = data
        .tasks()
        .iter()
        .filter(|t| !args.drop_tasks.contains(t))
        .cloned()
        .collect();
    if let Some(k) = args.task_subset {
        if k == 0 || k > tasks.len() {
            bail!("--task-subset {k} must be between 1 and {}", tasks.len());
        }
        tasks.truncate(k);
    }
    let data = data.select_tasks(&tasks)?;

    let run = run_gibbs(&model, &data, &priors, &args.chains.config(global.seed))?;
    let warnings = rhat_warnings(&run);
    warn(&warnings);

    save_run(session, "run", &run, args.save_draws)?;
    let table = run.summary_table();
    session.write("report.txt", table.as_bytes())?;
    if let Some(x) = excluded {
        let mut csv = Vec::new();
        x.write_csv(&mut csv)?;
        session.write("excluded.csv", &csv)?;
    }

    let text = format!(
        "{} examinees x {} tasks, {} chains x {} draws\n\n{table}",
        data.n_examinees(),
        data.n_tasks(),
        run.config.chains,
        run.config.kept
    );
    emit(
        global,
        &text,
        &RunOutput {
            summaries: &run.summaries,
            warnings,
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NewMode {
    Full,
    Eb,
    Both,
}

#[derive(Debug, Clone, clap::Args, Serialize, Deserialize)]
pub struct CalibrateNewArgs {
    /// Run file from the earlier calibration.
    #[arg(long)]
    pub run: PathBuf,
    /// Responses from the new sample, including the new tasks.
    #[arg(long)]
    pub responses: PathBuf,
    /// Comma-separated new task ids; by default every task the earlier run
    /// did not calibrate.
    #[arg(long, value_delimiter = ',')]
    pub new_tasks: Vec<String>,
    /// Re-estimate everything (full), fix old parameters (eb), or both.
    #[arg(long, value_enum, default_value_t = NewMode::Both)]
    pub mode: NewMode,
    #[command(flatten)]
    pub chains: ChainArgs,
    /// Also write every retained draw.
    #[arg(long)]
    pub save_draws: bool,
}

impl CalibrateNewArgs {
    pub fn absolutize(&mut self) -> anyhow::Result<()> {
        absolute(&mut self.run)?;
        absolute(&mut self.responses)
    }
}

/// New-task rows of two runs side by side.
pub fn comparison_table(full: &CalibrationRun, eb: &CalibrationRun) -> String {
    let mut out = String::new();
    let rows: Vec<(&ParameterSummary, &ParameterSummary)> = eb
        .summaries
        .iter()
        .filter_map(|e| full.summary(&e.key).map(|f| (f, e)))
        .collect();
    let width = rows.iter().map(|(f, _)| f.name.len()).max().unwrap_or(0).max(9);
    let _ = writeln!(
        out,
        "{:<width$}  {:>9}  {:>7}  {:>6}  {:>6}",
        "Parameter", "Full mean", "EB mean", "Full n", "EB n"
    );
    for (f, e) in &rows {
        let _ = writeln!(
            out,
            "{:<width$}  {:>9.2}  {:>7.2}  {:>6.0}  {:>6.0}",
            f.name, f.mean, e.mean, f.n_hat, e.n_hat
        );
    }
    if !rows.is_empty() {
        let gap: f64 = rows.iter().map(|(f, e)| e.n_hat - f.n_hat).sum::<f64>() / rows.len() as f64;
        let _ = writeln!(out, "\nmean n difference (EB - full): {gap:.1}");
    }
    out
}

#[derive(Serialize)]
struct NewOutput<'a> {
    full: Option<&'a [ParameterSummary]>,
    eb: Option<&'a [ParameterSummary]>,
    warnings: Vec<String>,
}

pub fn calibrate_new(args: &CalibrateNewArgs, global: &Global, session: &mut Session) -> anyhow::Result<()> {
    let previous: CalibrationRun = load_json(session.input(&args.run))?;
    let data = ResponseMatrix::load_csv(session.input(&args.responses))?;
    let new_tasks: Vec<String> = if args.new_tasks.is_empty() {
        let old: BTreeSet<&String> = previous.tasks.iter().collect();
        data.tasks().iter().filter(|t| !old.contains(t)).cloned().collect()
    } else {
        args.new_tasks.clone()
    };
    if new_tasks.is_empty() {
        bail!("no new tasks: every task in {} was calibrated before", args.responses.display());
    }
    let model = &previous.model;
    let config = args.chains.config(global.seed);

    let full = match args.mode {
        NewMode::Full | NewMode::Both => Some(calibrate_new_full(&previous, model, &data, &new_tasks, &config)?),
        NewMode::Eb => None,
    };
    let eb = match args.mode {
        NewMode::Eb | NewMode::Both => Some(calibrate_new_eb(&previous, model, &data, &new_tasks, &config)?),
        NewMode::Full => None,
    };

    let mut warnings = Vec::new();
    let mut text = format!(
        "{} examinees x {} tasks; new tasks: {}\n",
        data.n_examinees(),
        data.n_tasks(),
        new_tasks.join(", ")
    );
    if let Some(run) = &full {
        warnings.extend(rhat_warnings(run));
        save_run(session, "run-full", run, args.save_draws)?;
        let _ = write!(text, "\nFull Bayes\n{}", run.summary_table());
    }
    if let Some(run) = &eb {
        warnings.extend(rhat_warnings(run));
        save_run(session, "run-eb", run, args.save_draws)?;
        let _ = write!(text, "\nEmpirical Bayes\n{}", run.summary_table());
    }
    if let (Some(f), Some(e)) = (&full, &eb) {
        let _ = write!(text, "\nNew tasks\n{}", comparison_table(f, e));
    }
    warn(&warnings);
    session.write("report.txt", text.as_bytes())?;

    let out = NewOutput {
        full: full.as_ref().map(|r| r.summaries.as_slice()),
        eb: eb.as_ref().map(|r| r.summaries.as_slice()),
        warnings,
    };
    emit(global, &text, &out)
}
