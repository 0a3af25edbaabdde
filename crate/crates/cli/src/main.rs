//! `skillnet`: generate synthetic responses, calibrate, score, calibrate new
//! tasks, simulate adaptive testing and report.

// `!(x > 0.0)` style checks deliberately reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod calibrate;
mod cat_sim;
mod manifest;
mod report;
mod score;
mod util;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::manifest::Session;

#[derive(Debug, Parser)]
#[command(name = "skillnet", version, about = "Skill diagnosis with Bayes-net fragments and Rasch adaptive testing")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, clap::Args, Serialize, Deserialize)]
pub struct Global {
    /// Master random seed.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Format of what is printed to stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Suppresses stdout; set for manifest re-runs.
    #[arg(skip)]
    #[serde(skip)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "command")]
pub enum Command {
    /// Simulate examinees and responses from known parameters.
    Generate(calibrate::GenerateArgs),
    /// Estimate λ and π by Gibbs sampling.
    Calibrate(calibrate::CalibrateArgs),
    /// Posterior skill profile of one examinee.
    Score(score::ScoreArgs),
    /// Calibrate new tasks against a previous run.
    CalibrateNew(calibrate::CalibrateNewArgs),
    /// Simulate adaptive testing sessions on a Rasch item pool.
    CatSim(cat_sim::CatSimArgs),
    /// Print run tables, or re-run a manifest and compare outputs.
    Report(report::ReportArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Generate(_) => "generate",
            Command::Calibrate(_) => "calibrate",
            Command::Score(_) => "score",
            Command::CalibrateNew(_) => "calibrate-new",
            Command::CatSim(_) => "cat-sim",
            Command::Report(_) => "report",
        }
    }

    /// Rewrites every input path as an absolute path.
    pub fn absolutize(&mut self) -> anyhow::Result<()> {
        match self {
            Command::Generate(a) => a.absolutize(),
            Command::Calibrate(a) => a.absolutize(),
            Command::Score(a) => a.absolutize(),
            Command::CalibrateNew(a) => a.absolutize(),
            Command::CatSim(a) => a.absolutize(),
            Command::Report(a) => a.absolutize(),
        }
    }
}

/// Runs `command`, writing outputs and a manifest under `global.out`.
pub fn execute(mut command: Command, global: &Global) -> anyhow::Result<()> {
    command.absolutize()?;
    let mut session = Session::new(global)?;
    match &command {
        Command::Generate(a) => calibrate::generate(a, global, &mut session)?,
        Command::Calibrate(a) => calibrate::calibrate(a, global, &mut session)?,
        Command::Score(a) => score::score(a, global, &mut session)?,
        Command::CalibrateNew(a) => calibrate::calibrate_new(a, global, &mut session)?,
        Command::CatSim(a) => cat_sim::cat_sim(a, global, &mut session)?,
        Command::Report(a) => {
            if !report::report(a, global, &mut session)? {
                return Ok(());
            }
        }
    }
    session.finish(&command, global)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let internal = err
        .chain()
        .find_map(|c| c.downcast_ref::<skillnet::Error>())
        .is_some_and(|e| !e.is_user_error());
    if internal {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command, &cli.global) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
