//! `report`: run tables, or a manifest re-run with output comparison.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use skillnet::data::io::load_json;
use skillnet::gibbs::{CalibrationRun, RunMode};

use crate::calibrate::comparison_table;
use crate::manifest::{absolute, sha256_hex, RunManifest, Session, MANIFEST_FILE};
use crate::util::{absolute_opt, emit};
use crate::{execute, Global};

#[derive(Debug, Clone, clap::Args, Serialize, Deserialize)]
pub struct ReportArgs {
    /// Run files to tabulate; a full and an empirical-Bayes run of the same
    /// new tasks are also compared side by side.
    #[arg(long, required_unless_present = "manifest")]
    pub run: Vec<PathBuf>,
    /// Manifest of an earlier command to re-run.
    #[arg(long, requires = "rerun_into", conflicts_with = "run")]
    pub manifest: Option<PathBuf>,
    /// Directory for the re-run's outputs.
    #[arg(long, requires = "manifest")]
    pub rerun_into: Option<PathBuf>,
}

impl ReportArgs {
    pub fn absolutize(&mut self) -> anyhow::Result<()> {
        for p in &mut self.run {
            absolute(p)?;
        }
        absolute_opt(&mut self.manifest)?;
        absolute_opt(&mut self.rerun_into)
    }
}

fn mode_name(mode: RunMode) -> &'static str {
    match mode {
        RunMode::Startup => "startup calibration",
        RunMode::Full => "new-task calibration, full Bayes",
        RunMode::EmpiricalBayes => "new-task calibration, empirical Bayes",
    }
}

#[derive(Serialize)]
struct Comparison {
    file: PathBuf,
    identical: bool,
}

/// Returns whether a manifest should be written for this invocation.
pub fn report(args: &ReportArgs, global: &Global, session: &mut Session) -> anyhow::Result<bool> {
    if let (Some(manifest), Some(dir)) = (&args.manifest, &args.rerun_into) {
        rerun(manifest, dir, global)?;
        return Ok(false);
    }

    let mut runs = Vec::with_capacity(args.run.len());
    for p in &args.run {
        let run: CalibrationRun = load_json(session.input(p))?;
        runs.push((p, run));
    }
    let mut text = String::new();
    for (p, run) in &runs {
        let _ = writeln!(
            text,
            "{} ({}, {} examinees x {} tasks)\n{}",
            p.display(),
            mode_name(run.mode),
            run.n_examinees,
            run.tasks.len(),
            run.summary_table()
        );
    }
    let full = runs.iter().find(|(_, r)| r.mode == RunMode::Full);
    let eb = runs.iter().find(|(_, r)| r.mode == RunMode::EmpiricalBayes);
    if let (Some((_, f)), Some((_, e))) = (full, eb) {
        let _ = write!(text, "New tasks\n{}", comparison_table(f, e));
    }
    session.write("report.txt", text.as_bytes())?;
    let summaries: Vec<_> = runs.iter().map(|(_, r)| &r.summaries).collect();
    emit(global, &text, &summaries)?;
    Ok(true)
}

fn rerun(path: &std::path::Path, dir: &std::path::Path, global: &Global) -> anyhow::Result<()> {
    let manifest: RunManifest = load_json(path)?;
    for input in &manifest.inputs {
        let bytes = std::fs::read(&input.path).with_context(|| format!("reading input {}", input.path.display()))?;
        if sha256_hex(&bytes) != input.sha256 {
            bail!("input {} changed since the manifest was written", input.path.display());
        }
    }
    let rerun_global = Global {
        seed: manifest.seed,
        out: dir.to_path_buf(),
        format: manifest.format,
        quiet: true,
    };
    execute(manifest.config.clone(), &rerun_global).context("re-running manifest command")?;
    let fresh: RunManifest = load_json(&dir.join(MANIFEST_FILE))?;

    let mut results = Vec::with_capacity(manifest.outputs.len());
    for out in &manifest.outputs {
        let identical = fresh
            .outputs
            .iter()
            .any(|f| f.path == out.path && f.sha256 == out.sha256);
        results.push(Comparison {
            file: out.path.clone(),
            identical,
        });
    }
    let extra: Vec<_> = fresh
        .outputs
        .iter()
        .filter(|f| !manifest.outputs.iter().any(|o| o.path == f.path))
        .collect();

    let mut text = String::new();
    for r in &results {
        let _ = writeln!(text, "{:<9}  {}", if r.identical { "identical" } else { "DIFFERS" }, r.file.display());
    }
    for f in &extra {
        let _ = writeln!(text, "{:<9}  {}", "EXTRA", f.path.display());
    }
    emit(global, &text, &results)?;
    let differing = results.iter().filter(|r| !r.identical).count() + extra.len();
    if differing > 0 {
        bail!("{differing} output(s) of `{}` differ from the manifest", manifest.command);
    }
    Ok(())
}
