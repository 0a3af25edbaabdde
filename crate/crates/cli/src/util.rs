use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use skillnet::data::assets::builtin_fraction_assets;
use skillnet::data::io::load_model;
use skillnet::gibbs::GibbsConfig;
use skillnet::model::{AssessmentModel, Misclassification, NamedLambda};

use crate::manifest::{absolute, Session};
use crate::{Format, Global};

/// Fixed λ and π, as written by `generate` (the truth file) or by hand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsFile {
    pub version: u64,
    pub lambda: NamedLambda,
    pub pi: BTreeMap<String, Misclassification>,
}

#[derive(Debug, Clone, clap::Args, Serialize, Deserialize)]
pub struct ChainArgs {
    /// Number of independent chains.
    #[arg(long, default_value_t = 3)]
    pub chains: usize,
    /// Sweeps discarded at the start of each chain.
    #[arg(long, default_value_t = 2000)]
    pub burn_in: usize,
    /// Draws kept per chain.
    #[arg(long, default_value_t = 5000)]
    pub kept: usize,
    /// Sweeps per kept draw.
    #[arg(long, default_value_t = 1)]
    pub thin: usize,
}

impl ChainArgs {
    pub fn config(&self, seed: u64) -> GibbsConfig {
        GibbsConfig {
            chains: self.chains,
            burn_in: self.burn_in,
            kept: self.kept,
            thin: self.thin,
            seed,
        }
    }
}

pub fn absolute_opt(path: &mut Option<PathBuf>) -> anyhow::Result<()> {
    if let Some(p) = path {
        absolute(p)?;
    }
    Ok(())
}

/// The model at `path`, or the bundled fractions model.
pub fn model_or_builtin(path: Option<&Path>, session: &mut Session) -> anyhow::Result<AssessmentModel> {
    Ok(match path {
        Some(p) => load_model(session.input(p))?,
        None => builtin_fraction_assets(),
    })
}

/// Prints `text` or the JSON form of `value` depending on `--format`.
pub fn emit<T: Serialize>(global: &Global, text: &str, value: &T) -> anyhow::Result<()> {
    if global.quiet {
        return Ok(());
    }
    match global.format {
        Format::Text => print!("{text}"),
        Format::Json => print!("{}", skillnet::data::io::to_json_string(value)?),
    }
    Ok(())
}
