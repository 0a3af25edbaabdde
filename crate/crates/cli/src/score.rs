//! `score`: posterior skill profile for one examinee.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use skillnet::data::io::load_json;
use skillnet::data::responses::ResponseMatrix;
use skillnet::fragment::{score_examinee, Observation};
use skillnet::gibbs::CalibrationRun;
use skillnet::model::{JointSpace, Lambda};

use crate::manifest::Session;
use crate::util::{absolute_opt, emit, model_or_builtin, ParamsFile};
use crate::Global;

#[derive(Debug, Clone, clap::Args, Serialize, Deserialize)]
pub struct ScoreArgs {
    /// Run file whose posterior means are used.
    #[arg(long, conflicts_with = "params", required_unless_present = "params")]
    pub run: Option<PathBuf>,
    /// File with fixed λ and π.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Model for --params; the bundled fractions model if omitted.
    #[arg(long, conflicts_with = "run")]
    pub model: Option<PathBuf>,
    /// Response CSV holding the examinee.
    #[arg(long, conflicts_with = "answers")]
    pub responses: Option<PathBuf>,
    /// Row of --responses to score; may be omitted for a one-row file.
    #[arg(long, requires = "responses")]
    pub examinee: Option<String>,
    /// Responses given inline as `task=0|1`, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub answers: Vec<String>,
}

impl ScoreArgs {
    pub fn absolutize(&mut self) -> anyhow::Result<()> {
        absolute_opt(&mut self.run)?;
        absolute_opt(&mut self.params)?;
        absolute_opt(&mut self.model)?;
        absolute_opt(&mut self.responses)
    }
}

fn parse_answer(text: &str) -> anyhow::Result<Observation> {
    let (task, value) = text
        .split_once('=')
        .with_context(|| format!("answer `{text}` is not of the form task=0|1"))?;
    let value = match value.trim() {
        "0" => 0,
        "1" => 1,
        v => bail!("answer `{text}`: `{v}` is not 0 or 1"),
    };
    Ok(Observation::new(task.trim(), value))
}

pub fn score(args: &ScoreArgs, global: &Global, session: &mut Session) -> anyhow::Result<()> {
    let (model, named_lambda, pi) = match (&args.run, &args.params) {
        (Some(path), _) => {
            let run: CalibrationRun = load_json(session.input(path))?;
            (run.model, run.lambda, run.pi)
        }
        (None, Some(path)) => {
            let model = model_or_builtin(args.model.as_deref(), session)?;
            let params: ParamsFile = load_json(session.input(path))?;
            (model, params.lambda, params.pi)
        }
        (None, None) => bail!("one of --run or --params is required"),
    };
    let lambda = Lambda::from_named(&model.graph, &named_lambda)?;
    let fragments = pi
        .iter()
        .map(|(task, p)| Ok((task.clone(), model.fragment_with(task, *p)?)))
        .collect::<skillnet::Result<BTreeMap<_, _>>>()?;

    let observations: Vec<Observation> = match &args.responses {
        Some(path) => {
            let data = ResponseMatrix::load_csv(session.input(path))?;
            let row = match &args.examinee {
                Some(id) => data.examinee_index(id)?,
                None if data.n_examinees() == 1 => 0,
                None => bail!(
                    "{} has {} examinees; choose one with --examinee",
                    path.display(),
                    data.n_examinees()
                ),
            };
            data.tasks()
                .iter()
                .zip(data.row(row))
                .filter_map(|(t, x)| x.map(|x| Observation::new(t, x)))
                .collect()
        }
        None => args.answers.iter().map(|a| parse_answer(a)).collect::<anyhow::Result<_>>()?,
    };

    let space = Arc::new(JointSpace::new(Arc::new(model.graph.clone()))?);
    let report = score_examinee(space, &lambda, &fragments, &observations)?;
    session.write_json("score.json", &report)?;
    emit(global, &report.to_string(), &report)
}
