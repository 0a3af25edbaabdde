//! `cat-sim`: simulated adaptive testing sessions.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::bail;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use skillnet::irt::{rasch_prob, run_cat, CatConfig, CatTrace, ItemPool, RaschItem, Selection, StopReason, ThetaGrid};
use skillnet::stats::stream_seed;

use crate::manifest::Session;
use crate::util::{absolute_opt, emit};
use crate::Global;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selector {
    Adaptive,
    Random,
    Both,
}

#[derive(Debug, Clone, clap::Args, Serialize, Deserialize)]
pub struct CatSimArgs {
    /// Item pool (CSV `id,beta,...` or JSON); generated if omitted.
    #[arg(long)]
    pub pool: Option<PathBuf>,
    /// Size of a generated pool, difficulties uniform on (-3, 3).
    #[arg(long, default_value_t = 200)]
    pub pool_size: usize,
    /// Number of simulated examinees.
    #[arg(long, default_value_t = 500)]
    pub sessions: usize,
    /// True ability of every examinee; drawn from N(0, 1) if omitted.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    /// Stop once the posterior SD is at most this.
    #[arg(long, default_value_t = 0.35)]
    pub stop_sd: f64,
    /// Item cap per session; the pool size if omitted.
    #[arg(long)]
    pub max_items: Option<usize>,
    #[arg(long, value_enum, default_value_t = Selector::Both)]
    pub selector: Selector,
    /// Points of the N(0, 1) ability grid on [-4, 4].
    #[arg(long, default_value_t = 61)]
    pub grid_points: usize,
}

impl CatSimArgs {
    pub fn absolutize(&mut self) -> anyhow::Result<()> {
        absolute_opt(&mut self.pool)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectorSummary {
    pub selector: String,
    pub sessions: usize,
    pub mean_items: f64,
    pub max_items: usize,
    pub precision_stops: usize,
    /// Share of sessions whose final mean ± 3 SD covers the true θ.
    pub coverage: f64,
    pub rmse: f64,
}

fn summarize(name: &str, runs: &[(f64, CatTrace)]) -> SelectorSummary {
    let n = runs.len();
    let items: usize = runs.iter().map(|(_, t)| t.steps.len()).sum();
    let covered = runs
        .iter()
        .filter(|(theta, t)| (t.final_mean() - theta).abs() <= 3.0 * t.final_sd())
        .count();
    let sq: f64 = runs.iter().map(|(theta, t)| (t.final_mean() - theta).powi(2)).sum();
    SelectorSummary {
        selector: name.to_string(),
        sessions: n,
        mean_items: items as f64 / n as f64,
        max_items: runs.iter().map(|(_, t)| t.steps.len()).max().unwrap_or(0),
        precision_stops: runs.iter().filter(|(_, t)| t.stop == StopReason::Precision).count(),
        coverage: covered as f64 / n as f64,
        rmse: (sq / n as f64).sqrt(),
    }
}

pub fn cat_sim(args: &CatSimArgs, global: &Global, session: &mut Session) -> anyhow::Result<()> {
    if args.sessions == 0 {
        bail!("--sessions must be at least 1");
    }
    let pool: Vec<RaschItem> = match &args.pool {
        Some(path) => ItemPool::load(session.input(path))?.calibrated_items()?,
        None => {
            if args.pool_size == 0 {
                bail!("--pool-size must be at least 1");
            }
            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(global.seed, 0));
            let width = args.pool_size.to_string().len();
            (0..args.pool_size)
                .map(|j| RaschItem::new(&format!("item{:0width$}", j + 1), rng.random_range(-3.0..3.0)))
                .collect::<skillnet::Result<_>>()?
        }
    };
    let mut csv = Vec::new();
    ItemPool::from_items(&pool)?.write_csv(&mut csv)?;
    session.write("pool.csv", &csv)?;

    let config = CatConfig::new(args.stop_sd, args.max_items.unwrap_or(pool.len()))?;
    let grid = ThetaGrid::normal(0.0, 1.0, args.grid_points, -4.0, 4.0)?;
    let index: HashMap<&str, usize> = pool.iter().enumerate().map(|(j, it)| (it.id.as_str(), j)).collect();
    let selectors: &[&str] = match args.selector {
        Selector::Adaptive => &["adaptive"],
        Selector::Random => &["random"],
        Selector::Both => &["adaptive", "random"],
    };

    let mut results: Vec<Vec<(f64, CatTrace)>> = vec![Vec::with_capacity(args.sessions); selectors.len()];
    for s in 0..args.sessions {
        // one θ and one uniform per item, shared by every selector
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(global.seed, 1 + s as u64));
        let theta = args.theta.unwrap_or_else(|| StandardNormal.sample(&mut rng));
        let u: Vec<f64> = (0..pool.len()).map(|_| rng.random()).collect();
        let mut select_rng = ChaCha8Rng::seed_from_u64(rng.random());
        let respond = |it: &RaschItem| Ok((u[index[it.id.as_str()]] < rasch_prob(theta, it.beta)) as u8);
        for (k, name) in selectors.iter().enumerate() {
            let selection = match *name {
                "adaptive" => Selection::Adaptive,
                _ => Selection::Random(&mut select_rng),
            };
            let trace = run_cat(respond, &pool, &grid, &config, selection)?;
            results[k].push((theta, trace));
        }
    }

    let mut traces = csv::Writer::from_writer(Vec::new());
    traces.write_record(["session", "selector", "theta", "step", "item", "beta", "response", "mean", "sd"])?;
    for (k, name) in selectors.iter().enumerate() {
        for (s, (theta, trace)) in results[k].iter().enumerate() {
            for (i, st) in trace.steps.iter().enumerate() {
                traces.write_record([
                    (s + 1).to_string(),
                    name.to_string(),
                    format!("{theta:?}"),
                    (i + 1).to_string(),
                    st.item.clone(),
                    format!("{:?}", st.beta),
                    st.response.to_string(),
                    format!("{:?}", st.mean),
                    format!("{:?}", st.sd),
                ])?;
            }
        }
    }
    session.write("traces.csv", &traces.into_inner()?)?;

    let summaries: Vec<SelectorSummary> = selectors
        .iter()
        .zip(&results)
        .map(|(name, runs)| summarize(name, runs))
        .collect();
    session.write_json("summary.json", &summaries)?;

    let mut text = format!(
        "{} sessions, {} items, stop at SD {} or {} items\n\n",
        args.sessions,
        pool.len(),
        args.stop_sd,
        config.max_items()
    );
    let _ = writeln!(
        text,
        "{:<9}  {:>10}  {:>9}  {:>15}  {:>8}  {:>5}",
        "Selector", "Mean items", "Max items", "Precision stops", "Coverage", "RMSE"
    );
    for s in &summaries {
        let _ = writeln!(
            text,
            "{:<9}  {:>10.2}  {:>9}  {:>15}  {:>8.3}  {:>5.3}",
            s.selector, s.mean_items, s.max_items, s.precision_stops, s.coverage, s.rmse
        );
    }
    emit(global, &text, &summaries)
}
