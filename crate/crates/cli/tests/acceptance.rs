//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Pass criterion numbers as arguments to run
//! a subset.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use common::{brute_force_posterior, fixture_graphs, random_lambda, random_pi, random_row, reporting_of};
use skillnet::data::assets::{builtin_fraction_assets, FRACTION_NEW_ITEMS};
use skillnet::data::responses::ResponseMatrix;
use skillnet::data::synthetic::{generate_synthetic, sample_truth};
use skillnet::fragment::{score_examinee, EvidenceFragment, Observation};
use skillnet::gibbs::{
    calibrate_new_eb, calibrate_new_full, lambda_conditionals, moment_match_beta, pi_conditionals, run_gibbs,
    summarize, CalibrationProblem, CalibrationRun, GibbsConfig, ParamKey, PriorSet,
};
use skillnet::irt::{
    expected_posterior_variance, lltm_fit, rasch_prob, run_cat, CatConfig, CatTrace, RaschItem, Selection, ThetaGrid,
};
use skillnet::model::{
    skill_conjunction, BetaPrior, JointSpace, Lambda, Misclassification, SkillKind, SlotPrior,
};
use skillnet::stats::stream_seed;

type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    (ok, detail)
}

fn c1_moment_match() -> Outcome {
    let (a, b) = moment_match_beta(0.806, 0.0248).unwrap();
    let n = a + b - 27.0;
    check(
        (200.0..=209.0).contains(&a) && (47.0..=51.0).contains(&b) && (224.0..=229.0).contains(&n),
        format!("alpha {a:.1}, beta {b:.1}, n {n:.1}"),
    )
}

fn c2_n_hat_identity() -> Outcome {
    // draws with the exact mean and SD of Beta(193, 16)
    let target = BetaPrior { alpha: 193.0, beta: 16.0 };
    let (m, s) = (target.mean(), target.sd());
    let half = 500;
    let d = s * ((2 * half - 1) as f64 / (2 * half) as f64).sqrt();
    let draws: Vec<f64> = (0..2 * half).map(|i| if i % 2 == 0 { m - d } else { m + d }).collect();
    let key = ParamKey::Pi {
        task: "4".into(),
        positive: true,
    };
    let summary = summarize(key, &draws, BetaPrior { alpha: 21.0, beta: 6.0 }).unwrap();
    let ok = (summary.mean * 1000.0).round() == 923.0
        && (format!("{:.2}", summary.mean) == "0.92")
        && (summary.n_hat - 182.0).abs() < 1e-6
        && (summary.alpha_hat - 193.0).abs() < 1e-6
        && (summary.beta_hat - 16.0).abs() < 1e-6;
    check(
        ok,
        format!(
            "mean {:.4}, alpha {:.6}, beta {:.6}, n {:.6}",
            summary.mean, summary.alpha_hat, summary.beta_hat, summary.n_hat
        ),
    )
}

fn c3_exact_inference() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for graph in fixture_graphs() {
        let space = Arc::new(JointSpace::new(Arc::new(graph.clone())).unwrap());
        assert!(space.len() <= 12);
        for _ in 0..100 {
            let lambda = random_lambda(&mut rng, &graph);
            let n_tasks = rng.random_range(1..=6);
            let mut fragments = BTreeMap::new();
            let mut evidence = Vec::new();
            let mut responses = Vec::new();
            for j in 0..n_tasks {
                let id = format!("t{j}");
                let row = random_row(&mut rng, graph.reporting().len());
                let pi = random_pi(&mut rng);
                let x = rng.random_range(0..2u8);
                fragments.insert(
                    id.clone(),
                    EvidenceFragment {
                        task: id.clone(),
                        skills_required: row.clone(),
                        pi,
                    },
                );
                evidence.push((row, pi, x));
                responses.push(Observation::new(&id, x));
            }
            let report = score_examinee(Arc::clone(&space), &lambda, &fragments, &responses).unwrap();
            let oracle = brute_force_posterior(&graph, &lambda, &evidence);
            for (s, o) in report.skills.iter().zip(oracle) {
                worst = worst.max((s.posterior - o).abs());
            }
            cases += 1;
        }
    }
    check(worst <= 1e-12, format!("{cases} cases, max abs error {worst:.2e}"))
}

fn c4_conjugacy() -> Outcome {
    let model = builtin_fraction_assets();
    let graph = &model.graph;
    let (lambda, pi) = sample_truth(&model, 4).unwrap();
    let (full, _) = generate_synthetic(&model, &lambda, &pi, 60, 5).unwrap();
    // knock out some cells so missing responses are exercised
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let cells: Vec<Option<u8>> = full.cells().iter().map(|&c| if rng.random_bool(0.1) { None } else { c }).collect();
    let data = ResponseMatrix::new(full.examinees().to_vec(), full.tasks().to_vec(), cells).unwrap();
    let problem = CalibrationProblem::new(&model, &data).unwrap();
    let priors = PriorSet::from_model(&model).unwrap();
    let resolved = priors.resolve(&problem).unwrap();
    let space = problem.space();
    let vars = graph.variables();
    let family_pos = |name: &str| graph.families().iter().position(|f| f.name == name).unwrap();
    let var_pos = |name: &str| vars.iter().position(|v| v.name == name).unwrap();

    let mut mismatches = 0;
    for _ in 0..1000 {
        let theta: Vec<usize> = (0..data.n_examinees()).map(|_| rng.random_range(0..space.len())).collect();

        // λ: prior pseudo-counts plus counts of (parent sum, value) per family
        let mut expected: Vec<Vec<Vec<f64>>> = graph
            .families()
            .iter()
            .map(|f| model.lambda_priors[&f.name].iter().map(SlotPrior::pseudo_counts).collect())
            .collect();
        for &c in &theta {
            let s = space.state(c);
            for (i, v) in vars.iter().enumerate() {
                if let SkillKind::Stochastic { family } = &v.kind {
                    let z: usize = v.parents.iter().map(|p| s[var_pos(p)] as usize).sum();
                    expected[family_pos(family)][z][s[i] as usize] += 1.0;
                }
            }
        }
        if lambda_conditionals(&problem, &theta, &resolved) != expected {
            mismatches += 1;
        }

        // π: prior plus (δ, x) counts over observed cells
        let got = pi_conditionals(&problem, &theta, &resolved);
        for (j, task) in data.tasks().iter().enumerate() {
            let em = model.task_model(task).unwrap();
            let mut n = [[0.0; 2]; 2];
            for (i, &c) in theta.iter().enumerate() {
                if let Some(x) = data.get(i, j) {
                    let rep = reporting_of(graph, space.state(c));
                    let d = skill_conjunction(&rep, &em.skills_required).unwrap() as usize;
                    n[d][x as usize] += 1.0;
                }
            }
            let want = [
                BetaPrior {
                    alpha: em.prior_false_pos.alpha + n[0][1],
                    beta: em.prior_false_pos.beta + n[0][0],
                },
                BetaPrior {
                    alpha: em.prior_true_pos.alpha + n[1][1],
                    beta: em.prior_true_pos.beta + n[1][0],
                },
            ];
            if got[j] != want {
                mismatches += 1;
            }
        }
    }
    check(mismatches == 0, format!("1000 imputations, {mismatches} mismatching conditionals"))
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn true_value(key: &ParamKey, graph: &skillnet::model::SkillGraph, lambda: &Lambda, pi: &BTreeMap<String, Misclassification>) -> f64 {
    match key {
        ParamKey::Lambda {
            family,
            level,
            category,
        } => {
            let f = graph.families().iter().position(|x| &x.name == family).unwrap();
            lambda.slot(f, *level)[category.unwrap_or(1)]
        }
        ParamKey::Pi { task, positive } => {
            let p = pi[task];
            if *positive {
                p.true_pos
            } else {
                p.false_pos
            }
        }
    }
}

fn c5_recovery() -> Outcome {
    let model = builtin_fraction_assets();
    let priors = PriorSet::from_model(&model).unwrap();
    let (mut covered, mut total, mut max_rhat) = (0usize, 0usize, 0.0f64);
    for seed in 0..20u64 {
        let (lambda, pi) = sample_truth(&model, stream_seed(500, seed)).unwrap();
        let (data, _) = generate_synthetic(&model, &lambda, &pi, 325, stream_seed(501, seed)).unwrap();
        let config = GibbsConfig {
            seed,
            ..GibbsConfig::default()
        };
        let run = run_gibbs(&model, &data, &priors, &config).unwrap();
        let draws = run.draws.as_ref().unwrap();
        for s in &run.summaries {
            max_rhat = max_rhat.max(s.rhat.unwrap_or(f64::INFINITY));
            let mut pooled: Vec<f64> = draws.param(&s.name).unwrap().concat();
            pooled.sort_by(f64::total_cmp);
            let truth = true_value(&s.key, &model.graph, &lambda, &pi);
            if quantile(&pooled, 0.025) <= truth && truth <= quantile(&pooled, 0.975) {
                covered += 1;
            }
            total += 1;
        }
    }
    let coverage = covered as f64 / total as f64;
    check(
        max_rhat < 1.1 && coverage >= 0.9,
        format!("20 seeds, max R-hat {max_rhat:.3}, 95% interval coverage {covered}/{total} = {coverage:.3}"),
    )
}

fn new_task_rows(run: &CalibrationRun) -> Vec<(ParamKey, f64, f64)> {
    run.summaries
        .iter()
        .filter(|s| matches!(&s.key, ParamKey::Pi { task, .. } if run.new_tasks.contains(task)))
        .map(|s| (s.key.clone(), s.mean, s.n_hat))
        .collect()
}

fn c6_online_consistency() -> Outcome {
    let model = builtin_fraction_assets();
    let priors = PriorSet::from_model(&model).unwrap();
    let new: Vec<String> = FRACTION_NEW_ITEMS.iter().map(|s| s.to_string()).collect();
    let (mut max_gap, mut n_gaps) = (0.0f64, Vec::new());
    for rep in 0..20u64 {
        let (lambda, pi) = sample_truth(&model, stream_seed(600, rep)).unwrap();
        let (data, _) = generate_synthetic(&model, &lambda, &pi, 325, stream_seed(601, rep)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(602, rep));
        let mut startup_rows = rand::seq::index::sample(&mut rng, 325, 225).into_vec();
        startup_rows.sort_unstable();
        let chosen: BTreeSet<usize> = startup_rows.iter().copied().collect();
        let online_rows: Vec<usize> = (0..325).filter(|i| !chosen.contains(i)).collect();
        let old_tasks: Vec<&String> = data.tasks().iter().filter(|t| !new.contains(t)).collect();
        let startup = data.select_examinees(&startup_rows).unwrap().select_tasks(&old_tasks).unwrap();
        let online = data.select_examinees(&online_rows).unwrap();

        let config = GibbsConfig {
            seed: rep,
            ..GibbsConfig::default()
        };
        let previous = run_gibbs(&model, &startup, &priors, &config).unwrap();
        let full = calibrate_new_full(&previous, &previous.model, &online, &new, &config).unwrap();
        let eb = calibrate_new_eb(&previous, &previous.model, &online, &new, &config).unwrap();
        let f = new_task_rows(&full);
        let e = new_task_rows(&eb);
        assert_eq!(f.len(), 6);
        assert_eq!(e.len(), 6);
        for ((kf, mf, nf), (ke, me, ne)) in f.iter().zip(&e) {
            assert_eq!(kf, ke);
            max_gap = max_gap.max((mf - me).abs());
            n_gaps.push(ne - nf);
        }
    }
    let mean_n_gap = n_gaps.iter().sum::<f64>() / n_gaps.len() as f64;
    check(
        max_gap <= 0.03 && mean_n_gap > 0.0 && mean_n_gap <= 10.0,
        format!("20 reps, max |full - EB| mean {max_gap:.4}, mean EB n - full n {mean_n_gap:.2}"),
    )
}

fn c7_cat_efficiency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let pool: Vec<RaschItem> = (0..200)
        .map(|j| RaschItem::new(&format!("item{j:03}"), rng.random_range(-3.0..3.0)).unwrap())
        .collect();
    let config = CatConfig::new(0.35, pool.len()).unwrap();
    let prior = ThetaGrid::standard();
    let (mut items, mut cover) = ([0usize; 2], [0usize; 2]);
    let sessions = 500;
    for _ in 0..sessions {
        let theta: f64 = StandardNormal.sample(&mut rng);
        let u: Vec<f64> = (0..pool.len()).map(|_| rng.random()).collect();
        let mut select = ChaCha8Rng::seed_from_u64(rng.random());
        let respond = |it: &RaschItem| {
            let j: usize = it.id[4..].parse().unwrap();
            Ok((u[j] < rasch_prob(theta, it.beta)) as u8)
        };
        let traces: [CatTrace; 2] = [
            run_cat(respond, &pool, &prior, &config, Selection::<ChaCha8Rng>::Adaptive).unwrap(),
            run_cat(respond, &pool, &prior, &config, Selection::Random(&mut select)).unwrap(),
        ];
        for (k, t) in traces.iter().enumerate() {
            items[k] += t.steps.len();
            if (t.final_mean() - theta).abs() <= 3.0 * t.final_sd() {
                cover[k] += 1;
            }
        }
    }
    let mean = |k: usize| items[k] as f64 / sessions as f64;
    let rate = |k: usize| cover[k] as f64 / sessions as f64;
    check(
        mean(0) < mean(1) && rate(0) >= 0.95 && rate(1) >= 0.95,
        format!(
            "mean items adaptive {:.2} vs random {:.2}; coverage adaptive {:.3}, random {:.3}",
            mean(0),
            mean(1),
            rate(0),
            rate(1)
        ),
    )
}

fn c8_expected_variance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut violations, mut not_strict, mut far_gap) = (0, 0, 0.0f64);
    for _ in 0..1000 {
        let n = rng.random_range(2..60);
        let mut points: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        points.sort_by(f64::total_cmp);
        points.dedup();
        let raw: Vec<f64> = points.iter().map(|_| rng.random_range(0.01..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let grid = ThetaGrid::new(points, raw.iter().map(|w| w / total).collect()).unwrap();
        let var = grid.moments().1;
        let beta = rng.random_range(-4.0..4.0);
        let epv = expected_posterior_variance(&grid, beta);
        if epv > var {
            violations += 1;
        }
        if var > 0.0 && epv >= var {
            not_strict += 1;
        }
        for b in [-50.0, 50.0] {
            far_gap = far_gap.max((expected_posterior_variance(&grid, b) - var).abs());
        }
    }
    check(
        violations == 0 && not_strict == 0 && far_gap <= 1e-6,
        format!("1000 pairs, {violations} above current variance, {not_strict} not strictly below, max gap at +-50 {far_gap:.1e}"),
    )
}

fn c9_lltm() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let eta = [0.3, -1.2, 0.8, 0.5];
    let noise = Normal::new(0.0, 0.25f64.sqrt()).unwrap();
    let mut inside = [0usize; 4];
    for _ in 0..100 {
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|_| {
                vec![
                    1.0,
                    rng.random_range(0..2) as f64,
                    rng.random_range(0..2) as f64,
                    rng.random_range(0..3) as f64,
                ]
            })
            .collect();
        let betas: Vec<f64> = rows
            .iter()
            .map(|r| r.iter().zip(&eta).map(|(a, b)| a * b).sum::<f64>() + noise.sample(&mut rng))
            .collect();
        let fit = lltm_fit(&betas, &rows).unwrap();
        for k in 0..4 {
            if (fit.eta[k] - eta[k]).abs() <= 3.0 * fit.std_errors[k] {
                inside[k] += 1;
            }
        }
    }
    check(
        inside.iter().all(|&c| c >= 95),
        format!("per-effect replications within 3 SE: {inside:?} of 100"),
    )
}

fn run_bin(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_skillnet"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn c10_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let short = ["--chains", "2", "--burn-in", "200", "--kept", "300"];
    let commands: Vec<Vec<&str>> = vec![
        vec!["--seed", "7", "--out", "gen", "generate", "--n", "325"],
        [
            &["--seed", "8", "--out", "cal", "calibrate", "--responses", "gen/responses.csv", "--examinee-subset", "225", "--drop-tasks", "5,10,14", "--save-draws"][..],
            &short,
        ]
        .concat(),
        vec!["--out", "score", "score", "--run", "cal/run.json", "--answers", "1=1,3=0,15=1"],
        [
            &["--seed", "9", "--out", "new", "calibrate-new", "--run", "cal/run.json", "--responses", "cal/excluded.csv"][..],
            &short,
        ]
        .concat(),
        vec!["--seed", "10", "--out", "cat", "cat-sim", "--sessions", "25"],
        vec!["--out", "rep", "report", "--run", "new/run-full.json", "--run", "new/run-eb.json"],
    ];
    let mut failures = Vec::new();
    for args in &commands {
        let out = run_bin(d, args);
        if !out.status.success() {
            failures.push(format!("{} failed", args.join(" ")));
        }
    }
    let mut compared = 0;
    for name in ["gen", "cal", "score", "new", "cat", "rep"] {
        let manifest = format!("{name}/manifest.json");
        let again = format!("rerun-{name}");
        let out = run_bin(d, &["report", "--manifest", &manifest, "--rerun-into", &again]);
        let text = String::from_utf8_lossy(&out.stdout);
        compared += text.lines().filter(|l| l.starts_with("identical")).count();
        if !out.status.success() {
            failures.push(format!("{name}: {}", text.trim()));
        }
    }
    check(
        failures.is_empty(),
        if failures.is_empty() {
            format!("6 commands re-run from manifests, {compared} outputs byte-identical")
        } else {
            failures.join("; ")
        },
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("moment-match bookkeeping", c1_moment_match),
        ("n-hat identity", c2_n_hat_identity),
        ("exact-inference oracle", c3_exact_inference),
        ("conjugacy oracle", c4_conjugacy),
        ("parameter recovery at full scale", c5_recovery),
        ("startup/online consistency", c6_online_consistency),
        ("adaptive testing efficiency", c7_cat_efficiency),
        ("expected-variance law", c8_expected_variance),
        ("LLTM recovery", c9_lltm),
        ("determinism from manifests", c10_determinism),
    ];
    let selected: BTreeSet<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let (ok, detail) = match catch_unwind(AssertUnwindSafe(f)) {
            Ok(outcome) => outcome,
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                (false, format!("panicked: {msg}"))
            }
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{} criterion {n:>2} {name}: {detail} [{:.1}s]",
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
