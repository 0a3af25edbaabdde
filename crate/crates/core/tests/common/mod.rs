#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use skillnet::model::{
    skill_conjunction, Lambda, Misclassification, QMatrixRow, SkillGraph, SkillKind, SkillVariable, SlotFamily,
    SlotKind,
};

/// Small student models, all with at most 12 joint configurations.
pub fn fixture_graphs() -> Vec<SkillGraph> {
    vec![
        SkillGraph::new(
            vec![SkillVariable::stochastic("a", 2, &[], "pa")],
            vec![SlotFamily::bernoulli("pa", 1)],
            vec!["a".into()],
        )
        .unwrap(),
        SkillGraph::new(
            vec![
                SkillVariable::stochastic("a", 2, &[], "pa"),
                SkillVariable::stochastic("b", 2, &[], "pb"),
            ],
            vec![SlotFamily::bernoulli("pa", 1), SlotFamily::bernoulli("pb", 1)],
            vec!["a".into(), "b".into()],
        )
        .unwrap(),
        SkillGraph::new(
            vec![
                SkillVariable::stochastic("a", 2, &[], "pa"),
                SkillVariable::stochastic("b", 2, &["a"], "pb"),
                SkillVariable::stochastic("c", 2, &["b"], "pc"),
            ],
            vec![
                SlotFamily::bernoulli("pa", 1),
                SlotFamily::bernoulli("pb", 2),
                SlotFamily::bernoulli("pc", 2),
            ],
            vec!["a".into(), "b".into(), "c".into()],
        )
        .unwrap(),
        SkillGraph::new(
            vec![
                SkillVariable::stochastic("w", 3, &[], "pw"),
                SkillVariable::stochastic("s", 2, &["w"], "ps"),
                SkillVariable::deterministic("d", 2, &["w"], vec![0, 1, 1]),
            ],
            vec![SlotFamily::categorical("pw", 3, 1), SlotFamily::bernoulli("ps", 3)],
            vec!["s".into(), "d".into()],
        )
        .unwrap(),
        SkillGraph::new(
            vec![
                SkillVariable::stochastic("a", 2, &[], "pa"),
                SkillVariable::stochastic("c", 3, &["a"], "pc"),
                SkillVariable::deterministic("e", 2, &["c"], vec![0, 0, 1]),
                SkillVariable::stochastic("b", 2, &["a", "c"], "pb"),
            ],
            vec![
                SlotFamily::bernoulli("pa", 1),
                SlotFamily::categorical("pc", 3, 2),
                SlotFamily::bernoulli("pb", 4),
            ],
            vec!["a".into(), "e".into(), "b".into()],
        )
        .unwrap(),
    ]
}

pub fn random_simplex<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    let g = Gamma::new(1.0, 1.0).unwrap();
    let v: Vec<f64> = (0..k).map(|_| g.sample(rng) + 1e-3).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

pub fn random_lambda<R: Rng>(rng: &mut R, graph: &SkillGraph) -> Lambda {
    let slots = graph
        .families()
        .iter()
        .map(|f| (0..f.levels).map(|_| random_simplex(rng, f.categories)).collect())
        .collect();
    Lambda::from_slots(graph, slots).unwrap()
}

pub fn random_pi<R: Rng>(rng: &mut R) -> Misclassification {
    Misclassification::new(rng.random_range(0.02..0.98), rng.random_range(0.02..0.98)).unwrap()
}

pub fn random_row<R: Rng>(rng: &mut R, k: usize) -> QMatrixRow {
    loop {
        let bits: Vec<u8> = (0..k).map(|_| rng.random_range(0..2)).collect();
        if bits.contains(&1) {
            return QMatrixRow::new(bits).unwrap();
        }
    }
}

/// Every assignment of all variables that respects the deterministic
/// mappings, with its probability, computed variable by variable from the
/// graph definition.
pub fn brute_force_joint(graph: &SkillGraph, lambda: &Lambda) -> Vec<(Vec<u8>, f64)> {
    let vars = graph.variables();
    let family_pos: BTreeMap<&str, usize> = graph
        .families()
        .iter()
        .enumerate()
        .map(|(i, f)| (f.name.as_str(), i))
        .collect();
    let var_pos = |name: &str| vars.iter().position(|v| v.name == name).unwrap();

    let mut out = Vec::new();
    let total: usize = vars.iter().map(|v| v.cardinality).product();
    for code in 0..total {
        let mut state = vec![0u8; vars.len()];
        let mut rest = code;
        for (i, v) in vars.iter().enumerate() {
            state[i] = (rest % v.cardinality) as u8;
            rest /= v.cardinality;
        }
        let mut p = 1.0;
        let mut consistent = true;
        for (i, v) in vars.iter().enumerate() {
            let parents: Vec<usize> = v.parents.iter().map(|n| var_pos(n)).collect();
            match &v.kind {
                SkillKind::Stochastic { family } => {
                    let z: usize = parents.iter().map(|&j| state[j] as usize).sum();
                    p *= lambda.slot(family_pos[family.as_str()], z)[state[i] as usize];
                }
                SkillKind::Deterministic { mapping } => {
                    let mut idx = 0;
                    for &j in &parents {
                        idx = idx * vars[j].cardinality + state[j] as usize;
                    }
                    if mapping[idx] != state[i] as usize {
                        consistent = false;
                    }
                }
            }
        }
        if consistent {
            out.push((state, p));
        }
    }
    out
}

pub fn reporting_of(graph: &SkillGraph, state: &[u8]) -> Vec<u8> {
    graph
        .reporting()
        .iter()
        .map(|r| state[graph.variables().iter().position(|v| &v.name == r).unwrap()])
        .collect()
}

/// Posterior P(skill = 1) for each reporting skill by direct enumeration.
pub fn brute_force_posterior(
    graph: &SkillGraph,
    lambda: &Lambda,
    evidence: &[(QMatrixRow, Misclassification, u8)],
) -> Vec<f64> {
    let joint = brute_force_joint(graph, lambda);
    let mut weights = Vec::with_capacity(joint.len());
    for (state, p) in &joint {
        let rep = reporting_of(graph, state);
        let mut w = *p;
        for (row, pi, x) in evidence {
            let delta = skill_conjunction(&rep, row).unwrap();
            let pc = if delta { pi.true_pos } else { pi.false_pos };
            w *= if *x == 1 { pc } else { 1.0 - pc };
        }
        weights.push(w);
    }
    let total: f64 = weights.iter().sum();
    (0..graph.reporting().len())
        .map(|k| {
            joint
                .iter()
                .zip(&weights)
                .filter(|((s, _), _)| reporting_of(graph, s)[k] == 1)
                .map(|(_, w)| w)
                .sum::<f64>()
                / total
        })
        .collect()
}

pub fn is_bernoulli(graph: &SkillGraph, family: usize) -> bool {
    graph.families()[family].kind == SlotKind::Bernoulli
}
