//! The bundled mixed-number subtraction study: fifteen items, six evidence
//! models, and the default priors for every parameter.

use std::collections::BTreeMap;

use crate::data::io::SCHEMA_VERSION;
use crate::model::{build_fraction_model, AssessmentModel, BetaPrior, EvidenceModelSpec, QMatrixRow, SlotPrior, Task};

/// (item, text, evidence model)
const ITEMS: [(&str, &str, &str); 15] = [
    ("1", "6/7 - 4/7", "EM1"),
    ("2", "3/4 - 3/4", "EM1"),
    ("3", "11/8 - 1/8", "EM2"),
    ("4", "3 4/5 - 3 2/5", "EM3"),
    ("5", "4 5/7 - 1 4/7", "EM3"),
    ("6", "3 7/8 - 2", "EM3"),
    ("7", "3 1/2 - 2 3/2", "EM4"),
    ("8", "4 1/3 - 2 4/3", "EM4"),
    ("9", "7 3/5 - 4/5", "EM4"),
    ("10", "4 1/3 - 1 2/3", "EM4"),
    ("11", "4 1/10 - 2 8/10", "EM4"),
    ("12", "2 - 1/3", "EM5"),
    ("13", "3 - 2 1/3", "EM5"),
    ("14", "7 - 1 4/3", "EM5"),
    ("15", "4 4/12 - 2 7/12", "EM6"),
];

/// Required skills 1–5 per evidence model.
const EVIDENCE_MODELS: [(&str, [u8; 5]); 6] = [
    ("EM1", [1, 0, 0, 0, 0]),
    ("EM2", [1, 1, 0, 0, 0]),
    ("EM3", [1, 0, 1, 0, 0]),
    ("EM4", [1, 0, 1, 1, 0]),
    ("EM5", [1, 0, 1, 1, 1]),
    ("EM6", [1, 1, 1, 1, 0]),
];

/// Items held out of the startup calibration and calibrated online later.
pub const FRACTION_NEW_ITEMS: [&str; 3] = ["5", "10", "14"];

fn beta(alpha: f64, beta: f64) -> BetaPrior {
    BetaPrior { alpha, beta }
}

/// Priors with 27 pseudo-counts each: Beta(21, 6) where a high probability is
/// expected and Beta(6, 21) where a low one is, Dirichlet vectors for the
/// whole-number variable that shift mass upward as more of skills 1, 2 and 5
/// are held.
pub fn fraction_lambda_priors() -> BTreeMap<String, Vec<SlotPrior>> {
    let high = SlotPrior::Beta(beta(21.0, 6.0));
    let low = SlotPrior::Beta(beta(6.0, 21.0));
    let even = SlotPrior::Beta(beta(13.5, 13.5));
    BTreeMap::from([
        ("lambda1".to_string(), vec![high.clone()]),
        ("lambda2".to_string(), vec![low.clone(), high.clone()]),
        ("lambda5".to_string(), vec![low, even, high]),
        (
            "lambdaWN".to_string(),
            vec![
                SlotPrior::Dirichlet(vec![18.0, 6.0, 3.0]),
                SlotPrior::Dirichlet(vec![12.0, 9.0, 6.0]),
                SlotPrior::Dirichlet(vec![6.0, 9.0, 12.0]),
                SlotPrior::Dirichlet(vec![3.0, 6.0, 18.0]),
            ],
        ),
    ])
}

/// Student model, Q-matrix, evidence-model grouping and default priors of
/// the fraction subtraction items. Tasks are uncalibrated.
pub fn builtin_fraction_assets() -> AssessmentModel {
    let evidence_models = EVIDENCE_MODELS
        .iter()
        .map(|(id, row)| EvidenceModelSpec {
            id: id.to_string(),
            skills_required: QMatrixRow::new(row.to_vec()).expect("non-empty row"),
            prior_false_pos: beta(6.0, 21.0),
            prior_true_pos: beta(21.0, 6.0),
        })
        .collect();
    let tasks = ITEMS
        .iter()
        .map(|(id, text, em)| {
            let mut t = Task::new(id, em);
            t.features.insert("text".to_string(), text.to_string());
            t
        })
        .collect();
    let model = AssessmentModel {
        version: SCHEMA_VERSION,
        graph: build_fraction_model(),
        lambda_priors: fraction_lambda_priors(),
        evidence_models,
        tasks,
    };
    model.validate().expect("builtin assets are valid");
    model
}

/// Task ids grouped by evidence model, in task order.
pub fn evidence_model_groups(model: &AssessmentModel) -> BTreeMap<String, Vec<String>> {
    let mut groups: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for t in &model.tasks {
        groups.entry(t.evidence_model.clone()).or_default().push(t.id.clone());
    }
    groups
}
