//! Student-model, task-model and evidence-model structures.
//!
//! A [`SkillGraph`] holds the discrete skill variables of a student model.
//! Stochastic variables draw their state from a slot family: the slot used
//! for a given examinee is selected by the sum of the variable's parent
//! states. Deterministic variables are total functions of their parents.
//!
//! Joint configurations are enumerated in a canonical mixed-radix order over
//! the stochastic variables (first stochastic variable most significant),
//! with deterministic variables filled in afterwards.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fragment::EvidenceFragment;

/// Largest joint stochastic state space enumerated unless a cap is given.
pub const DEFAULT_STATE_CAP: usize = 1_000_000;

const SIMPLEX_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SkillKind {
    /// State drawn from slot `family`, level = sum of parent states.
    Stochastic { family: String },
    /// State is `mapping[parent configuration]`, parent configuration encoded
    /// mixed-radix with the first parent most significant.
    Deterministic { mapping: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillVariable {
    pub name: String,
    pub cardinality: usize,
    #[serde(default)]
    pub parents: Vec<String>,
    #[serde(flatten)]
    pub kind: SkillKind,
}

impl SkillVariable {
    pub fn stochastic(name: &str, cardinality: usize, parents: &[&str], family: &str) -> Self {
        SkillVariable {
            name: name.to_string(),
            cardinality,
            parents: parents.iter().map(|p| p.to_string()).collect(),
            kind: SkillKind::Stochastic {
                family: family.to_string(),
            },
        }
    }

    pub fn deterministic(name: &str, cardinality: usize, parents: &[&str], mapping: Vec<usize>) -> Self {
        SkillVariable {
            name: name.to_string(),
            cardinality,
            parents: parents.iter().map(|p| p.to_string()).collect(),
            kind: SkillKind::Deterministic { mapping },
        }
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self.kind, SkillKind::Deterministic { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotKind {
    /// A single probability of state 1.
    Bernoulli,
    /// A probability vector over the child's states.
    Categorical,
}

/// A named family of λ slots, one slot per level of the parent statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotFamily {
    pub name: String,
    pub kind: SlotKind,
    pub categories: usize,
    pub levels: usize,
}

impl SlotFamily {
    pub fn bernoulli(name: &str, levels: usize) -> Self {
        SlotFamily {
            name: name.to_string(),
            kind: SlotKind::Bernoulli,
            categories: 2,
            levels,
        }
    }

    pub fn categorical(name: &str, categories: usize, levels: usize) -> Self {
        SlotFamily {
            name: name.to_string(),
            kind: SlotKind::Categorical,
            categories,
            levels,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GraphDef {
    variables: Vec<SkillVariable>,
    families: Vec<SlotFamily>,
    reporting: Vec<String>,
}

/// The student model: skill variables in topological order, the λ slot
/// families that parametrize them, and the ordered reporting skills that
/// Q-matrix rows refer to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphDef", into = "GraphDef")]
pub struct SkillGraph {
    variables: Vec<SkillVariable>,
    families: Vec<SlotFamily>,
    reporting: Vec<String>,
    parent_idx: Vec<Vec<usize>>,
    family_idx: Vec<Option<usize>>,
    reporting_idx: Vec<usize>,
}

impl TryFrom<GraphDef> for SkillGraph {
    type Error = Error;

    fn try_from(def: GraphDef) -> Result<Self> {
        SkillGraph::new(def.variables, def.families, def.reporting)
    }
}

impl From<SkillGraph> for GraphDef {
    fn from(g: SkillGraph) -> Self {
        GraphDef {
            variables: g.variables,
            families: g.families,
            reporting: g.reporting,
        }
    }
}

impl SkillGraph {
    pub fn new(variables: Vec<SkillVariable>, families: Vec<SlotFamily>, reporting: Vec<String>) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidModel(msg));

        let mut family_names = BTreeMap::new();
        for (i, f) in families.iter().enumerate() {
            if family_names.insert(f.name.clone(), i).is_some() {
                return bad(format!("duplicate slot family `{}`", f.name));
            }
            if f.categories < 2 || f.levels < 1 {
                return bad(format!("slot family `{}` needs ≥ 2 categories and ≥ 1 level", f.name));
            }
            if f.kind == SlotKind::Bernoulli && f.categories != 2 {
                return bad(format!("Bernoulli family `{}` must have 2 categories", f.name));
            }
        }

        let mut index: BTreeMap<&str, usize> = BTreeMap::new();
        let mut parent_idx = Vec::with_capacity(variables.len());
        let mut family_idx = Vec::with_capacity(variables.len());
        let mut used = vec![false; families.len()];

        for (i, v) in variables.iter().enumerate() {
            if v.cardinality < 2 {
                return bad(format!("variable `{}` has cardinality {} < 2", v.name, v.cardinality));
            }
            if v.cardinality > u8::MAX as usize {
                return bad(format!("variable `{}` has too many states", v.name));
            }
            if index.contains_key(v.name.as_str()) {
                return bad(format!("duplicate variable `{}`", v.name));
            }
            let mut parents = Vec::with_capacity(v.parents.len());
            for p in &v.parents {
                if p == &v.name {
                    return bad(format!("variable `{}` lists itself as a parent", v.name));
                }
                match index.get(p.as_str()) {
                    Some(&j) => parents.push(j),
                    None => {
                        return bad(format!(
                            "parent `{p}` of `{}` is undefined or does not precede it",
                            v.name
                        ))
                    }
                }
            }
            if parents.iter().collect::<BTreeSet<_>>().len() != parents.len() {
                return bad(format!("variable `{}` repeats a parent", v.name));
            }

            match &v.kind {
                SkillKind::Stochastic { family } => {
                    let Some(&fi) = family_names.get(family) else {
                        return bad(format!("variable `{}` uses unknown family `{family}`", v.name));
                    };
                    let f = &families[fi];
                    if f.categories != v.cardinality {
                        return bad(format!(
                            "family `{}` has {} categories but `{}` has {} states",
                            f.name, f.categories, v.name, v.cardinality
                        ));
                    }
                    let max_sum: usize = parents.iter().map(|&j| variables[j].cardinality - 1).sum();
                    if f.levels < max_sum + 1 {
                        return bad(format!(
                            "family `{}` has {} levels but parent sum of `{}` reaches {max_sum}",
                            f.name, f.levels, v.name
                        ));
                    }
                    used[fi] = true;
                    family_idx.push(Some(fi));
                }
                SkillKind::Deterministic { mapping } => {
                    let expected: usize = parents.iter().map(|&j| variables[j].cardinality).product();
                    if mapping.len() != expected {
                        return bad(format!(
                            "deterministic `{}` maps {} parent configurations, expected {expected}",
                            v.name,
                            mapping.len()
                        ));
                    }
                    if let Some(s) = mapping.iter().find(|&&s| s >= v.cardinality) {
                        return bad(format!("deterministic `{}` maps to out-of-range state {s}", v.name));
                    }
                    family_idx.push(None);
                }
            }
            parent_idx.push(parents);
            index.insert(v.name.as_str(), i);
        }

        if let Some(i) = used.iter().position(|u| !u) {
            return bad(format!("slot family `{}` is not used by any variable", families[i].name));
        }
        if reporting.is_empty() {
            return bad("no reporting skills declared".to_string());
        }
        let mut reporting_idx = Vec::with_capacity(reporting.len());
        for r in &reporting {
            let Some(&j) = index.get(r.as_str()) else {
                return bad(format!("reporting skill `{r}` is not a variable"));
            };
            if variables[j].cardinality != 2 {
                return bad(format!("reporting skill `{r}` must be binary"));
            }
            if reporting_idx.contains(&j) {
                return bad(format!("reporting skill `{r}` listed twice"));
            }
            reporting_idx.push(j);
        }

        Ok(SkillGraph {
            variables,
            families,
            reporting,
            parent_idx,
            family_idx,
            reporting_idx,
        })
    }

    pub fn variables(&self) -> &[SkillVariable] {
        &self.variables
    }

    pub fn families(&self) -> &[SlotFamily] {
        &self.families
    }

    /// Names of the K reporting skills, in Q-matrix column order.
    pub fn reporting(&self) -> &[String] {
        &self.reporting
    }

    pub fn reporting_indices(&self) -> &[usize] {
        &self.reporting_idx
    }

    pub fn parent_indices(&self, var: usize) -> &[usize] {
        &self.parent_idx[var]
    }

    pub fn family_of(&self, var: usize) -> Option<usize> {
        self.family_idx[var]
    }

    pub fn variable_index(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn family_index(&self, name: &str) -> Option<usize> {
        self.families.iter().position(|f| f.name == name)
    }

    /// Product of stochastic cardinalities.
    pub fn joint_size(&self) -> u128 {
        self.variables
            .iter()
            .filter(|v| !v.is_deterministic())
            .map(|v| v.cardinality as u128)
            .product()
    }
}

/// A full assignment of λ: `[family][level][category]` probabilities.
///
/// Bernoulli slots are stored as `[1 - p, p]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lambda {
    slots: Vec<Vec<Vec<f64>>>,
}

/// λ values keyed by family name, as they appear in parameter files.
/// Bernoulli families list one probability per level; categorical families
/// list one vector per level.
pub type NamedLambda = BTreeMap<String, SlotValues>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SlotValues {
    Probabilities(Vec<f64>),
    Vectors(Vec<Vec<f64>>),
}

impl Lambda {
    pub fn builder(graph: &SkillGraph) -> LambdaBuilder<'_> {
        LambdaBuilder {
            graph,
            slots: vec![None; graph.families.len()],
            error: None,
        }
    }

    /// Validates raw `[family][level][category]` values against `graph`.
    pub fn from_slots(graph: &SkillGraph, slots: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if slots.len() != graph.families.len() {
            let missing = graph
                .families
                .get(slots.len())
                .map(|f| f.name.clone())
                .unwrap_or_else(|| "<extra family>".to_string());
            return Err(Error::UnassignedSlot(missing));
        }
        let lambda = Lambda { slots };
        lambda.validate(graph)?;
        Ok(lambda)
    }

    pub fn from_named(graph: &SkillGraph, named: &NamedLambda) -> Result<Self> {
        let mut b = Lambda::builder(graph);
        for (name, values) in named {
            b = match values {
                SlotValues::Probabilities(p) => b.bernoulli(name, p),
                SlotValues::Vectors(v) => b.categorical(name, v.clone()),
            };
        }
        b.build()
    }

    pub fn to_named(&self, graph: &SkillGraph) -> NamedLambda {
        graph
            .families
            .iter()
            .zip(&self.slots)
            .map(|(f, levels)| {
                let values = match f.kind {
                    SlotKind::Bernoulli => SlotValues::Probabilities(levels.iter().map(|v| v[1]).collect()),
                    SlotKind::Categorical => SlotValues::Vectors(levels.clone()),
                };
                (f.name.clone(), values)
            })
            .collect()
    }

    pub fn validate(&self, graph: &SkillGraph) -> Result<()> {
        if self.slots.len() != graph.families.len() {
            return Err(Error::DimensionMismatch(format!(
                "λ has {} families, graph has {}",
                self.slots.len(),
                graph.families.len()
            )));
        }
        for (f, levels) in graph.families.iter().zip(&self.slots) {
            if levels.len() != f.levels {
                return Err(Error::UnassignedSlot(format!(
                    "{} (expected {} levels, got {})",
                    f.name,
                    f.levels,
                    levels.len()
                )));
            }
            for (z, probs) in levels.iter().enumerate() {
                if probs.len() != f.categories {
                    return Err(Error::DimensionMismatch(format!(
                        "{}[z={z}] has {} categories, expected {}",
                        f.name,
                        probs.len(),
                        f.categories
                    )));
                }
                if probs.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0) {
                    return Err(Error::InvalidParameter(format!("{}[z={z}] outside [0, 1]", f.name)));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > SIMPLEX_TOLERANCE {
                    return Err(Error::InvalidParameter(format!(
                        "{}[z={z}] sums to {total}, not 1",
                        f.name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn slot(&self, family: usize, level: usize) -> &[f64] {
        &self.slots[family][level]
    }

    pub fn slots(&self) -> &[Vec<Vec<f64>>] {
        &self.slots
    }
}

pub struct LambdaBuilder<'g> {
    graph: &'g SkillGraph,
    slots: Vec<Option<Vec<Vec<f64>>>>,
    error: Option<Error>,
}

impl LambdaBuilder<'_> {
    /// One probability of state 1 per level.
    pub fn bernoulli(mut self, family: &str, probs: &[f64]) -> Self {
        match self.lookup(family, SlotKind::Bernoulli) {
            Ok(i) => self.slots[i] = Some(probs.iter().map(|&p| vec![1.0 - p, p]).collect()),
            Err(e) => {
                self.error.get_or_insert(e);
            }
        }
        self
    }

    pub fn categorical(mut self, family: &str, vectors: Vec<Vec<f64>>) -> Self {
        match self.lookup(family, SlotKind::Categorical) {
            Ok(i) => self.slots[i] = Some(vectors),
            Err(e) => {
                self.error.get_or_insert(e);
            }
        }
        self
    }

    fn lookup(&self, family: &str, kind: SlotKind) -> Result<usize> {
        match self.graph.family_index(family) {
            Some(i) if self.graph.families[i].kind == kind => Ok(i),
            Some(_) => Err(Error::InvalidParameter(format!("family `{family}` is not {kind:?}"))),
            None => Err(Error::InvalidParameter(format!("unknown slot family `{family}`"))),
        }
    }

    pub fn build(self) -> Result<Lambda> {
        if let Some(e) = self.error {
            return Err(e);
        }
        let mut slots = Vec::with_capacity(self.slots.len());
        for (i, s) in self.slots.into_iter().enumerate() {
            slots.push(s.ok_or_else(|| Error::UnassignedSlot(self.graph.families[i].name.clone()))?);
        }
        Lambda::from_slots(self.graph, slots)
    }
}

/// One stochastic factor of a configuration's prior probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotTerm {
    pub family: usize,
    pub level: usize,
    pub state: usize,
}

/// The enumerated joint state space of a [`SkillGraph`].
#[derive(Debug, Clone)]
pub struct JointSpace {
    graph: Arc<SkillGraph>,
    states: Vec<Vec<u8>>,
    terms: Vec<Vec<SlotTerm>>,
}

impl JointSpace {
    pub fn new(graph: Arc<SkillGraph>) -> Result<Self> {
        Self::with_cap(graph, DEFAULT_STATE_CAP)
    }

    pub fn with_cap(graph: Arc<SkillGraph>, cap: usize) -> Result<Self> {
        let size = graph.joint_size();
        if size > cap as u128 {
            return Err(Error::StateSpaceTooLarge { size, cap });
        }
        let size = size as usize;
        let stochastic: Vec<usize> = (0..graph.variables.len())
            .filter(|&i| !graph.variables[i].is_deterministic())
            .collect();

        let mut states = Vec::with_capacity(size);
        let mut terms = Vec::with_capacity(size);
        let mut digits = vec![0usize; stochastic.len()];
        for idx in 0..size {
            let mut rest = idx;
            for (d, &v) in digits.iter_mut().zip(&stochastic).rev() {
                let card = graph.variables[v].cardinality;
                *d = rest % card;
                rest /= card;
            }

            let mut state = vec![0u8; graph.variables.len()];
            let mut config_terms = Vec::with_capacity(stochastic.len());
            let mut next_digit = 0;
            for (i, var) in graph.variables.iter().enumerate() {
                let parents = &graph.parent_idx[i];
                match &var.kind {
                    SkillKind::Stochastic { .. } => {
                        let s = digits[next_digit];
                        next_digit += 1;
                        state[i] = s as u8;
                        config_terms.push(SlotTerm {
                            family: graph.family_idx[i].expect("stochastic variable has a family"),
                            level: parents.iter().map(|&p| state[p] as usize).sum(),
                            state: s,
                        });
                    }
                    SkillKind::Deterministic { mapping } => {
                        let code = parents
                            .iter()
                            .fold(0usize, |acc, &p| acc * graph.variables[p].cardinality + state[p] as usize);
                        state[i] = mapping[code] as u8;
                    }
                }
            }
            states.push(state);
            terms.push(config_terms);
        }
        Ok(JointSpace { graph, states, terms })
    }

    pub fn graph(&self) -> &SkillGraph {
        &self.graph
    }

    pub fn graph_arc(&self) -> &Arc<SkillGraph> {
        &self.graph
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Full state vector (all variables, graph order) of configuration `idx`.
    pub fn state(&self, idx: usize) -> &[u8] {
        &self.states[idx]
    }

    pub fn terms(&self, idx: usize) -> &[SlotTerm] {
        &self.terms[idx]
    }

    /// States of the reporting skills of configuration `idx`.
    pub fn reporting_state(&self, idx: usize) -> Vec<u8> {
        self.graph.reporting_idx.iter().map(|&j| self.states[idx][j]).collect()
    }

    /// Prior probability of every configuration under `lambda`.
    pub fn prior(&self, lambda: &Lambda) -> Result<Vec<f64>> {
        lambda.validate(&self.graph)?;
        Ok(self
            .terms
            .iter()
            .map(|ts| ts.iter().map(|t| lambda.slots[t.family][t.level][t.state]).product())
            .collect())
    }

    /// Conjunction indicator δ of `row` for every configuration.
    pub fn delta(&self, row: &QMatrixRow) -> Result<Vec<bool>> {
        (0..self.len())
            .map(|c| skill_conjunction(&self.reporting_state(c), row))
            .collect()
    }
}

/// Every joint configuration with its prior probability, in canonical order.
pub fn enumerate_joint(graph: &SkillGraph, lambda: &Lambda) -> Result<Vec<(Vec<u8>, f64)>> {
    enumerate_joint_with_cap(graph, lambda, DEFAULT_STATE_CAP)
}

pub fn enumerate_joint_with_cap(graph: &SkillGraph, lambda: &Lambda, cap: usize) -> Result<Vec<(Vec<u8>, f64)>> {
    let space = JointSpace::with_cap(Arc::new(graph.clone()), cap)?;
    let prior = space.prior(lambda)?;
    Ok(space.states.into_iter().zip(prior).collect())
}

/// Required-skill pattern of an evidence model over the K reporting skills.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<u8>", into = "Vec<u8>")]
pub struct QMatrixRow(Vec<u8>);

impl QMatrixRow {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidModel(format!("Q-matrix row {bits:?} is not 0/1")));
        }
        if !bits.contains(&1) {
            return Err(Error::InvalidModel("Q-matrix row requires no skill".to_string()));
        }
        Ok(QMatrixRow(bits))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }
}

impl TryFrom<Vec<u8>> for QMatrixRow {
    type Error = Error;
    fn try_from(v: Vec<u8>) -> Result<Self> {
        QMatrixRow::new(v)
    }
}

impl From<QMatrixRow> for Vec<u8> {
    fn from(r: QMatrixRow) -> Self {
        r.0
    }
}

/// δ: whether the reporting-skill state `config` has every skill `row` requires.
pub fn skill_conjunction(config: &[u8], row: &QMatrixRow) -> Result<bool> {
    if config.len() != row.len() {
        return Err(Error::DimensionMismatch(format!(
            "configuration covers {} skills, Q-matrix row {}",
            config.len(),
            row.len()
        )));
    }
    Ok(config.iter().zip(&row.0).all(|(&s, &y)| y == 0 || s != 0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaPrior {
    pub alpha: f64,
    pub beta: f64,
}

impl BetaPrior {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite() && alpha > 0.0 && beta > 0.0) {
            return Err(Error::InvalidParameter(format!("Beta({alpha}, {beta})")));
        }
        Ok(BetaPrior { alpha, beta })
    }

    pub fn total(&self) -> f64 {
        self.alpha + self.beta
    }

    pub fn mean(&self) -> f64 {
        self.alpha / self.total()
    }

    pub fn variance(&self) -> f64 {
        let t = self.total();
        self.alpha * self.beta / (t * t * (t + 1.0))
    }

    pub fn sd(&self) -> f64 {
        self.variance().sqrt()
    }
}

/// False-positive and true-positive probabilities of a correct response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Misclassification {
    pub false_pos: f64,
    pub true_pos: f64,
}

impl Misclassification {
    /// Accepts any pair in `[0, 1]`; see [`Misclassification::is_interior`]
    /// for the calibrated-task requirement.
    pub fn new(false_pos: f64, true_pos: f64) -> Result<Self> {
        let ok = |p: f64| p.is_finite() && (0.0..=1.0).contains(&p);
        if !(ok(false_pos) && ok(true_pos)) {
            return Err(Error::InvalidParameter(format!("π = ({false_pos}, {true_pos})")));
        }
        Ok(Misclassification { false_pos, true_pos })
    }

    pub fn is_interior(&self) -> bool {
        [self.false_pos, self.true_pos].iter().all(|&p| p > 0.0 && p < 1.0)
    }

    /// P(correct | δ).
    pub fn correct(&self, delta: bool) -> f64 {
        if delta {
            self.true_pos
        } else {
            self.false_pos
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceModelSpec {
    pub id: String,
    pub skills_required: QMatrixRow,
    pub prior_false_pos: BetaPrior,
    pub prior_true_pos: BetaPrior,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub id: String,
    pub evidence_model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi: Option<Misclassification>,
    /// Task-model variables other than the Q-matrix row; carried, not used.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub features: BTreeMap<String, String>,
}

impl Task {
    pub fn new(id: &str, evidence_model: &str) -> Self {
        Task {
            id: id.to_string(),
            evidence_model: evidence_model.to_string(),
            pi: None,
            features: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotPrior {
    Beta(BetaPrior),
    Dirichlet(Vec<f64>),
}

impl SlotPrior {
    /// Pseudo-counts per category (Beta as `[beta, alpha]`).
    pub fn pseudo_counts(&self) -> Vec<f64> {
        match self {
            SlotPrior::Beta(b) => vec![b.beta, b.alpha],
            SlotPrior::Dirichlet(a) => a.clone(),
        }
    }
}

/// Everything needed to score and calibrate: student model, λ priors,
/// evidence models and the task pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessmentModel {
    pub version: u64,
    pub graph: SkillGraph,
    pub lambda_priors: BTreeMap<String, Vec<SlotPrior>>,
    pub evidence_models: Vec<EvidenceModelSpec>,
    pub tasks: Vec<Task>,
}

impl AssessmentModel {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidModel(msg));
        let k = self.graph.reporting.len();

        for f in &self.graph.families {
            let Some(priors) = self.lambda_priors.get(&f.name) else {
                return bad(format!("no prior for slot family `{}`", f.name));
            };
            if priors.len() != f.levels {
                return bad(format!("family `{}` has {} levels but {} priors", f.name, f.levels, priors.len()));
            }
            for p in priors {
                match (f.kind, p) {
                    (SlotKind::Bernoulli, SlotPrior::Beta(b)) => {
                        BetaPrior::new(b.alpha, b.beta)?;
                    }
                    (SlotKind::Categorical, SlotPrior::Dirichlet(a)) => {
                        if a.len() != f.categories || a.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                            return bad(format!("invalid Dirichlet prior for `{}`", f.name));
                        }
                    }
                    _ => return bad(format!("prior kind does not match family `{}`", f.name)),
                }
            }
        }
        if let Some(name) = self.lambda_priors.keys().find(|n| self.graph.family_index(n).is_none()) {
            return bad(format!("prior given for unknown family `{name}`"));
        }

        let mut rows = BTreeMap::new();
        for em in &self.evidence_models {
            if em.skills_required.len() != k {
                return bad(format!("evidence model `{}` row has length {}, expected {k}", em.id, em.skills_required.len()));
            }
            BetaPrior::new(em.prior_false_pos.alpha, em.prior_false_pos.beta)?;
            BetaPrior::new(em.prior_true_pos.alpha, em.prior_true_pos.beta)?;
            if let Some(other) = rows.insert(em.skills_required.clone(), em.id.clone()) {
                return bad(format!("evidence models `{other}` and `{}` share a Q-matrix row", em.id));
            }
        }
        if rows.len() != self.evidence_models.len()
            || self.evidence_models.iter().map(|e| &e.id).collect::<BTreeSet<_>>().len() != self.evidence_models.len()
        {
            return bad("duplicate evidence model id".to_string());
        }

        let mut seen = BTreeSet::new();
        for t in &self.tasks {
            if !seen.insert(&t.id) {
                return bad(format!("duplicate task `{}`", t.id));
            }
            if self.evidence_model(&t.evidence_model).is_none() {
                return bad(format!("task `{}` uses unknown evidence model `{}`", t.id, t.evidence_model));
            }
            if let Some(pi) = &t.pi {
                if !pi.is_interior() {
                    return bad(format!("task `{}` has π outside (0, 1)", t.id));
                }
            }
        }
        Ok(())
    }

    pub fn evidence_model(&self, id: &str) -> Option<&EvidenceModelSpec> {
        self.evidence_models.iter().find(|e| e.id == id)
    }

    pub fn task(&self, id: &str) -> Result<&Task> {
        self.tasks
            .iter()
            .find(|t| t.id == id)
            .ok_or_else(|| Error::UnknownTask(id.to_string()))
    }

    pub fn task_model(&self, id: &str) -> Result<&EvidenceModelSpec> {
        let task = self.task(id)?;
        self.evidence_model(&task.evidence_model)
            .ok_or_else(|| Error::InvalidModel(format!("task `{id}` has no evidence model")))
    }

    /// Docks task `id` with its stored π.
    pub fn fragment(&self, id: &str) -> Result<EvidenceFragment> {
        let pi = self.task(id)?.pi.ok_or_else(|| Error::Uncalibrated(id.to_string()))?;
        self.fragment_with(id, pi)
    }

    /// Docks task `id` with the given π.
    pub fn fragment_with(&self, id: &str, pi: Misclassification) -> Result<EvidenceFragment> {
        let em = self.task_model(id)?;
        Ok(EvidenceFragment {
            task: id.to_string(),
            skills_required: em.skills_required.clone(),
            pi,
        })
    }
}

/// The mixed-number subtraction student model: five binary skills plus the
/// three-level whole-number variable that encodes the prerequisite of
/// skill 3 for skill 4.
pub fn build_fraction_model() -> SkillGraph {
    let variables = vec![
        SkillVariable::stochastic("theta1", 2, &[], "lambda1"),
        SkillVariable::stochastic("theta2", 2, &["theta1"], "lambda2"),
        SkillVariable::stochastic("theta5", 2, &["theta1", "theta2"], "lambda5"),
        SkillVariable::stochastic("thetaWN", 3, &["theta1", "theta2", "theta5"], "lambdaWN"),
        SkillVariable::deterministic("theta3", 2, &["thetaWN"], vec![0, 1, 1]),
        SkillVariable::deterministic("theta4", 2, &["thetaWN"], vec![0, 0, 1]),
    ];
    let families = vec![
        SlotFamily::bernoulli("lambda1", 1),
        SlotFamily::bernoulli("lambda2", 2),
        SlotFamily::bernoulli("lambda5", 3),
        SlotFamily::categorical("lambdaWN", 3, 4),
    ];
    let reporting = ["theta1", "theta2", "theta3", "theta4", "theta5"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    SkillGraph::new(variables, families, reporting).expect("fraction model is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_skill() -> SkillGraph {
        SkillGraph::new(
            vec![SkillVariable::stochastic("s", 2, &[], "p")],
            vec![SlotFamily::bernoulli("p", 1)],
            vec!["s".into()],
        )
        .unwrap()
    }

    fn fraction_lambda(graph: &SkillGraph, l1: f64) -> Lambda {
        Lambda::builder(graph)
            .bernoulli("lambda1", &[l1])
            .bernoulli("lambda2", &[0.2, 0.8])
            .bernoulli("lambda5", &[0.2, 0.5, 0.8])
            .categorical(
                "lambdaWN",
                vec![
                    vec![0.6, 0.3, 0.1],
                    vec![0.4, 0.4, 0.2],
                    vec![0.2, 0.4, 0.4],
                    vec![0.1, 0.2, 0.7],
                ],
            )
            .build()
            .unwrap()
    }

    #[test]
    fn fraction_model_shape() {
        let g = build_fraction_model();
        assert_eq!(g.variables().len(), 6);
        assert_eq!(g.variables().iter().filter(|v| v.is_deterministic()).count(), 2);
        assert_eq!(g.joint_size(), 24);
        let inventory: Vec<(SlotKind, usize, usize)> =
            g.families().iter().map(|f| (f.kind, f.levels, f.categories)).collect();
        assert_eq!(
            inventory,
            vec![
                (SlotKind::Bernoulli, 1, 2),
                (SlotKind::Bernoulli, 2, 2),
                (SlotKind::Bernoulli, 3, 2),
                (SlotKind::Categorical, 4, 3),
            ]
        );
    }

    #[test]
    fn enumerate_fraction_model() {
        let g = build_fraction_model();
        let joint = enumerate_joint(&g, &fraction_lambda(&g, 0.8)).unwrap();
        assert_eq!(joint.len(), 24);
        let total: f64 = joint.iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let theta1: f64 = joint.iter().filter(|(c, _)| c[0] == 1).map(|(_, p)| p).sum();
        assert!((theta1 - 0.8).abs() < 1e-12);
        for (c, _) in &joint {
            // theta4 = 1 implies theta3 = 1
            assert!(c[5] == 0 || c[4] == 1);
        }
    }

    #[test]
    fn single_uniform_skill() {
        let g = one_skill();
        let l = Lambda::builder(&g).bernoulli("p", &[0.5]).build().unwrap();
        assert_eq!(enumerate_joint(&g, &l).unwrap(), vec![(vec![0], 0.5), (vec![1], 0.5)]);
    }

    #[test]
    fn degenerate_root() {
        let g = build_fraction_model();
        let joint = enumerate_joint(&g, &fraction_lambda(&g, 1.0)).unwrap();
        assert!(joint.iter().filter(|(c, _)| c[0] == 0).all(|(_, p)| *p == 0.0));
    }

    #[test]
    fn cap_and_unassigned() {
        let g = build_fraction_model();
        let l = fraction_lambda(&g, 0.8);
        assert!(matches!(
            enumerate_joint_with_cap(&g, &l, 10),
            Err(Error::StateSpaceTooLarge { size: 24, cap: 10 })
        ));
        let partial = Lambda::builder(&g).bernoulli("lambda1", &[0.5]).build();
        assert!(matches!(partial, Err(Error::UnassignedSlot(name)) if name == "lambda2"));
    }

    #[test]
    fn conjunction() {
        let row = QMatrixRow::new(vec![1, 0, 1, 1, 0]).unwrap();
        assert!(skill_conjunction(&[1, 0, 1, 1, 0], &row).unwrap());
        assert!(!skill_conjunction(&[1, 0, 1, 0, 0], &row).unwrap());
        assert!(skill_conjunction(&[1, 0, 1], &row).is_err());
        assert!(QMatrixRow::new(vec![0, 0, 0, 0, 0]).is_err());
        assert!(serde_json::from_str::<QMatrixRow>("[0,0,0]").is_err());
    }

    #[test]
    fn graph_validation() {
        let self_parent = SkillGraph::new(
            vec![SkillVariable::stochastic("a", 2, &["a"], "p")],
            vec![SlotFamily::bernoulli("p", 2)],
            vec!["a".into()],
        );
        assert!(self_parent.is_err());
        let out_of_order = SkillGraph::new(
            vec![
                SkillVariable::stochastic("a", 2, &["b"], "p"),
                SkillVariable::stochastic("b", 2, &[], "q"),
            ],
            vec![SlotFamily::bernoulli("p", 2), SlotFamily::bernoulli("q", 1)],
            vec!["a".into()],
        );
        assert!(out_of_order.is_err());
        let short_levels = SkillGraph::new(
            vec![
                SkillVariable::stochastic("a", 2, &[], "q"),
                SkillVariable::stochastic("b", 2, &["a"], "p"),
            ],
            vec![SlotFamily::bernoulli("p", 1), SlotFamily::bernoulli("q", 1)],
            vec!["a".into()],
        );
        assert!(short_levels.is_err());
        let partial_mapping = SkillGraph::new(
            vec![
                SkillVariable::stochastic("a", 3, &[], "q"),
                SkillVariable::deterministic("b", 2, &["a"], vec![0, 1]),
            ],
            vec![SlotFamily::categorical("q", 3, 1)],
            vec!["b".into()],
        );
        assert!(partial_mapping.is_err());
        let unit = SkillGraph::new(
            vec![SkillVariable::stochastic("a", 1, &[], "q")],
            vec![SlotFamily::categorical("q", 2, 1)],
            vec!["a".into()],
        );
        assert!(unit.is_err());
    }

    #[test]
    fn graph_serde_revalidates() {
        let g = build_fraction_model();
        let json = serde_json::to_string(&g).unwrap();
        let back: SkillGraph = serde_json::from_str(&json).unwrap();
        assert_eq!(back, g);
        let mut broken: serde_json::Value = serde_json::from_str(&json).unwrap();
        let fam = broken["families"].as_array_mut().unwrap().iter_mut().find(|f| f["name"] == "lambda5").unwrap();
        fam["levels"] = serde_json::json!(2);
        assert!(serde_json::from_value::<SkillGraph>(broken).is_err());
    }

    #[test]
    fn categorical_must_sum_to_one() {
        let g = build_fraction_model();
        let l = Lambda::builder(&g)
            .bernoulli("lambda1", &[0.5])
            .bernoulli("lambda2", &[0.2, 0.8])
            .bernoulli("lambda5", &[0.2, 0.5, 0.8])
            .categorical("lambdaWN", vec![vec![0.5, 0.3, 0.1]; 4])
            .build();
        assert!(matches!(l, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn named_round_trip() {
        let g = build_fraction_model();
        let l = fraction_lambda(&g, 0.7);
        let named = l.to_named(&g);
        let json = serde_json::to_string(&named).unwrap();
        let back: NamedLambda = serde_json::from_str(&json).unwrap();
        assert_eq!(Lambda::from_named(&g, &back).unwrap(), l);
    }
}
