//! Structural causal models over binary variables.
//!
//! Every variable lives on one qubit. Its mechanism is a preparation (ground,
//! Hadamard, or a base Y-rotation) followed by one controlled Y-rotation per
//! incoming edge, so `P(v = 1 | parents) = sin²(θ_eff / 2)` where `θ_eff` is
//! the base angle plus the signed angles of all edges active under the parent
//! assignment.
//!
//! Interventions are applied by graph surgery ([`CausalModel::apply_do`]):
//! incoming edges are severed and the variable is pinned to a fixed value.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashSet};
use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// How a variable's qubit is prepared before its incoming edges act on it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Prep {
    /// Left in `|0⟩`.
    Ground,
    /// Hadamard, a fair coin.
    Uniform,
    /// `RY(θ)` from `|0⟩`, radians.
    Rotation(f64),
}

impl Prep {
    /// A base rotation with the angle wrapped into `[0, 2π)`.
    pub fn rotation(theta: f64) -> Self {
        Prep::Rotation(normalize_angle(theta))
    }
}

/// Wraps a finite angle into `[0, 2π)`. Non-finite input is returned as is so
/// that validation can report it.
pub fn normalize_angle(theta: f64) -> f64 {
    if !theta.is_finite() {
        return theta;
    }
    let wrapped = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if wrapped >= TAU {
        0.0
    } else {
        wrapped
    }
}

/// Direction of a causal link. A negative link rotates by `-θ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Positive => 1.0,
            Sign::Negative => -1.0,
        }
    }
}

impl TryFrom<i8> for Sign {
    type Error = String;

    fn try_from(value: i8) -> Result<Self, Self::Error> {
        match value {
            1 => Ok(Sign::Positive),
            -1 => Ok(Sign::Negative),
            other => Err(format!("sign must be 1 or -1, got {other}")),
        }
    }
}

impl From<Sign> for i8 {
    fn from(sign: Sign) -> i8 {
        match sign {
            Sign::Positive => 1,
            Sign::Negative => -1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Variable {
    pub name: String,
    pub qubit: usize,
    pub prep: Prep,
}

impl Variable {
    pub fn new(name: impl Into<String>, qubit: usize, prep: Prep) -> Self {
        Self {
            name: name.into(),
            qubit,
            prep,
        }
    }
}

/// A causal link `parent → child`, realized as a Y-rotation of the child by
/// `sign · angle` whenever the parent is in `control_value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Edge {
    pub parent: String,
    pub child: String,
    pub control_value: u8,
    pub angle: f64,
    pub sign: Sign,
}

impl Edge {
    pub fn new(parent: impl Into<String>, child: impl Into<String>, control_value: u8, angle: f64) -> Self {
        Self {
            parent: parent.into(),
            child: child.into(),
            control_value,
            angle,
            sign: Sign::Positive,
        }
    }

    pub fn negative(mut self) -> Self {
        self.sign = Sign::Negative;
        self
    }

    /// The rotation applied to the child when the edge is active.
    pub fn signed_angle(&self) -> f64 {
        self.sign.factor() * self.angle
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Intervention {
    pub variable: String,
    pub value: u8,
}

impl Intervention {
    pub fn new(variable: impl Into<String>, value: u8) -> Self {
        Self {
            variable: variable.into(),
            value,
        }
    }
}

impl fmt::Display for Intervention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "do({}={})", self.variable, self.value)
    }
}

/// A single broken invariant, reported by [`CausalModel::validate`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("variable at position {0} has an empty name")]
    EmptyName(usize),
    #[error("duplicate variable name `{0}`")]
    DuplicateName(String),
    #[error("qubit indices are not a permutation of 0..{n}: {found:?}")]
    QubitLayout { n: usize, found: Vec<usize> },
    #[error("variable `{0}` has a non-finite base rotation")]
    NonFinitePrep(String),
    #[error("edge {0} references an unknown variable")]
    UnknownEndpoint(String),
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
    #[error("edge {0} has a non-finite or non-positive angle")]
    BadAngle(String),
    #[error("edge {0} has control value {1}, expected 0 or 1")]
    BadControlValue(String, u8),
    #[error("duplicate edge {0}")]
    DuplicateEdge(String),
    #[error("cycle detected among {0:?}")]
    Cycle(Vec<String>),
    #[error("intervention on unknown variable `{0}`")]
    UnknownIntervention(String),
    #[error("intervention on `{0}` has value {1}, expected 0 or 1")]
    BadInterventionValue(String, u8),
    #[error("variable `{0}` is intervened on more than once")]
    DuplicateIntervention(String),
    #[error("intervened variable `{0}` still has incoming edges")]
    IntervenedHasParents(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid model: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable `{0}` is already intervened on")]
    AlreadyIntervened(String),
    #[error("intervention value {0} is not a bit")]
    BadValue(u8),
    #[error("cycle detected among {0:?}")]
    Cycle(Vec<String>),
    #[error("malformed model file: {0}")]
    Parse(String),
}

fn join_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// A causal DAG of binary variables with rotation-angle mechanisms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CausalModel {
    pub name: String,
    pub variables: Vec<Variable>,
    pub edges: Vec<Edge>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub interventions: Vec<Intervention>,
}

fn describe_edge(e: &Edge) -> String {
    format!("{}→{} (ctrl={})", e.parent, e.child, e.control_value)
}

impl CausalModel {
    pub fn new(name: impl Into<String>, variables: Vec<Variable>, edges: Vec<Edge>) -> Self {
        Self {
            name: name.into(),
            variables,
            edges,
            interventions: Vec::new(),
        }
    }

    pub fn n_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn variable(&self, name: &str) -> Option<&Variable> {
        self.variables.iter().find(|v| v.name == name)
    }

    pub fn qubit_of(&self, name: &str) -> Option<usize> {
        self.variable(name).map(|v| v.qubit)
    }

    /// Name → qubit lookup used by the analysis layer.
    pub fn qubit_map(&self) -> BTreeMap<String, usize> {
        self.variables
            .iter()
            .map(|v| (v.name.clone(), v.qubit))
            .collect()
    }

    /// Variable names indexed by qubit. Only meaningful on a valid model.
    pub fn qubit_labels(&self) -> Vec<String> {
        let mut labels = vec![String::new(); self.variables.len()];
        for v in &self.variables {
            if let Some(slot) = labels.get_mut(v.qubit) {
                *slot = v.name.clone();
            }
        }
        labels
    }

    pub fn intervention_on(&self, name: &str) -> Option<&Intervention> {
        self.interventions.iter().find(|iv| iv.variable == name)
    }

    pub fn incoming<'a>(&'a self, child: &'a str) -> impl Iterator<Item = &'a Edge> + 'a {
        self.edges.iter().filter(move |e| e.child == child)
    }

    /// Every broken invariant, in a stable order. Empty iff the model is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();

        let mut names = HashSet::new();
        for (i, v) in self.variables.iter().enumerate() {
            if v.name.is_empty() {
                out.push(Violation::EmptyName(i));
            } else if !names.insert(v.name.as_str()) {
                out.push(Violation::DuplicateName(v.name.clone()));
            }
            if let Prep::Rotation(theta) = v.prep {
                if !theta.is_finite() {
                    out.push(Violation::NonFinitePrep(v.name.clone()));
                }
            }
        }

        let n = self.variables.len();
        let mut qubits: Vec<usize> = self.variables.iter().map(|v| v.qubit).collect();
        qubits.sort_unstable();
        if qubits.iter().enumerate().any(|(i, &q)| i != q) {
            out.push(Violation::QubitLayout { n, found: qubits });
        }

        let mut seen_edges = HashSet::new();
        for e in &self.edges {
            let label = describe_edge(e);
            if !names.contains(e.parent.as_str()) || !names.contains(e.child.as_str()) {
                out.push(Violation::UnknownEndpoint(label.clone()));
            }
            if e.parent == e.child {
                out.push(Violation::SelfLoop(e.parent.clone()));
            }
            if !e.angle.is_finite() || e.angle <= 0.0 {
                out.push(Violation::BadAngle(label.clone()));
            }
            if e.control_value > 1 {
                out.push(Violation::BadControlValue(label.clone(), e.control_value));
            }
            if !seen_edges.insert((e.parent.as_str(), e.child.as_str(), e.control_value)) {
                out.push(Violation::DuplicateEdge(label));
            }
        }

        if let Err(cycle) = self.kahn_order() {
            out.push(Violation::Cycle(cycle));
        }

        let mut intervened = HashSet::new();
        for iv in &self.interventions {
            if !names.contains(iv.variable.as_str()) {
                out.push(Violation::UnknownIntervention(iv.variable.clone()));
                continue;
            }
            if iv.value > 1 {
                out.push(Violation::BadInterventionValue(iv.variable.clone(), iv.value));
            }
            if !intervened.insert(iv.variable.as_str()) {
                out.push(Violation::DuplicateIntervention(iv.variable.clone()));
            } else if self.incoming(&iv.variable).next().is_some() {
                out.push(Violation::IntervenedHasParents(iv.variable.clone()));
            }
        }

        out
    }

    pub fn ensure_valid(&self) -> Result<(), ModelError> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(ModelError::Invalid(violations))
        }
    }

    /// Parents before children; ties go to the lower qubit index.
    pub fn topological_order(&self) -> Result<Vec<String>, ModelError> {
        self.kahn_order().map_err(ModelError::Cycle)
    }

    /// Kahn's algorithm over known, non-self-loop edges. On failure returns the
    /// variables that could not be ordered, sorted by qubit.
    fn kahn_order(&self) -> Result<Vec<String>, Vec<String>> {
        let index: BTreeMap<&str, usize> = self
            .variables
            .iter()
            .enumerate()
            .map(|(i, v)| (v.name.as_str(), i))
            .collect();
        let mut indegree = vec![0usize; self.variables.len()];
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); self.variables.len()];
        for e in &self.edges {
            if e.parent == e.child {
                continue;
            }
            if let (Some(&p), Some(&c)) = (index.get(e.parent.as_str()), index.get(e.child.as_str())) {
                indegree[c] += 1;
                children[p].push(c);
            }
        }

        let key = |i: usize| Reverse((self.variables[i].qubit, i));
        let mut ready: BinaryHeap<_> = (0..self.variables.len())
            .filter(|&i| indegree[i] == 0)
            .map(key)
            .collect();
        let mut order = Vec::with_capacity(self.variables.len());
        while let Some(Reverse((_, i))) = ready.pop() {
            order.push(i);
            for &c in &children[i] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.push(key(c));
                }
            }
        }

        if order.len() == self.variables.len() {
            Ok(order.into_iter().map(|i| self.variables[i].name.clone()).collect())
        } else {
            let mut stuck: Vec<&Variable> = (0..self.variables.len())
                .filter(|&i| indegree[i] > 0)
                .map(|i| &self.variables[i])
                .collect();
            stuck.sort_by_key(|v| v.qubit);
            Err(stuck.into_iter().map(|v| v.name.clone()).collect())
        }
    }

    /// Graph surgery for `do(variable = value)`: drops every edge into the
    /// variable, grounds its preparation and records the intervention.
    pub fn apply_do(&self, iv: &Intervention) -> Result<CausalModel, ModelError> {
        self.ensure_valid()?;
        if iv.value > 1 {
            return Err(ModelError::BadValue(iv.value));
        }
        let target = self
            .variables
            .iter()
            .position(|v| v.name == iv.variable)
            .ok_or_else(|| ModelError::UnknownVariable(iv.variable.clone()))?;
        if self.intervention_on(&iv.variable).is_some() {
            return Err(ModelError::AlreadyIntervened(iv.variable.clone()));
        }

        let mut out = self.clone();
        out.edges.retain(|e| e.child != iv.variable);
        out.variables[target].prep = Prep::Ground;
        out.interventions.push(iv.clone());
        Ok(out)
    }

    /// Parses the JSON model format, rejecting unknown fields and invalid models.
    pub fn from_json(text: &str) -> Result<CausalModel, ModelError> {
        let mut model: CausalModel =
            serde_json::from_str(text).map_err(|e| ModelError::Parse(e.to_string()))?;
        for v in &mut model.variables {
            if let Prep::Rotation(theta) = v.prep {
                v.prep = Prep::rotation(theta);
            }
        }
        model.ensure_valid()?;
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialization is infallible")
    }

    /// Distinct parents of `child`.
    pub fn parents(&self, child: &str) -> BTreeSet<&str> {
        self.edges
            .iter()
            .filter(|e| e.child == child)
            .map(|e| e.parent.as_str())
            .collect()
    }
}
