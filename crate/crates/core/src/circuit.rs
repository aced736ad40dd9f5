//! Circuit IR, the model → circuit lowering pass, and circuit-level surgery.
//!
//! Every gate carries a provenance tag naming the model element it came from,
//! so surgery on a compiled circuit is a filter over tags. Control-on-zero is
//! kept as an attribute of [`GateKind::Cry`]; the X-conjugation of the control
//! qubit happens at execution and export time.

use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{CausalModel, Intervention, ModelError, Prep};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateKind {
    H { target: usize },
    X { target: usize },
    Ry { target: usize, theta: f64 },
    /// Y-rotation of `target` by `theta` when `control` reads `control_value`.
    Cry {
        control: usize,
        control_value: u8,
        target: usize,
        theta: f64,
    },
}

impl GateKind {
    pub fn target(&self) -> usize {
        match *self {
            GateKind::H { target }
            | GateKind::X { target }
            | GateKind::Ry { target, .. }
            | GateKind::Cry { target, .. } => target,
        }
    }

    /// Qubits the gate acts on, control first.
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            GateKind::Cry { control, target, .. } => vec![control, target],
            other => vec![other.target()],
        }
    }
}

/// Which model element a gate realizes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Tag {
    Prep(String),
    Link { parent: String, child: String },
    Force(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub tag: Tag,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CircuitError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("gate {index} touches qubit {qubit}, circuit has {n_qubits}")]
    QubitOutOfRange { index: usize, qubit: usize, n_qubits: usize },
    #[error("gate {0} uses the same qubit as control and target")]
    ControlIsTarget(usize),
    #[error("gate {0} has a non-finite angle")]
    NonFiniteAngle(usize),
    #[error("gate {0} has control value {1}, expected 0 or 1")]
    BadControlValue(usize, u8),
    #[error("variable `{0}` has more than one prep gate")]
    DuplicatePrep(String),
    #[error("variable `{0}` is both prepared and forced")]
    PrepAndForce(String),
    #[error("variable `{0}` does not appear in the circuit")]
    UnknownVariable(String),
    #[error("variable `{0}` is already forced")]
    AlreadyForced(String),
    #[error("intervention value {0} is not a bit")]
    BadValue(u8),
}

/// An ordered gate list over `n_qubits`, plus the variable name for each qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub n_qubits: usize,
    pub labels: Vec<String>,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            labels: (0..n_qubits).map(|q| format!("q{q}")).collect(),
            gates: Vec::new(),
        }
    }

    pub fn push(&mut self, kind: GateKind, tag: Tag) {
        self.gates.push(Gate { kind, tag });
    }

    pub fn qubit_of(&self, variable: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == variable)
    }

    pub fn validate(&self) -> Result<(), CircuitError> {
        let mut prepped = std::collections::HashSet::new();
        let mut forced = std::collections::HashSet::new();
        for (index, gate) in self.gates.iter().enumerate() {
            for qubit in gate.kind.qubits() {
                if qubit >= self.n_qubits {
                    return Err(CircuitError::QubitOutOfRange {
                        index,
                        qubit,
                        n_qubits: self.n_qubits,
                    });
                }
            }
            match gate.kind {
                GateKind::Ry { theta, .. } if !theta.is_finite() => {
                    return Err(CircuitError::NonFiniteAngle(index))
                }
                GateKind::Cry {
                    control,
                    control_value,
                    target,
                    theta,
                } => {
                    if control == target {
                        return Err(CircuitError::ControlIsTarget(index));
                    }
                    if control_value > 1 {
                        return Err(CircuitError::BadControlValue(index, control_value));
                    }
                    if !theta.is_finite() {
                        return Err(CircuitError::NonFiniteAngle(index));
                    }
                }
                _ => {}
            }
            match &gate.tag {
                Tag::Prep(v) => {
                    if !prepped.insert(v.clone()) {
                        return Err(CircuitError::DuplicatePrep(v.clone()));
                    }
                    if forced.contains(v) {
                        return Err(CircuitError::PrepAndForce(v.clone()));
                    }
                }
                Tag::Force(v) => {
                    if prepped.contains(v) {
                        return Err(CircuitError::PrepAndForce(v.clone()));
                    }
                    forced.insert(v.clone());
                }
                Tag::Link { .. } => {}
            }
        }
        Ok(())
    }

    /// One gate per line after a `qubits N` header. With `expanded`,
    /// control-on-zero gates are written as `X c / CRY c=1 t θ / X c`.
    pub fn to_text(&self, expanded: bool) -> String {
        let mut out = format!("qubits {}\n", self.n_qubits);
        for gate in &self.gates {
            match gate.kind {
                GateKind::H { target } => writeln!(out, "H q{target}"),
                GateKind::X { target } => writeln!(out, "X q{target}"),
                GateKind::Ry { target, theta } => writeln!(out, "RY q{target} {theta:.6}"),
                GateKind::Cry {
                    control,
                    control_value: 0,
                    target,
                    theta,
                } if expanded => writeln!(out, "X q{control}\nCRY q{control}=1 q{target} {theta:.6}\nX q{control}"),
                GateKind::Cry {
                    control,
                    control_value,
                    target,
                    theta,
                } => writeln!(out, "CRY q{control}={control_value} q{target} {theta:.6}"),
            }
            .expect("writing to a String cannot fail");
        }
        out
    }
}

/// Lowers a valid model to a circuit.
///
/// Variables are visited in topological order. Each one gets its forcing X (if
/// intervened to 1) or its prep gate, followed by one CRY per incoming edge in
/// ascending parent-qubit order.
pub fn compile(model: &CausalModel) -> Result<Circuit, CircuitError> {
    model.ensure_valid()?;
    let order = model.topological_order()?;
    let mut circuit = Circuit {
        n_qubits: model.n_variables(),
        labels: model.qubit_labels(),
        gates: Vec::new(),
    };

    for name in &order {
        let var = model.variable(name).expect("ordered names come from the model");
        let q = var.qubit;
        if let Some(iv) = model.intervention_on(name) {
            if iv.value == 1 {
                circuit.push(GateKind::X { target: q }, Tag::Force(name.clone()));
            }
        } else {
            match var.prep {
                Prep::Ground => {}
                Prep::Uniform => circuit.push(GateKind::H { target: q }, Tag::Prep(name.clone())),
                Prep::Rotation(theta) => {
                    circuit.push(GateKind::Ry { target: q, theta }, Tag::Prep(name.clone()))
                }
            }
        }

        let mut incoming: Vec<_> = model
            .incoming(name)
            .map(|e| (model.qubit_of(&e.parent).expect("validated endpoint"), e))
            .collect();
        incoming.sort_by_key(|(pq, e)| (*pq, e.control_value));
        for (control, edge) in incoming {
            circuit.push(
                GateKind::Cry {
                    control,
                    control_value: edge.control_value,
                    target: q,
                    theta: edge.signed_angle(),
                },
                Tag::Link {
                    parent: edge.parent.clone(),
                    child: name.clone(),
                },
            );
        }
    }
    Ok(circuit)
}

/// Circuit surgery for `do(variable = value)`.
///
/// Drops every gate tagged `Prep(variable)` or `Link(_, variable)`. When the
/// value is 1, an `X` tagged `Force(variable)` goes where the first removed
/// prep gate was, or at the start of the circuit if there was none.
pub fn surgered_circuit(circ: &Circuit, iv: &Intervention) -> Result<Circuit, CircuitError> {
    if iv.value > 1 {
        return Err(CircuitError::BadValue(iv.value));
    }
    let qubit = circ
        .qubit_of(&iv.variable)
        .ok_or_else(|| CircuitError::UnknownVariable(iv.variable.clone()))?;
    if circ
        .gates
        .iter()
        .any(|g| matches!(&g.tag, Tag::Force(v) if *v == iv.variable))
    {
        return Err(CircuitError::AlreadyForced(iv.variable.clone()));
    }

    let mut gates = Vec::with_capacity(circ.gates.len() + 1);
    let mut force_at = None;
    for gate in &circ.gates {
        match &gate.tag {
            Tag::Prep(v) if *v == iv.variable => {
                force_at.get_or_insert(gates.len());
            }
            Tag::Link { child, .. } if *child == iv.variable => {}
            _ => gates.push(gate.clone()),
        }
    }
    if iv.value == 1 {
        gates.insert(
            force_at.unwrap_or(0),
            Gate {
                kind: GateKind::X { target: qubit },
                tag: Tag::Force(iv.variable.clone()),
            },
        );
    }

    Ok(Circuit {
        n_qubits: circ.n_qubits,
        labels: circ.labels.clone(),
        gates,
    })
}
