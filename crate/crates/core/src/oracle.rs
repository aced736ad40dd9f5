//! Classical enumeration of the joint distribution a model defines.
//!
//! This path never touches a statevector. It builds one conditional table per
//! variable from the closed form `P(v = 1 | pa) = sin²(θ_eff / 2)` and
//! multiplies table entries over all `2^n` assignments. Agreement with the
//! engine on the compiled circuit is the main cross-check of the pipeline.

use thiserror::Error;

use crate::engine::Distribution;
use crate::model::{CausalModel, ModelError, Prep};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error(transparent)]
    Model(#[from] ModelError),
    /// Hadamard followed by Y-rotations is not itself a Y-rotation, so the
    /// closed form does not apply.
    #[error("oracle-unsupported prep: `{0}` has uniform prep and incoming edges")]
    UnsupportedPrep(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Mechanism {
    Forced(u8),
    Coin,
    Rotation(f64),
}

/// `P(variable = 1)` for every assignment of its parents.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalTable {
    pub variable: String,
    pub qubit: usize,
    /// Parent names, ordered by qubit.
    pub parents: Vec<String>,
    parent_qubits: Vec<usize>,
    /// Indexed by parent assignment; bit `k` is the value of `parents[k]`.
    pub p_one: Vec<f64>,
}

impl ConditionalTable {
    fn p_one_given(&self, assignment: usize) -> f64 {
        let row = self
            .parent_qubits
            .iter()
            .enumerate()
            .fold(0usize, |acc, (k, &q)| acc | (((assignment >> q) & 1) << k));
        self.p_one[row]
    }
}

fn half_angle_sin_sq(theta: f64) -> f64 {
    (theta / 2.0).sin().powi(2)
}

/// Conditional tables for every variable, in model order.
pub fn conditional_tables(model: &CausalModel) -> Result<Vec<ConditionalTable>, OracleError> {
    model.ensure_valid()?;
    model
        .variables
        .iter()
        .map(|var| {
            let mut parents: Vec<(usize, String)> = model
                .parents(&var.name)
                .into_iter()
                .map(|p| (model.qubit_of(p).expect("validated"), p.to_string()))
                .collect();
            parents.sort();

            let mechanism = match (model.intervention_on(&var.name), var.prep) {
                (Some(iv), _) => Mechanism::Forced(iv.value),
                (None, Prep::Uniform) if !parents.is_empty() => {
                    return Err(OracleError::UnsupportedPrep(var.name.clone()))
                }
                (None, Prep::Uniform) => Mechanism::Coin,
                (None, Prep::Ground) => Mechanism::Rotation(0.0),
                (None, Prep::Rotation(theta)) => Mechanism::Rotation(theta),
            };

            let rows = 1usize << parents.len();
            let p_one = (0..rows)
                .map(|row| match mechanism {
                    Mechanism::Forced(v) => f64::from(v),
                    Mechanism::Coin => 0.5,
                    Mechanism::Rotation(base) => {
                        let theta = model
                            .incoming(&var.name)
                            .filter(|e| {
                                let k = parents
                                    .iter()
                                    .position(|(_, p)| *p == e.parent)
                                    .expect("edge parent is listed");
                                ((row >> k) & 1) as u8 == e.control_value
                            })
                            .fold(base, |acc, e| acc + e.signed_angle());
                        half_angle_sin_sq(theta)
                    }
                })
                .collect();

            Ok(ConditionalTable {
                variable: var.name.clone(),
                qubit: var.qubit,
                parent_qubits: parents.iter().map(|(q, _)| *q).collect(),
                parents: parents.into_iter().map(|(_, p)| p).collect(),
                p_one,
            })
        })
        .collect()
}

/// Exact joint distribution as a product of conditional table entries.
pub fn enumerate_joint(model: &CausalModel) -> Result<Distribution, OracleError> {
    let tables = conditional_tables(model)?;
    let n = model.n_variables();
    let order = model.topological_order()?;
    let ordered: Vec<&ConditionalTable> = order
        .iter()
        .map(|name| tables.iter().find(|t| t.variable == *name).expect("same model"))
        .collect();

    let probs = (0..1usize << n)
        .map(|assignment| {
            ordered
                .iter()
                .map(|t| {
                    let p1 = t.p_one_given(assignment);
                    if (assignment >> t.qubit) & 1 == 1 {
                        p1
                    } else {
                        1.0 - p1
                    }
                })
                .product()
        })
        .collect();
    Ok(Distribution::exact(n, probs))
}
