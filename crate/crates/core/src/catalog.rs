//! The two benchmark models: a 3-variable Simpson's paradox and a 10-variable
//! healthcare network with multi-level confounding.

use crate::model::{CausalModel, Edge, Prep, Variable};

/// Variables with a fixed role in the experiments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Roles {
    pub treatment: String,
    pub outcome: String,
    pub stratifiers: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEntry {
    pub id: &'static str,
    pub model: CausalModel,
    pub roles: Roles,
}

pub const IDS: [&str; 2] = ["simpson3", "healthcare10"];

pub fn by_id(id: &str) -> Option<CatalogEntry> {
    match id {
        "simpson3" => Some(simpson3()),
        "healthcare10" => Some(healthcare10()),
        _ => None,
    }
}

fn roles(treatment: &str, outcome: &str, stratifiers: &[&str]) -> Roles {
    Roles {
        treatment: treatment.to_string(),
        outcome: outcome.to_string(),
        stratifiers: stratifiers.iter().map(|s| s.to_string()).collect(),
    }
}

/// Gender (q0) confounds Treatment (q1) and Outcome (q2).
///
/// Males (G=0) are treated with probability sin²(1.2) ≈ 0.87 and females with
/// sin²(0.4) ≈ 0.15; females also have a better baseline outcome.
pub fn simpson3() -> CatalogEntry {
    let model = CausalModel::new(
        "simpson3",
        vec![
            Variable::new("G", 0, Prep::Uniform),
            Variable::new("T", 1, Prep::Ground),
            Variable::new("O", 2, Prep::rotation(0.3)),
        ],
        vec![
            Edge::new("G", "T", 0, 2.4),
            Edge::new("G", "T", 1, 0.8),
            Edge::new("G", "O", 1, 1.0),
            Edge::new("T", "O", 1, 0.6),
        ],
    );
    CatalogEntry {
        id: "simpson3",
        model,
        roles: roles("T", "O", &["G"]),
    }
}

/// Ten-variable healthcare network, qubits in listing order.
///
/// The inhibiting GenderBias → Treatment link (θ = 1.4) is encoded as a
/// rotation that fires for low bias (G=0), so high bias lowers the treatment
/// rate relative to low bias.
pub fn healthcare10() -> CatalogEntry {
    let var = |name: &str, qubit, prep| Variable::new(name, qubit, prep);
    let model = CausalModel::new(
        "healthcare10",
        vec![
            var("Age", 0, Prep::rotation(1.0)),
            var("Income", 1, Prep::Ground),
            var("Region", 2, Prep::Ground),
            var("GenderBias", 3, Prep::Ground),
            var("Treatment", 4, Prep::rotation(0.2)),
            var("Insurance", 5, Prep::rotation(0.3)),
            var("Hospital", 6, Prep::rotation(0.4)),
            var("Doctor", 7, Prep::rotation(0.5)),
            var("Outcome", 8, Prep::rotation(0.1)),
            var("Satisfaction", 9, Prep::rotation(0.3)),
        ],
        vec![
            Edge::new("Age", "Income", 1, 0.8),
            Edge::new("Income", "Region", 1, 1.2),
            Edge::new("Region", "GenderBias", 0, 1.0),
            Edge::new("Age", "Treatment", 1, 1.2),
            Edge::new("Income", "Treatment", 1, 1.0),
            Edge::new("GenderBias", "Treatment", 0, 1.4),
            Edge::new("Treatment", "Insurance", 1, 0.8),
            Edge::new("Age", "Insurance", 1, 0.4),
            Edge::new("Insurance", "Hospital", 1, 0.6),
            Edge::new("Region", "Hospital", 1, 0.5),
            Edge::new("Hospital", "Doctor", 1, 0.4),
            Edge::new("GenderBias", "Doctor", 1, 0.3),
            Edge::new("Age", "Outcome", 0, 0.8),
            Edge::new("Region", "Outcome", 0, 0.6),
            Edge::new("Treatment", "Outcome", 1, 1.2),
            Edge::new("Doctor", "Outcome", 1, 0.5),
            Edge::new("Hospital", "Outcome", 1, 0.4),
            Edge::new("Outcome", "Satisfaction", 1, 0.8),
            Edge::new("Doctor", "Satisfaction", 1, 0.3),
        ],
    );
    CatalogEntry {
        id: "healthcare10",
        model,
        roles: roles("Treatment", "Outcome", &["Age", "Region"]),
    }
}
