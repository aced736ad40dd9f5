//! Structural causal models encoded as quantum circuits.
//!
//! A [`CausalModel`] over binary variables is lowered to a [`Circuit`] in which
//! every causal link is a controlled Y-rotation. Interventions are performed
//! either on the model ([`CausalModel::apply_do`]) or directly on the compiled
//! circuit ([`surgered_circuit`]); both routes yield the same distribution.
//!
//! ```
//! use qdo_core::{analysis, catalog};
//!
//! let entry = catalog::simpson3();
//! let ace = analysis::causal_effect(&entry.model, "T", "O", &analysis::Backend::Exact).unwrap();
//! assert!((ace.effect - 0.2311).abs() < 1e-3);
//! ```

pub mod analysis;
pub mod catalog;
pub mod circuit;
pub mod engine;
pub mod model;
pub mod oracle;

pub use analysis::{
    aggregate_trials, causal_effect, cond_prob, estimate, observational_effect, stratified_effect,
    stratified_effect_weighted, subgroup_effect, AnalysisError, Backend, EffectReport, Estimand, Query,
    SamplingPlan, Stratum, StratumWeighting, TrialSummary, VariableMap,
};
pub use catalog::{CatalogEntry, Roles};
pub use circuit::{compile, surgered_circuit, Circuit, CircuitError, Gate, GateKind, Tag};
pub use engine::{derive_seed, run_exact, run_sampled, DistKind, Distribution, EngineError, NoiseSpec, Statevector};
pub use model::{CausalModel, Edge, Intervention, ModelError, Prep, Sign, Variable, Violation};
pub use oracle::{conditional_tables, enumerate_joint, ConditionalTable, OracleError};
