//! Effect sizes and trial statistics over simulated distributions.

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::circuit::{compile, CircuitError};
use crate::engine::{derive_seed, run_exact, run_sampled, Distribution, EngineError, NoiseSpec};
use crate::model::{CausalModel, Intervention, ModelError};

/// Variable name → qubit index.
pub type VariableMap = BTreeMap<String, usize>;

/// z-value of a two-sided 95% normal interval.
pub const Z_95: f64 = 1.96;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("undefined conditional: P({0}) = 0")]
    UndefinedConditional(String),
    #[error("undefined stratum cell: {stratifier}={stratum}, {treatment}={value} has no mass")]
    UndefinedStratumCell {
        stratifier: String,
        stratum: u8,
        treatment: String,
        value: u8,
    },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("no trial estimates to aggregate")]
    NoTrials,
    #[error("sampling plan needs at least one trial and one shot")]
    EmptyPlan,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

impl AnalysisError {
    /// True for errors caused by conditioning on an event with no mass.
    pub fn is_undefined_conditional(&self) -> bool {
        matches!(
            self,
            AnalysisError::UndefinedConditional(_) | AnalysisError::UndefinedStratumCell { .. }
        )
    }
}

/// `P(outcome | condition)` over named variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub outcome: (String, u8),
    pub condition: Vec<(String, u8)>,
}

impl Query {
    pub fn new(variable: impl Into<String>, value: u8) -> Self {
        Self {
            outcome: (variable.into(), value),
            condition: Vec::new(),
        }
    }

    pub fn given(mut self, variable: impl Into<String>, value: u8) -> Self {
        self.condition.push((variable.into(), value));
        self
    }
}

fn describe(assignments: &[(String, u8)]) -> String {
    if assignments.is_empty() {
        return "⊤".to_string();
    }
    assignments
        .iter()
        .map(|(v, x)| format!("{v}={x}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Builds a `(mask, pattern)` pair selecting bitstrings that satisfy every
/// assignment.
fn event(map: &VariableMap, assignments: &[(String, u8)]) -> Result<(usize, usize), AnalysisError> {
    let mut mask = 0usize;
    let mut pattern = 0usize;
    for (name, value) in assignments {
        let q = *map
            .get(name)
            .ok_or_else(|| AnalysisError::UnknownVariable(name.clone()))?;
        if *value > 1 {
            return Err(AnalysisError::InvalidQuery(format!("{name}={value} is not a bit")));
        }
        let bit = 1usize << q;
        if mask & bit != 0 && (pattern & bit != 0) != (*value == 1) {
            // contradictory condition: empty event
            return Ok((bit, usize::MAX));
        }
        mask |= bit;
        if *value == 1 {
            pattern |= bit;
        }
    }
    Ok((mask, pattern))
}

fn event_mass(dist: &Distribution, (mask, pattern): (usize, usize)) -> f64 {
    dist.mass(|i| i & mask == pattern)
}

pub fn cond_prob(dist: &Distribution, map: &VariableMap, q: &Query) -> Result<f64, AnalysisError> {
    let condition = event(map, &q.condition)?;
    let mut joint_assignments = q.condition.clone();
    joint_assignments.push(q.outcome.clone());
    let joint = event(map, &joint_assignments)?;

    let denom = event_mass(dist, condition);
    if denom <= 0.0 {
        return Err(AnalysisError::UndefinedConditional(describe(&q.condition)));
    }
    Ok((event_mass(dist, joint) / denom).clamp(0.0, 1.0))
}

fn outcome_rate(
    dist: &Distribution,
    map: &VariableMap,
    outcome: &str,
    condition: &[(String, u8)],
) -> Result<f64, AnalysisError> {
    let q = Query {
        outcome: (outcome.to_string(), 1),
        condition: condition.to_vec(),
    };
    cond_prob(dist, map, &q)
}

/// `P(O=1 | T=1) − P(O=1 | T=0)`.
pub fn observational_effect(
    dist: &Distribution,
    map: &VariableMap,
    treatment: &str,
    outcome: &str,
) -> Result<f64, AnalysisError> {
    let treated = outcome_rate(dist, map, outcome, &[(treatment.to_string(), 1)])?;
    let control = outcome_rate(dist, map, outcome, &[(treatment.to_string(), 0)])?;
    Ok(treated - control)
}

/// Effect within the stratum `stratifier = value`.
pub fn subgroup_effect(
    dist: &Distribution,
    map: &VariableMap,
    treatment: &str,
    outcome: &str,
    stratifier: &str,
    value: u8,
) -> Result<f64, AnalysisError> {
    let rate = |t: u8| {
        let cond = [(treatment.to_string(), t), (stratifier.to_string(), value)];
        outcome_rate(dist, map, outcome, &cond).map_err(|e| match e {
            AnalysisError::UndefinedConditional(_) => AnalysisError::UndefinedStratumCell {
                stratifier: stratifier.to_string(),
                stratum: value,
                treatment: treatment.to_string(),
                value: t,
            },
            other => other,
        })
    };
    Ok(rate(1)? - rate(0)?)
}

/// How per-stratum effects are combined into one number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StratumWeighting {
    /// `P(Z=z)`, the back-door adjustment.
    #[default]
    Prevalence,
    /// `P(Z=z | T=1)`.
    TreatedPrevalence,
    /// Plain mean over the strata present.
    Uniform,
}

impl StratumWeighting {
    pub const ALL: [StratumWeighting; 3] = [
        StratumWeighting::Prevalence,
        StratumWeighting::TreatedPrevalence,
        StratumWeighting::Uniform,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StratumWeighting::Prevalence => "prevalence",
            StratumWeighting::TreatedPrevalence => "treated-prevalence",
            StratumWeighting::Uniform => "uniform",
        }
    }
}

impl std::str::FromStr for StratumWeighting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|w| w.name() == s)
            .ok_or_else(|| format!("unknown weighting `{s}` (expected prevalence, treated-prevalence or uniform)"))
    }
}

/// One stratum of a stratified estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Stratum {
    pub variable: String,
    pub value: u8,
    pub weight: f64,
    pub effect: f64,
}

/// Back-door style stratified effect with `P(Z=z)` weights.
pub fn stratified_effect(
    dist: &Distribution,
    map: &VariableMap,
    treatment: &str,
    outcome: &str,
    stratifier: &str,
) -> Result<(f64, Vec<Stratum>), AnalysisError> {
    stratified_effect_weighted(dist, map, treatment, outcome, stratifier, StratumWeighting::Prevalence)
}

/// Stratified effect under an explicit weighting. Strata with no mass are
/// left out; a stratum with mass but an empty treatment cell is an error.
pub fn stratified_effect_weighted(
    dist: &Distribution,
    map: &VariableMap,
    treatment: &str,
    outcome: &str,
    stratifier: &str,
    weighting: StratumWeighting,
) -> Result<(f64, Vec<Stratum>), AnalysisError> {
    if stratifier == treatment || stratifier == outcome {
        return Err(AnalysisError::InvalidQuery(format!(
            "stratifier `{stratifier}` must differ from treatment and outcome"
        )));
    }
    let total = dist.total_mass();
    let treated = event_mass(dist, event(map, &[(treatment.to_string(), 1)])?);

    let mut strata = Vec::with_capacity(2);
    for z in 0..=1u8 {
        let z_mass = event_mass(dist, event(map, &[(stratifier.to_string(), z)])?);
        if z_mass <= 0.0 {
            continue;
        }
        let effect = subgroup_effect(dist, map, treatment, outcome, stratifier, z)?;
        let weight = match weighting {
            StratumWeighting::Prevalence => z_mass / total,
            StratumWeighting::TreatedPrevalence => {
                if treated <= 0.0 {
                    return Err(AnalysisError::UndefinedConditional(format!("{treatment}=1")));
                }
                let zt = [(stratifier.to_string(), z), (treatment.to_string(), 1)];
                event_mass(dist, event(map, &zt)?) / treated
            }
            StratumWeighting::Uniform => 1.0,
        };
        strata.push(Stratum {
            variable: stratifier.to_string(),
            value: z,
            weight,
            effect,
        });
    }
    if weighting == StratumWeighting::Uniform {
        let k = strata.len() as f64;
        strata.iter_mut().for_each(|s| s.weight = 1.0 / k);
    }
    let aggregate = strata.iter().map(|s| s.weight * s.effect).sum();
    Ok((aggregate, strata))
}

/// Mean and normal-approximation 95% interval over per-trial estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialSummary {
    pub mean: f64,
    pub std_err: Option<f64>,
    pub ci: Option<(f64, f64)>,
}

pub fn aggregate_trials(estimates: &[f64]) -> Result<TrialSummary, AnalysisError> {
    if estimates.is_empty() {
        return Err(AnalysisError::NoTrials);
    }
    let k = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / k;
    if estimates.len() < 2 {
        return Ok(TrialSummary {
            mean,
            std_err: None,
            ci: None,
        });
    }
    let var = estimates.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    let std_err = var.sqrt() / k.sqrt();
    let half = Z_95 * std_err;
    Ok(TrialSummary {
        mean,
        std_err: Some(std_err),
        ci: Some((mean - half, mean + half)),
    })
}

/// Repeated shot sampling with per-trial derived seeds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingPlan {
    pub shots: u64,
    pub trials: usize,
    pub seed: u64,
    pub noise: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Backend {
    Exact,
    Sampled(SamplingPlan),
}

impl Backend {
    pub fn name(&self) -> &'static str {
        match self {
            Backend::Exact => "exact",
            Backend::Sampled(_) => "sampled",
        }
    }
}

/// A quantity to estimate from one observational run and a pair of
/// interventional runs.
#[derive(Debug, Clone, PartialEq)]
pub enum Estimand {
    /// Observational effect inside `stratifier = value`.
    Subgroup { stratifier: String, value: u8 },
    /// Unadjusted observational effect.
    Observational,
    /// Stratum-weighted average of subgroup effects.
    Stratified {
        stratifier: String,
        weighting: StratumWeighting,
    },
    /// `P(O=1 | do(T=1)) − P(O=1 | do(T=0))`.
    Causal,
}

impl Estimand {
    pub fn label(&self) -> String {
        match self {
            Estimand::Subgroup { stratifier, value } => format!("Observational, {stratifier}={value}"),
            Estimand::Observational => "Observational, Overall".to_string(),
            Estimand::Stratified { stratifier, .. } => format!("Stratified by {stratifier}"),
            Estimand::Causal => "Causal, Overall (do)".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectReport {
    pub label: String,
    /// Exact value, or the trial mean when sampled.
    pub effect: f64,
    pub per_trial: Vec<f64>,
    pub mean: f64,
    pub std_err: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub n_trials: usize,
    pub shots_per_trial: Option<u64>,
    pub strata: Option<Vec<Stratum>>,
}

/// Outcome of one estimand in one trial.
#[derive(Debug, Clone)]
struct TrialValue {
    effect: f64,
    strata: Option<Vec<Stratum>>,
}

struct Runs {
    observational: Option<Distribution>,
    treated: Option<Distribution>,
    untreated: Option<Distribution>,
}

const SLOT_OBSERVATIONAL: u8 = 0;
const SLOT_TREATED: u8 = 1;
const SLOT_UNTREATED: u8 = 2;
const NOISE_SLOT: u8 = 0x80;

fn evaluate(
    runs: &Runs,
    map: &VariableMap,
    treatment: &str,
    outcome: &str,
    estimand: &Estimand,
) -> Result<TrialValue, AnalysisError> {
    let obs = || runs.observational.as_ref().expect("observational run requested");
    Ok(match estimand {
        Estimand::Subgroup { stratifier, value } => TrialValue {
            effect: subgroup_effect(obs(), map, treatment, outcome, stratifier, *value)?,
            strata: None,
        },
        Estimand::Observational => TrialValue {
            effect: observational_effect(obs(), map, treatment, outcome)?,
            strata: None,
        },
        Estimand::Stratified {
            stratifier,
            weighting,
        } => {
            let (effect, strata) =
                stratified_effect_weighted(obs(), map, treatment, outcome, stratifier, *weighting)?;
            TrialValue {
                effect,
                strata: Some(strata),
            }
        }
        Estimand::Causal => {
            let rate = |d: &Option<Distribution>| {
                outcome_rate(d.as_ref().expect("interventional run requested"), map, outcome, &[])
            };
            TrialValue {
                effect: rate(&runs.treated)? - rate(&runs.untreated)?,
                strata: None,
            }
        }
    })
}

fn mean_strata(trials: &[TrialValue]) -> Option<Vec<Stratum>> {
    let first = trials.first()?.strata.as_ref()?;
    let variable = first.first().map(|s| s.variable.clone())?;
    let k = trials.len() as f64;
    let strata = (0..=1u8)
        .filter_map(|value| {
            let present: Vec<&Stratum> = trials
                .iter()
                .filter_map(|t| t.strata.as_ref())
                .flat_map(|s| s.iter().filter(|s| s.value == value))
                .collect();
            if present.is_empty() {
                return None;
            }
            Some(Stratum {
                variable: variable.clone(),
                value,
                weight: present.iter().map(|s| s.weight).sum::<f64>() / k,
                effect: present.iter().map(|s| s.effect).sum::<f64>() / present.len() as f64,
            })
        })
        .collect();
    Some(strata)
}

/// Estimates every `estimand` for `treatment → outcome` on the chosen backend.
///
/// Sampled trials run in parallel; trial `t` draws the observational circuit
/// with `derive_seed(seed, t, 0)` and the `do(T=1)` / `do(T=0)` circuits with
/// slots 1 and 2. Noise generators use the same slots with the high bit set.
pub fn estimate(
    model: &CausalModel,
    treatment: &str,
    outcome: &str,
    estimands: &[Estimand],
    backend: &Backend,
) -> Result<Vec<EffectReport>, AnalysisError> {
    model.ensure_valid()?;
    for name in [treatment, outcome] {
        if model.variable(name).is_none() {
            return Err(AnalysisError::UnknownVariable(name.to_string()));
        }
    }
    if treatment == outcome {
        return Err(AnalysisError::InvalidQuery("treatment and outcome must differ".into()));
    }
    let map = model.qubit_map();

    let needs_obs = estimands.iter().any(|e| *e != Estimand::Causal);
    let needs_do = estimands.contains(&Estimand::Causal);
    let observational = needs_obs.then(|| compile(model)).transpose()?;
    let (treated, untreated) = if needs_do {
        let c1 = compile(&model.apply_do(&Intervention::new(treatment, 1))?)?;
        let c0 = compile(&model.apply_do(&Intervention::new(treatment, 0))?)?;
        (Some(c1), Some(c0))
    } else {
        (None, None)
    };

    let per_trial: Vec<Vec<TrialValue>> = match backend {
        Backend::Exact => {
            let run = |c: &Option<crate::circuit::Circuit>| c.as_ref().map(run_exact).transpose();
            let runs = Runs {
                observational: run(&observational)?,
                treated: run(&treated)?,
                untreated: run(&untreated)?,
            };
            let values = estimands
                .iter()
                .map(|e| evaluate(&runs, &map, treatment, outcome, e))
                .collect::<Result<Vec<_>, _>>()?;
            vec![values]
        }
        Backend::Sampled(plan) => {
            if plan.trials == 0 || plan.shots == 0 {
                return Err(AnalysisError::EmptyPlan);
            }
            (0..plan.trials as u64)
                .into_par_iter()
                .map(|trial| {
                    let run = |c: &Option<crate::circuit::Circuit>, slot: u8| {
                        c.as_ref()
                            .map(|c| {
                                let noise = plan
                                    .noise
                                    .map(|p| NoiseSpec::new(p, derive_seed(plan.seed, trial, slot | NOISE_SLOT)))
                                    .transpose()?;
                                run_sampled(c, plan.shots, derive_seed(plan.seed, trial, slot), noise)
                            })
                            .transpose()
                    };
                    let runs = Runs {
                        observational: run(&observational, SLOT_OBSERVATIONAL)?,
                        treated: run(&treated, SLOT_TREATED)?,
                        untreated: run(&untreated, SLOT_UNTREATED)?,
                    };
                    estimands
                        .iter()
                        .map(|e| evaluate(&runs, &map, treatment, outcome, e))
                        .collect::<Result<Vec<_>, AnalysisError>>()
                })
                .collect::<Result<Vec<_>, AnalysisError>>()?
        }
    };

    estimands
        .iter()
        .enumerate()
        .map(|(k, estimand)| {
            let trials: Vec<TrialValue> = per_trial.iter().map(|t| t[k].clone()).collect();
            let values: Vec<f64> = trials.iter().map(|t| t.effect).collect();
            let summary = aggregate_trials(&values)?;
            let (std_err, ci) = match backend {
                Backend::Exact => (None, None),
                Backend::Sampled(_) => (summary.std_err, summary.ci),
            };
            Ok(EffectReport {
                label: estimand.label(),
                effect: summary.mean,
                per_trial: values,
                mean: summary.mean,
                std_err,
                ci_low: ci.map(|c| c.0),
                ci_high: ci.map(|c| c.1),
                n_trials: trials.len(),
                shots_per_trial: match backend {
                    Backend::Exact => None,
                    Backend::Sampled(plan) => Some(plan.shots),
                },
                strata: mean_strata(&trials),
            })
        })
        .collect()
}

/// Average causal effect of `treatment` on `outcome`.
pub fn causal_effect(
    model: &CausalModel,
    treatment: &str,
    outcome: &str,
    backend: &Backend,
) -> Result<EffectReport, AnalysisError> {
    if model.intervention_on(treatment).is_some() {
        return Err(ModelError::AlreadyIntervened(treatment.to_string()).into());
    }
    let mut reports = estimate(model, treatment, outcome, &[Estimand::Causal], backend)?;
    Ok(reports.remove(0))
}
