//! Subcommand implementations, independent of argument parsing.

use std::path::{Path, PathBuf};

use qdo_core::catalog::{self, CatalogEntry};
use qdo_core::{
    aggregate_trials, compile, derive_seed, enumerate_joint, estimate, run_exact, run_sampled, surgered_circuit,
    AnalysisError, Backend, CausalModel, CircuitError, Distribution, EngineError, Estimand, Intervention,
    ModelError, NoiseSpec, OracleError, SamplingPlan, StratumWeighting,
};
use thiserror::Error;

use crate::chart::render_svg;
use crate::report::{Group, Report};

/// Seed used when neither `--seed` nor `QDO_SEED` is given.
pub const DEFAULT_SEED: u64 = 2025;
pub const DEFAULT_SHOTS: u64 = 15_000;
/// Largest oracle/engine deviation `validate` accepts.
pub const EQUIVALENCE_TOL: f64 = 1e-10;
const SURGERY_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Model(String),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("equivalence check failed: {0}")]
    Equivalence(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    /// 1 equivalence failure, 2 user error, 3 undefined conditional.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Equivalence(_) => 1,
            CliError::Analysis(e) if e.is_undefined_conditional() => 3,
            _ => 2,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Model(e.to_string())
    }
}

impl From<CircuitError> for CliError {
    fn from(e: CircuitError) -> Self {
        CliError::Model(e.to_string())
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        CliError::Model(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BackendKind {
    #[default]
    Exact,
    Sampled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub backend: BackendKind,
    pub shots: u64,
    /// `None` picks the subcommand's default.
    pub trials: Option<usize>,
    pub seed: u64,
    pub noise: Option<f64>,
    pub weighting: StratumWeighting,
    pub json: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub print_circuit: bool,
    pub expanded: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            backend: BackendKind::Exact,
            shots: DEFAULT_SHOTS,
            trials: None,
            seed: DEFAULT_SEED,
            noise: None,
            weighting: StratumWeighting::Prevalence,
            json: None,
            csv: None,
            svg: None,
            print_circuit: false,
            expanded: false,
        }
    }
}

impl RunConfig {
    pub fn resolve_backend(&self, default_trials: usize) -> Result<Backend, CliError> {
        match self.backend {
            BackendKind::Exact => {
                if self.noise.is_some() {
                    return Err(CliError::Config("--noise requires --backend sampled".into()));
                }
                Ok(Backend::Exact)
            }
            BackendKind::Sampled => {
                let trials = self.trials.unwrap_or(default_trials);
                if self.shots == 0 {
                    return Err(CliError::Config("--shots must be at least 1".into()));
                }
                if trials == 0 {
                    return Err(CliError::Config("--trials must be at least 1".into()));
                }
                if let Some(p) = self.noise {
                    if !(0.0..=1.0).contains(&p) {
                        return Err(CliError::Config(format!("--noise {p} is outside [0, 1]")));
                    }
                }
                Ok(Backend::Sampled(SamplingPlan {
                    shots: self.shots,
                    trials,
                    seed: self.seed,
                    noise: self.noise,
                }))
            }
        }
    }
}

/// Everything a subcommand produced; nothing is written until it succeeds.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    pub report: Report,
    pub text: String,
    pub chart_title: String,
    pub reference: Option<f64>,
}

impl CommandOutput {
    pub fn svg(&self) -> String {
        render_svg(&self.chart_title, &self.report.groups, self.reference)
    }

    /// Writes the requested report files.
    pub fn write_outputs(&self, cfg: &RunConfig) -> Result<(), CliError> {
        if let Some(path) = &cfg.json {
            write_file(path, &self.report.to_json())?;
        }
        if let Some(path) = &cfg.csv {
            let csv = self
                .report
                .to_csv()
                .map_err(|e| CliError::Config(format!("csv encoding failed: {e}")))?;
            write_file(path, &csv)?;
        }
        if let Some(path) = &cfg.svg {
            write_file(path, &self.svg())?;
        }
        Ok(())
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn base_report(model: &CausalModel, backend: &Backend) -> Report {
    let (shots, trials, seed, noise) = match backend {
        Backend::Exact => (None, None, None, None),
        Backend::Sampled(plan) => (Some(plan.shots), Some(plan.trials), Some(plan.seed), plan.noise),
    };
    Report {
        model: model.name.clone(),
        backend: backend.name().to_string(),
        shots,
        trials,
        seed,
        noise,
        groups: Vec::new(),
    }
}

fn circuit_listing(model: &CausalModel, treatment: &str, expanded: bool) -> Result<String, CliError> {
    let observational = compile(model)?;
    let mut text = format!("# observational\n{}", observational.to_text(expanded));
    if model.intervention_on(treatment).is_none() {
        for value in [1, 0] {
            let iv = Intervention::new(treatment, value);
            let cut = surgered_circuit(&observational, &iv)?;
            text.push_str(&format!("# {iv}\n{}", cut.to_text(expanded)));
        }
    }
    Ok(text)
}

/// Runs `estimands` and packages them as a report.
pub fn run_effects(
    model: &CausalModel,
    treatment: &str,
    outcome: &str,
    estimands: &[Estimand],
    backend: &Backend,
    with_bias: bool,
) -> Result<Report, CliError> {
    let sampled = matches!(backend, Backend::Sampled(_));
    let effects = estimate(model, treatment, outcome, estimands, backend)?;
    let mut report = base_report(model, backend);
    report.groups = effects.iter().map(|e| Group::from_effect(e, sampled)).collect();
    if with_bias {
        if let Some(k) = estimands.iter().position(|e| *e == Estimand::Causal) {
            let ace = report.groups[k].effect;
            for (g, estimand) in report.groups.iter_mut().zip(estimands) {
                // the causal row is the reference by definition
                g.bias = Some(if *estimand == Estimand::Causal { 0.0 } else { g.effect - ace });
            }
        }
    }
    Ok(report)
}

fn finish(report: Report, prefix: String, title: &str, reference: Option<f64>) -> CommandOutput {
    let mut text = prefix;
    text.push_str(&report.to_table());
    CommandOutput {
        report,
        text,
        chart_title: title.to_string(),
        reference,
    }
}

fn simpson_estimands(stratifier: &str) -> Vec<Estimand> {
    vec![
        Estimand::Subgroup {
            stratifier: stratifier.to_string(),
            value: 0,
        },
        Estimand::Subgroup {
            stratifier: stratifier.to_string(),
            value: 1,
        },
        Estimand::Observational,
        Estimand::Causal,
    ]
}

fn catalog_prefix(entry: &CatalogEntry, cfg: &RunConfig) -> Result<String, CliError> {
    if cfg.print_circuit {
        circuit_listing(&entry.model, &entry.roles.treatment, cfg.expanded)
    } else {
        Ok(String::new())
    }
}

/// Subgroup, overall observational and causal effects of the 3-variable model.
pub fn cmd_simpson3(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let entry = catalog::simpson3();
    let backend = cfg.resolve_backend(30)?;
    let estimands = simpson_estimands(&entry.roles.stratifiers[0]);
    let report = run_effects(
        &entry.model,
        &entry.roles.treatment,
        &entry.roles.outcome,
        &estimands,
        &backend,
        false,
    )?;
    let prefix = catalog_prefix(&entry, cfg)?;
    Ok(finish(report, prefix, "simpson3: treatment effect by analysis group", None))
}

/// Observational, stratified and causal effects of the healthcare network,
/// each with its bias against the causal effect.
pub fn cmd_healthcare10(cfg: &RunConfig, stratifiers: &[String]) -> Result<CommandOutput, CliError> {
    let entry = catalog::healthcare10();
    let backend = cfg.resolve_backend(10)?;
    let stratifiers = if stratifiers.is_empty() {
        entry.roles.stratifiers.clone()
    } else {
        stratifiers.to_vec()
    };
    for s in &stratifiers {
        if entry.model.variable(s).is_none() {
            return Err(CliError::Config(format!("unknown stratifier `{s}`")));
        }
    }
    let mut estimands = vec![Estimand::Observational];
    estimands.extend(stratifiers.iter().map(|s| Estimand::Stratified {
        stratifier: s.clone(),
        weighting: cfg.weighting,
    }));
    estimands.push(Estimand::Causal);

    let report = run_effects(
        &entry.model,
        &entry.roles.treatment,
        &entry.roles.outcome,
        &estimands,
        &backend,
        true,
    )?;
    let reference = report.groups.last().map(|g| g.effect);
    let prefix = catalog_prefix(&entry, cfg)?;
    Ok(finish(report, prefix, "healthcare10: confounding bias by analysis level", reference))
}

/// What `run` should compute on a user model.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunRequest {
    pub treatment: Option<String>,
    pub outcome: Option<String>,
    pub interventions: Vec<Intervention>,
    pub subgroups: Vec<String>,
    pub stratifiers: Vec<String>,
    pub effect: bool,
}

/// Parses `VAR=BIT`.
pub fn parse_intervention(spec: &str) -> Result<Intervention, String> {
    let (var, bit) = spec
        .split_once('=')
        .ok_or_else(|| format!("expected VAR=BIT, got `{spec}`"))?;
    let value = match bit.trim() {
        "0" => 0,
        "1" => 1,
        other => return Err(format!("`{other}` is not a bit in `{spec}`")),
    };
    if var.trim().is_empty() {
        return Err(format!("missing variable name in `{spec}`"));
    }
    Ok(Intervention::new(var.trim(), value))
}

pub fn load_model(path: &Path) -> Result<CausalModel, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Model(format!("cannot read {}: {e}", path.display())))?;
    CausalModel::from_json(&text).map_err(|e| CliError::Model(format!("{}: {e}", path.display())))
}

/// `P(v = 1)` for every variable, per trial when sampled.
fn marginal_groups(model: &CausalModel, backend: &Backend, condition: &str) -> Result<Vec<Group>, CliError> {
    let circuit = compile(model)?;
    let dists: Vec<Distribution> = match backend {
        Backend::Exact => vec![run_exact(&circuit)?],
        Backend::Sampled(plan) => (0..plan.trials as u64)
            .map(|trial| {
                let noise = plan
                    .noise
                    .map(|p| NoiseSpec::new(p, derive_seed(plan.seed, trial, 0x80)))
                    .transpose()?;
                run_sampled(&circuit, plan.shots, derive_seed(plan.seed, trial, 0), noise)
            })
            .collect::<Result<_, _>>()?,
    };
    let sampled = matches!(backend, Backend::Sampled(_));
    let mut variables: Vec<_> = model.variables.iter().collect();
    variables.sort_by_key(|v| v.qubit);
    variables
        .into_iter()
        .map(|v| {
            let per_trial: Vec<f64> = dists
                .iter()
                .map(|d| d.marginal(&[v.qubit]).map(|m| m.probability(1)))
                .collect::<Result<_, _>>()?;
            let summary = aggregate_trials(&per_trial)?;
            let label = if condition.is_empty() {
                format!("P({}=1)", v.name)
            } else {
                format!("P({}=1 | {condition})", v.name)
            };
            Ok(Group {
                label,
                effect: summary.mean,
                ci: summary.ci.filter(|_| sampled).map(|(a, b)| [a, b]),
                per_trial: sampled.then_some(per_trial),
                strata: None,
                bias: None,
                n_trials: dists.len(),
            })
        })
        .collect()
}

/// The analysis pipeline on a user-supplied model.
pub fn cmd_run(model: &CausalModel, request: &RunRequest, cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let backend = cfg.resolve_backend(10)?;
    for name in request
        .treatment
        .iter()
        .chain(&request.outcome)
        .chain(&request.subgroups)
        .chain(&request.stratifiers)
    {
        if model.variable(name).is_none() {
            return Err(CliError::Config(format!("unknown variable `{name}`")));
        }
    }

    let mut working = model.clone();
    for iv in &request.interventions {
        working = working.apply_do(iv)?;
    }
    let condition = request
        .interventions
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ");

    let mut report = base_report(model, &backend);
    let mut reference = None;
    let mut prefix = String::new();

    if request.effect {
        let (Some(treatment), Some(outcome)) = (&request.treatment, &request.outcome) else {
            return Err(CliError::Config("--effect needs --treatment and --outcome".into()));
        };
        if cfg.print_circuit {
            prefix = circuit_listing(&working, treatment, cfg.expanded)?;
        }
        let mut estimands: Vec<Estimand> = request
            .subgroups
            .iter()
            .flat_map(|s| {
                (0..=1).map(move |value| Estimand::Subgroup {
                    stratifier: s.clone(),
                    value,
                })
            })
            .collect();
        estimands.push(Estimand::Observational);
        estimands.extend(request.stratifiers.iter().map(|s| Estimand::Stratified {
            stratifier: s.clone(),
            weighting: cfg.weighting,
        }));
        estimands.push(Estimand::Causal);
        let effects = run_effects(&working, treatment, outcome, &estimands, &backend, !request.stratifiers.is_empty())?;
        reference = (!request.stratifiers.is_empty())
            .then(|| effects.groups.last().map(|g| g.effect))
            .flatten();
        report.groups = effects.groups;
    }

    if !request.interventions.is_empty() || !request.effect {
        if cfg.print_circuit && prefix.is_empty() {
            prefix = format!("# circuit\n{}", compile(&working)?.to_text(cfg.expanded));
        }
        report.groups.extend(marginal_groups(&working, &backend, &condition)?);
    }

    let title = format!("{}: {}", model.name, if request.effect { "treatment effects" } else { "marginals" });
    Ok(finish(report, prefix, &title, reference))
}

/// Result of `validate`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationSummary {
    pub max_deviation: f64,
    pub worst_bitstring: String,
    pub checks: usize,
    pub text: String,
}

fn bitstring(index: usize, n: usize) -> String {
    // most significant qubit first
    (0..n).rev().map(|q| if (index >> q) & 1 == 1 { '1' } else { '0' }).collect()
}

/// Oracle ↔ engine equivalence on the model and on every single-variable
/// intervention, plus model-surgery ↔ circuit-surgery agreement.
pub fn cmd_validate(model: &CausalModel) -> Result<ValidationSummary, CliError> {
    let violations = model.validate();
    if !violations.is_empty() {
        return Err(ModelError::Invalid(violations).into());
    }
    let observational = compile(model)?;
    let oracle_gap = |m: &CausalModel| -> Result<(f64, usize), CliError> {
        let oracle = enumerate_joint(m).map_err(|e| match e {
            OracleError::UnsupportedPrep(_) => CliError::Model(e.to_string()),
            OracleError::Model(e) => e.into(),
        })?;
        let engine = run_exact(&compile(m)?)?;
        Ok(engine.max_abs_diff(&oracle)?)
    };

    let mut worst = oracle_gap(model)?;
    let mut worst_case = "observational".to_string();
    let mut checks = 1;
    for var in &model.variables {
        if model.intervention_on(&var.name).is_some() {
            continue;
        }
        for value in 0..=1 {
            let iv = Intervention::new(var.name.clone(), value);
            let cut = model.apply_do(&iv)?;
            let gap = oracle_gap(&cut)?;
            checks += 1;
            if gap.0 > worst.0 {
                worst = gap;
                worst_case = iv.to_string();
            }
            let via_circuit = run_exact(&surgered_circuit(&observational, &iv)?)?;
            let (surgery_gap, at) = run_exact(&compile(&cut)?)?.max_abs_diff(&via_circuit)?;
            if surgery_gap >= SURGERY_TOL {
                return Err(CliError::Equivalence(format!(
                    "circuit surgery for {iv} deviates by {surgery_gap:.3e} at bitstring {}",
                    bitstring(at, model.n_variables())
                )));
            }
        }
    }

    let worst_bitstring = bitstring(worst.1, model.n_variables());
    if worst.0 >= EQUIVALENCE_TOL {
        return Err(CliError::Equivalence(format!(
            "oracle and engine differ by {:.3e} at bitstring {worst_bitstring} ({worst_case})",
            worst.0
        )));
    }
    let text = format!(
        "{}: valid, {} variables, {} edges\noracle-engine checks: {checks}, max deviation {:.3e} (bitstring {worst_bitstring}, {worst_case})\n",
        model.name,
        model.n_variables(),
        model.edges.len(),
        worst.0
    );
    Ok(ValidationSummary {
        max_deviation: worst.0,
        worst_bitstring,
        checks,
        text,
    })
}

/// Re-renders a saved JSON report as SVG.
pub fn cmd_chart(report_json: &str, reference: bool) -> Result<String, CliError> {
    let report: Report =
        serde_json::from_str(report_json).map_err(|e| CliError::Config(format!("malformed report: {e}")))?;
    if report.groups.is_empty() {
        return Err(CliError::Config("report has no groups".into()));
    }
    let reference = reference
        .then(|| report.groups.iter().find(|g| g.label.starts_with("Causal")).map(|g| g.effect))
        .flatten();
    Ok(render_svg(&report.model, &report.groups, reference))
}
