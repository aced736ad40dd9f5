use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qdo_cli::commands::{
    self, cmd_chart, cmd_healthcare10, cmd_run, cmd_simpson3, cmd_validate, load_model, parse_intervention,
    BackendKind, CliError, RunConfig, RunRequest, DEFAULT_SEED, DEFAULT_SHOTS,
};
use qdo_core::{Intervention, StratumWeighting};

#[derive(Parser)]
#[command(name = "qdo", version, about = "Causal inference with interventional quantum circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Three-variable Simpson's paradox model.
    Simpson3(Shared),
    /// Ten-variable healthcare network with confounding bias per analysis level.
    Healthcare10 {
        #[command(flatten)]
        shared: Shared,
        /// Stratifier to adjust for (repeatable; default Age and Region).
        #[arg(long = "stratify")]
        stratify: Vec<String>,
    },
    /// Analyse a model file.
    Run {
        /// Model JSON file.
        model: PathBuf,
        #[command(flatten)]
        shared: Shared,
        #[arg(long)]
        treatment: Option<String>,
        #[arg(long)]
        outcome: Option<String>,
        /// Intervention VAR=BIT (repeatable).
        #[arg(long = "do", value_parser = parse_intervention)]
        interventions: Vec<Intervention>,
        /// Report subgroup effects for VAR=0 and VAR=1 (repeatable).
        #[arg(long = "subgroup")]
        subgroups: Vec<String>,
        /// Report the adjusted effect for this stratifier (repeatable).
        #[arg(long = "stratify")]
        stratify: Vec<String>,
        /// Compute treatment effects instead of marginals.
        #[arg(long)]
        effect: bool,
    },
    /// Check oracle/engine equivalence and surgery consistency for a model file.
    Validate {
        model: PathBuf,
    },
    /// Render a saved JSON report as SVG.
    Chart {
        report: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Draw the causal effect as a dashed line.
        #[arg(long)]
        reference: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Exact,
    Sampled,
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightingArg {
    Prevalence,
    TreatedPrevalence,
    Uniform,
}

#[derive(Args)]
struct Shared {
    #[arg(long, value_enum, default_value = "exact")]
    backend: BackendArg,
    #[arg(long, default_value_t = DEFAULT_SHOTS)]
    shots: u64,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, env = "QDO_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Depolarizing probability per gate (sampled backend only).
    #[arg(long)]
    noise: Option<f64>,
    /// Weighting of strata in adjusted effects.
    #[arg(long, value_enum, default_value = "prevalence")]
    weighting: WeightingArg,
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Print the compiled circuits.
    #[arg(long)]
    print_circuit: bool,
    /// Expand control-on-zero gates into X-wrapped controls when printing.
    #[arg(long)]
    expanded: bool,
}

impl From<Shared> for RunConfig {
    fn from(s: Shared) -> Self {
        RunConfig {
            backend: match s.backend {
                BackendArg::Exact => BackendKind::Exact,
                BackendArg::Sampled => BackendKind::Sampled,
            },
            shots: s.shots,
            trials: s.trials,
            seed: s.seed,
            noise: s.noise,
            weighting: match s.weighting {
                WeightingArg::Prevalence => StratumWeighting::Prevalence,
                WeightingArg::TreatedPrevalence => StratumWeighting::TreatedPrevalence,
                WeightingArg::Uniform => StratumWeighting::Uniform,
            },
            json: s.json,
            csv: s.csv,
            svg: s.svg,
            print_circuit: s.print_circuit,
            expanded: s.expanded,
        }
    }
}

fn execute(command: Command) -> Result<(), CliError> {
    let (output, cfg) = match command {
        Command::Simpson3(shared) => {
            let cfg = RunConfig::from(shared);
            (cmd_simpson3(&cfg)?, cfg)
        }
        Command::Healthcare10 { shared, stratify } => {
            let cfg = RunConfig::from(shared);
            (cmd_healthcare10(&cfg, &stratify)?, cfg)
        }
        Command::Run {
            model,
            shared,
            treatment,
            outcome,
            interventions,
            subgroups,
            stratify,
            effect,
        } => {
            let cfg = RunConfig::from(shared);
            let model = load_model(&model)?;
            let request = RunRequest {
                treatment,
                outcome,
                interventions,
                subgroups,
                stratifiers: stratify,
                effect,
            };
            (cmd_run(&model, &request, &cfg)?, cfg)
        }
        Command::Validate { model } => {
            let model = load_model(&model)?;
            print!("{}", cmd_validate(&model)?.text);
            return Ok(());
        }
        Command::Chart { report, out, reference } => {
            let json = std::fs::read_to_string(&report)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", report.display())))?;
            let svg = cmd_chart(&json, reference)?;
            return commands::write_file(&out, &svg);
        }
    };
    output.write_outputs(&cfg)?;
    print!("{}", output.text);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
