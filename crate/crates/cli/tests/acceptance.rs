//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p qdo-cli --test acceptance`.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use qdo_cli::commands::{cmd_healthcare10, cmd_simpson3, BackendKind, RunConfig};
use qdo_cli::Report;
use qdo_core::catalog::{healthcare10, simpson3};
use qdo_core::{
    compile, enumerate_joint, estimate, run_exact, stratified_effect_weighted, surgered_circuit, Backend,
    CausalModel, Distribution, Edge, Estimand, Intervention, Prep, SamplingPlan, StratumWeighting, Variable,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const SIMPSON_TARGET: [f64; 4] = [0.166, 0.296, -0.061, 0.232];
const SIMPSON_TOL: f64 = 0.005;
const HEALTH_TARGET: [f64; 4] = [0.377, 0.497, 0.406, 0.486];
const HEALTH_BIAS_TARGET: [f64; 4] = [-0.109, 0.011, -0.080, 0.0];
const HEALTH_TOL: f64 = 0.02;
const MAX_HALF_WIDTH: f64 = 0.01;
const EQUIV_TOL: f64 = 1e-10;
const SURGERY_TOL: f64 = 1e-12;
const RANDOM_MODELS: usize = 120;
const NOISE_LEVELS: [f64; 2] = [0.01, 0.02];
const NOISE_SEED_SETS: u64 = 200;
const NOISE_SHOTS: u64 = 1024;
const NOISE_TRIALS: usize = 3;

fn check(ok: bool, msg: impl Into<String>) -> Outcome {
    if ok {
        Ok(msg.into())
    } else {
        Err(msg.into())
    }
}

fn within_time(elapsed: Duration, limit: Duration) -> Result<(), String> {
    if elapsed < limit {
        Ok(())
    } else {
        Err(format!("took {elapsed:.2?}, limit {limit:?}"))
    }
}

fn effects(report: &Report) -> Vec<f64> {
    report.groups.iter().map(|g| g.effect).collect()
}

fn fmt_list(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:+.4}")).collect::<Vec<_>>().join(", ")
}

fn exact_simpson() -> Outcome {
    let start = Instant::now();
    let out = cmd_simpson3(&RunConfig::default()).map_err(|e| e.to_string())?;
    within_time(start.elapsed(), Duration::from_secs(1))?;
    let got = effects(&out.report);
    let worst = got.iter().zip(SIMPSON_TARGET).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    check(
        got.len() == 4 && worst <= SIMPSON_TOL,
        format!("exact simpson3 [{}], max |Δ| {worst:.4} ≤ {SIMPSON_TOL} in {:.2?}", fmt_list(&got), start.elapsed()),
    )
}

fn sampled_simpson() -> Outcome {
    let exact = effects(&cmd_simpson3(&RunConfig::default()).map_err(|e| e.to_string())?.report);
    let cfg = RunConfig {
        backend: BackendKind::Sampled,
        trials: Some(30),
        shots: 15_000,
        ..RunConfig::default()
    };
    let start = Instant::now();
    let out = cmd_simpson3(&cfg).map_err(|e| e.to_string())?;
    within_time(start.elapsed(), Duration::from_secs(10))?;

    let mut problems = Vec::new();
    let mut widest: f64 = 0.0;
    for ((g, exact), target) in out.report.groups.iter().zip(&exact).zip(SIMPSON_TARGET) {
        let [lo, hi] = g.ci.ok_or("sampled group without CI")?;
        let half = (hi - lo) / 2.0;
        widest = widest.max(half);
        if (g.effect - exact).abs() > half {
            problems.push(format!(
                "{}: mean {:+.4} vs exact {exact:+.4} outside ±{half:.4}",
                g.label, g.effect
            ));
        }
        if half > MAX_HALF_WIDTH {
            problems.push(format!("{}: half-width {half:.4}", g.label));
        }
        if g.effect.signum() != target.signum() {
            problems.push(format!("{}: sign of {:+.4}", g.label, g.effect));
        }
    }
    let msg = format!(
        "30×15000 seed {}: means [{}], max half-width {widest:.4} in {:.2?}",
        cfg.seed,
        fmt_list(&effects(&out.report)),
        start.elapsed()
    );
    if problems.is_empty() {
        Ok(msg)
    } else {
        Err(format!("{msg}; {}", problems.join("; ")))
    }
}

fn sign_reversal() -> Outcome {
    let got = effects(&cmd_simpson3(&RunConfig::default()).map_err(|e| e.to_string())?.report);
    check(
        got[0] > 0.0 && got[1] > 0.0 && got[2] < 0.0 && got[3] > 0.0,
        format!("subgroups {:+.4} {:+.4} > 0, overall {:+.4} < 0, causal {:+.4} > 0", got[0], got[1], got[2], got[3]),
    )
}

fn exact_healthcare() -> Outcome {
    let start = Instant::now();
    let out = cmd_healthcare10(&RunConfig::default(), &[]).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    within_time(elapsed, Duration::from_secs(5))?;
    let got = effects(&out.report);
    let bias: Vec<f64> = out.report.groups.iter().map(|g| g.bias.unwrap_or(f64::NAN)).collect();
    let worst_effect = got.iter().zip(HEALTH_TARGET).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let worst_bias = bias.iter().zip(HEALTH_BIAS_TARGET).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    // every candidate stratum weighting, for the record
    let entry = healthcare10();
    let d = run_exact(&compile(&entry.model).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let map = entry.model.qubit_map();
    let mut weightings = Vec::new();
    for w in StratumWeighting::ALL {
        let mut row = Vec::new();
        for s in ["Age", "Region"] {
            let (v, _) =
                stratified_effect_weighted(&d, &map, "Treatment", "Outcome", s, w).map_err(|e| e.to_string())?;
            row.push(format!("{s} {v:+.4}"));
        }
        weightings.push(format!("{}: {}", w.name(), row.join(" ")));
    }

    check(
        got.len() == 4 && worst_effect <= HEALTH_TOL && worst_bias <= HEALTH_TOL,
        format!(
            "healthcare10 [{}] max |Δ| {worst_effect:.4}, bias [{}] max |Δ| {worst_bias:.4}, tol {HEALTH_TOL} in {elapsed:.2?}; weightings {{{}}}",
            fmt_list(&got),
            fmt_list(&bias),
            weightings.join("; ")
        ),
    )
}

/// Random DAG over `n ≤ 6` binary variables with shuffled qubit layout.
fn random_model(rng: &mut ChaCha8Rng, id: usize) -> CausalModel {
    let n = rng.random_range(2..=6);
    let mut qubits: Vec<usize> = (0..n).collect();
    qubits.shuffle(rng);
    let names: Vec<String> = (0..n).map(|i| format!("V{i}")).collect();

    let mut edges = Vec::new();
    for child in 1..n {
        for parent in 0..child {
            if rng.random_bool(0.5) {
                let mut e = Edge::new(
                    names[parent].clone(),
                    names[child].clone(),
                    rng.random_range(0..=1),
                    rng.random_range(0.0..std::f64::consts::PI),
                );
                if rng.random_bool(0.3) {
                    e = e.negative();
                }
                edges.push(e);
            }
        }
    }
    let variables = (0..n)
        .map(|i| {
            let has_parents = edges.iter().any(|e| e.child == names[i]);
            let prep = match rng.random_range(0..3) {
                0 => Prep::Ground,
                1 if !has_parents => Prep::Uniform,
                _ => Prep::rotation(rng.random_range(0.0..std::f64::consts::TAU)),
            };
            Variable::new(names[i].clone(), qubits[i], prep)
        })
        .collect();
    CausalModel::new(format!("random{id}"), variables, edges)
}

fn oracle_gap(model: &CausalModel) -> Result<f64, String> {
    let oracle = enumerate_joint(model).map_err(|e| e.to_string())?;
    let engine = run_exact(&compile(model).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    Ok(engine.max_abs_diff(&oracle).map_err(|e| e.to_string())?.0)
}

fn surgery_gap(model: &CausalModel, ivs: &[Intervention]) -> Result<f64, String> {
    let mut cut = model.clone();
    let mut circuit = compile(model).map_err(|e| e.to_string())?;
    for iv in ivs {
        cut = cut.apply_do(iv).map_err(|e| e.to_string())?;
        circuit = surgered_circuit(&circuit, iv).map_err(|e| e.to_string())?;
    }
    let a = run_exact(&compile(&cut).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let b = run_exact(&circuit).map_err(|e| e.to_string())?;
    Ok(a.max_abs_diff(&b).map_err(|e| e.to_string())?.0)
}

/// Catalog models with their treatment surgeries, plus random models each
/// paired with one or two random interventions.
fn test_cases() -> Vec<(CausalModel, Vec<Intervention>)> {
    let mut cases = Vec::new();
    for entry in [simpson3(), healthcare10()] {
        for value in 0..=1 {
            cases.push((entry.model.clone(), vec![Intervention::new(entry.roles.treatment.clone(), value)]));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_cafe);
    for id in 0..RANDOM_MODELS {
        let model = random_model(&mut rng, id);
        let mut names: Vec<String> = model.variables.iter().map(|v| v.name.clone()).collect();
        names.shuffle(&mut rng);
        let k = rng.random_range(1..=2.min(names.len()));
        let ivs = names[..k]
            .iter()
            .map(|v| Intervention::new(v.clone(), rng.random_range(0..=1)))
            .collect();
        cases.push((model, ivs));
    }
    cases
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let mut random = 0;
    for (model, ivs) in test_cases() {
        if model.name.starts_with("random") {
            random += 1;
        }
        let mut cut = model.clone();
        worst = worst.max(oracle_gap(&model)?);
        checked += 1;
        for iv in &ivs {
            cut = cut.apply_do(iv).map_err(|e| e.to_string())?;
            worst = worst.max(oracle_gap(&cut)?);
            checked += 1;
        }
    }
    let elapsed = start.elapsed();
    within_time(elapsed, Duration::from_secs(30))?;
    check(
        worst < EQUIV_TOL && random >= 100,
        format!("{checked} distributions ({random} random models), max deviation {worst:.2e} < {EQUIV_TOL:e} in {elapsed:.2?}"),
    )
}

fn surgery_commutation() -> Outcome {
    let mut worst: f64 = 0.0;
    let cases = test_cases();
    for (model, ivs) in &cases {
        worst = worst.max(surgery_gap(model, ivs)?);
    }
    check(
        worst < SURGERY_TOL,
        format!("{} model/surgery pairs, max deviation {worst:.2e} < {SURGERY_TOL:e}", cases.len()),
    )
}

fn conditional(d: &Distribution, g_qubit: usize, g: usize, t_qubit: usize, o_qubit: usize, t: usize, o: usize) -> f64 {
    let pick = |i: usize, q: usize, v: usize| (i >> q) & 1 == v;
    let joint = d.mass(|i| pick(i, g_qubit, g) && pick(i, t_qubit, t) && pick(i, o_qubit, o));
    joint / d.mass(|i| pick(i, g_qubit, g))
}

fn root_intervention() -> Outcome {
    let m = simpson3().model;
    let (gq, tq, oq) = (m.qubit_of("G").unwrap(), m.qubit_of("T").unwrap(), m.qubit_of("O").unwrap());
    let d = run_exact(&compile(&m).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for g in 0..=1 {
        let cut = run_exact(&compile(&m.apply_do(&Intervention::new("G", g as u8)).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
        for t in 0..=1 {
            for o in 0..=1 {
                let observed = conditional(&d, gq, g, tq, oq, t, o);
                let forced = conditional(&cut, gq, g, tq, oq, t, o);
                worst = worst.max((observed - forced).abs());
            }
        }
    }
    check(worst < EQUIV_TOL, format!("max |P(T,O|do(G=g)) − P(T,O|G=g)| {worst:.2e} < {EQUIV_TOL:e}"))
}

struct NoiseTally {
    ace_positive: usize,
    obs_ci_has_zero: usize,
}

fn noise_tally(p: f64) -> Result<NoiseTally, String> {
    let entry = simpson3();
    let mut tally = NoiseTally {
        ace_positive: 0,
        obs_ci_has_zero: 0,
    };
    for set in 0..NOISE_SEED_SETS {
        let backend = Backend::Sampled(SamplingPlan {
            shots: NOISE_SHOTS,
            trials: NOISE_TRIALS,
            seed: 10_000 + set,
            noise: Some(p),
        });
        let r = estimate(
            &entry.model,
            "T",
            "O",
            &[Estimand::Observational, Estimand::Causal],
            &backend,
        )
        .map_err(|e| e.to_string())?;
        let (lo, hi) = (r[0].ci_low.unwrap(), r[0].ci_high.unwrap());
        if lo <= 0.0 && 0.0 <= hi {
            tally.obs_ci_has_zero += 1;
        }
        if r[1].effect > 0.0 {
            tally.ace_positive += 1;
        }
    }
    Ok(tally)
}

fn noise_signature() -> Outcome {
    let start = Instant::now();
    let clean = noise_tally(0.0)?;
    let n = NOISE_SEED_SETS as f64;
    let mut ok = true;
    let mut parts = vec![format!(
        "p=0: obs CI∋0 {:.3}, ACE>0 {:.3}",
        clean.obs_ci_has_zero as f64 / n,
        clean.ace_positive as f64 / n
    )];
    for p in NOISE_LEVELS {
        let t = noise_tally(p)?;
        let ace_rate = t.ace_positive as f64 / n;
        ok &= ace_rate >= 0.95 && t.obs_ci_has_zero > clean.obs_ci_has_zero;
        parts.push(format!(
            "p={p}: obs CI∋0 {:.3}, ACE>0 {ace_rate:.3}",
            t.obs_ci_has_zero as f64 / n
        ));
    }
    let elapsed = start.elapsed();
    within_time(elapsed, Duration::from_secs(120))?;
    check(
        ok,
        format!(
            "{NOISE_SEED_SETS} seed sets × {NOISE_TRIALS} trials × {NOISE_SHOTS} shots; {} in {elapsed:.2?}",
            parts.join("; ")
        ),
    )
}

fn run_qdo(args: &[&str], dir: &Path) -> Result<(Vec<u8>, Vec<u8>), String> {
    let json = dir.join("report.json");
    let svg = dir.join("chart.svg");
    let status = Command::new(env!("CARGO_BIN_EXE_qdo"))
        .args(args)
        .arg("--json")
        .arg(&json)
        .arg("--svg")
        .arg(&svg)
        .env_remove("QDO_SEED")
        .output()
        .map_err(|e| e.to_string())?;
    if !status.status.success() {
        return Err(format!("qdo {args:?} failed: {}", String::from_utf8_lossy(&status.stderr)));
    }
    let read = |p: &Path| std::fs::read(p).map_err(|e| e.to_string());
    Ok((read(&json)?, read(&svg)?))
}

fn determinism() -> Outcome {
    let invocations: [&[&str]; 3] = [
        &["simpson3", "--backend", "sampled", "--seed", "7"],
        &["healthcare10", "--backend", "sampled", "--trials", "3", "--seed", "7"],
        &["simpson3", "--backend", "sampled", "--trials", "3", "--shots", "1024", "--noise", "0.02", "--seed", "7"],
    ];
    let mut compared = 0;
    for args in invocations {
        let a = tempfile::tempdir().map_err(|e| e.to_string())?;
        let b = tempfile::tempdir().map_err(|e| e.to_string())?;
        let first = run_qdo(args, a.path())?;
        let second = run_qdo(args, b.path())?;
        if first != second {
            return Err(format!("outputs differ for qdo {}", args.join(" ")));
        }
        compared += 1;
    }
    Ok(format!("{compared} invocations, JSON and SVG byte-identical across two runs"))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("exact effects of the 3-variable model", exact_simpson),
        ("sampled effects of the 3-variable model", sampled_simpson),
        ("sign reversal", sign_reversal),
        ("exact effects and bias of the healthcare model", exact_healthcare),
        ("oracle-engine equivalence", oracle_equivalence),
        ("surgery commutation", surgery_commutation),
        ("root intervention equals conditioning", root_intervention),
        ("noise signature", noise_signature),
        ("deterministic CLI output", determinism),
    ];
    let mut failures = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS {} {name}: {detail}", k + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL {} {name}: {detail}", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
