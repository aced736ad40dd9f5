//! Machine-readable experiment reports and their text/CSV renderings.

use std::fmt::Write as _;

use qdo_core::EffectReport;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumRow {
    pub assignment: String,
    pub weight: f64,
    pub effect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Group {
    pub label: String,
    pub effect: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_trial: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strata: Option<Vec<StratumRow>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias: Option<f64>,
    #[serde(skip)]
    pub n_trials: usize,
}

impl Group {
    pub fn from_effect(report: &EffectReport, sampled: bool) -> Self {
        let ci = match (report.ci_low, report.ci_high) {
            (Some(lo), Some(hi)) => Some([lo, hi]),
            _ => None,
        };
        Group {
            label: report.label.clone(),
            effect: report.effect,
            ci,
            per_trial: sampled.then(|| report.per_trial.clone()),
            strata: report.strata.as_ref().map(|strata| {
                strata
                    .iter()
                    .map(|s| StratumRow {
                        assignment: format!("{}={}", s.variable, s.value),
                        weight: s.weight,
                        effect: s.effect,
                    })
                    .collect()
            }),
            bias: None,
            n_trials: report.n_trials,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub model: String,
    pub backend: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<f64>,
    pub groups: Vec<Group>,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serialization is infallible");
        text.push('\n');
        text
    }

    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(["label", "effect", "ci_low", "ci_high", "n_trials"])?;
        for g in &self.groups {
            let (lo, hi) = g
                .ci
                .map_or((String::new(), String::new()), |[lo, hi]| (fmt6(lo), fmt6(hi)));
            let n_trials = if g.n_trials > 0 {
                g.n_trials
            } else {
                g.per_trial.as_ref().map_or(1, Vec::len)
            };
            writer.write_record([g.label.clone(), fmt6(g.effect), lo, hi, n_trials.to_string()])?;
        }
        let bytes = writer.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Fixed-width table for the terminal.
    pub fn to_table(&self) -> String {
        let has_bias = self.groups.iter().any(|g| g.bias.is_some());
        let width = self
            .groups
            .iter()
            .map(|g| g.label.chars().count())
            .max()
            .unwrap_or(0)
            .max("Analysis Group".len());

        let mut out = String::new();
        let _ = write!(out, "model: {}  backend: {}", self.model, self.backend);
        if let (Some(shots), Some(trials)) = (self.shots, self.trials) {
            let _ = write!(out, "  shots: {shots}  trials: {trials}");
        }
        if let Some(seed) = self.seed {
            let _ = write!(out, "  seed: {seed}");
        }
        if let Some(p) = self.noise {
            let _ = write!(out, "  noise: {p}");
        }
        out.push('\n');
        let _ = write!(out, "{:<width$}  {:>10}  {:<20}", "Analysis Group", "Effect", "95% CI");
        if has_bias {
            let _ = write!(out, "  {:>7}", "Bias");
        }
        out.push('\n');
        for g in &self.groups {
            let ci = g
                .ci
                .map_or_else(|| "-".to_string(), |[lo, hi]| format!("[{lo:+.3}, {hi:+.3}]"));
            let _ = write!(out, "{:<width$}  {:>+10.3}  {:<20}", g.label, g.effect, ci);
            if let Some(bias) = g.bias {
                let _ = write!(out, "  {bias:>+7.3}");
            }
            out.push('\n');
            for s in g.strata.iter().flatten() {
                let _ = writeln!(
                    out,
                    "{:<width$}    {} weight {:.3} effect {:+.3}",
                    "",
                    s.assignment,
                    s.weight,
                    s.effect
                );
            }
        }
        out
    }
}

pub fn fmt6(x: f64) -> String {
    format!("{x:.6}")
}
