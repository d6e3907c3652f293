use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::evaluate::{evaluate, EvaluationReport, ReportRow};
use crate::{seed, Error, Result};

pub const REPORT_HEADER: [&str; 11] = [
    "experiment",
    "circuit",
    "algorithm",
    "features",
    "signals",
    "windowed",
    "centroid_select",
    "accuracy_pct",
    "detect_rate",
    "mean_speedup",
    "seed",
];

/// A list of experiments sharing a base seed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Suite {
    /// Entries without their own seed use a seed derived from this one and
    /// their position.
    #[serde(default)]
    pub seed: u64,
    #[serde(default, rename = "experiment")]
    pub experiments: Vec<ExperimentConfig>,
}

impl Suite {
    pub fn from_toml(text: &str) -> Result<Self> {
        let suite: Suite = toml::from_str(text)?;
        for (i, e) in suite.experiments.iter().enumerate() {
            e.validate().map_err(|err| match err {
                Error::Config { key, message } => {
                    Error::config(format!("experiment[{i}].{key}"), message)
                }
                other => other,
            })?;
        }
        Ok(suite)
    }

    /// Entries with their seeds resolved.
    pub fn resolved(&self) -> Vec<ExperimentConfig> {
        self.experiments
            .iter()
            .enumerate()
            .map(|(i, e)| ExperimentConfig {
                seed: Some(e.seed.unwrap_or_else(|| seed::derive_seed(self.seed, i as u64))),
                ..e.clone()
            })
            .collect()
    }
}

/// Outcome of one suite entry; failures are kept, not fatal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteEntry {
    pub config: ExperimentConfig,
    pub report: Option<EvaluationReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub entries: Vec<SuiteEntry>,
}

/// Runs every entry independently and in parallel; results keep suite order.
pub fn run_suite(suite: &Suite) -> SuiteReport {
    let entries = suite
        .resolved()
        .into_par_iter()
        .map(|config| match evaluate(&config) {
            Ok(report) => SuiteEntry {
                config,
                report: Some(report),
                error: None,
            },
            Err(e) => SuiteEntry {
                config,
                report: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    SuiteReport { entries }
}

impl SuiteReport {
    pub fn from_reports(reports: Vec<EvaluationReport>) -> Self {
        SuiteReport {
            entries: reports
                .into_iter()
                .map(|r| SuiteEntry {
                    config: r.config.clone(),
                    report: Some(r),
                    error: None,
                })
                .collect(),
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = &ReportRow> {
        self.entries
            .iter()
            .filter_map(|e| e.report.as_ref())
            .flat_map(|r| r.rows.iter())
    }

    pub fn failures(&self) -> impl Iterator<Item = &SuiteEntry> {
        self.entries.iter().filter(|e| e.error.is_some())
    }
}

fn windowed(k: Option<usize>) -> String {
    k.map_or_else(|| "none".to_string(), |k| k.to_string())
}

/// Combined CSV report. A failed entry contributes one row with empty
/// result columns.
pub fn write_report_csv<W: Write>(report: &SuiteReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_HEADER)?;
    for entry in &report.entries {
        match &entry.report {
            Some(r) => {
                for row in &r.rows {
                    w.write_record([
                        row.experiment.clone(),
                        row.circuit.clone(),
                        row.algorithm.clone(),
                        row.features.clone(),
                        row.signals.clone(),
                        windowed(row.window_k),
                        row.centroid_select.to_string(),
                        format!("{:.2}", row.accuracy_pct),
                        format!("{:.4}", row.detect_rate),
                        format!("{:.4}", row.mean_speedup),
                        row.seed.to_string(),
                    ])?;
                }
            }
            None => {
                let c = &entry.config;
                w.write_record([
                    c.experiment.to_string(),
                    c.circuit.as_str().to_string(),
                    c.algorithm.to_string(),
                    c.features.label(),
                    c.observed_signals()
                        .iter()
                        .map(|s| s.as_str())
                        .collect::<Vec<_>>()
                        .join("+"),
                    windowed(c.window_k),
                    c.centroid_select.to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    c.seed().to_string(),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io("<report>", e))?;
    Ok(())
}

/// Plain-text summary grouped by experiment family, with a centroid-selection
/// comparison and a list of failed entries.
pub fn render_table(report: &SuiteReport) -> String {
    let mut families: BTreeMap<&str, Vec<&ReportRow>> = BTreeMap::new();
    let mut order: Vec<&str> = Vec::new();
    for entry in &report.entries {
        if let Some(r) = &entry.report {
            let fam = entry.config.experiment.family();
            if !families.contains_key(fam) {
                order.push(fam);
            }
            families.entry(fam).or_default().extend(r.rows.iter());
        }
    }
    let mut out = String::new();
    for fam in order {
        let _ = writeln!(out, "== {fam} ==");
        let _ = writeln!(
            out,
            "{:<9} {:<16} {:<9} {:<14} {:<28} {:>5} {:>6} {:>8} {:>7} {:>8}",
            "exp", "circuit", "algo", "features", "signals", "win", "csel", "acc%", "detect", "speedup"
        );
        for row in &families[fam] {
            let _ = writeln!(
                out,
                "{:<9} {:<16} {:<9} {:<14} {:<28} {:>5} {:>6} {:>8.2} {:>7.3} {:>8.3}",
                row.experiment,
                row.circuit,
                row.algorithm,
                row.features,
                row.signals,
                windowed(row.window_k),
                if row.centroid_select { "yes" } else { "no" },
                row.accuracy_pct,
                row.detect_rate,
                row.mean_speedup
            );
        }
        out.push('\n');
    }

    let rows: Vec<&ReportRow> = report.rows().collect();
    let boosts: Vec<(&ReportRow, &ReportRow)> = rows
        .windows(2)
        .filter(|p| !p[0].centroid_select && p[1].centroid_select)
        .map(|p| (p[0], p[1]))
        .collect();
    if !boosts.is_empty() {
        let _ = writeln!(out, "== Centroid selection ==");
        let _ = writeln!(
            out,
            "{:<9} {:<9} {:<14} {:<28} {:>8} {:>8} {:>8}",
            "exp", "algo", "features", "signals", "base%", "csel%", "boost"
        );
        for (base, app) in boosts {
            let _ = writeln!(
                out,
                "{:<9} {:<9} {:<14} {:<28} {:>8.2} {:>8.2} {:>+8.2}",
                base.experiment,
                base.algorithm,
                base.features,
                base.signals,
                base.accuracy_pct,
                app.accuracy_pct,
                app.accuracy_pct - base.accuracy_pct
            );
        }
        out.push('\n');
    }

    let failures: Vec<&SuiteEntry> = report.failures().collect();
    if !failures.is_empty() {
        let _ = writeln!(out, "== Failed entries ==");
        for f in failures {
            let _ = writeln!(
                out,
                "{}: {}",
                f.config.name(),
                f.error.as_deref().unwrap_or_default()
            );
        }
    }
    out
}
