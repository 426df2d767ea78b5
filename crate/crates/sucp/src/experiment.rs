//! Experiment grids: re-run the pipeline along one axis (social mixing
//! weight, training sparsity, or friendship-overlap threshold) with every
//! other setting fixed.

use std::fmt::Write as _;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::eval::MetricsReport;
use crate::pipeline;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Beta,
    TrainFraction,
    OverlapThreshold,
}

impl Axis {
    pub fn as_str(&self) -> &'static str {
        match self {
            Axis::Beta => "beta",
            Axis::TrainFraction => "train_fraction",
            Axis::OverlapThreshold => "overlap_threshold",
        }
    }

    /// Grid used when the caller does not name explicit values.
    pub fn default_values(&self) -> Vec<f64> {
        match self {
            Axis::Beta | Axis::OverlapThreshold => (0..=10).map(|i| i as f64 / 10.0).collect(),
            Axis::TrainFraction => vec![0.4, 0.6, 0.8],
        }
    }

    fn apply(&self, cfg: &mut RunConfig, value: f64) {
        match self {
            Axis::Beta => cfg.beta = value,
            Axis::TrainFraction => cfg.train_fraction = value,
            Axis::OverlapThreshold => cfg.overlap_threshold = value,
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "beta" => Ok(Axis::Beta),
            "train_fraction" | "train-fraction" => Ok(Axis::TrainFraction),
            "overlap_threshold" | "overlap-threshold" => Ok(Axis::OverlapThreshold),
            other => Err(format!(
                "unknown axis {other:?} (expected beta, train_fraction, or overlap_threshold)"
            )),
        }
    }
}

#[derive(Debug)]
pub struct ExperimentCell {
    pub value: f64,
    pub report: std::result::Result<MetricsReport, String>,
}

#[derive(Debug)]
pub struct ExperimentGrid {
    pub axis: Axis,
    pub cells: Vec<ExperimentCell>,
}

impl ExperimentGrid {
    /// Machine-readable rows: axis, value, metric, N, mean, users, hash.
    pub fn lines(&self) -> String {
        let mut out = String::new();
        for cell in &self.cells {
            match &cell.report {
                Ok(report) => {
                    for &n in &report.ns {
                        for (metric, v) in [
                            ("precision", report.mean_precision(n)),
                            ("recall", report.mean_recall(n)),
                            ("ndcg", report.mean_ndcg(n)),
                        ] {
                            let _ = writeln!(
                                out,
                                "{}\t{}\t{metric}\t{n}\t{v:.8}\t{}\t{}",
                                self.axis.as_str(),
                                cell.value,
                                report.users.len(),
                                report.config_fingerprint
                            );
                        }
                    }
                }
                Err(e) => {
                    let _ = writeln!(out, "{}\t{}\terror\t-\t-\t-\t{e}", self.axis.as_str(), cell.value);
                }
            }
        }
        out
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        for cell in &self.cells {
            let _ = writeln!(out, "--- {} = {}", self.axis.as_str(), cell.value);
            match &cell.report {
                Ok(report) => out.push_str(&report.table()),
                Err(e) => {
                    let _ = writeln!(out, "failed: {e}");
                }
            }
        }
        out
    }
}

/// Runs one pipeline cell per axis value, holding everything else at the
/// base configuration. Per-cell failures are recorded and the grid
/// continues; seeds stay fixed across cells.
pub fn run_experiment(base: &RunConfig, axis: Axis, values: &[f64]) -> Result<ExperimentGrid> {
    if values.is_empty() {
        return Err(Error::Config("experiment needs at least one axis value".into()));
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("axis values must be strictly increasing".into()));
    }
    let mut cells = Vec::with_capacity(values.len());
    for &value in values {
        let mut cfg = base.clone();
        axis.apply(&mut cfg, value);
        let report = run_cell(&cfg);
        if let Err(e) = &report {
            log::warn!("cell {} = {value} failed: {e}", axis.as_str());
        }
        cells.push(ExperimentCell {
            value,
            report: report.map_err(|e| e.to_string()),
        });
    }
    Ok(ExperimentGrid { axis, cells })
}

fn run_cell(cfg: &RunConfig) -> Result<MetricsReport> {
    cfg.validate()?;
    let prepared = pipeline::prepare(cfg)?;
    let bundle = pipeline::train(cfg, &prepared)?;
    pipeline::evaluate_variant(cfg, &prepared, &bundle, cfg.variant)
}
