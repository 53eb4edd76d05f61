use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde_json::{json, Value};

use mxsetup::measures::PerformanceReport as Report;
use mxsetup::validation::{validate_against_oracle, ValidationOptions};
use mxsetup::{oracle, MomentTable, SolvedModel};

use crate::config::{BatchConfig, ModelConfig, SetupConfig};
use crate::error::CliError;

pub fn solve(cfg: &ModelConfig, moments: Option<usize>) -> Result<String, CliError> {
    let params = cfg.to_params()?;
    let solved = SolvedModel::solve(&params)?;
    let report = Report::compute(&solved)?;
    let mut value = serde_json::to_value(&report).map_err(|e| CliError::Io(e.to_string()))?;
    if let (Some(n), Value::Object(map)) = (moments, &mut value) {
        let table = MomentTable::compute(&solved, n);
        map.insert("moments".into(), json!(table.rows()));
    }
    Ok(pretty(&value))
}

pub fn validate(cfg: &ModelConfig, j_max: Option<usize>, tol: f64, perturb_root: Option<f64>) -> Result<String, CliError> {
    let params = cfg.to_params()?;
    let opts = ValidationOptions { j_max, tol, perturb_root };
    let report = validate_against_oracle(&params, &opts)?;
    for check in &report.checks {
        log::info!("{}: gap {:e} ({})", check.name, check.gap, if check.passed { "ok" } else { "FAIL" });
    }
    if let Some(failed) = report.first_failure() {
        return Err(CliError::Validation {
            check: failed.name.to_string(),
            gap: failed.gap,
            tol,
        });
    }
    let value = serde_json::to_value(&report).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(pretty(&value))
}

fn pretty(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    s.push('\n');
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepParam {
    Rho,
    Alpha,
    #[value(name = "batch_size")]
    BatchSize,
    Delta,
}

impl SweepParam {
    fn name(self) -> &'static str {
        match self {
            SweepParam::Rho => "rho",
            SweepParam::Alpha => "alpha",
            SweepParam::BatchSize => "batch_size",
            SweepParam::Delta => "delta",
        }
    }
}

/// Comma-separated grid; blank entries are ignored, so an empty string is an empty grid.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| CliError::Config(format!("invalid grid value '{s}'")))
        })
        .collect()
}

/// Template with one parameter replaced.
///
/// `rho` moves λ with everything else fixed; `batch_size` switches to a deterministic batch
/// of that size and rescales λ to keep the template's load; `alpha` sets the base setup
/// rate (for custom rates the whole vector is scaled by it).
fn apply(cfg: &ModelConfig, param: SweepParam, v: f64) -> mxsetup::Result<ModelConfig> {
    let mut out = cfg.clone();
    match param {
        SweepParam::Rho => {
            out.lambda = v * cfg.c as f64 * cfg.mu / cfg.batch()?.mean();
        }
        SweepParam::Alpha => match &mut out.setup {
            SetupConfig::Staggered { alpha } | SetupConfig::Vacation { alpha } => *alpha = v,
            SetupConfig::Custom { alphas } => alphas.iter_mut().for_each(|a| *a *= v),
        },
        SweepParam::BatchSize => {
            if !(v >= 1.0 && v.fract() == 0.0) {
                return Err(mxsetup::Error::BadBatch(format!("batch size {v} is not a positive integer")));
            }
            let rho = cfg.lambda * cfg.batch()?.mean() / (cfg.c as f64 * cfg.mu);
            out.batch = BatchConfig::Deterministic { size: v as usize };
            out.lambda = rho * cfg.c as f64 * cfg.mu / v;
        }
        SweepParam::Delta => out.costs.delta = v,
    }
    Ok(out)
}

struct SweepRow {
    p_on_off: f64,
    p_on_idle: f64,
    e_q: f64,
    c_on_off: f64,
    c_on_idle: f64,
}

fn sweep_point(cfg: &ModelConfig, param: SweepParam, v: f64) -> mxsetup::Result<SweepRow> {
    let params = apply(cfg, param, v)?.to_params()?;
    let solved = SolvedModel::solve(&params)?;
    let onidle = oracle::solve_onidle_converged(&params)?;
    let report = Report::from_parts(&solved, oracle::onidle_mean_queue(params.c(), &onidle), None);
    Ok(SweepRow {
        p_on_off: report.p_on_off,
        p_on_idle: report.p_on_idle,
        e_q: report.e_q,
        c_on_off: report.c_on_off,
        c_on_idle: report.c_on_idle,
    })
}

/// CSV with one row per grid point, in grid order. Failed points keep their row with empty
/// measures and a `skipped: <reason>` status.
pub fn sweep(cfg: &ModelConfig, param: SweepParam, grid: &[f64]) -> String {
    let rows: Vec<_> = grid.par_iter().map(|&v| (v, sweep_point(cfg, param, v))).collect();
    let mut out = format!("{},P_on_off,P_on_idle,E_Q,C_on_off,C_on_idle,status\n", param.name());
    for (v, row) in rows {
        match row {
            Ok(r) => {
                let cells = [v, r.p_on_off, r.p_on_idle, r.e_q, r.c_on_off, r.c_on_idle].map(fmt_sig);
                let _ = writeln!(out, "{},ok", cells.join(","));
            }
            Err(e) => {
                let _ = writeln!(out, "{},,,,,,{}", fmt_sig(v), csv_field(&format!("skipped: {e}")));
            }
        }
    }
    out
}

/// Rounds to 12 significant digits and prints the shortest form of the rounded value.
pub fn fmt_sig(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let rounded: f64 = format!("{v:.11e}").parse().expect("formatted float parses");
    let a = rounded.abs();
    if a != 0.0 && !(1e-4..1e15).contains(&a) {
        format!("{rounded:e}")
    } else {
        format!("{rounded}")
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
