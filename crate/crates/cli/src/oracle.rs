//! The `oracle` command: exhaustive search next to the LP relaxation.

use std::path::PathBuf;

use rectiplan_core::{
    build_grid, enumerate_single, enumerate_three, solve_single_phase, solve_three_phase, Design, OracleResult,
    RectifierSpec, Tolerances,
};
use serde::Serialize;

use crate::config::LoadedConfig;
use crate::error::Result;
use crate::output::{self, ORACLE_JSON};

/// Slack allowed when comparing the LP optimum to the best scheme cost.
pub const DOMINANCE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub phase: &'static str,
    pub n: usize,
    pub tolerance: f64,
    pub num_enumerated: u64,
    pub num_feasible: u64,
    pub best_cost: Option<f64>,
    pub best_scheme: Option<Vec<String>>,
    /// `optimal` or `infeasible`.
    pub lp_status: &'static str,
    pub lp_optimum: Option<f64>,
    /// LP optimum ≤ best cost, and the LP is feasible whenever a scheme is.
    /// Vacuously true when no scheme is feasible.
    pub dominance: bool,
}

#[derive(Debug, Clone)]
pub struct OracleRun {
    pub report: OracleReport,
    pub output_dir: PathBuf,
}

pub fn run_oracle(cfg: &LoadedConfig, tolerance: f64) -> Result<OracleRun> {
    let c = &cfg.config;
    let grid = build_grid(c.n, c.f0_hz)?;
    let spec = cfg.spec(&grid)?;
    let tol = Tolerances::default();
    let (phase, found, lp): (_, OracleResult, Option<f64>) = match &spec {
        RectifierSpec::Single(s) => {
            let found = enumerate_single(s, &grid, tolerance)?;
            let lp = match solve_single_phase(s, &grid, &tol)? {
                Design::Optimal(r) => Some(r.objective),
                Design::Infeasible => None,
            };
            ("single", found, lp)
        }
        RectifierSpec::Three(s) => {
            let found = enumerate_three(s, &grid, tolerance)?;
            let lp = match solve_three_phase(s, &grid, &tol)? {
                Design::Optimal(r) => Some(r.objective),
                Design::Infeasible => None,
            };
            ("three", found, lp)
        }
    };
    let dominance = match (found.best_cost, lp) {
        (None, _) => true,
        (Some(best), Some(lp)) => lp <= best + DOMINANCE_SLACK,
        (Some(_), None) => false,
    };
    let report = OracleReport {
        phase,
        n: c.n,
        tolerance,
        num_enumerated: found.num_enumerated,
        num_feasible: found.num_feasible,
        best_cost: found.best_cost,
        best_scheme: found.best_scheme.map(|q| q.tokens()),
        lp_status: if lp.is_some() { "optimal" } else { "infeasible" },
        lp_optimum: lp,
        dominance,
    };
    let output_dir = cfg.output_dir();
    output::ensure_dir(&output_dir)?;
    output::write_json(&output_dir.join(ORACLE_JSON), &report)?;
    Ok(OracleRun { report, output_dir })
}
