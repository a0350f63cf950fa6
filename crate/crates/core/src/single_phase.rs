//! Single-phase full-bridge design.
//!
//! The decision variables form a row-stochastic matrix `Z` (N × m): row `n`
//! weighs the switch levels available at instant `n`, and the relaxed
//! switching signal is `x = Z·S`. Minimising
//!
//! ```text
//! (1/N) Σ_n (1 + λ sin²θ_n) · Σ_j Z[n,j]·|S[j]|
//! ```
//!
//! trades the energy of the grid current (first term) against the energy of
//! the output voltage (second term). The DC output and any bound voltage
//! harmonics enter as linear equalities on `sinθ ⊙ x`, current harmonics as
//! equalities on `x` itself.

use serde::{Deserialize, Serialize};

use crate::discretization::{build_fourier_row, single_phase_template, LevelVector, TimeGrid, VoltageTemplate};
use crate::error::{Error, Result};
use crate::lp::{solve_lp, LinearProgram, LpStatus, Tolerances};
use crate::problem::{validate_common, Design, HarmonicBinding};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinglePhaseSpec {
    pub n: usize,
    pub free_wheel: bool,
    /// Mean output voltage relative to a unit-amplitude supply.
    pub dc_target: f64,
    /// Replaces the DC equality with `lo ≤ DC ≤ hi` when set.
    pub dc_interval: Option<(f64, f64)>,
    pub lambda: f64,
    pub current_zero_harmonics: Vec<usize>,
    pub voltage_bindings: Vec<HarmonicBinding>,
    /// Adds `Σ x = 0`. Off by default.
    #[serde(default)]
    pub current_zero_mean: bool,
    /// Supply samples; defaults to `sin θ_n`.
    #[serde(default)]
    pub template: Option<VoltageTemplate>,
}

impl SinglePhaseSpec {
    pub fn new(n: usize, dc_target: f64, lambda: f64) -> Self {
        Self {
            n,
            free_wheel: true,
            dc_target,
            dc_interval: None,
            lambda,
            current_zero_harmonics: Vec::new(),
            voltage_bindings: Vec::new(),
            current_zero_mean: false,
            template: None,
        }
    }

    pub fn eliminate_voltage_harmonics(mut self, ks: &[usize]) -> Self {
        self.voltage_bindings.extend(ks.iter().map(|&k| HarmonicBinding::zero(k)));
        self
    }

    pub fn levels(&self) -> LevelVector {
        LevelVector::new(self.free_wheel)
    }

    pub fn supply(&self, grid: &TimeGrid) -> VoltageTemplate {
        self.template.clone().unwrap_or_else(|| single_phase_template(grid))
    }

    pub fn validate(&self, grid: &TimeGrid) -> Result<()> {
        validate_common(
            grid,
            self.n,
            self.dc_target,
            self.dc_interval,
            self.lambda,
            &self.current_zero_harmonics,
            &self.voltage_bindings,
        )?;
        if let Some(t) = &self.template {
            t.expect_len(self.n).map_err(|e| Error::SpecInvalid(format!("supply template: {e}")))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxedSchemeSingle {
    pub levels: LevelVector,
    /// `z[n][j]`, one row per instant.
    pub z: Vec<Vec<f64>>,
    /// `x = Z·S`.
    pub x: Vec<f64>,
    pub objective: f64,
}

impl RelaxedSchemeSingle {
    pub fn from_z(levels: LevelVector, z: Vec<Vec<f64>>, objective: f64) -> Self {
        let s = levels.s();
        let x = z.iter().map(|row| row.iter().zip(&s).map(|(w, l)| w * l).sum()).collect();
        Self { levels, z, x, objective }
    }
}

pub fn build_single_phase_lp(spec: &SinglePhaseSpec, grid: &TimeGrid) -> Result<LinearProgram> {
    spec.validate(grid)?;
    let n = spec.n;
    let levels = spec.levels();
    let (s, sp, m) = (levels.s(), levels.s_p(), levels.m());
    let nv = n * m;
    let var = |t: usize, j: usize| t * m + j;
    let supply = spec.supply(grid);
    let inv_n = 1.0 / n as f64;

    let mut cost = vec![0.0; nv];
    for t in 0..n {
        let w = inv_n * (1.0 + spec.lambda * supply.samples_sq()[t]);
        for j in 0..m {
            cost[var(t, j)] = w * sp[j];
        }
    }
    let mut lp = LinearProgram::new(cost);

    // Applies a per-instant weight to x = Σ_j S[j] z_{t,j}.
    let on_x = |weights: &dyn Fn(usize) -> f64| -> Vec<f64> {
        let mut row = vec![0.0; nv];
        for t in 0..n {
            let w = weights(t);
            for j in 0..m {
                row[var(t, j)] = w * s[j];
            }
        }
        row
    };

    for t in 0..n {
        let mut row = vec![0.0; nv];
        row[var(t, 0)..var(t, 0) + m].fill(1.0);
        lp.add_eq(row, 1.0);
    }

    for &k in &spec.current_zero_harmonics {
        let fr = build_fourier_row(grid, k)?;
        lp.add_eq(on_x(&|t| fr.cos_row[t]), 0.0);
        if k != 0 {
            lp.add_eq(on_x(&|t| fr.sin_row[t]), 0.0);
        }
    }
    if spec.current_zero_mean && !spec.current_zero_harmonics.contains(&0) {
        lp.add_eq(on_x(&|_| 1.0), 0.0);
    }

    let dc_row = on_x(&|t| inv_n * supply.samples()[t]);
    match spec.dc_interval {
        None => lp.add_eq(dc_row, spec.dc_target),
        Some((lo, hi)) => {
            lp.add_ge(dc_row.clone(), lo);
            lp.add_le(dc_row, hi);
        }
    }

    for b in &spec.voltage_bindings {
        let fr = build_fourier_row(grid, b.k)?;
        lp.add_eq(on_x(&|t| fr.cos_row[t] * supply.samples()[t]), b.re);
        lp.add_eq(on_x(&|t| fr.sin_row[t] * supply.samples()[t]), b.im);
    }
    Ok(lp)
}

pub fn solve_single_phase(
    spec: &SinglePhaseSpec,
    grid: &TimeGrid,
    tol: &Tolerances,
) -> Result<Design<RelaxedSchemeSingle>> {
    let lp = build_single_phase_lp(spec, grid)?;
    let sol = solve_lp(&lp, tol)?;
    match sol.status {
        LpStatus::Infeasible => Ok(Design::Infeasible),
        LpStatus::Unbounded => Err(Error::NumericalFailure("single-phase relaxation reported unbounded".into())),
        LpStatus::Optimal => {
            let x = sol.x.expect("optimal solutions carry a point");
            let m = spec.levels().m();
            let z = x.chunks(m).map(<[f64]>::to_vec).collect();
            Ok(Design::Optimal(RelaxedSchemeSingle::from_z(
                spec.levels(),
                z,
                sol.objective.expect("optimal solutions carry an objective"),
            )))
        }
    }
}

/// Load voltage `v[n] = supply[n]·x[n]`.
pub fn output_voltage_single(x: &[f64], template: &VoltageTemplate) -> Result<Vec<f64>> {
    template.expect_len(x.len())?;
    Ok(x.iter().zip(template.samples()).map(|(a, b)| a * b).collect())
}

/// Grid current `i[n] = load_current·x[n]` for a constant load current.
pub fn input_current_single(x: &[f64], load_current: f64) -> Result<Vec<f64>> {
    if !(load_current.is_finite() && load_current > 0.0) {
        return Err(Error::NonpositiveLoad(load_current));
    }
    Ok(x.iter().map(|v| load_current * v).collect())
}
