//! Three-phase full-bridge design.
//!
//! At each instant the bridge either free-wheels or connects one pair of
//! phases across the load, in one of two directions. Three stochastic
//! matrices `Z12`, `Z23`, `Z31` share the per-instant unit mass, so at most
//! one pair conducts once the scheme is quantised. With the pair `ij` at
//! level `+1` the load current enters through phase `i` and returns through
//! phase `j`, which gives the signed incidence
//!
//! ```text
//!        x1   x2   x3
//! Z12    +1   -1    0
//! Z23     0   +1   -1
//! Z31    -1    0   +1
//! ```
//!
//! and makes the phase currents sum to zero at every instant.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::discretization::{build_fourier_row, LevelVector, LineTemplates, TimeGrid};
use crate::error::{Error, Result};
use crate::lp::{solve_lp, LinearProgram, LpStatus, Tolerances};
use crate::problem::{validate_common, Design, HarmonicBinding};

/// How the pair matrices combine into phase currents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurrentSign {
    /// Current leaves through the second phase of the pair; Kirchhoff holds.
    #[default]
    Signed,
    /// Every pair adds its level to both of its phases, with no sign flip.
    /// Kept only to compare against that reading; the currents no longer sum
    /// to zero.
    Literal,
}

/// Which phase currents the current-harmonic rows apply to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HarmonicScope {
    #[default]
    PerPhase,
    FirstPhase,
}

/// `incidence(sign)[pair][phase]`, pairs ordered 12, 23, 31.
pub fn incidence(sign: CurrentSign) -> [[f64; 3]; 3] {
    match sign {
        CurrentSign::Signed => [[1.0, -1.0, 0.0], [0.0, 1.0, -1.0], [-1.0, 0.0, 1.0]],
        CurrentSign::Literal => [[1.0, 1.0, 0.0], [0.0, 1.0, 1.0], [1.0, 0.0, 1.0]],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreePhaseSpec {
    pub n: usize,
    pub free_wheel: bool,
    pub dc_target: f64,
    pub dc_interval: Option<(f64, f64)>,
    pub lambda: f64,
    pub current_zero_harmonics: Vec<usize>,
    pub voltage_bindings: Vec<HarmonicBinding>,
    #[serde(default)]
    pub current_sign: CurrentSign,
    #[serde(default)]
    pub harmonic_scope: HarmonicScope,
    /// Line-voltage templates; balanced unit sinusoids when absent.
    #[serde(default)]
    pub templates: Option<LineTemplates>,
}

impl ThreePhaseSpec {
    pub fn new(n: usize, dc_target: f64, lambda: f64) -> Self {
        Self {
            n,
            free_wheel: true,
            dc_target,
            dc_interval: None,
            lambda,
            current_zero_harmonics: Vec::new(),
            voltage_bindings: Vec::new(),
            current_sign: CurrentSign::Signed,
            harmonic_scope: HarmonicScope::PerPhase,
            templates: None,
        }
    }

    pub fn eliminate_voltage_harmonics(mut self, ks: &[usize]) -> Self {
        self.voltage_bindings.extend(ks.iter().map(|&k| HarmonicBinding::zero(k)));
        self
    }

    pub fn levels(&self) -> LevelVector {
        LevelVector::new(self.free_wheel)
    }

    pub fn line_templates(&self, grid: &TimeGrid) -> LineTemplates {
        self.templates.clone().unwrap_or_else(|| LineTemplates::balanced(grid))
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
        if let Some(t) = &self.templates {
            t.expect_len(self.n).map_err(|e| Error::SpecInvalid(format!("line templates: {e}")))?;
        }
        Ok(())
    }

    /// Non-fatal remarks about the spec.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if !self.n.is_multiple_of(3) {
            w.push(format!("N={} is not divisible by 3; the grid cannot represent the 120° phase symmetry", self.n));
        }
        w
    }

    fn current_phases(&self) -> &'static [usize] {
        match self.harmonic_scope {
            HarmonicScope::PerPhase => &[0, 1, 2],
            HarmonicScope::FirstPhase => &[0],
        }
    }
}

/// Conduction state of the bridge at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LegState {
    Free,
    P12Pos,
    P12Neg,
    P23Pos,
    P23Neg,
    P31Pos,
    P31Neg,
}

impl LegState {
    /// All states in tie-breaking order.
    pub const ALL: [LegState; 7] = [
        LegState::Free,
        LegState::P12Pos,
        LegState::P12Neg,
        LegState::P23Pos,
        LegState::P23Neg,
        LegState::P31Pos,
        LegState::P31Neg,
    ];

    /// States available for a level set.
    pub fn available(levels: LevelVector) -> &'static [LegState] {
        if levels.has_free_wheel() {
            &Self::ALL
        } else {
            &Self::ALL[1..]
        }
    }

    /// Pair index (12, 23, 31 → 0, 1, 2) and level, or `None` when free.
    pub fn pair_level(self) -> Option<(usize, i8)> {
        match self {
            LegState::Free => None,
            LegState::P12Pos => Some((0, 1)),
            LegState::P12Neg => Some((0, -1)),
            LegState::P23Pos => Some((1, 1)),
            LegState::P23Neg => Some((1, -1)),
            LegState::P31Pos => Some((2, 1)),
            LegState::P31Neg => Some((2, -1)),
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            LegState::Free => "FREE",
            LegState::P12Pos => "P12+",
            LegState::P12Neg => "P12-",
            LegState::P23Pos => "P23+",
            LegState::P23Neg => "P23-",
            LegState::P31Pos => "P31+",
            LegState::P31Neg => "P31-",
        }
    }
}

impl fmt::Display for LegState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for LegState {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        LegState::ALL.iter().copied().find(|st| st.token() == s).ok_or_else(|| format!("unknown leg state `{s}`"))
    }
}

/// The three pair matrices `Z12`, `Z23`, `Z31`, each N × m.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMatrices {
    pub levels: LevelVector,
    pub z: [Vec<Vec<f64>>; 3],
}

impl PairMatrices {
    pub fn n(&self) -> usize {
        self.z[0].len()
    }

    /// One-hot encoding of a quantised scheme.
    pub fn one_hot(states: &[LegState], levels: LevelVector) -> Result<Self> {
        let m = levels.m();
        let mut z: [Vec<Vec<f64>>; 3] = std::array::from_fn(|_| vec![vec![0.0; m]; states.len()]);
        for (t, st) in states.iter().enumerate() {
            let (pair, level) = st.pair_level().unwrap_or((0, 0));
            let j = levels
                .index_of(level)
                .ok_or_else(|| Error::SpecInvalid(format!("state {st} at index {t} needs a free-wheel level")))?;
            z[pair][t][j] = 1.0;
        }
        Ok(Self { levels, z })
    }

    /// `Z_p[t,:]·S` for every pair.
    pub fn pair_signals(&self) -> [Vec<f64>; 3] {
        let s = self.levels.s();
        std::array::from_fn(|p| self.z[p].iter().map(|row| row.iter().zip(&s).map(|(w, l)| w * l).sum()).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxedSchemeThree {
    pub z: PairMatrices,
    /// Phase currents for a unit load current.
    pub x: [Vec<f64>; 3],
    pub v_out: Vec<f64>,
    pub objective: f64,
}

pub fn build_three_phase_lp(spec: &ThreePhaseSpec, grid: &TimeGrid) -> Result<LinearProgram> {
    spec.validate(grid)?;
    let n = spec.n;
    let levels = spec.levels();
    let (s, sp, m) = (levels.s(), levels.s_p(), levels.m());
    let nv = 3 * n * m;
    let var = |p: usize, t: usize, j: usize| (p * n + t) * m + j;
    let lt = spec.line_templates(grid);
    let tpl = lt.as_array();
    let inc = incidence(spec.current_sign);
    let inv_n = 1.0 / n as f64;

    let mut cost = vec![0.0; nv];
    for p in 0..3 {
        for t in 0..n {
            let w = inv_n + 0.5 * spec.lambda * inv_n * tpl[p].samples_sq()[t];
            for j in 0..m {
                cost[var(p, t, j)] = w * sp[j];
            }
        }
    }
    let mut lp = LinearProgram::new(cost);

    // Row over all pair signals with per-(pair, instant) weight.
    let on_pairs = |weights: &dyn Fn(usize, usize) -> f64| -> Vec<f64> {
        let mut row = vec![0.0; nv];
        for p in 0..3 {
            for t in 0..n {
                let w = weights(p, t);
                if w != 0.0 {
                    for j in 0..m {
                        row[var(p, t, j)] = w * s[j];
                    }
                }
            }
        }
        row
    };

    for t in 0..n {
        let mut row = vec![0.0; nv];
        for p in 0..3 {
            row[var(p, t, 0)..var(p, t, 0) + m].fill(1.0);
        }
        lp.add_eq(row, 1.0);
    }

    for phase in [0, 1, 2] {
        lp.add_eq(on_pairs(&|p, _| inc[p][phase]), 0.0);
    }

    for &k in &spec.current_zero_harmonics {
        let fr = build_fourier_row(grid, k)?;
        for &phase in spec.current_phases() {
            lp.add_eq(on_pairs(&|p, t| inc[p][phase] * fr.cos_row[t]), 0.0);
            if k != 0 {
                lp.add_eq(on_pairs(&|p, t| inc[p][phase] * fr.sin_row[t]), 0.0);
            }
        }
    }

    let dc_row = on_pairs(&|p, t| inv_n * tpl[p].samples()[t]);
    match spec.dc_interval {
        None => lp.add_eq(dc_row, spec.dc_target),
        Some((lo, hi)) => {
            lp.add_ge(dc_row.clone(), lo);
            lp.add_le(dc_row, hi);
        }
    }

    for b in &spec.voltage_bindings {
        let fr = build_fourier_row(grid, b.k)?;
        lp.add_eq(on_pairs(&|p, t| fr.cos_row[t] * tpl[p].samples()[t]), b.re);
        lp.add_eq(on_pairs(&|p, t| fr.sin_row[t] * tpl[p].samples()[t]), b.im);
    }
    Ok(lp)
}

pub fn solve_three_phase(
    spec: &ThreePhaseSpec,
    grid: &TimeGrid,
    tol: &Tolerances,
) -> Result<Design<RelaxedSchemeThree>> {
    let lp = build_three_phase_lp(spec, grid)?;
    let sol = solve_lp(&lp, tol)?;
    match sol.status {
        LpStatus::Infeasible => Ok(Design::Infeasible),
        LpStatus::Unbounded => Err(Error::NumericalFailure("three-phase relaxation reported unbounded".into())),
        LpStatus::Optimal => {
            let x = sol.x.expect("optimal solutions carry a point");
            let levels = spec.levels();
            let m = levels.m();
            let n = spec.n;
            let z: [Vec<Vec<f64>>; 3] =
                std::array::from_fn(|p| x[p * n * m..(p + 1) * n * m].chunks(m).map(<[f64]>::to_vec).collect());
            let z = PairMatrices { levels, z };
            let currents = phase_currents(&z, 1.0, spec.current_sign)?;
            let v_out = output_voltage_three(&z, &spec.line_templates(grid))?;
            Ok(Design::Optimal(RelaxedSchemeThree {
                z,
                x: currents,
                v_out,
                objective: sol.objective.expect("optimal solutions carry an objective"),
            }))
        }
    }
}

/// `v[t] = Σ_pairs S^{pair}[t] · (Z_pair[t,:]·S)`.
pub fn output_voltage_three(z: &PairMatrices, templates: &LineTemplates) -> Result<Vec<f64>> {
    templates.expect_len(z.n())?;
    let sig = z.pair_signals();
    let tpl = templates.as_array();
    Ok((0..z.n()).map(|t| (0..3).map(|p| tpl[p].samples()[t] * sig[p][t]).sum()).collect())
}

/// Phase currents `i_phase = load · Σ_pairs incidence[pair][phase]·(Z_pair·S)`.
pub fn phase_currents(z: &PairMatrices, load_current: f64, sign: CurrentSign) -> Result<[Vec<f64>; 3]> {
    if !(load_current.is_finite() && load_current > 0.0) {
        return Err(Error::NonpositiveLoad(load_current));
    }
    let sig = z.pair_signals();
    let inc = incidence(sign);
    Ok(std::array::from_fn(|phase| {
        (0..z.n()).map(|t| load_current * (0..3).map(|p| inc[p][phase] * sig[p][t]).sum::<f64>()).collect()
    }))
}
