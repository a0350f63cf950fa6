//! Rounding of relaxed schemes to physical switch states, and exact
//! evaluation of the design constraints on the resulting waveforms.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::discretization::{LevelVector, TimeGrid};
use crate::error::{Error, Result};
use crate::problem::{amplitude_scale, HarmonicBinding, RectifierSpec};
use crate::single_phase::output_voltage_single;
use crate::three_phase::{output_voltage_three, phase_currents, CurrentSign, LegState, PairMatrices};

/// Masses below this are treated as empty when rounding three-phase rows.
const EMPTY_ROW: f64 = 1e-6;
const TIE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SchemeStates {
    /// Level per instant, drawn from the level vector.
    Single(Vec<i8>),
    Three(Vec<LegState>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizedScheme {
    pub levels: LevelVector,
    pub states: SchemeStates,
    pub spec_hash: Option<String>,
    pub relaxed_objective: Option<f64>,
}

impl QuantizedScheme {
    pub fn single(levels: LevelVector, states: Vec<i8>) -> Self {
        Self { levels, states: SchemeStates::Single(states), spec_hash: None, relaxed_objective: None }
    }

    pub fn three(levels: LevelVector, states: Vec<LegState>) -> Self {
        Self { levels, states: SchemeStates::Three(states), spec_hash: None, relaxed_objective: None }
    }

    pub fn with_provenance(mut self, spec_hash: String, relaxed_objective: f64) -> Self {
        self.spec_hash = Some(spec_hash);
        self.relaxed_objective = Some(relaxed_objective);
        self
    }

    pub fn len(&self) -> usize {
        match &self.states {
            SchemeStates::Single(s) => s.len(),
            SchemeStates::Three(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Per-instant state labels: the integer level, or the leg-state token.
    pub fn tokens(&self) -> Vec<String> {
        match &self.states {
            SchemeStates::Single(s) => s.iter().map(i8::to_string).collect(),
            SchemeStates::Three(s) => s.iter().map(|st| st.token().to_string()).collect(),
        }
    }

    pub fn single_signal(&self) -> Option<Vec<f64>> {
        match &self.states {
            SchemeStates::Single(s) => Some(s.iter().map(|&l| l as f64).collect()),
            SchemeStates::Three(_) => None,
        }
    }
}

/// Rounds each entry to the nearest level. Ties go to the level of smaller
/// magnitude, then to the smaller level.
pub fn quantize_single(x: &[f64], levels: LevelVector, feas_tol: f64) -> Result<QuantizedScheme> {
    let mut order: Vec<i8> = levels.levels().to_vec();
    order.sort_by_key(|&l| (l.abs(), l));
    let limit = 1.0 + 10.0 * feas_tol;
    let states = x
        .iter()
        .enumerate()
        .map(|(index, &value)| {
            if value.is_nan() || value.abs() > limit {
                return Err(Error::OutOfRange { index, value });
            }
            let best = order.iter().map(|&l| (value - l as f64).abs()).fold(f64::INFINITY, f64::min);
            Ok(*order.iter().find(|&&l| (value - l as f64).abs() <= best + TIE).expect("level set is non-empty"))
        })
        .collect::<Result<Vec<i8>>>()?;
    Ok(QuantizedScheme::single(levels, states))
}

/// Picks, per instant, the physical state carrying the most relaxed mass.
/// The free-wheel mass is pooled over the three pair matrices. Ties follow
/// `LegState::ALL` order.
pub fn quantize_three(z: &PairMatrices) -> Result<QuantizedScheme> {
    let levels = z.levels;
    let free_col = levels.index_of(0);
    let pos = levels.index_of(1).expect("+1 is always a level");
    let neg = levels.index_of(-1).expect("-1 is always a level");
    let states = (0..z.n())
        .map(|t| {
            let mass = |st: LegState| -> f64 {
                match st.pair_level() {
                    None => free_col.map_or(0.0, |c| (0..3).map(|p| z.z[p][t][c]).sum()),
                    Some((p, 1)) => z.z[p][t][pos],
                    Some((p, _)) => z.z[p][t][neg],
                }
            };
            let mut best = (LegState::Free, f64::NEG_INFINITY);
            for &st in LegState::available(levels) {
                let w = mass(st);
                if w > best.1 + TIE {
                    best = (st, w);
                }
            }
            if best.1 < EMPTY_ROW {
                return Err(Error::DegenerateRow(t));
            }
            Ok(best.0)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(QuantizedScheme::three(levels, states))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicResidual {
    pub k: usize,
    /// Phase index for current harmonics; `None` for the output voltage.
    pub phase: Option<usize>,
    /// Projection minus target, cosine part.
    pub re: f64,
    /// Projection minus target, sine part.
    pub im: f64,
    /// Residual expressed as a one-sided spectrum amplitude.
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub dc_achieved: f64,
    /// Distance to the DC target, or to the DC interval when one is set.
    pub dc_error: f64,
    pub current_harmonics: Vec<HarmonicResidual>,
    pub voltage_harmonics: Vec<HarmonicResidual>,
    /// Mean of each phase current.
    pub current_means: Vec<f64>,
    /// `max |x1 + x2 + x3|`, three-phase only.
    pub kirchhoff: Option<f64>,
}

impl ResidualReport {
    pub fn max_constrained_harmonic(&self) -> f64 {
        self.current_harmonics.iter().chain(&self.voltage_harmonics).map(|h| h.amplitude).fold(0.0, f64::max)
    }
}

/// Evaluates every design constraint of `q` exactly.
pub fn residual_report(q: &QuantizedScheme, spec: &RectifierSpec, grid: &TimeGrid) -> Result<ResidualReport> {
    match (&q.states, spec) {
        (SchemeStates::Single(_), RectifierSpec::Single(s)) => {
            let x = q.single_signal().expect("single-phase scheme");
            let v = output_voltage_single(&x, &s.supply(grid))?;
            constraint_residuals(&[x], &v, spec, grid)
        }
        (SchemeStates::Three(states), RectifierSpec::Three(s)) => {
            let z = PairMatrices::one_hot(states, q.levels)?;
            let currents = phase_currents(&z, 1.0, s.current_sign)?;
            let v = output_voltage_three(&z, &s.line_templates(grid))?;
            constraint_residuals(&currents, &v, spec, grid)
        }
        _ => Err(Error::SpecInvalid("scheme and spec disagree on the phase count".into())),
    }
}

/// Constraint residuals of arbitrary (relaxed or quantised) waveforms:
/// `currents` holds one vector per phase, `voltage` the load voltage.
pub fn constraint_residuals(
    currents: &[Vec<f64>],
    voltage: &[f64],
    spec: &RectifierSpec,
    grid: &TimeGrid,
) -> Result<ResidualReport> {
    let n = grid.n();
    for w in currents.iter().map(Vec::as_slice).chain([voltage]) {
        if w.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: w.len() });
        }
    }
    let (dc_target, dc_interval, current_ks, bindings, phases): (_, _, _, &[HarmonicBinding], Vec<usize>) = match spec {
        RectifierSpec::Single(s) => {
            let mut ks = s.current_zero_harmonics.clone();
            if s.current_zero_mean && !ks.contains(&0) {
                ks.push(0);
            }
            (s.dc_target, s.dc_interval, ks, &s.voltage_bindings, vec![0])
        }
        RectifierSpec::Three(s) => {
            let phases = match s.harmonic_scope {
                crate::three_phase::HarmonicScope::PerPhase => vec![0, 1, 2],
                crate::three_phase::HarmonicScope::FirstPhase => vec![0],
            };
            (s.dc_target, s.dc_interval, s.current_zero_harmonics.clone(), &s.voltage_bindings, phases)
        }
    };

    let dc_achieved = voltage.iter().sum::<f64>() / n as f64;
    let dc_error = match dc_interval {
        None => (dc_achieved - dc_target).abs(),
        Some((lo, hi)) => (lo - dc_achieved).max(dc_achieved - hi).max(0.0),
    };

    let mut current_harmonics = Vec::new();
    for &k in &current_ks {
        for &ph in &phases {
            let (c, s) = project(&currents[ph], k);
            current_harmonics.push(residual(k, Some(ph), c, s, n));
        }
    }
    let voltage_harmonics = bindings
        .iter()
        .map(|b| {
            let (c, s) = project(voltage, b.k);
            residual(b.k, None, c - b.re, s - b.im, n)
        })
        .collect();

    let current_means = currents.iter().map(|x| x.iter().sum::<f64>() / n as f64).collect();
    let kirchhoff = (currents.len() == 3 && is_signed(spec))
        .then(|| (0..n).map(|t| (currents[0][t] + currents[1][t] + currents[2][t]).abs()).fold(0.0, f64::max));
    Ok(ResidualReport { dc_achieved, dc_error, current_harmonics, voltage_harmonics, current_means, kirchhoff })
}

fn is_signed(spec: &RectifierSpec) -> bool {
    matches!(spec, RectifierSpec::Three(s) if s.current_sign == CurrentSign::Signed)
}

fn residual(k: usize, phase: Option<usize>, re: f64, im: f64, n: usize) -> HarmonicResidual {
    HarmonicResidual { k, phase, re, im, amplitude: amplitude_scale(k, n) * re.hypot(im) }
}

/// `(Σ v cos(2πkt/N), Σ v sin(2πkt/N))`.
fn project(v: &[f64], k: usize) -> (f64, f64) {
    let n = v.len();
    v.iter().enumerate().fold((0.0, 0.0), |(c, s), (t, &x)| {
        let a = TAU * ((k * t) % n) as f64 / n as f64;
        (c + x * a.cos(), s + x * a.sin())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::build_grid;
    use crate::single_phase::SinglePhaseSpec;
    use crate::three_phase::ThreePhaseSpec;
    use approx::assert_abs_diff_eq;

    fn q1(x: f64, fw: bool) -> i8 {
        match quantize_single(&[x], LevelVector::new(fw), 1e-8).unwrap().states {
            SchemeStates::Single(s) => s[0],
            _ => unreachable!(),
        }
    }

    #[test]
    fn nearest_level_with_ties() {
        assert_eq!(q1(0.6, true), 1);
        assert_eq!(q1(-0.5, true), 0);
        assert_eq!(q1(0.5, true), 0);
        assert_eq!(q1(-0.51, true), -1);
        assert_eq!(q1(0.49, false), 1);
        assert_eq!(q1(0.0, false), -1);
        assert_eq!(q1(1.0 + 5e-8, true), 1);
        assert!(matches!(
            quantize_single(&[0.0, 1.1], LevelVector::new(true), 1e-8),
            Err(Error::OutOfRange { index: 1, .. })
        ));
    }

    fn rows(lv: LevelVector, n: usize) -> PairMatrices {
        PairMatrices { levels: lv, z: std::array::from_fn(|_| vec![vec![0.0; lv.m()]; n]) }
    }

    #[test]
    fn three_phase_argmax() {
        let lv = LevelVector::new(true);
        let mut z = rows(lv, 3);
        z.z[0][0] = vec![0.0, 0.0, 1.0];
        for p in 0..3 {
            z.z[p][1][1] = 1.0 / 3.0;
        }
        z.z[0][2][2] = 0.5;
        z.z[1][2][2] = 0.5;
        let q = quantize_three(&z).unwrap();
        assert_eq!(q.states, SchemeStates::Three(vec![LegState::P12Pos, LegState::Free, LegState::P12Pos]));

        let z = rows(lv, 1);
        assert_eq!(quantize_three(&z), Err(Error::DegenerateRow(0)));
    }

    #[test]
    fn integral_input_is_a_fixed_point() {
        let lv = LevelVector::new(true);
        let states = vec![LegState::P23Neg, LegState::Free, LegState::P31Pos, LegState::P12Neg];
        let z = PairMatrices::one_hot(&states, lv).unwrap();
        assert_eq!(quantize_three(&z).unwrap().states, SchemeStates::Three(states));

        let x = [1.0, 0.0, -1.0, 1.0];
        assert_eq!(quantize_single(&x, lv, 1e-8).unwrap().states, SchemeStates::Single(vec![1, 0, -1, 1]));
    }

    #[test]
    fn residuals_of_full_conduction() {
        let n = 256;
        let g = build_grid(n, 50.0).unwrap();
        let states: Vec<i8> = g
            .theta()
            .iter()
            .map(|t| {
                if t.sin() > 1e-12 {
                    1
                } else if t.sin() < -1e-12 {
                    -1
                } else {
                    0
                }
            })
            .collect();
        let q = QuantizedScheme::single(LevelVector::new(true), states);
        let spec = RectifierSpec::Single(
            SinglePhaseSpec::new(n, 2.0 / std::f64::consts::PI, 0.0).eliminate_voltage_harmonics(&[1]),
        );
        let r = residual_report(&q, &spec, &g).unwrap();
        assert!(r.dc_error <= 1e-4, "{}", r.dc_error);
        // |sin| has no fundamental
        assert!(r.voltage_harmonics[0].amplitude < 1e-12);
    }

    #[test]
    fn residuals_of_free_scheme() {
        let g = build_grid(12, 50.0).unwrap();
        let q = QuantizedScheme::three(LevelVector::new(true), vec![LegState::Free; 12]);
        let spec = RectifierSpec::Three(ThreePhaseSpec::new(12, 0.2, 10.0));
        let r = residual_report(&q, &spec, &g).unwrap();
        assert_abs_diff_eq!(r.dc_error, 0.2, epsilon = 1e-15);
        assert_eq!(r.kirchhoff, Some(0.0));

        let single = RectifierSpec::Single(SinglePhaseSpec::new(12, 0.2, 10.0));
        assert!(residual_report(&q, &single, &g).is_err());
    }

    #[test]
    fn interval_error_is_distance_to_interval() {
        let g = build_grid(8, 50.0).unwrap();
        let q = QuantizedScheme::single(LevelVector::new(true), vec![0; 8]);
        let mut s = SinglePhaseSpec::new(8, 0.0, 0.0);
        s.dc_interval = Some((0.1, 0.3));
        let r = residual_report(&q, &RectifierSpec::Single(s), &g).unwrap();
        assert_abs_diff_eq!(r.dc_error, 0.1, epsilon = 1e-15);
    }
}
