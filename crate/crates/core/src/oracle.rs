//! Exhaustive search over quantised schemes on small grids.
//!
//! Every candidate is scored with the design cost evaluated directly on its
//! waveforms, and accepted when each constraint holds within the caller's
//! tolerance. Fourier and mean rows are compared after dividing by N; the
//! DC row is already a mean. A DC interval is honoured exactly, so on specs
//! whose only other rows live on the integer lattice (zero-mean currents) the
//! accepted set is a subset of the relaxation's feasible set and the LP
//! optimum must lower-bound the best cost found here.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretization::TimeGrid;
use crate::error::{Error, Result};
use crate::quantizer::QuantizedScheme;
use crate::single_phase::SinglePhaseSpec;
use crate::three_phase::{output_voltage_three, phase_currents, HarmonicScope, LegState, PairMatrices, ThreePhaseSpec};

pub const SINGLE_PHASE_CAP: usize = 14;
pub const THREE_PHASE_CAP: usize = 8;
/// Slack on interval rows for summation round-off only.
const INTERVAL_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub best_cost: Option<f64>,
    pub best_scheme: Option<QuantizedScheme>,
    pub num_feasible: u64,
    pub num_enumerated: u64,
}

#[derive(Debug, Clone, Copy)]
enum Row {
    Eq { target: f64, tol: f64 },
    Interval { lo: f64, hi: f64 },
}

impl Row {
    fn holds(&self, v: f64) -> bool {
        match *self {
            Row::Eq { target, tol } => (v - target).abs() <= tol,
            Row::Interval { lo, hi } => v >= lo - INTERVAL_SLACK && v <= hi + INTERVAL_SLACK,
        }
    }
}

/// Per-(instant, state) contributions: cost first, then one entry per row.
struct Lattice {
    n: usize,
    states: usize,
    rows: Vec<Row>,
    table: Vec<f64>,
}

impl Lattice {
    fn width(&self) -> usize {
        self.rows.len() + 1
    }

    fn entry(&self, t: usize, s: usize) -> &[f64] {
        let w = self.width();
        let start = (t * self.states + s) * w;
        &self.table[start..start + w]
    }
}

#[derive(Debug, Clone, Default)]
struct Partial {
    best: Option<(f64, Vec<u8>)>,
    feasible: u64,
    enumerated: u64,
}

impl Partial {
    fn offer(&mut self, cost: f64, scheme: &[u8]) {
        let better = match &self.best {
            None => true,
            Some((c, s)) => cost < *c || (cost == *c && scheme < s.as_slice()),
        };
        if better {
            self.best = Some((cost, scheme.to_vec()));
        }
    }

    /// Associative, order-independent merge.
    fn merge(mut self, other: Partial) -> Partial {
        self.feasible += other.feasible;
        self.enumerated += other.enumerated;
        if let Some((c, s)) = other.best {
            self.offer(c, &s);
        }
        self
    }
}

fn search(lat: &Lattice) -> Partial {
    let split = lat.n.min(2);
    let prefixes = lat.states.pow(split as u32);
    (0..prefixes)
        .into_par_iter()
        .map(|p| {
            let mut scheme = vec![0u8; lat.n];
            let mut rest = p;
            for d in (0..split).rev() {
                scheme[d] = (rest % lat.states) as u8;
                rest /= lat.states;
            }
            let w = lat.width();
            let mut sums = vec![0.0; (lat.n + 1) * w];
            for d in 0..split {
                let e = lat.entry(d, scheme[d] as usize);
                for r in 0..w {
                    sums[(d + 1) * w + r] = sums[d * w + r] + e[r];
                }
            }
            let mut out = Partial::default();
            dfs(lat, split, &mut scheme, &mut sums, &mut out);
            out
        })
        .reduce(Partial::default, Partial::merge)
}

fn dfs(lat: &Lattice, d: usize, scheme: &mut [u8], sums: &mut [f64], out: &mut Partial) {
    let w = lat.width();
    if d == lat.n {
        out.enumerated += 1;
        let acc = &sums[d * w..(d + 1) * w];
        if lat.rows.iter().zip(&acc[1..]).all(|(row, &v)| row.holds(v)) {
            out.feasible += 1;
            out.offer(acc[0], scheme);
        }
        return;
    }
    for s in 0..lat.states {
        scheme[d] = s as u8;
        let e = lat.entry(d, s);
        for r in 0..w {
            sums[(d + 1) * w + r] = sums[d * w + r] + e[r];
        }
        dfs(lat, d + 1, scheme, sums, out);
    }
}

fn trig(k: usize, t: usize, n: usize) -> (f64, f64) {
    let a = TAU * ((k * t) % n) as f64 / n as f64;
    (a.cos(), a.sin())
}

fn check_tolerance(tolerance: f64) -> Result<()> {
    if !(tolerance.is_finite() && tolerance >= 0.0) {
        return Err(Error::SpecInvalid(format!("oracle tolerance {tolerance} must be >= 0")));
    }
    Ok(())
}

pub fn enumerate_single(spec: &SinglePhaseSpec, grid: &TimeGrid, tolerance: f64) -> Result<OracleResult> {
    spec.validate(grid)?;
    check_tolerance(tolerance)?;
    let n = spec.n;
    if n > SINGLE_PHASE_CAP {
        return Err(Error::TooLarge { n, cap: SINGLE_PHASE_CAP });
    }
    let levels = spec.levels();
    let supply = spec.supply(grid);
    let inv_n = 1.0 / n as f64;
    let eq = |target: f64| Row::Eq { target, tol: tolerance };

    // Row builders: each maps (instant, level) to a contribution.
    type Contribution<'a> = Box<dyn Fn(usize, f64) -> f64 + 'a>;
    let mut rows: Vec<(Row, Contribution)> = Vec::new();
    for &k in &spec.current_zero_harmonics {
        rows.push((eq(0.0), Box::new(move |t, l| trig(k, t, n).0 * l * inv_n)));
        if k != 0 {
            rows.push((eq(0.0), Box::new(move |t, l| trig(k, t, n).1 * l * inv_n)));
        }
    }
    if spec.current_zero_mean && !spec.current_zero_harmonics.contains(&0) {
        rows.push((eq(0.0), Box::new(move |_, l| l * inv_n)));
    }
    let s = supply.samples();
    let dc_row = match spec.dc_interval {
        Some((lo, hi)) => Row::Interval { lo, hi },
        None => eq(spec.dc_target),
    };
    rows.push((dc_row, Box::new(move |t, l| s[t] * l * inv_n)));
    for b in &spec.voltage_bindings {
        let k = b.k;
        rows.push((eq(b.re * inv_n), Box::new(move |t, l| trig(k, t, n).0 * s[t] * l * inv_n)));
        rows.push((eq(b.im * inv_n), Box::new(move |t, l| trig(k, t, n).1 * s[t] * l * inv_n)));
    }

    let lv = levels.levels();
    let mut table = Vec::new();
    for t in 0..n {
        for &level in lv {
            let l = level as f64;
            table.push(inv_n * (1.0 + spec.lambda * supply.samples_sq()[t]) * l.abs());
            table.extend(rows.iter().map(|(_, f)| f(t, l)));
        }
    }
    let lat = Lattice { n, states: lv.len(), rows: rows.iter().map(|r| r.0).collect(), table };
    let found = search(&lat);
    Ok(OracleResult {
        best_cost: found.best.as_ref().map(|b| b.0),
        best_scheme: found
            .best
            .map(|(_, s)| QuantizedScheme::single(levels, s.iter().map(|&i| lv[i as usize]).collect())),
        num_feasible: found.feasible,
        num_enumerated: found.enumerated,
    })
}

pub fn enumerate_three(spec: &ThreePhaseSpec, grid: &TimeGrid, tolerance: f64) -> Result<OracleResult> {
    spec.validate(grid)?;
    check_tolerance(tolerance)?;
    let n = spec.n;
    if n > THREE_PHASE_CAP {
        return Err(Error::TooLarge { n, cap: THREE_PHASE_CAP });
    }
    let levels = spec.levels();
    let states = LegState::available(levels);
    let templates = spec.line_templates(grid);
    let tpl = templates.as_array();
    let inv_n = 1.0 / n as f64;
    let eq = |target: f64| Row::Eq { target, tol: tolerance };

    // Waveforms of each state held for the whole period, indexed [state][t].
    let mut currents = Vec::new();
    let mut voltages = Vec::new();
    for &st in states {
        let z = PairMatrices::one_hot(&vec![st; n], levels)?;
        currents.push(phase_currents(&z, 1.0, spec.current_sign)?);
        voltages.push(output_voltage_three(&z, &templates)?);
    }

    let phases: &[usize] = match spec.harmonic_scope {
        HarmonicScope::PerPhase => &[0, 1, 2],
        HarmonicScope::FirstPhase => &[0],
    };
    type Contribution<'a> = Box<dyn Fn(usize, usize) -> f64 + 'a>;
    let mut rows: Vec<(Row, Contribution)> = Vec::new();
    let cur = &currents;
    let vol = &voltages;
    for ph in [0, 1, 2] {
        rows.push((eq(0.0), Box::new(move |s, t| cur[s][ph][t] * inv_n)));
    }
    for &k in &spec.current_zero_harmonics {
        for &ph in phases {
            rows.push((eq(0.0), Box::new(move |s, t| trig(k, t, n).0 * cur[s][ph][t] * inv_n)));
            if k != 0 {
                rows.push((eq(0.0), Box::new(move |s, t| trig(k, t, n).1 * cur[s][ph][t] * inv_n)));
            }
        }
    }
    let dc_row = match spec.dc_interval {
        Some((lo, hi)) => Row::Interval { lo, hi },
        None => eq(spec.dc_target),
    };
    rows.push((dc_row, Box::new(move |s, t| vol[s][t] * inv_n)));
    for b in &spec.voltage_bindings {
        let k = b.k;
        rows.push((eq(b.re * inv_n), Box::new(move |s, t| trig(k, t, n).0 * vol[s][t] * inv_n)));
        rows.push((eq(b.im * inv_n), Box::new(move |s, t| trig(k, t, n).1 * vol[s][t] * inv_n)));
    }

    let mut table = Vec::new();
    for t in 0..n {
        for (si, st) in states.iter().enumerate() {
            let cost = match st.pair_level() {
                None => 0.0,
                Some((p, _)) => inv_n * (1.0 + 0.5 * spec.lambda * tpl[p].samples_sq()[t]),
            };
            table.push(cost);
            table.extend(rows.iter().map(|(_, f)| f(si, t)));
        }
    }
    let lat = Lattice { n, states: states.len(), rows: rows.iter().map(|r| r.0).collect(), table };
    let found = search(&lat);
    Ok(OracleResult {
        best_cost: found.best.as_ref().map(|b| b.0),
        best_scheme: found
            .best
            .map(|(_, s)| QuantizedScheme::three(levels, s.iter().map(|&i| states[i as usize]).collect())),
        num_feasible: found.feasible,
        num_enumerated: found.enumerated,
    })
}

/// Cost of a quantised single-phase scheme: `(1/N) Σ |q_t| (1 + λ s_t²)`.
pub fn single_scheme_cost(q: &[i8], spec: &SinglePhaseSpec, grid: &TimeGrid) -> f64 {
    let supply = spec.supply(grid);
    q.iter().zip(supply.samples_sq()).map(|(&l, s2)| (l as f64).abs() * (1.0 + spec.lambda * s2)).sum::<f64>()
        / q.len() as f64
}

/// Cost of a quantised three-phase scheme.
pub fn three_scheme_cost(q: &[LegState], spec: &ThreePhaseSpec, grid: &TimeGrid) -> f64 {
    let templates = spec.line_templates(grid);
    let tpl = templates.as_array();
    q.iter()
        .enumerate()
        .map(|(t, st)| match st.pair_level() {
            None => 0.0,
            Some((p, _)) => 1.0 + 0.5 * spec.lambda * tpl[p].samples_sq()[t],
        })
        .sum::<f64>()
        / q.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::build_grid;

    #[test]
    fn trivial_single() {
        let g = build_grid(4, 50.0).unwrap();
        let mut spec = SinglePhaseSpec::new(4, 0.0, 10.0);
        spec.dc_interval = Some((-0.01, 0.01));
        let r = enumerate_single(&spec, &g, 0.02).unwrap();
        assert_eq!(r.best_cost, Some(0.0));
        assert_eq!(r.best_scheme.unwrap().states, crate::quantizer::SchemeStates::Single(vec![0; 4]));
        assert_eq!(r.num_enumerated, 81);
    }

    #[test]
    fn counts() {
        let g = build_grid(8, 50.0).unwrap();
        let mut spec = SinglePhaseSpec::new(8, 0.0, 0.0);
        spec.dc_interval = Some((-10.0, 10.0));
        let r = enumerate_single(&spec, &g, 0.02).unwrap();
        assert_eq!(r.num_enumerated, 6561);
        assert_eq!(r.num_feasible, 6561);

        let g = build_grid(6, 50.0).unwrap();
        let mut spec = ThreePhaseSpec::new(6, 0.0, 10.0);
        spec.free_wheel = false;
        spec.dc_interval = Some((-10.0, 10.0));
        let r = enumerate_three(&spec, &g, 0.02).unwrap();
        assert_eq!(r.num_enumerated, 46656);
    }

    #[test]
    fn homogeneous_three_phase() {
        let g = build_grid(4, 50.0).unwrap();
        let spec = ThreePhaseSpec::new(4, 0.0, 10.0);
        let r = enumerate_three(&spec, &g, 0.02).unwrap();
        assert_eq!(r.best_cost, Some(0.0));
        assert_eq!(r.best_scheme.unwrap().states, crate::quantizer::SchemeStates::Three(vec![LegState::Free; 4]));
    }

    #[test]
    fn caps() {
        let g = build_grid(20, 50.0).unwrap();
        let spec = SinglePhaseSpec::new(20, 0.0, 0.0);
        assert_eq!(enumerate_single(&spec, &g, 0.02), Err(Error::TooLarge { n: 20, cap: 14 }));
        let g = build_grid(9, 50.0).unwrap();
        let spec = ThreePhaseSpec::new(9, 0.0, 0.0);
        assert_eq!(enumerate_three(&spec, &g, 0.02), Err(Error::TooLarge { n: 9, cap: 8 }));
    }

    #[test]
    fn best_cost_matches_direct_cost() {
        let g = build_grid(10, 50.0).unwrap();
        let mut spec = SinglePhaseSpec::new(10, 0.0, 10.0);
        spec.dc_interval = Some((0.18, 0.22));
        let r = enumerate_single(&spec, &g, 0.02).unwrap();
        let q = match r.best_scheme.unwrap().states {
            crate::quantizer::SchemeStates::Single(q) => q,
            _ => unreachable!(),
        };
        let direct = single_scheme_cost(&q, &spec, &g);
        assert!((direct - r.best_cost.unwrap()).abs() < 1e-12);
    }
}
