//! The `design` pipeline: solve, quantise, evaluate and emit.

use std::path::PathBuf;

use rectiplan_core::oracle::{single_scheme_cost, three_scheme_cost};
use rectiplan_core::quantizer::constraint_residuals;
use rectiplan_core::{
    build_grid, dft_spectrum, output_voltage_single, output_voltage_three, phase_currents, quantize_single,
    quantize_three, residual_report, ripple_stats, rl_filter, solve_single_phase, solve_three_phase, thd, Design,
    PairMatrices, QuantizedScheme, RectifierSpec, ResidualReport, RippleStats, SchemeStates, ThdReport, TimeGrid,
    Tolerances,
};
use serde::Serialize;

use crate::config::LoadedConfig;
use crate::error::Result;
use crate::output::{self, fmt_f64, FILTERED_CSV, REPORT_JSON, SCHEME_CSV, SPECTRUM_CSV, VOLTAGE_CSV};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, Serialize)]
pub struct DcSummary {
    pub target: f64,
    pub interval: Option<[f64; 2]>,
    pub relaxed: f64,
    pub quantized: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualSummary {
    pub relaxed: ResidualReport,
    pub quantized: Option<ResidualReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThdSummary {
    /// Desired bin 0.
    pub output_voltage: ThdReport,
    /// Desired bin 1, one entry per phase.
    pub input_current: Vec<ThdReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FilterSummary {
    pub r_ohms: f64,
    pub l_henries: f64,
    pub settle_periods: usize,
    pub cutoff_hz: f64,
    pub ripple: RippleStats,
}

/// Why no scheme exists.
#[derive(Debug, Clone, Serialize)]
pub struct Diagnosis {
    pub message: String,
    /// Largest DC any scheme on this grid can reach.
    pub dc_reachable_max: f64,
    /// Constraints that could not be added to the DC requirement, found by
    /// adding them one at a time and skipping those that break feasibility.
    pub blocking: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DesignReport {
    pub status: Status,
    pub phase: &'static str,
    pub n: usize,
    pub free_wheel: bool,
    pub spec_hash: String,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnosis: Option<Diagnosis>,
    pub objective: Option<f64>,
    pub quantized_cost: Option<f64>,
    /// `quantized` or `relaxed`: which scheme the waveforms below describe.
    pub waveform: Option<&'static str>,
    pub dc: Option<DcSummary>,
    pub residuals: Option<ResidualSummary>,
    pub thd: Option<ThdSummary>,
    pub filter: Option<FilterSummary>,
    pub spectrum: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct DesignRun {
    pub report: DesignReport,
    pub output_dir: PathBuf,
    /// Emitted output voltage (one period).
    pub voltage: Vec<f64>,
    pub scheme: Option<QuantizedScheme>,
}

impl DesignRun {
    pub fn exit_code(&self) -> u8 {
        match self.report.status {
            Status::Optimal => 0,
            Status::Infeasible => 2,
        }
    }
}

/// Relaxed solution reduced to the waveforms the pipeline needs.
struct Relaxed {
    objective: f64,
    /// Unit-load currents, one vector per phase.
    currents: Vec<Vec<f64>>,
    voltage: Vec<f64>,
    /// Single phase: `x`; three phase: pair matrices.
    single_x: Option<Vec<f64>>,
    pairs: Option<PairMatrices>,
}

fn solve(spec: &RectifierSpec, grid: &TimeGrid, tol: &Tolerances) -> Result<Option<Relaxed>> {
    Ok(match spec {
        RectifierSpec::Single(s) => match solve_single_phase(s, grid, tol)? {
            Design::Infeasible => None,
            Design::Optimal(r) => Some(Relaxed {
                objective: r.objective,
                voltage: output_voltage_single(&r.x, &s.supply(grid))?,
                currents: vec![r.x.clone()],
                single_x: Some(r.x),
                pairs: None,
            }),
        },
        RectifierSpec::Three(s) => match solve_three_phase(s, grid, tol)? {
            Design::Infeasible => None,
            Design::Optimal(r) => Some(Relaxed {
                objective: r.objective,
                currents: r.x.to_vec(),
                voltage: r.v_out,
                single_x: None,
                pairs: Some(r.z),
            }),
        },
    })
}

fn phase_name(spec: &RectifierSpec) -> &'static str {
    match spec {
        RectifierSpec::Single(_) => "single",
        RectifierSpec::Three(_) => "three",
    }
}

pub fn run_design(cfg: &LoadedConfig) -> Result<DesignRun> {
    let c = &cfg.config;
    let grid = build_grid(c.n, c.f0_hz)?;
    let spec = cfg.spec(&grid)?;
    let filter = c.filter();
    filter.validate()?;
    let tol = Tolerances::default();
    let out_dir = cfg.output_dir();
    output::ensure_dir(&out_dir)?;

    let warnings = match &spec {
        RectifierSpec::Three(s) => s.warnings(),
        RectifierSpec::Single(_) => Vec::new(),
    };
    let mut report = DesignReport {
        status: Status::Infeasible,
        phase: phase_name(&spec),
        n: c.n,
        free_wheel: c.free_wheel,
        spec_hash: spec.hash(),
        warnings,
        diagnosis: None,
        objective: None,
        quantized_cost: None,
        waveform: None,
        dc: None,
        residuals: None,
        thd: None,
        filter: None,
        spectrum: None,
    };

    let Some(relaxed) = solve(&spec, &grid, &tol)? else {
        report.diagnosis = Some(diagnose(&spec, &grid, &tol)?);
        output::remove_stale(&out_dir, &[SCHEME_CSV, VOLTAGE_CSV, SPECTRUM_CSV, FILTERED_CSV])?;
        output::write_json(&out_dir.join(REPORT_JSON), &report)?;
        return Ok(DesignRun { report, output_dir: out_dir, voltage: Vec::new(), scheme: None });
    };

    let relaxed_res = constraint_residuals(&relaxed.currents, &relaxed.voltage, &spec, &grid)?;
    let scheme = if c.quantize {
        let q = match &spec {
            RectifierSpec::Single(_) => {
                quantize_single(relaxed.single_x.as_ref().expect("single phase"), spec.levels(), tol.feas_tol)?
            }
            RectifierSpec::Three(_) => quantize_three(relaxed.pairs.as_ref().expect("three phase"))?,
        };
        Some(q.with_provenance(report.spec_hash.clone(), relaxed.objective))
    } else {
        None
    };

    // waveforms of the scheme being reported, scaled by the load current
    let (currents, voltage, quantized_res, quantized_cost) = match &scheme {
        Some(q) => {
            let (currents, voltage, cost) = quantized_waveforms(q, &spec, &grid)?;
            let res = residual_report(q, &spec, &grid)?;
            (currents, voltage, Some(res), Some(cost))
        }
        None => (relaxed.currents.clone(), relaxed.voltage.clone(), None, None),
    };
    let currents: Vec<Vec<f64>> = currents.iter().map(|i| i.iter().map(|v| v * c.load_current).collect()).collect();

    let spectrum = dft_spectrum(&voltage)?;
    let filtered = rl_filter(&voltage, &filter)?;
    let ripple = ripple_stats(&filtered, c.dc_target)?;
    let thd_summary = ThdSummary {
        output_voltage: thd(&voltage, &[0])?,
        input_current: currents.iter().map(|i| thd(i, &[1])).collect::<std::result::Result<_, _>>()?,
    };

    write_scheme(&out_dir, &grid, scheme.as_ref(), &relaxed)?;
    output::write_waveform(&out_dir.join(VOLTAGE_CSV), grid.theta(), &voltage)?;
    output::write_spectrum(&out_dir.join(SPECTRUM_CSV), &spectrum.amplitudes)?;
    output::write_filtered(&out_dir.join(FILTERED_CSV), grid.dt(), &filtered)?;

    report.status = Status::Optimal;
    report.objective = Some(relaxed.objective);
    report.quantized_cost = quantized_cost;
    report.waveform = Some(if scheme.is_some() { "quantized" } else { "relaxed" });
    report.dc = Some(DcSummary {
        target: c.dc_target,
        interval: c.dc_interval,
        relaxed: relaxed_res.dc_achieved,
        quantized: quantized_res.as_ref().map(|r| r.dc_achieved),
    });
    report.residuals = Some(ResidualSummary { relaxed: relaxed_res, quantized: quantized_res });
    report.thd = Some(thd_summary);
    report.filter = Some(FilterSummary {
        r_ohms: filter.r_ohms,
        l_henries: filter.l_henries,
        settle_periods: filter.settle_periods,
        cutoff_hz: filter.cutoff_hz(),
        ripple,
    });
    report.spectrum = Some(spectrum.amplitudes);
    output::write_json(&out_dir.join(REPORT_JSON), &report)?;
    Ok(DesignRun { report, output_dir: out_dir, voltage, scheme })
}

/// Unit-load phase currents, output voltage and design cost of a scheme.
fn quantized_waveforms(
    q: &QuantizedScheme,
    spec: &RectifierSpec,
    grid: &TimeGrid,
) -> Result<(Vec<Vec<f64>>, Vec<f64>, f64)> {
    Ok(match (&q.states, spec) {
        (SchemeStates::Single(states), RectifierSpec::Single(s)) => {
            let x = q.single_signal().expect("single-phase scheme");
            let v = output_voltage_single(&x, &s.supply(grid))?;
            (vec![x], v, single_scheme_cost(states, s, grid))
        }
        (SchemeStates::Three(states), RectifierSpec::Three(s)) => {
            let z = PairMatrices::one_hot(states, q.levels)?;
            let currents = phase_currents(&z, 1.0, s.current_sign)?;
            let v = output_voltage_three(&z, &s.line_templates(grid))?;
            (currents.to_vec(), v, three_scheme_cost(states, s, grid))
        }
        _ => unreachable!("scheme is quantised from the spec it is evaluated against"),
    })
}

/// `index,theta,state` for a quantised scheme; relaxed currents otherwise.
fn write_scheme(
    dir: &std::path::Path,
    grid: &TimeGrid,
    scheme: Option<&QuantizedScheme>,
    relaxed: &Relaxed,
) -> Result<()> {
    let path = dir.join(SCHEME_CSV);
    let theta = grid.theta();
    match scheme {
        Some(q) => output::write_csv(
            &path,
            &["index", "theta", "state"],
            q.tokens().into_iter().enumerate().map(|(i, s)| vec![i.to_string(), fmt_f64(theta[i]), s]),
        ),
        None => {
            let header: &[&str] = if relaxed.currents.len() == 1 {
                &["index", "theta", "x"]
            } else {
                &["index", "theta", "x1", "x2", "x3"]
            };
            output::write_csv(
                &path,
                header,
                (0..grid.n()).map(|i| {
                    let mut row = vec![i.to_string(), fmt_f64(theta[i])];
                    row.extend(relaxed.currents.iter().map(|x| fmt_f64(x[i])));
                    row
                }),
            )
        }
    }
}

/// Largest reachable DC: at each instant the conducting option with the
/// largest supply magnitude.
pub fn reachable_dc_max(spec: &RectifierSpec, grid: &TimeGrid) -> f64 {
    let n = grid.n();
    let sum: f64 = match spec {
        RectifierSpec::Single(s) => s.supply(grid).samples().iter().map(|v| v.abs()).sum(),
        RectifierSpec::Three(s) => {
            let t = s.line_templates(grid);
            (0..n).map(|i| t.as_array().iter().map(|p| p.samples()[i].abs()).fold(0.0, f64::max)).sum()
        }
    };
    sum / n as f64
}

enum Item {
    CurrentHarmonic(usize),
    CurrentZeroMean,
    VoltageHarmonic(usize),
}

fn diagnose(spec: &RectifierSpec, grid: &TimeGrid, tol: &Tolerances) -> Result<Diagnosis> {
    let dc_max = reachable_dc_max(spec, grid);
    let stripped = |keep: &[&Item]| -> RectifierSpec {
        let mut s = spec.clone();
        let (ch, vb, zm) = match &mut s {
            RectifierSpec::Single(s) => {
                (&mut s.current_zero_harmonics, &mut s.voltage_bindings, Some(&mut s.current_zero_mean))
            }
            RectifierSpec::Three(s) => (&mut s.current_zero_harmonics, &mut s.voltage_bindings, None),
        };
        ch.retain(|k| keep.iter().any(|i| matches!(i, Item::CurrentHarmonic(j) if j == k)));
        vb.retain(|b| keep.iter().any(|i| matches!(i, Item::VoltageHarmonic(j) if *j == b.k)));
        if let Some(zm) = zm {
            *zm = *zm && keep.iter().any(|i| matches!(i, Item::CurrentZeroMean));
        }
        s
    };
    let dc_label = match spec {
        RectifierSpec::Single(s) if s.dc_interval.is_some() => "dc_interval",
        RectifierSpec::Three(s) if s.dc_interval.is_some() => "dc_interval",
        _ => "dc_target",
    };
    if solve(&stripped(&[]), grid, tol)?.is_none() {
        return Ok(Diagnosis {
            message: format!("{dc_label} is out of reach: no scheme on this grid exceeds a DC of {dc_max:.6}"),
            dc_reachable_max: dc_max,
            blocking: vec![dc_label.to_string()],
        });
    }

    let (ch, vb, zm) = match spec {
        RectifierSpec::Single(s) => (&s.current_zero_harmonics, &s.voltage_bindings, s.current_zero_mean),
        RectifierSpec::Three(s) => (&s.current_zero_harmonics, &s.voltage_bindings, false),
    };
    let mut items: Vec<Item> = ch.iter().map(|&k| Item::CurrentHarmonic(k)).collect();
    if zm {
        items.push(Item::CurrentZeroMean);
    }
    items.extend(vb.iter().map(|b| Item::VoltageHarmonic(b.k)));

    let mut kept: Vec<&Item> = Vec::new();
    let mut blocking = Vec::new();
    for item in &items {
        kept.push(item);
        if solve(&stripped(&kept), grid, tol)?.is_none() {
            kept.pop();
            blocking.push(match item {
                Item::CurrentHarmonic(k) => format!("current_zero_harmonics[k={k}]"),
                Item::CurrentZeroMean => "current_zero_mean".to_string(),
                Item::VoltageHarmonic(k) => format!("voltage_harmonics[k={k}]"),
            });
        }
    }
    Ok(Diagnosis {
        message: format!("{dc_label} is reachable alone but conflicts with: {}", blocking.join(", ")),
        dc_reachable_max: dc_max,
        blocking,
    })
}
