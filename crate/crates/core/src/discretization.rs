//! Uniform time grid over one fundamental period, supply-voltage templates,
//! Fourier projection rows and the switch level sets.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    n: usize,
    theta: Vec<f64>,
    f0: f64,
}

impl TimeGrid {
    pub fn n(&self) -> usize {
        self.n
    }

    /// `θ_n = 2πn/N` for `0 ≤ n < N`.
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Fundamental frequency in Hz.
    pub fn f0(&self) -> f64 {
        self.f0
    }

    /// Sample spacing in seconds.
    pub fn dt(&self) -> f64 {
        1.0 / (self.n as f64 * self.f0)
    }

    /// Largest harmonic index usable in a constraint row.
    pub fn max_harmonic(&self) -> usize {
        (self.n - 1) / 2
    }

    pub fn check_harmonic(&self, k: usize) -> Result<()> {
        if 2 * k >= self.n {
            Err(Error::AliasedHarmonic { k, n: self.n })
        } else {
            Ok(())
        }
    }
}

pub fn build_grid(n: usize, f0: f64) -> Result<TimeGrid> {
    if n < 4 {
        return Err(Error::BadN(n));
    }
    if !(f0.is_finite() && f0 > 0.0) {
        return Err(Error::NonpositiveParams(format!("fundamental frequency {f0}")));
    }
    let theta = (0..n).map(|i| TAU * i as f64 / n as f64).collect();
    Ok(TimeGrid { n, theta, f0 })
}

/// Instantaneous voltage applied to the load by one conducting path, sampled
/// on the grid, together with its square.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoltageTemplate {
    pub label: String,
    samples: Vec<f64>,
    samples_sq: Vec<f64>,
}

impl VoltageTemplate {
    pub fn from_samples(label: impl Into<String>, samples: Vec<f64>) -> Result<Self> {
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::BadTemplate(format!("sample {i} is not finite")));
        }
        let samples_sq = samples.iter().map(|v| v * v).collect();
        Ok(Self { label: label.into(), samples, samples_sq })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn samples_sq(&self) -> &[f64] {
        &self.samples_sq
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn expect_len(&self, n: usize) -> Result<()> {
        if self.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: self.len() });
        }
        Ok(())
    }

    /// Elementwise difference, used to form line voltages from phase voltages.
    pub fn minus(&self, other: &VoltageTemplate, label: impl Into<String>) -> Result<Self> {
        other.expect_len(self.len())?;
        let d = self.samples.iter().zip(&other.samples).map(|(a, b)| a - b).collect();
        Self::from_samples(label, d)
    }
}

/// `samples[n] = sin(θ_n + phase_offset) - sin(θ_n + minus_offset)`, the
/// second term only when `minus_offset` is given.
pub fn build_sine_template(grid: &TimeGrid, phase_offset: f64, minus_offset: Option<f64>) -> VoltageTemplate {
    let samples =
        grid.theta.iter().map(|&t| (t + phase_offset).sin() - minus_offset.map_or(0.0, |m| (t + m).sin())).collect();
    let label = match minus_offset {
        None => "s1".to_string(),
        Some(_) => "line".to_string(),
    };
    VoltageTemplate::from_samples(label, samples).expect("sinusoids are finite")
}

/// Unit-amplitude single-phase supply.
pub fn single_phase_template(grid: &TimeGrid) -> VoltageTemplate {
    build_sine_template(grid, 0.0, None)
}

/// The three line-voltage templates of a three-phase bridge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineTemplates {
    pub s12: VoltageTemplate,
    pub s23: VoltageTemplate,
    pub s31: VoltageTemplate,
}

impl LineTemplates {
    /// Balanced unit-amplitude supply with phases at `0, 2π/3, 4π/3`.
    pub fn balanced(grid: &TimeGrid) -> Self {
        let (a, b, c) = (0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0);
        let mut s12 = build_sine_template(grid, a, Some(b));
        let mut s23 = build_sine_template(grid, b, Some(c));
        let mut s31 = build_sine_template(grid, c, Some(a));
        s12.label = "s12".into();
        s23.label = "s23".into();
        s31.label = "s31".into();
        Self { s12, s23, s31 }
    }

    /// Line templates from arbitrary (possibly unbalanced or distorted)
    /// phase-voltage samples.
    pub fn from_phase_voltages(v1: &[f64], v2: &[f64], v3: &[f64]) -> Result<Self> {
        let p1 = VoltageTemplate::from_samples("v1", v1.to_vec())?;
        let p2 = VoltageTemplate::from_samples("v2", v2.to_vec())?;
        let p3 = VoltageTemplate::from_samples("v3", v3.to_vec())?;
        Ok(Self { s12: p1.minus(&p2, "s12")?, s23: p2.minus(&p3, "s23")?, s31: p3.minus(&p1, "s31")? })
    }

    pub fn as_array(&self) -> [&VoltageTemplate; 3] {
        [&self.s12, &self.s23, &self.s31]
    }

    /// Cyclic relabelling `(s12, s23, s31) -> (s23, s31, s12)`.
    pub fn rotated(&self) -> Self {
        Self { s12: self.s23.clone(), s23: self.s31.clone(), s31: self.s12.clone() }
    }

    pub fn expect_len(&self, n: usize) -> Result<()> {
        self.as_array().iter().try_for_each(|t| t.expect_len(n))
    }
}

/// Real and imaginary parts of the k-th discrete Fourier row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierRow {
    pub k: usize,
    pub cos_row: Vec<f64>,
    pub sin_row: Vec<f64>,
}

impl FourierRow {
    pub fn project(&self, v: &[f64]) -> (f64, f64) {
        let c = self.cos_row.iter().zip(v).map(|(a, b)| a * b).sum();
        let s = self.sin_row.iter().zip(v).map(|(a, b)| a * b).sum();
        (c, s)
    }
}

pub fn build_fourier_row(grid: &TimeGrid, k: usize) -> Result<FourierRow> {
    grid.check_harmonic(k)?;
    let n = grid.n;
    let mut cos_row = Vec::with_capacity(n);
    let mut sin_row = Vec::with_capacity(n);
    for i in 0..n {
        // k·n is reduced mod N before scaling
        let phase = TAU * ((k * i) % n) as f64 / n as f64;
        cos_row.push(phase.cos());
        sin_row.push(if k == 0 { 0.0 } else { phase.sin() });
    }
    Ok(FourierRow { k, cos_row, sin_row })
}

/// Ordered switch levels and their magnitudes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LevelVector {
    /// `S = (-1, 0, +1)`; level 0 is free-wheeling.
    WithFreeWheel,
    /// `S = (-1, +1)`.
    WithoutFreeWheel,
}

impl LevelVector {
    pub fn new(free_wheel: bool) -> Self {
        if free_wheel {
            Self::WithFreeWheel
        } else {
            Self::WithoutFreeWheel
        }
    }

    pub fn levels(&self) -> &'static [i8] {
        match self {
            Self::WithFreeWheel => &[-1, 0, 1],
            Self::WithoutFreeWheel => &[-1, 1],
        }
    }

    /// `S` as reals.
    pub fn s(&self) -> Vec<f64> {
        self.levels().iter().map(|&l| l as f64).collect()
    }

    /// `S_p[j] = |S[j]|`.
    pub fn s_p(&self) -> Vec<f64> {
        self.levels().iter().map(|&l| (l as f64).abs()).collect()
    }

    /// Number of levels, `m`.
    pub fn m(&self) -> usize {
        self.levels().len()
    }

    pub fn has_free_wheel(&self) -> bool {
        matches!(self, Self::WithFreeWheel)
    }

    pub fn index_of(&self, level: i8) -> Option<usize> {
        self.levels().iter().position(|&l| l == level)
    }
}

/// Reads a template override: one real sample per line, exactly `n` lines.
pub fn read_template_csv(path: &Path, n: usize) -> Result<VoltageTemplate> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::BadTemplate(format!("{}: {e}", path.display())))?;
    let samples = parse_template(&text)?;
    let t = VoltageTemplate::from_samples("custom", samples)?;
    t.expect_len(n).map_err(|_| Error::BadTemplate(format!("expected {n} samples, found {}", t.len())))?;
    Ok(t)
}

/// Parses one sample per line; blank lines are rejected.
pub fn parse_template(text: &str) -> Result<Vec<f64>> {
    text.lines()
        .enumerate()
        .map(|(i, line)| line.trim().parse::<f64>().map_err(|e| Error::BadTemplate(format!("line {}: {e}", i + 1))))
        .collect()
}

/// Reads three-phase supply samples: `v1,v2,v3` per line, exactly `n` lines.
pub fn read_phase_voltages_csv(path: &Path, n: usize) -> Result<LineTemplates> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::BadTemplate(format!("{}: {e}", path.display())))?;
    let mut cols: [Vec<f64>; 3] = Default::default();
    for (i, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::BadTemplate(format!("line {}: expected 3 comma-separated phase samples", i + 1)));
        }
        for (c, f) in cols.iter_mut().zip(fields) {
            c.push(f.parse::<f64>().map_err(|e| Error::BadTemplate(format!("line {}: {e}", i + 1)))?);
        }
    }
    if cols[0].len() != n {
        return Err(Error::BadTemplate(format!("expected {n} samples, found {}", cols[0].len())));
    }
    LineTemplates::from_phase_voltages(&cols[0], &cols[1], &cols[2])
}
