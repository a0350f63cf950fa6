//! Types shared by the single- and three-phase designs.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::discretization::{LevelVector, TimeGrid};
use crate::error::{Error, Result};
use crate::single_phase::SinglePhaseSpec;
use crate::three_phase::ThreePhaseSpec;

/// Pins harmonic `k` of the output voltage: `cos_row(k)·v = re` and
/// `sin_row(k)·v = im` (unnormalised projections).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicBinding {
    pub k: usize,
    pub re: f64,
    pub im: f64,
}

impl HarmonicBinding {
    pub fn zero(k: usize) -> Self {
        Self { k, re: 0.0, im: 0.0 }
    }
}

/// Result of a relaxed design: either an optimal scheme or a certificate that
/// no scheme meets the requirements.
#[derive(Debug, Clone, PartialEq)]
pub enum Design<T> {
    Optimal(T),
    Infeasible,
}

impl<T> Design<T> {
    pub fn optimal(self) -> Option<T> {
        match self {
            Design::Optimal(t) => Some(t),
            Design::Infeasible => None,
        }
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(self, Design::Infeasible)
    }
}

/// A single- or three-phase design problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "phase", rename_all = "snake_case")]
pub enum RectifierSpec {
    Single(SinglePhaseSpec),
    Three(ThreePhaseSpec),
}

impl RectifierSpec {
    pub fn n(&self) -> usize {
        match self {
            Self::Single(s) => s.n,
            Self::Three(s) => s.n,
        }
    }

    pub fn levels(&self) -> LevelVector {
        match self {
            Self::Single(s) => s.levels(),
            Self::Three(s) => s.levels(),
        }
    }

    pub fn validate(&self, grid: &TimeGrid) -> Result<()> {
        match self {
            Self::Single(s) => s.validate(grid),
            Self::Three(s) => s.validate(grid),
        }
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("spec serialises");
        hex::encode(Sha256::digest(bytes))
    }
}

pub(crate) fn validate_common(
    grid: &TimeGrid,
    n: usize,
    dc_target: f64,
    dc_interval: Option<(f64, f64)>,
    lambda: f64,
    current_zero_harmonics: &[usize],
    voltage_bindings: &[HarmonicBinding],
) -> Result<()> {
    let bad = |msg: String| Err(Error::SpecInvalid(msg));
    if grid.n() != n {
        return bad(format!("grid has {} samples but the spec asks for {n}", grid.n()));
    }
    if !dc_target.is_finite() {
        return bad("dc_target must be finite".into());
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return bad(format!("lambda must be a finite non-negative weight, got {lambda}"));
    }
    if let Some((lo, hi)) = dc_interval {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return bad(format!("dc_interval [{lo}, {hi}] is not a finite interval"));
        }
    }
    for &k in current_zero_harmonics {
        if k == 1 {
            return bad("current harmonic 1 cannot be eliminated: it carries the power".into());
        }
        alias_guard(grid, k)?;
    }
    let mut seen = Vec::new();
    for b in voltage_bindings {
        if b.k == 0 {
            return bad("voltage harmonic 0 is the DC requirement; use dc_target".into());
        }
        if seen.contains(&b.k) {
            return bad(format!("voltage harmonic {} is bound twice", b.k));
        }
        if !(b.re.is_finite() && b.im.is_finite()) {
            return bad(format!("voltage harmonic {} has a non-finite target", b.k));
        }
        alias_guard(grid, b.k)?;
        seen.push(b.k);
    }
    Ok(())
}

fn alias_guard(grid: &TimeGrid, k: usize) -> Result<()> {
    grid.check_harmonic(k).map_err(|_| {
        Error::SpecInvalid(format!("harmonic {k} is not representable on {} samples (need k < N/2)", grid.n()))
    })
}

/// Amplitude scale turning an unnormalised projection into the one-sided
/// spectrum amplitude: `1/N` at DC, `2/N` otherwise.
pub(crate) fn amplitude_scale(k: usize, n: usize) -> f64 {
    if k == 0 {
        1.0 / n as f64
    } else {
        2.0 / n as f64
    }
}
