//! Run configuration: one JSON document per design.

use std::fs;
use std::path::{Path, PathBuf};

use rectiplan_core::discretization::{read_phase_voltages_csv, read_template_csv};
use rectiplan_core::{
    CurrentSign, FilterConfig, HarmonicBinding, HarmonicScope, RectifierSpec, SinglePhaseSpec, ThreePhaseSpec, TimeGrid,
};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, CliError, Result};

/// Overrides `output_dir` when set.
pub const OUT_ENV: &str = "RECTIPLAN_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Single,
    Three,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSection {
    #[serde(default = "default_r")]
    pub r_ohms: f64,
    #[serde(default = "default_l")]
    pub l_henries: f64,
    #[serde(default = "default_settle")]
    pub settle_periods: usize,
}

impl Default for FilterSection {
    fn default() -> Self {
        Self { r_ohms: default_r(), l_henries: default_l(), settle_periods: default_settle() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub phase: Phase,
    pub n: usize,
    #[serde(default = "yes")]
    pub free_wheel: bool,
    pub dc_target: f64,
    #[serde(default)]
    pub dc_interval: Option<[f64; 2]>,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default)]
    pub current_zero_harmonics: Vec<usize>,
    #[serde(default)]
    pub voltage_harmonics: Vec<HarmonicBinding>,
    #[serde(default = "default_f0")]
    pub f0_hz: f64,
    #[serde(default = "default_load")]
    pub load_current: f64,
    #[serde(default)]
    pub filter: FilterSection,
    /// Supply samples: one column for single phase, `v1,v2,v3` phase
    /// voltages for three phase. Relative to the config file.
    #[serde(default)]
    pub templates_file: Option<PathBuf>,
    #[serde(default = "yes")]
    pub quantize: bool,
    /// Relative to the config file.
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,
    /// Single phase only.
    #[serde(default)]
    pub current_zero_mean: bool,
    /// Three phase only.
    #[serde(default)]
    pub current_sign: CurrentSign,
    /// Three phase only.
    #[serde(default)]
    pub harmonic_scope: HarmonicScope,
}

fn yes() -> bool {
    true
}
fn default_lambda() -> f64 {
    10.0
}
fn default_f0() -> f64 {
    50.0
}
fn default_load() -> f64 {
    1.0
}
fn default_r() -> f64 {
    1.0
}
fn default_l() -> f64 {
    0.02
}
fn default_settle() -> usize {
    10
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// A parsed config together with the directory its relative paths hang off.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub base_dir: PathBuf,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io_err(format!("reading {}", path.display())))?;
        let config = RunConfig::from_json(&text)?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self { config, base_dir })
    }

    /// `$RECTIPLAN_OUT` if set, otherwise `output_dir`.
    pub fn output_dir(&self) -> PathBuf {
        match std::env::var_os(OUT_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.base_dir.join(&self.config.output_dir),
        }
    }

    pub fn spec(&self, grid: &TimeGrid) -> Result<RectifierSpec> {
        let c = &self.config;
        let templates = c.templates_file.as_ref().map(|p| self.base_dir.join(p));
        let dc_interval = c.dc_interval.map(|[lo, hi]| (lo, hi));
        let spec = match c.phase {
            Phase::Single => {
                let template = match &templates {
                    Some(p) => Some(read_template_csv(p, c.n)?),
                    None => None,
                };
                RectifierSpec::Single(SinglePhaseSpec {
                    n: c.n,
                    free_wheel: c.free_wheel,
                    dc_target: c.dc_target,
                    dc_interval,
                    lambda: c.lambda,
                    current_zero_harmonics: c.current_zero_harmonics.clone(),
                    voltage_bindings: c.voltage_harmonics.clone(),
                    current_zero_mean: c.current_zero_mean,
                    template,
                })
            }
            Phase::Three => {
                let templates = match &templates {
                    Some(p) => Some(read_phase_voltages_csv(p, c.n)?),
                    None => None,
                };
                RectifierSpec::Three(ThreePhaseSpec {
                    n: c.n,
                    free_wheel: c.free_wheel,
                    dc_target: c.dc_target,
                    dc_interval,
                    lambda: c.lambda,
                    current_zero_harmonics: c.current_zero_harmonics.clone(),
                    voltage_bindings: c.voltage_harmonics.clone(),
                    current_sign: c.current_sign,
                    harmonic_scope: c.harmonic_scope,
                    templates,
                })
            }
        };
        spec.validate(grid)?;
        Ok(spec)
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: RunConfig = serde_json::from_str(text).map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
        config.check()?;
        Ok(config)
    }

    pub fn filter(&self) -> FilterConfig {
        FilterConfig {
            r_ohms: self.filter.r_ohms,
            l_henries: self.filter.l_henries,
            f0_hz: self.f0_hz,
            settle_periods: self.filter.settle_periods,
        }
    }

    fn check(&self) -> Result<()> {
        let bad = |key: &str, why: String| Err(CliError::ConfigInvalid(format!("`{key}`: {why}")));
        if self.n < 4 {
            return bad("n", format!("need at least 4 samples, got {}", self.n));
        }
        if !self.dc_target.is_finite() {
            return bad("dc_target", "must be finite".into());
        }
        if let Some([lo, hi]) = self.dc_interval {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return bad("dc_interval", format!("[{lo}, {hi}] is not an interval"));
            }
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return bad("lambda", format!("must be >= 0, got {}", self.lambda));
        }
        if !(self.f0_hz.is_finite() && self.f0_hz > 0.0) {
            return bad("f0_hz", format!("must be > 0, got {}", self.f0_hz));
        }
        if !(self.load_current.is_finite() && self.load_current > 0.0) {
            return bad("load_current", format!("must be > 0, got {}", self.load_current));
        }
        let f = &self.filter;
        if !(f.r_ohms.is_finite() && f.r_ohms > 0.0) {
            return bad("filter.r_ohms", format!("must be > 0, got {}", f.r_ohms));
        }
        if !(f.l_henries.is_finite() && f.l_henries > 0.0) {
            return bad("filter.l_henries", format!("must be > 0, got {}", f.l_henries));
        }
        if f.settle_periods == 0 {
            return bad("filter.settle_periods", "must be at least 1".into());
        }
        let max_k = self.n / 2;
        if let Some(k) = self.current_zero_harmonics.iter().find(|&&k| k == 1 || k > max_k) {
            return bad(
                "current_zero_harmonics",
                format!("harmonic {k} is not allowed (1 is the fundamental, limit N/2 = {max_k})"),
            );
        }
        if let Some(b) = self.voltage_harmonics.iter().find(|b| b.k == 0 || b.k > max_k) {
            return bad("voltage_harmonics", format!("harmonic {} is outside 1..={max_k}", b.k));
        }
        match self.phase {
            Phase::Single => {
                if self.current_sign != CurrentSign::default() {
                    return bad("current_sign", "only applies to three-phase designs".into());
                }
                if self.harmonic_scope != HarmonicScope::default() {
                    return bad("harmonic_scope", "only applies to three-phase designs".into());
                }
            }
            Phase::Three => {
                if self.current_zero_mean {
                    return bad("current_zero_mean", "three-phase currents are always zero-mean".into());
                }
            }
        }
        Ok(())
    }
}
