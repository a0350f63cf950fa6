//! Ready-made configs for the reference scenarios.

use crate::config::{FilterSection, Phase, RunConfig};
use rectiplan_core::{CurrentSign, HarmonicBinding, HarmonicScope};

pub const NAMES: [&str; 4] = ["single-fw", "single-nofw", "three-nofw", "three-fw"];

/// Single phase at DC 0.2 on 128 samples and three phase at DC 0.8 on 192
/// samples, with and without free-wheeling, all with λ = 10 and output
/// harmonics 2, 4 and 6 eliminated.
pub fn preset(name: &str) -> Option<RunConfig> {
    let (phase, n, dc, free_wheel) = match name {
        "single-fw" => (Phase::Single, 128, 0.2, true),
        "single-nofw" => (Phase::Single, 128, 0.2, false),
        "three-nofw" => (Phase::Three, 192, 0.8, false),
        "three-fw" => (Phase::Three, 192, 0.8, true),
        _ => return None,
    };
    Some(RunConfig {
        phase,
        n,
        free_wheel,
        dc_target: dc,
        dc_interval: None,
        lambda: 10.0,
        current_zero_harmonics: Vec::new(),
        voltage_harmonics: [2, 4, 6].into_iter().map(HarmonicBinding::zero).collect(),
        f0_hz: 50.0,
        load_current: 1.0,
        filter: FilterSection::default(),
        templates_file: None,
        quantize: true,
        output_dir: format!("out/{name}").into(),
        current_zero_mean: false,
        current_sign: CurrentSign::default(),
        harmonic_scope: HarmonicScope::default(),
    })
}
