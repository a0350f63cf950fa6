//! Optimal switching schemes for fully controlled rectifiers.
//!
//! One fundamental period is split into `N` equal intervals. At each
//! interval the bridge picks a switch level, and the choice over the period
//! is relaxed to a row-stochastic matrix so that DC output, harmonic
//! elimination and an energy-based distortion cost all become linear. The
//! resulting linear program is solved with a dense simplex ([`lp`]) and the
//! relaxed scheme is rounded back to physical switch states ([`quantizer`]).
//!
//! [`analysis`] reproduces the evaluation side (spectra, THD, RL-filtered
//! ripple) and [`oracle`] enumerates every quantised scheme on small grids as
//! an independent check of the relaxation.

pub mod analysis;
pub mod discretization;
pub mod error;
pub mod lp;
pub mod oracle;
pub mod problem;
pub mod quantizer;
pub mod single_phase;
pub mod three_phase;

pub use analysis::{dft_spectrum, ripple_stats, rl_filter, thd, FilterConfig, RippleStats, Spectrum, ThdReport};
pub use discretization::{
    build_fourier_row, build_grid, build_sine_template, FourierRow, LevelVector, LineTemplates, TimeGrid,
    VoltageTemplate,
};
pub use error::{Error, Result};
pub use lp::{check_point, solve_lp, Constraint, LinearProgram, LpSolution, LpStatus, Residuals, Tolerances};
pub use oracle::{enumerate_single, enumerate_three, OracleResult};
pub use problem::{Design, HarmonicBinding, RectifierSpec};
pub use quantizer::{quantize_single, quantize_three, residual_report, QuantizedScheme, ResidualReport, SchemeStates};
pub use single_phase::{
    build_single_phase_lp, input_current_single, output_voltage_single, solve_single_phase, RelaxedSchemeSingle,
    SinglePhaseSpec,
};
pub use three_phase::{
    build_three_phase_lp, output_voltage_three, phase_currents, solve_three_phase, CurrentSign, HarmonicScope,
    LegState, PairMatrices, RelaxedSchemeThree, ThreePhaseSpec,
};
