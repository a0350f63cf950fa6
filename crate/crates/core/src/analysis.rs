//! Spectra, harmonic distortion and the RL output filter.

use std::f64::consts::TAU;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One-sided amplitude spectrum of a real periodic signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// `X(k) = Σ_n v[n] e^{-j2πkn/N}` for `0 ≤ k < N`.
    pub coefficients: Vec<Complex64>,
    /// `a_0 = |X(0)|/N`, `a_k = 2|X(k)|/N` for `0 < k < N/2`, and
    /// `a_{N/2} = |X(N/2)|/N` when N is even.
    pub amplitudes: Vec<f64>,
}

impl Spectrum {
    pub fn n(&self) -> usize {
        self.coefficients.len()
    }

    /// Contribution of bin `k` to the mean-square value.
    pub fn energy(&self, k: usize) -> f64 {
        let a = self.amplitudes[k];
        if k == 0 || 2 * k == self.n() {
            a * a
        } else {
            0.5 * a * a
        }
    }
}

pub fn dft_spectrum(v: &[f64]) -> Result<Spectrum> {
    let n = v.len();
    if n < 2 {
        return Err(Error::EmptySignal);
    }
    let mut buf: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let amplitudes = (0..=n / 2)
        .map(|k| {
            let scale = if k == 0 || 2 * k == n { 1.0 } else { 2.0 };
            scale * buf[k].norm() / n as f64
        })
        .collect();
    Ok(Spectrum { coefficients: buf, amplitudes })
}

/// Mean-square value `(1/N) Σ v²`.
pub fn mean_square(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>() / v.len().max(1) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThdReport {
    /// Undesired energy over total energy, in `[0, 1]`.
    pub energy_ratio: f64,
    /// Undesired RMS over desired RMS; `None` when undefined.
    pub conventional_ratio: Option<f64>,
    pub desired_bins: Vec<usize>,
    pub total_energy: f64,
    pub desired_energy: f64,
}

impl ThdReport {
    pub fn conventional(&self) -> Result<f64> {
        if self.total_energy == 0.0 {
            return Err(Error::ZeroSignal);
        }
        self.conventional_ratio.ok_or(Error::ZeroDesired)
    }
}

/// Splits the signal energy between `desired_bins` and everything else.
pub fn thd(v: &[f64], desired_bins: &[usize]) -> Result<ThdReport> {
    let spec = dft_spectrum(v)?;
    let n = v.len();
    let mut bins = desired_bins.to_vec();
    bins.sort_unstable();
    bins.dedup();
    if let Some(&k) = bins.iter().find(|&&k| 2 * k > n) {
        return Err(Error::AliasedHarmonic { k, n });
    }
    let total_energy = mean_square(v);
    let desired_energy: f64 = bins.iter().map(|&k| spec.energy(k)).sum();
    let undesired = (total_energy - desired_energy).max(0.0);
    let energy_ratio = if total_energy > 0.0 { (undesired / total_energy).clamp(0.0, 1.0) } else { 0.0 };
    let conventional_ratio = (total_energy > 0.0 && desired_energy > 0.0).then(|| (undesired / desired_energy).sqrt());
    Ok(ThdReport { energy_ratio, conventional_ratio, desired_bins: bins, total_energy, desired_energy })
}

/// Series RL low-pass filter, output taken across the resistor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub r_ohms: f64,
    pub l_henries: f64,
    pub f0_hz: f64,
    pub settle_periods: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self { r_ohms: 1.0, l_henries: 0.02, f0_hz: 50.0, settle_periods: 10 }
    }
}

impl FilterConfig {
    /// First-order corner frequency `R/(2πL)`.
    pub fn cutoff_hz(&self) -> f64 {
        self.r_ohms / (TAU * self.l_henries)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.r_ohms) || !ok(self.l_henries) || !ok(self.f0_hz) || self.settle_periods == 0 {
            return Err(Error::NonpositiveParams(format!(
                "R={} L={} f0={} settle_periods={}",
                self.r_ohms, self.l_henries, self.f0_hz, self.settle_periods
            )));
        }
        Ok(())
    }
}

/// Drives the filter with the periodic, sample-and-held input `v` for
/// `settle_periods` periods from rest and returns the resistor voltage at
/// each sample instant of the last period.
pub fn rl_filter(v: &[f64], cfg: &FilterConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    if v.is_empty() {
        return Err(Error::EmptySignal);
    }
    let n = v.len();
    let dt = 1.0 / (n as f64 * cfg.f0_hz);
    let alpha = (-cfg.r_ohms * dt / cfg.l_henries).exp();
    let mut i = 0.0;
    let mut out = Vec::with_capacity(n);
    for period in 0..cfg.settle_periods {
        let last = period + 1 == cfg.settle_periods;
        for &u in v {
            if last {
                out.push(cfg.r_ohms * i);
            }
            i = alpha * i + (1.0 - alpha) * u / cfg.r_ohms;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RippleStats {
    pub mean: f64,
    pub peak_to_peak: f64,
    /// RMS of the deviation from the mean.
    pub rms_ripple: f64,
    /// `mean - dc_target`.
    pub mean_error: f64,
}

pub fn ripple_stats(filtered: &[f64], dc_target: f64) -> Result<RippleStats> {
    if filtered.is_empty() {
        return Err(Error::EmptySignal);
    }
    let n = filtered.len() as f64;
    let mean = filtered.iter().sum::<f64>() / n;
    let (lo, hi) = filtered.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let rms_ripple = (filtered.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    Ok(RippleStats { mean, peak_to_peak: hi - lo, rms_ripple, mean_error: mean - dc_target })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// Direct O(N²) DFT, independent of the FFT path.
    fn naive_dft(v: &[f64]) -> Vec<Complex64> {
        let n = v.len();
        (0..n)
            .map(|k| {
                v.iter().enumerate().fold(Complex64::new(0.0, 0.0), |acc, (t, &x)| {
                    let a = -TAU * ((k * t) % n) as f64 / n as f64;
                    acc + Complex64::new(a.cos(), a.sin()) * x
                })
            })
            .collect()
    }

    fn sine(n: usize) -> Vec<f64> {
        (0..n).map(|t| (TAU * t as f64 / n as f64).sin()).collect()
    }

    /// ±1 square wave sampled half a step off the zero crossings, so that
    /// it keeps unit power and exact half-wave symmetry.
    fn square(n: usize) -> Vec<f64> {
        (0..n).map(|t| (TAU * (t as f64 + 0.5) / n as f64).sin().signum()).collect()
    }

    #[test]
    fn constant_signal() {
        let s = dft_spectrum(&[-2.5; 16]).unwrap();
        assert_abs_diff_eq!(s.amplitudes[0], 2.5, epsilon = 1e-12);
        assert!(s.amplitudes[1..].iter().all(|a| *a < 1e-12));
        assert_eq!(dft_spectrum(&[1.0]), Err(Error::EmptySignal));
    }

    #[test]
    fn unit_sine() {
        let s = dft_spectrum(&sine(64)).unwrap();
        assert_abs_diff_eq!(s.amplitudes[1], 1.0, epsilon = 1e-9);
        for (k, a) in s.amplitudes.iter().enumerate() {
            if k != 1 {
                assert!(*a <= 1e-9);
            }
        }
    }

    #[test]
    fn square_wave_series() {
        let v = square(1024);
        let s = dft_spectrum(&v).unwrap();
        let naive = naive_dft(&v);
        for (a, b) in s.coefficients.iter().zip(&naive).take(8) {
            assert!((a - b).norm() < 1e-9);
        }
        let pi = std::f64::consts::PI;
        assert_abs_diff_eq!(s.amplitudes[1], 4.0 / pi, epsilon = 1e-3);
        assert!(s.amplitudes[2] <= 1e-9);
        assert_abs_diff_eq!(s.amplitudes[3], 4.0 / (3.0 * pi), epsilon = 1e-3);
    }

    #[test]
    fn thd_values() {
        let r = thd(&sine(128), &[1]).unwrap();
        assert!(r.energy_ratio <= 1e-12);
        assert!(r.conventional().unwrap() <= 1e-6);

        let r = thd(&square(1024), &[1]).unwrap();
        let pi = std::f64::consts::PI;
        assert_abs_diff_eq!(r.energy_ratio, 1.0 - 8.0 / (pi * pi), epsilon = 1e-3);
        assert_abs_diff_eq!(r.energy_ratio, 0.18943, epsilon = 1e-3);

        let r = thd(&[1.0; 32], &[0]).unwrap();
        assert!(r.energy_ratio <= 1e-12);

        let r = thd(&[0.0; 32], &[1]).unwrap();
        assert_eq!(r.energy_ratio, 0.0);
        assert_eq!(r.conventional(), Err(Error::ZeroSignal));
        let r = thd(&[1.0; 32], &[1]).unwrap();
        assert_eq!(r.conventional(), Err(Error::ZeroDesired));
        assert!(thd(&[1.0; 32], &[17]).is_err());
    }

    #[test]
    fn filter_dc_gain_and_attenuation() {
        let cfg = FilterConfig { settle_periods: 20, ..FilterConfig::default() };
        let out = rl_filter(&[0.7; 128], &cfg).unwrap();
        assert!(out.iter().all(|o| (o - 0.7).abs() <= 1e-6));

        let out = rl_filter(&sine(256), &FilterConfig::default()).unwrap();
        let amp = dft_spectrum(&out).unwrap().amplitudes[1];
        let expect = 1.0 / (1.0 + (TAU * 50.0 * 0.02f64).powi(2)).sqrt();
        assert_abs_diff_eq!(expect, 0.15718, epsilon = 1e-5);
        assert!((amp - expect).abs() <= 0.01 * expect, "{amp} vs {expect}");

        assert_eq!(rl_filter(&[0.0; 16], &cfg).unwrap(), vec![0.0; 16]);
        let bad = FilterConfig { l_henries: 0.0, ..cfg };
        assert!(matches!(rl_filter(&[0.0; 4], &bad), Err(Error::NonpositiveParams(_))));
        assert_abs_diff_eq!(FilterConfig::default().cutoff_hz(), 7.957747, epsilon = 1e-6);
    }

    #[test]
    fn ripple() {
        let r = ripple_stats(&[0.3; 10], 0.3).unwrap();
        assert_abs_diff_eq!(r.mean, 0.3, epsilon = 1e-15);
        assert_eq!(r.peak_to_peak, 0.0);
        assert!(r.rms_ripple <= 1e-15);
        let eps = 0.01;
        let v: Vec<f64> = sine(64).iter().map(|s| 0.5 + eps * s).collect();
        let r = ripple_stats(&v, 0.5).unwrap();
        assert_abs_diff_eq!(r.peak_to_peak, 2.0 * eps, epsilon = 1e-12);
        assert_abs_diff_eq!(r.rms_ripple, eps / 2f64.sqrt(), epsilon = 1e-12);
        assert!(ripple_stats(&[], 0.0).is_err());
    }

    proptest! {
        #[test]
        fn parseval(v in prop::collection::vec(-5.0f64..5.0, 2..200)) {
            let s = dft_spectrum(&v).unwrap();
            let lhs = mean_square(&v);
            let rhs: f64 = (0..s.amplitudes.len()).map(|k| s.energy(k)).sum();
            prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.max(1e-300));
        }

        #[test]
        fn conjugate_symmetry(v in prop::collection::vec(-5.0f64..5.0, 2..100)) {
            let s = dft_spectrum(&v).unwrap();
            let n = v.len();
            for k in 1..n {
                prop_assert!((s.coefficients[n - k] - s.coefficients[k].conj()).norm() <= 1e-9);
            }
        }

        #[test]
        fn thd_ratio_in_unit_interval(v in prop::collection::vec(-5.0f64..5.0, 4..100), k in 0usize..2) {
            let r = thd(&v, &[k]).unwrap();
            prop_assert!((0.0..=1.0).contains(&r.energy_ratio));
        }

        #[test]
        fn filter_is_linear(
            a in prop::collection::vec(-5.0f64..5.0, 32),
            b in prop::collection::vec(-5.0f64..5.0, 32),
            alpha in -3.0f64..3.0,
        ) {
            let cfg = FilterConfig::default();
            let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| alpha * x + y).collect();
            let fa = rl_filter(&a, &cfg).unwrap();
            let fb = rl_filter(&b, &cfg).unwrap();
            let fm = rl_filter(&mix, &cfg).unwrap();
            let scale = fm.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for t in 0..32 {
                prop_assert!((alpha * fa[t] + fb[t] - fm[t]).abs() <= 1e-9 * scale);
            }
        }
    }
}
