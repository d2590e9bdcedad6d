//! Dominant-period estimation ("nonlinear time") per trajectory component.
//!
//! The reference definition takes the period of the strongest power-spectrum
//! peak after mean removal and Hann windowing. An autocorrelation-based
//! alternative is provided since the quantity has no unique definition.

use rustfft::{num_complex::Complex, FftPlanner};

use crate::dynsys::Trajectory;
use crate::error::{Error, Result};

/// Minimum number of samples accepted for spectral estimation.
pub const MIN_SPECTRAL_SAMPLES: usize = 1 << 12;

/// How the dominant period of a component is defined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeriodMethod {
    /// Period of the dominant power-spectrum peak (mean removed, Hann window).
    SpectralPeak,
    /// Lag of the first autocorrelation maximum after the first zero crossing.
    Autocorrelation,
}

fn power_spectrum(samples: &[f64]) -> Vec<f64> {
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let mut buffer: Vec<Complex<f64>> = samples
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let window =
                0.5 * (1.0 - (2.0 * std::f64::consts::PI * k as f64 / (n - 1) as f64).cos());
            Complex::new((x - mean) * window, 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buffer);
    buffer.iter().map(|z| z.norm_sqr()).collect()
}

/// Dominant oscillation period of one sampled series.
pub fn dominant_period_with(samples: &[f64], dt: f64, method: PeriodMethod) -> Result<f64> {
    if samples.len() < MIN_SPECTRAL_SAMPLES {
        return Err(Error::TooShort {
            context: "period estimation",
            needed: MIN_SPECTRAL_SAMPLES,
            actual: samples.len(),
        });
    }
    match method {
        PeriodMethod::SpectralPeak => spectral_peak_period(samples, dt, 0),
        PeriodMethod::Autocorrelation => autocorrelation_period(samples, dt, 0),
    }
}

/// Dominant period via the spectral-peak definition.
pub fn dominant_period(samples: &[f64], dt: f64) -> Result<f64> {
    dominant_period_with(samples, dt, PeriodMethod::SpectralPeak)
}

fn spectral_peak_period(samples: &[f64], dt: f64, component: usize) -> Result<f64> {
    let n = samples.len();
    let power = power_spectrum(samples);
    let mut best_bin = 0;
    let mut best_power = 0.0;
    for (bin, &p) in power.iter().enumerate().take(n / 2 + 1).skip(1) {
        if p > best_power {
            best_power = p;
            best_bin = bin;
        }
    }
    if best_bin == 0 || best_power <= 1e-24 {
        return Err(Error::FlatSpectrum { component });
    }
    Ok(n as f64 * dt / best_bin as f64)
}

fn autocorrelation_period(samples: &[f64], dt: f64, component: usize) -> Result<f64> {
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = samples.iter().map(|x| x - mean).collect();
    let variance: f64 = centered.iter().map(|x| x * x).sum::<f64>() / n as f64;
    if variance <= 1e-24 {
        return Err(Error::FlatSpectrum { component });
    }
    // Biased sample autocorrelation up to half the record length.
    let max_lag = n / 2;
    let acf: Vec<f64> = (0..max_lag)
        .map(|lag| {
            centered[..n - lag]
                .iter()
                .zip(&centered[lag..])
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / (n as f64 * variance)
        })
        .collect();
    let first_negative = acf
        .iter()
        .position(|&v| v < 0.0)
        .ok_or(Error::FlatSpectrum { component })?;
    let (peak_lag, _) = acf
        .iter()
        .enumerate()
        .skip(first_negative)
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .ok_or(Error::FlatSpectrum { component })?;
    if peak_lag == 0 {
        return Err(Error::FlatSpectrum { component });
    }
    Ok(peak_lag as f64 * dt)
}

/// Dominant period of every trajectory component.
pub fn nonlinear_times(traj: &Trajectory, method: PeriodMethod) -> Result<Vec<f64>> {
    (0..traj.dim())
        .map(|i| {
            let samples = traj.component(i);
            if samples.len() < MIN_SPECTRAL_SAMPLES {
                return Err(Error::TooShort {
                    context: "period estimation",
                    needed: MIN_SPECTRAL_SAMPLES,
                    actual: samples.len(),
                });
            }
            match method {
                PeriodMethod::SpectralPeak => spectral_peak_period(&samples, traj.dt_sample, i),
                PeriodMethod::Autocorrelation => {
                    autocorrelation_period(&samples, traj.dt_sample, i)
                }
            }
        })
        .collect()
}
