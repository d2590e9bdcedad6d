//! Leading Lyapunov exponent by the Benettin two-trajectory method: a
//! fiducial and a perturbed trajectory are co-integrated, the separation is
//! renormalized to `d0` at fixed intervals, and the exponent is the average
//! logarithmic growth rate after an initial transient.

use crate::dynsys::{integrate_endpoint, IntegratorConfig};
use crate::error::{Error, Result};

/// Fraction of the renormalization windows discarded as transient.
const TRANSIENT_FRACTION: f64 = 0.1;

/// Estimates the leading Lyapunov exponent of `rhs` starting from `y0`.
/// The perturbed companion starts offset by `d0` along the first coordinate,
/// and the separation is rescaled back to `d0` every `renorm_dt` time units
/// over the whole `horizon`. The first 10% of the windows are discarded.
pub fn lyapunov_exponent<F>(
    rhs: F,
    y0: &[f64],
    horizon: f64,
    renorm_dt: f64,
    d0: f64,
    integrator: &IntegratorConfig,
) -> Result<f64>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    if !(renorm_dt > 0.0) || !(horizon > renorm_dt) {
        return Err(Error::InvalidConfig(
            "horizon must exceed renorm_dt > 0".into(),
        ));
    }
    if !(d0 > 0.0) {
        return Err(Error::InvalidConfig("d0 must be > 0".into()));
    }
    let n_windows = (horizon / renorm_dt).floor() as usize;
    let transient = ((n_windows as f64) * TRANSIENT_FRACTION).floor() as usize;
    if n_windows - transient < 1 {
        return Err(Error::TooShort {
            context: "lyapunov windows",
            needed: 2,
            actual: n_windows,
        });
    }

    let mut fiducial = y0.to_vec();
    let mut perturbed = y0.to_vec();
    perturbed[0] += d0;

    let mut log_sum = 0.0;
    let mut used = 0usize;
    for window in 0..n_windows {
        let t = window as f64 * renorm_dt;
        fiducial = integrate_endpoint(&rhs, &fiducial, renorm_dt, integrator)?;
        perturbed = integrate_endpoint(&rhs, &perturbed, renorm_dt, integrator)?;

        let mut dist_sq = 0.0;
        for (a, b) in fiducial.iter().zip(&perturbed) {
            dist_sq += (a - b) * (a - b);
        }
        let dist = dist_sq.sqrt();
        if !dist.is_finite() || dist == 0.0 {
            return Err(Error::SeparationLost { t: t + renorm_dt });
        }
        if window >= transient {
            log_sum += (dist / d0).ln();
            used += 1;
        }
        // Rescale the separation back to d0 along its current direction.
        let scale = d0 / dist;
        for (p, f) in perturbed.iter_mut().zip(&fiducial) {
            *p = f + (*p - f) * scale;
        }
    }
    Ok(log_sum / (used as f64 * renorm_dt))
}
