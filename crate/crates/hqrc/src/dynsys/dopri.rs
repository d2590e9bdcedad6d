//! Embedded Dormand-Prince 5(4) integrator with PI step-size control and
//! fourth-order dense output, after Hairer, Norsett & Wanner's DOPRI5.

use nalgebra::DMatrix;

use crate::dynsys::Trajectory;
use crate::error::{Error, Result};

/// Adaptive step-size settings. `initial_step = 0` selects an automatic
/// estimate; `max_step` bounds every internal step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_step: f64,
    pub initial_step: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_step: f64::INFINITY,
            initial_step: 0.0,
        }
    }
}

impl IntegratorConfig {
    fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) {
            return Err(Error::InvalidConfig("tolerances must be > 0".into()));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::InvalidConfig("max_step must be > 0".into()));
        }
        if self.initial_step < 0.0 {
            return Err(Error::InvalidConfig("initial_step must be >= 0".into()));
        }
        Ok(())
    }
}

// Butcher tableau of the Dormand-Prince 5(4) pair.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [0.2];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
// Fifth-order weights; the seventh stage reuses f(t + h, y_new) (FSAL).
const B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
// Difference between the fifth- and embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
// Dense-output weights for the fifth interpolation coefficient.
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

const SAFETY: f64 = 0.9;
const STEP_BETA: f64 = 0.04;
const STEP_EXPO: f64 = 0.2 - STEP_BETA * 0.75;
const FAC_MIN: f64 = 0.2; // largest allowed step reduction factor is 1/FAC_MIN
const FAC_MAX: f64 = 10.0; // largest allowed step growth factor
const MAX_STEPS: usize = 50_000_000;

struct DenseSegment {
    t_start: f64,
    h: f64,
    cont: [Vec<f64>; 5],
}

impl DenseSegment {
    fn eval(&self, t: f64, out: &mut [f64]) {
        let s = if self.h == 0.0 {
            0.0
        } else {
            ((t - self.t_start) / self.h).clamp(0.0, 1.0)
        };
        let s1 = 1.0 - s;
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = self.cont[0][i]
                + s * (self.cont[1][i]
                    + s1 * (self.cont[2][i] + s * (self.cont[3][i] + s1 * self.cont[4][i])));
        }
    }
}

struct Stepper<'a, F> {
    rhs: &'a F,
    cfg: IntegratorConfig,
    t: f64,
    y: Vec<f64>,
    k1: Vec<f64>,
    h: f64,
    facold: f64,
    steps: usize,
}

impl<'a, F> Stepper<'a, F>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    fn new(rhs: &'a F, y0: &[f64], t_end: f64, cfg: IntegratorConfig) -> Result<Self> {
        cfg.validate()?;
        if !(t_end > 0.0) {
            return Err(Error::InvalidConfig("t_end must be > 0".into()));
        }
        let mut k1 = vec![0.0; y0.len()];
        rhs(0.0, y0, &mut k1);
        let h = if cfg.initial_step > 0.0 {
            cfg.initial_step.min(cfg.max_step).min(t_end)
        } else {
            initial_step_estimate(rhs, y0, &k1, t_end, &cfg)
        };
        Ok(Self {
            rhs,
            cfg,
            t: 0.0,
            y: y0.to_vec(),
            k1,
            h,
            facold: 1e-4,
            steps: 0,
        })
    }

    /// Advances by one accepted step, returning the dense-output coefficients
    /// for the covered interval.
    fn step(&mut self, t_end: f64) -> Result<DenseSegment> {
        let n = self.y.len();
        let mut k = vec![vec![0.0; n]; 7];
        k[0].copy_from_slice(&self.k1);
        let mut y_stage = vec![0.0; n];
        let mut y_new = vec![0.0; n];

        loop {
            self.steps += 1;
            if self.steps > MAX_STEPS {
                return Err(Error::StepSizeUnderflow { t: self.t });
            }
            let mut h = self.h.min(self.cfg.max_step);
            if self.t + h > t_end {
                h = t_end - self.t;
            }
            if h < 1e-14 * self.t.abs().max(1.0) {
                return Err(Error::StepSizeUnderflow { t: self.t });
            }

            let a_rows: [&[f64]; 5] = [&A2, &A3, &A4, &A5, &A6];
            for (stage, row) in a_rows.iter().enumerate() {
                for i in 0..n {
                    let mut acc = 0.0;
                    for (j, &a) in row.iter().enumerate() {
                        acc += a * k[j][i];
                    }
                    y_stage[i] = self.y[i] + h * acc;
                }
                (self.rhs)(self.t + C[stage + 1] * h, &y_stage, &mut k[stage + 1]);
            }
            // Fifth-order solution; B[6] = 0, so k7 does not contribute.
            for i in 0..n {
                let mut acc = 0.0;
                for (j, &b) in B.iter().enumerate().take(6) {
                    acc += b * k[j][i];
                }
                y_new[i] = self.y[i] + h * acc;
            }
            (self.rhs)(self.t + h, &y_new, &mut k[6]);

            let mut err = 0.0;
            for i in 0..n {
                let sk = self.cfg.abs_tol + self.cfg.rel_tol * self.y[i].abs().max(y_new[i].abs());
                let mut e = 0.0;
                for (j, &w) in E.iter().enumerate() {
                    e += w * k[j][i];
                }
                let scaled = h * e / sk;
                err += scaled * scaled;
            }
            err = (err / n as f64).sqrt();
            if !err.is_finite() {
                return Err(Error::StepSizeUnderflow { t: self.t });
            }

            let fac11 = err.powf(STEP_EXPO);
            if err <= 1.0 {
                // Accept; PI controller for the next step size.
                let fac = (fac11 / self.facold.powf(STEP_BETA) / SAFETY)
                    .clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                self.facold = err.max(1e-4);
                let h_next = h / fac;

                let mut cont = [
                    vec![0.0; n],
                    vec![0.0; n],
                    vec![0.0; n],
                    vec![0.0; n],
                    vec![0.0; n],
                ];
                for i in 0..n {
                    let ydiff = y_new[i] - self.y[i];
                    let bspl = h * k[0][i] - ydiff;
                    cont[0][i] = self.y[i];
                    cont[1][i] = ydiff;
                    cont[2][i] = bspl;
                    cont[3][i] = ydiff - h * k[6][i] - bspl;
                    let mut dsum = 0.0;
                    for (j, &d) in D.iter().enumerate() {
                        dsum += d * k[j][i];
                    }
                    cont[4][i] = h * dsum;
                }
                let segment = DenseSegment {
                    t_start: self.t,
                    h,
                    cont,
                };

                self.t += h;
                std::mem::swap(&mut self.y, &mut y_new);
                self.k1.copy_from_slice(&k[6]);
                self.h = h_next;
                return Ok(segment);
            }
            // Reject and retry with a smaller step.
            self.h = h / (fac11 / SAFETY).min(1.0 / FAC_MIN);
        }
    }
}

fn initial_step_estimate<F>(
    rhs: &F,
    y0: &[f64],
    f0: &[f64],
    t_end: f64,
    cfg: &IntegratorConfig,
) -> f64
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let n = y0.len();
    let mut dnf = 0.0;
    let mut dny = 0.0;
    for i in 0..n {
        let sk = cfg.abs_tol + cfg.rel_tol * y0[i].abs();
        dnf += (f0[i] / sk).powi(2);
        dny += (y0[i] / sk).powi(2);
    }
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
        1e-6
    } else {
        (dny / dnf).sqrt() * 0.01
    };
    h = h.min(cfg.max_step).min(t_end);

    let mut y1 = vec![0.0; n];
    for i in 0..n {
        y1[i] = y0[i] + h * f0[i];
    }
    let mut f1 = vec![0.0; n];
    rhs(h, &y1, &mut f1);
    let mut der2 = 0.0;
    for i in 0..n {
        let sk = cfg.abs_tol + cfg.rel_tol * y0[i].abs();
        der2 += ((f1[i] - f0[i]) / sk).powi(2);
    }
    der2 = der2.sqrt() / h;

    let der12 = der2.abs().max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 {
        (1e-6f64).max(h * 1e-3)
    } else {
        (0.01 / der12).powf(0.2)
    };
    (100.0 * h).min(h1).min(cfg.max_step).min(t_end)
}

/// Integrates `y' = rhs(t, y)` from `t = 0` to `t_end` and samples the dense
/// output on the uniform grid `0, dt_sample, 2 dt_sample, ...`.
pub fn integrate<F>(
    rhs: F,
    y0: &[f64],
    t_end: f64,
    cfg: &IntegratorConfig,
    dt_sample: f64,
) -> Result<Trajectory>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    if !(dt_sample > 0.0) {
        return Err(Error::InvalidConfig("dt_sample must be > 0".into()));
    }
    let n = y0.len();
    let n_samples = (t_end / dt_sample + 1e-9).floor() as usize + 1;
    let mut states = DMatrix::zeros(n_samples, n);
    let mut times = Vec::with_capacity(n_samples);
    for (i, &v) in y0.iter().enumerate() {
        states[(0, i)] = v;
    }
    times.push(0.0);

    let mut stepper = Stepper::new(&rhs, y0, t_end, *cfg)?;
    let mut next_sample = 1;
    let mut sample = vec![0.0; n];
    while next_sample < n_samples {
        let segment = stepper.step(t_end)?;
        let seg_end = segment.t_start + segment.h;
        while next_sample < n_samples {
            let ts = next_sample as f64 * dt_sample;
            if ts > seg_end + 1e-12 * seg_end.abs().max(1.0) {
                break;
            }
            segment.eval(ts, &mut sample);
            for (i, &v) in sample.iter().enumerate() {
                states[(next_sample, i)] = v;
            }
            times.push(ts);
            next_sample += 1;
        }
    }

    Ok(Trajectory {
        times,
        states,
        dt_sample,
    })
}

/// Integrates to `t_end` and returns only the final state.
pub fn integrate_endpoint<F>(
    rhs: F,
    y0: &[f64],
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let mut stepper = Stepper::new(&rhs, y0, t_end, *cfg)?;
    while stepper.t < t_end * (1.0 - 1e-14) {
        stepper.step(t_end)?;
    }
    Ok(stepper.y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn decay(_t: f64, y: &[f64], dy: &mut [f64]) {
        dy[0] = -y[0];
    }

    fn oscillator(_t: f64, y: &[f64], dy: &mut [f64]) {
        dy[0] = y[1];
        dy[1] = -y[0];
    }

    #[test]
    fn exponential_decay_endpoint() {
        let cfg = IntegratorConfig::default();
        let traj = integrate(decay, &[1.0], 1.0, &cfg, 0.1).unwrap();
        assert_eq!(traj.len(), 11);
        assert_relative_eq!(traj.states[(10, 0)], (-1.0f64).exp(), epsilon = 1e-9);
        // Dense output matches the analytic solution at interior samples too.
        for k in 0..11 {
            let t = traj.times[k];
            assert_relative_eq!(traj.states[(k, 0)], (-t).exp(), epsilon = 1e-9);
        }
    }

    #[test]
    fn harmonic_oscillator_full_period() {
        let cfg = IntegratorConfig::default();
        let period = 2.0 * std::f64::consts::PI;
        let end = integrate_endpoint(oscillator, &[1.0, 0.0], period, &cfg).unwrap();
        assert!((end[0] - 1.0).abs() < 1e-8);
        assert!(end[1].abs() < 1e-8);
    }

    #[test]
    fn sampling_grid_is_uniform() {
        let cfg = IntegratorConfig::default();
        let traj = integrate(oscillator, &[1.0, 0.0], 2.0, &cfg, 0.01).unwrap();
        assert_eq!(traj.len(), 201);
        for (k, &t) in traj.times.iter().enumerate() {
            assert!((t - k as f64 * 0.01).abs() <= 1e-12 * 0.01);
        }
    }

    #[test]
    fn fixed_step_order_is_at_least_fourth_and_a_half() {
        // Huge tolerances with a capped step turn the scheme into fixed-step
        // RK5; the endpoint error on a full oscillator period must then decay
        // like h^5.
        let period = 2.0 * std::f64::consts::PI;
        let error_at = |h: f64| -> f64 {
            let cfg = IntegratorConfig {
                abs_tol: 1e10,
                rel_tol: 1e10,
                max_step: h,
                initial_step: h,
            };
            let end = integrate_endpoint(oscillator, &[1.0, 0.0], period, &cfg).unwrap();
            ((end[0] - 1.0).powi(2) + end[1].powi(2)).sqrt()
        };
        let e1 = error_at(period / 50.0);
        let e2 = error_at(period / 100.0);
        let e3 = error_at(period / 200.0);
        let order12 = (e1 / e2).log2();
        let order23 = (e2 / e3).log2();
        assert!(order12 >= 4.5, "observed order {order12}");
        assert!(order23 >= 4.5, "observed order {order23}");
    }

    #[test]
    fn max_step_bounds_internal_steps() {
        // With a generous tolerance the controller would take long steps; a
        // max_step of 1e-2 forces at least t_end / max_step accepted steps.
        let cfg = IntegratorConfig {
            abs_tol: 1e-3,
            rel_tol: 1e-3,
            max_step: 1e-2,
            initial_step: 0.0,
        };
        let mut stepper = Stepper::new(&decay, &[1.0], 1.0, cfg).unwrap();
        let mut n_steps = 0;
        while stepper.t < 1.0 - 1e-14 {
            let seg = stepper.step(1.0).unwrap();
            assert!(seg.h <= 1e-2 + 1e-15);
            n_steps += 1;
        }
        assert!(n_steps >= 100);
    }

    #[test]
    fn stiff_blowup_reports_underflow() {
        // Finite-time blowup y' = y^2 from y(0) = 1 explodes at t = 1; the
        // step size collapses and the failure carries the last accepted time.
        let blowup = |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[0] * y[0];
        };
        let cfg = IntegratorConfig::default();
        let err = integrate_endpoint(blowup, &[1.0], 2.0, &cfg).unwrap_err();
        match err {
            Error::StepSizeUnderflow { t } => assert!((t - 1.0).abs() < 0.05, "t = {t}"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn trajectories_are_deterministic() {
        let cfg = IntegratorConfig::default();
        let a = integrate(oscillator, &[1.0, 0.0], 10.0, &cfg, 0.05).unwrap();
        let b = integrate(oscillator, &[1.0, 0.0], 10.0, &cfg, 0.05).unwrap();
        assert_eq!(a.states, b.states);
        assert_eq!(a.times, b.times);
    }
}
