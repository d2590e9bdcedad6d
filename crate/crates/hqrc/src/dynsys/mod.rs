//! Benchmark data generators: the five-mode truncated Navier-Stokes system,
//! Lorenz-63, an adaptive Dormand-Prince integrator with dense output,
//! bifurcation maps, Lyapunov-exponent estimation and dominant-period
//! extraction.

mod bifurcation;
mod dopri;
mod lorenz;
mod lyapunov;
mod ns5;
mod spectral;

pub use bifurcation::{
    bifurcation_map, cluster_count, local_extrema, ns5_initial_condition, BifurcationConfig,
    BifurcationPoint,
};
pub use dopri::{integrate, integrate_endpoint, IntegratorConfig};
pub use lorenz::{lorenz_rhs, Lorenz63System};
pub use lyapunov::lyapunov_exponent;
pub use ns5::{enstrophy, kinetic_energy, ns5_nonlinear, ns5_rhs, Ns5System, Ns5Variant, K_SQUARED, WAVEVECTORS};
pub use spectral::{dominant_period, nonlinear_times, PeriodMethod, MIN_SPECTRAL_SAMPLES};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fmt::sig17;

/// Uniformly sampled multivariate time series; row `k` of `states` is the
/// state at `times[k] = k * dt_sample`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: DMatrix<f64>,
    pub dt_sample: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.ncols()
    }

    pub fn state(&self, k: usize) -> Vec<f64> {
        (0..self.dim()).map(|i| self.states[(k, i)]).collect()
    }

    pub fn component(&self, i: usize) -> Vec<f64> {
        (0..self.len()).map(|k| self.states[(k, i)]).collect()
    }

    /// CSV export with a `t` column followed by one column per component.
    /// Floats carry 17 significant digits so a written file reads back
    /// bit-identically.
    pub fn to_csv(&self, labels: &[&str]) -> String {
        assert_eq!(labels.len(), self.dim(), "one label per component");
        let mut out = String::from("t");
        for label in labels {
            out.push(',');
            out.push_str(label);
        }
        out.push('\n');
        for k in 0..self.len() {
            out.push_str(&sig17(self.times[k]));
            for i in 0..self.dim() {
                out.push(',');
                out.push_str(&sig17(self.states[(k, i)]));
            }
            out.push('\n');
        }
        out
    }

    /// Parses a CSV produced by [`Trajectory::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidConfig("empty trajectory file".into()))?;
        let n_cols = header.split(',').count();
        if n_cols < 2 || !header.starts_with("t,") {
            return Err(Error::InvalidConfig(
                "trajectory header must be `t,<component labels>`".into(),
            ));
        }
        let dim = n_cols - 1;
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (row, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let parse = |field: Option<&str>| -> Result<f64> {
                field
                    .and_then(|f| f.parse::<f64>().ok())
                    .ok_or_else(|| Error::InvalidConfig(format!("bad trajectory row {}", row + 2)))
            };
            times.push(parse(fields.next())?);
            for _ in 0..dim {
                values.push(parse(fields.next())?);
            }
            if fields.next().is_some() {
                return Err(Error::InvalidConfig(format!(
                    "trajectory row {} has too many fields",
                    row + 2
                )));
            }
        }
        if times.len() < 2 {
            return Err(Error::TooShort {
                context: "trajectory file",
                needed: 2,
                actual: times.len(),
            });
        }
        let dt_sample = times[1] - times[0];
        if !(dt_sample > 0.0) {
            return Err(Error::InvalidConfig(
                "trajectory times must be strictly increasing".into(),
            ));
        }
        for (k, &t) in times.iter().enumerate() {
            if (t - times[0] - k as f64 * dt_sample).abs() > 1e-9 * dt_sample {
                return Err(Error::InvalidConfig(
                    "trajectory times are not uniformly spaced".into(),
                ));
            }
        }
        let states = DMatrix::from_fn(times.len(), dim, |k, i| values[k * dim + i]);
        // Re-base times at zero so downstream indexing is offset-free.
        let t0 = times[0];
        let times = times.iter().map(|t| t - t0).collect();
        Ok(Self {
            times,
            states,
            dt_sample,
        })
    }
}

/// Settings for producing a benchmark trajectory: integrate `transient` time
/// units from `y0` first (discarded), then sample `t_end` further time units
/// on the uniform `dt_sample` grid.
#[derive(Debug, Clone, Copy)]
pub struct GenerateConfig {
    pub t_end: f64,
    pub transient: f64,
    pub dt_sample: f64,
    pub integrator: IntegratorConfig,
}

pub fn generate_trajectory<F>(rhs: F, y0: &[f64], cfg: &GenerateConfig) -> Result<Trajectory>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let start = if cfg.transient > 0.0 {
        integrate_endpoint(&rhs, y0, cfg.transient, &cfg.integrator)?
    } else {
        y0.to_vec()
    };
    integrate(&rhs, &start, cfg.t_end, &cfg.integrator, cfg.dt_sample)
}
