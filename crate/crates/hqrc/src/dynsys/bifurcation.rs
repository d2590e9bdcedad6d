//! Bifurcation scan of the five-mode Navier-Stokes system: for each forcing
//! value the kinetic energy is sampled after a transient and its interior
//! local extrema are recorded.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dynsys::{integrate, kinetic_energy, ns5_rhs, IntegratorConfig, Ns5System, Ns5Variant};

/// Per-forcing scan settings.
#[derive(Debug, Clone, Copy)]
pub struct BifurcationConfig {
    /// Time units integrated and discarded before recording.
    pub transient: f64,
    /// Length of the recorded window, in time units.
    pub window: f64,
    pub variant: Ns5Variant,
    pub dt_sample: f64,
    pub integrator: IntegratorConfig,
    /// Seed of the random perturbation applied to the forced equilibrium.
    pub seed: u64,
    /// Amplitude of that perturbation.
    pub perturbation: f64,
}

impl Default for BifurcationConfig {
    fn default() -> Self {
        Self {
            transient: 100.0,
            window: 100.0,
            variant: Ns5Variant::Conserving,
            dt_sample: 0.01,
            integrator: IntegratorConfig::default(),
            seed: 0,
            perturbation: 1e-3,
        }
    }
}

/// Extrema of the kinetic energy recorded at one forcing value. A failed
/// integration leaves `extrema` empty and stores the failure text.
#[derive(Debug, Clone)]
pub struct BifurcationPoint {
    pub forcing: f64,
    pub extrema: Vec<f64>,
    pub error: Option<String>,
}

/// Deterministic start near the forced equilibrium `(0, 0, 0, F/5, 0)`.
pub fn ns5_initial_condition(forcing: f64, perturbation: f64, seed: u64) -> [f64; 5] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y0 = [0.0, 0.0, 0.0, forcing / 5.0, 0.0];
    for value in y0.iter_mut() {
        *value += perturbation * rng.gen_range(-1.0..1.0);
    }
    y0
}

/// Interior strict local extrema of a sampled series; plateau points (equal
/// neighbors) are discarded. A relative prominence floor of 1e-12 of the
/// series scale keeps dense-output rounding wiggle on settled trajectories
/// from registering as extrema.
pub fn local_extrema(samples: &[f64]) -> Vec<f64> {
    let scale = samples.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let floor = 1e-12 * scale.max(1.0);
    let mut out = Vec::new();
    for k in 1..samples.len().saturating_sub(1) {
        let (prev, here, next) = (samples[k - 1], samples[k], samples[k + 1]);
        if (here > prev + floor && here > next + floor)
            || (here < prev - floor && here < next - floor)
        {
            out.push(here);
        }
    }
    out
}

/// Scans the forcing values in order; failures are recorded per value and do
/// not stop the scan. Values are processed in parallel, output order follows
/// the input order.
pub fn bifurcation_map(f_values: &[f64], cfg: &BifurcationConfig) -> Vec<BifurcationPoint> {
    f_values
        .par_iter()
        .map(|&forcing| {
            let sys = Ns5System::new(forcing, cfg.variant);
            let y0 = ns5_initial_condition(forcing, cfg.perturbation, cfg.seed);
            let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
                let u = [y[0], y[1], y[2], y[3], y[4]];
                dy.copy_from_slice(&ns5_rhs(&u, &sys));
            };
            let settle = crate::dynsys::integrate_endpoint(rhs, &y0, cfg.transient, &cfg.integrator);
            let result = settle.and_then(|start| {
                integrate(rhs, &start, cfg.window, &cfg.integrator, cfg.dt_sample)
            });
            match result {
                Ok(traj) => {
                    let energy: Vec<f64> = (0..traj.len())
                        .map(|k| {
                            let u = [
                                traj.states[(k, 0)],
                                traj.states[(k, 1)],
                                traj.states[(k, 2)],
                                traj.states[(k, 3)],
                                traj.states[(k, 4)],
                            ];
                            kinetic_energy(&u)
                        })
                        .collect();
                    BifurcationPoint {
                        forcing,
                        extrema: local_extrema(&energy),
                        error: None,
                    }
                }
                Err(err) => BifurcationPoint {
                    forcing,
                    extrema: Vec::new(),
                    error: Some(err.to_string()),
                },
            }
        })
        .collect()
}

/// Groups values into clusters of radius `tol` and counts the clusters;
/// used to distinguish limit cycles from chaotic bands.
pub fn cluster_count(values: &[f64], tol: f64) -> usize {
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut count = 0;
    let mut cluster_start = f64::NEG_INFINITY;
    for &v in &sorted {
        if count == 0 || v - cluster_start > tol {
            count += 1;
            cluster_start = v;
        }
    }
    count
}
