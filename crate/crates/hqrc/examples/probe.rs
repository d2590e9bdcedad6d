// scratch probe, not part of the repo
use hqrc::dynsys::*;
use hqrc::pipeline::*;
use hqrc::sweep::*;
use rayon::prelude::*;
use std::time::Instant;

fn main() {
    let t0 = Instant::now();
    for forcing in [28.718, 33.0] {
        let sys = Ns5System::new(forcing, Ns5Variant::Conserving);
        let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
            let u = [y[0], y[1], y[2], y[3], y[4]];
            dy.copy_from_slice(&ns5_rhs(&u, &sys));
        };
        let icfg = IntegratorConfig::default();
        let y0 = ns5_initial_condition(forcing, 1e-3, 0);
        let traj = generate_trajectory(&rhs, &y0, &GenerateConfig {
            t_end: 7601.0 * 0.01, transient: 100.0, dt_sample: 0.01, integrator: icfg,
        }).unwrap();
        let data = make_dataset(traj, SplitSpec { n_washout: 100, n_train: 5000, n_test: 2500 }).unwrap();
        let task = SweepTask { data, n_qubits: 5, shift: 1, reservoir_len: 270, ridge_lambda: 1e-6, n_forecast: 2500, epsilon: 0.3 };
        println!("== NS F={forcing} (conserving), 5-seed medians, pair (2,1):");
        let gammas = [0.0, 0.2, 0.4, 0.6, 0.8, 0.95];
        let meds: Vec<(f64, usize)> = gammas.par_iter().map(|&g| {
            let mut v: Vec<usize> = (0..5).map(|r| {
                evaluate_cell(&task, g, 0.01, 0.1, &[2.0, 1.0], 2000 + r).unwrap_or(0)
            }).collect();
            v.sort();
            (g, v[2])
        }).collect();
        for (g, m) in &meds { println!("  gamma {g}: median {m}"); }
    }
    println!("elapsed {:?}", t0.elapsed());
}
