//! Deterministic hyperparameter grid search over (gamma, J, h, dt1, dt2).
//!
//! Every (cell, realization) pair derives its coupling seed from a stable
//! 64-bit mix of the master seed, the cell's parameter values and the
//! realization index, so results do not depend on worker count or execution
//! order. The (dt1, dt2) pair enters the mix in sorted order, which gives
//! swapped cells identical realizations and makes the dt1/dt2 heatmap exactly
//! symmetric wherever the embedding is.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt::sig17;
use crate::pipeline::{self, DatasetSpec, MetricConfig, TrainParams};

/// Axis grids and realization count of one sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub gamma_values: Vec<f64>,
    pub j_values: Vec<f64>,
    pub h_values: Vec<f64>,
    pub dt1_values: Vec<f64>,
    pub dt2_values: Vec<f64>,
    pub n_realizations: usize,
    pub master_seed: u64,
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        if self.gamma_values.is_empty()
            || self.j_values.is_empty()
            || self.h_values.is_empty()
            || self.dt1_values.is_empty()
            || self.dt2_values.is_empty()
        {
            return Err(Error::InvalidConfig("all sweep grids must be non-empty".into()));
        }
        if self.n_realizations == 0 {
            return Err(Error::InvalidConfig("n_realizations must be >= 1".into()));
        }
        Ok(())
    }

    pub fn n_cells(&self) -> usize {
        self.gamma_values.len()
            * self.j_values.len()
            * self.h_values.len()
            * self.dt1_values.len()
            * self.dt2_values.len()
    }
}

/// Fixed pipeline configuration shared by every cell of a sweep.
#[derive(Debug, Clone)]
pub struct SweepTask {
    pub data: DatasetSpec,
    pub n_qubits: usize,
    pub shift: i64,
    pub reservoir_len: usize,
    pub ridge_lambda: f64,
    /// Closed-loop horizon scored per realization; capped by n_test.
    pub n_forecast: usize,
    pub epsilon: f64,
}

/// Parameter values identifying one sweep cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepCellKey {
    pub gamma: f64,
    pub j: f64,
    pub h: f64,
    pub dt1: f64,
    pub dt2: f64,
}

/// Aggregated result of one cell. `mean_vpt` is `None` when every realization
/// failed; `rel_err` is additionally `None` when the mean is zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepCell {
    pub key: SweepCellKey,
    /// VPT in steps for each successful realization, in realization order.
    pub vpts: Vec<usize>,
    pub mean_vpt: Option<f64>,
    /// Standard deviation of the VPT divided by its mean.
    pub rel_err: Option<f64>,
    pub n_ok: usize,
    pub n_failed: usize,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn mix_f64(state: u64, value: f64) -> u64 {
    // Canonicalize -0.0 so equal values always hash equally.
    let bits = if value == 0.0 { 0u64 } else { value.to_bits() };
    splitmix64(state ^ bits)
}

/// Coupling seed of one (cell, realization) pair. Stable across execution
/// orders and invariant under the exchange of dt1 and dt2.
pub fn realization_seed(master_seed: u64, key: &SweepCellKey, realization: usize) -> u64 {
    let (lo, hi) = if key.dt1 <= key.dt2 {
        (key.dt1, key.dt2)
    } else {
        (key.dt2, key.dt1)
    };
    let mut s = splitmix64(master_seed);
    s = mix_f64(s, key.gamma);
    s = mix_f64(s, key.j);
    s = mix_f64(s, key.h);
    s = mix_f64(s, lo);
    s = mix_f64(s, hi);
    splitmix64(s ^ realization as u64)
}

/// Trains, forecasts and scores one configuration. `times` may hold one entry
/// (no multiplexing) or two.
pub fn evaluate_cell(
    task: &SweepTask,
    gamma: f64,
    j_scale: f64,
    h_field: f64,
    times: &[f64],
    seed: u64,
) -> Result<usize> {
    let params = TrainParams {
        n_qubits: task.n_qubits,
        coupling_scale: j_scale,
        transverse_field: h_field,
        times: times.to_vec(),
        gamma,
        shift: task.shift,
        reservoir_len: task.reservoir_len,
        ridge_lambda: task.ridge_lambda,
        seed,
    };
    let model = pipeline::train(&task.data, &params)?;
    let horizon = task.n_forecast.min(task.data.split.n_test);
    let pred = pipeline::forecast(&model, horizon)?;
    let truth_full = task.data.normalized_test_truth();
    let truth = truth_full.rows(0, horizon).into_owned();
    let metric = MetricConfig::from_truth(&truth, task.epsilon)?;
    pipeline::vpt(&pred, &truth, &metric)
}

fn aggregate(key: SweepCellKey, outcomes: Vec<Result<usize>>) -> SweepCell {
    let mut vpts = Vec::new();
    let mut n_failed = 0;
    for outcome in outcomes {
        match outcome {
            Ok(v) => vpts.push(v),
            Err(_) => n_failed += 1,
        }
    }
    let n_ok = vpts.len();
    let (mean_vpt, rel_err) = if n_ok == 0 {
        (None, None)
    } else {
        let mean = vpts.iter().sum::<usize>() as f64 / n_ok as f64;
        let var = vpts
            .iter()
            .map(|&v| (v as f64 - mean).powi(2))
            .sum::<f64>()
            / n_ok as f64;
        let rel = if mean > 0.0 {
            Some(var.sqrt() / mean)
        } else {
            None
        };
        (Some(mean), rel)
    };
    SweepCell {
        key,
        vpts,
        mean_vpt,
        rel_err,
        n_ok,
        n_failed,
    }
}

/// Runs the grid in canonical order (gamma, J, h, dt1, dt2 nested left to
/// right), invoking `on_cell` after each finished cell so callers can flush
/// partial results. Realizations of one cell run in parallel; the output is
/// independent of the worker count.
pub fn run_sweep_with<F>(grid: &SweepGrid, task: &SweepTask, mut on_cell: F) -> Result<Vec<SweepCell>>
where
    F: FnMut(&SweepCell),
{
    grid.validate()?;
    let mut cells = Vec::with_capacity(grid.n_cells());
    for &gamma in &grid.gamma_values {
        for &j in &grid.j_values {
            for &h in &grid.h_values {
                for &dt1 in &grid.dt1_values {
                    for &dt2 in &grid.dt2_values {
                        let key = SweepCellKey { gamma, j, h, dt1, dt2 };
                        let outcomes: Vec<Result<usize>> = (0..grid.n_realizations)
                            .into_par_iter()
                            .map(|r| {
                                let seed = realization_seed(grid.master_seed, &key, r);
                                evaluate_cell(task, gamma, j, h, &[dt1, dt2], seed)
                            })
                            .collect();
                        let cell = aggregate(key, outcomes);
                        on_cell(&cell);
                        cells.push(cell);
                    }
                }
            }
        }
    }
    Ok(cells)
}

/// [`run_sweep_with`] without a per-cell callback.
pub fn run_sweep(grid: &SweepGrid, task: &SweepTask) -> Result<Vec<SweepCell>> {
    run_sweep_with(grid, task, |_| {})
}

/// Highest mean VPT; ties broken by smaller relative error, then by
/// lexicographic parameter order (the scan order itself).
pub fn select_best(cells: &[SweepCell]) -> Result<&SweepCell> {
    let mut best: Option<&SweepCell> = None;
    for cell in cells {
        let Some(mean) = cell.mean_vpt else { continue };
        let better = match best {
            None => true,
            Some(current) => {
                let current_mean = current.mean_vpt.unwrap();
                if mean != current_mean {
                    mean > current_mean
                } else {
                    let a = cell.rel_err.unwrap_or(f64::INFINITY);
                    let b = current.rel_err.unwrap_or(f64::INFINITY);
                    // Strictly smaller error wins; otherwise keep the earlier
                    // (lexicographically smaller) cell.
                    a < b
                }
            }
        };
        if better {
            best = Some(cell);
        }
    }
    best.ok_or(Error::EmptySweep)
}

/// Sweep axes addressable in heatmap exports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Gamma,
    J,
    H,
    Dt1,
    Dt2,
}

impl Axis {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "gamma" => Ok(Axis::Gamma),
            "J" | "j" => Ok(Axis::J),
            "h" => Ok(Axis::H),
            "dt1" => Ok(Axis::Dt1),
            "dt2" => Ok(Axis::Dt2),
            other => Err(Error::UnknownAxis(other.to_string())),
        }
    }

    fn of(self, key: &SweepCellKey) -> f64 {
        match self {
            Axis::Gamma => key.gamma,
            Axis::J => key.j,
            Axis::H => key.h,
            Axis::Dt1 => key.dt1,
            Axis::Dt2 => key.dt2,
        }
    }
}

/// Which aggregate a heatmap reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeatmapValue {
    MeanVpt,
    RelErr,
}

/// Dense CSV matrix of `value` over two axes; the remaining three parameters
/// are pinned by `slice` (in gamma, J, h, dt1, dt2 order, skipping the two
/// chosen axes). The first row and column carry the axis values; missing
/// cells are emitted as empty fields.
pub fn export_heatmap(
    cells: &[SweepCell],
    axes: (Axis, Axis),
    slice: &[(Axis, f64)],
    value: HeatmapValue,
) -> Result<String> {
    let (row_axis, col_axis) = axes;
    if row_axis == col_axis {
        return Err(Error::InvalidConfig("heatmap axes must differ".into()));
    }
    let selected: Vec<&SweepCell> = cells
        .iter()
        .filter(|cell| {
            slice
                .iter()
                .all(|&(axis, pin)| axis.of(&cell.key) == pin)
        })
        .collect();
    if selected.is_empty() {
        return Err(Error::MissingSlice);
    }

    let mut row_values: Vec<f64> = selected.iter().map(|c| row_axis.of(&c.key)).collect();
    let mut col_values: Vec<f64> = selected.iter().map(|c| col_axis.of(&c.key)).collect();
    for list in [&mut row_values, &mut col_values] {
        list.sort_by(|a, b| a.partial_cmp(b).unwrap());
        list.dedup();
    }

    let mut out = String::new();
    for &cv in &col_values {
        out.push(',');
        out.push_str(&sig17(cv));
    }
    out.push('\n');
    for &rv in &row_values {
        out.push_str(&sig17(rv));
        for &cv in &col_values {
            out.push(',');
            let cell = selected
                .iter()
                .find(|c| row_axis.of(&c.key) == rv && col_axis.of(&c.key) == cv);
            let field = cell.and_then(|c| match value {
                HeatmapValue::MeanVpt => c.mean_vpt,
                HeatmapValue::RelErr => c.rel_err,
            });
            if let Some(v) = field {
                out.push_str(&sig17(v));
            }
        }
        out.push('\n');
    }
    Ok(out)
}

/// Flat results table: `gamma,J,h,dt1,dt2,mean_vpt,rel_err,n_ok`.
pub fn results_csv(cells: &[SweepCell]) -> String {
    let mut out = String::from("gamma,J,h,dt1,dt2,mean_vpt,rel_err,n_ok\n");
    for cell in cells {
        out.push_str(&results_csv_row(cell));
    }
    out
}

/// One data row of the results table, used for incremental flushing.
pub fn results_csv_row(cell: &SweepCell) -> String {
    let mut row = String::new();
    for v in [cell.key.gamma, cell.key.j, cell.key.h, cell.key.dt1, cell.key.dt2] {
        row.push_str(&sig17(v));
        row.push(',');
    }
    if let Some(mean) = cell.mean_vpt {
        row.push_str(&sig17(mean));
    }
    row.push(',');
    if let Some(rel) = cell.rel_err {
        row.push_str(&sig17(rel));
    }
    row.push(',');
    row.push_str(&cell.n_ok.to_string());
    row.push('\n');
    row
}
