//! End-to-end training and autoregressive forecasting.
//!
//! A trajectory is split into washout / training / test segments and each
//! component is affinely mapped to [0, 1] using the training segment alone.
//! Training drives the reservoir with the true normalized inputs (teacher
//! forcing) and fits the readout against the next normalized input.
//! Forecasting runs closed loop: each prediction is clamped to [0, 1] before
//! re-encoding into the Hamiltonian, while the emitted predictions themselves
//! are left unclamped.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dynsys::Trajectory;
use crate::error::{Error, Result};
use crate::qdyn::{
    self, EvolutionConfig, FeatureVector, HamiltonianSpec, StateVector,
};
use crate::readout::{self, ReadoutModel, ReadoutModelFile, TrainingSet};
use crate::reservoir::{self, ReservoirConfig, ReservoirState};

/// Segment sizes, in samples, taken from the start of the source trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub n_washout: usize,
    pub n_train: usize,
    pub n_test: usize,
}

/// Per-component affine map to [0, 1] fitted on the training segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

impl Normalization {
    /// Fits the map on rows `range` of `states`; constant components are
    /// rejected.
    pub fn fit(states: &DMatrix<f64>, range: std::ops::Range<usize>) -> Result<Self> {
        let dim = states.ncols();
        let mut mins = vec![f64::INFINITY; dim];
        let mut maxs = vec![f64::NEG_INFINITY; dim];
        for k in range {
            for i in 0..dim {
                mins[i] = mins[i].min(states[(k, i)]);
                maxs[i] = maxs[i].max(states[(k, i)]);
            }
        }
        for i in 0..dim {
            if !(mins[i] < maxs[i]) {
                return Err(Error::ConstantComponent { component: i });
            }
        }
        Ok(Self { mins, maxs })
    }

    pub fn dim(&self) -> usize {
        self.mins.len()
    }

    pub fn normalize(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter()
            .zip(self.mins.iter().zip(&self.maxs))
            .map(|(&x, (&lo, &hi))| (x - lo) / (hi - lo))
            .collect()
    }

    pub fn denormalize(&self, scaled: &[f64]) -> Vec<f64> {
        scaled
            .iter()
            .zip(self.mins.iter().zip(&self.maxs))
            .map(|(&y, (&lo, &hi))| lo + y * (hi - lo))
            .collect()
    }
}

/// Split trajectory with its normalization metadata.
#[derive(Debug, Clone)]
pub struct DatasetSpec {
    pub source: Trajectory,
    pub split: SplitSpec,
    pub normalization: Normalization,
}

/// Splits a trajectory and fits the per-component normalization on the
/// training segment.
pub fn make_dataset(source: Trajectory, split: SplitSpec) -> Result<DatasetSpec> {
    let needed = split.n_washout + split.n_train + split.n_test;
    if needed > source.len() {
        return Err(Error::TooShort {
            context: "dataset split",
            needed,
            actual: source.len(),
        });
    }
    if split.n_train == 0 {
        return Err(Error::InvalidConfig("n_train must be >= 1".into()));
    }
    let train_range = split.n_washout..split.n_washout + split.n_train;
    let normalization = Normalization::fit(&source.states, train_range)?;
    Ok(DatasetSpec {
        source,
        split,
        normalization,
    })
}

impl DatasetSpec {
    pub fn dim(&self) -> usize {
        self.source.dim()
    }

    /// Normalized input vector at sample `k` of the source trajectory.
    pub fn normalized_input(&self, k: usize) -> Vec<f64> {
        self.normalization.normalize(&self.source.state(k))
    }

    /// Normalized ground truth over the test segment, one row per step.
    pub fn normalized_test_truth(&self) -> DMatrix<f64> {
        let start = self.split.n_washout + self.split.n_train;
        DMatrix::from_fn(self.split.n_test, self.dim(), |k, i| {
            let raw = self.source.states[(start + k, i)];
            (raw - self.normalization.mins[i])
                / (self.normalization.maxs[i] - self.normalization.mins[i])
        })
    }
}

/// Hyperparameters of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainParams {
    pub n_qubits: usize,
    /// Coupling scale J; the matrix entries are drawn uniformly from [-J, J].
    pub coupling_scale: f64,
    pub transverse_field: f64,
    /// Multiplexed evolution times, one measurement block per entry.
    pub times: Vec<f64>,
    pub gamma: f64,
    pub shift: i64,
    pub reservoir_len: usize,
    pub ridge_lambda: f64,
    pub seed: u64,
}

/// Everything needed to continue a trained run in closed loop.
#[derive(Debug, Clone)]
pub struct ForecastModel {
    pub hamiltonian: HamiltonianSpec,
    pub evolution: EvolutionConfig,
    pub reservoir: ReservoirConfig,
    pub readout: ReadoutModel,
    pub normalization: Normalization,
    pub final_state: ReservoirState,
}

impl ForecastModel {
    /// Cross-checks feature length, reservoir length and readout shape.
    pub fn validate(&self) -> Result<()> {
        let feature_len =
            qdyn::feature_len(self.hamiltonian.n_qubits(), self.evolution.n_blocks());
        self.reservoir.validate(feature_len)?;
        if self.readout.weights.nrows() != self.reservoir.length {
            return Err(Error::DimensionMismatch {
                context: "readout rows",
                expected: self.reservoir.length,
                actual: self.readout.weights.nrows(),
            });
        }
        if self.readout.weights.ncols() != self.normalization.dim() {
            return Err(Error::DimensionMismatch {
                context: "readout columns",
                expected: self.normalization.dim(),
                actual: self.readout.weights.ncols(),
            });
        }
        if self.final_state.len() != self.reservoir.length {
            return Err(Error::DimensionMismatch {
                context: "final reservoir state",
                expected: self.reservoir.length,
                actual: self.final_state.len(),
            });
        }
        Ok(())
    }
}

/// Teacher-forced training: realizes the couplings from the seed, washes the
/// reservoir in, collects the post-washout reservoir states, and fits the
/// readout against the next-step normalized inputs.
pub fn train(data: &DatasetSpec, params: &TrainParams) -> Result<ForecastModel> {
    let d = data.dim();
    let split = data.split;
    // Targets are s_{k+1}, so one sample beyond the training segment is needed.
    if split.n_washout + split.n_train + 1 > data.source.len() {
        return Err(Error::TooShort {
            context: "training targets",
            needed: split.n_washout + split.n_train + 1,
            actual: data.source.len(),
        });
    }

    let couplings = qdyn::sample_couplings(params.n_qubits, params.coupling_scale, params.seed)?;
    let hamiltonian = HamiltonianSpec::with_identity_encoding(
        params.n_qubits,
        couplings,
        params.transverse_field,
        d,
    )?;
    let evolution = EvolutionConfig::new(
        params.times.clone(),
        StateVector::all_zero(params.n_qubits),
    )?;
    let reservoir_cfg = ReservoirConfig {
        gamma: params.gamma,
        shift: params.shift,
        length: params.reservoir_len,
    };
    let feature_len = qdyn::feature_len(params.n_qubits, params.times.len());
    reservoir_cfg.validate(feature_len)?;

    let mut state = ReservoirState::zeros(params.reservoir_len);
    for k in 0..split.n_washout {
        let features = step_features(&hamiltonian, &evolution, &data.normalized_input(k))?;
        state = reservoir::update(&state, &features, &reservoir_cfg)?;
    }

    let mut design = DMatrix::zeros(split.n_train, params.reservoir_len);
    let mut targets = DMatrix::zeros(split.n_train, d);
    for row in 0..split.n_train {
        let k = split.n_washout + row;
        let features = step_features(&hamiltonian, &evolution, &data.normalized_input(k))?;
        state = reservoir::update(&state, &features, &reservoir_cfg)?;
        for (j, &value) in state.values.iter().enumerate() {
            design[(row, j)] = value;
        }
        let next = data.normalized_input(k + 1);
        for (i, &value) in next.iter().enumerate() {
            targets[(row, i)] = value;
        }
    }

    let readout = readout::fit(&TrainingSet::new(design, targets)?, params.ridge_lambda)?;
    let model = ForecastModel {
        hamiltonian,
        evolution,
        reservoir: reservoir_cfg,
        readout,
        normalization: data.normalization.clone(),
        final_state: state,
    };
    model.validate()?;
    Ok(model)
}

fn step_features(
    hamiltonian: &HamiltonianSpec,
    evolution: &EvolutionConfig,
    input: &[f64],
) -> Result<FeatureVector> {
    qdyn::multiplex_features(hamiltonian, input, evolution)
}

/// Closed-loop forecast of `n_steps` normalized outputs. Predictions are fed
/// back clamped to the [0, 1] encoding domain; the returned rows are the raw
/// readout outputs.
pub fn forecast(model: &ForecastModel, n_steps: usize) -> Result<DMatrix<f64>> {
    let d = model.normalization.dim();
    let mut predictions = DMatrix::zeros(n_steps, d);
    let mut state = model.final_state.clone();
    for step in 0..n_steps {
        let output = readout::predict(&model.readout, &state)?;
        if output.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteForecast { step: step + 1 });
        }
        for (i, &value) in output.iter().enumerate() {
            predictions[(step, i)] = value;
        }
        if step + 1 < n_steps {
            let clamped: Vec<f64> = output.iter().map(|v| v.clamp(0.0, 1.0)).collect();
            let features = step_features(&model.hamiltonian, &model.evolution, &clamped)?;
            state = reservoir::update(&state, &features, &model.reservoir)?;
        }
    }
    Ok(predictions)
}

/// Valid-prediction-time settings: the error threshold and the per-component
/// standard deviations used for normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    pub epsilon: f64,
    pub sigmas: Vec<f64>,
}

impl MetricConfig {
    /// Computes the sigmas from ground-truth rows (population standard
    /// deviation per column).
    pub fn from_truth(truth: &DMatrix<f64>, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidConfig("epsilon must be > 0".into()));
        }
        if truth.nrows() == 0 {
            return Err(Error::TooShort {
                context: "metric reference segment",
                needed: 1,
                actual: 0,
            });
        }
        let n = truth.nrows() as f64;
        let mut sigmas = Vec::with_capacity(truth.ncols());
        for i in 0..truth.ncols() {
            let mean = truth.column(i).sum() / n;
            let var = truth.column(i).iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            let sigma = var.sqrt();
            if !(sigma > 0.0) {
                return Err(Error::ZeroSigma { component: i });
            }
            sigmas.push(sigma);
        }
        Ok(Self { epsilon, sigmas })
    }
}

/// Number of leading steps whose sigma-normalized RMS deviation stays within
/// `epsilon`; equal-length prediction and truth matrices are required.
pub fn vpt(pred: &DMatrix<f64>, truth: &DMatrix<f64>, cfg: &MetricConfig) -> Result<usize> {
    if pred.nrows() != truth.nrows() || pred.ncols() != truth.ncols() {
        return Err(Error::DimensionMismatch {
            context: "vpt operands",
            expected: truth.nrows() * truth.ncols(),
            actual: pred.nrows() * pred.ncols(),
        });
    }
    let d = truth.ncols();
    if cfg.sigmas.len() != d {
        return Err(Error::DimensionMismatch {
            context: "vpt sigmas",
            expected: d,
            actual: cfg.sigmas.len(),
        });
    }
    if cfg.sigmas.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::ZeroSigma {
            component: cfg.sigmas.iter().position(|&s| !(s > 0.0)).unwrap(),
        });
    }
    for t in 0..truth.nrows() {
        let mut acc = 0.0;
        for i in 0..d {
            let e = (pred[(t, i)] - truth[(t, i)]) / cfg.sigmas[i];
            acc += e * e;
        }
        if (acc / d as f64).sqrt() > cfg.epsilon {
            return Ok(t);
        }
    }
    Ok(truth.nrows())
}

/// VPT expressed in steps plus the rescaled variants the reports use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VptReport {
    pub steps: usize,
    /// Physical time: steps * dt_sample.
    pub time: f64,
    /// time / Lyapunov time, when a Lyapunov time is available.
    pub lyapunov_units: Option<f64>,
    /// time / max nonlinear time, when the periods are available.
    pub nonlinear_units: Option<f64>,
}

impl VptReport {
    pub fn new(
        steps: usize,
        dt_sample: f64,
        lyapunov_time: Option<f64>,
        nonlinear_time: Option<f64>,
    ) -> Self {
        let time = steps as f64 * dt_sample;
        Self {
            steps,
            time,
            lyapunov_units: lyapunov_time.map(|lt| time / lt),
            nonlinear_units: nonlinear_time.map(|tk| time / tk),
        }
    }
}

/// Serialized form of a [`ForecastModel`]; matrices are stored row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForecastModelFile {
    pub n_qubits: usize,
    pub couplings: Vec<f64>,
    pub transverse_field: f64,
    pub input_scales: Vec<f64>,
    pub input_coupling: Vec<f64>,
    pub evolution_times: Vec<f64>,
    /// Initial-state amplitudes as (re, im) pairs.
    pub initial_state: Vec<(f64, f64)>,
    pub gamma: f64,
    pub shift: i64,
    pub reservoir_len: usize,
    pub readout: ReadoutModelFile,
    pub norm_mins: Vec<f64>,
    pub norm_maxs: Vec<f64>,
    pub final_state: Vec<f64>,
}

impl ForecastModel {
    pub fn to_json(&self) -> String {
        let n = self.hamiltonian.n_qubits();
        let row_major = |m: &DMatrix<f64>| -> Vec<f64> {
            let mut out = Vec::with_capacity(m.nrows() * m.ncols());
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    out.push(m[(i, j)]);
                }
            }
            out
        };
        let file = ForecastModelFile {
            n_qubits: n,
            couplings: row_major(self.hamiltonian.couplings()),
            transverse_field: self.hamiltonian.transverse_field(),
            input_scales: self.hamiltonian.input_scales().iter().copied().collect(),
            input_coupling: row_major(self.hamiltonian.input_coupling()),
            evolution_times: self.evolution.times.clone(),
            initial_state: self
                .evolution
                .initial_state
                .amplitudes()
                .iter()
                .map(|z| (z.re, z.im))
                .collect(),
            gamma: self.reservoir.gamma,
            shift: self.reservoir.shift,
            reservoir_len: self.reservoir.length,
            readout: self.readout.to_file(),
            norm_mins: self.normalization.mins.clone(),
            norm_maxs: self.normalization.maxs.clone(),
            final_state: self.final_state.values.clone(),
        };
        serde_json::to_string_pretty(&file).expect("forecast model serializes")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let file: ForecastModelFile = serde_json::from_str(json)?;
        let n = file.n_qubits;
        let d = file.input_scales.len();
        if file.couplings.len() != n * n || file.input_coupling.len() != n * d {
            return Err(Error::InvalidConfig(
                "model file matrix sizes are inconsistent".into(),
            ));
        }
        let couplings = DMatrix::from_fn(n, n, |i, j| file.couplings[i * n + j]);
        let input_coupling = DMatrix::from_fn(n, d, |i, j| file.input_coupling[i * d + j]);
        let hamiltonian = HamiltonianSpec::new(
            n,
            couplings,
            file.transverse_field,
            nalgebra::DVector::from_vec(file.input_scales.clone()),
            input_coupling,
        )?;
        let amplitudes = nalgebra::DVector::from_vec(
            file.initial_state
                .iter()
                .map(|&(re, im)| num_complex::Complex64::new(re, im))
                .collect::<Vec<_>>(),
        );
        let evolution =
            EvolutionConfig::new(file.evolution_times.clone(), StateVector::new(amplitudes)?)?;
        let model = ForecastModel {
            hamiltonian,
            evolution,
            reservoir: ReservoirConfig {
                gamma: file.gamma,
                shift: file.shift,
                length: file.reservoir_len,
            },
            readout: ReadoutModel::from_file(&file.readout)?,
            normalization: Normalization {
                mins: file.norm_mins,
                maxs: file.norm_maxs,
            },
            final_state: ReservoirState {
                values: file.final_state,
            },
        };
        model.validate()?;
        Ok(model)
    }
}
