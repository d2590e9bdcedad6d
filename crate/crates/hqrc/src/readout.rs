//! Ridge-regression readout.
//!
//! One weight column per output component, all trained against the same
//! stacked reservoir matrix: `w_i = (R^T R + lambda I)^{-1} R^T y_i`, solved
//! through a Cholesky factorization of the regularized normal equations
//! rather than an explicit inverse.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reservoir::ReservoirState;

/// Relative residual accepted from the normal-equation solve.
const RESIDUAL_TOL: f64 = 1e-8;

/// Trained linear readout; `weights` has shape `l_r x d_out`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutModel {
    pub weights: DMatrix<f64>,
    pub ridge_lambda: f64,
}

/// Design matrix of stacked reservoir rows and the matching targets.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    design: DMatrix<f64>,
    targets: DMatrix<f64>,
}

impl TrainingSet {
    pub fn new(design: DMatrix<f64>, targets: DMatrix<f64>) -> Result<Self> {
        if design.nrows() != targets.nrows() {
            return Err(Error::DimensionMismatch {
                context: "training targets",
                expected: design.nrows(),
                actual: targets.nrows(),
            });
        }
        if design.nrows() == 0 {
            return Err(Error::InvalidConfig(
                "training set must contain at least one row".into(),
            ));
        }
        Ok(Self { design, targets })
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    pub fn targets(&self) -> &DMatrix<f64> {
        &self.targets
    }
}

/// Solves the regularized normal equations for every target column.
pub fn fit(train: &TrainingSet, lambda: f64) -> Result<ReadoutModel> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidConfig("lambda must be >= 0".into()));
    }
    let r = &train.design;
    let mut gram = r.transpose() * r;
    for i in 0..gram.nrows() {
        gram[(i, i)] += lambda;
    }
    let rhs = r.transpose() * &train.targets;

    let chol = gram.clone().cholesky().ok_or_else(|| {
        Error::IllConditioned(format!(
            "normal equations are singular at lambda = {lambda:e}"
        ))
    })?;
    let weights = chol.solve(&rhs);

    // Residual check per target column, relative to the right-hand side.
    let residual = &gram * &weights - &rhs;
    for col in 0..rhs.ncols() {
        let rhs_norm = rhs.column(col).norm();
        let res_norm = residual.column(col).norm();
        if res_norm > RESIDUAL_TOL * rhs_norm {
            return Err(Error::IllConditioned(format!(
                "normal-equation residual {res_norm:.3e} exceeds {RESIDUAL_TOL:.1e} x {rhs_norm:.3e} on column {col}"
            )));
        }
    }

    Ok(ReadoutModel {
        weights,
        ridge_lambda: lambda,
    })
}

/// Applies the readout to one reservoir state.
pub fn predict(model: &ReadoutModel, r: &ReservoirState) -> Result<Vec<f64>> {
    if r.len() != model.weights.nrows() {
        return Err(Error::DimensionMismatch {
            context: "reservoir state fed to readout",
            expected: model.weights.nrows(),
            actual: r.len(),
        });
    }
    let mut out = vec![0.0; model.weights.ncols()];
    for (col, slot) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for row in 0..model.weights.nrows() {
            acc += model.weights[(row, col)] * r.values[row];
        }
        *slot = acc;
    }
    Ok(out)
}

/// On-disk form of a [`ReadoutModel`]: row-major weights plus layout metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReadoutModelFile {
    pub rows: usize,
    pub cols: usize,
    pub layout: String,
    pub ridge_lambda: f64,
    pub weights: Vec<f64>,
}

impl ReadoutModel {
    pub fn to_file(&self) -> ReadoutModelFile {
        let (rows, cols) = (self.weights.nrows(), self.weights.ncols());
        let mut weights = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                weights.push(self.weights[(i, j)]);
            }
        }
        ReadoutModelFile {
            rows,
            cols,
            layout: "row-major".to_string(),
            ridge_lambda: self.ridge_lambda,
            weights,
        }
    }

    pub fn from_file(file: &ReadoutModelFile) -> Result<Self> {
        if file.weights.len() != file.rows * file.cols {
            return Err(Error::DimensionMismatch {
                context: "readout weight array",
                expected: file.rows * file.cols,
                actual: file.weights.len(),
            });
        }
        if file.layout != "row-major" {
            return Err(Error::InvalidConfig(format!(
                "unsupported weight layout {:?}",
                file.layout
            )));
        }
        let weights =
            DMatrix::from_fn(file.rows, file.cols, |i, j| file.weights[i * file.cols + j]);
        Ok(Self {
            weights,
            ridge_lambda: file.ridge_lambda,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("readout model serializes")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let file: ReadoutModelFile = serde_json::from_str(json)?;
        Self::from_file(&file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn state(values: Vec<f64>) -> ReservoirState {
        ReservoirState { values }
    }

    #[test]
    fn scalar_normal_equation() {
        // R = (1, 1)^T, y = (1, 1)^T, lambda = 2 gives w = 2 / (2 + 2) = 0.5.
        let train = TrainingSet::new(
            DMatrix::from_column_slice(2, 1, &[1.0, 1.0]),
            DMatrix::from_column_slice(2, 1, &[1.0, 1.0]),
        )
        .unwrap();
        let model = fit(&train, 2.0).unwrap();
        assert_relative_eq!(model.weights[(0, 0)], 0.5, epsilon = 1e-14);
        let out = predict(&model, &state(vec![1.0])).unwrap();
        assert_relative_eq!(out[0], 0.5, epsilon = 1e-14);
    }

    #[test]
    fn square_invertible_design_interpolates() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = DMatrix::from_fn(6, 6, |_, _| rng.gen_range(-1.0..1.0))
            + DMatrix::identity(6, 6) * 3.0;
        let y = DMatrix::from_fn(6, 2, |_, _| rng.gen_range(-1.0..1.0));
        let train = TrainingSet::new(r.clone(), y.clone()).unwrap();
        let model = fit(&train, 0.0).unwrap();
        let fitted = r * &model.weights;
        assert!((fitted - y).norm() < 1e-8);
    }

    #[test]
    fn recovers_planted_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r = DMatrix::from_fn(40, 6, |_, _| rng.gen_range(-1.0..1.0));
        let truth = DMatrix::from_fn(6, 3, |_, _| rng.gen_range(-1.0..1.0));
        let y = &r * &truth;
        let model = fit(&TrainingSet::new(r, y).unwrap(), 1e-12).unwrap();
        assert!((&model.weights - &truth).norm() / truth.norm() < 1e-6);
    }

    #[test]
    fn singular_system_reports_ill_conditioned() {
        // Two identical columns make R^T R singular at lambda = 0.
        let r = DMatrix::from_column_slice(3, 2, &[1.0, 2.0, 3.0, 1.0, 2.0, 3.0]);
        let y = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 1.0]);
        let err = fit(&TrainingSet::new(r, y).unwrap(), 0.0).unwrap_err();
        assert!(matches!(err, Error::IllConditioned(_)));
    }

    #[test]
    fn predict_basics() {
        let model = ReadoutModel {
            weights: DMatrix::from_column_slice(3, 1, &[0.0, 0.0, 0.0]),
            ridge_lambda: 0.0,
        };
        assert_eq!(
            predict(&model, &state(vec![5.0, -1.0, 2.0])).unwrap(),
            vec![0.0]
        );
        let selector = ReadoutModel {
            weights: DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]),
            ridge_lambda: 0.0,
        };
        assert_eq!(
            predict(&selector, &state(vec![5.0, -1.0, 2.0])).unwrap(),
            vec![5.0]
        );
        assert!(matches!(
            predict(&selector, &state(vec![1.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn shrinkage_is_monotone_in_lambda() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = DMatrix::from_fn(15, 4, |_, _| rng.gen_range(-1.0..1.0));
        let y = DMatrix::from_fn(15, 1, |_, _| rng.gen_range(-1.0..1.0));
        let train = TrainingSet::new(r, y).unwrap();
        let lambdas = [0.0, 1e-6, 1e-3, 1e-1, 1.0, 10.0];
        let mut previous = f64::INFINITY;
        for &lambda in &lambdas {
            let norm = fit(&train, lambda).unwrap().weights.norm();
            assert!(norm <= previous + 1e-10, "norm grew at lambda {lambda}");
            previous = norm;
        }
    }

    #[test]
    fn permuting_reservoir_coordinates_preserves_predictions() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 10;
        let r = DMatrix::from_fn(30, n, |_, _| rng.gen_range(-1.0..1.0));
        let y = DMatrix::from_fn(30, 2, |_, _| rng.gen_range(-1.0..1.0));
        let probe: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();

        let mut perm: Vec<usize> = (0..n).collect();
        // Fixed cyclic permutation; any permutation works.
        perm.rotate_left(3);
        let r_perm = DMatrix::from_fn(30, n, |i, j| r[(i, perm[j])]);
        let probe_perm: Vec<f64> = perm.iter().map(|&j| probe[j]).collect();

        let base = fit(&TrainingSet::new(r, y.clone()).unwrap(), 1e-6).unwrap();
        let permuted = fit(&TrainingSet::new(r_perm, y).unwrap(), 1e-6).unwrap();
        let a = predict(&base, &state(probe)).unwrap();
        let b = predict(&permuted, &state(probe_perm)).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn agrees_with_explicit_inverse_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let r = DMatrix::from_fn(20, 8, |_, _| rng.gen_range(-1.0..1.0));
            let y = DMatrix::from_fn(20, 3, |_, _| rng.gen_range(-1.0..1.0));
            let lambda = 1e-4;
            let mut gram = r.transpose() * &r;
            for i in 0..8 {
                gram[(i, i)] += lambda;
            }
            let oracle = gram.try_inverse().unwrap() * r.transpose() * &y;
            let model = fit(&TrainingSet::new(r, y).unwrap(), lambda).unwrap();
            assert!((&model.weights - &oracle).norm() < 1e-9);
        }
    }

    #[test]
    fn json_round_trip() {
        let model = ReadoutModel {
            weights: DMatrix::from_fn(4, 2, |i, j| (i * 2 + j) as f64 * 0.25 - 1.0),
            ridge_lambda: 1e-6,
        };
        let restored = ReadoutModel::from_json(&model.to_json()).unwrap();
        assert_eq!(model, restored);
    }
}
