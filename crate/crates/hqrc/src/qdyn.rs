//! Exact simulation of the input-modulated transverse-field Ising reservoir.
//!
//! The Hamiltonian acting at input step `k` is
//!
//! ```text
//! H_k = sum_{i<j} J_ij sx_i sx_j  +  h sum_i sz_i  +  sum_i f_i(s_k) sx_i
//! ```
//!
//! with input fields `f_i(s) = sum_j beta_j C_ij s_j`. A pure state is evolved
//! under `H_k` for one or more durations, and single-site plus same-axis
//! two-site Pauli expectations are concatenated into a feature vector.
//!
//! Basis convention: amplitude index bits are ordered with qubit 1 as the most
//! significant bit, so for two qubits the basis is |00>, |01>, |10>, |11>.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Rejection threshold for the Hermitian symmetry residual of an evolution
/// generator.
pub const HERMITICITY_TOL: f64 = 1e-8;
/// Rejection threshold for the norm deviation of an input state.
pub const NORM_TOL: f64 = 1e-8;
/// Largest imaginary residual tolerated in a Pauli expectation value.
pub const IMAG_TOL: f64 = 1e-10;

/// Static description of the input-modulated Ising system.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSpec {
    n_qubits: usize,
    couplings: DMatrix<f64>,
    transverse_field: f64,
    input_scales: DVector<f64>,
    input_coupling: DMatrix<f64>,
}

impl HamiltonianSpec {
    /// Builds a spec, validating that `couplings` is symmetric with zero
    /// diagonal and that the input coupling matrix has shape `n_qubits x d`.
    pub fn new(
        n_qubits: usize,
        couplings: DMatrix<f64>,
        transverse_field: f64,
        input_scales: DVector<f64>,
        input_coupling: DMatrix<f64>,
    ) -> Result<Self> {
        if n_qubits < 1 {
            return Err(Error::InvalidConfig("n_qubits must be >= 1".into()));
        }
        if couplings.nrows() != n_qubits || couplings.ncols() != n_qubits {
            return Err(Error::DimensionMismatch {
                context: "coupling matrix",
                expected: n_qubits,
                actual: couplings.nrows().max(couplings.ncols()),
            });
        }
        for i in 0..n_qubits {
            if couplings[(i, i)] != 0.0 {
                return Err(Error::InvalidConfig(
                    "coupling matrix must have zero diagonal".into(),
                ));
            }
            for j in 0..i {
                if couplings[(i, j)] != couplings[(j, i)] {
                    return Err(Error::InvalidConfig(
                        "coupling matrix must be symmetric".into(),
                    ));
                }
            }
        }
        let d = input_scales.len();
        if d < 1 {
            return Err(Error::InvalidConfig("input dimension must be >= 1".into()));
        }
        if input_coupling.nrows() != n_qubits || input_coupling.ncols() != d {
            return Err(Error::DimensionMismatch {
                context: "input coupling matrix",
                expected: n_qubits * d,
                actual: input_coupling.nrows() * input_coupling.ncols(),
            });
        }
        Ok(Self {
            n_qubits,
            couplings,
            transverse_field,
            input_scales,
            input_coupling,
        })
    }

    /// Convention used throughout the pipeline: `beta_j = 1` and
    /// `C_ij = delta_ij` for `j <= d`, zero otherwise.
    pub fn with_identity_encoding(
        n_qubits: usize,
        couplings: DMatrix<f64>,
        transverse_field: f64,
        input_dim: usize,
    ) -> Result<Self> {
        let scales = DVector::from_element(input_dim, 1.0);
        let mut coupling = DMatrix::zeros(n_qubits, input_dim);
        for j in 0..input_dim.min(n_qubits) {
            coupling[(j, j)] = 1.0;
        }
        Self::new(n_qubits, couplings, transverse_field, scales, coupling)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn input_dim(&self) -> usize {
        self.input_scales.len()
    }

    pub fn couplings(&self) -> &DMatrix<f64> {
        &self.couplings
    }

    pub fn transverse_field(&self) -> f64 {
        self.transverse_field
    }

    pub fn input_scales(&self) -> &DVector<f64> {
        &self.input_scales
    }

    pub fn input_coupling(&self) -> &DMatrix<f64> {
        &self.input_coupling
    }

    /// Input fields `f_i = sum_j beta_j C_ij s_j`.
    pub fn input_fields(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "input vector",
                expected: self.input_dim(),
                actual: input.len(),
            });
        }
        let mut fields = vec![0.0; self.n_qubits];
        for (i, field) in fields.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, &s) in input.iter().enumerate() {
                acc += self.input_scales[j] * self.input_coupling[(i, j)] * s;
            }
            *field = acc;
        }
        Ok(fields)
    }
}

/// Normalized pure state of `n` qubits as a dense amplitude vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: DVector<Complex64>,
}

impl StateVector {
    /// Wraps an amplitude vector, requiring unit norm within 1e-10.
    pub fn new(amplitudes: DVector<Complex64>) -> Result<Self> {
        let deviation = (amplitudes.norm() - 1.0).abs();
        if deviation > 1e-10 {
            return Err(Error::NotNormalized { deviation });
        }
        Ok(Self { amplitudes })
    }

    /// Rescales an arbitrary nonzero vector to unit norm.
    pub fn from_unnormalized(amplitudes: DVector<Complex64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized { deviation: f64::INFINITY });
        }
        Ok(Self {
            amplitudes: amplitudes / Complex64::new(norm, 0.0),
        })
    }

    /// Computational basis state |index> of an `n_qubits` register.
    pub fn basis_state(n_qubits: usize, index: usize) -> Self {
        let dim = 1usize << n_qubits;
        assert!(index < dim, "basis index out of range");
        let mut amplitudes = DVector::zeros(dim);
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Self { amplitudes }
    }

    /// The all-zero product state |0...0>.
    pub fn all_zero(n_qubits: usize) -> Self {
        Self::basis_state(n_qubits, 0)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn n_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }
}

/// Set of evolution durations sharing one initial state; `times[l]` is the
/// multiplexing duration of block `l`.
#[derive(Debug, Clone)]
pub struct EvolutionConfig {
    pub times: Vec<f64>,
    pub initial_state: StateVector,
}

impl EvolutionConfig {
    pub fn new(times: Vec<f64>, initial_state: StateVector) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidConfig(
                "at least one evolution time is required".into(),
            ));
        }
        if times.iter().any(|&t| !(t >= 0.0) || !t.is_finite()) {
            return Err(Error::InvalidConfig(
                "evolution times must be finite and >= 0".into(),
            ));
        }
        Ok(Self {
            times,
            initial_state,
        })
    }

    pub fn n_blocks(&self) -> usize {
        self.times.len()
    }
}

/// Real Pauli expectation values in the canonical layout: per evolution time,
/// `3N` single-site expectations (axis-major x, y, z; site-minor) followed by
/// `3 N(N-1)/2` same-axis pair expectations with `i < j`, same axis ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Length of one measurement block for `n_qubits` sites.
pub fn feature_block_len(n_qubits: usize) -> usize {
    3 * n_qubits + 3 * n_qubits * (n_qubits - 1) / 2
}

/// Total feature length for `n_blocks` multiplexed evolution times.
pub fn feature_len(n_qubits: usize, n_blocks: usize) -> usize {
    n_blocks * feature_block_len(n_qubits)
}

/// Draws the strict upper triangle of an `n_qubits x n_qubits` coupling matrix
/// independently and uniformly from `[-j_max, j_max]`, then symmetrizes.
/// Identical `(j_max, seed)` pairs reproduce the same matrix.
pub fn sample_couplings(n_qubits: usize, j_max: f64, seed: u64) -> Result<DMatrix<f64>> {
    if !(j_max >= 0.0) {
        return Err(Error::InvalidConfig("j_max must be >= 0".into()));
    }
    let mut couplings = DMatrix::zeros(n_qubits, n_qubits);
    if j_max > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in 0..n_qubits {
            for j in (i + 1)..n_qubits {
                let value = rng.gen_range(-j_max..=j_max);
                couplings[(i, j)] = value;
                couplings[(j, i)] = value;
            }
        }
    }
    Ok(couplings)
}

/// Dense matrix of `H = sum_{i<j} J_ij sx_i sx_j + h sum_i sz_i + sum_i f_i sx_i`
/// for the given input. All entries are real; the matrix is returned in the
/// complex field expected by [`Propagator`].
pub fn build_hamiltonian(spec: &HamiltonianSpec, input: &[f64]) -> Result<DMatrix<Complex64>> {
    let fields = spec.input_fields(input)?;
    let n = spec.n_qubits();
    let dim = 1usize << n;
    let mut h = DMatrix::<Complex64>::zeros(dim, dim);

    let transverse = spec.transverse_field();
    for k in 0..dim {
        // sz eigenvalue on each site: +1 for bit 0, -1 for bit 1.
        let ones = (k as u64).count_ones() as i64;
        let diag = transverse * (n as i64 - 2 * ones) as f64;
        h[(k, k)] = Complex64::new(diag, 0.0);

        for i in 0..n {
            let mask_i = 1usize << (n - 1 - i);
            let field = fields[i];
            if field != 0.0 {
                let flipped = k ^ mask_i;
                h[(flipped, k)] += Complex64::new(field, 0.0);
            }
            for j in (i + 1)..n {
                let coupling = spec.couplings()[(i, j)];
                if coupling != 0.0 {
                    let mask_j = 1usize << (n - 1 - j);
                    let flipped = k ^ mask_i ^ mask_j;
                    h[(flipped, k)] += Complex64::new(coupling, 0.0);
                }
            }
        }
    }
    Ok(h)
}

/// Eigendecomposition of a Hermitian generator, reusable across several
/// evolution times of the same Hamiltonian.
#[derive(Debug, Clone)]
pub struct Propagator {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<Complex64>,
}

impl Propagator {
    /// Diagonalizes `h`, rejecting matrices whose Hermitian symmetry residual
    /// exceeds [`HERMITICITY_TOL`]. Purely real matrices take a real symmetric
    /// eigensolve, which is the common case for the Ising generator.
    pub fn new(h: &DMatrix<Complex64>) -> Result<Self> {
        if h.nrows() != h.ncols() {
            return Err(Error::DimensionMismatch {
                context: "evolution generator",
                expected: h.nrows(),
                actual: h.ncols(),
            });
        }
        let mut residual = 0.0f64;
        let mut all_real = true;
        for i in 0..h.nrows() {
            for j in 0..=i {
                let delta = (h[(i, j)] - h[(j, i)].conj()).norm();
                residual = residual.max(delta);
                if h[(i, j)].im != 0.0 || h[(j, i)].im != 0.0 {
                    all_real = false;
                }
            }
        }
        if residual > HERMITICITY_TOL {
            return Err(Error::NotHermitian {
                residual,
                tolerance: HERMITICITY_TOL,
            });
        }

        if all_real {
            let real = h.map(|z| z.re);
            let eig = real.symmetric_eigen();
            Ok(Self {
                eigenvalues: eig.eigenvalues,
                eigenvectors: eig.eigenvectors.map(|x| Complex64::new(x, 0.0)),
            })
        } else {
            let eig = h.clone().symmetric_eigen();
            Ok(Self {
                eigenvalues: eig.eigenvalues,
                eigenvectors: eig.eigenvectors,
            })
        }
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Applies `exp(-i H dt)` to `psi0`. `dt = 0` returns the input unchanged.
    pub fn evolve(&self, psi0: &StateVector, dt: f64) -> Result<StateVector> {
        if psi0.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "state vector",
                expected: self.dim(),
                actual: psi0.dim(),
            });
        }
        if dt == 0.0 {
            return Ok(psi0.clone());
        }
        let coords = self.eigenvectors.adjoint() * psi0.amplitudes();
        let mut rotated = coords;
        for (m, value) in rotated.iter_mut().enumerate() {
            let phase = -self.eigenvalues[m] * dt;
            *value *= Complex64::new(phase.cos(), phase.sin());
        }
        let amplitudes = &self.eigenvectors * rotated;
        Ok(StateVector { amplitudes })
    }
}

/// One-shot evolution `exp(-i h dt) psi0`; diagonalizes on every call.
/// Use [`Propagator`] directly when several `dt` values share one generator.
pub fn evolve(h: &DMatrix<Complex64>, psi0: &StateVector, dt: f64) -> Result<StateVector> {
    if !(dt >= 0.0) {
        return Err(Error::InvalidConfig("evolution time must be >= 0".into()));
    }
    let deviation = (psi0.norm() - 1.0).abs();
    if deviation > NORM_TOL {
        return Err(Error::NotNormalized { deviation });
    }
    Propagator::new(h)?.evolve(psi0, dt)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Axis {
    X,
    Y,
    Z,
}

const AXES: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

/// `<psi| P |psi>` for a product `P` of single-site Paulis on distinct sites.
fn pauli_expectation(psi: &DVector<Complex64>, n: usize, ops: &[(Axis, usize)]) -> Complex64 {
    let dim = psi.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..dim {
        let mut target = k;
        let mut phase = Complex64::new(1.0, 0.0);
        for &(axis, site) in ops {
            let mask = 1usize << (n - 1 - site);
            let bit_set = (k & mask) != 0;
            match axis {
                Axis::X => {
                    target ^= mask;
                }
                Axis::Y => {
                    // sy|0> = i|1>, sy|1> = -i|0>
                    phase *= if bit_set {
                        Complex64::new(0.0, -1.0)
                    } else {
                        Complex64::new(0.0, 1.0)
                    };
                    target ^= mask;
                }
                Axis::Z => {
                    if bit_set {
                        phase = -phase;
                    }
                }
            }
        }
        acc += psi[target].conj() * phase * psi[k];
    }
    acc
}

/// Measures the canonical single-block feature vector on `psi`: all
/// single-site expectations followed by all same-axis pair expectations.
pub fn measure_features(psi: &StateVector) -> Result<FeatureVector> {
    let deviation = (psi.norm() - 1.0).abs();
    if deviation > NORM_TOL {
        return Err(Error::NotNormalized { deviation });
    }
    let n = psi.n_qubits();
    let amplitudes = psi.amplitudes();
    let mut values = Vec::with_capacity(feature_block_len(n));

    for axis in AXES {
        for site in 0..n {
            let z = pauli_expectation(amplitudes, n, &[(axis, site)]);
            debug_assert!(z.im.abs() < IMAG_TOL);
            values.push(z.re);
        }
    }
    for axis in AXES {
        for i in 0..n {
            for j in (i + 1)..n {
                let z = pauli_expectation(amplitudes, n, &[(axis, i), (axis, j)]);
                debug_assert!(z.im.abs() < IMAG_TOL);
                values.push(z.re);
            }
        }
    }
    Ok(FeatureVector { values })
}

/// Full temporal-multiplexing feature map for one input step: the generator is
/// built and diagonalized once, the shared initial state is evolved
/// independently for every configured duration, and the measured blocks are
/// concatenated in the order of `cfg.times`.
pub fn multiplex_features(
    spec: &HamiltonianSpec,
    input: &[f64],
    cfg: &EvolutionConfig,
) -> Result<FeatureVector> {
    let h = build_hamiltonian(spec, input)?;
    let propagator = Propagator::new(&h)?;
    let mut values = Vec::with_capacity(feature_len(spec.n_qubits(), cfg.n_blocks()));
    for &dt in &cfg.times {
        let psi = propagator.evolve(&cfg.initial_state, dt)?;
        values.extend(measure_features(&psi)?.values);
    }
    Ok(FeatureVector { values })
}
