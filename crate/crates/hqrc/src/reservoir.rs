//! Classical shift-memory layer.
//!
//! Each measurement vector is spread over the reservoir by interleaving zeros
//! (`embed`), while the previous reservoir state is cyclically shifted and
//! damped, giving the linear recursion
//!
//! ```text
//! r_k = gamma * S_n r_{k-1} + B_lr m_k
//! ```
//!
//! With `gamma < 1` the contribution of the input `j` steps back carries
//! coefficient `gamma^j` exactly, since cyclic shifts preserve entries.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::qdyn::FeatureVector;

/// Parameters of the memory recursion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReservoirConfig {
    /// Memory retention `gamma` in `[0, 1]`.
    pub gamma: f64,
    /// Cyclic shift applied to the previous state each step; may be negative.
    pub shift: i64,
    /// Reservoir length `l_r`; must be a positive multiple of the feature
    /// length fed into [`update`].
    pub length: usize,
}

impl ReservoirConfig {
    pub fn validate(&self, feature_len: usize) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::InvalidConfig(format!(
                "gamma must lie in [0, 1], got {}",
                self.gamma
            )));
        }
        if self.length == 0 {
            return Err(Error::InvalidConfig("reservoir length must be > 0".into()));
        }
        if feature_len == 0 || self.length % feature_len != 0 {
            return Err(Error::EmbedLength {
                feature_len,
                reservoir_len: self.length,
            });
        }
        Ok(())
    }
}

/// Reservoir state `r_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirState {
    pub values: Vec<f64>,
}

impl ReservoirState {
    pub fn zeros(length: usize) -> Self {
        Self {
            values: vec![0.0; length],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Places entry `m[i]` at slot `q * i` of a length-`l_r` vector, where
/// `q = l_r / len(m)`, leaving the remaining slots zero.
pub fn embed(m: &[f64], reservoir_len: usize) -> Result<Vec<f64>> {
    if m.is_empty() || reservoir_len % m.len() != 0 {
        return Err(Error::EmbedLength {
            feature_len: m.len(),
            reservoir_len,
        });
    }
    let stride = reservoir_len / m.len();
    let mut out = vec![0.0; reservoir_len];
    for (i, &value) in m.iter().enumerate() {
        out[stride * i] = value;
    }
    Ok(out)
}

/// Cyclic permutation: `out[i] = r[(i + n) mod len]`. Positive `n` shifts the
/// entries forward, negative `n` backward.
pub fn shift(r: &[f64], n: i64) -> Vec<f64> {
    let len = r.len();
    if len == 0 {
        return Vec::new();
    }
    let offset = n.rem_euclid(len as i64) as usize;
    let mut out = Vec::with_capacity(len);
    out.extend_from_slice(&r[offset..]);
    out.extend_from_slice(&r[..offset]);
    out
}

/// One step of the memory recursion.
pub fn update(
    prev: &ReservoirState,
    m: &FeatureVector,
    cfg: &ReservoirConfig,
) -> Result<ReservoirState> {
    cfg.validate(m.len())?;
    if prev.len() != cfg.length {
        return Err(Error::DimensionMismatch {
            context: "previous reservoir state",
            expected: cfg.length,
            actual: prev.len(),
        });
    }
    let mut values = shift(&prev.values, cfg.shift);
    for value in values.iter_mut() {
        *value *= cfg.gamma;
    }
    let stride = cfg.length / m.len();
    for (i, &entry) in m.values.iter().enumerate() {
        values[stride * i] += entry;
    }
    Ok(ReservoirState { values })
}

/// Runs the recursion over a feature sequence and stacks the visited states
/// as matrix rows; row `k` is `r_k` after consuming `features[k]`.
pub fn run_sequence(
    features: &[FeatureVector],
    cfg: &ReservoirConfig,
    r0: &ReservoirState,
) -> Result<DMatrix<f64>> {
    let mut rows = DMatrix::zeros(features.len(), cfg.length);
    let mut state = r0.clone();
    for (k, m) in features.iter().enumerate() {
        state = update(&state, m, cfg)?;
        for (j, &value) in state.values.iter().enumerate() {
            rows[(k, j)] = value;
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fv(values: Vec<f64>) -> FeatureVector {
        FeatureVector { values }
    }

    #[test]
    fn embed_interleaves_zeros_equally() {
        let out = embed(&[1.0, 2.0, 3.0, 4.0], 8).unwrap();
        assert_eq!(out, vec![1.0, 0.0, 2.0, 0.0, 3.0, 0.0, 4.0, 0.0]);
    }

    #[test]
    fn embed_with_matching_length_is_identity() {
        let m = [0.5, -0.5, 0.25];
        assert_eq!(embed(&m, 3).unwrap(), m.to_vec());
    }

    #[test]
    fn embed_triple_stride() {
        let out = embed(&[1.0, 2.0, 3.0, 4.0], 12).unwrap();
        assert_eq!(
            out,
            vec![1.0, 0.0, 0.0, 2.0, 0.0, 0.0, 3.0, 0.0, 0.0, 4.0, 0.0, 0.0]
        );
    }

    #[test]
    fn embed_rejects_non_multiple_length() {
        assert!(matches!(
            embed(&[1.0, 2.0, 3.0], 10),
            Err(Error::EmbedLength { .. })
        ));
    }

    #[test]
    fn shift_examples() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(shift(&v, 1), vec![2.0, 3.0, 4.0, 1.0]);
        assert_eq!(shift(&v, 0), v.to_vec());
        assert_eq!(shift(&v, -1), vec![4.0, 1.0, 2.0, 3.0]);
        assert_eq!(shift(&v, 4), v.to_vec());
        assert_eq!(shift(&v, 5), shift(&v, 1));
    }

    #[test]
    fn shift_full_cycle_is_identity() {
        let v: Vec<f64> = (0..12).map(|x| x as f64).collect();
        let mut out = v.clone();
        for _ in 0..12 {
            out = shift(&out, 1);
        }
        assert_eq!(out, v);
    }

    #[test]
    fn update_memoryless_limit_reduces_to_embed() {
        let cfg = ReservoirConfig {
            gamma: 0.0,
            shift: 3,
            length: 8,
        };
        let prev = ReservoirState {
            values: vec![9.0; 8],
        };
        let m = fv(vec![1.0, 2.0, 3.0, 4.0]);
        let r = update(&prev, &m, &cfg).unwrap();
        assert_eq!(r.values, embed(&m.values, 8).unwrap());
    }

    #[test]
    fn update_hand_worked_example() {
        let cfg = ReservoirConfig {
            gamma: 0.5,
            shift: 1,
            length: 4,
        };
        let prev = ReservoirState {
            values: vec![1.0, 1.0, 1.0, 1.0],
        };
        let r = update(&prev, &fv(vec![1.0, 2.0]), &cfg).unwrap();
        assert_eq!(r.values, vec![1.5, 0.5, 2.5, 0.5]);
    }

    #[test]
    fn update_norm_constant_under_pure_shifts() {
        let cfg = ReservoirConfig {
            gamma: 1.0,
            shift: 1,
            length: 4,
        };
        let mut state = ReservoirState {
            values: vec![0.3, -0.7, 0.2, 0.9],
        };
        let norm0: f64 = state.values.iter().map(|x| x * x).sum::<f64>().sqrt();
        let zero = fv(vec![0.0, 0.0, 0.0, 0.0]);
        for _ in 0..7 {
            state = update(&state, &zero, &cfg).unwrap();
            let norm: f64 = state.values.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert_eq!(norm, norm0);
        }
    }

    #[test]
    fn run_sequence_empty_input_gives_empty_matrix() {
        let cfg = ReservoirConfig {
            gamma: 0.5,
            shift: 1,
            length: 4,
        };
        let rows = run_sequence(&[], &cfg, &ReservoirState::zeros(4)).unwrap();
        assert_eq!(rows.nrows(), 0);
        assert_eq!(rows.ncols(), 4);
    }

    #[test]
    fn run_sequence_unrolls_the_recursion() {
        let cfg = ReservoirConfig {
            gamma: 0.5,
            shift: 1,
            length: 4,
        };
        let m1 = fv(vec![1.0, 2.0]);
        let m2 = fv(vec![-3.0, 5.0]);
        let rows = run_sequence(
            &[m1.clone(), m2.clone()],
            &cfg,
            &ReservoirState::zeros(4),
        )
        .unwrap();
        assert_eq!(rows.nrows(), 2);
        let b1 = embed(&m1.values, 4).unwrap();
        let b2 = embed(&m2.values, 4).unwrap();
        let mut expected = shift(&b1, 1);
        for (j, value) in expected.iter_mut().enumerate() {
            *value = 0.5 * *value + b2[j];
        }
        let row1: Vec<f64> = (0..4).map(|j| rows[(1, j)]).collect();
        assert_eq!(row1, expected);
    }

    #[test]
    fn impulse_response_decays_geometrically() {
        let cfg = ReservoirConfig {
            gamma: 0.73,
            shift: 1,
            length: 12,
        };
        let impulse = fv(vec![1.0, -2.0, 0.5, 4.0]);
        let zero = fv(vec![0.0; 4]);
        let mut features = vec![impulse.clone()];
        features.extend(std::iter::repeat(zero).take(9));
        let rows = run_sequence(&features, &cfg, &ReservoirState::zeros(12)).unwrap();
        let base = embed(&impulse.values, 12).unwrap();
        let peak0 = base.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        let mut expected = 1.0;
        for k in 0..10 {
            let peak = (0..12).fold(0.0f64, |acc, j| acc.max(rows[(k, j)].abs()));
            assert!((peak - expected * peak0).abs() <= 1e-12);
            expected *= cfg.gamma;
        }
    }

    #[test]
    fn half_swap_of_feature_blocks_rotates_the_state() {
        // Swapping the two halves of every feature vector maps each reservoir
        // state to a fixed cyclic shift of itself by l_r / 2.
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let block = 4;
        let cfg = ReservoirConfig {
            gamma: 0.6,
            shift: 1,
            length: 3 * 2 * block,
        };
        let features: Vec<FeatureVector> = (0..8)
            .map(|_| fv((0..2 * block).map(|_| rng.gen_range(-1.0..1.0)).collect()))
            .collect();
        let swapped: Vec<FeatureVector> = features
            .iter()
            .map(|m| {
                let mut values = m.values[block..].to_vec();
                values.extend_from_slice(&m.values[..block]);
                fv(values)
            })
            .collect();
        let r0 = ReservoirState::zeros(cfg.length);
        let rows = run_sequence(&features, &cfg, &r0).unwrap();
        let rows_swapped = run_sequence(&swapped, &cfg, &r0).unwrap();
        let half = cfg.length / 2;
        for k in 0..rows.nrows() {
            let row: Vec<f64> = (0..cfg.length).map(|j| rows[(k, j)]).collect();
            let rotated = shift(&row, half as i64);
            let row_swapped: Vec<f64> = (0..cfg.length).map(|j| rows_swapped[(k, j)]).collect();
            assert_eq!(row_swapped, rotated);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn update_is_linear(seed in 0u64..500, gamma in 0.0f64..1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cfg = ReservoirConfig { gamma, shift: 2, length: 12 };
            let rand_vec = |rng: &mut ChaCha8Rng, n: usize| -> Vec<f64> {
                (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
            };
            let p1 = ReservoirState { values: rand_vec(&mut rng, 12) };
            let p2 = ReservoirState { values: rand_vec(&mut rng, 12) };
            let m1 = fv(rand_vec(&mut rng, 4));
            let m2 = fv(rand_vec(&mut rng, 4));
            let a = rng.gen_range(-2.0..2.0);

            let combined_prev = ReservoirState {
                values: p1.values.iter().zip(&p2.values).map(|(x, y)| x + a * y).collect(),
            };
            let combined_m = fv(m1.values.iter().zip(&m2.values).map(|(x, y)| x + a * y).collect());
            let lhs = update(&combined_prev, &combined_m, &cfg).unwrap();
            let r1 = update(&p1, &m1, &cfg).unwrap();
            let r2 = update(&p2, &m2, &cfg).unwrap();
            for j in 0..12 {
                let rhs = r1.values[j] + a * r2.values[j];
                prop_assert!((lhs.values[j] - rhs).abs() < 1e-12);
            }
        }
    }
}
