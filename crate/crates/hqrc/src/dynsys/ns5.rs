//! Five-mode Galerkin truncation of the 2-D incompressible Navier-Stokes
//! equations on wavevectors k1 = (0,1), k2 = (1,1), k3 = (1,2), k4 = (2,-1),
//! k5 = (3,0), with Re = 1 and no Rayleigh drag. The linear damping of mode i
//! is |k_i|^2 and the forcing F acts on mode 4.
//!
//! Two readings of the quadratic terms are provided. `AsWritten` follows the
//! published equations verbatim. Their second interaction triad (modes 2, 4,
//! 5) does not conserve the modal kinetic energy and enstrophy, so
//! `Conserving` replaces `4 u5^2` in the u2 equation with `4 u4 u5` and flips
//! `7 u2 u5` in the u4 equation to `-7 u2 u5`; both triads then annihilate
//! both quadratic invariants term by term.

use serde::{Deserialize, Serialize};

/// Truncation wavevectors.
pub const WAVEVECTORS: [[i32; 2]; 5] = [[0, 1], [1, 1], [1, 2], [2, -1], [3, 0]];

/// Squared wavevector norms; these double as the Re = 1 damping coefficients
/// and as the enstrophy weights.
pub const K_SQUARED: [f64; 5] = [1.0, 2.0, 5.0, 5.0, 9.0];

/// Choice of quadratic terms (see module docs).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ns5Variant {
    AsWritten,
    Conserving,
}

impl std::fmt::Display for Ns5Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Ns5Variant::AsWritten => write!(f, "as_written"),
            Ns5Variant::Conserving => write!(f, "conserving"),
        }
    }
}

/// Forced, damped five-mode system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ns5System {
    /// Forcing amplitude on mode 4 (the kinetic Reynolds number).
    pub forcing: f64,
    pub variant: Ns5Variant,
}

impl Ns5System {
    pub fn new(forcing: f64, variant: Ns5Variant) -> Self {
        Self { forcing, variant }
    }

    /// The forced equilibrium (0, 0, 0, F/5, 0); every quadratic term
    /// vanishes there and damping balances the forcing exactly.
    pub fn fixed_point(&self) -> [f64; 5] {
        [0.0, 0.0, 0.0, self.forcing / 5.0, 0.0]
    }

    pub fn rhs(&self, u: &[f64; 5]) -> [f64; 5] {
        ns5_rhs(u, self)
    }
}

/// Quadratic interaction terms alone (no damping, no forcing). Used directly
/// when checking the inviscid, unforced invariants.
pub fn ns5_nonlinear(variant: Ns5Variant, u: &[f64; 5]) -> [f64; 5] {
    let [u1, u2, u3, u4, u5] = *u;
    match variant {
        Ns5Variant::AsWritten => [
            3.0 * u3 * u2,
            -4.0 * u3 * u1 + 4.0 * u5 * u5,
            u1 * u2,
            7.0 * u5 * u2,
            3.0 * u2 * u4,
        ],
        Ns5Variant::Conserving => [
            3.0 * u3 * u2,
            -4.0 * u3 * u1 + 4.0 * u4 * u5,
            u1 * u2,
            -7.0 * u2 * u5,
            3.0 * u2 * u4,
        ],
    }
}

/// Full right-hand side: quadratic terms, |k|^2 damping, forcing on mode 4.
pub fn ns5_rhs(u: &[f64; 5], sys: &Ns5System) -> [f64; 5] {
    let mut du = ns5_nonlinear(sys.variant, u);
    for i in 0..5 {
        du[i] -= K_SQUARED[i] * u[i];
    }
    du[3] += sys.forcing;
    du
}

/// Modal kinetic energy `E = 1/2 sum u_i^2`.
pub fn kinetic_energy(u: &[f64; 5]) -> f64 {
    0.5 * u.iter().map(|x| x * x).sum::<f64>()
}

/// Modal enstrophy `Omega = 1/2 sum |k_i|^2 u_i^2`.
pub fn enstrophy(u: &[f64; 5]) -> f64 {
    0.5 * u
        .iter()
        .zip(K_SQUARED.iter())
        .map(|(x, k2)| k2 * x * x)
        .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn forced_equilibrium_is_a_fixed_point_in_both_variants() {
        for variant in [Ns5Variant::AsWritten, Ns5Variant::Conserving] {
            for forcing in [28.718, 33.0] {
                let sys = Ns5System::new(forcing, variant);
                let du = sys.rhs(&sys.fixed_point());
                let norm: f64 = du.iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!(norm <= 1e-12, "{variant:?} F={forcing}: residual {norm}");
            }
        }
    }

    #[test]
    fn as_written_hand_substitution() {
        let sys = Ns5System::new(0.0, Ns5Variant::AsWritten);
        let du = sys.rhs(&[1.0, 1.0, 1.0, 1.0, 1.0]);
        assert_eq!(du, [2.0, -2.0, -4.0, 2.0, -6.0]);
    }

    #[test]
    fn conserving_nonlinearity_annihilates_both_invariants() {
        // For every state, the quadratic terms alone must leave both E and
        // Omega stationary: u . N(u) = 0 and (k^2 u) . N(u) = 0.
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let u = [(); 5].map(|_| rng.gen_range(-3.0..3.0));
            let n = ns5_nonlinear(Ns5Variant::Conserving, &u);
            let de: f64 = u.iter().zip(&n).map(|(x, y)| x * y).sum();
            let dw: f64 = u
                .iter()
                .zip(K_SQUARED.iter())
                .zip(&n)
                .map(|((x, k2), y)| k2 * x * y)
                .sum();
            assert!(de.abs() < 1e-12 * 27.0, "energy leak {de}");
            assert!(dw.abs() < 1e-11 * 243.0, "enstrophy leak {dw}");
        }
    }

    #[test]
    fn as_written_second_triad_breaks_the_invariants() {
        // Triad (2, 4, 5) coefficient sums under weights 1 and |k|^2 are
        // nonzero as printed: 4 + 7 + 3 and 2*4 + 5*7 + 9*3.
        let u = [0.0, 1.0, 0.0, 1.0, 1.0];
        let n = ns5_nonlinear(Ns5Variant::AsWritten, &u);
        let de: f64 = u.iter().zip(&n).map(|(x, y)| x * y).sum();
        let dw: f64 = u
            .iter()
            .zip(K_SQUARED.iter())
            .zip(&n)
            .map(|((x, k2), y)| k2 * x * y)
            .sum();
        assert!(de.abs() > 1.0);
        assert!(dw.abs() > 1.0);
    }

    #[test]
    fn invariant_values_on_unit_modes() {
        assert_eq!(kinetic_energy(&[1.0, 0.0, 0.0, 0.0, 0.0]), 0.5);
        assert_eq!(enstrophy(&[1.0, 0.0, 0.0, 0.0, 0.0]), 0.5);
        assert_eq!(kinetic_energy(&[0.0, 0.0, 0.0, 0.0, 1.0]), 0.5);
        assert_eq!(enstrophy(&[0.0, 0.0, 0.0, 0.0, 1.0]), 4.5);
        assert_eq!(kinetic_energy(&[0.0; 5]), 0.0);
        assert_eq!(enstrophy(&[0.0; 5]), 0.0);
    }

    #[test]
    fn damping_weights_match_squared_wavevectors() {
        for (k2, kv) in K_SQUARED.iter().zip(WAVEVECTORS.iter()) {
            let norm2 = (kv[0] * kv[0] + kv[1] * kv[1]) as f64;
            assert_eq!(*k2, norm2);
        }
    }
}
