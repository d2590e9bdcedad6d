//! The Lorenz-63 convection model.

use serde::{Deserialize, Serialize};

/// Lorenz-63 parameters; the chaotic defaults are sigma = 10, rho = 28,
/// beta = 8/3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lorenz63System {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
}

impl Default for Lorenz63System {
    fn default() -> Self {
        Self {
            sigma: 10.0,
            rho: 28.0,
            beta: 8.0 / 3.0,
        }
    }
}

impl Lorenz63System {
    pub fn rhs(&self, state: &[f64; 3]) -> [f64; 3] {
        lorenz_rhs(state, self)
    }

    /// The origin plus the two convection equilibria
    /// `C± = (±sqrt(beta (rho - 1)), ±sqrt(beta (rho - 1)), rho - 1)`.
    pub fn fixed_points(&self) -> [[f64; 3]; 3] {
        let r = (self.beta * (self.rho - 1.0)).max(0.0).sqrt();
        [
            [0.0, 0.0, 0.0],
            [r, r, self.rho - 1.0],
            [-r, -r, self.rho - 1.0],
        ]
    }
}

pub fn lorenz_rhs(state: &[f64; 3], sys: &Lorenz63System) -> [f64; 3] {
    let [x, y, z] = *state;
    [
        sys.sigma * (y - x),
        x * (sys.rho - z) - y,
        x * y - sys.beta * z,
    ]
}
