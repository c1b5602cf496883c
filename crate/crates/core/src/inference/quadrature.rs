//! Uniform trapezoid rule for integrals over a weak-measurement readout `z̄`.

use crate::error::{Error, Result};

/// Number of trapezoid nodes used when none is given.
pub const DEFAULT_NODES: usize = 2001;

/// Trapezoid rule on a window wide enough that Gaussian tails are negligible.
///
/// The window is `[min_z − w, max_z + w]` with `w = 8/√δ · max(1, max_z − min_z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub nodes: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            nodes: DEFAULT_NODES,
        }
    }
}

impl Quadrature {
    pub fn new(nodes: usize) -> Result<Self> {
        if nodes < 3 {
            return Err(Error::InvalidParameter(format!(
                "quadrature needs at least 3 nodes, got {nodes}"
            )));
        }
        Ok(Self { nodes })
    }

    /// Node positions and spacing for eigenvalues in `[min_z, max_z]` at strength `δ`.
    pub fn grid(&self, min_z: f64, max_z: f64, delta: f64) -> Result<(Vec<f64>, f64)> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "weak strength {delta} must be positive"
            )));
        }
        if self.nodes < 3 {
            return Err(Error::InvalidParameter(
                "quadrature needs at least 3 nodes".into(),
            ));
        }
        let spread = max_z - min_z;
        let half = 8.0 / delta.sqrt() * spread.max(1.0);
        let lo = min_z - half;
        let hi = max_z + half;
        let h = (hi - lo) / (self.nodes - 1) as f64;
        Ok(((0..self.nodes).map(|k| lo + k as f64 * h).collect(), h))
    }

    /// Trapezoid sum of samples taken on a grid with spacing `h`.
    pub fn integrate(values: &[f64], h: f64) -> f64 {
        match values {
            [] | [_] => 0.0,
            [first, inner @ .., last] => h * (0.5 * (first + last) + inner.iter().sum::<f64>()),
        }
    }
}
