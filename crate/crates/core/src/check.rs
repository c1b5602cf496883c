use crate::error::{Error, Result};

/// A named numerical identity together with its measured residual.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn new(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            residual,
            tolerance,
        }
    }

    /// NaN residuals never pass.
    pub fn passed(&self) -> bool {
        self.residual <= self.tolerance
    }
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(Check::passed)
}

/// Returns the checks unchanged if they all pass, `ConsistencyViolation` otherwise.
pub fn ensure(checks: Vec<Check>) -> Result<Vec<Check>> {
    if all_passed(&checks) {
        Ok(checks)
    } else {
        Err(Error::ConsistencyViolation(checks))
    }
}

/// Largest residual, or 0 for an empty list.
pub fn worst(checks: &[Check]) -> f64 {
    checks.iter().map(|c| c.residual).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nan_residual_fails() {
        assert!(!Check::new("x", f64::NAN, 1.0).passed());
        assert!(Check::new("x", 1.0, 1.0).passed());
    }

    #[test]
    fn ensure_reports_failures() {
        let checks = vec![Check::new("a", 0.0, 1e-9), Check::new("b", 1.0, 1e-9)];
        match ensure(checks) {
            Err(Error::ConsistencyViolation(c)) => assert_eq!(c.len(), 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
