use super::channel::{unitary_evolution, KrausChannel};
use super::matrix::{ensure_square, hermitian_defect, CMat};
use crate::error::{Error, Result};

/// Rule producing the channel that acts over an interval `(t1, t2)`.
///
/// The builtin families are time-homogeneous Markov semigroups, so the channel
/// only depends on `t2 - t1` and composes across adjacent intervals. `Fixed`
/// returns the same channel for every interval and does not compose.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelFamily {
    Identity {
        dim: usize,
    },
    /// Qubit decay with `λ(t) = 1 − e^{−γ t}`.
    AmplitudeDamping {
        gamma: f64,
    },
    /// Depolarizing semigroup whose depolarizing probability over a unit
    /// interval is `p`: `q(Δt) = 1 − (1 − p)^{Δt}`.
    Depolarizing {
        dim: usize,
        p: f64,
    },
    /// `exp(−i H Δt)`.
    Unitary {
        hamiltonian: CMat,
    },
    Fixed(KrausChannel),
}

impl ChannelFamily {
    pub fn dim(&self) -> usize {
        match self {
            Self::Identity { dim } | Self::Depolarizing { dim, .. } => *dim,
            Self::AmplitudeDamping { .. } => 2,
            Self::Unitary { hamiltonian } => hamiltonian.nrows(),
            Self::Fixed(ch) => ch.dim(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Identity { dim } if *dim == 0 => Err(Error::InvalidParameter(
                "dimension must be at least 1".into(),
            )),
            Self::AmplitudeDamping { gamma } if !(*gamma >= 0.0 && gamma.is_finite()) => Err(
                Error::InvalidParameter(format!("decay constant {gamma} must be nonnegative")),
            ),
            Self::Depolarizing { p, dim } if !(0.0..=1.0).contains(p) || *dim == 0 => Err(
                Error::InvalidParameter(format!("depolarizing probability {p} outside [0,1]")),
            ),
            Self::Unitary { hamiltonian } => {
                ensure_square(hamiltonian)?;
                let defect = hermitian_defect(hamiltonian);
                if defect > crate::tolerance::SQRT_HERMITIAN {
                    return Err(Error::NotHermitian { violation: defect });
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Channel acting over `(t1, t2)`, `t1 ≤ t2`.
    pub fn channel(&self, t1: f64, t2: f64) -> Result<KrausChannel> {
        if !(t1.is_finite() && t2.is_finite()) || t2 < t1 {
            return Err(Error::InvalidParameter(format!(
                "invalid interval ({t1}, {t2})"
            )));
        }
        self.validate()?;
        let dt = t2 - t1;
        match self {
            Self::Identity { dim } => Ok(KrausChannel::identity(*dim)),
            Self::AmplitudeDamping { gamma } => {
                if dt == 0.0 {
                    return Ok(KrausChannel::identity(2));
                }
                KrausChannel::amplitude_damping(-(-gamma * dt).exp_m1())
            }
            Self::Depolarizing { dim, p } => {
                if dt == 0.0 {
                    return Ok(KrausChannel::identity(*dim));
                }
                let q = if *p >= 1.0 {
                    1.0
                } else {
                    -(dt * (-p).ln_1p()).exp_m1()
                };
                KrausChannel::depolarizing(*dim, q)
            }
            Self::Unitary { hamiltonian } => {
                KrausChannel::unitary(unitary_evolution(hamiltonian, dt))
            }
            Self::Fixed(ch) => Ok(ch.clone()),
        }
    }
}
