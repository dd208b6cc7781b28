//! Activation functions: the logistic sigmoid and its piecewise-affine
//! counterpart, plus derivative and inverse.
//!
//! Both variants map the cell state to `[0,1]`, take the value 1/2 at the
//! threshold `θ` and have maximum slope `1/(4ε)` there. The piecewise
//! variant saturates exactly outside the band `|y - θ| ≤ 2ε`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ActivationError {
    #[error("piecewise-affine derivative is undefined at the kink y = {y}")]
    KinkPoint { y: f64 },
    #[error("argument {x} outside the domain (0, 1)")]
    DomainError { x: f64 },
}

/// Absolute half-width of the band around the piecewise-affine corners that
/// is treated as "on the kink".
pub const KINK_TOL: f64 = 1e-12;

/// Which activation nonlinearity the network uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationKind {
    Smooth,
    #[serde(rename = "piecewise")]
    PiecewiseAffine,
}

/// Slope scale `ε > 0` and threshold `θ` of the activation function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActivationParams {
    pub epsilon: f64,
    pub theta: f64,
}

impl ActivationParams {
    pub fn new(epsilon: f64, theta: f64) -> Self {
        assert!(epsilon > 0.0, "epsilon must be positive");
        ActivationParams { epsilon, theta }
    }
}

/// Evaluates the activation function. Saturates cleanly at the extremes;
/// the smooth branch is split at `θ` so `exp` never overflows.
pub fn phi(kind: ActivationKind, p: ActivationParams, y: f64) -> f64 {
    match kind {
        ActivationKind::Smooth => {
            let u = (y - p.theta) / p.epsilon;
            if u >= 0.0 {
                1.0 / (1.0 + (-u).exp())
            } else {
                let e = u.exp();
                e / (1.0 + e)
            }
        }
        ActivationKind::PiecewiseAffine => {
            let d = y - p.theta;
            if d < -2.0 * p.epsilon {
                0.0
            } else if d > 2.0 * p.epsilon {
                1.0
            } else {
                d / (4.0 * p.epsilon) + 0.5
            }
        }
    }
}

/// Derivative of the activation function. For the piecewise-affine kind the
/// corner abscissae `θ ± 2ε` are reported as an error so that callers must
/// choose a one-sided value consciously.
pub fn phi_derivative(
    kind: ActivationKind,
    p: ActivationParams,
    y: f64,
) -> Result<f64, ActivationError> {
    match kind {
        ActivationKind::Smooth => {
            let u = ((y - p.theta) / p.epsilon).abs();
            let e = (-u).exp();
            Ok(e / (p.epsilon * (1.0 + e) * (1.0 + e)))
        }
        ActivationKind::PiecewiseAffine => {
            let d = (y - p.theta).abs();
            // corner hits are detected with a small absolute tolerance so
            // that e.g. theta + 2*epsilon evaluated in floats still counts
            if (d - 2.0 * p.epsilon).abs() < KINK_TOL {
                Err(ActivationError::KinkPoint { y })
            } else if d < 2.0 * p.epsilon {
                Ok(1.0 / (4.0 * p.epsilon))
            } else {
                Ok(0.0)
            }
        }
    }
}

/// Inverse of the smooth activation: `θ - ε ln((1-x)/x)`, defined on (0,1).
pub fn phi_inverse_smooth(p: ActivationParams, x: f64) -> Result<f64, ActivationError> {
    if x <= 0.0 || x >= 1.0 || x.is_nan() {
        return Err(ActivationError::DomainError { x });
    }
    Ok(p.theta - p.epsilon * ((1.0 - x) / x).ln())
}
