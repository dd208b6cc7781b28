//! Newton refinement of equilibria, Jacobians and linear stability.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::activation::{phi_derivative, ActivationKind};
use crate::compiler::{predicted_equilibrium, CompiledNetwork};
use crate::dynamics::rhs_y;

#[derive(Debug, Error)]
pub enum EquilibriaError {
    #[error("Newton did not reach tolerance {tol} in {iterations} iterations (best residual {residual})")]
    NoConvergence {
        tol: f64,
        iterations: usize,
        residual: f64,
        best: DVector<f64>,
    },
    #[error("singular Jacobian during Newton iteration")]
    SingularJacobian,
    #[error("piecewise-affine derivative undefined at kink (component {index})")]
    KinkPoint { index: usize },
    #[error(transparent)]
    Dynamics(#[from] crate::dynamics::DynamicsError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Stability {
    Stable,
    Saddle,
    Unstable,
    Undetermined,
}

/// A refined equilibrium with its spectrum.
#[derive(Clone, Debug)]
pub struct Equilibrium {
    pub state: DVector<f64>,
    pub vertex_label: Option<usize>,
    pub residual_norm: f64,
    pub eigenvalues: Vec<Complex64>,
    pub stability: Stability,
    pub iterations: usize,
}

/// JSON-facing mirror of [`Equilibrium`] with eigenvalues as `[re, im]`.
#[derive(Debug, Serialize)]
pub struct EquilibriumReport {
    pub state: Vec<f64>,
    pub vertex_label: Option<usize>,
    pub residual_norm: f64,
    pub eigenvalues: Vec<[f64; 2]>,
    pub stability: Stability,
}

impl From<&Equilibrium> for EquilibriumReport {
    fn from(eq: &Equilibrium) -> Self {
        EquilibriumReport {
            state: eq.state.iter().copied().collect(),
            vertex_label: eq.vertex_label,
            residual_norm: eq.residual_norm,
            eigenvalues: eq.eigenvalues.iter().map(|z| [z.re, z.im]).collect(),
            stability: eq.stability,
        }
    }
}

/// Classifies a spectrum: Stable when every real part is below `-margin`,
/// Saddle/Unstable for sign mixtures beyond the margin, Undetermined when
/// any real part falls inside `±margin`.
pub fn stability_of(eigenvalues: &[Complex64], margin: f64) -> Stability {
    if eigenvalues.iter().any(|z| z.re.abs() <= margin) {
        return Stability::Undetermined;
    }
    let n_neg = eigenvalues.iter().filter(|z| z.re < -margin).count();
    if n_neg == eigenvalues.len() {
        Stability::Stable
    } else if n_neg == 0 {
        Stability::Unstable
    } else {
        Stability::Saddle
    }
}

pub const STABILITY_MARGIN: f64 = 1e-8;

/// Jacobian of the input-free vector field: `(i,j) = -δ_ij + w_ij φ'(y_j)`.
/// For the piecewise-affine activation a component exactly at a kink is an
/// error; callers that can tolerate a one-sided value must nudge first.
pub fn jacobian(net: &CompiledNetwork, y: &DVector<f64>) -> Result<DMatrix<f64>, EquilibriaError> {
    let n = net.n();
    let mut slopes = DVector::zeros(n);
    for j in 0..n {
        slopes[j] = phi_derivative(net.kind(), net.act(), y[j])
            .map_err(|_| EquilibriaError::KinkPoint { index: j })?;
    }
    Ok(jacobian_from_slopes(net, &slopes))
}

fn jacobian_from_slopes(net: &CompiledNetwork, slopes: &DVector<f64>) -> DMatrix<f64> {
    let n = net.n();
    DMatrix::from_fn(n, n, |i, j| {
        let d = if i == j { -1.0 } else { 0.0 };
        d + net.weights()[(i, j)] * slopes[j]
    })
}

/// Jacobian with kink protection: any component within 1e-12 of a
/// piecewise-affine corner is shifted by 1e-9 away from the threshold (the
/// side the construction's equilibria occupy) before differentiating.
fn jacobian_nudged(net: &CompiledNetwork, y: &DVector<f64>) -> DMatrix<f64> {
    let n = net.n();
    let act = net.act();
    let mut slopes = DVector::zeros(n);
    for j in 0..n {
        let mut yj = y[j];
        if net.kind() == ActivationKind::PiecewiseAffine {
            let d = yj - act.theta;
            if (d.abs() - 2.0 * act.epsilon).abs() < crate::activation::KINK_TOL {
                yj += 1e-9 * d.signum();
            }
        }
        slopes[j] = phi_derivative(net.kind(), act, yj)
            .expect("nudged point cannot sit on a kink");
    }
    jacobian_from_slopes(net, &slopes)
}

/// Damped Newton iteration on `rhs_y = 0`. Halves the step up to 20 times
/// whenever the residual grows. Starts counting residuals before the first
/// step, so an exact guess converges in zero iterations.
pub fn refine_equilibrium(
    net: &CompiledNetwork,
    guess: &DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<Equilibrium, EquilibriaError> {
    assert!(tol > 0.0, "tolerance must be positive");
    let mut y = guess.clone();
    let mut f = rhs_y(net, &y, None)?;
    let mut res = f.amax();
    let mut iterations = 0;

    while res >= tol && iterations < max_iter {
        let jac = jacobian_nudged(net, &y);
        let lu = jac.lu();
        let step = match lu.solve(&f) {
            Some(s) => s,
            None => return Err(EquilibriaError::SingularJacobian),
        };
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..20 {
            let mut trial = y.clone();
            trial.axpy(-lambda, &step, 1.0);
            let f_trial = rhs_y(net, &trial, None)?;
            let res_trial = f_trial.amax();
            if res_trial < res || res_trial < tol {
                y = trial;
                f = f_trial;
                res = res_trial;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        iterations += 1;
        if !accepted {
            break;
        }
    }

    if res >= tol {
        return Err(EquilibriaError::NoConvergence {
            tol,
            iterations,
            residual: res,
            best: y,
        });
    }

    let eigenvalues: Vec<Complex64> = jacobian_nudged(net, &y)
        .complex_eigenvalues()
        .iter()
        .copied()
        .collect();
    let stability = stability_of(&eigenvalues, STABILITY_MARGIN);
    Ok(Equilibrium {
        state: y,
        vertex_label: None,
        residual_norm: res,
        eigenvalues,
        stability,
    iterations,
    })
}

/// Refines the predicted equilibrium of vertex `k`, labelling the result.
pub fn refine_template(
    net: &CompiledNetwork,
    k: usize,
    tol: f64,
    max_iter: usize,
) -> Result<Equilibrium, EquilibriaError> {
    let template = predicted_equilibrium(net, k);
    let mut eq = refine_equilibrium(net, &template.components, tol, max_iter)?;
    eq.vertex_label = Some(k);
    Ok(eq)
}

/// Refines all `N` vertex equilibria (index `v-1` holds vertex `v`).
pub fn refine_all_templates(
    net: &CompiledNetwork,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<Equilibrium>, EquilibriaError> {
    (1..=net.n())
        .map(|k| refine_template(net, k, tol, max_iter))
        .collect()
}
