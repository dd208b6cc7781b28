//! Vector fields and integrators for the compiled network, in both the
//! natural `y`-coordinates and the transformed `J = φ(y)` coordinates.
//!
//! Deterministic runs use classical fixed-step RK4; noisy runs use
//! Euler–Maruyama with additive noise `σ dW_i` on the `y` variables. Both
//! are bitwise reproducible given identical inputs (and seed).

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activation::{phi, phi_inverse_smooth, ActivationKind, ActivationParams};
use crate::compiler::CompiledNetwork;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("state length {got} does not match network size {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("state became non-finite or exceeded the blow-up bound at t = {t}")]
    NonFiniteState { t: f64, partial: Trajectory },
    #[error("J-coordinates require every component in (0,1); component {index} = {value}")]
    DomainError { index: usize, value: f64 },
    #[error("J-coordinate dynamics are defined for the smooth activation only")]
    WrongActivation,
    #[error("dt must be positive, got {0}")]
    BadStep(f64),
}

/// Time-dependent input `I(t)`; the zero signal is the distinguished
/// input-free case.
#[derive(Clone)]
pub enum InputSignal {
    Zero,
    Constant(DVector<f64>),
    Custom(Arc<dyn Fn(f64, &mut DVector<f64>) + Send + Sync>),
}

impl InputSignal {
    pub fn is_zero(&self) -> bool {
        matches!(self, InputSignal::Zero)
    }

    /// Writes `I(t)` into `out`.
    pub fn eval_into(&self, t: f64, out: &mut DVector<f64>) {
        match self {
            InputSignal::Zero => out.fill(0.0),
            InputSignal::Constant(v) => out.copy_from(v),
            InputSignal::Custom(f) => {
                out.fill(0.0);
                f(t, out);
            }
        }
    }
}

impl fmt::Debug for InputSignal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputSignal::Zero => write!(f, "InputSignal::Zero"),
            InputSignal::Constant(v) => write!(f, "InputSignal::Constant({v:?})"),
            InputSignal::Custom(_) => write!(f, "InputSignal::Custom(..)"),
        }
    }
}

/// Additive noise amplitude and generator seed for stochastic runs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(sigma: f64, seed: u64) -> Self {
        assert!(sigma >= 0.0, "sigma must be nonnegative");
        NoiseSpec { sigma, seed }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolverKind {
    Rk4,
    EulerMaruyama,
    Rk4JCoords,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub solver: SolverKind,
    pub dt: f64,
    pub stride: usize,
    pub seed: Option<u64>,
    pub sigma: Option<f64>,
}

/// Time-stamped state samples from an integration run.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &DVector<f64> {
        self.states.last().expect("trajectory has samples")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory has samples")
    }

    /// Writes `t,<prefix>1,...,<prefix>N` rows with 17 significant digits.
    /// `map` transforms each stored component before writing (identity for
    /// raw states, the activation for J-output).
    pub fn write_csv<W: Write>(
        &self,
        mut out: W,
        prefix: &str,
        map: impl Fn(f64) -> f64,
    ) -> std::io::Result<()> {
        let n = self.states.first().map_or(0, |s| s.len());
        write!(out, "t")?;
        for j in 1..=n {
            write!(out, ",{prefix}{j}")?;
        }
        writeln!(out)?;
        for (t, state) in self.times.iter().zip(&self.states) {
            write!(out, "{t:.16e}")?;
            for v in state.iter() {
                write!(out, ",{:.16e}", map(*v))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

fn check_dims(net: &CompiledNetwork, y: &DVector<f64>) -> Result<(), DynamicsError> {
    if y.len() != net.n() {
        return Err(DynamicsError::DimensionMismatch {
            expected: net.n(),
            got: y.len(),
        });
    }
    Ok(())
}

/// `dy_i/dt = -y_i + Σ_j w_ij φ(y_j) + I_i`, written into `out`.
/// `phi_buf` is scratch space of the same length.
fn rhs_y_into(
    net: &CompiledNetwork,
    y: &DVector<f64>,
    input: Option<&DVector<f64>>,
    phi_buf: &mut DVector<f64>,
    out: &mut DVector<f64>,
) {
    net.phi_into(y, phi_buf);
    net.weights().mul_to(phi_buf, out);
    out.axpy(-1.0, y, 1.0);
    if let Some(inp) = input {
        *out += inp;
    }
}

/// Allocating evaluation of the `y` vector field.
pub fn rhs_y(
    net: &CompiledNetwork,
    y: &DVector<f64>,
    input: Option<&DVector<f64>>,
) -> Result<DVector<f64>, DynamicsError> {
    check_dims(net, y)?;
    if let Some(inp) = input {
        check_dims(net, inp)?;
    }
    let mut phi_buf = DVector::zeros(net.n());
    let mut out = DVector::zeros(net.n());
    rhs_y_into(net, y, input, &mut phi_buf, &mut out);
    Ok(out)
}

/// `dJ_i/dt = (1/ε) J_i (1-J_i) (-φ⁻¹(J_i) + Σ_j w_ij J_j)`; smooth
/// activation only, every component strictly inside (0,1).
pub fn rhs_j(net: &CompiledNetwork, j: &DVector<f64>) -> Result<DVector<f64>, DynamicsError> {
    check_dims(net, j)?;
    if net.kind() != ActivationKind::Smooth {
        return Err(DynamicsError::WrongActivation);
    }
    let mut out = DVector::zeros(net.n());
    rhs_j_into(net, j, &mut out)?;
    Ok(out)
}

fn rhs_j_into(
    net: &CompiledNetwork,
    j: &DVector<f64>,
    out: &mut DVector<f64>,
) -> Result<(), DynamicsError> {
    for (idx, &v) in j.iter().enumerate() {
        if !(v > 0.0 && v < 1.0) {
            return Err(DynamicsError::DomainError {
                index: idx,
                value: v,
            });
        }
    }
    let act = net.act();
    net.weights().mul_to(j, out);
    for i in 0..j.len() {
        let ji = j[i];
        let inv = phi_inverse_smooth(act, ji).expect("domain checked above");
        out[i] = (ji * (1.0 - ji) / act.epsilon) * (out[i] - inv);
    }
    Ok(())
}

/// Blow-up bound: the flow of the input-free system is globally bounded, so
/// exceeding this signals a diverging step.
fn blow_up_bound(net: &CompiledNetwork) -> f64 {
    let w = net.params();
    10.0 * net.n() as f64
        * (w.w_s.abs() + w.w_m.abs() + w.max_abs_wp() + w.w_t.abs()).max(1.0)
}

/// Classical fixed-step 4th-order Runge–Kutta on the `y` equations.
/// Records every `stride`-th step (plus the initial and final state).
pub fn integrate_ode(
    net: &CompiledNetwork,
    y0: &DVector<f64>,
    t_span: (f64, f64),
    input: &InputSignal,
    dt: f64,
    stride: usize,
) -> Result<Trajectory, DynamicsError> {
    check_dims(net, y0)?;
    if dt <= 0.0 {
        return Err(DynamicsError::BadStep(dt));
    }
    let stride = stride.max(1);
    let (t0, t1) = t_span;
    let n_steps = ((t1 - t0) / dt).round().max(0.0) as usize;
    let n = net.n();
    let meta = TrajectoryMeta {
        solver: SolverKind::Rk4,
        dt,
        stride,
        seed: None,
        sigma: None,
    };

    let mut y = y0.clone();
    let mut times = Vec::with_capacity(n_steps / stride + 2);
    let mut states = Vec::with_capacity(n_steps / stride + 2);
    times.push(t0);
    states.push(y.clone());

    let mut phi_buf = DVector::zeros(n);
    let mut k1 = DVector::zeros(n);
    let mut k2 = DVector::zeros(n);
    let mut k3 = DVector::zeros(n);
    let mut k4 = DVector::zeros(n);
    let mut tmp = DVector::zeros(n);
    let mut inp = DVector::zeros(n);
    let bound = blow_up_bound(net);

    for step in 0..n_steps {
        let t = t0 + step as f64 * dt;
        rk4_step(
            net, &mut y, t, dt, input, &mut phi_buf, &mut k1, &mut k2, &mut k3, &mut k4, &mut tmp,
            &mut inp,
        );
        let t_next = t0 + (step + 1) as f64 * dt;
        if !state_ok(&y, bound) {
            let partial = Trajectory {
                times,
                states,
                meta,
            };
            return Err(DynamicsError::NonFiniteState {
                t: t_next,
                partial,
            });
        }
        if (step + 1) % stride == 0 || step + 1 == n_steps {
            times.push(t_next);
            states.push(y.clone());
        }
    }
    Ok(Trajectory {
        times,
        states,
        meta,
    })
}

#[allow(clippy::too_many_arguments)]
fn rk4_step(
    net: &CompiledNetwork,
    y: &mut DVector<f64>,
    t: f64,
    dt: f64,
    input: &InputSignal,
    phi_buf: &mut DVector<f64>,
    k1: &mut DVector<f64>,
    k2: &mut DVector<f64>,
    k3: &mut DVector<f64>,
    k4: &mut DVector<f64>,
    tmp: &mut DVector<f64>,
    inp: &mut DVector<f64>,
) {
    let zero = input.is_zero();
    let eval = |time: f64, state: &DVector<f64>, pb: &mut DVector<f64>, buf: &mut DVector<f64>,
                inp: &mut DVector<f64>| {
        if zero {
            rhs_y_into(net, state, None, pb, buf);
        } else {
            input.eval_into(time, inp);
            rhs_y_into(net, state, Some(inp), pb, buf);
        }
    };
    eval(t, y, phi_buf, k1, inp);
    tmp.copy_from(y);
    tmp.axpy(0.5 * dt, k1, 1.0);
    eval(t + 0.5 * dt, tmp, phi_buf, k2, inp);
    tmp.copy_from(y);
    tmp.axpy(0.5 * dt, k2, 1.0);
    eval(t + 0.5 * dt, tmp, phi_buf, k3, inp);
    tmp.copy_from(y);
    tmp.axpy(dt, k3, 1.0);
    eval(t + dt, tmp, phi_buf, k4, inp);
    y.axpy(dt / 6.0, k1, 1.0);
    y.axpy(dt / 3.0, k2, 1.0);
    y.axpy(dt / 3.0, k3, 1.0);
    y.axpy(dt / 6.0, k4, 1.0);
}

fn state_ok(y: &DVector<f64>, bound: f64) -> bool {
    y.iter().all(|v| v.is_finite() && v.abs() <= bound)
}

/// Euler–Maruyama on `dy = f(y) dt + σ dW`: one independent standard normal
/// increment per component per step, drawn from a ChaCha8 stream seeded by
/// `noise.seed`. With `σ = 0` the path equals the explicit-Euler path.
pub fn integrate_sde(
    net: &CompiledNetwork,
    y0: &DVector<f64>,
    t_span: (f64, f64),
    noise: &NoiseSpec,
    dt: f64,
    stride: usize,
) -> Result<Trajectory, DynamicsError> {
    check_dims(net, y0)?;
    if dt <= 0.0 {
        return Err(DynamicsError::BadStep(dt));
    }
    let stride = stride.max(1);
    let (t0, t1) = t_span;
    let n_steps = ((t1 - t0) / dt).round().max(0.0) as usize;
    let n = net.n();
    let meta = TrajectoryMeta {
        solver: SolverKind::EulerMaruyama,
        dt,
        stride,
        seed: Some(noise.seed),
        sigma: Some(noise.sigma),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let sqrt_dt = dt.sqrt();
    let mut y = y0.clone();
    let mut times = Vec::with_capacity(n_steps / stride + 2);
    let mut states = Vec::with_capacity(n_steps / stride + 2);
    times.push(t0);
    states.push(y.clone());

    let mut phi_buf = DVector::zeros(n);
    let mut drift = DVector::zeros(n);
    let bound = blow_up_bound(net);

    for step in 0..n_steps {
        rhs_y_into(net, &y, None, &mut phi_buf, &mut drift);
        y.axpy(dt, &drift, 1.0);
        if noise.sigma > 0.0 {
            for i in 0..n {
                let z: f64 = StandardNormal.sample(&mut rng);
                y[i] += noise.sigma * sqrt_dt * z;
            }
        }
        let t_next = t0 + (step + 1) as f64 * dt;
        if !state_ok(&y, bound) {
            let partial = Trajectory {
                times,
                states,
                meta,
            };
            return Err(DynamicsError::NonFiniteState {
                t: t_next,
                partial,
            });
        }
        if (step + 1) % stride == 0 || step + 1 == n_steps {
            times.push(t_next);
            states.push(y.clone());
        }
    }
    Ok(Trajectory {
        times,
        states,
        meta,
    })
}

/// RK4 on the `J`-coordinate equations. Every recorded step is checked to
/// remain strictly inside the unit cube.
pub fn integrate_ode_j(
    net: &CompiledNetwork,
    j0: &DVector<f64>,
    t_span: (f64, f64),
    dt: f64,
    stride: usize,
) -> Result<Trajectory, DynamicsError> {
    check_dims(net, j0)?;
    if net.kind() != ActivationKind::Smooth {
        return Err(DynamicsError::WrongActivation);
    }
    if dt <= 0.0 {
        return Err(DynamicsError::BadStep(dt));
    }
    let stride = stride.max(1);
    let (t0, t1) = t_span;
    let n_steps = ((t1 - t0) / dt).round().max(0.0) as usize;
    let n = net.n();
    let meta = TrajectoryMeta {
        solver: SolverKind::Rk4JCoords,
        dt,
        stride,
        seed: None,
        sigma: None,
    };

    let mut j = j0.clone();
    let mut times = Vec::with_capacity(n_steps / stride + 2);
    let mut states = Vec::with_capacity(n_steps / stride + 2);
    times.push(t0);
    states.push(j.clone());

    let mut k1 = DVector::zeros(n);
    let mut k2 = DVector::zeros(n);
    let mut k3 = DVector::zeros(n);
    let mut k4 = DVector::zeros(n);
    let mut tmp = DVector::zeros(n);

    for step in 0..n_steps {
        rhs_j_into(net, &j, &mut k1)?;
        tmp.copy_from(&j);
        tmp.axpy(0.5 * dt, &k1, 1.0);
        rhs_j_into(net, &tmp, &mut k2)?;
        tmp.copy_from(&j);
        tmp.axpy(0.5 * dt, &k2, 1.0);
        rhs_j_into(net, &tmp, &mut k3)?;
        tmp.copy_from(&j);
        tmp.axpy(dt, &k3, 1.0);
        rhs_j_into(net, &tmp, &mut k4)?;
        j.axpy(dt / 6.0, &k1, 1.0);
        j.axpy(dt / 3.0, &k2, 1.0);
        j.axpy(dt / 3.0, &k3, 1.0);
        j.axpy(dt / 6.0, &k4, 1.0);
        for (idx, &v) in j.iter().enumerate() {
            if !(v > 0.0 && v < 1.0) {
                return Err(DynamicsError::DomainError {
                    index: idx,
                    value: v,
                });
            }
        }
        if (step + 1) % stride == 0 || step + 1 == n_steps {
            times.push(t0 + (step + 1) as f64 * dt);
            states.push(j.clone());
        }
    }
    Ok(Trajectory {
        times,
        states,
        meta,
    })
}

/// `J = φ(y)` componentwise (smooth activation).
pub fn y_to_j(p: ActivationParams, y: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(y.len(), |i, _| phi(ActivationKind::Smooth, p, y[i]))
}

/// `y = φ⁻¹(J)` componentwise; every component must lie in (0,1).
pub fn j_to_y(p: ActivationParams, j: &DVector<f64>) -> Result<DVector<f64>, DynamicsError> {
    let mut out = DVector::zeros(j.len());
    for i in 0..j.len() {
        out[i] = phi_inverse_smooth(p, j[i]).map_err(|_| DynamicsError::DomainError {
            index: i,
            value: j[i],
        })?;
    }
    Ok(out)
}
