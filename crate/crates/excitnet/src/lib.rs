//! Excitable network attractors in continuous-time recurrent neural networks.
//!
//! Given a directed graph with no one-loops, two-loops or Δ-cliques, this
//! crate builds an N-cell CTRNN
//!
//! ```text
//! dy_i/dt = -y_i + Σ_j w_ij φ(y_j) + I_i(t)
//! ```
//!
//! whose phase space contains one stable equilibrium per vertex and an
//! excitable connection per edge, so that small perturbations (or noise)
//! drive the state around the graph. The crate covers the whole pipeline:
//!
//! * [`graph`] — graph representation, constraint checks, random generation;
//! * [`activation`] — the smooth and piecewise-affine activation functions;
//! * [`compiler`] — weight-matrix construction and equilibrium templates;
//! * [`dynamics`] — deterministic (RK4) and stochastic (Euler–Maruyama)
//!   integration in `y`- and `J`-coordinates;
//! * [`equilibria`] — Newton refinement, Jacobians and linear stability;
//! * [`excitability`] — connection tests, graph-realization verdicts,
//!   thresholds and basin sampling;
//! * [`bifurcation`] — fold/SNIC location and periodic-orbit periods;
//! * [`analysis`] — symbolic dynamics, transition statistics and parameter
//!   sweeps.
//!
//! Vertices are 1-indexed in every public interface (file formats, reports,
//! role maps); state vectors use ordinary 0-based component indexing, so
//! cell `k` lives at component `k - 1`.

pub use nalgebra;

pub mod activation;
pub mod analysis;
pub mod bifurcation;
pub mod compiler;
pub mod dynamics;
pub mod equilibria;
pub mod excitability;
pub mod graph;
mod util;

pub use activation::{ActivationKind, ActivationParams};
pub use compiler::{CompiledNetwork, EquilibriumTemplate, WeightParams};
pub use dynamics::{InputSignal, NoiseSpec, Trajectory};
pub use equilibria::Equilibrium;
pub use graph::DirectedGraph;
pub use util::Parallelism;
