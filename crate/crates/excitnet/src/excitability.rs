//! Operational verification of excitable connections: does a small kick
//! along a graph edge actually carry the state to the downstream
//! equilibrium, and does the whole attractor realize the graph?
//!
//! Convergence is declared only after the trajectory stays within
//! `conv_tol` of an equilibrium, with a small vector field, for a dwell
//! window; this keeps slow bottleneck passages from being misread as
//! arrival.

use std::collections::BTreeMap;

use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use thiserror::Error;

use crate::compiler::CompiledNetwork;
use crate::dynamics::Trajectory;
use crate::equilibria::{refine_all_templates, Equilibrium};
use crate::util::{maybe_par_map, Parallelism};

#[derive(Debug, Error)]
pub enum ExcitabilityError {
    #[error("could not refine the equilibrium of vertex {vertex}: {source}")]
    EquilibriumMissing {
        vertex: usize,
        source: crate::equilibria::EquilibriaError,
    },
    #[error("expected {expected} equilibria (one per vertex), got {got}")]
    WrongEquilibriaCount { expected: usize, got: usize },
    #[error("bracket [{lo}, {hi}] gives the same outcome at both ends")]
    BracketInvalid { lo: f64, hi: f64 },
    #[error(transparent)]
    Dynamics(#[from] crate::dynamics::DynamicsError),
}

/// Where a perturbed trajectory ended up.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "vertex")]
pub enum ConnectionOutcome {
    /// Converged to the intended target equilibrium.
    ConvergedIntended,
    /// Converged to some other vertex equilibrium.
    ConvergedOther(usize),
    /// Converged back to the perturbed equilibrium.
    ReturnedToSource,
    /// Did not settle within the time budget.
    NoConvergence,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConnectionResult {
    pub from: usize,
    pub to_intended: usize,
    pub outcome: ConnectionOutcome,
    /// First entry time into the convergence ball of the final equilibrium.
    pub transit_time: Option<f64>,
    pub final_distance: f64,
}

/// Numerical settings shared by all connection tests.
#[derive(Clone, Copy, Debug)]
pub struct ConnectionSettings {
    pub t_max: f64,
    pub conv_tol: f64,
    pub dwell: f64,
    pub dt: f64,
    pub parallelism: Parallelism,
}

impl Default for ConnectionSettings {
    fn default() -> Self {
        ConnectionSettings {
            t_max: 500.0,
            conv_tol: 1e-6,
            dwell: 5.0,
            dt: 1e-3,
            parallelism: Parallelism::Auto,
        }
    }
}

/// `ζ_{k,l} = ξ_k + δ e_l` (`l` 1-based).
pub fn perturbation_point(xi_k: &DVector<f64>, l: usize, delta: f64) -> DVector<f64> {
    let mut point = xi_k.clone();
    point[l - 1] += delta;
    point
}

struct SettleRun {
    final_vertex: Option<usize>,
    transit_time: Option<f64>,
    final_distance: f64,
    trajectory: Option<Trajectory>,
}

/// Integrates the input-free system until it settles near one of the vertex
/// equilibria (dwell criterion) or the time budget runs out. Optionally
/// records the trajectory at the given stride.
fn run_to_equilibrium(
    net: &CompiledNetwork,
    y0: &DVector<f64>,
    eqs: &[Equilibrium],
    settings: &ConnectionSettings,
    record_stride: Option<usize>,
) -> Result<SettleRun, ExcitabilityError> {
    use crate::dynamics::{DynamicsError, SolverKind, TrajectoryMeta};

    let n = net.n();
    if eqs.len() != n {
        return Err(ExcitabilityError::WrongEquilibriaCount {
            expected: n,
            got: eqs.len(),
        });
    }
    let dt = settings.dt;
    let n_steps = (settings.t_max / dt).ceil() as usize;
    let dwell_steps = (settings.dwell / dt).ceil() as usize;

    let mut y = y0.clone();
    let mut phi_buf = DVector::zeros(n);
    let mut k1 = DVector::zeros(n);
    let mut k2 = DVector::zeros(n);
    let mut k3 = DVector::zeros(n);
    let mut k4 = DVector::zeros(n);
    let mut tmp = DVector::zeros(n);

    let mut first_entry: Vec<Option<f64>> = vec![None; n];
    let mut streak_vertex: Option<usize> = None;
    let mut streak_steps = 0usize;

    let mut traj = record_stride.map(|stride| {
        let mut t = Trajectory {
            times: Vec::new(),
            states: Vec::new(),
            meta: TrajectoryMeta {
                solver: SolverKind::Rk4,
                dt,
                stride,
                seed: None,
                sigma: None,
            },
        };
        t.times.push(0.0);
        t.states.push(y.clone());
        t
    });

    let nearest = |y: &DVector<f64>, buf: &mut DVector<f64>| -> (usize, f64) {
        let mut best = (0usize, f64::INFINITY);
        for (idx, eq) in eqs.iter().enumerate() {
            buf.copy_from(y);
            *buf -= &eq.state;
            let d = buf.amax();
            if d < best.1 {
                best = (idx + 1, d);
            }
        }
        best
    };

    let mut dist_buf = DVector::zeros(n);
    for step in 0..n_steps {
        let t = step as f64 * dt;
        // k1 doubles as the vector-field norm for the dwell criterion
        rhs_into(net, &y, &mut phi_buf, &mut k1);
        let rhs_norm = k1.amax();
        let (near_v, near_d) = nearest(&y, &mut dist_buf);
        if near_d < settings.conv_tol && first_entry[near_v - 1].is_none() {
            first_entry[near_v - 1] = Some(t);
        }
        if near_d < settings.conv_tol && rhs_norm < settings.conv_tol {
            if streak_vertex == Some(near_v) {
                streak_steps += 1;
            } else {
                streak_vertex = Some(near_v);
                streak_steps = 1;
            }
            if streak_steps >= dwell_steps {
                return Ok(SettleRun {
                    final_vertex: Some(near_v),
                    transit_time: first_entry[near_v - 1],
                    final_distance: near_d,
                    trajectory: traj,
                });
            }
        } else {
            streak_vertex = None;
            streak_steps = 0;
        }

        // advance one RK4 step reusing the already-computed k1
        tmp.copy_from(&y);
        tmp.axpy(0.5 * dt, &k1, 1.0);
        rhs_into(net, &tmp, &mut phi_buf, &mut k2);
        tmp.copy_from(&y);
        tmp.axpy(0.5 * dt, &k2, 1.0);
        rhs_into(net, &tmp, &mut phi_buf, &mut k3);
        tmp.copy_from(&y);
        tmp.axpy(dt, &k3, 1.0);
        rhs_into(net, &tmp, &mut phi_buf, &mut k4);
        y.axpy(dt / 6.0, &k1, 1.0);
        y.axpy(dt / 3.0, &k2, 1.0);
        y.axpy(dt / 3.0, &k3, 1.0);
        y.axpy(dt / 6.0, &k4, 1.0);

        if !y.iter().all(|v| v.is_finite()) {
            return Err(ExcitabilityError::Dynamics(DynamicsError::NonFiniteState {
                t: t + dt,
                partial: traj.take().unwrap_or_else(|| Trajectory {
                    times: vec![0.0],
                    states: vec![y0.clone()],
                    meta: TrajectoryMeta {
                        solver: SolverKind::Rk4,
                        dt,
                        stride: 1,
                        seed: None,
                        sigma: None,
                    },
                }),
            }));
        }
        if let Some(tr) = traj.as_mut() {
            let stride = record_stride.unwrap();
            if (step + 1) % stride == 0 {
                tr.times.push(t + dt);
                tr.states.push(y.clone());
            }
        }
    }

    let (_, final_distance) = nearest(&y, &mut dist_buf);
    Ok(SettleRun {
        final_vertex: None,
        transit_time: None,
        final_distance,
        trajectory: traj,
    })
}

fn rhs_into(
    net: &CompiledNetwork,
    y: &DVector<f64>,
    phi_buf: &mut DVector<f64>,
    out: &mut DVector<f64>,
) {
    net.phi_into(y, phi_buf);
    net.weights().mul_to(phi_buf, out);
    out.axpy(-1.0, y, 1.0);
}

fn outcome_for(final_vertex: Option<usize>, k: usize, l: usize) -> ConnectionOutcome {
    match final_vertex {
        Some(v) if v == l => ConnectionOutcome::ConvergedIntended,
        Some(v) if v == k => ConnectionOutcome::ReturnedToSource,
        Some(v) => ConnectionOutcome::ConvergedOther(v),
        None => ConnectionOutcome::NoConvergence,
    }
}

/// Kicks the state off `ξ_k` by `δ e_l` and reports where it settles.
pub fn test_excitable_connection(
    net: &CompiledNetwork,
    eqs: &[Equilibrium],
    k: usize,
    l: usize,
    delta: f64,
    settings: &ConnectionSettings,
) -> Result<ConnectionResult, ExcitabilityError> {
    let zeta = perturbation_point(&eqs[k - 1].state, l, delta);
    let run = run_to_equilibrium(net, &zeta, eqs, settings, None)?;
    Ok(ConnectionResult {
        from: k,
        to_intended: l,
        outcome: outcome_for(run.final_vertex, k, l),
        transit_time: run.transit_time,
        final_distance: run.final_distance,
    })
}

/// Like [`test_excitable_connection`] but also returns the trajectory,
/// recorded at `stride` steps.
pub fn test_connection_recorded(
    net: &CompiledNetwork,
    eqs: &[Equilibrium],
    k: usize,
    l: usize,
    delta: f64,
    settings: &ConnectionSettings,
    stride: usize,
) -> Result<(ConnectionResult, Trajectory), ExcitabilityError> {
    let zeta = perturbation_point(&eqs[k - 1].state, l, delta);
    let run = run_to_equilibrium(net, &zeta, eqs, settings, Some(stride))?;
    Ok((
        ConnectionResult {
            from: k,
            to_intended: l,
            outcome: outcome_for(run.final_vertex, k, l),
            transit_time: run.transit_time,
            final_distance: run.final_distance,
        },
        run.trajectory.expect("recording was requested"),
    ))
}

/// Check of one ordered vertex pair within a realization report.
#[derive(Clone, Debug, Serialize)]
pub struct PairCheck {
    pub from: usize,
    pub to: usize,
    pub is_edge: bool,
    pub ok: bool,
    /// Number of perturbations tried (1 for edges, the polar grid size for
    /// non-edges).
    pub probes: usize,
    /// The single edge test, or the first failing / last probe for
    /// non-edges.
    pub detail: ConnectionResult,
}

#[derive(Clone, Debug, Serialize)]
pub struct RealizationReport {
    pub delta: f64,
    pub verdict: bool,
    pub pairs: Vec<PairCheck>,
    pub failures: Vec<String>,
}

/// Polar grid (8 angles x 5 radii) in the `(y_k, y_l)` plane around `ξ_k`,
/// covering perturbations with `a² + b² ≤ δ²`.
fn in_plane_probes(xi_k: &DVector<f64>, k: usize, l: usize, delta: f64) -> Vec<DVector<f64>> {
    let mut points = Vec::with_capacity(40);
    for ai in 0..8 {
        let angle = 2.0 * std::f64::consts::PI * ai as f64 / 8.0;
        for ri in 1..=5 {
            let rho = delta * ri as f64 / 5.0;
            let mut p = xi_k.clone();
            p[k - 1] += rho * angle.cos();
            p[l - 1] += rho * angle.sin();
            points.push(p);
        }
    }
    points
}

/// Verifies that the compiled network realizes its graph with amplitude
/// `δ`: every edge's kick converges to the intended equilibrium, and no
/// in-plane perturbation of a non-edge pair reaches the non-neighbour.
/// Vertex equilibria are refined from the templates first.
pub fn realize_graph_check(
    net: &CompiledNetwork,
    delta: f64,
    settings: &ConnectionSettings,
) -> Result<RealizationReport, ExcitabilityError> {
    let eqs = refine_templates_checked(net)?;
    realize_graph_check_with(net, &eqs, delta, settings)
}

pub fn refine_templates_checked(
    net: &CompiledNetwork,
) -> Result<Vec<Equilibrium>, ExcitabilityError> {
    match refine_all_templates(net, 1e-10, 200) {
        Ok(eqs) => Ok(eqs),
        Err(e) => {
            // attribute the failure to the first vertex that does not refine
            for k in 1..=net.n() {
                if let Err(err) = crate::equilibria::refine_template(net, k, 1e-10, 200) {
                    return Err(ExcitabilityError::EquilibriumMissing {
                        vertex: k,
                        source: err,
                    });
                }
            }
            Err(ExcitabilityError::EquilibriumMissing {
                vertex: 0,
                source: e,
            })
        }
    }
}

pub fn realize_graph_check_with(
    net: &CompiledNetwork,
    eqs: &[Equilibrium],
    delta: f64,
    settings: &ConnectionSettings,
) -> Result<RealizationReport, ExcitabilityError> {
    let n = net.n();
    let mut tasks = Vec::new();
    for k in 1..=n {
        for l in 1..=n {
            if k != l {
                tasks.push((k, l));
            }
        }
    }

    let results: Vec<Result<PairCheck, ExcitabilityError>> =
        maybe_par_map(&tasks, settings.parallelism, |&(k, l)| {
            check_pair(net, eqs, k, l, delta, settings)
        });

    let mut pairs = Vec::with_capacity(results.len());
    for r in results {
        pairs.push(r?);
    }
    let failures: Vec<String> = pairs
        .iter()
        .filter(|p| !p.ok)
        .map(|p| {
            format!(
                "{} {}->{}: {:?}",
                if p.is_edge { "edge" } else { "non-edge" },
                p.from,
                p.to,
                p.detail.outcome
            )
        })
        .collect();
    Ok(RealizationReport {
        delta,
        verdict: failures.is_empty(),
        pairs,
        failures,
    })
}

fn check_pair(
    net: &CompiledNetwork,
    eqs: &[Equilibrium],
    k: usize,
    l: usize,
    delta: f64,
    settings: &ConnectionSettings,
) -> Result<PairCheck, ExcitabilityError> {
    if net.graph().has_edge(k, l) {
        let result = test_excitable_connection(net, eqs, k, l, delta, settings)?;
        let ok = result.outcome == ConnectionOutcome::ConvergedIntended;
        Ok(PairCheck {
            from: k,
            to: l,
            is_edge: true,
            ok,
            probes: 1,
            detail: result,
        })
    } else {
        let probes = in_plane_probes(&eqs[k - 1].state, k, l, delta);
        let n_probes = probes.len();
        let mut last = None;
        for p in probes {
            let run = run_to_equilibrium(net, &p, eqs, settings, None)?;
            let result = ConnectionResult {
                from: k,
                to_intended: l,
                outcome: outcome_for(run.final_vertex, k, l),
                transit_time: run.transit_time,
                final_distance: run.final_distance,
            };
            // reaching the non-neighbour, or failing to settle at all,
            // falsifies the non-edge requirement
            let bad = matches!(
                result.outcome,
                ConnectionOutcome::ConvergedIntended | ConnectionOutcome::NoConvergence
            );
            if bad {
                return Ok(PairCheck {
                    from: k,
                    to: l,
                    is_edge: false,
                    ok: false,
                    probes: n_probes,
                    detail: result,
                });
            }
            last = Some(result);
        }
        Ok(PairCheck {
            from: k,
            to: l,
            is_edge: false,
            ok: true,
            probes: n_probes,
            detail: last.expect("probe grid is nonempty"),
        })
    }
}

/// Bisects the perturbation amplitude for the connection `k -> l`:
/// the connection must exist at the top of the bracket and be absent at the
/// bottom. Returns the midpoint once the bracket is narrower than `tol`.
pub fn estimate_threshold(
    net: &CompiledNetwork,
    eqs: &[Equilibrium],
    k: usize,
    l: usize,
    bracket: (f64, f64),
    tol: f64,
    settings: &ConnectionSettings,
) -> Result<f64, ExcitabilityError> {
    let connects = |delta: f64| -> Result<bool, ExcitabilityError> {
        let r = test_excitable_connection(net, eqs, k, l, delta, settings)?;
        Ok(r.outcome == ConnectionOutcome::ConvergedIntended)
    };
    let (mut lo, mut hi) = bracket;
    if connects(lo)? || !connects(hi)? {
        return Err(ExcitabilityError::BracketInvalid { lo, hi });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if connects(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Outcome bucket of one basin sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum BasinOutcome {
    /// Settled at the equilibrium of this vertex (the source vertex itself
    /// means the sample stayed in the basin).
    Equilibrium(usize),
    NoConvergence,
}

/// Samples `n_samples` points uniformly from the ball `B_δ(ξ_k)`,
/// integrates each one and tallies where they settle. Deterministic in
/// `seed`; samples run in parallel when enabled.
pub fn basin_sample(
    net: &CompiledNetwork,
    eqs: &[Equilibrium],
    k: usize,
    delta: f64,
    n_samples: usize,
    seed: u64,
    settings: &ConnectionSettings,
) -> Result<BTreeMap<BasinOutcome, f64>, ExcitabilityError> {
    assert!(n_samples >= 1);
    let n = net.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // uniform in the ball: normalized Gaussian direction, radius ~ U^(1/N)
    let mut points = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let mut dir = DVector::from_fn(n, |_, _| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z
        });
        let norm = dir.norm();
        if norm > 0.0 {
            dir /= norm;
        }
        let u: f64 = rng.random_range(0.0..1.0f64);
        let radius = delta * u.powf(1.0 / n as f64);
        let mut p = eqs[k - 1].state.clone();
        p.axpy(radius, &dir, 1.0);
        points.push(p);
    }

    let outcomes: Vec<Result<BasinOutcome, ExcitabilityError>> =
        maybe_par_map(&points, settings.parallelism, |p| {
            let run = run_to_equilibrium(net, p, eqs, settings, None)?;
            Ok(match run.final_vertex {
                Some(v) => BasinOutcome::Equilibrium(v),
                None => BasinOutcome::NoConvergence,
            })
        });

    let mut counts: BTreeMap<BasinOutcome, usize> = BTreeMap::new();
    for o in outcomes {
        *counts.entry(o?).or_insert(0) += 1;
    }
    Ok(counts
        .into_iter()
        .map(|(k, v)| (k, v as f64 / n_samples as f64))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::{ActivationKind, ActivationParams};
    use crate::compiler::{compile, theorem_params, predicted_equilibrium, WeightParams};
    use crate::graph::{cycle_graph, random_constrained_graph, ten_node_demo, DirectedGraph};

    fn theorem_net(g: DirectedGraph, delta: f64) -> CompiledNetwork {
        let (act, params) = theorem_params(delta).unwrap();
        compile(g, params, ActivationKind::PiecewiseAffine, act).unwrap()
    }

    fn smooth_net(g: DirectedGraph, w_p: f64) -> CompiledNetwork {
        let mut params = WeightParams::defaults();
        params.w_p_default = w_p;
        compile(
            g,
            params,
            ActivationKind::Smooth,
            ActivationParams::new(0.05, 0.5),
        )
        .unwrap()
    }

    #[test]
    fn perturbation_point_examples() {
        let xi = DVector::from_vec(vec![1.0, 0.3, -0.7]);
        let zeta = perturbation_point(&xi, 2, 0.4);
        assert_eq!(zeta.as_slice(), &[1.0, 0.7, -0.7]);
        let same = perturbation_point(&xi, 3, 0.0);
        assert_eq!(same, xi);
        let z = perturbation_point(&xi, 1, 0.25);
        assert_eq!((&z - &xi).norm(), 0.25);
    }

    #[test]
    fn three_cycle_piecewise_edge_connects() {
        let net = theorem_net(cycle_graph(3), 0.4);
        let eqs = refine_templates_checked(&net).unwrap();
        let r = test_excitable_connection(&net, &eqs, 1, 2, 0.4, &ConnectionSettings::default())
            .unwrap();
        assert_eq!(r.outcome, ConnectionOutcome::ConvergedIntended);
        assert!(r.transit_time.unwrap() > 0.0);
        assert!(r.final_distance < 1e-6);
    }

    #[test]
    fn three_cycle_smooth_edge_connects() {
        let net = smooth_net(cycle_graph(3), 0.3);
        let eqs = refine_templates_checked(&net).unwrap();
        let r = test_excitable_connection(&net, &eqs, 1, 2, 0.4, &ConnectionSettings::default())
            .unwrap();
        assert_eq!(r.outcome, ConnectionOutcome::ConvergedIntended);
        assert!(r.transit_time.unwrap() > 0.0 && r.transit_time.unwrap() < 100.0);
    }

    #[test]
    fn reverse_direction_returns_to_source() {
        let net = theorem_net(cycle_graph(3), 0.4);
        let eqs = refine_templates_checked(&net).unwrap();
        // 2->1 is not an edge of the 3-cycle
        let r = test_excitable_connection(&net, &eqs, 2, 1, 0.4, &ConnectionSettings::default())
            .unwrap();
        assert_eq!(r.outcome, ConnectionOutcome::ReturnedToSource);
    }

    #[test]
    fn single_edge_pair_realizes() {
        let g = DirectedGraph::from_edges(2, &[(1, 2)]).unwrap();
        let net = theorem_net(g, 0.4);
        let report = realize_graph_check(&net, 0.4, &ConnectionSettings::default()).unwrap();
        assert!(report.verdict, "failures: {:?}", report.failures);
        let edge: Vec<_> = report.pairs.iter().filter(|p| p.is_edge).collect();
        assert_eq!(edge.len(), 1);
        assert_eq!(edge[0].detail.outcome, ConnectionOutcome::ConvergedIntended);
        let non_edge: Vec<_> = report.pairs.iter().filter(|p| !p.is_edge).collect();
        assert_eq!(non_edge.len(), 1);
        assert_eq!(
            non_edge[0].detail.outcome,
            ConnectionOutcome::ReturnedToSource
        );
    }

    #[test]
    fn disconnected_pair_probes_stay_home() {
        // 4-cycle: (1,3) has no edge in either direction
        let net = theorem_net(cycle_graph(4), 0.4);
        let eqs = refine_templates_checked(&net).unwrap();
        let probes = in_plane_probes(&eqs[0].state, 1, 3, 0.4);
        assert_eq!(probes.len(), 40);
        for p in probes {
            let run =
                run_to_equilibrium(&net, &p, &eqs, &ConnectionSettings::default(), None).unwrap();
            assert_eq!(run.final_vertex, Some(1));
        }
    }

    #[test]
    fn small_random_graphs_realize_under_theorem_params() {
        for seed in 0..5 {
            let g = random_constrained_graph(3 + (seed as usize % 4), 0.3, seed, false).unwrap();
            let net = theorem_net(g, 0.4);
            let report = realize_graph_check(&net, 0.4, &ConnectionSettings::default()).unwrap();
            assert!(report.verdict, "seed {seed}: {:?}", report.failures);
        }
    }

    #[test]
    fn sequential_and_parallel_checks_agree() {
        let net = theorem_net(cycle_graph(4), 0.4);
        let mut seq = ConnectionSettings::default();
        seq.parallelism = Parallelism::Sequential;
        let a = realize_graph_check(&net, 0.4, &seq).unwrap();
        let b = realize_graph_check(&net, 0.4, &ConnectionSettings::default()).unwrap();
        assert_eq!(a.verdict, b.verdict);
        assert_eq!(a.pairs.len(), b.pairs.len());
        for (x, y) in a.pairs.iter().zip(&b.pairs) {
            assert_eq!((x.from, x.to, x.ok), (y.from, y.to, y.ok));
            assert_eq!(x.detail.transit_time, y.detail.transit_time);
        }
    }

    #[test]
    fn threshold_on_piecewise_three_cycle() {
        // on the active branch the unstable gate sits at y = 0.425, i.e.
        // threshold 0.125 above Y_L = 0.3
        let net = theorem_net(cycle_graph(3), 0.4);
        let eqs = refine_templates_checked(&net).unwrap();
        let th = estimate_threshold(
            &net,
            &eqs,
            1,
            2,
            (0.01, 0.4),
            1e-4,
            &ConnectionSettings::default(),
        )
        .unwrap();
        assert!((th - 0.125).abs() < 1e-3, "threshold {th}");
    }

    #[test]
    fn threshold_decreases_towards_the_fold() {
        let mut previous = f64::INFINITY;
        for &w_p in &[0.300, 0.301, 0.302] {
            let net = smooth_net(cycle_graph(3), w_p);
            let eqs = refine_templates_checked(&net).unwrap();
            let th = estimate_threshold(
                &net,
                &eqs,
                1,
                2,
                (1e-4, 0.2),
                1e-5,
                &ConnectionSettings::default(),
            )
            .unwrap();
            assert!(th < previous, "w_p {w_p}: {th} !< {previous}");
            previous = th;
        }
    }

    #[test]
    fn threshold_bracket_must_straddle() {
        let net = theorem_net(cycle_graph(3), 0.4);
        let eqs = refine_templates_checked(&net).unwrap();
        let err = estimate_threshold(
            &net,
            &eqs,
            1,
            2,
            (0.01, 0.05),
            1e-4,
            &ConnectionSettings::default(),
        );
        assert!(matches!(err, Err(ExcitabilityError::BracketInvalid { .. })));
    }

    #[test]
    fn tiny_ball_stays_in_the_basin() {
        let net = theorem_net(cycle_graph(3), 0.4);
        let eqs = refine_templates_checked(&net).unwrap();
        let fractions = basin_sample(
            &net,
            &eqs,
            1,
            1e-3,
            50,
            42,
            &ConnectionSettings::default(),
        )
        .unwrap();
        assert_eq!(fractions.len(), 1);
        assert_eq!(fractions[&BasinOutcome::Equilibrium(1)], 1.0);
    }

    #[test]
    fn full_amplitude_ball_reaches_only_source_and_successor() {
        let net = theorem_net(cycle_graph(3), 0.4);
        let eqs = refine_templates_checked(&net).unwrap();
        let fractions = basin_sample(
            &net,
            &eqs,
            1,
            0.4,
            200,
            42,
            &ConnectionSettings::default(),
        )
        .unwrap();
        for key in fractions.keys() {
            assert!(
                matches!(key, BasinOutcome::Equilibrium(1) | BasinOutcome::Equilibrium(2)),
                "unexpected outcome {key:?}"
            );
        }
        let total: f64 = fractions.values().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn basin_sampling_is_reproducible() {
        let net = theorem_net(cycle_graph(3), 0.4);
        let eqs = refine_templates_checked(&net).unwrap();
        let s = ConnectionSettings::default();
        let a = basin_sample(&net, &eqs, 1, 0.4, 100, 9, &s).unwrap();
        let b = basin_sample(&net, &eqs, 1, 0.4, 100, 9, &s).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn transition_flight_path_is_monotone_and_matches_templates() {
        let net = theorem_net(ten_node_demo(), 0.4);
        let eqs = refine_templates_checked(&net).unwrap();
        let settings = ConnectionSettings::default();
        let (result, traj) =
            test_connection_recorded(&net, &eqs, 1, 4, 0.4, &settings, 10).unwrap();
        assert_eq!(result.outcome, ConnectionOutcome::ConvergedIntended);

        let theta = net.act().theta;
        let delta = 0.4;
        // y_k strictly decreasing while y_k > 0
        let mut prev = traj.states[0][0];
        for s in traj.states.iter().skip(1) {
            let cur = s[0];
            if prev > 0.0 && cur > 0.0 {
                assert!(cur < prev, "y_k not decreasing: {cur} after {prev}");
            }
            prev = cur;
        }
        // y_l never drops below θ + δ/4 after first exceeding it
        let gate = theta + delta / 4.0;
        let mut crossed = false;
        for s in &traj.states {
            let yl = s[3];
            if crossed {
                assert!(yl >= gate - 1e-12, "y_l dipped to {yl}");
            } else if yl > gate {
                crossed = true;
            }
        }
        // every other cell starts at its role value at ξ_1 and ends at its
        // role value at ξ_4
        let start_template = predicted_equilibrium(&net, 1);
        let end_template = predicted_equilibrium(&net, 4);
        let first = &traj.states[0];
        let last = traj.states.last().unwrap();
        for j in 1..=net.n() {
            if j == 1 || j == 4 {
                continue;
            }
            assert!(
                (first[j - 1] - start_template.components[j - 1]).abs() <= delta + 1e-12,
                "cell {j} start"
            );
            assert!(
                (last[j - 1] - end_template.components[j - 1]).abs() < 1e-6,
                "cell {j} end: {} vs {}",
                last[j - 1],
                end_template.components[j - 1]
            );
        }
    }
}
