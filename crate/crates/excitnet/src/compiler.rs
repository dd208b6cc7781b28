//! Weight-matrix construction: compiles an admissible graph plus the four
//! structural weights into a CTRNN, produces the closed-form parameter
//! recipe, and predicts the vertex equilibria.
//!
//! The matrix assigns `w_s` on the diagonal, `w_p` to entries receiving from
//! an upstream vertex (edge `j→i` puts `w_p` at `(i,j)`), `w_m` to entries
//! receiving from a downstream vertex, and `w_t` everywhere else. Per-edge
//! `w_p` overrides let individual connections be strengthened or weakened.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activation::{phi, ActivationKind, ActivationParams};
use crate::graph::{
    classify_vertex_roles, validate_constraints, CellRole, ConstraintReport, DirectedGraph,
};

#[derive(Debug, Error)]
pub enum CompileError {
    #[error("graph violates construction constraints: {0}")]
    ConstraintViolation(ConstraintReport),
    #[error("w_p override on ({from},{to}) which is not an edge")]
    BadOverride { from: usize, to: usize },
    #[error("{0}")]
    DomainError(String),
}

/// Structural connection weights. `w_p_overrides` is keyed by graph edge
/// `(from, to)` and replaces the default `w_p` on that edge only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightParams {
    pub w_s: f64,
    pub w_m: f64,
    pub w_t: f64,
    pub w_p_default: f64,
    #[serde(default)]
    pub w_p_overrides: BTreeMap<(usize, usize), f64>,
}

impl WeightParams {
    /// The default smooth-case parameter set: `w_s=1`, `w_m=-0.7`, `w_t=0`,
    /// `w_p=0.3` (the δ=0.4 recipe evaluated exactly).
    pub fn defaults() -> Self {
        WeightParams {
            w_s: 1.0,
            w_m: -0.7,
            w_t: 0.0,
            w_p_default: 0.3,
            w_p_overrides: BTreeMap::new(),
        }
    }

    pub fn with_override(mut self, from: usize, to: usize, value: f64) -> Self {
        self.w_p_overrides.insert((from, to), value);
        self
    }

    /// The `w_p` used on edge `from -> to` (matrix entry `(to, from)`).
    pub fn effective_wp(&self, from: usize, to: usize) -> f64 {
        self.w_p_overrides
            .get(&(from, to))
            .copied()
            .unwrap_or(self.w_p_default)
    }

    /// Largest |w_p| over default and overrides, for blow-up guards.
    pub fn max_abs_wp(&self) -> f64 {
        self.w_p_overrides
            .values()
            .fold(self.w_p_default.abs(), |m, v| m.max(v.abs()))
    }
}

/// The equilibrium component values implied by the weights: Active `= w_s`,
/// Leading `= w_p`, Trailing `= w_m`, Disconnected `= w_t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct YValues {
    pub y_a: f64,
    pub y_l: f64,
    pub y_t: f64,
    pub y_d: f64,
}

impl YValues {
    pub fn from_params(w: &WeightParams) -> Self {
        YValues {
            y_a: w.w_s,
            y_l: w.w_p_default,
            y_t: w.w_m,
            y_d: w.w_t,
        }
    }
}

/// Closed-form parameter recipe: for any `0 < δ < 1/2`,
/// `ε = δ/8`, `θ = 1/2`, `w_s = 1`, `w_t = 0`, `w_p = θ - δ/2`,
/// `w_m = -(w_s - θ) - δ/2`. With the piecewise-affine activation these
/// weights realize any admissible graph with excitability threshold `δ`.
pub fn theorem_params(delta: f64) -> Result<(ActivationParams, WeightParams), CompileError> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(CompileError::DomainError(format!(
            "delta = {delta} outside (0, 1/2)"
        )));
    }
    let theta = 0.5;
    let w_s = 1.0;
    let act = ActivationParams::new(delta / 8.0, theta);
    let weights = WeightParams {
        w_s,
        w_m: -(w_s - theta) - delta / 2.0,
        w_t: 0.0,
        w_p_default: theta - delta / 2.0,
        w_p_overrides: BTreeMap::new(),
    };
    Ok((act, weights))
}

/// A graph compiled to a concrete CTRNN: weight matrix plus everything
/// needed to evaluate the dynamics. Immutable after construction.
#[derive(Clone, Debug)]
pub struct CompiledNetwork {
    graph: DirectedGraph,
    params: WeightParams,
    kind: ActivationKind,
    act: ActivationParams,
    weights: DMatrix<f64>,
}

impl CompiledNetwork {
    pub fn n(&self) -> usize {
        self.graph.n_vertices()
    }

    pub fn graph(&self) -> &DirectedGraph {
        &self.graph
    }

    pub fn params(&self) -> &WeightParams {
        &self.params
    }

    pub fn kind(&self) -> ActivationKind {
        self.kind
    }

    pub fn act(&self) -> ActivationParams {
        self.act
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    /// Matrix entry `w_ij` with 1-based cell indices.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[(i - 1, j - 1)]
    }

    pub fn phi_scalar(&self, y: f64) -> f64 {
        phi(self.kind, self.act, y)
    }

    /// Applies the activation componentwise.
    pub fn phi_into(&self, y: &DVector<f64>, out: &mut DVector<f64>) {
        for i in 0..y.len() {
            out[i] = phi(self.kind, self.act, y[i]);
        }
    }

    /// Returns a copy with a different default `w_p` (overrides preserved),
    /// recompiled. Convenient for parameter scans.
    pub fn with_wp(&self, w_p: f64) -> CompiledNetwork {
        let mut params = self.params.clone();
        params.w_p_default = w_p;
        compile(self.graph.clone(), params, self.kind, self.act)
            .expect("recompilation of a valid network cannot fail")
    }
}

/// Compiles a validated graph into the weight matrix. Fails when the graph
/// breaks the construction constraints or an override names a non-edge.
pub fn compile(
    graph: DirectedGraph,
    params: WeightParams,
    kind: ActivationKind,
    act: ActivationParams,
) -> Result<CompiledNetwork, CompileError> {
    let report = validate_constraints(&graph, false);
    if !report.valid {
        return Err(CompileError::ConstraintViolation(report));
    }
    for &(from, to) in params.w_p_overrides.keys() {
        if from < 1 || from > graph.n_vertices() || to < 1 || to > graph.n_vertices()
            || !graph.has_edge(from, to)
        {
            return Err(CompileError::BadOverride { from, to });
        }
    }
    let n = graph.n_vertices();
    let weights = DMatrix::from_fn(n, n, |r, c| {
        let (i, j) = (r + 1, c + 1);
        if i == j {
            params.w_s
        } else if graph.has_edge(j, i) {
            params.effective_wp(j, i)
        } else if graph.has_edge(i, j) {
            params.w_m
        } else {
            params.w_t
        }
    });
    Ok(CompiledNetwork {
        graph,
        params,
        kind,
        act,
        weights,
    })
}

/// Predicted equilibrium for vertex `k`: component `j` takes the Active,
/// Leading, Trailing or Disconnected value according to the cell's role.
/// Leading components use the per-edge `w_p` of the edge `k -> j`.
#[derive(Clone, Debug, PartialEq)]
pub struct EquilibriumTemplate {
    pub vertex: usize,
    pub components: DVector<f64>,
    pub roles: BTreeMap<usize, CellRole>,
}

pub fn predicted_equilibrium(net: &CompiledNetwork, k: usize) -> EquilibriumTemplate {
    let g = net.graph();
    let w = net.params();
    let roles = classify_vertex_roles(g, k).expect("compiled networks have admissible graphs");
    let components = DVector::from_fn(g.n_vertices(), |idx, _| {
        let j = idx + 1;
        match roles[&j] {
            CellRole::Active => w.w_s,
            CellRole::Leading => w.effective_wp(k, j),
            CellRole::Trailing => w.w_m,
            CellRole::Disconnected => w.w_t,
        }
    });
    EquilibriumTemplate {
        vertex: k,
        components,
        roles,
    }
}

/// Draws an independent `w_p` override for every edge of the graph,
/// uniformly from `[lo, hi)`, deterministically in the seed (edges are
/// visited in lexicographic order).
pub fn random_wp_overrides(
    graph: &DirectedGraph,
    lo: f64,
    hi: f64,
    seed: u64,
) -> BTreeMap<(usize, usize), f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    graph
        .edges()
        .into_iter()
        .map(|edge| (edge, rng.random_range(lo..hi)))
        .collect()
}

/// Parameter block of a run configuration: either the δ-recipe or fully
/// explicit values. The JSON forms are `{"delta": 0.4}` and
/// `{"epsilon": ..., "theta": ..., "w_s": ..., "w_m": ..., "w_t": ...,
/// "w_p": ..., "w_p_overrides": [[i,j,val],...], "activation": "smooth"}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamsConfig {
    DeltaRecipe {
        delta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        activation: Option<ActivationKind>,
    },
    Explicit {
        epsilon: f64,
        theta: f64,
        w_s: f64,
        w_m: f64,
        w_t: f64,
        w_p: f64,
        #[serde(default)]
        w_p_overrides: Vec<(usize, usize, f64)>,
        activation: ActivationKind,
    },
}

impl ParamsConfig {
    /// The paper-default smooth parameter set.
    pub fn default_smooth() -> Self {
        ParamsConfig::Explicit {
            epsilon: 0.05,
            theta: 0.5,
            w_s: 1.0,
            w_m: -0.7,
            w_t: 0.0,
            w_p: 0.3,
            w_p_overrides: Vec::new(),
            activation: ActivationKind::Smooth,
        }
    }

    pub fn resolve(
        &self,
    ) -> Result<(ActivationKind, ActivationParams, WeightParams), CompileError> {
        match self {
            ParamsConfig::DeltaRecipe { delta, activation } => {
                let (act, weights) = theorem_params(*delta)?;
                // the recipe is proved for the piecewise-affine activation
                Ok((
                    activation.unwrap_or(ActivationKind::PiecewiseAffine),
                    act,
                    weights,
                ))
            }
            ParamsConfig::Explicit {
                epsilon,
                theta,
                w_s,
                w_m,
                w_t,
                w_p,
                w_p_overrides,
                activation,
            } => {
                if *epsilon <= 0.0 {
                    return Err(CompileError::DomainError(
                        "epsilon must be positive".into(),
                    ));
                }
                let mut overrides = BTreeMap::new();
                for &(i, j, v) in w_p_overrides {
                    overrides.insert((i, j), v);
                }
                Ok((
                    *activation,
                    ActivationParams::new(*epsilon, *theta),
                    WeightParams {
                        w_s: *w_s,
                        w_m: *w_m,
                        w_t: *w_t,
                        w_p_default: *w_p,
                        w_p_overrides: overrides,
                    },
                ))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{cycle_graph, kirk_silber_graph, DirectedGraph};
    use approx::assert_abs_diff_eq;

    fn defaults_smooth(g: DirectedGraph) -> CompiledNetwork {
        compile(
            g,
            WeightParams::defaults(),
            ActivationKind::Smooth,
            ActivationParams::new(0.05, 0.5),
        )
        .unwrap()
    }

    #[test]
    fn two_node_default_matrix() {
        let g = DirectedGraph::from_edges(2, &[(1, 2)]).unwrap();
        let net = defaults_smooth(g);
        assert_eq!(net.weight(1, 1), 1.0);
        assert_eq!(net.weight(1, 2), -0.7);
        assert_eq!(net.weight(2, 1), 0.3);
        assert_eq!(net.weight(2, 2), 1.0);
    }

    #[test]
    fn empty_graph_compiles_to_diagonal() {
        let net = defaults_smooth(DirectedGraph::new(2));
        assert_eq!(net.weight(1, 1), 1.0);
        assert_eq!(net.weight(2, 2), 1.0);
        assert_eq!(net.weight(1, 2), 0.0);
        assert_eq!(net.weight(2, 1), 0.0);
    }

    #[test]
    fn override_lands_on_the_right_entry() {
        let g = cycle_graph(3);
        let params = WeightParams::defaults().with_override(1, 2, 0.31);
        let net = compile(
            g,
            params,
            ActivationKind::Smooth,
            ActivationParams::new(0.05, 0.5),
        )
        .unwrap();
        // edge 1->2 feeds cell 2 from cell 1: matrix entry (2,1)
        assert_eq!(net.weight(2, 1), 0.31);
        assert_eq!(net.weight(3, 2), 0.3);
        assert_eq!(net.weight(1, 3), 0.3);
    }

    #[test]
    fn override_on_non_edge_is_rejected() {
        let g = cycle_graph(3);
        let params = WeightParams::defaults().with_override(2, 1, 0.31);
        assert!(matches!(
            compile(
                g,
                params,
                ActivationKind::Smooth,
                ActivationParams::new(0.05, 0.5)
            ),
            Err(CompileError::BadOverride { from: 2, to: 1 })
        ));
    }

    #[test]
    fn invalid_graph_is_rejected() {
        let g = DirectedGraph::from_edges(2, &[(1, 2), (2, 1)]).unwrap();
        assert!(matches!(
            compile(
                g,
                WeightParams::defaults(),
                ActivationKind::Smooth,
                ActivationParams::new(0.05, 0.5)
            ),
            Err(CompileError::ConstraintViolation(_))
        ));
    }

    /// Brute-force entrywise recomputation of the additive weight formula.
    #[test]
    fn matrix_matches_entrywise_oracle() {
        let g = kirk_silber_graph();
        let params = WeightParams::defaults()
            .with_override(2, 3, 0.302)
            .with_override(2, 4, 0.3);
        let net = compile(
            g.clone(),
            params.clone(),
            ActivationKind::Smooth,
            ActivationParams::new(0.05, 0.5),
        )
        .unwrap();
        for i in 1..=4usize {
            for j in 1..=4usize {
                let kron = if i == j { 1.0 } else { 0.0 };
                let a_ji = if g.has_edge(j, i) { 1.0 } else { 0.0 };
                let a_ij = if g.has_edge(i, j) { 1.0 } else { 0.0 };
                let wp = params.effective_wp(j, i);
                let expected = params.w_t
                    + (params.w_s - params.w_t) * kron
                    + (wp - params.w_t) * a_ji
                    + (params.w_m - params.w_t) * a_ij;
                assert_eq!(net.weight(i, j), expected, "entry ({i},{j})");
                // membership: each off-diagonal entry is exactly one of the roles
                if i != j {
                    let e = net.weight(i, j);
                    let matches = [
                        (a_ji == 1.0 && e == wp),
                        (a_ij == 1.0 && e == params.w_m),
                        (a_ji == 0.0 && a_ij == 0.0 && e == params.w_t),
                    ];
                    assert_eq!(matches.iter().filter(|&&m| m).count(), 1);
                }
            }
        }
    }

    #[test]
    fn theorem_recipe_at_default_delta() {
        let (act, w) = theorem_params(0.4).unwrap();
        assert_eq!(act.epsilon, 0.05);
        assert_eq!(act.theta, 0.5);
        assert_eq!(w.w_s, 1.0);
        assert_eq!(w.w_t, 0.0);
        assert_abs_diff_eq!(w.w_p_default, 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(w.w_m, -0.7, epsilon = 1e-15);
    }

    #[test]
    fn theorem_recipe_small_delta() {
        let (act, w) = theorem_params(0.08).unwrap();
        assert_abs_diff_eq!(act.epsilon, 0.01, epsilon = 1e-15);
        assert_abs_diff_eq!(w.w_p_default, 0.46, epsilon = 1e-15);
        assert_abs_diff_eq!(w.w_m, -0.54, epsilon = 1e-15);
    }

    #[test]
    fn theorem_recipe_rejects_boundary() {
        assert!(theorem_params(0.5).is_err());
        assert!(theorem_params(0.0).is_err());
        assert!(theorem_params(-0.1).is_err());
    }

    /// The ordering chain Y_T < Y_D < Y_L < θ-ε/2 < θ+ε/2 < Y_A holds across
    /// the admissible δ range.
    #[test]
    fn theorem_recipe_satisfies_ordering_chain() {
        for i in 1..50 {
            let delta = i as f64 * 0.01;
            let (act, w) = theorem_params(delta).unwrap();
            let y = YValues::from_params(&w);
            assert!(y.y_t < y.y_d);
            assert!(y.y_d < y.y_l);
            assert!(y.y_l < act.theta - act.epsilon / 2.0);
            assert!(act.theta + act.epsilon / 2.0 < y.y_a);
            // templates stay strictly outside the piecewise band
            assert!(y.y_l < act.theta - 2.0 * act.epsilon);
            assert!(act.theta + 2.0 * act.epsilon < y.y_a);
        }
    }

    #[test]
    fn template_three_cycle() {
        let net = defaults_smooth(cycle_graph(3));
        let t = predicted_equilibrium(&net, 1);
        assert_eq!(t.components.as_slice(), &[1.0, 0.3, -0.7]);
    }

    #[test]
    fn template_disconnected_pair() {
        let net = defaults_smooth(DirectedGraph::new(2));
        let t = predicted_equilibrium(&net, 1);
        assert_eq!(t.components.as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn template_kirk_silber_vertex_two() {
        let net = defaults_smooth(kirk_silber_graph());
        let t = predicted_equilibrium(&net, 2);
        assert_eq!(t.components.as_slice(), &[-0.7, 1.0, 0.3, 0.3]);
    }

    #[test]
    fn template_uses_per_edge_override() {
        let g = kirk_silber_graph();
        let params = WeightParams::defaults().with_override(2, 3, 0.32);
        let net = compile(
            g,
            params,
            ActivationKind::Smooth,
            ActivationParams::new(0.05, 0.5),
        )
        .unwrap();
        let t = predicted_equilibrium(&net, 2);
        assert_eq!(t.components.as_slice(), &[-0.7, 1.0, 0.32, 0.3]);
    }

    #[test]
    fn params_config_json_forms() {
        let recipe: ParamsConfig = serde_json::from_str(r#"{"delta": 0.4}"#).unwrap();
        let (kind, act, w) = recipe.resolve().unwrap();
        assert_eq!(kind, ActivationKind::PiecewiseAffine);
        assert_eq!(act.epsilon, 0.05);
        assert_abs_diff_eq!(w.w_p_default, 0.3, epsilon = 1e-15);

        let explicit: ParamsConfig = serde_json::from_str(
            r#"{"epsilon": 0.05, "theta": 0.5, "w_s": 1.0, "w_m": -0.7, "w_t": 0.0,
                "w_p": 0.3, "w_p_overrides": [[2, 3, 0.302]], "activation": "smooth"}"#,
        )
        .unwrap();
        let (kind, _, w) = explicit.resolve().unwrap();
        assert_eq!(kind, ActivationKind::Smooth);
        assert_eq!(w.w_p_overrides[&(2, 3)], 0.302);

        // round trip
        let text = serde_json::to_string(&explicit).unwrap();
        let back: ParamsConfig = serde_json::from_str(&text).unwrap();
        let (k2, a2, w2) = back.resolve().unwrap();
        assert_eq!(k2, ActivationKind::Smooth);
        assert_eq!(a2.epsilon, 0.05);
        assert_eq!(w2.w_p_overrides[&(2, 3)], 0.302);
    }
}
