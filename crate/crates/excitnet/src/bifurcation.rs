//! Fold and SNIC location, the closed-form fold asymptotics, double-exit
//! equilibrium conditions and periodic-orbit period measurement.
//!
//! Numeric critical values are found by bisecting on "does Newton from the
//! template-side seed converge to a stable vertex equilibrium", which
//! reproduces the fold/SNIC locations without a continuation engine.

use nalgebra::DVector;
use serde::Serialize;
use thiserror::Error;

use crate::activation::{phi_inverse_smooth, ActivationKind, ActivationParams};
use crate::compiler::{compile, predicted_equilibrium, CompiledNetwork, WeightParams};
use crate::equilibria::{refine_equilibrium, Stability};
use crate::graph::{cycle_graph, DirectedGraph};

#[derive(Debug, Error)]
pub enum BifurcationError {
    #[error("g has no interior extrema when w_s < 4*epsilon (w_s = {w_s}, epsilon = {epsilon})")]
    NoExtrema { w_s: f64, epsilon: f64 },
    #[error("{0}")]
    DomainError(String),
    #[error("bracket [{lo}, {hi}] does not straddle the transition")]
    BracketInvalid { lo: f64, hi: f64 },
    #[error("fewer than 3 level crossings after the settle window")]
    NoOscillation,
    #[error(transparent)]
    Compile(#[from] crate::compiler::CompileError),
    #[error(transparent)]
    Dynamics(#[from] crate::dynamics::DynamicsError),
}

/// `g(x) = φ⁻¹(x) - w_s·x` on (0,1), the scalar function whose local
/// maximum pins the fold of a single leading cell.
#[derive(Clone, Copy, Debug)]
pub struct GFunction {
    pub epsilon: f64,
    pub theta: f64,
    pub w_s: f64,
}

impl GFunction {
    pub fn new(epsilon: f64, theta: f64, w_s: f64) -> Self {
        assert!(epsilon > 0.0);
        GFunction { epsilon, theta, w_s }
    }

    pub fn params(&self) -> ActivationParams {
        ActivationParams::new(self.epsilon, self.theta)
    }

    pub fn eval(&self, x: f64) -> f64 {
        phi_inverse_smooth(self.params(), x).expect("x in (0,1)") - self.w_s * x
    }

    pub fn deriv(&self, x: f64) -> f64 {
        self.epsilon / (x * (1.0 - x)) - self.w_s
    }

    pub fn second_deriv(&self, x: f64) -> f64 {
        self.epsilon * (2.0 * x - 1.0) / (x * x * (1.0 - x) * (1.0 - x))
    }

    /// Abscissae of the local extrema, `x_± = 1/2 ± sqrt(1/4 - ε/w_s)`.
    /// At `w_s = 4ε` the two coincide at 1/2; below that there are none.
    pub fn extrema(&self) -> Result<(f64, f64), BifurcationError> {
        let disc = 0.25 - self.epsilon / self.w_s;
        if disc < 0.0 {
            return Err(BifurcationError::NoExtrema {
                w_s: self.w_s,
                epsilon: self.epsilon,
            });
        }
        let root = disc.sqrt();
        Ok((0.5 - root, 0.5 + root))
    }
}

/// Leading-order fold location for one leading cell:
/// `w_p^SN = ε·ln ε + θ - ε(1 + ln w_s) + ε²/w_s`, dropping the O(ε³)
/// remainder. Requires `θ < w_s`.
pub fn wp_sn_asymptotic(epsilon: f64, theta: f64, w_s: f64) -> Result<f64, BifurcationError> {
    if theta >= w_s {
        return Err(BifurcationError::DomainError(format!(
            "requires theta < w_s, got theta = {theta}, w_s = {w_s}"
        )));
    }
    if epsilon <= 0.0 {
        return Err(BifurcationError::DomainError(
            "epsilon must be positive".into(),
        ));
    }
    Ok(epsilon * epsilon.ln() + theta - epsilon * (1.0 + w_s.ln()) + epsilon * epsilon / w_s)
}

/// Positions of the equilibrium pair just below the fold, `J₂ = ε/w_s ∓
/// sqrt(2ηε)/w_s` at `w_p = w_p^SN - η` (stable first).
pub fn sn_pair_positions(
    epsilon: f64,
    w_s: f64,
    eta: f64,
) -> Result<(f64, f64), BifurcationError> {
    if !(eta > 0.0 && eta < epsilon / 4.0) {
        return Err(BifurcationError::DomainError(format!(
            "eta = {eta} outside (0, epsilon/4 = {})",
            epsilon / 4.0
        )));
    }
    let center = epsilon / w_s;
    let offset = (2.0 * eta * epsilon).sqrt() / w_s;
    Ok((center - offset, center + offset))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FoldMethod {
    AsymptoticFormula,
    NumericBisection,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FoldResult {
    pub value: f64,
    pub bracket_width: f64,
    pub method: FoldMethod,
}

/// Does the network (smooth activation) still have a stable equilibrium of
/// the vertex-1 pattern (first cell saturated high, the rest low)?
fn stable_vertex_equilibrium_exists(net: &CompiledNetwork) -> bool {
    let template = predicted_equilibrium(net, 1);
    let eq = match refine_equilibrium(net, &template.components, 1e-11, 200) {
        Ok(eq) => eq,
        Err(_) => return false,
    };
    if eq.stability != Stability::Stable {
        return false;
    }
    let j1 = net.phi_scalar(eq.state[0]);
    if j1 <= 0.9 {
        return false;
    }
    (1..net.n()).all(|i| net.phi_scalar(eq.state[i]) < 0.5)
}

fn bisect_on_existence(
    build: impl Fn(f64) -> Result<CompiledNetwork, BifurcationError>,
    bracket: (f64, f64),
    tol: f64,
) -> Result<FoldResult, BifurcationError> {
    let (mut lo, mut hi) = bracket;
    let exists_lo = stable_vertex_equilibrium_exists(&build(lo)?);
    let exists_hi = stable_vertex_equilibrium_exists(&build(hi)?);
    if exists_lo == exists_hi {
        return Err(BifurcationError::BracketInvalid { lo, hi });
    }
    // orient so that the equilibrium exists at `lo`
    let flipped = !exists_lo;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let exists_mid = stable_vertex_equilibrium_exists(&build(mid)?);
        if exists_mid != flipped {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(FoldResult {
        value: 0.5 * (lo + hi),
        bracket_width: hi - lo,
        method: FoldMethod::NumericBisection,
    })
}

fn two_node_net(
    act: ActivationParams,
    w_s: f64,
    w_m: f64,
    w_p: f64,
) -> Result<CompiledNetwork, BifurcationError> {
    let g = DirectedGraph::from_edges(2, &[(1, 2)]).expect("two-node chain");
    let params = WeightParams {
        w_s,
        w_m,
        w_t: 0.0,
        w_p_default: w_p,
        w_p_overrides: Default::default(),
    };
    Ok(compile(g, params, ActivationKind::Smooth, act)?)
}

/// Bisects `w_p` for the fold of the two-cell chain `1 -> 2` (smooth
/// activation): below the critical value the active-vertex equilibrium
/// exists, above it only the successor state remains.
pub fn find_fold_2node(
    act: ActivationParams,
    w_s: f64,
    w_m: f64,
    bracket: (f64, f64),
    tol: f64,
) -> Result<FoldResult, BifurcationError> {
    bisect_on_existence(|w_p| two_node_net(act, w_s, w_m, w_p), bracket, tol)
}

/// Bisects `w_p` for the simultaneous saddle-node of the symmetric
/// three-cycle (the SNIC): below, the three vertex equilibria exist; above,
/// a periodic orbit replaces them.
pub fn snic_locate_3cycle(
    act: ActivationParams,
    w_s: f64,
    w_m: f64,
    w_t: f64,
    bracket: (f64, f64),
    tol: f64,
) -> Result<FoldResult, BifurcationError> {
    let build = |w_p: f64| -> Result<CompiledNetwork, BifurcationError> {
        let params = WeightParams {
            w_s,
            w_m,
            w_t,
            w_p_default: w_p,
            w_p_overrides: Default::default(),
        };
        Ok(compile(cycle_graph(3), params, ActivationKind::Smooth, act)?)
    };
    bisect_on_existence(build, bracket, tol)
}

/// Solves the double-exit equilibrium conditions
/// `g(J₃) = w_p₃ + w_t·J₄`, `g(J₄) = w_p₄ + w_t·J₃` for exit equilibria,
/// i.e. solutions with both components below the knee `x₊` of `g`. Runs 2-D
/// Newton from a seed grid and deduplicates; an empty result means the exit
/// states have been destroyed (the spontaneous side of the transition).
pub fn ks_exit_equilibria(
    gf: &GFunction,
    w_p3: f64,
    w_p4: f64,
    w_t: f64,
) -> Result<Vec<(f64, f64)>, BifurcationError> {
    let (_, x_plus) = gf.extrema()?;
    let hi = x_plus * 0.999;
    let lo = 1e-4;
    let n_seed = 24;
    let mut solutions: Vec<(f64, f64)> = Vec::new();

    for si in 0..n_seed {
        for sj in 0..n_seed {
            let mut j3 = lo + (hi - lo) * si as f64 / (n_seed - 1) as f64;
            let mut j4 = lo + (hi - lo) * sj as f64 / (n_seed - 1) as f64;
            let mut converged = false;
            for _ in 0..60 {
                let f1 = gf.eval(j3) - w_p3 - w_t * j4;
                let f2 = gf.eval(j4) - w_p4 - w_t * j3;
                if f1.abs() < 1e-12 && f2.abs() < 1e-12 {
                    converged = true;
                    break;
                }
                let a = gf.deriv(j3);
                let d = gf.deriv(j4);
                let det = a * d - w_t * w_t;
                if det.abs() < 1e-14 {
                    break;
                }
                let dj3 = (d * f1 + w_t * f2) / det;
                let dj4 = (w_t * f1 + a * f2) / det;
                j3 -= dj3;
                j4 -= dj4;
                if !(1e-12..=x_plus).contains(&j3) || !(1e-12..=x_plus).contains(&j4) {
                    break;
                }
            }
            if converged
                && !solutions
                    .iter()
                    .any(|&(a, b)| (a - j3).abs() < 1e-6 && (b - j4).abs() < 1e-6)
            {
                solutions.push((j3, j4));
            }
        }
    }
    solutions.sort_by(|a, b| a.partial_cmp(b).expect("finite solutions"));
    Ok(solutions)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PeriodMeasurement {
    pub period: f64,
    pub std_dev: f64,
    pub n_crossings: usize,
}

/// Measures the period of an attracting periodic orbit: integrates from the
/// vertex-1 template, discards `settle_time`, then averages the gaps
/// between upward crossings of `y_cell = level` (linearly interpolated).
pub fn measure_period(
    net: &CompiledNetwork,
    settle_time: f64,
    t_sim: f64,
    poincare_cell: usize,
    level: f64,
    dt: f64,
) -> Result<PeriodMeasurement, BifurcationError> {
    let template = predicted_equilibrium(net, 1);
    measure_period_from(net, &template.components, settle_time, t_sim, poincare_cell, level, dt)
}

pub fn measure_period_from(
    net: &CompiledNetwork,
    y0: &DVector<f64>,
    settle_time: f64,
    t_sim: f64,
    poincare_cell: usize,
    level: f64,
    dt: f64,
) -> Result<PeriodMeasurement, BifurcationError> {
    use crate::dynamics::{integrate_ode, InputSignal};
    // integrate in chunks so memory stays flat while crossings are streamed
    let idx = poincare_cell - 1;
    let mut crossings: Vec<f64> = Vec::new();
    let chunk = 50.0f64.min(t_sim);
    let mut t = 0.0;
    let mut y = y0.clone();
    let mut prev: Option<(f64, f64)> = None;
    while t < t_sim - 1e-12 {
        let t_end = (t + chunk).min(t_sim);
        let traj = integrate_ode(net, &y, (t, t_end), &InputSignal::Zero, dt, 1)?;
        for (time, state) in traj.times.iter().zip(&traj.states) {
            let v = state[idx];
            if let Some((pt, pv)) = prev {
                if *time > settle_time && pv < level && v >= level {
                    let frac = (level - pv) / (v - pv);
                    crossings.push(pt + frac * (time - pt));
                }
            }
            prev = Some((*time, v));
        }
        y = traj.final_state().clone();
        t = t_end;
    }
    if crossings.len() < 3 {
        return Err(BifurcationError::NoOscillation);
    }
    let gaps: Vec<f64> = crossings.windows(2).map(|w| w[1] - w[0]).collect();
    let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
    let var = gaps.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>() / gaps.len() as f64;
    Ok(PeriodMeasurement {
        period: mean,
        std_dev: var.sqrt(),
        n_crossings: crossings.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const ACT: ActivationParams = ActivationParams {
        epsilon: 0.05,
        theta: 0.5,
    };

    fn default_g() -> GFunction {
        GFunction::new(0.05, 0.5, 1.0)
    }

    #[test]
    fn extrema_match_the_closed_form() {
        let g = default_g();
        let (xm, xp) = g.extrema().unwrap();
        assert_abs_diff_eq!(xm, 0.5 - 0.2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(xp, 0.5 + 0.2f64.sqrt(), epsilon = 1e-15);
        assert!(g.deriv(xm).abs() < 1e-10);
        assert!(g.deriv(xp).abs() < 1e-10);
    }

    #[test]
    fn g_at_one_half() {
        let g = default_g();
        assert_abs_diff_eq!(g.eval(0.5), g.theta - g.w_s / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn extrema_degenerate_at_ws_equals_four_epsilon() {
        let g = GFunction::new(0.05, 0.5, 0.2);
        let (xm, xp) = g.extrema().unwrap();
        assert_eq!(xm, 0.5);
        assert_eq!(xp, 0.5);
        assert!(GFunction::new(0.05, 0.5, 0.19).extrema().is_err());
    }

    #[test]
    fn asymptotic_fold_at_default_parameters() {
        let v = wp_sn_asymptotic(0.05, 0.5, 1.0).unwrap();
        // 0.3027 to four significant figures
        assert_abs_diff_eq!(v, 0.3027, epsilon = 5e-5);
        assert_abs_diff_eq!(v, 0.302_713_386_322_300_5, epsilon = 1e-15);
    }

    #[test]
    fn asymptotic_fold_tends_to_theta() {
        let v = wp_sn_asymptotic(1e-8, 0.5, 1.0).unwrap();
        assert!((v - 0.5).abs() < 1e-5);
    }

    #[test]
    fn asymptotic_fold_small_epsilon_value() {
        let v = wp_sn_asymptotic(0.01, 0.5, 1.0).unwrap();
        assert_abs_diff_eq!(v, 0.444_048_298_140_119, epsilon = 1e-12);
    }

    #[test]
    fn asymptotic_fold_requires_theta_below_ws() {
        assert!(wp_sn_asymptotic(0.05, 1.0, 1.0).is_err());
        assert!(wp_sn_asymptotic(0.05, 1.2, 1.0).is_err());
    }

    #[test]
    fn numeric_fold_agrees_with_the_formula() {
        let fold = find_fold_2node(ACT, 1.0, -0.7, (0.25, 0.35), 1e-9).unwrap();
        assert!(fold.bracket_width < 1e-9);
        let formula = wp_sn_asymptotic(0.05, 0.5, 1.0).unwrap();
        assert!(
            (fold.value - formula).abs() < 5e-4,
            "numeric {} vs formula {formula}",
            fold.value
        );
        // and tighter at smaller epsilon, where the O(ε³) remainder shrinks
        let act = ActivationParams::new(0.01, 0.5);
        let fold = find_fold_2node(act, 1.0, -0.7, (0.40, 0.48), 1e-9).unwrap();
        let formula = wp_sn_asymptotic(0.01, 0.5, 1.0).unwrap();
        assert!(
            (fold.value - formula).abs() < 1e-4,
            "numeric {} vs formula {formula}",
            fold.value
        );
    }

    #[test]
    fn fold_bracket_must_straddle() {
        assert!(matches!(
            find_fold_2node(ACT, 1.0, -0.7, (0.25, 0.28), 1e-9),
            Err(BifurcationError::BracketInvalid { .. })
        ));
    }

    #[test]
    fn pair_positions_formula() {
        let (lo, hi) = sn_pair_positions(0.05, 1.0, 0.005).unwrap();
        assert_abs_diff_eq!(lo, 0.05 - 0.022_360_679_774_997_9, epsilon = 1e-12);
        assert_abs_diff_eq!(hi, 0.05 + 0.022_360_679_774_997_9, epsilon = 1e-12);
        // pair collides at the fold
        let (a, b) = sn_pair_positions(0.05, 1.0, 1e-12).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-5);
        assert!(sn_pair_positions(0.05, 1.0, 0.0125).is_err());
    }

    /// Refines the fold pair of the 2-node chain at w_p = fold - η and
    /// returns (stable J2, saddle J2).
    fn refined_pair(eta: f64) -> (f64, f64) {
        let fold = find_fold_2node(ACT, 1.0, -0.7, (0.25, 0.35), 1e-10).unwrap();
        let net = two_node_net(ACT, 1.0, -0.7, fold.value - eta).unwrap();
        let (_, j_hi) = sn_pair_positions(0.05, 1.0, eta).unwrap();

        let stable = refine_equilibrium(
            &net,
            &predicted_equilibrium(&net, 1).components,
            1e-12,
            200,
        )
        .unwrap();
        assert_eq!(stable.stability, Stability::Stable);

        // seed the saddle from the upper lemma position
        let act = net.act();
        let y2 = phi_inverse_smooth(act, j_hi).unwrap();
        let y1 = 1.0 - 0.7 * j_hi;
        let saddle =
            refine_equilibrium(&net, &DVector::from_vec(vec![y1, y2]), 1e-12, 200).unwrap();
        assert_eq!(saddle.stability, Stability::Saddle);

        (
            net.phi_scalar(stable.state[1]),
            net.phi_scalar(saddle.state[1]),
        )
    }

    #[test]
    fn refined_pair_matches_lemma_positions_to_leading_order() {
        // The lemma positions ε/w_s ± sqrt(2ηε)/w_s are leading-order: the
        // true pair sits asymmetrically around x- (= ε/w_s + ε² + ...) with
        // a remainder of a few ε². At η = 0.005 the measured gaps are
        // ~5e-3 and ~8e-3.
        let eta = 0.005;
        let (j_lo, j_hi) = sn_pair_positions(0.05, 1.0, eta).unwrap();
        let (j2_stable, j2_saddle) = refined_pair(eta);
        assert!(
            (j2_stable - j_lo).abs() < 8e-3,
            "stable J2 {j2_stable} vs {j_lo}"
        );
        assert!(
            (j2_saddle - j_hi).abs() < 8e-3,
            "saddle J2 {j2_saddle} vs {j_hi}"
        );
        // the pair straddles the extremum and the half-gap follows the
        // square-root law within ~10%
        let gf = default_g();
        let (xm, _) = gf.extrema().unwrap();
        assert!(j2_stable < xm && xm < j2_saddle);
        let half_gap = 0.5 * (j2_saddle - j2_stable);
        let sqrt_law = 0.5 * (j_hi - j_lo);
        assert!(
            (half_gap - sqrt_law).abs() / sqrt_law < 0.1,
            "half gap {half_gap} vs sqrt law {sqrt_law}"
        );
    }

    #[test]
    fn lemma_positions_improve_as_eta_shrinks() {
        let errs: Vec<f64> = [0.005, 0.00125]
            .iter()
            .map(|&eta| {
                let (j_lo, _) = sn_pair_positions(0.05, 1.0, eta).unwrap();
                let (j2_stable, _) = refined_pair(eta);
                (j2_stable - j_lo).abs()
            })
            .collect();
        assert!(errs[1] < errs[0], "errors not shrinking: {errs:?}");
    }

    #[test]
    fn snic_location_and_existence_sides() {
        let snic = snic_locate_3cycle(ACT, 1.0, -0.7, 0.0, (0.29, 0.32), 1e-9).unwrap();
        assert!(
            (snic.value - 0.30287).abs() < 5e-4,
            "snic at {}",
            snic.value
        );
        // consistency with the two-node fold
        let fold = find_fold_2node(ACT, 1.0, -0.7, (0.25, 0.35), 1e-9).unwrap();
        assert!((snic.value - fold.value).abs() < 1e-3);

        let below = crate::compiler::compile(
            cycle_graph(3),
            WeightParams::defaults(),
            ActivationKind::Smooth,
            ACT,
        )
        .unwrap();
        assert!(stable_vertex_equilibrium_exists(&below));
        assert!(!stable_vertex_equilibrium_exists(&below.with_wp(0.305)));
    }

    #[test]
    fn period_diverges_towards_the_snic() {
        let base = crate::compiler::compile(
            cycle_graph(3),
            WeightParams::defaults(),
            ActivationKind::Smooth,
            ACT,
        )
        .unwrap();
        let p_far = measure_period(&base.with_wp(0.305), 150.0, 1200.0, 1, 0.5, 1e-3).unwrap();
        let p_near = measure_period(&base.with_wp(0.3035), 150.0, 1200.0, 1, 0.5, 1e-3).unwrap();
        assert!(p_far.period > 10.0 && p_far.period.is_finite());
        assert!(
            p_near.period > p_far.period,
            "near {} !> far {}",
            p_near.period,
            p_far.period
        );
        assert!(p_far.std_dev < 0.1 * p_far.period);
    }

    #[test]
    fn no_oscillation_in_the_excitable_regime() {
        let net = crate::compiler::compile(
            cycle_graph(3),
            WeightParams::defaults(),
            ActivationKind::Smooth,
            ACT,
        )
        .unwrap();
        assert!(matches!(
            measure_period(&net, 50.0, 300.0, 1, 0.5, 1e-3),
            Err(BifurcationError::NoOscillation)
        ));
    }

    /// 1-D root of g(x) = value on a monotone stretch, by bisection.
    fn g_root(gf: &GFunction, value: f64, mut lo: f64, mut hi: f64) -> f64 {
        let rising = gf.eval(hi) > gf.eval(lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let above = gf.eval(mid) > value;
            if above == rising {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn decoupled_exit_equilibria_reduce_to_scalar_roots() {
        let gf = default_g();
        let (xm, xp) = gf.extrema().unwrap();
        let w_p = 0.3;
        let solutions = ks_exit_equilibria(&gf, w_p, w_p, 0.0).unwrap();
        // two scalar roots on (0, x-) and (x-, x+) give four pairs
        assert_eq!(solutions.len(), 4);
        let r_a = g_root(&gf, w_p, 1e-6, xm);
        let r_b = g_root(&gf, w_p, xm, xp);
        for &(j3, j4) in &solutions {
            assert!((j3 - r_a).abs() < 1e-9 || (j3 - r_b).abs() < 1e-9, "j3 {j3}");
            assert!((j4 - r_a).abs() < 1e-9 || (j4 - r_b).abs() < 1e-9, "j4 {j4}");
        }
    }

    #[test]
    fn exit_equilibria_vanish_above_the_fold_when_decoupled() {
        let gf = default_g();
        let solutions = ks_exit_equilibria(&gf, 0.306, 0.304, 0.0).unwrap();
        assert!(solutions.is_empty());
    }

    #[test]
    fn negative_transverse_weight_extends_existence() {
        // same w_p values as above, but w_t < 0 restores intersections
        let gf = default_g();
        let solutions = ks_exit_equilibria(&gf, 0.306, 0.304, -0.05).unwrap();
        assert!(!solutions.is_empty());
        for &(j3, j4) in &solutions {
            assert!(j3 > 0.0 && j3 < 0.2);
            assert!(j4 > 0.0 && j4 < 0.2);
        }
    }

    #[test]
    fn positive_transverse_weight_shrinks_existence() {
        let gf = default_g();
        // below the decoupled fold, so solutions exist at w_t = 0
        assert!(!ks_exit_equilibria(&gf, 0.302, 0.302, 0.0).unwrap().is_empty());
        // with w_t > 0 the boundary moves down past these values
        assert!(ks_exit_equilibria(&gf, 0.302, 0.302, 0.05).unwrap().is_empty());
        // but clearly subcritical pairs still exist
        assert!(!ks_exit_equilibria(&gf, 0.30, 0.298, 0.05).unwrap().is_empty());
    }
}
