//! Symbolic dynamics on top of trajectories: which cells are active when,
//! transition statistics, route classification for the double-exit network,
//! and the two-parameter noise sweep.

use std::collections::BTreeSet;
use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::activation::{phi, ActivationKind, ActivationParams};
use crate::compiler::{compile, predicted_equilibrium, CompiledNetwork, WeightParams};
use crate::dynamics::{integrate_ode, integrate_sde, InputSignal, NoiseSpec, Trajectory};
use crate::graph::kirk_silber_graph;
use crate::util::{derive_seed, maybe_par_map, Parallelism};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("symbolic sequence is not periodic with single-cell events")]
    NotPeriodic,
    #[error(transparent)]
    Compile(#[from] crate::compiler::CompileError),
    #[error(transparent)]
    Dynamics(#[from] crate::dynamics::DynamicsError),
}

/// One residence of the system in a fixed active set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymbolEvent {
    pub enter_time: f64,
    pub active: BTreeSet<usize>,
    pub duration: f64,
}

/// The trajectory reduced to a sequence of active-set residences;
/// consecutive events always carry distinct sets.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SymbolSequence {
    pub events: Vec<SymbolEvent>,
}

impl SymbolSequence {
    /// "1" or "3+4": CSV-safe label of an active set.
    pub fn label(set: &BTreeSet<usize>) -> String {
        if set.is_empty() {
            return "-".into();
        }
        set.iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join("+")
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t_enter,active_set,duration")?;
        for e in &self.events {
            writeln!(
                out,
                "{:.16e},{},{:.16e}",
                e.enter_time,
                Self::label(&e.active),
                e.duration
            )?;
        }
        Ok(())
    }
}

/// Thresholds and merge windows for symbol extraction.
///
/// `switch_window`: the outgoing cell of a handover keeps `φ(y) >
/// off_threshold` for roughly one decay time after the incoming cell
/// activates, so every transition produces a short overlap event that is
/// exactly the union of its neighbours. Overlaps shorter than this window
/// are counted as part of the transition rather than as residences;
/// genuine multi-active states persist far longer and survive.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SymbolOpts {
    pub on_threshold: f64,
    pub off_threshold: f64,
    pub debounce: f64,
    pub switch_window: f64,
}

impl Default for SymbolOpts {
    fn default() -> Self {
        SymbolOpts {
            on_threshold: 0.8,
            off_threshold: 0.2,
            debounce: 0.5,
            switch_window: 2.5,
        }
    }
}

/// Marks cell `j` active when `φ(y_j)` rises above the on threshold and
/// inactive when it falls below the off threshold (hysteresis), then emits
/// an event per change of the active set. Empty-set interludes shorter
/// than `debounce` and union-of-neighbour handover overlaps shorter than
/// `switch_window` are merged away.
pub fn extract_symbols(
    traj: &Trajectory,
    kind: ActivationKind,
    act: ActivationParams,
    opts: &SymbolOpts,
) -> SymbolSequence {
    let on_threshold = opts.on_threshold;
    let off_threshold = opts.off_threshold;
    assert!(
        on_threshold > off_threshold,
        "hysteresis requires on > off"
    );
    if traj.is_empty() {
        return SymbolSequence::default();
    }
    let n = traj.states[0].len();
    let mut flags: Vec<bool> = (0..n)
        .map(|j| phi(kind, act, traj.states[0][j]) >= on_threshold)
        .collect();
    let set_of = |flags: &[bool]| -> BTreeSet<usize> {
        flags
            .iter()
            .enumerate()
            .filter_map(|(j, &on)| on.then_some(j + 1))
            .collect()
    };

    // raw run-length segments of constant active set
    let mut raw: Vec<SymbolEvent> = Vec::new();
    let mut current = set_of(&flags);
    let mut enter = traj.times[0];
    for (t, state) in traj.times.iter().zip(&traj.states).skip(1) {
        for j in 0..n {
            let v = phi(kind, act, state[j]);
            if flags[j] {
                if v <= off_threshold {
                    flags[j] = false;
                }
            } else if v >= on_threshold {
                flags[j] = true;
            }
        }
        let set = set_of(&flags);
        if set != current {
            raw.push(SymbolEvent {
                enter_time: enter,
                active: std::mem::replace(&mut current, set),
                duration: t - enter,
            });
            enter = *t;
        }
    }
    raw.push(SymbolEvent {
        enter_time: enter,
        active: current,
        duration: traj.final_time() - enter,
    });

    // merge away short empty-set gaps and short handover overlaps
    let mut events: Vec<SymbolEvent> = Vec::new();
    for (i, seg) in raw.iter().enumerate() {
        if seg.active.is_empty() && seg.duration < opts.debounce {
            if let Some(prev) = events.last_mut() {
                prev.duration += seg.duration;
            }
            continue;
        }
        if seg.duration < opts.switch_window {
            if let (Some(prev), Some(next)) = (events.last(), raw.get(i + 1)) {
                let strictly_contains = |sub: &BTreeSet<usize>| {
                    sub.len() < seg.active.len() && sub.is_subset(&seg.active)
                };
                if strictly_contains(&prev.active) && strictly_contains(&next.active) {
                    events.last_mut().expect("prev exists").duration += seg.duration;
                    continue;
                }
            }
        }
        if let Some(prev) = events.last_mut() {
            if prev.active == seg.active {
                prev.duration += seg.duration;
                continue;
            }
        }
        events.push(seg.clone());
    }
    SymbolSequence { events }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ResidenceStats {
    pub count: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct TransitionStats {
    /// Ordered transition counts keyed by (from set, to set) labels.
    pub counts: std::collections::BTreeMap<(String, String), usize>,
    pub residence: std::collections::BTreeMap<String, ResidenceStats>,
}

pub fn transition_stats(seq: &SymbolSequence) -> TransitionStats {
    let mut stats = TransitionStats::default();
    for pair in seq.events.windows(2) {
        let key = (
            SymbolSequence::label(&pair[0].active),
            SymbolSequence::label(&pair[1].active),
        );
        *stats.counts.entry(key).or_insert(0) += 1;
    }
    for e in &seq.events {
        let entry = stats
            .residence
            .entry(SymbolSequence::label(&e.active))
            .or_insert(ResidenceStats {
                count: 0,
                mean: 0.0,
                min: f64::INFINITY,
                max: f64::NEG_INFINITY,
            });
        entry.count += 1;
        entry.mean += e.duration;
        entry.min = entry.min.min(e.duration);
        entry.max = entry.max.max(e.duration);
    }
    for entry in stats.residence.values_mut() {
        entry.mean /= entry.count as f64;
    }
    stats
}

/// Route of a double-exit orbit: does it excurse through cell 3 alone or
/// through both exit cells?
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum KsRoute {
    /// Exactly one of the exit cells reaches the active band per excursion.
    RouteP3,
    /// Both exit cells become active.
    RouteP34,
    Other,
}

/// Classifies a post-transient trajectory of the four-cell double-exit
/// network by the maxima of `y_3` and `y_4` (threshold `θ + 0.25`).
pub fn classify_ks_route(traj: &Trajectory, theta: f64) -> KsRoute {
    let gate = theta + 0.25;
    let mut max3 = f64::NEG_INFINITY;
    let mut max4 = f64::NEG_INFINITY;
    for s in &traj.states {
        max3 = max3.max(s[2]);
        max4 = max4.max(s[3]);
    }
    match (max3 > gate, max4 > gate) {
        (true, true) => KsRoute::RouteP34,
        (true, false) | (false, true) => KsRoute::RouteP3,
        (false, false) => KsRoute::Other,
    }
}

/// Exit tallies out of the vertex-2 bottleneck: how many excursions went
/// through cell 3 only, cell 4 only, or both simultaneously.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct P2ExitCounts {
    pub n_p3: usize,
    pub n_p4: usize,
    pub n_p34: usize,
}

impl P2ExitCounts {
    pub fn ratio_p34(&self) -> Option<f64> {
        let total = self.n_p3 + self.n_p4 + self.n_p34;
        (total > 0).then(|| self.n_p34 as f64 / total as f64)
    }
}

/// Counts transitions out of `{2}`. An exit is attributed to the
/// both-active region only if cells 3 and 4 appear in one event's set
/// together (i.e. simultaneously active before either deactivates).
pub fn count_p2_exits(seq: &SymbolSequence) -> P2ExitCounts {
    let two: BTreeSet<usize> = [2].into();
    let one: BTreeSet<usize> = [1].into();
    let mut counts = P2ExitCounts::default();
    let events = &seq.events;
    for (i, e) in events.iter().enumerate() {
        if e.active != two {
            continue;
        }
        let mut saw3 = false;
        let mut saw4 = false;
        let mut saw_both = false;
        for later in &events[i + 1..] {
            if later.active == two || later.active == one {
                break;
            }
            let has3 = later.active.contains(&3);
            let has4 = later.active.contains(&4);
            saw3 |= has3;
            saw4 |= has4;
            saw_both |= has3 && has4;
        }
        if saw_both {
            counts.n_p34 += 1;
        } else if saw3 {
            counts.n_p3 += 1;
        } else if saw4 {
            counts.n_p4 += 1;
        }
    }
    counts
}

/// Specification of a `(w_t, w_p)` noise sweep over the double-exit
/// network. `w_p3 = w_p + dw`, `w_p4 = w_p`.
#[derive(Clone, Debug, Serialize)]
pub struct SweepSpec {
    pub wt_values: Vec<f64>,
    pub wp_values: Vec<f64>,
    pub dw: f64,
    pub sigma: f64,
    pub reps: usize,
    pub t_sim: f64,
    pub dt: f64,
    pub base_seed: u64,
    #[serde(skip)]
    pub parallelism: Parallelism,
}

impl SweepSpec {
    pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        assert!(n >= 1);
        if n == 1 {
            return vec![lo];
        }
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect()
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SweepCell {
    pub w_t: f64,
    pub w_p: f64,
    pub counts: P2ExitCounts,
    pub ratio: Option<f64>,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepGrid {
    pub spec: SweepSpec,
    /// Row-major: one row per `w_t` value, one column per `w_p` value.
    pub cells: Vec<SweepCell>,
}

impl SweepGrid {
    pub fn cell(&self, i_wt: usize, i_wp: usize) -> &SweepCell {
        &self.cells[i_wt * self.spec.wp_values.len() + i_wp]
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "w_t,w_p,ratio,n_p3,n_p4,n_p34,seed")?;
        for c in &self.cells {
            let ratio = c
                .ratio
                .map(|r| format!("{r:.16e}"))
                .unwrap_or_default();
            writeln!(
                out,
                "{:.16e},{:.16e},{},{},{},{},{}",
                c.w_t, c.w_p, ratio, c.counts.n_p3, c.counts.n_p4, c.counts.n_p34, c.seed
            )?;
        }
        Ok(())
    }
}

/// Runs the noisy double-exit sweep: for every `(w_t, w_p)` cell, `reps`
/// seeded simulations are tallied for exits out of the vertex-2 bottleneck.
/// Per-cell seeds derive from `base_seed` and the cell index, so results do
/// not depend on execution order.
pub fn ks_sweep(spec: &SweepSpec) -> Result<SweepGrid, AnalysisError> {
    let mut tasks = Vec::new();
    for (i, &w_t) in spec.wt_values.iter().enumerate() {
        for (j, &w_p) in spec.wp_values.iter().enumerate() {
            let cell_index = (i * spec.wp_values.len() + j) as u64;
            tasks.push((w_t, w_p, derive_seed(spec.base_seed, cell_index)));
        }
    }
    let results: Vec<Result<SweepCell, AnalysisError>> =
        maybe_par_map(&tasks, spec.parallelism, |&(w_t, w_p, cell_seed)| {
            let counts = sweep_cell_counts(spec, w_t, w_p, cell_seed)?;
            Ok(SweepCell {
                w_t,
                w_p,
                counts,
                ratio: counts.ratio_p34(),
                seed: cell_seed,
            })
        });
    let mut cells = Vec::with_capacity(results.len());
    for r in results {
        cells.push(r?);
    }
    Ok(SweepGrid {
        spec: spec.clone(),
        cells,
    })
}

/// The double-exit test network: the four-vertex graph compiled with
/// `w_p3 = w_p + dw`, `w_p4 = w_p` and the trailing weight `w_m = -0.5`
/// used throughout the double-exit analysis (a weaker trailing pull than
/// the single-exit default, which keeps the second exit cell competitive).
pub fn kirk_silber_network(
    w_p: f64,
    dw: f64,
    w_t: f64,
) -> Result<CompiledNetwork, crate::compiler::CompileError> {
    let params = WeightParams {
        w_s: 1.0,
        w_m: -0.5,
        w_t,
        w_p_default: w_p,
        w_p_overrides: Default::default(),
    }
    .with_override(2, 3, w_p + dw)
    .with_override(2, 4, w_p);
    compile(
        kirk_silber_graph(),
        params,
        ActivationKind::Smooth,
        ActivationParams::new(0.05, 0.5),
    )
}

fn sweep_cell_counts(
    spec: &SweepSpec,
    w_t: f64,
    w_p: f64,
    cell_seed: u64,
) -> Result<P2ExitCounts, AnalysisError> {
    let net = kirk_silber_network(w_p, spec.dw, w_t)?;
    let y0 = predicted_equilibrium(&net, 1).components;

    let mut total = P2ExitCounts::default();
    for rep in 0..spec.reps {
        let traj = if spec.sigma > 0.0 {
            let seed = derive_seed(cell_seed, rep as u64);
            integrate_sde(
                &net,
                &y0,
                (0.0, spec.t_sim),
                &NoiseSpec::new(spec.sigma, seed),
                spec.dt,
                10,
            )?
        } else {
            integrate_ode(&net, &y0, (0.0, spec.t_sim), &InputSignal::Zero, spec.dt, 10)?
        };
        let seq = extract_symbols(&traj, net.kind(), net.act(), &SymbolOpts::default());
        let c = count_p2_exits(&seq);
        total.n_p3 += c.n_p3;
        total.n_p4 += c.n_p4;
        total.n_p34 += c.n_p34;
    }
    Ok(total)
}

/// Per-branch-vertex verdict: did the periodic orbit leave through the
/// strongest outgoing connection?
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BranchReport {
    pub vertex: usize,
    pub chosen: usize,
    pub strongest: usize,
    pub chosen_is_strongest: bool,
}

/// Extracts the periodic single-active cycle from a symbol sequence and,
/// for every cycle vertex with two or more outgoing edges, reports whether
/// the successor taken carries the largest `w_p` among the out-edges.
pub fn branch_preference_check(
    net: &CompiledNetwork,
    seq: &SymbolSequence,
) -> Result<Vec<BranchReport>, AnalysisError> {
    let labels: Vec<usize> = seq
        .events
        .iter()
        .map(|e| {
            if e.active.len() == 1 {
                Ok(*e.active.first().expect("singleton"))
            } else {
                Err(AnalysisError::NotPeriodic)
            }
        })
        .collect::<Result<_, _>>()?;
    let len = labels.len();
    let mut period = None;
    for p in 2..=len / 2 {
        if len >= 2 * p && labels[len - 2 * p..len - p] == labels[len - p..] {
            period = Some(p);
            break;
        }
    }
    let p = period.ok_or(AnalysisError::NotPeriodic)?;
    let cycle = &labels[len - p..];

    let graph = net.graph();
    let params = net.params();
    let mut reports: Vec<BranchReport> = Vec::new();
    for (i, &v) in cycle.iter().enumerate() {
        let out: Vec<usize> = graph
            .vertices()
            .filter(|&j| graph.has_edge(v, j))
            .collect();
        if out.len() < 2 {
            continue;
        }
        let chosen = cycle[(i + 1) % p];
        let strongest = out
            .iter()
            .copied()
            .max_by(|&a, &b| {
                params
                    .effective_wp(v, a)
                    .partial_cmp(&params.effective_wp(v, b))
                    .expect("finite weights")
            })
            .expect("out-degree >= 2");
        if !reports
            .iter()
            .any(|r| r.vertex == v && r.chosen == chosen)
        {
            reports.push(BranchReport {
                vertex: v,
                chosen,
                strongest,
                chosen_is_strongest: chosen == strongest,
            });
        }
    }
    Ok(reports)
}

/// Activation raster: one column of `φ(y_j)` per cell, one row per sample.
pub fn write_raster_csv<W: Write>(
    traj: &Trajectory,
    kind: ActivationKind,
    act: ActivationParams,
    mut out: W,
) -> std::io::Result<()> {
    let n = traj.states.first().map_or(0, |s| s.len());
    write!(out, "t")?;
    for j in 1..=n {
        write!(out, ",phi_y{j}")?;
    }
    writeln!(out)?;
    for (t, state) in traj.times.iter().zip(&traj.states) {
        write!(out, "{t:.16e}")?;
        for j in 0..n {
            write!(out, ",{:.16e}", phi(kind, act, state[j]))?;
        }
        writeln!(out)?;
    }
    Ok(())
}
