// scratch calibration for seeded noise cases
use excitnet::activation::{ActivationKind, ActivationParams};
use excitnet::analysis::*;
use excitnet::compiler::*;
use excitnet::dynamics::*;
use excitnet::equilibria::refine_template;
use excitnet::graph::*;

fn main() {
    let which = std::env::args().nth(1).unwrap_or_default();
    if which == "6b" {
        // 3-cycle, w_p=0.3, sigma=0.05, T=300: want strictly cyclic >=5 transitions
        let net = compile(cycle_graph(3), WeightParams::defaults(), ActivationKind::Smooth,
            ActivationParams::new(0.05, 0.5)).unwrap();
        let eq = refine_template(&net, 1, 1e-10, 100).unwrap();
        for seed in 0..8u64 {
            let traj = integrate_sde(&net, &eq.state, (0.0, 300.0), &NoiseSpec::new(0.05, seed), 1e-3, 10).unwrap();
            let seq = extract_symbols(&traj, net.kind(), net.act(), &SymbolOpts::default());
            let labels: Vec<String> = seq.events.iter().map(|e| SymbolSequence::label(&e.active)).collect();
            let singles = seq.events.iter().all(|e| e.active.len() == 1);
            let cyclic = seq.events.windows(2).all(|p| {
                p[0].active.len() == 1 && p[1].active.len() == 1 &&
                *p[1].active.first().unwrap() == p[0].active.first().unwrap() % 3 + 1
            });
            println!("seed {seed}: events={} singles={singles} cyclic={cyclic} [{}]", seq.events.len(), labels.join(" "));
        }
    } else if which == "8c" {
        for seed in 0..8u64 {
            let net = kirk_silber_network(0.3, 0.002, 0.0).unwrap();
            let y0 = predicted_equilibrium(&net, 1).components;
            let traj = integrate_sde(&net, &y0, (0.0, 500.0), &NoiseSpec::new(0.05, seed), 1e-3, 10).unwrap();
            let seq = extract_symbols(&traj, net.kind(), net.act(), &SymbolOpts::default());
            let c = count_p2_exits(&seq);
            println!("seed {seed}: p3={} p4={} p34={}", c.n_p3, c.n_p4, c.n_p34);
        }
    } else if which == "8d" {
        for base_seed in 0..4u64 {
            let spec = SweepSpec {
                wt_values: SweepSpec::linspace(-0.4, 0.0, 5),
                wp_values: vec![0.300, 0.305, 0.310, 0.315, 0.320],
                dw: 0.002, sigma: 0.05, reps: 2, t_sim: 500.0, dt: 1e-3,
                base_seed, parallelism: Default::default(),
            };
            let grid = ks_sweep(&spec).unwrap();
            let row: Vec<String> = (0..5).map(|i| {
                let c = grid.cell(i, 3);
                format!("{:.3}({}/{})", c.ratio.unwrap_or(f64::NAN), c.counts.n_p34,
                    c.counts.n_p3 + c.counts.n_p4 + c.counts.n_p34)
            }).collect();
            println!("base {base_seed} wp=0.315 row over wt: {}", row.join("  "));
        }
    } else if which == "9" {
        let g = ten_node_demo();
        // deterministic: U(0.32,0.34), w_t=-0.3
        for wseed in 0..6u64 {
            let mut params = WeightParams::defaults();
            params.w_p_default = 0.33;
            params.w_t = -0.3;
            params.w_p_overrides = random_wp_overrides(&g, 0.32, 0.34, wseed);
            let net = compile(g.clone(), params, ActivationKind::Smooth, ActivationParams::new(0.05, 0.5)).unwrap();
            let y0 = predicted_equilibrium(&net, 1).components;
            let warm = integrate_ode(&net, &y0, (0.0, 200.0), &InputSignal::Zero, 1e-3, 100000).unwrap();
            let traj = integrate_ode(&net, warm.final_state(), (0.0, 300.0), &InputSignal::Zero, 1e-3, 10).unwrap();
            let seq = extract_symbols(&traj, net.kind(), net.act(), &SymbolOpts::default());
            match branch_preference_check(&net, &seq) {
                Ok(reps) => {
                    let all = reps.iter().all(|r| r.chosen_is_strongest);
                    let cyc: Vec<String> = seq.events.iter().rev().take(8).map(|e| SymbolSequence::label(&e.active)).collect();
                    println!("wseed {wseed}: branches={} all_max={all} tail: {}", reps.len(), cyc.join(" "));
                }
                Err(e) => println!("wseed {wseed}: {e}"),
            }
        }
    } else if which == "9n" {
        let g = ten_node_demo();
        for (wt, tag) in [(-0.3, "supp"), (0.0, "free")] {
            for seed in 0..6u64 {
                let mut params = WeightParams::defaults();
                params.w_p_default = 0.31;
                params.w_t = wt;
                params.w_p_overrides = random_wp_overrides(&g, 0.30, 0.32, 123);
                let net = compile(g.clone(), params, ActivationKind::Smooth, ActivationParams::new(0.05, 0.5)).unwrap();
                let y0 = predicted_equilibrium(&net, 1).components;
                let traj = integrate_sde(&net, &y0, (0.0, 300.0), &NoiseSpec::new(0.01, seed), 1e-3, 10).unwrap();
                let seq = extract_symbols(&traj, net.kind(), net.act(), &SymbolOpts::default());
                let max_set = seq.events.iter().map(|e| e.active.len()).max().unwrap_or(0);
                let n_multi = seq.events.iter().filter(|e| e.active.len() >= 2).count();
                println!("{tag} wt={wt} seed {seed}: events={} max|set|={max_set} multi={n_multi}", seq.events.len());
            }
        }
    }
}
