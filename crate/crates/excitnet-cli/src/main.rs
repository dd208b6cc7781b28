//! `excitnet`: compile directed graphs into CTRNNs with excitable network
//! attractors, then simulate, verify and analyze them.
//!
//! Exit codes: 0 success / affirmative verdict, 1 domain-negative result
//! (constraint violations, failed realization, absent equilibria, invalid
//! bracket), 2 usage or I/O errors.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use excitnet::activation::{ActivationKind, ActivationParams};
use excitnet::analysis::{
    extract_symbols, ks_sweep, write_raster_csv, SweepSpec, SymbolOpts,
};
use excitnet::bifurcation::{
    find_fold_2node, ks_exit_equilibria, snic_locate_3cycle, GFunction,
};
use excitnet::compiler::{
    compile, predicted_equilibrium, CompiledNetwork, ParamsConfig, WeightParams,
};
use excitnet::dynamics::{integrate_sde, InputSignal, NoiseSpec, Trajectory};
use excitnet::equilibria::refine_template;
use excitnet::excitability::{realize_graph_check, ConnectionSettings};
use excitnet::graph::{
    load_graph, random_constrained_graph, validate_constraints, GraphFile,
};
use excitnet::nalgebra::DVector;

#[derive(Parser)]
#[command(
    name = "excitnet",
    about = "Excitable network attractors in continuous-time recurrent neural networks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a graph against the construction constraints.
    Validate(ValidateArgs),
    /// Compile a graph into the CTRNN weight matrix.
    Compile(CompileArgs),
    /// Integrate the network deterministically or with additive noise.
    Simulate(SimulateArgs),
    /// Verify that the compiled network realizes its graph.
    Verify(VerifyArgs),
    /// Locate folds, the three-cycle SNIC, or double-exit equilibria.
    Bifurcate(BifurcateArgs),
    /// Run the noisy (w_t, w_p) sweep of the double-exit network.
    Sweep(SweepArgs),
    /// Generate a random graph satisfying the constraints.
    Randgraph(RandgraphArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ActivationArg {
    Smooth,
    Piecewise,
}

impl From<ActivationArg> for ActivationKind {
    fn from(a: ActivationArg) -> Self {
        match a {
            ActivationArg::Smooth => ActivationKind::Smooth,
            ActivationArg::Piecewise => ActivationKind::PiecewiseAffine,
        }
    }
}

/// Parameter sources, resolved in order: --config file, else --delta
/// recipe, else the default smooth set; individual flags override fields.
#[derive(Args, Clone)]
struct ParamArgs {
    /// JSON parameter file: {"delta": ...} or the explicit form.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Build parameters from the closed-form recipe for this threshold.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    wp: Option<f64>,
    #[arg(long)]
    wt: Option<f64>,
    #[arg(long)]
    wm: Option<f64>,
    #[arg(long)]
    ws: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long, value_enum)]
    activation: Option<ActivationArg>,
}

impl ParamArgs {
    /// Fully resolved, always the explicit form; serializable and
    /// losslessly round-trippable.
    fn resolve(&self) -> Result<ParamsConfig> {
        let base = if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            serde_json::from_str::<ParamsConfig>(&text)
                .with_context(|| format!("parsing config {}", path.display()))?
        } else if let Some(delta) = self.delta {
            ParamsConfig::DeltaRecipe {
                delta,
                activation: self.activation.map(Into::into),
            }
        } else {
            ParamsConfig::default_smooth()
        };
        let (kind, act, weights) = base.resolve().map_err(|e| anyhow!("{e}"))?;
        Ok(ParamsConfig::Explicit {
            epsilon: self.epsilon.unwrap_or(act.epsilon),
            theta: self.theta.unwrap_or(act.theta),
            w_s: self.ws.unwrap_or(weights.w_s),
            w_m: self.wm.unwrap_or(weights.w_m),
            w_t: self.wt.unwrap_or(weights.w_t),
            w_p: self.wp.unwrap_or(weights.w_p_default),
            w_p_overrides: weights
                .w_p_overrides
                .iter()
                .map(|(&(i, j), &v)| (i, j, v))
                .collect(),
            activation: self.activation.map(Into::into).unwrap_or(kind),
        })
    }
}

fn resolved_parts(
    resolved: &ParamsConfig,
) -> Result<(ActivationKind, ActivationParams, WeightParams)> {
    resolved.resolve().map_err(|e| anyhow!("{e}"))
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Also report vertices with no outgoing edges.
    #[arg(long)]
    require_no_sink: bool,
}

#[derive(Args)]
struct CompileArgs {
    #[arg(long)]
    graph: PathBuf,
    #[command(flatten)]
    params: ParamArgs,
    /// Output format for the weight matrix.
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    graph: PathBuf,
    #[command(flatten)]
    params: ParamArgs,
    /// Simulation length in time units.
    #[arg(long = "T", default_value_t = 100.0)]
    t_end: f64,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    /// Noise amplitude; zero selects the deterministic integrator.
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Vertex whose equilibrium is the initial condition.
    #[arg(long, default_value_t = 1)]
    start_vertex: usize,
    /// Extra kick "cell:amplitude" added to the initial condition.
    #[arg(long)]
    kick: Option<String>,
    /// Record every n-th step in the outputs.
    #[arg(long, default_value_t = 10)]
    stride: usize,
    /// Write J = φ(y) columns instead of raw states.
    #[arg(long)]
    jcoords: bool,
    /// Trajectory CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the extracted symbol sequence.
    #[arg(long)]
    symbols_out: Option<PathBuf>,
    /// Also write the activation raster (one φ(y_j) column per cell).
    #[arg(long)]
    raster_out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    graph: PathBuf,
    #[command(flatten)]
    params: ParamArgs,
    /// Perturbation amplitude for the connection tests; defaults to the
    /// --delta recipe value when that is given, else 0.4.
    #[arg(long)]
    amplitude: Option<f64>,
    #[arg(long, default_value_t = 500.0)]
    t_max: f64,
    #[arg(long, default_value_t = 1e-6)]
    conv_tol: f64,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    /// Fail validation when the graph has sinks.
    #[arg(long)]
    require_no_sink: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum BifurcationTarget {
    /// Fold of the two-cell chain as w_p varies.
    Fold2,
    /// Simultaneous saddle-node of the symmetric three-cycle.
    Snic3,
    /// Double-exit equilibria of the four-cell network.
    Ksexit,
}

#[derive(Args)]
struct BifurcateArgs {
    #[arg(long, value_enum)]
    which: BifurcationTarget,
    #[command(flatten)]
    params: ParamArgs,
    /// Bisection bracket "lo:hi" on w_p (fold2, snic3).
    #[arg(long, default_value = "0.25:0.35")]
    bracket: String,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Exit weight toward cell 3 (ksexit); defaults to w_p.
    #[arg(long)]
    wp3: Option<f64>,
    /// Exit weight toward cell 4 (ksexit); defaults to w_p.
    #[arg(long)]
    wp4: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// w_t axis as "lo:hi:steps".
    #[arg(long, default_value = "-0.4:0.0:5", allow_hyphen_values = true)]
    wt_range: String,
    /// w_p axis as "lo:hi:steps".
    #[arg(long, default_value = "0.3:0.32:5", allow_hyphen_values = true)]
    wp_range: String,
    /// Asymmetry between the two exit weights (w_p3 = w_p + dw).
    #[arg(long, default_value_t = 0.002)]
    dw: f64,
    #[arg(long, default_value_t = 0.05)]
    sigma: f64,
    #[arg(long, default_value_t = 2)]
    reps: usize,
    #[arg(long = "T", default_value_t = 500.0)]
    t_end: f64,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RandgraphArgs {
    #[arg(long)]
    n: usize,
    /// Target edge density in (0,1).
    #[arg(long)]
    p: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Retry until the graph has no sinks.
    #[arg(long)]
    require_no_sink: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Validate(args) => cmd_validate(args),
        Command::Compile(args) => cmd_compile(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Bifurcate(args) => cmd_bifurcate(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Randgraph(args) => cmd_randgraph(args),
    }
}

fn write_output(out: Option<&Path>, contents: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, contents)
            .with_context(|| format!("writing {}", path.display()))?,
        None => {
            std::io::stdout().write_all(contents.as_bytes())?;
        }
    }
    Ok(())
}

/// Compact one-line config echo embedded in CSV headers; JSON outputs embed
/// the same value under a "config" field.
fn config_line<T: Serialize>(config: &T) -> String {
    format!(
        "# config: {}",
        serde_json::to_string(config).expect("config serializes")
    )
}

fn build_network(graph_path: &Path, resolved: &ParamsConfig) -> Result<CompiledNetwork> {
    let graph = load_graph(graph_path)
        .map_err(|e| anyhow!("loading graph {}: {e}", graph_path.display()))?;
    let (kind, act, weights) = resolved_parts(resolved)?;
    compile(graph, weights, kind, act).map_err(|e| anyhow!("{e}"))
}

fn cmd_validate(args: ValidateArgs) -> Result<ExitCode> {
    let graph = load_graph(&args.graph)
        .map_err(|e| anyhow!("loading graph {}: {e}", args.graph.display()))?;
    let report = validate_constraints(&graph, args.require_no_sink);
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(if report.valid {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_compile(args: CompileArgs) -> Result<ExitCode> {
    let resolved = args.params.resolve()?;
    let net = match build_network(&args.graph, &resolved) {
        Ok(net) => net,
        Err(e) => {
            // constraint violations and bad overrides are domain results
            eprintln!("{e:#}");
            return Ok(ExitCode::from(1));
        }
    };
    let echo = serde_json::json!({
        "command": "compile",
        "graph": args.graph.display().to_string(),
        "params": &resolved,
    });
    let text = match args.format {
        FormatArg::Csv => {
            let mut s = String::new();
            s.push_str(&config_line(&echo));
            s.push('\n');
            for i in 0..net.n() {
                let row: Vec<String> = (0..net.n())
                    .map(|j| format!("{:.16e}", net.weights()[(i, j)]))
                    .collect();
                s.push_str(&row.join(","));
                s.push('\n');
            }
            s
        }
        FormatArg::Json => {
            let rows: Vec<Vec<f64>> = (0..net.n())
                .map(|i| (0..net.n()).map(|j| net.weights()[(i, j)]).collect())
                .collect();
            let value = serde_json::json!({
                "config": echo,
                "n": net.n(),
                "weights": rows,
            });
            format!("{}\n", serde_json::to_string_pretty(&value)?)
        }
    };
    write_output(args.out.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}

fn parse_kick(spec: &str) -> Result<(usize, f64)> {
    let (cell, amp) = spec
        .split_once(':')
        .ok_or_else(|| anyhow!("--kick expects \"cell:amplitude\", got {spec}"))?;
    Ok((cell.trim().parse()?, amp.trim().parse()?))
}

fn initial_state(net: &CompiledNetwork, start_vertex: usize, kick: Option<&str>) -> Result<DVector<f64>> {
    if start_vertex < 1 || start_vertex > net.n() {
        return Err(anyhow!(
            "--start-vertex {start_vertex} out of range 1..={}",
            net.n()
        ));
    }
    // refine where possible; in the spontaneous regime the template itself
    // is the natural start
    let mut y0 = match refine_template(net, start_vertex, 1e-10, 200) {
        Ok(eq) => eq.state,
        Err(_) => {
            eprintln!(
                "note: vertex {start_vertex} equilibrium did not refine; starting from the template"
            );
            predicted_equilibrium(net, start_vertex).components
        }
    };
    if let Some(spec) = kick {
        let (cell, amp) = parse_kick(spec)?;
        if cell < 1 || cell > net.n() {
            return Err(anyhow!("--kick cell {cell} out of range 1..={}", net.n()));
        }
        y0[cell - 1] += amp;
    }
    Ok(y0)
}

fn cmd_simulate(args: SimulateArgs) -> Result<ExitCode> {
    let resolved = args.params.resolve()?;
    let net = build_network(&args.graph, &resolved)?;
    let y0 = initial_state(&net, args.start_vertex, args.kick.as_deref())?;

    let traj: Trajectory = if args.sigma > 0.0 {
        integrate_sde(
            &net,
            &y0,
            (0.0, args.t_end),
            &NoiseSpec::new(args.sigma, args.seed),
            args.dt,
            args.stride,
        )
        .map_err(|e| anyhow!("{e}"))?
    } else {
        excitnet::dynamics::integrate_ode(
            &net,
            &y0,
            (0.0, args.t_end),
            &InputSignal::Zero,
            args.dt,
            args.stride,
        )
        .map_err(|e| anyhow!("{e}"))?
    };

    let echo = serde_json::json!({
        "command": "simulate",
        "graph": args.graph.display().to_string(),
        "params": &resolved,
        "T": args.t_end,
        "dt": args.dt,
        "sigma": args.sigma,
        "seed": args.seed,
        "start_vertex": args.start_vertex,
        "kick": args.kick,
        "stride": args.stride,
        "jcoords": args.jcoords,
    });

    let mut buf = Vec::new();
    writeln!(buf, "{}", config_line(&echo))?;
    if args.jcoords {
        let act = net.act();
        let kind = net.kind();
        traj.write_csv(&mut buf, "J", |v| excitnet::activation::phi(kind, act, v))?;
    } else {
        traj.write_csv(&mut buf, "y", |v| v)?;
    }
    write_output(args.out.as_deref(), std::str::from_utf8(&buf)?)?;

    if let Some(path) = &args.symbols_out {
        let seq = extract_symbols(&traj, net.kind(), net.act(), &SymbolOpts::default());
        let mut buf = Vec::new();
        writeln!(buf, "{}", config_line(&echo))?;
        seq.write_csv(&mut buf)?;
        std::fs::write(path, &buf)?;
    }
    if let Some(path) = &args.raster_out {
        let mut buf = Vec::new();
        writeln!(buf, "{}", config_line(&echo))?;
        write_raster_csv(&traj, net.kind(), net.act(), &mut buf)?;
        std::fs::write(path, &buf)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode> {
    let resolved = args.params.resolve()?;
    let graph = load_graph(&args.graph)
        .map_err(|e| anyhow!("loading graph {}: {e}", args.graph.display()))?;
    let constraint_report = validate_constraints(&graph, args.require_no_sink);
    if !constraint_report.valid {
        println!("{}", serde_json::to_string_pretty(&constraint_report)?);
        return Ok(ExitCode::from(1));
    }
    let (kind, act, weights) = resolved_parts(&resolved)?;
    let net = match compile(graph, weights, kind, act) {
        Ok(net) => net,
        Err(e) => {
            eprintln!("{e:#}");
            return Ok(ExitCode::from(1));
        }
    };
    let settings = ConnectionSettings {
        t_max: args.t_max,
        conv_tol: args.conv_tol,
        dt: args.dt,
        ..Default::default()
    };
    let report = match realize_graph_check(&net, args.delta, &settings) {
        Ok(report) => report,
        Err(e) => {
            eprintln!("{e:#}");
            return Ok(ExitCode::from(1));
        }
    };
    let echo = serde_json::json!({
        "command": "verify",
        "graph": args.graph.display().to_string(),
        "params": &resolved,
        "delta": args.delta,
        "t_max": args.t_max,
        "conv_tol": args.conv_tol,
        "dt": args.dt,
    });
    let value = serde_json::json!({
        "config": echo,
        "report": report,
    });
    let text = format!("{}\n", serde_json::to_string_pretty(&value)?);
    write_output(args.out.as_deref(), &text)?;
    Ok(if value["report"]["verdict"].as_bool() == Some(true) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn parse_range2(spec: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 2 {
        return Err(anyhow!("expected \"lo:hi\", got {spec}"));
    }
    Ok((parts[0].trim().parse()?, parts[1].trim().parse()?))
}

fn parse_range3(spec: &str) -> Result<(f64, f64, usize)> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(anyhow!("expected \"lo:hi:steps\", got {spec}"));
    }
    Ok((
        parts[0].trim().parse()?,
        parts[1].trim().parse()?,
        parts[2].trim().parse()?,
    ))
}

fn cmd_bifurcate(args: BifurcateArgs) -> Result<ExitCode> {
    let resolved = args.params.resolve()?;
    let (_, act, weights) = resolved_parts(&resolved)?;
    let echo = serde_json::json!({
        "command": "bifurcate",
        "which": format!("{:?}", args.which).to_lowercase(),
        "params": &resolved,
        "bracket": args.bracket,
        "tol": args.tol,
    });
    match args.which {
        BifurcationTarget::Fold2 | BifurcationTarget::Snic3 => {
            let bracket = parse_range2(&args.bracket)?;
            let result = match args.which {
                BifurcationTarget::Fold2 => {
                    find_fold_2node(act, weights.w_s, weights.w_m, bracket, args.tol)
                }
                _ => snic_locate_3cycle(
                    act,
                    weights.w_s,
                    weights.w_m,
                    weights.w_t,
                    bracket,
                    args.tol,
                ),
            };
            match result {
                Ok(fold) => {
                    let value = serde_json::json!({"config": echo, "fold": fold});
                    write_output(
                        args.out.as_deref(),
                        &format!("{}\n", serde_json::to_string_pretty(&value)?),
                    )?;
                    Ok(ExitCode::SUCCESS)
                }
                Err(e) => {
                    eprintln!("{e}");
                    Ok(ExitCode::from(1))
                }
            }
        }
        BifurcationTarget::Ksexit => {
            let gf = GFunction::new(act.epsilon, act.theta, weights.w_s);
            let w_p3 = args.wp3.unwrap_or(weights.w_p_default);
            let w_p4 = args.wp4.unwrap_or(weights.w_p_default);
            match ks_exit_equilibria(&gf, w_p3, w_p4, weights.w_t) {
                Ok(solutions) => {
                    let value = serde_json::json!({
                        "config": echo,
                        "w_p3": w_p3,
                        "w_p4": w_p4,
                        "w_t": weights.w_t,
                        "solutions": solutions,
                    });
                    write_output(
                        args.out.as_deref(),
                        &format!("{}\n", serde_json::to_string_pretty(&value)?),
                    )?;
                    Ok(if solutions_nonempty(&value) {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    })
                }
                Err(e) => {
                    eprintln!("{e}");
                    Ok(ExitCode::from(1))
                }
            }
        }
    }
}

fn solutions_nonempty(value: &serde_json::Value) -> bool {
    value["solutions"]
        .as_array()
        .map(|a| !a.is_empty())
        .unwrap_or(false)
}

fn cmd_sweep(args: SweepArgs) -> Result<ExitCode> {
    let (wt_lo, wt_hi, wt_n) = parse_range3(&args.wt_range)?;
    let (wp_lo, wp_hi, wp_n) = parse_range3(&args.wp_range)?;
    let spec = SweepSpec {
        wt_values: SweepSpec::linspace(wt_lo, wt_hi, wt_n),
        wp_values: SweepSpec::linspace(wp_lo, wp_hi, wp_n),
        dw: args.dw,
        sigma: args.sigma,
        reps: args.reps,
        t_sim: args.t_end,
        dt: args.dt,
        base_seed: args.seed,
        parallelism: Default::default(),
    };
    let grid = ks_sweep(&spec).map_err(|e| anyhow!("{e}"))?;
    let echo = serde_json::json!({
        "command": "sweep",
        "spec": &spec,
    });
    let mut buf = Vec::new();
    writeln!(buf, "{}", config_line(&echo))?;
    grid.write_csv(&mut buf)?;
    write_output(args.out.as_deref(), std::str::from_utf8(&buf)?)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_randgraph(args: RandgraphArgs) -> Result<ExitCode> {
    if args.n < 2 {
        return Err(anyhow!("--n must be at least 2"));
    }
    if !(args.p > 0.0 && args.p < 1.0) {
        return Err(anyhow!("--p must lie strictly between 0 and 1"));
    }
    match random_constrained_graph(args.n, args.p, args.seed, args.require_no_sink) {
        Ok(graph) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&GraphFile::from(&graph))?
            );
            Ok(ExitCode::SUCCESS)
        }
        Err(e) => {
            eprintln!("{e}");
            Ok(ExitCode::from(1))
        }
    }
}
