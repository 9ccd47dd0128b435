use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use agem::compare::{compare, parse_metrics, standard_claims};
use agem::experiment::{plan_outputs, resolve_deployment, run_plan, OutputSet, RunError};
use agem::scenario::{ConfigError, ExperimentPlan};
use agem::topology::{Deployment, TopologyError, TopologySpec};

const EXIT_CONFIG: u8 = 1;
const EXIT_TOPOLOGY: u8 = 2;

#[derive(Parser)]
#[command(name = "agem", version, about = "Geographic multipath routing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment plan and write metrics CSVs.
    Run(RunArgs),
    /// Generate or inspect deployments.
    #[command(subcommand)]
    Topo(TopoCommand),
    /// Compare protocols across metrics CSVs.
    Compare(CompareArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Plan JSON; the standard 4-protocol, 30-node, 10-seed sweep if omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Also write event and per-hop decision traces, deployments and paths.
    #[arg(long)]
    trace: bool,
    /// Seeds overriding the plan, e.g. `1-10` or `1,4,7`.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    allow_disconnected: bool,
}

#[derive(Subcommand)]
enum TopoCommand {
    /// Generate a deployment JSON.
    Generate(GenerateArgs),
    /// Print node count, connectivity and minimum node spacing.
    Inspect(InspectArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Plain,
    Holes,
    Grid,
}

#[derive(Args)]
struct GenerateArgs {
    /// Topology spec JSON; overrides --kind/--n/--holes.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "plain")]
    kind: Kind,
    /// Relay count.
    #[arg(long, default_value_t = 30)]
    n: usize,
    /// Number of holes (1 or 2) for `--kind holes`.
    #[arg(long, default_value_t = 1)]
    holes: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output file; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Keep the sample for this exact seed even if source and sink are
    /// disconnected, instead of resampling.
    #[arg(long)]
    allow_disconnected: bool,
}

#[derive(Args)]
struct InspectArgs {
    /// Deployment JSON, or `grid`.
    path: String,
    #[arg(long)]
    allow_disconnected: bool,
}

#[derive(Args)]
struct CompareArgs {
    /// Metrics CSV files.
    #[arg(required = true)]
    files: Vec<PathBuf>,
    /// Write the report here as well as to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Topo(TopoCommand::Generate(a)) => cmd_generate(a),
        Command::Topo(TopoCommand::Inspect(a)) => cmd_inspect(a),
        Command::Compare(a) => cmd_compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

type CmdResult = Result<(), (u8, String)>;

fn run_err(e: RunError) -> (u8, String) {
    (e.exit_code() as u8, e.to_string())
}

fn config_err(e: impl std::fmt::Display) -> (u8, String) {
    (EXIT_CONFIG, e.to_string())
}

fn topo_err(e: TopologyError) -> (u8, String) {
    match e {
        TopologyError::Io(_) | TopologyError::Json(_) | TopologyError::Invalid(_) => (EXIT_CONFIG, e.to_string()),
        _ => (EXIT_TOPOLOGY, e.to_string()),
    }
}

fn parse_seeds(s: &str) -> Result<Vec<u64>, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (u64, u64) = (
                    a.trim().parse().map_err(|_| format!("bad seed range {part:?}"))?,
                    b.trim().parse().map_err(|_| format!("bad seed range {part:?}"))?,
                );
                if a > b {
                    return Err(format!("empty seed range {part:?}"));
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| format!("bad seed {part:?}"))?),
        }
    }
    if out.is_empty() {
        return Err("no seeds given".into());
    }
    Ok(out)
}

fn cmd_run(a: RunArgs) -> CmdResult {
    let mut plan = match &a.config {
        Some(p) => ExperimentPlan::load(p).map_err(config_err)?,
        None => ExperimentPlan::standard(),
    };
    if let Some(s) = &a.seeds {
        plan.seeds = parse_seeds(s).map_err(|e| config_err(ConfigError::Invalid(e)))?;
    }
    if a.allow_disconnected {
        plan.allow_disconnected = true;
    }
    if a.trace {
        plan.settings.trace.events = true;
        plan.settings.trace.decisions = true;
    }
    plan.validate().map_err(config_err)?;
    let (results, deployments) = run_plan(&plan).map_err(run_err)?;
    let set = plan_outputs(&plan, &results, &deployments, a.trace).map_err(run_err)?;
    set.commit(&a.out).map_err(run_err)?;
    eprintln!("{} runs written to {}", results.len(), a.out.display());
    for (dep, r) in deployments.iter().zip(results.iter().step_by(plan.protocols.len())) {
        if r.output.metrics.resamples > 0 {
            if let Some(g) = &dep.generator {
                eprintln!("{} seed {}: resampled {} times", g.topology.label(), g.seed, g.resamples);
            }
        }
    }
    Ok(())
}

fn cmd_generate(a: GenerateArgs) -> CmdResult {
    let spec = match &a.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(config_err)?;
            serde_json::from_str::<TopologySpec>(&text).map_err(config_err)?
        }
        None => match a.kind {
            Kind::Plain => TopologySpec::plain(a.n),
            Kind::Holes => {
                if !(1..=2).contains(&a.holes) {
                    return Err(config_err("--holes must be 1 or 2"));
                }
                TopologySpec::holes(a.n, a.holes)
            }
            Kind::Grid => TopologySpec::Grid,
        },
    };
    let (dep, resamples) = resolve_deployment(&spec, a.seed, a.allow_disconnected).map_err(topo_err)?;
    if resamples > 0 {
        eprintln!("seed {} resampled {resamples} times for connectivity", a.seed);
    }
    let json = dep.to_json();
    match &a.out {
        Some(p) => {
            let mut set = OutputSet::default();
            set.add(p.file_name().map(PathBuf::from).unwrap_or_else(|| p.clone()), json);
            set.commit(p.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new(".")))
                .map_err(run_err)?;
        }
        None => println!("{json}"),
    }
    if !dep.source_sink_connected() {
        eprintln!("warning: source and sink are disconnected");
    }
    Ok(())
}

fn cmd_inspect(a: InspectArgs) -> CmdResult {
    let dep = if a.path == "grid" {
        agem::topology::gen_grid()
    } else {
        Deployment::load(Path::new(&a.path)).map_err(topo_err)?
    };
    let connected = dep.source_sink_connected();
    println!("nodes: {}", dep.len());
    println!("relays: {}", dep.relay_count());
    println!("connected: {connected}");
    println!("fully_connected: {}", dep.fully_connected());
    match dep.min_pairwise_distance() {
        Some(d) => println!("min_pairwise_distance: {d}"),
        None => println!("min_pairwise_distance: -"),
    }
    println!("fingerprint: {:016x}", dep.fingerprint());
    if !connected && !a.allow_disconnected {
        return Err((EXIT_TOPOLOGY, "source and sink are disconnected".into()));
    }
    Ok(())
}

fn cmd_compare(a: CompareArgs) -> CmdResult {
    let mut rows = Vec::new();
    for f in &a.files {
        let text = std::fs::read_to_string(f).map_err(|e| config_err(format!("{}: {e}", f.display())))?;
        rows.extend(parse_metrics(&text).map_err(|e| config_err(format!("{}: {e}", f.display())))?);
    }
    let report = compare(&rows, &standard_claims()).map_err(config_err)?.render();
    print!("{report}");
    if let Some(p) = &a.out {
        std::fs::write(p, &report).map_err(config_err)?;
    }
    Ok(())
}
