use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use oodt_core::cli::{
    equilibrium_checks, equilibrium_report, execute_sweep, geometry_report, parse_protocols, render, Format, SweepSpec,
};
use oodt_core::geometry::{parse_polygons, BASE_RESOLUTION};
use oodt_core::sim::{run_with_trace, MetricsReport, Scenario};

#[derive(Parser)]
#[command(name = "oodt", version, about = "Obstacle-aware opportunistic routing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario for one or more seeds; prints one CSV row per run.
    Run(RunArgs),
    /// Run a parameter sweep and write aggregate rows.
    Sweep(SweepArgs),
    /// Polygon searchability tools.
    Geometry {
        #[command(subcommand)]
        command: GeometryCommand,
    },
    /// Auction tools.
    Auction {
        #[command(subcommand)]
        command: AuctionCommand,
    },
}

#[derive(Args)]
struct Output {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Runs seeds seed, seed+1, ...
    #[arg(long, default_value_t = 1)]
    seeds: usize,
    #[arg(long)]
    protocol: Option<String>,
    /// Write the event log and auction trace next to --out (or to stderr).
    #[arg(long)]
    trace: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    sweep: PathBuf,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    protocol: Option<String>,
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    output: Output,
}

#[derive(Subcommand)]
enum GeometryCommand {
    /// Searchability verdicts and schedules for every polygon in a file.
    Check {
        polygons: PathBuf,
        #[arg(long, default_value_t = BASE_RESOLUTION)]
        resolution: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum AuctionCommand {
    /// Best-response gaps of both bid strategies over a cost grid.
    Verify {
        #[arg(long, default_value_t = 3)]
        n_min: usize,
        #[arg(long, default_value_t = 8)]
        n_max: usize,
        #[arg(long, default_value_t = 1e-4)]
        step: f64,
        #[arg(long, default_value_t = 1e-3)]
        tolerance: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let format: Format = a.output.format.parse()?;
    let mut base = match &a.scenario {
        Some(p) => Scenario::load(p)?,
        None => Scenario::default(),
    };
    if a.seeds == 0 {
        bail!("--seeds must be at least 1");
    }
    if let Some(s) = a.seed {
        base.seed = s;
    }
    base.trace = a.trace;
    let protocols = match &a.protocol {
        Some(p) => parse_protocols(p)?,
        None => vec![base.protocol],
    };
    let mut rows = Vec::new();
    let mut traces = String::new();
    let mut auctions = String::new();
    for &p in &protocols {
        for k in 0..a.seeds {
            let mut s = base.clone();
            s.protocol = p;
            s.seed = base.seed.wrapping_add(k as u64);
            let out = run_with_trace(&s)?;
            if let Some(t) = out.trace {
                traces.push_str(&format!("# {} seed {}\n{t}", p.name(), s.seed));
            }
            if let Some(t) = out.auction_trace {
                auctions.push_str(&format!("# {} seed {}\n{t}", p.name(), s.seed));
            }
            rows.push((p.name(), s.seed, out.report));
        }
    }
    let text = match format {
        Format::Csv => {
            let mut t = format!("{}\n", MetricsReport::CSV_HEADER);
            for (p, seed, r) in &rows {
                t.push_str(&r.csv_row(p, *seed));
                t.push('\n');
            }
            t
        }
        Format::Json => {
            let v: Vec<serde_json::Value> = rows
                .iter()
                .map(|(p, seed, r)| {
                    serde_json::json!({
                        "protocol": p,
                        "seed": seed,
                        "pdr": r.pdr,
                        "avg_delay": r.avg_delay,
                        "routing_cost": r.expected_routing_cost,
                        "lifetime": r.network_lifetime,
                        "friend_pairs": r.friend_pairs,
                        "generated": r.counters.generated,
                        "delivered": r.counters.delivered,
                        "dropped": r.counters.dropped,
                        "in_flight": r.counters.in_flight,
                        "data_tx": r.counters.data_tx,
                        "ack_tx": r.counters.ack_tx,
                        "violations": r.invariants.violations(),
                    })
                })
                .collect();
            serde_json::to_string_pretty(&v)? + "\n"
        }
    };
    write_or_print(a.output.out.as_deref(), &text)?;
    if a.trace {
        match &a.output.out {
            Some(o) => {
                std::fs::write(sibling(o, ".trace"), &traces)?;
                std::fs::write(sibling(o, ".auction.csv"), &auctions)?;
            }
            None => eprint!("{traces}{auctions}"),
        }
    }
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> Result<()> {
    let format: Format = a.output.format.parse()?;
    let mut spec = SweepSpec::load(&a.sweep)?;
    if let Some(s) = a.seed {
        spec.master_seed = s;
    }
    if let Some(n) = a.seeds {
        spec.seeds = n;
    }
    if let Some(p) = &a.protocol {
        spec.protocols = parse_protocols(p)?;
    }
    if a.threads.is_some() {
        spec.threads = a.threads;
    }
    let result = execute_sweep(&spec)?;
    let v = result.invariants.violations();
    eprintln!("{} runs, invariant audit: {}", result.runs.len(), result.invariants.summary());
    write_or_print(a.output.out.as_deref(), &render(&result.rows, format))?;
    if v > 0 {
        bail!("{v} invariant violations");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Geometry { command: GeometryCommand::Check { polygons, resolution, out } } => (|| {
            let text = std::fs::read_to_string(&polygons).with_context(|| format!("reading {}", polygons.display()))?;
            let report = geometry_report(&parse_polygons(&text)?, resolution)?;
            write_or_print(out.as_deref(), &report)
        })(),
        Command::Auction { command: AuctionCommand::Verify { n_min, n_max, step, tolerance, out } } => (|| {
            if n_min < 2 || n_max < n_min {
                bail!("need 2 <= n-min <= n-max");
            }
            if !(step > 0.0 && step < 1.0) {
                bail!("step must be in (0, 1)");
            }
            let ns: Vec<usize> = (n_min..=n_max).collect();
            write_or_print(out.as_deref(), &equilibrium_report(&equilibrium_checks(&ns, step)?, tolerance))
        })(),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
