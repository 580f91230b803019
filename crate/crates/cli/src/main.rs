use std::path::PathBuf;
use std::process::ExitCode;

use aedt::aggregation::OverloadPolicy;
use aedt::simulator::Protocol;
use aedt_cli::{cmd_run, cmd_sweep, Overrides, SweepPlan};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "aedt", version, about = "Energy-aware aggregation tree simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario.
    Run(Common),
    /// Run every protocol at every node count.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated node counts.
        #[arg(long, value_delimiter = ',', default_value = "20,40,60,80,100")]
        counts: Vec<usize>,
        /// Comma-separated protocols.
        #[arg(long, value_delimiter = ',', value_parser = parse_protocol, default_value = "aedt,static-tree")]
        protocols: Vec<Protocol>,
        /// Placements per node count.
        #[arg(long, default_value_t = 1)]
        replicates: u32,
        /// Parallel runs (0 = one per core).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    nodes: Option<usize>,
    /// aedt, aedt-no-sleep or static-tree.
    #[arg(long, value_parser = parse_protocol)]
    protocol: Option<Protocol>,
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    refresh_interval: Option<f64>,
    /// wait or prioritize.
    #[arg(long, value_parser = parse_policy)]
    overload_policy: Option<OverloadPolicy>,
    /// Output directory.
    #[arg(long, env = "AEDT_OUT_DIR", default_value = "aedt-out")]
    out: PathBuf,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            nodes: self.nodes,
            protocol: self.protocol,
            duration: self.duration,
            refresh_interval: self.refresh_interval,
            overload_policy: self.overload_policy,
        }
    }
}

fn parse_protocol(s: &str) -> Result<Protocol, String> {
    Protocol::parse(s).ok_or_else(|| format!("unknown protocol `{s}` (aedt, aedt-no-sleep, static-tree)"))
}

fn parse_policy(s: &str) -> Result<OverloadPolicy, String> {
    OverloadPolicy::parse(s).ok_or_else(|| format!("unknown overload policy `{s}` (wait, prioritize)"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(c) => cmd_run(c.config.as_deref(), &c.overrides(), &c.out).map(|a| a.summary()),
        Command::Sweep {
            common,
            counts,
            protocols,
            replicates,
            jobs,
        } => {
            let plan = SweepPlan {
                node_counts: counts.clone(),
                protocols: protocols.clone(),
                replicates: *replicates,
                jobs: *jobs,
            };
            cmd_sweep(common.config.as_deref(), &common.overrides(), &plan, &common.out)
                .map(|a| format!("{} runs -> {}", a.rows.len(), a.csv.display()))
        }
    };
    match result {
        Ok(line) => {
            println!("{line}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
