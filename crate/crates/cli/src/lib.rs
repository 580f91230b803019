//! Scenario files, single runs and sweeps for the `aedt` binary.
//!
//! Scenario files are TOML with the flat keys of [`ScenarioConfig`]; an empty
//! file is the default scenario. Command-line flags override file values and
//! every run writes the merged configuration back out so it can be replayed.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use aedt::aggregation::OverloadPolicy;
use aedt::simulator::{derive_seed, run, sweep_config, MetricsRecord, Protocol, ScenarioConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const METRICS_FILE: &str = "metrics.csv";
pub const TRACE_FILE: &str = "trace.log";
pub const CONFIG_ECHO_FILE: &str = "config.toml";
pub const CYCLES_FILE: &str = "cycles.csv";
pub const SWEEP_FILE: &str = "sweep.csv";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{origin}: {message}")]
    Config { origin: String, message: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Simulation(#[from] aedt::Error),
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
}

impl CliError {
    /// 2 for command-line misuse, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Flag values that take precedence over the scenario file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub nodes: Option<usize>,
    pub protocol: Option<Protocol>,
    pub duration: Option<f64>,
    pub refresh_interval: Option<f64>,
    pub overload_policy: Option<OverloadPolicy>,
}

impl Overrides {
    pub fn apply(&self, config: &mut ScenarioConfig) {
        if let Some(v) = self.seed {
            config.seed = v;
        }
        if let Some(v) = self.nodes {
            config.node_count = v;
        }
        if let Some(v) = self.protocol {
            config.protocol = v;
        }
        if let Some(v) = self.duration {
            config.duration = v;
        }
        if let Some(v) = self.refresh_interval {
            config.refresh_interval = v;
        }
        if let Some(v) = self.overload_policy {
            config.overload_policy = v;
        }
    }
}

/// Parses a scenario file's text. `origin` names the file in diagnostics.
pub fn parse_config(text: &str, origin: &str) -> Result<ScenarioConfig> {
    let config: ScenarioConfig = toml::from_str(text).map_err(|e| CliError::Config {
        origin: origin.to_string(),
        message: e.to_string().trim_end().to_string(),
    })?;
    Ok(config)
}

/// Reads the scenario file, or the defaults when there is none.
pub fn load_config(path: Option<&Path>) -> Result<ScenarioConfig> {
    match path {
        None => Ok(ScenarioConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(io_err(p))?;
            parse_config(&text, &p.display().to_string())
        }
    }
}

fn resolve(config_path: Option<&Path>, overrides: &Overrides) -> Result<ScenarioConfig> {
    let mut config = load_config(config_path)?;
    overrides.apply(&mut config);
    let origin = config_path.map_or("defaults".to_string(), |p| p.display().to_string());
    config.validate().map_err(|e| CliError::Config {
        origin,
        message: e.to_string(),
    })?;
    Ok(config)
}

/// The merged configuration as a scenario file.
pub fn config_echo(config: &ScenarioConfig) -> Result<String> {
    toml::to_string(config).map_err(|e| CliError::Config {
        origin: "config echo".into(),
        message: e.to_string(),
    })
}

/// One line of `metrics.csv` or `sweep.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub protocol: String,
    pub nodes: usize,
    pub seed: u64,
    pub avg_delay_s: f64,
    pub delivery_ratio: f64,
    pub avg_energy_j: f64,
    pub lifetime_s: f64,
}

impl MetricsRow {
    pub fn new(config: &ScenarioConfig, m: &MetricsRecord) -> Self {
        Self {
            protocol: config.protocol.name().to_string(),
            nodes: config.node_count,
            seed: config.seed,
            avg_delay_s: m.avg_delay,
            delivery_ratio: m.delivery_ratio,
            avg_energy_j: m.avg_energy_consumed,
            lifetime_s: m.network_lifetime,
        }
    }
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let csv_err = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

/// Reads back any CSV this crate writes.
pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let csv_err = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().collect::<std::result::Result<_, _>>().map_err(csv_err)
}

#[derive(Debug, Serialize)]
struct CycleRow {
    cycle: u64,
    started_at: f64,
    parent: Option<u32>,
    alive: usize,
    residual_energy: f64,
    received: u64,
    utilization: f64,
}

#[derive(Debug, Clone)]
pub struct RunArtifact {
    pub config: ScenarioConfig,
    pub metrics: MetricsRecord,
    pub metrics_csv: PathBuf,
    pub trace_log: PathBuf,
    pub config_echo: PathBuf,
    pub cycles_csv: PathBuf,
}

impl RunArtifact {
    pub fn summary(&self) -> String {
        let m = &self.metrics;
        format!(
            "{} nodes={} seed={} delivered={}/{} ratio={:.4} delay={:.4}s energy={:.4}J lifetime={}s -> {}",
            self.config.protocol.name(),
            self.config.node_count,
            self.config.seed,
            m.delivered,
            m.submitted,
            m.delivery_ratio,
            m.avg_delay,
            m.avg_energy_consumed,
            m.network_lifetime,
            self.metrics_csv.parent().unwrap_or(Path::new(".")).display(),
        )
    }
}

/// Runs one scenario and writes `metrics.csv`, `trace.log`, `cycles.csv` and
/// the `config.toml` echo into `out_dir`.
pub fn cmd_run(config_path: Option<&Path>, overrides: &Overrides, out_dir: &Path) -> Result<RunArtifact> {
    let config = resolve(config_path, overrides)?;
    let echo = config_echo(&config)?;
    let out = run(&config)?;

    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let artifact = RunArtifact {
        metrics_csv: out_dir.join(METRICS_FILE),
        trace_log: out_dir.join(TRACE_FILE),
        config_echo: out_dir.join(CONFIG_ECHO_FILE),
        cycles_csv: out_dir.join(CYCLES_FILE),
        config,
        metrics: out.metrics,
    };
    write_csv(
        &artifact.metrics_csv,
        &[MetricsRow::new(&artifact.config, &artifact.metrics)],
    )?;
    fs::write(&artifact.trace_log, out.trace.to_text()).map_err(io_err(&artifact.trace_log))?;
    fs::write(&artifact.config_echo, echo).map_err(io_err(&artifact.config_echo))?;
    let cycles: Vec<CycleRow> = artifact
        .metrics
        .per_cycle_series
        .iter()
        .map(|c| CycleRow {
            cycle: c.cycle,
            started_at: c.started_at,
            parent: c.parent.map(|p| p.0),
            alive: c.alive,
            residual_energy: c.residual_energy,
            received: c.received,
            utilization: c.utilization,
        })
        .collect();
    write_csv(&artifact.cycles_csv, &cycles)?;
    Ok(artifact)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub node_counts: Vec<usize>,
    pub protocols: Vec<Protocol>,
    /// Independent placements per node count; replicate 0 uses the base seed.
    pub replicates: u32,
    /// Worker threads; 0 lets the pool decide.
    pub jobs: usize,
}

impl SweepPlan {
    fn validate(&self) -> Result<()> {
        if self.protocols.is_empty() {
            return Err(CliError::Usage("sweep needs at least one protocol".into()));
        }
        if self.node_counts.is_empty() {
            return Err(CliError::Usage("sweep needs at least one node count".into()));
        }
        if self.replicates == 0 {
            return Err(CliError::Usage("replicates must be at least 1".into()));
        }
        Ok(())
    }

    /// One configuration per (protocol, node count, replicate), in that
    /// nesting order. All protocols share the placement and traffic seed of
    /// a given (node count, replicate).
    pub fn configs(&self, base: &ScenarioConfig) -> Vec<ScenarioConfig> {
        let mut out = Vec::new();
        for &protocol in &self.protocols {
            for &n in &self.node_counts {
                for r in 0..self.replicates {
                    let seeded = ScenarioConfig {
                        protocol,
                        seed: if r == 0 { base.seed } else { derive_seed(base.seed, r as usize) },
                        ..base.clone()
                    };
                    out.push(sweep_config(&seeded, n));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct SweepArtifact {
    pub rows: Vec<MetricsRow>,
    pub csv: PathBuf,
}

/// Runs the cartesian product of protocols, node counts and replicates and
/// writes one `sweep.csv` row per run.
pub fn cmd_sweep(
    config_path: Option<&Path>,
    overrides: &Overrides,
    plan: &SweepPlan,
    out_dir: &Path,
) -> Result<SweepArtifact> {
    plan.validate()?;
    let base = resolve(config_path, overrides)?;
    let configs = plan.configs(&base);
    for c in &configs {
        c.validate()?;
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} workers: {e}", plan.jobs)))?;
    let rows: Vec<MetricsRow> = pool.install(|| {
        configs
            .par_iter()
            .map(|c| run(c).map(|o| MetricsRow::new(c, &o.metrics)))
            .collect::<aedt::Result<_>>()
    })?;

    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let csv = out_dir.join(SWEEP_FILE);
    write_csv(&csv, &rows)?;
    Ok(SweepArtifact { rows, csv })
}
