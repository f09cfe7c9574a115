use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use judrs_core::model::ParamsDb;
use judrs_sim::config::{parse_config, ExperimentConfig, ExperimentKind, OutputFormat};
use judrs_sim::error::{Result, SimError};
use judrs_sim::experiments::{self, Report};

#[derive(Parser)]
#[command(name = "judrs", version, about = "Relay selection simulator for asymmetric cellular traffic")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One selection round on a fixed relay layout, with protocol traces.
    Select(Overrides),
    /// Cooperation-region grid and contours.
    Region(Overrides),
    /// Energy-optimal relay position per traffic factor.
    OptimalLocation(Overrides),
    /// Mean energy per bit against the number of relays.
    RelaySweep(Overrides),
    /// MS and relay energy per bit against the traffic factor.
    TrafficSweep(Overrides),
    /// Outage probability curves and diversity slope.
    Dmt(Overrides),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Table,
    Document,
}

#[derive(Args)]
struct Overrides {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Primary output file; side files are written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[arg(long)]
    trials: Option<u64>,
    /// Uplink traffic shares, comma separated.
    #[arg(long, value_delimiter = ',')]
    zeta: Option<Vec<f64>>,
    /// Rate R in bits/s/Hz.
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    relay_counts: Option<Vec<usize>>,
    /// MS-BS distance in m.
    #[arg(long)]
    distance: Option<f64>,
    /// Selection schemes, comma separated.
    #[arg(long, value_delimiter = ',')]
    scheme: Option<Vec<String>>,
    /// Parameter override in dB units, e.g. `p_max_dbm=30`. Repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("judrs: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    let (kind, o) = match cli.command {
        Command::Select(o) => (ExperimentKind::Select, o),
        Command::Region(o) => (ExperimentKind::Region, o),
        Command::OptimalLocation(o) => (ExperimentKind::OptimalLocation, o),
        Command::RelaySweep(o) => (ExperimentKind::RelaySweep, o),
        Command::TrafficSweep(o) => (ExperimentKind::TrafficSweep, o),
        Command::Dmt(o) => (ExperimentKind::Dmt, o),
    };
    let config = build_config(kind, &o)?;
    config.validate()?;
    let report = match o.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| SimError::Config(format!("workers: {e}")))?
            .install(|| experiments::run(&config))?,
        None => experiments::run(&config)?,
    };
    write_report(&config, &report)
}

fn build_config(kind: ExperimentKind, o: &Overrides) -> Result<ExperimentConfig> {
    let mut c = match &o.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| SimError::Config(format!("{}: {e}", path.display())))?;
            let c = parse_config(&text).map_err(|e| match e {
                SimError::Config(m) => SimError::Config(format!("{}: {m}", path.display())),
                other => other,
            })?;
            if let Some(k) = c.experiment {
                if k != kind {
                    return Err(SimError::Config(format!(
                        "experiment: file declares '{}' but the subcommand is '{}'",
                        k.name(),
                        kind.name()
                    )));
                }
            }
            c
        }
        None => parse_config("")?,
    };
    c.experiment = Some(kind);
    if let Some(s) = o.seed {
        c.seed = Some(s);
    }
    if let Some(p) = &o.out {
        c.output = Some(p.clone());
    }
    if let Some(f) = o.format {
        c.format = match f {
            FormatArg::Table => OutputFormat::Table,
            FormatArg::Document => OutputFormat::Document,
        };
    }
    if let Some(t) = o.trials {
        c.trials = t;
    }
    if let Some(z) = &o.zeta {
        c.zeta = Some(z.clone());
    }
    if let Some(r) = o.rate {
        c.rate_r = r;
    }
    if let Some(n) = &o.relay_counts {
        c.relay_counts = n.clone();
    }
    if let Some(d) = o.distance {
        c.geometry.distance_m = Some(d);
    }
    if let Some(s) = &o.scheme {
        c.schemes = s.clone();
    }
    if !o.params.is_empty() {
        c.params = apply_params(&c.params, &o.params)?;
    }
    Ok(c)
}

fn apply_params(base: &ParamsDb, overrides: &[String]) -> Result<ParamsDb> {
    let mut doc = serde_json::to_value(base).expect("params serialize");
    for kv in overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| SimError::Config(format!("param: expected KEY=VALUE, got '{kv}'")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| SimError::Config(format!("params.{}: '{}' is not a number", k.trim(), v.trim())))?;
        doc[k.trim()] = serde_json::json!(v);
    }
    serde_json::from_value(doc).map_err(|e| SimError::Config(format!("params: {e}")))
}

fn write_report(config: &ExperimentConfig, report: &Report) -> Result<()> {
    let primary = match config.format {
        OutputFormat::Table => report.table.render_table(),
        OutputFormat::Document => report.table.render_document(),
    };
    match &config.output {
        Some(out) => {
            std::fs::write(out, primary)?;
            for a in &report.attachments {
                std::fs::write(sibling(out, &a.suffix), &a.content)?;
            }
        }
        None => {
            print!("{primary}");
            if !report.attachments.is_empty() {
                eprintln!(
                    "judrs: {} side file(s) not written; pass --out to keep them",
                    report.attachments.len()
                );
            }
        }
    }
    Ok(())
}

/// `results/run.csv` + `grid_z0.5.csv` -> `results/run.grid_z0.5.csv`.
fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    out.with_file_name(format!("{stem}.{suffix}"))
}
