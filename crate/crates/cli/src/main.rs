use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dtq_cli::commands;
use dtq_cli::output::{self, Render};
use dtq_cli::{Check, CliError, CliResult, ExperimentConfig, Format};
use dtq_core::{CoherenceClass, ObservationEpoch, SchedulingRule};

/// Discrete-time queues under scheduling rules and observation epochs.
#[derive(Debug, Parser)]
#[command(name = "dtq", version)]
struct Cli {
    /// Experiment file with [model], [sim], [checks] and [output] sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed; replication i uses seed + i.
    #[arg(long, global = true, env = "DTQ_SEED")]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also write replication 0's trace as `k,A,S,Astart,D` CSV.
    #[arg(long, global = true)]
    trace: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Coherence classes of all 30 rule/epoch cells, checked against the golden tables.
    Classify {
        /// Directory holding replacement classes.txt and counting.txt.
        #[arg(long)]
        golden: Option<PathBuf>,
    },
    /// Run the configured checks over every replication.
    Verify {
        /// Comma-separated check names; overrides [checks] run.
        #[arg(long, value_delimiter = ',')]
        checks: Option<Vec<String>>,
    },
    /// Closed-form against simulated distribution for one class.
    Dist {
        /// coh, sub or super.
        #[arg(long)]
        class: Option<String>,
        #[arg(long)]
        rule: Option<String>,
        #[arg(long)]
        epoch: Option<String>,
    },
    /// Busy-cycle means against their formulas.
    Busy {
        /// Write per-cycle `k,U,V,C,B,I,E` rows here.
        #[arg(long)]
        cycles: Option<PathBuf>,
    },
    /// Waiting-time and workload relations.
    Pk,
    /// `1 - π(0)` in every rule/epoch cell.
    Table61,
    /// Simulate and summarize; pair with --trace to keep the path.
    Simulate,
}

fn parse<T: std::str::FromStr<Err = dtq_core::Error>>(s: Option<&String>) -> CliResult<Option<T>> {
    s.map(|s| s.parse().map_err(|e: dtq_core::Error| CliError::Config(e.to_string())))
        .transpose()
}

fn load_config(cli: &Cli) -> CliResult<ExperimentConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("this command needs --config PATH".into()))?;
    let mut config = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        config.sim.seed = seed;
    }
    Ok(config)
}

fn emit<R: Render>(cli: &Cli, config: Option<&ExperimentConfig>, report: &R) -> CliResult<()> {
    let format = cli
        .format
        .or(config.map(|c| c.output.format))
        .unwrap_or_default();
    let path = cli.out.clone().or_else(|| config.and_then(|c| c.output.path.clone()));
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            output::write(report, format, &mut w)?;
            w.flush()?;
        }
        None => {
            let mut w = io::stdout().lock();
            output::write(report, format, &mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn run_checks(cli: &Cli, name: &str, fixed: Option<&[Check]>) -> CliResult<bool> {
    let config = load_config(cli)?;
    let checks = match (fixed, &cli.command) {
        (Some(c), _) => c.to_vec(),
        (None, Command::Verify { checks: Some(names) }) => {
            names.iter().map(|n| n.parse()).collect::<CliResult<_>>()?
        }
        (None, _) => config.checks()?,
    };
    let report = commands::verify(&config, &checks, name)?;
    if let Some(path) = &cli.trace {
        commands::write_trace(&config, path)?;
    }
    if let Command::Busy { cycles: Some(path) } = &cli.command {
        commands::write_cycles(&config, path)?;
    }
    emit(cli, Some(&config), &report)?;
    Ok(report.pass)
}

fn run(cli: &Cli) -> CliResult<bool> {
    match &cli.command {
        Command::Classify { golden } => {
            let report = commands::classify(golden.as_deref())?;
            emit(cli, None, &report)?;
            if !report.pass {
                for line in &report.diff {
                    eprintln!("golden mismatch: {line}");
                }
            }
            Ok(report.pass)
        }
        Command::Verify { .. } => run_checks(cli, "verify", None),
        Command::Busy { .. } => run_checks(cli, "busy", Some(&[Check::Busy])),
        Command::Pk => run_checks(cli, "pk", Some(&[Check::Pk, Check::Workload])),
        Command::Table61 => run_checks(cli, "table61", Some(&[Check::Table61])),
        Command::Dist { class, rule, epoch } => {
            let config = load_config(cli)?;
            let class: Option<CoherenceClass> = parse(class.as_ref())?;
            let rule: Option<SchedulingRule> = parse(rule.as_ref())?;
            let epoch: Option<ObservationEpoch> = parse(epoch.as_ref())?;
            let class = class.or((rule.is_none() && epoch.is_none()).then_some(CoherenceClass::Coherent));
            let report = commands::dist(&config, commands::pick_cell(class, rule, epoch)?)?;
            if let Some(path) = &cli.trace {
                commands::write_trace(&config, path)?;
            }
            emit(cli, Some(&config), &report)?;
            Ok(report.pass)
        }
        Command::Simulate => {
            let config = load_config(cli)?;
            let report = commands::simulate(&config)?;
            if let Some(path) = &cli.trace {
                commands::write_trace(&config, path)?;
            }
            emit(cli, Some(&config), &report)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("dtq: {e}");
            ExitCode::from(2)
        }
    }
}
