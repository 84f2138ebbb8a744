//! Experiment files: `key = value` lines under `[model]`, `[sim]`,
//! `[checks]` and `[output]` headers.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use dtq_core::engine::{ArrivalSpec, DiscreteDist, Discipline, Model, ServerChoice, SourceLaw};
use serde::{Deserialize, Serialize};

use crate::checks::Check;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArrivalKind {
    #[default]
    Bernoulli,
    Renewal,
    FinitePopulation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ServiceKind {
    #[default]
    Geometric,
    Deterministic,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DisciplineKind {
    #[default]
    Fifo1,
    FifoC,
    InfiniteServer,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default)]
    pub arrivals: ArrivalKind,
    /// Per-slot arrival probability, or per-source probability for a finite population.
    pub alpha: Option<f64>,
    /// Inter-arrival pmf as `[value, probability]` pairs.
    pub interarrival: Option<Vec<(u64, f64)>>,
    /// Population size `N`.
    pub sources: Option<u32>,
    #[serde(default)]
    pub law: SourceLaw,
    #[serde(default)]
    pub service: ServiceKind,
    /// Geometric service completion probability.
    pub beta: Option<f64>,
    /// Constant service time.
    pub service_value: Option<u64>,
    /// Service pmf as `[value, probability]` pairs.
    pub service_pmf: Option<Vec<(u64, f64)>>,
    #[serde(default)]
    pub discipline: DisciplineKind,
    /// Server count `c`.
    pub servers: Option<usize>,
    #[serde(default)]
    pub choice: ServerChoice,
}

fn missing(key: &str, why: &str) -> CliError {
    CliError::Config(format!("[model] {key} is required {why}"))
}

impl ModelSection {
    pub fn build(&self) -> CliResult<Model> {
        let arrivals = match self.arrivals {
            ArrivalKind::Bernoulli => ArrivalSpec::Bernoulli {
                alpha: self.alpha.ok_or_else(|| missing("alpha", "for Bernoulli arrivals"))?,
            },
            ArrivalKind::Renewal => ArrivalSpec::Renewal {
                interarrival: DiscreteDist::from_pairs(
                    self.interarrival
                        .as_deref()
                        .ok_or_else(|| missing("interarrival", "for renewal arrivals"))?,
                )?,
            },
            ArrivalKind::FinitePopulation => ArrivalSpec::FinitePopulation {
                sources: self.sources.ok_or_else(|| missing("sources", "for a finite population"))?,
                alpha: self.alpha.ok_or_else(|| missing("alpha", "for a finite population"))?,
                law: self.law,
            },
        };
        arrivals.validate()?;
        let service = match self.service {
            ServiceKind::Geometric => DiscreteDist::geometric(
                self.beta.ok_or_else(|| missing("beta", "for geometric service"))?,
            )?,
            ServiceKind::Deterministic => DiscreteDist::point(
                self.service_value
                    .ok_or_else(|| missing("service_value", "for deterministic service"))?,
            ),
            ServiceKind::Table => DiscreteDist::from_pairs(
                self.service_pmf
                    .as_deref()
                    .ok_or_else(|| missing("service_pmf", "for tabulated service"))?,
            )?,
        };
        let discipline = match self.discipline {
            DisciplineKind::Fifo1 => Discipline::Fifo1,
            DisciplineKind::FifoC => Discipline::FifoC {
                servers: self.servers.ok_or_else(|| missing("servers", "for fifo-c"))?,
                choice: self.choice,
            },
            DisciplineKind::InfiniteServer => Discipline::InfiniteServer,
        };
        Ok(Model {
            arrivals,
            service,
            discipline,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default = "default_horizon")]
    pub horizon: u64,
    /// Defaults to a tenth of the horizon.
    pub warmup: Option<u64>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_replications")]
    pub replications: usize,
}

fn default_horizon() -> u64 {
    1_000_000
}

fn default_seed() -> u64 {
    42
}

fn default_replications() -> usize {
    1
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection {
            horizon: default_horizon(),
            warmup: None,
            seed: default_seed(),
            replications: default_replications(),
        }
    }
}

impl SimSection {
    pub fn warmup(&self) -> u64 {
        self.warmup.unwrap_or(self.horizon / 10)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksSection {
    #[serde(default = "all_checks")]
    pub run: Vec<String>,
}

fn all_checks() -> Vec<String> {
    Check::ALL.iter().map(|c| c.name().to_string()).collect()
}

impl Default for ChecksSection {
    fn default() -> Self {
        ChecksSection { run: all_checks() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Text,
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub format: Format,
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub checks: ChecksSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl FromStr for ExperimentConfig {
    type Err = CliError;

    fn from_str(text: &str) -> CliResult<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        text.parse()
    }

    /// Reference B/Geom/1 experiment: α = 0.3, β = 0.5, T = 10⁶, warmup 10⁵, seed 42.
    pub fn reference() -> Self {
        ExperimentConfig {
            model: ModelSection {
                alpha: Some(0.3),
                beta: Some(0.5),
                ..ModelSection::default()
            },
            sim: SimSection {
                warmup: Some(100_000),
                ..SimSection::default()
            },
            checks: ChecksSection::default(),
            output: OutputSection::default(),
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        let warmup = self.sim.warmup();
        if self.sim.horizon <= warmup {
            return Err(CliError::Config(format!(
                "[sim] horizon {} must exceed warmup {warmup}",
                self.sim.horizon
            )));
        }
        if self.sim.replications == 0 {
            return Err(CliError::Config("[sim] replications must be at least 1".into()));
        }
        self.checks()?;
        self.model.build()?;
        Ok(())
    }

    pub fn checks(&self) -> CliResult<Vec<Check>> {
        self.checks.run.iter().map(|name| name.parse()).collect()
    }
}
