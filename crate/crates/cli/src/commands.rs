//! One function per subcommand; each returns a renderable report with an
//! overall pass flag.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::thread;

use dtq_core::birthdeath::BGeom1Params;
use dtq_core::busy::detect_cycles_in;
use dtq_core::coherence::{ClassRow, ClassificationTable, CountingRow, CountingTable, EPOCH_HEADINGS};
use dtq_core::engine::{write_trace_csv, Model, Trace};
use dtq_core::littles::check_little;
use dtq_core::observer::{histogram, ObservedPath, View};
use dtq_core::{CoherenceClass, ObservationEpoch, SchedulingRule};
use serde::Serialize;

use crate::checks::{bgeom1, compare_pmf, ensure_stable, run_check, Check, ReportRow, Run};
use crate::config::{ExperimentConfig, SimSection};
use crate::error::{CliError, CliResult};
use crate::output::{Cell, Render, Table};

pub const GOLDEN_CLASSES: &str = include_str!("../golden/classes.txt");
pub const GOLDEN_COUNTING: &str = include_str!("../golden/counting.txt");

#[derive(Debug, Clone, Serialize)]
pub struct ClassifyReport {
    pub classes: Vec<ClassRow>,
    pub counting: Vec<CountingRow>,
    pub coherent: usize,
    pub diff: Vec<String>,
    pub pass: bool,
}

/// Golden copies, from `dir/classes.txt` and `dir/counting.txt` when a
/// directory is given.
fn golden_texts(dir: Option<&Path>) -> CliResult<(String, String)> {
    let Some(dir) = dir else {
        return Ok((GOLDEN_CLASSES.into(), GOLDEN_COUNTING.into()));
    };
    let read = |name: &str| {
        let path = dir.join(name);
        std::fs::read_to_string(&path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    };
    Ok((read("classes.txt")?, read("counting.txt")?))
}

pub fn classify(golden_dir: Option<&Path>) -> CliResult<ClassifyReport> {
    let table = ClassificationTable::compute()?;
    let counting = CountingTable::from_classification(&table);
    let (classes_text, counting_text) = golden_texts(golden_dir)?;
    let mut diff = Vec::new();
    match ClassificationTable::parse_text(&classes_text) {
        Ok(golden) => diff.extend(table.diff(&golden)),
        Err(e) => diff.push(format!("golden classes: {e}")),
    }
    match CountingTable::parse_text(&counting_text) {
        Ok(golden) => diff.extend(counting.diff(&golden)),
        Err(e) => diff.push(format!("golden counting: {e}")),
    }
    Ok(ClassifyReport {
        classes: table.rows(),
        counting: counting.rows.clone(),
        coherent: table.count(CoherenceClass::Coherent),
        pass: diff.is_empty(),
        diff,
    })
}

impl Render for ClassifyReport {
    fn tables(&self) -> Vec<Table> {
        let mut headers = vec!["rule"];
        headers.extend(EPOCH_HEADINGS);
        let classes = SchedulingRule::ALL
            .into_iter()
            .map(|rule| {
                let mut row: Vec<Cell> = vec![rule.label().into()];
                row.extend(
                    self.classes
                        .iter()
                        .filter(|c| c.rule == rule)
                        .map(|c| Cell::from(c.class.short())),
                );
                row
            })
            .collect();
        let yes = |b: bool| Cell::from(if b { "yes" } else { "no" });
        let counting = self
            .counting
            .iter()
            .map(|r| vec![r.rule.label().into(), yes(r.edges), yes(r.centers)])
            .collect();
        vec![
            Table {
                title: "coherence class by scheduling rule and observation epoch".into(),
                headers,
                rows: classes,
            },
            Table {
                title: "actual waits recovered by counting at slot edges / centers".into(),
                headers: vec!["rule", "edges", "centers"],
                rows: counting,
            },
        ]
    }

    fn summary(&self) -> Vec<String> {
        let mut out = vec![format!("coherent cells: {} of 30", self.coherent)];
        if self.pass {
            out.push("golden tables: match".into());
        } else {
            out.push("golden tables: MISMATCH".into());
            out.extend(self.diff.iter().map(|d| format!("  {d}")));
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub command: String,
    pub horizon: u64,
    pub warmup: u64,
    pub seed: u64,
    pub replications: usize,
    pub checks: Vec<Check>,
    pub rows: Vec<ReportRow>,
    pub passed: usize,
    pub failed: usize,
    pub pass: bool,
}

pub fn replication_seed(sim: &SimSection, replication: usize) -> u64 {
    sim.seed.wrapping_add(replication as u64)
}

pub fn simulate_replication(model: &Model, sim: &SimSection, replication: usize) -> CliResult<Trace> {
    Ok(model.simulate(replication_seed(sim, replication), sim.horizon)?)
}

fn run_replication(
    model: &Model,
    sim: &SimSection,
    checks: &[Check],
    replication: usize,
) -> CliResult<Vec<ReportRow>> {
    let trace = simulate_replication(model, sim, replication)?;
    let run = Run {
        model,
        trace: &trace,
        warmup: sim.warmup(),
    };
    let mut rows = Vec::new();
    for &check in checks {
        for mut row in run_check(check, &run)? {
            row.replication = replication;
            row.seed = replication_seed(sim, replication);
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Runs `checks` on every replication, a batch of threads at a time, and
/// concatenates rows in replication order.
pub fn verify(config: &ExperimentConfig, checks: &[Check], command: &str) -> CliResult<VerifyReport> {
    let model = config.model.build()?;
    ensure_stable(&model)?;
    let sim = &config.sim;
    let width = thread::available_parallelism().map_or(1, |n| n.get());
    let mut rows = Vec::new();
    let indices: Vec<usize> = (0..sim.replications).collect();
    for batch in indices.chunks(width) {
        let results: Vec<CliResult<Vec<ReportRow>>> = thread::scope(|s| {
            let handles: Vec<_> = batch
                .iter()
                .map(|&i| {
                    let model = &model;
                    s.spawn(move || run_replication(model, sim, checks, i))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("replication thread panicked"))
                .collect()
        });
        for r in results {
            rows.extend(r?);
        }
    }
    let passed = rows.iter().filter(|r| r.pass).count();
    let failed = rows.len() - passed;
    Ok(VerifyReport {
        command: command.into(),
        horizon: sim.horizon,
        warmup: sim.warmup(),
        seed: sim.seed,
        replications: sim.replications,
        checks: checks.to_vec(),
        passed,
        failed,
        pass: failed == 0,
        rows,
    })
}

impl Render for VerifyReport {
    fn tables(&self) -> Vec<Table> {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.replication.into(),
                    r.check.name().into(),
                    r.inputs.clone().into(),
                    r.simulated.into(),
                    r.formula.into(),
                    r.residual.into(),
                    r.tolerance.into(),
                    r.pass.into(),
                ]
            })
            .collect();
        vec![Table {
            title: String::new(),
            headers: vec!["rep", "check", "inputs", "simulated", "formula", "residual", "tolerance", "result"],
            rows,
        }]
    }

    fn summary(&self) -> Vec<String> {
        let mut out = Vec::new();
        for check in &self.checks {
            let mine: Vec<_> = self.rows.iter().filter(|r| r.check == *check).collect();
            let ok = mine.iter().filter(|r| r.pass).count();
            out.push(format!("{:<16} {ok}/{} rows pass", check.name(), mine.len()));
        }
        out.push(format!(
            "{}: {} of {} rows pass (T = {}, warmup = {}, seed = {}, replications = {})",
            if self.pass { "PASS" } else { "FAIL" },
            self.passed,
            self.rows.len(),
            self.horizon,
            self.warmup,
            self.seed,
            self.replications
        ));
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistRow {
    pub n: usize,
    pub pi_analytic: f64,
    pub pi_simulated: f64,
    pub abs_diff: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DistReport {
    pub rule: SchedulingRule,
    pub epoch: ObservationEpoch,
    pub class: CoherenceClass,
    pub alpha: f64,
    pub beta: f64,
    pub horizon: u64,
    pub warmup: u64,
    pub seed: u64,
    pub rows: Vec<DistRow>,
    pub tolerance: f64,
    #[serde(rename = "L_analytic")]
    pub l_analytic: f64,
    #[serde(rename = "L_simulated")]
    pub l_simulated: f64,
    pub pass: bool,
}

/// The cell to observe: the explicit one, or the first cell of `class`.
pub fn pick_cell(
    class: Option<CoherenceClass>,
    rule: Option<SchedulingRule>,
    epoch: Option<ObservationEpoch>,
) -> CliResult<(SchedulingRule, ObservationEpoch, CoherenceClass)> {
    let table = ClassificationTable::compute()?;
    let found = table.rows().into_iter().find(|r| {
        rule.is_none_or(|x| x == r.rule)
            && epoch.is_none_or(|x| x == r.epoch)
            && class.is_none_or(|x| x == r.class)
    });
    found.map(|r| (r.rule, r.epoch, r.class)).ok_or_else(|| {
        CliError::Config("no rule/epoch combination matches the requested class".into())
    })
}

pub fn dist(
    config: &ExperimentConfig,
    cell: (SchedulingRule, ObservationEpoch, CoherenceClass),
) -> CliResult<DistReport> {
    let model = config.model.build()?;
    ensure_stable(&model)?;
    let (alpha, beta) = bgeom1(&model).ok_or_else(|| {
        CliError::Config("dist needs Bernoulli arrivals, geometric service and one FIFO server".into())
    })?;
    let (rule, epoch, class) = cell;
    let params = BGeom1Params::new(alpha, beta, class)?;
    let sim = &config.sim;
    let trace = simulate_replication(&model, sim, 0)?;
    let path = ObservedPath::new(&trace, View::observed(rule, epoch)).occupancy;
    let pi = histogram(&path, sim.warmup());
    let tolerance = 3.0 / (sim.horizon as f64).sqrt();
    let rows: Vec<DistRow> = compare_pmf(&pi, &params)
        .into_iter()
        .map(|(n, sim, want)| DistRow {
            n,
            pi_analytic: want,
            pi_simulated: sim,
            abs_diff: (sim - want).abs(),
        })
        .collect();
    Ok(DistReport {
        rule,
        epoch,
        class,
        alpha,
        beta,
        horizon: sim.horizon,
        warmup: sim.warmup(),
        seed: sim.seed,
        pass: rows.iter().all(|r| r.abs_diff <= tolerance),
        tolerance,
        l_analytic: params.mean_customers(),
        l_simulated: pi.iter().enumerate().map(|(n, p)| n as f64 * p).sum(),
        rows,
    })
}

impl Render for DistReport {
    fn tables(&self) -> Vec<Table> {
        let rows = self
            .rows
            .iter()
            .map(|r| vec![r.n.into(), r.pi_analytic.into(), r.pi_simulated.into(), r.abs_diff.into()])
            .collect();
        vec![Table {
            title: format!("{}/{} ({}), α = {}, β = {}", self.rule, self.epoch, self.class, self.alpha, self.beta),
            headers: vec!["n", "pi_analytic", "pi_simulated", "abs_diff"],
            rows,
        }]
    }

    fn summary(&self) -> Vec<String> {
        vec![
            format!("L analytic {:.6}, simulated {:.6}", self.l_analytic, self.l_simulated),
            format!(
                "{}: every |difference| <= {:.6}",
                if self.pass { "PASS" } else { "FAIL" },
                self.tolerance
            ),
        ]
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateReport {
    pub horizon: u64,
    pub warmup: u64,
    pub seed: u64,
    pub customers: usize,
    pub lambda: f64,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "W")]
    pub w: f64,
}

pub fn simulate(config: &ExperimentConfig) -> CliResult<SimulateReport> {
    let model = config.model.build()?;
    ensure_stable(&model)?;
    let sim = &config.sim;
    let trace = simulate_replication(&model, sim, 0)?;
    let little = check_little(&trace, sim.warmup())?;
    Ok(SimulateReport {
        horizon: sim.horizon,
        warmup: sim.warmup(),
        seed: sim.seed,
        customers: trace.len(),
        lambda: little.lambda,
        l: little.l,
        w: little.w,
    })
}

impl Render for SimulateReport {
    fn tables(&self) -> Vec<Table> {
        vec![Table {
            title: String::new(),
            headers: vec!["horizon", "warmup", "seed", "customers", "lambda", "L", "W"],
            rows: vec![vec![
                self.horizon.into(),
                self.warmup.into(),
                self.seed.into(),
                self.customers.into(),
                self.lambda.into(),
                self.l.into(),
                self.w.into(),
            ]],
        }]
    }
}

/// Writes replication 0's trace in the engine CSV layout.
pub fn write_trace(config: &ExperimentConfig, path: &Path) -> CliResult<()> {
    let model = config.model.build()?;
    ensure_stable(&model)?;
    let trace = simulate_replication(&model, &config.sim, 0)?;
    write_trace_csv(&trace, BufWriter::new(File::create(path)?))?;
    Ok(())
}

/// Writes replication 0's complete busy cycles after the warmup as `k,U,V,C,B,I,E`.
pub fn write_cycles(config: &ExperimentConfig, path: &Path) -> CliResult<()> {
    let model = config.model.build()?;
    ensure_stable(&model)?;
    let trace = simulate_replication(&model, &config.sim, 0)?;
    detect_cycles_in(&trace, View::Actual, config.sim.warmup())
        .write_csv(BufWriter::new(File::create(path)?))?;
    Ok(())
}
