//! Named checks: each turns one simulated trace into report rows carrying
//! the simulated value, the formula value, the residual and the tolerance.

use std::str::FromStr;

use dtq_core::birthdeath::{table61, BGeom1Params};
use dtq_core::busy::{detect_cycles_in, ggeo1_busy, sigma_solve, state_rates, cycle_means, BusyMeans};
use dtq_core::coherence::ClassificationTable;
use dtq_core::engine::{ArrivalSpec, DiscreteDist, Discipline, Model, Trace};
use dtq_core::littles::{
    check_little, check_little_observed, little_tolerance, utilization, verify_pk, MEAN_TOL,
    SECOND_MOMENT_TOL,
};
use dtq_core::observer::{histogram, window_rate, ObservedPath, View};
use dtq_core::{CoherenceClass, Error, ObservationEpoch, SchedulingRule};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Relative tolerance on busy-cycle means against closed forms.
pub const CYCLE_TOL: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    Little,
    LittleObserved,
    Pk,
    Workload,
    Busy,
    Dist,
    Table61,
    Utilization,
}

impl Check {
    pub const ALL: [Check; 8] = [
        Check::Little,
        Check::LittleObserved,
        Check::Pk,
        Check::Workload,
        Check::Busy,
        Check::Dist,
        Check::Table61,
        Check::Utilization,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Little => "little",
            Check::LittleObserved => "little-observed",
            Check::Pk => "pk",
            Check::Workload => "workload",
            Check::Busy => "busy",
            Check::Dist => "dist",
            Check::Table61 => "table61",
            Check::Utilization => "utilization",
        }
    }
}

impl FromStr for Check {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        Check::ALL
            .into_iter()
            .find(|c| c.name() == s.trim())
            .ok_or_else(|| {
                let names: Vec<_> = Check::ALL.iter().map(|c| c.name()).collect();
                CliError::Config(format!("unknown check `{s}`; expected one of {}", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub replication: usize,
    pub seed: u64,
    pub check: Check,
    pub inputs: String,
    pub simulated: f64,
    pub formula: f64,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Row collector for one check on one trace.
struct Rows {
    check: Check,
    out: Vec<ReportRow>,
}

impl Rows {
    fn new(check: Check) -> Self {
        Rows { check, out: Vec::new() }
    }

    fn abs(&mut self, inputs: impl Into<String>, simulated: f64, formula: f64, tolerance: f64) {
        let residual = simulated - formula;
        self.out.push(ReportRow {
            replication: 0,
            seed: 0,
            check: self.check,
            inputs: inputs.into(),
            simulated,
            formula,
            residual,
            tolerance,
            pass: residual.abs() <= tolerance,
        });
    }

    fn rel(&mut self, inputs: impl Into<String>, simulated: f64, formula: f64, rel_tol: f64) {
        self.abs(inputs, simulated, formula, rel_tol * formula.abs());
    }

    fn means(&mut self, label: &str, got: BusyMeans, want: BusyMeans, rel_tol: f64) {
        for (name, g, w) in [
            ("I", got.i, want.i),
            ("C", got.c, want.c),
            ("B", got.b, want.b),
            ("E", got.e, want.e),
        ] {
            self.rel(format!("{name} {label}"), g, w, rel_tol);
        }
    }
}

/// One simulated trace and the model that produced it.
pub struct Run<'a> {
    pub model: &'a Model,
    pub trace: &'a Trace,
    pub warmup: u64,
}

/// `(α, β)` when the model is Bernoulli arrivals, geometric service, one FIFO server.
pub fn bgeom1(model: &Model) -> Option<(f64, f64)> {
    match (&model.arrivals, &model.service, &model.discipline) {
        (ArrivalSpec::Bernoulli { alpha }, DiscreteDist::Geometric { p }, Discipline::Fifo1) => {
            Some((*alpha, *p))
        }
        _ => None,
    }
}

fn require_bgeom1(model: &Model, check: Check) -> CliResult<(f64, f64)> {
    bgeom1(model).ok_or_else(|| {
        CliError::Config(format!(
            "check `{}` needs Bernoulli arrivals, geometric service and one FIFO server",
            check.name()
        ))
    })
}

fn require_bernoulli_fifo1(model: &Model, check: Check) -> CliResult<f64> {
    match (&model.arrivals, &model.discipline) {
        (ArrivalSpec::Bernoulli { alpha }, Discipline::Fifo1) => Ok(*alpha),
        _ => Err(CliError::Config(format!(
            "check `{}` needs Bernoulli arrivals and one FIFO server",
            check.name()
        ))),
    }
}

/// Refuses loads at or above one before anything is simulated.
pub fn ensure_stable(model: &Model) -> CliResult<()> {
    match model.load() {
        Some(rho) if rho >= 1.0 => Err(Error::Unstable(format!("ρ = {rho} >= 1")).into()),
        _ => Ok(()),
    }
}

fn cells() -> CliResult<Vec<(SchedulingRule, ObservationEpoch, CoherenceClass)>> {
    Ok(ClassificationTable::compute()?
        .rows()
        .into_iter()
        .map(|r| (r.rule, r.epoch, r.class))
        .collect())
}

pub fn run_check(check: Check, run: &Run) -> CliResult<Vec<ReportRow>> {
    let mut rows = Rows::new(check);
    match check {
        Check::Little => little(run, &mut rows)?,
        Check::LittleObserved => little_observed(run, &mut rows)?,
        Check::Pk => pk(run, &mut rows)?,
        Check::Workload => workload(run, &mut rows)?,
        Check::Busy => busy(run, &mut rows)?,
        Check::Dist => dist(run, &mut rows)?,
        Check::Table61 => table_61(run, &mut rows)?,
        Check::Utilization => utilization_check(run, &mut rows)?,
    }
    Ok(rows.out)
}

fn little(run: &Run, rows: &mut Rows) -> CliResult<()> {
    let c = check_little(run.trace, run.warmup)?;
    rows.abs("L = λW", c.l, c.lambda * c.w, c.tolerance);
    Ok(())
}

fn little_observed(run: &Run, rows: &mut Rows) -> CliResult<()> {
    let params = bgeom1(run.model);
    for (rule, epoch, class) in cells()? {
        let o = check_little_observed(run.trace, rule, epoch, run.warmup)?;
        let cell = format!("{rule}/{epoch}");
        rows.abs(format!("{cell} L_obs = λW_obs"), o.l_obs, o.lambda * o.w_obs, o.tolerance);
        let shift = match o.offset {
            0 => "λW".to_string(),
            1 => "λ(W+1)".to_string(),
            _ => "λ(W-1)".to_string(),
        };
        rows.abs(
            format!("{cell} L_obs = {shift}"),
            o.l_obs,
            o.lambda * (o.w + o.offset as f64),
            o.tolerance,
        );
        if let Some((alpha, beta)) = params {
            let p = BGeom1Params::new(alpha, beta, class)?;
            rows.rel(format!("{cell} L_obs, {class}"), o.l_obs, p.mean_customers(), MEAN_TOL);
        }
    }
    Ok(())
}

/// `(ES, ES², EWq)` with `EWq = α(ES² - ES) / (2(1 - ρ))`.
fn pk_targets(alpha: f64, service: &DiscreteDist) -> (f64, f64, f64) {
    let es = service.mean();
    let es2 = service.second_moment();
    let rho = alpha * es;
    (es, es2, alpha * (es2 - es) / (2.0 * (1.0 - rho)))
}

fn pk(run: &Run, rows: &mut Rows) -> CliResult<()> {
    let alpha = require_bernoulli_fifo1(run.model, Check::Pk)?;
    let p = verify_pk(run.trace, run.warmup)?;
    let (_, _, ewq) = pk_targets(alpha, &run.model.service);
    rows.rel("EWq", p.moments.ewq, ewq, SECOND_MOMENT_TOL);
    rows.rel("EWq, empirical moments", p.moments.ewq, p.ewq_formula, SECOND_MOMENT_TOL);
    let w = check_little(run.trace, run.warmup)?.w;
    rows.rel("W = Wq + ES", w, p.moments.ewq + p.moments.es, MEAN_TOL);
    Ok(())
}

fn workload(run: &Run, rows: &mut Rows) -> CliResult<()> {
    let alpha = require_bernoulli_fifo1(run.model, Check::Workload)?;
    let p = verify_pk(run.trace, run.warmup)?;
    let (es, es2, ewq) = pk_targets(alpha, &run.model.service);
    let ev = alpha * es * ewq + alpha * (es2 - es) / 2.0;
    rows.rel("EV", p.moments.ev, ev, SECOND_MOMENT_TOL);
    let tol = little_tolerance(p.moments.ev, p.ev_formula_correlated, run.trace.horizon());
    rows.abs("EV = λE[S Wq] + λ(ES² - ES)/2", p.moments.ev, p.ev_formula_correlated, tol);
    Ok(())
}

fn busy(run: &Run, rows: &mut Rows) -> CliResult<()> {
    let stats = detect_cycles_in(run.trace, View::Actual, run.warmup);
    let got = stats
        .means()
        .ok_or_else(|| Error::InsufficientData("no complete busy cycle after the warmup".into()))?;
    let model = run.model;
    let analytic = match (&model.arrivals, &model.service, &model.discipline) {
        (ArrivalSpec::Bernoulli { alpha }, service, Discipline::Fifo1) => {
            let rho = alpha * service.mean();
            Some(cycle_means(1.0 - rho, *alpha, *alpha)?)
        }
        (ArrivalSpec::Renewal { interarrival }, DiscreteDist::Geometric { p }, Discipline::Fifo1) => {
            let alpha = 1.0 / interarrival.mean();
            let (_, sigma_star) = sigma_solve(interarrival, *p)?;
            Some(ggeo1_busy(alpha, sigma_star, alpha / p)?)
        }
        _ => None,
    };
    if let Some(want) = analytic {
        rows.means("closed form", got, want, CYCLE_TOL);
    }
    let rates = state_rates(run.trace, run.warmup)?;
    let alpha0 = rates.alpha_n.get(&0).copied().unwrap_or(0.0);
    let measured = cycle_means(rates.pi[0], alpha0, rates.alpha)?;
    rows.means("from measured π(0), α(0)", got, measured, MEAN_TOL);
    let broken = stats.cycles.iter().filter(|c| c.c != c.b + c.i).count();
    rows.abs("cycles with C != B + I", broken as f64, 0.0, 0.0);
    if run.trace.is_single_server_fifo() {
        let key = |c: &dtq_core::busy::Cycle| (c.b, c.i, c.c, c.e);
        let actual: Vec<_> = detect_cycles_in(run.trace, View::Actual, 0)
            .cycles
            .iter()
            .map(key)
            .collect();
        for (rule, epoch, class) in cells()? {
            if class != CoherenceClass::Coherent {
                continue;
            }
            let seen: Vec<_> = detect_cycles_in(run.trace, View::observed(rule, epoch), 0)
                .cycles
                .iter()
                .map(key)
                .collect();
            let n = actual.len().min(seen.len());
            // one cycle may close on one path and not the other at the horizon
            let extra = actual.len().abs_diff(seen.len()).saturating_sub(1);
            let differ = actual[..n].iter().zip(&seen[..n]).filter(|(a, s)| a != s).count() + extra;
            rows.abs(format!("{rule}/{epoch} cycles differing from actual"), differ as f64, 0.0, 0.0);
        }
    }
    Ok(())
}

fn dist(run: &Run, rows: &mut Rows) -> CliResult<()> {
    let (alpha, beta) = require_bgeom1(run.model, Check::Dist)?;
    let t = run.trace.horizon();
    let tol = 3.0 / (t as f64).sqrt();
    let actual = histogram(&ObservedPath::new(run.trace, View::Actual).occupancy, run.warmup);
    let edge_tol = 2.0 / (t - run.warmup) as f64;
    for (rule, epoch, class) in cells()? {
        let p = BGeom1Params::new(alpha, beta, class)?;
        let obs = ObservedPath::new(run.trace, View::observed(rule, epoch)).occupancy;
        let pi = histogram(&obs, run.warmup);
        for (n, sim, want) in compare_pmf(&pi, &p) {
            rows.abs(format!("{rule}/{epoch} π({n}), {class}"), sim, want, tol);
        }
        if class == CoherenceClass::Coherent {
            let gap = (0..pi.len().max(actual.len()))
                .map(|n| (pi.get(n).unwrap_or(&0.0) - actual.get(n).unwrap_or(&0.0)).abs())
                .fold(0.0, f64::max);
            rows.abs(format!("{rule}/{epoch} max |π_obs - π|"), gap, 0.0, edge_tol);
        }
    }
    Ok(())
}

/// Smallest closed-form mass still compared once the simulated support ends.
const TAIL_MASS: f64 = 1e-6;

/// `(n, simulated, closed form)` over the simulated support and the closed
/// form's states above [`TAIL_MASS`].
pub fn compare_pmf(pi: &[f64], params: &BGeom1Params) -> Vec<(usize, f64, f64)> {
    let mut out = Vec::new();
    for n in 0.. {
        let want = params.pi(n);
        if n >= pi.len() && want < TAIL_MASS {
            break;
        }
        out.push((n, pi.get(n).copied().unwrap_or(0.0), want));
    }
    out
}

fn table_61(run: &Run, rows: &mut Rows) -> CliResult<()> {
    let (alpha, beta) = require_bgeom1(run.model, Check::Table61)?;
    let table = table61(alpha, beta)?;
    for (rule, epoch, class) in cells()? {
        let obs = ObservedPath::new(run.trace, View::observed(rule, epoch)).occupancy;
        let pi = histogram(&obs, run.warmup);
        rows.rel(
            format!("{rule}/{epoch} 1 - π_obs(0), {class}"),
            1.0 - pi[0],
            table[rule.index()][epoch.index()],
            MEAN_TOL,
        );
    }
    Ok(())
}

fn utilization_check(run: &Run, rows: &mut Rows) -> CliResult<()> {
    let model = run.model;
    let servers = model.discipline.servers();
    let u = utilization(run.trace, servers.unwrap_or(1), run.warmup)?;
    let rate = model
        .arrivals
        .rate()
        .unwrap_or_else(|| window_rate(run.trace, run.warmup));
    let offered = rate * model.service.mean();
    let tol = if servers == Some(1) { MEAN_TOL } else { SECOND_MOMENT_TOL };
    rows.rel("busy servers = αES", u.total, offered, tol);
    if servers == Some(1) {
        let pi = histogram(&ObservedPath::new(run.trace, View::Actual).occupancy, run.warmup);
        rows.rel("1 - π(0) = ρ", 1.0 - pi[0], offered, MEAN_TOL);
    }
    Ok(())
}
