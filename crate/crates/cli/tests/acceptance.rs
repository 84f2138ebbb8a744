//! Acceptance suite: one PASS/FAIL line per criterion at the reference
//! configuration (B/Geom/1, α = 0.3, β = 0.5, FIFO, T = 10⁶, warmup 10⁵,
//! seed 42). Exits nonzero when any criterion fails.

use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::Instant;

use dtq_cli::commands::{GOLDEN_CLASSES, GOLDEN_COUNTING};
use dtq_core::birthdeath::{product_form, table61, BGeom1Params};
use dtq_core::busy::{
    detect_cycles_in, ggeo1_busy, sigma_solve, state_rates, cycle_means, BusyMeans, Cycle,
};
use dtq_core::coherence::{verify_on_trace, ClassificationTable, CountingTable};
use dtq_core::engine::{run_discipline, ArrivalSpec, DiscreteDist, Discipline, Model, Trace};
use dtq_core::littles::{
    basic_inequality_series, check_little, check_little_observed, utilization, verify_pk,
    workload_moments,
};
use dtq_core::observer::{histogram, mean_occupancy, window_rate, IndicatorConvention, ObservedPath, View};
use dtq_core::{CoherenceClass, ObservationEpoch, SchedulingRule};

const ALPHA: f64 = 0.3;
const BETA: f64 = 0.5;
const HORIZON: u64 = 1_000_000;
const WARMUP: u64 = 100_000;
const SEED: u64 = 42;

const MEAN_TOL: f64 = 0.01;
const CYCLE_TOL: f64 = 0.02;
const PK_TOL: f64 = 0.02;
const MULTI_SERVER_TOL: f64 = 0.02;
const ORACLE_TOL: f64 = 1e-12;
const SOLVER_TOL: f64 = 1e-10;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn(&Reference) -> Outcome);

struct Reference {
    trace: Trace,
    cells: Vec<(SchedulingRule, ObservationEpoch, CoherenceClass)>,
}

fn rel(sim: f64, target: f64) -> f64 {
    ((sim - target) / target).abs()
}

fn within(what: &str, sim: f64, target: f64, tol: f64) -> Result<(), String> {
    if rel(sim, target) <= tol {
        Ok(())
    } else {
        Err(format!("{what}: simulated {sim:.6}, expected {target:.6} (relative error {:.4} > {tol})", rel(sim, target)))
    }
}

fn classification(_: &Reference) -> Outcome {
    let table = ClassificationTable::compute().map_err(|e| e.to_string())?;
    let golden = ClassificationTable::parse_text(GOLDEN_CLASSES).map_err(|e| e.to_string())?;
    let diff = table.diff(&golden);
    let coherent = table.count(CoherenceClass::Coherent);
    let counting = CountingTable::from_classification(&table);
    let golden_counting = CountingTable::parse_text(GOLDEN_COUNTING).map_err(|e| e.to_string())?;
    let counting_diff = counting.diff(&golden_counting);
    if !diff.is_empty() || !counting_diff.is_empty() || coherent != 17 {
        return Err(format!("{coherent} coherent; diffs: {:?} {:?}", diff, counting_diff));
    }
    Ok(format!("30/30 cells match, {coherent} coherent, 5/5 edge/center rows match"))
}

fn offsets(r: &Reference) -> Outcome {
    let infinite = Model {
        arrivals: ArrivalSpec::Renewal {
            interarrival: DiscreteDist::from_pairs(&[(1, 0.5), (2, 0.3), (5, 0.2)]).unwrap(),
        },
        service: DiscreteDist::from_pairs(&[(1, 0.3), (4, 0.4), (9, 0.3)]).unwrap(),
        discipline: Discipline::InfiniteServer,
    }
    .simulate(SEED, 200_000)
    .map_err(|e| e.to_string())?;
    let mut customers = 0;
    for (name, trace) in [("B/Geom/1", &r.trace), ("G/G/inf", &infinite)] {
        for &(rule, epoch, _) in &r.cells {
            let rep = verify_on_trace(trace, rule, epoch).map_err(|e| e.to_string())?;
            if !rep.pass {
                return Err(format!("{name} {rule}/{epoch}: offsets {:?}, expected {}", rep.histogram, rep.expected));
            }
        }
        customers += trace.len();
    }
    Ok(format!("{customers} customers x 30 cells, every offset equals its class"))
}

fn worked_example(_: &Reference) -> Outcome {
    let t = run_discipline(&[1, 2, 5], &[], &Discipline::External { departures: vec![4, 5, 7] }, 7, 0)
        .map_err(|e| e.to_string())?;
    let lambda = window_rate(&t, 0);
    let little = check_little(&t, 0).map_err(|e| e.to_string())?;
    let left = mean_occupancy(&t, IndicatorConvention::LeftOpen, 0).map_err(|e| e.to_string())?;
    let right = mean_occupancy(&t, IndicatorConvention::RightOpen, 0).map_err(|e| e.to_string())?;
    let exact = |x: f64, want: f64| (x - want).abs() <= 4.0 * f64::EPSILON;
    let ok = exact(lambda, 3.0 / 7.0)
        && exact(little.w, 8.0 / 3.0)
        && exact(left, 8.0 / 7.0)
        && exact(right, 8.0 / 7.0)
        && exact(little.l, little.lambda * little.w);
    let detail = format!("λ = {lambda}, W = {}, L = {left} / {right}, L - λW = {:e}", little.w, little.residual);
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn little_family(r: &Reference) -> Outcome {
    let c = check_little(&r.trace, WARMUP).map_err(|e| e.to_string())?;
    if !c.pass {
        return Err(format!("|L - λW| = {:e} > {:e}", c.residual.abs(), c.tolerance));
    }
    let mut worst: f64 = 0.0;
    for &(rule, epoch, class) in &r.cells {
        let o = check_little_observed(&r.trace, rule, epoch, WARMUP).map_err(|e| e.to_string())?;
        let target = BGeom1Params::new(ALPHA, BETA, class).unwrap().mean_customers();
        let identity = o.lambda * (o.w + o.offset as f64);
        within(&format!("{rule}/{epoch} L_obs vs λ(W{:+})", o.offset), o.l_obs, identity, MEAN_TOL)?;
        within(&format!("{rule}/{epoch} L_obs vs {target}"), o.l_obs, target, MEAN_TOL)?;
        worst = worst.max(rel(o.l_obs, target));
    }
    Ok(format!("|L - λW| = {:.2e} <= {:.2e}; 30 cells within 1% of 1.05/0.75/1.35 (worst {:.4})", c.residual.abs(), c.tolerance, worst))
}

fn basic_inequality(_: &Reference) -> Outcome {
    let model = Model::bgeom1(ALPHA, BETA).unwrap();
    let mut slots = 0;
    for seed in 0..10 {
        let t = model.simulate(seed, 10_000).map_err(|e| e.to_string())?;
        for b in basic_inequality_series(&t) {
            if !b.holds() {
                return Err(format!("seed {seed}: {b:?}"));
            }
            slots += 1;
        }
    }
    Ok(format!("holds at all {slots} (trace, τ) pairs"))
}

fn observed_pmf(trace: &Trace, rule: SchedulingRule, epoch: ObservationEpoch) -> Vec<f64> {
    histogram(&ObservedPath::new(trace, View::observed(rule, epoch)).occupancy, WARMUP)
}

fn stationary(r: &Reference) -> Outcome {
    let tol = 3.0 / (HORIZON as f64).sqrt();
    let edge = 2.0 / (HORIZON - WARMUP) as f64;
    let actual = histogram(&ObservedPath::new(&r.trace, View::Actual).occupancy, WARMUP);
    let (mut worst, mut worst_edge, mut states) = (0.0f64, 0.0f64, 0);
    for &(rule, epoch, class) in &r.cells {
        let p = BGeom1Params::new(ALPHA, BETA, class).unwrap();
        let pi = observed_pmf(&r.trace, rule, epoch);
        let mut n = 0;
        while n < pi.len() || p.pi(n) >= 1e-6 {
            let diff = (pi.get(n).unwrap_or(&0.0) - p.pi(n)).abs();
            if diff > tol {
                return Err(format!("{rule}/{epoch} π({n}): simulated {:.6}, closed form {:.6}", pi.get(n).unwrap_or(&0.0), p.pi(n)));
            }
            worst = worst.max(diff);
            states += 1;
            n += 1;
        }
        if class == CoherenceClass::Coherent {
            for n in 0..pi.len().max(actual.len()) {
                let d = (pi.get(n).unwrap_or(&0.0) - actual.get(n).unwrap_or(&0.0)).abs();
                if d > edge {
                    return Err(format!("{rule}/{epoch} π({n}) differs from the actual path by {d:e}"));
                }
                worst_edge = worst_edge.max(d);
            }
        }
    }
    Ok(format!(
        "{states} states within {tol:.4} (worst {worst:.5}); coherent histograms agree to {worst_edge:.1e} <= {edge:.1e}"
    ))
}

fn table_61(r: &Reference) -> Outcome {
    let table = table61(ALPHA, BETA).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for &(rule, epoch, _) in &r.cells {
        let busy = 1.0 - observed_pmf(&r.trace, rule, epoch)[0];
        let want = table[rule.index()][epoch.index()];
        within(&format!("{rule}/{epoch} 1 - π_obs(0)"), busy, want, MEAN_TOL)?;
        worst = worst.max(rel(busy, want));
    }
    Ok(format!("30 cells within 1% of 0.6 / 3/7 / 0.72 (worst {worst:.4})"))
}

fn means_within(what: &str, got: BusyMeans, want: BusyMeans, tol: f64) -> Result<(), String> {
    for (name, g, w) in [("I", got.i, want.i), ("C", got.c, want.c), ("B", got.b, want.b), ("E", got.e, want.e)] {
        within(&format!("{what} {name}"), g, w, tol)?;
    }
    Ok(())
}

fn busy_periods(r: &Reference) -> Outcome {
    let stats = detect_cycles_in(&r.trace, View::Actual, WARMUP);
    let got = stats.means().ok_or("no cycles")?;
    let want = BusyMeans { i: 10.0 / 3.0, c: 25.0 / 3.0, b: 5.0, e: 2.5 };
    means_within("closed form", got, want, CYCLE_TOL)?;
    if let Some(c) = stats.cycles.iter().find(|c| c.c != c.b + c.i) {
        return Err(format!("cycle {c:?} breaks C = B + I"));
    }
    let key = |c: &Cycle| (c.b, c.i, c.c, c.e);
    let actual: Vec<_> = detect_cycles_in(&r.trace, View::Actual, 0).cycles.iter().map(key).collect();
    for &(rule, epoch, class) in &r.cells {
        if class != CoherenceClass::Coherent {
            continue;
        }
        let seen: Vec<_> = detect_cycles_in(&r.trace, View::observed(rule, epoch), 0).cycles.iter().map(key).collect();
        let n = actual.len().min(seen.len());
        if actual.len().abs_diff(seen.len()) > 1 || actual[..n] != seen[..n] {
            return Err(format!("{rule}/{epoch} cycles differ from the actual cycles"));
        }
    }
    let rates = state_rates(&r.trace, WARMUP).map_err(|e| e.to_string())?;
    let measured = cycle_means(rates.pi[0], rates.alpha_n[&0], rates.alpha).map_err(|e| e.to_string())?;
    means_within("measured π(0), α(0)", got, measured, MEAN_TOL)?;
    Ok(format!(
        "(I, C, B, E) = ({:.4}, {:.4}, {:.4}, {:.4}) over {} cycles; C = B + I everywhere; 17 coherent views match cycle by cycle",
        got.i, got.c, got.b, got.e, stats.len()
    ))
}

fn sigma(_: &Reference) -> Outcome {
    let interarrival = DiscreteDist::geometric(ALPHA).unwrap();
    let (s, s_star) = sigma_solve(&interarrival, BETA).map_err(|e| e.to_string())?;
    let rho = ALPHA / BETA;
    let g = ggeo1_busy(ALPHA, s_star, rho).map_err(|e| e.to_string())?;
    let t = cycle_means(1.0 - rho, ALPHA, ALPHA).map_err(|e| e.to_string())?;
    let gaps = [s - 3.0 / 7.0, s_star - 0.6, g.i - t.i, g.c - t.c, g.b - t.b, g.e - t.e];
    let worst = gaps.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let detail = format!("σ = {s:.12}, σ* = {s_star:.12}, max gap {worst:.1e}");
    if worst <= SOLVER_TOL {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn pk(r: &Reference) -> Outcome {
    let p = verify_pk(&r.trace, WARMUP).map_err(|e| e.to_string())?;
    within("EWq", p.moments.ewq, 1.5, PK_TOL)?;
    within("EV", p.moments.ev, 1.5, PK_TOL)?;
    let w = check_little(&r.trace, WARMUP).map_err(|e| e.to_string())?.w;
    within("W vs Wq + ES", w, p.moments.ewq + p.moments.es, MEAN_TOL)?;
    let unit = Model {
        service: DiscreteDist::point(1),
        ..Model::bgeom1(ALPHA, BETA).unwrap()
    }
    .simulate(SEED, HORIZON)
    .map_err(|e| e.to_string())?;
    let m = workload_moments(&unit, WARMUP).map_err(|e| e.to_string())?;
    if m.ewq != 0.0 {
        return Err(format!("B/D/1 with unit service: EWq = {}", m.ewq));
    }
    Ok(format!("EWq = {:.4}, EV = {:.4}, W = {w:.4} vs Wq + ES = {:.4}; unit service EWq = 0", p.moments.ewq, p.moments.ev, p.moments.ewq + p.moments.es))
}

fn utilization_checks(r: &Reference) -> Outcome {
    let pi0 = histogram(&ObservedPath::new(&r.trace, View::Actual).occupancy, WARMUP)[0];
    within("1 - π(0)", 1.0 - pi0, ALPHA / BETA, MEAN_TOL)?;
    // renewal inter-arrivals with mean 5/3 and two-point services with mean 2
    let two = Model {
        arrivals: ArrivalSpec::Renewal {
            interarrival: DiscreteDist::from_pairs(&[(1, 2.0 / 3.0), (3, 1.0 / 3.0)]).unwrap(),
        },
        service: DiscreteDist::from_pairs(&[(1, 0.5), (3, 0.5)]).unwrap(),
        discipline: Discipline::FifoC { servers: 2, choice: Default::default() },
    };
    let load = two.arrivals.rate().unwrap() * two.service.mean();
    let t = two.simulate(SEED, HORIZON).map_err(|e| e.to_string())?;
    let u = utilization(&t, 2, WARMUP).map_err(|e| e.to_string())?;
    within("GI/GI/2 busy servers", u.total, load, MULTI_SERVER_TOL)?;
    Ok(format!("1 - π(0) = {:.4} vs 0.6; GI/GI/2 busy servers {:.4} vs αES = {load:.4}", 1.0 - pi0, u.total))
}

fn oracle(_: &Reference) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut points = 0;
    for alpha in [0.1, 0.2, 0.3, 0.4] {
        for beta in [0.5, 0.6, 0.7, 0.8, 0.9] {
            points += 1;
            for class in [CoherenceClass::Coherent, CoherenceClass::SubCoherent, CoherenceClass::SuperCoherent] {
                let p = BGeom1Params::new(alpha, beta, class).unwrap();
                let pi = product_form(&p.profile()).map_err(|e| e.to_string())?;
                for (n, x) in pi.iter().enumerate() {
                    worst = worst.max((x - p.pi(n)).abs());
                }
            }
        }
    }
    let detail = format!("{points} (α, β) points x 3 classes, max |difference| {worst:.1e}");
    if worst <= ORACLE_TOL {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn determinism(_: &Reference) -> Outcome {
    let config = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/reference.toml");
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_dtq"))
            .args(["verify", "--config", config.to_str().unwrap(), "--format", "json"])
            .env_remove("DTQ_SEED")
            .output()
            .map_err(|e| e.to_string())
    };
    let (a, b) = (run()?, run()?);
    if a.stdout.is_empty() || a.stdout != b.stdout {
        return Err(format!("outputs differ ({} vs {} bytes)", a.stdout.len(), b.stdout.len()));
    }
    Ok(format!("two runs, {} identical bytes of JSON (exit {:?})", a.stdout.len(), a.status.code()))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let reference = Reference {
        trace: Model::bgeom1(ALPHA, BETA).unwrap().simulate(SEED, HORIZON).unwrap(),
        cells: ClassificationTable::compute()
            .unwrap()
            .rows()
            .into_iter()
            .map(|r| (r.rule, r.epoch, r.class))
            .collect(),
    };
    let criteria: [Criterion; 13] = [
        ("classification tables", classification),
        ("per-customer offsets", offsets),
        ("three-customer worked example", worked_example),
        ("Little's law family", little_family),
        ("basic inequality", basic_inequality),
        ("stationary distributions", stationary),
        ("busy fraction per cell", table_61),
        ("busy periods", busy_periods),
        ("σ solver", sigma),
        ("PK and workload", pk),
        ("utilization", utilization_checks),
        ("product-form oracle", oracle),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check(&reference) {
            Ok(detail) => println!("PASS [{:>2}] {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{:>2}] {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria pass ({:.1} s)",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
