//! Little's law and its relatives on finite sample paths.
//!
//! All averages use the window `(warmup, T]`: time averages over its slots,
//! customer averages over customers that both arrive and depart inside it.

use serde::{Deserialize, Serialize};

use crate::coherence::classify;
use crate::engine::{Customer, Trace};
use crate::error::{Error, Result};
use crate::observer::{check_window, completed, occupancy_path, time_averages, window_rate};
use crate::timebase::{ObservationEpoch, SchedulingRule};

/// Relative tolerance for first-moment checks.
pub const MEAN_TOL: f64 = 0.01;
/// Relative tolerance for second-moment quantities.
pub const SECOND_MOMENT_TOL: f64 = 0.02;

/// `max(3 (L + 1) / sqrt(T), 0.01 λW)`.
pub fn little_tolerance(l: f64, lambda_w: f64, horizon: u64) -> f64 {
    (3.0 * (l + 1.0) / (horizon as f64).sqrt()).max(MEAN_TOL * lambda_w)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LittleCheck {
    #[serde(rename = "L")]
    pub l: f64,
    pub lambda: f64,
    #[serde(rename = "W")]
    pub w: f64,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn check_little(trace: &Trace, warmup: u64) -> Result<LittleCheck> {
    check_window(trace, warmup)?;
    if trace.is_empty() {
        return Ok(LittleCheck {
            l: 0.0,
            lambda: 0.0,
            w: 0.0,
            residual: 0.0,
            tolerance: little_tolerance(0.0, 0.0, trace.horizon()),
            pass: true,
        });
    }
    let est = time_averages(trace, SchedulingRule::LasIa, ObservationEpoch::RandomObserver, warmup)?;
    let residual = est.l - est.lambda * est.w;
    let tolerance = little_tolerance(est.l, est.lambda * est.w, trace.horizon());
    Ok(LittleCheck {
        l: est.l,
        lambda: est.lambda,
        w: est.w,
        residual,
        tolerance,
        pass: residual.abs() <= tolerance,
    })
}

/// Observed Little's law with its class-specific forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservedLittleCheck {
    pub rule: SchedulingRule,
    pub epoch: ObservationEpoch,
    pub offset: i64,
    #[serde(rename = "L_obs")]
    pub l_obs: f64,
    pub lambda: f64,
    #[serde(rename = "W_obs")]
    pub w_obs: f64,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "W")]
    pub w: f64,
    /// `L° - λ W°`.
    pub residual: f64,
    /// `L° - λ (W + offset)`.
    pub class_residual: f64,
    /// `L° - L - offset λ`.
    pub shift_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn check_little_observed(
    trace: &Trace,
    rule: SchedulingRule,
    epoch: ObservationEpoch,
    warmup: u64,
) -> Result<ObservedLittleCheck> {
    let offset = classify(rule, epoch)?.offset();
    let est = time_averages(trace, rule, epoch, warmup)?;
    let off = offset as f64;
    let residual = est.l_obs - est.lambda * est.w_obs;
    let class_residual = est.l_obs - est.lambda * (est.w + off);
    let shift_residual = est.l_obs - est.l - off * est.lambda;
    let tolerance = little_tolerance(est.l_obs, est.lambda * est.w_obs, trace.horizon());
    let pass = [residual, class_residual, shift_residual]
        .iter()
        .all(|r| r.abs() <= tolerance);
    Ok(ObservedLittleCheck {
        rule,
        epoch,
        offset,
        l_obs: est.l_obs,
        lambda: est.lambda,
        w_obs: est.w_obs,
        l: est.l,
        w: est.w,
        residual,
        class_residual,
        shift_residual,
        tolerance,
        pass,
    })
}

/// `Σ_{A_k <= τ} W_k >= Σ_{j <= τ} L(j) >= Σ_{D_k <= τ} W_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasicInequality {
    pub tau: u64,
    pub upper: u64,
    pub middle: u64,
    pub lower: u64,
}

impl BasicInequality {
    pub fn holds(&self) -> bool {
        self.upper >= self.middle && self.middle >= self.lower
    }
}

/// The three sums at one slot, by direct enumeration.
pub fn basic_inequality(trace: &Trace, tau: u64) -> BasicInequality {
    let c = trace.customers();
    let upper = c.iter().filter(|c| c.arrival <= tau).map(Customer::wait).sum();
    let lower = c.iter().filter(|c| c.departure <= tau).map(Customer::wait).sum();
    let middle = (1..=tau)
        .map(|j| c.iter().filter(|c| c.arrival < j && j <= c.departure).count() as u64)
        .sum();
    BasicInequality {
        tau,
        upper,
        middle,
        lower,
    }
}

/// The three sums at every `τ = 0..=T`, computed incrementally.
pub fn basic_inequality_series(trace: &Trace) -> Vec<BasicInequality> {
    let t = trace.horizon() as usize;
    let mut up = vec![0u64; t + 1];
    let mut down = vec![0u64; t + 1];
    for c in trace.customers() {
        up[c.arrival as usize] += c.wait();
        if c.departure as usize <= t {
            down[c.departure as usize] += c.wait();
        }
    }
    let path = occupancy_path(trace);
    let (mut upper, mut middle, mut lower) = (0, 0, 0);
    (0..=t)
        .map(|j| {
            upper += up[j];
            lower += down[j];
            if j >= 1 {
                middle += u64::from(path[j]);
            }
            BasicInequality {
                tau: j as u64,
                upper,
                middle,
                lower,
            }
        })
        .collect()
}

/// Rate `f_k(τ)` at which a customer incurs cost.
pub trait CostFunction {
    fn rate(&self, customer: &Customer, tau: u64) -> f64;

    /// Declared support length: `f_k(τ) = 0` outside `(A_k, A_k + bound]`.
    fn support(&self, customer: &Customer) -> u64;
}

/// `1{A_k < τ <= D_k}`: turns `H = λG` into `L = λW`.
#[derive(Debug, Clone, Copy, Default)]
pub struct IndicatorCost;

impl CostFunction for IndicatorCost {
    fn rate(&self, c: &Customer, tau: u64) -> f64 {
        f64::from(u8::from(c.arrival < tau && tau <= c.departure))
    }

    fn support(&self, c: &Customer) -> u64 {
        c.wait()
    }
}

/// Work still owed to a customer: the full requirement while queued, then
/// decreasing by one per slot of service.
#[derive(Debug, Clone, Copy, Default)]
pub struct RemainingWork;

impl CostFunction for RemainingWork {
    fn rate(&self, c: &Customer, tau: u64) -> f64 {
        remaining_work(c, tau) as f64
    }

    fn support(&self, c: &Customer) -> u64 {
        c.wait()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroCost;

impl CostFunction for ZeroCost {
    fn rate(&self, _: &Customer, _: u64) -> f64 {
        0.0
    }

    fn support(&self, _: &Customer) -> u64 {
        0
    }
}

fn remaining_work(c: &Customer, tau: u64) -> u64 {
    if c.arrival < tau && tau <= c.start {
        c.service
    } else if c.start < tau && tau <= c.departure {
        c.departure - tau
    } else {
        0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HLambdaG {
    #[serde(rename = "H")]
    pub h: f64,
    pub lambda: f64,
    #[serde(rename = "G")]
    pub g: f64,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// `H = λG` for an arbitrary cost, after spot-checking its support bound
/// on the slots just outside `(A_k, A_k + bound]`.
pub fn check_h_lambda_g<F: CostFunction + ?Sized>(
    trace: &Trace,
    cost: &F,
    warmup: u64,
) -> Result<HLambdaG> {
    check_window(trace, warmup)?;
    let t = trace.horizon();
    for (k, c) in trace.customers().iter().enumerate() {
        let bound = cost.support(c);
        for slot in [c.arrival, c.arrival + bound + 1] {
            if cost.rate(c, slot) != 0.0 {
                return Err(Error::SupportViolation { customer: k + 1, slot });
            }
        }
    }
    let mut h_total = 0.0;
    for c in trace.customers() {
        let lo = (c.arrival + 1).max(warmup + 1);
        let hi = (c.arrival + cost.support(c)).min(t);
        h_total += (lo..=hi).map(|tau| cost.rate(c, tau)).sum::<f64>();
    }
    let h = h_total / (t - warmup) as f64;
    let customers = trace.customers();
    let done: Vec<&Customer> = completed(trace, warmup).map(|i| &customers[i]).collect();
    let g = if done.is_empty() {
        0.0
    } else {
        done.iter()
            .map(|c| {
                (c.arrival + 1..=c.arrival + cost.support(c))
                    .map(|tau| cost.rate(c, tau))
                    .sum::<f64>()
            })
            .sum::<f64>()
            / done.len() as f64
    };
    if done.is_empty() && h != 0.0 {
        return Err(Error::InsufficientData("no completed customers in the window".into()));
    }
    let lambda = window_rate(trace, warmup);
    let residual = h - lambda * g;
    let tolerance = little_tolerance(h, lambda * g, t);
    Ok(HLambdaG {
        h,
        lambda,
        g,
        residual,
        tolerance,
        pass: residual.abs() <= tolerance,
    })
}

/// Unfinished work `V(τ)` at one slot.
pub fn workload(trace: &Trace, tau: u64) -> u64 {
    trace.customers().iter().map(|c| remaining_work(c, tau)).sum()
}

/// `V(j)` for `j = 0..=T`.
pub fn workload_path(trace: &Trace) -> Vec<u64> {
    let t = trace.horizon() as usize;
    // V(j) = constant(j) + slope(j) * j, both piecewise constant
    let mut constant = vec![0i64; t + 2];
    let mut slope = vec![0i64; t + 2];
    let mut add = |lo: u64, hi: u64, c0: i64, c1: i64| {
        let lo = lo as usize;
        if lo > t || hi < lo as u64 {
            return;
        }
        let hi = (hi as usize).min(t);
        constant[lo] += c0;
        constant[hi + 1] -= c0;
        slope[lo] += c1;
        slope[hi + 1] -= c1;
    };
    for c in trace.customers() {
        add(c.arrival + 1, c.start, c.service as i64, 0);
        add(c.start + 1, c.departure, c.departure as i64, -1);
    }
    let (mut c0, mut c1) = (0i64, 0i64);
    (0..=t)
        .map(|j| {
            c0 += constant[j];
            c1 += slope[j];
            (c0 + c1 * j as i64) as u64
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkloadMoments {
    #[serde(rename = "ES")]
    pub es: f64,
    #[serde(rename = "ES2")]
    pub es2: f64,
    #[serde(rename = "EWq")]
    pub ewq: f64,
    #[serde(rename = "ESWq")]
    pub eswq: f64,
    #[serde(rename = "EV")]
    pub ev: f64,
}

pub fn workload_moments(trace: &Trace, warmup: u64) -> Result<WorkloadMoments> {
    check_window(trace, warmup)?;
    let customers = trace.customers();
    let done: Vec<&Customer> = completed(trace, warmup).map(|i| &customers[i]).collect();
    if done.is_empty() {
        return Err(Error::InsufficientData("no completed customers in the window".into()));
    }
    let n = done.len() as f64;
    let mean = |f: &dyn Fn(&Customer) -> f64| done.iter().map(|c| f(c)).sum::<f64>() / n;
    let path = workload_path(trace);
    let window = &path[warmup as usize + 1..];
    Ok(WorkloadMoments {
        es: mean(&|c| c.service as f64),
        es2: mean(&|c| (c.service as f64).powi(2)),
        ewq: mean(&|c| c.queue_wait() as f64),
        eswq: mean(&|c| (c.service * c.queue_wait()) as f64),
        ev: window.iter().sum::<u64>() as f64 / window.len() as f64,
    })
}

/// Waiting-time and workload forms of the discrete PK relation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PkReport {
    pub lambda: f64,
    pub rho: f64,
    pub moments: WorkloadMoments,
    /// `λ(ES² - ES) / (2(1 - ρ))` from empirical λ and moments.
    pub ewq_formula: f64,
    /// `λ ES EWq + λ(ES² - ES)/2`.
    pub ev_formula: f64,
    /// `λ ESWq + λ(ES² - ES)/2`, without assuming uncorrelatedness.
    pub ev_formula_correlated: f64,
    /// `ESWq - ES EWq`.
    pub uncorrelated_gap: f64,
    pub pass: bool,
}

fn relative_close(sim: f64, target: f64, tol: f64) -> bool {
    if target == 0.0 {
        sim.abs() <= tol
    } else {
        ((sim - target) / target).abs() <= tol
    }
}

pub fn verify_pk(trace: &Trace, warmup: u64) -> Result<PkReport> {
    if !trace.is_single_server_fifo() {
        return Err(Error::InvalidParameter(
            "the PK relation is checked on single-server FIFO paths only".into(),
        ));
    }
    let m = workload_moments(trace, warmup)?;
    let lambda = window_rate(trace, warmup);
    let rho = lambda * m.es;
    if rho >= 1.0 {
        return Err(Error::Unstable(format!("ρ = {rho} >= 1")));
    }
    let residual_service = lambda * (m.es2 - m.es) / 2.0;
    let ewq_formula = residual_service / (1.0 - rho);
    let ev_formula = lambda * m.es * m.ewq + residual_service;
    let ev_formula_correlated = lambda * m.eswq + residual_service;
    let pass = relative_close(m.ewq, ewq_formula, SECOND_MOMENT_TOL)
        && relative_close(m.ev, ev_formula, SECOND_MOMENT_TOL);
    Ok(PkReport {
        lambda,
        rho,
        moments: m,
        ewq_formula,
        ev_formula,
        ev_formula_correlated,
        uncorrelated_gap: m.eswq - m.es * m.ewq,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utilization {
    pub total: f64,
    pub per_server: Vec<f64>,
}

/// Fraction of window slots each server spends serving, counting slot `τ`
/// busy when `A''_k < τ <= D_k`.
pub fn utilization(trace: &Trace, servers: usize, warmup: u64) -> Result<Utilization> {
    check_window(trace, warmup)?;
    let t = trace.horizon();
    let mut busy = vec![0u64; servers.max(1)];
    let mut total = 0u64;
    for c in trace.customers() {
        let lo = (c.start + 1).max(warmup + 1);
        let hi = c.departure.min(t);
        if hi < lo {
            continue;
        }
        let slots = hi - lo + 1;
        total += slots;
        if let Some(b) = busy.get_mut(c.server.unwrap_or(0)) {
            *b += slots;
        }
    }
    let span = (t - warmup) as f64;
    Ok(Utilization {
        total: total as f64 / span,
        per_server: busy.into_iter().map(|b| b as f64 / span).collect(),
    })
}
