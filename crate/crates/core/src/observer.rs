//! Actual and observed waiting times, occupancy paths and time averages.
//!
//! The actual occupancy at slot `τ` is `L(τ) = #{k : A_k < τ <= D_k}`. The
//! observed occupancy under a rule and epoch is
//! `L°(u(τ)) = #{k : A'_k < u(τ) <= D'_k}`. Each customer is present on the
//! observed path over a contiguous run of slots, so whole paths are built
//! with a difference array in `O(n + T)`.

use serde::{Deserialize, Serialize};

use crate::engine::Trace;
use crate::error::{Error, Result};
use crate::timebase::{
    epoch_phase, epoch_point, shift_arrival, shift_departure, ObservationEpoch, SchedulingRule,
};

/// Which occupancy process to read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum View {
    /// `L(τ)` on integer slots.
    Actual,
    /// `L°(u(τ))` for one rule and epoch.
    Observed {
        rule: SchedulingRule,
        epoch: ObservationEpoch,
    },
}

impl View {
    pub fn observed(rule: SchedulingRule, epoch: ObservationEpoch) -> Self {
        View::Observed { rule, epoch }
    }
}

/// Which end of `(A, D]` a customer counts at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IndicatorConvention {
    /// `1{A < τ <= D}`.
    #[default]
    LeftOpen,
    /// `1{A <= τ < D}`.
    RightOpen,
}

/// `W = D - A`, cross-checked against the indicator sum.
pub fn actual_wait(arrival: u64, departure: u64) -> Result<u64> {
    if departure <= arrival {
        return Err(Error::InvalidParameter(format!(
            "departure {departure} not after arrival {arrival}"
        )));
    }
    let w = departure - arrival;
    let count = (arrival..=departure)
        .filter(|&t| arrival < t && t <= departure)
        .count() as u64;
    debug_assert_eq!(w, count);
    Ok(w)
}

/// `W° = #{τ >= 1 : A' < u(τ) <= D'}`, by direct enumeration.
pub fn observed_wait(
    rule: SchedulingRule,
    epoch: ObservationEpoch,
    arrival: u64,
    departure: u64,
) -> Result<u64> {
    if departure <= arrival {
        return Err(Error::InvalidParameter(format!(
            "departure {departure} not after arrival {arrival}"
        )));
    }
    let a = shift_arrival(rule, arrival);
    let d = shift_departure(rule, departure)?;
    // shifted instants stay within one slot of the actual ones
    let lo = arrival.saturating_sub(1).max(1);
    Ok((lo..=departure + 1)
        .filter(|&t| {
            let u = epoch_point(rule, epoch, t);
            a.is_before(u) && d.is_after(u)
        })
        .count() as u64)
}

/// Slots `τ >= 1` at which a customer `(A, D)` is counted on the observed path.
pub fn presence_range(
    rule: SchedulingRule,
    epoch: ObservationEpoch,
    arrival: u64,
    departure: u64,
) -> Option<(u64, u64)> {
    let p = epoch_phase(rule, epoch);
    let first = shift_arrival(rule, arrival).first_slot_after(p).max(1);
    let last = shift_departure(rule, departure).ok()?.last_slot_before(p)?;
    (first <= last).then_some((first, last))
}

/// First slot `τ` at which a customer arriving at `arrival` has been seen to arrive.
pub(crate) fn first_seen(view: View, arrival: u64) -> u64 {
    match view {
        View::Actual => arrival + 1,
        View::Observed { rule, epoch } => shift_arrival(rule, arrival)
            .first_slot_after(epoch_phase(rule, epoch))
            .max(1),
    }
}

/// `L(τ)`.
pub fn queue_length(trace: &Trace, tau: u64) -> u64 {
    queue_length_with(trace, tau, IndicatorConvention::LeftOpen)
}

pub fn queue_length_with(trace: &Trace, tau: u64, conv: IndicatorConvention) -> u64 {
    trace
        .customers()
        .iter()
        .filter(|c| match conv {
            IndicatorConvention::LeftOpen => c.arrival < tau && tau <= c.departure,
            IndicatorConvention::RightOpen => c.arrival <= tau && tau < c.departure,
        })
        .count() as u64
}

/// `L°(u(τ))`, by direct enumeration over customers.
pub fn queue_length_observed(
    trace: &Trace,
    rule: SchedulingRule,
    epoch: ObservationEpoch,
    tau: u64,
) -> u64 {
    let u = epoch_point(rule, epoch, tau);
    trace
        .shifted(rule)
        .instants
        .iter()
        .filter(|(a, d)| a.is_before(u) && d.is_after(u))
        .count() as u64
}

fn accumulate(horizon: u64, ranges: impl Iterator<Item = (u64, u64)>) -> Vec<u32> {
    let len = horizon as usize + 1;
    let mut diff = vec![0i64; len + 1];
    for (lo, hi) in ranges {
        if lo > horizon {
            continue;
        }
        diff[lo as usize] += 1;
        diff[hi.min(horizon) as usize + 1] -= 1;
    }
    let mut acc = 0i64;
    diff[..len]
        .iter()
        .map(|d| {
            acc += d;
            acc as u32
        })
        .collect()
}

/// `L(j)` for `j = 0..=T`.
pub fn occupancy_path(trace: &Trace) -> Vec<u32> {
    occupancy_path_with(trace, IndicatorConvention::LeftOpen)
}

pub fn occupancy_path_with(trace: &Trace, conv: IndicatorConvention) -> Vec<u32> {
    let ranges = trace.customers().iter().map(|c| match conv {
        IndicatorConvention::LeftOpen => (c.arrival + 1, c.departure),
        IndicatorConvention::RightOpen => (c.arrival, c.departure - 1),
    });
    accumulate(trace.horizon(), ranges)
}

/// Occupancy and cumulative arrivals seen, slot by slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservedPath {
    /// Occupancy at `u(j)`, `j = 0..=T`.
    pub occupancy: Vec<u32>,
    /// `#{k : A'_k < u(j)}`, `j = 0..=T`.
    pub arrivals_seen: Vec<u64>,
}

impl ObservedPath {
    pub fn new(trace: &Trace, view: View) -> Self {
        let occupancy = match view {
            View::Actual => occupancy_path(trace),
            View::Observed { rule, epoch } => accumulate(
                trace.horizon(),
                trace
                    .customers()
                    .iter()
                    .filter_map(|c| presence_range(rule, epoch, c.arrival, c.departure)),
            ),
        };
        let len = trace.horizon() as usize + 1;
        let mut arrivals_seen = vec![0u64; len + 1];
        for c in trace.customers() {
            let j = first_seen(view, c.arrival);
            if j < len as u64 {
                arrivals_seen[j as usize] += 1;
            }
        }
        let mut acc = 0;
        arrivals_seen.truncate(len);
        for x in arrivals_seen.iter_mut() {
            acc += *x;
            *x = acc;
        }
        ObservedPath {
            occupancy,
            arrivals_seen,
        }
    }
}

/// `W°_k` for every customer, from presence ranges.
pub fn observed_waits(trace: &Trace, rule: SchedulingRule, epoch: ObservationEpoch) -> Vec<u64> {
    trace
        .customers()
        .iter()
        .map(|c| {
            presence_range(rule, epoch, c.arrival, c.departure).map_or(0, |(lo, hi)| hi - lo + 1)
        })
        .collect()
}

/// Observed time in service `#{τ : A''' < u(τ) <= D'}`, where the service
/// start instant is the customer's own arrival instant when it starts on
/// arrival and the previous departure instant on its server otherwise.
pub fn observed_services(trace: &Trace, rule: SchedulingRule, epoch: ObservationEpoch) -> Vec<u64> {
    let p = epoch_phase(rule, epoch);
    let shifted = trace.shifted(rule);
    trace
        .customers()
        .iter()
        .zip(&shifted.instants)
        .map(|(c, (a, d))| {
            let first = if c.start == c.arrival {
                a.first_slot_after(p)
            } else {
                shift_departure(rule, c.start)
                    .expect("service starts after slot 0")
                    .first_slot_after(p)
            };
            match d.last_slot_before(p) {
                Some(last) if last >= first => last - first + 1,
                _ => 0,
            }
        })
        .collect()
}

/// Observed counts at the slots of actual events: arrival slots for
/// arrival epochs, shifted departure slots for departure epochs. `None` for
/// the random and outside observers.
pub fn event_epoch_counts(
    trace: &Trace,
    rule: SchedulingRule,
    epoch: ObservationEpoch,
) -> Option<Vec<u32>> {
    let path = ObservedPath::new(trace, View::observed(rule, epoch)).occupancy;
    let t = trace.horizon();
    let shifted = trace.shifted(rule);
    let pairs = trace.customers().iter().zip(&shifted.instants);
    // keep customers whose actual event falls inside the horizon
    let counts = match epoch {
        ObservationEpoch::PotPreArrival | ObservationEpoch::PotPostArrival => pairs
            .filter(|(c, _)| c.arrival <= t)
            .map(|(_, (a, _))| path[a.marker.slot as usize])
            .collect(),
        ObservationEpoch::PotPreDeparture | ObservationEpoch::PotPostDeparture => pairs
            .filter(|(c, _)| c.departure <= t)
            .map(|(_, (_, d))| path[d.marker.slot as usize])
            .collect(),
        _ => return None,
    };
    Some(counts)
}

/// Sample-path averages over the window `(warmup, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueEstimates {
    pub lambda: f64,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "W")]
    pub w: f64,
    #[serde(rename = "L_obs")]
    pub l_obs: f64,
    #[serde(rename = "W_obs")]
    pub w_obs: f64,
    pub pi: Vec<f64>,
    pub pi_obs: Vec<f64>,
    pub horizon: u64,
    pub warmup: u64,
    pub rule: SchedulingRule,
    pub epoch: ObservationEpoch,
}

/// Normalized dense histogram of `path[warmup+1..=T]`.
pub fn histogram(path: &[u32], warmup: u64) -> Vec<f64> {
    let window = &path[warmup as usize + 1..];
    let max = window.iter().copied().max().unwrap_or(0) as usize;
    let mut counts = vec![0u64; max + 1];
    for &n in window {
        counts[n as usize] += 1;
    }
    let total = window.len() as f64;
    counts.into_iter().map(|c| c as f64 / total).collect()
}

fn window_mean(path: &[u32], warmup: u64) -> f64 {
    let window = &path[warmup as usize + 1..];
    window.iter().map(|&n| u64::from(n)).sum::<u64>() as f64 / window.len() as f64
}

pub(crate) fn check_window(trace: &Trace, warmup: u64) -> Result<()> {
    if warmup >= trace.horizon() {
        return Err(Error::InvalidParameter(format!(
            "warmup {warmup} must be below the horizon {}",
            trace.horizon()
        )));
    }
    Ok(())
}

/// Arrival rate over the window: arrivals in `(warmup, T]` per slot.
pub fn window_rate(trace: &Trace, warmup: u64) -> f64 {
    let n = trace.arrivals_by(trace.horizon()) - trace.arrivals_by(warmup);
    n as f64 / (trace.horizon() - warmup) as f64
}

/// Indices of customers that arrive after `warmup` and depart by `T`.
pub(crate) fn completed(trace: &Trace, warmup: u64) -> impl Iterator<Item = usize> + '_ {
    let t = trace.horizon();
    trace
        .customers()
        .iter()
        .enumerate()
        .filter(move |(_, c)| c.arrival > warmup && c.departure <= t)
        .map(|(i, _)| i)
}

pub fn time_averages(
    trace: &Trace,
    rule: SchedulingRule,
    epoch: ObservationEpoch,
    warmup: u64,
) -> Result<QueueEstimates> {
    check_window(trace, warmup)?;
    let done: Vec<usize> = completed(trace, warmup).collect();
    if done.is_empty() {
        return Err(Error::InsufficientData(
            "no customer both arrives and departs inside the window".into(),
        ));
    }
    let actual = occupancy_path(trace);
    let observed = ObservedPath::new(trace, View::observed(rule, epoch)).occupancy;
    let waits_obs = observed_waits(trace, rule, epoch);
    let c = trace.customers();
    let n = done.len() as f64;
    Ok(QueueEstimates {
        lambda: window_rate(trace, warmup),
        l: window_mean(&actual, warmup),
        w: done.iter().map(|&i| c[i].wait()).sum::<u64>() as f64 / n,
        l_obs: window_mean(&observed, warmup),
        w_obs: done.iter().map(|&i| waits_obs[i]).sum::<u64>() as f64 / n,
        pi: histogram(&actual, warmup),
        pi_obs: histogram(&observed, warmup),
        horizon: trace.horizon(),
        warmup,
        rule,
        epoch,
    })
}

/// Time-average occupancy under an indicator convention.
pub fn mean_occupancy(trace: &Trace, conv: IndicatorConvention, warmup: u64) -> Result<f64> {
    check_window(trace, warmup)?;
    Ok(window_mean(&occupancy_path_with(trace, conv), warmup))
}

/// Busy-cycle start and end detector instants on an occupancy path:
/// `a(j) = 1{P(j-1) = 0, P(j) >= 1}` and `d(j) = 1{P(j-1) >= 1, P(j) = 0}`.
pub(crate) fn detector_instants(path: &[u32]) -> (Vec<u64>, Vec<u64>) {
    let mut starts = Vec::new();
    let mut ends = Vec::new();
    for j in 1..path.len() {
        match (path[j - 1], path[j]) {
            (0, n) if n >= 1 => starts.push(j as u64),
            (m, 0) if m >= 1 => ends.push(j as u64),
            _ => {}
        }
    }
    (starts, ends)
}

/// State-visit counts for one complete busy cycle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleVisits {
    /// Slot before the cycle is first seen; on the actual path, the arrival slot `U_k`.
    pub boundary: u64,
    /// `C_k(n)` indexed by `n`.
    pub counts: Vec<u64>,
}

impl CycleVisits {
    pub fn length(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CycleVisitCounts {
    pub cycles: Vec<CycleVisits>,
}

/// `C_k(n)` over `j` in `(U_k, U_{k+1}]` for every complete cycle.
pub fn cycle_visit_counts(trace: &Trace, view: View) -> CycleVisitCounts {
    let path = ObservedPath::new(trace, view).occupancy;
    let (starts, _) = detector_instants(&path);
    let cycles = starts
        .windows(2)
        .map(|w| {
            let slice = &path[w[0] as usize..w[1] as usize];
            let max = slice.iter().copied().max().unwrap_or(0) as usize;
            let mut counts = vec![0u64; max + 1];
            for &n in slice {
                counts[n as usize] += 1;
            }
            CycleVisits {
                boundary: w[0] - 1,
                counts,
            }
        })
        .collect();
    CycleVisitCounts { cycles }
}
