//! Busy cycles on sample paths and their long-run means.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::engine::{DiscreteDist, Trace};
use crate::error::{Error, Result};
use crate::observer::{check_window, detector_instants, ObservedPath, View};

/// One complete busy cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cycle {
    pub k: usize,
    /// Arrival slot that finds the system empty.
    #[serde(rename = "U")]
    pub u: u64,
    /// Slot at which the system empties.
    #[serde(rename = "V")]
    pub v: u64,
    #[serde(rename = "C")]
    pub c: u64,
    #[serde(rename = "B")]
    pub b: u64,
    #[serde(rename = "I")]
    pub i: u64,
    /// Customers arriving during the cycle.
    #[serde(rename = "E")]
    pub e: u64,
}

/// Mean idle period, cycle, busy period and customers per cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BusyMeans {
    #[serde(rename = "I")]
    pub i: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "E")]
    pub e: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleStats {
    pub cycles: Vec<Cycle>,
}

impl CycleStats {
    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }

    /// Long-run averages over the detected cycles, `None` without any.
    pub fn means(&self) -> Option<BusyMeans> {
        if self.cycles.is_empty() {
            return None;
        }
        let n = self.cycles.len() as f64;
        let avg = |f: fn(&Cycle) -> u64| self.cycles.iter().map(f).sum::<u64>() as f64 / n;
        Some(BusyMeans {
            i: avg(|c| c.i),
            c: avg(|c| c.c),
            b: avg(|c| c.b),
            e: avg(|c| c.e),
        })
    }

    /// Writes `k,U,V,C,B,I,E` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for c in &self.cycles {
            w.serialize(c)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Complete busy cycles on the actual path.
pub fn detect_cycles(trace: &Trace) -> CycleStats {
    detect_cycles_in(trace, View::Actual, 0)
}

/// Complete busy cycles read off the chosen occupancy process, keeping
/// cycles that start after `warmup`.
pub fn detect_cycles_in(trace: &Trace, view: View, warmup: u64) -> CycleStats {
    let path = ObservedPath::new(trace, view);
    let (starts, ends) = detector_instants(&path.occupancy);
    let mut cycles = Vec::new();
    let mut e_idx = 0;
    for w in starts.windows(2) {
        let (u, next) = (w[0] - 1, w[1] - 1);
        while e_idx < ends.len() && ends[e_idx] <= w[0] {
            e_idx += 1;
        }
        let v = ends[e_idx] - 1;
        if u < warmup {
            continue;
        }
        let seen = &path.arrivals_seen;
        cycles.push(Cycle {
            k: cycles.len() + 1,
            u,
            v,
            c: next - u,
            b: v - u,
            i: next - v,
            e: seen[next as usize] - seen[u as usize],
        });
    }
    CycleStats { cycles }
}

/// Time-in-state fractions and per-state arrival rates on the actual path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateRates {
    pub pi: Vec<f64>,
    /// `α(n)`: arrivals in state `n` per slot spent in state `n`; absent for unvisited states.
    pub alpha_n: BTreeMap<usize, f64>,
    /// Overall arrival rate over the window.
    pub alpha: f64,
    /// Fraction of arrivals that find the system empty.
    pub pi_arrival_empty: Option<f64>,
}

pub fn state_rates(trace: &Trace, warmup: u64) -> Result<StateRates> {
    check_window(trace, warmup)?;
    let path = ObservedPath::new(trace, View::Actual).occupancy;
    let window = &path[warmup as usize + 1..];
    let max = window.iter().copied().max().unwrap_or(0) as usize;
    let mut time = vec![0u64; max + 1];
    for &n in window {
        time[n as usize] += 1;
    }
    let mut arrivals = vec![0u64; max + 1];
    let mut total = 0u64;
    for c in trace.customers().iter().filter(|c| c.arrival > warmup) {
        arrivals[path[c.arrival as usize] as usize] += 1;
        total += 1;
    }
    let span = window.len() as f64;
    let alpha_n = time
        .iter()
        .zip(&arrivals)
        .enumerate()
        .filter(|(_, (t, _))| **t > 0)
        .map(|(n, (t, a))| (n, *a as f64 / *t as f64))
        .collect();
    Ok(StateRates {
        pi: time.iter().map(|t| *t as f64 / span).collect(),
        alpha_n,
        alpha: total as f64 / span,
        pi_arrival_empty: (total > 0).then(|| arrivals[0] as f64 / total as f64),
    })
}

fn positive(name: &str, x: f64) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {x}")))
    }
}

fn probability(name: &str, x: f64) -> Result<f64> {
    if x > 0.0 && x < 1.0 {
        Ok(x)
    } else {
        Err(Error::InvalidParameter(format!("{name} must lie in (0, 1), got {x}")))
    }
}

/// Cycle means from the empty-state probability and arrival rates:
/// `I = 1/α(0)`, `C = 1/(α(0)π(0))`, `B = (1-π(0))/(α(0)π(0))`, `E = α/(α(0)π(0))`.
pub fn cycle_means(pi0: f64, alpha0: f64, alpha: f64) -> Result<BusyMeans> {
    probability("π(0)", pi0)?;
    positive("α(0)", alpha0)?;
    let rate = alpha0 * pi0;
    Ok(BusyMeans {
        i: 1.0 / alpha0,
        c: 1.0 / rate,
        b: (1.0 - pi0) / rate,
        e: alpha / rate,
    })
}

/// Root of `σ = F*(σβ + 1 - β)` in `(0, 1)` and `σ* = σ / (σβ + 1 - β)`.
pub fn sigma_solve(interarrival: &DiscreteDist, beta: f64) -> Result<(f64, f64)> {
    probability("β", beta)?;
    if interarrival.support_min() < 1 {
        return Err(Error::InvalidDistribution("inter-arrival times must be at least 1".into()));
    }
    let f = |s: f64| interarrival.pgf(s * beta + 1.0 - beta) - s;
    let mut lo = 0.0;
    if f(lo) <= 0.0 {
        return Err(Error::NoBracket("F*(1 - β) is not positive".into()));
    }
    let mut hi = None;
    for k in 1..=60 {
        let x = 1.0 - 0.5f64.powi(k);
        if f(x) < 0.0 {
            hi = Some(x);
            break;
        }
        lo = x;
    }
    let mut hi = hi.ok_or_else(|| {
        Error::NoBracket("no sign change below 1; the queue is not stable".into())
    })?;
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let sigma = 0.5 * (lo + hi);
    Ok((sigma, sigma / (sigma * beta + 1.0 - beta)))
}

/// G/Geo/1 cycle means from `σ*`.
pub fn ggeo1_busy(alpha: f64, sigma_star: f64, rho: f64) -> Result<BusyMeans> {
    positive("α", alpha)?;
    probability("σ*", sigma_star)?;
    let c = 1.0 / (alpha * (1.0 - sigma_star));
    Ok(BusyMeans {
        i: (1.0 - rho) * c,
        c,
        b: rho * c,
        e: 1.0 / (1.0 - sigma_star),
    })
}

/// Finite-source cycle means from `π(0)` and `L`.
pub fn finite_pop_busy(sources: u32, alpha: f64, pi0: f64, l: f64) -> Result<BusyMeans> {
    if sources == 0 {
        return Err(Error::InvalidParameter("population must be at least 1".into()));
    }
    positive("α", alpha)?;
    probability("π(0)", pi0)?;
    let n = f64::from(sources);
    let rate = n * alpha * pi0;
    Ok(BusyMeans {
        i: 1.0 / (n * alpha),
        c: 1.0 / rate,
        b: (1.0 - pi0) / rate,
        e: (n - l) / (n * pi0),
    })
}
