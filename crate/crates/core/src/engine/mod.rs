//! Slot-level simulation of the actual sample path.
//!
//! All randomness comes from ChaCha8 seeded with `seed_from_u64(seed)`, with
//! one stream per source: arrivals, services and server choice. Sampling is
//! always by inverse CDF, so a `(model, seed, horizon)` triple fixes the path.

mod arrivals;
mod discipline;
mod dist;
mod trace;
mod traceio;

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use arrivals::{gen_arrivals, ArrivalSpec, SourceLaw};
pub use discipline::{run_discipline, Discipline, ServerChoice};
pub use dist::DiscreteDist;
pub use trace::{shift_trace, Customer, ShiftedTrace, Trace};
pub use traceio::{read_trace_csv, write_trace_csv, TraceRows};

use crate::error::{Error, Result};

const SERVICE_STREAM: u64 = 1;

pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `n` independent service requirements, each at least one slot.
pub fn sample_services(dist: &DiscreteDist, seed: u64, n: usize) -> Result<Vec<u64>> {
    if dist.support_min() < 1 {
        return Err(Error::InvalidDistribution(
            "service times must be at least one slot".into(),
        ));
    }
    let mut rng = stream_rng(seed, SERVICE_STREAM);
    Ok((0..n).map(|_| dist.sample(&mut rng)).collect())
}

/// Finite-source FIFO single server, coupled slot by slot.
///
/// The population seen at slot `τ` is `n = #{k : A_k < τ <= D_k}`; arrivals
/// at `τ` are drawn from the `N - n` sources outside the system.
pub fn simulate_finite_population(
    sources: u32,
    alpha: f64,
    law: SourceLaw,
    service: &DiscreteDist,
    seed: u64,
    horizon: u64,
) -> Result<Trace> {
    ArrivalSpec::FinitePopulation { sources, alpha, law }.validate()?;
    if service.support_min() < 1 {
        return Err(Error::InvalidDistribution(
            "service times must be at least one slot".into(),
        ));
    }
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be at least 1".into()));
    }
    let mut arr_rng = stream_rng(seed, arrivals::ARRIVAL_STREAM);
    let mut svc_rng = stream_rng(seed, SERVICE_STREAM);
    let mut in_system: VecDeque<u64> = VecDeque::new();
    let mut last_departure = 0;
    let mut customers = Vec::new();
    for tau in 1..=horizon {
        while in_system.front().is_some_and(|d| *d < tau) {
            in_system.pop_front();
        }
        let idle = u64::from(sources) - in_system.len() as u64;
        let batch = match law {
            SourceLaw::Independent => (0..idle).filter(|_| arr_rng.random::<f64>() < alpha).count(),
            _ => usize::from(arr_rng.random::<f64>() < law.slot_probability(idle, alpha)),
        };
        for _ in 0..batch {
            let s = service.sample(&mut svc_rng);
            let start = tau.max(last_departure);
            last_departure = start + s;
            in_system.push_back(last_departure);
            customers.push(Customer {
                arrival: tau,
                service: s,
                start,
                departure: last_departure,
                server: Some(0),
            });
        }
    }
    Trace::new(customers, horizon)
}

/// Arrival process, service law and discipline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub arrivals: ArrivalSpec,
    pub service: DiscreteDist,
    pub discipline: Discipline,
}

impl Model {
    /// Bernoulli(α) arrivals, geometric(β) service, one FIFO server.
    pub fn bgeom1(alpha: f64, beta: f64) -> Result<Self> {
        Ok(Model {
            arrivals: ArrivalSpec::Bernoulli { alpha },
            service: DiscreteDist::geometric(beta)?,
            discipline: Discipline::Fifo1,
        })
    }

    /// Offered load per server, when the arrival rate is known.
    pub fn load(&self) -> Option<f64> {
        let rate = match &self.arrivals {
            ArrivalSpec::FinitePopulation { .. } => return None,
            other => other.rate()?,
        };
        let servers = self.discipline.servers()?;
        Some(rate * self.service.mean() / servers as f64)
    }

    pub fn simulate(&self, seed: u64, horizon: u64) -> Result<Trace> {
        if let ArrivalSpec::FinitePopulation { sources, alpha, law } = &self.arrivals {
            if self.discipline != Discipline::Fifo1 {
                return Err(Error::InvalidParameter(
                    "finite-population arrivals are simulated with a single FIFO server".into(),
                ));
            }
            return simulate_finite_population(*sources, *alpha, *law, &self.service, seed, horizon);
        }
        let arrivals = gen_arrivals(&self.arrivals, seed, horizon)?;
        let services = match self.discipline {
            Discipline::External { .. } => Vec::new(),
            _ => sample_services(&self.service, seed, arrivals.len())?,
        };
        run_discipline(&arrivals, &services, &self.discipline, horizon, seed)
    }
}
