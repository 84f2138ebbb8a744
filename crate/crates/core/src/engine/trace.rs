use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timebase::{shift_arrival, shift_departure, EventPoint, SchedulingRule};

/// One customer on the actual sample path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Customer {
    /// Arrival slot `A_k`.
    pub arrival: u64,
    /// Service requirement `S_k` in slots.
    pub service: u64,
    /// Service start `A''_k`.
    pub start: u64,
    /// Departure slot `D_k`.
    pub departure: u64,
    /// Server index for finite-server disciplines.
    pub server: Option<usize>,
}

impl Customer {
    /// Time in system, `D_k - A_k`.
    pub fn wait(&self) -> u64 {
        self.departure - self.arrival
    }

    /// Time in queue, `A''_k - A_k`.
    pub fn queue_wait(&self) -> u64 {
        self.start - self.arrival
    }
}

/// Immutable sample path over slots `1..=horizon`, starting empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    customers: Vec<Customer>,
    horizon: u64,
}

impl Trace {
    /// Validates ordering and per-customer consistency.
    pub fn new(customers: Vec<Customer>, horizon: u64) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidTrace("horizon must be at least one slot".into()));
        }
        let mut prev = 0;
        for (i, c) in customers.iter().enumerate() {
            let k = i + 1;
            if c.arrival == 0 {
                return Err(Error::InvalidTrace(format!("customer {k} arrives at slot 0")));
            }
            if c.arrival < prev {
                return Err(Error::InvalidTrace(format!("arrivals decrease at customer {k}")));
            }
            if c.arrival > horizon {
                return Err(Error::InvalidTrace(format!(
                    "customer {k} arrives after the horizon {horizon}"
                )));
            }
            if c.departure <= c.arrival {
                return Err(Error::InvalidTrace(format!(
                    "customer {k} departs at {} but arrived at {}",
                    c.departure, c.arrival
                )));
            }
            if c.service == 0 || c.start < c.arrival || c.start + c.service != c.departure {
                return Err(Error::InvalidTrace(format!(
                    "customer {k} has inconsistent start {} / service {} / departure {}",
                    c.start, c.service, c.departure
                )));
            }
            prev = c.arrival;
        }
        Ok(Trace { customers, horizon })
    }

    pub fn empty(horizon: u64) -> Result<Self> {
        Trace::new(Vec::new(), horizon)
    }

    pub fn customers(&self) -> &[Customer] {
        &self.customers
    }

    pub fn len(&self) -> usize {
        self.customers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.customers.is_empty()
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    /// `A(τ)`: customers with `A_k <= τ`.
    pub fn arrivals_by(&self, tau: u64) -> usize {
        self.customers.partition_point(|c| c.arrival <= tau)
    }

    /// `D(τ)`: customers with `D_k <= τ`.
    pub fn departures_by(&self, tau: u64) -> usize {
        self.customers.iter().filter(|c| c.departure <= tau).count()
    }

    /// True when customers start service one at a time in arrival order
    /// without overlapping, i.e. the path of a FIFO single server.
    pub fn is_single_server_fifo(&self) -> bool {
        self.customers
            .windows(2)
            .all(|w| w[1].start >= w[0].departure)
    }

    /// Rule-shifted arrival and departure instants.
    pub fn shifted(&self, rule: SchedulingRule) -> ShiftedTrace {
        shift_trace(self, rule)
    }
}

/// `(A'_k, D'_k)` for every customer under one scheduling rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShiftedTrace {
    pub rule: SchedulingRule,
    pub instants: Vec<(EventPoint, EventPoint)>,
}

pub fn shift_trace(trace: &Trace, rule: SchedulingRule) -> ShiftedTrace {
    let instants = trace
        .customers()
        .iter()
        .map(|c| {
            let d = shift_departure(rule, c.departure)
                .expect("validated traces never depart at slot 0");
            (shift_arrival(rule, c.arrival), d)
        })
        .collect();
    ShiftedTrace { rule, instants }
}
