use rand::Rng;
use serde::{Deserialize, Serialize};

use super::stream_rng;
use super::trace::{Customer, Trace};
use crate::error::{Error, Result};

pub(crate) const SERVER_STREAM: u64 = 2;

/// How a FIFO multi-server system picks among idle servers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ServerChoice {
    #[default]
    LowestIndex,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Discipline {
    Fifo1,
    FifoC {
        servers: usize,
        #[serde(default)]
        choice: ServerChoice,
    },
    InfiniteServer,
    /// Departure slots supplied from outside, one per arrival.
    External { departures: Vec<u64> },
}

impl Discipline {
    /// Number of servers, `None` for an infinite-server or external system.
    pub fn servers(&self) -> Option<usize> {
        match self {
            Discipline::Fifo1 => Some(1),
            Discipline::FifoC { servers, .. } => Some(*servers),
            _ => None,
        }
    }
}

/// Builds the actual sample path from arrival slots and service requirements.
///
/// `seed` only matters for [`ServerChoice::Random`].
pub fn run_discipline(
    arrivals: &[u64],
    services: &[u64],
    discipline: &Discipline,
    horizon: u64,
    seed: u64,
) -> Result<Trace> {
    let external = matches!(discipline, Discipline::External { .. });
    if !(external && services.is_empty()) && services.len() != arrivals.len() {
        return Err(Error::InvalidParameter(format!(
            "{} arrivals but {} service times",
            arrivals.len(),
            services.len()
        )));
    }
    let customers = match discipline {
        Discipline::Fifo1 => fifo_servers(arrivals, services, 1, ServerChoice::LowestIndex, seed)?,
        Discipline::FifoC { servers, choice } => {
            fifo_servers(arrivals, services, *servers, *choice, seed)?
        }
        Discipline::InfiniteServer => arrivals
            .iter()
            .zip(services)
            .map(|(&a, &s)| Customer {
                arrival: a,
                service: s,
                start: a,
                departure: a + s,
                server: None,
            })
            .collect(),
        Discipline::External { departures } => {
            if departures.len() != arrivals.len() {
                return Err(Error::InvalidParameter(format!(
                    "{} arrivals but {} departures",
                    arrivals.len(),
                    departures.len()
                )));
            }
            arrivals
                .iter()
                .zip(departures)
                .enumerate()
                .map(|(i, (&a, &d))| {
                    let s = services.get(i).copied().unwrap_or(d.saturating_sub(a));
                    Customer {
                        arrival: a,
                        service: s,
                        start: d.saturating_sub(s),
                        departure: d,
                        server: None,
                    }
                })
                .collect()
        }
    };
    Trace::new(customers, horizon)
}

fn fifo_servers(
    arrivals: &[u64],
    services: &[u64],
    servers: usize,
    choice: ServerChoice,
    seed: u64,
) -> Result<Vec<Customer>> {
    if servers == 0 {
        return Err(Error::InvalidParameter("need at least one server".into()));
    }
    let mut rng = stream_rng(seed, SERVER_STREAM);
    let mut free_at = vec![0u64; servers];
    let mut idle = Vec::with_capacity(servers);
    let mut out = Vec::with_capacity(arrivals.len());
    for (&a, &s) in arrivals.iter().zip(services) {
        if s == 0 {
            return Err(Error::InvalidParameter("service times must be at least one slot".into()));
        }
        // earliest-free server, ties to the lowest index
        let mut pick = (0..servers).min_by_key(|&i| (free_at[i], i)).unwrap();
        if choice == ServerChoice::Random && free_at[pick] <= a {
            idle.clear();
            idle.extend((0..servers).filter(|&i| free_at[i] <= a));
            pick = idle[rng.random_range(0..idle.len())];
        }
        let start = a.max(free_at[pick]);
        let departure = start + s;
        free_at[pick] = departure;
        out.push(Customer {
            arrival: a,
            service: s,
            start,
            departure,
            server: Some(pick),
        });
    }
    Ok(out)
}
