//! Discrete-time queueing on an exact micro-time lattice.
//!
//! Customers arrive and depart at integer slot edges; scheduling rules move
//! those events infinitesimally around the edge and observation epochs pick
//! where occupancy is sampled. The crate simulates sample paths, classifies
//! every rule and epoch pair by how observed waits relate to actual ones,
//! and checks sample-path laws against closed-form results.

pub mod birthdeath;
pub mod busy;
pub mod coherence;
pub mod engine;
pub mod error;
pub mod littles;
pub mod observer;
pub mod timebase;

pub use coherence::{classify, ClassificationTable, CoherenceClass};
pub use engine::{DiscreteDist, Model, Trace};
pub use error::{Error, Result};
pub use timebase::{MicroTime, ObservationEpoch, Phase, SchedulingRule};
