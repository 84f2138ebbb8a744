use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::trace::{Customer, Trace};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    k: usize,
    #[serde(rename = "A")]
    arrival: u64,
    #[serde(rename = "S")]
    service: u64,
    #[serde(rename = "Astart")]
    start: u64,
    #[serde(rename = "D")]
    departure: u64,
}

/// Contents of an imported trace file.
#[derive(Debug, Clone, PartialEq)]
pub enum TraceRows {
    /// `(A, S)` pairs; a discipline still has to run.
    Inputs(Vec<(u64, u64)>),
    /// A complete path.
    Full(Trace),
}

/// Writes `k,A,S,Astart,D` with `k` counted from 1.
pub fn write_trace_csv<W: Write>(trace: &Trace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (i, c) in trace.customers().iter().enumerate() {
        w.serialize(Row {
            k: i + 1,
            arrival: c.arrival,
            service: c.service,
            start: c.start,
            departure: c.departure,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Reads either `A,S` rows or full `k,A,S,Astart,D` rows.
///
/// A full file's horizon is the largest of its arrival and departure slots
/// unless `horizon` is given.
pub fn read_trace_csv<R: Read>(input: R, horizon: Option<u64>) -> Result<TraceRows> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = r.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (a, s) = match (col("A"), col("S")) {
        (Some(a), Some(s)) => (a, s),
        _ => return Err(Error::Parse("trace header needs columns A and S".into())),
    };
    let full = match (col("Astart"), col("D")) {
        (Some(st), Some(d)) => Some((st, d)),
        (None, None) => None,
        _ => return Err(Error::Parse("full trace rows need both Astart and D".into())),
    };
    let mut inputs = Vec::new();
    let mut customers = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let field = |i: usize| -> Result<u64> {
            rec.get(i)
                .unwrap_or("")
                .parse()
                .map_err(|_| Error::Parse(format!("bad integer on data row {}", line + 1)))
        };
        match full {
            None => inputs.push((field(a)?, field(s)?)),
            Some((st, d)) => customers.push(Customer {
                arrival: field(a)?,
                service: field(s)?,
                start: field(st)?,
                departure: field(d)?,
                server: None,
            }),
        }
    }
    if full.is_none() {
        return Ok(TraceRows::Inputs(inputs));
    }
    let horizon = horizon.unwrap_or_else(|| {
        customers
            .iter()
            .map(|c| c.departure.max(c.arrival))
            .max()
            .unwrap_or(1)
    });
    Ok(TraceRows::Full(Trace::new(customers, horizon)?))
}
