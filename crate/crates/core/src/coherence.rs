//! Coherence classification of rule and epoch combinations.
//!
//! A combination is coherent when every customer's observed wait equals its
//! actual wait, sub-coherent when it is always one slot short and
//! super-coherent when it is always one slot long. Shift maps and epoch
//! points commute with translation by whole slots, so one probe customer
//! settles each cell; [`verify_on_trace`] confirms it customer by customer.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::engine::Trace;
use crate::error::{Error, Result};
use crate::observer::{observed_wait, presence_range};
use crate::timebase::{ObservationEpoch, SchedulingRule};

const PROBE_ARRIVAL: u64 = 10;
const PROBE_DEPARTURE: u64 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoherenceClass {
    Coherent,
    SubCoherent,
    SuperCoherent,
}

impl CoherenceClass {
    /// Observed minus actual wait.
    pub fn offset(self) -> i64 {
        match self {
            CoherenceClass::Coherent => 0,
            CoherenceClass::SubCoherent => -1,
            CoherenceClass::SuperCoherent => 1,
        }
    }

    pub fn from_offset(offset: i64) -> Option<Self> {
        match offset {
            0 => Some(CoherenceClass::Coherent),
            -1 => Some(CoherenceClass::SubCoherent),
            1 => Some(CoherenceClass::SuperCoherent),
            _ => None,
        }
    }

    pub fn short(self) -> &'static str {
        match self {
            CoherenceClass::Coherent => "coh",
            CoherenceClass::SubCoherent => "sub",
            CoherenceClass::SuperCoherent => "super",
        }
    }

    fn from_short(s: &str) -> Option<Self> {
        match s {
            "coh" => Some(CoherenceClass::Coherent),
            "sub" => Some(CoherenceClass::SubCoherent),
            "super" => Some(CoherenceClass::SuperCoherent),
            _ => None,
        }
    }
}

impl std::str::FromStr for CoherenceClass {
    type Err = Error;

    /// Accepts `coh`/`sub`/`super` and the long names.
    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        let short = match norm.as_str() {
            "coherent" => "coh",
            "sub-coherent" => "sub",
            "super-coherent" => "super",
            other => other,
        };
        CoherenceClass::from_short(short).ok_or_else(|| Error::Parse(format!("unknown class `{s}`")))
    }
}

impl fmt::Display for CoherenceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short())
    }
}

pub fn classify(rule: SchedulingRule, epoch: ObservationEpoch) -> Result<CoherenceClass> {
    let observed = observed_wait(rule, epoch, PROBE_ARRIVAL, PROBE_DEPARTURE)? as i64;
    let offset = observed - (PROBE_DEPARTURE - PROBE_ARRIVAL) as i64;
    CoherenceClass::from_offset(offset).ok_or(Error::OffsetOutOfRange { rule, epoch, offset })
}

/// Short column headings used by the text tables.
pub const EPOCH_HEADINGS: [&str; 6] = ["random", "outside", "pre-arr", "post-arr", "pre-dep", "post-dep"];

/// One JSON row of the classification table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassRow {
    pub rule: SchedulingRule,
    pub epoch: ObservationEpoch,
    pub class: CoherenceClass,
}

/// Rule-by-epoch grid of classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassificationTable {
    cells: [[CoherenceClass; 6]; 5],
}

impl ClassificationTable {
    pub fn compute() -> Result<Self> {
        let mut cells = [[CoherenceClass::Coherent; 6]; 5];
        for rule in SchedulingRule::ALL {
            for epoch in ObservationEpoch::ALL {
                cells[rule.index()][epoch.index()] = classify(rule, epoch)?;
            }
        }
        Ok(ClassificationTable { cells })
    }

    pub fn get(&self, rule: SchedulingRule, epoch: ObservationEpoch) -> CoherenceClass {
        self.cells[rule.index()][epoch.index()]
    }

    pub fn count(&self, class: CoherenceClass) -> usize {
        self.cells.iter().flatten().filter(|c| **c == class).count()
    }

    pub fn rows(&self) -> Vec<ClassRow> {
        SchedulingRule::ALL
            .into_iter()
            .flat_map(|rule| {
                ObservationEpoch::ALL.into_iter().map(move |epoch| (rule, epoch))
            })
            .map(|(rule, epoch)| ClassRow {
                rule,
                epoch,
                class: self.get(rule, epoch),
            })
            .collect()
    }

    pub fn render_text(&self) -> String {
        let mut out = format!("{:<8}", "rule");
        for h in EPOCH_HEADINGS {
            out.push_str(&format!(" {h:<9}"));
        }
        out = out.trim_end().to_string();
        out.push('\n');
        for rule in SchedulingRule::ALL {
            let mut line = format!("{:<8}", rule.label());
            for epoch in ObservationEpoch::ALL {
                line.push_str(&format!(" {:<9}", self.get(rule, epoch).short()));
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
        out
    }

    /// Parses the text layout of [`render_text`](Self::render_text). Lines
    /// starting with `#` and the heading line are skipped.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut cells = [[None; 6]; 5];
        for line in data_lines(text) {
            let mut tokens = line.split_whitespace();
            let rule: SchedulingRule = tokens.next().unwrap_or_default().parse()?;
            let classes: Vec<&str> = tokens.collect();
            if classes.len() != 6 {
                return Err(Error::Parse(format!("row `{line}` needs six classes")));
            }
            for (e, tok) in classes.iter().enumerate() {
                let class = CoherenceClass::from_short(tok)
                    .ok_or_else(|| Error::Parse(format!("unknown class `{tok}`")))?;
                cells[rule.index()][e] = Some(class);
            }
        }
        let mut out = [[CoherenceClass::Coherent; 6]; 5];
        for (r, row) in cells.iter().enumerate() {
            for (e, cell) in row.iter().enumerate() {
                out[r][e] = cell.ok_or_else(|| {
                    Error::Parse(format!("missing cell for {}", SchedulingRule::ALL[r]))
                })?;
            }
        }
        Ok(ClassificationTable { cells: out })
    }

    /// Human-readable cell differences against `expected`.
    pub fn diff(&self, expected: &Self) -> Vec<String> {
        self.rows()
            .into_iter()
            .filter(|row| expected.get(row.rule, row.epoch) != row.class)
            .map(|row| {
                format!(
                    "{} / {}: computed {}, expected {}",
                    row.rule,
                    row.epoch,
                    row.class,
                    expected.get(row.rule, row.epoch)
                )
            })
            .collect()
    }
}

fn data_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#') && !l.starts_with("rule"))
}

/// Whether counting at slot edges and at slot centers recovers the actual wait.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountingRow {
    pub rule: SchedulingRule,
    pub edges: bool,
    pub centers: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountingTable {
    pub rows: Vec<CountingRow>,
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

impl CountingTable {
    pub fn from_classification(table: &ClassificationTable) -> Self {
        let rows = SchedulingRule::ALL
            .into_iter()
            .map(|rule| CountingRow {
                rule,
                edges: table.get(rule, ObservationEpoch::RandomObserver) == CoherenceClass::Coherent,
                centers: table.get(rule, ObservationEpoch::OutsideObserver)
                    == CoherenceClass::Coherent,
            })
            .collect();
        CountingTable { rows }
    }

    pub fn render_text(&self) -> String {
        let mut out = format!("{:<8} {:<6} {}\n", "rule", "edges", "centers");
        for r in &self.rows {
            out.push_str(&format!("{:<8} {:<6} {}\n", r.rule.label(), yes_no(r.edges), yes_no(r.centers)));
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let parse_bool = |t: &str| match t {
            "yes" => Ok(true),
            "no" => Ok(false),
            _ => Err(Error::Parse(format!("expected yes/no, got `{t}`"))),
        };
        let rows = data_lines(text)
            .map(|line| {
                let t: Vec<&str> = line.split_whitespace().collect();
                if t.len() != 3 {
                    return Err(Error::Parse(format!("row `{line}` needs rule, edges, centers")));
                }
                Ok(CountingRow {
                    rule: t[0].parse()?,
                    edges: parse_bool(t[1])?,
                    centers: parse_bool(t[2])?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(CountingTable { rows })
    }

    pub fn diff(&self, expected: &Self) -> Vec<String> {
        let mut out = Vec::new();
        for want in &expected.rows {
            match self.rows.iter().find(|r| r.rule == want.rule) {
                Some(got) if got == want => {}
                Some(got) => out.push(format!(
                    "{}: computed edges={} centers={}, expected edges={} centers={}",
                    want.rule,
                    yes_no(got.edges),
                    yes_no(got.centers),
                    yes_no(want.edges),
                    yes_no(want.centers)
                )),
                None => out.push(format!("{}: missing row", want.rule)),
            }
        }
        out
    }
}

/// Per-customer offsets `W° - W` against the classified offset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OffsetReport {
    pub rule: SchedulingRule,
    pub epoch: ObservationEpoch,
    pub expected: i64,
    /// Offset value to number of customers.
    pub histogram: BTreeMap<i64, usize>,
    pub pass: bool,
}

pub fn verify_on_trace(
    trace: &Trace,
    rule: SchedulingRule,
    epoch: ObservationEpoch,
) -> Result<OffsetReport> {
    let expected = classify(rule, epoch)?.offset();
    let mut histogram = BTreeMap::new();
    for c in trace.customers() {
        let off = observed_wait(rule, epoch, c.arrival, c.departure)? as i64 - c.wait() as i64;
        *histogram.entry(off).or_insert(0) += 1;
    }
    let pass = histogram.keys().all(|k| *k == expected);
    Ok(OffsetReport {
        rule,
        epoch,
        expected,
        histogram,
        pass,
    })
}

/// Observed length of each actual busy period: the number of slots at which
/// at least one of its customers is seen.
pub fn observed_busy_spans(trace: &Trace, rule: SchedulingRule, epoch: ObservationEpoch) -> Vec<u64> {
    let mut spans = Vec::new();
    let mut last_departure = 0;
    let mut current: Option<(u64, u64, u64)> = None; // (count, covered_lo, covered_hi)
    for c in trace.customers() {
        let starts_cycle = c.arrival > last_departure;
        last_departure = last_departure.max(c.departure);
        if starts_cycle {
            if let Some((n, _, _)) = current.take() {
                spans.push(n);
            }
            current = Some((0, 0, 0));
        }
        let Some((lo, hi)) = presence_range(rule, epoch, c.arrival, c.departure) else {
            continue;
        };
        let cur = current.as_mut().expect("cycle opened above");
        // ranges arrive with nondecreasing lower ends
        if cur.0 == 0 {
            *cur = (hi - lo + 1, lo, hi);
        } else if hi > cur.2 {
            let from = lo.max(cur.2 + 1);
            cur.0 += hi + 1 - from;
            cur.2 = hi;
            cur.1 = cur.1.min(lo);
        }
    }
    if let Some((n, _, _)) = current {
        spans.push(n);
    }
    spans
}
