//! Exact micro-time around integer slot edges.
//!
//! Every slot edge `τ` carries six marker points, ordered
//!
//! ```text
//! τ-0.5 < τ-- < τ- < τ < τ+ < τ++ < (τ+1)-0.5
//! ```
//!
//! Observation epochs always sit on a marker. Arrival and departure events
//! under a scheduling rule sit *between* two adjacent markers: an early-arrival
//! arrival happens in `(τ, τ+)`, a late-arrival arrival in `(τ-, τ)`, and so
//! on. An [`EventPoint`] records the marker used to name the event together
//! with the side of that marker on which the event lies, so an event can never
//! coincide with an observation epoch and every indicator `A' < u(τ) <= D'`
//! is decided by integer comparisons alone.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Marker phase within a slot edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Phase {
    /// `τ - 0.5`, the center of slot `(τ-1, τ]`.
    Center,
    /// `τ--`
    MinusMinus,
    /// `τ-`
    Minus,
    /// `τ`, the slot edge itself.
    Edge,
    /// `τ+`
    Plus,
    /// `τ++`
    PlusPlus,
}

impl Phase {
    pub const ALL: [Phase; 6] = [
        Phase::Center,
        Phase::MinusMinus,
        Phase::Minus,
        Phase::Edge,
        Phase::Plus,
        Phase::PlusPlus,
    ];

    pub const fn rank(self) -> u8 {
        match self {
            Phase::Center => 0,
            Phase::MinusMinus => 1,
            Phase::Minus => 2,
            Phase::Edge => 3,
            Phase::Plus => 4,
            Phase::PlusPlus => 5,
        }
    }

    fn suffix(self) -> &'static str {
        match self {
            Phase::Center => "-0.5",
            Phase::MinusMinus => "--",
            Phase::Minus => "-",
            Phase::Edge => "",
            Phase::Plus => "+",
            Phase::PlusPlus => "++",
        }
    }
}

/// A marker point: slot edge plus phase. Ordered lexicographically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MicroTime {
    pub slot: u64,
    pub phase: Phase,
}

impl MicroTime {
    pub const fn new(slot: u64, phase: Phase) -> Self {
        MicroTime { slot, phase }
    }

    /// Position on the refined lattice: markers take the middle of three
    /// sub-positions per phase so events can sit on either side.
    pub(crate) const fn key(self) -> (u64, u8) {
        (self.slot, 3 * self.phase.rank() + 1)
    }
}

impl fmt::Display for MicroTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.slot, self.phase.suffix())
    }
}

/// Total order on marker points.
pub fn compare(a: MicroTime, b: MicroTime) -> Ordering {
    a.cmp(&b)
}

/// Which side of its naming marker an event lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Below,
    Above,
}

/// A scheduled arrival or departure instant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EventPoint {
    /// Marker naming the event, e.g. `A+` for an early-arrival arrival.
    pub marker: MicroTime,
    pub side: Side,
}

impl EventPoint {
    const fn key(self) -> (u64, u8) {
        let base = 3 * self.marker.phase.rank();
        match self.side {
            Side::Below => (self.marker.slot, base),
            Side::Above => (self.marker.slot, base + 2),
        }
    }

    /// True when the event happens strictly before the marker `u`.
    pub fn is_before(self, u: MicroTime) -> bool {
        self.key() < u.key()
    }

    /// True when the event happens strictly after the marker `u`.
    pub fn is_after(self, u: MicroTime) -> bool {
        self.key() > u.key()
    }

    /// Smallest slot `τ` whose marker of phase `p` lies after this event.
    pub(crate) fn first_slot_after(self, p: Phase) -> u64 {
        let (slot, sub) = self.key();
        if 3 * p.rank() + 1 > sub {
            slot
        } else {
            slot + 1
        }
    }

    /// Largest slot `τ` whose marker of phase `p` lies before this event, if any.
    pub(crate) fn last_slot_before(self, p: Phase) -> Option<u64> {
        let (slot, sub) = self.key();
        if 3 * p.rank() + 1 < sub {
            Some(slot)
        } else {
            slot.checked_sub(1)
        }
    }
}

impl PartialEq<MicroTime> for EventPoint {
    fn eq(&self, _other: &MicroTime) -> bool {
        false
    }
}

impl PartialOrd<MicroTime> for EventPoint {
    fn partial_cmp(&self, other: &MicroTime) -> Option<Ordering> {
        Some(self.key().cmp(&other.key()))
    }
}

impl fmt::Display for EventPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.side {
            Side::Below => write!(f, "<{}", self.marker),
            Side::Above => write!(f, ">{}", self.marker),
        }
    }
}

/// Ordering convention for potential arrivals and departures at a slot edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SchedulingRule {
    /// Early arrival: `τ- < D < τ < A < τ+`.
    #[serde(rename = "EAS")]
    Eas,
    /// Late arrival, immediate access: `τ- < A < τ < D < τ+`, service may start in the arrival slot.
    #[serde(rename = "LAS-IA")]
    LasIa,
    /// Late arrival, delayed access.
    #[serde(rename = "LAS-DA")]
    LasDa,
    /// Late arrivals, arrivals first: `τ-- < A < τ- < D < τ`.
    #[serde(rename = "LA-AF")]
    LaAf,
    /// Late arrivals, departures first: `τ-- < D < τ- < A < τ`.
    #[serde(rename = "LA-DF")]
    LaDf,
}

impl SchedulingRule {
    pub const ALL: [SchedulingRule; 5] = [
        SchedulingRule::Eas,
        SchedulingRule::LasIa,
        SchedulingRule::LasDa,
        SchedulingRule::LaAf,
        SchedulingRule::LaDf,
    ];

    pub fn label(self) -> &'static str {
        match self {
            SchedulingRule::Eas => "EAS",
            SchedulingRule::LasIa => "LAS-IA",
            SchedulingRule::LasDa => "LAS-DA",
            SchedulingRule::LaAf => "LA-AF",
            SchedulingRule::LaDf => "LA-DF",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for SchedulingRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for SchedulingRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace('_', "-");
        SchedulingRule::ALL
            .into_iter()
            .find(|r| r.label() == norm)
            .ok_or_else(|| Error::Parse(format!("unknown scheduling rule `{s}`")))
    }
}

/// Observation epoch family, one column of the epoch table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ObservationEpoch {
    #[serde(rename = "random-observer")]
    RandomObserver,
    #[serde(rename = "outside-observer")]
    OutsideObserver,
    #[serde(rename = "pot-pre-arrival")]
    PotPreArrival,
    #[serde(rename = "pot-post-arrival")]
    PotPostArrival,
    #[serde(rename = "pot-pre-departure")]
    PotPreDeparture,
    #[serde(rename = "pot-post-departure")]
    PotPostDeparture,
}

impl ObservationEpoch {
    pub const ALL: [ObservationEpoch; 6] = [
        ObservationEpoch::RandomObserver,
        ObservationEpoch::OutsideObserver,
        ObservationEpoch::PotPreArrival,
        ObservationEpoch::PotPostArrival,
        ObservationEpoch::PotPreDeparture,
        ObservationEpoch::PotPostDeparture,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ObservationEpoch::RandomObserver => "random-observer",
            ObservationEpoch::OutsideObserver => "outside-observer",
            ObservationEpoch::PotPreArrival => "pot-pre-arrival",
            ObservationEpoch::PotPostArrival => "pot-post-arrival",
            ObservationEpoch::PotPreDeparture => "pot-pre-departure",
            ObservationEpoch::PotPostDeparture => "pot-post-departure",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ObservationEpoch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for ObservationEpoch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        let short = match norm.as_str() {
            "random" | "edge" => Some(ObservationEpoch::RandomObserver),
            "outside" | "center" => Some(ObservationEpoch::OutsideObserver),
            "pre-arrival" => Some(ObservationEpoch::PotPreArrival),
            "post-arrival" => Some(ObservationEpoch::PotPostArrival),
            "pre-departure" => Some(ObservationEpoch::PotPreDeparture),
            "post-departure" => Some(ObservationEpoch::PotPostDeparture),
            _ => None,
        };
        short
            .or_else(|| ObservationEpoch::ALL.into_iter().find(|e| e.label() == norm))
            .ok_or_else(|| Error::Parse(format!("unknown observation epoch `{s}`")))
    }
}

/// Arrival instant `A'` of a customer who arrives at slot `a` under `rule`.
pub fn shift_arrival(rule: SchedulingRule, a: u64) -> EventPoint {
    let (marker, side) = match rule {
        SchedulingRule::Eas => (Phase::Plus, Side::Below),
        SchedulingRule::LaAf => (Phase::MinusMinus, Side::Above),
        SchedulingRule::LasIa | SchedulingRule::LasDa | SchedulingRule::LaDf => {
            (Phase::Minus, Side::Above)
        }
    };
    EventPoint {
        marker: MicroTime::new(a, marker),
        side,
    }
}

/// Departure instant `D'` of a customer who departs at slot `d` under `rule`.
///
/// Fails for `d = 0` under LAS-IA, where the departure is named `(d-1)+`.
pub fn shift_departure(rule: SchedulingRule, d: u64) -> Result<EventPoint> {
    let (slot, marker, side) = match rule {
        SchedulingRule::Eas | SchedulingRule::LaAf => (d, Phase::Minus, Side::Above),
        SchedulingRule::LaDf => (d, Phase::MinusMinus, Side::Above),
        SchedulingRule::LasDa => (d, Phase::Plus, Side::Below),
        SchedulingRule::LasIa => {
            let prev = d.checked_sub(1).ok_or(Error::DepartureAtZero)?;
            (prev, Phase::Plus, Side::Below)
        }
    };
    Ok(EventPoint {
        marker: MicroTime::new(slot, marker),
        side,
    })
}

/// Marker phase used by `epoch` under `rule`.
pub fn epoch_phase(rule: SchedulingRule, epoch: ObservationEpoch) -> Phase {
    use ObservationEpoch::*;
    use Phase::*;
    use SchedulingRule::*;
    match (epoch, rule) {
        (RandomObserver, _) => Edge,
        (OutsideObserver, _) => Center,

        (PotPreArrival, Eas) => Edge,
        (PotPreArrival, LasIa | LasDa | LaDf) => Minus,
        (PotPreArrival, LaAf) => MinusMinus,

        (PotPostArrival, Eas) => Plus,
        (PotPostArrival, LasIa | LasDa | LaDf) => Edge,
        (PotPostArrival, LaAf) => Minus,

        (PotPreDeparture, Eas | LaAf) => Minus,
        (PotPreDeparture, LasIa | LasDa) => Edge,
        (PotPreDeparture, LaDf) => MinusMinus,

        (PotPostDeparture, Eas | LaAf) => Edge,
        (PotPostDeparture, LasIa | LasDa) => Plus,
        (PotPostDeparture, LaDf) => Minus,
    }
}

/// Observation point `u(t)`.
pub fn epoch_point(rule: SchedulingRule, epoch: ObservationEpoch, t: u64) -> MicroTime {
    MicroTime::new(t, epoch_phase(rule, epoch))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use Phase::*;
    use SchedulingRule::*;

    #[test]
    fn compare_examples() {
        assert_eq!(
            compare(MicroTime::new(5, Minus), MicroTime::new(5, Edge)),
            Ordering::Less
        );
        assert_eq!(
            compare(MicroTime::new(5, Plus), MicroTime::new(6, Center)),
            Ordering::Less
        );
        assert_eq!(
            compare(MicroTime::new(7, Edge), MicroTime::new(7, Edge)),
            Ordering::Equal
        );
        assert!(MicroTime::new(6, Center) < MicroTime::new(6, MinusMinus));
    }

    #[test]
    fn shift_examples() {
        assert_eq!(shift_arrival(Eas, 5).marker, MicroTime::new(5, Plus));
        assert_eq!(shift_arrival(LaAf, 5).marker, MicroTime::new(5, MinusMinus));
        assert_eq!(shift_arrival(LasIa, 0).marker, MicroTime::new(0, Minus));

        assert_eq!(shift_departure(Eas, 6).unwrap().marker, MicroTime::new(6, Minus));
        assert_eq!(shift_departure(LasIa, 6).unwrap().marker, MicroTime::new(5, Plus));
        assert_eq!(shift_departure(LasDa, 6).unwrap().marker, MicroTime::new(6, Plus));
        assert_eq!(shift_departure(LaDf, 6).unwrap().marker, MicroTime::new(6, MinusMinus));
        assert!(matches!(shift_departure(LasIa, 0), Err(Error::DepartureAtZero)));
        assert!(shift_departure(Eas, 0).is_ok());
    }

    #[test]
    fn early_arrival_ordering() {
        // τ- < D < τ < A < τ+
        let a = shift_arrival(Eas, 4);
        let d = shift_departure(Eas, 4).unwrap();
        assert!(d.is_after(MicroTime::new(4, Minus)));
        assert!(d.is_before(MicroTime::new(4, Edge)));
        assert!(a.is_after(MicroTime::new(4, Edge)));
        assert!(a.is_before(MicroTime::new(4, Plus)));
    }

    #[test]
    fn late_arrival_departure_first_ordering() {
        // τ-- < D < τ- < A < τ
        let a = shift_arrival(LaDf, 4);
        let d = shift_departure(LaDf, 4).unwrap();
        assert!(d.is_after(MicroTime::new(4, MinusMinus)));
        assert!(d.is_before(MicroTime::new(4, Minus)));
        assert!(a.is_after(MicroTime::new(4, Minus)));
        assert!(a.is_before(MicroTime::new(4, Edge)));
    }

    #[test]
    fn epoch_table_cells() {
        use ObservationEpoch::*;
        assert_eq!(epoch_point(Eas, OutsideObserver, 7), MicroTime::new(7, Center));
        assert_eq!(epoch_point(LaAf, PotPreArrival, 7), MicroTime::new(7, MinusMinus));
        assert_eq!(epoch_point(LasIa, PotPostDeparture, 7), MicroTime::new(7, Plus));
        assert_eq!(epoch_point(LaDf, PotPreDeparture, 7), MicroTime::new(7, MinusMinus));
        assert_eq!(epoch_point(Eas, PotPostArrival, 7), MicroTime::new(7, Plus));
        assert_eq!(epoch_point(LasDa, PotPostDeparture, 7), MicroTime::new(7, Plus));

        let expected: [[Phase; 6]; 5] = [
            [Edge, Center, Edge, Plus, Minus, Edge],
            [Edge, Center, Minus, Edge, Edge, Plus],
            [Edge, Center, Minus, Edge, Edge, Plus],
            [Edge, Center, MinusMinus, Minus, Minus, Edge],
            [Edge, Center, Minus, Edge, MinusMinus, Minus],
        ];
        for rule in SchedulingRule::ALL {
            for epoch in ObservationEpoch::ALL {
                assert_eq!(
                    epoch_phase(rule, epoch),
                    expected[rule.index()][epoch.index()],
                    "{rule} {epoch}"
                );
            }
        }
    }

    #[test]
    fn rendering() {
        assert_eq!(MicroTime::new(5, Plus).to_string(), "5+");
        assert_eq!(MicroTime::new(5, Center).to_string(), "5-0.5");
        assert_eq!(MicroTime::new(5, MinusMinus).to_string(), "5--");
        assert_eq!(MicroTime::new(5, Edge).to_string(), "5");
        assert_eq!(MicroTime::new(5, PlusPlus).to_string(), "5++");
        assert_eq!("las_ia".parse::<SchedulingRule>().unwrap(), LasIa);
        assert_eq!(
            "outside".parse::<ObservationEpoch>().unwrap(),
            ObservationEpoch::OutsideObserver
        );
    }

    fn phase() -> impl Strategy<Value = Phase> {
        (0usize..6).prop_map(|i| Phase::ALL[i])
    }

    fn rule() -> impl Strategy<Value = SchedulingRule> {
        (0usize..5).prop_map(|i| SchedulingRule::ALL[i])
    }

    fn epoch() -> impl Strategy<Value = ObservationEpoch> {
        (0usize..6).prop_map(|i| ObservationEpoch::ALL[i])
    }

    proptest! {
        #[test]
        fn order_is_total_and_lexicographic(s1 in 0u64..50, p1 in phase(), s2 in 0u64..50, p2 in phase()) {
            let a = MicroTime::new(s1, p1);
            let b = MicroTime::new(s2, p2);
            let lex = s1.cmp(&s2).then(p1.rank().cmp(&p2.rank()));
            prop_assert_eq!(compare(a, b), lex);
            prop_assert_eq!(compare(b, a), lex.reverse());
        }

        #[test]
        fn shifts_stay_near_their_slot(r in rule(), a in 1u64..1000) {
            let lo = MicroTime::new(a - 1, Phase::PlusPlus);
            let hi = MicroTime::new(a + 1, Phase::Center);
            let arr = shift_arrival(r, a);
            prop_assert!(arr.is_after(lo) && arr.is_before(hi));
            prop_assert!(matches!(arr.marker.phase, Phase::MinusMinus | Phase::Minus | Phase::Plus));
        }

        #[test]
        fn epoch_points_are_monotone(r in rule(), e in epoch(), t1 in 0u64..1000, dt in 1u64..10) {
            prop_assert!(epoch_point(r, e, t1) < epoch_point(r, e, t1 + dt));
        }

        #[test]
        fn edge_and_center_epochs_ignore_rule(r in rule(), t in 0u64..1000) {
            prop_assert_eq!(epoch_point(r, ObservationEpoch::RandomObserver, t), MicroTime::new(t, Phase::Edge));
            prop_assert_eq!(epoch_point(r, ObservationEpoch::OutsideObserver, t), MicroTime::new(t, Phase::Center));
        }

        #[test]
        fn events_never_coincide_with_markers(r in rule(), s in 1u64..100, p in phase(), t in 0u64..101) {
            let u = MicroTime::new(t, p);
            let a = shift_arrival(r, s);
            let d = shift_departure(r, s).unwrap();
            prop_assert!(a.is_before(u) != a.is_after(u));
            prop_assert!(d.is_before(u) != d.is_after(u));
        }
    }
}
