use dtq_core::busy::detect_cycles;
use dtq_core::coherence::{observed_busy_spans, verify_on_trace};
use dtq_core::engine::{run_discipline, Discipline, Trace};
use dtq_core::littles::{basic_inequality, check_little};
use dtq_core::observer::{
    mean_occupancy, observed_wait, queue_length, time_averages, IndicatorConvention,
};
use dtq_core::{ObservationEpoch, SchedulingRule};

fn three_customers() -> Trace {
    run_discipline(
        &[1, 2, 5],
        &[],
        &Discipline::External {
            departures: vec![4, 5, 7],
        },
        7,
        0,
    )
    .unwrap()
}

#[test]
fn three_customer_period_averages() {
    let t = three_customers();
    let waits: Vec<u64> = t.customers().iter().map(|c| c.wait()).collect();
    assert_eq!(waits, vec![3, 3, 2]);
    let est = time_averages(&t, SchedulingRule::LasIa, ObservationEpoch::RandomObserver, 0).unwrap();
    assert_eq!(est.lambda, 3.0 / 7.0);
    assert_eq!(est.w, 8.0 / 3.0);
    assert_eq!(est.l, 8.0 / 7.0);
    for conv in [IndicatorConvention::LeftOpen, IndicatorConvention::RightOpen] {
        assert_eq!(mean_occupancy(&t, conv, 0).unwrap(), 8.0 / 7.0);
    }
    let little = check_little(&t, 0).unwrap();
    assert_eq!(little.residual, 0.0);
    assert_eq!((queue_length(&t, 3), queue_length(&t, 7)), (2, 1));
}

#[test]
fn three_customer_basic_inequality() {
    let b = basic_inequality(&three_customers(), 5);
    assert_eq!((b.upper, b.middle, b.lower), (8, 6, 6));
}

#[test]
fn single_slot_customer() {
    // one customer present for exactly one slot
    let cases = [
        (SchedulingRule::LasIa, 1),
        (SchedulingRule::Eas, 0),
        (SchedulingRule::LasDa, 2),
    ];
    for (rule, want) in cases {
        assert_eq!(observed_wait(rule, ObservationEpoch::RandomObserver, 6, 7).unwrap(), want);
    }
}

#[test]
fn infinite_server_customers() {
    let t = run_discipline(&[2, 2, 3], &[4, 1, 6], &Discipline::InfiniteServer, 10, 0).unwrap();
    for c in t.customers() {
        assert_eq!(c.wait(), c.service);
        let obs = observed_wait(SchedulingRule::LasIa, ObservationEpoch::OutsideObserver, c.arrival, c.departure)
            .unwrap();
        assert_eq!(obs, c.service - 1);
    }
    assert!(verify_on_trace(&t, SchedulingRule::LasIa, ObservationEpoch::OutsideObserver)
        .unwrap()
        .pass);
}

#[test]
fn two_customer_busy_period() {
    let t = run_discipline(&[1, 3, 11, 13], &[5, 4, 5, 4], &Discipline::Fifo1, 20, 0).unwrap();
    let d: Vec<u64> = t.customers().iter().map(|c| c.departure).collect();
    assert_eq!(d, vec![6, 10, 16, 20]);
    let cycles = detect_cycles(&t);
    let first = cycles.cycles[0];
    assert_eq!((first.b, first.i, first.c), (9, 1, 10));
    assert_eq!(
        observed_busy_spans(&t, SchedulingRule::Eas, ObservationEpoch::RandomObserver)[0],
        8
    );
}
