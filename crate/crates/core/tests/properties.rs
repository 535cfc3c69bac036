//! Property tests: fund conservation under random operation sequences,
//! centroid/mean equivalence, sparse-dense agreement, time-gate monotonicity,
//! payout arithmetic, and serialization round-trips.

use proptest::prelude::*;

use dcml::incentive::{
    self, EventRecord, IncentiveError, TrainerConfig, TrainerState, MICRO,
};
use dcml::models::{FeatureVector, LabeledSample, Model, ModelKind};

fn dense_sample(values: Vec<u64>, label: u8) -> LabeledSample {
    LabeledSample::new(FeatureVector::dense(values).unwrap(), label).unwrap()
}

fn seeded_state() -> TrainerState {
    let model = Model::warm_start(
        ModelKind::NearestCentroidDense,
        &[dense_sample(vec![0, 0], 0), dense_sample(vec![60, 60], 1)],
    )
    .unwrap();
    let mut st = TrainerState::new(model, TrainerConfig::default(), 0).unwrap();
    st.register_account("good", 10_000 * MICRO).unwrap();
    st.register_account("bad", 10_000 * MICRO).unwrap();
    st
}

/// One randomized incentive operation. Timing fields intentionally include
/// boundary values around the refund and takeover waits.
#[derive(Debug, Clone)]
enum Op {
    Add { caller: usize, x: (u64, u64), label: u8, deposit: u64, dt: u64 },
    Refund { caller: usize, id: u64, dt: u64 },
    Report { caller: usize, id: u64, dt: u64 },
    ClaimStale { caller: usize, id: u64, dt: u64 },
}

fn op_strategy() -> impl Strategy<Value = Op> {
    let dt = prop_oneof![
        0u64..3,
        Just(86_399u64),
        Just(86_400u64),
        Just(777_599u64),
        Just(777_600u64),
        1u64..200_000,
    ];
    prop_oneof![
        (0usize..2, (0u64..80, 0u64..80), 0u8..2, 1u64..60 * MICRO, dt.clone())
            .prop_map(|(caller, x, label, deposit, dt)| Op::Add { caller, x, label, deposit, dt }),
        (0usize..2, 0u64..40, dt.clone()).prop_map(|(caller, id, dt)| Op::Refund { caller, id, dt }),
        (0usize..2, 0u64..40, dt.clone()).prop_map(|(caller, id, dt)| Op::Report { caller, id, dt }),
        (0usize..2, 0u64..40, dt).prop_map(|(caller, id, dt)| Op::ClaimStale { caller, id, dt }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Funds never appear or vanish, no matter the operation order or
    /// timing; every operation leaves Σ balances + escrow intact.
    #[test]
    fn funds_conserved_under_random_operations(ops in prop::collection::vec(op_strategy(), 1..120)) {
        let mut st = seeded_state();
        let initial = st.total_funds();
        let accounts = ["good", "bad"];
        let mut now = 600u64;
        for op in ops {
            match op {
                Op::Add { caller, x, label, deposit, dt } => {
                    now += dt;
                    let _ = st.add_data(accounts[caller], dense_sample(vec![x.0, x.1], label), deposit, now);
                }
                Op::Refund { caller, id, dt } => {
                    now += dt;
                    let _ = st.refund(accounts[caller], id, now);
                }
                Op::Report { caller, id, dt } => {
                    now += dt;
                    let _ = st.report(accounts[caller], id, now);
                }
                Op::ClaimStale { caller, id, dt } => {
                    now += dt;
                    let _ = st.claim_stale(accounts[caller], id, now);
                }
            }
            prop_assert_eq!(st.total_funds(), initial);
        }
    }

    /// The incremental centroid equals the arithmetic mean of everything a
    /// class has seen, for both representations.
    #[test]
    fn centroid_equals_batch_mean(
        rows in prop::collection::vec((prop::collection::vec(0u64..50, 4), 0u8..2), 1..60)
    ) {
        let mut dense = Model::new(ModelKind::NearestCentroidDense, 4).unwrap();
        let mut sparse = Model::new(ModelKind::NearestCentroidSparse, 4).unwrap();
        let mut sums = [[0f64; 4]; 2];
        let mut counts = [0u64; 2];
        for (values, label) in &rows {
            let s = dense_sample(values.clone(), *label);
            dense.update(&s).unwrap();
            sparse.update(&s).unwrap();
            counts[*label as usize] += 1;
            for (i, v) in values.iter().enumerate() {
                sums[*label as usize][i] += *v as f64;
            }
        }
        let (dense_c, sparse_c) = match (&dense, &sparse) {
            (Model::NearestCentroidDense(d), Model::NearestCentroidSparse(s)) => {
                (d.centroids.clone(), [s.effective_centroid(0), s.effective_centroid(1)])
            }
            _ => unreachable!(),
        };
        for class in 0..2 {
            if counts[class] == 0 {
                continue;
            }
            for i in 0..4 {
                let mean = sums[class][i] / counts[class] as f64;
                let tolerance = 1e-9 * mean.abs().max(1.0);
                prop_assert!((dense_c[class][i] - mean).abs() <= tolerance,
                    "dense centroid {} vs mean {}", dense_c[class][i], mean);
                prop_assert!((sparse_c[class][i] - mean).abs() <= tolerance,
                    "sparse centroid {} vs mean {}", sparse_c[class][i], mean);
            }
        }
    }

    /// Dense and sparse nearest-centroid disagree on no prediction over a
    /// shared update stream.
    #[test]
    fn sparse_and_dense_centroids_predict_identically(
        rows in prop::collection::vec((prop::collection::vec(0u64..40, 6), 0u8..2), 2..80),
        queries in prop::collection::vec(prop::collection::vec(0u64..40, 6), 1..20)
    ) {
        let mut dense = Model::new(ModelKind::NearestCentroidDense, 6).unwrap();
        let mut sparse = Model::new(ModelKind::NearestCentroidSparse, 6).unwrap();
        for (values, label) in &rows {
            let s = dense_sample(values.clone(), *label);
            dense.update(&s).unwrap();
            sparse.update(&s).unwrap();
        }
        for q in &queries {
            let x = FeatureVector::dense(q.clone()).unwrap();
            prop_assert_eq!(dense.predict(&x).unwrap(), sparse.predict(&x).unwrap());
        }
    }

    /// Both waiting periods are hard gates: operations strictly before them
    /// fail with TooEarly regardless of any other state.
    #[test]
    fn time_gates_reject_early_claims(offset in 0u64..86_400, stale_offset in 0u64..777_600) {
        let mut st = seeded_state();
        let submit_at = 600;
        let id = st
            .add_data("good", dense_sample(vec![59, 59], 1), 30 * MICRO, submit_at)
            .unwrap();
        prop_assert_eq!(
            st.refund("good", id, submit_at + offset).unwrap_err(),
            IncentiveError::TooEarly
        );
        prop_assert_eq!(
            st.claim_stale("bad", id, submit_at + stale_offset).unwrap_err(),
            IncentiveError::TooEarly
        );
    }

    /// Reporter payout arithmetic: exact floor division, clamped by what is
    /// left in escrow.
    #[test]
    fn report_share_matches_formula(
        deposit in 1u64..1_000_000 * MICRO,
        reporter in 1u64..5_000,
        others in 0u64..5_000,
        remaining_frac in 0u64..=100,
    ) {
        let total = reporter + others;
        let remaining = deposit * remaining_frac / 100;
        let expected = u64::min(
            ((deposit as u128 * reporter as u128) / total as u128) as u64,
            remaining,
        );
        prop_assert_eq!(incentive::report_share(deposit, reporter, total, remaining), expected);
    }

    /// Model checkpoints restore to byte-identical state.
    #[test]
    fn checkpoints_round_trip(
        rows in prop::collection::vec((prop::collection::vec(0u64..30, 3), 0u8..2), 1..40),
        kind_idx in 0usize..4,
    ) {
        let kind = [
            ModelKind::Perceptron,
            ModelKind::NaiveBayes,
            ModelKind::NearestCentroidDense,
            ModelKind::NearestCentroidSparse,
        ][kind_idx];
        let mut model = Model::new(kind, 3).unwrap();
        for (values, label) in &rows {
            model.update(&dense_sample(values.clone(), *label)).unwrap();
        }
        let snap = model.snapshot();
        let restored = Model::restore(snap.as_bytes()).unwrap();
        let restored_snap = restored.snapshot();
        prop_assert_eq!(restored_snap.as_bytes(), snap.as_bytes());
    }
}

/// Event log CSV encoding survives a round trip for an arbitrary recorded
/// history (generated by actually running operations).
#[test]
fn event_log_csv_round_trips() {
    let mut st = seeded_state();
    let t = st.config.refund_wait;
    let id = st
        .add_data("good", dense_sample(vec![58, 61], 1), 25 * MICRO, 600)
        .unwrap();
    let _ = st.add_data("bad", dense_sample(vec![3, 2], 1), 25 * MICRO, 700_000);
    st.refund("good", id, 600 + t).unwrap();
    let _ = st.report("bad", id, 600 + t); // fails: already refunded
    let text = incentive::events_to_csv(&st.events);
    let parsed: Vec<EventRecord> = incentive::events_from_csv(&text).unwrap();
    assert_eq!(parsed, st.events);
}
