mod common;

use prsgd::engine::schedule::{theorem2_length, theorem2_rate};
use prsgd::engine::{compute_theorem2_schedule, plan_interval};

#[test]
fn oracle_self_check() {
    assert_eq!(common::epoch_rate(1, 1), 1.0);
    assert_eq!(common::epoch_rate(2, 8), 0.5);
    assert_eq!(common::epoch_rate(4, 64), 0.25);
    assert_eq!(common::epoch_rate(2, 27), 2.0 / 9.0);
    assert_eq!(common::epoch_length(2, 8), 1);
    assert_eq!(common::epoch_length(1, 9), 3);
    assert_eq!(common::epoch_length(4, 65), 2);
}

#[test]
fn schedule_matches_big_integer_evaluation() {
    for n in [1u64, 2, 4] {
        let schedule = compute_theorem2_schedule(n, 10_000).unwrap();
        assert_eq!(schedule.epochs.len(), 10_000);
        for (i, e) in schedule.epochs.iter().enumerate() {
            let s = i as u64 + 1;
            assert_eq!(e.length, common::epoch_length(n, s), "K at N={n}, s={s}");
            assert_eq!(
                e.gamma.to_bits(),
                common::epoch_rate(n, s).to_bits(),
                "gamma at N={n}, s={s}"
            );
        }
    }
}

#[test]
fn larger_worker_counts_and_epochs() {
    for (n, s) in [
        (3u64, 1_000_000u64),
        (7, 999_999),
        (16, 123_456_789),
        (1000, 17),
    ] {
        assert_eq!(theorem2_length(n, s), common::epoch_length(n, s));
        assert_eq!(
            theorem2_rate(n, s).to_bits(),
            common::epoch_rate(n, s).to_bits()
        );
    }
}

#[test]
fn plan_interval_against_brute_force() {
    for n in 1u64..=8 {
        for t in (n..5000).step_by(7) {
            let i = plan_interval(t, n);
            assert!(i >= 1);
            if i > 1 {
                assert!(i.pow(4) * n.pow(3) <= t);
            }
            assert!((i + 1).pow(4) * n.pow(3) > t || i == 1 && n.pow(3) > t);
        }
    }
}
