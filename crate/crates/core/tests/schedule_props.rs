use proptest::prelude::*;
use riss_core::schedule::{
    brute_force_order, count_only_order, optimal_order, order_cost, waiting_cost, RotationOrder,
};

fn instance() -> impl Strategy<Value = (Vec<usize>, Vec<f64>)> {
    (2usize..=7).prop_flat_map(|n| (prop::collection::vec(0usize..40, n), prop::collection::vec(0.01f64..10.0, n)))
}

/// Waiting cost written out from its definition: each device in a beam waits
/// for every beam rotated before it.
fn direct_cost(order: &[usize], counts: &[usize], times: &[f64]) -> f64 {
    let mut total = 0.0;
    for (pos, &b) in order.iter().enumerate() {
        let start: f64 = order[..pos].iter().map(|&k| times[k]).sum();
        total += counts[b] as f64 * start;
    }
    total
}

proptest! {
    #[test]
    fn optimal_matches_brute_force((counts, times) in instance()) {
        let opt = optimal_order(&counts, &times).unwrap();
        let (_, best) = brute_force_order(&counts, &times).unwrap();
        let cost = order_cost(&opt.order, &counts, &times);
        prop_assert!((cost - best).abs() <= 1e-9 * best.max(1.0));
    }

    #[test]
    fn cost_matches_definition((mut counts, times) in instance()) {
        counts[0] += 1;
        let opt = optimal_order(&counts, &times).unwrap();
        let direct = direct_cost(&opt.order, &counts, &times);
        prop_assert!((order_cost(&opt.order, &counts, &times) - direct).abs() <= 1e-9 * direct.max(1.0));
        let report = waiting_cost(&opt, &counts, &times, &[]).unwrap();
        prop_assert!((report.total - direct).abs() <= 1e-9 * direct.max(1.0));
    }

    #[test]
    fn adjacent_exchange_never_helps((counts, times) in instance()) {
        let opt = optimal_order(&counts, &times).unwrap();
        let cost = order_cost(&opt.order, &counts, &times);
        for k in 0..opt.order.len() - 1 {
            let mut swapped = opt.order.clone();
            swapped.swap(k, k + 1);
            prop_assert!(order_cost(&swapped, &counts, &times) >= cost - 1e-9 * cost.max(1.0));
        }
    }

    #[test]
    fn scaling_times_keeps_order((counts, times) in instance(), scale in 0.1f64..100.0) {
        let scaled: Vec<f64> = times.iter().map(|t| t * scale).collect();
        let a = optimal_order(&counts, &times).unwrap();
        let b = optimal_order(&counts, &scaled).unwrap();
        prop_assert_eq!(&a.order, &b.order);
        let (ca, cb) = (order_cost(&a.order, &counts, &times), order_cost(&b.order, &counts, &scaled));
        prop_assert!((cb - scale * ca).abs() <= 1e-9 * cb.max(1.0));
    }

    #[test]
    fn optimal_beats_baselines((counts, times) in instance()) {
        let opt = order_cost(&optimal_order(&counts, &times).unwrap().order, &counts, &times);
        let seq = order_cost(&RotationOrder::sequential(counts.len()).order, &counts, &times);
        let by_count = order_cost(&count_only_order(&counts).order, &counts, &times);
        prop_assert!(opt <= seq + 1e-9 * seq.max(1.0));
        prop_assert!(opt <= by_count + 1e-9 * by_count.max(1.0));
    }
}

#[test]
fn equal_times_reduce_to_count_order() {
    let counts = [4, 9, 1, 6];
    let times = [2.0; 4];
    assert_eq!(optimal_order(&counts, &times).unwrap().order, count_only_order(&counts).order);
}

#[test]
fn waiting_cost_rejects_empty_rotation() {
    assert!(waiting_cost(&RotationOrder::sequential(3), &[0, 0, 0], &[1.0; 3], &[]).is_err());
}

#[test]
fn brute_force_refuses_large_instances() {
    assert!(brute_force_order(&[1; 11], &[1.0; 11]).is_err());
}
