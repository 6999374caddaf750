//! Waiting cost of a beam rotation and the order that minimizes it.

use std::cmp::Ordering;

use crate::error::{invalid, Error, Result};

/// Permutation of beam indices giving the rotation order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RotationOrder {
    pub order: Vec<usize>,
}

impl RotationOrder {
    pub fn sequential(n: usize) -> Self {
        Self { order: (0..n).collect() }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let mut seen = vec![false; n];
        if self.order.len() != n {
            return Err(Error::Dimension(format!("order of length {} for {n} beams", self.order.len())));
        }
        for &b in &self.order {
            if b >= n || std::mem::replace(&mut seen[b], true) {
                return Err(invalid(format!("order {:?} is not a permutation", self.order)));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WaitingCostReport {
    pub total: f64,
    pub average: f64,
    /// Start time of each beam, listed along the order.
    pub per_beam_start: Vec<f64>,
}

fn check_lists(counts: &[usize], times: &[f64]) -> Result<()> {
    if counts.len() != times.len() {
        return Err(Error::Dimension(format!("{} counts for {} times", counts.len(), times.len())));
    }
    if times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(invalid("charging times must be finite and non-negative"));
    }
    Ok(())
}

/// Waiting cost of serving beams in `order`: initial delays plus, for each beam,
/// its device count times the time spent on the beams before it.
pub fn waiting_cost(order: &RotationOrder, counts: &[usize], times: &[f64], initial_delays: &[f64]) -> Result<WaitingCostReport> {
    check_lists(counts, times)?;
    order.validate(counts.len())?;
    let devices: usize = counts.iter().sum();
    if devices == 0 {
        return Err(invalid("waiting cost needs at least one device"));
    }
    let mut total: f64 = initial_delays.iter().sum();
    let mut elapsed = 0.0;
    let mut per_beam_start = Vec::with_capacity(order.order.len());
    for &b in &order.order {
        per_beam_start.push(elapsed);
        total += counts[b] as f64 * elapsed;
        elapsed += times[b];
    }
    Ok(WaitingCostReport { total, average: total / devices as f64, per_beam_start })
}

/// Order-dependent part of the waiting cost.
pub fn order_cost(order: &[usize], counts: &[usize], times: &[f64]) -> f64 {
    let mut elapsed = 0.0;
    let mut total = 0.0;
    for &b in order {
        total += counts[b] as f64 * elapsed;
        elapsed += times[b];
    }
    total
}

/// Beams by descending count-to-time ratio, ties by index. A beam with devices
/// and zero time has an infinite ratio; an empty beam with zero time has ratio 0.
pub fn optimal_order(counts: &[usize], times: &[f64]) -> Result<RotationOrder> {
    check_lists(counts, times)?;
    let ratio = |j: usize| -> f64 {
        match (counts[j], times[j]) {
            (0, _) => 0.0,
            (_, 0.0) => f64::INFINITY,
            (c, t) => c as f64 / t,
        }
    };
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| ratio(b).partial_cmp(&ratio(a)).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
    Ok(RotationOrder { order })
}

/// Beams by descending device count only, ties by index.
pub fn count_only_order(counts: &[usize]) -> RotationOrder {
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
    RotationOrder { order }
}

pub const BRUTE_FORCE_LIMIT: usize = 10;

/// Exhaustive minimum of the order-dependent cost. Only for small instances.
pub fn brute_force_order(counts: &[usize], times: &[f64]) -> Result<(RotationOrder, f64)> {
    check_lists(counts, times)?;
    let n = counts.len();
    if n > BRUTE_FORCE_LIMIT {
        return Err(invalid(format!("brute force limited to {BRUTE_FORCE_LIMIT} beams, got {n}")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = (perm.clone(), order_cost(&perm, counts, times));
    // Heap's algorithm, iterative form
    let mut c = vec![0usize; n];
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            let cost = order_cost(&perm, counts, times);
            if cost < best.1 {
                best = (perm.clone(), cost);
            }
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok((RotationOrder { order: best.0 }, best.1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_beam_cost_is_the_delay() {
        let r = waiting_cost(&RotationOrder::sequential(1), &[4], &[3.0], &[2.0]).unwrap();
        assert_eq!(r.total, 2.0);
        assert_eq!(r.average, 0.5);
    }

    #[test]
    fn hand_evaluated_instance() {
        let o = RotationOrder { order: vec![0, 2, 1] };
        let r = waiting_cost(&o, &[3, 1, 2], &[1.0, 2.0, 1.0], &[]).unwrap();
        assert_eq!(r.total, 4.0);
        assert_eq!(r.per_beam_start, vec![0.0, 1.0, 2.0]);
        assert_eq!(optimal_order(&[3, 1, 2], &[1.0, 2.0, 1.0]).unwrap(), o);
    }

    #[test]
    fn symmetric_instance_is_order_free() {
        for o in [vec![0, 1], vec![1, 0]] {
            let r = waiting_cost(&RotationOrder { order: o }, &[2, 2], &[1.0, 1.0], &[0.0, 0.0]).unwrap();
            assert_eq!(r.total, 2.0);
        }
    }

    #[test]
    fn remark_special_cases() {
        assert_eq!(optimal_order(&[2, 2, 2], &[3.0, 1.0, 2.0]).unwrap().order, vec![1, 2, 0]);
        assert_eq!(optimal_order(&[1, 5, 3], &[1.0, 1.0, 1.0]).unwrap().order, vec![1, 2, 0]);
    }

    #[test]
    fn zero_time_beams_go_first() {
        assert_eq!(optimal_order(&[1, 2], &[1.0, 0.0]).unwrap().order, vec![1, 0]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(waiting_cost(&RotationOrder::sequential(2), &[0, 0], &[1.0, 1.0], &[]).is_err());
        assert!(waiting_cost(&RotationOrder { order: vec![0, 0] }, &[1, 1], &[1.0, 1.0], &[]).is_err());
        assert!(brute_force_order(&[1; 11], &[1.0; 11]).is_err());
    }

    #[test]
    fn tied_ratios_match_brute_force() {
        let (_, best) = brute_force_order(&[2, 4], &[1.0, 2.0]).unwrap();
        let o = optimal_order(&[2, 4], &[1.0, 2.0]).unwrap();
        assert_eq!(order_cost(&o.order, &[2, 4], &[1.0, 2.0]), best);
    }
}
