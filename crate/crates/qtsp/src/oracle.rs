//! Brute-force reference solvers.
//!
//! These enumerate factorially many orderings and exist to validate the
//! real solvers on small inputs, so they deliberately share as little code
//! with them as possible: costs are accumulated in visiting order here
//! (not in the canonical sorted-triple order), which is why comparisons
//! against them use a small absolute tolerance instead of bit equality.

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::scalar::Scalar;
use crate::tour::Tour;

/// Largest instance [`brute_force_optimal`] accepts; `(n-1)!` orderings.
pub const MAX_BRUTE_FORCE_N: usize = 12;

/// Largest unvisited set [`brute_force_completion`] accepts.
pub const MAX_COMPLETION_SET: usize = 9;

/// Exhaustively finds a minimum-cost tour.
///
/// Enumerates the `(n-1)!` depot-first orders lexicographically and keeps
/// the first one attaining the minimum, so ties resolve to the
/// lexicographically smallest order and the result is deterministic.
pub fn brute_force_optimal<S: Scalar>(inst: &Instance<S>) -> Result<(Tour, S)> {
    let n = inst.n();
    if n > MAX_BRUTE_FORCE_N {
        return Err(Error::SizeGuard(format!(
            "brute_force_optimal enumerates (n-1)! tours and refuses n > {MAX_BRUTE_FORCE_N}, got {n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut best_order = order.clone();
    let mut best_cost = visiting_order_cost(inst, &order);
    while next_permutation(&mut order[1..]) {
        let cost = visiting_order_cost(inst, &order);
        if cost < best_cost {
            best_cost = cost;
            best_order.copy_from_slice(&order);
        }
    }
    Ok((Tour::new(best_order), best_cost))
}

/// Minimal cost to finish a partial tour by visiting every customer in
/// `unvisited` and returning to the depot.
///
/// The partial tour arrived at `current` from `prev` having started its
/// customer sequence at `first`; at the root (nothing visited yet) all
/// three are the depot `0`. Evaluated by direct recursion over the
/// decision cases:
///
/// * depot start: pick the first customer `k` at no cost (the turn at `k`
///   is charged when leaving it);
/// * mid-tour: visiting `k` costs `c[prev][current][k]`;
/// * nothing left: close the cycle for
///   `c[current][0][first] + c[prev][current][0]`.
pub fn brute_force_completion<S: Scalar>(
    inst: &Instance<S>,
    unvisited: &[usize],
    prev: usize,
    current: usize,
    first: usize,
) -> Result<S> {
    let n = inst.n();
    if unvisited.len() > MAX_COMPLETION_SET {
        return Err(Error::SizeGuard(format!(
            "brute_force_completion enumerates |U|! orders and refuses |U| > {MAX_COMPLETION_SET}, got {}",
            unvisited.len()
        )));
    }
    for &part in [prev, current, first].iter().chain(unvisited) {
        if part >= n {
            return Err(Error::InvalidArgument(format!(
                "customer {part} out of range for n = {n}"
            )));
        }
    }
    let mut sorted = unvisited.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != unvisited.len() {
        return Err(Error::InvalidArgument("unvisited set contains duplicates".into()));
    }
    if sorted.contains(&0) || sorted.contains(&current) {
        return Err(Error::InvalidArgument(
            "unvisited set must exclude the depot and the current customer".into(),
        ));
    }
    if current == 0 && sorted.is_empty() {
        return Err(Error::InvalidArgument(
            "no completion exists from the depot with nothing to visit".into(),
        ));
    }
    Ok(completion(inst, &mut sorted, prev, current, first))
}

fn completion<S: Scalar>(
    inst: &Instance<S>,
    unvisited: &mut Vec<usize>,
    prev: usize,
    current: usize,
    first: usize,
) -> S {
    let costs = inst.costs();
    if current == 0 {
        let mut best = S::infinity();
        for idx in 0..unvisited.len() {
            let k = unvisited.remove(idx);
            let value = completion(inst, unvisited, 0, k, k);
            unvisited.insert(idx, k);
            best = best.min(value);
        }
        best
    } else if unvisited.is_empty() {
        costs.get(current, 0, first) + costs.get(prev, current, 0)
    } else {
        let mut best = S::infinity();
        for idx in 0..unvisited.len() {
            let k = unvisited.remove(idx);
            let value = costs.get(prev, current, k) + completion(inst, unvisited, current, k, first);
            unvisited.insert(idx, k);
            best = best.min(value);
        }
        best
    }
}

/// Tour cost accumulated in visiting order (the oracle's independent
/// evaluation; contrast with [`Instance::tour_cost`]).
fn visiting_order_cost<S: Scalar>(inst: &Instance<S>, order: &[usize]) -> S {
    let n = order.len();
    let costs = inst.costs();
    let mut total = S::zero();
    for p in 0..n {
        total += costs.get(order[(p + n - 1) % n], order[p], order[(p + 1) % n]);
    }
    total
}

/// In-place lexicographic successor; returns false after the last
/// permutation.
fn next_permutation(seq: &mut [usize]) -> bool {
    if seq.len() < 2 {
        return false;
    }
    let mut i = seq.len() - 1;
    while i > 0 && seq[i - 1] >= seq[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = seq.len() - 1;
    while seq[j] <= seq[i - 1] {
        j -= 1;
    }
    seq.swap(i - 1, j);
    seq[i..].reverse();
    true
}
