//! Memoized best-first search with the consistent dual bound.
//!
//! Classic A* over the decision diagram: states are deduplicated by their
//! cheapest known arrival cost, the open list is ordered by cost plus
//! bound, and the run closes as soon as the cheapest open node can no
//! longer beat the incumbent. Ties on the open list break toward larger
//! arrival cost (deeper nodes first), then toward the smaller state key,
//! so the exploration order is fully deterministic.

use std::cmp::Ordering;
use std::collections::hash_map::Entry;
use std::collections::{BinaryHeap, HashMap};

use crate::error::Result;
use crate::instance::Instance;
use crate::scalar::{total_cmp, Scalar};
use crate::tour::Tour;

use super::{
    bound_tables, dual_bound, expand_into, terminal_cost, AnytimeTrace, Clock, CustomerMask,
    EventKind, SolveOutcome, SolveParams, SolveStatus, State, GAP_TOLERANCE,
};

const NO_PARENT: u32 = u32::MAX;

/// One stored search node; `via` is the customer whose visit created it.
/// The state itself lives as the key of the dedup map.
struct Node<S> {
    g: S,
    parent: u32,
    via: u32,
}

struct OpenEntry<S, M> {
    f: S,
    g: S,
    state: State<M>,
    idx: u32,
}

impl<S: Scalar, M: CustomerMask> OpenEntry<S, M> {
    /// Heap priority: smallest `f`, then largest `g`, then smallest state
    /// key. `BinaryHeap` pops its maximum, so "pops first" means
    /// "compares greater" here.
    fn priority(&self, other: &Self) -> Ordering {
        total_cmp(other.f, self.f)
            .then_with(|| total_cmp(self.g, other.g))
            .then_with(|| other.state.cmp(&self.state))
    }
}

impl<S: Scalar, M: CustomerMask> Ord for OpenEntry<S, M> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority(other)
    }
}

impl<S: Scalar, M: CustomerMask> PartialOrd for OpenEntry<S, M> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.priority(other))
    }
}

impl<S: Scalar, M: CustomerMask> PartialEq for OpenEntry<S, M> {
    fn eq(&self, other: &Self) -> bool {
        self.priority(other) == Ordering::Equal
    }
}

impl<S: Scalar, M: CustomerMask> Eq for OpenEntry<S, M> {}

/// Rebuilds the depot-first visiting order of the node at `idx`.
fn reconstruct<S>(arena: &[Node<S>], idx: u32) -> Tour {
    let mut order = Vec::new();
    let mut at = idx;
    while at != NO_PARENT {
        let node = &arena[at as usize];
        if node.parent == NO_PARENT {
            break;
        }
        order.push(node.via as usize);
        at = node.parent;
    }
    order.push(0);
    order.reverse();
    Tour::new(order)
}

pub(crate) fn run<S: Scalar, M: CustomerMask>(
    inst: &Instance<S>,
    params: &SolveParams,
) -> Result<SolveOutcome<S>> {
    let n = inst.n();
    let tables = bound_tables(inst);
    let tolerance = S::from_f64(GAP_TOLERANCE).unwrap_or_else(S::zero);
    let clock = Clock::start(params.virtual_clock);
    let mut trace = AnytimeTrace::new();
    let mut expansions: u64 = 0;

    let root = State::<M>::root(n);
    let root_bound = dual_bound(&tables, &root);
    trace.record(clock.elapsed(0), S::infinity(), root_bound, EventKind::Bound);
    let mut proven_dual = root_bound;

    let mut arena: Vec<Node<S>> = vec![Node {
        g: S::zero(),
        parent: NO_PARENT,
        via: 0,
    }];
    let mut best: HashMap<State<M>, (S, u32)> = HashMap::new();
    best.insert(root, (S::zero(), 0));
    let mut heap: BinaryHeap<OpenEntry<S, M>> = BinaryHeap::new();
    heap.push(OpenEntry {
        f: root_bound,
        g: S::zero(),
        state: root,
        idx: 0,
    });

    let mut incumbent: Option<(S, Tour)> = None;
    let mut stopped = false;
    let mut memory_out = false;
    let mut successors: Vec<(State<M>, S)> = Vec::new();

    'search: while let Some(open) = heap.pop() {
        if let Some(&(g_best, _)) = best.get(&open.state) {
            if total_cmp(open.g, g_best) == Ordering::Greater {
                continue; // superseded by a cheaper arrival
            }
        }
        let incumbent_cost = incumbent.as_ref().map(|(c, _)| *c);

        if params.prune {
            if let Some(inc) = incumbent_cost {
                if open.f >= inc - tolerance {
                    break; // nothing open can beat the incumbent
                }
            }
        }
        if let Some(limit) = params.expansion_limit {
            if expansions >= limit {
                stopped = true;
            }
        }
        if let Some(limit) = params.time_limit {
            if clock.elapsed(expansions) >= limit {
                stopped = true;
            }
        }
        if stopped {
            proven_dual = proven_dual.max(open.f.min(incumbent_cost.unwrap_or_else(S::infinity)));
            break;
        }
        expansions += 1;
        proven_dual = proven_dual.max(open.f.min(incumbent_cost.unwrap_or_else(S::infinity)));

        if let Some(closing) = terminal_cost(inst, &open.state) {
            // The path-order sum filters cheaply; the stored value is the
            // canonical rescore of the tour, so reported costs match
            // `tour_cost` (and the model checkers) bit for bit.
            let rough = open.g + closing;
            if incumbent_cost.map_or(true, |c| rough < c) {
                let tour = reconstruct(&arena, open.idx);
                let total = inst.tour_cost(&tour).expect("search tours are valid");
                if incumbent_cost.map_or(true, |c| total < c) {
                    incumbent = Some((total, tour));
                    trace.record(
                        clock.elapsed(expansions),
                        total,
                        proven_dual,
                        EventKind::Incumbent,
                    );
                }
            }
            continue;
        }

        successors.clear();
        expand_into(inst, &open.state, &mut successors);
        for &(next, edge) in &successors {
            let g_next = open.g + edge;
            let f_next = g_next + dual_bound(&tables, &next);
            if params.prune {
                if let Some((inc, _)) = &incumbent {
                    if f_next >= *inc {
                        continue;
                    }
                }
            }
            match best.entry(next) {
                Entry::Occupied(mut seen) => {
                    let (g_old, idx) = *seen.get();
                    if total_cmp(g_next, g_old) == Ordering::Less {
                        seen.insert((g_next, idx));
                        let node = &mut arena[idx as usize];
                        node.g = g_next;
                        node.parent = open.idx;
                        node.via = next.current;
                        heap.push(OpenEntry {
                            f: f_next,
                            g: g_next,
                            state: next,
                            idx,
                        });
                    }
                }
                Entry::Vacant(slot) => {
                    if params.node_cap.is_some_and(|cap| arena.len() >= cap) {
                        memory_out = true;
                        stopped = true;
                        break 'search;
                    }
                    let idx = arena.len() as u32;
                    arena.push(Node {
                        g: g_next,
                        parent: open.idx,
                        via: next.current,
                    });
                    slot.insert((g_next, idx));
                    heap.push(OpenEntry {
                        f: f_next,
                        g: g_next,
                        state: next,
                        idx,
                    });
                }
            }
        }
    }

    let (cost, tour) = match incumbent {
        Some((c, t)) => (Some(c), Some(t)),
        None => (None, None),
    };
    let (status, final_dual) = if stopped {
        // A budget stop with nothing in hand is a plain failure to find a
        // tour; a stop holding an incumbent (or tripping the node cap)
        // reports the budget as the reason the gap stayed open.
        if memory_out || cost.is_some() {
            (SolveStatus::OutOfBudget, proven_dual)
        } else {
            (SolveStatus::NoSolution, proven_dual)
        }
    } else if let Some(c) = cost {
        // Closed the gap, or drained the open list: both are proofs.
        (SolveStatus::Optimal, proven_dual.max(c))
    } else {
        (SolveStatus::NoSolution, proven_dual)
    };
    let elapsed_s = clock.elapsed(expansions);
    trace.finish(
        elapsed_s,
        cost.unwrap_or_else(S::infinity),
        final_dual,
        status,
    );
    Ok(SolveOutcome {
        status,
        tour,
        cost,
        dual_bound: final_dual,
        expansions,
        elapsed_s,
        memory_out,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_instance, CostKind};
    use crate::oracle::brute_force_optimal;

    fn solved(n: usize, seed: u64, kind: CostKind<f64>) -> SolveOutcome<f64> {
        let inst = generate_instance(n, seed, kind).unwrap();
        super::run::<f64, u64>(&inst, &SolveParams::default()).unwrap()
    }

    #[test]
    fn matches_the_oracle_on_small_instances() {
        for seed in 0..4 {
            let inst = generate_instance(7, seed, CostKind::Angle).unwrap();
            let (_, want) = brute_force_optimal(&inst).unwrap();
            let got = super::run::<f64, u64>(&inst, &SolveParams::default()).unwrap();
            assert_eq!(got.status, SolveStatus::Optimal);
            let cost = got.cost.unwrap();
            assert!((cost - want).abs() <= 1e-9, "seed {seed}: {cost} vs {want}");
            // The reported tour must re-score to the reported cost.
            let rescored = inst.tour_cost(got.tour.as_ref().unwrap()).unwrap();
            assert!((rescored - cost).abs() <= 1e-9);
        }
    }

    #[test]
    fn optimal_runs_close_the_gap() {
        let out = solved(8, 11, CostKind::AngleDistance { rho: 40.0 });
        assert_eq!(out.status, SolveStatus::Optimal);
        assert!((out.cost.unwrap() - out.dual_bound).abs() <= 1e-9);
        assert_eq!(out.trace.verify_invariants(), Ok(()));
    }

    #[test]
    fn disabling_pruning_changes_nothing_but_work() {
        let inst = generate_instance(7, 2, CostKind::Angle).unwrap();
        let pruned = super::run::<f64, u64>(&inst, &SolveParams::default()).unwrap();
        let exhaustive = super::run::<f64, u64>(
            &inst,
            &SolveParams {
                prune: false,
                ..SolveParams::default()
            },
        )
        .unwrap();
        // Agreement is at the crate tolerance: exact-threshold pruning may
        // cut a tie whose canonical rescore is an ulp better.
        let (a, b) = (pruned.cost.unwrap(), exhaustive.cost.unwrap());
        assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
        assert!(exhaustive.expansions >= pruned.expansions);
    }

    #[test]
    fn expansion_budget_stops_the_run() {
        // Five expansions of a nine-customer search cannot reach a leaf,
        // so the run stops empty-handed.
        let inst = generate_instance(9, 1, CostKind::Angle).unwrap();
        let out = super::run::<f64, u64>(
            &inst,
            &SolveParams {
                expansion_limit: Some(5),
                ..SolveParams::default()
            },
        )
        .unwrap();
        assert_eq!(out.status, SolveStatus::NoSolution);
        assert_eq!(out.cost, None);
        assert_eq!(out.expansions, 5);
        assert!(!out.memory_out);
        assert!(out.dual_bound.is_finite());
    }

    #[test]
    fn budget_with_an_incumbent_reports_out_of_budget() {
        let inst = generate_instance(8, 3, CostKind::Angle).unwrap();
        let full = super::run::<f64, u64>(
            &inst,
            &SolveParams {
                virtual_clock: true,
                ..SolveParams::default()
            },
        )
        .unwrap();
        assert_eq!(full.status, SolveStatus::Optimal);
        // Replay with the budget cut one expansion short of closure; the
        // first incumbent arrives earlier, so the cut run holds a tour.
        let first_leaf = full
            .trace
            .events()
            .iter()
            .find(|e| e.kind == EventKind::Incumbent)
            .map(|e| (e.elapsed_s / 1e-6).round() as u64)
            .expect("an optimal run records an incumbent");
        assert!(first_leaf < full.expansions);
        let cut = super::run::<f64, u64>(
            &inst,
            &SolveParams {
                expansion_limit: Some(full.expansions - 1),
                virtual_clock: true,
                ..SolveParams::default()
            },
        )
        .unwrap();
        assert_eq!(cut.status, SolveStatus::OutOfBudget);
        assert!(cut.cost.is_some());
        assert!(!cut.memory_out);
    }

    #[test]
    fn node_cap_reports_memory_exhaustion() {
        let inst = generate_instance(9, 1, CostKind::Angle).unwrap();
        let out = super::run::<f64, u64>(
            &inst,
            &SolveParams {
                node_cap: Some(20),
                ..SolveParams::default()
            },
        )
        .unwrap();
        assert_eq!(out.status, SolveStatus::OutOfBudget);
        assert!(out.memory_out);
    }

    #[test]
    fn zero_time_budget_is_graceful() {
        let inst = generate_instance(6, 0, CostKind::Angle).unwrap();
        let out = super::run::<f64, u64>(
            &inst,
            &SolveParams {
                time_limit: Some(0.0),
                ..SolveParams::default()
            },
        )
        .unwrap();
        assert_eq!(out.status, SolveStatus::NoSolution);
        assert_eq!(out.cost, None);
        assert_eq!(out.expansions, 0);
    }

    #[test]
    fn reconstruction_follows_parent_chain() {
        let arena = vec![
            Node::<f64> {
                g: 0.0,
                parent: NO_PARENT,
                via: 0,
            },
            Node {
                g: 0.0,
                parent: 0,
                via: 2,
            },
            Node {
                g: 1.0,
                parent: 1,
                via: 3,
            },
        ];
        assert_eq!(reconstruct(&arena, 2).order(), &[0, 2, 3]);
    }
}
