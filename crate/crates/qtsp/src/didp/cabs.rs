//! Complete anytime beam search.
//!
//! Runs repeated beam passes over the decision diagram, keeping at most
//! `width` states per depth level and growing the width geometrically
//! between passes. Each pass starts from scratch at the root: no search
//! information is carried across passes except the incumbent, which later
//! passes use for pruning.
//!
//! A pass is also a bounding device. Every optimal completion must pass
//! through a state the beam either kept (and hence enumerated through to
//! a leaf), width-dropped, or pruned against the incumbent, so the
//! minimum cost-plus-bound among width-dropped states, capped by the
//! incumbent, lower-bounds the optimum. A completed pass that dropped
//! nothing was exhaustive and proves the incumbent optimal. The running
//! maximum of pass bounds converges to the incumbent, at which point the
//! search stops with a proof.

use std::cmp::Ordering;
use std::collections::HashMap;

use crate::error::Result;
use crate::instance::Instance;
use crate::scalar::{total_cmp, Scalar};
use crate::tour::Tour;

use super::{
    bound_tables, dual_bound, expand_into, terminal_cost, AnytimeTrace, BoundTables, Clock,
    CustomerMask, EventKind, SolveOutcome, SolveParams, SolveStatus, State, GAP_TOLERANCE,
};

const NO_PARENT: u32 = u32::MAX;

/// Kept beam node; `via` is the customer whose visit created it.
struct BeamNode<S, M> {
    state: State<M>,
    g: S,
    f: S,
    parent: u32,
    via: u32,
}

/// Merged successor awaiting selection.
struct Candidate<S, M> {
    state: State<M>,
    g: S,
    f: S,
    parent: u32,
    via: u32,
}

/// Why a pass ended early.
enum Interrupt {
    Budget,
    Memory,
}

/// Selection priority: smaller `f` first, then larger `g` (deeper partial
/// cost), then the smaller state key. States within a layer are unique,
/// so this is a total order and selection is deterministic.
fn priority<S: Scalar, M: CustomerMask>(a: &Candidate<S, M>, b: &Candidate<S, M>) -> Ordering {
    total_cmp(a.f, b.f)
        .then_with(|| total_cmp(b.g, a.g))
        .then_with(|| a.state.cmp(&b.state))
}

fn reconstruct<S, M>(arena: &[BeamNode<S, M>], parent: u32, via: u32) -> Tour {
    let mut order = vec![via as usize];
    let mut at = parent;
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
    let tables: BoundTables<S> = bound_tables(inst);
    let tolerance = S::from_f64(GAP_TOLERANCE).unwrap_or_else(S::zero);
    let clock = Clock::start(params.virtual_clock);
    let mut trace = AnytimeTrace::new();
    let mut expansions: u64 = 0;

    let root = State::<M>::root(n);
    let root_bound = dual_bound(&tables, &root);
    trace.record(clock.elapsed(0), S::infinity(), root_bound, EventKind::Bound);
    let mut global_dual = root_bound;

    let mut incumbent: Option<(S, Tour)> = None;
    let mut width = params.width_init;
    let mut memory_out = false;

    let mut arena: Vec<BeamNode<S, M>> = Vec::new();
    let mut layer: Vec<u32> = Vec::new();
    let mut merge: HashMap<State<M>, (S, u32, u32)> = HashMap::new();
    let mut ordered: Vec<State<M>> = Vec::new();
    let mut candidates: Vec<Candidate<S, M>> = Vec::new();
    let mut successors: Vec<(State<M>, S)> = Vec::new();

    let status = 'passes: loop {
        arena.clear();
        arena.push(BeamNode {
            state: root,
            g: S::zero(),
            f: root_bound,
            parent: NO_PARENT,
            via: 0,
        });
        layer.clear();
        layer.push(0);

        // Cheapest f among states this pass width-dropped.
        let mut dropped_min: Option<S> = None;
        let mut interrupt: Option<(Interrupt, Option<S>)> = None;

        'layers: for depth in 1..n {
            merge.clear();
            ordered.clear();
            for (at, &node_idx) in layer.iter().enumerate() {
                let over_budget = params
                    .expansion_limit
                    .is_some_and(|limit| expansions >= limit)
                    || params
                        .time_limit
                        .is_some_and(|limit| clock.elapsed(expansions) >= limit);
                if over_budget {
                    // Everything not yet expanded or selected stays alive
                    // and its f still bounds completions through it.
                    let mut alive: Option<S> = None;
                    for &idx in &layer[at..] {
                        let f = arena[idx as usize].f;
                        alive = Some(alive.map_or(f, |a| a.min(f)));
                    }
                    for (state, &(g, _, _)) in merge.iter() {
                        let f = g + dual_bound(&tables, state);
                        alive = Some(alive.map_or(f, |a| a.min(f)));
                    }
                    interrupt = Some((Interrupt::Budget, alive));
                    break 'layers;
                }
                expansions += 1;
                successors.clear();
                expand_into(inst, &arena[node_idx as usize].state, &mut successors);
                let g_here = arena[node_idx as usize].g;
                for &(next, edge) in &successors {
                    let g_next = g_here + edge;
                    match merge.entry(next) {
                        std::collections::hash_map::Entry::Vacant(slot) => {
                            slot.insert((g_next, node_idx, next.current));
                            ordered.push(next);
                        }
                        std::collections::hash_map::Entry::Occupied(mut seen) => {
                            if total_cmp(g_next, seen.get().0) == Ordering::Less {
                                seen.insert((g_next, node_idx, next.current));
                            }
                        }
                    }
                }
            }

            candidates.clear();
            for state in &ordered {
                let &(g, parent, via) = merge.get(state).expect("merged state");
                let f = g + dual_bound(&tables, state);
                candidates.push(Candidate {
                    state: *state,
                    g,
                    f,
                    parent,
                    via,
                });
            }
            if params.prune {
                if let Some((inc, _)) = &incumbent {
                    let inc = *inc;
                    candidates.retain(|c| c.f < inc);
                }
            }
            candidates.sort_unstable_by(priority);

            if depth == n - 1 {
                // Final decision layer: every candidate is terminal, and
                // there are at most as many as the previous layer kept,
                // so all of them are completed rather than beam-cut.
                for c in &candidates {
                    let closing = terminal_cost(inst, &c.state).expect("terminal layer");
                    // Path-order sum as a cheap filter; the stored value
                    // is the canonical rescore of the tour, matching
                    // `tour_cost` bit for bit.
                    let rough = c.g + closing;
                    if incumbent.as_ref().map_or(true, |(best, _)| rough < *best) {
                        let tour = reconstruct(&arena, c.parent, c.via);
                        let total = inst.tour_cost(&tour).expect("search tours are valid");
                        if incumbent.as_ref().map_or(true, |(best, _)| total < *best) {
                            incumbent = Some((total, tour));
                            trace.record(
                                clock.elapsed(expansions),
                                total,
                                global_dual,
                                EventKind::Incumbent,
                            );
                        }
                    }
                }
            } else {
                if candidates.len() > width {
                    let cut = candidates[width].f;
                    dropped_min = Some(dropped_min.map_or(cut, |d| d.min(cut)));
                    candidates.truncate(width);
                }
                if candidates.is_empty() {
                    // Everything left was pruned by the incumbent; the
                    // pass is exhausted below this depth.
                    break 'layers;
                }
                if let Some(cap) = params.node_cap {
                    if arena.len() + candidates.len() > cap {
                        let mut alive: Option<S> = None;
                        for c in &candidates {
                            alive = Some(alive.map_or(c.f, |a| a.min(c.f)));
                        }
                        interrupt = Some((Interrupt::Memory, alive));
                        break 'layers;
                    }
                }
                layer.clear();
                for c in &candidates {
                    let idx = arena.len() as u32;
                    arena.push(BeamNode {
                        state: c.state,
                        g: c.g,
                        f: c.f,
                        parent: c.parent,
                        via: c.via,
                    });
                    layer.push(idx);
                }
            }
        }

        let incumbent_cost = incumbent.as_ref().map(|(c, _)| *c);
        let pass_bound = match &interrupt {
            None => {
                // A completed pass always reaches leaves (first pass) or
                // runs under an incumbent that pruning preserves.
                debug_assert!(incumbent_cost.is_some());
                let inc = incumbent_cost.unwrap_or_else(S::infinity);
                dropped_min.map_or(inc, |d| d.min(inc))
            }
            Some((_, alive)) => {
                let mut bound = incumbent_cost.unwrap_or_else(S::infinity);
                if let Some(d) = dropped_min {
                    bound = bound.min(d);
                }
                if let Some(a) = *alive {
                    bound = bound.min(a);
                }
                bound
            }
        };
        if pass_bound > global_dual {
            global_dual = pass_bound;
            trace.record(
                clock.elapsed(expansions),
                incumbent_cost.unwrap_or_else(S::infinity),
                global_dual,
                EventKind::Bound,
            );
        }

        match interrupt {
            Some((Interrupt::Memory, _)) => {
                memory_out = true;
                break 'passes SolveStatus::OutOfBudget;
            }
            Some((Interrupt::Budget, _)) => {
                break 'passes if incumbent.is_some() {
                    SolveStatus::Feasible
                } else {
                    SolveStatus::NoSolution
                };
            }
            None => {
                if let Some(inc) = incumbent_cost {
                    if global_dual >= inc - tolerance {
                        break 'passes SolveStatus::Optimal;
                    }
                }
                width = params.next_width(width);
            }
        }
    };

    let (cost, tour) = match incumbent {
        Some((c, t)) => (Some(c), Some(t)),
        None => (None, None),
    };
    let final_dual = match status {
        SolveStatus::Optimal => global_dual.max(cost.unwrap_or_else(S::infinity)),
        _ => global_dual,
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
    use crate::instance::{distinct_triples, generate_instance, CostKind, CostTensor};
    use crate::oracle::brute_force_optimal;

    #[test]
    fn matches_the_oracle_on_small_instances() {
        for seed in 0..4 {
            let inst = generate_instance(7, seed, CostKind::Angle).unwrap();
            let (_, want) = brute_force_optimal(&inst).unwrap();
            let got = super::run::<f64, u64>(&inst, &SolveParams::default()).unwrap();
            assert_eq!(got.status, SolveStatus::Optimal, "seed {seed}");
            let cost = got.cost.unwrap();
            assert!((cost - want).abs() <= 1e-9, "seed {seed}: {cost} vs {want}");
            let rescored = inst.tour_cost(got.tour.as_ref().unwrap()).unwrap();
            assert!((rescored - cost).abs() <= 1e-9);
            assert_eq!(got.trace.verify_invariants(), Ok(()));
        }
    }

    #[test]
    fn constant_tensor_closes_in_the_first_pass() {
        // Every tour costs the same, so the f of whatever width one drops
        // already equals the incumbent.
        let n = 5;
        let mut costs = CostTensor::new(n);
        for (i, j, k) in distinct_triples(n) {
            costs.set(i, j, k, 1.0);
        }
        let inst: Instance<f64> = Instance::explicit(costs, None).unwrap();
        let out = super::run::<f64, u64>(&inst, &SolveParams::default()).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert_eq!(out.cost, Some(5.0));
        assert_eq!(out.dual_bound, 5.0);
        // Width 1 the whole way: one pass expands one node per layer.
        assert!(out.expansions <= (n as u64), "expansions {}", out.expansions);
    }

    #[test]
    fn first_pass_already_yields_a_tour() {
        let inst = generate_instance(20, 9, CostKind::AngleDistance { rho: 40.0 }).unwrap();
        let out = super::run::<f64, u64>(
            &inst,
            &SolveParams {
                expansion_limit: Some(25),
                ..SolveParams::default()
            },
        )
        .unwrap();
        // Width-1 first pass reaches a leaf within n expansions.
        assert!(out.cost.is_some());
        assert_eq!(out.status, SolveStatus::Feasible);
        assert_eq!(out.trace.verify_invariants(), Ok(()));
    }

    #[test]
    fn budget_before_any_leaf_reports_no_solution() {
        let inst = generate_instance(12, 3, CostKind::Angle).unwrap();
        let out = super::run::<f64, u64>(
            &inst,
            &SolveParams {
                expansion_limit: Some(2),
                ..SolveParams::default()
            },
        )
        .unwrap();
        assert_eq!(out.status, SolveStatus::NoSolution);
        assert_eq!(out.cost, None);
        assert!(out.dual_bound >= 0.0);
    }

    #[test]
    fn node_cap_reports_memory_exhaustion() {
        let inst = generate_instance(30, 4, CostKind::Angle).unwrap();
        let out = super::run::<f64, u64>(
            &inst,
            &SolveParams {
                node_cap: Some(40),
                ..SolveParams::default()
            },
        )
        .unwrap();
        assert_eq!(out.status, SolveStatus::OutOfBudget);
        assert!(out.memory_out);
    }

    #[test]
    fn growing_width_reaches_optimality_with_monotone_trace() {
        let inst = generate_instance(9, 21, CostKind::Angle).unwrap();
        let out = super::run::<f64, u64>(&inst, &SolveParams::default()).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert!((out.cost.unwrap() - out.dual_bound).abs() <= 1e-9);
        assert_eq!(out.trace.verify_invariants(), Ok(()));
        // Bound events record strictly increasing duals.
        let mut last = f64::NEG_INFINITY;
        for e in out.trace.events() {
            assert!(e.dual >= last);
            last = e.dual;
        }
    }

    #[test]
    fn pruning_toggle_agrees_on_the_optimum() {
        let inst = generate_instance(7, 33, CostKind::AngleDistance { rho: 40.0 }).unwrap();
        let with = super::run::<f64, u64>(&inst, &SolveParams::default()).unwrap();
        let without = super::run::<f64, u64>(
            &inst,
            &SolveParams {
                prune: false,
                ..SolveParams::default()
            },
        )
        .unwrap();
        let (a, b) = (with.cost.unwrap(), without.cost.unwrap());
        assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
        assert_eq!(with.status, SolveStatus::Optimal);
        assert_eq!(without.status, SolveStatus::Optimal);
    }
}
