//! Dynamic-programming formulation of the tour problem and its solvers.
//!
//! A search state is `(unvisited, prev, current, first)`: the set of
//! customers still to visit, the two most recently visited nodes, and the
//! first customer the tour committed to. Because a cost term spans three
//! consecutive nodes, `prev` and `current` determine the charge for the
//! next move, and `first` is needed to price the two terms that wrap
//! around the depot when the cycle closes.
//!
//! From the root `({1,..,n-1}, 0, 0, 0)` the first move selects a starting
//! customer at zero cost (its turn is charged later); every later move to
//! `k` costs `c[prev][current][k]`; once nothing is unvisited the cycle
//! closes for `c[current][0][first] + c[prev][current][0]`.
//!
//! Two solvers share this formulation: [`solve_exact`], a memoized
//! best-first search that proves optimality, and [`solve_cabs`], an
//! anytime beam search with geometrically growing width that converges to
//! a proof. Both report progress through [`AnytimeTrace`] and respect the
//! budgets in [`SolveParams`].

pub mod cabs;
pub mod exact;
pub mod mask;
pub mod trace;

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::scalar::Scalar;
use crate::tour::Tour;

pub use mask::{CustomerMask, MaskIter, Wide256};
pub use trace::{AnytimeTrace, EventKind, SolveStatus, TraceEvent};

pub(crate) use trace::Clock;

/// Absolute tolerance for closing the primal/dual gap.
pub const GAP_TOLERANCE: f64 = 1e-9;

/// Search state; see the module docs for the encoding.
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct State<M> {
    pub unvisited: M,
    pub prev: u32,
    pub current: u32,
    pub first: u32,
}

impl<M: CustomerMask> State<M> {
    pub fn root(n: usize) -> Self {
        State {
            unvisited: M::full(n),
            prev: 0,
            current: 0,
            first: 0,
        }
    }

    /// Terminal states have visited everyone and await the closing move.
    pub fn is_terminal(&self) -> bool {
        self.unvisited.is_empty() && self.current != 0
    }
}

/// Per-node minima over all cost entries, grouped by which position of
/// the triple the node occupies.
#[derive(Clone, Debug)]
pub struct BoundTables<S> {
    /// `in_min[k]`: cheapest entry with `k` as the node being entered.
    pub in_min: Vec<S>,
    /// `mid_min[k]`: cheapest entry with `k` as the middle node.
    pub mid_min: Vec<S>,
    /// `out_min[k]`: cheapest entry with `k` as the node being left.
    pub out_min: Vec<S>,
}

/// Builds the [`BoundTables`] in one pass over the tensor.
pub fn bound_tables<S: Scalar>(inst: &Instance<S>) -> BoundTables<S> {
    let n = inst.n();
    let costs = inst.costs();
    let mut tables = BoundTables {
        in_min: vec![S::infinity(); n],
        mid_min: vec![S::infinity(); n],
        out_min: vec![S::infinity(); n],
    };
    for (i, j, k) in crate::instance::distinct_triples(n) {
        let c = costs.get(i, j, k);
        tables.out_min[i] = tables.out_min[i].min(c);
        tables.mid_min[j] = tables.mid_min[j].min(c);
        tables.in_min[k] = tables.in_min[k].min(c);
    }
    tables
}

/// Admissible lower bound on the cost to complete `state`.
///
/// Every cost term still to be paid enters some node of
/// `unvisited ∪ {first, 0}`, has its middle at some node of
/// `unvisited ∪ {current, 0}`, and leaves some node of
/// `unvisited ∪ {prev, current}`; each set contributes each member at
/// most once, so summing the per-node minima along any one grouping
/// undercounts. The bound takes the best of the three groupings. It is
/// also consistent: moving to `k` removes exactly one summand from each
/// grouping, and that summand never exceeds the move's cost.
pub fn dual_bound<S: Scalar, M: CustomerMask>(tables: &BoundTables<S>, state: &State<M>) -> S {
    let prev = state.prev as usize;
    let current = state.current as usize;
    let first = state.first as usize;

    let mut enter = S::zero();
    let mut middle = S::zero();
    let mut leave = S::zero();
    for k in state.unvisited.iter() {
        enter += tables.in_min[k];
        middle += tables.mid_min[k];
        leave += tables.out_min[k];
    }
    enter += tables.in_min[first];
    if first != 0 {
        enter += tables.in_min[0];
    }
    middle += tables.mid_min[current];
    if current != 0 {
        middle += tables.mid_min[0];
    }
    leave += tables.out_min[prev];
    if prev != current {
        leave += tables.out_min[current];
    }
    enter.max(middle).max(leave)
}

/// Appends each successor `(state, move cost)` of `state`, in increasing
/// order of the customer chosen. Terminal states get none; close them
/// with [`terminal_cost`].
pub(crate) fn expand_into<S: Scalar, M: CustomerMask>(
    inst: &Instance<S>,
    state: &State<M>,
    out: &mut Vec<(State<M>, S)>,
) {
    let costs = inst.costs();
    for k in state.unvisited.iter() {
        let rest = state.unvisited.remove(k);
        if state.current == 0 {
            out.push((
                State {
                    unvisited: rest,
                    prev: 0,
                    current: k as u32,
                    first: k as u32,
                },
                S::zero(),
            ));
        } else {
            out.push((
                State {
                    unvisited: rest,
                    prev: state.current,
                    current: k as u32,
                    first: state.first,
                },
                costs.get(state.prev as usize, state.current as usize, k),
            ));
        }
    }
}

/// Successors of `state` with their move costs, in increasing order of
/// the customer chosen.
pub fn expand<S: Scalar, M: CustomerMask>(
    inst: &Instance<S>,
    state: &State<M>,
) -> Vec<(State<M>, S)> {
    let mut out = Vec::with_capacity(state.unvisited.count() as usize);
    expand_into(inst, state, &mut out);
    out
}

/// Cost of the closing move from a terminal state, `None` otherwise.
pub fn terminal_cost<S: Scalar, M: CustomerMask>(inst: &Instance<S>, state: &State<M>) -> Option<S> {
    if !state.is_terminal() {
        return None;
    }
    let costs = inst.costs();
    let prev = state.prev as usize;
    let current = state.current as usize;
    let first = state.first as usize;
    Some(costs.get(current, 0, first) + costs.get(prev, current, 0))
}

/// Budgets and knobs shared by both solvers.
///
/// `width_init` and `growth` only affect [`solve_cabs`]. With
/// `virtual_clock` set, elapsed time is derived from the expansion count
/// (1 microsecond each), which makes runs, traces, and time-budget cuts
/// byte-for-byte reproducible.
#[derive(Clone, Debug)]
pub struct SolveParams {
    /// Wall-clock (or virtual) limit in seconds.
    pub time_limit: Option<f64>,
    /// Maximum number of state expansions.
    pub expansion_limit: Option<u64>,
    /// Maximum number of stored search nodes before giving up.
    pub node_cap: Option<usize>,
    /// Disabling pruning forces exhaustive exploration (for audits).
    pub prune: bool,
    /// Beam width of the first pass.
    pub width_init: usize,
    /// Geometric width growth factor between passes.
    pub growth: f64,
    pub virtual_clock: bool,
}

impl Default for SolveParams {
    fn default() -> Self {
        SolveParams {
            time_limit: None,
            expansion_limit: None,
            node_cap: None,
            prune: true,
            width_init: 1,
            growth: 2.0,
            virtual_clock: false,
        }
    }
}

impl SolveParams {
    fn validate(&self) -> Result<()> {
        if self.width_init == 0 {
            return Err(Error::InvalidArgument("beam width must be at least 1".into()));
        }
        if !(self.growth >= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "beam growth factor must be at least 1, got {}",
                self.growth
            )));
        }
        if let Some(t) = self.time_limit {
            if !(t >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "time limit must be nonnegative, got {t}"
                )));
            }
        }
        if self.node_cap == Some(0) {
            return Err(Error::InvalidArgument("node cap must be at least 1".into()));
        }
        Ok(())
    }

    fn next_width(&self, width: usize) -> usize {
        let grown = (width as f64 * self.growth).ceil() as usize;
        grown.max(width + 1)
    }
}

/// Result of a solve run.
#[derive(Clone, Debug)]
pub struct SolveOutcome<S> {
    pub status: SolveStatus,
    /// Best tour found, if any.
    pub tour: Option<Tour>,
    /// Cost of `tour`.
    pub cost: Option<S>,
    /// Best proven lower bound on the optimum.
    pub dual_bound: S,
    pub expansions: u64,
    pub elapsed_s: f64,
    /// True when the run stopped on the node cap rather than a budget.
    pub memory_out: bool,
    pub trace: AnytimeTrace<S>,
}

/// Memoized best-first search; proves optimality when run to completion.
///
/// States are deduplicated by cheapest known arrival cost and explored in
/// order of cost-plus-bound, with ties broken deterministically. When a
/// budget or the node cap stops the run early, the best incumbent and
/// the proven bound so far are still returned, with status
/// [`SolveStatus::OutOfBudget`].
pub fn solve_exact<S: Scalar>(inst: &Instance<S>, params: &SolveParams) -> Result<SolveOutcome<S>> {
    params.validate()?;
    if inst.n() <= u64::CAPACITY {
        exact::run::<S, u64>(inst, params)
    } else {
        exact::run::<S, Wide256>(inst, params)
    }
}

/// Complete anytime beam search: repeated beam passes with geometrically
/// growing width, keeping the best `width` states per depth level.
///
/// Each pass reports any improved tours it completes; the minimum
/// cost-plus-bound among states the width limit dropped is a valid lower
/// bound for the pass, and the run stops with a proof once that bound
/// meets the incumbent (in particular, a pass that drops nothing is
/// exhaustive). Budgets may stop the run mid-pass with the incumbent.
pub fn solve_cabs<S: Scalar>(inst: &Instance<S>, params: &SolveParams) -> Result<SolveOutcome<S>> {
    params.validate()?;
    if inst.n() <= u64::CAPACITY {
        cabs::run::<S, u64>(inst, params)
    } else {
        cabs::run::<S, Wide256>(inst, params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{distinct_triples, CostKind, CostTensor};

    fn tensor_from(n: usize, f: impl Fn(usize, usize, usize) -> f64) -> Instance<f64> {
        let mut costs = CostTensor::new(n);
        for (i, j, k) in distinct_triples(n) {
            costs.set(i, j, k, f(i, j, k));
        }
        Instance::explicit(costs, None).unwrap()
    }

    #[test]
    fn root_and_terminal_shapes() {
        let root: State<u64> = State::root(5);
        assert_eq!(root.unvisited.iter().collect::<Vec<_>>(), vec![1, 2, 3, 4]);
        assert!(!root.is_terminal());

        let terminal: State<u64> = State {
            unvisited: 0,
            prev: 2,
            current: 3,
            first: 1,
        };
        assert!(terminal.is_terminal());
    }

    #[test]
    fn first_moves_are_free_and_commit_the_start() {
        let inst = tensor_from(4, |i, j, k| (100 * i + 10 * j + k) as f64);
        let root: State<u64> = State::root(4);
        let succ = expand(&inst, &root);
        assert_eq!(succ.len(), 3);
        for (idx, (s, cost)) in succ.iter().enumerate() {
            assert_eq!(*cost, 0.0);
            assert_eq!(s.current as usize, idx + 1);
            assert_eq!(s.first, s.current);
            assert_eq!(s.prev, 0);
            assert!(!s.unvisited.contains(s.current as usize));
        }
    }

    #[test]
    fn mid_tour_moves_charge_the_turn() {
        let inst = tensor_from(5, |i, j, k| (100 * i + 10 * j + k) as f64);
        let state: State<u64> = State {
            unvisited: u64::empty().insert(2).insert(4),
            prev: 1,
            current: 3,
            first: 1,
        };
        let succ = expand(&inst, &state);
        assert_eq!(succ.len(), 2);
        assert_eq!(succ[0].1, 132.0);
        assert_eq!(succ[1].1, 134.0);
        assert_eq!(succ[0].0.prev, 3);
        assert_eq!(succ[0].0.first, 1);
        assert_eq!(terminal_cost(&inst, &state), None);
    }

    #[test]
    fn closing_move_prices_both_wraparound_terms() {
        let inst = tensor_from(4, |i, j, k| (100 * i + 10 * j + k) as f64);
        let state: State<u64> = State {
            unvisited: 0,
            prev: 2,
            current: 3,
            first: 1,
        };
        // c[3][0][1] + c[2][3][0]
        assert_eq!(terminal_cost(&inst, &state), Some(301.0 + 230.0));
    }

    #[test]
    fn bound_tables_take_positionwise_minima() {
        let inst = tensor_from(4, |i, j, k| (100 * i + 10 * j + k) as f64);
        let tables = bound_tables(&inst);
        // Entering 0 cheapest from (1,2,0); middle 0 cheapest from (1,0,2);
        // leaving 0 cheapest towards (0,1,2).
        assert_eq!(tables.in_min[0], 120.0);
        assert_eq!(tables.mid_min[0], 102.0);
        assert_eq!(tables.out_min[0], 12.0);
        assert_eq!(tables.in_min[3], 13.0);
        assert_eq!(tables.mid_min[3], 31.0);
        assert_eq!(tables.out_min[3], 301.0);
    }

    #[test]
    fn dual_bound_sums_the_documented_sets() {
        // Constant tensor: each grouping sums one constant per member.
        let inst = tensor_from(6, |_, _, _| 2.0);
        let tables = bound_tables(&inst);
        let state: State<u64> = State {
            unvisited: u64::empty().insert(3).insert(5),
            prev: 1,
            current: 2,
            first: 4,
        };
        // Four members in every grouping.
        assert_eq!(dual_bound(&tables, &state), 8.0);

        let root: State<u64> = State::root(6);
        // enter: {1..5} ∪ {0}; middle: same; leave: {1..5} ∪ {0} with
        // prev == current collapsing to one depot term.
        assert_eq!(dual_bound(&tables, &root), 12.0);
    }

    #[test]
    fn dual_bound_prefers_the_tightest_grouping() {
        // Make entering node 1 expensive: any grouping counting "enter 1"
        // dominates when 1 is unvisited.
        let inst = tensor_from(4, |_, _, k| if k == 1 { 50.0 } else { 1.0 });
        let tables = bound_tables(&inst);
        let state: State<u64> = State {
            unvisited: u64::empty().insert(1),
            prev: 2,
            current: 3,
            first: 2,
        };
        // enter: {1, 2, 0} = 50 + 1 + 1; middle/leave stay at 3.
        assert_eq!(dual_bound(&tables, &state), 52.0);
    }

    #[test]
    fn params_validation_rejects_nonsense() {
        let mut p = SolveParams::default();
        p.width_init = 0;
        assert!(p.validate().is_err());
        let mut p = SolveParams::default();
        p.growth = 0.5;
        assert!(p.validate().is_err());
        let mut p = SolveParams::default();
        p.time_limit = Some(-1.0);
        assert!(p.validate().is_err());
        let mut p = SolveParams::default();
        p.node_cap = Some(0);
        assert!(p.validate().is_err());
        assert!(SolveParams::default().validate().is_ok());
    }

    #[test]
    fn width_schedule_grows_geometrically() {
        let params = SolveParams::default();
        assert_eq!(params.next_width(1), 2);
        assert_eq!(params.next_width(2), 4);
        assert_eq!(params.next_width(5), 10);
        let mut slow = SolveParams::default();
        slow.growth = 1.0;
        assert_eq!(slow.next_width(1), 2);
        assert_eq!(slow.next_width(7), 8);
    }

    #[test]
    fn wide_mask_solver_dispatch_matches_narrow() {
        // Same instance solved through both mask widths must agree.
        let inst: Instance<f64> = crate::instance::generate_instance(7, 5, CostKind::Angle).unwrap();
        let params = SolveParams::default();
        let narrow = exact::run::<f64, u64>(&inst, &params).unwrap();
        let wide = exact::run::<f64, Wide256>(&inst, &params).unwrap();
        assert_eq!(narrow.cost, wide.cost);
        assert_eq!(narrow.tour.unwrap().order(), wide.tour.unwrap().order());
    }
}
