//! Mathematical-programming views of an instance.
//!
//! [`lp::export_milp`] and [`lp::export_miqp`] render LP-format text for
//! external MILP/MIQP solvers; [`cp::export_cp`] renders a small
//! constraint-model format. Every export comes with a tab-separated
//! variable manifest so downstream tooling can map names back to indices.
//!
//! The same constraints are also evaluated in process:
//! [`check_milp`] scores an explicit variable assignment against the
//! linearized model, [`eval_miqp_objective`] scores the quadratic
//! objective, and [`eval_cp`] scores a successor-free permutation model.
//! All evaluators accumulate cost terms over index triples in ascending
//! `(i, j, k)` order, exactly like [`Instance::tour_cost`], so objective
//! values of equivalent encodings agree bit for bit.

pub mod cp;
pub mod lp;

use std::fmt;

use crate::error::{Error, Result};
use crate::instance::{distinct_triples, Instance};
use crate::scalar::Scalar;
use crate::tour::Tour;

pub use cp::{export_cp, parse_cp_model, CpModel};
pub use lp::{evaluate_lp, export_milp, export_miqp, parse_lp, LpEvaluation, LpModel};

/// Exported model text plus its variable manifest
/// (`name<TAB>kind<TAB>indices` rows).
#[derive(Clone, Debug)]
pub struct ModelText {
    pub model: String,
    pub manifest: String,
}

/// Subtour-elimination family used by the linearized model.
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum SubtourKind {
    /// Desrochers-Laporte lifted ordering inequalities (the default).
    Dl,
    /// Plain Miller-Tucker-Zemlin ordering inequalities.
    Mtz,
    /// Single-commodity flow with continuous arc variables.
    Flow,
}

impl SubtourKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SubtourKind::Dl => "dl",
            SubtourKind::Mtz => "mtz",
            SubtourKind::Flow => "flow",
        }
    }
}

impl fmt::Display for SubtourKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SubtourKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dl" => Ok(SubtourKind::Dl),
            "mtz" => Ok(SubtourKind::Mtz),
            "flow" => Ok(SubtourKind::Flow),
            other => Err(Error::InvalidArgument(format!(
                "unknown subtour formulation {other:?}, expected dl, mtz, or flow"
            ))),
        }
    }
}

/// Explicit values for the linearized model's variables.
///
/// `x[i][j]` are arc indicators, `y[i][j][k]` are consecutive-pair
/// indicators, and `u[i]` are ordering positions (`u[0]` is unused and
/// held at zero). Diagonal and non-distinct entries exist in storage but
/// are ignored by every consumer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MilpAssignment {
    n: usize,
    x: Vec<bool>,
    y: Vec<bool>,
    u: Vec<i64>,
}

impl MilpAssignment {
    /// All-zero assignment over `n` nodes.
    pub fn new(n: usize) -> Self {
        MilpAssignment {
            n,
            x: vec![false; n * n],
            y: vec![false; n * n * n],
            u: vec![0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x(&self, i: usize, j: usize) -> bool {
        self.x[i * self.n + j]
    }

    pub fn set_x(&mut self, i: usize, j: usize, value: bool) {
        debug_assert_ne!(i, j);
        self.x[i * self.n + j] = value;
    }

    pub fn y(&self, i: usize, j: usize, k: usize) -> bool {
        self.y[(i * self.n + j) * self.n + k]
    }

    pub fn set_y(&mut self, i: usize, j: usize, k: usize, value: bool) {
        self.y[(i * self.n + j) * self.n + k] = value;
    }

    pub fn u(&self, i: usize) -> i64 {
        self.u[i]
    }

    pub fn set_u(&mut self, i: usize, value: i64) {
        self.u[i] = value;
    }

    /// Overwrites `y` with the products `x[i][j] && x[j][k]`.
    pub fn derive_y(&mut self) {
        self.y.iter_mut().for_each(|v| *v = false);
        for (i, j, k) in distinct_triples(self.n) {
            let value = self.x(i, j) && self.x(j, k);
            self.set_y(i, j, k, value);
        }
    }
}

/// Translates a valid tour into the assignment that encodes it: arcs
/// along the tour, positions in visiting order, and derived `y`.
pub fn assignment_from_tour(tour: &Tour) -> Result<MilpAssignment> {
    let n = tour.len();
    let violations = tour.validate(n);
    if !violations.is_empty() {
        return Err(Error::InvalidTour(format!(
            "cannot encode an invalid tour: {}",
            violations[0]
        )));
    }
    let order = tour.order();
    let mut asg = MilpAssignment::new(n);
    for p in 0..n {
        asg.set_x(order[p], order[(p + 1) % n], true);
    }
    for (p, &node) in order.iter().enumerate().skip(1) {
        asg.set_u(node, p as i64);
    }
    asg.derive_y();
    Ok(asg)
}

/// One violated model constraint.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    /// Constraint name as it appears in the exported model.
    pub name: String,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.name, self.detail)
    }
}

/// Outcome of checking an assignment against a model.
#[derive(Clone, Debug)]
pub struct ModelCheck<S> {
    /// Objective value of the assignment (regardless of feasibility).
    pub objective: S,
    pub violations: Vec<Violation>,
}

impl<S> ModelCheck<S> {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Evaluates an assignment against the linearized model: degree
/// constraints, Desrochers-Laporte ordering, x-y linking, and position
/// bounds, plus the linear objective over `y`.
pub fn check_milp<S: Scalar>(
    inst: &Instance<S>,
    asg: &MilpAssignment,
) -> Result<ModelCheck<S>> {
    let n = inst.n();
    if asg.n() != n {
        return Err(Error::InvalidArgument(format!(
            "assignment is over {} nodes but the instance has {n}",
            asg.n()
        )));
    }
    let mut violations = Vec::new();

    for i in 0..n {
        let out: i64 = (0..n).filter(|&j| j != i && asg.x(i, j)).count() as i64;
        if out != 1 {
            violations.push(Violation {
                name: format!("deg_out_{i}"),
                detail: format!("node {i} has {out} outgoing arcs, expected 1"),
            });
        }
        let inc: i64 = (0..n).filter(|&j| j != i && asg.x(j, i)).count() as i64;
        if inc != 1 {
            violations.push(Violation {
                name: format!("deg_in_{i}"),
                detail: format!("node {i} has {inc} incoming arcs, expected 1"),
            });
        }
    }

    for i in 1..n {
        for j in 1..n {
            if i == j {
                continue;
            }
            let lhs = asg.u(i) - asg.u(j)
                + (n as i64 - 1) * i64::from(asg.x(i, j))
                + (n as i64 - 3) * i64::from(asg.x(j, i));
            let rhs = n as i64 - 2;
            if lhs > rhs {
                violations.push(Violation {
                    name: format!("dl_{i}_{j}"),
                    detail: format!("ordering term is {lhs}, exceeds {rhs}"),
                });
            }
        }
    }

    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let x = i64::from(asg.x(i, j));
            let succ: i64 = (0..n)
                .filter(|&k| k != i && k != j && asg.y(i, j, k))
                .count() as i64;
            if succ != x {
                violations.push(Violation {
                    name: format!("link_out_{i}_{j}"),
                    detail: format!("x is {x} but {succ} successor pairs are set"),
                });
            }
            let pred: i64 = (0..n)
                .filter(|&k| k != i && k != j && asg.y(k, i, j))
                .count() as i64;
            if pred != x {
                violations.push(Violation {
                    name: format!("link_in_{i}_{j}"),
                    detail: format!("x is {x} but {pred} predecessor pairs are set"),
                });
            }
        }
    }

    for i in 1..n {
        let u = asg.u(i);
        if u < 1 || u > n as i64 - 1 {
            violations.push(Violation {
                name: format!("u_bounds_{i}"),
                detail: format!("position {u} outside 1..={}", n - 1),
            });
        }
    }

    let mut objective = S::zero();
    for (i, j, k) in distinct_triples(n) {
        if asg.y(i, j, k) {
            objective += inst.costs().get(i, j, k);
        }
    }
    Ok(ModelCheck {
        objective,
        violations,
    })
}

/// Quadratic objective of the arc-variable model: cost accrues wherever
/// two consecutive arcs `(i,j)` and `(j,k)` are both selected.
pub fn eval_miqp_objective<S: Scalar>(inst: &Instance<S>, asg: &MilpAssignment) -> Result<S> {
    let n = inst.n();
    if asg.n() != n {
        return Err(Error::InvalidArgument(format!(
            "assignment is over {} nodes but the instance has {n}",
            asg.n()
        )));
    }
    let mut objective = S::zero();
    for (i, j, k) in distinct_triples(n) {
        if asg.x(i, j) && asg.x(j, k) {
            objective += inst.costs().get(i, j, k);
        }
    }
    Ok(objective)
}

/// Evaluates the permutation model: `values[p]` is the node in position
/// `p`. Checks the domain, the all-different constraint, and the fixed
/// depot start; the objective is only defined when all three hold.
pub fn eval_cp<S: Scalar>(inst: &Instance<S>, values: &[usize]) -> Result<ModelCheck<Option<S>>> {
    let n = inst.n();
    if values.len() != n {
        return Err(Error::InvalidArgument(format!(
            "expected {n} position variables, got {}",
            values.len()
        )));
    }
    let mut violations = Vec::new();
    for (p, &v) in values.iter().enumerate() {
        if v >= n {
            violations.push(Violation {
                name: format!("x{p}"),
                detail: format!("value {v} outside domain 0..={}", n - 1),
            });
        }
    }
    if violations.is_empty() {
        let mut seen = vec![0usize; n];
        for &v in values {
            seen[v] += 1;
        }
        for (v, &count) in seen.iter().enumerate() {
            if count > 1 {
                violations.push(Violation {
                    name: "alldifferent".into(),
                    detail: format!("value {v} assigned to {count} positions"),
                });
            }
        }
    }
    if values[0] != 0 {
        violations.push(Violation {
            name: "x0".into(),
            detail: format!("first position is {}, must be 0", values[0]),
        });
    }
    let objective = if violations.is_empty() {
        let triples = crate::instance::cyclic_triples(values);
        Some(crate::instance::sorted_triple_sum(inst.costs(), triples))
    } else {
        None
    };
    Ok(ModelCheck {
        objective,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_instance, CostKind};

    fn instance() -> Instance<f64> {
        generate_instance(6, 12, CostKind::Angle).unwrap()
    }

    fn tour() -> Tour {
        Tour::new(vec![0, 3, 1, 5, 2, 4])
    }

    #[test]
    fn tour_assignment_is_feasible_and_matches_tour_cost_exactly() {
        let inst = instance();
        let asg = assignment_from_tour(&tour()).unwrap();
        let check = check_milp(&inst, &asg).unwrap();
        assert!(check.is_feasible(), "violations: {:?}", check.violations);
        let want = inst.tour_cost(&tour()).unwrap();
        assert_eq!(check.objective, want);
        assert_eq!(eval_miqp_objective(&inst, &asg).unwrap(), want);
        assert_eq!(eval_cp(&inst, tour().order()).unwrap().objective, Some(want));
    }

    #[test]
    fn two_subtours_trip_an_ordering_constraint() {
        // 0 -> 1 -> 2 -> 0 and 3 -> 4 -> 5 -> 3: degrees and linking are
        // fine, but no position assignment can order the second cycle.
        let inst = instance();
        let mut asg = MilpAssignment::new(6);
        for (i, j) in [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)] {
            asg.set_x(i, j, true);
        }
        asg.set_u(1, 1);
        asg.set_u(2, 2);
        asg.set_u(3, 3);
        asg.set_u(4, 4);
        asg.set_u(5, 5);
        asg.derive_y();
        let check = check_milp(&inst, &asg).unwrap();
        assert!(!check.is_feasible());
        assert!(check.violations.iter().all(|v| v.name.starts_with("dl_")));
    }

    #[test]
    fn degree_and_linking_violations_are_reported_by_name() {
        let inst = instance();
        let mut asg = assignment_from_tour(&tour()).unwrap();
        asg.set_x(0, 3, false);
        let check = check_milp(&inst, &asg).unwrap();
        let names: Vec<&str> = check.violations.iter().map(|v| v.name.as_str()).collect();
        assert!(names.contains(&"deg_out_0"));
        assert!(names.contains(&"deg_in_3"));
        // y still says the pair is consecutive while x no longer does.
        assert!(names.iter().any(|n| n.starts_with("link_out_0_3")
            || n.starts_with("link_in_0_3")));
    }

    #[test]
    fn position_bounds_are_checked() {
        let inst = instance();
        let mut asg = assignment_from_tour(&tour()).unwrap();
        asg.set_u(4, 0);
        let check = check_milp(&inst, &asg).unwrap();
        assert!(check
            .violations
            .iter()
            .any(|v| v.name == "u_bounds_4"));
    }

    #[test]
    fn cp_evaluator_rejects_broken_permutations() {
        let inst = instance();
        let dup = eval_cp(&inst, &[0, 1, 1, 3, 4, 5]).unwrap();
        assert!(dup.violations.iter().any(|v| v.name == "alldifferent"));
        assert_eq!(dup.objective, None);

        let shifted = eval_cp(&inst, &[1, 2, 3, 4, 5, 0]).unwrap();
        assert!(shifted.violations.iter().any(|v| v.name == "x0"));

        let wide = eval_cp(&inst, &[0, 1, 2, 3, 4, 9]).unwrap();
        assert!(wide.violations.iter().any(|v| v.name == "x5"));

        assert!(eval_cp(&inst, &[0, 1, 2]).is_err());
    }

    #[test]
    fn assignment_from_tour_rejects_invalid_orders() {
        assert!(assignment_from_tour(&Tour::new(vec![1, 0, 2])).is_err());
        assert!(assignment_from_tour(&Tour::new(vec![0, 2, 2])).is_err());
    }

    #[test]
    fn subtour_kind_round_trips_through_strings() {
        for kind in [SubtourKind::Dl, SubtourKind::Mtz, SubtourKind::Flow] {
            assert_eq!(kind.as_str().parse::<SubtourKind>().unwrap(), kind);
        }
        assert!("dfj".parse::<SubtourKind>().is_err());
    }
}
