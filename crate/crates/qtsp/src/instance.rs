//! Problem instances: grid points, cost tensors, and benchmark generation.
//!
//! A QTSP instance over `n` customers (customer 0 is the depot) assigns a
//! cost to every ordered triple of distinct customers `(i, j, k)`, read as
//! "arrive at `j` from `i`, continue to `k`". Two point-based cost families
//! are built in:
//!
//! * **angle**: `c[i][j][k] = round12(1000 * alpha)` where `alpha` is the
//!   turning angle at `j` in radians;
//! * **angledistance**: `c[i][j][k] = round12(100 * (rho * alpha +
//!   (d_ij + d_jk) / 2))`, mixing the turn with the mean of the two leg
//!   lengths (`rho` defaults to 40).
//!
//! `round12` is half-to-even rounding at the 12th decimal; the rounded
//! decimal string is the canonical value, so instance files reproduce cost
//! tensors bit for bit. Tensor entries are evaluated in extended precision
//! (40 significant digits) before the final rounding: at 12 fractional
//! digits the result is sensitive to the last few bits of a plain `f64`
//! evaluation, and the extended pipeline also maps collinear integer
//! vectors to a turning angle of exactly 0 or pi.

use std::collections::HashSet;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::scalar::{parse_scalar, Scalar};
use crate::tour::Tour;

/// Inclusive upper bound of the generation grid; coordinates are drawn
/// uniformly from `0..=GRID_MAX`.
pub const GRID_MAX: i64 = 500;

/// Largest supported instance size (the DP state encodes customer sets in
/// four 64-bit words).
pub const MAX_CUSTOMERS: usize = 256;

/// Default rho for the angledistance family.
pub const DEFAULT_RHO: f64 = 40.0;

/// Integer grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    pub x: i64,
    pub y: i64,
}

impl Point {
    pub fn new(x: i64, y: i64) -> Self {
        Point { x, y }
    }
}

/// Cost family of an instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostKind<S> {
    /// Turning-angle costs.
    Angle,
    /// Turning angle plus mean leg length, weighted by `rho`.
    AngleDistance { rho: S },
    /// Caller-supplied tensor; carries no geometry.
    Explicit,
}

impl<S: Scalar> CostKind<S> {
    /// Short label used in file headers, report keys, and file names.
    pub fn label(&self) -> &'static str {
        match self {
            CostKind::Angle => "angle",
            CostKind::AngleDistance { .. } => "angledistance",
            CostKind::Explicit => "explicit",
        }
    }
}

/// Dense cost tensor: `n^3` slots, of which the `n(n-1)(n-2)` entries with
/// pairwise-distinct indices are meaningful. Unused slots stay zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CostTensor<S> {
    n: usize,
    data: Vec<S>,
}

impl<S: Scalar> CostTensor<S> {
    /// Zero-filled tensor for `n` customers.
    pub fn new(n: usize) -> Self {
        CostTensor { n, data: vec![S::zero(); n * n * n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Cost of the triple `(i, j, k)`; indices must be pairwise distinct.
    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> S {
        debug_assert!(i != j && j != k && i != k, "triple indices must be distinct");
        self.data[(i * self.n + j) * self.n + k]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, value: S) {
        debug_assert!(i != j && j != k && i != k, "triple indices must be distinct");
        self.data[(i * self.n + j) * self.n + k] = value;
    }
}

/// Iterates all pairwise-distinct triples of `0..n` in ascending
/// lexicographic order. This is the canonical enumeration (and summation)
/// order used by file formats, exporters, and checkers.
pub fn distinct_triples(n: usize) -> impl Iterator<Item = (usize, usize, usize)> {
    (0..n).flat_map(move |i| {
        (0..n).filter(move |&j| j != i).flat_map(move |j| {
            (0..n).filter(move |&k| k != i && k != j).map(move |k| (i, j, k))
        })
    })
}

/// A QTSP instance: size, cost family, optional geometry, materialized cost
/// tensor, and the generation seed when one was used.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance<S> {
    n: usize,
    kind: CostKind<S>,
    points: Option<Vec<Point>>,
    costs: CostTensor<S>,
    seed: Option<u64>,
}

impl<S: Scalar> Instance<S> {
    /// Builds a point-based instance, deriving the tensor from `kind`.
    ///
    /// Fails if `n < 3`, `n > MAX_CUSTOMERS`, points repeat (the turning
    /// angle would be undefined), or `kind` is [`CostKind::Explicit`].
    pub fn from_points(points: Vec<Point>, kind: CostKind<S>, seed: Option<u64>) -> Result<Self> {
        let n = points.len();
        check_size(n)?;
        let mut seen = HashSet::with_capacity(n);
        for (idx, p) in points.iter().enumerate() {
            if !seen.insert(*p) {
                return Err(Error::DegenerateGeometry(format!(
                    "duplicate point ({}, {}) at index {idx}",
                    p.x, p.y
                )));
            }
        }
        let costs = match kind {
            CostKind::Angle => build_angle_costs(&points)?,
            CostKind::AngleDistance { rho } => build_angle_distance_costs(&points, rho)?,
            CostKind::Explicit => {
                return Err(Error::InvalidArgument(
                    "explicit instances carry their own tensor; use Instance::explicit".into(),
                ))
            }
        };
        Ok(Instance { n, kind, points: Some(points), costs, seed })
    }

    /// Wraps a caller-supplied tensor. Entries are taken as-is (no
    /// rounding is applied); they must all be finite.
    pub fn explicit(costs: CostTensor<S>, seed: Option<u64>) -> Result<Self> {
        let n = costs.n();
        check_size(n)?;
        for (i, j, k) in distinct_triples(n) {
            if !costs.get(i, j, k).is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "cost[{i}][{j}][{k}] is not finite"
                )));
            }
        }
        Ok(Instance { n, kind: CostKind::Explicit, points: None, costs, seed })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> &CostKind<S> {
        &self.kind
    }

    /// Geometry, when the instance was built from points.
    pub fn points(&self) -> Option<&[Point]> {
        self.points.as_deref()
    }

    pub fn costs(&self) -> &CostTensor<S> {
        &self.costs
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// True if some point lies outside the generation grid. Files may
    /// legitimately carry such points; generated instances never do.
    pub fn exceeds_grid(&self) -> bool {
        self.points().is_some_and(|ps| {
            ps.iter().any(|p| {
                !(0..=GRID_MAX).contains(&p.x) || !(0..=GRID_MAX).contains(&p.y)
            })
        })
    }

    /// Cost of a tour: the sum of `c[prev][cur][next]` over all `n` cyclic
    /// positions, with the tour closed through the depot on both ends.
    ///
    /// Terms are accumulated in ascending `(i, j, k)` order so every
    /// evaluator in this crate (tour scoring, MILP/MIQP/CP checkers)
    /// produces bit-identical sums for the same tour.
    pub fn tour_cost(&self, tour: &Tour) -> Result<S> {
        let violations = tour.validate(self.n);
        if !violations.is_empty() {
            let msgs: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            return Err(Error::InvalidTour(msgs.join("; ")));
        }
        Ok(sorted_triple_sum(&self.costs, cyclic_triples(tour.order())))
    }
}

fn check_size(n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "an instance needs at least 3 customers, got {n}"
        )));
    }
    if n > MAX_CUSTOMERS {
        return Err(Error::InvalidArgument(format!(
            "at most {MAX_CUSTOMERS} customers are supported, got {n}"
        )));
    }
    Ok(())
}

/// The `n` cost triples `(prev, cur, next)` visited by a cyclic order.
/// The multiset is invariant under rotation of `order`.
pub fn cyclic_triples(order: &[usize]) -> Vec<(usize, usize, usize)> {
    let n = order.len();
    (0..n)
        .map(|p| (order[(p + n - 1) % n], order[p], order[(p + 1) % n]))
        .collect()
}

/// Sums tensor entries over `triples` in ascending index order (the shared
/// canonical order; see [`Instance::tour_cost`]).
pub(crate) fn sorted_triple_sum<S: Scalar>(
    costs: &CostTensor<S>,
    mut triples: Vec<(usize, usize, usize)>,
) -> S {
    triples.sort_unstable();
    let mut total = S::zero();
    for (i, j, k) in triples {
        total += costs.get(i, j, k);
    }
    total
}

/// Draws `n` distinct points i.i.d. uniform on the `0..=GRID_MAX` square.
///
/// The stream is fully pinned for reproducibility: a ChaCha8 generator
/// keyed with `seed_from_u64`, decoded by rejection sampling (a 32-bit
/// draw is rejected iff it falls in the final partial block of 501, then
/// reduced modulo 501). A point colliding with an earlier one is redrawn
/// wholesale. Identical `(n, seed)` therefore yield identical points on
/// every platform.
pub fn generate_points(n: usize, seed: u64) -> Result<Vec<Point>> {
    check_size(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    let mut used = HashSet::with_capacity(n);
    while points.len() < n {
        let p = Point::new(draw_coord(&mut rng), draw_coord(&mut rng));
        if used.insert(p) {
            points.push(p);
        }
    }
    Ok(points)
}

fn draw_coord(rng: &mut ChaCha8Rng) -> i64 {
    const RANGE: u32 = GRID_MAX as u32 + 1;
    // Largest multiple of RANGE that fits in a u32; draws at or above it
    // would bias the modulus and are rejected (7 values out of 2^32).
    const LIMIT: u32 = u32::MAX - (u32::MAX % RANGE);
    loop {
        let v = rng.next_u32();
        if v < LIMIT {
            return (v % RANGE) as i64;
        }
    }
}

/// Generates a benchmark instance from `(n, seed, kind)`.
///
/// Byte-identical across runs and platforms for fixed inputs. `kind` must
/// be a point-based family.
pub fn generate_instance<S: Scalar>(n: usize, seed: u64, kind: CostKind<S>) -> Result<Instance<S>> {
    if matches!(kind, CostKind::Explicit) {
        return Err(Error::InvalidArgument(
            "the explicit kind cannot be generated; supply a tensor".into(),
        ));
    }
    let points = generate_points(n, seed)?;
    Instance::from_points(points, kind, Some(seed))
}

/// Turning angle at `b` between segments `a -> b` and `b -> c`, in radians
/// within `[0, pi]`.
///
/// Collinear continuation gives 0, a U-turn gives pi (so `a == c` is fine);
/// a zero-length segment (`a == b` or `b == c`) is an error. The cosine is
/// clamped to `[-1, 1]` before `acos` to absorb rounding overshoot.
pub fn turning_angle<S: Scalar>(a: Point, b: Point, c: Point) -> Result<S> {
    let (dot, norm_prod_sq) = angle_terms(a, b, c)?;
    let denom = S::from_i64(norm_prod_sq).expect("norm product fits the scalar").sqrt();
    let cos = S::from_i64(dot).expect("dot product fits the scalar") / denom;
    Ok(cos.min(S::one()).max(-S::one()).acos())
}

/// Integer dot product and squared norm product of the two direction
/// vectors; both are exact.
fn angle_terms(a: Point, b: Point, c: Point) -> Result<(i64, i64)> {
    let u = (b.x - a.x, b.y - a.y);
    let v = (c.x - b.x, c.y - b.y);
    if u == (0, 0) || v == (0, 0) {
        return Err(Error::DegenerateGeometry(format!(
            "coincident consecutive points around ({}, {})",
            b.x, b.y
        )));
    }
    let dot = u.0 * v.0 + u.1 * v.1;
    let nu = u.0 * u.0 + u.1 * u.1;
    let nv = v.0 * v.0 + v.1 * v.1;
    Ok((dot, nu * nv))
}

/// Builds the angle-family tensor: `c[i][j][k] = round12(1000 * alpha_ijk)`.
pub fn build_angle_costs<S: Scalar>(points: &[Point]) -> Result<CostTensor<S>> {
    build_tensor(points, |i, j, k| {
        let (dot, npsq) = angle_terms(points[i], points[j], points[k])?;
        Ok(hp::angle_cost(dot, npsq))
    })
}

/// Builds the angledistance-family tensor:
/// `c[i][j][k] = round12(100 * (rho * alpha_ijk + (d_ij + d_jk) / 2))`.
pub fn build_angle_distance_costs<S: Scalar>(points: &[Point], rho: S) -> Result<CostTensor<S>> {
    let rho = rho.to_f64().ok_or_else(|| {
        Error::InvalidArgument("rho is not representable as f64".into())
    })?;
    if !rho.is_finite() {
        return Err(Error::InvalidArgument("rho must be finite".into()));
    }
    build_tensor(points, |i, j, k| {
        let (pi, pj, pk) = (points[i], points[j], points[k]);
        let (dot, npsq) = angle_terms(pi, pj, pk)?;
        let dij_sq = (pj.x - pi.x).pow(2) + (pj.y - pi.y).pow(2);
        let djk_sq = (pk.x - pj.x).pow(2) + (pk.y - pj.y).pow(2);
        Ok(hp::angle_distance_cost(dot, npsq, rho, dij_sq, djk_sq))
    })
}

/// Shared tensor-construction driver: evaluates `entry` for every distinct
/// triple and canonicalizes through the 12-decimal string form. Rows are
/// split across threads for large `n`; every slot is computed independently
/// so the result does not depend on scheduling.
fn build_tensor<S, F>(points: &[Point], entry: F) -> Result<CostTensor<S>>
where
    S: Scalar,
    F: Fn(usize, usize, usize) -> Result<f64> + Sync,
{
    let n = points.len();
    let mut tensor = CostTensor::new(n);
    let fill_row = |i: usize, row: &mut [S]| -> Result<()> {
        for j in 0..n {
            if j == i {
                continue;
            }
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                row[j * n + k] = canonical(entry(i, j, k)?);
            }
        }
        Ok(())
    };

    let threads = if n >= 24 {
        std::thread::available_parallelism().map_or(1, |p| p.get())
    } else {
        1
    };
    if threads <= 1 {
        for (i, row) in tensor.data.chunks_mut(n * n).enumerate() {
            fill_row(i, row)?;
        }
    } else {
        let rows: Vec<(usize, &mut [S])> = tensor.data.chunks_mut(n * n).enumerate().collect();
        let per = rows.len().div_ceil(threads);
        let mut failure = None;
        std::thread::scope(|scope| {
            let mut handles = Vec::new();
            let mut rest = rows;
            while !rest.is_empty() {
                let take = per.min(rest.len());
                let tail = rest.split_off(take);
                let batch = std::mem::replace(&mut rest, tail);
                handles.push(scope.spawn(move || -> Result<()> {
                    for (i, row) in batch {
                        fill_row(i, row)?;
                    }
                    Ok(())
                }));
            }
            for handle in handles {
                if let Err(e) = handle.join().expect("tensor worker panicked") {
                    failure.get_or_insert(e);
                }
            }
        });
        if let Some(e) = failure {
            return Err(e);
        }
    }
    Ok(tensor)
}

/// f64 -> canonical 12-decimal value, parsed into the target scalar.
fn canonical<S: Scalar>(value: f64) -> S {
    parse_scalar(&format!("{value:.12}")).unwrap_or_else(|| {
        S::from_f64(value).expect("finite cost converts to the scalar")
    })
}

/// Extended-precision cost kernels (40 significant digits, pure software
/// arithmetic, hence platform-independent).
mod hp {
    use num_bigfloat::BigFloat;

    /// Turning angle from exact integer dot product and squared norm
    /// product. Collinear inputs satisfy `dot^2 == norm_prod_sq`, the
    /// square root is exact, and the quotient is exactly +-1, so the angle
    /// degenerates to exactly 0 or pi.
    fn angle(dot: i64, norm_prod_sq: i64) -> BigFloat {
        let cos = BigFloat::from_i64(dot) / BigFloat::from_i64(norm_prod_sq).sqrt();
        let one = BigFloat::from_i64(1);
        cos.min(&one).max(&-one).acos()
    }

    pub(super) fn angle_cost(dot: i64, norm_prod_sq: i64) -> f64 {
        (BigFloat::from_i64(1000) * angle(dot, norm_prod_sq)).to_f64()
    }

    pub(super) fn angle_distance_cost(
        dot: i64,
        norm_prod_sq: i64,
        rho: f64,
        dij_sq: i64,
        djk_sq: i64,
    ) -> f64 {
        let alpha = angle(dot, norm_prod_sq);
        let mean_leg = (BigFloat::from_i64(dij_sq).sqrt() + BigFloat::from_i64(djk_sq).sqrt())
            / BigFloat::from_i64(2);
        (BigFloat::from_i64(100) * (BigFloat::from_f64(rho) * alpha + mean_leg)).to_f64()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn right_angle_points() -> (Point, Point, Point) {
        (Point::new(0, 0), Point::new(1, 0), Point::new(1, 1))
    }

    #[test]
    fn perpendicular_angle_cost_matches_frozen_value() {
        let (a, b, c) = right_angle_points();
        let costs: CostTensor<f64> = build_angle_costs(&[a, b, c]).unwrap();
        assert_eq!(costs.get(0, 1, 2), 1570.796326794897);
    }

    #[test]
    fn angle_distance_cost_matches_frozen_value() {
        let pts = [Point::new(0, 0), Point::new(3, 0), Point::new(3, 4)];
        let costs: CostTensor<f64> = build_angle_distance_costs(&pts, 40.0).unwrap();
        assert_eq!(costs.get(0, 1, 2), 6633.185307179587);
    }

    #[test]
    fn collinear_angle_distance_is_pure_distance() {
        let pts = [Point::new(0, 0), Point::new(1, 0), Point::new(2, 0)];
        let costs: CostTensor<f64> = build_angle_distance_costs(&pts, 40.0).unwrap();
        assert_eq!(costs.get(0, 1, 2), 100.0);
    }

    #[test]
    fn collinear_angle_cost_is_exactly_zero_even_for_diagonals() {
        // (1,1) -> (3,3) continues (0,0) -> (1,1); naive f64 cosines land
        // slightly below 1 here, the extended pipeline must not.
        let pts = [Point::new(0, 0), Point::new(1, 1), Point::new(3, 3)];
        let costs: CostTensor<f64> = build_angle_costs(&pts).unwrap();
        assert_eq!(costs.get(0, 1, 2), 0.0);
    }

    #[test]
    fn turning_angle_handles_u_turn_and_rejects_zero_segments() {
        let a = Point::new(0, 0);
        let b = Point::new(1, 0);
        let pi: f64 = turning_angle(a, b, a).unwrap();
        assert!((pi - std::f64::consts::PI).abs() < 1e-15);
        assert!(matches!(
            turning_angle::<f64>(a, a, b),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn generation_is_deterministic_and_in_range() {
        let p1 = generate_points(40, 123).unwrap();
        let p2 = generate_points(40, 123).unwrap();
        assert_eq!(p1, p2);
        assert!(p1.iter().all(|p| (0..=GRID_MAX).contains(&p.x)
            && (0..=GRID_MAX).contains(&p.y)));
        let distinct: HashSet<_> = p1.iter().collect();
        assert_eq!(distinct.len(), p1.len());
        assert_ne!(p1, generate_points(40, 124).unwrap());
    }

    #[test]
    fn coordinate_mean_is_plausible_for_a_large_draw() {
        // 2n coordinates uniform on 0..=500: mean 250, sd ~144.6; allow 3
        // standard errors.
        let pts = generate_points(200, 7).unwrap();
        let sum: i64 = pts.iter().map(|p| p.x + p.y).sum();
        let mean = sum as f64 / 400.0;
        let tol = 3.0 * 144.626 / (400.0_f64).sqrt();
        assert!((mean - 250.0).abs() < tol, "mean {mean} outside {tol} of 250");
    }

    #[test]
    fn small_n_is_rejected() {
        assert!(matches!(generate_points(2, 0), Err(Error::InvalidArgument(_))));
        assert!(matches!(
            generate_instance::<f64>(2, 0, CostKind::Angle),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn explicit_kind_cannot_be_generated() {
        assert!(matches!(
            generate_instance::<f64>(5, 0, CostKind::Explicit),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn duplicate_points_are_degenerate() {
        let pts = vec![Point::new(0, 0), Point::new(1, 2), Point::new(0, 0)];
        assert!(matches!(
            Instance::from_points(pts, CostKind::<f64>::Angle, None),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn generated_entries_are_canonical_fixed_points() {
        let inst: Instance<f64> = generate_instance(6, 5, CostKind::Angle).unwrap();
        for (i, j, k) in distinct_triples(6) {
            let c = inst.costs().get(i, j, k);
            assert_eq!(crate::scalar::round_dec12(c), c);
            assert!(c >= 0.0);
        }
    }

    #[test]
    fn tour_cost_rejects_invalid_orders() {
        let inst: Instance<f64> = generate_instance(5, 1, CostKind::Angle).unwrap();
        let bad = Tour::new(vec![0, 1, 1, 3, 4]);
        assert!(matches!(inst.tour_cost(&bad), Err(Error::InvalidTour(_))));
    }

    #[test]
    fn tour_cost_is_rotation_invariant_via_triple_multiset() {
        let order = [0usize, 2, 4, 1, 3];
        let rotated = [4usize, 1, 3, 0, 2];
        let mut a = cyclic_triples(&order);
        let mut b = cyclic_triples(&rotated);
        a.sort_unstable();
        b.sort_unstable();
        assert_eq!(a, b);
    }

    #[test]
    fn f32_instances_build() {
        let inst: Instance<f32> = generate_instance(5, 3, CostKind::Angle).unwrap();
        let t = Tour::new(vec![0, 1, 2, 3, 4]);
        assert!(inst.tour_cost(&t).unwrap() > 0.0);
    }

    #[test]
    fn parallel_and_serial_tensor_builds_agree() {
        // n = 24 crosses the threading threshold; rebuild a few entries
        // through the row filler by comparing against a fresh small slice.
        let pts = generate_points(24, 11).unwrap();
        let big: CostTensor<f64> = build_angle_costs(&pts).unwrap();
        for (i, j, k) in [(0, 1, 2), (5, 9, 17), (23, 0, 11)] {
            let (dot, npsq) = angle_terms(pts[i], pts[j], pts[k]).unwrap();
            let expect: f64 = canonical(hp::angle_cost(dot, npsq));
            assert_eq!(big.get(i, j, k), expect);
        }
    }
}
