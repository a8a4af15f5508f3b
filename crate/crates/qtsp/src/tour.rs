//! Tours and their validation.

use std::fmt;

/// A cyclic visiting order. A valid tour over `n` customers is a
/// permutation of `0..n` whose first element is the depot `0`; rotations
/// describe the same cycle, so the depot-first form is the canonical one.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Tour {
    order: Vec<usize>,
}

/// A single validation failure; [`Tour::validate`] reports all of them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TourViolation {
    WrongLength { expected: usize, found: usize },
    WrongStart { found: usize },
    OutOfRange { value: usize },
    Duplicate { customer: usize },
    Missing { customer: usize },
}

impl fmt::Display for TourViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TourViolation::WrongLength { expected, found } => {
                write!(f, "expected {expected} customers, found {found}")
            }
            TourViolation::WrongStart { found } => {
                write!(f, "tour must start at the depot 0, found {found}")
            }
            TourViolation::OutOfRange { value } => write!(f, "customer {value} out of range"),
            TourViolation::Duplicate { customer } => write!(f, "customer {customer} repeats"),
            TourViolation::Missing { customer } => write!(f, "customer {customer} missing"),
        }
    }
}

impl Tour {
    /// Wraps a raw order without validating; call [`Tour::validate`] (or
    /// let an operation that requires validity do so) before trusting it.
    pub fn new(order: Vec<usize>) -> Self {
        Tour { order }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Checks the canonical-permutation contract against instance size `n`
    /// and returns every violation found (empty means valid).
    pub fn validate(&self, n: usize) -> Vec<TourViolation> {
        let mut violations = Vec::new();
        if self.order.len() != n {
            violations.push(TourViolation::WrongLength { expected: n, found: self.order.len() });
        }
        match self.order.first() {
            Some(0) => {}
            Some(&other) => violations.push(TourViolation::WrongStart { found: other }),
            None => {}
        }
        let mut seen = vec![false; n];
        for &c in &self.order {
            if c >= n {
                violations.push(TourViolation::OutOfRange { value: c });
            } else if seen[c] {
                violations.push(TourViolation::Duplicate { customer: c });
            } else {
                seen[c] = true;
            }
        }
        for (c, present) in seen.iter().enumerate() {
            if !present {
                violations.push(TourViolation::Missing { customer: c });
            }
        }
        violations
    }

    /// Rotates an arbitrary cyclic permutation into the depot-first
    /// canonical form. Returns `None` when `0` does not occur.
    pub fn canonicalized(order: &[usize]) -> Option<Tour> {
        let pos = order.iter().position(|&c| c == 0)?;
        let mut rotated = Vec::with_capacity(order.len());
        rotated.extend_from_slice(&order[pos..]);
        rotated.extend_from_slice(&order[..pos]);
        Some(Tour::new(rotated))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valid_tour_has_no_violations() {
        assert!(Tour::new(vec![0, 2, 1, 3]).validate(4).is_empty());
    }

    #[test]
    fn all_violation_kinds_are_reported() {
        // Length 3 vs n=4, starts at 2, contains 9 (out of range), repeats
        // nothing but misses 1 and 3.
        let v = Tour::new(vec![2, 9, 0]).validate(4);
        assert!(v.contains(&TourViolation::WrongLength { expected: 4, found: 3 }));
        assert!(v.contains(&TourViolation::WrongStart { found: 2 }));
        assert!(v.contains(&TourViolation::OutOfRange { value: 9 }));
        assert!(v.contains(&TourViolation::Missing { customer: 1 }));
        assert!(v.contains(&TourViolation::Missing { customer: 3 }));

        let dup = Tour::new(vec![0, 1, 1, 2]).validate(4);
        assert!(dup.contains(&TourViolation::Duplicate { customer: 1 }));
    }

    #[test]
    fn canonicalized_rotates_to_depot() {
        let t = Tour::canonicalized(&[3, 1, 0, 2]).unwrap();
        assert_eq!(t.order(), &[0, 2, 3, 1]);
        assert!(Tour::canonicalized(&[1, 2, 3]).is_none());
    }
}
