//! Scalar abstraction for the numeric kernels.
//!
//! Everything that computes costs, bounds, or gaps is generic over [`Scalar`]
//! so the same code runs on `f32` and `f64`. The crate root exports `f64`
//! aliases for the common case.

use std::cmp::Ordering;
use std::fmt::{Debug, Display};
use std::ops::AddAssign;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable by every numeric kernel in this crate.
///
/// The formatting bounds are load-bearing: canonical cost values are defined
/// by decimal *strings* (see [`round_dec12`]), so a scalar must be printable
/// with an explicit precision and re-parseable from the result.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + Display
    + Debug
    + FromStr
    + Send
    + Sync
    + 'static
{
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + AddAssign
        + Display
        + Debug
        + FromStr
        + Send
        + Sync
        + 'static
{
}

/// Rounds to 12 fractional decimal digits, half to even.
///
/// Implemented by formatting and re-parsing: Rust's float formatter rounds
/// the exact binary value of its argument half-to-even at the requested
/// number of decimals, and the result string is the canonical serialized
/// form, so round-tripping through instance files is exact by construction.
/// Platform drift is impossible because no further arithmetic is involved.
///
/// ```
/// use qtsp::scalar::round_dec12;
/// assert_eq!(round_dec12(0.1234567890124_f64), 0.123456789012);
/// assert_eq!(round_dec12(0.12345678901251_f64), 0.123456789013);
/// assert_eq!(round_dec12(f64::INFINITY), f64::INFINITY);
/// ```
pub fn round_dec12<S: Scalar>(x: S) -> S {
    if !x.is_finite() {
        return x;
    }
    parse_scalar(&format_dec12(x)).unwrap_or(x)
}

/// Formats with exactly 12 fractional digits, the canonical cost form.
pub fn format_dec12<S: Scalar>(x: S) -> String {
    format!("{x:.12}")
}

/// Parses a scalar from decimal text, mapping failures to `None`.
pub fn parse_scalar<S: Scalar>(text: &str) -> Option<S> {
    text.parse().ok()
}

/// Total order on scalars: ordinary comparison with NaN sorted last.
///
/// Costs built by this crate are never NaN; the NaN arm only keeps
/// comparator-based containers total if a caller feeds hand-made tensors.
pub fn total_cmp<S: Scalar>(a: S, b: S) -> Ordering {
    a.partial_cmp(&b).unwrap_or_else(|| match (a.is_nan(), b.is_nan()) {
        (true, false) => Ordering::Greater,
        (false, true) => Ordering::Less,
        _ => Ordering::Equal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_dec12_is_half_even_on_exact_binary_value() {
        // 0.5 at the 13th digit of the exact binary expansion decides the
        // direction; these literals sit clearly on one side.
        assert_eq!(round_dec12(1.0000000000004_f64), 1.0);
        assert_eq!(round_dec12(1.0000000000006_f64), 1.000000000001);
        // Already canonical values are fixed points.
        let c = 1570.796326794897_f64;
        assert_eq!(round_dec12(c), c);
    }

    #[test]
    fn round_dec12_works_for_f32() {
        let x: f32 = 0.25;
        assert_eq!(round_dec12(x), 0.25);
    }

    #[test]
    fn format_parses_back() {
        let x = 6633.185307179587_f64;
        assert_eq!(parse_scalar::<f64>(&format_dec12(x)), Some(x));
    }

    #[test]
    fn total_cmp_sorts_nan_last() {
        let mut v = [f64::NAN, 1.0, 0.0];
        v.sort_by(|a, b| total_cmp(*a, *b));
        assert_eq!(v[0], 0.0);
        assert_eq!(v[1], 1.0);
        assert!(v[2].is_nan());
    }
}
