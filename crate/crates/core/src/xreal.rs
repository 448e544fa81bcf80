//! Extended nonnegative reals `[0, ∞]` and validated probabilities.
//!
//! `XNNReal` carries every entropy-like quantity in this crate. The
//! arithmetic follows the measure-theoretic conventions: `∞ + x = ∞`,
//! `∞ * 0 = 0`, `∞ * x = ∞` for `x > 0`. These make multiplication
//! discontinuous at `(∞, 0)`; nothing downstream may exchange limits through
//! it. There are no additive inverses: subtraction exists only as the
//! truncated [`XNNReal::sub_trunc`], which is reporting-only and never used
//! inside solver algebra.

use crate::error::{Error, Result};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul};

/// A value in `[0, ∞]`. Finite values are nonnegative and never NaN.
#[derive(Clone, Copy, Debug)]
pub enum XNNReal {
    Finite(f64),
    Infinity,
}

impl XNNReal {
    pub const ZERO: XNNReal = XNNReal::Finite(0.0);
    pub const INFINITY: XNNReal = XNNReal::Infinity;

    /// Wrap a finite nonnegative real. Rejects NaN and negatives.
    pub fn finite(x: f64) -> Result<Self> {
        if x.is_nan() || x < 0.0 {
            return Err(Error::NotNonnegative { value: x });
        }
        if x.is_infinite() {
            return Ok(XNNReal::Infinity);
        }
        Ok(XNNReal::Finite(x))
    }

    /// Wrap a float that is nonnegative up to rounding noise, clamping tiny
    /// negative values to 0 and mapping `f64::INFINITY` to `∞`.
    ///
    /// Panics on NaN: producing NaN anywhere upstream is a bug.
    pub fn from_clamped(x: f64) -> Self {
        assert!(!x.is_nan(), "NaN reached XNNReal");
        if x.is_infinite() {
            XNNReal::Infinity
        } else {
            XNNReal::Finite(x.max(0.0))
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, XNNReal::Infinity)
    }

    pub fn is_finite(self) -> bool {
        !self.is_infinite()
    }

    /// The finite value, or `None` for `∞`.
    pub fn to_finite(self) -> Option<f64> {
        match self {
            XNNReal::Finite(x) => Some(x),
            XNNReal::Infinity => None,
        }
    }

    /// Truncated difference: `max(a - b, 0)` on finite pairs, `∞ - finite = ∞`,
    /// and `a - ∞ = 0` (including `∞ - ∞ = 0`).
    ///
    /// Reporting-only. `(a + ∞) - ∞ = 0 ≠ a`, so this is not a group inverse.
    pub fn sub_trunc(self, rhs: XNNReal) -> XNNReal {
        match (self, rhs) {
            (_, XNNReal::Infinity) => XNNReal::ZERO,
            (XNNReal::Infinity, XNNReal::Finite(_)) => XNNReal::Infinity,
            (XNNReal::Finite(a), XNNReal::Finite(b)) => XNNReal::Finite((a - b).max(0.0)),
        }
    }
}

impl Add for XNNReal {
    type Output = XNNReal;
    fn add(self, rhs: XNNReal) -> XNNReal {
        match (self, rhs) {
            (XNNReal::Finite(a), XNNReal::Finite(b)) => XNNReal::Finite(a + b),
            _ => XNNReal::Infinity,
        }
    }
}

impl Mul for XNNReal {
    type Output = XNNReal;
    fn mul(self, rhs: XNNReal) -> XNNReal {
        match (self, rhs) {
            (XNNReal::Finite(a), XNNReal::Finite(b)) => XNNReal::Finite(a * b),
            // ∞ * 0 = 0 * ∞ = 0
            (XNNReal::Infinity, XNNReal::Finite(x)) | (XNNReal::Finite(x), XNNReal::Infinity) => {
                if x == 0.0 {
                    XNNReal::ZERO
                } else {
                    XNNReal::Infinity
                }
            }
            (XNNReal::Infinity, XNNReal::Infinity) => XNNReal::Infinity,
        }
    }
}

impl PartialEq for XNNReal {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (XNNReal::Finite(a), XNNReal::Finite(b)) => a == b,
            (XNNReal::Infinity, XNNReal::Infinity) => true,
            _ => false,
        }
    }
}

impl Eq for XNNReal {}

impl PartialOrd for XNNReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for XNNReal {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            // no NaN by invariant, so finite comparison is total
            (XNNReal::Finite(a), XNNReal::Finite(b)) => a.partial_cmp(b).unwrap(),
            (XNNReal::Infinity, XNNReal::Infinity) => Ordering::Equal,
            (XNNReal::Infinity, _) => Ordering::Greater,
            (_, XNNReal::Infinity) => Ordering::Less,
        }
    }
}

impl fmt::Display for XNNReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            XNNReal::Finite(x) => write!(f, "{x}"),
            XNNReal::Infinity => write!(f, "inf"),
        }
    }
}

impl Serialize for XNNReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            XNNReal::Finite(x) => s.serialize_f64(*x),
            XNNReal::Infinity => s.serialize_str("inf"),
        }
    }
}

struct XVisitor;

impl<'de> Visitor<'de> for XVisitor {
    type Value = XNNReal;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        write!(f, "a nonnegative number or the string \"inf\"")
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<XNNReal, E> {
        XNNReal::finite(v).map_err(|_| E::custom(format!("{v} is not a nonnegative real")))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<XNNReal, E> {
        self.visit_f64(v as f64)
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<XNNReal, E> {
        self.visit_f64(v as f64)
    }

    fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<XNNReal, E> {
        match v {
            "inf" => Ok(XNNReal::Infinity),
            _ => Err(E::custom(format!("unexpected string {v:?}, want \"inf\""))),
        }
    }
}

impl<'de> Deserialize<'de> for XNNReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        d.deserialize_any(XVisitor)
    }
}

/// A probability: a real in `[0, 1]`, validated exactly at construction.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct Prob(f64);

impl Prob {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidProbability { value: p });
        }
        Ok(Prob(p))
    }

    /// Clamp into `[0, 1]`; for values that are probabilities up to rounding.
    pub fn clamped(p: f64) -> Self {
        assert!(!p.is_nan(), "NaN reached Prob");
        Prob(p.clamp(0.0, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `1 - p`, exact within [0, 1].
    pub fn complement(self) -> Prob {
        Prob(1.0 - self.0)
    }
}

impl fmt::Display for Prob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl<'de> Deserialize<'de> for Prob {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let p = f64::deserialize(d)?;
        Prob::new(p).map_err(de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fin(x: f64) -> XNNReal {
        XNNReal::finite(x).unwrap()
    }

    const INF: XNNReal = XNNReal::Infinity;

    #[test]
    fn add_conventions() {
        assert_eq!(XNNReal::ZERO + fin(2.5), fin(2.5));
        assert_eq!(INF + fin(3.0), INF);
        assert_eq!(fin(3.0) + INF, INF);
        assert_eq!(INF + INF, INF);
        assert_eq!(fin(1.5) + fin(2.5), fin(4.0));
    }

    #[test]
    fn mul_conventions() {
        assert_eq!(INF * XNNReal::ZERO, XNNReal::ZERO);
        assert_eq!(XNNReal::ZERO * INF, XNNReal::ZERO);
        assert_eq!(INF * fin(2.0), INF);
        assert_eq!(fin(2.0) * INF, INF);
        assert_eq!(INF * INF, INF);
        assert_eq!(fin(1.0) * fin(0.25), fin(0.25));
    }

    #[test]
    fn sub_trunc_conventions() {
        assert_eq!(fin(5.0).sub_trunc(fin(3.0)), fin(2.0));
        assert_eq!(fin(3.0).sub_trunc(fin(5.0)), XNNReal::ZERO);
        assert_eq!(INF.sub_trunc(INF), XNNReal::ZERO);
        assert_eq!(INF.sub_trunc(fin(7.0)), INF);
        assert_eq!(fin(7.0).sub_trunc(INF), XNNReal::ZERO);
    }

    #[test]
    fn not_an_additive_group() {
        // (a + ∞) - ∞ = 0 ≠ a for finite a > 0
        let a = fin(2.0);
        assert_eq!((a + INF).sub_trunc(INF), XNNReal::ZERO);
        assert_ne!((a + INF).sub_trunc(INF), a);
    }

    #[test]
    fn exhaustive_class_table() {
        // one representative per class {0, finite > 0, ∞}; all 9 pairs per op
        let classes = [XNNReal::ZERO, fin(2.0), INF];
        let add_expect = [
            [XNNReal::ZERO, fin(2.0), INF],
            [fin(2.0), fin(4.0), INF],
            [INF, INF, INF],
        ];
        let mul_expect = [
            [XNNReal::ZERO, XNNReal::ZERO, XNNReal::ZERO],
            [XNNReal::ZERO, fin(4.0), INF],
            [XNNReal::ZERO, INF, INF],
        ];
        let sub_expect = [
            [XNNReal::ZERO, XNNReal::ZERO, XNNReal::ZERO],
            [fin(2.0), XNNReal::ZERO, XNNReal::ZERO],
            [INF, INF, XNNReal::ZERO],
        ];
        for (i, &a) in classes.iter().enumerate() {
            for (j, &b) in classes.iter().enumerate() {
                assert_eq!(a + b, add_expect[i][j], "add {a} {b}");
                assert_eq!(a * b, mul_expect[i][j], "mul {a} {b}");
                assert_eq!(a.sub_trunc(b), sub_expect[i][j], "sub {a} {b}");
            }
        }
    }

    #[test]
    fn total_order_with_infinity_max() {
        assert!(XNNReal::ZERO < fin(1e-300));
        assert!(fin(1e300) < INF);
        assert_eq!(INF.cmp(&INF), std::cmp::Ordering::Equal);
    }

    #[test]
    fn to_finite_roundtrip() {
        assert_eq!(fin(2.0).to_finite(), Some(2.0));
        assert_eq!(fin(0.0).to_finite(), Some(0.0));
        assert_eq!(INF.to_finite(), None);
    }

    #[test]
    fn serde_number_or_inf() {
        assert_eq!(serde_json::to_string(&fin(1.5)).unwrap(), "1.5");
        assert_eq!(serde_json::to_string(&INF).unwrap(), "\"inf\"");
        let x: XNNReal = serde_json::from_str("3.25").unwrap();
        assert_eq!(x, fin(3.25));
        let y: XNNReal = serde_json::from_str("\"inf\"").unwrap();
        assert_eq!(y, INF);
        assert!(serde_json::from_str::<XNNReal>("-1.0").is_err());
        assert!(serde_json::from_str::<XNNReal>("\"nan\"").is_err());
    }

    #[test]
    fn prob_bounds_are_exact() {
        assert!(Prob::new(0.0).is_ok());
        assert!(Prob::new(1.0).is_ok());
        assert!(Prob::new(1.0 + 1e-16).is_ok()); // rounds to exactly 1.0
        assert!(Prob::new(1.0 + 1e-12).is_err());
        assert!(Prob::new(-1e-12).is_err());
        assert!(Prob::new(f64::NAN).is_err());
    }

    /// Strategy over [0, ∞] mixing the three classes.
    fn xnn() -> impl Strategy<Value = XNNReal> {
        prop_oneof![
            2 => (0.0f64..1e6).prop_map(|x| XNNReal::finite(x).unwrap()),
            1 => Just(XNNReal::ZERO),
            1 => Just(XNNReal::Infinity),
        ]
    }

    /// Exact rationals so that finite associativity checks are bit-exact.
    fn xnn_dyadic() -> impl Strategy<Value = XNNReal> {
        prop_oneof![
            2 => (0u32..4096).prop_map(|n| XNNReal::Finite(n as f64 / 64.0)),
            1 => Just(XNNReal::ZERO),
            1 => Just(XNNReal::Infinity),
        ]
    }

    proptest! {
        #[test]
        fn add_commutative(a in xnn(), b in xnn()) {
            prop_assert_eq!(a + b, b + a);
        }

        #[test]
        fn mul_commutative(a in xnn(), b in xnn()) {
            prop_assert_eq!(a * b, b * a);
        }

        #[test]
        fn add_associative(a in xnn_dyadic(), b in xnn_dyadic(), c in xnn_dyadic()) {
            prop_assert_eq!((a + b) + c, a + (b + c));
        }

        #[test]
        fn mul_associative_classes(a in xnn_dyadic(), b in xnn_dyadic(), c in xnn_dyadic()) {
            // dyadic finite values below 2^12/2^6 multiply exactly
            prop_assert_eq!((a * b) * c, a * (b * c));
        }

        #[test]
        fn monotone_in_each_argument(a in xnn(), a2 in xnn(), b in xnn()) {
            let (lo, hi) = if a <= a2 { (a, a2) } else { (a2, a) };
            prop_assert!(lo + b <= hi + b);
            prop_assert!(lo * b <= hi * b);
        }

        #[test]
        fn distributive_including_infinity(a in xnn_dyadic(), b in xnn_dyadic(), c in xnn_dyadic()) {
            prop_assert_eq!(a * (b + c), a * b + a * c);
        }

        #[test]
        fn order_total(a in xnn(), b in xnn()) {
            prop_assert!(a <= b || b <= a);
        }
    }
}
