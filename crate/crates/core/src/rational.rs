//! Exact fraction arithmetic for spectra and probabilities.
//!
//! Everything that decides whether an evolution closes — inverse-gap LCMs,
//! the integer ladder of winding numbers, selection denominators — must be
//! computed without rounding. This module wraps arbitrary-precision
//! rationals (so LCM chains cannot overflow), and adds the three
//! number-theoretic operations the rest of the crate needs:
//!
//! - [`lcm_set`]: least common multiple of positive rationals, the smallest
//!   positive rational divisible by every input;
//! - [`rationalize`]: best continued-fraction convergent of a float under a
//!   denominator bound, with an explicit convergence verdict;
//! - [`squarefree_part`]: the squarefree kernel used by the phase
//!   selection rule.
//!
//! External text form is `"p/q"` (or bare `"p"` for integers) with an
//! optional leading sign and no interior whitespace.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// Exact rational number with arbitrary-precision numerator and
/// denominator (denominator kept positive, fraction kept reduced).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(BigRational);

impl Rational {
    /// Reduced fraction `num/den`. Errors when `den == 0`.
    pub fn new<N: Into<BigInt>, D: Into<BigInt>>(num: N, den: D) -> Result<Self> {
        let den = den.into();
        if den.is_zero() {
            return Err(Error::InvalidRational("denominator is zero".into()));
        }
        Ok(Rational(BigRational::new(num.into(), den)))
    }

    pub fn from_integer<N: Into<BigInt>>(n: N) -> Self {
        Rational(BigRational::from_integer(n.into()))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    /// The exact integer value, if the denominator is one.
    pub fn to_integer_exact(&self) -> Option<BigInt> {
        self.is_integer().then(|| self.0.numer().clone())
    }

    /// `1/self`. Errors on zero.
    pub fn recip(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::InvalidRational("reciprocal of zero".into()));
        }
        Ok(Rational(self.0.recip()))
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    /// Nearest-double rendering; exact when numerator and denominator both
    /// fit a double.
    pub fn to_f64(&self) -> f64 {
        self.0
            .to_f64()
            .unwrap_or_else(|| match (self.0.numer().to_f64(), self.0.denom().to_f64()) {
                (Some(n), Some(d)) => n / d,
                _ => f64::NAN,
            })
    }

    /// `self - floor(self + 1/2)`: signed fractional part in `[-1/2, 1/2)`,
    /// together with the integer that was removed.
    pub fn round_split(&self) -> (BigInt, Rational) {
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let m = (&self.0 + half).floor().to_integer();
        let frac = Rational(&self.0 - BigRational::from_integer(m.clone()));
        (m, frac)
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl std::ops::$trait for &Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational(std::ops::$trait::$method(&self.0, &rhs.0))
            }
        }
    };
}
forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);

impl std::ops::Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl FromStr for Rational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        // Accept the typographic minus sign as well as ASCII.
        let s = s.replace('\u{2212}', "-");
        let parse_int = |t: &str| -> Result<BigInt> {
            BigInt::from_str(t)
                .map_err(|_| Error::InvalidRational(format!("cannot parse integer {t:?}")))
        };
        match s.split_once('/') {
            None => Ok(Rational(BigRational::from_integer(parse_int(&s)?))),
            Some((num, den)) => {
                let num = parse_int(num)?;
                let den = parse_int(den)?;
                Rational::new(num, den)
            }
        }
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Least common multiple of a set of positive rationals: the smallest
/// positive rational `L` such that `L/r` is an integer for every `r` in
/// the set. For reduced fractions `p_k/q_k` this is
/// `LCM(p_k) / GCD(q_k)`.
pub fn lcm_set(values: &[Rational]) -> Result<Rational> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("lcm_set of an empty set".into()));
    }
    for (k, v) in values.iter().enumerate() {
        if !v.is_positive() {
            return Err(Error::InvalidArgument(format!(
                "lcm_set requires positive inputs; entry {k} is {v}"
            )));
        }
    }
    let mut num = values[0].numer().clone();
    let mut den = values[0].denom().clone();
    for v in &values[1..] {
        num = num.lcm(v.numer());
        den = den.gcd(v.denom());
    }
    Rational::new(num, den)
}

/// Outcome of approximating a float by a bounded-denominator fraction.
#[derive(Clone, Debug)]
pub struct RationalizationResult {
    /// Best continued-fraction convergent with denominator ≤ the bound.
    pub value: Rational,
    /// `|x - value|`.
    pub residual: f64,
    /// Whether `residual ≤ tol`.
    pub converged: bool,
}

/// Best continued-fraction convergent of `x` with denominator at most
/// `max_denominator`, judged against the absolute tolerance `tol`.
///
/// Exact fractions round-trip: if `x` is exactly `p/q` with
/// `q ≤ max_denominator`, the result is `p/q` with zero residual. An
/// irrational (or too-deep) input comes back with `converged == false`
/// whenever its best convergent misses by more than `tol`.
pub fn rationalize(x: f64, max_denominator: u64, tol: f64) -> Result<RationalizationResult> {
    if !x.is_finite() {
        return Err(Error::InvalidRational(format!(
            "cannot rationalize non-finite value {x}"
        )));
    }
    if max_denominator == 0 {
        return Err(Error::InvalidArgument(
            "max_denominator must be at least 1".into(),
        ));
    }
    if tol < 0.0 || !tol.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be a non-negative finite number, got {tol}"
        )));
    }

    let bound = BigInt::from(max_denominator);

    // Convergent recurrence h_i = a_i h_{i-1} + h_{i-2} (same for k).
    let mut h_prev = BigInt::one(); // h_{-1}
    let mut h_prev2 = BigInt::zero(); // h_{-2}
    let mut k_prev = BigInt::zero(); // k_{-1}
    let mut k_prev2 = BigInt::one(); // k_{-2}

    let mut best: Option<Rational> = None;
    let mut t = x;
    for _ in 0..64 {
        let a_f = t.floor();
        let a = BigInt::from_f64(a_f).ok_or_else(|| {
            Error::InvalidRational(format!("continued fraction term out of range at {t}"))
        })?;
        let h = &a * &h_prev + &h_prev2;
        let k = &a * &k_prev + &k_prev2;
        if k > bound {
            break;
        }
        best = Some(Rational::new(h.clone(), k.clone())?);
        h_prev2 = std::mem::replace(&mut h_prev, h);
        k_prev2 = std::mem::replace(&mut k_prev, k);

        let frac = t - a_f;
        // Below this the remainder is floating-point noise, not signal.
        if frac <= 1e-14 * a_f.abs().max(1.0) {
            break;
        }
        t = 1.0 / frac;
    }

    let value = best.expect("first convergent has denominator 1 <= bound");
    let residual = (x - value.to_f64()).abs();
    Ok(RationalizationResult {
        converged: residual <= tol,
        value,
        residual,
    })
}

/// [`rationalize`], hardened against false positives on irrationals.
///
/// A bare residual test cannot tell `1/3` from `√2`: every irrational has
/// convergents whose residual shrinks like `1/q²`, so some fraction under
/// any denominator bound will satisfy any reasonable tolerance (for `√2`
/// the convergent with denominator 470832 is already within `3e-12`). The
/// discriminating property is *termination*: a float that really is `p/q`
/// has a continued fraction that stops at `p/q` (up to machine noise),
/// while an irrational keeps producing deeper convergents. So this runs
/// the approximation twice — at `max_denominator` and at a bound 1024×
/// larger — and reports convergence only when both agree on the same
/// fraction and the residual is within `tol`.
pub fn rationalize_checked(
    x: f64,
    max_denominator: u64,
    tol: f64,
) -> Result<RationalizationResult> {
    let first = rationalize(x, max_denominator, tol)?;
    if !first.converged {
        return Ok(first);
    }
    let escalated = max_denominator.saturating_mul(1024);
    let second = rationalize(x, escalated, tol)?;
    let stable = second.value == first.value;
    Ok(RationalizationResult {
        converged: stable,
        ..first
    })
}

/// Squarefree part of a positive integer: the product of the primes that
/// appear in `n` with odd exponent. `n = squarefree_part(n) · t²` for an
/// integer `t`.
pub fn squarefree_part(n: u64) -> Result<u64> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "squarefree part of zero is undefined".into(),
        ));
    }
    let mut rest = n;
    let mut kernel = 1u64;
    let mut p = 2u64;
    while p * p <= rest {
        if rest % p == 0 {
            let mut exp = 0u32;
            while rest % p == 0 {
                rest /= p;
                exp += 1;
            }
            if exp % 2 == 1 {
                kernel *= p;
            }
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if rest > 1 {
        kernel *= rest; // leftover prime, exponent one
    }
    Ok(kernel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d).unwrap()
    }

    /// Smallest positive rational divisible by everything in `set`, found
    /// by scanning multiples of 1/GCD(denominators). Independent of the
    /// closed form in `lcm_set`.
    fn lcm_brute(set: &[Rational]) -> Rational {
        let mut g = set[0].denom().clone();
        for v in &set[1..] {
            g = g.gcd(v.denom());
        }
        let step = Rational::new(1, g).unwrap();
        let mut m = BigInt::one();
        loop {
            let cand = &Rational::from_integer(m.clone()) * &step;
            if set
                .iter()
                .all(|v| (&cand * &v.recip().unwrap()).is_integer())
            {
                return cand;
            }
            m += 1;
            assert!(m < BigInt::from(10_000_000), "brute-force scan ran away");
        }
    }

    #[test]
    fn reduce_normalizes_sign_and_gcd() {
        assert_eq!(r(2, 4), r(1, 2));
        assert_eq!(r(1, -2), r(-1, 2));
        assert_eq!(r(-3, -6), r(1, 2));
        assert!(Rational::new(1, 0).is_err());
    }

    #[test]
    fn display_and_parse_roundtrip() {
        assert_eq!(r(-3, 7).to_string(), "-3/7");
        assert_eq!(r(8, 4).to_string(), "2");
        assert_eq!("−3/7".parse::<Rational>().unwrap(), r(-3, 7)); // U+2212
        assert_eq!("+5".parse::<Rational>().unwrap(), r(5, 1));
        assert!("1/ 2".parse::<Rational>().is_err());
        assert!("".parse::<Rational>().is_err());
    }

    #[test]
    fn lcm_of_inverse_gaps() {
        // {1/6, 1/10}: LCM(1,1)/GCD(6,10) = 1/2
        let l = lcm_set(&[r(1, 6), r(1, 10)]).unwrap();
        assert_eq!(l, r(1, 2));
        assert_eq!(lcm_brute(&[r(1, 6), r(1, 10)]), r(1, 2));

        assert_eq!(lcm_set(&[r(1, 2), r(1, 3)]).unwrap(), r(1, 1));
        assert_eq!(lcm_set(&[r(5, 1)]).unwrap(), r(5, 1));
    }

    #[test]
    fn lcm_rejects_bad_input() {
        assert!(lcm_set(&[]).is_err());
        assert!(lcm_set(&[r(1, 2), r(-1, 3)]).is_err());
        assert!(lcm_set(&[Rational::zero()]).is_err());
    }

    #[test]
    fn rationalize_recovers_short_decimals() {
        let res = rationalize(0.333333333333, 1_000_000, 1e-9).unwrap();
        assert_eq!(res.value, r(1, 3));
        assert!(res.converged);
        assert!(res.residual < 1e-9);
    }

    #[test]
    fn rationalize_pi_under_tiny_bound() {
        let res = rationalize(std::f64::consts::PI, 10, 1e-9).unwrap();
        assert_eq!(res.value, r(22, 7));
        assert!(!res.converged);
        assert!((res.residual - 1.2645e-3).abs() < 1e-6);
    }

    #[test]
    fn rationalize_exact_fraction_roundtrips_at_zero_tolerance() {
        for &(p, q) in &[(1i64, 3i64), (-3, 7), (355, 113), (22, 7), (0, 1), (7, 1)] {
            let x = p as f64 / q as f64;
            let res = rationalize(x, q as u64, 0.0).unwrap();
            assert_eq!(res.value, r(p, q), "{p}/{q}");
            assert_eq!(res.residual, 0.0);
            assert!(res.converged);
        }
    }

    #[test]
    fn rationalize_rejects_junk() {
        assert!(rationalize(f64::NAN, 10, 1e-9).is_err());
        assert!(rationalize(f64::INFINITY, 10, 1e-9).is_err());
        assert!(rationalize(0.5, 0, 1e-9).is_err());
        assert!(rationalize(0.5, 10, -1.0).is_err());
    }

    #[test]
    fn checked_rationalization_rejects_quadratic_irrationals() {
        // √2's best convergent under 10^6 sits within 3e-12 of √2, so the
        // bare residual test "converges"; the stability test must not.
        let naive = rationalize(std::f64::consts::SQRT_2, 1_000_000, 1e-9).unwrap();
        assert!(naive.converged, "residual test alone is fooled");
        let checked = rationalize_checked(std::f64::consts::SQRT_2, 1_000_000, 1e-9).unwrap();
        assert!(!checked.converged);

        // while genuine fractions stay accepted
        let ok = rationalize_checked(2.0 / 3.0, 1_000_000, 1e-9).unwrap();
        assert!(ok.converged);
        assert_eq!(ok.value, r(2, 3));
        // including ones that are not exactly representable in binary
        let ok = rationalize_checked(0.333333333333, 1_000_000, 1e-9).unwrap();
        assert!(ok.converged);
        assert_eq!(ok.value, r(1, 3));
    }

    #[test]
    fn squarefree_examples() {
        assert_eq!(squarefree_part(12).unwrap(), 3);
        assert_eq!(squarefree_part(45).unwrap(), 5);
        assert_eq!(squarefree_part(1).unwrap(), 1);
        assert_eq!(squarefree_part(36).unwrap(), 1);
        assert_eq!(squarefree_part(97).unwrap(), 97);
        assert!(squarefree_part(0).is_err());
    }

    #[test]
    fn round_split_signed_fraction() {
        let (m, frac) = r(7, 2).round_split(); // 3.5 -> m=4, frac=-1/2
        assert_eq!(m, BigInt::from(4));
        assert_eq!(frac, r(-1, 2));
        let (m, frac) = r(1, 3).round_split();
        assert_eq!(m, BigInt::from(0));
        assert_eq!(frac, r(1, 3));
    }

    proptest! {
        #[test]
        fn lcm_matches_brute_force(nums in prop::collection::vec((1i64..40, 1i64..40), 1..5)) {
            let set: Vec<Rational> = nums.iter().map(|&(n, d)| r(n, d)).collect();
            let closed = lcm_set(&set).unwrap();
            let brute = lcm_brute(&set);
            prop_assert_eq!(closed.clone(), brute);
            // divisibility: L/r integer for all r
            for v in &set {
                prop_assert!((&closed * &v.recip().unwrap()).is_integer());
            }
            // duplication invariance
            let mut doubled = set.clone();
            doubled.extend_from_slice(&set);
            prop_assert_eq!(lcm_set(&doubled).unwrap(), closed);
        }

        #[test]
        fn squarefree_reconstructs(n in 1u64..200_000) {
            let s = squarefree_part(n).unwrap();
            // n = s·t² with integer t
            let t2 = n / s;
            prop_assert_eq!(n % s, 0);
            let t = (t2 as f64).sqrt().round() as u64;
            prop_assert_eq!(t * t, t2);
            // s itself is squarefree
            prop_assert_eq!(squarefree_part(s).unwrap(), s);
        }

        #[test]
        fn rationalize_recovers_random_fractions(p in -500i64..500, q in 1i64..1000) {
            let x = p as f64 / q as f64;
            let res = rationalize(x, 1_000_000, 1e-9).unwrap();
            prop_assert!(res.converged);
            // same value, possibly reduced
            prop_assert_eq!(res.value, r(p, q));
        }

        #[test]
        fn parse_display_roundtrip(p in -1000i64..1000, q in 1i64..1000) {
            let v = r(p, q);
            let back: Rational = v.to_string().parse().unwrap();
            prop_assert_eq!(back, v);
        }
    }
}
