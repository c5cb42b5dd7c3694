//! Exact rational helpers shared by tables, ledgers and LP certification.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serializer};

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qu(n: u64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn half() -> Q {
    q(1, 2)
}

/// `base^exp` for a possibly negative exponent.
pub fn powi(base: &Q, exp: i64) -> Q {
    if exp >= 0 {
        num::pow::pow(base.clone(), exp as usize)
    } else {
        num::pow::pow(base.recip(), (-exp) as usize)
    }
}

/// `2^-k`.
pub fn pow2_neg(k: i64) -> Q {
    powi(&qi(2), -k)
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        let n = x.numer().to_f64().unwrap_or(f64::NAN);
        let d = x.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Exact value of a finite double.
pub fn from_f64(x: f64) -> Q {
    Q::from_float(x).expect("finite float")
}

/// Parses `"3"`, `"-7/4"`, a decimal such as `"0.05144"`, or a quotient of
/// decimals such as `"0.01245/18"`, exactly.
pub fn parse(s: &str) -> Option<Q> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n = parse_decimal(n.trim())?;
        let d = parse_decimal(d.trim())?;
        if d.is_zero() {
            return None;
        }
        return Some(n / d);
    }
    parse_decimal(s)
}

fn parse_decimal(s: &str) -> Option<Q> {
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int, frac) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{}{}", if int.is_empty() { "0" } else { int }, frac);
    let n: BigInt = digits.parse().ok()?;
    let d = num::pow::pow(BigInt::from(10), frac.len());
    let v = Q::new(n, d);
    Some(if neg { -v } else { v })
}

pub fn format(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Largest rational with denominator at most `max_den` that is `<= x`.
pub fn rationalize_floor(x: &Q, max_den: u64) -> Q {
    let (lo, _) = bracket(x, max_den);
    lo
}

/// Rational with denominator at most `max_den` nearest to `x`.
pub fn rationalize_nearest(x: &Q, max_den: u64) -> Q {
    let (lo, hi) = bracket(x, max_den);
    if (x - &lo).abs() <= (&hi - x).abs() {
        lo
    } else {
        hi
    }
}

/// Best lower and upper approximations of `x` with bounded denominator,
/// from the Stern-Brocot descent driven by the continued fraction of `x`.
fn bracket(x: &Q, max_den: u64) -> (Q, Q) {
    let max_den = BigInt::from(max_den.max(1));
    let fl = x.floor();
    if *x == fl {
        return (x.clone(), x.clone());
    }
    let base = fl.to_integer();
    let frac = x - &fl;
    // Convergents of frac in (0, 1).
    let (mut p0, mut q0) = (BigInt::one(), BigInt::zero());
    let (mut p1, mut q1) = (BigInt::zero(), BigInt::one());
    let mut r = frac.clone();
    let mut lo = (BigInt::zero(), BigInt::one());
    let mut hi = (BigInt::one(), BigInt::one());
    loop {
        if r.is_zero() {
            break;
        }
        let inv = r.recip();
        let a = inv.floor().to_integer();
        let p2 = &a * &p1 + &p0;
        let q2 = &a * &q1 + &q0;
        if q2 > max_den {
            // Semiconvergent with the largest admissible coefficient.
            let t = (&max_den - &q0) / &q1;
            let ps = &t * &p1 + &p0;
            let qs = &t * &q1 + &q0;
            let cand = Q::new(ps.clone(), qs.clone());
            let last = Q::new(p1.clone(), q1.clone());
            let (l, h) = if cand < last { (cand, last) } else { (last, cand) };
            lo = (l.numer().clone(), l.denom().clone());
            hi = (h.numer().clone(), h.denom().clone());
            break;
        }
        p0 = std::mem::replace(&mut p1, p2);
        q0 = std::mem::replace(&mut q1, q2);
        let conv = Q::new(p1.clone(), q1.clone());
        if conv == frac {
            lo = (p1.clone(), q1.clone());
            hi = lo.clone();
            break;
        }
        if conv < frac {
            lo = (p1.clone(), q1.clone());
        } else {
            hi = (p1.clone(), q1.clone());
        }
        r = inv - Q::from_integer(a);
    }
    let b = Q::from_integer(base);
    (
        &b + Q::new(lo.0, lo.1),
        &b + Q::new(hi.0, hi.1),
    )
}

pub fn ser<S: Serializer>(x: &Q, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format(x))
}

pub fn de<'de, D: Deserializer<'de>>(d: D) -> Result<Q, D::Error> {
    let s = String::deserialize(d)?;
    parse(&s).ok_or_else(|| serde::de::Error::custom(format!("invalid rational `{s}`")))
}

pub fn ser_vec<S: Serializer>(xs: &[Q], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(xs.len()))?;
    for x in xs {
        seq.serialize_element(&format(x))?;
    }
    seq.end()
}

pub fn de_vec<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Q>, D::Error> {
    let v = Vec::<String>::deserialize(d)?;
    v.iter()
        .map(|s| parse(s).ok_or_else(|| serde::de::Error::custom(format!("invalid rational `{s}`"))))
        .collect()
}
