//! Continued-fraction convergents and the epsilon-driven convergent
//! selection used on first differences.
//!
//! Expansion always runs on an exact rational representation: the dyadic
//! mantissa of an f64, or a fixed-point mantissa from the extended-precision
//! pipeline. Convergents of an f64 are exact for that dyadic value; as
//! approximations of the real the f64 came from they are trustworthy up to
//! roughly `q * q' < 2^52` (about `q <= 2^26`), and up to `q * q' < 2^(F-2)`
//! for an F-bit fixed-point source.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fixedpoint::{decompose_f64, golden_fx, sqrt_fx};
use crate::jsonfmt::sig17;
use crate::seq::Approx;

/// One continued-fraction approximant `p/q` with the next denominator and
/// the guaranteed error bound `1/(q q')` (0 when the expansion terminated).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Convergent {
    pub p: i128,
    pub q: u128,
    /// First denominator past this convergent; `None` when the expansion
    /// terminated (the value is exactly `p/q`).
    pub q_next: Option<u128>,
    #[serde(serialize_with = "sig17")]
    pub err_bound: f64,
}

fn to_rational(theta: &Approx) -> (BigInt, BigInt) {
    match theta {
        Approx::Float(v) => {
            let (m, e) = decompose_f64(*v);
            if e >= 0 {
                (BigInt::from(m) << e as u64, BigInt::from(1u8))
            } else {
                (BigInt::from(m), BigInt::from(1u8) << (-e) as u64)
            }
        }
        Approx::Fixed(fx) => (fx.num.clone(), BigInt::from(1u8) << fx.bits),
    }
}

fn big_to_u128_saturating(v: &BigInt) -> u128 {
    v.to_u128().unwrap_or(u128::MAX)
}

/// All convergents with denominator at most `q_cap`, denominators strictly
/// increasing (a duplicate `q_0 = q_1 = 1` keeps only the later, better
/// approximant), each carrying the next raw denominator when the expansion
/// continues.
pub fn convergents_of(theta: &Approx, q_cap: u128) -> Vec<Convergent> {
    assert!(q_cap >= 1);
    let (mut n, mut d) = to_rational(theta);
    // raw convergent recurrences
    let mut raw: Vec<(BigInt, BigInt)> = Vec::new();
    let (mut p2, mut p1) = (BigInt::from(1u8), BigInt::zero()); // p_{-2}, p_{-1}
    let (mut q2, mut q1) = (BigInt::zero(), BigInt::from(1u8));
    std::mem::swap(&mut p2, &mut p1); // p_{-1}=1, p_{-2}=0 after swap
    std::mem::swap(&mut q2, &mut q1); // q_{-1}=0, q_{-2}=1
    let cap = BigInt::from(q_cap);
    loop {
        let (a, rem) = n.div_mod_floor(&d);
        let p = &a * &p1 + &p2;
        let q = &a * &q1 + &q2;
        let over_cap = q > cap;
        raw.push((p.clone(), q.clone()));
        p2 = std::mem::replace(&mut p1, p);
        q2 = std::mem::replace(&mut q1, q);
        if rem.is_zero() || over_cap {
            break;
        }
        n = std::mem::replace(&mut d, rem);
    }

    let exact_theta = to_rational(theta);
    let mut out = Vec::new();
    for (i, (p, q)) in raw.iter().enumerate() {
        let qi = big_to_u128_saturating(q);
        if qi > q_cap {
            break;
        }
        // collapse q0 = q1 = 1 to the later approximant
        if i + 1 < raw.len() && raw[i + 1].1 == *q {
            continue;
        }
        let q_next_big = raw.get(i + 1).map(|(_, qn)| qn);
        let q_next = q_next_big.map(big_to_u128_saturating);
        let err_bound = match q_next_big {
            Some(qn) => inv_prod_f64(q, qn),
            None => 0.0,
        };
        debug_assert!(validates_error_bound(&exact_theta, p, q, q_next_big));
        out.push(Convergent {
            p: p.to_i128().expect("numerator fits i128 under the cap"),
            q: qi,
            q_next,
            err_bound,
        });
    }
    out
}

fn inv_prod_f64(q: &BigInt, qn: &BigInt) -> f64 {
    let prod = q * qn;
    let f = prod.to_f64().unwrap_or(f64::INFINITY);
    if f.is_finite() && f > 0.0 {
        1.0 / f
    } else {
        0.0
    }
}

/// `|theta - p/q| <= 1/(q q_next)`, exact in rational arithmetic.
fn validates_error_bound(
    theta: &(BigInt, BigInt),
    p: &BigInt,
    q: &BigInt,
    q_next: Option<&BigInt>,
) -> bool {
    let (num, den) = theta;
    // |num/den - p/q| <= 1/(q qn)  <=>  |num q - p den| * qn <= den
    let lhs = (num * q - p * den).abs();
    match q_next {
        Some(qn) => lhs * qn <= *den,
        None => lhs.is_zero(),
    }
}

/// Convergents of a double-precision theta.
pub fn convergents(theta: f64, q_cap: u128) -> Vec<Convergent> {
    convergents_of(&Approx::Float(theta), q_cap)
}

/// The unique convergent with `q <= eps^-4 < q_next`. A rational theta whose
/// expansion ends at or below the cap yields its final convergent with
/// `q_next` absent (exact, error bound 0).
///
/// Selection itself works for any eps in (0, 1); the certification pipeline
/// separately constrains eps below 1/10.
pub fn select_convergent_of(theta: &Approx, epsilon: f64) -> Result<Convergent> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::EpsilonOutOfRange(epsilon));
    }
    let cap = (1.0 / epsilon).powi(4).floor() as u128;
    let list = convergents_of(theta, cap);
    list.into_iter()
        .last()
        .ok_or_else(|| Error::Precondition("empty convergent list".into()))
}

pub fn select_convergent(theta: f64, epsilon: f64) -> Result<Convergent> {
    select_convergent_of(&Approx::Float(theta), epsilon)
}

/// Theta mini-language for the CLI: a decimal literal, `sqrt:<k>`, or
/// `golden`, the latter two carried at 256 fixed-point bits.
pub fn parse_theta(s: &str) -> Result<Approx> {
    let s = s.trim();
    if s == "golden" {
        return Ok(Approx::Fixed(golden_fx(256)));
    }
    if let Some(k) = s.strip_prefix("sqrt:") {
        let k: u64 = k
            .parse()
            .map_err(|_| Error::InvalidSpec(format!("sqrt:<k> needs an integer, got {s}")))?;
        return Ok(Approx::Fixed(sqrt_fx(k, 256)));
    }
    let v: f64 = s
        .parse()
        .map_err(|_| Error::InvalidSpec(format!("not a theta: {s}")))?;
    if !v.is_finite() {
        return Err(Error::InvalidSpec("theta must be finite".into()));
    }
    Ok(Approx::Float(v))
}
