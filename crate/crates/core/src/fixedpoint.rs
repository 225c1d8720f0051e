//! Exact fixed-point evaluation of the named closed forms.
//!
//! The certification pipeline reads fractional parts, first differences and
//! second differences of sequences like `n^{3/2}` at indices far beyond 2^53,
//! where the values themselves exceed 10^40 and every quantity of interest
//! lives below 10^-10. Doubles cannot carry both ends, so closed forms are
//! evaluated as `floor(x_n * 2^bits)` in big-integer arithmetic and all small
//! quantities are produced as exact differences of those mantissas.
//!
//! Trust horizons:
//! - `power` supports exponents `a = k / 2^j` with `k <= 64`, `j <= 4`
//!   (covers `3/2`, `5/4`, integer powers, ...); other exponents have no
//!   extended-precision path and fall back to f64 at desk scale.
//! - `log`/`nlog` mantissas carry an error below 4 ulp at the requested
//!   width from the series truncation; `power` and `linear` are exact floors.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Default mantissa width for certification work.
pub const CERT_BITS: u32 = 160;

/// A fixed-point real: `value = num / 2^bits`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fx {
    pub num: BigInt,
    pub bits: u32,
}

impl Fx {
    pub fn new(num: BigInt, bits: u32) -> Self {
        Fx { num, bits }
    }

    pub fn zero(bits: u32) -> Self {
        Fx { num: BigInt::zero(), bits }
    }

    pub fn from_f64(x: f64, bits: u32) -> Self {
        let (m, e) = decompose_f64(x);
        let shift = e + bits as i64;
        let num = if shift >= 0 {
            BigInt::from(m) << shift as u64
        } else {
            shr_floor(BigInt::from(m), (-shift) as u64)
        };
        Fx { num, bits }
    }

    pub fn to_f64(&self) -> f64 {
        big_to_f64_scaled(&self.num, -(self.bits as i64))
    }

    /// Fractional part in [0, 1), rounded to f64.
    pub fn frac_f64(&self) -> f64 {
        let modulus = BigInt::from(1u8) << self.bits;
        let r = self.num.mod_floor(&modulus);
        let f = big_to_f64_scaled(&r, -(self.bits as i64));
        if f >= 1.0 {
            f64::from_bits(1.0f64.to_bits() - 1)
        } else {
            f
        }
    }

    pub fn sub(&self, other: &Fx) -> Fx {
        debug_assert_eq!(self.bits, other.bits);
        Fx { num: &self.num - &other.num, bits: self.bits }
    }
}

/// Exact decomposition of a finite f64: `x = m * 2^e`.
pub fn decompose_f64(x: f64) -> (i64, i64) {
    assert!(x.is_finite());
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { -1i64 } else { 1 };
    let exp_raw = ((bits >> 52) & 0x7ff) as i64;
    let frac = (bits & ((1u64 << 52) - 1)) as i64;
    if exp_raw == 0 {
        (sign * frac, -1074)
    } else {
        (sign * (frac | (1 << 52)), exp_raw - 1075)
    }
}

/// Shift right with floor semantics for either sign.
fn shr_floor(v: BigInt, k: u64) -> BigInt {
    let den = BigInt::from(1u8) << k;
    v.div_floor(&den)
}

/// Round `v * 2^scale` to the nearest f64 without overflowing intermediates.
fn big_to_f64_scaled(v: &BigInt, scale: i64) -> f64 {
    if v.is_zero() {
        return 0.0;
    }
    let mag = v.magnitude();
    let bl = mag.bits();
    let shift = bl.saturating_sub(63);
    let top = (mag >> shift).to_u64().expect("top bits fit u64") as f64;
    let value = top * 2f64.powi((shift as i64 + scale) as i32);
    if v.sign() == Sign::Minus {
        -value
    } else {
        value
    }
}

/// `floor(ln2 * 2^bits)` within a few ulp.
pub fn ln2_fx(bits: u32) -> BigUint {
    let w = bits + 32;
    // ln 2 = 2 atanh(1/3)
    let z = (BigUint::from(1u8) << w) / BigUint::from(3u8);
    let s = atanh_series(&z, w);
    (s << 1u8) >> 32
}

/// `ln(n) * 2^bits` within a few ulp, exact at n = 1.
pub fn ln_fx(n: u128, bits: u32) -> BigUint {
    assert!(n >= 1);
    if n == 1 {
        return BigUint::zero();
    }
    let w = bits + 32;
    let k = 127 - n.leading_zeros(); // n in [2^k, 2^{k+1})
    let pow2k = BigUint::from(1u8) << k;
    let nn = BigUint::from(n);
    // m = n / 2^k in [1, 2); z = (m-1)/(m+1)
    let z = ((&nn - &pow2k) << w) / (&nn + &pow2k);
    let ln_m = atanh_series(&z, w) << 1u8;
    let ln2 = {
        let z3 = (BigUint::from(1u8) << w) / BigUint::from(3u8);
        atanh_series(&z3, w) << 1u8
    };
    (ln2 * BigUint::from(k) + ln_m) >> 32
}

/// atanh(z) for fixed-point z in [0, 1/3], width `w`.
fn atanh_series(z: &BigUint, w: u32) -> BigUint {
    let mut acc = BigUint::zero();
    let zsq = (z * z) >> w;
    let mut term = z.clone();
    let mut k = 1u32;
    while !term.is_zero() {
        acc += &term / BigUint::from(k);
        term = (term * &zsq) >> w;
        k += 2;
        if k > 10 * w {
            break;
        }
    }
    acc
}

/// `floor(sqrt(k) * 2^bits)`, exact.
pub fn sqrt_fx(k: u64, bits: u32) -> Fx {
    let v = (BigUint::from(k) << (2 * bits)).sqrt();
    Fx::new(BigInt::from(v), bits)
}

/// `(1 + sqrt 5)/2 * 2^bits` within 1 ulp.
pub fn golden_fx(bits: u32) -> Fx {
    let s = (BigUint::from(5u8) << (2 * bits + 2)).sqrt();
    let num = ((BigUint::from(1u8) << (bits + 1)) + s) >> 2u8;
    Fx::new(BigInt::from(num), bits)
}

/// Exponent of a `power` family written as `k / 2^j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DyadicExponent {
    pub numer: u64,
    pub root_log2: u32,
}

/// Decompose `a` as `numer / 2^root_log2` when small enough for the
/// nth-root path.
pub fn dyadic_exponent(a: f64) -> Option<DyadicExponent> {
    if !(a > 0.0) || !a.is_finite() {
        return None;
    }
    let (m, e) = decompose_f64(a);
    let mut m = m as u64;
    let mut e = e;
    while m % 2 == 0 {
        m /= 2;
        e += 1;
    }
    if e >= 0 {
        let numer = m.checked_shl(e as u32)?;
        if numer <= 64 {
            return Some(DyadicExponent { numer, root_log2: 0 });
        }
        return None;
    }
    let root_log2 = (-e) as u32;
    if m <= 64 && root_log2 <= 4 {
        Some(DyadicExponent { numer: m, root_log2 })
    } else {
        None
    }
}

/// The named closed forms over n = 1, 2, ...
#[derive(Debug, Clone, PartialEq)]
pub enum ClosedForm {
    Power { a: f64 },
    NLog,
    Log,
    Linear { theta: f64 },
}

impl ClosedForm {
    /// Whether `value_fx` is available for this form.
    pub fn fx_supported(&self) -> bool {
        match self {
            ClosedForm::Power { a } => dyadic_exponent(*a).is_some(),
            _ => true,
        }
    }

    /// `floor(x_n * 2^bits)` (log/nlog: within 4 ulp).
    pub fn value_fx(&self, n: u128, bits: u32) -> Result<Fx> {
        assert!(n >= 1);
        match self {
            ClosedForm::Power { a } => {
                let d = dyadic_exponent(*a).ok_or_else(|| {
                    Error::PrecisionUnsupported(format!(
                        "power exponent {a} is not k/2^j with k <= 64, j <= 4"
                    ))
                })?;
                let base = BigUint::from(n).pow(d.numer as u32)
                    << ((bits as u64) << d.root_log2);
                let v = if d.root_log2 == 0 {
                    base
                } else {
                    base.nth_root(1u32 << d.root_log2)
                };
                Ok(Fx::new(BigInt::from(v), bits))
            }
            ClosedForm::NLog => {
                let extra = 128 - n.leading_zeros() + 16;
                let t = ln_fx(n, bits + extra);
                let v = (BigUint::from(n) * t) >> extra;
                Ok(Fx::new(BigInt::from(v), bits))
            }
            ClosedForm::Log => Ok(Fx::new(BigInt::from(ln_fx(n, bits)), bits)),
            ClosedForm::Linear { theta } => Ok({
                let (m, e) = decompose_f64(*theta);
                let shift = e + bits as i64;
                let num = if shift >= 0 {
                    (BigInt::from(m) * BigInt::from(n)) << shift as u64
                } else {
                    shr_floor(BigInt::from(m) * BigInt::from(n), (-shift) as u64)
                };
                Fx::new(num, bits)
            }),
        }
    }

    pub fn value_f64(&self, n: u128) -> f64 {
        let x = n as f64;
        match self {
            ClosedForm::Power { a } => x.powf(*a),
            ClosedForm::NLog => x * x.ln(),
            ClosedForm::Log => x.ln(),
            ClosedForm::Linear { theta } => theta * x,
        }
    }

    /// First difference `x_{n+1} - x_n`, evaluated without cancellation.
    pub fn delta1_f64(&self, n: u128) -> f64 {
        let x = n as f64;
        match self {
            ClosedForm::Power { a } => x.powf(*a) * (a * (1.0 / x).ln_1p()).exp_m1(),
            ClosedForm::NLog => (x + 1.0).ln() + x * (1.0 / x).ln_1p(),
            ClosedForm::Log => (1.0 / x).ln_1p(),
            ClosedForm::Linear { theta } => *theta,
        }
    }

    /// Second difference `x_{n+2} - 2 x_{n+1} + x_n`, evaluated without
    /// cancellation (series for large n, direct below the series radius).
    pub fn delta2_f64(&self, n: u128) -> f64 {
        let x = n as f64;
        match self {
            ClosedForm::Power { a } => {
                if n <= 32 {
                    (x + 2.0).powf(*a) - 2.0 * (x + 1.0).powf(*a) + x.powf(*a)
                } else {
                    // sum_{k>=2} C(a,k) (2^k - 2) n^{-(k-2)}
                    let mut binom = a * (a - 1.0) / 2.0;
                    let mut pow2 = 4.0;
                    let mut npow = 1.0;
                    let mut s = 0.0;
                    for k in 2..80u32 {
                        let term = binom * (pow2 - 2.0) * npow;
                        s += term;
                        if term.abs() < 1e-22 * s.abs() {
                            break;
                        }
                        binom *= (a - k as f64) / (k as f64 + 1.0);
                        pow2 *= 2.0;
                        npow /= x;
                    }
                    x.powf(a - 2.0) * s
                }
            }
            ClosedForm::NLog => {
                if n <= 8 {
                    (x + 2.0) * (x + 2.0).ln() - 2.0 * (x + 1.0) * (x + 1.0).ln()
                        + x * x.ln()
                } else {
                    // sum_{m>=1} (-1)^{m+1} (2^{m+1}-2) / (m(m+1)) n^{-m}
                    let mut s = 0.0;
                    let mut npow = 1.0 / x;
                    let mut pow2 = 4.0;
                    let mut sign = 1.0;
                    for m in 1..80u32 {
                        let term = sign * (pow2 - 2.0) / (m as f64 * (m as f64 + 1.0))
                            * npow;
                        s += term;
                        if term.abs() < 1e-22 * s.abs() {
                            break;
                        }
                        npow /= x;
                        pow2 *= 2.0;
                        sign = -sign;
                    }
                    s
                }
            }
            ClosedForm::Log => (-1.0 / ((x + 1.0) * (x + 1.0))).ln_1p(),
            ClosedForm::Linear { .. } => 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_fx_is_exact_floor() {
        let form = ClosedForm::Power { a: 1.5 };
        for n in [2u128, 3, 10, 1_000_003] {
            let v = form.value_fx(n, 96).unwrap();
            let m = v.num.to_biguint().unwrap();
            // m = floor(sqrt(n^3 * 2^192)) exactly
            let target = BigUint::from(n).pow(3) << 192;
            assert!(&m * &m <= target);
            let m1 = &m + BigUint::from(1u8);
            assert!(&m1 * &m1 > target);
        }
    }

    #[test]
    fn fx_matches_f64_at_desk_scale() {
        let cases = [
            (ClosedForm::Power { a: 1.5 }, 12345u128),
            (ClosedForm::NLog, 9999),
            (ClosedForm::Log, 777),
            (ClosedForm::Linear { theta: std::f64::consts::SQRT_2 }, 4242),
        ];
        for (form, n) in cases {
            let fx = form.value_fx(n, 96).unwrap().to_f64();
            let direct = form.value_f64(n);
            assert!(
                (fx - direct).abs() <= 1e-9 * direct.abs().max(1.0),
                "{form:?} at {n}: fx {fx} vs f64 {direct}"
            );
        }
    }

    #[test]
    fn ln_fx_additivity() {
        let bits = 200;
        let two = BigUint::from(ln_fx(2, bits));
        let four = BigUint::from(ln_fx(4, bits));
        let diff = if four >= (&two << 1) { &four - (&two << 1) } else { (&two << 1) - &four };
        assert!(diff < BigUint::from(64u8), "ln 4 != 2 ln 2 at {bits} bits: off by {diff}");

        let three = ln_fx(3, bits);
        let six = ln_fx(6, bits);
        let sum = &two + &three;
        let diff = if six >= sum { &six - &sum } else { &sum - &six };
        assert!(diff < BigUint::from(64u8));
    }

    #[test]
    fn ln2_reference_value() {
        let got = big_to_f64_scaled(&BigInt::from(ln2_fx(64)), -64);
        assert!((got - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn delta2_series_matches_direct() {
        // direct evaluation cancels two nearly equal values, so its noise
        // floor is a few ulp of the raw value
        for (form, n) in [
            (ClosedForm::Power { a: 1.5 }, 100u128),
            (ClosedForm::Power { a: 1.5 }, 100_000),
            (ClosedForm::Power { a: 1.25 }, 5000),
            (ClosedForm::NLog, 100),
            (ClosedForm::NLog, 50_000),
        ] {
            let direct = form.value_f64(n + 2) - 2.0 * form.value_f64(n + 1)
                + form.value_f64(n);
            let series = form.delta2_f64(n);
            let tol = 16.0 * f64::EPSILON * form.value_f64(n + 2).abs()
                + 1e-11 * series.abs();
            assert!(
                (direct - series).abs() < tol,
                "{form:?} at {n}: direct {direct:e} vs series {series:e}"
            );
        }
    }

    #[test]
    fn delta2_fx_agrees_with_series_at_large_n() {
        let form = ClosedForm::Power { a: 1.5 };
        let n = 10_000_000_000_000u128;
        let bits = CERT_BITS;
        let v0 = form.value_fx(n, bits).unwrap();
        let v1 = form.value_fx(n + 1, bits).unwrap();
        let v2 = form.value_fx(n + 2, bits).unwrap();
        let d2 = Fx::new(&v2.num - (&v1.num << 1) + &v0.num, bits).to_f64();
        let series = form.delta2_f64(n);
        assert!((d2 - series).abs() < 1e-10 * series.abs());
    }

    #[test]
    fn sqrt_fx_and_golden() {
        assert!((sqrt_fx(2, 128).to_f64() - std::f64::consts::SQRT_2).abs() < 1e-15);
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((golden_fx(128).to_f64() - phi).abs() < 1e-15);
    }

    #[test]
    fn dyadic_exponents() {
        assert_eq!(dyadic_exponent(1.5), Some(DyadicExponent { numer: 3, root_log2: 1 }));
        assert_eq!(dyadic_exponent(2.0), Some(DyadicExponent { numer: 2, root_log2: 0 }));
        assert_eq!(dyadic_exponent(1.25), Some(DyadicExponent { numer: 5, root_log2: 2 }));
        assert_eq!(dyadic_exponent(1.7), None);
    }

    #[test]
    fn frac_of_negative_fixed_point() {
        let x = Fx::from_f64(-0.75, 80);
        assert!((x.frac_f64() - 0.25).abs() < 1e-18);
    }
}
