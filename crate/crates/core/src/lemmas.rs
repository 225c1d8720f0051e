//! Executable checkers for the quantitative lemmas.
//!
//! Each checker evaluates both sides of a displayed inequality on a supplied
//! instance and returns the signed margin. Instances violating a lemma's
//! hypotheses are rejected with an error, never counted as failures. The
//! randomized suites drive each checker over seeded instance generators and
//! require zero failures.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::discrepancy::auto_discrepancy;
use crate::error::{Error, Result};
use crate::jsonfmt::{opt_sig17, sig17};
use crate::seq::{
    fractional_parts, monotonicity_profile, Index, MonotonicityKind, RealSequence,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum LemmaId {
    L1,
    L2,
    L3,
    L4,
    L5,
    L6,
    L7,
    L8,
    Chebyshev,
}

impl LemmaId {
    pub const ALL: [LemmaId; 9] = [
        LemmaId::L1,
        LemmaId::L2,
        LemmaId::L3,
        LemmaId::L4,
        LemmaId::L5,
        LemmaId::L6,
        LemmaId::L7,
        LemmaId::L8,
        LemmaId::Chebyshev,
    ];

    pub fn parse(s: &str) -> Option<LemmaId> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Some(LemmaId::L1),
            "l2" => Some(LemmaId::L2),
            "l3" => Some(LemmaId::L3),
            "l4" => Some(LemmaId::L4),
            "l5" => Some(LemmaId::L5),
            "l6" => Some(LemmaId::L6),
            "l7" => Some(LemmaId::L7),
            "l8" => Some(LemmaId::L8),
            "chebyshev" | "cheb" => Some(LemmaId::Chebyshev),
            _ => None,
        }
    }
}

impl std::fmt::Display for LemmaId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LemmaId::Chebyshev => write!(f, "Chebyshev"),
            other => write!(f, "{other:?}"),
        }
    }
}

/// Relative tolerance on inequality margins.
pub const MARGIN_TOLERANCE: f64 = 1e-9;

/// Ratio cap for the L1 bound, which holds only up to an absolute
/// constant; the suites record the observed maximum.
pub const L1_RATIO_CAP: f64 = 10.0;

/// One lemma-inequality evaluation.
#[derive(Debug, Clone, Serialize)]
pub struct LemmaCheck {
    pub lemma_id: LemmaId,
    #[serde(serialize_with = "sig17")]
    pub lhs: f64,
    #[serde(serialize_with = "sig17")]
    pub rhs: f64,
    #[serde(serialize_with = "sig17")]
    pub margin: f64,
    pub pass: bool,
    pub instance_digest: String,
}

impl LemmaCheck {
    fn from_sides(lemma_id: LemmaId, lhs: f64, rhs: f64, digest: String) -> Self {
        let margin = rhs - lhs;
        let pass = margin.is_finite() && margin >= -MARGIN_TOLERANCE * rhs.abs().max(1.0);
        LemmaCheck { lemma_id, lhs, rhs, margin, pass, instance_digest: digest }
    }
}

/// Discrepancy of the fractional parts: oracle route for small instances,
/// sorted-points closed form past the quadratic-cost knee.
pub fn suite_discrepancy(y: &RealSequence) -> f64 {
    auto_discrepancy(&fractional_parts(y))
}

// Monotonicity validation allows wiggle at the float-rounding scale of the
// data so that exactly-flat steps recomputed from cumulative sums are not
// rejected for one-ulp jitter.
fn wiggle(v: &[f64]) -> f64 {
    1e-12 * v.iter().fold(1.0f64, |m, x| m.max(x.abs()))
}

fn is_nondecreasing(v: &[f64]) -> bool {
    let tol = wiggle(v);
    v.windows(2).all(|w| w[1] >= w[0] - tol)
}

fn is_monotone(v: &[f64]) -> bool {
    let tol = wiggle(v);
    is_nondecreasing(v) || v.windows(2).all(|w| w[1] <= w[0] + tol)
}

fn deltas(y: &RealSequence) -> Vec<f64> {
    y.values().windows(2).map(|w| w[1] - w[0]).collect()
}

fn second_deltas(y: &RealSequence) -> Vec<f64> {
    let d = deltas(y);
    d.windows(2).map(|w| w[1] - w[0]).collect()
}

fn require_l3_shape(y: &RealSequence) -> Result<(Vec<f64>, Vec<f64>)> {
    if y.len() < 3 {
        return Err(Error::TooShort { needed: 3, got: y.len() });
    }
    let d = deltas(y);
    if !is_monotone(y.values()) {
        return Err(Error::Precondition("y is not monotone".into()));
    }
    if !is_monotone(&d) {
        return Err(Error::Precondition("first differences are not monotone".into()));
    }
    let d2 = second_deltas(y);
    Ok((d, d2))
}

/// Counting bound: points of a doubly monotone sequence in a closed
/// interval are at most `sqrt(2(b-a)/min|d2|) + 2`.
pub fn check_counting_bound(y: &RealSequence, a: f64, b: f64) -> Result<LemmaCheck> {
    if !(a <= b) {
        return Err(Error::Precondition(format!("need a <= b, got [{a}, {b}]")));
    }
    let (_d, d2) = require_l3_shape(y)?;
    let min_d2 = d2.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if !(min_d2 > 0.0) {
        return Err(Error::Precondition("min |second difference| is zero".into()));
    }
    let lhs = y.values().iter().filter(|&&v| a <= v && v <= b).count() as f64;
    let rhs = (2.0 * (b - a) / min_d2).sqrt() + 2.0;
    let digest = format!("m={};a={a:.6e};b={b:.6e};mind2={min_d2:.6e}", y.len());
    Ok(LemmaCheck::from_sides(LemmaId::L3, lhs, rhs, digest))
}

/// Length lower bound: `m >= sqrt(2|y_m - y_1| / max(max|d2|, min|d1|))`.
pub fn check_length_lower_bound(y: &RealSequence) -> Result<LemmaCheck> {
    if y.len() < 3 {
        return Err(Error::TooShort { needed: 3, got: y.len() });
    }
    let d = deltas(y);
    if !is_monotone(y.values()) || !is_monotone(&d) {
        return Err(Error::Precondition("monotonicity hypotheses fail".into()));
    }
    let d2 = second_deltas(y);
    let max_d2 = d2.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min_d1 = d.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    let denom = max_d2.max(min_d1);
    if !(denom > 0.0) {
        return Err(Error::Precondition("degenerate zero denominator".into()));
    }
    let range = (y.values()[y.len() - 1] - y.values()[0]).abs();
    let lhs = (2.0 * range / denom).sqrt();
    let rhs = y.len() as f64;
    let digest = format!("m={};range={range:.6e};denom={denom:.6e}", y.len());
    Ok(LemmaCheck::from_sides(LemmaId::L6, lhs, rhs, digest))
}

/// Interval comparison for convex increasing sequences:
/// `(#(Y cap I) - 1)/|I| <= (#(Y cap J) + 1)/|J|` for `J` left of `I`.
pub fn check_interval_comparison(
    y: &RealSequence,
    j: (f64, f64),
    i: (f64, f64),
) -> Result<LemmaCheck> {
    if y.len() < 2 {
        return Err(Error::TooShort { needed: 2, got: y.len() });
    }
    let d = deltas(y);
    if !is_nondecreasing(y.values()) || !is_nondecreasing(&d) {
        return Err(Error::Precondition("y and its differences must be increasing".into()));
    }
    let (a, b) = j;
    let (c, dd) = i;
    if !(a < b && c < dd && b <= c) {
        return Err(Error::Precondition("need J = [a,b) left of I = [c,d)".into()));
    }
    let y1 = y.values()[0];
    let ym = y.values()[y.len() - 1];
    if !(a >= y1 && b <= ym) {
        return Err(Error::Precondition("J must sit inside [y_1, y_m)".into()));
    }
    let count = |lo: f64, hi: f64| {
        y.values().iter().filter(|&&v| lo <= v && v < hi).count() as f64
    };
    let lhs = (count(c, dd) - 1.0) / (dd - c);
    let rhs = (count(a, b) + 1.0) / (b - a);
    let digest = format!("m={};J=[{a:.4e},{b:.4e});I=[{c:.4e},{dd:.4e})", y.len());
    Ok(LemmaCheck::from_sides(LemmaId::L7, lhs, rhs, digest))
}

fn max_unit_cell_count(y: &RealSequence) -> f64 {
    let mut counts = std::collections::HashMap::new();
    for &v in y.values() {
        *counts.entry(v.floor() as i64).or_insert(0usize) += 1;
    }
    counts.values().copied().max().unwrap_or(0) as f64
}

/// Discrepancy bound for doubly monotone sequences:
/// `D(Y) <= 2(|y_m - y_1|/m + maxcount/m)`, plus the variant with
/// `max|d1|` replacing `|y_m - y_1|/m`.
pub fn check_discrepancy_bound_l5(y: &RealSequence) -> Result<LemmaCheck> {
    if y.len() < 2 {
        return Err(Error::TooShort { needed: 2, got: y.len() });
    }
    let d = deltas(y);
    if !is_monotone(y.values()) || !is_monotone(&d) {
        return Err(Error::Precondition("monotonicity hypotheses fail".into()));
    }
    let m = y.len() as f64;
    let range = (y.values()[y.len() - 1] - y.values()[0]).abs();
    let maxcount = max_unit_cell_count(y);
    let lhs = suite_discrepancy(y);
    let rhs = 2.0 * (range / m + maxcount / m);
    let max_d1 = d.iter().fold(0.0f64, |mx, v| mx.max(v.abs()));
    let rhs_variant = 2.0 * (max_d1 + maxcount / m);
    let digest = format!(
        "m={};range={range:.6e};maxcount={maxcount};variant_rhs={rhs_variant:.6e}",
        y.len()
    );
    let mut check = LemmaCheck::from_sides(LemmaId::L5, lhs, rhs, digest);
    // the variant is implied (mean <= max) but is still evaluated
    let variant_ok = lhs <= rhs_variant + MARGIN_TOLERANCE * rhs_variant.max(1.0);
    check.pass = check.pass && variant_ok;
    Ok(check)
}

/// Discrepancy bound for convex increasing sequences with weakly-decreasing
/// second differences: reports the ratio of `D(Y)` to
/// `(y_m - y_1)/m + K/sqrt(y_m - y_1)` against the suite cap.
pub fn check_discrepancy_bound_l1(y: &RealSequence, k: f64) -> Result<LemmaCheck> {
    if y.len() < 3 {
        return Err(Error::TooShort { needed: 3, got: y.len() });
    }
    if !is_nondecreasing(y.values()) {
        return Err(Error::Precondition("y must be increasing".into()));
    }
    let d2 = RealSequence::new(1, second_deltas(y))
        .map_err(|_| Error::Precondition("second differences unavailable".into()))?;
    let profile = monotonicity_profile(&d2)?;
    if profile.kind != MonotonicityKind::WeaklyDecreasing {
        return Err(Error::Precondition(
            "second differences are not weakly decreasing".into(),
        ));
    }
    let k_min = profile.constant_k.unwrap_or(f64::INFINITY);
    if k_min > k * (1.0 + 1e-9) {
        return Err(Error::Precondition(format!(
            "weak-decrease constant {k_min:.3} exceeds supplied K = {k:.3}"
        )));
    }
    let range = y.values()[y.len() - 1] - y.values()[0];
    if !(range > 0.0) {
        return Err(Error::Precondition("y_m = y_1 is degenerate".into()));
    }
    let m = y.len() as f64;
    let disc = suite_discrepancy(y);
    let rhs_core = range / m + k / range.sqrt();
    let ratio = disc / rhs_core;
    let digest = format!(
        "m={};range={range:.6e};K={k:.4};D={disc:.6e};core={rhs_core:.6e}",
        y.len()
    );
    Ok(LemmaCheck::from_sides(LemmaId::L1, ratio, L1_RATIO_CAP, digest))
}

/// Perturbation stability: `D(Y) <= D(X) + 2 eps` when `|x_k - y_k| < eps`.
pub fn check_perturbation(x: &RealSequence, y: &RealSequence, eps: f64) -> Result<LemmaCheck> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    let max_dev = x
        .values()
        .iter()
        .zip(y.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    if !(max_dev < eps) {
        return Err(Error::Precondition(format!(
            "max deviation {max_dev:.3e} not below eps {eps:.3e}"
        )));
    }
    let lhs = suite_discrepancy(y);
    let rhs = suite_discrepancy(x) + 2.0 * eps;
    let digest = format!("m={};eps={eps:.6e};dev={max_dev:.6e}", x.len());
    Ok(LemmaCheck::from_sides(LemmaId::L2, lhs, rhs, digest))
}

/// Merge bound: the discrepancy of any ordering of a union is at most the
/// largest part discrepancy.
pub fn check_merge(parts: &[RealSequence]) -> Result<LemmaCheck> {
    if parts.is_empty() {
        return Err(Error::EmptySequence);
    }
    let mut all = Vec::new();
    let mut rhs = 0.0f64;
    for p in parts {
        all.extend_from_slice(p.values());
        rhs = rhs.max(suite_discrepancy(p));
    }
    let union = RealSequence::from_values(all)?;
    let lhs = suite_discrepancy(&union);
    let digest = format!(
        "parts={};sizes={:?}",
        parts.len(),
        parts.iter().map(|p| p.len()).collect::<Vec<_>>()
    );
    Ok(LemmaCheck::from_sides(LemmaId::L8, lhs, rhs, digest))
}

/// Finite-scale block aggregation: with cutpoints chaining by at most a
/// `(1+eps)` factor and every block eps-equidistributed, the prefix up to
/// the last cutpoint has discrepancy at most
/// `2 eps + n_0/N + (last block)/N + 1e-9`.
pub fn check_block_aggregation(
    x: &RealSequence,
    eps: f64,
    cutpoints: &[Index],
) -> Result<LemmaCheck> {
    if cutpoints.len() < 2 {
        return Err(Error::Precondition("need at least two cutpoints".into()));
    }
    if cutpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition("cutpoints must strictly increase".into()));
    }
    for w in cutpoints.windows(2) {
        if (w[1] as f64) > (1.0 + eps) * (w[0] as f64) * (1.0 + 1e-12) {
            return Err(Error::Precondition(format!(
                "chain gap too wide: {} -> {}",
                w[0], w[1]
            )));
        }
    }
    let n0 = cutpoints[0];
    let n_last = *cutpoints.last().unwrap();
    let start = x.start_index();
    if n0 + 1 < start || n_last > x.end_index() {
        return Err(Error::IndexOutOfRange {
            from: n0 + 1,
            to: n_last,
            lo: start,
            hi: x.end_index(),
        });
    }
    // validate each block
    for w in cutpoints.windows(2) {
        let lo = (w[0] + 1 - start) as usize;
        let hi = (w[1] + 1 - start) as usize;
        let block = RealSequence::new(1, x.values()[lo..hi].to_vec())?;
        let d = suite_discrepancy(&block);
        if d > eps + MARGIN_TOLERANCE {
            return Err(Error::Precondition(format!(
                "block ({}, {}] has discrepancy {d:.4} > eps {eps}",
                w[0], w[1]
            )));
        }
    }
    let prefix =
        RealSequence::new(1, x.values()[..(n_last + 1 - start) as usize].to_vec())?;
    let lhs = suite_discrepancy(&prefix);
    let nf = n_last as f64;
    let last_block = (n_last - cutpoints[cutpoints.len() - 2]) as f64;
    let rhs = 2.0 * eps + n0 as f64 / nf + last_block / nf + 1e-9;
    let digest = format!(
        "blocks={};n0={n0};N={n_last};eps={eps:.4}",
        cutpoints.len() - 1
    );
    Ok(LemmaCheck::from_sides(LemmaId::L4, lhs, rhs, digest))
}

/// Chebyshev-type sum inequality for positive decreasing sequences:
/// `sum(a) sum(b) <= n sum(a b)`.
pub fn check_chebyshev(a: &RealSequence, b: &RealSequence) -> Result<LemmaCheck> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    let dec_pos = |v: &[f64]| v.iter().all(|&x| x > 0.0) && v.windows(2).all(|w| w[0] >= w[1]);
    if !dec_pos(a.values()) || !dec_pos(b.values()) {
        return Err(Error::Precondition("sequences must be positive and decreasing".into()));
    }
    let n = a.len() as f64;
    let sa: f64 = a.values().iter().sum();
    let sb: f64 = b.values().iter().sum();
    let sab: f64 = a.values().iter().zip(b.values()).map(|(x, y)| x * y).sum();
    let digest = format!("n={};sa={sa:.6e};sb={sb:.6e}", a.len());
    Ok(LemmaCheck::from_sides(LemmaId::Chebyshev, sa * sb, n * sab, digest))
}

// ---------------------------------------------------------------------------
// randomized suites
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub lemma_id: LemmaId,
    pub trials: u64,
    pub accepted: u64,
    pub rejected: u64,
    pub failed: u64,
    #[serde(serialize_with = "sig17")]
    pub worst_margin: f64,
    #[serde(serialize_with = "opt_sig17")]
    pub max_ratio: Option<f64>,
    pub seed: u64,
}

fn instance_rng(seed: u64, idx: u64) -> ChaCha8Rng {
    let mut s = [0u8; 32];
    s[..8].copy_from_slice(&seed.to_le_bytes());
    s[8..16].copy_from_slice(&idx.to_le_bytes());
    ChaCha8Rng::from_seed(s)
}

fn log_uniform(rng: &mut ChaCha8Rng, lo_exp: f64, hi_exp: f64) -> f64 {
    10f64.powf(rng.random_range(lo_exp..hi_exp))
}

/// Convex instance for the counting-flavored lemmas: positive monotone
/// second differences, first difference of one sign, random orientation.
fn gen_doubly_monotone(rng: &mut ChaCha8Rng, min_m: usize) -> RealSequence {
    let m = rng.random_range(min_m..=250);
    let base = log_uniform(rng, -6.0, 1.0);
    let spread = rng.random_range(1.0..8.0f64);
    let mut d2: Vec<f64> = (0..m.saturating_sub(2))
        .map(|_| base * rng.random_range(1.0..spread))
        .collect();
    d2.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let total: f64 = d2.iter().sum();
    let d1_first = if rng.random_bool(0.5) {
        log_uniform(rng, -4.0, 1.0)
    } else {
        -(total + log_uniform(rng, -4.0, 1.0))
    };
    let mut values = Vec::with_capacity(m);
    let mut v = rng.random_range(-10.0..10.0);
    let mut d = d1_first;
    values.push(v);
    for k in 0..m - 1 {
        v += d;
        values.push(v);
        if k < d2.len() {
            d += d2[k];
        }
    }
    let negate = rng.random_bool(0.5);
    if negate {
        for v in &mut values {
            *v = -*v;
        }
    }
    RealSequence::from_values(values).unwrap()
}

/// Convex increasing instance with weakly-decreasing second differences,
/// built from a decreasing envelope times factors in [1/K, K].
fn gen_weakly_decreasing_d2(rng: &mut ChaCha8Rng) -> (RealSequence, f64) {
    let m = rng.random_range(3..=300);
    let e1 = log_uniform(rng, -6.0, -1.0);
    let s = rng.random_range(0.2..2.0f64);
    let k0 = rng.random_range(1.0..4.0f64);
    let mut values = Vec::with_capacity(m);
    let mut v = rng.random_range(0.0..1.0);
    let mut d = log_uniform(rng, -6.0, -1.0);
    values.push(v);
    for k in 0..m - 1 {
        v += d;
        values.push(v);
        let envelope = e1 / (1.0 + k as f64).powf(s);
        let jitter = rng.random_range(1.0 / k0..k0);
        d += envelope * jitter;
    }
    let seq = RealSequence::from_values(values).unwrap();
    let d2 = RealSequence::new(1, second_deltas(&seq)).unwrap();
    let k_min = monotonicity_profile(&d2)
        .ok()
        .and_then(|p| p.constant_k)
        .unwrap_or(1.0);
    (seq, k_min)
}

const L4_THETAS: [f64; 6] = [
    std::f64::consts::SQRT_2,
    1.7320508075688772, // sqrt 3
    2.23606797749979,   // sqrt 5
    1.618033988749895,  // golden ratio
    1.2599210498948732, // cbrt 2
    std::f64::consts::LN_2,
];

enum Outcome {
    Accepted(LemmaCheck),
    Rejected,
}

fn run_one(id: LemmaId, seed: u64, idx: u64) -> Outcome {
    let mut rng = instance_rng(seed, idx);
    let result: Result<LemmaCheck> = match id {
        LemmaId::L3 => {
            let y = gen_doubly_monotone(&mut rng, 3);
            let lo = y.values().iter().fold(f64::INFINITY, |m, &v| m.min(v));
            let hi = y.values().iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
            let range = (hi - lo).max(1e-6);
            let a = rng.random_range(lo - 0.1 * range..hi);
            let b = a + rng.random_range(0.0..0.9 * range);
            check_counting_bound(&y, a, b)
        }
        LemmaId::L6 => {
            let y = gen_doubly_monotone(&mut rng, 3);
            check_length_lower_bound(&y)
        }
        LemmaId::L7 => {
            // increasing and convex by construction
            let m = rng.random_range(4..=250);
            let base = log_uniform(&mut rng, -5.0, 0.5);
            let spread = rng.random_range(1.0..8.0f64);
            let mut d2: Vec<f64> = (0..m - 2)
                .map(|_| base * rng.random_range(1.0..spread))
                .collect();
            d2.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
            let mut values = Vec::with_capacity(m);
            let mut v = rng.random_range(-5.0..5.0);
            let mut d = log_uniform(&mut rng, -4.0, 0.5);
            values.push(v);
            for k in 0..m - 1 {
                v += d;
                values.push(v);
                if k < d2.len() {
                    d += d2[k];
                }
            }
            let y = RealSequence::from_values(values).unwrap();
            let y1 = y.values()[0];
            let ym = y.values()[y.len() - 1];
            let span = ym - y1;
            let a = y1 + rng.random_range(0.0..0.6) * span;
            let b = a + rng.random_range(1e-3..0.9) * (ym - a);
            let c = b + rng.random_range(0.0..0.5) * span;
            let d_hi = c + rng.random_range(1e-3..0.5) * span;
            check_interval_comparison(&y, (a, b), (c, d_hi))
        }
        LemmaId::L5 => {
            let y = gen_doubly_monotone(&mut rng, 3);
            check_discrepancy_bound_l5(&y)
        }
        LemmaId::L1 => {
            let (y, k) = gen_weakly_decreasing_d2(&mut rng);
            check_discrepancy_bound_l1(&y, k)
        }
        LemmaId::L2 => {
            let m = rng.random_range(2..=200);
            let eps = log_uniform(&mut rng, -4.0, -0.31);
            let xs: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..20.0)).collect();
            let ys: Vec<f64> = xs
                .iter()
                .map(|v| v + rng.random_range(-0.999 * eps..0.999 * eps))
                .collect();
            let x = RealSequence::from_values(xs).unwrap();
            let y = RealSequence::from_values(ys).unwrap();
            check_perturbation(&x, &y, eps)
        }
        LemmaId::L8 => {
            let count = rng.random_range(1..=5);
            let parts: Vec<RealSequence> = (0..count)
                .map(|_| {
                    let len = rng.random_range(2..=80);
                    let vals = (0..len).map(|_| rng.random_range(0.0..10.0)).collect();
                    RealSequence::from_values(vals).unwrap()
                })
                .collect();
            check_merge(&parts)
        }
        LemmaId::L4 => {
            let theta = if rng.random_bool(0.7) {
                L4_THETAS[rng.random_range(0..L4_THETAS.len())]
            } else {
                rng.random_range(0.05..0.95)
            };
            let eps = rng.random_range(0.18..0.35);
            let n0: u128 = rng.random_range(80u64..200) as u128;
            let blocks = rng.random_range(3..=6);
            let mut cuts = vec![n0];
            for _ in 0..blocks {
                let prev = *cuts.last().unwrap();
                let step =
                    ((prev as f64) * eps * rng.random_range(0.5..0.999)).floor() as u128;
                cuts.push(prev + step.max(1));
            }
            let n_last = *cuts.last().unwrap();
            let values: Vec<f64> = (1..=n_last).map(|k| theta * k as f64).collect();
            let x = RealSequence::from_values(values).unwrap();
            check_block_aggregation(&x, eps, &cuts)
        }
        LemmaId::Chebyshev => {
            let n = rng.random_range(1..=100);
            let mut a: Vec<f64> = (0..n).map(|_| log_uniform(&mut rng, -3.0, 2.0)).collect();
            let mut b: Vec<f64> = (0..n).map(|_| log_uniform(&mut rng, -3.0, 2.0)).collect();
            a.sort_unstable_by(|x, y| y.partial_cmp(x).unwrap());
            b.sort_unstable_by(|x, y| y.partial_cmp(x).unwrap());
            check_chebyshev(
                &RealSequence::from_values(a).unwrap(),
                &RealSequence::from_values(b).unwrap(),
            )
        }
    };
    match result {
        Ok(mut check) => {
            check.instance_digest =
                format!("seed={seed};idx={idx};{}", check.instance_digest);
            Outcome::Accepted(check)
        }
        Err(_) => Outcome::Rejected,
    }
}

/// Drive one lemma's checker until `target_accepted` instances were
/// evaluated (instance generation is deterministic in `seed`).
pub fn run_suite(id: LemmaId, target_accepted: u64, seed: u64) -> SuiteReport {
    let cap = target_accepted.saturating_mul(4) + 64;
    let mut report = SuiteReport {
        lemma_id: id,
        trials: 0,
        accepted: 0,
        rejected: 0,
        failed: 0,
        worst_margin: f64::INFINITY,
        max_ratio: if id == LemmaId::L1 { Some(0.0) } else { None },
        seed,
    };
    let chunk: u64 = 512;
    let mut idx = 0u64;
    'outer: while report.accepted < target_accepted && idx < cap {
        let hi = (idx + chunk).min(cap);
        let outcomes: Vec<Outcome> = (idx..hi)
            .into_par_iter()
            .map(|i| run_one(id, seed, i))
            .collect();
        for o in outcomes {
            report.trials += 1;
            match o {
                Outcome::Accepted(check) => {
                    report.accepted += 1;
                    if !check.pass {
                        report.failed += 1;
                    }
                    if check.margin < report.worst_margin {
                        report.worst_margin = check.margin;
                    }
                    if id == LemmaId::L1 {
                        let r = report.max_ratio.get_or_insert(0.0);
                        *r = r.max(check.lhs);
                    }
                    if report.accepted >= target_accepted {
                        break 'outer;
                    }
                }
                Outcome::Rejected => report.rejected += 1,
            }
        }
        idx = hi;
    }
    report
}

/// All nine suites at one seed.
pub fn run_all_suites(target_accepted: u64, seed: u64) -> Vec<SuiteReport> {
    LemmaId::ALL
        .iter()
        .map(|&id| run_suite(id, target_accepted, seed))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l3_hand_example() {
        let y = RealSequence::from_values(vec![1.0, 2.0, 4.0, 7.0, 11.0]).unwrap();
        let c = check_counting_bound(&y, 1.0, 7.0).unwrap();
        assert_eq!(c.lhs, 4.0);
        assert!((c.rhs - (12f64.sqrt() + 2.0)).abs() < 1e-12);
        assert!(c.pass);
    }

    #[test]
    fn l3_rejects_flat() {
        let y = RealSequence::from_values(vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        assert!(check_counting_bound(&y, 0.0, 1.0).is_err());
    }

    #[test]
    fn l6_arithmetic_progression() {
        // d2 = 0, min d1 = 1: m >= sqrt(2(m-1))
        let m = 10;
        let y = RealSequence::from_values((0..m).map(|k| k as f64).collect()).unwrap();
        let c = check_length_lower_bound(&y).unwrap();
        assert!((c.lhs - (2.0 * (m as f64 - 1.0)).sqrt()).abs() < 1e-12);
        assert!(c.pass);
    }

    #[test]
    fn l6_near_tight_quadratic() {
        let m = 50;
        let y =
            RealSequence::from_values((0..m).map(|k| (k * k) as f64 / 2.0).collect()).unwrap();
        let c = check_length_lower_bound(&y).unwrap();
        assert!(c.pass);
        assert!(c.margin < 0.2 * m as f64, "expected a snug margin, got {}", c.margin);
    }

    #[test]
    fn l7_squares() {
        let y = RealSequence::from_values((1..=20).map(|k| (k * k) as f64).collect()).unwrap();
        let c = check_interval_comparison(&y, (1.0, 2.0), (100.0, 101.0)).unwrap();
        assert!(c.pass);
    }

    #[test]
    fn l5_arithmetic_in_unit_grid() {
        let m = 64usize;
        let y = RealSequence::from_values(
            (0..m).map(|k| k as f64 / m as f64).collect(),
        )
        .unwrap();
        let c = check_discrepancy_bound_l5(&y).unwrap();
        assert!((c.lhs - 1.0 / m as f64).abs() < 1e-12);
        assert!(c.rhs >= 2.0);
        assert!(c.pass);
    }

    #[test]
    fn l5_minimal_m() {
        let y = RealSequence::from_values(vec![0.3, 0.9]).unwrap();
        assert!(check_discrepancy_bound_l5(&y).unwrap().pass);
    }

    #[test]
    fn l1_small_quadratic() {
        let y = RealSequence::from_values(
            (1..=40).map(|k| (k * k) as f64 * 1e-3).collect(),
        )
        .unwrap();
        let c = check_discrepancy_bound_l1(&y, 1.0).unwrap();
        assert!(c.pass, "ratio {} exceeded cap", c.lhs);
    }

    #[test]
    fn l1_trivial_when_range_below_one() {
        let y = RealSequence::from_values(vec![0.0, 0.001, 0.003, 0.006]).unwrap();
        let c = check_discrepancy_bound_l1(&y, 1.0).unwrap();
        assert!(c.lhs <= 1.0);
    }

    #[test]
    fn l2_zero_perturbation() {
        let x = RealSequence::from_values(vec![0.1, 0.4, 0.8]).unwrap();
        let c = check_perturbation(&x, &x.clone(), 0.01).unwrap();
        assert!(c.pass);
        assert!((c.rhs - c.lhs - 0.02).abs() < 1e-12);
    }

    #[test]
    fn l8_single_part_equality() {
        let p = RealSequence::from_values(vec![0.2, 0.7, 1.3]).unwrap();
        let c = check_merge(std::slice::from_ref(&p)).unwrap();
        assert!((c.lhs - c.rhs).abs() < 1e-15);
    }

    #[test]
    fn l8_two_coprime_grids() {
        let g5 = RealSequence::from_values((0..5).map(|i| i as f64 / 5.0).collect()).unwrap();
        let g7 = RealSequence::from_values((0..7).map(|i| i as f64 / 7.0).collect()).unwrap();
        let c = check_merge(&[g5, g7]).unwrap();
        assert!(c.pass);
        assert!((c.rhs - 0.2).abs() < 1e-12);
    }

    #[test]
    fn l4_single_block() {
        let m = 250usize;
        let values: Vec<f64> = (1..=m).map(|k| k as f64 * 1.618033988749895).collect();
        let x = RealSequence::from_values(values).unwrap();
        let cuts = [200u128, 250];
        let c = check_block_aggregation(&x, 0.25, &cuts).unwrap();
        assert!(c.pass, "lhs {} rhs {}", c.lhs, c.rhs);
    }

    #[test]
    fn l4_rejects_wide_chain() {
        let values: Vec<f64> = (1..=100).map(|k| k as f64 * 0.7548).collect();
        let x = RealSequence::from_values(values).unwrap();
        assert!(check_block_aggregation(&x, 0.1, &[10, 100]).is_err());
    }

    #[test]
    fn chebyshev_hand_example() {
        let a = RealSequence::from_values(vec![3.0, 2.0, 1.0]).unwrap();
        let b = RealSequence::from_values(vec![6.0, 5.0, 4.0]).unwrap();
        let c = check_chebyshev(&a, &b).unwrap();
        assert_eq!(c.lhs, 90.0);
        assert_eq!(c.rhs, 96.0);
        assert!(c.pass);
    }

    #[test]
    fn chebyshev_equality_for_constants() {
        let a = RealSequence::from_values(vec![2.0; 5]).unwrap();
        let c = check_chebyshev(&a, &a.clone()).unwrap();
        assert_eq!(c.lhs, c.rhs);
        assert!(c.pass);
    }

    #[test]
    fn suites_are_reproducible() {
        let a = run_suite(LemmaId::L3, 200, 42);
        let b = run_suite(LemmaId::L3, 200, 42);
        assert_eq!(a.accepted, b.accepted);
        assert_eq!(a.rejected, b.rejected);
        assert_eq!(a.worst_margin.to_bits(), b.worst_margin.to_bits());
    }

    #[test]
    fn small_suites_all_clean() {
        for id in LemmaId::ALL {
            let r = run_suite(id, 300, 7);
            assert_eq!(r.failed, 0, "{id} failed {} of {}", r.failed, r.accepted);
            assert_eq!(r.accepted, 300, "{id} starved: {r:?}");
        }
    }
}
