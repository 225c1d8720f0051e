//! Segment certification: Diophantine approximation of first differences
//! drives a case split, and every branch yields a finite index block whose
//! equidistribution is measured and recorded.
//!
//! A segment at n proceeds as: check the second-difference window at n,
//! select the convergent p/q of the first difference straddling `eps^-4`,
//! then either certify `x_{n+1..n+q}` directly against the rigid rational
//! grid (large q) or split into q residue-class subsequences
//! `y_k(r) = -kp + x_{n+r+(k-1)q}` whose sign-change index dispatches one of
//! three sub-cases (small q). All index arithmetic runs in u128 and all
//! sign decisions run on exact fixed-point mantissas when the sequence has
//! an extended-precision closed form.

use num_bigint::BigInt;
use num_traits::Signed;
use rayon::prelude::*;
use serde::Serialize;

use crate::diophantine::{select_convergent_of, Convergent};
use crate::discrepancy::{
    auto_discrepancy, extreme_discrepancy, Interval,
};
use crate::error::{Error, Result};
use crate::fixedpoint::{Fx, CERT_BITS};
use crate::jsonfmt::{opt_sig17, sig17};
use crate::lemmas::{LemmaCheck, LemmaId, MARGIN_TOLERANCE};
use crate::seq::{
    frac, hypothesis_window, validate_epsilon, Approx, Evaluator, Index, SequenceSpec,
    UnitSequence,
};

/// Largest point count a single segment may materialize.
pub const MAX_SEGMENT_POINTS: u128 = 20_000_000;

/// One residue-class subsequence `y_k(r) = -kp + x_{n+r+(k-1)q}`.
#[derive(Debug, Clone)]
pub struct ResidueSequence {
    pub n: Index,
    pub p: i128,
    pub q: u64,
    pub r: u64,
    values: Vec<f64>,
    fracs: Vec<f64>,
}

impl ResidueSequence {
    /// Raw values `y_1 .. y_{k_max}`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Fractional parts, carried through the extended-precision path.
    pub fn fracs(&self) -> &[f64] {
        &self.fracs
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn deltas(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Where the first differences of a residue sequence turn nonnegative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SignChange {
    /// Count of leading k with `dy_k <= 0`; `None` is the infinite sentinel
    /// (no positive difference within the horizon).
    pub h: Option<u64>,
    pub beta_positive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CaseTag {
    #[serde(rename = "case1")]
    Case1,
    #[serde(rename = "case2_1")]
    Case21,
    #[serde(rename = "case2_2")]
    Case22,
    #[serde(rename = "case2_3")]
    Case23,
    #[serde(rename = "fallback")]
    Fallback,
}

/// One certified segment.
#[derive(Debug, Clone, Serialize)]
pub struct SegmentCertificate {
    pub n: Index,
    pub m: u128,
    pub case: CaseTag,
    pub p: i128,
    pub q: u128,
    pub q_next: Option<u128>,
    #[serde(serialize_with = "sig17")]
    pub alpha: f64,
    pub h0: Option<u128>,
    #[serde(serialize_with = "opt_sig17")]
    pub delta: Option<f64>,
    #[serde(rename = "measured_D", serialize_with = "sig17")]
    pub measured_d: f64,
    #[serde(serialize_with = "sig17")]
    pub bound_ratio: f64,
    pub witness: Option<Interval>,
    #[serde(skip)]
    pub epsilon: f64,
}

impl SegmentCertificate {
    /// Indices covered: `n+1 ..= n + covered()`.
    pub fn covered(&self) -> u128 {
        match self.case {
            CaseTag::Case1 => self.m,
            _ => self.q * self.m,
        }
    }
}

/// A full certification run over a contiguous index range.
#[derive(Debug, Clone, Serialize)]
pub struct CertificateRun {
    #[serde(serialize_with = "sig17")]
    pub epsilon: f64,
    pub n_epsilon: Index,
    #[serde(rename = "constant_C", serialize_with = "sig17")]
    pub constant_c: f64,
    pub segments: Vec<SegmentCertificate>,
    #[serde(rename = "aggregate_D", serialize_with = "sig17")]
    pub aggregate_d: f64,
    #[serde(skip)]
    pub aggregation_check: Option<LemmaCheck>,
}

// ---------------------------------------------------------------------------
// evaluation context with sign normalization
// ---------------------------------------------------------------------------

/// Exact or floating first-difference value of a residue sequence.
enum DyVal {
    Big(BigInt),
    F(f64),
}

impl DyVal {
    fn le_zero(&self) -> bool {
        match self {
            DyVal::Big(v) => !v.is_positive(),
            DyVal::F(v) => *v <= 0.0,
        }
    }

    fn to_f64(&self, bits: u32) -> f64 {
        match self {
            DyVal::Big(v) => Fx::new(v.clone(), bits).to_f64(),
            DyVal::F(v) => *v,
        }
    }

    fn lt(&self, other: &DyVal) -> bool {
        match (self, other) {
            (DyVal::Big(a), DyVal::Big(b)) => a < b,
            (a, b) => a.to_f64(CERT_BITS) < b.to_f64(CERT_BITS),
        }
    }
}

struct Ctx {
    eval: Evaluator,
    negate: bool,
}

impl Ctx {
    fn new(spec: &SequenceSpec, n: Index) -> Result<Ctx> {
        let eval = Evaluator::new(spec)?;
        let negate = eval.delta2(n)? < 0.0;
        Ok(Ctx { eval, negate })
    }

    fn sign(&self) -> f64 {
        if self.negate {
            -1.0
        } else {
            1.0
        }
    }

    fn x_f64(&self, n: Index) -> Result<f64> {
        Ok(self.sign() * self.eval.x_f64(n)?)
    }

    fn x_fx(&self, n: Index) -> Result<Option<Fx>> {
        Ok(self.eval.value_fx(n, CERT_BITS)?.map(|fx| {
            if self.negate {
                Fx::new(-fx.num, fx.bits)
            } else {
                fx
            }
        }))
    }

    fn frac(&self, n: Index) -> Result<f64> {
        let rough = self.eval.x_f64(n)?;
        if rough.abs() >= 4096.0 {
            if let Some(fx) = self.x_fx(n)? {
                return Ok(fx.frac_f64());
            }
        }
        Ok(frac(self.sign() * rough))
    }

    fn delta1(&self, n: Index) -> Result<Approx> {
        Ok(match self.eval.delta1(n)? {
            Approx::Float(v) => Approx::Float(self.sign() * v),
            Approx::Fixed(fx) => {
                if self.negate {
                    Approx::Fixed(Fx::new(-fx.num, fx.bits))
                } else {
                    Approx::Fixed(fx)
                }
            }
        })
    }

    fn delta2_exact(&self, n: Index) -> Result<f64> {
        Ok(self.sign() * self.eval.delta2_exact(n)?)
    }

    fn delta2(&self, n: Index) -> Result<f64> {
        Ok(self.sign() * self.eval.delta2(n)?)
    }

    fn uses_fx(&self) -> bool {
        self.eval.is_closed_form()
    }

    /// dy_k(r) = -p + x_{n+r+kq} - x_{n+r+(k-1)q}, exact when fixed-point.
    fn dy(&self, n: Index, p: i128, q: u64, r: u64, k: u128) -> Result<DyVal> {
        let lo = n + r as u128 + (k - 1) * q as u128;
        let hi = lo + q as u128;
        if let (Some(a), Some(b)) = (self.x_fx(lo)?, self.x_fx(hi)?) {
            Ok(DyVal::Big(b.num - a.num - (BigInt::from(p) << CERT_BITS)))
        } else {
            Ok(DyVal::F(self.x_f64(hi)? - self.x_f64(lo)? - p as f64))
        }
    }

    /// y_{k}(r) - y_{j}(r) for k >= j.
    fn y_diff(&self, n: Index, p: i128, q: u64, r: u64, k: u128, j: u128) -> Result<f64> {
        let idx_k = n + r as u128 + (k - 1) * q as u128;
        let idx_j = n + r as u128 + (j - 1) * q as u128;
        if let (Some(a), Some(b)) = (self.x_fx(idx_j)?, self.x_fx(idx_k)?) {
            let steps = BigInt::from(k - j) * BigInt::from(p);
            Ok(Fx::new(b.num - a.num - (steps << CERT_BITS), CERT_BITS).to_f64())
        } else {
            Ok(self.x_f64(idx_k)? - self.x_f64(idx_j)? - (k - j) as f64 * p as f64)
        }
    }

    /// Largest k such that dy_k(r) is still evaluable on the data.
    fn max_dy_k(&self, n: Index, q: u64, r: u64) -> Option<u128> {
        let (_, hi) = self.eval.domain();
        hi.map(|end| {
            let reach = end.saturating_sub(n + r as u128);
            reach / q as u128
        })
    }
}

// ---------------------------------------------------------------------------
// public operations
// ---------------------------------------------------------------------------

/// Materialize a residue-class subsequence by the literal formula.
pub fn residue_sequence(
    spec: &SequenceSpec,
    n: Index,
    p: i128,
    q: u64,
    r: u64,
    k_max: u64,
) -> Result<ResidueSequence> {
    if q < 1 || r < 1 || r > q {
        return Err(Error::Precondition(format!("need 1 <= r <= q, got r={r}, q={q}")));
    }
    if k_max < 3 {
        return Err(Error::Precondition(format!("k_max must be >= 3, got {k_max}")));
    }
    let eval = Evaluator::new(spec)?;
    let mut values = Vec::with_capacity(k_max as usize);
    let mut fracs = Vec::with_capacity(k_max as usize);
    for k in 1..=k_max as u128 {
        let idx = n + r as u128 + (k - 1) * q as u128;
        let rough = eval.x_f64(idx)?;
        let fx = if rough.abs() >= 4096.0 {
            eval.value_fx(idx, CERT_BITS)?
        } else {
            None
        };
        match fx {
            Some(fx) => {
                let shifted = Fx::new(
                    fx.num - ((BigInt::from(p) * BigInt::from(k)) << CERT_BITS),
                    CERT_BITS,
                );
                values.push(shifted.to_f64());
                fracs.push(shifted.frac_f64());
            }
            None => {
                let y = rough - (k as i128 * p) as f64;
                values.push(y);
                fracs.push(frac(y));
            }
        }
    }
    Ok(ResidueSequence { n, p, q, r, values, fracs })
}

/// Index where the first differences turn from nonpositive to nonnegative.
/// The differences must be monotone nondecreasing (exact sign test).
pub fn sign_change_index(y: &ResidueSequence) -> Result<SignChange> {
    let d = y.deltas();
    if d.is_empty() {
        return Err(Error::TooShort { needed: 2, got: y.len() });
    }
    for (i, w) in d.windows(2).enumerate() {
        if w[1] < w[0] {
            return Err(Error::NonMonotone(format!(
                "dy_{} = {} > dy_{} = {}",
                i + 1,
                w[0],
                i + 2,
                w[1]
            )));
        }
    }
    if *d.last().unwrap() <= 0.0 {
        return Ok(SignChange { h: None, beta_positive: false });
    }
    let h = d.iter().filter(|&&v| v <= 0.0).count() as u64;
    Ok(SignChange { h: Some(h), beta_positive: true })
}

/// Sub-case selection for a small-denominator segment. Ties on the
/// `n eps^2` threshold go to case 2.1; `h0 = None` means the sign change
/// lies beyond the search cap.
pub fn dispatch_case(h0: Option<u128>, n: Index, epsilon: f64, delta: f64) -> CaseTag {
    let ne2 = n as f64 * epsilon * epsilon;
    match h0 {
        None => CaseTag::Case21,
        Some(h) => {
            let hf = h as f64;
            if hf >= ne2 {
                CaseTag::Case21
            } else if delta > 0.0 && hf > 1.0 / (epsilon * delta.sqrt()) {
                CaseTag::Case22
            } else {
                CaseTag::Case23
            }
        }
    }
}

fn check_x5(ctx: &Ctx, n: Index, epsilon: f64) -> Result<()> {
    let d2 = ctx.delta2_exact(n)?;
    let (lo, hi) = hypothesis_window(epsilon, n);
    if d2 < lo {
        return Err(Error::HypothesisViolated {
            n,
            detail: format!("second difference {d2:.3e} below admissible minimum {lo:.3e}"),
        });
    }
    if d2 >= hi {
        return Err(Error::HypothesisViolated {
            n,
            detail: format!("second difference {d2:.3e} at or above admissible maximum {hi:.3e}"),
        });
    }
    Ok(())
}

/// h(r): number of leading k with dy_k(r) <= 0, searched by bisection on
/// the monotone difference; `None` when still nonpositive at `cap`.
fn search_sign_change(
    ctx: &Ctx,
    n: Index,
    p: i128,
    q: u64,
    r: u64,
    cap: u128,
) -> Result<Option<u128>> {
    if !ctx.dy(n, p, q, r, 1)?.le_zero() {
        return Ok(Some(0));
    }
    if ctx.dy(n, p, q, r, cap)?.le_zero() {
        return Ok(None);
    }
    // dy(1) <= 0 < dy(cap): find the last nonpositive index
    let mut lo = 1u128; // dy(lo) <= 0
    let mut hi = cap; // dy(hi) > 0
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ctx.dy(n, p, q, r, mid)?.le_zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(lo))
}

/// Spot-check that dy is monotone nondecreasing in k over [1, hi].
fn validate_dy_monotone(
    ctx: &Ctx,
    n: Index,
    p: i128,
    q: u64,
    r: u64,
    hi: u128,
) -> Result<()> {
    if hi < 2 {
        return Ok(());
    }
    let mut samples: Vec<u128> = Vec::new();
    if hi <= 4096 {
        samples.extend(1..=hi);
    } else {
        let mut k = 1u128;
        while k < hi {
            samples.push(k);
            k = (k + (k >> 2)).max(k + 1);
        }
        samples.push(hi);
    }
    let mut prev: Option<DyVal> = None;
    for &k in &samples {
        let cur = ctx.dy(n, p, q, r, k)?;
        if let Some(p_) = &prev {
            if cur.lt(p_) {
                return Err(Error::NonMonotone(format!(
                    "dy at k={k} dropped below the previous sample (r={r})"
                )));
            }
        }
        prev = Some(cur);
    }
    Ok(())
}

fn batch_fracs(ctx: &Ctx, from: Index, count: u128) -> Result<Vec<f64>> {
    if count > MAX_SEGMENT_POINTS {
        return Err(Error::SegmentTooLarge { n: from, points: count, cap: MAX_SEGMENT_POINTS });
    }
    if ctx.uses_fx() && count > 4096 {
        (0..count).into_par_iter().map(|j| ctx.frac(from + j)).collect()
    } else {
        (0..count).map(|j| ctx.frac(from + j)).collect()
    }
}

struct SegmentOutput {
    cert: SegmentCertificate,
    fracs: Vec<f64>,
}

/// Certify one segment starting after index n.
pub fn build_segment(
    spec: &SequenceSpec,
    n: Index,
    epsilon: f64,
    _constant_c: f64,
) -> Result<SegmentCertificate> {
    build_segment_impl(spec, n, epsilon).map(|o| o.cert)
}

fn build_segment_impl(spec: &SequenceSpec, n: Index, epsilon: f64) -> Result<SegmentOutput> {
    validate_epsilon(epsilon)?;
    if (n as f64) < (1.0 / epsilon).powi(5) {
        return Err(Error::HypothesisViolated {
            n,
            detail: format!("start index does not exceed eps^-5 = {:.3e}", (1.0 / epsilon).powi(5)),
        });
    }
    let ctx = Ctx::new(spec, n)?;
    check_x5(&ctx, n, epsilon)?;

    let theta = ctx.delta1(n)?;
    let conv = select_convergent_of(&theta, epsilon)?;
    let alpha = compute_alpha(&theta, &conv);

    if conv.q as f64 > 1.0 / epsilon {
        build_case1(&ctx, n, epsilon, &conv, alpha)
    } else {
        build_case2(&ctx, n, epsilon, &conv, alpha)
    }
}

fn compute_alpha(theta: &Approx, conv: &Convergent) -> f64 {
    match theta {
        Approx::Fixed(fx) => {
            let num = &fx.num * BigInt::from(conv.q) - (BigInt::from(conv.p) << fx.bits);
            Fx::new(num, fx.bits).to_f64()
        }
        Approx::Float(v) => {
            let qf = conv.q as f64;
            let hi = qf * v;
            let lo = f64::mul_add(qf, *v, -hi);
            (hi - conv.p as f64) + lo
        }
    }
}

fn build_case1(
    ctx: &Ctx,
    n: Index,
    epsilon: f64,
    conv: &Convergent,
    alpha: f64,
) -> Result<SegmentOutput> {
    let q = conv.q;
    if q > MAX_SEGMENT_POINTS {
        return Err(Error::SegmentTooLarge { n, points: q, cap: MAX_SEGMENT_POINTS });
    }

    // one mantissa per index serves both the fractional parts and the
    // exact drift comparison against the rigid grid
    let (fracs, drift) = if ctx.uses_fx() {
        let values: Vec<Fx> = (0..=q)
            .into_par_iter()
            .map(|j| Ok(ctx.x_fx(n + j)?.expect("closed forms stay on one route")))
            .collect::<Result<_>>()?;
        let fracs: Vec<f64> = values[1..].iter().map(|v| v.frac_f64()).collect();
        let mut worst = 0.0f64;
        for (j, vj) in values.iter().enumerate().skip(1) {
            let num = (&vj.num - &values[0].num) * BigInt::from(q)
                - ((BigInt::from(j) * BigInt::from(conv.p)) << CERT_BITS);
            worst = worst.max((Fx::new(num, CERT_BITS).to_f64() / q as f64).abs());
        }
        (fracs, worst)
    } else {
        let x0 = ctx.x_f64(n)?;
        let mut fracs = Vec::with_capacity(q as usize);
        let mut worst = 0.0f64;
        for j in 1..=q {
            let x = ctx.x_f64(n + j)?;
            fracs.push(frac(x));
            let d = x - x0 - (j as f64) * conv.p as f64 / q as f64;
            worst = worst.max(d.abs());
        }
        (fracs, worst)
    };
    let report = extreme_discrepancy(&UnitSequence::new(fracs.clone())?);

    let mut case = CaseTag::Case1;

    // the rigid rational grid has discrepancy exactly 1/q
    let grid: Vec<f64> = (1..=q as i128)
        .map(|j| (j * conv.p).rem_euclid(q as i128) as f64 / q as f64)
        .collect();
    let grid_d = extreme_discrepancy(&UnitSequence::new(grid)?).value;
    if (grid_d - 1.0 / q as f64).abs() > 1e-12 {
        case = CaseTag::Fallback;
    }

    // drift from the grid stays below 2/q across the whole block
    if drift > 2.0 / q as f64 + 1e-12 {
        case = CaseTag::Fallback;
    }

    let cert = SegmentCertificate {
        n,
        m: q,
        case,
        p: conv.p,
        q,
        q_next: conv.q_next,
        alpha,
        h0: None,
        delta: None,
        measured_d: report.value,
        bound_ratio: report.value / epsilon,
        witness: report.witness,
        epsilon,
    };
    Ok(SegmentOutput { cert, fracs })
}

fn build_case2(
    ctx: &Ctx,
    n: Index,
    epsilon: f64,
    conv: &Convergent,
    alpha: f64,
) -> Result<SegmentOutput> {
    let q = conv.q as u64;
    let p = conv.p;
    let mut case;

    let ne2 = (n as f64 * epsilon * epsilon).floor();
    let cap_theory = ne2 as u128 + 1;
    let cap = match ctx.max_dy_k(n, q, 0) {
        Some(data_cap) => {
            if data_cap < cap_theory && data_cap < 8 {
                return Err(Error::Precondition(
                    "data ends before the sign-change search can run".into(),
                ));
            }
            cap_theory.min(data_cap)
        }
        None => cap_theory,
    };

    let h0 = search_sign_change(ctx, n, p, q, 0, cap)?;
    validate_dy_monotone(ctx, n, p, q, 0, h0.map_or(cap, |h| (h + 2).min(cap)))?;
    if h0.is_none() && cap < cap_theory {
        return Err(Error::Precondition(format!(
            "sign change not reached within the data horizon (k <= {cap})"
        )));
    }

    // pivot second difference; defined for h0 >= 2, nearest pivot otherwise
    let delta = match h0 {
        Some(h) => {
            let pivot = h.saturating_sub(1).max(1);
            let a = ctx.dy(n, p, q, 0, pivot)?.to_f64(CERT_BITS);
            let b = ctx.dy(n, p, q, 0, pivot + 1)?.to_f64(CERT_BITS);
            Some(b - a)
        }
        None => None,
    };

    case = dispatch_case(h0, n, epsilon, delta.unwrap_or(0.0));

    let l_cap = 2 * (ne2 as u128);
    let m: u128 = match case {
        CaseTag::Case21 => (ne2 as u128).saturating_sub(1).max(1),
        CaseTag::Case22 => {
            let h = h0.expect("case 2.2 has finite h0");
            if h <= 2 {
                case = CaseTag::Fallback;
                1
            } else {
                h - 2
            }
        }
        CaseTag::Case23 => {
            let h = h0.expect("case 2.3 has finite h0");
            let target = (1.0 / epsilon).powi(4);
            match search_climb(ctx, n, p, q, h + 1, l_cap, target)? {
                Some(m) => m,
                None => {
                    case = CaseTag::Fallback;
                    l_cap.max(1)
                }
            }
        }
        _ => unreachable!("dispatch only returns case2 tags"),
    };

    // residue-class structure: h(r) within one of h(0) for every class
    if let Some(h) = h0 {
        for r in 1..=q {
            if h == 0 {
                // h(r) is nonnegative and at most h(0), so it must be 0
                if ctx.dy(n, p, q, r, 1)?.le_zero() {
                    case = CaseTag::Fallback;
                }
                continue;
            }
            let cap_r = ctx.max_dy_k(n, q, r).map_or(h + 2, |d| (h + 2).min(d));
            let hr = search_sign_change(ctx, n, p, q, r, cap_r.max(1))?;
            let ok = matches!(hr, Some(v) if v + 1 == h || v == h);
            if !ok {
                case = CaseTag::Fallback;
            }
        }
    } else {
        // beyond-cap sign change: every class must still be nonpositive at m
        for r in 1..=q {
            if !ctx.dy(n, p, q, r, m.min(cap))?.le_zero() {
                case = CaseTag::Fallback;
            }
        }
    }

    // the small rotation defect stays below eps^4
    if !(alpha.abs() < epsilon.powi(4)) {
        case = CaseTag::Fallback;
    }

    // nonnegative second differences across the block (sampled)
    let span = q as u128 * m;
    let end = n + span;
    let (_, data_hi) = ctx.eval.domain();
    let sample_end = data_hi.map_or(end, |h| end.min(h.saturating_sub(1)));
    let mut i = n;
    while i < sample_end {
        if ctx.delta2(i)? < -1e-12 {
            case = CaseTag::Fallback;
            break;
        }
        i = (i + (end - n) / 32).max(i + 1);
    }

    let fracs = batch_fracs(ctx, n + 1, span)?;
    let report = extreme_discrepancy(&UnitSequence::new(fracs.clone())?);

    let cert = SegmentCertificate {
        n,
        m,
        case,
        p,
        q: q as u128,
        q_next: conv.q_next,
        alpha,
        h0,
        delta,
        measured_d: report.value,
        bound_ratio: report.value / epsilon,
        witness: report.witness,
        epsilon,
    };
    Ok(SegmentOutput { cert, fracs })
}

/// Least m in [from, cap] with `y_m(0) - y_from(0) >= target`.
fn search_climb(
    ctx: &Ctx,
    n: Index,
    p: i128,
    q: u64,
    from: u128,
    cap: u128,
    target: f64,
) -> Result<Option<u128>> {
    let data_cap = ctx.max_dy_k(n, q, 0).map_or(cap, |d| d.min(cap));
    if data_cap <= from {
        return Ok(None);
    }
    if ctx.y_diff(n, p, q, 0, data_cap, from)? < target {
        return Ok(None);
    }
    let mut lo = from; // y_diff(lo) < target
    let mut hi = data_cap; // y_diff(hi) >= target
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ctx.y_diff(n, p, q, 0, mid, from)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(hi))
}

/// Iterate segments, chaining `n <- n + covered`, until `n_end`.
pub fn certify_range(
    spec: &SequenceSpec,
    epsilon: f64,
    n_start: Index,
    n_end: Index,
    constant_c: f64,
) -> Result<CertificateRun> {
    validate_epsilon(epsilon)?;
    let mut segments = Vec::new();
    let mut all_fracs: Vec<f64> = Vec::new();
    let mut n = n_start;
    while n < n_end {
        let out = build_segment_impl(spec, n, epsilon)?;
        let covered = out.cert.covered();
        if covered as f64 > 2.0 * n as f64 * epsilon {
            return Err(Error::Precondition(format!(
                "segment at n={n} covers {covered} > 2 n eps"
            )));
        }
        if out.cert.bound_ratio > constant_c {
            return Err(Error::BoundExceeded {
                n,
                measured: out.cert.measured_d,
                allowed: constant_c * epsilon,
                witness: out.cert.witness.unwrap_or(Interval { a: 0.0, b: 1.0 }),
            });
        }
        if all_fracs.len() as u128 + covered <= MAX_SEGMENT_POINTS {
            all_fracs.extend_from_slice(&out.fracs);
        } else {
            return Err(Error::SegmentTooLarge {
                n,
                points: all_fracs.len() as u128 + covered,
                cap: MAX_SEGMENT_POINTS,
            });
        }
        segments.push(out.cert);
        n += covered;
    }

    let aggregate_d = if all_fracs.is_empty() {
        0.0
    } else {
        extreme_discrepancy(&UnitSequence::new(all_fracs.clone())?).value
    };

    let aggregation_check = if segments.is_empty() {
        None
    } else {
        let eps_blocks = segments
            .iter()
            .map(|s| s.measured_d)
            .fold(epsilon, f64::max)
            * (1.0 + 1e-9);
        let mut cuts: Vec<Index> = vec![n_start];
        let mut at = n_start;
        for s in &segments {
            at += s.covered();
            cuts.push(at);
        }
        let x = crate::seq::RealSequence::new(n_start + 1, all_fracs)?;
        let check = crate::lemmas::check_block_aggregation(&x, eps_blocks, &cuts)?;
        if !check.pass {
            return Err(Error::Precondition(format!(
                "block aggregation bound failed: D = {:.6} vs {:.6}",
                check.lhs, check.rhs
            )));
        }
        Some(check)
    };

    Ok(CertificateRun {
        epsilon,
        n_epsilon: n_start,
        constant_c,
        segments,
        aggregate_d,
        aggregation_check,
    })
}

/// Recompute a case-2 certificate's union and per-class discrepancies and
/// compare them under the merge bound. Returns a failing check rather than
/// an error when the inequality does not hold.
pub fn interleave_check(cert: &SegmentCertificate, spec: &SequenceSpec) -> Result<LemmaCheck> {
    let ctx = Ctx::new(spec, cert.n)?;
    let q = cert.q;
    let m = cert.m;
    let span = match cert.case {
        CaseTag::Case1 => m,
        _ => q * m,
    };
    let fracs = batch_fracs(&ctx, cert.n + 1, span)?;
    let union_d = auto_discrepancy(&UnitSequence::new(fracs.clone())?);
    let max_class_d = if matches!(cert.case, CaseTag::Case1) || q == 1 {
        union_d
    } else {
        let mut worst = 0.0f64;
        for r in 1..=q as usize {
            let class: Vec<f64> = fracs[r - 1..].iter().step_by(q as usize).copied().collect();
            worst = worst.max(auto_discrepancy(&UnitSequence::new(class)?));
        }
        worst
    };
    let digest = format!("n={};q={q};m={m};case={:?}", cert.n, cert.case);
    let margin = max_class_d - union_d;
    let pass = margin >= -MARGIN_TOLERANCE * max_class_d.max(1.0) - 1e-12;
    Ok(LemmaCheck {
        lemma_id: LemmaId::L8,
        lhs: union_d,
        rhs: max_class_d,
        margin,
        pass,
        instance_digest: digest,
    })
}
