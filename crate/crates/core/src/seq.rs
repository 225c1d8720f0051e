//! Sequence types, named generators, difference operators, fractional parts,
//! weak-monotonicity analysis and the hypothesis scan.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixedpoint::{ClosedForm, Fx, CERT_BITS};

/// Sequence index. Certification routinely visits indices beyond 2^64.
pub type Index = u128;

/// Hard cap on materialized sequence length.
pub const MAX_MATERIALIZED: u128 = 100_000_000;

/// A finite indexed list of real values, the universal carrier.
#[derive(Debug, Clone, PartialEq)]
pub struct RealSequence {
    start_index: Index,
    values: Vec<f64>,
}

impl RealSequence {
    pub fn new(start_index: Index, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySequence);
        }
        if start_index < 1 {
            return Err(Error::Precondition("start_index must be >= 1".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index: i });
        }
        Ok(RealSequence { start_index, values })
    }

    /// Convenience constructor with start index 1.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        Self::new(1, values)
    }

    pub fn start_index(&self) -> Index {
        self.start_index
    }

    pub fn end_index(&self) -> Index {
        self.start_index + self.values.len() as u128 - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Fractional parts in [0,1), input to counting and discrepancy.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitSequence(Vec<f64>);

impl UnitSequence {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySequence);
        }
        for (i, &p) in points.iter().enumerate() {
            if !p.is_finite() || !(0.0..1.0).contains(&p) {
                return Err(Error::NonFinite { index: i });
            }
        }
        Ok(UnitSequence(points))
    }

    pub(crate) fn from_fracs(points: Vec<f64>) -> Self {
        debug_assert!(points.iter().all(|p| (0.0..1.0).contains(p)));
        UnitSequence(points)
    }

    pub fn points(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Fractional part with the floor convention: `frac(-0.75) = 0.25`.
#[inline]
pub fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    if f >= 1.0 {
        // x was a hair below an integer and the subtraction rounded up
        0.0
    } else {
        f
    }
}

/// Generator descriptor for the named families.
#[derive(Debug, Clone, PartialEq)]
pub enum SequenceSpec {
    /// `x_n = n^a`, `a > 0`.
    Power { a: f64 },
    /// `x_n = n ln n`.
    NLog,
    /// `x_n = ln n`.
    Log,
    /// `x_n = theta * n`.
    Linear { theta: f64 },
    /// Values loaded from a text file (one decimal per line, `#` comments).
    File(PathBuf),
    /// Explicit data; `start_index` gives the index of the first value.
    Explicit { start_index: Index, values: Arc<Vec<f64>> },
}

impl SequenceSpec {
    pub fn explicit(start_index: Index, values: Vec<f64>) -> Self {
        SequenceSpec::Explicit { start_index, values: Arc::new(values) }
    }

    /// Parse the spec mini-language: `pow:a=1.5`, `nlog`, `log`,
    /// `linear:theta=1.41421356237`, `file:<path>`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "nlog" {
            return Ok(SequenceSpec::NLog);
        }
        if s == "log" {
            return Ok(SequenceSpec::Log);
        }
        if let Some(rest) = s.strip_prefix("pow:") {
            let a = rest
                .strip_prefix("a=")
                .and_then(|v| v.parse::<f64>().ok())
                .ok_or_else(|| Error::InvalidSpec(s.into()))?;
            if !(a > 0.0) || !a.is_finite() {
                return Err(Error::InvalidSpec(format!("pow requires a > 0, got {a}")));
            }
            return Ok(SequenceSpec::Power { a });
        }
        if let Some(rest) = s.strip_prefix("linear:") {
            let theta = rest
                .strip_prefix("theta=")
                .and_then(|v| v.parse::<f64>().ok())
                .ok_or_else(|| Error::InvalidSpec(s.into()))?;
            if !theta.is_finite() {
                return Err(Error::InvalidSpec("linear requires finite theta".into()));
            }
            return Ok(SequenceSpec::Linear { theta });
        }
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(SequenceSpec::File(PathBuf::from(path)));
        }
        Err(Error::InvalidSpec(s.into()))
    }

    pub(crate) fn closed_form(&self) -> Option<ClosedForm> {
        match self {
            SequenceSpec::Power { a } => Some(ClosedForm::Power { a: *a }),
            SequenceSpec::NLog => Some(ClosedForm::NLog),
            SequenceSpec::Log => Some(ClosedForm::Log),
            SequenceSpec::Linear { theta } => Some(ClosedForm::Linear { theta: *theta }),
            _ => None,
        }
    }
}

impl fmt::Display for SequenceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SequenceSpec::Power { a } => write!(f, "pow:a={a}"),
            SequenceSpec::NLog => write!(f, "nlog"),
            SequenceSpec::Log => write!(f, "log"),
            SequenceSpec::Linear { theta } => write!(f, "linear:theta={theta}"),
            SequenceSpec::File(p) => write!(f, "file:{}", p.display()),
            SequenceSpec::Explicit { start_index, values } => {
                write!(f, "explicit[start={start_index},len={}]", values.len())
            }
        }
    }
}

fn parse_sequence_file(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut values = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| Error::ParseLine { line: lineno + 1, text: line.into() })?;
        values.push(v);
    }
    Ok(values)
}

/// Resolved access to a sequence: either a closed form or loaded data.
#[derive(Debug, Clone)]
pub struct Evaluator {
    kind: EvalKind,
}

#[derive(Debug, Clone)]
enum EvalKind {
    Closed(ClosedForm),
    Data { start: Index, values: Arc<Vec<f64>> },
}

/// First-difference value for Diophantine work: a plain double for data
/// sequences, a fixed-point mantissa for closed forms.
#[derive(Debug, Clone)]
pub enum Approx {
    Float(f64),
    Fixed(Fx),
}

impl Approx {
    pub fn to_f64(&self) -> f64 {
        match self {
            Approx::Float(v) => *v,
            Approx::Fixed(fx) => fx.to_f64(),
        }
    }
}

/// Threshold above which closed-form fractional parts switch to the
/// fixed-point path (f64 ulp at the value would exceed ~1e-12).
const FX_VALUE_THRESHOLD: f64 = 4096.0;

impl Evaluator {
    pub fn new(spec: &SequenceSpec) -> Result<Self> {
        let kind = match spec {
            SequenceSpec::File(path) => {
                let values = parse_sequence_file(path)?;
                if values.is_empty() {
                    return Err(Error::EmptySequence);
                }
                if let Some(i) = values.iter().position(|v| !v.is_finite()) {
                    return Err(Error::NonFinite { index: i });
                }
                EvalKind::Data { start: 1, values: Arc::new(values) }
            }
            SequenceSpec::Explicit { start_index, values } => {
                if values.is_empty() {
                    return Err(Error::EmptySequence);
                }
                EvalKind::Data { start: *start_index, values: values.clone() }
            }
            other => {
                if let SequenceSpec::Power { a } = other {
                    if !(*a > 0.0) || !a.is_finite() {
                        return Err(Error::InvalidSpec(format!("pow requires a > 0, got {a}")));
                    }
                }
                if let SequenceSpec::Linear { theta } = other {
                    if !theta.is_finite() {
                        return Err(Error::InvalidSpec("linear requires finite theta".into()));
                    }
                }
                EvalKind::Closed(other.closed_form().expect("closed form covered above"))
            }
        };
        Ok(Evaluator { kind })
    }

    /// Index range with data: `(first, Some(last))` for data-backed
    /// sequences, `(1, None)` for closed forms.
    pub fn domain(&self) -> (Index, Option<Index>) {
        match &self.kind {
            EvalKind::Closed(_) => (1, None),
            EvalKind::Data { start, values } => {
                (*start, Some(*start + values.len() as u128 - 1))
            }
        }
    }

    fn check_domain(&self, n: Index) -> Result<()> {
        let (lo, hi) = self.domain();
        if n < lo || hi.is_some_and(|h| n > h) {
            return Err(Error::IndexOutOfRange {
                from: n,
                to: n,
                lo,
                hi: hi.unwrap_or(u128::MAX),
            });
        }
        Ok(())
    }

    pub fn x_f64(&self, n: Index) -> Result<f64> {
        self.check_domain(n)?;
        Ok(match &self.kind {
            EvalKind::Closed(form) => form.value_f64(n),
            EvalKind::Data { start, values } => values[(n - start) as usize],
        })
    }

    /// Fractional part of `x_n`, through the fixed-point path when the raw
    /// value is too large for f64 to carry the fraction.
    pub fn frac_x(&self, n: Index) -> Result<f64> {
        self.check_domain(n)?;
        match &self.kind {
            EvalKind::Closed(form) => {
                let rough = form.value_f64(n);
                if rough.abs() >= FX_VALUE_THRESHOLD && form.fx_supported() {
                    Ok(form.value_fx(n, 96)?.frac_f64())
                } else {
                    Ok(frac(rough))
                }
            }
            EvalKind::Data { start, values } => Ok(frac(values[(n - start) as usize])),
        }
    }

    /// Fixed-point value when the form supports it.
    pub fn value_fx(&self, n: Index, bits: u32) -> Result<Option<Fx>> {
        self.check_domain(n)?;
        match &self.kind {
            EvalKind::Closed(form) if form.fx_supported() => {
                Ok(Some(form.value_fx(n, bits)?))
            }
            _ => Ok(None),
        }
    }

    /// First difference as input for convergent selection.
    pub fn delta1(&self, n: Index) -> Result<Approx> {
        self.check_domain(n)?;
        self.check_domain(n + 1)?;
        match &self.kind {
            EvalKind::Closed(form) => {
                if form.fx_supported() {
                    let a = form.value_fx(n, CERT_BITS)?;
                    let b = form.value_fx(n + 1, CERT_BITS)?;
                    Ok(Approx::Fixed(b.sub(&a)))
                } else {
                    Ok(Approx::Float(form.delta1_f64(n)))
                }
            }
            EvalKind::Data { start, values } => {
                let i = (n - start) as usize;
                Ok(Approx::Float(values[i + 1] - values[i]))
            }
        }
    }

    /// Second difference, accurate in sign and relative size.
    pub fn delta2(&self, n: Index) -> Result<f64> {
        self.check_domain(n)?;
        self.check_domain(n + 2)?;
        match &self.kind {
            EvalKind::Closed(form) => Ok(form.delta2_f64(n)),
            EvalKind::Data { start, values } => {
                let i = (n - start) as usize;
                Ok(values[i + 2] - 2.0 * values[i + 1] + values[i])
            }
        }
    }

    /// Second difference through the exact mantissa path when available;
    /// falls back to `delta2`.
    pub fn delta2_exact(&self, n: Index) -> Result<f64> {
        match &self.kind {
            EvalKind::Closed(form) if form.fx_supported() => {
                self.check_domain(n)?;
                let a = form.value_fx(n, CERT_BITS)?;
                let b = form.value_fx(n + 1, CERT_BITS)?;
                let c = form.value_fx(n + 2, CERT_BITS)?;
                Ok(Fx::new(&c.num - (&b.num << 1u8) + &a.num, CERT_BITS).to_f64())
            }
            _ => self.delta2(n),
        }
    }

    pub fn is_closed_form(&self) -> bool {
        matches!(self.kind, EvalKind::Closed(_))
    }
}

/// Materialize `x_from ..= x_to` for a spec.
pub fn generate(spec: &SequenceSpec, from: Index, to: Index) -> Result<RealSequence> {
    if from < 1 || from > to || to - from + 1 > MAX_MATERIALIZED {
        return Err(Error::BadRange { from, to, cap: MAX_MATERIALIZED });
    }
    let eval = Evaluator::new(spec)?;
    let (lo, hi) = eval.domain();
    if from < lo || hi.is_some_and(|h| to > h) {
        return Err(Error::IndexOutOfRange { from, to, lo, hi: hi.unwrap_or(u128::MAX) });
    }
    let mut values = Vec::with_capacity((to - from + 1) as usize);
    for n in from..=to {
        values.push(eval.x_f64(n)?);
    }
    RealSequence::new(from, values)
}

/// Forward differences of order 1 or 2; the start index is preserved.
pub fn forward_differences(x: &RealSequence, order: u32) -> Result<RealSequence> {
    if order == 0 || order > 2 {
        return Err(Error::InvalidOrder(order));
    }
    let needed = order as usize + 1;
    if x.len() < needed {
        return Err(Error::TooShort { needed, got: x.len() });
    }
    let first: Vec<f64> = x.values().windows(2).map(|w| w[1] - w[0]).collect();
    let first = RealSequence::new(x.start_index(), first)?;
    if order == 1 {
        Ok(first)
    } else {
        forward_differences(&first, 1)
    }
}

/// Fractional parts of every element, order preserved.
pub fn fractional_parts(x: &RealSequence) -> UnitSequence {
    UnitSequence::from_fracs(x.values().iter().map(|&v| frac(v)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonotonicityKind {
    WeaklyDecreasing,
    WeaklyIncreasing,
    Neither,
}

/// Result of testing the weak-monotonicity definition on finite data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityProfile {
    pub kind: MonotonicityKind,
    /// Minimal admissible constant (>= 1) when `kind` is not `Neither`.
    pub constant_k: Option<f64>,
}

fn weakly_decreasing_constant(values: &[f64]) -> Option<f64> {
    if values.iter().any(|&v| v < 0.0) {
        return None;
    }
    let m = values.len();
    let mut suffix_max = vec![0.0f64; m];
    let mut acc = f64::NEG_INFINITY;
    for i in (0..m).rev() {
        acc = acc.max(values[i]);
        suffix_max[i] = acc;
    }
    let mut k = 1.0f64;
    let mut prefix_min = f64::INFINITY;
    for split in 1..m {
        prefix_min = prefix_min.min(values[split - 1]);
        let mx = suffix_max[split];
        if mx == 0.0 {
            continue;
        }
        if prefix_min == 0.0 {
            return None;
        }
        k = k.max(mx / prefix_min);
    }
    Some(k)
}

/// Minimal constant for which the sequence is weakly decreasing
/// (every later term at most K times every earlier running minimum),
/// or weakly increasing (the negated sequence is weakly decreasing).
pub fn monotonicity_profile(x: &RealSequence) -> Result<MonotonicityProfile> {
    if x.len() < 2 {
        return Err(Error::TooShort { needed: 2, got: x.len() });
    }
    if let Some(k) = weakly_decreasing_constant(x.values()) {
        return Ok(MonotonicityProfile {
            kind: MonotonicityKind::WeaklyDecreasing,
            constant_k: Some(k),
        });
    }
    let negated: Vec<f64> = x.values().iter().map(|v| -v).collect();
    if let Some(k) = weakly_decreasing_constant(&negated) {
        return Ok(MonotonicityProfile {
            kind: MonotonicityKind::WeaklyIncreasing,
            constant_k: Some(k),
        });
    }
    Ok(MonotonicityProfile { kind: MonotonicityKind::Neither, constant_k: None })
}

/// Admissible window for the second difference at index n:
/// `1/(eps^8 n^2) <= d2 < eps^12`.
pub fn hypothesis_window(epsilon: f64, n: Index) -> (f64, f64) {
    let inv = 1.0 / epsilon;
    let lo = inv.powi(8) / ((n as f64) * (n as f64));
    let hi = epsilon.powi(12);
    (lo, hi)
}

pub fn validate_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 0.1) {
        return Err(Error::EpsilonOutOfRange(epsilon));
    }
    Ok(())
}

/// Outcome of scanning for the window condition.
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub epsilon: f64,
    /// Least sampled index past which every sampled n satisfied the window.
    pub n_epsilon: Option<Index>,
    pub horizon: Index,
    /// First violations encountered (capped), as (index, reason).
    pub violations: Vec<(Index, String)>,
    /// Whether the second differences were negated (weakly increasing
    /// orientation) before testing.
    pub negated: bool,
}

const DENSE_SCAN_LIMIT: Index = 10_000_000;
const VIOLATION_CAP: usize = 64;

/// Scan `(eps^-5, horizon]` for the least index past which the
/// second-difference window holds at every sampled n. Every index is
/// sampled up to 10^7; past that the scan is geometric with the final
/// crossing refined by bisection.
pub fn hypothesis_scan(
    spec: &SequenceSpec,
    epsilon: f64,
    horizon: Index,
) -> Result<HypothesisReport> {
    validate_epsilon(epsilon)?;
    let eval = Evaluator::new(spec)?;
    let base = (1.0 / epsilon).powi(5).floor() as u128 + 1;
    if horizon <= base {
        return Err(Error::Precondition(format!(
            "horizon {horizon} must exceed eps^-5 ~ {base}"
        )));
    }
    let (_, data_hi) = eval.domain();
    // delta2 needs n+2 in range
    let eff_horizon = match data_hi {
        Some(h) if h < horizon + 2 => {
            if h < base + 3 {
                return Err(Error::Precondition(format!(
                    "data ends at {h}, below the scan base {base}"
                )));
            }
            h - 2
        }
        _ => horizon,
    };

    let negated = eval.delta2(base)? < 0.0;
    let sign = if negated { -1.0 } else { 1.0 };
    let violation = |n: Index| -> Result<Option<String>> {
        let d2 = sign * eval.delta2(n)?;
        let (lo, hi) = hypothesis_window(epsilon, n);
        if d2 < lo {
            Ok(Some(format!("d2 {d2:.3e} below lower bound {lo:.3e}")))
        } else if d2 >= hi {
            Ok(Some(format!("d2 {d2:.3e} at or above upper bound {hi:.3e}")))
        } else {
            Ok(None)
        }
    };

    let mut violations: Vec<(Index, String)> = Vec::new();
    let mut last_violation: Option<Index> = None;
    let mut first_pass_after: Option<Index> = None;
    let mut record = |n: Index, v: Option<String>| {
        match v {
            Some(reason) => {
                if violations.len() < VIOLATION_CAP {
                    violations.push((n, reason));
                }
                last_violation = Some(n);
                first_pass_after = None;
            }
            None => {
                if first_pass_after.is_none() {
                    first_pass_after = Some(n);
                }
            }
        }
    };

    let dense_end = eff_horizon.min(DENSE_SCAN_LIMIT);
    let mut n = base + 1;
    while n <= dense_end {
        record(n, violation(n)?);
        n += 1;
    }
    if eff_horizon > dense_end {
        let mut g = dense_end.max(base + 1);
        while g < eff_horizon {
            g = (g + (g >> 10)).max(g + 1).min(eff_horizon);
            record(g, violation(g)?);
        }
    }

    let n_epsilon = match last_violation {
        None => Some(base).filter(|&b| b < eff_horizon),
        Some(v) => {
            match first_pass_after {
                None => None,
                Some(p) => {
                    // refine the crossing between the last violating sample
                    // and the first passing sample after it
                    let mut lo = v;
                    let mut hi = p;
                    if eval.is_closed_form() {
                        while hi - lo > 1 {
                            let mid = lo + (hi - lo) / 2;
                            if violation(mid)?.is_some() {
                                lo = mid;
                            } else {
                                hi = mid;
                            }
                        }
                    }
                    Some(lo.max(base)).filter(|&x| x < eff_horizon)
                }
            }
        }
    };

    Ok(HypothesisReport { epsilon, n_epsilon, horizon, violations, negated })
}
