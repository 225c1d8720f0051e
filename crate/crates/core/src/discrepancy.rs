//! Exact counting and extreme discrepancy of finite sequences modulo one.
//!
//! Two routes compute the same supremum: a closed form over sorted points
//! (`extreme_discrepancy`) and an O(m^2) endpoint enumeration
//! (`extreme_discrepancy_oracle`). The oracle is the authority; the fast
//! path is adopted because the equivalence suite holds it to 1e-12.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonfmt::sig17;
use crate::seq::UnitSequence;

/// Half-open subinterval of the unit interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    #[serde(serialize_with = "sig17")]
    pub a: f64,
    #[serde(serialize_with = "sig17")]
    pub b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && 0.0 <= a && a < b && b <= 1.0) {
            return Err(Error::InvalidInterval { a, b });
        }
        Ok(Interval { a, b })
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Fast,
    Oracle,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiscrepancyReport {
    #[serde(serialize_with = "sig17")]
    pub value: f64,
    pub witness: Option<Interval>,
    pub method: Method,
}

/// Number of points with `u_k` in `[a, b)`.
pub fn count_in_interval(u: &UnitSequence, iv: &Interval) -> usize {
    u.points().iter().filter(|&&p| iv.a <= p && p < iv.b).count()
}

/// Supremum over anchored intervals `[0, b)`.
pub fn star_discrepancy(u: &UnitSequence) -> f64 {
    let mut pts = u.points().to_vec();
    pts.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let m = pts.len() as f64;
    let mut best = 0.0f64;
    for (i, &p) in pts.iter().enumerate() {
        let up = (i as f64 + 1.0) / m - p;
        let down = p - i as f64 / m;
        best = best.max(up).max(down);
    }
    best
}

fn sorted_points(u: &UnitSequence) -> Vec<f64> {
    let mut pts = u.points().to_vec();
    if pts.len() > 100_000 {
        use rayon::slice::ParallelSliceMut;
        pts.par_sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    } else {
        pts.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    }
    pts
}

/// Smallest admissible right endpoint strictly above `v`, staying below the
/// next distinct point value (or 1).
fn just_above(v: f64, next: f64) -> f64 {
    let tiny = 1e-13f64.min((next - v) / 2.0);
    let b = v + tiny;
    if b > v {
        b.min(next)
    } else {
        next
    }
}

/// Extreme discrepancy via the sorted-points closed form:
/// `1/m + max_i(i/m - u_(i)) - min_i(i/m - u_(i))`.
pub fn extreme_discrepancy(u: &UnitSequence) -> DiscrepancyReport {
    let pts = sorted_points(u);
    let m = pts.len() as f64;
    let mut hi = 0usize;
    let mut lo = 0usize;
    let mut smax = f64::NEG_INFINITY;
    let mut smin = f64::INFINITY;
    for (i, &p) in pts.iter().enumerate() {
        let s = (i as f64 + 1.0) / m - p;
        if s > smax {
            smax = s;
            hi = i;
        }
        if s < smin {
            smin = s;
            lo = i;
        }
    }
    let value = 1.0 / m + smax - smin;

    let witness = if hi >= lo {
        // excess: [u_lo, u_hi] closed, realized half-open
        let next = pts[hi + 1..]
            .iter()
            .copied()
            .find(|&q| q > pts[hi])
            .unwrap_or(1.0);
        Interval::new(pts[lo], just_above(pts[hi], next)).ok()
    } else {
        // deficiency: open interval (u_hi, u_lo)
        let a = (pts[hi] + 1e-13f64.min((pts[lo] - pts[hi]) / 2.0)).max(pts[hi].next_up());
        Interval::new(a.min(pts[lo]), pts[lo]).ok()
    };

    DiscrepancyReport { value, witness, method: Method::Fast }
}

/// Oracle value below the quadratic-cost knee, fast value above.
pub fn auto_discrepancy(u: &UnitSequence) -> f64 {
    if u.len() <= 1_000 {
        extreme_discrepancy_oracle_unguarded(u).value
    } else {
        extreme_discrepancy(u).value
    }
}

/// Default quadratic-cost guard for the oracle.
pub const ORACLE_GUARD: usize = 10_000;

/// Brute-force supremum over all candidate endpoint pairs drawn from the
/// sorted point values, with both closed-count and open-limit cases.
pub fn extreme_discrepancy_oracle(u: &UnitSequence) -> Result<DiscrepancyReport> {
    if u.len() > ORACLE_GUARD {
        return Err(Error::GuardExceeded { len: u.len(), cap: ORACLE_GUARD });
    }
    Ok(extreme_discrepancy_oracle_unguarded(u))
}

pub fn extreme_discrepancy_oracle_unguarded(u: &UnitSequence) -> DiscrepancyReport {
    let pts = sorted_points(u);
    let m = pts.len() as f64;

    // distinct values with cumulative counts
    let mut vals: Vec<f64> = Vec::new();
    let mut below: Vec<usize> = Vec::new(); // points strictly below vals[i]
    let mut upto: Vec<usize> = Vec::new(); // points at or below vals[i]
    for (i, &p) in pts.iter().enumerate() {
        if vals.last() != Some(&p) {
            vals.push(p);
            below.push(i);
            upto.push(i + 1);
        } else {
            *upto.last_mut().unwrap() = i + 1;
        }
    }
    let d = vals.len();

    let mut best = f64::NEG_INFINITY;
    let mut wa = 0.0f64;
    let mut wb = 1.0f64;
    let mut consider = |v: f64, a: f64, b: f64| {
        if v > best && a < b {
            best = v;
            wa = a;
            wb = b;
        }
    };

    for i in 0..d {
        // deficiency with right endpoint at 1: (v_i, 1)
        consider(
            (1.0 - vals[i]) - (pts.len() - upto[i]) as f64 / m,
            (vals[i] + 1e-13f64.min((1.0 - vals[i]) / 2.0)).max(vals[i].next_up()),
            1.0,
        );
        // deficiency anchored at 0: [0, v_i)
        if vals[i] > 0.0 {
            consider(vals[i] - below[i] as f64 / m, 0.0, vals[i]);
        }
        for j in i..d {
            let next_j = if j + 1 < d { vals[j + 1] } else { 1.0 };
            // excess: closed [v_i, v_j], realized as [v_i, v_j + eps)
            let count = (upto[j] - below[i]) as f64;
            consider(
                count / m - (vals[j] - vals[i]),
                vals[i],
                just_above(vals[j], next_j),
            );
            // deficiency: open (v_i, v_j)
            if j > i {
                let between = (below[j] - upto[i]) as f64;
                let a = (vals[i] + 1e-13f64.min((vals[j] - vals[i]) / 2.0))
                    .max(vals[i].next_up());
                consider((vals[j] - vals[i]) - between / m, a.min(vals[j]), vals[j]);
            }
        }
    }

    let witness = Interval::new(wa, wb).ok();
    DiscrepancyReport { value: best, witness, method: Method::Oracle }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seq::{fractional_parts, RealSequence};

    fn unit(points: &[f64]) -> UnitSequence {
        UnitSequence::new(points.to_vec()).unwrap()
    }

    #[test]
    fn count_examples() {
        let u = unit(&[0.1, 0.5, 0.9]);
        assert_eq!(count_in_interval(&u, &Interval::new(0.0, 1.0).unwrap()), 3);
        assert_eq!(count_in_interval(&u, &Interval::new(0.5, 0.9).unwrap()), 1);

        let x = RealSequence::from_values(vec![1.25, 2.25]).unwrap();
        let u = fractional_parts(&x);
        assert_eq!(count_in_interval(&u, &Interval::new(0.2, 0.3).unwrap()), 2);
    }

    #[test]
    fn equispaced_four() {
        let u = unit(&[0.0, 0.25, 0.5, 0.75]);
        assert!((extreme_discrepancy(&u).value - 0.25).abs() < 1e-15);
        assert!((extreme_discrepancy_oracle(&u).unwrap().value - 0.25).abs() < 1e-15);
    }

    #[test]
    fn full_residue_system() {
        // {3j/5 mod 1 : j=1..5}
        let pts: Vec<f64> = (1..=5).map(|j| (3.0 * j as f64 / 5.0).fract()).collect();
        let u = unit(&pts);
        assert!((extreme_discrepancy(&u).value - 0.2).abs() < 1e-15);
    }

    #[test]
    fn single_point_sup_is_one() {
        let u = unit(&[0.5]);
        assert!((extreme_discrepancy(&u).value - 1.0).abs() < 1e-15);
        assert!((extreme_discrepancy_oracle(&u).unwrap().value - 1.0).abs() < 1e-15);
        assert!((star_discrepancy(&u) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn two_points() {
        let u = unit(&[0.0, 0.5]);
        assert!((extreme_discrepancy(&u).value - 0.5).abs() < 1e-15);
    }

    #[test]
    fn star_examples() {
        let u = unit(&[0.25, 0.75]);
        assert!((star_discrepancy(&u) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn witness_attains_value() {
        let pts = [0.11, 0.32, 0.33, 0.48, 0.76, 0.76, 0.9];
        let u = unit(&pts);
        for rep in [
            extreme_discrepancy(&u),
            extreme_discrepancy_oracle(&u).unwrap(),
        ] {
            let w = rep.witness.expect("witness present");
            let attained = (count_in_interval(&u, &w) as f64 / pts.len() as f64
                - w.length())
            .abs();
            assert!(
                attained >= rep.value - 1e-12,
                "witness [{}, {}) attains {attained}, claimed {}",
                w.a,
                w.b,
                rep.value
            );
        }
    }

    #[test]
    fn oracle_guard() {
        let pts: Vec<f64> = (0..ORACLE_GUARD + 1).map(|i| i as f64 / 20000.0).collect();
        let u = unit(&pts);
        assert!(matches!(
            extreme_discrepancy_oracle(&u),
            Err(Error::GuardExceeded { .. })
        ));
    }

    #[test]
    fn interval_validation() {
        assert!(Interval::new(0.5, 0.5).is_err());
        assert!(Interval::new(-0.1, 0.5).is_err());
        assert!(Interval::new(0.2, 1.1).is_err());
    }
}
