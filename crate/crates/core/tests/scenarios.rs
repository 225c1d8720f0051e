//! End-to-end scenarios beyond the acceptance criteria: other sequence
//! families driven through the full scan-and-certify pipeline.

use equidist_core::certify::{certify_range, CaseTag};
use equidist_core::discrepancy::{extreme_discrepancy, extreme_discrepancy_oracle_unguarded};
use equidist_core::seq::{hypothesis_scan, Evaluator, SequenceSpec, UnitSequence};

/// `n ln n` has second differences near 1/n, so the admissible window for
/// eps = 0.09 opens near 3.5e12 — reachable with the fixed-point log path.
#[test]
fn nlog_certifies_past_its_threshold() {
    let spec = SequenceSpec::NLog;
    let eps = 0.09;
    let report = hypothesis_scan(&spec, eps, 10_000_000_000_000).unwrap();
    let n_eps = report.n_epsilon.expect("window stabilizes");
    assert!(!report.negated);
    assert!(n_eps > 3_000_000_000_000 && n_eps < 4_000_000_000_000, "n_eps = {n_eps}");

    let n_start = n_eps + 1 + n_eps / 1_000_000;
    let n_end = n_start + 20_000;
    let run = certify_range(&spec, eps, n_start, n_end, 10.0).unwrap();
    assert!(!run.segments.is_empty());
    let mut at = n_start;
    for s in &run.segments {
        assert_eq!(s.n, at);
        at += s.covered();
        assert_ne!(s.case, CaseTag::Fallback);
        assert!(s.bound_ratio <= 10.0, "ratio {} at n={}", s.bound_ratio, s.n);
    }
    assert!(run.aggregation_check.unwrap().pass);
}

/// The same machinery at a second epsilon for the power family: the
/// threshold scales like eps^-24 for n^{3/2}.
#[test]
fn pow_certifies_at_eps_009() {
    let spec = SequenceSpec::Power { a: 1.5 };
    let eps = 0.09;
    let report = hypothesis_scan(&spec, eps, 100_000_000_000_000_000_000_000_000).unwrap();
    let n_eps = report.n_epsilon.expect("window stabilizes");

    let n_start = n_eps + 1 + n_eps / 1_000_000_000;
    let run = certify_range(&spec, eps, n_start, n_start + 40_000, 10.0).unwrap();
    assert!(!run.segments.is_empty());
    for s in &run.segments {
        assert_eq!(s.case, CaseTag::Case1);
        assert!(s.bound_ratio <= 10.0);
    }
    assert!(run.aggregate_d < eps, "aggregate {}", run.aggregate_d);
}

/// Fractional parts produced by the fixed-point route agree with plain f64
/// where both are trustworthy, and the discrepancy routes agree on them.
#[test]
fn fx_and_f64_fracs_agree_at_desk_scale() {
    let eval = Evaluator::new(&SequenceSpec::Power { a: 1.5 }).unwrap();
    let mut pts = Vec::new();
    for n in 1..=3000u128 {
        let fx = eval.frac_x(n).unwrap();
        let direct = (n as f64).powf(1.5).fract();
        // f64 ulp at x ~ 1.6e5 is ~3e-11
        assert!((fx - direct).abs() < 5e-11, "n={n}: {fx} vs {direct}");
        pts.push(fx);
    }
    let u = UnitSequence::new(pts).unwrap();
    let fast = extreme_discrepancy(&u).value;
    let oracle = extreme_discrepancy_oracle_unguarded(&u).value;
    assert!((fast - oracle).abs() <= 1e-12);
}
