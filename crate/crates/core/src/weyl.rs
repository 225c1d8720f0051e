//! Weyl exponential sums `S_N(h) = (1/N) sum exp(2 pi i h x_k)` and
//! empirical convergence profiles.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kahan::KahanSum;
use crate::seq::{frac, Evaluator, RealSequence, SequenceSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct WeylPoint {
    pub h: i64,
    pub n: u64,
    pub sum: Complex64,
    pub magnitude: f64,
}

/// `h * x mod 1` without losing the fractional phase: the product is split
/// exactly into a rounded head and an fma remainder, and only the head's
/// fractional part is kept before recombining.
#[inline]
pub fn phase_mul_mod1(h: f64, x: f64) -> f64 {
    let hi = h * x;
    let lo = f64::mul_add(h, x, -hi);
    frac(frac(hi) + lo)
}

fn accumulate(phases: impl Iterator<Item = f64>, count: usize) -> (Complex64, f64) {
    let mut re = KahanSum::new();
    let mut im = KahanSum::new();
    for p in phases {
        let angle = std::f64::consts::TAU * p;
        re += angle.cos();
        im += angle.sin();
    }
    let mut sum = Complex64::new(re.value() / count as f64, im.value() / count as f64);
    let mut magnitude = sum.norm();
    if magnitude > 1.0 {
        sum /= magnitude;
        magnitude = 1.0;
    }
    (sum, magnitude)
}

/// Weyl sum over the values of a materialized sequence.
pub fn weyl_sum(x: &RealSequence, h: i64) -> Result<WeylPoint> {
    if h == 0 {
        return Err(Error::ZeroFrequency);
    }
    let hf = h as f64;
    let (sum, magnitude) = accumulate(
        x.values().iter().map(|&v| phase_mul_mod1(hf, v)),
        x.len(),
    );
    Ok(WeylPoint { h, n: x.len() as u64, sum, magnitude })
}

/// Weyl points for every `1 <= |h| <= h_max` and every N in the grid,
/// ordered by (h, N). The phase of closed forms runs through the
/// fixed-point path when `h * x_n` outgrows the f64 fraction.
pub fn weyl_profile(
    spec: &SequenceSpec,
    h_max: i64,
    n_grid: &[u64],
) -> Result<Vec<WeylPoint>> {
    if h_max < 1 {
        return Err(Error::Precondition(format!("h_max must be >= 1, got {h_max}")));
    }
    if n_grid.is_empty() || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition("n_grid must be increasing and nonempty".into()));
    }
    let eval = Evaluator::new(spec)?;
    let n_max = *n_grid.last().unwrap();
    let (lo, hi) = eval.domain();
    if lo > 1 || hi.is_some_and(|h| h < n_max as u128) {
        return Err(Error::IndexOutOfRange {
            from: 1,
            to: n_max as u128,
            lo,
            hi: hi.unwrap_or(u128::MAX),
        });
    }

    let positive: Vec<Vec<WeylPoint>> = (1..=h_max)
        .into_par_iter()
        .map(|h| profile_row(&eval, h, n_grid))
        .collect::<Result<_>>()?;

    let mut out = Vec::with_capacity(2 * positive.len() * n_grid.len());
    for h in (1..=h_max).rev() {
        for p in &positive[(h - 1) as usize] {
            out.push(WeylPoint { h: -p.h, n: p.n, sum: p.sum.conj(), magnitude: p.magnitude });
        }
    }
    for row in &positive {
        out.extend(row.iter().cloned());
    }
    Ok(out)
}

fn profile_row(eval: &Evaluator, h: i64, n_grid: &[u64]) -> Result<Vec<WeylPoint>> {
    let hf = h as f64;
    let n_max = *n_grid.last().unwrap();
    let mut re = KahanSum::new();
    let mut im = KahanSum::new();
    let mut out = Vec::with_capacity(n_grid.len());
    let mut next = 0usize;
    for n in 1..=n_max {
        let x = eval.x_f64(n as u128)?;
        let p = if (hf * x).abs() >= 4096.0 {
            match eval.value_fx(n as u128, 96)? {
                Some(fx) => {
                    let scaled = crate::fixedpoint::Fx::new(&fx.num * h, fx.bits);
                    scaled.frac_f64()
                }
                None => phase_mul_mod1(hf, x),
            }
        } else {
            phase_mul_mod1(hf, x)
        };
        let angle = std::f64::consts::TAU * p;
        re += angle.cos();
        im += angle.sin();
        if n == n_grid[next] {
            let mut sum = Complex64::new(re.value() / n as f64, im.value() / n as f64);
            let mut magnitude = sum.norm();
            if magnitude > 1.0 {
                sum /= magnitude;
                magnitude = 1.0;
            }
            out.push(WeylPoint { h, n, sum, magnitude });
            next += 1;
            if next == n_grid.len() {
                break;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seq::generate;

    #[test]
    fn resonant_half_integers() {
        // x_k = k/2, h = 2: every term is exp(2 pi i k) = 1
        let x = generate(&SequenceSpec::Linear { theta: 0.5 }, 1, 64).unwrap();
        let w = weyl_sum(&x, 2).unwrap();
        assert_eq!(w.sum.re, 1.0);
        assert_eq!(w.sum.im, 0.0);
        assert_eq!(w.magnitude, 1.0);
    }

    #[test]
    fn fifth_roots_cancel() {
        let x = generate(&SequenceSpec::Linear { theta: 0.2 }, 1, 5).unwrap();
        let w = weyl_sum(&x, 1).unwrap();
        assert!(w.magnitude < 1e-12, "magnitude {}", w.magnitude);
    }

    #[test]
    fn log_sequence_magnitude_near_analytic_limit() {
        let x = generate(&SequenceSpec::Log, 1, 100_000).unwrap();
        let w = weyl_sum(&x, 1).unwrap();
        let limit = 1.0 / (1.0 + 4.0 * std::f64::consts::PI * std::f64::consts::PI).sqrt();
        assert!(
            (w.magnitude - limit).abs() < 0.05,
            "got {}, analytic limit {limit}",
            w.magnitude
        );
    }

    #[test]
    fn zero_h_rejected() {
        let x = generate(&SequenceSpec::Log, 1, 10).unwrap();
        assert!(matches!(weyl_sum(&x, 0), Err(Error::ZeroFrequency)));
    }

    #[test]
    fn profile_rows_are_conjugate() {
        let grid = [100u64, 1000];
        let rows = weyl_profile(
            &SequenceSpec::Linear { theta: std::f64::consts::SQRT_2 },
            3,
            &grid,
        )
        .unwrap();
        assert_eq!(rows.len(), 12);
        for h in 1..=3i64 {
            for &n in &grid {
                let pos = rows.iter().find(|w| w.h == h && w.n == n).unwrap();
                let neg = rows.iter().find(|w| w.h == -h && w.n == n).unwrap();
                assert_eq!(pos.sum.re, neg.sum.re);
                assert_eq!(pos.sum.im, -neg.sum.im);
                assert_eq!(pos.magnitude, neg.magnitude);
            }
        }
        // ordering by (h, N)
        let hs: Vec<i64> = rows.iter().map(|w| w.h).collect();
        let mut sorted = hs.clone();
        sorted.sort();
        assert_eq!(hs, sorted);
    }

    #[test]
    fn irrational_rotation_decays() {
        let rows = weyl_profile(
            &SequenceSpec::Linear { theta: std::f64::consts::SQRT_2 },
            1,
            &[100_000],
        )
        .unwrap();
        let w = rows.iter().find(|w| w.h == 1).unwrap();
        assert!(w.magnitude < 0.01, "magnitude {}", w.magnitude);
        // geometric-sum oracle: |S_N| = |sin(pi N theta)| / (N |sin(pi theta)|)
        let theta = std::f64::consts::SQRT_2;
        let n = 100_000.0;
        let expected = (std::f64::consts::PI * phase_mul_mod1(n, theta)).sin().abs()
            / (n * (std::f64::consts::PI * frac(theta)).sin().abs());
        assert!((w.magnitude - expected).abs() < 1e-9);
    }

    #[test]
    fn resonance_when_q_divides_h() {
        // theta = 3/7, h = 7: magnitude 1
        let x = generate(&SequenceSpec::Linear { theta: 3.0 / 7.0 }, 1, 500).unwrap();
        let w = weyl_sum(&x, 7).unwrap();
        assert!((w.magnitude - 1.0).abs() < 1e-9);
    }

    #[test]
    fn integer_shift_invariance() {
        let x = generate(&SequenceSpec::Power { a: 1.5 }, 1, 2000).unwrap();
        let shifted: Vec<f64> = x.values().iter().map(|v| v + 7.0).collect();
        let y = RealSequence::from_values(shifted).unwrap();
        let a = weyl_sum(&x, 3).unwrap();
        let b = weyl_sum(&y, 3).unwrap();
        assert!((a.sum - b.sum).norm() < 1e-9);
    }

    #[test]
    fn fixed_point_phase_matches_split_product() {
        // once h*x outgrows 4096 the profile switches to mantissa phases;
        // at moderate magnitudes both routes must agree
        let spec = SequenceSpec::Power { a: 1.5 };
        let eval = Evaluator::new(&spec).unwrap();
        for n in [300u128, 1000, 4000] {
            let x = eval.x_f64(n).unwrap();
            let h = 7i64;
            assert!((h as f64 * x).abs() >= 4096.0);
            let fx = eval.value_fx(n, 96).unwrap().unwrap();
            let exact = crate::fixedpoint::Fx::new(&fx.num * h, fx.bits).frac_f64();
            let split = phase_mul_mod1(h as f64, x);
            // the split product inherits the f64 ulp of x itself
            let tol = h as f64 * x.abs() * f64::EPSILON * 4.0;
            let d = (exact - split).abs();
            let d = d.min(1.0 - d); // circular distance
            assert!(d <= tol, "n={n}: exact {exact} vs split {split}");
        }
    }

    #[test]
    fn magnitude_bounded_by_one() {
        let x = generate(&SequenceSpec::NLog, 1, 997).unwrap();
        for h in [-5i64, -1, 1, 2, 9] {
            let w = weyl_sum(&x, h).unwrap();
            assert!(w.magnitude <= 1.0);
            assert_eq!(w.magnitude, w.sum.norm().min(1.0));
        }
    }
}
