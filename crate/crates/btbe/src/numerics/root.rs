//! Bracketed scalar root finding: Brent's method with a bisection fallback,
//! so convergence is guaranteed whenever the bracket straddles a sign change.

use super::{NumericsError, Tolerance};

/// Root of `f` inside `[lo, hi]`, where `f(lo)` and `f(hi)` must not share a
/// strict sign. Stops when `|f(x)| <= abs_tol` or the bracket has shrunk to
/// `rel_tol * |x|`.
pub fn find_root<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    tol: &Tolerance,
) -> Result<f64, NumericsError> {
    let mut a = lo;
    let mut b = hi;
    let mut fa = f(a);
    let mut fb = f(b);
    if !fa.is_finite() {
        return Err(NumericsError::NonFinite { at: a });
    }
    if !fb.is_finite() {
        return Err(NumericsError::NonFinite { at: b });
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(NumericsError::InvalidBracket { lo, hi });
    }

    // Keep b as the best current estimate.
    if fa.abs() < fb.abs() {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;

    for _ in 0..tol.max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }

        let half = 0.5 * (c - b);
        let width_tol = tol.rel_tol * b.abs() + f64::EPSILON * 2.0;
        if fb.abs() <= tol.abs_tol || half.abs() <= width_tol {
            return Ok(b);
        }

        if e.abs() >= width_tol && fa.abs() > fb.abs() {
            // Inverse quadratic interpolation, secant when only two points.
            let s = fb / fa;
            let (mut p, mut q) = if a == c {
                (2.0 * half * s, 1.0 - s)
            } else {
                let q0 = fa / fc;
                let r = fb / fc;
                (
                    s * (2.0 * half * q0 * (q0 - r) - (b - a) * (r - 1.0)),
                    (q0 - 1.0) * (r - 1.0) * (s - 1.0),
                )
            };
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            if 2.0 * p < (3.0 * half * q - (width_tol * q).abs()).min((e * q * 0.5).abs()) {
                e = d;
                d = p / q;
            } else {
                d = half;
                e = d;
            }
        } else {
            d = half;
            e = d;
        }

        a = b;
        fa = fb;
        b += if d.abs() > width_tol {
            d
        } else {
            width_tol.copysign(half)
        };
        fb = f(b);
        if !fb.is_finite() {
            return Err(NumericsError::NonFinite { at: b });
        }
        if fb == 0.0 {
            return Ok(b);
        }
    }
    Err(NumericsError::NoConvergence {
        iterations: tol.max_iter,
        last: b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerance {
        Tolerance::strict()
    }

    #[test]
    fn linear() {
        let r = find_root(|x| x - 2.0, 0.0, 5.0, &tol()).unwrap();
        assert!((r - 2.0).abs() < 1e-12);
    }

    #[test]
    fn exponential() {
        let r = find_root(|x| x.exp() - 1.0, -1.0, 1.0, &tol()).unwrap();
        assert!(r.abs() < 1e-12);
    }

    #[test]
    fn matches_lambert_omega() {
        let r = find_root(|w| w * w.exp() - 1.0, 0.0, 1.0, &tol()).unwrap();
        let w = super::super::lambert_w0(1.0).unwrap();
        assert!((r - w).abs() < 1e-11);
    }

    #[test]
    fn endpoint_root() {
        assert_eq!(find_root(|x| x, 0.0, 1.0, &tol()).unwrap(), 0.0);
    }

    #[test]
    fn same_sign_bracket_rejected() {
        let r = find_root(|x| x * x + 1.0, -1.0, 1.0, &tol());
        assert!(matches!(r, Err(NumericsError::InvalidBracket { .. })));
    }

    #[test]
    fn steep_function() {
        let r = find_root(|x| (50.0 * (x - 0.3)).tanh(), 0.0, 1.0, &tol()).unwrap();
        assert!((r - 0.3).abs() < 1e-9);
    }
}
