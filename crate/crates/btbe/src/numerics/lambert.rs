//! Principal branch of the Lambert W function: the solution `w >= -1` of
//! `w * exp(w) = z` for `z >= -1/e`.
//!
//! Halley iteration seeded by a piecewise initial guess (branch-point series
//! near `-1/e`, `ln z - ln ln z` for large `z`). [`lambert_w0_ln`] accepts the
//! argument in log space so callers can evaluate `W0(exp(g))` for `g` far
//! beyond the overflow threshold of `f64`.

use super::NumericsError;

const MAX_ITER: u32 = 64;

/// `W0(z)` for `z >= -1/e`.
pub fn lambert_w0(z: f64) -> Result<f64, NumericsError> {
    let neg_inv_e = -(-1.0f64).exp();
    if !(z >= neg_inv_e) {
        return Err(NumericsError::Domain {
            value: z,
            reason: "Lambert W0 requires z >= -1/e",
        });
    }
    if z == 0.0 {
        return Ok(0.0);
    }

    // Branch-point series in p = sqrt(2(1 + e z)); accurate enough on its
    // own very close to -1/e, where Halley's denominator degenerates.
    if z < -0.3576 {
        let p = (2.0 * (1.0 + std::f64::consts::E * z)).max(0.0).sqrt();
        let w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p.powi(3) - 43.0 / 540.0 * p.powi(4);
        if p < 1e-4 {
            return Ok(w);
        }
        return halley(z, w);
    }

    let w0 = if z < std::f64::consts::E {
        // ln(1+z) has the right behaviour at both ends of (-0.36, e].
        z.ln_1p()
    } else {
        let l1 = z.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };
    halley(z, w0)
}

/// `W0(exp(ln_z))`, valid for any finite `ln_z`, including arguments whose
/// exponential overflows `f64`.
pub fn lambert_w0_ln(ln_z: f64) -> Result<f64, NumericsError> {
    if !ln_z.is_finite() {
        return Err(NumericsError::Domain {
            value: ln_z,
            reason: "log-space Lambert W0 requires a finite exponent",
        });
    }
    if ln_z < 500.0 {
        return lambert_w0(ln_z.exp());
    }
    // Solve w + ln w = ln_z by Newton; for ln_z >= 500 the iteration is
    // strictly convex and converges from the asymptotic guess in a few steps.
    let mut w = ln_z - ln_z.ln();
    for _ in 0..MAX_ITER {
        let f = w + w.ln() - ln_z;
        let step = f * w / (w + 1.0);
        w -= step;
        if step.abs() <= 1e-15 * w.abs() {
            return Ok(w);
        }
    }
    Err(NumericsError::NoConvergence {
        iterations: MAX_ITER,
        last: w,
    })
}

fn halley(z: f64, w0: f64) -> Result<f64, NumericsError> {
    let mut w = w0;
    for _ in 0..MAX_ITER {
        let ew = w.exp();
        let f = w * ew - z;
        let d1 = ew * (w + 1.0);
        let denom = d1 - f * (w + 2.0) / (2.0 * (w + 1.0));
        if denom == 0.0 || !denom.is_finite() {
            return Err(NumericsError::NonFinite { at: w });
        }
        let step = f / denom;
        w -= step;
        // One Halley step from here would land within a few ulps; a tighter
        // cutoff can dither forever on the last bit.
        if step.abs() <= 4.0 * f64::EPSILON * (1.0 + w.abs()) {
            return Ok(w);
        }
    }
    Err(NumericsError::NoConvergence {
        iterations: MAX_ITER,
        last: w,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_across_domain() {
        for &z in &[-0.3, -0.1, 0.0, 0.5, 1.0, 2.0, 10.0, 1e3, 1e8, 1e300] {
            let w = lambert_w0(z).unwrap();
            assert!(
                (w * w.exp() - z).abs() <= 1e-12 * z.abs().max(1.0),
                "identity failed at z={z}: w={w}"
            );
        }
    }

    #[test]
    fn known_values() {
        assert_eq!(lambert_w0(0.0).unwrap(), 0.0);
        assert!((lambert_w0(std::f64::consts::E).unwrap() - 1.0).abs() < 1e-14);
        // Omega constant.
        assert!((lambert_w0(1.0).unwrap() - 0.567_143_290_409_783_8).abs() < 1e-13);
    }

    #[test]
    fn near_branch_point() {
        let z = -(-1.0f64).exp() + 1e-10;
        let w = lambert_w0(z).unwrap();
        assert!(w >= -1.0);
        assert!((w * w.exp() - z).abs() < 1e-12);
    }

    #[test]
    fn rejects_below_branch() {
        assert!(lambert_w0(-0.4).is_err());
        assert!(lambert_w0(f64::NAN).is_err());
    }

    #[test]
    fn log_space_agrees_with_direct() {
        for &z in &[0.5, 3.0, 40.0, 1e6] {
            let a = lambert_w0(z).unwrap();
            let b = lambert_w0_ln(z.ln()).unwrap();
            assert!((a - b).abs() <= 1e-12 * a.abs());
        }
    }

    #[test]
    fn log_space_huge_arguments() {
        // w + ln w must reproduce the exponent when exp would overflow.
        for &g in &[800.0, 5e3, 1e8] {
            let w = lambert_w0_ln(g).unwrap();
            assert!((w + w.ln() - g).abs() <= 1e-10 * g);
        }
    }
}
