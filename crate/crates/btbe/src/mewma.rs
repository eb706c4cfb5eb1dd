//! Vector-based MEWMA chart on bivariate event data, used as the
//! comparison baseline. Unlike the event-by-event chart, it can only update
//! once a vector is complete, so each vector contributes `max(x1, x2)`
//! elapsed time — the built-in detection delay the BTBE chart avoids.
//!
//! The statistic is `z_i = r (x_i - mu) + (1 - r) z_{i-1}` with `z_0 = 0`
//! and `E_i = z_i' Sigma_z^{-1} z_i`, `Sigma_z = r/(2-r) * Sigma_x` (the
//! asymptotic MEWMA covariance); the chart signals when `E_i > h`. With
//! `r = 1` it degenerates to a Hotelling T-squared chart.

use crate::lifetimes::{GbeParams, LifetimeModel, ModelError};
use crate::performance::{AtsEstimate, AtsMethod};
use crate::numerics::RngStream;
use rayon::prelude::*;
use thiserror::Error;

/// Cap on vectors simulated within one replication.
const VECTOR_CAP: u64 = 10_000_000;

/// Replications used for the covariance estimate when no closed form
/// exists (`delta < 1`).
pub const DEFAULT_MOMENT_REPS: u64 = 10_000_000;

/// Dedicated substream tag for moment estimation, so the moment draw is
/// pinned and never overlaps the calibration replications.
const MOMENT_STREAM_TAG: u64 = u64::MAX - 0xC0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MewmaError {
    #[error("smoothing parameter {0} must lie in (0, 1]")]
    InvalidSmoothing(f64),

    #[error("signal threshold {0} must be positive")]
    InvalidThreshold(f64),

    #[error("covariance matrix is not symmetric positive definite")]
    SingularCovariance,

    #[error("target ATS {0} must be positive")]
    InvalidTarget(f64),

    #[error("calibration did not converge: {0}")]
    CalibrationFailed(String),

    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Smoothing parameter and signal threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MewmaConfig {
    pub r: f64,
    pub h: f64,
}

impl MewmaConfig {
    pub fn new(r: f64, h: f64) -> Result<Self, MewmaError> {
        if !(r > 0.0 && r <= 1.0) {
            return Err(MewmaError::InvalidSmoothing(r));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(MewmaError::InvalidThreshold(h));
        }
        Ok(Self { r, h })
    }
}

/// Mean vector and covariance matrix of one event vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSpec {
    mu: [f64; 2],
    sigma: [[f64; 2]; 2],
}

impl MomentSpec {
    pub fn new(mu: [f64; 2], sigma: [[f64; 2]; 2]) -> Result<Self, MewmaError> {
        let symmetric = (sigma[0][1] - sigma[1][0]).abs()
            <= 1e-9 * sigma[0][1].abs().max(sigma[1][0].abs()).max(1e-300);
        let det = sigma[0][0] * sigma[1][1] - sigma[0][1] * sigma[1][0];
        if !symmetric || !(sigma[0][0] > 0.0) || !(det > 0.0) {
            return Err(MewmaError::SingularCovariance);
        }
        Ok(Self { mu, sigma })
    }

    pub fn mu(&self) -> [f64; 2] {
        self.mu
    }

    pub fn sigma(&self) -> [[f64; 2]; 2] {
        self.sigma
    }

    fn inverse_sigma(&self) -> [[f64; 2]; 2] {
        let det = self.sigma[0][0] * self.sigma[1][1] - self.sigma[0][1] * self.sigma[1][0];
        [
            [self.sigma[1][1] / det, -self.sigma[0][1] / det],
            [-self.sigma[1][0] / det, self.sigma[0][0] / det],
        ]
    }
}

/// Moment estimate with Monte Carlo standard errors (batch means); the
/// standard errors are zero on the closed-form path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub moments: MomentSpec,
    pub se_mu: [f64; 2],
    /// Standard errors of `(var(x1), var(x2), cov(x1, x2))`.
    pub se_sigma: [f64; 3],
    pub reps: u64,
}

/// Moments of a GBE vector: exact for `delta = 1` (independent
/// exponentials, diagonal `theta^2` covariance), Monte Carlo otherwise.
pub fn gbe_moments(
    params: &GbeParams,
    precision_reps: u64,
    rng: &RngStream,
) -> Result<MomentSpec, MewmaError> {
    Ok(gbe_moments_detailed(params, precision_reps, rng)?.moments)
}

/// As [`gbe_moments`], with sampling diagnostics.
pub fn gbe_moments_detailed(
    params: &GbeParams,
    precision_reps: u64,
    rng: &RngStream,
) -> Result<MomentEstimate, MewmaError> {
    let mu = [params.theta1(), params.theta2()];
    if params.delta() == 1.0 {
        let sigma = [
            [params.theta1() * params.theta1(), 0.0],
            [0.0, params.theta2() * params.theta2()],
        ];
        return Ok(MomentEstimate {
            moments: MomentSpec::new(mu, sigma)?,
            se_mu: [0.0; 2],
            se_sigma: [0.0; 3],
            reps: 0,
        });
    }

    // Batch means: exact means are known (theta1, theta2), the covariance
    // entries are averaged over batches for a standard-error estimate.
    let model = LifetimeModel::Gbe(*params);
    const BATCHES: u64 = 100;
    let per_batch = (precision_reps / BATCHES).max(1);
    let batch_stats: Vec<[f64; 5]> = (0..BATCHES)
        .into_par_iter()
        .map(|b| {
            let mut stream = rng.replicate(MOMENT_STREAM_TAG ^ b);
            let mut acc = [0.0f64; 5];
            for _ in 0..per_batch {
                let v = model.sample_one(&mut stream);
                acc[0] += v.x1;
                acc[1] += v.x2;
                acc[2] += v.x1 * v.x1;
                acc[3] += v.x2 * v.x2;
                acc[4] += v.x1 * v.x2;
            }
            acc
        })
        .collect();

    let n = (per_batch * BATCHES) as f64;
    let mut total = [0.0f64; 5];
    for acc in &batch_stats {
        for (t, a) in total.iter_mut().zip(acc.iter()) {
            *t += a;
        }
    }
    let mean1 = total[0] / n;
    let mean2 = total[1] / n;
    let var1 = total[2] / n - mean1 * mean1;
    let var2 = total[3] / n - mean2 * mean2;
    let cov = total[4] / n - mean1 * mean2;

    // Spread of per-batch estimates around the pooled values.
    let bn = per_batch as f64;
    let mut sq = [0.0f64; 5];
    for acc in &batch_stats {
        let b1 = acc[0] / bn;
        let b2 = acc[1] / bn;
        let bv = [
            b1,
            b2,
            acc[2] / bn - b1 * b1,
            acc[3] / bn - b2 * b2,
            acc[4] / bn - b1 * b2,
        ];
        for (s, (b, p)) in sq
            .iter_mut()
            .zip(bv.iter().zip([mean1, mean2, var1, var2, cov].iter()))
        {
            *s += (b - p) * (b - p);
        }
    }
    let k = BATCHES as f64;
    let se = |s: f64| (s / (k * (k - 1.0))).sqrt();

    let sigma = [[var1, cov], [cov, var2]];
    Ok(MomentEstimate {
        moments: MomentSpec::new(mu, sigma)?,
        se_mu: [se(sq[0]), se(sq[1])],
        se_sigma: [se(sq[2]), se(sq[3]), se(sq[4])],
        reps: per_batch * BATCHES,
    })
}

/// One MEWMA update: returns the new smoothed vector and the charting
/// statistic `E = z' Sigma_z^{-1} z`.
pub fn mewma_step(
    z: [f64; 2],
    x: (f64, f64),
    config: &MewmaConfig,
    moments: &MomentSpec,
) -> ([f64; 2], f64) {
    let r = config.r;
    let mu = moments.mu;
    let z_new = [
        r * (x.0 - mu[0]) + (1.0 - r) * z[0],
        r * (x.1 - mu[1]) + (1.0 - r) * z[1],
    ];
    let inv = moments.inverse_sigma();
    let scale = (2.0 - r) / r;
    let qf = z_new[0] * (inv[0][0] * z_new[0] + inv[0][1] * z_new[1])
        + z_new[1] * (inv[1][0] * z_new[0] + inv[1][1] * z_new[1]);
    (z_new, scale * qf)
}

/// Elapsed time until the statistic exceeds `h`; each vector costs
/// `max(x1, x2)` time because the chart waits for the pair to complete.
fn time_to_signal(
    model: &LifetimeModel,
    config: &MewmaConfig,
    moments: &MomentSpec,
    stream: &mut RngStream,
) -> (f64, bool) {
    let mut z = [0.0f64; 2];
    let mut elapsed = 0.0;
    for _ in 0..VECTOR_CAP {
        let v = model.sample_one(stream);
        elapsed += v.second();
        let (z_new, stat) = mewma_step(z, (v.x1, v.x2), config, moments);
        if stat > config.h {
            return (elapsed, false);
        }
        z = z_new;
    }
    (elapsed, true)
}

fn simulated_ats(
    model: &LifetimeModel,
    config: &MewmaConfig,
    moments: &MomentSpec,
    reps: u64,
    rng: &RngStream,
) -> (f64, f64, u64) {
    let times: Vec<(f64, bool)> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut stream = rng.replicate(rep);
            time_to_signal(model, config, moments, &mut stream)
        })
        .collect();
    let n = times.len() as f64;
    let mean = times.iter().map(|t| t.0).sum::<f64>() / n;
    let var = times.iter().map(|t| (t.0 - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let censored = times.iter().filter(|t| t.1).count() as u64;
    (mean, (var / n).sqrt(), censored)
}

/// Calibrate the signal threshold so the simulated in-control ATS lands
/// within one percent of `ats0`. Bisection over `h` with common random
/// numbers: every candidate threshold replays the same replication streams,
/// making the simulated ATS a nondecreasing step function of `h`.
pub fn calibrate_h(
    model: &GbeParams,
    r: f64,
    ats0: f64,
    reps: u64,
    rng: &RngStream,
) -> Result<f64, MewmaError> {
    if !(ats0 > 0.0) {
        return Err(MewmaError::InvalidTarget(ats0));
    }
    let config_probe = MewmaConfig::new(r, 1.0)?; // validates r
    let moments = gbe_moments(model, DEFAULT_MOMENT_REPS, rng)?;
    let ic = LifetimeModel::Gbe(*model);
    let ats_at = |h: f64| -> f64 {
        let config = MewmaConfig { h, ..config_probe };
        simulated_ats(&ic, &config, &moments, reps, rng).0
    };

    let band = 0.01 * ats0;
    let mut hi = 1.0f64;
    let mut ats_hi = ats_at(hi);
    let mut doublings = 0;
    while ats_hi < ats0 - band {
        hi *= 2.0;
        ats_hi = ats_at(hi);
        doublings += 1;
        if doublings > 60 {
            return Err(MewmaError::CalibrationFailed(format!(
                "no threshold below {hi} reaches ATS {ats0}"
            )));
        }
    }
    if (ats_hi - ats0).abs() <= band {
        return Ok(hi);
    }
    let mut lo = 0.0f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let ats_mid = ats_at(mid);
        if (ats_mid - ats0).abs() <= band {
            return Ok(mid);
        }
        if ats_mid < ats0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= 1e-12 * hi.max(1.0) {
            break;
        }
    }
    Err(MewmaError::CalibrationFailed(format!(
        "one-percent band around {ats0} not reached; interval [{lo}, {hi}]"
    )))
}

/// Monte Carlo ATS of a calibrated MEWMA chart under an out-of-control GBE
/// model, with moments and limits tied to the in-control model.
pub fn mewma_ats(
    ic: &GbeParams,
    oc: &GbeParams,
    config: &MewmaConfig,
    reps: u64,
    rng: &RngStream,
) -> Result<AtsEstimate, MewmaError> {
    let moments = gbe_moments(ic, DEFAULT_MOMENT_REPS, rng)?;
    let oc_model = LifetimeModel::Gbe(*oc);
    let (mean, se, censored) = simulated_ats(&oc_model, config, &moments, reps, rng);
    Ok(AtsEstimate {
        value: mean,
        method: AtsMethod::MonteCarlo,
        stderr: Some(se),
        reps: Some(reps),
        censored_runs: Some(censored),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gbe(t1: f64, t2: f64, d: f64) -> GbeParams {
        GbeParams::new(t1, t2, d).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(MewmaConfig::new(0.0, 1.0).is_err());
        assert!(MewmaConfig::new(1.1, 1.0).is_err());
        assert!(MewmaConfig::new(0.5, 0.0).is_err());
        assert!(MewmaConfig::new(1.0, 9.51).is_ok());
    }

    #[test]
    fn moment_spec_rejects_non_pd() {
        assert!(MomentSpec::new([0.0, 0.0], [[1.0, 2.0], [2.0, 1.0]]).is_err());
        assert!(MomentSpec::new([0.0, 0.0], [[1.0, 0.5], [0.4, 1.0]]).is_err());
        assert!(MomentSpec::new([0.0, 0.0], [[1.0, 0.5], [0.5, 1.0]]).is_ok());
    }

    #[test]
    fn step_hand_example() {
        // r = 0.1, mu = (5,5), Sigma = diag(25,25), x = (10,5):
        // z = (0.5, 0), Sigma_z = (0.1/1.9) Sigma, E = 0.25/(25*0.1/1.9).
        let moments = MomentSpec::new([5.0, 5.0], [[25.0, 0.0], [0.0, 25.0]]).unwrap();
        let config = MewmaConfig::new(0.1, 1.0).unwrap();
        let (z, stat) = mewma_step([0.0, 0.0], (10.0, 5.0), &config, &moments);
        assert_eq!(z, [0.5, 0.0]);
        let expect = 0.25 / (25.0 * 0.1 / 1.9);
        assert!((stat - expect).abs() < 1e-14);
        assert!((stat - 0.19).abs() < 1e-12);
    }

    #[test]
    fn stat_is_zero_at_the_mean() {
        let moments = MomentSpec::new([5.0, 5.0], [[25.0, 0.0], [0.0, 25.0]]).unwrap();
        let config = MewmaConfig::new(0.3, 1.0).unwrap();
        let (z, stat) = mewma_step([0.0, 0.0], (5.0, 5.0), &config, &moments);
        assert_eq!(z, [0.0, 0.0]);
        assert_eq!(stat, 0.0);
    }

    #[test]
    fn r_one_is_hotelling() {
        let moments = MomentSpec::new([5.0, 15.0], [[25.0, 3.0], [3.0, 225.0]]).unwrap();
        let config = MewmaConfig::new(1.0, 1.0).unwrap();
        let mut rng = RngStream::new(5, 1);
        let model = LifetimeModel::Gbe(gbe(5.0, 15.0, 0.7));
        let mut z = [0.0f64; 2];
        for _ in 0..100 {
            let v = model.sample_one(&mut rng);
            let (z_new, stat) = mewma_step(z, (v.x1, v.x2), &config, &moments);
            // Hotelling T^2 coded directly.
            let d = [v.x1 - 5.0, v.x2 - 15.0];
            let det = 25.0 * 225.0 - 9.0;
            let t2 = (d[0] * (225.0 * d[0] - 3.0 * d[1]) + d[1] * (-3.0 * d[0] + 25.0 * d[1]))
                / det;
            assert!((stat - t2).abs() <= 1e-12 * t2.abs().max(1.0));
            z = z_new;
        }
    }

    #[test]
    fn quadratic_form_is_scale_invariant() {
        let moments = MomentSpec::new([5.0, 15.0], [[25.0, 3.0], [3.0, 225.0]]).unwrap();
        let c = 37.5;
        let scaled = MomentSpec::new(
            [5.0 * c, 15.0 * c],
            [[25.0 * c * c, 3.0 * c * c], [3.0 * c * c, 225.0 * c * c]],
        )
        .unwrap();
        let config = MewmaConfig::new(0.2, 1.0).unwrap();
        let (_, a) = mewma_step([1.0, -2.0], (9.0, 4.0), &config, &moments);
        let (_, b) = mewma_step([c * 1.0, c * -2.0], (9.0 * c, 4.0 * c), &config, &scaled);
        assert!((a - b).abs() <= 1e-12 * a.abs());
    }

    #[test]
    fn delta_one_moments_are_exact() {
        let est = gbe_moments_detailed(&gbe(5.0, 15.0, 1.0), 1000, &RngStream::new(1, 1)).unwrap();
        assert_eq!(est.moments.mu(), [5.0, 15.0]);
        assert_eq!(est.moments.sigma(), [[25.0, 0.0], [0.0, 225.0]]);
        assert_eq!(est.reps, 0);
    }

    #[test]
    fn dependent_moments_have_positive_cross_covariance() {
        let est =
            gbe_moments_detailed(&gbe(5.0, 5.0, 0.5), 200_000, &RngStream::new(11, 0)).unwrap();
        let sigma = est.moments.sigma();
        assert!(sigma[0][1] > 0.0, "cov = {}", sigma[0][1]);
        assert!(sigma[0][1] > 5.0 * est.se_sigma[2]);
        // Means are pinned to the exact values.
        assert_eq!(est.moments.mu(), [5.0, 5.0]);
        assert!((sigma[0][0] - 25.0).abs() < 6.0 * est.se_sigma[0].max(0.2));
    }

    #[test]
    fn moments_are_reproducible() {
        let a = gbe_moments(&gbe(5.0, 5.0, 0.5), 100_000, &RngStream::new(3, 3)).unwrap();
        let b = gbe_moments(&gbe(5.0, 5.0, 0.5), 100_000, &RngStream::new(3, 3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn calibration_smoke_test() {
        // Small-rep calibration sanity: the band is reached and the
        // threshold is positive and finite.
        let h = calibrate_h(&gbe(5.0, 5.0, 1.0), 1.0, 50.0, 4000, &RngStream::new(21, 0)).unwrap();
        assert!(h > 0.0 && h.is_finite());
        // ATS at the calibrated threshold sits inside the one-percent band.
        let moments = gbe_moments(&gbe(5.0, 5.0, 1.0), 1000, &RngStream::new(21, 0)).unwrap();
        let config = MewmaConfig::new(1.0, h).unwrap();
        let (ats, _, _) = simulated_ats(
            &LifetimeModel::Gbe(gbe(5.0, 5.0, 1.0)),
            &config,
            &moments,
            4000,
            &RngStream::new(21, 0),
        );
        assert!((ats - 50.0).abs() <= 0.5);
    }

    #[test]
    fn calibrated_threshold_grows_with_target() {
        let rng = RngStream::new(33, 0);
        let mut last = 0.0;
        for ats0 in [20.0, 60.0, 180.0] {
            let h = calibrate_h(&gbe(5.0, 5.0, 1.0), 1.0, ats0, 3000, &rng).unwrap();
            assert!(h > last, "h {h} at ats0 {ats0} not above {last}");
            last = h;
        }
    }

    #[test]
    fn ats_decreases_with_shift_under_crn() {
        let rng = RngStream::new(8, 0);
        let ic = gbe(5.0, 5.0, 1.0);
        let config = MewmaConfig::new(1.0, 9.51).unwrap();
        let mut last = f64::INFINITY;
        for shift in [5.0, 7.5, 10.0, 20.0] {
            let oc = gbe(shift, 5.0, 1.0);
            let ats = mewma_ats(&ic, &oc, &config, 3000, &rng).unwrap();
            assert!(ats.value < last);
            last = ats.value;
        }
    }
}
