//! Shared oracles for the integration suites: generic quadrature
//! evaluations of the order-statistic laws, empirical-distribution
//! distances, and binomial coverage checks.

use btbe::lifetimes::{LifetimeModel, OrderBranch};
use btbe::numerics::{integrate, integrate_semiinf, Tolerance};

/// Density of the first event restricted to one ordering branch
/// (unnormalized): `-S_1(t,t)`, `-S_2(t,t)`, or the diagonal density.
pub fn branch_first_density(model: &LifetimeModel, branch: OrderBranch) -> impl Fn(f64) -> f64 + '_ {
    move |t: f64| match branch {
        OrderBranch::X1LtX2 => -model.partial_survival_x1(t, t),
        OrderBranch::X1GtX2 => -model.partial_survival_x2(t, t),
        OrderBranch::Tie => model.tie_density(t),
    }
}

/// First-event conditional cdf by generic quadrature: the branch-restricted
/// density integrated to `x`, normalized by its total mass.
pub fn first_event_cdf_oracle(model: &LifetimeModel, x: f64, branch: OrderBranch) -> f64 {
    let tol = Tolerance::strict();
    let dens = branch_first_density(model, branch);
    let num = integrate(&dens, 0.0, x, &tol).expect("finite branch integral");
    let den = integrate_semiinf(&dens, 0.0, &tol).expect("branch mass");
    num / den
}

/// Second-event conditional cdf by generic quadrature: the joint density on
/// the branch, integrated in its second coordinate from the conditioning
/// point, normalized by the first-event branch density there.
pub fn second_event_cdf_oracle(
    model: &LifetimeModel,
    x2_query: f64,
    x_first: f64,
    branch: OrderBranch,
) -> f64 {
    let tol = Tolerance::strict();
    let joint = |u: f64| match branch {
        OrderBranch::X1LtX2 => model
            .density(x_first, u, OrderBranch::X1LtX2)
            .expect("interior point"),
        _ => model
            .density(u, x_first, OrderBranch::X1GtX2)
            .expect("interior point"),
    };
    let norm = branch_first_density(model, branch)(x_first);
    // The Kronrod nodes are interior, so the diagonal endpoint (where the
    // joint density switches branch) is never evaluated. The integrand is
    // pre-normalized so the quadrature tolerance acts relatively even at
    // far-tail conditioning points.
    integrate(|u| joint(u) / norm, x_first, x2_query, &tol)
        .expect("finite conditional integral")
}

/// Two-sided Kolmogorov-Smirnov distance between a sample and a cdf.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(|a, b| a.total_cmp(b));
    let n = samples.len() as f64;
    let mut worst = 0.0f64;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        let hi = (i as f64 + 1.0) / n - f;
        let lo = f - i as f64 / n;
        worst = worst.max(hi.abs()).max(lo.abs());
    }
    worst
}

/// Assert an empirical proportion within `k` binomial standard errors of
/// its target.
pub fn assert_binomial(hits: u64, trials: u64, p: f64, k: f64, what: &str) {
    let n = trials as f64;
    let se = (p * (1.0 - p) / n).sqrt();
    let observed = hits as f64 / n;
    assert!(
        (observed - p).abs() <= k * se,
        "{what}: observed {observed:.6}, expected {p:.6} +- {:.6}",
        k * se
    );
}

/// The workhorse model set: every family, independent and dependent,
/// including a heavy-shape Weibull.
pub fn model_zoo() -> Vec<LifetimeModel> {
    use btbe::lifetimes::{GbeParams, MobeParams, MobwParams};
    vec![
        LifetimeModel::Gbe(GbeParams::new(5.0, 5.0, 1.0).unwrap()),
        LifetimeModel::Gbe(GbeParams::new(5.0, 15.0, 0.5).unwrap()),
        LifetimeModel::Mobe(MobeParams::new(0.164, 0.164, 0.036).unwrap()),
        LifetimeModel::Mobe(MobeParams::new(0.2, 1.0 / 15.0, 0.0).unwrap()),
        LifetimeModel::Mobw(MobwParams::new(0.0257, 0.0257, 0.0057, 2.0).unwrap()),
        LifetimeModel::Mobw(MobwParams::new(0.574, 0.905, 1.12, 4.31).unwrap()),
    ]
}

/// Branches with positive probability under the model.
pub fn live_branches(model: &LifetimeModel) -> Vec<OrderBranch> {
    [OrderBranch::X1LtX2, OrderBranch::X1GtX2, OrderBranch::Tie]
        .into_iter()
        .filter(|b| model.branch_probability(*b) > 0.0)
        .filter(|b| !(matches!(model, LifetimeModel::Gbe(_)) && *b == OrderBranch::Tie))
        .collect()
}
