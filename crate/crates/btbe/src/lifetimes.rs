//! Bivariate lifetime models and their order-statistic laws.
//!
//! Three families are supported, each with survival function
//! `S(x1, x2) = P[X1 > x1, X2 > x2]`:
//!
//! - **GBE** (Gumbel bivariate exponential):
//!   `S = exp(-C(x1,x2)^delta)` with
//!   `C(x1,x2) = (x1/theta1)^(1/delta) + (x2/theta2)^(1/delta)`;
//!   exponential margins, no simultaneous events, `delta = 1` is independence.
//! - **MOBE** (Marshall-Olkin bivariate exponential):
//!   `S = exp(-l1*x1 - l2*x2 - l12*max(x1,x2))`; the common-shock rate `l12`
//!   puts positive mass on the diagonal `x1 = x2`.
//! - **MOBW** (Marshall-Olkin bivariate Weibull): MOBE with every time raised
//!   to a common shape `eta`; `eta = 1` reduces to MOBE exactly.
//!
//! Within one event pair the *first* observed event is `min(x1, x2)` and the
//! *second* is `max(x1, x2)`. Conditioned on which subprocess came first, the
//! first event follows a simple univariate law (the same one for every
//! branch), and the second event given the realized first has survival
//! `S_1(x1, x2) / S_1(x1, x1)` (respectively `S_2`), where `S_1`, `S_2` are
//! the partial derivatives of `S`. Those conditional laws are what the
//! dynamic control limits invert.

use crate::numerics::{gamma, NumericsError, RngStream};
use crate::numerics::{lambert_w0_ln};
use thiserror::Error;

/// Errors from model construction and evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid {family} parameter: {reason}")]
    InvalidParameter { family: &'static str, reason: String },

    #[error("event time {value} is negative or non-finite")]
    InvalidTime { value: f64 },

    #[error("quantile level {value} must lie strictly inside (0, 1)")]
    InvalidQuantile { value: f64 },

    #[error("the GBE model puts no mass on simultaneous events")]
    GbeTieBranch,

    #[error("branch {branch:?} has probability zero under this model")]
    DegenerateBranch { branch: OrderBranch },

    #[error("branch {branch:?} does not match the ordering of ({x1}, {x2})")]
    BranchMismatch { branch: OrderBranch, x1: f64, x2: f64 },

    #[error("second-event query {x2_query} precedes the first event {x_first}")]
    SecondBeforeFirst { x2_query: f64, x_first: f64 },

    #[error("a tie vector has no second event")]
    TieHasNoSecondEvent,

    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

fn check_time(x: f64) -> Result<f64, ModelError> {
    if x.is_finite() && x >= 0.0 {
        Ok(x)
    } else {
        Err(ModelError::InvalidTime { value: x })
    }
}

/// Gumbel bivariate exponential parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbeParams {
    theta1: f64,
    theta2: f64,
    delta: f64,
}

impl GbeParams {
    pub fn new(theta1: f64, theta2: f64, delta: f64) -> Result<Self, ModelError> {
        let bad = |reason: &str| ModelError::InvalidParameter {
            family: "GBE",
            reason: reason.to_string(),
        };
        if !(theta1 > 0.0 && theta1.is_finite()) {
            return Err(bad("theta1 must be positive and finite"));
        }
        if !(theta2 > 0.0 && theta2.is_finite()) {
            return Err(bad("theta2 must be positive and finite"));
        }
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(bad("delta must lie in (0, 1]"));
        }
        Ok(Self {
            theta1,
            theta2,
            delta,
        })
    }

    pub fn theta1(&self) -> f64 {
        self.theta1
    }

    pub fn theta2(&self) -> f64 {
        self.theta2
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `C(1,1) = theta1^(-1/delta) + theta2^(-1/delta)`.
    pub fn c11(&self) -> f64 {
        let inv = 1.0 / self.delta;
        self.theta1.powf(-inv) + self.theta2.powf(-inv)
    }

    /// `C(x1, x2)`.
    fn c(&self, x1: f64, x2: f64) -> f64 {
        let inv = 1.0 / self.delta;
        (x1 / self.theta1).powf(inv) + (x2 / self.theta2).powf(inv)
    }
}

/// Marshall-Olkin bivariate exponential parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobeParams {
    lambda1: f64,
    lambda2: f64,
    lambda12: f64,
}

impl MobeParams {
    pub fn new(lambda1: f64, lambda2: f64, lambda12: f64) -> Result<Self, ModelError> {
        let bad = |reason: &str| ModelError::InvalidParameter {
            family: "MOBE",
            reason: reason.to_string(),
        };
        for (name, v) in [
            ("lambda1", lambda1),
            ("lambda2", lambda2),
            ("lambda12", lambda12),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(bad(&format!("{name} must be nonnegative and finite")));
            }
        }
        if lambda1 + lambda12 <= 0.0 {
            return Err(bad("lambda1 + lambda12 must be positive"));
        }
        if lambda2 + lambda12 <= 0.0 {
            return Err(bad("lambda2 + lambda12 must be positive"));
        }
        Ok(Self {
            lambda1,
            lambda2,
            lambda12,
        })
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    pub fn lambda2(&self) -> f64 {
        self.lambda2
    }

    pub fn lambda12(&self) -> f64 {
        self.lambda12
    }

    /// Total rate `Lambda = lambda1 + lambda2 + lambda12`.
    pub fn total_rate(&self) -> f64 {
        self.lambda1 + self.lambda2 + self.lambda12
    }
}

/// Marshall-Olkin bivariate Weibull parameters (common shape `eta`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobwParams {
    lambda1: f64,
    lambda2: f64,
    lambda12: f64,
    eta: f64,
}

impl MobwParams {
    pub fn new(lambda1: f64, lambda2: f64, lambda12: f64, eta: f64) -> Result<Self, ModelError> {
        let rates = MobeParams::new(lambda1, lambda2, lambda12).map_err(|e| match e {
            ModelError::InvalidParameter { reason, .. } => ModelError::InvalidParameter {
                family: "MOBW",
                reason,
            },
            other => other,
        })?;
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(ModelError::InvalidParameter {
                family: "MOBW",
                reason: "eta must be positive and finite".to_string(),
            });
        }
        Ok(Self {
            lambda1: rates.lambda1,
            lambda2: rates.lambda2,
            lambda12: rates.lambda12,
            eta,
        })
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    pub fn lambda2(&self) -> f64 {
        self.lambda2
    }

    pub fn lambda12(&self) -> f64 {
        self.lambda12
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn total_rate(&self) -> f64 {
        self.lambda1 + self.lambda2 + self.lambda12
    }
}

/// One of the three supported bivariate lifetime models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LifetimeModel {
    Gbe(GbeParams),
    Mobe(MobeParams),
    Mobw(MobwParams),
}

impl LifetimeModel {
    pub fn family_name(&self) -> &'static str {
        match self {
            LifetimeModel::Gbe(_) => "gbe",
            LifetimeModel::Mobe(_) => "mobe",
            LifetimeModel::Mobw(_) => "mobw",
        }
    }

    pub fn same_family(&self, other: &LifetimeModel) -> bool {
        std::mem::discriminant(self) == std::mem::discriminant(other)
    }
}

/// One subject's pair of nonnegative event times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventVector {
    pub x1: f64,
    pub x2: f64,
}

impl EventVector {
    pub fn new(x1: f64, x2: f64) -> Result<Self, ModelError> {
        check_time(x1)?;
        check_time(x2)?;
        Ok(Self { x1, x2 })
    }

    /// First observed event time, `min(x1, x2)`.
    pub fn first(&self) -> f64 {
        self.x1.min(self.x2)
    }

    /// Second observed event time, `max(x1, x2)`.
    pub fn second(&self) -> f64 {
        self.x1.max(self.x2)
    }

    /// Which ordering case this vector realizes. Ties are exact floating
    /// equality: the samplers produce them structurally through a shared
    /// common-shock draw, so no epsilon is involved.
    pub fn branch(&self) -> OrderBranch {
        if self.x1 < self.x2 {
            OrderBranch::X1LtX2
        } else if self.x1 > self.x2 {
            OrderBranch::X1GtX2
        } else {
            OrderBranch::Tie
        }
    }
}

/// The ordering case of a vector: which subprocess produced the first event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OrderBranch {
    X1LtX2,
    X1GtX2,
    Tie,
}

/// Position of an event within its vector's observation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventRank {
    First,
    Second,
}

impl EventRank {
    /// 1 for first events, 2 for second events.
    pub fn index(&self) -> u8 {
        match self {
            EventRank::First => 1,
            EventRank::Second => 2,
        }
    }
}

/// Which subprocess an observed event came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventSource {
    Subprocess1,
    Subprocess2,
    /// Both subprocesses fired together (common shock).
    Tie,
}

impl EventSource {
    pub fn label(&self) -> &'static str {
        match self {
            EventSource::Subprocess1 => "sub1",
            EventSource::Subprocess2 => "sub2",
            EventSource::Tie => "tie",
        }
    }
}

/// One entry of the superimposed event stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderedEvent {
    pub value: f64,
    pub rank: EventRank,
    pub source: EventSource,
    pub vector_index: usize,
}

/// Interleave event vectors into the stream in which the events are actually
/// observed: per vector the first event then (unless the vector is a tie)
/// the second, vectors in input order.
pub fn superimpose(vectors: &[EventVector]) -> Vec<OrderedEvent> {
    let mut out = Vec::with_capacity(2 * vectors.len());
    for (i, v) in vectors.iter().enumerate() {
        match v.branch() {
            OrderBranch::Tie => out.push(OrderedEvent {
                value: v.x1,
                rank: EventRank::First,
                source: EventSource::Tie,
                vector_index: i,
            }),
            OrderBranch::X1LtX2 => {
                out.push(OrderedEvent {
                    value: v.x1,
                    rank: EventRank::First,
                    source: EventSource::Subprocess1,
                    vector_index: i,
                });
                out.push(OrderedEvent {
                    value: v.x2,
                    rank: EventRank::Second,
                    source: EventSource::Subprocess2,
                    vector_index: i,
                });
            }
            OrderBranch::X1GtX2 => {
                out.push(OrderedEvent {
                    value: v.x2,
                    rank: EventRank::First,
                    source: EventSource::Subprocess2,
                    vector_index: i,
                });
                out.push(OrderedEvent {
                    value: v.x1,
                    rank: EventRank::Second,
                    source: EventSource::Subprocess1,
                    vector_index: i,
                });
            }
        }
    }
    out
}

/// Expected TBE of the Weibull shock model with the given rates and shape,
/// evaluated formally (no feasibility requirements on the individual
/// rates; only the pairwise sums must be positive).
pub(crate) fn weibull_expected_tbe(
    lambda1: f64,
    lambda2: f64,
    lambda12: f64,
    eta: f64,
) -> f64 {
    let total = lambda1 + lambda2 + lambda12;
    let inv_eta = 1.0 / eta;
    let g = gamma(1.0 + inv_eta).expect("eta > 0");
    let tot_pow = total.powf(1.0 + inv_eta);
    0.5 * g
        * ((lambda2 + lambda12).powf(-inv_eta) - (lambda2 + lambda12) / tot_pow
            + (lambda1 + lambda12).powf(-inv_eta)
            - (lambda1 + lambda12) / tot_pow
            + 2.0 * lambda12 / tot_pow)
}

/// Expected TBE of the exponential shock model with the given rates.
pub(crate) fn exponential_expected_tbe(lambda1: f64, lambda2: f64, lambda12: f64) -> f64 {
    let total = lambda1 + lambda2 + lambda12;
    let t2 = total * total;
    0.5 * (lambda2 / t2
        + lambda2 / (total * (lambda1 + lambda12))
        + lambda1 / t2
        + lambda1 / (total * (lambda2 + lambda12)))
        + lambda12 / t2
}

impl LifetimeModel {
    /// Joint survival function `S(x1, x2) = P[X1 > x1, X2 > x2]`.
    pub fn survival(&self, x1: f64, x2: f64) -> Result<f64, ModelError> {
        check_time(x1)?;
        check_time(x2)?;
        Ok(match self {
            LifetimeModel::Gbe(p) => (-p.c(x1, x2).powf(p.delta)).exp(),
            LifetimeModel::Mobe(p) => {
                (-p.lambda1 * x1 - p.lambda2 * x2 - p.lambda12 * x1.max(x2)).exp()
            }
            LifetimeModel::Mobw(p) => (-p.lambda1 * x1.powf(p.eta)
                - p.lambda2 * x2.powf(p.eta)
                - p.lambda12 * x1.max(x2).powf(p.eta))
            .exp(),
        })
    }

    /// Partial derivative `S_1(x1, x2)` of the survival function in its
    /// first argument. For the shock models the derivative jumps across the
    /// diagonal; on `x1 = x2` this returns the limit from the `x1 < x2`
    /// side, which is the version the order-statistic laws integrate.
    pub fn partial_survival_x1(&self, x1: f64, x2: f64) -> f64 {
        match self {
            LifetimeModel::Gbe(p) => {
                let inv = 1.0 / p.delta;
                let c = p.c(x1, x2);
                -(1.0 / p.theta1)
                    * (x1 / p.theta1).powf(inv - 1.0)
                    * c.powf(p.delta - 1.0)
                    * (-c.powf(p.delta)).exp()
            }
            LifetimeModel::Mobe(p) => {
                if x1 <= x2 {
                    -p.lambda1 * (-p.lambda1 * x1 - (p.lambda2 + p.lambda12) * x2).exp()
                } else {
                    -(p.lambda1 + p.lambda12)
                        * (-(p.lambda1 + p.lambda12) * x1 - p.lambda2 * x2).exp()
                }
            }
            LifetimeModel::Mobw(p) => {
                let e = p.eta;
                if x1 <= x2 {
                    -e * p.lambda1
                        * x1.powf(e - 1.0)
                        * (-p.lambda1 * x1.powf(e) - (p.lambda2 + p.lambda12) * x2.powf(e)).exp()
                } else {
                    -e * (p.lambda1 + p.lambda12)
                        * x1.powf(e - 1.0)
                        * (-(p.lambda1 + p.lambda12) * x1.powf(e) - p.lambda2 * x2.powf(e)).exp()
                }
            }
        }
    }

    /// Partial derivative `S_2(x1, x2)`; on the diagonal this is the limit
    /// from the `x1 > x2` side.
    pub fn partial_survival_x2(&self, x1: f64, x2: f64) -> f64 {
        match self {
            LifetimeModel::Gbe(p) => {
                let inv = 1.0 / p.delta;
                let c = p.c(x1, x2);
                -(1.0 / p.theta2)
                    * (x2 / p.theta2).powf(inv - 1.0)
                    * c.powf(p.delta - 1.0)
                    * (-c.powf(p.delta)).exp()
            }
            LifetimeModel::Mobe(p) => {
                if x2 <= x1 {
                    -p.lambda2 * (-(p.lambda1 + p.lambda12) * x1 - p.lambda2 * x2).exp()
                } else {
                    -(p.lambda2 + p.lambda12)
                        * (-p.lambda1 * x1 - (p.lambda2 + p.lambda12) * x2).exp()
                }
            }
            LifetimeModel::Mobw(p) => {
                let e = p.eta;
                if x2 <= x1 {
                    -e * p.lambda2
                        * x2.powf(e - 1.0)
                        * (-(p.lambda1 + p.lambda12) * x1.powf(e) - p.lambda2 * x2.powf(e)).exp()
                } else {
                    -e * (p.lambda2 + p.lambda12)
                        * x2.powf(e - 1.0)
                        * (-p.lambda1 * x1.powf(e) - (p.lambda2 + p.lambda12) * x2.powf(e)).exp()
                }
            }
        }
    }

    /// Density of the singular diagonal component at `x1 = x2 = t`
    /// (zero for GBE, which has an absolutely continuous law).
    pub fn tie_density(&self, t: f64) -> f64 {
        match self {
            LifetimeModel::Gbe(_) => 0.0,
            LifetimeModel::Mobe(p) => p.lambda12 * (-p.total_rate() * t).exp(),
            LifetimeModel::Mobw(p) => {
                p.eta
                    * p.lambda12
                    * t.powf(p.eta - 1.0)
                    * (-p.total_rate() * t.powf(p.eta)).exp()
            }
        }
    }

    /// Joint density on the branch containing `(x1, x2)`. The `branch`
    /// argument must match the actual ordering; the tie branch is the
    /// one-dimensional density along the diagonal and exists only for the
    /// shock models.
    pub fn density(&self, x1: f64, x2: f64, branch: OrderBranch) -> Result<f64, ModelError> {
        check_time(x1)?;
        check_time(x2)?;
        let actual = EventVector { x1, x2 }.branch();
        if actual != branch {
            return Err(ModelError::BranchMismatch { branch, x1, x2 });
        }
        match (self, branch) {
            (LifetimeModel::Gbe(_), OrderBranch::Tie) => Err(ModelError::GbeTieBranch),
            (LifetimeModel::Gbe(p), _) => {
                if p.delta == 1.0 {
                    return Ok((-x1 / p.theta1 - x2 / p.theta2).exp() / (p.theta1 * p.theta2));
                }
                let inv = 1.0 / p.delta;
                let c = p.c(x1, x2);
                if c == 0.0 {
                    return Ok(0.0);
                }
                let t = c.powf(p.delta);
                Ok((x1 / p.theta1).powf(inv - 1.0)
                    * (x2 / p.theta2).powf(inv - 1.0)
                    * c.powf(p.delta - 2.0)
                    * (t + inv - 1.0)
                    * (-t).exp()
                    / (p.theta1 * p.theta2))
            }
            (_, OrderBranch::Tie) => Ok(self.tie_density(x1)),
            (LifetimeModel::Mobe(p), OrderBranch::X1LtX2) => Ok(p.lambda1
                * (p.lambda2 + p.lambda12)
                * (-p.lambda1 * x1 - (p.lambda2 + p.lambda12) * x2).exp()),
            (LifetimeModel::Mobe(p), OrderBranch::X1GtX2) => Ok(p.lambda2
                * (p.lambda1 + p.lambda12)
                * (-(p.lambda1 + p.lambda12) * x1 - p.lambda2 * x2).exp()),
            (LifetimeModel::Mobw(p), OrderBranch::X1LtX2) => {
                let e = p.eta;
                Ok(e * e
                    * p.lambda1
                    * (p.lambda2 + p.lambda12)
                    * x1.powf(e - 1.0)
                    * x2.powf(e - 1.0)
                    * (-p.lambda1 * x1.powf(e) - (p.lambda2 + p.lambda12) * x2.powf(e)).exp())
            }
            (LifetimeModel::Mobw(p), OrderBranch::X1GtX2) => {
                let e = p.eta;
                Ok(e * e
                    * p.lambda2
                    * (p.lambda1 + p.lambda12)
                    * x1.powf(e - 1.0)
                    * x2.powf(e - 1.0)
                    * (-(p.lambda1 + p.lambda12) * x1.powf(e) - p.lambda2 * x2.powf(e)).exp())
            }
        }
    }

    /// `(P[X1 < X2], P[X1 > X2], P[X1 = X2])`. The last reported value is
    /// the complement of the partial sum, which makes the three add up to
    /// exactly 1.0 in floating point.
    pub fn event_probabilities(&self) -> (f64, f64, f64) {
        match self {
            LifetimeModel::Gbe(p) => {
                let c11 = p.c11();
                let p_lt = p.theta1.powf(-1.0 / p.delta) / c11;
                (p_lt, 1.0 - p_lt, 0.0)
            }
            LifetimeModel::Mobe(MobeParams {
                lambda1,
                lambda2,
                lambda12,
            })
            | LifetimeModel::Mobw(MobwParams {
                lambda1,
                lambda2,
                lambda12,
                ..
            }) => {
                let total = lambda1 + lambda2 + lambda12;
                let p_lt = lambda1 / total;
                if *lambda12 == 0.0 {
                    (p_lt, 1.0 - p_lt, 0.0)
                } else {
                    let p_gt = lambda2 / total;
                    (p_lt, p_gt, (1.0 - (p_lt + p_gt)).max(0.0))
                }
            }
        }
    }

    /// Probability of one ordering branch.
    pub fn branch_probability(&self, branch: OrderBranch) -> f64 {
        let (p_lt, p_gt, p_eq) = self.event_probabilities();
        match branch {
            OrderBranch::X1LtX2 => p_lt,
            OrderBranch::X1GtX2 => p_gt,
            OrderBranch::Tie => p_eq,
        }
    }

    pub fn mean_x1(&self) -> f64 {
        match self {
            LifetimeModel::Gbe(p) => p.theta1,
            LifetimeModel::Mobe(p) => 1.0 / (p.lambda1 + p.lambda12),
            LifetimeModel::Mobw(p) => {
                gamma(1.0 + 1.0 / p.eta).expect("eta > 0")
                    / (p.lambda1 + p.lambda12).powf(1.0 / p.eta)
            }
        }
    }

    pub fn mean_x2(&self) -> f64 {
        match self {
            LifetimeModel::Gbe(p) => p.theta2,
            LifetimeModel::Mobe(p) => 1.0 / (p.lambda2 + p.lambda12),
            LifetimeModel::Mobw(p) => {
                gamma(1.0 + 1.0 / p.eta).expect("eta > 0")
                    / (p.lambda2 + p.lambda12).powf(1.0 / p.eta)
            }
        }
    }

    /// Expected time between consecutive points of the superimposed stream:
    /// `P[X1=X2] E[X_(1)|X1=X2] + 0.5 P[X1!=X2] E[X_(2)|X1!=X2]`.
    pub fn expected_tbe(&self) -> f64 {
        match self {
            LifetimeModel::Gbe(p) => {
                if p.delta == 1.0 {
                    // Identical arithmetic to the rate parameterization so
                    // the two representations of independent exponentials
                    // agree bit for bit.
                    exponential_expected_tbe(1.0 / p.theta1, 1.0 / p.theta2, 0.0)
                } else {
                    0.5 * (p.theta1 + p.theta2 - p.c11().powf(-p.delta))
                }
            }
            LifetimeModel::Mobe(p) => {
                exponential_expected_tbe(p.lambda1, p.lambda2, p.lambda12)
            }
            LifetimeModel::Mobw(p) => {
                weibull_expected_tbe(p.lambda1, p.lambda2, p.lambda12, p.eta)
            }
        }
    }

    fn require_branch_supported(&self, branch: OrderBranch) -> Result<(), ModelError> {
        if branch == OrderBranch::Tie {
            if let LifetimeModel::Gbe(_) = self {
                return Err(ModelError::GbeTieBranch);
            }
        }
        if self.branch_probability(branch) == 0.0 {
            return Err(ModelError::DegenerateBranch { branch });
        }
        Ok(())
    }

    /// Conditional survival of the first event given the ordering branch.
    /// For each supported family this conditional law happens to be the same
    /// for every branch: exponential with rate `C(1,1)^delta` (GBE), rate
    /// `Lambda` (MOBE), or Weibull with rate `Lambda` and shape `eta` (MOBW).
    pub fn first_event_survival(&self, x: f64, branch: OrderBranch) -> Result<f64, ModelError> {
        check_time(x)?;
        self.require_branch_supported(branch)?;
        Ok(self.first_event_survival_unchecked(x))
    }

    pub(crate) fn first_event_survival_unchecked(&self, x: f64) -> f64 {
        match self {
            LifetimeModel::Gbe(p) => (-x * p.c11().powf(p.delta)).exp(),
            LifetimeModel::Mobe(p) => (-p.total_rate() * x).exp(),
            LifetimeModel::Mobw(p) => (-p.total_rate() * x.powf(p.eta)).exp(),
        }
    }

    /// Conditional cdf of the first event given the ordering branch.
    pub fn first_event_cdf(&self, x: f64, branch: OrderBranch) -> Result<f64, ModelError> {
        Ok(1.0 - self.first_event_survival(x, branch)?)
    }

    /// Upper quantile of the first-event law: the `x` with
    /// `P[X_(1) > x] = tail`. Branch-free because the conditional law is.
    pub fn first_event_tail_quantile(&self, tail: f64) -> Result<f64, ModelError> {
        if !(tail > 0.0 && tail < 1.0) {
            return Err(ModelError::InvalidQuantile { value: tail });
        }
        Ok(match self {
            LifetimeModel::Gbe(p) => -tail.ln() / p.c11().powf(p.delta),
            LifetimeModel::Mobe(p) => -tail.ln() / p.total_rate(),
            LifetimeModel::Mobw(p) => (-tail.ln() / p.total_rate()).powf(1.0 / p.eta),
        })
    }

    /// Conditional law of the second event given the realized first event
    /// and a non-tie branch; returns `(cdf, survival)` with
    /// `cdf + survival = 1` exactly.
    pub fn second_event_conditional(
        &self,
        x2_query: f64,
        x_first: f64,
        branch: OrderBranch,
    ) -> Result<(f64, f64), ModelError> {
        check_time(x_first)?;
        check_time(x2_query)?;
        if branch == OrderBranch::Tie {
            return Err(ModelError::TieHasNoSecondEvent);
        }
        if x2_query < x_first {
            return Err(ModelError::SecondBeforeFirst { x2_query, x_first });
        }
        self.require_branch_supported(branch)?;
        let s = match self {
            LifetimeModel::Gbe(p) => {
                // S_1(x1, u)/S_1(x1, x1) = (C_u/C_0)^(delta-1) exp(C_0^d - C_u^d)
                let (c_0, c_u) = match branch {
                    OrderBranch::X1LtX2 => (p.c(x_first, x_first), p.c(x_first, x2_query)),
                    _ => (p.c(x_first, x_first), p.c(x2_query, x_first)),
                };
                if c_0 == 0.0 {
                    // Degenerate conditioning at x_first = 0 under delta < 1.
                    if x2_query == x_first {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    (c_u / c_0).powf(p.delta - 1.0) * (c_0.powf(p.delta) - c_u.powf(p.delta)).exp()
                }
            }
            LifetimeModel::Mobe(p) => {
                let rate = match branch {
                    OrderBranch::X1LtX2 => p.lambda2 + p.lambda12,
                    _ => p.lambda1 + p.lambda12,
                };
                (-rate * (x2_query - x_first)).exp()
            }
            LifetimeModel::Mobw(p) => {
                let rate = match branch {
                    OrderBranch::X1LtX2 => p.lambda2 + p.lambda12,
                    _ => p.lambda1 + p.lambda12,
                };
                (-rate * (x2_query.powf(p.eta) - x_first.powf(p.eta))).exp()
            }
        };
        Ok((1.0 - s, s))
    }

    /// Upper quantile of the conditional second-event law: the `u >= x_first`
    /// with `P[X_(2) > u | X_(1) = x_first, branch] = tail`.
    pub fn second_event_tail_quantile(
        &self,
        tail: f64,
        x_first: f64,
        branch: OrderBranch,
    ) -> Result<f64, ModelError> {
        check_time(x_first)?;
        if !(tail > 0.0 && tail < 1.0) {
            return Err(ModelError::InvalidQuantile { value: tail });
        }
        if branch == OrderBranch::Tie {
            return Err(ModelError::TieHasNoSecondEvent);
        }
        self.require_branch_supported(branch)?;
        match self {
            LifetimeModel::Gbe(p) => {
                // theta of the subprocess observed first vs. still running.
                let (theta_own, theta_other) = match branch {
                    OrderBranch::X1LtX2 => (p.theta1, p.theta2),
                    _ => (p.theta2, p.theta1),
                };
                if p.delta == 1.0 {
                    return Ok(x_first - theta_other * tail.ln());
                }
                if x_first == 0.0 {
                    return Ok(0.0);
                }
                // Solve (t/t0)^((1-d)/d) = exp(t0-t)/tail for t = C(.,u)^d:
                // beta*t*exp(beta*t) = G with beta = d/(1-d). G overflows for
                // small tails, so assemble it in log space.
                let beta = p.delta / (1.0 - p.delta);
                let t0 = x_first * p.c11().powf(p.delta);
                let ln_g = beta.ln() + t0.ln() + beta * t0 - beta * tail.ln();
                let w = lambert_w0_ln(ln_g)?;
                let t = w / beta;
                let own = (x_first / theta_own).powf(1.0 / p.delta);
                let diff = (t.powf(1.0 / p.delta) - own).max(0.0);
                Ok(theta_other * diff.powf(p.delta))
            }
            LifetimeModel::Mobe(p) => {
                let rate = match branch {
                    OrderBranch::X1LtX2 => p.lambda2 + p.lambda12,
                    _ => p.lambda1 + p.lambda12,
                };
                Ok(x_first - tail.ln() / rate)
            }
            LifetimeModel::Mobw(p) => {
                let rate = match branch {
                    OrderBranch::X1LtX2 => p.lambda2 + p.lambda12,
                    _ => p.lambda1 + p.lambda12,
                };
                Ok((x_first.powf(p.eta) - tail.ln() / rate).powf(1.0 / p.eta))
            }
        }
    }

    /// Draw one event vector.
    ///
    /// GBE uses the polar representation: with `Q ~ U(0,1)` and
    /// `R = R1 + N_delta * R2` (unit exponentials, `N_delta ~ Bern(delta)`),
    /// `X1 = theta1 * Q^delta * R` and `X2 = theta2 * (1-Q)^delta * R`.
    /// The shock models take componentwise minima against a common shock.
    /// Every draw consumes a fixed number of uniforms (four for GBE, three
    /// for MOBE/MOBW) so streams stay aligned across parameter values.
    pub fn sample_one(&self, rng: &mut RngStream) -> EventVector {
        match self {
            LifetimeModel::Gbe(p) => {
                let q = rng.next_f64();
                let u_mix = rng.next_f64();
                let r1 = rng.unit_exp();
                let r2 = rng.unit_exp();
                let r = r1 + if u_mix < p.delta { r2 } else { 0.0 };
                EventVector {
                    x1: p.theta1 * q.powf(p.delta) * r,
                    x2: p.theta2 * (1.0 - q).powf(p.delta) * r,
                }
            }
            LifetimeModel::Mobe(p) => {
                let own1 = rng.exp_rate(p.lambda1);
                let own2 = rng.exp_rate(p.lambda2);
                let shock = rng.exp_rate(p.lambda12);
                EventVector {
                    x1: own1.min(shock),
                    x2: own2.min(shock),
                }
            }
            LifetimeModel::Mobw(p) => {
                let own1 = rng.weibull(p.lambda1, p.eta);
                let own2 = rng.weibull(p.lambda2, p.eta);
                let shock = rng.weibull(p.lambda12, p.eta);
                EventVector {
                    x1: own1.min(shock),
                    x2: own2.min(shock),
                }
            }
        }
    }

    /// Draw `n` i.i.d. event vectors.
    pub fn sample(&self, rng: &mut RngStream, n: usize) -> Vec<EventVector> {
        (0..n).map(|_| self.sample_one(rng)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gbe(t1: f64, t2: f64, d: f64) -> LifetimeModel {
        LifetimeModel::Gbe(GbeParams::new(t1, t2, d).unwrap())
    }

    fn mobe(l1: f64, l2: f64, l12: f64) -> LifetimeModel {
        LifetimeModel::Mobe(MobeParams::new(l1, l2, l12).unwrap())
    }

    fn mobw(l1: f64, l2: f64, l12: f64, eta: f64) -> LifetimeModel {
        LifetimeModel::Mobw(MobwParams::new(l1, l2, l12, eta).unwrap())
    }

    #[test]
    fn parameter_validation() {
        assert!(GbeParams::new(0.0, 1.0, 1.0).is_err());
        assert!(GbeParams::new(1.0, 1.0, 0.0).is_err());
        assert!(GbeParams::new(1.0, 1.0, 1.1).is_err());
        assert!(MobeParams::new(0.0, 0.2, 0.0).is_err()); // margin 1 improper
        assert!(MobeParams::new(0.0, 0.0, 0.5).is_ok()); // pure common shock
        assert!(MobwParams::new(0.1, 0.1, 0.0, 0.0).is_err());
    }

    #[test]
    fn survival_examples() {
        // Independent unit exponentials.
        let s = gbe(1.0, 1.0, 1.0).survival(1.0, 1.0).unwrap();
        assert!((s - (-2.0f64).exp()).abs() < 1e-15);
        // Same law expressed as a shock model.
        let s = mobe(0.2, 0.2, 0.0).survival(5.0, 5.0).unwrap();
        assert!((s - (-2.0f64).exp()).abs() < 1e-15);
        // Weibull shocks.
        let s = mobw(0.0314, 0.0314, 0.0, 2.0).survival(5.0, 5.0).unwrap();
        assert!((s - (-2.0 * 0.0314 * 25.0f64).exp()).abs() < 1e-15);
        assert!((s - 0.20805).abs() < 1e-4);
    }

    #[test]
    fn survival_boundary_and_domain() {
        let m = mobw(0.03, 0.01, 0.002, 2.0);
        assert_eq!(m.survival(0.0, 0.0).unwrap(), 1.0);
        assert!(m.survival(-1.0, 0.0).is_err());
        assert!(m.survival(0.0, f64::NAN).is_err());
        let s1 = m.survival(1.0, 2.0).unwrap();
        let s2 = m.survival(1.5, 2.0).unwrap();
        assert!(s2 < s1);
    }

    #[test]
    fn density_examples() {
        // MOBE tie branch at x = 1.
        let f = mobe(0.2, 0.2, 0.1)
            .density(1.0, 1.0, OrderBranch::Tie)
            .unwrap();
        assert!((f - 0.1 * (-0.5f64).exp()).abs() < 1e-15);
        // Independent unit exponentials at (1, 2).
        let f = gbe(1.0, 1.0, 1.0)
            .density(1.0, 2.0, OrderBranch::X1LtX2)
            .unwrap();
        assert!((f - (-3.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn density_branch_checks() {
        let g = gbe(1.0, 1.0, 0.5);
        assert!(matches!(
            g.density(1.0, 1.0, OrderBranch::Tie),
            Err(ModelError::GbeTieBranch)
        ));
        assert!(matches!(
            g.density(2.0, 1.0, OrderBranch::X1LtX2),
            Err(ModelError::BranchMismatch { .. })
        ));
    }

    #[test]
    fn event_probabilities_examples() {
        let (lt, gt, eq) = mobe(0.2, 0.2, 0.0).event_probabilities();
        assert_eq!((lt, gt, eq), (0.5, 0.5, 0.0));

        let (lt, gt, eq) = gbe(5.0, 15.0, 1.0).event_probabilities();
        assert!((lt - 0.75).abs() < 1e-15);
        assert!((gt - 0.25).abs() < 1e-15);
        assert_eq!(eq, 0.0);

        let (lt, gt, eq) = mobw(0.0257, 0.0257, 0.0057, 2.0).event_probabilities();
        assert!((lt - 0.0257 / 0.0571).abs() < 1e-12);
        assert!((gt - lt).abs() < 1e-15);
        assert!((eq - 0.0057 / 0.0571).abs() < 1e-12);
        assert!((lt + gt + eq - 1.0).abs() < 1e-15);
    }

    #[test]
    fn expected_tbe_examples() {
        assert!((gbe(5.0, 5.0, 1.0).expected_tbe() - 3.75).abs() < 1e-12);
        assert!((mobe(0.2, 0.2, 0.0).expected_tbe() - 3.75).abs() < 1e-12);
        // eta = 1 reduces the Weibull formula to the exponential one.
        let w = mobw(0.164, 0.164, 0.036, 1.0).expected_tbe();
        let e = mobe(0.164, 0.164, 0.036).expected_tbe();
        assert!((w - e).abs() < 1e-12);
    }

    #[test]
    fn first_event_law() {
        for m in [
            gbe(5.0, 15.0, 0.5),
            mobe(0.2, 0.3, 0.1),
            mobw(0.02, 0.01, 0.005, 2.0),
        ] {
            assert_eq!(m.first_event_cdf(0.0, OrderBranch::X1LtX2).unwrap(), 0.0);
            assert_eq!(
                m.first_event_survival(0.0, OrderBranch::X1GtX2).unwrap(),
                1.0
            );
        }
        // MOBE without shock: survival e^{-Lambda x}.
        let s = mobe(0.2, 0.2, 0.0)
            .first_event_survival(2.5, OrderBranch::X1LtX2)
            .unwrap();
        assert!((s - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn first_event_quantile_round_trip() {
        for m in [
            gbe(5.0, 15.0, 0.5),
            mobe(0.2, 0.3, 0.1),
            mobw(0.02, 0.01, 0.005, 2.3),
        ] {
            for tail in [0.9, 0.5, 0.01875, 1e-4] {
                let x = m.first_event_tail_quantile(tail).unwrap();
                let s = m.first_event_survival(x, OrderBranch::X1LtX2).unwrap();
                assert!((s - tail).abs() < 1e-12, "round trip failed at {tail}");
            }
        }
    }

    #[test]
    fn degenerate_branches() {
        let g = gbe(1.0, 2.0, 0.7);
        assert!(matches!(
            g.first_event_cdf(1.0, OrderBranch::Tie),
            Err(ModelError::GbeTieBranch)
        ));
        // Pure common-shock margin: X1 < X2 is impossible.
        let m = mobe(0.0, 0.1, 0.2);
        assert!(matches!(
            m.first_event_cdf(1.0, OrderBranch::X1LtX2),
            Err(ModelError::DegenerateBranch { .. })
        ));
        // No ties without a shock component.
        let m = mobe(0.2, 0.1, 0.0);
        assert!(matches!(
            m.first_event_cdf(1.0, OrderBranch::Tie),
            Err(ModelError::DegenerateBranch { .. })
        ));
    }

    #[test]
    fn second_event_examples() {
        // Memoryless continuation for the exponential shock model.
        let (cdf, surv) = mobe(0.2, 0.3, 0.1)
            .second_event_conditional(2.0, 1.0, OrderBranch::X1LtX2)
            .unwrap();
        assert!((surv - (-0.4f64).exp()).abs() < 1e-15);
        assert_eq!(cdf + surv, 1.0);

        // Independent GBE, delta = 1: same memoryless form.
        let (_, surv) = gbe(5.0, 5.0, 1.0)
            .second_event_conditional(3.0, 1.0, OrderBranch::X1LtX2)
            .unwrap();
        assert!((surv - (-0.4f64).exp()).abs() < 1e-15);

        // Conditioning point itself has survival one.
        for m in [gbe(5.0, 15.0, 0.5), mobw(0.02, 0.01, 0.005, 2.0)] {
            let (cdf, surv) = m
                .second_event_conditional(1.7, 1.7, OrderBranch::X1GtX2)
                .unwrap();
            assert_eq!(surv, 1.0);
            assert_eq!(cdf, 0.0);
        }
    }

    #[test]
    fn second_event_errors() {
        let m = mobe(0.2, 0.3, 0.1);
        assert!(matches!(
            m.second_event_conditional(0.5, 1.0, OrderBranch::X1LtX2),
            Err(ModelError::SecondBeforeFirst { .. })
        ));
        assert!(matches!(
            m.second_event_conditional(2.0, 1.0, OrderBranch::Tie),
            Err(ModelError::TieHasNoSecondEvent)
        ));
    }

    #[test]
    fn second_event_quantile_round_trip() {
        let models = [
            gbe(5.0, 15.0, 0.5),
            gbe(5.0, 5.0, 1.0),
            gbe(20.0, 15.0, 0.9),
            mobe(0.2, 0.3, 0.1),
            mobw(0.02, 0.01, 0.005, 2.0),
        ];
        for m in models {
            for branch in [OrderBranch::X1LtX2, OrderBranch::X1GtX2] {
                for x_first in [0.3, 2.0, 10.0] {
                    for tail in [0.999, 0.6, 0.0191, 1e-6] {
                        let u = m.second_event_tail_quantile(tail, x_first, branch).unwrap();
                        assert!(u >= x_first);
                        let (_, s) = m.second_event_conditional(u, x_first, branch).unwrap();
                        assert!(
                            (s - tail).abs() < 1e-9,
                            "round trip failed: {m:?} {branch:?} x={x_first} tail={tail} got {s}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn superimpose_worked_example() {
        let vs = [
            EventVector { x1: 2.0, x2: 3.0 },
            EventVector { x1: 3.0, x2: 1.0 },
            EventVector { x1: 2.0, x2: 2.0 },
            EventVector { x1: 5.0, x2: 1.0 },
        ];
        let stream = superimpose(&vs);
        let values: Vec<f64> = stream.iter().map(|e| e.value).collect();
        assert_eq!(values, vec![2.0, 3.0, 1.0, 3.0, 2.0, 1.0, 5.0]);
        let ranks: Vec<u8> = stream.iter().map(|e| e.rank.index()).collect();
        assert_eq!(ranks, vec![1, 2, 1, 2, 1, 1, 2]);
        assert_eq!(stream[4].source, EventSource::Tie);
        assert_eq!(stream[2].source, EventSource::Subprocess2);
    }

    #[test]
    fn superimpose_single_tie() {
        let stream = superimpose(&[EventVector { x1: 4.0, x2: 4.0 }]);
        assert_eq!(stream.len(), 1);
        assert_eq!(stream[0].value, 4.0);
        assert_eq!(stream[0].source, EventSource::Tie);
        assert_eq!(stream[0].rank, EventRank::First);
    }

    #[test]
    fn sampler_determinism() {
        let m = gbe(5.0, 15.0, 0.5);
        let mut a = RngStream::new(11, 0);
        let mut b = RngStream::new(11, 0);
        let xs = m.sample(&mut a, 100);
        let ys = m.sample(&mut b, 100);
        assert_eq!(xs, ys);
    }

    #[test]
    fn mobw_eta_one_matches_mobe_bitwise() {
        let w = mobw(0.164, 0.164, 0.036, 1.0);
        let e = mobe(0.164, 0.164, 0.036);
        let mut ra = RngStream::new(3, 9);
        let mut rb = RngStream::new(3, 9);
        for _ in 0..200 {
            let a = w.sample_one(&mut ra);
            let b = e.sample_one(&mut rb);
            assert_eq!(a.x1.to_bits(), b.x1.to_bits());
            assert_eq!(a.x2.to_bits(), b.x2.to_bits());
        }
    }

    #[test]
    fn structural_ties_are_exact() {
        let m = mobe(0.164, 0.164, 0.036);
        let mut rng = RngStream::new(7, 1);
        let xs = m.sample(&mut rng, 10_000);
        let ties = xs.iter().filter(|v| v.branch() == OrderBranch::Tie).count();
        // P[tie] = 0.036/0.364 ~ 0.0989; loose 5-sigma band on 10k draws.
        assert!((ties as f64 / 10_000.0 - 0.0989).abs() < 0.015);
        for v in xs.iter().filter(|v| v.branch() == OrderBranch::Tie) {
            assert_eq!(v.x1.to_bits(), v.x2.to_bits());
        }
    }
}
