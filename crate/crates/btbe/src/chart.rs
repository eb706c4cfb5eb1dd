//! The BTBE control chart: false-alarm-rate selection, dynamic control
//! limits, and the streaming monitor.
//!
//! Every observed event is plotted against its own limit pair the moment it
//! arrives. First events share one fixed limit pair per chart; each second
//! event gets limits conditioned on the realized first event of its vector
//! through the conditional laws in [`crate::lifetimes`]. Tie vectors
//! produce a single point judged against the first-event limits. Limits
//! depend only on the in-control model and the current vector, never on
//! monitoring history, so truncating the stream never changes points
//! already emitted.

use crate::lifetimes::{
    superimpose, EventRank, EventVector, LifetimeModel, ModelError, OrderBranch, OrderedEvent,
};
use thiserror::Error;

/// Errors from chart configuration and monitoring.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChartError {
    #[error("target in-control ATS {ats0} must exceed the expected time between events {etbe}")]
    AtsTooSmall { ats0: f64, etbe: f64 },

    #[error("false alarm rate {alpha} must lie strictly inside (0, 1)")]
    InvalidAlpha { alpha: f64 },

    #[error("event vector at position {index} is invalid: {source}")]
    InvalidVector { index: usize, source: ModelError },

    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Chart sidedness. One-sided charts watch for upward shifts only; the
/// exponential-tailed families (GBE, MOBE) default to that because their
/// mass piles up at the origin, while the Weibull family defaults to a
/// two-sided chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChartSide {
    UpperOneSided,
    TwoSided,
}

impl ChartSide {
    pub fn default_for(model: &LifetimeModel) -> Self {
        match model {
            LifetimeModel::Gbe(_) | LifetimeModel::Mobe(_) => ChartSide::UpperOneSided,
            LifetimeModel::Mobw(_) => ChartSide::TwoSided,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            ChartSide::UpperOneSided => "upper",
            ChartSide::TwoSided => "two-sided",
        }
    }
}

/// Per-point false alarm rate implied by a target in-control average
/// time-to-signal: `alpha = E[TBE] / ATS0`.
pub fn alpha_from_ats0(model: &LifetimeModel, ats0: f64) -> Result<f64, ChartError> {
    let etbe = model.expected_tbe();
    if !(ats0 > etbe) {
        return Err(ChartError::AtsTooSmall { ats0, etbe });
    }
    Ok(etbe / ats0)
}

/// A fully resolved chart: in-control model, sidedness, and per-point false
/// alarm rate.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartConfig {
    model: LifetimeModel,
    side: ChartSide,
    alpha: f64,
}

impl ChartConfig {
    /// Configure from a target in-control ATS.
    pub fn from_ats0(
        model: LifetimeModel,
        side: Option<ChartSide>,
        ats0: f64,
    ) -> Result<Self, ChartError> {
        let alpha = alpha_from_ats0(&model, ats0)?;
        Ok(Self {
            side: side.unwrap_or_else(|| ChartSide::default_for(&model)),
            model,
            alpha,
        })
    }

    /// Configure from an explicit false alarm rate.
    pub fn from_alpha(
        model: LifetimeModel,
        side: Option<ChartSide>,
        alpha: f64,
    ) -> Result<Self, ChartError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(ChartError::InvalidAlpha { alpha });
        }
        Ok(Self {
            side: side.unwrap_or_else(|| ChartSide::default_for(&model)),
            model,
            alpha,
        })
    }

    pub fn model(&self) -> &LifetimeModel {
        &self.model
    }

    pub fn side(&self) -> ChartSide {
        self.side
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Tail mass assigned to each monitored tail.
    fn tail_mass(&self) -> f64 {
        match self.side {
            ChartSide::UpperOneSided => self.alpha,
            ChartSide::TwoSided => 0.5 * self.alpha,
        }
    }
}

/// Lower/upper control limit pair for one plotted point; `lcl` is absent on
/// one-sided charts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitPair {
    pub lcl: Option<f64>,
    pub ucl: f64,
}

impl LimitPair {
    /// Whether a plotted value breaches this pair.
    pub fn breached(&self, value: f64) -> bool {
        value > self.ucl || self.lcl.is_some_and(|lcl| value < lcl)
    }
}

/// Control limits for first events; the same pair applies to every vector.
pub fn first_event_limits(config: &ChartConfig) -> LimitPair {
    let q = config.tail_mass();
    let ucl = config
        .model
        .first_event_tail_quantile(q)
        .expect("tail mass inside (0,1)");
    let lcl = match config.side {
        ChartSide::UpperOneSided => None,
        ChartSide::TwoSided => Some(
            config
                .model
                .first_event_tail_quantile(1.0 - q)
                .expect("tail mass inside (0,1)"),
        ),
    };
    LimitPair { lcl, ucl }
}

/// Control limits for the second event of a vector whose first event has
/// been observed at `x_first` on the given (non-tie) branch.
pub fn second_event_limits(
    config: &ChartConfig,
    x_first: f64,
    branch: OrderBranch,
) -> Result<LimitPair, ChartError> {
    let q = config.tail_mass();
    let ucl = config.model.second_event_tail_quantile(q, x_first, branch)?;
    let lcl = match config.side {
        ChartSide::UpperOneSided => None,
        ChartSide::TwoSided => Some(
            config
                .model
                .second_event_tail_quantile(1.0 - q, x_first, branch)?,
        ),
    };
    Ok(LimitPair { lcl, ucl })
}

/// One plotted point: the event, its limits, and the signal flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartPoint {
    pub event: OrderedEvent,
    pub limits: LimitPair,
    pub signal: bool,
    /// Rank (1 or 2) responsible for a signal; mirrors `event.rank`.
    pub signal_rank: Option<EventRank>,
}

/// Run the chart over a sequence of event vectors, emitting one point per
/// observed event in observation order. Pure fold: each vector's points
/// depend only on the configuration and that vector.
pub fn monitor(
    config: &ChartConfig,
    vectors: impl IntoIterator<Item = EventVector>,
) -> Result<Vec<ChartPoint>, ChartError> {
    let first_limits = first_event_limits(config);
    let mut points = Vec::new();
    for (index, vector) in vectors.into_iter().enumerate() {
        EventVector::new(vector.x1, vector.x2)
            .map_err(|source| ChartError::InvalidVector { index, source })?;
        let events = superimpose(std::slice::from_ref(&vector));
        for mut event in events {
            event.vector_index = index;
            let limits = match event.rank {
                EventRank::First => first_limits,
                EventRank::Second => {
                    second_event_limits(config, vector.first(), vector.branch())?
                }
            };
            let signal = limits.breached(event.value);
            points.push(ChartPoint {
                event,
                limits,
                signal,
                signal_rank: signal.then_some(event.rank),
            });
        }
    }
    Ok(points)
}

/// First signalling point, if any: `(event_index, point)` with the event
/// index counted from 1 in stream order.
pub fn first_signal(points: &[ChartPoint]) -> Option<(usize, &ChartPoint)> {
    points
        .iter()
        .enumerate()
        .find(|(_, p)| p.signal)
        .map(|(i, p)| (i + 1, p))
}

/// Column header of the chart export table.
pub const EXPORT_HEADER: &str =
    "vector_index,event_index,rank,source,value,lcl,ucl,signal,signal_rank";

/// Render chart points as delimited rows (stable order, one row per event;
/// empty `lcl`/`signal_rank` cells where not applicable).
pub fn export_csv(points: &[ChartPoint]) -> String {
    let mut out = String::with_capacity(64 * (points.len() + 1));
    out.push_str(EXPORT_HEADER);
    out.push('\n');
    for (i, p) in points.iter().enumerate() {
        let lcl = p
            .limits
            .lcl
            .map(|v| format!("{v}"))
            .unwrap_or_default();
        let signal_rank = p
            .signal_rank
            .map(|r| r.index().to_string())
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            p.event.vector_index + 1,
            i + 1,
            p.event.rank.index(),
            p.event.source.label(),
            p.event.value,
            lcl,
            p.limits.ucl,
            p.signal,
            signal_rank,
        ));
    }
    out
}
