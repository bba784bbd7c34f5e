//! Quantifies the trade-off between communication efficiency and
//! safety-indicator reliability when downsampling connected-vehicle
//! telemetry, and simulates the OBU -> RSU -> TMC pipeline that carries the
//! sampled data.
//!
//! The crate is organized around the analysis flow:
//! [`telemetry`] ingests and quality-filters raw sensor logs, [`indicators`]
//! derives the three safety series (severe deceleration, lateral position
//! variation, inverse time to collision), [`sampling`] decimates them,
//! [`events`] classifies critical events as detected or missed with delay
//! and error, [`stats`] checks distributional drift with the two-sample KS
//! test, [`tradeoff`] combines compression and detection success into the
//! weighted objective and recommends sampling intervals, and [`netsim`]
//! replays the sampled stream through a bandwidth-constrained channel.
//! [`synth`] generates seeded logs with planted events for testing.

// validation uses `!(x > 0.0)` on purpose: it rejects NaN along with the
// out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod events;
pub mod indicators;
pub mod netsim;
pub mod report;
pub mod sampling;
pub mod stats;
pub mod synth;
pub mod telemetry;
pub mod tradeoff;

pub use error::{Error, Result};
pub use events::{CriticalEvent, EventMatch, Outcome};
pub use indicators::{IndicatorKind, IndicatorSeries, SeriesPoint};
pub use netsim::{ChannelModel, PipelineReport, V2xMessage};
pub use report::{SweepConfig, SweepReport};
pub use sampling::{SamplingMode, SamplingSpec};
pub use stats::{DistributionSummary, Ecdf, KsResult};
pub use telemetry::{TelemetryFrame, TelemetryLog};
pub use tradeoff::{SamplingOutcome, Weights};
