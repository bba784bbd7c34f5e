//! Deterministic synthetic telemetry generation with planted critical
//! events, for testing the sampling trade-off machinery without field data.
//!
//! Events of one kind are placed in equal-width slots across the log with a
//! seeded random offset and a seeded duration jitter, so consecutive events
//! never touch and the ground-truth list is exact by construction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indicators::IndicatorKind;
use crate::telemetry::{TelemetryFrame, TelemetryLog, DEFAULT_VEHICLE_WIDTH};

/// How to plant critical events for one indicator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventPlan {
    pub count: usize,
    /// Mean event duration in seconds.
    pub duration: f64,
    /// Fractional spread: each event's duration is drawn uniformly from
    /// duration * [1 - jitter, 1 + jitter].
    pub duration_jitter: f64,
    /// Critical value held during the event: m/s² for SD (e.g. -3.4),
    /// lateral margin in m for LPV (e.g. 0.1), 1/s for ITTC (e.g. 2.5).
    pub amplitude: f64,
}

impl EventPlan {
    pub fn new(count: usize, duration: f64, amplitude: f64) -> Self {
        EventPlan {
            count,
            duration,
            duration_jitter: 0.0,
            amplitude,
        }
    }

    pub fn with_jitter(mut self, jitter: f64) -> Self {
        self.duration_jitter = jitter;
        self
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthSpec {
    pub rate_hz: f64,
    pub duration_s: f64,
    pub seed: u64,
    pub vehicle_width: f64,
    pub sd: Option<EventPlan>,
    pub lpv: Option<EventPlan>,
    pub ittc: Option<EventPlan>,
}

impl SynthSpec {
    pub fn new(rate_hz: f64, duration_s: f64, seed: u64) -> Self {
        SynthSpec {
            rate_hz,
            duration_s,
            seed,
            vehicle_width: DEFAULT_VEHICLE_WIDTH,
            sd: None,
            lpv: None,
            ittc: None,
        }
    }
}

/// A planted event, reported against the actual frame grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthEvent {
    pub kind: IndicatorKind,
    pub start: f64,
    pub end: f64,
    pub peak_value: f64,
}

// quiet-driving baseline values
const BASE_LANE: f64 = 1.7;
const BASE_RANGE: f64 = 50.0;
const BASE_RANGE_RATE: f64 = 1.0; // opening gap: ITTC slightly negative

/// Index intervals [start, end] for one plan, in frame units. Uses per-kind
/// RNG streams derived from (seed, kind index) so plans are independent.
fn plan_intervals(
    plan: &EventPlan,
    n_frames: usize,
    gap: f64,
    seed: u64,
    stream: u64,
) -> Result<Vec<(usize, usize)>> {
    if plan.count == 0 {
        return Ok(Vec::new());
    }
    if !(0.0..1.0).contains(&plan.duration_jitter) {
        return Err(Error::InvalidParameter(
            "duration_jitter must lie in [0, 1)".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    // keep one second clear of both log ends
    let margin = (1.0 / gap).ceil() as usize;
    if n_frames <= 2 * margin {
        return Err(Error::InvalidParameter("log too short for event plan".into()));
    }
    let usable = n_frames - 2 * margin;
    let slot = usable / plan.count;
    let mut intervals = Vec::with_capacity(plan.count);
    for i in 0..plan.count {
        let jitter = 1.0 + plan.duration_jitter * (2.0 * rng.gen::<f64>() - 1.0);
        let duration = plan.duration * jitter;
        let len_frames = ((duration / gap).round() as usize) + 1;
        // leave at least one quiet second at the slot tail
        if len_frames + margin >= slot {
            return Err(Error::InvalidParameter(format!(
                "event plan does not fit: {} events of ~{:.2}s in {:.1}s",
                plan.count,
                plan.duration,
                n_frames as f64 * gap
            )));
        }
        let offset = rng.gen_range(0..slot - len_frames - margin);
        let start = margin + i * slot + offset;
        intervals.push((start, start + len_frames - 1));
    }
    Ok(intervals)
}

/// Generates a deterministic log with planted critical events and the exact
/// ground-truth event list.
pub fn generate(spec: &SynthSpec) -> Result<(TelemetryLog, Vec<GroundTruthEvent>)> {
    if !(spec.rate_hz > 0.0) || !(spec.duration_s > 0.0) {
        return Err(Error::InvalidParameter(
            "rate and duration must be positive".into(),
        ));
    }
    let gap = 1.0 / spec.rate_hz;
    let n_frames = (spec.duration_s * spec.rate_hz).floor() as usize + 1;

    let mut frames: Vec<TelemetryFrame> = (0..n_frames)
        .map(|i| {
            let mut f = TelemetryFrame::at(i as f64 * gap);
            f.long_accel = Some(0.0);
            f.left_lane_position = Some(BASE_LANE);
            f.left_lane_quality = Some(3);
            f.right_lane_position = Some(BASE_LANE);
            f.right_lane_quality = Some(3);
            f.target_range = Some(BASE_RANGE);
            f.target_range_rate = Some(BASE_RANGE_RATE);
            f.target_range_accel = Some(0.0);
            f.target_status = Some(1);
            f
        })
        .collect();

    let mut truth = Vec::new();
    let plans = [
        (IndicatorKind::SevereDeceleration, &spec.sd),
        (IndicatorKind::LateralPositionVariation, &spec.lpv),
        (IndicatorKind::InverseTimeToCollision, &spec.ittc),
    ];
    for (stream, (kind, plan)) in plans.iter().enumerate() {
        let Some(plan) = plan else { continue };
        for (start, end) in plan_intervals(plan, n_frames, gap, spec.seed, stream as u64)? {
            for frame in &mut frames[start..=end] {
                match kind {
                    IndicatorKind::SevereDeceleration => {
                        frame.long_accel = Some(plan.amplitude);
                    }
                    IndicatorKind::LateralPositionVariation => {
                        // pull toward the left marking so the margin equals
                        // the amplitude; the right margin stays safe
                        frame.left_lane_position =
                            Some(spec.vehicle_width / 2.0 + plan.amplitude);
                    }
                    IndicatorKind::InverseTimeToCollision => {
                        // gap of 10 m closing at amplitude * 10 m/s
                        frame.target_range = Some(10.0);
                        frame.target_range_rate = Some(-plan.amplitude * 10.0);
                    }
                }
            }
            truth.push(GroundTruthEvent {
                kind: *kind,
                start: frames[start].timestamp,
                end: frames[end].timestamp,
                peak_value: plan.amplitude,
            });
        }
    }

    let log = TelemetryLog::new(frames, spec.vehicle_width)?;
    Ok((log, truth))
}
