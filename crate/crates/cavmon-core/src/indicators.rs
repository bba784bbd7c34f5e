//! The three safety performance indicators derived from telemetry:
//! severe deceleration (SD), lateral position variation (LPV), and inverse
//! time to collision (ITTC).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::telemetry::{TelemetryFrame, TelemetryLog};

/// Deceleration at or below this is a severe-deceleration event (m/s²).
pub const SD_THRESHOLD: f64 = -2.94;
/// ITTC above this is a critical closing situation (1/s).
pub const ITTC_THRESHOLD: f64 = 1.76;
/// Default critical lateral margin (m). Configurable; the source analysis
/// treats a 0.190 m margin as dangerous.
pub const DEFAULT_LPV_THRESHOLD: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IndicatorKind {
    SevereDeceleration,
    LateralPositionVariation,
    InverseTimeToCollision,
}

impl IndicatorKind {
    pub const ALL: [IndicatorKind; 3] = [
        IndicatorKind::SevereDeceleration,
        IndicatorKind::LateralPositionVariation,
        IndicatorKind::InverseTimeToCollision,
    ];

    pub fn short_name(&self) -> &'static str {
        match self {
            IndicatorKind::SevereDeceleration => "sd",
            IndicatorKind::LateralPositionVariation => "lpv",
            IndicatorKind::InverseTimeToCollision => "ittc",
        }
    }

    pub fn from_short_name(name: &str) -> Option<IndicatorKind> {
        match name.to_ascii_lowercase().as_str() {
            "sd" => Some(IndicatorKind::SevereDeceleration),
            "lpv" => Some(IndicatorKind::LateralPositionVariation),
            "ittc" => Some(IndicatorKind::InverseTimeToCollision),
            _ => None,
        }
    }

    pub fn default_threshold(&self) -> f64 {
        match self {
            IndicatorKind::SevereDeceleration => SD_THRESHOLD,
            IndicatorKind::LateralPositionVariation => DEFAULT_LPV_THRESHOLD,
            IndicatorKind::InverseTimeToCollision => ITTC_THRESHOLD,
        }
    }

    /// Orientation-aware criticality predicate. Both comparisons are
    /// inclusive; SD and LPV are critical when low, ITTC when high.
    pub fn is_critical(&self, value: f64, threshold: f64) -> bool {
        match self {
            IndicatorKind::SevereDeceleration | IndicatorKind::LateralPositionVariation => {
                value <= threshold
            }
            IndicatorKind::InverseTimeToCollision => value >= threshold,
        }
    }

    /// True when `a` is strictly more critical than `b`.
    pub fn more_critical(&self, a: f64, b: f64) -> bool {
        match self {
            IndicatorKind::SevereDeceleration | IndicatorKind::LateralPositionVariation => a < b,
            IndicatorKind::InverseTimeToCollision => a > b,
        }
    }

    /// Neutral reference value used when no sampled point exists to compare
    /// against: 0 for SD and ITTC (quiescent driving), the threshold for LPV.
    pub fn baseline(&self, threshold: f64) -> f64 {
        match self {
            IndicatorKind::SevereDeceleration | IndicatorKind::InverseTimeToCollision => 0.0,
            IndicatorKind::LateralPositionVariation => threshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub timestamp: f64,
    pub value: f64,
}

/// Timestamped scalar series for one indicator, with its criticality
/// threshold attached.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorSeries {
    pub kind: IndicatorKind,
    points: Vec<SeriesPoint>,
    pub threshold: f64,
}

impl IndicatorSeries {
    pub fn new(kind: IndicatorKind, points: Vec<SeriesPoint>, threshold: f64) -> Result<Self> {
        if !threshold.is_finite() {
            return Err(Error::InvalidParameter("threshold must be finite".into()));
        }
        for p in &points {
            if !p.timestamp.is_finite() || !p.value.is_finite() {
                return Err(Error::InvalidParameter(
                    "series timestamps and values must be finite".into(),
                ));
            }
        }
        for pair in points.windows(2) {
            if pair[1].timestamp <= pair[0].timestamp {
                return Err(Error::InvalidParameter(
                    "series timestamps must be strictly increasing".into(),
                ));
            }
        }
        Ok(IndicatorSeries { kind, points, threshold })
    }

    pub fn points(&self) -> &[SeriesPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    pub fn timestamps(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.timestamp).collect()
    }

    pub fn is_critical_at(&self, i: usize) -> bool {
        self.kind.is_critical(self.points[i].value, self.threshold)
    }
}

/// Sign convention for targetRangeRate. The source schema only says
/// "relative speed between target and the ego vehicle".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum RangeRateSign {
    /// rate = d(range)/dt, so a closing gap has a negative rate.
    #[default]
    ClosingNegative,
    /// rate already equals v_sub - v_pre; closing gap positive.
    ClosingPositive,
}

#[derive(Debug, Clone)]
pub struct IndicatorConfig {
    pub sd_threshold: f64,
    pub lpv_threshold: f64,
    pub ittc_threshold: f64,
    pub range_rate_sign: RangeRateSign,
}

impl Default for IndicatorConfig {
    fn default() -> Self {
        IndicatorConfig {
            sd_threshold: SD_THRESHOLD,
            lpv_threshold: DEFAULT_LPV_THRESHOLD,
            ittc_threshold: ITTC_THRESHOLD,
            range_rate_sign: RangeRateSign::ClosingNegative,
        }
    }
}

/// SD value for one frame: the longitudinal acceleration itself.
pub fn sd_value(frame: &TelemetryFrame) -> Option<f64> {
    frame.long_accel
}

/// LPV value for one frame: the smaller absolute margin between either lane
/// marking distance and the half vehicle width.
pub fn lpv_value(frame: &TelemetryFrame, vehicle_width: f64) -> Option<f64> {
    let (l, r) = (frame.left_lane_position?, frame.right_lane_position?);
    let half = vehicle_width / 2.0;
    Some((l - half).abs().min((r - half).abs()))
}

/// ITTC value for one frame: closing speed over gap, in 1/s.
pub fn ittc_value(frame: &TelemetryFrame, sign: RangeRateSign) -> Option<f64> {
    let range = frame.target_range?;
    let rate = frame.target_range_rate?;
    if range <= 0.0 {
        return None;
    }
    Some(match sign {
        RangeRateSign::ClosingNegative => -rate / range,
        RangeRateSign::ClosingPositive => rate / range,
    })
}

#[derive(Debug, Clone)]
pub struct ComputedSeries {
    pub series: IndicatorSeries,
    /// Frames lacking the fields this indicator needs.
    pub skipped_frames: usize,
}

fn collect_series(
    log: &TelemetryLog,
    kind: IndicatorKind,
    threshold: f64,
    mut value: impl FnMut(&TelemetryFrame) -> Option<f64>,
) -> Result<ComputedSeries> {
    let mut points = Vec::new();
    let mut skipped = 0usize;
    for f in log.frames() {
        match value(f) {
            Some(v) if v.is_finite() => points.push(SeriesPoint {
                timestamp: f.timestamp,
                value: v,
            }),
            _ => skipped += 1,
        }
    }
    if points.is_empty() {
        return Err(Error::NoData(format!(
            "no frames usable for {}",
            kind.short_name()
        )));
    }
    Ok(ComputedSeries {
        series: IndicatorSeries::new(kind, points, threshold)?,
        skipped_frames: skipped,
    })
}

pub fn compute_sd(log: &TelemetryLog) -> Result<ComputedSeries> {
    compute_with_config(log, IndicatorKind::SevereDeceleration, &IndicatorConfig::default())
}

pub fn compute_lpv(log: &TelemetryLog) -> Result<ComputedSeries> {
    compute_with_config(log, IndicatorKind::LateralPositionVariation, &IndicatorConfig::default())
}

pub fn compute_ittc(log: &TelemetryLog) -> Result<ComputedSeries> {
    compute_with_config(log, IndicatorKind::InverseTimeToCollision, &IndicatorConfig::default())
}

pub fn compute_with_config(
    log: &TelemetryLog,
    kind: IndicatorKind,
    config: &IndicatorConfig,
) -> Result<ComputedSeries> {
    match kind {
        IndicatorKind::SevereDeceleration => {
            collect_series(log, kind, config.sd_threshold, sd_value)
        }
        IndicatorKind::LateralPositionVariation => {
            let width = log.vehicle_width();
            if !(width > 0.0) {
                return Err(Error::InvalidParameter("vehicle_width must be positive".into()));
            }
            collect_series(log, kind, config.lpv_threshold, |f| lpv_value(f, width))
        }
        IndicatorKind::InverseTimeToCollision => {
            collect_series(log, kind, config.ittc_threshold, |f| {
                ittc_value(f, config.range_rate_sign)
            })
        }
    }
}
