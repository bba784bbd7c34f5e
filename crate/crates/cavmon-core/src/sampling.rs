//! Decimation of a raw series to a coarser sampling interval, the OBU's
//! size-reduction step. Selection is causal: each grid time takes the last
//! raw point at or before it, never a future sample. No interpolation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indicators::IndicatorSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SamplingMode {
    #[default]
    TimeBased,
    IndexBased,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingSpec {
    /// Sampling interval k, in seconds.
    pub interval: f64,
    /// Grid phase offset in [0, interval).
    pub phase: f64,
    pub mode: SamplingMode,
}

impl SamplingSpec {
    pub fn new(interval: f64, phase: f64) -> Result<Self> {
        Self::with_mode(interval, phase, SamplingMode::TimeBased)
    }

    pub fn with_mode(interval: f64, phase: f64, mode: SamplingMode) -> Result<Self> {
        if !(interval > 0.0) || !interval.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sampling interval must be positive, got {interval}"
            )));
        }
        if !(0.0..interval).contains(&phase) {
            return Err(Error::InvalidParameter(format!(
                "phase must lie in [0, {interval}), got {phase}"
            )));
        }
        Ok(SamplingSpec { interval, phase, mode })
    }
}

/// Tolerance for grid-point comparisons, to keep selection stable under
/// floating-point grid arithmetic.
fn grid_eps(t: f64) -> f64 {
    1e-9 * t.abs().max(1.0)
}

/// Indices of the points a time-based grid keeps: for each grid time
/// t0 + phase + n*k, the last point with timestamp <= grid time, deduplicated.
fn select_time_based(timestamps: &[f64], interval: f64, phase: f64) -> Vec<usize> {
    let t0 = timestamps[0];
    let t_last = *timestamps.last().unwrap();
    let mut kept = Vec::new();
    let mut idx = 0usize;
    let mut n = 0u64;
    loop {
        let grid = t0 + phase + n as f64 * interval;
        if grid > t_last + grid_eps(grid) {
            break;
        }
        while idx + 1 < timestamps.len() && timestamps[idx + 1] <= grid + grid_eps(grid) {
            idx += 1;
        }
        if timestamps[idx] <= grid + grid_eps(grid) && kept.last() != Some(&idx) {
            kept.push(idx);
        }
        n += 1;
    }
    kept
}

fn select_index_based(timestamps: &[f64], interval: f64, phase: f64) -> Vec<usize> {
    let mut gaps: Vec<f64> = timestamps.windows(2).map(|p| p[1] - p[0]).collect();
    if gaps.is_empty() {
        return vec![0];
    }
    gaps.sort_by(f64::total_cmp);
    let mid = gaps.len() / 2;
    let median = if gaps.len() % 2 == 1 {
        gaps[mid]
    } else {
        0.5 * (gaps[mid - 1] + gaps[mid])
    };
    let stride = ((interval / median).round() as usize).max(1);
    let start = (phase / median).ceil() as usize;
    (start..timestamps.len()).step_by(stride).collect()
}

/// Result of one decimation. When the requested interval is finer than the
/// raw resolution the input passes through unchanged and the flag is set.
#[derive(Debug, Clone)]
pub struct Decimated {
    pub series: IndicatorSeries,
    pub below_resolution: bool,
}

/// Selects the kept indices for an arbitrary timestamp vector. Shared by
/// series decimation and the pipeline simulator's frame sampling.
pub fn select_indices(timestamps: &[f64], spec: &SamplingSpec) -> Result<(Vec<usize>, bool)> {
    if timestamps.is_empty() {
        return Err(Error::NoData("cannot decimate an empty series".into()));
    }
    let min_gap = timestamps
        .windows(2)
        .map(|p| p[1] - p[0])
        .fold(f64::INFINITY, f64::min);
    if spec.interval < min_gap - grid_eps(min_gap) {
        return Ok(((0..timestamps.len()).collect(), true));
    }
    let kept = match spec.mode {
        SamplingMode::TimeBased => select_time_based(timestamps, spec.interval, spec.phase),
        SamplingMode::IndexBased => select_index_based(timestamps, spec.interval, spec.phase),
    };
    Ok((kept, false))
}

pub fn decimate(series: &IndicatorSeries, spec: &SamplingSpec) -> Result<Decimated> {
    let timestamps = series.timestamps();
    let (kept, below_resolution) = select_indices(&timestamps, spec)?;
    let points = kept.iter().map(|&i| series.points()[i]).collect();
    Ok(Decimated {
        series: IndicatorSeries::new(series.kind, points, series.threshold)?,
        below_resolution,
    })
}

/// Fraction of raw points that survive sampling.
pub fn kept_fraction(raw_count: usize, sampled_count: usize) -> Result<f64> {
    if raw_count == 0 {
        return Err(Error::InvalidParameter("raw_count must be positive".into()));
    }
    if sampled_count > raw_count {
        return Err(Error::InvalidParameter(
            "sampled_count cannot exceed raw_count".into(),
        ));
    }
    Ok(sampled_count as f64 / raw_count as f64)
}
