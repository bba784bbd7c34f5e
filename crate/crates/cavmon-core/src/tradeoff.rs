//! The communication-vs-reliability objective: compression ratio and
//! detection success combined into a weighted sum, swept over candidate
//! sampling intervals to pick per-indicator and uniform recommendations.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{match_events, success_ratio, Outcome};
use crate::indicators::{IndicatorKind, IndicatorSeries};
use crate::sampling::{decimate, SamplingSpec};
use crate::stats::{summarize, DistributionSummary};

/// Candidate sampling intervals evaluated by default, in seconds.
pub const DEFAULT_GRID: [f64; 7] = [0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub w_com: f64,
    pub w_rel: f64,
}

impl Weights {
    pub fn new(w_com: f64, w_rel: f64) -> Result<Self> {
        let ok = (0.0..=1.0).contains(&w_com)
            && (0.0..=1.0).contains(&w_rel)
            && (w_com + w_rel - 1.0).abs() < 1e-9;
        if !ok {
            return Err(Error::InvalidParameter(format!(
                "weights must lie in [0,1] and sum to 1, got ({w_com}, {w_rel})"
            )));
        }
        Ok(Weights { w_com, w_rel })
    }
}

impl Default for Weights {
    fn default() -> Self {
        Weights { w_com: 0.5, w_rel: 0.5 }
    }
}

/// Histogram bin widths for the delay and error summaries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinWidths {
    /// Seconds per delay bin.
    pub delay: f64,
    /// Indicator units per error bin.
    pub error: f64,
}

impl Default for BinWidths {
    fn default() -> Self {
        BinWidths { delay: 0.05, error: 0.1 }
    }
}

/// Per-interval evaluation of one indicator under decimation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingOutcome {
    pub indicator: IndicatorKind,
    pub interval: f64,
    pub success_ratio: f64,
    pub compression_ratio: f64,
    pub weighted_sum: f64,
    pub raw_events: usize,
    pub detected_events: usize,
    pub delay_summary: Option<DistributionSummary>,
    pub error_summary: Option<DistributionSummary>,
    pub missed_delay_summary: Option<DistributionSummary>,
    pub missed_error_summary: Option<DistributionSummary>,
}

/// Fractional reduction in transmitted record count relative to raw.
pub fn compression_ratio(raw_count: usize, sampled_count: usize) -> Result<f64> {
    if raw_count == 0 {
        return Err(Error::InvalidParameter("raw_count must be positive".into()));
    }
    if sampled_count > raw_count {
        return Err(Error::InvalidParameter(
            "sampled_count cannot exceed raw_count".into(),
        ));
    }
    Ok(1.0 - sampled_count as f64 / raw_count as f64)
}

/// Decimates, matches events, and assembles the weighted objective for one
/// (indicator, interval) pair. The event-match window pad is the sampling
/// interval itself.
pub fn evaluate(
    raw: &IndicatorSeries,
    interval: f64,
    phase: f64,
    weights: &Weights,
    bins: &BinWidths,
) -> Result<SamplingOutcome> {
    let spec = SamplingSpec::new(interval, phase)?;
    let sampled = decimate(raw, &spec)?;
    let matches = match_events(raw, &sampled.series, interval)?;
    let x_suc = success_ratio(&matches);
    let x_comp = compression_ratio(raw.len(), sampled.series.len())?;

    let split = |outcome: Outcome| -> (Vec<f64>, Vec<f64>) {
        let mut delays = Vec::new();
        let mut errors = Vec::new();
        for m in matches.iter().filter(|m| m.outcome == outcome) {
            delays.push(m.delay);
            errors.push(m.error);
        }
        (delays, errors)
    };
    let (det_delays, det_errors) = split(Outcome::Detected);
    let (mis_delays, mis_errors) = split(Outcome::Missed);
    let opt_summary = |vals: &[f64], width: f64| -> Option<DistributionSummary> {
        if vals.is_empty() {
            None
        } else {
            Some(summarize(vals, width).expect("non-empty sample with positive bin width"))
        }
    };

    Ok(SamplingOutcome {
        indicator: raw.kind,
        interval,
        success_ratio: x_suc,
        compression_ratio: x_comp,
        weighted_sum: weights.w_com * x_comp + weights.w_rel * x_suc,
        raw_events: matches.len(),
        detected_events: matches
            .iter()
            .filter(|m| m.outcome == Outcome::Detected)
            .count(),
        delay_summary: opt_summary(&det_delays, bins.delay),
        error_summary: opt_summary(&det_errors, bins.error),
        missed_delay_summary: opt_summary(&mis_delays, bins.delay),
        missed_error_summary: opt_summary(&mis_errors, bins.error),
    })
}

/// Evaluates every interval in input order (phase 0).
pub fn sweep(
    raw: &IndicatorSeries,
    intervals: &[f64],
    weights: &Weights,
    bins: &BinWidths,
) -> Result<Vec<SamplingOutcome>> {
    if intervals.is_empty() {
        return Err(Error::InvalidParameter("interval grid is empty".into()));
    }
    intervals
        .iter()
        .map(|&k| evaluate(raw, k, 0.0, weights, bins))
        .collect()
}

/// The interval with maximum weighted sum, ties toward the smallest interval.
pub fn recommend(outcomes: &[SamplingOutcome]) -> Result<f64> {
    if outcomes.is_empty() {
        return Err(Error::InvalidParameter("no outcomes to recommend from".into()));
    }
    let mut best = &outcomes[0];
    for o in &outcomes[1..] {
        if o.weighted_sum > best.weighted_sum
            || (o.weighted_sum == best.weighted_sum && o.interval < best.interval)
        {
            best = o;
        }
    }
    Ok(best.interval)
}

/// One interval for all indicators: argmax of the mean weighted sum across
/// indicators, ties toward the smallest interval. All sweeps must share the
/// same interval grid.
pub fn recommend_uniform(
    per_indicator: &BTreeMap<IndicatorKind, Vec<SamplingOutcome>>,
) -> Result<f64> {
    let mut iter = per_indicator.values();
    let first = iter
        .next()
        .ok_or_else(|| Error::InvalidParameter("no indicator sweeps given".into()))?;
    let grid: Vec<f64> = first.iter().map(|o| o.interval).collect();
    for outcomes in per_indicator.values() {
        let g: Vec<f64> = outcomes.iter().map(|o| o.interval).collect();
        if g != grid {
            return Err(Error::MismatchedGrids);
        }
    }
    let n = per_indicator.len() as f64;
    let mut best: Option<(f64, f64)> = None; // (interval, mean ws)
    for (i, &k) in grid.iter().enumerate() {
        let mean = per_indicator.values().map(|o| o[i].weighted_sum).sum::<f64>() / n;
        best = match best {
            None => Some((k, mean)),
            Some((bk, bm)) if mean > bm || (mean == bm && k < bk) => Some((k, mean)),
            keep => keep,
        };
    }
    Ok(best.unwrap().0)
}
