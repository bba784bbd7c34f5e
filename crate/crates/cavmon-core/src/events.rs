//! Critical-event detection and raw-vs-sampled event matching. A critical
//! event is a maximal contiguous run of threshold-exceeding points; matching
//! classifies each raw event as detected or missed in the sampled stream and
//! measures the peak delay and magnitude error.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::indicators::IndicatorSeries;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalEvent {
    pub start: f64,
    pub end: f64,
    pub peak_time: f64,
    pub peak_value: f64,
    pub duration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Detected,
    Missed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventMatch {
    pub raw_event: CriticalEvent,
    pub outcome: Outcome,
    /// Signed: sampled extremum time minus raw peak time.
    pub delay: f64,
    /// Absolute gap between raw peak value and the sampled extremum.
    pub error: f64,
    pub sampled_peak_time: f64,
    pub sampled_peak_value: f64,
}

/// Maximal runs of consecutive critical points. The peak is the most
/// critical value in the run, earliest timestamp on ties.
pub fn detect_events(series: &IndicatorSeries) -> Vec<CriticalEvent> {
    let mut events = Vec::new();
    let points = series.points();
    let mut i = 0usize;
    while i < points.len() {
        if !series.is_critical_at(i) {
            i += 1;
            continue;
        }
        let start_idx = i;
        let mut peak_idx = i;
        while i + 1 < points.len() && series.is_critical_at(i + 1) {
            i += 1;
            if series.kind.more_critical(points[i].value, points[peak_idx].value) {
                peak_idx = i;
            }
        }
        events.push(CriticalEvent {
            start: points[start_idx].timestamp,
            end: points[i].timestamp,
            peak_time: points[peak_idx].timestamp,
            peak_value: points[peak_idx].value,
            duration: points[i].timestamp - points[start_idx].timestamp,
        });
        i += 1;
    }
    events
}

/// Matches every raw critical event against the sampled stream.
///
/// A raw event counts as detected iff at least one sampled point inside
/// [start, end] satisfies the criticality predicate. The sampled extremum is
/// searched over [start - pad, end + pad]; a sampled point whose padded
/// windows overlap several events is attributed to the event with the
/// nearest peak. When no sampled point lands in the padded window (including
/// an empty sampled series) the extremum falls back to the orientation
/// baseline at the raw peak time.
pub fn match_events(
    raw: &IndicatorSeries,
    sampled: &IndicatorSeries,
    window_pad: f64,
) -> Result<Vec<EventMatch>> {
    let events = detect_events(raw);
    let kind = raw.kind;
    let threshold = raw.threshold;

    // bucket sampled points per event
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); events.len()];
    for (j, p) in sampled.points().iter().enumerate() {
        let t = p.timestamp;
        // events are disjoint and sorted; a point inside a raw window belongs
        // to that event outright
        let mut owner: Option<usize> = None;
        let mut best_dist = f64::INFINITY;
        for (e, ev) in events.iter().enumerate() {
            if t >= ev.start && t <= ev.end {
                owner = Some(e);
                break;
            }
            if t >= ev.start - window_pad && t <= ev.end + window_pad {
                let dist = (t - ev.peak_time).abs();
                if dist < best_dist {
                    best_dist = dist;
                    owner = Some(e);
                }
            }
        }
        if let Some(e) = owner {
            buckets[e].push(j);
        }
    }

    let mut matches = Vec::with_capacity(events.len());
    for (e, ev) in events.iter().enumerate() {
        let mut detected = false;
        let mut extremum: Option<(f64, f64)> = None; // (time, value)
        for &j in &buckets[e] {
            let p = sampled.points()[j];
            if p.timestamp >= ev.start
                && p.timestamp <= ev.end
                && kind.is_critical(p.value, threshold)
            {
                detected = true;
            }
            match extremum {
                None => extremum = Some((p.timestamp, p.value)),
                Some((_, best)) if kind.more_critical(p.value, best) => {
                    extremum = Some((p.timestamp, p.value));
                }
                _ => {}
            }
        }
        let (sampled_peak_time, sampled_peak_value) = match extremum {
            Some(x) => x,
            None => (ev.peak_time, kind.baseline(threshold)),
        };
        matches.push(EventMatch {
            raw_event: *ev,
            outcome: if detected { Outcome::Detected } else { Outcome::Missed },
            delay: sampled_peak_time - ev.peak_time,
            error: (ev.peak_value - sampled_peak_value).abs(),
            sampled_peak_time,
            sampled_peak_value,
        });
    }
    Ok(matches)
}

/// Detected count over total raw events; vacuously 1.0 with no events.
pub fn success_ratio(matches: &[EventMatch]) -> f64 {
    if matches.is_empty() {
        return 1.0;
    }
    let detected = matches.iter().filter(|m| m.outcome == Outcome::Detected).count();
    detected as f64 / matches.len() as f64
}
