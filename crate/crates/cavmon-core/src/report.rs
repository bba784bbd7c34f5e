//! Assembly of the full per-indicator trade-off report: interval sweeps,
//! KS passing rates, and recommendations. The CLI serializes this document;
//! everything in it is deterministic given the seed.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indicators::{compute_with_config, IndicatorConfig, IndicatorKind};
use crate::stats::ks_passing_rate;
use crate::telemetry::TelemetryLog;
use crate::tradeoff::{recommend, recommend_uniform, sweep, BinWidths, SamplingOutcome, Weights};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    pub intervals: Vec<f64>,
    pub weights: Weights,
    pub bins: BinWidths,
    pub alpha: f64,
    pub trials: usize,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            intervals: crate::tradeoff::DEFAULT_GRID.to_vec(),
            weights: Weights::default(),
            bins: BinWidths::default(),
            alpha: 0.05,
            trials: 100,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndicatorSweep {
    pub indicator: IndicatorKind,
    pub outcomes: Vec<SamplingOutcome>,
    /// KS passing rate per interval, aligned with `outcomes`.
    pub ks_passing: Vec<f64>,
    pub recommendation: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub config: SweepConfig,
    pub sweeps: Vec<IndicatorSweep>,
    /// Indicators that could not be computed from this log, with the reason.
    pub failures: Vec<(IndicatorKind, String)>,
    pub uniform_recommendation: Option<f64>,
}

pub fn build_indicator_sweep(
    raw: &crate::indicators::IndicatorSeries,
    config: &SweepConfig,
) -> Result<IndicatorSweep> {
    let outcomes = sweep(raw, &config.intervals, &config.weights, &config.bins)?;
    let ks_passing = config
        .intervals
        .iter()
        .map(|&k| ks_passing_rate(raw, k, config.trials, config.alpha, config.seed))
        .collect::<Result<Vec<f64>>>()?;
    let recommendation = recommend(&outcomes)?;
    Ok(IndicatorSweep {
        indicator: raw.kind,
        outcomes,
        ks_passing,
        recommendation,
    })
}

/// Runs the sweep for every requested indicator that has usable data.
/// Indicators without data land in `failures`; the report errors out only
/// when every requested indicator fails.
pub fn build_sweep_report(
    log: &TelemetryLog,
    kinds: &[IndicatorKind],
    indicator_config: &IndicatorConfig,
    config: &SweepConfig,
) -> Result<SweepReport> {
    let mut sweeps = Vec::new();
    let mut failures = Vec::new();
    for &kind in kinds {
        match compute_with_config(log, kind, indicator_config)
            .and_then(|c| build_indicator_sweep(&c.series, config))
        {
            Ok(s) => sweeps.push(s),
            Err(e) => failures.push((kind, e.to_string())),
        }
    }
    if sweeps.is_empty() {
        return Err(Error::NoData(
            "no requested indicator could be computed".into(),
        ));
    }
    let map: BTreeMap<IndicatorKind, Vec<SamplingOutcome>> = sweeps
        .iter()
        .map(|s| (s.indicator, s.outcomes.clone()))
        .collect();
    let uniform_recommendation = Some(recommend_uniform(&map)?);
    Ok(SweepReport {
        config: config.clone(),
        sweeps,
        failures,
        uniform_recommendation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{EventPlan, SynthSpec};

    fn fixture_log() -> TelemetryLog {
        let mut spec = SynthSpec::new(50.0, 120.0, 11);
        spec.sd = Some(EventPlan::new(5, 2.1, -3.4));
        crate::synth::generate(&spec).unwrap().0
    }

    #[test]
    fn report_covers_requested_indicators() {
        let log = fixture_log();
        let cfg = SweepConfig {
            trials: 5,
            ..SweepConfig::default()
        };
        let report = build_sweep_report(
            &log,
            &IndicatorKind::ALL,
            &IndicatorConfig::default(),
            &cfg,
        )
        .unwrap();
        assert_eq!(report.sweeps.len(), 3);
        assert!(report.failures.is_empty());
        assert!(report.uniform_recommendation.is_some());
        for s in &report.sweeps {
            assert_eq!(s.outcomes.len(), 7);
            assert_eq!(s.ks_passing.len(), 7);
        }
    }

    #[test]
    fn missing_sensor_becomes_failure_not_error() {
        // chassis-only log
        let frames = (0..200)
            .map(|i| {
                let mut f = crate::telemetry::TelemetryFrame::at(i as f64 * 0.02);
                f.long_accel = Some(0.0);
                f
            })
            .collect();
        let log = TelemetryLog::new(frames, 2.0).unwrap();
        let cfg = SweepConfig {
            trials: 2,
            ..SweepConfig::default()
        };
        let report = build_sweep_report(
            &log,
            &IndicatorKind::ALL,
            &IndicatorConfig::default(),
            &cfg,
        )
        .unwrap();
        assert_eq!(report.sweeps.len(), 1);
        assert_eq!(report.failures.len(), 2);
    }

    #[test]
    fn report_is_deterministic() {
        let log = fixture_log();
        let cfg = SweepConfig {
            trials: 10,
            seed: 42,
            ..SweepConfig::default()
        };
        let kinds = [IndicatorKind::SevereDeceleration];
        let a = build_sweep_report(&log, &kinds, &IndicatorConfig::default(), &cfg).unwrap();
        let b = build_sweep_report(&log, &kinds, &IndicatorConfig::default(), &cfg).unwrap();
        assert_eq!(
            serde_json::to_vec(&a).unwrap(),
            serde_json::to_vec(&b).unwrap()
        );
    }
}
