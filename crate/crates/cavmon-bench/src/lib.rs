//! Shared fixtures for the criterion benches.

use cavmon_core::synth::{EventPlan, SynthSpec};
use cavmon_core::TelemetryLog;

/// 50 Hz log with planted events for all three indicators.
pub fn bench_log(duration_s: f64, seed: u64) -> TelemetryLog {
    let mut spec = SynthSpec::new(50.0, duration_s, seed);
    spec.sd = Some(EventPlan::new(10, 2.1, -3.4).with_jitter(0.5));
    spec.lpv = Some(EventPlan::new(5, 19.99, 0.1).with_jitter(0.2));
    spec.ittc = Some(EventPlan::new(10, 0.1, 2.5).with_jitter(0.5));
    cavmon_core::synth::generate(&spec).expect("bench fixture").0
}
