//! Empirical-distribution machinery: ECDF, the two-sample
//! Kolmogorov-Smirnov statistic and test, randomized decimation passing
//! rate, and histogram mode / standard deviation summaries.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indicators::IndicatorSeries;
use crate::sampling::{decimate, SamplingSpec};

/// Empirical cumulative distribution function over a sorted sample.
#[derive(Debug, Clone)]
pub struct Ecdf {
    values: Vec<f64>,
}

impl Ecdf {
    pub fn new(mut sample: Vec<f64>) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::EmptySample);
        }
        sample.sort_by(f64::total_cmp);
        Ok(Ecdf { values: sample })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// F(x) = fraction of sample values <= x (right-continuous step function).
    pub fn eval(&self, x: f64) -> f64 {
        let idx = self.values.partition_point(|&v| v <= x);
        idx as f64 / self.values.len() as f64
    }

    pub fn sorted_values(&self) -> &[f64] {
        &self.values
    }
}

/// Exact supremum distance between the ECDFs of two samples, evaluated by a
/// merge walk over the combined sorted support.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    let a = Ecdf::new(a.to_vec())?;
    let b = Ecdf::new(b.to_vec())?;
    Ok(ks_statistic_sorted(&a, &b))
}

/// KS statistic over pre-built ECDFs; avoids re-sorting in tight loops.
pub fn ks_statistic_sorted(a: &Ecdf, b: &Ecdf) -> f64 {
    let xs = a.sorted_values();
    let ys = b.sorted_values();
    let (n, m) = (xs.len() as u64, ys.len() as u64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut best = 0u64;
    while i < xs.len() || j < ys.len() {
        let take_a = match (xs.get(i), ys.get(j)) {
            (Some(&x), Some(&y)) => x <= y,
            (Some(_), None) => true,
            _ => false,
        };
        // advance both samples past the current support point, then compare
        // the ECDF values from exact integer counts
        if take_a {
            let x = xs[i];
            while i < xs.len() && xs[i] == x {
                i += 1;
            }
            while j < ys.len() && ys[j] == x {
                j += 1;
            }
        } else {
            let y = ys[j];
            while j < ys.len() && ys[j] == y {
                j += 1;
            }
        }
        // |i/n - j/m| as an exact integer numerator over n*m, so analytic
        // cases like 1/3 come out to the nearest representable value
        best = best.max((i as u64 * m).abs_diff(j as u64 * n));
    }
    best as f64 / (n * m) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub critical_value: f64,
    pub pass: bool,
}

fn ks_coefficient(alpha: f64) -> f64 {
    // asymptotic two-sample coefficient; c(0.05) = 1.358
    (-0.5 * (alpha / 2.0).ln()).sqrt()
}

/// Two-sample KS test at significance `alpha` using the asymptotic critical
/// value c(alpha) * sqrt((n+m)/(n*m)).
pub fn ks_test(a: &[f64], b: &[f64], alpha: f64) -> Result<KsResult> {
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    let statistic = ks_statistic(a, b)?;
    let (n, m) = (a.len() as f64, b.len() as f64);
    let critical_value = ks_coefficient(alpha) * ((n + m) / (n * m)).sqrt();
    Ok(KsResult {
        statistic,
        critical_value,
        pass: statistic <= critical_value,
    })
}

/// Fraction of seeded random-phase decimation trials whose sampled value
/// distribution passes the KS test against the raw values. Fully
/// deterministic for a given seed; per-trial generators are derived from
/// (seed, trial index).
pub fn ks_passing_rate(
    raw: &IndicatorSeries,
    interval: f64,
    trials: usize,
    alpha: f64,
    seed: u64,
) -> Result<f64> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    if !(interval > 0.0) {
        return Err(Error::InvalidParameter("interval must be positive".into()));
    }
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    if raw.is_empty() {
        return Err(Error::EmptySample);
    }
    let raw_ecdf = Ecdf::new(raw.values())?;
    let n = raw.len() as f64;
    let coeff = ks_coefficient(alpha);
    let mut passes = 0usize;
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial as u64);
        let phase = rng.gen::<f64>() * interval;
        let spec = SamplingSpec::new(interval, phase)?;
        let sampled = match decimate(raw, &spec) {
            Ok(d) => d.series,
            Err(_) => continue, // trial counted as fail
        };
        if sampled.is_empty() {
            continue;
        }
        let sampled_ecdf = Ecdf::new(sampled.values())?;
        let d = ks_statistic_sorted(&raw_ecdf, &sampled_ecdf);
        let m = sampled.len() as f64;
        let critical = coeff * ((n + m) / (n * m)).sqrt();
        if d <= critical {
            passes += 1;
        }
    }
    Ok(passes as f64 / trials as f64)
}

/// Histogram mode and population standard deviation of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    /// Midpoint of the densest histogram bin (lowest bin on ties).
    pub mode: f64,
    pub std_dev: f64,
    pub bin_width: f64,
    pub count: usize,
}

/// Builds a fixed-width histogram anchored at the sample minimum and reports
/// its modal bin midpoint plus the population standard deviation.
pub fn summarize(values: &[f64], bin_width: f64) -> Result<DistributionSummary> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    if !(bin_width > 0.0) {
        return Err(Error::InvalidParameter("bin_width must be positive".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std_dev = var.sqrt();

    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mode = if min == max {
        // degenerate sample: one bin, report the value itself
        min
    } else {
        let nbins = ((max - min) / bin_width).floor() as usize + 1;
        let mut counts = vec![0usize; nbins];
        for &v in values {
            let idx = (((v - min) / bin_width).floor() as usize).min(nbins - 1);
            counts[idx] += 1;
        }
        let best = counts
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .unwrap();
        min + (best as f64 + 0.5) * bin_width
    };
    Ok(DistributionSummary {
        mode,
        std_dev,
        bin_width,
        count: values.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indicators::{IndicatorKind, SeriesPoint};

    #[test]
    fn ks_identical_samples() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(ks_statistic(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn ks_disjoint_supports() {
        let a = [1.0, 2.0, 3.0];
        let b = [4.0, 5.0, 6.0];
        assert_eq!(ks_statistic(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn ks_shifted_thirds() {
        let a = [1.0, 2.0, 3.0];
        let b = [2.0, 3.0, 4.0];
        assert!((ks_statistic(&a, &b).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn ks_is_symmetric() {
        let a = [0.3, 1.7, 2.2, 5.0];
        let b = [0.1, 1.9, 3.3];
        assert_eq!(ks_statistic(&a, &b).unwrap(), ks_statistic(&b, &a).unwrap());
    }

    #[test]
    fn ks_empty_sample_rejected() {
        assert!(matches!(ks_statistic(&[], &[1.0]), Err(Error::EmptySample)));
    }

    #[test]
    fn ks_test_disjoint_fails_at_n100() {
        let a: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..100).map(|i| 1000.0 + i as f64).collect();
        let r = ks_test(&a, &b, 0.05).unwrap();
        assert_eq!(r.statistic, 1.0);
        assert!((r.critical_value - 1.358 * (200.0f64 / 10000.0).sqrt()).abs() < 1e-3);
        assert!(!r.pass);
    }

    #[test]
    fn ks_test_identical_passes() {
        let a: Vec<f64> = (0..100).map(|i| (i as f64).sin()).collect();
        let r = ks_test(&a, &a, 0.05).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(r.pass);
    }

    #[test]
    fn ks_test_tiny_samples_pass() {
        let a = [1.0, 2.0];
        let r = ks_test(&a, &a, 0.05).unwrap();
        assert!(r.pass);
        assert!((r.critical_value - 1.358).abs() < 1e-2);
    }

    #[test]
    fn ks_test_alpha_validated() {
        assert!(matches!(ks_test(&[1.0], &[1.0], 0.0), Err(Error::InvalidAlpha(_))));
        assert!(matches!(ks_test(&[1.0], &[1.0], 1.0), Err(Error::InvalidAlpha(_))));
    }

    fn ramp_series(n: usize, gap: f64) -> IndicatorSeries {
        let points = (0..n)
            .map(|i| SeriesPoint {
                timestamp: i as f64 * gap,
                value: (i as f64 * 0.37).sin(),
            })
            .collect();
        IndicatorSeries::new(IndicatorKind::SevereDeceleration, points, -2.94).unwrap()
    }

    #[test]
    fn passing_rate_identity_decimation_is_one() {
        let raw = ramp_series(200, 0.05);
        let rate = ks_passing_rate(&raw, 0.05, 10, 0.05, 42).unwrap();
        assert_eq!(rate, 1.0);
    }

    #[test]
    fn passing_rate_single_trial_is_bernoulli() {
        let raw = ramp_series(200, 0.05);
        let rate = ks_passing_rate(&raw, 1.0, 1, 0.05, 7).unwrap();
        assert!(rate == 0.0 || rate == 1.0);
    }

    #[test]
    fn passing_rate_deterministic_per_seed() {
        let raw = ramp_series(500, 0.05);
        let r1 = ks_passing_rate(&raw, 2.0, 50, 0.05, 99).unwrap();
        let r2 = ks_passing_rate(&raw, 2.0, 50, 0.05, 99).unwrap();
        assert_eq!(r1, r2);
    }

    #[test]
    fn summarize_degenerate() {
        let s = summarize(&[3.5, 3.5, 3.5], 0.1).unwrap();
        assert_eq!(s.mode, 3.5);
        assert_eq!(s.std_dev, 0.0);
    }

    #[test]
    fn summarize_hand_case() {
        let s = summarize(&[0.0, 0.0, 1.0], 0.5).unwrap();
        assert!((s.mode - 0.25).abs() < 1e-12);
        assert!((s.std_dev - std::f64::consts::SQRT_2 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn summarize_tie_takes_lowest_bin() {
        let s = summarize(&[1.0, 2.0], 1.0).unwrap();
        assert!((s.mode - 1.5).abs() < 1e-12);
    }

    #[test]
    fn summarize_rejects_bad_input() {
        assert!(summarize(&[], 0.1).is_err());
        assert!(summarize(&[1.0], 0.0).is_err());
    }

    #[test]
    fn ecdf_eval_steps() {
        let e = Ecdf::new(vec![1.0, 2.0, 2.0, 3.0]).unwrap();
        assert_eq!(e.eval(0.5), 0.0);
        assert_eq!(e.eval(1.0), 0.25);
        assert_eq!(e.eval(2.0), 0.75);
        assert_eq!(e.eval(10.0), 1.0);
    }
}
