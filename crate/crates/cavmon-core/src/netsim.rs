//! Deterministic discrete-event simulation of the OBU -> RSU -> TMC
//! monitoring pipeline: sampled frames are batched into fixed-layout wire
//! messages, pushed through a bandwidth-constrained FIFO channel with a
//! bounded drop-tail queue, and decoded server-side into indicator series.
//!
//! Wire layout (little-endian, all offsets in bytes):
//!
//! ```text
//! header (24 bytes)
//!   0      magic      0xC5
//!   1      version    0x01
//!   2..8   vehicle id (low 48 bits)
//!   8..16  sequence   u64
//!   16..24 generated_at f64 bits
//! record (40 bytes each)
//!   0..8   timestamp  f64 bits
//!   8..16  presence flags u64 (bit0 sd, bit1 lpv, bit2 ittc)
//!   16..24 sd value   f64 bits (zero when absent)
//!   24..32 lpv value  f64 bits
//!   32..40 ittc value f64 bits
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indicators::{
    ittc_value, lpv_value, sd_value, IndicatorConfig, IndicatorKind, IndicatorSeries, SeriesPoint,
};
use crate::sampling::{select_indices, SamplingSpec};
use crate::telemetry::TelemetryLog;

pub const MAGIC: u8 = 0xC5;
pub const VERSION: u8 = 0x01;
pub const HEADER_BYTES: usize = 24;
pub const RECORD_BYTES: usize = 40;
const MAX_VEHICLE_ID: u64 = (1 << 48) - 1;

/// One sampled frame reduced to the fields the safety indicators need.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampledRecord {
    pub timestamp: f64,
    pub sd: Option<f64>,
    pub lpv: Option<f64>,
    pub ittc: Option<f64>,
}

impl SampledRecord {
    pub fn from_frame(
        frame: &crate::telemetry::TelemetryFrame,
        vehicle_width: f64,
        config: &IndicatorConfig,
    ) -> Self {
        SampledRecord {
            timestamp: frame.timestamp,
            sd: sd_value(frame),
            lpv: lpv_value(frame, vehicle_width),
            ittc: ittc_value(frame, config.range_rate_sign),
        }
    }
}

/// Wire envelope carrying a batch of sampled records.
#[derive(Debug, Clone, PartialEq)]
pub struct V2xMessage {
    pub vehicle_id: u64,
    pub sequence: u64,
    pub generated_at: f64,
    pub payload: Vec<SampledRecord>,
}

impl V2xMessage {
    pub fn encoded_size(&self) -> usize {
        HEADER_BYTES + RECORD_BYTES * self.payload.len()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(self.encoded_size());
        buf.push(MAGIC);
        buf.push(VERSION);
        buf.extend_from_slice(&self.vehicle_id.to_le_bytes()[..6]);
        buf.extend_from_slice(&self.sequence.to_le_bytes());
        buf.extend_from_slice(&self.generated_at.to_bits().to_le_bytes());
        for r in &self.payload {
            let mut flags = 0u64;
            if r.sd.is_some() {
                flags |= 1;
            }
            if r.lpv.is_some() {
                flags |= 2;
            }
            if r.ittc.is_some() {
                flags |= 4;
            }
            buf.extend_from_slice(&r.timestamp.to_bits().to_le_bytes());
            buf.extend_from_slice(&flags.to_le_bytes());
            for v in [r.sd, r.lpv, r.ittc] {
                buf.extend_from_slice(&v.unwrap_or(0.0).to_bits().to_le_bytes());
            }
        }
        buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<V2xMessage> {
        if bytes.len() < HEADER_BYTES {
            return Err(Error::Decode(format!(
                "truncated header: {} bytes",
                bytes.len()
            )));
        }
        if bytes[0] != MAGIC || bytes[1] != VERSION {
            return Err(Error::Decode(format!(
                "bad magic/version {:#04x} {:#04x}",
                bytes[0], bytes[1]
            )));
        }
        if !(bytes.len() - HEADER_BYTES).is_multiple_of(RECORD_BYTES) {
            return Err(Error::Decode(format!(
                "payload length {} is not a whole number of records",
                bytes.len() - HEADER_BYTES
            )));
        }
        let u64_at = |off: usize| u64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
        let f64_at = |off: usize| f64::from_bits(u64_at(off));
        let mut id_bytes = [0u8; 8];
        id_bytes[..6].copy_from_slice(&bytes[2..8]);
        let vehicle_id = u64::from_le_bytes(id_bytes);
        let sequence = u64_at(8);
        let generated_at = f64_at(16);
        let n_records = (bytes.len() - HEADER_BYTES) / RECORD_BYTES;
        let mut payload = Vec::with_capacity(n_records);
        for i in 0..n_records {
            let base = HEADER_BYTES + i * RECORD_BYTES;
            let flags = u64_at(base + 8);
            if flags & !0b111 != 0 {
                return Err(Error::Decode(format!("unknown record flags {flags:#x}")));
            }
            let pick = |bit: u64, off: usize| {
                if flags & bit != 0 {
                    Some(f64_at(off))
                } else {
                    None
                }
            };
            payload.push(SampledRecord {
                timestamp: f64_at(base),
                sd: pick(1, base + 16),
                lpv: pick(2, base + 24),
                ittc: pick(4, base + 32),
            });
        }
        Ok(V2xMessage {
            vehicle_id,
            sequence,
            generated_at,
            payload,
        })
    }
}

/// Packages a non-empty batch of sampled records into a message.
pub fn encode(
    records: Vec<SampledRecord>,
    vehicle_id: u64,
    sequence: u64,
    clock: f64,
) -> Result<V2xMessage> {
    if records.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if vehicle_id > MAX_VEHICLE_ID {
        return Err(Error::InvalidParameter(format!(
            "vehicle_id must fit in 48 bits, got {vehicle_id}"
        )));
    }
    for pair in records.windows(2) {
        if pair[1].timestamp < pair[0].timestamp {
            return Err(Error::InvalidParameter(
                "payload timestamps must be sorted".into(),
            ));
        }
    }
    Ok(V2xMessage {
        vehicle_id,
        sequence,
        generated_at: clock,
        payload: records,
    })
}

/// Recovers the payload of a wire-encoded message.
pub fn decode(bytes: &[u8]) -> Result<V2xMessage> {
    V2xMessage::from_bytes(bytes)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub capacity_bps: f64,
    pub queue_limit: usize,
    pub propagation_delay: f64,
}

impl ChannelModel {
    pub fn new(capacity_bps: f64, queue_limit: usize, propagation_delay: f64) -> Result<Self> {
        if !(capacity_bps > 0.0) {
            return Err(Error::InvalidParameter("capacity must be positive".into()));
        }
        if queue_limit < 1 {
            return Err(Error::InvalidParameter("queue_limit must be >= 1".into()));
        }
        if propagation_delay < 0.0 {
            return Err(Error::InvalidParameter(
                "propagation_delay must be non-negative".into(),
            ));
        }
        Ok(ChannelModel {
            capacity_bps,
            queue_limit,
            propagation_delay,
        })
    }

    /// Average LTE uplink: 23.6 Mbps.
    pub fn lte() -> Self {
        ChannelModel {
            capacity_bps: 23.6e6,
            queue_limit: 1024,
            propagation_delay: 0.01,
        }
    }

    /// Maximum WAVE (802.11p) rate: 27 Mbps.
    pub fn wave() -> Self {
        ChannelModel {
            capacity_bps: 27.0e6,
            queue_limit: 1024,
            propagation_delay: 0.01,
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "lte" => Some(Self::lte()),
            "wave" => Some(Self::wave()),
            _ => None,
        }
    }
}

/// Outcome of offering one message to the channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Offer {
    /// Accepted; transmission completes (delivery excludes propagation) at
    /// the contained time.
    Delivered { delivery_time: f64 },
    Dropped,
}

/// Single-server FIFO transmission queue with drop-tail admission.
#[derive(Debug, Clone)]
pub struct FifoChannel {
    model: ChannelModel,
    server_free_at: f64,
    /// Transmission-completion times of accepted messages, for occupancy.
    completions: Vec<f64>,
}

impl FifoChannel {
    pub fn new(model: ChannelModel) -> Self {
        FifoChannel {
            model,
            server_free_at: f64::NEG_INFINITY,
            completions: Vec::new(),
        }
    }

    /// Offers a message of `size_bytes` arriving at `arrival`. Arrival times
    /// must be non-decreasing across calls.
    pub fn offer(&mut self, arrival: f64, size_bytes: usize) -> Offer {
        let in_system = self
            .completions
            .iter()
            .filter(|&&done| done > arrival)
            .count();
        if in_system >= self.model.queue_limit {
            return Offer::Dropped;
        }
        let transmission = size_bytes as f64 * 8.0 / self.model.capacity_bps;
        let start = arrival.max(self.server_free_at);
        let done = start + transmission;
        self.server_free_at = done;
        self.completions.push(done);
        Offer::Delivered {
            delivery_time: done + self.model.propagation_delay,
        }
    }

    pub fn model(&self) -> &ChannelModel {
        &self.model
    }
}

#[derive(Debug, Clone)]
pub struct PipelineReport {
    /// Per delivered message: TMC decode time minus message generation time.
    pub latencies: Vec<f64>,
    /// Per delivered record: TMC decode time minus frame capture time
    /// (includes the batching wait).
    pub frame_latencies: Vec<f64>,
    pub generated: usize,
    pub delivered: usize,
    pub dropped: usize,
    pub in_queue_at_end: usize,
    pub reorder_flagged: bool,
    pub delivered_bytes: usize,
    pub throughput_bytes_per_s: f64,
    /// Indicator series recomputed server-side from delivered records.
    pub tmc_series: Vec<IndicatorSeries>,
    /// OBU-side ground truth: every record that was sampled, delivered or not.
    pub sampled_records: Vec<SampledRecord>,
}

impl PipelineReport {
    pub fn tmc_series_for(&self, kind: IndicatorKind) -> Option<&IndicatorSeries> {
        self.tmc_series.iter().find(|s| s.kind == kind)
    }
}

/// Builds the indicator series a receiver would compute directly from a set
/// of sampled records — the reference side of the losslessness check.
pub fn direct_series(
    records: &[SampledRecord],
    kind: IndicatorKind,
    config: &IndicatorConfig,
) -> Result<IndicatorSeries> {
    let threshold = match kind {
        IndicatorKind::SevereDeceleration => config.sd_threshold,
        IndicatorKind::LateralPositionVariation => config.lpv_threshold,
        IndicatorKind::InverseTimeToCollision => config.ittc_threshold,
    };
    let points = records
        .iter()
        .filter_map(|r| {
            let value = match kind {
                IndicatorKind::SevereDeceleration => r.sd,
                IndicatorKind::LateralPositionVariation => r.lpv,
                IndicatorKind::InverseTimeToCollision => r.ittc,
            }?;
            Some(SeriesPoint {
                timestamp: r.timestamp,
                value,
            })
        })
        .collect();
    IndicatorSeries::new(kind, points, threshold)
}

pub fn simulate(
    log: &TelemetryLog,
    sampling: &SamplingSpec,
    batch_interval: f64,
    channel: &ChannelModel,
) -> Result<PipelineReport> {
    simulate_with_options(
        log,
        sampling,
        batch_interval,
        channel,
        &IndicatorConfig::default(),
        None,
    )
}

/// Full-control variant: custom indicator config and an optional time
/// horizon. Messages not yet delivered at the horizon stay in the queue.
pub fn simulate_with_options(
    log: &TelemetryLog,
    sampling: &SamplingSpec,
    batch_interval: f64,
    channel: &ChannelModel,
    config: &IndicatorConfig,
    horizon: Option<f64>,
) -> Result<PipelineReport> {
    if batch_interval < sampling.interval {
        return Err(Error::InvalidParameter(format!(
            "batch_interval {batch_interval} must be >= sampling interval {}",
            sampling.interval
        )));
    }
    if log.is_empty() {
        return Err(Error::NoData("cannot simulate an empty log".into()));
    }

    // OBU: sample, then reduce frames to indicator-relevant records
    let timestamps = log.timestamps();
    let (kept, _) = select_indices(&timestamps, sampling)?;
    let width = log.vehicle_width();
    let sampled_records: Vec<SampledRecord> = kept
        .iter()
        .map(|&i| SampledRecord::from_frame(&log.frames()[i], width, config))
        .collect();

    // batch ticks at t0 + i * batch_interval; a tick packages everything
    // sampled since the previous tick
    let t0 = timestamps[0];
    let mut batches: Vec<(f64, Vec<SampledRecord>)> = Vec::new();
    let mut tick_index = 1u64;
    let mut tick = t0 + batch_interval;
    let mut current: Vec<SampledRecord> = Vec::new();
    for rec in &sampled_records {
        while rec.timestamp > tick {
            if !current.is_empty() {
                batches.push((tick, std::mem::take(&mut current)));
            }
            tick_index += 1;
            tick = t0 + tick_index as f64 * batch_interval;
        }
        current.push(*rec);
    }
    if !current.is_empty() {
        batches.push((tick, current));
    }

    // RSU uplink
    const VEHICLE_ID: u64 = 1;
    let mut fifo = FifoChannel::new(*channel);
    let mut delivered_msgs: Vec<(f64, Vec<u8>)> = Vec::new();
    let mut dropped = 0usize;
    let mut in_queue = 0usize;
    let generated = batches.len();
    for (seq, (tick, records)) in batches.into_iter().enumerate() {
        let msg = encode(records, VEHICLE_ID, seq as u64, tick)?;
        let bytes = msg.to_bytes();
        match fifo.offer(tick, bytes.len()) {
            Offer::Dropped => dropped += 1,
            Offer::Delivered { delivery_time } => {
                if horizon.is_some_and(|h| delivery_time > h) {
                    in_queue += 1;
                } else {
                    delivered_msgs.push((delivery_time, bytes));
                }
            }
        }
    }

    // TMC: decode, track sequence ordering, rebuild indicator series
    let mut latencies = Vec::with_capacity(delivered_msgs.len());
    let mut frame_latencies = Vec::new();
    let mut delivered_records: Vec<SampledRecord> = Vec::new();
    let mut delivered_bytes = 0usize;
    let mut reorder_flagged = false;
    let mut last_seq: Option<u64> = None;
    let mut last_delivery = t0;
    for (delivery_time, bytes) in &delivered_msgs {
        let msg = decode(bytes)?;
        if let Some(prev) = last_seq {
            if msg.sequence <= prev {
                reorder_flagged = true;
            }
        }
        last_seq = Some(msg.sequence);
        latencies.push(delivery_time - msg.generated_at);
        for r in &msg.payload {
            frame_latencies.push(delivery_time - r.timestamp);
            delivered_records.push(*r);
        }
        delivered_bytes += bytes.len();
        last_delivery = last_delivery.max(*delivery_time);
    }

    let mut tmc_series = Vec::new();
    for kind in IndicatorKind::ALL {
        let series = direct_series(&delivered_records, kind, config)?;
        if !series.is_empty() {
            tmc_series.push(series);
        }
    }

    let elapsed = last_delivery - t0;
    let throughput_bytes_per_s = if elapsed > 0.0 {
        delivered_bytes as f64 / elapsed
    } else {
        0.0
    };

    Ok(PipelineReport {
        latencies,
        frame_latencies,
        generated,
        delivered: delivered_msgs.len(),
        dropped,
        in_queue_at_end: in_queue,
        reorder_flagged,
        delivered_bytes,
        throughput_bytes_per_s,
        tmc_series,
        sampled_records,
    })
}

/// True iff the server-side series exactly matches the reference series
/// computed directly from the sampled frames. With drops (or messages still
/// queued) the comparison is restricted to delivered points, which must
/// still appear verbatim in the reference.
pub fn end_to_end_check(report: &PipelineReport, direct: &IndicatorSeries) -> bool {
    let empty = IndicatorSeries::new(direct.kind, vec![], direct.threshold)
        .expect("empty series is always valid");
    let tmc = report.tmc_series_for(direct.kind).unwrap_or(&empty);
    if report.dropped == 0 && report.in_queue_at_end == 0 {
        return tmc.points() == direct.points();
    }
    // subsequence check, exact on both timestamp and value
    let mut it = direct.points().iter();
    tmc.points()
        .iter()
        .all(|p| it.any(|q| q.timestamp == p.timestamp && q.value == p.value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::telemetry::TelemetryFrame;

    fn record(t: f64) -> SampledRecord {
        SampledRecord {
            timestamp: t,
            sd: Some(-1.25 * t),
            lpv: None,
            ittc: Some(0.5),
        }
    }

    #[test]
    fn encoded_size_formula() {
        let one = encode(vec![record(0.0)], 1, 0, 0.0).unwrap();
        assert_eq!(one.encoded_size(), 64);
        assert_eq!(one.to_bytes().len(), 64);
        let ten = encode((0..10).map(|i| record(i as f64)).collect(), 1, 0, 0.0).unwrap();
        assert_eq!(ten.encoded_size(), 424);
    }

    #[test]
    fn round_trip_is_exact() {
        let msg = encode(
            vec![
                SampledRecord { timestamp: 0.1, sd: Some(-3.4), lpv: Some(0.19), ittc: None },
                SampledRecord { timestamp: 0.2, sd: None, lpv: None, ittc: Some(2.995) },
                SampledRecord { timestamp: 0.3, sd: Some(0.0), lpv: Some(0.7), ittc: Some(-0.5) },
            ],
            0xABCD,
            7,
            12.5,
        )
        .unwrap();
        let back = decode(&msg.to_bytes()).unwrap();
        assert_eq!(back, msg);
    }

    #[test]
    fn truncated_stream_rejected() {
        let msg = encode(vec![record(0.0)], 1, 0, 0.0).unwrap();
        let bytes = msg.to_bytes();
        assert!(decode(&bytes[..10]).is_err());
        assert!(decode(&bytes[..bytes.len() - 3]).is_err());
    }

    #[test]
    fn bad_magic_rejected() {
        let msg = encode(vec![record(0.0)], 1, 0, 0.0).unwrap();
        let mut bytes = msg.to_bytes();
        bytes[0] = 0x00;
        assert!(decode(&bytes).is_err());
    }

    #[test]
    fn empty_batch_rejected() {
        assert!(matches!(encode(vec![], 1, 0, 0.0), Err(Error::EmptyBatch)));
    }

    #[test]
    fn vehicle_id_fits_48_bits() {
        assert!(encode(vec![record(0.0)], 1 << 48, 0, 0.0).is_err());
        assert!(encode(vec![record(0.0)], (1 << 48) - 1, 0, 0.0).is_ok());
    }

    #[test]
    fn fifo_serves_in_order() {
        let model = ChannelModel::new(27e6, 16, 0.01).unwrap();
        let mut ch = FifoChannel::new(model);
        let s = 424.0 * 8.0 / 27e6;
        for i in 1..=3 {
            match ch.offer(0.0, 424) {
                Offer::Delivered { delivery_time } => {
                    assert!((delivery_time - (i as f64 * s + 0.01)).abs() < 1e-12);
                }
                Offer::Dropped => panic!("unexpected drop"),
            }
        }
    }

    #[test]
    fn queue_limit_drops_newest() {
        let model = ChannelModel::new(1e3, 1, 0.0).unwrap();
        let mut ch = FifoChannel::new(model);
        assert!(matches!(ch.offer(0.0, 1000), Offer::Delivered { .. }));
        assert!(matches!(ch.offer(0.0, 1000), Offer::Dropped));
    }

    fn sim_log(n: usize, gap: f64) -> TelemetryLog {
        let frames = (0..n)
            .map(|i| {
                let mut f = TelemetryFrame::at(i as f64 * gap);
                f.long_accel = Some(if i % 17 == 0 { -3.4 } else { 0.0 });
                f.left_lane_position = Some(1.7);
                f.right_lane_position = Some(1.7);
                f.target_range = Some(30.0);
                f.target_range_rate = Some(-2.0);
                f
            })
            .collect();
        TelemetryLog::new(frames, 2.0).unwrap()
    }

    #[test]
    fn unconstrained_channel_delivers_everything() {
        let log = sim_log(500, 0.02);
        let spec = SamplingSpec::new(0.1, 0.0).unwrap();
        let channel = ChannelModel::new(1e12, 1024, 0.01).unwrap();
        let report = simulate(&log, &spec, 1.0, &channel).unwrap();
        assert_eq!(report.dropped, 0);
        assert_eq!(report.generated, report.delivered);
        for &l in &report.latencies {
            assert!((0.01..0.0101).contains(&l), "latency {l}");
        }
        // frame latency includes the batching wait plus a tiny transmission
        for &l in &report.frame_latencies {
            assert!((0.01 - 1e-12..=0.01 + 1.0 + 1e-6).contains(&l), "frame latency {l}");
        }
        let direct = direct_series(
            &report.sampled_records,
            IndicatorKind::SevereDeceleration,
            &IndicatorConfig::default(),
        )
        .unwrap();
        assert!(end_to_end_check(&report, &direct));
    }

    #[test]
    fn overloaded_channel_drops() {
        let log = sim_log(2000, 0.02);
        let spec = SamplingSpec::new(0.05, 0.0).unwrap();
        let channel = ChannelModel::new(1e3, 2, 0.0).unwrap();
        let report = simulate(&log, &spec, 1.0, &channel).unwrap();
        assert!(report.dropped > 0);
        assert_eq!(
            report.generated,
            report.delivered + report.dropped + report.in_queue_at_end
        );
        // delivered points must still match the reference exactly
        let direct = direct_series(
            &report.sampled_records,
            IndicatorKind::SevereDeceleration,
            &IndicatorConfig::default(),
        )
        .unwrap();
        assert!(end_to_end_check(&report, &direct));
    }

    #[test]
    fn corrupted_payload_fails_check() {
        let log = sim_log(200, 0.02);
        let spec = SamplingSpec::new(0.1, 0.0).unwrap();
        let channel = ChannelModel::new(1e9, 1024, 0.01).unwrap();
        let mut report = simulate(&log, &spec, 1.0, &channel).unwrap();
        let direct = direct_series(
            &report.sampled_records,
            IndicatorKind::SevereDeceleration,
            &IndicatorConfig::default(),
        )
        .unwrap();
        assert!(end_to_end_check(&report, &direct));
        // inject corruption server-side
        let series = &mut report.tmc_series[0];
        let mut pts = series.points().to_vec();
        pts[0].value += 1.0;
        *series = IndicatorSeries::new(series.kind, pts, series.threshold).unwrap();
        assert!(!end_to_end_check(&report, &direct));
    }

    #[test]
    fn batch_interval_must_cover_sampling() {
        let log = sim_log(100, 0.02);
        let spec = SamplingSpec::new(1.0, 0.0).unwrap();
        let channel = ChannelModel::wave();
        assert!(simulate(&log, &spec, 0.5, &channel).is_err());
    }

    #[test]
    fn determinism_byte_identical() {
        let log = sim_log(1000, 0.02);
        let spec = SamplingSpec::new(0.2, 0.0).unwrap();
        let channel = ChannelModel::lte();
        let a = simulate(&log, &spec, 1.0, &channel).unwrap();
        let b = simulate(&log, &spec, 1.0, &channel).unwrap();
        assert_eq!(a.latencies, b.latencies);
        assert_eq!(a.sampled_records, b.sampled_records);
        assert_eq!(a.delivered_bytes, b.delivered_bytes);
    }

    #[test]
    fn horizon_leaves_messages_in_queue() {
        let log = sim_log(1000, 0.02);
        let spec = SamplingSpec::new(0.1, 0.0).unwrap();
        // slow enough that the tail is still in flight at the horizon
        let channel = ChannelModel::new(2e4, 1024, 0.0).unwrap();
        let report = simulate_with_options(
            &log,
            &spec,
            1.0,
            &channel,
            &IndicatorConfig::default(),
            Some(5.0),
        )
        .unwrap();
        assert!(report.in_queue_at_end > 0);
        assert_eq!(
            report.generated,
            report.delivered + report.dropped + report.in_queue_at_end
        );
    }
}
