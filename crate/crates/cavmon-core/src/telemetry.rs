//! Ingestion and quality filtering of raw CAV sensor logs.
//!
//! Input files are delimiter-separated text with one header row and one
//! frame per row; an empty cell means the field is absent for that frame.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One timestamped multi-sensor record (chassis / vision / radar).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryFrame {
    pub timestamp: f64,
    pub long_accel: Option<f64>,
    pub left_lane_position: Option<f64>,
    pub left_lane_quality: Option<i64>,
    pub right_lane_position: Option<f64>,
    pub right_lane_quality: Option<i64>,
    pub target_range: Option<f64>,
    pub target_range_rate: Option<f64>,
    pub target_range_accel: Option<f64>,
    pub target_status: Option<i64>,
}

impl TelemetryFrame {
    pub fn at(timestamp: f64) -> Self {
        TelemetryFrame {
            timestamp,
            long_accel: None,
            left_lane_position: None,
            left_lane_quality: None,
            right_lane_position: None,
            right_lane_quality: None,
            target_range: None,
            target_range_rate: None,
            target_range_accel: None,
            target_status: None,
        }
    }

    pub fn has_chassis(&self) -> bool {
        self.long_accel.is_some()
    }

    pub fn has_vision(&self) -> bool {
        self.left_lane_position.is_some()
            || self.left_lane_quality.is_some()
            || self.right_lane_position.is_some()
            || self.right_lane_quality.is_some()
    }

    pub fn has_radar(&self) -> bool {
        self.target_range.is_some()
            || self.target_range_rate.is_some()
            || self.target_range_accel.is_some()
            || self.target_status.is_some()
    }

    fn is_valid(&self) -> bool {
        if !self.timestamp.is_finite() || self.timestamp < 0.0 {
            return false;
        }
        let non_negative =
            |v: Option<f64>| v.is_none_or(|x| x.is_finite() && x >= 0.0);
        if !non_negative(self.left_lane_position)
            || !non_negative(self.right_lane_position)
            || !non_negative(self.target_range)
        {
            return false;
        }
        self.has_chassis() || self.has_vision() || self.has_radar()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LogMetadata {
    pub source: Option<PathBuf>,
    pub nominal_rate_hz: Option<f64>,
}

/// An immutable, timestamp-ordered telemetry log.
#[derive(Debug, Clone, PartialEq)]
pub struct TelemetryLog {
    frames: Vec<TelemetryFrame>,
    vehicle_width: f64,
    pub metadata: LogMetadata,
}

/// Width of the test vehicle used for the published sample data, in meters.
pub const DEFAULT_VEHICLE_WIDTH: f64 = 2.038;

impl TelemetryLog {
    /// Builds a log from frames already sorted by strictly increasing timestamp.
    pub fn new(frames: Vec<TelemetryFrame>, vehicle_width: f64) -> Result<Self> {
        if !(vehicle_width > 0.0) || !vehicle_width.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "vehicle_width must be positive, got {vehicle_width}"
            )));
        }
        for pair in frames.windows(2) {
            if pair[1].timestamp <= pair[0].timestamp {
                return Err(Error::InvalidParameter(
                    "frame timestamps must be strictly increasing".into(),
                ));
            }
        }
        Ok(TelemetryLog {
            frames,
            vehicle_width,
            metadata: LogMetadata::default(),
        })
    }

    /// Builds a log from frames in arbitrary order, collapsing duplicate
    /// timestamps keeping the last-seen row.
    pub fn from_unsorted(mut frames: Vec<TelemetryFrame>, vehicle_width: f64) -> Result<Self> {
        frames.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
        // stable sort keeps input order among equal timestamps; take the last
        let mut deduped: Vec<TelemetryFrame> = Vec::with_capacity(frames.len());
        for f in frames {
            match deduped.last() {
                Some(prev) if prev.timestamp == f.timestamp => {
                    *deduped.last_mut().unwrap() = f;
                }
                _ => deduped.push(f),
            }
        }
        TelemetryLog::new(deduped, vehicle_width)
    }

    pub fn frames(&self) -> &[TelemetryFrame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn vehicle_width(&self) -> f64 {
        self.vehicle_width
    }

    pub fn timestamps(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.timestamp).collect()
    }
}

/// Column-name map for the input schema. Defaults are the field identifiers
/// used by the published sample data.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMap {
    pub timestamp: String,
    pub long_accel: String,
    pub left_lane_position: String,
    pub left_lane_quality: String,
    pub right_lane_position: String,
    pub right_lane_quality: String,
    pub target_range: String,
    pub target_range_rate: String,
    pub target_range_accel: String,
    pub target_status: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            timestamp: "timestamp".into(),
            long_accel: "longAccel".into(),
            left_lane_position: "leftLanePosition".into(),
            left_lane_quality: "leftLaneQuality".into(),
            right_lane_position: "rightLanePosition".into(),
            right_lane_quality: "rightLaneQuality".into(),
            target_range: "targetRange".into(),
            target_range_rate: "targetRangeRate".into(),
            target_range_accel: "targetRangeAccel".into(),
            target_status: "targetStatus".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SchemaOptions {
    pub delimiter: u8,
    pub columns: ColumnMap,
    pub vehicle_width: f64,
}

impl Default for SchemaOptions {
    fn default() -> Self {
        SchemaOptions {
            delimiter: b',',
            columns: ColumnMap::default(),
            vehicle_width: DEFAULT_VEHICLE_WIDTH,
        }
    }
}

#[derive(Debug)]
pub struct LoadReport {
    pub log: TelemetryLog,
    /// Rows discarded for unparseable values or invariant violations.
    pub rows_dropped: usize,
}

pub fn load_log(path: &Path, options: &SchemaOptions) -> Result<LoadReport> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut report = load_log_from_reader(BufReader::new(file), options)?;
    report.log.metadata.source = Some(path.to_path_buf());
    Ok(report)
}

pub fn load_log_from_reader<R: Read>(reader: R, options: &SchemaOptions) -> Result<LoadReport> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .flexible(true)
        .from_reader(reader);

    let headers = rdr.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h.trim() == name);
    let cols = &options.columns;
    let ts_idx = find(&cols.timestamp).ok_or_else(|| Error::MissingColumn(cols.timestamp.clone()))?;
    let idx = [
        find(&cols.long_accel),
        find(&cols.left_lane_position),
        find(&cols.left_lane_quality),
        find(&cols.right_lane_position),
        find(&cols.right_lane_quality),
        find(&cols.target_range),
        find(&cols.target_range_rate),
        find(&cols.target_range_accel),
        find(&cols.target_status),
    ];

    let mut frames = Vec::new();
    let mut dropped = 0usize;
    for record in rdr.records() {
        let record = record?;
        let cell = |i: Option<usize>| -> Option<&str> {
            i.and_then(|i| record.get(i)).map(str::trim).filter(|s| !s.is_empty())
        };
        // any unparseable cell drops the whole row
        let parse_f64 = |i: Option<usize>| -> std::result::Result<Option<f64>, ()> {
            match cell(i) {
                None => Ok(None),
                Some(s) => s.parse::<f64>().map(Some).map_err(|_| ()),
            }
        };
        let parse_i64 = |i: Option<usize>| -> std::result::Result<Option<i64>, ()> {
            match cell(i) {
                None => Ok(None),
                Some(s) => s.parse::<i64>().map(Some).map_err(|_| ()),
            }
        };

        let parsed = (|| -> std::result::Result<TelemetryFrame, ()> {
            let timestamp = cell(Some(ts_idx)).ok_or(())?.parse::<f64>().map_err(|_| ())?;
            Ok(TelemetryFrame {
                timestamp,
                long_accel: parse_f64(idx[0])?,
                left_lane_position: parse_f64(idx[1])?,
                left_lane_quality: parse_i64(idx[2])?,
                right_lane_position: parse_f64(idx[3])?,
                right_lane_quality: parse_i64(idx[4])?,
                target_range: parse_f64(idx[5])?,
                target_range_rate: parse_f64(idx[6])?,
                target_range_accel: parse_f64(idx[7])?,
                target_status: parse_i64(idx[8])?,
            })
        })();

        match parsed {
            Ok(frame) if frame.is_valid() => frames.push(frame),
            _ => dropped += 1,
        }
    }

    let log = TelemetryLog::from_unsorted(frames, options.vehicle_width)?;
    Ok(LoadReport {
        log,
        rows_dropped: dropped,
    })
}

/// Which radar target_status codes count as a valid target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StatusFilter {
    /// Any non-zero code is valid (default; the source data gives no codebook).
    NonZero,
    OneOf(BTreeSet<i64>),
}

impl StatusFilter {
    fn accepts(&self, status: Option<i64>) -> bool {
        match (self, status) {
            (StatusFilter::NonZero, Some(s)) => s != 0,
            (StatusFilter::OneOf(set), Some(s)) => set.contains(&s),
            (_, None) => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QualityPolicy {
    pub min_lane_quality: i64,
    pub valid_target_status: StatusFilter,
}

impl Default for QualityPolicy {
    fn default() -> Self {
        QualityPolicy {
            min_lane_quality: 2,
            valid_target_status: StatusFilter::NonZero,
        }
    }
}

/// Clears noisy sensor fields per the policy. Frames are kept either way:
/// a lane side failing the quality minimum loses its lane fields, an invalid
/// target_status clears all radar fields, and chassis fields are never touched.
pub fn filter_quality(log: &TelemetryLog, policy: &QualityPolicy) -> TelemetryLog {
    let frames = log
        .frames()
        .iter()
        .map(|f| {
            let mut f = f.clone();
            if f.left_lane_quality.is_none_or(|q| q < policy.min_lane_quality) {
                f.left_lane_position = None;
                f.left_lane_quality = None;
            }
            if f.right_lane_quality.is_none_or(|q| q < policy.min_lane_quality) {
                f.right_lane_position = None;
                f.right_lane_quality = None;
            }
            if !policy.valid_target_status.accepts(f.target_status) {
                f.target_range = None;
                f.target_range_rate = None;
                f.target_range_accel = None;
                f.target_status = None;
            }
            f
        })
        .collect();
    TelemetryLog {
        frames,
        vehicle_width: log.vehicle_width,
        metadata: log.metadata.clone(),
    }
}

/// Nominal collection rate: the reciprocal of the median inter-frame gap.
pub fn nominal_rate(log: &TelemetryLog) -> Result<f64> {
    if log.len() < 2 {
        return Err(Error::NotEnoughFrames { required: 2 });
    }
    let mut gaps: Vec<f64> = log
        .frames()
        .windows(2)
        .map(|p| p[1].timestamp - p[0].timestamp)
        .collect();
    gaps.sort_by(f64::total_cmp);
    let mid = gaps.len() / 2;
    let median = if gaps.len() % 2 == 1 {
        gaps[mid]
    } else {
        0.5 * (gaps[mid - 1] + gaps[mid])
    };
    Ok(1.0 / median)
}

/// Median inter-frame gap in seconds.
pub fn median_gap(log: &TelemetryLog) -> Result<f64> {
    nominal_rate(log).map(|r| 1.0 / r)
}

fn fmt_opt_f64(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

fn fmt_opt_i64(v: Option<i64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

/// Writes the log back out in the input format (default column names).
pub fn write_csv<W: Write>(log: &TelemetryLog, writer: W) -> Result<()> {
    let cols = ColumnMap::default();
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record([
        cols.timestamp.as_str(),
        cols.long_accel.as_str(),
        cols.left_lane_position.as_str(),
        cols.left_lane_quality.as_str(),
        cols.right_lane_position.as_str(),
        cols.right_lane_quality.as_str(),
        cols.target_range.as_str(),
        cols.target_range_rate.as_str(),
        cols.target_range_accel.as_str(),
        cols.target_status.as_str(),
    ])?;
    for f in log.frames() {
        wtr.write_record([
            format!("{}", f.timestamp),
            fmt_opt_f64(f.long_accel),
            fmt_opt_f64(f.left_lane_position),
            fmt_opt_i64(f.left_lane_quality),
            fmt_opt_f64(f.right_lane_position),
            fmt_opt_i64(f.right_lane_quality),
            fmt_opt_f64(f.target_range),
            fmt_opt_f64(f.target_range_rate),
            fmt_opt_f64(f.target_range_accel),
            fmt_opt_i64(f.target_status),
        ])?;
    }
    wtr.flush().map_err(|e| Error::Io {
        path: PathBuf::from("<writer>"),
        source: e,
    })?;
    Ok(())
}

/// Line-delimited JSON export, one frame per line.
pub fn write_jsonl<W: Write>(log: &TelemetryLog, mut writer: W) -> Result<()> {
    for f in log.frames() {
        let line = serde_json::to_string(f).expect("frame serialization is infallible");
        writeln!(writer, "{line}").map_err(|e| Error::Io {
            path: PathBuf::from("<writer>"),
            source: e,
        })?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv_log(body: &str) -> LoadReport {
        load_log_from_reader(body.as_bytes(), &SchemaOptions::default()).unwrap()
    }

    #[test]
    fn load_sorted_rows() {
        let r = csv_log("timestamp,longAccel\n0.0,0.1\n0.05,0.2\n0.10,0.3\n");
        assert_eq!(r.log.len(), 3);
        assert_eq!(r.rows_dropped, 0);
        assert_eq!(r.log.frames()[2].timestamp, 0.10);
    }

    #[test]
    fn load_resorts_out_of_order_rows() {
        let r = csv_log("timestamp,longAccel\n0.10,0.2\n0.05,0.1\n");
        let ts: Vec<f64> = r.log.timestamps();
        assert_eq!(ts, vec![0.05, 0.10]);
    }

    #[test]
    fn non_numeric_cell_drops_row() {
        let r = csv_log("timestamp,longAccel\n0.0,0.1\n0.05,n/a\n0.10,0.3\n");
        assert_eq!(r.log.len(), 2);
        assert_eq!(r.rows_dropped, 1);
    }

    #[test]
    fn duplicate_timestamps_keep_last() {
        let r = csv_log("timestamp,longAccel\n0.0,1.0\n0.0,2.0\n");
        assert_eq!(r.log.len(), 1);
        assert_eq!(r.log.frames()[0].long_accel, Some(2.0));
    }

    #[test]
    fn missing_timestamp_column_is_fatal() {
        let err = load_log_from_reader("time,longAccel\n0.0,0.1\n".as_bytes(), &SchemaOptions::default());
        assert!(matches!(err, Err(Error::MissingColumn(_))));
    }

    #[test]
    fn row_without_any_sensor_group_is_dropped() {
        let r = csv_log("timestamp,longAccel\n0.0,\n0.05,0.1\n");
        assert_eq!(r.log.len(), 1);
        assert_eq!(r.rows_dropped, 1);
    }

    #[test]
    fn negative_range_is_dropped() {
        let r = csv_log("timestamp,targetRange,targetRangeRate\n0.0,-5.0,1.0\n0.05,5.0,1.0\n");
        assert_eq!(r.log.len(), 1);
        assert_eq!(r.rows_dropped, 1);
    }

    #[test]
    fn filter_clears_low_quality_lane_fields() {
        let mut f = TelemetryFrame::at(0.0);
        f.left_lane_position = Some(1.5);
        f.left_lane_quality = Some(0);
        f.right_lane_position = Some(1.5);
        f.right_lane_quality = Some(3);
        let log = TelemetryLog::new(vec![f], 2.0).unwrap();
        let out = filter_quality(&log, &QualityPolicy::default());
        let g = &out.frames()[0];
        assert_eq!(g.left_lane_position, None);
        assert_eq!(g.left_lane_quality, None);
        assert_eq!(g.right_lane_position, Some(1.5));
    }

    #[test]
    fn filter_keeps_good_frames_unchanged() {
        let mut f = TelemetryFrame::at(0.0);
        f.left_lane_position = Some(1.5);
        f.left_lane_quality = Some(3);
        f.right_lane_position = Some(1.4);
        f.right_lane_quality = Some(3);
        f.target_range = Some(10.0);
        f.target_range_rate = Some(-1.0);
        f.target_status = Some(1);
        let log = TelemetryLog::new(vec![f.clone()], 2.0).unwrap();
        let out = filter_quality(&log, &QualityPolicy::default());
        assert_eq!(out.frames()[0], f);
    }

    #[test]
    fn filter_empty_log() {
        let log = TelemetryLog::new(vec![], 2.0).unwrap();
        let out = filter_quality(&log, &QualityPolicy::default());
        assert!(out.is_empty());
    }

    #[test]
    fn filter_invalid_status_clears_radar() {
        let mut f = TelemetryFrame::at(0.0);
        f.long_accel = Some(0.0);
        f.target_range = Some(10.0);
        f.target_range_rate = Some(-1.0);
        f.target_status = Some(0);
        let log = TelemetryLog::new(vec![f], 2.0).unwrap();
        let out = filter_quality(&log, &QualityPolicy::default());
        let g = &out.frames()[0];
        assert_eq!(g.target_range, None);
        assert_eq!(g.long_accel, Some(0.0));
    }

    #[test]
    fn nominal_rate_uniform() {
        let frames = (0..5).map(|i| {
            let mut f = TelemetryFrame::at(i as f64 * 0.05);
            f.long_accel = Some(0.0);
            f
        });
        let log = TelemetryLog::new(frames.collect(), 2.0).unwrap();
        assert!((nominal_rate(&log).unwrap() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn nominal_rate_median_gap() {
        let ts = [0.0, 0.01, 0.06, 0.11];
        let frames = ts.iter().map(|&t| {
            let mut f = TelemetryFrame::at(t);
            f.long_accel = Some(0.0);
            f
        });
        let log = TelemetryLog::new(frames.collect(), 2.0).unwrap();
        // gaps {0.01, 0.05, 0.05}, median 0.05
        assert!((nominal_rate(&log).unwrap() - 20.0).abs() < 1e-9);
    }

    #[test]
    fn nominal_rate_needs_two_frames() {
        let log = TelemetryLog::new(vec![], 2.0).unwrap();
        assert!(matches!(nominal_rate(&log), Err(Error::NotEnoughFrames { .. })));
    }

    #[test]
    fn csv_round_trip_is_identity() {
        let r = csv_log("timestamp,longAccel,targetRange,targetRangeRate,targetStatus\n0.0,0.1,,,\n0.05,,30.5,-2.25,1\n");
        let mut buf = Vec::new();
        write_csv(&r.log, &mut buf).unwrap();
        let again = load_log_from_reader(buf.as_slice(), &SchemaOptions::default()).unwrap();
        assert_eq!(again.log.frames(), r.log.frames());
        assert_eq!(again.rows_dropped, 0);
    }
}
