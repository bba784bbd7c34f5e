//! `cavmon` — compute safety indicators from CAV telemetry, sweep sampling
//! intervals against detection reliability, simulate the OBU→RSU→TMC link,
//! and generate synthetic fixture logs.
//!
//! Every command is deterministic given its configuration (seed included).
//! Exit codes: 0 success, 1 fatal error, 2 partial per-indicator failure.

mod config;

use std::fs::File;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use cavmon_core::events::detect_events;
use cavmon_core::indicators::{compute_with_config, IndicatorConfig, IndicatorKind};
use cavmon_core::netsim::{
    direct_series, end_to_end_check, simulate_with_options, ChannelModel,
};
use cavmon_core::report::{build_sweep_report, SweepConfig};
use cavmon_core::sampling::SamplingSpec;
use cavmon_core::stats::summarize;
use cavmon_core::synth::{generate, EventPlan, SynthSpec};
use cavmon_core::telemetry::{
    filter_quality, load_log, write_csv, QualityPolicy, SchemaOptions, TelemetryLog,
};
use cavmon_core::tradeoff::{BinWidths, Weights};
use clap::{Args, Parser, Subcommand};
use config::{pick, pick_opt, FileConfig, PlanConfig};
use serde::Serialize;

const EXIT_PARTIAL: u8 = 2;

#[derive(Parser)]
#[command(name = "cavmon", version, about = "Sampling trade-off analysis for CAV telemetry")]
struct Cli {
    /// TOML run configuration; command-line flags override file values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: $CAVMON_OUT or the current directory)
    #[arg(long, global = true, env = "CAVMON_OUT")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Export indicator series and per-indicator event summaries
    Indicators(IndicatorsArgs),
    /// Sweep sampling intervals and report the compression/reliability trade-off
    Sweep(SweepArgs),
    /// Run the OBU→RSU→TMC pipeline over a bandwidth-limited channel
    Simulate(SimulateArgs),
    /// Generate a deterministic synthetic log with planted critical events
    Synth(SynthArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Input telemetry log (delimiter-separated, header row required)
    #[arg(long)]
    input: Option<PathBuf>,
    /// Field delimiter (single byte)
    #[arg(long)]
    delimiter: Option<char>,
    /// Vehicle body width in metres
    #[arg(long)]
    vehicle_width: Option<f64>,
    /// Minimum lane-tracking quality; lower-quality lane fields are dropped
    #[arg(long)]
    min_lane_quality: Option<i64>,
    /// Skip the sensor-quality filter entirely
    #[arg(long)]
    no_quality_filter: bool,
}

#[derive(Args)]
struct IndicatorsArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Comma-separated indicator subset: sd, lpv, ittc
    #[arg(long, value_delimiter = ',')]
    indicator: Option<Vec<String>>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_delimiter = ',')]
    indicator: Option<Vec<String>>,
    /// Sampling-interval grid in seconds
    #[arg(long, value_delimiter = ',')]
    intervals: Option<Vec<f64>>,
    /// Compression weight; reliability weight is its complement
    #[arg(long)]
    w_com: Option<f64>,
    /// KS significance level
    #[arg(long)]
    alpha: Option<f64>,
    /// Randomized-phase KS trials per interval
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Histogram bin width for event delays, seconds
    #[arg(long)]
    delay_bin: Option<f64>,
    /// Histogram bin width for event magnitude errors
    #[arg(long)]
    error_bin: Option<f64>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Channel preset: wave or lte
    #[arg(long)]
    preset: Option<String>,
    /// Explicit channel capacity in bit/s (overrides the preset)
    #[arg(long)]
    capacity_bps: Option<f64>,
    #[arg(long)]
    queue_limit: Option<usize>,
    /// One-way propagation delay in seconds
    #[arg(long)]
    propagation: Option<f64>,
    /// OBU sampling interval in seconds
    #[arg(long)]
    interval: Option<f64>,
    /// Sampling phase offset in seconds
    #[arg(long)]
    phase: Option<f64>,
    /// Batch (message) interval in seconds
    #[arg(long)]
    batch: Option<f64>,
    /// Stop the clock here; undelivered messages stay queued
    #[arg(long)]
    horizon: Option<f64>,
}

#[derive(Args)]
struct SynthArgs {
    /// Capture rate in Hz
    #[arg(long)]
    rate: Option<f64>,
    /// Log duration in seconds
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    vehicle_width: Option<f64>,
    /// Deceleration events: count,duration,amplitude[,jitter]
    #[arg(long, value_name = "N,DUR,AMP[,JIT]")]
    sd: Option<String>,
    /// Lane-drift events: count,duration,amplitude[,jitter]
    #[arg(long, value_name = "N,DUR,AMP[,JIT]")]
    lpv: Option<String>,
    /// Closing-target events: count,duration,amplitude[,jitter]
    #[arg(long, value_name = "N,DUR,AMP[,JIT]")]
    ittc: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let file = FileConfig::load(cli.config.as_deref())?;
    let out_dir = cli
        .out
        .or_else(|| file.out.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;
    match cli.command {
        Command::Indicators(args) => cmd_indicators(args, &file, &out_dir),
        Command::Sweep(args) => cmd_sweep(args, &file, &out_dir),
        Command::Simulate(args) => cmd_simulate(args, &file, &out_dir),
        Command::Synth(args) => cmd_synth(args, &file, &out_dir),
    }
}

fn resolve_kinds(flag: Option<Vec<String>>, file: &FileConfig) -> Result<Vec<IndicatorKind>> {
    let names = pick_opt(flag, file.indicators.clone());
    match names {
        None => Ok(IndicatorKind::ALL.to_vec()),
        Some(names) => names
            .iter()
            .map(|n| {
                IndicatorKind::from_short_name(n)
                    .with_context(|| format!("unknown indicator {n:?} (expected sd, lpv, ittc)"))
            })
            .collect(),
    }
}

fn load_input(args: &InputArgs, file: &FileConfig) -> Result<(TelemetryLog, usize)> {
    let path = args
        .input
        .clone()
        .or_else(|| file.input.clone())
        .context("no input log given (--input or `input` in the config file)")?;
    let mut options = SchemaOptions::default();
    if let Some(d) = args.delimiter {
        anyhow::ensure!(d.is_ascii(), "delimiter must be a single byte");
        options.delimiter = d as u8;
    } else if let Some(d) = file.delimiter_byte()? {
        options.delimiter = d;
    }
    if let Some(w) = pick_opt(args.vehicle_width, file.vehicle_width) {
        options.vehicle_width = w;
    }
    let report =
        load_log(&path, &options).with_context(|| format!("loading {}", path.display()))?;
    let apply_filter = !args.no_quality_filter && file.quality_filter.unwrap_or(true);
    let log = if apply_filter {
        let mut policy = QualityPolicy::default();
        if let Some(q) = pick_opt(args.min_lane_quality, file.min_lane_quality) {
            policy.min_lane_quality = q;
        }
        filter_quality(&report.log, &policy)
    } else {
        report.log
    };
    Ok((log, report.rows_dropped))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut file =
        File::create(path).with_context(|| format!("creating {}", path.display()))?;
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n")?;
    Ok(())
}

#[derive(Serialize)]
struct IndicatorSummary {
    indicator: &'static str,
    points: usize,
    skipped_frames: usize,
    critical_events: usize,
    mean_event_duration: Option<f64>,
    series_file: String,
}

#[derive(Serialize)]
struct IndicatorsReport {
    input_frames: usize,
    rows_dropped: usize,
    indicators: Vec<IndicatorSummary>,
    failures: Vec<(String, String)>,
}

fn cmd_indicators(args: IndicatorsArgs, file: &FileConfig, out_dir: &Path) -> Result<ExitCode> {
    let kinds = resolve_kinds(args.indicator.clone(), file)?;
    let (log, rows_dropped) = load_input(&args.input, file)?;
    let config = IndicatorConfig::default();

    let mut summaries = Vec::new();
    let mut failures = Vec::new();
    for kind in &kinds {
        let computed = match compute_with_config(&log, *kind, &config) {
            Ok(c) => c,
            Err(e) => {
                failures.push((kind.short_name().to_string(), e.to_string()));
                continue;
            }
        };
        let events = detect_events(&computed.series);
        let series_file = format!("{}_series.csv", kind.short_name());
        let path = out_dir.join(&series_file);
        let mut w = csv::Writer::from_path(&path)
            .with_context(|| format!("creating {}", path.display()))?;
        w.write_record(["timestamp", "value", "critical"])?;
        for (i, p) in computed.series.points().iter().enumerate() {
            w.write_record(&[
                p.timestamp.to_string(),
                p.value.to_string(),
                (computed.series.is_critical_at(i) as u8).to_string(),
            ])?;
        }
        w.flush()?;
        let mean_duration = if events.is_empty() {
            None
        } else {
            Some(events.iter().map(|e| e.duration).sum::<f64>() / events.len() as f64)
        };
        summaries.push(IndicatorSummary {
            indicator: kind.short_name(),
            points: computed.series.len(),
            skipped_frames: computed.skipped_frames,
            critical_events: events.len(),
            mean_event_duration: mean_duration,
            series_file,
        });
    }
    if summaries.is_empty() {
        bail!(
            "no requested indicator could be computed: {}",
            failures
                .iter()
                .map(|(k, e)| format!("{k}: {e}"))
                .collect::<Vec<_>>()
                .join("; ")
        );
    }

    let report = IndicatorsReport {
        input_frames: log.len(),
        rows_dropped,
        indicators: summaries,
        failures,
    };
    write_json(&out_dir.join("indicators_summary.json"), &report)?;
    for s in &report.indicators {
        println!(
            "{}: {} points, {} critical events -> {}",
            s.indicator, s.points, s.critical_events, s.series_file
        );
    }
    for (kind, err) in &report.failures {
        eprintln!("{kind}: FAILED ({err})");
    }
    Ok(if report.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_PARTIAL)
    })
}

fn cmd_sweep(args: SweepArgs, file: &FileConfig, out_dir: &Path) -> Result<ExitCode> {
    let kinds = resolve_kinds(args.indicator.clone(), file)?;
    let (log, _) = load_input(&args.input, file)?;

    let defaults = SweepConfig::default();
    let weights = match pick_opt(args.w_com, file.weights.map(|w| w[0])) {
        Some(w_com) => Weights::new(w_com, 1.0 - w_com)?,
        None => Weights::default(),
    };
    let sweep_config = SweepConfig {
        intervals: pick(args.intervals, file.intervals.clone(), defaults.intervals),
        weights,
        bins: BinWidths {
            delay: pick(args.delay_bin, file.delay_bin, BinWidths::default().delay),
            error: pick(args.error_bin, file.error_bin, BinWidths::default().error),
        },
        alpha: pick(args.alpha, file.alpha, defaults.alpha),
        trials: pick(args.trials, file.trials, defaults.trials),
        seed: pick(args.seed, file.seed, defaults.seed),
    };

    let report = build_sweep_report(&log, &kinds, &IndicatorConfig::default(), &sweep_config)?;
    write_json(&out_dir.join("sweep_report.json"), &report)?;

    // flat table: one row per (indicator, interval), every reported number
    let path = out_dir.join("sweep_outcomes.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record([
        "indicator",
        "interval",
        "success_ratio",
        "compression_ratio",
        "weighted_sum",
        "raw_events",
        "detected_events",
        "ks_passing_rate",
        "delay_mode",
        "delay_std",
        "error_mode",
        "error_std",
    ])?;
    let fmt_opt = |s: &Option<cavmon_core::DistributionSummary>, f: fn(&cavmon_core::DistributionSummary) -> f64| {
        s.as_ref().map(|s| f(s).to_string()).unwrap_or_default()
    };
    for sweep in &report.sweeps {
        for (o, ks) in sweep.outcomes.iter().zip(&sweep.ks_passing) {
            w.write_record(&[
                sweep.indicator.short_name().to_string(),
                o.interval.to_string(),
                o.success_ratio.to_string(),
                o.compression_ratio.to_string(),
                o.weighted_sum.to_string(),
                o.raw_events.to_string(),
                o.detected_events.to_string(),
                ks.to_string(),
                fmt_opt(&o.delay_summary, |s| s.mode),
                fmt_opt(&o.delay_summary, |s| s.std_dev),
                fmt_opt(&o.error_summary, |s| s.mode),
                fmt_opt(&o.error_summary, |s| s.std_dev),
            ])?;
        }
    }
    w.flush()?;

    let path = out_dir.join("sweep_recommendations.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["indicator", "recommended_interval"])?;
    for sweep in &report.sweeps {
        w.write_record(&[
            sweep.indicator.short_name().to_string(),
            sweep.recommendation.to_string(),
        ])?;
        println!(
            "{}: recommended interval {} s",
            sweep.indicator.short_name(),
            sweep.recommendation
        );
    }
    if let Some(u) = report.uniform_recommendation {
        w.write_record(&["uniform".to_string(), u.to_string()])?;
        println!("uniform: recommended interval {u} s");
    }
    w.flush()?;

    for (kind, err) in &report.failures {
        eprintln!("{}: FAILED ({err})", kind.short_name());
    }
    Ok(if report.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_PARTIAL)
    })
}

#[derive(Serialize)]
struct SimulateReport {
    channel: ChannelModel,
    sampling_interval: f64,
    batch_interval: f64,
    horizon: Option<f64>,
    generated: usize,
    delivered: usize,
    dropped: usize,
    in_queue_at_end: usize,
    reorder_flagged: bool,
    delivered_bytes: usize,
    throughput_bytes_per_s: f64,
    message_latency: Option<cavmon_core::DistributionSummary>,
    frame_latency: Option<cavmon_core::DistributionSummary>,
    end_to_end_ok: Vec<(String, bool)>,
}

fn cmd_simulate(args: SimulateArgs, file: &FileConfig, out_dir: &Path) -> Result<ExitCode> {
    let (log, _) = load_input(&args.input, file)?;

    let preset = pick_opt(args.preset.clone(), file.channel.clone());
    let mut channel = match preset.as_deref() {
        None => ChannelModel::wave(),
        Some(name) => {
            ChannelModel::preset(name).with_context(|| format!("unknown channel preset {name:?}"))?
        }
    };
    if let Some(c) = pick_opt(args.capacity_bps, file.capacity_bps) {
        channel.capacity_bps = c;
    }
    if let Some(q) = pick_opt(args.queue_limit, file.queue_limit) {
        channel.queue_limit = q;
    }
    if let Some(p) = pick_opt(args.propagation, file.propagation) {
        channel.propagation_delay = p;
    }
    let channel = ChannelModel::new(
        channel.capacity_bps,
        channel.queue_limit,
        channel.propagation_delay,
    )?;

    let interval = pick(args.interval, file.interval, 0.2);
    let phase = pick(args.phase, file.phase, 0.0);
    let batch = pick(args.batch, file.batch, 1.0);
    let horizon = pick_opt(args.horizon, file.horizon);
    let sampling = SamplingSpec::new(interval, phase)?;
    let config = IndicatorConfig::default();
    let report = simulate_with_options(&log, &sampling, batch, &channel, &config, horizon)?;

    let end_to_end_ok: Vec<(String, bool)> = IndicatorKind::ALL
        .iter()
        .filter_map(|&kind| {
            let direct = direct_series(&report.sampled_records, kind, &config).ok()?;
            if direct.is_empty() {
                return None;
            }
            Some((
                kind.short_name().to_string(),
                end_to_end_check(&report, &direct),
            ))
        })
        .collect();

    let bins = BinWidths::default();
    let doc = SimulateReport {
        channel,
        sampling_interval: interval,
        batch_interval: batch,
        horizon,
        generated: report.generated,
        delivered: report.delivered,
        dropped: report.dropped,
        in_queue_at_end: report.in_queue_at_end,
        reorder_flagged: report.reorder_flagged,
        delivered_bytes: report.delivered_bytes,
        throughput_bytes_per_s: report.throughput_bytes_per_s,
        message_latency: summarize(&report.latencies, bins.delay).ok(),
        frame_latency: summarize(&report.frame_latencies, bins.delay).ok(),
        end_to_end_ok,
    };
    write_json(&out_dir.join("simulate_report.json"), &doc)?;

    let path = out_dir.join("simulate_latencies.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["kind", "latency"])?;
    for l in &report.latencies {
        w.write_record(&["message".to_string(), l.to_string()])?;
    }
    for l in &report.frame_latencies {
        w.write_record(&["frame".to_string(), l.to_string()])?;
    }
    w.flush()?;

    println!(
        "generated {} messages: {} delivered, {} dropped, {} queued at end",
        doc.generated, doc.delivered, doc.dropped, doc.in_queue_at_end
    );
    for (kind, ok) in &doc.end_to_end_ok {
        println!("end-to-end {kind}: {}", if *ok { "ok" } else { "MISMATCH" });
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_plan(flag: Option<&str>, file: Option<PlanConfig>, what: &str) -> Result<Option<EventPlan>> {
    if let Some(text) = flag {
        let parts: Vec<&str> = text.split(',').collect();
        if !(3..=4).contains(&parts.len()) {
            bail!("--{what} expects count,duration,amplitude[,jitter], got {text:?}");
        }
        let count = parts[0].parse().with_context(|| format!("--{what} count"))?;
        let duration = parts[1].parse().with_context(|| format!("--{what} duration"))?;
        let amplitude = parts[2].parse().with_context(|| format!("--{what} amplitude"))?;
        let jitter = match parts.get(3) {
            Some(j) => j.parse().with_context(|| format!("--{what} jitter"))?,
            None => 0.0,
        };
        return Ok(Some(EventPlan::new(count, duration, amplitude).with_jitter(jitter)));
    }
    Ok(file.map(|p| EventPlan::new(p.count, p.duration, p.amplitude).with_jitter(p.jitter)))
}

fn cmd_synth(args: SynthArgs, file: &FileConfig, out_dir: &Path) -> Result<ExitCode> {
    let rate = pick(args.rate, file.rate, 50.0);
    let duration = pick(args.duration, file.duration, 600.0);
    let seed = pick(args.seed, file.seed, 0);
    let mut spec = SynthSpec::new(rate, duration, seed);
    if let Some(w) = pick_opt(args.vehicle_width, file.vehicle_width) {
        spec.vehicle_width = w;
    }
    spec.sd = parse_plan(args.sd.as_deref(), file.sd, "sd")?;
    spec.lpv = parse_plan(args.lpv.as_deref(), file.lpv, "lpv")?;
    spec.ittc = parse_plan(args.ittc.as_deref(), file.ittc, "ittc")?;

    let (log, truth) = generate(&spec)?;
    let log_path = out_dir.join("synthetic_log.csv");
    let file_out =
        File::create(&log_path).with_context(|| format!("creating {}", log_path.display()))?;
    write_csv(&log, file_out)?;
    write_json(&out_dir.join("ground_truth.json"), &truth)?;

    println!(
        "wrote {} frames and {} planted events to {}",
        log.len(),
        truth.len(),
        out_dir.display()
    );
    Ok(ExitCode::SUCCESS)
}
