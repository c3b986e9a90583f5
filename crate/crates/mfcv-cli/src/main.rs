//! `mfcv`: batch conduction-velocity analysis for two-channel EMG CSVs.
//!
//! Four subcommands cover the whole workflow:
//!
//! - `generate` — synthesize a recording with a known delay profile;
//! - `estimate` — run the estimation pipeline over a recording CSV and
//!   save every window estimate plus per-second statistics as JSON;
//! - `report` — render a saved run as a plain-text report (optionally with
//!   plot-ready per-second CSV);
//! - `compare` — print per-row verdicts against the built-in literature
//!   table.
//!
//! Every writer is deterministic, so identical invocations produce
//! byte-identical artifacts.

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use mfcv_core::{
    build_report, compare_literature, emit_plot_data, estimate_series, gain_sweep,
    load_recording_csv, load_run, mean_and_sample_sd, save_run, synthesize, write_recording_csv,
    write_report, DelayProfile, EstimateRun, EstimateStatus, EstimatorConfig, ExpectedSign,
    QuantizerConfig, SamplingRate,
};

#[derive(Parser)]
#[command(
    name = "mfcv",
    version,
    about = "Muscle-fiber conduction velocity estimation from two-channel EMG recordings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a two-channel recording with a known delay and write it
    /// as a `t,chA,chB` CSV.
    Generate {
        /// Recording length in seconds.
        #[arg(long, default_value_t = 34.0)]
        duration: f64,
        /// Sampling rate in hertz.
        #[arg(long, default_value_t = 2200.0)]
        rate: f64,
        /// Ground-truth delay in samples: `constant:<d>` or `ramp:<d0>:<d1>`.
        #[arg(long, value_parser = parse_delay_profile)]
        delay_profile: DelayProfile,
        /// Uniform noise amplitude in volts, added to both channels.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Generator seed; equal seeds give byte-identical recordings.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate conduction velocity over a recording CSV and save the run
    /// (estimates + per-second series) as JSON.
    Estimate {
        /// Recording CSV (`t,chA,chB`).
        #[arg(long)]
        input: PathBuf,
        /// Electrode distance in meters.
        #[arg(long, default_value_t = 0.025)]
        distance: f64,
        /// Sampling rate in hertz.
        #[arg(long, default_value_t = 2200.0)]
        rate: f64,
        /// Lowest modulation gain of the sweep.
        #[arg(long, default_value_t = 1.0)]
        gain_min: f64,
        /// Highest modulation gain of the sweep.
        #[arg(long, default_value_t = 1.5)]
        gain_max: f64,
        /// Gain sweep step.
        #[arg(long, default_value_t = 0.1)]
        gain_step: f64,
        /// Analysis window (and hop) in samples.
        #[arg(long, default_value_t = 2200, value_parser = clap::value_parser!(u64).range(2..))]
        window: u64,
        /// Peak-voltage floor; quieter windows are skipped.
        #[arg(long, default_value_t = 0.2)]
        amp_min: f64,
        /// Physiological velocity ceiling in m/s.
        #[arg(long, default_value_t = 6.0)]
        mfcv_max: f64,
        /// Output JSON path for the run.
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a saved run as a plain-text report.
    Report {
        /// Run JSON written by `estimate`.
        #[arg(long)]
        series: PathBuf,
        /// Output report path.
        #[arg(long)]
        out: PathBuf,
        /// Also write the per-second plot CSV here.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Compare a saved run against published conduction-velocity ranges.
    Compare {
        /// Run JSON written by `estimate`.
        #[arg(long)]
        series: PathBuf,
    },
}

/// Parses the `--delay-profile` grammar: `constant:<d>` or `ramp:<d0>:<d1>`
/// with delays in samples.
fn parse_delay_profile(spec: &str) -> Result<DelayProfile, String> {
    let parse = |raw: &str| {
        raw.parse::<f64>()
            .map_err(|_| format!("bad delay value {raw:?}"))
    };
    let profile = match spec.split(':').collect::<Vec<_>>().as_slice() {
        ["constant", d] => DelayProfile::constant(parse(d)?),
        ["ramp", d0, d1] => DelayProfile::ramp(parse(d0)?, parse(d1)?),
        _ => {
            return Err(format!(
                "expected `constant:<d>` or `ramp:<d0>:<d1>`, got {spec:?}"
            ))
        }
    };
    profile.map_err(|e| e.to_string())
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Generate {
            duration,
            rate,
            delay_profile,
            noise,
            seed,
            out,
        } => cmd_generate(duration, rate, &delay_profile, noise, seed, &out),
        Command::Estimate {
            input,
            distance,
            rate,
            gain_min,
            gain_max,
            gain_step,
            window,
            amp_min,
            mfcv_max,
            out,
        } => cmd_estimate(
            &input, distance, rate, gain_min, gain_max, gain_step, window as usize, amp_min,
            mfcv_max, &out,
        ),
        Command::Report { series, out, plot } => cmd_report(&series, &out, plot.as_deref()),
        Command::Compare { series } => cmd_compare(&series),
    }
}

fn cmd_generate(
    duration: f64,
    rate: f64,
    profile: &DelayProfile,
    noise: f64,
    seed: u64,
    out: &std::path::Path,
) -> anyhow::Result<()> {
    let rate = SamplingRate::new(rate)?;
    let rec = synthesize(duration, rate, profile, noise, seed)?;
    write_recording_csv(&rec, out)?;
    println!(
        "wrote {} ({} samples at {} Hz)",
        out.display(),
        rec.len(),
        rate.hertz
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_estimate(
    input: &std::path::Path,
    distance: f64,
    rate: f64,
    gain_min: f64,
    gain_max: f64,
    gain_step: f64,
    window: usize,
    amp_min: f64,
    mfcv_max: f64,
    out: &std::path::Path,
) -> anyhow::Result<()> {
    let rate = SamplingRate::new(rate)?;
    let rec = load_recording_csv(input, rate, distance)?;
    let config = EstimatorConfig {
        window_samples: window,
        hop_samples: window,
        gains: gain_sweep(gain_min, gain_max, gain_step)?,
        quantizer: QuantizerConfig::default(),
        amplitude_min_v: amp_min,
        mfcv_max_ms: mfcv_max,
        expected_sign: ExpectedSign::Negative,
    };
    let (estimates, series) = estimate_series(&rec, &config)?;
    let run = EstimateRun {
        rate_hz: rate.hertz,
        electrode_distance_m: distance,
        config,
        estimates,
        series,
    };
    save_run(&run, out)?;
    println!("{}", summary_line(&run));
    Ok(())
}

/// One machine-greppable line: `mean=<m/s> sd=<m/s> slope=<m/s per s>`,
/// with `none` for undefined statistics.
fn summary_line(run: &EstimateRun) -> String {
    let valid: Vec<f64> = run
        .estimates
        .iter()
        .filter(|e| e.status == EstimateStatus::Valid)
        .filter_map(|e| e.mfcv_ms)
        .collect();
    let (mean, sd) = mean_and_sample_sd(&valid);
    let fmt3 = |v: Option<f64>| v.map_or_else(|| "none".to_owned(), |v| format!("{v:.3}"));
    let slope = run
        .series
        .trend
        .map_or_else(|| "none".to_owned(), |t| format!("{:.6}", t.slope_ms_per_s));
    format!("mean={} sd={} slope={}", fmt3(mean), fmt3(sd), slope)
}

fn cmd_report(
    series: &std::path::Path,
    out: &std::path::Path,
    plot: Option<&std::path::Path>,
) -> anyhow::Result<()> {
    let run = load_run(series)?;
    let document = build_report(&run);
    write_report(&document, out)?;
    if let Some(plot) = plot {
        emit_plot_data(&run.series, plot)?;
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_compare(series: &std::path::Path) -> anyhow::Result<()> {
    let run = load_run(series)?;
    let report = compare_literature(&run.series)?;
    let pooled = report
        .pooled_sd_ms
        .map_or_else(|| "none".to_owned(), |v| format!("{v:.6}"));
    println!(
        "grand_mean={:.6} pooled_sd={} n_valid={}",
        report.grand_mean_ms, pooled, report.total_valid
    );
    for v in &report.verdicts {
        let diff = v
            .abs_mean_diff_ms
            .map_or_else(|| "-".to_owned(), |d| format!("{d:.6}"));
        println!(
            "{}: interval [{}, {}] {} abs_mean_diff={}",
            v.label,
            v.interval_ms.0,
            v.interval_ms.1,
            if v.inside_interval { "inside" } else { "outside" },
            diff
        );
    }
    Ok(())
}
