//! Command-line front end. Exit codes: 0 success, 1 usage, 2 runtime.

use std::ffi::OsString;
use std::io::BufReader;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::detector::{calibrate_threshold, detect_peak, ThresholdMode, ThresholdPolicy};
use crate::error::Result;
use crate::harness::config::{snr_of, BenchConfig};
use crate::harness::report::{plot_data, read_report_csv, series_csv, summarize, summary_table, write_report};
use crate::harness::{init_workers, run_bench};
use crate::hough::HoughGrid;
use crate::pipeline::{Method, Pipeline, PipelineConfig, DEFAULT_N_FREQ_BINS};
use crate::rng::{derive_seed, Stream};
use crate::signal::{add_awgn, read_iq, synth_chirp, write_iq, ChirpSpec};
use crate::tfr::{write_plane_csv, WindowSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "chirp-mi", version, about = "Chirp detection with mapping-information weighted Hough transforms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct TfArgs {
    /// wht (Wigner-Ville) or fssht (synchrosqueezed STFT)
    #[arg(long, default_value = "wht")]
    method: Method,
    /// Frequency bins over [0, Fs/2), a power of two
    #[arg(long, default_value_t = DEFAULT_N_FREQ_BINS)]
    n_freq_bins: usize,
    /// Gaussian window length for fssht
    #[arg(long, default_value_t = 63)]
    window: usize,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a chirp, optionally in noise, as an IQ file
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20e6)]
        fs: f64,
        #[arg(long, default_value_t = 5e6)]
        f0: f64,
        #[arg(long, default_value_t = -5e11, allow_negative_numbers = true)]
        rate: f64,
        #[arg(long, default_value_t = 10e-6)]
        duration: f64,
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
        /// Input SNR in dB; omit for a noiseless chirp
        #[arg(long, allow_negative_numbers = true)]
        snr: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Convert an IQ file into a TF plane CSV
    Tfr {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        tf: TfArgs,
    },
    /// Detect the strongest chirp in an IQ file
    Detect {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        tf: TfArgs,
        /// Weighting iterations, 0 for the plain Hough transform
        #[arg(long, default_value_t = 4)]
        order: usize,
        /// Target false-alarm probability
        #[arg(long, default_value_t = 1e-2)]
        pf: f64,
        /// Seed for the noise-only calibration runs
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// calibrated or analytic
        #[arg(long, default_value = "calibrated")]
        threshold_mode: ThresholdMode,
        /// Calibration runs; defaults to max(100, ceil(5 / pf))
        #[arg(long)]
        runs: Option<usize>,
        /// Guard half-width for the analytic tail fit
        #[arg(long, default_value_t = 3)]
        guard: usize,
        /// Print JSON instead of key=value lines
        #[arg(long)]
        json: bool,
    },
    /// Run a benchmark config and write results.csv and summary.csv
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarize a results CSV, or emit plot series for one metric
    Report {
        #[arg(long)]
        input: PathBuf,
        /// pd, output_snr, confidence, err_f or err_g
        #[arg(long)]
        metric: Option<String>,
    },
}

impl TfArgs {
    fn pipeline(&self, fs: f64, n: usize) -> Result<Pipeline> {
        Pipeline::new(PipelineConfig {
            n_freq_bins: self.n_freq_bins,
            window: WindowSpec::new(self.window)?,
            grid: HoughGrid::default_for(n, self.n_freq_bins),
            ..PipelineConfig::new(self.method, fs, n)
        })
    }
}

fn open(path: &PathBuf) -> Result<BufReader<std::fs::File>> {
    Ok(BufReader::new(std::fs::File::open(path)?))
}

fn execute(cmd: Command) -> Result<String> {
    match cmd {
        Command::Synth { out, fs, f0, rate, duration, amplitude, snr, seed } => {
            let spec = ChirpSpec { f0_hz: f0, chirp_rate_hz_per_s: rate, amplitude, duration_s: duration };
            let clean = synth_chirp(&spec, fs)?;
            let sig = match snr {
                Some(db) => add_awgn(&clean, snr_of(db), derive_seed(seed, Stream::Adhoc, &[]))?,
                None => clean,
            };
            write_iq(std::fs::File::create(&out)?, &sig)?;
            Ok(format!("wrote {} samples to {}\n", sig.len(), out.display()))
        }
        Command::Tfr { input, out, tf } => {
            let sig = read_iq(open(&input)?)?;
            let plane = tf.pipeline(sig.sample_rate_hz(), sig.len())?.tfr(&sig)?;
            write_plane_csv(std::io::BufWriter::new(std::fs::File::create(&out)?), &plane)?;
            Ok(format!("wrote {}x{} plane to {}\n", plane.nt(), plane.nf(), out.display()))
        }
        Command::Detect { input, tf, order, pf, seed, threshold_mode, runs, guard, json } => {
            init_workers();
            let sig = read_iq(open(&input)?)?;
            let pipeline = tf.pipeline(sig.sample_rate_hz(), sig.len())?;
            let policy = match threshold_mode {
                ThresholdMode::Calibrated => {
                    let k = runs.unwrap_or_else(|| ((5.0 / pf).ceil() as usize).max(100));
                    ThresholdPolicy::calibrated(pf, k)
                }
                ThresholdMode::Analytic => ThresholdPolicy::analytic(pf, guard),
            };
            let eta = calibrate_threshold(&policy, &pipeline, order, seed)?;
            let report = detect_peak(&pipeline.statistic(&sig, order)?, eta)?;
            if json {
                Ok(report.to_json()? + "\n")
            } else {
                Ok(report.to_key_value())
            }
        }
        Command::Bench { config, out } => {
            let cfg = BenchConfig::load(&config)?;
            let result = run_bench(&cfg)?;
            let paths = write_report(&result, &out)?;
            let mut s = summary_table(&summarize(&result));
            for p in paths {
                s.push_str(&format!("wrote {}\n", p.display()));
            }
            Ok(s)
        }
        Command::Report { input, metric } => {
            let result = read_report_csv(open(&input)?)?;
            match metric {
                Some(m) => Ok(series_csv(&plot_data(&result, &m)?)),
                None => Ok(summary_table(&summarize(&result))),
            }
        }
    }
}

/// Parse `argv` (including the program name), run, and return the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(out) => {
            print!("{out}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}
