//! Benchmark configuration, read from TOML.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::detector::{ThresholdMode, ThresholdPolicy};
use crate::error::{Error, Result};
use crate::hough::HoughGrid;
use crate::pipeline::{Method, PipelineConfig, DEFAULT_N_FREQ_BINS};
use crate::signal::{ChirpSpec, Snr};
use crate::tfr::WindowSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_n_theta")]
    pub n_theta: usize,
    /// Defaults to `2 max(N, n_freq_bins)`.
    #[serde(default)]
    pub n_rho: Option<usize>,
    #[serde(default = "default_n_freq_bins")]
    pub n_freq_bins: usize,
    #[serde(default = "default_window")]
    pub window_length: usize,
}

fn default_n_theta() -> usize {
    HoughGrid::DEFAULT_N_THETA
}

fn default_n_freq_bins() -> usize {
    DEFAULT_N_FREQ_BINS
}

fn default_window() -> usize {
    WindowSpec::default().length
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            n_theta: default_n_theta(),
            n_rho: None,
            n_freq_bins: default_n_freq_bins(),
            window_length: default_window(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChirpConfig {
    pub sample_rate_hz: f64,
    pub f0_hz: f64,
    pub chirp_rate_hz_per_s: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
    pub duration_s: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for ChirpConfig {
    fn default() -> Self {
        let fs = 20e6;
        let s = ChirpSpec::reference(fs);
        ChirpConfig {
            sample_rate_hz: fs,
            f0_hz: s.f0_hz,
            chirp_rate_hz_per_s: s.chirp_rate_hz_per_s,
            amplitude: s.amplitude,
            duration_s: s.duration_s,
        }
    }
}

impl ChirpConfig {
    pub fn spec(&self) -> ChirpSpec {
        ChirpSpec {
            f0_hz: self.f0_hz,
            chirp_rate_hz_per_s: self.chirp_rate_hz_per_s,
            amplitude: self.amplitude,
            duration_s: self.duration_s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdConfig {
    #[serde(default = "default_mode")]
    pub mode: ThresholdMode,
    /// Noise-only calibration runs (calibrated mode).
    #[serde(default = "default_runs")]
    pub runs: usize,
    /// Guard half-width around the peak (analytic mode).
    #[serde(default = "default_guard")]
    pub guard: usize,
}

fn default_mode() -> ThresholdMode {
    ThresholdMode::Calibrated
}

fn default_runs() -> usize {
    1000
}

fn default_guard() -> usize {
    3
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        ThresholdConfig {
            mode: default_mode(),
            runs: default_runs(),
            guard: default_guard(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub method: Method,
    /// Ascending; `inf` means no noise.
    pub snr_grid_db: Vec<f64>,
    /// Ascending iteration counts in `0..=4`.
    pub orders: Vec<usize>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub pf: f64,
    pub master_seed: u64,
    /// Write measured wall time per cell; disable for byte-identical reruns.
    #[serde(default = "yes")]
    pub record_wall_time: bool,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub chirp: ChirpConfig,
    #[serde(default)]
    pub threshold: ThresholdConfig,
}

fn default_trials() -> usize {
    300
}

fn yes() -> bool {
    true
}

pub const MAX_ORDER: usize = 4;

impl BenchConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: BenchConfig = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        BenchConfig::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.trials < 30 {
            return bad(format!("trials must be at least 30, got {}", self.trials));
        }
        if self.orders.is_empty() || self.snr_grid_db.is_empty() {
            return bad("orders and snr_grid_db must be nonempty".into());
        }
        if !self.orders.windows(2).all(|w| w[0] < w[1]) {
            return bad("orders must be strictly ascending".into());
        }
        if self.orders.iter().any(|&o| o > MAX_ORDER) {
            return bad(format!("orders must lie in 0..={MAX_ORDER}"));
        }
        if self.snr_grid_db.iter().any(|s| s.is_nan() || *s == f64::NEG_INFINITY) {
            return bad("snr values must be numbers or +inf".into());
        }
        if !self.snr_grid_db.windows(2).all(|w| w[0] < w[1]) {
            return bad("snr_grid_db must be strictly ascending".into());
        }
        self.policy().validate()?;
        self.chirp.spec().validate(self.chirp.sample_rate_hz)?;
        crate::pipeline::Pipeline::new(self.pipeline_config())?;
        Ok(())
    }

    pub fn policy(&self) -> ThresholdPolicy {
        match self.threshold.mode {
            ThresholdMode::Calibrated => ThresholdPolicy::calibrated(self.pf, self.threshold.runs),
            ThresholdMode::Analytic => ThresholdPolicy::analytic(self.pf, self.threshold.guard),
        }
    }

    pub fn n_samples(&self) -> usize {
        self.chirp.spec().sample_count(self.chirp.sample_rate_hz)
    }

    pub fn pipeline_config(&self) -> PipelineConfig {
        let n = self.n_samples();
        let nf = self.grid.n_freq_bins;
        PipelineConfig {
            method: self.method,
            sample_rate_hz: self.chirp.sample_rate_hz,
            n_samples: n,
            n_freq_bins: nf,
            window: WindowSpec {
                length: self.grid.window_length,
            },
            grid: HoughGrid {
                n_theta: self.grid.n_theta,
                n_rho: self.grid.n_rho.unwrap_or(2 * n.max(nf)),
            },
        }
    }

    pub fn max_order(&self) -> usize {
        *self.orders.last().expect("validated nonempty")
    }
}

/// `+inf` dB maps to the noiseless sentinel.
pub fn snr_of(db: f64) -> Snr {
    if db == f64::INFINITY {
        Snr::NoNoise
    } else {
        Snr::Db(db)
    }
}
