//! The per-trial processing chain: TF transform, scale normalization,
//! Hough transform and mapping-information weighting.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::hough::{chirp_to_line, line_to_chirp, HoughGrid, HoughKernel, ParamPlane, TfGeometry};
use crate::mi::{iterate_mi, standardize, CrossEntropy, IterateOptions, IterationTrace, Negentropy};
use crate::signal::{ChirpSpec, ComplexSignal};
use crate::tfr::{fsst, wvd, Axis, TfPlane, WindowSpec};

/// Default number of frequency bins for both transforms.
pub const DEFAULT_N_FREQ_BINS: usize = 128;

/// Which TF transform feeds the Hough stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Wigner-Ville distribution.
    Wht,
    /// Fourier synchrosqueezed transform.
    Fssht,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Wht => "wht",
            Method::Fssht => "fssht",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "wht" => Ok(Method::Wht),
            "fssht" => Ok(Method::Fssht),
            other => Err(Error::InvalidConfig(format!("unknown method `{other}`"))),
        }
    }
}

/// Everything that shapes the detection statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub method: Method,
    pub sample_rate_hz: f64,
    pub n_samples: usize,
    pub n_freq_bins: usize,
    pub window: WindowSpec,
    pub grid: HoughGrid,
}

impl PipelineConfig {
    /// Defaults for signals of `n_samples` at `sample_rate_hz`.
    pub fn new(method: Method, sample_rate_hz: f64, n_samples: usize) -> Self {
        PipelineConfig {
            method,
            sample_rate_hz,
            n_samples,
            n_freq_bins: DEFAULT_N_FREQ_BINS,
            window: WindowSpec::default(),
            grid: HoughGrid::default_for(n_samples, DEFAULT_N_FREQ_BINS),
        }
    }

    pub fn geometry(&self) -> TfGeometry {
        TfGeometry {
            nt: self.n_samples,
            nf: self.n_freq_bins,
            t_axis: Axis::new(0.0, 1.0 / self.sample_rate_hz),
            f_axis: Axis::new(0.0, self.sample_rate_hz / (2 * self.n_freq_bins) as f64),
        }
    }
}

/// Planes produced by one run up to some maximum order.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    /// Unit-variance TF plane fed to the Hough stage.
    pub tf0: TfPlane,
    /// `params[k]` is the parameter plane at order `k`.
    pub params: Vec<ParamPlane>,
    pub trace: IterationTrace,
}

/// A configured chain with a cached Hough kernel.
#[derive(Debug, Clone)]
pub struct Pipeline {
    config: PipelineConfig,
    kernel: HoughKernel,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self> {
        if !(config.sample_rate_hz > 0.0 && config.sample_rate_hz.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "sample rate must be positive, got {}",
                config.sample_rate_hz
            )));
        }
        if !config.n_freq_bins.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(config.n_freq_bins));
        }
        config.window.validate()?;
        let kernel = HoughKernel::new(config.geometry(), config.grid)?;
        Ok(Pipeline { config, kernel })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn kernel(&self) -> &HoughKernel {
        &self.kernel
    }

    /// Raw TF plane of `signal`.
    pub fn tfr(&self, signal: &ComplexSignal) -> Result<TfPlane> {
        if signal.len() != self.config.n_samples {
            return Err(Error::ShapeMismatch {
                expected: (self.config.n_samples, self.config.n_freq_bins),
                actual: (signal.len(), self.config.n_freq_bins),
            });
        }
        match self.config.method {
            Method::Wht => wvd(signal, self.config.n_freq_bins),
            Method::Fssht => fsst(signal, &self.config.window, 2 * self.config.n_freq_bins),
        }
    }

    /// Parameter planes for orders `0..=max_order` from a single weighting run.
    pub fn run(&self, signal: &ComplexSignal, max_order: usize) -> Result<PipelineRun> {
        let tf0 = standardize(&self.tfr(signal)?);
        let mut params = vec![self.kernel.forward(&tf0)?];
        let mut trace = IterationTrace::default();
        if max_order > 0 {
            let out = iterate_mi(
                &tf0,
                &self.kernel,
                max_order,
                &Negentropy,
                &CrossEntropy,
                IterateOptions { keep_snapshots: true },
            )?;
            trace = out.trace;
            for rec in &mut trace.records {
                params.push(rec.param.take().expect("snapshots kept"));
                rec.tf = None;
            }
        }
        Ok(PipelineRun { tf0, params, trace })
    }

    /// Parameter plane at a single order.
    pub fn statistic(&self, signal: &ComplexSignal, order: usize) -> Result<ParamPlane> {
        let mut run = self.run(signal, order)?;
        Ok(run.params.pop().expect("order 0 always present"))
    }

    /// `(rho, theta)` bin of a chirp's line.
    pub fn true_bin(&self, chirp: &ChirpSpec) -> Result<(usize, usize)> {
        chirp_to_line(
            chirp.f0_hz,
            chirp.chirp_rate_hz_per_s,
            &self.config.geometry(),
            &self.config.grid,
        )
    }

    /// `(F, G)` at the center of bin `(rho, theta)`.
    pub fn estimate(&self, rho: usize, theta: usize) -> Result<(f64, f64)> {
        let g = self.config.grid;
        line_to_chirp(g.rho_center(rho), g.theta_center(theta), &self.config.geometry())
    }
}
