//! Peak detection against a false-alarm-controlled threshold, and the
//! benchmark metrics: output SNR, confidence and estimation risk.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::hough::{line_to_chirp, ParamPlane};
use crate::pipeline::Pipeline;
use crate::rng::{derive_seed, Stream};
use crate::signal::{unit_noise, ComplexSignal};
use crate::tfr::Grid;

/// Relative parameter error above which a detection counts as a miss.
pub const MAX_REL_ERROR: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DetectionReport {
    pub detected: bool,
    pub rho_hat: f64,
    pub theta_hat: f64,
    /// `None` when the peak's line cannot be expressed as a chirp.
    pub f0_hat_hz: Option<f64>,
    pub g_hat_hz_per_s: Option<f64>,
    pub peak: f64,
    pub threshold: f64,
    pub confidence: f64,
}

impl DetectionReport {
    /// One `key=value` per line.
    pub fn to_key_value(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "none".to_string(), |x| x.to_string());
        let mut s = String::new();
        let _ = writeln!(s, "detected={}", self.detected);
        let _ = writeln!(s, "rho_hat={}", self.rho_hat);
        let _ = writeln!(s, "theta_hat={}", self.theta_hat);
        let _ = writeln!(s, "f0_hat_hz={}", opt(self.f0_hat_hz));
        let _ = writeln!(s, "g_hat_hz_per_s={}", opt(self.g_hat_hz_per_s));
        let _ = writeln!(s, "peak={}", self.peak);
        let _ = writeln!(s, "threshold={}", self.threshold);
        let _ = writeln!(s, "confidence={}", self.confidence);
        s
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }
}

/// `peak / eta`.
pub fn confidence(peak: f64, eta: f64) -> Result<f64> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::NonPositiveThreshold(eta));
    }
    Ok(peak / eta)
}

/// Compare the global maximum of `param` with `eta` and read the chirp
/// parameters off the maximizing bin.
pub fn detect_peak(param: &ParamPlane, eta: f64) -> Result<DetectionReport> {
    if param.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidPlane("parameter plane has non-finite values".into()));
    }
    let (rho, theta, peak) = param.argmax();
    let confidence = confidence(peak, eta)?;
    let grid = param.grid();
    let (rho_hat, theta_hat) = (grid.rho_center(rho), grid.theta_center(theta));
    let est = line_to_chirp(rho_hat, theta_hat, &param.source()).ok();
    Ok(DetectionReport {
        detected: peak >= eta,
        rho_hat,
        theta_hat,
        f0_hat_hz: est.map(|e| e.0),
        g_hat_hz_per_s: est.map(|e| e.1),
        peak,
        threshold: eta,
        confidence,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdMode {
    /// Empirical quantile of the noise-only max statistic.
    Calibrated,
    /// Exponential tail fit with a per-cell Šidák correction.
    Analytic,
}

impl std::str::FromStr for ThresholdMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "calibrated" => Ok(ThresholdMode::Calibrated),
            "analytic" => Ok(ThresholdMode::Analytic),
            other => Err(Error::InvalidPolicy(format!("unknown threshold mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ThresholdPolicy {
    pub mode: ThresholdMode,
    pub pf: f64,
    /// Noise-only run count (calibrated) or guard half-width in bins
    /// around the peak (analytic).
    pub calibration: usize,
}

impl ThresholdPolicy {
    pub fn calibrated(pf: f64, runs: usize) -> Self {
        ThresholdPolicy {
            mode: ThresholdMode::Calibrated,
            pf,
            calibration: runs,
        }
    }

    pub fn analytic(pf: f64, guard: usize) -> Self {
        ThresholdPolicy {
            mode: ThresholdMode::Analytic,
            pf,
            calibration: guard,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pf > 0.0 && self.pf < 1.0) {
            return Err(Error::InvalidPolicy(format!("pf must lie in (0, 1), got {}", self.pf)));
        }
        if self.mode == ThresholdMode::Calibrated {
            if self.calibration < 100 {
                return Err(Error::InvalidPolicy(format!(
                    "calibration needs at least 100 runs, got {}",
                    self.calibration
                )));
            }
            if (self.calibration as f64) * self.pf < 5.0 {
                return Err(Error::CalibrationUnderpowered {
                    runs: self.calibration,
                    pf: self.pf,
                });
            }
        }
        Ok(())
    }
}

/// Linear-interpolation quantile (type 7) of an ascending slice.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Per-cell false-alarm rate giving family-wise rate `pf` over `m` cells.
pub fn sidak_pf(pf: f64, m: usize) -> f64 {
    // 1 - (1-pf)^(1/m) without cancellation
    -((-pf).ln_1p() / m as f64).exp_m1()
}

/// Threshold from an exponential fit to the upper half of `cells`:
/// exceedances over the median are modeled as exponential, and the
/// threshold is the `(1 - pf_cell)` quantile of that tail with
/// `pf_cell` from [`sidak_pf`] over all `cells`.
pub fn analytic_threshold(cells: &[f64], pf: f64) -> Result<f64> {
    if !(pf > 0.0 && pf < 1.0) {
        return Err(Error::InvalidPolicy(format!("pf must lie in (0, 1), got {pf}")));
    }
    if cells.len() < 10 {
        return Err(Error::InvalidPolicy(format!(
            "tail fit needs at least 10 cells, got {}",
            cells.len()
        )));
    }
    let mut sorted = cells.to_vec();
    sorted.sort_by(f64::total_cmp);
    let u = quantile_sorted(&sorted, 0.5);
    let above: Vec<f64> = sorted.iter().filter(|&&v| v > u).map(|v| v - u).collect();
    if above.is_empty() {
        return Err(Error::UndefinedMetric("tail fit on a constant plane".into()));
    }
    let beta = above.iter().sum::<f64>() / above.len() as f64;
    let p_exceed = above.len() as f64 / sorted.len() as f64;
    let pf_cell = sidak_pf(pf, cells.len());
    let eta = u + beta * (p_exceed / pf_cell).ln();
    if !eta.is_finite() {
        return Err(Error::UndefinedMetric("tail fit produced a non-finite threshold".into()));
    }
    Ok(eta)
}

/// Cells of `param` outside a `(2 guard + 1)²` window around its peak,
/// restricted to bins that receive votes.
fn background_cells(pipeline: &Pipeline, param: &ParamPlane, guard: usize) -> Vec<f64> {
    let (r0, t0, _) = param.argmax();
    let grid = param.grid();
    let kernel = pipeline.kernel();
    let mut out = Vec::with_capacity(grid.bins());
    for theta in 0..grid.n_theta {
        for rho in 0..grid.n_rho {
            if rho.abs_diff(r0) <= guard && theta.abs_diff(t0) <= guard {
                continue;
            }
            if kernel.count(rho, theta) > 0 {
                out.push(param.get(rho, theta));
            }
        }
    }
    out
}

/// Noise-only input of the pipeline's length for calibration run `k`.
pub fn noise_input(pipeline: &Pipeline, seed: u64) -> Result<ComplexSignal> {
    let cfg = pipeline.config();
    ComplexSignal::new(unit_noise(cfg.n_samples, seed), cfg.sample_rate_hz)
}

/// Thresholds for every order `0..=max_order` from one shared set of
/// noise-only runs.
pub fn calibrate_thresholds(
    policy: &ThresholdPolicy,
    pipeline: &Pipeline,
    max_order: usize,
    master_seed: u64,
) -> Result<Vec<f64>> {
    policy.validate()?;
    match policy.mode {
        ThresholdMode::Calibrated => {
            let runs = policy.calibration;
            let maxima: Vec<Vec<f64>> = crate::harness::par_map(runs, |k| {
                let seed = derive_seed(master_seed, Stream::Calibration, &[k as u64]);
                let run = pipeline.run(&noise_input(pipeline, seed)?, max_order)?;
                Ok(run.params.iter().map(|p| p.argmax().2).collect())
            })?;
            Ok((0..=max_order)
                .map(|o| {
                    let mut m: Vec<f64> = maxima.iter().map(|r| r[o]).collect();
                    m.sort_by(f64::total_cmp);
                    quantile_sorted(&m, 1.0 - policy.pf)
                })
                .collect())
        }
        ThresholdMode::Analytic => {
            let seed = derive_seed(master_seed, Stream::Calibration, &[0]);
            let run = pipeline.run(&noise_input(pipeline, seed)?, max_order)?;
            run.params
                .iter()
                .map(|p| analytic_threshold(&background_cells(pipeline, p, policy.calibration), policy.pf))
                .collect()
        }
    }
}

/// Threshold for a single order.
pub fn calibrate_threshold(
    policy: &ThresholdPolicy,
    pipeline: &Pipeline,
    order: usize,
    master_seed: u64,
) -> Result<f64> {
    calibrate_thresholds(policy, pipeline, order, master_seed).map(|mut v| v.pop().expect("order 0"))
}

/// `10 log10(|mean(T_sn) - mean(T_n)|² / var(T_n))` over paired trials at
/// the true bin. Variance uses divisor `n`. Returns `-inf` when the means
/// coincide.
pub fn output_snr(t_sn: &[f64], t_n: &[f64]) -> Result<f64> {
    if t_sn.len() != t_n.len() {
        return Err(Error::UndefinedMetric(format!(
            "{} signal trials paired with {} noise trials",
            t_sn.len(),
            t_n.len()
        )));
    }
    if t_n.len() < 30 {
        return Err(Error::UndefinedMetric(format!(
            "output SNR needs at least 30 paired trials, got {}",
            t_n.len()
        )));
    }
    let n = t_n.len() as f64;
    let m_sn = t_sn.iter().sum::<f64>() / n;
    let m_n = t_n.iter().sum::<f64>() / n;
    let var = t_n.iter().map(|v| (v - m_n) * (v - m_n)).sum::<f64>() / n;
    if !(var > 0.0) {
        return Err(Error::UndefinedMetric("noise-only statistic has zero variance".into()));
    }
    let num = (m_sn - m_n) * (m_sn - m_n);
    if num == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(10.0 * (num / var).log10())
}

/// What one trial contributes to the risk metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub detected: bool,
    pub f0_hat_hz: Option<f64>,
    pub g_hat_hz_per_s: Option<f64>,
}

impl From<&DetectionReport> for TrialOutcome {
    fn from(r: &DetectionReport) -> Self {
        TrialOutcome {
            detected: r.detected,
            f0_hat_hz: r.f0_hat_hz,
            g_hat_hz_per_s: r.g_hat_hz_per_s,
        }
    }
}

impl TrialOutcome {
    /// Relative `(F, G)` errors if this is a detection within tolerance.
    pub fn accepted(&self, f0: f64, g: f64) -> Option<(f64, f64)> {
        if !self.detected {
            return None;
        }
        let ef = (self.f0_hat_hz? - f0).abs() / f0.abs();
        let eg = (self.g_hat_hz_per_s? - g).abs() / g.abs();
        (ef <= MAX_REL_ERROR && eg <= MAX_REL_ERROR).then_some((ef, eg))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Risk {
    pub pd: f64,
    pub err_f_pct: f64,
    pub err_g_pct: f64,
}

/// `(P_d · mean relative error + (1 - P_d) · 0.10) · 100%` for `F` and `G`.
/// Detections outside 10% relative error in either parameter count as misses.
pub fn estimation_risk(trials: &[TrialOutcome], f0_hz: f64, g_hz_per_s: f64) -> Result<Risk> {
    if f0_hz == 0.0 {
        return Err(Error::ZeroTruth("f0"));
    }
    if g_hz_per_s == 0.0 {
        return Err(Error::ZeroTruth("g"));
    }
    if trials.is_empty() {
        return Err(Error::UndefinedMetric("risk needs at least one trial".into()));
    }
    let hits: Vec<(f64, f64)> = trials.iter().filter_map(|t| t.accepted(f0_hz, g_hz_per_s)).collect();
    let pd = hits.len() as f64 / trials.len() as f64;
    let (mf, mg) = if hits.is_empty() {
        (0.0, 0.0)
    } else {
        let n = hits.len() as f64;
        (
            hits.iter().map(|h| h.0).sum::<f64>() / n,
            hits.iter().map(|h| h.1).sum::<f64>() / n,
        )
    };
    let risk = |m: f64| (pd * m + (1.0 - pd) * MAX_REL_ERROR) * 100.0;
    Ok(Risk {
        pd,
        err_f_pct: risk(mf),
        err_g_pct: risk(mg),
    })
}
