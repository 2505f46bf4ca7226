//! Mapping-information weights and the bidirectional iteration.
//!
//! Parameter-plane weights come from the negentropy-style criterion
//! `ln(1 + l / (√(2π) σ̃))` over each bin's vote preimage; TF-plane
//! weights come from the cross-entropy-style criterion
//! `√(2π) σ̃ / l + ln l + σ̃ / (6 l)` over the parameter values each cell
//! votes into. Weights are max-normalized, multiplied onto their plane, and
//! the product is divided by its global standard deviation.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::hough::{HoughGrid, HoughKernel, MappingSetStats, ParamPlane, StatsGrid};
use crate::tfr::{Grid, TfPlane};

/// `σ̃` floor for the negentropy criterion, relative to the plane RMS.
pub const SIGMA_FLOOR_REL: f64 = 1e-12;

fn sqrt_2pi() -> f64 {
    (2.0 * PI).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum CriterionTag {
    NegentropyParam,
    CrossentTf,
    Custom,
}

/// A weighting rule over mapping-set statistics.
///
/// Builders never call a criterion on an empty set; unreachable cells get
/// weight 0. `plane_rms` is the RMS of the plane the members were drawn
/// from, for criteria that need a scale-aware floor.
pub trait Criterion: Sync {
    fn tag(&self) -> CriterionTag;
    fn weight(&self, stats: &MappingSetStats, plane_rms: f64) -> Result<f64>;
}

/// `ln(1 + l / (√(2π) σ̃))`, with `σ̃` floored at `sigma_floor` so that a
/// zero-spread set gets the finite cap `ln(1 + l / (√(2π) sigma_floor))`.
/// Empty sets weigh 0.
pub fn weight_negentropy(stats: &MappingSetStats, sigma_floor: f64) -> f64 {
    if stats.l == 0 {
        return 0.0;
    }
    let sigma = stats.std.max(sigma_floor);
    (stats.l as f64 / (sqrt_2pi() * sigma)).ln_1p()
}

/// `√(2π) σ̃ / l + ln l + σ̃ / (6 l)`.
pub fn weight_crossentropy(stats: &MappingSetStats) -> Result<f64> {
    if stats.l == 0 {
        return Err(Error::EmptySet);
    }
    let l = stats.l as f64;
    Ok(sqrt_2pi() * stats.std / l + l.ln() + stats.std / (6.0 * l))
}

fn sigma_floor(plane_rms: f64) -> f64 {
    if plane_rms > 0.0 {
        SIGMA_FLOOR_REL * plane_rms
    } else {
        SIGMA_FLOOR_REL
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Negentropy;

impl Criterion for Negentropy {
    fn tag(&self) -> CriterionTag {
        CriterionTag::NegentropyParam
    }

    fn weight(&self, stats: &MappingSetStats, plane_rms: f64) -> Result<f64> {
        Ok(weight_negentropy(stats, sigma_floor(plane_rms)))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CrossEntropy;

impl Criterion for CrossEntropy {
    fn tag(&self) -> CriterionTag {
        CriterionTag::CrossentTf
    }

    fn weight(&self, stats: &MappingSetStats, _plane_rms: f64) -> Result<f64> {
        weight_crossentropy(stats)
    }
}

/// Nonnegative weights congruent with a target plane, max-normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    pub values: Vec<f64>,
    /// Storage shape of the target plane.
    pub shape: (usize, usize),
    /// Largest weight before normalization; `values * scale` recovers the
    /// raw criterion output.
    pub scale: f64,
    pub criterion: CriterionTag,
}

impl WeightMatrix {
    pub fn ones(shape: (usize, usize)) -> Self {
        WeightMatrix {
            values: vec![1.0; shape.0 * shape.1],
            shape,
            scale: 1.0,
            criterion: CriterionTag::Custom,
        }
    }

    /// Normalize raw weights by their maximum (all-zero stays all-zero).
    pub fn from_raw(mut values: Vec<f64>, shape: (usize, usize), criterion: CriterionTag) -> Self {
        let max = values.iter().fold(0.0f64, |m, &v| m.max(v));
        if max > 0.0 {
            for v in &mut values {
                *v /= max;
            }
        }
        WeightMatrix {
            values,
            shape,
            scale: max,
            criterion,
        }
    }

    pub fn raw(&self, i: usize) -> f64 {
        self.values[i] * self.scale
    }
}

fn rms(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt()
}

fn weights_from_stats(
    stats: &StatsGrid,
    criterion: &dyn Criterion,
    plane_rms: f64,
) -> Result<WeightMatrix> {
    let raw = stats
        .stats
        .iter()
        .map(|s| {
            if s.l == 0 {
                return Ok(0.0);
            }
            let w = criterion.weight(s, plane_rms)?;
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidPlane(format!("criterion produced weight {w}")));
            }
            Ok(w)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(WeightMatrix::from_raw(raw, stats.shape, criterion.tag()))
}

/// Forward transform of `plane` together with its parameter-plane weights.
pub fn param_weights_with(
    kernel: &HoughKernel,
    plane: &TfPlane,
    criterion: &dyn Criterion,
) -> Result<(ParamPlane, WeightMatrix)> {
    let (t, stats) = kernel.forward_with_stats(plane)?;
    let w = weights_from_stats(&stats, criterion, rms(plane.values()))?;
    Ok((t, w))
}

pub fn build_param_weights(
    plane: &TfPlane,
    grid: HoughGrid,
    criterion: &dyn Criterion,
) -> Result<WeightMatrix> {
    let kernel = HoughKernel::for_plane(plane, grid)?;
    param_weights_with(&kernel, plane, criterion).map(|(_, w)| w)
}

pub fn tf_weights_with(
    kernel: &HoughKernel,
    param: &ParamPlane,
    criterion: &dyn Criterion,
) -> Result<WeightMatrix> {
    let stats = kernel.tf_stats(param)?;
    weights_from_stats(&stats, criterion, rms(param.values()))
}

pub fn build_tf_weights(param: &ParamPlane, criterion: &dyn Criterion) -> Result<WeightMatrix> {
    let kernel = HoughKernel::new(param.source(), param.grid())?;
    tf_weights_with(&kernel, param, criterion)
}

/// Population standard deviation, two-pass, fixed summation order.
pub fn population_std(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
}

/// Divide by the global standard deviation (no mean removal). Constant
/// planes, including all-zero ones, pass through unchanged.
pub fn standardize<P: Grid + Clone>(plane: &P) -> P {
    let mut out = plane.clone();
    let std = population_std(out.values());
    if std > 0.0 && std.is_finite() {
        for v in out.values_mut() {
            *v /= std;
        }
    }
    out
}

/// Cellwise product with `weights`, then [`standardize`].
pub fn apply_and_standardize<P: Grid + Clone>(plane: &P, weights: &WeightMatrix) -> Result<P> {
    if plane.shape() != weights.shape || plane.values().len() != weights.values.len() {
        return Err(Error::ShapeMismatch {
            expected: plane.shape(),
            actual: weights.shape,
        });
    }
    let mut out = plane.clone();
    for (v, w) in out.values_mut().iter_mut().zip(&weights.values) {
        *v *= w;
    }
    Ok(standardize(&out))
}

/// Clamp negatives to zero and scale to unit sum.
pub fn to_probability<P: Grid>(plane: &P) -> Result<Vec<f64>> {
    let clamped: Vec<f64> = plane.values().iter().map(|v| v.max(0.0)).collect();
    let total: f64 = clamped.iter().sum();
    if !(total > 0.0) {
        return Err(Error::AllZeroPlane);
    }
    Ok(clamped.into_iter().map(|v| v / total).collect())
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IterateOptions {
    /// Keep `D^i` and `T^i` for every iteration in the trace.
    pub keep_snapshots: bool,
}

#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub param_weights: WeightMatrix,
    pub tf_weights: WeightMatrix,
    pub param: Option<ParamPlane>,
    pub tf: Option<TfPlane>,
}

#[derive(Debug, Clone, Default)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
}

impl IterationTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct MiOutput {
    pub tf: TfPlane,
    pub param: ParamPlane,
    pub trace: IterationTrace,
}

/// Run `order` rounds of bidirectional weighting.
///
/// `D⁰` is `tf0` scaled to unit standard deviation. Iteration `i`:
/// `T_raw = H(D^{i-1})`, `W_p` from the preimages of `D^{i-1}`,
/// `T^i = std(T_raw ⊙ W_p)`, `W_tf` from `T^i`, `D^i = std(D^{i-1} ⊙ W_tf)`.
/// Order 0 returns `tf0` and its plain Hough transform.
pub fn iterate_mi(
    tf0: &TfPlane,
    kernel: &HoughKernel,
    order: usize,
    param_criterion: &dyn Criterion,
    tf_criterion: &dyn Criterion,
    options: IterateOptions,
) -> Result<MiOutput> {
    if order == 0 {
        return Ok(MiOutput {
            tf: tf0.clone(),
            param: kernel.forward(tf0)?,
            trace: IterationTrace::default(),
        });
    }
    let mut d = standardize(tf0);
    let mut trace = IterationTrace::default();
    let mut t = None;
    for _ in 0..order {
        let (t_raw, w_p) = param_weights_with(kernel, &d, param_criterion)?;
        let t_i = apply_and_standardize(&t_raw, &w_p)?;
        let w_tf = tf_weights_with(kernel, &t_i, tf_criterion)?;
        d = apply_and_standardize(&d, &w_tf)?;
        trace.records.push(IterationRecord {
            param_weights: w_p,
            tf_weights: w_tf,
            param: options.keep_snapshots.then(|| t_i.clone()),
            tf: options.keep_snapshots.then(|| d.clone()),
        });
        t = Some(t_i);
    }
    Ok(MiOutput {
        tf: d,
        param: t.expect("order >= 1"),
        trace,
    })
}

/// Convenience wrapper building the kernel and using the default criteria.
pub fn iterate_mi_default(tf0: &TfPlane, grid: HoughGrid, order: usize) -> Result<MiOutput> {
    let kernel = HoughKernel::for_plane(tf0, grid)?;
    iterate_mi(tf0, &kernel, order, &Negentropy, &CrossEntropy, IterateOptions::default())
}

/// Change in the raw parameter weights between consecutive iterations,
/// `Δw^i = w^{i+1} - w^i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaSummary {
    /// `i` in `Δw^i`, starting at 1.
    pub iteration: usize,
    pub max_abs: f64,
    pub median_abs: f64,
    /// `Δw^i` at the designated bin, if one was given.
    pub at_bin: Option<f64>,
}

fn median(values: &mut [f64]) -> f64 {
    let n = values.len();
    if n == 0 {
        return 0.0;
    }
    let mid = n / 2;
    let (_, &mut hi, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    if n % 2 == 1 {
        hi
    } else {
        let lo = values[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lo + hi)
    }
}

/// Per-iteration summaries of `Δw` over the parameter weights in `trace`,
/// taken over bins with a nonempty preimage.
/// `bin` is a `(rho, theta)` index into the parameter grid.
pub fn weight_delta_summary(
    trace: &IterationTrace,
    bin: Option<(usize, usize)>,
) -> Result<Vec<DeltaSummary>> {
    if trace.len() < 2 {
        return Err(Error::TraceTooShort {
            len: trace.len(),
            min: 2,
        });
    }
    let (n_theta, n_rho) = trace.records[0].param_weights.shape;
    let idx = bin.map(|(rho, theta)| {
        debug_assert!(rho < n_rho && theta < n_theta);
        theta * n_rho + rho
    });
    Ok(trace
        .records
        .windows(2)
        .enumerate()
        .map(|(i, pair)| {
            let (a, b) = (&pair[0].param_weights, &pair[1].param_weights);
            let at_bin = idx.map(|k| b.raw(k) - a.raw(k));
            // bins with an empty preimage weigh 0 at every iteration
            let mut deltas: Vec<f64> = (0..a.values.len())
                .filter(|&k| a.values[k] > 0.0 || b.values[k] > 0.0)
                .map(|k| (b.raw(k) - a.raw(k)).abs())
                .collect();
            let max_abs = deltas.iter().copied().fold(0.0, f64::max);
            DeltaSummary {
                iteration: i + 1,
                max_abs,
                median_abs: median(&mut deltas),
                at_bin,
            }
        })
        .collect())
}

/// Raw parameter weight at `(rho, theta)` for every iteration in `trace`.
pub fn weight_history(trace: &IterationTrace, rho: usize, theta: usize) -> Vec<f64> {
    trace
        .records
        .iter()
        .map(|r| {
            let n_rho = r.param_weights.shape.1;
            r.param_weights.raw(theta * n_rho + rho)
        })
        .collect()
}

/// Dump `w_param_<i>.csv` and `w_tf_<i>.csv` (1-based `i`) into `dir`.
pub fn write_trace_csv(trace: &IterationTrace, dir: &std::path::Path) -> Result<()> {
    use std::io::Write;
    std::fs::create_dir_all(dir)?;
    let dump = |name: String, w: &WeightMatrix| -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join(name))?);
        for row in w.values.chunks_exact(w.shape.1) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(f, "{}", line.join(","))?;
        }
        f.flush()?;
        Ok(())
    };
    for (i, r) in trace.records.iter().enumerate() {
        dump(format!("w_param_{}.csv", i + 1), &r.param_weights)?;
        dump(format!("w_tf_{}.csv", i + 1), &r.tf_weights)?;
    }
    Ok(())
}
