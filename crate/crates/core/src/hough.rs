//! Hough voting between a TF plane and the `(ρ, θ)` parameter plane.
//!
//! Each TF cell at unit-square coordinates `(x, y)` votes, for every angle
//! `θ_j`, into the rho bin containing `x cos θ_j + y sin θ_j`. One vote
//! table drives every direction: the forward sum, the mapping-set
//! statistics of each parameter bin (its vote preimage), and the
//! statistics of the parameter values each TF cell votes into. The
//! forward sum is therefore exactly the sum over each bin's mapping set.

use std::f64::consts::{PI, SQRT_2};
use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::tfr::{Axis, Grid, TfPlane};

/// Parameter-plane discretization: `θ ∈ [0, π)` with centers at
/// `(j + 0.5) π / n_theta`, `ρ ∈ [-√2, √2]` split into `n_rho` bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct HoughGrid {
    pub n_theta: usize,
    pub n_rho: usize,
}

impl HoughGrid {
    pub const DEFAULT_N_THETA: usize = 180;

    pub fn new(n_theta: usize, n_rho: usize) -> Result<Self> {
        let g = HoughGrid { n_theta, n_rho };
        g.validate()?;
        Ok(g)
    }

    /// 180 angles and `2 max(nt, nf)` rho bins.
    pub fn default_for(nt: usize, nf: usize) -> Self {
        HoughGrid {
            n_theta: Self::DEFAULT_N_THETA,
            n_rho: 2 * nt.max(nf),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_theta < 30 || self.n_rho < 30 {
            return Err(Error::InvalidGrid(format!(
                "need at least 30 bins per axis, got n_theta={} n_rho={}",
                self.n_theta, self.n_rho
            )));
        }
        if self.n_rho > u16::MAX as usize {
            return Err(Error::InvalidGrid(format!("n_rho {} too large", self.n_rho)));
        }
        Ok(())
    }

    pub fn d_theta(&self) -> f64 {
        PI / self.n_theta as f64
    }

    pub fn d_rho(&self) -> f64 {
        2.0 * SQRT_2 / self.n_rho as f64
    }

    pub fn theta_center(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.d_theta()
    }

    pub fn rho_center(&self, i: usize) -> f64 {
        -SQRT_2 + (i as f64 + 0.5) * self.d_rho()
    }

    /// Rho bin containing `rho`, clamped to the grid.
    #[inline]
    pub fn rho_bin(&self, rho: f64) -> usize {
        let b = ((rho + SQRT_2) / self.d_rho()).floor();
        if b <= 0.0 {
            0
        } else {
            (b as usize).min(self.n_rho - 1)
        }
    }

    pub fn theta_bin(&self, theta: f64) -> usize {
        let j = (theta / self.d_theta() - 0.5).round();
        if j <= 0.0 {
            0
        } else {
            (j as usize).min(self.n_theta - 1)
        }
    }

    pub fn bins(&self) -> usize {
        self.n_theta * self.n_rho
    }
}

/// Shape and axes of the TF plane a parameter plane was built from.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TfGeometry {
    pub nt: usize,
    pub nf: usize,
    pub t_axis: Axis,
    pub f_axis: Axis,
}

impl TfGeometry {
    pub fn of(plane: &TfPlane) -> Self {
        TfGeometry {
            nt: plane.nt(),
            nf: plane.nf(),
            t_axis: plane.t_axis(),
            f_axis: plane.f_axis(),
        }
    }

    pub fn t_span(&self) -> f64 {
        (self.nt - 1) as f64 * self.t_axis.step
    }

    pub fn f_span(&self) -> f64 {
        (self.nf - 1) as f64 * self.f_axis.step
    }

    fn check(&self) -> Result<()> {
        if self.nt < 2 || self.nf < 2 {
            return Err(Error::DegenerateAxis(format!(
                "plane {}x{} needs at least two cells per axis",
                self.nt, self.nf
            )));
        }
        Ok(())
    }
}

/// Unit-square coordinates of every TF cell: `x = t/(Nt-1)`, `y = f/(Nf-1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitCoords {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl UnitCoords {
    pub fn cell(&self, t: usize, f: usize) -> (f64, f64) {
        (self.xs[t], self.ys[f])
    }
}

fn unit_coords(geom: &TfGeometry) -> Result<UnitCoords> {
    geom.check()?;
    let xs = (0..geom.nt).map(|t| t as f64 / (geom.nt - 1) as f64).collect();
    let ys = (0..geom.nf).map(|f| f as f64 / (geom.nf - 1) as f64).collect();
    Ok(UnitCoords { xs, ys })
}

pub fn normalize_axes(plane: &TfPlane) -> Result<UnitCoords> {
    unit_coords(&TfGeometry::of(plane))
}

/// `(l, μ, σ̃)` of the values one kernel maps into one target cell;
/// `σ̃` uses the population divisor and is 0 for `l <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MappingSetStats {
    pub l: usize,
    pub mean: f64,
    pub std: f64,
}

impl MappingSetStats {
    pub fn from_moments(l: usize, sum: f64, sum_sq: f64) -> Self {
        if l == 0 {
            return MappingSetStats::default();
        }
        let n = l as f64;
        let mean = sum / n;
        let std = if l == 1 {
            0.0
        } else {
            (sum_sq / n - mean * mean).max(0.0).sqrt()
        };
        MappingSetStats { l, mean, std }
    }

    /// Two-pass statistics of an explicit member list.
    pub fn from_members(members: &[f64]) -> Self {
        let l = members.len();
        if l == 0 {
            return MappingSetStats::default();
        }
        let mean = members.iter().sum::<f64>() / l as f64;
        let std = if l == 1 {
            0.0
        } else {
            (members.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / l as f64).sqrt()
        };
        MappingSetStats { l, mean, std }
    }
}

/// Mapping-set statistics laid out like the plane they describe.
#[derive(Debug, Clone, PartialEq)]
pub struct StatsGrid {
    pub shape: (usize, usize),
    pub stats: Vec<MappingSetStats>,
}

/// Hough accumulator `T(ρ, θ)`. Storage is theta-major: bin
/// `(rho, theta)` lives at `theta * n_rho + rho`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamPlane {
    values: Vec<f64>,
    grid: HoughGrid,
    source: TfGeometry,
}

impl ParamPlane {
    pub fn new(values: Vec<f64>, grid: HoughGrid, source: TfGeometry) -> Result<Self> {
        if values.len() != grid.bins() {
            return Err(Error::ShapeMismatch {
                expected: (grid.n_rho, grid.n_theta),
                actual: (values.len(), 1),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPlane("non-finite parameter value".into()));
        }
        Ok(ParamPlane {
            values,
            grid,
            source,
        })
    }

    pub fn grid(&self) -> HoughGrid {
        self.grid
    }

    pub fn source(&self) -> TfGeometry {
        self.source
    }

    #[inline]
    pub fn index(&self, rho: usize, theta: usize) -> usize {
        theta * self.grid.n_rho + rho
    }

    #[inline]
    pub fn get(&self, rho: usize, theta: usize) -> f64 {
        self.values[self.index(rho, theta)]
    }

    /// Global maximum, ties broken by lowest `(rho, theta)`.
    pub fn argmax(&self) -> (usize, usize, f64) {
        let mut best = (0, 0, f64::NEG_INFINITY);
        for rho in 0..self.grid.n_rho {
            for theta in 0..self.grid.n_theta {
                let v = self.get(rho, theta);
                if v > best.2 {
                    best = (rho, theta, v);
                }
            }
        }
        best
    }

    pub fn scaled(&self, c: f64) -> Self {
        ParamPlane {
            values: self.values.iter().map(|v| v * c).collect(),
            ..self.clone()
        }
    }

    #[cfg(test)]
    pub(crate) fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        ParamPlane {
            values,
            ..self.clone()
        }
    }
}

impl Grid for ParamPlane {
    fn values(&self) -> &[f64] {
        &self.values
    }

    fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    fn shape(&self) -> (usize, usize) {
        (self.grid.n_theta, self.grid.n_rho)
    }
}

/// CSV export: `# hough,n_rho,n_theta,rho0,drho,theta0,dtheta` header
/// carrying those values (first bin centers and steps), then one row per
/// rho bin with `n_theta` values.
pub fn write_param_csv<W: Write>(mut w: W, plane: &ParamPlane) -> Result<()> {
    let g = plane.grid;
    writeln!(
        w,
        "# hough,{},{},{},{},{},{}",
        g.n_rho,
        g.n_theta,
        g.rho_center(0),
        g.d_rho(),
        g.theta_center(0),
        g.d_theta()
    )?;
    let mut line = String::new();
    for rho in 0..g.n_rho {
        line.clear();
        for theta in 0..g.n_theta {
            if theta > 0 {
                line.push(',');
            }
            line.push_str(&plane.get(rho, theta).to_string());
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Precomputed vote table for one `(TF geometry, grid)` pair.
///
/// Cheap to clone; the table itself is shared.
#[derive(Debug, Clone)]
pub struct HoughKernel {
    geometry: TfGeometry,
    grid: HoughGrid,
    /// `bins[theta * n_cells + cell]` is the rho bin of `cell` at `theta`.
    bins: Arc<Vec<u16>>,
    /// Vote preimage sizes, theta-major like [`ParamPlane`].
    counts: Arc<Vec<u32>>,
}

impl HoughKernel {
    pub fn new(geometry: TfGeometry, grid: HoughGrid) -> Result<Self> {
        grid.validate()?;
        let coords = unit_coords(&geometry)?;
        let n_cells = geometry.nt * geometry.nf;
        let mut bins = Vec::with_capacity(grid.n_theta * n_cells);
        let mut counts = vec![0u32; grid.bins()];
        for j in 0..grid.n_theta {
            let (sin, cos) = grid.theta_center(j).sin_cos();
            let col = &mut counts[j * grid.n_rho..(j + 1) * grid.n_rho];
            for &x in &coords.xs {
                for &y in &coords.ys {
                    let b = grid.rho_bin(x * cos + y * sin);
                    bins.push(b as u16);
                    col[b] += 1;
                }
            }
        }
        Ok(HoughKernel {
            geometry,
            grid,
            bins: Arc::new(bins),
            counts: Arc::new(counts),
        })
    }

    pub fn for_plane(plane: &TfPlane, grid: HoughGrid) -> Result<Self> {
        HoughKernel::new(TfGeometry::of(plane), grid)
    }

    pub fn grid(&self) -> HoughGrid {
        self.grid
    }

    pub fn geometry(&self) -> TfGeometry {
        self.geometry
    }

    fn n_cells(&self) -> usize {
        self.geometry.nt * self.geometry.nf
    }

    /// Rho bin that TF cell `(t, f)` votes into at angle index `theta`.
    #[inline]
    pub fn vote(&self, t: usize, f: usize, theta: usize) -> usize {
        self.bins[theta * self.n_cells() + t * self.geometry.nf + f] as usize
    }

    /// Number of TF cells voting into `(rho, theta)`.
    pub fn count(&self, rho: usize, theta: usize) -> usize {
        self.counts[theta * self.grid.n_rho + rho] as usize
    }

    fn check_plane(&self, plane: &TfPlane) -> Result<()> {
        if plane.nt() != self.geometry.nt || plane.nf() != self.geometry.nf {
            return Err(Error::ShapeMismatch {
                expected: (self.geometry.nt, self.geometry.nf),
                actual: (plane.nt(), plane.nf()),
            });
        }
        Ok(())
    }

    pub fn forward(&self, plane: &TfPlane) -> Result<ParamPlane> {
        self.check_plane(plane)?;
        let values = plane.values();
        let n_cells = self.n_cells();
        let n_rho = self.grid.n_rho;
        let mut out = vec![0.0; self.grid.bins()];
        for (acc, bins) in out
            .chunks_exact_mut(n_rho)
            .zip(self.bins.chunks_exact(n_cells))
        {
            for (&b, &v) in bins.iter().zip(values) {
                acc[b as usize] += v;
            }
        }
        ParamPlane::new(out, self.grid, self.geometry)
    }

    /// Forward transform plus the `(l, μ, σ̃)` of every bin's vote preimage,
    /// accumulated in the same pass.
    pub fn forward_with_stats(&self, plane: &TfPlane) -> Result<(ParamPlane, StatsGrid)> {
        self.check_plane(plane)?;
        let values = plane.values();
        let n_cells = self.n_cells();
        let n_rho = self.grid.n_rho;
        let mut sum = vec![0.0; self.grid.bins()];
        let mut sum_sq = vec![0.0; self.grid.bins()];
        for ((acc, acc_sq), bins) in sum
            .chunks_exact_mut(n_rho)
            .zip(sum_sq.chunks_exact_mut(n_rho))
            .zip(self.bins.chunks_exact(n_cells))
        {
            for (&b, &v) in bins.iter().zip(values) {
                let b = b as usize;
                acc[b] += v;
                acc_sq[b] += v * v;
            }
        }
        let stats = self
            .counts
            .iter()
            .zip(sum.iter().zip(&sum_sq))
            .map(|(&l, (&s, &sq))| MappingSetStats::from_moments(l as usize, s, sq))
            .collect();
        let stats = StatsGrid {
            shape: (self.grid.n_theta, n_rho),
            stats,
        };
        Ok((ParamPlane::new(sum, self.grid, self.geometry)?, stats))
    }

    pub fn param_stats(&self, plane: &TfPlane) -> Result<StatsGrid> {
        self.forward_with_stats(plane).map(|(_, s)| s)
    }

    /// Statistics of the `n_theta` parameter values each TF cell votes into.
    pub fn tf_stats(&self, param: &ParamPlane) -> Result<StatsGrid> {
        if param.grid != self.grid || param.source != self.geometry {
            return Err(Error::GeometryMismatch(
                "parameter plane was not built with this kernel's grid and axes".into(),
            ));
        }
        let n_cells = self.n_cells();
        let n_rho = self.grid.n_rho;
        let mut sum = vec![0.0; n_cells];
        let mut sum_sq = vec![0.0; n_cells];
        for (col, bins) in param
            .values
            .chunks_exact(n_rho)
            .zip(self.bins.chunks_exact(n_cells))
        {
            for ((s, sq), &b) in sum.iter_mut().zip(sum_sq.iter_mut()).zip(bins) {
                let v = col[b as usize];
                *s += v;
                *sq += v * v;
            }
        }
        let l = self.grid.n_theta;
        let stats = sum
            .iter()
            .zip(&sum_sq)
            .map(|(&s, &sq)| MappingSetStats::from_moments(l, s, sq))
            .collect();
        Ok(StatsGrid {
            shape: (self.geometry.nt, self.geometry.nf),
            stats,
        })
    }
}

pub fn hough_forward(plane: &TfPlane, grid: HoughGrid) -> Result<ParamPlane> {
    HoughKernel::for_plane(plane, grid)?.forward(plane)
}

pub fn param_mapping_stats(plane: &TfPlane, grid: HoughGrid) -> Result<StatsGrid> {
    HoughKernel::for_plane(plane, grid)?.param_stats(plane)
}

pub fn tf_mapping_stats(param: &ParamPlane) -> Result<StatsGrid> {
    HoughKernel::new(param.source, param.grid)?.tf_stats(param)
}

/// Chirp `(f0, g)` described by the line at `(rho, theta)`.
///
/// From `ρ = x cos θ + y sin θ` the line is `y(x) = ρ/sin θ − x cot θ` in
/// unit-square coordinates, so `f0 = f_start + y(0) f_span` and
/// `g = −cot θ · f_span / t_span`.
pub fn line_to_chirp(rho: f64, theta: f64, geom: &TfGeometry) -> Result<(f64, f64)> {
    geom.check()?;
    let (sin, cos) = theta.sin_cos();
    if sin.abs() < 1e-9 {
        return Err(Error::DegenerateAngle(theta));
    }
    let y0 = rho / sin;
    let slope = -cos / sin;
    let f0 = geom.f_axis.start + y0 * geom.f_span();
    let g = slope * geom.f_span() / geom.t_span();
    Ok((f0, g))
}

/// Exact `(ρ, θ)` of the line traced by a chirp, `θ ∈ (0, π)`.
pub fn chirp_line(f0_hz: f64, g_hz_per_s: f64, geom: &TfGeometry) -> Result<(f64, f64)> {
    geom.check()?;
    let slope = g_hz_per_s * geom.t_span() / geom.f_span();
    let theta = 1f64.atan2(-slope);
    let y0 = (f0_hz - geom.f_axis.start) / geom.f_span();
    Ok((y0 * theta.sin(), theta))
}

/// Nearest `(rho_bin, theta_bin)` of the chirp's line.
pub fn chirp_to_line(
    f0_hz: f64,
    g_hz_per_s: f64,
    geom: &TfGeometry,
    grid: &HoughGrid,
) -> Result<(usize, usize)> {
    let (rho, theta) = chirp_line(f0_hz, g_hz_per_s, geom)?;
    if !(-SQRT_2..=SQRT_2).contains(&rho) {
        return Err(Error::RhoOutOfRange(rho));
    }
    Ok((grid.rho_bin(rho), grid.theta_bin(theta)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn plane(nt: usize, nf: usize, mut f: impl FnMut(usize, usize) -> f64) -> TfPlane {
        let mut v = Vec::with_capacity(nt * nf);
        for t in 0..nt {
            for k in 0..nf {
                v.push(f(t, k));
            }
        }
        TfPlane::from_values(nt, nf, v).unwrap()
    }

    fn random_plane(nt: usize, nf: usize, seed: u64) -> TfPlane {
        let mut rng = crate::rng::rng_from_seed(seed);
        plane(nt, nf, |_, _| rng.sample(rand_distr::StandardNormal))
    }

    #[test]
    fn grid_geometry() {
        let g = HoughGrid::new(180, 400).unwrap();
        assert!((g.theta_center(0) - PI / 360.0).abs() < 1e-15);
        assert_eq!(g.rho_bin(-10.0), 0);
        assert_eq!(g.rho_bin(SQRT_2), 399);
        assert_eq!(g.rho_bin(0.0), 200);
        assert!(HoughGrid::new(29, 100).is_err());
        assert!(HoughGrid::new(180, 10).is_err());
        assert_eq!(HoughGrid::default_for(200, 128), HoughGrid { n_theta: 180, n_rho: 400 });
    }

    #[test]
    fn unit_coordinates() {
        let p = plane(200, 16, |_, _| 0.0);
        let c = normalize_axes(&p).unwrap();
        assert_eq!(c.cell(0, 0), (0.0, 0.0));
        assert_eq!(c.cell(199, 15), (1.0, 1.0));
        assert!((c.xs[50] - 0.251256).abs() < 1e-6);
    }

    #[test]
    fn zero_plane_zero_accumulator() {
        let p = plane(16, 16, |_, _| 0.0);
        let t = hough_forward(&p, HoughGrid::new(30, 40).unwrap()).unwrap();
        assert!(t.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_cell_traces_a_sinusoid() {
        let (t0, f0) = (9, 21);
        let p = plane(32, 32, |t, f| if (t, f) == (t0, f0) { 7.0 } else { 0.0 });
        let grid = HoughGrid::new(60, 64).unwrap();
        let out = hough_forward(&p, grid).unwrap();
        let (x0, y0) = (t0 as f64 / 31.0, f0 as f64 / 31.0);
        for j in 0..grid.n_theta {
            let nonzero: Vec<usize> = (0..grid.n_rho).filter(|&i| out.get(i, j) != 0.0).collect();
            assert_eq!(nonzero.len(), 1);
            assert_eq!(out.get(nonzero[0], j), 7.0);
            let th = grid.theta_center(j);
            let rho = x0 * th.cos() + y0 * th.sin();
            assert!((grid.rho_center(nonzero[0]) - rho).abs() <= grid.d_rho() / 2.0 + 1e-12);
        }
    }

    #[test]
    fn anti_diagonal_peaks_at_its_cell_count() {
        // ones on y = 1 - x
        let p = plane(32, 32, |t, f| if t + f == 31 { 1.0 } else { 0.0 });
        // 90 angles put a bin center exactly on 45 degrees
        let grid = HoughGrid::new(90, 63).unwrap();
        let out = hough_forward(&p, grid).unwrap();
        let (rho, theta, max) = out.argmax();
        assert_eq!(max, 32.0);
        assert!((grid.theta_center(theta) - PI / 4.0).abs() <= grid.d_theta());
        assert!((grid.rho_center(rho) - SQRT_2 / 2.0).abs() <= grid.d_rho());
    }

    #[test]
    fn constant_plane_stats() {
        let p = plane(20, 24, |_, _| 3.5);
        let stats = param_mapping_stats(&p, HoughGrid::new(36, 48).unwrap()).unwrap();
        for s in stats.stats.iter().filter(|s| s.l > 0) {
            assert_eq!(s.std, 0.0);
            assert!((s.mean - 3.5).abs() < 1e-12);
        }
    }

    /// Materialize each bin's preimage by re-deriving the vote rule.
    fn member_lists(p: &TfPlane, grid: HoughGrid) -> Vec<Vec<f64>> {
        let mut sets = vec![Vec::new(); grid.bins()];
        for j in 0..grid.n_theta {
            let th = (j as f64 + 0.5) * PI / grid.n_theta as f64;
            for t in 0..p.nt() {
                for f in 0..p.nf() {
                    let rho = t as f64 / (p.nt() - 1) as f64 * th.cos()
                        + f as f64 / (p.nf() - 1) as f64 * th.sin();
                    let b = (((rho + SQRT_2) / (2.0 * SQRT_2 / grid.n_rho as f64)).floor()
                        as isize)
                        .clamp(0, grid.n_rho as isize - 1) as usize;
                    sets[j * grid.n_rho + b].push(p.get(t, f));
                }
            }
        }
        sets
    }

    #[test]
    fn single_cell_stats_match_members() {
        let p = plane(32, 32, |t, f| if (t, f) == (5, 17) { 7.0 } else { 0.0 });
        let grid = HoughGrid::new(45, 64).unwrap();
        let stats = param_mapping_stats(&p, grid).unwrap();
        for (s, m) in stats.stats.iter().zip(member_lists(&p, grid)) {
            let o = MappingSetStats::from_members(&m);
            assert_eq!(s.l, o.l);
            assert!((s.mean - o.mean).abs() < 1e-12);
            assert!((s.std - o.std).abs() < 1e-12);
        }
    }

    #[test]
    fn noise_plane_stats_match_members() {
        let p = random_plane(32, 32, 17);
        let grid = HoughGrid::new(40, 50).unwrap();
        let (t, stats) = HoughKernel::for_plane(&p, grid)
            .unwrap()
            .forward_with_stats(&p)
            .unwrap();
        for ((s, m), &tv) in stats.stats.iter().zip(member_lists(&p, grid)).zip(t.values()) {
            let o = MappingSetStats::from_members(&m);
            assert_eq!(s.l, o.l);
            assert!((s.mean - o.mean).abs() < 1e-10);
            assert!((s.std - o.std).abs() < 1e-10);
            assert!((s.l as f64 * s.mean - tv).abs() <= 1e-12 * (1.0 + tv.abs()));
        }
    }

    #[test]
    fn tf_stats_constant_and_impulse() {
        let p = plane(16, 20, |_, _| 0.0);
        let grid = HoughGrid::new(30, 40).unwrap();
        let k = HoughKernel::for_plane(&p, grid).unwrap();
        let base = k.forward(&p).unwrap();

        let constant = base.with_values(vec![2.5; grid.bins()]);
        for s in k.tf_stats(&constant).unwrap().stats {
            assert_eq!(s.l, 30);
            assert!((s.mean - 2.5).abs() < 1e-12);
            assert!(s.std < 1e-7);
        }

        let (r0, th0, v) = (22, 11, 9.0);
        let mut vals = vec![0.0; grid.bins()];
        vals[base.index(r0, th0)] = v;
        let impulse = base.with_values(vals);
        let stats = k.tf_stats(&impulse).unwrap();
        let n = 30.0f64;
        let expected = ((v * v / n) - (v / n) * (v / n)).sqrt();
        for t in 0..16 {
            for f in 0..20 {
                let s = stats.stats[t * 20 + f];
                if k.vote(t, f, th0) == r0 {
                    assert!((s.std - expected).abs() < 1e-12);
                } else {
                    assert_eq!(s.std, 0.0);
                }
            }
        }
    }

    #[test]
    fn tf_stats_match_members() {
        let p = random_plane(24, 20, 3);
        let grid = HoughGrid::new(30, 48).unwrap();
        let k = HoughKernel::for_plane(&p, grid).unwrap();
        let mut rng = crate::rng::rng_from_seed(8);
        let vals: Vec<f64> = (0..grid.bins()).map(|_| rng.random::<f64>() * 4.0 - 1.0).collect();
        let param = k.forward(&p).unwrap().with_values(vals);
        let stats = k.tf_stats(&param).unwrap();
        for t in 0..24 {
            for f in 0..20 {
                let members: Vec<f64> = (0..grid.n_theta)
                    .map(|j| {
                        let th = grid.theta_center(j);
                        let rho = t as f64 / 23.0 * th.cos() + f as f64 / 19.0 * th.sin();
                        param.get(grid.rho_bin(rho), j)
                    })
                    .collect();
                let o = MappingSetStats::from_members(&members);
                let s = stats.stats[t * 20 + f];
                assert_eq!(s.l, 30);
                assert!((s.mean - o.mean).abs() < 1e-10);
                assert!((s.std - o.std).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn tf_stats_reject_foreign_plane() {
        let p = random_plane(16, 16, 1);
        let k = HoughKernel::for_plane(&p, HoughGrid::new(30, 40).unwrap()).unwrap();
        let other = hough_forward(&random_plane(16, 17, 1), HoughGrid::new(30, 40).unwrap()).unwrap();
        assert!(matches!(k.tf_stats(&other), Err(Error::GeometryMismatch(_))));
    }

    fn wvd_geometry() -> TfGeometry {
        TfGeometry {
            nt: 200,
            nf: 128,
            t_axis: Axis::new(0.0, 5e-8),
            f_axis: Axis::new(0.0, 78_125.0),
        }
    }

    #[test]
    fn horizontal_line_to_chirp() {
        // f span [0, 10 MHz], t span 10 µs
        let geom = TfGeometry {
            nt: 11,
            nf: 11,
            t_axis: Axis::new(0.0, 1e-6),
            f_axis: Axis::new(0.0, 1e6),
        };
        let (f0, g) = line_to_chirp(0.5, PI / 2.0, &geom).unwrap();
        assert!((f0 - 5e6).abs() < 1e-6);
        assert!(g.abs() < 1e-3);
        let (f0, g) = line_to_chirp(0.0, 3.0 * PI / 4.0, &geom).unwrap();
        assert!(f0.abs() < 1e-6);
        assert!((g - 1e12).abs() < 1e-3 * 1e12);
        assert!(matches!(line_to_chirp(0.1, 0.0, &geom), Err(Error::DegenerateAngle(_))));
    }

    #[test]
    fn chirp_to_line_examples() {
        let geom = TfGeometry {
            nt: 101,
            nf: 101,
            t_axis: Axis::new(0.0, 1.0),
            f_axis: Axis::new(0.0, 1.0),
        };
        let grid = HoughGrid::new(180, 200).unwrap();
        let (rho, theta) = chirp_line(50.0, 0.0, &geom).unwrap();
        assert!((theta - PI / 2.0).abs() < 1e-15);
        assert!((rho - 0.5).abs() < 1e-15);
        let (rb, tb) = chirp_to_line(50.0, 0.0, &geom, &grid).unwrap();
        assert!((grid.theta_center(tb) - PI / 2.0).abs() <= grid.d_theta() / 2.0 + 1e-12);
        assert_eq!(rb, grid.rho_bin(0.5));
        let (_, theta) = chirp_line(0.0, 1.0, &geom).unwrap();
        assert_eq!(theta, 3.0 * PI / 4.0);
        assert!(matches!(
            chirp_to_line(-500.0, 0.0, &geom, &grid),
            Err(Error::RhoOutOfRange(_))
        ));
    }

    #[test]
    fn reference_chirp_round_trips_within_a_bin() {
        let geom = wvd_geometry();
        let grid = HoughGrid::default_for(200, 128);
        let (f, g) = (5e6, -5e11);
        let (rb, tb) = chirp_to_line(f, g, &geom, &grid).unwrap();
        let (f_hat, g_hat) =
            line_to_chirp(grid.rho_center(rb), grid.theta_center(tb), &geom).unwrap();
        // one-bin quantization in each coordinate
        let (_, th) = chirp_line(f, g, &geom).unwrap();
        let df_rho = grid.d_rho() / th.sin() * geom.f_span();
        assert!((f_hat - f).abs() <= df_rho, "{f_hat}");
        let dg = grid.d_theta() / th.sin().powi(2) * geom.f_span() / geom.t_span();
        assert!((g_hat - g).abs() <= dg, "{g_hat}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn linearity(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let pa = random_plane(20, 18, seed);
            let pb = random_plane(20, 18, seed ^ 0xFFFF);
            let grid = HoughGrid::new(30, 40).unwrap();
            let k = HoughKernel::for_plane(&pa, grid).unwrap();
            let mix: Vec<f64> = pa.values().iter().zip(pb.values()).map(|(x, y)| a * x + b * y).collect();
            let lhs = k.forward(&pa.with_values(mix)).unwrap();
            let ta = k.forward(&pa).unwrap();
            let tb = k.forward(&pb).unwrap();
            let scale = lhs.values().iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for i in 0..grid.bins() {
                let rhs = a * ta.values()[i] + b * tb.values()[i];
                prop_assert!((lhs.values()[i] - rhs).abs() <= 1e-10 * scale);
            }
        }

        #[test]
        fn every_cell_votes_once_per_angle(nt in 2usize..30, nf in 2usize..30) {
            let p = plane(nt, nf, |_, _| 1.0);
            let grid = HoughGrid::new(30, 30).unwrap();
            let k = HoughKernel::for_plane(&p, grid).unwrap();
            let t = k.forward(&p).unwrap();
            for j in 0..grid.n_theta {
                let col: f64 = (0..grid.n_rho).map(|i| t.get(i, j)).sum();
                prop_assert_eq!(col, (nt * nf) as f64);
                let counted: usize = (0..grid.n_rho).map(|i| k.count(i, j)).sum();
                prop_assert_eq!(counted, nt * nf);
            }
        }
    }
}
