use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::error::{Error, Result};

/// Uniform axis: value of index `i` is `start + i * step`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Axis {
    pub start: f64,
    pub step: f64,
}

impl Axis {
    pub fn new(start: f64, step: f64) -> Self {
        Axis { start, step }
    }

    pub fn at(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum TfMethod {
    Wvd,
    Fsst,
    /// Planes built by hand (tests, imported data).
    Custom,
}

impl fmt::Display for TfMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TfMethod::Wvd => "WVD",
            TfMethod::Fsst => "FSST",
            TfMethod::Custom => "CUSTOM",
        })
    }
}

impl FromStr for TfMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "WVD" => Ok(TfMethod::Wvd),
            "FSST" => Ok(TfMethod::Fsst),
            "CUSTOM" => Ok(TfMethod::Custom),
            other => Err(Error::Format(format!("unknown TF method `{other}`"))),
        }
    }
}

/// Flat real-valued 2D grid shared by the TF and parameter planes.
pub trait Grid {
    fn values(&self) -> &[f64];
    fn values_mut(&mut self) -> &mut [f64];
    /// `(rows, cols)` of the storage layout.
    fn shape(&self) -> (usize, usize);
}

/// Real-valued time-frequency grid. Storage is time-major: cell
/// `(t, f)` lives at `t * nf + f`.
#[derive(Debug, Clone, PartialEq)]
pub struct TfPlane {
    values: Vec<f64>,
    nt: usize,
    nf: usize,
    t_axis: Axis,
    f_axis: Axis,
    method: TfMethod,
}

impl TfPlane {
    pub fn new(
        nt: usize,
        nf: usize,
        values: Vec<f64>,
        t_axis: Axis,
        f_axis: Axis,
        method: TfMethod,
    ) -> Result<Self> {
        if nt < 2 || nf < 2 {
            return Err(Error::InvalidPlane(format!("plane {nt}x{nf} is too small")));
        }
        if values.len() != nt * nf {
            return Err(Error::ShapeMismatch {
                expected: (nt, nf),
                actual: (values.len(), 1),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPlane("non-finite value".into()));
        }
        if !(t_axis.step > 0.0) || !(f_axis.step > 0.0) {
            return Err(Error::DegenerateAxis("axis step must be positive".into()));
        }
        Ok(TfPlane {
            values,
            nt,
            nf,
            t_axis,
            f_axis,
            method,
        })
    }

    /// Plane with unit axes, tagged [`TfMethod::Custom`].
    pub fn from_values(nt: usize, nf: usize, values: Vec<f64>) -> Result<Self> {
        TfPlane::new(
            nt,
            nf,
            values,
            Axis::new(0.0, 1.0),
            Axis::new(0.0, 1.0),
            TfMethod::Custom,
        )
    }

    pub fn zeros_like(&self) -> Self {
        TfPlane {
            values: vec![0.0; self.values.len()],
            ..self.clone()
        }
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn nf(&self) -> usize {
        self.nf
    }

    pub fn t_axis(&self) -> Axis {
        self.t_axis
    }

    pub fn f_axis(&self) -> Axis {
        self.f_axis
    }

    pub fn method(&self) -> TfMethod {
        self.method
    }

    #[inline]
    pub fn get(&self, t: usize, f: usize) -> f64 {
        self.values[t * self.nf + f]
    }

    pub fn column(&self, t: usize) -> &[f64] {
        &self.values[t * self.nf..(t + 1) * self.nf]
    }

    pub fn values_iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().copied()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Elementwise `self * c`.
    pub fn scaled(&self, c: f64) -> Self {
        TfPlane {
            values: self.values.iter().map(|v| v * c).collect(),
            ..self.clone()
        }
    }

    #[cfg(test)]
    pub(crate) fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        TfPlane {
            values,
            ..self.clone()
        }
    }
}

impl Grid for TfPlane {
    fn values(&self) -> &[f64] {
        &self.values
    }

    fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    fn shape(&self) -> (usize, usize) {
        (self.nt, self.nf)
    }
}

/// CSV export: `# method,Nt,Nf,t0,dt,f0,df` header carrying those values,
/// then one row per time index with `Nf` values.
pub fn write_plane_csv<W: Write>(mut w: W, plane: &TfPlane) -> Result<()> {
    writeln!(
        w,
        "# {},{},{},{},{},{},{}",
        plane.method,
        plane.nt,
        plane.nf,
        plane.t_axis.start,
        plane.t_axis.step,
        plane.f_axis.start,
        plane.f_axis.step
    )?;
    let mut line = String::new();
    for t in 0..plane.nt {
        line.clear();
        for (i, v) in plane.column(t).iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            line.push_str(&v.to_string());
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn read_plane_csv<R: BufRead>(r: R) -> Result<TfPlane> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty plane CSV".into()))??;
    let meta = header
        .strip_prefix("# ")
        .ok_or_else(|| Error::Format("missing `# ` header".into()))?;
    let fields: Vec<&str> = meta.split(',').collect();
    if fields.len() != 7 {
        return Err(Error::Format(format!("expected 7 header fields, got {}", fields.len())));
    }
    let method: TfMethod = fields[0].parse()?;
    let int = |s: &str| s.parse::<usize>().map_err(|e| Error::Format(e.to_string()));
    let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Format(e.to_string()));
    let (nt, nf) = (int(fields[1])?, int(fields[2])?);
    let t_axis = Axis::new(num(fields[3])?, num(fields[4])?);
    let f_axis = Axis::new(num(fields[5])?, num(fields[6])?);
    let mut values = Vec::with_capacity(nt * nf);
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        for v in line.split(',') {
            values.push(num(v.trim())?);
        }
    }
    TfPlane::new(nt, nf, values, t_axis, f_axis, method)
}
