use num_complex::Complex64;

use super::fft::Dft;
use super::plane::{Axis, TfMethod, TfPlane};
use crate::error::{Error, Result};
use crate::signal::ComplexSignal;

/// Gaussian analysis window of odd length with `σ = length / 6` samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct WindowSpec {
    pub length: usize,
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec { length: 63 }
    }
}

impl WindowSpec {
    pub fn new(length: usize) -> Result<Self> {
        let w = WindowSpec { length };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if self.length < 9 || self.length % 2 == 0 {
            return Err(Error::InvalidWindow(format!(
                "length must be odd and at least 9, got {}",
                self.length
            )));
        }
        Ok(())
    }

    pub fn sigma(&self) -> f64 {
        self.length as f64 / 6.0
    }

    fn half(&self) -> usize {
        (self.length - 1) / 2
    }

    /// Window taps `g[m]`, `m = -half..=half`.
    pub fn taps(&self) -> Vec<f64> {
        let s = self.sigma();
        let h = self.half() as i64;
        (-h..=h)
            .map(|m| (-(m * m) as f64 / (2.0 * s * s)).exp())
            .collect()
    }

    /// Analytic time derivative `g'[m] = -m/σ² g[m]` (per sample).
    pub fn derivative_taps(&self) -> Vec<f64> {
        let s = self.sigma();
        let h = self.half() as i64;
        self.taps()
            .iter()
            .zip(-h..=h)
            .map(|(g, m)| -(m as f64) / (s * s) * g)
            .collect()
    }
}

/// Complex STFT, hop 1, time-major (`nt` columns of `n_fft` bins).
#[derive(Debug, Clone, PartialEq)]
pub struct Stft {
    pub nt: usize,
    pub n_fft: usize,
    pub values: Vec<Complex64>,
}

impl Stft {
    pub fn get(&self, t: usize, k: usize) -> Complex64 {
        self.values[t * self.n_fft + k]
    }
}

fn check(signal: &ComplexSignal, window: &WindowSpec, n_fft: usize) -> Result<()> {
    window.validate()?;
    if window.length > signal.len() {
        return Err(Error::WindowTooLong {
            window: window.length,
            signal: signal.len(),
        });
    }
    if n_fft < window.length {
        return Err(Error::FftTooShort {
            n_fft,
            len: window.length,
        });
    }
    Ok(())
}

/// Windowed transform with the window centred on sample `n`; samples
/// outside the signal are zero. Phase is referenced to the window centre.
fn stft_with_taps(signal: &ComplexSignal, taps: &[f64], plan: &Dft) -> Stft {
    let s = signal.samples();
    let n = s.len() as i64;
    let n_fft = plan.len();
    let half = (taps.len() / 2) as i64;
    let mut values = vec![Complex64::new(0.0, 0.0); s.len() * n_fft];
    for (col, out) in values.chunks_exact_mut(n_fft).enumerate() {
        for (i, g) in taps.iter().enumerate() {
            let m = i as i64 - half;
            let idx = col as i64 + m;
            if (0..n).contains(&idx) {
                out[m.rem_euclid(n_fft as i64) as usize] += s[idx as usize] * *g;
            }
        }
        plan.process(out);
    }
    Stft {
        nt: s.len(),
        n_fft,
        values,
    }
}

pub fn stft(signal: &ComplexSignal, window: &WindowSpec, n_fft: usize) -> Result<Stft> {
    check(signal, window, n_fft)?;
    let plan = Dft::new(n_fft)?;
    Ok(stft_with_taps(signal, &window.taps(), &plan))
}

/// Fourier synchrosqueezed transform.
///
/// Each STFT cell with `|V_g| >= 1e-8 max|V_g|` moves its energy `|V_g|²`
/// to the frequency `f_k - Fs/(2π) Im(V_g'/V_g)`. Cells landing outside
/// `[0, Fs/2)` are dropped. The output grid has `n_fft / 2` bins of width
/// `Fs / n_fft`.
pub fn fsst(signal: &ComplexSignal, window: &WindowSpec, n_fft: usize) -> Result<TfPlane> {
    check(signal, window, n_fft)?;
    let plan = Dft::new(n_fft)?;
    let vg = stft_with_taps(signal, &window.taps(), &plan);
    let vdg = stft_with_taps(signal, &window.derivative_taps(), &plan);
    let fs = signal.sample_rate_hz();
    let df = fs / n_fft as f64;
    let nf = n_fft / 2;
    let max_mag = vg.values.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let gamma = 1e-8 * max_mag;
    let mut values = vec![0.0; vg.nt * nf];
    for t in 0..vg.nt {
        let row = &mut values[t * nf..(t + 1) * nf];
        for k in 0..n_fft {
            let g = vg.get(t, k);
            let mag = g.norm();
            if mag == 0.0 || mag < gamma {
                continue;
            }
            let fk = if k < nf { k as f64 * df } else { (k as f64 - n_fft as f64) * df };
            let f_hat = fk - fs / (2.0 * std::f64::consts::PI) * (vdg.get(t, k) / g).im;
            let bin = (f_hat / df).round();
            if bin >= 0.0 && bin < nf as f64 {
                row[bin as usize] += mag * mag;
            }
        }
    }
    TfPlane::new(
        vg.nt,
        nf,
        values,
        Axis::new(0.0, 1.0 / fs),
        Axis::new(0.0, df),
        TfMethod::Fsst,
    )
}
