use num_complex::Complex64;

use super::fft::Dft;
use super::plane::{Axis, TfMethod, TfPlane};
use crate::error::{Error, Result};
use crate::signal::ComplexSignal;

const MIN_LEN: usize = 8;

/// Discrete Wigner-Ville distribution of an analytic signal.
///
/// `W[n,k] = 2 Re Σ_m s[n+m] conj(s[n-m]) e^{-j2πkm/Nf}` over lags
/// `|m| <= L(n) = min(n, N-1-n, Nf-1)`. The lag kernel oscillates at twice
/// the instantaneous frequency, so bin `k` maps to `k Fs / (2 Nf)` and the
/// `Nf` bins cover `[0, Fs/2)`. With this scaling each column satisfies
/// `Σ_k W[n,k] / (2 Nf) = |s[n]|²`.
pub fn wvd(signal: &ComplexSignal, n_freq_bins: usize) -> Result<TfPlane> {
    wvd_with_residue(signal, n_freq_bins).map(|(plane, _)| plane)
}

/// Same as [`wvd`], also returning the largest imaginary part dropped by
/// the `Re` (zero in exact arithmetic since the lag kernel is Hermitian).
pub(crate) fn wvd_with_residue(
    signal: &ComplexSignal,
    n_freq_bins: usize,
) -> Result<(TfPlane, f64)> {
    let s = signal.samples();
    let n = s.len();
    if n < MIN_LEN {
        return Err(Error::SignalTooShort { len: n, min: MIN_LEN });
    }
    if n_freq_bins < MIN_LEN {
        return Err(Error::InvalidPlane(format!(
            "need at least {MIN_LEN} frequency bins, got {n_freq_bins}"
        )));
    }
    let nf = n_freq_bins;
    let plan = Dft::new(nf)?;
    let mut values = vec![0.0; n * nf];
    let mut buf = vec![Complex64::new(0.0, 0.0); nf];
    let mut residue = 0.0f64;
    for (col, out) in values.chunks_exact_mut(nf).enumerate() {
        buf.fill(Complex64::new(0.0, 0.0));
        let lag_max = col.min(n - 1 - col).min(nf - 1);
        buf[0] = s[col] * s[col].conj();
        for m in 1..=lag_max {
            let r = s[col + m] * s[col - m].conj();
            buf[m % nf] += r;
            buf[(nf - m % nf) % nf] += r.conj();
        }
        plan.process(&mut buf);
        for (o, v) in out.iter_mut().zip(&buf) {
            *o = 2.0 * v.re;
            residue = residue.max(v.im.abs() * 2.0);
        }
    }
    let fs = signal.sample_rate_hz();
    let plane = TfPlane::new(
        n,
        nf,
        values,
        Axis::new(0.0, 1.0 / fs),
        Axis::new(0.0, fs / (2.0 * nf as f64)),
        TfMethod::Wvd,
    )?;
    Ok((plane, residue))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{synth_chirp, ChirpSpec};
    use std::f64::consts::PI;

    const FS: f64 = 2e7;

    fn tone(f: f64, n: usize) -> ComplexSignal {
        let s = (0..n)
            .map(|i| Complex64::from_polar(1.0, 2.0 * PI * f * i as f64 / FS))
            .collect();
        ComplexSignal::new(s, FS).unwrap()
    }

    /// Direct evaluation of one column at an arbitrary frequency.
    fn wvd_direct(s: &[Complex64], col: usize, f_hz: f64, nf: usize) -> f64 {
        let n = s.len();
        let lag_max = col.min(n - 1 - col).min(nf - 1) as i64;
        let mut acc = Complex64::new(0.0, 0.0);
        for m in -lag_max..=lag_max {
            let a = s[(col as i64 + m) as usize];
            let b = s[(col as i64 - m) as usize].conj();
            acc += a * b * Complex64::from_polar(1.0, -2.0 * PI * 2.0 * f_hz * m as f64 / FS);
        }
        2.0 * acc.re
    }

    #[test]
    fn matches_direct_evaluation() {
        let sig = synth_chirp(&ChirpSpec::reference(FS), FS).unwrap();
        let plane = wvd(&sig, 64).unwrap();
        let df = plane.f_axis().step;
        for col in [0, 3, 50, 120, 199] {
            for k in [0, 7, 31, 63] {
                let d = wvd_direct(sig.samples(), col, k as f64 * df, 64);
                assert!((plane.get(col, k) - d).abs() < 1e-9 * (1.0 + d.abs()));
            }
        }
    }

    #[test]
    fn tone_concentrates_at_its_bin() {
        let plane = wvd(&tone(FS / 8.0, 200), 128).unwrap();
        let expect = ((FS / 8.0) / plane.f_axis().step).round() as usize;
        for col in 20..180 {
            let c = plane.column(col);
            let arg = (0..128).max_by(|&a, &b| c[a].total_cmp(&c[b])).unwrap();
            assert_eq!(arg, expect, "column {col}");
        }
    }

    #[test]
    fn zero_signal_gives_zero_plane() {
        let sig = ComplexSignal::new(vec![Complex64::new(0.0, 0.0); 32], FS).unwrap();
        let plane = wvd(&sig, 16).unwrap();
        assert!(plane.max_abs() == 0.0);
    }

    #[test]
    fn chirp_ridge_tracks_sweep() {
        let spec = ChirpSpec::reference(FS);
        let sig = synth_chirp(&spec, FS).unwrap();
        let plane = wvd(&sig, 128).unwrap();
        let df = plane.f_axis().step;
        assert_eq!(plane.nt(), 200);
        for col in 20..180 {
            let c = plane.column(col);
            let arg = (0..128).max_by(|&a, &b| c[a].total_cmp(&c[b])).unwrap() as f64;
            let f = spec.f0_hz + spec.chirp_rate_hz_per_s * col as f64 / FS;
            assert!((arg - f / df).abs() <= 2.0, "column {col}: bin {arg} vs {}", f / df);
        }
    }

    #[test]
    fn marginal_and_realness() {
        let sig = synth_chirp(&ChirpSpec::reference(FS), FS).unwrap();
        let (plane, residue) = wvd_with_residue(&sig, 64).unwrap();
        assert!(residue < 1e-9 * plane.max_abs());
        for col in 0..plane.nt() {
            let sum: f64 = plane.column(col).iter().sum::<f64>() / (2.0 * 64.0);
            let p = sig.samples()[col].norm_sqr();
            assert!((sum - p).abs() <= 1e-6 * p, "column {col}");
        }
    }

    #[test]
    fn two_chirps_leave_cross_terms_between_ridges() {
        let a = synth_chirp(
            &ChirpSpec { f0_hz: 2e6, chirp_rate_hz_per_s: 0.0, amplitude: 1.0, duration_s: 1e-5 },
            FS,
        )
        .unwrap();
        let b = synth_chirp(
            &ChirpSpec { f0_hz: 6e6, chirp_rate_hz_per_s: 0.0, amplitude: 1.0, duration_s: 1e-5 },
            FS,
        )
        .unwrap();
        let plane = wvd(&a.add(&b).unwrap(), 128).unwrap();
        let mid = (4e6 / plane.f_axis().step).round() as usize;
        let energy: f64 = (40..160).map(|t| plane.get(t, mid).abs()).sum();
        assert!(energy > 100.0, "{energy}");
    }

    #[test]
    fn rejects_short_signal() {
        let sig = ComplexSignal::new(vec![Complex64::new(1.0, 0.0); 7], FS).unwrap();
        assert!(matches!(wvd(&sig, 16), Err(Error::SignalTooShort { .. })));
    }
}
