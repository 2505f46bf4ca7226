use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Forward DFT of a fixed power-of-two length, `X[k] = Σ x[m] e^{-j2πkm/n}`.
#[derive(Clone)]
pub struct Dft {
    n_fft: usize,
    plan: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Dft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dft").field("n_fft", &self.n_fft).finish()
    }
}

impl Dft {
    pub fn new(n_fft: usize) -> Result<Self> {
        if n_fft == 0 || !n_fft.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(n_fft));
        }
        let plan = FftPlanner::new().plan_fft_forward(n_fft);
        Ok(Dft { n_fft, plan })
    }

    pub fn len(&self) -> usize {
        self.n_fft
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Transform `buf` in place; `buf.len()` must equal the plan length.
    pub fn process(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.n_fft);
        self.plan.process(buf);
    }
}

/// Zero-pad `x` to `n_fft` samples and transform.
pub fn dft(x: &[Complex64], n_fft: usize) -> Result<Vec<Complex64>> {
    let plan = Dft::new(n_fft)?;
    if x.len() > n_fft {
        return Err(Error::FftTooShort {
            n_fft,
            len: x.len(),
        });
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
    buf[..x.len()].copy_from_slice(x);
    plan.process(&mut buf);
    Ok(buf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use std::f64::consts::PI;

    fn naive(x: &[Complex64], n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(m, v)| v * Complex64::from_polar(1.0, -2.0 * PI * (k * m % n) as f64 / n as f64))
                    .sum()
            })
            .collect()
    }

    #[test]
    fn impulse_gives_flat_spectrum() {
        let mut x = vec![Complex64::new(0.0, 0.0); 8];
        x[0] = Complex64::new(1.0, 0.0);
        for v in dft(&x, 8).unwrap() {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn complex_exponential_hits_one_bin() {
        let x: Vec<Complex64> = (0..16)
            .map(|m| Complex64::from_polar(1.0, 2.0 * PI * 3.0 * m as f64 / 16.0))
            .collect();
        let spec = dft(&x, 16).unwrap();
        assert!((spec[3].norm() - 16.0).abs() < 1e-9);
        for (k, v) in spec.iter().enumerate() {
            if k != 3 {
                assert!(v.norm() < 1e-9, "bin {k}: {}", v.norm());
            }
        }
    }

    #[test]
    fn matches_direct_sum_and_parseval() {
        let mut rng = crate::rng::rng_from_seed(99);
        let x: Vec<Complex64> = (0..64)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let fast = dft(&x, 64).unwrap();
        let slow = naive(&x, 64);
        let scale = slow.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).norm() <= 1e-10 * scale);
        }
        let et: f64 = x.iter().map(|v| v.norm_sqr()).sum();
        let ef: f64 = fast.iter().map(|v| v.norm_sqr()).sum::<f64>() / 64.0;
        assert!((et - ef).abs() < 1e-10 * et);
    }

    #[test]
    fn zero_pads_short_input() {
        let x = vec![Complex64::new(1.0, 0.0); 3];
        let spec = dft(&x, 8).unwrap();
        let slow = naive(&x, 8);
        for (a, b) in spec.iter().zip(&slow) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_lengths() {
        assert!(matches!(dft(&[], 12), Err(Error::NotPowerOfTwo(12))));
        let x = vec![Complex64::new(0.0, 0.0); 9];
        assert!(matches!(dft(&x, 8), Err(Error::FftTooShort { .. })));
    }
}
