//! Chirp synthesis, calibrated complex AWGN and the IQ file format.

use std::f64::consts::PI;
use std::io::{Read, Write};

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Linear FM pulse parameters: `f(t) = f0_hz + chirp_rate_hz_per_s * t` for
/// `t` in `[0, duration_s)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ChirpSpec {
    pub f0_hz: f64,
    pub chirp_rate_hz_per_s: f64,
    pub amplitude: f64,
    pub duration_s: f64,
}

impl ChirpSpec {
    /// The reference pulse: 10 µs, `F = Fs/4`, `B = Fs/4`, `G = -B/Tr`.
    pub fn reference(sample_rate_hz: f64) -> Self {
        let duration_s = 10e-6;
        let bandwidth = sample_rate_hz / 4.0;
        ChirpSpec {
            f0_hz: sample_rate_hz / 4.0,
            chirp_rate_hz_per_s: -bandwidth / duration_s,
            amplitude: 1.0,
            duration_s,
        }
    }

    /// Number of samples produced at `sample_rate_hz`.
    pub fn sample_count(&self, sample_rate_hz: f64) -> usize {
        (self.duration_s * sample_rate_hz).round() as usize
    }

    pub fn validate(&self, sample_rate_hz: f64) -> Result<()> {
        if !(sample_rate_hz > 0.0) || !sample_rate_hz.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        if !(self.duration_s > 0.0) || !self.duration_s.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "duration must be positive, got {}",
                self.duration_s
            )));
        }
        if !(self.amplitude >= 0.0) || !self.amplitude.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "amplitude must be nonnegative, got {}",
                self.amplitude
            )));
        }
        if !self.f0_hz.is_finite() || !self.chirp_rate_hz_per_s.is_finite() {
            return Err(Error::InvalidSpec("non-finite frequency parameters".into()));
        }
        if (self.duration_s * sample_rate_hz).floor() < 8.0 {
            return Err(Error::InvalidSpec(format!(
                "duration {} s gives fewer than 8 samples at {} Hz",
                self.duration_s, sample_rate_hz
            )));
        }
        // The sweep is linear, so checking the first and last sample instants
        // covers the whole pulse.
        let nyquist = sample_rate_hz / 2.0;
        let n = self.sample_count(sample_rate_hz);
        let t_last = (n - 1) as f64 / sample_rate_hz;
        for f in [self.f0_hz, self.f0_hz + self.chirp_rate_hz_per_s * t_last] {
            if !(0.0..nyquist).contains(&f) {
                return Err(Error::InvalidSpec(format!(
                    "instantaneous frequency {f} Hz leaves [0, {nyquist})"
                )));
            }
        }
        Ok(())
    }
}

/// Uniformly sampled complex baseband sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSignal {
    samples: Vec<Complex64>,
    sample_rate_hz: f64,
}

impl ComplexSignal {
    pub fn new(samples: Vec<Complex64>, sample_rate_hz: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySignal);
        }
        if !(sample_rate_hz > 0.0) || !sample_rate_hz.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        Ok(ComplexSignal {
            samples,
            sample_rate_hz,
        })
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    /// Sample-wise sum; both signals must share length and rate.
    pub fn add(&self, other: &ComplexSignal) -> Result<ComplexSignal> {
        if self.len() != other.len() || self.sample_rate_hz != other.sample_rate_hz {
            return Err(Error::InvalidSpec(
                "signals differ in length or sample rate".into(),
            ));
        }
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a + b)
            .collect();
        ComplexSignal::new(samples, self.sample_rate_hz)
    }

    pub fn scaled(&self, factor: f64) -> ComplexSignal {
        ComplexSignal {
            samples: self.samples.iter().map(|s| s * factor).collect(),
            sample_rate_hz: self.sample_rate_hz,
        }
    }
}

/// `s[n] = A exp(j 2π (F n Ts + G (n Ts)² / 2))`.
pub fn synth_chirp(spec: &ChirpSpec, sample_rate_hz: f64) -> Result<ComplexSignal> {
    spec.validate(sample_rate_hz)?;
    let n = spec.sample_count(sample_rate_hz);
    let ts = 1.0 / sample_rate_hz;
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 * ts;
            let phase = 2.0 * PI * (spec.f0_hz * t + 0.5 * spec.chirp_rate_hz_per_s * t * t);
            Complex64::from_polar(spec.amplitude, phase)
        })
        .collect();
    ComplexSignal::new(samples, sample_rate_hz)
}

/// Requested noise level for [`add_awgn`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Snr {
    /// Leave the signal untouched.
    NoNoise,
    Db(f64),
}

impl Snr {
    /// Linear noise-to-signal power ratio, `None` for [`Snr::NoNoise`].
    pub fn noise_ratio(self) -> Option<f64> {
        match self {
            Snr::NoNoise => None,
            Snr::Db(db) => Some(10f64.powf(-db / 10.0)),
        }
    }
}

/// Circularly symmetric complex Gaussian samples with `E|z|² = 1`.
pub fn unit_noise(len: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = rng_from_seed(seed);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    (0..len)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re * scale, im * scale)
        })
        .collect()
}

/// Add white complex Gaussian noise with per-sample variance
/// `P_signal / 10^(snr_db/10)`.
pub fn add_awgn(signal: &ComplexSignal, snr: Snr, seed: u64) -> Result<ComplexSignal> {
    let ratio = match snr {
        Snr::NoNoise => return Ok(signal.clone()),
        Snr::Db(db) if !db.is_finite() => {
            return Err(Error::InvalidSpec(format!("snr must be finite, got {db}")))
        }
        Snr::Db(_) => snr.noise_ratio().unwrap_or(0.0),
    };
    let sigma = (measure_power(signal)? * ratio).sqrt();
    let noise = unit_noise(signal.len(), seed);
    let samples = signal
        .samples
        .iter()
        .zip(noise)
        .map(|(s, z)| s + z * sigma)
        .collect();
    ComplexSignal::new(samples, signal.sample_rate_hz)
}

/// Mean of `|s[n]|²`.
pub fn measure_power(signal: &ComplexSignal) -> Result<f64> {
    mean_power(&signal.samples)
}

pub(crate) fn mean_power(samples: &[Complex64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySignal);
    }
    Ok(samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / samples.len() as f64)
}

const IQ_MAGIC: &[u8; 4] = b"CMI1";
const IQ_VERSION: u32 = 1;

/// Write the IQ container: 16-byte header (`CMI1`, version, count,
/// reserved), f64 sample rate, then interleaved f32 I/Q, all little-endian.
pub fn write_iq<W: Write>(mut w: W, signal: &ComplexSignal) -> Result<()> {
    let count = u32::try_from(signal.len())
        .map_err(|_| Error::Format("too many samples for IQ header".into()))?;
    let mut buf = Vec::with_capacity(24 + 8 * signal.len());
    buf.extend_from_slice(IQ_MAGIC);
    buf.extend_from_slice(&IQ_VERSION.to_le_bytes());
    buf.extend_from_slice(&count.to_le_bytes());
    buf.extend_from_slice(&0u32.to_le_bytes());
    buf.extend_from_slice(&signal.sample_rate_hz.to_le_bytes());
    for s in &signal.samples {
        buf.extend_from_slice(&(s.re as f32).to_le_bytes());
        buf.extend_from_slice(&(s.im as f32).to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_iq<R: Read>(mut r: R) -> Result<ComplexSignal> {
    let mut header = [0u8; 24];
    r.read_exact(&mut header)
        .map_err(|_| Error::Format("truncated IQ header".into()))?;
    if &header[0..4] != IQ_MAGIC {
        return Err(Error::Format("bad IQ magic".into()));
    }
    let word = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().unwrap());
    let version = word(4);
    if version != IQ_VERSION {
        return Err(Error::Format(format!("unsupported IQ version {version}")));
    }
    let count = word(8) as usize;
    let sample_rate_hz = f64::from_le_bytes(header[16..24].try_into().unwrap());
    let mut body = vec![0u8; count * 8];
    r.read_exact(&mut body)
        .map_err(|_| Error::Format(format!("IQ body shorter than {count} samples")))?;
    let samples = body
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes(c[0..4].try_into().unwrap());
            let im = f32::from_le_bytes(c[4..8].try_into().unwrap());
            Complex64::new(re as f64, im as f64)
        })
        .collect();
    ComplexSignal::new(samples, sample_rate_hz)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FS: f64 = 2e7;

    fn spec(f0: f64, g: f64, a: f64) -> ChirpSpec {
        ChirpSpec {
            f0_hz: f0,
            chirp_rate_hz_per_s: g,
            amplitude: a,
            duration_s: 1e-5,
        }
    }

    #[test]
    fn reference_chirp_matches_setup() {
        let s = ChirpSpec::reference(FS);
        assert_eq!(s.f0_hz, 5e6);
        assert!((s.chirp_rate_hz_per_s + 5e11).abs() < 1e-3);
        let sig = synth_chirp(&s, FS).unwrap();
        assert_eq!(sig.len(), 200);
        // the first phase step measures the frequency at t = Ts/2
        let dphi = (sig.samples()[1] * sig.samples()[0].conj()).arg();
        let f_est = dphi * FS / (2.0 * PI);
        let expected = 5e6 - 5e11 * 0.5 / FS;
        assert!((f_est - expected).abs() < 1e-3, "{f_est}");
    }

    #[test]
    fn instantaneous_frequency_tracks_sweep() {
        let s = ChirpSpec::reference(FS);
        let sig = synth_chirp(&s, FS).unwrap();
        let x = sig.samples();
        for n in 1..x.len() {
            let f = (x[n] * x[n - 1].conj()).arg() * FS / (2.0 * PI);
            // midpoint of the finite difference
            let t = (n as f64 - 0.5) / FS;
            let expect = s.f0_hz + s.chirp_rate_hz_per_s * t;
            assert!((f - expect).abs() < 1.0, "n={n}: {f} vs {expect}");
        }
    }

    #[test]
    fn zero_amplitude_gives_zeros() {
        let sig = synth_chirp(&spec(5e6, -5e11, 0.0), FS).unwrap();
        assert_eq!(sig.len(), 200);
        assert!(sig.samples().iter().all(|s| s.norm() == 0.0));
    }

    #[test]
    fn pure_tone_peaks_at_bin_50() {
        let sig = synth_chirp(&spec(5e6, 0.0, 1.0), FS).unwrap();
        let x = sig.samples();
        let n = x.len();
        // brute-force DFT
        let mags: Vec<f64> = (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(m, v)| {
                        v * Complex64::from_polar(1.0, -2.0 * PI * (k * m) as f64 / n as f64)
                    })
                    .sum::<Complex64>()
                    .norm()
            })
            .collect();
        let peak = (0..n).max_by(|&a, &b| mags[a].total_cmp(&mags[b])).unwrap();
        assert_eq!(peak, 50);
    }

    #[test]
    fn unit_modulus() {
        let s = ChirpSpec {
            amplitude: 0.7,
            ..ChirpSpec::reference(FS)
        };
        let sig = synth_chirp(&s, FS).unwrap();
        for v in sig.samples() {
            assert!((v.norm() - 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn sweep_outside_band_rejected() {
        assert!(matches!(
            synth_chirp(&spec(9e6, 5e11, 1.0), FS),
            Err(Error::InvalidSpec(_))
        ));
        assert!(matches!(
            synth_chirp(&spec(1e6, -5e11, 1.0), FS),
            Err(Error::InvalidSpec(_))
        ));
        let bad = ChirpSpec {
            duration_s: 0.0,
            ..spec(5e6, 0.0, 1.0)
        };
        assert!(synth_chirp(&bad, FS).is_err());
        assert!(synth_chirp(&spec(5e6, 0.0, 1.0), -1.0).is_err());
    }

    #[test]
    fn no_noise_is_identity() {
        let sig = synth_chirp(&ChirpSpec::reference(FS), FS).unwrap();
        assert_eq!(add_awgn(&sig, Snr::NoNoise, 3).unwrap(), sig);
    }

    #[test]
    fn noise_variance_calibrated() {
        let sig = ComplexSignal::new(vec![Complex64::new(1.0, 0.0); 100_000], FS).unwrap();
        let noisy = add_awgn(&sig, Snr::Db(0.0), 11).unwrap();
        let var = noisy
            .samples()
            .iter()
            .map(|s| (s - Complex64::new(1.0, 0.0)).norm_sqr())
            .sum::<f64>()
            / 100_000.0;
        assert!((var - 1.0).abs() < 0.05, "{var}");
    }

    #[test]
    fn measured_snr_within_quarter_db() {
        let sig = ComplexSignal::new(vec![Complex64::new(0.0, 2.0); 20_000], FS).unwrap();
        for (seed, db) in [(1u64, -5.0), (2, 0.0), (3, 7.5)] {
            let noisy = add_awgn(&sig, Snr::Db(db), seed).unwrap();
            let noise: Vec<Complex64> = noisy
                .samples()
                .iter()
                .zip(sig.samples())
                .map(|(a, b)| a - b)
                .collect();
            let measured = 10.0 * (4.0 / mean_power(&noise).unwrap()).log10();
            assert!((measured - db).abs() < 0.25, "{measured} vs {db}");
        }
    }

    #[test]
    fn awgn_deterministic_per_seed() {
        let sig = synth_chirp(&ChirpSpec::reference(FS), FS).unwrap();
        let a = add_awgn(&sig, Snr::Db(-5.0), 42).unwrap();
        let b = add_awgn(&sig, Snr::Db(-5.0), 42).unwrap();
        let c = add_awgn(&sig, Snr::Db(-5.0), 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn power_examples() {
        let z = ComplexSignal::new(vec![Complex64::new(0.0, 0.0); 4], FS).unwrap();
        assert_eq!(measure_power(&z).unwrap(), 0.0);
        let chirp = synth_chirp(&ChirpSpec::reference(FS), FS).unwrap();
        assert!((measure_power(&chirp).unwrap() - 1.0).abs() < 1e-12);
        let v = vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(3.0, 0.0),
        ];
        let s = ComplexSignal::new(v, FS).unwrap();
        assert!((measure_power(&s).unwrap() - 2.6).abs() < 1e-12);
        assert!(matches!(mean_power(&[]), Err(Error::EmptySignal)));
        assert!(matches!(ComplexSignal::new(vec![], FS), Err(Error::EmptySignal)));
    }

    #[test]
    fn iq_round_trip_and_layout() {
        let sig = synth_chirp(&ChirpSpec::reference(FS), FS).unwrap();
        let mut buf = Vec::new();
        write_iq(&mut buf, &sig).unwrap();
        assert_eq!(buf.len(), 16 + 8 + 200 * 8);
        assert_eq!(&buf[0..4], b"CMI1");
        assert_eq!(u32::from_le_bytes(buf[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 200);
        assert_eq!(f64::from_le_bytes(buf[16..24].try_into().unwrap()), FS);
        let back = read_iq(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 200);
        for (a, b) in back.samples().iter().zip(sig.samples()) {
            assert!((a - b).norm() < 1e-6);
        }
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_iq(bad.as_slice()), Err(Error::Format(_))));
        assert!(read_iq(&buf[..100]).is_err());
    }
}
