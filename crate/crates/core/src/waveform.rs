//! MTSFM modulation functions and unit-energy waveform synthesis.
//!
//! The instantaneous frequency is a finite Fourier series over the pulse,
//!
//! ```text
//! m(t)   = a0/2 + sum_l a_l cos(2 pi l t / T) + b_l sin(2 pi l t / T)
//! phi(t) = pi a0 t + sum_l alpha_l sin(2 pi l t / T) - beta_l cos(2 pi l t / T)
//! ```
//!
//! with modulation indices `alpha_l = a_l T / l` and `beta_l = b_l T / l`, so
//! that `m(t) = phi'(t) / 2 pi`. Time is centered: the support is `[-T/2, T/2]`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_OVERSAMPLE: u32 = 8;

/// Fourier coefficients of the frequency modulation function, in Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierCoefficients {
    a0: f64,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl FourierCoefficients {
    pub fn new(a0: f64, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::InvalidSpec(format!(
                "cosine and sine coefficient lists differ in length ({} vs {})",
                a.len(),
                b.len()
            )));
        }
        if b.is_empty() {
            return Err(Error::InvalidSpec(
                "at least one harmonic is required".into(),
            ));
        }
        if !a0.is_finite() || a.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec("coefficients must be finite".into()));
        }
        Ok(Self { a0, a, b })
    }

    /// Sine-only coefficients with `a0 = 0` and all `a_l = 0`.
    pub fn sine(b: Vec<f64>) -> Result<Self> {
        Self::new(0.0, vec![0.0; b.len()], b)
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn cosine_terms(&self) -> &[f64] {
        &self.a
    }

    pub fn sine_terms(&self) -> &[f64] {
        &self.b
    }

    /// Number of harmonics `L`.
    pub fn harmonics(&self) -> usize {
        self.b.len()
    }

    /// Appends `extra` zero harmonics to both coefficient lists.
    pub fn zero_padded(&self, extra: usize) -> Self {
        let mut out = self.clone();
        out.a.resize(self.a.len() + extra, 0.0);
        out.b.resize(self.b.len() + extra, 0.0);
        out
    }

    /// Same `a0` and cosine terms with the sine terms replaced.
    pub fn with_sine_terms(&self, b: Vec<f64>) -> Result<Self> {
        Self::new(self.a0, self.a.clone(), b)
    }

    /// Conservative bandwidth estimate `|a0| + 2 sum(|a_l| + |b_l|)`, in Hz.
    pub fn frequency_span(&self) -> f64 {
        self.a0.abs() + 2.0 * self.a.iter().chain(&self.b).map(|v| v.abs()).sum::<f64>()
    }

    pub fn modulation_indices(&self, duration: f64) -> ModulationIndices {
        let scale = |c: &[f64]| {
            c.iter()
                .enumerate()
                .map(|(i, v)| v * duration / (i + 1) as f64)
                .collect()
        };
        ModulationIndices {
            alpha: scale(&self.a),
            beta: scale(&self.b),
        }
    }
}

/// Phase modulation indices `alpha_l = a_l T / l`, `beta_l = b_l T / l`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulationIndices {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

/// Complete recipe for a sampled MTSFM pulse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecDocument", into = "SpecDocument")]
pub struct WaveformSpec {
    duration: f64,
    coeffs: FourierCoefficients,
    oversample: u32,
}

impl WaveformSpec {
    pub fn new(duration: f64, coeffs: FourierCoefficients) -> Result<Self> {
        Self::with_oversample(duration, coeffs, DEFAULT_OVERSAMPLE)
    }

    pub fn with_oversample(
        duration: f64,
        coeffs: FourierCoefficients,
        oversample: u32,
    ) -> Result<Self> {
        if !(duration.is_finite() && duration > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "duration must be positive, got {duration}"
            )));
        }
        if oversample < 2 {
            return Err(Error::InvalidSpec(format!(
                "oversample must be at least 2, got {oversample}"
            )));
        }
        Ok(Self {
            duration,
            coeffs,
            oversample,
        })
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn coeffs(&self) -> &FourierCoefficients {
        &self.coeffs
    }

    pub fn oversample(&self) -> u32 {
        self.oversample
    }

    pub fn with_coeffs(&self, coeffs: FourierCoefficients) -> Self {
        Self {
            coeffs,
            ..self.clone()
        }
    }

    fn check_support(&self, t: f64) -> Result<()> {
        if t.is_nan() || t.abs() > 0.5 * self.duration {
            return Err(Error::Domain(format!(
                "t = {t} lies outside [-T/2, T/2] for T = {}",
                self.duration
            )));
        }
        Ok(())
    }

    /// Instantaneous frequency `m(t)` in Hz.
    pub fn frequency_at(&self, t: f64) -> Result<f64> {
        self.check_support(t)?;
        let w = 2.0 * PI * t / self.duration;
        let c = &self.coeffs;
        let harmonics: f64 =
            c.a.iter()
                .zip(&c.b)
                .enumerate()
                .map(|(i, (a, b))| {
                    let arg = (i + 1) as f64 * w;
                    a * arg.cos() + b * arg.sin()
                })
                .sum();
        Ok(0.5 * c.a0 + harmonics)
    }

    /// Instantaneous phase `phi(t)` in radians.
    pub fn phase_at(&self, t: f64) -> Result<f64> {
        self.check_support(t)?;
        let w = 2.0 * PI * t / self.duration;
        let c = &self.coeffs;
        let mut phase = PI * c.a0 * t;
        for (i, (a, b)) in c.a.iter().zip(&c.b).enumerate() {
            let l = (i + 1) as f64;
            let arg = l * w;
            phase += a * self.duration / l * arg.sin() - b * self.duration / l * arg.cos();
        }
        Ok(phase)
    }

    /// Sample count chosen by the default density policy:
    /// `ceil(oversample * T * f_span)`, with `f_span` floored at `2L/T`.
    pub fn default_sample_count(&self) -> usize {
        let floor = 2.0 * self.coeffs.harmonics() as f64 / self.duration;
        let span = self.coeffs.frequency_span().max(floor);
        (self.oversample as f64 * self.duration * span).ceil() as usize
    }

    pub fn synthesize(&self) -> SampledWaveform {
        self.synthesize_with_samples(self.default_sample_count())
    }

    /// Synthesizes on an explicit grid of `n` midpoint samples.
    pub fn synthesize_with_samples(&self, n: usize) -> SampledWaveform {
        let basis = PhaseBasis::new(self.duration, self.coeffs.harmonics(), n);
        basis.synthesize(&self.coeffs)
    }
}

#[derive(Serialize, Deserialize)]
struct SpecDocument {
    #[serde(rename = "T")]
    duration: f64,
    #[serde(default)]
    a0: f64,
    #[serde(default)]
    a: Option<Vec<f64>>,
    #[serde(default)]
    b: Option<Vec<f64>>,
    #[serde(default = "default_oversample")]
    oversample: u32,
}

fn default_oversample() -> u32 {
    DEFAULT_OVERSAMPLE
}

impl TryFrom<SpecDocument> for WaveformSpec {
    type Error = Error;

    fn try_from(doc: SpecDocument) -> Result<Self> {
        let (a, b) = match (doc.a, doc.b) {
            (Some(a), Some(b)) => (a, b),
            (Some(a), None) => {
                let n = a.len();
                (a, vec![0.0; n])
            }
            (None, Some(b)) => (vec![0.0; b.len()], b),
            (None, None) => {
                return Err(Error::InvalidSpec(
                    "one of \"a\" or \"b\" is required".into(),
                ))
            }
        };
        let coeffs = FourierCoefficients::new(doc.a0, a, b)?;
        WaveformSpec::with_oversample(doc.duration, coeffs, doc.oversample)
    }
}

impl From<WaveformSpec> for SpecDocument {
    fn from(spec: WaveformSpec) -> Self {
        SpecDocument {
            duration: spec.duration,
            a0: spec.coeffs.a0,
            a: Some(spec.coeffs.a),
            b: Some(spec.coeffs.b),
            oversample: spec.oversample,
        }
    }
}

/// Unit-energy complex baseband samples on `t_n = -T/2 + (n + 1/2) dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledWaveform {
    duration: f64,
    dt: f64,
    samples: Vec<Complex64>,
    energy: f64,
}

impl SampledWaveform {
    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Discrete energy `sum |s_n|^2 dt`.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn time(&self, n: usize) -> f64 {
        midpoint(self.duration, self.dt, n)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.samples.len()).map(|n| self.time(n))
    }
}

fn midpoint(duration: f64, dt: f64, n: usize) -> f64 {
    -0.5 * duration + (n as f64 + 0.5) * dt
}

/// Harmonic tables `cos(2 pi l t_n / T)` and `sin(2 pi l t_n / T)` for a fixed
/// grid. Reusing one basis across many coefficient vectors makes repeated
/// synthesis cheap and bitwise reproducible.
#[derive(Debug, Clone)]
pub struct PhaseBasis {
    duration: f64,
    dt: f64,
    times: Vec<f64>,
    cos: Vec<Vec<f64>>,
    sin: Vec<Vec<f64>>,
}

impl PhaseBasis {
    pub fn new(duration: f64, harmonics: usize, samples: usize) -> Self {
        let n = samples.max(1);
        let dt = duration / n as f64;
        let times: Vec<f64> = (0..n).map(|i| midpoint(duration, dt, i)).collect();
        let w = 2.0 * PI / duration;
        let (cos, sin) = (1..=harmonics)
            .map(|l| {
                let args = times.iter().map(|t| l as f64 * (w * t));
                (
                    args.clone().map(f64::cos).collect(),
                    args.map(f64::sin).collect(),
                )
            })
            .unzip();
        Self {
            duration,
            dt,
            times,
            cos,
            sin,
        }
    }

    pub fn harmonics(&self) -> usize {
        self.cos.len()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Phase samples for `coeffs`, which must not have more harmonics than the basis.
    pub fn phase(&self, coeffs: &FourierCoefficients) -> Vec<f64> {
        assert!(
            coeffs.harmonics() <= self.harmonics(),
            "basis holds {} harmonics, coefficients need {}",
            self.harmonics(),
            coeffs.harmonics()
        );
        let mut phase: Vec<f64> = self.times.iter().map(|t| PI * coeffs.a0 * t).collect();
        for (i, (a, b)) in coeffs.a.iter().zip(&coeffs.b).enumerate() {
            let l = (i + 1) as f64;
            if *a != 0.0 {
                let alpha = a * self.duration / l;
                for (p, s) in phase.iter_mut().zip(&self.sin[i]) {
                    *p += alpha * s;
                }
            }
            if *b != 0.0 {
                let beta = b * self.duration / l;
                for (p, c) in phase.iter_mut().zip(&self.cos[i]) {
                    *p -= beta * c;
                }
            }
        }
        phase
    }

    pub fn synthesize(&self, coeffs: &FourierCoefficients) -> SampledWaveform {
        self.synthesize_phase(&self.phase(coeffs))
    }

    /// `cos(2 pi l t_n / T)` for harmonic `l = index + 1`.
    pub(crate) fn cosine_row(&self, index: usize) -> &[f64] {
        &self.cos[index]
    }

    pub(crate) fn synthesize_phase(&self, phase: &[f64]) -> SampledWaveform {
        let n = self.len();
        let amplitude = 1.0 / (n as f64 * self.dt).sqrt();
        let samples: Vec<Complex64> = phase
            .iter()
            .map(|&p| Complex64::from_polar(amplitude, p))
            .collect();
        let energy = samples.iter().map(|s| s.norm_sqr()).sum::<f64>() * self.dt;
        SampledWaveform {
            duration: self.duration,
            dt: self.dt,
            samples,
            energy,
        }
    }
}
