//! Narrowband ambiguity function, autocorrelation and sidelobe metrics.
//!
//! The discrete AF on the waveform's sample grid is
//!
//! ```text
//! chi(k dt, nu) = dt * sum_n s_n conj(s_{n+k}) exp(j 2 pi nu t_n)
//! ```
//!
//! Delays are integer sample lags. Every Doppler row and the ACF go through
//! the same FFT correlation path, so the `nu = 0` row and [`acf`] agree
//! bitwise.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::quadrature::compensated_sum;
use crate::waveform::SampledWaveform;

/// FFT-based linear cross-correlation for sequences of a fixed length.
#[derive(Clone)]
pub struct Correlator {
    len: usize,
    fft_len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Correlator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Correlator")
            .field("len", &self.len)
            .field("fft_len", &self.fft_len)
            .finish()
    }
}

impl Correlator {
    pub fn new(len: usize) -> Self {
        let fft_len = (2 * len).next_power_of_two();
        let mut planner = FftPlanner::new();
        Self {
            len,
            fft_len,
            forward: planner.plan_fft_forward(fft_len),
            inverse: planner.plan_fft_inverse(fft_len),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn spectrum(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.fft_len];
        buf[..x.len()].copy_from_slice(x);
        self.forward.process(&mut buf);
        buf
    }

    /// `c_k = sum_n x_n conj(y_{n+k})` for `k` in `-(len-1)..=len-1`, returned
    /// with lag `k` at index `k + len - 1`. Passing the same slice twice reuses
    /// one transform.
    pub fn correlate(&self, x: &[Complex64], y: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.len);
        assert_eq!(y.len(), self.len);
        let xs = self.spectrum(x);
        let ys = if std::ptr::eq(x, y) {
            xs.clone()
        } else {
            self.spectrum(y)
        };
        let mut prod: Vec<Complex64> = xs.iter().zip(&ys).map(|(a, b)| a * b.conj()).collect();
        self.inverse.process(&mut prod);
        let scale = 1.0 / self.fft_len as f64;
        let n = self.len as isize;
        (-(n - 1)..n)
            .map(|k| prod[(-k).rem_euclid(self.fft_len as isize) as usize] * scale)
            .collect()
    }

    /// Non-negative lags `0..=len` of `dt * sum_n s_n conj(s_{n+k})`; lag
    /// `len` has no overlap and is exactly zero.
    pub fn autocorrelation(&self, s: &[Complex64], dt: f64) -> Vec<Complex64> {
        let full = self.correlate(s, s);
        let mut out: Vec<Complex64> = full[self.len - 1..].iter().map(|c| c * dt).collect();
        out.push(Complex64::new(0.0, 0.0));
        out
    }
}

/// Sampled `|chi(tau, nu)|`; `magnitude[i][j]` is Doppler `dopplers[i]`, delay `delays[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AfGrid {
    pub delays: Vec<f64>,
    pub dopplers: Vec<f64>,
    pub magnitude: Vec<Vec<f64>>,
}

impl AfGrid {
    pub fn at(&self, doppler: usize, delay: usize) -> f64 {
        self.magnitude[doppler][delay]
    }
}

/// Evaluates the AF with each requested delay snapped to the nearest sample lag.
pub fn ambiguity(w: &SampledWaveform, delays: &[f64], dopplers: &[f64]) -> Result<AfGrid> {
    let n = w.len() as isize;
    let dt = w.dt();
    let limit = w.duration() * (1.0 + 1e-12);
    let lags = delays
        .iter()
        .map(|&tau| {
            if !tau.is_finite() || tau.abs() > limit {
                Err(Error::Domain(format!(
                    "delay {tau} outside [-T, T] for T = {}",
                    w.duration()
                )))
            } else {
                Ok(((tau / dt).round() as isize).clamp(-n, n))
            }
        })
        .collect::<Result<Vec<isize>>>()?;

    let correlator = Correlator::new(w.len());
    let s = w.samples();
    let magnitude = dopplers
        .par_iter()
        .map(|&nu| {
            let row = if nu == 0.0 {
                correlator.correlate(s, s)
            } else {
                let shifted: Vec<Complex64> = s
                    .iter()
                    .enumerate()
                    .map(|(i, v)| v * Complex64::cis(2.0 * std::f64::consts::PI * nu * w.time(i)))
                    .collect();
                correlator.correlate(&shifted, s)
            };
            lags.iter()
                .map(|&k| {
                    if k.abs() >= n {
                        0.0
                    } else {
                        (row[(k + n - 1) as usize] * dt).norm()
                    }
                })
                .collect()
        })
        .collect();

    Ok(AfGrid {
        delays: lags.iter().map(|&k| k as f64 * dt).collect(),
        dopplers: dopplers.to_vec(),
        magnitude,
    })
}

/// `R(tau)` at lags `0..=N`, i.e. `tau` from 0 to `T` in steps of `dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Acf {
    pub dt: f64,
    pub values: Vec<Complex64>,
}

impl Acf {
    pub fn delays(&self) -> Vec<f64> {
        (0..self.values.len()).map(|k| k as f64 * self.dt).collect()
    }

    pub fn magnitude(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    /// `|R(tau)|^2`.
    pub fn power(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }
}

pub fn acf(w: &SampledWaveform) -> Acf {
    acf_with(&Correlator::new(w.len()), w)
}

pub fn acf_with(correlator: &Correlator, w: &SampledWaveform) -> Acf {
    Acf {
        dt: w.dt(),
        values: correlator.autocorrelation(w.samples(), w.dt()),
    }
}

/// First local minimum of `|R|^2` at a positive delay, refined by a
/// three-point parabola. `power[k]` is the sample at delay `k * dt`.
pub fn find_mainlobe_null(power: &[f64], dt: f64) -> Result<f64> {
    let k = (1..power.len().saturating_sub(1))
        .find(|&k| power[k] <= power[k - 1] && power[k] <= power[k + 1] && power[k] < power[0])
        .ok_or(Error::NoMainlobeNull)?;
    let (y0, y1, y2) = (power[k - 1], power[k], power[k + 1]);
    let curvature = y0 - 2.0 * y1 + y2;
    let offset = if curvature > 0.0 {
        (0.5 * (y0 - y2) / curvature).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    Ok((k as f64 + offset) * dt)
}

fn interpolate(power: &[f64], dt: f64, tau: f64) -> f64 {
    let x = tau / dt;
    let i = (x.floor() as usize).min(power.len() - 2);
    let f = x - i as f64;
    power[i] * (1.0 - f) + power[i + 1] * f
}

fn check_null(power: &[f64], dt: f64, null: f64) -> Result<()> {
    let end = (power.len() - 1) as f64 * dt;
    if power.len() < 3 || !(null > 0.0 && null < end) {
        return Err(Error::Domain(format!(
            "mainlobe null {null} outside (0, {end})"
        )));
    }
    Ok(())
}

/// Peak sidelobe level `max_{tau >= null} |R|^2 / |R(0)|^2`, in dB.
pub fn pslr_db(power: &[f64], dt: f64, null: f64) -> Result<f64> {
    check_null(power, dt, null)?;
    let first = (null / dt).ceil() as usize;
    let peak = power[first.min(power.len() - 1)..]
        .iter()
        .copied()
        .fold(interpolate(power, dt, null), f64::max);
    Ok(10.0 * (peak / power[0]).log10())
}

/// Sidelobe-to-mainlobe energy ratio `int_null^T |R|^2 / int_0^null |R|^2`
/// by trapezoidal quadrature over positive delays (linear scale).
pub fn isl_ratio(power: &[f64], dt: f64, null: f64) -> Result<f64> {
    check_null(power, dt, null)?;
    let split = (null / dt).floor() as usize;
    let at_null = interpolate(power, dt, null);
    let inner = null - split as f64 * dt;

    let mainlobe = compensated_sum(
        power[..=split]
            .windows(2)
            .map(|p| 0.5 * (p[0] + p[1]) * dt)
            .chain(std::iter::once(0.5 * (power[split] + at_null) * inner)),
    );
    let outer = (split + 1) as f64 * dt - null;
    let sidelobes = compensated_sum(
        std::iter::once(0.5 * (at_null + power[split + 1]) * outer).chain(
            power[split + 1..]
                .windows(2)
                .map(|p| 0.5 * (p[0] + p[1]) * dt),
        ),
    );
    Ok(sidelobes / mainlobe)
}

pub fn isl_db(power: &[f64], dt: f64, null: f64) -> Result<f64> {
    Ok(10.0 * isl_ratio(power, dt, null)?.log10())
}

/// Sampled `|R|^2` with its mainlobe null and sidelobe metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct AcfReport {
    pub delays: Vec<f64>,
    pub power: Vec<f64>,
    pub null_delay: f64,
    pub pslr_db: f64,
    pub isl_db: f64,
}

impl AcfReport {
    pub fn from_acf(acf: &Acf) -> Result<Self> {
        let power = acf.power();
        let null_delay = find_mainlobe_null(&power, acf.dt)?;
        Ok(Self {
            pslr_db: pslr_db(&power, acf.dt, null_delay)?,
            isl_db: isl_db(&power, acf.dt, null_delay)?,
            delays: acf.delays(),
            power,
            null_delay,
        })
    }

    pub fn isl_ratio(&self) -> f64 {
        10f64.powf(self.isl_db / 10.0)
    }
}

pub fn analyze(w: &SampledWaveform) -> Result<AcfReport> {
    AcfReport::from_acf(&acf(w))
}
