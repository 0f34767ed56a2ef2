//! Ellipse-of-ambiguity (EOA) parameters of the AF mainlobe.
//!
//! Near the origin `1 - |chi(tau, nu)|^2 ~ beta_rms^2 tau^2 + 2 rho tau nu + tau_rms^2 nu^2`.
//! For MTSFM pulses the three parameters have exact closed forms in the
//! Fourier coefficients; [`eoa_numeric`] evaluates the underlying time-domain
//! integrals by quadrature and serves as an independent check.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{compensated_sum, CompositeRule};
use crate::waveform::{FourierCoefficients, SampledWaveform, WaveformSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EoaParameters {
    /// RMS bandwidth squared, rad^2/s^2.
    pub beta_rms_sq: f64,
    /// RMS pulse length squared, rad^2 s^2.
    pub tau_rms_sq: f64,
    /// Range-Doppler coupling factor.
    pub rho: f64,
    /// `rho / (beta_rms tau_rms)`, in `[-1, 1]`.
    pub rho_norm: f64,
}

impl EoaParameters {
    pub fn new(beta_rms_sq: f64, tau_rms_sq: f64, rho: f64) -> Self {
        let scale = (beta_rms_sq * tau_rms_sq).sqrt();
        let rho_norm = if scale > 0.0 { rho / scale } else { 0.0 };
        Self {
            beta_rms_sq,
            tau_rms_sq,
            rho,
            rho_norm,
        }
    }

    pub fn beta_rms(&self) -> f64 {
        self.beta_rms_sq.sqrt()
    }

    pub fn tau_rms(&self) -> f64 {
        self.tau_rms_sq.sqrt()
    }
}

/// `cos(pi l) / (pi l)` evaluated with the exact sign `(-1)^l`.
pub(crate) fn odd_weight(l: usize) -> f64 {
    let sign = if l.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign / (PI * l as f64)
}

pub fn beta_rms_sq(coeffs: &FourierCoefficients) -> f64 {
    let energy = compensated_sum(
        coeffs
            .cosine_terms()
            .iter()
            .zip(coeffs.sine_terms())
            .map(|(a, b)| a * a + b * b),
    );
    2.0 * PI * PI * energy
}

/// RDCF from the sine coefficients. Cosine terms make `m(t)` even in time and
/// never contribute.
pub fn rho(sine_terms: &[f64], duration: f64) -> f64 {
    let s = compensated_sum(
        sine_terms
            .iter()
            .enumerate()
            .map(|(i, b)| b * odd_weight(i + 1)),
    );
    -2.0 * PI * PI * duration * s
}

pub fn tau_rms_sq(duration: f64) -> f64 {
    PI * PI * duration * duration / 3.0
}

pub fn eoa_closed_form(coeffs: &FourierCoefficients, duration: f64) -> EoaParameters {
    EoaParameters::new(
        beta_rms_sq(coeffs),
        tau_rms_sq(duration),
        rho(coeffs.sine_terms(), duration),
    )
}

/// `d beta_rms^2 / d b_l = 4 pi^2 b_l`.
pub fn beta_rms_sq_gradient(sine_terms: &[f64]) -> Vec<f64> {
    sine_terms.iter().map(|b| 4.0 * PI * PI * b).collect()
}

/// `d rho / d b_l = -2 pi^2 T cos(pi l) / (pi l)`; independent of the coefficients.
pub fn rho_gradient(duration: f64, harmonics: usize) -> Vec<f64> {
    (1..=harmonics)
        .map(|l| -2.0 * PI * PI * duration * odd_weight(l))
        .collect()
}

/// Time-domain quadrature of the EOA integrals.
///
/// The envelope `|s|^2` is taken from the sampled waveform (constant for the
/// rectangular pulse), while `phi'(t) = 2 pi m(t)` comes from the analytic
/// modulation function rather than differenced samples.
pub fn eoa_numeric(w: &SampledWaveform, spec: &WaveformSpec) -> EoaParameters {
    let duration = spec.duration();
    let half = 0.5 * duration;
    let envelope = w.samples().iter().map(|s| s.norm_sqr()).sum::<f64>() / w.len() as f64;
    let panels = (8 * spec.coeffs().harmonics()).max(64);
    let rule = CompositeRule::new(-half, half, panels, 8);
    // the rule's nodes never leave [-T/2, T/2]
    let phase_rate = |t: f64| 2.0 * PI * spec.frequency_at(t.clamp(-half, half)).unwrap();

    let energy = rule.integrate(|_| envelope);
    let t0 = rule.integrate(|t| t * envelope) / energy;
    let tau_rms_sq = 4.0 * PI * PI * rule.integrate(|t| (t - t0).powi(2) * envelope) / energy;

    let mean_rate = rule.integrate(|t| phase_rate(t) * envelope) / energy;
    let mean_sq_rate = rule.integrate(|t| phase_rate(t).powi(2) * envelope) / energy;
    let beta_rms_sq = (mean_sq_rate - mean_rate * mean_rate).max(0.0);
    let rho = 2.0 * PI * rule.integrate(|t| (t - t0) * phase_rate(t) * envelope) / energy;

    EoaParameters::new(beta_rms_sq, tau_rms_sq, rho)
}

/// `n_points` on `beta^2 tau^2 + 2 rho tau nu + tau_rms^2 nu^2 = xi`, ordered by
/// parametric angle; the curve closes from the last point back to the first.
pub fn eoa_contour(p: &EoaParameters, xi: f64, n_points: usize) -> Result<Vec<(f64, f64)>> {
    if !(xi > 0.0 && xi < 1.0) {
        return Err(Error::Domain(format!(
            "contour height xi must lie in (0, 1), got {xi}"
        )));
    }
    let (a, c, b) = (p.beta_rms_sq, p.tau_rms_sq, p.rho);
    let det = a * c - b * b;
    if !(a > 0.0 && c > 0.0) || det <= 1e-12 * a * c {
        return Err(Error::DegenerateEllipse(det));
    }
    let theta = 0.5 * (2.0 * b).atan2(a - c);
    let (sin, cos) = theta.sin_cos();
    let mid = 0.5 * (a + c);
    let radius = (0.25 * (a - c).powi(2) + b * b).sqrt();
    let u = (xi / (mid + radius)).sqrt();
    let v = (xi / (mid - radius)).sqrt();
    Ok((0..n_points)
        .map(|k| {
            let phi = 2.0 * PI * k as f64 / n_points as f64;
            let (x, y) = (u * phi.cos(), v * phi.sin());
            (x * cos - y * sin, x * sin + y * cos)
        })
        .collect())
}
