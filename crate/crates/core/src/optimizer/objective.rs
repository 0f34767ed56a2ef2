use rayon::prelude::*;

use crate::ambiguity::{acf_with, find_mainlobe_null, isl_ratio, Correlator};
use crate::waveform::{FourierCoefficients, PhaseBasis, SampledWaveform};

/// Objective value reported when the ACF has no mainlobe null.
pub const NO_NULL_PENALTY: f64 = 1e6;

/// Linear ISL of the waveform built from a fixed seed's `a0` and cosine terms
/// plus variable sine terms, on a grid frozen at construction.
#[derive(Debug, Clone)]
pub struct IslObjective {
    template: FourierCoefficients,
    duration: f64,
    basis: PhaseBasis,
    correlator: Correlator,
}

impl IslObjective {
    pub fn new(template: FourierCoefficients, duration: f64, samples: usize) -> Self {
        let basis = PhaseBasis::new(duration, template.harmonics(), samples);
        let correlator = Correlator::new(basis.len());
        Self {
            template,
            duration,
            basis,
            correlator,
        }
    }

    pub fn samples(&self) -> usize {
        self.basis.len()
    }

    pub fn coefficients(&self, b: &[f64]) -> FourierCoefficients {
        self.template
            .with_sine_terms(b.to_vec())
            .expect("sine vector length matches the template")
    }

    pub fn waveform(&self, b: &[f64]) -> SampledWaveform {
        self.basis.synthesize(&self.coefficients(b))
    }

    pub fn value(&self, b: &[f64]) -> f64 {
        self.isl_of(&self.waveform(b))
    }

    fn isl_of(&self, w: &SampledWaveform) -> f64 {
        let power = acf_with(&self.correlator, w).power();
        find_mainlobe_null(&power, w.dt())
            .and_then(|null| isl_ratio(&power, w.dt(), null))
            .unwrap_or(NO_NULL_PENALTY)
    }

    /// Forward differences with step `h` in every sine coordinate. The phase
    /// is linear in `b`, so each probe shifts the base phase by one table row.
    pub fn gradient(&self, b: &[f64], value: f64, h: f64) -> Vec<f64> {
        let base = self.basis.phase(&self.coefficients(b));
        (0..b.len())
            .into_par_iter()
            .map(|i| {
                let scale = h * self.duration / (i + 1) as f64;
                let phase: Vec<f64> = base
                    .iter()
                    .zip(self.basis.cosine_row(i))
                    .map(|(p, c)| p - scale * c)
                    .collect();
                (self.isl_of(&self.basis.synthesize_phase(&phase)) - value) / h
            })
            .collect()
    }
}
