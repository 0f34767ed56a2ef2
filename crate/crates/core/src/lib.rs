//! Multi-tone sinusoidal FM (MTSFM) waveform design.
//!
//! The crate covers the full design loop for MTSFM pulses whose instantaneous
//! frequency is a finite Fourier series:
//!
//! * [`waveform`]: coefficient model, phase/frequency evaluation, unit-energy synthesis
//! * [`ambiguity`]: narrowband AF, ACF, mainlobe null, PSLR and ISL
//! * [`eoa`]: closed-form and quadrature ellipse-of-ambiguity parameters
//! * [`design`]: bandwidth-constrained coefficient families and the max-coupling solution
//! * [`optimizer`]: ISL minimization under RMS-bandwidth and coupling bounds
//! * [`export`]: CSV and JSON writers used by the command-line tool

pub mod ambiguity;
pub mod design;
pub mod eoa;
pub mod error;
pub mod export;
pub mod optimizer;
pub mod quadrature;
pub mod waveform;

pub use ambiguity::{
    acf, ambiguity, analyze, find_mainlobe_null, isl_db, isl_ratio, pslr_db, Acf, AcfReport, AfGrid,
};
pub use design::{
    lfm_equivalent_target, lfm_limit_coefficients, max_rho_coefficients, rho_norm_max,
    table1_seeds, two_coeff_family, Branch, DesignTarget,
};
pub use eoa::{eoa_closed_form, eoa_contour, eoa_numeric, EoaParameters};
pub use error::{Error, Result};
pub use optimizer::{minimize_isl, IslProblem, IslResult};

pub use waveform::{FourierCoefficients, ModulationIndices, SampledWaveform, WaveformSpec};
