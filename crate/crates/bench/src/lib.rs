//! Shared fixtures for the criterion benches.

use mtsfm::design::{lfm_equivalent_target, table1_seeds};
use mtsfm::{FourierCoefficients, WaveformSpec};

/// Benchmark seed I at a time-bandwidth product of 200, zero-padded to `pad` extra harmonics.
pub fn seed_one(pad: usize) -> WaveformSpec {
    let target = lfm_equivalent_target(200.0, 1.0).expect("valid target");
    let coeffs: FourierCoefficients = table1_seeds(&target)[0].zero_padded(pad);
    WaveformSpec::new(target.duration, coeffs).expect("valid spec")
}
