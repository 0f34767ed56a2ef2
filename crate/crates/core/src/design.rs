//! Coefficient sets with a prescribed RMS bandwidth.
//!
//! Normalized coefficients `c_l = sqrt(2) pi b_l / beta_rms` lie on the unit
//! sphere whenever the bandwidth constraint `2 pi^2 sum b_l^2 = beta_rms^2` holds.

use std::f64::consts::{PI, SQRT_2};

use crate::eoa::{eoa_closed_form, odd_weight};
use crate::error::{Error, Result};
use crate::waveform::FourierCoefficients;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignTarget {
    /// Target RMS bandwidth, rad/s.
    pub beta_rms: f64,
    pub duration: f64,
    pub harmonics: usize,
}

impl DesignTarget {
    pub fn new(beta_rms: f64, duration: f64, harmonics: usize) -> Result<Self> {
        if !(beta_rms > 0.0 && beta_rms.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "beta_rms must be positive, got {beta_rms}"
            )));
        }
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "duration must be positive, got {duration}"
            )));
        }
        if harmonics == 0 {
            return Err(Error::InvalidSpec(
                "at least one harmonic is required".into(),
            ));
        }
        Ok(Self {
            beta_rms,
            duration,
            harmonics,
        })
    }

    pub fn with_harmonics(self, harmonics: usize) -> Result<Self> {
        Self::new(self.beta_rms, self.duration, harmonics)
    }

    /// `beta_rms / (sqrt(2) pi)`: the coefficient norm that meets the target.
    pub fn coefficient_radius(&self) -> f64 {
        self.beta_rms / (SQRT_2 * PI)
    }

    /// Converts normalized coefficients `c_l` to Hz.
    pub fn denormalize(&self, normalized: &[f64]) -> Vec<f64> {
        normalized
            .iter()
            .map(|c| c * self.coefficient_radius())
            .collect()
    }

    pub fn normalize(&self, b: &[f64]) -> Vec<f64> {
        b.iter().map(|v| v / self.coefficient_radius()).collect()
    }
}

/// Target whose RMS bandwidth equals that of an LFM with the given
/// time-bandwidth product: `delta_f = TB / T`, `beta_rms = pi delta_f / sqrt(3)`.
/// Two harmonics are assumed; use [`DesignTarget::with_harmonics`] to change.
pub fn lfm_equivalent_target(time_bandwidth: f64, duration: f64) -> Result<DesignTarget> {
    if time_bandwidth.is_nan() || time_bandwidth <= 0.0 {
        return Err(Error::InvalidSpec(format!(
            "time-bandwidth product must be positive, got {time_bandwidth}"
        )));
    }
    let delta_f = time_bandwidth / duration;
    DesignTarget::new(PI * delta_f / 3f64.sqrt(), duration, 2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Positive,
    Negative,
}

impl Branch {
    fn sign(self) -> f64 {
        match self {
            Branch::Positive => 1.0,
            Branch::Negative => -1.0,
        }
    }
}

/// Two sine coefficients on the bandwidth circle: `b2 = +-sqrt(beta^2/(2 pi^2) - b1^2)`.
pub fn two_coeff_family(
    target: &DesignTarget,
    b1: f64,
    branch: Branch,
) -> Result<FourierCoefficients> {
    let r = target.coefficient_radius();
    let slack = r * r - b1 * b1;
    if slack < -1e-12 * r * r || !b1.is_finite() {
        return Err(Error::InfeasibleConstraint(format!(
            "|b1| = {} exceeds the bandwidth radius {r}",
            b1.abs()
        )));
    }
    let b2 = branch.sign() * slack.max(0.0).sqrt();
    FourierCoefficients::sine(vec![b1, b2])
}

/// `sum_{l<=L} (cos(pi l)/(pi l))^2`.
fn odd_weight_energy(harmonics: usize) -> f64 {
    (1..=harmonics).map(|l| odd_weight(l).powi(2)).sum()
}

/// Coefficients that maximize the coupling factor for a fixed RMS bandwidth:
/// `b_l` proportional to `-cos(pi l)/(pi l)`, scaled onto the bandwidth sphere.
pub fn max_rho_coefficients(target: &DesignTarget) -> FourierCoefficients {
    let norm = odd_weight_energy(target.harmonics).sqrt();
    let scale = -SQRT_2 * target.beta_rms / (2.0 * PI * norm);
    let b = (1..=target.harmonics)
        .map(|l| scale * odd_weight(l))
        .collect();
    FourierCoefficients::sine(b).expect("harmonics >= 1 and finite")
}

/// Upper bound of the normalized coupling factor with `L` harmonics,
/// `(sqrt(6)/pi) sqrt(sum_{l<=L} 1/l^2)`.
pub fn rho_norm_max(harmonics: usize) -> f64 {
    let s: f64 = (1..=harmonics).map(|l| 1.0 / (l * l) as f64).sum();
    6f64.sqrt() / PI * s.sqrt()
}

/// Truncated Fourier series of an up-sweeping linear chirp of swept bandwidth
/// `delta_f`: `b_l = -delta_f cos(pi l) / (pi l)`, so `m(t) -> delta_f t / T`.
pub fn lfm_limit_coefficients(delta_f: f64, harmonics: usize) -> Result<FourierCoefficients> {
    if harmonics == 0 {
        return Err(Error::InvalidSpec(
            "at least one harmonic is required".into(),
        ));
    }
    FourierCoefficients::sine((1..=harmonics).map(|l| -delta_f * odd_weight(l)).collect())
}

/// Normalized `(c1, c2)` design pairs of the four benchmark seeds I-IV.
pub const TABLE1_NORMALIZED: [(f64, f64); 4] = [
    (0.8944, -0.4473),
    (0.1292, -0.9916),
    (-0.4472, -0.8944),
    (-0.8944, 0.4473),
];

/// Normalized coupling factor of a normalized pair, as listed for the seeds.
pub fn table1_rho_norm(c1: f64, c2: f64) -> f64 {
    let target = DesignTarget::new(1.0, 1.0, 2).expect("valid target");
    let b = FourierCoefficients::sine(target.denormalize(&[c1, c2])).expect("finite");
    eoa_closed_form(&b, 1.0).rho_norm
}

/// The four seeds scaled to `target`, each renormalized onto the exact
/// bandwidth constraint (the tabulated pairs are rounded to four digits).
pub fn table1_seeds(target: &DesignTarget) -> [FourierCoefficients; 4] {
    TABLE1_NORMALIZED.map(|(c1, c2)| {
        let n = c1.hypot(c2);
        FourierCoefficients::sine(target.denormalize(&[c1 / n, c2 / n])).expect("finite")
    })
}

/// Data behind the bandwidth-circle design figure.
#[derive(Debug, Clone, PartialEq)]
pub struct Figure1 {
    /// `(branch, c1, c2)` on the unit circle.
    pub circle: Vec<(Branch, f64, f64)>,
    /// `(branch, c1, rho_norm)`.
    pub rho_trace: Vec<(Branch, f64, f64)>,
    /// `(L, rho_norm_max)`.
    pub rho_max: Vec<(usize, f64)>,
}

pub const FIGURE1_POINTS: usize = 721;
pub const FIGURE1_MAX_HARMONICS: usize = 64;

pub fn figure1() -> Figure1 {
    let target = DesignTarget::new(SQRT_2 * PI, 1.0, 2).expect("valid target");
    let mut circle = Vec::with_capacity(2 * FIGURE1_POINTS);
    let mut rho_trace = Vec::with_capacity(2 * FIGURE1_POINTS);
    for branch in [Branch::Positive, Branch::Negative] {
        for i in 0..FIGURE1_POINTS {
            let c1 = -1.0 + 2.0 * i as f64 / (FIGURE1_POINTS - 1) as f64;
            let b = two_coeff_family(&target, c1, branch).expect("c1 within [-1, 1]");
            let c2 = b.sine_terms()[1];
            circle.push((branch, c1, c2));
            rho_trace.push((branch, c1, eoa_closed_form(&b, 1.0).rho_norm));
        }
    }
    let rho_max = (1..=FIGURE1_MAX_HARMONICS)
        .map(|l| (l, rho_norm_max(l)))
        .collect();
    Figure1 {
        circle,
        rho_trace,
        rho_max,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eoa::eoa_closed_form;
    use proptest::prelude::*;

    fn target(l: usize) -> DesignTarget {
        lfm_equivalent_target(200.0, 1.0)
            .unwrap()
            .with_harmonics(l)
            .unwrap()
    }

    #[test]
    fn two_coeff_on_axis() {
        let t = target(2);
        let r = t.coefficient_radius();
        for branch in [Branch::Positive, Branch::Negative] {
            let b = two_coeff_family(&t, r, branch).unwrap();
            assert_eq!(b.sine_terms()[1], 0.0);
            let p = eoa_closed_form(&b, t.duration);
            assert!((p.rho_norm - 6f64.sqrt() / PI).abs() < 1e-12);
        }
        let b = two_coeff_family(&t, 0.0, Branch::Positive).unwrap();
        let p = eoa_closed_form(&b, t.duration);
        assert!((p.rho_norm + 3f64.sqrt() / (SQRT_2 * PI)).abs() < 1e-12);
        assert!((p.rho_norm + 0.3899).abs() < 1e-4);
    }

    #[test]
    fn two_coeff_rho_follows_linear_form() {
        let t = target(2);
        let b = two_coeff_family(&t, 30.0, Branch::Negative).unwrap();
        let (b1, b2) = (b.sine_terms()[0], b.sine_terms()[1]);
        let rho = eoa_closed_form(&b, t.duration).rho;
        assert!((rho - PI * t.duration * (2.0 * b1 - b2)).abs() < 1e-9 * rho.abs());
    }

    #[test]
    fn two_coeff_infeasible() {
        let t = target(2);
        let r = t.coefficient_radius();
        assert!(matches!(
            two_coeff_family(&t, 1.01 * r, Branch::Positive),
            Err(Error::InfeasibleConstraint(_))
        ));
    }

    #[test]
    fn max_rho_two_harmonics_is_seed_one() {
        let t = target(2);
        let b = max_rho_coefficients(&t);
        let c = t.normalize(b.sine_terms());
        assert!((c[0] - 0.8944).abs() < 1e-3);
        assert!((c[1] + 0.4473).abs() < 1e-3);
        let p = eoa_closed_form(&b, t.duration);
        assert!((p.rho_norm - 0.8717).abs() < 1e-4);
        assert!((p.beta_rms() / t.beta_rms - 1.0).abs() < 1e-12);
    }

    #[test]
    fn max_rho_limits() {
        assert!((rho_norm_max(1) - 6f64.sqrt() / PI).abs() < 1e-15);
        let p = eoa_closed_form(&max_rho_coefficients(&target(1)), 1.0);
        assert!((p.rho_norm - 0.7797).abs() < 1e-4);
        assert!((rho_norm_max(128) - 0.9977).abs() < 1e-4);
        for l in 1..200 {
            assert!(rho_norm_max(l + 1) > rho_norm_max(l));
            assert!(rho_norm_max(l) < 1.0);
        }
        let neg: Vec<f64> = max_rho_coefficients(&target(5))
            .sine_terms()
            .iter()
            .map(|b| -b)
            .collect();
        let p = eoa_closed_form(&FourierCoefficients::sine(neg).unwrap(), 1.0);
        assert!((p.rho_norm + rho_norm_max(5)).abs() < 1e-12);
    }

    #[test]
    fn lfm_target_examples() {
        let t = lfm_equivalent_target(200.0, 1.0).unwrap();
        assert!((t.beta_rms - 200.0 * PI / 3f64.sqrt()).abs() < 1e-12);
        let t = lfm_equivalent_target(1.0, 1.0).unwrap();
        assert!((t.beta_rms - PI / 3f64.sqrt()).abs() < 1e-15);
        assert!(lfm_equivalent_target(0.0, 1.0).is_err());

        let t = target(2);
        let seed = &table1_seeds(&t)[0];
        let beta_sq = eoa_closed_form(seed, t.duration).beta_rms_sq;
        assert!((beta_sq / (PI * 200.0 / 3f64.sqrt()).powi(2) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn lfm_limit_first_coefficient() {
        let b = lfm_limit_coefficients(200.0, 4).unwrap();
        assert!((b.sine_terms()[0] - 200.0 / PI).abs() < 1e-12);
        assert!(lfm_limit_coefficients(200.0, 0).is_err());
    }

    #[test]
    fn lfm_limit_parallel_to_max_rho() {
        let t = target(9);
        let a = max_rho_coefficients(&t);
        let b = lfm_limit_coefficients(200.0, 9).unwrap();
        let ratio = a.sine_terms()[0] / b.sine_terms()[0];
        assert!(ratio > 0.0);
        for (x, y) in a.sine_terms().iter().zip(b.sine_terms()) {
            assert!((x / y - ratio).abs() < 1e-12);
        }
    }

    #[test]
    fn table1_values() {
        let expected = [0.8717, 0.4873, 0.0, -0.8717];
        for ((c1, c2), rho) in TABLE1_NORMALIZED.iter().zip(expected) {
            assert!((table1_rho_norm(*c1, *c2) - rho).abs() < 2e-4);
        }
        let t = target(2);
        for seed in table1_seeds(&t) {
            let beta = eoa_closed_form(&seed, t.duration).beta_rms();
            assert!((beta / t.beta_rms - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn figure1_extremes() {
        let f = figure1();
        assert_eq!(f.circle.len(), 2 * FIGURE1_POINTS);
        for (_, c1, c2) in &f.circle {
            assert!((c1 * c1 + c2 * c2 - 1.0).abs() < 1e-12);
        }
        let max = f.rho_trace.iter().map(|r| r.2).fold(f64::MIN, f64::max);
        let min = f.rho_trace.iter().map(|r| r.2).fold(f64::MAX, f64::min);
        assert!((max - 0.8717).abs() < 1e-3);
        assert!((min + 0.8717).abs() < 1e-3);
        assert!(f.rho_max.windows(2).all(|w| w[1].1 > w[0].1));
        assert_eq!(f.rho_max.len(), FIGURE1_MAX_HARMONICS);
    }

    proptest! {
        #[test]
        fn two_coeff_meets_bandwidth(frac in -1.0..1.0f64, positive: bool) {
            let t = target(2);
            let branch = if positive { Branch::Positive } else { Branch::Negative };
            let b = two_coeff_family(&t, frac * t.coefficient_radius(), branch).unwrap();
            let beta_sq = eoa_closed_form(&b, t.duration).beta_rms_sq;
            prop_assert!((beta_sq / t.beta_rms.powi(2) - 1.0).abs() < 1e-9);
        }

        #[test]
        fn perturbing_max_rho_lowers_coupling(
            l in 2usize..12,
            noise in prop::collection::vec(-1.0..1.0f64, 12),
            size in 1e-3..0.5f64,
        ) {
            let t = target(l);
            let best = max_rho_coefficients(&t);
            let p_best = eoa_closed_form(&best, t.duration);
            prop_assert!((p_best.rho_norm - rho_norm_max(l)).abs() < 1e-12);

            let mut b: Vec<f64> = best.sine_terms().iter().zip(&noise)
                .map(|(v, n)| v + size * t.coefficient_radius() * n)
                .collect();
            let norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
            b.iter_mut().for_each(|v| *v *= t.coefficient_radius() / norm);
            let p = eoa_closed_form(&FourierCoefficients::sine(b).unwrap(), t.duration);
            prop_assert!(p.rho_norm < p_best.rho_norm);
        }
    }
}
