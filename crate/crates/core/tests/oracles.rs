use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use mtsfm::ambiguity::{acf, ambiguity, analyze};
use mtsfm::design::{lfm_equivalent_target, lfm_limit_coefficients, table1_seeds};
use mtsfm::eoa::{eoa_closed_form, eoa_contour, eoa_numeric};
use mtsfm::{FourierCoefficients, WaveformSpec};

fn lfm_limit_spec() -> WaveformSpec {
    WaveformSpec::new(1.0, lfm_limit_coefficients(200.0, 128).unwrap()).unwrap()
}

/// `dt * sum_n s_n conj(s_{n+k})` by direct summation.
fn brute_force_acf(s: &[Complex64], dt: f64) -> Vec<f64> {
    (0..s.len())
        .map(|k| {
            let sum: Complex64 = s.iter().zip(&s[k..]).map(|(a, b)| a * b.conj()).sum();
            (sum * dt).norm()
        })
        .collect()
}

#[test]
fn lfm_limit_acf_matches_direct_chirp() {
    let spec = lfm_limit_spec();
    let w = spec.synthesize();
    let dt = w.dt();
    let amplitude = 1.0 / w.duration().sqrt();
    let chirp: Vec<Complex64> = w
        .times()
        .map(|t| Complex64::from_polar(amplitude, PI * 200.0 * t * t))
        .collect();
    let oracle = brute_force_acf(&chirp, dt);
    let got = acf(&w).magnitude();
    let sup = oracle
        .iter()
        .zip(&got)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(sup <= 2e-2, "sup-norm {sup}");
}

#[test]
fn lfm_limit_null_and_sidelobe() {
    let report = analyze(&lfm_limit_spec().synthesize()).unwrap();
    assert!(
        (report.null_delay * 200.0 - 1.0).abs() <= 0.2,
        "null {}",
        report.null_delay
    );
    assert!(
        (report.pslr_db + 13.2).abs() <= 0.5,
        "PSLR {}",
        report.pslr_db
    );
}

/// Full lag range and one Doppler period at spacing `1/T`.
fn volume(spec: &WaveformSpec) -> f64 {
    let w = spec.synthesize();
    let n = w.len() as isize;
    let delays: Vec<f64> = (-(n - 1)..n).map(|k| k as f64 * w.dt()).collect();
    let dopplers: Vec<f64> = (0..n).map(|m| (m - n / 2) as f64 / w.duration()).collect();
    let grid = ambiguity(&w, &delays, &dopplers).unwrap();
    grid.magnitude.iter().flatten().map(|m| m * m).sum::<f64>() * w.dt() / w.duration()
}

#[test]
fn af_volume_is_unity() {
    let cw = WaveformSpec::new(0.5, FourierCoefficients::sine(vec![0.0]).unwrap()).unwrap();
    assert!((volume(&cw) - 1.0).abs() <= 0.02);
    let target = lfm_equivalent_target(200.0, 1.0).unwrap();
    let one = WaveformSpec::new(1.0, table1_seeds(&target)[0].clone()).unwrap();
    assert!((volume(&one) - 1.0).abs() <= 0.02);
}

#[test]
fn waveform_one_grid_point_symmetry() {
    let target = lfm_equivalent_target(200.0, 1.0).unwrap();
    let w = WaveformSpec::new(1.0, table1_seeds(&target)[0].clone())
        .unwrap()
        .synthesize();
    let delays: Vec<f64> = (-40..=40).map(|k| 7.0 * k as f64 * w.dt()).collect();
    let dopplers: Vec<f64> = (-20..=20).map(|m| 2.5 * m as f64).collect();
    let grid = ambiguity(&w, &delays, &dopplers).unwrap();
    let (nd, nt) = (dopplers.len(), delays.len());
    for i in 0..nd {
        for j in 0..nt {
            assert!((grid.at(i, j) - grid.at(nd - 1 - i, nt - 1 - j)).abs() <= 1e-6);
        }
    }
}

/// Major-axis direction of `beta^2 x^2 + 2 rho x y + tau^2 y^2` from the
/// eigenvector of the smaller eigenvalue.
fn major_axis_slope(beta_sq: f64, tau_sq: f64, rho: f64) -> f64 {
    let mid = 0.5 * (beta_sq + tau_sq);
    let lambda = mid - (0.25 * (beta_sq - tau_sq).powi(2) + rho * rho).sqrt();
    // (A - lambda) v = 0 with v = (rho, lambda - beta^2)
    (lambda - beta_sq) / rho
}

#[test]
fn contour_tilt_against_eigenvectors() {
    let target = lfm_equivalent_target(200.0, 1.0).unwrap();
    for coeffs in table1_seeds(&target) {
        let p = eoa_closed_form(&coeffs, 1.0);
        if p.rho_norm.abs() < 1e-3 {
            continue;
        }
        let pts = eoa_contour(&p, 0.5, 3600).unwrap();
        let far = pts
            .iter()
            .max_by(|a, b| a.0.hypot(a.1).total_cmp(&b.0.hypot(b.1)))
            .unwrap();
        let slope = far.1 / far.0;
        let oracle = major_axis_slope(p.beta_rms_sq, p.tau_rms_sq, p.rho);
        assert_eq!(slope.signum(), oracle.signum());
        assert_eq!(slope.signum(), -p.rho.signum());
        assert!((slope / oracle - 1.0).abs() < 1e-3, "{slope} vs {oracle}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn closed_form_matches_quadrature(
        a0 in -20.0..20.0f64,
        terms in prop::collection::vec((-30.0..30.0f64, -30.0..30.0f64), 1..=8),
        duration in 0.5..2.0f64,
    ) {
        let (a, b): (Vec<f64>, Vec<f64>) = terms.into_iter().unzip();
        let spec = WaveformSpec::new(duration, FourierCoefficients::new(a0, a, b).unwrap()).unwrap();
        let exact = eoa_closed_form(spec.coeffs(), duration);
        let quad = eoa_numeric(&spec.synthesize(), &spec);
        for (x, y) in [(quad.beta_rms_sq, exact.beta_rms_sq), (quad.tau_rms_sq, exact.tau_rms_sq)] {
            prop_assert!((x / y - 1.0).abs() <= 1e-6);
        }
        let scale = exact.beta_rms() * exact.tau_rms();
        prop_assert!((quad.rho - exact.rho).abs() <= 1e-6 * exact.rho.abs().max(1e-3 * scale));
    }
}
