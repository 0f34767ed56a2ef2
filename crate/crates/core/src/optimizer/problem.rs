use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::eoa::{self, eoa_closed_form, EoaParameters};
use crate::error::{Error, Result};
use crate::waveform::{FourierCoefficients, WaveformSpec};

pub const DEFAULT_PAD: usize = 126;
pub const DEFAULT_DELTA: f64 = 0.1;
pub const DEFAULT_EPSILON: f64 = 0.05;
/// The coupling constraint is dropped when the seed's `|rho_norm|` is below this.
pub const DEFAULT_RHO_ABS_TOL: f64 = 1e-3;
pub const DEFAULT_MAX_EVALS: usize = 2_000_000;
/// Projections target bounds shrunk by this fraction of each interval, so
/// rounding never leaves a projected point outside the true bounds.
pub const PROJECTION_MARGIN: f64 = 1e-9;

/// Tuning knobs of the projected quasi-Newton search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Local descents: the first starts at the seed, the rest at perturbed copies of the best point.
    pub restarts: usize,
    pub max_iterations: usize,
    /// A descent stops when the objective improves by less than this fraction
    /// over `stall_window` iterations.
    pub stall_tolerance: f64,
    pub stall_window: usize,
    pub memory: usize,
    /// Forward-difference step as a fraction of the seed coefficient norm.
    pub fd_step: f64,
    /// Restart perturbation as a fraction of the seed coefficient norm.
    pub perturbation: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            restarts: 8,
            max_iterations: 1000,
            stall_tolerance: 1e-3,
            stall_window: 100,
            memory: 10,
            fd_step: 1e-6,
            perturbation: 0.3,
        }
    }
}

/// Minimize ISL over the sine coefficients subject to relative bounds on the
/// RMS bandwidth and the coupling factor of the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IslProblem {
    pub seed: WaveformSpec,
    #[serde(default = "default_pad")]
    pub pad: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_rho_abs_tol")]
    pub rho_abs_tol: f64,
    #[serde(default = "default_max_evals")]
    pub max_evals: usize,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default)]
    pub solver: SolverOptions,
}

fn default_pad() -> usize {
    DEFAULT_PAD
}
fn default_delta() -> f64 {
    DEFAULT_DELTA
}
fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}
fn default_rho_abs_tol() -> f64 {
    DEFAULT_RHO_ABS_TOL
}
fn default_max_evals() -> usize {
    DEFAULT_MAX_EVALS
}

impl IslProblem {
    pub fn new(seed: WaveformSpec) -> Self {
        Self {
            seed,
            pad: DEFAULT_PAD,
            delta: DEFAULT_DELTA,
            epsilon: DEFAULT_EPSILON,
            rho_abs_tol: DEFAULT_RHO_ABS_TOL,
            max_evals: DEFAULT_MAX_EVALS,
            rng_seed: 0,
            solver: SolverOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidProblem(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if !(self.epsilon >= 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidProblem(format!(
                "epsilon must lie in [0, 1), got {}",
                self.epsilon
            )));
        }
        if self.rho_abs_tol.is_nan() || self.rho_abs_tol < 0.0 {
            return Err(Error::InvalidProblem(
                "rho_abs_tol must be non-negative".into(),
            ));
        }
        if self.solver.restarts == 0
            || self.solver.memory == 0
            || self.solver.fd_step.is_nan()
            || self.solver.fd_step <= 0.0
        {
            return Err(Error::InvalidProblem(
                "solver needs at least one descent, nonzero memory and a positive fd_step".into(),
            ));
        }
        if self.seed.coeffs().sine_terms().iter().all(|b| *b == 0.0) {
            return Err(Error::InvalidProblem(
                "seed has no sine coefficients to optimize".into(),
            ));
        }
        Ok(())
    }

    /// Seed coefficients with `pad` zero harmonics appended.
    pub fn padded_seed(&self) -> FourierCoefficients {
        self.seed.coeffs().zero_padded(self.pad)
    }

    pub fn variables(&self) -> usize {
        self.seed.coeffs().harmonics() + self.pad
    }

    /// Grid size used for every objective evaluation of a run: the seed's
    /// density policy applied to the padded harmonic count.
    pub fn sample_count(&self) -> usize {
        self.seed
            .with_coeffs(self.padded_seed())
            .default_sample_count()
    }

    pub fn constraints(&self) -> ConstraintSet {
        ConstraintSet::new(self)
    }
}

/// Positive excess beyond each bound; zero when satisfied. The coupling entry
/// is `None` when that constraint is inactive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintViolation {
    /// In units of `beta_rms` (rad/s).
    pub beta_rms: f64,
    /// In units of `rho`.
    pub rho: Option<f64>,
}

impl ConstraintViolation {
    pub fn is_satisfied(&self, tol: f64) -> bool {
        self.beta_rms <= tol && self.rho.is_none_or(|r| r <= tol)
    }
}

/// Closed-form bounds on `beta_rms` and `rho` around the seed, plus exact
/// Euclidean projection onto the feasible set in sine-coefficient space.
#[derive(Debug, Clone)]
pub struct ConstraintSet {
    duration: f64,
    cosine_energy: f64,
    pub beta0: f64,
    pub beta_bounds: (f64, f64),
    pub rho0: f64,
    /// `None` when the seed's coupling is too close to zero for relative bounds.
    pub rho_bounds: Option<(f64, f64)>,
    rho_grad: Vec<f64>,
}

impl ConstraintSet {
    fn new(problem: &IslProblem) -> Self {
        let coeffs = problem.padded_seed();
        let duration = problem.seed.duration();
        let eoa = eoa_closed_form(&coeffs, duration);
        let beta0 = eoa.beta_rms();
        let rho_bounds = (eoa.rho_norm.abs() >= problem.rho_abs_tol).then(|| {
            let (a, b) = (
                (1.0 - problem.epsilon) * eoa.rho,
                (1.0 + problem.epsilon) * eoa.rho,
            );
            (a.min(b), a.max(b))
        });
        let cosine_energy = coeffs.cosine_terms().iter().map(|a| a * a).sum();
        Self {
            duration,
            cosine_energy,
            beta0,
            beta_bounds: ((1.0 - problem.delta) * beta0, (1.0 + problem.delta) * beta0),
            rho0: eoa.rho,
            rho_bounds,
            rho_grad: eoa::rho_gradient(duration, coeffs.harmonics()),
        }
    }

    pub fn rho_active(&self) -> bool {
        self.rho_bounds.is_some()
    }

    pub fn beta_rms(&self, b: &[f64]) -> f64 {
        let sine: f64 = b.iter().map(|v| v * v).sum();
        (2.0 * PI * PI * (sine + self.cosine_energy)).sqrt()
    }

    pub fn rho(&self, b: &[f64]) -> f64 {
        eoa::rho(b, self.duration)
    }

    pub fn violation(&self, b: &[f64]) -> ConstraintViolation {
        let excess = |v: f64, (lo, hi): (f64, f64)| (lo - v).max(v - hi).max(0.0);
        ConstraintViolation {
            beta_rms: excess(self.beta_rms(b), self.beta_bounds),
            rho: self.rho_bounds.map(|bounds| excess(self.rho(b), bounds)),
        }
    }

    /// Largest violation relative to the seed's value of each quantity.
    pub fn relative_violation(&self, b: &[f64]) -> f64 {
        let v = self.violation(b);
        let rho = v.rho.map_or(0.0, |r| r / self.rho0.abs());
        (v.beta_rms / self.beta0).max(rho)
    }

    pub fn ratios(&self, b: &[f64]) -> (f64, Option<f64>) {
        (
            self.beta_rms(b) / self.beta0,
            self.rho_bounds.map(|_| self.rho(b) / self.rho0),
        )
    }

    pub fn eoa(&self, b: &[f64]) -> EoaParameters {
        let beta = self.beta_rms(b);
        EoaParameters::new(beta * beta, eoa::tau_rms_sq(self.duration), self.rho(b))
    }

    /// Bounds on the sine-coefficient norm implied by the bandwidth bounds,
    /// pulled inward by [`PROJECTION_MARGIN`].
    fn radius_bounds(&self) -> (f64, f64) {
        let to_radius = |beta: f64| {
            (beta * beta / (2.0 * PI * PI) - self.cosine_energy)
                .max(0.0)
                .sqrt()
        };
        let (lo, hi) = (to_radius(self.beta_bounds.0), to_radius(self.beta_bounds.1));
        let margin = PROJECTION_MARGIN * (hi - lo);
        (lo + margin, hi - margin)
    }

    /// Nearest feasible point. The feasible set is an annulus in `b`,
    /// intersected with a slab along the coupling gradient when active, so the
    /// projection reduces to a planar problem in (slab coordinate, orthogonal norm).
    pub fn project(&self, b: &[f64]) -> Vec<f64> {
        let (r_lo, r_hi) = self.radius_bounds();
        let Some((lo, hi)) = self.rho_bounds else {
            let n = norm(b);
            if n == 0.0 {
                let mut out = vec![0.0; b.len()];
                out[0] = r_lo;
                return out;
            }
            let scale = n.clamp(r_lo, r_hi) / n;
            return b.iter().map(|v| v * scale).collect();
        };

        let (rho_lo, rho_hi) = (
            lo + PROJECTION_MARGIN * (hi - lo),
            hi - PROJECTION_MARGIN * (hi - lo),
        );
        // rho(b) = grad . b, so the slab is u in [rho_lo, rho_hi] / |grad|
        let g_norm = norm(&self.rho_grad);
        let axis: Vec<f64> = self.rho_grad.iter().map(|g| g / g_norm).collect();
        let u = dot(&axis, b);
        let mut ortho: Vec<f64> = b.iter().zip(&axis).map(|(v, a)| v - u * a).collect();
        let r = norm(&ortho);
        let (u2, r2) = project_planar(u, r, (rho_lo / g_norm, rho_hi / g_norm), (r_lo, r_hi));
        if r == 0.0 && r2 > 0.0 {
            // any unit vector orthogonal to the axis
            let j = if axis[0].abs() < 0.9 { 0 } else { 1 };
            ortho = axis.iter().map(|a| -a * axis[j]).collect();
            ortho[j] += 1.0;
            let n = norm(&ortho);
            ortho.iter_mut().for_each(|v| *v /= n);
            return axis
                .iter()
                .zip(&ortho)
                .map(|(a, o)| u2 * a + r2 * o)
                .collect();
        }
        let scale = if r > 0.0 { r2 / r } else { 0.0 };
        axis.iter()
            .zip(&ortho)
            .map(|(a, o)| u2 * a + scale * o)
            .collect()
    }
}

/// Nearest point to `(u, r)` in `{u in [u_lo, u_hi], r >= 0, r_lo <= |(u, r)| <= r_hi}`.
fn project_planar(
    u: f64,
    r: f64,
    (u_lo, u_hi): (f64, f64),
    (r_lo, r_hi): (f64, f64),
) -> (f64, f64) {
    const TOL: f64 = 1e-12;
    let feasible = |(p, q): (f64, f64)| {
        let n = p.hypot(q);
        p >= u_lo - TOL * u_lo.abs().max(1.0)
            && p <= u_hi + TOL * u_hi.abs().max(1.0)
            && q >= 0.0
            && n >= r_lo * (1.0 - TOL)
            && n <= r_hi * (1.0 + TOL)
    };
    if feasible((u, r)) {
        return (u, r);
    }
    let mut candidates = Vec::with_capacity(8);
    let n = u.hypot(r);
    for radius in [r_lo, r_hi] {
        if n > 0.0 {
            candidates.push((radius * u / n, radius * r / n));
        }
    }
    for edge in [u_lo, u_hi] {
        let q_min = (r_lo * r_lo - edge * edge).max(0.0).sqrt();
        if r_hi * r_hi >= edge * edge {
            let q_max = (r_hi * r_hi - edge * edge).sqrt();
            candidates.push((edge, r.clamp(q_min, q_max.max(q_min))));
        }
    }
    candidates
        .into_iter()
        .filter(|c| feasible(*c))
        .min_by(|a, b| {
            let da = (a.0 - u).powi(2) + (a.1 - r).powi(2);
            let db = (b.0 - u).powi(2) + (b.1 - r).powi(2);
            da.total_cmp(&db)
        })
        .unwrap_or((u.clamp(u_lo, u_hi), r))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{lfm_equivalent_target, table1_seeds};
    use proptest::prelude::*;

    fn problem(row: usize) -> IslProblem {
        let target = lfm_equivalent_target(200.0, 1.0).unwrap();
        let seed = WaveformSpec::new(1.0, table1_seeds(&target)[row].clone()).unwrap();
        IslProblem::new(seed)
    }

    #[test]
    fn seed_has_no_violation() {
        for row in 0..4 {
            let p = problem(row);
            let c = p.constraints();
            let v = c.violation(p.padded_seed().sine_terms());
            assert_eq!(v.beta_rms, 0.0);
            assert!(v.rho.is_none_or(|r| r == 0.0));
        }
    }

    #[test]
    fn scaled_seed_reports_excess() {
        let p = problem(0);
        let c = p.constraints();
        let b: Vec<f64> = p
            .padded_seed()
            .sine_terms()
            .iter()
            .map(|v| 1.2 * v)
            .collect();
        let v = c.violation(&b);
        assert!((v.beta_rms - 0.1 * c.beta0).abs() < 1e-9 * c.beta0);
        // rho scales by 1.2 as well: 0.15 |rho0| beyond the 1.05 bound
        assert!((v.rho.unwrap() - 0.15 * c.rho0.abs()).abs() < 1e-9 * c.rho0.abs());
    }

    #[test]
    fn zero_coupling_seed_drops_rho_constraint() {
        let c = problem(2).constraints();
        assert!(!c.rho_active());
        assert!(c.violation(&[1.0, 2.0]).rho.is_none());
        assert!(problem(3).constraints().rho_active());
    }

    #[test]
    fn negative_rho_bounds_are_ordered() {
        let c = problem(3).constraints();
        let (lo, hi) = c.rho_bounds.unwrap();
        assert!(c.rho0 < 0.0);
        assert!((lo - 1.05 * c.rho0).abs() < 1e-12 * c.rho0.abs());
        assert!((hi - 0.95 * c.rho0).abs() < 1e-12 * c.rho0.abs());
    }

    #[test]
    fn planar_projection_cases() {
        // inside
        assert_eq!(project_planar(0.5, 0.5, (0.0, 1.0), (0.5, 2.0)), (0.5, 0.5));
        // outside the outer circle, inside the slab
        let (u, r) = project_planar(0.0, 3.0, (-1.0, 1.0), (0.5, 2.0));
        assert!((u - 0.0).abs() < 1e-15 && (r - 2.0).abs() < 1e-15);
        // beyond the slab edge
        let (u, r) = project_planar(1.5, 0.5, (-1.0, 1.0), (0.5, 2.0));
        assert_eq!((u, r), (1.0, 0.5));
        // inside the inner hole near the slab edge: corner or arc
        let (u, r) = project_planar(0.9, 0.0, (0.95, 1.05), (1.0, 1.2));
        assert!((u - 1.0).abs() < 1e-12 && r.abs() < 1e-12);
    }

    #[test]
    fn problem_json_defaults() {
        let p: IslProblem = serde_json::from_str(
            r#"{"seed": {"T": 1.0, "b": [70.0, -35.0]}, "max_evals": 100, "rng_seed": 3}"#,
        )
        .unwrap();
        assert_eq!(p.pad, 126);
        assert_eq!(p.delta, 0.1);
        assert_eq!(p.epsilon, 0.05);
        assert_eq!(p.max_evals, 100);
        assert_eq!(p.rng_seed, 3);
        p.validate().unwrap();
        let bad = IslProblem { delta: 1.5, ..p };
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn projection_is_feasible_and_idempotent(
            row in 0usize..4,
            noise in prop::collection::vec(-1.0..1.0f64, 128),
            size in 0.0..3.0f64,
        ) {
            let p = problem(row);
            let c = p.constraints();
            let seed = p.padded_seed();
            let r0 = norm(seed.sine_terms());
            let b: Vec<f64> = seed.sine_terms().iter().zip(&noise).map(|(s, n)| s + size * r0 * n / 8.0).collect();
            let x = c.project(&b);
            prop_assert_eq!(c.relative_violation(&x), 0.0);
            let y = c.project(&x);
            for (a, b) in x.iter().zip(&y) {
                prop_assert!((a - b).abs() <= 1e-9 * r0);
            }
            // no feasible point sampled along the segment is closer
            let d = |z: &[f64]| z.iter().zip(&b).map(|(u, v)| (u - v).powi(2)).sum::<f64>();
            let dx = d(&x);
            for t in [0.25, 0.5, 0.75] {
                let z: Vec<f64> = x.iter().zip(seed.sine_terms()).map(|(u, v)| u + t * (v - u)).collect();
                if c.relative_violation(&z) == 0.0 {
                    prop_assert!(d(&z) >= dx * (1.0 - 1e-9));
                }
            }
        }
    }
}
