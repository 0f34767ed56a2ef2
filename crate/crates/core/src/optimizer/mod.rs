//! ISL minimization over the sine coefficients of a zero-padded seed.
//!
//! Every iterate is kept inside the feasible set by exact Euclidean projection,
//! and descent directions come from limited-memory BFGS on finite-difference
//! gradients. Perturbed restarts around the incumbent escape shallow basins.
//! Runs are deterministic for a given problem, including `rng_seed`.

mod objective;
mod problem;

use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::ambiguity::{analyze, AcfReport};
use crate::eoa::{eoa_closed_form, EoaParameters};
use crate::error::Result;
use crate::waveform::WaveformSpec;

pub use objective::{IslObjective, NO_NULL_PENALTY};
pub use problem::{ConstraintSet, ConstraintViolation, IslProblem, SolverOptions};

/// Iterates within this relative violation count as feasible.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// One entry per iterate that improved on the best objective so far.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub evaluations: usize,
    /// Linear ISL.
    pub objective: f64,
    /// Largest constraint violation relative to the seed value.
    pub violation: f64,
}

#[derive(Debug, Clone)]
pub struct IslResult {
    /// Zero-padded seed.
    pub seed: WaveformSpec,
    pub spec: WaveformSpec,
    /// Grid size shared by the seed and final analyses.
    pub samples: usize,
    pub initial: AcfReport,
    pub report: AcfReport,
    pub initial_eoa: EoaParameters,
    pub eoa: EoaParameters,
    pub history: Vec<HistoryEntry>,
    pub feasible: bool,
    pub improved: bool,
    pub budget_exhausted: bool,
    pub rho_active: bool,
    pub evaluations: usize,
    pub beta_ratio: f64,
    pub rho_ratio: Option<f64>,
}

impl IslResult {
    pub fn isl_improvement_db(&self) -> f64 {
        self.initial.isl_db - self.report.isl_db
    }
}

struct Evaluator<'a> {
    objective: &'a IslObjective,
    constraints: &'a ConstraintSet,
    fd_step: f64,
    count: usize,
    budget: usize,
    exhausted: bool,
    best: (f64, Vec<f64>),
    history: Vec<HistoryEntry>,
}

impl Evaluator<'_> {
    fn value(&mut self, b: &[f64]) -> Option<f64> {
        if self.count >= self.budget {
            self.exhausted = true;
            return None;
        }
        self.count += 1;
        Some(self.objective.value(b))
    }

    fn gradient(&mut self, b: &[f64], value: f64) -> Option<Vec<f64>> {
        if self.count + b.len() > self.budget {
            self.exhausted = true;
            return None;
        }
        self.count += b.len();
        Some(self.objective.gradient(b, value, self.fd_step))
    }

    fn offer(&mut self, b: &[f64], value: f64) {
        if value < self.best.0 {
            self.best = (value, b.to_vec());
            self.history.push(HistoryEntry {
                evaluations: self.count,
                objective: value,
                violation: self.constraints.relative_violation(b),
            });
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// L-BFGS two-loop recursion: approximate inverse Hessian times `g`.
fn two_loop(g: &[f64], memory: &VecDeque<(Vec<f64>, Vec<f64>)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y) in memory.iter().rev() {
        let a = dot(s, &q) / dot(y, s);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    let gamma = match memory.back() {
        Some((s, y)) => dot(s, y) / dot(y, y),
        None => 1.0 / dot(g, g).sqrt(),
    };
    q.iter_mut().for_each(|v| *v *= gamma);
    for ((s, y), a) in memory.iter().zip(alphas.iter().rev()) {
        let b = dot(y, &q) / dot(y, s);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += si * (a - b));
    }
    q
}

/// Projected L-BFGS descent with Armijo backtracking along the projection arc.
fn descend(
    ev: &mut Evaluator<'_>,
    opts: &SolverOptions,
    mut x: Vec<f64>,
    mut fx: f64,
) -> Option<()> {
    let mut gx = ev.gradient(&x, fx)?;
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>)> = VecDeque::with_capacity(opts.memory);
    let mut trace = Vec::with_capacity(opts.max_iterations);
    for _ in 0..opts.max_iterations {
        let mut d: Vec<f64> = two_loop(&gx, &memory).iter().map(|v| -v).collect();
        if dot(&d, &gx) >= 0.0 {
            let n = dot(&gx, &gx).sqrt();
            d = gx.iter().map(|v| -v / n).collect();
            memory.clear();
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
            let xn = ev.constraints.project(&trial);
            let fnew = ev.value(&xn)?;
            let moved: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
            if fnew < fx && fnew < fx - 1e-4 * dot(&gx, &moved).abs() {
                accepted = Some((xn, fnew, moved));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fnew, s)) = accepted else {
            if memory.is_empty() {
                break;
            }
            memory.clear();
            continue;
        };
        ev.offer(&xn, fnew);
        let gn = ev.gradient(&xn, fnew)?;
        let y: Vec<f64> = gn.iter().zip(&gx).map(|(a, b)| a - b).collect();
        if dot(&s, &y) > 1e-12 {
            if memory.len() == opts.memory {
                memory.pop_front();
            }
            memory.push_back((s, y));
        }
        (x, fx, gx) = (xn, fnew, gn);

        trace.push(fx);
        if trace.len() > opts.stall_window {
            let before = trace[trace.len() - 1 - opts.stall_window];
            if fx > before * (1.0 - opts.stall_tolerance) {
                break;
            }
        }
    }
    Some(())
}

/// Minimizes the linear ISL over the sine coefficients of the padded seed,
/// keeping `a0` and the cosine terms fixed.
pub fn minimize_isl(problem: &IslProblem) -> Result<IslResult> {
    problem.validate()?;
    let duration = problem.seed.duration();
    let padded = problem.padded_seed();
    let seed_spec = problem.seed.with_coeffs(padded.clone());
    let samples = problem.sample_count();
    let initial = analyze(&seed_spec.synthesize_with_samples(samples))?;

    let constraints = problem.constraints();
    let objective = IslObjective::new(padded.clone(), duration, samples);
    let b0 = padded.sine_terms().to_vec();
    let r0 = dot(&b0, &b0).sqrt();
    let opts = &problem.solver;

    let mut ev = Evaluator {
        objective: &objective,
        constraints: &constraints,
        fd_step: opts.fd_step * r0,
        count: 0,
        budget: problem.max_evals,
        exhausted: false,
        best: (f64::INFINITY, b0.clone()),
        history: Vec::new(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(problem.rng_seed);
    let sigma = opts.perturbation * r0 / (b0.len() as f64).sqrt();

    'restarts: for restart in 0..opts.restarts {
        let start = if restart == 0 {
            b0.clone()
        } else {
            let kick: Vec<f64> = ev
                .best
                .1
                .iter()
                .map(|v| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    v + sigma * z
                })
                .collect();
            constraints.project(&kick)
        };
        let Some(f_start) = ev.value(&start) else {
            break 'restarts;
        };
        ev.offer(&start, f_start);
        if descend(&mut ev, opts, start, f_start).is_none() {
            break 'restarts;
        }
    }

    let seed_value = ev.history.first().map_or(f64::INFINITY, |h| h.objective);
    let improved = ev.best.0 < seed_value;
    let best = if improved {
        ev.best.1.clone()
    } else {
        b0.clone()
    };
    let spec = seed_spec.with_coeffs(padded.with_sine_terms(best.clone())?);
    let report = analyze(&spec.synthesize_with_samples(samples))?;
    let (beta_ratio, rho_ratio) = constraints.ratios(&best);

    Ok(IslResult {
        initial_eoa: eoa_closed_form(seed_spec.coeffs(), duration),
        eoa: eoa_closed_form(spec.coeffs(), duration),
        seed: seed_spec,
        spec,
        samples,
        initial,
        report,
        feasible: constraints.relative_violation(&best) <= FEASIBILITY_TOL,
        improved,
        budget_exhausted: ev.exhausted,
        rho_active: constraints.rho_active(),
        evaluations: ev.count,
        beta_ratio,
        rho_ratio,
        history: ev.history,
    })
}
