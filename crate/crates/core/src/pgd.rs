//! Antenna-position block: projected gradient descent on the
//! augmented-Lagrangian objective with the beamformers and `Q` held fixed.
//!
//! With `a_p = e^{−jφ_s t_p}`, `h_{k,p} = Σ_l σ_{k,l} e^{−jφ_{k,l} t_p}`
//! (`φ = 2π sinθ/λ`), `B_{ki} = h_kᴴ W_i h_k` and `A = Q + ρξ`:
//!
//! ```text
//! ∂F/∂t_p = −2·Re( conj(∂a_p)·(R_x a)_p )
//!           + Σ_{k,i} ((B_{ki} − A_{ki})/ρ) · 2·Re( conj(∂h_{k,p})·(W_i h_k)_p )
//! ```
//!
//! where `R_x = Σ_k W_k`, `∂a_p = −jφ_s a_p` and
//! `∂h_{k,p} = Σ_l (−jφ_{k,l}) σ_{k,l} e^{−jφ_{k,l} t_p}`.

use num_complex::Complex64;

use crate::channel::{al_objective_lifted, spatial_frequency, synthesize_channels, Penalty};
use crate::geometry::{project, Positions};
use crate::scenario::{PathSet, PgdKnobs};
use crate::{CMatrix, CVector, RMatrix};

const GRAD_EPS: f64 = 1e-12;

/// `F(t)` for fixed lifted beamformers, `Q`, `ξ` and `ρ`.
#[derive(Debug, Clone, Copy)]
pub struct PositionObjective<'a> {
    pub lifted: &'a [CMatrix],
    pub q: &'a RMatrix,
    pub xi: &'a RMatrix,
    pub rho: f64,
    pub users: &'a [PathSet],
    pub target_angle: f64,
    pub wavelength: f64,
}

impl PositionObjective<'_> {
    pub fn value(&self, t: &[f64]) -> f64 {
        let channels = synthesize_channels(self.users, t, self.wavelength);
        al_objective_lifted(
            t,
            self.lifted,
            Penalty {
                q: self.q,
                xi: self.xi,
                rho: self.rho,
            },
            self.target_angle,
            self.wavelength,
            &channels,
        )
    }

    /// Analytic gradient `∂F/∂t`.
    pub fn gradient(&self, t: &[f64]) -> Vec<f64> {
        let n = t.len();
        let mut grad = vec![0.0; n];
        let j = Complex64::new(0.0, 1.0);

        // beampattern term
        let phi_s = spatial_frequency(self.target_angle, self.wavelength);
        if phi_s != 0.0 && !self.lifted.is_empty() {
            let a = CVector::from_iterator(n, t.iter().map(|&tp| Complex64::from_polar(1.0, -phi_s * tp)));
            let mut rx = CMatrix::zeros(n, n);
            for w in self.lifted {
                rx += w;
            }
            let ra = &rx * &a;
            for p in 0..n {
                let da = -j * phi_s * a[p];
                grad[p] -= 2.0 * (da.conj() * ra[p]).re;
            }
        }

        // penalty term; exponentials are shared between h and ∂h
        for (k, paths) in self.users.iter().enumerate() {
            let mut h = CVector::zeros(n);
            let mut dh = CVector::zeros(n);
            for (gain, &theta) in paths.gains.iter().zip(&paths.angles) {
                let phi = spatial_frequency(theta, self.wavelength);
                for p in 0..n {
                    let term = gain * Complex64::from_polar(1.0, -phi * t[p]);
                    h[p] += term;
                    dh[p] += -j * phi * term;
                }
            }
            let mut weighted = CVector::zeros(n);
            for (i, w) in self.lifted.iter().enumerate() {
                let wh = w * &h;
                let b = h.dotc(&wh).re;
                let a_ki = self.q[(k, i)] + self.rho * self.xi[(k, i)];
                let coef = (b - a_ki) / self.rho;
                weighted.axpy(Complex64::new(coef, 0.0), &wh, Complex64::new(1.0, 0.0));
            }
            for p in 0..n {
                grad[p] += 2.0 * (dh[p].conj() * weighted[p]).re;
            }
        }
        grad
    }
}

/// Why [`run_pgd`] stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgdTermination {
    ZeroGradient,
    SmallStep,
    LineSearchFailed,
    MaxIterations,
}

/// History of one PGD run.
#[derive(Debug, Clone, PartialEq)]
pub struct PgdTrace {
    /// Gradient evaluations performed.
    pub iterations: usize,
    /// `F` at the start and after every accepted step.
    pub values: Vec<f64>,
    /// Accepted step sizes `γᵈ`.
    pub steps: Vec<f64>,
    /// `‖∇F(tᵈ)‖²` at the iterate each accepted step started from.
    pub grad_norms_sq: Vec<f64>,
    pub termination: PgdTermination,
}

/// Projected gradient descent with backtracking.
///
/// Each iteration tries `γ = step0` (or `0.1·λ/(‖∇F‖+ε)` when unset),
/// shrinking by `shrink` until
/// `F(Proj(t − γ∇F)) ≤ F(t) − c·γ·‖∇F(t)‖²`; after `max_backtracks` failed
/// shrinks the step is rejected and the run stops. The run also stops once
/// an accepted move is below `1e-6·λ` in max-norm.
pub fn run_pgd(
    t0: &Positions,
    objective: &PositionObjective<'_>,
    aperture: f64,
    knobs: &PgdKnobs,
) -> (Positions, PgdTrace) {
    let lambda = objective.wavelength;
    let mut t = t0.clone();
    let mut f = objective.value(&t);
    let mut trace = PgdTrace {
        iterations: 0,
        values: vec![f],
        steps: Vec::new(),
        grad_norms_sq: Vec::new(),
        termination: PgdTermination::MaxIterations,
    };
    for _ in 0..knobs.max_iters {
        trace.iterations += 1;
        let g = objective.gradient(&t);
        let gn2: f64 = g.iter().map(|x| x * x).sum();
        if gn2 == 0.0 || !gn2.is_finite() {
            trace.termination = PgdTermination::ZeroGradient;
            break;
        }
        let mut gamma = knobs
            .step0
            .unwrap_or_else(|| 0.1 * lambda / (gn2.sqrt() + GRAD_EPS));
        let mut accepted = None;
        for _ in 0..=knobs.max_backtracks {
            let trial: Vec<f64> = t.iter().zip(&g).map(|(x, d)| x - gamma * d).collect();
            let cand = project(&trial, aperture, lambda);
            let fc = objective.value(&cand);
            if fc <= f - knobs.armijo_c * gamma * gn2 {
                accepted = Some((cand, fc));
                break;
            }
            gamma *= knobs.shrink;
        }
        let Some((cand, fc)) = accepted else {
            trace.termination = PgdTermination::LineSearchFailed;
            break;
        };
        let moved = t
            .iter()
            .zip(cand.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        t = cand;
        f = fc;
        trace.values.push(f);
        trace.steps.push(gamma);
        trace.grad_norms_sq.push(gn2);
        if moved < 1e-6 * lambda {
            trace.termination = PgdTermination::SmallStep;
            break;
        }
    }
    (t, trace)
}
