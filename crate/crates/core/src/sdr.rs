//! Semidefinite-relaxation beamforming subproblems.
//!
//! Each lifted covariance `W_i = X_i + jY_i` (Hermitian, `N×N`) is the
//! image of a free real PSD matrix `S_i` of order `2N`:
//!
//! ```text
//! X = (S₁₁ + S₂₂)/2,   Y = (S₂₁ − S₁₂)/2
//! ```
//!
//! Averaging `S` with `JSJᵀ` (`J = [[0, −I], [I, 0]]`) gives the embedding
//! `[[X, −Y], [Y, X]]`, so the image is exactly the Hermitian PSD cone. The
//! embedding itself is not used as the cone: its paired eigenvalues make
//! interior-point iterates stall far from the optimum.
//!
//! Two problems are modeled:
//!
//! * [`solve_inner_sdp`]: the penalized block over `(W, Q)` at fixed
//!   positions;
//! * [`solve_fixed_position_sdp`]: the exact lifted problem at fixed
//!   positions (maximize the beampattern gain under SINR and power
//!   constraints), used by the baselines and as the final polish.

use std::f64::consts::FRAC_1_SQRT_2;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use crate::channel::{
    al_objective_lifted, coupling_v_lifted, quadratic_form, steering_vector, Beamformer, Penalty,
};
use crate::error::SdpError;
use crate::{CMatrix, CVector, RMatrix};

/// Solver accuracy knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpSettings {
    pub tol: f64,
    pub max_iter: u32,
    /// Threshold on `λ₂/λ₁` for the rank-one certificate.
    pub rank_tol: f64,
}

impl Default for SdpSettings {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 200,
            rank_tol: 1e-6,
        }
    }
}

/// One lifted `N×N` Hermitian block, stored as `svec(S)` of a free real
/// PSD matrix `S` of order `2N` (upper triangle, column-major, off-diagonals
/// scaled by √2), with
///
/// ```text
/// X = (S₁₁ + S₂₂)/2,   Y = (S₂₁ − S₁₂)/2,   W = X + jY.
/// ```
#[derive(Debug, Clone, Copy)]
struct HermitianBlock {
    n: usize,
    offset: usize,
}

impl HermitianBlock {
    fn len(n: usize) -> usize {
        n * (2 * n + 1)
    }

    /// Variable index and svec scale of `S_rc`.
    fn s_entry(&self, r: usize, c: usize) -> (usize, f64) {
        let (r, c) = if r <= c { (r, c) } else { (c, r) };
        let scale = if r == c { 1.0 } else { FRAC_1_SQRT_2 };
        (self.offset + c * (c + 1) / 2 + r, scale)
    }

    /// `X_pq` as a combination of variables.
    fn re(&self, p: usize, q: usize) -> [(usize, f64); 2] {
        let n = self.n;
        let (a, sa) = self.s_entry(p, q);
        let (b, sb) = self.s_entry(p + n, q + n);
        [(a, 0.5 * sa), (b, 0.5 * sb)]
    }

    /// `Y_pq` as a combination of variables, `p ≠ q`.
    fn im(&self, p: usize, q: usize) -> [(usize, f64); 2] {
        let n = self.n;
        let (a, sa) = self.s_entry(p + n, q);
        let (b, sb) = self.s_entry(p, q + n);
        [(a, 0.5 * sa), (b, -0.5 * sb)]
    }

    /// Coefficients of `Re(vᴴ W v)` as `(variable, weight)` pairs.
    fn quadratic_coeffs(&self, v: &CVector) -> Vec<(usize, f64)> {
        let mut out = Vec::with_capacity(2 * self.n * self.n);
        for q in 0..self.n {
            for (j, w) in self.re(q, q) {
                out.push((j, w * v[q].norm_sqr()));
            }
            for p in 0..q {
                let c = v[p].conj() * v[q];
                for (j, w) in self.re(p, q) {
                    out.push((j, 2.0 * c.re * w));
                }
                for (j, w) in self.im(p, q) {
                    out.push((j, -2.0 * c.im * w));
                }
            }
        }
        out
    }

    fn trace_coeffs(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.n).flat_map(move |p| self.re(p, p))
    }

    fn extract(&self, x: &[f64]) -> CMatrix {
        let eval = |terms: [(usize, f64); 2]| terms.iter().map(|&(j, w)| w * x[j]).sum::<f64>();
        let n = self.n;
        let mut w = CMatrix::zeros(n, n);
        for q in 0..n {
            w[(q, q)] = Complex64::new(eval(self.re(q, q)), 0.0);
            for p in 0..q {
                let z = Complex64::new(eval(self.re(p, q)), eval(self.im(p, q)));
                w[(p, q)] = z;
                w[(q, p)] = z.conj();
            }
        }
        w
    }
}

/// Sparse constraint rows `A z + s = b` assembled cone by cone.
#[derive(Default)]
struct ConicModel {
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    b: Vec<f64>,
    cones: Vec<SupportedConeT<f64>>,
}

impl ConicModel {
    fn push_row(&mut self, coeffs: impl IntoIterator<Item = (usize, f64)>, rhs: f64) {
        let row = self.b.len();
        for (col, v) in coeffs {
            if v != 0.0 {
                self.rows.push(row);
                self.cols.push(col);
                self.vals.push(v);
            }
        }
        self.b.push(rhs);
    }

    fn nonneg_rows(&mut self, rows: Vec<(Vec<(usize, f64)>, f64)>) {
        let count = rows.len();
        for (c, r) in rows {
            self.push_row(c, r);
        }
        if count > 0 {
            self.cones.push(SupportedConeT::NonnegativeConeT(count));
        }
    }

    /// `svec(S) ∈ PSD`, written as `s = 0 − (−I) z`.
    fn psd_block(&mut self, block: &HermitianBlock) {
        let base = self.b.len();
        let len = HermitianBlock::len(block.n);
        for e in 0..len {
            self.rows.push(base + e);
            self.cols.push(block.offset + e);
            self.vals.push(-1.0);
        }
        self.b.extend(std::iter::repeat_n(0.0, len));
        self.cones.push(SupportedConeT::PSDTriangleConeT(2 * block.n));
    }

    fn solve(
        self,
        num_vars: usize,
        p_upper: &[(usize, usize, f64)],
        q: &[f64],
        settings: &SdpSettings,
    ) -> Result<(SolverStatus, Vec<f64>, f64, f64), SdpError> {
        let m = self.b.len();
        let a = CscMatrix::new_from_triplets(m, num_vars, self.rows, self.cols, self.vals);
        let mut pr = Vec::with_capacity(p_upper.len());
        let mut pc = Vec::with_capacity(p_upper.len());
        let mut pv = Vec::with_capacity(p_upper.len());
        for &(r, c, v) in p_upper {
            debug_assert!(r <= c);
            pr.push(r);
            pc.push(c);
            pv.push(v);
        }
        let p = CscMatrix::new_from_triplets(num_vars, num_vars, pr, pc, pv);
        let opts = DefaultSettingsBuilder::default()
            .verbose(false)
            .max_iter(settings.max_iter)
            .tol_feas(settings.tol)
            .tol_gap_abs(settings.tol)
            .tol_gap_rel(settings.tol)
            .build()
            .map_err(|e| SdpError::Setup(e.to_string()))?;
        let mut solver = DefaultSolver::new(&p, q, &a, &self.b, &self.cones, opts)
            .map_err(|e| SdpError::Setup(format!("{e:?}")))?;
        solver.solve();
        let sol = &solver.solution;
        Ok((sol.status, sol.x.clone(), sol.r_prim, sol.r_dual))
    }
}

/// Largest scaled residual at which a stalled fixed-position iterate is
/// still accepted (its SINRs are audited afterwards).
const SALVAGE_RESIDUAL: f64 = 1e-5;
/// Same for the penalized block, whose iterate only seeds [`refine_inner`].
const SALVAGE_RESIDUAL_INNER: f64 = 1e-3;

/// Interior-point methods stall near the rank-one optimum of these SDPs
/// (the step length collapses around `μ ≈ 1e-8`), so a stalled iterate with
/// small residuals is kept rather than discarded.
fn status_ok(status: SolverStatus, r_prim: f64, r_dual: f64, salvage: f64) -> bool {
    match status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => true,
        SolverStatus::NumericalError
        | SolverStatus::InsufficientProgress
        | SolverStatus::MaxIterations => r_prim <= salvage && r_dual <= salvage,
        _ => false,
    }
}

fn status_infeasible(status: SolverStatus) -> bool {
    matches!(
        status,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible
    )
}

/// Principal component of a lifted covariance together with its rank-one
/// certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOne {
    /// `√λ₁·u₁`.
    pub w: CVector,
    /// `λ₂/λ₁` (0 for a 1×1 matrix, `NaN` for a zero matrix).
    pub ratio: f64,
    /// `ratio ≤ tol`.
    pub certified: bool,
    /// The matrix had no positive eigenvalue.
    pub zero: bool,
}

/// Eigen-decomposes `W` and returns its principal component; the
/// certificate flag is raised when `λ₂/λ₁` exceeds `tol`.
pub fn extract_rank_one(w: &CMatrix, tol: f64) -> RankOne {
    let n = w.nrows();
    let herm = (w + w.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let l1 = eig.eigenvalues[order[0]];
    if !(l1 > 1e-12) {
        return RankOne {
            w: CVector::zeros(n),
            ratio: f64::NAN,
            certified: false,
            zero: true,
        };
    }
    let l2 = if n > 1 { eig.eigenvalues[order[1]].max(0.0) } else { 0.0 };
    let ratio = l2 / l1;
    let u = eig.eigenvectors.column(order[0]);
    RankOne {
        w: u * Complex64::new(l1.sqrt(), 0.0),
        ratio,
        certified: ratio <= tol,
        zero: false,
    }
}

/// Inputs of the penalized `(W, Q)` block.
#[derive(Debug, Clone, Copy)]
pub struct InnerSdpInput<'a> {
    pub positions: &'a [f64],
    pub channels: &'a [CVector],
    pub xi: &'a RMatrix,
    pub rho: f64,
    pub sinr_targets: &'a [f64],
    pub noise: f64,
    pub power: f64,
    pub target_angle: f64,
    pub wavelength: f64,
}

/// Optimum of the penalized block.
#[derive(Debug, Clone)]
pub struct InnerSdpSolution {
    pub lifted: Vec<CMatrix>,
    pub q: RMatrix,
    /// `F(W, Q, t)` re-evaluated from the returned matrices.
    pub objective: f64,
    pub status: SolverStatus,
    /// Principal components (columns of the beamforming matrix).
    pub components: Vec<RankOne>,
}

impl InnerSdpSolution {
    pub fn rank_ratios(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.ratio).collect()
    }

    pub fn all_certified(&self) -> bool {
        self.components.iter().all(|c| c.certified)
    }

    /// Beamforming matrix assembled from the principal components.
    pub fn beamformer(&self) -> Beamformer {
        let n = self.lifted.first().map_or(0, |w| w.nrows());
        let mut w = CMatrix::zeros(n, self.components.len());
        for (i, c) in self.components.iter().enumerate() {
            w.set_column(i, &c.w);
        }
        Beamformer {
            w,
            lifted: Some(self.lifted.clone()),
        }
    }
}

/// Row normal `c_k` of the SINR halfspace `c_kᵀ Q_{k·} ≥ σ²Γ_k`:
/// `+1` at `k`, `−Γ_k` elsewhere.
fn sinr_normal(k: usize, users: usize, gamma: f64) -> Vec<f64> {
    (0..users).map(|i| if i == k { 1.0 } else { -gamma }).collect()
}

/// `argmin_Q ‖Q − V + ρξ‖²` subject to the per-row SINR halfspaces: each
/// row of `V − ρξ` projected onto its halfspace.
pub fn optimal_q(v: &RMatrix, xi: &RMatrix, rho: f64, sinr_targets: &[f64], noise: f64) -> RMatrix {
    let k = v.nrows();
    let mut q = v - xi * rho;
    for row in 0..k {
        let c = sinr_normal(row, k, sinr_targets[row]);
        let cu: f64 = (0..k).map(|i| c[i] * q[(row, i)]).sum();
        let beta = noise * sinr_targets[row];
        if cu < beta {
            let step = (beta - cu) / c.iter().map(|x| x * x).sum::<f64>();
            for i in 0..k {
                q[(row, i)] += step * c[i];
            }
        }
    }
    q
}

/// Minimizes `−aᴴ(Σ W_k)a + (1/2ρ)‖Q − V(W) + ρξ‖²` over PSD `W_k` with
/// `Σ tr W_k ≤ P` and `Q_kk − Γ_k Σ_{i≠k} Q_ki ≥ σ²Γ_k`.
///
/// `Q` is minimized out in closed form ([`optimal_q`]): the residual of row
/// `k` lies along `c_k`, so the penalty reduces to
/// `Σ_k max(0, σ²Γ_k − c_kᵀ(V_{k·} − ρξ_{k·}))² / (2ρ‖c_k‖²)`. Each hinge is
/// an epigraph variable `f_k ≥ 0` with
/// `c_kᵀV_{k·}(W) + √ρ‖c_k‖·f_k ≥ σ²Γ_k + ρc_kᵀξ_{k·}` and cost `f_k²/2`.
pub fn solve_inner_sdp(
    input: &InnerSdpInput<'_>,
    settings: &SdpSettings,
) -> Result<InnerSdpSolution, SdpError> {
    let n = input.positions.len();
    let k = input.channels.len();
    assert!(input.rho > 0.0, "penalty must be positive");
    assert_eq!(input.sinr_targets.len(), k);
    let blen = HermitianBlock::len(n);
    let blocks: Vec<HermitianBlock> = (0..k)
        .map(|i| HermitianBlock { n, offset: i * blen })
        .collect();
    let f_off = k * blen;
    let num_vars = f_off + k;

    let a = steering_vector(input.target_angle, input.positions, input.wavelength);
    let mut cost = vec![0.0; num_vars];
    for b in &blocks {
        for (col, v) in b.quadratic_coeffs(&a) {
            cost[col] -= v;
        }
    }
    let p_upper: Vec<(usize, usize, f64)> = (0..k).map(|j| (f_off + j, f_off + j, 1.0)).collect();

    let sqrt_rho = input.rho.sqrt();
    let mut model = ConicModel::default();
    let mut ineq: Vec<(Vec<(usize, f64)>, f64)> = Vec::with_capacity(2 * k + 1);
    ineq.push((blocks.iter().flat_map(|b| b.trace_coeffs()).collect(), input.power));
    for row in 0..k {
        let g = input.sinr_targets[row];
        let c = sinr_normal(row, k, g);
        let c_norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        let shift: f64 = (0..k).map(|i| c[i] * input.xi[(row, i)]).sum::<f64>() * input.rho;
        let h = &input.channels[row];
        let mut coeffs = vec![(f_off + row, -sqrt_rho * c_norm)];
        for (i, b) in blocks.iter().enumerate() {
            coeffs.extend(b.quadratic_coeffs(h).into_iter().map(|(j, v)| (j, -c[i] * v)));
        }
        ineq.push((coeffs, -(input.noise * g + shift)));
        ineq.push((vec![(f_off + row, -1.0)], 0.0));
    }
    model.nonneg_rows(ineq);
    for b in &blocks {
        model.psd_block(b);
    }

    let (status, x, r_prim, r_dual) = model.solve(num_vars, &p_upper, &cost, settings)?;
    if status_infeasible(status) {
        return Err(SdpError::UnexpectedInfeasible(format!("{status:?}")));
    }
    if !status_ok(status, r_prim, r_dual, SALVAGE_RESIDUAL_INNER) {
        return Err(SdpError::NotConverged {
            status: format!("{status:?}"),
            r_prim,
            r_dual,
        });
    }
    let mut lifted: Vec<CMatrix> = blocks.iter().map(|b| b.extract(&x)).collect();
    refine_inner(input, &mut lifted, REFINE_ITERS);
    let v = coupling_v_lifted(input.channels, &lifted);
    let q = optimal_q(&v, input.xi, input.rho, input.sinr_targets, input.noise);
    let objective = al_objective_lifted(
        input.positions,
        &lifted,
        Penalty {
            q: &q,
            xi: input.xi,
            rho: input.rho,
        },
        input.target_angle,
        input.wavelength,
        input.channels,
    );
    let components = lifted
        .iter()
        .map(|w| extract_rank_one(w, settings.rank_tol))
        .collect();
    Ok(InnerSdpSolution {
        lifted,
        q,
        objective,
        status,
        components,
    })
}

/// Projected-gradient passes applied to the interior-point iterate.
pub const REFINE_ITERS: usize = 50;

/// Euclidean projection onto `{W_k ⪰ 0, Σ_k tr W_k ≤ P}`: eigenvalues of
/// every block are shifted by a common `τ ≥ 0` and clipped at zero.
pub fn project_psd_budget(blocks: &mut [CMatrix], budget: f64) {
    let eigs: Vec<SymmetricEigen<Complex64, nalgebra::Dyn>> = blocks
        .iter()
        .map(|w| SymmetricEigen::new((w + w.adjoint()) * Complex64::new(0.5, 0.0)))
        .collect();
    let mut all: Vec<f64> = eigs
        .iter()
        .flat_map(|e| e.eigenvalues.iter().copied())
        .filter(|&l| l > 0.0)
        .collect();
    let mut tau = 0.0;
    if all.iter().sum::<f64>() > budget {
        // Σ max(λ − τ, 0) = P, scanning breakpoints from the top
        all.sort_by(|a, b| b.total_cmp(a));
        let mut prefix = 0.0;
        for (i, &l) in all.iter().enumerate() {
            prefix += l;
            let cand = (prefix - budget) / (i + 1) as f64;
            let next = all.get(i + 1).copied().unwrap_or(0.0);
            if cand >= next {
                tau = cand;
                break;
            }
        }
    }
    for (w, e) in blocks.iter_mut().zip(eigs) {
        let u = &e.eigenvectors;
        let d = e.eigenvalues.map(|l| Complex64::new((l - tau).max(0.0), 0.0));
        *w = u * CMatrix::from_diagonal(&d) * u.adjoint();
    }
}

/// Reduced inner objective `F(W)` with `Q` minimized out, and its
/// Euclidean gradient blocks.
fn inner_value_grad(input: &InnerSdpInput<'_>, lifted: &[CMatrix]) -> (f64, Vec<CMatrix>) {
    let k = lifted.len();
    let a = steering_vector(input.target_angle, input.positions, input.wavelength);
    let aa = &a * a.adjoint();
    let mut f = 0.0;
    let mut grads = vec![-aa.clone(); k];
    for w in lifted {
        f -= quadratic_form(&a, w);
    }
    for (row, h) in input.channels.iter().enumerate() {
        let g = input.sinr_targets[row];
        let c = sinr_normal(row, k, g);
        let c2: f64 = c.iter().map(|x| x * x).sum();
        let shift: f64 = (0..k).map(|i| c[i] * input.xi[(row, i)]).sum::<f64>() * input.rho;
        let ell: f64 = (0..k).map(|i| c[i] * quadratic_form(h, &lifted[i])).sum();
        let hinge = (input.noise * g + shift - ell).max(0.0);
        if hinge > 0.0 {
            f += hinge * hinge / (2.0 * input.rho * c2);
            let hh = h * h.adjoint();
            let coef = hinge / (input.rho * c2);
            for i in 0..k {
                grads[i] -= &hh * Complex64::new(coef * c[i], 0.0);
            }
        }
    }
    (f, grads)
}

/// Projected gradient with step `1/L`, `L = Σ_k ‖h_k‖⁴/ρ`; monotone in `F`.
fn refine_inner(input: &InnerSdpInput<'_>, lifted: &mut Vec<CMatrix>, iters: usize) {
    let lip: f64 = input.channels.iter().map(|h| h.norm_squared().powi(2)).sum::<f64>() / input.rho;
    if !(lip > 0.0) || lifted.is_empty() {
        return;
    }
    let step = Complex64::new(1.0 / lip, 0.0);
    let (mut f, mut grads) = inner_value_grad(input, lifted);
    for _ in 0..iters {
        let mut cand: Vec<CMatrix> = lifted.iter().zip(&grads).map(|(w, g)| w - g * step).collect();
        project_psd_budget(&mut cand, input.power);
        let (fc, gc) = inner_value_grad(input, &cand);
        if !(fc <= f) {
            break;
        }
        let done = f - fc <= 1e-15 * f.abs().max(1.0);
        *lifted = cand;
        f = fc;
        grads = gc;
        if done {
            break;
        }
    }
}

/// Inputs of the exact fixed-position problem.
#[derive(Debug, Clone, Copy)]
pub struct FixedSdpInput<'a> {
    pub positions: &'a [f64],
    pub channels: &'a [CVector],
    pub sinr_targets: &'a [f64],
    pub noise: f64,
    pub power: f64,
    pub target_angle: f64,
    pub wavelength: f64,
}

/// Solution of the exact fixed-position problem.
#[derive(Debug, Clone)]
pub struct FixedSdpSolution {
    pub beamformer: Beamformer,
    /// `aᴴ(Σ W_k)a` of the lifted optimum (an upper bound on any
    /// beamformer at these positions).
    pub lifted_gain: f64,
    pub components: Vec<RankOne>,
    pub status: SolverStatus,
}

/// Outcome of [`solve_fixed_position_sdp`]; infeasibility is a normal
/// result (the SINR targets cannot be met at these positions and power).
#[derive(Debug, Clone)]
pub enum FixedSdpOutcome {
    Solved(FixedSdpSolution),
    /// `required_power` is the least total power meeting every target
    /// (`+∞` when no power suffices), or a lower bound on it.
    Infeasible { required_power: f64 },
}

/// Iteration cap of [`min_sum_power`].
const MIN_POWER_ITERS: usize = 20_000;

/// Least total transmit power meeting every SINR target at these channels,
/// via the virtual-uplink fixed point
/// `q_k ← Γ_k / (h_kᴴ(σ²I + Σ_{j≠k} q_j h_j h_jᴴ)⁻¹h_k)`.
///
/// Started from `q = 0` the iterates increase monotonically to the minimum,
/// and the summed uplink power equals the downlink minimum. Returns `Err`
/// with the current lower bound once it exceeds `cap`; a run that hits the
/// iteration cap returns its (lower-bound) estimate as `Ok`.
pub fn min_sum_power(
    channels: &[CVector],
    sinr_targets: &[f64],
    noise: f64,
    cap: f64,
) -> Result<f64, f64> {
    let k = channels.len();
    if k == 0 {
        return Ok(0.0);
    }
    let n = channels[0].len();
    let mut q = vec![0.0; k];
    for _ in 0..MIN_POWER_ITERS {
        let mut next = vec![0.0; k];
        for user in 0..k {
            let mut m = CMatrix::from_diagonal_element(n, n, Complex64::new(noise, 0.0));
            for (j, h) in channels.iter().enumerate() {
                if j != user && q[j] > 0.0 {
                    m += h * h.adjoint() * Complex64::new(q[j], 0.0);
                }
            }
            let h = &channels[user];
            let Some(chol) = m.cholesky() else {
                return Err(f64::INFINITY);
            };
            let denom = h.dotc(&chol.solve(h)).re;
            next[user] = if denom > 0.0 {
                sinr_targets[user] / denom
            } else {
                f64::INFINITY
            };
        }
        let total: f64 = next.iter().sum();
        if !(total <= cap) {
            return Err(total);
        }
        let change = next
            .iter()
            .zip(&q)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        q = next;
        if change <= 1e-13 * total.max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok(q.iter().sum())
}

/// Maximizes `aᴴ(Σ W_k)a` subject to lifted SINR constraints
/// `h_kᴴW_k h_k ≥ Γ_k(Σ_{i≠k} h_kᴴW_i h_k + σ²)` and the power budget.
///
/// Certified rank-one blocks are returned as their principal component.
/// Otherwise the channel-matched vector `W_k h_k / √(h_kᴴW_k h_k)` is used,
/// which keeps the desired-signal power and can only reduce interference,
/// so the extracted beamformer stays SINR-feasible.
pub fn solve_fixed_position_sdp(
    input: &FixedSdpInput<'_>,
    settings: &SdpSettings,
) -> Result<FixedSdpOutcome, SdpError> {
    let n = input.positions.len();
    let k = input.channels.len();
    assert_eq!(input.sinr_targets.len(), k);
    let required = match min_sum_power(input.channels, input.sinr_targets, input.noise, input.power) {
        Ok(p) => p,
        Err(required_power) => return Ok(FixedSdpOutcome::Infeasible { required_power }),
    };
    let blen = HermitianBlock::len(n);
    let blocks: Vec<HermitianBlock> = (0..k)
        .map(|i| HermitianBlock { n, offset: i * blen })
        .collect();
    let num_vars = k * blen;

    let a = steering_vector(input.target_angle, input.positions, input.wavelength);
    let mut cost = vec![0.0; num_vars];
    for b in &blocks {
        for (col, v) in b.quadratic_coeffs(&a) {
            cost[col] -= v;
        }
    }
    let mut model = ConicModel::default();
    let mut ineq: Vec<(Vec<(usize, f64)>, f64)> = Vec::with_capacity(k + 1);
    ineq.push((blocks.iter().flat_map(|b| b.trace_coeffs()).collect(), input.power));
    for user in 0..k {
        let g = input.sinr_targets[user];
        let h = &input.channels[user];
        let mut c: Vec<(usize, f64)> = blocks[user]
            .quadratic_coeffs(h)
            .into_iter()
            .map(|(j, v)| (j, -v))
            .collect();
        for (i, b) in blocks.iter().enumerate() {
            if i != user {
                c.extend(b.quadratic_coeffs(h).into_iter().map(|(j, v)| (j, g * v)));
            }
        }
        ineq.push((c, -g * input.noise));
    }
    model.nonneg_rows(ineq);
    for b in &blocks {
        model.psd_block(b);
    }

    let (status, x, r_prim, r_dual) = model.solve(num_vars, &[], &cost, settings)?;
    if status_infeasible(status) {
        return Ok(FixedSdpOutcome::Infeasible {
            required_power: required,
        });
    }
    if !status_ok(status, r_prim, r_dual, SALVAGE_RESIDUAL) {
        return Err(SdpError::NotConverged {
            status: format!("{status:?}"),
            r_prim,
            r_dual,
        });
    }
    let lifted: Vec<CMatrix> = blocks.iter().map(|b| b.extract(&x)).collect();
    let lifted_gain = lifted.iter().map(|w| quadratic_form(&a, w)).sum();
    let components: Vec<RankOne> = lifted
        .iter()
        .map(|w| extract_rank_one(w, settings.rank_tol))
        .collect();
    let mut w = CMatrix::zeros(n, k);
    for (i, comp) in components.iter().enumerate() {
        if comp.certified || comp.zero {
            w.set_column(i, &comp.w);
        } else {
            w.set_column(i, &channel_matched(&lifted[i], &input.channels[i]));
        }
    }
    Ok(FixedSdpOutcome::Solved(FixedSdpSolution {
        beamformer: Beamformer {
            w,
            lifted: Some(lifted),
        },
        lifted_gain,
        components,
        status,
    }))
}

/// `W h / √(hᴴ W h)`: a rank-one `ŵ` with `ŵŵᴴ ⪯ W` and
/// `|hᴴŵ|² = hᴴ W h`.
pub fn channel_matched(w: &CMatrix, h: &CVector) -> CVector {
    let wh = w * h;
    let s = quadratic_form(h, w);
    if s > 0.0 {
        wh / Complex64::new(s.sqrt(), 0.0)
    } else {
        CVector::zeros(h.len())
    }
}
