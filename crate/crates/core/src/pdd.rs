//! Penalty dual decomposition driver.
//!
//! Inner loop: block coordinate descent alternating the penalized SDP over
//! `(W, Q)` with PGD over `t`, until the relative change of `F` drops below
//! `δ_in` or `I_in^max` passes are done. Outer loop:
//! `ξ ← ξ + (Q − V)/ρ`, `ρ ← c₀ρ`, until `‖Q − V‖_∞ < δ_out` or
//! `I_out^max` iterations. The converged geometry is then polished with
//! the exact fixed-position SDP and audited against the true SINRs; the
//! starting geometry is polished too and wins if it is feasible and better.

use std::time::{Duration, Instant};

use crate::channel::{
    al_objective_lifted, beampattern_gain, coupling_v_lifted, sinr_all, synthesize_channels,
    violation, Beamformer, Penalty,
};
use crate::error::SdpError;
use crate::geometry::{initial_positions, sample_random, Positions};
use crate::pgd::{run_pgd, PositionObjective};
use crate::scenario::{Instance, PddKnobs, PgdKnobs, ScenarioConfig};
use crate::sdr::{
    min_sum_power, solve_fixed_position_sdp, solve_inner_sdp, FixedSdpInput, FixedSdpOutcome, InnerSdpInput,
    SdpSettings,
};
use crate::{to_db, CMatrix, RMatrix};

/// Guard on the denominator of the inner relative-change test.
pub const OBJECTIVE_EPS: f64 = 1e-12;
/// Slack (dB) tolerated by the SINR audit.
pub const SINR_AUDIT_TOL_DB: f64 = 0.01;

/// Options of one joint optimization run.
#[derive(Debug, Clone)]
pub struct PddOptions {
    pub knobs: PddKnobs,
    pub pgd: PgdKnobs,
    pub sdp: SdpSettings,
    /// `false` freezes the positions (the inner loop then only re-solves the
    /// SDP block).
    pub optimize_positions: bool,
    pub record_trace: bool,
}

impl PddOptions {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self {
            knobs: cfg.pdd.clone(),
            pgd: cfg.pgd.clone(),
            sdp: SdpSettings {
                tol: cfg.sdp_tol,
                rank_tol: cfg.rank_tol,
                ..SdpSettings::default()
            },
            optimize_positions: true,
            record_trace: false,
        }
    }
}

/// One inner pass, as written to `trace.csv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub outer: usize,
    pub inner: usize,
    pub objective: f64,
    /// `‖Q − V‖_∞` after the pass.
    pub violation: f64,
    pub rho: f64,
}

/// Iterate of the double loop.
#[derive(Debug, Clone)]
pub struct PddState {
    pub lifted: Option<Vec<CMatrix>>,
    pub q: Option<RMatrix>,
    pub positions: Positions,
    pub xi: RMatrix,
    pub rho: f64,
    pub outer_index: usize,
    /// Inner passes of the most recent inner loop.
    pub inner_index: usize,
    pub inner_total: usize,
    /// `‖Q − V‖_∞` at the end of every outer iteration.
    pub violation_history: Vec<f64>,
    /// `F` after every inner pass.
    pub objective_history: Vec<f64>,
    /// Inner SDP blocks whose rank-one certificate failed.
    pub certificate_failures: usize,
    pub trace: Vec<TraceRecord>,
}

impl PddState {
    pub fn new(positions: Positions, num_users: usize, rho0: f64) -> Self {
        Self {
            lifted: None,
            q: None,
            positions,
            xi: RMatrix::zeros(num_users, num_users),
            rho: rho0,
            outer_index: 0,
            inner_index: 0,
            inner_total: 0,
            violation_history: Vec::new(),
            objective_history: Vec::new(),
            certificate_failures: 0,
            trace: Vec::new(),
        }
    }

    /// `F` of the current iterate under the current `(ξ, ρ)`.
    pub fn objective(&self, inst: &Instance) -> Option<f64> {
        let (lifted, q) = (self.lifted.as_ref()?, self.q.as_ref()?);
        let channels = synthesize_channels(&inst.users, &self.positions, inst.wavelength);
        Some(al_objective_lifted(
            &self.positions,
            lifted,
            Penalty {
                q,
                xi: &self.xi,
                rho: self.rho,
            },
            inst.target_angle,
            inst.wavelength,
            &channels,
        ))
    }

    /// `‖Q − V(t, W)‖_∞` of the current iterate.
    pub fn violation(&self, inst: &Instance) -> Option<f64> {
        let (lifted, q) = (self.lifted.as_ref()?, self.q.as_ref()?);
        let channels = synthesize_channels(&inst.users, &self.positions, inst.wavelength);
        Some(violation(q, &coupling_v_lifted(&channels, lifted)))
    }
}

/// Inner BCD loop at fixed `(ξ, ρ)`.
pub fn run_inner_bcd(
    state: &mut PddState,
    inst: &Instance,
    opts: &PddOptions,
) -> Result<(), SdpError> {
    let mut prev = state.objective(inst);
    state.inner_index = 0;
    loop {
        let channels = synthesize_channels(&inst.users, &state.positions, inst.wavelength);
        let sol = solve_inner_sdp(
            &InnerSdpInput {
                positions: &state.positions,
                channels: &channels,
                xi: &state.xi,
                rho: state.rho,
                sinr_targets: &inst.sinr_targets,
                noise: inst.noise,
                power: inst.power,
                target_angle: inst.target_angle,
                wavelength: inst.wavelength,
            },
            &opts.sdp,
        )?;
        state.certificate_failures += sol.components.iter().filter(|c| !c.certified).count();
        let mut f = sol.objective;
        if opts.optimize_positions {
            let obj = PositionObjective {
                lifted: &sol.lifted,
                q: &sol.q,
                xi: &state.xi,
                rho: state.rho,
                users: &inst.users,
                target_angle: inst.target_angle,
                wavelength: inst.wavelength,
            };
            let (t, trace) = run_pgd(&state.positions, &obj, inst.aperture, &opts.pgd);
            state.positions = t;
            f = *trace.values.last().expect("trace holds the start value");
        }
        state.lifted = Some(sol.lifted);
        state.q = Some(sol.q);
        state.inner_index += 1;
        state.inner_total += 1;
        state.objective_history.push(f);
        if opts.record_trace {
            state.trace.push(TraceRecord {
                outer: state.outer_index,
                inner: state.inner_index,
                objective: f,
                violation: state.violation(inst).unwrap_or(f64::NAN),
                rho: state.rho,
            });
        }
        let converged = prev.is_some_and(|p| {
            (f - p).abs() / f.abs().max(OBJECTIVE_EPS) < opts.knobs.delta_in
        });
        if converged || state.inner_index >= opts.knobs.max_inner {
            return Ok(());
        }
        prev = Some(f);
    }
}

/// Outcome class of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// Every user meets its target within [`SINR_AUDIT_TOL_DB`].
    Feasible,
    /// The exact SDP at the converged positions is infeasible.
    InfeasibleAtGeometry,
    /// A beamformer was produced but some SINR falls short.
    SinrShortfall,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Feasible => "ok",
            Verdict::InfeasibleAtGeometry => "infeasible",
            Verdict::SinrShortfall => "sinr_shortfall",
        }
    }
}

/// Why the outer loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// `‖Q − V‖_∞ < δ_out`.
    Converged,
    /// `I_out^max` outer iterations without reaching `δ_out`.
    MaxOuter,
    /// An inner SDP failed after at least one successful pass; the last good
    /// iterate was kept.
    SolverStall,
    /// Not an iterative run (baselines).
    NotApplicable,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::MaxOuter => "max_outer",
            Termination::SolverStall => "solver_stall",
            Termination::NotApplicable => "none",
        }
    }
}

/// Final report of a joint-optimization or baseline run.
#[derive(Debug, Clone)]
pub struct PddResult {
    pub positions: Positions,
    pub beamformer: Beamformer,
    /// Achieved SINR per user, dB.
    pub sinr_db: Vec<f64>,
    /// `10·log10(gain/P_t)` toward the target.
    pub gain_db: f64,
    pub violation: f64,
    pub verdict: Verdict,
    pub termination: Termination,
    pub outer_iters: usize,
    pub inner_iters_total: usize,
    pub wall_time: Duration,
    pub violation_history: Vec<f64>,
    pub objective_history: Vec<f64>,
    pub trace: Vec<TraceRecord>,
    pub certificate_failures: usize,
}

impl PddResult {
    pub fn feasible(&self) -> bool {
        self.verdict == Verdict::Feasible
    }

    /// `min_k` SINR slack in dB.
    pub fn min_slack_db(&self, inst: &Instance) -> f64 {
        audit_feasibility(&self.beamformer.w, &self.positions, inst)
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }
}

/// `SINR_k(dB) − Γ_k(dB)` for every user; `−∞` means no service.
pub fn audit_feasibility(w: &CMatrix, positions: &[f64], inst: &Instance) -> Vec<f64> {
    let channels = synthesize_channels(&inst.users, positions, inst.wavelength);
    sinr_all(&channels, w, inst.noise)
        .into_iter()
        .zip(&inst.sinr_targets)
        .map(|(s, g)| to_db(s) - to_db(*g))
        .collect()
}

/// Exact fixed-position solve plus SINR audit, packaged as a result.
pub fn evaluate_fixed(
    inst: &Instance,
    positions: Positions,
    sdp: &SdpSettings,
) -> Result<PddResult, SdpError> {
    let start = Instant::now();
    let mut res = polish(inst, positions, sdp, None)?;
    res.wall_time = start.elapsed();
    Ok(res)
}

fn polish(
    inst: &Instance,
    positions: Positions,
    sdp: &SdpSettings,
    fallback: Option<Beamformer>,
) -> Result<PddResult, SdpError> {
    let channels = synthesize_channels(&inst.users, &positions, inst.wavelength);
    let outcome = solve_fixed_position_sdp(
        &FixedSdpInput {
            positions: &positions,
            channels: &channels,
            sinr_targets: &inst.sinr_targets,
            noise: inst.noise,
            power: inst.power,
            target_angle: inst.target_angle,
            wavelength: inst.wavelength,
        },
        sdp,
    )?;
    let (beamformer, infeasible, failures) = match outcome {
        FixedSdpOutcome::Solved(sol) => {
            let failures = sol.components.iter().filter(|c| !c.certified).count();
            (sol.beamformer, false, failures)
        }
        FixedSdpOutcome::Infeasible { .. } => (
            fallback.unwrap_or_else(|| Beamformer::zeros(positions.len(), inst.num_users())),
            true,
            0,
        ),
    };
    let slack = audit_feasibility(&beamformer.w, &positions, inst);
    let verdict = if infeasible {
        Verdict::InfeasibleAtGeometry
    } else if slack.iter().all(|&s| s >= -SINR_AUDIT_TOL_DB) {
        Verdict::Feasible
    } else {
        Verdict::SinrShortfall
    };
    let gain = beampattern_gain(&positions, &beamformer.w, inst.target_angle, inst.wavelength);
    Ok(PddResult {
        sinr_db: sinr_all(&channels, &beamformer.w, inst.noise)
            .into_iter()
            .map(to_db)
            .collect(),
        gain_db: to_db(gain / inst.power),
        positions,
        beamformer,
        violation: 0.0,
        verdict,
        termination: Termination::NotApplicable,
        outer_iters: 0,
        inner_iters_total: 0,
        wall_time: Duration::ZERO,
        violation_history: Vec::new(),
        objective_history: Vec::new(),
        trace: Vec::new(),
        certificate_failures: failures,
    })
}

/// Runs the double loop from `start` and polishes the result.
pub fn run_pdd_from(
    inst: &Instance,
    start: Positions,
    opts: &PddOptions,
) -> Result<PddResult, SdpError> {
    let clock = Instant::now();
    let k = &opts.knobs;
    let mut state = PddState::new(start.clone(), inst.num_users(), k.rho0);
    let mut last_violation = f64::INFINITY;
    let mut termination = Termination::MaxOuter;
    while state.outer_index < k.max_outer {
        if let Err(e) = run_inner_bcd(&mut state, inst, opts) {
            if state.lifted.is_none() {
                return Err(e);
            }
            termination = Termination::SolverStall;
            break;
        }
        let channels = synthesize_channels(&inst.users, &state.positions, inst.wavelength);
        let lifted = state.lifted.as_ref().expect("inner loop ran");
        let q = state.q.as_ref().expect("inner loop ran");
        let v = coupling_v_lifted(&channels, lifted);
        last_violation = violation(q, &v);
        state.violation_history.push(last_violation);
        state.xi += (q - &v) / state.rho;
        state.outer_index += 1;
        state.rho = penalty_at(k, state.outer_index);
        if last_violation < k.delta_out {
            termination = Termination::Converged;
            break;
        }
    }
    let pdd_beam = state.lifted.as_ref().map(|lifted| {
        let mut w = CMatrix::zeros(state.positions.len(), lifted.len());
        for (i, l) in lifted.iter().enumerate() {
            w.set_column(i, &crate::sdr::extract_rank_one(l, opts.sdp.rank_tol).w);
        }
        Beamformer::new(w)
    });
    let mut res = polish(inst, state.positions.clone(), &opts.sdp, pdd_beam)?;
    if start != state.positions {
        let at_start = polish(inst, start, &opts.sdp, None)?;
        if at_start.feasible() && (!res.feasible() || at_start.gain_db > res.gain_db) {
            res = at_start;
        }
    }
    res.violation = last_violation;
    res.termination = termination;
    res.outer_iters = state.outer_index;
    res.inner_iters_total = state.inner_total;
    res.violation_history = state.violation_history;
    res.objective_history = state.objective_history;
    res.trace = state.trace;
    res.certificate_failures += state.certificate_failures;
    res.wall_time = clock.elapsed();
    Ok(res)
}

/// `ρ⁽ʲ⁾ = ρ⁰·c₀^j`.
pub fn penalty_at(knobs: &PddKnobs, outer: usize) -> f64 {
    knobs.rho0 * knobs.c0.powi(outer as i32)
}

/// Runs the double loop from the configured initial geometry.
pub fn run_pdd(
    inst: &Instance,
    init: crate::geometry::InitScheme,
    opts: &PddOptions,
) -> Result<PddResult, SdpError> {
    let start = initial_positions(inst.num_antennas, inst.aperture, inst.wavelength, init)
        .expect("instance geometry was validated with its config");
    run_pdd_from(inst, start, opts)
}

/// Power cap, as a multiple of the budget, past which [`screened_start`]
/// stops refining a candidate's required power.
const SCREEN_CAP_FACTOR: f64 = 100.0;

/// Starting geometry picked from `first` plus `candidates` uniform draws.
///
/// Candidates are ranked by the least sum power meeting the SINR targets.
/// Up to `gain_evals` of the cheapest ones that fit the budget are then
/// solved exactly and the highest-gain geometry wins; when none fits, the
/// cheapest candidate is returned.
pub fn screened_start(
    inst: &Instance,
    first: Positions,
    candidates: usize,
    gain_evals: usize,
    sdp: &SdpSettings,
    rng: &mut impl rand::Rng,
) -> Positions {
    let mut pool = vec![first];
    for _ in 0..candidates {
        pool.push(
            sample_random(rng, inst.num_antennas, inst.aperture, inst.wavelength)
                .expect("instance geometry was validated with its config"),
        );
    }
    let mut scored: Vec<(f64, Positions)> = pool
        .into_iter()
        .map(|t| {
            let channels = synthesize_channels(&inst.users, &t, inst.wavelength);
            let cap = SCREEN_CAP_FACTOR * inst.power;
            let p = match min_sum_power(&channels, &inst.sinr_targets, inst.noise, cap) {
                Ok(p) | Err(p) => p,
            };
            (p, t)
        })
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best: Option<(f64, Positions)> = None;
    for (p, t) in scored.iter().take(gain_evals) {
        if *p > inst.power {
            break;
        }
        let Ok(r) = evaluate_fixed(inst, t.clone(), sdp) else {
            continue;
        };
        if r.feasible() && best.as_ref().is_none_or(|b| r.gain_db > b.0) {
            best = Some((r.gain_db, t.clone()));
        }
    }
    best.map(|b| b.1)
        .unwrap_or_else(|| scored.swap_remove(0).1)
}

/// Best feasible polished result over several starting geometries (ties and
/// all-infeasible cases fall back to the first start).
pub fn run_pdd_multistart(
    inst: &Instance,
    starts: &[Positions],
    opts: &PddOptions,
) -> Result<PddResult, SdpError> {
    let mut best: Option<PddResult> = None;
    for s in starts {
        let r = run_pdd_from(inst, s.clone(), opts)?;
        let better = match &best {
            None => true,
            Some(b) => match (r.feasible(), b.feasible()) {
                (true, false) => true,
                (true, true) => r.gain_db > b.gain_db,
                _ => false,
            },
        };
        if better {
            best = Some(r);
        }
    }
    best.ok_or_else(|| SdpError::Setup("no starting geometry given".into()))
}
