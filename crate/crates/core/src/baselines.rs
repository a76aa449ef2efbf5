//! Comparison schemes and the dispatcher the harness runs them through.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::channel::Beamformer;
use crate::error::SdpError;
use crate::geometry::{centered_ula, initial_positions, sample_random, InitScheme, Positions};
use crate::pdd::{evaluate_fixed, run_pdd_from, screened_start, PddOptions, PddResult, Termination, Verdict};
use crate::scenario::{realization_rng, Instance, ScenarioConfig, Stream};
use crate::to_db;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BaselineKind {
    /// Half-wavelength array, exact fixed-position SDP.
    FixedUla,
    /// One uniform position draw per realization, exact fixed-position SDP.
    RandomMa,
    /// Normalized gain `N_t`; nothing is solved.
    UpperBound,
    /// Joint position and beamformer optimization.
    PddJapb,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 4] = [
        BaselineKind::PddJapb,
        BaselineKind::FixedUla,
        BaselineKind::RandomMa,
        BaselineKind::UpperBound,
    ];

    pub fn cli_name(&self) -> &'static str {
        match self {
            BaselineKind::FixedUla => "fa",
            BaselineKind::RandomMa => "random",
            BaselineKind::UpperBound => "bound",
            BaselineKind::PddJapb => "pdd",
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

impl FromStr for BaselineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.cli_name() == s)
            .ok_or_else(|| format!("unknown scheme `{s}` (expected pdd, fa, random or bound)"))
    }
}

/// `10·log10(N_t)`: the gain of a lossless array steering all power at `θ_s`.
pub fn upper_bound_db(num_antennas: usize) -> f64 {
    to_db(num_antennas as f64)
}

/// Fixed-array geometry honoring `fa_center`.
pub fn fixed_ula(cfg: &ScenarioConfig) -> Positions {
    let r = if cfg.fa_center {
        centered_ula(cfg.num_antennas, cfg.aperture, cfg.wavelength)
    } else {
        initial_positions(cfg.num_antennas, cfg.aperture, cfg.wavelength, InitScheme::UlaCompact)
    };
    r.expect("validated config leaves room for the array")
}

/// Runs `kind` on realization `realization` of `cfg`.
pub fn run_baseline(
    kind: BaselineKind,
    cfg: &ScenarioConfig,
    realization: u64,
    opts: &PddOptions,
) -> Result<PddResult, SdpError> {
    let inst = Instance::from_config(cfg, realization);
    run_baseline_on(kind, cfg, &inst, realization, opts)
}

/// As [`run_baseline`] but on an already drawn instance.
pub fn run_baseline_on(
    kind: BaselineKind,
    cfg: &ScenarioConfig,
    inst: &Instance,
    realization: u64,
    opts: &PddOptions,
) -> Result<PddResult, SdpError> {
    match kind {
        BaselineKind::FixedUla => evaluate_fixed(inst, fixed_ula(cfg), &opts.sdp),
        BaselineKind::RandomMa => {
            let mut rng = realization_rng(cfg.master_seed, realization, Stream::RandomPositions);
            let t = sample_random(&mut rng, cfg.num_antennas, cfg.aperture, cfg.wavelength)
                .expect("validated config leaves room for the array");
            evaluate_fixed(inst, t, &opts.sdp)
        }
        BaselineKind::UpperBound => Ok(upper_bound_result(inst, cfg)),
        BaselineKind::PddJapb => {
            let first = initial_positions(cfg.num_antennas, cfg.aperture, cfg.wavelength, cfg.init_positions)
                .expect("validated config leaves room for the array");
            let start = if cfg.screen_candidates > 0 {
                let mut rng = realization_rng(cfg.master_seed, realization, Stream::Restarts);
                screened_start(inst, first, cfg.screen_candidates, cfg.screen_gain_evals, &opts.sdp, &mut rng)
            } else {
                first
            };
            run_pdd_from(inst, start, opts)
        }
    }
}

fn upper_bound_result(inst: &Instance, cfg: &ScenarioConfig) -> PddResult {
    let start = Instant::now();
    let n = cfg.num_antennas;
    PddResult {
        positions: fixed_ula(cfg),
        beamformer: Beamformer::zeros(n, inst.num_users()),
        sinr_db: vec![f64::NAN; inst.num_users()],
        gain_db: upper_bound_db(n),
        violation: 0.0,
        verdict: Verdict::Feasible,
        termination: Termination::NotApplicable,
        outer_iters: 0,
        inner_iters_total: 0,
        wall_time: start.elapsed(),
        violation_history: Vec::new(),
        objective_history: Vec::new(),
        trace: Vec::new(),
        certificate_failures: 0,
    }
}
