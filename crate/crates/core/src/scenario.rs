//! Scenario configuration, random channel realizations and noise
//! normalization.
//!
//! Configuration files are flat TOML key/value documents. Powers are given in
//! dBm, ratios in dB and angles in degrees; [`load_config`] converts them to
//! linear SI units and validates everything at once so that a broken file
//! reports every problem in one pass.

use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Deserialize;

use crate::error::ConfigError;
use crate::geometry::InitScheme;
use crate::from_db;

/// Knobs of the penalty-dual-decomposition double loop.
#[derive(Debug, Clone, PartialEq)]
pub struct PddKnobs {
    /// Initial penalty `ρ⁰`.
    pub rho0: f64,
    /// Penalty decay factor `c₀ ∈ (0, 1)`.
    pub c0: f64,
    pub max_inner: usize,
    pub max_outer: usize,
    /// Relative objective change ending the inner loop.
    pub delta_in: f64,
    /// `‖Q − V‖_∞` threshold ending the outer loop (noise-normalized units).
    pub delta_out: f64,
}

/// Knobs of the projected-gradient position update.
#[derive(Debug, Clone, PartialEq)]
pub struct PgdKnobs {
    /// Absolute initial trial step. `None` selects the normalized rule
    /// `0.1·λ / (‖∇F‖ + ε)` evaluated at every iterate.
    pub step0: Option<f64>,
    pub shrink: f64,
    pub max_backtracks: usize,
    pub max_iters: usize,
    /// Sufficient-decrease coefficient `c` in
    /// `F(t⁺) ≤ F(t) − c·γ·‖∇F(t)‖²`. With `c = 1` no step is accepted
    /// where `F` curves upward along `−∇F`.
    pub armijo_c: f64,
}

impl Default for PgdKnobs {
    fn default() -> Self {
        Self {
            step0: None,
            shrink: 0.5,
            max_backtracks: 30,
            max_iters: 200,
            armijo_c: 1e-4,
        }
    }
}

/// Validated scenario, all quantities in linear SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub num_users: usize,
    pub num_antennas: usize,
    /// Carrier wavelength `λ` in meters.
    pub wavelength: f64,
    /// Aperture length `L` in meters.
    pub aperture: f64,
    /// Total transmit power `P_t` in watts.
    pub transmit_power: f64,
    /// Receiver noise power `σ_c²` in watts.
    pub noise_power: f64,
    /// Linear SINR targets `Γ_k`, one per user.
    pub sinr_targets: Vec<f64>,
    /// Sensing direction `θ_s` in radians.
    pub target_angle: f64,
    pub paths_per_user: usize,
    /// Reference path loss `σ₀` (linear).
    pub pathloss_ref: f64,
    pub pathloss_exp: f64,
    /// User distance range `[d_min, d_max]` in meters.
    pub distance_range: (f64, f64),
    pub pdd: PddKnobs,
    pub pgd: PgdKnobs,
    /// Conic solver feasibility / gap tolerance.
    pub sdp_tol: f64,
    /// Rank-one certificate threshold on `λ₂/λ₁`.
    pub rank_tol: f64,
    /// Starting geometry of the joint optimizer.
    pub init_positions: InitScheme,
    /// Random geometries screened against `init_positions` before the joint
    /// optimizer starts; 0 starts from `init_positions` as is.
    pub screen_candidates: usize,
    /// Screened geometries solved exactly to rank them by gain.
    pub screen_gain_evals: usize,
    /// Center the fixed half-wavelength array in the aperture instead of
    /// anchoring it at 0.
    pub fa_center: bool,
    pub master_seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum ScalarOrList {
    Scalar(f64),
    List(Vec<f64>),
}

/// On-disk form of the configuration. Defaults reproduce the reference
/// scenario: 3 GHz carrier, 15λ aperture, 30 dBm budget, −80 dBm noise,
/// 12 paths per user with −40 dB reference loss and exponent 2.8.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawConfig {
    k_users: i64,
    n_antennas: i64,
    wavelength_m: f64,
    aperture_lambda: f64,
    tx_power_dbm: f64,
    noise_dbm: f64,
    sinr_target_db: ScalarOrList,
    target_angle_deg: f64,
    paths_per_user: i64,
    pathloss_ref_db: f64,
    pathloss_exp: f64,
    dist_min_m: f64,
    dist_max_m: f64,
    rho0: f64,
    c0: f64,
    max_outer: i64,
    max_inner: i64,
    delta_in: f64,
    delta_out: f64,
    pgd_step0: Option<f64>,
    pgd_shrink: f64,
    pgd_max_backtracks: i64,
    pgd_max_iters: i64,
    pgd_armijo_c: f64,
    sdp_tol: f64,
    rank_tol: f64,
    init_positions: InitScheme,
    screen_candidates: i64,
    screen_gain_evals: i64,
    fa_center: bool,
    seed: u64,
}

impl Default for RawConfig {
    fn default() -> Self {
        let pgd = PgdKnobs::default();
        Self {
            k_users: 4,
            n_antennas: 8,
            wavelength_m: 0.1,
            aperture_lambda: 15.0,
            tx_power_dbm: 30.0,
            noise_dbm: -80.0,
            sinr_target_db: ScalarOrList::Scalar(10.0),
            target_angle_deg: 0.0,
            paths_per_user: 12,
            pathloss_ref_db: -40.0,
            pathloss_exp: 2.8,
            dist_min_m: 50.0,
            dist_max_m: 150.0,
            rho0: 1.0,
            c0: 0.6,
            max_outer: 30,
            max_inner: 15,
            delta_in: 1e-5,
            delta_out: 1e-5,
            pgd_step0: pgd.step0,
            pgd_shrink: pgd.shrink,
            pgd_max_backtracks: pgd.max_backtracks as i64,
            pgd_max_iters: pgd.max_iters as i64,
            pgd_armijo_c: pgd.armijo_c,
            sdp_tol: 1e-8,
            rank_tol: 1e-6,
            init_positions: InitScheme::UniformSpread,
            screen_candidates: 100,
            screen_gain_evals: 10,
            fa_center: false,
            seed: 0,
        }
    }
}

/// `dBm → W`.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    from_db(dbm) * 1e-3
}

/// `W → dBm`.
pub fn watts_to_dbm(watts: f64) -> f64 {
    crate::to_db(watts * 1e3)
}

impl ScenarioConfig {
    /// Parses a TOML document. Missing keys take the reference defaults.
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text)?;
        raw.validate()
    }

    /// As [`Self::from_toml_str`] on an already parsed table.
    pub fn from_table(table: toml::Table) -> Result<Self, ConfigError> {
        let raw: RawConfig = table.try_into()?;
        raw.validate()
    }

    /// The reference scenario with no overrides.
    pub fn reference() -> Self {
        RawConfig::default()
            .validate()
            .expect("reference configuration is valid")
    }

    /// Minimum aperture that still admits `λ/2` spacing.
    pub fn min_aperture(&self) -> f64 {
        (self.num_antennas.saturating_sub(1)) as f64 * self.wavelength / 2.0
    }

    /// Re-checks the invariants of an already constructed config (e.g. after
    /// a sweep overrides a field).
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errs = Vec::new();
        if self.num_users == 0 {
            errs.push("k_users must be positive".to_string());
        }
        if self.num_antennas < self.num_users.max(1) {
            errs.push(format!(
                "n_antennas ({}) must be at least k_users ({})",
                self.num_antennas, self.num_users
            ));
        }
        if !(self.wavelength > 0.0) {
            errs.push("wavelength_m must be positive".to_string());
        }
        if self.aperture + 1e-12 < self.min_aperture() {
            errs.push(format!(
                "aperture_lambda: spacing constraint infeasible ({} antennas need {:.4} m, aperture is {:.4} m)",
                self.num_antennas,
                self.min_aperture(),
                self.aperture
            ));
        }
        if !(self.transmit_power > 0.0) {
            errs.push("tx_power_dbm: transmit power must be positive".to_string());
        }
        if !(self.noise_power > 0.0) {
            errs.push("noise_dbm: noise power must be positive".to_string());
        }
        if self.sinr_targets.len() != self.num_users {
            errs.push(format!(
                "sinr_target_db: expected 1 or {} values, got {}",
                self.num_users,
                self.sinr_targets.len()
            ));
        }
        if self.sinr_targets.iter().any(|g| !(*g > 0.0) || !g.is_finite()) {
            errs.push("sinr_target_db: targets must be finite".to_string());
        }
        if !self.target_angle.is_finite() || self.target_angle.abs() > FRAC_PI_2 {
            errs.push("target_angle_deg must lie in [-90, 90]".to_string());
        }
        if self.paths_per_user == 0 {
            errs.push("paths_per_user must be positive".to_string());
        }
        if !(self.pathloss_ref > 0.0) {
            errs.push("pathloss_ref_db must be finite".to_string());
        }
        if !self.pathloss_exp.is_finite() {
            errs.push("pathloss_exp must be finite".to_string());
        }
        let (dmin, dmax) = self.distance_range;
        if !(dmin > 0.0 && dmax >= dmin) {
            errs.push("dist_min_m / dist_max_m must satisfy 0 < min <= max".to_string());
        }
        if !(self.pdd.rho0 > 0.0) {
            errs.push("rho0 must be positive".to_string());
        }
        if !(self.pdd.c0 > 0.0 && self.pdd.c0 < 1.0) {
            errs.push("c0 must lie in (0, 1)".to_string());
        }
        if self.pdd.max_outer == 0 {
            errs.push("max_outer must be positive".to_string());
        }
        if self.pdd.max_inner == 0 {
            errs.push("max_inner must be positive".to_string());
        }
        if !(self.pdd.delta_in > 0.0) {
            errs.push("delta_in must be positive".to_string());
        }
        if !(self.pdd.delta_out > 0.0) {
            errs.push("delta_out must be positive".to_string());
        }
        if let Some(s) = self.pgd.step0 {
            if !(s > 0.0) {
                errs.push("pgd_step0 must be positive".to_string());
            }
        }
        if !(self.pgd.shrink > 0.0 && self.pgd.shrink < 1.0) {
            errs.push("pgd_shrink must lie in (0, 1)".to_string());
        }
        if !(self.pgd.armijo_c > 0.0) {
            errs.push("pgd_armijo_c must be positive".to_string());
        }
        if !(self.sdp_tol > 0.0 && self.sdp_tol < 1e-2) {
            errs.push("sdp_tol must lie in (0, 1e-2)".to_string());
        }
        if !(self.rank_tol > 0.0) {
            errs.push("rank_tol must be positive".to_string());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errs))
        }
    }
}

impl RawConfig {
    fn validate(self) -> Result<ScenarioConfig, ConfigError> {
        let mut errs = Vec::new();
        let count = |name: &str, v: i64, errs: &mut Vec<String>| -> usize {
            if v < 0 {
                errs.push(format!("{name} must be non-negative"));
                0
            } else {
                v as usize
            }
        };
        let num_users = count("k_users", self.k_users, &mut errs);
        let num_antennas = count("n_antennas", self.n_antennas, &mut errs);
        let paths_per_user = count("paths_per_user", self.paths_per_user, &mut errs);
        let max_outer = count("max_outer", self.max_outer, &mut errs);
        let max_inner = count("max_inner", self.max_inner, &mut errs);
        let max_backtracks = count("pgd_max_backtracks", self.pgd_max_backtracks, &mut errs);
        let max_iters = count("pgd_max_iters", self.pgd_max_iters, &mut errs);
        let screen_candidates = count("screen_candidates", self.screen_candidates, &mut errs);
        let screen_gain_evals = count("screen_gain_evals", self.screen_gain_evals, &mut errs);

        let sinr_targets = match self.sinr_target_db {
            ScalarOrList::Scalar(db) => vec![from_db(db); num_users],
            ScalarOrList::List(v) => v.into_iter().map(from_db).collect(),
        };

        let cfg = ScenarioConfig {
            num_users,
            num_antennas,
            wavelength: self.wavelength_m,
            aperture: self.aperture_lambda * self.wavelength_m,
            transmit_power: dbm_to_watts(self.tx_power_dbm),
            noise_power: dbm_to_watts(self.noise_dbm),
            sinr_targets,
            target_angle: self.target_angle_deg.to_radians(),
            paths_per_user,
            pathloss_ref: from_db(self.pathloss_ref_db),
            pathloss_exp: self.pathloss_exp,
            distance_range: (self.dist_min_m, self.dist_max_m),
            pdd: PddKnobs {
                rho0: self.rho0,
                c0: self.c0,
                max_inner,
                max_outer,
                delta_in: self.delta_in,
                delta_out: self.delta_out,
            },
            pgd: PgdKnobs {
                step0: self.pgd_step0,
                shrink: self.pgd_shrink,
                max_backtracks,
                max_iters,
                armijo_c: self.pgd_armijo_c,
            },
            sdp_tol: self.sdp_tol,
            rank_tol: self.rank_tol,
            init_positions: self.init_positions,
            screen_candidates,
            screen_gain_evals,
            fa_center: self.fa_center,
            master_seed: self.seed,
        };
        match cfg.validate() {
            Ok(()) if errs.is_empty() => Ok(cfg),
            Ok(()) => Err(ConfigError::Invalid(errs)),
            Err(ConfigError::Invalid(more)) => {
                errs.extend(more);
                Err(ConfigError::Invalid(errs))
            }
            Err(e) => Err(e),
        }
    }
}

/// Reads and validates a configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ScenarioConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ScenarioConfig::from_toml_str(&text)
}

/// Multipath description of one user's channel: `h = Σ_l σ_l · g(θ_l, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub gains: Vec<Complex64>,
    /// Angles of departure in radians, strictly inside `(−π/2, π/2)`.
    pub angles: Vec<f64>,
    /// Distance to the base station in meters.
    pub distance: f64,
}

impl PathSet {
    pub fn new(gains: Vec<Complex64>, angles: Vec<f64>, distance: f64) -> Self {
        assert_eq!(gains.len(), angles.len(), "one gain per path");
        assert!(
            angles.iter().all(|a| a.abs() < FRAC_PI_2),
            "angles must lie in (-pi/2, pi/2)"
        );
        Self {
            gains,
            angles,
            distance,
        }
    }

    pub fn num_paths(&self) -> usize {
        self.gains.len()
    }

    /// `Σ_l |σ_l|²`, the average channel power per antenna.
    pub fn total_power(&self) -> f64 {
        self.gains.iter().map(|g| g.norm_sqr()).sum()
    }
}

/// Independent random streams drawn for one realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Channel = 0,
    RandomPositions = 1,
    Restarts = 2,
}

/// Counter-based RNG for `(master_seed, realization, stream)`. Each triple
/// maps to a disjoint ChaCha stream, so results never depend on the order in
/// which realizations are processed.
pub fn realization_rng(master_seed: u64, realization: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(realization.wrapping_mul(4).wrapping_add(stream as u64));
    rng
}

/// Per-path gain variance `σ₀·d^(−α)/L_k`.
pub fn path_variance(cfg: &ScenarioConfig, distance: f64) -> f64 {
    cfg.pathloss_ref * distance.powf(-cfg.pathloss_exp) / cfg.paths_per_user as f64
}

/// Draws every user's multipath parameters for one realization.
pub fn draw_scenario(cfg: &ScenarioConfig, realization: u64) -> Vec<PathSet> {
    let mut rng = realization_rng(cfg.master_seed, realization, Stream::Channel);
    let (dmin, dmax) = cfg.distance_range;
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    (0..cfg.num_users)
        .map(|_| {
            let distance = if dmax > dmin {
                rng.random_range(dmin..=dmax)
            } else {
                dmin
            };
            let scale = (path_variance(cfg, distance) / 2.0).sqrt();
            let mut gains = Vec::with_capacity(cfg.paths_per_user);
            let mut angles = Vec::with_capacity(cfg.paths_per_user);
            for _ in 0..cfg.paths_per_user {
                let re: f64 = std_normal.sample(&mut rng);
                let im: f64 = std_normal.sample(&mut rng);
                gains.push(Complex64::new(re * scale, im * scale));
                angles.push(open_half_angle(&mut rng));
            }
            PathSet::new(gains, angles, distance)
        })
        .collect()
}

fn open_half_angle(rng: &mut impl Rng) -> f64 {
    loop {
        let a = rng.random_range(-FRAC_PI_2..FRAC_PI_2);
        if a.abs() < FRAC_PI_2 {
            return a;
        }
    }
}

/// Scales every gain by `1/σ_c` so that downstream code works with unit
/// noise power.
pub fn normalize_by_noise(paths: &[PathSet], noise_power: f64) -> Vec<PathSet> {
    assert!(noise_power > 0.0, "noise power must be positive");
    let scale = noise_power.sqrt().recip();
    paths
        .iter()
        .map(|p| PathSet {
            gains: p.gains.iter().map(|g| g * scale).collect(),
            angles: p.angles.clone(),
            distance: p.distance,
        })
        .collect()
}

/// Everything an optimizer needs for one realization, in noise-normalized
/// units.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub num_antennas: usize,
    pub wavelength: f64,
    pub aperture: f64,
    pub power: f64,
    /// Noise power of the channels in `users` (1 after normalization).
    pub noise: f64,
    pub sinr_targets: Vec<f64>,
    pub target_angle: f64,
    pub users: Vec<PathSet>,
}

impl Instance {
    /// Draws realization `realization` of `cfg` and normalizes it.
    pub fn from_config(cfg: &ScenarioConfig, realization: u64) -> Self {
        let raw = draw_scenario(cfg, realization);
        Self::with_paths(cfg, normalize_by_noise(&raw, cfg.noise_power), 1.0)
    }

    /// Builds an instance from explicit paths whose noise power is `noise`.
    pub fn with_paths(cfg: &ScenarioConfig, users: Vec<PathSet>, noise: f64) -> Self {
        Self {
            num_antennas: cfg.num_antennas,
            wavelength: cfg.wavelength,
            aperture: cfg.aperture,
            power: cfg.transmit_power,
            noise,
            sinr_targets: cfg.sinr_targets.clone(),
            target_angle: cfg.target_angle,
            users,
        }
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dbm_conversions() {
        assert!((dbm_to_watts(30.0) - 1.0).abs() < 1e-15);
        assert!((dbm_to_watts(-80.0) - 1e-11).abs() < 1e-25);
        for &w in &[1e-13, 3.7e-4, 1.0, 250.0] {
            let back = dbm_to_watts(watts_to_dbm(w));
            assert!(((back - w) / w).abs() < 1e-12);
            let lin = from_db(crate::to_db(w));
            assert!(((lin - w) / w).abs() < 1e-12);
        }
    }

    #[test]
    fn reference_config_matches_defaults() {
        let cfg = ScenarioConfig::reference();
        assert_eq!(cfg.num_users, 4);
        assert!((cfg.transmit_power - 1.0).abs() < 1e-15);
        assert!((cfg.noise_power - 1e-11).abs() < 1e-25);
        assert!((cfg.aperture - 1.5).abs() < 1e-12);
        assert!((cfg.sinr_targets[0] - 10.0).abs() < 1e-12);
        assert!((cfg.pathloss_ref - 1e-4).abs() < 1e-18);
    }

    #[test]
    fn spacing_infeasible_is_reported() {
        let err = ScenarioConfig::from_toml_str("n_antennas = 40\naperture_lambda = 15\n").unwrap_err();
        assert!(err.to_string().contains("spacing constraint infeasible"), "{err}");
    }

    #[test]
    fn violations_are_collected() {
        let err = ScenarioConfig::from_toml_str("c0 = 1.5\nrho0 = -1\nk_users = 9\n").unwrap_err();
        match err {
            ConfigError::Invalid(list) => {
                assert!(list.iter().any(|m| m.contains("c0")));
                assert!(list.iter().any(|m| m.contains("rho0")));
                assert!(list.iter().any(|m| m.contains("n_antennas")));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn per_user_sinr_list() {
        let cfg = ScenarioConfig::from_toml_str("k_users = 2\nsinr_target_db = [0.0, 10.0]\n").unwrap();
        assert!((cfg.sinr_targets[0] - 1.0).abs() < 1e-12);
        assert!((cfg.sinr_targets[1] - 10.0).abs() < 1e-12);
        assert!(ScenarioConfig::from_toml_str("k_users = 2\nsinr_target_db = [0.0]\n").is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(
            ScenarioConfig::from_toml_str("n_antenas = 4\n"),
            Err(ConfigError::Parse(_))
        ));
    }

    #[test]
    fn path_variance_reference_value() {
        let cfg = ScenarioConfig::reference();
        let v = path_variance(&cfg, 100.0);
        assert!(((v - 2.09e-11) / 2.09e-11).abs() < 5e-3, "{v}");
    }

    #[test]
    fn draws_are_deterministic() {
        let cfg = ScenarioConfig::reference();
        assert_eq!(draw_scenario(&cfg, 7), draw_scenario(&cfg, 7));
        assert_ne!(draw_scenario(&cfg, 7), draw_scenario(&cfg, 8));
    }

    #[test]
    fn draws_respect_ranges() {
        let cfg = ScenarioConfig::reference();
        for r in 0..20 {
            for p in draw_scenario(&cfg, r) {
                assert!((50.0..=150.0).contains(&p.distance));
                assert_eq!(p.num_paths(), 12);
                assert!(p.angles.iter().all(|a| a.abs() < FRAC_PI_2));
            }
        }
    }

    #[test]
    fn empirical_path_power_matches_variance() {
        let mut cfg = ScenarioConfig::reference();
        cfg.num_users = 1;
        cfg.sinr_targets = vec![1.0];
        cfg.distance_range = (100.0, 100.0);
        let n = 10_000;
        let mean: f64 = (0..n)
            .map(|r| draw_scenario(&cfg, r)[0].total_power())
            .sum::<f64>()
            / n as f64;
        let expect = cfg.pathloss_ref * 100f64.powf(-cfg.pathloss_exp);
        assert!(((mean - expect) / expect).abs() < 0.05, "{mean} vs {expect}");
    }

    #[test]
    fn unit_noise_normalization_is_identity() {
        let cfg = ScenarioConfig::reference();
        let raw = draw_scenario(&cfg, 3);
        assert_eq!(normalize_by_noise(&raw, 1.0), raw);
        let scaled = normalize_by_noise(&raw, 1e-11);
        let g = raw[0].gains[0];
        let s = scaled[0].gains[0];
        assert!((s - g / 1e-11f64.sqrt()).norm() <= 1e-12 * s.norm());
    }
}
