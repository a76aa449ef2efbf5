//! Antenna positions and the aperture / minimum-spacing feasible set
//! `{ 0 ≤ t_1, t_{p+1} − t_p ≥ λ/2, t_N ≤ L }`.

use rand::Rng;
use serde::Deserialize;

use crate::error::ConfigError;

/// Absolute tolerance (meters) of [`is_feasible`].
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Antenna positions along the array axis, in meters, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Positions(Vec<f64>);

impl Positions {
    /// Wraps `t` after checking it against the feasible set.
    pub fn new(t: Vec<f64>, aperture: f64, wavelength: f64) -> Result<Self, ConfigError> {
        if is_feasible(&t, aperture, wavelength) {
            Ok(Self(t))
        } else {
            Err(ConfigError::Geometry(format!(
                "positions {t:?} violate aperture {aperture} / spacing {}",
                wavelength / 2.0
            )))
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Occupied span `t_N − t_1`.
    pub fn span(&self) -> f64 {
        match (self.0.first(), self.0.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }
}

impl std::ops::Deref for Positions {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Starting geometry for the joint optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitScheme {
    /// Evenly spread over the whole aperture.
    UniformSpread,
    /// Half-wavelength array anchored at 0.
    UlaCompact,
}

fn check_room(n: usize, aperture: f64, wavelength: f64) -> Result<(), ConfigError> {
    let need = n.saturating_sub(1) as f64 * wavelength / 2.0;
    if n == 0 {
        return Err(ConfigError::Geometry("at least one antenna is required".into()));
    }
    if aperture + FEASIBILITY_TOL < need {
        return Err(ConfigError::Geometry(format!(
            "spacing constraint infeasible: {n} antennas need {need} m, aperture is {aperture} m"
        )));
    }
    Ok(())
}

/// True iff every position lies in `[0, L]` and adjacent positions are at
/// least `λ/2` apart, both within [`FEASIBILITY_TOL`].
pub fn is_feasible(t: &[f64], aperture: f64, wavelength: f64) -> bool {
    let half = wavelength / 2.0;
    t.iter()
        .all(|&x| x.is_finite() && x >= -FEASIBILITY_TOL && x <= aperture + FEASIBILITY_TOL)
        && t.windows(2).all(|w| w[1] - w[0] >= half - FEASIBILITY_TOL)
}

/// Sequential clamp onto the feasible set.
///
/// Processed left to right with the already-clamped predecessor:
/// `t_p ← max(t_{p−1} + λ/2, min(L − (N−p)·λ/2, x_p))`, with lower bound 0
/// for `p = 1`. Positions keep their index (no sorting), since antenna `p`
/// owns row `p` of the beamformer; order inversions are resolved by the
/// spacing clamp. The per-index upper bound makes every feasible input a
/// fixed point. This is a feasibility-restoring map, not the Euclidean
/// projection.
pub fn project(x: &[f64], aperture: f64, wavelength: f64) -> Positions {
    let n = x.len();
    let half = wavelength / 2.0;
    let mut out = Vec::with_capacity(n);
    for (p, &xp) in x.iter().enumerate() {
        let upper = aperture - (n - 1 - p) as f64 * half;
        let lower = if p == 0 { 0.0 } else { out[p - 1] + half };
        let xp = if xp.is_nan() { lower } else { xp };
        out.push(lower.max(upper.min(xp)));
    }
    Positions(out)
}

/// Deterministic starting positions.
pub fn initial_positions(
    n: usize,
    aperture: f64,
    wavelength: f64,
    scheme: InitScheme,
) -> Result<Positions, ConfigError> {
    check_room(n, aperture, wavelength)?;
    let t = match scheme {
        InitScheme::UniformSpread if n == 1 => vec![aperture / 2.0],
        InitScheme::UniformSpread => {
            let step = aperture / (n - 1) as f64;
            (0..n).map(|p| p as f64 * step).collect()
        }
        InitScheme::UlaCompact => (0..n).map(|p| p as f64 * wavelength / 2.0).collect(),
    };
    Ok(Positions(t))
}

/// Half-wavelength array shifted to the middle of the aperture.
pub fn centered_ula(n: usize, aperture: f64, wavelength: f64) -> Result<Positions, ConfigError> {
    check_room(n, aperture, wavelength)?;
    let half = wavelength / 2.0;
    let offset = (aperture - (n - 1) as f64 * half) / 2.0;
    Ok(Positions((0..n).map(|p| offset + p as f64 * half).collect()))
}

/// Uniform sample from the feasible polytope.
///
/// Sorted uniforms scaled to the free length `L − (N−1)·λ/2` are uniform on
/// the ordered simplex; adding the mandatory `(p−1)·λ/2` offsets is a
/// volume-preserving translation onto the feasible set.
pub fn sample_random(
    rng: &mut impl Rng,
    n: usize,
    aperture: f64,
    wavelength: f64,
) -> Result<Positions, ConfigError> {
    check_room(n, aperture, wavelength)?;
    let half = wavelength / 2.0;
    let free = (aperture - (n - 1) as f64 * half).max(0.0);
    let mut u: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    u.sort_by(f64::total_cmp);
    let t: Vec<f64> = u
        .iter()
        .enumerate()
        .map(|(p, s)| free * s + p as f64 * half)
        .collect();
    debug_assert!(is_feasible(&t, aperture, wavelength));
    Ok(Positions(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn feasibility_examples() {
        assert!(is_feasible(&[0.0, 0.5, 1.0], 2.0, 1.0));
        assert!(!is_feasible(&[0.0, 0.4], 2.0, 1.0));
        assert!(!is_feasible(&[0.0, 2.1], 2.0, 1.0));
        assert!(!is_feasible(&[-0.1, 1.0], 2.0, 1.0));
        assert!(is_feasible(&[1.0], 2.0, 1.0));
    }

    #[test]
    fn project_resolves_inversion() {
        let t = project(&[1.8, 0.3], 2.0, 1.0);
        assert_eq!(t.as_slice(), &[1.5, 2.0]);
    }

    #[test]
    fn project_keeps_feasible_points() {
        let t = [0.0, 2.5, 3.0];
        assert!(is_feasible(&t, 3.0, 1.0));
        assert_eq!(project(&t, 3.0, 1.0).as_slice(), &t);
    }

    #[test]
    fn initial_schemes() {
        let t = initial_positions(4, 1.5, 0.1, InitScheme::UniformSpread).unwrap();
        for (a, b) in t.iter().zip([0.0, 0.5, 1.0, 1.5]) {
            assert!((a - b).abs() < 1e-12);
        }
        let t = initial_positions(4, 1.5, 0.1, InitScheme::UlaCompact).unwrap();
        for (a, b) in t.iter().zip([0.0, 0.05, 0.10, 0.15]) {
            assert!((a - b).abs() < 1e-12);
        }
        let t = initial_positions(2, 0.05, 0.1, InitScheme::UniformSpread).unwrap();
        assert_eq!(t.as_slice(), &[0.0, 0.05]);
        let t = initial_positions(1, 2.0, 0.1, InitScheme::UniformSpread).unwrap();
        assert_eq!(t.as_slice(), &[1.0]);
        assert!(initial_positions(5, 0.1, 0.1, InitScheme::UlaCompact).is_err());
    }

    #[test]
    fn centered_ula_is_symmetric() {
        let t = centered_ula(4, 1.5, 0.1).unwrap();
        assert!((t[0] + t[3] - 1.5).abs() < 1e-12);
        assert!(is_feasible(&t, 1.5, 0.1));
    }

    #[test]
    fn zero_slack_sample_is_compact_ula() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 6;
        let l = (n - 1) as f64 * 0.05;
        for _ in 0..10 {
            let t = sample_random(&mut rng, n, l, 0.1).unwrap();
            for (p, x) in t.iter().enumerate() {
                assert!((x - p as f64 * 0.05).abs() < 1e-12);
            }
        }
    }

    /// Two-sample Kolmogorov–Smirnov statistic.
    fn ks_two_sample(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        let (mut i, mut j, mut d) = (0usize, 0usize, 0f64);
        while i < a.len() && j < b.len() {
            let x = a[i].min(b[j]);
            while i < a.len() && a[i] <= x {
                i += 1;
            }
            while j < b.len() && b[j] <= x {
                j += 1;
            }
            d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
        }
        d
    }

    #[test]
    fn gap_law_matches_rejection_sampling() {
        let (l, lambda) = (2.0, 1.0);
        let free = l - lambda / 2.0;
        let n = 100_000;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let gaps: Vec<f64> = (0..n)
            .map(|_| {
                let t = sample_random(&mut rng, 2, l, lambda).unwrap();
                assert!(is_feasible(&t, l, lambda));
                t[1] - t[0] - lambda / 2.0
            })
            .collect();
        // Rejection sampler: uniform on the box [0, L]^2, keep feasible.
        let mut rej = Vec::with_capacity(n);
        while rej.len() < n {
            let a: f64 = rng.random::<f64>() * l;
            let b: f64 = rng.random::<f64>() * l;
            if b - a >= lambda / 2.0 {
                rej.push(b - a - lambda / 2.0);
            }
        }
        let d = ks_two_sample(gaps.clone(), rej);
        assert!(d < 0.01, "KS two-sample {d}");
        // Analytic order-statistic law: P(gap ≤ g) = 1 − (1 − g/free)².
        let mut sorted = gaps;
        sorted.sort_by(f64::total_cmp);
        let d_an = sorted
            .iter()
            .enumerate()
            .map(|(i, g)| {
                let cdf = 1.0 - (1.0 - g / free).powi(2);
                (cdf - i as f64 / n as f64).abs().max((cdf - (i + 1) as f64 / n as f64).abs())
            })
            .fold(0.0, f64::max);
        assert!(d_an < 0.01, "KS vs analytic {d_an}");
    }

    proptest! {
        #[test]
        fn projection_is_feasible_and_idempotent(
            x in proptest::collection::vec(-5.0f64..5.0, 1..10),
            extra in 0.0f64..4.0,
        ) {
            let lambda = 0.7;
            let l = (x.len() - 1) as f64 * lambda / 2.0 + extra;
            let y = project(&x, l, lambda);
            prop_assert!(is_feasible(&y, l, lambda));
            prop_assert_eq!(project(&y, l, lambda), y);
        }

        #[test]
        fn random_samples_are_fixed_points(seed in any::<u64>(), n in 1usize..10, extra in 0.0f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let lambda = 0.1;
            let l = (n - 1) as f64 * lambda / 2.0 + extra;
            let t = sample_random(&mut rng, n, l, lambda).unwrap();
            prop_assert!(is_feasible(&t, l, lambda));
            let p = project(&t, l, lambda);
            for (a, b) in p.iter().zip(t.iter()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
