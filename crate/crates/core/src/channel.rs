//! Steering vectors, position-dependent channels and the scalar metrics of
//! the joint design: SINR, beampattern gain, the coupling matrix
//! `V_{ki} = |h_kᴴ w_i|²` and the augmented-Lagrangian objective
//!
//! ```text
//! F = −aᴴ(Σ_k W_k)a + (1/2ρ)·‖Q − V + ρξ‖²_F
//! ```
//!
//! Everything here is pure and allocation-light; the caller resynthesizes
//! channels whenever the positions move.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::scenario::PathSet;
use crate::{CMatrix, CVector, RMatrix};

/// Downlink beamformer: columns of `w` are the per-user vectors `w_k`;
/// `lifted` optionally carries the PSD matrices `W_k` they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Beamformer {
    pub w: CMatrix,
    pub lifted: Option<Vec<CMatrix>>,
}

impl Beamformer {
    pub fn new(w: CMatrix) -> Self {
        Self { w, lifted: None }
    }

    pub fn zeros(num_antennas: usize, num_users: usize) -> Self {
        Self::new(CMatrix::zeros(num_antennas, num_users))
    }

    /// `Σ_k ‖w_k‖²`.
    pub fn power(&self) -> f64 {
        self.w.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `W_k = w_k w_kᴴ` for every column.
    pub fn outer_products(&self) -> Vec<CMatrix> {
        self.w
            .column_iter()
            .map(|c| {
                let c = c.into_owned();
                &c * c.adjoint()
            })
            .collect()
    }

    /// Checks the power budget with `1e-6` relative slack.
    pub fn respects_power(&self, budget: f64) -> bool {
        self.power() <= budget * (1.0 + 1e-6)
    }
}

/// Spatial frequency `2π·sin θ / λ` of a plane wave.
#[inline]
pub fn spatial_frequency(theta: f64, wavelength: f64) -> f64 {
    2.0 * PI * theta.sin() / wavelength
}

/// `g(θ, t)_p = exp(−j·2π·sin θ·t_p/λ)`.
pub fn steering_vector(theta: f64, t: &[f64], wavelength: f64) -> CVector {
    let k = spatial_frequency(theta, wavelength);
    CVector::from_iterator(t.len(), t.iter().map(|&tp| Complex64::from_polar(1.0, -k * tp)))
}

/// `h = Σ_l σ_l·g(θ_l, t)`.
pub fn synthesize_channel(paths: &PathSet, t: &[f64], wavelength: f64) -> CVector {
    let mut h = CVector::zeros(t.len());
    for (gain, &theta) in paths.gains.iter().zip(&paths.angles) {
        let k = spatial_frequency(theta, wavelength);
        for (hp, &tp) in h.iter_mut().zip(t) {
            *hp += gain * Complex64::from_polar(1.0, -k * tp);
        }
    }
    h
}

/// Channels of every user at positions `t`.
pub fn synthesize_channels(users: &[PathSet], t: &[f64], wavelength: f64) -> Vec<CVector> {
    users
        .iter()
        .map(|p| synthesize_channel(p, t, wavelength))
        .collect()
}

#[inline]
fn inner_sqr(h: &CVector, w: nalgebra::DVectorView<'_, Complex64>) -> f64 {
    h.iter()
        .zip(w.iter())
        .map(|(a, b)| a.conj() * b)
        .sum::<Complex64>()
        .norm_sqr()
}

/// SINR of user `k`: `|h_kᴴ w_k|² / (Σ_{i≠k} |h_kᴴ w_i|² + σ²)`.
pub fn sinr(channels: &[CVector], w: &CMatrix, noise: f64, k: usize) -> f64 {
    let h = &channels[k];
    let mut signal = 0.0;
    let mut interference = 0.0;
    for (i, col) in w.column_iter().enumerate() {
        let p = inner_sqr(h, col);
        if i == k {
            signal = p;
        } else {
            interference += p;
        }
    }
    signal / (interference + noise)
}

/// SINR of every user.
pub fn sinr_all(channels: &[CVector], w: &CMatrix, noise: f64) -> Vec<f64> {
    (0..channels.len()).map(|k| sinr(channels, w, noise, k)).collect()
}

/// Transmit beampattern gain `‖a(θ,t)ᴴ W_D‖² = Σ_k |aᴴ w_k|²`.
pub fn beampattern_gain(t: &[f64], w: &CMatrix, theta: f64, wavelength: f64) -> f64 {
    let a = steering_vector(theta, t, wavelength);
    w.column_iter().map(|c| inner_sqr(&a, c)).sum()
}

/// Beampattern gain on a grid of angles (radians).
pub fn beampattern_sweep(t: &[f64], w: &CMatrix, wavelength: f64, grid: &[f64]) -> Vec<f64> {
    grid.iter()
        .map(|&theta| beampattern_gain(t, w, theta, wavelength))
        .collect()
}

/// `V_{ki} = |h_kᴴ w_i|²`.
pub fn coupling_v(channels: &[CVector], w: &CMatrix) -> RMatrix {
    let k = channels.len();
    RMatrix::from_fn(k, w.ncols(), |row, col| inner_sqr(&channels[row], w.column(col)))
}

/// `V_{ki} = tr(H_k W_i) = h_kᴴ W_i h_k` from lifted matrices.
pub fn coupling_v_lifted(channels: &[CVector], lifted: &[CMatrix]) -> RMatrix {
    RMatrix::from_fn(channels.len(), lifted.len(), |k, i| {
        quadratic_form(&channels[k], &lifted[i])
    })
}

/// `Re(xᴴ M x)` for Hermitian `M`.
pub fn quadratic_form(x: &CVector, m: &CMatrix) -> f64 {
    (x.adjoint() * m * x)[(0, 0)].re
}

/// `‖Q − V‖_∞` (entrywise maximum).
pub fn violation(q: &RMatrix, v: &RMatrix) -> f64 {
    assert_eq!(q.shape(), v.shape());
    q.iter()
        .zip(v.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// `(1/2ρ)·‖Q − V + ρξ‖²_F`.
pub fn penalty_term(q: &RMatrix, v: &RMatrix, xi: &RMatrix, rho: f64) -> f64 {
    let r = q - v + xi * rho;
    r.norm_squared() / (2.0 * rho)
}

/// Penalty state of the augmented Lagrangian: auxiliary `Q`, dual `ξ` and
/// penalty `ρ`.
#[derive(Debug, Clone, Copy)]
pub struct Penalty<'a> {
    pub q: &'a RMatrix,
    pub xi: &'a RMatrix,
    pub rho: f64,
}

/// Augmented-Lagrangian objective for lifted beamformers.
pub fn al_objective_lifted(
    t: &[f64],
    lifted: &[CMatrix],
    pen: Penalty<'_>,
    target_angle: f64,
    wavelength: f64,
    channels: &[CVector],
) -> f64 {
    let a = steering_vector(target_angle, t, wavelength);
    let gain: f64 = lifted.iter().map(|w| quadratic_form(&a, w)).sum();
    let v = coupling_v_lifted(channels, lifted);
    -gain + penalty_term(pen.q, &v, pen.xi, pen.rho)
}

/// Augmented-Lagrangian objective for a vector beamformer (`W_k = w_k w_kᴴ`).
pub fn al_objective(
    t: &[f64],
    w: &CMatrix,
    pen: Penalty<'_>,
    target_angle: f64,
    wavelength: f64,
    channels: &[CVector],
) -> f64 {
    let v = coupling_v(channels, w);
    -beampattern_gain(t, w, target_angle, wavelength) + penalty_term(pen.q, &v, pen.xi, pen.rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_cmatrix(rng: &mut impl Rng, r: usize, cols: usize) -> CMatrix {
        CMatrix::from_fn(r, cols, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    fn random_paths(rng: &mut impl Rng, n: usize) -> PathSet {
        let gains = (0..n).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let angles = (0..n).map(|_| rng.random_range(-1.5..1.5)).collect();
        PathSet::new(gains, angles, 100.0)
    }

    #[test]
    fn broadside_steering_is_all_ones() {
        let a = steering_vector(0.0, &[0.0, 0.3, 1.7], 0.1);
        assert!(a.iter().all(|x| (x - c(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn endfire_half_wavelength() {
        let a = steering_vector(PI / 2.0, &[0.0, 0.5], 1.0);
        assert!((a[0] - c(1.0, 0.0)).norm() < 1e-12);
        assert!((a[1] - c(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn channel_examples() {
        let t = [0.0, 0.4, 0.9];
        let single = PathSet::new(vec![c(1.0, 0.0)], vec![0.0], 10.0);
        let h = synthesize_channel(&single, &t, 0.1);
        assert!(h.iter().all(|x| (x - c(1.0, 0.0)).norm() < 1e-15));
        let cancel = PathSet::new(vec![c(0.3, -0.2), c(-0.3, 0.2)], vec![0.4, 0.4], 10.0);
        assert!(synthesize_channel(&cancel, &t, 0.1).norm() < 1e-15);
    }

    #[test]
    fn channel_lipschitz_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let lambda = 0.1;
        for _ in 0..200 {
            let n = rng.random_range(1..8);
            let count = rng.random_range(1..6);
            let paths = random_paths(&mut rng, count);
            let t: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0)).collect();
            let d: Vec<f64> = (0..n).map(|_| rng.random_range(-1e-3..1e-3)).collect();
            let t2: Vec<f64> = t.iter().zip(&d).map(|(a, b)| a + b).collect();
            let h1 = synthesize_channel(&paths, &t, lambda);
            let h2 = synthesize_channel(&paths, &t2, lambda);
            let dn = d.iter().map(|x| x * x).sum::<f64>().sqrt();
            let sum_gain: f64 = paths.gains.iter().map(|g| g.norm()).sum();
            let bound = 2.0 * PI / lambda * sum_gain * (n as f64).sqrt() * dn;
            assert!((h1.norm() - h2.norm()).abs() <= bound + 1e-15);
        }
    }

    #[test]
    fn sinr_examples() {
        let h = vec![CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 1.0)])];
        // |hᴴw|² = (√½ + √½)² = 2
        let w = CMatrix::from_column_slice(2, 1, &[c(0.5f64.sqrt(), 0.0), c(0.0, 0.5f64.sqrt())]);
        assert!((sinr(&h, &w, 1.0, 0) - 2.0).abs() < 1e-12);

        let h = vec![
            CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]),
            CVector::from_vec(vec![c(0.0, 0.0), c(2.0, 0.0)]),
        ];
        let w = CMatrix::from_column_slice(2, 2, &[c(3.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 1.0)]);
        assert!((sinr(&h, &w, 0.5, 0) - 9.0 / 0.5).abs() < 1e-12);
        assert!((sinr(&h, &w, 0.5, 1) - 8.0 / 0.5).abs() < 1e-12);
    }

    #[test]
    fn sinr_matches_coupling_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let (n, k) = (rng.random_range(1..7), rng.random_range(1..5));
            let h: Vec<CVector> = (0..k).map(|_| random_cmatrix(&mut rng, n, 1).column(0).into_owned()).collect();
            let w = random_cmatrix(&mut rng, n, k);
            let v = coupling_v(&h, &w);
            for user in 0..k {
                let interf: f64 = (0..k).filter(|&i| i != user).map(|i| v[(user, i)]).sum();
                let from_v = v[(user, user)] / (interf + 0.3);
                let direct = sinr(&h, &w, 0.3, user);
                assert!(((from_v - direct) / direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn beampattern_examples() {
        let p: f64 = 2.5;
        let w = CMatrix::from_element(1, 1, c(p.sqrt(), 0.0));
        assert!((beampattern_gain(&[0.3], &w, 0.2, 0.1) - p).abs() < 1e-12);

        let t = [0.0, 0.07, 0.2, 0.31];
        let theta = 0.4;
        let a = steering_vector(theta, &t, 0.1);
        let w = CMatrix::from_column_slice(4, 1, (a.clone() * c((p / 4.0).sqrt(), 0.0)).as_slice());
        assert!((beampattern_gain(&t, &w, theta, 0.1) - 4.0 * p).abs() < 1e-12);
    }

    #[test]
    fn sweep_examples() {
        let t = [0.0, 0.05, 0.10, 0.15];
        let w = CMatrix::from_element(4, 1, c(0.5, 0.0));
        let g = beampattern_sweep(&t, &w, 0.1, &[0.3]);
        assert_eq!(g, vec![beampattern_gain(&t, &w, 0.3, 0.1)]);

        let grid: Vec<f64> = (-90..=90).map(|d| (d as f64).to_radians()).collect();
        let pat = beampattern_sweep(&t, &w, 0.1, &grid);
        let peak = pat
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(peak, 90, "broadside peak at 0°");

        // symmetric positions, real symmetric weights → symmetric pattern
        let ts = [-0.3, -0.1, 0.1, 0.3];
        let ws = CMatrix::from_column_slice(4, 2, &[c(0.2, 0.0), c(0.7, 0.0), c(0.7, 0.0), c(0.2, 0.0), c(-0.4, 0.0), c(0.1, 0.0), c(0.1, 0.0), c(-0.4, 0.0)]);
        for th in [0.1, 0.5, 1.2] {
            let a = beampattern_gain(&ts, &ws, th, 0.1);
            let b = beampattern_gain(&ts, &ws, -th, 0.1);
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn coupling_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h: Vec<CVector> = (0..3).map(|_| random_cmatrix(&mut rng, 4, 1).column(0).into_owned()).collect();
        assert!(coupling_v(&h, &CMatrix::zeros(4, 3)).iter().all(|&x| x == 0.0));
        let w = random_cmatrix(&mut rng, 4, 3);
        let v1 = coupling_v(&h, &w);
        let bf = Beamformer::new(w);
        let v2 = coupling_v_lifted(&h, &bf.outer_products());
        for (a, b) in v1.iter().zip(v2.iter()) {
            assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-300));
            assert!(*a >= 0.0);
        }
        let w1 = random_cmatrix(&mut rng, 4, 1);
        let v = coupling_v(&h[..1], &w1);
        let direct = (h[0].adjoint() * &w1)[(0, 0)].norm_sqr();
        assert!((v[(0, 0)] - direct).abs() < 1e-12);
    }

    #[test]
    fn objective_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let t = [0.0, 0.06, 0.2];
        let h: Vec<CVector> = (0..2).map(|_| random_cmatrix(&mut rng, 3, 1).column(0).into_owned()).collect();
        let zero = RMatrix::zeros(2, 2);
        let f0 = al_objective(&t, &CMatrix::zeros(3, 2), Penalty { q: &zero, xi: &zero, rho: 0.7 }, 0.3, 0.1, &h);
        assert_eq!(f0, 0.0);

        let w = random_cmatrix(&mut rng, 3, 2);
        let v = coupling_v(&h, &w);
        let f = al_objective(&t, &w, Penalty { q: &v, xi: &zero, rho: 0.7 }, 0.3, 0.1, &h);
        assert!((f + beampattern_gain(&t, &w, 0.3, 0.1)).abs() < 1e-12);

        // independent re-evaluation from raw definitions
        let q = RMatrix::from_fn(2, 2, |_, _| rng.random_range(0.0..3.0));
        let xi = RMatrix::from_fn(2, 2, |_, _| rng.random_range(-1.0..1.0));
        let rho = 0.37;
        let f = al_objective(&t, &w, Penalty { q: &q, xi: &xi, rho }, 0.3, 0.1, &h);
        let mut gain = 0.0;
        for col in 0..2 {
            let mut s = c(0.0, 0.0);
            for p in 0..3 {
                let ap = Complex64::from_polar(1.0, -2.0 * PI * 0.3f64.sin() * t[p] / 0.1);
                s += ap.conj() * w[(p, col)];
            }
            gain += s.norm_sqr();
        }
        let mut pen = 0.0;
        for k in 0..2 {
            for i in 0..2 {
                let mut s = c(0.0, 0.0);
                for p in 0..3 {
                    s += h[k][p].conj() * w[(p, i)];
                }
                let r = q[(k, i)] - s.norm_sqr() + rho * xi[(k, i)];
                pen += r * r;
            }
        }
        let expect = -gain + pen / (2.0 * rho);
        assert!(((f - expect) / expect).abs() < 1e-12);
        let fl = al_objective_lifted(&t, &Beamformer::new(w).outer_products(), Penalty { q: &q, xi: &xi, rho }, 0.3, 0.1, &h);
        assert!(((fl - expect) / expect).abs() < 1e-12);
    }

    #[test]
    fn violation_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let q = RMatrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0));
        assert_eq!(violation(&q, &q), 0.0);
        let mut v = q.clone();
        v[(1, 2)] -= 3e-4;
        assert!((violation(&q, &v) - 3e-4).abs() < 1e-15);
        let v = RMatrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0));
        let mut brute = 0.0f64;
        for r in 0..3 {
            for cc in 0..3 {
                brute = brute.max((q[(r, cc)] - v[(r, cc)]).abs());
            }
        }
        assert_eq!(violation(&q, &v), brute);
    }

    proptest! {
        #[test]
        fn steering_has_unit_modulus(theta in -3.2f64..3.2, t in proptest::collection::vec(0.0f64..10.0, 1..12)) {
            let a = steering_vector(theta, &t, 0.1);
            for x in a.iter() {
                prop_assert!((x.norm() - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn sinr_scale_invariant(seed in any::<u64>(), scale_re in 0.01f64..100.0, scale_im in -50.0f64..50.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h: Vec<CVector> = (0..3).map(|_| random_cmatrix(&mut rng, 4, 1).column(0).into_owned()).collect();
            let w = random_cmatrix(&mut rng, 4, 3);
            let cs = c(scale_re, scale_im);
            let hs: Vec<CVector> = h.iter().map(|x| x * cs).collect();
            for k in 0..3 {
                let a = sinr(&h, &w, 0.2, k);
                let b = sinr(&hs, &w, 0.2 * cs.norm_sqr(), k);
                prop_assert!(((a - b) / a).abs() < 1e-10);
            }
        }
    }
}
