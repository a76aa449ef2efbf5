mod common;

use common::*;
use ma_isac::pgd::PositionObjective;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Max over coordinates of `|g − g_fd| / max(|g_fd|, floor)`; the floor is
/// the roundoff level of a central difference of `F` at this step.
fn fd_relative_error(obj: &PositionObjective<'_>, t: &[f64], step: f64) -> f64 {
    let g = obj.gradient(t);
    let scale = obj.value(t).abs().max(1.0);
    let floor = 1e3 * f64::EPSILON * scale / step;
    let gmax = g.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(floor);
    let mut worst = 0.0f64;
    for p in 0..t.len() {
        let mut up = t.to_vec();
        let mut dn = t.to_vec();
        up[p] += step;
        dn[p] -= step;
        let fd = (obj.value(&up) - obj.value(&dn)) / (2.0 * step);
        worst = worst.max((g[p] - fd).abs() / gmax);
    }
    worst
}

#[test]
fn analytic_gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let lambda = 0.1;
    for _ in 0..100 {
        let n = rng.random_range(1..=8);
        let k = rng.random_range(1..=4);
        let paths = rng.random_range(1..=12);
        let users = random_paths(&mut rng, k, paths, 3.0);
        let lifted = random_lifted(&mut rng, n, k, 1.0);
        let q = random_matrix(&mut rng, k, 0.0, 20.0);
        let xi = random_matrix(&mut rng, k, -2.0, 2.0);
        let obj = PositionObjective {
            lifted: &lifted,
            q: &q,
            xi: &xi,
            rho: rng.random_range(0.05..1.0),
            users: &users,
            target_angle: rng.random_range(-1.2..1.2),
            wavelength: lambda,
        };
        let t = random_positions(&mut rng, n, 15.0 * lambda, lambda);
        let err = fd_relative_error(&obj, &t, 1e-6 * lambda);
        assert!(err <= 1e-5, "relative error {err:.3e}");
    }
}
