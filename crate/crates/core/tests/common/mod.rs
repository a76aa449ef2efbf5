//! Shared generators for integration and acceptance tests.
#![allow(dead_code)]

use ma_isac::geometry::{sample_random, Positions};
use ma_isac::scenario::PathSet;
use ma_isac::{CMatrix, CVector, RMatrix};
use num_complex::Complex64;
use rand::Rng;

pub fn random_paths(rng: &mut impl Rng, users: usize, paths: usize, scale: f64) -> Vec<PathSet> {
    (0..users)
        .map(|_| {
            PathSet::new(
                (0..paths)
                    .map(|_| Complex64::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale)))
                    .collect(),
                (0..paths).map(|_| rng.random_range(-1.5..1.5)).collect(),
                100.0,
            )
        })
        .collect()
}

pub fn random_lifted(rng: &mut impl Rng, n: usize, k: usize, power: f64) -> Vec<CMatrix> {
    let ws: Vec<CVector> = (0..k)
        .map(|_| CVector::from_fn(n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))))
        .collect();
    let total: f64 = ws.iter().map(|w| w.norm_squared()).sum();
    let s = Complex64::new((power / total).sqrt(), 0.0);
    ws.into_iter().map(|w| { let w = w * s; &w * w.adjoint() }).collect()
}

pub fn random_matrix(rng: &mut impl Rng, k: usize, lo: f64, hi: f64) -> RMatrix {
    RMatrix::from_fn(k, k, |_, _| rng.random_range(lo..hi))
}

pub fn random_positions(rng: &mut impl Rng, n: usize, aperture: f64, wavelength: f64) -> Positions {
    sample_random(rng, n, aperture, wavelength).unwrap()
}
