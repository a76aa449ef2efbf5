//! Joint movable-antenna placement and downlink beamforming for integrated
//! sensing and communication (ISAC).
//!
//! A base station with `N_t` movable antennas on a line segment of length `L`
//! serves `K` single-antenna users while steering transmit power toward a
//! sensing target. The crate maximizes the transmit beampattern gain toward
//! the target subject to per-user SINR constraints, a total power budget and
//! the aperture / minimum-spacing geometry of the array, using a
//! penalty-dual-decomposition double loop:
//!
//! * inner loop: block coordinate descent alternating a convex SDP over the
//!   lifted beamformers ([`sdr`]) and projected gradient descent over the
//!   antenna positions ([`pgd`]);
//! * outer loop: dual ascent on the coupling constraint with a geometrically
//!   decaying penalty ([`pdd`]).
//!
//! Fixed-array, random-array and upper-bound baselines live in
//! [`baselines`]; the Monte Carlo / CLI plumbing lives in [`harness`].

// Links the system OpenBLAS used by the conic solver's dense PSD kernels.
extern crate openblas_src;

pub mod baselines;
pub mod channel;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod pdd;
pub mod pgd;
pub mod scenario;
pub mod sdr;

pub use error::{ConfigError, SdpError};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Complex column vector (steering vectors, channels, beamformers).
pub type CVector = DVector<Complex64>;
/// Complex dense matrix (beamforming matrix, lifted covariances).
pub type CMatrix = DMatrix<Complex64>;
/// Real dense matrix (coupling matrix `V`, auxiliary `Q`, duals).
pub type RMatrix = DMatrix<f64>;

/// `10·log10(x)`, with `-inf` for non-positive input.
pub fn to_db(x: f64) -> f64 {
    if x > 0.0 {
        10.0 * x.log10()
    } else {
        f64::NEG_INFINITY
    }
}

/// Inverse of [`to_db`].
pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
