//! Seeded random fixtures shared by the unit tests.

use crate::{C64, CMat, CVec};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(r: usize, c: usize, rng: &mut ChaCha8Rng) -> CMat {
    CMat::from_fn(r, c, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
}

pub fn random_vector(n: usize, rng: &mut ChaCha8Rng) -> CVec {
    CVec::from_fn(n, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
}

/// Haar-ish random unitary via QR of a complex Gaussian-like matrix with the
/// R-diagonal phase absorbed into Q.
pub fn random_unitary(n: usize, rng: &mut ChaCha8Rng) -> CMat {
    let qr = random_matrix(n, n, rng).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let ph = d / d.norm();
            for i in 0..n {
                q[(i, j)] *= ph;
            }
        }
    }
    q
}

/// Random complex symmetric matrix `M + M^T`.
pub fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> CMat {
    let m = random_matrix(n, n, rng);
    &m + m.transpose()
}
