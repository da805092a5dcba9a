//! Shared fixtures for the integration suites.
#![allow(dead_code)]

use bdris_core::channel::{ChannelRealization, SeedProvenance};
use bdris_core::netcore::{Architecture, NoiseModel};
use bdris_core::siso::PowerBudget;
use bdris_core::{C64, CMat, CVec};
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

pub fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> CMat {
    let m = random_matrix(n, n, rng);
    &m + m.transpose()
}

pub fn random_psd(n: usize, rng: &mut ChaCha8Rng) -> CMat {
    let m = random_matrix(n, n, rng);
    (&m * m.adjoint() + (&m * m.adjoint()).adjoint()).scale(0.5)
}

/// Random well-scaled MIMO problem (O(1) channels, O(10^-2) noise).
pub fn toy_mimo(
    n_t: usize,
    n_r: usize,
    n_i: usize,
    n_s: usize,
    arch: Architecture,
    seed: u64,
) -> bdris_core::mimo::MimoProblem {
    let mut r = rng(seed);
    let channels = ChannelRealization {
        h_rt: random_matrix(n_r, n_t, &mut r),
        h_ri: random_matrix(n_r, n_i, &mut r),
        h_it: random_matrix(n_i, n_t, &mut r),
        provenance: SeedProvenance { master_seed: seed, trial: 0 },
    };
    let pb = PowerBudget::new(1.0, 0.5, 1.5, 0.01, 0.01).unwrap();
    let noise = NoiseModel::new(0.01, 0.01).unwrap();
    bdris_core::mimo::MimoProblem::new(channels, arch, n_s, pb, noise).unwrap()
}
