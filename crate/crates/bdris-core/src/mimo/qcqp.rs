//! QCQP subproblem machinery for the Θ update.
//!
//! Restricted to the block-diagonal support of Θ, the weighted MSE is a
//! quadratic in `θ = [vec(Θ_1); ...; vec(Θ_G)]`:
//!
//! ```text
//! min_θ  θ^H (B₁ + B₂) θ - 2 Re{θ^H c}   s.t.   θ^H D θ ≤ P_A
//! ```
//!
//! with Kronecker-structured blocks built from
//! `M₁ = H_IT F F^H H_IT^H`, `M₂ = H_RI^H W U W^H H_RI`, and
//! `C = H_RI^H W U (I - W^H H_RT F) F^H H_IT^H`:
//!
//! ```text
//! B₁,g,g' = (M₁[g',g])^T ⊗ M₂[g,g']      B₂,g = σ_I² I ⊗ M₂[g,g]
//! c_g     = vec(C[g,g])                  D_g  = (M₁[g,g])^T ⊗ I + σ_I² I
//! ```
//!
//! A reciprocal architecture keeps only the packed entries of each symmetric
//! block through the binary map `P` (`B̄ = P^T B P`, etc.). The solver runs a
//! Lagrangian bisection on `θ(μ) = (B + μD)^{-1} c`; for the fully-connected
//! non-reciprocal case `B + μD = (M₁ + σ_I² I)^T ⊗ (M₂ + μI)` factors
//! exactly, so the update costs `O(N_I³)` instead of `O(N_I⁶)`.

use super::MimoProblem;
use crate::linalg::{hermitian_part, kron, unvec, vec_of};
use crate::netcore::ThetaMatrix;
use crate::{C64, CMat, CVec, Error, Result};
use nalgebra::DVector;

/// Guardrail on the dense QCQP vector dimension.
pub const QCQP_DIMENSION_CAP: usize = 4096;

/// Canonical ball-constrained quadratic program.
#[derive(Debug, Clone)]
pub struct QcqpCanonical {
    /// Hermitian PSD quadratic term (`B₁ + B₂` or the barred version).
    pub b: CMat,
    /// Linear term.
    pub c: CVec,
    /// Hermitian PD constraint metric.
    pub d: CMat,
    /// Constraint budget in watts.
    pub budget: f64,
}

impl QcqpCanonical {
    pub fn new(b: CMat, c: CVec, d: CMat, budget: f64) -> Result<Self> {
        let n = c.len();
        if b.nrows() != n || b.ncols() != n || d.nrows() != n || d.ncols() != n {
            return Err(Error::dims("QcqpCanonical", format!("{n}x{n}"), format!("B {}x{}, D {}x{}", b.nrows(), b.ncols(), d.nrows(), d.ncols())));
        }
        if !budget.is_finite() || budget < 0.0 {
            return Err(Error::InvalidParameter { name: "budget", message: format!("must be finite and non-negative, got {budget}") });
        }
        Ok(Self { b, c, d, budget })
    }

    /// Objective `θ^H B θ - 2 Re{θ^H c}`.
    pub fn objective(&self, theta: &CVec) -> f64 {
        let quad = theta.dotc(&(&self.b * theta)).re;
        let lin = theta.dotc(&self.c).re;
        quad - 2.0 * lin
    }

    /// Constraint value `θ^H D θ`.
    pub fn constraint(&self, theta: &CVec) -> f64 {
        theta.dotc(&(&self.d * theta)).re
    }
}

/// Binary map between `vec(Θ_g)` and the packed entries of a symmetric
/// `N_G × N_G` block: `vec(Θ_g) = P θ̄_g` with
/// `P ∈ {0,1}^{N_G² × N_G(N_G+1)/2}`.
#[derive(Debug, Clone)]
pub struct SymmetricMap {
    n_g: usize,
    p: CMat,
}

impl SymmetricMap {
    pub fn new(n_g: usize) -> Self {
        let rows = n_g * n_g;
        let cols = n_g * (n_g + 1) / 2;
        let mut p = CMat::zeros(rows, cols);
        for ci in 0..n_g {
            for ri in 0..n_g {
                let row = n_g * ci + ri;
                let l = if ri <= ci {
                    ci * (ci + 1) / 2 + ri
                } else {
                    ri * (ri + 1) / 2 + ci
                };
                p[(row, l)] = C64::new(1.0, 0.0);
            }
        }
        Self { n_g, p }
    }

    pub fn n_g(&self) -> usize {
        self.n_g
    }

    pub fn packed_len(&self) -> usize {
        self.n_g * (self.n_g + 1) / 2
    }

    pub fn matrix(&self) -> &CMat {
        &self.p
    }

    /// `θ_g = P θ̄_g`.
    pub fn expand(&self, packed: &CVec) -> CVec {
        &self.p * packed
    }
}

/// Monotone-decreasing bisection: smallest `μ ≥ 0` with `g(μ) ≤ budget`.
///
/// The bracket grows tenfold from 1 until the constraint is satisfied, then
/// 60 halvings squeeze the boundary (≈1e-18 relative bracket).
pub(crate) fn bisect_decreasing<F: Fn(f64) -> f64>(g: F, budget: f64) -> Result<f64> {
    if g(0.0) <= budget {
        return Ok(0.0);
    }
    let mut hi = 1.0f64;
    let mut grew = 0usize;
    while g(hi) > budget {
        hi *= 10.0;
        grew += 1;
        if grew > 60 {
            return Err(Error::BisectionBracket { value: g(hi), budget, mu_max: hi });
        }
    }
    let mut lo = if grew > 0 { hi / 10.0 } else { 0.0 };
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Solves the ball-constrained QCQP via `θ(μ) = (B + μD)^{-1} c` with the
/// multiplier found by bisection on the monotone constraint value.
///
/// Returns `(θ*, μ*)`: either `μ* = 0` with the constraint slack, or
/// `μ* > 0` with `θ^H D θ = budget` to the bisection resolution.
pub fn solve_qcqp_ball(q: &QcqpCanonical) -> Result<(CVec, f64)> {
    let n = q.c.len();
    if q.budget == 0.0 {
        return Ok((CVec::zeros(n), 0.0));
    }
    let chol = hermitian_part(&q.d)
        .cholesky()
        .ok_or(Error::InvalidParameter { name: "qcqp", message: "constraint metric D is not positive definite".into() })?;
    let l = chol.l();
    // whiten: B~ = L^{-1} B L^{-H}, c~ = L^{-1} c
    let y = l
        .solve_lower_triangular(&q.b)
        .ok_or(Error::SingularSystem { context: "qcqp Cholesky factor" })?;
    let z = l
        .solve_lower_triangular(&y.adjoint())
        .ok_or(Error::SingularSystem { context: "qcqp Cholesky factor" })?;
    let b_white = hermitian_part(&z.adjoint());
    let c_white = l
        .solve_lower_triangular(&CMat::from_column_slice(n, 1, q.c.as_slice()))
        .ok_or(Error::SingularSystem { context: "qcqp Cholesky factor" })?;

    let eig = b_white.symmetric_eigen();
    let lambda: DVector<f64> = eig.eigenvalues.map(|v| v.max(0.0));
    let lam_max = lambda.max();
    let mut z_spec = eig.eigenvectors.adjoint() * c_white.column(0);
    // components on the numerical null space of B carry no true signal (the
    // linear term lies in range(B)); drop rounding noise there so an interior
    // optimum is not misread as boundary-active
    let lam_floor = lam_max * 1e-12;
    let z_norm = z_spec.norm();
    for i in 0..n {
        if lambda[i] <= lam_floor && z_spec[i].norm() <= 1e-8 * z_norm.max(1e-300) {
            z_spec[i] = C64::new(0.0, 0.0);
        }
    }

    let g = |mu: f64| -> f64 {
        let mut acc = 0.0;
        for i in 0..n {
            let w = z_spec[i].norm_sqr();
            if w == 0.0 {
                continue;
            }
            let den = lambda[i] + mu;
            if den <= 0.0 {
                return f64::INFINITY;
            }
            acc += w / (den * den);
        }
        acc
    };
    let mu = bisect_decreasing(g, q.budget)?;

    let mut y_spec = CVec::zeros(n);
    for i in 0..n {
        let den = lambda[i] + mu;
        if z_spec[i].norm_sqr() > 0.0 && den > 0.0 {
            y_spec[i] = z_spec[i] / den;
        }
    }
    let theta_white = &eig.eigenvectors * y_spec;
    let theta = l
        .adjoint()
        .solve_upper_triangular(&CMat::from_column_slice(n, 1, theta_white.as_slice()))
        .ok_or(Error::SingularSystem { context: "qcqp Cholesky factor" })?;
    Ok((theta.column(0).into_owned(), mu))
}

/// The Θ-independent factors of the weighted-MSE quadratic model.
#[derive(Debug, Clone)]
pub(crate) struct ThetaParts {
    /// `H_IT F F^H H_IT^H`, Hermitian PSD, `N_I × N_I`.
    pub m1: CMat,
    /// `H_RI^H W U W^H H_RI`, Hermitian PSD, `N_I × N_I`.
    pub m2: CMat,
    /// `H_RI^H W U (I - W^H H_RT F) F^H H_IT^H`, `N_I × N_I`.
    pub cmat: CMat,
    pub sigma_i_sq: f64,
    pub budget: f64,
}

pub(crate) fn theta_parts(problem: &MimoProblem, w: &CMat, u: &CMat, f: &CMat) -> ThetaParts {
    let ch = &problem.channels;
    let n_s = problem.n_s;
    let hit_f = &ch.h_it * f;
    let m1 = hermitian_part(&(&hit_f * hit_f.adjoint()));
    let ri_w = ch.h_ri.adjoint() * w;
    let m2 = hermitian_part(&(&ri_w * u * ri_w.adjoint()));
    let inner = u * (CMat::identity(n_s, n_s) - w.adjoint() * &ch.h_rt * f);
    let cmat = &ri_w * inner * hit_f.adjoint();
    ThetaParts { m1, m2, cmat, sigma_i_sq: problem.noise.sigma_i_sq, budget: problem.pb.p_a }
}

/// Quadratic model value `θ^H(B₁+B₂)θ - 2Re{θ^H c}` evaluated directly on a
/// block-diagonal Θ.
pub(crate) fn theta_model_value(parts: &ThetaParts, theta: &CMat) -> f64 {
    let quad1 = (theta.adjoint() * &parts.m2 * theta * &parts.m1).trace().re;
    let quad2 = parts.sigma_i_sq * (theta.adjoint() * &parts.m2 * theta).trace().re;
    let lin = (theta.adjoint() * &parts.cmat).trace().re;
    quad1 + quad2 - 2.0 * lin
}

/// Radiated power of the surface for a given precoder:
/// `‖Θ H_IT F‖_F² + σ_I² ‖Θ‖_F²`.
pub fn radiated_power_mimo(theta: &CMat, h_it: &CMat, f: &CMat, sigma_i_sq: f64) -> f64 {
    (theta * h_it * f).norm_squared() + sigma_i_sq * theta.norm_squared()
}

fn block(m: &CMat, g_row: usize, g_col: usize, ng: usize) -> CMat {
    m.view((g_row * ng, g_col * ng), (ng, ng)).into_owned()
}

/// Assembles the canonical QCQP of the Θ subproblem for the problem's
/// architecture (packed through [`SymmetricMap`] when reciprocal).
pub fn build_theta_qcqp(problem: &MimoProblem, w: &CMat, u: &CMat, f: &CMat) -> Result<QcqpCanonical> {
    let parts = theta_parts(problem, w, u, f);
    build_from_parts(problem, &parts)
}

pub(crate) fn build_from_parts(problem: &MimoProblem, parts: &ThetaParts) -> Result<QcqpCanonical> {
    let arch = &problem.arch;
    let ng = arch.group_size();
    let groups = arch.groups();
    let reciprocal = arch.reciprocal();
    let map = SymmetricMap::new(ng);
    let per = if reciprocal { map.packed_len() } else { ng * ng };
    let dim = groups * per;
    if problem.n_i() * ng > QCQP_DIMENSION_CAP {
        return Err(Error::ProblemTooLarge { dim: problem.n_i() * ng, cap: QCQP_DIMENSION_CAP });
    }

    let eye = CMat::identity(ng, ng);
    let sigma = parts.sigma_i_sq;
    let mut b = CMat::zeros(dim, dim);
    let mut d = CMat::zeros(dim, dim);
    let mut c = CVec::zeros(dim);
    for g in 0..groups {
        for gp in 0..groups {
            // B₁,g,g' = (M₁[g',g])^T ⊗ M₂[g,g']
            let mut blk = kron(&block(&parts.m1, gp, g, ng).transpose(), &block(&parts.m2, g, gp, ng));
            if g == gp {
                blk += kron(&eye, &block(&parts.m2, g, g, ng)).scale(sigma);
            }
            if reciprocal {
                blk = map.matrix().transpose() * blk * map.matrix();
            }
            b.view_mut((g * per, gp * per), (per, per)).copy_from(&blk);
        }
        let mut dg = kron(&block(&parts.m1, g, g, ng).transpose(), &eye);
        dg += CMat::identity(ng * ng, ng * ng).scale(sigma);
        let mut cg = vec_of(&block(&parts.cmat, g, g, ng));
        if reciprocal {
            dg = map.matrix().transpose() * dg * map.matrix();
            cg = map.matrix().transpose() * cg;
        }
        d.view_mut((g * per, g * per), (per, per)).copy_from(&dg);
        c.rows_mut(g * per, per).copy_from(&cg);
    }
    QcqpCanonical::new(hermitian_part(&b), c, hermitian_part(&d), parts.budget)
}

/// Reconstructs the block-diagonal Θ from the stacked solution vector.
fn theta_from_solution(problem: &MimoProblem, sol: &CVec) -> Result<ThetaMatrix> {
    let arch = &problem.arch;
    let ng = arch.group_size();
    let map = SymmetricMap::new(ng);
    let per = if arch.reciprocal() { map.packed_len() } else { ng * ng };
    let mut blocks = Vec::with_capacity(arch.groups());
    for g in 0..arch.groups() {
        let seg = sol.rows(g * per, per).into_owned();
        let full = if arch.reciprocal() { map.expand(&seg) } else { seg };
        blocks.push(unvec(&full, ng, ng));
    }
    ThetaMatrix::from_blocks(&blocks, arch.reciprocal(), crate::netcore::DEFAULT_STRUCT_TOL)
}

/// Optimal Θ of the weighted-MSE subproblem for fixed `(W, U, F)`.
///
/// Fully-connected non-reciprocal surfaces use the exact Kronecker
/// factorization `B + μD = (M₁ + σ_I²I)^T ⊗ (M₂ + μI)`; every other
/// architecture goes through the dense canonical form. The previous Θ is kept
/// whenever the (convex) subproblem solution fails to improve the model,
/// which can only happen through rounding.
pub fn update_theta(problem: &MimoProblem, prev_theta: &ThetaMatrix, w: &CMat, u: &CMat, f: &CMat) -> Result<ThetaMatrix> {
    let parts = theta_parts(problem, w, u, f);
    let candidate = if problem.arch.is_fully_connected() && !problem.arch.reciprocal() {
        update_theta_full_nonreciprocal(problem, &parts)?
    } else {
        let q = build_from_parts(problem, &parts)?;
        let (sol, _mu) = solve_qcqp_ball(&q)?;
        theta_from_solution(problem, &sol)?
    };
    let prev_val = theta_model_value(&parts, prev_theta.matrix());
    let new_val = theta_model_value(&parts, candidate.matrix());
    if new_val <= prev_val + 1e-10 * prev_val.abs().max(1.0) {
        Ok(candidate)
    } else {
        Ok(prev_theta.clone())
    }
}

/// Kronecker fast path: `Θ(μ) = (M₂ + μI)^{-1} C (M₁ + σ_I²I)^{-1}` in the
/// joint eigenbasis, with the constraint value available in closed form.
fn update_theta_full_nonreciprocal(problem: &MimoProblem, parts: &ThetaParts) -> Result<ThetaMatrix> {
    let n = problem.n_i();
    if parts.budget == 0.0 {
        return ThetaMatrix::new(CMat::zeros(n, n), problem.arch.clone(), crate::netcore::DEFAULT_STRUCT_TOL);
    }
    let eig2 = parts.m2.clone().symmetric_eigen();
    let lam2: DVector<f64> = eig2.eigenvalues.map(|v| v.max(0.0));
    let m1s = &parts.m1 + CMat::identity(n, n).scale(parts.sigma_i_sq);
    let eig1 = hermitian_part(&m1s).symmetric_eigen();
    let lam1: DVector<f64> = eig1.eigenvalues.map(|v| v.max(1e-300));

    let mut c_tilde = eig2.eigenvectors.adjoint() * &parts.cmat * &eig1.eigenvectors;
    let lam2_max = lam2.max();
    let floor = lam2_max * 1e-12;
    let c_norm = c_tilde.norm();
    for i in 0..n {
        if lam2[i] <= floor {
            for j in 0..n {
                if c_tilde[(i, j)].norm() <= 1e-8 * c_norm.max(1e-300) {
                    c_tilde[(i, j)] = C64::new(0.0, 0.0);
                }
            }
        }
    }

    let g = |mu: f64| -> f64 {
        let mut acc = 0.0;
        for i in 0..n {
            let den_i = lam2[i] + mu;
            for j in 0..n {
                let w = c_tilde[(i, j)].norm_sqr();
                if w == 0.0 {
                    continue;
                }
                if den_i <= 0.0 {
                    return f64::INFINITY;
                }
                acc += w / (den_i * den_i * lam1[j]);
            }
        }
        acc
    };
    let mu = bisect_decreasing(g, parts.budget)?;

    let mut theta_tilde = CMat::zeros(n, n);
    for i in 0..n {
        let den_i = lam2[i] + mu;
        for j in 0..n {
            if c_tilde[(i, j)].norm_sqr() > 0.0 && den_i > 0.0 {
                theta_tilde[(i, j)] = c_tilde[(i, j)] / (den_i * lam1[j]);
            }
        }
    }
    let theta = &eig2.eigenvectors * theta_tilde * eig1.eigenvectors.adjoint();
    ThetaMatrix::new(theta, problem.arch.clone(), crate::netcore::DEFAULT_STRUCT_TOL)
}
