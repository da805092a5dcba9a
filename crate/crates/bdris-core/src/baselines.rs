//! Passive-RIS baselines: the same WMMSE outer loop with the Θ step replaced
//! by Riemannian conjugate-gradient descent over block-unitary matrices.
//!
//! A passive surface has no amplifiers: its scattering matrix is
//! block-unitary (each block additionally symmetric when the network is
//! reciprocal, parameterized as `Θ_g = Q_g Q_g^T`), it injects no dynamic
//! noise, and the only power constraint is the transmit budget. The Θ
//! subproblem `min Tr(U E)` restricted to the manifold is solved by
//! Polak–Ribière+ conjugate gradient with tangent-space projection
//! (skew-Hermitian form), QR retraction with phase-fixed diagonal, and
//! Armijo backtracking.

use crate::linalg::hermitian_part;
use crate::mimo::{spectral_efficiency, update_u, update_w, MimoProblem, MimoState, WmmseOptions};
use crate::netcore::{Architecture, NoiseModel, ThetaMatrix, DEFAULT_STRUCT_TOL};
use crate::{C64, CMat, Error, Result};

/// Point on the product manifold of unitary groups: one unitary factor per
/// group. The surface's scattering matrix is `Θ_g = Q_g` (non-reciprocal) or
/// `Θ_g = Q_g Q_g^T` (reciprocal).
#[derive(Debug, Clone)]
pub struct ManifoldPoint {
    blocks: Vec<CMat>,
}

impl ManifoldPoint {
    pub fn new(blocks: Vec<CMat>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidParameter { name: "blocks", message: "need at least one block".into() });
        }
        let point = Self { blocks };
        let res = point.unitarity_residual();
        if res > 1e-9 {
            return Err(Error::ToleranceViolated { what: "manifold point unitarity", residual: res, tol: 1e-9 });
        }
        Ok(point)
    }

    /// Identity point for `groups` blocks of size `group_size`.
    pub fn identity(groups: usize, group_size: usize) -> Self {
        Self { blocks: vec![CMat::identity(group_size, group_size); groups] }
    }

    pub fn blocks(&self) -> &[CMat] {
        &self.blocks
    }

    pub fn group_size(&self) -> usize {
        self.blocks[0].nrows()
    }

    /// Worst per-block deviation of `Q_g^H Q_g` from the identity.
    pub fn unitarity_residual(&self) -> f64 {
        self.blocks
            .iter()
            .map(|q| crate::linalg::unitarity_residual(q))
            .fold(0.0, f64::max)
    }

    /// Assembles the full block-diagonal scattering matrix.
    pub fn theta(&self, reciprocal: bool) -> CMat {
        let ng = self.group_size();
        let n = ng * self.blocks.len();
        let mut theta = CMat::zeros(n, n);
        for (g, q) in self.blocks.iter().enumerate() {
            let block = if reciprocal { q * q.transpose() } else { q.clone() };
            theta.view_mut((g * ng, g * ng), (ng, ng)).copy_from(&block);
        }
        theta
    }
}

/// QR retraction with the R-diagonal phases absorbed into Q, applied per
/// block. Deterministic and smooth around the identity.
fn retract(point: &ManifoldPoint, direction: &[CMat], t: f64) -> ManifoldPoint {
    let blocks = point
        .blocks
        .iter()
        .zip(direction)
        .map(|(q, d)| {
            let qr = (q + d.scale(t)).qr();
            let mut qq = qr.q();
            let r = qr.r();
            for j in 0..qq.ncols() {
                let rjj = r[(j, j)];
                if rjj.norm() > 0.0 {
                    let ph = rjj / rjj.norm();
                    for i in 0..qq.nrows() {
                        qq[(i, j)] *= ph;
                    }
                }
            }
            qq
        })
        .collect();
    ManifoldPoint { blocks }
}

/// Projects a Euclidean gradient onto the tangent space of the unitary group
/// at `Q`: `ξ = Q · skewH(Q^H Z)`.
fn project_tangent(point: &ManifoldPoint, euclidean: &[CMat]) -> Vec<CMat> {
    point
        .blocks
        .iter()
        .zip(euclidean)
        .map(|(q, z)| {
            let m = q.adjoint() * z;
            let skew = (&m - m.adjoint()).scale(0.5);
            q * skew
        })
        .collect()
}

fn inner(a: &[CMat], b: &[CMat]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dotc(y).re).sum()
}

/// Conjugate-gradient memory carried across steps.
#[derive(Debug, Clone, Default)]
pub struct CgMemory {
    prev_grad: Option<Vec<CMat>>,
    prev_dir: Option<Vec<CMat>>,
    last_step: f64,
}

/// Outcome of one CG step.
#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub point: ManifoldPoint,
    pub value: f64,
    pub grad_norm: f64,
    /// Line search failed after the backtracking cap; the point is unchanged.
    pub stalled: bool,
}

/// One Riemannian CG step with Polak–Ribière+ direction and Armijo
/// backtracking; the objective never increases.
pub fn riemannian_cg_step<F, G>(objective: &F, euclid_grad: &G, point: &ManifoldPoint, memory: &mut CgMemory) -> CgOutcome
where
    F: Fn(&ManifoldPoint) -> f64,
    G: Fn(&ManifoldPoint) -> Vec<CMat>,
{
    let grad = project_tangent(point, &euclid_grad(point));
    let grad_sq = inner(&grad, &grad);
    let grad_norm = grad_sq.sqrt();
    let value = objective(point);
    if grad_norm == 0.0 {
        return CgOutcome { point: point.clone(), value, grad_norm, stalled: false };
    }

    // PR+ coefficient with transport-by-projection of the previous direction
    let mut dir: Vec<CMat> = grad.iter().map(|g| -g).collect();
    if let (Some(pg), Some(pd)) = (&memory.prev_grad, &memory.prev_dir) {
        let pg_proj = project_tangent(point, pg);
        let pd_proj = project_tangent(point, pd);
        let pg_sq = inner(&pg_proj, &pg_proj);
        if pg_sq > 0.0 {
            let diff: Vec<CMat> = grad.iter().zip(&pg_proj).map(|(a, b)| a - b).collect();
            let beta = (inner(&grad, &diff) / pg_sq).max(0.0);
            for (d, p) in dir.iter_mut().zip(&pd_proj) {
                *d += p.scale(beta);
            }
        }
    }
    // restart on non-descent
    let mut slope = inner(&grad, &dir);
    if slope >= 0.0 {
        dir = grad.iter().map(|g| -g).collect();
        slope = -grad_sq;
    }

    let mut t = if memory.last_step > 0.0 { (memory.last_step * 2.0).min(1e3) } else { 1.0 };
    let mut accepted = None;
    for _ in 0..50 {
        let cand = retract(point, &dir, t);
        let cand_val = objective(&cand);
        if cand_val <= value + 1e-4 * t * slope {
            // refine with the minimizer of the quadratic fit through
            // (0, f), (0, slope), (t, f_t); an Armijo-acceptable t can still
            // sit near the overshoot point where the decrease is marginal
            let denom = cand_val - value - slope * t;
            if denom > 0.0 {
                let t_q = -0.5 * slope * t * t / denom;
                if t_q > 0.0 && t_q.is_finite() {
                    let refined = retract(point, &dir, t_q);
                    let refined_val = objective(&refined);
                    if refined_val < cand_val {
                        accepted = Some((refined, refined_val, t_q));
                        break;
                    }
                }
            }
            accepted = Some((cand, cand_val, t));
            break;
        }
        t *= 0.5;
    }
    memory.prev_grad = Some(grad);
    match accepted {
        Some((cand, cand_val, t_used)) => {
            memory.prev_dir = Some(dir);
            memory.last_step = t_used;
            CgOutcome { point: cand, value: cand_val, grad_norm, stalled: false }
        }
        None => {
            memory.prev_dir = None;
            memory.last_step = 0.0;
            CgOutcome { point: point.clone(), value, grad_norm, stalled: true }
        }
    }
}

/// Inner-solve settings for the manifold step.
#[derive(Debug, Clone, Copy)]
pub struct ManifoldOptions {
    pub max_steps: usize,
    pub grad_tol: f64,
}

impl Default for ManifoldOptions {
    fn default() -> Self {
        Self { max_steps: 100, grad_tol: 1e-6 }
    }
}

/// Runs CG until the gradient norm falls below
/// `grad_tol · max(1, first gradient norm)` or the step cap.
pub fn minimize_block_unitary<F, G>(objective: &F, euclid_grad: &G, start: ManifoldPoint, options: &ManifoldOptions) -> ManifoldPoint
where
    F: Fn(&ManifoldPoint) -> f64,
    G: Fn(&ManifoldPoint) -> Vec<CMat>,
{
    let mut point = start;
    let mut memory = CgMemory::default();
    let mut tol = None;
    for _ in 0..options.max_steps {
        let out = riemannian_cg_step(objective, euclid_grad, &point, &mut memory);
        let threshold = *tol.get_or_insert(options.grad_tol * out.grad_norm.max(1.0));
        point = out.point;
        if out.stalled || out.grad_norm <= threshold {
            break;
        }
    }
    point
}

/// Θ-step objective pieces for a passive surface (no dynamic noise):
/// `f(Θ) = Tr(Θ^H M₂ Θ M₁) - 2 Re Tr(Θ^H C)` restricted to the block support.
struct PassiveParts {
    m1: CMat,
    m2: CMat,
    cmat: CMat,
}

impl PassiveParts {
    fn build(problem: &MimoProblem, w: &CMat, u: &CMat, f: &CMat) -> Self {
        let ch = &problem.channels;
        let n_s = problem.n_s;
        let hit_f = &ch.h_it * f;
        let m1 = hermitian_part(&(&hit_f * hit_f.adjoint()));
        let ri_w = ch.h_ri.adjoint() * w;
        let m2 = hermitian_part(&(&ri_w * u * ri_w.adjoint()));
        let inner = u * (CMat::identity(n_s, n_s) - w.adjoint() * &ch.h_rt * f);
        let cmat = &ri_w * inner * hit_f.adjoint();
        Self { m1, m2, cmat }
    }

    fn value(&self, theta: &CMat) -> f64 {
        (theta.adjoint() * &self.m2 * theta * &self.m1).trace().re
            - 2.0 * (theta.adjoint() * &self.cmat).trace().re
    }

    /// Euclidean gradient wrt `Θ*`: `2 (M₂ Θ M₁ - C)`.
    fn theta_grad(&self, theta: &CMat) -> CMat {
        (&self.m2 * theta * &self.m1 - &self.cmat).scale(2.0)
    }

    /// Euclidean gradient wrt `Q*` per block.
    fn q_grad(&self, point: &ManifoldPoint, reciprocal: bool) -> Vec<CMat> {
        let ng = point.group_size();
        let theta = point.theta(reciprocal);
        let full = self.theta_grad(&theta);
        point
            .blocks()
            .iter()
            .enumerate()
            .map(|(g, q)| {
                let gg = full.view((g * ng, g * ng), (ng, ng)).into_owned();
                if reciprocal {
                    // Θ_g = Q_g Q_g^T chain rule
                    (&gg + gg.transpose()) * q.conjugate()
                } else {
                    gg
                }
            })
            .collect()
    }
}

fn passive_theta_objective<'a>(parts: &'a PassiveParts, reciprocal: bool) -> impl Fn(&ManifoldPoint) -> f64 + 'a {
    move |p: &ManifoldPoint| parts.value(&p.theta(reciprocal))
}

/// Precoder step with only the transmit-power constraint: unconstrained
/// least squares if feasible, otherwise an exact bisection on the ridge
/// multiplier.
fn passive_update_f(h: &CMat, w: &CMat, u: &CMat, p_t: f64, prev: &CMat) -> Result<CMat> {
    let hw = h.adjoint() * w;
    let a = hermitian_part(&(&hw * u * hw.adjoint()));
    let rhs = h.adjoint() * w * u;
    let n_t = h.ncols();
    let eye = CMat::identity(n_t, n_t);
    let solve = |mu: f64| -> Option<CMat> {
        let m = hermitian_part(&(&a + eye.scale(mu)));
        if let Some(chol) = m.clone().cholesky() {
            return Some(chol.solve(&rhs));
        }
        m.svd(true, true).solve(&rhs, 1e-12).ok()
    };
    let objective = |f: &CMat| (f.adjoint() * &a * f).trace().re - 2.0 * (f.adjoint() * &rhs).trace().re;
    let mut best: Option<(f64, CMat)> = None;
    let mut consider = |f: CMat| {
        if f.norm_squared() <= p_t * (1.0 + 1e-9) {
            let val = objective(&f);
            if best.as_ref().map_or(true, |(b, _)| val < *b) {
                best = Some((val, f));
            }
        }
    };
    consider(prev.clone());
    if let Some(f0) = solve(0.0) {
        if f0.norm_squared() <= p_t * (1.0 + 1e-9) {
            return Ok(f0);
        }
    }
    let g = |mu: f64| solve(mu).map_or(f64::INFINITY, |f| f.norm_squared());
    let mu = crate::mimo::bisect_decreasing_budget(g, p_t)?;
    if let Some(f) = solve(mu) {
        consider(f);
    }
    Ok(best
        .map(|(_, f)| f)
        .unwrap_or_else(|| CMat::zeros(n_t, rhs.ncols())))
}

fn passive_run(problem: &MimoProblem, options: &WmmseOptions, manifold: &ManifoldOptions, arch: Architecture) -> Result<MimoState> {
    let n_i = arch.n_elements();
    if problem.n_i() != n_i {
        return Err(Error::dims("passive baseline", format!("{}", problem.n_i()), format!("{n_i}")));
    }
    let p_t = problem.pb.p_t_passive;
    let noise = NoiseModel::new(problem.noise.sigma_r_sq, problem.noise.sigma_i_sq)?;
    let rcov = CMat::identity(problem.n_r(), problem.n_r()).scale(noise.sigma_r_sq);
    let reciprocal = arch.reciprocal();

    // F0 on the direct link's top right singular vectors, Q0 = identity
    let n_s = problem.n_s;
    let h_rt = &problem.channels.h_rt;
    let mut f = CMat::zeros(problem.n_t(), n_s);
    if h_rt.norm() > 0.0 {
        let svd = h_rt.clone().svd(false, true);
        let v = svd.v_t.expect("svd with v").adjoint();
        let order = crate::linalg::descending_permutation(&svd.singular_values);
        for (dst, &src) in order.iter().take(n_s).enumerate() {
            f.set_column(dst, &v.column(src));
        }
    } else {
        for j in 0..n_s {
            f[(j, j)] = C64::new(1.0, 0.0);
        }
    }
    let mut f = f.scale((p_t / n_s as f64).sqrt());
    let mut q = ManifoldPoint::identity(arch.groups(), arch.group_size());

    let mut w = CMat::zeros(problem.n_r(), n_s);
    let mut u = CMat::identity(n_s, n_s);
    let mut trace = Vec::new();
    let rate0 = spectral_efficiency(&problem.effective_channel(&q.theta(reciprocal)), &f, &rcov)?;
    trace.push(rate0);
    let mut converged = false;
    for _ in 0..options.max_iters {
        let theta = q.theta(reciprocal);
        let h = problem.effective_channel(&theta);
        w = update_w(&h, &f, &rcov)?;
        u = update_u(&f, &h, &rcov)?;

        let parts = PassiveParts::build(problem, &w, &u, &f);
        let objective = passive_theta_objective(&parts, reciprocal);
        let grad = |p: &ManifoldPoint| parts.q_grad(p, reciprocal);
        let q_next = minimize_block_unitary(&objective, &grad, q.clone(), manifold);
        // the inner CG is monotone, but guard against a stalled retraction
        if objective(&q_next) <= objective(&q) + 1e-12 {
            q = q_next;
        }

        let h = problem.effective_channel(&q.theta(reciprocal));
        f = passive_update_f(&h, &w, &u, p_t, &f)?;

        let rate = spectral_efficiency(&h, &f, &rcov)?;
        let prev = *trace.last().expect("seeded");
        trace.push(rate);
        if (rate - prev).abs() <= options.tol * prev.abs().max(1e-12) {
            converged = true;
            break;
        }
    }
    let theta = ThetaMatrix::new(q.theta(reciprocal), arch, DEFAULT_STRUCT_TOL)?;
    Ok(MimoState { w, u, theta, f, rate_trace: trace, converged })
}

/// Passive BD-RIS baseline: block-unitary Θ (block symmetric-unitary when
/// the problem's architecture is reciprocal), transmit power
/// `pb.p_t_passive`, noise covariance `σ_R² I`.
pub fn passive_bdris_mimo(problem: &MimoProblem, options: &WmmseOptions) -> Result<MimoState> {
    passive_run(problem, options, &ManifoldOptions::default(), problem.arch.clone())
}

/// Passive D-RIS baseline: the unit-modulus diagonal special case
/// (group size 1) of the same manifold method.
pub fn passive_drs_mimo(problem: &MimoProblem, options: &WmmseOptions) -> Result<MimoState> {
    let arch = Architecture::single_connected(problem.n_i(), problem.arch.reciprocal())?;
    passive_run(problem, options, &ManifoldOptions::default(), arch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{random_matrix, random_unitary, rng};

    #[test]
    fn zero_gradient_leaves_point_unchanged() {
        let p = ManifoldPoint::identity(2, 3);
        let mut mem = CgMemory::default();
        let out = riemannian_cg_step(&|_: &ManifoldPoint| 1.0, &|p: &ManifoldPoint| {
            p.blocks().iter().map(|b| CMat::zeros(b.nrows(), b.ncols())).collect()
        }, &p, &mut mem);
        assert!(!out.stalled);
        for (a, b) in out.point.blocks().iter().zip(p.blocks()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn phase_circle_matches_exhaustive_sweep() {
        // the Θ-step quadratic restricted to a 1x1 block: κ|q|² - 2Re(q* c)
        use rand::Rng as _;
        let mut r = rng(211);
        let kappa = r.random::<f64>() + 0.5;
        let c = crate::C64::new(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5);
        let f = move |p: &ManifoldPoint| {
            let q = p.blocks()[0][(0, 0)];
            kappa * q.norm_sqr() - 2.0 * (q.conj() * c).re
        };
        let grad = move |p: &ManifoldPoint| {
            let q = p.blocks()[0][(0, 0)];
            vec![CMat::from_element(1, 1, q * (2.0 * kappa) - c * 2.0)]
        };
        let start = ManifoldPoint::identity(1, 1);
        let opt = minimize_block_unitary(&f, &grad, start, &ManifoldOptions { max_steps: 200, grad_tol: 1e-10 });
        let got = f(&opt);
        let mut best = f64::INFINITY;
        for k in 0..4096 {
            let phase = k as f64 / 4096.0 * std::f64::consts::TAU;
            let p = ManifoldPoint::new(vec![CMat::from_element(1, 1, crate::C64::from_polar(1.0, phase))]).unwrap();
            best = best.min(f(&p));
        }
        assert!(got <= best + 1e-6, "cg {got} vs sweep {best}");
    }

    #[test]
    fn converges_to_known_unitary_target() {
        let mut r = rng(223);
        let n = 4;
        let target = random_unitary(n, &mut r);
        let f = {
            let target = target.clone();
            move |p: &ManifoldPoint| (p.blocks()[0].clone() - &target).norm_squared()
        };
        let grad = {
            let target = target.clone();
            move |p: &ManifoldPoint| vec![(p.blocks()[0].clone() - &target).scale(2.0)]
        };
        let start = ManifoldPoint::identity(1, n);
        let opt = minimize_block_unitary(&f, &grad, start, &ManifoldOptions { max_steps: 500, grad_tol: 1e-12 });
        assert!(f(&opt) < 1e-8, "residual {}", f(&opt));
        assert!(opt.unitarity_residual() < 1e-10);
    }

    #[test]
    fn retraction_stays_unitary() {
        let mut r = rng(227);
        let p = ManifoldPoint::new(vec![random_unitary(3, &mut r), random_unitary(3, &mut r)]).unwrap();
        let dir: Vec<CMat> = (0..2).map(|_| random_matrix(3, 3, &mut r)).collect();
        let dir = project_tangent(&p, &dir);
        let stepped = retract(&p, &dir, 0.7);
        assert!(stepped.unitarity_residual() < 1e-10);
    }
}

