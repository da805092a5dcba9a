//! Iterative WMMSE + QCQP spectral-efficiency maximizer for active BD-RIS
//! aided MIMO.
//!
//! The rate `R = log₂ det(I + R⁻¹ H F F^H H^H)` with
//! `H = H_RT + H_RI Θ H_IT` and noise covariance
//! `R = σ_I² H_RI Θ Θ^H H_RI^H + σ_R² I` is maximized by block-coordinate
//! updates of the surrogate `log₂ det(U) - Tr(U E)`:
//!
//! * `W* = (H F F^H H^H + R)^{-1} H F` — the MMSE combiner,
//! * `U* = I + F^H H^H R^{-1} H F` — the MSE weight,
//! * `Θ*` — a ball-constrained QCQP over the block-diagonal support
//!   (see [`qcqp`]),
//! * `F*  = (H^H W U W^H H + μ₁ H_IT^H Θ^H Θ H_IT + μ₂ I)^{-1} H^H W U` —
//!   a two-constraint QCQP with multipliers located by exact single-axis
//!   bisections plus a refined two-dimensional grid search.
//!
//! Each update minimizes the weighted MSE exactly (or keeps the previous
//! block), so the rate trace is non-decreasing up to rounding and the
//! iteration converges to a stationary point.

mod qcqp;

pub use qcqp::{
    build_theta_qcqp, radiated_power_mimo, solve_qcqp_ball, update_theta as update_theta_blocks,
    QcqpCanonical, SymmetricMap, QCQP_DIMENSION_CAP,
};
pub(crate) use qcqp::bisect_decreasing as bisect_decreasing_budget;

use crate::channel::ChannelRealization;
use crate::linalg::hermitian_part;
use crate::netcore::{simplified_channel, Architecture, NoiseModel, ThetaMatrix, DEFAULT_STRUCT_TOL};
use crate::siso::PowerBudget;
use crate::{CMat, Error, Result};

/// One spectral-efficiency maximization instance.
#[derive(Debug, Clone)]
pub struct MimoProblem {
    pub channels: ChannelRealization,
    pub arch: Architecture,
    pub n_s: usize,
    pub pb: PowerBudget,
    pub noise: NoiseModel,
}

impl MimoProblem {
    pub fn new(
        channels: ChannelRealization,
        arch: Architecture,
        n_s: usize,
        pb: PowerBudget,
        noise: NoiseModel,
    ) -> Result<Self> {
        let (n_r, n_t) = channels.h_rt.shape();
        let n_i = arch.n_elements();
        if channels.h_ri.nrows() != n_r
            || channels.h_ri.ncols() != n_i
            || channels.h_it.nrows() != n_i
            || channels.h_it.ncols() != n_t
        {
            return Err(Error::dims(
                "MimoProblem",
                format!("H_RT {n_r}x{n_t}, H_RI {n_r}x{n_i}, H_IT {n_i}x{n_t}"),
                format!(
                    "H_RI {}x{}, H_IT {}x{}",
                    channels.h_ri.nrows(), channels.h_ri.ncols(), channels.h_it.nrows(), channels.h_it.ncols()
                ),
            ));
        }
        if n_s == 0 || n_s > n_t.min(n_r) {
            return Err(Error::InvalidParameter {
                name: "n_s",
                message: format!("stream count {n_s} must satisfy 1 <= N_S <= min(N_T, N_R) = {}", n_t.min(n_r)),
            });
        }
        // PowerBudget carries the same noise powers for the SISO closed
        // forms; a silent mismatch would make cross-module comparisons wrong
        let same = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300);
        if !same(pb.sigma_i_sq, noise.sigma_i_sq) || !same(pb.sigma_r_sq, noise.sigma_r_sq) {
            return Err(Error::InvalidParameter {
                name: "noise",
                message: format!(
                    "PowerBudget and NoiseModel disagree: sigma_I^2 {} vs {}, sigma_R^2 {} vs {}",
                    pb.sigma_i_sq, noise.sigma_i_sq, pb.sigma_r_sq, noise.sigma_r_sq
                ),
            });
        }
        Ok(Self { channels, arch, n_s, pb, noise })
    }

    pub fn n_t(&self) -> usize {
        self.channels.h_rt.ncols()
    }

    pub fn n_r(&self) -> usize {
        self.channels.h_rt.nrows()
    }

    pub fn n_i(&self) -> usize {
        self.arch.n_elements()
    }

    /// `H = H_RT + H_RI Θ H_IT`.
    pub fn effective_channel(&self, theta: &CMat) -> CMat {
        simplified_channel(&self.channels.h_rt, &self.channels.h_ri, &self.channels.h_it, theta)
            .expect("dimensions validated at construction")
    }
}

/// Stopping rule of the outer iteration.
#[derive(Debug, Clone, Copy)]
pub struct WmmseOptions {
    /// Relative rate change below which the iteration stops.
    pub tol: f64,
    /// Outer-iteration cap.
    pub max_iters: usize,
}

impl Default for WmmseOptions {
    fn default() -> Self {
        Self { tol: 1e-5, max_iters: 200 }
    }
}

/// Optimizer state: combiner, MSE weight, surface, precoder, and the rate
/// trajectory (b/s/Hz, one entry per outer iteration plus the initial point).
#[derive(Debug, Clone)]
pub struct MimoState {
    pub w: CMat,
    pub u: CMat,
    pub theta: ThetaMatrix,
    pub f: CMat,
    pub rate_trace: Vec<f64>,
    pub converged: bool,
}

impl MimoState {
    /// Final achieved spectral efficiency.
    pub fn rate(&self) -> f64 {
        *self.rate_trace.last().expect("trace never empty")
    }

    pub fn iterations(&self) -> usize {
        self.rate_trace.len().saturating_sub(1)
    }
}

/// `R = log₂ det(I + R⁻¹ H F F^H H^H)` evaluated through Cholesky whitening.
pub fn spectral_efficiency(h: &CMat, f: &CMat, noise_cov: &CMat) -> Result<f64> {
    let chol = hermitian_part(noise_cov)
        .cholesky()
        .ok_or(Error::InvalidParameter { name: "noise_cov", message: "noise covariance must be positive definite".into() })?;
    let hf = h * f;
    let m = chol
        .l()
        .solve_lower_triangular(&hf)
        .ok_or(Error::SingularSystem { context: "noise covariance factor" })?;
    let n_s = f.ncols();
    let gram = CMat::identity(n_s, n_s) + m.adjoint() * &m;
    let chol_g = hermitian_part(&gram)
        .cholesky()
        .ok_or(Error::SingularSystem { context: "rate Gram matrix" })?;
    let mut log_det = 0.0;
    for i in 0..n_s {
        log_det += chol_g.l()[(i, i)].re.ln();
    }
    Ok(2.0 * log_det / std::f64::consts::LN_2)
}

/// Receiver-side noise covariance `σ_I² H_RI Θ Θ^H H_RI^H + σ_R² I`.
pub fn noise_covariance(h_ri: &CMat, theta: &CMat, noise: &NoiseModel) -> CMat {
    let n_r = h_ri.nrows();
    let mix = h_ri * theta;
    hermitian_part(&(&mix * mix.adjoint()).scale(noise.sigma_i_sq)) + CMat::identity(n_r, n_r).scale(noise.sigma_r_sq)
}

/// MMSE combiner `W* = (H F F^H H^H + R)^{-1} H F`.
pub fn update_w(h: &CMat, f: &CMat, rcov: &CMat) -> Result<CMat> {
    let hf = h * f;
    let inner = hermitian_part(&(&hf * hf.adjoint() + rcov));
    let chol = inner
        .cholesky()
        .ok_or(Error::SingularSystem { context: "combiner inner matrix" })?;
    Ok(chol.solve(&hf))
}

/// MSE weight `U* = I + F^H H^H R^{-1} H F`, Hermitian positive definite.
pub fn update_u(f: &CMat, h: &CMat, rcov: &CMat) -> Result<CMat> {
    let chol = hermitian_part(rcov)
        .cholesky()
        .ok_or(Error::InvalidParameter { name: "noise_cov", message: "noise covariance must be positive definite".into() })?;
    let m = chol
        .l()
        .solve_lower_triangular(&(h * f))
        .ok_or(Error::SingularSystem { context: "noise covariance factor" })?;
    let n_s = f.ncols();
    Ok(hermitian_part(&(CMat::identity(n_s, n_s) + m.adjoint() * &m)))
}

/// MSE matrix `E = (W^H H F - I)(W^H H F - I)^H + W^H R W`.
pub fn mse_matrix(h: &CMat, f: &CMat, w: &CMat, rcov: &CMat) -> CMat {
    let n_s = f.ncols();
    let resid = w.adjoint() * h * f - CMat::identity(n_s, n_s);
    hermitian_part(&(&resid * resid.adjoint() + w.adjoint() * rcov * w))
}

/// Weighted-MSE surrogate objective `Tr(U E)`.
pub fn weighted_mse_objective(u: &CMat, e: &CMat) -> f64 {
    (u * e).trace().re
}

/// Optimal Θ of the subproblem for the state's `(W, U, F)`.
pub fn update_theta(problem: &MimoProblem, state: &MimoState) -> Result<ThetaMatrix> {
    update_theta_blocks(problem, &state.theta, &state.w, &state.u, &state.f)
}

/// Optimal precoder of the subproblem for the state's `(W, U, Θ)`.
///
/// Candidates: the unconstrained solution, exact single-constraint
/// bisections on each multiplier, a 32×32 log-spaced grid with three ×10
/// refinement rounds, the previous precoder, and zero; the feasible candidate
/// with the best objective wins.
pub fn update_f(problem: &MimoProblem, state: &MimoState) -> Result<CMat> {
    let theta = state.theta.matrix();
    let h = problem.effective_channel(theta);
    let sigma_i = problem.noise.sigma_i_sq;
    let p_a = problem.pb.p_a;
    let p_t = problem.pb.p_t;
    let consumed = sigma_i * theta.norm_squared();
    let pbar = p_a - consumed;
    if pbar < -1e-9 * p_a.max(1e-300) {
        return Err(Error::ThetaBudgetExceeded { consumed, budget: p_a });
    }
    let pbar = pbar.max(0.0);

    let theta_hit = theta * &problem.channels.h_it;
    let k = hermitian_part(&(theta_hit.adjoint() * &theta_hit));
    let wu = &state.w * &state.u;
    let hw = h.adjoint() * &state.w;
    let a = hermitian_part(&(&hw * &state.u * hw.adjoint()));
    let rhs = h.adjoint() * wu;
    let n_t = problem.n_t();
    let eye = CMat::identity(n_t, n_t);

    let solve = |mu1: f64, mu2: f64| -> Option<CMat> {
        let m = hermitian_part(&(&a + k.scale(mu1) + eye.scale(mu2)));
        if let Some(chol) = m.clone().cholesky() {
            return Some(chol.solve(&rhs));
        }
        // singular at the multiplier origin: fall back to a pseudoinverse
        let svd = m.svd(true, true);
        svd.solve(&rhs, 1e-12).ok()
    };
    let ris_power = |f: &CMat| -> f64 { (f.adjoint() * &k * f).trace().re };
    let tx_power = |f: &CMat| -> f64 { f.norm_squared() };
    let feasible = |f: &CMat| -> bool {
        ris_power(f) <= pbar * (1.0 + 1e-9) + 1e-300 && tx_power(f) <= p_t * (1.0 + 1e-9)
    };
    let objective = |f: &CMat| -> f64 {
        (f.adjoint() * &a * f).trace().re - 2.0 * (f.adjoint() * &rhs).trace().re
    };

    let mut best: Option<(f64, CMat, f64, f64)> = None;
    let mut consider = |f: CMat, mu1: f64, mu2: f64| {
        if !feasible(&f) {
            return;
        }
        let val = objective(&f);
        if best.as_ref().map_or(true, |(b, _, _, _)| val < *b) {
            best = Some((val, f, mu1, mu2));
        }
    };

    consider(CMat::zeros(n_t, state.f.ncols()), f64::NAN, f64::NAN);
    consider(state.f.clone(), f64::NAN, f64::NAN);

    // unconstrained optimum: immediately optimal if feasible
    if let Some(f0) = solve(0.0, 0.0) {
        if feasible(&f0) {
            return Ok(f0);
        }
    }

    // exact bisection with only the transmit-power constraint active
    let g_tx = |mu2: f64| solve(0.0, mu2).map_or(f64::INFINITY, |f| tx_power(&f));
    if let Ok(mu2) = qcqp::bisect_decreasing(g_tx, p_t) {
        if let Some(f) = solve(0.0, mu2) {
            consider(f, 0.0, mu2);
        }
    }
    // exact bisection with only the radiated-power constraint active
    if k.norm() > 0.0 && pbar > 0.0 {
        let g_ris = |mu1: f64| solve(mu1, 0.0).map_or(f64::INFINITY, |f| ris_power(&f));
        if let Ok(mu1) = qcqp::bisect_decreasing(g_ris, pbar) {
            if let Some(f) = solve(mu1, 0.0) {
                consider(f, mu1, 0.0);
            }
        }
    }

    // both constraints active: Gauss-Seidel on the complementarity system,
    // bisecting one multiplier while holding the other
    if k.norm() > 0.0 && pbar > 0.0 {
        let mut mu1 = 0.0f64;
        let mut mu2 = 0.0f64;
        for _ in 0..40 {
            let g_tx_given = |m2: f64| solve(mu1, m2).map_or(f64::INFINITY, |f| tx_power(&f));
            mu2 = match qcqp::bisect_decreasing(g_tx_given, p_t) {
                Ok(m) => m,
                Err(_) => break,
            };
            let g_ris_given = |m1: f64| solve(m1, mu2).map_or(f64::INFINITY, |f| ris_power(&f));
            let next_mu1 = match qcqp::bisect_decreasing(g_ris_given, pbar) {
                Ok(m) => m,
                Err(_) => break,
            };
            let done = (next_mu1 - mu1).abs() <= 1e-12 * mu1.abs().max(1e-300);
            mu1 = next_mu1;
            if done {
                break;
            }
        }
        if let Some(f) = solve(mu1, mu2) {
            consider(f, mu1, mu2);
        }
    }

    // KKT certificate: for this convex QCQP, a feasible stationary point with
    // complementary slackness is the global optimum, so the grid cannot
    // improve on it
    if let Some((_, f, mu1, mu2)) = &best {
        if mu1.is_finite() && mu2.is_finite() {
            let slack1 = mu1 * (ris_power(f) - pbar).abs() <= 1e-8 * pbar.max(1e-300);
            let slack2 = mu2 * (tx_power(f) - p_t).abs() <= 1e-8 * p_t.max(1e-300);
            if slack1 && slack2 {
                return Ok(best.expect("present").1);
            }
        }
    }

    // two-dimensional log-spaced grid, scaled by the problem norms
    let a_scale = a.norm().max(1e-300);
    let k_scale = k.norm().max(1e-300);
    let s1 = a_scale / k_scale;
    let s2 = a_scale;
    let grid_axis = |center_lo: f64, center_hi: f64| -> Vec<f64> {
        let mut vals = vec![0.0];
        let n_pts = 32;
        let (llo, lhi) = (center_lo.ln(), center_hi.ln());
        for i in 0..n_pts {
            let t = i as f64 / (n_pts - 1) as f64;
            vals.push((llo + t * (lhi - llo)).exp());
        }
        vals
    };
    let mut range1 = (1e-8 * s1, 1e8 * s1);
    let mut range2 = (1e-8 * s2, 1e8 * s2);
    let mut grid_best: Option<(f64, f64, f64)> = None;
    for _round in 0..4 {
        let ax1 = grid_axis(range1.0, range1.1);
        let ax2 = grid_axis(range2.0, range2.1);
        for &mu1 in &ax1 {
            for &mu2 in &ax2 {
                if let Some(f) = solve(mu1, mu2) {
                    if feasible(&f) {
                        let val = objective(&f);
                        if grid_best.as_ref().map_or(true, |(b, _, _)| val < *b) {
                            grid_best = Some((val, mu1, mu2));
                        }
                    }
                }
            }
        }
        if let Some((_, m1, m2)) = grid_best {
            // zoom tenfold around the best cell
            let width1 = (range1.1 / range1.0).powf(0.05);
            let width2 = (range2.1 / range2.0).powf(0.05);
            let c1 = if m1 > 0.0 { m1 } else { range1.0 };
            let c2 = if m2 > 0.0 { m2 } else { range2.0 };
            range1 = (c1 / width1, c1 * width1);
            range2 = (c2 / width2, c2 * width2);
        } else {
            break;
        }
    }
    if let Some((_, m1, m2)) = grid_best {
        if let Some(f) = solve(m1, m2) {
            consider(f, m1, m2);
        }
    }

    Ok(best.expect("zero precoder is always feasible").1)
}

/// Deterministic feasible starting point: `F₀` spans the top right singular
/// vectors of the direct link at full transmit power (canonical columns when
/// the direct link is absent); `Θ₀ = c·I` radiates 90% of the budget.
fn initialize(problem: &MimoProblem) -> Result<(ThetaMatrix, CMat)> {
    let (n_t, n_s) = (problem.n_t(), problem.n_s);
    let h_rt = &problem.channels.h_rt;
    let mut f0 = CMat::zeros(n_t, n_s);
    if h_rt.norm() > 0.0 {
        let svd = h_rt.clone().svd(false, true);
        let v = svd.v_t.expect("svd with v").adjoint();
        let order = crate::linalg::descending_permutation(&svd.singular_values);
        for (dst, &src) in order.iter().take(n_s).enumerate() {
            f0.set_column(dst, &v.column(src));
        }
    } else {
        for j in 0..n_s {
            f0[(j, j)] = crate::C64::new(1.0, 0.0);
        }
    }
    let f0 = f0.scale((problem.pb.p_t / n_s as f64).sqrt());

    let n_i = problem.n_i();
    let hit_f = &problem.channels.h_it * &f0;
    let denom = hit_f.norm_squared() + problem.noise.sigma_i_sq * n_i as f64;
    let c = (0.9 * problem.pb.p_a / denom.max(1e-300)).sqrt();
    let theta0 = ThetaMatrix::new(CMat::identity(n_i, n_i).scale(c), problem.arch.clone(), DEFAULT_STRUCT_TOL)?;
    Ok((theta0, f0))
}

fn rate_of(problem: &MimoProblem, theta: &ThetaMatrix, f: &CMat) -> Result<f64> {
    let h = problem.effective_channel(theta.matrix());
    let rcov = noise_covariance(&problem.channels.h_ri, theta.matrix(), &problem.noise);
    spectral_efficiency(&h, f, &rcov)
}

/// Runs the block-coordinate iteration until the relative rate change drops
/// below `options.tol` or `options.max_iters` is reached.
pub fn wmmse_optimize(problem: &MimoProblem, options: &WmmseOptions) -> Result<MimoState> {
    let (theta0, f0) = initialize(problem)?;
    let n_s = problem.n_s;
    let mut state = MimoState {
        w: CMat::zeros(problem.n_r(), n_s),
        u: CMat::identity(n_s, n_s),
        theta: theta0,
        f: f0,
        rate_trace: Vec::new(),
        converged: false,
    };
    let r0 = rate_of(problem, &state.theta, &state.f)?;
    state.rate_trace.push(r0);
    for _ in 0..options.max_iters {
        let h = problem.effective_channel(state.theta.matrix());
        let rcov = noise_covariance(&problem.channels.h_ri, state.theta.matrix(), &problem.noise);
        state.w = update_w(&h, &state.f, &rcov)?;
        state.u = update_u(&state.f, &h, &rcov)?;
        state.theta = update_theta(problem, &state)?;
        state.f = update_f(problem, &state)?;
        let rate = rate_of(problem, &state.theta, &state.f)?;
        let prev = state.rate_trace.last().copied().expect("seeded");
        state.rate_trace.push(rate);
        if (rate - prev).abs() <= options.tol * prev.abs().max(1e-12) {
            state.converged = true;
            break;
        }
    }
    Ok(state)
}

/// Direct-link capacity benchmark: waterfilling over the eigenmodes of
/// `H H^H / σ²` under the total power `p`.
pub fn waterfilling_rate(h: &CMat, p: f64, sigma_sq: f64) -> f64 {
    let mut gains: Vec<f64> = h
        .clone()
        .singular_values()
        .iter()
        .map(|s| s * s / sigma_sq)
        .filter(|g| *g > 0.0)
        .collect();
    gains.sort_by(|a, b| b.partial_cmp(a).unwrap());
    if gains.is_empty() || p <= 0.0 {
        return 0.0;
    }
    let mut best = 0.0f64;
    for k in 1..=gains.len() {
        let inv_sum: f64 = gains[..k].iter().map(|g| 1.0 / g).sum();
        let level = (p + inv_sum) / k as f64;
        if gains[..k].iter().all(|g| level >= 1.0 / g) {
            let rate: f64 = gains[..k].iter().map(|g| (level * g).log2()).sum();
            best = best.max(rate);
        }
    }
    best
}
