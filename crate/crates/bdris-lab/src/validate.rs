//! Always-on numerical validation: every module's invariants re-checked on
//! seeded instances with measured residuals.

use bdris_core::channel::{ChannelRealization, SeedProvenance};
use bdris_core::linalg::{hermitian_part, rel_frob, symmetry_residual, unitarity_residual};
use bdris_core::mimo::{
    self, noise_covariance, radiated_power_mimo, solve_qcqp_ball, spectral_efficiency,
    QcqpCanonical, WmmseOptions,
};
use bdris_core::netcore::{
    self, validate_theta, Architecture, ImpedanceNetworkSpec, NoiseModel, PartitionedScattering,
};
use bdris_core::siso::{self, PowerBudget, SisoChannel};
use bdris_core::{baselines, C64, CMat, CVec};
use serde::Serialize;

/// One invariant check with its measured residual.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Machine-readable validation report.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn render(&self) -> String {
        let mut out = String::from("check                                              residual      tolerance  status\n");
        for c in &self.checks {
            out.push_str(&format!(
                "{:<48} {:>12.3e} {:>12.3e}  {}\n",
                c.name,
                c.residual,
                c.tolerance,
                if c.pass { "pass" } else { "FAIL" }
            ));
        }
        out
    }
}

struct Recorder {
    checks: Vec<CheckResult>,
}

impl Recorder {
    fn record(&mut self, name: &str, residual: f64, tolerance: f64) {
        self.checks.push(CheckResult {
            name: name.to_string(),
            residual,
            tolerance,
            pass: residual <= tolerance,
        });
    }
}

mod fixtures {
    use super::*;
    use bdris_core::channel::siso_realization;

    pub fn rng_matrix(r: usize, c: usize, state: &mut u64) -> CMat {
        CMat::from_fn(r, c, |_, _| C64::new(next_unit(state) - 0.5, next_unit(state) - 0.5))
    }

    /// xorshift-based deterministic stream; good enough for fixtures.
    pub fn next_unit(state: &mut u64) -> f64 {
        *state ^= *state << 13;
        *state ^= *state >> 7;
        *state ^= *state << 17;
        (*state >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn unitary(n: usize, state: &mut u64) -> CMat {
        let qr = rng_matrix(n, n, state).qr();
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

    pub fn siso_channel(n: usize, trial: u64) -> SisoChannel {
        let (h_ri, h_it) = siso_realization(1.0, 1.0, n, 4242, trial).unwrap();
        SisoChannel::new(C64::new(0.0, 0.0), h_it, h_ri).unwrap()
    }

    pub fn mimo_problem(n_i: usize, reciprocal: bool, seed: u64) -> mimo::MimoProblem {
        let mut state = seed | 1;
        let channels = ChannelRealization {
            h_rt: rng_matrix(2, 2, &mut state),
            h_ri: rng_matrix(2, n_i, &mut state),
            h_it: rng_matrix(n_i, 2, &mut state),
            provenance: SeedProvenance { master_seed: seed, trial: 0 },
        };
        let arch = Architecture::new(n_i / 2, 2, reciprocal).unwrap();
        let pb = PowerBudget::new(1.0, 0.5, 1.5, 0.01, 0.01).unwrap();
        let noise = NoiseModel::new(0.01, 0.01).unwrap();
        mimo::MimoProblem::new(channels, arch, 2, pb, noise).unwrap()
    }
}

/// Runs every residual check and returns the report; failures are entries,
/// not errors.
pub fn validate_suite() -> ValidationReport {
    let mut rec = Recorder { checks: Vec::new() };
    let mut state = 0x9E3779B97F4A7C15u64;

    // netcore: reciprocal assembly symmetry
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n = 3 + (fixtures::next_unit(&mut state) * 3.0) as usize;
        let phi = fixtures::unitary(n, &mut state);
        let amp: Vec<f64> = (0..n).map(|_| fixtures::next_unit(&mut state) * 3.0).collect();
        let spec = ImpedanceNetworkSpec::matched_isolated_reciprocal(phi, amp).unwrap();
        let theta = netcore::assemble_theta(&spec).unwrap();
        worst = worst.max(symmetry_residual(&theta));
    }
    rec.record("netcore/assemble_theta reciprocal symmetry", worst, 1e-12);

    // netcore: general reflection reduces to the assembled theta
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n = 3;
        let phi_ia = fixtures::unitary(n, &mut state);
        let phi_ai = fixtures::unitary(n, &mut state);
        let amp: Vec<f64> = (0..n).map(|_| fixtures::next_unit(&mut state) * 2.0).collect();
        let spec = ImpedanceNetworkSpec::matched_isolated(phi_ia, phi_ai, amp).unwrap();
        let theta = netcore::assemble_theta(&spec).unwrap();
        let (gamma, _) = netcore::general_active_reflection(&spec).unwrap();
        let entrywise = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| (theta[(i, j)] - gamma[(i, j)]).norm())
            .fold(0.0f64, f64::max);
        worst = worst.max(entrywise);
    }
    rec.record("netcore/general_active_reflection reduction", worst, 1e-13);

    // netcore: general channel equals simplified under the assumptions
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (n_t, n_i, n_r) = (2, 3, 2);
        let h_rt = fixtures::rng_matrix(n_r, n_t, &mut state);
        let h_ri = fixtures::rng_matrix(n_r, n_i, &mut state);
        let h_it = fixtures::rng_matrix(n_i, n_t, &mut state);
        let s = PartitionedScattering::from_links(&h_rt, &h_ri, &h_it).unwrap();
        let theta = fixtures::rng_matrix(n_i, n_i, &mut state);
        let pi = fixtures::rng_matrix(n_i, n_i, &mut state);
        let general = netcore::general_channel(&s, &CMat::zeros(n_t, n_t), &CMat::zeros(n_r, n_r), &theta, &pi).unwrap();
        let simple = netcore::simplified_channel(&h_rt, &h_ri, &h_it, &theta).unwrap();
        worst = worst.max(rel_frob(&general.h, &simple));
    }
    rec.record("netcore/general vs simplified channel", worst, 1e-10);

    // netcore: Takagi reconstruction on 100 instances
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = 2 + (fixtures::next_unit(&mut state) * 5.0) as usize;
        let m = fixtures::rng_matrix(n, n, &mut state);
        let sym = &m + m.transpose();
        let (q, sigma) = netcore::takagi(&sym, 1e-10).unwrap();
        let rec_m = &q * bdris_core::linalg::diag_r(sigma.as_slice()) * q.transpose();
        worst = worst.max(rel_frob(&sym, &rec_m)).max(unitarity_residual(&q));
    }
    rec.record("netcore/takagi reconstruction", worst, 1e-10);

    // netcore: passive reduction lands in the passive feasible set
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n = 4;
        let phi = fixtures::unitary(n, &mut state);
        let psi: Vec<f64> = (0..n).map(|_| fixtures::next_unit(&mut state) * std::f64::consts::TAU).collect();
        let theta = netcore::passive_reduction(&phi, &psi).unwrap();
        worst = worst.max(symmetry_residual(&theta)).max(unitarity_residual(&theta));
    }
    rec.record("netcore/passive_reduction symmetric unitary", worst, 1e-10);

    // netcore: negative control — a perturbed theta must be flagged
    {
        let arch = Architecture::new(2, 2, true).unwrap();
        let mut theta = CMat::zeros(4, 4);
        for g in 0..2 {
            let blk = fixtures::unitary(2, &mut state);
            let blk = &blk + blk.transpose();
            theta.view_mut((g * 2, g * 2), (2, 2)).copy_from(&blk);
        }
        let ok_before = validate_theta(&theta, &arch, 1e-10).ok;
        theta[(0, 3)] += C64::new(1e-4, 0.0);
        let flagged = !validate_theta(&theta, &arch, 1e-8).ok;
        rec.record(
            "netcore/validate_theta negative control",
            if ok_before && flagged { 0.0 } else { 1.0 },
            0.5,
        );
    }

    // siso: budget feasibility and reciprocity equivalence
    let mut worst_budget = 0.0f64;
    let mut worst_gap = 0.0f64;
    let pb = PowerBudget::new(1.9, 0.1, 2.0, 1e-3, 1e-3).unwrap();
    for trial in 0..100 {
        let ch = fixtures::siso_channel(8, trial);
        let arch_n = Architecture::new(2, 4, false).unwrap();
        let arch_r = Architecture::new(2, 4, true).unwrap();
        let sn = siso::solve_bdris_nonreciprocal(&ch, &pb, &arch_n).unwrap();
        let sr = siso::solve_bdris_reciprocal(&ch, &pb, &arch_r).unwrap();
        worst_budget = worst_budget
            .max((siso::radiated_power_siso(sn.theta.matrix(), &ch, &pb) - pb.p_a).abs() / pb.p_a)
            .max((siso::radiated_power_siso(sr.theta.matrix(), &ch, &pb) - pb.p_a).abs() / pb.p_a);
        worst_gap = worst_gap.max((sn.snr_linear - sr.snr_linear).abs() / sn.snr_linear);
    }
    rec.record("siso/solver radiated power equals budget", worst_budget, 1e-9);
    rec.record("siso/reciprocal equals non-reciprocal optimum", worst_gap, 1e-9);

    // mimo: KKT complementary slackness on 100 random QCQP solves
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = 2 + (fixtures::next_unit(&mut state) * 5.0) as usize;
        let g = fixtures::rng_matrix(n, 1 + n / 2, &mut state);
        let b = hermitian_part(&(&g * g.adjoint()));
        let c = {
            let m = fixtures::rng_matrix(n, 1, &mut state);
            CVec::from_column_slice(m.as_slice())
        };
        let gd = fixtures::rng_matrix(n, n, &mut state);
        let d = hermitian_part(&(&gd * gd.adjoint())) + CMat::identity(n, n).scale(0.2);
        let budget = 0.1 + fixtures::next_unit(&mut state) * 3.0;
        let q = QcqpCanonical::new(b, c, d, budget).unwrap();
        let (theta, mu) = solve_qcqp_ball(&q).unwrap();
        let cons = q.constraint(&theta);
        let slack = mu * (cons - budget).abs() / budget;
        let feas = ((cons - budget).max(0.0)) / budget;
        worst = worst.max(slack).max(feas);
    }
    rec.record("mimo/qcqp KKT complementary slackness", worst, 1e-6);

    // mimo: monotone rate trace and WMMSE-rate identity
    let mut worst_drop = 0.0f64;
    let mut worst_identity = 0.0f64;
    let mut worst_power = 0.0f64;
    for seed in 0..10u64 {
        let problem = fixtures::mimo_problem(4, seed % 2 == 0, 1000 + seed);
        let state_out = mimo::wmmse_optimize(&problem, &WmmseOptions { tol: 1e-7, max_iters: 80 }).unwrap();
        for w in state_out.rate_trace.windows(2) {
            worst_drop = worst_drop.max(w[0] - w[1]);
        }
        let h = problem.effective_channel(state_out.theta.matrix());
        let rcov = noise_covariance(&problem.channels.h_ri, state_out.theta.matrix(), &problem.noise);
        let w = mimo::update_w(&h, &state_out.f, &rcov).unwrap();
        let u = mimo::update_u(&state_out.f, &h, &rcov).unwrap();
        let e = mimo::mse_matrix(&h, &state_out.f, &w, &rcov);
        let log_det_u = {
            let chol = u.clone().cholesky().unwrap();
            2.0 * (0..2).map(|i| chol.l()[(i, i)].re.ln()).sum::<f64>() / std::f64::consts::LN_2
        };
        let rate = spectral_efficiency(&h, &state_out.f, &rcov).unwrap();
        let n_s = 2.0;
        worst_identity = worst_identity
            .max((mimo::weighted_mse_objective(&u, &e) - n_s).abs() / n_s)
            .max((log_det_u - rate).abs() / rate.max(1.0));
        let radiated = radiated_power_mimo(state_out.theta.matrix(), &problem.channels.h_it, &state_out.f, problem.noise.sigma_i_sq);
        worst_power = worst_power
            .max((radiated - problem.pb.p_a).max(0.0) / problem.pb.p_a)
            .max((state_out.f.norm_squared() - problem.pb.p_t).max(0.0) / problem.pb.p_t);
    }
    rec.record("mimo/wmmse monotone rate trace", worst_drop, 1e-6);
    rec.record("mimo/wmmse rate identity", worst_identity, 1e-8);
    rec.record("mimo/final state power feasibility", worst_power, 1e-9);

    // baselines: manifold feasibility after a passive run
    {
        let problem = fixtures::mimo_problem(4, true, 7);
        let state_out = baselines::passive_bdris_mimo(&problem, &WmmseOptions { tol: 1e-6, max_iters: 40 }).unwrap();
        let mut worst = 0.0f64;
        for g in 0..problem.arch.groups() {
            let blk = state_out.theta.block(g);
            worst = worst.max(unitarity_residual(&blk)).max(symmetry_residual(&blk));
        }
        rec.record("baselines/passive theta block symmetric unitary", worst, 1e-9);
        let mut worst_drop = 0.0f64;
        for w in state_out.rate_trace.windows(2) {
            worst_drop = worst_drop.max(w[0] - w[1]);
        }
        rec.record("baselines/passive monotone rate trace", worst_drop, 1e-5);
    }

    ValidationReport { checks: rec.checks }
}
