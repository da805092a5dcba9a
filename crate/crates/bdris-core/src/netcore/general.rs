//! General (mismatched, mutually coupled) and simplified end-to-end channel
//! models.

use super::{ImpedanceNetworkSpec, PartitionedScattering, AMPLIFIER_LOOP_CONDITION_CAP};
use crate::linalg::{condition_number, solve_lu};
use crate::{CMat, Error, Result};

/// Channel matrix plus the linear maps carrying the RIS-side and
/// receiver-side noise into the received voltage vector.
#[derive(Debug, Clone)]
pub struct GeneralChannel {
    /// `v_R = H v_T + ...` channel matrix, `N_R × N_T`.
    pub h: CMat,
    /// Maps the stacked RIS noise `[n_in; n_A]` (length `2 N_I`) into `v_R`.
    pub ris_noise_map: CMat,
    /// Maps the receiver noise `n_R` into `v_R`.
    pub rx_noise_map: CMat,
}

/// Scattering matrix `Γ_I` and amplifier-noise map `Π_I` of the `N_I`-port
/// active reconfigurable impedance network:
///
/// ```text
/// Γ_I = Φ_II + Φ_IA A (I - Φ_AA A)^{-1} Φ_AI
/// Π_I = Φ_IA A (I - Φ_AA A)^{-1}
/// ```
///
/// With `Φ_II = Φ_AA = 0` this reduces to `Γ_I = Φ_IA A Φ_AI` and
/// `Π_I = Φ_IA A`.
pub fn general_active_reflection(spec: &ImpedanceNetworkSpec) -> Result<(CMat, CMat)> {
    let n = spec.n_i();
    let a = spec.amp_matrix();
    let loop_matrix = CMat::identity(n, n) - spec.phi_aa() * &a;
    let cond = condition_number(&loop_matrix);
    if !cond.is_finite() || cond > AMPLIFIER_LOOP_CONDITION_CAP {
        return Err(Error::UnstableAmplifierLoop { cond, cap: AMPLIFIER_LOOP_CONDITION_CAP });
    }
    // X = (I - Φ_AA A)^{-1} [Φ_AI | I]
    let mut rhs = CMat::zeros(n, 2 * n);
    rhs.view_mut((0, 0), (n, n)).copy_from(spec.phi_ai());
    rhs.view_mut((0, n), (n, n)).copy_from(&CMat::identity(n, n));
    let x = solve_lu(&loop_matrix, &rhs, "I - Phi_AA * A")?;
    let lead = spec.phi_ia() * &a;
    let gamma_i = spec.phi_ii() + &lead * x.view((0, 0), (n, n)).into_owned();
    let pi_i = &lead * x.view((0, n), (n, n)).into_owned();
    Ok((gamma_i, pi_i))
}

/// Full multiport model: composes the system scattering matrix with the
/// terminations `Γ_T`, `Γ_R` and the RIS reflection `Γ_I`, yielding the
/// channel `H` and both noise maps.
///
/// `T = (I_N - SΓ)^{-1} S` with `Γ = blkdiag(Γ_T, Γ_I, Γ_R)`, then
/// `H = (I + Γ_R) T_RT (I + T_TT + Γ_T T_TT)^{-1}`.
pub fn general_channel(
    s: &PartitionedScattering,
    gamma_t: &CMat,
    gamma_r: &CMat,
    gamma_i: &CMat,
    pi_i: &CMat,
) -> Result<GeneralChannel> {
    let (n_t, n_i, n_r) = (s.n_t(), s.n_i(), s.n_r());
    for (name, m, d) in [
        ("Gamma_T", gamma_t, n_t),
        ("Gamma_R", gamma_r, n_r),
        ("Gamma_I", gamma_i, n_i),
        ("Pi_I", pi_i, n_i),
    ] {
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::dims("general_channel", format!("{name} {d}x{d}"), format!("{}x{}", m.nrows(), m.ncols())));
        }
    }
    let n = s.n();
    let mut gamma = CMat::zeros(n, n);
    gamma.view_mut((0, 0), (n_t, n_t)).copy_from(gamma_t);
    gamma.view_mut((n_t, n_t), (n_i, n_i)).copy_from(gamma_i);
    gamma.view_mut((n_t + n_i, n_t + n_i), (n_r, n_r)).copy_from(gamma_r);

    let system = CMat::identity(n, n) - s.matrix() * &gamma;
    let t = solve_lu(&system, s.matrix(), "I - S*Gamma")?;

    let t_tt = t.view((0, 0), (n_t, n_t)).into_owned();
    let t_rt = t.view((n_t + n_i, 0), (n_r, n_t)).into_owned();
    let t_ri = t.view((n_t + n_i, n_t), (n_r, n_i)).into_owned();
    let t_rr = t.view((n_t + n_i, n_t + n_i), (n_r, n_r)).into_owned();

    // H = (I + Γ_R) T_RT (I + T_TT + Γ_T T_TT)^{-1}, via a transposed solve
    let denom = CMat::identity(n_t, n_t) + &t_tt + gamma_t * &t_tt;
    let ht = solve_lu(&denom.transpose(), &t_rt.transpose(), "I + T_TT + Gamma_T*T_TT")?;
    let i_plus_gr = CMat::identity(n_r, n_r) + gamma_r;
    let h = &i_plus_gr * ht.transpose();

    let mut ris_pair = CMat::zeros(n_i, 2 * n_i);
    ris_pair.view_mut((0, 0), (n_i, n_i)).copy_from(gamma_i);
    ris_pair.view_mut((0, n_i), (n_i, n_i)).copy_from(pi_i);
    let ris_noise_map = &i_plus_gr * &t_ri * ris_pair;
    let rx_noise_map = &i_plus_gr * (CMat::identity(n_r, n_r) + &t_rr * gamma_r);

    Ok(GeneralChannel { h, ris_noise_map, rx_noise_map })
}

/// Simplified model under matched terminations, unilateral propagation, and
/// uncoupled antennas: `H = H_RT + H_RI Θ H_IT`.
pub fn simplified_channel(h_rt: &CMat, h_ri: &CMat, h_it: &CMat, theta: &CMat) -> Result<CMat> {
    let (n_r, n_t) = h_rt.shape();
    let n_i = theta.nrows();
    if theta.ncols() != n_i || h_ri.nrows() != n_r || h_ri.ncols() != n_i || h_it.nrows() != n_i || h_it.ncols() != n_t {
        return Err(Error::dims(
            "simplified_channel",
            format!("H_RT {n_r}x{n_t}, H_RI {n_r}x{n_i}, Theta {n_i}x{n_i}, H_IT {n_i}x{n_t}"),
            format!(
                "H_RT {}x{}, H_RI {}x{}, Theta {}x{}, H_IT {}x{}",
                h_rt.nrows(), h_rt.ncols(), h_ri.nrows(), h_ri.ncols(), theta.nrows(), theta.ncols(), h_it.nrows(), h_it.ncols()
            ),
        ));
    }
    Ok(h_rt + h_ri * theta * h_it)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netcore::assemble_theta;
    use crate::testutil::{random_matrix, random_unitary, rng};
    use crate::{C64, CVec};
    use rand::prelude::*;

    #[test]
    fn reflection_with_amplifiers_off() {
        let mut r = rng(41);
        let n = 3;
        let phi_ii = random_matrix(n, n, &mut r).scale(0.3);
        let spec = ImpedanceNetworkSpec::new(
            phi_ii.clone(),
            random_matrix(n, n, &mut r),
            random_matrix(n, n, &mut r),
            random_matrix(n, n, &mut r).scale(0.3),
            vec![0.0; n],
        )
        .unwrap();
        let (gamma_i, pi_i) = general_active_reflection(&spec).unwrap();
        assert!((gamma_i - phi_ii).norm() < 1e-14);
        assert!(pi_i.norm() < 1e-14);
    }

    #[test]
    fn reflection_reduces_under_matched_isolated() {
        let mut r = rng(43);
        let n = 4;
        let phi_ia = random_unitary(n, &mut r);
        let amp: Vec<f64> = (0..n).map(|_| r.random::<f64>() * 2.0).collect();
        let spec = ImpedanceNetworkSpec::matched_isolated_reciprocal(phi_ia, amp).unwrap();
        let (gamma_i, pi_i) = general_active_reflection(&spec).unwrap();
        let theta = assemble_theta(&spec).unwrap();
        // exact agreement entrywise
        for i in 0..n {
            for j in 0..n {
                assert!((gamma_i[(i, j)] - theta[(i, j)]).norm() <= 1e-13);
            }
        }
        let expected_pi = spec.phi_ia() * spec.amp_matrix();
        assert!((pi_i - expected_pi).norm() < 1e-13);
    }

    #[test]
    fn reflection_matches_neumann_series_oracle() {
        let mut r = rng(47);
        let n = 3;
        let phi_ii = random_matrix(n, n, &mut r).scale(0.2);
        let phi_ia = random_matrix(n, n, &mut r).scale(0.5);
        let phi_ai = random_matrix(n, n, &mut r).scale(0.5);
        let phi_aa = random_matrix(n, n, &mut r).scale(0.3);
        let amp: Vec<f64> = (0..n).map(|_| r.random::<f64>()).collect();
        let spec = ImpedanceNetworkSpec::new(phi_ii.clone(), phi_ia.clone(), phi_ai.clone(), phi_aa.clone(), amp.clone()).unwrap();
        let a = spec.amp_matrix();
        assert!((phi_aa.clone() * &a).norm() < 1.0, "test construction must keep the loop contractive");

        let (gamma_i, pi_i) = general_active_reflection(&spec).unwrap();

        // truncated series: Γ_I = Φ_II + Σ_k Φ_IA A (Φ_AA A)^k Φ_AI
        let loop_term = &phi_aa * &a;
        let mut power = CMat::identity(n, n);
        let mut gamma_series = phi_ii.clone();
        let mut pi_series = CMat::zeros(n, n);
        for _ in 0..200 {
            gamma_series += &phi_ia * &a * &power * &phi_ai;
            pi_series += &phi_ia * &a * &power;
            power = &power * &loop_term;
            if power.norm() < 1e-18 {
                break;
            }
        }
        assert!((gamma_i - gamma_series).norm() < 1e-12);
        assert!((pi_i - pi_series).norm() < 1e-12);
    }

    #[test]
    fn reflection_rejects_unstable_loop() {
        let n = 2;
        // Φ_AA A = I makes the loop singular
        let spec = ImpedanceNetworkSpec::new(
            CMat::zeros(n, n),
            CMat::identity(n, n),
            CMat::identity(n, n),
            CMat::identity(n, n),
            vec![1.0; n],
        )
        .unwrap();
        assert!(matches!(general_active_reflection(&spec), Err(Error::UnstableAmplifierLoop { .. })));
    }

    #[test]
    fn general_channel_reduces_to_simplified() {
        let mut r = rng(53);
        let (n_t, n_i, n_r) = (2, 3, 2);
        let s_rt = random_matrix(n_r, n_t, &mut r);
        let s_ri = random_matrix(n_r, n_i, &mut r);
        let s_it = random_matrix(n_i, n_t, &mut r);
        let s = PartitionedScattering::from_links(&s_rt, &s_ri, &s_it).unwrap();
        let theta = random_matrix(n_i, n_i, &mut r);
        let pi = random_matrix(n_i, n_i, &mut r);
        let out = general_channel(&s, &CMat::zeros(n_t, n_t), &CMat::zeros(n_r, n_r), &theta, &pi).unwrap();
        let h_simple = simplified_channel(&s_rt, &s_ri, &s_it, &theta).unwrap();
        assert!((out.h.clone() - h_simple).norm() < 1e-12 * out.h.norm().max(1.0));
        // with Γ_R = 0 and T_RR = 0 the receiver noise map is the identity
        assert!((out.rx_noise_map - CMat::identity(n_r, n_r)).norm() < 1e-13);
        // RIS noise enters through S_RI [Θ | Π]
        let expect_ris = {
            let mut pair = CMat::zeros(n_i, 2 * n_i);
            pair.view_mut((0, 0), (n_i, n_i)).copy_from(&theta);
            pair.view_mut((0, n_i), (n_i, n_i)).copy_from(&pi);
            &s_ri * pair
        };
        assert!((out.ris_noise_map - expect_ris).norm() < 1e-13);
    }

    #[test]
    fn general_channel_zero_scattering() {
        let s = PartitionedScattering::new(CMat::zeros(6, 6), 2, 2, 2).unwrap();
        let z = CMat::zeros(2, 2);
        let out = general_channel(&s, &z, &z, &z, &z).unwrap();
        assert!(out.h.norm() < 1e-15);
    }

    #[test]
    fn general_channel_matches_wave_fixed_point_oracle() {
        let mut r = rng(59);
        let (n_t, n_i, n_r) = (2, 2, 2);
        let n = n_t + n_i + n_r;
        // random mismatched system, scaled so the fixed-point iteration converges
        let s_full = random_matrix(n, n, &mut r).scale(0.35);
        let s = PartitionedScattering::new(s_full.clone(), n_t, n_i, n_r).unwrap();
        let gamma_t = crate::linalg::diag_c(&[C64::new(0.2, 0.1), C64::new(-0.1, 0.15)]);
        let gamma_r = crate::linalg::diag_c(&[C64::new(0.05, -0.2), C64::new(0.12, 0.08)]);
        let gamma_i = random_matrix(n_i, n_i, &mut r).scale(0.4);
        let pi_i = random_matrix(n_i, n_i, &mut r).scale(0.4);
        let out = general_channel(&s, &gamma_t, &gamma_r, &gamma_i, &pi_i).unwrap();

        let mut gamma = CMat::zeros(n, n);
        gamma.view_mut((0, 0), (n_t, n_t)).copy_from(&gamma_t);
        gamma.view_mut((n_t, n_t), (n_i, n_i)).copy_from(&gamma_i);
        gamma.view_mut((n_t + n_i, n_t + n_i), (n_r, n_r)).copy_from(&gamma_r);

        // drive each source-basis vector through b <- S(b_S + Γ b)
        let mut vt_cols = CMat::zeros(n_t, n_t);
        let mut vr_cols = CMat::zeros(n_r, n_t);
        for k in 0..n_t {
            let mut b_s = CVec::zeros(n);
            b_s[k] = C64::new(1.0, 0.0);
            let mut b = CVec::zeros(n);
            for _ in 0..5000 {
                let next = s_full.clone() * (&b_s + &gamma * &b);
                if (&next - &b).norm() < 1e-16 {
                    b = next;
                    break;
                }
                b = next;
            }
            let b_t = b.rows(0, n_t).into_owned();
            let b_r = b.rows(n_t + n_i, n_r).into_owned();
            let v_t = b_s.rows(0, n_t) + (CMat::identity(n_t, n_t) + &gamma_t) * b_t;
            let v_r = (CMat::identity(n_r, n_r) + &gamma_r) * b_r;
            vt_cols.set_column(k, &v_t);
            vr_cols.set_column(k, &v_r);
        }
        // H maps v_T to v_R: H = V_R V_T^{-1}
        let h_oracle = &vr_cols * vt_cols.try_inverse().expect("well-conditioned");
        assert!((out.h - h_oracle).norm() < 1e-10);
    }

    #[test]
    fn simplified_channel_zero_theta_and_pickout() {
        let mut r = rng(61);
        let h_rt = random_matrix(2, 2, &mut r);
        let h_ri = random_matrix(2, 3, &mut r);
        let h_it = random_matrix(3, 2, &mut r);
        let h = simplified_channel(&h_rt, &h_ri, &h_it, &CMat::zeros(3, 3)).unwrap();
        assert!((h - &h_rt).norm() < 1e-15);

        // unit-vector pick-out: h_RT = 0, H_RI = e_1^T, H_IT = e_1, Θ = diag(5j, ...)
        let n_i = 3;
        let mut e1_row = CMat::zeros(1, n_i);
        e1_row[(0, 0)] = C64::new(1.0, 0.0);
        let mut e1_col = CMat::zeros(n_i, 1);
        e1_col[(0, 0)] = C64::new(1.0, 0.0);
        let theta = crate::linalg::diag_c(&[C64::new(0.0, 5.0), C64::new(1.0, 0.0), C64::new(2.0, 0.0)]);
        let h = simplified_channel(&CMat::zeros(1, 1), &e1_row, &e1_col, &theta).unwrap();
        assert!((h[(0, 0)] - C64::new(0.0, 5.0)).norm() < 1e-15);
    }
}
