//! Multiport scattering-parameter network algebra.
//!
//! The RIS sits between an `N_T`-antenna transmitter and an `N_R`-antenna
//! receiver; the whole system is an `N`-port network with scattering matrix
//! `S` partitioned into T/I/R blocks. The surface itself is a `2N_I`-port
//! passive reconfigurable impedance network (scattering matrix `Φ`) whose
//! back ports are terminated by reflection-type amplifiers `A = diag(A_i)`,
//! which composes into the `N_I`-port scattering matrix
//!
//! ```text
//! Θ = Φ_IA · A · Φ_AI            (matched, lossless network)
//! ```
//!
//! The circuit topology of the impedance network constrains `Θ`:
//! single-connected makes it diagonal, group-connected makes it block
//! diagonal, and a reciprocal network additionally forces each block to be
//! complex symmetric.

mod general;
mod takagi;

pub use general::{general_active_reflection, general_channel, simplified_channel, GeneralChannel};
pub use takagi::takagi;

use crate::linalg::{diag_c, diag_r};
use crate::{C64, CMat, Error, Result};

/// Default relative Frobenius tolerance for structural predicates.
///
/// Double-precision decompositions deliver ~1e-13, leaving margin.
pub const DEFAULT_STRUCT_TOL: f64 = 1e-10;

/// Condition-number cap for the `(I - Φ_AA A)` inversion.
pub const AMPLIFIER_LOOP_CONDITION_CAP: f64 = 1e12;

/// Element grouping of a BD-RIS: `G` groups of `N_G` interconnected elements.
///
/// `group_size == 1` is the single-connected case (conventional active
/// D-RIS); `groups == 1` is fully-connected. A reciprocal impedance network
/// forces each block of `Θ` to be complex symmetric.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    groups: usize,
    group_size: usize,
    reciprocal: bool,
}

impl Architecture {
    pub fn new(groups: usize, group_size: usize, reciprocal: bool) -> Result<Self> {
        if groups == 0 || group_size == 0 {
            return Err(Error::InvalidParameter {
                name: "architecture",
                message: format!("groups ({groups}) and group_size ({group_size}) must be positive"),
            });
        }
        Ok(Self { groups, group_size, reciprocal })
    }

    /// Single-connected (diagonal Θ): `n_i` groups of size 1.
    pub fn single_connected(n_i: usize, reciprocal: bool) -> Result<Self> {
        Self::new(n_i, 1, reciprocal)
    }

    /// Fully-connected: one group of size `n_i`.
    pub fn fully_connected(n_i: usize, reciprocal: bool) -> Result<Self> {
        Self::new(1, n_i, reciprocal)
    }

    pub fn groups(&self) -> usize {
        self.groups
    }

    pub fn group_size(&self) -> usize {
        self.group_size
    }

    pub fn reciprocal(&self) -> bool {
        self.reciprocal
    }

    /// Total element count `N_I = G · N_G`.
    pub fn n_elements(&self) -> usize {
        self.groups * self.group_size
    }

    pub fn is_single_connected(&self) -> bool {
        self.group_size == 1
    }

    pub fn is_fully_connected(&self) -> bool {
        self.groups == 1
    }

    /// Index range of group `g` within `0..N_I`.
    pub fn group_range(&self, g: usize) -> std::ops::Range<usize> {
        g * self.group_size..(g + 1) * self.group_size
    }
}

/// System scattering matrix with its T/I/R block partition.
#[derive(Debug, Clone)]
pub struct PartitionedScattering {
    s: CMat,
    n_t: usize,
    n_i: usize,
    n_r: usize,
}

impl PartitionedScattering {
    pub fn new(s: CMat, n_t: usize, n_i: usize, n_r: usize) -> Result<Self> {
        let n = n_t + n_i + n_r;
        if n_t == 0 || n_i == 0 || n_r == 0 {
            return Err(Error::InvalidParameter {
                name: "partition",
                message: format!("all partition sizes must be positive, got ({n_t}, {n_i}, {n_r})"),
            });
        }
        if s.nrows() != n || s.ncols() != n {
            return Err(Error::dims("PartitionedScattering", format!("{n}x{n}"), format!("{}x{}", s.nrows(), s.ncols())));
        }
        Ok(Self { s, n_t, n_i, n_r })
    }

    /// Assembles the unilateral, matched system from the three forward links
    /// (`S_RT`, `S_RI`, `S_IT`); every other block is zero.
    pub fn from_links(s_rt: &CMat, s_ri: &CMat, s_it: &CMat) -> Result<Self> {
        let n_t = s_it.ncols();
        let n_i = s_it.nrows();
        let n_r = s_rt.nrows();
        if s_rt.ncols() != n_t || s_ri.nrows() != n_r || s_ri.ncols() != n_i {
            return Err(Error::dims(
                "PartitionedScattering::from_links",
                format!("S_RT {n_r}x{n_t}, S_RI {n_r}x{n_i}, S_IT {n_i}x{n_t}"),
                format!(
                    "S_RT {}x{}, S_RI {}x{}, S_IT {}x{}",
                    s_rt.nrows(), s_rt.ncols(), s_ri.nrows(), s_ri.ncols(), s_it.nrows(), s_it.ncols()
                ),
            ));
        }
        let n = n_t + n_i + n_r;
        let mut s = CMat::zeros(n, n);
        s.view_mut((n_t, 0), (n_i, n_t)).copy_from(s_it);
        s.view_mut((n_t + n_i, 0), (n_r, n_t)).copy_from(s_rt);
        s.view_mut((n_t + n_i, n_t), (n_r, n_i)).copy_from(s_ri);
        Self::new(s, n_t, n_i, n_r)
    }

    pub fn n_t(&self) -> usize { self.n_t }
    pub fn n_i(&self) -> usize { self.n_i }
    pub fn n_r(&self) -> usize { self.n_r }
    pub fn n(&self) -> usize { self.n_t + self.n_i + self.n_r }
    pub fn matrix(&self) -> &CMat { &self.s }

    fn offset(&self, which: char) -> (usize, usize) {
        match which {
            'T' => (0, self.n_t),
            'I' => (self.n_t, self.n_i),
            'R' => (self.n_t + self.n_i, self.n_r),
            _ => unreachable!(),
        }
    }

    fn block(&self, row: char, col: char) -> CMat {
        let (r0, nr) = self.offset(row);
        let (c0, nc) = self.offset(col);
        self.s.view((r0, c0), (nr, nc)).into_owned()
    }

    pub fn s_tt(&self) -> CMat { self.block('T', 'T') }
    pub fn s_ti(&self) -> CMat { self.block('T', 'I') }
    pub fn s_tr(&self) -> CMat { self.block('T', 'R') }
    pub fn s_it(&self) -> CMat { self.block('I', 'T') }
    pub fn s_ii(&self) -> CMat { self.block('I', 'I') }
    pub fn s_ir(&self) -> CMat { self.block('I', 'R') }
    pub fn s_rt(&self) -> CMat { self.block('R', 'T') }
    pub fn s_ri(&self) -> CMat { self.block('R', 'I') }
    pub fn s_rr(&self) -> CMat { self.block('R', 'R') }

    /// Norm of the reverse-coupling blocks `S_TR`, `S_IR`, `S_TI` that the
    /// unilateral approximation sets to zero.
    pub fn unilateral_residual(&self) -> f64 {
        (self.s_tr().norm().powi(2) + self.s_ir().norm().powi(2) + self.s_ti().norm().powi(2)).sqrt()
    }

    /// Norm of the self blocks `S_TT`, `S_II`, `S_RR` that perfect matching
    /// with no mutual coupling sets to zero.
    pub fn matched_residual(&self) -> f64 {
        (self.s_tt().norm().powi(2) + self.s_ii().norm().powi(2) + self.s_rr().norm().powi(2)).sqrt()
    }
}

/// Scattering blocks of the `2N_I`-port passive impedance network plus the
/// amplifier gains `A_i` terminating its back ports.
#[derive(Debug, Clone)]
pub struct ImpedanceNetworkSpec {
    phi_ii: CMat,
    phi_ia: CMat,
    phi_ai: CMat,
    phi_aa: CMat,
    amp: Vec<f64>,
}

impl ImpedanceNetworkSpec {
    pub fn new(phi_ii: CMat, phi_ia: CMat, phi_ai: CMat, phi_aa: CMat, amp: Vec<f64>) -> Result<Self> {
        let n = amp.len();
        for (name, m) in [("phi_ii", &phi_ii), ("phi_ia", &phi_ia), ("phi_ai", &phi_ai), ("phi_aa", &phi_aa)] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::dims("ImpedanceNetworkSpec", format!("{name} {n}x{n}"), format!("{}x{}", m.nrows(), m.ncols())));
            }
        }
        if let Some(bad) = amp.iter().find(|a| !a.is_finite() || **a < 0.0) {
            return Err(Error::InvalidParameter {
                name: "amp",
                message: format!("amplification factors must be finite and non-negative, got {bad}"),
            });
        }
        Ok(Self { phi_ii, phi_ia, phi_ai, phi_aa, amp })
    }

    /// Matched/isolated network (`Φ_II = Φ_AA = 0`) with independent
    /// transmission blocks: the non-reciprocal form.
    pub fn matched_isolated(phi_ia: CMat, phi_ai: CMat, amp: Vec<f64>) -> Result<Self> {
        let n = amp.len();
        Self::new(CMat::zeros(n, n), phi_ia, phi_ai, CMat::zeros(n, n), amp)
    }

    /// Matched/isolated reciprocal network: aliases `Φ_AI := Φ_IA^T`.
    pub fn matched_isolated_reciprocal(phi_ia: CMat, amp: Vec<f64>) -> Result<Self> {
        let phi_ai = phi_ia.transpose();
        Self::matched_isolated(phi_ia, phi_ai, amp)
    }

    pub fn n_i(&self) -> usize { self.amp.len() }
    pub fn phi_ii(&self) -> &CMat { &self.phi_ii }
    pub fn phi_ia(&self) -> &CMat { &self.phi_ia }
    pub fn phi_ai(&self) -> &CMat { &self.phi_ai }
    pub fn phi_aa(&self) -> &CMat { &self.phi_aa }
    pub fn amp(&self) -> &[f64] { &self.amp }

    /// Amplifier matrix `A = diag(A_1, ..., A_{N_I})`.
    pub fn amp_matrix(&self) -> CMat {
        diag_r(&self.amp)
    }

    /// The full `2N_I × 2N_I` scattering matrix `Φ`.
    pub fn phi(&self) -> CMat {
        let n = self.n_i();
        let mut phi = CMat::zeros(2 * n, 2 * n);
        phi.view_mut((0, 0), (n, n)).copy_from(&self.phi_ii);
        phi.view_mut((0, n), (n, n)).copy_from(&self.phi_ia);
        phi.view_mut((n, 0), (n, n)).copy_from(&self.phi_ai);
        phi.view_mut((n, n), (n, n)).copy_from(&self.phi_aa);
        phi
    }

    /// Residual of the lossless condition `Φ^H Φ = I_{2N_I}`, relative scale.
    pub fn lossless_residual(&self) -> f64 {
        crate::linalg::unitarity_residual(&self.phi())
    }

    /// Residual of the matched/isolated condition `Φ_II = Φ_AA = 0`.
    pub fn matched_residual(&self) -> f64 {
        (self.phi_ii.norm().powi(2) + self.phi_aa.norm().powi(2)).sqrt()
    }

    /// Residual of reciprocity `Φ_AI = Φ_IA^T`.
    pub fn reciprocity_residual(&self) -> f64 {
        (&self.phi_ai - self.phi_ia.transpose()).norm() / self.phi_ia.norm().max(1e-300)
    }
}

/// Receiver and RIS dynamic-noise powers in watts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub sigma_r_sq: f64,
    pub sigma_i_sq: f64,
}

impl NoiseModel {
    pub fn new(sigma_r_sq: f64, sigma_i_sq: f64) -> Result<Self> {
        if !(sigma_r_sq > 0.0) || !(sigma_i_sq > 0.0) {
            return Err(Error::InvalidParameter {
                name: "noise",
                message: format!("noise powers must be strictly positive, got sigma_R^2 = {sigma_r_sq}, sigma_I^2 = {sigma_i_sq}"),
            });
        }
        Ok(Self { sigma_r_sq, sigma_i_sq })
    }
}

/// Which structural constraint a Θ candidate violates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaViolationKind {
    /// Nonzero entry outside the block-diagonal support.
    OffBlock,
    /// Block entry differs from its transpose partner (reciprocal case).
    Asymmetry,
}

/// Worst violating entry found by [`validate_theta`].
#[derive(Debug, Clone, Copy)]
pub struct ThetaViolation {
    pub kind: ThetaViolationKind,
    pub row: usize,
    pub col: usize,
    pub magnitude: f64,
}

/// Outcome of [`validate_theta`].
#[derive(Debug, Clone)]
pub struct ThetaReport {
    pub ok: bool,
    pub worst: Option<ThetaViolation>,
}

/// Scattering matrix of the RIS together with the architecture whose feasible
/// set it must lie in. Construction validates the structure.
#[derive(Debug, Clone)]
pub struct ThetaMatrix {
    theta: CMat,
    arch: Architecture,
}

impl ThetaMatrix {
    pub fn new(theta: CMat, arch: Architecture, tol: f64) -> Result<Self> {
        let n = arch.n_elements();
        if theta.nrows() != n || theta.ncols() != n {
            return Err(Error::dims("ThetaMatrix", format!("{n}x{n}"), format!("{}x{}", theta.nrows(), theta.ncols())));
        }
        let report = validate_theta(&theta, &arch, tol);
        if !report.ok {
            let v = report.worst.expect("failed report carries a violation");
            return Err(Error::ToleranceViolated {
                what: match v.kind {
                    ThetaViolationKind::OffBlock => "theta block-diagonal structure",
                    ThetaViolationKind::Asymmetry => "theta block symmetry",
                },
                residual: v.magnitude,
                tol,
            });
        }
        Ok(Self { theta, arch })
    }

    /// Assembles Θ from per-group blocks, zero off-block by construction.
    pub fn from_blocks(blocks: &[CMat], reciprocal: bool, tol: f64) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidParameter { name: "blocks", message: "need at least one block".into() });
        }
        let ng = blocks[0].nrows();
        let arch = Architecture::new(blocks.len(), ng, reciprocal)?;
        let n = arch.n_elements();
        let mut theta = CMat::zeros(n, n);
        for (g, b) in blocks.iter().enumerate() {
            if b.nrows() != ng || b.ncols() != ng {
                return Err(Error::dims("ThetaMatrix::from_blocks", format!("{ng}x{ng}"), format!("{}x{}", b.nrows(), b.ncols())));
            }
            theta.view_mut((g * ng, g * ng), (ng, ng)).copy_from(b);
        }
        Self::new(theta, arch, tol)
    }

    pub fn matrix(&self) -> &CMat { &self.theta }
    pub fn arch(&self) -> &Architecture { &self.arch }

    /// Owned copy of the `g`-th diagonal block.
    pub fn block(&self, g: usize) -> CMat {
        let ng = self.arch.group_size();
        self.theta.view((g * ng, g * ng), (ng, ng)).into_owned()
    }
}

/// Composes `Θ = Φ_IA · diag(A) · Φ_AI` for a matched, lossless network.
///
/// The spec must satisfy the matched/isolated and lossless flags within the
/// structural tolerance; composing a mismatched network this way would be
/// silently wrong, so it is rejected instead (use
/// [`general_active_reflection`] for the general case).
pub fn assemble_theta(spec: &ImpedanceNetworkSpec) -> Result<CMat> {
    let tol = DEFAULT_STRUCT_TOL;
    let matched = spec.matched_residual();
    if matched > tol * spec.phi_ia().norm().max(1.0) {
        return Err(Error::ToleranceViolated { what: "matched/isolated flag (Phi_II = Phi_AA = 0)", residual: matched, tol });
    }
    let lossless = spec.lossless_residual();
    if lossless > tol {
        return Err(Error::ToleranceViolated { what: "lossless flag (Phi^H Phi = I)", residual: lossless, tol });
    }
    Ok(spec.phi_ia() * spec.amp_matrix() * spec.phi_ai())
}

/// Checks Θ against an architecture's feasible set.
///
/// Off-block entries must vanish (within `tol` relative to `‖Θ‖_F`); when the
/// architecture is reciprocal each block must equal its transpose within the
/// same scale. Pure predicate: reports the worst violating entry instead of
/// erroring.
pub fn validate_theta(theta: &CMat, arch: &Architecture, tol: f64) -> ThetaReport {
    let n = arch.n_elements();
    if theta.nrows() != n || theta.ncols() != n {
        return ThetaReport {
            ok: false,
            worst: Some(ThetaViolation { kind: ThetaViolationKind::OffBlock, row: theta.nrows(), col: theta.ncols(), magnitude: f64::INFINITY }),
        };
    }
    let scale = theta.norm().max(1e-300);
    let ng = arch.group_size();
    let mut worst: Option<ThetaViolation> = None;
    let mut push = |cand: ThetaViolation| {
        if worst.as_ref().map_or(true, |w| cand.magnitude > w.magnitude) {
            worst = Some(cand);
        }
    };
    for i in 0..n {
        for j in 0..n {
            if i / ng != j / ng {
                let mag = theta[(i, j)].norm() / scale;
                if mag > tol {
                    push(ThetaViolation { kind: ThetaViolationKind::OffBlock, row: i, col: j, magnitude: mag });
                }
            } else if arch.reciprocal() && j > i {
                let mag = (theta[(i, j)] - theta[(j, i)]).norm() / scale;
                if mag > tol {
                    push(ThetaViolation { kind: ThetaViolationKind::Asymmetry, row: i, col: j, magnitude: mag });
                }
            }
        }
    }
    ThetaReport { ok: worst.is_none(), worst }
}

/// Passive reduction: amplifiers replaced by fixed reactive loads
/// `A = diag(e^{jψ_i})`, giving the symmetric unitary scattering matrix of a
/// fully-connected passive BD-RIS, `Θ = Φ_IA · diag(e^{jψ}) · Φ_IA^T`.
pub fn passive_reduction(phi_ia: &CMat, psi: &[f64]) -> Result<CMat> {
    let n = phi_ia.nrows();
    if phi_ia.ncols() != n || psi.len() != n {
        return Err(Error::dims("passive_reduction", format!("{n}x{n} and {n} phases"), format!("{}x{} and {} phases", phi_ia.nrows(), phi_ia.ncols(), psi.len())));
    }
    let res = crate::linalg::unitarity_residual(phi_ia);
    if res > DEFAULT_STRUCT_TOL {
        return Err(Error::ToleranceViolated { what: "phi_ia unitarity", residual: res, tol: DEFAULT_STRUCT_TOL });
    }
    let loads: Vec<C64> = psi.iter().map(|&p| C64::from_polar(1.0, p)).collect();
    Ok(phi_ia * diag_c(&loads) * phi_ia.transpose())
}
