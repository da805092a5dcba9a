//! Takagi factorization of complex symmetric matrices.
//!
//! Any complex symmetric `A` factors as `A = Q Σ Q^T` with `Q` unitary and
//! `Σ` the non-negative singular values. This underpins the fully-connected
//! architecture: every complex symmetric `Θ` is realizable as
//! `Φ_IA · A · Φ_IA^T` with unitary `Φ_IA` and non-negative diagonal `A`.

use crate::linalg::descending_permutation;
use crate::{C64, CMat, Error, Result};
use nalgebra::{DMatrix, DVector};

/// Computes the Takagi factorization `sym = Q · diag(sigma) · Q^T`.
///
/// `sigma` is returned sorted descending; `Q` is unitary. Inputs whose
/// symmetry residual exceeds `tol · ‖sym‖_F` are rejected.
///
/// The factorization is recovered from an SVD `sym = U Σ V^H`: the unitary
/// `B = U^H V*` commutes with `Σ²`, hence is block diagonal across groups of
/// equal singular values and complex symmetric within each group. Writing
/// `B_g = X + jY` with commuting real symmetric `X`, `Y`, a real orthogonal
/// basis diagonalizes both, and a square root of the resulting unimodular
/// diagonal gives `C_g` with `C_g C_g^T = B_g`, so `Q = U · blkdiag(C_g)`.
pub fn takagi(sym: &CMat, tol: f64) -> Result<(CMat, DVector<f64>)> {
    let n = sym.nrows();
    if sym.ncols() != n {
        return Err(Error::dims("takagi", "square matrix".to_string(), format!("{}x{}", n, sym.ncols())));
    }
    let scale = sym.norm();
    let sym_res = (sym - sym.transpose()).norm();
    if sym_res > tol * scale.max(1e-300) {
        return Err(Error::ToleranceViolated { what: "takagi input symmetry", residual: sym_res / scale.max(1e-300), tol });
    }
    if n == 0 {
        return Ok((CMat::zeros(0, 0), DVector::zeros(0)));
    }
    let a = (sym + sym.transpose()).scale(0.5);

    let svd = a.clone().svd(true, true);
    let u_raw = svd.u.expect("svd with u");
    let vt_raw = svd.v_t.expect("svd with v_t");
    let sv_raw = svd.singular_values;

    // enforce descending order explicitly
    let perm = descending_permutation(&sv_raw);
    let mut u = CMat::zeros(n, n);
    let mut v = CMat::zeros(n, n);
    let v_raw = vt_raw.adjoint();
    let mut sigma = DVector::zeros(n);
    for (dst, &src) in perm.iter().enumerate() {
        u.set_column(dst, &u_raw.column(src));
        v.set_column(dst, &v_raw.column(src));
        sigma[dst] = sv_raw[src];
    }

    let b = u.adjoint() * v.conjugate();

    // group indices of (numerically) equal singular values
    let smax = sigma[0].max(1e-300);
    let group_tol = 1e-8 * smax;
    let zero_tol = 1e-14 * smax;
    let mut groups: Vec<(usize, usize)> = Vec::new(); // [start, end)
    let mut start = 0;
    for i in 1..=n {
        if i == n || sigma[start] - sigma[i] > group_tol {
            groups.push((start, i));
            start = i;
        }
    }

    let mut c = CMat::identity(n, n);
    for &(lo, hi) in &groups {
        if sigma[lo] <= zero_tol {
            continue; // zero block contributes nothing; keep C_g = I
        }
        let m = hi - lo;
        let bg = b.view((lo, lo), (m, m)).into_owned();
        let bg = (&bg + bg.transpose()).scale(0.5);
        let cg = symmetric_unitary_sqrt(&bg);
        c.view_mut((lo, lo), (m, m)).copy_from(&cg);
    }

    Ok((u * c, sigma))
}

/// Symmetric unitary square root `C` of a symmetric unitary `B` (`C C^T = C² = B`).
///
/// `B = X + jY` has commuting real symmetric parts with `X² + Y² = I`; a
/// joint real orthogonal eigenbasis turns `B` into a unimodular diagonal
/// whose entrywise square root transforms back.
fn symmetric_unitary_sqrt(b: &CMat) -> CMat {
    let m = b.nrows();
    let x = DMatrix::<f64>::from_fn(m, m, |i, j| 0.5 * (b[(i, j)].re + b[(j, i)].re));
    let y = DMatrix::<f64>::from_fn(m, m, |i, j| 0.5 * (b[(i, j)].im + b[(j, i)].im));
    let o = joint_orthogonal_basis(&x, &y);

    let mut c = CMat::zeros(m, m);
    for k in 0..m {
        let ok = o.column(k);
        // d_k = o_k^T B o_k, unimodular up to rounding
        let mut d = C64::new(0.0, 0.0);
        for i in 0..m {
            for j in 0..m {
                d += C64::new(ok[i] * ok[j], 0.0) * b[(i, j)];
            }
        }
        let d = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        let s = C64::from_polar(1.0, d.arg() / 2.0);
        for i in 0..m {
            for j in 0..m {
                c[(i, j)] += s * C64::new(ok[i] * ok[j], 0.0);
            }
        }
    }
    c
}

/// Real orthogonal basis diagonalizing two commuting real symmetric matrices.
///
/// Eigendecomposes `x`, then rediagonalizes `y` restricted to each degenerate
/// eigenspace of `x`. Two levels suffice: where both restrictions are scalar
/// any orthonormal basis works.
fn joint_orthogonal_basis(x: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
    let m = x.nrows();
    let ex = x.clone().symmetric_eigen();
    let perm = descending_permutation(&ex.eigenvalues);
    let mut o = DMatrix::<f64>::zeros(m, m);
    let mut vals = DVector::<f64>::zeros(m);
    for (dst, &src) in perm.iter().enumerate() {
        o.set_column(dst, &ex.eigenvectors.column(src));
        vals[dst] = ex.eigenvalues[src];
    }
    let vmax = vals.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1e-300);
    let cluster_tol = 1e-8 * vmax;

    let mut lo = 0;
    while lo < m {
        let mut hi = lo + 1;
        while hi < m && (vals[lo] - vals[hi]).abs() <= cluster_tol {
            hi += 1;
        }
        if hi - lo > 1 {
            let sub = o.view((0, lo), (m, hi - lo)).into_owned();
            let ysub = sub.transpose() * y * &sub;
            let ysub = (&ysub + ysub.transpose()).scale(0.5);
            let ey = ysub.symmetric_eigen();
            let rotated = &sub * ey.eigenvectors;
            o.view_mut((0, lo), (m, hi - lo)).copy_from(&rotated);
        }
        lo = hi;
    }
    o
}
