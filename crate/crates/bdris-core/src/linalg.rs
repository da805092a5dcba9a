//! Small dense complex-matrix helpers shared across modules.

use crate::{C64, CMat, CVec, Error, Result};
use nalgebra::DVector;

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMat::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let s = a[(i, j)];
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = s * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Column-major vectorization `vec(M)`.
pub fn vec_of(m: &CMat) -> CVec {
    CVec::from_column_slice(m.as_slice())
}

/// Inverse of [`vec_of`] for an `rows × cols` matrix.
pub fn unvec(v: &CVec, rows: usize, cols: usize) -> CMat {
    assert_eq!(v.len(), rows * cols, "unvec length mismatch");
    CMat::from_column_slice(rows, cols, v.as_slice())
}

/// Relative Frobenius distance `‖a - b‖_F / max(‖a‖_F, ε)`.
pub fn rel_frob(a: &CMat, b: &CMat) -> f64 {
    let denom = a.norm().max(1e-300);
    (a - b).norm() / denom
}

/// Frobenius deviation of `m` from Hermitian, relative to `‖m‖_F`.
pub fn hermitian_residual(m: &CMat) -> f64 {
    rel_frob(m, &m.adjoint())
}

/// Frobenius deviation of `m` from complex symmetric, relative to `‖m‖_F`.
pub fn symmetry_residual(m: &CMat) -> f64 {
    rel_frob(m, &m.transpose())
}

/// Frobenius deviation of `m^H m` from the identity (unitarity residual).
pub fn unitarity_residual(m: &CMat) -> f64 {
    let n = m.ncols();
    (m.adjoint() * m - CMat::identity(n, n)).norm() / (n as f64).sqrt()
}

/// Hermitian symmetrization `(m + m^H)/2`.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Complex diagonal matrix from a slice of complex entries.
pub fn diag_c(entries: &[C64]) -> CMat {
    CMat::from_diagonal(&CVec::from_column_slice(entries))
}

/// Complex diagonal matrix from real entries.
pub fn diag_r(entries: &[f64]) -> CMat {
    let v: Vec<C64> = entries.iter().map(|&x| C64::new(x, 0.0)).collect();
    diag_c(&v)
}

/// Condition number estimate via singular values.
pub fn condition_number(m: &CMat) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Solves `m x = b` by LU, reporting a singular system for `context`.
pub fn solve_lu(m: &CMat, b: &CMat, context: &'static str) -> Result<CMat> {
    m.clone()
        .lu()
        .solve(b)
        .ok_or(Error::SingularSystem { context })
}

/// Extends a set of orthonormal columns to a full unitary matrix.
///
/// The completion is deterministic: at each step the canonical basis vector
/// with the largest residual norm after projection is orthonormalized and
/// appended. `pinned` columns must already be orthonormal.
pub fn complete_unitary(pinned: &[CVec], n: usize) -> Result<CMat> {
    let mut cols: Vec<CVec> = Vec::with_capacity(n);
    for (k, p) in pinned.iter().enumerate() {
        if p.len() != n {
            return Err(Error::dims("complete_unitary", format!("{n}"), format!("{}", p.len())));
        }
        let mut v = p.clone();
        for c in &cols {
            let proj = c.dotc(&v);
            v -= c * proj;
        }
        let norm = v.norm();
        if norm < 1e-10 {
            return Err(Error::InvalidParameter {
                name: "pinned",
                message: format!("pinned column {k} is linearly dependent on earlier ones"),
            });
        }
        cols.push(v.unscale(norm));
    }
    while cols.len() < n {
        // pick the canonical basis vector with the largest orthogonal residual
        let mut best: Option<(f64, CVec)> = None;
        for j in 0..n {
            let mut v = CVec::zeros(n);
            v[j] = C64::new(1.0, 0.0);
            for c in &cols {
                let proj = c.dotc(&v);
                v -= c * proj;
            }
            let norm = v.norm();
            if best.as_ref().map_or(true, |(bn, _)| norm > *bn) {
                best = Some((norm, v));
            }
        }
        let (norm, v) = best.expect("n > 0");
        debug_assert!(norm > 1e-8, "orthonormal completion lost rank");
        cols.push(v.unscale(norm));
    }
    let mut q = CMat::zeros(n, n);
    for (j, c) in cols.iter().enumerate() {
        q.set_column(j, c);
    }
    Ok(q)
}

/// Descending sort permutation for a real vector.
pub fn descending_permutation(v: &DVector<f64>) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[b].partial_cmp(&v[a]).expect("finite singular values"));
    idx
}
