//! Small dense linear-algebra helpers.
//!
//! Everything here operates on matrices of dimension at most ~10, so direct
//! factorizations (SVD, symmetric eigendecomposition) are used throughout.

use nalgebra::{DMatrix, DVector};

/// Relative singular-value threshold used for all rank decisions.
pub const RANK_REL_TOL: f64 = 1e-9;

/// Symmetric eigendecomposition with eigenvalues sorted ascending.
/// Returns `(eigenvalues, eigenvectors)` with eigenvectors as columns.
pub fn sym_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (DVector::zeros(0), DMatrix::zeros(0, 0));
    }
    let sym = 0.5 * (m + m.transpose());
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let vals = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vecs = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    (vals, vecs)
}

/// Spectral norm of a symmetric matrix (largest absolute eigenvalue).
pub fn spectral_norm_sym(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let (vals, _) = sym_eigen(m);
    vals.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Condition number sigma_max / sigma_min (infinite for singular input).
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 1.0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Rank by singular values against `RANK_REL_TOL * sigma_max`.
pub fn rank(m: &DMatrix<f64>) -> usize {
    rank_floored(m, 0.0)
}

/// Rank with an additional absolute threshold floor. The floor guards
/// matrices that are zero up to inherited roundoff, where a purely relative
/// rule would count the noise.
pub fn rank_floored(m: &DMatrix<f64>, floor: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.max();
    if max == 0.0 {
        return 0;
    }
    let tol = (RANK_REL_TOL * max).max(floor);
    sv.iter().filter(|&&s| s > tol).count()
}

/// Orthonormal basis of the column space. When `forced_rank` is given the
/// leading that many left singular vectors are taken regardless of the
/// floating-point rank decision (used by the exact rational path, whose rank
/// is authoritative).
pub fn column_space(m: &DMatrix<f64>, forced_rank: Option<usize>) -> DMatrix<f64> {
    let nrows = m.nrows();
    if nrows == 0 || m.ncols() == 0 {
        return DMatrix::zeros(nrows, 0);
    }
    let r = forced_rank.unwrap_or_else(|| rank(m));
    let svd = m.clone().svd(true, false);
    let u = svd.u.as_ref().unwrap();
    u.columns(0, r.min(u.ncols())).into_owned()
}

/// Orthonormal basis of the (right) nullspace of `m`.
pub fn nullspace(m: &DMatrix<f64>, forced_rank: Option<usize>) -> DMatrix<f64> {
    let ncols = m.ncols();
    if ncols == 0 {
        return DMatrix::zeros(0, 0);
    }
    if m.nrows() == 0 {
        return DMatrix::identity(ncols, ncols);
    }
    let r = forced_rank.unwrap_or_else(|| rank(m));
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.as_ref().unwrap();
    // Rows r.. of V^T span the nullspace; V^T may have fewer rows than ncols
    // when nrows < ncols, in which case the missing directions are completed
    // by a Householder QR against the known rows (orthonormal regardless of
    // how close the candidate directions come to the known span).
    let available = vt.nrows();
    let mut basis = DMatrix::zeros(ncols, ncols - r);
    for (dst, src) in (r..available).enumerate() {
        basis.set_column(dst, &vt.row(src).transpose());
    }
    if available < ncols {
        let known = vt.transpose();
        let completed = complete_orthonormal(&known);
        for (dst, src) in (available..ncols).enumerate() {
            basis.set_column(available - r + dst, &completed.column(src));
        }
    }
    basis
}

/// Dense matrix exponential.
pub fn matrix_exp(m: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(m.nrows(), m.ncols());
    if m.nrows() == 0 {
        return DMatrix::zeros(0, 0);
    }
    m.exp()
}

/// Minimum-norm least-squares solution of `a x = b` via the pseudoinverse.
/// Returns the solution together with the numerical rank of `a`.
pub fn lstsq_min_norm(a: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, usize) {
    let svd = a.clone().svd(true, true);
    let max = svd.singular_values.max();
    let tol = RANK_REL_TOL * max.max(f64::MIN_POSITIVE);
    let r = svd.singular_values.iter().filter(|&&s| s > tol).count();
    let x = svd.solve(b, tol).expect("svd solve");
    (x, r)
}

/// sin of the largest principal angle from span(u) to span(v):
/// the spectral norm of (I - P_v) U for orthonormal bases U, V.
pub fn max_principal_angle_sin(u: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
    if u.ncols() == 0 {
        return 0.0;
    }
    let residual = u - v * (v.transpose() * u);
    spectral_norm(&residual)
}

/// Completion of `basis` (orthonormal columns) to a full orthonormal basis
/// of the ambient space via Householder QR of [basis | I].
pub fn complete_orthonormal(basis: &DMatrix<f64>) -> DMatrix<f64> {
    let n = basis.nrows();
    let k = basis.ncols();
    if k == n {
        return basis.clone();
    }
    let mut padded = DMatrix::zeros(n, k + n);
    padded.columns_mut(0, k).copy_from(basis);
    padded.columns_mut(k, n).copy_from(&DMatrix::identity(n, n));
    let q = padded.qr().q();
    debug_assert_eq!(q.ncols(), n);
    // The first k columns of Q span the input (up to sign); keep the exact
    // input columns and append the remaining Q columns.
    let mut full = DMatrix::zeros(n, n);
    full.columns_mut(0, k).copy_from(basis);
    full.columns_mut(k, n - k).copy_from(&q.columns(k, n - k));
    full
}

/// Largest absolute entry.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Whether `m` is symmetric up to `tol * ||m||`.
pub fn is_symmetric(m: &DMatrix<f64>, rel_tol: f64) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    let scale = max_abs(m).max(f64::MIN_POSITIVE);
    let diff = m - m.transpose();
    max_abs(&diff) <= rel_tol * scale
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_sorted() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let (vals, vecs) = sym_eigen(&m);
        assert!((vals[0] - 1.0).abs() < 1e-12);
        assert!((vals[1] - 3.0).abs() < 1e-12);
        let recon = &vecs * DMatrix::from_diagonal(&vals) * vecs.transpose();
        assert!((recon - m).norm() < 1e-12);
    }

    #[test]
    fn rank_and_spaces() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(rank(&m), 2);
        let col = column_space(&m, None);
        assert_eq!(col.ncols(), 2);
        let null = nullspace(&m, None);
        assert_eq!(null.ncols(), 1);
        assert!((&m * &null).norm() < 1e-12);
    }

    #[test]
    fn nullspace_of_wide_matrix() {
        let m = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]);
        let null = nullspace(&m, None);
        assert_eq!(null.ncols(), 2);
        assert!((&m * &null).norm() < 1e-12);
        let gram = null.transpose() * &null;
        assert!((gram - DMatrix::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn exp_of_nilpotent_block() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 3.0, 0.0, 0.0]);
        let e = matrix_exp(&m);
        let expect = DMatrix::from_row_slice(2, 2, &[1.0, 3.0, 0.0, 1.0]);
        assert!((e - expect).norm() < 1e-14);
    }

    #[test]
    fn exp_matches_scalar() {
        let m = DMatrix::from_row_slice(1, 1, &[1.25]);
        let e = matrix_exp(&m);
        assert!((e[(0, 0)] - 1.25f64.exp()).abs() < 1e-13);
    }

    #[test]
    fn principal_angle_detects_distinct_spaces() {
        let u = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        let v = DMatrix::from_column_slice(3, 1, &[0.0, 1.0, 0.0]);
        assert!(max_principal_angle_sin(&u, &v) > 0.99);
        assert!(max_principal_angle_sin(&u, &u) < 1e-14);
    }
}
