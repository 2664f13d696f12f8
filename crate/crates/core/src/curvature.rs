//! Ricci endomorphism, its p/q decomposition, the infinitesimal gl-action on
//! bracket tensors, the moment-map pairing and the linearisation of the Ricci
//! map along the orbit.
//!
//! For a nilpotent bracket `mu` in an orthonormal background frame,
//!
//! ```text
//! Ric_rs = -1/2 sum_{i,j} mu_ri^j mu_si^j + 1/4 sum_{i,j} mu_ij^r mu_ij^s
//! ```
//!
//! with both sums over all *ordered* pairs (i, j). Under this convention
//! `tr Ric = -||mu||^2 / 4`, and the pairing identity
//! `<Ric_mu, A> = <pi(A) mu, mu> / 4` holds for every endomorphism A.

use nalgebra::DMatrix;

use crate::algebra::{SkewTensor, StructureTensor, Subspace};
use crate::error::Error;
use crate::linalg;
use crate::Result;

/// Symmetric endomorphism representing the Ricci bilinear form in the
/// background frame.
#[derive(Debug, Clone)]
pub struct RicciEndomorphism {
    matrix: DMatrix<f64>,
}

impl RicciEndomorphism {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    /// Eigenvalues sorted ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let (vals, _) = linalg::sym_eigen(&self.matrix);
        vals.iter().copied().collect()
    }
}

/// Positive semi-definite bilinear form together with its radical.
#[derive(Debug, Clone)]
pub struct SemiDefForm {
    pub matrix: DMatrix<f64>,
    pub radical: Subspace,
}

fn radical_of_psd(m: &DMatrix<f64>) -> Subspace {
    let n = m.nrows();
    let (vals, vecs) = linalg::sym_eigen(m);
    let max = vals.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if max == 0.0 {
        return Subspace::full(n);
    }
    let null_cols: Vec<usize> = (0..n)
        .filter(|&i| vals[i].abs() <= linalg::RANK_REL_TOL * max)
        .collect();
    let mut basis = DMatrix::zeros(n, null_cols.len());
    for (dst, &src) in null_cols.iter().enumerate() {
        basis.set_column(dst, &vecs.column(src));
    }
    Subspace::new(basis)
}

/// Ricci endomorphism of the background metric for the bracket `mu`.
/// The Ricci curvature of the metric `<h ., h .>` is `ricci(act(h, mu))`.
pub fn ricci(mu: &StructureTensor) -> RicciEndomorphism {
    let n = mu.dim();
    let t = mu.tensor();
    let mut m = DMatrix::zeros(n, n);
    for r in 0..n {
        for s in r..n {
            let mut quad = 0.0;
            let mut img = 0.0;
            for i in 0..n {
                for j in 0..n {
                    quad += t.get(r, i, j) * t.get(s, i, j);
                    img += t.get(i, j, r) * t.get(i, j, s);
                }
            }
            let v = -0.5 * quad + 0.25 * img;
            m[(r, s)] = v;
            m[(s, r)] = v;
        }
    }
    debug_assert!(m.trace() <= f64::EPSILON * mu.norm_sq());
    RicciEndomorphism { matrix: m }
}

/// The decomposition `Ric = -q + p` into positive semi-definite forms:
/// `q(X, Y) = <ad X, ad Y> / 2` and `p` the quartic sum over brackets.
/// Returns `(q, p)`.
pub fn pq_forms(mu: &StructureTensor) -> (SemiDefForm, SemiDefForm) {
    let n = mu.dim();
    let t = mu.tensor();
    let mut q = DMatrix::zeros(n, n);
    let mut p = DMatrix::zeros(n, n);
    for r in 0..n {
        for s in r..n {
            let mut quad = 0.0;
            let mut img = 0.0;
            for i in 0..n {
                for j in 0..n {
                    quad += t.get(r, i, j) * t.get(s, i, j);
                    img += t.get(i, j, r) * t.get(i, j, s);
                }
            }
            q[(r, s)] = 0.5 * quad;
            q[(s, r)] = 0.5 * quad;
            p[(r, s)] = 0.25 * img;
            p[(s, r)] = 0.25 * img;
        }
    }
    let q_rad = radical_of_psd(&q);
    let p_rad = radical_of_psd(&p);
    #[cfg(debug_assertions)]
    for form in [&q, &p] {
        let (vals, _) = linalg::sym_eigen(form);
        if let Some(min) = vals.iter().copied().reduce(f64::min) {
            let scale = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            debug_assert!(
                min >= -1e-10 * scale,
                "semi-definite form has eigenvalue {min}"
            );
        }
    }
    (
        SemiDefForm {
            matrix: q,
            radical: q_rad,
        },
        SemiDefForm {
            matrix: p,
            radical: p_rad,
        },
    )
}

/// Infinitesimal change-of-basis action
/// `(pi(A) mu)(., .) = A mu(., .) - mu(A ., .) - mu(., A .)`.
pub fn infinitesimal_action(a: &DMatrix<f64>, mu: &StructureTensor) -> SkewTensor {
    let n = mu.dim();
    assert_eq!(a.nrows(), n, "matrix dimension must match the tensor");
    assert_eq!(a.ncols(), n, "matrix dimension must match the tensor");
    let t = mu.tensor();
    let mut out = SkewTensor::zeros(n);
    for i in 0..n {
        for j in (i + 1)..n {
            for k in 0..n {
                let mut v = 0.0;
                for l in 0..n {
                    v += a[(k, l)] * t.get(i, j, l);
                    v -= a[(l, i)] * t.get(l, j, k);
                    v -= a[(l, j)] * t.get(i, l, k);
                }
                out.set(i, j, k, v);
            }
        }
    }
    out
}

/// `<T, pi(e_rs) mu>` contracted directly, without materialising the action
/// of the elementary matrix.
fn pairing_with_elementary(t: &SkewTensor, mu: &StructureTensor, r: usize, s: usize) -> f64 {
    let n = mu.dim();
    let m = mu.tensor();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += t.get(i, j, r) * m.get(i, j, s);
            acc -= t.get(s, j, i) * m.get(r, j, i);
            acc -= t.get(j, s, i) * m.get(j, r, i);
        }
    }
    acc
}

/// Moment-map pairing `<Ric_mu, A> = tr(Ric_mu A^T)`. In debug builds the
/// identity `tr(Ric A^T) = <pi(A) mu, mu> / 4` is asserted.
pub fn moment_pairing(mu: &StructureTensor, a: &DMatrix<f64>) -> f64 {
    let ric = ricci(mu);
    let value = (ric.matrix() * a.transpose()).trace();
    #[cfg(debug_assertions)]
    {
        let rhs = 0.25 * infinitesimal_action(a, mu).inner(mu.tensor());
        let tol = 1e-10 * mu.norm_sq() * a.norm().max(f64::MIN_POSITIVE);
        debug_assert!(
            (value - rhs).abs() <= tol,
            "moment pairing identity violated: {value} vs {rhs}"
        );
    }
    value
}

/// Derivative of the Ricci map along the orbit direction `pi(E) mu`, for a
/// symmetric `E`: the symmetric matrix `L(E)` with
/// `<L(E), F> = <pi(E) mu, pi(F) mu> / 2` for all symmetric `F`.
pub fn ricci_derivative(mu: &StructureTensor, e: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = mu.dim();
    if e.nrows() != n || e.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: e.nrows(),
        });
    }
    if !linalg::is_symmetric(e, 1e-12) {
        return Err(Error::NonSymmetricInput);
    }
    let t = infinitesimal_action(e, mu);
    let mut m = DMatrix::zeros(n, n);
    for r in 0..n {
        for s in r..n {
            let v = 0.25
                * (pairing_with_elementary(&t, mu, r, s) + pairing_with_elementary(&t, mu, s, r));
            m[(r, s)] = v;
            m[(s, r)] = v;
        }
    }
    Ok(m)
}

/// Orthonormal basis of the space of symmetric n x n matrices, diagonal
/// entries first within each row: (0,0), (0,1), ..., (1,1), (1,2), ...
pub fn symmetric_basis(n: usize) -> Vec<DMatrix<f64>> {
    let mut basis = Vec::with_capacity(n * (n + 1) / 2);
    let inv_sqrt2 = 1.0 / 2f64.sqrt();
    for a in 0..n {
        for b in a..n {
            let mut m = DMatrix::zeros(n, n);
            if a == b {
                m[(a, a)] = 1.0;
            } else {
                m[(a, b)] = inv_sqrt2;
                m[(b, a)] = inv_sqrt2;
            }
            basis.push(m);
        }
    }
    basis
}

/// Gram matrix of the Ricci linearisation on the orthonormal symmetric basis:
/// `G[ab, cd] = <pi(E_ab) mu, pi(E_cd) mu> / 2`. Positive semi-definite with
/// nullity `dim(Der(mu) ∩ sym)`.
pub fn l_gram_matrix(mu: &StructureTensor) -> DMatrix<f64> {
    let basis = symmetric_basis(mu.dim());
    let images: Vec<SkewTensor> = basis.iter().map(|e| infinitesimal_action(e, mu)).collect();
    let n = basis.len();
    let mut g = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let v = 0.5 * images[a].inner(&images[b]);
            g[(a, b)] = v;
            g[(b, a)] = v;
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{act, MetricFrame, StructureTensor};
    use nalgebra::DVector;

    fn heisenberg3() -> StructureTensor {
        StructureTensor::new(3, &[(0, 1, 2, 1.0)]).unwrap()
    }

    fn l53() -> StructureTensor {
        StructureTensor::new(5, &[(0, 1, 2, 1.0), (0, 2, 3, 1.0)]).unwrap()
    }

    fn abelian(n: usize) -> StructureTensor {
        StructureTensor::new(n, &[]).unwrap()
    }

    #[test]
    fn ricci_heisenberg() {
        let ric = ricci(&heisenberg3());
        let expect = DMatrix::from_diagonal(&DVector::from_column_slice(&[-0.5, -0.5, 0.5]));
        assert!((ric.matrix() - expect).norm() < 1e-14);
    }

    #[test]
    fn ricci_abelian_zero() {
        let ric = ricci(&abelian(4));
        assert_eq!(ric.matrix().norm(), 0.0);
    }

    #[test]
    fn ricci_l53_central_row_vanishes() {
        // e5 is central and orthogonal to the derived ideal, so row and
        // column 5 of the Ricci endomorphism vanish.
        let ric = ricci(&l53());
        for i in 0..5 {
            assert!(ric.matrix()[(4, i)].abs() < 1e-14);
            assert!(ric.matrix()[(i, 4)].abs() < 1e-14);
        }
        let expect =
            DMatrix::from_diagonal(&DVector::from_column_slice(&[-1.0, -0.5, 0.0, 0.5, 0.0]));
        assert!((ric.matrix() - expect).norm() < 1e-14);
    }

    #[test]
    fn trace_is_quarter_norm() {
        for mu in [heisenberg3(), l53(), abelian(3)] {
            let ric = ricci(&mu);
            let expect = -0.25 * mu.norm_sq();
            assert!((ric.trace() - expect).abs() <= 1e-10 * expect.abs().max(1e-300));
        }
    }

    #[test]
    fn pq_heisenberg() {
        let (q, p) = pq_forms(&heisenberg3());
        let q_expect = DMatrix::from_diagonal(&DVector::from_column_slice(&[0.5, 0.5, 0.0]));
        let p_expect = DMatrix::from_diagonal(&DVector::from_column_slice(&[0.0, 0.0, 0.5]));
        assert!((q.matrix - q_expect).norm() < 1e-14);
        assert!((p.matrix - p_expect).norm() < 1e-14);
    }

    #[test]
    fn pq_difference_is_ricci() {
        for mu in [heisenberg3(), l53()] {
            let ric = ricci(&mu);
            let (q, p) = pq_forms(&mu);
            let recon = &p.matrix - &q.matrix;
            let scale = p.matrix.norm() + q.matrix.norm();
            assert!((recon - ric.matrix()).norm() <= 1e-10 * scale.max(1e-300));
        }
    }

    #[test]
    fn pq_radicals_match_subspaces() {
        for mu in [heisenberg3(), l53()] {
            let (q, p) = pq_forms(&mu);
            assert!(q.radical.angle_sin_to(&mu.center()) < 1e-8);
            assert!(
                p.radical
                    .angle_sin_to(&mu.derived_ideal().orthogonal_complement())
                    < 1e-8
            );
        }
    }

    #[test]
    fn identity_acts_as_minus_mu() {
        let mu = l53();
        let out = infinitesimal_action(&DMatrix::identity(5, 5), &mu);
        assert!(out.sub(&mu.tensor().scale(-1.0)).max_abs() < 1e-14);
    }

    #[test]
    fn action_on_heisenberg_diag() {
        let mu = heisenberg3();
        let mut a = DMatrix::zeros(3, 3);
        a[(0, 0)] = 1.0;
        let out = infinitesimal_action(&a, &mu);
        assert!((out.get(0, 1, 2) + 1.0).abs() < 1e-14);
    }

    #[test]
    fn action_is_a_representation() {
        let mu = l53();
        let a = DMatrix::from_fn(5, 5, |i, j| ((i * 7 + j * 3) % 5) as f64 * 0.1 - 0.2);
        let b = DMatrix::from_fn(5, 5, |i, j| ((i * 3 + j * 11) % 7) as f64 * 0.1 - 0.3);
        // pi([A,B]) mu = pi(A) pi(B) mu - pi(B) pi(A) mu, checked through the
        // pairing with mu itself via second differences of the group action.
        let comm = &a * &b - &b * &a;
        let lhs = infinitesimal_action(&comm, &mu);
        // Apply pi(A) to the tensor pi(B)mu by linearity of the formula in mu:
        // build it manually through small finite differences of group elements
        // is noisy; instead use the algebraic identity expanded on tensors.
        let pi_b = infinitesimal_action(&b, &mu);
        let pi_a = infinitesimal_action(&a, &mu);
        // pi(A) acting on an arbitrary skew tensor (not necessarily Jacobi).
        let apply = |m: &DMatrix<f64>, t: &SkewTensor| -> SkewTensor {
            let n = t.dim();
            let mut out = SkewTensor::zeros(n);
            for i in 0..n {
                for j in (i + 1)..n {
                    for k in 0..n {
                        let mut v = 0.0;
                        for l in 0..n {
                            v += m[(k, l)] * t.get(i, j, l);
                            v -= m[(l, i)] * t.get(l, j, k);
                            v -= m[(l, j)] * t.get(i, l, k);
                        }
                        out.set(i, j, k, v);
                    }
                }
            }
            out
        };
        let rhs = apply(&a, &pi_b).sub(&apply(&b, &pi_a));
        assert!(lhs.sub(&rhs).max_abs() < 1e-10 * (1.0 + lhs.max_abs()));
    }

    #[test]
    fn moment_pairing_heisenberg_identity_matrix() {
        let mu = heisenberg3();
        let v = moment_pairing(&mu, &DMatrix::identity(3, 3));
        assert!((v + 0.5).abs() < 1e-14);
        assert!((v - (-0.25 * mu.norm_sq())).abs() < 1e-14);
    }

    #[test]
    fn moment_pairing_abelian_zero() {
        let mu = abelian(4);
        let a = DMatrix::from_fn(4, 4, |i, j| (i + 2 * j) as f64);
        assert_eq!(moment_pairing(&mu, &a), 0.0);
    }

    #[test]
    fn moment_identity_random_frames() {
        let mu = l53();
        let h = MetricFrame::new(DMatrix::from_fn(5, 5, |i, j| {
            if i == j {
                1.0
            } else {
                0.08 * ((i * 5 + j * 3) % 7) as f64 - 0.2
            }
        }))
        .unwrap();
        let nu = act(&h, &mu).unwrap();
        let a = DMatrix::from_fn(5, 5, |i, j| ((i * 11 + j) % 5) as f64 * 0.3 - 0.6);
        let lhs = moment_pairing(&nu, &a);
        let rhs = 0.25 * infinitesimal_action(&a, &nu).inner(nu.tensor());
        assert!((lhs - rhs).abs() <= 1e-10 * nu.norm_sq() * a.norm());
    }

    #[test]
    fn derivative_vanishes_on_symmetric_derivations() {
        let mu = heisenberg3();
        for d in mu.derivations() {
            let sym = 0.5 * (&d + d.transpose());
            // Only symmetric derivations are in the kernel of the projected
            // derivative; test those that happen to be symmetric.
            if (&sym - &d).norm() < 1e-12 {
                let l = ricci_derivative(&mu, &sym).unwrap();
                assert!(l.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn derivative_abelian_zero() {
        let mu = abelian(3);
        let e = DMatrix::from_fn(3, 3, |i, j| (i + j) as f64);
        let l = ricci_derivative(&mu, &e).unwrap();
        assert_eq!(l.norm(), 0.0);
    }

    #[test]
    fn derivative_rejects_nonsymmetric() {
        let mu = heisenberg3();
        let mut e = DMatrix::zeros(3, 3);
        e[(0, 1)] = 1.0;
        assert!(matches!(
            ricci_derivative(&mu, &e),
            Err(Error::NonSymmetricInput)
        ));
    }

    #[test]
    fn derivative_quadratic_form_is_half_action_norm() {
        let mu = l53();
        let e = DMatrix::from_fn(5, 5, |i, j| 0.1 * ((i + j) % 4) as f64)
            .map(|v| v)
            .symmetric_part();
        let l = ricci_derivative(&mu, &e).unwrap();
        let lhs = (&l * e.transpose()).trace();
        let rhs = 0.5 * infinitesimal_action(&e, &mu).norm_sq();
        assert!(lhs >= -1e-12);
        assert!((lhs - rhs).abs() <= 1e-10 * rhs.max(1e-300));
    }

    #[test]
    fn gram_matches_derivative_columns() {
        let mu = heisenberg3();
        let basis = symmetric_basis(3);
        let gram = l_gram_matrix(&mu);
        for (b, eb) in basis.iter().enumerate() {
            let l = ricci_derivative(&mu, eb).unwrap();
            for (a, ea) in basis.iter().enumerate() {
                let want = (&l * ea.transpose()).trace();
                assert!((gram[(a, b)] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gram_nullity_is_symmetric_derivation_dim() {
        for mu in [heisenberg3(), l53()] {
            let gram = l_gram_matrix(&mu);
            let (vals, _) = linalg::sym_eigen(&gram);
            let max = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let nullity = vals.iter().filter(|v| v.abs() <= 1e-9 * max).count();
            assert_eq!(nullity, mu.symmetric_derivation_dim());
            assert!(vals[0] >= -1e-9 * max);
        }
    }

    #[test]
    fn finite_difference_matches_derivative() {
        let mu = l53();
        let e = DMatrix::from_fn(5, 5, |i, j| {
            0.2 * (((i * 3 + j * 5) % 7) as f64 / 7.0 - 0.5)
        })
        .symmetric_part();
        let l = ricci_derivative(&mu, &e).unwrap();
        let base = ricci(&mu).matrix().clone();
        let mut errs = Vec::new();
        for &t in &[1e-4, 1e-5] {
            let h = MetricFrame::new(linalg::matrix_exp(&(t * &e))).unwrap();
            let moved = ricci(&act(&h, &mu).unwrap());
            let fd = (moved.matrix() - &base) / t;
            errs.push((fd - &l).norm());
        }
        // O(t): both bounded by C t and roughly a decade apart.
        let c = 50.0 * (1.0 + e.norm()).powi(2) * (1.0 + mu.norm_sq());
        assert!(errs[0] <= c * 1e-4, "err {} vs bound {}", errs[0], c * 1e-4);
        assert!(errs[1] <= c * 1e-5);
    }
}
