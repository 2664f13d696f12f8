//! Structure-constant tensors, the GL action, and structural subspaces.

use nalgebra::{DMatrix, DVector};

use crate::error::Error;
use crate::linalg;
use crate::rational::RatMatrix;
use crate::Result;

/// Construction-time tolerance for the Jacobi identity, relative to
/// `1 + ||mu||^3`.
pub const JACOBI_REL_TOL: f64 = 1e-12;

/// Frames with a larger condition number are rejected.
pub const FRAME_CONDITION_LIMIT: f64 = 1e12;

/// Antisymmetric 3-tensor `t_ij^k = -t_ji^k`. This is the raw coefficient
/// array of a candidate Lie bracket; no Jacobi identity is implied.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewTensor {
    dim: usize,
    // Dense over all ordered index pairs; antisymmetry is enforced by `set`.
    data: Vec<f64>,
}

impl SkewTensor {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim * dim],
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dim + j) * self.dim + k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.idx(i, j, k)]
    }

    /// Sets `t_ij^k = v` and `t_ji^k = -v`. Setting a diagonal pair `i == j`
    /// to a nonzero value is rejected by the callers that build tensors.
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let a = self.idx(i, j, k);
        let b = self.idx(j, i, k);
        self.data[a] = v;
        if i != j {
            self.data[b] = -v;
        }
    }

    /// Bracket of two coordinate vectors.
    pub fn apply(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let n = self.dim;
        let mut out = DVector::zeros(n);
        for i in 0..n {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            for j in 0..n {
                let w = xi * y[j];
                if w == 0.0 {
                    continue;
                }
                for k in 0..n {
                    out[k] += w * self.get(i, j, k);
                }
            }
        }
        out
    }

    /// Bracket of basis vectors e_i, e_j as a coordinate vector.
    pub fn basis_bracket(&self, i: usize, j: usize) -> DVector<f64> {
        DVector::from_iterator(self.dim, (0..self.dim).map(|k| self.get(i, j, k)))
    }

    /// Matrix of `ad e_i` (column j holds the bracket with e_j).
    pub fn ad_basis(&self, i: usize) -> DMatrix<f64> {
        let n = self.dim;
        DMatrix::from_fn(n, n, |k, j| self.get(i, j, k))
    }

    /// Squared norm over all ordered pairs (i, j) and all k. This is the
    /// unique convention under which `tr Ric = -||mu||^2 / 4`.
    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Inner product over all ordered pairs.
    pub fn inner(&self, other: &SkewTensor) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn scale(&self, c: f64) -> SkewTensor {
        SkewTensor {
            dim: self.dim,
            data: self.data.iter().map(|v| c * v).collect(),
        }
    }

    pub fn sub(&self, other: &SkewTensor) -> SkewTensor {
        assert_eq!(self.dim, other.dim);
        SkewTensor {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(other.data.iter())
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    /// Largest componentwise violation of the Jacobi identity over basis
    /// triples i < j < k.
    pub fn jacobi_residual(&self) -> f64 {
        let n = self.dim;
        let brackets: Vec<Vec<DVector<f64>>> = (0..n)
            .map(|i| (0..n).map(|j| self.basis_bracket(i, j)).collect())
            .collect();
        let mut worst = 0.0f64;
        let mut ek = DVector::zeros(n);
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    let mut acc = DVector::zeros(n);
                    for (a, b, c) in [(i, j, k), (j, k, i), (k, i, j)] {
                        ek.fill(0.0);
                        ek[c] = 1.0;
                        acc += self.apply(&brackets[a][b], &ek);
                    }
                    worst = worst.max(acc.amax());
                }
            }
        }
        worst
    }

    /// Change-of-basis action `(h . t)(x, y) = h t(h^-1 x, h^-1 y)`,
    /// contracted one index at a time.
    pub fn gl_action(&self, h: &DMatrix<f64>, h_inv: &DMatrix<f64>) -> SkewTensor {
        let n = self.dim;
        // t1[a][j][k] = sum_i t_ij^k hinv[i][a]
        let mut t1 = vec![0.0; n * n * n];
        for a in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut acc = 0.0;
                    for i in 0..n {
                        acc += self.get(i, j, k) * h_inv[(i, a)];
                    }
                    t1[(a * n + j) * n + k] = acc;
                }
            }
        }
        // t2[a][b][k] = sum_j t1[a][j][k] hinv[j][b]
        let mut t2 = vec![0.0; n * n * n];
        for a in 0..n {
            for b in 0..n {
                for k in 0..n {
                    let mut acc = 0.0;
                    for j in 0..n {
                        acc += t1[(a * n + j) * n + k] * h_inv[(j, b)];
                    }
                    t2[(a * n + b) * n + k] = acc;
                }
            }
        }
        // out[a][b][c] = sum_k h[c][k] t2[a][b][k]
        let mut out = SkewTensor::zeros(n);
        for a in 0..n {
            for b in 0..a {
                for c in 0..n {
                    let mut acc = 0.0;
                    for k in 0..n {
                        acc += h[(c, k)] * t2[(a * n + b) * n + k];
                    }
                    // Write both orientations from one contraction so the
                    // stored tensor is antisymmetric to the last bit.
                    out.set(b, a, c, -acc);
                }
            }
        }
        out
    }

    /// Exact rational view of the coefficient array (n^2 x n, rows indexed by
    /// the ordered pair (i, j), columns by k).
    pub fn to_rational_flat(&self) -> RatMatrix {
        let n = self.dim;
        let m = DMatrix::from_fn(n * n, n, |row, k| self.get(row / n, row % n, k));
        RatMatrix::from_f64(&m)
    }
}

/// A subspace of the ambient coordinate space, stored as orthonormal columns.
#[derive(Debug, Clone)]
pub struct Subspace {
    ambient: usize,
    basis: DMatrix<f64>,
}

impl Subspace {
    pub fn new(basis: DMatrix<f64>) -> Self {
        let s = Self {
            ambient: basis.nrows(),
            basis,
        };
        debug_assert!(s.orthonormality_defect() < 1e-12);
        s
    }

    pub fn zero(ambient: usize) -> Self {
        Self {
            ambient,
            basis: DMatrix::zeros(ambient, 0),
        }
    }

    pub fn full(ambient: usize) -> Self {
        Self {
            ambient,
            basis: DMatrix::identity(ambient, ambient),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn orthonormality_defect(&self) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        let gram = self.basis.transpose() * &self.basis;
        linalg::max_abs(&(gram - DMatrix::identity(self.dim(), self.dim())))
    }

    /// Orthogonal projector onto the subspace.
    pub fn projector(&self) -> DMatrix<f64> {
        &self.basis * self.basis.transpose()
    }

    pub fn orthogonal_complement(&self) -> Subspace {
        if self.dim() == 0 {
            return Subspace::full(self.ambient);
        }
        Subspace::new(linalg::nullspace(&self.basis.transpose(), Some(self.dim())))
    }

    /// Sum of subspaces, with an optional exact dimension pin.
    pub fn sum(&self, other: &Subspace, forced_dim: Option<usize>) -> Subspace {
        assert_eq!(self.ambient, other.ambient);
        let mut concat = DMatrix::zeros(self.ambient, self.dim() + other.dim());
        concat.columns_mut(0, self.dim()).copy_from(&self.basis);
        concat
            .columns_mut(self.dim(), other.dim())
            .copy_from(&other.basis);
        Subspace::new(linalg::column_space(&concat, forced_dim))
    }

    /// Intersection, with an optional exact dimension pin.
    pub fn intersect(&self, other: &Subspace, forced_dim: Option<usize>) -> Subspace {
        assert_eq!(self.ambient, other.ambient);
        if self.dim() == 0 || other.dim() == 0 {
            return Subspace::zero(self.ambient);
        }
        // x = U a = V b  <=>  [U, -V] (a; b) = 0.
        let mut stacked = DMatrix::zeros(self.ambient, self.dim() + other.dim());
        stacked.columns_mut(0, self.dim()).copy_from(&self.basis);
        stacked
            .columns_mut(self.dim(), other.dim())
            .copy_from(&(-&other.basis));
        let forced_rank = forced_dim.map(|d| self.dim() + other.dim() - d);
        let kernel = linalg::nullspace(&stacked, forced_rank);
        if kernel.ncols() == 0 {
            return Subspace::zero(self.ambient);
        }
        let alpha = kernel.rows(0, self.dim());
        let vectors = &self.basis * alpha;
        Subspace::new(linalg::column_space(&vectors, Some(kernel.ncols())))
    }

    /// Image under an invertible map, re-orthonormalised.
    pub fn map(&self, h: &DMatrix<f64>) -> Subspace {
        let image = h * &self.basis;
        Subspace::new(linalg::column_space(&image, Some(self.dim())))
    }

    /// sin of the largest principal angle to `other` (1 when dims differ).
    pub fn angle_sin_to(&self, other: &Subspace) -> f64 {
        if self.dim() != other.dim() {
            return 1.0;
        }
        linalg::max_principal_angle_sin(&self.basis, &other.basis)
    }

    /// Whether `v` lies in the subspace up to `tol * ||v||`.
    pub fn contains(&self, v: &DVector<f64>, rel_tol: f64) -> bool {
        let norm = v.norm();
        if norm == 0.0 {
            return true;
        }
        let residual = v - self.projector() * v;
        residual.norm() <= rel_tol * norm
    }
}

/// Invertible matrix `h` encoding the scalar product `<h ., h .>` relative to
/// the background product.
#[derive(Debug, Clone)]
pub struct MetricFrame {
    h: DMatrix<f64>,
    h_inv: DMatrix<f64>,
    condition: f64,
}

impl MetricFrame {
    pub fn new(h: DMatrix<f64>) -> Result<Self> {
        if h.nrows() != h.ncols() {
            return Err(Error::DimensionMismatch {
                expected: h.nrows(),
                got: h.ncols(),
            });
        }
        let condition = linalg::condition_number(&h);
        if !condition.is_finite() || condition > FRAME_CONDITION_LIMIT {
            return Err(Error::SingularFrame { condition });
        }
        let h_inv = h
            .clone()
            .try_inverse()
            .ok_or(Error::SingularFrame { condition })?;
        Ok(Self {
            h,
            h_inv,
            condition,
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            h: DMatrix::identity(dim, dim),
            h_inv: DMatrix::identity(dim, dim),
            condition: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn inverse_matrix(&self) -> &DMatrix<f64> {
        &self.h_inv
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    /// Composition: `(a * b) . mu = a . (b . mu)`.
    pub fn compose(&self, other: &MetricFrame) -> Result<MetricFrame> {
        MetricFrame::new(&self.h * &other.h)
    }

    pub fn is_identity(&self) -> bool {
        self.h == DMatrix::identity(self.dim(), self.dim())
    }
}

/// Validated structure-constant tensor of a nilpotent Lie algebra.
#[derive(Debug, Clone)]
pub struct StructureTensor {
    tensor: SkewTensor,
    /// True when the coefficients carry no floating-point roundoff, enabling
    /// the exact rational rank path.
    exact: bool,
}

impl StructureTensor {
    /// Builds a tensor from sparse entries `(i, j, k, value)` with `i < j`
    /// (0-based), validating antisymmetry, Jacobi and nilpotency.
    pub fn new(dim: usize, entries: &[(usize, usize, usize, f64)]) -> Result<Self> {
        let mut t = SkewTensor::zeros(dim);
        for &(i, j, k, v) in entries {
            if i >= dim || j >= dim || k >= dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: i.max(j).max(k) + 1,
                });
            }
            if i == j && v != 0.0 {
                return Err(Error::JacobiViolation {
                    residual: v.abs(),
                    tol: 0.0,
                });
            }
            t.set(i, j, k, v);
        }
        Self::from_skew(t, true)
    }

    /// Wraps a raw antisymmetric tensor after full validation.
    pub fn from_skew(tensor: SkewTensor, exact: bool) -> Result<Self> {
        let norm = tensor.norm();
        let residual = tensor.jacobi_residual();
        let tol = JACOBI_REL_TOL * (1.0 + norm.powi(3));
        if residual > tol {
            return Err(Error::JacobiViolation { residual, tol });
        }
        let out = Self { tensor, exact };
        out.check_nilpotent()?;
        Ok(out)
    }

    fn check_nilpotent(&self) -> Result<()> {
        self.central_series().map(|_| ())
    }

    pub fn dim(&self) -> usize {
        self.tensor.dim()
    }

    pub fn tensor(&self) -> &SkewTensor {
        &self.tensor
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn norm(&self) -> f64 {
        self.tensor.norm()
    }

    pub fn norm_sq(&self) -> f64 {
        self.tensor.norm_sq()
    }

    /// Stacked `ad` operators as an (n^2 x n) matrix whose nullspace is the
    /// center.
    fn stacked_ad(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n * n, n);
        for i in 0..n {
            // Row block i holds ad(e_i) applied to the column vector.
            // Column v of the full matrix is the flattened bracket mu(e_v, .).
            for j in 0..n {
                for k in 0..n {
                    m[(i * n + k, j)] = self.tensor.get(j, i, k);
                }
            }
        }
        m
    }

    /// Matrix whose columns are all basis brackets mu(e_i, e_j), i < j.
    fn bracket_columns(&self) -> DMatrix<f64> {
        let n = self.dim();
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .collect();
        let mut m = DMatrix::zeros(n, pairs.len());
        for (c, &(i, j)) in pairs.iter().enumerate() {
            m.set_column(c, &self.tensor.basis_bracket(i, j));
        }
        m
    }

    /// Derived ideal mu(n, n) with orthonormal basis; rank pinned by the
    /// exact path when available.
    pub fn derived_ideal(&self) -> Subspace {
        let cols = self.bracket_columns();
        let forced = self.exact.then(|| RatMatrix::from_f64(&cols).rank());
        Subspace::new(linalg::column_space(&cols, forced))
    }

    /// Center z(n, mu) as the nullspace of the stacked ad operators.
    pub fn center(&self) -> Subspace {
        let m = self.stacked_ad();
        let forced = self.exact.then(|| RatMatrix::from_f64(&m).rank());
        Subspace::new(linalg::nullspace(&m, forced))
    }

    /// Descending central series n = n^(0) ⊇ n^(1) ⊇ ..., ending with the
    /// first zero term. Errors when the series stabilises above zero.
    pub fn central_series(&self) -> Result<Vec<Subspace>> {
        let n = self.dim();
        let mut series = vec![Subspace::full(n)];
        let mut exact_basis: Option<RatMatrix> = self.exact.then(|| {
            let mut id = RatMatrix::zeros(n, n);
            for i in 0..n {
                id.set(i, i, num_rational::BigRational::from_float(1.0).unwrap());
            }
            id
        });
        loop {
            let current = series.last().unwrap();
            if current.dim() == 0 {
                return Ok(series);
            }
            if series.len() > n + 1 {
                return Err(Error::NotNilpotent {
                    stable_dim: current.dim(),
                });
            }
            // Generators mu(e_i, v) for v in the current basis.
            let cols: Vec<DVector<f64>> = (0..n)
                .flat_map(|i| {
                    let ei = DVector::from_fn(n, |r, _| if r == i { 1.0 } else { 0.0 });
                    (0..current.dim())
                        .map(move |c| (ei.clone(), c))
                        .collect::<Vec<_>>()
                })
                .map(|(ei, c)| {
                    self.tensor
                        .apply(&ei, &current.basis().column(c).into_owned())
                })
                .collect();
            let mut gen = DMatrix::zeros(n, cols.len());
            for (c, v) in cols.iter().enumerate() {
                gen.set_column(c, v);
            }
            // Rank relative to the tensor's own scale: the generator matrix
            // inherits roundoff from the orthonormalised basis, so a purely
            // relative threshold would count noise on a zero image.
            let float_rank = linalg::rank_floored(
                &gen,
                linalg::RANK_REL_TOL * self.norm().max(f64::MIN_POSITIVE),
            );
            // Exact path: push the rational basis through the bracket and
            // reduce to pivot columns so the width stays bounded.
            let forced = exact_basis.as_ref().map(|basis| {
                let next = self.rational_bracket_image(basis).column_basis();
                let r = next.ncols;
                (next, r)
            });
            if let Some((_, exact_rank)) = &forced {
                debug_assert_eq!(
                    *exact_rank, float_rank,
                    "exact and floating central-series ranks disagree"
                );
            }
            let rank = forced.as_ref().map(|f| f.1).unwrap_or(float_rank);
            let next_space = Subspace::new(linalg::column_space(&gen, Some(rank)));
            if next_space.dim() >= current.dim() {
                return Err(Error::NotNilpotent {
                    stable_dim: current.dim(),
                });
            }
            exact_basis = forced.map(|f| f.0);
            series.push(next_space);
        }
    }

    /// Rational image span{mu(e_i, v) : v column of basis}.
    fn rational_bracket_image(&self, basis: &RatMatrix) -> RatMatrix {
        let n = self.dim();
        let mut out = RatMatrix::zeros(n, n * basis.ncols);
        let rat = |v: f64| num_rational::BigRational::from_float(v).expect("finite");
        for i in 0..n {
            for c in 0..basis.ncols {
                for k in 0..n {
                    let mut acc = num_rational::BigRational::from_float(0.0).unwrap();
                    for j in 0..n {
                        let coeff = self.tensor.get(i, j, k);
                        if coeff != 0.0 {
                            acc += rat(coeff) * basis.get(j, c);
                        }
                    }
                    out.set(k, i * basis.ncols + c, acc);
                }
            }
        }
        out
    }

    /// Whether the central series terminates (always true for values that
    /// passed construction; kept for diagnostics).
    pub fn is_nilpotent(&self) -> bool {
        self.central_series().is_ok()
    }

    /// Coefficient matrix of the linear map E -> pi(E)mu on gl(n), with rows
    /// indexed by tensor slots (i, j, k) and columns by matrix entries (p, q).
    pub fn derivation_system(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n * n * n, n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let row = (i * n + j) * n + k;
                    for p in 0..n {
                        for q in 0..n {
                            let col = p * n + q;
                            let mut v = 0.0;
                            if k == p {
                                v += self.tensor.get(i, j, q);
                            }
                            if i == q {
                                v -= self.tensor.get(p, j, k);
                            }
                            if j == q {
                                v -= self.tensor.get(i, p, k);
                            }
                            if v != 0.0 {
                                m[(row, col)] += v;
                            }
                        }
                    }
                }
            }
        }
        m
    }

    /// Basis of the derivation algebra Der(mu) = ker(E -> pi(E)mu).
    pub fn derivations(&self) -> Vec<DMatrix<f64>> {
        let n = self.dim();
        let sys = self.derivation_system();
        let forced = self.exact.then(|| RatMatrix::from_f64(&sys).rank());
        let null = linalg::nullspace(&sys, forced);
        (0..null.ncols())
            .map(|c| {
                let v = null.column(c);
                DMatrix::from_fn(n, n, |p, q| v[p * n + q])
            })
            .collect()
    }

    /// GL action without re-validation, for inner loops whose frames are
    /// constructed to preserve the Lie structure (one-parameter subgroup
    /// steps). Public entry points go through `act`.
    pub(crate) fn act_unchecked(
        h: &DMatrix<f64>,
        h_inv: &DMatrix<f64>,
        mu: &StructureTensor,
    ) -> StructureTensor {
        StructureTensor {
            tensor: mu.tensor.gl_action(h, h_inv),
            exact: false,
        }
    }

    /// Dimension of Der(mu) ∩ {symmetric matrices}, computed from the
    /// constraint system restricted to symmetric coordinates.
    pub fn symmetric_derivation_dim(&self) -> usize {
        let n = self.dim();
        let sys = self.derivation_system();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a..n).map(move |b| (a, b))).collect();
        let mut m = DMatrix::zeros(n * n * n, pairs.len());
        for (c, &(a, b)) in pairs.iter().enumerate() {
            let col_ab = sys.column(a * n + b).into_owned();
            if a == b {
                m.set_column(c, &col_ab);
            } else {
                let col_ba = sys.column(b * n + a).into_owned();
                m.set_column(c, &(col_ab + col_ba));
            }
        }
        let rank = if self.exact {
            RatMatrix::from_f64(&m).rank()
        } else {
            linalg::rank(&m)
        };
        pairs.len() - rank
    }
}

/// Change-of-basis action `(h . mu)(., .) = h mu(h^-1 ., h^-1 .)`.
///
/// The metric `<h ., h .>` has Ricci endomorphism `ricci(act(h, mu))`.
/// Antisymmetry is structural; the Jacobi identity is re-checked with a
/// tolerance that accounts for the conditioning of the frame.
pub fn act(frame: &MetricFrame, mu: &StructureTensor) -> Result<StructureTensor> {
    if frame.dim() != mu.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu.dim(),
            got: frame.dim(),
        });
    }
    if frame.is_identity() {
        return Ok(mu.clone());
    }
    let tensor = mu
        .tensor()
        .gl_action(frame.matrix(), frame.inverse_matrix());
    let result_norm = tensor.norm();
    let residual = tensor.jacobi_residual();
    // Forward error of the three contractions, then of the Jacobi sum itself.
    let entry_err = 64.0
        * f64::EPSILON
        * frame.matrix().norm()
        * frame.inverse_matrix().norm().powi(2)
        * mu.norm();
    let tol = JACOBI_REL_TOL * (1.0 + result_norm.powi(3))
        + 64.0 * entry_err * (1.0 + result_norm.powi(2));
    if residual > tol {
        return Err(Error::JacobiViolation { residual, tol });
    }
    Ok(StructureTensor {
        tensor,
        exact: false,
    })
}
