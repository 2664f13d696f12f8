//! Structural invariants, signatures, and the attainable signature sets.

use std::collections::BTreeSet;
use std::fmt;

use nalgebra::DMatrix;

use crate::algebra::{act, MetricFrame, StructureTensor};
use crate::error::Error;
use crate::linalg;
use crate::rational::{self, RatMatrix};
use crate::Result;

/// Default relative tolerance for classifying eigenvalues as zero.
pub const SIGNATURE_REL_TOL: f64 = 1e-8;

/// The four structural integers of a nilpotent Lie algebra:
///
/// * `u` — codimension of `[n,n] + z(n)`,
/// * `a` — central directions transverse to the derived ideal,
/// * `z` — dimension of `z(n) ∩ [n,n]`,
/// * `m` — derived directions transverse to the center.
///
/// They satisfy `u + a + z + m = dim` and are invariant under the GL action.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Profile {
    pub u: usize,
    pub a: usize,
    pub z: usize,
    pub m: usize,
    pub dim: usize,
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(u={}, a={}, z={}, m={})",
            self.u, self.a, self.z, self.m
        )
    }
}

/// Signature (negative, zero, positive eigenvalue counts) of a symmetric form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Signature {
    pub neg: usize,
    pub zero: usize,
    pub pos: usize,
}

impl Signature {
    pub fn new(neg: usize, zero: usize, pos: usize) -> Self {
        Self { neg, zero, pos }
    }

    pub fn total(&self) -> usize {
        self.neg + self.zero + self.pos
    }

    /// Componentwise sum (block-diagonal congruence additivity).
    pub fn add(&self, other: &Signature) -> Signature {
        Signature::new(
            self.neg + other.neg,
            self.zero + other.zero,
            self.pos + other.pos,
        )
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.neg, self.zero, self.pos)
    }
}

/// Per-metric lower bounds on the signature components. Unlike a
/// `Signature`, the components need not sum to the dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignatureBounds {
    pub neg: usize,
    pub zero: usize,
    pub pos: usize,
}

impl SignatureBounds {
    pub fn satisfied_by(&self, sig: &Signature) -> bool {
        sig.neg >= self.neg && sig.zero >= self.zero && sig.pos >= self.pos
    }
}

/// Structural profile of `mu`, computed through exact ranks whenever the
/// tensor is exact.
pub fn profile(mu: &StructureTensor) -> Result<Profile> {
    mu.central_series()?; // NotNilpotent guard; construction already ensures it
    let dim = mu.dim();
    let (z_dim, derived_dim, z_cap_derived) = if mu.is_exact() {
        let derived_gens = bracket_generators_exact(mu);
        let center_basis = center_basis_exact(mu);
        let derived_dim = derived_gens.rank();
        let z_dim = center_basis.ncols;
        let z_cap = rational::intersection_dim(&center_basis, &derived_gens);
        (z_dim, derived_dim, z_cap)
    } else {
        let center = mu.center();
        let derived = mu.derived_ideal();
        let cap = center.intersect(&derived, None).dim();
        (center.dim(), derived.dim(), cap)
    };
    let z = z_cap_derived;
    let a = z_dim - z;
    let m = derived_dim - z;
    // dim([n,n] + z(n)) = m + z + a
    let u = dim - (m + z + a);
    Ok(Profile { u, a, z, m, dim })
}

/// Exact generator matrix of the derived ideal (columns are basis brackets).
pub(crate) fn bracket_generators_exact(mu: &StructureTensor) -> RatMatrix {
    let n = mu.dim();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let mut cols = DMatrix::zeros(n, pairs.len());
    for (c, &(i, j)) in pairs.iter().enumerate() {
        cols.set_column(c, &mu.tensor().basis_bracket(i, j));
    }
    RatMatrix::from_f64(&cols)
}

/// Exact basis of the center (nullspace of the stacked ad system).
pub(crate) fn center_basis_exact(mu: &StructureTensor) -> RatMatrix {
    let n = mu.dim();
    let mut m = DMatrix::zeros(n * n, n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                m[(i * n + k, j)] = mu.tensor().get(j, i, k);
            }
        }
    }
    RatMatrix::from_f64(&m).nullspace()
}

/// Signature of a symmetric matrix: eigenvalue counts below `-tol * ||M||`,
/// within the band, and above. The zero matrix has signature `(0, n, 0)`
/// exactly.
pub fn signature(m: &DMatrix<f64>, rel_tol: f64) -> Result<Signature> {
    signature_scaled(m, rel_tol, None)
}

/// Signature with the zero band measured against an explicit scale instead
/// of the matrix's own spectral norm. Used when classifying a block of a
/// larger matrix, where "zero" must mean zero at the parent's scale.
pub fn signature_scaled(m: &DMatrix<f64>, rel_tol: f64, scale: Option<f64>) -> Result<Signature> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    if !linalg::is_symmetric(m, 1e-10) {
        return Err(Error::NonSymmetricInput);
    }
    let n = m.nrows();
    let (vals, _) = linalg::sym_eigen(m);
    let scale = scale.unwrap_or_else(|| vals.iter().fold(0.0f64, |acc, v| acc.max(v.abs())));
    if scale == 0.0 {
        return Ok(Signature::new(0, n, 0));
    }
    let band = rel_tol * scale;
    let neg = vals.iter().filter(|&&v| v < -band).count();
    let pos = vals.iter().filter(|&&v| v > band).count();
    Ok(Signature::new(neg, n - neg - pos, pos))
}

/// Smallest absolute nonzero-classified eigenvalue divided by the zero band,
/// infinite when every eigenvalue is classified zero.
pub fn eigen_gap(m: &DMatrix<f64>, rel_tol: f64) -> f64 {
    let (vals, _) = linalg::sym_eigen(m);
    let scale = vals.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if scale == 0.0 {
        return f64::INFINITY;
    }
    let band = rel_tol * scale;
    vals.iter()
        .filter(|v| v.abs() > band)
        .map(|v| v.abs() / band)
        .fold(f64::INFINITY, f64::min)
}

/// All signatures compatible with the structural bounds
/// `neg >= u + r`, `zero >= a - r`, `pos >= z + r` for some
/// `r` in `[0, min(a, m)]`, summing to the dimension.
pub fn attainable_set(p: &Profile) -> BTreeSet<Signature> {
    enumerate_set(p, true)
}

/// The weaker historical variant of the set, in which the positive bound
/// does not grow with the stratum: `pos >= z` for every `r`. Contains the
/// attainable set, strictly when `a > 0` and `m > 0`.
pub fn conjectured_set(p: &Profile) -> BTreeSet<Signature> {
    enumerate_set(p, false)
}

fn enumerate_set(p: &Profile, pos_grows_with_r: bool) -> BTreeSet<Signature> {
    let mut out = BTreeSet::new();
    for r in 0..=p.a.min(p.m) {
        let neg_min = p.u + r;
        let zero_min = p.a - r;
        let pos_min = if pos_grows_with_r { p.z + r } else { p.z };
        for neg in neg_min..=p.dim {
            for zero in zero_min..=p.dim {
                if neg + zero > p.dim {
                    break;
                }
                let pos = p.dim - neg - zero;
                if pos >= pos_min {
                    out.insert(Signature::new(neg, zero, pos));
                }
            }
        }
    }
    out
}

/// The metric-dependent defect
/// `r = dim z - dim(z ∩ D^perp) - dim(z ∩ D)` computed for the metric
/// `<h ., h .>`, i.e. on `act(h, mu)` with orthogonal complements taken in
/// the background product.
pub fn central_defect(mu: &StructureTensor, frame: &MetricFrame) -> Result<usize> {
    let nu = act(frame, mu)?;
    if nu.is_exact() {
        let center = center_basis_exact(&nu);
        let derived = bracket_generators_exact(&nu).column_basis();
        let derived_perp = rational::orthogonal_complement(&derived);
        let z_dim = center.ncols;
        let cap_perp = rational::intersection_dim(&center, &derived_perp);
        let cap = rational::intersection_dim(&center, &derived);
        return Ok(z_dim - cap_perp - cap);
    }
    let center = nu.center();
    let derived = nu.derived_ideal();
    let cap_perp = center
        .intersect(&derived.orthogonal_complement(), None)
        .dim();
    let cap = center.intersect(&derived, None).dim();
    Ok(center.dim() - cap_perp - cap)
}

/// Lower bounds `(u + r, a - r, z + r)` for the metric `<h ., h .>`, with
/// `r` the per-metric central defect.
pub fn signature_lower_bounds(
    mu: &StructureTensor,
    frame: &MetricFrame,
) -> Result<SignatureBounds> {
    let p = profile(mu)?;
    let r = central_defect(mu, frame)?;
    Ok(SignatureBounds {
        neg: p.u + r,
        zero: p.a - r,
        pos: p.z + r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::ricci;
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

    fn sig(neg: usize, zero: usize, pos: usize) -> Signature {
        Signature::new(neg, zero, pos)
    }

    #[test]
    fn profile_l53() {
        let p = profile(&l53()).unwrap();
        assert_eq!(
            p,
            Profile {
                u: 2,
                a: 1,
                z: 1,
                m: 1,
                dim: 5
            }
        );
    }

    #[test]
    fn profile_heisenberg() {
        let p = profile(&heisenberg3()).unwrap();
        assert_eq!((p.u, p.a, p.z, p.m), (2, 0, 1, 0));
    }

    #[test]
    fn profile_abelian() {
        let p = profile(&abelian(4)).unwrap();
        assert_eq!((p.u, p.a, p.z, p.m), (0, 4, 0, 0));
    }

    #[test]
    fn signature_of_fixed_diagonal() {
        let m = DMatrix::from_diagonal(&DVector::from_column_slice(&[-1.0, 0.0, 2.0, 3.0]));
        assert_eq!(signature(&m, 1e-9).unwrap(), sig(1, 1, 2));
    }

    #[test]
    fn signature_of_ricci_values() {
        let ric = ricci(&heisenberg3());
        assert_eq!(
            signature(ric.matrix(), SIGNATURE_REL_TOL).unwrap(),
            sig(2, 0, 1)
        );
        let ric0 = ricci(&abelian(5));
        assert_eq!(
            signature(ric0.matrix(), SIGNATURE_REL_TOL).unwrap(),
            sig(0, 5, 0)
        );
    }

    #[test]
    fn signature_rejects_nonsymmetric() {
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = 1.0;
        assert!(matches!(signature(&m, 1e-9), Err(Error::NonSymmetricInput)));
    }

    #[test]
    fn attainable_abelian_singleton() {
        let p = profile(&abelian(4)).unwrap();
        let set = attainable_set(&p);
        assert_eq!(set.len(), 1);
        assert!(set.contains(&sig(0, 4, 0)));
    }

    #[test]
    fn attainable_heisenberg_singleton() {
        let p = profile(&heisenberg3()).unwrap();
        let set = attainable_set(&p);
        assert_eq!(set.len(), 1);
        assert!(set.contains(&sig(2, 0, 1)));
    }

    #[test]
    fn attainable_l53_four_triples() {
        let p = profile(&l53()).unwrap();
        let set = attainable_set(&p);
        let expect: BTreeSet<Signature> = [sig(2, 1, 2), sig(2, 2, 1), sig(3, 1, 1), sig(3, 0, 2)]
            .into_iter()
            .collect();
        assert_eq!(set, expect);
    }

    #[test]
    fn conjectured_l53_contains_401() {
        let p = profile(&l53()).unwrap();
        let conj = conjectured_set(&p);
        assert!(conj.contains(&sig(4, 0, 1)));
        assert!(!attainable_set(&p).contains(&sig(4, 0, 1)));
        // The weaker set always contains the attainable one.
        assert!(attainable_set(&p).is_subset(&conj));
    }

    #[test]
    fn sets_agree_when_a_is_zero() {
        let p = profile(&heisenberg3()).unwrap();
        assert_eq!(attainable_set(&p), conjectured_set(&p));
    }

    #[test]
    fn central_defect_l53_identity() {
        let mu = l53();
        let r = central_defect(&mu, &MetricFrame::identity(5)).unwrap();
        assert_eq!(r, 0);
    }

    #[test]
    fn central_defect_l53_mixed_frame() {
        // Shear X5 (central, orthogonal to the derived ideal) towards X3
        // (derived, non-central). Orthogonal frames cannot change the defect
        // since they give the same metric; the shear pushes the central plane
        // into generic position, where it meets neither the derived ideal nor
        // its complement beyond the forced line.
        let mu = l53();
        let mut h = DMatrix::identity(5, 5);
        h[(2, 4)] = 0.5;
        let frame = MetricFrame::new(h).unwrap();
        let r = central_defect(&mu, &frame).unwrap();
        assert_eq!(r, 1);
    }

    #[test]
    fn central_defect_bounded() {
        let mu = l53();
        let p = profile(&mu).unwrap();
        let frames = [
            MetricFrame::identity(5),
            MetricFrame::new(DMatrix::from_fn(5, 5, |i, j| {
                if i == j {
                    1.0
                } else {
                    0.15 * ((i * 3 + j) % 4) as f64
                }
            }))
            .unwrap(),
        ];
        for frame in &frames {
            let r = central_defect(&mu, frame).unwrap();
            assert!(r <= p.a.min(p.m));
        }
    }

    #[test]
    fn zero_dim_edge() {
        let m = DMatrix::<f64>::zeros(0, 0);
        assert_eq!(signature(&m, 1e-9).unwrap(), sig(0, 0, 0));
    }
}
