//! Constructs a metric frame realising any attainable Ricci signature.
//!
//! The pipeline splits off a flat central factor, minimises the orbit norm
//! over the structure-preserving subgroup of the remaining ideal, and then
//! perturbs the minimiser with a damped Newton solve so that the Schur
//! complement of the non-singular middle block carries prescribed blocks: an
//! invertible pairing between the retained central directions and part of
//! the derived complement, plus a diagonal witness with the leftover
//! signature.

use nalgebra::{DMatrix, DVector};

use crate::algebra::{act, MetricFrame, SkewTensor, StructureTensor, Subspace};
use crate::curvature::{ricci, ricci_derivative, symmetric_basis};
use crate::error::Error;
use crate::flow::{minimize, FlowOptions, FlowReport, SubgroupSpec};
use crate::invariants::{
    attainable_set, eigen_gap, profile, signature, signature_scaled, Profile, Signature,
    SIGNATURE_REL_TOL,
};
use crate::linalg;
use crate::Result;

/// Ordered orthonormal blocks adapted to the structural splitting, with
/// dimensions (a-r, r, u, z, r, m-r) summing to the ambient dimension. The
/// blocks live in the adapted coordinates reached by the realisation's
/// initial change of basis, where they are mutually orthogonal coordinate
/// ranges: flat central factor, retained central directions, the generic
/// complement, the central part of the derived ideal, and the two halves of
/// its complement (the paired part first).
#[derive(Debug, Clone)]
pub struct DecompositionFrame {
    pub a0: Subspace,
    pub a1: Subspace,
    pub u: Subspace,
    pub z1: Subspace,
    pub m1: Subspace,
    pub m2: Subspace,
}

impl DecompositionFrame {
    fn coordinates(p: &Profile, r: usize) -> Self {
        let n = p.dim;
        let mut offsets = [0usize; 7];
        for (idx, d) in [p.a - r, r, p.u, p.z, r, p.m - r].into_iter().enumerate() {
            offsets[idx + 1] = offsets[idx] + d;
        }
        let block = |i: usize| coordinate_subspace(n, offsets[i]..offsets[i + 1]);
        Self {
            a0: block(0),
            a1: block(1),
            u: block(2),
            z1: block(3),
            m1: block(4),
            m2: block(5),
        }
    }

    /// Block dimensions in order (a0, a1, u, z1, m1, m2).
    pub fn dims(&self) -> [usize; 6] {
        [
            self.a0.dim(),
            self.a1.dim(),
            self.u.dim(),
            self.z1.dim(),
            self.m1.dim(),
            self.m2.dim(),
        ]
    }
}

/// Options for the realisation pipeline.
#[derive(Debug, Clone)]
pub struct RealizeOptions {
    /// Initial perturbation scale relative to the Frobenius norm of the
    /// minimiser's Ricci endomorphism.
    pub delta_init_rel: f64,
    /// Newton residual target, relative to max(1, ||Ric||).
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Number of delta/4 retries on a signature mismatch.
    pub max_delta_retries: usize,
    /// Eigenvalue classification tolerance for the final signature.
    pub sig_tol: f64,
    pub flow: FlowOptions,
}

impl Default for RealizeOptions {
    fn default() -> Self {
        Self {
            delta_init_rel: 1e-2,
            newton_tol: 1e-10,
            newton_max_iter: 50,
            max_delta_retries: 6,
            sig_tol: SIGNATURE_REL_TOL,
            flow: FlowOptions::default(),
        }
    }
}

/// Outcome of a successful realisation.
#[derive(Debug, Clone)]
pub struct RealizationResult {
    /// Total frame; the metric `<h ., h .>` realises the target.
    pub frame: MetricFrame,
    pub achieved: Signature,
    /// min |nonzero eigenvalue| / zero band, at least 10 on success.
    pub eigen_gap: f64,
    /// Labeled blocks of the adapted splitting used by the pipeline.
    pub decomposition: DecompositionFrame,
    pub flow: FlowReport,
    pub newton_residual: f64,
    pub delta: f64,
    pub delta_retries: usize,
}

/// Schur reduction of a symmetric matrix against the middle block of a
/// subgroup decomposition: returns the middle block and the reduced
/// complement on v1 ⊕ v3. The signature of the input is the sum of the two
/// blocks' signatures.
pub fn schur_reduce(
    ric: &crate::curvature::RicciEndomorphism,
    spec: &SubgroupSpec,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let rotated = spec.basis().transpose() * ric.matrix() * spec.basis();
    schur_blocks(&rotated, spec.v1().dim(), spec.v2().dim(), spec.v3().dim())
}

/// Schur reduction in coordinates where the blocks are the index ranges
/// [0,d1), [d1,d1+d2), [d1+d2,n).
pub fn schur_blocks(
    m: &DMatrix<f64>,
    d1: usize,
    d2: usize,
    d3: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    assert_eq!(m.nrows(), d1 + d2 + d3);
    let m11 = m.view((0, 0), (d1, d1)).into_owned();
    let m12 = m.view((0, d1), (d1, d2)).into_owned();
    let m13 = m.view((0, d1 + d2), (d1, d3)).into_owned();
    let m22 = m.view((d1, d1), (d2, d2)).into_owned();
    let m23 = m.view((d1, d1 + d2), (d2, d3)).into_owned();
    let m33 = m.view((d1 + d2, d1 + d2), (d3, d3)).into_owned();

    let (x11, x13, x33) = if d2 == 0 {
        (m11, m13, m33)
    } else {
        let condition = linalg::condition_number(&m22);
        if !condition.is_finite() || condition > 1e10 {
            return Err(Error::MiddleBlockSingular { condition });
        }
        let mid_inv = m22
            .clone()
            .try_inverse()
            .ok_or(Error::MiddleBlockSingular { condition })?;
        (
            &m11 - &m12 * &mid_inv * m12.transpose(),
            &m13 - &m12 * &mid_inv * &m23,
            &m33 - m23.transpose() * &mid_inv * &m23,
        )
    };
    let mut x = DMatrix::zeros(d1 + d3, d1 + d3);
    x.view_mut((0, 0), (d1, d1)).copy_from(&x11);
    x.view_mut((0, d1), (d1, d3)).copy_from(&x13);
    x.view_mut((d1, 0), (d3, d1)).copy_from(&x13.transpose());
    x.view_mut((d1, d1), (d3, d3)).copy_from(&x33);
    // Symmetrise away roundoff.
    let x = 0.5 * (&x + x.transpose());
    let m22 = m.view((d1, d1), (d2, d2)).into_owned();
    Ok((m22, x))
}

/// Whether the pattern space s = {symmetric A : A|v2 = 0, A(v1) ⊆ v3} meets
/// the derivation algebra of `mu` only at zero. This is the surjectivity
/// condition for the projected linearisation.
pub fn check_s_transversality(mu: &StructureTensor, spec: &SubgroupSpec) -> bool {
    let pattern = s_pattern_basis(spec);
    if pattern.is_empty() {
        return true;
    }
    let sys = mu.derivation_system();
    let n = mu.dim();
    let mut stacked = DMatrix::zeros(n * n * n, pattern.len());
    for (c, s) in pattern.iter().enumerate() {
        let mut col = DVector::zeros(n * n * n);
        // vec(S) contracted through the derivation system.
        for p in 0..n {
            for q in 0..n {
                let v = s[(p, q)];
                if v != 0.0 {
                    col += v * sys.column(p * n + q);
                }
            }
        }
        stacked.set_column(c, &col);
    }
    linalg::rank(&stacked) == pattern.len()
}

/// Orthonormal basis of the pattern space s in original coordinates:
/// symmetric matrices supported on (v1 x v3) + (v3 x v1) + (v3 x v3).
fn s_pattern_basis(spec: &SubgroupSpec) -> Vec<DMatrix<f64>> {
    let n = spec.ambient_dim();
    let (d1, d2, d3) = (spec.v1().dim(), spec.v2().dim(), spec.v3().dim());
    let u = spec.basis();
    let inv_sqrt2 = 1.0 / 2f64.sqrt();
    let mut out = Vec::with_capacity(d1 * d3 + d3 * (d3 + 1) / 2);
    for i in 0..d1 {
        for j in 0..d3 {
            let mut s = DMatrix::zeros(n, n);
            s[(i, d1 + d2 + j)] = inv_sqrt2;
            s[(d1 + d2 + j, i)] = inv_sqrt2;
            out.push(u * s * u.transpose());
        }
    }
    for i in 0..d3 {
        for j in i..d3 {
            let mut s = DMatrix::zeros(n, n);
            if i == j {
                s[(d1 + d2 + i, d1 + d2 + i)] = 1.0;
            } else {
                s[(d1 + d2 + i, d1 + d2 + j)] = inv_sqrt2;
                s[(d1 + d2 + j, d1 + d2 + i)] = inv_sqrt2;
            }
            out.push(u * s * u.transpose());
        }
    }
    out
}

/// Signature of [[X11, I], [I, 0]] for symmetric X11 of size r: always
/// (r, 0, r). Verified both by eigenvalue count and by sampling the homotopy
/// t -> [[t X11, I], [I, 0]], which stays invertible on [0, 1].
pub fn homotopy_signature_check(x11: &DMatrix<f64>, r: usize) -> Result<Signature> {
    if x11.nrows() != r || x11.ncols() != r {
        return Err(Error::DimensionMismatch {
            expected: r,
            got: x11.nrows(),
        });
    }
    if !linalg::is_symmetric(x11, 1e-10) {
        return Err(Error::NonSymmetricInput);
    }
    let build = |t: f64| -> DMatrix<f64> {
        let mut m = DMatrix::zeros(2 * r, 2 * r);
        m.view_mut((0, 0), (r, r)).copy_from(&(t * x11));
        for i in 0..r {
            m[(i, r + i)] = 1.0;
            m[(r + i, i)] = 1.0;
        }
        m
    };
    for step in 0..=10 {
        let t = step as f64 / 10.0;
        let m = build(t);
        let (vals, _) = linalg::sym_eigen(&m);
        let scale = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let min = vals.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
        if min <= 1e-9 * scale {
            return Err(Error::HypothesisViolated(format!(
                "homotopy lost invertibility at t = {t}"
            )));
        }
    }
    let sig = signature(&build(1.0), SIGNATURE_REL_TOL)?;
    if sig != Signature::new(r, 0, r) {
        return Err(Error::HypothesisViolated(format!(
            "pairing block has signature {sig}, expected ({r},0,{r})"
        )));
    }
    Ok(sig)
}

/// Adapted orthonormal blocks for `mu` with the central split at `r`.
/// Works for any valid presentation: the blocks need not be orthogonal in a
/// non-adapted background, in which case the returned change of basis is the
/// (well-conditioned, non-orthogonal) matrix of the adapted column bases.
fn adapted_basis(mu: &StructureTensor, p: &Profile) -> Result<DMatrix<f64>> {
    let center = mu.center();
    let derived = mu.derived_ideal();
    let (z1_dim,) = if mu.is_exact() {
        let c = crate::invariants::center_basis_exact(mu);
        let d = crate::invariants::bracket_generators_exact(mu).column_basis();
        (crate::rational::intersection_dim(&c, &d),)
    } else {
        (center.intersect(&derived, None).dim(),)
    };
    debug_assert_eq!(z1_dim, p.z);
    let z1 = center.intersect(&derived, Some(z1_dim));
    // Complements that exist for every background product.
    let a_block = center.intersect(&z1.orthogonal_complement(), Some(p.a));
    let m_block = derived.intersect(&z1.orthogonal_complement(), Some(p.m));
    let zd = center.sum(&derived, Some(p.a + p.z + p.m));
    let u_block = zd.orthogonal_complement();
    debug_assert_eq!(u_block.dim(), p.u);

    // Column order (a | u | z1 | m); the stratum split reads a as a0|a1 and
    // m as m1|m2 positionally.
    let n = mu.dim();
    let mut g = DMatrix::zeros(n, n);
    let mut col = 0;
    for (block, take) in [
        (&a_block, p.a),
        (&u_block, p.u),
        (&z1, p.z),
        (&m_block, p.m),
    ] {
        for c in 0..take {
            g.set_column(col, &block.basis().column(c));
            col += 1;
        }
    }
    debug_assert_eq!(col, n);
    Ok(g)
}

fn coordinate_subspace(n: usize, range: std::ops::Range<usize>) -> Subspace {
    let id = DMatrix::<f64>::identity(n, n);
    Subspace::new(
        id.columns(range.start, range.end - range.start)
            .into_owned(),
    )
}

/// Extracts the sub-tensor on trailing coordinates [off, n).
fn restrict_tensor(mu: &StructureTensor, off: usize) -> Result<StructureTensor> {
    let n = mu.dim();
    let d = n - off;
    let t = mu.tensor();
    // Components touching the split-off central factor must vanish.
    let mut leak = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if i < off || j < off || k < off {
                    leak = leak.max(t.get(i, j, k).abs());
                }
            }
        }
    }
    if leak > 1e-10 * (1.0 + mu.norm()) {
        return Err(Error::HypothesisViolated(format!(
            "flat central factor is not decoupled (leak {leak:.3e})"
        )));
    }
    let mut sub = SkewTensor::zeros(d);
    for i in 0..d {
        for j in (i + 1)..d {
            for k in 0..d {
                sub.set(i, j, k, t.get(i + off, j + off, k + off));
            }
        }
    }
    StructureTensor::from_skew(sub, false)
}

fn embed_frame(n: usize, off: usize, inner: &DMatrix<f64>) -> DMatrix<f64> {
    let mut full = DMatrix::identity(n, n);
    full.view_mut((off, off), (inner.nrows(), inner.ncols()))
        .copy_from(inner);
    full
}

/// Chooses the smallest stratum r whose bounds admit the target, together
/// with the leftover witness signature (m-, m0, m+).
fn select_stratum(p: &Profile, target: &Signature) -> Result<(usize, Signature)> {
    if target.total() != p.dim {
        return Err(Error::TargetNotInSet {
            target: *target,
            reason: format!(
                "components sum to {}, dimension is {}",
                target.total(),
                p.dim
            ),
        });
    }
    let mut reasons = Vec::new();
    for r in 0..=p.a.min(p.m) {
        let (nb, zb, pb) = (p.u + r, p.a - r, p.z + r);
        if target.neg >= nb && target.zero >= zb && target.pos >= pb {
            let witness = Signature::new(target.neg - nb, target.zero - zb, target.pos - pb);
            return Ok((r, witness));
        }
        let mut broken = Vec::new();
        if target.neg < nb {
            broken.push(format!("neg >= {nb}"));
        }
        if target.zero < zb {
            broken.push(format!("zero >= {zb}"));
        }
        if target.pos < pb {
            broken.push(format!("pos >= {pb}"));
        }
        reasons.push(format!("r={r}: violates {}", broken.join(", ")));
    }
    Err(Error::TargetNotInSet {
        target: *target,
        reason: reasons.join("; "),
    })
}

/// Builds the target pattern-space coordinates for the prescribed blocks.
struct NewtonProblem {
    /// Orthonormal pattern basis on the reduced space (coordinate blocks).
    basis: Vec<DMatrix<f64>>,
    target: DVector<f64>,
    d1: usize,
    d2: usize,
    d3: usize,
}

impl NewtonProblem {
    fn new(dim: usize, r: usize, d2: usize, m: usize, delta: f64, witness: &Signature) -> Self {
        let d1 = r;
        let d3 = m;
        assert_eq!(d1 + d2 + d3, dim);
        let inv_sqrt2 = 1.0 / 2f64.sqrt();
        let mut basis = Vec::new();
        let mut target = Vec::new();
        // v1 x v3 pairs.
        for i in 0..d1 {
            for j in 0..d3 {
                let mut s = DMatrix::zeros(dim, dim);
                s[(i, d1 + d2 + j)] = inv_sqrt2;
                s[(d1 + d2 + j, i)] = inv_sqrt2;
                basis.push(s);
                // Prescribed X13 = delta * [I_r | 0].
                target.push(if i == j {
                    delta * 2f64.sqrt() * 0.5 * 2.0
                } else {
                    0.0
                });
            }
        }
        // v3 x v3 symmetric entries; prescribed X33 = diag(0_r, delta * Y).
        let mut y = vec![0.0f64; d3];
        {
            let mut idx = d1.min(d3);
            for _ in 0..witness.neg {
                y[idx] = -1.0;
                idx += 1;
            }
            idx += witness.zero;
            for _ in 0..witness.pos {
                y[idx] = 1.0;
                idx += 1;
            }
        }
        for i in 0..d3 {
            for j in i..d3 {
                let mut s = DMatrix::zeros(dim, dim);
                if i == j {
                    s[(d1 + d2 + i, d1 + d2 + i)] = 1.0;
                    basis.push(s);
                    target.push(delta * y[i]);
                } else {
                    s[(d1 + d2 + i, d1 + d2 + j)] = inv_sqrt2;
                    s[(d1 + d2 + j, d1 + d2 + i)] = inv_sqrt2;
                    basis.push(s);
                    target.push(0.0);
                }
            }
        }
        Self {
            basis,
            target: DVector::from_vec(target),
            d1,
            d2,
            d3,
        }
    }

    /// Pattern-space coordinates of a symmetric matrix.
    fn coords(&self, m: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.basis.len(),
            self.basis.iter().map(|s| (m * s.transpose()).trace()),
        )
    }

    /// Residual of the Schur-complement blocks against the prescription.
    fn residual(&self, full: &DMatrix<f64>) -> Result<DVector<f64>> {
        let (_, x) = schur_blocks(full, self.d1, self.d2, self.d3)?;
        // Embed x (on v1 ⊕ v3) back into full coordinates for the pairing.
        let dim = self.d1 + self.d2 + self.d3;
        let mut emb = DMatrix::zeros(dim, dim);
        emb.view_mut((0, 0), (self.d1, self.d1))
            .copy_from(&x.view((0, 0), (self.d1, self.d1)).into_owned());
        emb.view_mut((0, self.d1 + self.d2), (self.d1, self.d3))
            .copy_from(&x.view((0, self.d1), (self.d1, self.d3)).into_owned());
        emb.view_mut((self.d1 + self.d2, 0), (self.d3, self.d1))
            .copy_from(&x.view((self.d1, 0), (self.d3, self.d1)).into_owned());
        emb.view_mut((self.d1 + self.d2, self.d1 + self.d2), (self.d3, self.d3))
            .copy_from(&x.view((self.d1, self.d1), (self.d3, self.d3)).into_owned());
        Ok(self.coords(&emb) - &self.target)
    }
}

/// Damped Newton solve on the projected linearisation: finds a small
/// symmetric E whose Schur blocks match the prescription.
fn newton_solve(
    mu_bar: &StructureTensor,
    problem: &NewtonProblem,
    opts: &RealizeOptions,
) -> Result<(DMatrix<f64>, f64)> {
    let dim = mu_bar.dim();
    let sym = symmetric_basis(dim);
    let scale = ricci(mu_bar).matrix().norm().max(1.0);
    let tol = opts.newton_tol * scale;

    // Jacobian at 0: pattern coordinates of the Ricci derivative.
    let mut jac = DMatrix::zeros(problem.basis.len(), sym.len());
    for (c, e) in sym.iter().enumerate() {
        let l = ricci_derivative(mu_bar, e)?;
        jac.set_column(c, &problem.coords(&l));
    }
    if !problem.basis.is_empty() {
        let jrank = linalg::rank(&jac);
        if jrank < problem.basis.len() {
            return Err(Error::NewtonFailed {
                residual: f64::INFINITY,
            });
        }
    }

    let ric0 = ricci(mu_bar).matrix().clone();
    let eval = |e: &DMatrix<f64>| -> Result<DVector<f64>> {
        let h = MetricFrame::new(linalg::matrix_exp(e))?;
        let moved = act(&h, mu_bar)?;
        problem.residual(ricci(&moved).matrix())
    };

    let mut e = DMatrix::zeros(dim, dim);
    let mut res = problem.residual(&ric0)?;
    let mut res_norm = res.norm();
    for _ in 0..opts.newton_max_iter {
        if res_norm <= tol {
            return Ok((e, res_norm));
        }
        let (dx, _) = linalg::lstsq_min_norm(&jac, &(-&res));
        let mut step = DMatrix::zeros(dim, dim);
        for (c, eb) in sym.iter().enumerate() {
            step += dx[c] * eb;
        }
        // Damping: halve on residual increase or on an ill-conditioned
        // middle block along the way.
        let mut factor = 1.0f64;
        let mut accepted = false;
        for _ in 0..20 {
            let trial = &e + factor * &step;
            match eval(&trial) {
                Ok(trial_res) => {
                    let trial_norm = trial_res.norm();
                    if trial_norm < res_norm {
                        e = trial;
                        res = trial_res;
                        res_norm = trial_norm;
                        accepted = true;
                        break;
                    }
                }
                Err(Error::MiddleBlockSingular { .. }) => {}
                Err(other) => return Err(other),
            }
            factor *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if res_norm <= tol {
        Ok((e, res_norm))
    } else {
        Err(Error::NewtonFailed { residual: res_norm })
    }
}

/// Constructs a frame whose metric realises `target`, which must lie in the
/// attainable set of the profile of `mu`.
pub fn realize(
    mu: &StructureTensor,
    target: &Signature,
    opts: &RealizeOptions,
) -> Result<RealizationResult> {
    let p = profile(mu)?;
    if !attainable_set(&p).contains(target) {
        // Reconstruct the per-stratum reasons for the error message.
        return Err(select_stratum(&p, target).unwrap_err());
    }
    let (r, witness) = select_stratum(&p, target)?;
    let n = mu.dim();
    let off = p.a - r;

    // Move to adapted coordinates (a0 | a1 | u | z1 | m1 | m2).
    let g = adapted_basis(mu, &p)?;
    let h0 = MetricFrame::new(g.clone().try_inverse().ok_or(Error::SingularFrame {
        condition: f64::INFINITY,
    })?)?;
    let nu = act(&h0, mu)?;

    // Reduced ideal spanned by (a1 | u | z1 | m): everything past a0.
    let mu_tilde = restrict_tensor(&nu, off)?;
    let d = mu_tilde.dim();
    let d2 = p.u + p.z;
    let spec = SubgroupSpec::new(
        coordinate_subspace(d, 0..r),
        coordinate_subspace(d, r..r + d2),
        coordinate_subspace(d, r + d2..d),
    )?;

    // Orbit-norm minimisation; a tight residual keeps the kernel directions
    // well inside the signature zero band.
    let mut flow_opts = opts.flow.clone();
    if flow_opts.tol.is_none() {
        flow_opts.tol = Some(1e-11 * mu_tilde.norm_sq().max(f64::MIN_POSITIVE));
    }
    let flow_report = minimize(&mu_tilde, &spec, &flow_opts)?;
    let mu_bar = flow_report.final_mu.clone();

    if !check_s_transversality(&mu_bar, &spec) {
        return Err(Error::HypothesisViolated(
            "pattern space meets the derivation algebra of the minimiser".into(),
        ));
    }

    let ric_bar = ricci(&mu_bar);
    let middle0 = ric_bar.matrix().view((r, r), (d2, d2)).into_owned();
    let sigma_middle0 = signature(&middle0, opts.sig_tol)?;

    let delta0 = opts.delta_init_rel * ric_bar.matrix().norm().max(f64::MIN_POSITIVE);
    let mut last_achieved = None;
    for attempt in 0..=opts.max_delta_retries {
        let delta = delta0 / 4f64.powi(attempt as i32);
        let problem = NewtonProblem::new(d, r, d2, p.m, delta, &witness);
        let (e, newton_residual) = match newton_solve(&mu_bar, &problem, opts) {
            Ok(v) => v,
            Err(Error::NewtonFailed { .. }) if attempt < opts.max_delta_retries => continue,
            Err(err) => return Err(err),
        };

        // The perturbation must keep the middle block's signature.
        let h_e = MetricFrame::new(linalg::matrix_exp(&e))?;
        let perturbed = act(&h_e, &mu_bar)?;
        let ric_tilde = ricci(&perturbed);
        let (middle, x) = match schur_blocks(ric_tilde.matrix(), r, d2, p.m) {
            Ok(v) => v,
            Err(Error::MiddleBlockSingular { .. }) if attempt < opts.max_delta_retries => continue,
            Err(err) => return Err(err),
        };
        // Blocks are classified at the scale of the full reduced matrix:
        // zero must mean zero relative to the parent, or a tiny 1x1 block
        // would count as a sign.
        let scale = linalg::spectral_norm_sym(ric_tilde.matrix());
        if signature_scaled(&middle, opts.sig_tol, Some(scale))? != sigma_middle0 {
            continue;
        }
        // Block-congruence additivity cross-check on the reduced space.
        let achieved_tilde = signature(ric_tilde.matrix(), opts.sig_tol)?;
        let additive = sigma_middle0.add(&signature_scaled(&x, opts.sig_tol, Some(scale))?);
        if achieved_tilde != additive {
            continue;
        }

        // Assemble the total frame on the original algebra.
        let inner = h_e.matrix() * flow_report.final_frame.matrix();
        let full = embed_frame(n, off, &inner);
        let frame = MetricFrame::new(full * h0.matrix())?;
        let ric_full = ricci(&act(&frame, mu)?);
        let achieved = signature(ric_full.matrix(), opts.sig_tol)?;
        let gap = eigen_gap(ric_full.matrix(), opts.sig_tol);
        last_achieved = Some(achieved);
        if achieved == *target && gap >= 10.0 {
            return Ok(RealizationResult {
                frame,
                achieved,
                eigen_gap: gap,
                decomposition: DecompositionFrame::coordinates(&p, r),
                flow: flow_report,
                newton_residual,
                delta,
                delta_retries: attempt,
            });
        }
    }
    Err(Error::SignatureMismatch {
        achieved: last_achieved.unwrap_or(Signature::new(0, 0, 0)),
        target: *target,
    })
}
