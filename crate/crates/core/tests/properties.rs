//! Property tests for the structural identities behind the signature
//! machinery: GL-equivariance, the moment-map identity, congruence
//! invariance of signatures, and the rank-one-overlap signature lemma.

use nalgebra::DMatrix;
use proptest::prelude::*;

use nilric::*;

/// Dyadic coefficients keep the tensors exact, so the rational rank path is
/// exercised alongside the floating one.
fn dyadic() -> impl Strategy<Value = f64> {
    (-8i8..=8).prop_map(|v| v as f64 * 0.25)
}

/// Random 2-step nilpotent bracket: generators map into a central block.
/// Jacobi holds automatically because all double brackets vanish.
fn two_step() -> impl Strategy<Value = StructureTensor> {
    (2usize..=3, 1usize..=2).prop_flat_map(|(gens, extra)| {
        let pairs = gens * (gens - 1) / 2 * extra;
        prop::collection::vec(dyadic(), pairs).prop_map(move |coeffs| {
            let dim = gens + extra;
            let mut entries = Vec::new();
            let mut it = coeffs.into_iter();
            for i in 0..gens {
                for j in (i + 1)..gens {
                    for k in gens..dim {
                        entries.push((i, j, k, it.next().unwrap()));
                    }
                }
            }
            StructureTensor::new(dim, &entries).expect("two-step tensors are nilpotent")
        })
    })
}

fn square(dim: usize, scale: f64) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0f64..1.0, dim * dim)
        .prop_map(move |entries| DMatrix::from_fn(dim, dim, |i, j| scale * entries[i * dim + j]))
}

proptest! {
    #[test]
    fn action_composes(mu in two_step(), seed in 0u64..1000) {
        let n = mu.dim();
        let (h1, h2) = frame_pair(n, seed);
        let lhs = act(&h2, &act(&h1, &mu).unwrap()).unwrap();
        let rhs = act(&h2.compose(&h1).unwrap(), &mu).unwrap();
        let scale = rhs.norm().max(1.0);
        prop_assert!(lhs.tensor().sub(rhs.tensor()).max_abs() <= 1e-10 * scale);
    }

    #[test]
    fn center_and_derived_are_equivariant(mu in two_step(), seed in 0u64..1000) {
        let n = mu.dim();
        let (h, _) = frame_pair(n, seed);
        let nu = act(&h, &mu).unwrap();
        prop_assert!(nu.center().angle_sin_to(&mu.center().map(h.matrix())) <= 1e-8);
        prop_assert!(
            nu.derived_ideal().angle_sin_to(&mu.derived_ideal().map(h.matrix())) <= 1e-8
        );
    }

    #[test]
    fn moment_identity(mu in two_step(), a in square(5, 1.0), seed in 0u64..1000) {
        let n = mu.dim();
        let (h, _) = frame_pair(n, seed);
        let nu = act(&h, &mu).unwrap();
        let a = a.view((0, 0), (n, n)).into_owned();
        let lhs = moment_pairing(&nu, &a);
        let rhs = 0.25 * infinitesimal_action(&a, &nu).inner(nu.tensor());
        prop_assert!((lhs - rhs).abs() <= 1e-10 * nu.norm_sq() * a.norm().max(1e-12));
    }

    #[test]
    fn trace_identity(mu in two_step(), seed in 0u64..1000) {
        let n = mu.dim();
        let (h, _) = frame_pair(n, seed);
        let nu = act(&h, &mu).unwrap();
        let tr = ricci(&nu).trace();
        let expect = -0.25 * nu.norm_sq();
        prop_assert!((tr - expect).abs() <= 1e-10 * expect.abs().max(1e-12));
    }

    #[test]
    fn signature_is_congruence_invariant(
        signs in prop::collection::vec(prop_oneof![Just(-1.0f64), Just(1.0)], 2..6),
        gaps in prop::collection::vec(0.5f64..2.0, 2..6),
        seed in 0u64..1000,
    ) {
        let n = signs.len().min(gaps.len());
        let diag = DMatrix::from_fn(n, n, |i, j| if i == j { signs[i] * gaps[i] } else { 0.0 });
        let (g, _) = frame_pair(n, seed);
        let congruent = g.matrix().transpose() * &diag * g.matrix();
        let before = signature(&diag, 1e-8).unwrap();
        let after = signature(&congruent, 1e-8).unwrap();
        prop_assert_eq!(before, after);
    }

    #[test]
    fn ricci_form_signature_is_congruence_invariant(mu in two_step(), seed in 0u64..1000) {
        // Reading eigenvalue signs off the Ricci endomorphism computes the
        // signature of the Ricci bilinear form: re-expressing that form in
        // any other basis leaves the counts unchanged.
        let n = mu.dim();
        let (h, g) = frame_pair(n, seed);
        let ric = ricci(&act(&h, &mu).unwrap());
        let congruent = g.matrix().transpose() * ric.matrix() * g.matrix();
        let before = signature(ric.matrix(), 1e-8).unwrap();
        let after = signature(&congruent, 1e-8).unwrap();
        prop_assert_eq!(before, after);
    }

    #[test]
    fn semidefinite_difference_signature(
        b in 1usize..=3,
        c in 1usize..=3,
        seed in 0u64..1000,
    ) {
        // s, t PSD with signatures (0, b, c) and (0, c, b) and transversal
        // radicals force signature(t - s) = (c, 0, b).
        let n = b + c;
        let (g, h) = frame_pair(n, seed);
        let mut ds = DMatrix::zeros(n, n);
        for i in b..n {
            ds[(i, i)] = 1.0 + (i as f64) * 0.25;
        }
        let mut dt = DMatrix::zeros(n, n);
        for i in 0..b {
            dt[(i, i)] = 1.5 + (i as f64) * 0.5;
        }
        let s = g.matrix().transpose() * &ds * g.matrix();
        let t = h.matrix().transpose() * &dt * h.matrix();
        prop_assert_eq!(signature(&s, 1e-8).unwrap(), Signature::new(0, b, c));
        prop_assert_eq!(signature(&t, 1e-8).unwrap(), Signature::new(0, c, b));
        let diff = &t - &s;
        prop_assert_eq!(signature(&diff, 1e-8).unwrap(), Signature::new(c, 0, b));
    }

    #[test]
    fn attainable_subset_of_conjectured(mu in two_step()) {
        let p = profile(&mu).unwrap();
        let strong = attainable_set(&p);
        let weak = conjectured_set(&p);
        prop_assert!(strong.is_subset(&weak));
        for sig in &strong {
            prop_assert_eq!(sig.total(), p.dim);
        }
    }

    #[test]
    fn random_metrics_satisfy_lower_bounds(mu in two_step(), seed in 0u64..1000) {
        let n = mu.dim();
        let (h, _) = frame_pair(n, seed);
        let bounds = signature_lower_bounds(&mu, &h).unwrap();
        let sig = signature(ricci(&act(&h, &mu).unwrap()).matrix(), 1e-8).unwrap();
        prop_assert!(bounds.satisfied_by(&sig), "bounds {:?} vs {}", bounds, sig);
        // And the sampled signature lies in the attainable set.
        let p = profile(&mu).unwrap();
        prop_assert!(attainable_set(&p).contains(&sig));
    }

    #[test]
    fn save_load_roundtrip(mu in two_step()) {
        let reloaded = load(&save(&mu)).unwrap();
        prop_assert_eq!(mu.tensor(), reloaded.tensor());
    }

    #[test]
    fn radical_contains_central_orthogonal_directions(mu in two_step(), seed in 0u64..1000) {
        // Central directions orthogonal to the derived ideal lie in the
        // radical of the Ricci form, for every metric.
        let n = mu.dim();
        let (h, _) = frame_pair(n, seed);
        let nu = act(&h, &mu).unwrap();
        let ric = ricci(&nu);
        let scale = nilric::linalg::spectral_norm_sym(ric.matrix()).max(f64::MIN_POSITIVE);
        let radical_part = nu
            .center()
            .intersect(&nu.derived_ideal().orthogonal_complement(), None);
        for c in 0..radical_part.dim() {
            let v = radical_part.basis().column(c).into_owned();
            prop_assert!((ric.matrix() * v).norm() <= 1e-9 * scale);
        }
    }
}

/// Two deterministic well-conditioned frames derived from a seed.
fn frame_pair(dim: usize, seed: u64) -> (MetricFrame, MetricFrame) {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut make = |scale: f64| {
        let mut h = DMatrix::identity(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                h[(i, j)] += scale * (rng.random::<f64>() - 0.5);
            }
        }
        MetricFrame::new(h).expect("perturbed identity is invertible")
    };
    (make(0.3), make(0.25))
}
