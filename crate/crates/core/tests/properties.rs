use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use quasi_similarity::cli::Num17;
use quasi_similarity::finsets::{FinSet, Window};
use quasi_similarity::hilbert::{krylov_span, Operator, Vector};
use quasi_similarity::joinings::{
    equivariance_defect, is_indecomposable, joining_from_markov, joining_space,
    markov_from_joining, pairing_defect, random_joining, validate_joining, FiniteMps,
    JoiningMatrix,
};
use quasi_similarity::markov::projection_onto_constants;
use quasi_similarity::model::{
    adjoint_in, isometry_in, markov_j, verify_intertwining, xi_identity_check, zeta_identity_check,
    Model, ModelConfig, ModelVector,
};
use quasi_similarity::spectral::{
    absolutely_continuous, cross_spectral_measure, fourier_deviation, quasi_similar_example,
    random_permutation, spectral_measure, spectral_profile, spectrally_equivalent, SpectralProfile,
};
use quasi_similarity::weights::{
    convolution_operator, fourier_coefficients, injectivity_margin, normalize, WeightSequence,
};
use quasi_similarity::Complex64;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn fin_set() -> impl Strategy<Value = FinSet> {
    prop::collection::btree_set(-8i64..=8, 1..8).prop_map(|s| FinSet::new(s).unwrap())
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn small_config() -> impl Strategy<Value = ModelConfig> {
    (
        2usize..=6,
        1i64..=5,
        prop::collection::vec(0u8..=1, 6),
        0usize..=1,
    )
        .prop_filter("s coprime to N", |(n, s, _, _)| {
            gcd(*s as usize % n, *n) == 1
        })
        .prop_map(|(n, s, phi, k)| ModelConfig {
            n,
            s,
            phi: phi[..n].to_vec(),
            m: 3,
            k,
            safe_margin: k + 1,
        })
}

fn random_model_vector(model: &Model, window: Window, seed: u64) -> ModelVector {
    let idx = model.basis_within(window);
    let values = Vector::random(idx.len(), &mut rng(seed));
    let mut f = ModelVector::new();
    for (i, v) in idx.into_iter().zip(values.entries()) {
        f.add_term(i, *v);
    }
    f
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn adjoint_is_an_involution(rows in 1usize..7, cols in 1usize..7, seed in any::<u64>()) {
        let a = Operator::random_gaussian(rows, cols, &mut rng(seed));
        let back = a.adjoint().adjoint();
        prop_assert_eq!(back.entries_row_major(), a.entries_row_major());
        prop_assert_eq!(a.adjoint().get(0, rows - 1), a.get(rows - 1, 0).conj());
    }

    #[test]
    fn norm_bounds_every_image(rows in 1usize..7, cols in 1usize..7, seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = Operator::random_gaussian(rows, cols, &mut r);
        let sigma = a.norm();
        for _ in 0..8 {
            let x = Vector::random(cols, &mut r);
            prop_assert!(a.apply(&x).unwrap().norm() <= sigma * x.norm() * (1.0 + 1e-10));
        }
    }

    #[test]
    fn unitaries_have_unit_singular_values(n in 1usize..9, seed in any::<u64>()) {
        let u = Operator::random_unitary(n, &mut rng(seed));
        prop_assert!(u.singular_values().iter().all(|s| (s - 1.0).abs() <= 1e-10));
    }

    #[test]
    fn cyclic_spaces_grow_with_generators(n in 2usize..9, seed in any::<u64>()) {
        let mut r = rng(seed);
        let u = Operator::koopman_permutation(&random_permutation(n, &mut r));
        let g1 = Vector::basis(n, 0);
        let g2 = Vector::random(n, &mut r);
        let one = krylov_span(&u, std::slice::from_ref(&g1)).unwrap().len();
        let two = krylov_span(&u, &[g1, g2]).unwrap().len();
        prop_assert!(one <= two && two <= n);
    }

    #[test]
    fn spectral_measures_reproduce_correlations(n in 1usize..10, seed in any::<u64>()) {
        let mut r = rng(seed);
        let u = if seed % 2 == 0 {
            Operator::koopman_permutation(&random_permutation(n, &mut r))
        } else {
            Operator::random_unitary(n, &mut r)
        };
        let x = Vector::random(n, &mut r);
        let sigma = spectral_measure(&u, &x).unwrap();
        prop_assert!((sigma.total_mass() - x.norm_sqr()).abs() <= 1e-10);
        let cross = sigma.to_complex();
        prop_assert!(fourier_deviation(&u, &x, &x, &cross, 32).unwrap() <= 1e-10);
        let y = Vector::random(n, &mut r);
        let sxy = cross_spectral_measure(&u, &x, &y).unwrap();
        prop_assert!(fourier_deviation(&u, &x, &y, &sxy, 32).unwrap() <= 1e-10);
    }

    #[test]
    fn intertwiners_push_measures_into_the_type(n in 2usize..8, seed in any::<u64>()) {
        let mut r = rng(seed);
        let [u1, u2, v, _] = quasi_similar_example(n, &mut r).unwrap();
        for _ in 0..5 {
            let x = Vector::random(n, &mut r);
            let image = spectral_measure(&u2, &v.apply(&x).unwrap()).unwrap();
            prop_assert!(absolutely_continuous(&image, &spectral_measure(&u1, &x).unwrap()));
        }
    }

    #[test]
    fn spectral_equivalence_is_an_equivalence(n in 1usize..8, seed in any::<u64>()) {
        let mut r = rng(seed);
        let ops: Vec<Operator> = (0..3)
            .map(|_| Operator::koopman_permutation(&random_permutation(n, &mut r)))
            .collect();
        let eq = |a: usize, b: usize| spectrally_equivalent(&ops[a], &ops[b]).unwrap();
        for a in 0..3 {
            prop_assert!(eq(a, a));
            for b in 0..3 {
                prop_assert_eq!(eq(a, b), eq(b, a));
                for c in 0..3 {
                    if eq(a, b) && eq(b, c) {
                        prop_assert!(eq(a, c));
                    }
                }
            }
        }
    }

    #[test]
    fn direct_sum_doubles_multiplicities(n in 1usize..7, seed in any::<u64>()) {
        let perm = random_permutation(n, &mut rng(seed));
        let u = Operator::koopman_permutation(&perm);
        let single = spectral_profile(&u).unwrap();
        let double = spectral_profile(&u.direct_sum(&u)).unwrap();
        let expected = SpectralProfile {
            lines: single.lines.iter().map(|l| quasi_similarity::spectral::SpectralLine { multiplicity: 2 * l.multiplicity, ..*l }).collect(),
        };
        prop_assert!(double.matches(&expected));
        prop_assert_eq!(double.max_multiplicity(), 2 * single.max_multiplicity());
    }

    #[test]
    fn hat_and_tilde_are_inverse(a in fin_set()) {
        prop_assert_eq!(a.hat().tilde().unwrap(), a.clone());
        if !a.contains(1) {
            prop_assert_eq!(a.tilde().unwrap().hat(), a.clone());
        } else {
            prop_assert!(a.tilde().is_err());
        }
    }

    #[test]
    fn shifted_tilde_bookkeeping(b in fin_set(), n in -4i64..=4) {
        if !b.contains(n + 1) {
            prop_assert_eq!(b.shift(-n).tilde().unwrap().hat().shift(n), b.clone());
        }
    }

    #[test]
    fn canonical_representatives(a in fin_set(), n in -20i64..=20) {
        let (rep, offset) = a.canonical_rep();
        prop_assert!(rep.is_canonical());
        prop_assert_eq!(rep.shift(offset), a.clone());
        prop_assert_eq!(rep.canonical_rep().0, rep.clone());
        prop_assert_eq!(a.shift(n).canonical_rep().0, rep);
        prop_assert!(a.is_equivalent(&a.shift(n)));
    }

    #[test]
    fn num17_round_trips(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        let text = serde_json::to_string(&Num17(v)).unwrap();
        let back: Num17 = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back.0, v);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn isometries_are_left_inverted_by_their_adjoints(cfg in small_config(), n in -1i64..=1, seed in any::<u64>()) {
        let model = Model::new(cfg).unwrap();
        // I_n with |n| ≤ 1 reads at most two coordinates beyond the set
        let f = random_model_vector(&model, model.window().dilate(-2), seed);
        let round = model.try_apply(&adjoint_in(n), &model.try_apply(&isometry_in(n), &f).unwrap()).unwrap();
        prop_assert!(round.sub(&f).max_abs() <= 1e-12);
    }

    #[test]
    fn every_isometry_intertwines(cfg in small_config(), n in -1i64..=1) {
        let k = cfg.k as i64;
        let model = Model::new(cfg).unwrap();
        if n.abs() <= k {
            prop_assert!(verify_intertwining(&model, &isometry_in(n)).unwrap().residual <= 1e-10);
        }
        let j = markov_j(&WeightSequence::delta(0, k as usize).unwrap(), model.config()).unwrap();
        prop_assert!(verify_intertwining(&model, &j).unwrap().residual <= 1e-10);
    }

    #[test]
    fn convolution_identities_hold(cfg in small_config(), seed in any::<u64>(), extra in prop::collection::btree_set(1i64..=3, 0..3)) {
        let k = cfg.k;
        let model = Model::new(cfg).unwrap();
        let a = normalize(&WeightSequence::new((0..2 * k + 1).map(|i| 1.0 + i as f64).collect()).unwrap()).unwrap();
        let f = random_model_vector(&model, model.config().safe_window(), seed);
        let b = FinSet::new(std::iter::once(0).chain(extra)).unwrap();
        prop_assert!(xi_identity_check(&model, &a, &f, &b).unwrap() <= 1e-12);
        prop_assert!(zeta_identity_check(&model, &a, &f, &b).unwrap() <= 1e-12);
    }

    #[test]
    fn joining_correspondence_is_a_bijection(n1 in 1usize..6, n2 in 1usize..6, seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = FiniteMps::uniform(random_permutation(n1, &mut r)).unwrap();
        let b = FiniteMps::uniform(random_permutation(n2, &mut r)).unwrap();
        let space = joining_space(&a, &b);
        prop_assert_eq!(space.dimension, joining_space(&b, &a).dimension);
        for _ in 0..3 {
            let lam = random_joining(&space, &mut r);
            let phi = markov_from_joining(&lam, &a, &b).unwrap();
            prop_assert!(pairing_defect(&phi.matrix, &lam, &b) <= 1e-12);
            prop_assert!(equivariance_defect(&phi.matrix, &a, &b).unwrap() <= 1e-12);
            let back = joining_from_markov(&phi.matrix, &a, &b).unwrap();
            prop_assert!(back.max_abs_diff(&lam) <= 1e-12);
        }
    }

    #[test]
    fn coprime_rotations_only_join_independently(n1 in 2usize..8, n2 in 2usize..8) {
        prop_assume!(gcd(n1, n2) == 1);
        let a = FiniteMps::rotation(n1).unwrap();
        let b = FiniteMps::rotation(n2).unwrap();
        let space = joining_space(&a, &b);
        prop_assert_eq!(space.dimension, 0);
        let phi = markov_from_joining(&space.particular, &a, &b).unwrap();
        let pi = projection_onto_constants(a.p(), n2);
        prop_assert!(phi.matrix.sub(&pi).unwrap().max_abs_entry() <= 1e-12);
    }
}

// Maximizes a linear objective over the joining polytope with an LP solver
// that knows nothing about the crate's elimination.
fn lp_optimal_joining(a: &FiniteMps, b: &FiniteMps, objective: &[f64]) -> JoiningMatrix {
    use minilp::{ComparisonOp, OptimizationDirection, Problem};
    let (n1, n2) = (a.len(), b.len());
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> = objective
        .iter()
        .map(|&c| lp.add_var(c, (0.0, f64::INFINITY)))
        .collect();
    let at = |x: usize, y: usize| vars[x * n2 + y];
    for x in 0..n1 {
        let row: Vec<_> = (0..n2).map(|y| (at(x, y), 1.0)).collect();
        lp.add_constraint(&row[..], ComparisonOp::Eq, a.p()[x]);
    }
    for y in 0..n2 {
        let col: Vec<_> = (0..n1).map(|x| (at(x, y), 1.0)).collect();
        lp.add_constraint(&col[..], ComparisonOp::Eq, b.p()[y]);
    }
    for x in 0..n1 {
        for y in 0..n2 {
            let (tx, ty) = (a.perm()[x], b.perm()[y]);
            if (tx, ty) != (x, y) {
                lp.add_constraint(
                    &[(at(x, y), 1.0), (at(tx, ty), -1.0)][..],
                    ComparisonOp::Eq,
                    0.0,
                );
            }
        }
    }
    let solution = lp.solve().expect("the product joining is feasible");
    JoiningMatrix::new(n1, n2, vars.iter().map(|&v| solution[v]).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn lp_vertices_are_indecomposable(n1 in 1usize..6, n2 in 1usize..6, seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = FiniteMps::uniform(random_permutation(n1, &mut r)).unwrap();
        let b = FiniteMps::uniform(random_permutation(n2, &mut r)).unwrap();
        let objective: Vec<f64> = (0..n1 * n2).map(|_| rand::Rng::random::<f64>(&mut r) - 0.5).collect();
        let lam = lp_optimal_joining(&a, &b, &objective);
        prop_assert!(validate_joining(&lam, &a, &b).valid());
        prop_assert!(is_indecomposable(&lam, &a, &b).unwrap());
        // the product charges every cell, so any homogeneous direction is free
        if joining_space(&a, &b).dimension > 0 {
            prop_assert!(!is_indecomposable(&JoiningMatrix::product(&a, &b), &a, &b).unwrap());
        }
    }
}

#[test]
fn weight_sequence_properties() {
    let a = fourier_coefficients(64, 4096).unwrap();
    let mut previous = 0.0;
    for k in 0..=64 {
        let s = a.partial_sum(k);
        assert!(s >= previous);
        previous = s;
    }
    for n in 0..=64 {
        assert!(a.get(n) >= -1e-9);
        assert!((a.get(n) - a.get(-n)).abs() <= 1e-12);
    }

    let b = normalize(&a.truncate(4)).unwrap();
    let inner = Window::symmetric(12);
    let outer = inner.dilate(4);
    let conv = convolution_operator(&b, inner, outer).unwrap();
    let ones = Vector::new(vec![Complex64::new(1.0, 0.0); inner.len()]).unwrap();
    let image = conv.apply(&ones).unwrap();
    for (r, t) in outer.iter().enumerate() {
        if t.abs() <= 12 - 4 {
            assert!((image.get(r) - 1.0).norm() <= 1e-12, "{t}");
        }
    }

    let forbidden = FinSet::singleton(0);
    let margins: Vec<f64> = [4, 8, 12]
        .iter()
        .map(|&m| injectivity_margin(&b, m, Some(&forbidden)).unwrap())
        .collect();
    assert!(
        margins.windows(2).all(|w| w[1] <= w[0] + 1e-15),
        "{margins:?}"
    );
}

#[test]
fn unnormalized_weights_are_rejected() {
    let cfg = ModelConfig::default();
    let half = WeightSequence::new(vec![0.25, 0.5, 0.0]).unwrap();
    assert!(markov_j(&half, &cfg).is_err());
}
