use ndarray::{Array1, Array2};
use proptest::prelude::*;

use gqas::ansatz::{k_moment_expand, k_moment_strings, single_excitation_basis, Selection};
use gqas::dynamics::{evolve_nonlinear, IntegratorConfig, Method};
use gqas::hybrid::{HybridDensityMatrix, HybridPureState};
use gqas::linalg::{self, dagger, max_abs_diff, C64};
use gqas::models;
use gqas::overlap::{MeasurementBackend, OverlapEngine};
use gqas::pauli::{PauliString, PauliSum, Phase};
use gqas::statevector::{CircuitSpec, Reference, StateVector};

fn string_on(n: usize) -> impl Strategy<Value = PauliString> {
    (0..1u64 << n, 0..1u64 << n, 0..4u32).prop_map(move |(x, z, k)| PauliString::new(n, x, z, Phase::from_exponent(k)).unwrap())
}

fn triple() -> impl Strategy<Value = (PauliString, PauliString, PauliString)> {
    (1usize..=5).prop_flat_map(|n| (string_on(n), string_on(n), string_on(n)))
}

fn complex_vec(len: usize) -> impl Strategy<Value = Array1<C64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), len).prop_map(|v| v.into_iter().map(|(a, b)| C64::new(a, b)).collect())
}

fn sum_on(n: usize, max_terms: usize) -> impl Strategy<Value = PauliSum> {
    prop::collection::vec((string_on(n), -2.0f64..2.0, -2.0f64..2.0), 1..=max_terms).prop_map(move |terms| {
        PauliSum::from_terms(n, terms.into_iter().map(|(p, a, b)| (C64::new(a, b), p))).unwrap()
    })
}

fn sandwich(states: &[StateVector], op: &Array2<C64>) -> Array2<C64> {
    let images: Vec<Array1<C64>> = states.iter().map(|s| op.dot(s.amplitudes())).collect();
    Array2::from_shape_fn((states.len(), states.len()), |(i, j)| {
        states[i].amplitudes().iter().zip(images[j].iter()).map(|(a, b)| a.conj() * b).sum()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn group_law_matches_dense((a, b, _) in triple()) {
        let dense = a.multiply(&b).unwrap().to_dense().unwrap();
        let expected = a.to_dense().unwrap().dot(&b.to_dense().unwrap());
        prop_assert_eq!(dense, expected);
    }

    #[test]
    fn multiplication_is_associative((a, b, c) in triple()) {
        let left = a.multiply(&b).unwrap().multiply(&c).unwrap();
        let right = a.multiply(&b.multiply(&c).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn dagger_is_an_involution((a, _, _) in triple()) {
        prop_assert_eq!(a.dagger().dagger(), a);
        prop_assert_eq!(a.dagger().to_dense().unwrap(), dagger(&a.to_dense().unwrap().view()));
    }

    #[test]
    fn text_form_round_trips((a, _, _) in triple()) {
        let back: PauliString = a.to_string().parse().unwrap();
        prop_assert_eq!(back, a);
    }

    #[test]
    fn canonicalize_keeps_the_operator(s in (1usize..=4).prop_flat_map(|n| sum_on(n, 8))) {
        let diff = max_abs_diff(&s.canonicalize().to_dense().unwrap().view(), &s.to_dense().unwrap().view());
        prop_assert!(diff < 1e-12, "diff {diff}");
    }

    #[test]
    fn pauli_action_preserves_norm(
        (n, seed, p) in (1usize..=6).prop_flat_map(|n| (Just(n), any::<u64>(), string_on(n)))
    ) {
        let psi = Reference::Circuit(CircuitSpec::random(n, 3, seed).unwrap()).prepare().unwrap();
        prop_assert!((psi.norm_sqr() - 1.0).abs() < 1e-10);
        prop_assert!((psi.apply_pauli(&p).unwrap().norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn reference_state_is_deterministic(n in 1usize..=6, layers in 1usize..=4, seed in any::<u64>()) {
        let a = CircuitSpec::random(n, layers, seed).unwrap();
        prop_assert_eq!(
            Reference::Circuit(a.clone()).prepare().unwrap(),
            Reference::Circuit(a).prepare().unwrap()
        );
    }

    #[test]
    fn apply_sum_is_linear(
        (n, seed, s) in (1usize..=5).prop_flat_map(|n| (Just(n), any::<u64>(), sum_on(n, 6)))
    ) {
        let psi = Reference::Circuit(CircuitSpec::random(n, 2, seed).unwrap()).prepare().unwrap();
        let ours = psi.apply_sum(&s).unwrap();
        let dense = s.to_dense().unwrap().dot(psi.amplitudes());
        let diff = ours.iter().zip(dense.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(diff < 1e-12, "diff {diff}");
    }

    #[test]
    fn k_moment_sets_are_stable_and_nested(
        terms in (2usize..=4).prop_flat_map(|n| prop::collection::vec(string_on(n), 1..=5)),
        k in 0usize..=2,
    ) {
        let first = k_moment_strings(&terms, k).unwrap();
        prop_assert_eq!(&first, &k_moment_strings(&terms, k).unwrap());
        let next = k_moment_strings(&terms, k + 1).unwrap();
        prop_assert!(next.len() >= first.len());
        prop_assert_eq!(&next[..first.len()], &first[..]);
        prop_assert!(next.iter().all(|p| p.phase() == Phase::ONE));
    }

    #[test]
    fn exact_overlaps_match_dense_sandwiches(
        (n, h, seed) in (2usize..=4).prop_flat_map(|n| (Just(n), sum_on(n, 4), any::<u64>())),
        k in 1usize..=2,
        m in 1usize..=16,
    ) {
        let h = h.scaled(C64::new(1.0, 0.0)).sum(&h.dagger()).unwrap().canonicalize();
        prop_assume!(!h.is_empty());
        let reference = Reference::Circuit(CircuitSpec::random(n, 2, seed).unwrap());
        let basis = k_moment_expand(&h.strings(), k, m, reference, Selection::Ordered).unwrap().basis;
        let lindblads = vec![(0.5, models::raising_operator(n, 0).unwrap())];
        let mut engine = OverlapEngine::new(basis.reference(), MeasurementBackend::Exact).unwrap();
        let set = engine.overlap_set(&basis, &h, &lindblads, &[]).unwrap();
        let basis = basis.materialize().unwrap();
        let states = basis.states().unwrap();

        let eye = PauliSum::identity(n).unwrap().to_dense().unwrap();
        let l = lindblads[0].1.to_dense().unwrap();
        let pairs = [
            (&set.e, sandwich(states, &eye)),
            (&set.d, sandwich(states, &h.to_dense().unwrap())),
            (&set.r[0], sandwich(states, &l)),
            (&set.f[0], sandwich(states, &dagger(&l.view()).dot(&l))),
        ];
        for (ours, dense) in pairs {
            let diff = max_abs_diff(&ours.view(), &dense.view());
            prop_assert!(diff < 1e-10, "diff {diff}");
        }
        prop_assert!(linalg::hermiticity_defect(&set.e.view()) < 1e-12);
        prop_assert!(linalg::hermiticity_defect(&set.f[0].view()) < 1e-12);
        let (w, _) = linalg::eigh(&set.e.view()).unwrap();
        prop_assert!(w[0] >= -1e-10, "min eigenvalue {}", w[0]);
    }

    #[test]
    fn purity_is_bounded_and_normalize_fixes_trace(
        seed in any::<u64>(),
        mix in prop::collection::vec((complex_vec(8), 0.0f64..1.0), 1..=4),
    ) {
        let h = models::ising_ladder(4, 1.0, 1.0).unwrap();
        let reference = Reference::Circuit(CircuitSpec::random(4, 2, seed).unwrap());
        let basis = k_moment_expand(&h.strings(), 1, 8, reference, Selection::Ordered).unwrap().basis;
        let mut engine = OverlapEngine::new(basis.reference(), MeasurementBackend::Exact).unwrap();
        let e = engine.gram(&basis).unwrap();
        let dim = basis.len();
        prop_assume!(mix.iter().all(|(a, _)| gqas::hybrid::quadratic_form(&a.slice(ndarray::s![..dim]).to_owned(), &e).re > 1e-6));

        let mut beta = Array2::zeros((dim, dim));
        for (a, weight) in &mix {
            let a = a.slice(ndarray::s![..dim]).to_owned();
            let norm = gqas::hybrid::quadratic_form(&a, &e).re;
            beta += &gqas::oracle::outer(&a, &a).mapv(|z| z * (*weight + 1e-3) / norm);
        }
        let mut state = HybridDensityMatrix::new(beta, basis.id()).unwrap();
        state.normalize(&e).unwrap();
        prop_assert!((state.trace(&e).unwrap() - 1.0).abs() < 1e-12);
        prop_assert!(state.purity(&e).unwrap() <= 1.0 + 1e-8);

        let (a, _) = &mix[0];
        let mut pure = HybridPureState::new(a.slice(ndarray::s![..dim]).to_owned(), basis.id());
        pure.normalize(&e).unwrap();
        let rank_one = HybridDensityMatrix::from_pure(&pure, &e).unwrap();
        prop_assert!((rank_one.purity(&e).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn builders_are_hermitian(j in -2.0f64..2.0, h in -2.0f64..2.0, half in 2usize..=4, periodic in any::<bool>()) {
        let n = 2 * half;
        for op in [
            models::ising_ladder(n, j, h).unwrap(),
            models::transverse_ising_chain(n, j, h, periodic).unwrap(),
            models::dnls_system(n, j, &vec![h; n], 1.0).unwrap().linear_part,
        ] {
            prop_assert!(op.is_hermitian(1e-12));
            prop_assert!(op.terms().iter().all(|(c, p)| c.im == 0.0 && p.phase() == Phase::ONE));
        }
        prop_assert_eq!(models::LadderTopology::new(n).unwrap().edges.len(), 3 * half - 2);
    }

    #[test]
    fn dnls_generator_matches_the_lattice_equation(
        (n, amps, v) in (2usize..=6).prop_flat_map(|n| (Just(n), complex_vec(n), prop::collection::vec(-1.0f64..1.0, n))),
        j in -2.0f64..2.0,
        g in -5.0f64..5.0,
    ) {
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        prop_assume!(norm > 1e-3);
        let eta = amps.mapv(|z| z / norm);

        let basis = single_excitation_basis(n).unwrap();
        let sys = models::dnls_system(n, j, &v, g).unwrap();
        let mut engine = OverlapEngine::new(basis.reference(), MeasurementBackend::Exact).unwrap();
        let e = engine.gram(&basis).unwrap();
        let s: Vec<_> = sys.spec.ops.iter().map(|o| engine.operator_overlaps(&basis, o).unwrap()).collect();

        // One explicit Euler step exposes the right-hand side exactly.
        let dt = 1e-3;
        let cfg = IntegratorConfig { dt, t_final: dt, method: Method::Euler, renormalize: false, output_every: 1, ..Default::default() };
        let traj = evolve_nonlinear(&e, &s, &sys.spec, &HybridPureState::new(eta.clone(), basis.id()), &cfg).unwrap();
        let ours = (traj.last().unwrap().1.alpha() - &eta).mapv(|z| z / dt);

        let i = C64::new(0.0, 1.0);
        let classical = Array1::from_shape_fn(n, |k| {
            let mut hop = C64::new(0.0, 0.0);
            if k > 0 { hop += eta[k - 1]; }
            if k + 1 < n { hop += eta[k + 1]; }
            -i * (-j * hop + v[k] * eta[k] + g * eta[k].norm_sqr() * eta[k])
        });
        let diff = ours.iter().zip(classical.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(diff < 1e-10, "diff {diff}");
    }
}
