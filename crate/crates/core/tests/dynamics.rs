use ndarray::{Array1, Array2};
use ndarray_linalg::{Cholesky, EighInto, Inverse, UPLO};

use gqas::ansatz::{k_moment_expand, AnsatzBasis, Selection};
use gqas::dynamics::*;
use gqas::hybrid::{HybridDensityMatrix, HybridPureState};
use gqas::linalg::{c, dagger, max_abs_diff, trace_of_product, C64};
use gqas::models;
use gqas::oracle::{self, DenseState};
use gqas::overlap::{MeasurementBackend, OverlapEngine, OverlapSet};
use gqas::pauli::PauliSum;
use gqas::statevector::{CircuitSpec, Reference, StateVector};

/// Full 16-state basis for a 4-qubit ladder on a random reference.
fn full_ladder_basis(seed: u64) -> AnsatzBasis {
    let h = models::ising_ladder(4, 1.0, 1.0).unwrap();
    let reference = Reference::Circuit(CircuitSpec::random(4, 4, seed).unwrap());
    let basis = k_moment_expand(&h.strings(), 3, 16, reference, Selection::Ordered).unwrap().basis;
    assert_eq!(basis.len(), 16);
    basis
}

fn measure(basis: &AnsatzBasis, h: &PauliSum, lindblads: &[(f64, PauliSum)], extra: &[PauliSum]) -> OverlapSet {
    let mut engine = OverlapEngine::new(basis.reference(), MeasurementBackend::Exact).unwrap();
    engine.overlap_set(basis, h, lindblads, extra).unwrap()
}

fn zero_state_in(basis: &AnsatzBasis, set: &OverlapSet) -> HybridDensityMatrix {
    let g = measure(basis, &models::iqae_init_hamiltonian(4).unwrap(), &[], &[]).d;
    let (alpha, energy) = iqae_ground_state(&g, &set.e, 1e-8, basis.id()).unwrap();
    assert!((energy + 4.0).abs() < 1e-8, "{energy}");
    HybridDensityMatrix::from_pure(&alpha, &set.e).unwrap()
}

fn full_rank(e: &Array2<C64>) -> bool {
    SpectralPinv::new(e, 1e-8).unwrap().rank() == e.nrows()
}

#[test]
fn closed_evolution_conserves_energy_and_stays_positive() {
    let basis = full_ladder_basis(1);
    let h = models::ising_ladder(4, 1.0, 1.0).unwrap();
    let set = measure(&basis, &h, &[], &[]);
    assert!(full_rank(&set.e));
    let beta0 = zero_state_in(&basis, &set);
    let cfg = IntegratorConfig {
        t_final: 6.0,
        output_every: 200,
        ..Default::default()
    };
    let traj = evolve_lindblad(&set, &beta0, &[], &cfg).unwrap();
    let dense = basis.clone().materialize().unwrap();
    let e0 = beta0.expectation(&set.d).unwrap().re;
    for (t, beta) in traj.iter() {
        assert!((beta.expectation(&set.d).unwrap().re - e0).abs() < 1e-6, "energy drift at t = {t}");
        assert!((beta.trace(&set.e).unwrap() - 1.0).abs() < 1e-12);
        let (w, _) = gqas::linalg::eigh(&beta.densify(&dense).unwrap().view()).unwrap();
        assert!(w[0] >= -1e-6, "negative eigenvalue {} at t = {t}", w[0]);
    }
}

#[test]
fn generalized_evolver_reduces_to_the_unitary_part() {
    let basis = full_ladder_basis(2);
    let h = models::ising_ladder(4, 1.0, 0.7).unwrap();
    let set = measure(&basis, &h, &[], &[]);
    let beta0 = zero_state_in(&basis, &set);
    let (w, v) = gqas::linalg::eigh(&beta0.beta().view()).unwrap();
    let top = v.column(w.len() - 1).mapv(|z| z * w[w.len() - 1].sqrt());
    let alpha0 = HybridPureState::new(top, basis.id());

    let cfg = IntegratorConfig {
        t_final: 2.0,
        output_every: 100,
        ..Default::default()
    };
    let e = set.e.clone();
    let d = set.d.clone();
    let generalized = evolve_generalized(
        |_t| Ok(e.clone()),
        |alpha: &Array1<C64>, _t| Ok(d.dot(alpha).mapv(|z| z * C64::new(0.0, -1.0))),
        &alpha0,
        Some(&set.e),
        &cfg,
    )
    .unwrap();
    let lindblad = evolve_lindblad(&set, &alpha0.to_density(), &[], &cfg).unwrap();
    for ((_, a), (_, b)) in generalized.iter().zip(lindblad.iter()) {
        let diff = max_abs_diff(&a.to_density().beta().view(), &b.beta().view());
        assert!(diff < 1e-8, "{diff}");
    }
}

#[test]
fn imaginary_time_cools_monotonically_to_the_gibbs_curve() {
    let h = models::transverse_ising_chain(4, 1.0, 1.0, true).unwrap();
    let reference = Reference::Circuit(CircuitSpec::random(4, 4, 0).unwrap());
    let basis = k_moment_expand(&h.strings(), 3, 16, reference, Selection::Ordered).unwrap().basis;
    let set = measure(&basis, &h, &[], &[]);
    assert!(full_rank(&set.e));
    let beta0 = totally_mixed_init(&set.e, 1e-8, basis.id()).unwrap();
    let cfg = IntegratorConfig {
        t_final: 3.0,
        output_every: 1,
        ..Default::default()
    };
    let traj = evolve_imaginary(&set.e, &set.d, &beta0, &cfg).unwrap();
    let energies: Vec<f64> = traj.states.iter().map(|b| b.expectation(&set.d).unwrap().re).collect();
    assert!(energies.windows(2).all(|w| w[1] <= w[0] + 1e-8));
    for (tau, energy) in traj.times.iter().zip(&energies).step_by(250) {
        let (_, exact) = oracle::exact_gibbs(&h, temperature_at(*tau)).unwrap();
        assert!((energy - exact).abs() < 1e-6, "τ = {tau}: {energy} vs {exact}");
    }
}

/// Lowest generalized eigenvalue of `(G, E)` by Cholesky whitening.
fn cholesky_pencil_minimum(g: &Array2<C64>, e: &Array2<C64>) -> f64 {
    let l = e.cholesky(UPLO::Lower).unwrap();
    let li = l.inv().unwrap();
    let whitened = li.dot(g).dot(&dagger(&li.view()));
    let herm = (&whitened + &dagger(&whitened.view())).mapv(|z| z * 0.5);
    let (w, _) = herm.eigh_into(UPLO::Lower).unwrap();
    w[0]
}

#[test]
fn iqae_matches_a_cholesky_pencil_on_a_regular_basis() {
    let h = models::transverse_ising_chain(3, 1.0, 0.8, false).unwrap();
    let reference = Reference::Circuit(CircuitSpec::random(3, 3, 5).unwrap());
    let basis = k_moment_expand(&h.strings(), 1, 4, reference, Selection::Ordered).unwrap().basis;
    let set = measure(&basis, &h, &[], &[]);
    let (state, value) = iqae_ground_state(&set.d, &set.e, 1e-8, basis.id()).unwrap();
    assert!((value - cholesky_pencil_minimum(&set.d, &set.e)).abs() < 1e-10);
    assert!((state.norm(&set.e).unwrap() - 1.0).abs() < 1e-12);
    assert!((state.expectation(&set.d).unwrap().re - value).abs() < 1e-10);
}

#[test]
fn iqae_handles_a_degenerate_pencil() {
    // I and Z_0 give the same state on |00⟩, so E has a null direction.
    let reference = Reference::Zero { n_qubits: 2 };
    let basis = AnsatzBasis::new(reference, ["II", "ZI", "XI"].map(|s| s.parse().unwrap()).to_vec()).unwrap();
    let g = models::iqae_init_hamiltonian(2).unwrap();
    let set = measure(&basis, &g, &[], &[]);
    assert_eq!(SpectralPinv::new(&set.e, 1e-8).unwrap().rank(), 2);

    let distinct = AnsatzBasis::new(Reference::Zero { n_qubits: 2 }, ["II", "XI"].map(|s| s.parse().unwrap()).to_vec()).unwrap();
    let reduced = measure(&distinct, &g, &[], &[]);
    let expected = cholesky_pencil_minimum(&reduced.d, &reduced.e);
    let (state, value) = iqae_ground_state(&set.d, &set.e, 1e-8, basis.id()).unwrap();
    assert!((value - expected).abs() < 1e-10);
    assert!((value + 2.0).abs() < 1e-12);
    let v = state.densify(&basis.materialize().unwrap()).unwrap();
    assert!((v[0].norm() - 1.0).abs() < 1e-10);
}

#[test]
fn pumped_ladder_relaxes_to_all_excited() {
    let basis = full_ladder_basis(3);
    let h = models::ising_ladder(4, 1.0, 0.0).unwrap();
    let lindblads = models::raising_dissipators(4, 1.0).unwrap();
    let z = models::total_z(4).unwrap();
    let set = measure(&basis, &h, &lindblads, &[z.clone()]);
    let beta0 = zero_state_in(&basis, &set);
    let cfg = IntegratorConfig {
        t_final: 10.0,
        output_every: 1000,
        ..Default::default()
    };
    let traj = evolve_lindblad(&set, &beta0, &set.rates, &cfg).unwrap();
    let rho0 = DenseState::Vector(StateVector::zero(4).unwrap().into_amplitudes());
    let exact = oracle::exact_lindblad(&h, &lindblads, &rho0, cfg.dt, cfg.t_final, cfg.output_every).unwrap();
    let z_dense = z.to_dense().unwrap();
    for ((t, beta), rho) in traj.iter().zip(&exact.states) {
        let ours = beta.expectation(&set.s[0]).unwrap().re;
        let theirs = trace_of_product(&z_dense.view(), &rho.view()).re;
        assert!((ours - theirs).abs() < 1e-6, "t = {t}");
        // Each site relaxes independently: ⟨Z⟩ = 2e^{-t} - 1.
        assert!((ours - 4.0 * (2.0 * (-t).exp() - 1.0)).abs() < 1e-6, "t = {t}");
    }
    assert!((traj.last().unwrap().1.expectation(&set.s[0]).unwrap().re + 4.0).abs() < 1e-3);
}

#[test]
fn oracles_converge_in_dt() {
    let h = models::ising_ladder(4, 1.0, 1.0).unwrap();
    let lindblads = models::raising_dissipators(4, 1.0).unwrap();
    let rho0 = DenseState::Vector(StateVector::zero(4).unwrap().into_amplitudes());
    let zz = models::ladder_zz_correlator(4).unwrap().to_dense().unwrap();
    let end = |dt: f64| {
        let traj = oracle::exact_lindblad(&h, &lindblads, &rho0, dt, 1.0, 10_000).unwrap();
        trace_of_product(&zz.view(), &traj.last().unwrap().1.view()).re
    };
    assert!((end(1e-3) - end(5e-4)).abs() < 1e-8);

    let eta0 = Array1::from(models::dnls_initial_amplitudes(6));
    let n_even = |dt: f64| {
        let traj = oracle::exact_dnls(&eta0, 1.0, &[0.0; 6], 2.0, dt, 2.0, 100_000).unwrap();
        oracle::odd_site_density(traj.last().unwrap().1)
    };
    assert!((n_even(1e-3) - n_even(5e-4)).abs() < 1e-8);
}

#[test]
fn dnls_pipeline_tracks_the_lattice_oracle_with_nonlinearity() {
    let n = 6;
    let basis = gqas::ansatz::single_excitation_basis(n).unwrap();
    let sys = models::dnls_system(n, 1.0, &[0.3, -0.2, 0.0, 0.5, 0.1, -0.4], 2.0).unwrap();
    let mut engine = OverlapEngine::new(basis.reference(), MeasurementBackend::Exact).unwrap();
    let e = engine.gram(&basis).unwrap();
    let s: Vec<_> = sys.spec.ops.iter().map(|o| engine.operator_overlaps(&basis, o).unwrap()).collect();
    let eta0 = Array1::from(models::dnls_initial_amplitudes(n));
    let cfg = IntegratorConfig {
        t_final: 3.0,
        output_every: 100,
        ..Default::default()
    };
    let traj = evolve_nonlinear(&e, &s, &sys.spec, &HybridPureState::new(eta0.clone(), basis.id()), &cfg).unwrap();
    let exact = oracle::exact_dnls(&eta0, 1.0, &[0.3, -0.2, 0.0, 0.5, 0.1, -0.4], 2.0, cfg.dt, cfg.t_final, cfg.output_every).unwrap();
    for ((_, a), eta) in traj.iter().zip(&exact.states) {
        let diff = a.alpha().iter().zip(eta.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-10, "{diff}");
    }
}

#[test]
fn matrix_inversion_solves_a_positive_system() {
    let m_op = PauliSum::from_real_terms(2, &[(2.0, "II"), (0.5, "XZ"), (-0.4, "YY"), (0.3, "ZX")]).unwrap();
    let reference = Reference::Circuit(CircuitSpec::random(2, 2, 3).unwrap());
    let inv = MatrixInversion::new(&m_op, 10.0).unwrap();
    let basis = k_moment_expand(&m_op.strings(), 2, 16, reference.clone(), Selection::Ordered).unwrap().basis;
    let mut engine = OverlapEngine::new(&reference, MeasurementBackend::Exact).unwrap();
    let blocks = inv.measure(&mut engine, &basis).unwrap();
    let mut a0 = Array1::zeros(basis.len());
    a0[0] = c(1.0);
    let cfg = IntegratorConfig {
        output_every: 1000,
        renormalize: false,
        ..Default::default()
    };
    let traj = inv.evolve(&blocks, &HybridPureState::new(a0, basis.id()), &cfg).unwrap();
    let (t, alpha) = traj.last().unwrap();
    assert!((t - 10.0).abs() < 1e-12);
    let v = alpha.densify(&basis.materialize().unwrap()).unwrap();
    let x = oracle::dense_solve(&m_op, &reference.prepare().unwrap().into_amplitudes()).unwrap();
    let diff = v.iter().zip(x.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(diff < 1e-8, "{diff}");
}

#[test]
fn collapse_is_reported() {
    let basis = AnsatzBasis::new(Reference::Zero { n_qubits: 1 }, vec!["I".parse().unwrap()]).unwrap();
    let set = measure(&basis, &PauliSum::zero(1).unwrap(), &[], &[]);
    let beta0 = HybridDensityMatrix::new(Array2::zeros((1, 1)), basis.id()).unwrap();
    let err = evolve_lindblad(&set, &beta0, &[], &IntegratorConfig { t_final: 0.01, ..Default::default() }).unwrap_err();
    assert!(err.is_numerical(), "{err}");
}
