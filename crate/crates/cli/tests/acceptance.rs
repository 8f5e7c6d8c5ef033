//! Acceptance suite. Every test writes one `PASS`/`FAIL` line to the real
//! stdout (bypassing the test harness capture), then asserts.

use std::io::Write;
use std::time::Instant;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gqas::ansatz::AnsatzBasis;
use gqas::dynamics::{evolve_lindblad, IntegratorConfig};
use gqas::hybrid::HybridDensityMatrix;
use gqas::linalg::{c, dagger, max_abs_diff, C64};
use gqas::models;
use gqas::oracle::{self, DensePropagator, DenseState};
use gqas::overlap::{MeasurementBackend, OverlapEngine};
use gqas::pauli::{PauliString, PauliSum, Phase};
use gqas::statevector::Reference;
use gqas_cli::config::BackendKind;
use gqas_cli::experiment::{self, InitialState, Outcome, Prepared};
use gqas_cli::ExperimentConfig;

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    writeln!(out, "acceptance {id:>2} {verdict} {name}: {detail}").unwrap();
    out.flush().unwrap();
}

fn config(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml_str(text).unwrap()
}

fn pipeline(cfg: &ExperimentConfig) -> (Prepared, gqas::overlap::OverlapSet, Outcome) {
    let prep = experiment::prepare(cfg).unwrap();
    let set = experiment::measure(cfg, &prep).unwrap();
    let init = experiment::default_initial_state(cfg, &prep, &set).unwrap();
    let outcome = experiment::integrate(cfg, &prep, &set, init).unwrap().unwrap();
    (prep, set, outcome)
}

fn random_string(rng: &mut ChaCha8Rng, n: usize) -> PauliString {
    let span = 1u64 << n;
    let phase = Phase::from_exponent(rng.gen_range(0..4));
    PauliString::new(n, rng.gen_range(0..span), rng.gen_range(0..span), phase).unwrap()
}

#[test]
fn c01_pauli_algebra_vs_dense() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let n = rng.gen_range(1..=5);
        let (a, b, d) = (random_string(&mut rng, n), random_string(&mut rng, n), random_string(&mut rng, n));
        let (da, db, dd) = (a.to_dense().unwrap(), b.to_dense().unwrap(), d.to_dense().unwrap());

        let ab = a.multiply(&b).unwrap();
        worst = worst.max(max_abs_diff(&ab.to_dense().unwrap().view(), &da.dot(&db).view()));
        worst = worst.max(max_abs_diff(&a.dagger().to_dense().unwrap().view(), &dagger(&da.view()).view()));

        let left = ab.multiply(&d).unwrap();
        let right = a.multiply(&b.multiply(&d).unwrap()).unwrap();
        if left != right {
            worst = f64::INFINITY;
        }
        worst = worst.max(max_abs_diff(&left.to_dense().unwrap().view(), &da.dot(&db).dot(&dd).view()));
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst == 0.0 && secs < 5.0;
    report(1, "pauli algebra", pass, &format!("max |dense diff| {worst:.3e} over 500 cases, {secs:.2} s"));
    assert!(pass);
}

fn sandwich(states: &[Array1<C64>], op: &Array2<C64>) -> Array2<C64> {
    let images: Vec<Array1<C64>> = states.iter().map(|s| op.dot(s)).collect();
    Array2::from_shape_fn((states.len(), states.len()), |(i, j)| {
        states[i].iter().zip(images[j].iter()).map(|(a, b)| a.conj() * b).sum()
    })
}

#[test]
fn c02_overlap_exactness() {
    let start = Instant::now();
    let cfg = config("experiment = \"open_ising\"\nn_qubits = 6\nK = 2\nM = 64\ngamma = 1.0\n");
    let prep = experiment::prepare(&cfg).unwrap();
    let set = experiment::measure(&cfg, &prep).unwrap();
    let basis = prep.basis.clone().materialize().unwrap();
    let states: Vec<Array1<C64>> = basis.states().unwrap().iter().map(|s| s.amplitudes().clone()).collect();

    let identity = PauliSum::identity(6).unwrap().to_dense().unwrap();
    let mut worst = max_abs_diff(&set.e.view(), &sandwich(&states, &identity).view());
    worst = worst.max(max_abs_diff(&set.d.view(), &sandwich(&states, &prep.hamiltonian.to_dense().unwrap()).view()));
    for (k, (_, l)) in prep.lindblads.iter().enumerate() {
        let dl = l.to_dense().unwrap();
        worst = worst.max(max_abs_diff(&set.r[k].view(), &sandwich(&states, &dl).view()));
        let ldl = dagger(&dl.view()).dot(&dl);
        worst = worst.max(max_abs_diff(&set.f[k].view(), &sandwich(&states, &ldl).view()));
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = set.e.nrows() == 64 && prep.lindblads.len() == 6 && worst < 1e-10 && secs < 60.0;
    report(2, "overlap exactness", pass, &format!("max |Δ| {worst:.3e} over E, D, 6 R, 6 F at M = {}, {secs:.1} s", set.e.nrows()));
    assert!(pass);
}

fn densify(basis: &AnsatzBasis, beta: &HybridDensityMatrix) -> Array2<C64> {
    beta.densify(basis).unwrap()
}

#[test]
fn c03_closed_ladder_fidelity() {
    let cfg = config("experiment = \"open_ising\"\nn_qubits = 6\nlayers = 6\nJ = 1.0\nh = 1.0\nM = 64\ngamma = 0.0\nt_final = 6.0\ndt = 1e-3\n");
    let prep = experiment::prepare(&cfg).unwrap();
    let set = experiment::measure(&cfg, &prep).unwrap();
    let Some(InitialState::Density(beta0)) = experiment::default_initial_state(&cfg, &prep, &set).unwrap() else {
        panic!("open_ising starts from a density matrix");
    };
    let traj = evolve_lindblad(&set, &beta0, &set.rates, &experiment::integrator(&cfg)).unwrap();
    let basis = prep.basis.clone().materialize().unwrap();
    let prop = DensePropagator::new(&prep.hamiltonian).unwrap();
    let psi0 = DenseState::Vector(gqas::statevector::StateVector::zero(6).unwrap().into_amplitudes());
    let mut min_f: f64 = 1.0;
    for (t, beta) in traj.iter() {
        let exact = prop.evolve(&psi0, t);
        let f = oracle::uhlmann_fidelity(&DenseState::Density(densify(&basis, beta)), &exact).unwrap();
        min_f = min_f.min(f);
    }
    let pass = min_f >= 0.999 && traj.len() == 61;
    report(3, "closed ladder", pass, &format!("min fidelity {min_f:.9} over {} output times in [0, 6]", traj.len()));
    assert!(pass);
}

#[test]
fn c04_open_ladder_fidelity_and_m_trend() {
    let mut end = Vec::new();
    let mut min_at_64 = f64::NAN;
    for m in [8, 16, 32, 64] {
        let cfg = config(&format!(
            "experiment = \"open_ising\"\nn_qubits = 6\nM = {m}\ngamma = 1.0\nt_final = 6.0\nwith_oracle = true\n"
        ));
        let (_, _, out) = pipeline(&cfg);
        let fid = out.table.column("fidelity").unwrap();
        end.push(*fid.last().unwrap());
        if m == 64 {
            min_at_64 = fid.iter().copied().fold(f64::INFINITY, f64::min);
        }
    }
    let trend = end.windows(2).all(|w| w[1] >= w[0]);
    let pass = min_at_64 >= 0.999 && trend;
    let ends: Vec<String> = end.iter().map(|f| format!("{f:.4}")).collect();
    report(
        4,
        "open ladder",
        pass,
        &format!("min fidelity at M = 64 {min_at_64:.9}; t = 6 fidelity for M = 8, 16, 32, 64: {}", ends.join(", ")),
    );
    assert!(pass);
}

/// One qubit, basis {|0⟩, |1⟩}, no Hamiltonian, pumped by σ⁺ at rate 1.
fn pump(dt: f64, output_every: usize) -> Vec<(f64, f64)> {
    let basis = AnsatzBasis::new(Reference::Zero { n_qubits: 1 }, vec!["I".parse().unwrap(), "X".parse().unwrap()]).unwrap();
    let lindblads = vec![(1.0, models::raising_operator(1, 0).unwrap())];
    let mut engine = OverlapEngine::new(basis.reference(), MeasurementBackend::Exact).unwrap();
    let set = engine
        .overlap_set(&basis, &PauliSum::zero(1).unwrap(), &lindblads, &[models::number_operator(1, 0).unwrap()])
        .unwrap();
    let mut beta = Array2::zeros((2, 2));
    beta[[0, 0]] = c(1.0);
    let beta0 = HybridDensityMatrix::new(beta, basis.id()).unwrap();
    let cfg = IntegratorConfig {
        dt,
        t_final: 5.0,
        output_every,
        ..Default::default()
    };
    let traj = evolve_lindblad(&set, &beta0, &set.rates, &cfg).unwrap();
    traj.iter().map(|(t, b)| (t, b.expectation(&set.s[0]).unwrap().re)).collect()
}

#[test]
fn c05_single_qubit_pump() {
    let samples = pump(1e-3, 10);
    let worst = samples
        .iter()
        .map(|(t, n)| (n - (1.0 - (-t).exp())).abs())
        .fold(0.0, f64::max);
    let pass = worst < 1e-6 && (samples.last().unwrap().0 - 5.0).abs() < 1e-12;
    report(5, "single-qubit pump", pass, &format!("max |⟨n⟩ - (1 - e^-t)| {worst:.3e} over {} times in [0, 5]", samples.len()));
    assert!(pass);
}

#[test]
fn c06_gibbs_energy() {
    let cfg = config(
        "experiment = \"gibbs\"\nn_qubits = 6\nJ = 1.0\nh = 1.0\nperiodic = true\nM = 64\nt_final = 5.0\nwith_oracle = true\n",
    );
    let (prep, _, out) = pipeline(&cfg);
    let tau = out.table.column("tau").unwrap();
    let energy = out.table.column("energy").unwrap();
    let exact = out.table.column("exact_energy").unwrap();
    let ground = oracle::ground_energy(&prep.hamiltonian).unwrap();

    let tracking = tau
        .iter()
        .zip(energy.iter().zip(&exact))
        .filter(|(t, _)| **t <= 3.0 + 1e-9)
        .map(|(_, (a, b))| (a - b).abs())
        .fold(0.0, f64::max);
    let start = energy[0];
    let end = *energy.last().unwrap();
    let monotone = energy.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    let checks = [tracking < 1e-3, start.abs() < 1e-12, (end - ground).abs() < 1e-2, monotone];
    let pass = checks.iter().all(|&x| x);
    report(
        6,
        "gibbs",
        pass,
        &format!(
            "τ ≤ 3 max |Δ| {tracking:.3e} [{}]; ⟨H⟩(0) {start:.3e} [{}]; ⟨H⟩(5) {end:.6} vs ground {ground:.6}, gap {:.4} [{}]; non-increasing [{}]",
            ok(checks[0]),
            ok(checks[1]),
            (end - ground).abs(),
            ok(checks[2]),
            ok(checks[3])
        ),
    );
    assert!(pass);
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "fail"
    }
}

#[test]
fn c07_dnls() {
    let mut maxima = Vec::new();
    let mut oracle_gap = f64::NAN;
    let mut norm_dev: f64 = 0.0;
    for g in [0.0, 1.0, 2.0, 5.0] {
        let cfg = config(&format!(
            "experiment = \"dnls\"\nn_qubits = 8\nJ = 1.0\ng = {g:?}\nt_final = 10.0\noutput_every = 10\nwith_oracle = {}\n",
            g == 0.0
        ));
        let (_, _, out) = pipeline(&cfg);
        let n_even = out.table.column("n_even").unwrap();
        if g == 0.0 {
            let exact = out.table.column("exact_n_even").unwrap();
            oracle_gap = n_even.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        }
        norm_dev = out.table.column("norm").unwrap().iter().map(|x| (x - 1.0).abs()).fold(norm_dev, f64::max);
        maxima.push(n_even.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    }
    let ordered = maxima.windows(2).all(|w| w[1] < w[0]);
    let checks = [oracle_gap < 1e-6, ordered, norm_dev < 1e-8];
    let pass = checks.iter().all(|&x| x);
    let shown: Vec<String> = maxima.iter().map(|m| format!("{m:.5}")).collect();
    report(
        7,
        "dnls",
        pass,
        &format!(
            "g = 0 max |Δ n_even| {oracle_gap:.3e} [{}]; max n_even for g = 0, 1, 2, 5: {} [{}]; max |norm - 1| {norm_dev:.3e} [{}]",
            ok(checks[0]),
            shown.join(", "),
            ok(checks[1]),
            ok(checks[2])
        ),
    );
    assert!(pass);
}

#[test]
fn c08_matrix_inversion() {
    let cfg = config("experiment = \"matrix_inverse\"\nn_qubits = 2\nt_final = 10.0\ndt = 1e-3\nwith_oracle = true\n");
    let prep = experiment::prepare(&cfg).unwrap();
    let set = experiment::measure(&cfg, &prep).unwrap();
    let Some(InitialState::Pure(alpha0)) = experiment::default_initial_state(&cfg, &prep, &set).unwrap() else {
        panic!("matrix_inverse starts from a pure state");
    };
    let inv = prep.inversion.as_ref().unwrap();
    let traj = inv.evolve(set.v_blocks.as_ref().unwrap(), &alpha0, &experiment::integrator(&cfg)).unwrap();
    let (t_end, alpha) = traj.last().unwrap();

    let m_dense = prep.hamiltonian.to_dense().unwrap();
    let (w, _) = gqas::linalg::eigh(&m_dense.view()).unwrap();
    let basis = prep.basis.clone().materialize().unwrap();
    let v = alpha.densify(&basis).unwrap();
    let v0 = prep.basis.reference().prepare().unwrap().into_amplitudes();
    let mv = m_dense.dot(&v);
    let best: C64 = v0.iter().zip(mv.iter()).map(|(a, b)| a.conj() * b).sum();
    let norm = |x: &Array1<C64>| x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let residual = norm(&(&mv - &v0.mapv(|z| z * best))) / norm(&v0.mapv(|z| z * best));

    let x = oracle::dense_solve(&prep.hamiltonian, &v0).unwrap();
    let cos = x.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum::<C64>().norm() / (norm(&x) * norm(&v));

    let pass = prep.hamiltonian.len() == 4 && w[0] > 0.0 && (t_end - 10.0).abs() < 1e-12 && residual < 1e-3;
    report(
        8,
        "matrix inversion",
        pass,
        &format!(
            "{} terms, λ_min {:.4}; relative residual {residual:.3e} at T = {t_end}; |cos| with dense solve {cos:.12}",
            prep.hamiltonian.len(),
            w[0]
        ),
    );
    assert!(pass);
}

#[test]
fn c09_iqae_initial_state() {
    let cfg = config("experiment = \"open_ising\"\nn_qubits = 6\nM = 64\n");
    let prep = experiment::prepare(&cfg).unwrap();
    let set = experiment::measure(&cfg, &prep).unwrap();
    let Some(InitialState::Density(beta0)) = experiment::default_initial_state(&cfg, &prep, &set).unwrap() else {
        panic!("open_ising starts from a density matrix");
    };
    let rho = beta0.densify(&prep.basis.clone().materialize().unwrap()).unwrap();
    let overlap = rho[[0, 0]].re;
    let pass = overlap >= 0.999;
    report(9, "iqae initialization", pass, &format!("⟨0…0|ρ(0)|0…0⟩ = {overlap:.12}"));
    assert!(pass);
}

/// Mean over all entries of E and D of the sample standard deviation across seeds.
fn mean_entry_std(cfg: &ExperimentConfig, prep: &Prepared, shots: u64, seeds: u64) -> f64 {
    let dim = prep.basis.len();
    let mut sum = vec![Array2::<C64>::zeros((dim, dim)); 2];
    let mut sum_sq = vec![Array2::<f64>::zeros((dim, dim)); 2];
    for seed in 0..seeds {
        let run = ExperimentConfig {
            backend: BackendKind::Sampled,
            shots,
            shot_seed: seed,
            ..cfg.clone()
        };
        let set = experiment::measure(&run, prep).unwrap();
        for (k, m) in [&set.e, &set.d].into_iter().enumerate() {
            sum[k] += m;
            sum_sq[k] += &m.mapv(|z| z.norm_sqr());
        }
    }
    let n = seeds as f64;
    let mut total = 0.0;
    let mut count = 0usize;
    for k in 0..2 {
        for (s, q) in sum[k].iter().zip(sum_sq[k].iter()) {
            let var = (q - s.norm_sqr() / n) / (n - 1.0);
            total += var.max(0.0).sqrt();
            count += 1;
        }
    }
    total / count as f64
}

#[test]
fn c10_shot_noise_scaling() {
    let cfg = config("experiment = \"overlaps_only\"\nn_qubits = 6\nM = 64\n");
    let prep = experiment::prepare(&cfg).unwrap();
    let stds: Vec<f64> = [100, 1_000, 10_000].iter().map(|&s| mean_entry_std(&cfg, &prep, s, 100)).collect();
    let target = 10f64.sqrt();
    let ratios = [stds[0] / stds[1], stds[1] / stds[2]];
    let pass = ratios.iter().all(|r| *r >= target / 1.5 && *r <= target * 1.5);
    report(
        10,
        "shot noise",
        pass,
        &format!(
            "mean entry std {:.3e}, {:.3e}, {:.3e} for 1e2, 1e3, 1e4 shots; ratios {:.3}, {:.3} vs √10 = {target:.3}",
            stds[0], stds[1], stds[2], ratios[0], ratios[1]
        ),
    );
    assert!(pass);
}

#[test]
fn c11_rk4_order() {
    let exact = 1.0 - (-5.0f64).exp();
    let err = |dt: f64| (pump(dt, 1).last().unwrap().1 - exact).abs();
    let (coarse, fine) = (err(0.1), err(0.05));
    let ratio = coarse / fine;
    let pass = ratio >= 12.0;
    report(11, "rk4 order", pass, &format!("end error {coarse:.3e} at dt 0.1, {fine:.3e} at dt 0.05, ratio {ratio:.2}"));
    assert!(pass);
}
