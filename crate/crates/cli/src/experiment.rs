//! The three stages of a run: basis, overlaps, classical integration.

use std::path::Path;

use log::{info, warn};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gqas::ansatz::{k_moment_expand, single_excitation_basis, AnsatzBasis, Selection};
use gqas::dynamics::{
    evolve_imaginary, evolve_lindblad, evolve_nonlinear, iqae_ground_state, temperature_at,
    totally_mixed_init, IntegratorConfig, MatrixInversion, Trajectory,
};
use gqas::hybrid::{HybridDensityMatrix, HybridPureState};
use gqas::linalg::{c, C64, ZERO};
use gqas::models::{self, DnlsSystem};
use gqas::oracle::{self, DenseState};
use gqas::overlap::{MeasurementBackend, OverlapEngine, OverlapSet};
use gqas::pauli::{PauliString, PauliSum, Phase};
use gqas::statevector::{CircuitSpec, Reference, StateVector};

use crate::config::{BackendKind, ExperimentConfig, ExperimentKind, ModelKind, SelectionKind};
use crate::error::CliError;

type Result<T> = std::result::Result<T, CliError>;

/// Step 1 output: the basis plus every operator the run needs.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub basis: AnsatzBasis,
    /// Distinct strings the expansion offered before truncation.
    pub available: usize,
    pub hamiltonian: PauliSum,
    pub lindblads: Vec<(f64, PauliSum)>,
    /// Named observables; their overlaps follow the generator ops in `OverlapSet::s`.
    pub observables: Vec<(String, PauliSum)>,
    pub dnls: Option<DnlsSystem>,
    pub inversion: Option<MatrixInversion>,
}

impl Prepared {
    /// Number of leading `S` matrices that belong to the nonlinear generator.
    pub fn generator_ops(&self) -> usize {
        self.dnls.as_ref().map_or(0, |d| d.spec.ops.len())
    }
}

/// One CSV table.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

/// Condensed result of a run, used by sweeps and the manifest.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct RunSummary {
    pub primary: String,
    pub end_value: f64,
    pub max_value: f64,
    pub min_fidelity: Option<f64>,
    pub mean_fidelity: Option<f64>,
    pub end_fidelity: Option<f64>,
    /// Entrywise RMS deviation of sampled overlaps from exact ones.
    pub rms_error: Option<f64>,
}

pub fn reference(cfg: &ExperimentConfig) -> Result<Reference> {
    Ok(match cfg.experiment {
        ExperimentKind::Dnls => Reference::Zero { n_qubits: cfg.n_qubits },
        _ if cfg.model == Some(ModelKind::Dnls) => Reference::Zero { n_qubits: cfg.n_qubits },
        _ => Reference::Circuit(CircuitSpec::random(cfg.n_qubits, cfg.layers, cfg.circuit_seed)?),
    })
}

pub fn backend(cfg: &ExperimentConfig) -> MeasurementBackend {
    match cfg.backend {
        BackendKind::Exact => MeasurementBackend::Exact,
        BackendKind::Sampled => MeasurementBackend::Sampled {
            shots: cfg.shots,
            seed: cfg.shot_seed,
        },
    }
}

pub fn integrator(cfg: &ExperimentConfig) -> IntegratorConfig {
    IntegratorConfig {
        dt: cfg.dt,
        t_final: cfg.t_final,
        pinv_cutoff: cfg.pinv_cutoff,
        output_every: cfg.output_every,
        renormalize: cfg.experiment != ExperimentKind::MatrixInverse,
        ..Default::default()
    }
}

/// Identity plus three distinct random strings with a dominant identity
/// coefficient, so the operator is Hermitian and positive definite.
pub fn random_positive_operator(n: usize, seed: u64) -> Result<PauliSum> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let span = 1u64 << n;
    let mut strings: Vec<PauliString> = Vec::new();
    while strings.len() < 3 {
        let x = rng.gen_range(0..span);
        let z = rng.gen_range(0..span);
        let p = PauliString::new(n, x, z, Phase::ONE)?;
        if !p.is_identity() && !strings.iter().any(|q| q.key() == p.key()) {
            strings.push(p);
        }
    }
    let coeffs: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let shift = coeffs.iter().map(|a: &f64| a.abs()).sum::<f64>() + rng.gen_range(0.5..1.5);
    let mut op = PauliSum::zero(n)?;
    op.push(c(shift), PauliString::identity(n)?)?;
    for (a, p) in coeffs.into_iter().zip(strings) {
        op.push(c(a), p)?;
    }
    Ok(op)
}

fn model_hamiltonian(cfg: &ExperimentConfig) -> Result<PauliSum> {
    Ok(match cfg.model {
        Some(ModelKind::IsingLadder) => models::ising_ladder(cfg.n_qubits, cfg.j, cfg.h)?,
        Some(ModelKind::Tfim) => models::transverse_ising_chain(cfg.n_qubits, cfg.j, cfg.h, cfg.periodic)?,
        Some(ModelKind::Dnls) => unreachable!("handled separately"),
        None => random_positive_operator(cfg.n_qubits, cfg.matrix_seed)?,
    })
}

fn spin_observables(cfg: &ExperimentConfig) -> Result<Vec<(String, PauliSum)>> {
    let n = cfg.n_qubits;
    let mut out = Vec::new();
    if cfg.model == Some(ModelKind::IsingLadder) {
        out.push(("zz_mean".to_string(), models::ladder_zz_correlator(n)?));
    }
    out.push(("z_total".to_string(), models::total_z(n)?));
    Ok(out)
}

/// Step 1: basis and operators.
pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    let n = cfg.n_qubits;
    let reference = reference(cfg)?;
    let selection = match cfg.selection {
        SelectionKind::Ordered => Selection::Ordered,
        SelectionKind::Random => Selection::Random {
            seed: cfg.selection_seed,
        },
    };

    if cfg.model == Some(ModelKind::Dnls) {
        let sys = models::dnls_system(n, cfg.j, &cfg.potentials(), cfg.g)?;
        let total = sys
            .density_ops
            .iter()
            .try_fold(PauliSum::zero(n)?, |acc, op| acc.sum(op))?
            .canonicalize();
        let observables = vec![
            ("n_even".to_string(), models::dnls_even_density(n)?),
            ("total_density".to_string(), total),
        ];
        return Ok(Prepared {
            basis: single_excitation_basis(n)?,
            available: n,
            hamiltonian: sys.linear_part.clone(),
            lindblads: Vec::new(),
            observables,
            dnls: Some(sys),
            inversion: None,
        });
    }

    let hamiltonian = model_hamiltonian(cfg)?;
    let expansion = k_moment_expand(&hamiltonian.strings(), cfg.k, cfg.m, reference, selection)?;
    info!(
        "basis: {} of {} available states (K = {})",
        expansion.basis.len(),
        expansion.available,
        cfg.k
    );
    let (lindblads, observables, inversion) = match cfg.experiment {
        ExperimentKind::MatrixInverse => (
            Vec::new(),
            Vec::new(),
            Some(MatrixInversion::new(&hamiltonian, cfg.t_final)?),
        ),
        ExperimentKind::Gibbs => (Vec::new(), spin_observables(cfg)?, None),
        _ => (models::raising_dissipators(n, cfg.gamma)?, spin_observables(cfg)?, None),
    };
    Ok(Prepared {
        basis: expansion.basis,
        available: expansion.available,
        hamiltonian,
        lindblads,
        observables,
        dnls: None,
        inversion,
    })
}

/// Step 2 against a given engine.
pub fn measure_with(cfg: &ExperimentConfig, prep: &Prepared, engine: &mut OverlapEngine) -> Result<OverlapSet> {
    let mut extra: Vec<PauliSum> = prep.dnls.as_ref().map_or_else(Vec::new, |d| d.spec.ops.clone());
    extra.extend(prep.observables.iter().map(|(_, op)| op.clone()));
    let mut set = engine.overlap_set(&prep.basis, &prep.hamiltonian, &prep.lindblads, &extra)?;
    match cfg.experiment {
        ExperimentKind::OpenIsing | ExperimentKind::OverlapsOnly if prep.dnls.is_none() => {
            set.g = Some(engine.operator_overlaps(&prep.basis, &models::iqae_init_hamiltonian(cfg.n_qubits)?)?);
        }
        ExperimentKind::MatrixInverse => {
            let inv = prep.inversion.as_ref().expect("matrix_inverse prepares an inversion");
            set.v_blocks = Some(inv.measure(engine, &prep.basis)?);
        }
        _ => {}
    }
    info!(
        "overlaps: {} distinct expectation values for {} naive sandwiches",
        engine.distinct_jobs(),
        engine.naive_jobs()
    );
    Ok(set)
}

/// Step 2: every overlap matrix the run needs.
pub fn measure(cfg: &ExperimentConfig, prep: &Prepared) -> Result<OverlapSet> {
    let mut engine = OverlapEngine::new(prep.basis.reference(), backend(cfg))?;
    measure_with(cfg, prep, &mut engine)
}

/// Checks that a loaded set fits the prepared problem.
pub fn check_loaded(cfg: &ExperimentConfig, prep: &Prepared, set: &OverlapSet) -> Result<()> {
    let id = prep.basis.id();
    if set.basis_id != id {
        return Err(gqas::Error::BasisMismatch {
            expected: id,
            found: set.basis_id,
        }
        .into());
    }
    let expected_s = prep.generator_ops() + prep.observables.len();
    let mismatch = |what: &str| CliError::Config {
        key: "overlaps".into(),
        message: format!("stored overlap set does not match this experiment ({what})"),
    };
    if set.s.len() != expected_s {
        return Err(mismatch("observables"));
    }
    if set.r.len() != prep.lindblads.len() {
        return Err(mismatch("dissipators"));
    }
    if cfg.experiment == ExperimentKind::MatrixInverse && set.v_blocks.is_none() {
        return Err(mismatch("missing V blocks"));
    }
    if cfg.experiment == ExperimentKind::OpenIsing && set.g.is_none() {
        return Err(mismatch("missing G"));
    }
    Ok(())
}

/// Initial state of the experiment, before any override.
pub enum InitialState {
    Density(HybridDensityMatrix),
    Pure(HybridPureState),
}

pub fn default_initial_state(cfg: &ExperimentConfig, prep: &Prepared, set: &OverlapSet) -> Result<Option<InitialState>> {
    let id = prep.basis.id();
    Ok(match cfg.experiment {
        ExperimentKind::OpenIsing => {
            let g = set.g.as_ref().expect("checked");
            let (alpha, energy) = iqae_ground_state(g, &set.e, cfg.pinv_cutoff, id)?;
            info!("initial state energy under -ΣZ: {energy:.10}");
            Some(InitialState::Density(HybridDensityMatrix::from_pure(&alpha, &set.e)?))
        }
        ExperimentKind::Gibbs => Some(InitialState::Density(totally_mixed_init(&set.e, cfg.pinv_cutoff, id)?)),
        ExperimentKind::Dnls => {
            let eta = models::dnls_initial_amplitudes(cfg.n_qubits);
            Some(InitialState::Pure(HybridPureState::new(Array1::from(eta), id)))
        }
        ExperimentKind::MatrixInverse => {
            let mut alpha = Array1::zeros(prep.basis.len());
            alpha[0] = c(1.0);
            Some(InitialState::Pure(HybridPureState::new(alpha, id)))
        }
        ExperimentKind::OverlapsOnly => None,
    })
}

/// Step 3 result.
pub struct Outcome {
    pub table: Table,
    pub summary: RunSummary,
}

fn summarize(table: &Table, primary: &str, rms_error: Option<f64>) -> RunSummary {
    let values = table.column(primary).unwrap_or_default();
    let fid = table.column("fidelity");
    let stats = fid.as_ref().map(|f| {
        let min = f.iter().copied().fold(f64::INFINITY, |a, b| if b.is_nan() || a.is_nan() { f64::NAN } else { a.min(b) });
        let mean = f.iter().sum::<f64>() / f.len() as f64;
        (min, mean, *f.last().unwrap_or(&f64::NAN))
    });
    RunSummary {
        primary: primary.to_string(),
        end_value: values.last().copied().unwrap_or(f64::NAN),
        max_value: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        min_fidelity: stats.map(|s| s.0),
        mean_fidelity: stats.map(|s| s.1),
        end_fidelity: stats.map(|s| s.2),
        rms_error,
    }
}

fn fidelity_or_nan(a: &DenseState, b: &DenseState) -> f64 {
    match oracle::uhlmann_fidelity(a, b) {
        Ok(f) => f,
        Err(e) => {
            warn!("fidelity undefined: {e}");
            f64::NAN
        }
    }
}

fn zero_state(n: usize) -> Result<Array1<C64>> {
    Ok(StateVector::zero(n)?.into_amplitudes())
}

fn check_times(ours: &[f64], theirs: &[f64]) -> Result<()> {
    if ours.len() != theirs.len() || ours.iter().zip(theirs).any(|(a, b)| (a - b).abs() > 1e-9) {
        return Err(gqas::Error::InvalidArgument("oracle output times differ from the trajectory".into()).into());
    }
    Ok(())
}

fn density_table(
    cfg: &ExperimentConfig,
    prep: &Prepared,
    set: &OverlapSet,
    traj: &Trajectory<HybridDensityMatrix>,
) -> Result<Table> {
    let gibbs = cfg.experiment == ExperimentKind::Gibbs;
    let mut header: Vec<String> = if gibbs {
        vec!["tau".into(), "temperature".into()]
    } else {
        vec!["time".into()]
    };
    header.extend(["trace", "purity", "energy"].map(String::from));
    header.extend(prep.observables.iter().map(|(name, _)| name.clone()));
    header.push("min_eigenvalue".into());

    let s_obs = &set.s[prep.generator_ops()..];
    let mut rows = Vec::with_capacity(traj.len());
    for (t, beta) in traj.iter() {
        let mut row = vec![t];
        if gibbs {
            row.push(temperature_at(t));
        }
        row.push(beta.trace(&set.e)?);
        row.push(beta.purity(&set.e)?);
        row.push(beta.expectation(&set.d)?.re);
        for s in s_obs {
            row.push(beta.expectation(s)?.re);
        }
        row.push(beta.min_eigenvalue(&set.e, cfg.pinv_cutoff)?);
        rows.push(row);
    }

    if cfg.with_oracle {
        let basis = prep.basis.clone().materialize()?;
        let dense_obs: Vec<Array2<C64>> = prep
            .observables
            .iter()
            .map(|(_, op)| op.to_dense())
            .collect::<gqas::Result<_>>()?;
        let h_dense = prep.hamiltonian.to_dense()?;
        let exact: Vec<Array2<C64>> = if gibbs {
            traj.times
                .iter()
                .map(|&tau| Ok(oracle::exact_gibbs(&prep.hamiltonian, temperature_at(tau))?.0))
                .collect::<Result<_>>()?
        } else {
            let rho0 = DenseState::Vector(zero_state(cfg.n_qubits)?);
            let ex = oracle::exact_lindblad(&prep.hamiltonian, &prep.lindblads, &rho0, cfg.dt, cfg.t_final, cfg.output_every)?;
            check_times(&traj.times, &ex.times)?;
            ex.states
        };
        header.push("fidelity".into());
        header.push("exact_energy".into());
        header.extend(prep.observables.iter().map(|(name, _)| format!("exact_{name}")));
        for ((row, beta), rho) in rows.iter_mut().zip(&traj.states).zip(&exact) {
            let ours = DenseState::Density(beta.densify(&basis)?);
            row.push(fidelity_or_nan(&ours, &DenseState::Density(rho.clone())));
            row.push(gqas::linalg::trace_of_product(&h_dense.view(), &rho.view()).re);
            for o in &dense_obs {
                row.push(gqas::linalg::trace_of_product(&o.view(), &rho.view()).re);
            }
        }
    }
    Ok(Table { header, rows })
}

/// Dense vector of `Σ_i η_i X_i|0…0⟩`.
fn excitation_state(eta: &Array1<C64>) -> Array1<C64> {
    let n = eta.len();
    let mut v = Array1::zeros(1 << n);
    for (i, a) in eta.iter().enumerate() {
        v[1 << (n - 1 - i)] = *a;
    }
    v
}

fn dnls_table(cfg: &ExperimentConfig, prep: &Prepared, set: &OverlapSet, traj: &Trajectory<HybridPureState>) -> Result<Table> {
    let mut header: Vec<String> = ["time", "norm", "energy"].map(String::from).to_vec();
    header.extend(prep.observables.iter().map(|(name, _)| name.clone()));
    let s_obs = &set.s[prep.generator_ops()..];
    let mut rows = Vec::with_capacity(traj.len());
    for (t, alpha) in traj.iter() {
        let mut row = vec![t, alpha.norm(&set.e)?, alpha.expectation(&set.d)?.re];
        for s in s_obs {
            row.push(alpha.expectation(s)?.re);
        }
        rows.push(row);
    }
    if cfg.with_oracle {
        let basis = prep.basis.clone().materialize()?;
        let eta0 = Array1::from(models::dnls_initial_amplitudes(cfg.n_qubits));
        let ex = oracle::exact_dnls(&eta0, cfg.j, &cfg.potentials(), cfg.g, cfg.dt, cfg.t_final, cfg.output_every)?;
        check_times(&traj.times, &ex.times)?;
        header.push("fidelity".into());
        header.push("exact_n_even".into());
        for ((row, alpha), eta) in rows.iter_mut().zip(&traj.states).zip(&ex.states) {
            let ours = DenseState::Vector(alpha.densify(&basis)?);
            row.push(fidelity_or_nan(&ours, &DenseState::Vector(excitation_state(eta))));
            row.push(oracle::odd_site_density(eta));
        }
    }
    Ok(Table { header, rows })
}

/// `‖M v - c v_0‖ / ‖c v_0‖` at the best `c`, from the measured blocks alone.
pub fn inversion_residual(inv: &MatrixInversion, set: &OverlapSet, alpha: &Array1<C64>) -> Result<f64> {
    let blocks = set.v_blocks.as_ref().expect("checked");
    let mu = inv.metric_coefficients(inv.horizon());
    let mut unit = vec![ZERO; mu.len()];
    unit[0] = c(1.0);
    // ⟨Mv|Mv⟩ and ⟨v_0|Mv⟩, with |v_0⟩ the first basis state.
    let mm = blocks.assemble(&mu, &mu)?;
    let norm_mv = gqas::hybrid::quadratic_form(alpha, &mm).re;
    let cross = blocks.assemble(&unit, &mu)?.row(0).dot(alpha);
    let v0_norm = set.e[[0, 0]].re;
    let best = cross / v0_norm;
    let residual_sq = (norm_mv - best.norm_sqr() * v0_norm).max(0.0);
    Ok(residual_sq.sqrt() / (best.norm() * v0_norm.sqrt()))
}

fn inversion_table(cfg: &ExperimentConfig, prep: &Prepared, set: &OverlapSet, traj: &Trajectory<HybridPureState>) -> Result<Table> {
    let inv = prep.inversion.as_ref().expect("prepared");
    let mut header: Vec<String> = ["time", "norm", "residual"].map(String::from).to_vec();
    let mut rows = Vec::with_capacity(traj.len());
    for (t, alpha) in traj.iter() {
        rows.push(vec![t, alpha.norm(&set.e)?, inversion_residual(inv, set, alpha.alpha())?]);
    }
    if cfg.with_oracle {
        let basis = prep.basis.clone().materialize()?;
        let v0 = prep.basis.reference().prepare()?.into_amplitudes();
        header.push("fidelity".into());
        for ((row, alpha), &t) in rows.iter_mut().zip(&traj.states).zip(&traj.times) {
            let s = t / inv.horizon();
            let e_t = prep
                .hamiltonian
                .scaled(c(s))
                .sum(&PauliSum::identity(cfg.n_qubits)?.scaled(c(1.0 - s)))?;
            let x = oracle::dense_solve(&e_t, &v0)?;
            let v = alpha.densify(&basis)?;
            let nx = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let nv = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let a = DenseState::Vector(x.mapv(|z| z / nx));
            let b = DenseState::Vector(v.mapv(|z| z / nv));
            row.push(fidelity_or_nan(&a, &b));
        }
    }
    Ok(Table { header, rows })
}

/// Step 3: integrate and tabulate. `None` for `overlaps_only`.
pub fn integrate(
    cfg: &ExperimentConfig,
    prep: &Prepared,
    set: &OverlapSet,
    initial: Option<InitialState>,
) -> Result<Option<Outcome>> {
    let int = integrator(cfg);
    let outcome = match (cfg.experiment, initial) {
        (ExperimentKind::OverlapsOnly, _) | (_, None) => return Ok(None),
        (ExperimentKind::OpenIsing, Some(InitialState::Density(beta0))) => {
            let traj = evolve_lindblad(set, &beta0, &set.rates, &int)?;
            let table = density_table(cfg, prep, set, &traj)?;
            let primary = if cfg.model == Some(ModelKind::IsingLadder) { "zz_mean" } else { "energy" };
            let summary = summarize(&table, primary, None);
            Outcome { table, summary }
        }
        (ExperimentKind::Gibbs, Some(InitialState::Density(beta0))) => {
            let traj = evolve_imaginary(&set.e, &set.d, &beta0, &int)?;
            let table = density_table(cfg, prep, set, &traj)?;
            let summary = summarize(&table, "energy", None);
            Outcome { table, summary }
        }
        (ExperimentKind::Dnls, Some(InitialState::Pure(alpha0))) => {
            let sys = prep.dnls.as_ref().expect("prepared");
            let traj = evolve_nonlinear(&set.e, &set.s[..prep.generator_ops()], &sys.spec, &alpha0, &int)?;
            let table = dnls_table(cfg, prep, set, &traj)?;
            let summary = summarize(&table, "n_even", None);
            Outcome { table, summary }
        }
        (ExperimentKind::MatrixInverse, Some(InitialState::Pure(alpha0))) => {
            let inv = prep.inversion.as_ref().expect("prepared");
            let traj = inv.evolve(set.v_blocks.as_ref().expect("checked"), &alpha0, &int)?;
            let table = inversion_table(cfg, prep, set, &traj)?;
            let summary = summarize(&table, "residual", None);
            Outcome { table, summary }
        }
        _ => {
            return Err(CliError::Config {
                key: "experiment".into(),
                message: "initial state kind does not fit the experiment".into(),
            })
        }
    };
    Ok(Some(outcome))
}

/// Entrywise errors of every matrix in `sampled` against `exact`: `(name, rms, max)`.
pub fn overlap_errors(sampled: &OverlapSet, exact: &OverlapSet) -> Vec<(String, f64, f64)> {
    let mut pairs: Vec<(String, &Array2<C64>, &Array2<C64>)> =
        vec![("E".into(), &sampled.e, &exact.e), ("D".into(), &sampled.d, &exact.d)];
    for (k, (a, b)) in sampled.r.iter().zip(&exact.r).enumerate() {
        pairs.push((format!("R_{k}"), a, b));
    }
    for (k, (a, b)) in sampled.f.iter().zip(&exact.f).enumerate() {
        pairs.push((format!("F_{k}"), a, b));
    }
    for (k, (a, b)) in sampled.s.iter().zip(&exact.s).enumerate() {
        pairs.push((format!("S_{k}"), a, b));
    }
    if let (Some(a), Some(b)) = (&sampled.g, &exact.g) {
        pairs.push(("G".into(), a, b));
    }
    pairs
        .into_iter()
        .map(|(name, a, b)| {
            let diffs: Vec<f64> = a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).collect();
            let rms = (diffs.iter().map(|d| d * d).sum::<f64>() / diffs.len() as f64).sqrt();
            let max = diffs.iter().copied().fold(0.0, f64::max);
            (name, rms, max)
        })
        .collect()
}

/// Pooled RMS over a list produced by [`overlap_errors`].
pub fn pooled_rms(errors: &[(String, f64, f64)], sizes: &[usize]) -> f64 {
    let total: usize = sizes.iter().sum();
    let sq: f64 = errors.iter().zip(sizes).map(|((_, rms, _), n)| rms * rms * *n as f64).sum();
    (sq / total as f64).sqrt()
}

pub fn matrix_sizes(set: &OverlapSet) -> Vec<usize> {
    let m = set.dim() * set.dim();
    let count = 2 + set.r.len() + set.f.len() + set.s.len() + usize::from(set.g.is_some());
    vec![m; count]
}

pub fn load_overlaps(dir: &Path) -> Result<OverlapSet> {
    Ok(OverlapSet::load(dir)?)
}
