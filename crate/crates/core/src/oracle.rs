//! Dense brute-force references.
//!
//! These work on full `2^n`-dimensional vectors and matrices and share nothing
//! with the overlap or ansatz code apart from [`PauliSum::to_dense`].

use ndarray::{Array1, Array2};
use ndarray_linalg::Solve;

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::linalg::{self, c, dagger, C64, I, ZERO};
use crate::pauli::PauliSum;

/// Largest register any oracle accepts.
pub const ORACLE_MAX_QUBITS: usize = 8;

const PSD_TOLERANCE: f64 = 1e-6;

fn check_size(n: usize) -> Result<()> {
    if n > ORACLE_MAX_QUBITS {
        return Err(Error::TooManyQubits {
            what: "dense oracle",
            requested: n,
            max: ORACLE_MAX_QUBITS,
        });
    }
    Ok(())
}

/// A dense pure or mixed state.
#[derive(Clone, Debug, PartialEq)]
pub enum DenseState {
    Vector(Array1<C64>),
    Density(Array2<C64>),
}

impl DenseState {
    pub fn dim(&self) -> usize {
        match self {
            DenseState::Vector(v) => v.len(),
            DenseState::Density(m) => m.nrows(),
        }
    }

    pub fn to_density(&self) -> Array2<C64> {
        match self {
            DenseState::Vector(v) => outer(v, v),
            DenseState::Density(m) => m.clone(),
        }
    }

    /// Unit norm, or unit trace, Hermitian and PSD within `1e-8`.
    pub fn validate(&self) -> Result<()> {
        match self {
            DenseState::Vector(v) => {
                let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                if (norm - 1.0).abs() > 1e-8 {
                    return Err(Error::Unnormalized { norm });
                }
            }
            DenseState::Density(m) => {
                let defect = linalg::hermiticity_defect(&m.view());
                if defect > 1e-8 {
                    return Err(Error::NotHermitian { deviation: defect });
                }
                let tr = linalg::trace(&m.view()).re;
                if (tr - 1.0).abs() > 1e-8 {
                    return Err(Error::Unnormalized { norm: tr });
                }
                let (w, _) = linalg::eigh(&m.view())?;
                if w[0] < -1e-8 {
                    return Err(Error::InvalidArgument(format!("negative eigenvalue {}", w[0])));
                }
            }
        }
        Ok(())
    }
}

/// `|a⟩⟨b|`.
pub fn outer(a: &Array1<C64>, b: &Array1<C64>) -> Array2<C64> {
    Array2::from_shape_fn((a.len(), b.len()), |(i, j)| a[i] * b[j].conj())
}

/// Row-compressed copy of a dense matrix.
#[derive(Clone, Debug)]
struct Sparse {
    rows: Vec<Vec<(usize, C64)>>,
}

impl Sparse {
    fn from_dense(m: &Array2<C64>) -> Self {
        let rows = m
            .outer_iter()
            .map(|row| row.iter().enumerate().filter(|(_, z)| **z != ZERO).map(|(j, z)| (j, *z)).collect())
            .collect();
        Self { rows }
    }

    /// `self · b`.
    fn mul(&self, b: &Array2<C64>) -> Array2<C64> {
        let mut out = Array2::zeros(b.raw_dim());
        for (i, row) in self.rows.iter().enumerate() {
            let mut target = out.row_mut(i);
            for &(k, a) in row {
                target.scaled_add(a, &b.row(k));
            }
        }
        out
    }
}

/// RK4 on `dρ/dt = -i[H, ρ] + Σ γ (LρL† - ½{L†L, ρ})`.
///
/// Output every `output_every` steps plus the final time.
pub fn exact_lindblad(
    h: &PauliSum,
    lindblads: &[(f64, PauliSum)],
    rho0: &DenseState,
    dt: f64,
    t_final: f64,
    output_every: usize,
) -> Result<Trajectory<Array2<C64>>> {
    let n = h.n_qubits();
    check_size(n)?;
    if rho0.dim() != 1 << n {
        return Err(Error::DimensionMismatch {
            expected: 1 << n,
            found: rho0.dim(),
        });
    }
    if !(dt > 0.0) || !(t_final >= 0.0) || output_every == 0 {
        return Err(Error::InvalidArgument("need dt > 0, t_final >= 0, output_every >= 1".into()));
    }
    let hd = h.to_dense()?;
    // K = -iH - ½ Σ γ L†L, so that dρ/dt = Kρ + ρK† + Σ γ LρL†.
    let mut k = hd.mapv(|z| -I * z);
    let mut jumps = Vec::new();
    for (gamma, l) in lindblads {
        if !(*gamma >= 0.0) {
            return Err(Error::InvalidArgument(format!("negative dissipation rate {gamma}")));
        }
        if l.n_qubits() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: l.n_qubits(),
            });
        }
        let ld = l.to_dense()?;
        let ldl = dagger(&ld.view()).dot(&ld);
        k.scaled_add(c(-0.5 * gamma), &ldl);
        jumps.push(Sparse::from_dense(&ld.mapv(|z| z * gamma.sqrt())));
    }
    let k = Sparse::from_dense(&k);
    let rhs = |rho: &Array2<C64>| -> Array2<C64> {
        let kr = k.mul(rho);
        let mut out = &kr + &dagger(&kr.view());
        for l in &jumps {
            let lr = l.mul(rho);
            out += &l.mul(&dagger(&lr.view()));
        }
        out
    };
    Ok(rk4_dense(rho0.to_density(), dt, t_final, output_every, rhs, |_| {}))
}

fn rk4_dense<T>(
    y0: T,
    dt: f64,
    t_final: f64,
    output_every: usize,
    rhs: impl Fn(&T) -> T,
    post: impl Fn(&mut T),
) -> Trajectory<T>
where
    T: Clone + std::ops::Add<T, Output = T> + std::ops::Mul<C64, Output = T>,
    for<'a> &'a T: std::ops::Add<T, Output = T>,
{
    let n = ((t_final / dt) - 1e-9).ceil().max(0.0) as usize;
    let mut times = vec![0.0];
    let mut states = vec![y0.clone()];
    let mut y = y0;
    for s in 0..n {
        let t = s as f64 * dt;
        let h = if s + 1 == n { t_final - t } else { dt };
        let k1 = rhs(&y);
        let k2 = rhs(&(&y + k1.clone() * c(h / 2.0)));
        let k3 = rhs(&(&y + k2.clone() * c(h / 2.0)));
        let k4 = rhs(&(&y + k3.clone() * c(h)));
        y = &y + (k1 + k2 * c(2.0) + k3 * c(2.0) + k4) * c(h / 6.0);
        post(&mut y);
        if (s + 1) % output_every == 0 || s + 1 == n {
            times.push(if s + 1 == n { t_final } else { (s + 1) as f64 * dt });
            states.push(y.clone());
        }
    }
    Trajectory { times, states }
}

/// `e^{-iHt}` from a dense eigendecomposition.
#[derive(Clone, Debug)]
pub struct DensePropagator {
    values: Array1<f64>,
    vectors: Array2<C64>,
}

impl DensePropagator {
    pub fn new(h: &PauliSum) -> Result<Self> {
        check_size(h.n_qubits())?;
        let (values, vectors) = linalg::eigh(&h.to_dense()?.view())?;
        Ok(Self { values, vectors })
    }

    pub fn eigenvalues(&self) -> &Array1<f64> {
        &self.values
    }

    pub fn unitary(&self, t: f64) -> Array2<C64> {
        let phases = self.values.mapv(|l| C64::from_polar(1.0, -l * t));
        let scaled = &self.vectors * &phases;
        scaled.dot(&dagger(&self.vectors.view()))
    }

    pub fn evolve(&self, state: &DenseState, t: f64) -> DenseState {
        let u = self.unitary(t);
        match state {
            DenseState::Vector(v) => DenseState::Vector(u.dot(v)),
            DenseState::Density(m) => DenseState::Density(u.dot(m).dot(&dagger(&u.view()))),
        }
    }
}

/// `ρ = e^{-H/T} / Tr(e^{-H/T})` and `Tr(Hρ)`; `T = ∞` gives `1/2^n`.
pub fn exact_gibbs(h: &PauliSum, temperature: f64) -> Result<(Array2<C64>, f64)> {
    check_size(h.n_qubits())?;
    if !(temperature > 0.0) {
        return Err(Error::InvalidArgument(format!("temperature must be positive, got {temperature}")));
    }
    let (w, v) = linalg::eigh(&h.to_dense()?.view())?;
    let weights: Array1<f64> = if temperature.is_infinite() {
        Array1::from_elem(w.len(), 1.0)
    } else {
        let ground = w[0];
        w.mapv(|l| (-(l - ground) / temperature).exp())
    };
    let z: f64 = weights.sum();
    let energy = w.iter().zip(weights.iter()).map(|(l, p)| l * p).sum::<f64>() / z;
    let diag = weights.mapv(|p| c(p / z));
    let rho = (&v * &diag).dot(&dagger(&v.view()));
    Ok((rho, energy))
}

/// Lowest eigenvalue of a dense Hamiltonian.
pub fn ground_energy(h: &PauliSum) -> Result<f64> {
    check_size(h.n_qubits())?;
    let (w, _) = linalg::eigh(&h.to_dense()?.view())?;
    Ok(w[0])
}

/// RK4 on `i dη_i/dt = -J(η_{i+1} + η_{i-1}) + V_i η_i + g|η_i|² η_i` over an
/// open chain, renormalizing after every step.
pub fn exact_dnls(
    eta0: &Array1<C64>,
    j: f64,
    v: &[f64],
    g: f64,
    dt: f64,
    t_final: f64,
    output_every: usize,
) -> Result<Trajectory<Array1<C64>>> {
    let n = eta0.len();
    if v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: v.len(),
        });
    }
    let norm = eta0.iter().map(|z| z.norm_sqr()).sum::<f64>();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::Unnormalized { norm: norm.sqrt() });
    }
    if !(dt > 0.0) || !(t_final >= 0.0) || output_every == 0 {
        return Err(Error::InvalidArgument("need dt > 0, t_final >= 0, output_every >= 1".into()));
    }
    let rhs = |eta: &Array1<C64>| -> Array1<C64> {
        Array1::from_shape_fn(n, |i| {
            let mut hop = ZERO;
            if i > 0 {
                hop += eta[i - 1];
            }
            if i + 1 < n {
                hop += eta[i + 1];
            }
            let local = -j * hop + (v[i] + g * eta[i].norm_sqr()) * eta[i];
            -I * local
        })
    };
    let post = |eta: &mut Array1<C64>| {
        let s = eta.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        eta.mapv_inplace(|z| z / s);
    };
    Ok(rk4_dense(eta0.clone(), dt, t_final, output_every, rhs, post))
}

/// `Σ_{i odd} |η_i|²` (0-indexed).
pub fn odd_site_density(eta: &Array1<C64>) -> f64 {
    eta.iter().skip(1).step_by(2).map(|z| z.norm_sqr()).sum()
}

/// Dense solution of `M x = b`.
pub fn dense_solve(m: &PauliSum, b: &Array1<C64>) -> Result<Array1<C64>> {
    check_size(m.n_qubits())?;
    Ok(m.to_dense()?.solve(b)?)
}

fn psd_sqrt(m: &Array2<C64>) -> Result<Array2<C64>> {
    let (w, v) = linalg::eigh(&m.view())?;
    if w[0] < -PSD_TOLERANCE {
        return Err(Error::InvalidArgument(format!(
            "state has eigenvalue {} below -{PSD_TOLERANCE:e}",
            w[0]
        )));
    }
    Ok(linalg::spectral_map(&w, &v, |l| l.max(0.0).sqrt()))
}

/// Squared Uhlmann fidelity `(Tr √(√ρ σ √ρ))²`.
pub fn uhlmann_fidelity(rho: &DenseState, sigma: &DenseState) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: sigma.dim(),
        });
    }
    if let (DenseState::Vector(a), DenseState::Vector(b)) = (rho, sigma) {
        let ov: C64 = a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum();
        return Ok(ov.norm_sqr());
    }
    let rho = rho.to_density();
    let sigma = sigma.to_density();
    let sqrt_rho = psd_sqrt(&rho)?;
    psd_sqrt(&sigma)?;
    let inner = sqrt_rho.dot(&sigma).dot(&sqrt_rho);
    let (w, _) = linalg::eigh(&inner.view())?;
    let root: f64 = w.iter().map(|l| l.max(0.0).sqrt()).sum();
    Ok(root * root)
}
