//! Hybrid states: classical coefficients over a fixed set of quantum states.
//!
//! A [`HybridDensityMatrix`] represents `ρ = Σ_ij β_ij |ψ_i⟩⟨ψ_j|` and a
//! [`HybridPureState`] represents `|φ⟩ = Σ_i α_i |ψ_i⟩`. Every physical
//! quantity is computed from `β` (or `α`) and overlap matrices alone; the
//! `densify` helpers exist for validation against dense references.

use ndarray::{Array1, Array2};

use crate::ansatz::AnsatzBasis;
use crate::error::{Error, Result};
use crate::linalg::{self, dagger, hermitian_part, trace_of_product, C64};

/// Largest register [`HybridDensityMatrix::densify`] will expand.
pub const DENSIFY_MAX_QUBITS: usize = 10;

/// Below this `|Tr(βE)|` a state is considered collapsed.
pub const COLLAPSE_THRESHOLD: f64 = 1e-12;

const IMAG_TOLERANCE: f64 = 1e-8;

fn check_square(m: &Array2<C64>, dim: usize) -> Result<()> {
    if m.nrows() != dim || m.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: if m.nrows() != dim { m.nrows() } else { m.ncols() },
        });
    }
    Ok(())
}

/// `α† A α`.
pub fn quadratic_form(alpha: &Array1<C64>, a: &Array2<C64>) -> C64 {
    alpha.iter().zip(a.dot(alpha).iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Columns `|ψ_j⟩` of a materialized basis as a `2^n × M` matrix.
fn state_matrix(basis: &AnsatzBasis) -> Result<Array2<C64>> {
    if basis.n_qubits() > DENSIFY_MAX_QUBITS {
        return Err(Error::TooManyQubits {
            what: "densify",
            requested: basis.n_qubits(),
            max: DENSIFY_MAX_QUBITS,
        });
    }
    let states = basis
        .states()
        .ok_or_else(|| Error::InvalidArgument("basis must be materialized to densify".into()))?;
    let dim = 1usize << basis.n_qubits();
    let mut psi = Array2::zeros((dim, states.len()));
    for (j, s) in states.iter().enumerate() {
        psi.column_mut(j).assign(s.amplitudes());
    }
    Ok(psi)
}

#[derive(Clone, Debug, PartialEq)]
pub struct HybridDensityMatrix {
    beta: Array2<C64>,
    basis_id: u64,
}

impl HybridDensityMatrix {
    pub fn new(beta: Array2<C64>, basis_id: u64) -> Result<Self> {
        check_square(&beta, beta.nrows())?;
        Ok(Self { beta, basis_id })
    }

    /// `β = α α†`, rejecting `α` unless `α†Eα = 1` within 1e-8.
    pub fn from_pure(alpha: &HybridPureState, e: &Array2<C64>) -> Result<Self> {
        let norm = alpha.norm(e)?;
        if (norm - 1.0).abs() > 1e-8 {
            return Err(Error::Unnormalized { norm });
        }
        let a = &alpha.alpha;
        let beta = Array2::from_shape_fn((a.len(), a.len()), |(i, j)| a[i] * a[j].conj());
        Ok(Self {
            beta,
            basis_id: alpha.basis_id,
        })
    }

    pub fn beta(&self) -> &Array2<C64> {
        &self.beta
    }

    pub fn into_beta(self) -> Array2<C64> {
        self.beta
    }

    pub fn basis_id(&self) -> u64 {
        self.basis_id
    }

    pub fn dim(&self) -> usize {
        self.beta.nrows()
    }

    /// `Tr(βE)` including its imaginary part.
    pub fn trace_complex(&self, e: &Array2<C64>) -> Result<C64> {
        check_square(e, self.dim())?;
        Ok(trace_of_product(&self.beta.view(), &e.view()))
    }

    /// `Re Tr(βE)`; an imaginary part of 1e-8 or more is an error.
    pub fn trace(&self, e: &Array2<C64>) -> Result<f64> {
        let t = self.trace_complex(e)?;
        if t.im.abs() >= IMAG_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "Tr(βE) has imaginary part {:.3e}",
                t.im
            )));
        }
        Ok(t.re)
    }

    /// `Tr(ρ²) = Tr(EβEβ)`.
    pub fn purity(&self, e: &Array2<C64>) -> Result<f64> {
        check_square(e, self.dim())?;
        let eb = e.dot(&self.beta);
        Ok(trace_of_product(&eb.view(), &eb.view()).re)
    }

    /// `Tr(ρO) = Tr(O_mat β)` for `O_mat[i][j] = ⟨ψ_i|O|ψ_j⟩`.
    pub fn expectation(&self, o: &Array2<C64>) -> Result<C64> {
        check_square(o, self.dim())?;
        Ok(trace_of_product(&o.view(), &self.beta.view()))
    }

    pub fn hermitize(&mut self) {
        self.beta = hermitian_part(&self.beta.view());
    }

    /// Rescales so `Tr(βE) = 1`.
    pub fn normalize(&mut self, e: &Array2<C64>) -> Result<()> {
        let t = self.trace_complex(e)?;
        if t.norm() < COLLAPSE_THRESHOLD {
            return Err(Error::TraceCollapse {
                time: f64::NAN,
                trace: t.norm(),
            });
        }
        let inv = 1.0 / t.re;
        self.beta.mapv_inplace(|z| z * inv);
        Ok(())
    }

    /// Nonzero spectrum of `ρ`, from `E^{1/2} β E^{1/2}` on the part of the
    /// span where `E` exceeds `cutoff · max eig(E)`.
    pub fn spectrum(&self, e: &Array2<C64>, cutoff: f64) -> Result<Array1<f64>> {
        check_square(e, self.dim())?;
        let (lam, u) = linalg::eigh(&e.view())?;
        let top = lam.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let keep: Vec<usize> = (0..lam.len()).filter(|&k| lam[k] > cutoff * top).collect();
        let mut w = Array2::zeros((self.dim(), keep.len()));
        for (c, &k) in keep.iter().enumerate() {
            let s = lam[k].sqrt();
            w.column_mut(c).assign(&u.column(k).mapv(|z| z * s));
        }
        let x = dagger(&w.view()).dot(&self.beta).dot(&w);
        Ok(linalg::eigh(&x.view())?.0)
    }

    pub fn min_eigenvalue(&self, e: &Array2<C64>, cutoff: f64) -> Result<f64> {
        Ok(self
            .spectrum(e, cutoff)?
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min))
    }

    /// Dense `Σ β_ij |ψ_i⟩⟨ψ_j|` on a materialized basis.
    pub fn densify(&self, basis: &AnsatzBasis) -> Result<Array2<C64>> {
        let psi = state_matrix(basis)?;
        if psi.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: psi.ncols(),
            });
        }
        Ok(psi.dot(&self.beta).dot(&dagger(&psi.view())))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HybridPureState {
    alpha: Array1<C64>,
    basis_id: u64,
}

impl HybridPureState {
    pub fn new(alpha: Array1<C64>, basis_id: u64) -> Self {
        Self { alpha, basis_id }
    }

    pub fn alpha(&self) -> &Array1<C64> {
        &self.alpha
    }

    pub fn into_alpha(self) -> Array1<C64> {
        self.alpha
    }

    pub fn basis_id(&self) -> u64 {
        self.basis_id
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    /// `Re α†Eα`.
    pub fn norm(&self, e: &Array2<C64>) -> Result<f64> {
        check_square(e, self.dim())?;
        Ok(quadratic_form(&self.alpha, e).re)
    }

    pub fn normalize(&mut self, e: &Array2<C64>) -> Result<()> {
        let n = self.norm(e)?;
        if n < COLLAPSE_THRESHOLD {
            return Err(Error::TraceCollapse {
                time: f64::NAN,
                trace: n,
            });
        }
        let s = 1.0 / n.sqrt();
        self.alpha.mapv_inplace(|z| z * s);
        Ok(())
    }

    /// `α† O_mat α`.
    pub fn expectation(&self, o: &Array2<C64>) -> Result<C64> {
        check_square(o, self.dim())?;
        Ok(quadratic_form(&self.alpha, o))
    }

    pub fn to_density(&self) -> HybridDensityMatrix {
        let a = &self.alpha;
        HybridDensityMatrix {
            beta: Array2::from_shape_fn((a.len(), a.len()), |(i, j)| a[i] * a[j].conj()),
            basis_id: self.basis_id,
        }
    }

    /// Dense `Σ α_i |ψ_i⟩` on a materialized basis.
    pub fn densify(&self, basis: &AnsatzBasis) -> Result<Array1<C64>> {
        let psi = state_matrix(basis)?;
        if psi.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: psi.ncols(),
            });
        }
        Ok(psi.dot(&self.alpha))
    }
}
