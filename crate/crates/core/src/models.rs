//! Concrete Hamiltonians, dissipators and observables.

use std::sync::Arc;

use crate::dynamics::NonlinearSpec;
use crate::error::{Error, Result};
use crate::linalg::{c, C64, ZERO};
use crate::pauli::{Pauli, PauliString, PauliSum};

/// Two rails of `n/2` qubits joined by `n/2` rungs.
///
/// Rail A is qubits `0..n/2`, rail B is `n/2..n`, rung `i` joins `i` and `i + n/2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LadderTopology {
    pub n_qubits: usize,
    pub edges: Vec<(usize, usize)>,
}

impl LadderTopology {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "a ladder needs an even number of qubits >= 4, got {n}"
            )));
        }
        let half = n / 2;
        let mut edges = Vec::with_capacity(3 * half - 2);
        for rail in [0, half] {
            edges.extend((0..half - 1).map(|i| (rail + i, rail + i + 1)));
        }
        edges.extend((0..half).map(|i| (i, i + half)));
        Ok(Self { n_qubits: n, edges })
    }
}

fn zz(n: usize, i: usize, j: usize) -> Result<PauliString> {
    PauliString::from_factors(n, &[(i, Pauli::Z), (j, Pauli::Z)])
}

/// `H = J Σ_edges Z_i Z_j + h Σ_i X_i`.
pub fn ising_ladder(n: usize, j: f64, h: f64) -> Result<PauliSum> {
    let topo = LadderTopology::new(n)?;
    let mut out = PauliSum::zero(n)?;
    for &(a, b) in &topo.edges {
        out.push(c(j), zz(n, a, b)?)?;
    }
    for q in 0..n {
        out.push(c(h), PauliString::single(n, q, Pauli::X)?)?;
    }
    Ok(out)
}

/// `Σ_edges Z_i Z_j / |edges|`: equals 1 on any computational basis product state
/// with all spins aligned.
pub fn ladder_zz_correlator(n: usize) -> Result<PauliSum> {
    let topo = LadderTopology::new(n)?;
    let w = 1.0 / topo.edges.len() as f64;
    let mut out = PauliSum::zero(n)?;
    for &(a, b) in &topo.edges {
        out.push(c(w), zz(n, a, b)?)?;
    }
    Ok(out)
}

/// `H = (J/2) Σ_i X_i X_{i+1} - (h/2) Σ_i Z_i`, with the bond `(n-1, 0)` when periodic.
pub fn transverse_ising_chain(n: usize, j: f64, h: f64, periodic: bool) -> Result<PauliSum> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("chain needs at least 2 sites, got {n}")));
    }
    let mut out = PauliSum::zero(n)?;
    let bonds = if periodic { n } else { n - 1 };
    for i in 0..bonds {
        let s = PauliString::from_factors(n, &[(i, Pauli::X), ((i + 1) % n, Pauli::X)])?;
        out.push(c(j / 2.0), s)?;
    }
    for i in 0..n {
        out.push(c(-h / 2.0), PauliString::single(n, i, Pauli::Z)?)?;
    }
    Ok(out.canonicalize())
}

/// `σ⁺ = |1⟩⟨0| = (X - iY)/2` on `qubit`.
pub fn raising_operator(n: usize, qubit: usize) -> Result<PauliSum> {
    PauliSum::from_terms(
        n,
        [
            (c(0.5), PauliString::single(n, qubit, Pauli::X)?),
            (C64::new(0.0, -0.5), PauliString::single(n, qubit, Pauli::Y)?),
        ],
    )
}

/// One `(γ, σ⁺_i)` pair per qubit.
pub fn raising_dissipators(n: usize, gamma: f64) -> Result<Vec<(f64, PauliSum)>> {
    if !(gamma >= 0.0) {
        return Err(Error::InvalidArgument(format!("negative dissipation rate {gamma}")));
    }
    (0..n).map(|q| Ok((gamma, raising_operator(n, q)?))).collect()
}

/// `Σ_i Z_i`.
pub fn total_z(n: usize) -> Result<PauliSum> {
    PauliSum::from_terms(
        n,
        (0..n).map(|q| PauliString::single(n, q, Pauli::Z).map(|p| (c(1.0), p))).collect::<Result<Vec<_>>>()?,
    )
}

/// `H_ini = -Σ_i Z_i`, whose ground state is `|0…0⟩`.
pub fn iqae_init_hamiltonian(n: usize) -> Result<PauliSum> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one qubit".into()));
    }
    Ok(total_z(n)?.scaled(c(-1.0)))
}

/// `n_i = (1 - Z_i)/2`.
pub fn number_operator(n: usize, site: usize) -> Result<PauliSum> {
    PauliSum::from_terms(
        n,
        [
            (c(0.5), PauliString::identity(n)?),
            (c(-0.5), PauliString::single(n, site, Pauli::Z)?),
        ],
    )
}

/// Nonlinear Schrödinger lattice mapped to spins in the one-excitation sector.
///
/// The site amplitudes `η_i` encode `|φ⟩ = Σ_i η_i X_i|0…0⟩`, and the
/// generator is `H_lin + g Σ_i ⟨φ|n_i|φ⟩ n_i` with
/// `H_lin = -(J/2) Σ_i (X_i X_{i+1} + Y_i Y_{i+1}) + Σ_i V_i n_i` on an open chain.
#[derive(Clone, Debug)]
pub struct DnlsSystem {
    pub linear_part: PauliSum,
    pub density_ops: Vec<PauliSum>,
    /// `ops = [H_lin, n_0, …, n_{n-1}]` with coefficients `[1, g⟨n_0⟩, …]`.
    pub spec: NonlinearSpec,
}

pub fn dnls_system(n: usize, j: f64, v: &[f64], g: f64) -> Result<DnlsSystem> {
    if v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: v.len(),
        });
    }
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one site".into()));
    }
    let density_ops = (0..n).map(|i| number_operator(n, i)).collect::<Result<Vec<_>>>()?;
    let mut linear = PauliSum::zero(n)?;
    for i in 0..n.saturating_sub(1) {
        for p in [Pauli::X, Pauli::Y] {
            linear.push(c(-j / 2.0), PauliString::from_factors(n, &[(i, p), (i + 1, p)])?)?;
        }
    }
    for (vi, ni) in v.iter().zip(&density_ops) {
        if *vi != 0.0 {
            linear = linear.sum(&ni.scaled(c(*vi)))?;
        }
    }
    let linear_part = linear.canonicalize();
    let mut ops = vec![linear_part.clone()];
    ops.extend(density_ops.iter().cloned());
    let coefficients = Arc::new(move |_t: f64, x: &[C64]| {
        std::iter::once(c(1.0))
            .chain(x[1..].iter().map(|xi| if g == 0.0 { ZERO } else { c(g * xi.re) }))
            .collect()
    });
    Ok(DnlsSystem {
        linear_part,
        density_ops,
        spec: NonlinearSpec { ops, coefficients },
    })
}

/// Initial amplitudes with weight `√(2/n)` on sites `0, 2, 4, …` and zero elsewhere.
pub fn dnls_initial_amplitudes(n: usize) -> Vec<C64> {
    let occupied = n.div_ceil(2);
    let a = (1.0 / occupied as f64).sqrt();
    (0..n).map(|i| if i % 2 == 0 { c(a) } else { ZERO }).collect()
}

/// Density on the initially empty sites `1, 3, 5, …`.
pub fn dnls_even_density(n: usize) -> Result<PauliSum> {
    let mut out = PauliSum::zero(n)?;
    for i in (1..n).step_by(2) {
        out = out.sum(&number_operator(n, i)?)?;
    }
    Ok(out.canonicalize())
}
