//! Fixed ansatz bases `|ψ_j⟩ = P_j|ψ⟩` built from Pauli strings.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashSet;
use std::fmt::Write as _;
use std::hash::{Hash, Hasher};

use log::warn;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString, Phase};
use crate::statevector::{Reference, StateVector};

/// How the first `M` states are picked out of the full expansion.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Selection {
    /// The first `M` in generation order.
    #[default]
    Ordered,
    /// The identity plus `M - 1` uniformly drawn others, kept in generation order.
    Random { seed: u64 },
}

#[derive(Clone, Debug)]
pub struct AnsatzBasis {
    reference: Reference,
    paulis: Vec<PauliString>,
    states: Option<Vec<StateVector>>,
}

impl AnsatzBasis {
    /// Phases are dropped; strings must be distinct up to phase.
    pub fn new(reference: Reference, paulis: Vec<PauliString>) -> Result<Self> {
        if paulis.is_empty() {
            return Err(Error::InvalidArgument("ansatz basis is empty".into()));
        }
        let n = reference.n_qubits();
        let mut seen = HashSet::new();
        let mut out = Vec::with_capacity(paulis.len());
        for p in paulis {
            if p.n_qubits() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: p.n_qubits(),
                });
            }
            if !seen.insert(p.key()) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate basis string {}",
                    p.with_phase(Phase::ONE)
                )));
            }
            out.push(p.with_phase(Phase::ONE));
        }
        Ok(Self {
            reference,
            paulis: out,
            states: None,
        })
    }

    pub fn reference(&self) -> &Reference {
        &self.reference
    }

    pub fn paulis(&self) -> &[PauliString] {
        &self.paulis
    }

    pub fn len(&self) -> usize {
        self.paulis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paulis.is_empty()
    }

    pub fn n_qubits(&self) -> usize {
        self.reference.n_qubits()
    }

    pub fn states(&self) -> Option<&[StateVector]> {
        self.states.as_deref()
    }

    pub fn is_materialized(&self) -> bool {
        self.states.is_some()
    }

    /// Caches `P_j|ψ⟩` for every basis element (parallel over `j`).
    pub fn materialize(mut self) -> Result<Self> {
        if self.states.is_none() {
            let psi = self.reference.prepare()?;
            let states = self
                .paulis
                .par_iter()
                .map(|p| psi.apply_pauli(p))
                .collect::<Result<Vec<_>>>()?;
            self.states = Some(states);
        }
        Ok(self)
    }

    /// Stable identifier of (reference, string list) for binding coefficient
    /// data to the basis it was computed on.
    pub fn id(&self) -> u64 {
        let mut h = DefaultHasher::new();
        match &self.reference {
            Reference::Circuit(spec) => {
                0u8.hash(&mut h);
                spec.n_qubits.hash(&mut h);
                spec.layers.hash(&mut h);
                for a in &spec.angles {
                    a.to_bits().hash(&mut h);
                }
            }
            Reference::Zero { n_qubits } => {
                1u8.hash(&mut h);
                n_qubits.hash(&mut h);
            }
        }
        for p in &self.paulis {
            p.key().hash(&mut h);
        }
        h.finish()
    }

    /// One line per state: `index<TAB>pauli-text`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (j, p) in self.paulis.iter().enumerate() {
            let _ = writeln!(out, "{j}\t{p}");
        }
        out
    }

    /// Inverse of [`dump`](AnsatzBasis::dump) given the reference.
    pub fn from_dump(reference: Reference, text: &str) -> Result<Self> {
        let mut paulis = Vec::new();
        for (lineno, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let (idx, p) = line
                .split_once('\t')
                .ok_or_else(|| Error::Parse(format!("basis dump line {}: missing tab", lineno + 1)))?;
            let idx: usize = idx
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("basis dump line {}: bad index", lineno + 1)))?;
            if idx != paulis.len() {
                return Err(Error::Parse(format!(
                    "basis dump line {}: expected index {}, found {idx}",
                    lineno + 1,
                    paulis.len()
                )));
            }
            paulis.push(p.parse()?);
        }
        Self::new(reference, paulis)
    }
}

/// Result of a capped K-moment expansion.
#[derive(Clone, Debug)]
pub struct KMomentExpansion {
    pub basis: AnsatzBasis,
    /// Distinct strings the expansion produced before truncation.
    pub available: usize,
    /// Set when the cap asked for more states than exist.
    pub exhausted: bool,
}

/// All distinct strings of the cumulative K-moment set, in generation order.
///
/// Moment `k` consists of the products `U_{i_k} ⋯ U_{i_1}` with the index
/// tuples `(i_1, …, i_k)` enumerated lexicographically. Strings equal up to
/// phase are kept once, at their first occurrence, with phase reset to +1.
pub fn k_moment_strings(h_terms: &[PauliString], k: usize) -> Result<Vec<PauliString>> {
    let first = h_terms
        .first()
        .ok_or_else(|| Error::InvalidArgument("K-moment expansion needs at least one term".into()))?;
    let n = first.n_qubits();
    if let Some(bad) = h_terms.iter().find(|p| p.n_qubits() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: bad.n_qubits(),
        });
    }
    let identity = PauliString::identity(n)?;
    let mut seen = HashSet::from([identity.key()]);
    let mut out = vec![identity];

    // Deduplicating each moment's prefixes leaves the first-occurrence order
    // of the next moment unchanged, since a repeated prefix only regenerates
    // strings its earlier copy already produced.
    let mut prefixes = vec![identity];
    for _ in 0..k {
        let mut level_seen = HashSet::new();
        let mut next = Vec::new();
        for prefix in &prefixes {
            for u in h_terms {
                let prod = u.mul_unchecked(prefix).with_phase(Phase::ONE);
                if level_seen.insert(prod.key()) {
                    next.push(prod);
                    if seen.insert(prod.key()) {
                        out.push(prod);
                    }
                }
            }
        }
        prefixes = next;
    }
    Ok(out)
}

/// Cumulative K-moment basis truncated to `m_cap` states.
pub fn k_moment_expand(
    h_terms: &[PauliString],
    k: usize,
    m_cap: usize,
    reference: Reference,
    selection: Selection,
) -> Result<KMomentExpansion> {
    if m_cap == 0 {
        return Err(Error::InvalidArgument("M must be at least 1".into()));
    }
    if let Some(p) = h_terms.first() {
        if p.n_qubits() != reference.n_qubits() {
            return Err(Error::DimensionMismatch {
                expected: reference.n_qubits(),
                found: p.n_qubits(),
            });
        }
    }
    let all = k_moment_strings(h_terms, k)?;
    let available = all.len();
    let exhausted = m_cap > available;
    if exhausted {
        warn!("requested M = {m_cap} but the {k}-moment expansion has only {available} distinct states");
    }
    let m = m_cap.min(available);
    let chosen = match selection {
        Selection::Ordered => all[..m].to_vec(),
        Selection::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut picks = sample(&mut rng, available - 1, m - 1).into_vec();
            picks.sort_unstable();
            std::iter::once(all[0])
                .chain(picks.into_iter().map(|i| all[i + 1]))
                .collect()
        }
    };
    Ok(KMomentExpansion {
        basis: AnsatzBasis::new(reference, chosen)?,
        available,
        exhausted,
    })
}

/// `{X_j|0…0⟩}`: the one-excitation sector, orthonormal by construction.
pub fn single_excitation_basis(n: usize) -> Result<AnsatzBasis> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one site".into()));
    }
    let paulis = (0..n)
        .map(|j| PauliString::single(n, j, Pauli::X))
        .collect::<Result<Vec<_>>>()?;
    AnsatzBasis::new(Reference::Zero { n_qubits: n }, paulis)
}
