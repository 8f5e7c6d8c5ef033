//! Dense statevector backend: reference-state preparation and exact Pauli
//! expectations.

use std::f64::consts::PI;

use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{C64, ZERO};
use crate::pauli::{PauliString, PauliSum};

pub const MAX_STATE_QUBITS: usize = 12;

const NORM_TOLERANCE: f64 = 1e-10;

/// Layered hardware-efficient circuit: each layer applies `Ry(θ_{l,i})` to
/// every qubit, then a CNOT chain `0→1, 1→2, …, n-2→n-1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitSpec {
    pub n_qubits: usize,
    pub layers: usize,
    /// Row-major `layers × n_qubits` rotation angles in radians.
    pub angles: Vec<f64>,
    /// Seed the angles were drawn from, if they were drawn.
    pub seed: Option<u64>,
}

impl CircuitSpec {
    /// Angles drawn uniformly from `[0, 2π)` with a seeded ChaCha8 stream.
    pub fn random(n_qubits: usize, layers: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let angles = (0..n_qubits * layers)
            .map(|_| rng.gen_range(0.0..2.0 * PI))
            .collect();
        let spec = Self {
            n_qubits,
            layers,
            angles,
            seed: Some(seed),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_angles(n_qubits: usize, layers: usize, angles: Vec<f64>) -> Result<Self> {
        let spec = Self {
            n_qubits,
            layers,
            angles,
            seed: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 || self.layers == 0 {
            return Err(Error::InvalidArgument(
                "circuit needs at least one qubit and one layer".into(),
            ));
        }
        if self.n_qubits > MAX_STATE_QUBITS {
            return Err(Error::TooManyQubits {
                what: "statevector",
                requested: self.n_qubits,
                max: MAX_STATE_QUBITS,
            });
        }
        if self.angles.len() != self.n_qubits * self.layers {
            return Err(Error::InvalidArgument(format!(
                "expected {} angles for {} layers of {} qubits, got {}",
                self.n_qubits * self.layers,
                self.layers,
                self.n_qubits,
                self.angles.len()
            )));
        }
        Ok(())
    }

    pub fn angle(&self, layer: usize, qubit: usize) -> f64 {
        self.angles[layer * self.n_qubits + qubit]
    }
}

/// The state the ansatz Pauli strings act on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Reference {
    Circuit(CircuitSpec),
    /// `|0…0⟩`.
    Zero { n_qubits: usize },
}

impl Reference {
    pub fn n_qubits(&self) -> usize {
        match self {
            Reference::Circuit(spec) => spec.n_qubits,
            Reference::Zero { n_qubits } => *n_qubits,
        }
    }

    pub fn prepare(&self) -> Result<StateVector> {
        match self {
            Reference::Circuit(spec) => build_reference_state(spec),
            Reference::Zero { n_qubits } => StateVector::zero(*n_qubits),
        }
    }
}

/// Normalized `2^n` amplitude vector, qubit 0 in the most significant bit.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Array1<C64>,
}

fn check_state_qubits(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("state needs at least one qubit".into()));
    }
    if n > MAX_STATE_QUBITS {
        return Err(Error::TooManyQubits {
            what: "statevector",
            requested: n,
            max: MAX_STATE_QUBITS,
        });
    }
    Ok(())
}

impl StateVector {
    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::basis_state(n_qubits, 0)
    }

    pub fn basis_state(n_qubits: usize, index: usize) -> Result<Self> {
        check_state_qubits(n_qubits)?;
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} out of range for {n_qubits} qubits"
            )));
        }
        let mut amps = Array1::zeros(dim);
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    /// Wraps amplitudes that must already be normalized.
    pub fn from_amplitudes(n_qubits: usize, amps: Array1<C64>) -> Result<Self> {
        check_state_qubits(n_qubits)?;
        if amps.len() != 1 << n_qubits {
            return Err(Error::DimensionMismatch {
                expected: 1 << n_qubits,
                found: amps.len(),
            });
        }
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::Unnormalized { norm });
        }
        Ok(Self { n_qubits, amps })
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(n_qubits: usize, amps: Array1<C64>) -> Result<Self> {
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Unnormalized { norm });
        }
        Self::from_amplitudes(n_qubits, amps.mapv(|z| z / norm))
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Array1<C64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    fn bit(&self, qubit: usize) -> usize {
        1 << (self.n_qubits - 1 - qubit)
    }

    fn apply_ry(&mut self, qubit: usize, theta: f64) {
        let (s, c) = (theta / 2.0).sin_cos();
        let bit = self.bit(qubit);
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let a0 = self.amps[i];
                let a1 = self.amps[i | bit];
                self.amps[i] = a0 * c - a1 * s;
                self.amps[i | bit] = a0 * s + a1 * c;
            }
        }
    }

    fn apply_cnot(&mut self, control: usize, target: usize) {
        let cb = self.bit(control);
        let tb = self.bit(target);
        for i in 0..self.amps.len() {
            if i & cb != 0 && i & tb == 0 {
                self.amps.swap(i, i | tb);
            }
        }
    }

    fn check_dims(&self, n: usize) -> Result<()> {
        if n != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                found: n,
            });
        }
        Ok(())
    }

    /// `P|v⟩` in `O(2^n)`.
    pub fn apply_pauli(&self, p: &PauliString) -> Result<StateVector> {
        self.check_dims(p.n_qubits())?;
        let (xm, zm) = p.index_masks();
        let mut out = Array1::zeros(self.amps.len());
        for (b, &a) in self.amps.iter().enumerate() {
            let (target, ph) = p.action_with_masks(b, xm, zm);
            out[target] = a * ph.to_complex();
        }
        Ok(StateVector {
            n_qubits: self.n_qubits,
            amps: out,
        })
    }

    /// `O|v⟩` for a Pauli sum; the result is generally not normalized.
    pub fn apply_sum(&self, op: &PauliSum) -> Result<Array1<C64>> {
        self.check_dims(op.n_qubits())?;
        let mut out = Array1::zeros(self.amps.len());
        for &(coeff, ref p) in op.terms() {
            let (xm, zm) = p.index_masks();
            for (b, &a) in self.amps.iter().enumerate() {
                let (target, ph) = p.action_with_masks(b, xm, zm);
                out[target] += coeff * ph.to_complex() * a;
            }
        }
        Ok(out)
    }

    /// `⟨self|other⟩`, conjugating `self`.
    pub fn inner_product(&self, other: &StateVector) -> Result<C64> {
        self.check_dims(other.n_qubits)?;
        Ok(self
            .amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `⟨v|P|v⟩`: the phase of `P` times a real number in `[-1, 1]`.
    pub fn pauli_expectation(&self, p: &PauliString) -> Result<C64> {
        self.check_dims(p.n_qubits())?;
        let (phase, base) = p.hermitian_base();
        Ok(phase.to_complex() * C64::new(self.hermitian_expectation(&base), 0.0))
    }

    /// Real expectation of a phase-free (Hermitian) string.
    pub(crate) fn hermitian_expectation(&self, base: &PauliString) -> f64 {
        if base.is_identity() {
            return 1.0;
        }
        let (xm, zm) = base.index_masks();
        let amps = self.amps.as_slice().expect("contiguous amplitudes");
        let acc: C64 = if amps.len() >= 1 << 10 {
            amps.par_iter()
                .enumerate()
                .map(|(b, &a)| {
                    let (t, ph) = base.action_with_masks(b, xm, zm);
                    amps[t].conj() * ph.to_complex() * a
                })
                .reduce(|| ZERO, |x, y| x + y)
        } else {
            amps.iter()
                .enumerate()
                .map(|(b, &a)| {
                    let (t, ph) = base.action_with_masks(b, xm, zm);
                    amps[t].conj() * ph.to_complex() * a
                })
                .sum()
        };
        acc.re.clamp(-1.0, 1.0)
    }
}

/// Runs the layered `Ry` + CNOT-chain circuit on `|0…0⟩`.
pub fn build_reference_state(spec: &CircuitSpec) -> Result<StateVector> {
    spec.validate()?;
    let mut state = StateVector::zero(spec.n_qubits)?;
    for layer in 0..spec.layers {
        for q in 0..spec.n_qubits {
            state.apply_ry(q, spec.angle(layer, q));
        }
        for q in 0..spec.n_qubits.saturating_sub(1) {
            state.apply_cnot(q, q + 1);
        }
    }
    Ok(state)
}
