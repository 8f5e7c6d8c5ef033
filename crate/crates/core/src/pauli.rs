//! Phased Pauli strings in binary symplectic form and their complex linear
//! combinations.
//!
//! A [`PauliString`] on `n` qubits stores one X bit and one Z bit per qubit
//! plus a phase `i^k`. The operator it denotes is
//!
//! ```text
//! i^k · σ(x_0, z_0) ⊗ σ(x_1, z_1) ⊗ … ⊗ σ(x_{n-1}, z_{n-1})
//! ```
//!
//! with `σ(0,0) = I`, `σ(1,0) = X`, `σ(0,1) = Z`, `σ(1,1) = Y`. Qubit 0 is the
//! leftmost tensor factor, i.e. the most significant bit of a dense basis
//! index. Products of strings are again strings, with the phase tracked
//! exactly as an integer exponent.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest register a [`PauliString`] can describe (one `u64` per component).
pub const MAX_QUBITS: usize = 64;

/// Largest register that may be expanded into a dense matrix.
pub const DENSE_MAX_QUBITS: usize = 12;

/// Coefficients below this magnitude are dropped by [`PauliSum::canonicalize`].
pub const MERGE_TOLERANCE: f64 = 1e-12;

/// A power of the imaginary unit, `i^k` with `k ∈ {0, 1, 2, 3}`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_exponent(k: u32) -> Self {
        Phase((k % 4) as u8)
    }

    pub fn exponent(self) -> u8 {
        self.0
    }

    pub fn conj(self) -> Self {
        Phase((4 - self.0) % 4)
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }

    fn token(self) -> &'static str {
        match self.0 {
            0 => "+",
            1 => "+i",
            2 => "-",
            _ => "-i",
        }
    }
}

impl std::ops::Mul for Phase {
    type Output = Phase;

    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Single-qubit Pauli factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

/// An n-qubit Pauli operator with an exact quartic phase.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    n_qubits: usize,
    x: u64,
    z: u64,
    phase: Phase,
}

fn mask(n: usize) -> u64 {
    if n == MAX_QUBITS {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

fn check_qubits(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("a Pauli string needs at least one qubit".into()));
    }
    if n > MAX_QUBITS {
        return Err(Error::TooManyQubits {
            what: "PauliString",
            requested: n,
            max: MAX_QUBITS,
        });
    }
    Ok(())
}

impl PauliString {
    /// Builds a string from raw masks, bit `q` of each mask belonging to qubit `q`.
    pub fn new(n_qubits: usize, x_bits: u64, z_bits: u64, phase: Phase) -> Result<Self> {
        check_qubits(n_qubits)?;
        if (x_bits | z_bits) & !mask(n_qubits) != 0 {
            return Err(Error::InvalidArgument(format!(
                "bit masks {x_bits:#x}/{z_bits:#x} exceed {n_qubits} qubits"
            )));
        }
        Ok(Self {
            n_qubits,
            x: x_bits,
            z: z_bits,
            phase,
        })
    }

    pub fn identity(n_qubits: usize) -> Result<Self> {
        Self::new(n_qubits, 0, 0, Phase::ONE)
    }

    /// Builds a string from `(qubit, factor)` pairs; unlisted qubits are identity.
    pub fn from_factors(n_qubits: usize, factors: &[(usize, Pauli)]) -> Result<Self> {
        check_qubits(n_qubits)?;
        let mut out = Self::identity(n_qubits)?;
        for &(q, p) in factors {
            if q >= n_qubits {
                return Err(Error::InvalidArgument(format!(
                    "qubit {q} out of range for {n_qubits} qubits"
                )));
            }
            out.set(q, p);
        }
        Ok(out)
    }

    pub fn single(n_qubits: usize, qubit: usize, pauli: Pauli) -> Result<Self> {
        Self::from_factors(n_qubits, &[(qubit, pauli)])
    }

    fn set(&mut self, q: usize, p: Pauli) {
        let (x, z) = p.bits();
        let bit = 1u64 << q;
        self.x = if x { self.x | bit } else { self.x & !bit };
        self.z = if z { self.z | bit } else { self.z & !bit };
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn x_bits(&self) -> u64 {
        self.x
    }

    pub fn z_bits(&self) -> u64 {
        self.z
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    /// `(x_bits, z_bits)`: identifies the string up to phase.
    pub fn key(&self) -> (u64, u64) {
        (self.x, self.z)
    }

    pub fn factor(&self, qubit: usize) -> Pauli {
        let bit = 1u64 << qubit;
        Pauli::from_bits(self.x & bit != 0, self.z & bit != 0)
    }

    pub fn with_phase(mut self, phase: Phase) -> Self {
        self.phase = phase;
        self
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }

    fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    /// Operator product `self · other`, phase included.
    pub fn multiply(&self, other: &PauliString) -> Result<PauliString> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                found: other.n_qubits,
            });
        }
        Ok(self.mul_unchecked(other))
    }

    // Each string is i^k · i^{|x∧z|} X^x Z^z. Moving Z^{z1} past X^{x2}
    // costs (-1)^{|z1∧x2|}; the Y-count of the result is re-absorbed.
    pub(crate) fn mul_unchecked(&self, other: &PauliString) -> PauliString {
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        let exponent = self.phase.0 as u32
            + other.phase.0 as u32
            + self.y_count()
            + other.y_count()
            + 2 * (self.z & other.x).count_ones()
            + 4 * MAX_QUBITS as u32
            - (x & z).count_ones();
        PauliString {
            n_qubits: self.n_qubits,
            x,
            z,
            phase: Phase::from_exponent(exponent),
        }
    }

    /// Conjugate transpose. The unphased base is Hermitian, so only the phase flips.
    pub fn dagger(&self) -> PauliString {
        PauliString {
            phase: self.phase.conj(),
            ..*self
        }
    }

    /// Splits the string into `phase · base` with `base` Hermitian.
    pub fn hermitian_base(&self) -> (Phase, PauliString) {
        (self.phase, self.with_phase(Phase::ONE))
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 0
    }

    /// Masks re-expressed in dense-index bit positions (qubit 0 is the top bit).
    pub(crate) fn index_masks(&self) -> (usize, usize) {
        let n = self.n_qubits as u32;
        let rev = |m: u64| -> usize {
            if m == 0 {
                0
            } else {
                (m.reverse_bits() >> (64 - n)) as usize
            }
        };
        (rev(self.x), rev(self.z))
    }

    /// Image of computational basis state `index`: `P|index⟩ = phase · |target⟩`.
    pub fn action_on_basis_state(&self, index: usize) -> (usize, Phase) {
        let (xm, zm) = self.index_masks();
        self.action_with_masks(index, xm, zm)
    }

    #[inline]
    pub(crate) fn action_with_masks(&self, index: usize, xm: usize, zm: usize) -> (usize, Phase) {
        let sign = 2 * (zm & index).count_ones();
        let k = self.phase.0 as u32 + self.y_count() + sign;
        (index ^ xm, Phase::from_exponent(k))
    }

    /// Dense `2^n × 2^n` matrix. Intended for tests and oracles.
    pub fn to_dense(&self) -> Result<Array2<Complex64>> {
        if self.n_qubits > DENSE_MAX_QUBITS {
            return Err(Error::TooManyQubits {
                what: "dense expansion",
                requested: self.n_qubits,
                max: DENSE_MAX_QUBITS,
            });
        }
        let dim = 1usize << self.n_qubits;
        let (xm, zm) = self.index_masks();
        let mut out = Array2::zeros((dim, dim));
        for col in 0..dim {
            let (row, ph) = self.action_with_masks(col, xm, zm);
            out[[row, col]] = ph.to_complex();
        }
        Ok(out)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ", self.phase)?;
        for q in 0..self.n_qubits {
            write!(f, "{}", self.factor(q).letter())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Accepts `"+i XZIY"`, `"- ZZ"` or a bare `"XZ"` (phase +1).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (phase, letters) = match s.split_once(char::is_whitespace) {
            Some((tok, rest)) => {
                let phase = match tok {
                    "+" | "+1" => Phase::ONE,
                    "+i" | "i" => Phase::I,
                    "-" | "-1" => Phase::MINUS_ONE,
                    "-i" => Phase::MINUS_I,
                    other => return Err(Error::Parse(format!("bad phase token '{other}'"))),
                };
                (phase, rest.trim())
            }
            None => (Phase::ONE, s),
        };
        let n = letters.chars().count();
        let mut out = PauliString::identity(n)
            .map_err(|e| Error::Parse(format!("'{s}': {e}")))?
            .with_phase(phase);
        for (q, c) in letters.chars().enumerate() {
            let p = Pauli::from_letter(c)
                .ok_or_else(|| Error::Parse(format!("bad Pauli letter '{c}' in '{s}'")))?;
            out.set(q, p);
        }
        Ok(out)
    }
}

/// Complex linear combination of phase-free Pauli strings.
///
/// After [`canonicalize`](PauliSum::canonicalize) no two terms share a base
/// string and every negligible coefficient is gone.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum {
    n_qubits: usize,
    terms: Vec<(Complex64, PauliString)>,
}

impl PauliSum {
    pub fn zero(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        Ok(Self {
            n_qubits,
            terms: Vec::new(),
        })
    }

    pub fn identity(n_qubits: usize) -> Result<Self> {
        let mut s = Self::zero(n_qubits)?;
        s.push(Complex64::new(1.0, 0.0), PauliString::identity(n_qubits)?)?;
        Ok(s)
    }

    pub fn from_terms<I>(n_qubits: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Complex64, PauliString)>,
    {
        let mut s = Self::zero(n_qubits)?;
        for (c, p) in terms {
            s.push(c, p)?;
        }
        Ok(s)
    }

    /// Convenience for real-coefficient sums of parsed strings.
    pub fn from_real_terms(n_qubits: usize, terms: &[(f64, &str)]) -> Result<Self> {
        let mut s = Self::zero(n_qubits)?;
        for &(c, text) in terms {
            s.push(Complex64::new(c, 0.0), text.parse()?)?;
        }
        Ok(s)
    }

    /// Appends a term, absorbing the string's phase into the coefficient.
    /// Duplicates are kept until [`canonicalize`](PauliSum::canonicalize).
    pub fn push(&mut self, coeff: Complex64, string: PauliString) -> Result<()> {
        if string.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                found: string.n_qubits(),
            });
        }
        let (phase, base) = string.hermitian_base();
        self.terms.push((coeff * phase.to_complex(), base));
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[(Complex64, PauliString)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Base strings of all terms, in order.
    pub fn strings(&self) -> Vec<PauliString> {
        self.terms.iter().map(|(_, p)| *p).collect()
    }

    /// Merges duplicate strings (first occurrence fixes the position) and
    /// drops coefficients below [`MERGE_TOLERANCE`].
    pub fn canonicalize(&self) -> PauliSum {
        let mut index: HashMap<(u64, u64), usize> = HashMap::new();
        let mut merged: Vec<(Complex64, PauliString)> = Vec::new();
        for &(c, p) in &self.terms {
            match index.get(&p.key()) {
                Some(&k) => merged[k].0 += c,
                None => {
                    index.insert(p.key(), merged.len());
                    merged.push((c, p));
                }
            }
        }
        merged.retain(|(c, _)| c.norm() >= MERGE_TOLERANCE);
        PauliSum {
            n_qubits: self.n_qubits,
            terms: merged,
        }
    }

    pub fn scaled(&self, factor: Complex64) -> PauliSum {
        PauliSum {
            n_qubits: self.n_qubits,
            terms: self.terms.iter().map(|&(c, p)| (c * factor, p)).collect(),
        }
    }

    /// `self + other`, canonicalized.
    pub fn sum(&self, other: &PauliSum) -> Result<PauliSum> {
        self.check_same(other)?;
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        Ok(PauliSum {
            n_qubits: self.n_qubits,
            terms,
        }
        .canonicalize())
    }

    /// Operator product `self · other`, canonicalized.
    pub fn product(&self, other: &PauliSum) -> Result<PauliSum> {
        self.check_same(other)?;
        let mut out = PauliSum::zero(self.n_qubits)?;
        for &(a, p) in &self.terms {
            for &(b, q) in &other.terms {
                out.push(a * b, p.mul_unchecked(&q))?;
            }
        }
        Ok(out.canonicalize())
    }

    pub fn dagger(&self) -> PauliSum {
        PauliSum {
            n_qubits: self.n_qubits,
            terms: self.terms.iter().map(|&(c, p)| (c.conj(), p)).collect(),
        }
    }

    /// Hermitian iff every canonical coefficient is real (within `tol`).
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.canonicalize().terms.iter().all(|(c, _)| c.im.abs() <= tol)
    }

    pub fn to_dense(&self) -> Result<Array2<Complex64>> {
        if self.n_qubits > DENSE_MAX_QUBITS {
            return Err(Error::TooManyQubits {
                what: "dense expansion",
                requested: self.n_qubits,
                max: DENSE_MAX_QUBITS,
            });
        }
        let dim = 1usize << self.n_qubits;
        let mut out = Array2::zeros((dim, dim));
        for &(c, p) in &self.terms {
            let (xm, zm) = p.index_masks();
            for col in 0..dim {
                let (row, ph) = p.action_with_masks(col, xm, zm);
                out[[row, col]] += c * ph.to_complex();
            }
        }
        Ok(out)
    }

    fn check_same(&self, other: &PauliSum) -> Result<()> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                found: other.n_qubits,
            });
        }
        Ok(())
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (k, (c, p)) in self.terms.iter().enumerate() {
            if k > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "({}{:+}i) ", c.re, c.im)?;
            for q in 0..self.n_qubits {
                write!(f, "{}", p.factor(q).letter())?;
            }
        }
        Ok(())
    }
}
