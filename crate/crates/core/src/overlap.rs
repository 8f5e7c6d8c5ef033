//! Overlap matrices `⟨ψ_i|O|ψ_j⟩` over a Pauli-generated basis.
//!
//! For `|ψ_j⟩ = P_j|ψ⟩` and `O = Σ_t c_t T_t`, every entry reduces to
//!
//! ```text
//! Σ_t c_t · phase(P_i T_t P_j) · ⟨ψ|base(P_i T_t P_j)|ψ⟩
//! ```
//!
//! so the only measured quantities are real expectations of Hermitian Pauli
//! strings on the single reference state. Each distinct string is a "job";
//! jobs are evaluated once per [`OverlapEngine`] and shared by every matrix.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::AnsatzBasis;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_part, C64, ZERO};
use crate::pauli::{PauliString, PauliSum, Phase};
use crate::statevector::{Reference, StateVector};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeasurementBackend {
    #[default]
    Exact,
    /// Each job is estimated from `shots` single-shot ±1 outcomes.
    Sampled { shots: u64, seed: u64 },
}

// splitmix64 finalizer; decorrelates per-job streams derived from one seed.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn job_seed(seed: u64, key: (u64, u64)) -> u64 {
    mix(mix(seed ^ mix(key.0)) ^ key.1)
}

/// Mean of `shots` ±1 outcomes with `P(+1) = (1 + exact)/2`.
pub fn sample_outcomes(exact: f64, shots: u64, seed: u64) -> Result<f64> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be at least 1".into()));
    }
    let p = ((1.0 + exact) / 2.0).clamp(0.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ups = Binomial::new(shots, p)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?
        .sample(&mut rng);
    Ok(2.0 * ups as f64 / shots as f64 - 1.0)
}

/// Finite-shot estimate of `⟨ψ|base|ψ⟩` for a Hermitian string.
pub fn sampled_expectation(base: &PauliString, reference: &Reference, shots: u64, seed: u64) -> Result<f64> {
    if base.phase() != Phase::ONE {
        return Err(Error::InvalidArgument(format!("{base} is not a Hermitian base string")));
    }
    let psi = reference.prepare()?;
    if psi.n_qubits() != base.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: psi.n_qubits(),
            found: base.n_qubits(),
        });
    }
    sample_outcomes(psi.hermitian_expectation(base), shots, seed)
}

/// Evaluates overlap matrices, caching one value per distinct Hermitian string.
pub struct OverlapEngine {
    psi: StateVector,
    backend: MeasurementBackend,
    cache: HashMap<(u64, u64), f64>,
    naive_jobs: usize,
}

impl OverlapEngine {
    pub fn new(reference: &Reference, backend: MeasurementBackend) -> Result<Self> {
        if let MeasurementBackend::Sampled { shots: 0, .. } = backend {
            return Err(Error::InvalidArgument("shots must be at least 1".into()));
        }
        Ok(Self {
            psi: reference.prepare()?,
            backend,
            cache: HashMap::new(),
            naive_jobs: 0,
        })
    }

    pub fn backend(&self) -> MeasurementBackend {
        self.backend
    }

    /// Distinct Hermitian strings measured so far.
    pub fn distinct_jobs(&self) -> usize {
        self.cache.len()
    }

    /// Jobs a cache-free evaluation would have run (`M² · terms` per matrix).
    pub fn naive_jobs(&self) -> usize {
        self.naive_jobs
    }

    fn check_basis(&self, basis: &AnsatzBasis, n: usize) -> Result<()> {
        if basis.n_qubits() != self.psi.n_qubits() {
            return Err(Error::DimensionMismatch {
                expected: self.psi.n_qubits(),
                found: basis.n_qubits(),
            });
        }
        if n != self.psi.n_qubits() {
            return Err(Error::DimensionMismatch {
                expected: self.psi.n_qubits(),
                found: n,
            });
        }
        Ok(())
    }

    fn ensure_jobs(&mut self, keys: HashSet<(u64, u64)>) -> Result<()> {
        let n = self.psi.n_qubits();
        let missing: Vec<(u64, u64)> = keys.into_iter().filter(|k| !self.cache.contains_key(k)).collect();
        let psi = &self.psi;
        let backend = self.backend;
        let values = missing
            .par_iter()
            .map(|&key| {
                let base = PauliString::new(n, key.0, key.1, Phase::ONE)?;
                let exact = psi.hermitian_expectation(&base);
                let value = match backend {
                    MeasurementBackend::Exact => exact,
                    MeasurementBackend::Sampled { shots, seed } => {
                        sample_outcomes(exact, shots, job_seed(seed, key))?
                    }
                };
                Ok((key, value))
            })
            .collect::<Result<Vec<_>>>()?;
        self.cache.extend(values);
        Ok(())
    }

    /// `M × M` matrix of `⟨ψ_i|op|ψ_j⟩`.
    pub fn operator_overlaps(&mut self, basis: &AnsatzBasis, op: &PauliSum) -> Result<Array2<C64>> {
        self.check_basis(basis, op.n_qubits())?;
        let paulis = basis.paulis();
        let m = paulis.len();
        // P_i† T_t for every (i, t); basis strings carry phase +1.
        let left: Vec<Vec<(C64, PauliString)>> = paulis
            .iter()
            .map(|pi| {
                op.terms()
                    .iter()
                    .map(|&(c, t)| (c, pi.dagger().mul_unchecked(&t)))
                    .collect()
            })
            .collect();

        let mut keys = HashSet::new();
        for row in &left {
            for &(_, lt) in row {
                for pj in paulis {
                    keys.insert(lt.mul_unchecked(pj).key());
                }
            }
        }
        self.naive_jobs += m * m * op.len();
        self.ensure_jobs(keys)?;

        let cache = &self.cache;
        let rows: Vec<Vec<C64>> = left
            .par_iter()
            .map(|terms| {
                paulis
                    .iter()
                    .map(|pj| {
                        terms
                            .iter()
                            .map(|&(c, lt)| {
                                let (phase, base) = lt.mul_unchecked(pj).hermitian_base();
                                c * phase.to_complex() * cache[&base.key()]
                            })
                            .sum()
                    })
                    .collect()
            })
            .collect();
        Ok(Array2::from_shape_fn((m, m), |(i, j)| rows[i][j]))
    }

    /// Gram matrix `E_ij = ⟨ψ_i|ψ_j⟩`.
    pub fn gram(&mut self, basis: &AnsatzBasis) -> Result<Array2<C64>> {
        self.operator_overlaps(basis, &PauliSum::identity(basis.n_qubits())?)
    }

    /// Blocks `⟨ψ_k|W_m† W_n|ψ_j⟩` for a list of unitaries `W`.
    pub fn lcu_blocks(&mut self, basis: &AnsatzBasis, unitaries: &[PauliString]) -> Result<LcuBlocks> {
        let n = basis.n_qubits();
        let mut blocks = Vec::with_capacity(unitaries.len() * unitaries.len());
        for wm in unitaries {
            for wn in unitaries {
                let mut op = PauliSum::zero(n)?;
                op.push(C64::new(1.0, 0.0), wm.dagger().multiply(wn)?)?;
                blocks.push(self.operator_overlaps(basis, &op)?);
            }
        }
        Ok(LcuBlocks {
            unitaries: unitaries.to_vec(),
            blocks,
        })
    }

    /// All matrices for one problem: `E`, `D` from `h`, `R_n`/`F_n` from the
    /// jump operators and `S_k` from `extra_ops`.
    pub fn overlap_set(
        &mut self,
        basis: &AnsatzBasis,
        h: &PauliSum,
        lindblads: &[(f64, PauliSum)],
        extra_ops: &[PauliSum],
    ) -> Result<OverlapSet> {
        if let Some((g, _)) = lindblads.iter().find(|(g, _)| !(*g >= 0.0)) {
            return Err(Error::InvalidArgument(format!("negative dissipation rate {g}")));
        }
        let raw_e = self.gram(basis)?;
        let d = self.operator_overlaps(basis, h)?;
        let mut r = Vec::with_capacity(lindblads.len());
        let mut raw_f = Vec::with_capacity(lindblads.len());
        for (_, l) in lindblads {
            r.push(self.operator_overlaps(basis, l)?);
            let ldl = l.dagger().product(l)?;
            raw_f.push(self.operator_overlaps(basis, &ldl)?);
        }
        let s = extra_ops
            .iter()
            .map(|op| self.operator_overlaps(basis, op))
            .collect::<Result<Vec<_>>>()?;

        let sampled = matches!(self.backend, MeasurementBackend::Sampled { .. });
        let (e, f, raw_e, raw_f) = if sampled {
            let e = hermitian_part(&raw_e.view());
            let f = raw_f.iter().map(|m| hermitian_part(&m.view())).collect();
            (e, f, Some(raw_e), raw_f)
        } else {
            (raw_e, raw_f, None, Vec::new())
        };
        Ok(OverlapSet {
            basis_id: basis.id(),
            rates: lindblads.iter().map(|(g, _)| *g).collect(),
            e,
            d,
            r,
            f,
            s,
            g: None,
            v_blocks: None,
            raw_e,
            raw_f,
        })
    }
}

/// Measured blocks `⟨ψ_k|W_m† W_n|ψ_j⟩`, stored row-major over `(m, n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LcuBlocks {
    pub unitaries: Vec<PauliString>,
    pub blocks: Vec<Array2<C64>>,
}

impl LcuBlocks {
    pub fn block(&self, m: usize, n: usize) -> &Array2<C64> {
        &self.blocks[m * self.unitaries.len() + n]
    }

    /// `Σ_{m,n} conj(left_m) · right_n · block(m, n)`, i.e. the overlaps of
    /// `(Σ left_m W_m)† (Σ right_n W_n)`.
    pub fn assemble(&self, left: &[C64], right: &[C64]) -> Result<Array2<C64>> {
        let r = self.unitaries.len();
        if left.len() != r || right.len() != r {
            return Err(Error::DimensionMismatch {
                expected: r,
                found: if left.len() != r { left.len() } else { right.len() },
            });
        }
        let dim = self.blocks.first().map_or(0, |b| b.nrows());
        let mut out = Array2::zeros((dim, dim));
        for (m, lm) in left.iter().enumerate() {
            for (n, rn) in right.iter().enumerate() {
                let w = lm.conj() * rn;
                if w != ZERO {
                    out.scaled_add(w, self.block(m, n));
                }
            }
        }
        Ok(out)
    }
}

/// Everything the classical evolvers consume.
#[derive(Clone, Debug, PartialEq)]
pub struct OverlapSet {
    pub basis_id: u64,
    /// Dissipation rates `γ_n` matching `r` and `f`.
    pub rates: Vec<f64>,
    pub e: Array2<C64>,
    pub d: Array2<C64>,
    pub r: Vec<Array2<C64>>,
    pub f: Vec<Array2<C64>>,
    pub s: Vec<Array2<C64>>,
    /// Overlaps of the state-preparation Hamiltonian.
    pub g: Option<Array2<C64>>,
    pub v_blocks: Option<LcuBlocks>,
    /// Sampled mode keeps the un-symmetrized estimates here.
    pub raw_e: Option<Array2<C64>>,
    pub raw_f: Vec<Array2<C64>>,
}

/// Convenience wrapper: a fresh engine, then [`OverlapEngine::overlap_set`].
pub fn compute_overlap_set(
    basis: &AnsatzBasis,
    h: &PauliSum,
    lindblads: &[(f64, PauliSum)],
    extra_ops: &[PauliSum],
    backend: MeasurementBackend,
) -> Result<OverlapSet> {
    OverlapEngine::new(basis.reference(), backend)?.overlap_set(basis, h, lindblads, extra_ops)
}

/// Writes a square matrix: first line `M`, then one `re im` pair per entry in
/// row-major order.
pub fn write_matrix(path: &Path, m: &Array2<C64>) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{}", m.nrows())?;
    for z in m.iter() {
        writeln!(w, "{:?} {:?}", z.re, z.im)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix(path: &Path) -> Result<Array2<C64>> {
    let text = fs::read_to_string(path)?;
    let bad = |msg: &str| Error::Parse(format!("{}: {msg}", path.display()));
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let m: usize = lines
        .next()
        .ok_or_else(|| bad("empty file"))?
        .trim()
        .parse()
        .map_err(|_| bad("bad dimension line"))?;
    let mut data = Vec::with_capacity(m * m);
    for line in lines {
        let mut it = line.split_whitespace();
        let (Some(re), Some(im), None) = (it.next(), it.next(), it.next()) else {
            return Err(bad(&format!("bad entry line '{line}'")));
        };
        let re: f64 = re.parse().map_err(|_| bad("bad real part"))?;
        let im: f64 = im.parse().map_err(|_| bad("bad imaginary part"))?;
        data.push(C64::new(re, im));
    }
    if data.len() != m * m {
        return Err(bad(&format!("expected {} entries, found {}", m * m, data.len())));
    }
    Array2::from_shape_vec((m, m), data).map_err(|e| bad(&e.to_string()))
}

impl OverlapSet {
    pub fn dim(&self) -> usize {
        self.e.nrows()
    }

    /// One matrix file per entry plus `meta.txt` (basis id, rates, unitaries).
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut meta = format!("basis_id {:#x}\n", self.basis_id);
        for g in &self.rates {
            meta.push_str(&format!("rate {g:?}\n"));
        }
        write_matrix(&dir.join("E.txt"), &self.e)?;
        write_matrix(&dir.join("D.txt"), &self.d)?;
        for (n, (r, f)) in self.r.iter().zip(&self.f).enumerate() {
            write_matrix(&dir.join(format!("R_{n}.txt")), r)?;
            write_matrix(&dir.join(format!("F_{n}.txt")), f)?;
        }
        for (k, s) in self.s.iter().enumerate() {
            write_matrix(&dir.join(format!("S_{k}.txt")), s)?;
        }
        if let Some(g) = &self.g {
            write_matrix(&dir.join("G.txt"), g)?;
        }
        if let Some(v) = &self.v_blocks {
            let r = v.unitaries.len();
            for u in &v.unitaries {
                meta.push_str(&format!("unitary {u}\n"));
            }
            for m in 0..r {
                for n in 0..r {
                    write_matrix(&dir.join(format!("V_{m}_{n}.txt")), v.block(m, n))?;
                }
            }
        }
        if let Some(e) = &self.raw_e {
            write_matrix(&dir.join("E_raw.txt"), e)?;
        }
        for (n, f) in self.raw_f.iter().enumerate() {
            write_matrix(&dir.join(format!("F_raw_{n}.txt")), f)?;
        }
        fs::write(dir.join("meta.txt"), meta)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let meta = fs::read_to_string(dir.join("meta.txt"))?;
        let mut basis_id = None;
        let mut rates = Vec::new();
        let mut unitaries = Vec::new();
        for line in meta.lines() {
            match line.split_once(' ') {
                Some(("basis_id", v)) => {
                    basis_id = Some(
                        u64::from_str_radix(v.trim().trim_start_matches("0x"), 16)
                            .map_err(|_| Error::Parse(format!("bad basis id '{v}'")))?,
                    )
                }
                Some(("rate", v)) => rates.push(
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Parse(format!("bad rate '{v}'")))?,
                ),
                Some(("unitary", v)) => unitaries.push(v.parse::<PauliString>()?),
                _ if line.trim().is_empty() => {}
                _ => return Err(Error::Parse(format!("unrecognized meta line '{line}'"))),
            }
        }
        let basis_id = basis_id.ok_or_else(|| Error::Parse("meta.txt lacks basis_id".into()))?;
        let read_opt = |name: String| -> Result<Option<Array2<C64>>> {
            let path = dir.join(name);
            if path.exists() {
                read_matrix(&path).map(Some)
            } else {
                Ok(None)
            }
        };
        let e = read_matrix(&dir.join("E.txt"))?;
        let d = read_matrix(&dir.join("D.txt"))?;
        let mut r = Vec::new();
        let mut f = Vec::new();
        for n in 0..rates.len() {
            r.push(read_matrix(&dir.join(format!("R_{n}.txt")))?);
            f.push(read_matrix(&dir.join(format!("F_{n}.txt")))?);
        }
        let mut s = Vec::new();
        while let Some(m) = read_opt(format!("S_{}.txt", s.len()))? {
            s.push(m);
        }
        let mut raw_f = Vec::new();
        while let Some(m) = read_opt(format!("F_raw_{}.txt", raw_f.len()))? {
            raw_f.push(m);
        }
        let v_blocks = if unitaries.is_empty() {
            None
        } else {
            let mut blocks = Vec::new();
            for m in 0..unitaries.len() {
                for n in 0..unitaries.len() {
                    blocks.push(read_matrix(&dir.join(format!("V_{m}_{n}.txt")))?);
                }
            }
            Some(LcuBlocks { unitaries, blocks })
        };
        let out = OverlapSet {
            basis_id,
            rates,
            g: read_opt("G.txt".into())?,
            raw_e: read_opt("E_raw.txt".into())?,
            e,
            d,
            r,
            f,
            s,
            v_blocks,
            raw_f,
        };
        let dim = out.dim();
        let all = [&out.d]
            .into_iter()
            .chain(&out.r)
            .chain(&out.f)
            .chain(&out.s)
            .chain(out.g.as_ref());
        for m in all {
            if m.nrows() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: m.nrows(),
                });
            }
        }
        Ok(out)
    }
}
