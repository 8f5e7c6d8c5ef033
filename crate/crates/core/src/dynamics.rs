//! Classical integration of the coefficient equations.
//!
//! All evolvers work only with measured overlap matrices. Singular or
//! ill-conditioned Gram matrices are handled by a spectral pseudo-inverse that
//! discards eigenvalues below `pinv_cutoff · max|λ|`.
//!
//! | problem                | state | equation                                              |
//! |------------------------|-------|-------------------------------------------------------|
//! | Lindblad               | β     | `E β̇ E = -i(DβE - EβD) + Σ γ(RβR† - ½FβE - ½EβF)`    |
//! | imaginary time         | β     | `E β̇ E = -(DβE + EβD)`                                |
//! | generalized evolution  | α     | `V(t) α̇ = D(α, t)`                                    |
//! | nonlinear              | α     | `E α̇ = -i (Σ_k f_k(t, α†S¹α, …) S^k) α`              |

use std::sync::Arc;

use ndarray::{Array, Array1, Array2, Dimension};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hybrid::{quadratic_form, HybridDensityMatrix, HybridPureState};
use crate::linalg::{self, c, dagger, hermiticity_defect, C64, I, ZERO};
use crate::overlap::{LcuBlocks, OverlapEngine, OverlapSet};
use crate::ansatz::AnsatzBasis;
use crate::pauli::{PauliString, PauliSum};

const HERMITIAN_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Rk4,
    Euler,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    /// Step size in units of `1/J`.
    pub dt: f64,
    pub t_final: f64,
    pub method: Method,
    /// Relative eigenvalue threshold of the pseudo-inverse.
    pub pinv_cutoff: f64,
    /// Renormalize the state after every step.
    pub renormalize: bool,
    /// Record every n-th step (the initial and final states are always kept).
    pub output_every: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_final: 1.0,
            method: Method::Rk4,
            pinv_cutoff: 1e-8,
            renormalize: true,
            output_every: 100,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.t_final > 0.0) || self.dt > self.t_final {
            return Err(Error::InvalidArgument(format!(
                "need 0 < dt <= t_final, got dt = {}, t_final = {}",
                self.dt, self.t_final
            )));
        }
        if !(self.pinv_cutoff > 0.0 && self.pinv_cutoff < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "pinv_cutoff must lie in (0, 1), got {}",
                self.pinv_cutoff
            )));
        }
        if self.output_every == 0 {
            return Err(Error::InvalidArgument("output_every must be at least 1".into()));
        }
        Ok(())
    }

    /// Step count; a trailing fractional step is shortened to land on `t_final`.
    pub fn n_steps(&self) -> usize {
        ((self.t_final / self.dt) - 1e-9).ceil().max(1.0) as usize
    }
}

/// States sampled along an integration.
#[derive(Clone, Debug)]
pub struct Trajectory<S> {
    pub times: Vec<f64>,
    pub states: Vec<S>,
}

impl<S> Trajectory<S> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, &S)> {
        self.times.last().copied().zip(self.states.last())
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &S)> {
        self.times.iter().copied().zip(self.states.iter())
    }
}

/// Spectral pseudo-inverse of a Hermitian matrix: eigenvalues with
/// `|λ| < cutoff · max|λ|` are treated as zero.
pub fn regularized_pinv(a: &Array2<C64>, cutoff: f64) -> Result<Array2<C64>> {
    Ok(SpectralPinv::new(a, cutoff)?.inverse)
}

/// Pseudo-inverse together with the spectrum it was built from.
#[derive(Clone, Debug)]
pub struct SpectralPinv {
    pub inverse: Array2<C64>,
    pub eigenvalues: Array1<f64>,
    pub eigenvectors: Array2<C64>,
    /// Indices of the retained eigenvalues.
    pub retained: Vec<usize>,
}

impl SpectralPinv {
    pub fn new(a: &Array2<C64>, cutoff: f64) -> Result<Self> {
        let defect = hermiticity_defect(&a.view());
        if defect > HERMITIAN_TOLERANCE {
            return Err(Error::NotHermitian { deviation: defect });
        }
        let (w, v) = linalg::eigh(&a.view())?;
        let top = w.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
        let retained: Vec<usize> = (0..w.len())
            .filter(|&k| top > 0.0 && w[k].abs() >= cutoff * top)
            .collect();
        if retained.is_empty() {
            return Err(Error::SingularBasis(format!(
                "no eigenvalue above cutoff {cutoff:e} (largest |λ| = {top:e})"
            )));
        }
        let inverse = linalg::spectral_map(&w, &v, |lam| {
            if top > 0.0 && lam.abs() >= cutoff * top {
                1.0 / lam
            } else {
                0.0
            }
        });
        Ok(Self {
            inverse,
            eigenvalues: w,
            eigenvectors: v,
            retained,
        })
    }

    pub fn rank(&self) -> usize {
        self.retained.len()
    }
}

fn step<D: Dimension>(
    method: Method,
    t: f64,
    dt: f64,
    y: &Array<C64, D>,
    rhs: &mut impl FnMut(f64, &Array<C64, D>) -> Result<Array<C64, D>>,
) -> Result<Array<C64, D>> {
    match method {
        Method::Euler => {
            let k1 = rhs(t, y)?;
            Ok(y + &(k1 * c(dt)))
        }
        Method::Rk4 => {
            let h = dt / 2.0;
            let k1 = rhs(t, y)?;
            let k2 = rhs(t + h, &(y + &(&k1 * c(h))))?;
            let k3 = rhs(t + h, &(y + &(&k2 * c(h))))?;
            let k4 = rhs(t + dt, &(y + &(&k3 * c(dt))))?;
            let incr = k1 + &(k2 * c(2.0)) + &(k3 * c(2.0)) + &k4;
            Ok(y + &(incr * c(dt / 6.0)))
        }
    }
}

/// Fixed-step driver: steps, applies `post` after each step, records output.
fn integrate<D: Dimension>(
    cfg: &IntegratorConfig,
    y0: Array<C64, D>,
    mut rhs: impl FnMut(f64, &Array<C64, D>) -> Result<Array<C64, D>>,
    mut post: impl FnMut(f64, &mut Array<C64, D>) -> Result<()>,
) -> Result<(Vec<f64>, Vec<Array<C64, D>>)> {
    cfg.validate()?;
    let n = cfg.n_steps();
    let mut times = vec![0.0];
    let mut states = vec![y0.clone()];
    let mut y = y0;
    for k in 0..n {
        let t = k as f64 * cfg.dt;
        let dt = if k + 1 == n { cfg.t_final - t } else { cfg.dt };
        y = step(cfg.method, t, dt, &y, &mut rhs)?;
        let t_next = if k + 1 == n { cfg.t_final } else { (k + 1) as f64 * cfg.dt };
        post(t_next, &mut y)?;
        if (k + 1) % cfg.output_every == 0 || k + 1 == n {
            times.push(t_next);
            states.push(y.clone());
        }
    }
    Ok((times, states))
}

fn check_dim(m: &Array2<C64>, dim: usize) -> Result<()> {
    if m.nrows() != dim || m.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: m.nrows(),
        });
    }
    Ok(())
}

fn density_trajectory(
    times: Vec<f64>,
    betas: Vec<Array2<C64>>,
    basis_id: u64,
) -> Result<Trajectory<HybridDensityMatrix>> {
    let states = betas
        .into_iter()
        .map(|b| HybridDensityMatrix::new(b, basis_id))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory { times, states })
}

fn pure_trajectory(times: Vec<f64>, alphas: Vec<Array1<C64>>, basis_id: u64) -> Trajectory<HybridPureState> {
    Trajectory {
        times,
        states: alphas.into_iter().map(|a| HybridPureState::new(a, basis_id)).collect(),
    }
}

/// Hermitize, then (optionally) rescale to `Tr(βE) = 1`.
fn finish_density_step(beta: &mut Array2<C64>, e: &Array2<C64>, renormalize: bool, t: f64) -> Result<()> {
    *beta = linalg::hermitian_part(&beta.view());
    if renormalize {
        let tr = linalg::trace_of_product(&beta.view(), &e.view());
        if tr.norm() < crate::hybrid::COLLAPSE_THRESHOLD || !tr.re.is_finite() {
            return Err(Error::TraceCollapse { time: t, trace: tr.norm() });
        }
        let inv = 1.0 / tr.re;
        beta.mapv_inplace(|z| z * inv);
    }
    Ok(())
}

/// Open-system evolution of `β` under the projected Lindblad equation.
///
/// `rates[n]` multiplies the `n`-th jump operator whose overlaps are
/// `ov.r[n]` and `ov.f[n]`. The update is `β̇ = E⁺ · RHS · E⁺`, evaluated as
///
/// ```text
/// β̇ = (E⁺K) β (E E⁺) + (E⁺E) β (K' E⁺) + Σ_n γ_n (E⁺R_n) β (E⁺R_n)†
/// K = -iD - ½Σγ_n F_n,   K' = iD - ½Σγ_n F_n
/// ```
///
/// which is the same expression with the constant factors folded together.
pub fn evolve_lindblad(
    ov: &OverlapSet,
    beta0: &HybridDensityMatrix,
    rates: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Trajectory<HybridDensityMatrix>> {
    if beta0.basis_id() != ov.basis_id {
        return Err(Error::BasisMismatch {
            expected: ov.basis_id,
            found: beta0.basis_id(),
        });
    }
    if rates.len() != ov.r.len() || rates.len() != ov.f.len() {
        return Err(Error::DimensionMismatch {
            expected: ov.r.len(),
            found: rates.len(),
        });
    }
    if let Some(g) = rates.iter().find(|g| !(**g >= 0.0)) {
        return Err(Error::InvalidArgument(format!("negative dissipation rate {g}")));
    }
    let m = ov.dim();
    check_dim(beta0.beta(), m)?;
    for mat in [&ov.d].into_iter().chain(&ov.r).chain(&ov.f) {
        check_dim(mat, m)?;
    }

    let pinv = regularized_pinv(&ov.e, cfg.pinv_cutoff)?;
    let right_proj = ov.e.dot(&pinv);
    let left_proj = pinv.dot(&ov.e);
    let mut f_total = Array2::<C64>::zeros((m, m));
    for (g, f) in rates.iter().zip(&ov.f) {
        f_total.scaled_add(c(0.5 * g), f);
    }
    let k_left = &ov.d * (-I) - &f_total;
    let k_right = &ov.d * I - &f_total;
    let a = pinv.dot(&k_left);
    let b = k_right.dot(&pinv);
    let jumps: Vec<(Array2<C64>, Array2<C64>)> = rates
        .iter()
        .zip(&ov.r)
        .filter(|(g, _)| **g > 0.0)
        .map(|(g, r)| {
            let j = pinv.dot(r) * c(g.sqrt());
            let jd = dagger(&j.view());
            (j, jd)
        })
        .collect();

    let rhs = |_t: f64, beta: &Array2<C64>| -> Result<Array2<C64>> {
        let mut out = a.dot(beta).dot(&right_proj);
        out += &left_proj.dot(beta).dot(&b);
        for (j, jd) in &jumps {
            out += &j.dot(beta).dot(jd);
        }
        Ok(out)
    };
    let e = &ov.e;
    let post = |t: f64, beta: &mut Array2<C64>| finish_density_step(beta, e, cfg.renormalize, t);
    let (times, betas) = integrate(cfg, beta0.beta().clone(), rhs, post)?;
    density_trajectory(times, betas, beta0.basis_id())
}

/// Imaginary-time evolution `E β̇ E = -(DβE + EβD)`; `τ` maps to `T = 1/(2τ)`.
pub fn evolve_imaginary(
    e: &Array2<C64>,
    d: &Array2<C64>,
    beta0: &HybridDensityMatrix,
    cfg: &IntegratorConfig,
) -> Result<Trajectory<HybridDensityMatrix>> {
    let m = e.nrows();
    check_dim(e, m)?;
    check_dim(d, m)?;
    check_dim(beta0.beta(), m)?;
    let pinv = regularized_pinv(e, cfg.pinv_cutoff)?;
    let right_proj = e.dot(&pinv);
    let left_proj = pinv.dot(e);
    let a = pinv.dot(d);
    let b = d.dot(&pinv);
    let rhs = |_t: f64, beta: &Array2<C64>| -> Result<Array2<C64>> {
        let mut out = a.dot(beta).dot(&right_proj);
        out += &left_proj.dot(beta).dot(&b);
        out.mapv_inplace(|z| -z);
        Ok(out)
    };
    let post = |t: f64, beta: &mut Array2<C64>| finish_density_step(beta, e, cfg.renormalize, t);
    let (times, betas) = integrate(cfg, beta0.beta().clone(), rhs, post)?;
    density_trajectory(times, betas, beta0.basis_id())
}

/// Temperature reached after imaginary time `tau`.
pub fn temperature_at(tau: f64) -> f64 {
    if tau == 0.0 {
        f64::INFINITY
    } else {
        1.0 / (2.0 * tau)
    }
}

/// `β_I = E⁺ / Tr(E⁺E)`: the in-span approximation of the maximally mixed state.
pub fn totally_mixed_init(e: &Array2<C64>, cutoff: f64, basis_id: u64) -> Result<HybridDensityMatrix> {
    let pinv = regularized_pinv(e, cutoff)?;
    let norm = linalg::trace_of_product(&pinv.view(), &e.view()).re;
    HybridDensityMatrix::new(pinv.mapv(|z| z / norm), basis_id)
}

/// Minimizes `α†Gα` subject to `α†Eα = 1` on the retained span of `E`.
///
/// Returns the normalized minimizer and the minimal value.
pub fn iqae_ground_state(
    g: &Array2<C64>,
    e: &Array2<C64>,
    cutoff: f64,
    basis_id: u64,
) -> Result<(HybridPureState, f64)> {
    let m = e.nrows();
    check_dim(g, m)?;
    let spec = SpectralPinv::new(e, cutoff)?;
    // Columns u_k / √λ_k for retained k: an E-orthonormal frame of the span.
    let mut frame = Array2::zeros((m, spec.rank()));
    for (col, &k) in spec.retained.iter().enumerate() {
        let lam = spec.eigenvalues[k];
        if lam <= 0.0 {
            continue;
        }
        let s = 1.0 / lam.sqrt();
        frame
            .column_mut(col)
            .assign(&spec.eigenvectors.column(k).mapv(|z| z * s));
    }
    let reduced = dagger(&frame.view()).dot(g).dot(&frame);
    let (w, v) = linalg::eigh(&reduced.view())?;
    let alpha = frame.dot(&v.column(0));
    let mut state = HybridPureState::new(alpha, basis_id);
    state.normalize(e)?;
    Ok((state, w[0]))
}

/// `V(t) α̇ = D(α, t)` with `α̇ = V(t)⁺ D(α, t)`.
///
/// `metric(t)` returns `V(t)` and `drive(α, t)` returns the vector `D(α, t)`.
/// When `cfg.renormalize` is set, `gram` (required then) fixes `α†Eα = 1`.
pub fn evolve_generalized<V, F>(
    metric: V,
    drive: F,
    alpha0: &HybridPureState,
    gram: Option<&Array2<C64>>,
    cfg: &IntegratorConfig,
) -> Result<Trajectory<HybridPureState>>
where
    V: Fn(f64) -> Result<Array2<C64>>,
    F: Fn(&Array1<C64>, f64) -> Result<Array1<C64>>,
{
    if cfg.renormalize && gram.is_none() {
        return Err(Error::InvalidArgument(
            "renormalization requested without a Gram matrix".into(),
        ));
    }
    let cutoff = cfg.pinv_cutoff;
    let rhs = |t: f64, alpha: &Array1<C64>| -> Result<Array1<C64>> {
        let v = metric(t)?;
        check_dim(&v, alpha.len())?;
        let d = drive(alpha, t)?;
        Ok(regularized_pinv(&v, cutoff)?.dot(&d))
    };
    let post = |t: f64, alpha: &mut Array1<C64>| -> Result<()> {
        if let (true, Some(e)) = (cfg.renormalize, gram) {
            renormalize_alpha(alpha, e, t)?;
        }
        Ok(())
    };
    let (times, alphas) = integrate(cfg, alpha0.alpha().clone(), rhs, post)?;
    Ok(pure_trajectory(times, alphas, alpha0.basis_id()))
}

fn renormalize_alpha(alpha: &mut Array1<C64>, e: &Array2<C64>, t: f64) -> Result<()> {
    let n = quadratic_form(alpha, e).re;
    if n < crate::hybrid::COLLAPSE_THRESHOLD || !n.is_finite() {
        return Err(Error::TraceCollapse { time: t, trace: n });
    }
    let s = 1.0 / n.sqrt();
    alpha.mapv_inplace(|z| z * s);
    Ok(())
}

/// Coefficient callback `(t, [⟨v|U_k|v⟩]) → [f_k]`.
pub type CoefficientFn = dyn Fn(f64, &[C64]) -> Vec<C64> + Send + Sync;

/// A nonlinear generator `A(t, v) = Σ_k f_k(t, ⟨v|U_1|v⟩, …) U_k`.
///
/// The evolver integrates `d|v⟩/dt = -i A(t, v)|v⟩`: the `-i` is applied by
/// [`evolve_nonlinear`], so `ops` and `coefficients` describe a
/// Schrödinger-type (Hermitian for real `f_k`) generator.
#[derive(Clone)]
pub struct NonlinearSpec {
    pub ops: Vec<PauliSum>,
    pub coefficients: Arc<CoefficientFn>,
}

impl std::fmt::Debug for NonlinearSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NonlinearSpec").field("ops", &self.ops).finish_non_exhaustive()
    }
}

/// `E α̇ = -i (Σ_k f_k(t, α†S¹α, …, α†Sʳα) S^k) α`.
pub fn evolve_nonlinear(
    e: &Array2<C64>,
    s: &[Array2<C64>],
    spec: &NonlinearSpec,
    alpha0: &HybridPureState,
    cfg: &IntegratorConfig,
) -> Result<Trajectory<HybridPureState>> {
    let m = e.nrows();
    check_dim(e, m)?;
    for sk in s {
        check_dim(sk, m)?;
    }
    if alpha0.dim() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: alpha0.dim(),
        });
    }
    let pinv = regularized_pinv(e, cfg.pinv_cutoff)?;
    let rhs = |t: f64, alpha: &Array1<C64>| -> Result<Array1<C64>> {
        let expectations: Vec<C64> = s.iter().map(|sk| quadratic_form(alpha, sk)).collect();
        let f = (spec.coefficients)(t, &expectations);
        if f.len() != s.len() {
            return Err(Error::DimensionMismatch {
                expected: s.len(),
                found: f.len(),
            });
        }
        let mut generator = Array2::<C64>::zeros((m, m));
        for (fk, sk) in f.iter().zip(s) {
            if *fk != ZERO {
                generator.scaled_add(*fk, sk);
            }
        }
        Ok(pinv.dot(&generator.dot(alpha)).mapv(|z| -I * z))
    };
    let post = |t: f64, alpha: &mut Array1<C64>| -> Result<()> {
        if cfg.renormalize {
            renormalize_alpha(alpha, e, t)?;
        }
        Ok(())
    };
    let (times, alphas) = integrate(cfg, alpha0.alpha().clone(), rhs, post)?;
    Ok(pure_trajectory(times, alphas, alpha0.basis_id()))
}

/// Solves `M |x⟩ = |v_0⟩` by evolving `E(t)|v(t)⟩ = |v_0⟩` with
/// `E(t) = (t/T) M + (1 - t/T) 1` from `t = 0` to `T`.
///
/// Differentiating gives `E(t) d|v⟩/dt = -G |v⟩`, `G = (M - 1)/T`: a
/// generalized evolution with `B(t) = E(t)` and `A = -G`. Both are linear
/// combinations of the unitaries `W = [1, W_1, …]` (the Pauli terms of `M`),
/// so every `V(t)` and `D(α, t)` is assembled from the time-independent
/// measured blocks `⟨ψ_k|W_m† W_n|ψ_j⟩`.
#[derive(Clone, Debug)]
pub struct MatrixInversion {
    unitaries: Vec<PauliString>,
    /// Coefficients of `M` on `unitaries`.
    mu: Vec<C64>,
    horizon: f64,
}

impl MatrixInversion {
    pub fn new(m_op: &PauliSum, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
        }
        let n = m_op.n_qubits();
        let m_op = m_op.canonicalize();
        let mut unitaries = vec![PauliString::identity(n)?];
        let mut mu = vec![ZERO];
        for &(coeff, p) in m_op.terms() {
            if p.is_identity() {
                mu[0] += coeff;
            } else {
                unitaries.push(p);
                mu.push(coeff);
            }
        }
        Ok(Self { unitaries, mu, horizon })
    }

    pub fn unitaries(&self) -> &[PauliString] {
        &self.unitaries
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Coefficients of `B(t) = E(t)` on the unitaries.
    pub fn metric_coefficients(&self, t: f64) -> Vec<C64> {
        let s = t / self.horizon;
        let mut out: Vec<C64> = self.mu.iter().map(|m| m * s).collect();
        out[0] += c(1.0 - s);
        out
    }

    /// Coefficients of `A = -(M - 1)/T`.
    pub fn drive_coefficients(&self) -> Vec<C64> {
        let mut out: Vec<C64> = self.mu.iter().map(|m| -m / self.horizon).collect();
        out[0] += c(1.0 / self.horizon);
        out
    }

    pub fn measure(&self, engine: &mut OverlapEngine, basis: &AnsatzBasis) -> Result<LcuBlocks> {
        engine.lcu_blocks(basis, &self.unitaries)
    }

    /// Integrates from `α0` (the coefficients of `|v_0⟩`) over `[0, T]`;
    /// `cfg.t_final` is overridden by the horizon.
    pub fn evolve(
        &self,
        blocks: &LcuBlocks,
        alpha0: &HybridPureState,
        cfg: &IntegratorConfig,
    ) -> Result<Trajectory<HybridPureState>> {
        if blocks.unitaries != self.unitaries {
            return Err(Error::InvalidArgument(
                "overlap blocks were measured for different unitaries".into(),
            ));
        }
        let cfg = IntegratorConfig {
            t_final: self.horizon,
            ..cfg.clone()
        };
        let drive_coeffs = self.drive_coefficients();
        evolve_generalized(
            |t| {
                let lam = self.metric_coefficients(t);
                blocks.assemble(&lam, &lam)
            },
            |alpha, t| {
                let lam = self.metric_coefficients(t);
                Ok(blocks.assemble(&lam, &drive_coeffs)?.dot(alpha))
            },
            alpha0,
            None,
            &IntegratorConfig {
                renormalize: false,
                ..cfg
            },
        )
    }
}
