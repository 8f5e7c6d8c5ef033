//! Dense complex matrix helpers shared by the evolvers and oracles.

use ndarray::{Array1, Array2, ArrayView2, ShapeBuilder, Zip};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Conjugate transpose.
pub fn dagger(a: &ArrayView2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

/// `(A + A†)/2`.
pub fn hermitian_part(a: &ArrayView2<C64>) -> Array2<C64> {
    let mut out = a.to_owned();
    Zip::from(&mut out)
        .and(&a.t())
        .for_each(|o, &t| *o = (*o + t.conj()) * 0.5);
    out
}

/// `max |A - A†|` entrywise.
pub fn hermiticity_defect(a: &ArrayView2<C64>) -> f64 {
    let mut worst = 0.0f64;
    Zip::from(a).and(&a.t()).for_each(|&x, &t| {
        worst = worst.max((x - t.conj()).norm());
    });
    worst
}

pub fn trace(a: &ArrayView2<C64>) -> C64 {
    a.diag().sum()
}

/// `Tr(A·B)` without forming the product.
pub fn trace_of_product(a: &ArrayView2<C64>, b: &ArrayView2<C64>) -> C64 {
    let mut acc = ZERO;
    Zip::from(a).and(&b.t()).for_each(|&x, &y| acc += x * y);
    acc
}

/// Eigendecomposition of a Hermitian matrix, ascending eigenvalues.
///
/// The input is symmetrized first so round-off asymmetry does not leak into
/// the solver.
pub fn eigh(a: &ArrayView2<C64>) -> Result<(Array1<f64>, Array2<C64>)> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    // The solver mishandles complex row-major input (eigenvectors come back
    // conjugated), so hand it a column-major copy.
    let mut h = Array2::zeros(a.raw_dim().f());
    h.assign(&hermitian_part(a));
    let (w, v) = h.eigh(UPLO::Lower)?;
    Ok((w, v))
}

/// `V · diag(f(λ)) · V†`.
pub fn spectral_map(values: &Array1<f64>, vectors: &Array2<C64>, f: impl Fn(f64) -> f64) -> Array2<C64> {
    let mut scaled = vectors.clone();
    for (mut col, &lam) in scaled.columns_mut().into_iter().zip(values.iter()) {
        let s = f(lam);
        col.mapv_inplace(|z| z * s);
    }
    scaled.dot(&dagger(&vectors.view()))
}

pub fn max_abs_diff(a: &ArrayView2<C64>, b: &ArrayView2<C64>) -> f64 {
    let mut worst = 0.0f64;
    Zip::from(a).and(b).for_each(|&x, &y| worst = worst.max((x - y).norm()));
    worst
}
