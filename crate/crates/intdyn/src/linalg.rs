//! Internal dense linear-algebra helpers shared across modules: eigenvalues
//! with an explicit convergence budget, singular-value utilities, and the
//! real embedding used for complex-matrix rank decisions.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

/// Iteration budget for the QR/Schur eigenvalue iteration. Desk-scale
/// matrices converge in a handful of sweeps; hitting this limit is reported
/// as a numerical failure rather than looping forever.
pub(crate) const SCHUR_MAX_ITER: usize = 10_000;

/// Eigenvalues of a real square matrix, sorted by (Re, Im) for determinism.
/// Complex eigenvalues come from 2x2 Schur blocks and are exactly conjugate.
pub(crate) fn eig(f: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    let n = f.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let schur = nalgebra::linalg::Schur::try_new(f.clone(), f64::EPSILON, SCHUR_MAX_ITER)
        .ok_or_else(|| {
            Error::NumericalFailure(format!(
                "eigenvalue iteration did not converge within {SCHUR_MAX_ITER} steps for a {n}x{n} matrix"
            ))
        })?;
    let mut eigs: Vec<Complex<f64>> = schur.complex_eigenvalues().iter().cloned().collect();
    sort_complex(&mut eigs);
    Ok(eigs)
}

/// Total order on complex values by (Re, Im); eigenvalue lists use it so
/// repeated runs and conjugate pairs line up deterministically.
pub(crate) fn sort_complex(values: &mut [Complex<f64>]) {
    values.sort_by(|a, b| {
        (a.re, a.im)
            .partial_cmp(&(b.re, b.im))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
}

/// Largest real part over a spectrum.
pub(crate) fn spectral_abscissa(eigs: &[Complex<f64>]) -> f64 {
    eigs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

/// Largest modulus over a spectrum.
pub(crate) fn spectral_radius(eigs: &[Complex<f64>]) -> f64 {
    eigs.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Singular values of a real matrix, sorted descending.
pub(crate) fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let mut sv: Vec<f64> = m.clone().singular_values().iter().cloned().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    sv
}

/// Real embedding of the complex matrix X + iY as [[X, -Y], [Y, X]].
///
/// The embedding has the singular values of X + iY, each with multiplicity
/// two, so complex rank decisions reduce to real SVDs: rank_C = rank_R / 2.
pub(crate) fn complex_embedding(x: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
    let (r, c) = x.shape();
    debug_assert_eq!(x.shape(), y.shape());
    let mut out = DMatrix::zeros(2 * r, 2 * c);
    out.view_mut((0, 0), (r, c)).copy_from(x);
    out.view_mut((0, c), (r, c)).copy_from(&(-y));
    out.view_mut((r, 0), (r, c)).copy_from(y);
    out.view_mut((r, c), (r, c)).copy_from(x);
    out
}

/// Last right singular vector of a real matrix (the direction of its
/// smallest singular value) — a unit null-space vector when the matrix is
/// rank-deficient. Sign-normalized so the entry of largest magnitude is
/// positive, which makes downstream constructions deterministic.
pub(crate) fn smallest_right_singular_vector(m: &DMatrix<f64>) -> Result<DVector<f64>> {
    let cols = m.ncols();
    let svd = m.clone().svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::NumericalFailure("SVD did not produce right singular vectors".into()))?;
    // Singular values from nalgebra are sorted descending, so the last row of
    // V^T corresponds to the smallest singular value.
    let mut v = DVector::from_iterator(cols, v_t.row(v_t.nrows() - 1).iter().cloned());
    sign_normalize(&mut v);
    Ok(v)
}

/// Flip a vector's sign so its largest-magnitude entry is positive.
pub(crate) fn sign_normalize(v: &mut DVector<f64>) {
    let mut lead = 0.0_f64;
    for &x in v.iter() {
        if x.abs() > lead.abs() {
            lead = x;
        }
    }
    if lead < 0.0 {
        v.neg_mut();
    }
}

/// Frobenius-style relative scale used in residual checks: 1 + largest
/// absolute entry, guarding against zero matrices.
pub(crate) fn scale_of(m: &DMatrix<f64>) -> f64 {
    1.0 + m.amax()
}
