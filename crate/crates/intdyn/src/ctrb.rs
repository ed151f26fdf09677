//! Spectral and controllability algorithms: eigenvalues with deterministic
//! ordering, the PBH rank test, cyclicity (geometric multiplicity one),
//! constructive single-input vectors for cyclic matrices, and the functional
//! vector that inverts a controllable pair's transfer function to
//! `1/det(sI − F)`.
//!
//! Complex-matrix rank decisions are made through the real embedding
//! `[[X, −Y], [Y, X]]`, whose singular values are those of `X + iY` doubled —
//! every decomposition stays in real arithmetic.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// Default relative singular-value threshold for rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

/// Relative eigenvalue separation below which a repeated eigenvalue is
/// assumed. Combined with cyclicity (geometric multiplicity one), a repeat
/// implies a nontrivial Jordan chain, which the constructive algorithms
/// reject.
const SEPARATION_TOL: f64 = 1e-6;

/// Eigenvalues of a real square matrix, sorted by (Re, Im). Conjugate pairs
/// are exact mirrors (both members come from the same 2x2 Schur block).
pub fn eigenvalues(f: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    if f.nrows() != f.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "eigenvalues need a square matrix, got {}x{}",
            f.nrows(),
            f.ncols()
        )));
    }
    linalg::eig(f)
}

/// PBH controllability test: true iff `rank [F − λI, B] = n` at every
/// eigenvalue λ of F. Rank is decided by singular values relative to `tol`
/// (use [`DEFAULT_RANK_TOL`] unless there is a reason not to).
pub fn pbh_controllable(f: &DMatrix<f64>, b: &DVector<f64>, tol: f64) -> Result<bool> {
    let n = f.nrows();
    if f.ncols() != n || b.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "PBH needs F n×n and B of length n, got {}x{} and {}",
            n,
            f.ncols(),
            b.len()
        )));
    }
    for lambda in representatives(&eigenvalues(f)?) {
        let sv = if lambda.im == 0.0 {
            // Real test matrix [F − λI | b], n×(n+1).
            let mut m = DMatrix::zeros(n, n + 1);
            m.view_mut((0, 0), (n, n)).copy_from(f);
            for i in 0..n {
                m[(i, i)] -= lambda.re;
            }
            m.column_mut(n).copy_from(b);
            linalg::singular_values(&m)
        } else {
            // Complex test matrix (F − αI − iβI | b) via its real embedding.
            let mut x = f.clone();
            for i in 0..n {
                x[(i, i)] -= lambda.re;
            }
            let y = DMatrix::from_diagonal(&DVector::from_element(n, -lambda.im));
            let mut xa = DMatrix::zeros(n, n + 1);
            xa.view_mut((0, 0), (n, n)).copy_from(&x);
            xa.column_mut(n).copy_from(b);
            let mut ya = DMatrix::zeros(n, n + 1);
            ya.view_mut((0, 0), (n, n)).copy_from(&y);
            linalg::singular_values(&linalg::complex_embedding(&xa, &ya))
        };
        // Full row rank n iff the n-th (or doubled 2n-th) singular value
        // clears the threshold.
        if sv[sv.len() - 1] <= tol * sv[0] {
            return Ok(false);
        }
    }
    Ok(true)
}

/// True iff every eigenvalue of F has geometric multiplicity one, i.e.
/// `rank(F − λI) = n − 1` at each eigenvalue. This is the necessary and
/// sufficient condition for some single input vector to make F controllable.
pub fn cyclicity_check(f: &DMatrix<f64>, tol: f64) -> Result<bool> {
    let n = f.nrows();
    if f.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "cyclicity check needs a square matrix, got {}x{}",
            n,
            f.ncols()
        )));
    }
    if n <= 1 {
        return Ok(true);
    }
    for lambda in representatives(&eigenvalues(f)?) {
        let sv = if lambda.im == 0.0 {
            let mut x = f.clone();
            for i in 0..n {
                x[(i, i)] -= lambda.re;
            }
            linalg::singular_values(&x)
        } else {
            let mut x = f.clone();
            for i in 0..n {
                x[(i, i)] -= lambda.re;
            }
            let y = DMatrix::from_diagonal(&DVector::from_element(n, -lambda.im));
            linalg::singular_values(&linalg::complex_embedding(&x, &y))
        };
        // λ is an eigenvalue, so the smallest singular value is ~0 already;
        // geometric multiplicity 1 means the *second* smallest stays away
        // from zero. In the embedded (doubled) case both copies of σ_n sit
        // at the tail, so the second-smallest distinct value is s[len-3].
        let second_smallest = if lambda.im == 0.0 {
            sv[sv.len() - 2]
        } else {
            sv[sv.len() - 3]
        };
        if second_smallest <= tol * sv[0] {
            return Ok(false);
        }
    }
    Ok(true)
}

/// True iff S and A have an eigenvalue in common, up to
/// `tol · (1 + max spectral radius)`.
pub fn common_eigenvalue(s: &DMatrix<f64>, a: &DMatrix<f64>, tol: f64) -> Result<bool> {
    let es = eigenvalues(s)?;
    let ea = eigenvalues(a)?;
    let scale = 1.0 + linalg::spectral_radius(&es).max(linalg::spectral_radius(&ea));
    for zs in &es {
        for za in &ea {
            if (zs - za).norm() < tol * scale {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// One entry per distinct spectral location: real eigenvalues and the
/// positive-imaginary member of each conjugate pair.
fn representatives(eigs: &[Complex<f64>]) -> Vec<Complex<f64>> {
    eigs.iter().filter(|z| z.im >= 0.0).cloned().collect()
}

// ---------------------------------------------------------------------------
// Real block-diagonalization and the constructive input vector
// ---------------------------------------------------------------------------

/// A semisimple real spectral decomposition: `transform_t⁻¹ · F · transform_t`
/// is block diagonal with 1×1 blocks for real eigenvalues and
/// `[[α, β], [−β, α]]` blocks for conjugate pairs `α ± iβ`.
#[derive(Debug, Clone)]
pub struct SpectralData {
    /// Eigenvalues sorted by (Re, Im).
    pub eigenvalues: Vec<Complex<f64>>,
    /// Complex eigenvector columns aligned with `eigenvalues`.
    pub right_basis: DMatrix<Complex<f64>>,
    /// Real basis realizing the block diagonalization.
    pub transform_t: DMatrix<f64>,
    /// Condition number of `transform_t` (ratio of extreme singular values).
    pub condition: f64,
}

/// One real block of the decomposition. Blocks appear in first-encounter
/// order of the sorted eigenvalue list and carry the indices of their
/// eigenvalues in that list (a pair's members need not be adjacent — a real
/// eigenvalue can sort between them).
enum Block {
    Real { lambda: f64, idx: usize },
    /// Pair α ± iβ with β > 0, occupying two columns (u, v) such that
    /// `F [u v] = [u v] [[α, β], [−β, α]]`.
    Pair {
        alpha: f64,
        beta: f64,
        idx_neg: usize,
        idx_pos: usize,
    },
}

fn classify_blocks(eigs: &[Complex<f64>]) -> Result<Vec<Block>> {
    let mut blocks = Vec::new();
    let mut matched = vec![false; eigs.len()];
    let scale = 1.0 + linalg::spectral_radius(eigs);
    for (i, z) in eigs.iter().enumerate() {
        if matched[i] {
            continue;
        }
        if z.im == 0.0 {
            blocks.push(Block::Real {
                lambda: z.re,
                idx: i,
            });
            matched[i] = true;
        } else if z.im < 0.0 {
            // Sorted by (Re, Im), the negative-imaginary member comes first;
            // find its (numerically exact) conjugate partner.
            let partner = eigs.iter().enumerate().position(|(j, w)| {
                !matched[j] && j != i && (w - z.conj()).norm() <= 1e-12 * scale
            });
            match partner {
                Some(j) => {
                    matched[i] = true;
                    matched[j] = true;
                    blocks.push(Block::Pair {
                        alpha: z.re,
                        beta: -z.im,
                        idx_neg: i,
                        idx_pos: j,
                    });
                }
                None => {
                    return Err(Error::NumericalFailure(
                        "complex eigenvalue without a conjugate partner".to_string(),
                    ))
                }
            }
        } else {
            return Err(Error::NumericalFailure(
                "complex eigenvalue without a conjugate partner".to_string(),
            ));
        }
    }
    Ok(blocks)
}

/// Real block-diagonalize a cyclic matrix with semisimple spectrum.
///
/// Errors with [`Error::NotCyclic`] when some eigenvalue has geometric
/// multiplicity above one, and [`Error::DefectiveUnsupported`] when a
/// repeated eigenvalue (a Jordan chain) is detected — numerically: eigenvalue
/// separation below `1e-6` relative, or failure of the block-diagonal
/// residual check for a clustered spectrum.
pub fn spectral_decompose(f: &DMatrix<f64>) -> Result<SpectralData> {
    let n = f.nrows();
    if n == 0 || f.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "spectral decomposition needs a nonempty square matrix, got {}x{}",
            n,
            f.ncols()
        )));
    }
    let eigs = eigenvalues(f)?;
    if !cyclicity_check(f, DEFAULT_RANK_TOL)? {
        return Err(Error::NotCyclic);
    }
    let scale = 1.0 + linalg::spectral_radius(&eigs);
    let mut min_sep = f64::INFINITY;
    for i in 0..eigs.len() {
        for j in (i + 1)..eigs.len() {
            min_sep = min_sep.min((eigs[i] - eigs[j]).norm());
        }
    }
    if min_sep < SEPARATION_TOL * scale {
        // Cyclic + repeated eigenvalue = a Jordan chain of length > 1.
        return Err(Error::DefectiveUnsupported);
    }

    let blocks = classify_blocks(&eigs)?;
    let mut t = DMatrix::zeros(n, n);
    let mut col = 0usize;
    for block in &blocks {
        match block {
            Block::Real { lambda, .. } => {
                let mut x = f.clone();
                for i in 0..n {
                    x[(i, i)] -= lambda;
                }
                t.column_mut(col)
                    .copy_from(&linalg::smallest_right_singular_vector(&x)?);
                col += 1;
            }
            Block::Pair { alpha, beta, .. } => {
                // Null vector (u; v) of the embedding of F − (α+iβ)I gives
                // F[u v] = [u v][[α, β], [−β, α]].
                let mut x = f.clone();
                for i in 0..n {
                    x[(i, i)] -= alpha;
                }
                let y = DMatrix::from_diagonal(&DVector::from_element(n, -beta));
                let z = linalg::smallest_right_singular_vector(&linalg::complex_embedding(&x, &y))?;
                for i in 0..n {
                    t[(i, col)] = z[i];
                    t[(i, col + 1)] = z[n + i];
                }
                col += 2;
            }
        }
    }
    debug_assert_eq!(col, n);

    let sv = linalg::singular_values(&t);
    let condition = if sv[sv.len() - 1] > 0.0 {
        sv[0] / sv[sv.len() - 1]
    } else {
        f64::INFINITY
    };

    // Residual check: T⁻¹ F T must reproduce the expected block structure.
    let j_expected = {
        let mut j = DMatrix::zeros(n, n);
        let mut at = 0usize;
        for block in &blocks {
            match block {
                Block::Real { lambda, .. } => {
                    j[(at, at)] = *lambda;
                    at += 1;
                }
                Block::Pair { alpha, beta, .. } => {
                    j[(at, at)] = *alpha;
                    j[(at, at + 1)] = *beta;
                    j[(at + 1, at)] = -beta;
                    j[(at + 1, at + 1)] = *alpha;
                    at += 2;
                }
            }
        }
        j
    };
    let j_tol = 1e-8 * linalg::scale_of(f);
    let diag_ok = condition.is_finite()
        && t.clone()
            .lu()
            .solve(&(f * &t))
            .map(|j| (&j - &j_expected).amax() <= j_tol)
            .unwrap_or(false);
    if !diag_ok {
        // A clustered spectrum that refuses to block-diagonalize points to a
        // defective matrix; otherwise report the numerical breakdown as such.
        if min_sep < 1e-3 * scale {
            return Err(Error::DefectiveUnsupported);
        }
        return Err(Error::NumericalFailure(format!(
            "real block-diagonalization residual exceeded {j_tol:.3e}"
        )));
    }

    // Complex eigenvector columns aligned with the sorted eigenvalue list.
    // A pair's members need not be adjacent in that list (a real eigenvalue
    // can sort between them), so scatter by the recorded indices.
    let mut right_basis = DMatrix::from_element(n, n, Complex::new(0.0, 0.0));
    let mut col = 0usize;
    for block in &blocks {
        match block {
            Block::Real { idx, .. } => {
                for i in 0..n {
                    right_basis[(i, *idx)] = Complex::new(t[(i, col)], 0.0);
                }
                col += 1;
            }
            Block::Pair {
                idx_neg, idx_pos, ..
            } => {
                // Eigenvector of α − iβ is u − iv; of α + iβ, u + iv.
                for i in 0..n {
                    let (u, v) = (t[(i, col)], t[(i, col + 1)]);
                    right_basis[(i, *idx_neg)] = Complex::new(u, -v);
                    right_basis[(i, *idx_pos)] = Complex::new(u, v);
                }
                col += 2;
            }
        }
    }

    Ok(SpectralData {
        eigenvalues: eigs,
        right_basis,
        transform_t: t,
        condition,
    })
}

/// Construct a real vector B such that the pair (F, B) is controllable, for
/// a cyclic F with semisimple spectrum.
///
/// The construction block-diagonalizes F over the reals and sums one basis
/// direction per real block and the conjugate-symmetric combination — weight
/// (2, 0) in (u, v) coordinates — per complex pair, then maps back through
/// the transform. A PBH post-check guards the result.
pub fn construct_input_vector(f: &DMatrix<f64>) -> Result<DVector<f64>> {
    let sd = spectral_decompose(f)?;
    let n = f.nrows();
    let blocks = classify_blocks(&sd.eigenvalues)?;
    let mut weights = DVector::zeros(n);
    let mut at = 0usize;
    for block in &blocks {
        match block {
            Block::Real { .. } => {
                weights[at] = 1.0;
                at += 1;
            }
            Block::Pair { .. } => {
                // Sum of the pair's left eigenvectors (1, i) and (1, −i).
                weights[at] = 2.0;
                weights[at + 1] = 0.0;
                at += 2;
            }
        }
    }
    let b = &sd.transform_t * weights;
    if !pbh_controllable(f, &b, DEFAULT_RANK_TOL)? {
        return Err(Error::NumericalFailure(
            "constructed input vector failed the PBH post-check".to_string(),
        ));
    }
    Ok(b)
}

// ---------------------------------------------------------------------------
// Functional vector (transfer-function inversion to 1/det)
// ---------------------------------------------------------------------------

/// Controllability matrix `[B, FB, F²B, …, F^{n−1}B]`.
pub fn controllability_matrix(f: &DMatrix<f64>, b: &DVector<f64>) -> DMatrix<f64> {
    let n = f.nrows();
    let mut w = DMatrix::zeros(n, n);
    let mut col = b.clone();
    for k in 0..n {
        w.column_mut(k).copy_from(&col);
        col = f * &col;
    }
    w
}

/// For a controllable pair (F, B), return C such that
/// `Cᵀ (sI − F)⁻¹ B ≡ 1 / det(sI − F)` as rational functions.
///
/// The Faddeev–LeVerrier recursion produces the exact polynomial coefficient
/// matrices `M_k` of `adj(sI − F) = Σ M_k s^{n−1−k}` in floating point; with
/// `G = [M_0 B, …, M_{n−1} B]` the identity reduces to `Gᵀ C = e_n`.
pub fn left_functional_vector(f: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let n = f.nrows();
    if f.ncols() != n || b.len() != n || n == 0 {
        return Err(Error::DimensionMismatch(format!(
            "functional vector needs F n×n and B of length n, got {}x{} and {}",
            n,
            f.ncols(),
            b.len()
        )));
    }
    let mut g = DMatrix::zeros(n, n);
    let mut mk = DMatrix::identity(n, n);
    g.column_mut(0).copy_from(b);
    for k in 1..n {
        let fm = f * &mk;
        let c = -fm.trace() / (k as f64);
        mk = fm;
        for i in 0..n {
            mk[(i, i)] += c;
        }
        g.column_mut(k).copy_from(&(&mk * b));
    }
    let sv = linalg::singular_values(&g);
    if sv[sv.len() - 1] <= DEFAULT_RANK_TOL * sv[0] {
        return Err(Error::Uncontrollable(format!(
            "coefficient matrix G is rank-deficient (σ_min/σ_max = {:.3e})",
            sv[sv.len() - 1] / sv[0]
        )));
    }
    let mut e_n = DVector::zeros(n);
    e_n[n - 1] = 1.0;
    g.transpose().lu().solve(&e_n).ok_or_else(|| {
        Error::Uncontrollable("coefficient matrix G is numerically singular".to_string())
    })
}
