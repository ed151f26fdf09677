//! Closed-loop performance analysis: Lyapunov solves, the H2 norm, the H∞
//! norm via Hamiltonian bisection, and pole-region membership.
//!
//! All routines work on explicit matrices and report `f64::INFINITY` norms
//! for unstable systems rather than failing — callers decide whether
//! instability is an error (the [`NormReport`] carries the poles either way).

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::generator::StateSpace;
use crate::linalg;
use crate::model::LmiRegion;

/// How close to the imaginary axis a Hamiltonian eigenvalue must be (relative
/// to its spectral radius) to count as "on the axis" in the H∞ test.
const HAMILTONIAN_AXIS_TOL: f64 = 1e-8;

/// Pole-region membership uses a slightly negative margin so poles sitting
/// numerically on the boundary count as inside.
const REGION_BOUNDARY_SLACK: f64 = -1e-9;

/// Combined norm and pole summary for one generator.
#[derive(Debug, Clone)]
pub struct NormReport {
    /// Worst single-channel H2 norm.
    pub h2: f64,
    /// Worst single-channel H∞ norm.
    pub hinf: f64,
    /// Final bisection bracket (lo, hi) of the worst channel's H∞ norm.
    pub hinf_bracket: (f64, f64),
    /// Closed-loop poles, sorted by (Re, Im).
    pub poles: Vec<Complex<f64>>,
    /// Whether every pole lies in the requested region (true when no region
    /// was requested).
    pub region_ok: bool,
}

impl NormReport {
    pub fn is_stable(&self) -> bool {
        self.poles.iter().all(|z| z.re < 0.0)
    }
}

/// Outcome of an H∞ computation with the bracket and peak-gain frequency.
#[derive(Debug, Clone, Copy)]
pub struct HinfDetail {
    pub value: f64,
    /// Bisection bracket (lo, hi) with hi − lo ≤ tol·lo.
    pub bracket: (f64, f64),
    /// Frequency (rad/s, ≥ 0) where the gain peaks, estimated from the
    /// imaginary-axis Hamiltonian eigenvalues at the last failing level.
    pub peak_frequency: f64,
}

/// Solve `A P + P Aᵀ + Q = 0` for Hurwitz A via the Kronecker linearization
/// `(I ⊗ A + A ⊗ I) vec(P) = −vec(Q)`. The result is symmetrized, and the
/// residual of the original equation is re-checked.
pub fn solve_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n || q.nrows() != n || q.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "Lyapunov solve needs square A and Q of equal size, got {}x{} and {}x{}",
            n,
            a.ncols(),
            q.nrows(),
            q.ncols()
        )));
    }
    let eigs = crate::ctrb::eigenvalues(a)?;
    let abscissa = linalg::spectral_abscissa(&eigs);
    if abscissa >= 0.0 {
        return Err(Error::NotHurwitz { abscissa });
    }
    let id = DMatrix::identity(n, n);
    let kron = id.kronecker(a) + a.kronecker(&id);
    let rhs = DVector::from_column_slice(q.as_slice()) * -1.0;
    let vec_p = kron.lu().solve(&rhs).ok_or_else(|| {
        Error::NumericalFailure("Kronecker Lyapunov system is singular".to_string())
    })?;
    let p_raw = DMatrix::from_column_slice(n, n, vec_p.as_slice());
    let p = (&p_raw + p_raw.transpose()) * 0.5;
    let residual = (a * &p + &p * a.transpose() + q).norm();
    let scale = a.norm() * p.norm() + q.norm();
    if residual > 1e-8 * (1.0 + scale) {
        return Err(Error::NumericalFailure(format!(
            "Lyapunov residual {residual:.3e} exceeds tolerance at scale {scale:.3e}"
        )));
    }
    Ok(p)
}

/// H2 norm of (A, B, C): `sqrt(trace(C Wc Cᵀ))` with the controllability
/// Gramian from `A Wc + Wc Aᵀ + B Bᵀ = 0`. Infinite when A is not Hurwitz.
pub fn h2_norm(sys: &StateSpace) -> Result<f64> {
    let eigs = crate::ctrb::eigenvalues(&sys.a)?;
    if linalg::spectral_abscissa(&eigs) >= 0.0 {
        return Ok(f64::INFINITY);
    }
    let q = &sys.b * sys.b.transpose();
    let wc = solve_lyapunov(&sys.a, &q)?;
    let out = &sys.c * wc * sys.c.transpose();
    Ok(out.trace().max(0.0).sqrt())
}

/// H∞ norm of (A, B, C) to relative tolerance `tol`. Infinite when A is not
/// Hurwitz. See [`hinf_detail`] for the bracket and peak frequency.
pub fn hinf_norm(sys: &StateSpace, tol: f64) -> Result<f64> {
    Ok(hinf_detail(sys, tol)?.value)
}

/// Largest singular value of `C (iωI − A)⁻¹ B`, computed in real arithmetic
/// through the complex embedding.
fn transfer_gain(sys: &StateSpace, omega: f64) -> f64 {
    let n = sys.a.nrows();
    let p = sys.b.ncols();
    // iωI − A = X + iY with X = −A, Y = ωI.
    let x = -&sys.a;
    let y = DMatrix::from_diagonal(&DVector::from_element(n, omega));
    let lhs = linalg::complex_embedding(&x, &y);
    let mut rhs = DMatrix::zeros(2 * n, p);
    rhs.view_mut((0, 0), (n, p)).copy_from(&sys.b);
    let Some(sol) = lhs.lu().solve(&rhs) else {
        return f64::INFINITY;
    };
    let zr = &sys.c * sol.view((0, 0), (n, p));
    let zi = &sys.c * sol.view((n, 0), (n, p));
    let g = linalg::complex_embedding(&zr, &zi);
    linalg::singular_values(&g)[0]
}

/// Imaginary-axis eigenvalue frequencies of the level-γ Hamiltonian
/// `[[A, BBᵀ/γ], [−CᵀC/γ, −Aᵀ]]`; nonempty iff γ < ‖G‖∞.
fn hamiltonian_axis_frequencies(
    sys: &StateSpace,
    gamma: f64,
    bbt: &DMatrix<f64>,
    ctc: &DMatrix<f64>,
) -> Result<Vec<f64>> {
    let n = sys.a.nrows();
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(&sys.a);
    h.view_mut((0, n), (n, n)).copy_from(&(bbt / gamma));
    h.view_mut((n, 0), (n, n)).copy_from(&(-ctc / gamma));
    h.view_mut((n, n), (n, n)).copy_from(&(-sys.a.transpose()));
    let eigs = linalg::eig(&h)?;
    let scale = 1.0 + linalg::spectral_radius(&eigs);
    Ok(eigs
        .iter()
        .filter(|z| z.re.abs() <= HAMILTONIAN_AXIS_TOL * scale)
        .map(|z| z.im.abs())
        .collect())
}

/// H∞ norm with bracket and peak-frequency estimate, by bisection on the
/// Hamiltonian imaginary-axis test, seeded with a frequency-grid lower bound.
pub fn hinf_detail(sys: &StateSpace, tol: f64) -> Result<HinfDetail> {
    if !(tol > 0.0) {
        return Err(Error::Validation(format!(
            "H-infinity tolerance must be positive, got {tol}"
        )));
    }
    let eigs = crate::ctrb::eigenvalues(&sys.a)?;
    if linalg::spectral_abscissa(&eigs) >= 0.0 {
        return Ok(HinfDetail {
            value: f64::INFINITY,
            bracket: (f64::INFINITY, f64::INFINITY),
            peak_frequency: f64::NAN,
        });
    }
    if sys.b.amax() == 0.0 || sys.c.amax() == 0.0 {
        return Ok(HinfDetail {
            value: 0.0,
            bracket: (0.0, 0.0),
            peak_frequency: 0.0,
        });
    }

    let bbt = &sys.b * sys.b.transpose();
    let ctc = sys.c.transpose() * &sys.c;

    // Grid lower bound: actual gains are always ≤ the norm, so shrinking by
    // a hair gives a level strictly below the peak.
    let probes = [0.0, 1e-2, 1e-1, 1.0, 10.0, 100.0];
    let grid_max = probes
        .iter()
        .map(|&w| transfer_gain(sys, w))
        .fold(0.0_f64, f64::max);
    let mut lo = (grid_max * (1.0 - 1e-3)).max(1e-12);

    // The test must hold at lo; if the transfer function is structurally
    // tiny everywhere the grid can still overshoot in ulps, so back off.
    let mut last_axis = hamiltonian_axis_frequencies(sys, lo, &bbt, &ctc)?;
    let mut guard = 0;
    while last_axis.is_empty() {
        lo *= 0.5;
        guard += 1;
        if lo < 1e-13 || guard > 60 {
            return Ok(HinfDetail {
                value: 0.0,
                bracket: (0.0, lo),
                peak_frequency: 0.0,
            });
        }
        last_axis = hamiltonian_axis_frequencies(sys, lo, &bbt, &ctc)?;
    }

    let mut hi = (2.0 * lo).max(1.0);
    guard = 0;
    while !hamiltonian_axis_frequencies(sys, hi, &bbt, &ctc)?.is_empty() {
        hi *= 2.0;
        guard += 1;
        if guard > 60 {
            return Err(Error::NumericalFailure(
                "H-infinity upper bound search failed to terminate".to_string(),
            ));
        }
    }

    while hi - lo > tol * lo {
        let mid = 0.5 * (lo + hi);
        let axis = hamiltonian_axis_frequencies(sys, mid, &bbt, &ctc)?;
        if axis.is_empty() {
            hi = mid;
        } else {
            lo = mid;
            last_axis = axis;
        }
    }

    // Just below the norm the level set |G(iω)| > lo collapses onto the peak;
    // the surviving axis frequencies bracket it.
    let peak_frequency = {
        let wmin = last_axis.iter().cloned().fold(f64::INFINITY, f64::min);
        let wmax = last_axis.iter().cloned().fold(0.0_f64, f64::max);
        0.5 * (wmin + wmax)
    };

    Ok(HinfDetail {
        value: 0.5 * (lo + hi),
        bracket: (lo, hi),
        peak_frequency,
    })
}

/// True iff every eigenvalue of `a_cl` lies in the region (boundary points
/// count as inside, up to a 1e-9 slack).
pub fn poles_in_region(a_cl: &DMatrix<f64>, region: &LmiRegion) -> Result<bool> {
    let eigs = crate::ctrb::eigenvalues(a_cl)?;
    Ok(eigs
        .iter()
        .all(|&z| region.contains_with_margin(z, REGION_BOUNDARY_SLACK)))
}

/// Worst-channel norm report over a family of error systems sharing one state
/// matrix. `region = None` skips the pole-region check (reported as ok).
pub fn norm_report(
    sys_list: &[StateSpace],
    region: Option<&LmiRegion>,
    tol: f64,
) -> Result<NormReport> {
    let Some(first) = sys_list.first() else {
        return Err(Error::Validation(
            "norm report needs at least one channel system".to_string(),
        ));
    };
    for sys in sys_list.iter().skip(1) {
        if sys.a != first.a {
            return Err(Error::Validation(
                "norm report channels must share the state matrix".to_string(),
            ));
        }
    }
    let poles = crate::ctrb::eigenvalues(&first.a)?;
    let mut h2 = 0.0_f64;
    let mut hinf = 0.0_f64;
    let mut bracket = (0.0, 0.0);
    for sys in sys_list {
        h2 = h2.max(h2_norm(sys)?);
        let detail = hinf_detail(sys, tol)?;
        if detail.value > hinf {
            hinf = detail.value;
            bracket = detail.bracket;
        }
    }
    let region_ok = match region {
        Some(r) => poles_in_region(&first.a, r)?,
        None => true,
    };
    Ok(NormReport {
        h2,
        hinf,
        hinf_bracket: bracket,
        poles,
        region_ok,
    })
}
