//! Exact-solution oracle for the forced internal dynamics.
//!
//! When S and A share no eigenvalue, the Sylvester equation
//! `Π S = A Π + N Eᵀ` has a unique solution Π, and `η(t) = Π w(t)` is the
//! bounded trajectory the generator is expected to settle onto. Solving for
//! Π independently of the generator gives a certificate: compare a simulated
//! trace against `Π exp(S t) w0` after transients die out.

use nalgebra::{DMatrix, DVector};

use crate::ctrb::common_eigenvalue;
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::Exosystem;
use crate::sim::SimTrace;

/// Eigenvalue-coincidence tolerance used before attempting the solve.
const COMMON_EIG_TOL: f64 = 1e-9;

/// Solution of `Π S = A Π + N Eᵀ` with quality diagnostics.
#[derive(Debug, Clone)]
pub struct SylvesterSolution {
    /// The unique n×m solution.
    pub pi: DMatrix<f64>,
    /// Frobenius norm of `Π S − A Π − N Eᵀ` after the solve.
    pub residual: f64,
    /// Condition number (σ_max/σ_min) of the vectorized operator.
    pub condition_estimate: f64,
}

/// Solve `Π S = A Π + N Eᵀ` through the Kronecker linearization
/// `(Sᵀ ⊗ I_n − I_m ⊗ A) vec(Π) = vec(N Eᵀ)`.
pub fn solve_sylvester(
    s: &DMatrix<f64>,
    a: &DMatrix<f64>,
    n_vec: &DVector<f64>,
    e: &DVector<f64>,
) -> Result<SylvesterSolution> {
    let m = s.nrows();
    let n = a.nrows();
    if s.ncols() != m || a.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "S and A must be square, got {}x{} and {}x{}",
            m,
            s.ncols(),
            n,
            a.ncols()
        )));
    }
    if n_vec.len() != n || e.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "N must have length {} and E length {}, got {} and {}",
            n,
            m,
            n_vec.len(),
            e.len()
        )));
    }
    if common_eigenvalue(s, a, COMMON_EIG_TOL)? {
        return Err(Error::CommonEigenvalue);
    }

    let op = s.transpose().kronecker(&DMatrix::identity(n, n))
        - DMatrix::identity(m, m).kronecker(a);
    let forcing = n_vec * e.transpose();
    let rhs = DVector::from_column_slice(forcing.as_slice());
    let sv = linalg::singular_values(&op);
    let condition_estimate = if sv[sv.len() - 1] > 0.0 {
        sv[0] / sv[sv.len() - 1]
    } else {
        f64::INFINITY
    };
    let vec_pi = op.lu().solve(&rhs).ok_or_else(|| {
        Error::NumericalFailure(
            "vectorized forced-equilibrium system is numerically singular".to_string(),
        )
    })?;
    let pi = DMatrix::from_column_slice(n, m, vec_pi.as_slice());
    let residual = (&pi * s - a * &pi - &forcing).norm();
    if residual > 1e-8 * (1.0 + pi.norm()) {
        return Err(Error::NumericalFailure(format!(
            "forced-equilibrium residual {residual:.3e} exceeds tolerance"
        )));
    }
    Ok(SylvesterSolution {
        pi,
        residual,
        condition_estimate,
    })
}

/// The exact bounded trajectory `η(t) = Π exp(S t) w0` at one instant.
pub fn exact_iid(sol: &SylvesterSolution, exo: &Exosystem, t: f64) -> DVector<f64> {
    &sol.pi * crate::sim::exosystem_propagate(exo, t)
}

/// Certify a single-channel trace: `sup ‖η̂(t) − Π w(t)‖` over the settled
/// window `t ≥ settle_fraction · horizon`. The exosystem state is
/// re-propagated here from `w0` with a fresh one-step exponential, so the
/// comparison does not reuse the simulator's forcing samples.
pub fn certify_trace(
    trace: &SimTrace,
    sol: &SylvesterSolution,
    exo: &Exosystem,
    settle_fraction: f64,
) -> Result<f64> {
    certify_trace_multi(
        trace,
        std::slice::from_ref(sol),
        std::slice::from_ref(exo),
        settle_fraction,
    )
}

/// Multi-channel certification: the exact trajectory is the superposition
/// `Σ_k Π_k exp(S_k t) w0_k`.
pub fn certify_trace_multi(
    trace: &SimTrace,
    sols: &[SylvesterSolution],
    exos: &[Exosystem],
    settle_fraction: f64,
) -> Result<f64> {
    if !(0.0..1.0).contains(&settle_fraction) {
        return Err(Error::Validation(format!(
            "settle fraction must lie in [0, 1), got {settle_fraction}"
        )));
    }
    if sols.len() != exos.len() || sols.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "got {} solutions for {} exosystems",
            sols.len(),
            exos.len()
        )));
    }
    let len = trace.times.len();
    if trace.eta_hat.len() != len {
        return Err(Error::DimensionMismatch(
            "trace times and internal-dynamics samples disagree in length".to_string(),
        ));
    }
    for (k, (sol, exo)) in sols.iter().zip(exos.iter()).enumerate() {
        if sol.pi.ncols() != exo.dim() || sol.pi.nrows() != trace.n {
            return Err(Error::DimensionMismatch(format!(
                "channel {}: Π is {}x{} but the trace has n = {} and the exosystem m = {}",
                k,
                sol.pi.nrows(),
                sol.pi.ncols(),
                trace.n,
                exo.dim()
            )));
        }
    }
    let start = ((len as f64 - 1.0) * settle_fraction).ceil() as usize;
    if len == 0 || start >= len {
        return Err(Error::InsufficientWindow(format!(
            "settled window is empty ({len} samples, start index {start})"
        )));
    }

    // Independent propagation: one exact step per sample.
    let phis: Vec<DMatrix<f64>> = exos.iter().map(|exo| (&exo.s * trace.dt).exp()).collect();
    let mut ws: Vec<DVector<f64>> = exos.iter().map(|exo| exo.w0.clone()).collect();
    let mut sup = 0.0_f64;
    for step in 0..len {
        if step >= start {
            let mut exact = DVector::zeros(trace.n);
            for (sol, w) in sols.iter().zip(ws.iter()) {
                exact.gemv(1.0, &sol.pi, w, 1.0);
            }
            sup = sup.max((&trace.eta_hat[step] - exact).norm());
        }
        for (w, phi) in ws.iter_mut().zip(phis.iter()) {
            let advanced = &*phi * &*w;
            w.copy_from(&advanced);
        }
    }
    Ok(sup)
}
