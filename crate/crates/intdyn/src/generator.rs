//! Assembly of the augmented closed-loop generator.
//!
//! The generator stacks three blocks of state: the internal-model replica `v`
//! of the exosystem (dimension m), the tracked internal dynamics `η̂`
//! (dimension n), and the scalar coupling state `e`:
//!
//! ```text
//!         ┌ S      0      L11 ┐            ┌ 0   ┐
//!  A_cl = │ 0      A      L12 │,  N_cl,k = │ N_k │,   x = (v, η̂, e).
//!         └ L21ᵀ   L22ᵀ   L3  ┘            └ 0   ┘
//! ```
//!
//! The gain split `A_cl = A_S′ + B1 L23ᵀ` (with `A_S′` holding S, A, and the
//! column gains `L1 = [L11; L12]`, and `B1` the last basis vector) is what the
//! synthesis layer optimizes over: `L1` is chosen once from the spectrum of
//! `blockdiag(S, A)`, while `L23 = [L21; L22; L3]` is the free row.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::GainSet;

/// Block dimensions of an augmented generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    /// Exosystem (internal model) dimension.
    pub m: usize,
    /// Internal-dynamics dimension.
    pub n: usize,
    /// Number of forcing channels.
    pub l: usize,
}

/// The assembled closed-loop generator.
#[derive(Debug, Clone)]
pub struct AugmentedGenerator {
    /// Closed-loop state matrix, (m+n+1) square.
    pub a_cl: DMatrix<f64>,
    /// Forcing directions, one per channel: `[0; N_k; 0]`.
    pub n_cl_list: Vec<DVector<f64>>,
    /// Read-out of η̂ from the stacked state: `η̂ = C_clᵀ x`.
    pub c_cl: DMatrix<f64>,
    pub dims: Dims,
    pub gains: GainSet,
    /// Last basis vector — the input direction of the row gain `L23ᵀ`.
    pub b1: DVector<f64>,
}

impl AugmentedGenerator {
    /// Total state dimension m + n + 1.
    pub fn order(&self) -> usize {
        self.dims.m + self.dims.n + 1
    }

    /// The gain-free part `A_S′ = [[blockdiag(S, A), L1], [0, 0]]`, so that
    /// `a_cl = a_s_prime() + b1 · L23ᵀ`.
    pub fn a_s_prime(&self) -> DMatrix<f64> {
        let nn = self.order();
        let mut m = self.a_cl.clone();
        for j in 0..nn {
            m[(nn - 1, j)] = 0.0;
        }
        m
    }

    /// Read the gains back out of the matrix blocks (exact round-trip of the
    /// values used at assembly time).
    pub fn extract_gains(&self) -> GainSet {
        let Dims { m, n, .. } = self.dims;
        let last = m + n;
        GainSet {
            l11: DVector::from_fn(m, |i, _| self.a_cl[(i, last)]),
            l12: DVector::from_fn(n, |i, _| self.a_cl[(m + i, last)]),
            l21: DVector::from_fn(m, |j, _| self.a_cl[(last, j)]),
            l22: DVector::from_fn(n, |j, _| self.a_cl[(last, m + j)]),
            l3: self.a_cl[(last, last)],
        }
    }

    /// Overwrite the plant block of `out` (rows and columns m..m+n) with `a`.
    /// Used by the simulator to refresh a time-varying plant matrix without
    /// reassembling the generator.
    pub fn refresh_plant_block(&self, a: &DMatrix<f64>, out: &mut DMatrix<f64>) {
        let Dims { m, n, .. } = self.dims;
        debug_assert_eq!(a.nrows(), n);
        debug_assert_eq!(a.ncols(), n);
        debug_assert_eq!(out.nrows(), self.order());
        out.view_mut((m, m), (n, n)).copy_from(a);
    }
}

/// `blockdiag(S, A)` — the open-loop spectrum the column gains must render
/// cyclic.
pub fn build_a_s(s: &DMatrix<f64>, a: &DMatrix<f64>) -> DMatrix<f64> {
    let (m, n) = (s.nrows(), a.nrows());
    let mut out = DMatrix::zeros(m + n, m + n);
    out.view_mut((0, 0), (m, m)).copy_from(s);
    out.view_mut((m, m), (n, n)).copy_from(a);
    out
}

/// Assemble the augmented generator from the internal-model matrix S, the
/// plant matrix A (its frozen value for time-varying plants), the gain set,
/// and the per-channel forcing directions.
pub fn build_augmented(
    exo_s: &DMatrix<f64>,
    a: &DMatrix<f64>,
    gains: &GainSet,
    n_list: &[DVector<f64>],
) -> Result<AugmentedGenerator> {
    let m = exo_s.nrows();
    let n = a.nrows();
    if exo_s.ncols() != m {
        return Err(Error::DimensionMismatch(format!(
            "exosystem matrix must be square, got {}x{}",
            m,
            exo_s.ncols()
        )));
    }
    if a.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "plant matrix must be square, got {}x{}",
            n,
            a.ncols()
        )));
    }
    if n_list.is_empty() {
        return Err(Error::DimensionMismatch(
            "at least one forcing direction N_k is required".to_string(),
        ));
    }
    for (k, nk) in n_list.iter().enumerate() {
        if nk.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "forcing direction {} has length {}, expected {}",
                k,
                nk.len(),
                n
            )));
        }
    }
    let gain_problems = gains.dim_errors(m, n);
    if !gain_problems.is_empty() {
        return Err(Error::DimensionMismatch(gain_problems.join("; ")));
    }

    let order = m + n + 1;
    let last = m + n;
    let mut a_cl = DMatrix::zeros(order, order);
    a_cl.view_mut((0, 0), (m, m)).copy_from(exo_s);
    a_cl.view_mut((m, m), (n, n)).copy_from(a);
    for i in 0..m {
        a_cl[(i, last)] = gains.l11[i];
        a_cl[(last, i)] = gains.l21[i];
    }
    for i in 0..n {
        a_cl[(m + i, last)] = gains.l12[i];
        a_cl[(last, m + i)] = gains.l22[i];
    }
    a_cl[(last, last)] = gains.l3;

    let n_cl_list: Vec<DVector<f64>> = n_list
        .iter()
        .map(|nk| {
            let mut col = DVector::zeros(order);
            col.rows_mut(m, n).copy_from(nk);
            col
        })
        .collect();

    let mut c_cl = DMatrix::zeros(order, n);
    for i in 0..n {
        c_cl[(m + i, i)] = 1.0;
    }

    let mut b1 = DVector::zeros(order);
    b1[last] = 1.0;

    let gen = AugmentedGenerator {
        a_cl,
        n_cl_list,
        c_cl,
        dims: Dims {
            m,
            n,
            l: n_list.len(),
        },
        gains: gains.clone(),
        b1,
    };
    debug_assert!({
        let rebuilt = gen.a_s_prime() + &gen.b1 * gen.gains.l23().transpose();
        (&rebuilt - &gen.a_cl).amax() == 0.0
    });
    Ok(gen)
}

/// A state-space triple (A, B, C) with output `y = C x` and input through B.
#[derive(Debug, Clone)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
}

/// The forcing-to-dynamics error system of a single-channel generator:
/// input ξ, state x, output η̂. Errors when the generator has more than one
/// channel — use [`error_system_for_channel`] or [`error_systems`] then.
pub fn build_error_system(gen: &AugmentedGenerator) -> Result<StateSpace> {
    if gen.dims.l != 1 {
        return Err(Error::DimensionMismatch(format!(
            "generator has {} forcing channels; select one explicitly",
            gen.dims.l
        )));
    }
    error_system_for_channel(gen, 0)
}

/// The error system driven by forcing channel `k` alone.
pub fn error_system_for_channel(gen: &AugmentedGenerator, k: usize) -> Result<StateSpace> {
    let nk = gen.n_cl_list.get(k).ok_or_else(|| {
        Error::DimensionMismatch(format!(
            "channel index {} out of range ({} channels)",
            k, gen.dims.l
        ))
    })?;
    Ok(StateSpace {
        a: gen.a_cl.clone(),
        b: DMatrix::from_column_slice(gen.order(), 1, nk.as_slice()),
        c: gen.c_cl.transpose(),
    })
}

/// All per-channel error systems, in channel order.
pub fn error_systems(gen: &AugmentedGenerator) -> Vec<StateSpace> {
    (0..gen.dims.l)
        .map(|k| error_system_for_channel(gen, k).expect("channel index in range"))
        .collect()
}
