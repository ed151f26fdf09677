//! Shared helpers for the integration suites.
//!
//! Everything here is deliberately *independent* of the library's own
//! numerics: transfer gains go through a complex LU solve instead of the
//! real embedding, norms come from dense frequency grids and quadrature
//! instead of Hamiltonian bisection and Lyapunov solves, and reference
//! trajectories come from the matrix exponential of the stacked
//! exosystem-plus-generator drift instead of the Runge–Kutta integrator.

#![allow(dead_code)]

use intdyn::config::Scenario;
use intdyn::generator::{AugmentedGenerator, StateSpace};
use intdyn::model::{Exosystem, Plant};
use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;

// ---------------------------------------------------------------------------
// Bundled scenarios
// ---------------------------------------------------------------------------

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name)
}

pub fn load_example(name: &str) -> Scenario {
    Scenario::load(scenario_path(name))
        .unwrap_or_else(|e| panic!("bundled scenario {name} must load: {e}"))
}

// ---------------------------------------------------------------------------
// Independent frequency-domain oracles
// ---------------------------------------------------------------------------

/// Single-input transfer gain `‖C (iωI − A)⁻¹ B‖₂` via a complex LU solve.
pub fn transfer_gain_complex(sys: &StateSpace, omega: f64) -> f64 {
    assert_eq!(sys.b.ncols(), 1, "oracle expects single-input systems");
    let n = sys.a.nrows();
    let mut m = DMatrix::from_fn(n, n, |i, j| Complex::new(-sys.a[(i, j)], 0.0));
    for i in 0..n {
        m[(i, i)] += Complex::new(0.0, omega);
    }
    let b = sys.b.map(|v| Complex::new(v, 0.0));
    let z = m
        .lu()
        .solve(&b)
        .expect("iωI − A must be invertible for a Hurwitz A");
    let g = sys.c.map(|v| Complex::new(v, 0.0)) * z;
    g.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// `{0} ∪ logspace(−4, 4, points)` frequency grid.
pub fn log_grid(points: usize) -> Vec<f64> {
    let mut grid = Vec::with_capacity(points + 1);
    grid.push(0.0);
    for i in 0..points {
        let e = -4.0 + 8.0 * (i as f64) / ((points - 1) as f64);
        grid.push(10f64.powf(e));
    }
    grid
}

/// Lower bound on the H∞ norm: sup of the transfer gain over a dense grid.
pub fn hinf_grid(sys: &StateSpace, points: usize) -> f64 {
    log_grid(points)
        .iter()
        .map(|&w| transfer_gain_complex(sys, w))
        .fold(0.0, f64::max)
}

/// H2 norm by trapezoid quadrature of `(1/π) ∫₀^∞ ‖G(iω)‖_F² dω` over a
/// dense log grid, plus the analytic `‖CB‖²/ω_max` tail of the strictly
/// proper roll-off.
pub fn h2_quadrature(sys: &StateSpace, points: usize) -> f64 {
    let grid = log_grid(points);
    let vals: Vec<f64> = grid
        .iter()
        .map(|&w| {
            let g = transfer_gain_complex(sys, w);
            g * g
        })
        .collect();
    let mut integral = 0.0;
    for i in 1..grid.len() {
        integral += 0.5 * (vals[i] + vals[i - 1]) * (grid[i] - grid[i - 1]);
    }
    let cb = &sys.c * &sys.b;
    let tail = cb.iter().map(|v| v * v).sum::<f64>() / grid[grid.len() - 1];
    ((integral + tail) / std::f64::consts::PI).sqrt()
}

// ---------------------------------------------------------------------------
// Exact flow reference
// ---------------------------------------------------------------------------

/// Drift matrix of the stacked state `(w_1, …, w_l, x)`: exosystems run
/// free, and the generator state sees `A_cl x + Σ_k N_cl,k E_kᵀ w_k`.
/// Exact only for constant-A plants and noise-free runs.
pub fn stacked_drift(gen: &AugmentedGenerator, exos: &[Exosystem]) -> DMatrix<f64> {
    let order = gen.order();
    let m_total: usize = exos.iter().map(|e| e.dim()).sum();
    let dim = m_total + order;
    let mut drift = DMatrix::zeros(dim, dim);
    let mut at = 0usize;
    for (k, exo) in exos.iter().enumerate() {
        let mk = exo.dim();
        drift.view_mut((at, at), (mk, mk)).copy_from(&exo.s);
        for i in 0..order {
            for j in 0..mk {
                drift[(m_total + i, at + j)] = gen.n_cl_list[k][i] * exo.e[j];
            }
        }
        at += mk;
    }
    drift
        .view_mut((m_total, m_total), (order, order))
        .copy_from(&gen.a_cl);
    drift
}

/// η̂ samples of the exact (matrix-exponential) flow of the stacked system
/// at `t_i = i·dt`, i = 0..=steps, starting from `(w0_1, …, w0_l, 0)`.
pub fn exact_flow_eta(
    gen: &AugmentedGenerator,
    exos: &[Exosystem],
    dt: f64,
    steps: usize,
) -> Vec<DVector<f64>> {
    let drift = stacked_drift(gen, exos);
    let phi = (drift * dt).exp();
    let m_total: usize = exos.iter().map(|e| e.dim()).sum();
    let mut z = DVector::zeros(phi.nrows());
    let mut at = 0usize;
    for exo in exos {
        z.rows_mut(at, exo.dim()).copy_from(&exo.w0);
        at += exo.dim();
    }
    let (m, n) = (gen.dims.m, gen.dims.n);
    let mut out = Vec::with_capacity(steps + 1);
    out.push(z.rows(m_total + m, n).clone_owned());
    for _ in 0..steps {
        z = &phi * &z;
        out.push(z.rows(m_total + m, n).clone_owned());
    }
    out
}

// ---------------------------------------------------------------------------
// Deterministic random scenarios
// ---------------------------------------------------------------------------

/// One randomly generated single-channel problem: a marginally oscillating
/// exosystem and a (generally unstable) plant with well-separated spectrum.
pub struct RandomCase {
    pub exo: Exosystem,
    pub plant: Plant,
}

fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    loop {
        let g: DMatrix<f64> = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let qr = g.qr();
        let q = qr.q();
        if q.determinant().abs() > 0.5 {
            return q;
        }
    }
}

/// Draw `count` values from `range` pairwise separated by at least `min_sep`.
fn separated_draws(
    rng: &mut ChaCha8Rng,
    count: usize,
    range: std::ops::Range<f64>,
    min_sep: f64,
) -> Vec<f64> {
    let mut vals: Vec<f64> = Vec::with_capacity(count);
    let mut rejections = 0usize;
    while vals.len() < count {
        let v = rng.random_range(range.clone());
        if vals.iter().all(|&u| (u - v).abs() >= min_sep) {
            vals.push(v);
            rejections = 0;
        } else {
            // Earlier draws can block the whole interval; restart then.
            rejections += 1;
            if rejections > 200 {
                vals.clear();
                rejections = 0;
            }
        }
    }
    vals
}

/// Deterministic random case from a seed: `m, n ≤ 4`.
///
/// The exosystem is an orthogonal conjugation of a block diagonal of
/// rotations with well-separated frequencies (odd dimensions get one zero
/// block), so its spectrum sits on the imaginary axis and is semisimple with
/// distinct eigenvalues. The plant is an orthogonal conjugation of real
/// eigenvalues and spiral pairs whose real parts are bounded away from zero,
/// so exosystem and plant never share an eigenvalue and the combined block
/// spectrum stays cyclic.
pub fn random_case(seed: u64) -> RandomCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.random_range(1..=4usize);
    let n = rng.random_range(1..=4usize);

    // Exosystem: rotations at separated frequencies + at most one zero.
    let n_rot = m / 2;
    let freqs = separated_draws(&mut rng, n_rot, 0.3..2.5, 0.25);
    let mut s0 = DMatrix::zeros(m, m);
    for (b, &f) in freqs.iter().enumerate() {
        s0[(2 * b, 2 * b + 1)] = f;
        s0[(2 * b + 1, 2 * b)] = -f;
    }
    let q = random_orthogonal(&mut rng, m);
    let s = &q * s0 * q.transpose();
    let e = DVector::from_fn(m, |_, _| {
        let mag = rng.random_range(0.2..1.0);
        let sign = if rng.random_range(0.0..1.0) < 0.5 {
            -1.0
        } else {
            1.0
        };
        sign * mag
    });
    let w0 = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
    let w0 = if w0.norm() < 0.3 {
        DVector::from_element(m, 0.5)
    } else {
        w0
    };
    let exo = Exosystem::new(s, e, w0).expect("random exosystem dimensions");

    // Plant: separated eigenvalues with |Re| in [0.25, 1.5], mixed signs.
    let n_pairs = rng.random_range(0..=(n / 2));
    let n_reals = n - 2 * n_pairs;
    let res = separated_draws(&mut rng, n_pairs + n_reals, 0.25..1.5, 0.3);
    let mut d = DMatrix::zeros(n, n);
    let mut at = 0usize;
    for (i, &re_mag) in res.iter().enumerate() {
        let sign = if rng.random_range(0.0..1.0) < 0.5 {
            -1.0
        } else {
            1.0
        };
        let re = sign * re_mag;
        if i < n_pairs {
            let im = rng.random_range(0.4..2.0);
            d[(at, at)] = re;
            d[(at + 1, at + 1)] = re;
            d[(at, at + 1)] = im;
            d[(at + 1, at)] = -im;
            at += 2;
        } else {
            d[(at, at)] = re;
            at += 1;
        }
    }
    let qa = random_orthogonal(&mut rng, n);
    let a = &qa * d * qa.transpose();
    let mut n_col = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    if n_col.amax() < 0.3 {
        n_col[0] = 1.0;
    }
    let plant = Plant::constant(a, vec![n_col]).expect("random plant dimensions");

    RandomCase { exo, plant }
}
