//! Gain synthesis for the augmented generator.
//!
//! The column gains `L1 = [L11; L12]` are chosen constructively: the block
//! spectrum `A_S = blockdiag(S, A)` is cyclic (or synthesis is impossible
//! with a single coupling state), so a controllable input direction exists
//! and is computed directly, then normalized.
//!
//! The row gains `L23 = [L21; L22; L3]` are free parameters of
//! `A_cl = A_S′ + B1 L23ᵀ`. They are found by a deterministic multi-start
//! Nelder–Mead search on a penalty objective combining the worst-channel H∞
//! and H2 norms, soft norm budgets, and a pole-region penalty. Each start is
//! seeded by Ackermann pole placement at real poles spread across the
//! region's real interval, so every start already begins stabilizing.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{h2_norm, hinf_norm, norm_report, NormReport};
use crate::ctrb::{construct_input_vector, controllability_matrix, pbh_controllable};
use crate::error::{Error, Result};
use crate::generator::StateSpace;
use crate::linalg;
use crate::model::{Exosystem, GainSet, LmiRegion, Plant};

/// Search-phase H∞ bisection tolerance (the final report uses 1e-6).
const SEARCH_HINF_TOL: f64 = 1e-2;
/// Final-report H∞ bisection tolerance.
const REPORT_HINF_TOL: f64 = 1e-6;

/// Objective weights for constraint violations.
const NORM_BUDGET_WEIGHT: f64 = 1e3;
const REGION_WEIGHT: f64 = 1e4;
const UNSTABLE_BASE: f64 = 1e9;
const EVAL_FAILED: f64 = 1e12;

/// Synthesis problem description.
#[derive(Debug, Clone)]
pub struct SynthesisSpec {
    /// H∞ budget: the worst channel must satisfy `‖G_k‖∞ ≤ gamma0`.
    pub gamma0: f64,
    /// H2 budget: the worst channel must satisfy `‖G_k‖₂ ≤ nu0`.
    pub nu0: f64,
    /// Weight of the H∞ norm in the objective.
    pub alpha: f64,
    /// Weight of the H2 norm in the objective.
    pub beta: f64,
    /// Closed-loop pole region.
    pub region: LmiRegion,
    /// Total objective-evaluation budget across all starts.
    pub budget: usize,
    /// Seed for the deterministic start jitter.
    pub seed: u64,
    /// Poles are pushed this far inside the region during the search.
    pub stability_margin: f64,
}

impl SynthesisSpec {
    pub const DEFAULT_STABILITY_MARGIN: f64 = 0.05;

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma0 > 0.0) || !(self.nu0 > 0.0) {
            return Err(Error::Validation(format!(
                "norm budgets must be positive, got gamma0 = {}, nu0 = {}",
                self.gamma0, self.nu0
            )));
        }
        if !(self.alpha >= 0.0) || !(self.beta >= 0.0) || self.alpha + self.beta <= 0.0 {
            return Err(Error::Validation(format!(
                "objective weights must be nonnegative with a positive sum, got alpha = {}, beta = {}",
                self.alpha, self.beta
            )));
        }
        if self.budget == 0 {
            return Err(Error::Validation(
                "synthesis budget must be at least 1 evaluation".to_string(),
            ));
        }
        if !(self.stability_margin >= 0.0) {
            return Err(Error::Validation(format!(
                "stability margin must be nonnegative, got {}",
                self.stability_margin
            )));
        }
        Ok(())
    }
}

/// Outcome of a row-gain search.
#[derive(Debug, Clone)]
pub struct SynthesisResult {
    pub gains: GainSet,
    /// Final norms and poles at report tolerance.
    pub achieved: NormReport,
    /// Best penalty-objective value found.
    pub objective: f64,
    /// Whether the achieved norms and poles meet every budget.
    pub feasible: bool,
    /// Objective evaluations spent.
    pub iterations: usize,
}

/// Choose the column gains `L1` for `A_S = blockdiag(S, A)`: a constructive
/// controllable direction, scaled so its largest-magnitude entry is +1.
pub fn choose_l1(a_s: &DMatrix<f64>) -> Result<DVector<f64>> {
    let b = construct_input_vector(a_s)?;
    let (idx, _) = b
        .iter()
        .enumerate()
        .max_by(|(_, x), (_, y)| x.abs().total_cmp(&y.abs()))
        .expect("input vector is nonempty");
    let pivot = b[idx];
    if pivot == 0.0 {
        return Err(Error::NumericalFailure(
            "constructed input vector is zero".to_string(),
        ));
    }
    Ok(b / pivot)
}

/// Ackermann pole placement for a single-input pair: returns K such that
/// `A − B Kᵀ` has characteristic polynomial `Π (s − poles[i])`.
fn ackermann(a: &DMatrix<f64>, b: &DVector<f64>, poles: &[f64]) -> Result<DVector<f64>> {
    let n = a.nrows();
    debug_assert_eq!(poles.len(), n);
    let w = controllability_matrix(a, b);
    let sv = linalg::singular_values(&w);
    if sv[sv.len() - 1] <= 1e-12 * sv[0] {
        return Err(Error::Uncontrollable(format!(
            "controllability matrix is rank-deficient (σ_min/σ_max = {:.3e})",
            sv[sv.len() - 1] / sv[0]
        )));
    }
    // Desired characteristic coefficients by convolution: Π (s − p).
    let mut coeffs = vec![1.0]; // highest power first
    for &p in poles {
        let mut next = vec![0.0; coeffs.len() + 1];
        for (i, &c) in coeffs.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c * p;
        }
        coeffs = next;
    }
    // p(A) by Horner's scheme.
    let mut pa = DMatrix::zeros(n, n);
    for &c in &coeffs {
        pa = &pa * a;
        for i in 0..n {
            pa[(i, i)] += c;
        }
    }
    // Kᵀ = e_nᵀ W⁻¹ p(A)  ⇒  K = p(A)ᵀ z with Wᵀ z = e_n.
    let mut e_n = DVector::zeros(n);
    e_n[n - 1] = 1.0;
    let z = w.transpose().lu().solve(&e_n).ok_or_else(|| {
        Error::Uncontrollable("controllability matrix is numerically singular".to_string())
    })?;
    Ok(pa.transpose() * z)
}

/// One Nelder–Mead run (reflection 1, expansion 2, contraction 0.5,
/// shrink 0.5) from `x0`, spending at most `max_evals` objective calls.
/// Returns the best point, its value, and the evaluations used.
fn nelder_mead(
    f: &mut dyn FnMut(&DVector<f64>) -> f64,
    x0: &DVector<f64>,
    max_evals: usize,
) -> (DVector<f64>, f64, usize) {
    let dim = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &DVector<f64>, evals: &mut usize| -> f64 {
        *evals += 1;
        f(x)
    };

    let mut simplex: Vec<(DVector<f64>, f64)> = Vec::with_capacity(dim + 1);
    let f0 = eval(x0, &mut evals);
    simplex.push((x0.clone(), f0));
    for i in 0..dim {
        if evals >= max_evals {
            break;
        }
        let mut xi = x0.clone();
        xi[i] += 0.1 * xi[i].abs().max(1.0);
        let fi = eval(&xi, &mut evals);
        simplex.push((xi, fi));
    }
    if simplex.len() < dim + 1 {
        let best = simplex
            .iter()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty simplex");
        return (best.0.clone(), best.1, evals);
    }

    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let f_best = simplex[0].1;
        let f_worst = simplex[dim].1;
        if (f_worst - f_best).abs() <= 1e-12 * (1.0 + f_best.abs()) {
            break;
        }
        let centroid = {
            let mut c = DVector::zeros(dim);
            for (x, _) in simplex.iter().take(dim) {
                c += x;
            }
            c / dim as f64
        };
        let reflected = &centroid * 2.0 - &simplex[dim].0;
        let f_ref = eval(&reflected, &mut evals);
        if f_ref < simplex[0].1 {
            if evals < max_evals {
                let expanded = &centroid + (&reflected - &centroid) * 2.0;
                let f_exp = eval(&expanded, &mut evals);
                simplex[dim] = if f_exp < f_ref {
                    (expanded, f_exp)
                } else {
                    (reflected, f_ref)
                };
            } else {
                simplex[dim] = (reflected, f_ref);
            }
        } else if f_ref < simplex[dim - 1].1 {
            simplex[dim] = (reflected, f_ref);
        } else {
            if evals >= max_evals {
                break;
            }
            let contracted = if f_ref < simplex[dim].1 {
                &centroid + (&reflected - &centroid) * 0.5
            } else {
                &centroid + (&simplex[dim].0 - &centroid) * 0.5
            };
            let f_con = eval(&contracted, &mut evals);
            if f_con < simplex[dim].1.min(f_ref) {
                simplex[dim] = (contracted, f_con);
            } else {
                // Shrink toward the best vertex.
                let anchor = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    if evals >= max_evals {
                        break;
                    }
                    entry.0 = (&entry.0 + &anchor) * 0.5;
                    entry.1 = eval(&entry.0, &mut evals);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    (simplex[0].0.clone(), simplex[0].1, evals)
}

/// Search for row gains `L23` placing the poles of `A_S′ + B1 L23ᵀ` in the
/// region while meeting the norm budgets in `spec`.
///
/// `a_s` is `blockdiag(S, A)` (m+n square), `l1` the chosen column gains,
/// `n_cl_list` the augmented forcing directions (length m+n+1 each), and
/// `c_cl` the (m+n+1)×n read-out of η̂.
///
/// Returns `Ok` with `feasible = false` when the best stabilizing gains miss
/// a budget, and `Err(BudgetExhausted)` when no evaluated point stabilized.
pub fn synthesize_l23(
    a_s: &DMatrix<f64>,
    l1: &DVector<f64>,
    n_cl_list: &[DVector<f64>],
    c_cl: &DMatrix<f64>,
    spec: &SynthesisSpec,
) -> Result<SynthesisResult> {
    spec.validate()?;
    let nm = a_s.nrows();
    let order = nm + 1;
    let n = c_cl.ncols();
    if a_s.ncols() != nm || n > nm || l1.len() != nm || c_cl.nrows() != order {
        return Err(Error::DimensionMismatch(format!(
            "inconsistent synthesis dimensions: A_S {}x{}, L1 {}, C_cl {}x{}",
            a_s.nrows(),
            a_s.ncols(),
            l1.len(),
            c_cl.nrows(),
            c_cl.ncols()
        )));
    }
    let m = nm - n;
    if n_cl_list.is_empty() || n_cl_list.iter().any(|v| v.len() != order) {
        return Err(Error::DimensionMismatch(
            "augmented forcing directions must be nonempty and of length m+n+1".to_string(),
        ));
    }

    // A_S′ = [[A_S, L1], [0, 0]] and B1 = e_last.
    let mut a_s_prime = DMatrix::zeros(order, order);
    a_s_prime.view_mut((0, 0), (nm, nm)).copy_from(a_s);
    for i in 0..nm {
        a_s_prime[(i, nm)] = l1[i];
    }
    let mut b1 = DVector::zeros(order);
    b1[nm] = 1.0;
    if !pbh_controllable(&a_s_prime, &b1, crate::ctrb::DEFAULT_RANK_TOL)? {
        return Err(Error::Uncontrollable(
            "the pair (A_S′, B1) fails the PBH test; the chosen column gains \
             cannot stabilize every mode"
                .to_string(),
        ));
    }

    let c_t = c_cl.transpose();
    let mut evals_used = 0usize;
    let mut objective = |l23: &DVector<f64>| -> f64 {
        let a_cl = &a_s_prime + &b1 * l23.transpose();
        let Ok(eigs) = linalg::eig(&a_cl) else {
            return EVAL_FAILED;
        };
        let abscissa = linalg::spectral_abscissa(&eigs);
        if abscissa >= 0.0 {
            return UNSTABLE_BASE + NORM_BUDGET_WEIGHT * abscissa;
        }
        let mut worst_h2 = 0.0_f64;
        let mut worst_hinf = 0.0_f64;
        for nk in n_cl_list {
            let sys = StateSpace {
                a: a_cl.clone(),
                b: DMatrix::from_column_slice(order, 1, nk.as_slice()),
                c: c_t.clone(),
            };
            match h2_norm(&sys) {
                Ok(v) if v.is_finite() => worst_h2 = worst_h2.max(v),
                _ => return EVAL_FAILED,
            }
            match hinf_norm(&sys, SEARCH_HINF_TOL) {
                Ok(v) if v.is_finite() => worst_hinf = worst_hinf.max(v),
                _ => return EVAL_FAILED,
            }
        }
        let mut pen = spec.alpha * worst_hinf + spec.beta * worst_h2;
        pen += NORM_BUDGET_WEIGHT
            * ((worst_hinf - spec.gamma0).max(0.0) + (worst_h2 - spec.nu0).max(0.0));
        let region_violation: f64 = eigs
            .iter()
            .map(|&z| (spec.region.violation(z) + spec.stability_margin).max(0.0))
            .sum();
        pen + REGION_WEIGHT * region_violation
    };

    // Seed pole sets across the region's real interval.
    let (raw_lo, raw_hi) = spec.region.real_interval();
    let mut lo = raw_lo.max(-50.0);
    let mut hi = raw_hi.min(-0.2);
    if !(lo < hi) {
        lo = -10.0;
        hi = -1.0;
    }
    let span = hi - lo;
    let base: Vec<f64> = (0..order)
        .map(|i| {
            let frac = if order == 1 {
                0.5
            } else {
                i as f64 / (order - 1) as f64
            };
            (lo + 0.1 * span) + frac * (0.85 * span)
        })
        .collect();

    let rounds = (spec.budget / 250).clamp(1, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut best: Option<(f64, DVector<f64>)> = None;
    for round in 0..rounds {
        let round_budget = spec.budget / rounds
            + if round < spec.budget % rounds { 1 } else { 0 };
        if round_budget == 0 {
            continue;
        }
        let poles: Vec<f64> = base
            .iter()
            .map(|&p| {
                let jitter = if round == 0 {
                    0.0
                } else {
                    rng.random_range(-0.12..0.12) * span
                };
                (p + jitter).clamp(lo + 0.02 * span, hi - 0.02 * span)
            })
            .collect();
        let seed_l23 = match ackermann(&a_s_prime, &b1, &poles) {
            Ok(k) => -k,
            Err(_) => continue,
        };
        let (x, fx, used) = nelder_mead(&mut objective, &seed_l23, round_budget);
        evals_used += used;
        let improved = match &best {
            Some((f_best, _)) => fx < *f_best,
            None => true,
        };
        if improved {
            best = Some((fx, x));
        }
    }

    let Some((f_best, l23_best)) = best else {
        return Err(Error::Uncontrollable(
            "no synthesis start produced a pole-placement seed".to_string(),
        ));
    };

    let gains = GainSet::from_stacked(m, n, l1, &l23_best)?;
    let a_cl = &a_s_prime + &b1 * l23_best.transpose();
    let eigs = linalg::eig(&a_cl)?;
    if linalg::spectral_abscissa(&eigs) >= 0.0 {
        return Err(Error::BudgetExhausted {
            iterations: evals_used,
            best: Box::new(gains),
        });
    }
    let systems: Vec<StateSpace> = n_cl_list
        .iter()
        .map(|nk| StateSpace {
            a: a_cl.clone(),
            b: DMatrix::from_column_slice(order, 1, nk.as_slice()),
            c: c_t.clone(),
        })
        .collect();
    let achieved = norm_report(&systems, Some(&spec.region), REPORT_HINF_TOL)?;
    let feasible = achieved.is_stable()
        && achieved.region_ok
        && achieved.hinf <= spec.gamma0
        && achieved.h2 <= spec.nu0;
    Ok(SynthesisResult {
        gains,
        achieved,
        objective: f_best,
        feasible,
        iterations: evals_used,
    })
}

/// Re-derive the norm report for explicit gains against a synthesis spec's
/// region, using the frozen plant matrix.
pub fn verify_gains(
    exos: &[Exosystem],
    plant: &Plant,
    gains: &GainSet,
    spec: &SynthesisSpec,
) -> Result<NormReport> {
    let Some(first) = exos.first() else {
        return Err(Error::Validation(
            "gain verification needs at least one exosystem".to_string(),
        ));
    };
    let gen = crate::generator::build_augmented(&first.s, &plant.frozen_a, gains, &plant.n_list)?;
    let systems = crate::generator::error_systems(&gen);
    norm_report(&systems, Some(&spec.region), REPORT_HINF_TOL)
}
