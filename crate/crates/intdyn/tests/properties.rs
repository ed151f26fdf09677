//! Structural and statistical properties of the toolkit, beyond the pinned
//! acceptance numbers: stabilization robustness on random problems,
//! monotone residual decay, linearity in the forcing and the noise, the
//! equivalence between Kronecker-operator singularity and shared spectra,
//! the state-blowup guard, and certification window handling.

mod common;

use intdyn::generator::{build_a_s, build_augmented};
use intdyn::model::{Exosystem, GainSet, LmiRegion, Plant};
use intdyn::oracle::{certify_trace, certify_trace_multi, solve_sylvester};
use intdyn::sim::{simulate, NoiseSpec};
use intdyn::synthesis::{choose_l1, synthesize_l23, SynthesisSpec};
use intdyn::Error;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn rotation(freq: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.0, freq, -freq, 0.0])
}

fn zero_gains(m: usize, n: usize) -> GainSet {
    GainSet::from_stacked(m, n, &DVector::zeros(m + n), &DVector::zeros(m + n + 1))
        .expect("zero gains assemble")
}

// ---------------------------------------------------------------------------
// Stabilization robustness
// ---------------------------------------------------------------------------

/// At least 95% of random problems must come back with Hurwitz gains.
#[test]
fn random_problems_almost_always_stabilize() {
    const TRIALS: u64 = 50;
    const MIN_STABLE: usize = 48;
    let region = LmiRegion::intersection(vec![
        LmiRegion::strip(-10.0, -1.0).expect("strip"),
        LmiRegion::conic_sector(0.75 * std::f64::consts::PI).expect("sector"),
    ])
    .expect("intersection");
    let mut stable = 0usize;
    for seed in 40_000..40_000 + TRIALS {
        let case = common::random_case(seed);
        let spec = SynthesisSpec {
            gamma0: 50.0,
            nu0: 50.0,
            alpha: 0.5,
            beta: 0.5,
            region: region.clone(),
            budget: 600,
            seed,
            stability_margin: SynthesisSpec::DEFAULT_STABILITY_MARGIN,
        };
        let a_s = build_a_s(&case.exo.s, &case.plant.frozen_a);
        let Ok(l1) = choose_l1(&a_s) else { continue };
        let skeleton = zero_gains(case.exo.dim(), case.plant.n());
        let Ok(skel) = build_augmented(
            &case.exo.s,
            &case.plant.frozen_a,
            &skeleton,
            &case.plant.n_list,
        ) else {
            continue;
        };
        if let Ok(result) = synthesize_l23(&a_s, &l1, &skel.n_cl_list, &skel.c_cl, &spec) {
            stable += result.achieved.is_stable() as usize;
        }
    }
    assert!(
        stable >= MIN_STABLE,
        "only {stable}/{TRIALS} random problems stabilized (need {MIN_STABLE})"
    );
}

// ---------------------------------------------------------------------------
// Residual decay
// ---------------------------------------------------------------------------

/// The settled-tail residual bound shrinks by orders of magnitude as the
/// horizon grows (until it reaches the integrator's noise floor around
/// 1e-11): the generator converges, it does not hover.
#[test]
fn residual_tail_decays_with_horizon() {
    let sc = common::load_example("example1.toml");
    let gains = sc.gains.as_ref().expect("bundled gains");
    let gen = build_augmented(
        &sc.exosystems[0].s,
        &sc.plant.frozen_a,
        gains,
        &sc.plant.n_list,
    )
    .expect("generator assembles");
    let tail_at = |horizon: f64| {
        simulate(
            &gen,
            &sc.exosystems,
            &sc.plant,
            horizon,
            1e-3,
            &NoiseSpec::None,
        )
        .expect("simulation runs")
        .tail_bound
    };
    let (t6, t10, t15) = (tail_at(6.0), tail_at(10.0), tail_at(15.0));
    assert!(
        t15 < 0.1 * t10 && t10 < 0.1 * t6,
        "residual tails must decay by ≥ 10× per window: tail(6) = {t6:.3e}, \
         tail(10) = {t10:.3e}, tail(15) = {t15:.3e}"
    );
}

// ---------------------------------------------------------------------------
// Linearity
// ---------------------------------------------------------------------------

/// The closed loop is linear: doubling the noise amplitude doubles the
/// deviation from the clean run, to rounding.
#[test]
fn noise_response_is_linear_in_amplitude() {
    let sc = common::load_example("example1.toml");
    let gains = sc.gains.as_ref().expect("bundled gains");
    let gen = build_augmented(
        &sc.exosystems[0].s,
        &sc.plant.frozen_a,
        gains,
        &sc.plant.n_list,
    )
    .expect("generator assembles");
    let run = |noise: &NoiseSpec| {
        simulate(&gen, &sc.exosystems, &sc.plant, 20.0, 1e-3, noise).expect("simulation runs")
    };
    let clean = run(&NoiseSpec::None);
    let small = run(&NoiseSpec::Sinusoid {
        amplitude: 0.05,
        frequency: 0.7,
        phase: 0.3,
    });
    let large = run(&NoiseSpec::Sinusoid {
        amplitude: 0.10,
        frequency: 0.7,
        phase: 0.3,
    });
    let mut worst = 0.0_f64;
    let mut scale = 0.0_f64;
    for i in 0..clean.times.len() {
        let d_small = &small.eta_hat[i] - &clean.eta_hat[i];
        let d_large = &large.eta_hat[i] - &clean.eta_hat[i];
        worst = worst.max((&d_large - 2.0 * &d_small).norm());
        scale = scale.max(d_large.norm());
    }
    assert!(scale > 1e-4, "the noise probe must actually perturb the run");
    assert!(
        worst <= 1e-6 * scale,
        "noise response must be linear: worst deviation {worst:.3e} vs scale {scale:.3e}"
    );
}

/// Two channels carrying the same signal through opposite couplings cancel
/// exactly: the state never leaves zero, bit for bit.
#[test]
fn opposed_channels_cancel_exactly() {
    let s = rotation(0.8);
    let e = DVector::from_row_slice(&[1.0, 0.4]);
    let w0 = DVector::from_row_slice(&[1.0, -0.3]);
    let exo = Exosystem::new(s, e, w0).expect("exosystem assembles");
    let a = DMatrix::from_row_slice(2, 2, &[0.3, 1.0, 0.0, -0.5]);
    let n1 = DVector::from_row_slice(&[1.0, 0.5]);
    let plant = Plant::constant(a, vec![n1.clone(), -n1]).expect("plant assembles");
    let gains = zero_gains(2, 2);
    let gen =
        build_augmented(&exo.s, &plant.frozen_a, &gains, &plant.n_list).expect("generator");
    let trace = simulate(
        &gen,
        &[exo.clone(), exo],
        &plant,
        20.0,
        1e-2,
        &NoiseSpec::None,
    )
    .expect("simulation runs");
    assert_eq!(trace.max_state, 0.0, "opposed channels must cancel exactly");
    assert_eq!(trace.tail_bound, 0.0);
    assert!(trace.eta_hat.iter().all(|v| v.iter().all(|&x| x == 0.0)));
}

/// Multi-channel certification is linear in the exosystem states: scaling
/// every initial condition scales the settled trajectory.
#[test]
fn multi_channel_certification_is_linear() {
    // Constant-A variant of the two-channel scenario, reusing its gains.
    let sc = common::load_example("example2.toml");
    let gains = sc.gains.as_ref().expect("bundled gains");
    let plant =
        Plant::constant(sc.plant.frozen_a.clone(), sc.plant.n_list.clone()).expect("plant");
    let gen = build_augmented(&sc.exosystems[0].s, &plant.frozen_a, gains, &plant.n_list)
        .expect("generator assembles");

    let sols: Vec<_> = (0..2)
        .map(|k| {
            solve_sylvester(
                &sc.exosystems[k].s,
                &plant.frozen_a,
                &plant.n_list[k],
                &sc.exosystems[k].e,
            )
            .expect("bounded solution exists")
        })
        .collect();

    let base = simulate(&gen, &sc.exosystems, &plant, 60.0, 1e-3, &NoiseSpec::None)
        .expect("simulation runs");
    let err = certify_trace_multi(&base, &sols, &sc.exosystems, 0.5).expect("certification runs");
    assert!(
        err < 1e-6,
        "constant-A two-channel run must track its bounded solution, got {err:.3e}"
    );

    let scaled_exos: Vec<Exosystem> = sc
        .exosystems
        .iter()
        .map(|exo| {
            Exosystem::new(exo.s.clone(), exo.e.clone(), 2.0 * &exo.w0).expect("exosystem")
        })
        .collect();
    let scaled = simulate(&gen, &scaled_exos, &plant, 60.0, 1e-3, &NoiseSpec::None)
        .expect("simulation runs");
    let err_scaled =
        certify_trace_multi(&scaled, &sols, &scaled_exos, 0.5).expect("certification runs");
    assert!(err_scaled < 2e-6, "scaled run must certify, got {err_scaled:.3e}");

    let mut worst = 0.0_f64;
    for (two, one) in scaled.eta_hat.iter().zip(base.eta_hat.iter()) {
        worst = worst.max((two - 2.0 * one).norm());
    }
    let bound = 1e-9 * scaled.max_state.max(1.0);
    assert!(
        worst <= bound,
        "doubling every w0 must double the trajectory: deviation {worst:.3e} > {bound:.3e}"
    );
}

// ---------------------------------------------------------------------------
// Blowup guard
// ---------------------------------------------------------------------------

/// Without feedback, forcing an unstable plant trips the norm guard instead
/// of returning a garbage trace.
#[test]
fn unforced_instability_trips_the_blowup_guard() {
    for seed in [1u64, 2, 3, 4, 5] {
        let case = common::random_case(50_000 + seed);
        // Shift the plant spectrum to a guaranteed growth rate.
        let n = case.plant.n();
        let eigs = intdyn::ctrb::eigenvalues(&case.plant.frozen_a).expect("spectrum");
        let abscissa = eigs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        let mut a = case.plant.frozen_a.clone();
        for i in 0..n {
            a[(i, i)] += 0.75 - abscissa;
        }
        let plant = Plant::constant(a, case.plant.n_list.clone()).expect("plant assembles");
        let gains = zero_gains(case.exo.dim(), n);
        let gen =
            build_augmented(&case.exo.s, &plant.frozen_a, &gains, &plant.n_list).expect("generator");
        let result = simulate(
            &gen,
            std::slice::from_ref(&case.exo),
            &plant,
            120.0,
            4e-3,
            &NoiseSpec::None,
        );
        match result {
            Err(Error::StateBlowup { t, norm }) => {
                assert!(t > 0.0 && norm > 1e9, "guard fired with t {t}, norm {norm:.3e}");
            }
            other => panic!(
                "seed {seed}: expected the blowup guard to fire, got {:?}",
                other.map(|tr| (tr.max_state, tr.tail_bound))
            ),
        }
    }
}

// ---------------------------------------------------------------------------
// Kronecker operator ⇔ shared spectra (property-based)
// ---------------------------------------------------------------------------

/// `Sᵀ ⊗ I_n − I_m ⊗ A` assembled directly, for the cross-check.
fn kronecker_operator(s: &DMatrix<f64>, a: &DMatrix<f64>) -> DMatrix<f64> {
    let (m, n) = (s.nrows(), a.nrows());
    let dim = m * n;
    let mut op = DMatrix::zeros(dim, dim);
    for bi in 0..m {
        for bj in 0..m {
            // (Sᵀ)_{bi,bj} = S_{bj,bi}
            for i in 0..n {
                op[(bi * n + i, bj * n + i)] += s[(bj, bi)];
            }
        }
    }
    for bi in 0..m {
        for i in 0..n {
            for j in 0..n {
                op[(bi * n + i, bi * n + j)] -= a[(i, j)];
            }
        }
    }
    op
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// A plant sharing the exosystem's oscillation frequency makes the
    /// vectorized operator singular, and the solver must refuse; shifting or
    /// detuning the plant restores a well-posed solve.
    #[test]
    fn sylvester_solvability_matches_spectral_overlap(
        freq in 0.3..2.5f64,
        detune in 0.1..1.0f64,
        shift in 0.2..1.0f64,
    ) {
        let s = rotation(freq);
        let e = DVector::from_row_slice(&[1.0, 0.0]);
        let n_vec = DVector::from_row_slice(&[1.0, 0.5]);

        // Shared spectrum: ±i·freq on both sides.
        let a_shared = rotation(freq);
        let op = kronecker_operator(&s, &a_shared);
        let sv = op.svd(false, false).singular_values;
        let ratio = sv[sv.len() - 1] / sv[0];
        prop_assert!(ratio < 1e-9, "shared spectrum must be singular, σmin/σmax = {ratio:.3e}");
        match solve_sylvester(&s, &a_shared, &n_vec, &e) {
            Err(Error::CommonEigenvalue) => {}
            other => prop_assert!(false, "expected a shared-eigenvalue refusal, got {other:?}"),
        }

        // Detuned oscillator: disjoint spectra on the axis.
        let a_detuned = rotation(freq + detune);
        let op = kronecker_operator(&s, &a_detuned);
        let sv = op.svd(false, false).singular_values;
        let ratio = sv[sv.len() - 1] / sv[0];
        prop_assert!(ratio > 1e-3, "detuned spectra must be well posed, σmin/σmax = {ratio:.3e}");
        let sol = solve_sylvester(&s, &a_detuned, &n_vec, &e);
        prop_assert!(sol.is_ok(), "detuned solve must succeed, got {sol:?}");

        // Shifted oscillator: spectrum moved off the axis entirely.
        let mut a_shifted = rotation(freq);
        a_shifted[(0, 0)] += shift;
        a_shifted[(1, 1)] += shift;
        let sol = solve_sylvester(&s, &a_shifted, &n_vec, &e).expect("shifted solve succeeds");
        prop_assert!(sol.residual < 1e-8 * (1.0 + sol.pi.norm()));
        prop_assert!(sol.condition_estimate.is_finite());
    }

    /// Certification works for every settle fraction on a real trace and
    /// refuses an empty one.
    #[test]
    fn certification_window_is_total_on_real_traces(settle in 0.0..0.99f64) {
        let sc = common::load_example("example1.toml");
        let gains = sc.gains.as_ref().expect("bundled gains");
        let gen = build_augmented(
            &sc.exosystems[0].s,
            &sc.plant.frozen_a,
            gains,
            &sc.plant.n_list,
        )
        .expect("generator assembles");
        let trace = simulate(&gen, &sc.exosystems, &sc.plant, 2.0, 1e-2, &NoiseSpec::None)
            .expect("simulation runs");
        let sol = solve_sylvester(
            &sc.exosystems[0].s,
            &sc.plant.frozen_a,
            &sc.plant.n_list[0],
            &sc.exosystems[0].e,
        )
        .expect("bounded solution exists");
        let err = certify_trace(&trace, &sol, &sc.exosystems[0], settle)
            .expect("certification runs on a populated trace");
        prop_assert!(err.is_finite());

        let mut emptied = trace.clone();
        emptied.times.clear();
        emptied.eta_hat.clear();
        match certify_trace(&emptied, &sol, &sc.exosystems[0], settle) {
            Err(Error::InsufficientWindow(_)) => {}
            other => prop_assert!(false, "expected an empty-window refusal, got {other:?}"),
        }
    }
}
