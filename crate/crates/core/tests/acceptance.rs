//! Acceptance criteria for the whole pipeline, one test per criterion.
//!
//! Every expected value here is produced by an independent route — closed
//! forms, brute-force searches, or direct numerical propagation — and the
//! tolerance for each comparison is pinned next to the assertion.

use num_complex::Complex64;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use geomphase::cyclic::{self, circle_distance, CyclicAnalysis};
use geomphase::defaults;
use geomphase::dynamics;
use geomphase::linalg::{self, CVector};
use geomphase::operators;
use geomphase::par::Mode;
use geomphase::rational::Rational;
use geomphase::report;
use geomphase::spectral::{Spectrum, SpectrumOptions};

use std::f64::consts::{PI, TAU};

// ---------------------------------------------------------------- helpers

fn opts() -> SpectrumOptions {
    SpectrumOptions::default()
}

/// Random spectrum with eigenvalues `n_i/d`: distinct integer numerators,
/// so every winding stays bounded by the numerator range.
fn random_rational_spectrum(
    rng: &mut ChaCha8Rng,
    levels: usize,
    numerator_range: std::ops::RangeInclusive<i64>,
    max_denominator: u64,
) -> Spectrum {
    let d = rng.gen_range(1..=max_denominator) as i64;
    let mut numerators = Vec::new();
    while numerators.len() < levels {
        let n = rng.gen_range(numerator_range.clone());
        if !numerators.contains(&n) {
            numerators.push(n);
        }
    }
    let entries: Vec<Rational> = numerators
        .iter()
        .map(|&n| Rational::new(n, d).unwrap())
        .collect();
    Spectrum::from_rational_diagonal(&entries, 1.0, 1.0, &opts()).unwrap()
}

/// Random state with every probability in `[0.5, 1.5]/norm` — bounded away
/// from zero so no level silently drops off the support.
fn random_balanced_state(rng: &mut ChaCha8Rng, dim: usize) -> CVector {
    let mut state: CVector = (0..dim)
        .map(|_| {
            let modulus = rng.gen_range(0.5f64..1.5).sqrt();
            let phase = rng.gen_range(0.0..TAU);
            Complex64::from_polar(modulus, phase)
        })
        .collect();
    let n = linalg::norm(&state);
    for z in &mut state {
        *z /= n;
    }
    state
}

fn analyze(spectrum: &Spectrum, state: &CVector) -> CyclicAnalysis {
    let supp = cyclic::support(spectrum, state, defaults::EPS_SUPPORT).unwrap();
    cyclic::analyze_cycle(&supp).unwrap()
}

/// Return fidelity `|⟨ψ(0)|ψ(t)⟩|²` from support weights alone — an
/// independent closed form, no propagation involved.
fn fidelity_from_weights(analysis: &CyclicAnalysis, t: f64) -> f64 {
    let mut z = Complex64::new(0.0, 0.0);
    for (l, w) in analysis
        .support
        .lambdas
        .iter()
        .zip(&analysis.support.probabilities)
    {
        z += w * Complex64::from_polar(1.0, -(l - analysis.gauge_lambda) * t / analysis.hbar);
    }
    z.norm_sqr()
}

fn max_winding(analysis: &CyclicAnalysis) -> f64 {
    analysis
        .p
        .iter()
        .map(|p| p.to_f64().unwrap())
        .fold(0.0f64, f64::max)
}

fn propagate_one_period(
    spectrum: &Spectrum,
    state: &CVector,
    analysis: &CyclicAnalysis,
    min_samples: usize,
) -> dynamics::Trajectory {
    let tau = analysis.tau.unwrap();
    let n = ((256.0 * max_winding(analysis)) as usize)
        .max(min_samples)
        .min(65_536);
    dynamics::propagate_exact(
        spectrum,
        state,
        analysis.gauge_lambda,
        &dynamics::time_grid(tau, n),
        Mode::Auto,
    )
    .unwrap()
}

// -------------------------------------------------------------- criteria

/// Two-level superpositions cos(θ/2)|0⟩ + sin(θ/2)|1⟩ over a 100-point θ
/// grid: the closed form π(1 − cos θ), the winding pipeline, and the
/// propagated Pancharatnam-minus-dynamical oracle agree pairwise.
#[test]
fn criterion_01_two_level_three_routes_agree() {
    const TOL: f64 = 1e-8;
    let rows = report::sweep_two_level(100, 2048).unwrap();
    assert_eq!(rows.len(), 100);

    let mut worst_pipeline = 0.0f64;
    let mut worst_oracle = 0.0f64;
    let mut oracle_rows = 0;
    for row in &rows {
        let closed = PI * (1.0 - row.theta.cos());
        let closed = closed.rem_euclid(TAU);
        assert!(
            (row.gamma_closed_form - closed).abs() < 1e-12,
            "closed form at θ = {}",
            row.theta
        );
        worst_pipeline = worst_pipeline.max(circle_distance(closed, row.gamma_pipeline));
        if row.gamma_oracle.is_nan() {
            // the endpoints are stationary: nothing propagates
            assert!(row.theta < 1e-12 || (row.theta - PI).abs() < 1e-12);
            continue;
        }
        oracle_rows += 1;
        worst_oracle = worst_oracle.max(circle_distance(closed, row.gamma_oracle));
    }
    println!("closed vs pipeline: {worst_pipeline:.3e}; closed vs oracle: {worst_oracle:.3e} over {oracle_rows} rows");
    assert!(worst_pipeline <= TOL, "{worst_pipeline:.3e} > {TOL:.1e}");
    assert!(worst_oracle <= TOL, "{worst_oracle:.3e} > {TOL:.1e}");
    assert_eq!(oracle_rows, 98);
}

/// 200 random commensurate spectra (denominators ≤ 50, numerators in
/// [−60, 60]) with balanced random states: the computed τ really revives
/// the propagated state, and no earlier fraction τ/k does.
#[test]
fn criterion_02_computed_period_revives_and_is_minimal() {
    const RETURN_TOL: f64 = 1e-10;
    const MINIMALITY_MARGIN: f64 = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_return = 0.0f64;
    let mut worst_margin = f64::INFINITY;
    for _ in 0..200 {
        let levels = rng.gen_range(2..=4usize);
        let spectrum = random_rational_spectrum(&mut rng, levels, -60..=60, 50);
        let state = random_balanced_state(&mut rng, levels);
        let analysis = analyze(&spectrum, &state);
        assert!(analysis.cyclic && !analysis.stationary);
        let tau = analysis.tau.unwrap();

        let traj = dynamics::propagate_exact(
            &spectrum,
            &state,
            analysis.gauge_lambda,
            &[0.0, tau],
            Mode::Auto,
        )
        .unwrap();
        let fidelity = linalg::dot(&traj.samples[0].state, traj.final_state()).norm_sqr();
        worst_return = worst_return.max(1.0 - fidelity);

        let earliest = (2..=64)
            .map(|k| fidelity_from_weights(&analysis, tau / k as f64))
            .fold(0.0f64, f64::max);
        worst_margin = worst_margin.min(1.0 - earliest);
    }
    println!("worst return deficit {worst_return:.3e}; worst minimality margin {worst_margin:.3e}");
    assert!(worst_return <= RETURN_TOL);
    assert!(worst_margin >= MINIMALITY_MARGIN);
}

/// The propagated Pancharatnam-minus-dynamical phase lands on the
/// winding-formula γ (mod 2π) for random three-level states.
#[test]
fn criterion_03_propagated_phase_matches_winding_formula() {
    const TOL: f64 = 1e-8;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..8 {
        let spectrum = random_rational_spectrum(&mut rng, 3, 0..=8, 3);
        let state = random_balanced_state(&mut rng, 3);
        let analysis = analyze(&spectrum, &state);
        let traj = propagate_one_period(&spectrum, &state, &analysis, 4096);
        let ledger = dynamics::phase_ledger(&traj, &analysis).unwrap();
        let geometric = *ledger.geometric.last().unwrap();
        worst = worst.max(circle_distance(geometric, analysis.gamma_reduced));
    }
    println!("worst |propagated − winding formula| on the circle: {worst:.3e}");
    assert!(worst <= TOL);
}

/// Winding integers are exact: every `p_i = (r_i − r_j)·L_ψ` clears its
/// denominator with no remainder, the gauge level gets zero, nothing is
/// negative, and pairwise differences close under the integer algebra.
#[test]
fn criterion_04_winding_integers_are_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..100 {
        let levels = rng.gen_range(2..=4usize);
        let spectrum = random_rational_spectrum(&mut rng, levels, -60..=60, 50);
        let state = random_balanced_state(&mut rng, levels);
        let analysis = analyze(&spectrum, &state);
        let ratios = analysis.support.ratios.as_ref().unwrap();
        let l_psi = analysis.l_psi.as_ref().unwrap();
        let gauge = &ratios[analysis.gauge_level];

        for (pos, r) in ratios.iter().enumerate() {
            let exact = &(r - gauge) * l_psi;
            let as_integer = exact.to_integer_exact().expect("winding must be integral");
            assert_eq!(as_integer, analysis.p[pos], "p_{pos} mismatch");
            assert!(analysis.p[pos] >= 0u8.into(), "minimum gauge ⇒ p ≥ 0");
        }
        assert_eq!(analysis.p[analysis.gauge_level], 0u8.into());

        let n = analysis.p.len();
        for i in 0..n {
            for j in 0..n {
                let pij = &analysis.p[i] - &analysis.p[j];
                assert_eq!(pij, -(&analysis.p[j] - &analysis.p[i]));
                for k in 0..n {
                    assert_eq!(
                        pij,
                        (&analysis.p[i] - &analysis.p[k]) + (&analysis.p[k] - &analysis.p[j])
                    );
                }
            }
        }
    }
    println!("100 random spectra: every winding integral, gauge-zeroed, non-negative, closed");
}

/// The measured Fubini-Study arc length of one cycle equals S = τ·ΔH/ħ and
/// the measured speed never strays from ΔH/ħ.
#[test]
fn criterion_05_loop_length_and_constant_speed() {
    const TOL: f64 = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst_length = 0.0f64;
    let mut worst_speed = 0.0f64;
    for _ in 0..8 {
        let spectrum = random_rational_spectrum(&mut rng, 3, 0..=8, 3);
        let state = random_balanced_state(&mut rng, 3);
        let analysis = analyze(&spectrum, &state);
        let traj = propagate_one_period(&spectrum, &state, &analysis, 4096);
        let fs = dynamics::fs_length(&traj).unwrap();
        let s_period = analysis.s_period.unwrap();
        worst_length = worst_length.max((fs.total - s_period).abs() / s_period);
        worst_speed = worst_speed.max(fs.max_speed_deviation / fs.mean_speed);
    }
    println!("worst relative length error {worst_length:.3e}; worst speed deviation {worst_speed:.3e}");
    assert!(worst_length <= TOL);
    assert!(worst_speed <= TOL);
}

/// Along the cycle the state solves iħ∂_t ψ = (H − λ_j)ψ to within 1e−8 of
/// arc length, and deliberately shifting the gauge by the energy unit u
/// inflates the residual to exactly τ·u/ħ.
#[test]
fn criterion_06_equation_of_motion_with_misgauge_control() {
    const RESIDUAL_TOL: f64 = 1e-8;
    const CONTROL_TOL: f64 = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let mut worst_residual = 0.0f64;
    let mut worst_control = 0.0f64;
    for _ in 0..8 {
        let spectrum = random_rational_spectrum(&mut rng, 3, 0..=60, 7);
        let state = random_balanced_state(&mut rng, 3);
        let analysis = analyze(&spectrum, &state);

        let eom = dynamics::eom_residual_probed(&spectrum, &analysis, &state, None, 16).unwrap();
        worst_residual = worst_residual.max(eom.residual_arc);

        let u = analysis.unit.unwrap();
        let wrong = dynamics::eom_residual_probed(
            &spectrum,
            &analysis,
            &state,
            Some(analysis.gauge_lambda + u),
            16,
        )
        .unwrap();
        let expected = analysis.tau.unwrap() * u / analysis.hbar;
        worst_control = worst_control.max((wrong.residual_arc - expected).abs() / expected);
    }
    println!("worst on-gauge residual {worst_residual:.3e}; worst mis-gauge control error {worst_control:.3e}");
    assert!(worst_residual <= RESIDUAL_TOL);
    assert!(worst_control <= CONTROL_TOL);
}

/// 1000 random states with exactly rational probabilities m_i/q: the
/// geometric phase always lands on the 2π/ω' lattice, and whenever the
/// closed-form integer normalization ω exists and is small, an exhaustive
/// search finds the same value — and finds nothing when it doesn't exist.
#[test]
fn criterion_07_selection_rule_on_rational_probabilities() {
    const LATTICE_TOL: f64 = 1e-8;
    const BRUTE_CAP: u64 = 10_000;

    fn brute_force_omega(fractions: &[Rational], cap: u64) -> Option<u64> {
        'outer: for omega in 1..=cap {
            for f in fractions {
                let a = f.numer().to_u64().unwrap();
                let b = f.denom().to_u64().unwrap();
                let num = a * omega;
                if num % b != 0 {
                    continue 'outer;
                }
                let x = num / b;
                let t = (x as f64).sqrt().round() as u64;
                if t * t != x {
                    continue 'outer;
                }
            }
            return Some(omega);
        }
        None
    }

    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut worst_defect = 0.0f64;
    let (mut with_omega, mut without_omega, mut over_cap) = (0u32, 0u32, 0u32);
    for _ in 0..1000 {
        let levels = rng.gen_range(2..=4usize);
        let spectrum = random_rational_spectrum(&mut rng, levels, 0..=40, 9);

        // exact composition: q split into `levels` positive integer parts
        let q = rng.gen_range(levels as u64..=30);
        let mut cuts: Vec<u64> = Vec::new();
        while cuts.len() < levels - 1 {
            let c = rng.gen_range(1..q);
            if !cuts.contains(&c) {
                cuts.push(c);
            }
        }
        cuts.sort_unstable();
        cuts.insert(0, 0);
        cuts.push(q);
        let state: CVector = cuts
            .windows(2)
            .map(|w| {
                let weight = (w[1] - w[0]) as f64 / q as f64;
                Complex64::from_polar(weight.sqrt(), rng.gen_range(0.0..TAU))
            })
            .collect();

        let analysis = analyze(&spectrum, &state);
        let selection =
            cyclic::selection_rule(&analysis, defaults::MAX_DENOMINATOR, defaults::RAT_TOL)
                .unwrap();
        assert!(selection.probabilities_rational, "m_i/q must rationalize");
        worst_defect = worst_defect.max(selection.lattice_defect.unwrap());

        let fractions = selection.fractions.as_ref().unwrap();
        match &selection.omega {
            Some(omega) if omega.to_u64().is_some_and(|o| o <= BRUTE_CAP) => {
                let omega = omega.to_u64().unwrap();
                assert_eq!(
                    brute_force_omega(fractions, BRUTE_CAP),
                    Some(omega),
                    "closed form ω = {omega} vs exhaustive search"
                );
                let op = selection.omega_prime.as_ref().unwrap().to_u64().unwrap();
                assert_eq!(omega % op, 0, "ω' must divide ω");
                with_omega += 1;
            }
            Some(_) => over_cap += 1,
            None => {
                assert_eq!(brute_force_omega(fractions, BRUTE_CAP), None);
                without_omega += 1;
            }
        }
    }
    println!(
        "worst lattice defect {worst_defect:.3e}; ω existed {with_omega}× (checked), absent {without_omega}× (confirmed), over cap {over_cap}×"
    );
    assert!(worst_defect <= LATTICE_TOL);
    assert!(with_omega > 50, "the ω branch must actually be exercised");
    assert!(without_omega > 50, "the no-ω branch must actually be exercised");
}

/// The intrinsic clock reads coordinate time on every state, and the
/// measured commutators are the canonical ones — with values independent
/// of which state is used to measure them.
#[test]
fn criterion_08_clock_and_canonical_commutators() {
    const CLOCK_TOL: f64 = 1e-8;
    const COMMUTATOR_TOL: f64 = 1e-6;
    const SPREAD_TOL: f64 = 1e-6;

    let entries: Vec<Rational> = [0, 1, 3]
        .iter()
        .map(|&n| Rational::from_integer(n))
        .collect();
    let spectrum = Spectrum::from_rational_diagonal(&entries, 1.0, 1.0, &opts()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(29);

    let mut worst_clock = 0.0f64;
    let mut worst_ht = 0.0f64;
    let mut worst_gt = 0.0f64;
    let mut ht_values = Vec::new();
    for _ in 0..6 {
        let state = random_balanced_state(&mut rng, 3);
        let analysis = analyze(&spectrum, &state);
        let tau = analysis.tau.unwrap();
        let traj = propagate_one_period(&spectrum, &state, &analysis, 2048);

        for index in [700, 1500] {
            let te =
                operators::time_operator_expectation(&traj, &spectrum, &analysis, index).unwrap();
            worst_clock = worst_clock.max((te.expect_t - te.t).abs() / tau);
        }

        let comm =
            operators::commutator_expectations(&spectrum, &analysis, &state, 0.37 * tau, None)
                .unwrap();
        worst_ht = worst_ht.max((comm.ht - Complex64::new(0.0, analysis.hbar)).norm());
        worst_gt = worst_gt.max((comm.gt - Complex64::new(0.0, tau)).norm() / tau);
        assert!(comm.matrix_hg.norm() <= 1e-12, "[H,G] is zero to roundoff");
        ht_values.push(comm.ht);
    }
    let spread = ht_values
        .iter()
        .flat_map(|a| ht_values.iter().map(move |b| (a - b).norm()))
        .fold(0.0f64, f64::max);
    println!(
        "worst clock error {worst_clock:.3e}; worst ⟨[H,T]⟩ error {worst_ht:.3e}; worst ⟨[G,T]⟩ error {worst_gt:.3e}; state spread {spread:.3e}"
    );
    assert!(worst_clock <= CLOCK_TOL);
    assert!(worst_ht <= COMMUTATOR_TOL);
    assert!(worst_gt <= COMMUTATOR_TOL);
    assert!(spread <= SPREAD_TOL, "⟨[H,T]⟩ must not depend on the state");
}

/// Reading the clock in the energy representation — differentiating the
/// overall phase of the weight sum with respect to the energy scale —
/// returns the period at one cycle.
#[test]
fn criterion_09_energy_representation_clock() {
    const TOL: f64 = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let spectrum = random_rational_spectrum(&mut rng, 3, 0..=12, 4);
        let state = random_balanced_state(&mut rng, 3);
        let analysis = analyze(&spectrum, &state);
        let erep = operators::energy_representation_check(&analysis, None).unwrap();
        worst = worst.max(erep.relative_error);
    }
    println!("worst relative clock error {worst:.3e}");
    assert!(worst <= TOL);
}

/// The independent RK4 integrator confirms the exact propagator: at a fine
/// step it agrees to 1e−8, and halving the step shrinks its error by the
/// 4th-order factor.
#[test]
fn criterion_10_integrator_agreement_and_order() {
    const FINE_TOL: f64 = 1e-8;
    const ORDER_WINDOW: (f64, f64) = (12.0, 20.0);

    let entries: Vec<Rational> = [0, 1].iter().map(|&n| Rational::from_integer(n)).collect();
    let spectrum = Spectrum::from_rational_diagonal(&entries, 1.0, 1.0, &opts()).unwrap();
    let theta: f64 = 1.1;
    let state: CVector = vec![
        Complex64::new((theta / 2.0).cos(), 0.0),
        Complex64::new((theta / 2.0).sin(), 0.0),
    ];
    let analysis = analyze(&spectrum, &state);
    let tau = analysis.tau.unwrap();
    // ΔE from the gauge level is 1, so dt = τ/(32·substeps) in units of ħ/ΔE
    let worst_distance = |substeps: usize| -> f64 {
        let rk4 = dynamics::propagate_rk4(
            &spectrum,
            &state,
            analysis.gauge_lambda,
            tau,
            32,
            substeps,
            false,
        )
        .unwrap();
        let exact = dynamics::propagate_exact(
            &spectrum,
            &state,
            analysis.gauge_lambda,
            &rk4.times(),
            Mode::Auto,
        )
        .unwrap();
        exact
            .samples
            .iter()
            .zip(&rk4.samples)
            .map(|(a, b)| linalg::distance(&a.state, &b.state))
            .fold(0.0f64, f64::max)
    };

    // dt ≈ 1e−3·ħ/ΔE
    let fine = worst_distance((tau / (32.0 * 1e-3)).ceil() as usize);
    println!("fine-step disagreement {fine:.3e}");
    assert!(fine <= FINE_TOL);

    // dt ≈ 0.05·ħ/ΔE, then exactly halved: 4th order ⇒ ratio ≈ 16
    let coarse = worst_distance(4);
    let halved = worst_distance(8);
    let ratio = coarse / halved;
    println!("order check: {coarse:.3e} / {halved:.3e} = {ratio:.2}");
    assert!(
        ratio >= ORDER_WINDOW.0 && ratio <= ORDER_WINDOW.1,
        "convergence ratio {ratio:.2} outside [{}, {}]",
        ORDER_WINDOW.0,
        ORDER_WINDOW.1
    );
}

/// The equal two-level superposition separates the propagated phase from
/// the linear phase-vs-length law mid-cycle (it is a step function: zero
/// before the orthogonal crossing, π after) while both close at τ.
#[test]
fn criterion_11_step_versus_linear_law() {
    let entries: Vec<Rational> = [0, 1].iter().map(|&n| Rational::from_integer(n)).collect();
    let spectrum = Spectrum::from_rational_diagonal(&entries, 1.0, 1.0, &opts()).unwrap();
    let w = std::f64::consts::FRAC_1_SQRT_2;
    let state: CVector = vec![Complex64::new(w, 0.0), Complex64::new(w, 0.0)];
    let analysis = analyze(&spectrum, &state);
    let tau = analysis.tau.unwrap();
    assert!((tau - TAU).abs() < 1e-12);

    let n = 2048;
    let traj = dynamics::propagate_exact(
        &spectrum,
        &state,
        analysis.gauge_lambda,
        &dynamics::time_grid(tau, n),
        Mode::Auto,
    )
    .unwrap();
    let ledger = dynamics::phase_ledger(&traj, &analysis).unwrap();

    // index 512 ↔ t = π/2, a quarter of the cycle
    let quarter = n / 4;
    assert!((ledger.t[quarter] - PI / 2.0).abs() < 1e-12);
    assert!(
        ledger.geometric[quarter].abs() <= 1e-9,
        "the propagated phase is still flat: {}",
        ledger.geometric[quarter]
    );
    assert!(
        (ledger.linear_law[quarter] - PI / 4.0).abs() <= 1e-12,
        "the linear law has climbed to π/4: {}",
        ledger.linear_law[quarter]
    );
    assert!(
        (ledger.divergence[quarter] - PI / 4.0).abs() <= 1e-10,
        "mid-cycle divergence must be π/4: {}",
        ledger.divergence[quarter]
    );

    // after the orthogonal crossing the step has fired
    let three_quarters = 3 * n / 4;
    assert!((ledger.geometric[three_quarters] - PI).abs() <= 1e-9);

    // and the two phases agree again at the period (mod 2π)
    let closing = *ledger.divergence.last().unwrap();
    println!(
        "divergence: {:.6} at τ/4, {closing:.3e} at τ",
        ledger.divergence[quarter]
    );
    assert!(closing <= 1e-8);
}
