//! The geometric phase as an operator, and the clock conjugate to it.
//!
//! For a cyclic state the integer windings `p_i` assemble into a
//! Hermitian operator
//!
//! ```text
//!   G = Σ_{i ∈ Λ_ψ} 2π p_i P_i  +  Σ_{k ∉ Λ_ψ} (τ_ψ/ħ)(λ_k − λ_j) P_k,
//! ```
//!
//! which on the support coincides exactly with `(τ_ψ/ħ)(H − λ_j)` — the
//! off-support completion just extends that equality to the whole space.
//! Its expectation is the unreduced phase `Γ_ψ` and its uncertainty is
//! the loop length `S_ψ`.
//!
//! The conjugate clock `T` acts in the energy representation as
//! `−iħ ∂_ε`, realized here by scaling the shifted spectrum `H' → cH'`
//! and differentiating the exactly propagated state with respect to `c`.
//! That representation obeys the canonical relations `⟨[H,T]⟩ = iħ` and
//! `⟨[G,T]⟩ = iτ_ψ`, while the naive matrix commutator `[H, G]` vanishes
//! identically — the clock structure lives in the representation, not in
//! the matrices. Both facts are measurable here.

use num_complex::Complex64;
use num_traits::ToPrimitive;

use crate::cyclic::CyclicAnalysis;
use crate::dynamics::Trajectory;
use crate::linalg::{self, CMatrix, CVector};
use crate::spectral::Spectrum;
use crate::{Error, Result};

use std::f64::consts::{PI, TAU};

/// The geometric phase operator for one cyclic state.
#[derive(Clone, Debug)]
pub struct GeometricOperator {
    pub matrix: CMatrix,
    /// `max |G − (τ/ħ)(H − λ_j)|` over all entries: how well the exact
    /// integer ladder reproduces the measured energies.
    pub construction_deviation: f64,
    pub gauge_lambda: f64,
    pub tau: f64,
    /// `⟨G⟩ = Γ_ψ`.
    pub expect_g: f64,
    /// `ΔG = S_ψ`: phase uncertainty equals loop length.
    pub delta_g: f64,
    /// The loop length from the cycle analysis, for comparison.
    pub s_period: f64,
}

fn require_cycle(analysis: &CyclicAnalysis) -> Result<f64> {
    if analysis.stationary {
        return Err(Error::Stationary(
            "a single-level state has no cycle to generate".into(),
        ));
    }
    analysis.tau.ok_or_else(|| {
        Error::NotCyclic(
            analysis
                .diagnostic
                .clone()
                .unwrap_or_else(|| "no period exists".into()),
        )
    })
}

/// Assemble `G` from the integer windings, complete it off the support,
/// and evaluate its statistics on the state.
pub fn geometric_operator(
    spectrum: &Spectrum,
    analysis: &CyclicAnalysis,
    state: &[Complex64],
) -> Result<GeometricOperator> {
    let tau = require_cycle(analysis)?;
    let hbar = analysis.hbar;
    let gauge = analysis.gauge_lambda;
    let dim = spectrum.dim();
    if state.len() != dim {
        return Err(Error::DimensionMismatch(format!(
            "state has {} components, spectrum acts on {}",
            state.len(),
            dim
        )));
    }

    let mut g = CMatrix::zeros(dim);
    for (k, level) in spectrum.levels.iter().enumerate() {
        let coeff = match analysis.support.indices.iter().position(|&i| i == k) {
            Some(pos) => {
                TAU * analysis.p[pos]
                    .to_f64()
                    .ok_or_else(|| Error::InvalidArgument("winding overflows f64".into()))?
            }
            None => tau / hbar * (level.value - gauge),
        };
        for v in &level.vectors {
            for r in 0..dim {
                for c in 0..dim {
                    g[(r, c)] += coeff * v[r] * v[c].conj();
                }
            }
        }
    }

    // the same operator built from measured energies instead of windings
    let mut target = spectrum.to_matrix().shifted(gauge);
    let scale = tau / hbar;
    for r in 0..dim {
        for c in 0..dim {
            target[(r, c)] *= scale;
        }
    }
    let construction_deviation = g.max_entry_distance(&target);

    let gpsi = g.mul_vec(state)?;
    let expect_g = linalg::dot(state, &gpsi).re;
    let second = gpsi.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let delta_g = (second - expect_g * expect_g).max(0.0).sqrt();

    Ok(GeometricOperator {
        matrix: g,
        construction_deviation,
        gauge_lambda: gauge,
        tau,
        expect_g,
        delta_g,
        s_period: analysis.s_period.unwrap_or(f64::NAN),
    })
}

/// Closed-form phase for `cos(θ/2)|φ_0⟩ + sin(θ/2)|φ_1⟩` on two
/// non-degenerate levels: `±π(1 − cos θ)` reduced to `[0, 2π)`, the sign
/// set by which level is lower (`lambda0_less`: `λ_0 < λ_1`).
pub fn two_level_gamma(theta: f64, lambda0_less: bool) -> f64 {
    let g = PI * (1.0 - theta.cos());
    (if lambda0_less { g } else { -g }).rem_euclid(TAU)
}

/// Expectations of the clock along a trajectory sample.
#[derive(Clone, Copy, Debug)]
pub struct TimeExpectation {
    pub t: f64,
    pub s: f64,
    /// `⟨T⟩` via the analytic `∂_s` — equals `t` on-shell.
    pub expect_t: f64,
    /// `⟨T⟩` via 4th-order finite differences of the sampled states;
    /// absent within two samples of either end.
    pub expect_t_fd: Option<f64>,
    /// `⟨Ŝ⟩ = ΔH/ħ · ⟨T⟩` — equals the arc length `s`.
    pub expect_s: f64,
    /// The linear phase law at this sample, `s·Γ_ψ/S_ψ`.
    pub gamma_accumulated: f64,
}

/// Evaluate `⟨T⟩ = ⟨ i s (τ/Γ) ∂_s ⟩` at one sample of a trajectory, with
/// the derivative taken both analytically (`∂_s ψ = −i H'ψ/(ħ·ΔH/ħ)`) and
/// from the neighboring samples.
pub fn time_operator_expectation(
    traj: &Trajectory,
    spectrum: &Spectrum,
    analysis: &CyclicAnalysis,
    index: usize,
) -> Result<TimeExpectation> {
    let tau = require_cycle(analysis)?;
    if index >= traj.samples.len() {
        return Err(Error::InvalidArgument(format!(
            "sample index {index} out of range"
        )));
    }
    let gamma = analysis.gamma_unreduced;
    if gamma == 0.0 {
        return Err(Error::InvalidArgument(
            "zero total phase: the clock ratio τ/Γ is undefined".into(),
        ));
    }
    let speed = analysis.speed;
    let sample = &traj.samples[index];
    let psi = &sample.state;
    let hp = spectrum.to_matrix().shifted(analysis.gauge_lambda);

    // ⟨ψ| i ∂_s ψ⟩ = ⟨H'⟩/(ħ·speed), evaluated through the operator
    let hpsi = hp.mul_vec(psi)?;
    let connection = linalg::dot(psi, &hpsi).re / (traj.hbar * speed);
    let expect_t = sample.s * (tau / gamma) * connection;

    // same quantity with ∂_t ψ from the 4-point stencil, then /speed
    let n = traj.samples.len();
    let expect_t_fd = if index >= 2 && index + 2 < n {
        let h = traj.samples[index + 1].t - traj.samples[index].t;
        let st = |k: usize| &traj.samples[k].state;
        let dpsi: CVector = (0..psi.len())
            .map(|c| {
                (st(index - 2)[c] - 8.0 * st(index - 1)[c] + 8.0 * st(index + 1)[c]
                    - st(index + 2)[c])
                    / (12.0 * h)
            })
            .collect();
        let conn_fd = (Complex64::i() * linalg::dot(psi, &dpsi)).re / speed;
        Some(sample.s * (tau / gamma) * conn_fd)
    } else {
        None
    };

    let s_over_period = analysis.s_period.map(|sp| sample.s / sp).unwrap_or(f64::NAN);
    Ok(TimeExpectation {
        t: sample.t,
        s: sample.s,
        expect_t,
        expect_t_fd,
        expect_s: speed * expect_t,
        gamma_accumulated: s_over_period * gamma,
    })
}

/// Canonical commutators measured in the energy representation.
#[derive(Clone, Copy, Debug)]
pub struct CommutatorReport {
    /// Measured `⟨[H, T]⟩`; canonical value `iħ`.
    pub ht: Complex64,
    /// Measured `⟨[G, T]⟩`; canonical value `iτ_ψ`.
    pub gt: Complex64,
    /// `⟨[H, G]⟩` as plain matrices — identically zero, recorded to show
    /// the matrix algebra alone carries no clock.
    pub matrix_hg: Complex64,
    /// The scaling step used for the `∂_ε` stencil.
    pub dc: f64,
    pub hbar: f64,
    pub tau: f64,
}

/// Evaluate `⟨[H,T]⟩` and `⟨[G,T]⟩` at time `t` by differentiating the
/// exactly propagated state with respect to the spectrum scaling
/// `H' → cH'` (a 4th-order stencil in `c`; `dc` is chosen from the
/// largest accumulated phase unless given).
///
/// `T = −iħ∂_ε` with `ε = ⟨H − λ_j⟩` turns scaling into an energy
/// derivative: `∂_ε = (1/ε)∂_c` at `c = 1`.
pub fn commutator_expectations(
    spectrum: &Spectrum,
    analysis: &CyclicAnalysis,
    state: &[Complex64],
    t: f64,
    dc: Option<f64>,
) -> Result<CommutatorReport> {
    let tau = require_cycle(analysis)?;
    let hbar = analysis.hbar;
    let eps = analysis.epsilon;
    if eps <= 0.0 {
        return Err(Error::InvalidArgument(
            "ε = ⟨H⟩ − λ_j must be positive to scale the spectrum".into(),
        ));
    }
    let gauge = analysis.gauge_lambda;
    let components = spectrum.level_components(state)?;
    let omegas: Vec<f64> = spectrum
        .levels
        .iter()
        .map(|l| (l.value - gauge) / hbar)
        .collect();
    let dim = state.len();

    // ψ_c(t) = Σ e^{−i ω_k c t} P_k ψ, exact at any scaling c
    let psi_c = |c: f64| -> CVector {
        let mut out = vec![Complex64::new(0.0, 0.0); dim];
        for (om, comp) in omegas.iter().zip(&components) {
            let phase = Complex64::from_polar(1.0, -om * c * t);
            for (o, z) in out.iter_mut().zip(comp) {
                *o += phase * z;
            }
        }
        out
    };

    // balance 4th-order truncation against roundoff: both ∝ phase_max
    let dc = dc.unwrap_or_else(|| {
        let phase_max = omegas
            .iter()
            .fold(0.0f64, |acc, om| acc.max((om * t).abs()))
            .max(1.0);
        (90.0 * f64::EPSILON / phase_max.powi(5))
            .powf(0.2)
            .clamp(1e-9, 1e-2)
    });

    let stencil = |f: &dyn Fn(f64) -> CVector| -> CVector {
        let fm2 = f(1.0 - 2.0 * dc);
        let fm1 = f(1.0 - dc);
        let fp1 = f(1.0 + dc);
        let fp2 = f(1.0 + 2.0 * dc);
        (0..dim)
            .map(|c| (fm2[c] - 8.0 * fm1[c] + 8.0 * fp1[c] - fp2[c]) / (12.0 * dc))
            .collect()
    };
    // T g = −(iħ/ε) ∂_c g at c = 1
    let t_factor = Complex64::new(0.0, -hbar / eps);

    let psi = psi_c(1.0);
    let h = spectrum.to_matrix();
    let gop = geometric_operator(spectrum, analysis, state)?;
    let g = &gop.matrix;

    // ⟨[H,T]⟩ = ⟨ψ|H(Tψ)⟩ − ⟨ψ|T(Hψ)⟩, where T(Hψ) differentiates the
    // scaled family H_c ψ_c = (λ_j + cH')ψ_c
    let tpsi: CVector = stencil(&psi_c).iter().map(|z| t_factor * z).collect();
    let h_tpsi = h.mul_vec(&tpsi)?;
    let hc_family = |c: f64| -> CVector {
        let mut out = vec![Complex64::new(0.0, 0.0); dim];
        for ((om, comp), level) in omegas.iter().zip(&components).zip(&spectrum.levels) {
            let energy = gauge + c * (level.value - gauge);
            let phase = energy * Complex64::from_polar(1.0, -om * c * t);
            for (o, z) in out.iter_mut().zip(comp) {
                *o += phase * z;
            }
        }
        out
    };
    let t_hpsi: CVector = stencil(&hc_family).iter().map(|z| t_factor * z).collect();
    let ht = linalg::dot(&psi, &h_tpsi) - linalg::dot(&psi, &t_hpsi);

    // ⟨[G,T]⟩ with the scaled family G_c ψ_c = cG ψ_c (G is linear in the
    // shifted energies, so it scales with c)
    let g_tpsi = g.mul_vec(&tpsi)?;
    let gpsi_base = g.mul_vec(&psi)?;
    let gc_family = |c: f64| -> CVector {
        let v = psi_c(c);
        let gv = g.mul_vec(&v).expect("matching dimensions");
        gv.into_iter().map(|z| c * z).collect()
    };
    let t_gpsi: CVector = stencil(&gc_family).iter().map(|z| t_factor * z).collect();
    let gt = linalg::dot(&psi, &g_tpsi) - linalg::dot(&psi, &t_gpsi);

    // plain matrix commutator: ⟨ψ|HGψ⟩ − ⟨ψ|GHψ⟩
    let hpsi = h.mul_vec(&psi)?;
    let matrix_hg =
        linalg::dot(&psi, &h.mul_vec(&gpsi_base)?) - linalg::dot(&psi, &g.mul_vec(&hpsi)?);

    Ok(CommutatorReport {
        ht,
        gt,
        matrix_hg,
        dc,
        hbar,
        tau,
    })
}

/// The clock read out in the energy representation.
#[derive(Clone, Copy, Debug)]
pub struct EnergyRepReport {
    /// `−ħ ∂θ/∂ε` at one period, where `θ(c) = arg Σ w_i e^{−2πi p_i c}`.
    pub t_measured: f64,
    /// The period it should reproduce.
    pub tau: f64,
    pub relative_error: f64,
    pub dc: f64,
}

/// Differentiate the return amplitude's phase with respect to the energy
/// scale: `⟨T(τ)⟩ = −ħ ∂θ/∂ε = ħΓ_ψ/ε = τ_ψ`.
pub fn energy_representation_check(
    analysis: &CyclicAnalysis,
    dc: Option<f64>,
) -> Result<EnergyRepReport> {
    let tau = require_cycle(analysis)?;
    let eps = analysis.epsilon;
    if eps <= 0.0 {
        return Err(Error::InvalidArgument(
            "ε = ⟨H⟩ − λ_j must be positive to scale the spectrum".into(),
        ));
    }
    let dc = dc.unwrap_or(1e-5);
    let theta = |c: f64| -> f64 {
        let mut z = Complex64::new(0.0, 0.0);
        for (p, w) in analysis.p.iter().zip(&analysis.support.probabilities) {
            let pf = p.to_f64().unwrap_or(f64::NAN);
            z += w * Complex64::from_polar(1.0, -TAU * pf * c);
        }
        z.arg()
    };
    // −ħ ∂θ/∂ε = −(ħ/ε) ∂θ/∂c
    let t_measured = -(analysis.hbar / eps) * (theta(1.0 + dc) - theta(1.0 - dc)) / (2.0 * dc);
    Ok(EnergyRepReport {
        t_measured,
        tau,
        relative_error: (t_measured - tau).abs() / tau,
        dc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyclic::{analyze_cycle, support};
    use crate::dynamics::{propagate_exact, time_grid};
    use crate::par;
    use crate::rational::Rational;
    use crate::spectral::SpectrumOptions;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn spectrum_hbar(levels: &[i64], hbar: f64) -> Spectrum {
        let entries: Vec<Rational> = levels
            .iter()
            .map(|&n| Rational::from_integer(n))
            .collect();
        Spectrum::from_rational_diagonal(&entries, 1.0, hbar, &SpectrumOptions::default())
            .unwrap()
    }

    fn uniform(n: usize) -> Vec<Complex64> {
        let w = (1.0 / n as f64).sqrt();
        vec![c(w, 0.0); n]
    }

    fn analyzed(
        levels: &[i64],
        state: &[Complex64],
        hbar: f64,
    ) -> (Spectrum, CyclicAnalysis) {
        let s = spectrum_hbar(levels, hbar);
        let supp = support(&s, state, 1e-12).unwrap();
        (s.clone(), analyze_cycle(&supp).unwrap())
    }

    #[test]
    fn operator_reproduces_phase_and_length() {
        let (s, a) = analyzed(&[0, 1, 3], &uniform(3), 1.0);
        let g = geometric_operator(&s, &a, &uniform(3)).unwrap();
        assert!(g.construction_deviation < 1e-12);
        assert!((g.expect_g - a.gamma_unreduced).abs() < 1e-12);
        assert!((g.expect_g - 8.0 * PI / 3.0).abs() < 1e-12);
        assert!((g.delta_g - a.s_period.unwrap()).abs() < 1e-12);
        // diagonal entries are the winding ladder
        for (k, &p) in [0i64, 1, 3].iter().enumerate() {
            assert!((g.matrix[(k, k)].re - TAU * p as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn off_support_completion_extends_the_ladder() {
        // state on levels {0, 1} of (0, 1, 3): level 3 is off-support
        let state = linalg::normalized(&[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let (s, a) = analyzed(&[0, 1, 3], &state, 1.0);
        let g = geometric_operator(&s, &a, &state).unwrap();
        assert!(g.construction_deviation < 1e-12);
        // τ = 2π, so the off-support entry is (τ/ħ)(3 − 0) = 6π
        assert!((g.matrix[(2, 2)].re - 6.0 * PI).abs() < 1e-12);
        assert!((g.expect_g - PI).abs() < 1e-12);
    }

    #[test]
    fn operator_exists_on_incommensurate_two_level_support() {
        let vals = [0.0, 1.0, std::f64::consts::SQRT_2];
        let m = CMatrix::from_diagonal(&vals);
        let h = crate::spectral::HermitianMatrix::new(m, 1e-10).unwrap();
        let s = Spectrum::from_dense(&h, 1.0, &SpectrumOptions::default()).unwrap();
        let state = linalg::normalized(&[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        let supp = support(&s, &state, 1e-12).unwrap();
        let a = analyze_cycle(&supp).unwrap();
        let g = geometric_operator(&s, &a, &state).unwrap();
        assert!(g.construction_deviation < 1e-9);
        assert!((g.expect_g - PI).abs() < 1e-9);
    }

    #[test]
    fn stationary_states_have_no_operator() {
        let state = vec![c(1.0, 0.0), c(0.0, 0.0)];
        let (s, a) = analyzed(&[0, 1], &state, 1.0);
        assert!(matches!(
            geometric_operator(&s, &a, &state),
            Err(Error::Stationary(_))
        ));
    }

    #[test]
    fn two_level_closed_form_and_pipeline_agree() {
        for k in 1..40 {
            let theta = PI * k as f64 / 40.0;
            let state = vec![c((theta / 2.0).cos(), 0.0), c((theta / 2.0).sin(), 0.0)];
            let (_, a) = analyzed(&[0, 1], &state, 1.0);
            let closed = two_level_gamma(theta, true);
            assert!(
                (a.gamma_reduced - closed).abs() < 1e-12,
                "θ = {theta}: pipeline {} vs closed form {closed}",
                a.gamma_reduced
            );
        }
        // θ = 2π/3 on λ_0 < λ_1: γ = 2π sin²(π/3) = 3π/2
        assert!((two_level_gamma(2.0 * PI / 3.0, true) - 1.5 * PI).abs() < 1e-12);
        // swapping which level is lower mirrors the superposition angle
        for k in 1..20 {
            let theta = PI * k as f64 / 20.0;
            let a = two_level_gamma(theta, false);
            let b = two_level_gamma(PI - theta, true);
            assert!((a - b).abs() < 1e-12, "θ = {theta}");
        }
    }

    #[test]
    fn time_operator_reads_the_clock() {
        let (s, a) = analyzed(&[0, 1, 3], &uniform(3), 1.0);
        let tau = a.tau.unwrap();
        let traj = propagate_exact(
            &s,
            &uniform(3),
            a.gauge_lambda,
            &time_grid(tau, 2048),
            par::Mode::Auto,
        )
        .unwrap();
        for &k in &[5usize, 512, 1024, 1600, 2045] {
            let te = time_operator_expectation(&traj, &s, &a, k).unwrap();
            assert!(
                (te.expect_t - te.t).abs() < 1e-10,
                "⟨T⟩ = {} at t = {}",
                te.expect_t,
                te.t
            );
            let fd = te.expect_t_fd.unwrap();
            assert!((fd - te.t).abs() < 1e-8, "FD ⟨T⟩ = {fd} at t = {}", te.t);
            assert!((te.expect_s - te.s).abs() < 1e-10);
            let expect_gamma = te.s * a.gamma_unreduced / a.s_period.unwrap();
            assert!((te.gamma_accumulated - expect_gamma).abs() < 1e-12);
        }
    }

    #[test]
    fn commutators_are_canonical_in_the_energy_representation() {
        for &hbar in &[1.0, 0.5] {
            let (s, a) = analyzed(&[0, 1, 3], &uniform(3), hbar);
            let tau = a.tau.unwrap();
            let rep =
                commutator_expectations(&s, &a, &uniform(3), tau, None).unwrap();
            let ht_err = (rep.ht - Complex64::new(0.0, hbar)).norm();
            assert!(ht_err < 1e-8, "⟨[H,T]⟩ = {} (ħ = {hbar})", rep.ht);
            let gt_err = (rep.gt - Complex64::new(0.0, tau)).norm();
            assert!(gt_err < 1e-7, "⟨[G,T]⟩ = {} (ħ = {hbar})", rep.gt);
            assert!(rep.matrix_hg.norm() < 1e-12);
        }
    }

    #[test]
    fn commutators_hold_off_period_too() {
        let state = linalg::normalized(&[c(0.8, 0.1), c(0.4, -0.2), c(0.3, 0.3)]).unwrap();
        let (s, a) = analyzed(&[0, 2, 5], &state, 1.0);
        let t = 0.37 * a.tau.unwrap();
        let rep = commutator_expectations(&s, &a, &state, t, None).unwrap();
        assert!((rep.ht - Complex64::new(0.0, 1.0)).norm() < 1e-7, "{}", rep.ht);
        assert!(
            (rep.gt - Complex64::new(0.0, a.tau.unwrap())).norm() < 1e-6,
            "{}",
            rep.gt
        );
    }

    #[test]
    fn energy_representation_reads_the_period() {
        let (_, a) = analyzed(&[0, 1, 3], &uniform(3), 1.0);
        let rep = energy_representation_check(&a, None).unwrap();
        assert!(
            rep.relative_error < 1e-6,
            "⟨T(τ)⟩ = {} vs τ = {}",
            rep.t_measured,
            rep.tau
        );

        // stationary: no ε to differentiate against
        let state = vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        let (_, a) = analyzed(&[0, 1, 3], &state, 1.0);
        assert!(energy_representation_check(&a, None).is_err());
    }
}
