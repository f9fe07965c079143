//! Cyclicity analysis: which states return to their ray, when, and with
//! what phase.
//!
//! A state `ψ = Σ φ_i |i⟩` supported on levels `Λ_ψ` is cyclic exactly
//! when all gaps inside `Λ_ψ` have rational ratios. Its minimal period is
//! fixed by the least common multiple of the inverse gaps,
//!
//! ```text
//!   τ_ψ = 2πħ · LCM{ 1/(λ_i − λ_j) },
//! ```
//!
//! and each supported level acquires an exact integer winding
//! `p_i = (λ_i − λ_j)·LCM{…}` relative to the gauge level `j`. With the
//! gauge fixed at the *minimum* supported level (the convention used
//! throughout this crate) every `p_i` is a non-negative integer, the
//! gauge level winds zero times, and the geometric phase over one period
//! is
//!
//! ```text
//!   Γ_ψ = 2π Σ p_i |φ_i|²,    γ_ψ = Γ_ψ mod 2π.
//! ```
//!
//! `Γ_ψ` (unreduced) feeds the operator construction and the linear phase
//! law; `γ_ψ` is the physically observable geometric phase of the cycle.
//! Both are reported. When the occupation probabilities are rational with
//! lowest-terms denominators `b_i`, `γ_ψ` is confined to the lattice
//! `2πk/ω'` with `ω' = LCM(b_i)` — see [`selection_rule`].

use std::collections::HashSet;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::linalg;
use crate::rational::{lcm_set, rationalize_checked, squarefree_part, Rational};
use crate::spectral::Spectrum;
use crate::{Error, Result};

use std::f64::consts::TAU;

/// Distance between two angles on the circle, in `[0, π]`.
pub fn circle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// The part of a state that actually evolves: its projection onto each
/// occupied level.
#[derive(Clone, Debug)]
pub struct SupportDecomposition {
    /// Indices into the spectrum's level list, ascending.
    pub indices: Vec<usize>,
    /// Projection coefficient per supported level. For a non-degenerate
    /// level this is `⟨level|ψ⟩`; for a degenerate one the projection has
    /// no single phase and the entry is the real projection norm.
    pub amplitudes: Vec<Complex64>,
    /// `|φ_i|²` per supported level.
    pub probabilities: Vec<f64>,
    /// Energies of the supported levels.
    pub lambdas: Vec<f64>,
    /// Rational multiples for the supported levels, when the spectrum has
    /// them (`λ = offset + r·unit`).
    pub ratios: Option<Vec<Rational>>,
    pub unit: Option<f64>,
    pub offset: Option<f64>,
    /// Carried over from the spectrum for diagnostics.
    pub incommensurate_diagnostic: Option<String>,
    pub eps_support: f64,
    pub hbar: f64,
    /// Hilbert-space dimension of the underlying problem.
    pub dim: usize,
    /// Total probability captured by the support (≈ 1).
    pub total_weight: f64,
}

/// Project a normalized state onto the spectrum and keep every level with
/// weight above `eps_support`.
pub fn support(
    spectrum: &Spectrum,
    state: &[Complex64],
    eps_support: f64,
) -> Result<SupportDecomposition> {
    let n = linalg::norm(state);
    if (n - 1.0).abs() > 1e-8 {
        return Err(Error::BadNorm(n));
    }
    let components = spectrum.level_components(state)?;

    let mut indices = Vec::new();
    let mut amplitudes = Vec::new();
    let mut probabilities = Vec::new();
    let mut lambdas = Vec::new();
    for (k, (level, comp)) in spectrum.levels.iter().zip(&components).enumerate() {
        let weight: f64 = comp.iter().map(|z| z.norm_sqr()).sum();
        if weight > eps_support {
            indices.push(k);
            probabilities.push(weight);
            lambdas.push(level.value);
            amplitudes.push(if level.vectors.len() == 1 {
                linalg::dot(&level.vectors[0], state)
            } else {
                Complex64::new(weight.sqrt(), 0.0)
            });
        }
    }
    if indices.is_empty() {
        return Err(Error::EmptySupport(eps_support));
    }
    let ratios = spectrum
        .rational
        .as_ref()
        .map(|rs| indices.iter().map(|&k| rs.ratios[k].clone()).collect());
    Ok(SupportDecomposition {
        total_weight: probabilities.iter().sum(),
        indices,
        amplitudes,
        probabilities,
        lambdas,
        ratios,
        unit: spectrum.rational.as_ref().map(|rs| rs.unit),
        offset: spectrum.rational.as_ref().map(|rs| rs.offset),
        incommensurate_diagnostic: spectrum.incommensurate_diagnostic.clone(),
        eps_support,
        hbar: spectrum.hbar,
        dim: spectrum.dim(),
    })
}

impl SupportDecomposition {
    /// Number of distinct supported levels `|Λ_ψ|`.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Everything the closed forms say about one state's cycle.
#[derive(Clone, Debug)]
pub struct CyclicAnalysis {
    /// Whether the evolution returns to the initial ray at all.
    pub cyclic: bool,
    /// Single supported level: the ray never moves.
    pub stationary: bool,
    /// `LCM{1/Δr}` over supported gap ratios, in units of `1/unit`.
    pub l_psi: Option<Rational>,
    /// Energy quantum `u` such that `τ = 2πħ·L/u`.
    pub unit: Option<f64>,
    /// Minimal period. `None` when stationary or not cyclic.
    pub tau: Option<f64>,
    /// Spectrum-level index of the gauge level (minimum of `Λ_ψ`).
    pub gauge_level: usize,
    /// Energy of the gauge level `λ_j`.
    pub gauge_lambda: f64,
    /// Integer windings per supported level, gauge entry first and zero.
    pub p: Vec<BigInt>,
    /// Total phase over one period, principal value in `(-π, π]`.
    pub phi_total: f64,
    /// Integer `m` with `φ_total = 2π(m − τλ_j/(2πħ))`.
    pub phi_winding: BigInt,
    /// Unreduced geometric phase `Γ_ψ = 2π Σ p_i |φ_i|²` over one period.
    pub gamma_unreduced: f64,
    /// `Γ_ψ mod 2π` in `[0, 2π)` — the observable phase.
    pub gamma_reduced: f64,
    /// `⟨H⟩`.
    pub energy_expectation: f64,
    /// `ε = ⟨H⟩ − λ_j`, the mean of the gauge-shifted Hamiltonian.
    pub epsilon: f64,
    /// `ΔH`.
    pub energy_uncertainty: f64,
    /// Fubini-Study speed `ΔH/ħ`.
    pub speed: f64,
    /// Ray-space distance travelled per period, `S_ψ = τ_ψ·ΔH/ħ`.
    pub s_period: Option<f64>,
    pub hbar: f64,
    /// Why the state is not cyclic, when it is not.
    pub diagnostic: Option<String>,
    pub support: SupportDecomposition,
}

/// Period, windings and phases for one support decomposition.
///
/// Works for any support over a commensurate spectrum, for any support of
/// one or two levels over an arbitrary spectrum (two levels always close),
/// and reports `cyclic = false` with a diagnostic otherwise.
pub fn analyze_cycle(supp: &SupportDecomposition) -> Result<CyclicAnalysis> {
    let hbar = supp.hbar;
    let m = supp.len();
    let gauge_level = supp.indices[0];
    let gauge_lambda = supp.lambdas[0];

    let energy_expectation: f64 = supp
        .lambdas
        .iter()
        .zip(&supp.probabilities)
        .map(|(l, w)| l * w)
        .sum();
    let epsilon = energy_expectation - gauge_lambda;
    let variance: f64 = supp
        .lambdas
        .iter()
        .zip(&supp.probabilities)
        .map(|(l, w)| (l - energy_expectation).powi(2) * w)
        .sum();
    let energy_uncertainty = variance.max(0.0).sqrt();
    let speed = energy_uncertainty / hbar;

    let base = CyclicAnalysis {
        cyclic: false,
        stationary: false,
        l_psi: None,
        unit: None,
        tau: None,
        gauge_level,
        gauge_lambda,
        p: vec![BigInt::zero(); m],
        phi_total: 0.0,
        phi_winding: BigInt::zero(),
        gamma_unreduced: 0.0,
        gamma_reduced: 0.0,
        energy_expectation,
        epsilon,
        energy_uncertainty,
        speed,
        s_period: None,
        hbar,
        diagnostic: None,
        support: supp.clone(),
    };

    if m == 1 {
        // The ray is fixed; phases are all dynamical and no period exists.
        return Ok(CyclicAnalysis {
            cyclic: true,
            stationary: true,
            ..base
        });
    }

    // Exact path: gaps live on a rational grid.
    if let Some(ratios) = &supp.ratios {
        let unit = supp.unit.expect("ratios imply a unit");
        let offset = supp.offset.unwrap_or(0.0);

        let mut inverse_gaps: HashSet<Rational> = HashSet::new();
        for i in 0..m {
            for j in (i + 1)..m {
                inverse_gaps.insert((&ratios[j] - &ratios[i]).recip()?);
            }
        }
        let inverse_gaps: Vec<Rational> = inverse_gaps.into_iter().collect();
        let l = lcm_set(&inverse_gaps)?;
        let tau = TAU * hbar * l.to_f64() / unit;

        let p: Vec<BigInt> = ratios
            .iter()
            .map(|r| {
                (&(r - &ratios[0]) * &l).to_integer_exact().ok_or_else(|| {
                    Error::InvalidArgument(
                        "internal invariant violated: winding is not an integer".into(),
                    )
                })
            })
            .collect::<Result<_>>()?;

        let gamma_unreduced = TAU
            * p.iter()
                .zip(&supp.probabilities)
                .map(|(pi, w)| pi.to_f64().unwrap_or(f64::NAN) * w)
                .sum::<f64>();

        // Total phase: ψ(τ) = e^{iφ}ψ(0) with φ = 2π(m − τλ_j/(2πħ)).
        // The rational part of τλ_j/(2πħ) is L·r_j, exact; the offset part
        // is carried in floating point.
        let y_rat = &l * &ratios[0];
        let (phi_total, phi_winding) = if offset == 0.0 {
            let (mm, frac) = y_rat.round_split();
            (-TAU * frac.to_f64(), mm)
        } else {
            let y = y_rat.to_f64() + l.to_f64() * offset / unit;
            let mm = (y + 0.5).floor();
            (
                -TAU * (y - mm),
                BigInt::from_f64_lossy(mm),
            )
        };

        return Ok(CyclicAnalysis {
            cyclic: true,
            gamma_reduced: gamma_unreduced.rem_euclid(TAU),
            gamma_unreduced,
            phi_total,
            phi_winding,
            p,
            s_period: Some(tau * speed),
            tau: Some(tau),
            l_psi: Some(l),
            unit: Some(unit),
            ..base
        });
    }

    // Two supported levels always close, rational structure or not.
    if m == 2 {
        let gap = supp.lambdas[1] - supp.lambdas[0];
        let tau = TAU * hbar / gap;
        let gamma_unreduced = TAU * supp.probabilities[1];
        let y = gauge_lambda / gap;
        let mm = (y + 0.5).floor();
        return Ok(CyclicAnalysis {
            cyclic: true,
            stationary: false,
            l_psi: Some(Rational::one()),
            unit: Some(gap),
            tau: Some(tau),
            p: vec![BigInt::zero(), BigInt::one()],
            phi_total: -TAU * (y - mm),
            phi_winding: BigInt::from_f64_lossy(mm),
            gamma_reduced: gamma_unreduced.rem_euclid(TAU),
            gamma_unreduced,
            s_period: Some(tau * speed),
            ..base
        });
    }

    let diagnostic = supp.incommensurate_diagnostic.clone().unwrap_or_else(|| {
        format!("{m} supported levels with no rational gap structure")
    });
    Ok(CyclicAnalysis {
        diagnostic: Some(diagnostic),
        ..base
    })
}

impl CyclicAnalysis {
    /// The reduced phase recomputed in the gauge of support position `k`
    /// instead of the minimum. Mathematically independent of `k`.
    pub fn gamma_reduced_in_gauge(&self, k: usize) -> f64 {
        let pk = &self.p[k];
        let gamma: f64 = TAU
            * self
                .p
                .iter()
                .zip(&self.support.probabilities)
                .map(|(pi, w)| (pi - pk).to_f64().unwrap_or(f64::NAN) * w)
                .sum::<f64>();
        gamma.rem_euclid(TAU)
    }

    fn require_period(&self) -> Result<f64> {
        if self.stationary {
            return Err(Error::Stationary(
                "single supported level has no period".into(),
            ));
        }
        self.tau.ok_or_else(|| {
            Error::NotCyclic(
                self.diagnostic
                    .clone()
                    .unwrap_or_else(|| "no period exists".into()),
            )
        })
    }
}

/// Geometric phase accumulated after `n` full periods, reduced to
/// `[0, 2π)`.
pub fn phase_after_cycles(analysis: &CyclicAnalysis, n: u64) -> Result<f64> {
    analysis.require_period()?;
    Ok((n as f64 * analysis.gamma_unreduced).rem_euclid(TAU))
}

/// First cycle count `q' ≠ p` (1 ≤ q' ≤ q_max) whose reduced phase lands
/// within `tol` radians of the phase after `p` cycles. `None` when no such
/// count exists in range — with `tol = 0` that is the generic outcome for
/// irrational phases, since floating-point phases never coincide exactly.
pub fn near_recurrence(
    analysis: &CyclicAnalysis,
    p: u64,
    tol: f64,
    q_max: u64,
) -> Result<Option<u64>> {
    analysis.require_period()?;
    if tol < 0.0 {
        return Err(Error::InvalidArgument("tolerance must be >= 0".into()));
    }
    let target = phase_after_cycles(analysis, p)?;
    for q in 1..=q_max {
        if q == p {
            continue;
        }
        let phase = phase_after_cycles(analysis, q)?;
        if circle_distance(phase, target) <= tol {
            return Ok(Some(q));
        }
    }
    Ok(None)
}

/// Which phases are attainable, given the occupation probabilities.
#[derive(Clone, Debug)]
pub struct SelectionReport {
    /// Whether every probability stably rationalized (and the fractions
    /// sum to exactly one).
    pub probabilities_rational: bool,
    /// Lowest-terms fractions `a_i/b_i`, when rational.
    pub fractions: Option<Vec<Rational>>,
    /// `ω' = LCM(b_i)`: the phase lattice is `2πk/ω'`.
    pub omega_prime: Option<BigInt>,
    /// `2π/ω'`.
    pub lattice_step: Option<f64>,
    /// Smallest integer `ω` with every `ω·a_i/b_i` a perfect square —
    /// i.e. the smallest normalization `ψ = (1/√ω)Σ α_i e^{iθ_i}|i⟩` with
    /// integer `α_i`. Absent when the squarefree kernels of `a_i·b_i`
    /// disagree (then no integer normalization exists at all).
    pub omega: Option<BigInt>,
    /// The integer amplitudes `α_i` for `ω`, when it exists.
    pub alphas: Option<Vec<BigInt>>,
    /// Distance from `γ·ω'/2π` to the nearest integer — zero (to rounding)
    /// whenever the probabilities are rational.
    pub lattice_defect: Option<f64>,
}

/// Rationalize the occupation probabilities and work out the phase
/// lattice `2πk/ω'` together with the minimal integer normalization `ω`,
/// when one exists.
pub fn selection_rule(
    analysis: &CyclicAnalysis,
    max_denominator: u64,
    rat_tol: f64,
) -> Result<SelectionReport> {
    let empty = SelectionReport {
        probabilities_rational: false,
        fractions: None,
        omega_prime: None,
        lattice_step: None,
        omega: None,
        alphas: None,
        lattice_defect: None,
    };

    let mut fractions = Vec::with_capacity(analysis.support.len());
    for &w in &analysis.support.probabilities {
        let res = rationalize_checked(w, max_denominator, rat_tol)?;
        if !res.converged {
            return Ok(empty);
        }
        fractions.push(res.value);
    }
    // The fractions of a genuinely rational state sum to exactly one;
    // anything else means the rationalization chased noise.
    let total = fractions
        .iter()
        .fold(Rational::zero(), |acc, f| &acc + f);
    if total != Rational::one() {
        return Ok(empty);
    }

    let omega_prime = fractions
        .iter()
        .fold(BigInt::one(), |acc, f| acc.lcm(f.denom()));
    let lattice_step = TAU / omega_prime.to_f64().unwrap_or(f64::NAN);
    // only a cyclic state has a γ to place on the lattice
    let lattice_defect = analysis.cyclic.then(|| {
        let x = analysis.gamma_reduced * omega_prime.to_f64().unwrap_or(f64::NAN) / TAU;
        (x - x.round()).abs()
    });

    // ω = s·k²: s is the common squarefree kernel of a_i·b_i, and k the
    // least integer making every ω·a_i/b_i a perfect square.
    let mut kernel: Option<u64> = None;
    let mut roots: Vec<u64> = Vec::with_capacity(fractions.len()); // t_i with a_i·b_i = s·t_i²
    let mut computable = true;
    for f in &fractions {
        let (a, b) = (f.numer().to_u64(), f.denom().to_u64());
        let (a, b) = match (a, b) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                computable = false;
                break;
            }
        };
        let ab = match a.checked_mul(b) {
            Some(x) => x,
            None => {
                computable = false;
                break;
            }
        };
        let s = squarefree_part(ab)?;
        match kernel {
            None => kernel = Some(s),
            Some(k0) if k0 != s => {
                // Kernels disagree: no ω exists for this state.
                return Ok(SelectionReport {
                    probabilities_rational: true,
                    fractions: Some(fractions),
                    omega_prime: Some(omega_prime),
                    lattice_step: Some(lattice_step),
                    omega: None,
                    alphas: None,
                    lattice_defect,
                });
            }
            Some(_) => {}
        }
        let t2 = ab / s;
        let t = (t2 as f64).sqrt().round() as u64;
        debug_assert_eq!(t * t, t2);
        roots.push(t);
    }

    let (omega, alphas) = if computable {
        let s = BigInt::from(kernel.expect("at least one fraction"));
        let mut k = BigInt::one();
        for (f, &t) in fractions.iter().zip(&roots) {
            let st = &s * BigInt::from(t);
            let need = f.denom() / f.denom().gcd(&st);
            k = k.lcm(&need);
        }
        let omega = &s * &k * &k;
        let alphas: Vec<BigInt> = fractions
            .iter()
            .zip(&roots)
            .map(|(f, &t)| {
                let num = &k * &s * BigInt::from(t);
                debug_assert!((&num % f.denom()).is_zero());
                num / f.denom()
            })
            .collect();
        debug_assert!((&omega % &omega_prime).is_zero(), "ω' must divide ω");
        debug_assert_eq!(
            alphas.iter().map(|a| a * a).sum::<BigInt>(),
            omega,
            "Σα² = ω"
        );
        (Some(omega), Some(alphas))
    } else {
        (None, None)
    };

    Ok(SelectionReport {
        probabilities_rational: true,
        fractions: Some(fractions),
        omega_prime: Some(omega_prime),
        lattice_step: Some(lattice_step),
        omega,
        alphas,
        lattice_defect,
    })
}

trait BigIntFromF64 {
    fn from_f64_lossy(x: f64) -> BigInt;
}

impl BigIntFromF64 for BigInt {
    fn from_f64_lossy(x: f64) -> BigInt {
        num_traits::FromPrimitive::from_f64(x).unwrap_or_else(BigInt::zero)
    }
}
