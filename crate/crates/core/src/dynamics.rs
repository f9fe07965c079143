//! Time evolution and everything measured along a trajectory.
//!
//! All propagation happens in the shifted gauge `H' = H − λ_j` fixed by a
//! gauge energy (by convention the minimum supported level), so a cyclic
//! state returns to itself — not just to its ray — after one period. The
//! module provides an exact spectral propagator, an independent RK4
//! integrator used to cross-check it, the Fubini-Study length functional,
//! a running phase ledger (Pancharatnam, dynamical, geometric, and the
//! linear phase law), residuals of the ray-space equation of motion, and
//! blind period detection from fidelity revivals.

use num_complex::Complex64;

use crate::cyclic::{CyclicAnalysis, SupportDecomposition};
use crate::linalg::{self, CVector};
use crate::par;
use crate::spectral::Spectrum;
use crate::{Error, Result};

use std::f64::consts::TAU;

/// How a trajectory was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Spectral decomposition: each level rotates by its exact phase.
    Exact,
    /// Classical 4th-order Runge-Kutta on the Schrödinger equation.
    Rk4,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Exact => "exact",
            Method::Rk4 => "rk4",
        })
    }
}

/// One point along a trajectory.
#[derive(Clone, Debug)]
pub struct Sample {
    pub t: f64,
    /// Fubini-Study arc length from the start to this sample.
    pub s: f64,
    pub state: CVector,
}

/// A propagated state history in the shifted gauge.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub gauge_lambda: f64,
    pub hbar: f64,
    pub method: Method,
    pub samples: Vec<Sample>,
    /// Analytic ray speed `ΔH/ħ` of the initial state.
    pub speed: f64,
    /// Largest observed `|‖ψ‖ − 1|` along the way.
    pub norm_drift: f64,
    pub renormalized: bool,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn final_state(&self) -> &CVector {
        &self.samples.last().expect("non-empty trajectory").state
    }

    fn uniform_step(&self) -> Option<f64> {
        if self.samples.len() < 2 {
            return None;
        }
        let h = self.samples[1].t - self.samples[0].t;
        let uniform = self
            .samples
            .windows(2)
            .all(|w| ((w[1].t - w[0].t) - h).abs() <= 1e-9 * h.abs().max(1e-300));
        (uniform && h > 0.0).then_some(h)
    }
}

/// `n + 1` evenly spaced times covering `[0, t_max]`.
pub fn time_grid(t_max: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| t_max * k as f64 / n as f64).collect()
}

fn check_normalized(state: &[Complex64]) -> Result<()> {
    let n = linalg::norm(state);
    if (n - 1.0).abs() > 1e-8 {
        return Err(Error::BadNorm(n));
    }
    Ok(())
}

/// Propagate by rotating each spectral component: `ψ(t) = Σ_k e^{−i(λ_k −
/// λ_j)t/ħ} P_k ψ`. Numerically exact at every requested time.
pub fn propagate_exact(
    spectrum: &Spectrum,
    state: &[Complex64],
    gauge_lambda: f64,
    times: &[f64],
    mode: par::Mode,
) -> Result<Trajectory> {
    check_normalized(state)?;
    if times.is_empty() {
        return Err(Error::InvalidArgument("no sample times given".into()));
    }
    let components = spectrum.level_components(state)?;
    let values: Vec<f64> = spectrum.levels.iter().map(|l| l.value).collect();
    let hbar = spectrum.hbar;
    let speed = spectrum.speed_of_evolution(state)?;
    let dim = state.len();

    let states: Vec<CVector> = par::map_collect_mode(mode, times.len(), |k| {
        let t = times[k];
        let mut out = vec![Complex64::new(0.0, 0.0); dim];
        for (value, comp) in values.iter().zip(&components) {
            let phase = Complex64::from_polar(1.0, -(value - gauge_lambda) * t / hbar);
            for (o, c) in out.iter_mut().zip(comp) {
                *o += phase * c;
            }
        }
        out
    });

    let mut norm_drift = 0.0f64;
    let samples: Vec<Sample> = times
        .iter()
        .zip(states)
        .map(|(&t, state)| {
            norm_drift = norm_drift.max((linalg::norm(&state) - 1.0).abs());
            Sample {
                t,
                s: speed * t,
                state,
            }
        })
        .collect();

    Ok(Trajectory {
        gauge_lambda,
        hbar,
        method: Method::Exact,
        samples,
        speed,
        norm_drift,
        renormalized: false,
    })
}

/// Integrate the Schrödinger equation `iħ ∂_t ψ = (H − λ_j)ψ` with fixed-
/// step RK4, recording `n_samples + 1` evenly spaced samples and taking
/// `substeps` integrator steps between consecutive samples.
///
/// The arc length is accumulated from per-substep chords, independently of
/// the analytic speed. Norm drift is recorded and, unless `renormalize`
/// is set, left in the states so the integrator's raw error stays visible.
pub fn propagate_rk4(
    spectrum: &Spectrum,
    state: &[Complex64],
    gauge_lambda: f64,
    t_max: f64,
    n_samples: usize,
    substeps: usize,
    renormalize: bool,
) -> Result<Trajectory> {
    check_normalized(state)?;
    if n_samples == 0 || substeps == 0 {
        return Err(Error::InvalidArgument(
            "need at least one sample interval and one substep".into(),
        ));
    }
    if !t_max.is_finite() || t_max <= 0.0 {
        return Err(Error::InvalidArgument("t_max must be positive".into()));
    }
    let hbar = spectrum.hbar;
    let hp = spectrum.to_matrix().shifted(gauge_lambda);
    let speed = spectrum.speed_of_evolution(state)?;
    let dt = t_max / (n_samples as f64 * substeps as f64);
    // dψ/dt = −(i/ħ) H' ψ; dimensions are fixed by construction
    let deriv = |v: &CVector| -> CVector {
        let mut w = hp.mul_vec(v).expect("matching dimensions");
        let scale = Complex64::new(0.0, -1.0 / hbar);
        for z in w.iter_mut() {
            *z *= scale;
        }
        w
    };
    let axpy = |y: &CVector, a: f64, x: &CVector| -> CVector {
        y.iter().zip(x).map(|(y, x)| y + a * x).collect()
    };

    let mut psi: CVector = state.to_vec();
    let mut s = 0.0f64;
    let mut norm_drift = 0.0f64;
    let mut samples = Vec::with_capacity(n_samples + 1);
    samples.push(Sample {
        t: 0.0,
        s: 0.0,
        state: psi.clone(),
    });

    for k in 1..=n_samples {
        for _ in 0..substeps {
            let prev = psi.clone();
            let k1 = deriv(&psi);
            let k2 = deriv(&axpy(&psi, dt / 2.0, &k1));
            let k3 = deriv(&axpy(&psi, dt / 2.0, &k2));
            let k4 = deriv(&axpy(&psi, dt, &k3));
            for i in 0..psi.len() {
                psi[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            if renormalize {
                let n = linalg::norm(&psi);
                if n > 0.0 {
                    for z in psi.iter_mut() {
                        *z /= n;
                    }
                }
            }
            let overlap = linalg::dot(&prev, &psi).norm()
                / (linalg::norm(&prev) * linalg::norm(&psi));
            s += overlap.clamp(0.0, 1.0).acos();
        }
        norm_drift = norm_drift.max((linalg::norm(&psi) - 1.0).abs());
        samples.push(Sample {
            t: t_max * k as f64 / n_samples as f64,
            s,
            state: psi.clone(),
        });
    }

    Ok(Trajectory {
        gauge_lambda,
        hbar,
        method: Method::Rk4,
        samples,
        speed,
        norm_drift,
        renormalized: renormalize,
    })
}

/// Fubini-Study length of a trajectory, measured from the sampled states
/// alone.
#[derive(Clone, Debug)]
pub struct FsReport {
    /// Total arc length from first to last sample.
    pub total: f64,
    /// Mean measured ray speed.
    pub mean_speed: f64,
    /// Largest deviation of a local speed estimate from the mean.
    pub max_speed_deviation: f64,
    /// "fd4" on uniform grids with ≥ 5 samples, else "chord".
    pub method: &'static str,
}

fn perp_norm(psi: &CVector, v: &CVector) -> f64 {
    // ‖(1 − |ψ⟩⟨ψ|) v‖ for normalized ψ
    let overlap = linalg::dot(psi, v);
    let mut s = 0.0;
    for (p, w) in psi.iter().zip(v) {
        s += (w - overlap * p).norm_sqr();
    }
    s.sqrt()
}

/// Measure arc length and local speed from the states themselves.
///
/// On a uniform grid with at least five samples the speed at each point
/// comes from a 4th-order finite-difference derivative (one-sided at the
/// ends) projected orthogonally to the state, and the length is its
/// trapezoid integral. Shorter or non-uniform trajectories fall back to
/// summing chord angles `arccos|⟨ψ_k|ψ_{k+1}⟩|`.
pub fn fs_length(traj: &Trajectory) -> Result<FsReport> {
    let n = traj.samples.len();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "need at least two samples to measure a length".into(),
        ));
    }
    let states: Vec<&CVector> = traj.samples.iter().map(|s| &s.state).collect();

    if let (Some(h), true) = (traj.uniform_step(), n >= 5) {
        let mut speeds = Vec::with_capacity(n);
        for i in 0..n {
            let d: CVector = if i >= 2 && i + 2 < n {
                // central: (f[-2] − 8f[-1] + 8f[+1] − f[+2]) / 12h
                (0..states[0].len())
                    .map(|c| {
                        (states[i - 2][c] - 8.0 * states[i - 1][c] + 8.0 * states[i + 1][c]
                            - states[i + 2][c])
                            / (12.0 * h)
                    })
                    .collect()
            } else {
                // one-sided: ±(−25f0 + 48f1 − 36f2 + 16f3 − 3f4) / 12h
                let (base, sign): (usize, f64) = if i < 2 { (i, 1.0) } else { (i, -1.0) };
                let idx = |k: usize| -> usize {
                    if sign > 0.0 {
                        base + k
                    } else {
                        base - k
                    }
                };
                (0..states[0].len())
                    .map(|c| {
                        sign * (-25.0 * states[idx(0)][c] + 48.0 * states[idx(1)][c]
                            - 36.0 * states[idx(2)][c]
                            + 16.0 * states[idx(3)][c]
                            - 3.0 * states[idx(4)][c])
                            / (12.0 * h)
                    })
                    .collect()
            };
            speeds.push(perp_norm(states[i], &d));
        }
        let total = h * (speeds.iter().sum::<f64>() - (speeds[0] + speeds[n - 1]) / 2.0);
        let mean = speeds.iter().sum::<f64>() / n as f64;
        let dev = speeds
            .iter()
            .fold(0.0f64, |acc, &v| acc.max((v - mean).abs()));
        return Ok(FsReport {
            total,
            mean_speed: mean,
            max_speed_deviation: dev,
            method: "fd4",
        });
    }

    // chord fallback
    let mut total = 0.0;
    let mut speeds = Vec::with_capacity(n - 1);
    for w in traj.samples.windows(2) {
        let overlap = linalg::dot(&w[0].state, &w[1].state).norm()
            / (linalg::norm(&w[0].state) * linalg::norm(&w[1].state));
        let arc = overlap.clamp(0.0, 1.0).acos();
        total += arc;
        let dt = w[1].t - w[0].t;
        if dt > 0.0 {
            speeds.push(arc / dt);
        }
    }
    let mean = if speeds.is_empty() {
        0.0
    } else {
        speeds.iter().sum::<f64>() / speeds.len() as f64
    };
    let dev = speeds
        .iter()
        .fold(0.0f64, |acc, &v| acc.max((v - mean).abs()));
    Ok(FsReport {
        total,
        mean_speed: mean,
        max_speed_deviation: dev,
        method: "chord",
    })
}

/// Running phase bookkeeping along a trajectory.
#[derive(Clone, Debug)]
pub struct PhaseLedger {
    pub t: Vec<f64>,
    pub s: Vec<f64>,
    /// Unwrapped `arg⟨ψ(0)|ψ(t)⟩` (nearest-branch continuation).
    pub pancharatnam: Vec<f64>,
    /// `−εt/ħ`: the dynamical phase of the gauge-shifted Hamiltonian,
    /// whose mean `ε = ⟨H⟩ − λ_j` is a constant of motion.
    pub dynamical: Vec<f64>,
    /// Geometric phase to time `t`: Pancharatnam minus dynamical.
    pub geometric: Vec<f64>,
    /// The linear law `s·Γ_ψ/S_ψ` — NaN when the state has no period.
    pub linear_law: Vec<f64>,
    /// Pointwise principal-value gap between the geometric phase and the
    /// linear law.
    pub divergence: Vec<f64>,
    /// Sample indices where `|⟨ψ(0)|ψ(t)⟩| < 1e−9` made the Pancharatnam
    /// phase ill-conditioned.
    pub ambiguous: Vec<usize>,
}

fn principal(x: f64) -> f64 {
    // (−π, π]
    let y = x.rem_euclid(TAU);
    if y > std::f64::consts::PI {
        y - TAU
    } else {
        y
    }
}

/// Track Pancharatnam, dynamical and geometric phases along a trajectory
/// and compare the geometric phase to the linear law `γ(s) = s·Γ_ψ/S_ψ`.
///
/// The unwrapped Pancharatnam phase can differ from the naive principal
/// value by multiples of 2π; all comparisons against it should be made on
/// the circle.
pub fn phase_ledger(traj: &Trajectory, analysis: &CyclicAnalysis) -> Result<PhaseLedger> {
    if traj.samples.is_empty() {
        return Err(Error::InvalidArgument("empty trajectory".into()));
    }
    let psi0 = &traj.samples[0].state;
    let hbar = traj.hbar;
    let eps = analysis.epsilon;
    let slope = match (analysis.tau, analysis.s_period) {
        (Some(_), Some(sp)) if sp > 0.0 => analysis.gamma_unreduced / sp,
        _ => f64::NAN,
    };

    let n = traj.samples.len();
    let mut t = Vec::with_capacity(n);
    let mut s = Vec::with_capacity(n);
    let mut panch = Vec::with_capacity(n);
    let mut dynamical = Vec::with_capacity(n);
    let mut geometric = Vec::with_capacity(n);
    let mut linear = Vec::with_capacity(n);
    let mut divergence = Vec::with_capacity(n);
    let mut ambiguous = Vec::new();

    let mut prev_raw = 0.0f64;
    let mut unwrapped = 0.0f64;
    for (k, sample) in traj.samples.iter().enumerate() {
        let overlap = linalg::dot(psi0, &sample.state);
        if overlap.norm() < 1e-9 {
            ambiguous.push(k);
        }
        let raw = overlap.arg();
        if k == 0 {
            unwrapped = raw;
        } else {
            unwrapped += principal(raw - prev_raw);
        }
        prev_raw = raw;

        let dyn_k = -eps * sample.t / hbar;
        let geo_k = unwrapped - dyn_k;
        let lin_k = slope * sample.s;
        t.push(sample.t);
        s.push(sample.s);
        panch.push(unwrapped);
        dynamical.push(dyn_k);
        geometric.push(geo_k);
        linear.push(lin_k);
        divergence.push(if lin_k.is_nan() {
            f64::NAN
        } else {
            principal(geo_k - lin_k).abs()
        });
    }

    Ok(PhaseLedger {
        t,
        s,
        pancharatnam: panch,
        dynamical,
        geometric,
        linear_law: linear,
        divergence,
        ambiguous,
    })
}

/// Residuals of the equation of motion in both clocks.
#[derive(Clone, Debug)]
pub struct EomReport {
    /// `max_k ‖ iħ ∂_t ψ − (H − λ_g) ψ ‖` over interior samples.
    pub residual_t: f64,
    /// Same equation in the loop fraction `x = s/S`:
    /// `max_k ‖ i ∂_x ψ − (τ/ħ)(H − λ_g) ψ ‖`.
    pub residual_arc: f64,
    /// The gauge energy the residuals were evaluated against.
    pub gauge_lambda: f64,
}

/// Check a trajectory against the ray-space equation of motion, with the
/// state derivative taken by 4th-order finite differences from the
/// samples themselves.
///
/// `gauge_override` replaces the trajectory's own gauge energy on the
/// right-hand side; an offset of `u` inflates the arc residual to
/// `≈ τ·u/ħ`, which makes a deliberate mis-gauge a sharp control.
pub fn eom_residual(
    traj: &Trajectory,
    spectrum: &Spectrum,
    analysis: &CyclicAnalysis,
    gauge_override: Option<f64>,
) -> Result<EomReport> {
    let n = traj.samples.len();
    let h = traj.uniform_step().ok_or_else(|| {
        Error::InvalidArgument("equation-of-motion residuals need a uniform time grid".into())
    })?;
    if n < 5 {
        return Err(Error::InvalidArgument(
            "need at least five samples for the finite-difference stencil".into(),
        ));
    }
    let gauge = gauge_override.unwrap_or(traj.gauge_lambda);
    let hp = spectrum.to_matrix().shifted(gauge);
    let hbar = traj.hbar;
    let tau = analysis
        .tau
        .ok_or_else(|| Error::NotCyclic("equation of motion needs a period".into()))?;

    let states: Vec<&CVector> = traj.samples.iter().map(|s| &s.state).collect();
    let dim = states[0].len();
    let mut residual_t = 0.0f64;
    for i in 2..n - 2 {
        let dpsi: CVector = (0..dim)
            .map(|c| {
                (states[i - 2][c] - 8.0 * states[i - 1][c] + 8.0 * states[i + 1][c]
                    - states[i + 2][c])
                    / (12.0 * h)
            })
            .collect();
        let rhs = hp.mul_vec(states[i])?;
        let mut r2 = 0.0;
        for c in 0..dim {
            // iħ ∂_t ψ − H'ψ
            r2 += (Complex64::new(0.0, hbar) * dpsi[c] - rhs[c]).norm_sqr();
        }
        residual_t = residual_t.max(r2.sqrt());
    }

    Ok(EomReport {
        residual_t,
        // x = t/τ on-shell, so the arc equation scales by τ/ħ.
        residual_arc: residual_t * tau / hbar,
        gauge_lambda: gauge,
    })
}

/// Like [`eom_residual`], but with the state derivative taken from a
/// dedicated 5-point stencil on the exact propagator at each probe time,
/// with the step chosen to balance 4th-order truncation against roundoff
/// (`h ≈ (90·ε_machine)^{1/5}/ω_max`). This keeps the residual near the
/// floating-point floor even when the trajectory's own sampling is far
/// too coarse for differentiation.
pub fn eom_residual_probed(
    spectrum: &Spectrum,
    analysis: &CyclicAnalysis,
    state: &[Complex64],
    gauge_override: Option<f64>,
    n_probes: usize,
) -> Result<EomReport> {
    check_normalized(state)?;
    if n_probes == 0 {
        return Err(Error::InvalidArgument("need at least one probe".into()));
    }
    let tau = analysis
        .tau
        .ok_or_else(|| Error::NotCyclic("equation of motion needs a period".into()))?;
    let hbar = analysis.hbar;
    let gauge = gauge_override.unwrap_or(analysis.gauge_lambda);
    let trajectory_gauge = analysis.gauge_lambda;
    let components = spectrum.level_components(state)?;
    let values: Vec<f64> = spectrum.levels.iter().map(|l| l.value).collect();
    let dim = state.len();
    let psi_at = |t: f64| -> CVector {
        let mut out = vec![Complex64::new(0.0, 0.0); dim];
        for (value, comp) in values.iter().zip(&components) {
            let phase = Complex64::from_polar(1.0, -(value - trajectory_gauge) * t / hbar);
            for (o, c) in out.iter_mut().zip(comp) {
                *o += phase * c;
            }
        }
        out
    };

    let omega_max = analysis
        .support
        .lambdas
        .iter()
        .fold(0.0f64, |acc, &l| acc.max((l - trajectory_gauge).abs()))
        / hbar;
    let h = ((90.0 * f64::EPSILON).powf(0.2) / omega_max.max(1e-12)).min(tau / 16.0);

    let hp = spectrum.to_matrix().shifted(gauge);
    let mut residual_t = 0.0f64;
    for q in 0..n_probes {
        let t = tau * (q as f64 + 0.5) / n_probes as f64;
        let fm2 = psi_at(t - 2.0 * h);
        let fm1 = psi_at(t - h);
        let f0 = psi_at(t);
        let fp1 = psi_at(t + h);
        let fp2 = psi_at(t + 2.0 * h);
        let rhs = hp.mul_vec(&f0)?;
        let mut r2 = 0.0;
        for c in 0..dim {
            let d = (fm2[c] - 8.0 * fm1[c] + 8.0 * fp1[c] - fp2[c]) / (12.0 * h);
            r2 += (Complex64::new(0.0, hbar) * d - rhs[c]).norm_sqr();
        }
        residual_t = residual_t.max(r2.sqrt());
    }

    Ok(EomReport {
        residual_t,
        residual_arc: residual_t * tau / hbar,
        gauge_lambda: gauge,
    })
}

/// A period found by looking only at fidelity revivals.
#[derive(Clone, Copy, Debug)]
pub struct CycleDetection {
    pub tau: f64,
    pub fidelity: f64,
}

/// Find the first time the fidelity `|⟨ψ(0)|ψ(t)⟩|²` revives to
/// `1 − fidelity_tol`, knowing nothing about commensurability.
///
/// The fidelity needs only the support weights: `f(t) = |Σ_k w_k
/// e^{−i(λ_k−λ_j)t/ħ}|²`. A coarse grid locates the first candidate peak
/// with a relaxed threshold, golden-section search refines it on the
/// exact expression, and the strict threshold is applied to the refined
/// peak only.
pub fn detect_cycle(
    supp: &SupportDecomposition,
    t_max: f64,
    n_grid: usize,
    fidelity_tol: f64,
) -> Result<Option<CycleDetection>> {
    if supp.len() == 1 {
        return Err(Error::Stationary(
            "a single-level state never leaves its ray; no revival to detect".into(),
        ));
    }
    if !t_max.is_finite() || t_max <= 0.0 || n_grid < 8 {
        return Err(Error::InvalidArgument(
            "need t_max > 0 and at least 8 grid points".into(),
        ));
    }
    let hbar = supp.hbar;
    let gauge = supp.lambdas[0];
    let fidelity = |t: f64| -> f64 {
        let mut z = Complex64::new(0.0, 0.0);
        for (l, w) in supp.lambdas.iter().zip(&supp.probabilities) {
            z += w * Complex64::from_polar(1.0, -(l - gauge) * t / hbar);
        }
        z.norm_sqr()
    };
    // d/dt |z|² = 2 Re(z̄ ż), analytic — lets the peak be bisected to
    // machine precision where function values alone go flat
    let dfidelity = |t: f64| -> f64 {
        let mut z = Complex64::new(0.0, 0.0);
        let mut dz = Complex64::new(0.0, 0.0);
        for (l, w) in supp.lambdas.iter().zip(&supp.probabilities) {
            let om = (l - gauge) / hbar;
            let e = Complex64::from_polar(1.0, -om * t);
            z += w * e;
            dz += w * e * Complex64::new(0.0, -om);
        }
        2.0 * (z.conj() * dz).re
    };

    let relaxed = (100.0 * fidelity_tol).max(1e-3);
    let dt = t_max / n_grid as f64;
    // arm the detector only once the trivial t = 0 peak has been left,
    // so the revival found is a genuine return
    let mut armed = false;
    let mut first_above: Option<usize> = None;
    for i in 1..=n_grid {
        let above = fidelity(i as f64 * dt) >= 1.0 - relaxed;
        if !armed {
            armed = !above;
        } else if above {
            first_above = Some(i);
            break;
        }
    }
    let Some(mut peak) = first_above else {
        return Ok(None);
    };
    // walk to the local maximum of the grid values
    while peak < n_grid && fidelity((peak + 1) as f64 * dt) > fidelity(peak as f64 * dt) {
        peak += 1;
    }

    // bisect the analytic derivative across the bracket around the grid
    // peak; fall back to the best bracket point if the peak straddles an
    // edge of the scan window
    let mut a = (peak.saturating_sub(1)) as f64 * dt;
    let mut b = ((peak + 1).min(n_grid)) as f64 * dt;
    let t_star = if dfidelity(a) > 0.0 && dfidelity(b) < 0.0 {
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if b - a <= f64::EPSILON * m.abs() {
                break;
            }
            if dfidelity(m) > 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    } else {
        let grid_t = peak as f64 * dt;
        [a, grid_t, b]
            .into_iter()
            .max_by(|x, y| fidelity(*x).total_cmp(&fidelity(*y)))
            .unwrap()
    };
    let f_star = fidelity(t_star);
    if f_star >= 1.0 - fidelity_tol {
        Ok(Some(CycleDetection {
            tau: t_star,
            fidelity: f_star,
        }))
    } else {
        Ok(None)
    }
}
