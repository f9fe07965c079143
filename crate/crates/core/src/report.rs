//! Human- and machine-readable results.
//!
//! [`analyze`] runs the full pipeline — support, cyclicity, phases,
//! selection rule, operator statistics — and collects everything into a
//! flat, serializable report with a deterministic `Display`. Numbers are
//! rendered with 12 significant digits so repeated runs produce
//! byte-identical output.
//!
//! [`sweep_two_level`] scans the superposition angle θ on two levels and
//! reports three independently computed phases per row: the closed form
//! `π(1 − cos θ)` reduced mod 2π, the winding pipeline, and a propagation
//! oracle (Pancharatnam minus dynamical at the period). The oracle column
//! is NaN at θ ∈ {0, π} where the state is stationary and no period
//! exists.

use serde::Serialize;

use crate::cyclic::{self, CyclicAnalysis, SelectionReport};
use crate::dynamics;
use crate::linalg::CVector;
use crate::operators;
use crate::par;
use crate::rational::Rational;
use crate::scenario::Options;
use crate::spectral::{Spectrum, SpectrumOptions};
use crate::{Error, Result};

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

fn sci(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.11e}")
    }
}

/// One supported level as it appears in the report.
#[derive(Clone, Debug, Serialize)]
pub struct SupportLine {
    pub level: usize,
    pub lambda: f64,
    pub weight: f64,
    /// Rational multiple of the unit, when the spectrum has one.
    pub ratio: Option<String>,
    /// Integer winding over one period, when cyclic.
    pub winding: Option<String>,
}

/// Selection-rule results flattened to printable form.
#[derive(Clone, Debug, Serialize)]
pub struct SelectionLines {
    pub probabilities_rational: bool,
    pub fractions: Option<Vec<String>>,
    pub omega_prime: Option<String>,
    pub lattice_step: Option<f64>,
    pub omega: Option<String>,
    pub alphas: Option<Vec<String>>,
    pub lattice_defect: Option<f64>,
}

/// Operator statistics flattened to printable form.
#[derive(Clone, Debug, Serialize)]
pub struct OperatorLines {
    pub expect_g: f64,
    pub delta_g: f64,
    pub construction_deviation: f64,
}

/// Two-level closed form, reported whenever the support has two levels.
#[derive(Clone, Debug, Serialize)]
pub struct TwoLevelLines {
    /// Superposition angle `θ` with `cos(θ/2)` on the lower level.
    pub theta: f64,
    pub gamma_closed_form: f64,
}

/// Everything the pipeline can say about one state, print-ready.
#[derive(Clone, Debug, Serialize)]
pub struct AnalyzeReport {
    pub hbar: f64,
    pub dim: usize,
    pub cyclic: bool,
    pub stationary: bool,
    pub diagnostic: Option<String>,
    pub support: Vec<SupportLine>,
    pub l_psi: Option<String>,
    pub unit: Option<f64>,
    pub tau: Option<f64>,
    pub gauge_level: usize,
    pub gauge_lambda: f64,
    pub phi_total: Option<f64>,
    pub phi_winding: Option<String>,
    pub gamma_unreduced: Option<f64>,
    pub gamma_reduced: Option<f64>,
    /// Largest circle distance between γ evaluated in the minimum gauge
    /// and in the gauge of any other supported level.
    pub gauge_spread: Option<f64>,
    pub energy_expectation: f64,
    pub epsilon: f64,
    pub energy_uncertainty: f64,
    pub speed: f64,
    pub s_period: Option<f64>,
    pub selection: SelectionLines,
    pub operator: Option<OperatorLines>,
    pub two_level: Option<TwoLevelLines>,
}

/// Run the whole pipeline on a prepared spectrum and state.
pub fn analyze(spectrum: &Spectrum, state: &CVector, options: &Options) -> Result<AnalyzeReport> {
    let supp = cyclic::support(spectrum, state, options.eps_support)?;
    let analysis = cyclic::analyze_cycle(&supp)?;
    let selection = cyclic::selection_rule(&analysis, options.max_denominator, options.rat_tol)?;

    let operator = if analysis.cyclic && !analysis.stationary {
        let g = operators::geometric_operator(spectrum, &analysis, state)?;
        Some(OperatorLines {
            expect_g: g.expect_g,
            delta_g: g.delta_g,
            construction_deviation: g.construction_deviation,
        })
    } else {
        None
    };

    let two_level = if analysis.cyclic && supp.len() == 2 {
        let theta = 2.0 * supp.probabilities[1].sqrt().atan2(supp.probabilities[0].sqrt());
        Some(TwoLevelLines {
            theta,
            gamma_closed_form: operators::two_level_gamma(theta, true),
        })
    } else {
        None
    };

    let gauge_spread = analysis.cyclic.then(|| {
        (0..analysis.p.len())
            .map(|k| {
                cyclic::circle_distance(
                    analysis.gamma_reduced_in_gauge(k),
                    analysis.gamma_reduced,
                )
            })
            .fold(0.0f64, f64::max)
    });

    let support_lines = supp
        .indices
        .iter()
        .enumerate()
        .map(|(pos, &level)| SupportLine {
            level,
            lambda: supp.lambdas[pos],
            weight: supp.probabilities[pos],
            ratio: supp.ratios.as_ref().map(|r| r[pos].to_string()),
            winding: analysis
                .cyclic
                .then(|| analysis.p[pos].to_string()),
        })
        .collect();

    Ok(AnalyzeReport {
        hbar: analysis.hbar,
        dim: spectrum.dim(),
        cyclic: analysis.cyclic,
        stationary: analysis.stationary,
        diagnostic: analysis.diagnostic.clone(),
        support: support_lines,
        l_psi: analysis.l_psi.as_ref().map(Rational::to_string),
        unit: analysis.unit,
        tau: analysis.tau,
        gauge_level: analysis.gauge_level,
        gauge_lambda: analysis.gauge_lambda,
        phi_total: analysis.cyclic.then_some(analysis.phi_total),
        phi_winding: analysis.cyclic.then(|| analysis.phi_winding.to_string()),
        gamma_unreduced: analysis.cyclic.then_some(analysis.gamma_unreduced),
        gamma_reduced: analysis.cyclic.then_some(analysis.gamma_reduced),
        gauge_spread,
        energy_expectation: analysis.energy_expectation,
        epsilon: analysis.epsilon,
        energy_uncertainty: analysis.energy_uncertainty,
        speed: analysis.speed,
        s_period: analysis.s_period,
        selection: SelectionLines {
            probabilities_rational: selection.probabilities_rational,
            fractions: selection
                .fractions
                .as_ref()
                .map(|fs| fs.iter().map(Rational::to_string).collect()),
            omega_prime: selection.omega_prime.as_ref().map(|x| x.to_string()),
            lattice_step: selection.lattice_step,
            omega: selection.omega.as_ref().map(|x| x.to_string()),
            alphas: selection
                .alphas
                .as_ref()
                .map(|xs| xs.iter().map(|x| x.to_string()).collect()),
            lattice_defect: selection.lattice_defect,
        },
        operator,
        two_level,
    })
}

/// Same pipeline, returning the raw analysis for further use.
pub fn analyze_full(
    spectrum: &Spectrum,
    state: &CVector,
    options: &Options,
) -> Result<(CyclicAnalysis, SelectionReport, AnalyzeReport)> {
    let supp = cyclic::support(spectrum, state, options.eps_support)?;
    let analysis = cyclic::analyze_cycle(&supp)?;
    let selection = cyclic::selection_rule(&analysis, options.max_denominator, options.rat_tol)?;
    let report = analyze(spectrum, state, options)?;
    Ok((analysis, selection, report))
}

impl std::fmt::Display for AnalyzeReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut out = String::new();
        writeln!(out, "cyclic-state analysis (ħ = {})", sci(self.hbar)).ok();
        writeln!(out, "  dimension: {}", self.dim).ok();
        writeln!(out, "  support: {} level(s)", self.support.len()).ok();
        for line in &self.support {
            let ratio = line
                .ratio
                .as_deref()
                .map(|r| format!("  r = {r}"))
                .unwrap_or_default();
            let winding = line
                .winding
                .as_deref()
                .map(|p| format!("  p = {p}"))
                .unwrap_or_default();
            writeln!(
                out,
                "    level {:>3}  λ = {}  weight = {}{}{}",
                line.level,
                sci(line.lambda),
                sci(line.weight),
                ratio,
                winding
            )
            .ok();
        }
        match (self.cyclic, self.stationary) {
            (true, true) => {
                writeln!(out, "  stationary: single supported level, the ray never moves").ok();
            }
            (true, false) => {
                writeln!(
                    out,
                    "  cyclic: yes  (L_ψ = {}, unit = {})",
                    self.l_psi.as_deref().unwrap_or("-"),
                    self.unit.map(sci).unwrap_or_else(|| "-".into())
                )
                .ok();
                writeln!(out, "  period τ_ψ = {}", sci(self.tau.unwrap_or(f64::NAN))).ok();
                writeln!(
                    out,
                    "  gauge: level {} at λ_j = {}",
                    self.gauge_level,
                    sci(self.gauge_lambda)
                )
                .ok();
                writeln!(
                    out,
                    "  total phase φ = {}  (winding m = {})",
                    sci(self.phi_total.unwrap_or(f64::NAN)),
                    self.phi_winding.as_deref().unwrap_or("-")
                )
                .ok();
                writeln!(
                    out,
                    "  unreduced phase Γ_ψ = {}",
                    sci(self.gamma_unreduced.unwrap_or(f64::NAN))
                )
                .ok();
                writeln!(
                    out,
                    "  geometric phase γ_ψ = {}  (gauge spread {})",
                    sci(self.gamma_reduced.unwrap_or(f64::NAN)),
                    sci(self.gauge_spread.unwrap_or(f64::NAN))
                )
                .ok();
            }
            (false, _) => {
                writeln!(
                    out,
                    "  cyclic: no — {}",
                    self.diagnostic.as_deref().unwrap_or("(no diagnostic)")
                )
                .ok();
            }
        }
        writeln!(
            out,
            "  energy: ⟨H⟩ = {}  ε = {}  ΔH = {}",
            sci(self.energy_expectation),
            sci(self.epsilon),
            sci(self.energy_uncertainty)
        )
        .ok();
        writeln!(out, "  speed ΔH/ħ = {}", sci(self.speed)).ok();
        if let Some(sp) = self.s_period {
            writeln!(out, "  loop length S_ψ = {}", sci(sp)).ok();
        }

        let sel = &self.selection;
        if sel.probabilities_rational {
            writeln!(
                out,
                "  selection: probabilities rational: {}",
                sel.fractions
                    .as_ref()
                    .map(|fs| fs.join(", "))
                    .unwrap_or_default()
            )
            .ok();
            writeln!(
                out,
                "    ω' = {}  (phase lattice step 2π/ω' = {})",
                sel.omega_prime.as_deref().unwrap_or("-"),
                sel.lattice_step.map(sci).unwrap_or_else(|| "-".into())
            )
            .ok();
            match (&sel.omega, &sel.alphas) {
                (Some(omega), Some(alphas)) => {
                    writeln!(
                        out,
                        "    integer normalization ω = {omega}, α = ({})",
                        alphas.join(", ")
                    )
                    .ok();
                }
                _ => {
                    writeln!(
                        out,
                        "    no integer normalization exists (squarefree kernels differ)"
                    )
                    .ok();
                }
            }
            if let Some(defect) = sel.lattice_defect {
                writeln!(out, "    γ·ω'/2π off-lattice by {}", sci(defect)).ok();
            }
        } else {
            writeln!(
                out,
                "  selection: probabilities are not stably rational; no lattice applies"
            )
            .ok();
        }

        if let Some(op) = &self.operator {
            writeln!(
                out,
                "  operator: ⟨G⟩ = {}  ΔG = {}  construction deviation = {}",
                sci(op.expect_g),
                sci(op.delta_g),
                sci(op.construction_deviation)
            )
            .ok();
        }
        if let Some(two) = &self.two_level {
            writeln!(
                out,
                "  two-level closed form: θ = {}  γ = {}",
                sci(two.theta),
                sci(two.gamma_closed_form)
            )
            .ok();
        }
        f.write_str(&out)
    }
}

/// One row of the two-level sweep.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SweepRow {
    pub theta: f64,
    pub gamma_closed_form: f64,
    pub gamma_pipeline: f64,
    /// Propagation oracle; NaN where no period exists (θ ∈ {0, π}).
    pub gamma_oracle: f64,
}

/// Evaluation order for the sweep — results are identical either way,
/// which makes the reversed order a determinism check.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepOrder {
    Normal,
    Reversed,
}

fn sweep_row(theta: f64, n_samples: usize) -> Result<SweepRow> {
    let closed = operators::two_level_gamma(theta, true);
    let entries = [Rational::from_integer(0), Rational::from_integer(1)];
    let spectrum =
        Spectrum::from_rational_diagonal(&entries, 1.0, 1.0, &SpectrumOptions::default())?;
    let state: CVector = vec![
        num_complex::Complex64::new((theta / 2.0).cos(), 0.0),
        num_complex::Complex64::new((theta / 2.0).sin(), 0.0),
    ];
    let supp = cyclic::support(&spectrum, &state, crate::defaults::EPS_SUPPORT)?;
    let analysis = cyclic::analyze_cycle(&supp)?;
    let pipeline = analysis.gamma_reduced;

    let oracle = match analysis.tau {
        Some(tau) if !analysis.stationary => {
            let traj = dynamics::propagate_exact(
                &spectrum,
                &state,
                analysis.gauge_lambda,
                &dynamics::time_grid(tau, n_samples),
                par::Mode::Sequential,
            )?;
            let ledger = dynamics::phase_ledger(&traj, &analysis)?;
            ledger.geometric.last().unwrap().rem_euclid(TAU)
        }
        _ => f64::NAN,
    };

    Ok(SweepRow {
        theta,
        gamma_closed_form: closed,
        gamma_pipeline: pipeline,
        gamma_oracle: oracle,
    })
}

/// Sweep θ over `[0, π]` inclusive in `steps` points, computing each row
/// by three routes. Rows are always returned in ascending θ regardless of
/// the evaluation order or parallelism.
pub fn sweep_two_level_mode(
    steps: usize,
    n_samples: usize,
    order: SweepOrder,
    mode: par::Mode,
) -> Result<Vec<SweepRow>> {
    if steps < 2 {
        return Err(Error::InvalidArgument("need at least two sweep steps".into()));
    }
    let thetas: Vec<f64> = (0..steps)
        .map(|k| PI * k as f64 / (steps - 1) as f64)
        .collect();
    let eval_order: Vec<usize> = match order {
        SweepOrder::Normal => (0..steps).collect(),
        SweepOrder::Reversed => (0..steps).rev().collect(),
    };
    let computed: Vec<Result<(usize, SweepRow)>> = par::map_collect_mode(mode, steps, |k| {
        let idx = eval_order[k];
        sweep_row(thetas[idx], n_samples).map(|row| (idx, row))
    });
    let mut rows: Vec<Option<SweepRow>> = vec![None; steps];
    for item in computed {
        let (idx, row) = item?;
        rows[idx] = Some(row);
    }
    Ok(rows.into_iter().map(|r| r.expect("all rows computed")).collect())
}

/// [`sweep_two_level_mode`] with automatic parallelism.
pub fn sweep_two_level(steps: usize, n_samples: usize) -> Result<Vec<SweepRow>> {
    sweep_two_level_mode(steps, n_samples, SweepOrder::Normal, par::Mode::Auto)
}

/// Render sweep rows as CSV with 15 significant digits.
pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("theta,gamma_closed_form,gamma_pipeline,gamma_oracle\n");
    for r in rows {
        writeln!(
            out,
            "{:.14e},{:.14e},{:.14e},{:.14e}",
            r.theta, r.gamma_closed_form, r.gamma_pipeline, r.gamma_oracle
        )
        .ok();
    }
    out
}
