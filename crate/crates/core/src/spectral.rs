//! Spectra of time-independent Hamiltonians, with their rational
//! structure when one exists.
//!
//! The physics downstream only ever consumes eigenvalue *gaps*, so a
//! spectrum is stored as `λ_k = offset + r_k·unit` with exact rational
//! ratios `r_k` whenever all gap ratios are rational ("commensurate").
//! Rational-list input is exact by construction; dense input is
//! diagonalized and its gap ratios are recovered by checked continued
//! fractions, which refuse irrational ratios instead of silently
//! approximating them.

use num_complex::Complex64;
use serde::Serialize;

use crate::linalg::{self, CMatrix, CVector};
use crate::rational::{rationalize_checked, Rational};
use crate::{defaults, Error, Result};

/// Validated Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianMatrix {
    matrix: CMatrix,
    max_asymmetry: f64,
}

impl HermitianMatrix {
    /// Accepts `m` when `max |m_ij - conj(m_ji)| ≤ herm_tol · max |m_ij|`.
    pub fn new(m: CMatrix, herm_tol: f64) -> Result<Self> {
        let asym = m.max_asymmetry();
        let tol_abs = herm_tol * m.max_abs().max(f64::MIN_POSITIVE);
        if asym > tol_abs {
            return Err(Error::NotHermitian(asym, tol_abs));
        }
        Ok(HermitianMatrix {
            matrix: m,
            max_asymmetry: asym,
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn max_asymmetry(&self) -> f64 {
        self.max_asymmetry
    }
}

/// One distinct eigenvalue with an orthonormal basis of its eigenspace.
#[derive(Clone, Debug)]
pub struct Level {
    /// Eigenvalue (energy).
    pub value: f64,
    /// Orthonormal eigenvectors spanning the eigenspace; length = degeneracy.
    pub vectors: Vec<CVector>,
}

/// Exact rational description `λ_k = offset + ratios[k]·unit`.
#[derive(Clone, Debug, Serialize)]
pub struct RationalStructure {
    /// Additive offset; zero for rational-list input.
    pub offset: f64,
    /// Base energy unit `u > 0`.
    pub unit: f64,
    /// Strictly increasing rational multiples, one per level.
    pub ratios: Vec<Rational>,
}

/// Knobs for spectrum construction. `..Default::default()` gives the
/// documented defaults.
#[derive(Clone, Debug)]
pub struct SpectrumOptions {
    /// Denominator bound for gap-ratio rationalization.
    pub max_denominator: u64,
    /// Residual tolerance for gap-ratio rationalization.
    pub rat_tol: f64,
    /// Relative eigenvalue separation below which levels merge.
    pub deg_tol: f64,
    /// Relative asymmetry tolerated in dense input.
    pub herm_tol: f64,
    /// Hard cap on Hilbert-space dimension.
    pub max_dim: usize,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions {
            max_denominator: defaults::MAX_DENOMINATOR,
            rat_tol: defaults::RAT_TOL,
            deg_tol: defaults::DEG_TOL,
            herm_tol: defaults::HERM_TOL,
            max_dim: defaults::MAX_DIM,
        }
    }
}

/// Diagonalized spectrum: distinct ascending levels, optional rational
/// structure, and the ħ the rest of the pipeline should use.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub hbar: f64,
    /// Distinct levels, ascending in energy.
    pub levels: Vec<Level>,
    /// Present exactly when all gap ratios are rational.
    pub rational: Option<RationalStructure>,
    /// Why rationalization failed, when it did.
    pub incommensurate_diagnostic: Option<String>,
    /// True when the rational structure was given, not recovered from
    /// floating-point eigenvalues — downstream tolerance budgets differ.
    pub exact: bool,
}

impl Spectrum {
    /// Spectrum of a dense Hermitian matrix.
    pub fn from_dense(h: &HermitianMatrix, hbar: f64, opts: &SpectrumOptions) -> Result<Spectrum> {
        check_hbar(hbar)?;
        let levels = diagonalize(h, opts.deg_tol, opts.max_dim)?;
        let values: Vec<f64> = levels.iter().map(|l| l.value).collect();
        let (rational, diagnostic) =
            commensurate_structure(&values, opts.max_denominator, opts.rat_tol)?;
        Ok(Spectrum {
            hbar,
            levels,
            rational,
            incommensurate_diagnostic: diagnostic,
            exact: false,
        })
    }

    /// Spectrum of `diag(scale·q_0, …, scale·q_{n-1})` in the standard
    /// basis. Exact: no rationalization happens. Equal entries merge into
    /// one degenerate level; levels are sorted ascending with their basis
    /// vectors carried along.
    pub fn from_rational_diagonal(
        entries: &[Rational],
        scale: f64,
        hbar: f64,
        opts: &SpectrumOptions,
    ) -> Result<Spectrum> {
        check_hbar(hbar)?;
        if entries.is_empty() {
            return Err(Error::DimensionMismatch("empty eigenvalue list".into()));
        }
        if entries.len() > opts.max_dim {
            return Err(Error::DimensionTooLarge(entries.len(), opts.max_dim));
        }
        if !scale.is_finite() || scale <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "scale must be a positive finite number, got {scale}"
            )));
        }
        let n = entries.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| entries[a].cmp(&entries[b]));

        let mut ratios: Vec<Rational> = Vec::new();
        let mut levels: Vec<Level> = Vec::new();
        for &idx in &order {
            let basis_vec = |i: usize| -> CVector {
                let mut v = vec![Complex64::new(0.0, 0.0); n];
                v[i] = Complex64::new(1.0, 0.0);
                v
            };
            if ratios.last() == Some(&entries[idx]) {
                levels.last_mut().unwrap().vectors.push(basis_vec(idx));
            } else {
                ratios.push(entries[idx].clone());
                levels.push(Level {
                    value: entries[idx].to_f64() * scale,
                    vectors: vec![basis_vec(idx)],
                });
            }
        }
        Ok(Spectrum {
            hbar,
            levels,
            rational: Some(RationalStructure {
                offset: 0.0,
                unit: scale,
                ratios,
            }),
            incommensurate_diagnostic: None,
            exact: true,
        })
    }

    pub fn commensurate(&self) -> bool {
        self.rational.is_some()
    }

    /// Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.levels[0].vectors[0].len()
    }

    pub fn level_values(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.value).collect()
    }

    /// Projection of `state` onto each level's eigenspace, in level order.
    pub fn level_components(&self, state: &[Complex64]) -> Result<Vec<CVector>> {
        if state.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "state has length {} but the spectrum acts on dimension {}",
                state.len(),
                self.dim()
            )));
        }
        Ok(self
            .levels
            .iter()
            .map(|level| {
                let mut comp = vec![Complex64::new(0.0, 0.0); state.len()];
                for v in &level.vectors {
                    let coeff = linalg::dot(v, state);
                    for (c, x) in comp.iter_mut().zip(v) {
                        *c += coeff * x;
                    }
                }
                comp
            })
            .collect())
    }

    /// Level weights `‖P_k ψ‖²`.
    pub fn level_weights(&self, state: &[Complex64]) -> Result<Vec<f64>> {
        Ok(self
            .level_components(state)?
            .iter()
            .map(|c| c.iter().map(|z| z.norm_sqr()).sum())
            .collect())
    }

    /// `⟨H⟩` on a normalized state.
    pub fn expectation_energy(&self, state: &[Complex64]) -> Result<f64> {
        let w = self.level_weights(state)?;
        Ok(self
            .levels
            .iter()
            .zip(&w)
            .map(|(l, wk)| l.value * wk)
            .sum())
    }

    /// `ΔH = √(⟨H²⟩ - ⟨H⟩²)` on a normalized state. Invariant under
    /// uniform level shifts by construction.
    pub fn energy_uncertainty(&self, state: &[Complex64]) -> Result<f64> {
        let w = self.level_weights(state)?;
        let mean: f64 = self
            .levels
            .iter()
            .zip(&w)
            .map(|(l, wk)| l.value * wk)
            .sum();
        let var: f64 = self
            .levels
            .iter()
            .zip(&w)
            .map(|(l, wk)| (l.value - mean).powi(2) * wk)
            .sum();
        Ok(var.max(0.0).sqrt())
    }

    /// Fubini-Study speed `ΔH/ħ` — the rate at which the ray moves.
    pub fn speed_of_evolution(&self, state: &[Complex64]) -> Result<f64> {
        Ok(self.energy_uncertainty(state)? / self.hbar)
    }

    /// Reassemble the dense Hamiltonian `Σ λ_k P_k` in the working basis.
    pub fn to_matrix(&self) -> CMatrix {
        let n = self.dim();
        let mut m = CMatrix::zeros(n);
        for level in &self.levels {
            for v in &level.vectors {
                for i in 0..n {
                    for j in 0..n {
                        m[(i, j)] += v[i] * v[j].conj() * level.value;
                    }
                }
            }
        }
        m
    }
}

fn check_hbar(hbar: f64) -> Result<()> {
    if !hbar.is_finite() || hbar <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "hbar must be a positive finite number, got {hbar}"
        )));
    }
    Ok(())
}

/// Full eigendecomposition with degeneracy merging: eigenvalues closer
/// than `deg_tol · max|λ|` collapse into one level whose eigenspace basis
/// is re-orthonormalized.
pub fn diagonalize(h: &HermitianMatrix, deg_tol: f64, max_dim: usize) -> Result<Vec<Level>> {
    let n = h.dim();
    if n == 0 {
        return Err(Error::DimensionMismatch("empty matrix".into()));
    }
    if n > max_dim {
        return Err(Error::DimensionTooLarge(n, max_dim));
    }
    let eig = linalg::eigh_jacobi(h.matrix())?;
    let scale = eig.values.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let tol_abs = deg_tol * scale;

    let mut levels: Vec<Level> = Vec::new();
    let mut members: Vec<Vec<f64>> = Vec::new();
    for (value, vector) in eig.values.into_iter().zip(eig.vectors) {
        match levels.last_mut() {
            Some(last) if value - members.last().unwrap()[0] <= tol_abs => {
                last.vectors.push(vector);
                members.last_mut().unwrap().push(value);
            }
            _ => {
                levels.push(Level {
                    value,
                    vectors: vec![vector],
                });
                members.push(vec![value]);
            }
        }
    }
    // Representative value: mean over the merged cluster; vectors cleaned
    // up so each eigenspace carries an exactly orthonormal basis.
    for (level, cluster) in levels.iter_mut().zip(&members) {
        level.value = cluster.iter().sum::<f64>() / cluster.len() as f64;
        if level.vectors.len() > 1 {
            linalg::orthonormalize(&mut level.vectors);
        }
    }
    Ok(levels)
}

/// Try to express distinct ascending `values` as `offset + r_k·unit` with
/// rational `r_k`. The unit is the first gap, so `r_0 = 0` and `r_1 = 1`;
/// a single level is trivially commensurate with unit 1.
///
/// Returns the structure, or `None` plus a human-readable diagnostic
/// naming the first gap ratio that refused to rationalize.
pub fn commensurate_structure(
    values: &[f64],
    max_denominator: u64,
    rat_tol: f64,
) -> Result<(Option<RationalStructure>, Option<String>)> {
    if values.is_empty() {
        return Err(Error::DimensionMismatch("empty spectrum".into()));
    }
    let offset = values[0];
    if values.len() == 1 {
        return Ok((
            Some(RationalStructure {
                offset,
                unit: 1.0,
                ratios: vec![Rational::zero()],
            }),
            None,
        ));
    }
    let unit = values[1] - values[0];
    debug_assert!(unit > 0.0, "levels must be distinct and ascending");
    let mut ratios = vec![Rational::zero(), Rational::one()];
    for (k, &v) in values.iter().enumerate().skip(2) {
        let x = (v - offset) / unit;
        let res = rationalize_checked(x, max_denominator, rat_tol)?;
        if !res.converged {
            let diagnostic = format!(
                "gap ratio (λ_{k} − λ_0)/(λ_1 − λ_0) = {x:.12} has no stable fraction \
                 with denominator ≤ {max_denominator} within {rat_tol:.1e} \
                 (best candidate {} missed by {:.3e})",
                res.value, res.residual
            );
            return Ok((None, Some(diagnostic)));
        }
        ratios.push(res.value);
    }
    Ok((
        Some(RationalStructure {
            offset,
            unit,
            ratios,
        }),
        None,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::distance;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d).unwrap()
    }

    fn opts() -> SpectrumOptions {
        SpectrumOptions::default()
    }

    #[test]
    fn hermitian_validation_names_the_asymmetry() {
        let m = CMatrix::from_rows(&[
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(0.5, 0.0), c(0.0, 0.0)],
        ])
        .unwrap();
        match HermitianMatrix::new(m, 1e-10) {
            Err(Error::NotHermitian(asym, _)) => assert!((asym - 0.5).abs() < 1e-15),
            other => panic!("expected NotHermitian, got {other:?}"),
        }
    }

    #[test]
    fn dense_two_level_spectrum() {
        // H = [[1,1],[1,1]] has eigenvalues 0 and 2.
        let m = CMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(1.0, 0.0)],
        ])
        .unwrap();
        let h = HermitianMatrix::new(m, 1e-10).unwrap();
        let s = Spectrum::from_dense(&h, 1.0, &opts()).unwrap();
        assert_eq!(s.levels.len(), 2);
        assert!(s.levels[0].value.abs() < 1e-12);
        assert!((s.levels[1].value - 2.0).abs() < 1e-12);
        assert!(s.commensurate());
        let rs = s.rational.as_ref().unwrap();
        assert_eq!(rs.ratios, vec![r(0, 1), r(1, 1)]);
        assert!((rs.unit - 2.0).abs() < 1e-12);
    }

    #[test]
    fn near_degenerate_levels_merge() {
        let m = CMatrix::from_diagonal(&[1.0, 1.0 + 1e-12, 3.0]);
        let h = HermitianMatrix::new(m, 1e-10).unwrap();
        let levels = diagonalize(&h, 1e-10, 64).unwrap();
        assert_eq!(levels.len(), 2);
        assert_eq!(levels[0].vectors.len(), 2);
        assert_eq!(levels[1].vectors.len(), 1);
        // merged eigenspace basis stays orthonormal
        let g = linalg::dot(&levels[0].vectors[0], &levels[0].vectors[1]);
        assert!(g.norm() < 1e-12);
    }

    #[test]
    fn commensurate_examples() {
        let (rs, _) = commensurate_structure(&[0.0, 1.0, 3.0], 1_000_000, 1e-9).unwrap();
        let rs = rs.expect("commensurate");
        assert!((rs.unit - 1.0).abs() < 1e-15);
        assert_eq!(rs.ratios, vec![r(0, 1), r(1, 1), r(3, 1)]);

        let s2 = std::f64::consts::SQRT_2;
        let (rs, _) = commensurate_structure(&[0.0, s2, 3.0 * s2], 1_000_000, 1e-9).unwrap();
        let rs = rs.expect("commensurate with irrational unit");
        assert!((rs.unit - s2).abs() < 1e-15);
        assert_eq!(rs.ratios, vec![r(0, 1), r(1, 1), r(3, 1)]);
    }

    #[test]
    fn incommensurate_spectrum_is_refused_with_diagnostic() {
        let s2 = std::f64::consts::SQRT_2;
        let (rs, diag) = commensurate_structure(&[0.0, 1.0, s2], 1_000_000, 1e-9).unwrap();
        assert!(rs.is_none());
        let msg = diag.unwrap();
        assert!(msg.contains("λ_2"), "diagnostic names the level: {msg}");
    }

    #[test]
    fn any_two_levels_are_commensurate() {
        let (rs, _) = commensurate_structure(&[0.3, std::f64::consts::PI], 10, 1e-9).unwrap();
        let rs = rs.unwrap();
        assert_eq!(rs.ratios, vec![r(0, 1), r(1, 1)]);
    }

    #[test]
    fn single_level_is_trivially_commensurate() {
        let (rs, _) = commensurate_structure(&[0.7], 10, 1e-9).unwrap();
        let rs = rs.unwrap();
        assert_eq!(rs.ratios, vec![Rational::zero()]);
        assert!((rs.offset - 0.7).abs() < 1e-15);
    }

    #[test]
    fn rational_diagonal_input_is_exact_and_sorted() {
        let s = Spectrum::from_rational_diagonal(&[r(1, 1), r(0, 1), r(3, 1)], 1.0, 1.0, &opts())
            .unwrap();
        assert_eq!(s.level_values(), vec![0.0, 1.0, 3.0]);
        // basis vectors follow the sort: level 0 is e_1
        assert!((s.levels[0].vectors[0][1].re - 1.0).abs() < 1e-15);
        assert!((s.levels[1].vectors[0][0].re - 1.0).abs() < 1e-15);

        // duplicates merge into a degenerate level
        let s = Spectrum::from_rational_diagonal(&[r(0, 1), r(0, 1), r(1, 1)], 1.0, 1.0, &opts())
            .unwrap();
        assert_eq!(s.levels.len(), 2);
        assert_eq!(s.levels[0].vectors.len(), 2);
    }

    #[test]
    fn scale_covariance_is_exact_for_rational_input() {
        let entries = [r(0, 1), r(1, 2), r(5, 3)];
        let a = Spectrum::from_rational_diagonal(&entries, 1.0, 1.0, &opts()).unwrap();
        let b = Spectrum::from_rational_diagonal(&entries, 2.5, 1.0, &opts()).unwrap();
        let ra = a.rational.unwrap();
        let rb = b.rational.unwrap();
        assert_eq!(ra.ratios, rb.ratios);
        assert_eq!(rb.unit, 2.5 * ra.unit);
    }

    #[test]
    fn energy_moments_match_hand_values() {
        let s = Spectrum::from_rational_diagonal(&[r(0, 1), r(1, 1), r(3, 1)], 1.0, 1.0, &opts())
            .unwrap();
        let w = (1.0f64 / 3.0).sqrt();
        let uniform = vec![c(w, 0.0), c(w, 0.0), c(w, 0.0)];
        let mean = s.expectation_energy(&uniform).unwrap();
        assert!((mean - 4.0 / 3.0).abs() < 1e-12);
        let dh = s.energy_uncertainty(&uniform).unwrap();
        assert!((dh - (14.0f64).sqrt() / 3.0).abs() < 1e-12);

        let s01 =
            Spectrum::from_rational_diagonal(&[r(0, 1), r(1, 1)], 1.0, 1.0, &opts()).unwrap();
        let eq = vec![
            c(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            c(std::f64::consts::FRAC_1_SQRT_2, 0.0),
        ];
        assert!((s01.expectation_energy(&eq).unwrap() - 0.5).abs() < 1e-12);
        assert!((s01.energy_uncertainty(&eq).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn uncertainty_is_shift_invariant() {
        let w = (1.0f64 / 3.0).sqrt();
        let uniform = vec![c(w, 0.0), c(w, 0.0), c(w, 0.0)];
        let a = Spectrum::from_rational_diagonal(&[r(0, 1), r(1, 1), r(3, 1)], 1.0, 1.0, &opts())
            .unwrap();
        let b = Spectrum::from_rational_diagonal(&[r(5, 1), r(6, 1), r(8, 1)], 1.0, 1.0, &opts())
            .unwrap();
        let da = a.energy_uncertainty(&uniform).unwrap();
        let db = b.energy_uncertainty(&uniform).unwrap();
        assert!((da - db).abs() < 1e-12);
    }

    #[test]
    fn degenerate_level_weight_is_the_projection_norm() {
        let s = Spectrum::from_rational_diagonal(&[r(0, 1), r(0, 1), r(1, 1)], 1.0, 1.0, &opts())
            .unwrap();
        let state = vec![c(0.6, 0.0), c(0.0, 0.8), c(0.0, 0.0)];
        let w = s.level_weights(&state).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-12);
        assert!(w[1].abs() < 1e-12);
    }

    #[test]
    fn matrix_roundtrip_through_spectrum() {
        let m = CMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(0.0, -0.5)],
            vec![c(0.0, 0.5), c(-1.0, 0.0)],
        ])
        .unwrap();
        let h = HermitianMatrix::new(m.clone(), 1e-10).unwrap();
        let s = Spectrum::from_dense(&h, 1.0, &opts()).unwrap();
        assert!(s.to_matrix().max_entry_distance(&m) < 1e-12);
        // components reconstruct the state
        let state = crate::linalg::normalized(&[c(0.3, 0.1), c(-0.2, 0.9)]).unwrap();
        let comps = s.level_components(&state).unwrap();
        let mut sum = vec![c(0.0, 0.0); 2];
        for comp in &comps {
            for (a, b) in sum.iter_mut().zip(comp) {
                *a += b;
            }
        }
        assert!(distance(&sum, &state) < 1e-12);
    }

    #[test]
    fn dimension_cap_is_enforced() {
        let entries: Vec<Rational> = (0..65).map(|k| r(k, 1)).collect();
        match Spectrum::from_rational_diagonal(&entries, 1.0, 1.0, &opts()) {
            Err(Error::DimensionTooLarge(65, 64)) => {}
            other => panic!("expected DimensionTooLarge, got {other:?}"),
        }
    }
}
