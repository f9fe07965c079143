//! JSON problem descriptions: a Hamiltonian, a state, and tolerances.
//!
//! Two Hamiltonian forms are accepted. `diagonal` gives the eigenvalues
//! as exact rational strings (`"3/2"`) times a scale, which keeps the
//! commensurability analysis exact; `dense` gives a complex Hermitian
//! matrix entry by entry as `[re, im]` pairs and goes through the
//! eigensolver and rationalization. Unknown fields are rejected so typos
//! fail loudly instead of silently falling back to defaults.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg::{self, CMatrix, CVector};
use crate::rational::Rational;
use crate::spectral::{HermitianMatrix, Spectrum, SpectrumOptions};
use crate::{defaults, Error, Result};

/// A complete problem statement, as read from a scenario file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_hbar")]
    pub hbar: f64,
    pub hamiltonian: HamiltonianSpec,
    /// State amplitudes as `[re, im]` pairs in the same basis as the
    /// Hamiltonian.
    pub state: Vec<[f64; 2]>,
    #[serde(default)]
    pub options: Options,
}

fn default_hbar() -> f64 {
    defaults::HBAR
}

/// The Hamiltonian, either spectrally or as a matrix.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum HamiltonianSpec {
    /// Exact eigenvalues `scale · r_k` with `r_k` rational strings like
    /// `"0"`, `"1/2"`, `"-7/3"`.
    Diagonal {
        eigenvalues: Vec<String>,
        #[serde(default = "default_scale")]
        scale: f64,
    },
    /// Dense Hermitian matrix; each entry is `[re, im]`.
    Dense { matrix: Vec<Vec<[f64; 2]>> },
}

fn default_scale() -> f64 {
    1.0
}

/// Numerical knobs. Every field has a sensible default, so scenario
/// files only mention what they change.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Options {
    /// Occupation threshold below which a level does not count as
    /// supported.
    pub eps_support: f64,
    pub max_denominator: u64,
    /// Residual tolerance for rationalizing gap ratios and probabilities.
    pub rat_tol: f64,
    /// Relative gap under which eigenvalues merge into one level.
    pub deg_tol: f64,
    /// Relative asymmetry allowed in a dense Hamiltonian.
    pub herm_tol: f64,
    pub samples_per_period: usize,
    /// `1 − fidelity` threshold for calling a revival a return.
    pub fidelity_tol: f64,
    /// Normalize the input state instead of rejecting it.
    pub auto_normalize: bool,
    pub max_dim: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            eps_support: defaults::EPS_SUPPORT,
            max_denominator: defaults::MAX_DENOMINATOR,
            rat_tol: defaults::RAT_TOL,
            deg_tol: defaults::DEG_TOL,
            herm_tol: defaults::HERM_TOL,
            samples_per_period: defaults::SAMPLES_PER_PERIOD,
            fidelity_tol: defaults::FIDELITY_TOL,
            auto_normalize: true,
            max_dim: defaults::MAX_DIM,
        }
    }
}

impl Options {
    pub fn spectrum_options(&self) -> SpectrumOptions {
        SpectrumOptions {
            max_denominator: self.max_denominator,
            rat_tol: self.rat_tol,
            deg_tol: self.deg_tol,
            herm_tol: self.herm_tol,
            max_dim: self.max_dim,
        }
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Scenario> {
        serde_json::from_str(text).map_err(|e| Error::Scenario(e.to_string()))
    }

    pub fn from_path(path: &std::path::Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Scenario(format!("{}: {e}", path.display())))?;
        Scenario::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Turn the description into a diagonalized spectrum and a normalized
    /// state vector.
    pub fn build(&self) -> Result<(Spectrum, CVector)> {
        let opts = self.options.spectrum_options();
        let spectrum = match &self.hamiltonian {
            HamiltonianSpec::Diagonal { eigenvalues, scale } => {
                let entries: Vec<Rational> = eigenvalues
                    .iter()
                    .map(|s| s.parse::<Rational>())
                    .collect::<Result<_>>()?;
                Spectrum::from_rational_diagonal(&entries, *scale, self.hbar, &opts)?
            }
            HamiltonianSpec::Dense { matrix } => {
                let rows: Vec<Vec<Complex64>> = matrix
                    .iter()
                    .map(|row| row.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
                    .collect();
                let m = CMatrix::from_rows(&rows)?;
                let h = HermitianMatrix::new(m, self.options.herm_tol)?;
                Spectrum::from_dense(&h, self.hbar, &opts)?
            }
        };

        let state: CVector = self
            .state
            .iter()
            .map(|&[re, im]| Complex64::new(re, im))
            .collect();
        if state.len() != spectrum.dim() {
            return Err(Error::DimensionMismatch(format!(
                "state has {} components, Hamiltonian acts on {}",
                state.len(),
                spectrum.dim()
            )));
        }
        let state = if self.options.auto_normalize {
            linalg::normalized(&state)?
        } else {
            let n = linalg::norm(&state);
            if (n - 1.0).abs() > 1e-8 {
                return Err(Error::BadNorm(n));
            }
            state
        };
        Ok((spectrum, state))
    }
}
