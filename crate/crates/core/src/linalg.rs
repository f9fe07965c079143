//! Dense complex vectors and matrices, plus a cyclic Jacobi eigensolver
//! for Hermitian input.
//!
//! Everything here is sized for desk-scale physics (dimension ≤ 64 by
//! convention, enforced by callers): storage is a plain row-major
//! `Vec<Complex64>` and the solver favors unconditional convergence and
//! exact orthonormality of eigenvectors over asymptotic speed.
//!
//! Inner products are conjugate-linear in the *first* argument:
//! `dot(a, b) = Σ conj(a_i)·b_i = ⟨a|b⟩`.

use num_complex::Complex64;

use crate::{Error, Result};

/// Column state vector. Plain `Vec` so callers can build states literally.
pub type CVector = Vec<Complex64>;

/// `⟨a|b⟩`, conjugate-linear in `a`.
pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Euclidean norm `√⟨v|v⟩`.
pub fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Rescale to unit norm. Errors on the zero vector.
pub fn normalized(v: &[Complex64]) -> Result<CVector> {
    let n = norm(v);
    if n <= 0.0 || !n.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "cannot normalize vector with norm {n}"
        )));
    }
    Ok(v.iter().map(|z| z / n).collect())
}

/// `‖a - b‖`.
pub fn distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        CMatrix {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMatrix::zeros(n);
        for k in 0..n {
            m[(k, k)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Build from nested rows; every row must have length `rows.len()`.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(CMatrix { n, data })
    }

    /// Diagonal matrix from real entries.
    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = CMatrix::zeros(diag.len());
        for (k, &d) in diag.iter().enumerate() {
            m[(k, k)] = Complex64::new(d, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Row-major flat view, for serialization.
    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    /// `self · v`.
    pub fn mul_vec(&self, v: &[Complex64]) -> Result<CVector> {
        if v.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {0}x{0} but vector has length {1}",
                self.n,
                v.len()
            )));
        }
        let out = self
            .data
            .chunks_exact(self.n)
            .map(|row| row.iter().zip(v).map(|(a, x)| a * x).sum())
            .collect();
        Ok(out)
    }

    /// Largest `|H_ij - conj(H_ji)|` over all index pairs.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in i..self.n {
                let d = (self[(i, j)] - self[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Frobenius norm.
    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `self - x·I`.
    pub fn shifted(&self, x: f64) -> CMatrix {
        let mut m = self.clone();
        for k in 0..self.n {
            m[(k, k)] -= Complex64::new(x, 0.0);
        }
        m
    }

    /// Entrywise `max |self - other|`.
    pub fn max_entry_distance(&self, other: &CMatrix) -> f64 {
        assert_eq!(self.n, other.n, "dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }
}

/// Eigendecomposition of a Hermitian matrix: ascending eigenvalues and the
/// matching orthonormal eigenvectors.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    /// `vectors[k]` is the eigenvector for `values[k]`.
    pub vectors: Vec<CVector>,
}

const MAX_SWEEPS: usize = 64;

/// Cyclic Jacobi diagonalization for Hermitian matrices.
///
/// Each rotation zeroes one off-diagonal pair with a complex plane
/// rotation; sweeping row by row drives the off-diagonal mass to zero
/// quadratically, for any Hermitian input. Eigenvector phases are fixed by
/// making the largest component of each vector real and positive, so equal
/// inputs produce identical output.
///
/// The caller is responsible for the Hermiticity of `a`; entries above the
/// diagonal win over their mirror (the solver symmetrizes internally).
pub fn eigh_jacobi(a: &CMatrix) -> Result<Eigh> {
    let n = a.dim();
    if n == 0 {
        return Err(Error::DimensionMismatch("empty matrix".into()));
    }

    // Work on the symmetrized copy so tiny input asymmetry below the
    // caller's tolerance cannot leak into the iteration.
    let mut m = CMatrix::zeros(n);
    for i in 0..n {
        m[(i, i)] = Complex64::new(a[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let avg = 0.5 * (a[(i, j)] + a[(j, i)].conj());
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
    let mut q = CMatrix::identity(n);

    let scale = m.frobenius().max(f64::MIN_POSITIVE);
    let target = 1e-14 * scale;

    let off = |m: &CMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += 2.0 * m[(i, j)].norm_sqr();
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    while off(&m) > target {
        if sweeps >= MAX_SWEEPS {
            return Err(Error::EigenNoConvergence(sweeps, off(&m)));
        }
        sweeps += 1;
        for p in 0..n {
            for qi in (p + 1)..n {
                let g = m[(p, qi)].norm();
                if g <= 1e-300 {
                    continue;
                }
                let alpha = m[(p, p)].re;
                let beta = m[(qi, qi)].re;
                let w = m[(p, qi)] / g; // unit-modulus phase of the pivot
                let theta = (alpha - beta) / (2.0 * g);
                // Smaller root of t² - 2θt - 1 = 0 for a rotation ≤ 45°.
                let t = if theta == 0.0 {
                    1.0
                } else {
                    -theta.signum() / (theta.abs() + theta.hypot(1.0))
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let wbar_s = w.conj() * s;
                let wbar_c = w.conj() * c;

                for k in 0..n {
                    if k == p || k == qi {
                        continue;
                    }
                    let akp = m[(k, p)];
                    let akq = m[(k, qi)];
                    m[(k, p)] = c * akp - wbar_s * akq;
                    m[(k, qi)] = s * akp + wbar_c * akq;
                    m[(p, k)] = m[(k, p)].conj();
                    m[(qi, k)] = m[(k, qi)].conj();
                }
                m[(p, p)] = Complex64::new(alpha - t * g, 0.0);
                m[(qi, qi)] = Complex64::new(beta + t * g, 0.0);
                m[(p, qi)] = Complex64::new(0.0, 0.0);
                m[(qi, p)] = Complex64::new(0.0, 0.0);

                for k in 0..n {
                    let qkp = q[(k, p)];
                    let qkq = q[(k, qi)];
                    q[(k, p)] = c * qkp - wbar_s * qkq;
                    q[(k, qi)] = s * qkp + wbar_c * qkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.partial_cmp(&m[(j, j)].re).unwrap());

    let values: Vec<f64> = order.iter().map(|&k| m[(k, k)].re).collect();
    let vectors: Vec<CVector> = order
        .iter()
        .map(|&k| {
            let col: CVector = (0..n).map(|row| q[(row, k)]).collect();
            canonical_phase(col)
        })
        .collect();

    Ok(Eigh { values, vectors })
}

/// Multiply by a global phase so the largest component (lowest index on
/// ties) is real and positive.
fn canonical_phase(mut v: CVector) -> CVector {
    let mut imax = 0;
    let mut best = -1.0;
    for (k, z) in v.iter().enumerate() {
        let a = z.norm();
        if a > best + 1e-15 {
            best = a;
            imax = k;
        }
    }
    let z = v[imax];
    if z.norm() > 0.0 {
        let phase = z.conj() / z.norm();
        for x in v.iter_mut() {
            *x *= phase;
        }
        v[imax] = Complex64::new(v[imax].re, 0.0); // scrub the residual imag
    }
    v
}

/// Modified Gram-Schmidt on a block of (already nearly orthonormal)
/// vectors; used to clean up degenerate eigenspaces after merging.
pub fn orthonormalize(block: &mut [CVector]) {
    for i in 0..block.len() {
        for j in 0..i {
            let (head, tail) = block.split_at_mut(i);
            let coeff = dot(&head[j], &tail[0]);
            for (t, h) in tail[0].iter_mut().zip(&head[j]) {
                *t -= coeff * h;
            }
        }
        let n = norm(&block[i]);
        if n > 0.0 {
            for x in block[i].iter_mut() {
                *x /= n;
            }
        }
    }
}
