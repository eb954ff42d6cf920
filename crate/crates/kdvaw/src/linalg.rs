//! Dense symmetric linear algebra on small matrices.
//!
//! Everything here targets dimensions up to a few thousand: Cholesky solves
//! for SPD systems, Sherman-Morrison rank-one inverse updates, and a cyclic
//! Jacobi eigensolver. Storage is packed lower-triangular, so symmetry holds
//! by construction rather than by convention.

use crate::error::{Error, Result};

/// Symmetric matrix with packed lower-triangular storage.
///
/// `get(i, j)` and `get(j, i)` read the same slot, so the matrix cannot
/// drift out of symmetry.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    n: usize,
    // entry (i, j) with i >= j lives at i*(i+1)/2 + j
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "symmetric matrix needs dimension >= 1");
        SymMatrix {
            n,
            data: vec![0.0; n * (n + 1) / 2],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn scaled_identity(n: usize, c: f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, c);
        }
        m
    }

    /// Builds from a callback; only the lower triangle (i >= j) is consulted.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    #[inline]
    fn idx(i: usize, j: usize) -> usize {
        debug_assert!(i >= j);
        i * (i + 1) / 2 + j
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i >= j {
            self.data[Self::idx(i, j)]
        } else {
            self.data[Self::idx(j, i)]
        }
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        if i >= j {
            self.data[Self::idx(i, j)] = v;
        } else {
            self.data[Self::idx(j, i)] = v;
        }
    }

    /// In-place `A <- c * A`.
    pub fn scale(&mut self, c: f64) {
        for v in &mut self.data {
            *v *= c;
        }
    }

    /// In-place `A <- A + c * v vᵀ`.
    pub fn add_scaled_outer(&mut self, v: &[f64], c: f64) {
        assert_eq!(v.len(), self.n);
        for i in 0..self.n {
            for j in 0..=i {
                self.data[Self::idx(i, j)] += c * v[i] * v[j];
            }
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            let mut acc = 0.0;
            for j in 0..self.n {
                acc += self.get(i, j) * x[j];
            }
            out[i] = acc;
        }
        out
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n);
        let mut acc = 0.0;
        for i in 0..self.n {
            // diagonal once, off-diagonal twice
            acc += self.get(i, i) * x[i] * x[i];
            for j in 0..i {
                acc += 2.0 * self.get(i, j) * x[i] * x[j];
            }
        }
        acc
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                let v = self.get(i, j);
                acc += v * v;
            }
        }
        acc.sqrt()
    }

    /// `max_{i,j} |(A B)_{ij} - I_{ij}|`, used to certify a maintained inverse.
    pub fn product_identity_drift(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.n, other.n);
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                let mut acc = 0.0;
                for k in 0..self.n {
                    acc += self.get(i, k) * other.get(k, j);
                }
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((acc - target).abs());
            }
        }
        worst
    }
}

/// Eigendecomposition of a symmetric matrix: `A = U diag(λ) Uᵀ`.
///
/// Eigenvalues are sorted nonincreasing; `eigenvectors[j]` is the column
/// paired with `eigenvalues[j]`.
#[derive(Clone, Debug)]
pub struct EigDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<f64>>,
}

impl EigDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Reconstructs `U diag(λ) Uᵀ` entry by entry.
    pub fn reconstruct(&self) -> SymMatrix {
        let n = self.dim();
        SymMatrix::from_fn(n, |i, j| {
            (0..n)
                .map(|k| self.eigenvalues[k] * self.eigenvectors[k][i] * self.eigenvectors[k][j])
                .sum()
        })
    }
}

// Pivots are tested against their own diagonal entry rather than a
// trace-relative floor: discounted second-moment matrices are heavily
// graded (the ridge in unexcited coordinates decays geometrically), and a
// global floor would reject genuinely positive definite systems.
const CHOLESKY_PIVOT_REL: f64 = 1e-14;

fn cholesky_factor(a: &SymMatrix) -> Result<Vec<f64>> {
    let n = a.dim();
    // lower-triangular factor, same packed layout
    let mut l = vec![0.0; n * (n + 1) / 2];
    for i in 0..n {
        for j in 0..=i {
            let mut acc = a.get(i, j);
            for k in 0..j {
                acc -= l[SymMatrix::idx(i, k)] * l[SymMatrix::idx(j, k)];
            }
            if i == j {
                if acc <= CHOLESKY_PIVOT_REL * a.get(i, i) {
                    return Err(Error::NotPositiveDefinite {
                        pivot: acc,
                        index: i,
                    });
                }
                l[SymMatrix::idx(i, i)] = acc.sqrt();
            } else {
                l[SymMatrix::idx(i, j)] = acc / l[SymMatrix::idx(j, j)];
            }
        }
    }
    Ok(l)
}

fn forward_back_substitute(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    // L y = b
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut acc = b[i];
        for k in 0..i {
            acc -= l[SymMatrix::idx(i, k)] * y[k];
        }
        y[i] = acc / l[SymMatrix::idx(i, i)];
    }
    // Lᵀ x = y
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut acc = y[i];
        for k in i + 1..n {
            acc -= l[SymMatrix::idx(k, i)] * x[k];
        }
        x[i] = acc / l[SymMatrix::idx(i, i)];
    }
    x
}

/// Solves `A x = b` for symmetric positive definite `A` via Cholesky.
pub fn solve_spd(a: &SymMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.len(),
        });
    }
    let l = cholesky_factor(a)?;
    Ok(forward_back_substitute(&l, a.dim(), b))
}

/// Full SPD inverse via one factorization and `n` substitutions.
pub fn invert_spd(a: &SymMatrix) -> Result<SymMatrix> {
    let n = a.dim();
    let l = cholesky_factor(a)?;
    let mut cols = Vec::with_capacity(n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        cols.push(forward_back_substitute(&l, n, &e));
        e[j] = 0.0;
    }
    Ok(SymMatrix::from_fn(n, |i, j| {
        0.5 * (cols[j][i] + cols[i][j])
    }))
}

/// Given `A⁻¹`, returns `(scale·A + v vᵀ)⁻¹` in O(n²).
///
/// With `B = A⁻¹ / scale`, the result is `B - (B v)(B v)ᵀ / (1 + vᵀ B v)`.
pub fn sherman_morrison_inverse_update(
    a_inv: &SymMatrix,
    v: &[f64],
    scale: f64,
) -> Result<SymMatrix> {
    let n = a_inv.dim();
    if v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: v.len(),
        });
    }
    if scale <= 0.0 {
        return Err(Error::InvalidParam(format!(
            "rank-one update scale must be positive, got {scale}"
        )));
    }
    let mut b = a_inv.clone();
    b.scale(1.0 / scale);
    let bv = b.matvec(v);
    let denom = 1.0 + v.iter().zip(&bv).map(|(a, b)| a * b).sum::<f64>();
    if denom <= 1e-14 {
        return Err(Error::DegenerateUpdate { denom });
    }
    let inv_denom = 1.0 / denom;
    let mut out = b;
    out.add_scaled_outer(&bv, -inv_denom);
    Ok(out)
}

const JACOBI_SWEEP_BUDGET: usize = 100;
const JACOBI_OFFDIAG_TOL: f64 = 1e-12;
// Jacobi converges quadratically, so two unconditional sweeps past the
// threshold push the off-diagonal mass to machine level.
const JACOBI_POLISH_SWEEPS: usize = 2;

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Converges when the off-diagonal Frobenius norm drops below
/// `1e-12 · ‖A‖_F` (plus two polishing sweeps); errors out after 100
/// sweeps.
pub fn sym_eig(a: &SymMatrix) -> Result<EigDecomposition> {
    let n = a.dim();
    // work on a full dense copy
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            m[i][j] = a.get(i, j);
        }
    }
    let mut u = vec![vec![0.0; n]; n];
    for (i, row) in u.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let norm = a.frobenius_norm();
    let tol = JACOBI_OFFDIAG_TOL * norm;

    let off_norm = |m: &Vec<Vec<f64>>| -> f64 {
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    acc += m[i][j] * m[i][j];
                }
            }
        }
        acc.sqrt()
    };

    if n > 1 {
        let mut polish = if off_norm(&m) <= tol {
            JACOBI_POLISH_SWEEPS
        } else {
            0
        };
        let mut sweeps = 0;
        while polish <= JACOBI_POLISH_SWEEPS {
            if sweeps >= JACOBI_SWEEP_BUDGET {
                return Err(Error::NoConvergence {
                    sweeps: JACOBI_SWEEP_BUDGET,
                });
            }
            for p in 0..n - 1 {
                for q in p + 1..n {
                    let apq = m[p][q];
                    if apq == 0.0 {
                        continue;
                    }
                    let app = m[p][p];
                    let aqq = m[q][q];
                    // standard stable rotation computation
                    let theta = (aqq - app) / (2.0 * apq);
                    let t = if theta >= 0.0 {
                        1.0 / (theta + (1.0 + theta * theta).sqrt())
                    } else {
                        -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let mkp = m[k][p];
                        let mkq = m[k][q];
                        m[k][p] = c * mkp - s * mkq;
                        m[k][q] = s * mkp + c * mkq;
                    }
                    for k in 0..n {
                        let mpk = m[p][k];
                        let mqk = m[q][k];
                        m[p][k] = c * mpk - s * mqk;
                        m[q][k] = s * mpk + c * mqk;
                    }
                    for k in 0..n {
                        let ukp = u[k][p];
                        let ukq = u[k][q];
                        u[k][p] = c * ukp - s * ukq;
                        u[k][q] = s * ukp + c * ukq;
                    }
                }
            }
            sweeps += 1;
            if off_norm(&m) <= tol {
                polish += 1;
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j][j].partial_cmp(&m[i][i]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&k| m[k][k]).collect();
    let eigenvectors: Vec<Vec<f64>> = order
        .iter()
        .map(|&k| (0..n).map(|i| u[i][k]).collect())
        .collect();
    Ok(EigDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
