//! Subspaces spanned by kernel sections `k(·, z)`.
//!
//! Points are picked by greedy farthest-point sampling in the kernel
//! pseudometric over a seeded candidate pool; the orthonormal basis of the
//! span comes from the Gram matrix eigendecomposition; the power function
//! measures how far `k(·, x)` sits from the subspace.

use std::io::Write;

use crate::error::{Error, Result};
use crate::kernels::{Domain, Kernel};
use crate::linalg::{self, sym_eig, EigDecomposition, SymMatrix};

/// What a greedy net construction achieved on its candidate pool.
#[derive(Clone, Copy, Debug)]
pub struct NetReport {
    /// max over the pool of the min pseudometric distance to the net
    pub covering_radius: f64,
    pub candidate_pool_size: usize,
}

/// Candidate pool for net construction, sampled from the domain.
pub fn sample_pool(domain: &Domain, pool_size: usize, seed: u64) -> Vec<Vec<f64>> {
    domain.sample_many(pool_size, seed)
}

/// Greedy farthest-point selection of `m` pool indices in the kernel
/// pseudometric. The first point is the pool medoid (least summed distance
/// to the rest); each following point maximizes its min distance to the
/// chosen set, ties broken by lower index. Returns the selected indices in
/// selection order, so prefixes are themselves greedy nets.
pub fn fps_from_pool(pool: &[Vec<f64>], kernel: &Kernel, m: usize) -> Result<(Vec<usize>, NetReport)> {
    if m < 1 || pool.is_empty() {
        return Err(Error::InvalidParam(
            "farthest-point sampling needs m >= 1 and a nonempty pool".into(),
        ));
    }
    if pool.len() < m {
        return Err(Error::InvalidParam(format!(
            "pool of {} candidates cannot yield a net of {m} points",
            pool.len()
        )));
    }
    let n = pool.len();
    let mut first = 0usize;
    let mut best_sum = f64::INFINITY;
    for i in 0..n {
        let mut sum = 0.0;
        for j in 0..n {
            sum += kernel.pseudometric(&pool[i], &pool[j])?;
        }
        if sum < best_sum {
            best_sum = sum;
            first = i;
        }
    }

    let mut selected = Vec::with_capacity(m);
    selected.push(first);
    // min distance from each pool point to the selected set
    let mut min_dist: Vec<f64> = (0..n)
        .map(|i| kernel.pseudometric(&pool[i], &pool[first]).unwrap())
        .collect();
    while selected.len() < m {
        let mut next = 0usize;
        let mut best = -1.0;
        for (i, &d) in min_dist.iter().enumerate() {
            if d > best {
                best = d;
                next = i;
            }
        }
        selected.push(next);
        for i in 0..n {
            let d = kernel.pseudometric(&pool[i], &pool[next])?;
            if d < min_dist[i] {
                min_dist[i] = d;
            }
        }
    }
    let covering_radius = min_dist.iter().cloned().fold(0.0, f64::max);
    Ok((
        selected,
        NetReport {
            covering_radius,
            candidate_pool_size: n,
        },
    ))
}

/// Samples a pool from the domain and runs greedy farthest-point selection.
pub fn farthest_point_net(
    domain: &Domain,
    kernel: &Kernel,
    m: usize,
    pool_size: usize,
    seed: u64,
) -> Result<(Vec<Vec<f64>>, NetReport)> {
    let pool = sample_pool(domain, pool_size, seed);
    let (idx, report) = fps_from_pool(&pool, kernel, m)?;
    Ok((idx.into_iter().map(|i| pool[i].clone()).collect(), report))
}

/// Orthonormal basis of `span{k(·, z_i)}` from the Gram eigendecomposition.
///
/// With `G = U Λ Uᵀ`, the functions `g_j(x) = Σ_i (U_{ij}/√λ_j) k(x, z_i)`
/// are orthonormal for the eigenvalues above the rank tolerance; directions
/// at or below tolerance are dropped as numerically null.
#[derive(Clone, Debug)]
pub struct SectionBasis {
    pub points: Vec<Vec<f64>>,
    pub gram: SymMatrix,
    pub eig: EigDecomposition,
    /// kept directions n_m <= m
    pub rank: usize,
    /// `coeffs[j][i] = U_{ij}/√λ_j` for each kept j
    pub coeffs: Vec<Vec<f64>>,
}

pub const DEFAULT_RANK_TOL_REL: f64 = 1e-10;

pub fn build_section_basis(
    points: &[Vec<f64>],
    kernel: &Kernel,
    rank_tol_rel: f64,
) -> Result<SectionBasis> {
    if points.is_empty() {
        return Err(Error::InvalidParam("section basis needs at least one point".into()));
    }
    let m = points.len();
    let gram = SymMatrix::from_fn(m, |i, j| kernel.eval(&points[i], &points[j]));
    let eig = sym_eig(&gram)?;
    let lambda_max = eig.eigenvalues[0];
    let rank_tol = rank_tol_rel * lambda_max;
    let rank = eig
        .eigenvalues
        .iter()
        .take_while(|&&l| l > rank_tol)
        .count();
    if rank == 0 {
        return Err(Error::EmptyBasis);
    }
    let coeffs = (0..rank)
        .map(|j| {
            let scale = 1.0 / eig.eigenvalues[j].sqrt();
            eig.eigenvectors[j].iter().map(|&u| u * scale).collect()
        })
        .collect();
    Ok(SectionBasis {
        points: points.to_vec(),
        gram,
        eig,
        rank,
        coeffs,
    })
}

impl SectionBasis {
    pub fn dim(&self) -> usize {
        self.rank
    }

    /// `⟨g_i, g_j⟩` computed as `coeffs_iᵀ G coeffs_j`; identity when sound.
    pub fn basis_gram(&self) -> SymMatrix {
        SymMatrix::from_fn(self.rank, |i, j| {
            let gc = self.gram.matvec(&self.coeffs[j]);
            linalg::dot(&self.coeffs[i], &gc)
        })
    }
}

/// Feature vector `Ψ(x) = (g_1(x), ..., g_{n_m}(x))`.
pub fn section_feature_eval(basis: &SectionBasis, kernel: &Kernel, x: &[f64]) -> Vec<f64> {
    let kx: Vec<f64> = basis.points.iter().map(|z| kernel.eval(x, z)).collect();
    basis
        .coeffs
        .iter()
        .map(|c| linalg::dot(c, &kx))
        .collect()
}

/// Residual norm of `k(·, x)` after projection: `√(k(x,x) - ‖Ψ(x)‖²)`.
///
/// Radicands in `[-1e-10, 0)` are clamped to zero, as are tiny positive
/// radicands at the rounding scale of the subtraction (`m · 1e-13 ·
/// k(x,x)`), so that interpolation nodes report an exact zero instead of
/// the square root of accumulated rounding noise.
pub fn power_function(basis: &SectionBasis, kernel: &Kernel, x: &[f64]) -> Result<f64> {
    let feats = section_feature_eval(basis, kernel, x);
    let kxx = kernel.eval(x, x);
    let radicand = kxx - linalg::dot(&feats, &feats);
    if radicand < -1e-10 {
        return Err(Error::NegativeDiscriminant(radicand));
    }
    let noise_floor = basis.points.len() as f64 * 1e-13 * kxx.abs();
    if radicand <= noise_floor {
        return Ok(0.0);
    }
    Ok(radicand.sqrt())
}

/// Monte-Carlo maximum of the power function over explicit probes — a
/// certified lower bound on the true sup.
pub fn subspace_error_over(basis: &SectionBasis, kernel: &Kernel, probes: &[Vec<f64>]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for p in probes {
        worst = worst.max(power_function(basis, kernel, p)?);
    }
    Ok(worst)
}

/// Monte-Carlo subspace error over `probe_count` fresh domain samples.
pub fn subspace_error_estimate(
    basis: &SectionBasis,
    kernel: &Kernel,
    domain: &Domain,
    probe_count: usize,
    seed: u64,
) -> Result<f64> {
    if probe_count < 1 {
        return Err(Error::InvalidParam("probe_count must be >= 1".into()));
    }
    subspace_error_over(basis, kernel, &domain.sample_many(probe_count, seed))
}

/// Writes net points as CSV, one point per row.
pub fn write_points_csv<W: Write>(points: &[Vec<f64>], mut w: W) -> std::io::Result<()> {
    for p in points {
        let row: Vec<String> = p.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}
