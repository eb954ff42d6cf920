//! Piecewise-constant comparator sequences with exactly controlled norm
//! and path length.
//!
//! A comparator is a sequence f_1, ..., f_T of functions, constant on K
//! equal segments of the horizon, with equal-size jumps between segments.
//! Two representations are supported: coefficient vectors in a declared
//! orthonormal feature basis (where the function norm is the plain
//! Euclidean norm of the coefficients), and combinations of kernel
//! sections anchored at fixed points (where norms go through the Gram
//! matrix).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::featuremap::FeatureMap;
use crate::kernels::Kernel;
use crate::linalg::{self, SymMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparatorKind {
    /// coefficients in the forecaster's own orthonormal feature basis
    Coefficients,
    /// weights on kernel sections anchored at sampled domain points
    KernelCombination,
}

#[derive(Clone, Debug)]
enum Repr {
    Coefficients {
        per_segment: Vec<Vec<f64>>,
    },
    KernelCombination {
        anchors: Vec<Vec<f64>>,
        per_segment_weights: Vec<Vec<f64>>,
        gram: SymMatrix,
    },
}

/// Piecewise-constant comparator over a fixed horizon.
#[derive(Clone, Debug)]
pub struct ComparatorSequence {
    repr: Repr,
    pub horizon: u64,
    pub segments: usize,
    /// rounds at which a new segment starts (strictly inside 2..=T)
    pub change_points: Vec<u64>,
    /// exact sup_t of the function norm
    pub r_f: f64,
    /// exact Σ_t ‖f_{t+1} - f_t‖
    pub path_length: f64,
}

fn unit_sphere_direction(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = linalg::norm2(&v);
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Direction with unit norm in the `√(aᵀ G a)` metric.
fn gram_sphere_direction(rng: &mut ChaCha8Rng, gram: &SymMatrix) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..gram.dim()).map(|_| rng.sample(StandardNormal)).collect();
        let n2 = gram.quadratic_form(&v);
        if n2 > 1e-12 {
            let n = n2.sqrt();
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn check_shape(horizon: u64, segments: usize, path_length: f64) -> Result<f64> {
    if segments < 1 {
        return Err(Error::ConfigError("comparator needs at least one segment".into()));
    }
    if horizon < segments as u64 {
        return Err(Error::ConfigError(format!(
            "horizon {horizon} too short for {segments} nonempty segments"
        )));
    }
    if path_length < 0.0 || !path_length.is_finite() {
        return Err(Error::ConfigError(format!(
            "path length must be a finite nonnegative value, got {path_length}"
        )));
    }
    if segments == 1 && path_length > 0.0 {
        return Err(Error::ConfigError(
            "a single-segment (static) comparator has zero path length".into(),
        ));
    }
    Ok(if segments > 1 {
        path_length / (segments as f64 - 1.0)
    } else {
        0.0
    })
}

fn change_points(horizon: u64, segments: usize) -> Vec<u64> {
    let mut pts = Vec::new();
    let mut prev_seg = 0;
    for t in 2..=horizon {
        let seg = segment_index(t, horizon, segments);
        if seg != prev_seg {
            pts.push(t);
            prev_seg = seg;
        }
    }
    pts
}

pub fn segment_index(t: u64, horizon: u64, segments: usize) -> usize {
    debug_assert!(t >= 1 && t <= horizon);
    (((t - 1) as u128 * segments as u128) / horizon as u128) as usize
}

impl ComparatorSequence {
    /// K equal segments; first segment drawn uniformly on the sphere of
    /// radius `base_norm`, then K-1 equal jumps in fresh uniform directions.
    pub fn piecewise_coefficients(
        dim: usize,
        horizon: u64,
        segments: usize,
        path_length: f64,
        base_norm: f64,
        seed: u64,
    ) -> Result<Self> {
        let step = check_shape(horizon, segments, path_length)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut current: Vec<f64> = unit_sphere_direction(&mut rng, dim)
            .into_iter()
            .map(|x| x * base_norm)
            .collect();
        let mut per_segment = vec![current.clone()];
        for _ in 1..segments {
            let dir = unit_sphere_direction(&mut rng, dim);
            for (c, d) in current.iter_mut().zip(&dir) {
                *c += step * d;
            }
            per_segment.push(current.clone());
        }
        let r_f = per_segment
            .iter()
            .map(|c| linalg::norm2(c))
            .fold(0.0, f64::max);
        Ok(ComparatorSequence {
            repr: Repr::Coefficients { per_segment },
            horizon,
            segments,
            change_points: change_points(horizon, segments),
            r_f,
            path_length: step * (segments as f64 - 1.0),
        })
    }

    /// Same construction in the span of kernel sections at fixed anchors.
    pub fn piecewise_kernel_combination(
        kernel: &Kernel,
        anchors: Vec<Vec<f64>>,
        horizon: u64,
        segments: usize,
        path_length: f64,
        base_norm: f64,
        seed: u64,
    ) -> Result<Self> {
        if anchors.is_empty() {
            return Err(Error::ConfigError("kernel comparator needs anchor points".into()));
        }
        let step = check_shape(horizon, segments, path_length)?;
        let gram = SymMatrix::from_fn(anchors.len(), |i, j| kernel.eval(&anchors[i], &anchors[j]));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut current: Vec<f64> = gram_sphere_direction(&mut rng, &gram)
            .into_iter()
            .map(|x| x * base_norm)
            .collect();
        let mut per_segment_weights = vec![current.clone()];
        for _ in 1..segments {
            let dir = gram_sphere_direction(&mut rng, &gram);
            for (c, d) in current.iter_mut().zip(&dir) {
                *c += step * d;
            }
            per_segment_weights.push(current.clone());
        }
        let r_f = per_segment_weights
            .iter()
            .map(|a| gram.quadratic_form(a).max(0.0).sqrt())
            .fold(0.0, f64::max);
        Ok(ComparatorSequence {
            repr: Repr::KernelCombination {
                anchors,
                per_segment_weights,
                gram,
            },
            horizon,
            segments,
            change_points: change_points(horizon, segments),
            r_f,
            path_length: step * (segments as f64 - 1.0),
        })
    }

    pub fn segment_of(&self, t: u64) -> usize {
        segment_index(t, self.horizon, self.segments)
    }

    /// f_t(x). Coefficient comparators evaluate through the feature map
    /// they were declared in; kernel combinations through the kernel.
    pub fn value(
        &self,
        t: u64,
        x: &[f64],
        map: Option<&FeatureMap>,
        kernel: &Kernel,
    ) -> Result<f64> {
        let seg = self.segment_of(t);
        match &self.repr {
            Repr::Coefficients { per_segment } => {
                let map = map.ok_or_else(|| {
                    Error::RepresentationError(
                        "coefficient comparator needs the declared feature map".into(),
                    )
                })?;
                let z = map.eval(x)?;
                Ok(linalg::dot(&per_segment[seg], &z))
            }
            Repr::KernelCombination {
                anchors,
                per_segment_weights,
                ..
            } => Ok(per_segment_weights[seg]
                .iter()
                .zip(anchors)
                .map(|(w, v)| w * kernel.eval(x, v))
                .sum()),
        }
    }

    /// Per-segment coordinates of the comparator (for coefficient
    /// comparators) or of its orthogonal projection onto the subspace (for
    /// kernel combinations, via `u = Σ_i a_i Ψ(anchor_i)`).
    pub fn coordinates_in(&self, map: &FeatureMap) -> Result<Vec<Vec<f64>>> {
        match &self.repr {
            Repr::Coefficients { per_segment } => {
                if per_segment[0].len() != map.dim() {
                    return Err(Error::RepresentationError(format!(
                        "comparator declared in dimension {}, forecaster runs in {}",
                        per_segment[0].len(),
                        map.dim()
                    )));
                }
                Ok(per_segment.clone())
            }
            Repr::KernelCombination {
                anchors,
                per_segment_weights,
                ..
            } => {
                let anchor_feats: Vec<Vec<f64>> = anchors
                    .iter()
                    .map(|v| map.eval(v))
                    .collect::<Result<_>>()?;
                Ok(per_segment_weights
                    .iter()
                    .map(|w| {
                        let mut u = vec![0.0; map.dim()];
                        for (wi, feats) in w.iter().zip(&anchor_feats) {
                            for (uj, fj) in u.iter_mut().zip(feats) {
                                *uj += wi * fj;
                            }
                        }
                        u
                    })
                    .collect())
            }
        }
    }

    /// Round-indexed coordinate sequence u_1, ..., u_T in the given map.
    pub fn coordinate_path(&self, map: &FeatureMap) -> Result<Vec<Vec<f64>>> {
        let per_segment = self.coordinates_in(map)?;
        Ok((1..=self.horizon)
            .map(|t| per_segment[self.segment_of(t)].clone())
            .collect())
    }

    pub fn is_kernel_combination(&self) -> bool {
        matches!(self.repr, Repr::KernelCombination { .. })
    }

    /// Exact function norm of each segment, from the representation.
    pub fn segment_norms(&self) -> Vec<f64> {
        match &self.repr {
            Repr::Coefficients { per_segment } => {
                per_segment.iter().map(|c| linalg::norm2(c)).collect()
            }
            Repr::KernelCombination {
                per_segment_weights,
                gram,
                ..
            } => per_segment_weights
                .iter()
                .map(|a| gram.quadratic_form(a).max(0.0).sqrt())
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::ExplicitFeatureMap;
    use crate::kernels::{Domain, KernelSpec};

    fn gaussian() -> Kernel {
        Kernel::new(KernelSpec::Gaussian { sigma: 1.0 }).unwrap()
    }

    #[test]
    fn static_comparator_has_zero_path() {
        let c = ComparatorSequence::piecewise_coefficients(3, 50, 1, 0.0, 1.0, 7).unwrap();
        assert_eq!(c.path_length, 0.0);
        assert!(c.change_points.is_empty());
        assert!((c.r_f - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_jump_at_midpoint() {
        let c = ComparatorSequence::piecewise_coefficients(2, 10, 2, 0.5, 1.0, 1).unwrap();
        assert!((c.path_length - 0.5).abs() < 1e-15);
        assert_eq!(c.change_points, vec![6]);
        assert_eq!(c.segment_of(5), 0);
        assert_eq!(c.segment_of(6), 1);
    }

    #[test]
    fn four_equal_jumps_sum_to_declared_path() {
        let c = ComparatorSequence::piecewise_coefficients(2, 100, 5, 1.0, 1.0, 3).unwrap();
        assert!((c.path_length - 1.0).abs() < 1e-15);
        assert_eq!(c.change_points.len(), 4);
    }

    #[test]
    fn kernel_combination_path_length_through_gram() {
        let k = gaussian();
        let domain = Domain::new(1, 1.0).unwrap();
        let anchors = domain.sample_many(5, 2);
        let c = ComparatorSequence::piecewise_kernel_combination(
            &k, anchors, 60, 4, 0.9, 1.0, 11,
        )
        .unwrap();
        assert!((c.path_length - 0.9).abs() < 1e-12);
        assert_eq!(c.change_points.len(), 3);
        assert!(c.r_f >= 1.0 - 1e-9);
        // the declared sup norm is exactly the largest segment norm
        let norms = c.segment_norms();
        assert_eq!(norms.len(), 4);
        assert!((norms[0] - 1.0).abs() < 1e-12, "first segment sits on the sphere");
        let max = norms.iter().cloned().fold(0.0f64, f64::max);
        assert!((max - c.r_f).abs() < 1e-12);
    }

    #[test]
    fn projection_coordinates_reproduce_polynomial_comparator_exactly() {
        // for a kernel whose space the map spans exactly, the projected
        // coordinates must evaluate to the same function values
        let spec = KernelSpec::Polynomial { q: 2, sigma: 1.0 };
        let kernel = Kernel::new(spec).unwrap();
        let domain = Domain::new(1, 1.0).unwrap();
        let m_q = crate::features::layer_dimension(1, 2).unwrap();
        let map = FeatureMap::Explicit(ExplicitFeatureMap::new(&spec, &domain, m_q).unwrap());
        let anchors = domain.sample_many(3, 5);
        let c = ComparatorSequence::piecewise_kernel_combination(
            &kernel, anchors, 20, 2, 0.3, 0.8, 9,
        )
        .unwrap();
        let coords = c.coordinates_in(&map).unwrap();
        for t in [1u64, 10, 20] {
            for x in domain.sample_many(10, 40 + t) {
                let direct = c.value(t, &x, Some(&map), &kernel).unwrap();
                let via_coords =
                    linalg::dot(&coords[c.segment_of(t)], &map.eval(&x).unwrap());
                assert!(
                    (direct - via_coords).abs() < 1e-10,
                    "projection lost mass inside an exactly-spanned space"
                );
            }
        }
    }

    #[test]
    fn rejects_inconsistent_shapes() {
        assert!(ComparatorSequence::piecewise_coefficients(2, 3, 5, 1.0, 1.0, 0).is_err());
        assert!(ComparatorSequence::piecewise_coefficients(2, 10, 1, 1.0, 1.0, 0).is_err());
    }
}
