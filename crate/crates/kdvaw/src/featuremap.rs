//! Unified handle over the two subspace feature constructions.

use crate::error::Result;
use crate::features::ExplicitFeatureMap;
use crate::kernels::Kernel;
use crate::sections::{section_feature_eval, SectionBasis};

/// A finite-dimensional feature map `x ↦ Ψ(x) ∈ ℝ^m` backed either by an
/// explicit truncated expansion or by a kernel-section basis.
#[derive(Clone, Debug)]
pub enum FeatureMap {
    Explicit(ExplicitFeatureMap),
    Sections { basis: SectionBasis, kernel: Kernel },
}

impl FeatureMap {
    pub fn dim(&self) -> usize {
        match self {
            FeatureMap::Explicit(map) => map.dim(),
            FeatureMap::Sections { basis, .. } => basis.dim(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            FeatureMap::Explicit(map) => map.eval(x),
            FeatureMap::Sections { basis, kernel } => {
                Ok(section_feature_eval(basis, kernel, x))
            }
        }
    }
}
