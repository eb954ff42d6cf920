//! Synthetic nonstationary environments and a minimal CSV dataset path.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::featuremap::FeatureMap;
use crate::harness::comparator::{ComparatorKind, ComparatorSequence};
use crate::kernels::{Domain, Kernel};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseConfig {
    None,
    Uniform { amplitude: f64 },
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig::Uniform { amplitude: 0.1 }
    }
}

fn default_base_norm() -> f64 {
    1.0
}

fn default_anchors() -> usize {
    8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparatorConfig {
    pub representation: ComparatorKind,
    pub segments: usize,
    pub path_length: f64,
    #[serde(default = "default_base_norm")]
    pub base_norm: f64,
    /// anchor count for kernel combinations
    #[serde(default = "default_anchors")]
    pub anchors: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentConfig {
    pub t: u64,
    pub domain: Domain,
    pub comparator: ComparatorConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    /// labels are clipped to [-Y, Y]; defaults to κ·R_f + 0.5
    #[serde(default)]
    pub label_clip: Option<f64>,
    pub seed: u64,
    /// optional CSV dataset (columns: features..., label); overrides the
    /// synthetic stream and pins the comparator to the zero function
    #[serde(default)]
    pub dataset: Option<String>,
}

/// A fully materialized run: inputs, labels, and the comparator's values
/// along the stream.
#[derive(Clone, Debug)]
pub struct GeneratedEnvironment {
    pub xs: Vec<Vec<f64>>,
    pub ys: Vec<f64>,
    /// f_t(x_t) per round
    pub comparator_values: Vec<f64>,
    pub comparator: ComparatorSequence,
    pub y_clip: f64,
    pub kappa: f64,
}

impl GeneratedEnvironment {
    pub fn horizon(&self) -> u64 {
        self.ys.len() as u64
    }
}

/// Builds the comparator, samples the input stream, and produces labels
/// `y_t = clip(f_t(x_t) + noise_t, -Y, Y)`. Deterministic given the seed.
pub fn generate_environment(
    cfg: &EnvironmentConfig,
    kernel: &Kernel,
    map: Option<&FeatureMap>,
) -> Result<GeneratedEnvironment> {
    if let Some(path) = &cfg.dataset {
        return load_dataset(cfg, kernel, Path::new(path));
    }
    if cfg.t < 2 {
        return Err(Error::ConfigError("environment horizon must be at least 2".into()));
    }
    let domain = Domain::new(cfg.domain.dim, cfg.domain.radius)?;
    let comparator = match cfg.comparator.representation {
        ComparatorKind::Coefficients => {
            let map = map.ok_or_else(|| {
                Error::ConfigError(
                    "coefficient comparators need a single declared feature map; \
                     use a kernel_combination comparator for dyadic runs"
                        .into(),
                )
            })?;
            ComparatorSequence::piecewise_coefficients(
                map.dim(),
                cfg.t,
                cfg.comparator.segments,
                cfg.comparator.path_length,
                cfg.comparator.base_norm,
                cfg.seed.wrapping_add(1),
            )?
        }
        ComparatorKind::KernelCombination => {
            if cfg.comparator.anchors < 1 {
                return Err(Error::ConfigError("kernel comparator needs anchors >= 1".into()));
            }
            let anchors = domain.sample_many(cfg.comparator.anchors, cfg.seed.wrapping_add(2));
            ComparatorSequence::piecewise_kernel_combination(
                kernel,
                anchors,
                cfg.t,
                cfg.comparator.segments,
                cfg.comparator.path_length,
                cfg.comparator.base_norm,
                cfg.seed.wrapping_add(1),
            )?
        }
    };

    let kappa = kernel.kappa(&domain);
    let y_clip = cfg
        .label_clip
        .unwrap_or(kappa * comparator.r_f + 0.5);
    if !y_clip.is_finite() || y_clip <= 0.0 {
        return Err(Error::ConfigError(format!(
            "label clip must be positive, got {y_clip}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut xs = Vec::with_capacity(cfg.t as usize);
    let mut ys = Vec::with_capacity(cfg.t as usize);
    let mut comparator_values = Vec::with_capacity(cfg.t as usize);
    for t in 1..=cfg.t {
        let x = domain.sample(&mut rng);
        let f = comparator.value(t, &x, map, kernel)?;
        let noise = match cfg.noise {
            NoiseConfig::None => 0.0,
            NoiseConfig::Uniform { amplitude } => rng.gen_range(-amplitude..=amplitude),
        };
        xs.push(x);
        ys.push((f + noise).clamp(-y_clip, y_clip));
        comparator_values.push(f);
    }
    Ok(GeneratedEnvironment {
        xs,
        ys,
        comparator_values,
        comparator,
        y_clip,
        kappa,
    })
}

/// Parses `features..., label` rows; an unparsable first line is treated
/// as a header and skipped.
fn parse_dataset(text: &str, dim: usize) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 2 {
            return Err(Error::ConfigError(format!(
                "dataset line {}: need at least one feature column and a label",
                lineno + 1
            )));
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            fields.iter().map(|f| f.trim().parse::<f64>()).collect();
        let row = match parsed {
            Ok(row) => row,
            Err(_) if lineno == 0 => continue,
            Err(e) => {
                return Err(Error::ConfigError(format!(
                    "dataset line {}: {e}",
                    lineno + 1
                )))
            }
        };
        let (label, feats) = row.split_last().unwrap();
        if feats.len() != dim {
            return Err(Error::ConfigError(format!(
                "dataset line {}: {} feature columns, domain declares {}",
                lineno + 1,
                feats.len(),
                dim
            )));
        }
        xs.push(feats.to_vec());
        ys.push(*label);
    }
    if (xs.len() as u64) < 2 {
        return Err(Error::ConfigError("dataset needs at least two rows".into()));
    }
    Ok((xs, ys))
}

/// Number of rounds the environment will actually produce: the dataset
/// length when one is configured, the declared `t` otherwise. Forecaster
/// construction (grids, dyadic dimensions, auto feature dimensions) must
/// size itself by this value.
pub fn effective_horizon(cfg: &EnvironmentConfig) -> Result<u64> {
    match &cfg.dataset {
        None => Ok(cfg.t),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::ConfigError(format!("dataset {path}: {e}")))?;
            let (xs, _) = parse_dataset(&text, cfg.domain.dim)?;
            Ok(xs.len() as u64)
        }
    }
}

/// CSV ingestion: every column but the last is a feature, the last is the
/// label. The comparator is pinned to the zero function, so the reported
/// "regret" is cumulative loss relative to always predicting zero labels'
/// losses; there is no ground-truth drift to compare against.
fn load_dataset(
    cfg: &EnvironmentConfig,
    kernel: &Kernel,
    path: &Path,
) -> Result<GeneratedEnvironment> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::ConfigError(format!("dataset {}: {e}", path.display())))?;
    let (xs, ys) = parse_dataset(&text, cfg.domain.dim)?;
    let horizon = xs.len() as u64;
    let kappa = kernel.kappa(&cfg.domain);
    let y_abs_max = ys.iter().fold(0.0f64, |m, y| m.max(y.abs()));
    let y_clip = cfg.label_clip.unwrap_or(y_abs_max.max(1e-9));
    let ys: Vec<f64> = ys.into_iter().map(|y| y.clamp(-y_clip, y_clip)).collect();
    // zero comparator: a static coefficient sequence of zero norm
    let comparator =
        ComparatorSequence::piecewise_coefficients(1, horizon, 1, 0.0, 0.0, 0)?;
    let comparator_values = vec![0.0; xs.len()];
    Ok(GeneratedEnvironment {
        xs,
        ys,
        comparator_values,
        comparator,
        y_clip,
        kappa,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::ExplicitFeatureMap;
    use crate::kernels::KernelSpec;

    fn setup(map_dim: usize) -> (Kernel, FeatureMap) {
        let spec = KernelSpec::Gaussian { sigma: 1.0 };
        let kernel = Kernel::new(spec).unwrap();
        let domain = Domain::new(1, 1.0).unwrap();
        let map = FeatureMap::Explicit(
            ExplicitFeatureMap::new(&spec, &domain, map_dim).unwrap(),
        );
        (kernel, map)
    }

    fn base_config() -> EnvironmentConfig {
        EnvironmentConfig {
            t: 40,
            domain: Domain::new(1, 1.0).unwrap(),
            comparator: ComparatorConfig {
                representation: ComparatorKind::Coefficients,
                segments: 1,
                path_length: 0.0,
                base_norm: 1.0,
                anchors: 8,
            },
            noise: NoiseConfig::None,
            label_clip: None,
            seed: 5,
            dataset: None,
        }
    }

    #[test]
    fn static_noiseless_labels_equal_comparator() {
        let (kernel, map) = setup(4);
        let env = generate_environment(&base_config(), &kernel, Some(&map)).unwrap();
        assert_eq!(env.comparator.path_length, 0.0);
        for (y, f) in env.ys.iter().zip(&env.comparator_values) {
            assert!((y - f).abs() < 1e-15, "no noise, no clipping expected");
        }
    }

    #[test]
    fn jump_sizes_add_up() {
        let (kernel, map) = setup(3);
        let mut cfg = base_config();
        cfg.comparator.segments = 5;
        cfg.comparator.path_length = 1.0;
        let env = generate_environment(&cfg, &kernel, Some(&map)).unwrap();
        assert!((env.comparator.path_length - 1.0).abs() < 1e-15);
        assert_eq!(env.comparator.change_points.len(), 4);
    }

    #[test]
    fn labels_respect_clip() {
        let (kernel, map) = setup(3);
        let mut cfg = base_config();
        cfg.label_clip = Some(0.05);
        cfg.noise = NoiseConfig::Uniform { amplitude: 0.5 };
        let env = generate_environment(&cfg, &kernel, Some(&map)).unwrap();
        assert!(env.ys.iter().all(|y| y.abs() <= 0.05 + 1e-15));
    }

    #[test]
    fn deterministic_given_seed() {
        let (kernel, map) = setup(4);
        let mut cfg = base_config();
        cfg.noise = NoiseConfig::Uniform { amplitude: 0.1 };
        let a = generate_environment(&cfg, &kernel, Some(&map)).unwrap();
        let b = generate_environment(&cfg, &kernel, Some(&map)).unwrap();
        assert_eq!(a.ys, b.ys);
        assert_eq!(a.xs, b.xs);
    }

    #[test]
    fn dataset_rows_become_stream() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        std::fs::write(&path, "x,label\n0.1,1.0\n-0.2,0.5\n0.3,-0.25\n").unwrap();
        let (kernel, _) = setup(2);
        let mut cfg = base_config();
        cfg.dataset = Some(path.display().to_string());
        let env = generate_environment(&cfg, &kernel, None).unwrap();
        assert_eq!(env.horizon(), 3);
        assert_eq!(env.ys, vec![1.0, 0.5, -0.25]);
        assert!(env.comparator_values.iter().all(|&v| v == 0.0));
    }
}
