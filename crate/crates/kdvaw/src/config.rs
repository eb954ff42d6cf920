//! Run configuration: JSON schema, canonical hashing, sweep expansion,
//! and the driver that turns a config into trace and summary files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dvaw::{DvawState, SolveMode};
use crate::ensemble::{DiscountGrid, DyadicAggregator, HintPolicy, VeDvaw};
use crate::error::{Error, Result};
use crate::featuremap::FeatureMap;
use crate::features::{self, ExplicitFeatureMap};
use crate::harness::environment::{generate_environment, EnvironmentConfig};
use crate::harness::trace::{RegretTrace, RunSummary};
use crate::harness::{run_prequential, Forecaster};
use crate::kernels::{Domain, DotProductRule, Kernel, KernelSpec};
use crate::sections;

/// Feature dimension: fixed, or derived from the horizon by the
/// fast-regime rule (exponentially decaying subspace error).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DimensionSpec {
    Fixed(usize),
    Rule(AutoDim),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoDim {
    Auto,
}

fn default_pool_factor() -> usize {
    50
}

fn default_rank_tol() -> f64 {
    sections::DEFAULT_RANK_TOL_REL
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SchemeConfig {
    /// Explicit truncated feature map of dimension `m`.
    Explicit { m: DimensionSpec },
    /// Kernel-section basis on a greedy net of `m` points.
    Sections {
        m: usize,
        #[serde(default)]
        pool_size: Option<usize>,
        #[serde(default = "default_rank_tol")]
        rank_tol_rel: f64,
    },
    /// One subspace per dyadic dimension up to the horizon.
    Dyadic {
        #[serde(default)]
        maps: Option<DyadicMapKind>,
        #[serde(default = "default_pool_factor")]
        pool_factor: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DyadicMapKind {
    Explicit,
    Sections,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForecasterKind {
    Dvaw,
    VeDvaw,
    Dyadic,
}

fn default_lambda() -> f64 {
    1.0
}

fn default_grid_base() -> f64 {
    2.0
}

fn default_kind() -> ForecasterKind {
    ForecasterKind::VeDvaw
}

fn default_mode() -> SolveMode {
    SolveMode::Direct
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForecasterConfig {
    #[serde(default = "default_kind")]
    pub kind: ForecasterKind,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_lambda")]
    pub lambda_meta: f64,
    #[serde(default = "default_grid_base")]
    pub grid_base: f64,
    #[serde(default)]
    pub hint_policy: HintPolicy,
    #[serde(default = "default_mode")]
    pub mode: SolveMode,
    /// discount for the plain forecaster (kind = dvaw); 1.0 when omitted
    #[serde(default)]
    pub gamma: Option<f64>,
}

impl Default for ForecasterConfig {
    fn default() -> Self {
        ForecasterConfig {
            kind: default_kind(),
            lambda: 1.0,
            lambda_meta: 1.0,
            grid_base: 2.0,
            hint_policy: HintPolicy::default(),
            mode: SolveMode::Direct,
            gamma: None,
        }
    }
}

fn default_write_trace() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default = "default_write_trace")]
    pub write_trace: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: None,
            write_trace: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub environment: EnvironmentConfig,
    pub kernel: KernelSpec,
    pub scheme: SchemeConfig,
    #[serde(default)]
    pub forecaster: ForecasterConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::ConfigError(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::ConfigError(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

/// Stable digest of the canonicalized config: keys sorted, whitespace
/// normalized. Sixteen hex characters of SHA-256.
pub fn config_hash(value: &serde_json::Value) -> String {
    // serde_json maps are BTreeMaps, so re-serialization sorts keys
    let canonical = serde_json::to_string(value).expect("json value serializes");
    let digest = Sha256::digest(canonical.as_bytes());
    hex::encode(&digest[..8])
}

pub fn config_hash_of(cfg: &RunConfig) -> String {
    config_hash(&serde_json::to_value(cfg).expect("config serializes"))
}

/// Expands a sweep document into the cross product of its list-valued
/// scalar leaves (arrays of numbers/strings/booleans become axes; arrays
/// of objects are rejected).
pub fn expand_sweep(doc: &serde_json::Value) -> Result<Vec<serde_json::Value>> {
    let mut axes: Vec<(Vec<String>, Vec<serde_json::Value>)> = Vec::new();
    collect_axes(doc, &mut Vec::new(), &mut axes)?;
    let mut out = vec![doc.clone()];
    for (path, values) in axes {
        let mut next = Vec::with_capacity(out.len() * values.len());
        for base in &out {
            for v in &values {
                let mut expanded = base.clone();
                set_path(&mut expanded, &path, v.clone());
                next.push(expanded);
            }
        }
        out = next;
    }
    Ok(out)
}

fn collect_axes(
    v: &serde_json::Value,
    path: &mut Vec<String>,
    axes: &mut Vec<(Vec<String>, Vec<serde_json::Value>)>,
) -> Result<()> {
    match v {
        serde_json::Value::Object(map) => {
            for (k, child) in map {
                path.push(k.clone());
                collect_axes(child, path, axes)?;
                path.pop();
            }
        }
        serde_json::Value::Array(items) => {
            if items.iter().any(|i| i.is_object() || i.is_array()) {
                return Err(Error::ConfigError(format!(
                    "sweep axis at {} must be an array of scalars",
                    path.join(".")
                )));
            }
            if items.is_empty() {
                return Err(Error::ConfigError(format!(
                    "empty sweep axis at {}",
                    path.join(".")
                )));
            }
            axes.push((path.clone(), items.clone()));
        }
        _ => {}
    }
    Ok(())
}

fn set_path(v: &mut serde_json::Value, path: &[String], value: serde_json::Value) {
    let mut cur = v;
    for key in &path[..path.len() - 1] {
        cur = cur.get_mut(key).expect("path collected from this document");
    }
    cur[path.last().unwrap().as_str()] = value;
}

/// Fast-regime constants (α, C₂) for kernels with exponentially decaying
/// truncation error.
fn fast_regime_constants(kernel: &KernelSpec, domain: &Domain) -> Result<(f64, f64)> {
    let d = domain.dim;
    let alpha = 1.0 / d as f64;
    let dfact_root = {
        let ln: f64 = (2..=d).map(|k| (k as f64).ln()).sum();
        (ln / d as f64).exp()
    };
    match *kernel {
        KernelSpec::Gaussian { .. } => Ok((alpha, (2f64.ln() / 4.0) * dfact_root)),
        KernelSpec::DotProduct {
            rule: DotProductRule::Geometric { ratio },
        } => {
            let q = ratio * domain.radius * domain.radius;
            if q >= 1.0 {
                return Err(Error::ConfigError(format!(
                    "geometric kernel diverges on the domain (ratio*r^2 = {q})"
                )));
            }
            Ok((alpha, ((1.0 / q).ln() / 4.0) * dfact_root))
        }
        // factorial tail decays at least as fast as the Gaussian one
        KernelSpec::DotProduct {
            rule: DotProductRule::Exponential { .. },
        } => Ok((alpha, (2f64.ln() / 4.0) * dfact_root)),
        _ => Err(Error::ConfigError(
            "automatic dimension selection needs an exponentially-converging expansion \
             (gaussian or dot-product kernels)"
                .into(),
        )),
    }
}

fn resolve_explicit_dim(
    spec: DimensionSpec,
    kernel: &KernelSpec,
    domain: &Domain,
    horizon: u64,
) -> Result<usize> {
    match spec {
        DimensionSpec::Fixed(m) => Ok(m),
        DimensionSpec::Rule(AutoDim::Auto) => {
            if let KernelSpec::Polynomial { q, .. } = kernel {
                // the span is exact at the full top layer
                return features::layer_dimension(domain.dim, *q);
            }
            let (alpha, c2) = fast_regime_constants(kernel, domain)?;
            Ok(features::fast_regime_dimension(alpha, c2, horizon, domain.dim))
        }
    }
}

fn sections_map(
    kernel: &Kernel,
    domain: &Domain,
    m: usize,
    pool_size: usize,
    rank_tol_rel: f64,
    seed: u64,
) -> Result<FeatureMap> {
    let pool = sections::sample_pool(domain, pool_size, seed);
    let (idx, _) = sections::fps_from_pool(&pool, kernel, m)?;
    let pts: Vec<Vec<f64>> = idx.into_iter().map(|i| pool[i].clone()).collect();
    let basis = sections::build_section_basis(&pts, kernel, rank_tol_rel)?;
    Ok(FeatureMap::Sections {
        basis,
        kernel: kernel.clone(),
    })
}

/// Net pools are seeded independently of the label noise stream.
fn net_seed(env_seed: u64) -> u64 {
    env_seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(0x5ec7)
}

/// Everything assembled from one config, ready to run.
pub struct BuiltRun {
    pub kernel: Kernel,
    pub env: crate::harness::environment::GeneratedEnvironment,
    pub forecaster: Forecaster,
    pub config_hash: String,
}

pub fn build_run(cfg: &RunConfig) -> Result<BuiltRun> {
    let kernel = Kernel::new(cfg.kernel)?;
    // deserialization bypasses the constructor, so revalidate
    let domain = Domain::new(cfg.environment.domain.dim, cfg.environment.domain.radius)?;
    kernel.validate_for_domain(&domain)?;
    // dataset streams dictate their own length
    let horizon = crate::harness::environment::effective_horizon(&cfg.environment)?;
    let fc = cfg.forecaster;
    if !(fc.lambda > 0.0 && fc.lambda_meta > 0.0) {
        return Err(Error::ConfigError("regularization must be positive".into()));
    }

    let forecaster = match (cfg.scheme, fc.kind) {
        (SchemeConfig::Dyadic { maps, pool_factor }, ForecasterKind::Dyadic) => {
            let dims = crate::ensemble::dyadic_dimensions(horizon);
            let map_kind = maps.unwrap_or(match cfg.kernel {
                KernelSpec::Matern { .. } => DyadicMapKind::Sections,
                _ => DyadicMapKind::Explicit,
            });
            let mut child_maps = Vec::with_capacity(dims.len());
            match map_kind {
                DyadicMapKind::Explicit => {
                    for &m in &dims {
                        child_maps.push(FeatureMap::Explicit(ExplicitFeatureMap::new(
                            &cfg.kernel,
                            &domain,
                            m,
                        )?));
                    }
                }
                DyadicMapKind::Sections => {
                    // one shared pool; greedy prefixes give nested nets
                    let max_m = *dims.last().unwrap();
                    let pool = sections::sample_pool(
                        &domain,
                        pool_factor.max(2) * max_m,
                        net_seed(cfg.environment.seed),
                    );
                    let (idx, _) = sections::fps_from_pool(&pool, &kernel, max_m)?;
                    for &m in &dims {
                        let pts: Vec<Vec<f64>> =
                            idx[..m].iter().map(|&i| pool[i].clone()).collect();
                        let basis = sections::build_section_basis(
                            &pts,
                            &kernel,
                            sections::DEFAULT_RANK_TOL_REL,
                        )?;
                        child_maps.push(FeatureMap::Sections {
                            basis,
                            kernel: kernel.clone(),
                        });
                    }
                }
            }
            Forecaster::Dyadic(DyadicAggregator::new(
                horizon,
                child_maps,
                fc.lambda,
                fc.lambda_meta,
                fc.grid_base,
                fc.mode,
                fc.hint_policy,
            )?)
        }
        (SchemeConfig::Dyadic { .. }, _) => {
            return Err(Error::ConfigError(
                "the dyadic scheme requires forecaster.kind = \"dyadic\"".into(),
            ))
        }
        (_, ForecasterKind::Dyadic) => {
            return Err(Error::ConfigError(
                "forecaster.kind = \"dyadic\" requires scheme.kind = \"dyadic\"".into(),
            ))
        }
        (scheme, kind) => {
            let map = match scheme {
                SchemeConfig::Explicit { m } => {
                    let m = resolve_explicit_dim(m, &cfg.kernel, &domain, horizon)?;
                    FeatureMap::Explicit(ExplicitFeatureMap::new(&cfg.kernel, &domain, m)?)
                }
                SchemeConfig::Sections {
                    m,
                    pool_size,
                    rank_tol_rel,
                } => sections_map(
                    &kernel,
                    &domain,
                    m,
                    pool_size.unwrap_or(default_pool_factor() * m),
                    rank_tol_rel,
                    net_seed(cfg.environment.seed),
                )?,
                SchemeConfig::Dyadic { .. } => unreachable!("handled above"),
            };
            match kind {
                ForecasterKind::Dvaw => {
                    let gamma = fc.gamma.unwrap_or(1.0);
                    let state = DvawState::new(map.dim(), fc.lambda, gamma, fc.mode)?;
                    Forecaster::plain(map, state, fc.hint_policy)?
                }
                ForecasterKind::VeDvaw => {
                    let grid = DiscountGrid::build(map.dim(), horizon, fc.grid_base)?;
                    let ve = VeDvaw::new(
                        grid,
                        map.dim(),
                        fc.lambda,
                        fc.lambda_meta,
                        fc.mode,
                        fc.hint_policy,
                    )?;
                    Forecaster::ensemble(map, ve)?
                }
                ForecasterKind::Dyadic => unreachable!("handled above"),
            }
        }
    };

    let map_for_env = match &forecaster {
        Forecaster::Dvaw { map, .. } | Forecaster::Ensemble { map, .. } => Some(map.clone()),
        Forecaster::Dyadic(_) => None,
    };
    let env = generate_environment(&cfg.environment, &kernel, map_for_env.as_ref())?;
    Ok(BuiltRun {
        kernel,
        env,
        forecaster,
        config_hash: config_hash_of(cfg),
    })
}

/// Outcome of one completed run.
pub struct RunOutcome {
    pub trace: RegretTrace,
    pub summary: RunSummary,
}

pub fn execute_run(cfg: &RunConfig) -> Result<RunOutcome> {
    let mut built = build_run(cfg)?;
    let trace = run_prequential(&mut built.forecaster, &built.env)?;
    let summary = RunSummary {
        final_regret: trace.final_regret,
        path_length: trace.path_length,
        r_f: trace.r_f,
        delta_sq_total: trace.delta_sq_total,
        delta_sq_max: trace.delta_sq_max,
        m: built.forecaster.reported_dim(),
        n: built.forecaster.reported_meta_dim(),
        horizon: trace.horizon(),
        seed: cfg.environment.seed,
        config_hash: built.config_hash.clone(),
    };
    Ok(RunOutcome { trace, summary })
}

/// Runs and persists trace, summary, and (for section schemes) net points.
pub fn execute_run_to_dir(cfg: &RunConfig, out_dir: &Path) -> Result<RunOutcome> {
    fs::create_dir_all(out_dir)?;
    let mut built = build_run(cfg)?;
    if let Some(basis) = built.forecaster.section_points() {
        let file = fs::File::create(out_dir.join("net_points.csv"))?;
        sections::write_points_csv(&basis.points, file)?;
    }
    let trace = run_prequential(&mut built.forecaster, &built.env)?;
    let summary = RunSummary {
        final_regret: trace.final_regret,
        path_length: trace.path_length,
        r_f: trace.r_f,
        delta_sq_total: trace.delta_sq_total,
        delta_sq_max: trace.delta_sq_max,
        m: built.forecaster.reported_dim(),
        n: built.forecaster.reported_meta_dim(),
        horizon: trace.horizon(),
        seed: cfg.environment.seed,
        config_hash: built.config_hash.clone(),
    };
    if cfg.output.write_trace {
        let file = fs::File::create(out_dir.join("trace.csv"))?;
        trace.write_csv(file)?;
    }
    let summary_json = serde_json::to_string_pretty(&summary)
        .map_err(|e| Error::ConfigError(e.to_string()))?;
    fs::write(out_dir.join("summary.json"), summary_json)?;
    Ok(RunOutcome { trace, summary })
}

/// Runs the cross product of horizons, path lengths, and seeds on top of a
/// base config, collecting mean regrets and fitted exponents (regret vs T
/// at fixed P, regret vs P at fixed T). The comparator keeps its jump size
/// as the path grows: segment counts scale with the path length.
pub fn run_scaling_grid(
    base: &RunConfig,
    horizons: &[u64],
    paths: &[f64],
    seeds: u64,
) -> Result<crate::harness::scaling::ScalingReport> {
    if horizons.is_empty() || paths.is_empty() || seeds == 0 {
        return Err(Error::ConfigError(
            "scaling grid needs horizons, path lengths, and at least one seed".into(),
        ));
    }
    let base_jump = {
        let c = &base.environment.comparator;
        if c.segments > 1 {
            c.path_length / (c.segments as f64 - 1.0)
        } else {
            0.25
        }
    };
    let mut results = Vec::new();
    for &t in horizons {
        for &p in paths {
            for seed in 0..seeds {
                let mut cfg = base.clone();
                cfg.environment.t = t;
                cfg.environment.seed = base.environment.seed.wrapping_add(seed);
                cfg.environment.comparator.path_length = p;
                cfg.environment.comparator.segments = if p == 0.0 {
                    1
                } else {
                    1 + (p / base_jump).round().max(1.0) as usize
                };
                let outcome = execute_run(&cfg)?;
                results.push((t, p, outcome.summary.final_regret));
            }
        }
    }
    Ok(crate::harness::scaling::build_scaling_report(&results))
}
