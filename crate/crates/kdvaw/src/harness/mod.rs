//! Prequential evaluation: environments, forecaster drivers, regret
//! traces, bound certification, and scaling fits.

pub mod bounds;
pub mod comparator;
pub mod environment;
pub mod scaling;
pub mod trace;

use crate::dvaw::{DvawState, Hint};
use crate::ensemble::{DyadicAggregator, HintPolicy, VeDvaw};
use crate::error::{Error, Result};
use crate::featuremap::FeatureMap;
use crate::kernels::Kernel;
use crate::linalg;
use crate::sections::SectionBasis;

use environment::GeneratedEnvironment;
use trace::{RegretTrace, TraceRow};

/// A forecaster bundled with its input pipeline, ready for prequential
/// evaluation. The plain discounted forecaster and the discount-grid
/// ensemble carry an explicit feature map; the dyadic aggregator owns one
/// map per child.
pub enum Forecaster {
    Dvaw {
        map: FeatureMap,
        state: DvawState,
        hint_policy: HintPolicy,
        last_label: Option<f64>,
        last_prediction: Option<f64>,
    },
    Ensemble {
        map: FeatureMap,
        ensemble: VeDvaw,
    },
    Dyadic(DyadicAggregator),
}

impl Forecaster {
    pub fn plain(map: FeatureMap, state: DvawState, hint_policy: HintPolicy) -> Result<Self> {
        if state.dim() != map.dim() {
            return Err(Error::DimensionMismatch {
                expected: map.dim(),
                got: state.dim(),
            });
        }
        Ok(Forecaster::Dvaw {
            map,
            state,
            hint_policy,
            last_label: None,
            last_prediction: None,
        })
    }

    pub fn ensemble(map: FeatureMap, ensemble: VeDvaw) -> Result<Self> {
        if ensemble.feature_dim() != map.dim() {
            return Err(Error::DimensionMismatch {
                expected: map.dim(),
                got: ensemble.feature_dim(),
            });
        }
        Ok(Forecaster::Ensemble { map, ensemble })
    }

    pub fn next_hint(&self) -> Hint {
        match self {
            Forecaster::Dvaw {
                hint_policy,
                last_label,
                last_prediction,
                ..
            } => {
                let v = match hint_policy {
                    HintPolicy::Zero => 0.0,
                    HintPolicy::PreviousLabel => last_label.unwrap_or(0.0),
                    HintPolicy::SelfReferential => last_prediction.unwrap_or(0.0),
                };
                Hint::new(v).expect("labels and predictions stay finite")
            }
            Forecaster::Ensemble { ensemble, .. } => ensemble.next_hint(),
            Forecaster::Dyadic(agg) => agg.next_hint(),
        }
    }

    /// Strict predict-then-update round on a raw input point.
    pub fn round(&mut self, x: &[f64], hint: Hint, y_after: f64) -> Result<f64> {
        match self {
            Forecaster::Dvaw {
                map,
                state,
                last_label,
                last_prediction,
                ..
            } => {
                let z = map.eval(x)?;
                let (pred, _) = state.predict(&z, hint)?;
                state.update(&z, y_after)?;
                *last_label = Some(y_after);
                *last_prediction = Some(pred);
                Ok(pred)
            }
            Forecaster::Ensemble { map, ensemble } => {
                let z = map.eval(x)?;
                Ok(ensemble.round(&z, hint, y_after)?.prediction)
            }
            Forecaster::Dyadic(agg) => Ok(agg.round(x, hint, y_after)?.prediction),
        }
    }

    /// Feature dimension reported in run summaries.
    pub fn reported_dim(&self) -> usize {
        match self {
            Forecaster::Dvaw { map, .. } => map.dim(),
            Forecaster::Ensemble { map, .. } => map.dim(),
            Forecaster::Dyadic(agg) => agg.dims().iter().copied().max().unwrap_or(1),
        }
    }

    /// Meta dimension reported in run summaries (1 for the plain forecaster).
    pub fn reported_meta_dim(&self) -> usize {
        match self {
            Forecaster::Dvaw { .. } => 1,
            Forecaster::Ensemble { ensemble, .. } => ensemble.meta_dim(),
            Forecaster::Dyadic(agg) => agg.top_dim(),
        }
    }

    /// Net points backing a section-based map, if any (for CSV export).
    pub fn section_points(&self) -> Option<&SectionBasis> {
        match self {
            Forecaster::Dvaw { map, .. } | Forecaster::Ensemble { map, .. } => match map {
                FeatureMap::Sections { basis, .. } => Some(basis),
                FeatureMap::Explicit(_) => None,
            },
            Forecaster::Dyadic(_) => None,
        }
    }
}

/// Runs the forecaster through the environment under the strict prequential
/// order: features, hint, prediction, label reveal, losses, update.
pub fn run_prequential(
    forecaster: &mut Forecaster,
    env: &GeneratedEnvironment,
) -> Result<RegretTrace> {
    let horizon = env.horizon();
    let mut rows = Vec::with_capacity(horizon as usize);
    let mut cum_regret = 0.0;
    let mut delta_sq_total = 0.0;
    let mut delta_sq_max = 0.0f64;
    for t in 1..=horizon {
        let i = (t - 1) as usize;
        let hint = forecaster.next_hint();
        let prediction = forecaster.round(&env.xs[i], hint, env.ys[i])?;
        let y = env.ys[i];
        let inst_loss = 0.5 * (y - prediction) * (y - prediction);
        let comp_resid = y - env.comparator_values[i];
        let comp_loss = 0.5 * comp_resid * comp_resid;
        cum_regret += inst_loss - comp_loss;
        let delta = y - hint.value();
        delta_sq_total += delta * delta;
        delta_sq_max = delta_sq_max.max(delta * delta);
        rows.push(TraceRow {
            t,
            y,
            hint: hint.value(),
            yhat: prediction,
            inst_loss,
            comp_loss,
            cum_regret,
        });
    }
    Ok(RegretTrace {
        final_regret: cum_regret,
        path_length: env.comparator.path_length,
        r_f: env.comparator.r_f,
        delta_sq_total,
        delta_sq_max,
        rows,
    })
}

/// Empirical projection-loss comparison: the cumulative loss of the
/// comparator's subspace projection exceeds the comparator's own loss by at
/// most `T (R_f (Y + κ R_f) E + ½ R_f² E²)`, where `E` is the measured
/// subspace error over the run's own inputs joined with the given probes.
pub struct ProjectionLossCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    pub subspace_error: f64,
}

pub fn check_projection_loss(
    env: &GeneratedEnvironment,
    kernel: &Kernel,
    map: &FeatureMap,
    extra_probes: &[Vec<f64>],
) -> Result<ProjectionLossCheck> {
    if !env.comparator.is_kernel_combination() {
        return Err(Error::RepresentationError(
            "projection-loss comparison needs a comparator living in the full space".into(),
        ));
    }
    let coords = env.comparator.coordinate_path(map)?;
    let mut lhs = 0.0;
    for t in 1..=env.horizon() {
        let i = (t - 1) as usize;
        let z = map.eval(&env.xs[i])?;
        let projected = linalg::dot(&coords[i], &z);
        let proj_loss = 0.5 * (env.ys[i] - projected).powi(2);
        let comp_loss = 0.5 * (env.ys[i] - env.comparator_values[i]).powi(2);
        lhs += proj_loss - comp_loss;
    }
    // measured subspace error: power function over inputs and probes
    let mut err: f64 = 0.0;
    for x in env.xs.iter().chain(extra_probes) {
        let z = map.eval(x)?;
        let gap = kernel.eval(x, x) - linalg::dot(&z, &z);
        err = err.max(gap.max(0.0).sqrt());
    }
    let t = env.horizon() as f64;
    let r_f = env.comparator.r_f;
    let rhs = t * (r_f * (env.y_clip + env.kappa * r_f) * err + 0.5 * r_f * r_f * err * err);
    Ok(ProjectionLossCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-9 * (1.0 + rhs.abs()),
        subspace_error: err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dvaw::SolveMode;
    use crate::ensemble::DiscountGrid;
    use crate::features::ExplicitFeatureMap;
    use crate::harness::comparator::ComparatorKind;
    use crate::harness::environment::{
        generate_environment, ComparatorConfig, EnvironmentConfig, NoiseConfig,
    };
    use crate::kernels::{Domain, KernelSpec};
    use crate::sections;

    fn gaussian_setup(m: usize) -> (Kernel, FeatureMap) {
        let spec = KernelSpec::Gaussian { sigma: 1.0 };
        let kernel = Kernel::new(spec).unwrap();
        let domain = Domain::new(1, 1.0).unwrap();
        let map =
            FeatureMap::Explicit(ExplicitFeatureMap::new(&spec, &domain, m).unwrap());
        (kernel, map)
    }

    fn env_config(t: u64, segments: usize, path: f64, seed: u64) -> EnvironmentConfig {
        EnvironmentConfig {
            t,
            domain: Domain::new(1, 1.0).unwrap(),
            comparator: ComparatorConfig {
                representation: ComparatorKind::Coefficients,
                segments,
                path_length: path,
                base_norm: 1.0,
                anchors: 8,
            },
            noise: NoiseConfig::Uniform { amplitude: 0.1 },
            label_clip: None,
            seed,
            dataset: None,
        }
    }

    fn plain_forecaster(map: FeatureMap) -> Forecaster {
        let state = DvawState::new(map.dim(), 1.0, 1.0, SolveMode::Direct).unwrap();
        Forecaster::plain(map, state, HintPolicy::PreviousLabel).unwrap()
    }

    #[test]
    fn zero_comparator_zero_predictor_has_zero_regret() {
        // forecaster with huge regularization approximates the zero predictor
        let (kernel, map) = gaussian_setup(3);
        let mut cfg = env_config(30, 1, 0.0, 9);
        cfg.comparator.base_norm = 0.0;
        cfg.noise = NoiseConfig::Uniform { amplitude: 0.2 };
        let env = generate_environment(&cfg, &kernel, Some(&map)).unwrap();
        let state = DvawState::new(3, 1e12, 1.0, SolveMode::Direct).unwrap();
        let mut f = Forecaster::plain(map, state, HintPolicy::Zero).unwrap();
        let trace = run_prequential(&mut f, &env).unwrap();
        assert!(
            trace.final_regret.abs() < 1e-6,
            "near-zero predictor against the zero comparator"
        );
    }

    #[test]
    fn single_round_regret_identity() {
        let (kernel, map) = gaussian_setup(2);
        let mut cfg = env_config(2, 1, 0.0, 4);
        cfg.noise = NoiseConfig::None;
        let env = generate_environment(&cfg, &kernel, Some(&map)).unwrap();
        let mut f = plain_forecaster(map);
        let trace = run_prequential(&mut f, &env).unwrap();
        let r1 = &trace.rows[0];
        let expected = 0.5 * (r1.y - r1.yhat).powi(2)
            - 0.5 * (r1.y - env.comparator_values[0]).powi(2);
        assert!((r1.cum_regret - expected).abs() < 1e-15);
    }

    #[test]
    fn identical_seeds_identical_traces() {
        let (kernel, map) = gaussian_setup(2);
        let cfg = env_config(50, 2, 0.5, 12);
        let env = generate_environment(&cfg, &kernel, Some(&map)).unwrap();
        let grid = DiscountGrid::build(2, 50, 2.0).unwrap();
        let run = |env: &GeneratedEnvironment| {
            let ve = VeDvaw::new(
                grid.clone(),
                2,
                1.0,
                1.0,
                SolveMode::Direct,
                HintPolicy::PreviousLabel,
            )
            .unwrap();
            let mut f = Forecaster::ensemble(map.clone(), ve).unwrap();
            run_prequential(&mut f, env).unwrap().to_csv_string()
        };
        assert_eq!(run(&env), run(&env), "reruns must be byte-identical");
    }

    #[test]
    fn prequential_rows_satisfy_trace_invariants() {
        let (kernel, map) = gaussian_setup(3);
        let cfg = env_config(80, 4, 1.0, 21);
        let env = generate_environment(&cfg, &kernel, Some(&map)).unwrap();
        let mut f = plain_forecaster(map);
        let trace = run_prequential(&mut f, &env).unwrap();
        let mut acc = 0.0;
        let mut max_d: f64 = 0.0;
        let mut sum_d = 0.0;
        for row in &trace.rows {
            acc += row.inst_loss - row.comp_loss;
            assert_eq!(acc, row.cum_regret, "cumulative column must be exact");
            let d = (row.y - row.hint).powi(2);
            sum_d += d;
            max_d = max_d.max(d);
        }
        assert_eq!(trace.final_regret, acc);
        assert_eq!(trace.delta_sq_total, sum_d);
        assert_eq!(trace.delta_sq_max, max_d);
    }

    #[test]
    fn self_referential_hints_repeat_own_predictions() {
        let (kernel, map) = gaussian_setup(2);
        let cfg = env_config(30, 1, 0.0, 41);
        let env = generate_environment(&cfg, &kernel, Some(&map)).unwrap();
        let state = DvawState::new(2, 1.0, 0.9, SolveMode::Direct).unwrap();
        let mut f = Forecaster::plain(map, state, HintPolicy::SelfReferential).unwrap();
        let trace = run_prequential(&mut f, &env).unwrap();
        assert_eq!(trace.rows[0].hint, 0.0);
        for t in 1..trace.rows.len() {
            assert_eq!(trace.rows[t].hint, trace.rows[t - 1].yhat);
        }
    }

    #[test]
    fn hints_are_causal_previous_labels() {
        let (kernel, map) = gaussian_setup(2);
        let cfg = env_config(20, 1, 0.0, 33);
        let env = generate_environment(&cfg, &kernel, Some(&map)).unwrap();
        let mut f = plain_forecaster(map);
        let trace = run_prequential(&mut f, &env).unwrap();
        assert_eq!(trace.rows[0].hint, 0.0);
        for t in 1..trace.rows.len() {
            assert_eq!(trace.rows[t].hint, trace.rows[t - 1].y);
        }
    }

    #[test]
    fn future_labels_cannot_leak_into_predictions() {
        // two environments identical through round k, diverging afterwards:
        // the first k predictions must match bit for bit
        let (kernel, map) = gaussian_setup(3);
        let cfg = env_config(40, 2, 0.5, 55);
        let env_a = generate_environment(&cfg, &kernel, Some(&map)).unwrap();
        let mut env_b = env_a.clone();
        let k = 25;
        for y in env_b.ys.iter_mut().skip(k) {
            *y = -*y + 0.37;
        }
        let grid = DiscountGrid::build(3, 40, 2.0).unwrap();
        let run = |env: &GeneratedEnvironment| {
            let ve = VeDvaw::new(
                grid.clone(),
                3,
                1.0,
                1.0,
                SolveMode::Direct,
                HintPolicy::PreviousLabel,
            )
            .unwrap();
            let mut f = Forecaster::ensemble(map.clone(), ve).unwrap();
            run_prequential(&mut f, env).unwrap()
        };
        let ta = run(&env_a);
        let tb = run(&env_b);
        for t in 0..k {
            assert_eq!(
                ta.rows[t].yhat, tb.rows[t].yhat,
                "prediction at round {} depends on a future label",
                t + 1
            );
        }
        assert_ne!(
            ta.rows[k + 1].yhat,
            tb.rows[k + 1].yhat,
            "sanity: the label change must eventually matter"
        );
    }

    #[test]
    fn projection_loss_stays_below_subspace_error_budget() {
        let spec = KernelSpec::Gaussian { sigma: 1.0 };
        let kernel = Kernel::new(spec).unwrap();
        let domain = Domain::new(1, 1.0).unwrap();
        let pool = sections::sample_pool(&domain, 400, 3);
        let (idx, _) = sections::fps_from_pool(&pool, &kernel, 10).unwrap();
        let pts: Vec<Vec<f64>> = idx.iter().map(|&i| pool[i].clone()).collect();
        let basis =
            sections::build_section_basis(&pts, &kernel, sections::DEFAULT_RANK_TOL_REL)
                .unwrap();
        let map = FeatureMap::Sections {
            basis,
            kernel: kernel.clone(),
        };
        let mut cfg = env_config(100, 3, 0.8, 17);
        cfg.comparator.representation = ComparatorKind::KernelCombination;
        let env = generate_environment(&cfg, &kernel, Some(&map)).unwrap();
        let check = check_projection_loss(&env, &kernel, &map, &pool).unwrap();
        assert!(
            check.holds,
            "projected comparator lost {} against budget {}",
            check.lhs, check.rhs
        );
    }
}
