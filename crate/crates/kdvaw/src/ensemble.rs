//! Ensembles of discounted forecasters.
//!
//! `VeDvaw` runs a bank of discounted forecasters over a geometric grid of
//! discount factors plus a hint expert, aggregated by an undiscounted
//! forecaster on the vector of expert predictions. `DyadicAggregator` adds
//! one more level for the slow approximation regime: a top-level
//! undiscounted forecaster over children running on subspaces of dyadic
//! dimensions.

use serde::{Deserialize, Serialize};

use crate::dvaw::{DvawState, Hint, SolveMode};
use crate::error::{Error, Result};
use crate::featuremap::FeatureMap;

/// Geometric grid of discount factors.
///
/// With `η_min = 2m`, `η_max = mT`, the grid is `η_i = min(η_min bⁱ, η_max)`
/// truncated at the first saturated entry, and `γ_i = η_i / (1 + η_i)`.
/// The optional extra slot is the hint expert (the "γ = 0" forecaster that
/// just repeats the hint).
#[derive(Clone, Debug, PartialEq)]
pub struct DiscountGrid {
    pub base: f64,
    pub eta_min: f64,
    pub eta_max: f64,
    pub etas: Vec<f64>,
    pub gammas: Vec<f64>,
    pub includes_hint_expert: bool,
    /// the horizon the grid was sized for; forecasters refuse to stream
    /// past it (grids are not anytime, there is no doubling trick here)
    pub horizon: Option<u64>,
}

impl DiscountGrid {
    pub fn build(m: usize, horizon: u64, base: f64) -> Result<Self> {
        if m < 1 {
            return Err(Error::InvalidParam("grid needs feature dimension >= 1".into()));
        }
        if horizon < 2 {
            return Err(Error::InvalidParam("grid needs horizon T >= 2".into()));
        }
        if !base.is_finite() || base <= 1.0 {
            return Err(Error::InvalidParam(format!(
                "grid base must exceed 1, got {base}"
            )));
        }
        let eta_min = 2.0 * m as f64;
        let eta_max = m as f64 * horizon as f64;
        let mut etas = Vec::new();
        let mut power = 1.0;
        loop {
            let eta = (eta_min * power).min(eta_max);
            etas.push(eta);
            if eta >= eta_max {
                break;
            }
            power *= base;
        }
        let gammas = etas.iter().map(|&e| e / (1.0 + e)).collect();
        Ok(DiscountGrid {
            base,
            eta_min,
            eta_max,
            etas,
            gammas,
            includes_hint_expert: true,
            horizon: Some(horizon),
        })
    }

    /// Hand-picked discount values, for edge configurations and tests.
    pub fn custom(gammas: Vec<f64>, includes_hint_expert: bool, base: f64) -> Result<Self> {
        if gammas.is_empty() {
            return Err(Error::InvalidParam("grid needs at least one discount".into()));
        }
        for w in gammas.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidParam("discounts must be strictly increasing".into()));
            }
        }
        if gammas.iter().any(|&g| !(g > 0.0 && g < 1.0)) {
            return Err(Error::InvalidParam("discounts must lie in (0, 1)".into()));
        }
        let etas: Vec<f64> = gammas.iter().map(|&g| g / (1.0 - g)).collect();
        Ok(DiscountGrid {
            base,
            eta_min: etas[0],
            eta_max: *etas.last().unwrap(),
            etas,
            gammas,
            includes_hint_expert,
            horizon: None,
        })
    }

    /// Meta dimension: experts on the grid plus the hint slot.
    pub fn meta_dim(&self) -> usize {
        self.gammas.len() + usize::from(self.includes_hint_expert)
    }

    /// Geometric coverage: some grid value `η_i` satisfies
    /// `η_i <= η <= base · η_i`.
    pub fn covers(&self, eta: f64) -> bool {
        self.etas
            .iter()
            .any(|&e| e <= eta && eta <= self.base * e)
    }
}

/// How the pre-prediction hint is produced each round.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HintPolicy {
    /// ỹ_t = y_{t-1} (0 on the first round).
    #[default]
    PreviousLabel,
    /// ỹ_t = 0.
    Zero,
    /// ỹ_t = previous own prediction (0 on the first round). No bound is
    /// claimed for this feedback loop; it is exposed for experimentation.
    SelfReferential,
}

/// Outcome of one ensemble round.
#[derive(Clone, Debug)]
pub struct RoundOutput {
    pub prediction: f64,
    /// meta feature vector: hint slot first, then experts by increasing γ
    pub meta_features: Vec<f64>,
}

/// Bank of discounted forecasters aggregated by an undiscounted one.
#[derive(Clone, Debug)]
pub struct VeDvaw {
    grid: DiscountGrid,
    experts: Vec<DvawState>,
    meta: DvawState,
    hint_policy: HintPolicy,
    last_label: Option<f64>,
    last_prediction: Option<f64>,
    rounds: u64,
    // run accounting for meta-regret checks
    cumulative_loss: f64,
    expert_cumulative_loss: Vec<f64>,
    meta_feature_energy: f64,
}

impl VeDvaw {
    pub fn new(
        grid: DiscountGrid,
        m: usize,
        lambda: f64,
        lambda_meta: f64,
        mode: SolveMode,
        hint_policy: HintPolicy,
    ) -> Result<Self> {
        let experts = grid
            .gammas
            .iter()
            .map(|&g| DvawState::new(m, lambda, g, mode))
            .collect::<Result<Vec<_>>>()?;
        let n = grid.meta_dim();
        let meta = DvawState::new(n, lambda_meta, 1.0, SolveMode::Direct)?;
        let expert_count = n;
        Ok(VeDvaw {
            grid,
            experts,
            meta,
            hint_policy,
            last_label: None,
            last_prediction: None,
            rounds: 0,
            cumulative_loss: 0.0,
            expert_cumulative_loss: vec![0.0; expert_count],
            meta_feature_energy: 0.0,
        })
    }

    pub fn grid(&self) -> &DiscountGrid {
        &self.grid
    }

    pub fn meta_dim(&self) -> usize {
        self.grid.meta_dim()
    }

    pub fn feature_dim(&self) -> usize {
        self.experts[0].dim()
    }

    pub fn hint_policy(&self) -> HintPolicy {
        self.hint_policy
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    /// Hint for the upcoming round under the configured policy.
    pub fn next_hint(&self) -> Hint {
        let v = match self.hint_policy {
            HintPolicy::Zero => 0.0,
            HintPolicy::PreviousLabel => self.last_label.unwrap_or(0.0),
            HintPolicy::SelfReferential => self.last_prediction.unwrap_or(0.0),
        };
        Hint::new(v).expect("previous labels and predictions are finite")
    }

    /// One strict prequential round: expert predictions, meta prediction,
    /// then updates with the revealed label.
    pub fn round(&mut self, z: &[f64], hint: Hint, y_after: f64) -> Result<RoundOutput> {
        if let Some(h) = self.grid.horizon {
            if self.rounds >= h {
                return Err(Error::InvalidParam(format!(
                    "stream exceeds the declared horizon {h}; grids are horizon-specific"
                )));
            }
        }
        let mut meta_features = Vec::with_capacity(self.meta_dim());
        if self.grid.includes_hint_expert {
            meta_features.push(hint.value());
        }
        for expert in &self.experts {
            let (pred, _) = expert.predict(z, hint)?;
            meta_features.push(pred);
        }
        let (prediction, _) = self.meta.predict(&meta_features, Hint::ZERO)?;

        // label revealed only now
        for expert in &mut self.experts {
            expert.update(z, y_after)?;
        }
        self.meta.update(&meta_features, y_after)?;

        self.cumulative_loss += 0.5 * (y_after - prediction).powi(2);
        for (acc, pred) in self
            .expert_cumulative_loss
            .iter_mut()
            .zip(&meta_features)
        {
            *acc += 0.5 * (y_after - pred).powi(2);
        }
        self.meta_feature_energy += meta_features.iter().map(|p| p * p).sum::<f64>();
        self.last_label = Some(y_after);
        self.last_prediction = Some(prediction);
        self.rounds += 1;
        Ok(RoundOutput {
            prediction,
            meta_features,
        })
    }

    pub fn cumulative_loss(&self) -> f64 {
        self.cumulative_loss
    }

    pub fn expert_cumulative_losses(&self) -> &[f64] {
        &self.expert_cumulative_loss
    }

    /// `W = Σ_t ‖meta features‖²` measured on the run so far.
    pub fn meta_feature_energy(&self) -> f64 {
        self.meta_feature_energy
    }

    /// Worst gap between the run-measured meta regret to each expert and the
    /// static aggregation bound `½ λ_meta + (N Y²/2) ln(1 + W/(λ_meta N))`.
    /// Negative means every expert comparison sits inside the bound.
    pub fn meta_regret_excess(&self, y_bound: f64) -> f64 {
        let n = self.meta_dim() as f64;
        let lambda_meta = self.meta.lambda();
        let bound = 0.5 * lambda_meta
            + 0.5 * n * y_bound * y_bound
                * (1.0 + self.meta_feature_energy / (lambda_meta * n)).ln();
        self.expert_cumulative_loss
            .iter()
            .map(|&expert_loss| (self.cumulative_loss - expert_loss) - bound)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Top-level aggregation over subspace dimensions `2^j`, `0 <= j <= ⌊log₂T⌋`.
#[derive(Clone, Debug)]
pub struct DyadicAggregator {
    dims: Vec<usize>,
    children: Vec<(FeatureMap, VeDvaw)>,
    top: DvawState,
    hint_policy: HintPolicy,
    last_label: Option<f64>,
    last_prediction: Option<f64>,
    rounds: u64,
    cumulative_loss: f64,
    child_cumulative_loss: Vec<f64>,
    top_feature_energy: f64,
}

/// `{2^j : 0 <= j <= ⌊log₂ T⌋}`.
pub fn dyadic_dimensions(horizon: u64) -> Vec<usize> {
    assert!(horizon >= 1);
    let top = (horizon as f64).log2().floor() as u32;
    (0..=top).map(|j| 1usize << j).collect()
}

impl DyadicAggregator {
    /// `children`: one feature map per dyadic dimension, in increasing order
    /// of the declared dimension list.
    pub fn new(
        horizon: u64,
        child_maps: Vec<FeatureMap>,
        lambda: f64,
        lambda_meta: f64,
        grid_base: f64,
        mode: SolveMode,
        hint_policy: HintPolicy,
    ) -> Result<Self> {
        let dims = dyadic_dimensions(horizon);
        if child_maps.len() != dims.len() {
            return Err(Error::InvalidParam(format!(
                "need one feature map per dyadic dimension: expected {}, got {}",
                dims.len(),
                child_maps.len()
            )));
        }
        let mut children = Vec::with_capacity(dims.len());
        for map in child_maps {
            // grids are sized by the realized feature dimension, which can be
            // below the nominal net size when the Gram matrix is rank-deficient
            let m = map.dim();
            let grid = DiscountGrid::build(m, horizon, grid_base)?;
            let child = VeDvaw::new(grid, m, lambda, lambda_meta, mode, hint_policy)?;
            children.push((map, child));
        }
        let k = dims.len();
        let top = DvawState::new(k, lambda_meta, 1.0, SolveMode::Direct)?;
        Ok(DyadicAggregator {
            dims,
            children,
            top,
            hint_policy,
            last_label: None,
            last_prediction: None,
            rounds: 0,
            cumulative_loss: 0.0,
            child_cumulative_loss: vec![0.0; k],
            top_feature_energy: 0.0,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn top_dim(&self) -> usize {
        self.dims.len()
    }

    pub fn next_hint(&self) -> Hint {
        let v = match self.hint_policy {
            HintPolicy::Zero => 0.0,
            HintPolicy::PreviousLabel => self.last_label.unwrap_or(0.0),
            HintPolicy::SelfReferential => self.last_prediction.unwrap_or(0.0),
        };
        Hint::new(v).expect("labels and predictions stay finite")
    }

    /// One prequential round on the raw input point.
    ///
    /// Children are independent of one another, so each child may complete
    /// its own predict-then-update round in turn; the top-level features
    /// are the child predictions captured before any update, and the
    /// top-level forecaster predicts on them before seeing the label.
    pub fn round(&mut self, x: &[f64], hint: Hint, y_after: f64) -> Result<RoundOutput> {
        let mut child_predictions = Vec::with_capacity(self.children.len());
        for (map, child) in &mut self.children {
            let z = map.eval(x)?;
            let out = child.round(&z, hint, y_after)?;
            child_predictions.push(out.prediction);
        }
        let (prediction, _) = self.top.predict(&child_predictions, Hint::ZERO)?;
        self.top.update(&child_predictions, y_after)?;

        self.cumulative_loss += 0.5 * (y_after - prediction).powi(2);
        for (acc, pred) in self.child_cumulative_loss.iter_mut().zip(&child_predictions) {
            *acc += 0.5 * (y_after - pred).powi(2);
        }
        self.top_feature_energy += child_predictions.iter().map(|p| p * p).sum::<f64>();
        self.last_label = Some(y_after);
        self.last_prediction = Some(prediction);
        self.rounds += 1;
        Ok(RoundOutput {
            prediction,
            meta_features: child_predictions,
        })
    }

    pub fn cumulative_loss(&self) -> f64 {
        self.cumulative_loss
    }

    pub fn child_cumulative_losses(&self) -> &[f64] {
        &self.child_cumulative_loss
    }

    pub fn top_feature_energy(&self) -> f64 {
        self.top_feature_energy
    }

    pub fn children(&self) -> &[(FeatureMap, VeDvaw)] {
        &self.children
    }

    /// Same static aggregation bound as the inner ensembles, applied to
    /// the top level against each child.
    pub fn top_regret_excess(&self, y_bound: f64) -> f64 {
        let k = self.top_dim() as f64;
        let lambda_meta = self.top.lambda();
        let bound = 0.5 * lambda_meta
            + 0.5 * k * y_bound * y_bound
                * (1.0 + self.top_feature_energy / (lambda_meta * k)).ln();
        self.child_cumulative_loss
            .iter()
            .map(|&child_loss| (self.cumulative_loss - child_loss) - bound)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}
