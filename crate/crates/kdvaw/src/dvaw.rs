//! Discounted Vovk-Azoury-Warmuth forecaster for online square-loss
//! regression, in follow-the-regularized-leader form.
//!
//! The state after `t` rounds is the quadratic representation of the
//! discounted objective
//!
//! ```text
//! F_t(w) = ½ wᵀ Σ_t w - θ_tᵀ w + e_t,
//! Σ_t = γᵗ λ I + Σ_s γ^{t-s} z_s z_sᵀ,   θ_t = Σ_s γ^{t-s} y_s z_s,
//! e_t = Σ_s γ^{t-s} ½ y_s²,
//! ```
//!
//! and the round-`t` weights solve `min_w ½(ỹ_t - ⟨z_t,w⟩)² + γ F_{t-1}(w)`,
//! i.e. one SPD system `(z_t z_tᵀ + γ Σ_{t-1}) w = ỹ_t z_t + γ θ_{t-1}`.
//! The undiscounted forecaster is the γ = 1, zero-hint special case.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    self, invert_spd, sherman_morrison_inverse_update, solve_spd, SymMatrix,
};

/// How the per-round SPD system is solved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMode {
    /// One Cholesky solve per round, O(m³).
    Direct,
    /// Rank-one updates of the maintained inverse, O(m²) per round.
    InverseUpdate,
}

/// Pre-prediction signal ỹ_t. Any finite value is admissible.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hint(f64);

impl Hint {
    pub const ZERO: Hint = Hint(0.0);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() {
            Ok(Hint(value))
        } else {
            Err(Error::InvalidParam(format!("hint must be finite, got {value}")))
        }
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

const INVERSE_RECERTIFY_PERIOD: u64 = 1000;
const INVERSE_DRIFT_TOL: f64 = 1e-7;

/// Discounted forecaster state: a strict predict-then-update state machine.
#[derive(Clone, Debug)]
pub struct DvawState {
    m: usize,
    lambda: f64,
    gamma: f64,
    sigma: SymMatrix,
    theta: Vec<f64>,
    label_energy: f64,
    t: u64,
    mode: SolveMode,
    sigma_inv: Option<SymMatrix>,
}

impl DvawState {
    pub fn new(m: usize, lambda: f64, gamma: f64, mode: SolveMode) -> Result<Self> {
        if m < 1 {
            return Err(Error::InvalidParam("feature dimension must be >= 1".into()));
        }
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(Error::InvalidParam(format!(
                "regularization lambda must be positive, got {lambda}"
            )));
        }
        if gamma.is_nan() || gamma <= 0.0 || gamma > 1.0 {
            return Err(Error::InvalidParam(format!(
                "discount gamma must lie in (0, 1], got {gamma}"
            )));
        }
        let sigma_inv = match mode {
            SolveMode::Direct => None,
            SolveMode::InverseUpdate => Some(SymMatrix::scaled_identity(m, 1.0 / lambda)),
        };
        Ok(DvawState {
            m,
            lambda,
            gamma,
            sigma: SymMatrix::scaled_identity(m, lambda),
            theta: vec![0.0; m],
            label_energy: 0.0,
            t: 0,
            mode,
            sigma_inv,
        })
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn round(&self) -> u64 {
        self.t
    }

    pub fn mode(&self) -> SolveMode {
        self.mode
    }

    pub fn sigma(&self) -> &SymMatrix {
        &self.sigma
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn label_energy(&self) -> f64 {
        self.label_energy
    }

    fn check_dim(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.m {
            Err(Error::DimensionMismatch {
                expected: self.m,
                got: v.len(),
            })
        } else {
            Ok(())
        }
    }

    /// Weights and prediction for the current round, before the label lands.
    pub fn predict(&self, z: &[f64], hint: Hint) -> Result<(f64, Vec<f64>)> {
        self.check_dim(z)?;
        let rhs: Vec<f64> = self
            .theta
            .iter()
            .zip(z)
            .map(|(th, zi)| self.gamma * th + hint.value() * zi)
            .collect();
        let weights = match (&self.mode, &self.sigma_inv) {
            (SolveMode::Direct, _) | (_, None) => {
                let mut a = self.sigma.clone();
                a.scale(self.gamma);
                a.add_scaled_outer(z, 1.0);
                solve_spd(&a, &rhs)?
            }
            (SolveMode::InverseUpdate, Some(inv)) => {
                let a_inv = sherman_morrison_inverse_update(inv, z, self.gamma)?;
                a_inv.matvec(&rhs)
            }
        };
        let prediction = linalg::dot(&weights, z);
        Ok((prediction, weights))
    }

    /// Folds the revealed label into the discounted statistics.
    pub fn update(&mut self, z: &[f64], y: f64) -> Result<()> {
        self.check_dim(z)?;
        self.sigma.scale(self.gamma);
        self.sigma.add_scaled_outer(z, 1.0);
        for (th, zi) in self.theta.iter_mut().zip(z) {
            *th = self.gamma * *th + y * zi;
        }
        self.label_energy = self.gamma * self.label_energy + 0.5 * y * y;
        self.t += 1;
        if let Some(inv) = &self.sigma_inv {
            let updated = sherman_morrison_inverse_update(inv, z, self.gamma)?;
            self.sigma_inv = Some(updated);
            if self.t.is_multiple_of(INVERSE_RECERTIFY_PERIOD) {
                self.recertify_inverse()?;
            }
        }
        Ok(())
    }

    /// Measures `‖Σ Σ⁻¹ - I‖_max` and rebuilds the inverse when it drifts.
    pub fn recertify_inverse(&mut self) -> Result<f64> {
        let Some(inv) = &self.sigma_inv else {
            return Ok(0.0);
        };
        let drift = self.sigma.product_identity_drift(inv);
        if drift > INVERSE_DRIFT_TOL {
            log::debug!("inverse drift {drift:.3e} at round {}, rebuilding", self.t);
            self.sigma_inv = Some(invert_spd(&self.sigma)?);
        }
        Ok(drift)
    }

    /// Discounted objective value `F_t(w)` for the data seen so far.
    pub fn ftrl_objective(&self, w: &[f64]) -> Result<f64> {
        self.check_dim(w)?;
        Ok(0.5 * self.sigma.quadratic_form(w) - linalg::dot(&self.theta, w) + self.label_energy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn init_sets_prior() {
        let s = DvawState::new(2, 1.0, 1.0, SolveMode::Direct).unwrap();
        assert_eq!(s.sigma().get(0, 0), 1.0);
        assert_eq!(s.sigma().get(0, 1), 0.0);
        assert_eq!(s.theta(), &[0.0, 0.0]);
        let s = DvawState::new(1, 0.5, 0.9, SolveMode::Direct).unwrap();
        assert_eq!(s.sigma().get(0, 0), 0.5);
    }

    #[test]
    fn init_rejects_bad_params() {
        assert!(DvawState::new(1, 0.0, 1.0, SolveMode::Direct).is_err());
        assert!(DvawState::new(1, 1.0, 0.0, SolveMode::Direct).is_err());
        assert!(DvawState::new(1, 1.0, 1.2, SolveMode::Direct).is_err());
    }

    #[test]
    fn fresh_prediction_balances_hint_against_prior() {
        // minimize ½(1-w)² + ½w² by hand: w = 1/2
        let s = DvawState::new(1, 1.0, 1.0, SolveMode::Direct).unwrap();
        let (pred, w) = s.predict(&[1.0], Hint::new(1.0).unwrap()).unwrap();
        assert!((w[0] - 0.5).abs() < 1e-14);
        assert!((pred - 0.5).abs() < 1e-14);
    }

    #[test]
    fn zero_hint_zero_data_predicts_zero() {
        let s = DvawState::new(3, 2.0, 0.8, SolveMode::Direct).unwrap();
        let (pred, w) = s.predict(&[0.4, -0.2, 1.0], Hint::ZERO).unwrap();
        assert_eq!(pred, 0.0);
        assert!(w.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn prediction_after_one_observation() {
        let mut s = DvawState::new(1, 1.0, 1.0, SolveMode::Direct).unwrap();
        s.update(&[1.0], 1.0).unwrap();
        let (pred, _) = s.predict(&[1.0], Hint::ZERO).unwrap();
        assert!((pred - 1.0 / 3.0).abs() < 1e-14);
        // brute-force the same FTRL objective on a grid
        let mut best = f64::INFINITY;
        let mut best_w = 0.0;
        for i in -2000..=2000 {
            let w = i as f64 / 1000.0;
            let obj = 0.5 * w * w + (0.5 * w * w + 0.5 * (1.0 - w) * (1.0 - w));
            if obj < best {
                best = obj;
                best_w = w;
            }
        }
        assert!((best_w - 1.0 / 3.0).abs() < 1e-3);
    }

    #[test]
    fn update_recursion_single_step() {
        let mut s = DvawState::new(1, 1.0, 1.0, SolveMode::Direct).unwrap();
        s.update(&[1.0], 1.0).unwrap();
        assert!((s.sigma().get(0, 0) - 2.0).abs() < 1e-15);
        assert!((s.theta()[0] - 1.0).abs() < 1e-15);
        assert!((s.label_energy() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_feature_update_discounts_only() {
        let mut s = DvawState::new(1, 1.0, 0.5, SolveMode::Direct).unwrap();
        s.update(&[1.0], 2.0).unwrap();
        let sigma_before = s.sigma().get(0, 0);
        let theta_before = s.theta()[0];
        s.update(&[0.0], 5.0).unwrap();
        assert!((s.sigma().get(0, 0) - 0.5 * sigma_before).abs() < 1e-15);
        assert!((s.theta()[0] - 0.5 * theta_before).abs() < 1e-15);
    }

    #[test]
    fn undiscounted_sigma_is_plain_sum() {
        let mut s = DvawState::new(2, 0.7, 1.0, SolveMode::Direct).unwrap();
        let zs = [[1.0, 0.5], [-0.3, 0.9], [0.2, 0.2]];
        for z in &zs {
            s.update(z, 1.0).unwrap();
        }
        let mut expected = SymMatrix::scaled_identity(2, 0.7);
        for z in &zs {
            expected.add_scaled_outer(z, 1.0);
        }
        for i in 0..2 {
            for j in 0..2 {
                assert!((s.sigma().get(i, j) - expected.get(i, j)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn objective_values() {
        let s = DvawState::new(1, 2.0, 1.0, SolveMode::Direct).unwrap();
        assert_eq!(s.ftrl_objective(&[0.0]).unwrap(), 0.0);
        assert_eq!(s.ftrl_objective(&[3.0]).unwrap(), 9.0);
        let mut s = DvawState::new(1, 1.0, 0.5, SolveMode::Direct).unwrap();
        s.update(&[1.0], 1.0).unwrap();
        assert!((s.ftrl_objective(&[1.0]).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn objective_matches_direct_sum_on_random_streams() {
        // F_t(w) from the recursion equals the literal discounted sum
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..10 {
            let m = rng.gen_range(1..4);
            let gamma: f64 = rng.gen_range(0.5..1.0);
            let lambda: f64 = rng.gen_range(0.2..2.0);
            let t_max = 30;
            let zs: Vec<Vec<f64>> = (0..t_max)
                .map(|_| (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let ys: Vec<f64> = (0..t_max).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let w: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();

            let mut s = DvawState::new(m, lambda, gamma, SolveMode::Direct).unwrap();
            for t in 0..t_max {
                s.update(&zs[t], ys[t]).unwrap();
            }
            let from_state = s.ftrl_objective(&w).unwrap();

            let t = t_max as i32;
            let mut direct = gamma.powi(t) * 0.5 * lambda * linalg::dot(&w, &w);
            for s_idx in 0..t_max {
                let resid = ys[s_idx] - linalg::dot(&w, &zs[s_idx]);
                direct += gamma.powi(t - 1 - s_idx as i32) * 0.5 * resid * resid;
            }
            assert!(
                (from_state - direct).abs() < 1e-10 * (1.0 + direct.abs()),
                "objective mismatch: {from_state} vs {direct}"
            );
        }
    }

    #[test]
    fn ftrl_first_order_optimality_every_round() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = 3;
        let gamma = 0.9;
        let mut s = DvawState::new(m, 0.5, gamma, SolveMode::Direct).unwrap();
        for _ in 0..200 {
            let z: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let hint = Hint::new(rng.gen_range(-1.0..1.0)).unwrap();
            let (_, w) = s.predict(&z, hint).unwrap();
            // gradient of ½(ỹ-⟨z,w⟩)² + γ F_{t-1}(w)
            let resid = hint.value() - linalg::dot(&z, &w);
            let sig_w = s.sigma().matvec(&w);
            let grad: Vec<f64> = (0..m)
                .map(|i| -resid * z[i] + gamma * (sig_w[i] - s.theta()[i]))
                .collect();
            let gnorm = linalg::norm2(&grad);
            assert!(
                gnorm <= 1e-8 * (1.0 + linalg::norm2(&w)),
                "gradient norm {gnorm} too large"
            );
            let y = rng.gen_range(-1.0..1.0);
            s.update(&z, y).unwrap();
        }
    }

    #[test]
    fn matches_plain_ridge_recursion_when_undiscounted() {
        // textbook forecaster built from scratch sums, zero hint
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let m = 4;
        let lambda = 1.0;
        let mut s = DvawState::new(m, lambda, 1.0, SolveMode::Direct).unwrap();
        let mut a = SymMatrix::scaled_identity(m, lambda);
        let mut b = vec![0.0; m];
        for _ in 0..300 {
            let z: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (pred, _) = s.predict(&z, Hint::ZERO).unwrap();
            let mut a_now = a.clone();
            a_now.add_scaled_outer(&z, 1.0);
            let w_ref = solve_spd(&a_now, &b).unwrap();
            let pred_ref = linalg::dot(&w_ref, &z);
            assert!((pred - pred_ref).abs() <= 1e-10);
            let y = rng.gen_range(-1.0..1.0);
            s.update(&z, y).unwrap();
            a.add_scaled_outer(&z, 1.0);
            for (bi, zi) in b.iter_mut().zip(&z) {
                *bi += y * zi;
            }
        }
    }

    #[test]
    fn solve_modes_agree_over_long_streams() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let m = 8;
        let mut direct = DvawState::new(m, 1.0, 0.97, SolveMode::Direct).unwrap();
        let mut fast = DvawState::new(m, 1.0, 0.97, SolveMode::InverseUpdate).unwrap();
        for _ in 0..1500 {
            let z: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let hint = Hint::new(rng.gen_range(-1.0..1.0)).unwrap();
            let (p1, _) = direct.predict(&z, hint).unwrap();
            let (p2, _) = fast.predict(&z, hint).unwrap();
            assert!((p1 - p2).abs() < 1e-6, "modes diverged: {p1} vs {p2}");
            let y = rng.gen_range(-1.0..1.0);
            direct.update(&z, y).unwrap();
            fast.update(&z, y).unwrap();
        }
    }

    #[test]
    fn sigma_stays_positive_definite() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let m = 3;
        let lambda = 0.5;
        let gamma: f64 = 0.8;
        let mut s = DvawState::new(m, lambda, gamma, SolveMode::Direct).unwrap();
        for t in 1..=60u64 {
            let z: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            s.update(&z, rng.gen_range(-1.0..1.0)).unwrap();
            let eig = crate::linalg::sym_eig(s.sigma()).unwrap();
            let floor = gamma.powi(t as i32) * lambda * (1.0 - 1e-10);
            assert!(
                eig.eigenvalues.last().copied().unwrap() >= floor,
                "lost positive definiteness at round {t}"
            );
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let s = DvawState::new(2, 1.0, 1.0, SolveMode::Direct).unwrap();
        assert!(matches!(
            s.predict(&[1.0], Hint::ZERO),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(s.ftrl_objective(&[1.0, 2.0, 3.0]).is_err());
    }

    proptest! {
        #[test]
        fn prediction_is_weight_feature_inner_product(
            seed in 0u64..500,
            gamma in 0.5f64..1.0,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = rng.gen_range(1..5);
            let mut s = DvawState::new(m, 1.0, gamma, SolveMode::Direct).unwrap();
            for _ in 0..5 {
                let z: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
                s.update(&z, rng.gen_range(-1.0..1.0)).unwrap();
            }
            let z: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (pred, w) = s.predict(&z, Hint::ZERO).unwrap();
            prop_assert!((pred - linalg::dot(&w, &z)).abs() < 1e-12);
        }
    }
}
