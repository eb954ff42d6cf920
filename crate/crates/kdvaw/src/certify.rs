//! Certification suites: randomized instance sweeps that assert the
//! regret bounds and the structural invariants of the library.
//!
//! Every bound asserted here is a proven statement about the exact
//! algorithm, so a failure indicates an implementation defect; the suites
//! double as the heart of the acceptance tests and as the CLI `certify`
//! subcommand.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dvaw::{DvawState, Hint, SolveMode};
use crate::ensemble::{DiscountGrid, HintPolicy, VeDvaw};
use crate::error::{Error, Result};
use crate::features::ExplicitFeatureMap;
use crate::harness::bounds::{
    check_exact_regret_bound, check_path_length_bound, record_dvaw_run, DvawRunRecord,
};
use crate::kernels::{Domain, DotProductRule, Kernel, KernelSpec};
use crate::linalg::{self, SymMatrix};
use crate::sections;

/// Result of one certification suite.
#[derive(Clone, Debug)]
pub struct SuiteOutcome {
    pub name: String,
    pub passed: usize,
    pub failed: usize,
    pub failures: Vec<String>,
}

impl SuiteOutcome {
    fn new(name: &str) -> Self {
        SuiteOutcome {
            name: name.to_string(),
            passed: 0,
            failed: 0,
            failures: Vec::new(),
        }
    }

    fn record(&mut self, label: String, ok: bool) {
        if ok {
            self.passed += 1;
        } else {
            self.failed += 1;
            self.failures.push(label);
        }
    }

    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }
}

/// One randomized bounded instance: stream, hints, and a piecewise
/// comparator, all inside unit bounds (a = 1, Y = 1).
pub struct CertInstance {
    pub m: usize,
    pub horizon: usize,
    pub gamma: f64,
    pub zs: Vec<Vec<f64>>,
    pub hints: Vec<f64>,
    pub ys: Vec<f64>,
    pub u: Vec<Vec<f64>>,
}

pub fn random_instance(seed: u64) -> CertInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = 1 + (seed as usize % 3);
    let horizon = [50usize, 100, 200][(seed as usize / 3) % 3];
    let grid = DiscountGrid::build(m, horizon as u64, 2.0).expect("valid grid");
    let gamma = grid.gammas[seed as usize % grid.gammas.len()];

    let w = 1.0 / (m as f64).sqrt();
    let zs: Vec<Vec<f64>> = (0..horizon)
        .map(|_| (0..m).map(|_| rng.gen_range(-w..=w)).collect())
        .collect();
    let ys: Vec<f64> = (0..horizon).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    // alternate causal hint policies across instances
    let hints: Vec<f64> = if seed.is_multiple_of(2) {
        let mut h = vec![0.0];
        h.extend_from_slice(&ys[..horizon - 1]);
        h
    } else {
        vec![0.0; horizon]
    };
    // piecewise-constant comparator, segments of equal length
    let segments = 1 + (seed as usize % 4);
    let levels: Vec<Vec<f64>> = (0..segments)
        .map(|_| (0..m).map(|_| rng.gen_range(-0.8..=0.8)).collect())
        .collect();
    let u: Vec<Vec<f64>> = (0..horizon)
        .map(|t| levels[t * segments / horizon].clone())
        .collect();
    CertInstance {
        m,
        horizon,
        gamma,
        zs,
        hints,
        ys,
        u,
    }
}

fn run_instance(inst: &CertInstance) -> Result<DvawRunRecord> {
    record_dvaw_run(
        inst.m,
        1.0,
        inst.gamma,
        SolveMode::Direct,
        &inst.zs,
        &inst.hints,
        &inst.ys,
    )
}

/// Exact-bound certification over `seeds` randomized instances.
pub fn exact_bound_suite(seeds: u64) -> Result<SuiteOutcome> {
    let mut outcome = SuiteOutcome::new("thm31");
    for seed in 0..seeds {
        let inst = random_instance(seed);
        let record = run_instance(&inst)?;
        let check = check_exact_regret_bound(&record, &inst.u)?;
        outcome.record(
            format!(
                "seed {seed}: m={} T={} gamma={:.4} lhs={:.6e} rhs={:.6e}",
                inst.m, inst.horizon, inst.gamma, check.lhs, check.rhs
            ),
            check.holds,
        );
    }
    Ok(outcome)
}

/// Path-length-bound certification over the same instances, plus the
/// undiscounted/dynamic rejection case.
pub fn path_bound_suite(seeds: u64) -> Result<SuiteOutcome> {
    let mut outcome = SuiteOutcome::new("lemma31");
    for seed in 0..seeds {
        let inst = random_instance(seed);
        let record = run_instance(&inst)?;
        let check = check_path_length_bound(&record, &inst.u, 1.0, 1.0)?;
        outcome.record(
            format!(
                "seed {seed}: m={} T={} gamma={:.4} lhs={:.6e} rhs={:.6e}",
                inst.m, inst.horizon, inst.gamma, check.lhs, check.rhs
            ),
            check.holds,
        );
    }
    // γ = 1 with positive path length must be rejected outright
    let inst = random_instance(1);
    let record = record_dvaw_run(
        inst.m,
        1.0,
        1.0,
        SolveMode::Direct,
        &inst.zs,
        &inst.hints,
        &inst.ys,
    )?;
    let mut u = inst.u.clone();
    for v in u.iter_mut().skip(inst.horizon / 2) {
        v[0] += 0.5;
    }
    let rejected = matches!(
        check_path_length_bound(&record, &u, 1.0, 1.0),
        Err(Error::ExtendedSenseViolation)
    );
    outcome.record("gamma=1 with positive path rejected".into(), rejected);
    Ok(outcome)
}

/// Reference forecaster built from scratch sums each round: weights
/// `(λI + Σ_{s<=t} z_s z_sᵀ)⁻¹ Σ_{s<t} y_s z_s`. The system is solved
/// through the eigendecomposition (`w = U Λ⁻¹ Uᵀ b`) rather than the
/// production Cholesky path, so the comparison crosses two independent
/// solver routes as well as two independent state representations.
pub fn textbook_vaw_predictions(
    m: usize,
    lambda: f64,
    zs: &[Vec<f64>],
    ys: &[f64],
) -> Result<Vec<f64>> {
    let mut a = SymMatrix::scaled_identity(m, lambda);
    let mut b = vec![0.0; m];
    let mut preds = Vec::with_capacity(ys.len());
    for (z, y) in zs.iter().zip(ys) {
        let mut a_now = a.clone();
        a_now.add_scaled_outer(z, 1.0);
        let eig = crate::linalg::sym_eig(&a_now)?;
        let mut w = vec![0.0; m];
        for (value, vector) in eig.eigenvalues.iter().zip(&eig.eigenvectors) {
            let coeff = linalg::dot(vector, &b) / value;
            for (wi, vi) in w.iter_mut().zip(vector) {
                *wi += coeff * vi;
            }
        }
        preds.push(linalg::dot(&w, z));
        a.add_scaled_outer(z, 1.0);
        for (bi, zi) in b.iter_mut().zip(z) {
            *bi += y * zi;
        }
    }
    Ok(preds)
}

pub fn vaw_equivalence_check(horizon: usize, m: usize, tol: f64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(424242);
    let zs: Vec<Vec<f64>> = (0..horizon)
        .map(|_| (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let ys: Vec<f64> = (0..horizon).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let hints = vec![0.0; horizon];
    let record = record_dvaw_run(m, 1.0, 1.0, SolveMode::Direct, &zs, &hints, &ys)?;
    let reference = textbook_vaw_predictions(m, 1.0, &zs, &ys)?;
    let worst = record
        .predictions
        .iter()
        .zip(&reference)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if worst <= tol {
        Ok(worst)
    } else {
        Err(Error::InvalidParam(format!(
            "discounted forecaster at gamma=1 drifted {worst:.3e} from the reference"
        )))
    }
}

pub fn mode_equivalence_check(horizon: usize, m: usize, tol: f64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(31337);
    let mut direct = DvawState::new(m, 1.0, 0.99, SolveMode::Direct)?;
    let mut fast = DvawState::new(m, 1.0, 0.99, SolveMode::InverseUpdate)?;
    let mut worst: f64 = 0.0;
    for t in 0..horizon {
        let z: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let hint = Hint::new(rng.gen_range(-1.0..1.0))?;
        let (p1, _) = direct.predict(&z, hint)?;
        let (p2, _) = fast.predict(&z, hint)?;
        worst = worst.max((p1 - p2).abs());
        if worst > tol {
            return Err(Error::InvalidParam(format!(
                "solve modes diverged to {worst:.3e} at round {t}"
            )));
        }
        let y = rng.gen_range(-1.0..1.0);
        direct.update(&z, y)?;
        fast.update(&z, y)?;
    }
    Ok(worst)
}

/// Structural invariants: orthonormality, truncation bounds, power
/// function behavior, grid coverage, meta regret, determinism.
pub fn invariants_suite() -> Result<SuiteOutcome> {
    let mut outcome = SuiteOutcome::new("invariants");

    outcome.record(
        "undiscounted forecaster matches reference ridge recursion (1e-10)".into(),
        vaw_equivalence_check(1000, 5, 1e-10).is_ok(),
    );
    outcome.record(
        "direct and inverse-update modes agree (1e-6)".into(),
        mode_equivalence_check(1000, 20, 1e-6).is_ok(),
    );

    // section-basis orthonormality over 50 seeded configurations
    let domain = Domain::new(2, 1.0).unwrap();
    let mut ortho_ok = true;
    for seed in 0..50u64 {
        let spec = match seed % 4 {
            0 => KernelSpec::Gaussian { sigma: 0.9 },
            1 => KernelSpec::Matern { nu: 0.5, ell: 1.0 },
            2 => KernelSpec::Matern { nu: 1.5, ell: 0.7 },
            _ => KernelSpec::Polynomial { q: 3, sigma: 1.0 },
        };
        let kernel = Kernel::new(spec)?;
        let pts = domain.sample_many(6, 700 + seed);
        let basis = sections::build_section_basis(&pts, &kernel, sections::DEFAULT_RANK_TOL_REL)?;
        let bg = basis.basis_gram();
        for i in 0..basis.rank {
            for j in 0..basis.rank {
                let target = if i == j { 1.0 } else { 0.0 };
                if (bg.get(i, j) - target).abs() >= 1e-8 {
                    ortho_ok = false;
                }
            }
        }
    }
    outcome.record("section bases orthonormal across 50 configs (1e-8)".into(), ortho_ok);

    // polynomial map reproduces the kernel exactly at the full top layer
    let poly = KernelSpec::Polynomial { q: 2, sigma: 1.0 };
    let pdom = Domain::new(2, 1.0).unwrap();
    let m_q = crate::features::layer_dimension(2, 2)?;
    let pmap = ExplicitFeatureMap::new(&poly, &pdom, m_q)?;
    let pk = Kernel::new(poly)?;
    let pts = pdom.sample_many(2000, 51);
    let mut poly_ok = true;
    for pair in pts.chunks(2) {
        let exact = pk.eval(&pair[0], &pair[1]);
        let approx = pmap.truncated_kernel(&pair[0], &pair[1])?;
        if (exact - approx).abs() > 1e-10 * exact.abs().max(1.0) {
            poly_ok = false;
        }
    }
    outcome.record("polynomial features reproduce the kernel (1e-10 rel)".into(), poly_ok);

    // truncation tail bounds dominate the empirical sup on 10^4 pairs
    let tdom = Domain::new(1, 1.0).unwrap();
    let tail_pts = tdom.sample_many(20_000, 77);
    for (name, spec) in [
        ("gaussian", KernelSpec::Gaussian { sigma: 1.0 }),
        (
            "geometric",
            KernelSpec::DotProduct {
                rule: DotProductRule::Geometric { ratio: 0.5 },
            },
        ),
    ] {
        let kernel = Kernel::new(spec)?;
        let mut ok = true;
        for degree in 2..=8u32 {
            let map = ExplicitFeatureMap::with_degree(&spec, &tdom, degree)?;
            let bound = map.truncation_error_bound(&tdom)?;
            let mut sup: f64 = 0.0;
            for pair in tail_pts.chunks(2) {
                let diff =
                    (kernel.eval(&pair[0], &pair[1]) - map.truncated_kernel(&pair[0], &pair[1])?).abs();
                sup = sup.max(diff);
            }
            if sup > bound {
                ok = false;
            }
        }
        outcome.record(format!("{name} truncation tail bound dominates empirical sup"), ok);
    }

    // power function: zero at nodes, monotone under nested refinement;
    // the rough Matern Gram stays numerically full-rank at these sizes
    let kernel = Kernel::new(KernelSpec::Matern { nu: 0.5, ell: 1.0 })?;
    let sdom = Domain::new(1, 1.0).unwrap();
    let pool = sections::sample_pool(&sdom, 400, 13);
    let (idx, _) = sections::fps_from_pool(&pool, &kernel, 16)?;
    let coarse: Vec<Vec<f64>> = idx[..8].iter().map(|&i| pool[i].clone()).collect();
    let fine: Vec<Vec<f64>> = idx.iter().map(|&i| pool[i].clone()).collect();
    let b1 = sections::build_section_basis(&coarse, &kernel, sections::DEFAULT_RANK_TOL_REL)?;
    let b2 = sections::build_section_basis(&fine, &kernel, sections::DEFAULT_RANK_TOL_REL)?;
    let nodes_ok = coarse
        .iter()
        .all(|z| sections::power_function(&b1, &kernel, z).unwrap() <= 1e-7);
    outcome.record("power function vanishes at net points (1e-7)".into(), nodes_ok);
    let monotone_ok = pool.iter().all(|p| {
        let p1 = sections::power_function(&b1, &kernel, p).unwrap();
        let p2 = sections::power_function(&b2, &kernel, p).unwrap();
        p2 <= p1 + 1e-9
    });
    outcome.record("power function monotone under net refinement".into(), monotone_ok);

    // geometric grid coverage
    let grid = DiscountGrid::build(3, 500, 2.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let coverage_ok = (0..300)
        .map(|_| rng.gen_range(grid.eta_min..=grid.eta_max))
        .all(|eta| grid.covers(eta));
    outcome.record("geometric grid covers its whole range".into(), coverage_ok);

    // ensemble meta regret against every expert on a random bounded stream,
    // and the full aggregated display in its provable regime
    let grid = DiscountGrid::build(2, 300, 2.0)?;
    let mut ve = VeDvaw::new(
        grid.clone(),
        2,
        1.0,
        1.0,
        SolveMode::Direct,
        HintPolicy::PreviousLabel,
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut zs = Vec::new();
    let mut hints = Vec::new();
    let mut ys = Vec::new();
    let mut predictions = Vec::new();
    for _ in 0..300 {
        let z = vec![rng.gen_range(-0.7..0.7), rng.gen_range(-0.7..0.7)];
        let hint = ve.next_hint();
        let y: f64 = rng.gen_range(-1.0..1.0);
        let out = ve.round(&z, hint, y)?;
        zs.push(z);
        hints.push(hint.value());
        ys.push(y);
        predictions.push(out.prediction);
    }
    outcome.record(
        "ensemble meta regret within the aggregation bound".into(),
        ve.meta_regret_excess(1.0) <= 1e-9,
    );
    let record = crate::harness::bounds::EnsembleRunRecord {
        grid,
        lambda: 1.0,
        lambda_meta: 1.0,
        m: 2,
        zs,
        hints,
        ys,
        predictions,
        meta_energy: ve.meta_feature_energy(),
    };
    let mut comparator_rng = ChaCha8Rng::seed_from_u64(7);
    let levels: Vec<Vec<f64>> = (0..4)
        .map(|_| {
            (0..2)
                .map(|_| comparator_rng.gen_range(-0.7..0.7))
                .collect()
        })
        .collect();
    let u: Vec<Vec<f64>> = (0..300).map(|t| levels[t * 4 / 300].clone()).collect();
    let display = crate::harness::bounds::check_ensemble_bound(&record, &u, 1.0, 1.0)?;
    outcome.record(
        "aggregated ensemble display holds in its provable regime".into(),
        display.holds,
    );

    // byte-identical reruns
    let cfg = crate::config::RunConfig::from_json(
        r#"{
            "environment": {
                "t": 50,
                "domain": {"dim": 1, "radius": 1.0},
                "comparator": {"representation": "coefficients", "segments": 2, "path_length": 0.5},
                "noise": {"kind": "uniform", "amplitude": 0.1},
                "seed": 99
            },
            "kernel": {"kind": "gaussian", "sigma": 1.0},
            "scheme": {"kind": "explicit", "m": 2},
            "forecaster": {"kind": "ve_dvaw"}
        }"#,
    )?;
    let a = crate::config::execute_run(&cfg)?.trace.to_csv_string();
    let b = crate::config::execute_run(&cfg)?.trace.to_csv_string();
    outcome.record("identical configs give byte-identical traces".into(), a == b);

    Ok(outcome)
}

pub fn run_suite(name: &str, seeds: u64) -> Result<SuiteOutcome> {
    match name {
        "thm31" => exact_bound_suite(seeds),
        "lemma31" => path_bound_suite(seeds),
        "invariants" => invariants_suite(),
        other => Err(Error::ConfigError(format!(
            "unknown certification suite {other}; expected thm31, lemma31, or invariants"
        ))),
    }
}
