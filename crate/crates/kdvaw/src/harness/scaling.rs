//! Log-log exponent fits for regret scaling studies.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordinary least squares on `(ln x, ln y)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub std_err: f64,
    pub points: usize,
}

pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidParam("fit needs matching x/y lengths".into()));
    }
    if xs.len() < 3 {
        return Err(Error::InvalidParam(format!(
            "exponent fit needs at least 3 points, got {}",
            xs.len()
        )));
    }
    if xs.iter().chain(ys).any(|&v| v.is_nan() || v <= 0.0) {
        return Err(Error::InvalidParam(
            "log-log fit needs strictly positive coordinates".into(),
        ));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 0.0 {
        return Err(Error::InvalidParam("fit needs at least two distinct x values".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let dof = (lx.len().max(3) - 2) as f64;
    let std_err = (ss_res / dof / sxx).sqrt();
    Ok(FitResult {
        slope,
        intercept,
        std_err,
        points: xs.len(),
    })
}

/// One aggregated cell of a scaling study.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub horizon: u64,
    pub path_length: f64,
    pub mean_regret: f64,
    pub seeds: usize,
}

/// Fitted exponents of mean regret against the horizon (per fixed path
/// length) and against the path length (per fixed horizon).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalingReport {
    pub points: Vec<ScalingPoint>,
    /// (fixed path length, fit of regret vs T)
    pub horizon_exponents: Vec<(f64, FitResult)>,
    /// (fixed horizon, fit of regret vs P)
    pub path_exponents: Vec<(u64, FitResult)>,
}

/// Floor applied before taking logs so that near-zero (or slightly
/// negative) measured regret does not blow up a fit.
pub const REGRET_LOG_FLOOR: f64 = 1e-6;

/// Groups per-run results into cells and fits both exponent directions.
/// `results`: one (horizon, path_length, regret) per run; seeds collapse
/// into the mean of their cell.
pub fn build_scaling_report(results: &[(u64, f64, f64)]) -> ScalingReport {
    let mut cells: Vec<(u64, f64, f64, usize)> = Vec::new();
    for &(t, p, regret) in results {
        match cells
            .iter_mut()
            .find(|(ct, cp, _, _)| *ct == t && (*cp - p).abs() < 1e-12)
        {
            Some((_, _, sum, count)) => {
                *sum += regret;
                *count += 1;
            }
            None => cells.push((t, p, regret, 1)),
        }
    }
    let points: Vec<ScalingPoint> = cells
        .iter()
        .map(|&(t, p, sum, count)| ScalingPoint {
            horizon: t,
            path_length: p,
            mean_regret: sum / count as f64,
            seeds: count,
        })
        .collect();

    let mut horizon_exponents = Vec::new();
    let mut fixed_paths: Vec<f64> = points.iter().map(|p| p.path_length).collect();
    fixed_paths.sort_by(|a, b| a.partial_cmp(b).unwrap());
    fixed_paths.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    for p in fixed_paths {
        let group: Vec<&ScalingPoint> = points
            .iter()
            .filter(|pt| (pt.path_length - p).abs() < 1e-12)
            .collect();
        if group.len() >= 3 {
            let xs: Vec<f64> = group.iter().map(|pt| pt.horizon as f64).collect();
            let ys: Vec<f64> = group
                .iter()
                .map(|pt| pt.mean_regret.max(REGRET_LOG_FLOOR))
                .collect();
            if let Ok(fit) = loglog_fit(&xs, &ys) {
                horizon_exponents.push((p, fit));
            }
        }
    }

    let mut path_exponents = Vec::new();
    let mut fixed_ts: Vec<u64> = points.iter().map(|p| p.horizon).collect();
    fixed_ts.sort_unstable();
    fixed_ts.dedup();
    for t in fixed_ts {
        let group: Vec<&ScalingPoint> = points
            .iter()
            .filter(|pt| pt.horizon == t && pt.path_length > 0.0)
            .collect();
        if group.len() >= 3 {
            let xs: Vec<f64> = group.iter().map(|pt| pt.path_length).collect();
            let ys: Vec<f64> = group
                .iter()
                .map(|pt| pt.mean_regret.max(REGRET_LOG_FLOOR))
                .collect();
            if let Ok(fit) = loglog_fit(&xs, &ys) {
                path_exponents.push((t, fit));
            }
        }
    }

    ScalingReport {
        points,
        horizon_exponents,
        path_exponents,
    }
}

impl ScalingReport {
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str("T,P,mean_regret,seeds\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{:.6},{:.10e},{}\n",
                p.horizon, p.path_length, p.mean_regret, p.seeds
            ));
        }
        for (p, fit) in &self.horizon_exponents {
            out.push_str(&format!(
                "# regret ~ T^{:.4} (+/- {:.4}) at P = {:.4} over {} points\n",
                fit.slope, fit.std_err, p, fit.points
            ));
        }
        for (t, fit) in &self.path_exponents {
            out.push_str(&format!(
                "# regret ~ P^{:.4} (+/- {:.4}) at T = {} over {} points\n",
                fit.slope, fit.std_err, t, fit.points
            ));
        }
        out
    }
}
