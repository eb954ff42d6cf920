//! A small scaling study: how regret grows with the horizon and with the
//! comparator's path length.
//!
//! For a fast-regime kernel the static regret stays polylogarithmic (flat
//! in log-log coordinates against T), while the drift cost enters through
//! a fractional power of the path length. The grid here is deliberately
//! small so the whole study runs in seconds; the shape already shows. Run:
//!
//! `cargo run --release --example regret_scaling`

use kdvaw::config::{run_scaling_grid, RunConfig};

fn main() {
    let base = RunConfig::from_json(
        r#"{
            "environment": {
                "t": 256,
                "domain": {"dim": 1, "radius": 1.0},
                "comparator": {
                    "representation": "kernel_combination",
                    "segments": 2,
                    "path_length": 0.25,
                    "anchors": 8
                },
                "noise": {"kind": "uniform", "amplitude": 0.1},
                "seed": 500
            },
            "kernel": {"kind": "gaussian", "sigma": 1.0},
            "scheme": {"kind": "explicit", "m": "auto"},
            "forecaster": {"kind": "ve_dvaw", "mode": "inverse_update"}
        }"#,
    )
    .expect("valid config");

    let horizons = [256u64, 512, 1024, 2048];
    let paths = [0.0, 0.25, 1.0, 4.0];
    let report = run_scaling_grid(&base, &horizons, &paths, 3).expect("grid runs");

    println!("mean regret over 3 seeds per cell:");
    println!("{:>6} {:>8} {:>14}", "T", "P", "mean regret");
    for p in &report.points {
        println!(
            "{:>6} {:>8.2} {:>14.4}",
            p.horizon, p.path_length, p.mean_regret
        );
    }
    println!();
    for (path, fit) in &report.horizon_exponents {
        println!(
            "regret ~ T^{:.3} (+/- {:.3}) at fixed P = {path}",
            fit.slope, fit.std_err
        );
    }
    for (t, fit) in &report.path_exponents {
        println!(
            "regret ~ P^{:.3} (+/- {:.3}) at fixed T = {t}",
            fit.slope, fit.std_err
        );
    }
}
