//! Dyadic aggregation over subspace dimensions for the slow regime.
//!
//! When the subspace error decays only polynomially in the dimension (the
//! rough Matern case), the best dimension depends on the unknown drift of
//! the target, so it has to be learned: one ensemble runs per dyadic
//! dimension and a top-level undiscounted forecaster aggregates them. Run:
//!
//! `cargo run --release --example dyadic_slow_regime`

use kdvaw::config::{execute_run, RunConfig};

fn main() {
    let config = r#"{
        "environment": {
            "t": 512,
            "domain": {"dim": 1, "radius": 1.0},
            "comparator": {
                "representation": "kernel_combination",
                "segments": 4,
                "path_length": 1.0,
                "anchors": 10
            },
            "noise": {"kind": "uniform", "amplitude": 0.1},
            "seed": 11
        },
        "kernel": {"kind": "matern", "nu": 0.5, "ell": 1.0},
        "scheme": {"kind": "dyadic", "maps": "sections", "pool_factor": 20},
        "forecaster": {"kind": "dyadic", "lambda": 1.0, "hint_policy": "previous_label"}
    }"#;

    let cfg = RunConfig::from_json(config).expect("valid config");
    let outcome = execute_run(&cfg).expect("run completes");
    println!(
        "dyadic run on a drifting rough-Matern target (T = {}, path length = {:.2}):",
        outcome.summary.horizon, outcome.summary.path_length
    );
    println!(
        "  child dimensions aggregated: {} (largest subspace {})",
        outcome.summary.n, outcome.summary.m
    );
    println!("  final dynamic regret: {:.4}", outcome.summary.final_regret);
    println!();
    println!("last rounds of the trace (t, y, prediction, cumulative regret):");
    for row in outcome.trace.rows.iter().rev().take(5).rev() {
        println!(
            "  {:>4} {:>8.4} {:>8.4} {:>10.4}",
            row.t, row.y, row.yhat, row.cum_regret
        );
    }
}
