//! Numerical certification of the regret bounds on random instances.
//!
//! Both the exact bound (assembled from the forecaster's own objective
//! snapshots) and the simplified path-length bound are proven statements,
//! so measured regret must stay below them on every instance; these checks
//! are the library's strongest correctness oracle. Run with:
//!
//! `cargo run --release --example certify_bounds`

use kdvaw::certify::{random_instance, run_suite};
use kdvaw::dvaw::SolveMode;
use kdvaw::harness::bounds::{
    check_exact_regret_bound, check_path_length_bound, record_dvaw_run,
};

fn main() {
    // a close look at a single instance
    let inst = random_instance(12);
    let record = record_dvaw_run(
        inst.m,
        1.0,
        inst.gamma,
        SolveMode::Direct,
        &inst.zs,
        &inst.hints,
        &inst.ys,
    )
    .expect("run");

    let exact = check_exact_regret_bound(&record, &inst.u).expect("check");
    println!(
        "instance: m={}, T={}, gamma={:.4}",
        inst.m, inst.horizon, inst.gamma
    );
    println!("measured regret {:+.6}", exact.lhs);
    println!("exact bound     {:+.6}  (holds: {})", exact.rhs, exact.holds);
    for (name, value) in &exact.terms {
        println!("    {name:>18}: {value:>12.6}");
    }
    let simplified = check_path_length_bound(&record, &inst.u, 1.0, 1.0).expect("check");
    println!(
        "simplified path-length bound {:+.6}  (holds: {})",
        simplified.rhs, simplified.holds
    );
    println!();

    // and the full sweeps the CLI `certify` subcommand runs
    for suite in ["thm31", "lemma31"] {
        let outcome = run_suite(suite, 100).expect("suite");
        println!(
            "suite {:>8}: {} checks passed, {} failed",
            outcome.name, outcome.passed, outcome.failed
        );
    }
}
