//! The geometric discount grid and the ensemble that adapts over it.
//!
//! No single discount is right for every drift level, and the right one
//! depends on quantities unknown upfront. The ensemble runs one forecaster
//! per grid discount plus the hint expert, and aggregates their predictions
//! with an undiscounted forecaster on top. Run with:
//!
//! `cargo run --release --example discount_grid_ensemble`

use kdvaw::dvaw::SolveMode;
use kdvaw::ensemble::{DiscountGrid, HintPolicy, VeDvaw};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let m = 2;
    let horizon = 600u64;
    let grid = DiscountGrid::build(m, horizon, 2.0).expect("valid grid");

    println!("discount grid for m = {m}, T = {horizon}, base 2:");
    println!("{:>4} {:>12} {:>12}", "i", "eta", "gamma");
    for (i, (eta, gamma)) in grid.etas.iter().zip(&grid.gammas).enumerate() {
        println!("{i:>4} {eta:>12.1} {gamma:>12.6}");
    }
    println!("meta dimension (experts + hint slot): {}", grid.meta_dim());
    println!();

    let mut ve = VeDvaw::new(
        grid,
        m,
        1.0,
        1.0,
        SolveMode::Direct,
        HintPolicy::PreviousLabel,
    )
    .expect("valid ensemble");

    // weights drift slowly, then jump, then drift again
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut w = [0.5, -0.5];
    for t in 1..=horizon {
        let z = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        if t == horizon / 3 {
            w = [-0.7, 0.6];
        }
        w[0] += rng.gen_range(-0.004..0.004);
        w[1] += rng.gen_range(-0.004..0.004);
        let y = (w[0] * z[0] + w[1] * z[1] + rng.gen_range(-0.05..0.05f64)).clamp(-1.5, 1.5);
        let hint = ve.next_hint();
        ve.round(&z, hint, y).expect("round");
    }

    println!("cumulative square loss per expert vs the ensemble (T = {horizon}):");
    println!("{:>10} {:>14}", "expert", "cum loss");
    let labels: Vec<String> = std::iter::once("hint".to_string())
        .chain(ve.grid().gammas.iter().map(|g| format!("g={g:.4}")))
        .collect();
    for (label, loss) in labels.iter().zip(ve.expert_cumulative_losses()) {
        println!("{label:>10} {loss:>14.4}");
    }
    println!("{:>10} {:>14.4}", "ensemble", ve.cumulative_loss());
    println!();
    println!(
        "worst meta-regret slack against the aggregation bound: {:+.3e}",
        ve.meta_regret_excess(1.5)
    );
}
