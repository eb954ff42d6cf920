//! Plain discounted forecaster on a drifting linear stream.
//!
//! The target weights jump halfway through the stream. A discount close to
//! one averages over the whole history and is slow to react; a smaller
//! discount forgets faster and tracks the jump. Run with:
//!
//! `cargo run --release --example dvaw_forecaster`

use kdvaw::dvaw::{DvawState, Hint, SolveMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let horizon = 400;
    let m = 3;
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    // piecewise target: w jumps at t = 200
    let w_early = [0.8, -0.5, 0.2];
    let w_late = [-0.6, 0.4, 0.7];

    let gammas = [1.0, 0.99, 0.9];
    let mut states: Vec<DvawState> = gammas
        .iter()
        .map(|&g| DvawState::new(m, 1.0, g, SolveMode::Direct).expect("valid params"))
        .collect();
    let mut losses = vec![0.0f64; gammas.len()];
    let mut last_y = 0.0;

    for t in 1..=horizon {
        let z: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let w_true = if t <= horizon / 2 { &w_early } else { &w_late };
        let clean: f64 = z.iter().zip(w_true).map(|(a, b)| a * b).sum();
        let y = clean + rng.gen_range(-0.1..0.1);

        let hint = Hint::new(last_y).unwrap();
        for (state, loss) in states.iter_mut().zip(&mut losses) {
            let (pred, _) = state.predict(&z, hint).unwrap();
            *loss += 0.5 * (y - pred) * (y - pred);
            state.update(&z, y).unwrap();
        }
        last_y = y;
    }

    println!("cumulative square loss after a mid-stream jump (T = {horizon}):");
    println!("{:>8} {:>14}", "gamma", "cum loss");
    for (g, loss) in gammas.iter().zip(&losses) {
        println!("{g:>8.2} {loss:>14.4}");
    }
    println!();
    println!("the undiscounted forecaster pays for averaging across the jump;");
    println!("a moderate discount tracks the new regime much sooner.");
}
