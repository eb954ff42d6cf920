//! Kernel-section subspaces: greedy nets, the Gram eigenbasis, and the
//! power-function diagnostic.
//!
//! Picks net points by farthest-point sampling in the kernel pseudometric,
//! orthonormalizes the spanned sections through the Gram eigendecomposition,
//! and watches the worst projection residual shrink as the net grows. Run:
//!
//! `cargo run --release --example section_subspaces`

use kdvaw::harness::scaling::loglog_fit;
use kdvaw::kernels::{Domain, Kernel, KernelSpec};
use kdvaw::sections::{
    build_section_basis, fps_from_pool, power_function, sample_pool, subspace_error_over,
    DEFAULT_RANK_TOL_REL,
};

fn main() {
    let domain = Domain::new(1, 1.0).expect("valid domain");
    let kernel = Kernel::new(KernelSpec::Matern { nu: 0.5, ell: 1.0 }).expect("valid spec");

    let max_m = 64;
    let pool = sample_pool(&domain, 50 * max_m, 17);
    let (order, report) = fps_from_pool(&pool, &kernel, max_m).expect("net");
    println!(
        "greedy net of {max_m} points over a pool of {} candidates; covering radius {:.4}",
        report.candidate_pool_size, report.covering_radius
    );
    println!();

    println!("worst projection residual over the pool as the net refines:");
    println!("{:>6} {:>8} {:>14}", "m", "rank", "max residual");
    let sizes = [4usize, 8, 16, 32, 64];
    let mut errs = Vec::new();
    for &m in &sizes {
        let pts: Vec<Vec<f64>> = order[..m].iter().map(|&i| pool[i].clone()).collect();
        let basis = build_section_basis(&pts, &kernel, DEFAULT_RANK_TOL_REL).expect("basis");
        let err = subspace_error_over(&basis, &kernel, &pool).expect("estimate");
        println!("{m:>6} {:>8} {err:>14.6}", basis.dim());
        errs.push(err);
    }
    let xs: Vec<f64> = sizes.iter().map(|&m| m as f64).collect();
    let fit = loglog_fit(&xs, &errs).unwrap();
    println!(
        "fitted decay: residual ~ m^{:.3} (rough Matern in d=1 predicts about -1/2)",
        fit.slope
    );
    println!();

    // interpolation at the nodes themselves
    let pts: Vec<Vec<f64>> = order[..8].iter().map(|&i| pool[i].clone()).collect();
    let basis = build_section_basis(&pts, &kernel, DEFAULT_RANK_TOL_REL).expect("basis");
    let worst_node = pts
        .iter()
        .map(|z| power_function(&basis, &kernel, z).unwrap())
        .fold(0.0f64, f64::max);
    println!("power function at the 8 net points: worst value {worst_node:.2e} (zero up to rounding)");

    let bg = basis.basis_gram();
    let mut worst_ortho: f64 = 0.0;
    for i in 0..basis.dim() {
        for j in 0..basis.dim() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst_ortho = worst_ortho.max((bg.get(i, j) - target).abs());
        }
    }
    println!("basis orthonormality defect: {worst_ortho:.2e}");
}
