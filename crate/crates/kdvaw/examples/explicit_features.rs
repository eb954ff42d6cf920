//! Explicit orthonormal truncated feature maps and their tail bounds.
//!
//! Polynomial kernels are reproduced exactly once all degree layers are
//! included. Gaussian and analytic dot-product kernels truncate with an
//! exponentially small uniform error, and the analytic tail bound can be
//! compared against the empirical worst case over sampled pairs. Run with:
//!
//! `cargo run --release --example explicit_features`

use kdvaw::features::{
    fast_regime_dimension, gaussian_fast_regime_constant, layer_dimension, ExplicitFeatureMap,
};
use kdvaw::kernels::{Domain, Kernel, KernelSpec};

fn main() {
    let domain = Domain::new(1, 1.0).expect("valid domain");

    // exactness: polynomial kernel of degree q has a finite feature space
    let poly = KernelSpec::Polynomial { q: 3, sigma: 1.0 };
    let m_q = layer_dimension(1, 3).unwrap();
    let map = ExplicitFeatureMap::new(&poly, &domain, m_q).unwrap();
    let kernel = Kernel::new(poly).unwrap();
    let mut worst: f64 = 0.0;
    let pts = domain.sample_many(200, 3);
    for pair in pts.chunks(2) {
        let exact = kernel.eval(&pair[0], &pair[1]);
        let truncated = map.truncated_kernel(&pair[0], &pair[1]).unwrap();
        worst = worst.max((exact - truncated).abs());
    }
    println!("polynomial q=3: {m_q} features reproduce the kernel, worst gap {worst:.2e}");
    println!();

    // Gaussian truncation: analytic tail bound vs empirical sup
    let gauss = KernelSpec::Gaussian { sigma: 1.0 };
    let gk = Kernel::new(gauss).unwrap();
    println!("gaussian truncation on [-1, 1], sigma = 1:");
    println!("{:>6} {:>6} {:>14} {:>14}", "M", "m_M", "tail bound", "empirical sup");
    let pairs = domain.sample_many(2000, 9);
    for degree in 1..=6u32 {
        let map = ExplicitFeatureMap::with_degree(&gauss, &domain, degree).unwrap();
        let bound = map.truncation_error_bound(&domain).unwrap();
        let mut sup: f64 = 0.0;
        for pair in pairs.chunks(2) {
            let diff = gk.eval(&pair[0], &pair[1]) - map.truncated_kernel(&pair[0], &pair[1]).unwrap();
            sup = sup.max(diff.abs());
        }
        println!("{degree:>6} {:>6} {bound:>14.6e} {sup:>14.6e}", map.dim());
    }
    println!();

    // the dimension rule: how many features a horizon warrants
    let c2 = gaussian_fast_regime_constant(1);
    println!("fast-regime dimension rule for the gaussian kernel in d = 1:");
    println!("{:>8} {:>8}", "T", "m(T)");
    for t in [100u64, 1000, 10_000, 100_000] {
        println!("{t:>8} {:>8}", fast_regime_dimension(1.0, c2, t, 1));
    }
}
