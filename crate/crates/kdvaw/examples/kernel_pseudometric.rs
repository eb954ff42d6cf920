//! Kernel zoo: evaluations, the sup of √k(x,x), and the induced
//! pseudometric with its small-scale Matern regimes.
//!
//! `cargo run --release --example kernel_pseudometric`

use kdvaw::harness::scaling::loglog_fit;
use kdvaw::kernels::{Domain, DotProductRule, Kernel, KernelSpec};

fn main() {
    let domain = Domain::new(1, 1.0).expect("valid domain");
    let specs = [
        ("gaussian s=1", KernelSpec::Gaussian { sigma: 1.0 }),
        ("poly q=2 s=1", KernelSpec::Polynomial { q: 2, sigma: 1.0 }),
        (
            "geom r=0.5",
            KernelSpec::DotProduct {
                rule: DotProductRule::Geometric { ratio: 0.5 },
            },
        ),
        (
            "exp-dot s=1",
            KernelSpec::DotProduct {
                rule: DotProductRule::Exponential { sigma: 1.0 },
            },
        ),
        ("matern 1/2", KernelSpec::Matern { nu: 0.5, ell: 1.0 }),
        ("matern 3/2", KernelSpec::Matern { nu: 1.5, ell: 1.0 }),
        ("matern 5/2", KernelSpec::Matern { nu: 2.5, ell: 1.0 }),
    ];

    let x = [0.3];
    let y = [-0.4];
    println!(
        "{:>14} {:>10} {:>10} {:>10} {:>10}",
        "kernel", "k(x,y)", "k(x,x)", "kappa", "rho(x,y)"
    );
    for (name, spec) in specs {
        let k = Kernel::new(spec).expect("valid spec");
        println!(
            "{name:>14} {:>10.5} {:>10.5} {:>10.5} {:>10.5}",
            k.eval(&x, &y),
            k.eval(&x, &x),
            k.kappa(&domain),
            k.pseudometric(&x, &y).unwrap()
        );
    }
    println!();

    // the pseudometric scales like h^nu below smoothness 1 and like h above
    println!("small-scale exponent of rho(h) over h in [1e-4, 1e-2]:");
    println!("{:>8} {:>14} {:>10}", "nu", "fitted slope", "regime");
    for nu in [0.5, 1.5, 2.5] {
        let k = Kernel::new(KernelSpec::Matern { nu, ell: 1.0 }).unwrap();
        let hs: Vec<f64> = (0..9).map(|i| 1e-4 * 10f64.powf(i as f64 / 4.0)).collect();
        let rhos: Vec<f64> = hs
            .iter()
            .map(|&h| k.pseudometric(&[0.0], &[h]).unwrap())
            .collect();
        let fit = loglog_fit(&hs, &rhos).unwrap();
        let regime = if nu < 1.0 { "rough" } else { "smooth" };
        println!("{nu:>8.1} {:>14.4} {regime:>10}", fit.slope);
    }
}
