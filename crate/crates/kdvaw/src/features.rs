//! Explicit orthonormal truncated feature maps.
//!
//! Polynomial, Gaussian, and analytic dot-product kernels admit expansions
//! `k(x,y) = Σ_α g_α(x) g_α(y)` over multi-indices α, with the `g_α`
//! orthonormal in the kernel's native space. Truncating the enumeration
//! after `m` terms gives a feature map into ℝ^m whose uniform truncation
//! error has a closed-form tail bound at full degree layers.

use crate::error::{Error, Result};
use crate::kernels::{Domain, DotProductRule, KernelSpec};
use crate::linalg;

/// Exponent vector α ∈ ℕ₀^d with `degree = Σ α_i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    pub alpha: Vec<u32>,
}

impl MultiIndex {
    pub fn degree(&self) -> u32 {
        self.alpha.iter().sum()
    }

    /// `x^α = Π x_i^{α_i}`.
    pub fn monomial(&self, x: &[f64]) -> f64 {
        self.alpha
            .iter()
            .zip(x)
            .map(|(&a, &xi)| xi.powi(a as i32))
            .product()
    }

    /// `ln α! = Σ ln α_i!`.
    fn ln_factorial(&self) -> f64 {
        self.alpha.iter().map(|&a| ln_factorial(a)).sum()
    }
}

fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Number of multi-indices with `|α| <= M` in dimension `d`: binom(d+M, M).
pub fn layer_dimension(d: usize, degree: u32) -> Result<usize> {
    let mut acc: u128 = 1;
    for i in 1..=degree as u128 {
        acc = acc
            .checked_mul(d as u128 + i)
            .ok_or_else(|| Error::Overflow(format!("binom({}+{degree}, {degree})", d)))?;
        acc /= i;
    }
    usize::try_from(acc)
        .map_err(|_| Error::Overflow(format!("binom({}+{degree}, {degree})", d)))
}

/// The unique `M` with `m_M <= m < m_{M+1}`.
pub fn degree_for_dimension(d: usize, m: usize) -> u32 {
    assert!(m >= 1);
    let mut degree = 0u32;
    loop {
        // m_{degree+1} overflowing usize implies m < m_{degree+1} trivially
        match layer_dimension(d, degree + 1) {
            Ok(next) if next <= m => degree += 1,
            _ => return degree,
        }
    }
}

/// First `m` multi-indices in graded order: nondecreasing total degree,
/// lexicographically largest first within each layer (so e.g. in d=2 the
/// degree-1 layer reads (1,0), (0,1)).
pub fn enumerate_indices(d: usize, m: usize) -> Vec<MultiIndex> {
    assert!(m >= 1);
    let mut out = Vec::with_capacity(m);
    let mut degree = 0u32;
    while out.len() < m {
        let mut layer = Vec::new();
        compositions(d, degree, &mut Vec::with_capacity(d), &mut layer);
        for alpha in layer {
            out.push(MultiIndex { alpha });
            if out.len() == m {
                break;
            }
        }
        degree += 1;
    }
    out
}

fn compositions(d: usize, total: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if d == 1 {
        prefix.push(total);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for first in (0..=total).rev() {
        prefix.push(first);
        compositions(d - 1, total - first, prefix, out);
        prefix.pop();
    }
}

/// Truncated orthonormal feature map `x ↦ (g_α(x))` for the first `m`
/// indices of the graded enumeration.
#[derive(Clone, Debug)]
pub struct ExplicitFeatureMap {
    kernel: KernelSpec,
    indices: Vec<MultiIndex>,
    coeffs: Vec<f64>,
    radius: f64,
    gaussian_envelope: Option<f64>, // 1/(2σ²) when the kernel is Gaussian
}

impl ExplicitFeatureMap {
    pub fn new(kernel: &KernelSpec, domain: &Domain, m: usize) -> Result<Self> {
        if m < 1 {
            return Err(Error::InvalidParam("feature dimension must be >= 1".into()));
        }
        let d = domain.dim;
        if let KernelSpec::Polynomial { q, .. } = *kernel {
            let m_q = layer_dimension(d, q)?;
            if m > m_q {
                return Err(Error::InvalidParam(format!(
                    "polynomial kernel of degree {q} spans only {m_q} features; requested {m}"
                )));
            }
        }
        let indices = enumerate_indices(d, m);
        let mut gaussian_envelope = None;
        // per-index coefficients, computed in the log domain
        let coeffs: Vec<f64> = match *kernel {
            KernelSpec::Polynomial { q, sigma } => indices
                .iter()
                .map(|idx| {
                    let s = idx.degree();
                    // √(q! / ((q-s)! α!)) σ^{-s}
                    (0.5 * (ln_factorial(q) - ln_factorial(q - s) - idx.ln_factorial())
                        - s as f64 * sigma.ln())
                    .exp()
                })
                .collect(),
            KernelSpec::Gaussian { sigma } => {
                gaussian_envelope = Some(1.0 / (2.0 * sigma * sigma));
                indices
                    .iter()
                    .map(|idx| {
                        // σ^{-|α|} / √(α!)
                        (-(idx.degree() as f64) * sigma.ln() - 0.5 * idx.ln_factorial()).exp()
                    })
                    .collect()
            }
            KernelSpec::DotProduct { rule } => indices
                .iter()
                .map(|idx| {
                    let s = idx.degree();
                    let ln_a = match rule {
                        DotProductRule::Geometric { ratio } => s as f64 * ratio.ln(),
                        DotProductRule::Exponential { sigma } => {
                            -ln_factorial(s) - 2.0 * s as f64 * sigma.ln()
                        }
                    };
                    // √(a_s · s! / α!)
                    (0.5 * (ln_a + ln_factorial(s) - idx.ln_factorial())).exp()
                })
                .collect(),
            KernelSpec::Matern { .. } => {
                return Err(Error::InvalidParam(
                    "matern kernels have no explicit truncated expansion here; use section subspaces"
                        .into(),
                ))
            }
        };
        Ok(ExplicitFeatureMap {
            kernel: *kernel,
            indices,
            coeffs,
            radius: domain.radius,
            gaussian_envelope,
        })
    }

    /// Full-layer constructor: all indices of degree `<= degree`.
    pub fn with_degree(kernel: &KernelSpec, domain: &Domain, degree: u32) -> Result<Self> {
        let m = layer_dimension(domain.dim, degree)?;
        Self::new(kernel, domain, m)
    }

    pub fn dim(&self) -> usize {
        self.indices.len()
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    /// Highest total degree among included indices.
    pub fn degree(&self) -> u32 {
        self.indices.last().map(|i| i.degree()).unwrap_or(0)
    }

    fn input_dim(&self) -> usize {
        self.indices[0].alpha.len()
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        let norm = linalg::norm2(x);
        if norm > self.radius * (1.0 + 1e-12) {
            return Err(Error::DomainViolation {
                norm,
                radius: self.radius,
            });
        }
        let envelope = self
            .gaussian_envelope
            .map(|c| (-c * linalg::dot(x, x)).exp())
            .unwrap_or(1.0);
        Ok(self
            .indices
            .iter()
            .zip(&self.coeffs)
            .map(|(idx, c)| c * idx.monomial(x) * envelope)
            .collect())
    }

    /// Truncated kernel `⟨Ψ(x), Ψ(y)⟩`.
    pub fn truncated_kernel(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        Ok(linalg::dot(&self.eval(x)?, &self.eval(y)?))
    }

    /// Uniform bound on `sup_{x,y} |k - k̃_M|` for a full-layer map.
    ///
    /// Requires `m = m_M` exactly; partial layers have no closed tail bound.
    pub fn truncation_error_bound(&self, domain: &Domain) -> Result<f64> {
        let d = self.input_dim();
        let m = self.dim();
        let degree = degree_for_dimension(d, m);
        let full = layer_dimension(d, degree)?;
        if full != m {
            return Err(Error::PartialLayer { m, layer: full });
        }
        let r2 = domain.radius * domain.radius;
        let big_m = degree;
        match self.kernel {
            KernelSpec::Polynomial { .. } => Ok(0.0),
            KernelSpec::Gaussian { sigma } => {
                // b^{M+1} / (M+1)!  with  b = r²/σ²
                let b = r2 / (sigma * sigma);
                let ln = (big_m as f64 + 1.0) * b.ln() - ln_factorial(big_m + 1);
                Ok(ln.exp())
            }
            KernelSpec::DotProduct { rule } => match rule {
                DotProductRule::Geometric { ratio } => {
                    let q = ratio * r2;
                    if q >= 1.0 {
                        return Err(Error::InvalidParam(format!(
                            "geometric tail diverges: ratio*r^2 = {q} >= 1"
                        )));
                    }
                    Ok(q.powi(big_m as i32 + 1) / (1.0 - q))
                }
                DotProductRule::Exponential { sigma } => {
                    // Taylor remainder of exp at b = r²/σ²: b^{M+1}/(M+1)! · e^b
                    let b = r2 / (sigma * sigma);
                    let ln = (big_m as f64 + 1.0) * b.ln() - ln_factorial(big_m + 1) + b;
                    Ok(ln.exp())
                }
            },
            KernelSpec::Matern { .. } => unreachable!("rejected at construction"),
        }
    }
}

/// Dimension rule for kernels whose subspace error decays like
/// `exp(-C₂ m^α)`: take `m(T) = ⌈(ln T / C₂)^{1/α}⌉`, then round up to the
/// next full layer so the tail bounds apply verbatim.
pub fn fast_regime_dimension(alpha: f64, c2: f64, horizon: u64, d: usize) -> usize {
    assert!(horizon >= 2 && c2 > 0.0 && alpha > 0.0);
    let raw = ((horizon as f64).ln() / c2).powf(1.0 / alpha).ceil() as usize;
    let raw = raw.max(1);
    round_up_to_full_layer(d, raw)
}

/// Smallest full-layer dimension `m_M >= m`.
pub fn round_up_to_full_layer(d: usize, m: usize) -> usize {
    let degree = degree_for_dimension(d, m);
    let full = layer_dimension(d, degree).expect("layer fits if m does");
    if full == m {
        m
    } else {
        layer_dimension(d, degree + 1).expect("next layer above a valid m")
    }
}

/// `C₂ = (ln 2 / 4) (d!)^{1/d}`, the decay constant behind the Gaussian
/// dimension rule (also valid for exponential dot-product kernels with the
/// ratio-specific constant swapped in by the caller).
pub fn gaussian_fast_regime_constant(d: usize) -> f64 {
    let ln_dfact: f64 = (2..=d).map(|k| (k as f64).ln()).sum();
    (2f64.ln() / 4.0) * (ln_dfact / d as f64).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::Kernel;

    fn domain(d: usize, r: f64) -> Domain {
        Domain::new(d, r).unwrap()
    }

    #[test]
    fn enumeration_starts_with_low_degrees() {
        let idx = enumerate_indices(2, 3);
        let alphas: Vec<Vec<u32>> = idx.into_iter().map(|i| i.alpha).collect();
        assert_eq!(alphas, vec![vec![0, 0], vec![1, 0], vec![0, 1]]);
    }

    #[test]
    fn enumeration_one_dimensional() {
        let idx = enumerate_indices(1, 4);
        let degs: Vec<u32> = idx.iter().map(|i| i.degree()).collect();
        assert_eq!(degs, vec![0, 1, 2, 3]);
    }

    #[test]
    fn enumeration_covers_full_layer_in_three_dims() {
        // brute-force: all α in ℕ₀³ with |α| <= 2
        let m = layer_dimension(3, 2).unwrap();
        assert_eq!(m, 10);
        let idx = enumerate_indices(3, m);
        let mut seen: Vec<Vec<u32>> = idx.iter().map(|i| i.alpha.clone()).collect();
        seen.sort();
        let mut expected = Vec::new();
        for a in 0..=2u32 {
            for b in 0..=2u32 {
                for c in 0..=2u32 {
                    if a + b + c <= 2 {
                        expected.push(vec![a, b, c]);
                    }
                }
            }
        }
        expected.sort();
        assert_eq!(seen, expected);
    }

    #[test]
    fn layer_dimensions() {
        assert_eq!(layer_dimension(2, 3).unwrap(), 10);
        assert_eq!(layer_dimension(1, 7).unwrap(), 8);
        assert_eq!(layer_dimension(5, 0).unwrap(), 1);
    }

    #[test]
    fn layer_dimension_overflow_is_signalled() {
        assert!(matches!(
            layer_dimension(64, 200),
            Err(Error::Overflow(_))
        ));
    }

    #[test]
    fn degree_for_dimension_boundaries() {
        assert_eq!(degree_for_dimension(2, 7), 2);
        assert_eq!(degree_for_dimension(2, 6), 2);
        assert_eq!(degree_for_dimension(1, 5), 4);
        assert_eq!(degree_for_dimension(2, 1), 0);
    }

    #[test]
    fn gaussian_features_at_origin() {
        let map = ExplicitFeatureMap::new(
            &KernelSpec::Gaussian { sigma: 1.0 },
            &domain(1, 1.0),
            3,
        )
        .unwrap();
        assert_eq!(map.eval(&[0.0]).unwrap(), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn polynomial_degree_one_reproduces_kernel_exactly() {
        let spec = KernelSpec::Polynomial { q: 1, sigma: 1.0 };
        let dom = domain(2, 1.0);
        let map = ExplicitFeatureMap::new(&spec, &dom, 3).unwrap();
        let x = [0.3, -0.2];
        let y = [0.1, 0.5];
        let fx = map.eval(&x).unwrap();
        assert!((fx[0] - 1.0).abs() < 1e-15);
        assert!((fx[1] - 0.3).abs() < 1e-15);
        assert!((fx[2] + 0.2).abs() < 1e-15);
        let k = Kernel::new(spec).unwrap();
        let approx = map.truncated_kernel(&x, &y).unwrap();
        assert!((approx - k.eval(&x, &y)).abs() < 1e-15);
    }

    #[test]
    fn exponential_dot_product_low_order_features() {
        let map = ExplicitFeatureMap::new(
            &KernelSpec::DotProduct {
                rule: DotProductRule::Exponential { sigma: 1.0 },
            },
            &domain(1, 1.0),
            2,
        )
        .unwrap();
        let f = map.eval(&[0.5]).unwrap();
        assert!((f[0] - 1.0).abs() < 1e-15);
        assert!((f[1] - 0.5).abs() < 1e-15);
        // truncated inner product never exceeds the kernel
        let k = Kernel::new(*map.kernel()).unwrap();
        assert!(map.truncated_kernel(&[0.5], &[0.5]).unwrap() <= k.eval(&[0.5], &[0.5]));
    }

    #[test]
    fn polynomial_refuses_dimension_beyond_span() {
        let spec = KernelSpec::Polynomial { q: 2, sigma: 1.0 };
        // d=2, q=2 spans binom(4,2) = 6 features
        assert!(ExplicitFeatureMap::new(&spec, &domain(2, 1.0), 7).is_err());
        assert!(ExplicitFeatureMap::new(&spec, &domain(2, 1.0), 6).is_ok());
    }

    #[test]
    fn polynomial_full_layer_reproduces_kernel_on_samples() {
        let spec = KernelSpec::Polynomial { q: 2, sigma: 1.0 };
        let dom = domain(2, 1.0);
        let m_q = layer_dimension(2, 2).unwrap();
        let map = ExplicitFeatureMap::new(&spec, &dom, m_q).unwrap();
        let k = Kernel::new(spec).unwrap();
        let pts = dom.sample_many(64, 5);
        for a in 0..32 {
            let x = &pts[a];
            let y = &pts[a + 32];
            let exact = k.eval(x, y);
            let approx = map.truncated_kernel(x, y).unwrap();
            assert!(
                (exact - approx).abs() <= 1e-10 * exact.abs().max(1.0),
                "mismatch at pair {a}: {exact} vs {approx}"
            );
        }
    }

    #[test]
    fn truncation_bounds_match_closed_forms() {
        let dom = domain(1, 1.0);
        let gauss = ExplicitFeatureMap::with_degree(
            &KernelSpec::Gaussian { sigma: 1.0 },
            &dom,
            3,
        )
        .unwrap();
        assert!((gauss.truncation_error_bound(&dom).unwrap() - 1.0 / 24.0).abs() < 1e-15);

        let poly = ExplicitFeatureMap::with_degree(
            &KernelSpec::Polynomial { q: 2, sigma: 1.0 },
            &dom,
            2,
        )
        .unwrap();
        assert_eq!(poly.truncation_error_bound(&dom).unwrap(), 0.0);

        let geo = ExplicitFeatureMap::with_degree(
            &KernelSpec::DotProduct {
                rule: DotProductRule::Geometric { ratio: 0.5 },
            },
            &dom,
            4,
        )
        .unwrap();
        assert!((geo.truncation_error_bound(&dom).unwrap() - 0.0625).abs() < 1e-15);
    }

    #[test]
    fn truncation_bound_rejects_partial_layers() {
        let dom = domain(2, 1.0);
        let map =
            ExplicitFeatureMap::new(&KernelSpec::Gaussian { sigma: 1.0 }, &dom, 5).unwrap();
        assert!(matches!(
            map.truncation_error_bound(&dom),
            Err(Error::PartialLayer { m: 5, layer: 3 })
        ));
    }

    #[test]
    fn empirical_truncation_error_below_analytic_bound() {
        let dom = domain(2, 1.0);
        for degree in [2u32, 4] {
            let spec = KernelSpec::Gaussian { sigma: 1.0 };
            let map = ExplicitFeatureMap::with_degree(&spec, &dom, degree).unwrap();
            let bound = map.truncation_error_bound(&dom).unwrap();
            let k = Kernel::new(spec).unwrap();
            let pts = dom.sample_many(400, 11);
            let mut worst: f64 = 0.0;
            for x in pts.iter().take(200) {
                for y in pts.iter().skip(200) {
                    let diff = (k.eval(x, y) - map.truncated_kernel(x, y).unwrap()).abs();
                    worst = worst.max(diff);
                }
            }
            assert!(worst <= bound, "degree {degree}: sup {worst} > bound {bound}");
        }
    }

    #[test]
    fn feature_norm_bounded_by_pointwise_kernel() {
        let dom = domain(2, 1.2);
        let specs = [
            KernelSpec::Gaussian { sigma: 0.9 },
            KernelSpec::Polynomial { q: 3, sigma: 1.0 },
            KernelSpec::DotProduct {
                rule: DotProductRule::Exponential { sigma: 1.1 },
            },
        ];
        for spec in specs {
            let map = ExplicitFeatureMap::new(&spec, &dom, 6).unwrap();
            let k = Kernel::new(spec).unwrap();
            for x in dom.sample_many(300, 23) {
                let f = map.eval(&x).unwrap();
                let n2 = linalg::dot(&f, &f);
                let kxx = k.eval(&x, &x);
                assert!(n2 <= kxx * (1.0 + 1e-12), "norm² {n2} > k(x,x) {kxx}");
            }
        }
    }

    #[test]
    fn projection_error_proxy_below_tail_bound() {
        // k(x,x) - ‖Ψ_M(x)‖² <= analytic tail bound at full layers
        let dom = domain(1, 1.0);
        let spec = KernelSpec::Gaussian { sigma: 1.0 };
        let k = Kernel::new(spec).unwrap();
        for degree in [2u32, 3, 5] {
            let map = ExplicitFeatureMap::with_degree(&spec, &dom, degree).unwrap();
            let bound = map.truncation_error_bound(&dom).unwrap();
            for x in dom.sample_many(200, 31) {
                let f = map.eval(&x).unwrap();
                let gap = k.eval(&x, &x) - linalg::dot(&f, &f);
                assert!(gap >= -1e-12);
                assert!(gap <= bound + 1e-15);
            }
        }
    }

    #[test]
    fn domain_violation_detected() {
        let map = ExplicitFeatureMap::new(
            &KernelSpec::Gaussian { sigma: 1.0 },
            &domain(1, 1.0),
            3,
        )
        .unwrap();
        assert!(matches!(
            map.eval(&[1.5]),
            Err(Error::DomainViolation { .. })
        ));
    }

    #[test]
    fn fast_regime_dimension_examples() {
        // α=1, C₂=1, T=8: ⌈ln 8⌉ = 3, already a full layer in d=1
        assert_eq!(fast_regime_dimension(1.0, 1.0, 8, 1), 3);
        // Gaussian d=1: C₂ = ln2/4, T=1000 gives ⌈39.86⌉ = 40
        let c2 = gaussian_fast_regime_constant(1);
        assert!((c2 - 2f64.ln() / 4.0).abs() < 1e-15);
        assert_eq!(fast_regime_dimension(1.0, c2, 1000, 1), 40);
    }

    #[test]
    fn fast_regime_dimension_grows_like_log_squared_in_two_dims() {
        let c2 = gaussian_fast_regime_constant(2);
        let m1 = fast_regime_dimension(0.5, c2, 1 << 8, 2);
        let m2 = fast_regime_dimension(0.5, c2, 1 << 16, 2);
        // doubling ln T should roughly quadruple m (up to layer rounding)
        let ratio = m2 as f64 / m1 as f64;
        assert!(ratio > 2.5 && ratio < 6.0, "ratio {ratio}");
    }

    #[test]
    fn round_up_reaches_full_layers() {
        assert_eq!(round_up_to_full_layer(2, 4), 6);
        assert_eq!(round_up_to_full_layer(2, 6), 6);
        assert_eq!(round_up_to_full_layer(1, 9), 9);
    }

    proptest::proptest! {
        #[test]
        fn enumeration_is_graded_with_complete_layers(
            d in 1usize..5,
            m in 1usize..60,
        ) {
            let idx = enumerate_indices(d, m);
            proptest::prop_assert_eq!(idx.len(), m);
            // degrees nondecreasing
            for w in idx.windows(2) {
                proptest::prop_assert!(w[0].degree() <= w[1].degree());
            }
            // every degree below the last one appears as a complete layer
            let last_degree = idx.last().unwrap().degree();
            if last_degree > 0 {
                let prefix = layer_dimension(d, last_degree - 1).unwrap();
                proptest::prop_assert!(prefix <= m);
                let count_below = idx.iter().filter(|i| i.degree() < last_degree).count();
                proptest::prop_assert_eq!(count_below, prefix);
            }
            // no duplicates
            let mut seen: Vec<&[u32]> = idx.iter().map(|i| i.alpha.as_slice()).collect();
            seen.sort();
            seen.dedup();
            proptest::prop_assert_eq!(seen.len(), m);
        }
    }
}
