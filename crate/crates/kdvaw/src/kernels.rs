//! Kernel evaluations, the induced pseudometric, and domain sampling.
//!
//! Four kernel families are supported: Gaussian, polynomial, analytic
//! dot-product kernels given by a coefficient rule, and Matern kernels at
//! half-integer smoothness (closed forms, no Bessel evaluation needed).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficient rule for analytic dot-product kernels `k(x,y) = Σ a_n ⟨x,y⟩ⁿ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum DotProductRule {
    /// `a_n = ratio^n`, i.e. `k(x,y) = 1 / (1 - ratio ⟨x,y⟩)`.
    Geometric { ratio: f64 },
    /// `a_n = 1 / (n! σ^{2n})`, i.e. `k(x,y) = exp(⟨x,y⟩ / σ²)`.
    Exponential { sigma: f64 },
}

impl DotProductRule {
    /// `a_n` for the rule.
    pub fn coefficient(&self, n: u32) -> f64 {
        match *self {
            DotProductRule::Geometric { ratio } => ratio.powi(n as i32),
            DotProductRule::Exponential { sigma } => {
                // log-domain to stay finite at large n
                let mut ln = -2.0 * (n as f64) * sigma.ln();
                for k in 1..=n {
                    ln -= (k as f64).ln();
                }
                ln.exp()
            }
        }
    }

    /// The generating function `f(t) = Σ a_n tⁿ` at `t`.
    pub fn generator(&self, t: f64) -> f64 {
        match *self {
            DotProductRule::Geometric { ratio } => 1.0 / (1.0 - ratio * t),
            DotProductRule::Exponential { sigma } => (t / (sigma * sigma)).exp(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    Gaussian {
        sigma: f64,
    },
    Polynomial {
        q: u32,
        sigma: f64,
    },
    DotProduct {
        #[serde(flatten)]
        rule: DotProductRule,
    },
    Matern {
        nu: f64,
        ell: f64,
    },
}

/// Matern closed forms available at half-integer smoothness.
#[derive(Clone, Copy, Debug, PartialEq)]
enum MaternForm {
    Half,
    ThreeHalves,
    FiveHalves,
    SevenHalves,
}

impl MaternForm {
    fn from_nu(nu: f64) -> Result<Self> {
        let forms = [
            (0.5, MaternForm::Half),
            (1.5, MaternForm::ThreeHalves),
            (2.5, MaternForm::FiveHalves),
            (3.5, MaternForm::SevenHalves),
        ];
        for (v, f) in forms {
            if (nu - v).abs() < 1e-12 {
                return Ok(f);
            }
        }
        Err(Error::UnsupportedNu(nu))
    }

    /// Value at scaled distance `z = √(2ν) h / ℓ`.
    fn eval(&self, z: f64) -> f64 {
        match self {
            MaternForm::Half => (-z).exp(),
            MaternForm::ThreeHalves => (1.0 + z) * (-z).exp(),
            MaternForm::FiveHalves => (1.0 + z + z * z / 3.0) * (-z).exp(),
            MaternForm::SevenHalves => {
                (1.0 + z + 2.0 * z * z / 5.0 + z * z * z / 15.0) * (-z).exp()
            }
        }
    }
}

/// A validated kernel ready for evaluation.
#[derive(Clone, Debug)]
pub struct Kernel {
    spec: KernelSpec,
    matern: Option<(MaternForm, f64)>, // (closed form, √(2ν)/ℓ)
}

impl Kernel {
    pub fn new(spec: KernelSpec) -> Result<Self> {
        let matern = match spec {
            KernelSpec::Gaussian { sigma } => {
                positive(sigma, "gaussian sigma")?;
                None
            }
            KernelSpec::Polynomial { q, sigma } => {
                positive(sigma, "polynomial sigma")?;
                if q < 1 {
                    return Err(Error::InvalidParam("polynomial degree q must be >= 1".into()));
                }
                None
            }
            KernelSpec::DotProduct { rule } => {
                match rule {
                    DotProductRule::Geometric { ratio } => positive(ratio, "geometric ratio")?,
                    DotProductRule::Exponential { sigma } => positive(sigma, "exponential sigma")?,
                }
                None
            }
            KernelSpec::Matern { nu, ell } => {
                positive(nu, "matern nu")?;
                positive(ell, "matern ell")?;
                Some((MaternForm::from_nu(nu)?, (2.0 * nu).sqrt() / ell))
            }
        };
        Ok(Kernel { spec, matern })
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        match self.spec {
            KernelSpec::Gaussian { sigma } => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-d2 / (2.0 * sigma * sigma)).exp()
            }
            KernelSpec::Polynomial { q, sigma } => {
                let ip: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
                (1.0 + ip / (sigma * sigma)).powi(q as i32)
            }
            KernelSpec::DotProduct { rule } => {
                let ip: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
                rule.generator(ip)
            }
            KernelSpec::Matern { .. } => {
                let (form, scale) = self.matern.expect("validated at construction");
                let h: f64 = x
                    .iter()
                    .zip(y)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                form.eval(scale * h)
            }
        }
    }

    /// `κ = sup_{x ∈ X} √k(x,x)` over a ball of the domain's radius.
    pub fn kappa(&self, domain: &Domain) -> f64 {
        let r = domain.radius;
        match self.spec {
            KernelSpec::Gaussian { .. } | KernelSpec::Matern { .. } => 1.0,
            KernelSpec::Polynomial { q, sigma } => {
                (1.0 + r * r / (sigma * sigma)).powf(q as f64 / 2.0)
            }
            KernelSpec::DotProduct { rule } => rule.generator(r * r).sqrt(),
        }
    }

    /// Canonical-feature distance `√(k(x,x) - 2k(x,y) + k(y,y))`.
    ///
    /// Radicands in `[-1e-12, 0)` are clamped to zero; anything more negative
    /// signals a non-PSD configuration and errors out.
    pub fn pseudometric(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let radicand = self.eval(x, x) - 2.0 * self.eval(x, y) + self.eval(y, y);
        if radicand < -1e-12 {
            return Err(Error::NegativeDiscriminant(radicand));
        }
        Ok(radicand.max(0.0).sqrt())
    }

    /// Checks the spec against a domain (dot-product convergence radius).
    pub fn validate_for_domain(&self, domain: &Domain) -> Result<()> {
        if let KernelSpec::DotProduct {
            rule: DotProductRule::Geometric { ratio },
        } = self.spec
        {
            let r2 = domain.radius * domain.radius;
            if ratio * r2 >= 1.0 {
                return Err(Error::InvalidParam(format!(
                    "geometric dot-product kernel diverges on the domain: ratio*r^2 = {} >= 1",
                    ratio * r2
                )));
            }
        }
        Ok(())
    }
}

fn positive(v: f64, name: &str) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParam(format!("{name} must be positive, got {v}")))
    }
}

/// Input domain: points live in the cube `[-r/√d, r/√d]^d`, which is
/// inscribed in the Euclidean ball of radius `r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub dim: usize,
    pub radius: f64,
}

impl Domain {
    pub fn new(dim: usize, radius: f64) -> Result<Self> {
        if dim < 1 {
            return Err(Error::InvalidParam("domain dimension must be >= 1".into()));
        }
        positive(radius, "domain radius")?;
        Ok(Domain { dim, radius })
    }

    pub fn half_width(&self) -> f64 {
        self.radius / (self.dim as f64).sqrt()
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        let w = self.half_width();
        (0..self.dim).map(|_| rng.gen_range(-w..=w)).collect()
    }

    pub fn sample_many(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| self.sample(&mut rng)).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim && crate::linalg::norm2(x) <= self.radius * (1.0 + 1e-12)
    }
}

/// Convenience wrapper matching the one-shot call style.
pub fn kernel_eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    Ok(Kernel::new(*spec)?.eval(x, y))
}

pub fn kappa(spec: &KernelSpec, domain: &Domain) -> Result<f64> {
    Ok(Kernel::new(*spec)?.kappa(domain))
}

pub fn pseudometric(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    Kernel::new(*spec)?.pseudometric(x, y)
}
