//! Spectrally positive α-stable increments and the Lévy measure
//! μ_α(dζ) = K_α ζ^{-1-α} dζ of the jump driver.
//!
//! The scale is fixed so that an increment over `dt` has Laplace transform
//! exp(-dt·q^α / cos(πα/2)). At α = 2 the driver is Brownian motion scaled by
//! √2 and has no jump measure, so the tail functions reject α = 2.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::numerics::exp_m1_plus;
use crate::numerics::quadrature::{integrate, Tolerance};

/// Tail index of the stable driver, validated to lie in (1, 2].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableSpec {
    alpha: f64,
}

impl StableSpec {
    pub fn new(alpha: f64) -> Result<Self> {
        ensure(alpha > 1.0 && alpha <= 2.0, || format!("alpha must lie in (1, 2], got {alpha}"))?;
        Ok(StableSpec { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Log-Laplace exponent of a unit-time increment: -q^α / cos(πα/2).
    pub fn laplace_exponent(&self, q: f64) -> f64 {
        if self.alpha == 2.0 {
            q * q
        } else {
            -q.powf(self.alpha) / (FRAC_PI_2 * self.alpha).cos()
        }
    }
}

/// Precomputed Chambers–Mallows–Stuck constants for S_α(1, 1, 0).
#[derive(Debug, Clone, Copy)]
pub struct StableSampler {
    alpha: f64,
    inv_alpha: f64,
    b: f64,
    s: f64,
    exponent: f64,
}

impl StableSampler {
    pub fn new(spec: StableSpec) -> Self {
        let alpha = spec.alpha;
        let t = (FRAC_PI_2 * alpha).tan();
        StableSampler {
            alpha,
            inv_alpha: 1.0 / alpha,
            b: t.atan() / alpha,
            s: (1.0 + t * t).powf(0.5 / alpha),
            exponent: (1.0 - alpha) / alpha,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// One draw of the unit-scale law; at α = 2 a N(0, 2) draw.
    pub fn sample_unit<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.alpha == 2.0 {
            let z: f64 = StandardNormal.sample(rng);
            return std::f64::consts::SQRT_2 * z;
        }
        let v = PI * (rng.random::<f64>() - 0.5);
        let w: f64 = Exp1.sample(rng);
        let arg = self.alpha * (v + self.b);
        self.s * arg.sin() / v.cos().powf(self.inv_alpha) * ((v - arg).cos() / w).powf(self.exponent)
    }

    /// Increment over `dt`: the unit draw scaled by dt^{1/α}.
    pub fn sample<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R) -> f64 {
        if dt == 0.0 {
            return 0.0;
        }
        dt.powf(self.inv_alpha) * self.sample_unit(rng)
    }
}

/// Draws Z_{t+dt} - Z_t.
pub fn sample_stable_increment<R: Rng + ?Sized>(spec: StableSpec, dt: f64, rng: &mut R) -> Result<f64> {
    ensure(dt >= 0.0 && dt.is_finite(), || format!("dt must be nonnegative, got {dt}"))?;
    Ok(StableSampler::new(spec).sample(dt, rng))
}

fn check_jump_alpha(alpha: f64) -> Result<()> {
    ensure(alpha > 1.0 && alpha < 2.0, || {
        format!("jump measure needs alpha in (1, 2), got {alpha}; alpha = 2 is the diffusion case")
    })
}

fn check_threshold(y: f64) -> Result<()> {
    ensure(y > 0.0 && !y.is_nan(), || format!("jump threshold must be positive, got {y}"))
}

/// C_α = (2/π) Γ(α) sin(πα/2).
pub fn c_alpha(alpha: f64) -> f64 {
    2.0 / PI * libm::tgamma(alpha) * (FRAC_PI_2 * alpha).sin()
}

/// Density constant K_α = -1/(cos(πα/2) Γ(-α)) = α·C_α.
pub fn density_constant(alpha: f64) -> f64 {
    alpha * c_alpha(alpha)
}

/// Lévy density μ_α(ζ) for ζ > 0.
pub fn levy_density(alpha: f64, zeta: f64) -> f64 {
    density_constant(alpha) * zeta.powf(-1.0 - alpha)
}

/// Tail mass and tail mean of μ_α above a threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevyTailQuantities {
    pub nu_y: f64,
    pub theta_y: f64,
    pub c_alpha: f64,
}

impl LevyTailQuantities {
    pub fn new(alpha: f64, y: f64) -> Result<Self> {
        Ok(LevyTailQuantities {
            nu_y: big_jump_mass(alpha, y)?,
            theta_y: big_jump_mean(alpha, y)?,
            c_alpha: c_alpha(alpha),
        })
    }
}

/// ν(y) = ∫_y^∞ μ_α(dζ) = C_α y^{-α}.
pub fn big_jump_mass(alpha: f64, y: f64) -> Result<f64> {
    check_jump_alpha(alpha)?;
    check_threshold(y)?;
    Ok(c_alpha(alpha) * y.powf(-alpha))
}

/// Θ(α, y) = ∫_y^∞ ζ μ_α(dζ) = (2/π) α Γ(α-1) sin(πα/2) y^{1-α}.
pub fn big_jump_mean(alpha: f64, y: f64) -> Result<f64> {
    check_jump_alpha(alpha)?;
    check_threshold(y)?;
    Ok(2.0 / PI * alpha * libm::tgamma(alpha - 1.0) * (FRAC_PI_2 * alpha).sin() * y.powf(1.0 - alpha))
}

/// ∫_y^∞ g(ζ) μ_α(dζ), through ζ = y t^{-1/α} which maps the tail onto (0, 1].
pub fn tail_integral<G: FnMut(f64) -> f64>(alpha: f64, y: f64, mut g: G, tol: Tolerance) -> Result<f64> {
    let nu = big_jump_mass(alpha, y)?;
    let inv = -1.0 / alpha;
    let inner = integrate(|t| if t > 0.0 { g(y * t.powf(inv)) } else { 0.0 }, 0.0, 1.0, tol)?;
    Ok(nu * inner)
}

/// Truncated integrals ∫_0^y k(cζ, ζ) μ_α(dζ) used by the truncated mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmallJumpKernel {
    /// e^{-cζ} - 1 + cζ: the compensated exponent itself.
    Compensated,
    /// ζ(1 - e^{-cζ}): derivative of the compensated exponent in c.
    Slope,
    /// ζ² e^{-cζ}: second derivative in c.
    Curvature,
}

/// ∫_0^y kernel(c, ζ) μ_α(dζ) for c ≥ 0.
///
/// A power series handles [0, ε] and adaptive quadrature in log ζ handles
/// [ε, y], with ε = min(y, 1e-3)/2 shrunk further so that cε ≤ 1/2.
pub fn small_jump_integral(kernel: SmallJumpKernel, c: f64, y: f64, alpha: f64) -> Result<f64> {
    check_jump_alpha(alpha)?;
    check_threshold(y)?;
    ensure(c >= 0.0 && c.is_finite(), || format!("exponent argument must be nonnegative, got {c}"))?;
    let k = density_constant(alpha);
    if c == 0.0 {
        return Ok(match kernel {
            SmallJumpKernel::Curvature => k * y.powf(2.0 - alpha) / (2.0 - alpha),
            _ => 0.0,
        });
    }
    let mut eps = 0.5 * y.min(1e-3);
    if c * eps > 0.5 {
        eps = 0.5 / c;
    }
    let head = k * series_head(kernel, c, eps, alpha);
    let body = if eps < y {
        let value = |zeta: f64| match kernel {
            SmallJumpKernel::Compensated => exp_m1_plus(c * zeta),
            SmallJumpKernel::Slope => -zeta * (-c * zeta).exp_m1(),
            SmallJumpKernel::Curvature => zeta * zeta * (-c * zeta).exp(),
        };
        let tol = Tolerance { abs: 1e-300, rel: 1e-14, max_intervals: 4000 };
        k * integrate(
            |u| {
                let zeta = u.exp();
                value(zeta) * zeta.powf(-alpha)
            },
            eps.ln(),
            y.ln(),
            tol,
        )?
    } else {
        0.0
    };
    Ok(head + body)
}

/// Termwise integral on [0, ε] of the kernel's Taylor series against ζ^{-1-α}.
fn series_head(kernel: SmallJumpKernel, c: f64, eps: f64, alpha: f64) -> f64 {
    // kernel = Σ coef_k (cζ)^k ζ^shift with the shift in powers of ζ
    let (k0, shift, sign) = match kernel {
        SmallJumpKernel::Compensated => (2usize, 0.0, 1.0),
        SmallJumpKernel::Slope => (1, 1.0, -1.0),
        SmallJumpKernel::Curvature => (0, 2.0, 1.0),
    };
    let x = -c * eps;
    let mut term = x.powi(k0 as i32) / (1..=k0).map(|i| i as f64).product::<f64>();
    let mut sum = 0.0;
    let mut kk = k0;
    loop {
        let p = kk as f64 + shift - alpha;
        let contrib = term / p;
        sum += contrib;
        if contrib.abs() <= 1e-17 * sum.abs() || kk > k0 + 60 {
            break;
        }
        kk += 1;
        term *= x / kk as f64;
    }
    sign * sum * eps.powf(shift - alpha)
}

/// ∫_0^y (e^{-qσ_Zζ} - 1 + qσ_Zζ) μ_α(dζ).
pub fn small_jump_compensated_integral(q: f64, y: f64, alpha: f64, sigma_z: f64) -> Result<f64> {
    ensure(q >= 0.0, || format!("q must be nonnegative, got {q}"))?;
    ensure(sigma_z >= 0.0, || format!("sigma_z must be nonnegative, got {sigma_z}"))?;
    small_jump_integral(SmallJumpKernel::Compensated, q * sigma_z, y, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::quadrature::integrate_to_infinity;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_bad_alpha_and_dt() {
        assert!(StableSpec::new(1.0).is_err());
        assert!(StableSpec::new(2.01).is_err());
        let spec = StableSpec::new(1.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_stable_increment(spec, -1.0, &mut rng).is_err());
        assert_eq!(sample_stable_increment(spec, 0.0, &mut rng).unwrap(), 0.0);
    }

    #[test]
    fn alpha_two_is_gaussian_with_variance_two() {
        let sampler = StableSampler::new(StableSpec::new(2.0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| sampler.sample(1.0, &mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 3.0 * (2.0 / n as f64).sqrt());
        // var of the sample variance for a normal: 2σ⁴/(n-1)
        assert!((var - 2.0).abs() < 3.0 * (8.0 / n as f64).sqrt());
    }

    #[test]
    fn laplace_transform_at_half() {
        let spec = StableSpec::new(1.5).unwrap();
        let sampler = StableSampler::new(spec);
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 1_000_000;
        let q = 0.5;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let v = (-q * sampler.sample(1.0, &mut rng)).exp();
            s += v;
            s2 += v * v;
        }
        let mean = s / n as f64;
        let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
        let exact = (-(0.5f64.powf(1.5)) / (0.75 * PI).cos()).exp();
        assert!((mean - exact).abs() < 3.0 * se, "{mean} vs {exact} (se {se})");
    }

    #[test]
    fn samples_have_zero_mean() {
        let sampler = StableSampler::new(StableSpec::new(1.8).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 400_000;
        let mean = (0..n).map(|_| sampler.sample(1.0, &mut rng)).sum::<f64>() / n as f64;
        // infinite variance: use a loose bound from the n^{1/α - 1} scaling
        assert!(mean.abs() < 0.05, "{mean}");
    }

    #[test]
    fn density_constant_matches_reflection_form() {
        for &alpha in &[1.1, 1.3, 1.5, 1.7, 1.95] {
            let direct = -1.0 / ((FRAC_PI_2 * alpha).cos() * libm::tgamma(-alpha));
            assert!((density_constant(alpha) / direct - 1.0).abs() < 1e-13);
            for &y in &[0.01, 0.1, 1.0, 7.0] {
                let nu = big_jump_mass(alpha, y).unwrap();
                let other = -1.0 / (alpha * (FRAC_PI_2 * alpha).cos() * libm::tgamma(-alpha)) * y.powf(-alpha);
                assert!((nu / other - 1.0).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn tail_mass_and_mean_match_quadrature() {
        let (alpha, y) = (1.5, 0.1);
        let tol = Tolerance::new(1e-14, 1e-13);
        let mass = integrate_to_infinity(|z| levy_density(alpha, z), y, tol).unwrap();
        let mean = integrate_to_infinity(|z| z * levy_density(alpha, z), y, tol).unwrap();
        assert!((big_jump_mass(alpha, y).unwrap() / mass - 1.0).abs() < 1e-8);
        assert!((big_jump_mean(alpha, y).unwrap() / mean - 1.0).abs() < 1e-8);
    }

    #[test]
    fn tail_mean_to_mass_ratio() {
        for &alpha in &[1.2, 1.5, 1.9] {
            for &y in &[0.05, 0.5, 3.0] {
                let r = big_jump_mean(alpha, y).unwrap() / (y * big_jump_mass(alpha, y).unwrap());
                assert!((r - alpha / (alpha - 1.0)).abs() < 1e-12, "{alpha} {y}: {r}");
            }
        }
    }

    #[test]
    fn tails_vanish_at_infinity() {
        assert!(big_jump_mass(1.5, 1e12).unwrap() < 1e-16);
        assert!(big_jump_mean(1.5, 1e12).unwrap() < 1e-5);
        assert!(big_jump_mass(2.0, 0.1).is_err());
    }

    #[test]
    fn small_jump_integral_against_independent_oracle() {
        // split at a different point, with a fixed many-term series below it
        let (q, y, alpha, sz): (f64, f64, f64, f64) = (1.0, 0.1, 1.5, 0.3);
        let c = q * sz;
        let k = density_constant(alpha);
        let split: f64 = 1e-4;
        let mut head = 0.0;
        let mut fact = 2.0;
        for n in 2..30 {
            if n > 2 {
                fact *= n as f64;
            }
            head += (-c).powi(n) * split.powf(n as f64 - alpha) / (fact * (n as f64 - alpha));
        }
        let tol = Tolerance::new(1e-300, 1e-12);
        let body = integrate(|z: f64| ((-c * z).exp_m1() + c * z) * z.powf(-1.0 - alpha), split, y, tol).unwrap();
        let oracle = k * (head + body);
        let v = small_jump_compensated_integral(q, y, alpha, sz).unwrap();
        assert!((v - oracle).abs() < 1e-10 * oracle.abs().max(1e-3), "{v} vs {oracle}");
    }

    #[test]
    fn small_jump_integral_approaches_full_exponent() {
        let (q, alpha, sz): (f64, f64, f64) = (2.0, 1.5, 0.3);
        let full = -(sz * q).powf(alpha) / (FRAC_PI_2 * alpha).cos();
        let v = small_jump_compensated_integral(q, 1e7, alpha, sz).unwrap();
        assert!((v / full - 1.0).abs() < 1e-3);
        assert_eq!(small_jump_compensated_integral(0.0, 0.1, alpha, sz).unwrap(), 0.0);
    }

    #[test]
    fn kernels_are_derivatives_of_each_other() {
        let (y, alpha) = (0.1, 1.5);
        let h = 1e-4;
        for &c in &[0.05, 0.5, 3.0, 40.0] {
            let d0 = (small_jump_integral(SmallJumpKernel::Compensated, c + h, y, alpha).unwrap()
                - small_jump_integral(SmallJumpKernel::Compensated, c - h, y, alpha).unwrap())
                / (2.0 * h);
            let j1 = small_jump_integral(SmallJumpKernel::Slope, c, y, alpha).unwrap();
            assert!((d0 / j1 - 1.0).abs() < 1e-6, "c = {c}");
            let d1 = (small_jump_integral(SmallJumpKernel::Slope, c + h, y, alpha).unwrap()
                - small_jump_integral(SmallJumpKernel::Slope, c - h, y, alpha).unwrap())
                / (2.0 * h);
            let j2 = small_jump_integral(SmallJumpKernel::Curvature, c, y, alpha).unwrap();
            assert!((d1 / j2 - 1.0).abs() < 1e-6, "c = {c}");
        }
    }
}
