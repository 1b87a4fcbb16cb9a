//! Model parameters, branching mechanisms Ψ and the immigration rate Φ.
//!
//! Three mechanism variants are supported. `FullStable` is the model's own
//! mechanism, `Truncated(y)` removes jumps with ζ > y and keeps their
//! compensator as extra drift, and `Tempered(θ)` is the mechanism after an
//! exponential tilt of the jump measure. Thresholds live in ζ-space: a jump
//! of the rate has size σ_Z·ζ.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::numerics::roots::increasing_root;
use crate::stable_core::{big_jump_mass, big_jump_mean, small_jump_integral, SmallJumpKernel};

/// The model quintuple (a, b, σ, σ_Z, α) and the initial rate r₀.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub a: f64,
    pub b: f64,
    pub sigma: f64,
    pub sigma_z: f64,
    pub alpha: f64,
    pub r0: f64,
}

impl ModelParams {
    pub fn new(a: f64, b: f64, sigma: f64, sigma_z: f64, alpha: f64, r0: f64) -> Result<Self> {
        let p = ModelParams { a, b, sigma, sigma_z, alpha, r0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [self.a, self.b, self.sigma, self.sigma_z, self.alpha, self.r0];
        ensure(fields.iter().all(|v| v.is_finite()), || format!("parameters must be finite: {self:?}"))?;
        ensure(self.a > 0.0, || format!("mean-reversion speed a must be positive, got {}", self.a))?;
        ensure(self.b >= 0.0, || format!("long-run level b must be nonnegative, got {}", self.b))?;
        ensure(self.sigma >= 0.0, || format!("sigma must be nonnegative, got {}", self.sigma))?;
        ensure(self.sigma_z >= 0.0, || format!("sigma_z must be nonnegative, got {}", self.sigma_z))?;
        ensure(self.r0 >= 0.0, || format!("r0 must be nonnegative, got {}", self.r0))?;
        ensure(self.alpha > 1.0 && self.alpha <= 2.0, || format!("alpha must lie in (1, 2], got {}", self.alpha))
    }

    pub fn with_alpha(self, alpha: f64) -> Self {
        ModelParams { alpha, ..self }
    }

    pub fn with_r0(self, r0: f64) -> Self {
        ModelParams { r0, ..self }
    }

    pub fn with_sigma_z(self, sigma_z: f64) -> Self {
        ModelParams { sigma_z, ..self }
    }

    /// True when the law is a plain CIR diffusion (α = 2 or σ_Z = 0).
    pub fn is_diffusion(&self) -> bool {
        self.alpha == 2.0 || self.sigma_z == 0.0
    }

    /// √(σ² + 2σ_Z²) at α = 2, σ otherwise when σ_Z = 0.
    pub fn effective_sigma(&self) -> f64 {
        if self.alpha == 2.0 {
            (self.sigma * self.sigma + 2.0 * self.sigma_z * self.sigma_z).sqrt()
        } else {
            self.sigma
        }
    }

    /// a·b, the immigration slope.
    pub fn ab(&self) -> f64 {
        self.a * self.b
    }
}

/// Which branching mechanism is in force.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum JumpSpec {
    FullStable,
    Truncated { y: f64 },
    Tempered { theta: f64 },
}

impl JumpSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            JumpSpec::FullStable => Ok(()),
            JumpSpec::Truncated { y } => ensure(y > 0.0 && y.is_finite(), || format!("truncation level must be positive, got {y}")),
            JumpSpec::Tempered { theta } => {
                ensure(theta >= 0.0 && theta.is_finite(), || format!("tempering rate must be nonnegative, got {theta}"))
            }
        }
    }
}

/// Drift (ã, b̃) of the truncated process: ã = a + σ_Z Θ(α, y), b̃ = ab/ã.
pub fn truncated_drift(params: &ModelParams, y: f64) -> Result<(f64, f64)> {
    let a_tilde = params.a + params.sigma_z * big_jump_mean(params.alpha, y)?;
    Ok((a_tilde, params.ab() / a_tilde))
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Stable { a: f64, jump: f64 },
    Truncated { a_tilde: f64, y: f64 },
    Tempered { a: f64, theta: f64, inv_cos: f64 },
}

/// A validated branching mechanism with its immigration rate.
#[derive(Debug, Clone, Copy)]
pub struct Mechanism {
    kind: Kind,
    half_s2: f64,
    sigma_z: f64,
    alpha: f64,
    ab: f64,
}

impl Mechanism {
    pub fn new(params: &ModelParams, spec: JumpSpec) -> Result<Self> {
        params.validate()?;
        spec.validate()?;
        let alpha = params.alpha;
        let kind = match spec {
            JumpSpec::FullStable => Kind::Stable {
                a: params.a,
                jump: -params.sigma_z.powf(alpha) / (FRAC_PI_2 * alpha).cos(),
            },
            JumpSpec::Truncated { y } => {
                ensure(alpha < 2.0, || "the truncated mechanism needs alpha < 2".to_string())?;
                Kind::Truncated { a_tilde: truncated_drift(params, y)?.0, y }
            }
            JumpSpec::Tempered { theta } => {
                Kind::Tempered { a: params.a, theta, inv_cos: 1.0 / (FRAC_PI_2 * alpha).cos() }
            }
        };
        Ok(Mechanism {
            kind,
            half_s2: 0.5 * params.sigma * params.sigma,
            sigma_z: params.sigma_z,
            alpha,
            ab: params.ab(),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Ψ(q); NaN only if an internal quadrature fails.
    pub fn psi(&self, q: f64) -> f64 {
        let diffusion = self.half_s2 * q * q;
        match self.kind {
            Kind::Stable { a, jump } => a * q + diffusion + jump * q.powf(self.alpha),
            Kind::Truncated { a_tilde, y } => {
                let small = small_jump_integral(SmallJumpKernel::Compensated, q * self.sigma_z, y, self.alpha)
                    .unwrap_or(f64::NAN);
                a_tilde * q + diffusion + small
            }
            Kind::Tempered { a, theta, inv_cos } => {
                let c = self.sigma_z * q;
                let al = self.alpha;
                let bracket = (c + theta).powf(al) - theta.powf(al) - al * theta.powf(al - 1.0) * c;
                a * q + diffusion - bracket * inv_cos
            }
        }
    }

    /// Ψ'(q).
    pub fn dpsi(&self, q: f64) -> f64 {
        let al = self.alpha;
        let diffusion = 2.0 * self.half_s2 * q;
        match self.kind {
            Kind::Stable { a, jump } => {
                let tail = if q > 0.0 { jump * al * q.powf(al - 1.0) } else { 0.0 };
                a + diffusion + tail
            }
            Kind::Truncated { a_tilde, y } => {
                let slope = small_jump_integral(SmallJumpKernel::Slope, q * self.sigma_z, y, al).unwrap_or(f64::NAN);
                a_tilde + diffusion + self.sigma_z * slope
            }
            Kind::Tempered { a, theta, inv_cos } => {
                let c = self.sigma_z * q;
                let d = al * self.sigma_z * ((c + theta).powf(al - 1.0) - theta.powf(al - 1.0));
                a + diffusion - d * inv_cos
            }
        }
    }

    /// Ψ''(q) for q > 0.
    pub fn d2psi(&self, q: f64) -> f64 {
        let al = self.alpha;
        let diffusion = 2.0 * self.half_s2;
        match self.kind {
            Kind::Stable { jump, .. } => diffusion + jump * al * (al - 1.0) * q.powf(al - 2.0),
            Kind::Truncated { y, .. } => {
                let curv = small_jump_integral(SmallJumpKernel::Curvature, q * self.sigma_z, y, al).unwrap_or(f64::NAN);
                diffusion + self.sigma_z * self.sigma_z * curv
            }
            Kind::Tempered { theta, inv_cos, .. } => {
                let c = self.sigma_z * q;
                let d = al * (al - 1.0) * self.sigma_z * self.sigma_z * (c + theta).powf(al - 2.0);
                diffusion - d * inv_cos
            }
        }
    }

    /// Φ(q) = a·b·q.
    pub fn phi(&self, q: f64) -> f64 {
        self.ab * q
    }

    /// Immigration slope a·b.
    pub fn ab(&self) -> f64 {
        self.ab
    }

    /// Root of Ψ(q) = level, for level > 0.
    pub fn solve_level(&self, level: f64) -> Result<f64> {
        ensure(level > 0.0, || format!("level must be positive, got {level}"))?;
        increasing_root(|q| self.psi(q) - level, Some(|q| self.dpsi(q)), 1e15)
    }
}

/// Ψ(q) for the given variant.
pub fn psi(q: f64, params: &ModelParams, spec: JumpSpec) -> Result<f64> {
    ensure(q >= 0.0, || format!("q must be nonnegative, got {q}"))?;
    let v = Mechanism::new(params, spec)?.psi(q);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::numerical(format!("branching mechanism not finite at q = {q}")))
    }
}

/// Φ(q) = a·b·q.
pub fn phi(q: f64, params: &ModelParams) -> Result<f64> {
    ensure(q >= 0.0, || format!("q must be nonnegative, got {q}"))?;
    Ok(params.ab() * q)
}

/// x₀ = q₁, the unique root of Ψ(q) = 1.
pub fn root_psi_equals_one(params: &ModelParams, spec: JumpSpec) -> Result<f64> {
    Mechanism::new(params, spec)?.solve_level(1.0)
}

/// l*_y: the root of F(q) = ν(y) - Ψ^(y)(q).
pub fn fixed_point_truncated(params: &ModelParams, y: f64) -> Result<f64> {
    let mech = Mechanism::new(params, JumpSpec::Truncated { y })?;
    mech.solve_level(big_jump_mass(params.alpha, y)?)
}

/// Roots attached to a mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechanismReport {
    pub x0: f64,
    pub v_star: f64,
    pub l_star_y: Option<f64>,
}

pub fn mechanism_report(params: &ModelParams, spec: JumpSpec, y: Option<f64>) -> Result<MechanismReport> {
    let x0 = root_psi_equals_one(params, spec)?;
    let l_star_y = y.map(|y| fixed_point_truncated(params, y)).transpose()?;
    Ok(MechanismReport { x0, v_star: x0, l_star_y })
}

/// Whether the rate can reach zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    Inaccessible,
    Accessible,
}

/// Feller-type classification of the boundary at 0.
pub fn boundary_classification(params: &ModelParams) -> Result<Boundary> {
    params.validate()?;
    let two_ab = 2.0 * params.ab();
    let inaccessible = if params.alpha == 2.0 {
        two_ab >= params.sigma.powi(2) + 2.0 * params.sigma_z.powi(2)
    } else if params.sigma == 0.0 {
        params.ab() > 0.0
    } else {
        two_ab >= params.sigma.powi(2)
    };
    Ok(if inaccessible { Boundary::Inaccessible } else { Boundary::Accessible })
}

/// Parameters and mechanism under the equivalent measure indexed by (η, θ).
///
/// a' = a - ση - ασ_Z θ^{α-1}/cos(πα/2), b' = ab/a', jump law tempered by θ.
pub fn change_of_measure(params: &ModelParams, eta: f64, theta: f64) -> Result<(ModelParams, JumpSpec)> {
    params.validate()?;
    ensure(eta.is_finite(), || format!("eta must be finite, got {eta}"))?;
    ensure(theta >= 0.0 && theta.is_finite(), || format!("theta must be nonnegative, got {theta}"))?;
    let al = params.alpha;
    let tilt = if theta > 0.0 { al * params.sigma_z * theta.powf(al - 1.0) / (FRAC_PI_2 * al).cos() } else { 0.0 };
    let a_new = params.a - params.sigma * eta - tilt;
    ensure(a_new > 0.0, || format!("measure change gives a' = {a_new} <= 0"))?;
    let out = ModelParams { a: a_new, b: params.ab() / a_new, ..*params };
    let spec = if theta > 0.0 { JumpSpec::Tempered { theta } } else { JumpSpec::FullStable };
    Ok((out, spec))
}
