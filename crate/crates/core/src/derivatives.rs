//! Put on the running minimum of the bond yield.
//!
//! The price is only available through its Laplace transform in maturity,
//! which is inverted by Gaver–Stehfest. Every quadrature in this module uses
//! a fixed layout so that the transform is a smooth function of θ; adaptive
//! refinement would inject θ-dependent noise that the inversion amplifies
//! by roughly nine orders of magnitude.

use std::sync::OnceLock;

use num_rational::BigRational;
use num_traits::One;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::affine_engine::{bond_curve, OdeCurve};
use crate::error::{ensure, Error, Result};
use crate::mechanism::{JumpSpec, Mechanism, ModelParams};
use crate::numerics::gauss::GaussLegendre;
use crate::numerics::stehfest::Stehfest;

/// Stehfest order used for prices.
pub const STEHFEST_ORDER: usize = 14;
/// Order of the exact-arithmetic inversion self-test.
pub const SELF_TEST_ORDER: usize = 28;
/// The transform in θ of B_y(0, ·) is truncated at w = θu = this window.
pub const M_WINDOW: f64 = 46.0;
const M_PANELS: usize = 23;
const Y_NODES: usize = 64;
const LATTICE_DEPTH: f64 = 40.0;
const LATTICE_CAP: f64 = 60.0;
const TAYLOR_SWITCH: f64 = 1e-5;
const TAIL_DROP: f64 = 50.0;
const MAX_PANELS: usize = 20_000;

struct Rules {
    panel: GaussLegendre,
    cumulative: Vec<Vec<f64>>,
    strike: GaussLegendre,
}

fn rules() -> &'static Rules {
    static RULES: OnceLock<Rules> = OnceLock::new();
    RULES.get_or_init(|| {
        let panel = GaussLegendre::new(16);
        let cumulative = panel.integration_matrix();
        Rules { panel, cumulative, strike: GaussLegendre::new(Y_NODES) }
    })
}

/// Contract terms: yield tenor κ, strike K, maturity T and spot rate r0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PutSpec {
    pub kappa: f64,
    #[serde(rename = "K")]
    pub strike: f64,
    #[serde(rename = "T")]
    pub maturity: f64,
    pub r0: f64,
}

impl PutSpec {
    pub fn validate(&self) -> Result<()> {
        ensure(self.kappa > 0.0 && self.kappa.is_finite(), || format!("kappa must be positive, got {}", self.kappa))?;
        ensure(self.maturity > 0.0 && self.maturity.is_finite(), || format!("T must be positive, got {}", self.maturity))?;
        ensure(self.strike.is_finite(), || "strike must be finite".to_string())?;
        ensure(self.r0 >= 0.0 && self.r0.is_finite(), || format!("r0 must be nonnegative, got {}", self.r0))
    }

    pub fn kbar(&self, params: &ModelParams) -> Result<f64> {
        effective_strike(self.kappa, self.strike, params)
    }
}

/// K̄ = (κK − ab∫_0^κ v)/v(κ): the strike seen by the spot rate.
pub fn effective_strike(kappa: f64, strike: f64, params: &ModelParams) -> Result<f64> {
    ensure(kappa > 0.0, || format!("kappa must be positive, got {kappa}"))?;
    let c = bond_curve(params, kappa)?;
    Ok((kappa * strike - params.ab() * c.integral(kappa)) / c.v(kappa))
}

/// Inverse of [`effective_strike`].
pub fn strike_for_kbar(kbar: f64, kappa: f64, params: &ModelParams) -> Result<f64> {
    ensure(kappa > 0.0, || format!("kappa must be positive, got {kappa}"))?;
    let c = bond_curve(params, kappa)?;
    Ok((kbar * c.v(kappa) + params.ab() * c.integral(kappa)) / kappa)
}

/// The scale function H_ε(θ, ·) in logarithmic form.
///
/// After an integration by parts H_ε = ∫ G(z) e^{−xz} [x/(abz+θ) + ab/(abz+θ)²] dz
/// with G(z) = exp ∫_{q1+ε}^z (abu+θ)/(Ψ(u)−1) du, and the z-integral is
/// taken on a lattice in s = ln(z − q1). G vanishes like (z−q1)^β at q1,
/// which the lower analytic piece accounts for.
#[derive(Debug, Clone)]
pub struct HScale {
    mech: Mechanism,
    ab: f64,
    theta: f64,
    eps: f64,
    q1: f64,
    d1: f64,
    d2: f64,
    s_min: f64,
    log_g_eps: f64,
}

impl HScale {
    /// `eps` defaults to q1/10.
    pub fn new(params: &ModelParams, theta: f64, eps: Option<f64>) -> Result<Self> {
        ensure(theta > 0.0 && theta.is_finite(), || format!("theta must be positive, got {theta}"))?;
        let mech = Mechanism::new(params, JumpSpec::FullStable)?;
        let q1 = mech.solve_level(1.0)?;
        let eps = eps.unwrap_or(q1 / 10.0);
        ensure(eps > 0.0 && eps.is_finite(), || format!("eps must be positive, got {eps}"))?;
        let mut h = HScale {
            ab: params.ab(),
            theta,
            eps,
            q1,
            d1: mech.dpsi(q1),
            d2: mech.d2psi(q1),
            s_min: q1.ln() - LATTICE_DEPTH,
            log_g_eps: 0.0,
            mech,
        };
        h.log_g_eps = h.log_g_at(eps.ln());
        Ok(h)
    }

    pub fn q1(&self) -> f64 {
        self.q1
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// (abz+θ)/(Ψ(z)−1) at z = q1 + w, otherwise lost to cancellation near q1.
    fn rate(&self, w: f64) -> f64 {
        let den = if w < TAYLOR_SWITCH * self.q1 {
            w * (self.d1 + 0.5 * self.d2 * w)
        } else {
            self.mech.psi(self.q1 + w) - 1.0
        };
        (self.ab * (self.q1 + w) + self.theta) / den
    }

    fn ds_rate(&self, s: f64) -> f64 {
        let w = s.exp();
        self.rate(w) * w
    }

    /// ln G relative to its value at s_min.
    fn log_g_at(&self, s_end: f64) -> f64 {
        let gl = &rules().panel;
        let mut acc = 0.0;
        let mut s = self.s_min;
        while s < s_end {
            let next = (s + 0.5).min(s_end);
            acc += gl.integrate(s, next, |t| self.ds_rate(t));
            s = next;
        }
        acc
    }

    fn log_weight(&self, x: f64, z: f64) -> f64 {
        let c = self.ab * z + self.theta;
        (x * c + self.ab).ln() - 2.0 * c.ln()
    }

    /// ln H_ε(θ, x).
    pub fn log_h(&self, x: f64) -> Result<f64> {
        ensure(x >= 0.0 && x.is_finite(), || format!("x must be nonnegative, got {x}"))?;
        let r = rules();
        let n = r.panel.len();
        let beta = (self.ab * self.q1 + self.theta) / self.d1;
        let mut logs = vec![
            -self.log_g_eps - x * self.q1 + self.log_weight(x, self.q1) + self.s_min - (beta + 1.0).ln(),
        ];
        let mut peak = logs[0];
        let mut e = 0.0;
        let mut s = self.s_min;
        let mut f = vec![0.0; n];
        let mut panels = 0usize;
        loop {
            let z0 = self.q1 + s.exp();
            let h = if x > 0.0 { (1.0 / (x * z0).sqrt()).min(0.5) } else { 0.5 };
            let half = 0.5 * h;
            for (fk, &t) in f.iter_mut().zip(&r.panel.nodes) {
                *fk = self.ds_rate(s + half * (1.0 + t));
            }
            let mut panel_max = f64::NEG_INFINITY;
            let mut first = 0.0;
            let mut last = 0.0;
            for j in 0..n {
                let sj = s + half * (1.0 + r.panel.nodes[j]);
                let ej = e + half * r.cumulative[j].iter().zip(&f).map(|(a, b)| a * b).sum::<f64>();
                let zj = self.q1 + sj.exp();
                let term = ej - self.log_g_eps - x * zj + self.log_weight(x, zj) + sj + (half * r.panel.weights[j]).ln();
                if !term.is_finite() {
                    return Err(Error::numerical(format!("non-finite H integrand at z = {zj}")));
                }
                if j == 0 {
                    first = term;
                }
                last = term;
                panel_max = panel_max.max(term);
                logs.push(term);
            }
            e += half * r.panel.weights.iter().zip(&f).map(|(a, b)| a * b).sum::<f64>();
            s += h;
            peak = peak.max(panel_max);
            if panel_max < peak - TAIL_DROP && last < first {
                break;
            }
            panels += 1;
            if s > LATTICE_CAP || panels > MAX_PANELS {
                return Err(Error::numerical(format!(
                    "H integral does not converge at x = {x}: integrand still {:.3e} of its peak at z = {:.3e}",
                    (last - peak).exp(),
                    self.q1 + s.exp()
                )));
            }
        }
        Ok(log_sum_exp(&logs))
    }

    pub fn value(&self, x: f64) -> Result<f64> {
        Ok(self.log_h(x)?.exp())
    }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// H_ε(θ, x).
pub fn h_scale(theta: f64, x: f64, eps: f64, params: &ModelParams) -> Result<f64> {
    HScale::new(params, theta, Some(eps))?.value(x)
}

/// E_{r0}[exp(−θΘ_y − ∫_0^{Θ_y} r)] for the first entrance time Θ_y of [0, y].
pub fn hitting_time_laplace(r0: f64, y: f64, theta: f64, params: &ModelParams) -> Result<f64> {
    ensure(y > 0.0 && y < r0, || format!("need 0 < y < r0, got y = {y}, r0 = {r0}"))?;
    let h = HScale::new(params, theta, None)?;
    Ok((h.log_h(r0)? - h.log_h(y)?).exp().min(1.0))
}

fn m_from_curve(curve: &OdeCurve, theta: f64, y: f64) -> f64 {
    let gl = &rules().panel;
    let width = M_WINDOW / M_PANELS as f64;
    let mut acc = 0.0;
    for k in 0..M_PANELS {
        let lo = k as f64 * width;
        acc += gl.integrate(lo, lo + width, |w| (-w).exp() * curve.laplace(y, w / theta));
    }
    acc / theta
}

/// M(θ, y) = ∫_0^∞ e^{−θu} B_y(0, u) du.
pub fn bond_transform_m(theta: f64, y: f64, params: &ModelParams) -> Result<f64> {
    ensure(theta > 0.0 && theta.is_finite(), || format!("theta must be positive, got {theta}"))?;
    ensure(y >= 0.0, || format!("y must be nonnegative, got {y}"))?;
    let curve = bond_curve(params, M_WINDOW / theta)?;
    Ok(m_from_curve(&curve, theta, y))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PutDiagnostics {
    pub q1: f64,
    pub eps: f64,
    pub nodes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stehfest_order: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower_order_price: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PutLaplace {
    pub laplace_value: f64,
    pub theta: f64,
    pub kappa: f64,
    #[serde(rename = "K")]
    pub strike: f64,
    pub kbar: f64,
    pub degenerate: bool,
    pub diagnostics: PutDiagnostics,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PutPrice {
    pub price: f64,
    #[serde(rename = "T")]
    pub maturity: f64,
    pub kappa: f64,
    #[serde(rename = "K")]
    pub strike: f64,
    pub kbar: f64,
    pub degenerate: bool,
    pub diagnostics: PutDiagnostics,
}

/// Precomputed pieces of the transform shared by all θ ≥ `theta_min`.
#[derive(Debug, Clone)]
pub struct PutTransform {
    params: ModelParams,
    kappa: f64,
    strike: f64,
    r0: f64,
    kbar: f64,
    v_kappa: f64,
    theta_min: f64,
    curve: OdeCurve,
}

impl PutTransform {
    pub fn new(kappa: f64, strike: f64, r0: f64, params: &ModelParams, theta_min: f64) -> Result<Self> {
        params.validate()?;
        ensure(kappa > 0.0 && kappa.is_finite(), || format!("kappa must be positive, got {kappa}"))?;
        ensure(r0 >= 0.0 && r0.is_finite(), || format!("r0 must be nonnegative, got {r0}"))?;
        ensure(theta_min > 0.0, || format!("theta must be positive, got {theta_min}"))?;
        let curve = bond_curve(params, kappa.max(M_WINDOW / theta_min))?;
        let v_kappa = curve.v(kappa);
        let kbar = (kappa * strike - params.ab() * curve.integral(kappa)) / v_kappa;
        Ok(PutTransform { params: *params, kappa, strike, r0, kbar, v_kappa, theta_min, curve })
    }

    pub fn kbar(&self) -> f64 {
        self.kbar
    }

    /// L_θ = (v(κ)/κ) ∫_0^{K̄} [H(θ,r0)/H(θ,y)] M(θ, y∧r0) dy.
    ///
    /// Above r0 the entrance is immediate and the state is still r0.
    pub fn evaluate(&self, theta: f64) -> Result<PutLaplace> {
        ensure(theta >= self.theta_min * (1.0 - 1e-12), || {
            format!("theta {theta} below the prepared minimum {}", self.theta_min)
        })?;
        let h = HScale::new(&self.params, theta, None)?;
        let mut out = PutLaplace {
            laplace_value: 0.0,
            theta,
            kappa: self.kappa,
            strike: self.strike,
            kbar: self.kbar,
            degenerate: self.kbar <= 0.0,
            diagnostics: PutDiagnostics { q1: h.q1(), eps: h.eps(), nodes: 0, stehfest_order: None, lower_order_price: None },
        };
        if out.degenerate {
            return Ok(out);
        }
        let upper = self.kbar.min(self.r0);
        let mut acc = 0.0;
        if upper > 0.0 {
            let log_h_r0 = h.log_h(self.r0)?;
            for (y, wt) in rules().strike.mapped_nodes(0.0, upper) {
                let ratio = (log_h_r0 - h.log_h(y)?).exp().min(1.0);
                acc += wt * ratio * m_from_curve(&self.curve, theta, y);
            }
            out.diagnostics.nodes = Y_NODES;
        }
        if self.kbar > self.r0 {
            acc += (self.kbar - self.r0) * m_from_curve(&self.curve, theta, self.r0);
            out.diagnostics.nodes += 1;
        }
        out.laplace_value = self.v_kappa / self.kappa * acc;
        Ok(out)
    }
}

/// ∫_0^∞ e^{−θT} P(T) dT.
pub fn put_laplace(theta: f64, kappa: f64, strike: f64, r0: f64, params: &ModelParams) -> Result<PutLaplace> {
    ensure(theta > 0.0 && theta.is_finite(), || format!("theta must be positive, got {theta}"))?;
    PutTransform::new(kappa, strike, r0, params, theta)?.evaluate(theta)
}

/// Put price at maturity T by Gaver–Stehfest inversion of [`put_laplace`].
///
/// The order-12 estimate reuses the first twelve transform values; a spread
/// above 10% between the two is reported as an inversion failure.
pub fn put_price(maturity: f64, kappa: f64, strike: f64, r0: f64, params: &ModelParams) -> Result<PutPrice> {
    PutSpec { kappa, strike, maturity, r0 }.validate()?;
    let st = Stehfest::new(STEHFEST_ORDER)?;
    let thetas = st.abscissae(maturity);
    let transform = PutTransform::new(kappa, strike, r0, params, thetas[0])?;
    let mut out = PutPrice {
        price: 0.0,
        maturity,
        kappa,
        strike,
        kbar: transform.kbar(),
        degenerate: transform.kbar() <= 0.0,
        diagnostics: PutDiagnostics { q1: 0.0, eps: 0.0, nodes: 0, stehfest_order: Some(STEHFEST_ORDER), lower_order_price: None },
    };
    let results: Vec<PutLaplace> = thetas.par_iter().map(|&t| transform.evaluate(t)).collect::<Result<_>>()?;
    out.diagnostics.q1 = results[0].diagnostics.q1;
    out.diagnostics.eps = results[0].diagnostics.eps;
    out.diagnostics.nodes = results[0].diagnostics.nodes;
    if out.degenerate {
        out.diagnostics.lower_order_price = Some(0.0);
        return Ok(out);
    }
    let values: Vec<f64> = results.iter().map(|r| r.laplace_value).collect();
    let price = st.combine(&values, maturity)?;
    let lower = Stehfest::new(STEHFEST_ORDER - 2)?.combine(&values, maturity)?;
    out.price = price;
    out.diagnostics.lower_order_price = Some(lower);
    if !price.is_finite() || (price - lower).abs() > 0.1 * price.abs() + 1e-10 {
        return Err(Error::numerical(format!(
            "Stehfest inversion unstable: order {STEHFEST_ORDER} gives {price:.6e}, order {} gives {lower:.6e}",
            STEHFEST_ORDER - 2
        )));
    }
    Ok(out)
}

impl PutPrice {
    pub fn spec(&self, r0: f64) -> PutSpec {
        PutSpec { kappa: self.kappa, strike: self.strike, maturity: self.maturity, r0 }
    }
}

/// Recovers e^{−cT} from 1/(θ+c) with order-28 weights and exact arithmetic.
pub fn inversion_self_test(c: f64, maturity: f64) -> Result<f64> {
    ensure(maturity > 0.0, || format!("T must be positive, got {maturity}"))?;
    let c = BigRational::from_float(c).ok_or_else(|| Error::invalid("c must be finite"))?;
    Ok(Stehfest::new(SELF_TEST_ORDER)?.invert_exact(|p| BigRational::one() / (p + &c), maturity))
}
