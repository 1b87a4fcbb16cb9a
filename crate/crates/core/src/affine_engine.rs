//! Generalized Riccati curves v' = θ - Ψ(v) and the affine quantities built
//! on them: joint Laplace transforms, zero-coupon bonds, yields and the
//! stationary law.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::mechanism::{JumpSpec, Mechanism, ModelParams};
use crate::numerics::ode::{solve, DenseSolution, OdeOptions};
use crate::numerics::quadrature::{integrate, Tolerance};

/// What generated an [`OdeCurve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveMeta {
    pub xi: f64,
    pub theta: f64,
    pub spec: JumpSpec,
}

/// Dense solution of v' = θ - Ψ(v), v(0) = ξ, with its running integral.
#[derive(Debug, Clone)]
pub struct OdeCurve {
    solution: Option<DenseSolution>,
    horizon: f64,
    ab: f64,
    pub meta: CurveMeta,
}

impl OdeCurve {
    /// v(t); clamped to the horizon.
    pub fn v(&self, t: f64) -> f64 {
        match &self.solution {
            Some(s) => s.eval(t),
            None => self.meta.xi,
        }
    }

    /// ∫_0^t v(s) ds.
    pub fn integral(&self, t: f64) -> f64 {
        match &self.solution {
            Some(s) => s.integral(t),
            None => 0.0,
        }
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Solver grid.
    pub fn grid(&self) -> Vec<f64> {
        match &self.solution {
            Some(s) => s.nodes().to_vec(),
            None => vec![0.0],
        }
    }

    /// exp(-x v(t) - ab ∫_0^t v).
    pub fn laplace(&self, x: f64, t: f64) -> f64 {
        (-x * self.v(t) - self.ab * self.integral(t)).exp()
    }

    /// Writes the curve as CSV with header `t,v` on the solver grid.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "v"])?;
        for t in self.grid() {
            w.write_record([t.to_string(), self.v(t).to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Solves the Riccati ODE with absolute/relative tolerance 1e-12/1e-10.
pub fn solve_v(xi: f64, theta: f64, horizon: f64, params: &ModelParams, spec: JumpSpec) -> Result<OdeCurve> {
    ensure(xi >= 0.0 && xi.is_finite(), || format!("xi must be nonnegative, got {xi}"))?;
    ensure(theta >= 0.0 && theta.is_finite(), || format!("theta must be nonnegative, got {theta}"))?;
    ensure(horizon > 0.0 && horizon.is_finite(), || format!("horizon must be positive, got {horizon}"))?;
    let mech = Mechanism::new(params, spec)?;
    let meta = CurveMeta { xi, theta, spec };
    if xi == 0.0 && theta == 0.0 {
        return Ok(OdeCurve { solution: None, horizon, ab: params.ab(), meta });
    }
    let solution = solve(|_, v| theta - mech.psi(v.max(0.0)), 0.0, xi, horizon, OdeOptions::default())?;
    Ok(OdeCurve { solution: Some(solution), horizon, ab: params.ab(), meta })
}

/// The bond curve: v' = 1 - Ψ(v), v(0) = 0, under the model's own mechanism.
pub fn bond_curve(params: &ModelParams, horizon: f64) -> Result<OdeCurve> {
    solve_v(0.0, 1.0, horizon, params, JumpSpec::FullStable)
}

/// E_x[exp(-ξ r_t - θ ∫_0^t r_s ds)] = exp(-x v(t) - ∫_0^t Φ(v)).
pub fn joint_laplace(x: f64, t: f64, xi: f64, theta: f64, params: &ModelParams, spec: JumpSpec) -> Result<f64> {
    ensure(x >= 0.0, || format!("initial value must be nonnegative, got {x}"))?;
    ensure(t >= 0.0, || format!("time must be nonnegative, got {t}"))?;
    if t == 0.0 {
        return Ok((-xi * x).exp());
    }
    Ok(solve_v(xi, theta, t, params, spec)?.laplace(x, t))
}

/// Zero-coupon bond B(t, T) given r_t.
pub fn bond_price(t: f64, maturity: f64, r_t: f64, params: &ModelParams) -> Result<f64> {
    ensure(maturity >= t, || format!("maturity {maturity} precedes t = {t}"))?;
    ensure(r_t >= 0.0, || format!("rate must be nonnegative, got {r_t}"))?;
    let tau = maturity - t;
    if tau == 0.0 {
        return Ok(1.0);
    }
    Ok(bond_curve(params, tau)?.laplace(r_t, tau))
}

/// Yield of tenor κ: (r_t v(κ) + ab ∫_0^κ v)/κ. Time-homogeneous, so `t`
/// only fixes the observation date.
pub fn bond_yield(_t: f64, kappa: f64, r_t: f64, params: &ModelParams) -> Result<f64> {
    ensure(kappa > 0.0, || format!("tenor must be positive, got {kappa}"))?;
    ensure(r_t >= 0.0, || format!("rate must be nonnegative, got {r_t}"))?;
    let c = bond_curve(params, kappa)?;
    Ok((r_t * c.v(kappa) + params.ab() * c.integral(kappa)) / kappa)
}

/// Laplace transform exp(-∫_0^p Φ(q)/Ψ(q) dq) of the stationary law.
pub fn stationary_laplace(p: f64, params: &ModelParams, spec: JumpSpec) -> Result<f64> {
    ensure(p >= 0.0 && p.is_finite(), || format!("p must be nonnegative, got {p}"))?;
    let mech = Mechanism::new(params, spec)?;
    if p == 0.0 {
        return Ok(1.0);
    }
    let ab = params.ab();
    let slope0 = mech.dpsi(0.0);
    let integrand = |q: f64| if q > 0.0 { ab * q / mech.psi(q) } else { ab / slope0 };
    let exponent = integrate(integrand, 0.0, p, Tolerance::new(1e-15, 1e-13))?;
    if !exponent.is_finite() {
        return Err(Error::numerical("stationary exponent not finite"));
    }
    Ok((-exponent).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanism::root_psi_equals_one;
    use proptest::prelude::*;

    fn fig3(alpha: f64) -> ModelParams {
        ModelParams::new(0.1, 0.3, 0.1, 0.3, alpha, 0.05).unwrap()
    }

    /// Classical CIR bond B(τ) = A(τ) e^{-r C(τ)} with volatility s.
    fn cir_bond(a: f64, b: f64, s: f64, r: f64, tau: f64) -> (f64, f64) {
        let g = (a * a + 2.0 * s * s).sqrt();
        let e = (g * tau).exp() - 1.0;
        let den = (g + a) * e + 2.0 * g;
        let c = 2.0 * e / den;
        let big_a = (2.0 * g * ((a + g) * tau / 2.0).exp() / den).powf(2.0 * a * b / (s * s));
        (big_a * (-r * c).exp(), c)
    }

    #[test]
    fn trivial_curves() {
        let p = fig3(1.5);
        let c = solve_v(0.0, 0.0, 5.0, &p, JumpSpec::FullStable).unwrap();
        assert_eq!(c.v(3.0), 0.0);
        assert_eq!(joint_laplace(0.2, 0.0, 0.7, 1.0, &p, JumpSpec::FullStable).unwrap(), (-0.14f64).exp());
        assert_eq!(joint_laplace(0.2, 3.0, 0.0, 0.0, &p, JumpSpec::FullStable).unwrap(), 1.0);
        assert_eq!(bond_price(2.0, 2.0, 0.05, &p).unwrap(), 1.0);
    }

    #[test]
    fn linear_mechanism_curve() {
        let p = ModelParams::new(0.2, 0.3, 0.0, 0.0, 1.5, 0.05).unwrap();
        let c = bond_curve(&p, 10.0).unwrap();
        for t in [0.5f64, 1.0, 4.0, 10.0] {
            let exact = (1.0 - (-0.2 * t).exp()) / 0.2;
            assert!((c.v(t) - exact).abs() < 1e-10);
        }
    }

    #[test]
    fn curve_matches_cir_riccati() {
        for p in [fig3(2.0), fig3(1.5).with_sigma_z(0.0)] {
            let s = p.effective_sigma();
            let c = bond_curve(&p, 10.0).unwrap();
            for &t in &[1.0, 5.0, 10.0] {
                let (bond, v) = cir_bond(p.a, p.b, s, p.r0, t);
                assert!((c.v(t) - v).abs() < 1e-8, "t = {t}");
                assert!((bond_price(0.0, t, p.r0, &p).unwrap() / bond - 1.0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn curve_stays_below_root_and_increases() {
        let p = fig3(1.5);
        let x0 = root_psi_equals_one(&p, JumpSpec::FullStable).unwrap();
        let c = bond_curve(&p, 200.0).unwrap();
        let mut prev = 0.0;
        for i in 1..=400 {
            let v = c.v(i as f64 * 0.5);
            assert!((v > prev || x0 - v < 1e-8) && v < x0 + 1e-9, "{v} {prev} {x0}");
            prev = v;
        }
        assert!((x0 - c.v(200.0)) < 1e-6);
    }

    #[test]
    fn yield_is_log_bond() {
        let p = fig3(1.5);
        for &k in &[0.25, 1.0, 5.0, 12.0] {
            let y = bond_yield(0.0, k, 0.07, &p).unwrap();
            let b = bond_price(0.0, k, 0.07, &p).unwrap();
            assert!((y + b.ln() / k).abs() < 1e-13);
        }
    }

    #[test]
    fn deterministic_yield() {
        let p = ModelParams::new(0.2, 0.0, 0.0, 0.0, 1.5, 0.05).unwrap();
        let k: f64 = 3.0;
        let want = 0.05 * (1.0 - (-0.2 * k).exp()) / (0.2 * k);
        assert!((bond_yield(0.0, k, 0.05, &p).unwrap() - want).abs() < 1e-11);
    }

    #[test]
    fn stationary_cir_gamma_law() {
        let p = fig3(1.5).with_sigma_z(0.0);
        for &q in &[0.0, 0.5, 1.0, 10.0] {
            let want = (1.0 + p.sigma * p.sigma * q / (2.0 * p.a)).powf(-2.0 * p.ab() / (p.sigma * p.sigma));
            assert!((stationary_laplace(q, &p, JumpSpec::FullStable).unwrap() - want).abs() < 1e-8);
        }
    }

    #[test]
    fn alpha_monotonicity_of_v_and_bond() {
        let alphas = [1.2, 1.5, 1.8, 2.0];
        let curves: Vec<OdeCurve> = alphas.iter().map(|&a| bond_curve(&fig3(a), 10.0).unwrap()).collect();
        for t in 1..=10 {
            let t = t as f64;
            let vs: Vec<f64> = curves.iter().map(|c| c.v(t)).collect();
            assert!(vs.windows(2).all(|w| w[0] < w[1]), "t = {t}: {vs:?}");
            let bs: Vec<f64> = curves.iter().map(|c| c.laplace(0.05, t)).collect();
            assert!(bs.windows(2).all(|w| w[0] > w[1]), "t = {t}: {bs:?}");
        }
    }

    #[test]
    fn continuity_at_alpha_two() {
        let c2 = bond_curve(&fig3(2.0), 5.0).unwrap();
        for &t in &[1.0, 5.0] {
            let gaps: Vec<f64> = [1.9, 1.99, 1.999]
                .iter()
                .map(|&a| (bond_curve(&fig3(a), 5.0).unwrap().v(t) - c2.v(t)).abs())
                .collect();
            assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2] && gaps[2] < 1e-3, "{gaps:?}");
        }
    }

    #[test]
    fn flow_property() {
        let p = fig3(1.5);
        let (s, t) = (1.3, 2.1);
        let first = bond_curve(&p, s).unwrap();
        let xi = first.v(s);
        // E[e^{-∫_0^{s+t} r}] factorizes through the state at time t
        let later = solve_v(xi, 1.0, t, &p, JumpSpec::FullStable).unwrap();
        let whole = bond_curve(&p, s + t).unwrap();
        assert!((later.v(t) - whole.v(s + t)).abs() < 1e-8);
        let composed = later.laplace(p.r0, t) * (-p.ab() * first.integral(s)).exp();
        assert!((composed - whole.laplace(p.r0, s + t)).abs() < 1e-8);
    }

    #[test]
    fn csv_export_has_header() {
        let mut buf = Vec::new();
        bond_curve(&fig3(1.5), 1.0).unwrap().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,v\n0,0\n"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn bond_in_unit_interval_and_decreasing(
            alpha in 1.1f64..2.0, r in 0.0f64..0.5, sz in 0.0f64..0.5,
        ) {
            let p = fig3(alpha).with_sigma_z(sz);
            let c = bond_curve(&p, 10.0).unwrap();
            let mut prev = 1.0;
            for i in 1..=20 {
                let b = c.laplace(r, 0.5 * i as f64);
                prop_assert!(b > 0.0 && b <= 1.0);
                prop_assert!(b <= prev);
                prev = b;
            }
        }
    }
}
