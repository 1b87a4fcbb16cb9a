//! Laws of the large jumps of r: those whose size σ_Z ζ exceeds ȳ.
//!
//! Thresholds are passed in rate units ȳ; the Lévy measure is evaluated at
//! y = ȳ/σ_Z. ν(y) = C_α y^{-α} is the big-jump rate per unit of r.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::affine_engine::joint_laplace;
use crate::error::{ensure, Error, Result};
use crate::mechanism::{fixed_point_truncated, truncated_drift, JumpSpec, Mechanism, ModelParams};
use crate::numerics::ode::{solve, DenseSolution, OdeOptions};
use crate::numerics::quadrature::{integrate, Tolerance};
use crate::stable_core::big_jump_mass;

/// Route disagreement tolerated by [`expected_tau`].
pub const ROUTE_TOLERANCE: f64 = 1e-3;
const SURVIVAL_FLOOR: f64 = 1e-12;

/// ζ-space threshold for a rate-space one.
pub fn zeta_threshold(y_bar: f64, params: &ModelParams) -> Result<f64> {
    params.validate()?;
    ensure(params.alpha < 2.0, || "large jumps need alpha < 2".to_string())?;
    ensure(params.sigma_z > 0.0, || "large jumps need sigma_z > 0".to_string())?;
    ensure(y_bar > 0.0 && y_bar.is_finite(), || format!("threshold must be positive, got {y_bar}"))?;
    Ok(y_bar / params.sigma_z)
}

/// l-curve and derived values on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpLawCurve {
    pub t: Vec<f64>,
    pub l: Vec<f64>,
    pub values: Vec<f64>,
    /// ζ-space threshold.
    pub y: f64,
    /// Rate-space threshold.
    pub y_bar: f64,
}

impl JumpLawCurve {
    /// CSV with header `t,<column>`.
    pub fn write_csv<W: Write>(&self, out: W, column: &str) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", column])?;
        for (t, v) in self.t.iter().zip(&self.values) {
            w.write_record([t.to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Solution of l' = (1 − e^{−p}) ∫_y^∞ e^{−lσ_Zζ} μ(dζ) − Ψ(l), l(0) = 0.
///
/// This is the counter ODE with the truncated mechanism rewritten through
/// the full one, Ψ^(y)(l) = Ψ(l) + ν − ∫_y^∞ e^{−lσ_Zζ} μ(dζ). p = ∞ gives
/// the survival ODE l' = ν − Ψ^(y)(l).
struct LCurve {
    solution: Option<DenseSolution>,
    ab: f64,
}

impl LCurve {
    fn solve(weight: f64, y: f64, horizon: f64, params: &ModelParams) -> Result<Self> {
        if weight == 0.0 {
            return Ok(LCurve { solution: None, ab: params.ab() });
        }
        let mech = Mechanism::new(params, JumpSpec::FullStable)?;
        let nu = big_jump_mass(params.alpha, y)?;
        let scale = params.sigma_z * y;
        let inv = -1.0 / params.alpha;
        let mut failure = None;
        let rhs = |_: f64, l: f64| {
            let l = l.max(0.0);
            let big = if l == 0.0 {
                1.0
            } else {
                match integrate(|t: f64| (-l * scale * t.powf(inv)).exp(), 0.0, 1.0, Tolerance::new(1e-15, 1e-12)) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.get_or_insert(e);
                        f64::NAN
                    }
                }
            };
            weight * nu * big - mech.psi(l)
        };
        let solution = solve(rhs, 0.0, 0.0, horizon, OdeOptions::default());
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(LCurve { solution: Some(solution?), ab: params.ab() })
    }

    fn l(&self, t: f64) -> f64 {
        self.solution.as_ref().map_or(0.0, |s| s.eval(t))
    }

    fn value(&self, r0: f64, t: f64) -> f64 {
        match &self.solution {
            Some(s) => (-r0 * s.eval(t) - self.ab * s.integral(t)).exp(),
            None => 1.0,
        }
    }
}

fn check_time(t: f64) -> Result<()> {
    ensure(t >= 0.0 && t.is_finite(), || format!("time must be nonnegative, got {t}"))
}

fn curve_on_grid(weight: f64, y_bar: f64, times: &[f64], params: &ModelParams) -> Result<JumpLawCurve> {
    let y = zeta_threshold(y_bar, params)?;
    for &t in times {
        check_time(t)?;
    }
    let horizon = times.iter().cloned().fold(0.0, f64::max);
    let curve = if horizon > 0.0 { Some(LCurve::solve(weight, y, horizon, params)?) } else { None };
    let (l, values) = times
        .iter()
        .map(|&t| match &curve {
            Some(c) if t > 0.0 => (c.l(t), c.value(params.r0, t)),
            _ => (0.0, 1.0),
        })
        .unzip();
    Ok(JumpLawCurve { t: times.to_vec(), l, values, y, y_bar })
}

/// E[e^{−p J_t}] for the number J_t of jumps of r above ȳ up to t.
pub fn counter_laplace(p: f64, y_bar: f64, t: f64, params: &ModelParams) -> Result<f64> {
    Ok(counter_curve(p, y_bar, &[t], params)?.values[0])
}

pub fn counter_curve(p: f64, y_bar: f64, times: &[f64], params: &ModelParams) -> Result<JumpLawCurve> {
    ensure(p >= 0.0 && !p.is_nan(), || format!("p must be nonnegative, got {p}"))?;
    curve_on_grid(-(-p).exp_m1(), y_bar, times, params)
}

/// P(τ_ȳ > t) for the first jump of r above ȳ.
pub fn survival_tau(y_bar: f64, t: f64, params: &ModelParams) -> Result<f64> {
    Ok(survival_curve(y_bar, &[t], params)?.values[0])
}

pub fn survival_curve(y_bar: f64, times: &[f64], params: &ModelParams) -> Result<JumpLawCurve> {
    curve_on_grid(1.0, y_bar, times, params)
}

/// P(τ_ȳ > t) as E[exp(−ν ∫_0^t r̂)], r̂ the process with big jumps removed.
pub fn survival_tau_via_rhat(y_bar: f64, t: f64, params: &ModelParams) -> Result<f64> {
    let y = zeta_threshold(y_bar, params)?;
    check_time(t)?;
    let nu = big_jump_mass(params.alpha, y)?;
    joint_laplace(params.r0, t, 0.0, nu, params, JumpSpec::Truncated { y })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectedTau {
    /// ∫_0^∞ P(τ > t) dt.
    pub primary: f64,
    /// The u-integral over (0, l*).
    pub secondary: f64,
    pub l_star: f64,
}

impl ExpectedTau {
    pub fn value(&self) -> f64 {
        self.primary
    }

    pub fn relative_gap(&self) -> f64 {
        (self.primary - self.secondary).abs() / self.primary.abs()
    }
}

/// E[τ_ȳ] by two routes; errors if they differ by more than [`ROUTE_TOLERANCE`].
pub fn expected_tau(y_bar: f64, params: &ModelParams) -> Result<ExpectedTau> {
    let out = expected_tau_routes(y_bar, params)?;
    if !(out.relative_gap() <= ROUTE_TOLERANCE) {
        return Err(Error::RouteDisagreement(format!(
            "E[tau]: survival integral {} vs u-integral {} (relative gap {:.2e})",
            out.primary,
            out.secondary,
            out.relative_gap()
        )));
    }
    Ok(out)
}

/// Both routes without the agreement check.
pub fn expected_tau_routes(y_bar: f64, params: &ModelParams) -> Result<ExpectedTau> {
    let y = zeta_threshold(y_bar, params)?;
    let l_star = fixed_point_truncated(params, y)?;
    let rate = params.ab() * l_star;
    ensure(rate > 0.0, || "E[tau] needs ab > 0 or a positive start".to_string())
        .or_else(|e| if params.r0 > 0.0 { Ok(()) } else { Err(e) })?;
    Ok(ExpectedTau { primary: survival_integral(y, l_star, params)?, secondary: u_integral(y, l_star, params)?, l_star })
}

fn survival_integral(y: f64, l_star: f64, params: &ModelParams) -> Result<f64> {
    let rate = params.ab() * l_star;
    let mut horizon = if rate > 0.0 { 30.0 / rate } else { 50.0 };
    loop {
        let c = LCurve::solve(1.0, y, horizon, params)?;
        let end = c.value(params.r0, horizon);
        if end < SURVIVAL_FLOOR {
            let tol = Tolerance { abs: 1e-14, rel: 1e-11, max_intervals: 4000 };
            let body = integrate(|t| c.value(params.r0, t), 0.0, horizon, tol)?;
            return Ok(body + if rate > 0.0 { end / rate } else { 0.0 });
        }
        if horizon > 1e7 {
            return Err(Error::numerical(format!("survival still {end:.3e} at t = {horizon:.3e}")));
        }
        horizon *= 2.0;
    }
}

/// E[τ] = ∫_0^{l*} F(u)^{-1} exp(−u r0 − ∫_0^u ab s/F(s) ds) du with
/// F = ν − Ψ^(y), after u = l*(1 − e^{−s}).
fn u_integral(y: f64, l_star: f64, params: &ModelParams) -> Result<f64> {
    let mech = Mechanism::new(params, JumpSpec::Truncated { y })?;
    let nu = big_jump_mass(params.alpha, y)?;
    let (d1, d2) = (mech.dpsi(l_star), mech.d2psi(l_star));
    let ab = params.ab();
    // (l* − u)/F(u), which tends to 1/Ψ'(l*)
    let damped = |s: f64| {
        let gap = l_star * (-s).exp();
        let u = l_star - gap;
        let f = if gap < 1e-4 * l_star { gap * (d1 - 0.5 * d2 * gap) } else { nu - mech.psi(u) };
        (u, gap / f)
    };
    let s_switch = 1e9f64.ln();
    let opts = OdeOptions { max_step: 0.25, ..OdeOptions::default() };
    let exponent = solve(
        |s, _| {
            let (u, d) = damped(s);
            ab * u * d
        },
        0.0,
        0.0,
        s_switch,
        opts,
    )?;
    let integrand = |s: f64| {
        let (u, d) = damped(s);
        d * (-u * params.r0 - exponent.eval(s)).exp()
    };
    let body = integrate(integrand, 0.0, s_switch, Tolerance::new(1e-15, 1e-11))?;
    let at_switch = (-damped(s_switch).0 * params.r0 - exponent.eval(s_switch)).exp();
    let tail = if ab > 0.0 { at_switch / (ab * l_star) } else { f64::INFINITY };
    Ok(body + tail)
}

/// E[τ_ȳ] over a list of α values, as `(alpha, expected_tau)` rows.
pub fn expected_tau_by_alpha(y_bar: f64, alphas: &[f64], params: &ModelParams) -> Result<Vec<(f64, f64)>> {
    alphas.iter().map(|&a| Ok((a, expected_tau(y_bar, &params.with_alpha(a))?.value()))).collect()
}

pub fn write_expected_tau_csv<W: Write>(rows: &[(f64, f64)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["alpha", "expected_tau"])?;
    for (a, e) in rows {
        w.write_record([a.to_string(), e.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// P(τ^λ ≤ t) for the Lévy OU comparison process: 1 − exp(−C_α r0 t y^{−α}).
pub fn lou_first_jump_cdf(y_bar: f64, t: f64, params: &ModelParams) -> Result<f64> {
    let y = zeta_threshold(y_bar, params)?;
    check_time(t)?;
    Ok(-(-big_jump_mass(params.alpha, y)? * params.r0 * t).exp_m1())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailAsymptotics {
    pub m_lambda: f64,
    pub m_r: f64,
    /// Upper bound for P(τ^r ≤ t) at finite ȳ.
    pub r_bound: f64,
}

/// Large-ȳ tail probabilities of the maximal jump for the two processes.
pub fn tail_asymptotics(t: f64, y_bar: f64, params: &ModelParams) -> Result<TailAsymptotics> {
    let y = zeta_threshold(y_bar, params)?;
    check_time(t)?;
    let nu = big_jump_mass(params.alpha, y)?;
    let mean_integral = |a: f64, b: f64| b * t - (params.r0 - b) * (-a * t).exp_m1() / a;
    let (a_t, b_t) = truncated_drift(params, y)?;
    Ok(TailAsymptotics {
        m_lambda: nu * params.r0 * t,
        m_r: nu * mean_integral(params.a, params.b),
        r_bound: nu * mean_integral(a_t, b_t),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stable_core::c_alpha;
    use proptest::prelude::*;

    /// a = b = σ = σ_Z = 0.1, r0 = 0.2 with ζ-threshold 0.1.
    fn fig4(alpha: f64) -> ModelParams {
        ModelParams::new(0.1, 0.1, 0.1, 0.1, alpha, 0.2).unwrap()
    }
    const YB: f64 = 0.01;

    #[test]
    fn trivial_values() {
        let p = fig4(1.5);
        assert_eq!(counter_laplace(0.0, YB, 5.0, &p).unwrap(), 1.0);
        assert_eq!(counter_laplace(1.0, YB, 0.0, &p).unwrap(), 1.0);
        assert_eq!(survival_tau(YB, 0.0, &p).unwrap(), 1.0);
        assert_eq!(survival_tau_via_rhat(YB, 0.0, &p).unwrap(), 1.0);
        assert_eq!(lou_first_jump_cdf(YB, 0.0, &p).unwrap(), 0.0);
        assert!(survival_tau(YB, 1.0, &fig4(2.0)).is_err());
        assert!(survival_tau(YB, 1.0, &fig4(1.5).with_sigma_z(0.0)).is_err());
        assert!(counter_laplace(-1.0, YB, 1.0, &p).is_err());
    }

    #[test]
    fn two_routes_agree() {
        for &alpha in &[1.2, 1.5, 1.9] {
            for &yb in &[0.005, 0.01, 0.05] {
                let p = fig4(alpha);
                let times: Vec<f64> = (1..=10).map(|t| t as f64).collect();
                let c = survival_curve(yb, &times, &p).unwrap();
                for (t, s) in times.iter().zip(&c.values) {
                    let other = survival_tau_via_rhat(yb, *t, &p).unwrap();
                    assert!((s - other).abs() < 1e-6, "alpha {alpha}, yb {yb}, t {t}: {s} vs {other}");
                }
            }
        }
    }

    #[test]
    fn lou_closed_form() {
        let p = fig4(1.5);
        let want = 1.0 - (-c_alpha(1.5) * 0.2 * 0.1f64.powf(-1.5)).exp();
        assert!((lou_first_jump_cdf(YB, 1.0, &p).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn counter_mean_matches_expected_count() {
        let p = fig4(1.5);
        let t: f64 = 5.0;
        let nu = big_jump_mass(1.5, 0.1).unwrap();
        let mean = nu * (p.b * t + (p.r0 - p.b) * (1.0 - (-p.a * t).exp()) / p.a);
        // J has infinite variance, so the bias of the quotient is O(h^{α−1})
        let h = 1e-9;
        let slope = -(counter_laplace(h, YB, t, &p).unwrap().ln()) / h;
        assert!((slope / mean - 1.0).abs() < 1e-3, "{slope} vs {mean}");
    }

    #[test]
    fn counter_monotone_and_limits() {
        let p = fig4(1.5);
        let times = [1.0, 2.0, 5.0];
        let mut prev_p = vec![1.0; 3];
        for &pp in &[0.5, 1.0, 3.0, 30.0] {
            let c = counter_curve(pp, YB, &times, &p).unwrap();
            assert!(c.values.windows(2).all(|w| w[0] > w[1]));
            for (v, q) in c.values.iter().zip(&prev_p) {
                assert!(v < q);
            }
            prev_p = c.values;
        }
        let s = survival_curve(YB, &times, &p).unwrap();
        for (c, s) in prev_p.iter().zip(&s.values) {
            assert!((c - s).abs() < 1e-9);
        }
    }

    #[test]
    fn l_bounded() {
        let p = fig4(1.3);
        let y = 0.1;
        let nu = big_jump_mass(1.3, y).unwrap();
        let l_star = fixed_point_truncated(&p, y).unwrap();
        let times: Vec<f64> = (1..=40).map(|t| t as f64 * 0.5).collect();
        let c = survival_curve(YB, &times, &p).unwrap();
        let mut prev = 0.0;
        for (t, l) in times.iter().zip(&c.l) {
            assert!(*l > prev && *l < l_star + 1e-9);
            assert!(*l <= nu / p.a * (1.0 - (-p.a * t).exp()) + 1e-12);
            prev = *l;
        }
    }

    #[test]
    fn survival_decays() {
        for &alpha in &[1.2, 1.5, 1.9] {
            let p = fig4(alpha);
            let l_star = fixed_point_truncated(&p, 0.1).unwrap();
            let t = 10.0 / (p.ab() * l_star);
            assert!(survival_tau(YB, t, &p).unwrap() < 1e-3);
        }
    }

    #[test]
    fn survival_decreasing_in_r0() {
        let p = fig4(1.5);
        let a = survival_tau(YB, 2.0, &p.with_r0(0.1)).unwrap();
        let b = survival_tau(YB, 2.0, &p.with_r0(0.3)).unwrap();
        assert!(a > b);
    }

    #[test]
    fn expected_tau_routes_agree() {
        for &alpha in &[1.2, 1.5, 1.9] {
            let e = expected_tau(YB, &fig4(alpha)).unwrap();
            assert!(e.relative_gap() < 1e-4, "alpha {alpha}: {e:?}");
        }
    }

    #[test]
    fn expected_tau_for_pure_rate() {
        // without immigration or the diffusion the survival is exp(−r0 l*)-like
        // only asymptotically; check against direct integration instead
        let p = ModelParams::new(0.2, 0.3, 0.05, 0.2, 1.6, 0.1).unwrap();
        let e = expected_tau(0.02, &p).unwrap();
        let grid: Vec<f64> = (0..=4000).map(|i| i as f64 * 0.05).collect();
        let c = survival_curve(0.02, &grid, &p).unwrap();
        let trap: f64 = c.values.windows(2).map(|w| 0.025 * (w[0] + w[1])).sum();
        assert!((trap / e.value() - 1.0).abs() < 1e-3, "{trap} vs {e:?}");
    }

    #[test]
    fn tail_asymptotics_identities() {
        let p = fig4(1.5);
        let small = tail_asymptotics(1e-6, 1.0, &p).unwrap();
        assert!((small.m_lambda / small.m_r - 1.0).abs() < 1e-6);
        let pb = p.with_r0(p.b);
        let at_b = tail_asymptotics(3.0, 1.0, &pb).unwrap();
        assert!((at_b.m_r - at_b.m_lambda).abs() < 1e-16 * at_b.m_r.max(1e-300) + 1e-18);
        let t = 1.0;
        // ν(y) r0 t ≈ 1e-3
        let y = (c_alpha(1.5) * p.r0 * t / 1e-3).powf(1.0 / 1.5);
        let yb = y * p.sigma_z;
        let tail = tail_asymptotics(t, yb, &p).unwrap();
        let exact = 1.0 - survival_tau(yb, t, &p).unwrap();
        assert!((tail.m_r / exact - 1.0).abs() < 0.2, "{tail:?} vs {exact}");
        assert!(tail.r_bound >= exact);
    }

    #[test]
    fn csv_headers() {
        let p = fig4(1.5);
        let mut buf = Vec::new();
        survival_curve(YB, &[0.0, 1.0], &p).unwrap().write_csv(&mut buf, "survival").unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("t,survival\n0,1\n"));
        let rows = expected_tau_by_alpha(YB, &[1.5], &p).unwrap();
        let mut buf = Vec::new();
        write_expected_tau_csv(&rows, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("alpha,expected_tau\n1.5,"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn routes_agree_on_random_params(
            alpha in 1.15f64..1.95, a in 0.05f64..0.5, sz in 0.05f64..0.5, r0 in 0.01f64..0.5, yb in 0.005f64..0.2,
        ) {
            let p = ModelParams::new(a, 0.1, 0.1, sz, alpha, r0).unwrap();
            for &t in &[0.5, 3.0] {
                let s = survival_tau(yb, t, &p).unwrap();
                let o = survival_tau_via_rhat(yb, t, &p).unwrap();
                prop_assert!((s - o).abs() < 1e-6, "{} vs {}", s, o);
            }
        }
    }
}
