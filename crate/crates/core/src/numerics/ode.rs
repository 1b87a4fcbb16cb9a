//! Adaptive Dormand–Prince 5(4) for scalar ODEs, with the method's own
//! quartic continuous extension as dense output.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub atol: f64,
    pub rtol: f64,
    pub max_steps: usize,
    /// Upper bound on the step size; 0 means unbounded.
    pub max_step: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { atol: 1e-12, rtol: 1e-10, max_steps: 1_000_000, max_step: 0.0 }
    }
}

/// Accepted steps of an integration: node values, interpolation
/// coefficients per step and the running integral.
#[derive(Debug, Clone)]
pub struct DenseSolution {
    t: Vec<f64>,
    y: Vec<f64>,
    coef: Vec<[f64; 4]>,
    cum: Vec<f64>,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Integrates y' = f(t, y) from `t0` to `t1 > t0`.
pub fn solve<F: FnMut(f64, f64) -> f64>(
    mut f: F,
    t0: f64,
    y0: f64,
    t1: f64,
    opts: OdeOptions,
) -> Result<DenseSolution> {
    if !(t1 > t0) {
        return Err(Error::invalid(format!("ode horizon must exceed start: {t0} >= {t1}")));
    }
    let span = t1 - t0;
    let max_step = if opts.max_step > 0.0 { opts.max_step } else { span };
    let mut sol = DenseSolution { t: vec![t0], y: vec![y0], coef: Vec::new(), cum: vec![0.0] };
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, y);
    check_finite(k1, t)?;

    let scale0 = opts.atol + opts.rtol * y.abs();
    let mut h = if k1.abs() > 0.0 { (scale0 / k1.abs()).powf(0.2) * 0.1 } else { 1e-3 * span };
    h = h.clamp(1e-10 * span, 1e-2 * span).min(max_step);
    let h_floor = 1e-14 * span.max(1.0);
    let mut rejected = false;

    for _ in 0..opts.max_steps {
        if t >= t1 {
            return Ok(sol);
        }
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }
        let k2 = f(t + C2 * h, y + h * A21 * k1);
        let k3 = f(t + C3 * h, y + h * (A31 * k1 + A32 * k2));
        let k4 = f(t + C4 * h, y + h * (A41 * k1 + A42 * k2 + A43 * k3));
        let k5 = f(t + C5 * h, y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4));
        let k6 = f(t + h, y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5));
        let y_new = y + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
        let k7 = f(t + h, y_new);
        let err = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
        let scale = opts.atol + opts.rtol * y.abs().max(y_new.abs());
        let ratio = (err / scale).abs();

        if ratio.is_finite() && ratio <= 1.0 {
            let t_new = if last { t1 } else { t + h };
            check_finite(k7, t_new)?;
            let diff = y_new - y;
            let bspl = h * k1 - diff;
            let c = [
                diff,
                bspl,
                diff - h * k7 - bspl,
                h * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7),
            ];
            let area = h * partial_area(y, &c, 1.0);
            let prev = *sol.cum.last().expect("nonempty");
            sol.t.push(t_new);
            sol.y.push(y_new);
            sol.coef.push(c);
            sol.cum.push(prev + area);
            t = t_new;
            y = y_new;
            k1 = k7;
            let grow = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) };
            h *= if rejected { grow.min(1.0) } else { grow };
            h = h.min(max_step);
            rejected = false;
        } else {
            let shrink = if ratio.is_finite() { (0.9 * ratio.powf(-0.2)).clamp(0.1, 0.9) } else { 0.1 };
            h *= shrink;
            rejected = true;
            if h < h_floor {
                return Err(Error::numerical(format!("ode step size underflow at t = {t}")));
            }
        }
    }
    Err(Error::numerical(format!("ode step budget exhausted at t = {t}")))
}

fn check_finite(v: f64, t: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::numerical(format!("ode right-hand side not finite at t = {t}")))
    }
}

impl DenseSolution {
    pub fn start(&self) -> f64 {
        self.t[0]
    }

    pub fn end(&self) -> f64 {
        *self.t.last().expect("nonempty")
    }

    pub fn nodes(&self) -> &[f64] {
        &self.t
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    fn locate(&self, t: f64) -> usize {
        let n = self.t.len();
        if t <= self.t[0] {
            return 0;
        }
        if t >= self.t[n - 1] {
            return n.saturating_sub(2);
        }
        self.t.partition_point(|&x| x <= t).saturating_sub(1).min(n - 2)
    }

    /// Dense-output value; clamps outside the integration range.
    pub fn eval(&self, t: f64) -> f64 {
        if self.t.len() == 1 {
            return self.y[0];
        }
        let t = t.clamp(self.start(), self.end());
        let i = self.locate(t);
        let h = self.t[i + 1] - self.t[i];
        let s = (t - self.t[i]) / h;
        let [r2, r3, r4, r5] = self.coef[i];
        let s1 = 1.0 - s;
        self.y[i] + s * (r2 + s1 * (r3 + s * (r4 + s1 * r5)))
    }

    /// ∫ from start to t of the dense output, exact for the interpolant.
    pub fn integral(&self, t: f64) -> f64 {
        if self.t.len() == 1 {
            return 0.0;
        }
        let t = t.clamp(self.start(), self.end());
        let i = self.locate(t);
        let h = self.t[i + 1] - self.t[i];
        let s = (t - self.t[i]) / h;
        self.cum[i] + h * partial_area(self.y[i], &self.coef[i], s)
    }
}

/// ∫_0^s of y0 + θ r2 + θ(1-θ) r3 + θ²(1-θ) r4 + θ²(1-θ)² r5 dθ.
fn partial_area(y0: f64, c: &[f64; 4], s: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    let s5 = s4 * s;
    y0 * s
        + c[0] * s2 / 2.0
        + c[1] * (s2 / 2.0 - s3 / 3.0)
        + c[2] * (s3 / 3.0 - s4 / 4.0)
        + c[3] * (s3 / 3.0 - s4 / 2.0 + s5 / 5.0)
}
