//! Monte Carlo counterparts of the analytic quantities.
//!
//! Paths run in parallel, one seed-derived stream per path, and are
//! collected in index order before a sequential reduction, so estimates are
//! bitwise reproducible for a given seed regardless of the thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::affine_engine::bond_curve;
use crate::error::{ensure, Result};
use crate::mechanism::ModelParams;
use crate::simulation::{drive, Hawkes, Noise, PathObserver, Process, Scheme, Segment, SimConfig};
use crate::stable_core::{StableSampler, StableSpec};

/// Censoring level above which [`mc_expected_tau`] widens the horizon.
pub const MAX_CENSORED: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub estimator: String,
    pub dt: f64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub censored_fraction: Option<f64>,
}

impl McEstimate {
    /// |value − target| in standard errors.
    pub fn z_score(&self, target: f64) -> f64 {
        let gap = (self.value - target).abs();
        if self.std_error > 0.0 {
            gap / self.std_error
        } else if gap == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }

    pub fn within(&self, target: f64, n_se: f64) -> bool {
        self.z_score(target) <= n_se
    }
}

/// Sample mean and variance by Welford's recursion.
#[derive(Debug, Clone, Copy, Default)]
pub struct Welford {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n > 1 {
            self.m2 / (self.n - 1) as f64
        } else {
            0.0
        }
    }

    pub fn std_error(&self) -> f64 {
        (self.variance() / self.n.max(1) as f64).sqrt()
    }

    pub fn count(&self) -> usize {
        self.n
    }
}

/// Path count, step, seed and scheme shared by the path-based estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
    pub scheme: Scheme,
}

impl McConfig {
    pub fn new(n_paths: usize, dt: f64, seed: u64, scheme: Scheme) -> Self {
        McConfig { n_paths, dt, seed, scheme }
    }

    fn sim(&self, horizon: f64) -> SimConfig {
        SimConfig::new(self.dt, horizon, self.scheme, self.seed)
    }

    fn check(&self) -> Result<()> {
        ensure(self.n_paths >= 2, || format!("need at least 2 paths, got {}", self.n_paths))
    }

    fn estimate(&self, label: &str, w: &Welford, n_paths: usize) -> McEstimate {
        McEstimate {
            value: w.mean(),
            std_error: w.std_error(),
            n_paths,
            estimator: label.to_string(),
            dt: self.dt,
            seed: self.seed,
            censored_fraction: None,
        }
    }
}

/// Runs `f` on paths 0..n in parallel and returns the results in order.
pub fn par_paths<T, F>(n: usize, seed: u64, antithetic: bool, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut Noise) -> Result<T> + Sync,
{
    (0..n as u64)
        .into_par_iter()
        .map(|i| f(&mut Noise::for_path(seed, i, antithetic)))
        .collect()
}

/// Welford over per-path values; antithetic pairs are averaged first.
fn reduce(values: &[f64], paired: bool) -> Welford {
    let mut w = Welford::default();
    if paired {
        for pair in values.chunks(2) {
            w.push(pair.iter().sum::<f64>() / pair.len() as f64);
        }
    } else {
        for &v in values {
            w.push(v);
        }
    }
    w
}

fn column(rows: &[Vec<f64>], j: usize) -> Vec<f64> {
    rows.iter().map(|r| r[j]).collect()
}

/// Grid-node observer accumulating ∫r by the trapezoid rule.
#[derive(Default)]
struct Discount {
    last: Option<(f64, f64)>,
    integral: f64,
    value: f64,
}

impl PathObserver for Discount {
    fn node(&mut self, t: f64, r: f64) -> bool {
        if let Some((t0, r0)) = self.last {
            self.integral += 0.5 * (r0 + r) * (t - t0);
        }
        self.last = Some((t, r));
        self.value = r;
        true
    }
}

/// E[exp(−∫_0^T r)] with antithetic Gaussian drivers.
pub fn mc_bond(params: &ModelParams, maturity: f64, mc: &McConfig) -> Result<McEstimate> {
    ensure(mc.n_paths >= 100, || format!("mc_bond needs at least 100 paths, got {}", mc.n_paths))?;
    let n = mc.n_paths + mc.n_paths % 2;
    let sim = mc.sim(maturity);
    let vals = par_paths(n, mc.seed, true, |noise| {
        let mut obs = Discount::default();
        drive(params, Process::AlphaCir, &sim, noise, &mut obs)?;
        Ok((-obs.integral).exp())
    })?;
    Ok(mc.estimate("bond", &reduce(&vals, true), n))
}

/// E[exp(−ξ r_t − θ ∫_0^t r)] for the α-CIR process.
pub fn mc_joint_laplace(params: &ModelParams, t: f64, xi: f64, theta: f64, mc: &McConfig) -> Result<McEstimate> {
    mc.check()?;
    let sim = mc.sim(t);
    let vals = par_paths(mc.n_paths, mc.seed, false, |noise| {
        let mut obs = Discount::default();
        drive(params, Process::AlphaCir, &sim, noise, &mut obs)?;
        Ok((-xi * obs.value - theta * obs.integral).exp())
    })?;
    Ok(mc.estimate("joint_laplace", &reduce(&vals, false), mc.n_paths))
}

/// E[e^{−p r_t}] for each p, from one batch of paths.
pub fn mc_terminal_laplace(params: &ModelParams, t: f64, ps: &[f64], mc: &McConfig) -> Result<Vec<McEstimate>> {
    mc.check()?;
    let sim = mc.sim(t);
    let rows = par_paths(mc.n_paths, mc.seed, false, |noise| {
        let mut obs = Discount::default();
        drive(params, Process::AlphaCir, &sim, noise, &mut obs)?;
        Ok(ps.iter().map(|p| (-p * obs.value).exp()).collect::<Vec<f64>>())
    })?;
    Ok((0..ps.len())
        .map(|j| mc.estimate("terminal_laplace", &reduce(&column(&rows, j), false), mc.n_paths))
        .collect())
}

/// E[e^{−p r_t}] at a large t as a proxy for the stationary law.
pub fn mc_stationary_laplace(params: &ModelParams, p: f64, t: f64, mc: &McConfig) -> Result<McEstimate> {
    let mut out = mc_terminal_laplace(params, t, &[p], mc)?.remove(0);
    out.estimator = "stationary_laplace".to_string();
    Ok(out)
}

/// Running minimum, continuous through Brownian-bridge minima of segments.
struct RunningMin {
    disc: Discount,
    min: f64,
}

impl PathObserver for RunningMin {
    fn node(&mut self, t: f64, r: f64) -> bool {
        self.min = self.min.min(r);
        self.disc.node(t, r)
    }

    fn wants_segments(&self) -> bool {
        true
    }

    fn segment(&mut self, seg: &Segment, noise: &mut Noise) -> bool {
        self.min = self.min.min(seg.bridge_min(noise.uniform()));
        true
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PutMc {
    /// E[e^{−∫r} (K − inf_u Y_u)⁺] with Y_u the tenor-κ yield.
    pub yield_form: McEstimate,
    /// (v(κ)/κ) E[e^{−∫r} (K̄ − inf_u r_u)⁺].
    pub reduced_form: McEstimate,
    pub kbar: f64,
}

impl PutMc {
    /// Gap between the two payoff forms in standard errors of the difference
    /// of independent estimates (a conservative scale for paired ones).
    pub fn form_gap_se(&self) -> f64 {
        let se = self.yield_form.std_error.hypot(self.reduced_form.std_error);
        let gap = (self.yield_form.value - self.reduced_form.value).abs();
        if se > 0.0 {
            gap / se
        } else if gap == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Put on the running minimum of the κ-yield, on thinned paths.
pub fn mc_running_min_put(
    params: &ModelParams,
    maturity: f64,
    kappa: f64,
    strike: f64,
    mc: &McConfig,
) -> Result<PutMc> {
    mc.check()?;
    ensure(matches!(mc.scheme, Scheme::Thinned { .. }), || "the put estimator needs the thinned scheme".to_string())?;
    let curve = bond_curve(params, kappa)?;
    let (v, big_v) = (curve.v(kappa), curve.integral(kappa));
    let ab = params.ab();
    let kbar = (kappa * strike - ab * big_v) / v;
    let yield_of = |r: f64| (r * v + ab * big_v) / kappa;
    let sim = mc.sim(maturity);
    let rows = par_paths(mc.n_paths, mc.seed, false, |noise| {
        let mut obs = RunningMin { disc: Discount::default(), min: f64::INFINITY };
        drive(params, Process::AlphaCir, &sim, noise, &mut obs)?;
        let d = (-obs.disc.integral).exp();
        let yield_payoff = (strike - yield_of(obs.min)).max(0.0);
        let reduced_payoff = v / kappa * (kbar - obs.min).max(0.0);
        Ok(vec![d * yield_payoff, d * reduced_payoff])
    })?;
    Ok(PutMc {
        yield_form: mc.estimate("put_yield_form", &reduce(&column(&rows, 0), false), mc.n_paths),
        reduced_form: mc.estimate("put_reduced_form", &reduce(&column(&rows, 1), false), mc.n_paths),
        kbar,
    })
}

/// ∫_0^∞ e^{−θT} P(T) dT with P from the same paths at every T on the grid,
/// truncated where e^{−θT} < 1e−12.
pub fn mc_put_laplace(params: &ModelParams, theta: f64, kappa: f64, strike: f64, mc: &McConfig) -> Result<McEstimate> {
    mc.check()?;
    ensure(theta > 0.0, || format!("theta must be positive, got {theta}"))?;
    ensure(matches!(mc.scheme, Scheme::Thinned { .. }), || "the put estimator needs the thinned scheme".to_string())?;
    let curve = bond_curve(params, kappa)?;
    let (v, big_v) = (curve.v(kappa), curve.integral(kappa));
    let kbar = (kappa * strike - params.ab() * big_v) / v;
    let horizon = 12.0 * std::f64::consts::LN_10 / theta;
    let sim = mc.sim(horizon);

    struct Acc {
        inner: RunningMin,
        theta: f64,
        kbar: f64,
        last: Option<(f64, f64)>,
        total: f64,
    }
    impl PathObserver for Acc {
        fn node(&mut self, t: f64, r: f64) -> bool {
            self.inner.node(t, r);
            let pay = (-self.theta * t - self.inner.disc.integral).exp() * (self.kbar - self.inner.min).max(0.0);
            if let Some((t0, p0)) = self.last {
                self.total += 0.5 * (p0 + pay) * (t - t0);
            }
            self.last = Some((t, pay));
            true
        }
        fn wants_segments(&self) -> bool {
            true
        }
        fn segment(&mut self, seg: &Segment, noise: &mut Noise) -> bool {
            self.inner.segment(seg, noise)
        }
    }

    let vals = par_paths(mc.n_paths, mc.seed, false, |noise| {
        let mut obs = Acc {
            inner: RunningMin { disc: Discount::default(), min: f64::INFINITY },
            theta,
            kbar,
            last: None,
            total: 0.0,
        };
        drive(params, Process::AlphaCir, &sim, noise, &mut obs)?;
        Ok(v / kappa * obs.total)
    })?;
    Ok(mc.estimate("put_laplace", &reduce(&vals, false), mc.n_paths))
}

/// E[exp(−θΘ_y − ∫_0^{Θ_y} r)] for the first entrance Θ_y into [0, y].
///
/// Crossings inside a Gaussian segment are detected by the bridge crossing
/// probability and placed at the segment midpoint. Paths stop once the
/// accumulated discount falls below 1e−14.
pub fn mc_hitting_laplace(params: &ModelParams, y: f64, theta: f64, mc: &McConfig) -> Result<McEstimate> {
    mc.check()?;
    ensure(y > 0.0 && y < params.r0, || format!("need 0 < y < r0, got y = {y}"))?;
    ensure(matches!(mc.scheme, Scheme::Thinned { .. }), || "the hitting estimator needs the thinned scheme".to_string())?;

    struct Hit {
        y: f64,
        theta: f64,
        disc: Discount,
        value: Option<f64>,
    }
    impl Hit {
        fn log_weight(&self, t: f64, extra: f64) -> f64 {
            -self.theta * t - self.disc.integral - extra
        }
    }
    impl PathObserver for Hit {
        fn node(&mut self, t: f64, r: f64) -> bool {
            self.disc.node(t, r);
            self.log_weight(t, 0.0) > -14.0 * std::f64::consts::LN_10
        }
        fn wants_segments(&self) -> bool {
            true
        }
        fn segment(&mut self, seg: &Segment, noise: &mut Noise) -> bool {
            if noise.uniform() > seg.crossing_probability(self.y) {
                return true;
            }
            let tm = 0.5 * (seg.t0 + seg.t1);
            // ∫r from the last grid node to the crossing, by the trapezoid rule
            let (tn, rn) = self.disc.last.unwrap_or((0.0, seg.x0));
            let extra = 0.5 * (rn + seg.x0) * (seg.t0 - tn) + 0.5 * (seg.x0 + self.y) * (tm - seg.t0);
            self.value = Some(self.log_weight(tm, extra).exp());
            false
        }
    }

    let horizon = 1e4;
    let sim = mc.sim(horizon);
    let vals = par_paths(mc.n_paths, mc.seed, false, |noise| {
        let mut obs = Hit { y, theta, disc: Discount::default(), value: None };
        drive(params, Process::AlphaCir, &sim, noise, &mut obs)?;
        Ok(obs.value.unwrap_or(0.0))
    })?;
    Ok(mc.estimate("hitting_laplace", &reduce(&vals, false), mc.n_paths))
}

/// First times a jump above ȳ occurs, one per path; None if censored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstJumpSample {
    pub times: Vec<Option<f64>>,
    pub horizon: f64,
    pub dt: f64,
    pub seed: u64,
}

struct FirstJump {
    threshold: f64,
    time: Option<f64>,
}

impl PathObserver for FirstJump {
    fn jump(&mut self, t: f64, size: f64) -> bool {
        if size > self.threshold {
            self.time = Some(t);
            return false;
        }
        true
    }
}

struct JumpCount {
    threshold: f64,
    count: u64,
}

impl PathObserver for JumpCount {
    fn jump(&mut self, _t: f64, size: f64) -> bool {
        if size > self.threshold {
            self.count += 1;
        }
        true
    }
}

fn thinned_for(y_bar: f64, params: &ModelParams, mc: &McConfig) -> Result<McConfig> {
    ensure(params.sigma_z > 0.0 && y_bar > 0.0, || "jump statistics need sigma_z > 0 and a positive threshold".to_string())?;
    Ok(McConfig { scheme: Scheme::Thinned { y: y_bar / params.sigma_z }, ..*mc })
}

/// First jumps above ȳ on thinned paths of the α-CIR or LOU process.
pub fn first_jump_sample(
    params: &ModelParams,
    process: Process,
    y_bar: f64,
    horizon: f64,
    mc: &McConfig,
) -> Result<FirstJumpSample> {
    mc.check()?;
    let mc = thinned_for(y_bar, params, mc)?;
    let sim = mc.sim(horizon);
    let times = par_paths(mc.n_paths, mc.seed, false, |noise| {
        let mut obs = FirstJump { threshold: y_bar, time: None };
        drive(params, process, &sim, noise, &mut obs)?;
        Ok(obs.time)
    })?;
    Ok(FirstJumpSample { times, horizon, dt: mc.dt, seed: mc.seed })
}

impl FirstJumpSample {
    pub fn censored_fraction(&self) -> f64 {
        self.times.iter().filter(|t| t.is_none()).count() as f64 / self.times.len() as f64
    }

    fn estimate(&self, label: &str, w: &Welford) -> McEstimate {
        McEstimate {
            value: w.mean(),
            std_error: w.std_error(),
            n_paths: self.times.len(),
            estimator: label.to_string(),
            dt: self.dt,
            seed: self.seed,
            censored_fraction: Some(self.censored_fraction()),
        }
    }

    /// Empirical P(τ > t); t beyond the horizon is rejected.
    pub fn survival(&self, t: f64) -> Result<McEstimate> {
        ensure(t <= self.horizon, || format!("t = {t} beyond the simulated horizon {}", self.horizon))?;
        let mut w = Welford::default();
        for s in &self.times {
            w.push(if s.is_none_or(|s| s > t) { 1.0 } else { 0.0 });
        }
        Ok(self.estimate("survival", &w))
    }

    /// Empirical P(τ ≤ t).
    pub fn cdf(&self, t: f64) -> Result<McEstimate> {
        let mut s = self.survival(t)?;
        s.value = 1.0 - s.value;
        s.estimator = "first_jump_cdf".to_string();
        Ok(s)
    }

    /// Sample mean of τ, censored times counted at the horizon.
    pub fn mean(&self) -> McEstimate {
        let mut w = Welford::default();
        for s in &self.times {
            w.push(s.unwrap_or(self.horizon));
        }
        self.estimate("expected_tau", &w)
    }
}

/// Empirical survival of τ_ȳ at each of `times`.
pub fn mc_survival(params: &ModelParams, y_bar: f64, times: &[f64], mc: &McConfig) -> Result<Vec<McEstimate>> {
    let horizon = times.iter().cloned().fold(mc.dt, f64::max);
    let sample = first_jump_sample(params, Process::AlphaCir, y_bar, horizon, mc)?;
    times.iter().map(|&t| sample.survival(t)).collect()
}

/// Sample mean of τ_ȳ, doubling the horizon (up to 8 times) while more than
/// 1% of the paths are censored.
pub fn mc_expected_tau(params: &ModelParams, y_bar: f64, horizon: f64, mc: &McConfig) -> Result<McEstimate> {
    let mut h = horizon;
    let mut sample = first_jump_sample(params, Process::AlphaCir, y_bar, h, mc)?;
    for _ in 0..8 {
        if sample.censored_fraction() <= MAX_CENSORED {
            break;
        }
        h *= 2.0;
        sample = first_jump_sample(params, Process::AlphaCir, y_bar, h, mc)?;
    }
    Ok(sample.mean())
}

/// E[e^{−p J_t}] and E[J_t] for the count of jumps above ȳ.
pub fn mc_counter(params: &ModelParams, p: f64, y_bar: f64, t: f64, mc: &McConfig) -> Result<(McEstimate, McEstimate)> {
    mc.check()?;
    ensure(p >= 0.0, || format!("p must be nonnegative, got {p}"))?;
    let mc = thinned_for(y_bar, params, mc)?;
    let sim = mc.sim(t);
    let counts = par_paths(mc.n_paths, mc.seed, false, |noise| {
        let mut obs = JumpCount { threshold: y_bar, count: 0 };
        drive(params, Process::AlphaCir, &sim, noise, &mut obs)?;
        Ok(obs.count as f64)
    })?;
    let laplace: Vec<f64> = counts.iter().map(|c| (-p * c).exp()).collect();
    Ok((
        mc.estimate("counter_laplace", &reduce(&laplace, false), mc.n_paths),
        mc.estimate("jump_count_mean", &reduce(&counts, false), mc.n_paths),
    ))
}

/// E[e^{−qZ_1}] from `n` unit stable draws, for each q.
pub fn mc_stable_laplace(alpha: f64, qs: &[f64], n: usize, seed: u64) -> Result<Vec<McEstimate>> {
    ensure(n >= 2, || "need at least 2 draws".to_string())?;
    let sampler = StableSampler::new(StableSpec::new(alpha)?);
    const CHUNK: usize = 10_000;
    let chunks = n.div_ceil(CHUNK);
    let draws: Vec<Vec<f64>> = par_paths(chunks, seed, false, |noise| {
        Ok((0..CHUNK).map(|_| sampler.sample_unit(noise.jump_rng())).collect())
    })?;
    let draws: Vec<f64> = draws.into_iter().flatten().take(n).collect();
    Ok(qs
        .iter()
        .map(|&q| {
            let mut w = Welford::default();
            for z in &draws {
                w.push((-q * z).exp());
            }
            McEstimate {
                value: w.mean(),
                std_error: w.std_error(),
                n_paths: n,
                estimator: "stable_laplace".to_string(),
                dt: 1.0,
                seed,
                censored_fraction: None,
            }
        })
        .collect())
}

/// Mean, variance and third central moment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub third: f64,
}

impl Moments {
    /// Largest relative deviation over the three moments.
    pub fn max_relative_error(&self, reference: &Moments) -> f64 {
        [
            (self.mean - reference.mean) / reference.mean,
            (self.variance - reference.variance) / reference.variance,
            (self.third - reference.third) / reference.third,
        ]
        .iter()
        .fold(0.0, |m, e| m.max(e.abs()))
    }

    /// Largest relative deviation over mean and variance.
    pub fn mean_variance_error(&self, reference: &Moments) -> f64 {
        ((self.mean - reference.mean) / reference.mean)
            .abs()
            .max(((self.variance - reference.variance) / reference.variance).abs())
    }
}

/// Moments of CIR started at 0: a Gamma law with shape 2ab/σ² and scale
/// σ²(1 − e^{−at})/(2a).
pub fn cir_moments_from_zero(a: f64, b: f64, sigma: f64, t: f64) -> Moments {
    let shape = 2.0 * a * b / (sigma * sigma);
    let scale = sigma * sigma * (1.0 - (-a * t).exp()) / (2.0 * a);
    Moments { mean: shape * scale, variance: shape * scale * scale, third: 2.0 * shape * scale.powi(3) }
}

/// Sample moments of the rescaled Hawkes intensity at time t.
pub fn hawkes_moments(a: f64, b: f64, sigma_z: f64, n: u32, t: f64, n_paths: usize, seed: u64) -> Result<Moments> {
    ensure(n_paths >= 3, || "need at least 3 paths".to_string())?;
    let h = Hawkes::new(a, b, sigma_z, n)?;
    let vals = par_paths(n_paths, seed, false, |noise| Ok(h.sample(&[t], noise)?[0]))?;
    let m = vals.iter().sum::<f64>() / n_paths as f64;
    let (mut s2, mut s3) = (0.0, 0.0);
    for v in &vals {
        let d = v - m;
        s2 += d * d;
        s3 += d * d * d;
    }
    let nf = n_paths as f64;
    Ok(Moments {
        mean: m,
        variance: s2 / (nf - 1.0),
        third: s3 * nf / ((nf - 1.0) * (nf - 2.0)),
    })
}
