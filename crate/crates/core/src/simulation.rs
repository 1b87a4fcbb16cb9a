//! Path generation for the α-CIR model, its locally equivalent Lévy OU
//! process and the rescaled Hawkes intensity.
//!
//! Every scheme is driven through [`drive`], which reports grid nodes,
//! explicit jumps and (for the thinned scheme) Gaussian segments to a
//! [`PathObserver`]. [`simulate_root`] and friends are observers that keep
//! the whole path; the MC estimators use observers that keep only what
//! they need.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::mechanism::ModelParams;
use crate::stable_core::{big_jump_mass, big_jump_mean, density_constant, StableSampler, StableSpec};

/// Default grid step (years).
pub const DEFAULT_DT: f64 = 1e-3;
const MAX_HALVINGS: u32 = 40;
const HAWKES_EVENT_LIMIT: u64 = 200_000_000;

/// Independent random streams for one path.
///
/// Gaussian draws and jump-related draws come from separate ChaCha8
/// streams, so the Gaussian stream of an antithetic pair can be shared and
/// negated without touching the jumps.
#[derive(Debug, Clone)]
pub struct Noise {
    gauss: ChaCha8Rng,
    jump: ChaCha8Rng,
    sign: f64,
}

impl Noise {
    pub fn new(seed: u64) -> Self {
        Noise::for_path(seed, 0, false)
    }

    /// Streams of path `index`; with `antithetic`, paths 2k and 2k+1 share
    /// a Gaussian stream with opposite signs.
    pub fn for_path(seed: u64, index: u64, antithetic: bool) -> Self {
        let pair = if antithetic { index / 2 } else { index };
        let mut gauss = ChaCha8Rng::seed_from_u64(seed);
        gauss.set_stream(2 * pair + 1);
        let mut jump = ChaCha8Rng::seed_from_u64(seed);
        jump.set_stream(2 * index);
        let sign = if antithetic && index % 2 == 1 { -1.0 } else { 1.0 };
        Noise { gauss, jump, sign }
    }

    pub fn normal(&mut self) -> f64 {
        let z: f64 = self.gauss.sample(StandardNormal);
        self.sign * z
    }

    /// Uniform on (0, 1].
    pub fn uniform(&mut self) -> f64 {
        1.0 - self.jump.random::<f64>()
    }

    pub fn exp1(&mut self) -> f64 {
        self.jump.sample(Exp1)
    }

    pub fn jump_rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.jump
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Scheme {
    /// Euler on the root representation σ_Z r^{1/α} dZ.
    RootEuler,
    /// Jumps of Z above the ζ-level `y` simulated exactly by thinning.
    Thinned { y: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub horizon: f64,
    pub scheme: Scheme,
    /// Jumps larger than this (rate units) are recorded as events.
    pub record_threshold: Option<f64>,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(dt: f64, horizon: f64, scheme: Scheme, seed: u64) -> Self {
        SimConfig { dt, horizon, scheme, record_threshold: None, seed }
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.record_threshold = Some(threshold);
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.dt > 0.0 && self.dt.is_finite(), || format!("dt must be positive, got {}", self.dt))?;
        ensure(self.horizon >= self.dt && self.horizon.is_finite(), || {
            format!("horizon {} must be at least dt = {}", self.horizon, self.dt)
        })?;
        if let Scheme::Thinned { y } = self.scheme {
            ensure(y > 0.0 && y.is_finite(), || format!("thinning level must be positive, got {y}"))?;
        }
        if let Some(th) = self.record_threshold {
            ensure(th >= 0.0, || format!("record threshold must be nonnegative, got {th}"))?;
        }
        Ok(())
    }

    /// The explicit threshold, or σ_Z·y under the thinned scheme.
    pub fn threshold(&self, params: &ModelParams) -> Option<f64> {
        self.record_threshold.or(match self.scheme {
            Scheme::Thinned { y } => Some(params.sigma_z * y),
            Scheme::RootEuler => None,
        })
    }

    pub fn steps(&self) -> usize {
        ((self.horizon / self.dt) - 1e-9).ceil().max(1.0) as usize
    }

    pub fn time(&self, k: usize) -> f64 {
        (k as f64 * self.dt).min(self.horizon)
    }
}

/// Which process is simulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Process {
    /// Jump and diffusion activity r⁺, clamped at 0.
    AlphaCir,
    /// Activity frozen at r0, no clamp.
    Lou,
}

/// A Gaussian stretch of a thinned path with frozen coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub t0: f64,
    pub x0: f64,
    pub t1: f64,
    /// End value before the clamp at 0.
    pub x1: f64,
    /// Brownian variance over the segment. The Gaussian stand-in for small
    /// jumps is left out: on the scale of one step those jumps are sparse
    /// upward moves, and bridging them as Brownian noise deepens the minimum.
    pub variance: f64,
}

impl Segment {
    /// Minimum of the Brownian bridge through the end points, clamped at 0.
    pub fn bridge_min(&self, u: f64) -> f64 {
        let d = self.x1 - self.x0;
        let m = 0.5 * (self.x0 + self.x1 - (d * d - 2.0 * self.variance * u.ln()).sqrt());
        m.max(0.0).min(self.x0.max(0.0)).min(self.x1.max(0.0))
    }

    /// Probability that the bridge dips to `level` or below.
    pub fn crossing_probability(&self, level: f64) -> f64 {
        if self.x0 <= level || self.x1 <= level {
            return 1.0;
        }
        if self.variance <= 0.0 {
            return 0.0;
        }
        (-2.0 * (self.x0 - level) * (self.x1 - level) / self.variance).exp()
    }
}

/// Receives a path as it is generated. Returning `false` stops the path.
pub trait PathObserver {
    fn node(&mut self, _t: f64, _r: f64) -> bool {
        true
    }

    /// An explicit jump of the given size (rate units) ending at time t.
    fn jump(&mut self, _t: f64, _size: f64) -> bool {
        true
    }

    fn wants_segments(&self) -> bool {
        false
    }

    fn segment(&mut self, _seg: &Segment, _noise: &mut Noise) -> bool {
        true
    }
}

/// Path on a uniform grid plus the recorded jumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// (time, size) of jumps above `threshold`, in time order.
    pub events: Vec<(f64, f64)>,
    pub threshold: Option<f64>,
}

impl Path {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "r"])?;
        for (t, r) in self.times.iter().zip(&self.values) {
            w.write_record([t.to_string(), r.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_events_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "size"])?;
        for (t, s) in &self.events {
            w.write_record([t.to_string(), s.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

struct Recorder {
    path: Path,
}

impl PathObserver for Recorder {
    fn node(&mut self, t: f64, r: f64) -> bool {
        self.path.times.push(t);
        self.path.values.push(r);
        true
    }

    fn jump(&mut self, t: f64, size: f64) -> bool {
        if self.path.threshold.is_some_and(|th| size > th) {
            self.path.events.push((t, size));
        }
        true
    }
}

/// Earliest recorded event time.
pub fn first_large_jump(path: &Path) -> Option<f64> {
    path.events.first().map(|e| e.0)
}

/// Constants of the thinned scheme for a ζ-level y.
#[derive(Debug, Clone, Copy)]
struct Thinning {
    y: f64,
    nu: f64,
    /// Compensator of all jumps above ε_s, per unit activity.
    compensator: f64,
    small_var: f64,
    small_rate: f64,
    eps_pow: f64,
    y_pow: f64,
}

impl Thinning {
    fn new(alpha: f64, y: f64) -> Result<Self> {
        let eps = y / 100.0;
        let k = density_constant(alpha);
        let eps_pow = eps.powf(-alpha);
        let y_pow = y.powf(-alpha);
        Ok(Thinning {
            y,
            nu: big_jump_mass(alpha, y)?,
            compensator: big_jump_mean(alpha, y)? + k * (eps.powf(1.0 - alpha) - y.powf(1.0 - alpha)) / (alpha - 1.0),
            small_var: k * eps.powf(2.0 - alpha) / (2.0 - alpha),
            small_rate: k / alpha * (eps_pow - y_pow),
            eps_pow,
            y_pow,
        })
    }

    fn small_size(&self, u: f64, alpha: f64) -> f64 {
        (self.eps_pow - u * (self.eps_pow - self.y_pow)).powf(-1.0 / alpha)
    }
}

#[derive(Debug, Clone, Copy)]
enum Pending {
    Segment(Segment),
    Jump(f64, f64),
}

struct Driver<'a> {
    p: &'a ModelParams,
    process: Process,
    stable: Option<StableSampler>,
    thinning: Option<Thinning>,
}

impl Driver<'_> {
    fn activity(&self, x: f64) -> f64 {
        match self.process {
            Process::AlphaCir => x.max(0.0),
            Process::Lou => self.p.r0,
        }
    }

    fn clamp(&self, x: f64) -> f64 {
        match self.process {
            Process::AlphaCir => x.max(0.0),
            Process::Lou => x,
        }
    }

    fn root_step<O: PathObserver>(&self, x: f64, t1: f64, h: f64, noise: &mut Noise, obs: &mut O) -> (f64, bool) {
        let p = self.p;
        let act = self.activity(x);
        let mut next = x + p.a * (p.b - x) * h;
        if p.sigma > 0.0 {
            next += p.sigma * (act * h).sqrt() * noise.normal();
        }
        let mut go = true;
        if let Some(st) = &self.stable {
            let jump = p.sigma_z * act.powf(1.0 / p.alpha) * st.sample(h, noise.jump_rng());
            next += jump;
            go = obs.jump(t1, jump);
        }
        (self.clamp(next), go)
    }

    /// One thinned attempt from (t, x) over at most h. Returns the end time
    /// and state, or None when the intensity bound was violated.
    fn thinned_attempt(
        &self,
        th: &Thinning,
        t: f64,
        x: f64,
        h: f64,
        noise: &mut Noise,
        out: &mut Vec<Pending>,
    ) -> Option<(f64, f64)> {
        let p = self.p;
        let act = self.activity(x);
        let drift = p.a * (p.b - x) - p.sigma_z * act * th.compensator;
        let var_rate = p.sigma * p.sigma * act + p.sigma_z * p.sigma_z * act * th.small_var;
        let small_rate = act * th.small_rate;
        let reach = act + drift.max(0.0) * h + 3.0 * (var_rate * h).sqrt();
        let big_bound = match self.process {
            Process::AlphaCir => th.nu * reach,
            Process::Lou => th.nu * act,
        };
        let total = small_rate + big_bound;
        let mut tau = 0.0;
        let mut cur = x;
        loop {
            let gap = if total > 0.0 { noise.exp1() / total } else { f64::INFINITY };
            let te = (tau + gap).min(h);
            let dtau = te - tau;
            if dtau > 0.0 {
                let mut end = cur + drift * dtau;
                if var_rate > 0.0 {
                    end += (var_rate * dtau).sqrt() * noise.normal();
                }
                out.push(Pending::Segment(Segment { t0: t + tau, x0: cur, t1: t + te, x1: end, variance: p.sigma * p.sigma * act * dtau }));
                cur = self.clamp(end);
            }
            tau = te;
            if tau >= h {
                return Some((t + h, cur));
            }
            if noise.uniform() * total <= small_rate {
                // end the attempt so the next bound sees the post-jump state
                let size = p.sigma_z * th.small_size(noise.uniform(), p.alpha);
                out.push(Pending::Jump(t + tau, size));
                return Some((t + tau, cur + size));
            }
            let intensity = th.nu * self.activity(cur);
            if intensity > big_bound * (1.0 + 1e-12) {
                return None;
            }
            if noise.uniform() * big_bound <= intensity {
                let size = p.sigma_z * th.y * noise.uniform().powf(-1.0 / p.alpha);
                out.push(Pending::Jump(t + tau, size));
                return Some((t + tau, cur + size));
            }
        }
    }
}

/// Generates one path and feeds it to `obs`.
pub fn drive<O: PathObserver>(
    params: &ModelParams,
    process: Process,
    config: &SimConfig,
    noise: &mut Noise,
    obs: &mut O,
) -> Result<()> {
    params.validate()?;
    config.validate()?;
    let jumps = params.sigma_z > 0.0;
    let thinning = match config.scheme {
        Scheme::Thinned { y } if jumps => {
            ensure(params.alpha < 2.0, || "the thinned scheme needs alpha < 2".to_string())?;
            Some(Thinning::new(params.alpha, y)?)
        }
        _ => None,
    };
    let stable = match config.scheme {
        Scheme::RootEuler if jumps => Some(StableSampler::new(StableSpec::new(params.alpha)?)),
        _ => None,
    };
    let d = Driver { p: params, process, stable, thinning };
    let mut x = params.r0;
    if !obs.node(0.0, x) {
        return Ok(());
    }
    let segments = obs.wants_segments();
    let mut pending = Vec::new();
    for k in 1..=config.steps() {
        let (t0, t1) = (config.time(k - 1), config.time(k));
        match &d.thinning {
            None => {
                // plain Euler: the root scheme, or any scheme without jumps
                let (next, go) = d.root_step(x, t1, t1 - t0, noise, obs);
                x = next;
                if !go {
                    return Ok(());
                }
            }
            Some(th) => {
                let mut t = t0;
                while t < t1 {
                    let mut h = t1 - t;
                    let mut halvings = 0;
                    let (te, xe) = loop {
                        pending.clear();
                        match d.thinned_attempt(th, t, x, h, noise, &mut pending) {
                            Some(end) => break end,
                            None => {
                                halvings += 1;
                                if halvings > MAX_HALVINGS {
                                    return Err(Error::numerical(format!(
                                        "thinning bound still violated at t = {t} after {MAX_HALVINGS} halvings"
                                    )));
                                }
                                h *= 0.5;
                            }
                        }
                    };
                    for item in &pending {
                        let go = match *item {
                            Pending::Segment(s) => !segments || obs.segment(&s, noise),
                            Pending::Jump(tj, size) => obs.jump(tj, size),
                        };
                        if !go {
                            return Ok(());
                        }
                    }
                    t = if te >= t1 - 1e-15 * t1.max(1.0) { t1 } else { te };
                    x = xe;
                }
            }
        }
        if !obs.node(t1, x) {
            return Ok(());
        }
    }
    Ok(())
}

fn record(params: &ModelParams, process: Process, config: &SimConfig, noise: &mut Noise) -> Result<Path> {
    config.validate()?;
    let n = config.steps() + 1;
    let mut rec = Recorder {
        path: Path {
            times: Vec::with_capacity(n),
            values: Vec::with_capacity(n),
            events: Vec::new(),
            threshold: config.threshold(params),
        },
    };
    drive(params, process, config, noise, &mut rec)?;
    Ok(rec.path)
}

/// Full-truncation Euler on the root representation.
pub fn simulate_root(params: &ModelParams, config: &SimConfig, noise: &mut Noise) -> Result<Path> {
    let config = SimConfig { scheme: Scheme::RootEuler, ..*config };
    record(params, Process::AlphaCir, &config, noise)
}

/// Truncated process plus thinned big jumps; `config.scheme` must be thinned.
pub fn simulate_thinned(params: &ModelParams, config: &SimConfig, noise: &mut Noise) -> Result<Path> {
    ensure(matches!(config.scheme, Scheme::Thinned { .. }), || "simulate_thinned needs a thinned scheme".to_string())?;
    record(params, Process::AlphaCir, config, noise)
}

/// The Lévy OU process with coefficients frozen at r0, under either scheme.
pub fn simulate_lou(params: &ModelParams, config: &SimConfig, noise: &mut Noise) -> Result<Path> {
    record(params, Process::Lou, config, noise)
}

/// Exact simulation of the Hawkes intensity with immigration ab, decay
/// a/n + σ_Z and jumps σ_Z, started at 0.
#[derive(Debug, Clone, Copy)]
pub struct Hawkes {
    ab: f64,
    beta: f64,
    jump: f64,
    n: f64,
}

impl Hawkes {
    pub fn new(a: f64, b: f64, sigma_z: f64, n: u32) -> Result<Self> {
        ensure(a > 0.0 && b >= 0.0 && sigma_z >= 0.0, || format!("need a > 0, b ≥ 0, sigma_z ≥ 0, got {a}, {b}, {sigma_z}"))?;
        ensure(n >= 1, || "rescaling index must be at least 1".to_string())?;
        let n = f64::from(n);
        Ok(Hawkes { ab: a * b, beta: a / n + sigma_z, jump: sigma_z, n })
    }

    fn decay(&self, lambda: f64, ds: f64) -> f64 {
        let c = self.ab / self.beta;
        c + (lambda - c) * (-self.beta * ds).exp()
    }

    /// Rescaled values r_{nt}/n at each of `times` (increasing).
    pub fn sample(&self, times: &[f64], noise: &mut Noise) -> Result<Vec<f64>> {
        let c = self.ab / self.beta;
        let mut out = Vec::with_capacity(times.len());
        let mut s = 0.0;
        let mut lambda: f64 = 0.0;
        let mut events = 0u64;
        for &t in times {
            let target = self.n * t;
            if self.jump > 0.0 {
                loop {
                    let bound = lambda.max(c);
                    if bound <= 0.0 {
                        break;
                    }
                    let cand = s + noise.exp1() / bound;
                    if cand > target {
                        break;
                    }
                    lambda = self.decay(lambda, cand - s);
                    s = cand;
                    if noise.uniform() * bound <= lambda {
                        lambda += self.jump;
                        events += 1;
                        if events > HAWKES_EVENT_LIMIT {
                            return Err(Error::numerical(format!(
                                "Hawkes intensity exploded: {events} events by s = {s:.3e}, intensity {lambda:.3e}"
                            )));
                        }
                    }
                }
            }
            lambda = self.decay(lambda, target - s);
            s = target;
            out.push(lambda / self.n);
        }
        Ok(out)
    }
}

/// Rescaled Hawkes path t ↦ r^{(n)}_{nt}/n on the grid 0, dt, …, horizon.
pub fn simulate_hawkes(a: f64, b: f64, sigma_z: f64, horizon: f64, dt: f64, n: u32, noise: &mut Noise) -> Result<Path> {
    let config = SimConfig::new(dt, horizon, Scheme::RootEuler, 0);
    config.validate()?;
    let times: Vec<f64> = (0..=config.steps()).map(|k| config.time(k)).collect();
    let values = Hawkes::new(a, b, sigma_z, n)?.sample(&times, noise)?;
    Ok(Path { times, values, events: Vec::new(), threshold: None })
}
