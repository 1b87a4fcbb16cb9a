//! Command-line front end. Every command writes CSV or JSON data, plus a
//! JSON sidecar echoing the configuration when an output file is given.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::affine_engine::{bond_curve, bond_yield, stationary_laplace};
use crate::derivatives::{inversion_self_test, put_laplace, put_price, strike_for_kbar};
use crate::error::{Error, Result};
use crate::jump_analytics::{
    counter_curve, expected_tau, expected_tau_by_alpha, survival_curve, survival_tau_via_rhat,
    write_expected_tau_csv,
};
use crate::mc_oracle::{cir_moments_from_zero, hawkes_moments, mc_bond, McConfig};
use crate::mechanism::{boundary_classification, change_of_measure, mechanism_report, JumpSpec, ModelParams};
use crate::simulation::{drive, simulate_lou, simulate_root, simulate_thinned, Noise, PathObserver, Process, Scheme, SimConfig};
use crate::stable_core::{StableSampler, StableSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "alpha-cir", version, about = "Short-rate toolkit for the alpha-CIR model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
struct ModelArgs {
    /// Mean-reversion speed.
    #[arg(long, default_value_t = 0.1)]
    a: f64,
    /// Long-run level.
    #[arg(long, default_value_t = 0.3)]
    b: f64,
    /// Diffusion volatility.
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    /// Jump scale.
    #[arg(long = "sigma-z", default_value_t = 0.3)]
    sigma_z: f64,
    /// Stability index in (1, 2].
    #[arg(long, default_value_t = 1.5)]
    alpha: f64,
    /// Initial rate.
    #[arg(long, default_value_t = 0.05)]
    r0: f64,
}

impl ModelArgs {
    fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.a, self.b, self.sigma, self.sigma_z, self.alpha, self.r0)
    }
}

#[derive(Args, Debug, Clone, Serialize)]
struct OutputArgs {
    /// Data file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Sidecar path; defaults to <out>.meta.json.
    #[arg(long)]
    meta: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
struct JumpLevel {
    /// Jump threshold in rate units.
    #[arg(long = "y-bar", conflicts_with = "y")]
    y_bar: Option<f64>,
    /// Jump threshold on the scale of the driving stable process (ȳ = σ_Z·y).
    #[arg(long)]
    y: Option<f64>,
}

impl JumpLevel {
    fn y_bar(&self, params: &ModelParams) -> Result<f64> {
        match (self.y_bar, self.y) {
            (Some(v), _) => Ok(v),
            (None, Some(y)) => Ok(params.sigma_z * y),
            (None, None) => Err(Error::invalid("give --y-bar or --y")),
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum, Serialize, Deserialize, PartialEq, Eq)]
enum SchemeArg {
    Root,
    Thinned,
}

#[derive(Copy, Clone, Debug, ValueEnum, Serialize, Deserialize, PartialEq, Eq)]
enum ProcessArg {
    Cir,
    Lou,
}

#[derive(Args, Debug, Clone, Serialize)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_enum, default_value_t = SchemeArg::Root)]
    scheme: SchemeArg,
    #[arg(long, value_enum, default_value_t = ProcessArg::Cir)]
    process: ProcessArg,
    /// Thinning level on the stable scale.
    #[arg(long = "thin-y", default_value_t = 1.0)]
    thin_y: f64,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = 1.0)]
    horizon: f64,
    /// Record jumps above this size (rate units).
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Events CSV `t,size`.
    #[arg(long)]
    events: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct BondArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Maturities (years).
    #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 2.0, 5.0, 10.0])]
    maturities: Vec<f64>,
    /// Also estimate by Monte Carlo with this many paths.
    #[arg(long)]
    mc_paths: Option<usize>,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct YieldArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Tenors (years).
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.25, 1.0, 2.0, 5.0, 10.0])]
    tenors: Vec<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct StrikeArgs {
    /// Yield tenor.
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
    /// Strike on the yield.
    #[arg(long, conflicts_with = "kbar")]
    strike: Option<f64>,
    /// Effective strike on the spot rate; the yield strike is derived.
    #[arg(long)]
    kbar: Option<f64>,
}

impl StrikeArgs {
    fn strike(&self, params: &ModelParams) -> Result<f64> {
        match (self.strike, self.kbar) {
            (Some(k), _) => Ok(k),
            (None, Some(kb)) => strike_for_kbar(kb, self.kappa, params),
            (None, None) => Err(Error::invalid("give --strike or --kbar")),
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
struct PutLaplaceArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    strike: StrikeArgs,
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct PutPriceArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    strike: StrikeArgs,
    /// Option maturity.
    #[arg(long, default_value_t = 1.0)]
    maturity: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct TimeGrid {
    /// Explicit times; overrides --tmax/--steps.
    #[arg(long, value_delimiter = ',')]
    times: Option<Vec<f64>>,
    #[arg(long, default_value_t = 10.0)]
    tmax: f64,
    #[arg(long, default_value_t = 100)]
    steps: usize,
}

impl TimeGrid {
    fn times(&self) -> Result<Vec<f64>> {
        if let Some(t) = &self.times {
            return Ok(t.clone());
        }
        if !(self.tmax > 0.0) || self.steps == 0 {
            return Err(Error::invalid("--tmax must be positive and --steps nonzero"));
        }
        Ok((0..=self.steps).map(|i| self.tmax * i as f64 / self.steps as f64).collect())
    }
}

#[derive(Copy, Clone, Debug, ValueEnum, Serialize, Deserialize, PartialEq, Eq)]
enum SurvivalRoute {
    Ode,
    Rhat,
}

#[derive(Args, Debug, Clone, Serialize)]
struct JumpSurvivalArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    level: JumpLevel,
    #[command(flatten)]
    grid: TimeGrid,
    #[arg(long, value_enum, default_value_t = SurvivalRoute::Ode)]
    route: SurvivalRoute,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct JumpCounterArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    level: JumpLevel,
    #[command(flatten)]
    grid: TimeGrid,
    /// Laplace argument.
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct JumpExpectationArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    level: JumpLevel,
    /// Stability indices; the model's own when absent.
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct StationaryArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.5, 1.0, 2.0, 5.0, 10.0])]
    p: Vec<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct BoundaryArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Truncation level for the truncated fixed point.
    #[arg(long)]
    y: Option<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct HawkesArgs {
    #[arg(long, default_value_t = 0.1)]
    a: f64,
    #[arg(long, default_value_t = 0.3)]
    b: f64,
    #[arg(long = "sigma-z", default_value_t = 0.3)]
    sigma_z: f64,
    #[arg(long, value_delimiter = ',', default_values_t = vec![10, 50, 200])]
    n: Vec<u32>,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, default_value_t = 100_000)]
    paths: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct MeasureChangeArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Drift shift of the Brownian part.
    #[arg(long, default_value_t = 0.0)]
    eta: f64,
    /// Exponential tilt of the jump measure.
    #[arg(long, default_value_t = 0.0)]
    theta: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct PathFigArgs {
    #[arg(long, default_value_t = 10.0)]
    horizon: f64,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct Fig3Args {
    #[arg(long, default_value_t = 10.0)]
    tmax: f64,
    #[arg(long, default_value_t = 100)]
    steps: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct Fig4Args {
    #[arg(long, default_value_t = 30.0)]
    tmax: f64,
    #[arg(long, default_value_t = 300)]
    steps: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct Fig5Args {
    #[arg(long, value_delimiter = ',', default_values_t = vec![1.1, 1.2, 1.3, 1.4, 1.5, 1.6, 1.7, 1.8, 1.9])]
    alphas: Vec<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct SelfcheckArgs {
    /// Paths per Monte Carlo check.
    #[arg(long, default_value_t = 20_000)]
    paths: usize,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one path; CSV `t,r`.
    Simulate(SimulateArgs),
    /// Zero-coupon bond prices; CSV `T,bond[,mc,mc_se]`.
    Bond(BondArgs),
    /// Bond yields; CSV `kappa,yield`.
    Yield(YieldArgs),
    /// Laplace transform in maturity of the running-minimum yield put; JSON.
    PutLaplace(PutLaplaceArgs),
    /// Running-minimum yield put price; JSON.
    PutPrice(PutPriceArgs),
    /// Survival of the first large jump time; CSV `t,survival`.
    JumpSurvival(JumpSurvivalArgs),
    /// Laplace transform of the large-jump count; CSV `t,laplace`.
    JumpCounter(JumpCounterArgs),
    /// Expected first large jump time; CSV `alpha,expected_tau`.
    JumpExpectation(JumpExpectationArgs),
    /// Laplace transform of the stationary law; CSV `p,laplace`.
    Stationary(StationaryArgs),
    /// Boundary classification and mechanism roots; JSON.
    Boundary(BoundaryArgs),
    /// Rescaled Hawkes moments against the CIR limit; CSV.
    HawkesLimit(HawkesArgs),
    /// Parameters after an equivalent change of measure; JSON.
    MeasureChange(MeasureChangeArgs),
    /// Driving stable paths for alpha in {2, 1.5, 1.2}; CSV.
    Fig1(PathFigArgs),
    /// Rate paths for alpha in {2, 1.5, 1.2}; CSV.
    Fig2(PathFigArgs),
    /// Bond curves for alpha in {1.2, 1.5, 2} and the CIR baseline; CSV.
    Fig3(Fig3Args),
    /// Survival curves of the first large jump for alpha in {1.2, 1.5, 1.9}; CSV.
    Fig4(Fig4Args),
    /// Expected first large jump time against alpha; CSV.
    Fig5(Fig5Args),
    /// Analytic-vs-Monte-Carlo concordance suite.
    Selfcheck(SelfcheckArgs),
}

/// Serializable record of one invocation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub command: String,
    pub params: Option<ModelParams>,
    pub config: Value,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    #[serde(flatten)]
    experiment: &'a ExperimentConfig,
    version: &'static str,
    wall_time_s: f64,
}

/// Parses `argv` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Numerical(_) | Error::RouteDisagreement(_) => EXIT_NUMERICAL,
        _ => EXIT_INVALID,
    }
}

fn open_out(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_csv(out: &Option<PathBuf>, header: &[String], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(open_out(out)?);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn write_json(out: &Option<PathBuf>, value: &impl Serialize) -> Result<()> {
    let mut w = open_out(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

fn sidecar_path(output: &OutputArgs) -> Option<PathBuf> {
    output.meta.clone().or_else(|| {
        output.out.as_ref().map(|p| {
            let mut s = p.clone().into_os_string();
            s.push(".meta.json");
            PathBuf::from(s)
        })
    })
}

fn finish(
    name: &str,
    params: Option<ModelParams>,
    args: &impl Serialize,
    seed: Option<u64>,
    output: &OutputArgs,
    start: Instant,
) -> Result<()> {
    let Some(path) = sidecar_path(output) else { return Ok(()) };
    let experiment = ExperimentConfig {
        command: name.to_string(),
        params,
        config: serde_json::to_value(args)?,
        seed,
        out: output.out.clone(),
    };
    let sidecar = Sidecar { experiment: &experiment, version: env!("CARGO_PKG_VERSION"), wall_time_s: start.elapsed().as_secs_f64() };
    write_json(&Some(path), &sidecar)
}

fn fmt_alpha(a: f64) -> String {
    format!("alpha_{a}")
}

fn dispatch(command: Command) -> Result<i32> {
    let start = Instant::now();
    match command {
        Command::Simulate(args) => {
            let p = args.model.params()?;
            let scheme = match args.scheme {
                SchemeArg::Root => Scheme::RootEuler,
                SchemeArg::Thinned => Scheme::Thinned { y: args.thin_y },
            };
            let mut cfg = SimConfig::new(args.dt, args.horizon, scheme, args.seed);
            cfg.record_threshold = args.threshold;
            let mut noise = Noise::new(args.seed);
            let path = match (args.process, args.scheme) {
                (ProcessArg::Lou, _) => simulate_lou(&p, &cfg, &mut noise)?,
                (ProcessArg::Cir, SchemeArg::Root) => simulate_root(&p, &cfg, &mut noise)?,
                (ProcessArg::Cir, SchemeArg::Thinned) => simulate_thinned(&p, &cfg, &mut noise)?,
            };
            path.write_csv(open_out(&args.output.out)?)?;
            if let Some(ev) = &args.events {
                path.write_events_csv(File::create(ev)?)?;
            }
            finish("simulate", Some(p), &args, Some(args.seed), &args.output, start)?;
        }
        Command::Bond(args) => {
            let p = args.model.params()?;
            let horizon = args.maturities.iter().cloned().fold(0.0, f64::max);
            if args.maturities.iter().any(|&t| !(t >= 0.0)) {
                return Err(Error::invalid("maturities must be nonnegative"));
            }
            let curve = if horizon > 0.0 { Some(bond_curve(&p, horizon)?) } else { None };
            let mut header = vec!["T".to_string(), "bond".to_string()];
            if args.mc_paths.is_some() {
                header.extend(["mc".to_string(), "mc_se".to_string()]);
            }
            let mut rows = Vec::new();
            for &t in &args.maturities {
                let b = match &curve {
                    Some(c) if t > 0.0 => c.laplace(p.r0, t),
                    _ => 1.0,
                };
                let mut row = vec![t, b];
                if let Some(n) = args.mc_paths {
                    if t > 0.0 {
                        let e = mc_bond(&p, t, &McConfig::new(n, args.dt, args.seed, Scheme::RootEuler))?;
                        row.extend([e.value, e.std_error]);
                    } else {
                        row.extend([1.0, 0.0]);
                    }
                }
                rows.push(row);
            }
            write_csv(&args.output.out, &header, &rows)?;
            finish("bond", Some(p), &args, Some(args.seed), &args.output, start)?;
        }
        Command::Yield(args) => {
            let p = args.model.params()?;
            let rows = args
                .tenors
                .iter()
                .map(|&k| Ok(vec![k, bond_yield(0.0, k, p.r0, &p)?]))
                .collect::<Result<Vec<_>>>()?;
            write_csv(&args.output.out, &["kappa".into(), "yield".into()], &rows)?;
            finish("yield", Some(p), &args, None, &args.output, start)?;
        }
        Command::PutLaplace(args) => {
            let p = args.model.params()?;
            let k = args.strike.strike(&p)?;
            let out = put_laplace(args.theta, args.strike.kappa, k, p.r0, &p)?;
            write_json(&args.output.out, &out)?;
            finish("put-laplace", Some(p), &args, None, &args.output, start)?;
        }
        Command::PutPrice(args) => {
            let p = args.model.params()?;
            let k = args.strike.strike(&p)?;
            let out = put_price(args.maturity, args.strike.kappa, k, p.r0, &p)?;
            write_json(&args.output.out, &out)?;
            finish("put-price", Some(p), &args, None, &args.output, start)?;
        }
        Command::JumpSurvival(args) => {
            let p = args.model.params()?;
            let yb = args.level.y_bar(&p)?;
            let times = args.grid.times()?;
            let values = match args.route {
                SurvivalRoute::Ode => survival_curve(yb, &times, &p)?.values,
                SurvivalRoute::Rhat => times.iter().map(|&t| survival_tau_via_rhat(yb, t, &p)).collect::<Result<_>>()?,
            };
            let rows: Vec<Vec<f64>> = times.iter().zip(values).map(|(&t, s)| vec![t, s]).collect();
            write_csv(&args.output.out, &["t".into(), "survival".into()], &rows)?;
            finish("jump-survival", Some(p), &args, None, &args.output, start)?;
        }
        Command::JumpCounter(args) => {
            let p = args.model.params()?;
            let yb = args.level.y_bar(&p)?;
            let times = args.grid.times()?;
            let c = counter_curve(args.p, yb, &times, &p)?;
            let rows: Vec<Vec<f64>> = c.t.iter().zip(&c.values).map(|(&t, &v)| vec![t, v]).collect();
            write_csv(&args.output.out, &["t".into(), "laplace".into()], &rows)?;
            finish("jump-counter", Some(p), &args, None, &args.output, start)?;
        }
        Command::JumpExpectation(args) => {
            let p = args.model.params()?;
            let yb = args.level.y_bar(&p)?;
            let alphas = args.alphas.clone().unwrap_or_else(|| vec![p.alpha]);
            let rows = expected_tau_by_alpha(yb, &alphas, &p)?;
            write_expected_tau_csv(&rows, open_out(&args.output.out)?)?;
            finish("jump-expectation", Some(p), &args, None, &args.output, start)?;
        }
        Command::Stationary(args) => {
            let p = args.model.params()?;
            let rows = args
                .p
                .iter()
                .map(|&q| Ok(vec![q, stationary_laplace(q, &p, JumpSpec::FullStable)?]))
                .collect::<Result<Vec<_>>>()?;
            write_csv(&args.output.out, &["p".into(), "laplace".into()], &rows)?;
            finish("stationary", Some(p), &args, None, &args.output, start)?;
        }
        Command::Boundary(args) => {
            let p = args.model.params()?;
            let out = json!({
                "boundary": boundary_classification(&p)?,
                "mechanism": mechanism_report(&p, JumpSpec::FullStable, args.y)?,
            });
            write_json(&args.output.out, &out)?;
            finish("boundary", Some(p), &args, None, &args.output, start)?;
        }
        Command::HawkesLimit(args) => {
            let reference = cir_moments_from_zero(args.a, args.b, args.sigma_z, args.t);
            let mut rows = Vec::new();
            for &n in &args.n {
                let m = hawkes_moments(args.a, args.b, args.sigma_z, n, args.t, args.paths, args.seed)?;
                rows.push(vec![
                    f64::from(n),
                    m.mean,
                    m.variance,
                    m.third,
                    m.mean_variance_error(&reference),
                    m.max_relative_error(&reference),
                ]);
            }
            rows.push(vec![f64::INFINITY, reference.mean, reference.variance, reference.third, 0.0, 0.0]);
            let header: Vec<String> =
                ["n", "mean", "variance", "third", "mean_var_rel_error", "max_rel_error"].iter().map(|s| s.to_string()).collect();
            write_csv(&args.output.out, &header, &rows)?;
            finish("hawkes-limit", None, &args, Some(args.seed), &args.output, start)?;
        }
        Command::MeasureChange(args) => {
            let p = args.model.params()?;
            let (q, spec) = change_of_measure(&p, args.eta, args.theta)?;
            write_json(&args.output.out, &json!({ "params": q, "jump_spec": spec }))?;
            finish("measure-change", Some(p), &args, None, &args.output, start)?;
        }
        Command::Fig1(args) => {
            fig_paths(&args, true)?;
            finish("fig1", Some(fig12_params(1.5)?), &args, Some(args.seed), &args.output, start)?;
        }
        Command::Fig2(args) => {
            fig_paths(&args, false)?;
            finish("fig2", Some(fig12_params(1.5)?), &args, Some(args.seed), &args.output, start)?;
        }
        Command::Fig3(args) => {
            let base = fig3_params(1.5)?;
            let times: Vec<f64> = (0..=args.steps).map(|i| args.tmax * i as f64 / args.steps as f64).collect();
            let mut models: Vec<(String, ModelParams)> =
                [1.2, 1.5, 2.0].iter().map(|&a| (fmt_alpha(a), base.with_alpha(a))).collect();
            models.push(("cir".to_string(), base.with_sigma_z(0.0).with_alpha(2.0)));
            let curves = models.iter().map(|(_, m)| bond_curve(m, args.tmax)).collect::<Result<Vec<_>>>()?;
            let rows: Vec<Vec<f64>> = times
                .iter()
                .map(|&t| {
                    let mut row = vec![t];
                    row.extend(curves.iter().map(|c| if t > 0.0 { c.laplace(base.r0, t) } else { 1.0 }));
                    row
                })
                .collect();
            let mut header = vec!["T".to_string()];
            header.extend(models.iter().map(|m| m.0.clone()));
            write_csv(&args.output.out, &header, &rows)?;
            finish("fig3", Some(base), &args, None, &args.output, start)?;
        }
        Command::Fig4(args) => {
            let base = fig4_params(1.5)?;
            let yb = FIG4_Y * base.sigma_z;
            let times: Vec<f64> = (0..=args.steps).map(|i| args.tmax * i as f64 / args.steps as f64).collect();
            let alphas = [1.2, 1.5, 1.9];
            let curves = alphas.iter().map(|&a| survival_curve(yb, &times, &base.with_alpha(a))).collect::<Result<Vec<_>>>()?;
            let rows: Vec<Vec<f64>> = (0..times.len())
                .map(|i| {
                    let mut row = vec![times[i]];
                    row.extend(curves.iter().map(|c| c.values[i]));
                    row
                })
                .collect();
            let mut header = vec!["t".to_string()];
            header.extend(alphas.iter().map(|&a| fmt_alpha(a)));
            write_csv(&args.output.out, &header, &rows)?;
            finish("fig4", Some(base), &args, None, &args.output, start)?;
        }
        Command::Fig5(args) => {
            let base = fig4_params(1.5)?;
            let rows = expected_tau_by_alpha(FIG4_Y * base.sigma_z, &args.alphas, &base)?;
            write_expected_tau_csv(&rows, open_out(&args.output.out)?)?;
            finish("fig5", Some(base), &args, None, &args.output, start)?;
        }
        Command::Selfcheck(args) => {
            let report = selfcheck(args.paths, args.seed)?;
            let failed = report.iter().filter(|c| !c.pass).count();
            let mut err = io::stderr().lock();
            for c in &report {
                writeln!(err, "[{}] {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail)?;
            }
            write_json(&args.output.out, &report)?;
            finish("selfcheck", None, &args, Some(args.seed), &args.output, start)?;
            return Ok(if failed == 0 { EXIT_OK } else { EXIT_NUMERICAL });
        }
    }
    Ok(EXIT_OK)
}

const FIG4_Y: f64 = 0.1;

fn fig12_params(alpha: f64) -> Result<ModelParams> {
    ModelParams::new(0.1, 0.3, 0.1, 0.3, alpha, 0.1)
}

fn fig3_params(alpha: f64) -> Result<ModelParams> {
    ModelParams::new(0.1, 0.3, 0.1, 0.3, alpha, 0.05)
}

fn fig4_params(alpha: f64) -> Result<ModelParams> {
    ModelParams::new(0.1, 0.1, 0.1, 0.1, alpha, 0.2)
}

struct Grid {
    values: Vec<f64>,
}

impl PathObserver for Grid {
    fn node(&mut self, _t: f64, r: f64) -> bool {
        self.values.push(r);
        true
    }
}

fn fig_paths(args: &PathFigArgs, driver: bool) -> Result<()> {
    let alphas = [2.0, 1.5, 1.2];
    let cfg = SimConfig::new(args.dt, args.horizon, Scheme::RootEuler, args.seed);
    cfg.validate()?;
    let times: Vec<f64> = (0..=cfg.steps()).map(|k| cfg.time(k)).collect();
    let mut columns = Vec::new();
    for (i, &a) in alphas.iter().enumerate() {
        let mut noise = Noise::for_path(args.seed, i as u64, false);
        if driver {
            let s = StableSampler::new(StableSpec::new(a)?);
            let mut z = 0.0;
            let mut col = vec![0.0];
            for k in 1..times.len() {
                z += s.sample(times[k] - times[k - 1], noise.jump_rng());
                col.push(z);
            }
            columns.push(col);
        } else {
            let mut g = Grid { values: Vec::with_capacity(times.len()) };
            drive(&fig12_params(a)?, Process::AlphaCir, &cfg, &mut noise, &mut g)?;
            columns.push(g.values);
        }
    }
    let rows: Vec<Vec<f64>> = (0..times.len())
        .map(|k| {
            let mut row = vec![times[k]];
            row.extend(columns.iter().map(|c| c[k]));
            row
        })
        .collect();
    let mut header = vec!["t".to_string()];
    header.extend(alphas.iter().map(|&a| fmt_alpha(a)));
    write_csv(&args.output.out, &header, &rows)
}

/// One line of the self-check report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn mc_check(name: &str, est: &crate::mc_oracle::McEstimate, target: f64) -> Check {
    Check {
        name: name.to_string(),
        pass: est.within(target, 3.0),
        detail: format!("analytic {target:.6e}, mc {:.6e} ± {:.2e} ({:.2} SE)", est.value, est.std_error, est.z_score(target)),
    }
}

/// Analytic-vs-Monte-Carlo concordance at reduced path counts.
pub fn selfcheck(paths: usize, seed: u64) -> Result<Vec<Check>> {
    use crate::derivatives::hitting_time_laplace;
    use crate::jump_analytics::{lou_first_jump_cdf, survival_tau};
    use crate::mc_oracle::{first_jump_sample, mc_hitting_laplace, mc_running_min_put};

    let mut out = Vec::new();
    for &c in &[0.1, 1.0] {
        let got = inversion_self_test(c, 1.0)?;
        let want = (-c).exp();
        out.push(Check {
            name: format!("stehfest self-test c={c}"),
            pass: (got - want).abs() < 1e-8,
            detail: format!("{got:.12} vs {want:.12}"),
        });
    }
    let f3 = fig3_params(1.5)?;
    let bond = bond_curve(&f3, 1.0)?.laplace(f3.r0, 1.0);
    let est = mc_bond(&f3, 1.0, &McConfig::new(paths, 1e-3, seed, Scheme::RootEuler))?;
    out.push(mc_check("bond T=1", &est, bond));

    let f4 = fig4_params(1.5)?;
    let yb = FIG4_Y * f4.sigma_z;
    let mc = McConfig::new(paths, 1e-3, seed + 1, Scheme::RootEuler);
    let sample = first_jump_sample(&f4, Process::AlphaCir, yb, 50.0, &mc)?;
    for &t in &[0.5, 1.0, 2.0, 5.0] {
        out.push(mc_check(&format!("survival t={t}"), &sample.survival(t)?, survival_tau(yb, t, &f4)?));
    }
    let et = expected_tau(yb, &f4)?;
    out.push(mc_check("expected tau", &sample.mean(), et.value()));
    let lou = first_jump_sample(&f4, Process::Lou, yb, 2.0, &McConfig { seed: seed + 2, ..mc })?;
    for &t in &[0.5, 1.0, 2.0] {
        out.push(mc_check(&format!("lou cdf t={t}"), &lou.cdf(t)?, lou_first_jump_cdf(yb, t, &f4)?));
    }
    let k = strike_for_kbar(0.03, 1.0, &f3)?;
    let price = put_price(1.0, 1.0, k, f3.r0, &f3)?.price;
    let put = mc_running_min_put(&f3, 1.0, 1.0, k, &McConfig::new(paths, 1e-3, seed + 3, Scheme::Thinned { y: 1.0 }))?;
    out.push(mc_check("put price", &put.reduced_form, price));
    out.push(Check {
        name: "put payoff forms".to_string(),
        pass: put.form_gap_se() <= 2.0,
        detail: format!("{:.6e} vs {:.6e}", put.yield_form.value, put.reduced_form.value),
    });
    let fh = f3.with_r0(0.2);
    let hit = mc_hitting_laplace(&fh, 0.1, 0.5, &McConfig::new(paths / 4, 1e-3, seed + 4, Scheme::Thinned { y: 1.0 }))?;
    out.push(mc_check("hitting time", &hit, hitting_time_laplace(0.2, 0.1, 0.5, &fh)?));
    Ok(out)
}
