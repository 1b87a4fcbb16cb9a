//! Law of the first large jump: survival curve by two routes, the
//! jump-count transform and the expected waiting time.

use alpha_cir::jump_analytics::{counter_laplace, expected_tau_routes, survival_curve, survival_tau_via_rhat, tail_asymptotics};
use alpha_cir::mechanism::ModelParams;

fn main() -> alpha_cir::Result<()> {
    let p = ModelParams::new(0.1, 0.1, 0.1, 0.1, 1.5, 0.2)?;
    let y_bar = 0.01;
    let times: Vec<f64> = (0..=10).map(f64::from).collect();
    let curve = survival_curve(y_bar, &times, &p)?;
    for (t, s) in times.iter().zip(&curve.values).skip(1) {
        println!("t = {t:>4}: P(tau > t) = {s:.6}  (second route {:.6})", survival_tau_via_rhat(y_bar, *t, &p)?);
    }
    println!("E[exp(-J_5)] = {:.6}", counter_laplace(1.0, y_bar, 5.0, &p)?);
    let e = expected_tau_routes(y_bar, &p)?;
    println!("E[tau] = {:.6} (routes {:.8} / {:.8})", e.value(), e.primary, e.secondary);
    let tail = tail_asymptotics(5.0, y_bar, &p)?;
    println!("tail constants at t = 5: {tail:?}");
    Ok(())
}
