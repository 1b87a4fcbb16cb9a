//! The locally equivalent Lévy OU process has a Poisson first large jump;
//! compare its law with the branching model.

use alpha_cir::jump_analytics::{lou_first_jump_cdf, survival_tau};
use alpha_cir::mc_oracle::{first_jump_sample, McConfig};
use alpha_cir::mechanism::ModelParams;
use alpha_cir::simulation::{Process, Scheme};

fn main() -> alpha_cir::Result<()> {
    let p = ModelParams::new(0.1, 0.1, 0.1, 0.1, 1.5, 0.2)?;
    let y_bar = 0.01;
    let mc = McConfig::new(20_000, 1e-3, 9, Scheme::RootEuler);
    let sample = first_jump_sample(&p, Process::Lou, y_bar, 2.0, &mc)?;
    for t in [0.5, 1.0, 2.0] {
        let cdf = sample.cdf(t)?;
        println!(
            "t = {t}: LOU cdf {:.5}, sampled {:.5} ± {:.5}; alpha-CIR cdf {:.5}",
            lou_first_jump_cdf(y_bar, t, &p)?,
            cdf.value,
            cdf.std_error,
            1.0 - survival_tau(y_bar, t, &p)?
        );
    }
    Ok(())
}
