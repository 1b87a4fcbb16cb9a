//! Laplace transform of the first passage below a level.

use alpha_cir::derivatives::{h_scale, hitting_time_laplace};
use alpha_cir::mc_oracle::{mc_hitting_laplace, McConfig};
use alpha_cir::mechanism::ModelParams;
use alpha_cir::simulation::Scheme;

fn main() -> alpha_cir::Result<()> {
    let p = ModelParams::new(0.1, 0.3, 0.1, 0.3, 1.5, 0.2)?;
    for x in [0.1, 0.2, 0.4] {
        println!("H(theta=0.5, x={x}) = {:.6e}", h_scale(0.5, x, 0.2, &p)?);
    }
    let exact = hitting_time_laplace(0.2, 0.1, 0.5, &p)?;
    let mc = mc_hitting_laplace(&p, 0.1, 0.5, &McConfig::new(5_000, 1e-3, 2, Scheme::Thinned { y: 1.0 }))?;
    println!("E[exp(-0.5 T_0.1)]: analytic {exact:.5}, mc {:.5} ± {:.5}", mc.value, mc.std_error);
    Ok(())
}
