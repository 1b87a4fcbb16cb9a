//! Laplace transform of the stationary distribution, checked against
//! a long Monte Carlo run.

use alpha_cir::affine_engine::stationary_laplace;
use alpha_cir::mc_oracle::{mc_stationary_laplace, McConfig};
use alpha_cir::mechanism::{JumpSpec, ModelParams};
use alpha_cir::simulation::Scheme;

fn main() -> alpha_cir::Result<()> {
    let p = ModelParams::new(0.5, 0.3, 0.1, 0.3, 1.5, 0.05)?;
    let mc = McConfig::new(4_000, 1e-2, 3, Scheme::RootEuler);
    for q in [1.0, 5.0] {
        let exact = stationary_laplace(q, &p, JumpSpec::FullStable)?;
        let est = mc_stationary_laplace(&p, q, 40.0, &mc)?;
        println!("p = {q}: stationary {exact:.6}, r_40 sample {:.6} ± {:.6}", est.value, est.std_error);
    }
    Ok(())
}
