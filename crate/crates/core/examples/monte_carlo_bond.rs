//! Bond price from simulated paths against the Riccati solution.

use alpha_cir::affine_engine::bond_price;
use alpha_cir::mc_oracle::{mc_bond, McConfig};
use alpha_cir::mechanism::ModelParams;
use alpha_cir::simulation::Scheme;

fn main() -> alpha_cir::Result<()> {
    let p = ModelParams::new(0.1, 0.3, 0.1, 0.3, 1.5, 0.05)?;
    for (name, scheme) in [("root", Scheme::RootEuler), ("thinned", Scheme::Thinned { y: 1.0 })] {
        let est = mc_bond(&p, 1.0, &McConfig::new(20_000, 1e-3, 21, scheme))?;
        let exact = bond_price(0.0, 1.0, p.r0, &p)?;
        println!("{name}: {:.6} ± {:.6}, analytic {exact:.6}, z = {:.2}", est.value, est.std_error, est.z_score(exact));
    }
    Ok(())
}
