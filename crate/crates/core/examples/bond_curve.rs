//! Zero-coupon bond prices and yields across the stability index,
//! with the CIR model as the no-jump baseline.

use alpha_cir::affine_engine::{bond_curve, bond_yield};
use alpha_cir::mechanism::ModelParams;

fn main() -> alpha_cir::Result<()> {
    let base = ModelParams::new(0.1, 0.3, 0.1, 0.3, 1.5, 0.05)?;
    let models = [
        ("alpha 1.2", base.with_alpha(1.2)),
        ("alpha 1.5", base),
        ("alpha 2.0", base.with_alpha(2.0)),
        ("cir", base.with_sigma_z(0.0).with_alpha(2.0)),
    ];
    println!("{:>4} {:>12} {:>12} {:>12} {:>12}", "T", models[0].0, models[1].0, models[2].0, models[3].0);
    let curves: Vec<_> = models.iter().map(|(_, m)| bond_curve(m, 10.0)).collect::<Result<_, _>>()?;
    for t in 1..=10 {
        let t = t as f64;
        let row: Vec<String> = curves.iter().map(|c| format!("{:12.6}", c.laplace(base.r0, t))).collect();
        println!("{t:>4} {}", row.join(" "));
    }
    for k in [1.0, 5.0, 10.0] {
        println!("yield({k}) = {:.5}", bond_yield(0.0, k, base.r0, &base)?);
    }
    Ok(())
}
