//! Branching mechanism, boundary behaviour and a change of measure.

use alpha_cir::mechanism::{
    boundary_classification, change_of_measure, fixed_point_truncated, root_psi_equals_one, JumpSpec, Mechanism,
    ModelParams,
};

fn main() -> alpha_cir::Result<()> {
    let p = ModelParams::new(0.1, 0.3, 0.1, 0.3, 1.5, 0.05)?;
    let full = Mechanism::new(&p, JumpSpec::FullStable)?;
    for q in [0.0, 0.5, 1.0, 2.0, 5.0] {
        println!("Psi({q}) = {:.6}  Psi'({q}) = {:.6}", full.psi(q), full.dpsi(q));
    }
    println!("root of Psi = 1: {:.6}", root_psi_equals_one(&p, JumpSpec::FullStable)?);
    println!("truncated fixed point at y = 1: {:.6}", fixed_point_truncated(&p, 1.0)?);
    println!("boundary at zero: {:?}", boundary_classification(&p)?);

    let (q, spec) = change_of_measure(&p, 0.2, 0.5)?;
    println!("after measure change: a = {:.4}, b = {:.4}, jumps {spec:?}", q.a, q.b);
    Ok(())
}
