//! Draws unit increments of the spectrally positive stable law and compares
//! the empirical Laplace transform with exp(-q^α / cos(πα/2)).

use alpha_cir::mc_oracle::mc_stable_laplace;
use alpha_cir::stable_core::{big_jump_mass, StableSpec};

fn main() -> alpha_cir::Result<()> {
    let qs = [0.1, 0.5, 1.0];
    for alpha in [1.2, 1.5, 1.9] {
        let spec = StableSpec::new(alpha)?;
        let est = mc_stable_laplace(alpha, &qs, 200_000, 7)?;
        println!("alpha = {alpha}  (jumps above 1 arrive at rate {:.4})", big_jump_mass(alpha, 1.0)?);
        for (q, e) in qs.iter().zip(&est) {
            let exact = spec.laplace_exponent(*q).exp();
            println!("  q = {q:<4} exact {exact:.6}  mc {:.6} ± {:.6}", e.value, e.std_error);
        }
    }
    Ok(())
}
