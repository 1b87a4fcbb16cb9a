//! Rescaled Hawkes intensities approach the CIR diffusion limit.

use alpha_cir::mc_oracle::{cir_moments_from_zero, hawkes_moments};
use alpha_cir::simulation::{simulate_hawkes, Noise};

fn main() -> alpha_cir::Result<()> {
    let (a, b, sz) = (0.1, 0.3, 0.3);
    let limit = cir_moments_from_zero(a, b, sz, 1.0);
    println!("limit: mean {:.5}, variance {:.6}", limit.mean, limit.variance);
    for n in [10, 50, 200] {
        let m = hawkes_moments(a, b, sz, n, 1.0, 50_000, 4)?;
        println!("n = {n:>3}: mean {:.5}, variance {:.6}, error {:.3}", m.mean, m.variance, m.mean_variance_error(&limit));
    }
    let path = simulate_hawkes(a, b, sz, 5.0, 0.01, 50, &mut Noise::new(1))?;
    println!("one rescaled path ends at {:.4}", path.values.last().copied().unwrap_or(0.0));
    Ok(())
}
