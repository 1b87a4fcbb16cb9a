//! Simulates one path with each scheme and lists the large jumps.

use alpha_cir::mechanism::ModelParams;
use alpha_cir::simulation::{first_large_jump, simulate_root, simulate_thinned, Noise, Scheme, SimConfig};

fn main() -> alpha_cir::Result<()> {
    let p = ModelParams::new(0.1, 0.3, 0.1, 0.3, 1.2, 0.1)?;
    let root = SimConfig::new(1e-3, 10.0, Scheme::RootEuler, 11).with_threshold(0.03);
    let thin = SimConfig::new(1e-3, 10.0, Scheme::Thinned { y: 0.1 }, 11);

    let a = simulate_root(&p, &root, &mut Noise::new(11))?;
    let b = simulate_thinned(&p, &thin, &mut Noise::new(11))?;
    for (name, path) in [("root", &a), ("thinned", &b)] {
        let last = path.values.last().copied().unwrap_or(f64::NAN);
        let min = path.values.iter().cloned().fold(f64::INFINITY, f64::min);
        println!("{name}: r(10) = {last:.4}, min = {min:.4}, {} jumps recorded", path.events.len());
        if let Some(t) = first_large_jump(path) {
            println!("  first recorded jump at t = {t:.3}");
        }
    }
    a.write_csv(std::io::sink())?;
    Ok(())
}
