//! Numerical building blocks shared by the model modules.

pub mod gauss;
pub mod ode;
pub mod quadrature;
pub mod roots;
pub mod stehfest;

/// e^{-x} - 1 + x, accurate for small x.
pub fn exp_m1_plus(x: f64) -> f64 {
    if x.abs() < 0.1 {
        // alternating series, terms x^k/k! with k >= 2
        let mut term = x * x / 2.0;
        let mut sum = term;
        let mut k = 2.0;
        while term.abs() > 1e-18 * sum.abs() {
            k += 1.0;
            term *= -x / k;
            sum += term;
        }
        sum
    } else {
        (-x).exp_m1() + x
    }
}
