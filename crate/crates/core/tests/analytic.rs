//! Regression values and cross-checks of the analytic pricing and
//! jump-law routines on the reference parameter sets.

use alpha_cir::affine_engine::{bond_curve, bond_price, stationary_laplace};
use alpha_cir::derivatives::{put_laplace, put_price, strike_for_kbar};
use alpha_cir::jump_analytics::{counter_laplace, expected_tau_routes, survival_tau, survival_tau_via_rhat};
use alpha_cir::mechanism::{psi, JumpSpec, ModelParams};

fn bond_params() -> ModelParams {
    ModelParams::new(0.1, 0.3, 0.1, 0.3, 1.5, 0.05).unwrap()
}

fn jump_params(alpha: f64) -> ModelParams {
    ModelParams::new(0.1, 0.1, 0.1, 0.1, alpha, 0.2).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn cir_bond(a: f64, b: f64, s: f64, r0: f64, t: f64) -> f64 {
    let h = (a * a + 2.0 * s * s).sqrt();
    let e = (h * t).exp() - 1.0;
    let den = 2.0 * h + (a + h) * e;
    let big_a = (2.0 * h * ((a + h) * t / 2.0).exp() / den).powf(2.0 * a * b / (s * s));
    big_a * (-2.0 * e / den * r0).exp()
}

#[test]
fn frozen_bond_prices() {
    let p = bond_params();
    let c = bond_curve(&p, 10.0).unwrap();
    for (t, want) in [(1.0, 0.944_243_856_8), (5.0, 0.726_395_034_5), (10.0, 0.522_366)] {
        let got = c.laplace(p.r0, t);
        assert!(rel(got, want) < 1e-6, "T={t}: {got}");
    }
}

#[test]
fn cir_reductions() {
    let p = bond_params();
    let q = p.with_alpha(2.0);
    let se = (0.1f64.powi(2) + 2.0 * 0.3f64.powi(2)).sqrt();
    let r = p.with_sigma_z(0.0);
    for t in [1.0, 5.0, 10.0] {
        assert!(rel(bond_price(0.0, t, 0.05, &q).unwrap(), cir_bond(0.1, 0.3, se, 0.05, t)) < 1e-8);
        assert!(rel(bond_price(0.0, t, 0.05, &r).unwrap(), cir_bond(0.1, 0.3, 0.1, 0.05, t)) < 1e-8);
    }
}

#[test]
fn stationary_transform_limits() {
    let p = bond_params();
    assert_eq!(stationary_laplace(0.0, &p, JumpSpec::FullStable).unwrap(), 1.0);
    let a = stationary_laplace(1.0, &p, JumpSpec::FullStable).unwrap();
    let b = stationary_laplace(2.0, &p, JumpSpec::FullStable).unwrap();
    assert!(1.0 > a && a > b && b > 0.0);
    assert!(rel(a, 0.883_584_378_4) < 1e-8, "{a}");
}

#[test]
fn frozen_put_values() {
    let p = bond_params();
    let k = strike_for_kbar(0.03, 1.0, &p).unwrap();
    assert!(rel(k, 0.039_941_106_37) < 1e-8, "{k}");
    let lt = put_laplace(1.0, 1.0, k, p.r0, &p).unwrap();
    assert!(rel(lt.laplace_value, 0.007_881_8) < 1e-4, "{}", lt.laplace_value);
    let price = put_price(1.0, 1.0, k, p.r0, &p).unwrap();
    assert!(rel(price.price, 0.010_466_487) < 1e-6, "{}", price.price);
    assert!(rel(price.price, price.diagnostics.lower_order_price.unwrap()) < 1e-4);
}

#[test]
fn frozen_survival_values() {
    let table = [
        (1.2, [0.264_911_177, 0.128_009_013, 0.053_852_982], 1.344_225_772),
        (1.5, [0.133_411_416, 0.040_149_092, 0.009_110_288], 0.567_616_673),
        (1.9, [0.262_182_915, 0.101_048_067, 0.025_547_066], 0.980_938_720),
    ];
    for (alpha, s, tau) in table {
        let p = jump_params(alpha);
        for (t, want) in [1.0, 2.0, 5.0].into_iter().zip(s) {
            let got = survival_tau(0.01, t, &p).unwrap();
            assert!(rel(got, want) < 1e-7, "alpha={alpha} t={t}: {got}");
            assert!((got - survival_tau_via_rhat(0.01, t, &p).unwrap()).abs() < 1e-6);
        }
        let e = expected_tau_routes(0.01, &p).unwrap();
        assert!(e.relative_gap() < 1e-4);
        assert!(rel(e.value(), tau) < 1e-7, "alpha={alpha}: {}", e.value());
    }
}

#[test]
fn counter_transform_brackets_survival() {
    let p = jump_params(1.5);
    for t in [1.0, 3.0] {
        let s = survival_tau(0.01, t, &p).unwrap();
        let c = counter_laplace(1.0, 0.01, t, &p).unwrap();
        // E[e^{-J}] ≥ P(J = 0), with a single jump worth e^{-1}
        assert!(c > s && c < 1.0, "t={t}: {c} vs {s}");
    }
}

#[test]
fn mechanism_is_zero_at_origin() {
    for alpha in [1.1, 1.5, 2.0] {
        assert_eq!(psi(0.0, &bond_params().with_alpha(alpha), JumpSpec::FullStable).unwrap(), 0.0);
    }
}
