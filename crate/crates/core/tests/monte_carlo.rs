//! Small-budget Monte Carlo concordance checks. The full-budget versions
//! live in the acceptance target.

use alpha_cir::affine_engine::{bond_price, joint_laplace};
use alpha_cir::jump_analytics::{lou_first_jump_cdf, survival_tau};
use alpha_cir::mc_oracle::{first_jump_sample, mc_bond, mc_counter, mc_terminal_laplace, McConfig};
use alpha_cir::mechanism::{JumpSpec, ModelParams};
use alpha_cir::simulation::{Process, Scheme};

fn p3() -> ModelParams {
    ModelParams::new(0.1, 0.3, 0.1, 0.3, 1.5, 0.05).unwrap()
}

#[test]
fn deterministic_rate_discounts_exactly() {
    let p = ModelParams::new(0.3, 0.04, 0.0, 0.0, 1.5, 0.04).unwrap();
    let e = mc_bond(&p, 2.0, &McConfig::new(200, 1e-3, 1, Scheme::RootEuler)).unwrap();
    assert!((e.value - (-0.08f64).exp()).abs() < 1e-10);
    assert!(e.std_error < 1e-12);
}

#[test]
fn bond_within_three_errors() {
    let p = p3();
    let exact = bond_price(0.0, 1.0, p.r0, &p).unwrap();
    let e = mc_bond(&p, 1.0, &McConfig::new(4_000, 2e-3, 3, Scheme::RootEuler)).unwrap();
    assert!(e.within(exact, 3.0), "z = {}", e.z_score(exact));
}

#[test]
fn schemes_share_terminal_law() {
    let p = p3();
    let ps = [0.5, 2.0];
    let root = mc_terminal_laplace(&p, 1.0, &ps, &McConfig::new(4_000, 2e-3, 4, Scheme::RootEuler)).unwrap();
    let thin = mc_terminal_laplace(&p, 1.0, &ps, &McConfig::new(4_000, 2e-3, 5, Scheme::Thinned { y: 1.0 })).unwrap();
    for (i, &q) in ps.iter().enumerate() {
        let exact = joint_laplace(p.r0, 1.0, q, 0.0, &p, JumpSpec::FullStable).unwrap();
        assert!(root[i].within(exact, 3.0) && thin[i].within(exact, 3.0), "p = {q}");
    }
}

#[test]
fn first_jump_survival_and_lou_law() {
    let p = ModelParams::new(0.1, 0.1, 0.1, 0.1, 1.5, 0.2).unwrap();
    let mc = McConfig::new(3_000, 1e-3, 6, Scheme::RootEuler);
    let s = first_jump_sample(&p, Process::AlphaCir, 0.01, 3.0, &mc).unwrap();
    assert_eq!(s.survival(0.0).unwrap().value, 1.0);
    for t in [0.5, 1.0, 2.0] {
        let exact = survival_tau(0.01, t, &p).unwrap();
        let e = s.survival(t).unwrap();
        assert!(e.within(exact, 3.0), "t = {t}: z = {}", e.z_score(exact));
    }
    let lou = first_jump_sample(&p, Process::Lou, 0.01, 1.0, &mc).unwrap();
    let exact = lou_first_jump_cdf(0.01, 1.0, &p).unwrap();
    assert!(lou.cdf(1.0).unwrap().within(exact, 3.0));
}

#[test]
fn counter_at_zero_is_one() {
    let p = ModelParams::new(0.1, 0.1, 0.1, 0.1, 1.5, 0.2).unwrap();
    let (lt, _) = mc_counter(&p, 0.0, 0.01, 1.0, &McConfig::new(100, 1e-2, 7, Scheme::RootEuler)).unwrap();
    assert_eq!(lt.value, 1.0);
    assert_eq!(lt.std_error, 0.0);
}

#[test]
fn standard_error_scales_with_paths() {
    let p = p3();
    let a = mc_bond(&p, 1.0, &McConfig::new(1_000, 1e-2, 8, Scheme::RootEuler)).unwrap();
    let b = mc_bond(&p, 1.0, &McConfig::new(4_000, 1e-2, 9, Scheme::RootEuler)).unwrap();
    let ratio = a.std_error / b.std_error;
    assert!((1.6..2.4).contains(&ratio), "{ratio}");
}

#[test]
fn fixed_seed_is_reproducible() {
    let p = p3();
    let mc = McConfig::new(500, 1e-2, 10, Scheme::Thinned { y: 1.0 });
    assert_eq!(mc_bond(&p, 1.0, &mc).unwrap().value, mc_bond(&p, 1.0, &mc).unwrap().value);
}
