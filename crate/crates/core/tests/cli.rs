use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_alpha-cir"))
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("alpha-cir-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn run_ok(args: &[&str]) -> String {
    let out = bin().args(args).output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn simulate_writes_path_and_sidecar() {
    let out = tmp("path.csv");
    let events = tmp("events.csv");
    let o = out.to_str().unwrap();
    run_ok(&["simulate", "--scheme", "root", "--alpha", "1.5", "--horizon", "0.5", "--dt", "1e-2", "--threshold", "0.01", "--seed", "3", "--out", o, "--events", events.to_str().unwrap()]);
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("t,r\n"));
    assert_eq!(csv.lines().count(), 52);
    assert!(std::fs::read_to_string(&events).unwrap().starts_with("t,size"));
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(format!("{o}.meta.json")).unwrap()).unwrap();
    for key in ["command", "params", "config", "seed", "version", "wall_time_s"] {
        assert!(meta.get(key).is_some(), "{key}");
    }
    assert_eq!(meta["command"], "simulate");

    let again = tmp("path2.csv");
    run_ok(&["simulate", "--scheme", "root", "--alpha", "1.5", "--horizon", "0.5", "--dt", "1e-2", "--threshold", "0.01", "--seed", "3", "--out", again.to_str().unwrap()]);
    assert_eq!(csv, std::fs::read_to_string(&again).unwrap());
}

#[test]
fn fig3_preset_columns() {
    let s = run_ok(&["fig3", "--tmax", "5", "--steps", "5"]);
    let mut lines = s.lines();
    assert_eq!(lines.next().unwrap(), "T,alpha_1.2,alpha_1.5,alpha_2,cir");
    let last: Vec<f64> = lines.last().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(last[0], 5.0);
    assert!((last[2] - 0.726_395_034_5).abs() < 1e-8);
    assert!(last[1] > last[2] && last[2] > last[3] && last[3] > last[4]);
}

#[test]
fn fig4_and_fig5_presets() {
    let s = run_ok(&["fig4", "--tmax", "30", "--steps", "3"]);
    assert_eq!(s.lines().next().unwrap(), "t,alpha_1.2,alpha_1.5,alpha_1.9");
    assert_eq!(s.lines().count(), 5);
    let s = run_ok(&["fig5", "--alphas", "1.5"]);
    assert!(s.starts_with("alpha,expected_tau\n1.5,0.5676"));
}

#[test]
fn analytic_commands_run() {
    assert!(run_ok(&["bond", "--maturities", "0,1"]).starts_with("T,bond\n0,1\n"));
    assert!(run_ok(&["yield", "--tenors", "1"]).starts_with("kappa,yield"));
    let v: serde_json::Value = serde_json::from_str(&run_ok(&["put-price", "--kbar", "3e-2", "--maturity", "1"])).unwrap();
    assert!((v["price"].as_f64().unwrap() - 0.010_466_487).abs() < 1e-8);
    let v: serde_json::Value = serde_json::from_str(&run_ok(&["put-laplace", "--kbar", "0.03", "--theta", "1"])).unwrap();
    assert!(v["laplace_value"].as_f64().unwrap() > 0.0);
    assert!(run_ok(&["jump-survival", "--alpha", "1.5", "--r0", "0.2", "--y", "0.1", "--times", "1", "--route", "rhat"]).starts_with("t,survival\n1,"));
    assert!(run_ok(&["jump-counter", "--y-bar", "0.01", "--times", "0,1"]).starts_with("t,laplace\n0,1\n"));
    assert!(run_ok(&["jump-expectation", "--y-bar", "0.01", "--alphas", "1.5,1.9"]).lines().count() == 3);
    assert!(run_ok(&["stationary", "--p", "0"]).contains("\n0,1\n"));
    assert!(run_ok(&["boundary"]).contains("Inaccessible"));
    assert!(run_ok(&["measure-change", "--eta", "0.1"]).contains("jump_spec"));
    assert!(run_ok(&["hawkes-limit", "--n", "10", "--paths", "200"]).starts_with("n,mean"));
    assert!(run_ok(&["fig1", "--horizon", "0.1", "--dt", "0.01"]).starts_with("t,alpha_2,alpha_1.5,alpha_1.2"));
    assert!(run_ok(&["fig2", "--horizon", "0.1", "--dt", "0.01"]).lines().count() == 12);
}

#[test]
fn exit_codes() {
    assert_eq!(bin().args(["bond", "--alpha", "2.5"]).status().unwrap().code(), Some(2));
    assert_eq!(bin().args(["put-price"]).status().unwrap().code(), Some(2));
    assert_eq!(bin().args(["frobnicate"]).status().unwrap().code(), Some(2));
    assert_eq!(bin().args(["simulate", "--out", "/nonexistent/dir/x.csv"]).status().unwrap().code(), Some(2));
    // a level above the spot makes the hitting-time pipeline degenerate, not a numerical error
    assert_eq!(bin().args(["put-price", "--kbar", "0.2"]).status().unwrap().code(), Some(0));
}
