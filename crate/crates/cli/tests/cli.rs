use std::path::PathBuf;
use std::process::{Command, Output};

use fracrule_cli::{CalibrateOutput, FigureOutput, McOutput, RuleOutput, SurfaceOutput, VerifyOutput, WorstCaseOutput};
use fracrule_core::figure::KValue;
use fracrule_core::rho::logistic;
use fracrule_core::rules::TreatmentRule;
use fracrule_core::tau_star;
use serde::de::DeserializeOwned;
use serde::Serialize;

fn fracrule(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracrule")).args(args).output().expect("binary runs")
}

fn stdout_of(args: &[&str]) -> String {
    let out = fracrule(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    fracrule(args).status.code().unwrap()
}

// Parses JSON output and checks that re-serializing reproduces it exactly.
fn round_trip<T: Serialize + DeserializeOwned>(args: &[&str]) -> T {
    let text = stdout_of(args);
    let value: T = serde_json::from_str(&text).unwrap();
    let again = serde_json::to_string_pretty(&value).unwrap() + "\n";
    assert_eq!(again, text, "{args:?}");
    value
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect()
}

#[test]
fn calibrate_examples() {
    let c: CalibrateOutput = round_trip(&["calibrate", "--k", "0", "--sigma", "1", "--format", "json"]);
    assert_eq!(c.units, "welfare");
    assert!((c.a_star - 1.23).abs() < 0.01);
    assert_eq!(c.a_star, c.tau_star);

    let c: CalibrateOutput = round_trip(&["calibrate", "--k", "1", "--sigma", "1", "--format", "json"]);
    assert!(c.a_star < c.tau_star);
    assert!((c.a_star - 0.746_565_98).abs() < 1e-7);

    let c: CalibrateOutput = round_trip(&["calibrate", "--k", "inf", "--sigma", "1", "--format", "json"]);
    assert_eq!(c.rule, TreatmentRule::ConstantHalf);
    assert_eq!(c.a_star, 0.0);
    assert_eq!(c.k, KValue::Infinite);
    assert_eq!(c.worst_case_msr, None);

    let text = stdout_of(&["calibrate", "--k", "inf"]);
    assert_eq!(csv_rows(&text)[0][..3], ["inf", "1", "ConstantHalf"]);
}

#[test]
fn rule_examples() {
    assert_eq!(stdout_of(&["rule", "--k", "0", "--sigma", "1", "--rule", "msr", "--obs", "0"]), "0.5\n");
    // Phi(1 / sqrt(8/pi - 1)), computed independently.
    assert_eq!(
        stdout_of(&["rule", "--k", "2", "--sigma", "1", "--rule", "mean-regret", "--obs", "1"]),
        "0.789339963536\n"
    );
    assert_eq!(stdout_of(&["rule", "--k", "1", "--sigma", "1", "--rule", "mean-regret", "--obs", "-0.3"]), "0\n");
    assert_eq!(stdout_of(&["rule", "--k", "inf", "--rule", "msr", "--obs", "3"]), "0.5\n");
    let r: RuleOutput = round_trip(&["rule", "--k", "1", "--obs", "0.25", "--format", "json"]);
    assert!(r.fraction > 0.5 && r.fraction < 1.0);
}

#[test]
fn surface_output() {
    let text = stdout_of(&["surface", "--k", "1", "--grid-min", "-3", "--grid-max", "3", "--grid-points", "61"]);
    assert_eq!(text.lines().next().unwrap(), "theta_e,theta_t,msr,mean_regret");
    let rows = csv_rows(&text);
    let origin = rows.iter().find(|r| r[0] == "0" && r[1] == "0").unwrap();
    assert_eq!(origin[2], "0");
    let top = rows.iter().map(|r| r[2].parse::<f64>().unwrap()).fold(0.0, f64::max);
    let w: WorstCaseOutput = round_trip(&["worst-case", "--k", "1", "--format", "json"]);
    assert!(top <= w.result.value + 1e-10);
    for r in &rows {
        let (e, t): (f64, f64) = (r[0].parse().unwrap(), r[1].parse().unwrap());
        assert!((t - e).abs() <= 1.0 + 1e-12);
    }
    let s: SurfaceOutput = round_trip(&["surface", "--k", "0.5", "--grid-points", "7", "--format", "json"]);
    assert!(!s.rows.is_empty());
}

#[test]
fn figure1_output() {
    let f: FigureOutput = round_trip(&["figure1", "--format", "json"]);
    assert!(!f.k_list_canonical);
    assert_eq!(f.panels.len(), 6);
    let tau = tau_star().unwrap().tau_star;
    for p in &f.panels {
        assert_eq!(p.rows.len(), 401);
        let centre = p.rows.iter().find(|r| r.z == 0.0).unwrap();
        assert_eq!(centre.msr_rule, 0.5);
        match p.k {
            KValue::Finite(0.0) => {
                for r in &p.rows {
                    assert!((r.msr_rule - logistic(2.0 * tau * r.z)).abs() < 1e-12);
                }
                assert_eq!(centre.mean_regret_rule, 1.0);
            }
            KValue::Infinite => assert!(p.rows.iter().all(|r| r.msr_rule == 0.5 && r.mean_regret_rule == 0.5)),
            _ => {}
        }
    }
    let text = stdout_of(&["figure1", "--k-list", "0.5,inf", "--grid-points", "5"]);
    assert_eq!(text.lines().next().unwrap(), "k,z,msr_rule,mean_regret_rule");
    assert_eq!(text.lines().count(), 1 + 2 * 5);
}

#[test]
fn worst_case_and_monte_carlo() {
    let w: WorstCaseOutput = round_trip(&["worst-case", "--k", "1", "--method", "grid", "--format", "json"]);
    assert!((w.result.value - 0.474_131_23).abs() < 1e-7);
    assert_eq!(code(&["worst-case", "--k", "1", "--rule", "half"]), 3);

    let args = [
        "mc-regret", "--k", "1", "--theta-e", "0.75", "--theta-t", "1.75", "--draws", "200000", "--seed", "5", "--format", "json",
    ];
    let m: McOutput = round_trip(&args);
    let se = m.monte_carlo.mc_std_error.unwrap().mean_square_regret;
    assert!((m.monte_carlo.mean_square_regret - m.quadrature.mean_square_regret).abs() < 4.0 * se);
}

#[test]
fn identical_invocations_are_byte_identical() {
    let mc = ["mc-regret", "--k", "1", "--theta-e", "0.2", "--theta-t", "-0.5", "--draws", "100000", "--seed", "9"];
    assert_eq!(fracrule(&mc).stdout, fracrule(&mc).stdout);
    let mut other = mc;
    other[10] = "10";
    assert_ne!(fracrule(&mc).stdout, fracrule(&other).stdout);
    let fig = ["figure1", "--format", "json"];
    assert_eq!(fracrule(&fig).stdout, fracrule(&fig).stdout);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&["calibrate"]), 2);
    assert_eq!(code(&["calibrate", "--k", "-1"]), 2);
    assert_eq!(code(&["calibrate", "--k", "1", "--sigma", "0"]), 2);
    assert_eq!(code(&["rule", "--k", "1", "--obs", "0", "--rule", "other"]), 2);
    assert_eq!(code(&["surface", "--k", "inf"]), 2);
    assert_eq!(code(&["mc-regret", "--k", "1", "--theta-e", "0", "--theta-t", "1"]), 2);
    assert_eq!(code(&["mc-regret", "--k", "1", "--theta-e", "0", "--theta-t", "3", "--seed", "1"]), 2);
    assert_eq!(code(&["figure1", "--grid-min", "1", "--grid-max", "0"]), 2);
}

#[test]
fn verify_passes_and_writes_file() {
    let path: PathBuf = std::env::temp_dir().join(format!("fracrule-verify-{}.json", std::process::id()));
    let p = path.to_str().unwrap();
    let out = fracrule(&["verify", "--k-list", "1", "--format", "json", "--out", p]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    let v: VerifyOutput = serde_json::from_str(&text).unwrap();
    assert!(v.report.passed);
    assert_eq!(serde_json::to_string_pretty(&v).unwrap() + "\n", text);
    let table = stdout_of(&["verify", "--k-list", "0.5"]);
    assert!(table.lines().skip(1).all(|l| l.starts_with("PASS")), "{table}");
}
