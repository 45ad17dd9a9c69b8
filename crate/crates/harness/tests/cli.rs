use std::path::Path;
use std::process::{Command, Output};

use viopt_core::problems::ProblemInstance;
use viopt_harness::{load_results, load_trajectories, parse_config_str, run_experiment};

const ROTATION: &str = r#"{
    "problem": {"kind": "bilinear_1d"},
    "methods": [
        {"id": "sim_sgd", "step_sizes": [0.1]},
        {"id": "extragradient", "step_sizes": [0.1]}
    ],
    "iters": 200,
    "eval_stride": 10,
    "seeds": [5],
    "start": [1.0, 1.0]
}"#;

fn viopt(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_viopt"));
    cmd.args(args).env_remove("VIOPT_WORKERS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_writes_results_problem_and_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), ROTATION);
    let out = dir.path().join("out");
    let o = viopt(&["run", &config, "--out", s(&out), "--workers", "2"], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let text = std::fs::read_to_string(out.join("results.csv")).unwrap();
    assert!(text.starts_with("method,step_size,seed,iter,metric,value,diverged,eval_count\n"));
    assert!(!text.contains('\r'));

    // The CSV holds exactly what the library produces.
    let expected = run_experiment(&parse_config_str(ROTATION).unwrap(), Some(1)).unwrap();
    assert_eq!(load_results(&out.join("results.csv")).unwrap(), expected.records);
    assert_eq!(load_trajectories(&out.join("trajectory.csv")).unwrap(), expected.trajectories);

    let problem = ProblemInstance::from_json(&std::fs::read_to_string(out.join("problem.json")).unwrap()).unwrap();
    assert_eq!(problem.label(), "bilinear_1d");

    // Extragradient ends closer to the solution than simultaneous steps.
    let last = |m: &str| expected.records.iter().rfind(|r| r.method == m).unwrap().value;
    assert!(last("extragradient") < last("sim_sgd"));
}

#[test]
fn higher_dimensional_runs_skip_the_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{"problem": {"kind": "stochastic_bilinear", "parameters": {"n": 5, "d": 2}}, "methods": [{"id": "avg_sgd", "step_sizes": [0.1]}],
            "iters": 20, "seeds": [1]}"#,
    );
    let out = dir.path().join("out");
    assert!(viopt(&["run", &config, "--out", s(&out)], &[]).status.success());
    assert!(out.join("results.csv").exists());
    assert!(!out.join("trajectory.csv").exists());
}

#[test]
fn config_errors_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &ROTATION.replace("\"iters\": 200", "\"iters\": 0"));
    let o = viopt(&["run", &config, "--out", s(&dir.path().join("out"))], &[]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("iters must be ≥ 1"));

    let config = write_config(dir.path(), &ROTATION.replace("\"seeds\"", "\"seed_list\""));
    let o = viopt(&["run", &config, "--out", s(&dir.path().join("out"))], &[]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed_list"));
}

#[test]
fn environment_overrides_the_worker_flag() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), ROTATION);
    let out = dir.path().join("out");
    assert!(!viopt(&["run", &config, "--out", s(&out), "--workers", "0"], &[]).status.success());
    assert!(viopt(&["run", &config, "--out", s(&out), "--workers", "0"], &[("VIOPT_WORKERS", "3")]).status.success());
    let o = viopt(&["run", &config, "--out", s(&out)], &[("VIOPT_WORKERS", "many")]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("VIOPT_WORKERS"));
}

#[test]
fn plot_draws_one_curve_per_method() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), ROTATION);
    let out = dir.path().join("out");
    assert!(viopt(&["run", &config, "--out", s(&out)], &[]).status.success());
    let results = out.join("results.csv");

    let svg = dir.path().join("curves.svg");
    assert!(viopt(&["plot", s(&results), "--out", s(&svg)], &[]).status.success());
    let first = std::fs::read_to_string(&svg).unwrap();
    assert_eq!(first.matches("<polyline").count(), 2);
    assert!(viopt(&["plot", s(&results), "--out", s(&svg)], &[]).status.success());
    assert_eq!(std::fs::read_to_string(&svg).unwrap(), first);

    let plane = dir.path().join("plane.svg");
    assert!(viopt(&["plot", s(&results), "--out", s(&plane), "--plane"], &[]).status.success());
    let text = std::fs::read_to_string(&plane).unwrap();
    assert_eq!(text.matches("<polyline").count(), 2);
    assert!(text.contains("marker-end"));
}

#[test]
fn verify_reports_every_check() {
    let o = viopt(&["verify"], &[]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS ")).count(), 9);
    assert!(!text.contains("FAIL"));
}
