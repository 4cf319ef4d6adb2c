use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_avibound"))
}

fn run(args: &[&str], out: &Path) -> Output {
    bin()
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/schemas")
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn assert_valid(report: &Path, schema: &str) {
    let doc = read_json(report);
    for name in ["envelope", schema] {
        let s = read_json(&schema_dir().join(format!("{name}.schema.json")));
        let v = jsonschema::validator_for(&s).unwrap_or_else(|e| panic!("{name}: {e}"));
        let errors: Vec<String> = v
            .iter_errors(&doc)
            .map(|e| format!("{} at {}", e, e.instance_path))
            .collect();
        assert!(
            errors.is_empty(),
            "{} against {name}: {errors:?}",
            report.display()
        );
    }
}

#[test]
fn residual_of_one_dimensional_lcp() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["residual", "--instance", "lcp1d.json", "--x", "3"],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("r=[2], norm=2"), "{}", stdout(&o));
    let o = run(
        &["residual", "--instance", "lcp1d", "--x", "-2"],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("r=[-3], norm=3"), "{}", stdout(&o));
    assert_valid(&dir.path().join("residual.json"), "residual");
}

#[test]
fn suite_passes_and_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["suite", "--seed", "7"], dir.path());
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let files: Vec<PathBuf> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    assert!(files.len() >= 8, "{} reports", files.len());
    for f in &files {
        let schema = if f.ends_with("suite_summary.json") {
            "suite_summary"
        } else {
            "suite_entry"
        };
        assert_valid(f, schema);
        assert_eq!(read_json(f)["pass"], Value::Bool(true));
    }
    let summary = read_json(&dir.path().join("suite_summary.json"));
    assert_eq!(summary["result"]["failed"], 0);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["residual", "--instance", "lcp1d", "--x", "1", "--bogus"],
        dir.path(),
    );
    assert_eq!(code(&o), 2);
    assert_eq!(code(&run(&["frobnicate"], dir.path())), 2);
    assert_eq!(code(&run(&["residual", "--x", "1"], dir.path())), 2);
    assert_eq!(
        code(&run(
            &["residual", "--instance", "lcp1d", "--x", "1,2"],
            dir.path()
        )),
        2
    );
    assert_eq!(
        code(&run(
            &["residual", "--instance", "no_such_entry", "--x", "1"],
            dir.path()
        )),
        2
    );
    assert_eq!(
        code(&run(&["verify-minimax", "--instance", "lcp1d"], dir.path())),
        2
    );
}

#[test]
fn caps_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["truncation-study", "--dims", "5,60"], dir.path());
    assert_eq!(code(&o), 3);
    let o = run(&["generate", "avi", "--n", "3", "--m", "40"], dir.path());
    assert_eq!(code(&o), 3);
}

#[test]
fn failed_verdict_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &[
            "solve",
            "--instance",
            "truncation_harmonic_5",
            "--max-iters",
            "3",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).starts_with("FAIL"));
    assert_valid(&dir.path().join("solve.json"), "solve");
    assert!(dir.path().join("solve_trace.csv").exists());
}

#[test]
fn generated_instances_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &[
            "generate",
            "avi",
            "--seed",
            "3",
            "--n",
            "2",
            "--m",
            "3",
            "--bounded",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert_valid(&dir.path().join("generate_avi_3.json"), "generate");
    let inst = dir.path().join("instances/avi_3.json");
    assert!(inst.exists());
    let inst_arg = inst.to_str().unwrap();
    let o = run(&["solve", "--instance", inst_arg], dir.path());
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let o = run(&["enumerate", "--instance", inst_arg], dir.path());
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert_valid(&dir.path().join("enumerate.json"), "enumerate");

    let o = run(&["generate", "gpm", "--seed", "4", "--bounded"], dir.path());
    assert_eq!(code(&o), 0);
    let gpm = dir.path().join("instances/gpm_4.json");
    let o = run(
        &["verify-minimax", "--instance", gpm.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert_valid(&dir.path().join("minimax.json"), "minimax");
}

#[test]
fn every_report_matches_its_schema() {
    let dir = tempfile::tempdir().unwrap();
    let cases: &[(&[&str], &str, &str)] = &[
        (
            &["project", "--instance", "zero_triangle", "--x", "1,1"],
            "project.json",
            "project",
        ),
        (
            &["solve", "--instance", "skew2d", "--method", "fixed-point"],
            "solve.json",
            "solve",
        ),
        (
            &["enumerate", "--instance", "ray2d", "--y", "-1,0.5"],
            "enumerate.json",
            "enumerate",
        ),
        (
            &[
                "verify-error-bound",
                "--instance",
                "lcp1d",
                "--samples",
                "100",
                "--local-radius",
            ],
            "error_bound.json",
            "error_bound",
        ),
        (
            &["verify-lipschitz", "--instance", "lcp1d"],
            "upper_lipschitz.json",
            "upper_lipschitz",
        ),
        (
            &[
                "verify-lipschitz",
                "--instance",
                "gpm_scaled",
                "--samples",
                "200",
                "--holdout",
                "100",
            ],
            "lipschitz_modulus.json",
            "lipschitz_modulus",
        ),
        (
            &["verify-minimax", "--instance", "gpm_interval"],
            "minimax.json",
            "minimax",
        ),
        (
            &[
                "truncation-study",
                "--spectrum",
                "constant",
                "--dims",
                "2,4",
                "--samples",
                "100",
            ],
            "truncation_constant.json",
            "truncation",
        ),
        (
            &["generate", "canned", "--entry", "skew2d"],
            "generate_skew2d.json",
            "generate",
        ),
    ];
    for (args, file, schema) in cases {
        let o = run(args, dir.path());
        assert_eq!(code(&o), 0, "{args:?}: {}", stdout(&o));
        assert_valid(&dir.path().join(file), schema);
    }
    let modulus = read_json(&dir.path().join("lipschitz_modulus.json"));
    let c = modulus["result"]["modulus"]["c_emp"].as_f64().unwrap();
    assert!((c - 2.0).abs() < 1e-6, "gpm_scaled modulus {c}");
    let proj = read_json(&dir.path().join("project.json"));
    assert_eq!(proj["result"]["projection"], serde_json::json!([0.5, 0.5]));
    let trunc = fs::read_to_string(dir.path().join("truncation_constant.csv")).unwrap();
    assert!(trunc.starts_with("n,epsilon,c_emp,accepted\n"));
}

#[test]
fn thread_count_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let one = run(
        &[
            "verify-error-bound",
            "--instance",
            "skew2d",
            "--samples",
            "64",
            "--threads",
            "1",
        ],
        dir.path(),
    );
    let a = read_json(&dir.path().join("error_bound.json"));
    let two = run(
        &[
            "verify-error-bound",
            "--instance",
            "skew2d",
            "--samples",
            "64",
            "--threads",
            "2",
        ],
        dir.path(),
    );
    let b = read_json(&dir.path().join("error_bound.json"));
    assert_eq!(code(&one), code(&two));
    assert_eq!(a["result"], b["result"]);
}
