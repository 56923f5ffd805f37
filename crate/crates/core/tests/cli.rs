use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn quadric(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quadric"))
        .args(args)
        .env_remove("QUADRIC_NUM_THREADS")
        .output()
        .expect("run quadric")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("json on stderr")
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

fn rows(csv_text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = csv_text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn generate_ellipsoid_echoes_semi_major_axis() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = path(dir.path(), "e.csv");
    let out = quadric(&[
        "generate",
        "--kind",
        "ellipsoid",
        "--f",
        "1",
        "--eps",
        "0.5",
        "--count",
        "500",
        "--seed",
        "1",
        "--out",
        &out_path,
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let (header, data) = rows(&std::fs::read_to_string(&out_path).unwrap());
    assert_eq!(header, ["p0", "p1", "p2"]);
    assert_eq!(data.len(), 500);
    let meta: Value = serde_json::from_str(&std::fs::read_to_string(format!("{out_path}.meta.json")).unwrap()).unwrap();
    assert!((meta["elements"]["semi_major"].as_f64().unwrap() - 4.0 / 3.0).abs() < 1e-15);
    assert_eq!(meta["quadric"]["kind"], "ellipsoid");
    assert_eq!(meta["solution"]["branch"], "plus");
    assert_eq!(meta["seed"], 1);
    assert_eq!(meta["count"], 500);
}

#[test]
fn generate_paraboloid_satisfies_focus_directrix() {
    let out = quadric(&["generate", "--c2", "1", "--C", "1", "--count", "100", "--seed", "1"]);
    assert_eq!(code(&out), 0);
    let (_, data) = rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(data.len(), 100);
    for p in data {
        let r = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((r + p[2] - 1.0).abs() < 1e-10);
    }
}

#[test]
fn radial_columns_and_json_format() {
    let out = quadric(&[
        "generate",
        "--c2",
        "2",
        "--C",
        "1",
        "--count",
        "5",
        "--seed",
        "2",
        "--columns",
        "radial",
    ]);
    let (header, data) = rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(header, ["x0", "x1", "x2", "rho"]);
    for r in data {
        assert!((r[0] * r[0] + r[1] * r[1] + r[2] * r[2] - 1.0).abs() < 1e-15);
        assert!(r[3] > 0.0);
    }
    let out = quadric(&[
        "generate", "--c2", "2", "--C", "1", "--count", "5", "--seed", "2", "--format", "json",
    ]);
    let v = stdout_json(&out);
    assert_eq!(v["rows"].as_array().unwrap().len(), 5);
}

#[test]
fn csv_floats_have_seventeen_significant_digits() {
    let out = quadric(&["generate", "--c2", "2", "--C", "1", "--count", "3", "--seed", "2"]);
    let text = String::from_utf8(out.stdout).unwrap();
    for field in text.lines().skip(1).flat_map(|l| l.split(',')) {
        let mantissa = field.trim_start_matches('-').split('e').next().unwrap();
        assert_eq!(mantissa.replace('.', "").len(), 17, "{field}");
    }
}

#[test]
fn one_sheeted_hyperboloid_is_unrepresentable() {
    let out = quadric(&[
        "generate",
        "--kind",
        "hyperboloid1sheet",
        "--count",
        "10",
        "--seed",
        "1",
    ]);
    assert_eq!(code(&out), 2);
    let err = stderr_json(&out);
    assert_eq!(err["code"], 2);
    let message = err["message"].as_str().unwrap();
    assert!(message.contains("unrepresentable"));
    assert!(message.contains("it can not be represented in the form"));
}

#[test]
fn input_errors_exit_two() {
    for args in [
        vec!["generate", "--count", "10"],
        vec!["generate", "--kind", "ellipsoid", "--count", "10"],
        vec!["generate", "--kind", "ellipsoid", "--eps", "1.5", "--count", "10"],
        vec!["generate", "--c2", "0.5", "--C", "0.1", "--count", "10"],
        vec![
            "generate",
            "--c2",
            "2",
            "--C",
            "1",
            "--count",
            "10",
            "--noise-sigma",
            "-1",
        ],
        vec![
            "generate",
            "--c2",
            "2",
            "--C",
            "1",
            "--count",
            "10",
            "--axis",
            "0,0,1",
            "--dimension",
            "3",
        ],
        vec!["generate", "--c2", "2", "--count", "0"],
        vec!["frobnicate"],
        vec!["verify", "--c2", "2", "--C", "1", "--k", "2", "--radius", "2"],
        vec!["verify", "--field", "mystery"],
        vec!["elements", "--c2", "1", "--C", "1"],
    ] {
        let out = quadric(&args);
        assert_eq!(code(&out), 2, "{args:?}");
        assert_eq!(stderr_json(&out)["code"], 2);
    }
}

#[test]
fn fit_recovers_generated_kinds() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&[&str], &str, f64); 4] = [
        (&["--kind", "ellipsoid", "--f", "1", "--eps", "0.5"], "ellipsoid", 1.75),
        (&["--c2", "1", "--C", "1"], "paraboloid", 1.0),
        (
            &["--kind", "hyperboloid", "--f", "1", "--eps", "1.5"],
            "hyperboloid_sheet",
            -0.25,
        ),
        (&["--c2", "0", "--C", "1"], "hyperplane", 0.0),
    ];
    for (shape, kind, c2) in cases {
        let data = path(dir.path(), &format!("{kind}.csv"));
        let mut args = vec!["generate", "--count", "300", "--seed", "4", "--out", &data];
        args.extend_from_slice(shape);
        assert_eq!(code(&quadric(&args)), 0);
        let out = quadric(&["fit", "--input", &data]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        let fit = stdout_json(&out);
        assert_eq!(fit["kind"], kind);
        assert!((fit["c2"].as_f64().unwrap() - c2).abs() < 1e-9);
        let out = quadric(&["verify", "--input", &data]);
        assert_eq!(code(&out), 0, "{kind}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn fit_rejects_too_few_samples_and_bad_csv() {
    let dir = tempfile::tempdir().unwrap();
    let three = path(dir.path(), "three.csv");
    std::fs::write(&three, "x0,x1,x2,rho\n1,0,0,1\n0,1,0,1\n0,0,1,1\n").unwrap();
    let out = quadric(&["fit", "--input", &three]);
    assert_eq!(code(&out), 3);
    assert_eq!(stderr_json(&out)["code"], 3);

    let bad = path(dir.path(), "bad.csv");
    for text in [
        "x0,x1,x2,rho\n1,0,0,abc\n",
        "a,b,c\n1,2,3\n",
        "x0,x1,x2,rho\n1,0,0\n",
        "x0,x1,x2,rho\n2,0,0,1\n",
        "x0,x1,x2,rho\n1,0,0,-1\n",
    ] {
        std::fs::write(&bad, text).unwrap();
        assert_eq!(code(&quadric(&["fit", "--input", &bad])), 2, "{text}");
    }
    assert_eq!(code(&quadric(&["fit", "--input", &path(dir.path(), "missing.csv")])), 2);
}

#[test]
fn coplanar_directions_are_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    let ring = path(dir.path(), "ring.csv");
    let mut text = String::from("x0,x1,x2,rho\n");
    for i in 0..50 {
        let t = i as f64 * 0.37;
        text.push_str(&format!(
            "{:.17e},{:.17e},0,{}\n",
            t.cos(),
            t.sin(),
            1.0 + 0.1 * t.cos()
        ));
    }
    std::fs::write(&ring, text).unwrap();
    assert_eq!(code(&quadric(&["fit", "--input", &ring])), 3);
}

#[test]
fn verify_solution_examples() {
    let out = quadric(&["verify", "--c2", "2", "--C", "1", "--samples", "200"]);
    assert_eq!(code(&out), 0);
    let report = &stdout_json(&out)["report"];
    assert_eq!(report["samples"], 200);
    assert_eq!(report["path"], "analytic");
    for key in ["eq1", "obata_shifted", "trace", "schouten"] {
        assert!(report[key]["max"].as_f64().unwrap() <= 1e-9, "{key}");
    }

    let out = quadric(&["verify", "--c2", "2", "--C", "1", "--k", "2", "--radius", "0.5"]);
    assert_eq!(code(&out), 0);
    let report = &stdout_json(&out)["report"];
    assert_eq!(report["k"], 2.0);
    assert!(report["eq1"]["max"].as_f64().unwrap() <= 1e-9);

    let out = quadric(&[
        "verify",
        "--c2",
        "2",
        "--C",
        "1",
        "--fd-step",
        "1e-3",
        "--fd-levels",
        "2",
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_json(&out)["report"]["path"], "finite_difference");
}

#[test]
fn verify_gates_non_solutions() {
    let out = quadric(&["verify", "--field", "axial-quadratic", "--fail-above", "1e-6"]);
    assert_eq!(code(&out), 4);
    assert_eq!(stderr_json(&out)["code"], 4);
    let report = &stdout_json(&out)["report"];
    assert!(report["s_constancy"]["max_deviation"].as_f64().unwrap() > 1e-2);

    let out = quadric(&["verify", "--field", "axial-quadratic", "--fail-above", "inf"]);
    assert_eq!(code(&out), 0);
}

#[test]
fn classify_and_elements() {
    let out = quadric(&["classify", "--S", "2", "--C", "0"]);
    assert_eq!(stdout_json(&out)["kind"], "centered_sphere");
    let out = quadric(&["classify", "--S", "1", "--C", "1"]);
    assert_eq!(stdout_json(&out)["kind"], "paraboloid");
    let out = quadric(&["classify", "--S", "1", "--C", "2"]);
    let v = stdout_json(&out);
    assert_eq!(v["kind"], "hyperboloid_sheet");
    assert_eq!(v["c2"], -2.0);
    let out = quadric(&["classify", "--S", "1e-7", "--C", "1", "--tol-s", "1e-8"]);
    assert_eq!(stdout_json(&out)["kind"], "hyperboloid_sheet");

    let out = quadric(&["elements", "--kind", "hyperboloid", "--eps", "2", "--axis", "1,0,0,0"]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    let a = v["elements"]["semi_major"].as_f64().unwrap();
    assert!((a - 1.0 / 3.0).abs() < 1e-15);
    assert_eq!(v["elements"]["center"].as_array().unwrap().len(), 4);
}

#[test]
fn residual_scan_table() {
    let out = quadric(&["residual-scan", "--h", "1e-2,1e-3"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "h,max_error,roundoff_floor,order,reliable,fitted_order,fitted_reliable"
    );
    let last: Vec<&str> = lines.last().unwrap().split(',').collect();
    let order: f64 = last[3].parse().unwrap();
    assert!((1.7..=2.3).contains(&order));
    assert_eq!(last[4], "true");

    let out = quadric(&["residual-scan", "--h", "1e-8"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().nth(1).unwrap().ends_with(",false,,false"));

    assert_eq!(code(&quadric(&["residual-scan"])), 2);
    assert_eq!(code(&quadric(&["residual-scan", "--h"])), 2);
    assert_eq!(code(&quadric(&["residual-scan", "--h", "0"])), 2);

    let out = quadric(&[
        "residual-scan",
        "--h",
        "1e-2,1e-3",
        "--dimension",
        "5",
        "--format",
        "json",
    ]);
    let v = stdout_json(&out);
    assert!(v["fitted_reliable"].as_bool().unwrap());
}

#[test]
fn noisy_pipeline_kind_is_stable_across_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let data = path(dir.path(), "noisy.csv");
    for seed in 1..=20 {
        let seed = seed.to_string();
        let out = quadric(&[
            "generate",
            "--kind",
            "ellipsoid",
            "--f",
            "1",
            "--eps",
            "0.5",
            "--count",
            "500",
            "--seed",
            &seed,
            "--noise-sigma",
            "1e-3",
            "--out",
            &data,
        ]);
        assert_eq!(code(&out), 0);
        let fit = stdout_json(&quadric(&["fit", "--input", &data]));
        assert_eq!(fit["kind"], "ellipsoid", "seed {seed}");
    }
}

#[test]
fn outputs_are_deterministic_across_thread_counts() {
    let args = [
        "verify",
        "--c2",
        "0.5",
        "--C",
        "2",
        "--branch",
        "minus",
        "--samples",
        "300",
        "--seed",
        "9",
    ];
    let baseline = quadric(&args).stdout;
    for threads in ["1", "3"] {
        let out = Command::new(env!("CARGO_BIN_EXE_quadric"))
            .args(args)
            .env("QUADRIC_NUM_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(out.stdout, baseline);
    }
    let out = Command::new(env!("CARGO_BIN_EXE_quadric"))
        .args(args)
        .env("QUADRIC_NUM_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn help_exits_zero() {
    assert_eq!(code(&quadric(&["--help"])), 0);
    assert_eq!(code(&quadric(&["generate", "--help"])), 0);
}
