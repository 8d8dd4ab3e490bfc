//! End-to-end checks of the binary: flag parsing, report shapes, exit codes,
//! and byte-level determinism.

use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_presidential"))
        .args(args)
        .output()
        .expect("binary spawns")
}

fn stdout_json(args: &[&str]) -> serde_json::Value {
    let out = run(args);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON document")
}

#[test]
fn fourier_reports_exact_and_oracle_agreement() {
    let v = stdout_json(&["fourier", "--k", "4", "--a", "2", "--tmax", "3", "--oracle"]);
    assert_eq!(v["result"]["president"]["exact"], "3/4");
    assert_eq!(v["result"]["oracle"]["agree"], true);
    assert_eq!(v["config"]["seed"], 0);
    assert_eq!(v["config"]["format"], "json");
}

#[test]
fn hplot_emits_the_full_grid_as_csv() {
    let out = run(&[
        "hplot", "--h", "cubic", "--from", "-1", "--to", "1.5", "--step", "0.01",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# config {"));
    assert_eq!(lines[1], "delta,h");
    assert_eq!(lines.len(), 2 + 251, "251 samples from -1 to 1.5 by 0.01");
    // h(1 + Δ) = 1 + Δ³ for the cubic: 0 at the left edge
    assert!(lines[2].starts_with("-1.0000000000000000e0,0.0000000000000000e0"));
}

#[test]
fn certify_reports_the_exact_vertex_minimum() {
    let v = stdout_json(&[
        "certify", "--k", "10", "--a", "6", "--h", "cubic", "--samples", "50", "--seed", "1",
    ]);
    assert_eq!(v["result"]["min_vertex_value"], "-97525/12096");
    assert_eq!(v["result"]["argmin_orbit"]["x1"], 1);
    assert_eq!(v["result"]["argmin_orbit"]["t"], 2);
    assert_eq!(v["result"]["passed"], false);
    assert_eq!(v["result"]["margin"]["ok"], true);
}

#[test]
fn custom_polynomial_build_matches_known_coefficients() {
    let v = stdout_json(&[
        "round", "build", "--k", "10", "--a", "6", "--h", "custom", "--coeffs", "1",
    ]);
    assert_eq!(v["result"]["c1"]["exact"], "230/3");
    assert_eq!(v["result"]["c_odd"][0]["degree"], 3);
    assert_eq!(v["result"]["c_odd"][0]["exact"], "320/9");
    assert_eq!(v["result"]["epsilon_scale"], 0.009375);
}

#[test]
fn same_seed_is_byte_identical_different_seed_is_not() {
    let args = [
        "certify", "--k", "8", "--a", "4", "--h", "custom", "--coeffs", "1", "--samples", "40",
        "--seed", "9",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
    let mut other: Vec<&str> = args.to_vec();
    other[11] = "10";
    let c = run(&other);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn exit_codes_separate_usage_data_and_success() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(
        run(&["predicate", "info", "--k", "5", "--a", "2"]).status.code(),
        Some(1),
        "parity violation is a data error"
    );
    assert_eq!(
        run(&["nopairwise", "solve", "--k", "30", "--a", "16", "--m", "5"])
            .status
            .code(),
        Some(1),
        "infeasible balance system is a data error"
    );
    let unknown = run(&["fourier", "--k", "4", "--a", "2", "--tmax", "3", "--bogus"]);
    assert_eq!(unknown.status.code(), Some(2), "unknown flags are rejected");
}

#[test]
fn out_writes_the_report_file() {
    let dir = std::env::temp_dir().join("presidential-cli-out");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("info.json");
    let out = run(&[
        "predicate", "info", "--k", "30", "--a", "16", "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty(), "report went to the file");
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["result"]["delta"], "8/15");
    assert_eq!(v["result"]["u"], 23);
}

#[test]
fn instance_gen_writes_a_loadable_instance_file() {
    let dir = std::env::temp_dir().join("presidential-cli-inst");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("inst.json");
    let gen = run(&[
        "instance", "gen", "--k", "10", "--a", "6", "--n-vars", "40", "--clauses", "60",
        "--eps", "0.1", "--seed", "5", "--out", path.to_str().unwrap(),
    ]);
    assert!(gen.status.success());
    // the file holds the bare instance; the summary envelope goes to stdout
    let summary: serde_json::Value = serde_json::from_slice(&gen.stdout).unwrap();
    assert_eq!(summary["result"]["n_clauses"], 60);
    assert!(summary["result"].get("instance").is_none());
    let inst: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(inst["k"], 10);
    assert_eq!(inst["clauses"].as_array().unwrap().len(), 60);

    let eval = stdout_json(&[
        "instance", "eval", "--file", path.to_str().unwrap(), "--h", "custom", "--coeffs", "1",
    ]);
    assert_eq!(eval["result"]["n_clauses"], 60);
    let avg = eval["result"]["avg_v"].as_f64().unwrap();
    assert!(avg > 0.0, "repaired clauses evaluate positive, got {avg}");
}

#[test]
fn scan_csv_has_the_pinned_columns_and_threshold_comment() {
    let out = run(&[
        "scan", "--kmin", "8", "--kmax", "10", "--delta0", "3/5", "--h", "custom", "--coeffs",
        "1", "--format", "csv",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# config"));
    assert_eq!(
        lines.next().unwrap(),
        "k,a,delta,min_vertex_value,argmin_x1,argmin_t,margin_ineq,delta_min,delta_max,passed"
    );
    assert!(text.lines().last().unwrap().starts_with("# k_star"));
}

#[test]
fn generic_csv_flattens_with_dotted_names() {
    let out = run(&[
        "predicate", "normalize", "--k", "12", "--delta", "3/5", "--format", "csv",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# config"));
    assert_eq!(lines[1], "a,delta,delta_f64,k,offset");
    assert!(lines[2].starts_with("8,2/3,"));
}

#[test]
fn check_h_rejects_the_cubic_but_passes_the_damped_polynomial() {
    let cubic = run(&["round", "check-h", "--h", "cubic", "--delta0", "1"]);
    assert_eq!(cubic.status.code(), Some(1));
    let msg = String::from_utf8(cubic.stderr).unwrap();
    assert!(msg.contains("condition 2"), "stderr: {msg}");

    let v = stdout_json(&["round", "check-h", "--h", "trunc", "--delta0", "1"]);
    assert_eq!(v["result"]["passed"], true);
    assert_eq!(v["result"]["stationary_ok"], true);
}
