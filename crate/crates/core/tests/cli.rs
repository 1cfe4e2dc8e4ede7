//! End-to-end tests for the `gridhop` command-line interface: every
//! subcommand, the three output formats, exit-code conventions, and
//! determinism of rendered reports.

use std::path::{Path, PathBuf};
use std::process::Command;

use gridhop::fixtures;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_gridhop")
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(bin()).args(args).output().expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).expect("stdout is UTF-8"),
        String::from_utf8(out.stderr).expect("stderr is UTF-8"),
    )
}

fn run_ok(args: &[&str]) -> String {
    let (code, stdout, stderr) = run(args);
    assert_eq!(code, 0, "`{}` failed: {stderr}", args.join(" "));
    stdout
}

fn run_json(args: &[&str]) -> serde_json::Value {
    let mut full: Vec<&str> = args.to_vec();
    full.extend(["--format", "json"]);
    serde_json::from_str(&run_ok(&full)).expect("valid JSON")
}

/// Expects the given exit code and that the error line is tidy (single
/// `error:` prefix, no panic traces).
fn run_err(args: &[&str], expect: i32) -> String {
    let (code, stdout, stderr) = run(args);
    assert_eq!(code, expect, "`{}`: stdout={stdout} stderr={stderr}", args.join(" "));
    assert!(!stderr.contains("panicked"), "`{}` panicked: {stderr}", args.join(" "));
    if expect != 0 && stdout.is_empty() {
        assert!(stderr.starts_with("error: "), "untidy error: {stderr}");
    }
    stderr
}

/// Writes the bundled fixture corpus into a scratch directory once per test.
fn corpus(test: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("gridhop-cli-{}-{test}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("create scratch dir");
    for (file, doc) in fixtures::bundled() {
        std::fs::write(dir.join(file), doc.to_json_pretty()).expect("write fixture");
    }
    dir
}

fn path(dir: &Path, file: &str) -> String {
    dir.join(file).to_str().unwrap().to_string()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn fixtures_command_writes_the_bundled_corpus() {
    let dir = std::env::temp_dir()
        .join(format!("gridhop-cli-fixtures-{}", std::process::id()));
    let report = run_json(&["fixtures", "--dir", dir.to_str().unwrap()]);
    let files = report["files"].as_array().unwrap();
    assert_eq!(files.len(), 6);
    for file in files {
        let text = std::fs::read_to_string(dir.join(file.as_str().unwrap())).unwrap();
        gridhop::parse(&text).expect("written fixture parses");
    }

    // The target directory can also come from the environment.
    let env_dir = dir.join("from-env");
    let out = Command::new(bin())
        .args(["fixtures"])
        .env("GRIDHOP_FIXTURE_DIR", &env_dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(env_dir.join("haxby.json").exists());
}

#[test]
fn validate_reports_valid_and_invalid_networks() {
    let dir = corpus("validate");
    let text = run_ok(&["validate", &path(&dir, "haxby.json")]);
    assert!(text.contains("VALID"), "{text}");

    let mut broken = fixtures::haxby();
    broken.network.branches[0].rating = -5.5;
    let broken_path = dir.join("broken.json");
    std::fs::write(&broken_path, broken.to_json_pretty()).unwrap();
    let (code, stdout, _) = run(&["validate", broken_path.to_str().unwrap(), "--format", "json"]);
    assert_eq!(code, 1, "invalid network is an analysis failure");
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["valid"], serde_json::Value::Bool(false));
    assert!(report["violation_count"].as_u64().unwrap() >= 1);
}

#[test]
fn flows_reports_the_reference_numbers_in_all_formats() {
    let dir = corpus("flows");
    let haxby = path(&dir, "haxby.json");

    let json = run_json(&["flows", &haxby]);
    assert!(close(json["flows"]["fdr-a0"].as_f64().unwrap(), 0.8, 1e-9));
    assert!(close(json["flows"]["ncp-a"].as_f64().unwrap(), -0.8, 1e-9));
    assert!(close(json["supplied"]["srcA1"].as_f64().unwrap(), 1.7, 1e-9));
    assert!(close(json["total_demand"].as_f64().unwrap(), 17.3, 1e-9));
    assert_eq!(json["islands"].as_array().unwrap().len(), 4);

    let text = run_ok(&["flows", &haxby]);
    assert!(text.contains("fdr-a0  0.800000"), "{text}");
    assert!(text.contains("srcA1  1.700000"), "{text}");

    let csv = run_ok(&["flows", &haxby, "--format", "csv"]);
    let cell = csv
        .lines()
        .find_map(|l| l.strip_prefix("flows.fdr-a0,"))
        .expect("csv exposes the same field");
    assert_eq!(cell.parse::<f64>().unwrap(), json["flows"]["fdr-a0"].as_f64().unwrap());
}

#[test]
fn flows_supports_scenarios_switching_outages_and_headroom() {
    let dir = corpus("flows-options");
    let haxby = path(&dir, "haxby.json");

    let future = run_json(&["flows", &haxby, "--scenario", "2030"]);
    assert!(close(future["total_demand"].as_f64().unwrap(), 13.9, 1e-9));

    // Losing srcA2 and closing the bus-section shifts the whole of feeder A1
    // onto srcA1, 1.7 MVA over its rating.
    let stressed = run_json(&["flows", &haxby, "--outage", "srcA2", "--close", "bs-a"]);
    let violations = stressed["thermal_violations"].as_array().unwrap();
    assert_eq!(violations.len(), 1);
    assert_eq!(violations[0]["element"], "srcA1");
    assert!(close(violations[0]["overload"].as_f64().unwrap(), 1.7, 1e-9));

    let at_source = run_json(&["flows", &haxby, "--headroom", "srcA1"]);
    assert!(close(at_source["headroom"]["headroom"].as_f64().unwrap(), 13.3, 1e-9));
    assert_eq!(at_source["headroom"]["binding"], "source-capacity");

    let at_bus = run_json(&["flows", &haxby, "--headroom", "srcA1:a0"]);
    assert!(close(at_bus["headroom"]["headroom"].as_f64().unwrap(), 4.7, 1e-9));
    assert_eq!(at_bus["headroom"]["binding_element"], "fdr-a0");

    // srcB1 does not feed a0, and a plain switch cannot take a set-point.
    run_err(&["flows", &haxby, "--headroom", "srcB1:a0"], 2);
    run_err(&["flows", &haxby, "--set", "nop-ab=0.3"], 2);
}

#[test]
fn n1_reports_reference_numbers_and_honours_filters() {
    let dir = corpus("n1");
    let haxby = path(&dir, "haxby.json");

    let report = run_json(&["n1", &haxby]);
    assert_eq!(report["secure"], serde_json::Value::Bool(false));
    assert!(close(report["shortfall"].as_f64().unwrap(), 0.9, 1e-9));
    assert_eq!(report["worst_contingency"], "srcA2");
    let ids: Vec<&str> = report["contingencies"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["id"].as_str().unwrap())
        .collect();
    assert_eq!(ids, ["srcA1", "srcA2", "srcB1", "srcB2"]);

    let src_a1 = &report["contingencies"][0];
    assert!(close(src_a1["unserved"].as_f64().unwrap(), 0.0, 1e-9));
    assert_eq!(src_a1["switch_operations"], 1);
    assert_eq!(src_a1["toggled"][0], "nop-ab");

    let subset = run_json(&["n1", &haxby, "--contingency", "srcB1"]);
    assert_eq!(subset["contingencies"].as_array().unwrap().len(), 1);
    assert_eq!(subset["secure"], serde_json::Value::Bool(true));

    let degraded = run_json(&["n1", &haxby, "--without", "nop-ab"]);
    assert!(close(degraded["shortfall"].as_f64().unwrap(), 1.7, 1e-9));

    run_err(&["n1", &haxby, "--contingency", "nonesuch"], 2);
    run_err(&["n1", &haxby, "--without", "nonesuch"], 2);
}

#[test]
fn n1_assert_secure_gates_on_the_verdict() {
    let dir = corpus("assert-secure");
    let haxby = path(&dir, "haxby.json");

    let (code, stdout, _) = run(&["n1", &haxby, "--assert-secure", "--format", "json"]);
    assert_eq!(code, 1, "insecure network fails the gate");
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["secure"], serde_json::Value::Bool(false));

    // The 2030 demand forecast is secure as-is, so the gate passes.
    run_ok(&["n1", &haxby, "--scenario", "2030", "--assert-secure"]);
    run_err(&["n1", &haxby, "--scenario", "2031"], 2);
}

#[test]
fn n1_classify_names_the_converter_use_case() {
    let dir = corpus("classify");

    let fault_limited = run_json(&["n1", &path(&dir, "fault-limited.json"), "--classify"]);
    let cases = fault_limited["classification"].as_array().unwrap();
    let src_a1 = cases.iter().find(|c| c["contingency"] == "srcA1").unwrap();
    assert_eq!(src_a1["tag"], "fault-level-constrained");
    assert_eq!(src_a1["evidence"][0], "busB");

    let meshed_tee = run_json(&["n1", &path(&dir, "meshed-tee.json"), "--classify"]);
    let cases = meshed_tee["classification"].as_array().unwrap();
    let src_d = cases.iter().find(|c| c["contingency"] == "srcD").unwrap();
    assert_eq!(src_d["tag"], "multi-terminal-tee");
}

#[test]
fn size_and_compare_quantify_the_rating_gap() {
    let dir = corpus("size");
    let transfer_sizing = path(&dir, "transfer-sizing.json");

    let sized = run_json(&["size", &transfer_sizing, "--at", "ncp-a", "--kind", "hop2"]);
    assert!(close(sized["baseline_shortfall"].as_f64().unwrap(), 2.5, 1e-6));
    assert!(close(sized["required_rating"].as_f64().unwrap(), 0.5, 1e-6));
    assert!(close(sized["residual_shortfall"].as_f64().unwrap(), 0.0, 1e-6));

    let compared = run_json(&[
        "compare", &transfer_sizing, "--option", "ncp-a:hop2", "--option", "nop-ab:sop",
    ]);
    let rows = compared["rows"].as_array().unwrap();
    assert!(close(rows[0]["required_rating"].as_f64().unwrap(), 0.5, 1e-6));
    assert!(close(rows[1]["required_rating"].as_f64().unwrap(), 2.5, 1e-6));
    assert!(close(rows[0]["ratio_vs_sop"].as_f64().unwrap(), 0.2, 1e-6));
    assert!(close(compared["implied_headroom"].as_f64().unwrap(), 0.5, 1e-6));
    assert!(close(compared["implied_transferred_demand"].as_f64().unwrap(), 2.0, 1e-6));
    assert!(close(compared["rating_ratio"].as_f64().unwrap(), 0.2, 1e-6));

    // A hybrid that must sit normally closed cannot replace a normally open
    // point, and unknown placements are input errors.
    run_err(&["size", &transfer_sizing, "--at", "nop-ab", "--kind", "hop2"], 2);
    run_err(&["size", &transfer_sizing, "--at", "nonesuch", "--kind", "sop"], 2);
}

#[test]
fn firm_capacity_reports_the_post_fault_limit() {
    let dir = corpus("firm");

    let two = run_json(&["firm-capacity", &path(&dir, "two-circuit.json")]);
    assert_eq!(two["unbounded"], serde_json::Value::Bool(false));
    assert!(close(two["firm_mva"].as_f64().unwrap(), 10.0, 1e-6));
    assert!(close(two["scale"].as_f64().unwrap(), 1.25, 1e-6));

    let transfer_sizing = run_json(&["firm-capacity", &path(&dir, "transfer-sizing.json")]);
    assert!(close(transfer_sizing["firm_mva"].as_f64().unwrap(), 11.904761, 1e-5));
}

#[test]
fn econ_combines_document_defaults_and_flag_overrides() {
    let dir = corpus("econ");
    let haxby = path(&dir, "haxby.json");

    // The document carries rate, horizon and deferral; the flags add the rest.
    let econ = run_json(&[
        "econ", &haxby, "--annual-benefit", "19272", "--loss-mw", "0.044", "--price", "50",
    ]);
    assert!(close(econ["deferral_cost_reduction_percent"].as_f64().unwrap(), 14.778397, 1e-5));
    assert!(close(econ["annuity_factor"].as_f64().unwrap(), 8.422395, 1e-5));
    assert!(close(econ["lifetime_benefit"].as_f64().unwrap(), 162_316.397990, 1e-3));
    assert!(close(econ["annual_energy_mwh"].as_f64().unwrap(), 385.44, 1e-9));
    assert!(close(econ["loss_reduction_annual_benefit"].as_f64().unwrap(), 19_272.0, 1e-9));

    // Flags override the document; a zero rate degenerates to plain years.
    let flat = run_json(&["econ", &haxby, "--rate", "0", "--years", "4", "--annual-benefit", "100"]);
    assert!(close(flat["annuity_factor"].as_f64().unwrap(), 4.0, 1e-12));
    assert!(close(flat["lifetime_benefit"].as_f64().unwrap(), 400.0, 1e-9));

    // No document at all: flags alone suffice.
    let bare = run_json(&["econ", "--rate", "0.0325", "--deferral-years", "5"]);
    assert!(close(bare["deferral_cost_reduction_percent"].as_f64().unwrap(), 14.778397, 1e-5));

    // Nothing to compute is an input error.
    run_err(&["econ"], 2);
}

#[test]
fn reports_are_deterministic_and_consistent_across_formats() {
    let dir = corpus("determinism");
    let haxby = path(&dir, "haxby.json");

    let json_a = run_ok(&["n1", &haxby, "--format", "json"]);
    let json_b = run_ok(&["n1", &haxby, "--format", "json"]);
    assert_eq!(json_a, json_b, "JSON reports must be byte-deterministic");

    let csv_a = run_ok(&["n1", &haxby, "--format", "csv"]);
    let csv_b = run_ok(&["n1", &haxby, "--format", "csv"]);
    assert_eq!(csv_a, csv_b, "CSV reports must be byte-deterministic");

    let parsed: serde_json::Value = serde_json::from_str(&json_a).unwrap();
    let csv_shortfall = csv_a
        .lines()
        .find_map(|l| l.strip_prefix("shortfall,"))
        .unwrap()
        .parse::<f64>()
        .unwrap();
    assert_eq!(csv_shortfall, parsed["shortfall"].as_f64().unwrap());
    let text = run_ok(&["n1", &haxby]);
    assert!(text.contains("0.900000"), "{text}");

    // --out writes exactly what stdout would have carried.
    let out_path = dir.join("report.json");
    run_ok(&["n1", &haxby, "--format", "json", "--out", out_path.to_str().unwrap()]);
    assert_eq!(std::fs::read_to_string(&out_path).unwrap(), json_a);
}

#[test]
fn failure_modes_exit_cleanly() {
    let dir = corpus("failures");
    let haxby = path(&dir, "haxby.json");

    let stderr = run_err(&["n1", &path(&dir, "nonesuch.json")], 2);
    assert!(stderr.starts_with("error: "), "{stderr}");

    let garbled = dir.join("garbled.json");
    std::fs::write(&garbled, "{\"schema_version\": \"1\",").unwrap();
    run_err(&["validate", garbled.to_str().unwrap()], 2);

    let unknown_field = dir.join("unknown-field.json");
    let doctored = fixtures::haxby().to_json_pretty().replace("\"name\"", "\"titles\"");
    std::fs::write(&unknown_field, doctored).unwrap();
    run_err(&["validate", unknown_field.to_str().unwrap()], 2);

    // Closing the bus-section loops two in-feeds together: an analysis
    // failure, not an input one.
    let stderr = run_err(&["flows", &haxby, "--close", "bs-a"], 1);
    assert!(stderr.contains("radial"), "{stderr}");
}
