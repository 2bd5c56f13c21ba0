use serde_json::Value;

use dp2ff::numbers::rat;
use dp2ff::tau::{rational_u, TauParams};
use dp2ff_cli::{run_command, Outcome};

fn run(args: &[&str]) -> Outcome {
    run_command(std::iter::once("dp2ff").chain(args.iter().copied()))
}

fn json(args: &[&str]) -> (i32, Value) {
    let o = run(args);
    (o.exit_code, serde_json::from_str(&o.stdout).expect("json on stdout"))
}

fn strings(v: &Value) -> Vec<&str> {
    v.as_array().unwrap().iter().map(|x| x.as_str().unwrap()).collect()
}

#[test]
fn tau_orbit_document() {
    let (code, v) = json(&["tau-orbit", "--p", "5", "--N", "3", "--lambda", "1", "--count", "10", "--format", "json"]);
    assert_eq!(code, 0);
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys, ["command", "params", "result", "errors"]);
    assert_eq!(v["command"], "tau-orbit");
    assert_eq!(strings(&v["result"]["sequence"]), ["4", "2", "3", "1", "inf", "4", "2", "3", "1", "inf"]);
    assert_eq!(v["result"]["period"], 5);
    assert_eq!(strings(&v["result"]["cond_diag"]), ["inf", "4"]);
    assert_eq!(v["errors"].as_array().unwrap().len(), 0);
}

#[test]
fn p11_row_reports_failed_condition() {
    let (_, v) = json(&["tau-orbit", "--p", "11", "--N", "3", "--count", "11"]);
    assert_eq!(strings(&v["result"]["sequence"]), ["inf", "1", "6", "1", "inf", "10", "inf", "1", "0", "2", "10"]);
    assert_eq!(v["result"]["cond_holds"], serde_json::json!([false, true]));
    assert_eq!(v["result"]["evolution_agrees"], true);
}

#[test]
fn output_is_deterministic() {
    let args = ["agr-scan", "--map", "qrt", "--gamma", "2", "--a", "2", "--p", "5"];
    assert_eq!(run(&args), run(&args));
}

#[test]
fn gamma_three_scan_is_data() {
    let (code, v) = json(&["agr-scan", "--map", "qrt", "--gamma", "3", "--a", "1", "--p", "5"]);
    assert_eq!(code, 0);
    let recs = v["result"]["records"].as_array().unwrap();
    assert!(recs.iter().any(|r| r["status"] == "NOT_CONFINED"));
    assert_eq!(v["result"]["has_agr"], false);
    let keys: Vec<&str> = recs[0].as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys, ["point", "y_residue", "n", "status", "m", "image_x", "image_y", "pole_orders"]);
}

#[test]
fn custom_map_matches_builtin_qrt() {
    let (_, q) = json(&["agr-scan", "--map", "qrt", "--gamma", "2", "--a", "2", "--p", "5"]);
    let (code, c) = json(&[
        "agr-scan", "--map", "custom", "--p", "5", "--expr-x", "(a*x+1)/(x^2*y)", "--expr-y", "x", "--param", "a=2",
    ]);
    assert_eq!(code, 0);
    assert_eq!(q["result"], c["result"]);
    assert_eq!(c["result"]["has_agr"], true);
}

#[test]
fn reduce_example() {
    let (code, v) = json(&["reduce", "--p", "5", "--value", "1/5"]);
    assert_eq!((code, v["result"].as_str()), (0, Some("inf")));
    let (_, v) = json(&["reduce", "--p", "7", "--value", "-3/2"]);
    assert_eq!(v["result"], "2");
}

#[test]
fn evolve_reproduces_table_row() {
    let (code, v) = json(&[
        "evolve", "--p", "7", "--a", "-8", "--delta", "2", "--z0", "2", "--u0", "6", "--u1", "1", "--steps", "14",
    ]);
    assert_eq!(code, 0);
    assert_eq!(
        strings(&v["result"]["sequence"]),
        ["1", "inf", "6", "5", "1", "inf", "6", "1", "inf", "6", "5", "1", "inf", "6"]
    );
    assert_eq!(v["result"]["period"], 7);
}

#[test]
fn evolve_qrt_over_q() {
    let (code, v) = json(&["evolve", "--map", "qrt", "--gamma", "1", "--a", "1", "--p", "5", "--u0", "1", "--u1", "2", "--steps", "3"]);
    assert_eq!(code, 0);
    // x' = (x + 1) / (x y): 2, 3/2, 5/6
    assert_eq!(strings(&v["result"]["exact"]), ["2", "3/2", "5/6"]);
    assert_eq!(strings(&v["result"]["sequence"]), ["2", "4", "0"]);
}

#[test]
fn solve_check_on_tau_solution() {
    let t = TauParams::new(2, rat(1)).unwrap();
    let seq: Vec<String> = (1..=8).map(|n| rational_u(n, &t).unwrap().to_string()).collect();
    let seq = seq.join(",");
    let (code, v) = json(&["solve-check", "--seq", &seq, "--a", "-6", "--delta", "2", "--z0", "2"]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["all_zero"], true);
    let (_, v) = json(&["solve-check", "--seq", "0,0,1", "--a", "2", "--delta", "1", "--z0", "0"]);
    assert_eq!(v["result"]["all_zero"], false);
}

#[test]
fn csv_has_header_rows() {
    let o = run(&["tau-orbit", "--p", "3", "--N", "3", "--count", "3", "--format", "csv"]);
    assert_eq!(o.stdout, "index,value\n1,1\n2,2\n3,inf\n");
    let o = run(&["agr-scan", "--map", "qrt", "--gamma", "2", "--a", "1", "--p", "3", "--format", "csv"]);
    assert!(o.stdout.starts_with("point,y_residue,n,status,m,image_x,image_y,pole_orders\n"));
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let o = run(&["reduce", "--p", "5", "--value", "10", "--out", path.to_str().unwrap()]);
    assert_eq!((o.exit_code, o.stdout.as_str()), (0, ""));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(v["result"], "0");
}

#[test]
fn exit_codes_and_error_codes() {
    assert_eq!(run(&["tau-orbit", "--p", "5"]).exit_code, 2);
    assert_eq!(run(&["frobnicate"]).exit_code, 2);
    assert_eq!(run(&["--help"]).exit_code, 0);

    let (code, v) = json(&["reduce", "--p", "2", "--value", "1"]);
    assert_eq!((code, v["errors"][0]["code"].as_str()), (2, Some("USAGE")));
    let (code, v) = json(&["agr-scan", "--map", "qrt", "--gamma", "2", "--a", "1", "--p", "103"]);
    assert_eq!((code, v["errors"][0]["code"].as_str()), (2, Some("USAGE")));
    let (code, _) = json(&["agr-scan", "--map", "qrt", "--a", "1", "--p", "5"]);
    assert_eq!(code, 2);

    let domain = [
        (vec!["reduce", "--p", "9", "--value", "1"], "INVALID_PRIME"),
        (vec!["evolve", "--p", "5", "--a", "1", "--delta", "1", "--z0", "0", "--u0", "1", "--u1", "inf", "--steps", "3"], "INFINITE_INITIAL"),
        (vec!["evolve", "--p", "5", "--a", "1", "--delta", "5", "--z0", "0", "--u0", "1", "--u1", "2", "--steps", "3"], "NO_EXACT_ZERO"),
        (vec!["agr-scan", "--map", "custom", "--p", "5", "--expr-x", "x+", "--expr-y", "x"], "PARSE_ERROR"),
        (vec!["agr-scan", "--map", "custom", "--p", "5", "--expr-x", "b*x", "--expr-y", "x"], "UNBOUND_PARAMETER"),
        (vec!["reduce", "--p", "5", "--value", "1/0"], "DIVISION_BY_ZERO"),
        (vec!["evolve", "--p", "5", "--a", "1/5", "--delta", "1", "--z0", "0", "--u0", "1", "--u1", "2", "--steps", "3"], "NON_INTEGRAL_PARAMETER"),
    ];
    for (args, want) in domain {
        let (code, v) = json(&args);
        assert_eq!((code, v["errors"][0]["code"].as_str()), (1, Some(want)), "{args:?}");
        assert!(v["result"].is_null());
    }
}
