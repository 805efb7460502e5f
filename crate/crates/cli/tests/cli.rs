use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn run(args: &[&str], input: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_toric-fiber-lab"));
    cmd.args(args).env_remove("TFL_SEED");
    if let Some(name) = input {
        cmd.arg("--input").arg(data(name));
    }
    cmd.output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn help_lists_every_subcommand_and_flag() {
    let out = run(&["--help"], None);
    let text = String::from_utf8(out.stdout).unwrap();
    for sub in ["validate", "potential", "critical", "probes", "disks", "analyze", "render"] {
        assert!(text.contains(sub), "{sub}");
    }
    let out = run(&["critical", "--help"], None);
    let text = String::from_utf8(out.stdout).unwrap();
    for flag in ["--bulk", "--truncation", "--seed", "--starts", "--lambda", "--json", "TFL_SEED"] {
        assert!(text.contains(flag), "{flag}");
    }
    let text = String::from_utf8(run(&["probes", "--help"], None).stdout).unwrap();
    for flag in ["--lambda", "--scan", "--bound"] {
        assert!(text.contains(flag), "{flag}");
    }
}

#[test]
fn validate_reports_vertices() {
    let v = json(&run(&["validate", "--json"], Some("p_1_3_5.json")));
    assert_eq!(v["vertices"], serde_json::json!([["0", "0"], ["0", "5"], ["3", "0"]]));
    let v = json(&run(&["validate", "--json"], Some("p_1_2.json")));
    assert_eq!(v["orbifold_facets"], serde_json::json!([1]));
}

#[test]
fn potential_terms() {
    let v = json(&run(&["potential", "--json", "--lambda", "1,1"], Some("p_1_3_5.json")));
    let vals: Vec<&str> = v["terms"].as_array().unwrap().iter().map(|t| t["valuation"].as_str().unwrap()).collect();
    assert_eq!(vals, ["1", "1", "7"]);
    let text = String::from_utf8(run(&["potential", "--lambda", "1/2"], Some("p1.json")).stdout).unwrap();
    assert!(text.contains("1/2"));
}

#[test]
fn critical_search_and_single_fiber() {
    let v = json(&run(&["critical", "--json"], Some("p_1_2.json")));
    assert_eq!(v["critical_fibers"], serde_json::json!([["2/3"]]));
    let v = json(&run(&["critical", "--json", "--lambda", "1/3"], Some("p1.json")));
    assert!(v["certificates"].as_array().unwrap().is_empty());
    assert!(v["reason"].as_str().unwrap().contains("uniquely attained"));
    let out = run(
        &["critical", "--json", "--lambda", "1", "--bulk", data("double_point_bulk.json").to_str().unwrap()],
        Some("double_point.json"),
    );
    let v = json(&out);
    let methods: Vec<&str> =
        v["certificates"].as_array().unwrap().iter().map(|c| c["method"].as_str().unwrap()).collect();
    assert!(methods.contains(&"graded"), "{methods:?}");
}

#[test]
fn probes_single_and_scan() {
    let v = json(&run(&["probes", "--json", "--lambda", "1/5", "--bound", "1"], Some("p1.json")));
    assert_eq!(v["displaceable"], true);
    let v = json(&run(&["probes", "--json", "--lambda", "1/2", "--bound", "5"], Some("p1.json")));
    assert_eq!(v["displaceable"], false);
    let v = json(&run(&["probes", "--json", "--scan", "8"], Some("square.json")));
    let unknown: Vec<&serde_json::Value> =
        v["grid"].as_array().unwrap().iter().filter(|g| g["verdict"] == "no_probe_found").collect();
    assert_eq!(unknown.len(), 1);
    assert_eq!(unknown[0]["lambda"], serde_json::json!(["0", "0"]));
}

#[test]
fn disks_table() {
    let v = json(&run(&["disks", "--json", "--lambda", "5/3,5/3"], Some("p_1_3_5.json")));
    let classes = v["classes"].as_array().unwrap();
    assert_eq!(classes.len(), 3);
    assert!(classes.iter().all(|c| c["maslov_index"] == 2 && c["area"] == "5/3"));
}

#[test]
fn seed_comes_from_the_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_toric-fiber-lab"))
        .args(["analyze", "--json", "--resolution", "4", "--input"])
        .arg(data("p1.json"))
        .env("TFL_SEED", "17")
        .output()
        .unwrap();
    assert_eq!(json(&out)["config"]["seed"], 17);
    let v = json(&run(&["analyze", "--json", "--resolution", "4"], Some("p1.json")));
    assert_eq!(v["config"]["seed"], 0);
}

#[test]
fn analyze_and_render() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("fig.svg");
    let out = run(&["analyze", "--svg", svg.to_str().unwrap(), "--resolution", "8"], Some("quadric_blowup_0.json"));
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("(0, 0)"));
    let figure = std::fs::read_to_string(&svg).unwrap();
    assert!(figure.contains("#d62728") && figure.contains("(0, 0)"));

    let out = run(&["render", "--resolution", "8"], Some("p_1_1_1.json"));
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("<svg"));
}

#[test]
fn validation_errors_exit_with_status_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"dimension": 2, "facets": [[[1, 0], "0"], [[-1, 0], "-1"]]}"#).unwrap();
    let cases: Vec<Vec<String>> = vec![
        vec!["render".into(), "--input".into(), data("p1.json").display().to_string()],
        vec![
            "potential".into(),
            "--lambda".into(),
            "2".into(),
            "--input".into(),
            data("p1.json").display().to_string(),
        ],
        vec![
            "potential".into(),
            "--lambda".into(),
            "1/2,1/2".into(),
            "--input".into(),
            data("p1.json").display().to_string(),
        ],
        vec!["probes".into(), "--lambda".into(), "1".into(), "--input".into(), data("p1.json").display().to_string()],
        vec!["validate".into(), "--input".into(), bad.display().to_string()],
        vec!["validate".into(), "--input".into(), dir.path().join("missing.json").display().to_string()],
        vec!["probes".into(), "--input".into(), data("p1.json").display().to_string()],
        vec![
            "critical".into(),
            "--truncation".into(),
            "x".into(),
            "--input".into(),
            data("p1.json").display().to_string(),
        ],
    ];
    for args in cases {
        let out = Command::new(env!("CARGO_BIN_EXE_toric-fiber-lab")).args(&args).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}
