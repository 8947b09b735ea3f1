use efd_core::efdloop::p_to_mu;
use efd_core::isingmc::{run_correlator, McConfig};
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::io::Write;
use std::process::{Command, Output};

fn efd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_efd")).args(args).env_remove("EFD_THREADS").output().expect("binary runs")
}

fn json_run(args: &[&str]) -> Value {
    let mut full = args.to_vec();
    full.extend(["--format", "json"]);
    let out = efd(&full);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn data_section(stdout: &[u8]) -> String {
    String::from_utf8_lossy(stdout).lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect()
}

fn labels(v: &Value) -> Vec<String> {
    v["data"]["subgroups"].as_array().unwrap().iter().map(|s| s["phase_label"].as_str().unwrap().to_string()).collect()
}

#[test]
fn classify_toric_labels_reference_phases() {
    let v = json_run(&["classify", "--model", "toric", "--replicas", "2"]);
    let subgroups = v["data"]["subgroups"].as_array().unwrap();
    let memory: Vec<(&str, &str)> = subgroups
        .iter()
        .filter(|s| s["phase_label"] != "new")
        .map(|s| (s["phase_label"].as_str().unwrap(), s["memory"].as_str().unwrap()))
        .collect();
    assert_eq!(
        memory,
        vec![("I", "Quantum"), ("II", "Classical"), ("III", "Classical"), ("IV", "Classical"), ("V", "Trivial")]
    );
    assert!(subgroups.iter().all(|s| s["order"] == 16));
    assert_eq!(v["data"]["count"].as_u64().unwrap() as usize, subgroups.len());
}

#[test]
fn classify_laughlin_has_two_phases() {
    let v = json_run(&["classify", "--model", "laughlin3", "--replicas", "2"]);
    assert_eq!(labels(&v), vec!["I", "II"]);
    assert_eq!(v["data"]["count"], 2);
}

#[test]
fn coherent_run_is_a_superset_with_the_three_coherent_subgroups() {
    let incoherent = labels(&json_run(&["classify", "--model", "toric"]));
    let coherent = labels(&json_run(&["classify", "--model", "toric", "--coherent"]));
    assert!(coherent.len() > incoherent.len());
    for label in ["I", "II", "III", "IV", "V", "coherent-e", "coherent-m", "coherent-em"] {
        assert!(coherent.iter().any(|l| l == label), "missing {label}");
    }
}

#[test]
fn invalid_k_matrix_exits_with_input_error() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "2\n1 2\n3 4").unwrap();
    let out = efd(&["classify", "--k-matrix", f.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not symmetric"));

    let mut g = tempfile::NamedTempFile::new().unwrap();
    writeln!(g, "2\n1 x\n0 1").unwrap();
    assert_eq!(efd(&["classify", "--k-matrix", g.path().to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn k_matrix_file_matches_builtin_model() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "# toric code\n2\n0 2\n2 0").unwrap();
    let v = json_run(&["classify", "--k-matrix", f.path().to_str().unwrap()]);
    let builtin = json_run(&["classify", "--model", "toric"]);
    assert_eq!(v["data"]["count"], builtin["data"]["count"]);
}

#[test]
fn search_cap_exits_with_resource_error() {
    let out = efd(&["classify", "--model", "toric", "--coherent", "--search-cap", "10"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn threshold_below_transition_has_no_crossing() {
    let out = efd(&[
        "threshold",
        "--ls",
        "8,12",
        "--p-min",
        "0.02",
        "--p-max",
        "0.09",
        "--p-points",
        "4",
        "--refine",
        "0",
        "--sweeps",
        "200",
        "--thermalization",
        "50",
    ]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn threshold_rerun_is_byte_identical_in_data() {
    let args = [
        "threshold",
        "--ls",
        "6,10",
        "--p-points",
        "5",
        "--refine",
        "1",
        "--sweeps",
        "400",
        "--thermalization",
        "50",
        "--seed",
        "11",
        "--threads",
        "1",
    ];
    let (a, b) = (efd(&args), efd(&args));
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let data = data_section(&a.stdout);
    assert_eq!(data, data_section(&b.stdout));
    assert!(data.starts_with("L,p,mu,observable,value,stderr,samples,seed\n"));
    assert!(data.lines().last().unwrap().starts_with("0,"));
    let text = String::from_utf8_lossy(&a.stdout);
    let hash = text.lines().find_map(|l| l.strip_prefix("# content_sha256: ")).unwrap();
    assert_eq!(hash, format!("{:x}", Sha256::digest(data.as_bytes())));
}

#[test]
fn tee_at_zero_error_is_exactly_two_log_two() {
    let v = json_run(&["tee", "-l", "12", "--p", "0"]);
    let gamma = v["data"]["result"]["gamma"]["mean"].as_f64().unwrap();
    assert_eq!(gamma, 2.0 * std::f64::consts::LN_2);
    assert_eq!(v["data"]["result"]["gamma"]["stderr"], 0.0);
}

#[test]
fn oracle_stabilizer_plaquette_at_half() {
    let v = json_run(&["oracle", "stab", "-l", "4", "--p", "0.5", "--region", "1,1,2,2"]);
    assert_eq!(v["data"]["log2_units"], 3);
    assert!((v["data"]["value"].as_f64().unwrap() - 3.0 * std::f64::consts::LN_2).abs() < 1e-11);
}

#[test]
fn oracle_renyi_at_zero_doubles_single_copy() {
    let single = json_run(&["oracle", "stab", "-l", "3", "--p", "0.5"]);
    let v = json_run(&["oracle", "renyi2", "-l", "3", "--p", "0"]);
    // At p = 1/2 the doubled state carries one copy's worth of boundary entropy.
    let one = single["data"]["log2_units"].as_f64().unwrap();
    assert_eq!(v["data"]["log2_units"].as_f64().unwrap(), 2.0 * one);
}

#[test]
fn oracle_string_matches_monte_carlo() {
    let p = 0.1;
    let v = json_run(&["oracle", "string", "-l", "3", "--p", "0.1"]);
    let exact = v["data"]["value"].as_f64().unwrap();
    assert!((exact - v["data"]["spin_enumeration"].as_f64().unwrap()).abs() < 1e-11);
    let cfg = McConfig { measurements: 20_000, thermalization: 500, seed: 5, ..McConfig::default() };
    let mc = run_correlator(3, p_to_mu(p).unwrap(), &[(0, 1)], &cfg).unwrap()[0];
    assert!((mc.mean - exact).abs() < 4.0 * mc.stderr, "{} vs {exact} +- {}", mc.mean, mc.stderr);
}

#[test]
fn oracle_beyond_cap_exits_with_resource_error() {
    assert_eq!(efd(&["oracle", "string", "-l", "5", "--p", "0.1"]).status.code(), Some(3));
    assert_eq!(efd(&["oracle", "renyi2", "-l", "4", "--p", "0.1", "--region", "0,0,3,3"]).status.code(), Some(3));
}

#[test]
fn oracle_rejects_stabilizer_at_intermediate_rate() {
    assert_eq!(efd(&["oracle", "stab", "-l", "3", "--p", "0.2"]).status.code(), Some(2));
}

#[test]
fn stab_rectangles_follow_boundary_counts() {
    for (limit, per_vertex) in [("p0", 2), ("phalf", 1)] {
        let v = json_run(&["stab", "-l", "6", "--limit", limit]);
        let regions = v["data"]["regions"].as_array().unwrap();
        assert!(regions.len() >= 4);
        for r in regions {
            let b = r["boundary_vertices"].as_i64().unwrap();
            assert_eq!(r["entropy_log2"].as_i64().unwrap(), per_vertex * (b - 1));
        }
    }
}

#[test]
fn config_file_values_yield_to_flags_and_are_echoed() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "threads = 2\n[stab]\nl = 4\nlimit = phalf\n[classify]\ncoherent = true").unwrap();
    let path = f.path().to_str().unwrap();
    let v = json_run(&["stab", "--config", path, "-l", "6"]);
    assert_eq!(v["config"]["threads"], 2);
    assert_eq!(v["config"]["stab"]["l"], 6);
    assert_eq!(v["config"]["stab"]["limit"], "phalf");
    assert_eq!(v["data"]["l"], 6);

    let mut bad = tempfile::NamedTempFile::new().unwrap();
    writeln!(bad, "[stab]\nnonsense = 1").unwrap();
    assert_eq!(efd(&["stab", "--limit", "p0", "--config", bad.path().to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn thread_count_defaults_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_efd"))
        .args(["stab", "--limit", "p0", "--format", "json"])
        .env("EFD_THREADS", "3")
        .output()
        .unwrap();
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["config"]["threads"], 3);
}

#[test]
fn json_output_file_embeds_metadata_and_hash() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    let out =
        efd(&["oracle", "wilson", "-l", "3", "--p", "0.2", "--format", "json", "--output", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["tool"], "efd");
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    assert!(v["wall_clock_seconds"].is_number());
    let compact = serde_json::to_string(&v["data"]).unwrap();
    assert_eq!(v["content_sha256"], format!("{:x}", Sha256::digest(compact.as_bytes())));
}
