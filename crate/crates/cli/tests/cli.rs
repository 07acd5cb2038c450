use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use asai_core::decompose::{quad_to_json, random_bounded_pair, QtildeVariant, SignedSetup, SplitEigenData};
use asai_core::padic::max_digits;
use serde_json::Value;

fn dir(name: &str) -> PathBuf {
    let d = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = fs::remove_dir_all(&d);
    fs::create_dir_all(&d).unwrap();
    d
}

fn asai(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_asai")).args(args).env_remove("ASAI_PRECISION").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stderr)))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn gen_tower_is_deterministic() {
    let d = dir("gen");
    let (a, b, c) = (d.join("a.json"), d.join("b.json"), d.join("c.json"));
    for (out, seed) in [(&a, "0"), (&b, "0"), (&c, "1")] {
        let o = asai(&["gen-tower", "--p", "5", "--k", "2", "-R", "2", "--seed", seed, "--out", p(out)]);
        assert_eq!(code(&o), 0);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn demo_pipeline_passes_and_reproduces() {
    let d = dir("pipeline");
    let (a, b) = (d.join("a.json"), d.join("b.json"));
    for out in [&a, &b] {
        let o = asai(&["pipeline", "--p", "5", "--k", "2", "-R", "3", "--out", p(out)]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let rep: Value = serde_json::from_slice(&fs::read(&a).unwrap()).unwrap();
    let names: Vec<&str> = rep["stages"].as_array().unwrap().iter().map(|s| s["stage"].as_str().unwrap()).collect();
    assert_eq!(names, ["gen", "norm", "congruence", "patch", "assemble", "oracle", "interp"]);
}

#[test]
fn faults_fail_at_their_stage() {
    for fault in ["norm", "congruence", "oracle", "interp"] {
        let o = asai(&["pipeline", "--fault", fault, "--fault-val", "1"]);
        assert_eq!(code(&o), 1, "{fault}");
        assert_eq!(stdout_json(&o)["failed_stage"], fault);
    }
    let o = asai(&["pipeline", "--fault", "norm", "--fault-val", "3"]);
    assert_eq!(stdout_json(&o)["stages"][1]["detail"]["worst"], "3");
}

#[test]
fn zero_measure_demo() {
    let o = asai(&["pipeline", "--zero"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o)["stages"][4]["detail"]["all_zero"], true);
}

#[test]
fn invariants_filter_and_budget() {
    let o = asai(&["invariants", "--filter", "p=3,k=1,R=2"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(code(&o), 0, "{text}");
    assert!(text.contains("1..1") && text.contains("ok 1 - p=3 k=1 R=2"));
    let o = asai(&["--prec", "1", "invariants", "--filter", "p=5,k=2"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(code(&o), 3);
    assert!(text.lines().filter(|l| l.starts_with("not ok")).all(|l| l.contains("precision exhausted")));
    let o = Command::new(env!("CARGO_BIN_EXE_asai"))
        .args(["invariants", "--filter", "p=7,k=0,R=1"])
        .env("ASAI_PRECISION", "1")
        .output()
        .unwrap();
    assert_eq!(code(&o), 3);
}

#[test]
fn patch_interp_remove_chain() {
    let d = dir("chain");
    let (tower, dist, eigen) = (d.join("tower.json"), d.join("dist.json"), d.join("eigen.json"));
    let o = asai(&["gen-tower", "--p", "5", "--k", "1", "-R", "2", "--seed", "3", "--level0", "--out", p(&tower)]);
    assert_eq!(code(&o), 0);
    let o = asai(&["patch", "--tower", p(&tower), "--out", p(&dist), "--check"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(stdout_json(&o)["degree_bound"], true);
    for (theta, j) in [(r#"{"r":2,"delta_power":3,"wild_exp":2}"#, "1"), (r#"{"r":1,"delta_power":0,"wild_exp":0}"#, "0")] {
        let o = asai(&["interp", "--dist", p(&dist), "--tower", p(&tower), "--theta", theta, "--j", j]);
        assert_eq!(code(&o), 0);
    }
    let t: Value = serde_json::from_slice(&fs::read(&tower).unwrap()).unwrap();
    fs::write(&eigen, t["eigen"].to_string()).unwrap();
    let o = asai(&["remove-c", "--dist", p(&dist), "--eigen", p(&eigen)]);
    assert_eq!(code(&o), 0);
    let comps = stdout_json(&o)["components"].as_array().unwrap().clone();
    assert_eq!(comps.len(), 4);
    assert!(comps.iter().any(|c| c["status"] == "meromorphic"));
    assert!(comps.iter().filter(|c| c["status"] == "removed").all(|c| c["round_trip"] == true));
}

#[test]
fn synthesize_then_decompose_split() {
    let d = dir("split");
    let eigen = d.join("split.json");
    fs::write(&eigen, r#"{"p": 7, "k": 2, "a_pbar": "1", "a_p": "7"}"#).unwrap();
    let data = SplitEigenData::from_ints(7, max_digits(7), 2, 1, 7).unwrap();
    let setup = SignedSetup::split(&data, 1, QtildeVariant::Standard).unwrap();
    let (s, f) = random_bounded_pair(&data.ctx, &data.ctx.zero(), setup.min_window(), 11);
    let files: Vec<PathBuf> = ["sharp", "flat", "la", "lb", "pair"].iter().map(|n| d.join(format!("{n}.json"))).collect();
    fs::write(&files[0], s.to_json().to_string()).unwrap();
    fs::write(&files[1], f.to_json().to_string()).unwrap();
    let o = asai(&[
        "synthesize", "--sharp", p(&files[0]), "--flat", p(&files[1]), "--eigen", p(&eigen), "--la", p(&files[2]),
        "--lb", p(&files[3]),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = asai(&["decompose", "--la", p(&files[2]), "--lb", p(&files[3]), "--eigen", p(&eigen), "--out", p(&files[4])]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let pair: Value = serde_json::from_slice(&fs::read(&files[4]).unwrap()).unwrap();
    let back = asai_core::distribution::Distribution::from_json(&pair["sharp"]).unwrap();
    assert!(asai_core::decompose::same_distribution(&s, &back));
}

#[test]
fn quadratic_pairs_and_mismatch_flag() {
    let d = dir("quad");
    let eigen = d.join("split.json");
    fs::write(&eigen, r#"{"p": 3, "k": 0, "a_pbar": "1", "a_p": "3"}"#).unwrap();
    let data = SplitEigenData::from_ints(3, max_digits(3), 0, 1, 3).unwrap();
    let setup = SignedSetup::quadratic(&data, 2, QtildeVariant::Standard).unwrap();
    let proto = setup.proto();
    let (s1, f1) = random_bounded_pair(&data.ctx, &proto, setup.min_window(), 1);
    let (s2, f2) = random_bounded_pair(&data.ctx, &proto, setup.min_window(), 2);
    let a = setup.synthesize(&s1, &f1).unwrap();
    let b = setup.synthesize(&s2, &f2).unwrap();
    let la = d.join("la.json");
    let lb = d.join("lb.json");
    let lb2 = d.join("lb2.json");
    fs::write(&la, quad_to_json(&a.alpha).to_string()).unwrap();
    fs::write(&lb, quad_to_json(&a.beta).to_string()).unwrap();
    fs::write(&lb2, quad_to_json(&b.beta).to_string()).unwrap();
    let o = asai(&["decompose", "--la", p(&la), "--lb", p(&lb), "--eigen", p(&eigen), "--n", "2"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o)["report"]["flagged"], false);
    let o = asai(&["decompose", "--la", p(&la), "--lb", p(&lb2), "--eigen", p(&eigen), "--n", "2"]);
    assert_eq!(code(&o), 1);
    assert_eq!(stdout_json(&o)["report"]["flagged"], true);
}

#[test]
fn roundtrip_self_test() {
    let o = asai(&["roundtrip", "--seed", "5", "--count", "2"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o)["trials"].as_array().unwrap().len(), 2);
}

#[test]
fn logmatrix_check() {
    let o = asai(&["logmatrix", "--p", "3", "--k", "1", "--a", "3", "--v", "1", "--levels", "3", "--check"]);
    assert_eq!(code(&o), 0);
    let levels = stdout_json(&o)["levels"].as_array().unwrap().clone();
    assert!(levels.iter().all(|l| l["det_matches_log_product"] == true));
    // one digit of a leaves the discriminant undetermined
    let o = asai(&["logmatrix", "--p", "3", "--k", "1", "--a", "3^1*[1]", "--levels", "2"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn classical_commands() {
    let d = dir("classical");
    let roots = d.join("roots.json");
    fs::write(&roots, r#"{"p":3,"k":1,"alpha_p":"3","beta_p":"3","alpha_pbar":"1","beta_pbar":"9"}"#).unwrap();
    let o = asai(&["euler", "--tag", "split", "--roots", p(&roots)]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o)["coeffs"], serde_json::json!(["1", "-60", "1062", "-4860", "6561"]));
    fs::write(&roots, r#"{"p":3,"k":1,"alpha_p":"2","beta_p":"3","alpha_pbar":"1","beta_pbar":"9"}"#).unwrap();
    assert_eq!(code(&asai(&["euler", "--tag", "split", "--roots", p(&roots)])), 2);
    assert_eq!(code(&asai(&["stab-check", "--p", "5", "--alpha", "25", "--xmax", "100"])), 0);
}

#[test]
fn bad_input_is_a_validation_error() {
    assert_eq!(code(&asai(&["gen-tower", "--p", "4", "--k", "1"])), 2);
    assert_eq!(code(&asai(&["gen-tower", "--p", "5", "--k", "1", "--slope", "2"])), 2);
    assert_eq!(code(&asai(&["patch", "--tower", "/nonexistent.json"])), 2);
    assert_eq!(code(&asai(&["invariants", "--filter", "q=1"])), 2);
}
