use std::process::Command;

use rescue_core::sim::generate::{generate, preset};
use rescue_core::sim::ScenarioConfig;
use rescue_trainer::cli::{ruleset_text, run_headless};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rescue-trainer"))
}

#[test]
fn run_writes_report_and_pddl() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("city.json");
    std::fs::write(
        &scenario,
        generate("test-city", preset("test-city").unwrap(), 4).to_json(),
    )
    .unwrap();
    let report = dir.path().join("report.json");
    let pddl = dir.path().join("pddl");
    let out = bin()
        .args(["run", "--scenario"])
        .arg(&scenario)
        .args(["--ruleset", "test_city", "--seed", "4", "--steps", "20", "--report"])
        .arg(&report)
        .arg("--emit-pddl")
        .arg(&pddl)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(report["steps"], 20);
    assert_eq!(report["scenario"], "test-city");
    assert_eq!(report["latency"]["samples"], 21);
    assert!(report["goals_created"].as_u64().unwrap() > 0);

    let names: Vec<String> = std::fs::read_dir(&pddl)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    for d in ["unbury", "douse", "unblock", "scout"] {
        assert!(names.contains(&format!("{d}_domain.pddl")), "{names:?}");
    }
    let problems: Vec<_> = names.iter().filter(|n| n.starts_with('t')).collect();
    assert!(!problems.is_empty());
    for p in problems {
        let text = std::fs::read_to_string(pddl.join(p)).unwrap();
        assert!(text.trim_start().starts_with("(define (problem"), "{p}");
    }
}

#[test]
fn headless_run_is_reproducible() {
    let config = generate("test-city", preset("test-city").unwrap(), 9);
    let rules = ruleset_text("test_city").unwrap();
    let a = run_headless(config.clone(), &rules, 9, Some(30), None).unwrap();
    let b = run_headless(config, &rules, 9, Some(30), None).unwrap();
    assert_eq!(a.goals_by_type, b.goals_by_type);
    assert_eq!((a.finished, a.dropped, a.active), (b.finished, b.dropped, b.active));
}

#[test]
fn validate_ruleset_accepts_and_rejects() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.frames");
    std::fs::write(&good, rescue_core::rulesets::KOBE).unwrap();
    let out = bin().arg("validate-ruleset").arg(&good).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok: 4 trees"));

    let bad = dir.path().join("bad.frames");
    std::fs::write(&bad, "frame human\n  nonsense\n").unwrap();
    let out = bin().arg("validate-ruleset").arg(&bad).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn generate_scenario_writes_a_loadable_preset() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("kobe.json");
    let out = bin()
        .args(["generate-scenario", "--preset", "kobe", "--seed", "1", "--out"])
        .arg(&out_path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let config = ScenarioConfig::load(&out_path).unwrap();
    assert_eq!(config, generate("kobe", preset("kobe").unwrap(), 1));

    let out = bin()
        .args(["generate-scenario", "--preset", "atlantis", "--out"])
        .arg(dir.path().join("x.json"))
        .output()
        .unwrap();
    assert!(!out.status.success());
}
