use std::path::PathBuf;
use std::process::{Command, Output};

use relmap::engine::MapOutcome;
use relmap::model::Mapping;
use relmap::relations::Snapshot;
use relmap::scoring::QuadrupleExplanation;
use relmap::Engine;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn relmap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relmap"))
        .args(args)
        .env_remove("RELMAP_EMBED_URL")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

const BASE: &str = "sun,earth,gravity,solar system,newton";
const TARGET: &str = "nucleus,electrons,electric force,atom,faraday";

#[test]
fn map_dot_has_assignment_nodes() {
    let snap = fixture("solar.jsonl");
    let o = relmap(&[
        "map", "--base", "sun,earth", "--target", "nucleus,electrons",
        "--snapshot", snap.to_str().unwrap(), "--format", "dot",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let dot = stdout(&o);
    assert!(dot.starts_with("digraph"));
    assert!(dot.contains("\"sun→nucleus\""));
    assert!(dot.contains("\"earth→electrons\" -> \"sun→nucleus\""));
    assert!(dot.contains("penwidth="));
}

#[test]
fn missing_snapshot_exits_2_naming_the_path() {
    let o = relmap(&["map", "--base", "a,b", "--target", "c,d", "--snapshot", "/no/such/snap.jsonl"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/no/such/snap.jsonl"));
}

#[test]
fn too_few_entities_exits_2() {
    let snap = fixture("solar.jsonl");
    let o = relmap(&["map", "--base", "sun", "--target", "nucleus,atom", "--snapshot", snap.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unrelated_entities_exit_1() {
    let snap = fixture("solar.jsonl");
    let o = relmap(&["map", "--base", "x,y", "--target", "z,w", "--snapshot", snap.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no snapshot entry for (x, y)"));
}

#[test]
fn map_json_round_trips() {
    let snap = fixture("solar.jsonl");
    let o = relmap(&["map", "--base", BASE, "--target", TARGET, "--snapshot", snap.to_str().unwrap(), "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let out: MapOutcome = serde_json::from_str(&stdout(&o)).unwrap();
    let best = out.best().unwrap();
    assert_eq!(best.image("newton"), Some("faraday"));
    let again: Mapping = serde_json::from_str(&serde_json::to_string(best).unwrap()).unwrap();
    assert_eq!(&again, best);

    let direct = Engine::from_snapshot(Snapshot::load(&snap).unwrap())
        .map_names(&split(BASE), &split(TARGET))
        .unwrap();
    assert_eq!(out, direct);
    // Printed totals are sums of the evidence scores.
    let sum: f64 = out.evidence.iter().map(|p| p.score).sum();
    assert!((sum - best.total_score).abs() < 1e-9);
}

fn split(s: &str) -> Vec<String> {
    s.split(',').map(str::to_string).collect()
}

#[test]
fn explain_matches_sim_star() {
    let snap = fixture("solar.jsonl");
    let o = relmap(&[
        "explain", "--base-pair", "earth,sun", "--target-pair", "electrons,nucleus",
        "--snapshot", snap.to_str().unwrap(), "--format", "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let x: QuadrupleExplanation = serde_json::from_str(&stdout(&o)).unwrap();
    let out = Engine::from_snapshot(Snapshot::load(&snap).unwrap())
        .map_names(&split(BASE), &split(TARGET))
        .unwrap();
    let p = out
        .evidence
        .iter()
        .find(|p| p.base_pair == ("earth".into(), "sun".into()))
        .unwrap();
    assert_eq!(x.score, p.score);
    assert!(x.directions[0].retained.iter().any(|e| e.base_label == "revolve around"));

    let text = relmap(&[
        "explain", "--base-pair", "earth,sun", "--target-pair", "electrons,nucleus",
        "--snapshot", snap.to_str().unwrap(),
    ]);
    assert!(stdout(&text).contains("base cluster [revolve around, rotate around]"));
}

#[test]
fn explain_without_relations_scores_zero() {
    let snap = fixture("solar.jsonl");
    let o = relmap(&[
        "explain", "--base-pair", "newton,earth", "--target-pair", "faraday,electrons",
        "--snapshot", snap.to_str().unwrap(), "--format", "json",
    ]);
    let x: QuadrupleExplanation = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(x.score, 0.0);
    assert!(x.directions.iter().all(|d| d.retained.is_empty()));
}

#[test]
fn eval_and_ablation() {
    let snap = fixture("eval.jsonl");
    let problems = fixture("problems.json");
    let o = relmap(&[
        "eval", problems.to_str().unwrap(), "--snapshot", snap.to_str().unwrap(),
        "--ablate", "news", "--format", "json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["report"]["aggregates"]["perfect_accuracy"], 1.0);
    assert_eq!(v["ablations"][0]["disabled"], "news");
    assert_eq!(v["ablations"][0]["report"], v["report"]);

    let bad = relmap(&["eval", problems.to_str().unwrap(), "--snapshot", snap.to_str().unwrap(), "--ablate", "nope"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn suggest_proposes_lock() {
    let snap = fixture("suggest_b1.jsonl");
    let o = relmap(&[
        "suggest", "--base", "answer,logic,riddle", "--target", "key,mechanism", "--entity", "riddle",
        "--snapshot", snap.to_str().unwrap(), "--format", "json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["candidates"][0]["best_member"], "lock");
}

#[test]
fn config_file_wins_over_flags() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(fixture("solar.jsonl"), dir.path().join("snap.jsonl")).unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "snapshot = \"snap.jsonl\"\ndisable = [\"kb\"]\n").unwrap();
    // The flag names a missing file, but the config's snapshot is used, and
    // with its only source disabled nothing maps.
    let o = relmap(&[
        "map", "--base", "sun,earth", "--target", "nucleus,electrons",
        "--snapshot", "/missing.jsonl", "--config", cfg.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));

    std::fs::write(&cfg, "beam = 3\n").unwrap();
    let o = relmap(&["map", "--base", "a,b", "--target", "c,d", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn snapshot_build_from_local_triples() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("triples.tsv"),
        "earth\torbits\tsun\nsun\twarms\tearth\nelectron\torbits\tnucleus\n",
    )
    .unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "[[source]]\nid = \"local\"\nkind = \"triple_lookup\"\nconfig = { path = \"triples.tsv\" }\n",
    )
    .unwrap();
    let out = dir.path().join("built.jsonl");
    let o = relmap(&[
        "snapshot", "build", "--base", "sun,earth", "--target", "nucleus,electron",
        "--out", out.to_str().unwrap(), "--config", cfg.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let snap = Snapshot::load(&out).unwrap();
    let r = snap.relations("local", "earth", "sun").unwrap();
    assert_eq!(r[0].text, "orbits");
    assert_eq!(snap.relations("local", "nucleus", "electron"), Some(vec![]));

    let stats = relmap(&["snapshot", "stats", out.to_str().unwrap()]);
    assert!(stdout(&stats).contains("local"));

    let mapped = relmap(&["map", "--base", "sun,earth", "--target", "nucleus,electron", "--snapshot", out.to_str().unwrap()]);
    assert_eq!(mapped.status.code(), Some(0), "{}", stderr(&mapped));
    assert!(stdout(&mapped).contains("earth -> electron"));
}
