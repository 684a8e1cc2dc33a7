//! End-to-end checks of the `del` binary.

use std::path::Path;
use std::process::{Command, Output};

use del::config::RunConfig;

const SMALL: &str = "population = 30\ngenerations = 2\ninitial_epochs = 3\nfinetune_epochs = 2\nsobol_init = 20\nsobol_batches = 2\nsobol_batch = 4\n";

fn del(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_del")).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("small.toml");
    std::fs::write(&path, SMALL).unwrap();
    path.display().to_string()
}

fn run_small(dir: &Path, name: &str, seed: &str) -> std::path::PathBuf {
    let out = dir.join(name);
    let o = del(&["run", "--config", &small_config(dir), "--seed", seed, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    out
}

fn read(p: impl AsRef<Path>) -> Vec<u8> {
    std::fs::read(p.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", p.as_ref().display()))
}

#[test]
fn run_writes_the_layout_and_replays_from_its_resolved_config() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_small(tmp.path(), "a", "9");
    for g in 0..=2 {
        for f in ["population.jsonl", "metrics.csv", "front.csv", "distribution.csv", "model.bin"] {
            assert!(out.join(format!("gen_{g}")).join(f).is_file(), "gen_{g}/{f}");
        }
    }
    let summary = String::from_utf8(read(out.join("metrics.csv"))).unwrap();
    assert_eq!(summary.lines().count(), 4);
    assert!(summary.starts_with("generation,validity_smiles,validity_fragments,novelty,diversity,front_size"));

    let resolved = RunConfig::from_toml_str(&String::from_utf8(read(out.join("config.resolved"))).unwrap()).unwrap();
    assert_eq!(resolved.seed, 9);
    assert_eq!(resolved.population, 30);

    let replay = tmp.path().join("b");
    let o = del(&["run", "--config", out.join("config.resolved").to_str().unwrap(), "--out", replay.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for g in 0..=2 {
        let f = format!("gen_{g}/population.jsonl");
        assert_eq!(read(out.join(&f)), read(replay.join(&f)), "{f}");
    }
    assert_eq!(read(out.join("metrics.csv")), read(replay.join("metrics.csv")));
}

#[test]
fn seed_override_changes_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let a = run_small(tmp.path(), "a", "1");
    let b = run_small(tmp.path(), "b", "2");
    assert_ne!(read(a.join("gen_2/population.jsonl")), read(b.join("gen_2/population.jsonl")));
}

#[test]
fn configuration_errors_exit_2_and_name_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.toml");
    for (text, key) in [("populaton = 10\n", "populaton"), ("population = 0\n", "population"), ("crossover = \"uniform\"\n", "crossover")] {
        std::fs::write(&bad, text).unwrap();
        let o = del(&["run", "--config", bad.to_str().unwrap(), "--out", tmp.path().join("x").to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{text}");
        assert!(stderr(&o).contains(key), "{text}: {}", stderr(&o));
    }
    let o = del(&["run", "--config", tmp.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = del(&["run", "--population", "1", "--out", tmp.path().join("y").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("population"));
    assert!(!tmp.path().join("y").exists());
}

#[test]
fn baseline_needs_a_checkpoint_and_writes_a_trace() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let o = del(&["baseline", "--config", &cfg, "--out", tmp.path().join("none").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("checkpoint"));

    let out = run_small(tmp.path(), "a", "3");
    let o = del(&["baseline", "--config", &cfg, "--seed", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let trace = String::from_utf8(read(out.join("baseline/hypervolume.csv"))).unwrap();
    let rows: Vec<&str> = trace.lines().collect();
    assert_eq!(rows[0], "batch,evaluated,sobol");
    assert_eq!(rows.len(), 4);
    let hv: Vec<f64> = rows[1..].iter().map(|r| r.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert!(hv.windows(2).all(|w| w[1] >= w[0]));

    let again = del(&["baseline", "--config", &cfg, "--seed", "3", "--out", out.to_str().unwrap(), "--model", out.join("gen_2/model.bin").to_str().unwrap()]);
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(trace.as_bytes(), read(out.join("baseline/hypervolume.csv")));

    let junk = tmp.path().join("junk.bin");
    std::fs::write(&junk, b"not a model").unwrap();
    let o = del(&["baseline", "--config", &cfg, "--out", out.to_str().unwrap(), "--model", junk.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn compare_reports_survival_and_rejects_bad_input() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a.csv");
    let b = tmp.path().join("b.csv");
    std::fs::write(&a, "f1,f2\n1,4\n4,1\n").unwrap();
    std::fs::write(&b, "f1,f2\n2,2\n5,5\n").unwrap();
    let table = tmp.path().join("table.csv");
    let o = del(&["compare", a.to_str().unwrap(), b.to_str().unwrap(), "--out", table.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "source,front_size,survivors,percentage");
    assert_eq!(lines[1], format!("{},2,2,100", a.display()));
    assert_eq!(lines[2], format!("{},2,1,50", b.display()));
    assert_eq!(read(&table), text.as_bytes());

    let o = del(&["compare", a.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    std::fs::write(&b, "f1,f2\n2,2\n5,oops\n").unwrap();
    let o = del(&["compare", a.to_str().unwrap(), b.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(&format!("{}:3", b.display())), "{}", stderr(&o));
}

#[test]
fn metrics_recomputes_the_run_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_small(tmp.path(), "a", "4");
    let pop = out.join("gen_2/population.jsonl");
    let o = del(&["metrics", pop.to_str().unwrap(), "--config", &small_config(tmp.path()), "--seed", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let got: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();

    let recorded = String::from_utf8(read(out.join("gen_2/metrics.csv"))).unwrap();
    let mut lines = recorded.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| row[header.iter().position(|h| *h == name).unwrap()];
    assert_eq!(got[0], "30");
    assert_eq!(got[3], col("novelty"));
    assert_eq!(got[4], col("diversity"));
    assert_eq!(got[5], col("front_size"));
    assert_eq!(got[6], col("front_hypervolume"));
    assert_eq!(got[7], col("novel_high_quality"));

    let text = String::from_utf8(read(&pop)).unwrap();
    let tampered = tmp.path().join("tampered.jsonl");
    let first = text.lines().next().unwrap();
    let mut record: serde_json::Value = serde_json::from_str(first).unwrap();
    record["raw_properties"]["s"] = serde_json::json!(-100.0);
    std::fs::write(&tampered, format!("{record}\n")).unwrap();
    let o = del(&["metrics", tampered.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("tampered.jsonl:1"), "{}", stderr(&o));
}
