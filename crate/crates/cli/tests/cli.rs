use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bnlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bnlab")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const SMALL: &str = r#"
network = "chain.bn"
seed = 7
output = "out"
n_grid = [5, 10, 20]
method = "exact"
candidates = "all-dags"

[[rival]]
id = "drop"
graph = "0>1"
role = "under"

[[rival]]
id = "extra"
graph = "0>1 1>2 0>2"
role = "over"
"#;

const CHAIN: &str = "\
n 3
node 0 parents
cpt 0.4
node 1 parents 0
cpt 0.2 0.8
node 2 parents 1
cpt 0.2 0.8
";

fn small_setup(dir: &Path, config: &str) -> String {
    fs::write(dir.join("chain.bn"), CHAIN).unwrap();
    let path = dir.join("config.toml");
    fs::write(&path, config).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn enumerate_prints_counts() {
    let o = bnlab(&["enumerate", "--n", "4"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "dags=543 classes=185");
    let o = bnlab(&["enumerate", "--n", "3"]);
    assert_eq!(stdout(&o).trim(), "dags=25 classes=11");
}

#[test]
fn capacity_errors_exit_with_three() {
    let o = bnlab(&["enumerate", "--n", "7"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.toml");
    let o = bnlab(&["run", "--config", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let bad = small_setup(dir.path(), "network = \"chain.bn\"\nseed = 1\nn_grid = [10, 5]\nmethod = \"mc\"\n");
    let o = bnlab(&["run", "--config", &bad]);
    assert_eq!(o.status.code(), Some(2));

    let unknown = small_setup(dir.path(), &format!("{SMALL}\nbogus = 1\n"));
    let o = bnlab(&["error", "--config", &unknown]);
    assert_eq!(o.status.code(), Some(2));

    fs::write(dir.path().join("broken.bn"), "n 2\nnode 0 parents\ncpt 0.5\nnode 1 parents 0\ncpt 0.5\n").unwrap();
    let o = bnlab(&["info", "--network", dir.path().join("broken.bn").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line"), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn info_describes_the_bundled_network() {
    let o = bnlab(&["info"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("nodes=4"));
    assert!(text.contains("dimension=9"));
    assert!(text.contains("gamma=0.1"));
}

#[test]
fn run_writes_all_files_with_the_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_setup(dir.path(), SMALL);
    let o = bnlab(&["run", "--config", &cfg]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("out");
    let header = |f: &str| -> Vec<String> {
        let mut r = csv::Reader::from_path(out.join(f)).unwrap();
        let h = r.headers().unwrap().iter().map(String::from).collect();
        assert!(r.records().all(|rec| rec.is_ok()));
        h
    };
    assert_eq!(header("scores.csv"), ["graph_id", "dimension", "loglik", "penalty", "score"]);
    assert_eq!(
        header("errors.csv"),
        ["N", "graph_id", "method", "probability", "log10_probability", "std_error", "blocks", "ess"]
    );
    assert_eq!(header("bounds.csv"), ["bound_id", "inputs_json", "value", "unit"]);
    let rows = csv::Reader::from_path(out.join("scores.csv")).unwrap().records().count();
    assert_eq!(rows, 25);
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["seed"], 7);
    assert!(summary["wall_time_seconds"].as_f64().is_some());
    assert!(summary["version"].is_string());
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let config = SMALL.replace("method = \"exact\"", "method = \"is\"\nblocks = 200\nproposal_count = 4");
    let cfg = small_setup(dir.path(), &config);
    let mut seen: Option<Vec<Vec<u8>>> = None;
    for threads in ["1", "3", "2"] {
        let o = bnlab(&["--threads", threads, "run", "--config", &cfg]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let files: Vec<Vec<u8>> = ["scores.csv", "errors.csv", "bounds.csv"]
            .iter()
            .map(|f| fs::read(dir.path().join("out").join(f)).unwrap())
            .collect();
        match &seen {
            None => seen = Some(files),
            Some(s) => assert!(s == &files, "outputs changed with {threads} threads"),
        }
    }
}

#[test]
fn stage_subcommands_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_setup(dir.path(), SMALL);
    let other = dir.path().join("elsewhere");
    let o = bnlab(&["bounds", "--config", &cfg, "--out", other.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(other.join("bounds.csv").exists());
    let o = bnlab(&["score", "--config", &cfg, "--seed", "9", "--out", other.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(other.join("scores.csv").exists());
}

#[test]
fn preset_prints_as_a_loadable_config() {
    let o = bnlab(&["figure1", "--print-config", "--blocks", "100"]);
    assert!(o.status.success());
    let cfg = bnlab::experiment::ExperimentConfig::from_toml(&stdout(&o)).unwrap();
    let mut preset = bnlab::experiment::figure1_preset();
    preset.blocks = 100;
    assert_eq!(cfg, preset);
}
