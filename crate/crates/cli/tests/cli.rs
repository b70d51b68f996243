use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn nlsk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlsk")).args(args).output().expect("binary runs")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn read_json(path: PathBuf) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const SMALL_GROUND: &str = "[ground_state]\nr_max = 40\nn_points = 2047\n";

const SMALL_CAMPAIGN: &str = "[run]
command = campaign

[grid]
r_max = 40
n_points = 1023

[ground_state]
r_max = 40
n_points = 2047

[propagator]
dt = 0.0005
t_final = 0.2
record_every = 20

[sweep]
amplitudes = 0.1, 4.5
ks = 0, 0.5
alphas = 1.5
family = SECH
";

#[test]
fn ground_state_writes_outputs_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "g.ini", SMALL_GROUND);
    let out = dir.path().join("out");
    let o = nlsk(&["ground-state", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["ground_state.csv", "ground_state.json", "result.json", "config.ini", "manifest.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let manifest = read_json(out.join("manifest.json"));
    assert_eq!(manifest["command"], "ground-state");
    assert_eq!(manifest["exit_status"], 0);
    let n0 = read_json(out.join("result.json"))["certificate"]["n0"].as_f64().unwrap();
    assert!((n0 / 18.897 - 1.0).abs() < 1e-4, "{n0}");
}

#[test]
fn config_errors_exit_with_status_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();

    let cfg = write(dir.path(), "a.ini", "[potential]\nk = 0.5\nalpha = 2.5\n");
    let o = nlsk(&["functionals", "--config", &cfg, "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3") && err.contains("alpha"), "{err}");

    let cfg = write(dir.path(), "b.ini", "[grid]\nr_max = 40\nnpoints = 100\n");
    let o = nlsk(&["functionals", "--config", &cfg, "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("npoints"));

    let o = nlsk(&["no-such-command", "--config", &cfg, "--out", out]);
    assert_eq!(o.status.code(), Some(2));

    let o = nlsk(&["functionals", "--config", dir.path().join("missing.ini").to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(2));

    // Output path blocked by a regular file.
    let blocker = write(dir.path(), "blocker", "");
    let cfg = write(dir.path(), "c.ini", SMALL_GROUND);
    let o = nlsk(&["ground-state", "--config", &cfg, "--out", &format!("{blocker}/sub")]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn flipped_potential_fails_the_lemma_suite() {
    let dir = tempfile::tempdir().unwrap();
    let text = "[run]
command = lemmas

[grid]
r_max = 40
n_points = 2047

[ground_state]
r_max = 40
n_points = 2047

[sweep]
amplitudes = 0.5, 2, 4
ks = 0.5, 1
alphas = 1.25
widths = 0.5
family = RANDOM_BUMP
seed = 3
";
    let good = write(dir.path(), "good.ini", text);
    let o = nlsk(&["--config", &good, "--out", dir.path().join("good").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let bad = write(dir.path(), "bad.ini", &format!("{text}mutate_potential_sign = true\n"));
    let o = nlsk(&["--config", &bad, "--out", dir.path().join("bad").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let result = read_json(dir.path().join("bad/result.json"));
    let rows = result["lemmas"]["rows"].as_array().unwrap();
    let j = rows.iter().find(|r| r["name"] == "j_positivity").unwrap();
    assert_eq!(j["passed"], false);
}

#[test]
fn campaign_reruns_from_its_manifest_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.ini", SMALL_CAMPAIGN);
    let first = dir.path().join("first");
    let o = nlsk(&["--config", &cfg, "--out", first.to_str().unwrap(), "--threads", "2"]);
    assert!(matches!(o.status.code(), Some(0 | 1)), "{}", String::from_utf8_lossy(&o.stderr));
    let second = dir.path().join("second");
    let manifest = first.join("manifest.json");
    let o2 = nlsk(&["--config", manifest.to_str().unwrap(), "--out", second.to_str().unwrap(), "--threads", "1"]);
    assert_eq!(o.status.code(), o2.status.code());
    let mut files = vec!["result.json".to_string(), "config.ini".to_string()];
    for i in 0..4 {
        files.push(format!("cells/cell_{i:03}.csv"));
        files.push(format!("cells/cell_{i:03}_events.json"));
    }
    for f in files {
        let a = std::fs::read(first.join(&f)).unwrap();
        let b = std::fs::read(second.join(&f)).unwrap();
        assert!(a == b, "{f} differs");
    }
}

#[test]
fn shipped_configs_parse() {
    let mut seen = 0;
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let cfg = nlsk::cli::RunConfig::from_file(&path, None).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let stem = path.file_stem().unwrap().to_str().unwrap();
        assert_eq!(cfg.command.to_string(), stem);
        seen += 1;
    }
    assert_eq!(seen, 6);
}
