use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn omnivi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_omnivi")).args(args).env_remove("OMNIVI_THREADS").output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn repo_file(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

#[test]
fn golden_offline_csv() {
    let cfg = golden("offline_small.toml");
    let out = omnivi(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let expected = std::fs::read_to_string(golden("offline_small.csv")).unwrap();
    assert_eq!(stdout(&out), expected);
}

#[test]
fn run_writes_metrics_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = omnivi(&["run", "--mode", "online", "--K", "12", "--seed", "3", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("Regret(K)"));
    let csv = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    assert!(csv.starts_with("k,value_ucb,nash_value,regret,cum_regret\n"));
    assert_eq!(csv.lines().count(), 13);
    let summary = std::fs::read_to_string(dir.path().join("summary.toml")).unwrap();
    assert!(summary.contains("seed = 3"));
    assert!(summary.contains("config_sha256"));
}

#[test]
fn k_override_drops_later_checkpoints() {
    let cfg = repo_file("configs/offline.toml");
    let out = omnivi(&["run", "--config", cfg.to_str().unwrap(), "--K", "300"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout(&out).lines().count(), 301);
}

#[test]
fn shipped_configs_parse() {
    for entry in std::fs::read_dir(repo_file("configs")).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let out = omnivi(&["run", "--config", path.to_str().unwrap(), "--K", "4"]);
            assert_eq!(code(&out), 0, "{}: {}", path.display(), String::from_utf8_lossy(&out.stderr));
        }
    }
}

#[test]
fn bad_input_exits_2() {
    assert_eq!(code(&omnivi(&["run", "--mode", "sideways"])), 2);
    assert_eq!(code(&omnivi(&["run", "--K", "0"])), 2);
    assert_eq!(code(&omnivi(&["run", "--mode", "offline", "--opponent", "uniform"])), 2);
    assert_eq!(code(&omnivi(&["run", "--mode", "turn_offline"])), 2);
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "mode = \"offline\"\nbogus = 1\n").unwrap();
    assert_eq!(code(&omnivi(&["run", "--config", cfg.to_str().unwrap()])), 2);
}

#[test]
fn invalid_model_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let game = dir.path().join("game.toml");
    std::fs::write(
        &game,
        "format = 1\nd = 1\nH = 1\nS = 1\nA = 1\nfeatures = [[1.0]]\ntheta = [[2.0]]\nmu = [[[1.0]]]\n",
    )
    .unwrap();
    let out = omnivi(&["validate", "--game", game.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    assert!(!stdout(&out).is_empty());
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "mode = \"offline\"\nK = 3\n[game]\nsource = \"file\"\npath = \"game.toml\"\n").unwrap();
    assert_eq!(code(&omnivi(&["run", "--config", cfg.to_str().unwrap()])), 3);
}

#[test]
fn validate_accepts_shipped_game() {
    let game = repo_file("configs/games/pennies.toml");
    let out = omnivi(&["validate", "--game", game.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).trim(), "ok");
}

#[test]
fn io_failures_exit_4() {
    assert_eq!(code(&omnivi(&["run", "--config", "/nonexistent/run.toml"])), 4);
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let out_dir = blocker.join("sub");
    assert_eq!(code(&omnivi(&["run", "--K", "2", "--out", out_dir.to_str().unwrap()])), 4);
}

#[test]
fn demo_instability_prints_and_writes() {
    let dir = tempfile::tempdir().unwrap();
    let out = omnivi(&["demo-instability", "--eps", "0.1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("value gap: 1.100000"));
    assert!(text.contains("pass"));
    let written: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(written.len(), 2);
    assert_eq!(code(&omnivi(&["demo-instability", "--eps", "-1"])), 2);
}

#[test]
fn sweep_matches_single_runs() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_omnivi"))
        .args(["sweep", "--K", "15", "--c", "0.05", "--seeds", "4,9", "--out", dir.path().to_str().unwrap()])
        .env("OMNIVI_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout(&out).lines().count(), 2);
    for seed in ["4", "9"] {
        let single = omnivi(&["run", "--K", "15", "--c", "0.05", "--seed", seed]);
        let swept = std::fs::read_to_string(dir.path().join(format!("seed-{seed}")).join("metrics.csv")).unwrap();
        assert_eq!(stdout(&single), swept);
    }
}

#[test]
fn bad_thread_cap_exits_2() {
    let out = Command::new(env!("CARGO_BIN_EXE_omnivi"))
        .args(["sweep", "--K", "3", "--seeds", "1"])
        .env("OMNIVI_THREADS", "lots")
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}
