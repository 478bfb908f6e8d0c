use std::path::PathBuf;
use std::process::Command;

use sgcell_core::cli::{load_with_overrides, main_from_args, ConfigArgs};

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn sgcell(args: &[&str]) -> i32 {
    main_from_args(std::iter::once("sgcell").chain(args.iter().copied()))
}

#[test]
fn bundled_configs_validate() {
    for name in ["two_cell.json", "tiny.json"] {
        assert_eq!(sgcell(&["validate", "--config", config(name).to_str().unwrap()]), 0, "{name}");
    }
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(sgcell(&["frobnicate"]), 1);
    assert_eq!(sgcell(&["run"]), 1);
    assert_eq!(sgcell(&["--help"]), 0);
}

#[test]
fn invalid_configuration_exits_with_two() {
    let cfg = config("tiny.json");
    let path = cfg.to_str().unwrap();
    assert_eq!(sgcell(&["validate", "--config", path, "--set", "price_buy=0.5e-9"]), 2);
    assert_eq!(sgcell(&["validate", "--config", path, "--set", "control_v=-1"]), 2);
    assert_eq!(sgcell(&["validate", "--config", "/nonexistent/config.json"]), 2);

    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{ not json").unwrap();
    assert_eq!(sgcell(&["validate", "--config", broken.to_str().unwrap()]), 2);
}

#[test]
fn overrides_apply_before_validation() {
    let args = ConfigArgs {
        config: config("tiny.json"),
        overrides: vec!["control_v=0.25".into(), "num_frames=3".into()],
        seed: Some(42),
    };
    let cfg = load_with_overrides(&args).unwrap();
    assert_eq!(cfg.control_v, 0.25);
    assert_eq!(cfg.num_frames, 3);
    assert_eq!(cfg.rng_seed, 42);
}

#[test]
fn repeated_runs_write_identical_files() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let cfg = config("two_cell.json");
    for d in &dirs {
        let code = sgcell(&[
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--set",
            "num_frames=6",
            "--out",
            d.path().to_str().unwrap(),
            "--dump-slots",
            d.path().join("slots.csv").to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
    }
    for file in ["metrics.csv", "ledger.csv", "decisions.csv", "backlog.csv", "slots.csv"] {
        let a = std::fs::read(dirs[0].path().join(file)).unwrap();
        let b = std::fs::read(dirs[1].path().join(file)).unwrap();
        assert!(!a.is_empty(), "{file} is empty");
        assert_eq!(a, b, "{file} differs between runs");
    }
    let metrics = std::fs::read_to_string(dirs[0].path().join("metrics.csv")).unwrap();
    assert!(metrics.starts_with("V,seed,avg_delay_slots,avg_expenditure_cents_per_frame"));
}

#[test]
fn sweep_writes_one_row_per_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("tiny.json");
    let code = sgcell(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--v-values",
        "0.1,1,10",
        "--replicates",
        "2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 6);
}

#[test]
fn oracle_agrees_on_tiny_config() {
    assert_eq!(sgcell(&["oracle", "--config", config("tiny.json").to_str().unwrap()]), 0);
}

#[test]
fn oracle_rejects_multi_antenna_config() {
    assert_eq!(sgcell(&["oracle", "--config", config("two_cell.json").to_str().unwrap(), "--set", "num_frames=1"]), 1);
}

#[test]
fn binary_reports_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_sgcell");
    let ok = Command::new(bin).args(["validate", "--config"]).arg(config("tiny.json")).status().unwrap();
    assert_eq!(ok.code(), Some(0));
    let bad = Command::new(bin)
        .args(["validate", "--set", "slots_per_frame=0", "--config"])
        .arg(config("tiny.json"))
        .status()
        .unwrap();
    assert_eq!(bad.code(), Some(2));
}
