use std::path::Path;
use std::process::{Command, Output};

fn csiauth(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_csiauth"))
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&csiauth(&["gen"])), 2);
    assert_eq!(code(&csiauth(&["frobnicate"])), 2);
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let two_axes = csiauth(&[
        "gen", "--grid", "test", "--axis", "snr", "--axis", "d", "--out-dir", s(&out),
    ]);
    assert_eq!(code(&two_axes), 2);
    let cell = csiauth(&[
        "gen", "--grid", "cell", "--pairs", "5", "--out", s(&dir.path().join("c.ds")),
    ]);
    assert_eq!(code(&cell), 0);
    let tpr = csiauth(&[
        "eval",
        "--baseline",
        "correlation",
        "--data",
        s(&dir.path().join("c.ds")),
        "--target-tpr",
        "1.5",
    ]);
    assert_eq!(code(&tpr), 2);
}

#[test]
fn missing_or_corrupt_data_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("none.ds");
    assert_eq!(
        code(&csiauth(&["eval", "--baseline", "correlation", "--data", s(&missing)])),
        3
    );
    let ds = dir.path().join("c.ds");
    csiauth(&["gen", "--grid", "cell", "--pairs", "5", "--out", s(&ds)]);
    let bytes = std::fs::read(&ds).unwrap();
    std::fs::write(&ds, &bytes[..bytes.len() - 10]).unwrap();
    let out = csiauth(&["eval", "--baseline", "correlation", "--data", s(&ds)]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("offset"));
}

#[test]
fn single_dataset_eval_prints_summary_and_writes_roc() {
    let dir = tempfile::tempdir().unwrap();
    let ds = dir.path().join("c.ds");
    let roc = dir.path().join("roc.csv");
    let gen = csiauth(&[
        "--seed", "3", "gen", "--grid", "cell", "--model", "D", "--snr-db", "30", "--pairs", "50",
        "--out", s(&ds),
    ]);
    assert_eq!(code(&gen), 0);
    assert!(dir.path().join("c.ds.manifest.json").exists());
    let out = csiauth(&[
        "eval", "--baseline", "correlation", "--data", s(&ds), "--report", s(&roc),
    ]);
    assert_eq!(code(&out), 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("auc=") && stdout.contains("positives=50"));
    let csv = std::fs::read_to_string(&roc).unwrap();
    assert!(csv.starts_with("threshold,fpr,tpr\n"));
    assert!(csv.contains("# auc="));
}

#[test]
fn config_file_supplies_seed_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "seed = 4\nsnr_db = 12\n").unwrap();
    let (a, b, c) = (
        dir.path().join("a.ds"),
        dir.path().join("b.ds"),
        dir.path().join("c.ds"),
    );
    let common = ["gen", "--grid", "cell", "--pairs", "10", "--out"];
    csiauth(&[&["--config", s(&cfg)], &common[..], &[s(&a)]].concat());
    csiauth(&[&["--seed", "4"], &common[..], &[s(&b), "--snr-db", "12"]].concat());
    csiauth(&[&["--config", s(&cfg), "--seed", "5"], &common[..], &[s(&c)]].concat());
    let read = |p: &Path| std::fs::read(p).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));

    std::fs::write(&cfg, "sedd = 4\n").unwrap();
    let bad = csiauth(&[&["--config", s(&cfg)], &common[..], &[s(&a)]].concat());
    assert_eq!(code(&bad), 2);
}
