use std::path::Path;
use std::process::{Command, Output};

fn piv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_piv"))
        .args(args)
        .env_remove("PIV_THREADS")
        .output()
        .unwrap()
}

fn synth_small(dir: &Path) {
    let out = piv(&[
        "synth",
        "--out",
        dir.to_str().unwrap(),
        "--width",
        "96",
        "--height",
        "96",
        "--seed",
        "3",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn synth_then_analyze_writes_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    synth_small(tmp.path());
    for f in ["frame_a.pgm", "frame_b.pgm", "truth.csv", "piv.toml"] {
        assert!(tmp.path().join(f).exists(), "{f}");
    }
    let cfg = tmp.path().join("piv.toml");
    let out_dir = tmp.path().join("res");
    let out = piv(&[
        "analyze",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(out_dir.join("vectors.csv")).unwrap();
    assert!(csv.lines().count() > 1);
}

#[test]
fn window_larger_than_image_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    synth_small(tmp.path());
    let cfg = tmp.path().join("piv.toml");
    let text = std::fs::read_to_string(&cfg).unwrap();
    let big = tmp.path().join("big.toml");
    let widened: String = text
        .lines()
        .map(|l| {
            if l.starts_with("window = ") {
                "window = 256"
            } else {
                l
            }
        })
        .collect::<Vec<_>>()
        .join("\n");
    std::fs::write(&big, widened).unwrap();
    let out = piv(&["analyze", "--config", big.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid"));
}

#[test]
fn missing_frame_is_an_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    synth_small(tmp.path());
    std::fs::remove_file(tmp.path().join("frame_b.pgm")).unwrap();
    let cfg = tmp.path().join("piv.toml");
    let out = piv(&["analyze", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_flag_exits_with_one() {
    assert_eq!(piv(&["analyze", "--bogus"]).status.code(), Some(1));
}
