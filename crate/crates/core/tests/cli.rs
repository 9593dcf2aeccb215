use std::path::Path;
use std::process::{Command, Output};

fn rose(args: &[&str], dir: &Path) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_rose"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn gen_run_fit_bdrate() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    rose(
        &[
            "gen",
            "--width",
            "64",
            "--height",
            "64",
            "--seed",
            "3",
            "--blob-count",
            "4",
        ],
        d,
    );
    assert!(d.join("frame.pgm").exists() && d.join("mask.pgm").exists());

    rose(
        &[
            "run",
            "--frame",
            "frame.pgm",
            "--mask",
            "mask.pgm",
            "--qp",
            "22,27,32,37",
            "--block-size",
            "8",
            "--out",
            "stats.csv",
            "--samples-out",
            "samples.csv",
        ],
        d,
    );
    let stats = std::fs::read_to_string(d.join("stats.csv")).unwrap();
    assert!(stats.starts_with(
        "frame,method,qp,block_size,blocks,mixed_blocks,bits_est,masked_sse,psnr_occupied"
    ));
    assert_eq!(stats.lines().count(), 1 + 4 * 5);

    let fit = rose(
        &[
            "fit",
            "--samples",
            "samples.csv",
            "--model",
            "stat",
            "--out",
            "stat.json",
        ],
        d,
    );
    assert!(String::from_utf8_lossy(&fit.stderr).contains("mean relative error"));
    let json = std::fs::read_to_string(d.join("stat.json")).unwrap();
    assert!(json.contains("\"model_kind\": \"stat\""));

    rose(
        &[
            "run",
            "--frame",
            "frame.pgm",
            "--mask",
            "mask.pgm",
            "--qp",
            "22,27,32,37",
            "--block-size",
            "8",
            "--method",
            "ROSES",
            "--rate-model-params",
            "stat.json",
            "--out",
            "roses.csv",
        ],
        d,
    );
    let bd = rose(
        &[
            "bdrate",
            "--anchor",
            "stats.csv",
            "--anchor-method",
            "REF",
            "--test",
            "roses.csv",
        ],
        d,
    );
    let text = String::from_utf8_lossy(&bd.stdout);
    let value: f64 = text.trim().trim_end_matches('%').trim().parse().unwrap();
    assert!(value < 0.0, "{text}");
}

#[test]
fn block_debug_prints_costs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("s.csv"),
        "10,12,14,16\n11,13,15,17\n12,14,16,60\n13,15,60,60\n",
    )
    .unwrap();
    std::fs::write(d.join("m.csv"), "1,1,1,1\n1,1,1,1\n1,1,1,0\n1,1,0,0\n").unwrap();
    let out = rose(
        &["block", "--input", "s.csv", "--mask", "m.csv", "--qp", "22"],
        d,
    );
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("DCT_4"));
    assert!(text.contains("S~ (ROSES"));
    for m in ["REF", "RM", "OD", "ROSEL", "ROSES"] {
        assert!(text.lines().any(|l| l.starts_with(m)), "{m} missing");
    }
}

#[test]
fn errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_rose"))
        .args(["run", "--frame", "missing.pgm", "--mask", "missing.pgm"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    let out = Command::new(env!("CARGO_BIN_EXE_rose"))
        .args(["block", "--input", "x.csv", "--qp", "99"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
}
