//! End-to-end runs of the `lcge` binary.

use std::path::Path;
use std::process::{Command, Output};

use lcge::image::{read_png, write_png};
use lcge::pipeline::make_low_res;

fn lcge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lcge"))
        .args(args)
        .env("RAYON_NUM_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = lcge(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const QUICK: [&str; 4] = ["--set", "epochs=1", "--set", "search_radius=4"];

#[test]
fn train_build_and_hallucinate() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let (models, dbs) = (dir.path().join("models"), dir.path().join("dbs"));
    ok(&["synth", "--out", s(&data), "--train", "2", "--test", "1", "--width", "96", "--height", "72"]);
    let manifest = data.join("manifest.txt");
    ok(&[&QUICK[..], &["train", "--manifest", s(&manifest), "--out", s(&models)]].concat());
    assert!(models.join("eyes.cnn").exists());
    ok(&[&QUICK[..], &["build-db", "--manifest", s(&manifest), "--models", s(&models), "--out", s(&dbs)]].concat());
    assert!(dbs.join("mouth.pdb").exists());

    let hr = read_png(data.join("subject_002.png")).unwrap();
    let lr_path = dir.path().join("lr.png");
    write_png(&lr_path, &make_low_res(&hr, 4).unwrap()).unwrap();
    let out = dir.path().join("hr.png");
    ok(&[
        &QUICK[..],
        &[
            "hallucinate",
            "--in",
            s(&lr_path),
            "--landmarks",
            s(&data.join("subject_002.txt")),
            "--models",
            s(&models),
            "--db",
            s(&dbs),
            "--out",
            s(&out),
        ],
    ]
    .concat());
    let img = read_png(&out).unwrap();
    assert_eq!((img.width(), img.height()), (96, 72));
}

#[test]
fn evaluate_writes_csv_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    ok(&["synth", "--out", s(&data), "--train", "1", "--test", "1", "--width", "80", "--height", "64"]);
    let (csv, table) = (dir.path().join("report.csv"), dir.path().join("report.txt"));
    let stdout = ok(&[
        &QUICK[..],
        &[
            "evaluate",
            "--manifest",
            s(&data.join("manifest.txt")),
            "--out",
            s(&csv),
            "--table",
            s(&table),
        ],
    ]
    .concat());
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("id,method,psnr,ssim"));
    // only the test face is scored, once per method
    assert_eq!(lines.count(), 3);
    assert_eq!(std::fs::read_to_string(&table).unwrap(), stdout);
}

#[test]
fn missing_landmark_file_exits_one_naming_it() {
    let dir = tempfile::tempdir().unwrap();
    let lr = dir.path().join("lr.png");
    write_png(&lr, &lcge::ColorImage::from_gray(lcge::ImagePlane::filled(20, 16, 0.5))).unwrap();
    let missing = dir.path().join("nowhere.txt");
    let out = lcge(&[
        "hallucinate",
        "--in",
        s(&lr),
        "--landmarks",
        s(&missing),
        "--models",
        s(dir.path()),
        "--db",
        s(dir.path()),
        "--out",
        s(&dir.path().join("o.png")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains(s(&missing)));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(lcge(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(lcge(&["evaluate", "--bogus"]).status.code(), Some(2));
    let out = lcge(&["--set", "nonsense=1", "synth", "--out", "/nonexistent/x"]);
    assert_eq!(out.status.code(), Some(1));
}
