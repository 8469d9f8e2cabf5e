use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use chrono::{NaiveDate, TimeZone, Utc};
use hine_core::{Catalogs, Category, PatientInfo};
use hine_gateway::AppState;
use hine_imaging::{codec, RasterImage};

fn hine(data_dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hine"))
        .env_remove("HINE_DATA_DIR")
        .arg("--data-dir")
        .arg(data_dir)
        .args(args)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn populate(dir: &Path) {
    let state = AppState::open(dir, Catalogs::bundled(), 4096).unwrap();
    let r = &state.records;
    let p = r
        .register_patient(PatientInfo {
            name: "Infant B".into(),
            date_of_birth: NaiveDate::from_ymd_opt(2025, 1, 1).unwrap(),
            mother_name: "Mother B".into(),
            father_name: "Father B".into(),
            gestational_week_at_birth: 36,
            corrected_age_at_registration: -4,
            birth_weight: 2500,
            discharge_diagnosis: "jaundice".into(),
        })
        .unwrap();
    let s = r
        .start_session(
            &p.id,
            Category::Neonatal,
            Utc.with_ymd_and_hms(2025, 1, 29, 9, 0, 0).unwrap(),
        )
        .unwrap();
    r.record_item(
        &s.id,
        "posture",
        "posture.2",
        &[],
        Some("settled".into()),
        None,
    )
    .unwrap();
    r.close_session(&s.id, None).unwrap();
}

#[test]
fn gen_scene_then_skeletonize() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = hine(
        dir.path(),
        &[
            "gen-scene",
            "--seed",
            "9",
            "--out-dir",
            out.to_str().unwrap(),
            "--name",
            "fig",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let truth = std::fs::read_to_string(out.join("fig.gt.txt")).unwrap();
    assert!(truth.lines().count() > 100);

    let frame = out.join("fig.ppm");
    let o = hine(
        dir.path(),
        &[
            "skeletonize",
            frame.to_str().unwrap(),
            "--out-dir",
            out.to_str().unwrap(),
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("fig.skel.pgm").exists());
    assert!(!out.join("fig.seg.ppm").exists());

    let o = hine(
        dir.path(),
        &[
            "skeletonize",
            frame.to_str().unwrap(),
            "--out-dir",
            out.to_str().unwrap(),
            "--stages",
        ],
    );
    assert!(o.status.success());
    for suffix in [".seg.ppm", ".merged.ppm", ".mask.pgm", ".skel.pgm"] {
        assert!(out.join(format!("fig{suffix}")).exists(), "{suffix}");
    }
    let skel = codec::decode_mask(&std::fs::read(out.join("fig.skel.pgm")).unwrap()).unwrap();
    let mask = codec::decode_mask(&std::fs::read(out.join("fig.mask.pgm")).unwrap()).unwrap();
    assert!(skel.is_subset_of(&mask));
}

#[test]
fn skeletonize_failures_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let white = dir.path().join("white.ppm");
    std::fs::write(
        &white,
        codec::encode_ppm(&RasterImage::filled(20, 20, [255, 255, 255])),
    )
    .unwrap();
    let o = hine(
        dir.path(),
        &["skeletonize", white.to_str().unwrap(), "--out-dir", "x"],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("NoForeground: "), "{}", stderr(&o));

    let o = hine(
        dir.path(),
        &["skeletonize", "/no/such/file.ppm", "--out-dir", "x"],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("IoError: "));

    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"hue_bins": 0}"#).unwrap();
    let o = hine(
        dir.path(),
        &[
            "skeletonize",
            white.to_str().unwrap(),
            "--out-dir",
            "x",
            "--config",
            cfg.to_str().unwrap(),
        ],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("ValidationError: "));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        hine(dir.path(), &["serve", "--bogus"]).status.code(),
        Some(2)
    );
    assert_eq!(hine(dir.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        hine(dir.path(), &["gen-scene", "--seed", "x", "--out-dir", "o"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn catalog_validation() {
    let dir = tempfile::tempdir().unwrap();
    let good = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../core/catalogs/neonatal.json"
    );
    let o = hine(dir.path(), &["catalog", "validate", good]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("10 items"));

    let mut doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(good).unwrap()).unwrap();
    let templates = doc["items"][0]["templates"].as_array_mut().unwrap();
    while templates.len() < 6 {
        let n = templates.len();
        templates
            .push(serde_json::json!({"id": format!("posture.{n}"), "label": "extra", "score": n}));
    }
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, serde_json::to_string(&doc).unwrap()).unwrap();
    let o = hine(dir.path(), &["catalog", "validate", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr(&o).starts_with("ValidationError: "),
        "{}",
        stderr(&o)
    );
    assert!(stderr(&o).contains("6"));
}

#[test]
fn export_import_round_trip() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    populate(a.path());
    let first = a.path().join("first.json");
    let o = hine(a.path(), &["export", first.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));

    let o = hine(b.path(), &["import", first.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = hine(b.path(), &["export", "-"]);
    assert!(o.status.success());
    assert_eq!(o.stdout, std::fs::read(&first).unwrap());

    let o = hine(b.path(), &["import", first.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("Conflict: "));
}

#[test]
fn data_dir_flag_beats_environment() {
    let env_dir = tempfile::tempdir().unwrap();
    let flag_dir = tempfile::tempdir().unwrap();
    populate(env_dir.path());

    let from_env = Command::new(env!("CARGO_BIN_EXE_hine"))
        .env("HINE_DATA_DIR", env_dir.path())
        .args(["export", "-"])
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&from_env.stdout).contains("Infant B"));

    let from_flag = Command::new(env!("CARGO_BIN_EXE_hine"))
        .env("HINE_DATA_DIR", env_dir.path())
        .arg("--data-dir")
        .arg(flag_dir.path())
        .args(["export", "-"])
        .output()
        .unwrap();
    assert!(from_flag.status.success());
    assert!(!String::from_utf8_lossy(&from_flag.stdout).contains("Infant B"));
}

fn http_get(addr: &str, path: &str) -> String {
    let mut s = TcpStream::connect(addr).unwrap();
    write!(
        s,
        "GET {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n"
    )
    .unwrap();
    let mut out = String::new();
    s.read_to_string(&mut out).unwrap();
    out
}

#[cfg(unix)]
#[test]
fn serve_answers_and_stops_on_sigterm() {
    let dir = tempfile::tempdir().unwrap();
    let mut child = Command::new(env!("CARGO_BIN_EXE_hine"))
        .arg("--data-dir")
        .arg(dir.path())
        .args(["serve", "--bind", "127.0.0.1:0"])
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap())
        .read_line(&mut line)
        .unwrap();
    let addr = line
        .trim()
        .strip_prefix("listening on http://")
        .unwrap()
        .to_string();

    let reply = http_get(&addr, "/health");
    assert!(reply.starts_with("HTTP/1.1 200"), "{reply}");
    assert!(reply.contains("\"status\":\"ok\""));

    // the store is locked while the server holds it
    let second = hine(dir.path(), &["serve", "--bind", "127.0.0.1:0"]);
    assert_eq!(second.status.code(), Some(1));
    assert!(
        stderr(&second).starts_with("StartupError: "),
        "{}",
        stderr(&second)
    );

    Command::new("kill")
        .arg("-TERM")
        .arg(child.id().to_string())
        .status()
        .unwrap();
    let status = child.wait().unwrap();
    assert!(status.success(), "{status:?}");
}
