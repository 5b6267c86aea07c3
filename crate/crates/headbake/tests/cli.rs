use std::path::Path;
use std::process::{Command, Output};
use std::sync::OnceLock;

const BIN: &str = env!("CARGO_BIN_EXE_headbake");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env("HEADBAKE_THREADS", "2").output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const SMALL: [&str; 12] = ["--grid", "40", "--texture", "64", "--spt", "1", "--levels", "3", "--target-faces", "1200", "--expr", "8"];

struct Fixture {
    _dir: tempfile::TempDir,
    bundle: String,
    root: std::path::PathBuf,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let bundle = dir.path().join("s.hbk").display().to_string();
        let mut args = vec!["bake", "sphere-shell", "-o", &bundle];
        args.extend(SMALL);
        let out = run(&args);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        Fixture {
            root: dir.path().to_path_buf(),
            _dir: dir,
            bundle,
        }
    })
}

fn tmp(name: &str) -> String {
    fixture().root.join(name).display().to_string()
}

#[test]
fn bake_is_byte_reproducible() {
    let again = tmp("again.hbk");
    let mut args = vec!["bake", "sphere-shell", "-o", &again];
    args.extend(SMALL);
    assert_eq!(code(&run(&args)), 0);
    assert_eq!(std::fs::read(&fixture().bundle).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn bake_errors_have_distinct_codes() {
    let out = run(&["bake", "teapot", "-o", &tmp("x.hbk")]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("unknown scene"));
    let out = run(&["bake", "constant", "-o", &tmp("x.hbk"), "--grid", "16", "--texture", "16", "--spt", "1"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("no isosurface crossings"));
    let out = run(&["bake", "/nonexistent/dump.hbl", "-o", &tmp("x.hbk")]);
    assert_eq!(code(&out), 2);
    let bad = tmp("bad.hbl");
    std::fs::write(&bad, b"HBLATTIC\x01\0\0\0").unwrap();
    assert_eq!(code(&run(&["bake", &bad, "-o", &tmp("x.hbk")])), 3);
    let cfg = tmp("bad.toml");
    std::fs::write(&cfg, "[bake]\ngird = 3\n").unwrap();
    assert_eq!(code(&run(&["--config", &cfg, "bake", "sphere-shell", "-o", &tmp("x.hbk")])), 2);
    assert_eq!(code(&run(&["bake"])), 2);
}

#[test]
fn render_inline_pose_and_sequence() {
    let f = fixture();
    let dir = tmp("single");
    let out = run(&["render", &f.bundle, "-o", &dir, "--pose", "expr:3=0.5", "--pose", "yaw=15", "--size", "48", "--raw", "true"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(Path::new(&dir).join("frame_0000.png").is_file());
    assert!(Path::new(&dir).join("frame_0000.f32").is_file());

    let seq = tmp("seq.jsonl");
    std::fs::write(&seq, "{\"t\": 0}\n{\"t\": 0.5, \"expression\": [0.2]}\n{\"t\": 1, \"rotations\": {\"jaw\": [0.2, 0, 0]}}\n").unwrap();
    let dir = tmp("seq");
    let out = run(&["render", &f.bundle, "-o", &dir, "--sequence", &seq, "--size", "32"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let mut names: Vec<_> = std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names, ["frame_0000.png", "frame_0001.png", "frame_0002.png"]);
}

#[test]
fn render_dimension_errors() {
    let f = fixture();
    let out = run(&["render", &f.bundle, "-o", &tmp("e"), "--pose", "expr:57=0.5"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("57"), "{}", stderr(&out));
    let seq = tmp("long.jsonl");
    let dense: Vec<String> = (0..20).map(|_| "0.1".into()).collect();
    std::fs::write(&seq, format!("{{\"t\": 0, \"expression\": [{}]}}\n", dense.join(","))).unwrap();
    let out = run(&["render", &f.bundle, "-o", &tmp("e"), "--sequence", &seq]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    let seq = tmp("order.jsonl");
    std::fs::write(&seq, "{\"t\": 1}\n{\"t\": 0}\n").unwrap();
    assert_eq!(code(&run(&["render", &f.bundle, "-o", &tmp("e"), "--sequence", &seq])), 3);
}

#[test]
fn validate_pass_fail_and_mismatch() {
    let f = fixture();
    let scene_flags = ["--levels", "3", "--expr", "8", "--poses", "2", "--size", "64"];
    let mut args = vec!["validate", &f.bundle, "sphere-shell"];
    args.extend(scene_flags);
    let out = run(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));
    let mut strict = args.clone();
    strict.extend(["--max-l1", "0"]);
    assert_eq!(code(&run(&strict)), 4);
    let mut other = args.clone();
    other.extend(["--scene-seed", "9"]);
    let out = run(&other);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("provenance"));
}

#[test]
fn export_web_and_bench() {
    let f = fixture();
    let dir = tmp("web");
    assert_eq!(code(&run(&["export-web", &f.bundle, "-o", &dir])), 0);
    for i in 0..3 {
        assert!(Path::new(&dir).join(format!("layers/layer{i:03}.bin")).is_file());
        assert!(Path::new(&dir).join(format!("layers/atlas{i:03}.png")).is_file());
    }
    let bundle = headbake::bundle_io::load_bundle(&f.bundle).unwrap();
    assert_eq!(headbake::web_export::import_web(&dir).unwrap(), bundle);

    let json = tmp("bench.json");
    let out = run(&["bench", &f.bundle, "--resolutions", "32,64", "--layers", "1,3", "--frames", "2", "--json", &json]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let reports: serde_json::Value = serde_json::from_slice(&std::fs::read(&json).unwrap()).unwrap();
    assert_eq!(reports.as_array().unwrap().len(), 4);
}

#[test]
fn reenact_writes_sequence_and_frames() {
    let f = fixture();
    let dir = tmp("reenact");
    let out = run(&["reenact", &f.bundle, "-o", &dir, "--frames", "3", "--size", "32"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let seq = headbake::sequence::load_sequence(Path::new(&dir).join("sequence.jsonl")).unwrap();
    assert_eq!(seq.frames.len(), 3);
    assert!(Path::new(&dir).join("frame_0002.png").is_file());
}
