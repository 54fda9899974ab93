use std::path::Path;
use std::process::{Command, Output};

fn fluxsim(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fluxsim"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("failed to launch fluxsim")
}

fn config() -> &'static str {
    concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/heavy_fluxonium.toml")
}

#[test]
fn spectrum_reports_splitting_and_writes_headers() {
    let dir = tempfile::tempdir().unwrap();
    let out = fluxsim(dir.path(), &["--config", config(), "spectrum", "--flux", "0.5,0.45"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("config sha256"));
    assert!(stdout.contains("13.88"), "{stdout}");
    let csv = std::fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    assert!(csv.starts_with("# tool = fluxsim"));
    assert!(csv.contains("# config_sha256 = "));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 3);
}

#[test]
fn exit_codes_separate_config_and_physics_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "e_c = 0.479\n").unwrap();
    let out = fluxsim(dir.path(), &["--config", bad.to_str().unwrap(), "spectrum"]);
    assert_eq!(out.status.code(), Some(1));

    let out = fluxsim(dir.path(), &["rb", "--noise", "none"]);
    assert_eq!(out.status.code(), Some(1));

    let out = fluxsim(dir.path(), &["--config", config(), "spectrum", "--basis", "5"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn rb_is_reproducible_for_a_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["--seed", "17", "rb", "--noise", "depolarizing", "--sequences", "5", "--lengths", "1,4,16,64"];
    assert!(fluxsim(a.path(), &args).status.success());
    assert!(fluxsim(b.path(), &args).status.success());
    for name in ["rb_raw.csv", "rb.csv", "rb_fit.json"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
}
