use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn dsc(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dsc")).args(args).env("DSC_OUTPUT_DIR", out).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn run_writes_into_override_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("rod");
    let o = dsc(&["run", scenarios().join("rod.toml").to_str().unwrap()], &out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("done:"));
    for f in ["config.toml", "probes.csv", "fields_0000.vtk"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
}

#[test]
fn schema_errors_exit_with_config_code() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "bad.toml",
        "[mesh]\ngenerator = \"box\"\ncells = [2, 2, 1]\nlengths = [1, 1, 1]\n[fluid]\nalpha = 1\n[run]\nt_end = 1\n",
    );
    let o = dsc(&["run", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("fluid.rho_inf") && err.contains("fluid.mu"), "{err}");
}

#[test]
fn missing_config_file_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = dsc(&["run", tmp.path().join("nope.toml").to_str().unwrap()], tmp.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn unknown_patch_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenarios().join("rod.toml")).unwrap().replace("\"xmax\"", "\"east\"");
    let cfg = write(tmp.path(), "rod.toml", &text);
    let o = dsc(&["run", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("east"));
}

#[test]
fn solver_blow_up_is_a_run_error() {
    let tmp = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenarios().join("rod.toml"))
        .unwrap()
        .replace("tau = \"auto\"", "tau = 1.0")
        .replace("t_end = 0.05", "t_end = 2000.0");
    let cfg = write(tmp.path(), "rod.toml", &text);
    let o = dsc(&["run", cfg.to_str().unwrap()], &tmp.path().join("out"));
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stderr).contains("non-finite"));
}

#[test]
fn mesh_gen_then_check_mesh() {
    let tmp = tempfile::tempdir().unwrap();
    let o = dsc(&["mesh-gen", scenarios().join("annulus.toml").to_str().unwrap()], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mesh = tmp.path().join("mesh.txt");
    let o = dsc(&["check-mesh", mesh.to_str().unwrap()], tmp.path());
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("findings: 0"));
}

#[test]
fn check_mesh_flags_bad_cells_and_bad_files() {
    let tmp = tempfile::tempdir().unwrap();
    // second cell has its +x corners on the shared face
    let flat = "VERTICES 12\n\
        0 0 0\n1 0 0\n0 1 0\n1 1 0\n0 0 1\n1 0 1\n0 1 1\n1 1 1\n1 0 0\n1 1 0\n1 0 1\n1 1 1\n\
        CELLS 2\n0 1 2 3 4 5 6 7\n1 8 3 9 5 10 7 11\nBOUNDARY 0\n";
    let mesh = write(tmp.path(), "flat.txt", flat);
    let o = dsc(&["check-mesh", mesh.to_str().unwrap()], tmp.path());
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("cell 1"));
    let garbage = write(tmp.path(), "garbage.txt", "VERTICES two\n");
    assert_eq!(code(&dsc(&["check-mesh", garbage.to_str().unwrap()], tmp.path())), 2);
}

#[test]
fn validate_geometry_suite_and_injected_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let o = dsc(&["validate", "geometry"], tmp.path());
    assert_eq!(code(&o), 0);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 2, "{stdout}");
    let o = dsc(&["validate", "1", "--inject-sign-error"], tmp.path());
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("FAIL 1 geometry-exactness"));
    assert_eq!(code(&dsc(&["validate", "bogus"], tmp.path())), 2);
}

#[test]
fn bad_usage_exits_with_config_code() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&dsc(&["frobnicate"], tmp.path())), 2);
}
