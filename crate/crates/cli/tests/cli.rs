use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn oslgen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oslgen")).args(args).output().expect("binary runs")
}

fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn smoke_run_writes_one_script_and_manifest() {
    let out = tempfile::tempdir().unwrap();
    let spec = corpus().join("specs/DepthToSpace.osl");
    let alg = corpus().join("algorithms");
    let o = oslgen(&["-gen-onnx-smoke-tests", s(&spec), "-I", s(&alg), "-o", s(out.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let files = tree(out.path());
    assert_eq!(
        files.keys().collect::<Vec<_>>(),
        ["test_op_depth_to_space.gen.py", "test_op_depth_to_space.manifest.json"]
    );
    let script = String::from_utf8(files["test_op_depth_to_space.gen.py"].clone()).unwrap();
    assert_eq!(script.lines().filter(|l| l.trim_start().starts_with("expect(node")).count(), 200);
    assert!(script.contains("class DepthToSpace(Base):"));
    let manifest: serde_json::Value = serde_json::from_slice(&files["test_op_depth_to_space.manifest.json"]).unwrap();
    assert_eq!(manifest["count"], 200);
    assert_eq!(manifest["profile"], "smoke");
    assert!(String::from_utf8_lossy(&o.stdout).contains("1 of 1 operators processed, 200 cases emitted"));
}

#[test]
fn full_runs_are_reproducible() {
    let alg = corpus().join("algorithms");
    let specs: Vec<PathBuf> =
        ["Add", "Concat", "Gemm"].iter().map(|n| corpus().join(format!("specs/{n}.osl"))).collect();
    let run = || {
        let out = tempfile::tempdir().unwrap();
        let mut args = vec![
            "gen",
            "--profile",
            "full",
            "--count",
            "50",
            "--seed",
            "7",
            "--standalone",
            "-I",
            s(&alg),
            "-o",
            s(out.path()),
        ];
        args.extend(specs.iter().map(|p| s(p)));
        let o = oslgen(&args);
        assert!(o.status.success());
        tree(out.path())
    };
    let first = run();
    assert_eq!(first.len(), 9);
    assert_eq!(first, run());
}

#[test]
fn one_bad_spec_does_not_stop_the_others() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("Bad.osl");
    fs::write(&bad, "def BadTest : Op<\"op_relu\"> { inputs = [ Tensor<index = 0 ]; }").unwrap();
    let out = dir.path().join("out");
    let alg = corpus().join("algorithms");
    let (add, asin) = (corpus().join("specs/Add.osl"), corpus().join("specs/Asin.osl"));
    let o = oslgen(&["gen", "--profile", "smoke", "-I", s(&alg), "-o", s(&out), s(&add), s(&bad), s(&asin)]);
    assert_eq!(o.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("2 of 3 operators processed"), "{stdout}");
    assert_eq!(tree(&out).len(), 4);
}

#[test]
fn missing_algorithm_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let spec = corpus().join("specs/Asin.osl");
    let o = oslgen(&["gen", "--profile", "smoke", "-I", s(dir.path()), "-o", s(&dir.path().join("o")), s(&spec)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_and_check_subcommands() {
    let specs: Vec<PathBuf> = fs::read_dir(corpus().join("specs")).unwrap().map(|e| e.unwrap().path()).collect();
    let mut args = vec!["validate"];
    args.extend(specs.iter().map(|p| s(p)));
    assert!(oslgen(&args).status.success());

    let out = tempfile::tempdir().unwrap();
    let spec = corpus().join("specs/OneHot.osl");
    let alg = corpus().join("algorithms");
    assert!(oslgen(&["gen", "--profile", "full", "--count", "40", "-I", s(&alg), "-o", s(out.path()), s(&spec)])
        .status
        .success());
    let manifest = out.path().join("test_op_one_hot.manifest.json");
    let o = oslgen(&["check", s(&spec), s(&manifest)]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "40 cases, 0 violations");
}
