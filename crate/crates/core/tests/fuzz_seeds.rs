//! Replays the checked-in fuzz seeds through the fuzzed entry points.

use std::path::{Path, PathBuf};

use osl_core::emit::{decode_manifest, from_source};
use osl_core::osl::{lex, parse_osl, to_osl};

fn seeds(target: &str) -> Vec<(PathBuf, Vec<u8>)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            let bytes = std::fs::read(&p).unwrap();
            (p, bytes)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn lex_seeds() {
    for (path, bytes) in seeds("lex_osl") {
        let text = String::from_utf8_lossy(&bytes);
        assert!(lex(&text).is_ok(), "{}", path.display());
    }
}

#[test]
fn parse_seeds_round_trip() {
    for (path, bytes) in seeds("parse_osl") {
        let spec =
            parse_osl(std::str::from_utf8(&bytes).unwrap()).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(parse_osl(&to_osl(&spec)).unwrap(), spec);
    }
}

#[test]
fn manifest_seeds_decode() {
    for (path, bytes) in seeds("decode_manifest") {
        let text = std::str::from_utf8(&bytes).unwrap();
        let name = path.file_name().unwrap().to_string_lossy();
        assert_eq!(decode_manifest(text).is_ok(), name.starts_with("op_"), "{name}");
    }
}

#[test]
fn algorithm_seeds_have_entry_points() {
    for (path, bytes) in seeds("load_algorithm_source") {
        let op = path.file_name().unwrap().to_string_lossy().into_owned();
        let text = String::from_utf8_lossy(&bytes);
        let found = from_source(&text, &op).is_ok() || from_source(&text, "Gemm").is_ok();
        assert!(found, "{op}");
    }
}
