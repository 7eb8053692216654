//! Materializes a test plan as files: the ONNX-style script, the optional
//! standalone script, and the JSON manifest.

pub mod algorithm;
pub mod manifest;
pub mod script;

use std::path::{Path, PathBuf};

use crate::gen::TestPlan;
use crate::model::OperatorSpec;

pub use algorithm::{from_source, load_algorithm, AlgorithmError, AlgorithmFile};
pub use manifest::{decode_manifest, emit_manifest, Manifest, ManifestError, SCHEMA_VERSION};
pub use script::{emit_script, emit_standalone, ATOL, RTOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmitOptions {
    pub manifest: bool,
    pub standalone: bool,
}

impl Default for EmitOptions {
    fn default() -> Self {
        EmitOptions { manifest: true, standalone: false }
    }
}

/// Files written for one operator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmittedSuite {
    pub script_path: PathBuf,
    pub standalone_path: Option<PathBuf>,
    pub manifest_path: Option<PathBuf>,
    pub case_count: usize,
    pub seed: u64,
}

/// File stem shared by a suite's files: `test_<op_code>`.
pub fn suite_stem(spec: &OperatorSpec) -> String {
    let code: String =
        spec.op_code.chars().map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' }).collect();
    format!("test_{code}")
}

/// Writes the suite for `plan` into `out_dir`, which must exist.
pub fn write_suite(
    out_dir: &Path,
    spec: &OperatorSpec,
    plan: &TestPlan,
    alg: &AlgorithmFile,
    options: EmitOptions,
) -> std::io::Result<EmittedSuite> {
    let stem = suite_stem(spec);
    let script_path = out_dir.join(format!("{stem}.gen.py"));
    std::fs::write(&script_path, emit_script(spec, plan, alg))?;
    let standalone_path = if options.standalone {
        let p = out_dir.join(format!("{stem}.standalone.py"));
        std::fs::write(&p, emit_standalone(spec, plan, alg))?;
        Some(p)
    } else {
        None
    };
    let manifest_path = if options.manifest {
        let p = out_dir.join(format!("{stem}.manifest.json"));
        std::fs::write(&p, emit_manifest(spec, plan))?;
        Some(p)
    } else {
        None
    };
    Ok(EmittedSuite { script_path, standalone_path, manifest_path, case_count: plan.cases.len(), seed: plan.seed })
}
