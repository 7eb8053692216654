//! Parse, validate, plan and emit for a batch of spec files.

use std::fmt::{self, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::emit::{load_algorithm, write_suite, EmitOptions, EmittedSuite};
use crate::gen::{generate_plan, GenWarning, Profile, DEFAULT_COUNT};
use crate::osl::{parse_file, LoadError};
use crate::validate::validate_spec;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliConfig {
    pub spec_paths: Vec<PathBuf>,
    pub alg_path: PathBuf,
    pub out_path: PathBuf,
    pub profile: Profile,
    pub count: usize,
    pub seed: u64,
    pub emit_manifest: bool,
    pub standalone_scripts: bool,
}

impl CliConfig {
    pub fn new(spec_paths: Vec<PathBuf>, alg_path: PathBuf, out_path: PathBuf, profile: Profile) -> CliConfig {
        CliConfig {
            spec_paths,
            alg_path,
            out_path,
            profile,
            count: DEFAULT_COUNT,
            seed: 0,
            emit_manifest: true,
            standalone_scripts: false,
        }
    }
}

/// Stage at which a spec failed; decides the exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    Parse,
    Validation,
    Generation,
    Algorithm,
    Io,
}

impl FailureKind {
    pub fn exit_code(self) -> i32 {
        match self {
            FailureKind::Parse | FailureKind::Validation | FailureKind::Generation => 1,
            FailureKind::Algorithm => 2,
            FailureKind::Io => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub kind: FailureKind,
    pub messages: Vec<String>,
}

impl Failure {
    fn one(kind: FailureKind, message: impl fmt::Display) -> Failure {
        Failure { kind, messages: vec![message.to_string()] }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecReport {
    pub spec_path: PathBuf,
    pub operator: Option<String>,
    pub result: Result<EmittedSuite, Failure>,
    pub warnings: Vec<GenWarning>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunReport {
    pub specs: Vec<SpecReport>,
}

impl RunReport {
    /// 0 when every spec succeeded, otherwise the code of the first failure
    /// in input order.
    pub fn exit_code(&self) -> i32 {
        self.specs.iter().find_map(|s| s.result.as_ref().err()).map_or(0, |f| f.kind.exit_code())
    }

    pub fn cases_emitted(&self) -> usize {
        self.specs.iter().filter_map(|s| s.result.as_ref().ok()).map(|s| s.case_count).sum()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for s in &self.specs {
            let name = s.spec_path.display();
            match &s.result {
                Ok(suite) => {
                    let _ =
                        writeln!(out, "ok    {name}: {} cases -> {}", suite.case_count, suite.script_path.display());
                }
                Err(f) => {
                    let _ = writeln!(out, "error {name} (exit {})", f.kind.exit_code());
                    for m in &f.messages {
                        let _ = writeln!(out, "  {m}");
                    }
                }
            }
            for w in &s.warnings {
                let _ = writeln!(out, "  warning: {w}");
            }
        }
        let ok = self.specs.iter().filter(|s| s.result.is_ok()).count();
        let warnings: usize = self.specs.iter().map(|s| s.warnings.len()).sum();
        let _ = writeln!(
            out,
            "{} of {} operators processed, {} cases emitted, {} warnings",
            ok,
            self.specs.len(),
            self.cases_emitted(),
            warnings
        );
        out
    }
}

fn process(config: &CliConfig, path: &Path) -> SpecReport {
    let mut operator = None;
    let mut warnings = Vec::new();
    let result = (|| {
        let spec = parse_file(path).map_err(|e| match e {
            LoadError::Io { .. } => Failure::one(FailureKind::Io, e),
            LoadError::Parse(e) => Failure::one(FailureKind::Parse, e),
        })?;
        operator = Some(spec.op_name.clone());
        let diagnostics = validate_spec(&spec);
        if !diagnostics.is_empty() {
            return Err(Failure {
                kind: FailureKind::Validation,
                messages: diagnostics.iter().map(|d| format!("{}: {d}", path.display())).collect(),
            });
        }
        let onnx = spec.onnx_op().expect("validated specs name a known operator");
        let alg_file = config.alg_path.join(format!("{onnx}.algorithm"));
        let alg = load_algorithm(&alg_file, onnx).map_err(|e| Failure::one(FailureKind::Algorithm, e))?;
        alg.check_arity(&spec).map_err(|e| Failure::one(FailureKind::Algorithm, e))?;
        let plan = generate_plan(&spec, config.profile, config.count, config.seed)
            .map_err(|e| Failure::one(FailureKind::Generation, format!("{}: {e}", path.display())))?;
        warnings = plan.warnings.clone();
        let options = EmitOptions { manifest: config.emit_manifest, standalone: config.standalone_scripts };
        write_suite(&config.out_path, &spec, &plan, &alg, options)
            .map_err(|e| Failure::one(FailureKind::Io, format!("{}: {e}", config.out_path.display())))
    })();
    SpecReport { spec_path: path.to_path_buf(), operator, result, warnings }
}

/// Processes every spec, in parallel, reporting in input order. A failing
/// spec does not stop the others.
pub fn run(config: &CliConfig) -> RunReport {
    if let Err(e) = std::fs::create_dir_all(&config.out_path) {
        let message = format!("{}: {e}", config.out_path.display());
        return RunReport {
            specs: config
                .spec_paths
                .iter()
                .map(|p| SpecReport {
                    spec_path: p.clone(),
                    operator: None,
                    result: Err(Failure::one(FailureKind::Io, &message)),
                    warnings: Vec::new(),
                })
                .collect(),
        };
    }
    let specs = config.spec_paths.par_iter().map(|p| process(config, p)).collect();
    RunReport { specs }
}
