use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use osl_core::constraints::check_case;
use osl_core::driver::{run, CliConfig};
use osl_core::emit::decode_manifest;
use osl_core::gen::{Profile, DEFAULT_COUNT};
use osl_core::osl::parse_file;
use osl_core::validate::validate_spec;

/// Generate ONNX operator conformance tests from OSL specifications.
#[derive(Debug, Parser)]
#[command(name = "oslgen", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate test scripts and manifests.
    Gen(GenArgs),
    /// Parse and validate specs without generating anything.
    Validate {
        #[arg(required = true)]
        specs: Vec<PathBuf>,
    },
    /// Re-check every case of an emitted manifest against its spec.
    Check { spec: PathBuf, manifest: PathBuf },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ProfileArg {
    Smoke,
    Full,
}

#[derive(Debug, Args)]
struct GenArgs {
    /// `smoke` fixes attributes across all cases; `full` varies them too.
    #[arg(long, value_enum)]
    profile: Option<ProfileArg>,
    #[arg(long = "gen-onnx-smoke-tests", hide = true, conflicts_with_all = ["profile", "full_alias"])]
    smoke_alias: bool,
    #[arg(long = "gen-onnx-tests", hide = true, conflicts_with = "profile")]
    full_alias: bool,
    /// Directory holding `<Operator>.algorithm` files.
    #[arg(long, short = 'I', value_name = "DIR")]
    alg_path: PathBuf,
    /// Output directory, created when missing.
    #[arg(long, short = 'o', value_name = "DIR")]
    out: PathBuf,
    /// Test cases per operator.
    #[arg(long, default_value_t = DEFAULT_COUNT as u64, value_parser = clap::value_parser!(u64).range(1..))]
    count: u64,
    /// Seed for every random choice; equal seeds give identical output.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also emit numpy-only scripts that run without ONNX.
    #[arg(long)]
    standalone: bool,
    /// Skip the JSON manifest.
    #[arg(long)]
    no_manifest: bool,
    /// `.osl` files, one operator each.
    #[arg(required = true, value_name = "SPEC")]
    specs: Vec<PathBuf>,
}

impl GenArgs {
    fn profile(&self) -> Result<Profile> {
        Ok(match (self.profile, self.smoke_alias, self.full_alias) {
            (Some(ProfileArg::Smoke), ..) | (None, true, _) => Profile::Smoke,
            (Some(ProfileArg::Full), ..) | (None, _, true) => Profile::Full,
            (None, false, false) => bail!("a profile is required: --profile smoke|full"),
        })
    }
}

/// Accepts the single-dash tblgen spelling and the bare
/// `oslgen -gen-onnx-tests ...` form without a subcommand.
fn normalize_args(args: impl IntoIterator<Item = String>) -> Vec<String> {
    let mut out: Vec<String> = args
        .into_iter()
        .map(|a| match a.as_str() {
            "-gen-onnx-smoke-tests" | "-gen-onnx-tests" => format!("-{a}"),
            _ => a,
        })
        .collect();
    let tblgen = |a: &String| a == "--gen-onnx-smoke-tests" || a == "--gen-onnx-tests";
    let has_subcommand = out.get(1).is_some_and(|a| matches!(a.as_str(), "gen" | "validate" | "check" | "help"));
    if !has_subcommand && out.iter().any(tblgen) {
        out.insert(1, "gen".to_string());
    }
    out
}

fn generate(args: GenArgs) -> Result<ExitCode> {
    let profile = args.profile()?;
    let config = CliConfig {
        spec_paths: args.specs,
        alg_path: args.alg_path,
        out_path: args.out,
        profile,
        count: usize::try_from(args.count).context("count does not fit in memory")?,
        seed: args.seed,
        emit_manifest: !args.no_manifest,
        standalone_scripts: args.standalone,
    };
    let report = run(&config);
    print!("{}", report.render());
    Ok(ExitCode::from(report.exit_code() as u8))
}

fn validate(specs: Vec<PathBuf>) -> ExitCode {
    let mut failed = false;
    for path in specs {
        match parse_file(&path) {
            Err(e) => {
                failed = true;
                eprintln!("{e}");
            }
            Ok(spec) => {
                let diagnostics = validate_spec(&spec);
                if diagnostics.is_empty() {
                    println!("ok    {}", path.display());
                }
                for d in diagnostics {
                    failed = true;
                    eprintln!("{}: {d}", path.display());
                }
            }
        }
    }
    if failed {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

fn check(spec: PathBuf, manifest: PathBuf) -> Result<ExitCode> {
    let spec = parse_file(&spec)?;
    let text = std::fs::read_to_string(&manifest).map_err(|e| anyhow!("{}: {e}", manifest.display()))?;
    let manifest = decode_manifest(&text)?;
    let violations: Vec<_> = manifest.cases.iter().flat_map(|c| check_case(&spec, c)).collect();
    for v in &violations {
        eprintln!("{v}");
    }
    println!("{} cases, {} violations", manifest.cases.len(), violations.len());
    Ok(if violations.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn main() -> ExitCode {
    let cli = Cli::parse_from(normalize_args(std::env::args()));
    let result = match cli.command {
        Command::Gen(args) => generate(args),
        Command::Validate { specs } => Ok(validate(specs)),
        Command::Check { spec, manifest } => check(spec, manifest),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(1)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn tblgen_spelling_becomes_gen() {
        let a = normalize_args(args(&["oslgen", "-gen-onnx-smoke-tests", "x.osl", "-I", "alg", "-o", "out"]));
        assert_eq!(a, args(&["oslgen", "gen", "--gen-onnx-smoke-tests", "x.osl", "-I", "alg", "-o", "out"]));
        let cli = Cli::try_parse_from(a).unwrap();
        let Command::Gen(g) = cli.command else { panic!() };
        assert_eq!(g.profile().unwrap(), Profile::Smoke);
        assert_eq!(g.count, 200);
    }

    #[test]
    fn profile_is_required() {
        let cli = Cli::try_parse_from(args(&["oslgen", "gen", "--alg-path", "a", "--out", "o", "x.osl"])).unwrap();
        let Command::Gen(g) = cli.command else { panic!() };
        assert!(g.profile().is_err());
        assert!(Cli::try_parse_from(args(&[
            "oslgen",
            "gen",
            "--profile",
            "full",
            "-I",
            "a",
            "-o",
            "o",
            "--count",
            "0",
            "x.osl"
        ]))
        .is_err());
    }
}
