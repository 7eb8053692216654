//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use osl_core::constraints::check_case;
use osl_core::emit::{decode_manifest, emit_manifest, emit_script, load_algorithm, AlgorithmFile};
use osl_core::gen::{applicable_boundaries, boundary_holds, generate_plan, Profile, BOUNDARY_PERIOD};
use osl_core::model::{BoundaryCategory, DataType, OperatorSpec, TensorIndex, TensorSpec};
use osl_core::osl::{parse_file, parse_osl};
use osl_core::rng::RandomSource;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn bundled() -> Vec<(String, OperatorSpec)> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(corpus().join("specs"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "osl"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| (p.file_stem().unwrap().to_string_lossy().into_owned(), parse_file(&p).unwrap()))
        .collect()
}

fn algorithm(spec: &OperatorSpec) -> AlgorithmFile {
    let op = spec.onnx_op().unwrap();
    load_algorithm(&corpus().join(format!("algorithms/{op}.algorithm")), op).unwrap()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn depth_to_space() -> Outcome {
    let start = Instant::now();
    let spec = parse_file(&corpus().join("specs/DepthToSpace.osl")).map_err(|e| e.to_string())?;
    let plan = generate_plan(&spec, Profile::Smoke, 200, 0).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(plan.cases.len() == 200, || format!("{} cases", plan.cases.len()))?;
    let blocksizes: BTreeSet<i64> =
        plan.cases.iter().map(|c| c.attributes["blocksize"].scalar_i64().unwrap()).collect();
    ensure(blocksizes.len() == 1, || format!("blocksize varies: {blocksizes:?}"))?;
    let b = *blocksizes.first().unwrap();
    ensure((1..=4).contains(&b), || format!("blocksize {b}"))?;
    for c in &plan.cases {
        let x = &c.inputs[0];
        ensure(x.shape.len() == 4, || format!("{}: rank {}", c.name, x.shape.len()))?;
        ensure(x.shape[1] % (b * b) as usize == 0, || format!("{}: C={} b={b}", c.name, x.shape[1]))?;
    }
    ensure(elapsed < Duration::from_secs(5), || format!("took {elapsed:?}"))?;
    Ok(format!("200 cases, rank 4, blocksize {b}, {elapsed:.2?}"))
}

fn allocation() -> Outcome {
    let spec = OperatorSpec {
        op_name: "PairTest".into(),
        op_code: "op_add".into(),
        type_tied: false,
        attributes: vec![],
        inputs: vec![
            TensorSpec::new(TensorIndex::Position(0), vec![DataType::F32, DataType::F64]),
            TensorSpec::new(TensorIndex::Position(1), vec![DataType::I32, DataType::I64, DataType::U8]),
        ],
        outputs: vec![],
        properties: BTreeSet::new(),
    };
    let tally = |count| -> Result<BTreeMap<Vec<DataType>, usize>, String> {
        let plan = generate_plan(&spec, Profile::Full, count, 0).map_err(|e| e.to_string())?;
        let mut t = BTreeMap::new();
        for c in &plan.cases {
            *t.entry(c.inputs.iter().map(|i| i.dtype).collect()).or_insert(0) += 1;
        }
        Ok(t)
    };
    let sixty = tally(60)?;
    ensure(sixty.len() == 6 && sixty.values().all(|&n| n == 10), || format!("count 60: {sixty:?}"))?;
    let two_hundred = tally(200)?;
    let mut counts: Vec<usize> = two_hundred.values().copied().collect();
    counts.sort_unstable();
    ensure(two_hundred.len() == 6 && counts == [33, 33, 33, 33, 34, 34], || format!("count 200: {two_hundred:?}"))?;
    let first_two = [vec![DataType::F32, DataType::I32], vec![DataType::F32, DataType::I64]];
    ensure(first_two.iter().all(|k| two_hundred[k] == 34), || format!("remainder placement: {two_hundred:?}"))?;
    Ok("60 -> 6x10, 200 -> 4x33 + 2x34".into())
}

fn rank_quota() -> Outcome {
    let mut t = TensorSpec::new(TensorIndex::Position(0), vec![DataType::F32]);
    (t.min_dim, t.max_dim) = (1, 4);
    let spec = OperatorSpec {
        op_name: "RankTest".into(),
        op_code: "op_relu".into(),
        type_tied: false,
        attributes: vec![],
        inputs: vec![t],
        outputs: vec![],
        properties: BTreeSet::new(),
    };
    let count = 200;
    let quota = count / 4;
    let slack = count / BOUNDARY_PERIOD;
    let mut summary = Vec::new();
    for profile in [Profile::Smoke, Profile::Full] {
        let plan = generate_plan(&spec, profile, count, 0).map_err(|e| e.to_string())?;
        let mut occ = BTreeMap::new();
        for c in &plan.cases {
            *occ.entry(c.inputs[0].shape.len()).or_insert(0usize) += 1;
        }
        for r in 1..=4 {
            let n = occ.get(&r).copied().unwrap_or(0);
            ensure(n + slack >= quota, || {
                format!("{profile}: rank {r} occurs {n} times, quota {quota} slack {slack}")
            })?;
        }
        summary.push(format!("{profile} {:?}", occ.values().collect::<Vec<_>>()));
    }
    Ok(summary.join(", "))
}

fn boundary_coverage() -> Outcome {
    let mut checked = 0;
    for (name, spec) in bundled() {
        for profile in [Profile::Smoke, Profile::Full] {
            let plan = generate_plan(&spec, profile, 200, 0).map_err(|e| format!("{name}: {e}"))?;
            let hit: BTreeSet<BoundaryCategory> = plan.cases.iter().filter_map(|c| c.boundary).collect();
            for cat in applicable_boundaries(&spec, profile) {
                ensure(hit.contains(&cat), || format!("{name} {profile}: no {cat:?} case"))?;
            }
            for c in &plan.cases {
                if let Some(cat) = c.boundary {
                    ensure(boundary_holds(&spec, c, cat), || {
                        format!("{name}: {} labelled {cat:?} but does not hold", c.name)
                    })?;
                }
            }
            if spec.properties.iter().any(|p| p.is_broadcast()) {
                ensure(hit.contains(&BoundaryCategory::DimLengthOne), || {
                    format!("{name}: broadcast op without DimLengthOne")
                })?;
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} spec/profile pairs"))
}

fn determinism() -> Outcome {
    for (name, spec) in bundled() {
        let alg = algorithm(&spec);
        let run = |seed| {
            let plan = generate_plan(&spec, Profile::Full, 200, seed).unwrap();
            (emit_script(&spec, &plan, &alg), emit_manifest(&spec, &plan))
        };
        let (a, b) = (run(11), run(11));
        ensure(a == b, || format!("{name}: identical inputs gave different bytes"))?;
        ensure(a.1 != run(12).1, || format!("{name}: seeds 11 and 12 gave the same manifest"))?;
    }
    Ok("10 specs, byte-identical reruns, seeds distinguish".into())
}

const FRAGMENTS: &[&str] = &[
    "def",
    "Op<",
    ">",
    "{",
    "}",
    "[",
    "]",
    "<",
    ",",
    ";",
    "=",
    "\"",
    "-1",
    "0",
    "1e9",
    "99999999999999999999",
    "Tensor<",
    "Attr<",
    "inputs",
    "outputs",
    "attributes",
    "type_tied",
    "true",
    "//",
    "/*",
    "*/",
    "\\",
    "\n",
    "min_dim",
    "max_dim",
    "f32",
    "i64_v1",
    "é",
    "\u{0}",
];

fn mutate(base: &str, rng: &mut RandomSource) -> String {
    let mut chars: Vec<char> = base.chars().collect();
    for _ in 0..rng.range_usize(1, 8) {
        let len = chars.len();
        let at = rng.range_usize(0, len);
        match rng.below(5) {
            0 if len > 0 => {
                let end = (at + rng.range_usize(1, 16)).min(len);
                chars.drain(at.min(end)..end);
            }
            1 => {
                let frag = FRAGMENTS[rng.index(FRAGMENTS.len())];
                chars.splice(at..at, frag.chars());
            }
            2 if len > 0 => {
                let from = rng.index(len);
                let span: Vec<char> = chars[from..(from + rng.range_usize(1, 24)).min(len)].to_vec();
                chars.splice(at..at, span);
            }
            3 if len > 0 => chars[at.min(len - 1)] = char::from(rng.below(128) as u8),
            _ => chars.truncate(at),
        }
    }
    chars.into_iter().collect()
}

fn parser_robustness() -> Outcome {
    let bases: Vec<String> = std::fs::read_dir(corpus().join("specs"))
        .unwrap()
        .map(|e| std::fs::read_to_string(e.unwrap().path()).unwrap())
        .collect();
    let mut rng = RandomSource::new(0x05e1);
    let start = Instant::now();
    let (mut rejected, mut accepted, mut crashes) = (0, 0, Vec::new());
    let hook = std::panic::take_hook();
    std::panic::set_hook(Box::new(|_| {}));
    for k in 0..10_000 {
        let input = mutate(&bases[k % bases.len()], &mut rng);
        match catch_unwind(AssertUnwindSafe(|| parse_osl(&input).map(drop))) {
            Ok(Ok(())) => accepted += 1,
            Ok(Err(_)) => rejected += 1,
            Err(_) => crashes.push(k),
        }
    }
    std::panic::set_hook(hook);
    let elapsed = start.elapsed();
    ensure(crashes.is_empty(), || format!("{} panics, first at input {}", crashes.len(), crashes[0]))?;
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!("{rejected} ParseError, {accepted} accepted, 0 panics, {elapsed:.2?}"))
}

fn validity() -> Outcome {
    let mut cases = 0;
    for (name, spec) in bundled() {
        for profile in [Profile::Smoke, Profile::Full] {
            let plan = generate_plan(&spec, profile, 200, 0).map_err(|e| format!("{name}: {e}"))?;
            let manifest = decode_manifest(&emit_manifest(&spec, &plan)).map_err(|e| format!("{name}: {e}"))?;
            ensure(manifest.cases.len() == 200, || format!("{name}: {} cases", manifest.cases.len()))?;
            for c in &manifest.cases {
                let v = check_case(&spec, c);
                ensure(v.is_empty(), || format!("{name} {profile}: {}", v[0]))?;
            }
            cases += manifest.cases.len();
        }
    }
    Ok(format!("{cases} cases, 0 violations"))
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("depth_to_space_end_to_end", depth_to_space),
        ("type_combination_allocation", allocation),
        ("rank_quota", rank_quota),
        ("boundary_coverage", boundary_coverage),
        ("determinism", determinism),
        ("parser_robustness", parser_robustness),
        ("manifest_validity", validity),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
