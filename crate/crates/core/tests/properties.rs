use std::collections::BTreeSet;
use std::path::Path;

use proptest::prelude::*;

use osl_core::constraints::{apply_corner_case, multidirectional_broadcast_shape, CandidateAssignment};
use osl_core::emit::{decode_manifest, emit_manifest, emit_script, from_source};
use osl_core::gen::{generate_plan, Profile};
use osl_core::model::{
    AttrType, AttributeSpec, DataType, ImplicitProperty, OperatorSpec, TensorIndex, TensorSpec, ValueRange, ValueRanges,
};
use osl_core::osl::{parse_file, parse_osl, to_osl};
use osl_core::rng::RandomSource;

fn corpus_spec(name: &str) -> OperatorSpec {
    parse_file(&Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("../../corpus/specs/{name}.osl"))).unwrap()
}

const CORPUS: [&str; 10] =
    ["Add", "Asin", "Concat", "DepthToSpace", "Div", "Gemm", "MatMul", "OneHot", "Split", "Squeeze"];

fn dtype() -> impl Strategy<Value = DataType> {
    prop::sample::select(DataType::ALL.to_vec())
}

fn number() -> impl Strategy<Value = f64> {
    prop_oneof![(-1000i64..1000).prop_map(|v| v as f64), -1e6f64..1e6]
}

fn ranges() -> impl Strategy<Value = Option<ValueRanges>> {
    prop::option::of(prop::collection::vec((number(), number()), 1..3).prop_map(|pairs| {
        let rs = pairs.into_iter().map(|(a, b)| ValueRange::new(a.min(b), a.max(b)).unwrap()).collect();
        ValueRanges::new(rs).unwrap()
    }))
}

fn ident() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9_]{0,8}"
}

fn attribute() -> impl Strategy<Value = AttributeSpec> {
    (ident(), prop::collection::vec((dtype(), any::<bool>()), 1..3), prop::option::of("[ -~]{0,6}"), ranges()).prop_map(
        |(name, types, default_value, value_ranges)| AttributeSpec {
            name,
            types: types.into_iter().map(|(d, v)| if v { AttrType::vector(d) } else { AttrType::scalar(d) }).collect(),
            default_value,
            value_ranges,
        },
    )
}

fn tensor(index: TensorIndex) -> impl Strategy<Value = TensorSpec> {
    (prop::collection::vec(dtype(), 1..4), 0usize..5, 0usize..4, ranges(), any::<[bool; 3]>()).prop_map(
        move |(types, lo, span, value_ranges, [axis_bound, optional, normal_distribution])| TensorSpec {
            index,
            types,
            min_dim: lo,
            max_dim: lo + span,
            value_ranges,
            axis_bound,
            optional,
            normal_distribution,
        },
    )
}

fn tensors() -> impl Strategy<Value = Vec<TensorSpec>> {
    prop_oneof![
        (1usize..4).prop_flat_map(|n| (0..n as u32).map(|i| tensor(TensorIndex::Position(i))).collect::<Vec<_>>()),
        tensor(TensorIndex::Variadic).prop_map(|t| vec![t]),
    ]
}

fn spec() -> impl Strategy<Value = OperatorSpec> {
    (
        "[A-Z][A-Za-z0-9]{0,10}",
        "op_[a-z_]{1,12}",
        any::<bool>(),
        prop::collection::vec(attribute(), 0..3),
        tensors(),
        tensors(),
        prop::sample::subsequence(ImplicitProperty::ALL.to_vec(), 0..=2),
    )
        .prop_map(|(op_name, op_code, type_tied, attributes, inputs, outputs, props)| OperatorSpec {
            op_name,
            op_code,
            type_tied,
            attributes,
            inputs,
            outputs,
            properties: props.into_iter().collect::<BTreeSet<_>>(),
        })
}

fn shape() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(prop_oneof![Just(1usize), 1usize..6], 0..5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn printed_specs_parse_back(s in spec()) {
        let text = to_osl(&s);
        prop_assert_eq!(parse_osl(&text).unwrap(), s);
    }

    #[test]
    fn multidirectional_broadcast_is_commutative(a in shape(), b in shape()) {
        let ab = multidirectional_broadcast_shape(&a, &b).ok();
        prop_assert_eq!(&ab, &multidirectional_broadcast_shape(&b, &a).ok());
        if let Some(out) = ab {
            prop_assert_eq!(out.len(), a.len().max(b.len()));
            prop_assert_eq!(multidirectional_broadcast_shape(&out, &a).unwrap(), out.clone());
        }
    }

    #[test]
    fn broadcasting_against_ones_is_identity(a in shape()) {
        let ones = vec![1; a.len()];
        prop_assert_eq!(multidirectional_broadcast_shape(&a, &ones).unwrap(), a);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn corner_case_repair_is_idempotent(op in prop::sample::select(CORPUS.to_vec()), seed in any::<u64>(), dims in prop::collection::vec(1usize..9, 4)) {
        let spec = corpus_spec(op);
        let plan = generate_plan(&spec, Profile::Full, 10, seed).unwrap();
        let mut rng = RandomSource::new(seed);
        for case in &plan.cases {
            let valid = CandidateAssignment::from_case(case);
            prop_assert_eq!(&apply_corner_case(&spec, valid.clone(), &mut rng).unwrap(), &valid);

            // perturb shapes, then repair twice
            let mut broken = valid;
            for inst in broken.inputs.iter_mut() {
                for (d, v) in inst.shape.iter_mut().zip(&dims) {
                    *d = *v;
                }
            }
            if let Ok(once) = apply_corner_case(&spec, broken, &mut rng) {
                prop_assert_eq!(apply_corner_case(&spec, once.clone(), &mut rng).unwrap(), once);
            }
        }
    }

    #[test]
    fn generation_is_a_function_of_the_seed(op in prop::sample::select(CORPUS.to_vec()), full in any::<bool>(), count in 1usize..60, seed in any::<u64>()) {
        let spec = corpus_spec(op);
        let profile = if full { Profile::Full } else { Profile::Smoke };
        let a = generate_plan(&spec, profile, count, seed).unwrap();
        let b = generate_plan(&spec, profile, count, seed).unwrap();
        prop_assert_eq!(&a, &b);
        let alg = from_source(&format!("def {}_compute(*args):\n    pass\n", spec.onnx_op().unwrap()), spec.onnx_op().unwrap()).unwrap();
        prop_assert_eq!(emit_script(&spec, &a, &alg), emit_script(&spec, &b, &alg));
        prop_assert_eq!(emit_manifest(&spec, &a), emit_manifest(&spec, &b));
    }

    #[test]
    fn manifests_round_trip(op in prop::sample::select(CORPUS.to_vec()), count in 1usize..40, seed in any::<u64>()) {
        let spec = corpus_spec(op);
        let plan = generate_plan(&spec, Profile::Full, count, seed).unwrap();
        let text = emit_manifest(&spec, &plan);
        let m = decode_manifest(&text).unwrap();
        prop_assert_eq!(&m.cases, &plan.cases);
        prop_assert_eq!(m.seed, seed);
        prop_assert_eq!(m.op_code, spec.op_code);
    }
}
