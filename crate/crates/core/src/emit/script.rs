//! Python test scripts.
//!
//! Two targets share the tensor materialization helpers:
//!
//! * the ONNX-style script, one `Base` subclass whose `export()` builds the
//!   operator node and calls `expect(...)` per case;
//! * the standalone script, which needs only numpy and re-checks the
//!   reference outputs against freshly materialized inputs.
//!
//! Tensors are never written out. Each input is rebuilt from its value
//! directive and seed by `numpy.random.default_rng`.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::gen::TestPlan;
use crate::model::{
    AttrPayload, AttributeValue, DataType, ImplicitProperty, InputInstance, OperatorSpec, Scalar, TestCase,
    ValueDirective, ValueRanges,
};

use super::algorithm::AlgorithmFile;

/// Tolerances of float comparisons; other types compare exactly.
pub const RTOL: f64 = 1e-5;
pub const ATOL: f64 = 1e-6;

const HELPERS: &str = r#"RTOL = __RTOL__
ATOL = __ATOL__
_ALPHABET = np.array(list('ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789'))


def _size(shape):
    return int(np.prod(shape, dtype=np.int64))


def _normal(shape, dtype, seed, epsilon=0.0):
    rng = np.random.default_rng(seed)

    def draw(n):
        v = rng.standard_normal(n)
        while epsilon > 0.0:
            small = np.abs(v) < epsilon
            if not small.any():
                break
            v[small] = rng.standard_normal(int(small.sum()))
        return v

    n = _size(shape)
    values = draw(n)
    if np.dtype(dtype).kind == 'c':
        values = values + 1j * draw(n)
    return values.reshape(shape).astype(dtype)


def _uniform(shape, dtype, seed, ranges):
    rng = np.random.default_rng(seed)
    n = _size(shape)
    lo = np.array([r[0] for r in ranges], dtype=np.float64)
    hi = np.array([r[1] for r in ranges], dtype=np.float64)
    pick = rng.integers(0, len(ranges), size=n)
    if np.dtype(dtype).kind in 'iub':
        low = np.ceil(lo).astype(np.int64)[pick]
        high = np.floor(hi).astype(np.int64)[pick]
        values = rng.integers(low, high, endpoint=True)
    else:
        values = np.clip(lo[pick] + (hi[pick] - lo[pick]) * rng.random(n), lo[pick], hi[pick])
    return values.reshape(shape).astype(dtype)


def _strings(shape, seed, max_len):
    rng = np.random.default_rng(seed)
    n = _size(shape)
    out = np.empty(n, dtype=object)
    for k in range(n):
        length = int(rng.integers(0, max_len, endpoint=True))
        out[k] = ''.join(rng.choice(_ALPHABET, length))
    return out.reshape(shape)
"#;

const STANDALONE_CHECKS: &str = r#"

def _slack(dtype, bound):
    if np.dtype(dtype).kind == 'f':
        return 2.0 * float(np.finfo(dtype).eps) * max(1.0, abs(bound))
    return 0.0


def _check_ranges(name, x, ranges):
    values = np.real(np.asarray(x)).astype(np.float64).ravel()
    ok = np.zeros(values.shape, dtype=bool)
    for lo, hi in ranges:
        ok |= (values >= lo - _slack(x.dtype, lo)) & (values <= hi + _slack(x.dtype, hi))
    if not ok.all():
        raise AssertionError('%s: input values outside %r' % (name, ranges))


def _check_nonzero(name, x):
    if np.any(np.asarray(x) == 0):
        raise AssertionError('%s: zero in an input under the NonZero property' % name)


def _outputs(value):
    if isinstance(value, (tuple, list)):
        return [np.asarray(v) for v in value]
    return [np.asarray(value)]


def _assert_close(name, actual, expected):
    actual = _outputs(actual)
    expected = _outputs(expected)
    if len(actual) != len(expected):
        raise AssertionError('%s: %d outputs, expected %d' % (name, len(actual), len(expected)))
    for a, e in zip(actual, expected):
        if a.shape != e.shape or a.dtype != e.dtype:
            raise AssertionError('%s: got %s %s, expected %s %s' % (name, a.dtype, a.shape, e.dtype, e.shape))
        if e.dtype.kind in 'fc':
            np.testing.assert_allclose(a, e, rtol=RTOL, atol=ATOL, equal_nan=True, err_msg=name)
        else:
            np.testing.assert_array_equal(a, e, err_msg=name)
"#;

const STANDALONE_MAIN: &str = r#"

def main():
    failed = 0
    for test in TESTS:
        try:
            test()
        except Exception as e:  # noqa: BLE001
            failed += 1
            print('FAIL %s: %s' % (test.__name__, e))
        else:
            print('PASS %s' % test.__name__)
    print('%d passed, %d failed' % (len(TESTS) - failed, failed))
    return 1 if failed else 0


if __name__ == '__main__':
    sys.exit(main())
"#;

/// Python float literal. Integral values keep a `.0` so they stay floats.
fn py_float(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}.0", v as i64)
    } else {
        format!("{v:?}")
    }
}

fn py_str(s: &str) -> String {
    let mut out = String::from("'");
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\'' => out.push_str("\\'"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if (c as u32) < 0x20 || c == '\u{7f}' => {
                let _ = write!(out, "\\x{:02x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('\'');
    out
}

fn py_scalar(s: &Scalar, element: DataType) -> String {
    match (s, element) {
        (Scalar::Str(v), _) => py_str(v),
        (s, DataType::Bool) => if s.as_f64() == Some(0.0) { "0" } else { "1" }.to_string(),
        (s, e) if e.is_integer() => s.as_i64().map_or_else(|| "0".to_string(), |v| v.to_string()),
        (s, _) => py_float(s.as_f64().unwrap_or(0.0)),
    }
}

fn py_attr(v: &AttributeValue) -> String {
    match &v.value {
        AttrPayload::Scalar(s) => py_scalar(s, v.ty.element),
        AttrPayload::Vector(items) => {
            let parts: Vec<String> = items.iter().map(|s| py_scalar(s, v.ty.element)).collect();
            format!("[{}]", parts.join(", "))
        }
    }
}

fn py_shape(shape: &[usize]) -> String {
    match shape {
        [] => "()".to_string(),
        [d] => format!("({d},)"),
        _ => {
            let parts: Vec<String> = shape.iter().map(usize::to_string).collect();
            format!("({})", parts.join(", "))
        }
    }
}

fn py_ranges(r: &ValueRanges) -> String {
    let parts: Vec<String> =
        r.ranges().iter().map(|r| format!("({}, {})", py_float(r.min()), py_float(r.max()))).collect();
    format!("[{}]", parts.join(", "))
}

fn py_dtype(d: DataType) -> String {
    format!("np.{}", d.numpy_name())
}

/// Expression that materializes one input instance.
pub fn materialize_expr(i: &InputInstance) -> String {
    let shape = py_shape(&i.shape);
    let dtype = py_dtype(i.dtype);
    match &i.directive {
        ValueDirective::Normal => format!("_normal({shape}, {dtype}, {})", i.seed),
        ValueDirective::NonZeroNormal { epsilon } => {
            format!("_normal({shape}, {dtype}, {}, epsilon={})", i.seed, py_float(*epsilon))
        }
        ValueDirective::UniformInRanges { ranges } | ValueDirective::NonZeroUniform { ranges } => {
            format!("_uniform({shape}, {dtype}, {}, {})", i.seed, py_ranges(ranges))
        }
        ValueDirective::AlphanumericStrings { max_len } => format!("_strings({shape}, {}, {max_len})", i.seed),
    }
}

/// Python variable names of a case's present inputs, in index order.
/// Variadic instances are numbered `x_<index>_<k>`.
fn input_names(spec: &OperatorSpec, case: &TestCase) -> Vec<(usize, String)> {
    let mut out = Vec::new();
    for (source, t) in spec.inputs.iter().enumerate() {
        let present: Vec<usize> =
            case.inputs.iter().enumerate().filter(|(_, i)| i.source == source && !i.omitted).map(|(k, _)| k).collect();
        if t.is_variadic() {
            for (j, &slot) in present.iter().enumerate() {
                out.push((slot, format!("x_{source}_{j}")));
            }
        } else if let Some(&slot) = present.first() {
            out.push((slot, format!("x_{source}")));
        }
    }
    out
}

/// Entry-point arguments: inputs by index (a variadic input as a list,
/// an omitted one as `None`), then attributes in appearance order.
fn call_args(spec: &OperatorSpec, case: &TestCase, names: &[(usize, String)]) -> Vec<String> {
    let mut args = Vec::new();
    for (source, t) in spec.inputs.iter().enumerate() {
        let mine: Vec<&str> =
            names.iter().filter(|(slot, _)| case.inputs[*slot].source == source).map(|(_, n)| n.as_str()).collect();
        args.push(if t.is_variadic() {
            format!("[{}]", mine.join(", "))
        } else {
            mine.first().map_or_else(|| "None".to_string(), |n| n.to_string())
        });
    }
    for a in &spec.attributes {
        args.push(case.attributes.get(&a.name).map_or_else(|| "None".to_string(), py_attr));
    }
    args
}

fn output_names(spec: &OperatorSpec) -> Vec<String> {
    (0..spec.outputs.len().max(1)).map(|k| format!("y_{k}")).collect()
}

fn indent(text: &str, by: usize) -> String {
    let pad = " ".repeat(by);
    let mut out = String::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            out.push('\n');
        } else {
            let _ = writeln!(out, "{pad}{line}");
        }
    }
    out
}

fn class_name(spec: &OperatorSpec) -> String {
    spec.onnx_op().map_or_else(
        || spec.op_name.chars().filter(|c| c.is_ascii_alphanumeric() || *c == '_').collect(),
        str::to_string,
    )
}

fn helpers() -> String {
    HELPERS.replace("__RTOL__", &py_float(RTOL)).replace("__ATOL__", &py_float(ATOL))
}

/// Key of the node a case runs on: attribute values plus the node's input
/// list, which changes with variadic expansion and omitted inputs.
fn node_key(case: &TestCase, node_inputs: &[String]) -> (BTreeMap<String, String>, Vec<String>) {
    let attrs = case.attributes.iter().map(|(k, v)| (k.clone(), py_attr(v))).collect();
    (attrs, node_inputs.to_vec())
}

/// Input names as the ONNX node sees them: omitted optional inputs are
/// `''`, trailing omitted inputs are dropped.
fn node_inputs(spec: &OperatorSpec, case: &TestCase, names: &[(usize, String)]) -> Vec<String> {
    let mut out = Vec::new();
    for (source, t) in spec.inputs.iter().enumerate() {
        let mine: Vec<String> =
            names.iter().filter(|(slot, _)| case.inputs[*slot].source == source).map(|(_, n)| n.clone()).collect();
        if mine.is_empty() && !t.is_variadic() {
            out.push(String::new());
        } else {
            out.extend(mine);
        }
    }
    while out.last().is_some_and(String::is_empty) {
        out.pop();
    }
    out
}

fn quoted_list(items: &[String]) -> String {
    let parts: Vec<String> = items.iter().map(|s| py_str(s)).collect();
    format!("[{}]", parts.join(", "))
}

/// ONNX-style test script grouping every case of `plan`.
///
/// One node is built per distinct attribute assignment and input list;
/// later cases with the same key reuse it.
pub fn emit_script(spec: &OperatorSpec, plan: &TestPlan, alg: &AlgorithmFile) -> String {
    let op = class_name(spec);
    let outputs = output_names(spec);
    let mut s = String::new();
    s.push_str(
        "import numpy as np\nimport numpy\nimport math\nimport onnx\nfrom ..base import Base\nfrom . import expect\n\n",
    );
    s.push_str(&helpers());
    let _ = write!(s, "\n\nclass {op}(Base):\n\n    @staticmethod\n    def export():\n\n");
    s.push_str(&indent(&alg.source_text, 8));

    let mut nodes: Vec<(BTreeMap<String, String>, Vec<String>)> = Vec::new();
    let keys: Vec<_> = plan
        .cases
        .iter()
        .map(|case| {
            let names = input_names(spec, case);
            let inputs = node_inputs(spec, case, &names);
            (node_key(case, &inputs), names)
        })
        .collect();
    let mut distinct = keys.iter().map(|(k, _)| k).collect::<Vec<_>>();
    distinct.sort();
    distinct.dedup();
    let single = distinct.len() == 1;

    for (case, (key, names)) in plan.cases.iter().zip(&keys) {
        let node = match nodes.iter().position(|k| k == key) {
            Some(n) => n,
            None => {
                nodes.push(key.clone());
                let n = nodes.len() - 1;
                let var = if single { "node".to_string() } else { format!("node_{n}") };
                let _ = writeln!(s, "\n        {var} = onnx.helper.make_node(");
                let _ = writeln!(s, "            {},", py_str(&op));
                let _ = writeln!(s, "            inputs={},", quoted_list(&key.1));
                let _ = writeln!(s, "            outputs={},", quoted_list(&outputs));
                for (name, value) in &key.0 {
                    let _ = writeln!(s, "            {name}={value},");
                }
                s.push_str("        )\n");
                n
            }
        };
        let var = if single { "node".to_string() } else { format!("node_{node}") };
        for (slot, name) in names {
            let _ = writeln!(s, "        {name} = {}", materialize_expr(&case.inputs[*slot]));
        }
        let args = call_args(spec, case, names);
        let _ = writeln!(s, "        {} = {}({})", outputs.join(", "), alg.entry_function, args.join(", "));
        let present: Vec<&str> = names.iter().map(|(_, n)| n.as_str()).collect();
        let _ = writeln!(
            s,
            "        expect({var}, inputs=[{}], outputs=[{}], name={})\n",
            present.join(", "),
            outputs.join(", "),
            py_str(&case.name)
        );
    }
    while s.ends_with("\n\n") {
        s.pop();
    }
    s
}

/// Standalone script: numpy only, one function per case, runnable as
/// `python3 <script>`; exits nonzero when any case fails.
pub fn emit_standalone(spec: &OperatorSpec, plan: &TestPlan, alg: &AlgorithmFile) -> String {
    let mut s = String::new();
    s.push_str("import sys\nimport math\nimport numpy as np\nimport numpy\n\n");
    s.push_str(&helpers());
    s.push_str(STANDALONE_CHECKS);
    s.push_str("\n\n");
    s.push_str(alg.source_text.trim_end());
    s.push('\n');
    let nonzero = spec.has(ImplicitProperty::NonZero);
    for case in &plan.cases {
        let names = input_names(spec, case);
        let args = call_args(spec, case, &names).join(", ");
        let _ = write!(s, "\n\ndef {}():\n", case.name);
        for (slot, name) in &names {
            let i = &case.inputs[*slot];
            let _ = writeln!(s, "    {name} = {}", materialize_expr(i));
            if let ValueDirective::UniformInRanges { ranges } | ValueDirective::NonZeroUniform { ranges } = &i.directive
            {
                let _ = writeln!(s, "    _check_ranges({}, {name}, {})", py_str(&case.name), py_ranges(ranges));
            }
            if nonzero && i.dtype != DataType::String {
                let _ = writeln!(s, "    _check_nonzero({}, {name})", py_str(&case.name));
            }
        }
        let _ = writeln!(s, "    expected = {}({args})", alg.entry_function);
        for (slot, name) in &names {
            let _ = writeln!(s, "    {name} = {}", materialize_expr(&case.inputs[*slot]));
        }
        let _ = writeln!(s, "    _assert_close({}, {}({args}), expected)", py_str(&case.name), alg.entry_function);
    }
    s.push_str("\n\nTESTS = [\n");
    for case in &plan.cases {
        let _ = writeln!(s, "    {},", case.name);
    }
    s.push_str("]\n");
    s.push_str(STANDALONE_MAIN);
    s
}
