//! Structural checks on a parsed [`OperatorSpec`].

use std::collections::HashSet;
use std::fmt;

use crate::model::{coerce_default, DataType, OperatorSpec, TensorIndex, TensorSpec, ValueRanges};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    /// Dotted field path, e.g. `inputs[0].max_dim`.
    pub path: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

fn diag(out: &mut Vec<Diagnostic>, path: impl Into<String>, message: impl Into<String>) {
    out.push(Diagnostic { path: path.into(), message: message.into() });
}

fn ranges_fit(ranges: &ValueRanges, element: DataType) -> Result<(), String> {
    let Some((lo, hi)) = element.numeric_limits() else {
        return Err(format!("value ranges are not meaningful for `{element}`"));
    };
    for r in ranges.ranges() {
        if r.min() < lo || r.max() > hi {
            return Err(format!("range [{}, {}] is not representable in `{element}`", r.min(), r.max()));
        }
        if element.is_discrete() && r.integer_bounds().is_none() {
            return Err(format!("range [{}, {}] holds no `{element}` value", r.min(), r.max()));
        }
    }
    Ok(())
}

fn check_indices(out: &mut Vec<Diagnostic>, kind: &str, tensors: &[TensorSpec]) {
    let mut expected = 0u32;
    for (i, t) in tensors.iter().enumerate() {
        match t.index {
            TensorIndex::Position(p) => {
                if p != expected {
                    diag(out, format!("{kind}[{i}].index"), format!("expected index {expected}, found {p}"));
                }
                expected = p.saturating_add(1);
            }
            TensorIndex::Variadic => {
                if i + 1 != tensors.len() {
                    diag(out, format!("{kind}[{i}].index"), "variadic index -1 is only allowed on the last entry");
                }
            }
        }
    }
}

fn check_tensor(out: &mut Vec<Diagnostic>, path: &str, t: &TensorSpec) {
    if t.types.is_empty() {
        diag(out, format!("{path}.basic_type_list"), "type list is empty");
    }
    if t.max_dim < t.min_dim {
        diag(out, format!("{path}.max_dim"), format!("max_dim {} is smaller than min_dim {}", t.max_dim, t.min_dim));
    }
    if t.normal_distribution {
        let bad: Vec<_> = t.types.iter().filter(|d| !d.is_float()).map(|d| d.keyword()).collect();
        if !bad.is_empty() {
            diag(
                out,
                format!("{path}.normal_distribution"),
                format!("normal distribution requires floating-point types, found {}", bad.join(", ")),
            );
        }
    }
    if let Some(ranges) = &t.value_ranges {
        for d in &t.types {
            if let Err(m) = ranges_fit(ranges, *d) {
                diag(out, format!("{path}.min_val_list"), m);
            }
        }
    }
}

/// Returns every violated invariant; an empty list means the operator is usable.
pub fn validate_spec(spec: &OperatorSpec) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    if spec.op_name.is_empty() {
        diag(&mut out, "op_name", "operator name is empty");
    }
    if spec.onnx_op().is_none() {
        diag(&mut out, "op_code", format!("`{}` is not a known ONNX operator", spec.op_code));
    }

    let mut seen = HashSet::new();
    for (i, a) in spec.attributes.iter().enumerate() {
        let path = format!("attributes[{i}]");
        if a.name.is_empty() {
            diag(&mut out, format!("{path}.attr_name"), "attribute name is empty");
        } else if !seen.insert(a.name.as_str()) {
            diag(&mut out, format!("{path}.attr_name"), format!("duplicate attribute `{}`", a.name));
        }
        if a.types.is_empty() {
            diag(&mut out, format!("{path}.type_list"), "type list is empty");
        }
        if let Some(ranges) = &a.value_ranges {
            for t in &a.types {
                if let Err(m) = ranges_fit(ranges, t.element) {
                    diag(&mut out, format!("{path}.min_val_list"), m);
                }
            }
        }
        if let Some(default) = &a.default_value {
            for t in &a.types {
                if coerce_default(default, *t).is_none() {
                    diag(&mut out, format!("{path}.default_value"), format!("`{default}` cannot be read as `{}`", t));
                }
            }
        }
    }

    check_indices(&mut out, "inputs", &spec.inputs);
    check_indices(&mut out, "outputs", &spec.outputs);
    for (i, t) in spec.inputs.iter().enumerate() {
        check_tensor(&mut out, &format!("inputs[{i}]"), t);
    }
    for (i, t) in spec.outputs.iter().enumerate() {
        check_tensor(&mut out, &format!("outputs[{i}]"), t);
    }

    let broadcasts = spec.properties.iter().filter(|p| p.is_broadcast()).count();
    if broadcasts > 1 {
        diag(&mut out, "properties", "at most one broadcasting property may be declared");
    }

    out
}
