use std::fmt::Write;

use crate::model::{AttributeSpec, OperatorSpec, TensorSpec, ValueRanges};

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Shortest text that reads back as the same `f64`.
pub(crate) fn format_number(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:?}")
    }
}

fn ranges(out: &mut Vec<String>, r: &Option<ValueRanges>) {
    if let Some(r) = r {
        let mins: Vec<_> = r.mins().map(format_number).collect();
        let maxs: Vec<_> = r.maxs().map(format_number).collect();
        out.push(format!("min_val_list = [{}]", mins.join(", ")));
        out.push(format!("max_val_list = [{}]", maxs.join(", ")));
    }
}

fn attribute(a: &AttributeSpec) -> String {
    let types: Vec<_> = a.types.iter().map(|t| t.to_string()).collect();
    let mut fields = vec![format!("attr_name = {}", quote(&a.name)), format!("type_list = [{}]", types.join(", "))];
    if let Some(d) = &a.default_value {
        fields.push(format!("default_value = {}", quote(d)));
    }
    ranges(&mut fields, &a.value_ranges);
    format!("Attr<{}>", fields.join(", "))
}

fn tensor(t: &TensorSpec) -> String {
    let types: Vec<_> = t.types.iter().map(|d| d.keyword()).collect();
    let mut fields = vec![
        format!("index = {}", t.index.raw()),
        format!("basic_type_list = [{}]", types.join(", ")),
        format!("min_dim = {}", t.min_dim),
        format!("max_dim = {}", t.max_dim),
    ];
    ranges(&mut fields, &t.value_ranges);
    for (name, on) in
        [("axis_bound", t.axis_bound), ("optional", t.optional), ("normal_distribution", t.normal_distribution)]
    {
        if on {
            fields.push(format!("{name} = true"));
        }
    }
    format!("Tensor<{}>", fields.join(", "))
}

fn section(out: &mut String, name: &str, items: Vec<String>) {
    if items.is_empty() {
        let _ = writeln!(out, "  {name} = [];");
        return;
    }
    let _ = writeln!(out, "  {name} = [");
    let n = items.len();
    for (i, item) in items.into_iter().enumerate() {
        let sep = if i + 1 < n { "," } else { "" };
        let _ = writeln!(out, "    {item}{sep}");
    }
    let _ = writeln!(out, "  ];");
}

/// Canonical OSL text for `spec`. Parsing the result yields an equal spec.
pub fn to_osl(spec: &OperatorSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "def {} : Op<{}> {{", spec.op_name, quote(&spec.op_code));
    if spec.type_tied {
        out.push_str("  type_tied = true;\n");
    }
    section(&mut out, "attributes", spec.attributes.iter().map(attribute).collect());
    section(&mut out, "inputs", spec.inputs.iter().map(tensor).collect());
    section(&mut out, "outputs", spec.outputs.iter().map(tensor).collect());
    if !spec.properties.is_empty() {
        let props: Vec<_> = spec.properties.iter().map(|p| p.keyword()).collect();
        let _ = writeln!(out, "  properties = [{}];", props.join(", "));
    }
    out.push_str("}\n");
    out
}
