use std::fmt;

use crate::model::{
    Arity, DataType, ImplicitProperty, InputInstance, OperatorSpec, TestCase, ValueDirective, ValueRanges,
};

use super::{broadcast_holds, check_axis_bound, nonzero_holds, CandidateAssignment, CornerCase, VOLUME_CAP};

/// Instances a variadic operand expands to.
pub const VARIADIC_MIN: usize = 2;
pub const VARIADIC_MAX: usize = 4;

/// One failed predicate on a finished test case.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub case: String,
    pub rule: &'static str,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: [{}] {}", self.case, self.rule, self.detail)
    }
}

struct Collector<'a> {
    case: &'a str,
    out: Vec<Violation>,
}

impl Collector<'_> {
    fn push(&mut self, rule: &'static str, detail: impl Into<String>) {
        self.out.push(Violation { case: self.case.to_string(), rule, detail: detail.into() });
    }
}

fn ranges_within_type(ranges: &ValueRanges, dtype: DataType) -> bool {
    let Some((lo, hi)) = dtype.numeric_limits() else { return false };
    ranges.ranges().iter().all(|r| {
        let bounds_ok = r.min() >= lo && r.max() <= hi;
        bounds_ok && (!dtype.is_discrete() || r.integer_bounds().is_some())
    })
}

fn directive_ranges(d: &ValueDirective) -> Option<&ValueRanges> {
    match d {
        ValueDirective::UniformInRanges { ranges } | ValueDirective::NonZeroUniform { ranges } => Some(ranges),
        _ => None,
    }
}

fn check_directive(c: &mut Collector, spec: &OperatorSpec, i: &InputInstance, slot: usize) {
    let t = &spec.inputs[i.source];
    let d = &i.directive;
    if i.dtype == DataType::String {
        if !matches!(d, ValueDirective::AlphanumericStrings { .. }) {
            c.push("directive", format!("input {slot}: string tensor needs a string directive"));
        }
        return;
    }
    match d {
        ValueDirective::AlphanumericStrings { .. } => {
            c.push("directive", format!("input {slot}: string directive on {}", i.dtype));
            return;
        }
        ValueDirective::Normal | ValueDirective::NonZeroNormal { .. } if i.dtype.is_discrete() => {
            c.push("directive", format!("input {slot}: normal draw on discrete {}", i.dtype));
        }
        _ => {}
    }
    if let Some(r) = directive_ranges(d) {
        if !ranges_within_type(r, i.dtype) {
            c.push("directive", format!("input {slot}: ranges fall outside {}", i.dtype));
        }
    }
    if let Some(declared) = &t.value_ranges {
        match directive_ranges(d) {
            Some(r) if r.is_subset_of(declared) => {}
            _ => c.push("directive", format!("input {slot}: values may leave the declared ranges")),
        }
    } else if t.normal_distribution && !matches!(d, ValueDirective::Normal | ValueDirective::NonZeroNormal { .. }) {
        c.push("directive", format!("input {slot}: normal_distribution tensor is not drawn normally"));
    }
    if spec.has(ImplicitProperty::NonZero) && !nonzero_holds(d, i.dtype) {
        c.push("non_zero", format!("input {slot}: zero is a possible value"));
    }
}

/// Re-checks every generation predicate on `case`.
///
/// An empty result means the case is valid for `spec`.
pub fn check_case(spec: &OperatorSpec, case: &TestCase) -> Vec<Violation> {
    let mut c = Collector { case: &case.name, out: Vec::new() };

    for (slot, i) in case.inputs.iter().enumerate() {
        let Some(t) = spec.inputs.get(i.source) else {
            c.push("input", format!("input {slot}: unknown source {}", i.source));
            continue;
        };
        if slot > 0 && case.inputs[slot - 1].source > i.source {
            c.push("input", format!("input {slot}: instances out of order"));
        }
        if i.omitted {
            if !t.optional {
                c.push("optional", format!("input {slot}: required input omitted"));
            }
            continue;
        }
        if !t.types.contains(&i.dtype) {
            c.push("dtype", format!("input {slot}: {} not in the declared type list", i.dtype));
        }
        if i.rank() < t.min_dim || i.rank() > t.max_dim {
            c.push("rank", format!("input {slot}: rank {} outside [{}, {}]", i.rank(), t.min_dim, t.max_dim));
        }
        if i.shape.contains(&0) {
            c.push("shape", format!("input {slot}: zero-length dimension in {:?}", i.shape));
        }
        if i.volume() > VOLUME_CAP {
            c.push("shape", format!("input {slot}: {} elements exceed {VOLUME_CAP}", i.volume()));
        }
        check_directive(&mut c, spec, i, slot);
    }

    for (source, t) in spec.inputs.iter().enumerate() {
        let all: Vec<&InputInstance> = case.instances_of(source).collect();
        if t.is_variadic() {
            if !(VARIADIC_MIN..=VARIADIC_MAX).contains(&all.len()) {
                c.push("variadic", format!("input {source}: {} instances", all.len()));
            }
            if all.windows(2).any(|w| w[0].dtype != w[1].dtype) {
                c.push("variadic", format!("input {source}: instances differ in dtype"));
            }
        } else if all.len() != 1 {
            c.push("input", format!("input {source}: {} instances", all.len()));
        }
    }

    if spec.type_tied {
        for (a, ta) in spec.inputs.iter().enumerate() {
            for (b, tb) in spec.inputs.iter().enumerate().skip(a + 1) {
                if ta.types != tb.types {
                    continue;
                }
                let da = case.instances_of(a).find(|i| !i.omitted).map(|i| i.dtype);
                let db = case.instances_of(b).find(|i| !i.omitted).map(|i| i.dtype);
                if let (Some(da), Some(db)) = (da, db) {
                    if da != db {
                        c.push("type_tied", format!("inputs {a} and {b} have {da} and {db}"));
                    }
                }
            }
        }
    }

    for a in &spec.attributes {
        let Some(v) = case.attributes.get(&a.name) else {
            c.push("attribute", format!("{} missing", a.name));
            continue;
        };
        if !a.types.contains(&v.ty) {
            c.push("attribute", format!("{}: type {} not declared", a.name, v.ty));
        }
        let elements = v.value.elements();
        let arity_ok = match v.ty.arity {
            Arity::Scalar => matches!(v.value, crate::model::AttrPayload::Scalar(_)),
            Arity::Vector => matches!(v.value, crate::model::AttrPayload::Vector(_)),
        };
        if !arity_ok || elements.iter().any(|e| e.coerce(v.ty.element).as_ref() != Some(e)) {
            c.push("attribute", format!("{}: value does not match type {}", a.name, v.ty));
        }
        if let Some(r) = &a.value_ranges {
            if elements.iter().any(|e| e.as_f64().is_none_or(|x| !r.contains(x))) {
                c.push("attribute", format!("{}: value outside the declared ranges", a.name));
            }
        }
    }
    for name in case.attributes.keys() {
        if spec.attribute(name).is_none() {
            c.push("attribute", format!("{name}: not declared"));
        }
    }

    let cand = CandidateAssignment::from_case(case);
    if !check_axis_bound(spec, &cand) {
        c.push("axis_bound", "rank does not exceed axis");
    }
    if !broadcast_holds(spec, &cand) {
        c.push("broadcast", format!("shapes {:?} do not broadcast", cand.shapes()));
    }
    if let Some(rule) = CornerCase::for_spec(spec) {
        if let Err(reason) = rule.check(&cand) {
            c.push("corner_case", reason);
        }
    }
    c.out
}
