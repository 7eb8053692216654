use std::collections::BTreeMap;

use crate::constraints::{enforce_nonzero, fit_volume, MAX_DIM_LENGTH};
use crate::model::{
    coerce_default, Arity, AttrPayload, AttributeSpec, AttributeValue, BoundaryCategory, DataType, ImplicitProperty,
    OperatorSpec, Scalar, TensorSpec, ValueDirective, ValueRange, ValueRanges,
};
use crate::rng::RandomSource;

/// Longest string drawn for string tensors and string attributes.
pub const MAX_STRING_LEN: usize = 8;

/// Length range of vector attributes without a default.
pub const VECTOR_ATTR_LEN: (usize, usize) = (1, 3);

/// Bounds of integer tensors without declared ranges.
pub const DEFAULT_INT_RANGE: (f64, f64) = (-10.0, 10.0);

const ALPHANUMERIC: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789";

/// Shape of the given rank with dims uniform in `[1, MAX_DIM_LENGTH]`.
///
/// `DimLengthOne` forces one random dim to 1. Volume is capped by
/// resampling the largest dims.
pub fn sample_shape(rank: usize, rng: &mut RandomSource, boundary: Option<BoundaryCategory>) -> Vec<usize> {
    let mut shape: Vec<usize> = (0..rank).map(|_| rng.range_usize(1, MAX_DIM_LENGTH)).collect();
    if boundary == Some(BoundaryCategory::DimLengthOne) && rank > 0 {
        let k = rng.index(rank);
        shape[k] = 1;
    }
    fit_volume(&mut shape, &[], rng);
    shape
}

pub fn alphanumeric(rng: &mut RandomSource, max_len: usize) -> String {
    let len = rng.range_usize(0, max_len);
    (0..len).map(|_| ALPHANUMERIC[rng.index(ALPHANUMERIC.len())] as char).collect()
}

/// Endpoints of `r` as representable by `element`: integer bounds for
/// discrete types, the raw bounds otherwise.
pub fn endpoints(r: &ValueRange, element: DataType) -> Option<(f64, f64)> {
    if element.is_discrete() {
        r.integer_bounds().map(|(lo, hi)| (lo as f64, hi as f64))
    } else {
        Some((r.min(), r.max()))
    }
}

fn scalar_for(element: DataType, v: f64) -> Scalar {
    match element {
        DataType::Bool => Scalar::Bool(v != 0.0),
        e if e.is_integer() => Scalar::Int(v as i64),
        _ => Scalar::Float(v),
    }
}

fn draw_element(element: DataType, ranges: Option<&ValueRanges>, rng: &mut RandomSource) -> Scalar {
    if let Some(ranges) = ranges {
        let r = ranges.ranges()[rng.index(ranges.ranges().len())];
        if let Some((lo, hi)) = endpoints(&r, element) {
            let v =
                if element.is_discrete() { rng.range_i64(lo as i64, hi as i64) as f64 } else { rng.range_f64(lo, hi) };
            return scalar_for(element, v);
        }
    }
    match element {
        DataType::String => Scalar::Str(alphanumeric(rng, MAX_STRING_LEN)),
        DataType::Bool => Scalar::Bool(rng.coin()),
        e if e.is_integer() => {
            let (lo, hi) = e.numeric_limits().unwrap_or((0.0, 3.0));
            Scalar::Int(rng.range_i64(0f64.max(lo) as i64, 3f64.min(hi) as i64))
        }
        _ => Scalar::Float(rng.unit_f64()),
    }
}

/// Draws a value for one attribute: a type uniformly from its type list,
/// then a value uniformly from a uniformly chosen range pair.
///
/// Attributes without ranges take their default when it coerces, otherwise
/// a small fallback value.
pub fn draw_attribute(a: &AttributeSpec, rng: &mut RandomSource) -> AttributeValue {
    let ty = a.types[rng.index(a.types.len())];
    if a.value_ranges.is_none() {
        if let Some(payload) = a.default_value.as_deref().and_then(|d| coerce_default(d, ty)) {
            return AttributeValue { ty, value: payload };
        }
    }
    let ranges = a.value_ranges.as_ref();
    let value = match ty.arity {
        Arity::Scalar => AttrPayload::Scalar(draw_element(ty.element, ranges, rng)),
        Arity::Vector => {
            let n = rng.range_usize(VECTOR_ATTR_LEN.0, VECTOR_ATTR_LEN.1);
            AttrPayload::Vector((0..n).map(|_| draw_element(ty.element, ranges, rng)).collect())
        }
    };
    AttributeValue { ty, value }
}

pub fn draw_attributes(spec: &OperatorSpec, rng: &mut RandomSource) -> BTreeMap<String, AttributeValue> {
    spec.attributes.iter().map(|a| (a.name.clone(), draw_attribute(a, rng))).collect()
}

/// Replaces every element of `v` by the min or max endpoint of one of the
/// attribute's ranges. Returns false when the attribute has no ranges.
pub fn pin_attribute(
    a: &AttributeSpec,
    v: &mut AttributeValue,
    category: BoundaryCategory,
    rng: &mut RandomSource,
) -> bool {
    let Some(ranges) = &a.value_ranges else { return false };
    let r = ranges.ranges()[rng.index(ranges.ranges().len())];
    let Some((lo, hi)) = endpoints(&r, v.ty.element) else { return false };
    let x = scalar_for(v.ty.element, if category == BoundaryCategory::ValueRangeMin { lo } else { hi });
    v.value = match &v.value {
        AttrPayload::Scalar(_) => AttrPayload::Scalar(x),
        AttrPayload::Vector(items) => AttrPayload::Vector(vec![x; items.len().max(1)]),
    };
    true
}

/// Directive for a tensor without boundary pinning.
pub fn base_directive(spec: &OperatorSpec, t: &TensorSpec, dtype: DataType) -> ValueDirective {
    let d = if dtype == DataType::String {
        return ValueDirective::AlphanumericStrings { max_len: MAX_STRING_LEN };
    } else if let Some(r) = &t.value_ranges {
        ValueDirective::UniformInRanges { ranges: r.clone() }
    } else if t.normal_distribution || !dtype.is_discrete() {
        ValueDirective::Normal
    } else {
        let (lo, hi) = dtype.numeric_limits().unwrap_or(DEFAULT_INT_RANGE);
        let lo = lo.max(DEFAULT_INT_RANGE.0);
        let hi = hi.min(DEFAULT_INT_RANGE.1);
        ValueDirective::UniformInRanges { ranges: ValueRanges::single(lo, hi).expect("type limits straddle zero") }
    };
    if spec.has(ImplicitProperty::NonZero) {
        enforce_nonzero(&d, dtype)
    } else {
        d
    }
}

/// Ranges whose endpoints a pinned directive may take.
pub fn pin_targets(spec: &OperatorSpec, t: &TensorSpec, dtype: DataType) -> Option<ValueRanges> {
    if dtype == DataType::String {
        return None;
    }
    let declared = t.value_ranges.as_ref()?;
    Some(match enforce_or_keep(spec, declared, dtype) {
        ValueDirective::UniformInRanges { ranges } | ValueDirective::NonZeroUniform { ranges } => ranges,
        _ => return None,
    })
}

fn enforce_or_keep(spec: &OperatorSpec, ranges: &ValueRanges, dtype: DataType) -> ValueDirective {
    let d = ValueDirective::UniformInRanges { ranges: ranges.clone() };
    if spec.has(ImplicitProperty::NonZero) {
        enforce_nonzero(&d, dtype)
    } else {
        d
    }
}

/// Directive that fills a tensor with one endpoint of its declared ranges.
pub fn pinned_directive(
    spec: &OperatorSpec,
    t: &TensorSpec,
    dtype: DataType,
    category: BoundaryCategory,
    rng: &mut RandomSource,
) -> Option<ValueDirective> {
    let targets = pin_targets(spec, t, dtype)?;
    let r = targets.ranges()[rng.index(targets.ranges().len())];
    let (lo, hi) = endpoints(&r, dtype)?;
    let v = if category == BoundaryCategory::ValueRangeMin { lo } else { hi };
    let point = ValueRanges::single(v, v).ok()?;
    Some(if spec.has(ImplicitProperty::NonZero) {
        ValueDirective::NonZeroUniform { ranges: point }
    } else {
        ValueDirective::UniformInRanges { ranges: point }
    })
}
