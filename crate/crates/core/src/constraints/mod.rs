//! Validity of candidate operator invocations.
//!
//! Holds the generic rules (axis bound, broadcasting, non-zero values), the
//! per-operator corner cases in [`corner`], and [`check_case`], which re-runs
//! every predicate over a finished test case.

pub mod corner;
mod validity;

use std::collections::BTreeMap;

use crate::model::{
    AttributeValue, DataType, ImplicitProperty, InputInstance, OperatorSpec, TestCase, ValueDirective, ValueRange,
    ValueRanges,
};
use crate::rng::RandomSource;

pub use corner::{apply_corner_case, CornerCase};
pub use validity::{check_case, Violation, VARIADIC_MAX, VARIADIC_MIN};

/// Smallest magnitude of a float drawn under the non-zero property.
pub const EPSILON_NONZERO: f64 = 1e-3;

/// Upper bound on any sampled dimension length.
pub const MAX_DIM_LENGTH: usize = 24;

/// Upper bound on the element count of one input tensor.
pub const VOLUME_CAP: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConstraintError {
    #[error("incompatible shapes {a:?} and {b:?}")]
    IncompatibleShapes { a: Vec<usize>, b: Vec<usize> },
    #[error("{op}: no valid candidate ({reason})")]
    Unrepairable { op: String, reason: String },
}

/// Attribute values plus input instances under consideration.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateAssignment {
    pub attributes: BTreeMap<String, AttributeValue>,
    pub inputs: Vec<InputInstance>,
}

impl CandidateAssignment {
    pub fn from_case(case: &TestCase) -> CandidateAssignment {
        CandidateAssignment { attributes: case.attributes.clone(), inputs: case.inputs.clone() }
    }

    pub fn int_attr(&self, name: &str) -> Option<i64> {
        self.attributes.get(name).and_then(AttributeValue::scalar_i64)
    }

    pub fn ints_attr(&self, name: &str) -> Option<Vec<i64>> {
        self.attributes.get(name).and_then(AttributeValue::int_elements)
    }

    /// Slot of the first non-omitted instance of spec input `source`.
    pub fn slot(&self, source: usize) -> Option<usize> {
        self.inputs.iter().position(|i| i.source == source && !i.omitted)
    }

    pub fn shape(&self, source: usize) -> Option<&[usize]> {
        self.slot(source).map(|s| self.inputs[s].shape.as_slice())
    }

    pub fn present(&self) -> impl Iterator<Item = &InputInstance> {
        self.inputs.iter().filter(|i| !i.omitted)
    }

    pub fn shapes(&self) -> Vec<Vec<usize>> {
        self.inputs.iter().map(|i| i.shape.clone()).collect()
    }

    pub fn dtypes(&self) -> Vec<DataType> {
        self.inputs.iter().map(|i| i.dtype).collect()
    }
}

/// True iff every axis-bound tensor has rank ≥ `axis + 1`.
///
/// Specs without an attribute named `axis` trivially pass.
pub fn check_axis_bound(spec: &OperatorSpec, cand: &CandidateAssignment) -> bool {
    let Some(axis) = cand.int_attr("axis") else {
        return true;
    };
    cand.present()
        .filter(|i| spec.inputs.get(i.source).is_some_and(|t| t.axis_bound))
        .all(|i| i.rank() as i64 >= axis.saturating_add(1))
}

/// Result shape of multidirectional broadcasting of `a` and `b`.
pub fn multidirectional_broadcast_shape(a: &[usize], b: &[usize]) -> Result<Vec<usize>, ConstraintError> {
    let rank = a.len().max(b.len());
    let mut out = vec![0; rank];
    for k in 0..rank {
        let da = if k < a.len() { a[a.len() - 1 - k] } else { 1 };
        let db = if k < b.len() { b[b.len() - 1 - k] } else { 1 };
        out[rank - 1 - k] = match (da, db) {
            (x, y) if x == y => x,
            (1, y) => y,
            (x, 1) => x,
            _ => return Err(ConstraintError::IncompatibleShapes { a: a.to_vec(), b: b.to_vec() }),
        };
    }
    Ok(out)
}

/// True iff `b` stretches onto `target` without `target` growing.
pub fn unidirectional_broadcastable(target: &[usize], b: &[usize]) -> bool {
    b.len() <= target.len() && b.iter().rev().zip(target.iter().rev()).all(|(&d, &t)| d == t || d == 1)
}

/// Implicit broadcasting check over the present inputs.
///
/// Unidirectional broadcasting is checked generically (second input onto
/// the first) only when no corner-case rule owns the operator's shapes.
pub fn broadcast_holds(spec: &OperatorSpec, cand: &CandidateAssignment) -> bool {
    if spec.has(ImplicitProperty::MultidirectionalBroadcast) {
        let mut shapes = cand.present().map(|i| i.shape.as_slice());
        if let Some(first) = shapes.next() {
            let mut acc = first.to_vec();
            for s in shapes {
                match multidirectional_broadcast_shape(&acc, s) {
                    Ok(r) => acc = r,
                    Err(_) => return false,
                }
            }
        }
    }
    if spec.has(ImplicitProperty::UnidirectionalBroadcast) && CornerCase::for_spec(spec).is_none() {
        if let (Some(target), Some(b)) = (cand.shape(0), cand.shape(1)) {
            return unidirectional_broadcastable(target, b);
        }
    }
    true
}

/// Makes present input shapes mutually broadcastable by overwriting
/// conflicting dimensions of later inputs. Ranks are never changed.
pub fn apply_broadcast(
    spec: &OperatorSpec,
    mut cand: CandidateAssignment,
) -> Result<CandidateAssignment, ConstraintError> {
    if spec.has(ImplicitProperty::MultidirectionalBroadcast) {
        let mut acc: Option<Vec<usize>> = None;
        for inst in cand.inputs.iter_mut().filter(|i| !i.omitted) {
            if let Some(target) = &acc {
                let n = inst.shape.len();
                for (k, &t) in target.iter().rev().enumerate().take(n) {
                    let d = &mut inst.shape[n - 1 - k];
                    if *d != t && *d != 1 && t != 1 {
                        *d = t;
                    }
                }
                acc = Some(multidirectional_broadcast_shape(target, &inst.shape)?);
            } else {
                acc = Some(inst.shape.clone());
            }
        }
    }
    if spec.has(ImplicitProperty::UnidirectionalBroadcast) && CornerCase::for_spec(spec).is_none() {
        if let (Some(t), Some(b)) = (cand.slot(0), cand.slot(1)) {
            let target = cand.inputs[t].shape.clone();
            let shape = &mut cand.inputs[b].shape;
            if shape.len() > target.len() {
                return Err(ConstraintError::Unrepairable {
                    op: spec.op_code.clone(),
                    reason: format!("rank {} cannot broadcast onto rank {}", shape.len(), target.len()),
                });
            }
            let n = shape.len();
            for (k, &t) in target.iter().rev().enumerate().take(n) {
                let d = &mut shape[n - 1 - k];
                if *d != t && *d != 1 {
                    *d = t;
                }
            }
        }
    }
    Ok(cand)
}

fn split_around_zero(ranges: &ValueRanges, dtype: DataType) -> Vec<ValueRange> {
    let mut out = Vec::new();
    for r in ranges.ranges() {
        let (neg_hi, pos_lo) = if dtype.is_discrete() { (-1.0, 1.0) } else { (-EPSILON_NONZERO, EPSILON_NONZERO) };
        let (lo, hi) = if dtype.is_discrete() {
            match r.integer_bounds() {
                Some((lo, hi)) => (lo as f64, hi as f64),
                None => continue,
            }
        } else {
            (r.min(), r.max())
        };
        if lo <= neg_hi {
            out.extend(ValueRange::new(lo, hi.min(neg_hi)).ok());
        }
        if hi >= pos_lo {
            out.extend(ValueRange::new(lo.max(pos_lo), hi).ok());
        }
    }
    out
}

/// Rewrites a value directive so that no drawn element is zero.
///
/// Floats keep `|v| ≥ EPSILON_NONZERO`; integers and bools exclude 0.
pub fn enforce_nonzero(directive: &ValueDirective, dtype: DataType) -> ValueDirective {
    match directive {
        ValueDirective::Normal | ValueDirective::NonZeroNormal { .. } => {
            if dtype.is_discrete() {
                enforce_nonzero(
                    &ValueDirective::UniformInRanges { ranges: ValueRanges::single(-1.0, 1.0).unwrap() },
                    dtype,
                )
            } else {
                ValueDirective::NonZeroNormal { epsilon: EPSILON_NONZERO }
            }
        }
        ValueDirective::UniformInRanges { ranges } | ValueDirective::NonZeroUniform { ranges } => {
            let mut pieces = split_around_zero(ranges, dtype);
            if pieces.is_empty() {
                // nothing non-zero inside the requested ranges
                let v = if dtype.is_discrete() { 1.0 } else { EPSILON_NONZERO };
                pieces.push(ValueRange::point(v).unwrap());
            }
            ValueDirective::NonZeroUniform { ranges: ValueRanges::new(pieces).unwrap() }
        }
        ValueDirective::AlphanumericStrings { .. } => directive.clone(),
    }
}

/// True iff values drawn under `directive` can never be zero.
pub fn nonzero_holds(directive: &ValueDirective, dtype: DataType) -> bool {
    match directive {
        ValueDirective::NonZeroNormal { epsilon } => *epsilon > 0.0 && !dtype.is_discrete(),
        ValueDirective::NonZeroUniform { ranges } => ranges.ranges().iter().all(|r| {
            if dtype.is_discrete() {
                r.integer_bounds().is_some_and(|(lo, hi)| lo > 0 || hi < 0)
            } else {
                !r.contains(0.0)
            }
        }),
        ValueDirective::AlphanumericStrings { .. } => dtype == DataType::String,
        _ => false,
    }
}

/// Draws one element under `directive`. Strings have no numeric value.
pub fn sample_value(directive: &ValueDirective, dtype: DataType, rng: &mut RandomSource) -> Option<f64> {
    let pick = |ranges: &ValueRanges, rng: &mut RandomSource| {
        let r = ranges.ranges()[rng.index(ranges.ranges().len())];
        if dtype.is_discrete() {
            r.integer_bounds().map(|(lo, hi)| rng.range_i64(lo, hi) as f64)
        } else {
            Some(rng.range_f64(r.min(), r.max()))
        }
    };
    match directive {
        ValueDirective::Normal => Some(rng.standard_normal()),
        ValueDirective::NonZeroNormal { epsilon } => loop {
            let v = rng.standard_normal();
            if v.abs() >= *epsilon {
                return Some(v);
            }
        },
        ValueDirective::UniformInRanges { ranges } | ValueDirective::NonZeroUniform { ranges } => pick(ranges, rng),
        ValueDirective::AlphanumericStrings { .. } => None,
    }
}

/// Rank window `[lo, hi]` allowed for spec input `source`, given the
/// attribute values and the ranks already chosen for earlier inputs.
///
/// Returns `None` when the window is empty.
pub fn rank_window(
    spec: &OperatorSpec,
    source: usize,
    attributes: &BTreeMap<String, AttributeValue>,
    earlier_ranks: &[Option<usize>],
) -> Option<(usize, usize)> {
    let t = spec.inputs.get(source)?;
    let mut lo = t.min_dim;
    let mut hi = t.max_dim;
    if t.axis_bound {
        if let Some(axis) = attributes.get("axis").and_then(AttributeValue::scalar_i64) {
            if axis >= 0 {
                lo = lo.max(axis as usize + 1);
            }
        }
    }
    if spec.has(ImplicitProperty::UnidirectionalBroadcast) && CornerCase::for_spec(spec).is_none() && source > 0 {
        if let Some(Some(r0)) = earlier_ranks.first() {
            hi = hi.min(*r0);
        }
    }
    if let Some(rule) = CornerCase::for_spec(spec) {
        let (clo, chi) = rule.rank_hint(source, attributes, earlier_ranks);
        lo = lo.max(clo);
        hi = hi.min(chi);
    }
    (lo <= hi).then_some((lo, hi))
}

/// Shrinks the largest dimensions not listed in `keep` until the element
/// count fits under [`VOLUME_CAP`].
pub fn fit_volume(shape: &mut [usize], keep: &[usize], rng: &mut RandomSource) {
    loop {
        let volume: usize = shape.iter().product();
        if volume <= VOLUME_CAP {
            return;
        }
        let Some((k, &d)) = shape
            .iter()
            .enumerate()
            .filter(|(k, &d)| !keep.contains(k) && d > 1)
            .max_by_key(|(k, &d)| (d, std::cmp::Reverse(*k)))
        else {
            return;
        };
        let rest = volume / d;
        let limit = (VOLUME_CAP / rest).clamp(1, d - 1);
        shape[k] = rng.range_usize(1, limit);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AttrPayload, AttrType, Scalar, TensorIndex, TensorSpec};
    use std::collections::BTreeSet;

    fn instance(source: usize, shape: &[usize]) -> InputInstance {
        InputInstance {
            source,
            dtype: DataType::F32,
            shape: shape.to_vec(),
            directive: ValueDirective::Normal,
            seed: 0,
            omitted: false,
        }
    }

    fn axis_spec() -> OperatorSpec {
        let mut t = TensorSpec::new(TensorIndex::Position(0), vec![DataType::F32]);
        t.axis_bound = true;
        OperatorSpec {
            op_name: "SplitTest".into(),
            op_code: "op_split".into(),
            type_tied: false,
            attributes: vec![],
            inputs: vec![t],
            outputs: vec![],
            properties: BTreeSet::new(),
        }
    }

    fn with_axis(axis: i64, shape: &[usize]) -> CandidateAssignment {
        let mut attributes = BTreeMap::new();
        attributes.insert(
            "axis".to_string(),
            AttributeValue { ty: AttrType::scalar(DataType::I64), value: AttrPayload::Scalar(Scalar::Int(axis)) },
        );
        CandidateAssignment { attributes, inputs: vec![instance(0, shape)] }
    }

    #[test]
    fn axis_bound_rule() {
        let spec = axis_spec();
        assert!(check_axis_bound(&spec, &with_axis(2, &[2, 3, 4])));
        assert!(!check_axis_bound(&spec, &with_axis(3, &[2, 3, 4])));
        assert!(!check_axis_bound(&spec, &with_axis(0, &[])));
        assert!(check_axis_bound(&spec, &with_axis(-1, &[])));
    }

    #[test]
    fn multidirectional_examples() {
        assert_eq!(multidirectional_broadcast_shape(&[3, 1, 5], &[3, 4, 5]).unwrap(), vec![3, 4, 5]);
        assert_eq!(multidirectional_broadcast_shape(&[4, 5], &[2, 4, 5]).unwrap(), vec![2, 4, 5]);
        assert_eq!(multidirectional_broadcast_shape(&[], &[2, 3]).unwrap(), vec![2, 3]);
        assert!(matches!(
            multidirectional_broadcast_shape(&[3, 2], &[3, 3]),
            Err(ConstraintError::IncompatibleShapes { .. })
        ));
    }

    #[test]
    fn unidirectional_examples() {
        assert!(unidirectional_broadcastable(&[3, 4], &[4]));
        assert!(unidirectional_broadcastable(&[3, 4], &[3, 1]));
        assert!(!unidirectional_broadcastable(&[3, 4], &[2, 3, 4]));
        assert!(!unidirectional_broadcastable(&[3, 4], &[3]));
    }

    #[test]
    fn nonzero_float_range_is_split() {
        let d = ValueDirective::UniformInRanges { ranges: ValueRanges::single(-1.0, 1.0).unwrap() };
        let nz = enforce_nonzero(&d, DataType::F32);
        let expected = ValueRanges::new(vec![
            ValueRange::new(-1.0, -EPSILON_NONZERO).unwrap(),
            ValueRange::new(EPSILON_NONZERO, 1.0).unwrap(),
        ])
        .unwrap();
        assert_eq!(nz, ValueDirective::NonZeroUniform { ranges: expected });
        assert!(nonzero_holds(&nz, DataType::F32));
        assert!(!nonzero_holds(&d, DataType::F32));
    }

    #[test]
    fn nonzero_normal_resamples() {
        let nz = enforce_nonzero(&ValueDirective::Normal, DataType::F64);
        assert_eq!(nz, ValueDirective::NonZeroNormal { epsilon: EPSILON_NONZERO });
        let mut rng = RandomSource::new(11);
        for _ in 0..10_000 {
            assert!(sample_value(&nz, DataType::F64, &mut rng).unwrap().abs() >= EPSILON_NONZERO);
        }
    }

    #[test]
    fn nonzero_integer_range_excludes_zero() {
        let d = ValueDirective::UniformInRanges { ranges: ValueRanges::single(0.0, 3.0).unwrap() };
        let nz = enforce_nonzero(&d, DataType::I32);
        // the sample space is exactly {1, 2, 3}
        let mut rng = RandomSource::new(5);
        let mut seen = BTreeSet::new();
        for _ in 0..10_000 {
            seen.insert(sample_value(&nz, DataType::I32, &mut rng).unwrap() as i64);
        }
        assert_eq!(seen, BTreeSet::from([1, 2, 3]));
    }

    #[test]
    fn nonzero_is_idempotent() {
        for dtype in [DataType::F32, DataType::I8, DataType::Bool] {
            let d = ValueDirective::UniformInRanges { ranges: ValueRanges::single(-4.0, 4.0).unwrap() };
            let once = enforce_nonzero(&d, dtype);
            assert_eq!(enforce_nonzero(&once, dtype), once);
        }
    }

    #[test]
    fn fit_volume_respects_cap() {
        let mut rng = RandomSource::new(2);
        let mut shape = vec![24, 24, 24, 24];
        fit_volume(&mut shape, &[1], &mut rng);
        assert!(shape.iter().product::<usize>() <= VOLUME_CAP);
        assert_eq!(shape[1], 24);
    }
}
