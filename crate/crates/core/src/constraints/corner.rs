//! Operator-specific structural constraints that OSL does not express.
//!
//! | operator | constraint |
//! |---|---|
//! | DepthToSpace | channels divisible by `blocksize²` |
//! | BatchNormalization | scale, bias, mean, var are rank-1 of length C |
//! | Compress | condition is rank-1, no longer than the selected axis |
//! | Concat | equal ranks, equal dims except along `axis` |
//! | Gemm | A (M,K), B (K,N), C unidirectionally broadcastable to (M,N) |
//! | MatMul | inner dims agree, batch dims broadcast |
//! | Conv | W rank = X rank, W channels = C/group, kernel fits the input |
//! | OneHot | depth ≥ 1, indices in [-depth, depth-1] |
//! | Squeeze | every listed axis has length 1 |
//! | LRN | size is a positive odd integer |
//!
//! Repairs only touch the offending dimensions; ranks and dtypes chosen by
//! the generator are kept.

use std::collections::BTreeMap;

use crate::model::{AttrPayload, AttributeValue, OperatorSpec, Scalar, ValueDirective, ValueRanges};
use crate::rng::RandomSource;

use super::{
    fit_volume, multidirectional_broadcast_shape, unidirectional_broadcastable, CandidateAssignment, ConstraintError,
    MAX_DIM_LENGTH,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CornerCase {
    DepthToSpace,
    BatchNorm,
    Compress,
    Concat,
    Gemm,
    MatMul,
    Conv,
    OneHot,
    Squeeze,
    Lrn,
}

type Check = Result<(), String>;

fn fail<T>(reason: impl Into<String>) -> Result<T, String> {
    Err(reason.into())
}

/// Normalizes a possibly negative axis against `rank`.
fn normalize_axis(axis: i64, rank: usize) -> Option<usize> {
    let r = rank as i64;
    let a = if axis < 0 { axis + r } else { axis };
    (0..r).contains(&a).then_some(a as usize)
}

fn int_attr(attrs: &BTreeMap<String, AttributeValue>, name: &str) -> Option<i64> {
    attrs.get(name).and_then(AttributeValue::scalar_i64)
}

fn ints_attr(attrs: &BTreeMap<String, AttributeValue>, name: &str) -> Option<Vec<i64>> {
    attrs.get(name).and_then(AttributeValue::int_elements)
}

/// Smallest rank for which every axis in `axes` is addressable.
fn rank_for_axes(axes: impl IntoIterator<Item = i64>) -> usize {
    axes.into_iter().map(|a| if a >= 0 { a as usize + 1 } else { a.unsigned_abs() as usize }).max().unwrap_or(0)
}

/// `(rows, cols)` positions of a 2-D operand, honouring a transpose flag.
fn gemm_dims(shape: &[usize], transposed: bool) -> (usize, usize) {
    if transposed {
        (shape[1], shape[0])
    } else {
        (shape[0], shape[1])
    }
}

impl CornerCase {
    pub fn for_spec(spec: &OperatorSpec) -> Option<CornerCase> {
        Some(match spec.onnx_op()? {
            "DepthToSpace" => CornerCase::DepthToSpace,
            "BatchNormalization" => CornerCase::BatchNorm,
            "Compress" => CornerCase::Compress,
            "Concat" => CornerCase::Concat,
            "Gemm" => CornerCase::Gemm,
            "MatMul" => CornerCase::MatMul,
            "Conv" => CornerCase::Conv,
            "OneHot" => CornerCase::OneHot,
            "Squeeze" => CornerCase::Squeeze,
            "LRN" => CornerCase::Lrn,
            _ => return None,
        })
    }

    /// Rank bounds the rule imposes on spec input `source`.
    pub fn rank_hint(
        self,
        source: usize,
        attrs: &BTreeMap<String, AttributeValue>,
        earlier: &[Option<usize>],
    ) -> (usize, usize) {
        let any = (0, usize::MAX);
        let earlier_rank = |k: usize| earlier.get(k).copied().flatten();
        match (self, source) {
            (CornerCase::DepthToSpace, 0) => (2, usize::MAX),
            (CornerCase::BatchNorm, 0) => (2, usize::MAX),
            (CornerCase::BatchNorm, 1..=4) => (1, 1),
            (CornerCase::Compress, 0) => match int_attr(attrs, "axis") {
                Some(a) => (rank_for_axes([a]), usize::MAX),
                None => any,
            },
            (CornerCase::Compress, 1) => (1, 1),
            (CornerCase::Concat, _) => {
                let lo = int_attr(attrs, "axis").map_or(1, |a| rank_for_axes([a]).max(1));
                (lo, usize::MAX)
            }
            (CornerCase::Gemm, 0 | 1) => (2, 2),
            (CornerCase::Gemm, 2) => (0, 2),
            (CornerCase::MatMul, 0 | 1) => (1, usize::MAX),
            (CornerCase::Conv, 0) => match ints_attr(attrs, "kernel_shape") {
                Some(k) => (k.len() + 2, k.len() + 2),
                None => (3, usize::MAX),
            },
            (CornerCase::Conv, 1) => match earlier_rank(0) {
                Some(r) => (r, r),
                None => (3, usize::MAX),
            },
            (CornerCase::Conv, 2) => (1, 1),
            (CornerCase::OneHot, 1) => (0, 1),
            (CornerCase::OneHot, 2) => (1, 1),
            (CornerCase::Squeeze, 0) => match ints_attr(attrs, "axes") {
                Some(axes) => (rank_for_axes(axes).max(1), usize::MAX),
                None => any,
            },
            _ => any,
        }
    }

    /// `Ok(())` iff the candidate satisfies the rule.
    pub fn check(self, cand: &CandidateAssignment) -> Check {
        match self {
            CornerCase::DepthToSpace => {
                let Some(x) = cand.shape(0) else { return fail("missing input") };
                let b = cand.int_attr("blocksize").ok_or("missing blocksize")?;
                if b < 1 {
                    return fail(format!("blocksize {b} < 1"));
                }
                if x.len() < 2 {
                    return fail("input has no channel axis");
                }
                let bb = (b as u64).saturating_mul(b as u64);
                if !(x[1] as u64).is_multiple_of(bb) {
                    return fail(format!("channels {} not divisible by blocksize² = {bb}", x[1]));
                }
                Ok(())
            }
            CornerCase::BatchNorm => {
                let Some(x) = cand.shape(0) else { return fail("missing input") };
                if x.len() < 2 {
                    return fail("input has no channel axis");
                }
                for s in 1..=4 {
                    if let Some(p) = cand.shape(s) {
                        if p != [x[1]] {
                            return fail(format!("input {s} has shape {p:?}, expected [{}]", x[1]));
                        }
                    }
                }
                Ok(())
            }
            CornerCase::Compress => {
                let (Some(x), Some(c)) = (cand.shape(0), cand.shape(1)) else {
                    return fail("missing input");
                };
                let bound = match cand.int_attr("axis") {
                    Some(a) => match normalize_axis(a, x.len()) {
                        Some(k) => x[k],
                        None => return fail(format!("axis {a} out of range for rank {}", x.len())),
                    },
                    None => x.iter().product(),
                };
                if c.len() != 1 || c[0] > bound {
                    return fail(format!("condition {c:?} does not fit length {bound}"));
                }
                Ok(())
            }
            CornerCase::Concat => {
                let shapes: Vec<&[usize]> = cand.present().map(|i| i.shape.as_slice()).collect();
                let Some(first) = shapes.first() else { return fail("no inputs") };
                let axis = cand.int_attr("axis").ok_or("missing axis")?;
                let Some(k) = normalize_axis(axis, first.len()) else {
                    return fail(format!("axis {axis} out of range for rank {}", first.len()));
                };
                for s in &shapes[1..] {
                    if s.len() != first.len() {
                        return fail("inputs differ in rank");
                    }
                    if s.iter().zip(first.iter()).enumerate().any(|(j, (a, b))| j != k && a != b) {
                        return fail(format!("{s:?} and {first:?} differ off axis {k}"));
                    }
                }
                Ok(())
            }
            CornerCase::Gemm => {
                let (Some(a), Some(b)) = (cand.shape(0), cand.shape(1)) else {
                    return fail("missing input");
                };
                if a.len() != 2 || b.len() != 2 {
                    return fail("A and B must be matrices");
                }
                let (m, ka) = gemm_dims(a, cand.int_attr("transA").unwrap_or(0) != 0);
                let (kb, n) = gemm_dims(b, cand.int_attr("transB").unwrap_or(0) != 0);
                if ka != kb {
                    return fail(format!("inner dimensions {ka} and {kb} differ"));
                }
                if let Some(c) = cand.shape(2) {
                    if !unidirectional_broadcastable(&[m, n], c) {
                        return fail(format!("C {c:?} does not broadcast to [{m}, {n}]"));
                    }
                }
                Ok(())
            }
            CornerCase::MatMul => {
                let (Some(a), Some(b)) = (cand.shape(0), cand.shape(1)) else {
                    return fail("missing input");
                };
                if a.is_empty() || b.is_empty() {
                    return fail("operands must have rank ≥ 1");
                }
                let ka = a[a.len() - 1];
                let kb = if b.len() == 1 { b[0] } else { b[b.len() - 2] };
                if ka != kb {
                    return fail(format!("inner dimensions {ka} and {kb} differ"));
                }
                let batch_a = &a[..a.len().saturating_sub(2)];
                let batch_b = &b[..b.len().saturating_sub(2)];
                multidirectional_broadcast_shape(batch_a, batch_b).map_err(|e| e.to_string())?;
                Ok(())
            }
            CornerCase::Conv => {
                let (Some(x), Some(w)) = (cand.shape(0), cand.shape(1)) else {
                    return fail("missing input");
                };
                if x.len() < 3 || w.len() != x.len() {
                    return fail(format!("X rank {} and W rank {} must match and be ≥ 3", x.len(), w.len()));
                }
                let g = cand.int_attr("group").unwrap_or(1);
                if g < 1 {
                    return fail(format!("group {g} < 1"));
                }
                let g = g as usize;
                if x[1] % g != 0 || w[1] != x[1] / g || w[0] % g != 0 {
                    return fail(format!("channels of X {x:?} / W {w:?} do not match group {g}"));
                }
                let spatial = x.len() - 2;
                if let Some(k) = cand.ints_attr("kernel_shape") {
                    if k.len() != spatial || k.iter().zip(&w[2..]).any(|(&a, &b)| a != b as i64) {
                        return fail("kernel_shape disagrees with W");
                    }
                }
                let dil = cand.ints_attr("dilations").unwrap_or_else(|| vec![1; spatial]);
                if dil.len() != spatial || dil.iter().any(|&d| d < 1) {
                    return fail("invalid dilations");
                }
                for j in 0..spatial {
                    let effective = (w[j + 2].saturating_sub(1)) * dil[j] as usize + 1;
                    if effective > x[j + 2] {
                        return fail(format!("kernel {} exceeds input {} on spatial axis {j}", w[j + 2], x[j + 2]));
                    }
                }
                if let Some(bias) = cand.shape(2) {
                    if bias != [w[0]] {
                        return fail(format!("bias {bias:?} must be [{}]", w[0]));
                    }
                }
                Ok(())
            }
            CornerCase::OneHot => {
                let Some(idx_slot) = cand.slot(0) else { return fail("missing indices") };
                let Some(depth_slot) = cand.slot(1) else { return fail("missing depth") };
                let depth = &cand.inputs[depth_slot];
                if depth.volume() != 1 {
                    return fail(format!("depth must hold one element, has shape {:?}", depth.shape));
                }
                let d = match &depth.directive {
                    ValueDirective::UniformInRanges { ranges } if ranges.ranges().len() == 1 => {
                        let r = ranges.ranges()[0];
                        if r.min() != r.max() || r.min().fract() != 0.0 || r.min() < 1.0 {
                            return fail("depth must be a fixed integer ≥ 1");
                        }
                        r.min()
                    }
                    _ => return fail("depth must be a fixed integer ≥ 1"),
                };
                let allowed = ValueRanges::single(-d, d - 1.0).unwrap();
                match &cand.inputs[idx_slot].directive {
                    ValueDirective::UniformInRanges { ranges } if ranges.is_subset_of(&allowed) => {}
                    _ => return fail(format!("indices must lie in [{}, {}]", -d, d - 1.0)),
                }
                if let Some(values) = cand.shape(2) {
                    if values != [2] {
                        return fail(format!("values must have shape [2], has {values:?}"));
                    }
                }
                if let Some(axis) = cand.int_attr("axis") {
                    let r = cand.inputs[idx_slot].rank() as i64;
                    if axis < -r - 1 || axis > r {
                        return fail(format!("axis {axis} out of range for rank {r}"));
                    }
                }
                Ok(())
            }
            CornerCase::Squeeze => {
                let Some(x) = cand.shape(0) else { return fail("missing input") };
                let Some(axes) = cand.ints_attr("axes") else { return Ok(()) };
                let mut seen = Vec::new();
                for a in axes {
                    let Some(k) = normalize_axis(a, x.len()) else {
                        return fail(format!("axis {a} out of range for rank {}", x.len()));
                    };
                    if seen.contains(&k) {
                        return fail(format!("axis {a} listed twice"));
                    }
                    seen.push(k);
                    if x[k] != 1 {
                        return fail(format!("axis {a} has length {}", x[k]));
                    }
                }
                Ok(())
            }
            CornerCase::Lrn => match cand.int_attr("size") {
                Some(s) if s >= 1 && s % 2 == 1 => Ok(()),
                Some(s) => fail(format!("size {s} is not a positive odd integer")),
                None => fail("missing size"),
            },
        }
    }

    fn repair(
        self,
        op: &str,
        mut cand: CandidateAssignment,
        rng: &mut RandomSource,
    ) -> Result<CandidateAssignment, ConstraintError> {
        let stuck = |reason: String| ConstraintError::Unrepairable { op: op.to_string(), reason };
        match self {
            CornerCase::DepthToSpace => {
                let b = cand
                    .int_attr("blocksize")
                    .filter(|b| (1..=1 << 15).contains(b))
                    .ok_or_else(|| stuck("blocksize must be a positive integer".into()))?
                    as usize;
                let slot = cand.slot(0).ok_or_else(|| stuck("missing input".into()))?;
                let shape = &mut cand.inputs[slot].shape;
                if shape.len() < 2 {
                    return Err(stuck("input has no channel axis".into()));
                }
                let bb = b * b;
                let k_max = (MAX_DIM_LENGTH / bb).max(1);
                shape[1] = bb * rng.range_usize(1, k_max);
                fit_volume(shape, &[1], rng);
            }
            CornerCase::BatchNorm => {
                let x = cand.shape(0).ok_or_else(|| stuck("missing input".into()))?;
                if x.len() < 2 {
                    return Err(stuck("input has no channel axis".into()));
                }
                let c = x[1];
                for s in 1..=4 {
                    if let Some(slot) = cand.slot(s) {
                        cand.inputs[slot].shape = vec![c];
                    }
                }
            }
            CornerCase::Compress => {
                let x = cand.shape(0).ok_or_else(|| stuck("missing input".into()))?.to_vec();
                let slot = cand.slot(1).ok_or_else(|| stuck("missing condition".into()))?;
                let bound = match cand.int_attr("axis") {
                    Some(a) => x[normalize_axis(a, x.len()).ok_or_else(|| stuck(format!("axis {a} out of range")))?],
                    None => x.iter().product(),
                };
                cand.inputs[slot].shape = vec![rng.range_usize(1, bound.clamp(1, MAX_DIM_LENGTH))];
            }
            CornerCase::Concat => {
                let first = cand.present().next().ok_or_else(|| stuck("no inputs".into()))?.shape.clone();
                let axis = cand.int_attr("axis").ok_or_else(|| stuck("missing axis".into()))?;
                let k = normalize_axis(axis, first.len()).ok_or_else(|| stuck(format!("axis {axis} out of range")))?;
                for inst in cand.inputs.iter_mut().filter(|i| !i.omitted) {
                    if inst.shape.len() != first.len() {
                        return Err(stuck("inputs differ in rank".into()));
                    }
                    for (j, d) in inst.shape.iter_mut().enumerate() {
                        if j != k {
                            *d = first[j];
                        }
                    }
                    let keep: Vec<usize> = (0..first.len()).filter(|&j| j != k).collect();
                    fit_volume(&mut inst.shape, &keep, rng);
                }
            }
            CornerCase::Gemm => {
                let (Some(sa), Some(sb)) = (cand.slot(0), cand.slot(1)) else {
                    return Err(stuck("missing input".into()));
                };
                if cand.inputs[sa].rank() != 2 || cand.inputs[sb].rank() != 2 {
                    return Err(stuck("A and B must be matrices".into()));
                }
                let ta = cand.int_attr("transA").unwrap_or(0) != 0;
                let tb = cand.int_attr("transB").unwrap_or(0) != 0;
                let (m, k) = gemm_dims(&cand.inputs[sa].shape, ta);
                let b = &mut cand.inputs[sb].shape;
                b[if tb { 1 } else { 0 }] = k;
                let (_, n) = gemm_dims(b, tb);
                if let Some(sc) = cand.slot(2) {
                    let c = &mut cand.inputs[sc].shape;
                    if c.len() > 2 {
                        return Err(stuck(format!("C rank {} exceeds 2", c.len())));
                    }
                    let target = [m, n];
                    let len = c.len();
                    for (j, d) in c.iter_mut().enumerate() {
                        let t = target[2 - len + j];
                        if *d != t && *d != 1 {
                            *d = t;
                        }
                    }
                }
            }
            CornerCase::MatMul => {
                let (Some(sa), Some(sb)) = (cand.slot(0), cand.slot(1)) else {
                    return Err(stuck("missing input".into()));
                };
                let a = cand.inputs[sa].shape.clone();
                if a.is_empty() || cand.inputs[sb].shape.is_empty() {
                    return Err(stuck("operands must have rank ≥ 1".into()));
                }
                let b = &mut cand.inputs[sb].shape;
                let kb = if b.len() == 1 { 0 } else { b.len() - 2 };
                b[kb] = a[a.len() - 1];
                let batch_a = &a[..a.len().saturating_sub(2)];
                let nb = b.len().saturating_sub(2);
                for (j, &da) in batch_a.iter().rev().enumerate().take(nb) {
                    let d = &mut b[nb - 1 - j];
                    if *d != da && *d != 1 && da != 1 {
                        *d = da;
                    }
                }
                // only N may shrink
                let keep: Vec<usize> = (0..b.len().saturating_sub(1)).collect();
                if b.len() >= 2 {
                    fit_volume(b, &keep, rng);
                }
            }
            CornerCase::Conv => {
                let (Some(sx), Some(sw)) = (cand.slot(0), cand.slot(1)) else {
                    return Err(stuck("missing input".into()));
                };
                let g = cand.int_attr("group").unwrap_or(1);
                if !(1..=MAX_DIM_LENGTH as i64).contains(&g) {
                    return Err(stuck(format!("group {g} out of range")));
                }
                let g = g as usize;
                let r = cand.inputs[sx].rank();
                if r < 3 || cand.inputs[sw].rank() != r {
                    return Err(stuck("X and W ranks must match and be ≥ 3".into()));
                }
                let spatial = r - 2;
                let kernel = cand.ints_attr("kernel_shape");
                let dil = cand.ints_attr("dilations").unwrap_or_else(|| vec![1; spatial]);
                if dil.len() != spatial || dil.iter().any(|&d| !(1..=MAX_DIM_LENGTH as i64).contains(&d)) {
                    return Err(stuck("invalid dilations".into()));
                }
                if let Some(k) = &kernel {
                    if k.len() != spatial || k.iter().any(|&v| !(1..=MAX_DIM_LENGTH as i64).contains(&v)) {
                        return Err(stuck("invalid kernel_shape".into()));
                    }
                }
                let x = &mut cand.inputs[sx].shape;
                if !x[1].is_multiple_of(g) {
                    x[1] = g * (x[1] / g).max(1);
                }
                let c = x[1];
                let mut w = cand.inputs[sw].shape.clone();
                w[1] = c / g;
                w[0] = w[0].div_ceil(g) * g;
                for j in 0..spatial {
                    let d = dil[j] as usize;
                    match &kernel {
                        Some(k) => {
                            w[j + 2] = k[j] as usize;
                            let effective = (w[j + 2] - 1) * d + 1;
                            let x = &mut cand.inputs[sx].shape;
                            x[j + 2] = x[j + 2].max(effective);
                        }
                        None => {
                            let xs = cand.inputs[sx].shape[j + 2];
                            let max_k = (xs - 1) / d + 1;
                            w[j + 2] = w[j + 2].min(max_k);
                        }
                    }
                }
                let m = w[0];
                cand.inputs[sw].shape = w;
                if let Some(sb) = cand.slot(2) {
                    cand.inputs[sb].shape = vec![m];
                }
            }
            CornerCase::OneHot => {
                let (Some(si), Some(sd)) = (cand.slot(0), cand.slot(1)) else {
                    return Err(stuck("missing input".into()));
                };
                let d = rng.range_usize(1, MAX_DIM_LENGTH) as f64;
                let depth = &mut cand.inputs[sd];
                for dim in depth.shape.iter_mut() {
                    *dim = 1;
                }
                depth.directive = ValueDirective::UniformInRanges { ranges: ValueRanges::single(d, d).unwrap() };
                let indices = &mut cand.inputs[si];
                let lo = if indices.dtype.numeric_limits().is_some_and(|(lo, _)| lo < 0.0) { -d } else { 0.0 };
                indices.directive =
                    ValueDirective::UniformInRanges { ranges: ValueRanges::single(lo, d - 1.0).unwrap() };
                if let Some(sv) = cand.slot(2) {
                    if cand.inputs[sv].rank() != 1 {
                        return Err(stuck("values must be rank-1".into()));
                    }
                    cand.inputs[sv].shape = vec![2];
                }
            }
            CornerCase::Squeeze => {
                if let Some(axes) = cand.ints_attr("axes") {
                    let mut unique = axes.clone();
                    unique.sort_unstable();
                    unique.dedup();
                    if unique != axes {
                        let ty = cand.attributes["axes"].ty;
                        cand.attributes.insert(
                            "axes".into(),
                            AttributeValue {
                                ty,
                                value: AttrPayload::Vector(unique.iter().map(|&a| Scalar::Int(a)).collect()),
                            },
                        );
                    }
                    let slot = cand.slot(0).ok_or_else(|| stuck("missing input".into()))?;
                    let shape = &mut cand.inputs[slot].shape;
                    for a in unique {
                        let k = normalize_axis(a, shape.len())
                            .ok_or_else(|| stuck(format!("axis {a} out of range for rank {}", shape.len())))?;
                        shape[k] = 1;
                    }
                }
            }
            CornerCase::Lrn => {
                let size = cand.int_attr("size").ok_or_else(|| stuck("missing size".into()))?;
                if size < 1 {
                    return Err(stuck(format!("size {size} < 1")));
                }
                if size % 2 == 0 {
                    let ty = cand.attributes["size"].ty;
                    cand.attributes.insert(
                        "size".into(),
                        AttributeValue { ty, value: AttrPayload::Scalar(Scalar::Int(size - 1)) },
                    );
                }
            }
        }
        Ok(cand)
    }
}

/// Applies the operator's corner-case rule, if it has one.
///
/// Candidates that already satisfy the rule are returned unchanged, so the
/// operation is idempotent.
pub fn apply_corner_case(
    spec: &OperatorSpec,
    cand: CandidateAssignment,
    rng: &mut RandomSource,
) -> Result<CandidateAssignment, ConstraintError> {
    let Some(rule) = CornerCase::for_spec(spec) else {
        return Ok(cand);
    };
    if rule.check(&cand).is_ok() {
        return Ok(cand);
    }
    let repaired = rule.repair(&spec.op_code, cand, rng)?;
    rule.check(&repaired).map_err(|reason| ConstraintError::Unrepairable { op: spec.op_code.clone(), reason })?;
    Ok(repaired)
}
