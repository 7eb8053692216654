//! Domain types shared by the parser, the generator and the emitters.
//!
//! An [`OperatorSpec`] is the in-memory form of one `.osl` file. A
//! [`TestCase`] is one fully resolved invocation of that operator: every
//! attribute has a concrete value and every input has a dtype, a shape and a
//! seeded value directive from which the concrete tensor is re-materialized.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Element type of a tensor or attribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum DataType {
    F16,
    F32,
    F64,
    I8,
    I16,
    I32,
    I64,
    U8,
    U16,
    U32,
    U64,
    Bool,
    String,
    Complex64,
    Complex128,
}

impl DataType {
    pub const ALL: [DataType; 15] = [
        DataType::F16,
        DataType::F32,
        DataType::F64,
        DataType::I8,
        DataType::I16,
        DataType::I32,
        DataType::I64,
        DataType::U8,
        DataType::U16,
        DataType::U32,
        DataType::U64,
        DataType::Bool,
        DataType::String,
        DataType::Complex64,
        DataType::Complex128,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            DataType::F16 => "f16",
            DataType::F32 => "f32",
            DataType::F64 => "f64",
            DataType::I8 => "i8",
            DataType::I16 => "i16",
            DataType::I32 => "i32",
            DataType::I64 => "i64",
            DataType::U8 => "u8",
            DataType::U16 => "u16",
            DataType::U32 => "u32",
            DataType::U64 => "u64",
            DataType::Bool => "bool",
            DataType::String => "string",
            DataType::Complex64 => "complex64",
            DataType::Complex128 => "complex128",
        }
    }

    pub fn from_keyword(s: &str) -> Option<DataType> {
        DataType::ALL.iter().copied().find(|t| t.keyword() == s)
    }

    /// Width of one element in bytes; `None` for variable-width strings.
    pub fn byte_width(self) -> Option<usize> {
        match self {
            DataType::I8 | DataType::U8 | DataType::Bool => Some(1),
            DataType::F16 | DataType::I16 | DataType::U16 => Some(2),
            DataType::F32 | DataType::I32 | DataType::U32 => Some(4),
            DataType::F64 | DataType::I64 | DataType::U64 | DataType::Complex64 => Some(8),
            DataType::Complex128 => Some(16),
            DataType::String => None,
        }
    }

    pub fn is_float(self) -> bool {
        matches!(self, DataType::F16 | DataType::F32 | DataType::F64)
    }

    pub fn is_complex(self) -> bool {
        matches!(self, DataType::Complex64 | DataType::Complex128)
    }

    pub fn is_integer(self) -> bool {
        matches!(
            self,
            DataType::I8
                | DataType::I16
                | DataType::I32
                | DataType::I64
                | DataType::U8
                | DataType::U16
                | DataType::U32
                | DataType::U64
        )
    }

    /// Integer-valued element types, including bool.
    pub fn is_discrete(self) -> bool {
        self.is_integer() || self == DataType::Bool
    }

    /// Inclusive numeric limits of the type, `None` for strings.
    ///
    /// Complex types report the limits of their real component.
    pub fn numeric_limits(self) -> Option<(f64, f64)> {
        Some(match self {
            DataType::F16 => (-65504.0, 65504.0),
            DataType::F32 | DataType::Complex64 => (f32::MIN as f64, f32::MAX as f64),
            DataType::F64 | DataType::Complex128 => (f64::MIN, f64::MAX),
            DataType::I8 => (i8::MIN as f64, i8::MAX as f64),
            DataType::I16 => (i16::MIN as f64, i16::MAX as f64),
            DataType::I32 => (i32::MIN as f64, i32::MAX as f64),
            DataType::I64 => (i64::MIN as f64, i64::MAX as f64),
            DataType::U8 => (0.0, u8::MAX as f64),
            DataType::U16 => (0.0, u16::MAX as f64),
            DataType::U32 => (0.0, u32::MAX as f64),
            DataType::U64 => (0.0, u64::MAX as f64),
            DataType::Bool => (0.0, 1.0),
            DataType::String => return None,
        })
    }

    /// Name of the matching numpy dtype.
    pub fn numpy_name(self) -> &'static str {
        match self {
            DataType::F16 => "float16",
            DataType::F32 => "float32",
            DataType::F64 => "float64",
            DataType::I8 => "int8",
            DataType::I16 => "int16",
            DataType::I32 => "int32",
            DataType::I64 => "int64",
            DataType::U8 => "uint8",
            DataType::U16 => "uint16",
            DataType::U32 => "uint32",
            DataType::U64 => "uint64",
            DataType::Bool => "bool_",
            DataType::String => "object_",
            DataType::Complex64 => "complex64",
            DataType::Complex128 => "complex128",
        }
    }
}

impl fmt::Display for DataType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

impl From<DataType> for String {
    fn from(t: DataType) -> String {
        t.keyword().to_string()
    }
}

impl TryFrom<String> for DataType {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        DataType::from_keyword(&s).ok_or_else(|| format!("unknown data type `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Arity {
    Scalar,
    /// Rank-1 list of elements, spelled with a `_v1` suffix.
    Vector,
}

/// Attribute type token: element type plus arity (`f32` vs `f32_v1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct AttrType {
    pub element: DataType,
    pub arity: Arity,
}

impl AttrType {
    pub fn scalar(element: DataType) -> AttrType {
        AttrType { element, arity: Arity::Scalar }
    }

    pub fn vector(element: DataType) -> AttrType {
        AttrType { element, arity: Arity::Vector }
    }
}

impl fmt::Display for AttrType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.arity {
            Arity::Scalar => write!(f, "{}", self.element),
            Arity::Vector => write!(f, "{}_v1", self.element),
        }
    }
}

impl FromStr for AttrType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (base, arity) = match s.strip_suffix("_v1") {
            Some(base) => (base, Arity::Vector),
            None => (s, Arity::Scalar),
        };
        DataType::from_keyword(base)
            .map(|element| AttrType { element, arity })
            .ok_or_else(|| format!("unknown attribute type `{s}`"))
    }
}

impl From<AttrType> for String {
    fn from(t: AttrType) -> String {
        t.to_string()
    }
}

impl TryFrom<String> for AttrType {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// One inclusive `[min, max]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct ValueRange {
    min: f64,
    max: f64,
}

impl ValueRange {
    pub fn new(min: f64, max: f64) -> Result<ValueRange, RangeError> {
        if !min.is_finite() || !max.is_finite() {
            return Err(RangeError::NotFinite);
        }
        if min > max {
            return Err(RangeError::Inverted { min, max });
        }
        Ok(ValueRange { min, max })
    }

    /// Degenerate range holding exactly one value.
    pub fn point(v: f64) -> Result<ValueRange, RangeError> {
        ValueRange::new(v, v)
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn contains(&self, v: f64) -> bool {
        self.min <= v && v <= self.max
    }

    /// Integer sub-range `[ceil(min), floor(max)]`, if any integer lies inside.
    pub fn integer_bounds(&self) -> Option<(i64, i64)> {
        let lo = self.min.ceil();
        let hi = self.max.floor();
        if lo > hi {
            return None;
        }
        Some((lo.max(i64::MIN as f64) as i64, hi.min(i64::MAX as f64) as i64))
    }
}

impl From<ValueRange> for [f64; 2] {
    fn from(r: ValueRange) -> [f64; 2] {
        [r.min, r.max]
    }
}

impl TryFrom<[f64; 2]> for ValueRange {
    type Error = RangeError;

    fn try_from(v: [f64; 2]) -> Result<Self, Self::Error> {
        ValueRange::new(v[0], v[1])
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RangeError {
    #[error("range bounds must be finite")]
    NotFinite,
    #[error("range minimum {min} exceeds maximum {max}")]
    Inverted { min: f64, max: f64 },
    #[error("min_val_list has {min_len} entries but max_val_list has {max_len}")]
    LengthMismatch { min_len: usize, max_len: usize },
    #[error("value range list is empty")]
    Empty,
}

/// Union of discrete value ranges; a value is valid iff some pair contains it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ValueRange>", into = "Vec<ValueRange>")]
pub struct ValueRanges(Vec<ValueRange>);

impl ValueRanges {
    pub fn new(ranges: Vec<ValueRange>) -> Result<ValueRanges, RangeError> {
        if ranges.is_empty() {
            return Err(RangeError::Empty);
        }
        Ok(ValueRanges(ranges))
    }

    /// Pairs up equal-length `min_val_list` / `max_val_list` entries.
    pub fn from_lists(mins: &[f64], maxs: &[f64]) -> Result<ValueRanges, RangeError> {
        if mins.len() != maxs.len() {
            return Err(RangeError::LengthMismatch { min_len: mins.len(), max_len: maxs.len() });
        }
        let ranges = mins.iter().zip(maxs).map(|(&lo, &hi)| ValueRange::new(lo, hi)).collect::<Result<Vec<_>, _>>()?;
        ValueRanges::new(ranges)
    }

    pub fn single(min: f64, max: f64) -> Result<ValueRanges, RangeError> {
        ValueRanges::new(vec![ValueRange::new(min, max)?])
    }

    pub fn ranges(&self) -> &[ValueRange] {
        &self.0
    }

    pub fn contains(&self, v: f64) -> bool {
        self.0.iter().any(|r| r.contains(v))
    }

    pub fn mins(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().map(|r| r.min)
    }

    pub fn maxs(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().map(|r| r.max)
    }

    pub fn is_subset_of(&self, other: &ValueRanges) -> bool {
        self.0.iter().all(|r| other.0.iter().any(|o| o.min <= r.min && r.max <= o.max))
    }
}

impl From<ValueRanges> for Vec<ValueRange> {
    fn from(r: ValueRanges) -> Vec<ValueRange> {
        r.0
    }
}

impl TryFrom<Vec<ValueRange>> for ValueRanges {
    type Error = RangeError;

    fn try_from(v: Vec<ValueRange>) -> Result<Self, Self::Error> {
        ValueRanges::new(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeSpec {
    pub name: String,
    pub types: Vec<AttrType>,
    /// Kept as text; coerced against the chosen type at generation time.
    pub default_value: Option<String>,
    pub value_ranges: Option<ValueRanges>,
}

/// Position of a tensor operand in the operator signature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TensorIndex {
    Position(u32),
    /// Written `-1`: several tensors concatenated into one logical operand.
    Variadic,
}

impl TensorIndex {
    pub fn from_raw(raw: i64) -> Option<TensorIndex> {
        match raw {
            -1 => Some(TensorIndex::Variadic),
            0.. if raw <= u32::MAX as i64 => Some(TensorIndex::Position(raw as u32)),
            _ => None,
        }
    }

    pub fn raw(self) -> i64 {
        match self {
            TensorIndex::Position(p) => p as i64,
            TensorIndex::Variadic => -1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorSpec {
    pub index: TensorIndex,
    pub types: Vec<DataType>,
    pub min_dim: usize,
    pub max_dim: usize,
    pub value_ranges: Option<ValueRanges>,
    pub axis_bound: bool,
    pub optional: bool,
    pub normal_distribution: bool,
}

impl TensorSpec {
    pub const DEFAULT_MIN_DIM: usize = 0;
    pub const DEFAULT_MAX_DIM: usize = 4;

    /// Tensor spec with every optional field at its default.
    pub fn new(index: TensorIndex, types: Vec<DataType>) -> TensorSpec {
        TensorSpec {
            index,
            types,
            min_dim: Self::DEFAULT_MIN_DIM,
            max_dim: Self::DEFAULT_MAX_DIM,
            value_ranges: None,
            axis_bound: false,
            optional: false,
            normal_distribution: false,
        }
    }

    pub fn is_variadic(&self) -> bool {
        self.index == TensorIndex::Variadic
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ImplicitProperty {
    MultidirectionalBroadcast,
    UnidirectionalBroadcast,
    NonZero,
}

impl ImplicitProperty {
    pub const ALL: [ImplicitProperty; 3] = [
        ImplicitProperty::MultidirectionalBroadcast,
        ImplicitProperty::UnidirectionalBroadcast,
        ImplicitProperty::NonZero,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            ImplicitProperty::MultidirectionalBroadcast => "MultidirectionalBroadcast",
            ImplicitProperty::UnidirectionalBroadcast => "UnidirectionalBroadcast",
            ImplicitProperty::NonZero => "NonZero",
        }
    }

    pub fn from_keyword(s: &str) -> Option<ImplicitProperty> {
        ImplicitProperty::ALL.iter().copied().find(|p| p.keyword() == s)
    }

    pub fn is_broadcast(self) -> bool {
        !matches!(self, ImplicitProperty::NonZero)
    }
}

/// Parsed form of one `.osl` document.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSpec {
    /// Prefix of generated test names.
    pub op_name: String,
    pub op_code: String,
    /// When set, inputs with identical type lists always share one sampled dtype.
    pub type_tied: bool,
    pub attributes: Vec<AttributeSpec>,
    pub inputs: Vec<TensorSpec>,
    pub outputs: Vec<TensorSpec>,
    pub properties: BTreeSet<ImplicitProperty>,
}

impl OperatorSpec {
    pub fn has(&self, p: ImplicitProperty) -> bool {
        self.properties.contains(&p)
    }

    pub fn attribute(&self, name: &str) -> Option<&AttributeSpec> {
        self.attributes.iter().find(|a| a.name == name)
    }

    /// Canonical ONNX operator name for `op_code`, if it is known.
    pub fn onnx_op(&self) -> Option<&'static str> {
        crate::onnx::resolve(&self.op_code)
    }

    /// `op_name` lowered into the `test_<name>_<n>` naming scheme.
    pub fn test_prefix(&self) -> String {
        let lowered: String = self
            .op_name
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
            .collect();
        format!("test_{lowered}")
    }
}

/// A single attribute element value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
}

impl Scalar {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Scalar::Bool(b) => Some(if *b { 1.0 } else { 0.0 }),
            Scalar::Int(i) => Some(*i as f64),
            Scalar::Float(x) => Some(*x),
            Scalar::Str(_) => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self {
            Scalar::Bool(b) => Some(*b as i64),
            Scalar::Int(i) => Some(*i),
            Scalar::Float(x) if x.fract() == 0.0 => Some(*x as i64),
            _ => None,
        }
    }

    /// Converts into the representation used for `element`, if possible.
    pub fn coerce(&self, element: DataType) -> Option<Scalar> {
        match element {
            DataType::String => match self {
                Scalar::Str(s) => Some(Scalar::Str(s.clone())),
                _ => None,
            },
            DataType::Bool => match self.as_f64()? {
                0.0 => Some(Scalar::Bool(false)),
                1.0 => Some(Scalar::Bool(true)),
                _ => None,
            },
            t if t.is_integer() => {
                let v = self.as_i64()?;
                let (lo, hi) = t.numeric_limits()?;
                ((v as f64) >= lo && (v as f64) <= hi).then_some(Scalar::Int(v))
            }
            _ => self.as_f64().map(Scalar::Float),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttrPayload {
    Scalar(Scalar),
    Vector(Vec<Scalar>),
}

impl AttrPayload {
    pub fn elements(&self) -> &[Scalar] {
        match self {
            AttrPayload::Scalar(s) => std::slice::from_ref(s),
            AttrPayload::Vector(v) => v,
        }
    }
}

/// Concrete attribute value together with the type it was drawn for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributeValue {
    #[serde(rename = "type")]
    pub ty: AttrType,
    pub value: AttrPayload,
}

impl AttributeValue {
    pub fn scalar_i64(&self) -> Option<i64> {
        match &self.value {
            AttrPayload::Scalar(s) => s.as_i64(),
            AttrPayload::Vector(_) => None,
        }
    }

    pub fn int_elements(&self) -> Option<Vec<i64>> {
        self.value.elements().iter().map(Scalar::as_i64).collect()
    }
}

/// Coerces a textual default value to `ty`.
///
/// Vector types accept `"1, 2"` or `"[1, 2]"`.
pub fn coerce_default(text: &str, ty: AttrType) -> Option<AttrPayload> {
    fn one(text: &str, element: DataType) -> Option<Scalar> {
        let t = text.trim();
        match element {
            DataType::String => Some(Scalar::Str(t.to_string())),
            DataType::Bool => match t {
                "true" | "1" => Some(Scalar::Bool(true)),
                "false" | "0" => Some(Scalar::Bool(false)),
                _ => None,
            },
            e if e.is_integer() => {
                let v: f64 = t.parse().ok()?;
                if !v.is_finite() {
                    return None;
                }
                Scalar::Float(v.trunc()).coerce(e)
            }
            _ => t.parse::<f64>().ok().filter(|v| v.is_finite()).map(Scalar::Float),
        }
    }
    match ty.arity {
        Arity::Scalar => one(text, ty.element).map(AttrPayload::Scalar),
        Arity::Vector => {
            let body = text.trim();
            let body = body.strip_prefix('[').and_then(|b| b.strip_suffix(']')).unwrap_or(body).trim();
            if body.is_empty() {
                return Some(AttrPayload::Vector(Vec::new()));
            }
            body.split(',').map(|part| one(part, ty.element)).collect::<Option<Vec<_>>>().map(AttrPayload::Vector)
        }
    }
}

/// How the concrete values of an input tensor are drawn from its seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ValueDirective {
    /// Standard normal (mean 0, standard deviation 1).
    Normal,
    /// A range pair is chosen uniformly, then a value uniformly inside it.
    UniformInRanges { ranges: ValueRanges },
    /// As `UniformInRanges`, with ranges already split to exclude zero.
    NonZeroUniform { ranges: ValueRanges },
    /// Standard normal, resampled while `|v| < epsilon`.
    NonZeroNormal { epsilon: f64 },
    /// Alphanumeric strings of length `0..=max_len`.
    AlphanumericStrings { max_len: usize },
}

/// Input instance of one test case. Variadic operands expand to several
/// instances sharing a `source`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputInstance {
    /// Position of the originating [`TensorSpec`] in `OperatorSpec::inputs`.
    pub source: usize,
    pub dtype: DataType,
    pub shape: Vec<usize>,
    pub directive: ValueDirective,
    pub seed: u64,
    pub omitted: bool,
}

impl InputInstance {
    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn volume(&self) -> usize {
        self.shape.iter().product()
    }
}

/// Boundary condition a test case was forced to stress.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCategory {
    RankMin,
    RankMax,
    DimLengthOne,
    ValueRangeMin,
    ValueRangeMax,
}

impl BoundaryCategory {
    pub const ALL: [BoundaryCategory; 5] = [
        BoundaryCategory::RankMin,
        BoundaryCategory::RankMax,
        BoundaryCategory::DimLengthOne,
        BoundaryCategory::ValueRangeMin,
        BoundaryCategory::ValueRangeMax,
    ];
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestCase {
    pub name: String,
    pub attributes: BTreeMap<String, AttributeValue>,
    pub inputs: Vec<InputInstance>,
    pub boundary: Option<BoundaryCategory>,
}

impl TestCase {
    pub fn omitted_optional_inputs(&self) -> BTreeSet<usize> {
        self.inputs.iter().filter(|i| i.omitted).map(|i| i.source).collect()
    }

    /// Instances belonging to the declared input at `source`.
    pub fn instances_of(&self, source: usize) -> impl Iterator<Item = &InputInstance> {
        self.inputs.iter().filter(move |i| i.source == source)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_type_has_width_or_is_variable() {
        for t in DataType::ALL {
            assert_eq!(t.byte_width().is_none(), t == DataType::String, "{t}");
            assert_eq!(DataType::from_keyword(t.keyword()), Some(t));
        }
    }

    #[test]
    fn attr_type_tokens() {
        assert_eq!("f32_v1".parse::<AttrType>().unwrap(), AttrType::vector(DataType::F32));
        assert_eq!("i64".parse::<AttrType>().unwrap(), AttrType::scalar(DataType::I64));
        assert!("f33".parse::<AttrType>().is_err());
    }

    #[test]
    fn ranges_membership() {
        let r = ValueRanges::from_lists(&[20.0, 50.0, 90.0], &[30.0, 60.0, 120.0]).unwrap();
        assert!(r.contains(25.0));
        assert!(r.contains(120.0));
        assert!(!r.contains(40.0));
        assert!(matches!(
            ValueRanges::from_lists(&[20.0, 50.0, 90.0], &[30.0, 60.0]),
            Err(RangeError::LengthMismatch { min_len: 3, max_len: 2 })
        ));
        assert!(ValueRange::new(2.0, 1.0).is_err());
    }

    #[test]
    fn default_coercion() {
        assert_eq!(coerce_default("1", AttrType::scalar(DataType::F32)), Some(AttrPayload::Scalar(Scalar::Float(1.0))));
        assert_eq!(coerce_default("1", AttrType::scalar(DataType::I32)), Some(AttrPayload::Scalar(Scalar::Int(1))));
        assert_eq!(
            coerce_default("[0, 2]", AttrType::vector(DataType::I64)),
            Some(AttrPayload::Vector(vec![Scalar::Int(0), Scalar::Int(2)]))
        );
        assert_eq!(coerce_default("300", AttrType::scalar(DataType::U8)), None);
        assert_eq!(coerce_default("abc", AttrType::scalar(DataType::F32)), None);
    }

    #[test]
    fn test_prefix_is_lowered() {
        let spec = OperatorSpec {
            op_name: "DepthToSpaceTest".into(),
            op_code: "op_depth_to_space".into(),
            type_tied: false,
            attributes: vec![],
            inputs: vec![],
            outputs: vec![],
            properties: BTreeSet::new(),
        };
        assert_eq!(spec.test_prefix(), "test_depthtospacetest");
    }
}
