use std::collections::BTreeSet;

use crate::model::{
    Arity, AttrType, AttributeSpec, DataType, ImplicitProperty, OperatorSpec, TensorIndex, TensorSpec, ValueRanges,
};

use super::lexer::{Token, TokenKind};
use super::{ParseError, SourceSpan};

/// Largest rank bound accepted for `min_dim` / `max_dim`.
pub const MAX_RANK_BOUND: i64 = 64;

#[derive(Debug, Clone)]
enum Value {
    Int(i64),
    Float(f64),
    Str(String),
    Bool(bool),
    Type(AttrType),
    List(Vec<(Value, SourceSpan)>),
}

impl Value {
    fn describe(&self) -> String {
        match self {
            Value::Int(i) => format!("integer {i}"),
            Value::Float(x) => format!("number {x}"),
            Value::Str(s) => format!("string {s:?}"),
            Value::Bool(b) => format!("`{b}`"),
            Value::Type(t) => format!("type `{t}`"),
            Value::List(_) => "list".into(),
        }
    }
}

struct Field {
    name: String,
    name_span: SourceSpan,
    value: Value,
    value_span: SourceSpan,
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    fn span(&self) -> SourceSpan {
        match self.peek() {
            Some(t) => t.span.clone(),
            None => {
                self.tokens.last().map_or(SourceSpan::new(1, 1), |t| SourceSpan::new(t.span.line, t.span.column + 1))
            }
        }
    }

    fn found(&self) -> String {
        self.peek().map_or("end of input".to_string(), |t| t.kind.describe())
    }

    fn error(&self, expected: impl Into<String>) -> ParseError {
        ParseError::new(self.span(), expected, self.found())
    }

    fn next(&mut self) -> Option<&'a Token> {
        let t = self.tokens.get(self.pos)?;
        self.pos += 1;
        Some(t)
    }

    fn at(&self, kind: &TokenKind) -> bool {
        self.peek().is_some_and(|t| &t.kind == kind)
    }

    fn expect(&mut self, kind: TokenKind) -> Result<SourceSpan, ParseError> {
        if self.at(&kind) {
            Ok(self.next().unwrap().span.clone())
        } else {
            Err(self.error(kind.describe()))
        }
    }

    fn ident(&mut self) -> Result<(String, SourceSpan), ParseError> {
        match self.peek() {
            Some(Token { kind: TokenKind::Ident(s), span }) => {
                self.pos += 1;
                Ok((s.clone(), span.clone()))
            }
            _ => Err(self.error("identifier")),
        }
    }

    fn keyword(&mut self, word: &str) -> Result<SourceSpan, ParseError> {
        match self.peek() {
            Some(Token { kind: TokenKind::Ident(s), span }) if s == word => {
                self.pos += 1;
                Ok(span.clone())
            }
            _ => Err(self.error(format!("`{word}`"))),
        }
    }

    fn string(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(Token { kind: TokenKind::Str(s), .. }) => {
                self.pos += 1;
                Ok(s.clone())
            }
            _ => Err(self.error("string")),
        }
    }

    fn value(&mut self) -> Result<(Value, SourceSpan), ParseError> {
        let span = self.span();
        let v = match self.peek().map(|t| &t.kind) {
            Some(TokenKind::Int(i)) => Value::Int(*i),
            Some(TokenKind::Float(x)) => Value::Float(*x),
            Some(TokenKind::Str(s)) => Value::Str(s.clone()),
            Some(TokenKind::Bool(b)) => Value::Bool(*b),
            Some(TokenKind::Type(t)) => Value::Type(*t),
            Some(TokenKind::LBracket) => {
                self.pos += 1;
                let mut items = Vec::new();
                while !self.at(&TokenKind::RBracket) {
                    let (item, item_span) = self.scalar_value()?;
                    items.push((item, item_span));
                    if !self.at(&TokenKind::Comma) {
                        break;
                    }
                    self.pos += 1;
                }
                self.expect(TokenKind::RBracket)?;
                return Ok((Value::List(items), span));
            }
            _ => return Err(self.error("value")),
        };
        self.pos += 1;
        Ok((v, span))
    }

    fn scalar_value(&mut self) -> Result<(Value, SourceSpan), ParseError> {
        if self.at(&TokenKind::LBracket) {
            return Err(self.error("list element"));
        }
        self.value()
    }

    /// `Name < field = value, ... >`
    fn record(&mut self, head: &str) -> Result<(Vec<Field>, SourceSpan), ParseError> {
        let span = self.keyword(head)?;
        self.expect(TokenKind::LAngle)?;
        let mut fields: Vec<Field> = Vec::new();
        while !self.at(&TokenKind::RAngle) {
            let (name, name_span) = self.ident()?;
            if fields.iter().any(|f| f.name == name) {
                return Err(ParseError::new(name_span, format!("at most one `{name}` field"), "a duplicate"));
            }
            self.expect(TokenKind::Eq)?;
            let (value, value_span) = self.value()?;
            fields.push(Field { name, name_span, value, value_span });
            if !self.at(&TokenKind::Comma) {
                break;
            }
            self.pos += 1;
        }
        self.expect(TokenKind::RAngle)?;
        Ok((fields, span))
    }

    fn list_of<T>(&mut self, mut item: impl FnMut(&mut Self) -> Result<T, ParseError>) -> Result<Vec<T>, ParseError> {
        self.expect(TokenKind::LBracket)?;
        let mut out = Vec::new();
        while !self.at(&TokenKind::RBracket) {
            out.push(item(self)?);
            if !self.at(&TokenKind::Comma) {
                break;
            }
            self.pos += 1;
        }
        self.expect(TokenKind::RBracket)?;
        Ok(out)
    }
}

fn mismatch(f: &Field, expected: &str) -> ParseError {
    ParseError::new(f.value_span.clone(), expected, f.value.describe())
}

fn as_string(f: &Field) -> Result<String, ParseError> {
    match &f.value {
        Value::Str(s) => Ok(s.clone()),
        _ => Err(mismatch(f, "string")),
    }
}

fn as_bool(f: &Field) -> Result<bool, ParseError> {
    match &f.value {
        Value::Bool(b) => Ok(*b),
        _ => Err(mismatch(f, "`true` or `false`")),
    }
}

fn as_int(f: &Field) -> Result<i64, ParseError> {
    match &f.value {
        Value::Int(i) => Ok(*i),
        _ => Err(mismatch(f, "integer")),
    }
}

fn as_rank(f: &Field) -> Result<usize, ParseError> {
    match as_int(f)? {
        v @ 0..=MAX_RANK_BOUND => Ok(v as usize),
        _ => Err(mismatch(f, &format!("rank bound in [0, {MAX_RANK_BOUND}]"))),
    }
}

fn as_types(f: &Field) -> Result<Vec<(AttrType, SourceSpan)>, ParseError> {
    match &f.value {
        Value::List(items) => items
            .iter()
            .map(|(v, span)| match v {
                Value::Type(t) => Ok((*t, span.clone())),
                other => Err(ParseError::new(span.clone(), "type keyword", other.describe())),
            })
            .collect(),
        _ => Err(mismatch(f, "list of types")),
    }
}

fn as_numbers(f: &Field) -> Result<Vec<f64>, ParseError> {
    let Value::List(items) = &f.value else {
        return Err(mismatch(f, "list of values"));
    };
    items
        .iter()
        .map(|(v, span)| {
            let n = match v {
                Value::Int(i) => Some(*i as f64),
                Value::Float(x) => Some(*x),
                Value::Str(s) => s.trim().parse::<f64>().ok(),
                _ => None,
            };
            n.filter(|x| x.is_finite()).ok_or_else(|| ParseError::new(span.clone(), "numeric value", v.describe()))
        })
        .collect()
}

/// Shared handling of `min_val_list` / `max_val_list`.
fn value_ranges(
    min: Option<&Field>,
    max: Option<&Field>,
    record_span: &SourceSpan,
) -> Result<Option<ValueRanges>, ParseError> {
    match (min, max) {
        (None, None) => Ok(None),
        (Some(f), None) => Err(ParseError::new(f.name_span.clone(), "`max_val_list` alongside `min_val_list`", "none")),
        (None, Some(f)) => Err(ParseError::new(f.name_span.clone(), "`min_val_list` alongside `max_val_list`", "none")),
        (Some(lo), Some(hi)) => {
            let mins = as_numbers(lo)?;
            let maxs = as_numbers(hi)?;
            if mins.len() != maxs.len() {
                return Err(ParseError::new(
                    hi.value_span.clone(),
                    format!("max_val_list of length {} (equal to min_val_list)", mins.len()),
                    format!("length {}", maxs.len()),
                ));
            }
            if mins.is_empty() {
                return Ok(None);
            }
            ValueRanges::from_lists(&mins, &maxs)
                .map(Some)
                .map_err(|e| ParseError::new(record_span.clone(), "valid value ranges", e.to_string()))
        }
    }
}

fn take<'f>(fields: &'f [Field], name: &str) -> Option<&'f Field> {
    fields.iter().find(|f| f.name == name)
}

fn reject_unknown(fields: &[Field], known: &[&str]) -> Result<(), ParseError> {
    match fields.iter().find(|f| !known.contains(&f.name.as_str())) {
        Some(f) => Err(ParseError::new(
            f.name_span.clone(),
            format!("one of {}", known.join(", ")),
            format!("field `{}`", f.name),
        )),
        None => Ok(()),
    }
}

const ATTR_FIELDS: &[&str] = &["attr_name", "type_list", "default_value", "min_val_list", "max_val_list"];
const TENSOR_FIELDS: &[&str] = &[
    "index",
    "basic_type_list",
    "min_dim",
    "max_dim",
    "min_val_list",
    "max_val_list",
    "axis_bound",
    "optional",
    "normal_distribution",
];

fn attribute(p: &mut Parser<'_>) -> Result<AttributeSpec, ParseError> {
    let (fields, span) = p.record("Attr")?;
    reject_unknown(&fields, ATTR_FIELDS)?;
    let name = take(&fields, "attr_name")
        .ok_or_else(|| ParseError::new(span.clone(), "`attr_name` field", "none"))
        .and_then(as_string)?;
    let types = take(&fields, "type_list")
        .ok_or_else(|| ParseError::new(span.clone(), "`type_list` field", "none"))
        .and_then(as_types)?
        .into_iter()
        .map(|(t, _)| t)
        .collect();
    let default_value = take(&fields, "default_value").map(as_string).transpose()?;
    let value_ranges = value_ranges(take(&fields, "min_val_list"), take(&fields, "max_val_list"), &span)?;
    Ok(AttributeSpec { name, types, default_value, value_ranges })
}

fn tensor(p: &mut Parser<'_>) -> Result<TensorSpec, ParseError> {
    let (fields, span) = p.record("Tensor")?;
    reject_unknown(&fields, TENSOR_FIELDS)?;
    let index_field = take(&fields, "index").ok_or_else(|| ParseError::new(span.clone(), "`index` field", "none"))?;
    let index = TensorIndex::from_raw(as_int(index_field)?).ok_or_else(|| mismatch(index_field, "index ≥ -1"))?;
    let types = take(&fields, "basic_type_list")
        .ok_or_else(|| ParseError::new(span.clone(), "`basic_type_list` field", "none"))
        .and_then(as_types)?
        .into_iter()
        .map(|(t, tspan)| match t.arity {
            Arity::Scalar => Ok(t.element),
            Arity::Vector => Err(ParseError::new(tspan, "element type without `_v1`", format!("type `{t}`"))),
        })
        .collect::<Result<Vec<DataType>, _>>()?;
    let mut spec = TensorSpec::new(index, types);
    if let Some(f) = take(&fields, "min_dim") {
        spec.min_dim = as_rank(f)?;
    }
    if let Some(f) = take(&fields, "max_dim") {
        spec.max_dim = as_rank(f)?;
    }
    spec.value_ranges = value_ranges(take(&fields, "min_val_list"), take(&fields, "max_val_list"), &span)?;
    if let Some(f) = take(&fields, "axis_bound") {
        spec.axis_bound = as_bool(f)?;
    }
    if let Some(f) = take(&fields, "optional") {
        spec.optional = as_bool(f)?;
    }
    if let Some(f) = take(&fields, "normal_distribution") {
        spec.normal_distribution = as_bool(f)?;
    }
    Ok(spec)
}

fn property(p: &mut Parser<'_>) -> Result<ImplicitProperty, ParseError> {
    let span = p.span();
    let (name, _) = p.ident().map_err(|_| p.error("property name"))?;
    ImplicitProperty::from_keyword(&name).ok_or_else(|| {
        ParseError::new(
            span,
            "MultidirectionalBroadcast, UnidirectionalBroadcast or NonZero",
            format!("identifier `{name}`"),
        )
    })
}

/// Builds an [`OperatorSpec`] from a token stream.
pub fn parse(tokens: &[Token]) -> Result<OperatorSpec, ParseError> {
    let mut p = Parser { tokens, pos: 0 };
    p.keyword("def")?;
    let (op_name, _) = p.ident()?;
    p.expect(TokenKind::Colon)?;
    p.keyword("Op")?;
    p.expect(TokenKind::LAngle)?;
    let op_code = p.string()?;
    p.expect(TokenKind::RAngle)?;
    p.expect(TokenKind::LBrace)?;

    let mut type_tied = None;
    let mut attributes = None;
    let mut inputs = None;
    let mut outputs: Option<Vec<TensorSpec>> = None;
    let mut properties = None;

    while !p.at(&TokenKind::RBrace) {
        let span = p.span();
        let (section, _) = p.ident().map_err(|_| p.error("section name or `}`"))?;
        let duplicate = || ParseError::new(span.clone(), format!("at most one `{section}` section"), "a duplicate");
        p.expect(TokenKind::Eq)?;
        match section.as_str() {
            "type_tied" => {
                if type_tied.is_some() {
                    return Err(duplicate());
                }
                let Some(TokenKind::Bool(b)) = p.peek().map(|t| &t.kind) else {
                    return Err(p.error("`true` or `false`"));
                };
                type_tied = Some(*b);
                p.pos += 1;
            }
            "attributes" => {
                if attributes.is_some() {
                    return Err(duplicate());
                }
                attributes = Some(p.list_of(attribute)?);
            }
            "inputs" => {
                if inputs.is_some() {
                    return Err(duplicate());
                }
                if outputs.is_some() {
                    return Err(ParseError::new(span, "inputs before outputs", "`inputs` after `outputs`"));
                }
                inputs = Some(p.list_of(tensor)?);
            }
            "outputs" => {
                if outputs.is_some() {
                    return Err(duplicate());
                }
                outputs = Some(p.list_of(tensor)?);
            }
            "properties" => {
                if properties.is_some() {
                    return Err(duplicate());
                }
                properties = Some(p.list_of(property)?.into_iter().collect::<BTreeSet<_>>());
            }
            _ => {
                return Err(ParseError::new(
                    span,
                    "one of type_tied, attributes, inputs, outputs, properties",
                    format!("identifier `{section}`"),
                ))
            }
        }
        p.expect(TokenKind::Semi)?;
    }
    p.expect(TokenKind::RBrace)?;
    if p.peek().is_some() {
        return Err(p.error("end of input"));
    }

    Ok(OperatorSpec {
        op_name,
        op_code,
        type_tied: type_tied.unwrap_or(false),
        attributes: attributes.unwrap_or_default(),
        inputs: inputs.unwrap_or_default(),
        outputs: outputs.unwrap_or_default(),
        properties: properties.unwrap_or_default(),
    })
}

#[cfg(test)]
mod tests {
    use super::super::parse_osl;
    use super::*;

    const DEPTH_TO_SPACE: &str = r#"
// DepthToSpace rearranges depth into spatial blocks.
def DepthToSpaceTest : Op<"op_depth_to_space"> {
  attributes = [
    Attr<attr_name = "blocksize", type_list = [i32], min_val_list = ["1"], max_val_list = ["4"]>
  ];
  inputs = [
    Tensor<index = 0,
           basic_type_list = [f16, f32, i8, i16, i32, i64, u8, u16, u32, u64, bool, string, complex64, complex128],
           min_dim = 4, max_dim = 4>
  ];
  outputs = [
    Tensor<index = 0,
           basic_type_list = [f16, f32, i8, i16, i32, i64, u8, u16, u32, u64, bool, string, complex64, complex128],
           min_dim = 4, max_dim = 4>
  ];
}
"#;

    #[test]
    fn depth_to_space_document() {
        let spec = parse_osl(DEPTH_TO_SPACE).unwrap();
        assert_eq!(spec.op_name, "DepthToSpaceTest");
        assert_eq!(spec.op_code, "op_depth_to_space");
        assert_eq!(spec.attributes.len(), 1);
        assert_eq!(spec.inputs.len(), 1);
        assert_eq!(spec.outputs.len(), 1);
        let attr = &spec.attributes[0];
        assert_eq!(attr.name, "blocksize");
        assert_eq!(attr.types, vec![AttrType::scalar(DataType::I32)]);
        assert_eq!(attr.default_value, None);
        assert_eq!(attr.value_ranges, Some(ValueRanges::single(1.0, 4.0).unwrap()));
        assert_eq!(spec.inputs[0].types.len(), 14);
        assert_eq!((spec.inputs[0].min_dim, spec.inputs[0].max_dim), (4, 4));
    }

    #[test]
    fn unequal_value_lists() {
        let text = r#"def T : Op<"Add"> {
  attributes = [ Attr<attr_name = "x", type_list = [i32], min_val_list = ['20'], max_val_list = ["30"]> ];
}"#;
        // single quotes are not part of the language
        assert!(parse_osl(text).is_err());

        let text = r#"def T : Op<"Add"> {
  attributes = [ Attr<attr_name = "x", type_list = [i32],
                      min_val_list = ["20", "50", "90"], max_val_list = ["30", "60"]> ];
}"#;
        let err = parse_osl(text).unwrap_err();
        assert_eq!(err.span.line, 3);
        assert!(err.expected.contains("length 3"), "{err}");
        assert_eq!(err.found, "length 2");
    }

    #[test]
    fn defaults_for_missing_tensor_fields() {
        let spec =
            parse_osl(r#"def T : Op<"Relu"> { inputs = [ Tensor<index = 0, basic_type_list = [f32]> ]; }"#).unwrap();
        let t = &spec.inputs[0];
        assert_eq!(t.value_ranges, None);
        assert!(!t.axis_bound && !t.optional && !t.normal_distribution);
        assert_eq!((t.min_dim, t.max_dim), (0, 4));
        assert!(!spec.type_tied);
        assert!(spec.properties.is_empty());
    }

    #[test]
    fn outputs_must_follow_inputs() {
        let text = r#"def T : Op<"Relu"> {
  outputs = [ Tensor<index = 0, basic_type_list = [f32]> ];
  inputs = [ Tensor<index = 0, basic_type_list = [f32]> ];
}"#;
        let err = parse_osl(text).unwrap_err();
        assert_eq!(err.span.line, 3);
    }

    #[test]
    fn structural_errors() {
        for bad in [
            "",
            "def",
            r#"def T : Op<"Relu"> {"#,
            r#"def T : Op<"Relu"> { } extra"#,
            r#"def T : Op<"Relu"> { inputs = [ Tensor<basic_type_list = [f32]> ]; }"#,
            r#"def T : Op<"Relu"> { inputs = [ Tensor<index = -2, basic_type_list = [f32]> ]; }"#,
            r#"def T : Op<"Relu"> { inputs = [ Tensor<index = 0, basic_type_list = [f32_v1]> ]; }"#,
            r#"def T : Op<"Relu"> { inputs = [ Tensor<index = 0, basic_type_list = [f32], min_dim = -1> ]; }"#,
            r#"def T : Op<"Relu"> { inputs = [ Tensor<index = 0, basic_type_list = [f32], colour = 1> ]; }"#,
            r#"def T : Op<"Relu"> { inputs = [ Tensor<index = 0, index = 1, basic_type_list = [f32]> ]; }"#,
            r#"def T : Op<"Relu"> { properties = [ Sparkly ]; }"#,
            r#"def T : Op<"Relu"> { type_tied = 1; }"#,
            r#"def T : Op<"Relu"> { attributes = [ Attr<attr_name = "a", type_list = [i32], min_val_list = [1]> ]; }"#,
            r#"def T : Op<"Relu"> { attributes = [ Attr<attr_name = "a", type_list = [i32], min_val_list = [[1]], max_val_list = [2]> ]; }"#,
        ] {
            assert!(parse_osl(bad).is_err(), "accepted: {bad}");
        }
    }

    #[test]
    fn error_at_end_of_input_has_location() {
        let err = parse_osl("def T : Op<\"Relu\"> {").unwrap_err();
        assert_eq!(err.found, "end of input");
        assert_eq!(err.span.line, 1);
    }
}
