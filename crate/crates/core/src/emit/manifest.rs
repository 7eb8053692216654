//! Language-neutral JSON description of a generated suite.
//!
//! Keys are sorted and floats use shortest round-trip formatting, so equal
//! plans serialize to identical bytes. The layout is documented in
//! `docs/manifest-schema.md`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::gen::{Profile, TestPlan};
use crate::model::{AttributeValue, BoundaryCategory, InputInstance, OperatorSpec, TestCase};
use crate::rng::PRNG_NAME;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("malformed manifest: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported schema_version {0}, expected {SCHEMA_VERSION}")]
    Version(u32),
    #[error("unknown profile `{0}`")]
    Profile(String),
    #[error("unknown prng `{0}`")]
    Prng(String),
    #[error("count {count} does not match {cases} cases")]
    Count { count: usize, cases: usize },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CaseDoc {
    name: String,
    attributes: BTreeMap<String, AttributeValue>,
    inputs: Vec<InputInstance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    boundary_category: Option<BoundaryCategory>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestDoc {
    schema_version: u32,
    operator: String,
    op_code: String,
    onnx_op: Option<String>,
    profile: String,
    seed: u64,
    prng: String,
    count: usize,
    cases: Vec<CaseDoc>,
}

/// Decoded manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub operator: String,
    pub op_code: String,
    pub onnx_op: Option<String>,
    pub profile: Profile,
    pub seed: u64,
    pub cases: Vec<TestCase>,
}

/// Serializes `plan` for `spec`. The text ends with a newline.
pub fn emit_manifest(spec: &OperatorSpec, plan: &TestPlan) -> String {
    let doc = ManifestDoc {
        schema_version: SCHEMA_VERSION,
        operator: spec.op_name.clone(),
        op_code: spec.op_code.clone(),
        onnx_op: spec.onnx_op().map(str::to_string),
        profile: plan.profile.name().to_string(),
        seed: plan.seed,
        prng: PRNG_NAME.to_string(),
        count: plan.cases.len(),
        cases: plan
            .cases
            .iter()
            .map(|c| CaseDoc {
                name: c.name.clone(),
                attributes: c.attributes.clone(),
                inputs: c.inputs.clone(),
                boundary_category: c.boundary,
            })
            .collect(),
    };
    // going through `Value` sorts every object's keys
    let value = serde_json::to_value(&doc).expect("manifest values are finite");
    let mut text = serde_json::to_string_pretty(&value).expect("serializing a Value cannot fail");
    text.push('\n');
    text
}

/// Parses manifest text back into test cases.
pub fn decode_manifest(text: &str) -> Result<Manifest, ManifestError> {
    let doc: ManifestDoc = serde_json::from_str(text)?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(ManifestError::Version(doc.schema_version));
    }
    let profile = Profile::from_name(&doc.profile).ok_or_else(|| ManifestError::Profile(doc.profile.clone()))?;
    if doc.prng != PRNG_NAME {
        return Err(ManifestError::Prng(doc.prng));
    }
    if doc.count != doc.cases.len() {
        return Err(ManifestError::Count { count: doc.count, cases: doc.cases.len() });
    }
    Ok(Manifest {
        operator: doc.operator,
        op_code: doc.op_code,
        onnx_op: doc.onnx_op,
        profile,
        seed: doc.seed,
        cases: doc
            .cases
            .into_iter()
            .map(|c| TestCase {
                name: c.name,
                attributes: c.attributes,
                inputs: c.inputs,
                boundary: c.boundary_category,
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::generate_plan;
    use crate::model::{DataType, TensorIndex, TensorSpec};
    use std::collections::BTreeSet;

    fn relu() -> OperatorSpec {
        OperatorSpec {
            op_name: "ReluTest".into(),
            op_code: "op_relu".into(),
            type_tied: false,
            attributes: vec![],
            inputs: vec![TensorSpec::new(TensorIndex::Position(0), vec![DataType::F32, DataType::I8])],
            outputs: vec![],
            properties: BTreeSet::new(),
        }
    }

    #[test]
    fn layout_and_round_trip() {
        let spec = relu();
        let plan = generate_plan(&spec, Profile::Smoke, 12, 4).unwrap();
        let text = emit_manifest(&spec, &plan);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["onnx_op"], "Relu");
        assert_eq!(v["prng"], PRNG_NAME);
        assert_eq!(v["cases"].as_array().unwrap().len(), 12);
        assert!(v["cases"][0]["attributes"].as_object().unwrap().is_empty());
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);

        let m = decode_manifest(&text).unwrap();
        assert_eq!(m.cases, plan.cases);
        assert_eq!((m.profile, m.seed), (Profile::Smoke, 4));
    }

    #[test]
    fn rejects_inconsistent_documents() {
        let spec = relu();
        let plan = generate_plan(&spec, Profile::Full, 3, 0).unwrap();
        let text = emit_manifest(&spec, &plan);
        let bump = text.replace("\"schema_version\": 1", "\"schema_version\": 2");
        assert!(matches!(decode_manifest(&bump), Err(ManifestError::Version(2))));
        let count = text.replace("\"count\": 3", "\"count\": 4");
        assert!(matches!(decode_manifest(&count), Err(ManifestError::Count { .. })));
        assert!(decode_manifest("{").is_err());
        assert!(decode_manifest("[]").is_err());
        let extra = text.replacen("\"omitted\": false", "\"omitted\": false, \"extra\": 1", 1);
        assert!(decode_manifest(&extra).is_err());
    }
}
