use std::path::{Path, PathBuf};

use crate::model::OperatorSpec;

/// Suffix of the reference entry point, compared case-insensitively.
pub const ENTRY_SUFFIX: &str = "compute";

#[derive(Debug, thiserror::Error)]
pub enum AlgorithmError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{location}: no top-level function `{op_name}_compute`")]
    MissingEntryFunction { location: String, op_name: String },
    #[error(
        "{location}: `{entry}` takes {found} parameters, the OSL file declares {expected} (inputs, then attributes)"
    )]
    ArityMismatch { location: String, entry: String, expected: usize, found: usize },
}

/// A reference algorithm and its located entry point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlgorithmFile {
    pub op_name: String,
    pub path: Option<PathBuf>,
    pub source_text: String,
    pub entry_function: String,
    /// Parameter names in declaration order: inputs by index, then
    /// attributes by appearance.
    pub params: Vec<String>,
}

impl AlgorithmFile {
    fn location(&self) -> String {
        self.path.as_ref().map_or_else(|| "<algorithm>".to_string(), |p| p.display().to_string())
    }

    /// Checks the entry point against the operator's declared arity. A variadic
    /// input binds to one parameter.
    pub fn check_arity(&self, spec: &OperatorSpec) -> Result<(), AlgorithmError> {
        let expected = spec.inputs.len() + spec.attributes.len();
        if self.params.len() == expected {
            Ok(())
        } else {
            Err(AlgorithmError::ArityMismatch {
                location: self.location(),
                entry: self.entry_function.clone(),
                expected,
                found: self.params.len(),
            })
        }
    }
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Text between the parentheses that open at byte `open` of `text`.
fn parenthesized(text: &str, open: usize) -> Option<&str> {
    let mut depth = 0usize;
    let mut quote: Option<char> = None;
    let mut escaped = false;
    let mut comment = false;
    for (k, c) in text[open..].char_indices() {
        if comment {
            comment = c != '\n';
            continue;
        }
        if let Some(q) = quote {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == q {
                quote = None;
            }
            continue;
        }
        match c {
            '\'' | '"' => quote = Some(c),
            '#' => comment = true,
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => {
                depth = depth.checked_sub(1)?;
                if depth == 0 {
                    return Some(&text[open + 1..open + k]);
                }
            }
            _ => {}
        }
    }
    None
}

/// Splits a parameter list at top-level commas, dropping annotations and
/// defaults.
fn split_params(list: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut current = String::new();
    for c in list.chars() {
        match c {
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                out.push(std::mem::take(&mut current));
                continue;
            }
            _ => {}
        }
        current.push(c);
    }
    out.push(current);
    out.into_iter()
        .filter_map(|p| {
            let p = p.lines().map(|l| l.split('#').next().unwrap_or("")).collect::<Vec<_>>().join(" ");
            let name = p.split([':', '=']).next().unwrap_or("").trim().to_string();
            (!name.is_empty() && name != "/" && name != "*").then_some(name)
        })
        .collect()
}

/// Locates the entry point `<op_name>_compute` in algorithm source text.
///
/// Only unindented `def` statements count. The suffix matches regardless
/// of case, so `_Compute` is accepted too.
pub fn from_source(text: &str, op_name: &str) -> Result<AlgorithmFile, AlgorithmError> {
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let start = offset;
        offset += line.len();
        let Some(rest) = line.strip_prefix("def ") else { continue };
        let name: String = rest.trim_start().chars().take_while(|&c| is_ident_char(c)).collect();
        let Some(suffix) = name.strip_prefix(op_name).and_then(|s| s.strip_prefix('_')) else { continue };
        if !suffix.eq_ignore_ascii_case(ENTRY_SUFFIX) {
            continue;
        }
        let Some(open) = text[start..].find('(').map(|k| start + k) else { continue };
        let Some(list) = parenthesized(text, open) else { continue };
        return Ok(AlgorithmFile {
            op_name: op_name.to_string(),
            path: None,
            source_text: text.to_string(),
            entry_function: name,
            params: split_params(list),
        });
    }
    Err(AlgorithmError::MissingEntryFunction { location: "<algorithm>".into(), op_name: op_name.to_string() })
}

/// Reads `path` and locates the entry point for `op_name`.
pub fn load_algorithm(path: &Path, op_name: &str) -> Result<AlgorithmFile, AlgorithmError> {
    let text =
        std::fs::read_to_string(path).map_err(|source| AlgorithmError::Io { path: path.to_path_buf(), source })?;
    match from_source(&text, op_name) {
        Ok(mut alg) => {
            alg.path = Some(path.to_path_buf());
            Ok(alg)
        }
        Err(AlgorithmError::MissingEntryFunction { op_name, .. }) => {
            Err(AlgorithmError::MissingEntryFunction { location: path.display().to_string(), op_name })
        }
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DEPTH_TO_SPACE: &str = "#x_0: 0'th input; blocksize: blocksize in DepthToSpace
def DepthToSpace_compute(x_0, blocksize):
    b, c, h, w = x_0.shape
    tmp = numpy.reshape(x_0, [b, blocksize, blocksize, c // (blocksize**2), h, w])
    tmp = numpy.transpose(tmp, [0, 3, 4, 1, 5, 2])
    return numpy.reshape(tmp, [b, c // (blocksize**2), h * blocksize, w * blocksize])
";

    #[test]
    fn finds_the_listed_entry_point() {
        let alg = from_source(DEPTH_TO_SPACE, "DepthToSpace").unwrap();
        assert_eq!(alg.entry_function, "DepthToSpace_compute");
        assert_eq!(alg.params, ["x_0", "blocksize"]);
        assert_eq!(alg.source_text, DEPTH_TO_SPACE);
    }

    #[test]
    fn suffix_case_is_ignored() {
        let alg = from_source("def Add_Compute(x_0, x_1):\n    return x_0 + x_1\n", "Add").unwrap();
        assert_eq!(alg.entry_function, "Add_Compute");
        assert_eq!(alg.params.len(), 2);
    }

    #[test]
    fn nested_and_other_functions_are_skipped() {
        let text = "def helper(a):\n    return a\n\nclass K:\n    def Add_compute(self):\n        pass\n";
        assert!(matches!(from_source(text, "Add"), Err(AlgorithmError::MissingEntryFunction { .. })));
        assert!(from_source("def Addx_compute(a): pass\n", "Add").is_err());
        assert!(from_source("", "Add").is_err());
    }

    #[test]
    fn multiline_params_with_defaults() {
        let text = "def Gemm_compute(a, b, c=None,\n                 alpha: float = 1.0,  # scale\n                 beta=(1, 2), transA=0, transB=0,\n):\n    pass\n";
        let alg = from_source(text, "Gemm").unwrap();
        assert_eq!(alg.params, ["a", "b", "c", "alpha", "beta", "transA", "transB"]);
    }

    #[test]
    fn unbalanced_parentheses_do_not_match() {
        assert!(from_source("def Add_compute(x_0, x_1:\n", "Add").is_err());
    }
}
