//! JSON and CSV interchange for spaces, measures, kernels, functions and
//! semigroup models.
//!
//! Kernels are read in either dense (`"rows": [[..], ..]`) or sparse
//! (`"rows": [{"from": i, "entries": [{"to": j, "w": v}]}]`) form and always
//! written dense.

use std::fmt::Write as _;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::kernel::TransitionKernel;
use crate::measure::SignedMeasure;
use crate::semigroup::{ConvergenceTrace, SemigroupModel};
use crate::space::{BoundedFunction, SpaceRef, StateSpace, StateTag, Topology};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
    /// Input does not follow the expected layout; `field` names the culprit.
    #[error("{context}: invalid `{field}`: {message}")]
    Schema {
        context: String,
        field: String,
        message: String,
    },
    #[error(transparent)]
    Core(#[from] Error),
}

pub type IoResult<T> = std::result::Result<T, IoError>;

fn schema(field: &str, message: impl Into<String>) -> IoError {
    IoError::Schema {
        context: "input".into(),
        field: field.into(),
        message: message.into(),
    }
}

impl IoError {
    fn in_context(self, context: &str) -> IoError {
        match self {
            IoError::Schema { field, message, .. } => IoError::Schema {
                context: context.into(),
                field,
                message,
            },
            other => other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceDesc {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<usize>,
    /// Per-state cell widths for a discrete space mixing atoms (`null`) and
    /// cells.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<Vec<Option<f64>>>,
}

impl SpaceDesc {
    pub fn of(space: &StateSpace) -> Self {
        let mut desc = SpaceDesc {
            kind: String::new(),
            n: Some(space.len()),
            a: None,
            b: None,
            truncation: None,
            cells: None,
        };
        match space.topology() {
            Topology::Discrete => {
                desc.kind = "discrete".into();
                if space.tags().iter().any(|t| !t.is_atom()) {
                    desc.cells = Some(
                        space
                            .tags()
                            .iter()
                            .map(|t| match t {
                                StateTag::Atom => None,
                                StateTag::Cell { width } => Some(*width),
                            })
                            .collect(),
                    );
                }
            }
            Topology::Interval { a, b } => {
                desc.kind = "interval".into();
                desc.a = Some(a);
                desc.b = Some(b);
            }
            Topology::TwoSidedSequence { n } => {
                desc.kind = "two_sided_seq".into();
                desc.truncation = Some(n);
            }
        }
        desc
    }

    pub fn build(&self) -> IoResult<SpaceRef> {
        let invalid = |field: &str, e: Error| schema(field, e.to_string());
        match self.kind.as_str() {
            "discrete" => {
                if let Some(cells) = &self.cells {
                    if let Some(n) = self.n {
                        if n != cells.len() {
                            return Err(schema(
                                "n",
                                format!("{n} does not match {} cell entries", cells.len()),
                            ));
                        }
                    }
                    let tags = cells
                        .iter()
                        .map(|c| match c {
                            None => StateTag::Atom,
                            Some(width) => StateTag::Cell { width: *width },
                        })
                        .collect();
                    StateSpace::with_tags(tags).map_err(|e| invalid("cells", e))
                } else {
                    let n = self.n.ok_or_else(|| schema("n", "missing"))?;
                    StateSpace::discrete(n).map_err(|e| invalid("n", e))
                }
            }
            "interval" => {
                let n = self.n.ok_or_else(|| schema("n", "missing"))?;
                let a = self.a.ok_or_else(|| schema("a", "missing"))?;
                let b = self.b.ok_or_else(|| schema("b", "missing"))?;
                StateSpace::interval(a, b, n).map_err(|e| invalid("n", e))
            }
            "two_sided_seq" => {
                let trunc = self.truncation.ok_or_else(|| schema("N", "missing"))?;
                if let Some(n) = self.n {
                    if n != 2 * trunc + 1 {
                        return Err(schema(
                            "n",
                            format!("must equal 2N + 1 = {}", 2 * trunc + 1),
                        ));
                    }
                }
                StateSpace::two_sided_sequence(trunc).map_err(|e| invalid("N", e))
            }
            other => Err(schema(
                "kind",
                format!("unknown kind {other:?}, expected discrete, interval or two_sided_seq"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureDoc {
    pub space: SpaceDesc,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SparseEntry {
    pub to: usize,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SparseRow {
    pub from: usize,
    pub entries: Vec<SparseEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KernelRows {
    Dense(Vec<Vec<f64>>),
    Sparse(Vec<SparseRow>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<SpaceDesc>,
    pub rows: KernelRows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<SpaceDesc>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDoc {
    pub variant: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<SpaceDesc>,
    pub matrix: Vec<Vec<f64>>,
}

fn space_or_discrete(desc: &Option<SpaceDesc>, n: usize, field: &str) -> IoResult<SpaceRef> {
    match desc {
        Some(d) => d.build(),
        None => StateSpace::discrete(n).map_err(|e| schema(field, e.to_string())),
    }
}

fn check_finite(field: &str, values: &[f64]) -> IoResult<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(schema(field, format!("entry {i} is not finite"))),
        None => Ok(()),
    }
}

fn dense_kernel(space: &SpaceRef, rows: &[Vec<f64>], field: &str) -> IoResult<TransitionKernel> {
    let n = space.len();
    if rows.len() != n {
        return Err(schema(
            field,
            format!("expected {n} rows, found {}", rows.len()),
        ));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(schema(
                field,
                format!("row {i} has {} entries, expected {n}", row.len()),
            ));
        }
        check_finite(field, row)?;
    }
    Ok(TransitionKernel::new(space, rows.to_vec())?)
}

pub fn measure_from_doc(doc: &MeasureDoc) -> IoResult<SignedMeasure> {
    let space = doc.space.build()?;
    if doc.weights.len() != space.len() {
        return Err(schema(
            "weights",
            format!(
                "expected {} entries, found {}",
                space.len(),
                doc.weights.len()
            ),
        ));
    }
    check_finite("weights", &doc.weights)?;
    Ok(SignedMeasure::new(&space, doc.weights.clone())?)
}

pub fn measure_to_doc(mu: &SignedMeasure) -> MeasureDoc {
    MeasureDoc {
        space: SpaceDesc::of(mu.space()),
        weights: mu.weights().to_vec(),
    }
}

pub fn kernel_from_doc(doc: &KernelDoc) -> IoResult<TransitionKernel> {
    match &doc.rows {
        KernelRows::Dense(rows) => {
            let space = space_or_discrete(&doc.space, rows.len(), "rows")?;
            dense_kernel(&space, rows, "rows")
        }
        KernelRows::Sparse(rows) => {
            let desc = doc
                .space
                .as_ref()
                .ok_or_else(|| schema("space", "required for sparse rows"))?;
            let space = desc.build()?;
            let n = space.len();
            let mut triples = Vec::new();
            for row in rows {
                if row.from >= n {
                    return Err(schema(
                        "from",
                        format!("state {} out of range 0..{n}", row.from),
                    ));
                }
                for e in &row.entries {
                    if e.to >= n {
                        return Err(schema("to", format!("state {} out of range 0..{n}", e.to)));
                    }
                    if !e.w.is_finite() {
                        return Err(schema("w", "not finite"));
                    }
                    triples.push((row.from, e.to, e.w));
                }
            }
            Ok(TransitionKernel::from_sparse(&space, &triples)?)
        }
    }
}

pub fn kernel_to_doc(k: &TransitionKernel) -> KernelDoc {
    KernelDoc {
        space: Some(SpaceDesc::of(k.space())),
        rows: KernelRows::Dense(k.to_rows()),
    }
}

pub fn function_from_doc(doc: &FunctionDoc) -> IoResult<BoundedFunction> {
    let space = space_or_discrete(&doc.space, doc.values.len(), "values")?;
    if doc.values.len() != space.len() {
        return Err(schema(
            "values",
            format!(
                "expected {} entries, found {}",
                space.len(),
                doc.values.len()
            ),
        ));
    }
    check_finite("values", &doc.values)?;
    Ok(BoundedFunction::new(&space, doc.values.clone())?)
}

pub fn function_to_doc(f: &BoundedFunction) -> FunctionDoc {
    FunctionDoc {
        space: Some(SpaceDesc::of(f.space())),
        values: f.values().to_vec(),
    }
}

pub fn model_from_doc(doc: &ModelDoc) -> IoResult<SemigroupModel> {
    let space = space_or_discrete(&doc.space, doc.matrix.len(), "matrix")?;
    let k = dense_kernel(&space, &doc.matrix, "matrix")?;
    let model = match doc.variant.as_str() {
        "discrete" => SemigroupModel::discrete(k),
        "continuous" => SemigroupModel::continuous(k),
        other => {
            return Err(schema(
                "variant",
                format!("unknown variant {other:?}, expected discrete or continuous"),
            ))
        }
    };
    model.map_err(|e| schema("matrix", e.to_string()))
}

pub fn model_to_doc(model: &SemigroupModel) -> ModelDoc {
    let space = model.space();
    let plain = space.topology() == Topology::Discrete && space.tags().iter().all(|t| t.is_atom());
    ModelDoc {
        variant: if model.is_discrete() {
            "discrete"
        } else {
            "continuous"
        }
        .into(),
        space: (!plain).then(|| SpaceDesc::of(space)),
        matrix: model.matrix().to_rows(),
    }
}

/// Parses `text` as `T`, reporting the offending field on failure.
pub fn parse<T: DeserializeOwned>(text: &str, context: &str) -> IoResult<T> {
    serde_json::from_str(text).map_err(|e| {
        let message = e.to_string();
        let field = message
            .split('`')
            .nth(1)
            .filter(|_| message.contains("field"))
            .unwrap_or("document")
            .to_string();
        IoError::Schema {
            context: context.into(),
            field,
            message,
        }
    })
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

pub fn read_text(path: &Path) -> IoResult<String> {
    std::fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> IoResult<()> {
    std::fs::write(path, text).map_err(|source| IoError::Write {
        path: path.display().to_string(),
        source,
    })
}

fn load<T: DeserializeOwned>(path: &Path) -> IoResult<T> {
    let ctx = path.display().to_string();
    parse(&read_text(path)?, &ctx)
}

fn with_path<T>(path: &Path, r: IoResult<T>) -> IoResult<T> {
    r.map_err(|e| e.in_context(&path.display().to_string()))
}

pub fn load_measure(path: &Path) -> IoResult<SignedMeasure> {
    with_path(path, measure_from_doc(&load(path)?))
}

pub fn load_kernel(path: &Path) -> IoResult<TransitionKernel> {
    with_path(path, kernel_from_doc(&load(path)?))
}

pub fn load_function(path: &Path) -> IoResult<BoundedFunction> {
    with_path(path, function_from_doc(&load(path)?))
}

pub fn load_model(path: &Path) -> IoResult<SemigroupModel> {
    with_path(path, model_from_doc(&load(path)?))
}

/// CSV with header `state,weight`.
pub fn measure_csv(mu: &SignedMeasure) -> String {
    let mut out = String::from("state,weight\n");
    for (x, w) in mu.weights().iter().enumerate() {
        let _ = writeln!(out, "{x},{w}");
    }
    out
}

pub fn trace_csv(trace: &ConvergenceTrace) -> String {
    trace.to_csv()
}
