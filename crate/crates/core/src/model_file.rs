//! JSON model files.
//!
//! Every file is an object with a `"kind"` field:
//!
//! ```json
//! {"kind": "iid", "alphabet": ["0", "1"], "p": [0.5, 0.5]}
//! {"kind": "markov", "alphabet": ["a", "b"], "pi": [1, 0], "A": [[0.9, 0.1], [0.5, 0.5]]}
//! {"kind": "hmm", "alphabet": ["0", "1"], "pi": [...], "A": [[...]], "E": [[...]]}
//! {"kind": "qrw", "nodes": 4, "degree": 2, "U": [[[re, im], ...], ...],
//!  "psi0": [[re, im], ...], "edge_order": [[node, direction], ...]}
//! {"kind": "linear_combination", "base": {...}, "shifts": [0, 1], "weights": [0.5, 0.5]}
//! ```
//!
//! `iid` and `markov` are hidden Markov models with one state and with the
//! identity emission matrix. A `linear_combination` is `Σ_j w_j base∘T^{-k_j}`,
//! which is how stationary means are written out. Unknown fields are rejected.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::evolution::generic_shift;
use crate::hmm::{iid, markov, Hmm};
use crate::qrw::{Qrw, C64};
use crate::source::{linear_combination, Alphabet, Descriptor, Source};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IidFile {
    pub alphabet: Vec<String>,
    pub p: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkovFile {
    pub alphabet: Vec<String>,
    pub pi: Vec<f64>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HmmFile {
    pub alphabet: Vec<String>,
    pub pi: Vec<f64>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "E")]
    pub e: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QrwFile {
    /// Node labels; defaults to `0..nodes`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphabet: Option<Vec<String>>,
    pub nodes: usize,
    pub degree: usize,
    #[serde(rename = "U")]
    pub u: Vec<Vec<[f64; 2]>>,
    pub psi0: Vec<[f64; 2]>,
    pub edge_order: Vec<[usize; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearCombinationFile {
    pub base: Box<ModelFile>,
    pub shifts: Vec<usize>,
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// A parsed model file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelFile {
    Iid(IidFile),
    Markov(MarkovFile),
    Hmm(HmmFile),
    Qrw(QrwFile),
    LinearCombination(LinearCombinationFile),
}

/// Deserializes the object without its `kind` field. Syntax errors carry
/// line and column; structural errors name the offending field.
fn parse_body<T: DeserializeOwned>(mut value: Value, kind: &str) -> Result<T> {
    if let Value::Object(map) = &mut value {
        map.remove("kind");
    }
    serde_json::from_value(value).map_err(|e| Error::Parse(format!("{kind} model: {e}")))
}

fn positioned(e: serde_json::Error) -> Error {
    Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column()))
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(positioned)?;
        let kind = value
            .get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Parse("model file needs a string field \"kind\"".into()))?
            .to_string();
        Ok(match kind.as_str() {
            "iid" => ModelFile::Iid(parse_body(value, &kind)?),
            "markov" => ModelFile::Markov(parse_body(value, &kind)?),
            "hmm" => ModelFile::Hmm(parse_body(value, &kind)?),
            "qrw" => ModelFile::Qrw(parse_body(value, &kind)?),
            "linear_combination" => ModelFile::LinearCombination(parse_body(value, &kind)?),
            other => {
                return Err(Error::Parse(format!(
                    "unknown kind {other:?}; expected iid, markov, hmm, qrw or linear_combination"
                )))
            }
        })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ModelFile::Iid(_) => "iid",
            ModelFile::Markov(_) => "markov",
            ModelFile::Hmm(_) => "hmm",
            ModelFile::Qrw(_) => "qrw",
            ModelFile::LinearCombination(_) => "linear_combination",
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model files serialize")
    }

    pub fn from_hmm(h: &Hmm) -> Self {
        ModelFile::Hmm(HmmFile {
            alphabet: h.alphabet().labels().to_vec(),
            pi: h.pi().to_vec(),
            a: h.transition_rows(),
            e: h.emission_rows(),
        })
    }

    pub fn from_qrw(q: &Qrw) -> Self {
        let n = q.dimension();
        let labels = q.alphabet().labels().to_vec();
        let default_labels: Vec<String> = (0..q.nodes()).map(|i| i.to_string()).collect();
        ModelFile::Qrw(QrwFile {
            alphabet: (labels != default_labels).then_some(labels),
            nodes: q.nodes(),
            degree: q.degree(),
            u: (0..n)
                .map(|i| (0..n).map(|j| [q.unitary()[(i, j)].re, q.unitary()[(i, j)].im]).collect())
                .collect(),
            psi0: q.psi0().iter().map(|z| [z.re, z.im]).collect(),
            edge_order: q.edges().iter().map(|&(v, x)| [v, x]).collect(),
        })
    }

    /// The walk described by a `qrw` file, validated.
    pub fn qrw(f: &QrwFile) -> Result<Qrw> {
        let q = Self::qrw_unchecked(f)?;
        let r = q.validate();
        if !r.pass {
            return Err(Error::InvalidModel(r.messages.join("; ")));
        }
        Ok(q)
    }

    fn qrw_unchecked(f: &QrwFile) -> Result<Qrw> {
        let alphabet = match &f.alphabet {
            Some(labels) => Alphabet::new(labels.iter().cloned())?,
            None => Alphabet::numbered(f.nodes)?,
        };
        if alphabet.size() != f.nodes {
            return Err(Error::InvalidModel(format!(
                "{} node labels for {} nodes",
                alphabet.size(),
                f.nodes
            )));
        }
        let n = f.u.len();
        if f.u.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidModel("U must be square".into()));
        }
        let u = DMatrix::from_fn(n, n, |i, j| C64::new(f.u[i][j][0], f.u[i][j][1]));
        let psi0 = DVector::from_iterator(f.psi0.len(), f.psi0.iter().map(|z| C64::new(z[0], z[1])));
        let edges = f.edge_order.iter().map(|e| (e[0], e[1])).collect();
        Qrw::from_parts(alphabet, f.degree, edges, u, psi0)
    }

    /// The hidden Markov model behind an `iid`, `markov` or `hmm` file,
    /// shape-checked only.
    fn hmm_unchecked(&self) -> Option<Result<Hmm>> {
        let labels = |l: &[String]| Alphabet::new(l.iter().cloned());
        Some(match self {
            ModelFile::Iid(f) => labels(&f.alphabet)
                .and_then(|a| Hmm::from_parts(a, vec![1.0], vec![vec![1.0]], vec![f.p.clone()])),
            ModelFile::Markov(f) => labels(&f.alphabet).and_then(|a| {
                let m = a.size();
                let e = (0..m).map(|i| (0..m).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
                Hmm::from_parts(a, f.pi.clone(), f.a.clone(), e)
            }),
            ModelFile::Hmm(f) => labels(&f.alphabet).and_then(|a| Hmm::from_parts(a, f.pi.clone(), f.a.clone(), f.e.clone())),
            _ => return None,
        })
    }

    /// Runs the kind-specific validator and returns its full report instead
    /// of stopping at the first problem. Shape errors are still errors.
    pub fn validate(&self) -> Result<Validation> {
        let (pass, report) = match self {
            ModelFile::Qrw(f) => {
                let r = Self::qrw_unchecked(f)?.validate();
                (r.pass, serde_json::to_value(&r))
            }
            ModelFile::LinearCombination(_) => {
                self.build()?;
                (true, Ok(Value::Null))
            }
            other => {
                let r = other.hmm_unchecked().expect("hmm-like kind")?.validate();
                (r.pass, serde_json::to_value(&r))
            }
        };
        Ok(Validation {
            kind: self.kind(),
            pass,
            report: report.map_err(|e| Error::Parse(e.to_string()))?,
        })
    }

    /// Builds and validates the source.
    pub fn build(&self) -> Result<Source> {
        match self {
            ModelFile::Iid(f) => iid(Alphabet::new(f.alphabet.iter().cloned())?, &f.p),
            ModelFile::Markov(f) => markov(Alphabet::new(f.alphabet.iter().cloned())?, f.pi.clone(), f.a.clone()),
            ModelFile::Hmm(f) => Ok(Hmm::new(
                Alphabet::new(f.alphabet.iter().cloned())?,
                f.pi.clone(),
                f.a.clone(),
                f.e.clone(),
            )?
            .to_source()),
            ModelFile::Qrw(f) => Ok(Self::qrw(f)?.to_source()),
            ModelFile::LinearCombination(f) => {
                if f.shifts.is_empty() || f.shifts.len() != f.weights.len() {
                    return Err(Error::InvalidModel("shifts and weights must be non-empty and of equal length".into()));
                }
                let base = f.base.build()?;
                let members = f
                    .shifts
                    .iter()
                    .map(|&k| generic_shift(&base, k))
                    .collect::<Result<Vec<_>>>()?;
                linear_combination(&members, &f.weights)
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Validation {
    pub kind: &'static str,
    pub pass: bool,
    pub report: Value,
}

/// Reads, parses and validates a model file. The descriptor records the
/// path and the kind.
pub fn load_model(path: impl AsRef<Path>) -> Result<(ModelFile, Source)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
    let file = ModelFile::parse(&text).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })?;
    let source = file.build()?.with_descriptor(Descriptor::Model {
        kind: file.kind().to_string(),
        note: Some(path.display().to_string()),
    });
    Ok((file, source))
}

pub fn save_model(path: impl AsRef<Path>, file: &ModelFile) -> Result<()> {
    fs::write(path, file.to_json() + "\n")?;
    Ok(())
}
