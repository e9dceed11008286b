use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{BratteliMeasure, MarkovModel};
use crate::error::{Error, Result};
use crate::numeric::{from_json, Scalar};

/// Horizon used for stationary models when the file gives none.
pub const DEFAULT_HORIZON: usize = 32;

/// On-disk model description. Numbers may be JSON numbers or strings such
/// as `"3/4"`.
///
/// ```json
/// {"kind": "stationary", "matrix": [["3/4","1/4"],["1/4","3/4"]],
///  "initial": ["1/2","1/2"], "horizon": 16}
/// ```
///
/// Bratteli diagrams list their edges per level as `[from, to, multiplicity]`
/// triples; `measure` is `"central"` or `{"cotransitions": [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<Value>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernels: Option<Vec<Vec<Vec<Value>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<Vec<[u64; 3]>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_counts: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<BratteliMeasureSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<Vec<Value>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum BratteliMeasureSpec {
    Named(String),
    Cotransitions { cotransitions: Vec<Vec<Vec<Value>>> },
}

fn field_err(field: &str, e: Error) -> Error {
    Error::Invalid(format!("field `{field}`: {e}"))
}

fn parse_vec<S: Scalar>(field: &str, v: &[Value]) -> Result<Vec<S>> {
    v.iter()
        .map(|x| from_json(x).map_err(|e| field_err(field, e)))
        .collect()
}

fn parse_matrix<S: Scalar>(field: &str, rows: &[Vec<Value>]) -> Result<Array2<S>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::ShapeMismatch(format!(
            "field `{field}`: ragged rows"
        )));
    }
    let flat = rows.iter().flatten().cloned().collect::<Vec<_>>();
    let flat = parse_vec(field, &flat)?;
    Array2::from_shape_vec((r, c), flat)
        .map_err(|e| Error::ShapeMismatch(format!("field `{field}`: {e}")))
}

fn require<'a, T>(field: &str, v: &'a Option<T>) -> Result<&'a T> {
    v.as_ref()
        .ok_or_else(|| Error::Invalid(format!("missing field `{field}`")))
}

impl ModelFile {
    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    /// Largest declared level size and the horizon, without building.
    pub fn size_hint(&self) -> (usize, usize) {
        match self.kind.as_str() {
            "stationary" => {
                let n = self.matrix.as_ref().map_or(0, Vec::len);
                (n, self.horizon.unwrap_or(DEFAULT_HORIZON))
            }
            "explicit" => {
                let ks = self.kernels.as_deref().unwrap_or(&[]);
                let width = ks
                    .iter()
                    .map(|k| k.len().max(k.first().map_or(0, Vec::len)))
                    .chain(self.initial.as_ref().map(Vec::len))
                    .max()
                    .unwrap_or(0);
                (width, ks.len())
            }
            _ => {
                let edges = self.edges.as_deref().unwrap_or(&[]);
                let width = edges
                    .iter()
                    .flat_map(|lvl| lvl.iter().map(|e| e[0].max(e[1]) as usize + 1))
                    .max()
                    .unwrap_or(1);
                (width, edges.len())
            }
        }
    }

    pub fn build<S: Scalar>(&self) -> Result<MarkovModel<S>> {
        match self.kind.as_str() {
            "stationary" => {
                let matrix = parse_matrix("matrix", require("matrix", &self.matrix)?)?;
                let initial = parse_vec("initial", require("initial", &self.initial)?)?;
                MarkovModel::stationary(matrix, initial, self.horizon.unwrap_or(DEFAULT_HORIZON))
            }
            "explicit" => {
                let kernels = require("kernels", &self.kernels)?
                    .iter()
                    .map(|k| parse_matrix("kernels", k))
                    .collect::<Result<Vec<_>>>()?;
                if let Some(h) = self.horizon {
                    if h != kernels.len() {
                        return Err(Error::Invalid(format!(
                            "field `horizon`: {h} does not match {} kernels",
                            kernels.len()
                        )));
                    }
                }
                let initial = parse_vec("initial", require("initial", &self.initial)?)?;
                MarkovModel::explicit(kernels, initial)
            }
            "bratteli" => self.build_bratteli(),
            other => Err(Error::Invalid(format!(
                "field `kind`: unknown kind {other:?}"
            ))),
        }
    }

    fn build_bratteli<S: Scalar>(&self) -> Result<MarkovModel<S>> {
        let edges = require("edges", &self.edges)?;
        let top = edges.len();
        let counts = match &self.state_counts {
            Some(c) => {
                if c.len() != top + 1 {
                    return Err(Error::Invalid(format!(
                        "field `state_counts`: expected {} entries, found {}",
                        top + 1,
                        c.len()
                    )));
                }
                c.clone()
            }
            None => {
                let mut c = vec![1usize; top + 1];
                for (n, lvl) in edges.iter().enumerate() {
                    for e in lvl {
                        c[n] = c[n].max(e[0] as usize + 1);
                        c[n + 1] = c[n + 1].max(e[1] as usize + 1);
                    }
                }
                c
            }
        };
        let mut mult = Vec::with_capacity(top);
        for (n, lvl) in edges.iter().enumerate() {
            let mut m = Array2::<u64>::zeros((counts[n], counts[n + 1]));
            for e in lvl {
                let (from, to) = (e[0] as usize, e[1] as usize);
                if from >= counts[n] || to >= counts[n + 1] {
                    return Err(Error::Invalid(format!(
                        "field `edges`: edge {e:?} at level {n} is out of range"
                    )));
                }
                m[[from, to]] += e[2];
            }
            mult.push(m);
        }
        let measure = match &self.measure {
            None => BratteliMeasure::Central,
            Some(BratteliMeasureSpec::Named(s)) if s == "central" => BratteliMeasure::Central,
            Some(BratteliMeasureSpec::Named(s)) => {
                return Err(Error::Invalid(format!(
                    "field `measure`: unknown measure {s:?}"
                )))
            }
            Some(BratteliMeasureSpec::Cotransitions { cotransitions }) => {
                BratteliMeasure::Cotransitions(
                    cotransitions
                        .iter()
                        .map(|m| parse_matrix("measure.cotransitions", m))
                        .collect::<Result<Vec<_>>>()?,
                )
            }
        };
        let boundary = self
            .boundary
            .as_ref()
            .map(|b| parse_vec("boundary", b))
            .transpose()?;
        MarkovModel::bratteli(mult, measure, boundary)
    }

    /// Explicit description of `model` over retained states.
    pub fn from_model<S: Scalar>(model: &MarkovModel<S>) -> Result<Self> {
        let kernels = model
            .kernels()?
            .iter()
            .map(|k| {
                k.rows()
                    .into_iter()
                    .map(|r| r.iter().map(|x| Value::String(x.repr())).collect())
                    .collect()
            })
            .collect();
        Ok(ModelFile {
            kind: "explicit".into(),
            matrix: None,
            kernels: Some(kernels),
            initial: Some(
                model
                    .initial()
                    .iter()
                    .map(|x| Value::String(x.repr()))
                    .collect(),
            ),
            horizon: Some(model.horizon()),
            edges: None,
            state_counts: None,
            measure: None,
            boundary: None,
        })
    }
}
