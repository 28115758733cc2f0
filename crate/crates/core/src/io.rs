//! JSON formats for models and Gaussian block lists.
//!
//! Matrices may be written nested (`[[a, b], [c, d]]`) or flat in row-major
//! order (`[a, b, c, d]`). A model file looks like
//!
//! ```json
//! {
//!   "alphabet_size": 2,
//!   "edge_potentials": [[[1, 0.5], [0.5, 1]], [1, 0.5, 0.5, 1], [[1, 0], [0, 1]]],
//!   "node_potentials": [[0.9, 0.1], [1, 1], [0.2, 0.8]]
//! }
//! ```
//!
//! where `node_potentials` may be replaced by
//! `"emission": {"matrix": [[..]], "observations": [0, null, 1]}` or left
//! out (no evidence). Block files are
//! `{"block_dim": n, "blocks": [[M0, M+, M-], ...]}`.

use std::io::Read;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{BlockTriple, SecondOrderBlocks};
use crate::model::{emissions_to_node_potentials, EmissionSpec, HiddenReciprocalModel};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixJson {
    Nested(Vec<Vec<f64>>),
    Flat(Vec<f64>),
}

impl MatrixJson {
    /// Converts to a `rows x cols` matrix. Nested input may have any
    /// rectangular shape; flat input must have exactly `rows * cols` entries.
    fn to_matrix(&self, rows: usize, cols: usize, path: &str) -> Result<DMatrix<f64>> {
        match self {
            MatrixJson::Nested(r) => {
                let ncols = r.first().map_or(0, Vec::len);
                if let Some(i) = r.iter().position(|row| row.len() != ncols) {
                    return Err(Error::Schema {
                        path: format!("{path}[{i}]"),
                        message: format!("ragged matrix: row {i} has {} entries, row 0 has {ncols}", r[i].len()),
                    });
                }
                Ok(DMatrix::from_fn(r.len(), ncols, |i, j| r[i][j]))
            }
            MatrixJson::Flat(v) => {
                if v.len() != rows * cols {
                    return Err(Error::Schema {
                        path: path.to_string(),
                        message: format!("flat matrix has {} entries, expected {rows}x{cols}", v.len()),
                    });
                }
                Ok(DMatrix::from_row_slice(rows, cols, v))
            }
        }
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        MatrixJson::Nested(m.row_iter().map(|r| r.iter().copied().collect()).collect())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmissionJson {
    pub matrix: MatrixJson,
    pub observations: Vec<Option<usize>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelJson {
    pub alphabet_size: usize,
    pub edge_potentials: Vec<MatrixJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_potentials: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emission: Option<EmissionJson>,
}

fn from_json_str<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| Error::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

impl ModelJson {
    /// Builds the model without checking its invariants (see
    /// [`crate::model::validate_model`]); only shape problems that prevent
    /// building matrices are reported here.
    pub fn into_model_unchecked(self) -> Result<HiddenReciprocalModel> {
        let d = self.alphabet_size;
        let edges = self
            .edge_potentials
            .iter()
            .enumerate()
            .map(|(k, m)| m.to_matrix(d, d, &format!("edge_potentials[{k}]")))
            .collect::<Result<Vec<_>>>()?;
        let nodes = match (self.node_potentials, self.emission) {
            (Some(_), Some(_)) => {
                return Err(Error::Schema {
                    path: ".".into(),
                    message: "give either node_potentials or emission, not both".into(),
                })
            }
            (Some(n), None) => n.into_iter().map(DVector::from_vec).collect(),
            (None, Some(e)) => {
                let cols = match &e.matrix {
                    MatrixJson::Flat(v) if d > 0 => v.len() / d,
                    _ => 0,
                };
                let matrix = e.matrix.to_matrix(d, cols, "emission.matrix")?;
                if matrix.nrows() != d {
                    return Err(Error::Schema {
                        path: "emission.matrix".into(),
                        message: format!("emission matrix has {} rows, expected {d}", matrix.nrows()),
                    });
                }
                if e.observations.len() != edges.len() {
                    return Err(Error::Schema {
                        path: "emission.observations".into(),
                        message: format!(
                            "{} observations for {} nodes",
                            e.observations.len(),
                            edges.len()
                        ),
                    });
                }
                let spec = EmissionSpec {
                    emission_matrix: matrix,
                    observations: e.observations,
                };
                emissions_to_node_potentials(&spec)?
            }
            (None, None) => vec![DVector::from_element(d, 1.0); edges.len()],
        };
        Ok(HiddenReciprocalModel::from_parts(d, edges, nodes))
    }

    pub fn from_model(model: &HiddenReciprocalModel) -> Self {
        Self {
            alphabet_size: model.alphabet_size(),
            edge_potentials: model.edge_potentials().iter().map(MatrixJson::from_matrix).collect(),
            node_potentials: Some(model.node_potentials().iter().map(|v| v.iter().copied().collect()).collect()),
            emission: None,
        }
    }
}

/// Parses a model without checking its invariants.
pub fn parse_model_unchecked(text: &str) -> Result<HiddenReciprocalModel> {
    from_json_str::<ModelJson>(text)?.into_model_unchecked()
}

/// Parses and validates a model.
pub fn parse_model(text: &str) -> Result<HiddenReciprocalModel> {
    let m = parse_model_unchecked(text)?;
    m.ensure_valid()?;
    Ok(m)
}

pub fn model_to_json(model: &HiddenReciprocalModel) -> String {
    serde_json::to_string_pretty(&ModelJson::from_model(model)).expect("model serializes")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlocksJson {
    pub block_dim: usize,
    pub blocks: Vec<[MatrixJson; 3]>,
}

pub fn parse_blocks(text: &str) -> Result<SecondOrderBlocks> {
    let b: BlocksJson = from_json_str(text)?;
    let n = b.block_dim;
    let triples = b
        .blocks
        .iter()
        .enumerate()
        .map(|(k, [m0, mp, mm])| {
            let mats = [
                m0.to_matrix(n, n, &format!("blocks[{k}][0]"))?,
                mp.to_matrix(n, n, &format!("blocks[{k}][1]"))?,
                mm.to_matrix(n, n, &format!("blocks[{k}][2]"))?,
            ];
            let [diagonal, plus, minus] = mats;
            Ok(BlockTriple { diagonal, plus, minus })
        })
        .collect::<Result<Vec<_>>>()?;
    SecondOrderBlocks::new(n, triples)
}

pub fn blocks_to_json(blocks: &SecondOrderBlocks) -> String {
    let b = BlocksJson {
        block_dim: blocks.block_dim(),
        blocks: blocks
            .blocks()
            .iter()
            .map(|t| {
                [
                    MatrixJson::from_matrix(&t.diagonal),
                    MatrixJson::from_matrix(&t.plus),
                    MatrixJson::from_matrix(&t.minus),
                ]
            })
            .collect(),
    };
    serde_json::to_string_pretty(&b).expect("blocks serialize")
}

/// Reads a file, or standard input when `path` is `-`.
pub fn read_input(path: &str) -> Result<String> {
    if path == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        Ok(std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::random_model;

    #[test]
    fn nested_and_flat_agree() {
        let a = parse_model(r#"{"alphabet_size": 2, "edge_potentials": [[[1, 2], [3, 4]], [1, 2, 3, 4], [[1, 1], [1, 1]]]}"#)
            .unwrap();
        assert_eq!(a.edge(0), a.edge(1));
        assert_eq!(a.edge(0)[(0, 1)], 2.0);
        assert!(a.node_potentials().iter().all(|v| v.iter().all(|&x| x == 1.0)));
    }

    #[test]
    fn emission_with_missing_observations() {
        let m = parse_model(
            r#"{"alphabet_size": 2, "edge_potentials": [[1,1,1,1],[1,1,1,1],[1,1,1,1]],
                "emission": {"matrix": [[0.9, 0.1], [0.2, 0.8]], "observations": [1, null, 0]}}"#,
        )
        .unwrap();
        assert_eq!(m.node(0).as_slice(), &[0.1, 0.8]);
        assert_eq!(m.node(1).as_slice(), &[1.0, 1.0]);
        assert_eq!(m.node(2).as_slice(), &[0.9, 0.2]);
    }

    #[test]
    fn schema_errors_carry_paths() {
        let e = parse_model(r#"{"alphabet_size": 2, "edge_potentials": [[1,1,1,1], [1, "x", 1, 1]]}"#).unwrap_err();
        match e {
            Error::Schema { path, .. } => assert!(path.starts_with("edge_potentials[1]"), "{path}"),
            other => panic!("{other}"),
        }
        let e = parse_model(r#"{"alphabet_size": 2, "edge_potentials": [[1,1,1], [1,1,1,1], [1,1,1,1]]}"#).unwrap_err();
        assert!(matches!(e, Error::Schema { ref path, .. } if path == "edge_potentials[0]"));
        let e = parse_model(r#"{"alphabet_size": 2, "edge_potentials": [[[1,1],[1]], [1,1,1,1], [1,1,1,1]]}"#).unwrap_err();
        assert!(matches!(e, Error::Schema { ref path, .. } if path == "edge_potentials[0][1]"));
        let e = parse_model(r#"{"alphabet_size": 2, "edge_potentials": [], "bogus": 1}"#).unwrap_err();
        assert!(matches!(e, Error::Schema { .. }));
        assert!(matches!(parse_model("{"), Err(Error::Schema { .. })));
    }

    #[test]
    fn invariant_errors_are_validation_errors() {
        let text = r#"{"alphabet_size": 2, "edge_potentials": [[1,-1,1,1], [1,1,1,1], [0,0,0,0]]}"#;
        let m = parse_model_unchecked(text).unwrap();
        assert_eq!(crate::model::validate_model(&m).len(), 2);
        assert!(matches!(parse_model(text), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn model_roundtrip_is_lossless() {
        let m = random_model(3, 5, 1, 0.0).unwrap();
        assert_eq!(parse_model(&model_to_json(&m)).unwrap(), m);
    }

    #[test]
    fn blocks_roundtrip() {
        let text = r#"{"block_dim": 1, "blocks": [[[2], [0.5], [0.5]], [[2], [0.5], [0.5]], [[2], [0.5], [0.5]], [[2], [0.5], [0.5]]]}"#;
        let b = parse_blocks(text).unwrap();
        assert_eq!(b, SecondOrderBlocks::scalar_stationary(4, 2.0, 0.5).unwrap());
        assert_eq!(parse_blocks(&blocks_to_json(&b)).unwrap(), b);
        let e = parse_blocks(r#"{"block_dim": 2, "blocks": [[[1,0,0,1], [0,0,0], [0,0,0,0]]]}"#).unwrap_err();
        assert!(matches!(e, Error::Schema { ref path, .. } if path == "blocks[0][1]"));
    }
}
