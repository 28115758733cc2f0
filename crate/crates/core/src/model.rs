//! Hidden reciprocal models: a cyclic pairwise Markov random field over `L`
//! hidden nodes with alphabet `{0, .., D-1}`.
//!
//! Edge `k` joins node `k` and node `(k + 1) mod L`. Its potential is stored as
//! a `D x D` matrix whose entry `(a, b)` is the compatibility of `x_k = a` and
//! `x_{k+1} = b`. Node potentials absorb the (fixed) observation record.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Smallest loop we accept: three nodes.
pub const MIN_NODES: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct HiddenReciprocalModel {
    alphabet_size: usize,
    edge_potentials: Vec<DMatrix<f64>>,
    node_potentials: Vec<DVector<f64>>,
}

/// One invariant violation reported by [`validate_model`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    EmptyAlphabet,
    TooFewNodes { num_nodes: usize },
    CountMismatch { edges: usize, nodes: usize },
    EdgeShape { edge: usize, rows: usize, cols: usize },
    NodeShape { node: usize, len: usize },
    InvalidEdgeEntry { edge: usize, row: usize, col: usize, value: f64 },
    InvalidNodeEntry { node: usize, index: usize, value: f64 },
    DegenerateEdgePotential { edge: usize },
    DegenerateNodePotential { node: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyAlphabet => write!(f, "alphabet_size < 1"),
            Violation::TooFewNodes { num_nodes } => {
                write!(f, "num_nodes < 3 (got {num_nodes})")
            }
            Violation::CountMismatch { edges, nodes } => write!(
                f,
                "edge/node count mismatch: {edges} edge potentials for {nodes} node potentials"
            ),
            Violation::EdgeShape { edge, rows, cols } => {
                write!(f, "edge potential {edge} has shape {rows}x{cols}")
            }
            Violation::NodeShape { node, len } => {
                write!(f, "node potential {node} has length {len}")
            }
            Violation::InvalidEdgeEntry { edge, row, col, value } => write!(
                f,
                "edge potential {edge} entry ({row}, {col}) = {value} is negative or not finite"
            ),
            Violation::InvalidNodeEntry { node, index, value } => write!(
                f,
                "node potential {node} entry {index} = {value} is negative or not finite"
            ),
            Violation::DegenerateEdgePotential { edge } => {
                write!(f, "degenerate edge potential at edge {edge} (all zeros)")
            }
            Violation::DegenerateNodePotential { node } => {
                write!(f, "degenerate node potential at node {node} (all zeros)")
            }
        }
    }
}

impl HiddenReciprocalModel {
    /// Builds a model and rejects it if any invariant fails.
    pub fn new(
        alphabet_size: usize,
        edge_potentials: Vec<DMatrix<f64>>,
        node_potentials: Vec<DVector<f64>>,
    ) -> Result<Self> {
        let model = Self::from_parts(alphabet_size, edge_potentials, node_potentials);
        model.ensure_valid()?;
        Ok(model)
    }

    /// Builds a model without checking invariants; use [`validate_model`] to
    /// obtain the list of problems.
    pub fn from_parts(
        alphabet_size: usize,
        edge_potentials: Vec<DMatrix<f64>>,
        node_potentials: Vec<DVector<f64>>,
    ) -> Self {
        Self {
            alphabet_size,
            edge_potentials,
            node_potentials,
        }
    }

    /// Model with the given edge potentials and all-ones node potentials
    /// (no evidence anywhere).
    pub fn without_evidence(alphabet_size: usize, edge_potentials: Vec<DMatrix<f64>>) -> Result<Self> {
        let node_potentials = vec![DVector::from_element(alphabet_size, 1.0); edge_potentials.len()];
        Self::new(alphabet_size, edge_potentials, node_potentials)
    }

    /// All potentials identically one.
    pub fn uniform(alphabet_size: usize, num_nodes: usize) -> Result<Self> {
        Self::without_evidence(
            alphabet_size,
            vec![DMatrix::from_element(alphabet_size, alphabet_size, 1.0); num_nodes],
        )
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn num_nodes(&self) -> usize {
        self.node_potentials.len()
    }

    pub fn edge_potentials(&self) -> &[DMatrix<f64>] {
        &self.edge_potentials
    }

    pub fn node_potentials(&self) -> &[DVector<f64>] {
        &self.node_potentials
    }

    /// Potential of edge `k` (between `k` and `k + 1`), index taken modulo `L`.
    pub fn edge(&self, k: usize) -> &DMatrix<f64> {
        &self.edge_potentials[k % self.edge_potentials.len()]
    }

    pub fn node(&self, k: usize) -> &DVector<f64> {
        &self.node_potentials[k % self.node_potentials.len()]
    }

    /// Endpoints `(k, (k + 1) mod L)` of edge `k`.
    pub fn edge_endpoints(&self, k: usize) -> (usize, usize) {
        let l = self.num_nodes();
        (k % l, (k + 1) % l)
    }

    pub fn next(&self, k: usize) -> usize {
        (k + 1) % self.num_nodes()
    }

    pub fn prev(&self, k: usize) -> usize {
        let l = self.num_nodes();
        (k + l - 1) % l
    }

    /// Returns a copy with node potentials replaced.
    pub fn with_node_potentials(&self, node_potentials: Vec<DVector<f64>>) -> Result<Self> {
        Self::new(self.alphabet_size, self.edge_potentials.clone(), node_potentials)
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let report = validate_model(self);
        if report.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidModel(report.iter().map(|v| v.to_string()).collect()))
        }
    }

    /// Unnormalized weight of one configuration.
    pub fn weight(&self, config: &[usize]) -> f64 {
        let l = self.num_nodes();
        let mut w = 1.0;
        for k in 0..l {
            w *= self.node_potentials[k][config[k]];
            w *= self.edge_potentials[k][(config[k], config[(k + 1) % l])];
        }
        w
    }
}

/// Collects every invariant violation of `model`; an empty list means valid.
pub fn validate_model(model: &HiddenReciprocalModel) -> Vec<Violation> {
    let mut out = Vec::new();
    let d = model.alphabet_size;
    if d == 0 {
        out.push(Violation::EmptyAlphabet);
    }
    let l = model.node_potentials.len();
    if l < MIN_NODES {
        out.push(Violation::TooFewNodes { num_nodes: l });
    }
    if model.edge_potentials.len() != l {
        out.push(Violation::CountMismatch {
            edges: model.edge_potentials.len(),
            nodes: l,
        });
    }
    for (k, m) in model.edge_potentials.iter().enumerate() {
        if m.nrows() != d || m.ncols() != d {
            out.push(Violation::EdgeShape {
                edge: k,
                rows: m.nrows(),
                cols: m.ncols(),
            });
            continue;
        }
        let mut any_positive = false;
        for r in 0..d {
            for c in 0..d {
                let v = m[(r, c)];
                if !(v.is_finite() && v >= 0.0) {
                    out.push(Violation::InvalidEdgeEntry { edge: k, row: r, col: c, value: v });
                } else if v > 0.0 {
                    any_positive = true;
                }
            }
        }
        if !any_positive {
            out.push(Violation::DegenerateEdgePotential { edge: k });
        }
    }
    for (k, v) in model.node_potentials.iter().enumerate() {
        if v.len() != d {
            out.push(Violation::NodeShape { node: k, len: v.len() });
            continue;
        }
        let mut any_positive = false;
        for (i, &x) in v.iter().enumerate() {
            if !(x.is_finite() && x >= 0.0) {
                out.push(Violation::InvalidNodeEntry { node: k, index: i, value: x });
            } else if x > 0.0 {
                any_positive = true;
            }
        }
        if !any_positive {
            out.push(Violation::DegenerateNodePotential { node: k });
        }
    }
    out
}

/// Emission channel plus an observation record. `None` marks an unobserved
/// node, whose node potential defaults to the all-ones vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionSpec {
    /// `D x D_obs`, entry `(a, o) = p(y = o | x = a)`.
    pub emission_matrix: DMatrix<f64>,
    pub observations: Vec<Option<usize>>,
}

/// Row sums of the emission matrix must equal one within this tolerance.
pub const EMISSION_ROW_TOL: f64 = 1e-12;

impl EmissionSpec {
    pub fn new(emission_matrix: DMatrix<f64>, observations: Vec<usize>) -> Self {
        Self {
            emission_matrix,
            observations: observations.into_iter().map(Some).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.emission_matrix;
        if m.nrows() == 0 || m.ncols() == 0 {
            return Err(Error::Dimension("emission matrix is empty".into()));
        }
        for r in 0..m.nrows() {
            let mut sum = 0.0;
            for c in 0..m.ncols() {
                let v = m[(r, c)];
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::NegativeEntry { row: r, col: c });
                }
                sum += v;
            }
            if (sum - 1.0).abs() > EMISSION_ROW_TOL {
                return Err(Error::Dimension(format!(
                    "emission row {r} sums to {sum}, expected 1"
                )));
            }
        }
        for (node, obs) in self.observations.iter().enumerate() {
            if let Some(symbol) = *obs {
                if symbol >= m.ncols() {
                    return Err(Error::ObservationOutOfRange {
                        node,
                        symbol,
                        num_symbols: m.ncols(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Node potential `k` is the emission column selected by the observation at
/// `k`: entry `a` equals `p(y_k | x_k = a)`.
pub fn emissions_to_node_potentials(spec: &EmissionSpec) -> Result<Vec<DVector<f64>>> {
    spec.validate()?;
    let d = spec.emission_matrix.nrows();
    Ok(spec
        .observations
        .iter()
        .map(|obs| match obs {
            Some(o) => spec.emission_matrix.column(*o).into_owned(),
            None => DVector::from_element(d, 1.0),
        })
        .collect())
}

/// Seeded random model with every potential entry uniform on
/// `[positivity_floor, 1]`.
///
/// With a zero floor a potential could in principle come out all zero; such
/// draws are resampled so the result always validates.
pub fn random_model(
    alphabet_size: usize,
    num_nodes: usize,
    seed: u64,
    positivity_floor: f64,
) -> Result<HiddenReciprocalModel> {
    if alphabet_size < 2 {
        return Err(Error::Dimension(format!(
            "alphabet size must be at least 2, got {alphabet_size}"
        )));
    }
    if num_nodes < MIN_NODES {
        return Err(Error::Dimension(format!(
            "loop needs at least {MIN_NODES} nodes, got {num_nodes}"
        )));
    }
    if !(0.0..=1.0).contains(&positivity_floor) {
        return Err(Error::Dimension(format!(
            "positivity floor must lie in [0, 1], got {positivity_floor}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| positivity_floor + (1.0 - positivity_floor) * rng.random::<f64>();
    let d = alphabet_size;
    let mut edges = Vec::with_capacity(num_nodes);
    for _ in 0..num_nodes {
        loop {
            let m = DMatrix::from_fn(d, d, |_, _| draw(&mut rng));
            if m.iter().any(|&x| x > 0.0) {
                edges.push(m);
                break;
            }
        }
    }
    let mut nodes = Vec::with_capacity(num_nodes);
    for _ in 0..num_nodes {
        loop {
            let v = DVector::from_fn(d, |_, _| draw(&mut rng));
            if v.iter().any(|&x| x > 0.0) {
                nodes.push(v);
                break;
            }
        }
    }
    HiddenReciprocalModel::new(alphabet_size, edges, nodes)
}

/// Per-node posterior marginals (exact or approximate).
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefSet {
    pub beliefs: Vec<DVector<f64>>,
}

impl BeliefSet {
    pub fn new(beliefs: Vec<DVector<f64>>) -> Self {
        Self { beliefs }
    }

    pub fn num_nodes(&self) -> usize {
        self.beliefs.len()
    }

    pub fn get(&self, k: usize) -> &DVector<f64> {
        &self.beliefs[k]
    }

    /// Largest entrywise difference over all nodes.
    pub fn max_abs_diff(&self, other: &BeliefSet) -> f64 {
        self.beliefs
            .iter()
            .zip(&other.beliefs)
            .map(|(a, b)| (a - b).amax())
            .fold(0.0, f64::max)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.beliefs.iter().map(|b| b.iter().copied().collect()).collect()
    }
}

/// Scales a nonnegative vector to unit sum; `None` when the sum is zero or not
/// finite.
pub(crate) fn normalize_l1(v: DVector<f64>) -> Option<DVector<f64>> {
    let s: f64 = v.sum();
    if s > 0.0 && s.is_finite() {
        Some(v / s)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_model_is_valid() {
        let m = HiddenReciprocalModel::uniform(2, 4).unwrap();
        assert!(validate_model(&m).is_empty());
    }

    #[test]
    fn two_node_loop_is_rejected() {
        let m = HiddenReciprocalModel::from_parts(
            2,
            vec![DMatrix::from_element(2, 2, 1.0); 2],
            vec![DVector::from_element(2, 1.0); 2],
        );
        let report = validate_model(&m);
        assert_eq!(report, vec![Violation::TooFewNodes { num_nodes: 2 }]);
        assert!(report[0].to_string().starts_with("num_nodes < 3"));
    }

    #[test]
    fn zero_edge_matrix_is_degenerate() {
        let mut edges = vec![DMatrix::from_element(2, 2, 1.0); 4];
        edges[2] = DMatrix::zeros(2, 2);
        let m = HiddenReciprocalModel::from_parts(2, edges, vec![DVector::from_element(2, 1.0); 4]);
        let report = validate_model(&m);
        assert_eq!(report, vec![Violation::DegenerateEdgePotential { edge: 2 }]);
        assert!(report[0].to_string().contains("degenerate edge potential"));
    }

    #[test]
    fn negative_and_nan_entries_are_reported() {
        let mut edges = vec![DMatrix::from_element(2, 2, 1.0); 3];
        edges[0][(0, 1)] = -1.0;
        let mut nodes = vec![DVector::from_element(2, 1.0); 3];
        nodes[1][0] = f64::NAN;
        let m = HiddenReciprocalModel::from_parts(2, edges, nodes);
        let report = validate_model(&m);
        assert_eq!(report.len(), 2);
        assert!(HiddenReciprocalModel::new(2, m.edge_potentials.clone(), m.node_potentials.clone()).is_err());
    }

    #[test]
    fn cyclic_edge_endpoints() {
        let m = HiddenReciprocalModel::uniform(2, 5).unwrap();
        for k in 0..5 {
            assert_eq!(m.edge_endpoints(k), (k, (k + 1) % 5));
            assert_eq!(m.prev(m.next(k)), k);
        }
        assert_eq!(m.edge_endpoints(4), (4, 0));
        assert_eq!(m.prev(0), 4);
    }

    #[test]
    fn identity_emission_gives_indicators() {
        let spec = EmissionSpec::new(DMatrix::identity(2, 2), vec![0, 1, 0, 1]);
        let pots = emissions_to_node_potentials(&spec).unwrap();
        for (k, p) in pots.iter().enumerate() {
            let mut e = DVector::zeros(2);
            e[k % 2] = 1.0;
            assert_eq!(*p, e);
        }
    }

    #[test]
    fn uniform_emission_gives_constant_potentials() {
        let spec = EmissionSpec::new(DMatrix::from_element(2, 2, 0.5), vec![0, 1, 1, 0]);
        for p in emissions_to_node_potentials(&spec).unwrap() {
            assert_eq!(p.as_slice(), &[0.5, 0.5]);
        }
    }

    #[test]
    fn emission_column_read_off() {
        let e = DMatrix::from_row_slice(2, 2, &[0.9, 0.1, 0.2, 0.8]);
        let spec = EmissionSpec::new(e, vec![0, 1, 0]);
        let pots = emissions_to_node_potentials(&spec).unwrap();
        assert_eq!(pots[1].as_slice(), &[0.1, 0.8]);
        assert_eq!(pots[0].as_slice(), &[0.9, 0.2]);
    }

    #[test]
    fn emission_errors() {
        let e = DMatrix::from_row_slice(2, 2, &[0.9, 0.1, 0.2, 0.8]);
        let spec = EmissionSpec::new(e.clone(), vec![0, 2, 0]);
        assert!(matches!(
            emissions_to_node_potentials(&spec),
            Err(Error::ObservationOutOfRange { node: 1, symbol: 2, .. })
        ));
        let bad = DMatrix::from_row_slice(2, 2, &[0.9, 0.2, 0.2, 0.8]);
        assert!(emissions_to_node_potentials(&EmissionSpec::new(bad, vec![0, 0, 0])).is_err());
    }

    #[test]
    fn unobserved_nodes_default_to_ones() {
        let e = DMatrix::from_row_slice(2, 2, &[0.9, 0.1, 0.2, 0.8]);
        let spec = EmissionSpec {
            emission_matrix: e,
            observations: vec![Some(1), None, Some(0)],
        };
        let pots = emissions_to_node_potentials(&spec).unwrap();
        assert_eq!(pots[1].as_slice(), &[1.0, 1.0]);
    }

    #[test]
    fn unused_symbol_relabeling_is_invisible() {
        // columns 2 and 3 are never observed; swapping them changes nothing
        let e = DMatrix::from_row_slice(2, 4, &[0.5, 0.1, 0.3, 0.1, 0.2, 0.6, 0.05, 0.15]);
        let mut swapped = e.clone();
        swapped.swap_columns(2, 3);
        let obs = vec![0, 1, 1, 0];
        let a = emissions_to_node_potentials(&EmissionSpec::new(e, obs.clone())).unwrap();
        let b = emissions_to_node_potentials(&EmissionSpec::new(swapped, obs)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn random_model_is_deterministic() {
        let a = random_model(2, 4, 7, 0.1).unwrap();
        let b = random_model(2, 4, 7, 0.1).unwrap();
        assert_eq!(a, b);
        let c = random_model(2, 4, 8, 0.1).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn random_model_respects_floor() {
        let m = random_model(2, 4, 7, 0.1).unwrap();
        let min_edge = m.edge_potentials().iter().flat_map(|e| e.iter()).fold(f64::INFINITY, |a, &b| a.min(b));
        let min_node = m.node_potentials().iter().flat_map(|e| e.iter()).fold(f64::INFINITY, |a, &b| a.min(b));
        assert!(min_edge >= 0.1 && min_node >= 0.1);
    }

    #[test]
    fn random_model_validates() {
        let m = random_model(3, 5, 1, 0.0).unwrap();
        assert!(validate_model(&m).is_empty());
    }

    #[test]
    fn random_model_rejects_bad_dims() {
        assert!(random_model(1, 4, 0, 0.0).is_err());
        assert!(random_model(2, 2, 0, 0.0).is_err());
        assert!(random_model(2, 4, 0, -0.5).is_err());
    }
}
