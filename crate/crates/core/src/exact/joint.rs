//! Exhaustive joint distribution of a model: the ground-truth oracle.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{BeliefSet, HiddenReciprocalModel};

/// Default refusal threshold for enumeration: 2^24 configurations.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1 << 24;

/// Normalization must hold to this tolerance.
pub const TABLE_SUM_TOL: f64 = 1e-10;

/// Joint probabilities over all `D^L` configurations. Configurations are
/// indexed in mixed radix with node 0 as the most significant digit, so the
/// flat array reshapes to a `D x D x .. x D` row-major tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    alphabet_size: usize,
    num_nodes: usize,
    probabilities: Vec<f64>,
    partition_function: Option<f64>,
}

impl JointTable {
    /// Accepts an already normalized table.
    pub fn from_probabilities(alphabet_size: usize, num_nodes: usize, probabilities: Vec<f64>) -> Result<Self> {
        let expected = checked_states(alphabet_size, num_nodes, u64::MAX)?;
        if probabilities.len() as u128 != expected {
            return Err(Error::Dimension(format!(
                "table has {} entries, expected {alphabet_size}^{num_nodes} = {expected}",
                probabilities.len()
            )));
        }
        if let Some(i) = probabilities.iter().position(|&p| !(p >= 0.0 && p.is_finite())) {
            return Err(Error::Dimension(format!("entry {i} is negative or not finite")));
        }
        let s = pairwise_sum(&probabilities);
        if (s - 1.0).abs() > TABLE_SUM_TOL {
            return Err(Error::Dimension(format!("table sums to {s}, expected 1")));
        }
        Ok(Self {
            alphabet_size,
            num_nodes,
            probabilities,
            partition_function: None,
        })
    }

    /// Normalizes nonnegative weights into a table.
    pub fn from_weights(alphabet_size: usize, num_nodes: usize, weights: Vec<f64>) -> Result<Self> {
        let z = pairwise_sum(&weights);
        if !(z > 0.0 && z.is_finite()) {
            return Err(Error::ZeroPartition);
        }
        let probabilities = weights.into_iter().map(|w| w / z).collect();
        let mut t = Self::from_probabilities(alphabet_size, num_nodes, probabilities)?;
        t.partition_function = Some(z);
        Ok(t)
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// Partition function when the table was built from unnormalized weights.
    pub fn partition_function(&self) -> Option<f64> {
        self.partition_function
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn is_positive(&self) -> bool {
        self.probabilities.iter().all(|&p| p > 0.0)
    }

    pub fn decode(&self, index: usize) -> Vec<usize> {
        decode_config(index, self.alphabet_size, self.num_nodes)
    }

    pub fn encode(&self, config: &[usize]) -> usize {
        config.iter().fold(0, |acc, &x| acc * self.alphabet_size + x)
    }

    /// Marginal over `nodes` (in the given order), flattened in mixed radix
    /// with the first listed node most significant.
    pub fn marginalize(&self, nodes: &[usize]) -> Vec<f64> {
        let d = self.alphabet_size;
        let l = self.num_nodes;
        let mut out = vec![0.0; d.pow(nodes.len() as u32)];
        // stride of node k inside a full index
        let strides: Vec<usize> = (0..l).map(|k| d.pow((l - 1 - k) as u32)).collect();
        for (idx, &p) in self.probabilities.iter().enumerate() {
            let key = nodes.iter().fold(0, |acc, &k| acc * d + (idx / strides[k]) % d);
            out[key] += p;
        }
        out
    }

    /// Two-node marginal as a `D x D` matrix, rows indexed by node `i`.
    pub fn pairwise_marginal(&self, i: usize, j: usize) -> DMatrix<f64> {
        let d = self.alphabet_size;
        let flat = self.marginalize(&[i, j]);
        DMatrix::from_row_slice(d, d, &flat)
    }
}

pub(crate) fn checked_states(alphabet_size: usize, num_nodes: usize, cap: u64) -> Result<u128> {
    let mut states: u128 = 1;
    for _ in 0..num_nodes {
        states = states.saturating_mul(alphabet_size as u128);
    }
    if states > cap as u128 || states > usize::MAX as u128 {
        return Err(Error::CapExceeded { states, cap });
    }
    Ok(states)
}

pub(crate) fn decode_config(mut index: usize, d: usize, l: usize) -> Vec<usize> {
    let mut out = vec![0; l];
    for k in (0..l).rev() {
        out[k] = index % d;
        index /= d;
    }
    out
}

/// Deterministic pairwise (tree) summation over a fixed order.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 64;
    if xs.len() <= BLOCK {
        xs.iter().sum()
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

/// Enumerates `p(x) ∝ Π ψ_{k,k+1}(x_k, x_{k+1}) Π ψ_k(x_k)` over every
/// configuration. Each weight is computed independently, so the result is
/// bit-identical however the work is split across threads.
pub fn joint_table(model: &HiddenReciprocalModel, cap: u64) -> Result<JointTable> {
    model.ensure_valid()?;
    let d = model.alphabet_size();
    let l = model.num_nodes();
    let states = checked_states(d, l, cap)? as usize;
    let weights: Vec<f64> = (0..states)
        .into_par_iter()
        .with_min_len(1 << 12)
        .map(|idx| model.weight(&decode_config(idx, d, l)))
        .collect();
    JointTable::from_weights(d, l, weights)
}

/// Single-node marginals by summing the table.
pub fn exact_marginals_bruteforce(table: &JointTable) -> BeliefSet {
    let d = table.alphabet_size;
    let beliefs = (0..table.num_nodes)
        .map(|k| {
            let m = table.marginalize(&[k]);
            let s: f64 = m.iter().sum();
            DVector::from_iterator(d, m.into_iter().map(|x| x / s))
        })
        .collect();
    BeliefSet::new(beliefs)
}
