//! Undirected skeletons, chordality and the factor-graph view of a model.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::HiddenReciprocalModel;

/// Simple undirected graph; edges are stored as `(min, max)` pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UndirectedGraphSkeleton {
    pub num_nodes: usize,
    pub edges: BTreeSet<(usize, usize)>,
}

impl UndirectedGraphSkeleton {
    pub fn empty(num_nodes: usize) -> Self {
        Self {
            num_nodes,
            edges: BTreeSet::new(),
        }
    }

    pub fn new(num_nodes: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut g = Self::empty(num_nodes);
        for (a, b) in edges {
            g.add_edge(a, b)?;
        }
        Ok(g)
    }

    /// The cycle `0 - 1 - .. - (n-1) - 0`.
    pub fn cycle(num_nodes: usize) -> Self {
        let mut g = Self::empty(num_nodes);
        for k in 0..num_nodes {
            g.add_edge(k, (k + 1) % num_nodes).expect("cycle of length >= 3");
        }
        g
    }

    pub fn add_edge(&mut self, a: usize, b: usize) -> Result<()> {
        if a == b {
            return Err(Error::Dimension(format!("self-loop at node {a}")));
        }
        if a >= self.num_nodes || b >= self.num_nodes {
            return Err(Error::Dimension(format!("edge ({a}, {b}) out of range")));
        }
        self.edges.insert((a.min(b), a.max(b)));
        Ok(())
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    pub fn neighbors(&self, v: usize) -> BTreeSet<usize> {
        self.edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == v {
                    Some(b)
                } else if b == v {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }

    fn adjacency(&self) -> Vec<BTreeSet<usize>> {
        let mut adj = vec![BTreeSet::new(); self.num_nodes];
        for &(a, b) in &self.edges {
            adj[a].insert(b);
            adj[b].insert(a);
        }
        adj
    }
}

/// True iff every cycle longer than three has a chord.
///
/// Maximum cardinality search produces an ordering whose reverse is a
/// perfect elimination ordering exactly when the graph is chordal; the
/// ordering is then verified directly.
pub fn chordality_check(g: &UndirectedGraphSkeleton) -> bool {
    let n = g.num_nodes;
    let adj = g.adjacency();
    let mut weight = vec![0usize; n];
    let mut numbered = vec![false; n];
    // visit order of maximum cardinality search
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| !numbered[v])
            .max_by_key(|&v| (weight[v], std::cmp::Reverse(v)))
            .expect("unnumbered vertex remains");
        numbered[v] = true;
        order.push(v);
        for &u in &adj[v] {
            if !numbered[u] {
                weight[u] += 1;
            }
        }
    }
    // elimination order is the reverse of the visit order
    let mut position = vec![0usize; n];
    for (i, &v) in order.iter().rev().enumerate() {
        position[v] = i;
    }
    for v in 0..n {
        let later: Vec<usize> = adj[v].iter().copied().filter(|&u| position[u] > position[v]).collect();
        if let Some(&first) = later.iter().min_by_key(|&&u| position[u]) {
            for &u in &later {
                if u != first && !adj[first].contains(&u) {
                    return false;
                }
            }
        }
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FactorKind {
    /// Edge potential of loop edge `edge`.
    Pairwise { edge: usize },
    /// Node potential of `node`.
    Unary { node: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Factor {
    pub kind: FactorKind,
    pub variables: Vec<usize>,
}

/// Bipartite variable/factor structure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FactorGraph {
    pub num_variables: usize,
    pub factors: Vec<Factor>,
}

impl FactorGraph {
    pub fn num_incidences(&self) -> usize {
        self.factors.iter().map(|f| f.variables.len()).sum()
    }

    pub fn pairwise_count(&self) -> usize {
        self.factors.iter().filter(|f| matches!(f.kind, FactorKind::Pairwise { .. })).count()
    }

    pub fn unary_count(&self) -> usize {
        self.factors.iter().filter(|f| matches!(f.kind, FactorKind::Unary { .. })).count()
    }
}

/// One pairwise factor per loop edge plus one unary factor per node.
/// With `suppress_uniform_unary`, unary factors whose potential is constant
/// (and so carries no evidence) are left out.
pub fn build_factor_graph(model: &HiddenReciprocalModel, suppress_uniform_unary: bool) -> Result<FactorGraph> {
    model.ensure_valid()?;
    let l = model.num_nodes();
    let mut factors = Vec::with_capacity(2 * l);
    for k in 0..l {
        let (a, b) = model.edge_endpoints(k);
        factors.push(Factor {
            kind: FactorKind::Pairwise { edge: k },
            variables: vec![a, b],
        });
    }
    for k in 0..l {
        let pot = model.node(k);
        let constant = pot.iter().all(|&x| x == pot[0]);
        if suppress_uniform_unary && constant {
            continue;
        }
        factors.push(Factor {
            kind: FactorKind::Unary { node: k },
            variables: vec![k],
        });
    }
    Ok(FactorGraph {
        num_variables: l,
        factors,
    })
}
