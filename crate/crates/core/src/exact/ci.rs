//! Conditional-independence queries on a finite joint table and the
//! structural constructions built on them: Markov blankets, minimal I-maps
//! and the interval checks that characterize a reciprocal process on a loop.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::graph::UndirectedGraphSkeleton;
use crate::exact::joint::JointTable;

/// Default tolerance on probability differences for CI decisions.
pub const DEFAULT_CI_TOL: f64 = 1e-9;

fn check_sets(table: &JointTable, sets: [&[usize]; 3]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for set in sets {
        for &v in set {
            if v >= table.num_nodes() {
                return Err(Error::Dimension(format!("node {v} out of range")));
            }
            if !seen.insert(v) {
                return Err(Error::Dimension(format!("node {v} appears in more than one set")));
            }
        }
    }
    Ok(())
}

/// Largest `|p(a,b|c) - p(a|c) p(b|c)|` over all assignments with `p(c) > 0`.
pub fn ci_violation(table: &JointTable, a: &[usize], b: &[usize], c: &[usize]) -> Result<f64> {
    check_sets(table, [a, b, c])?;
    if a.is_empty() || b.is_empty() {
        return Ok(0.0);
    }
    let d = table.alphabet_size();
    let na = d.pow(a.len() as u32);
    let nb = d.pow(b.len() as u32);
    let nc = d.pow(c.len() as u32);
    let nodes: Vec<usize> = a.iter().chain(b).chain(c).copied().collect();
    // flat index ((ia * nb) + ib) * nc + ic
    let joint = table.marginalize(&nodes);
    let mut worst = 0.0f64;
    let mut pa = vec![0.0; na];
    let mut pb = vec![0.0; nb];
    for ic in 0..nc {
        pa.iter_mut().for_each(|x| *x = 0.0);
        pb.iter_mut().for_each(|x| *x = 0.0);
        let mut pc = 0.0;
        for ia in 0..na {
            for ib in 0..nb {
                let p = joint[(ia * nb + ib) * nc + ic];
                pa[ia] += p;
                pb[ib] += p;
                pc += p;
            }
        }
        if !(pc > 0.0) {
            continue;
        }
        for ia in 0..na {
            for ib in 0..nb {
                let pab = joint[(ia * nb + ib) * nc + ic] / pc;
                worst = worst.max((pab - (pa[ia] / pc) * (pb[ib] / pc)).abs());
            }
        }
    }
    Ok(worst)
}

/// `X_A ⟂ X_B | X_C` up to `tol` on conditional probability differences.
pub fn ci_test(table: &JointTable, a: &[usize], b: &[usize], c: &[usize], tol: f64) -> Result<bool> {
    Ok(ci_violation(table, a, b, c)? <= tol)
}

fn others(n: usize, exclude: &[usize]) -> Vec<usize> {
    (0..n).filter(|v| !exclude.contains(v)).collect()
}

/// A Markov blanket together with its certification status.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MarkovBlanket {
    pub node: usize,
    pub nodes: BTreeSet<usize>,
}

/// Minimal set `U` with `X_k ⟂ rest | U`.
///
/// For a positive table the blanket is unique and equals the set of nodes
/// that stay dependent on `X_k` given everything else. The candidate is then
/// certified: the blanket property must hold, and deleting any single member
/// must break it.
pub fn markov_blanket(table: &JointTable, k: usize, tol: f64) -> Result<MarkovBlanket> {
    let n = table.num_nodes();
    if k >= n {
        return Err(Error::Dimension(format!("node {k} out of range")));
    }
    if !table.is_positive() {
        return Err(Error::NonPositiveTable(
            "the Markov blanket need not be unique without positivity".into(),
        ));
    }
    let mut blanket = BTreeSet::new();
    for j in others(n, &[k]) {
        let rest = others(n, &[k, j]);
        if !ci_test(table, &[k], &[j], &rest, tol)? {
            blanket.insert(j);
        }
    }
    let u: Vec<usize> = blanket.iter().copied().collect();
    let mut excluded = u.clone();
    excluded.push(k);
    if !ci_test(table, &[k], &others(n, &excluded), &u, tol)? {
        return Err(Error::Degenerate(format!(
            "pairwise candidate {u:?} does not shield node {k}"
        )));
    }
    for &drop in &u {
        let smaller: Vec<usize> = u.iter().copied().filter(|&x| x != drop).collect();
        let mut ex = smaller.clone();
        ex.push(k);
        if ci_test(table, &[k], &others(n, &ex), &smaller, tol)? {
            return Err(Error::Degenerate(format!(
                "blanket {u:?} of node {k} is not minimal: {drop} can be removed"
            )));
        }
    }
    Ok(MarkovBlanket { node: k, nodes: blanket })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImapMethod {
    /// Edge `(i, j)` iff `X_i` and `X_j` are dependent given all other nodes.
    Pairwise,
    /// Edge `(i, j)` iff `j` lies in the Markov blanket of `i`.
    Blanket,
}

fn imap_pairwise(table: &JointTable, tol: f64) -> Result<UndirectedGraphSkeleton> {
    let n = table.num_nodes();
    let mut g = UndirectedGraphSkeleton::empty(n);
    for i in 0..n {
        for j in i + 1..n {
            if !ci_test(table, &[i], &[j], &others(n, &[i, j]), tol)? {
                g.add_edge(i, j)?;
            }
        }
    }
    Ok(g)
}

fn imap_blanket(table: &JointTable, tol: f64) -> Result<UndirectedGraphSkeleton> {
    let n = table.num_nodes();
    let mut g = UndirectedGraphSkeleton::empty(n);
    for i in 0..n {
        for j in markov_blanket(table, i, tol)?.nodes {
            g.add_edge(i, j)?;
        }
    }
    Ok(g)
}

/// Minimal I-map of a positive distribution. Both constructions are run; a
/// disagreement signals numerical trouble and is returned as an error.
pub fn minimal_imap(table: &JointTable, method: ImapMethod, tol: f64) -> Result<UndirectedGraphSkeleton> {
    if !table.is_positive() {
        return Err(Error::NonPositiveTable("minimal I-map construction assumes positivity".into()));
    }
    let pairwise = imap_pairwise(table, tol)?;
    let blanket = imap_blanket(table, tol)?;
    if pairwise != blanket {
        let diff = pairwise.edges.symmetric_difference(&blanket.edges).copied().collect();
        return Err(Error::MethodDisagreement(diff));
    }
    Ok(match method {
        ImapMethod::Pairwise => pairwise,
        ImapMethod::Blanket => blanket,
    })
}

/// One interval statement: interior ⟂ exterior given both endpoints.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalCheck {
    pub t0: usize,
    pub t1: usize,
    pub interior: Vec<usize>,
    pub exterior: Vec<usize>,
    pub violation: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PmapReport {
    pub checks: Vec<IntervalCheck>,
    pub all_hold: bool,
}

/// Checks every cyclic interval `[t0, t1]` with nonempty interior and
/// exterior: the interior must be independent of the exterior given
/// `{X_t0, X_t1}`. Requires at least four nodes (on a triangle every such
/// statement is vacuous).
pub fn pmap_check_reciprocal(table: &JointTable, tol: f64) -> Result<PmapReport> {
    let n = table.num_nodes();
    if n < 4 {
        return Err(Error::Dimension(format!("interval checks need L >= 4, got {n}")));
    }
    let mut checks = Vec::new();
    for t0 in 0..n {
        for t1 in t0 + 2..n {
            if t0 + n - t1 < 2 {
                continue;
            }
            let interior: Vec<usize> = (t0 + 1..t1).collect();
            let exterior: Vec<usize> = (t1 + 1..n).chain(0..t0).collect();
            let violation = ci_violation(table, &interior, &exterior, &[t0, t1])?;
            checks.push(IntervalCheck {
                t0,
                t1,
                interior,
                exterior,
                violation,
                holds: violation <= tol,
            });
        }
    }
    let all_hold = checks.iter().all(|c| c.holds);
    Ok(PmapReport { checks, all_hold })
}
