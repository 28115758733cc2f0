//! Transfer-matrix oracle: exact marginals in `O(L D^3)` and exact sampling.
//!
//! With `Ψ_k` the edge matrix of edge `k` and `D_k = diag(ψ_k)`, the marginal
//! of node `k` is the diagonal of the loop product anchored at `k`,
//!
//! ```text
//! p_k(x) ∝ [Ψ_k D_{k+1} Ψ_{k+1} ··· D_{L-1} Ψ_{L-1} · D_0 Ψ_0 ··· Ψ_{k-1} D_k]_{xx}
//! ```
//!
//! split here as a suffix (node `k` back round to node 0) times a prefix
//! (node 0 up to node `k`). Both are rescaled by their largest entry at
//! every step; the scalars cancel in normalized marginals.

use nalgebra::{DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{normalize_l1, BeliefSet, HiddenReciprocalModel};

fn rescale(m: &mut DMatrix<f64>) -> Result<()> {
    let s = m.amax();
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::ZeroPartition);
    }
    *m /= s;
    Ok(())
}

struct LoopProducts {
    /// prefix[k] = D_0 Ψ_0 D_1 ··· Ψ_{k-1} D_k (rows x_0, cols x_k)
    prefix: Vec<DMatrix<f64>>,
    /// suffix[k] = Ψ_k D_{k+1} ··· D_{L-1} Ψ_{L-1} (rows x_k, cols x_0)
    suffix: Vec<DMatrix<f64>>,
}

fn loop_products(model: &HiddenReciprocalModel) -> Result<LoopProducts> {
    model.ensure_valid()?;
    let l = model.num_nodes();
    let mut prefix = Vec::with_capacity(l);
    let mut p = DMatrix::from_diagonal(model.node(0));
    rescale(&mut p)?;
    prefix.push(p.clone());
    for k in 1..l {
        p = &p * model.edge(k - 1);
        for (mut col, &w) in p.column_iter_mut().zip(model.node(k).iter()) {
            col *= w;
        }
        rescale(&mut p)?;
        prefix.push(p.clone());
    }
    let mut suffix = vec![DMatrix::zeros(0, 0); l];
    let mut s = model.edge(l - 1).clone();
    rescale(&mut s)?;
    suffix[l - 1] = s.clone();
    for k in (0..l - 1).rev() {
        let mut scaled = s.clone();
        for (mut row, &w) in scaled.row_iter_mut().zip(model.node(k + 1).iter()) {
            row *= w;
        }
        s = model.edge(k) * scaled;
        rescale(&mut s)?;
        suffix[k] = s.clone();
    }
    Ok(LoopProducts { prefix, suffix })
}

/// Exact single-node marginals via loop transfer products.
pub fn exact_marginals_transfer(model: &HiddenReciprocalModel) -> Result<BeliefSet> {
    let lp = loop_products(model)?;
    let d = model.alphabet_size();
    let beliefs = (0..model.num_nodes())
        .map(|k| {
            let diag = DVector::from_fn(d, |x, _| {
                (0..d).map(|a| lp.prefix[k][(a, x)] * lp.suffix[k][(x, a)]).sum::<f64>()
            });
            normalize_l1(diag).ok_or(Error::ZeroPartition)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BeliefSet::new(beliefs))
}

const SAMPLE_BATCH: usize = 8192;

/// Exact samples, one row of `L` states per sample.
///
/// `x_0` is drawn from its marginal; given `x_0` the loop is an open chain,
/// and `x_j` is drawn from `Ψ_{j-1}(x_{j-1}, ·) ψ_j(·) R_j(·, x_0)` where
/// `R_j` is the suffix product closing the loop back to `x_0`. Work is split
/// in fixed batches, each with its own ChaCha stream, so the output depends
/// only on the seed.
pub fn sample_joint(model: &HiddenReciprocalModel, n_samples: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let lp = loop_products(model)?;
    let d = model.alphabet_size();
    let l = model.num_nodes();

    let p0: Vec<f64> = (0..d).map(|a| model.node(0)[a] * lp.suffix[0][(a, a)]).collect();
    let first = WeightedIndex::new(&p0).map_err(|_| Error::ZeroPartition)?;

    // cond[j][prev * d + x0], None when the state pair is unreachable
    let mut cond: Vec<Vec<Option<WeightedIndex<f64>>>> = vec![Vec::new(); l];
    for j in 1..l {
        for prev in 0..d {
            for x0 in 0..d {
                let w: Vec<f64> = (0..d)
                    .map(|x| model.edge(j - 1)[(prev, x)] * model.node(j)[x] * lp.suffix[j][(x, x0)])
                    .collect();
                cond[j].push(WeightedIndex::new(&w).ok());
            }
        }
    }

    let n_batches = n_samples.div_ceil(SAMPLE_BATCH);
    let batches: Vec<Result<Vec<Vec<usize>>>> = (0..n_batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let count = SAMPLE_BATCH.min(n_samples - b * SAMPLE_BATCH);
            let mut rows = Vec::with_capacity(count);
            for _ in 0..count {
                let mut x = vec![0usize; l];
                x[0] = first.sample(&mut rng);
                for j in 1..l {
                    let dist = cond[j][x[j - 1] * d + x[0]]
                        .as_ref()
                        .ok_or(Error::ZeroPartition)?;
                    x[j] = dist.sample(&mut rng);
                }
                rows.push(x);
            }
            Ok(rows)
        })
        .collect();
    let mut out = Vec::with_capacity(n_samples);
    for b in batches {
        out.extend(b?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::joint::{exact_marginals_bruteforce, joint_table, DEFAULT_ENUMERATION_CAP};
    use crate::model::random_model;

    fn brute(model: &HiddenReciprocalModel) -> BeliefSet {
        exact_marginals_bruteforce(&joint_table(model, DEFAULT_ENUMERATION_CAP).unwrap())
    }

    #[test]
    fn uniform_marginals() {
        let m = HiddenReciprocalModel::uniform(3, 5).unwrap();
        for b in exact_marginals_transfer(&m).unwrap().beliefs {
            assert!(b.iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-15));
        }
    }

    #[test]
    fn matches_bruteforce_d2_l6() {
        let m = random_model(2, 6, 21, 0.0).unwrap();
        let diff = exact_marginals_transfer(&m).unwrap().max_abs_diff(&brute(&m));
        assert!(diff <= 1e-10, "{diff}");
    }

    #[test]
    fn identity_edge_contracts_the_loop() {
        let m = random_model(3, 5, 4, 0.05).unwrap();
        let mut edges = m.edge_potentials().to_vec();
        edges[2] = DMatrix::identity(3, 3);
        let full = HiddenReciprocalModel::new(3, edges.clone(), m.node_potentials().to_vec()).unwrap();

        // identity on edge 2 forces x_2 = x_3: merge node 3 into node 2
        let mut c_edges = edges.clone();
        c_edges.remove(2);
        let mut c_nodes = m.node_potentials().to_vec();
        c_nodes[2] = c_nodes[2].component_mul(&c_nodes[3]);
        c_nodes.remove(3);
        let contracted = HiddenReciprocalModel::new(3, c_edges, c_nodes).unwrap();

        let a = exact_marginals_transfer(&full).unwrap();
        let b = exact_marginals_transfer(&contracted).unwrap();
        let bb = brute(&contracted);
        let ab = brute(&full);
        let map = [0, 1, 2, 2, 3];
        for k in 0..5 {
            assert!((a.get(k) - b.get(map[k])).amax() <= 1e-10);
            assert!((ab.get(k) - bb.get(map[k])).amax() <= 1e-10);
        }
    }

    #[test]
    fn handles_long_loops_without_underflow() {
        let m = random_model(3, 2000, 9, 0.0).unwrap();
        let b = exact_marginals_transfer(&m).unwrap();
        for v in b.beliefs {
            assert!((v.sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn hard_evidence_sampling() {
        let m = HiddenReciprocalModel::uniform(2, 4).unwrap();
        let mut nodes = m.node_potentials().to_vec();
        nodes[0] = DVector::from_row_slice(&[0.0, 1.0]);
        let m = m.with_node_potentials(nodes).unwrap();
        let s = sample_joint(&m, 1000, 5).unwrap();
        assert!(s.iter().all(|row| row[0] == 1));
    }

    #[test]
    fn sampling_is_deterministic() {
        let m = random_model(3, 5, 2, 0.0).unwrap();
        assert_eq!(sample_joint(&m, 20_000, 77).unwrap(), sample_joint(&m, 20_000, 77).unwrap());
        assert_ne!(sample_joint(&m, 100, 77).unwrap(), sample_joint(&m, 100, 78).unwrap());
    }

    #[test]
    fn uniform_sampling_within_binomial_band() {
        let m = HiddenReciprocalModel::uniform(3, 4).unwrap();
        let n = 100_000;
        let s = sample_joint(&m, n, 123).unwrap();
        let p = 1.0 / 3.0;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        for k in 0..4 {
            for a in 0..3 {
                let f = s.iter().filter(|r| r[k] == a).count() as f64 / n as f64;
                assert!((f - p).abs() <= 3.0 * sigma, "node {k} state {a}: {f}");
            }
        }
    }
}
