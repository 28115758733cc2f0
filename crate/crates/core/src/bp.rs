//! Parallel loopy belief propagation on the hidden cyclic chain.
//!
//! Messages travel in two directions round the loop. With `Ψ_k` the edge
//! matrix between node `k` and node `k+1` and `ψ_k` the node potential, one
//! synchronous sweep computes, for every `k` at once,
//!
//! ```text
//! f'_k = α Ψ_{k-1}ᵀ (ψ_{k-1} ⊙ f_{k-1})     (message k-1 -> k)
//! g'_k = α Ψ_k     (ψ_{k+1} ⊙ g_{k+1})      (message k+1 -> k)
//! ```
//!
//! and beliefs are `b_k ∝ ψ_k ⊙ f_k ⊙ g_k`. Composing `L` sweeps maps
//! `f_k` to `C_fwd(k) f_k`, where the loop transfer matrix
//! `C_fwd(k) = Ψ_{k-1}ᵀ D_{k-1} ··· Ψ_kᵀ D_k` with `D_i = diag(ψ_i)`; the
//! backward analogue is `C_bwd(k) = Ψ_k D_{k+1} ··· Ψ_{k-1} D_k`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hilbert::{face_distance, primitivity_index};
use crate::linalg::perron_pair;
use crate::model::{normalize_l1, BeliefSet, HiddenReciprocalModel};

/// Default convergence tolerance on the Hilbert distance between sweeps.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Default sweep budget, `10 L D^2`.
pub fn default_t_max(model: &HiddenReciprocalModel) -> usize {
    10 * model.num_nodes() * model.alphabet_size().pow(2)
}

/// `forward[k]` is the message from node `k-1` into node `k`, `backward[k]`
/// the message from node `k+1` into node `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageSet {
    pub forward: Vec<DVector<f64>>,
    pub backward: Vec<DVector<f64>>,
    /// Number of sweeps applied since initialization.
    pub t: usize,
}

impl MessageSet {
    pub fn num_nodes(&self) -> usize {
        self.forward.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMode {
    Uniform,
    SeededRandom(u64),
}

pub fn init_messages(model: &HiddenReciprocalModel, mode: InitMode) -> MessageSet {
    let d = model.alphabet_size();
    let l = model.num_nodes();
    match mode {
        InitMode::Uniform => {
            let u = DVector::from_element(d, 1.0 / d as f64);
            MessageSet {
                forward: vec![u.clone(); l],
                backward: vec![u; l],
                t: 0,
            }
        }
        InitMode::SeededRandom(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut draw = || {
                let v = DVector::from_fn(d, |_, _| 0.05 + 0.95 * rng.random::<f64>());
                let s = v.sum();
                v / s
            };
            let forward = (0..l).map(|_| draw()).collect();
            let backward = (0..l).map(|_| draw()).collect();
            MessageSet { forward, backward, t: 0 }
        }
    }
}

fn check_shape(model: &HiddenReciprocalModel, msgs: &MessageSet) -> Result<()> {
    let l = model.num_nodes();
    let d = model.alphabet_size();
    if msgs.forward.len() != l || msgs.backward.len() != l {
        return Err(Error::Dimension(format!(
            "message set has {}/{} entries for {l} nodes",
            msgs.forward.len(),
            msgs.backward.len()
        )));
    }
    if msgs.forward.iter().chain(&msgs.backward).any(|m| m.len() != d) {
        return Err(Error::Dimension(format!("messages must have length {d}")));
    }
    Ok(())
}

fn finish(v: DVector<f64>, normalize: bool) -> Option<DVector<f64>> {
    if normalize {
        normalize_l1(v)
    } else {
        let s = v.sum();
        (s > 0.0 && s.is_finite()).then_some(v)
    }
}

fn sweep(model: &HiddenReciprocalModel, msgs: &MessageSet, normalize: bool) -> Result<MessageSet> {
    check_shape(model, msgs)?;
    let l = model.num_nodes();
    let forward = (0..l)
        .into_par_iter()
        .map(|k| {
            let p = model.prev(k);
            let v = model.edge(p).tr_mul(&model.node(p).component_mul(&msgs.forward[p]));
            finish(v, normalize).ok_or(Error::DegenerateMessage {
                direction: "forward",
                from: p,
                to: k,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let backward = (0..l)
        .into_par_iter()
        .map(|k| {
            let n = model.next(k);
            let v = model.edge(k) * model.node(n).component_mul(&msgs.backward[n]);
            finish(v, normalize).ok_or(Error::DegenerateMessage {
                direction: "backward",
                from: n,
                to: k,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MessageSet {
        forward,
        backward,
        t: msgs.t + 1,
    })
}

/// One synchronous (Jacobi) sweep with L1-normalized messages. All reads
/// come from `msgs`; a fresh set is returned.
pub fn bp_sweep(model: &HiddenReciprocalModel, msgs: &MessageSet) -> Result<MessageSet> {
    sweep(model, msgs, true)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BpOptions {
    pub tol: f64,
    pub t_max: usize,
    /// Normalize messages after every update. Unnormalized runs fail with a
    /// degeneracy error once a message overflows or underflows.
    pub normalize: bool,
}

impl BpOptions {
    pub fn for_model(model: &HiddenReciprocalModel) -> Self {
        Self {
            tol: DEFAULT_TOL,
            t_max: default_t_max(model),
            normalize: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BpRun {
    pub messages: MessageSet,
    /// Largest Hilbert distance between successive same-direction messages,
    /// one entry per sweep.
    pub trace: Vec<f64>,
    pub converged: bool,
}

/// Repeats [`bp_sweep`] until the largest per-sweep message movement, in the
/// Hilbert metric, drops below `tol`, or `t_max` sweeps have run.
pub fn bp_run(model: &HiddenReciprocalModel, init: &MessageSet, opts: BpOptions) -> Result<BpRun> {
    if !(opts.tol > 0.0) {
        return Err(Error::Dimension(format!("tolerance must be positive, got {}", opts.tol)));
    }
    model.ensure_valid()?;
    check_shape(model, init)?;
    let mut msgs = init.clone();
    let mut trace = Vec::new();
    let mut converged = false;
    for _ in 0..opts.t_max {
        let next = sweep(model, &msgs, opts.normalize)?;
        let moved = next
            .forward
            .iter()
            .zip(&msgs.forward)
            .chain(next.backward.iter().zip(&msgs.backward))
            .map(|(a, b)| face_distance(a, b))
            .fold(0.0, f64::max);
        trace.push(moved);
        msgs = next;
        if moved < opts.tol {
            converged = true;
            break;
        }
    }
    Ok(BpRun {
        messages: msgs,
        trace,
        converged,
    })
}

/// `b_k = normalize(ψ_k ⊙ f_k ⊙ g_k)`.
pub fn compute_beliefs(model: &HiddenReciprocalModel, msgs: &MessageSet) -> Result<BeliefSet> {
    check_shape(model, msgs)?;
    let beliefs = (0..model.num_nodes())
        .map(|k| {
            let v = model.node(k).component_mul(&msgs.forward[k]).component_mul(&msgs.backward[k]);
            normalize_l1(v).ok_or(Error::DegenerateBelief { node: k })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BeliefSet::new(beliefs))
}

/// Loop transfer matrices anchored at one node.
///
/// Products over long loops are rescaled whenever their largest entry leaves
/// `[1e-100, 1e100]`; the true product is `exp(log_scale) * matrix`. Small
/// loops are therefore returned exactly as multiplied out.
#[derive(Debug, Clone)]
pub struct LoopTransferMatrix {
    pub node: usize,
    /// `C_fwd(k) = Ψ_{k-1}ᵀ D_{k-1} ··· Ψ_kᵀ D_k`.
    pub forward: DMatrix<f64>,
    pub forward_log_scale: f64,
    /// `C_bwd(k) = Ψ_k D_{k+1} ··· Ψ_{k-1} D_k`.
    pub backward: DMatrix<f64>,
    pub backward_log_scale: f64,
    /// Diagonal of `D_k`.
    pub diagonal: DVector<f64>,
    /// Largest entry of `|D_k^-1 C_fwdᵀ D_k - C_bwd|` relative to the
    /// largest entry of `C_bwd`; `None` when `D_k` is singular.
    pub similarity_residual: Option<f64>,
}

fn keep_in_range(m: &mut DMatrix<f64>, log_scale: &mut f64) {
    let s = m.amax();
    if s > 0.0 && !(1e-100..=1e100).contains(&s) {
        *m /= s;
        *log_scale += s.ln();
    }
}

fn transfer_at(model: &HiddenReciprocalModel, k: usize) -> LoopTransferMatrix {
    let d = model.alphabet_size();
    let l = model.num_nodes();
    let mut fwd = DMatrix::<f64>::identity(d, d);
    let mut fwd_scale = 0.0;
    let mut bwd = DMatrix::<f64>::identity(d, d);
    let mut bwd_scale = 0.0;
    for j in 0..l {
        let i = (k + j) % l;
        // fwd <- Ψ_iᵀ D_i fwd
        let mut scaled = fwd.clone();
        for (mut row, &w) in scaled.row_iter_mut().zip(model.node(i).iter()) {
            row *= w;
        }
        fwd = model.edge(i).tr_mul(&scaled);
        keep_in_range(&mut fwd, &mut fwd_scale);
        // bwd <- bwd Ψ_i D_{i+1}
        let mut step = model.edge(i).clone();
        for (mut col, &w) in step.column_iter_mut().zip(model.node(model.next(i)).iter()) {
            col *= w;
        }
        bwd *= step;
        keep_in_range(&mut bwd, &mut bwd_scale);
    }
    let diagonal = model.node(k).clone();
    let similarity_residual = diagonal.iter().all(|&x| x != 0.0).then(|| {
        let sim = DMatrix::from_fn(d, d, |r, c| fwd[(c, r)] * diagonal[c] / diagonal[r]);
        let rescale = (fwd_scale - bwd_scale).exp();
        let denom = bwd.amax().max(f64::MIN_POSITIVE);
        (sim * rescale - &bwd).amax() / denom
    });
    LoopTransferMatrix {
        node: k,
        forward: fwd,
        forward_log_scale: fwd_scale,
        backward: bwd,
        backward_log_scale: bwd_scale,
        diagonal,
        similarity_residual,
    }
}

/// Transfer matrices anchored at node `k` only.
pub fn loop_transfer_matrix(model: &HiddenReciprocalModel, k: usize) -> Result<LoopTransferMatrix> {
    model.ensure_valid()?;
    if k >= model.num_nodes() {
        return Err(Error::Dimension(format!("node {k} out of range")));
    }
    Ok(transfer_at(model, k))
}

pub fn loop_transfer_matrices(model: &HiddenReciprocalModel) -> Result<Vec<LoopTransferMatrix>> {
    model.ensure_valid()?;
    Ok((0..model.num_nodes()).into_par_iter().map(|k| transfer_at(model, k)).collect())
}

/// BP fixed point at one node from its transfer matrices:
/// `b_k ∝ ψ_k ⊙ v ⊙ w` with `v`, `w` the Perron vectors of `C_fwd(k)` and
/// `C_bwd(k)`.
pub fn steady_state_belief(model: &HiddenReciprocalModel, tm: &LoopTransferMatrix) -> Result<DVector<f64>> {
    for (name, c) in [("forward", &tm.forward), ("backward", &tm.backward)] {
        if primitivity_index(c)?.is_none() {
            return Err(Error::NotPrimitive(format!(
                "{name} loop matrix at node {} is not primitive",
                tm.node
            )));
        }
    }
    let (_, v) = perron_pair(&tm.forward)?;
    let (_, w) = perron_pair(&tm.backward)?;
    let b = model.node(tm.node).component_mul(&v).component_mul(&w);
    normalize_l1(b).ok_or(Error::DegenerateBelief { node: tm.node })
}

/// The BP fixed point at every node, without iterating.
pub fn steady_state_beliefs_eigen(model: &HiddenReciprocalModel) -> Result<BeliefSet> {
    let beliefs = loop_transfer_matrices(model)?
        .iter()
        .map(|tm| steady_state_belief(model, tm))
        .collect::<Result<Vec<_>>>()?;
    Ok(BeliefSet::new(beliefs))
}

/// Runs BP from uniform messages with default options and returns the
/// beliefs together with the run record.
pub fn smooth(model: &HiddenReciprocalModel, opts: BpOptions) -> Result<(BeliefSet, BpRun)> {
    let run = bp_run(model, &init_messages(model, InitMode::Uniform), opts)?;
    let beliefs = compute_beliefs(model, &run.messages)?;
    Ok((beliefs, run))
}
