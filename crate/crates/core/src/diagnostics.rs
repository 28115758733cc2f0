//! Spectral diagnostics of loop transfer matrices: eigenstructure, the four
//! stability conditions for positive linear systems, the decomposition of
//! the exact marginal into BP belief plus a spectral remainder, and the
//! exact binary correction.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::bp::{loop_transfer_matrices, loop_transfer_matrix, steady_state_belief};
use crate::error::{Error, Result};
use crate::exact::transfer::exact_marginals_transfer;
use crate::hilbert::{contraction_ratio, primitivity_index, ContractionCertificate};
use crate::linalg::{
    char_poly, eigen_decompose, eigenvalues, largest_symmetric_eigenvalue, leading_principal_minors, perron_pair,
    EigenDecomposition,
};
use crate::model::HiddenReciprocalModel;

/// `|1 - β|` below this makes the remainder `q` undefined.
pub const BETA_DEGENERACY_TOL: f64 = 1e-12;

fn check_square_nonnegative(c: &DMatrix<f64>) -> Result<()> {
    if !c.is_square() || c.is_empty() {
        return Err(Error::Dimension(format!("expected a square matrix, got {}x{}", c.nrows(), c.ncols())));
    }
    for i in 0..c.nrows() {
        for j in 0..c.ncols() {
            if !(c[(i, j)] >= 0.0) {
                return Err(Error::NegativeEntry { row: i, col: j });
            }
        }
    }
    Ok(())
}

fn rows(m: &DMatrix<Complex64>) -> Vec<Vec<Complex64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralReport {
    /// Sorted by decreasing modulus.
    pub eigenvalues: Vec<Complex64>,
    /// Rows of `S` (columns are unit-norm eigenvectors); withheld when the
    /// matrix is defective.
    pub eigenvectors: Option<Vec<Vec<Complex64>>>,
    pub eigenvectors_inverse: Option<Vec<Vec<Complex64>>>,
    /// `λ_1 / Σ_j λ_j`; `None` when the eigenvalue sum vanishes.
    pub beta: Option<f64>,
    /// Imaginary part of the complex ratio, zero up to roundoff.
    pub beta_imaginary: f64,
    /// `|λ_2| / |λ_1|`; zero for `1 x 1`, `None` for a nilpotent matrix.
    pub subdominant_ratio: Option<f64>,
    /// `|Σ_j λ_j - trace(C)|`.
    pub trace_residual: f64,
    pub primitive: bool,
    pub defective: bool,
    #[serde(skip)]
    pub decomposition: Option<EigenDecomposition>,
}

pub fn spectral_report(c: &DMatrix<f64>) -> Result<SpectralReport> {
    check_square_nonnegative(c)?;
    let values = eigenvalues(c);
    let decomposition = match eigen_decompose(c) {
        Ok(e) => Some(e),
        Err(Error::Defective) => None,
        Err(e) => return Err(e),
    };
    let sum: Complex64 = values.iter().sum();
    let (beta, beta_imaginary) = if sum.norm() > 0.0 {
        let b = values[0] / sum;
        (Some(b.re), b.im)
    } else {
        (None, 0.0)
    };
    let subdominant_ratio = match values.len() {
        1 => Some(0.0),
        _ if values[0].norm() > 0.0 => Some(values[1].norm() / values[0].norm()),
        _ => None,
    };
    Ok(SpectralReport {
        trace_residual: (sum - Complex64::new(c.trace(), 0.0)).norm(),
        eigenvectors: decomposition.as_ref().map(|e| rows(&e.vectors)),
        eigenvectors_inverse: decomposition.as_ref().map(|e| rows(&e.inverse)),
        primitive: primitivity_index(c)?.is_some(),
        defective: decomposition.is_none(),
        eigenvalues: values,
        beta,
        beta_imaginary,
        subdominant_ratio,
        decomposition,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    /// No diagonal certificate was found, but no obstruction either.
    CertificateNotFound,
}

impl Verdict {
    fn from_bool(b: bool) -> Self {
        if b {
            Verdict::Holds
        } else {
            Verdict::Fails
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateSource {
    /// `P = diag(u_i / v_i)` from left and right Perron vectors.
    Perron,
    /// Same quotient with `v = (I - C)^-1 1`, `u = (I - Cᵀ)^-1 1`.
    Resolvent,
}

#[derive(Debug, Clone, Serialize)]
pub struct LyapunovCheck {
    pub verdict: Verdict,
    pub source: Option<CertificateSource>,
    /// Diagonal of `P`, scaled to unit maximum.
    pub p_diagonal: Option<Vec<f64>>,
    /// `λ_max(CᵀPC - P)` for the certificate found.
    pub lambda_max: Option<f64>,
    /// Nonnegative `v ≠ 0` with `Cv ≥ v`; no diagonal `P` can exist then.
    pub witness: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub spectral_radius: f64,
    /// (i) `ρ(C) < 1`.
    pub spectral: Verdict,
    pub leading_minors: Vec<f64>,
    /// (ii) every leading principal minor of `I - C` positive.
    pub minors: Verdict,
    /// Ascending coefficients of `det(sI - (C - I))`, monic.
    pub char_poly: Vec<f64>,
    /// (iii) every non-leading coefficient positive.
    pub char_poly_verdict: Verdict,
    /// (iv) diagonal Lyapunov certificate.
    pub lyapunov: LyapunovCheck,
    /// No two definite verdicts disagree.
    pub unanimous: bool,
}

impl StabilityReport {
    /// True when conditions disagree, which points at numerical trouble.
    pub fn degeneracy_flag(&self) -> bool {
        !self.unanimous
    }

    pub fn verdicts(&self) -> [Verdict; 4] {
        [self.spectral, self.minors, self.char_poly_verdict, self.lyapunov.verdict]
    }
}

fn strictly_positive(v: &DVector<f64>) -> bool {
    v.iter().all(|&x| x > 0.0 && x.is_finite())
}

fn try_certificate(c: &DMatrix<f64>, u: &DVector<f64>, v: &DVector<f64>) -> Option<(DVector<f64>, f64)> {
    if !strictly_positive(u) || !strictly_positive(v) {
        return None;
    }
    let mut p = u.component_div(v);
    let s = p.max();
    p /= s;
    let pm = DMatrix::from_diagonal(&p);
    let lyap = c.transpose() * &pm * c - &pm;
    let sym = (&lyap + lyap.transpose()) * 0.5;
    let lmax = largest_symmetric_eigenvalue(&sym);
    (lmax < 0.0).then_some((p, lmax))
}

fn lyapunov_check(c: &DMatrix<f64>, rho: f64) -> LyapunovCheck {
    let n = c.nrows();
    let right = perron_pair(c).ok().map(|p| p.1);
    let left = perron_pair(&c.transpose()).ok().map(|p| p.1);
    if let (Some(u), Some(v)) = (&left, &right) {
        if let Some((p, lmax)) = try_certificate(c, u, v) {
            return LyapunovCheck {
                verdict: Verdict::Holds,
                source: Some(CertificateSource::Perron),
                p_diagonal: Some(p.iter().copied().collect()),
                lambda_max: Some(lmax),
                witness: None,
            };
        }
    }
    if rho < 1.0 {
        let id = DMatrix::<f64>::identity(n, n);
        let ones = DVector::from_element(n, 1.0);
        let v = (&id - c).lu().solve(&ones);
        let u = (&id - c.transpose()).lu().solve(&ones);
        if let (Some(u), Some(v)) = (u, v) {
            if let Some((p, lmax)) = try_certificate(c, &u, &v) {
                return LyapunovCheck {
                    verdict: Verdict::Holds,
                    source: Some(CertificateSource::Resolvent),
                    p_diagonal: Some(p.iter().copied().collect()),
                    lambda_max: Some(lmax),
                    witness: None,
                };
            }
        }
    }
    if let Some(v) = right {
        let cv = c * &v;
        let slack = 1e-12 * v.amax();
        if v.iter().any(|&x| x > 0.0) && cv.iter().zip(v.iter()).all(|(a, b)| *a >= b - slack) {
            return LyapunovCheck {
                verdict: Verdict::Fails,
                source: None,
                p_diagonal: None,
                lambda_max: None,
                witness: Some(v.iter().copied().collect()),
            };
        }
    }
    LyapunovCheck {
        verdict: Verdict::CertificateNotFound,
        source: None,
        p_diagonal: None,
        lambda_max: None,
        witness: None,
    }
}

/// Evaluates the four equivalent conditions for stability of the positive
/// system `x ← Cx` and reports whether they agree.
pub fn stability_report(c: &DMatrix<f64>) -> Result<StabilityReport> {
    check_square_nonnegative(c)?;
    let n = c.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let rho = eigenvalues(c).first().map(|z| z.norm()).unwrap_or(0.0);
    let minors = leading_principal_minors(&(&id - c));
    let poly = char_poly(&(c - &id));
    let spectral = Verdict::from_bool(rho < 1.0);
    let minors_verdict = Verdict::from_bool(minors.iter().all(|&m| m > 0.0));
    let poly_verdict = Verdict::from_bool(poly[..n].iter().all(|&a| a > 0.0));
    let lyapunov = lyapunov_check(c, rho);
    let definite: Vec<Verdict> = [spectral, minors_verdict, poly_verdict, lyapunov.verdict]
        .into_iter()
        .filter(|v| *v != Verdict::CertificateNotFound)
        .collect();
    let unanimous = definite.windows(2).all(|w| w[0] == w[1]);
    Ok(StabilityReport {
        spectral_radius: rho,
        spectral,
        leading_minors: minors,
        minors: minors_verdict,
        char_poly: poly,
        char_poly_verdict: poly_verdict,
        lyapunov,
        unanimous,
    })
}

/// Relation between the BP belief `b`, the exact marginal `p` and the
/// spectral remainder `q` at one node: `p = β b + (1 - β) q`.
#[derive(Debug, Clone, Serialize)]
pub struct AccuracyDecomposition {
    pub node: usize,
    pub beta: f64,
    pub subdominant_ratio: Option<f64>,
    pub belief: Vec<f64>,
    pub exact: Vec<f64>,
    /// `(p - β b) / (1 - β)`; `None` when `β = 1`.
    pub q_residual: Option<Vec<f64>>,
    /// `Σ_{j≥2} S(i,j) λ_j S^-1(j,i) / Σ_{j≥2} λ_j` with `S` the
    /// eigenvectors of `C_bwd(k)`.
    pub q_spectral: Option<Vec<f64>>,
    /// `Σ_{j≥2} S(i,j) λ_j S^-1(j,i) / Σ_{j≥2} S(i,j) λ_j` (real parts).
    /// Depends on how the eigenvector columns are scaled.
    pub q_weighted: Option<Vec<f64>>,
    pub q_weighted_imaginary: Option<f64>,
    /// `‖q_weighted - q_residual‖_∞`.
    pub weighted_discrepancy: Option<f64>,
    /// `‖β b + (1 - β) q_residual - p‖_∞`.
    pub residual: f64,
    /// `‖p - b‖_∞`.
    pub error: f64,
    /// `β = 1`: the remainder is undefined.
    pub degenerate: bool,
}

fn remainder_terms(e: &EigenDecomposition) -> (Vec<Complex64>, Vec<Complex64>) {
    let n = e.values.len();
    let num = (0..n)
        .map(|i| (1..n).map(|j| e.vectors[(i, j)] * e.values[j] * e.inverse[(j, i)]).sum())
        .collect();
    let den = (0..n).map(|i| (1..n).map(|j| e.vectors[(i, j)] * e.values[j]).sum()).collect();
    (num, den)
}

pub fn accuracy_decomposition(model: &HiddenReciprocalModel, k: usize) -> Result<AccuracyDecomposition> {
    let tm = loop_transfer_matrix(model, k)?;
    let spectral = spectral_report(&tm.forward)?;
    let beta = spectral
        .beta
        .ok_or_else(|| Error::Degenerate(format!("eigenvalues of the loop matrix at node {k} sum to zero")))?;
    let b = steady_state_belief(model, &tm)?;
    let exact = exact_marginals_transfer(model)?;
    let p = exact.get(k).clone();
    // 1 - β from the tail eigenvalues avoids cancelling against 1
    let sum: Complex64 = spectral.eigenvalues.iter().sum();
    let one_minus_beta = (spectral.eigenvalues[1..].iter().sum::<Complex64>() / sum).re;
    let degenerate = one_minus_beta.abs() < BETA_DEGENERACY_TOL;

    let q_residual = (!degenerate).then(|| &b + (&p - &b) / one_minus_beta);
    let residual = match &q_residual {
        Some(q) => (&b * beta + q * one_minus_beta - &p).amax(),
        None => (&b - &p).amax(),
    };

    let mut q_spectral = None;
    let mut q_weighted = None;
    let mut q_weighted_imaginary = None;
    if let Ok(e) = eigen_decompose(&tm.backward) {
        let (num, den) = remainder_terms(&e);
        let tail: Complex64 = e.values[1..].iter().sum();
        if tail.norm() > 0.0 {
            q_spectral = Some(num.iter().map(|z| (z / tail).re).collect::<Vec<f64>>());
        }
        if den.iter().all(|z| z.norm() > 0.0) {
            let q: Vec<Complex64> = num.iter().zip(&den).map(|(a, b)| a / b).collect();
            q_weighted_imaginary = Some(q.iter().map(|z| z.im.abs()).fold(0.0, f64::max));
            q_weighted = Some(q.iter().map(|z| z.re).collect::<Vec<f64>>());
        }
    }
    let weighted_discrepancy = match (&q_weighted, &q_residual) {
        (Some(a), Some(b)) => Some(a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)),
        _ => None,
    };

    Ok(AccuracyDecomposition {
        node: k,
        beta,
        subdominant_ratio: spectral.subdominant_ratio,
        error: (&p - &b).amax(),
        belief: b.iter().copied().collect(),
        exact: p.iter().copied().collect(),
        q_residual: q_residual.map(|q| q.iter().copied().collect()),
        q_spectral,
        q_weighted,
        q_weighted_imaginary,
        weighted_discrepancy,
        residual,
        degenerate,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BinaryCorrection {
    pub node: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    /// `λ_2 / λ_1`.
    pub ratio: f64,
    pub belief: Vec<f64>,
    pub corrected: Vec<f64>,
}

/// `p(x) = (λ_1 b(x) + λ_2 (1 - b(x))) / (λ_1 + λ_2)`.
pub fn binary_correction_formula(b: &DVector<f64>, lambda1: f64, lambda2: f64) -> Result<DVector<f64>> {
    if b.len() != 2 {
        return Err(Error::NotBinary(b.len()));
    }
    let denom = lambda1 + lambda2;
    if !(denom.abs() > 0.0) {
        return Err(Error::Degenerate("λ_1 + λ_2 = 0".into()));
    }
    Ok(b.map(|x| (lambda1 * x + lambda2 * (1.0 - x)) / denom))
}

/// Corrects the steady-state BP belief at node `k` of a binary model to the
/// exact marginal using the two eigenvalues of the loop matrix.
pub fn binary_correction(model: &HiddenReciprocalModel, k: usize) -> Result<BinaryCorrection> {
    if model.alphabet_size() != 2 {
        return Err(Error::NotBinary(model.alphabet_size()));
    }
    let tm = loop_transfer_matrix(model, k)?;
    let values = eigenvalues(&tm.forward);
    // eigenvalues of a real 2x2 nonnegative matrix are real
    let (l1, l2) = (values[0].re, values[1].re);
    if !(l1 > l2.abs()) {
        return Err(Error::Degenerate(format!("no dominant eigenvalue at node {k}: λ = ({l1}, {l2})")));
    }
    let b = steady_state_belief(model, &tm)?;
    let p = binary_correction_formula(&b, l1, l2)?;
    Ok(BinaryCorrection {
        node: k,
        lambda1: l1,
        lambda2: l2,
        ratio: l2 / l1,
        belief: b.iter().copied().collect(),
        corrected: p.iter().copied().collect(),
    })
}

/// Per-node diagnostics as emitted by the `diagnose` command.
#[derive(Debug, Clone, Serialize)]
pub struct NodeDiagnostics {
    pub node: usize,
    pub spectral: SpectralReport,
    /// Stability of the un-normalized loop recursion `f ← C_fwd f`.
    pub stability: Option<StabilityReport>,
    pub contraction: ContractionCertificate,
    pub similarity_residual: Option<f64>,
    pub accuracy: Option<AccuracyDecomposition>,
    pub accuracy_error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelDiagnostics {
    pub alphabet_size: usize,
    pub num_nodes: usize,
    pub nodes: Vec<NodeDiagnostics>,
    pub note: &'static str,
}

pub const NORMALIZED_BP_NOTE: &str = "stability verdicts concern the un-normalized loop recursion; \
normalized BP converges in direction whenever the loop matrix is primitive, whatever these verdicts say";

pub fn diagnose_model(model: &HiddenReciprocalModel) -> Result<ModelDiagnostics> {
    let nodes = loop_transfer_matrices(model)?
        .into_iter()
        .map(|tm| {
            let spectral = spectral_report(&tm.forward)?;
            let scale = tm.forward_log_scale.exp();
            let stability = if scale.is_finite() && scale > 0.0 {
                Some(stability_report(&(&tm.forward * scale))?)
            } else {
                None
            };
            let (accuracy, accuracy_error) = match accuracy_decomposition(model, tm.node) {
                Ok(a) => (Some(a), None),
                Err(e) => (None, Some(e.to_string())),
            };
            Ok(NodeDiagnostics {
                node: tm.node,
                contraction: contraction_ratio(&tm.forward)?,
                similarity_residual: tm.similarity_residual,
                spectral,
                stability,
                accuracy,
                accuracy_error,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ModelDiagnostics {
        alphabet_size: model.alphabet_size(),
        num_nodes: model.num_nodes(),
        nodes,
        note: NORMALIZED_BP_NOTE,
    })
}
