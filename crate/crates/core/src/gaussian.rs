//! Second-order cyclic models of Gaussian reciprocal processes.
//!
//! A model is a list of block triples `(M_k⁰, M_k⁺, M_k⁻)`, `k = 0..L-1`,
//! with `M_k⁰` symmetric and `M_k⁺ = (M_{k+1}⁻)ᵀ` (indices mod `L`). The
//! precision matrix of the process is cyclic block tridiagonal:
//!
//! ```text
//! block (k, k)   =  M_k⁰
//! block (k, k+1) = -M_k⁺
//! block (k, k-1) = -M_k⁻
//! ```
//!
//! so the north-east corner is `-M_0⁻` and the south-west corner `-M_N⁺`.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::cholesky;

/// Absolute tolerance for the block constraints, scaled by the largest
/// block entry when that exceeds one.
pub const BLOCK_TOL: f64 = 1e-12;

const SAMPLE_BATCH: usize = 8192;

#[derive(Debug, Clone, PartialEq)]
pub struct BlockTriple {
    pub diagonal: DMatrix<f64>,
    pub plus: DMatrix<f64>,
    pub minus: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderBlocks {
    block_dim: usize,
    blocks: Vec<BlockTriple>,
}

impl SecondOrderBlocks {
    /// Checks shapes only; use [`validate_blocks`] for the model constraints.
    pub fn new(block_dim: usize, blocks: Vec<BlockTriple>) -> Result<Self> {
        if block_dim == 0 {
            return Err(Error::Dimension("block dimension must be positive".into()));
        }
        if blocks.len() < 3 {
            return Err(Error::Dimension(format!("a cyclic model needs at least 3 blocks, got {}", blocks.len())));
        }
        for (k, t) in blocks.iter().enumerate() {
            for (name, m) in [("M0", &t.diagonal), ("M+", &t.plus), ("M-", &t.minus)] {
                if m.shape() != (block_dim, block_dim) {
                    return Err(Error::Dimension(format!(
                        "block {name} at k = {k} is {}x{}, expected {block_dim}x{block_dim}",
                        m.nrows(),
                        m.ncols()
                    )));
                }
            }
        }
        Ok(Self { block_dim, blocks })
    }

    /// Stationary model: the same triple at every position, with
    /// `M⁻ = (M⁺)ᵀ`.
    pub fn stationary(num_blocks: usize, diagonal: DMatrix<f64>, plus: DMatrix<f64>) -> Result<Self> {
        let n = diagonal.nrows();
        let minus = plus.transpose();
        Self::new(
            n,
            vec![
                BlockTriple {
                    diagonal,
                    plus,
                    minus
                };
                num_blocks
            ],
        )
    }

    /// Scalar stationary model with `M⁰ = m0` and `M⁺ = M⁻ = m1`.
    pub fn scalar_stationary(num_blocks: usize, m0: f64, m1: f64) -> Result<Self> {
        Self::stationary(num_blocks, DMatrix::from_element(1, 1, m0), DMatrix::from_element(1, 1, m1))
    }

    pub fn block_dim(&self) -> usize {
        self.block_dim
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[BlockTriple] {
        &self.blocks
    }

    pub fn dim(&self) -> usize {
        self.block_dim * self.blocks.len()
    }

    fn tol(&self) -> f64 {
        let scale = self
            .blocks
            .iter()
            .flat_map(|t| [t.diagonal.amax(), t.plus.amax(), t.minus.amax()])
            .fold(1.0, f64::max);
        BLOCK_TOL * scale
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockViolation {
    pub k: usize,
    pub what: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockReport {
    pub violations: Vec<BlockViolation>,
    /// `None` when not requested or when the constraints already fail.
    pub positive_definite: Option<bool>,
    pub valid: bool,
}

fn constraint_violations(blocks: &SecondOrderBlocks) -> Vec<BlockViolation> {
    let tol = blocks.tol();
    let l = blocks.num_blocks();
    let mut out = Vec::new();
    for (k, t) in blocks.blocks.iter().enumerate() {
        let asym = (&t.diagonal - t.diagonal.transpose()).amax();
        if asym > tol {
            out.push(BlockViolation {
                k,
                what: format!("M0 is not symmetric (max asymmetry {asym:e})"),
            });
        }
        let next = (k + 1) % l;
        let gap = (&t.plus - blocks.blocks[next].minus.transpose()).amax();
        if gap > tol {
            out.push(BlockViolation {
                k,
                what: format!("M+ differs from (M-)ᵀ at k = {next} by {gap:e}"),
            });
        }
    }
    out
}

/// Reports constraint violations and, with `require_pd`, whether the
/// assembled precision is positive definite (Cholesky succeeds).
pub fn validate_blocks(blocks: &SecondOrderBlocks, require_pd: bool) -> BlockReport {
    let violations = constraint_violations(blocks);
    let positive_definite = (require_pd && violations.is_empty())
        .then(|| cholesky(&assemble_unchecked(blocks).matrix).is_some());
    let valid = violations.is_empty() && positive_definite.unwrap_or(true);
    BlockReport {
        violations,
        positive_definite,
        valid,
    }
}

/// Dense symmetric precision matrix with its block layout.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionMatrix {
    pub block_dim: usize,
    pub matrix: DMatrix<f64>,
}

impl PrecisionMatrix {
    pub fn num_blocks(&self) -> usize {
        self.matrix.nrows() / self.block_dim
    }

    pub fn block(&self, i: usize, j: usize) -> DMatrix<f64> {
        let n = self.block_dim;
        self.matrix.view((i * n, j * n), (n, n)).into_owned()
    }
}

fn set_block(m: &mut DMatrix<f64>, n: usize, i: usize, j: usize, b: &DMatrix<f64>) {
    m.view_mut((i * n, j * n), (n, n)).copy_from(b);
}

fn assemble_unchecked(blocks: &SecondOrderBlocks) -> PrecisionMatrix {
    let n = blocks.block_dim;
    let l = blocks.num_blocks();
    let mut m = DMatrix::zeros(n * l, n * l);
    for (k, t) in blocks.blocks.iter().enumerate() {
        let sym = (&t.diagonal + t.diagonal.transpose()) * 0.5;
        set_block(&mut m, n, k, k, &sym);
        let up = -&t.plus;
        let next = (k + 1) % l;
        set_block(&mut m, n, k, next, &up);
        // mirror as an exact transpose so the result is exactly symmetric
        set_block(&mut m, n, next, k, &up.transpose());
    }
    PrecisionMatrix { block_dim: n, matrix: m }
}

/// Cyclic block-tridiagonal precision matrix of the model. Fails on the
/// first constraint violation, naming its position.
pub fn assemble_precision(blocks: &SecondOrderBlocks) -> Result<PrecisionMatrix> {
    if let Some(v) = constraint_violations(blocks).into_iter().next() {
        return Err(Error::BlockConstraint { k: v.k, what: v.what });
    }
    Ok(assemble_unchecked(blocks))
}

/// Noise covariance built from its defining rule: `M_k⁰` on the diagonal,
/// `-M_k⁺` at `(k, k+1)`, the transposes below, zero elsewhere.
pub fn noise_covariance(blocks: &SecondOrderBlocks) -> Result<DMatrix<f64>> {
    assemble_precision(blocks)?;
    let n = blocks.block_dim;
    let l = blocks.num_blocks();
    let mut s = DMatrix::zeros(n * l, n * l);
    for k in 0..l {
        for j in 0..l {
            let t = &blocks.blocks[k];
            let b = if j == k {
                (&t.diagonal + t.diagonal.transpose()) * 0.5
            } else if j == (k + 1) % l {
                -&t.plus
            } else if k == (j + 1) % l {
                -blocks.blocks[j].plus.transpose()
            } else {
                continue;
            };
            set_block(&mut s, n, k, j, &b);
        }
    }
    Ok(s)
}

fn block_amax(p: &DMatrix<f64>, n: usize, i: usize, j: usize) -> f64 {
    p.view((i * n, j * n), (n, n)).amax()
}

/// Unordered block pairs `(i, j)`, `i < j`, whose block is entrywise within
/// `tol` of zero: the pairs conditionally independent given the rest.
pub fn ci_pattern(p: &DMatrix<f64>, block_dim: usize, tol: f64) -> Result<BTreeSet<(usize, usize)>> {
    if !p.is_square() || block_dim == 0 || !p.nrows().is_multiple_of(block_dim) {
        return Err(Error::Dimension(format!(
            "{}x{} matrix does not split into {block_dim}x{block_dim} blocks",
            p.nrows(),
            p.ncols()
        )));
    }
    let l = p.nrows() / block_dim;
    let mut out = BTreeSet::new();
    for i in 0..l {
        for j in i + 1..l {
            if block_amax(p, block_dim, i, j) <= tol && block_amax(p, block_dim, j, i) <= tol {
                out.insert((i, j));
            }
        }
    }
    Ok(out)
}

/// Block pairs that are not cyclic neighbours.
pub fn off_band_pairs(num_blocks: usize) -> BTreeSet<(usize, usize)> {
    let mut out = BTreeSet::new();
    for i in 0..num_blocks {
        for j in i + 1..num_blocks {
            let adjacent = j == i + 1 || (i == 0 && j == num_blocks - 1);
            if !adjacent {
                out.insert((i, j));
            }
        }
    }
    out
}

/// True when both corner blocks vanish (within `tol`): the reciprocal model
/// is then Markov.
pub fn markov_subclass_check(blocks: &SecondOrderBlocks, tol: f64) -> bool {
    let last = blocks.num_blocks() - 1;
    blocks.blocks[last].plus.amax() <= tol && blocks.blocks[0].minus.amax() <= tol
}

/// Zero-mean Gaussian samples with the given precision matrix, one row per
/// sample. With `Q = LLᵀ`, `x = L⁻ᵀ z` has covariance `Q⁻¹`.
pub fn sample_gaussian_precision(precision: &DMatrix<f64>, n_samples: usize, seed: u64) -> Result<DMatrix<f64>> {
    let chol = cholesky(precision)
        .ok_or_else(|| Error::NotPositiveDefinite("Cholesky factorization of the precision failed".into()))?;
    let lt = chol.l().transpose();
    let dim = precision.nrows();
    let n_batches = n_samples.div_ceil(SAMPLE_BATCH);
    let batches: Vec<DMatrix<f64>> = (0..n_batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let count = SAMPLE_BATCH.min(n_samples - b * SAMPLE_BATCH);
            let z = DMatrix::from_fn(dim, count, |_, _| StandardNormal.sample(&mut rng));
            lt.solve_upper_triangular(&z).expect("Cholesky factor has a positive diagonal")
        })
        .collect();
    let mut out = DMatrix::zeros(n_samples, dim);
    let mut row = 0;
    for cols in batches {
        let c = cols.ncols();
        out.view_mut((row, 0), (c, dim)).copy_from(&cols.transpose());
        row += c;
    }
    Ok(out)
}

/// Samples from the model; requires a positive definite precision.
pub fn sample_gaussian_rp(blocks: &SecondOrderBlocks, n_samples: usize, seed: u64) -> Result<DMatrix<f64>> {
    let p = assemble_precision(blocks)?;
    sample_gaussian_precision(&p.matrix, n_samples, seed)
}

/// `Σ̂ = XᵀX / n` (the mean is known to be zero).
pub fn empirical_covariance(samples: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = samples.nrows();
    if n == 0 {
        return Err(Error::Dimension("no samples".into()));
    }
    Ok(samples.tr_mul(samples) / n as f64)
}

#[derive(Debug, Clone, Serialize)]
pub struct PrecisionCheck {
    pub num_samples: usize,
    /// Largest `|Ω̂_ij|` outside the cyclic block band.
    pub off_band_max: f64,
    /// Largest `|Ω̂_ij| / se_ij` outside the band with
    /// `se_ij = sqrt(Ω̂_ii Ω̂_jj / n)`.
    pub off_band_max_z: f64,
    /// Largest entrywise `|Ω̂ - M|` over the whole matrix.
    pub max_abs_error: f64,
    pub z_threshold: f64,
    pub passes: bool,
}

/// Largest off-band entry of a precision matrix, absolute and in units of
/// its asymptotic standard error (`n = 0` skips the latter).
fn off_band_stats(p: &DMatrix<f64>, block_dim: usize, n: usize) -> (f64, f64) {
    let l = p.nrows() / block_dim;
    let mut max_abs = 0.0f64;
    let mut max_z = 0.0f64;
    for (bi, bj) in off_band_pairs(l) {
        for a in 0..block_dim {
            for b in 0..block_dim {
                let i = bi * block_dim + a;
                let j = bj * block_dim + b;
                let x = p[(i, j)].abs().max(p[(j, i)].abs());
                max_abs = max_abs.max(x);
                if n > 0 {
                    let se = (p[(i, i)] * p[(j, j)] / n as f64).sqrt();
                    max_z = max_z.max(x / se);
                }
            }
        }
    }
    (max_abs, max_z)
}

/// Largest entry outside the cyclic block band.
pub fn off_band_max(p: &DMatrix<f64>, block_dim: usize) -> f64 {
    off_band_stats(p, block_dim, 0).0
}

/// Inverts the empirical covariance and checks that its off-band entries are
/// within `z_threshold` standard errors of zero.
pub fn empirical_precision_check(
    samples: &DMatrix<f64>,
    blocks: &SecondOrderBlocks,
    z_threshold: f64,
) -> Result<PrecisionCheck> {
    let m = assemble_precision(blocks)?;
    if samples.ncols() != m.matrix.nrows() {
        return Err(Error::Dimension(format!(
            "samples have {} columns, model dimension is {}",
            samples.ncols(),
            m.matrix.nrows()
        )));
    }
    let cov = empirical_covariance(samples)?;
    let omega = cholesky(&cov)
        .map(|c| c.inverse())
        .ok_or_else(|| Error::Singular("empirical covariance is not invertible".into()))?;
    let (off_band_max, off_band_max_z) = off_band_stats(&omega, blocks.block_dim, samples.nrows());
    Ok(PrecisionCheck {
        num_samples: samples.nrows(),
        off_band_max,
        off_band_max_z,
        max_abs_error: (&omega - &m.matrix).amax(),
        z_threshold,
        passes: off_band_max_z <= z_threshold,
    })
}

/// Per-coordinate sample means, used in sampling sanity checks.
pub fn column_means(samples: &DMatrix<f64>) -> DVector<f64> {
    samples.row_mean().transpose()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn stationary_pd() -> SecondOrderBlocks {
        SecondOrderBlocks::scalar_stationary(4, 2.0, 0.5).unwrap()
    }

    #[test]
    fn identity_model() {
        let b = SecondOrderBlocks::scalar_stationary(4, 1.0, 0.0).unwrap();
        let p = assemble_precision(&b).unwrap();
        assert_eq!(p.matrix, DMatrix::identity(4, 4));
        let r = validate_blocks(&b, true);
        assert!(r.valid && r.positive_definite == Some(true));
    }

    #[test]
    fn stationary_circulant() {
        let p = assemble_precision(&stationary_pd()).unwrap().matrix;
        assert_eq!(p.row(0).iter().copied().collect::<Vec<_>>(), vec![2.0, -0.5, 0.0, -0.5]);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(p[(i, j)], p[(0, (j + 4 - i) % 4)]);
            }
        }
    }

    #[test]
    fn indefinite_stationary_model() {
        let b = SecondOrderBlocks::scalar_stationary(4, 1.0, 0.6).unwrap();
        let p = assemble_precision(&b).unwrap().matrix;
        assert_eq!(p.row(0).iter().copied().collect::<Vec<_>>(), vec![1.0, -0.6, 0.0, -0.6]);
        // circulant eigenvalues 1 - 1.2 cos(2πj/4) include -0.2
        let r = validate_blocks(&b, true);
        assert_eq!(r.positive_definite, Some(false));
        assert!(!r.valid);
        assert!(validate_blocks(&b, false).valid);
    }

    #[test]
    fn constraint_errors_name_the_position() {
        let mut blocks = stationary_pd().blocks().to_vec();
        blocks[2].diagonal = DMatrix::from_row_slice(1, 1, &[2.0]);
        let two = SecondOrderBlocks::new(
            2,
            (0..4)
                .map(|k| BlockTriple {
                    diagonal: if k == 1 {
                        DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.3, 1.0])
                    } else {
                        DMatrix::identity(2, 2)
                    },
                    plus: DMatrix::zeros(2, 2),
                    minus: DMatrix::zeros(2, 2),
                })
                .collect(),
        )
        .unwrap();
        assert!(matches!(assemble_precision(&two), Err(Error::BlockConstraint { k: 1, .. })));

        blocks[1].plus = DMatrix::from_row_slice(1, 1, &[0.4]);
        let b = SecondOrderBlocks::new(1, blocks).unwrap();
        let r = validate_blocks(&b, true);
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].k, 1);
        assert!(r.violations[0].what.contains("M+"));
        assert!(!r.valid);
    }

    #[test]
    fn shapes_are_checked() {
        let t = BlockTriple {
            diagonal: DMatrix::identity(2, 2),
            plus: DMatrix::zeros(1, 1),
            minus: DMatrix::zeros(2, 2),
        };
        assert!(SecondOrderBlocks::new(2, vec![t; 4]).is_err());
        assert!(SecondOrderBlocks::scalar_stationary(2, 1.0, 0.0).is_err());
    }

    #[test]
    fn ci_patterns() {
        let p = assemble_precision(&SecondOrderBlocks::scalar_stationary(5, 2.0, 0.5).unwrap()).unwrap();
        let expected: BTreeSet<_> = [(0, 2), (0, 3), (1, 3), (1, 4), (2, 4)].into();
        assert_eq!(ci_pattern(&p.matrix, 1, 1e-12).unwrap(), expected);
        assert_eq!(off_band_pairs(5), expected);
        assert!(ci_pattern(&DMatrix::from_element(4, 4, 0.3), 1, 1e-12).unwrap().is_empty());
        assert_eq!(ci_pattern(&DMatrix::identity(4, 4), 1, 1e-12).unwrap().len(), 6);
        assert!(ci_pattern(&DMatrix::identity(5, 5), 2, 1e-12).is_err());
    }

    #[test]
    fn markov_subclass() {
        let mut blocks = stationary_pd().blocks().to_vec();
        assert!(!markov_subclass_check(&stationary_pd(), 1e-12));
        blocks[3].plus[(0, 0)] = 1e-15;
        blocks[0].minus[(0, 0)] = 1e-15;
        let b = SecondOrderBlocks::new(1, blocks.clone()).unwrap();
        assert!(markov_subclass_check(&b, 1e-12));
        blocks[3].plus[(0, 0)] = 0.0;
        blocks[0].minus[(0, 0)] = 0.0;
        let b = SecondOrderBlocks::new(1, blocks).unwrap();
        assert!(markov_subclass_check(&b, 1e-12));
        let pattern = ci_pattern(&assemble_precision(&b).unwrap().matrix, 1, 1e-12).unwrap();
        assert!(pattern.contains(&(0, 3)));
    }

    #[test]
    fn noise_covariance_equals_precision() {
        let b = random_blocks(3, 5, 4);
        let m = assemble_precision(&b).unwrap().matrix;
        assert_eq!(noise_covariance(&b).unwrap(), m);
        // E[E Eᵀ] = M Σ_x Mᵀ = M for E = M X
        let sigma = m.clone().try_inverse().unwrap();
        assert!((&m * sigma * m.transpose() - &m).amax() < 1e-10);
    }

    fn random_blocks(n: usize, l: usize, seed: u64) -> SecondOrderBlocks {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let plus: Vec<DMatrix<f64>> = (0..l).map(|_| DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5)).collect();
        let triples = (0..l)
            .map(|k| {
                let a = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
                BlockTriple {
                    // diagonally dominant enough to be PD
                    diagonal: &a * a.transpose() + DMatrix::identity(n, n) * (2.0 * n as f64),
                    plus: plus[k].clone(),
                    minus: plus[(k + l - 1) % l].transpose(),
                }
            })
            .collect();
        SecondOrderBlocks::new(n, triples).unwrap()
    }

    #[test]
    fn identity_samples_are_standard_normal() {
        let b = SecondOrderBlocks::scalar_stationary(4, 1.0, 0.0).unwrap();
        let n = 100_000;
        let s = sample_gaussian_rp(&b, n, 1).unwrap();
        assert_eq!(s.shape(), (n, 4));
        let cov = empirical_covariance(&s).unwrap();
        // Var(x²) = 2 for a standard normal
        let se = (2.0 / n as f64).sqrt();
        for i in 0..4 {
            assert!((cov[(i, i)] - 1.0).abs() <= 3.0 * se, "{}", cov[(i, i)]);
        }
    }

    #[test]
    fn stationary_lag_one_covariance() {
        // precision circulant [2, -1/2, 0, -1/2] has eigenvalues 1, 2, 3, 2; its
        // inverse is circulant with first row [7/12, 1/6, 1/12, 1/6]
        let (c0, c1) = (7.0 / 12.0, 1.0 / 6.0);
        let n = 100_000;
        let s = sample_gaussian_rp(&stationary_pd(), n, 42).unwrap();
        let cov = empirical_covariance(&s).unwrap();
        // Var(x_0 x_1) = c0² + c1² for a zero-mean Gaussian pair
        let se = ((c0 * c0 + c1 * c1) / n as f64).sqrt();
        assert!((cov[(0, 1)] - c1).abs() <= 3.0 * se, "{}", cov[(0, 1)]);
        let exact = assemble_precision(&stationary_pd()).unwrap().matrix.try_inverse().unwrap();
        assert!((exact[(0, 0)] - c0).abs() < 1e-15 && (exact[(0, 2)] - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn sampling_is_deterministic() {
        let b = random_blocks(2, 4, 0);
        let a = sample_gaussian_rp(&b, 20_000, 9).unwrap();
        assert_eq!(a, sample_gaussian_rp(&b, 20_000, 9).unwrap());
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        assert_eq!(a, pool.install(|| sample_gaussian_rp(&b, 20_000, 9).unwrap()));
        assert_ne!(a, sample_gaussian_rp(&b, 20_000, 10).unwrap());
    }

    #[test]
    fn non_pd_sampling_fails() {
        let b = SecondOrderBlocks::scalar_stationary(4, 1.0, 0.6).unwrap();
        assert!(matches!(sample_gaussian_rp(&b, 10, 0), Err(Error::NotPositiveDefinite(_))));
    }

    #[test]
    fn empirical_precision_is_banded() {
        let b = SecondOrderBlocks::scalar_stationary(6, 2.0, 0.5).unwrap();
        let s = sample_gaussian_rp(&b, 200_000, 5).unwrap();
        let r = empirical_precision_check(&s, &b, 5.0).unwrap();
        assert!(r.passes, "{r:?}");
        assert!(r.max_abs_error < 0.05);
    }

    #[test]
    fn dense_precision_is_flagged() {
        // precision with every off-band entry equal to 0.3
        let dense = DMatrix::from_fn(6, 6, |i, j| if i == j { 2.0 } else { 0.3 });
        let s = sample_gaussian_precision(&dense, 100_000, 3).unwrap();
        let reference = SecondOrderBlocks::scalar_stationary(6, 2.0, 0.5).unwrap();
        let r = empirical_precision_check(&s, &reference, 5.0).unwrap();
        assert!(!r.passes);
        assert!(r.off_band_max > 0.2);
    }

    #[test]
    fn exact_covariance_has_no_off_band_mass() {
        let b = random_blocks(2, 5, 7);
        let m = assemble_precision(&b).unwrap().matrix;
        let omega = m.clone().try_inverse().unwrap().try_inverse().unwrap();
        assert!(off_band_max(&omega, 2) <= 1e-12);
        assert_eq!(off_band_max(&m, 2), 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn assembly_is_exactly_symmetric_and_banded(seed in 0u64..10_000, n in 1usize..4, l in 3usize..8) {
            let b = random_blocks(n, l, seed);
            let p = assemble_precision(&b).unwrap();
            prop_assert_eq!(&p.matrix, &p.matrix.transpose());
            prop_assert_eq!(off_band_max(&p.matrix, n), 0.0);
            prop_assert_eq!(ci_pattern(&p.matrix, n, 0.0).unwrap(), off_band_pairs(l));
            prop_assert!(validate_blocks(&b, true).valid);
        }
    }
}
