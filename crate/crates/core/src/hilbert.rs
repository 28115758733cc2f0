//! Hilbert projective metric on the positive orthant and on the cone of
//! positive definite matrices, Birkhoff contraction coefficients, primitivity
//! and Perron power iteration with a per-step distance trace.
//!
//! All distances are evaluated in log space from ratio extrema, so vectors
//! whose entries span hundreds of orders of magnitude are handled without
//! overflow.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;

/// Hilbert distance `log(max_i(x_i/y_i) / min_i(x_i/y_i))` between two
/// strictly positive vectors.
pub fn hilbert_distance_orthant(x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Dimension(format!("length {} vs {}", x.len(), y.len())));
    }
    if let Some(i) = (0..x.len()).find(|&i| !(x[i] > 0.0) || !(y[i] > 0.0)) {
        return Err(Error::Boundary { index: i });
    }
    Ok(ratio_spread(x.iter().copied().zip(y.iter().copied())))
}

/// `log(max r / min r)` over the ratios `a/b` of the given positive pairs.
fn ratio_spread(pairs: impl Iterator<Item = (f64, f64)> + Clone) -> f64 {
    let mut hi = f64::NEG_INFINITY;
    let mut lo = f64::INFINITY;
    let mut plain = true;
    for (a, b) in pairs.clone() {
        let r = a / b;
        if !r.is_normal() {
            plain = false;
            break;
        }
        hi = hi.max(r);
        lo = lo.min(r);
    }
    if plain && hi.is_finite() {
        let q = hi / lo;
        if q.is_finite() {
            return q.ln().max(0.0);
        }
        return hi.ln() - lo.ln();
    }
    // ratios over- or underflow: fall back to log differences
    hi = f64::NEG_INFINITY;
    lo = f64::INFINITY;
    for (a, b) in pairs {
        let r = a.ln() - b.ln();
        hi = hi.max(r);
        lo = lo.min(r);
    }
    if hi == f64::NEG_INFINITY {
        0.0
    } else {
        hi - lo
    }
}

/// Hilbert distance between nonnegative vectors on a common face of the
/// orthant: the distance restricted to the shared support, infinite when
/// the supports differ. Two zero vectors are at distance zero.
pub fn face_distance(x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    if (0..x.len()).any(|i| (x[i] > 0.0) != (y[i] > 0.0)) {
        return f64::INFINITY;
    }
    ratio_spread(
        x.iter()
            .copied()
            .zip(y.iter().copied())
            .filter(|&(a, _)| a > 0.0),
    )
}

/// Hilbert distance on the PSD cone, `log(λmax(XY⁻¹) / λmin(XY⁻¹))`.
///
/// With `Y = LLᵀ` the spectrum of `XY⁻¹` equals that of the symmetric
/// matrix `L⁻¹XL⁻ᵀ`, which avoids forming `Y⁻¹`.
pub fn hilbert_distance_psd(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<f64> {
    if x.shape() != y.shape() || !x.is_square() {
        return Err(Error::Dimension(format!("shapes {:?} and {:?}", x.shape(), y.shape())));
    }
    for (name, m) in [("X", x), ("Y", y)] {
        let tol = 1e-12 * m.amax().max(1.0);
        if !linalg::is_symmetric(m, tol) {
            return Err(Error::NotSymmetric(name.into()));
        }
        if linalg::cholesky(m).is_none() {
            return Err(Error::NotPositiveDefinite(name.into()));
        }
    }
    let l = linalg::cholesky(y).expect("checked above").l();
    let l_inv = l
        .clone()
        .solve_lower_triangular(&DMatrix::identity(l.nrows(), l.ncols()))
        .ok_or_else(|| Error::Singular("Cholesky factor of Y".into()))?;
    let mut w = &l_inv * x * l_inv.transpose();
    w = (&w + w.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::new(w).eigenvalues;
    let hi = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = eig.iter().copied().fold(f64::INFINITY, f64::min);
    if !(lo > 0.0) {
        return Err(Error::NotPositiveDefinite("generalized spectrum".into()));
    }
    Ok((hi.ln() - lo.ln()).max(0.0))
}

fn check_nonnegative(a: &DMatrix<f64>) -> Result<()> {
    for c in 0..a.ncols() {
        for r in 0..a.nrows() {
            if !(a[(r, c)] >= 0.0) {
                return Err(Error::NegativeEntry { row: r, col: c });
            }
        }
    }
    Ok(())
}

/// Projective diameter of a strictly positive matrix, the maximum over all
/// index quadruples of `log(a_ij a_pq / (a_iq a_pj))`.
pub fn projective_diameter(a: &DMatrix<f64>) -> Result<f64> {
    for c in 0..a.ncols() {
        for r in 0..a.nrows() {
            if !(a[(r, c)] > 0.0) {
                return Err(Error::NotStrictlyPositive { row: r, col: c });
            }
        }
    }
    let logs = a.map(f64::ln);
    let (n, m) = logs.shape();
    let mut best = 0.0f64;
    for i in 0..n {
        for p in 0..n {
            for j in 0..m {
                for q in 0..m {
                    let v = logs[(i, j)] + logs[(p, q)] - logs[(i, q)] - logs[(p, j)];
                    best = best.max(v);
                }
            }
        }
    }
    Ok(best)
}

/// Birkhoff contraction data for a nonnegative matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionCertificate {
    /// `None` encodes an infinite diameter (matrix has zero entries).
    pub projective_diameter: Option<f64>,
    /// `tanh(Δ/4)`, or 1 when the diameter is infinite.
    pub contraction_ratio: f64,
    pub primitivity_index: Option<usize>,
}

impl ContractionCertificate {
    pub fn is_strict(&self) -> bool {
        self.contraction_ratio < 1.0
    }
}

pub fn contraction_ratio(a: &DMatrix<f64>) -> Result<ContractionCertificate> {
    check_nonnegative(a)?;
    let strictly_positive = a.iter().all(|&x| x > 0.0);
    let primitivity_index = if a.is_square() { primitivity_index(a)? } else { None };
    if strictly_positive {
        let delta = projective_diameter(a)?;
        Ok(ContractionCertificate {
            projective_diameter: Some(delta),
            contraction_ratio: (delta / 4.0).tanh(),
            primitivity_index,
        })
    } else {
        Ok(ContractionCertificate {
            projective_diameter: None,
            contraction_ratio: 1.0,
            primitivity_index,
        })
    }
}

/// Wielandt's bound `(D-1)^2 + 1` on the primitivity index.
pub fn wielandt_bound(d: usize) -> usize {
    (d.saturating_sub(1)).pow(2) + 1
}

type Pattern = Vec<Vec<bool>>;

fn pattern_mul(a: &Pattern, b: &Pattern) -> Pattern {
    let n = a.len();
    let mut out = vec![vec![false; n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k] {
                for j in 0..n {
                    out[i][j] |= b[k][j];
                }
            }
        }
    }
    out
}

fn pattern_positive(p: &Pattern) -> bool {
    p.iter().all(|row| row.iter().all(|&x| x))
}

/// Smallest `h` with `A^h` entrywise positive, or `None` when `A` is not
/// primitive. Works on the zero pattern with boolean products.
pub fn primitivity_index(a: &DMatrix<f64>) -> Result<Option<usize>> {
    if !a.is_square() {
        return Err(Error::Dimension("primitivity needs a square matrix".into()));
    }
    check_nonnegative(a)?;
    let n = a.nrows();
    if n == 0 {
        return Ok(None);
    }
    let base: Pattern = (0..n).map(|i| (0..n).map(|j| a[(i, j)] > 0.0).collect()).collect();
    let bound = wielandt_bound(n);

    // squares[k] = pattern of A^(2^k)
    let mut squares = vec![base];
    while (1usize << (squares.len() - 1)) < bound {
        let last = squares.last().unwrap();
        squares.push(pattern_mul(last, last));
    }
    let identity: Pattern = (0..n).map(|i| (0..n).map(|j| i == j).collect()).collect();
    let power = |h: usize| -> Pattern {
        let mut acc = identity.clone();
        for (k, sq) in squares.iter().enumerate() {
            if h & (1 << k) != 0 {
                acc = pattern_mul(&acc, sq);
            }
        }
        acc
    };
    if !pattern_positive(&power(bound)) {
        return Ok(None);
    }
    // A primitive matrix has no zero row, so positivity of A^h persists for
    // larger h; binary lifting finds the first positive power.
    let mut h = 0usize;
    let mut acc = identity.clone();
    for k in (0..squares.len()).rev() {
        if h + (1 << k) >= bound {
            continue;
        }
        let cand = pattern_mul(&acc, &squares[k]);
        if !pattern_positive(&cand) {
            acc = cand;
            h += 1 << k;
        }
    }
    Ok(Some(h + 1))
}

/// Result of [`power_iteration_hilbert`].
#[derive(Debug, Clone)]
pub struct PowerIteration {
    /// Unit Euclidean norm, strictly positive for a primitive matrix.
    pub vector: DVector<f64>,
    /// Rayleigh quotient `xᵀAx / xᵀx` at the final iterate.
    pub value: f64,
    /// Hilbert distance between successive iterates (infinite while the
    /// support is still changing).
    pub trace: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

/// Power iteration `x ← Ax/‖Ax‖` stopped when the Hilbert distance between
/// successive iterates drops below `tol`. Non-primitive inputs are refused;
/// running out of iterations returns the partial trace with
/// `converged = false`.
pub fn power_iteration_hilbert(
    a: &DMatrix<f64>,
    x0: &DVector<f64>,
    tol: f64,
    max_iters: usize,
) -> Result<PowerIteration> {
    if a.nrows() != x0.len() {
        return Err(Error::Dimension(format!("matrix {}x{} vs vector {}", a.nrows(), a.ncols(), x0.len())));
    }
    if primitivity_index(a)?.is_none() {
        return Err(Error::NotPrimitive("power iteration requires a primitive matrix".into()));
    }
    if x0.iter().any(|&v| !(v >= 0.0)) || x0.iter().all(|&v| v == 0.0) {
        return Err(Error::Dimension("start vector must be nonnegative and nonzero".into()));
    }
    let mut x = x0 / x0.norm();
    let mut trace = Vec::new();
    let mut converged = false;
    for _ in 0..max_iters {
        let y = a * &x;
        let y = &y / y.norm();
        let d = face_distance(&y, &x);
        trace.push(d);
        x = y;
        if d < tol {
            converged = true;
            break;
        }
    }
    let value = x.dot(&(a * &x)) / x.dot(&x);
    Ok(PowerIteration {
        iterations: trace.len(),
        vector: x,
        value,
        trace,
        converged,
    })
}
