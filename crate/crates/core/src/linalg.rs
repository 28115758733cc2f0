//! Small dense linear-algebra helpers on top of nalgebra: a general
//! (complex) eigendecomposition with defect detection, characteristic
//! polynomials and a few matrix predicates.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative tolerance for grouping eigenvalues into clusters and for
/// deciding that an eigenvector basis is numerically singular.
pub const EIGEN_CLUSTER_TOL: f64 = 1e-9;
pub const DEFECT_TOL: f64 = 1e-8;

/// `C = S diag(values) S^-1` with eigenvalues sorted by decreasing modulus.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<Complex64>,
    /// Columns are unit-norm eigenvectors, phased so that their largest
    /// component is real and positive.
    pub vectors: DMatrix<Complex64>,
    pub inverse: DMatrix<Complex64>,
}

/// Eigenvalues of a real square matrix, sorted by decreasing modulus (ties
/// broken by decreasing real part, then decreasing imaginary part).
pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<Complex64> {
    let mut values: Vec<Complex64> = m.complex_eigenvalues().iter().copied().collect();
    sort_by_modulus(&mut values);
    values
}

fn sort_by_modulus(values: &mut [Complex64]) {
    values.sort_by(|a, b| {
        b.norm()
            .partial_cmp(&a.norm())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(b.re.partial_cmp(&a.re).unwrap_or(std::cmp::Ordering::Equal))
            .then(b.im.partial_cmp(&a.im).unwrap_or(std::cmp::Ordering::Equal))
    });
}

/// Full eigendecomposition. Eigenvectors are null vectors of `C - λI`
/// obtained from a complex SVD; repeated eigenvalues take as many null
/// directions as their multiplicity. Returns [`Error::Defective`] when the
/// resulting basis is numerically singular.
pub fn eigen_decompose(m: &DMatrix<f64>) -> Result<EigenDecomposition> {
    let n = m.nrows();
    if n != m.ncols() || n == 0 {
        return Err(Error::Dimension(format!("expected a square matrix, got {}x{}", m.nrows(), m.ncols())));
    }
    let values = eigenvalues(m);
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let mc: DMatrix<Complex64> = m.map(|x| Complex64::new(x, 0.0));

    let mut vectors = DMatrix::<Complex64>::zeros(n, n);
    let mut i = 0;
    while i < n {
        // cluster of (numerically) equal eigenvalues starting at i
        let mut j = i + 1;
        while j < n && (values[j] - values[i]).norm() <= EIGEN_CLUSTER_TOL * scale {
            j += 1;
        }
        let mult = j - i;
        let lambda = values[i..j].iter().sum::<Complex64>() / mult as f64;
        let shifted = &mc - DMatrix::<Complex64>::identity(n, n) * lambda;
        let svd = shifted.svd(false, true);
        let v_t = svd.v_t.ok_or(Error::Defective)?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            svd.singular_values[a]
                .partial_cmp(&svd.singular_values[b])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        for (slot, &idx) in order.iter().take(mult).enumerate() {
            if mult > 1 && svd.singular_values[idx] > DEFECT_TOL * scale {
                return Err(Error::Defective);
            }
            // rows of V^H are conjugated right singular vectors
            let v: DVector<Complex64> = v_t.row(idx).transpose().map(|z| z.conj());
            vectors.set_column(i + slot, &phase_normalize(v));
        }
        i = j;
    }

    let col_svd = vectors.clone().svd(false, false);
    let smin = col_svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
    if !(smin > DEFECT_TOL) {
        return Err(Error::Defective);
    }
    let inverse = vectors.clone().try_inverse().ok_or(Error::Defective)?;
    Ok(EigenDecomposition {
        values,
        vectors,
        inverse,
    })
}

fn phase_normalize(v: DVector<Complex64>) -> DVector<Complex64> {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let pivot = v
        .iter()
        .copied()
        .max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap_or(Complex64::new(1.0, 0.0));
    let phase = if pivot.norm() > 0.0 { pivot.conj() / pivot.norm() } else { Complex64::new(1.0, 0.0) };
    v.map(|z| z * phase / norm)
}

/// Right Perron pair of a nonnegative matrix: the eigenvalue of largest real
/// part (the spectral radius) and its eigenvector, scaled to unit sum with
/// nonnegative entries.
///
/// The vector is the null direction of `C - ρI` from a real SVD. Intended
/// for primitive matrices where that direction is unique and positive.
pub fn perron_pair(m: &DMatrix<f64>) -> Result<(f64, DVector<f64>)> {
    let n = m.nrows();
    let scale = m.amax();
    if scale <= 0.0 {
        return Err(Error::NotPrimitive("zero matrix".into()));
    }
    let a = m / scale;
    let rho = eigenvalues(&a)
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let shifted = &a - DMatrix::<f64>::identity(n, n) * rho;
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| Error::Singular("SVD failed".into()))?;
    let idx = (0..n)
        .min_by(|&i, &j| svd.singular_values[i].partial_cmp(&svd.singular_values[j]).unwrap())
        .unwrap();
    let mut v: DVector<f64> = v_t.row(idx).transpose();
    if v.sum() < 0.0 {
        v = -v;
    }
    // roundoff can leave tiny negative entries in the zero pattern
    v.apply(|x| *x = x.max(0.0));
    let s = v.sum();
    if !(s > 0.0) {
        return Err(Error::NotPrimitive("no nonnegative Perron vector".into()));
    }
    Ok((rho * scale, v / s))
}

/// Coefficients of `det(sI - A)` in ascending powers, `[c_0, .., c_{n-1}, 1]`
/// (Faddeev-LeVerrier recursion).
pub fn char_poly(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut coeffs = vec![0.0; n + 1];
    coeffs[n] = 1.0;
    let id = DMatrix::<f64>::identity(n, n);
    let mut mk = DMatrix::<f64>::zeros(n, n);
    for k in 1..=n {
        mk = a * &mk + &id * coeffs[n - k + 1];
        coeffs[n - k] = -(a * &mk).trace() / k as f64;
    }
    coeffs
}

/// Determinants of the leading principal submatrices, sizes `1..=n`.
pub fn leading_principal_minors(a: &DMatrix<f64>) -> Vec<f64> {
    (1..=a.nrows())
        .map(|k| a.view((0, 0), (k, k)).into_owned().determinant())
        .collect()
}

pub fn largest_symmetric_eigenvalue(a: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(a.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn is_symmetric(a: &DMatrix<f64>, tol: f64) -> bool {
    a.is_square()
        && (0..a.nrows()).all(|i| (0..i).all(|j| (a[(i, j)] - a[(j, i)]).abs() <= tol))
}

/// Cholesky factor if the symmetric matrix is positive definite.
pub fn cholesky(a: &DMatrix<f64>) -> Option<Cholesky<f64, nalgebra::Dyn>> {
    Cholesky::new(a.clone())
}
