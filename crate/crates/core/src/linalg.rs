//! Small dense complex linear algebra: eigendecomposition of general
//! (non-Hermitian) matrices and the matrix exponential.

use nalgebra::DMatrix;

use crate::model::C64;

/// `A = V diag(λ) V⁻¹`.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<C64>,
    pub vectors: DMatrix<C64>,
    pub inverse: DMatrix<C64>,
    /// `‖V‖₁ ‖V⁻¹‖₁`.
    pub condition: f64,
}

fn norm1(m: &DMatrix<C64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Eigenvalues and right eigenvectors via a complex Schur form `A = Q T Q†`.
///
/// Eigenvectors of the triangular factor come from back substitution; a
/// defective or nearly defective matrix shows up as a huge condition number
/// (or `None` if `V` is numerically singular).
pub fn eigen(a: &DMatrix<C64>) -> Option<Eigen> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "eigen: matrix must be square");
    if n == 0 {
        return None;
    }
    let schur = nalgebra::Schur::try_new(a.clone(), f64::EPSILON, 10_000)?;
    let (q, t) = schur.unpack();

    let scale = t.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let tiny = f64::EPSILON * scale;

    let mut y = DMatrix::<C64>::zeros(n, n);
    for k in 0..n {
        let lambda = t[(k, k)];
        y[(k, k)] = C64::from(1.0);
        for j in (0..k).rev() {
            let mut acc = C64::from(0.0);
            for l in j + 1..=k {
                acc += t[(j, l)] * y[(l, k)];
            }
            let mut denom = t[(j, j)] - lambda;
            if denom.norm() < tiny {
                denom = C64::from(tiny);
            }
            y[(j, k)] = -acc / denom;
        }
    }
    let mut vectors = q * y;
    for mut col in vectors.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 && norm.is_finite() {
            col /= C64::from(norm);
        }
    }
    let inverse = vectors.clone().try_inverse()?;
    if inverse.iter().any(|z| !z.is_finite()) {
        return None;
    }
    let condition = norm1(&vectors) * norm1(&inverse);
    let values = (0..n).map(|k| t[(k, k)]).collect();
    Some(Eigen {
        values,
        vectors,
        inverse,
        condition,
    })
}

/// Eigenvalues only, from the Schur form.
pub fn eigenvalues(a: &DMatrix<C64>) -> Option<Vec<C64>> {
    let schur = nalgebra::Schur::try_new(a.clone(), f64::EPSILON, 10_000)?;
    let (_, t) = schur.unpack();
    Some((0..a.nrows()).map(|k| t[(k, k)]).collect())
}

/// `exp(A)` by Padé scaling-and-squaring.
pub fn expm(a: &DMatrix<C64>) -> DMatrix<C64> {
    a.exp()
}
