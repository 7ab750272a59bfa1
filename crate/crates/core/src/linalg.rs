//! Dense symmetric linear algebra used throughout the crate.
//!
//! Every matrix that plays the role of a covariance, a power constraint or a
//! noise covariance is a [`SymMatrix`]. Construction symmetrizes the input as
//! `(M + Mᵀ)/2` so that values read back from text files compare exactly.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default absolute eigenvalue tolerance for PSD predicates.
pub const DEFAULT_PSD_TOL: f64 = 1e-9;

/// A real symmetric matrix. Entries satisfy `m[(i,j)] == m[(j,i)]` exactly.
#[derive(Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("SymMatrix").field(&self.to_rows()).finish()
    }
}

impl SymMatrix {
    /// Symmetrizes `m`. Panics if `m` is not square or is empty.
    pub fn new(m: DMatrix<f64>) -> Self {
        Self::try_new(m).expect("symmetric matrix must be square and non-empty")
    }

    pub fn try_new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Dimension(format!(
                "expected square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(Error::Dimension("matrix must have dim >= 1".into()));
        }
        let t = m.transpose();
        Ok(Self((m + t) * 0.5))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::try_new(matrix_from_rows(rows)?)
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn diag(values: &[f64]) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_column_slice(values)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        matrix_to_rows(&self.0)
    }

    pub fn scale(&self, a: f64) -> Self {
        Self(&self.0 * a)
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    /// Eigenvalues in ascending order with matching eigenvector columns.
    pub fn eigh(&self) -> (Vec<f64>, DMatrix<f64>) {
        let eig = SymmetricEigen::new(self.0.clone());
        let n = self.dim();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut vectors = DMatrix::zeros(n, n);
        for (k, &i) in order.iter().enumerate() {
            vectors.set_column(k, &eig.eigenvectors.column(i));
        }
        (values, vectors)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.0.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.0.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Rebuilds `V·diag(f(λ))·Vᵀ`.
    pub fn map_eigenvalues(&self, f: impl Fn(f64) -> f64) -> Self {
        let eig = SymmetricEigen::new(self.0.clone());
        let v = &eig.eigenvectors;
        let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
        Self::new(v * d * v.transpose())
    }

    /// Euclidean projection onto the PSD cone.
    pub fn project_psd(&self) -> Self {
        self.map_eigenvalues(|x| x.max(0.0))
    }

    /// Euclidean projection onto `{0 ⪯ X ⪯ I}`.
    pub fn clip_unit_interval(&self) -> Self {
        self.map_eigenvalues(|x| x.clamp(0.0, 1.0))
    }

    /// Congruence `A·self·Aᵀ` for a rectangular `A`.
    pub fn congruence(&self, a: &DMatrix<f64>) -> Self {
        Self::new(a * &self.0 * a.transpose())
    }

    /// Inverse of a positive definite matrix via Cholesky.
    pub fn inverse_pd(&self) -> Result<Self> {
        match self.0.clone().cholesky() {
            Some(ch) => Ok(Self::new(ch.inverse())),
            None => Err(Error::NotPositiveDefinite { min_eig: self.min_eigenvalue() }),
        }
    }

    pub fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension(format!("{} vs {}", self.dim(), other.dim())));
        }
        Ok(())
    }
}

impl Add for &SymMatrix {
    type Output = SymMatrix;
    fn add(self, rhs: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &SymMatrix {
    type Output = SymMatrix;
    fn sub(self, rhs: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 - &rhs.0)
    }
}

impl Mul<f64> for &SymMatrix {
    type Output = SymMatrix;
    fn mul(self, rhs: f64) -> SymMatrix {
        self.scale(rhs)
    }
}

impl Serialize for SymMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for SymMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        SymMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Eigenvalue tolerance used for PSD predicates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdCone {
    pub tol: f64,
}

impl Default for PsdCone {
    fn default() -> Self {
        Self { tol: DEFAULT_PSD_TOL }
    }
}

impl PsdCone {
    pub fn new(tol: f64) -> Result<Self> {
        if !(tol >= 0.0) {
            return Err(Error::InvalidArgument(format!("PSD tolerance must be >= 0, got {tol}")));
        }
        Ok(Self { tol })
    }

    pub fn contains(&self, m: &SymMatrix) -> bool {
        is_psd(m, self.tol)
    }

    pub fn leq(&self, a: &SymMatrix, b: &SymMatrix) -> Result<bool> {
        psd_leq(a, b, self.tol)
    }
}

/// `true` iff the smallest eigenvalue of `m` is at least `-tol`.
pub fn is_psd(m: &SymMatrix, tol: f64) -> bool {
    m.min_eigenvalue() >= -tol
}

/// Löwner order test `a ⪯ b`.
pub fn psd_leq(a: &SymMatrix, b: &SymMatrix, tol: f64) -> Result<bool> {
    a.check_same_dim(b)?;
    Ok(is_psd(&(b - a), tol))
}

/// Natural log-determinant of a positive definite matrix, from the Cholesky
/// diagonal.
pub fn logdet(m: &SymMatrix) -> Result<f64> {
    match m.as_matrix().clone().cholesky() {
        Some(ch) => Ok(2.0 * ch.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()),
        None => Err(Error::NotPositiveDefinite { min_eig: m.min_eigenvalue() }),
    }
}

/// Log-determinant and inverse of a positive definite matrix from one
/// Cholesky factorization.
pub fn logdet_inv(m: &SymMatrix) -> Result<(f64, SymMatrix)> {
    match m.as_matrix().clone().cholesky() {
        Some(ch) => {
            let ld = 2.0 * ch.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
            Ok((ld, SymMatrix::new(ch.inverse())))
        }
        None => Err(Error::NotPositiveDefinite { min_eig: m.min_eigenvalue() }),
    }
}

/// Symmetric PSD square root. Eigenvalues in `[-tol, 0)` are clamped to zero.
pub fn sqrt_psd(m: &SymMatrix, tol: f64) -> Result<SymMatrix> {
    let (vals, vecs) = m.eigh();
    if vals[0] < -tol {
        return Err(Error::NotPsd { min_eig: vals[0] });
    }
    let d = DMatrix::from_diagonal(&DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&x| x.max(0.0).sqrt()),
    ));
    Ok(SymMatrix::new(&vecs * d * vecs.transpose()))
}

/// Rank-revealing square-root factor: returns `R` (`d × r`) with `R·Rᵀ = m`,
/// keeping only eigenvalues above `tol · max(1, λ_max)`.
pub fn psd_factor(m: &SymMatrix, tol: f64) -> Result<DMatrix<f64>> {
    let (vals, vecs) = m.eigh();
    if vals[0] < -tol {
        return Err(Error::NotPsd { min_eig: vals[0] });
    }
    let cut = tol * vals.last().copied().unwrap_or(0.0).max(1.0);
    let keep: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > cut).collect();
    let mut r = DMatrix::zeros(m.dim(), keep.len());
    for (k, &i) in keep.iter().enumerate() {
        r.set_column(k, &(vecs.column(i) * vals[i].sqrt()));
    }
    Ok(r)
}

/// A generalized eigenpair `a·v = λ·b·v`.
#[derive(Debug, Clone)]
pub struct GenEigenPair {
    pub value: f64,
    pub vector: DVector<f64>,
}

/// Symmetric-definite generalized eigenproblem via Cholesky reduction.
/// Eigenvalues descend; eigenvectors are `b`-orthonormal.
pub fn gen_eig(a: &SymMatrix, b: &SymMatrix) -> Result<Vec<GenEigenPair>> {
    a.check_same_dim(b)?;
    let chol = b
        .as_matrix()
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite { min_eig: b.min_eigenvalue() })?;
    let l = chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    let reduced = SymMatrix::new(&l_inv * a.as_matrix() * l_inv.transpose());
    let (vals, vecs) = reduced.eigh();
    let back = l_inv.transpose();
    let mut pairs: Vec<GenEigenPair> = vals
        .iter()
        .enumerate()
        .map(|(i, &value)| GenEigenPair { value, vector: &back * vecs.column(i) })
        .collect();
    pairs.reverse();
    Ok(pairs)
}

pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    if nrows == 0 {
        return Err(Error::Dimension("matrix has no rows".into()));
    }
    let ncols = rows[0].len();
    if ncols == 0 {
        return Err(Error::Dimension("matrix has no columns".into()));
    }
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != ncols) {
        return Err(Error::Dimension(format!(
            "row {} has {} entries, expected {}",
            i + 1,
            r.len(),
            ncols
        )));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

/// Euclidean projection of a vector onto `{x ≥ 0, Σx ≤ budget}`.
pub fn project_capped_simplex(x: &[f64], budget: f64) -> Vec<f64> {
    let clipped: Vec<f64> = x.iter().map(|v| v.max(0.0)).collect();
    if clipped.iter().sum::<f64>() <= budget {
        return clipped;
    }
    // Sort-based projection onto {x ≥ 0, Σx = budget}.
    let mut u: Vec<f64> = x.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cumsum += uk;
        let t = (cumsum - budget) / (k as f64 + 1.0);
        if uk - t > 0.0 {
            theta = t;
        }
    }
    x.iter().map(|v| (v - theta).max(0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn m(rows: &[&[f64]]) -> SymMatrix {
        SymMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn construction_symmetrizes() {
        let a = SymMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 4.0, 3.0]));
        assert_eq!(a.as_matrix()[(0, 1)], 3.0);
        assert_eq!(a.as_matrix()[(1, 0)], 3.0);
        assert!(SymMatrix::try_new(DMatrix::zeros(2, 3)).is_err());
        assert!(SymMatrix::try_new(DMatrix::zeros(0, 0)).is_err());
    }

    #[test]
    fn psd_examples() {
        assert!(is_psd(&SymMatrix::identity(2), 1e-9));
        assert!(!is_psd(&SymMatrix::diag(&[1.0, -0.5]), 1e-9));
        assert!(is_psd(&m(&[&[5.0, 1.25], &[1.25, 10.0]]), 1e-9));
    }

    #[test]
    fn psd_leq_examples() {
        let i2 = SymMatrix::identity(2);
        assert!(psd_leq(&SymMatrix::zeros(2), &i2, 1e-9).unwrap());
        assert!(psd_leq(&i2, &i2, 1e-9).unwrap());
        // b - a has eigenvalues {-1, 3}
        assert!(!psd_leq(&SymMatrix::diag(&[2.0, 0.0]), &SymMatrix::diag(&[1.0, 3.0]), 1e-9).unwrap());
        assert!(psd_leq(&i2, &SymMatrix::identity(3), 1e-9).is_err());
    }

    #[test]
    fn logdet_examples() {
        assert_eq!(logdet(&SymMatrix::identity(3)).unwrap(), 0.0);
        let e = std::f64::consts::E;
        assert_relative_eq!(logdet(&SymMatrix::diag(&[e, e])).unwrap(), 2.0, epsilon = 1e-14);
        let a = m(&[&[66.2, 78.25], &[78.25, 103.5]]);
        let det: f64 = 66.2 * 103.5 - 78.25 * 78.25;
        assert_relative_eq!(det, 728.6375, epsilon = 1e-9);
        assert_relative_eq!(logdet(&a).unwrap(), det.ln(), epsilon = 1e-12);
    }

    #[test]
    fn logdet_rejects_indefinite() {
        match logdet(&SymMatrix::diag(&[1.0, -2.0])) {
            Err(Error::NotPositiveDefinite { min_eig }) => assert_relative_eq!(min_eig, -2.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sqrt_examples() {
        assert_relative_eq!(
            sqrt_psd(&SymMatrix::identity(2), 1e-9).unwrap().as_matrix(),
            SymMatrix::identity(2).as_matrix(),
            epsilon = 1e-14
        );
        assert_relative_eq!(
            sqrt_psd(&SymMatrix::diag(&[4.0, 9.0]), 1e-9).unwrap().as_matrix(),
            SymMatrix::diag(&[2.0, 3.0]).as_matrix(),
            epsilon = 1e-14
        );
        assert_eq!(sqrt_psd(&SymMatrix::zeros(2), 1e-9).unwrap().norm(), 0.0);
        assert!(matches!(sqrt_psd(&SymMatrix::diag(&[1.0, -1.0]), 1e-9), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn gen_eig_examples() {
        let vals = |a: &SymMatrix, b: &SymMatrix| -> Vec<f64> {
            gen_eig(a, b).unwrap().iter().map(|p| p.value).collect()
        };
        let i2 = SymMatrix::identity(2);
        let v = vals(&i2, &i2);
        assert_relative_eq!(v[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(v[1], 1.0, epsilon = 1e-14);
        let v = vals(&SymMatrix::diag(&[2.0, 8.0]), &SymMatrix::diag(&[1.0, 4.0]));
        assert_relative_eq!(v[0], 2.0, epsilon = 1e-14);
        assert_relative_eq!(v[1], 2.0, epsilon = 1e-14);
        // characteristic polynomial (3-λ)² - 1 = 0
        let v = vals(&m(&[&[3.0, 1.0], &[1.0, 3.0]]), &i2);
        assert_relative_eq!(v[0], 4.0, epsilon = 1e-13);
        assert_relative_eq!(v[1], 2.0, epsilon = 1e-13);
        assert!(gen_eig(&i2, &SymMatrix::diag(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn psd_factor_drops_null_space() {
        let s = SymMatrix::diag(&[4.0, 0.0]);
        let r = psd_factor(&s, 1e-12).unwrap();
        assert_eq!(r.ncols(), 1);
        assert_relative_eq!(&r * r.transpose(), s.as_matrix().clone(), epsilon = 1e-12);
    }

    #[test]
    fn capped_simplex_projection() {
        assert_eq!(project_capped_simplex(&[0.2, -1.0], 1.0), vec![0.2, 0.0]);
        let p = project_capped_simplex(&[2.0, 1.0], 1.0);
        assert_relative_eq!(p[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(p[1], 0.0, epsilon = 1e-14);
        let p = project_capped_simplex(&[1.0, 1.0], 1.0);
        assert_relative_eq!(p[0] + p[1], 1.0, epsilon = 1e-14);
    }
}
