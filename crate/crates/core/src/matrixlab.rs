//! Dense linear-algebra utilities with explicit rank tolerances.
//!
//! Signals are stored as matrices whose columns are the samples, so a signal
//! of `T` vectors in `R^m` is an `m × T` matrix.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tolerance;

/// Singular values with the threshold that produced a rank decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub rank: usize,
    pub singular_values: Vec<f64>,
    pub tol_used: f64,
}

impl RankReport {
    fn from_values(singular_values: Vec<f64>, tol_used: f64) -> Self {
        let rank = singular_values.iter().filter(|s| **s > tol_used).count();
        Self {
            rank,
            singular_values,
            tol_used,
        }
    }

    /// Smallest singular value kept by the threshold, if any.
    pub fn smallest_retained(&self) -> Option<f64> {
        self.rank.checked_sub(1).map(|i| self.singular_values[i])
    }
}

/// Singular value decomposition `M = U diag(s) Vᵀ` with `s` nonincreasing.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    pub v: DMatrix<f64>,
}

fn to_faer(m: &DMatrix<f64>) -> faer::Mat<f64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Thin SVD (`full = false`) or SVD with square `U` and `V` (`full = true`).
/// Backed by faer; nalgebra's bidiagonal SVD loses accuracy on some
/// rank-deficient inputs.
pub fn svd(m: &DMatrix<f64>, full: bool) -> Result<Svd> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        let (ur, vr) = if full { (rows, cols) } else { (0, 0) };
        return Ok(Svd {
            u: DMatrix::identity(rows, ur),
            s: Vec::new(),
            v: DMatrix::identity(cols, vr),
        });
    }
    let fm = to_faer(m);
    let dec = if full { fm.svd() } else { fm.thin_svd() }
        .map_err(|e| Error::Numerical(format!("SVD did not converge: {e:?}")))?;
    let k = rows.min(cols);
    let diag = dec.S().column_vector();
    let s: Vec<f64> = (0..k).map(|i| diag[i]).collect();
    Ok(Svd {
        u: from_faer(dec.U()),
        s,
        v: from_faer(dec.V()),
    })
}

/// Singular values sorted nonincreasing. Empty matrices have none.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s = to_faer(m)
        .singular_values()
        .expect("singular value iteration converges");
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Singular values of a complex matrix, nonincreasing.
pub fn complex_singular_values(m: &DMatrix<Complex64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let fm = faer::Mat::<faer::c64>::from_fn(m.nrows(), m.ncols(), |i, j| {
        let z = m[(i, j)];
        faer::c64::new(z.re, z.im)
    });
    let mut s = fm
        .singular_values()
        .expect("singular value iteration converges");
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// `max(rows, cols) · ε · σ_max`.
pub fn default_rank_tol(rows: usize, cols: usize, sigma_max: f64) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON * sigma_max
}

pub fn numerical_rank(m: &DMatrix<f64>, tol: Option<f64>) -> RankReport {
    let s = singular_values(m);
    let smax = s.first().copied().unwrap_or(0.0);
    let tol = tol.unwrap_or_else(|| default_rank_tol(m.nrows(), m.ncols(), smax));
    RankReport::from_values(s, tol)
}

/// Rank with threshold `rtol · σ_max`.
pub fn relative_rank(m: &DMatrix<f64>, rtol: f64) -> RankReport {
    let s = singular_values(m);
    let smax = s.first().copied().unwrap_or(0.0);
    RankReport::from_values(s, rtol * smax)
}

/// Rank of a matrix built from recorded data, using [`tolerance::data_rtol`].
pub fn data_rank(m: &DMatrix<f64>) -> RankReport {
    relative_rank(m, tolerance::data_rtol())
}

/// Block Hankel matrix of depth `depth`: column `j` stacks samples
/// `j, j+1, …, j+depth−1`.
pub fn hankel(signal: &DMatrix<f64>, depth: usize) -> Result<DMatrix<f64>> {
    let (m, t) = signal.shape();
    if depth == 0 {
        return Err(Error::Dimension("Hankel depth must be positive".into()));
    }
    if depth > t {
        return Err(Error::Dimension(format!(
            "Hankel depth {depth} exceeds signal length {t}"
        )));
    }
    let cols = t - depth + 1;
    Ok(DMatrix::from_fn(depth * m, cols, |r, c| {
        signal[(r % m, c + r / m)]
    }))
}

/// Stack vectors of equal length as the columns of a matrix.
pub fn columns(vectors: &[DVector<f64>], rows: usize) -> Result<DMatrix<f64>> {
    if let Some(bad) = vectors.iter().position(|v| v.len() != rows) {
        return Err(Error::Dimension(format!(
            "vector {bad} has length {}, expected {rows}",
            vectors[bad].len()
        )));
    }
    Ok(DMatrix::from_fn(rows, vectors.len(), |r, c| vectors[c][r]))
}

pub fn vstack(top: &DMatrix<f64>, bottom: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if top.ncols() != bottom.ncols() {
        return Err(Error::Dimension(format!(
            "vstack: {} vs {} columns",
            top.ncols(),
            bottom.ncols()
        )));
    }
    let mut out = DMatrix::zeros(top.nrows() + bottom.nrows(), top.ncols());
    out.rows_mut(0, top.nrows()).copy_from(top);
    out.rows_mut(top.nrows(), bottom.nrows()).copy_from(bottom);
    Ok(out)
}

pub fn hstack(left: &DMatrix<f64>, right: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if left.nrows() != right.nrows() {
        return Err(Error::Dimension(format!(
            "hstack: {} vs {} rows",
            left.nrows(),
            right.nrows()
        )));
    }
    let mut out = DMatrix::zeros(left.nrows(), left.ncols() + right.ncols());
    out.columns_mut(0, left.ncols()).copy_from(left);
    out.columns_mut(left.ncols(), right.ncols())
        .copy_from(right);
    Ok(out)
}

/// Moore–Penrose pseudoinverse, discarding singular values `≤ tol`.
pub fn pinv(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return DMatrix::zeros(cols, rows);
    }
    let dec = svd(m, false).expect("SVD converges");
    let mut out = DMatrix::zeros(cols, rows);
    for (i, &s) in dec.s.iter().enumerate() {
        if s > tol {
            out += dec.v.column(i) * dec.u.column(i).transpose() / s;
        }
    }
    out
}

/// A linear subspace of `R^n` held as an orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: DMatrix<f64>,
    tol: f64,
}

impl Subspace {
    pub fn zero(ambient_dim: usize) -> Self {
        Self {
            basis: DMatrix::zeros(ambient_dim, 0),
            tol: 0.0,
        }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Self {
            basis: DMatrix::identity(ambient_dim, ambient_dim),
            tol: 0.0,
        }
    }

    /// Column space of `m`; singular directions with `σ ≤ tol` are dropped.
    /// `None` selects the default threshold of [`numerical_rank`].
    pub fn image(m: &DMatrix<f64>, tol: Option<f64>) -> Self {
        let (rows, cols) = m.shape();
        if cols == 0 || rows == 0 {
            return Self {
                tol: tol.unwrap_or(0.0),
                ..Self::zero(rows)
            };
        }
        let dec = svd(m, false).expect("SVD converges");
        let smax = dec.s[0];
        let tol = tol.unwrap_or_else(|| default_rank_tol(rows, cols, smax));
        let r = dec.s.iter().take_while(|&&s| s > tol).count();
        let basis = dec.u.columns(0, r).into_owned();
        Self { basis, tol }
    }

    /// Column space of recorded data, thresholded at `data_rtol · σ_max`.
    pub fn data_image(m: &DMatrix<f64>) -> Self {
        let smax = singular_values(m).first().copied().unwrap_or(0.0);
        Self::image(m, Some(tolerance::data_rtol() * smax))
    }

    /// Wrap columns that are already orthonormal.
    pub(crate) fn from_orthonormal(basis: DMatrix<f64>, tol: f64) -> Self {
        Self { basis, tol }
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn is_full(&self) -> bool {
        self.dim() == self.ambient_dim()
    }

    /// Orthogonal projection of `v` onto the subspace.
    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.basis * (self.basis.transpose() * v)
    }

    /// Euclidean norm of the component of `v` orthogonal to the subspace.
    pub fn residual(&self, v: &DVector<f64>) -> f64 {
        (v - self.project(v)).norm()
    }

    pub fn contains_vector(&self, v: &DVector<f64>, tol: f64) -> bool {
        v.len() == self.ambient_dim() && self.residual(v) <= tol
    }

    /// `other ⊆ self` with the default basis-residual threshold.
    pub fn contains(&self, other: &Subspace) -> Result<bool> {
        self.contains_with_tol(other, tolerance::SUBSPACE_TOL)
    }

    /// `other ⊆ self`: every basis vector of `other` has projection residual `≤ tol`.
    pub fn contains_with_tol(&self, other: &Subspace, tol: f64) -> Result<bool> {
        Ok(self.basis_residuals(other)?.into_iter().all(|r| r <= tol))
    }

    /// Projection residual of each basis vector of `other`.
    pub fn basis_residuals(&self, other: &Subspace) -> Result<Vec<f64>> {
        if self.ambient_dim() != other.ambient_dim() {
            return Err(Error::Dimension(format!(
                "subspaces live in R^{} and R^{}",
                self.ambient_dim(),
                other.ambient_dim()
            )));
        }
        Ok(other
            .basis
            .column_iter()
            .map(|w| self.residual(&w.into_owned()))
            .collect())
    }

    pub fn equals(&self, other: &Subspace) -> Result<bool> {
        Ok(self.dim() == other.dim() && self.contains(other)? && other.contains(self)?)
    }

    /// Orthonormal basis of the orthogonal complement.
    pub fn complement(&self) -> Subspace {
        let n = self.ambient_dim();
        let r = self.dim();
        if r == 0 {
            return Subspace::full(n);
        }
        if r == n {
            return Subspace::zero(n);
        }
        let dec = svd(&self.basis, true).expect("SVD converges");
        let basis = dec.u.columns(r, n - r).into_owned();
        Subspace::from_orthonormal(basis, self.tol)
    }
}

pub fn image(m: &DMatrix<f64>, tol: Option<f64>) -> Subspace {
    Subspace::image(m, tol)
}

pub fn subspace_contains(outer: &Subspace, inner: &Subspace) -> Result<bool> {
    outer.contains(inner)
}

pub fn subspace_equal(a: &Subspace, b: &Subspace) -> Result<bool> {
    a.equals(b)
}

/// Orthonormal basis of `{ v : vᵀ M = 0 }`.
pub fn left_kernel_basis(m: &DMatrix<f64>, tol: Option<f64>) -> Vec<DVector<f64>> {
    Subspace::image(m, tol)
        .complement()
        .basis()
        .column_iter()
        .map(|c| c.into_owned())
        .collect()
}

fn require_square(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!(
            "expected a square matrix, got {}×{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Eigenvalues from a real Schur decomposition.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    require_square(m)?;
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    if !m.iter().all(|v| v.is_finite()) {
        return Err(Error::Numerical("matrix has non-finite entries".into()));
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Numerical("Schur iteration did not converge".into()))?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(m)?.iter().map(|l| l.norm()).fold(0.0, f64::max))
}

/// Spectral radius strictly below one.
pub fn is_schur(m: &DMatrix<f64>) -> Result<bool> {
    is_schur_with_margin(m, 0.0)
}

pub fn is_schur_with_margin(m: &DMatrix<f64>, margin: f64) -> Result<bool> {
    Ok(spectral_radius(m)? < 1.0 - margin)
}
