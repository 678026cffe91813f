//! Finite-dimensional self-adjoint operators as dense real symmetric matrices.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Polynomial, ScalarFunction};

const SYMMETRY_TOL: f64 = 1e-12;
const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITER: usize = 10_000;
/// Relative factor of the Loewner certification tolerance.
pub const LOEWNER_REL_TOL: f64 = 1e-8;

/// Dense real symmetric matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "MatrixJson", try_from = "MatrixJson")]
pub struct HermitianOperator {
    mat: DMatrix<f64>,
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |a, x| a.max(x.abs()))
}

impl HermitianOperator {
    /// Validates squareness, finiteness and symmetry within `1e-12 * max|entry|`.
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
            return Err(Error::BadShape {
                rows: mat.nrows(),
                cols: mat.ncols(),
            });
        }
        if mat.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        let residual = max_abs(&(&mat - mat.transpose()));
        if residual > SYMMETRY_TOL * max_abs(&mat).max(f64::MIN_POSITIVE) {
            return Err(Error::NotSymmetric { residual });
        }
        Ok(Self::symmetrized(mat))
    }

    /// `(M + M^T) / 2`, for results of symmetric-preserving arithmetic.
    pub fn symmetrized(mat: DMatrix<f64>) -> Self {
        let t = mat.transpose();
        Self { mat: (mat + t) * 0.5 }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(matrix_from_rows(rows)?)
    }

    pub fn diag(values: &[f64]) -> Self {
        Self {
            mat: DMatrix::from_diagonal(&DVector::from_column_slice(values)),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            mat: DMatrix::identity(n, n),
        }
    }

    pub fn scalar(n: usize, c: f64) -> Self {
        Self {
            mat: DMatrix::identity(n, n) * c,
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            mat: DMatrix::zeros(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.mat
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.mat)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            mat: &self.mat + &other.mat,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            mat: &self.mat - &other.mat,
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { mat: &self.mat * c }
    }

    /// `self + c I`
    pub fn shift(&self, c: f64) -> Self {
        self.add(&Self::scalar(self.dim(), c))
    }

    /// Symmetric part of the product `self * other`.
    pub fn sym_product(&self, other: &Self) -> Self {
        Self::symmetrized(&self.mat * &other.mat)
    }

    /// Max-entry norm of the commutator `AB - BA`.
    pub fn commutator_norm(&self, other: &Self) -> f64 {
        max_abs(&(&self.mat * &other.mat - &other.mat * &self.mat))
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(spectral_decompose(self)?.values)
    }

    pub fn spectral_bounds(&self) -> Result<(f64, f64)> {
        let v = self.eigenvalues()?;
        Ok((v[0], v[v.len() - 1]))
    }

    pub fn to_json(&self) -> MatrixJson {
        MatrixJson {
            dim: Some(self.dim()),
            rows: matrix_rows(&self.mat),
        }
    }
}

/// Wire form `{"dim": n, "rows": [[...], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    pub rows: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        if let Some(d) = self.dim {
            if d != self.rows.len() {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: self.rows.len(),
                });
            }
        }
        matrix_from_rows(&self.rows)
    }

    pub fn to_operator(&self) -> Result<HermitianOperator> {
        HermitianOperator::new(self.to_matrix()?)
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        Self {
            dim: Some(m.nrows()),
            rows: matrix_rows(m),
        }
    }
}

impl From<HermitianOperator> for MatrixJson {
    fn from(a: HermitianOperator) -> Self {
        a.to_json()
    }
}

impl TryFrom<MatrixJson> for HermitianOperator {
    type Error = Error;

    fn try_from(j: MatrixJson) -> Result<Self> {
        j.to_operator()
    }
}

pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    if r == 0 || c == 0 {
        return Err(Error::BadShape { rows: r, cols: c });
    }
    if let Some(bad) = rows.iter().find(|row| row.len() != c) {
        return Err(Error::DimensionMismatch {
            expected: c,
            got: bad.len(),
        });
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

pub fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// Ascending eigenvalues and matching orthonormal eigenvectors (columns).
#[derive(Debug, Clone)]
pub struct Spectral {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl Spectral {
    /// `Q diag(h(values)) Q^T`
    pub fn rebuild(&self, h: impl Fn(f64) -> f64) -> HermitianOperator {
        let d = DVector::from_iterator(self.values.len(), self.values.iter().map(|&x| h(x)));
        let scaled = &self.vectors * DMatrix::from_diagonal(&d);
        HermitianOperator::symmetrized(scaled * self.vectors.transpose())
    }
}

pub fn spectral_decompose(a: &HermitianOperator) -> Result<Spectral> {
    if a.mat.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let eig =
        SymmetricEigen::try_new(a.mat.clone(), EIGEN_EPS, EIGEN_MAX_ITER).ok_or(Error::ConvergenceFailure)?;
    let n = a.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(Spectral { values, vectors })
}

/// `f(A)` by the spectral route.
pub fn apply_scalar_function(f: &ScalarFunction, a: &HermitianOperator) -> Result<HermitianOperator> {
    let spec = spectral_decompose(a)?;
    let domain = f.domain();
    let bad: Vec<f64> = spec
        .values
        .iter()
        .copied()
        .filter(|&x| !domain.contains(x))
        .collect();
    if !bad.is_empty() {
        return Err(Error::DomainViolation(format!(
            "eigenvalues {bad:?} are outside the domain {domain} of {f}"
        )));
    }
    let values: Vec<f64> = spec.values.iter().map(|&x| f.eval(x)).collect();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::DomainViolation(format!(
            "{f} is not finite at eigenvalue {}",
            spec.values[i]
        )));
    }
    Ok(spec.rebuild(|x| f.eval(x)))
}

/// `p(A)` by Horner's scheme in matrix arithmetic.
pub fn apply_polynomial(p: &Polynomial, a: &HermitianOperator) -> HermitianOperator {
    let n = a.dim();
    let c = p.coeffs();
    let mut acc = DMatrix::identity(n, n) * c[c.len() - 1];
    for &ci in c.iter().rev().skip(1) {
        acc = &acc * &a.mat;
        for i in 0..n {
            acc[(i, i)] += ci;
        }
    }
    HermitianOperator::symmetrized(acc)
}

/// Result of comparing `A <= B` in the Loewner order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderCertificate {
    /// Minimum eigenvalue of `B - A`.
    pub gap_min_eig: f64,
    pub tol: f64,
    pub holds: bool,
}

impl OrderCertificate {
    /// Same comparison re-judged at `tol * scale`.
    pub fn rescaled(&self, scale: f64) -> Self {
        let tol = self.tol * scale;
        Self {
            gap_min_eig: self.gap_min_eig,
            tol,
            holds: self.gap_min_eig >= -tol,
        }
    }
}

pub fn loewner_leq(a: &HermitianOperator, b: &HermitianOperator, tol: f64) -> Result<OrderCertificate> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let gap = b.sub(a);
    let gap_min_eig = gap.eigenvalues()?[0];
    Ok(OrderCertificate {
        gap_min_eig,
        tol,
        holds: gap_min_eig >= -tol,
    })
}

/// `1e-8 * max(1, ||A||_max, ||B||_max)`.
pub fn certification_tol(a: &HermitianOperator, b: &HermitianOperator) -> f64 {
    LOEWNER_REL_TOL * 1f64.max(a.max_abs()).max(b.max_abs())
}

/// [`loewner_leq`] at [`certification_tol`] scaled by `tol_scale`.
pub fn certify_leq(a: &HermitianOperator, b: &HermitianOperator, tol_scale: f64) -> Result<OrderCertificate> {
    loewner_leq(a, b, tol_scale * certification_tol(a, b))
}

fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Orthonormal columns from a Gaussian matrix, QR with the sign of diag(R) fixed.
fn orthonormal_columns(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    let qr = gaussian_matrix(rng, rows, cols).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..cols {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

pub fn random_orthogonal(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    orthonormal_columns(rng, n, n)
}

/// `Q diag(values) Q^T`
pub fn with_spectrum(basis: &DMatrix<f64>, values: &[f64]) -> HermitianOperator {
    let d = DMatrix::from_diagonal(&DVector::from_column_slice(values));
    HermitianOperator::symmetrized(basis * d * basis.transpose())
}

/// Seeded random operator with eigenvalues i.i.d. uniform on `[m, M]`; for
/// `n >= 2` the endpoints `m` and `M` are always eigenvalues.
pub fn random_hermitian(n: usize, m: f64, big_m: f64, seed: u64) -> Result<HermitianOperator> {
    if n == 0 {
        return Err(Error::BadShape { rows: 0, cols: 0 });
    }
    if !(m < big_m) {
        return Err(Error::InvalidInput(format!("need m < M, got [{m}, {big_m}]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values: Vec<f64> = (0..n).map(|_| rng.random_range(m..=big_m)).collect();
    if n >= 2 {
        values[0] = m;
        values[1] = big_m;
    }
    let q = random_orthogonal(&mut rng, n);
    Ok(with_spectrum(&q, &values))
}

/// Seeded `rows x cols` matrix with `V^T V = I`.
pub fn random_isometry(rows: usize, cols: usize, seed: u64) -> Result<DMatrix<f64>> {
    if cols == 0 || rows < cols {
        return Err(Error::BadShape { rows, cols });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(orthonormal_columns(&mut rng, rows, cols))
}

/// `V^T X V`
pub fn compress(v: &DMatrix<f64>, x: &HermitianOperator) -> Result<HermitianOperator> {
    if v.nrows() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: v.nrows(),
            got: x.dim(),
        });
    }
    Ok(HermitianOperator::symmetrized(v.transpose() * x.matrix() * v))
}

/// `max |V^T V - I|`
pub fn isometry_residual(v: &DMatrix<f64>) -> f64 {
    let g = v.transpose() * v;
    max_abs(&(g - DMatrix::identity(v.ncols(), v.ncols())))
}
