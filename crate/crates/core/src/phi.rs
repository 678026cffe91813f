//! The compressed polynomial map `Phi(X) = V^T (sum_i a_i X^i) V`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{apply_polynomial, compress, isometry_residual, HermitianOperator, MatrixJson};
use crate::scalar::Polynomial;

pub const MAX_PHI_DEGREE: usize = 12;
const ISOMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PhiJson", into = "PhiJson")]
pub struct PhiMap {
    v: DMatrix<f64>,
    coeffs: Vec<f64>,
}

impl PhiMap {
    pub fn new(v: DMatrix<f64>, coeffs: Vec<f64>) -> Result<Self> {
        if v.ncols() == 0 || v.nrows() < v.ncols() {
            return Err(Error::BadShape {
                rows: v.nrows(),
                cols: v.ncols(),
            });
        }
        let residual = isometry_residual(&v);
        if !(residual <= ISOMETRY_TOL) {
            return Err(Error::InvalidInput(format!(
                "V is not an isometry (|V^T V - I| = {residual:e})"
            )));
        }
        if coeffs.is_empty() {
            return Err(Error::InvalidInput("phi needs at least one coefficient".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("phi coefficients must be finite".into()));
        }
        let mut coeffs = coeffs;
        while coeffs.len() > 1 && coeffs[coeffs.len() - 1] == 0.0 {
            coeffs.pop();
        }
        if coeffs.len() - 1 > MAX_PHI_DEGREE {
            return Err(Error::InvalidInput(format!(
                "phi degree {} exceeds {MAX_PHI_DEGREE}",
                coeffs.len() - 1
            )));
        }
        Ok(Self { v, coeffs })
    }

    /// `V = I_n`
    pub fn with_identity(n: usize, coeffs: Vec<f64>) -> Result<Self> {
        Self::new(DMatrix::identity(n, n), coeffs)
    }

    /// `Phi(X) = X` on n-dimensional operators.
    pub fn identity(n: usize) -> Self {
        Self::with_identity(n, vec![0.0, 1.0]).expect("identity map is valid")
    }

    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn polynomial(&self) -> Polynomial {
        Polynomial::new(self.coeffs.clone())
    }

    pub fn input_dim(&self) -> usize {
        self.v.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.v.ncols()
    }

    /// Powers with `a_i >= 0`; zero coefficients land here.
    pub fn s_plus(&self) -> Vec<usize> {
        (0..self.coeffs.len())
            .filter(|&i| self.coeffs[i] >= 0.0)
            .collect()
    }

    pub fn s_minus(&self) -> Vec<usize> {
        (0..self.coeffs.len()).filter(|&i| self.coeffs[i] < 0.0).collect()
    }

    /// True when some power `i >= 2` has a nonzero coefficient.
    pub fn has_nonlinear_terms(&self) -> bool {
        self.coeffs.iter().skip(2).any(|&c| c != 0.0)
    }

    /// Replaces the isometry, keeping the coefficients.
    pub fn with_v(&self, v: DMatrix<f64>) -> Result<Self> {
        Self::new(v, self.coeffs.clone())
    }
}

pub fn phi_apply(phi: &PhiMap, x: &HermitianOperator) -> Result<HermitianOperator> {
    if x.dim() != phi.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: phi.input_dim(),
            got: x.dim(),
        });
    }
    if phi_is_normalized_positive_linear(phi) {
        return compress(&phi.v, x);
    }
    compress(&phi.v, &apply_polynomial(&phi.polynomial(), x))
}

/// `Phi(X) = V^T X V` exactly: `a_1 = 1` is the only nonzero coefficient.
pub fn phi_is_normalized_positive_linear(phi: &PhiMap) -> bool {
    phi.coeffs.len() == 2 && phi.coeffs[0] == 0.0 && phi.coeffs[1] == 1.0
}

/// Wire form `{"coeffs": [...], "V": <matrix> | "identity:n"}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiJson {
    pub coeffs: Vec<f64>,
    #[serde(rename = "V")]
    pub v: VSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VSpec {
    Named(String),
    Matrix(MatrixJson),
}

impl VSpec {
    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        match self {
            VSpec::Matrix(m) => m.to_matrix(),
            VSpec::Named(s) => {
                let n = s
                    .strip_prefix("identity:")
                    .and_then(|n| n.trim().parse::<usize>().ok())
                    .filter(|&n| n > 0)
                    .ok_or_else(|| Error::Parse(format!("expected \"identity:n\", got {s:?}")))?;
                Ok(DMatrix::identity(n, n))
            }
        }
    }
}

impl TryFrom<PhiJson> for PhiMap {
    type Error = Error;

    fn try_from(j: PhiJson) -> Result<Self> {
        PhiMap::new(j.v.to_matrix()?, j.coeffs)
    }
}

impl From<PhiMap> for PhiJson {
    fn from(p: PhiMap) -> Self {
        let square = p.v.nrows() == p.v.ncols();
        let v = if square && p.v == DMatrix::identity(p.v.nrows(), p.v.ncols()) {
            VSpec::Named(format!("identity:{}", p.v.nrows()))
        } else {
            VSpec::Matrix(MatrixJson::from_matrix(&p.v))
        };
        PhiJson { coeffs: p.coeffs, v }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_map() {
        let x = HermitianOperator::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        assert_eq!(phi_apply(&PhiMap::identity(2), &x).unwrap(), x);
    }

    #[test]
    fn quadratic_map_on_diagonal() {
        let phi = PhiMap::with_identity(2, vec![1.0, 0.0, 1.0]).unwrap();
        let out = phi_apply(&phi, &HermitianOperator::diag(&[1.0, 2.0])).unwrap();
        assert_eq!(out, HermitianOperator::diag(&[2.0, 5.0]));
    }

    #[test]
    fn corner_compression() {
        let v = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let phi = PhiMap::new(v, vec![0.0, 1.0]).unwrap();
        let out = phi_apply(&phi, &HermitianOperator::diag(&[3.0, 7.0])).unwrap();
        assert_eq!(out.dim(), 1);
        assert_eq!(out.matrix()[(0, 0)], 3.0);
    }

    #[test]
    fn normalized_linear_detection() {
        let f = |c: Vec<f64>| phi_is_normalized_positive_linear(&PhiMap::with_identity(2, c).unwrap());
        assert!(f(vec![0.0, 1.0]));
        assert!(!f(vec![1.0, 1.0]));
        assert!(!f(vec![0.0, 2.0]));
        assert!(f(vec![0.0, 1.0, 0.0]));
    }

    #[test]
    fn signed_split() {
        let phi = PhiMap::with_identity(1, vec![0.0, -1.0, 2.0, -0.5]).unwrap();
        assert_eq!(phi.s_plus(), vec![0, 2]);
        assert_eq!(phi.s_minus(), vec![1, 3]);
    }

    #[test]
    fn validation() {
        assert!(PhiMap::new(DMatrix::from_element(2, 2, 1.0), vec![0.0, 1.0]).is_err());
        assert!(PhiMap::with_identity(2, vec![1.0; 14]).is_err());
        assert!(matches!(
            phi_apply(&PhiMap::identity(2), &HermitianOperator::identity(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn json_forms() {
        let p: PhiMap = serde_json::from_str(r#"{"coeffs": [0, 1], "V": "identity:3"}"#).unwrap();
        assert_eq!(p, PhiMap::identity(3));
        let q: PhiMap = serde_json::from_str(r#"{"coeffs": [1, 0, 2], "V": {"rows": [[1], [0]]}}"#).unwrap();
        assert_eq!(q.output_dim(), 1);
        let back: PhiMap = serde_json::from_str(&serde_json::to_string(&q).unwrap()).unwrap();
        assert_eq!(back, q);
        assert!(serde_json::from_str::<PhiMap>(r#"{"coeffs": [0, 1], "V": "eye:3"}"#).is_err());
    }
}
