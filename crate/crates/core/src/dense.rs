//! Dense Hermitian eigendecomposition and the exact propagator built on it.

use faer::{Mat, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Eigenpairs of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    values: Vec<f64>,
    vectors: Mat<Complex64>,
}

impl HermitianEigen {
    pub fn new(h: &Mat<Complex64>) -> Result<Self> {
        if h.nrows() != h.ncols() {
            return Err(Error::Mismatch {
                expected: h.nrows(),
                got: h.ncols(),
            });
        }
        let evd = h.self_adjoint_eigen(Side::Lower).map_err(|_| Error::Eigen)?;
        let values = evd.S().column_vector().iter().map(|z| z.re).collect();
        Ok(Self {
            values,
            vectors: evd.U().to_owned(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vectors(&self) -> &Mat<Complex64> {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn vector(&self, i: usize) -> Vec<Complex64> {
        self.vectors.col(i).iter().copied().collect()
    }

    /// Coefficients `U† v` in the eigenbasis.
    pub fn coefficients(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.len();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (i, o) in out.iter_mut().enumerate() {
            let col = self.vectors.col(i);
            *o = col.iter().zip(v).map(|(u, x)| u.conj() * x).sum();
        }
        out
    }

    /// `Σ_i c_i e^{-i λ_i t} u_i`.
    pub fn evolve_coefficients(&self, coeffs: &[Complex64], t: f64) -> Vec<Complex64> {
        let n = self.len();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (i, (c, &lam)) in coeffs.iter().zip(&self.values).enumerate() {
            let a = c * Complex64::from_polar(1.0, -lam * t);
            if a == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (o, u) in out.iter_mut().zip(self.vectors.col(i).iter()) {
                *o += a * u;
            }
        }
        out
    }

    /// `e^{-iHt} v`.
    pub fn propagate(&self, v: &[Complex64], t: f64) -> Vec<Complex64> {
        self.evolve_coefficients(&self.coefficients(v), t)
    }
}

/// Eigenvalues only.
pub fn hermitian_eigenvalues(h: &Mat<Complex64>) -> Result<Vec<f64>> {
    let vals = h.self_adjoint_eigenvalues(Side::Lower).map_err(|_| Error::Eigen)?;
    Ok(vals)
}
