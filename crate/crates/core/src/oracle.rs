//! Dense diagonalization of the search Hamiltonian as an independent check
//! of the scalar eigenvalue condition and of the predicted weights.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::critical::EigenSolution;
use crate::dense::HermitianEigen;
use crate::error::{Error, Result};
use crate::hamiltonian::{assemble_dense, SearchParams, StateVector};
use crate::predict::Prediction;

/// Indices of the two search eigenvectors: the positive- and negative-energy
/// eigenvectors with the largest overlap on `v`.
///
/// Selecting by overlap rather than by distance to zero matters because the
/// free spectrum has other states near zero: the opposite `β` sector of a
/// full representation carries `-E_±`, and a reduced representation has flat
/// bands.
pub fn search_pair(eig: &HermitianEigen, v: &[Complex64]) -> Result<(usize, usize)> {
    let coeffs = eig.coefficients(v);
    let pick = |positive: bool| {
        eig.values()
            .iter()
            .zip(&coeffs)
            .enumerate()
            .filter(|(_, (&l, _))| if positive { l > 0.0 } else { l < 0.0 })
            .max_by(|a, b| a.1 .1.norm_sqr().total_cmp(&b.1 .1.norm_sqr()))
            .map(|(i, _)| i)
    };
    match (pick(true), pick(false)) {
        (Some(p), Some(m)) => Ok((p, m)),
        _ => Err(Error::Numerical("spectrum lacks a sign change".into())),
    }
}

/// Dense and scalar results side by side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleComparison {
    pub dense_e_plus: f64,
    pub dense_e_minus: f64,
    pub scalar_e_plus: f64,
    pub scalar_e_minus: f64,
    /// Relative eigenvalue errors.
    pub err_e_plus: f64,
    pub err_e_minus: f64,
    /// Norm of the search eigenvectors' spinor at the marked site.
    pub dense_overlap_plus: f64,
    pub dense_overlap_minus: f64,
    /// `sqrt(R_±)`.
    pub predicted_overlap_plus: f64,
    pub predicted_overlap_minus: f64,
    /// Relative overlap errors.
    pub err_overlap_plus: f64,
    pub err_overlap_minus: f64,
    /// `|⟨η, s|ψ_±⟩|` from the dense eigenvectors.
    pub start_overlap_plus: f64,
    pub start_overlap_minus: f64,
}

impl OracleComparison {
    pub fn max_eigenvalue_error(&self) -> f64 {
        self.err_e_plus.max(self.err_e_minus)
    }

    pub fn max_overlap_error(&self) -> f64 {
        self.err_overlap_plus.max(self.err_overlap_minus)
    }
}

/// Diagonalize `H` densely and compare with `roots` and `prediction`.
pub fn compare_dense(params: &SearchParams, roots: &EigenSolution, prediction: &Prediction) -> Result<OracleComparison> {
    let h = assemble_dense(params)?;
    let eig = HermitianEigen::new(&h)?;
    let start = StateVector::uniform(params.cfg(), params.rep().eta());
    let (ip, im) = search_pair(&eig, start.amplitudes())?;
    let coeffs = eig.coefficients(start.amplitudes());
    let ds = params.rep().dim();
    let w = params.w();
    let site_norm = |i: usize| {
        let v = eig.vector(i);
        v[w * ds..(w + 1) * ds].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    };
    let (dp, dm) = (eig.values()[ip], eig.values()[im]);
    let (op, om) = (site_norm(ip), site_norm(im));
    let (pp, pm) = (prediction.r.sqrt(), prediction.r_minus.sqrt());
    Ok(OracleComparison {
        dense_e_plus: dp,
        dense_e_minus: dm,
        scalar_e_plus: roots.e_plus,
        scalar_e_minus: roots.e_minus,
        err_e_plus: ((dp - roots.e_plus) / roots.e_plus).abs(),
        err_e_minus: ((dm - roots.e_minus) / roots.e_minus).abs(),
        dense_overlap_plus: op,
        dense_overlap_minus: om,
        predicted_overlap_plus: pp,
        predicted_overlap_minus: pm,
        err_overlap_plus: ((op - pp) / pp).abs(),
        err_overlap_minus: ((om - pm) / pm).abs(),
        start_overlap_plus: coeffs[ip].norm(),
        start_overlap_minus: coeffs[im].norm(),
    })
}
