//! Spin-operator representations of the Dirac algebra.
//!
//! A representation supplies `d` generators `alpha_j` and one `beta` with
//! `{alpha_j, alpha_k} = 2 δ_jk`, `{alpha_j, beta} = 0` and `beta² = 1`.
//! [`RepKind::Full`] satisfies these as matrix identities in dimension
//! `2^ceil(d/2)`. [`RepKind::Reduced`] lives in dimension `d + 1` and only
//! satisfies them when applied to the reference vector `eta = |0⟩`.

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::MAX_DIM;

pub type SpinMatrix = Mat<Complex64>;

const ALGEBRA_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RepKind {
    Full,
    Reduced,
}

impl std::fmt::Display for RepKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RepKind::Full => f.write_str("full"),
            RepKind::Reduced => f.write_str("reduced"),
        }
    }
}

impl std::str::FromStr for RepKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(RepKind::Full),
            "reduced" => Ok(RepKind::Reduced),
            other => Err(Error::InvalidParameter(format!("unknown representation '{other}'"))),
        }
    }
}

/// A concrete set of spin operators together with its reference state.
#[derive(Debug, Clone)]
pub struct SpinRep {
    kind: RepKind,
    d: usize,
    alphas: Vec<SpinMatrix>,
    beta: SpinMatrix,
    eta: Vec<Complex64>,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn pauli() -> [SpinMatrix; 3] {
    let z = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    let x = Mat::from_fn(2, 2, |r, col| if r != col { one } else { z });
    let y = Mat::from_fn(2, 2, |r, col| match (r, col) {
        (0, 1) => -i,
        (1, 0) => i,
        _ => z,
    });
    let zz = Mat::from_fn(2, 2, |r, col| match (r, col) {
        (0, 0) => one,
        (1, 1) => -one,
        _ => z,
    });
    [x, y, zz]
}

fn kron(a: &SpinMatrix, b: &SpinMatrix) -> SpinMatrix {
    let (nb, mb) = (b.nrows(), b.ncols());
    Mat::from_fn(a.nrows() * nb, a.ncols() * mb, |r, col| {
        a[(r / nb, col / mb)] * b[(r % nb, col % mb)]
    })
}

fn identity(n: usize) -> SpinMatrix {
    Mat::from_fn(n, n, |r, col| if r == col { c(1.0, 0.0) } else { c(0.0, 0.0) })
}

/// `2m + 1` mutually anticommuting Hermitian involutions of size `2^m`.
fn clifford_generators(m: usize) -> Vec<SpinMatrix> {
    if m == 0 {
        return vec![identity(1)];
    }
    let [sx, sy, sz] = pauli();
    let lower = clifford_generators(m - 1);
    let eye = identity(1 << (m - 1));
    let mut gens: Vec<SpinMatrix> = lower.iter().map(|g| kron(&sx, g)).collect();
    gens.push(kron(&sy, &eye));
    gens.push(kron(&sz, &eye));
    gens
}

fn check_dim(d: usize) -> Result<()> {
    if (1..=MAX_DIM).contains(&d) {
        Ok(())
    } else {
        Err(Error::Dimension(d))
    }
}

/// Minimal matrix representation: `dim = 2^ceil(d/2)`, `beta` diagonal with
/// `beta = +1` on the first half of the basis.
pub fn build_full_rep(d: usize) -> Result<SpinRep> {
    check_dim(d)?;
    let mut gens = clifford_generators(d.div_ceil(2));
    let beta = gens.pop().expect("at least three generators");
    gens.truncate(d);
    let dim = beta.nrows();
    let mut eta = vec![c(0.0, 0.0); dim];
    eta[0] = c(1.0, 0.0);
    Ok(SpinRep {
        kind: RepKind::Full,
        d,
        alphas: gens,
        beta,
        eta,
    })
}

/// `alpha_j = |0⟩⟨j| + |j⟩⟨0|`, `beta = 2|0⟩⟨0| - I`, `eta = |0⟩`.
pub fn build_reduced_rep(d: usize) -> Result<SpinRep> {
    check_dim(d)?;
    let dim = d + 1;
    let alphas = (1..=d)
        .map(|j| {
            Mat::from_fn(dim, dim, |r, col| {
                if (r == 0 && col == j) || (r == j && col == 0) {
                    c(1.0, 0.0)
                } else {
                    c(0.0, 0.0)
                }
            })
        })
        .collect();
    let beta = Mat::from_fn(dim, dim, |r, col| match (r, col) {
        (0, 0) => c(1.0, 0.0),
        (r, col) if r == col => c(-1.0, 0.0),
        _ => c(0.0, 0.0),
    });
    let mut eta = vec![c(0.0, 0.0); dim];
    eta[0] = c(1.0, 0.0);
    Ok(SpinRep {
        kind: RepKind::Reduced,
        d,
        alphas,
        beta,
        eta,
    })
}

pub fn build_rep(kind: RepKind, d: usize) -> Result<SpinRep> {
    match kind {
        RepKind::Full => build_full_rep(d),
        RepKind::Reduced => build_reduced_rep(d),
    }
}

impl SpinRep {
    pub fn kind(&self) -> RepKind {
        self.kind
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        self.beta.nrows()
    }

    pub fn alphas(&self) -> &[SpinMatrix] {
        &self.alphas
    }

    pub fn alpha(&self, j: usize) -> &SpinMatrix {
        &self.alphas[j]
    }

    pub fn beta(&self) -> &SpinMatrix {
        &self.beta
    }

    pub fn eta(&self) -> &[Complex64] {
        &self.eta
    }

    /// Replace the reference spin state. Only full representations accept an
    /// arbitrary unit vector; the reduced algebra holds on `|0⟩` alone.
    pub fn with_eta(mut self, eta: Vec<Complex64>) -> Result<Self> {
        if eta.len() != self.dim() {
            return Err(Error::Mismatch {
                expected: self.dim(),
                got: eta.len(),
            });
        }
        if self.kind == RepKind::Reduced {
            return Err(Error::InvalidParameter(
                "the reduced representation fixes eta = |0⟩".into(),
            ));
        }
        let norm = eta.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("eta has norm {norm}")));
        }
        self.eta = eta;
        Ok(self)
    }

    /// Diagonal entries of `beta`, which is diagonal in both constructions.
    pub fn beta_diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.beta[(i, i)].re).collect()
    }

    /// Momentum-space block `ω Σ_j sin(k_j) α_j + γ c(k) β`.
    pub fn momentum_block(&self, k: &[f64], omega: f64, gamma: f64) -> SpinMatrix {
        let dim = self.dim();
        let ck = crate::spectral::c(k);
        Mat::from_fn(dim, dim, |r, col| {
            let hop: Complex64 = self
                .alphas
                .iter()
                .zip(k)
                .map(|(a, kj)| a[(r, col)] * (omega * kj.sin()))
                .sum();
            hop + self.beta[(r, col)] * (gamma * ck)
        })
    }
}

/// Outcome of an algebra check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlgebraReport {
    pub max_violation: f64,
    pub pass: bool,
}

fn anticommutator(a: &SpinMatrix, b: &SpinMatrix) -> SpinMatrix {
    a * b + b * a
}

fn max_dev(a: &SpinMatrix, b: &SpinMatrix) -> f64 {
    let mut m = 0.0f64;
    for r in 0..a.nrows() {
        for col in 0..a.ncols() {
            m = m.max((a[(r, col)] - b[(r, col)]).norm());
        }
    }
    m
}

fn max_dev_vec(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn mat_vec(m: &SpinMatrix, v: &[Complex64]) -> Vec<Complex64> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|col| m[(r, col)] * v[col]).sum())
        .collect()
}

fn scaled_identity(n: usize, s: f64) -> SpinMatrix {
    Mat::from_fn(n, n, |r, col| if r == col { c(s, 0.0) } else { c(0.0, 0.0) })
}

fn hermiticity_violation(m: &SpinMatrix) -> f64 {
    max_dev(m, &m.adjoint().to_owned())
}

/// Check the algebra in the sense appropriate for the representation kind:
/// full representations as matrix identities, reduced ones applied to eta.
/// Hermiticity of every generator is part of the check in both cases.
pub fn verify_algebra(rep: &SpinRep) -> AlgebraReport {
    match rep.kind {
        RepKind::Full => verify_algebra_strict(rep),
        RepKind::Reduced => verify_algebra_on(rep, rep.eta()),
    }
}

/// Check the relations as full matrix identities regardless of kind.
pub fn verify_algebra_strict(rep: &SpinRep) -> AlgebraReport {
    let dim = rep.dim();
    let zero = scaled_identity(dim, 0.0);
    let two = scaled_identity(dim, 2.0);
    let one = scaled_identity(dim, 1.0);
    let mut worst = hermiticity_violation(&rep.beta);
    for (j, aj) in rep.alphas.iter().enumerate() {
        worst = worst.max(hermiticity_violation(aj));
        for ak in &rep.alphas[j..] {
            let expected = if std::ptr::eq(aj, ak) { &two } else { &zero };
            worst = worst.max(max_dev(&anticommutator(aj, ak), expected));
        }
        worst = worst.max(max_dev(&anticommutator(aj, &rep.beta), &zero));
    }
    worst = worst.max(max_dev(&(&rep.beta * &rep.beta), &one));
    report(worst)
}

/// Check the relations applied to a single spin vector `v`, including
/// `beta v = v`.
pub fn verify_algebra_on(rep: &SpinRep, v: &[Complex64]) -> AlgebraReport {
    let mut worst = hermiticity_violation(&rep.beta);
    let zero = vec![c(0.0, 0.0); v.len()];
    let two_v: Vec<Complex64> = v.iter().map(|z| z * 2.0).collect();
    for (j, aj) in rep.alphas.iter().enumerate() {
        worst = worst.max(hermiticity_violation(aj));
        for (k, ak) in rep.alphas.iter().enumerate().skip(j) {
            let lhs = mat_vec(&anticommutator(aj, ak), v);
            let expected = if j == k { &two_v } else { &zero };
            worst = worst.max(max_dev_vec(&lhs, expected));
        }
        let lhs = mat_vec(&anticommutator(aj, &rep.beta), v);
        worst = worst.max(max_dev_vec(&lhs, &zero));
    }
    worst = worst.max(max_dev_vec(&mat_vec(&rep.beta, v), v));
    report(worst)
}

fn report(max_violation: f64) -> AlgebraReport {
    AlgebraReport {
        max_violation,
        pass: max_violation <= ALGEBRA_TOL,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(dim: usize, i: usize) -> Vec<Complex64> {
        let mut v = vec![c(0.0, 0.0); dim];
        v[i] = c(1.0, 0.0);
        v
    }

    #[test]
    fn full_dimensions() {
        for (d, dim) in [(1, 2), (2, 2), (3, 4), (4, 4), (5, 8), (6, 8)] {
            let rep = build_full_rep(d).unwrap();
            assert_eq!(rep.dim(), dim);
            assert_eq!(rep.alphas().len(), d);
            let r = verify_algebra(&rep);
            assert!(r.pass && r.max_violation == 0.0, "d={d}: {r:?}");
        }
    }

    #[test]
    fn entries_are_units() {
        for d in 1..=6 {
            for rep in [build_full_rep(d).unwrap(), build_reduced_rep(d).unwrap()] {
                for m in rep.alphas().iter().chain(std::iter::once(rep.beta())) {
                    for r in 0..m.nrows() {
                        for col in 0..m.ncols() {
                            let z = m[(r, col)];
                            let ok = [c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0)]
                                .contains(&z);
                            assert!(ok, "entry {z}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn reduced_beta_action() {
        let rep = build_reduced_rep(3).unwrap();
        assert_eq!(rep.dim(), 4);
        assert_eq!(mat_vec(rep.beta(), &basis(4, 0)), basis(4, 0));
        for j in 1..4 {
            let neg: Vec<Complex64> = basis(4, j).iter().map(|z| -z).collect();
            assert_eq!(mat_vec(rep.beta(), &basis(4, j)), neg);
        }
    }

    #[test]
    fn reduced_relations_on_eta() {
        let rep = build_reduced_rep(2).unwrap();
        let eta = rep.eta().to_vec();
        let a1 = rep.alpha(0);
        let a2 = rep.alpha(1);
        assert_eq!(mat_vec(&anticommutator(a1, a2), &eta), vec![c(0.0, 0.0); 3]);
        let twice: Vec<Complex64> = eta.iter().map(|z| z * 2.0).collect();
        assert_eq!(mat_vec(&anticommutator(a1, a1), &eta), twice);
        for d in 1..=6 {
            let r = verify_algebra(&build_reduced_rep(d).unwrap());
            assert!(r.pass && r.max_violation == 0.0);
        }
    }

    #[test]
    fn reduced_fails_off_eta() {
        let rep = build_reduced_rep(3).unwrap();
        assert!(!verify_algebra_strict(&rep).pass);
        // {α1, α2}|1⟩ = |2⟩
        let v = mat_vec(&anticommutator(rep.alpha(0), rep.alpha(1)), &basis(4, 1));
        assert_eq!(v, basis(4, 2));
        for d in 2..=6 {
            let rep = build_reduced_rep(d).unwrap();
            let r = verify_algebra_on(&rep, &basis(d + 1, 1));
            assert!(!r.pass && r.max_violation >= 1.0, "d={d}");
        }
    }

    #[test]
    fn reduced_d1_is_full() {
        let rep = build_reduced_rep(1).unwrap();
        assert_eq!(rep.dim(), 2);
        assert!(verify_algebra_strict(&rep).pass);
    }

    #[test]
    fn dimension_errors() {
        assert!(build_full_rep(0).is_err());
        assert!(build_reduced_rep(7).is_err());
    }

    #[test]
    fn eta_override() {
        let rep = build_full_rep(3).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let eta = vec![c(s, 0.0), c(0.0, s), c(0.0, 0.0), c(0.0, 0.0)];
        assert!(rep.clone().with_eta(eta).is_ok());
        assert!(rep.with_eta(vec![c(1.0, 0.0); 4]).is_err());
        assert!(build_reduced_rep(3).unwrap().with_eta(basis(4, 1)).is_err());
    }

    #[test]
    fn full_block_squares_to_energy() {
        let k = [0.3, -1.2, 2.9];
        let rep = build_full_rep(3).unwrap();
        let (w, g) = (0.7, 0.4);
        let b = rep.momentum_block(&k, w, g);
        let e2 = crate::spectral::dispersion(&k, w, g).powi(2);
        let sq = &b * &b;
        assert!(max_dev(&sq, &scaled_identity(4, e2)) < 1e-14);
        let trace: Complex64 = (0..4).map(|i| b[(i, i)]).sum();
        assert!(trace.norm() < 1e-15);
    }
}
