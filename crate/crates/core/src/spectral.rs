//! Momentum-space functions of the free Dirac walk and the spectral sums
//! `U(E)`, `V(E)` that control the search eigenvalues.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{momentum_grid, LatticeConfig};
use crate::quadrature::{BrillouinQuadrature, QmcConfig};

/// `Σ_j sin² k_j`.
pub fn s2(k: &[f64]) -> f64 {
    k.iter().map(|kj| kj.sin().powi(2)).sum()
}

/// `2 Σ_j (1 - cos k_j)`, evaluated as `4 Σ sin²(k_j/2)` to keep precision at small k.
pub fn c(k: &[f64]) -> f64 {
    k.iter().map(|kj| 4.0 * (0.5 * kj).sin().powi(2)).sum()
}

/// Non-negative branch `E(k) = sqrt(ω² s²(k) + γ² c(k)²)`.
pub fn dispersion(k: &[f64], omega: f64, gamma: f64) -> f64 {
    DispersionParams { omega, gamma }.energy2(s2(k), c(k)).sqrt()
}

/// Hopping strength `omega` and Laplacian-term strength `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionParams {
    pub omega: f64,
    pub gamma: f64,
}

impl DispersionParams {
    pub fn new(omega: f64, gamma: f64) -> Result<Self> {
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        if !ok(omega) || !ok(gamma) {
            return Err(Error::InvalidParameter(format!(
                "omega = {omega}, gamma = {gamma} must be finite and non-negative"
            )));
        }
        if omega == 0.0 && gamma == 0.0 {
            return Err(Error::InvalidParameter("omega and gamma are both zero".into()));
        }
        Ok(Self { omega, gamma })
    }

    #[inline]
    pub fn energy2(&self, s2: f64, c: f64) -> f64 {
        self.omega * self.omega * s2 + self.gamma * self.gamma * c * c
    }
}

/// `U`, `V` and their energy derivatives at one probe energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralSums {
    pub energy: f64,
    pub u: f64,
    pub v: f64,
    pub du: f64,
    pub dv: f64,
    pub gap: f64,
}

/// Anything that can average a kernel `f(s², c)` over the nonzero momenta:
/// a finite lattice (`(1/N) Σ_{k≠0}`) or the continuum zone integral.
pub trait ZoneAverage: Sync {
    fn zone_average<F: Fn(f64, f64) -> f64 + Sync>(&self, f: F) -> f64;
}

impl ZoneAverage for BrillouinQuadrature {
    fn zone_average<F: Fn(f64, f64) -> f64 + Sync>(&self, f: F) -> f64 {
        self.average(f)
    }
}

/// `γ U(0)`, a function of `r = ω/γ` alone.
pub fn reduced_u<Z: ZoneAverage>(zone: &Z, ratio: f64) -> f64 {
    let r2 = ratio * ratio;
    zone.zone_average(|s2, c| c / (r2 * s2 + c * c))
}

/// `s²(k)` and `c(k)` for every nonzero momentum of a lattice.
#[derive(Debug, Clone)]
pub struct MomentumTable {
    cfg: LatticeConfig,
    s2: Vec<f64>,
    c: Vec<f64>,
}

impl MomentumTable {
    pub fn new(cfg: &LatticeConfig) -> Self {
        let side = cfg.side() as i64;
        let grid = momentum_grid(cfg);
        // sin k_j vanishes exactly at k_j ∈ {0, π}; keep the doubler gaps exact.
        let (s2v, cv) = grid
            .iter()
            .filter(|p| !p.is_zero())
            .map(|p| {
                let s: f64 = p
                    .m
                    .iter()
                    .zip(&p.k)
                    .filter(|(m, _)| (2 * **m).rem_euclid(side) != 0)
                    .map(|(_, k)| k.sin().powi(2))
                    .sum();
                (s, c(&p.k))
            })
            .unzip();
        Self {
            cfg: *cfg,
            s2: s2v,
            c: cv,
        }
    }

    pub fn cfg(&self) -> &LatticeConfig {
        &self.cfg
    }

    pub fn n_sites(&self) -> usize {
        self.cfg.n_sites()
    }

    /// `min_{k≠0} E(k)`.
    pub fn gap(&self, p: &DispersionParams) -> f64 {
        self.s2
            .iter()
            .zip(&self.c)
            .map(|(&s, &c)| p.energy2(s, c))
            .fold(f64::INFINITY, f64::min)
            .sqrt()
    }

    /// Exact sums at probe energy `energy`, which must lie strictly inside the gap.
    pub fn sums(&self, p: &DispersionParams, energy: f64) -> Result<SpectralSums> {
        let gap = self.gap(p);
        if !(energy.abs() < gap * (1.0 - 1e-9)) {
            return Err(Error::OutsideGap { energy, gap });
        }
        let e2 = energy * energy;
        let (mut u, mut v, mut du, mut dv) = (0.0, 0.0, 0.0, 0.0);
        for (&s, &c) in self.s2.iter().zip(&self.c) {
            let inv = 1.0 / (p.energy2(s, c) - e2);
            let gc = p.gamma * c;
            u += gc * inv;
            v += inv;
            du += gc * inv * inv;
            dv += inv * inv;
        }
        let n = self.n_sites() as f64;
        Ok(SpectralSums {
            energy,
            u: u / n,
            v: v / n,
            du: 2.0 * energy * du / n,
            dv: 2.0 * energy * dv / n,
            gap,
        })
    }

    /// `U(0)`.
    pub fn u0(&self, p: &DispersionParams) -> Result<f64> {
        Ok(self.sums(p, 0.0)?.u)
    }

    /// `V(0)`.
    pub fn v0(&self, p: &DispersionParams) -> Result<f64> {
        Ok(self.sums(p, 0.0)?.v)
    }
}

impl ZoneAverage for MomentumTable {
    fn zone_average<F: Fn(f64, f64) -> f64 + Sync>(&self, f: F) -> f64 {
        let sum: f64 = self.s2.iter().zip(&self.c).map(|(&s, &c)| f(s, c)).sum();
        sum / self.n_sites() as f64
    }
}

pub fn spectral_sums(cfg: &LatticeConfig, p: &DispersionParams, energy: f64) -> Result<SpectralSums> {
    MomentumTable::new(cfg).sums(p, energy)
}

/// Continuum limit of `U(0)`: tensor quadrature for `d <= 3`, QMC above.
pub fn continuum_u0(d: usize, p: &DispersionParams) -> Result<f64> {
    continuum_u0_with(&BrillouinQuadrature::for_dim(d, QmcConfig::default()), p)
}

pub fn continuum_u0_with(quad: &BrillouinQuadrature, p: &DispersionParams) -> Result<f64> {
    if p.omega == 0.0 && quad.dim() <= 2 {
        return Err(Error::Divergent(format!(
            "U(0) with omega = 0 in d = {}",
            quad.dim()
        )));
    }
    if p.gamma == 0.0 {
        return Ok(0.0);
    }
    Ok(quad.average(|s2, c| p.gamma * c / p.energy2(s2, c)))
}

/// Continuum limit of `V(0)`; infrared divergent for `d <= 2`, and for
/// `d <= 4` when `omega = 0`.
pub fn continuum_v0(d: usize, p: &DispersionParams) -> Result<f64> {
    continuum_v0_with(&BrillouinQuadrature::for_dim(d, QmcConfig::default()), p)
}

pub fn continuum_v0_with(quad: &BrillouinQuadrature, p: &DispersionParams) -> Result<f64> {
    let d = quad.dim();
    if d <= 2 {
        return Err(Error::Divergent(format!(
            "V(0) is infrared divergent in d = {d}; use the finite lattice sum"
        )));
    }
    if p.omega == 0.0 && d <= 4 {
        return Err(Error::Divergent(format!("V(0) with omega = 0 in d = {d}")));
    }
    Ok(quad.average(|s2, c| 1.0 / p.energy2(s2, c)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn table(d: usize, side: usize) -> MomentumTable {
        MomentumTable::new(&LatticeConfig::new(d, side).unwrap())
    }

    #[test]
    fn scalar_functions() {
        assert_eq!(s2(&[0.0, 0.0]), 0.0);
        assert_eq!(c(&[0.0, 0.0]), 0.0);
        assert!(s2(&[PI, PI]).abs() < 1e-30);
        assert!((c(&[PI, PI]) - 8.0).abs() < 1e-14);
        assert!((s2(&[PI / 2.0, 0.0]) - 1.0).abs() < 1e-15);
        assert!((c(&[PI / 2.0, 0.0]) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn dispersion_values() {
        assert!((dispersion(&[PI / 2.0, 0.0], 1.0, 1.0) - 5f64.sqrt()).abs() < 1e-15);
        assert_eq!(dispersion(&[0.0, 0.0, 0.0], 0.3, 0.2), 0.0);
        assert!((dispersion(&[PI, PI], 0.0, 1.0) - 8.0).abs() < 1e-14);
    }

    #[test]
    fn params_validation() {
        assert!(DispersionParams::new(0.0, 0.0).is_err());
        assert!(DispersionParams::new(-1.0, 1.0).is_err());
        assert!(DispersionParams::new(f64::NAN, 1.0).is_err());
        assert!(DispersionParams::new(0.0, 1.0).is_ok());
    }

    #[test]
    fn zero_energy_derivatives_vanish() {
        let t = table(3, 6);
        let s = t.sums(&DispersionParams::new(0.4, 0.3).unwrap(), 0.0).unwrap();
        assert_eq!(s.du, 0.0);
        assert_eq!(s.dv, 0.0);
    }

    #[test]
    fn hand_evaluated_v0() {
        let t = table(1, 4);
        let p = DispersionParams::new(0.0, 1.0).unwrap();
        let expected = 0.25 * (0.25 + 0.25 + 1.0 / 16.0);
        assert!((t.v0(&p).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn gap_guard() {
        let t = table(2, 8);
        let p = DispersionParams::new(0.5, 0.5).unwrap();
        let gap = t.gap(&p);
        assert!(t.sums(&p, gap).is_err());
        assert!(t.sums(&p, -gap * (1.0 - 1e-10)).is_err());
        assert!(t.sums(&p, gap * 0.999).is_ok());
        // no Laplacian term: doublers close the gap
        let p = DispersionParams::new(1.0, 0.0).unwrap();
        assert!(t.sums(&p, 0.0).is_err());
    }

    #[test]
    fn evenness_exact() {
        let t = table(3, 5);
        let p = DispersionParams::new(0.6, 0.25).unwrap();
        let e = 0.3 * t.gap(&p);
        let a = t.sums(&p, e).unwrap();
        let b = t.sums(&p, -e).unwrap();
        assert_eq!(a.u, b.u);
        assert_eq!(a.v, b.v);
        assert_eq!(a.du, -b.du);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for (d, side) in [(2, 8), (3, 6), (4, 4)] {
            let t = table(d, side);
            let p = DispersionParams::new(0.7, 0.2).unwrap();
            let e = t.gap(&p) / 10.0;
            let h = e * 1e-4;
            let s = t.sums(&p, e).unwrap();
            let hi = t.sums(&p, e + h).unwrap();
            let lo = t.sums(&p, e - h).unwrap();
            let fdu = (hi.u - lo.u) / (2.0 * h);
            let fdv = (hi.v - lo.v) / (2.0 * h);
            assert!(((s.du - fdu) / s.du).abs() < 1e-6, "dU {} vs {}", s.du, fdu);
            assert!(((s.dv - fdv) / s.dv).abs() < 1e-6, "dV {} vs {}", s.dv, fdv);
        }
    }

    #[test]
    fn homogeneity_of_reduced_u() {
        let t = table(3, 8);
        for (w, g, scale) in [(0.3, 0.2, 3.0), (1.0, 0.1, 0.25), (0.05, 2.0, 7.0)] {
            let p = DispersionParams::new(w, g).unwrap();
            let q = DispersionParams::new(w * scale, g * scale).unwrap();
            let a = g * t.u0(&p).unwrap();
            let b = g * scale * t.u0(&q).unwrap();
            assert!((a - b).abs() < 1e-12 * a.abs());
            assert!((a - reduced_u(&t, w / g)).abs() < 1e-12 * a.abs());
        }
    }

    #[test]
    fn continuum_divergences() {
        let p = DispersionParams::new(1.0, 1.0).unwrap();
        assert!(matches!(continuum_v0(2, &p), Err(Error::Divergent(_))));
        assert!(matches!(continuum_v0(1, &p), Err(Error::Divergent(_))));
        let p0 = DispersionParams::new(0.0, 1.0).unwrap();
        assert!(matches!(continuum_v0(3, &p0), Err(Error::Divergent(_))));
        assert!(matches!(continuum_u0(2, &p0), Err(Error::Divergent(_))));
    }

    #[test]
    fn continuum_u0_homogeneity() {
        let p = DispersionParams::new(0.4, 0.3).unwrap();
        let q = DispersionParams::new(0.8, 0.6).unwrap();
        let a = continuum_u0(2, &p).unwrap();
        let b = continuum_u0(2, &q).unwrap();
        assert!((a - 2.0 * b).abs() < 1e-12 * a);
    }

    #[test]
    fn tensor_rule_converged() {
        use crate::quadrature::BrillouinQuadrature;
        let p = DispersionParams::new(0.3, 0.6).unwrap();
        for d in [2, 3] {
            let coarse = continuum_u0_with(&BrillouinQuadrature::tensor(d), &p).unwrap();
            let fine =
                continuum_u0_with(&BrillouinQuadrature::tensor_with(d, 14, 22, 0.2), &p).unwrap();
            assert!(((coarse - fine) / fine).abs() < 1e-7, "d={d}: {coarse} vs {fine}");
        }
        let coarse = continuum_v0_with(&BrillouinQuadrature::tensor(3), &p).unwrap();
        let fine = continuum_v0_with(&BrillouinQuadrature::tensor_with(3, 14, 22, 0.2), &p).unwrap();
        assert!(((coarse - fine) / fine).abs() < 1e-7, "{coarse} vs {fine}");
    }
}
