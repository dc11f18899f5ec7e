//! The criticality condition `U(0) = 1` and the two search eigenvalues.
//!
//! Criticality is solved in the ratio parametrization: with `r = ω/γ`,
//! `u(r) = γ U(0)` depends on `r` alone, so the critical point for a given
//! ratio is `(ω, γ) = (r u(r), u(r))`. The curve `ω(r) = r u(r)` rises from
//! zero, folds at `ω*`, and falls again; each `ω < ω*` therefore has one
//! solution on either side of the fold.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeConfig;
use crate::quadrature::{BrillouinQuadrature, QmcConfig};
use crate::spectral::{reduced_u, DispersionParams, MomentumTable, ZoneAverage};

/// Tolerance on `|U(0) - 1|` for a solved critical point.
pub const CRITICAL_TOL: f64 = 1e-10;

/// Tolerance on `|U(0) - 1|` accepted by the eigenvalue root finder.
pub const CRITICAL_INPUT_TOL: f64 = 1e-8;

/// Residual tolerance on the scalar eigenvalue condition.
pub const ROOT_TOL: f64 = 1e-12;

/// Where `U(0)` comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Source {
    /// Exact sum on a periodic lattice with `side` sites per axis.
    Lattice { side: usize },
    /// Brillouin-zone integral.
    Continuum,
}

/// Side of the fold in the critical curve. `Upper` has the larger `γ`
/// (smaller ratio `ω/γ`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Upper,
    Lower,
}

impl std::str::FromStr for Branch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "upper" => Ok(Branch::Upper),
            "lower" => Ok(Branch::Lower),
            other => Err(Error::InvalidParameter(format!("unknown branch '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub ratio: f64,
    pub omega: f64,
    pub gamma: f64,
    pub d: usize,
    pub source: Source,
}

impl CriticalPoint {
    pub fn params(&self) -> DispersionParams {
        DispersionParams {
            omega: self.omega,
            gamma: self.gamma,
        }
    }
}

/// Log-spaced ratio range used to locate the fold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRange {
    pub r_min: f64,
    pub r_max: f64,
    pub points: usize,
}

impl Default for ScanRange {
    fn default() -> Self {
        Self {
            r_min: 1e-3,
            r_max: 1e2,
            points: 121,
        }
    }
}

impl ScanRange {
    pub fn ratios(&self) -> Vec<f64> {
        log_space(self.r_min, self.r_max, self.points)
    }
}

pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

enum Zone {
    Lattice(MomentumTable),
    Continuum(BrillouinQuadrature),
}

impl ZoneAverage for Zone {
    fn zone_average<F: Fn(f64, f64) -> f64 + Sync>(&self, f: F) -> f64 {
        match self {
            Zone::Lattice(t) => t.zone_average(f),
            Zone::Continuum(q) => q.zone_average(f),
        }
    }
}

/// Fold location of the critical curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fold {
    pub ratio: f64,
    pub omega_star: f64,
    pub gamma: f64,
    /// End of the falling side: the first local minimum of `ω(r)` past the
    /// fold, or the top of the scan range.
    pub valley: f64,
}

/// Criticality solver for one dimension and source; the zone data and the
/// fold are computed once.
pub struct CriticalSolver {
    d: usize,
    source: Source,
    zone: Zone,
    range: ScanRange,
    fold: Fold,
}

impl std::fmt::Debug for CriticalSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CriticalSolver")
            .field("d", &self.d)
            .field("source", &self.source)
            .field("fold", &self.fold)
            .finish()
    }
}

impl CriticalSolver {
    pub fn new(d: usize, source: Source) -> Result<Self> {
        Self::with_options(d, source, ScanRange::default(), QmcConfig::default())
    }

    pub fn with_options(d: usize, source: Source, range: ScanRange, qmc: QmcConfig) -> Result<Self> {
        if !(range.r_min > 0.0 && range.r_max > range.r_min && range.points >= 3) {
            return Err(Error::InvalidParameter(format!("bad scan range {range:?}")));
        }
        let zone = match source {
            Source::Lattice { side } => Zone::Lattice(MomentumTable::new(&LatticeConfig::new(d, side)?)),
            Source::Continuum => {
                if !(1..=crate::lattice::MAX_DIM).contains(&d) {
                    return Err(Error::Dimension(d));
                }
                Zone::Continuum(BrillouinQuadrature::for_dim(d, qmc))
            }
        };
        let mut solver = Self {
            d,
            source,
            zone,
            range,
            fold: Fold {
                ratio: f64::NAN,
                omega_star: f64::NAN,
                gamma: f64::NAN,
                valley: f64::NAN,
            },
        };
        solver.fold = solver.locate_fold()?;
        Ok(solver)
    }

    /// Reuse a prebuilt lattice table.
    pub fn from_table(table: MomentumTable) -> Result<Self> {
        let d = table.cfg().dim();
        let side = table.cfg().side();
        let mut solver = Self {
            d,
            source: Source::Lattice { side },
            zone: Zone::Lattice(table),
            range: ScanRange::default(),
            fold: Fold {
                ratio: f64::NAN,
                omega_star: f64::NAN,
                gamma: f64::NAN,
                valley: f64::NAN,
            },
        };
        solver.fold = solver.locate_fold()?;
        Ok(solver)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn source(&self) -> Source {
        self.source
    }

    pub fn range(&self) -> ScanRange {
        self.range
    }

    pub fn fold(&self) -> Fold {
        self.fold
    }

    pub fn omega_star(&self) -> f64 {
        self.fold.omega_star
    }

    /// `u(r) = γ U(0)`.
    pub fn u(&self, ratio: f64) -> f64 {
        reduced_u(&self.zone, ratio)
    }

    /// `ω(r) = r u(r)` along the critical curve.
    pub fn omega_of(&self, ratio: f64) -> f64 {
        ratio * self.u(ratio)
    }

    /// `U(0)` at arbitrary `(ω, γ)`.
    pub fn u0(&self, p: &DispersionParams) -> f64 {
        if p.gamma == 0.0 {
            return 0.0;
        }
        self.u(p.omega / p.gamma) / p.gamma
    }

    pub fn point(&self, ratio: f64) -> CriticalPoint {
        let u = self.u(ratio);
        CriticalPoint {
            ratio,
            omega: ratio * u,
            gamma: u,
            d: self.d,
            source: self.source,
        }
    }

    pub fn curve(&self, ratios: &[f64]) -> Result<Vec<CriticalPoint>> {
        use rayon::prelude::*;
        if let Some(bad) = ratios.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
            return Err(Error::InvalidParameter(format!("ratio {bad} must be positive")));
        }
        Ok(ratios.par_iter().map(|&r| self.point(r)).collect())
    }

    /// `ω(r)` on the scan grid.
    pub fn scan(&self) -> Vec<(f64, f64)> {
        self.range
            .ratios()
            .into_iter()
            .map(|r| (r, self.omega_of(r)))
            .collect()
    }

    fn locate_fold(&self) -> Result<Fold> {
        let scan = self.scan();
        // first interior local maximum; on even lattices the exact doubler
        // modes (s² = 0, c > 0) make ω(r) rise again at large r
        let imax = (1..scan.len() - 1)
            .find(|&i| scan[i].1 > scan[i - 1].1 && scan[i].1 >= scan[i + 1].1)
            .ok_or_else(|| {
                Error::NoSolution("r u(r) has no interior maximum on the scan range".into())
            })?;
        // golden-section search in log r
        let (mut a, mut b) = (scan[imax - 1].0.ln(), scan[imax + 1].0.ln());
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let f = |x: f64| self.omega_of(x.exp());
        let mut x1 = b - g * (b - a);
        let mut x2 = a + g * (b - a);
        let (mut f1, mut f2) = (f(x1), f(x2));
        while (b - a) > 1e-9 {
            if f1 > f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - g * (b - a);
                f1 = f(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + g * (b - a);
                f2 = f(x2);
            }
        }
        let ratio = (0.5 * (a + b)).exp();
        let u = self.u(ratio);
        let valley = (imax + 1..scan.len() - 1)
            .find(|&i| scan[i].1 < scan[i - 1].1 && scan[i].1 <= scan[i + 1].1)
            .map_or(self.range.r_max, |i| scan[i].0);
        Ok(Fold {
            ratio,
            omega_star: ratio * u,
            gamma: u,
            valley,
        })
    }

    /// The `γ` on `branch` with `U(0) = 1` at the given `ω`.
    pub fn solve_gamma(&self, omega: f64, branch: Branch) -> Result<CriticalPoint> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::InvalidParameter(format!("omega = {omega} must be positive")));
        }
        let star = self.fold.omega_star;
        if omega >= star {
            return Err(Error::NoSolution(format!(
                "omega = {omega} is at or beyond the threshold omega* = {star}"
            )));
        }
        let (lo, hi) = match branch {
            Branch::Upper => (self.range.r_min, self.fold.ratio),
            Branch::Lower => (self.fold.ratio, self.fold.valley),
        };
        let g = |r: f64| self.omega_of(r) - omega;
        let (glo, ghi) = (g(lo), g(hi));
        if glo.signum() == ghi.signum() {
            return Err(Error::NoSolution(format!(
                "omega = {omega} not attained on the {branch:?} branch within r in [{lo}, {hi}]"
            )));
        }
        let (mut a, mut b) = (lo.ln(), hi.ln());
        let sa = glo.signum();
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m == a || m == b {
                break;
            }
            if g(m.exp()).signum() == sa {
                a = m;
            } else {
                b = m;
            }
        }
        let ratio = (0.5 * (a + b)).exp();
        let gamma = omega / ratio;
        let point = CriticalPoint {
            ratio,
            omega,
            gamma,
            d: self.d,
            source: self.source,
        };
        let residual = self.u0(&point.params()) - 1.0;
        if residual.abs() > CRITICAL_TOL {
            return Err(Error::Numerical(format!(
                "critical point residual |U(0) - 1| = {:e}",
                residual.abs()
            )));
        }
        Ok(point)
    }

    /// Number of interior local maxima of `ω(r)` on the scan grid.
    pub fn interior_maxima(&self) -> usize {
        let scan = self.scan();
        scan.windows(3)
            .filter(|w| w[1].1 > w[0].1 && w[1].1 >= w[2].1)
            .count()
    }

    /// All `γ` solving `U(0) = 1` at `ω`, found independently of the fold by
    /// counting sign changes of `ω(r) - ω` on the scan grid.
    pub fn count_solutions(&self, omega: f64) -> usize {
        let scan = self.scan();
        scan.windows(2)
            .filter(|w| (w[0].1 - omega).signum() != (w[1].1 - omega).signum())
            .count()
    }
}

pub fn critical_curve(d: usize, ratios: &[f64], source: Source) -> Result<Vec<CriticalPoint>> {
    CriticalSolver::new(d, source)?.curve(ratios)
}

pub fn omega_star(d: usize, source: Source) -> Result<f64> {
    Ok(CriticalSolver::new(d, source)?.omega_star())
}

pub fn solve_gamma(d: usize, omega: f64, branch: Branch, source: Source) -> Result<f64> {
    Ok(CriticalSolver::new(d, source)?.solve_gamma(omega, branch)?.gamma)
}

/// Eigenvalue sector of `beta` the spin state lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BetaSector {
    Plus,
    Minus,
}

impl BetaSector {
    pub fn sign(self) -> f64 {
        match self {
            BetaSector::Plus => 1.0,
            BetaSector::Minus => -1.0,
        }
    }
}

/// The two eigenvalues of the search Hamiltonian closest to zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenSolution {
    pub e_plus: f64,
    pub e_minus: f64,
    pub beta_sector: BetaSector,
    pub residual: f64,
    pub gap: f64,
}

/// `G_b(E) = -b/(N E) + U(E) + b E V(E) - 1`.
pub fn eigencondition(table: &MomentumTable, p: &DispersionParams, b: BetaSector, energy: f64) -> Result<f64> {
    let s = table.sums(p, energy)?;
    let b = b.sign();
    let n = table.n_sites() as f64;
    Ok(-b / (n * energy) + s.u + b * energy * s.v - 1.0)
}

/// Root-find the scalar eigenvalue condition on `(0, gap)` and `(-gap, 0)`
/// by bisection between the pole at zero and the first resolvent pole.
pub fn eigencondition_roots(table: &MomentumTable, p: &DispersionParams, b: BetaSector) -> Result<EigenSolution> {
    let s0 = table.sums(p, 0.0)?;
    if (s0.u - 1.0).abs() > CRITICAL_INPUT_TOL {
        return Err(Error::NoSolution(format!(
            "criticality violated: U(0) - 1 = {:e}",
            s0.u - 1.0
        )));
    }
    let n = table.n_sites() as f64;
    let gap = s0.gap;
    let guess = 1.0 / (n * s0.v).sqrt();
    let near = (guess * 1e-6).min(gap * 1e-6);
    let far = gap * (1.0 - 4e-9);
    let g = |e: f64| eigencondition(table, p, b, e);
    let sign = b.sign();
    let plus = bisect_root(&g, near, far, -sign)?;
    let minus = bisect_root(&g, -near, -far, sign)?;
    Ok(EigenSolution {
        e_plus: plus.0,
        e_minus: minus.0,
        beta_sector: b,
        residual: plus.1.max(minus.1),
        gap,
    })
}

// Bisection between `inner` (expected sign `inner_sign`) and `outer`
// (expected opposite sign). Returns the root and |G| there.
fn bisect_root<F>(g: &F, inner: f64, outer: f64, inner_sign: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let gi = g(inner)?;
    let go = g(outer)?;
    if gi.signum() != inner_sign || go.signum() != -inner_sign {
        return Err(Error::Bracket(format!(
            "G({inner:e}) = {gi:e}, G({outer:e}) = {go:e}"
        )));
    }
    let (mut a, mut b) = (inner, outer);
    let mut best = (inner, gi.abs());
    for _ in 0..400 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        let gm = g(m)?;
        if gm.abs() < best.1 {
            best = (m, gm.abs());
        }
        if gm == 0.0 {
            break;
        }
        if gm.signum() == inner_sign {
            a = m;
        } else {
            b = m;
        }
    }
    if best.1 > ROOT_TOL {
        return Err(Error::Numerical(format!(
            "eigenvalue condition residual {:e} above {ROOT_TOL:e}",
            best.1
        )));
    }
    Ok(best)
}
