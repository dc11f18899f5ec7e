//! End-to-end runs: solve criticality at the run's own lattice, predict,
//! then evolve and compare.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clifford::{build_rep, RepKind};
use crate::critical::{eigencondition_roots, BetaSector, Branch, CriticalPoint, CriticalSolver, EigenSolution};
use crate::dynamics::{default_grid, run_search, EvolutionResult, EvolveOptions};
use crate::error::{Error, Result};
use crate::hamiltonian::SearchParams;
use crate::lattice::LatticeConfig;
use crate::predict::{predict, Prediction};
use crate::spectral::MomentumTable;

/// How `ω` is chosen for a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum OmegaChoice {
    /// `ω = fraction · ω*` of the run's own lattice.
    Fraction { fraction: f64, branch: Branch },
    Fixed { omega: f64, branch: Branch },
}

impl Default for OmegaChoice {
    fn default() -> Self {
        OmegaChoice::Fraction {
            fraction: 0.8,
            branch: Branch::Upper,
        }
    }
}

impl OmegaChoice {
    pub fn branch(&self) -> Branch {
        match *self {
            OmegaChoice::Fraction { branch, .. } | OmegaChoice::Fixed { branch, .. } => branch,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub d: usize,
    pub side: usize,
    pub rep: RepKind,
    pub omega: OmegaChoice,
    /// Time grid: `grid_points` samples over `[0, grid_span · T]`.
    pub grid_points: usize,
    pub grid_span: f64,
    pub evolve: EvolveOptions,
}

impl ExperimentConfig {
    pub fn new(d: usize, side: usize) -> Self {
        Self {
            d,
            side,
            rep: RepKind::Reduced,
            omega: OmegaChoice::default(),
            grid_points: 64,
            grid_span: 2.0,
            evolve: EvolveOptions::default(),
        }
    }

    pub fn with_rep(mut self, rep: RepKind) -> Self {
        self.rep = rep;
        self
    }

    pub fn with_omega(mut self, omega: OmegaChoice) -> Self {
        self.omega = omega;
        self
    }

    pub fn with_evolve(mut self, evolve: EvolveOptions) -> Self {
        self.evolve = evolve;
        self
    }

    pub fn grid(&self, t_pred: f64) -> Vec<f64> {
        if self.grid_points == 64 && self.grid_span == 2.0 {
            return default_grid(t_pred);
        }
        crate::dynamics::time_grid(self.grid_span * t_pred, self.grid_points)
    }
}

/// Criticality, eigenvalues and predictions at one lattice size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub d: usize,
    pub side: usize,
    pub n_sites: usize,
    pub omega_star: f64,
    pub critical: CriticalPoint,
    pub roots: EigenSolution,
    pub prediction: Prediction,
    /// `E_+ sqrt(N V(0))`.
    pub eigenvalue_ratio: f64,
    /// `2 R V(0)`.
    pub weight_ratio: f64,
}

/// A prediction together with the dynamics that checks it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    pub config: ExperimentConfig,
    pub record: PredictionRecord,
    pub evolution: EvolutionResult,
    /// `p_star / (2R)`.
    pub p_ratio: f64,
    /// `t_star / T`.
    pub t_ratio: f64,
}

pub fn run_prediction(cfg: &ExperimentConfig) -> Result<PredictionRecord> {
    let lattice = LatticeConfig::new(cfg.d, cfg.side)?;
    let table = MomentumTable::new(&lattice);
    let solver = CriticalSolver::from_table(table.clone())?;
    let omega = match cfg.omega {
        OmegaChoice::Fraction { fraction, .. } => {
            if !(fraction > 0.0 && fraction < 1.0) {
                return Err(Error::InvalidParameter(format!("omega fraction {fraction} must lie in (0, 1)")));
            }
            fraction * solver.omega_star()
        }
        OmegaChoice::Fixed { omega, .. } => omega,
    };
    let critical = solver.solve_gamma(omega, cfg.omega.branch())?;
    let p = critical.params();
    let roots = eigencondition_roots(&table, &p, BetaSector::Plus)?;
    let prediction = predict(&table, &p, &roots)?;
    Ok(PredictionRecord {
        d: cfg.d,
        side: cfg.side,
        n_sites: lattice.n_sites(),
        omega_star: solver.omega_star(),
        critical,
        roots,
        prediction,
        eigenvalue_ratio: prediction.eigenvalue_ratio(lattice.n_sites()),
        weight_ratio: prediction.weight_ratio(),
    })
}

/// Search parameters for a solved record, marked site 0.
pub fn search_params(cfg: &ExperimentConfig, record: &PredictionRecord) -> Result<SearchParams> {
    let lattice = LatticeConfig::new(cfg.d, cfg.side)?;
    let rep = build_rep(cfg.rep, cfg.d)?;
    SearchParams::new(lattice, rep, record.critical.omega, record.critical.gamma, 0)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let record = run_prediction(cfg)?;
    let params = search_params(cfg, &record)?;
    let times = cfg.grid(record.prediction.t);
    let evolution = run_search(&params, &times, &cfg.evolve)?;
    Ok(ExperimentOutcome {
        config: *cfg,
        p_ratio: evolution.p_star / (2.0 * record.prediction.r),
        t_ratio: evolution.t_star / record.prediction.t,
        record,
        evolution,
    })
}

/// Quantity fitted in a scaling study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    TStar,
    PStar,
    PredictedT,
    Amplitude,
    InverseAmplitudeSquared,
    BoostedTime,
    V0,
}

impl Observable {
    pub fn needs_dynamics(self) -> bool {
        matches!(self, Observable::TStar | Observable::PStar)
    }
}

impl std::str::FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "t_star" => Observable::TStar,
            "p_star" => Observable::PStar,
            "t" => Observable::PredictedT,
            "amplitude" => Observable::Amplitude,
            "inverse_amplitude_squared" => Observable::InverseAmplitudeSquared,
            "boosted_time" => Observable::BoostedTime,
            "v0" => Observable::V0,
            other => return Err(Error::InvalidParameter(format!("unknown observable '{other}'"))),
        })
    }
}

/// Least-squares line `y = slope x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn fit_linear(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return Err(Error::InvalidParameter(format!("need two or more (x, y) pairs, got {n}")));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("degenerate abscissae".into()));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LinearFit {
        slope,
        intercept: my - slope * mx,
        r2,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub side: usize,
    pub n_sites: usize,
    pub value: f64,
    pub record: PredictionRecord,
    pub evolution: Option<EvolutionResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingStudy {
    pub d: usize,
    pub rep: RepKind,
    pub observable: Observable,
    pub rows: Vec<ScalingRow>,
    /// Fit of `ln(value)` against `ln N`; the slope is the exponent.
    pub fit: LinearFit,
}

impl ScalingStudy {
    pub fn exponent(&self) -> f64 {
        self.fit.slope
    }

    /// Fit of `value` against `ln N`.
    pub fn semilog_fit(&self) -> Result<LinearFit> {
        let x: Vec<f64> = self.rows.iter().map(|r| (r.n_sites as f64).ln()).collect();
        let y: Vec<f64> = self.rows.iter().map(|r| r.value).collect();
        fit_linear(&x, &y)
    }
}

fn observe(obs: Observable, rec: &PredictionRecord, evo: Option<&EvolutionResult>) -> f64 {
    let p = &rec.prediction;
    match obs {
        Observable::TStar => evo.map_or(f64::NAN, |e| e.t_star),
        Observable::PStar => evo.map_or(f64::NAN, |e| e.p_star),
        Observable::PredictedT => p.t,
        Observable::Amplitude => p.amplitude,
        Observable::InverseAmplitudeSquared => 1.0 / (p.amplitude * p.amplitude),
        Observable::BoostedTime => p.boosted_time,
        Observable::V0 => p.v0,
    }
}

/// Re-solve, predict and (when the observable needs it) evolve at every
/// side, then fit the observable's power law in `N`.
pub fn scaling_study(base: &ExperimentConfig, sides: &[usize], observable: Observable) -> Result<ScalingStudy> {
    if sides.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "a scaling study needs at least 3 sides, got {}",
            sides.len()
        )));
    }
    let rows = sides
        .par_iter()
        .map(|&side| -> Result<ScalingRow> {
            let cfg = ExperimentConfig { side, ..*base };
            if observable.needs_dynamics() {
                let out = run_experiment(&cfg)?;
                Ok(ScalingRow {
                    side,
                    n_sites: out.record.n_sites,
                    value: observe(observable, &out.record, Some(&out.evolution)),
                    record: out.record,
                    evolution: Some(out.evolution),
                })
            } else {
                let record = run_prediction(&cfg)?;
                Ok(ScalingRow {
                    side,
                    n_sites: record.n_sites,
                    value: observe(observable, &record, None),
                    record,
                    evolution: None,
                })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let x: Vec<f64> = rows.iter().map(|r| (r.n_sites as f64).ln()).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.value.ln()).collect();
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!("{observable:?} is not positive at every size")));
    }
    let fit = fit_linear(&x, &y)?;
    Ok(ScalingStudy {
        d: base.d,
        rep: base.rep,
        observable,
        rows,
        fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_fit_exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.5 * v - 1.0).collect();
        let f = fit_linear(&x, &y).unwrap();
        assert!((f.slope - 2.5).abs() < 1e-14);
        assert!((f.intercept + 1.0).abs() < 1e-14);
        assert!((f.r2 - 1.0).abs() < 1e-14);
        assert!(fit_linear(&[1.0], &[1.0]).is_err());
        assert!(fit_linear(&[1.0, 1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn prediction_record_consistent() {
        let rec = run_prediction(&ExperimentConfig::new(3, 12)).unwrap();
        assert_eq!(rec.n_sites, 1728);
        assert!((rec.critical.omega - 0.8 * rec.omega_star).abs() < 1e-12);
        assert!((0.9..=1.1).contains(&rec.eigenvalue_ratio));
    }

    #[test]
    fn fraction_validated() {
        let cfg = ExperimentConfig::new(3, 6).with_omega(OmegaChoice::Fraction {
            fraction: 1.2,
            branch: Branch::Upper,
        });
        assert!(run_prediction(&cfg).is_err());
    }

    #[test]
    fn short_side_list_rejected() {
        assert!(scaling_study(&ExperimentConfig::new(3, 6), &[6, 8], Observable::PredictedT).is_err());
    }

    #[test]
    fn predicted_time_grows_like_sqrt_n() {
        let s = scaling_study(&ExperimentConfig::new(3, 6), &[10, 12, 14, 16, 20], Observable::PredictedT).unwrap();
        assert!((s.exponent() - 0.5).abs() < 0.05, "{}", s.exponent());
    }
}
