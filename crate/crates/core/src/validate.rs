//! Self-check suites run by `dirac-search validate`.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::clifford::{build_full_rep, build_reduced_rep, verify_algebra, verify_algebra_on, verify_algebra_strict, RepKind};
use crate::critical::{eigencondition, BetaSector, CriticalSolver};
use crate::error::{Error, Result};
use crate::experiment::{run_prediction, scaling_study, search_params, ExperimentConfig, Observable};
use crate::hamiltonian::{assemble_dense, hermiticity_violation, Operator, SearchParams, SignConvention, StateVector};
use crate::lattice::{momentum_grid, LatticeConfig, MAX_DIM};
use crate::oracle::compare_dense;
use crate::spectral::MomentumTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Fast,
    Full,
}

impl std::str::FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(Level::Fast),
            "full" => Ok(Level::Full),
            other => Err(Error::InvalidParameter(format!("unknown level '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidateOptions {
    pub level: Level,
    /// Replaces every upper-bound tolerance.
    pub tol: Option<f64>,
    /// Sign of the `β L` term in the Hamiltonians checked densely.
    pub sign: SignConvention,
}

impl ValidateOptions {
    pub fn new(level: Level) -> Self {
        Self {
            level,
            tol: None,
            sign: SignConvention::PaperF,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    /// Pass iff `observed <= required`.
    AtMost,
    /// Pass iff `observed > required`.
    Above,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub observed: f64,
    pub required: f64,
    pub bound: Bound,
    pub pass: bool,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.bound {
            Bound::AtMost => "<=",
            Bound::Above => ">",
        };
        write!(
            f,
            "{} {}: observed {:e}, required {} {:e}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.observed,
            op,
            self.required
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub options: ValidateOptions,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

struct Suite {
    tol: Option<f64>,
    checks: Vec<Check>,
}

impl Suite {
    fn at_most(&mut self, name: impl Into<String>, observed: f64, required: f64) {
        let required = self.tol.unwrap_or(required);
        self.checks.push(Check {
            name: name.into(),
            observed,
            required,
            bound: Bound::AtMost,
            pass: observed <= required,
        });
    }

    fn above(&mut self, name: impl Into<String>, observed: f64, required: f64) {
        self.checks.push(Check {
            name: name.into(),
            observed,
            required,
            bound: Bound::Above,
            pass: observed > required,
        });
    }

    fn result<T>(&mut self, name: &str, r: Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.checks.push(Check {
                    name: format!("{name} ({e})"),
                    observed: f64::NAN,
                    required: f64::NAN,
                    bound: Bound::AtMost,
                    pass: false,
                });
                None
            }
        }
    }
}

pub fn run(opts: &ValidateOptions) -> Report {
    let mut s = Suite {
        tol: opts.tol,
        checks: Vec::new(),
    };
    fast(&mut s, opts);
    if opts.level == Level::Full {
        full(&mut s, opts);
    }
    Report {
        options: *opts,
        checks: s.checks,
    }
}

fn fast(s: &mut Suite, opts: &ValidateOptions) {
    for d in 1..=MAX_DIM {
        let full = build_full_rep(d).expect("valid dimension");
        s.at_most(format!("algebra full d={d}"), verify_algebra(&full).max_violation, 1e-14);
        let red = build_reduced_rep(d).expect("valid dimension");
        s.at_most(
            format!("algebra reduced on eta d={d}"),
            verify_algebra_on(&red, red.eta()).max_violation,
            1e-14,
        );
        if d >= 2 {
            s.above(
                format!("algebra reduced off eta d={d}"),
                verify_algebra_strict(&red).max_violation,
                0.0,
            );
        }
    }
    for (d, side) in [(1, 5), (2, 4), (2, 5), (3, 4)] {
        let cfg = LatticeConfig::new(d, side).expect("valid lattice");
        let mut ms: Vec<Vec<i64>> = momentum_grid(&cfg).into_iter().map(|m| m.m).collect();
        ms.sort();
        ms.dedup();
        s.at_most(
            format!("momentum grid d={d} side={side} missing"),
            (cfg.n_sites() as f64 - ms.len() as f64).abs(),
            0.0,
        );
    }
    for (d, side, kind) in [(2, 4, RepKind::Full), (3, 3, RepKind::Reduced), (1, 6, RepKind::Reduced)] {
        let cfg = LatticeConfig::new(d, side).expect("valid lattice");
        let rep = crate::clifford::build_rep(kind, d).expect("valid dimension");
        let Some(p) = s.result("search params", SearchParams::new(cfg, rep, 0.7, 0.3, 1)) else {
            continue;
        };
        let p = p.with_sign(opts.sign);
        let Some(h) = s.result("dense assembly", assemble_dense(&p)) else {
            continue;
        };
        s.at_most(format!("hermiticity d={d} side={side} {kind}"), hermiticity_violation(&h), 1e-13);
        // matrix-free against dense on a deterministic vector
        let n = p.dim();
        let v: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new((1.3 * i as f64).sin(), (0.7 * i as f64).cos()))
            .collect();
        let hv = p.apply(&StateVector::from_amplitudes(v.clone(), p.rep().dim()).expect("sized"));
        let mut worst = 0.0f64;
        for r in 0..n {
            let dense: Complex64 = (0..n).map(|c| h[(r, c)] * v[c]).sum();
            worst = worst.max((dense - hv.amplitudes()[r]).norm());
        }
        s.at_most(format!("matrix-free vs dense d={d} side={side} {kind}"), worst, 1e-12);
    }
    for (d, side) in [(2, 12), (3, 10)] {
        let cfg = ExperimentConfig::new(d, side);
        let Some(rec) = s.result("prediction", run_prediction(&cfg)) else {
            continue;
        };
        let lattice = LatticeConfig::new(d, side).expect("valid lattice");
        let table = MomentumTable::new(&lattice);
        let p = rec.critical.params();
        let u0 = table.u0(&p).unwrap_or(f64::NAN);
        s.at_most(format!("criticality residual d={d} side={side}"), (u0 - 1.0).abs(), 1e-10);
        for (label, e) in [("E+", rec.roots.e_plus), ("E-", rec.roots.e_minus)] {
            let g = eigencondition(&table, &p, BetaSector::Plus, e).unwrap_or(f64::NAN);
            s.at_most(format!("root residual {label} d={d} side={side}"), g.abs(), 1e-12);
        }
        if let Some(solver) = s.result("critical solver", CriticalSolver::from_table(table)) {
            s.at_most(
                format!("single fold d={d} side={side}"),
                (solver.interior_maxima() as f64 - 1.0).abs(),
                0.0,
            );
        }
    }
}

fn full(s: &mut Suite, opts: &ValidateOptions) {
    for (d, side, kind) in [(2, 16, RepKind::Full), (3, 8, RepKind::Reduced)] {
        let cfg = ExperimentConfig::new(d, side).with_rep(kind);
        let Some(rec) = s.result("prediction", run_prediction(&cfg)) else {
            continue;
        };
        let Some(p) = s.result("search params", search_params(&cfg, &rec)) else {
            continue;
        };
        let p = p.with_sign(opts.sign);
        let Some(c) = s.result("dense oracle", compare_dense(&p, &rec.roots, &rec.prediction)) else {
            continue;
        };
        s.at_most(
            format!("dense vs scalar eigenvalues d={d} side={side} {kind}"),
            c.max_eigenvalue_error(),
            1e-6,
        );
        s.at_most(
            format!("dense vs predicted site weight d={d} side={side} {kind}"),
            c.max_overlap_error(),
            1e-2,
        );
    }
    let base = ExperimentConfig::new(3, 6);
    if let Some(study) = s.result("scaling study", scaling_study(&base, &[6, 8, 10, 12, 14], Observable::TStar)) {
        s.at_most("t_star exponent d=3 |slope - 0.5|", (study.exponent() - 0.5).abs(), 0.1);
    }
}
