//! Closed-form predictions at criticality: eigenvector weights on the
//! marked site, evolution time and success amplitude.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::critical::EigenSolution;
use crate::error::{Error, Result};
use crate::spectral::{DispersionParams, MomentumTable};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub e_plus: f64,
    pub e_minus: f64,
    /// `V(0)` at the experiment's lattice.
    pub v0: f64,
    /// Marked-site weight `R` of the positive-energy eigenstate.
    pub r: f64,
    /// Marked-site weight of the negative-energy eigenstate.
    pub r_minus: f64,
    /// `π / (2 |E_+|)`.
    pub t: f64,
    /// `sqrt(2R)`, the predicted overlap on `|η, w⟩` at time `t`.
    pub amplitude: f64,
    /// `t / amplitude`: cost after amplitude amplification (not simulated).
    pub boosted_time: f64,
}

impl Prediction {
    /// `E_+ sqrt(N V(0))`, which tends to one.
    pub fn eigenvalue_ratio(&self, n_sites: usize) -> f64 {
        self.e_plus * (n_sites as f64 * self.v0).sqrt()
    }

    /// `2 R V(0)`, which tends to one.
    pub fn weight_ratio(&self) -> f64 {
        2.0 * self.r * self.v0
    }

    /// `amplitude² V(0)`, which tends to one.
    pub fn amplitude_ratio(&self) -> f64 {
        self.amplitude * self.amplitude * self.v0
    }
}

/// `R^{-1} = b/(N E²) + U'(E) + b V(E) + b E V'(E)`, times `b` so that it
/// equals the positive normalization `⟨φ|β F'(E) β|φ⟩`.
pub fn inverse_weight(table: &MomentumTable, p: &DispersionParams, energy: f64, b: f64) -> Result<f64> {
    let s = table.sums(p, energy)?;
    let n = table.n_sites() as f64;
    let g_prime = b / (n * energy * energy) + s.du + b * s.v + b * energy * s.dv;
    let inv = b * g_prime;
    if !(inv > 0.0) {
        return Err(Error::Numerical(format!(
            "non-positive normalization derivative {inv:e} at E = {energy:e}"
        )));
    }
    Ok(inv)
}

pub fn predict(table: &MomentumTable, p: &DispersionParams, roots: &EigenSolution) -> Result<Prediction> {
    let b = roots.beta_sector.sign();
    let r = 1.0 / inverse_weight(table, p, roots.e_plus, b)?;
    let r_minus = 1.0 / inverse_weight(table, p, roots.e_minus, b)?;
    let v0 = table.v0(p)?;
    let t = PI / (2.0 * roots.e_plus.abs());
    let amplitude = (2.0 * r).sqrt();
    Ok(Prediction {
        e_plus: roots.e_plus,
        e_minus: roots.e_minus,
        v0,
        r,
        r_minus,
        t,
        amplitude,
        boosted_time: t / amplitude,
    })
}

/// `⟨η, s|ψ_±⟩ = -sqrt(R_±) / (E_± sqrt(N))` with the spin choice `|φ_±⟩ = β|η⟩`.
pub fn initial_state_overlap(table: &MomentumTable, p: &DispersionParams, roots: &EigenSolution) -> Result<(f64, f64)> {
    let b = roots.beta_sector.sign();
    let sqrt_n = (table.n_sites() as f64).sqrt();
    let overlap = |e: f64| -> Result<f64> {
        let r = 1.0 / inverse_weight(table, p, e, b)?;
        Ok(-r.sqrt() / (e * sqrt_n))
    };
    Ok((overlap(roots.e_plus)?, overlap(roots.e_minus)?))
}
