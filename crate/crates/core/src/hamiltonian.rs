//! Position-space operators on `(site, spin)` amplitudes.
//!
//! Amplitudes are stored site-major: the spin components of site `x` occupy
//! `x * dim .. (x + 1) * dim`. The lattice momentum is
//! `P_j|x⟩ = (i/2)(|x + e_j⟩ - |x - e_j⟩)`, and `L` is the Laplacian with
//! `+1` between neighbors and `-2d` on the diagonal.

use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clifford::{SpinMatrix, SpinRep};
use crate::error::{Error, Result};
use crate::lattice::{LatticeConfig, NeighborTable};

/// Default cap on the dimension of densely assembled operators.
pub const DEFAULT_DENSE_CAP: usize = 5000;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Sign of the `β L` term.
///
/// `PaperF` builds `H0 = ω Σ α_j P_j - γ β L`, whose momentum block is
/// `ω Σ sin(k_j) α_j + γ c(k) β`; this sign makes `U(E) > 0` and the
/// criticality condition attainable. `Literal` keeps `+γ β L` and exists to
/// show that the scalar eigenvalue condition then no longer matches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignConvention {
    #[default]
    PaperF,
    Literal,
}

impl SignConvention {
    /// Coefficient multiplying `γ β L`.
    fn laplacian_sign(self) -> f64 {
        match self {
            SignConvention::PaperF => -1.0,
            SignConvention::Literal => 1.0,
        }
    }
}

/// Nonzero entries of a small spin matrix.
#[derive(Debug, Clone)]
struct SparseSpin(Vec<(usize, usize, Complex64)>);

impl SparseSpin {
    fn from_dense(m: &SpinMatrix) -> Self {
        let mut out = Vec::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let v = m[(r, c)];
                if v != ZERO {
                    out.push((r, c, v));
                }
            }
        }
        SparseSpin(out)
    }

    #[inline]
    fn add_apply(&self, scale: Complex64, v: &[Complex64], out: &mut [Complex64]) {
        for &(r, c, a) in &self.0 {
            out[r] += scale * a * v[c];
        }
    }
}

/// A linear operator on state vectors together with what a search run needs
/// to know about it.
pub trait Operator: Sync {
    /// Length of the state vectors acted on.
    fn len(&self) -> usize;

    /// `dst = H src`.
    fn apply_into(&self, src: &[Complex64], dst: &mut [Complex64]);

    /// Upper bound on the spectral radius.
    fn norm_bound(&self) -> f64;

    fn lattice(&self) -> &LatticeConfig;

    fn spin_dim(&self) -> usize;

    fn marked(&self) -> usize;

    /// Spin state of the initial and target states.
    fn reference_spin(&self) -> Vec<Complex64>;

    /// Dense matrix of the operator, refused above `cap` rows.
    fn assemble(&self, cap: usize) -> Result<Mat<Complex64>>;

    fn apply(&self, state: &StateVector) -> StateVector {
        let mut out = vec![ZERO; self.len()];
        self.apply_into(state.amplitudes(), &mut out);
        StateVector {
            amps: out,
            spin_dim: state.spin_dim,
        }
    }
}

/// Everything that defines the search Hamiltonian `H = H0 - β|w⟩⟨w|`.
#[derive(Debug, Clone)]
pub struct SearchParams {
    cfg: LatticeConfig,
    rep: SpinRep,
    omega: f64,
    gamma: f64,
    w: usize,
    sign: SignConvention,
    oracle: bool,
    table: NeighborTable,
    alphas: Vec<SparseSpin>,
    beta: SparseSpin,
}

impl SearchParams {
    pub fn new(cfg: LatticeConfig, rep: SpinRep, omega: f64, gamma: f64, w: usize) -> Result<Self> {
        if rep.d() != cfg.dim() {
            return Err(Error::Mismatch {
                expected: cfg.dim(),
                got: rep.d(),
            });
        }
        if w >= cfg.n_sites() {
            return Err(Error::SiteIndex {
                index: w,
                n_sites: cfg.n_sites(),
            });
        }
        for (name, v) in [("omega", omega), ("gamma", gamma)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be finite and >= 0")));
            }
        }
        let alphas = rep.alphas().iter().map(SparseSpin::from_dense).collect();
        let beta = SparseSpin::from_dense(rep.beta());
        Ok(Self {
            table: cfg.neighbor_table(),
            cfg,
            rep,
            omega,
            gamma,
            w,
            sign: SignConvention::PaperF,
            oracle: true,
            alphas,
            beta,
        })
    }

    pub fn with_sign(mut self, sign: SignConvention) -> Self {
        self.sign = sign;
        self
    }

    /// Drop the `-β|w⟩⟨w|` term, leaving `H0`.
    pub fn with_oracle(mut self, oracle: bool) -> Self {
        self.oracle = oracle;
        self
    }

    pub fn with_marked(mut self, w: usize) -> Result<Self> {
        if w >= self.cfg.n_sites() {
            return Err(Error::SiteIndex {
                index: w,
                n_sites: self.cfg.n_sites(),
            });
        }
        self.w = w;
        Ok(self)
    }

    pub fn cfg(&self) -> &LatticeConfig {
        &self.cfg
    }

    pub fn rep(&self) -> &SpinRep {
        &self.rep
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn sign(&self) -> SignConvention {
        self.sign
    }

    pub fn oracle(&self) -> bool {
        self.oracle
    }

    pub fn dim(&self) -> usize {
        self.cfg.n_sites() * self.rep.dim()
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n != self.dim() {
            return Err(Error::Mismatch {
                expected: self.dim(),
                got: n,
            });
        }
        Ok(())
    }
}

impl Operator for SearchParams {
    fn len(&self) -> usize {
        self.dim()
    }

    fn apply_into(&self, src: &[Complex64], dst: &mut [Complex64]) {
        let ds = self.rep.dim();
        let d = self.cfg.dim();
        let half_i = Complex64::new(0.0, 0.5 * self.omega);
        let lap_scale = Complex64::new(self.sign.laplacian_sign() * self.gamma, 0.0);
        let diag = -2.0 * d as f64;
        let oracle = self.oracle.then_some(self.w);
        dst.par_chunks_mut(ds).enumerate().for_each(|(x, out)| {
            out.fill(ZERO);
            let mut diff = [ZERO; 8];
            let mut lap = [ZERO; 8];
            let here = &src[x * ds..(x + 1) * ds];
            for s in 0..ds {
                lap[s] = here[s] * diag;
            }
            for (axis, &[plus, minus]) in self.table.site(x).iter().enumerate() {
                let vp = &src[plus * ds..(plus + 1) * ds];
                let vm = &src[minus * ds..(minus + 1) * ds];
                for s in 0..ds {
                    diff[s] = vm[s] - vp[s];
                    lap[s] += vp[s] + vm[s];
                }
                self.alphas[axis].add_apply(half_i, &diff[..ds], out);
            }
            self.beta.add_apply(lap_scale, &lap[..ds], out);
            if oracle == Some(x) {
                self.beta.add_apply(Complex64::new(-1.0, 0.0), here, out);
            }
        });
    }

    fn norm_bound(&self) -> f64 {
        let d = self.cfg.dim() as f64;
        self.omega * d + 4.0 * self.gamma * d + if self.oracle { 1.0 } else { 0.0 }
    }

    fn lattice(&self) -> &LatticeConfig {
        &self.cfg
    }

    fn spin_dim(&self) -> usize {
        self.rep.dim()
    }

    fn marked(&self) -> usize {
        self.w
    }

    fn reference_spin(&self) -> Vec<Complex64> {
        self.rep.eta().to_vec()
    }

    fn assemble(&self, cap: usize) -> Result<Mat<Complex64>> {
        assemble_dense_with_cap(self, cap)
    }
}

/// The spinless walk `-γ L - |w⟩⟨w|`.
#[derive(Debug, Clone)]
pub struct SpinlessBaseline {
    cfg: LatticeConfig,
    gamma: f64,
    w: usize,
    oracle: bool,
    table: NeighborTable,
}

impl SpinlessBaseline {
    pub fn new(cfg: LatticeConfig, gamma: f64, w: usize) -> Result<Self> {
        if w >= cfg.n_sites() {
            return Err(Error::SiteIndex {
                index: w,
                n_sites: cfg.n_sites(),
            });
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma = {gamma} must be finite and >= 0")));
        }
        Ok(Self {
            table: cfg.neighbor_table(),
            cfg,
            gamma,
            w,
            oracle: true,
        })
    }

    pub fn with_oracle(mut self, oracle: bool) -> Self {
        self.oracle = oracle;
        self
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

impl Operator for SpinlessBaseline {
    fn len(&self) -> usize {
        self.cfg.n_sites()
    }

    fn apply_into(&self, src: &[Complex64], dst: &mut [Complex64]) {
        let diag = 2.0 * self.cfg.dim() as f64 * self.gamma;
        dst.par_iter_mut().enumerate().for_each(|(x, out)| {
            let mut acc = src[x] * diag;
            for &[plus, minus] in self.table.site(x) {
                acc -= (src[plus] + src[minus]) * self.gamma;
            }
            if self.oracle && x == self.w {
                acc -= src[x];
            }
            *out = acc;
        });
    }

    fn norm_bound(&self) -> f64 {
        4.0 * self.gamma * self.cfg.dim() as f64 + if self.oracle { 1.0 } else { 0.0 }
    }

    fn lattice(&self) -> &LatticeConfig {
        &self.cfg
    }

    fn spin_dim(&self) -> usize {
        1
    }

    fn marked(&self) -> usize {
        self.w
    }

    fn reference_spin(&self) -> Vec<Complex64> {
        vec![Complex64::new(1.0, 0.0)]
    }

    fn assemble(&self, cap: usize) -> Result<Mat<Complex64>> {
        assemble_spinless_dense(self, cap)
    }
}

/// Complex amplitudes over `(site, spin)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex64>,
    spin_dim: usize,
}

impl StateVector {
    pub fn zeros(n_sites: usize, spin_dim: usize) -> Self {
        Self {
            amps: vec![ZERO; n_sites * spin_dim],
            spin_dim,
        }
    }

    pub fn from_amplitudes(amps: Vec<Complex64>, spin_dim: usize) -> Result<Self> {
        if spin_dim == 0 || amps.len() % spin_dim != 0 {
            return Err(Error::Mismatch {
                expected: spin_dim,
                got: amps.len(),
            });
        }
        Ok(Self { amps, spin_dim })
    }

    /// `|η, s⟩ = N^{-1/2} Σ_x |x⟩ ⊗ |η⟩`.
    pub fn uniform(cfg: &LatticeConfig, eta: &[Complex64]) -> Self {
        let scale = 1.0 / (cfg.n_sites() as f64).sqrt();
        let amps = (0..cfg.n_sites())
            .flat_map(|_| eta.iter().map(move |e| e * scale))
            .collect();
        Self {
            amps,
            spin_dim: eta.len(),
        }
    }

    /// `|x⟩ ⊗ |spin⟩`.
    pub fn site(cfg: &LatticeConfig, x: usize, spin: &[Complex64]) -> Result<Self> {
        if x >= cfg.n_sites() {
            return Err(Error::SiteIndex {
                index: x,
                n_sites: cfg.n_sites(),
            });
        }
        let mut out = Self::zeros(cfg.n_sites(), spin.len());
        out.site_mut(x).copy_from_slice(spin);
        Ok(out)
    }

    /// `N^{-1/2} Σ_x e^{i k·x} |x⟩ ⊗ |spin⟩` for grid indices `m`.
    pub fn plane_wave(cfg: &LatticeConfig, m: &[i64], spin: &[Complex64]) -> Result<Self> {
        if m.len() != cfg.dim() {
            return Err(Error::Mismatch {
                expected: cfg.dim(),
                got: m.len(),
            });
        }
        let side = cfg.side() as i64;
        let scale = 1.0 / (cfg.n_sites() as f64).sqrt();
        let mut amps = Vec::with_capacity(cfg.n_sites() * spin.len());
        for x in 0..cfg.n_sites() {
            let phase: i64 = cfg
                .coords(x)
                .iter()
                .zip(m)
                .map(|(&xi, &mi)| (xi as i64 * mi).rem_euclid(side))
                .sum::<i64>()
                .rem_euclid(side);
            let z = Complex64::from_polar(scale, 2.0 * PI * phase as f64 / side as f64);
            amps.extend(spin.iter().map(|s| s * z));
        }
        Ok(Self {
            amps,
            spin_dim: spin.len(),
        })
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn spin_dim(&self) -> usize {
        self.spin_dim
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn n_sites(&self) -> usize {
        self.amps.len() / self.spin_dim
    }

    pub fn site_amplitudes(&self, x: usize) -> &[Complex64] {
        &self.amps[x * self.spin_dim..(x + 1) * self.spin_dim]
    }

    fn site_mut(&mut self, x: usize) -> &mut [Complex64] {
        &mut self.amps[x * self.spin_dim..(x + 1) * self.spin_dim]
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if !(n > 0.0) {
            return Err(Error::Numerical("cannot normalize a zero state".into()));
        }
        self.amps.iter_mut().for_each(|a| *a /= n);
        Ok(())
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Probability of finding the walker on site `x`, summed over spin.
    pub fn site_probability(&self, x: usize) -> f64 {
        self.site_amplitudes(x).iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨x, spin|self⟩`.
    pub fn spin_overlap(&self, x: usize, spin: &[Complex64]) -> Complex64 {
        self.site_amplitudes(x)
            .iter()
            .zip(spin)
            .map(|(a, s)| s.conj() * a)
            .sum()
    }

    /// `‖self - other‖`.
    pub fn distance(&self, other: &StateVector) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// The state relabeled by the lattice translation `x -> x + shift`.
    pub fn translated(&self, cfg: &LatticeConfig, shift: &[i64]) -> StateVector {
        let mut out = StateVector::zeros(self.n_sites(), self.spin_dim);
        for x in 0..self.n_sites() {
            let y = cfg.translate(x, shift);
            out.site_mut(y).copy_from_slice(self.site_amplitudes(x));
        }
        out
    }
}

/// `P_j` applied to a state.
pub fn apply_p(cfg: &LatticeConfig, axis: usize, state: &StateVector) -> Result<StateVector> {
    if axis >= cfg.dim() {
        return Err(Error::Axis { axis, dim: cfg.dim() });
    }
    check_sites(cfg, state)?;
    let ds = state.spin_dim;
    let mut out = StateVector::zeros(cfg.n_sites(), ds);
    for x in 0..cfg.n_sites() {
        let nb = cfg.neighbors(x)?[axis];
        for s in 0..ds {
            out.amps[x * ds + s] =
                Complex64::new(0.0, 0.5) * (state.amps[nb.minus * ds + s] - state.amps[nb.plus * ds + s]);
        }
    }
    Ok(out)
}

/// `L` applied to a state.
pub fn apply_l(cfg: &LatticeConfig, state: &StateVector) -> Result<StateVector> {
    check_sites(cfg, state)?;
    let ds = state.spin_dim;
    let diag = -2.0 * cfg.dim() as f64;
    let mut out = StateVector::zeros(cfg.n_sites(), ds);
    for x in 0..cfg.n_sites() {
        let nbs = cfg.neighbors(x)?;
        for s in 0..ds {
            let mut acc = state.amps[x * ds + s] * diag;
            for nb in &nbs {
                acc += state.amps[nb.plus * ds + s] + state.amps[nb.minus * ds + s];
            }
            out.amps[x * ds + s] = acc;
        }
    }
    Ok(out)
}

fn check_sites(cfg: &LatticeConfig, state: &StateVector) -> Result<()> {
    if state.n_sites() != cfg.n_sites() || state.len() % state.spin_dim != 0 {
        return Err(Error::Mismatch {
            expected: cfg.n_sites(),
            got: state.n_sites(),
        });
    }
    Ok(())
}

/// `H0 ψ` (the oracle term is skipped regardless of `params`).
pub fn apply_h0(params: &SearchParams, state: &StateVector) -> Result<StateVector> {
    params.check_len(state.len())?;
    let free = params.clone().with_oracle(false);
    Ok(free.apply(state))
}

/// `H ψ`, including the oracle term when enabled.
pub fn apply_h(params: &SearchParams, state: &StateVector) -> Result<StateVector> {
    params.check_len(state.len())?;
    Ok(params.apply(state))
}

// Dense single-particle stencils built from coordinates rather than the
// neighbor table.
fn dense_shift_pairs(cfg: &LatticeConfig) -> Vec<(usize, usize, usize)> {
    // (axis, y, y + e_axis)
    let mut out = Vec::with_capacity(cfg.n_sites() * cfg.dim());
    for y in 0..cfg.n_sites() {
        let coords: Vec<i64> = cfg.coords(y).iter().map(|&c| c as i64).collect();
        for axis in 0..cfg.dim() {
            let mut up = coords.clone();
            up[axis] += 1;
            out.push((axis, y, cfg.index(&up)));
        }
    }
    out
}

fn check_cap(dim: usize, cap: usize) -> Result<()> {
    if dim > cap {
        return Err(Error::DenseCap { dim, cap });
    }
    Ok(())
}

/// Dense `H` with the default cap.
pub fn assemble_dense(params: &SearchParams) -> Result<Mat<Complex64>> {
    assemble_dense_with_cap(params, DEFAULT_DENSE_CAP)
}

/// Dense `H = ω Σ_j P_j ⊗ α_j ∓ γ L ⊗ β - |w⟩⟨w| ⊗ β`.
pub fn assemble_dense_with_cap(params: &SearchParams, cap: usize) -> Result<Mat<Complex64>> {
    let cfg = params.cfg();
    let rep = params.rep();
    let ds = rep.dim();
    let n = cfg.n_sites() * ds;
    check_cap(n, cap)?;
    let mut h = Mat::<Complex64>::zeros(n, n);
    let mut add_block = |x: usize, y: usize, scale: Complex64, m: &SpinMatrix| {
        for a in 0..ds {
            for b in 0..ds {
                h[(x * ds + a, y * ds + b)] += scale * m[(a, b)];
            }
        }
    };
    let hop = Complex64::new(0.0, 0.5 * params.omega());
    let lap = Complex64::new(params.sign().laplacian_sign() * params.gamma(), 0.0);
    for (axis, y, up) in dense_shift_pairs(cfg) {
        // P_j|y⟩ = (i/2)|y + e⟩ - (i/2)|y - e⟩; the second half is the first
        // half's adjoint, filled from the pair (y - e, y).
        add_block(up, y, hop, rep.alpha(axis));
        add_block(y, up, -hop, rep.alpha(axis));
        add_block(up, y, lap, rep.beta());
        add_block(y, up, lap, rep.beta());
    }
    let diag = lap * (-2.0 * cfg.dim() as f64);
    for x in 0..cfg.n_sites() {
        add_block(x, x, diag, rep.beta());
    }
    if params.oracle() {
        let w = params.w();
        add_block(w, w, Complex64::new(-1.0, 0.0), rep.beta());
    }
    Ok(h)
}

/// Dense spinless baseline `-γ L - |w⟩⟨w|`.
pub fn assemble_spinless_dense(op: &SpinlessBaseline, cap: usize) -> Result<Mat<Complex64>> {
    let cfg = &op.cfg;
    let n = cfg.n_sites();
    check_cap(n, cap)?;
    let g = op.gamma;
    let mut h = Mat::<Complex64>::zeros(n, n);
    for (_, y, up) in dense_shift_pairs(cfg) {
        h[(up, y)] -= Complex64::new(g, 0.0);
        h[(y, up)] -= Complex64::new(g, 0.0);
    }
    for x in 0..n {
        h[(x, x)] += Complex64::new(2.0 * cfg.dim() as f64 * g, 0.0);
    }
    if op.oracle {
        h[(op.w, op.w)] -= Complex64::new(1.0, 0.0);
    }
    Ok(h)
}

/// `max |H - H†|` entrywise.
pub fn hermiticity_violation(h: &Mat<Complex64>) -> f64 {
    let n = h.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Critical coupling of the spinless walk, `⟨w|(-L)^+|w⟩`, by conjugate
/// gradients on `(-L) x = |w⟩ - |s⟩⟨s|w⟩` in position space.
pub fn spinless_critical_gamma(cfg: &LatticeConfig, w: usize) -> Result<f64> {
    let n = cfg.n_sites();
    if w >= n {
        return Err(Error::SiteIndex { index: w, n_sites: n });
    }
    let table = cfg.neighbor_table();
    let diag = 2.0 * cfg.dim() as f64;
    let minus_l = |v: &[f64], out: &mut [f64]| {
        out.par_iter_mut().enumerate().for_each(|(x, o)| {
            let mut acc = diag * v[x];
            for &[p, m] in table.site(x) {
                acc -= v[p] + v[m];
            }
            *o = acc;
        });
    };
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut b = vec![-1.0 / n as f64; n];
    b[w] += 1.0;
    let mut x = vec![0.0; n];
    let mut r = b.clone();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot(&r, &r);
    let target = 1e-28 * dot(&b, &b);
    for _ in 0..(20 * n).max(1000) {
        if rr <= target {
            return Ok(x[w] - x.iter().sum::<f64>() / n as f64);
        }
        minus_l(&p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    Err(Error::Numerical("conjugate gradients did not converge".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::{build_full_rep, build_reduced_rep};
    use crate::lattice::momentum_grid;
    use crate::spectral::dispersion;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn basis(dim: usize, i: usize) -> Vec<Complex64> {
        (0..dim).map(|j| c(if i == j { 1.0 } else { 0.0 })).collect()
    }

    fn max_diff(a: &StateVector, b: &StateVector) -> f64 {
        a.amplitudes()
            .iter()
            .zip(b.amplitudes())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn momentum_eigenvalues() {
        let cfg = LatticeConfig::new(2, 4).unwrap();
        let spin = [c(1.0)];
        // k = (π/2, 0)
        let pw = StateVector::plane_wave(&cfg, &[1, 0], &spin).unwrap();
        let p = apply_p(&cfg, 0, &pw).unwrap();
        assert!(max_diff(&p, &pw) < 1e-14);
        let s = StateVector::uniform(&cfg, &spin);
        for axis in 0..2 {
            assert!(apply_p(&cfg, axis, &s).unwrap().norm() < 1e-15);
        }
        assert!(apply_l(&cfg, &s).unwrap().norm() < 1e-14);
        let corner = StateVector::plane_wave(&cfg, &[2, 2], &spin).unwrap();
        let mut expect = corner.clone();
        expect.amplitudes_mut().iter_mut().for_each(|a| *a *= -8.0);
        assert!(max_diff(&apply_l(&cfg, &corner).unwrap(), &expect) < 1e-13);
    }

    #[test]
    fn momentum_vanishes_at_side_two() {
        let cfg = LatticeConfig::new(2, 2).unwrap();
        let v = StateVector::from_amplitudes((0..4).map(|i| c(i as f64 + 1.0)).collect(), 1).unwrap();
        for axis in 0..2 {
            assert_eq!(apply_p(&cfg, axis, &v).unwrap().norm(), 0.0);
        }
    }

    #[test]
    fn laplacian_stencil() {
        let cfg = LatticeConfig::new(1, 4).unwrap();
        let v = StateVector::site(&cfg, 1, &[c(1.0)]).unwrap();
        let l = apply_l(&cfg, &v).unwrap();
        let want = [1.0, -2.0, 1.0, 0.0];
        for (a, w) in l.amplitudes().iter().zip(want) {
            assert_eq!(*a, c(w));
        }
    }

    #[test]
    fn free_square_is_energy_squared() {
        let (omega, gamma) = (0.7, 0.4);
        for d in 1..=3 {
            let cfg = LatticeConfig::new(d, 4).unwrap();
            let rep = build_full_rep(d).unwrap();
            let params = SearchParams::new(cfg, rep.clone(), omega, gamma, 0).unwrap();
            for mv in momentum_grid(&cfg) {
                let e = dispersion(&mv.k, omega, gamma);
                for s in 0..rep.dim() {
                    let pw = StateVector::plane_wave(&cfg, &mv.m, &basis(rep.dim(), s)).unwrap();
                    let h2 = apply_h0(&params, &apply_h0(&params, &pw).unwrap()).unwrap();
                    let mut want = pw.clone();
                    want.amplitudes_mut().iter_mut().for_each(|a| *a *= e * e);
                    assert!(h2.distance(&want) < 1e-10);
                }
            }
        }
    }

    #[test]
    fn reduced_square_on_eta_only() {
        let cfg = LatticeConfig::new(3, 4).unwrap();
        let rep = build_reduced_rep(3).unwrap();
        let params = SearchParams::new(cfg, rep.clone(), 0.6, 0.3, 0).unwrap();
        let m = [1, 0, -1];
        let k: Vec<f64> = m.iter().map(|&mj| 2.0 * PI * mj as f64 / 4.0).collect();
        let e = dispersion(&k, 0.6, 0.3);
        let square_residual = |spin: &[Complex64]| {
            let pw = StateVector::plane_wave(&cfg, &m, spin).unwrap();
            let h2 = apply_h0(&params, &apply_h0(&params, &pw).unwrap()).unwrap();
            let mut want = pw.clone();
            want.amplitudes_mut().iter_mut().for_each(|a| *a *= e * e);
            h2.distance(&want)
        };
        assert!(square_residual(rep.eta()) < 1e-10);
        assert!(square_residual(&basis(4, 1)) > 1e-2);
    }

    #[test]
    fn matrix_free_matches_dense() {
        for (d, side, full) in [(1, 4, false), (2, 4, true), (2, 5, false), (3, 3, true)] {
            let cfg = LatticeConfig::new(d, side).unwrap();
            let rep = if full { build_full_rep(d) } else { build_reduced_rep(d) }.unwrap();
            let ds = rep.dim();
            for sign in [SignConvention::PaperF, SignConvention::Literal] {
                let params = SearchParams::new(cfg, rep.clone(), 0.8, 0.3, 2).unwrap().with_sign(sign);
                let h = assemble_dense(&params).unwrap();
                assert!(hermiticity_violation(&h) <= 1e-13);
                for col in 0..params.dim() {
                    let mut e = StateVector::zeros(cfg.n_sites(), ds);
                    e.amplitudes_mut()[col] = c(1.0);
                    let out = apply_h(&params, &e).unwrap();
                    for row in 0..params.dim() {
                        assert!((out.amplitudes()[row] - h[(row, col)]).norm() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn dense_hand_built_d1() {
        // d = 1, side = 4, reduced rep (dim 2): α = σx, β = σz
        let cfg = LatticeConfig::new(1, 4).unwrap();
        let (omega, gamma) = (0.5, 0.25);
        let params = SearchParams::new(cfg, build_reduced_rep(1).unwrap(), omega, gamma, 0).unwrap();
        let h = assemble_dense(&params).unwrap();
        let mut want = Mat::<Complex64>::zeros(8, 8);
        let bz = [1.0, -1.0];
        for x in 0..4usize {
            let up = (x + 1) % 4;
            for a in 0..2 {
                // hop: (i ω/2) σx between x and x+1
                want[(up * 2 + a, x * 2 + (1 - a))] += Complex64::new(0.0, 0.5 * omega);
                want[(x * 2 + a, up * 2 + (1 - a))] += Complex64::new(0.0, -0.5 * omega);
                // -γ β L
                want[(up * 2 + a, x * 2 + a)] += c(-gamma * bz[a]);
                want[(x * 2 + a, up * 2 + a)] += c(-gamma * bz[a]);
                want[(x * 2 + a, x * 2 + a)] += c(2.0 * gamma * bz[a]);
            }
        }
        want[(0, 0)] -= c(1.0);
        want[(1, 1)] += c(1.0);
        for i in 0..8 {
            for j in 0..8 {
                assert!((h[(i, j)] - want[(i, j)]).norm() < 1e-15, "({i},{j})");
            }
        }
    }

    #[test]
    fn dense_cap_enforced() {
        let cfg = LatticeConfig::new(2, 8).unwrap();
        let params = SearchParams::new(cfg, build_full_rep(2).unwrap(), 1.0, 1.0, 0).unwrap();
        assert!(matches!(
            assemble_dense_with_cap(&params, 100),
            Err(Error::DenseCap { dim: 128, cap: 100 })
        ));
    }

    #[test]
    fn params_validation() {
        let cfg = LatticeConfig::new(2, 4).unwrap();
        assert!(SearchParams::new(cfg, build_full_rep(3).unwrap(), 1.0, 1.0, 0).is_err());
        assert!(SearchParams::new(cfg, build_full_rep(2).unwrap(), 1.0, 1.0, 16).is_err());
        assert!(SearchParams::new(cfg, build_full_rep(2).unwrap(), -1.0, 1.0, 0).is_err());
        let p = SearchParams::new(cfg, build_full_rep(2).unwrap(), 1.0, 1.0, 0).unwrap();
        assert!(apply_h(&p, &StateVector::zeros(16, 1)).is_err());
    }

    #[test]
    fn translation_covariance() {
        let cfg = LatticeConfig::new(2, 5).unwrap();
        let rep = build_reduced_rep(2).unwrap();
        let shift = [2, -1];
        let w = 3;
        let w2 = cfg.translate(w, &shift);
        let a = SearchParams::new(cfg, rep.clone(), 0.4, 0.2, w).unwrap();
        let b = SearchParams::new(cfg, rep, 0.4, 0.2, w2).unwrap();
        let amps = (0..a.dim()).map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let v = StateVector::from_amplitudes(amps, 3).unwrap();
        let lhs = apply_h(&b, &v.translated(&cfg, &shift)).unwrap();
        let rhs = apply_h(&a, &v).unwrap().translated(&cfg, &shift);
        assert!(lhs.distance(&rhs) < 1e-13);
    }

    #[test]
    fn spinless_stencil_and_uniform_state() {
        let cfg = LatticeConfig::new(1, 4).unwrap();
        let op = SpinlessBaseline::new(cfg, 0.5, 0).unwrap();
        let h = assemble_spinless_dense(&op, 100).unwrap();
        assert!((h[(0, 0)].re - (2.0 * 0.5 - 1.0)).abs() < 1e-15);
        for x in 0..4 {
            for y in 0..4 {
                let mf = op.apply(&StateVector::site(&cfg, y, &[c(1.0)]).unwrap());
                assert!((mf.amplitudes()[x] - h[(x, y)]).norm() < 1e-15);
            }
        }
        let free = op.clone().with_oracle(false);
        let s = StateVector::uniform(&cfg, &[c(1.0)]);
        assert!(free.apply(&s).norm() < 1e-15);
    }

    #[test]
    fn spinless_critical_gamma_matches_sum() {
        for (d, side) in [(1, 7), (2, 6), (3, 5)] {
            let cfg = LatticeConfig::new(d, side).unwrap();
            let sum: f64 = momentum_grid(&cfg)
                .iter()
                .filter(|m| !m.is_zero())
                .map(|m| 1.0 / crate::spectral::c(&m.k))
                .sum::<f64>()
                / cfg.n_sites() as f64;
            let cg = spinless_critical_gamma(&cfg, 2).unwrap();
            assert!((cg - sum).abs() < 1e-10 * sum, "{cg} {sum}");
        }
    }
}
