//! Time evolution `e^{-iHt}` and the marked-site success probability.
//!
//! Two propagators are provided: the exact one from a dense
//! eigendecomposition, and a matrix-free Chebyshev expansion
//! `e^{-iHt} = Σ_k c_k T_k(H/a)` with `c_0 = J_0(at)` and
//! `c_k = 2 (-i)^k J_k(at)`, where `a` bounds the spectral radius.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dense::HermitianEigen;
use crate::error::{Error, Result};
use crate::hamiltonian::{Operator, StateVector, DEFAULT_DENSE_CAP};

/// Accepted range of the propagation tolerance.
pub const TOL_RANGE: (f64, f64) = (1e-12, 1e-6);

/// Largest dimension `Method::Auto` propagates densely. An eigendecomposition
/// at the assembly cap costs far more than the Chebyshev series it replaces.
pub const DENSE_PROPAGATION_CAP: usize = 2048;

/// Largest `a dt` per Chebyshev step.
const MAX_STEP_ARG: f64 = 40.0;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Bessel functions `J_0(x) .. J_n(x)` by Miller's backward recurrence,
/// normalized with `J_0 + 2 Σ J_{2k} = 1`.
pub fn bessel_j_sequence(x: f64, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    let start = {
        let m = n.max(ax.ceil() as usize) + 20 + (10.0 * ax.sqrt().max(1.0)) as usize;
        m + m % 2
    };
    let mut next = 0.0;
    let mut cur = 1e-300;
    let mut norm = 0.0;
    let mut vals = vec![0.0; start + 1];
    vals[start] = cur;
    for k in (1..=start).rev() {
        let prev = 2.0 * k as f64 / ax * cur - next;
        next = cur;
        cur = prev;
        vals[k - 1] = cur;
        if cur.abs() > 1e250 {
            for v in &mut vals[k - 1..] {
                *v *= 1e-250;
            }
            next *= 1e-250;
            cur *= 1e-250;
        }
    }
    for (k, v) in vals.iter().enumerate() {
        if k == 0 {
            norm += v;
        } else if k % 2 == 0 {
            norm += 2.0 * v;
        }
    }
    for k in 0..=n {
        let v = vals[k] / norm;
        out[k] = if x < 0.0 && k % 2 == 1 { -v } else { v };
    }
    out
}

/// Propagation strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Dense when the dimension is within the dense cap, Chebyshev otherwise.
    #[default]
    Auto,
    Dense,
    Chebyshev,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    /// Target 2-norm error of the propagated state.
    pub tol: f64,
    pub method: Method,
    pub dense_cap: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            method: Method::Auto,
            dense_cap: DENSE_PROPAGATION_CAP,
        }
    }
}

impl EvolveOptions {
    fn validate(&self) -> Result<()> {
        if !(self.tol >= TOL_RANGE.0 && self.tol <= TOL_RANGE.1) {
            return Err(Error::InvalidParameter(format!(
                "tolerance {:e} outside [{:e}, {:e}]",
                self.tol, TOL_RANGE.0, TOL_RANGE.1
            )));
        }
        Ok(())
    }

    fn use_dense(&self, dim: usize) -> bool {
        match self.method {
            Method::Auto => dim <= self.dense_cap,
            Method::Dense => true,
            Method::Chebyshev => false,
        }
    }
}

/// Chebyshev propagator for a fixed operator.
pub struct Chebyshev<'a, O: Operator + ?Sized> {
    op: &'a O,
    scale: f64,
    /// Matrix-vector products performed so far.
    pub matvecs: usize,
}

impl<'a, O: Operator + ?Sized> Chebyshev<'a, O> {
    pub fn new(op: &'a O) -> Self {
        // pad the bound so that H/a stays safely inside [-1, 1]
        let scale = 1.01 * op.norm_bound().max(1e-12);
        Self { op, scale, matvecs: 0 }
    }

    /// `e^{-iHt} v` with 2-norm error at most `eps`.
    pub fn propagate(&mut self, v: &[Complex64], t: f64, eps: f64) -> Result<Vec<Complex64>> {
        if t == 0.0 {
            return Ok(v.to_vec());
        }
        let steps = ((self.scale * t.abs()) / MAX_STEP_ARG).ceil().max(1.0) as usize;
        let dt = t / steps as f64;
        let step_eps = eps / steps as f64;
        let coeffs = chebyshev_coefficients(self.scale * dt, step_eps)?;
        let mut cur = v.to_vec();
        for _ in 0..steps {
            cur = self.step(&cur, &coeffs);
        }
        Ok(cur)
    }

    fn step(&mut self, v: &[Complex64], coeffs: &[Complex64]) -> Vec<Complex64> {
        let n = v.len();
        let inv = 1.0 / self.scale;
        let mut out: Vec<Complex64> = v.iter().map(|x| x * coeffs[0]).collect();
        if coeffs.len() == 1 {
            return out;
        }
        let mut prev = v.to_vec();
        let mut cur = vec![ZERO; n];
        self.op.apply_into(&prev, &mut cur);
        self.matvecs += 1;
        cur.iter_mut().for_each(|x| *x *= inv);
        for (o, x) in out.iter_mut().zip(&cur) {
            *o += coeffs[1] * x;
        }
        let mut next = vec![ZERO; n];
        for c in &coeffs[2..] {
            self.op.apply_into(&cur, &mut next);
            self.matvecs += 1;
            for ((nx, p), o) in next.iter_mut().zip(&prev).zip(out.iter_mut()) {
                *nx = 2.0 * inv * *nx - p;
                *o += c * *nx;
            }
            std::mem::swap(&mut prev, &mut cur);
            std::mem::swap(&mut cur, &mut next);
        }
        out
    }
}

/// Expansion coefficients truncated once the tail `2 Σ |J_k|` drops below `eps`.
fn chebyshev_coefficients(x: f64, eps: f64) -> Result<Vec<Complex64>> {
    let ax = x.abs();
    let kmax = 2 * ax.ceil() as usize + 60;
    let j = bessel_j_sequence(x, kmax);
    // tail[k] = 2 Σ_{m >= k} |J_m|
    let mut tail = vec![0.0; kmax + 2];
    for k in (0..=kmax).rev() {
        tail[k] = tail[k + 1] + 2.0 * j[k].abs();
    }
    let keep = (1..=kmax + 1).find(|&k| tail[k] < eps).ok_or_else(|| {
        Error::Numerical(format!("Chebyshev series for argument {x} did not reach {eps:e}"))
    })?;
    let mut minus_i_pow = Complex64::new(1.0, 0.0);
    let mut out = Vec::with_capacity(keep);
    for (k, jk) in j.iter().take(keep).enumerate() {
        let w = if k == 0 { 1.0 } else { 2.0 };
        out.push(minus_i_pow * (w * jk));
        minus_i_pow *= Complex64::new(0.0, -1.0);
    }
    Ok(out)
}

// Forced dense runs are still bounded by the assembly cap.
fn dense_limit(opts: &EvolveOptions) -> usize {
    match opts.method {
        Method::Dense => DEFAULT_DENSE_CAP,
        _ => opts.dense_cap,
    }
}

/// `e^{-iHt} state0` within `opts.tol` in the 2-norm. Negative `t` runs
/// backwards in time.
pub fn evolve<O: Operator + ?Sized>(op: &O, state0: &StateVector, t: f64, opts: &EvolveOptions) -> Result<StateVector> {
    opts.validate()?;
    if state0.len() != op.len() {
        return Err(Error::Mismatch {
            expected: op.len(),
            got: state0.len(),
        });
    }
    if !t.is_finite() {
        return Err(Error::InvalidParameter(format!("time {t} must be finite")));
    }
    let out = if t == 0.0 {
        state0.amplitudes().to_vec()
    } else if opts.use_dense(op.len()) {
        let eig = HermitianEigen::new(&op.assemble(dense_limit(opts))?)?;
        eig.propagate(state0.amplitudes(), t)
    } else {
        Chebyshev::new(op).propagate(state0.amplitudes(), t, 1e-2 * opts.tol)?
    };
    StateVector::from_amplitudes(out, state0.spin_dim())
}

/// Time series of a search run started from `|η, s⟩`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    /// Probability on the marked site summed over spin.
    pub p_marked: Vec<f64>,
    /// `|⟨η, w|ψ(t)⟩|²`.
    pub p_eta_marked: Vec<f64>,
    pub t_star: f64,
    pub p_star: f64,
    /// Largest `|‖ψ(t)‖ - 1|` over the grid.
    pub norm_drift: f64,
    /// Whether the dense propagator was used.
    pub dense: bool,
}

/// `n` equally spaced times on `[0, t_end]`.
pub fn time_grid(t_end: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![0.0];
    }
    (0..n).map(|i| t_end * i as f64 / (n - 1) as f64).collect()
}

/// Default grid: 64 points over `[0, 2 t_pred]`.
pub fn default_grid(t_pred: f64) -> Vec<f64> {
    time_grid(2.0 * t_pred, 64)
}

/// Evolve `|η, s⟩` over `times` and record the marked-site probabilities.
pub fn run_search<O: Operator + ?Sized>(op: &O, times: &[f64], opts: &EvolveOptions) -> Result<EvolutionResult> {
    opts.validate()?;
    if times.first() != Some(&0.0) {
        return Err(Error::InvalidParameter("time grid must start at 0".into()));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter("time grid must be strictly increasing".into()));
    }
    let eta = op.reference_spin();
    let cfg = *op.lattice();
    let w = op.marked();
    let psi0 = StateVector::uniform(&cfg, &eta);
    let ds = op.spin_dim();
    let dense = opts.use_dense(op.len()) && times.len() > 1;
    let mut states = Vec::with_capacity(times.len());
    if dense {
        let eig = HermitianEigen::new(&op.assemble(dense_limit(opts))?)?;
        let coeffs = eig.coefficients(psi0.amplitudes());
        for &t in times {
            states.push(eig.evolve_coefficients(&coeffs, t));
        }
    } else {
        let mut prop = Chebyshev::new(op);
        let budget = 1e-2 * opts.tol / times.len().max(2) as f64;
        let mut cur = psi0.amplitudes().to_vec();
        states.push(cur.clone());
        for pair in times.windows(2) {
            cur = prop.propagate(&cur, pair[1] - pair[0], budget)?;
            states.push(cur.clone());
        }
    }
    let mut p_marked = Vec::with_capacity(times.len());
    let mut p_eta = Vec::with_capacity(times.len());
    let mut drift = 0.0f64;
    for amps in states {
        let s = StateVector::from_amplitudes(amps, ds)?;
        drift = drift.max((s.norm() - 1.0).abs());
        p_marked.push(s.site_probability(w));
        p_eta.push(s.spin_overlap(w, &eta).norm_sqr());
    }
    let (t_star, p_star) = refine_peak(times, &p_marked);
    Ok(EvolutionResult {
        times: times.to_vec(),
        p_marked,
        p_eta_marked: p_eta,
        t_star,
        p_star,
        norm_drift: drift,
        dense,
    })
}

/// Grid maximum refined by a parabola through it and its two neighbors.
pub fn refine_peak(times: &[f64], values: &[f64]) -> (f64, f64) {
    let (i, &best) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty series");
    if i == 0 || i + 1 == values.len() {
        return (times[i], best);
    }
    let (x0, x1, x2) = (times[i - 1], times[i], times[i + 1]);
    let (y0, y1, y2) = (values[i - 1], values[i], values[i + 1]);
    // Newton form p(t) = y0 + d01 (t - x0) + a (t - x0)(t - x1)
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let a = (d12 - d01) / (x2 - x0);
    if !(a < 0.0) {
        return (x1, y1);
    }
    let t = (0.5 * (x0 + x1) - d01 / (2.0 * a)).clamp(x0, x2);
    (t, y0 + d01 * (t - x0) + a * (t - x0) * (t - x1))
}
