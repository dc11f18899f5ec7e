//! Brillouin-zone quadrature for the continuum limit of lattice sums.
//!
//! Integrands handled here depend on the momentum only through
//! `s²(k) = Σ sin² k_j` and `c(k) = 2 Σ (1 - cos k_j)` and are even in every
//! `k_j`, so the zone `[-π, π]^d` is folded onto `[0, π]^d`. Both ends of
//! each folded axis carry the points where kernels peak (`k_j = 0` at the
//! zone centre, `k_j = π` at the doubler corners).

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sobol::params::JoeKuoD6;
use sobol::Sobol;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

// P_n(x) and P_n'(x) by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Per-axis samples of the folded zone: `sin² k`, `2(1 - cos k)` and the
/// normalized weight (weights sum to one).
#[derive(Debug, Clone)]
struct AxisRule {
    sin2: Vec<f64>,
    cterm: Vec<f64>,
    weight: Vec<f64>,
}

impl AxisRule {
    fn push(&mut self, k: f64, w: f64) {
        let h = (0.5 * k).sin();
        self.sin2.push(k.sin().powi(2));
        self.cterm.push(4.0 * h * h);
        self.weight.push(w);
    }
}

/// Geometrically graded composite Gauss-Legendre rule on `[0, π]`: panels
/// shrink by `ratio` toward both ends down to `levels` refinements.
fn graded_axis(points_per_panel: usize, levels: usize, ratio: f64) -> AxisRule {
    let (x, w) = gauss_legendre(points_per_panel);
    let half = 0.5 * PI;
    // breakpoints from 0 to π/2
    let mut breaks = vec![0.0];
    for level in (0..=levels).rev() {
        breaks.push(half * ratio.powi(level as i32));
    }
    let mut rule = AxisRule {
        sin2: Vec::new(),
        cterm: Vec::new(),
        weight: Vec::new(),
    };
    let panel = |a: f64, b: f64, rule: &mut AxisRule| {
        let (mid, rad) = (0.5 * (a + b), 0.5 * (b - a));
        for (xi, wi) in x.iter().zip(&w) {
            rule.push(mid + rad * xi, rad * wi / PI);
        }
    };
    for pair in breaks.windows(2) {
        panel(pair[0], pair[1], &mut rule);
    }
    for pair in breaks.windows(2).rev() {
        panel(PI - pair[1], PI - pair[0], &mut rule);
    }
    rule
}

/// Quasi-Monte Carlo settings for `d >= 4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QmcConfig {
    pub points: usize,
    pub seed: u64,
}

impl Default for QmcConfig {
    fn default() -> Self {
        Self {
            points: 1 << 20,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone)]
enum Rule {
    Tensor(AxisRule),
    Points {
        s2: Vec<f64>,
        c: Vec<f64>,
        weight: Vec<f64>,
    },
}

/// A reusable quadrature over the folded Brillouin zone.
#[derive(Debug, Clone)]
pub struct BrillouinQuadrature {
    dim: usize,
    rule: Rule,
}

// Sigmoidal map t -> π t^p / (t^p + (1-t)^p); its Jacobian vanishes at both
// ends and flattens the point peaks at the zone centre and the corners.
const SIGMOID_POWER: i32 = 3;

fn sigmoid(t: f64) -> (f64, f64) {
    let p = SIGMOID_POWER;
    let a = t.powi(p);
    let b = (1.0 - t).powi(p);
    let den = a + b;
    let k = PI * a / den;
    let jac = PI * p as f64 * (t * (1.0 - t)).powi(p - 1) / (den * den);
    (k, jac)
}

impl BrillouinQuadrature {
    /// Graded tensor-product rule; the default for `d <= 3`.
    pub fn tensor(dim: usize) -> Self {
        Self::tensor_with(dim, 10, 14, 0.25)
    }

    pub fn tensor_with(dim: usize, points_per_panel: usize, levels: usize, ratio: f64) -> Self {
        Self {
            dim,
            rule: Rule::Tensor(graded_axis(points_per_panel, levels, ratio)),
        }
    }

    /// Digitally shifted Sobol rule in sigmoid-mapped coordinates.
    pub fn qmc(dim: usize, cfg: QmcConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let shift: Vec<u32> = (0..dim).map(|_| rng.random()).collect();
        let seq = Sobol::<u32>::new(dim, &JoeKuoD6::minimal());
        let n = cfg.points;
        let mut s2 = Vec::with_capacity(n);
        let mut cv = Vec::with_capacity(n);
        let mut weight = Vec::with_capacity(n);
        for point in seq.take(n) {
            let (mut a, mut b, mut w) = (0.0, 0.0, 1.0 / n as f64);
            for j in 0..dim {
                let bits = point[j] ^ shift[j];
                let t = (f64::from(bits) + 0.5) / 4_294_967_296.0;
                let (k, jac) = sigmoid(t);
                let h = (0.5 * k).sin();
                a += k.sin().powi(2);
                b += 4.0 * h * h;
                w *= jac / PI;
            }
            s2.push(a);
            cv.push(b);
            weight.push(w);
        }
        Self {
            dim,
            rule: Rule::Points { s2, c: cv, weight },
        }
    }

    /// Tensor rule for `d <= 3`, QMC above.
    pub fn for_dim(dim: usize, qmc: QmcConfig) -> Self {
        if dim <= 3 {
            Self::tensor(dim)
        } else {
            Self::qmc(dim, qmc)
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Zone average `(2π)^{-d} ∫ f(s²(k), c(k)) d^d k`.
    pub fn average<F>(&self, f: F) -> f64
    where
        F: Fn(f64, f64) -> f64 + Sync,
    {
        match &self.rule {
            Rule::Points { s2, c, weight } => s2
                .par_chunks(4096)
                .zip(c.par_chunks(4096))
                .zip(weight.par_chunks(4096))
                .map(|((s, cc), w)| {
                    s.iter()
                        .zip(cc)
                        .zip(w)
                        .map(|((&s, &cc), &w)| {
                            if w == 0.0 {
                                0.0
                            } else {
                                w * f(s, cc)
                            }
                        })
                        .sum::<f64>()
                })
                .sum(),
            Rule::Tensor(axis) => tensor_sum(axis, self.dim, &f),
        }
    }
}

fn tensor_sum<F>(axis: &AxisRule, dim: usize, f: &F) -> f64
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    let n = axis.weight.len();
    fn recurse<F: Fn(f64, f64) -> f64>(
        axis: &AxisRule,
        depth: usize,
        s2: f64,
        c: f64,
        w: f64,
        f: &F,
    ) -> f64 {
        if depth == 0 {
            return w * f(s2, c);
        }
        let mut acc = 0.0;
        for i in 0..axis.weight.len() {
            acc += recurse(
                axis,
                depth - 1,
                s2 + axis.sin2[i],
                c + axis.cterm[i],
                w * axis.weight[i],
                f,
            );
        }
        acc
    }
    (0..n)
        .into_par_iter()
        .map(|i| recurse(axis, dim - 1, axis.sin2[i], axis.cterm[i], axis.weight[i], f))
        .sum()
}
