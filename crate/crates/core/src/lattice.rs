//! Periodic cubic lattices, site indexing and the discrete momentum grid.
//!
//! Sites are indexed row-major over their axis coordinates: axis 0 is the
//! most significant digit.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported lattice dimension.
pub const MAX_DIM: usize = 6;

/// Default cap on the number of lattice sites.
pub const DEFAULT_SITE_CAP: usize = 1 << 26;

/// A `dim`-dimensional periodic cubic lattice with `side` sites per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeConfig {
    dim: usize,
    side: usize,
    n_sites: usize,
}

impl LatticeConfig {
    pub fn new(dim: usize, side: usize) -> Result<Self> {
        Self::with_cap(dim, side, DEFAULT_SITE_CAP)
    }

    pub fn with_cap(dim: usize, side: usize, cap: usize) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::Dimension(dim));
        }
        if side < 2 {
            return Err(Error::Side(side));
        }
        let too_many = || Error::TooManySites { dim, side, cap };
        let mut n_sites = 1usize;
        for _ in 0..dim {
            n_sites = n_sites.checked_mul(side).ok_or_else(too_many)?;
        }
        if n_sites > cap {
            return Err(too_many());
        }
        Ok(Self { dim, side, n_sites })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// Axis coordinates of site `index`.
    pub fn coords(&self, index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim];
        let mut rest = index;
        for slot in out.iter_mut().rev() {
            *slot = rest % self.side;
            rest /= self.side;
        }
        out
    }

    /// Site index of the given coordinates, each reduced modulo `side`.
    pub fn index(&self, coords: &[i64]) -> usize {
        debug_assert_eq!(coords.len(), self.dim);
        let side = self.side as i64;
        coords
            .iter()
            .fold(0usize, |acc, &c| acc * self.side + c.rem_euclid(side) as usize)
    }

    /// Stride of axis `axis` in the row-major site index.
    fn stride(&self, axis: usize) -> usize {
        self.side.pow((self.dim - 1 - axis) as u32)
    }

    /// For each axis, the sites `x + e_j` and `x - e_j` under periodic wrap.
    pub fn neighbors(&self, x: usize) -> Result<Vec<Neighbor>> {
        if x >= self.n_sites {
            return Err(Error::SiteIndex {
                index: x,
                n_sites: self.n_sites,
            });
        }
        Ok((0..self.dim).map(|axis| self.neighbor(x, axis)).collect())
    }

    fn neighbor(&self, x: usize, axis: usize) -> Neighbor {
        let stride = self.stride(axis);
        let coord = (x / stride) % self.side;
        let base = x - coord * stride;
        let plus = base + ((coord + 1) % self.side) * stride;
        let minus = base + ((coord + self.side - 1) % self.side) * stride;
        Neighbor { axis, plus, minus }
    }

    /// Precomputed neighbor table for stencil application.
    pub fn neighbor_table(&self) -> NeighborTable {
        let mut entries = Vec::with_capacity(self.n_sites * self.dim);
        for x in 0..self.n_sites {
            for axis in 0..self.dim {
                let nb = self.neighbor(x, axis);
                entries.push([nb.plus, nb.minus]);
            }
        }
        NeighborTable {
            dim: self.dim,
            entries,
        }
    }

    /// Site reached from `x` by translating by `shift`.
    pub fn translate(&self, x: usize, shift: &[i64]) -> usize {
        let c: Vec<i64> = self
            .coords(x)
            .iter()
            .zip(shift)
            .map(|(&a, &b)| a as i64 + b)
            .collect();
        self.index(&c)
    }
}

/// The two neighbors of a site along one axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Neighbor {
    pub axis: usize,
    pub plus: usize,
    pub minus: usize,
}

/// `[plus, minus]` neighbor indices for every `(site, axis)` pair.
#[derive(Debug, Clone)]
pub struct NeighborTable {
    dim: usize,
    entries: Vec<[usize; 2]>,
}

impl NeighborTable {
    #[inline]
    pub fn get(&self, x: usize, axis: usize) -> [usize; 2] {
        self.entries[x * self.dim + axis]
    }

    #[inline]
    pub fn site(&self, x: usize) -> &[[usize; 2]] {
        &self.entries[x * self.dim..(x + 1) * self.dim]
    }
}

/// A lattice momentum: integer grid indices and the wave vector `k = 2π m / side`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumVector {
    pub m: Vec<i64>,
    pub k: Vec<f64>,
}

impl MomentumVector {
    pub fn is_zero(&self) -> bool {
        self.m.iter().all(|&m| m == 0)
    }
}

/// Allowed grid indices along one axis, ordered `0, +1, -1, +2, -2, ...`.
///
/// Odd sides run to `±(side-1)/2`; even sides stop at `±(side-2)/2` and add
/// the unpaired `+side/2`.
pub fn axis_indices(side: usize) -> Vec<i64> {
    let side = side as i64;
    let mut out = vec![0];
    let half = (side - 1) / 2;
    for m in 1..=half {
        out.push(m);
        out.push(-m);
    }
    if side % 2 == 0 {
        out.push(side / 2);
    }
    out
}

/// All `n_sites` lattice momenta, zero vector first.
pub fn momentum_grid(cfg: &LatticeConfig) -> Vec<MomentumVector> {
    let axis = axis_indices(cfg.side);
    let scale = 2.0 * PI / cfg.side as f64;
    let mut out = Vec::with_capacity(cfg.n_sites);
    let mut digits = vec![0usize; cfg.dim];
    for _ in 0..cfg.n_sites {
        let m: Vec<i64> = digits.iter().map(|&i| axis[i]).collect();
        let k = m.iter().map(|&mj| scale * mj as f64).collect();
        out.push(MomentumVector { m, k });
        for slot in digits.iter_mut().rev() {
            *slot += 1;
            if *slot < cfg.side {
                break;
            }
            *slot = 0;
        }
    }
    out
}
