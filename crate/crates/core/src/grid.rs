//! Uniform grids and the flat field containers the solvers operate on.

use crate::error::{Error, Result};

/// Sampled values on a [`Grid1D`], one per node.
pub type Field1D = Vec<f64>;

/// Uniform node-centered grid on the unit interval [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    n: usize,
    h: f64,
}

impl Grid1D {
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::invalid("n", format!("{n} (need at least 3 nodes)")));
        }
        Ok(Grid1D {
            n,
            h: 1.0 / (n - 1) as f64,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Trapezoidal L2 norm over [0, 1].
    pub fn l2_norm(&self, values: &[f64]) -> f64 {
        assert_eq!(values.len(), self.n);
        let mut acc = 0.0;
        for (i, v) in values.iter().enumerate() {
            let w = if i == 0 || i == self.n - 1 { 0.5 } else { 1.0 };
            acc += w * v * v;
        }
        (acc * self.h).sqrt()
    }
}

/// Uniform node-centered grid on the rectangle [0, lx] x [0, lz].
///
/// `x` points away from the vessel wall, `z` runs along it. Node (0, 0) sits
/// on the corner where the vessel meets the symmetry axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    nx: usize,
    nz: usize,
    lx: f64,
    lz: f64,
    hx: f64,
    hz: f64,
}

impl Grid2D {
    pub fn new(nx: usize, nz: usize, lx: f64, lz: f64) -> Result<Self> {
        if nx < 16 {
            return Err(Error::invalid("nx", format!("{nx} (need at least 16)")));
        }
        if nz < 16 {
            return Err(Error::invalid("nz", format!("{nz} (need at least 16)")));
        }
        if !(lx > 0.0) || !lx.is_finite() {
            return Err(Error::invalid("lx", format!("{lx} (must be > 0)")));
        }
        if !(lz > 0.0) || !lz.is_finite() {
            return Err(Error::invalid("lz", format!("{lz} (must be > 0)")));
        }
        Ok(Grid2D {
            nx,
            nz,
            lx,
            lz,
            hx: lx / (nx - 1) as f64,
            hz: lz / (nz - 1) as f64,
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn nz(&self) -> usize {
        self.nz
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn lz(&self) -> f64 {
        self.lz
    }

    pub fn hx(&self) -> f64 {
        self.hx
    }

    pub fn hz(&self) -> f64 {
        self.hz
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.hx
    }

    pub fn z(&self, j: usize) -> f64 {
        j as f64 * self.hz
    }

    /// Trapezoidal quadrature weight of node (i, j), including the cell area.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let wx = if i == 0 || i == self.nx - 1 { 0.5 } else { 1.0 };
        let wz = if j == 0 || j == self.nz - 1 { 0.5 } else { 1.0 };
        wx * wz * self.hx * self.hz
    }
}

/// Row-major scalar field on a [`Grid2D`]: index (i, j) lives at `j*nx + i`,
/// so a "row" is a line of constant z.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    nx: usize,
    nz: usize,
    data: Vec<f64>,
}

impl Field2D {
    pub fn filled(grid: &Grid2D, value: f64) -> Self {
        Field2D {
            nx: grid.nx(),
            nz: grid.nz(),
            data: vec![value; grid.nx() * grid.nz()],
        }
    }

    pub fn from_fn(grid: &Grid2D, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut data = Vec::with_capacity(grid.nx() * grid.nz());
        for j in 0..grid.nz() {
            for i in 0..grid.nx() {
                data.push(f(grid.x(i), grid.z(j)));
            }
        }
        Field2D {
            nx: grid.nx(),
            nz: grid.nz(),
            data,
        }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn nz(&self) -> usize {
        self.nz
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.nz);
        j * self.nx + i
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.nx + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.nx + i] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}
