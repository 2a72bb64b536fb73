//! Finite-difference solver for the Goursat problem on a refined lattice.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::path::TimeSeries;

/// Lattice values with `refinement` cells per tile edge.
#[derive(Clone, Debug, PartialEq)]
pub struct FdGrid {
    pub refinement: usize,
    pub rows: usize,
    pub cols: usize,
    values: Vec<f64>,
}

impl FdGrid {
    /// Node `(a, b)`, `a` along `x`.
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[a * self.cols + b]
    }

    pub fn corner(&self) -> f64 {
        self.values[self.values.len() - 1]
    }
}

/// Increment inner products `δ_{k,l}`, row-major in `k`.
pub(super) fn rho_table(x: &TimeSeries, y: &TimeSeries) -> Result<(usize, usize, Vec<f64>)> {
    if x.dim() != y.dim() {
        return Err(Error::invalid("dimension mismatch"));
    }
    let (dx, dy) = (x.increments()?, y.increments()?);
    let d = x.dim();
    let table = dx
        .chunks_exact(d)
        .flat_map(|a| dy.chunks_exact(d).map(move |b| a.iter().zip(b).map(|(p, q)| p * q).sum()))
        .collect();
    Ok((x.len() - 1, y.len() - 1, table))
}

/// Solves on a lattice with `refinement` cells per tile edge. Each cell uses
/// `K₁₁ = (K₁₀ + K₀₁)(1 + q/2 + q²/12) − K₀₀(1 − q²/12)` with `q = δ/R²` the
/// cell's coefficient times its area; the update is exact through fourth
/// order in the cell size for constant coefficient, giving second-order
/// global convergence.
pub fn goursat_fd_grid(x: &TimeSeries, y: &TimeSeries, refinement: usize) -> Result<FdGrid> {
    if refinement == 0 {
        return Err(Error::invalid("refinement must be at least 1"));
    }
    let (nx, ny, rho) = rho_table(x, y)?;
    let (rows, cols) = (nx * refinement + 1, ny * refinement + 1);
    let r2 = (refinement * refinement) as f64;
    let mut values = vec![1.0; rows * cols];
    for a in 1..rows {
        let k = (a - 1) / refinement;
        for b in 1..cols {
            let l = (b - 1) / refinement;
            let q = rho[k * ny + l] / r2;
            let k10 = values[(a - 1) * cols + b];
            let k01 = values[a * cols + b - 1];
            let k00 = values[(a - 1) * cols + b - 1];
            values[a * cols + b] = (k10 + k01) * (1.0 + q / 2.0 + q * q / 12.0) - k00 * (1.0 - q * q / 12.0);
        }
    }
    Ok(FdGrid {
        refinement,
        rows,
        cols,
        values,
    })
}

/// Value at `(1, 1)` of [`goursat_fd_grid`].
pub fn goursat_fd_solve(x: &TimeSeries, y: &TimeSeries, refinement: usize) -> Result<f64> {
    Ok(goursat_fd_grid(x, y, refinement)?.corner())
}
