//! Global Picard iteration of the integral form `K = 1 + ∬ ρ K`.

use alloc::vec;
use alloc::vec::Vec;

use super::fd::rho_table;
use crate::error::{Error, Result};
use crate::path::TimeSeries;

/// Stopping threshold on the largest change between iterates.
const PICARD_TOL: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq)]
pub struct PicardOutcome {
    /// `K(1,1)` of the final iterate.
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `K(1,1)` after each iteration.
    pub history: Vec<f64>,
}

/// Iterates `K_{n+1} = 1 + Σ ρ K_n` on a lattice with `refinement` cells per
/// tile edge, integrating each cell with the trapezoidal rule, starting from
/// `K_0 ≡ 1`.
pub fn picard_global(
    x: &TimeSeries,
    y: &TimeSeries,
    refinement: usize,
    max_iterations: usize,
) -> Result<PicardOutcome> {
    if refinement == 0 || max_iterations == 0 {
        return Err(Error::invalid("refinement and iteration count must be at least 1"));
    }
    let (nx, ny, rho) = rho_table(x, y)?;
    let (rows, cols) = (nx * refinement + 1, ny * refinement + 1);
    let r2 = (refinement * refinement) as f64;
    let mut k = vec![1.0; rows * cols];
    let mut next = vec![0.0; rows * cols];
    let mut history = Vec::new();
    let mut converged = false;
    for _ in 0..max_iterations {
        // next holds 1 + cumulative double integral.
        for v in next.iter_mut().take(cols) {
            *v = 1.0;
        }
        for a in 1..rows {
            next[a * cols] = 1.0;
            let kk = (a - 1) / refinement;
            for b in 1..cols {
                let q = rho[kk * ny + (b - 1) / refinement] / r2;
                let cell = q / 4.0
                    * (k[(a - 1) * cols + b - 1] + k[(a - 1) * cols + b] + k[a * cols + b - 1] + k[a * cols + b]);
                next[a * cols + b] =
                    next[(a - 1) * cols + b] + next[a * cols + b - 1] - next[(a - 1) * cols + b - 1] + cell;
            }
        }
        let change = k.iter().zip(&next).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        core::mem::swap(&mut k, &mut next);
        history.push(k[rows * cols - 1]);
        if change < PICARD_TOL {
            converged = true;
            break;
        }
    }
    Ok(PicardOutcome {
        value: k[rows * cols - 1],
        iterations: history.len(),
        converged,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::goursat_fd_solve;

    #[test]
    fn zero_coefficient_stops_after_one_iteration() {
        let x = TimeSeries::from_points(&[[0.0, 0.0], [1.0, 0.0]]).unwrap();
        let y = TimeSeries::from_points(&[[0.0, 0.0], [0.0, 2.0], [0.0, 3.0]]).unwrap();
        let out = picard_global(&x, &y, 4, 50).unwrap();
        assert_eq!(out.value, 1.0);
        assert_eq!(out.iterations, 1);
        assert!(out.converged);
    }

    #[test]
    fn iterates_increase_for_nonnegative_coefficient() {
        let x = TimeSeries::from_scalars(&[0.0, 0.7, 1.5]).unwrap();
        let y = TimeSeries::from_scalars(&[0.0, 0.4, 1.2, 2.0]).unwrap();
        let out = picard_global(&x, &y, 6, 200).unwrap();
        assert!(out.converged);
        assert!(out.history.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn agrees_with_finite_differences() {
        let x = TimeSeries::from_points(&[[0.0, 0.0], [0.5, -0.3], [0.1, 0.8]]).unwrap();
        let y = TimeSeries::from_points(&[[0.0, 0.0], [-0.2, 0.6], [0.7, 0.4], [0.3, 0.1]]).unwrap();
        let p = picard_global(&x, &y, 32, 500).unwrap();
        let f = goursat_fd_solve(&x, &y, 32).unwrap();
        assert!(p.converged);
        assert!((p.value - f).abs() < 1e-3 * f.abs(), "{} vs {}", p.value, f);
    }
}
