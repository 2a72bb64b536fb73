//! Anti-diagonal propagation of edge series across the tile grid.
//!
//! Tile `(k, l)` (0-based, `k` along `x`) consumes the left-edge series of
//! row `l` and the bottom-edge series of column `k`, and replaces them in place
//! with its right-edge and top-edge series. All tiles with `k + l = d` touch
//! disjoint slots, so a diagonal can be processed in any order or
//! concurrently; diagonals run strictly in sequence. Only the series on the
//! current frontier are alive, `2·min(ℓ_x−1, ℓ_y−1)` at most.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::path::{IncrementTable, TimeSeries};
use crate::series::{
    check_order, corner_consistent, fill_powers, Axis, BoundarySeries, TileOutputs, WeightTable,
    CORNER_TOL,
};
use crate::truncation::{estimate_order, TruncationPolicy};
use crate::MAX_ORDER;

/// How the tiles of one anti-diagonal are scheduled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    #[default]
    Sequential,
    /// Tiles of a diagonal run on the current rayon pool.
    #[cfg(feature = "parallel")]
    Parallel,
}

/// Kernel values at every knot pair `(σ_i, τ_j)`, row-major in `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelGrid {
    pub len_x: usize,
    pub len_y: usize,
    pub values: Vec<f64>,
}

impl KernelGrid {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.len_y + j]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KernelResult {
    /// `K(1, 1)`.
    pub value: f64,
    pub order: usize,
    /// False when an adaptive order search saturated at the maximum order.
    pub order_converged: bool,
    pub tiles_processed: usize,
    /// Largest number of edge series alive at once.
    pub peak_live_series: usize,
    pub grid: Option<KernelGrid>,
}

/// The frontier between processed and pending tiles.
#[derive(Clone, Debug)]
pub struct DiagonalState {
    order: usize,
    tiles_x: usize,
    tiles_y: usize,
    /// Left-edge series of the next pending tile in each row.
    left: Vec<f64>,
    /// Bottom-edge series of the next pending tile in each column.
    bottom: Vec<f64>,
    diagonal: usize,
    live: usize,
    peak_live: usize,
}

impl DiagonalState {
    pub fn new(tiles_x: usize, tiles_y: usize, order: usize) -> Self {
        let n1 = order + 1;
        Self {
            order,
            tiles_x,
            tiles_y,
            left: vec![0.0; tiles_y * n1],
            bottom: vec![0.0; tiles_x * n1],
            diagonal: 0,
            live: 0,
            peak_live: 0,
        }
    }

    pub fn diagonal(&self) -> usize {
        self.diagonal
    }

    pub fn diagonal_count(&self) -> usize {
        self.tiles_x + self.tiles_y - 1
    }

    pub fn is_done(&self) -> bool {
        self.diagonal >= self.diagonal_count()
    }

    /// Range of `k` for the tiles on the current diagonal.
    pub fn tile_range(&self) -> core::ops::RangeInclusive<usize> {
        let d = self.diagonal;
        let lo = d.saturating_sub(self.tiles_y - 1);
        let hi = d.min(self.tiles_x - 1);
        lo..=hi
    }

    pub fn live_series(&self) -> usize {
        self.live
    }

    pub fn peak_live_series(&self) -> usize {
        self.peak_live
    }

    /// Copies out the left-edge series currently stored for row `l`.
    pub fn left_series(&self, l: usize) -> BoundarySeries {
        let n1 = self.order + 1;
        BoundarySeries::new(Axis::V, self.left[l * n1..(l + 1) * n1].to_vec())
            .expect("order is bounded")
    }

    /// Copies out the bottom-edge series currently stored for column `k`.
    pub fn bottom_series(&self, k: usize) -> BoundarySeries {
        let n1 = self.order + 1;
        BoundarySeries::new(Axis::U, self.bottom[k * n1..(k + 1) * n1].to_vec())
            .expect("order is bounded")
    }

    /// Places the unit series on domain edges entering the current diagonal.
    fn materialize_domain_edges(&mut self) {
        let n1 = self.order + 1;
        let d = self.diagonal;
        if d < self.tiles_y {
            // tile (0, d) enters from the left domain edge
            let slot = &mut self.left[d * n1..(d + 1) * n1];
            slot.fill(0.0);
            slot[0] = 1.0;
            self.live += 1;
        }
        if d < self.tiles_x {
            // tile (d, 0) enters from the bottom domain edge
            let slot = &mut self.bottom[d * n1..(d + 1) * n1];
            slot.fill(0.0);
            slot[0] = 1.0;
            self.live += 1;
        }
        self.peak_live = self.peak_live.max(self.live);
    }

    /// Drops outputs that leave the domain through its top or right side.
    fn retire_exits(&mut self) {
        let range = self.tile_range();
        let d = self.diagonal;
        if *range.end() == self.tiles_x - 1 {
            self.live -= 1;
        }
        if d - *range.start() == self.tiles_y - 1 {
            self.live -= 1;
        }
    }
}

/// A reusable engine for one truncation order.
#[derive(Clone, Debug)]
pub struct Propagator {
    weights: WeightTable,
    execution: Execution,
}

impl Propagator {
    pub fn new(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::invalid("truncation order must be at least 1"));
        }
        Ok(Self {
            weights: WeightTable::new(order)?,
            execution: Execution::Sequential,
        })
    }

    /// Uses a caller-supplied weight table (fault-injection runs).
    pub fn with_weights(weights: WeightTable) -> Self {
        Self {
            weights,
            execution: Execution::Sequential,
        }
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn order(&self) -> usize {
        self.weights.order()
    }

    pub fn weights(&self) -> &WeightTable {
        &self.weights
    }

    pub fn kernel(&self, x: &TimeSeries, y: &TimeSeries) -> Result<KernelResult> {
        self.run(&IncrementTable::new(x, y)?, false)
    }

    pub fn kernel_grid(&self, x: &TimeSeries, y: &TimeSeries) -> Result<KernelResult> {
        self.run(&IncrementTable::new(x, y)?, true)
    }

    pub fn run(&self, table: &IncrementTable, with_grid: bool) -> Result<KernelResult> {
        let order = self.order();
        let (nx, ny) = (table.tiles_x(), table.tiles_y());
        overflow_precheck(table, order)?;

        let len_y = ny + 1;
        let mut grid = with_grid.then(|| vec![1.0; (nx + 1) * len_y]);
        let mut state = DiagonalState::new(nx, ny, order);
        let mut value = 1.0;
        while !state.is_done() {
            state.materialize_domain_edges();
            self.sweep_diagonal(table, &mut state)?;
            let range = state.tile_range();
            let d = state.diagonal;
            if let Some(g) = grid.as_mut() {
                for k in range.clone() {
                    let l = d - k;
                    g[(k + 1) * len_y + l + 1] = corner_value(&state, k);
                }
            }
            if d + 1 == state.diagonal_count() {
                value = corner_value(&state, nx - 1);
            }
            state.retire_exits();
            state.diagonal += 1;
        }
        Ok(KernelResult {
            value,
            order,
            order_converged: true,
            tiles_processed: nx * ny,
            peak_live_series: state.peak_live,
            grid: grid.map(|values| KernelGrid {
                len_x: nx + 1,
                len_y,
                values,
            }),
        })
    }

    fn sweep_diagonal(&self, table: &IncrementTable, state: &mut DiagonalState) -> Result<()> {
        let n1 = state.order + 1;
        let range = state.tile_range();
        let (k_lo, k_hi) = (*range.start(), *range.end());
        let d = state.diagonal;
        let (l_lo, l_hi) = (d - k_hi, d - k_lo);
        let bottom = &mut state.bottom[k_lo * n1..(k_hi + 1) * n1];
        let left = &mut state.left[l_lo * n1..(l_hi + 1) * n1];
        let weights = &self.weights;
        let tile = |p: usize, b: &mut [f64], lft: &mut [f64]| -> Result<()> {
            let k = k_lo + p;
            let l = d - k;
            let delta = table.rho_unchecked(k, l);
            step_slices(delta, lft, b, weights).map_err(|e| match e {
                Error::NumericOverflow { delta, .. } => Error::NumericOverflow {
                    tile: (k, l),
                    delta,
                },
                other => other,
            })
        };
        match self.execution {
            Execution::Sequential => {
                for (p, (b, lft)) in bottom
                    .chunks_exact_mut(n1)
                    .zip(left.chunks_exact_mut(n1).rev())
                    .enumerate()
                {
                    tile(p, b, lft)?;
                }
                Ok(())
            }
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                let first_error = bottom
                    .par_chunks_exact_mut(n1)
                    .zip(left.par_chunks_exact_mut(n1).rev())
                    .enumerate()
                    .with_min_len(8)
                    .filter_map(|(p, (b, lft))| tile(p, b, lft).err().map(|e| (p, e)))
                    .min_by_key(|(p, _)| *p);
                match first_error {
                    Some((_, e)) => Err(e),
                    None => Ok(()),
                }
            }
        }
    }
}

fn corner_value(state: &DiagonalState, k: usize) -> f64 {
    let n1 = state.order + 1;
    state.bottom[k * n1..(k + 1) * n1]
        .iter()
        .fold(0.0, |s, &x| s + x)
}

/// Fails before sweeping when `|δ|^N` alone already overflows.
fn overflow_precheck(table: &IncrementTable, order: usize) -> Result<()> {
    let m = table.max_abs_rho();
    if libm::pow(m, order as f64).is_finite() {
        return Ok(());
    }
    for k in 0..table.tiles_x() {
        for l in 0..table.tiles_y() {
            let delta = table.rho_unchecked(k, l);
            if delta.abs() == m {
                return Err(Error::NumericOverflow { tile: (k, l), delta });
            }
        }
    }
    unreachable!("maximum is attained by some tile")
}

/// One tile update in place: `left` (series in `v`) becomes the right-edge
/// series and `bottom` (series in `u`) becomes the top-edge series.
#[inline]
fn step_slices(delta: f64, left: &mut [f64], bottom: &mut [f64], weights: &WeightTable) -> Result<()> {
    let n1 = left.len();
    debug_assert_eq!(n1, weights.order() + 1);
    corner_consistent(left, bottom, CORNER_TOL)?;
    let mut alpha = [0.0; MAX_ORDER + 1];
    let mut beta = [0.0; MAX_ORDER + 1];
    let mut pows = [0.0; MAX_ORDER + 1];
    let mut right = [0.0; MAX_ORDER + 1];
    alpha[..n1].copy_from_slice(left);
    beta[..n1].copy_from_slice(bottom);
    fill_powers(delta, &mut pows[..n1]);
    for i in 0..n1 {
        let w = weights.row(i);
        let mut acc = 0.0;
        for j in 0..i {
            let c = (pows[j] * beta[i - j]) * w[j];
            acc += c;
            right[j] += c;
        }
        for j in i..n1 {
            let c = (pows[i] * alpha[j - i]) * w[j];
            acc += c;
            right[j] += c;
        }
        bottom[i] = acc;
    }
    left.copy_from_slice(&right[..n1]);
    let finite = bottom.iter().chain(left.iter()).all(|x| x.is_finite());
    if finite {
        Ok(())
    } else {
        Err(Error::NumericOverflow { tile: (0, 0), delta })
    }
}

/// Composite tile step: equals `top_boundary(tile_coeffs(..))` and
/// `right_boundary(tile_coeffs(..))` bit for bit.
pub fn step_tile(
    delta: f64,
    alpha: &BoundarySeries,
    beta: &BoundarySeries,
    weights: &WeightTable,
) -> Result<TileOutputs> {
    let order = weights.order();
    check_order(order)?;
    if alpha.axis() != Axis::V || beta.axis() != Axis::U {
        return Err(Error::invalid(
            "alpha must be a left-edge series in v and beta a bottom-edge series in u",
        ));
    }
    if alpha.order() != order || beta.order() != order {
        return Err(Error::invalid("edge series order does not match the weight table"));
    }
    let mut left = alpha.coeffs().to_vec();
    let mut bottom = beta.coeffs().to_vec();
    step_slices(delta, &mut left, &mut bottom, weights)?;
    Ok(TileOutputs {
        top: BoundarySeries::new(Axis::U, bottom)?,
        right: BoundarySeries::new(Axis::V, left)?,
    })
}

/// Order-`N` kernel `K(1,1)` of `x` and `y` (lengths may differ).
pub fn propagate(x: &TimeSeries, y: &TimeSeries, order: usize) -> Result<KernelResult> {
    Propagator::new(order)?.kernel(x, y)
}

/// As [`propagate`], also recording `K` at every knot pair.
pub fn propagate_grid(x: &TimeSeries, y: &TimeSeries, order: usize) -> Result<KernelResult> {
    Propagator::new(order)?.kernel_grid(x, y)
}

/// Chooses the order from `policy` and runs the sweep.
pub fn propagate_with_policy(
    x: &TimeSeries,
    y: &TimeSeries,
    policy: TruncationPolicy,
    execution: Execution,
) -> Result<KernelResult> {
    let table = IncrementTable::new(x, y)?;
    let (order, converged) = match policy {
        TruncationPolicy::Fixed(n) => (n, true),
        TruncationPolicy::Adaptive { tol } => {
            let choice = estimate_order(table.max_abs_rho(), tol);
            (choice.order, choice.converged)
        }
    };
    let mut result = Propagator::new(order)?
        .with_execution(execution)
        .run(&table, false)?;
    result.order_converged = converged;
    Ok(result)
}
