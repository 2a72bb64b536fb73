//! Signature kernels of piecewise-linear time series.
//!
//! The kernel `K` of two paths solves the Goursat problem
//! `∂²K/∂s∂t = ρ(s,t)·K` on `[0,1]²` with `K(0,·) = K(·,0) = 1`, where `ρ` is
//! piecewise constant on the tiles spanned by the two sample grids. On every
//! tile the solution is a power series whose coefficients follow directly from
//! the series along the tile's bottom and left edges, so the whole kernel is
//! computed by sweeping anti-diagonals of tiles and passing only edge series
//! forward.
//!
//! # Layout
//!
//! - [`path`]: time series, increments and the per-tile coefficients.
//! - [`series`]: per-tile coefficient matrices, edge series and evaluation.
//! - [`wavefront`]: the anti-diagonal propagation engine.
//! - [`truncation`]: truncation-order selection and a-priori error bounds.
//! - [`gram`]: Gram matrices over families of series.
//! - [`oracles`]: slow, independent reference solvers used for validation.
//! - [`datagen`]: deterministic synthetic inputs.
//!
//! The crate is `no_std` (it needs `alloc`). The `parallel` feature pulls in
//! `std` and `rayon` and lets diagonals and Gram entries run concurrently;
//! results are bit-identical to the sequential schedule.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod datagen;
pub mod error;
pub mod gram;
pub mod linalg;
pub mod oracles;
pub mod path;
pub mod series;
pub mod truncation;
pub mod wavefront;

pub use error::{Error, Result};
pub use gram::{gram_matrix, gram_matrix_with, mape, GramResult, Mape};
pub use path::{IncrementTable, TileGrid, TimeSeries};
pub use series::{BoundarySeries, CoeffMatrix, WeightTable};
pub use truncation::{ErrorBoundInputs, TruncationPolicy};
pub use wavefront::{propagate, propagate_grid, Execution, KernelResult, Propagator};

/// Largest supported truncation order. Beyond this `1/(N!)²` underflows `f64`.
pub const MAX_ORDER: usize = 64;
