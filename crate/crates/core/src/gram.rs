//! Gram matrices over families of time series.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Cholesky;
use crate::path::{pad_family, IncrementTable, TimeSeries};
use crate::truncation::{estimate_order, gram_error_bound, ErrorBoundInputs, TruncationPolicy};
use crate::wavefront::{Execution, Propagator};

/// Relative diagonal shift used by [`GramResult::is_psd`].
pub const PSD_TRACE_FLOOR: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct GramResult {
    size: usize,
    values: Vec<f64>,
    orders: Vec<usize>,
    /// False if an adaptive order saturated for some pair.
    pub orders_converged: bool,
    /// Largest `|δ|` over all pairs and tiles.
    pub max_abs_rho: f64,
    /// Common length after padding.
    pub len: usize,
    /// Frobenius error bound at the smallest order used.
    pub bound: f64,
    /// Largest live edge-series count over all entries.
    pub peak_live_series: usize,
}

impl GramResult {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.size + j]
    }

    /// Row-major values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Truncation order used for entry `(i, j)`.
    pub fn order(&self, i: usize, j: usize) -> usize {
        self.orders[i * self.size + j]
    }

    pub fn min_order(&self) -> usize {
        self.orders.iter().copied().min().unwrap_or(0)
    }

    pub fn max_order(&self) -> usize {
        self.orders.iter().copied().max().unwrap_or(0)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let n = self.size;
        (0..n).all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }

    /// Whether `G + 1e-8·trace(G)·I` admits a Cholesky factorisation.
    pub fn is_psd(&self) -> bool {
        let n = self.size;
        let trace: f64 = (0..n).map(|i| self.get(i, i)).sum();
        let mut shifted = self.values.clone();
        for i in 0..n {
            shifted[i * n + i] += PSD_TRACE_FLOOR * trace;
        }
        Cholesky::new(&shifted, n).is_ok()
    }
}

/// Sequential [`gram_matrix_with`].
pub fn gram_matrix(family: &[TimeSeries], policy: TruncationPolicy) -> Result<GramResult> {
    gram_matrix_with(family, policy, Execution::Sequential)
}

struct Entry {
    value: f64,
    order: usize,
    converged: bool,
    peak: usize,
}

/// Kernel values for every pair of `family`, padded to a common length.
/// Only `j ≥ i` is computed; the lower triangle is mirrored. With
/// [`Execution::Parallel`] entries run concurrently, each on a sequential
/// sweep, so the values are identical to the sequential schedule.
pub fn gram_matrix_with(
    family: &[TimeSeries],
    policy: TruncationPolicy,
    execution: Execution,
) -> Result<GramResult> {
    let first = family.first().ok_or_else(|| Error::invalid("the family is empty"))?;
    if let Some(bad) = family.iter().find(|ts| ts.dim() != first.dim()) {
        return Err(Error::InvalidArgument(alloc::format!(
            "mixed dimensions in family: {} vs {}",
            first.dim(),
            bad.dim()
        )));
    }
    let family = pad_family(family)?;
    let m = family.len();
    let len = family[0].len();
    let fixed = match policy {
        TruncationPolicy::Fixed(n) => Some(Propagator::new(n)?),
        TruncationPolicy::Adaptive { tol } => {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(Error::invalid("tolerance must be positive and finite"));
            }
            None
        }
    };
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i..m).map(move |j| (i, j))).collect();

    let entry = |&(i, j): &(usize, usize)| -> Result<(f64, Entry)> {
        let wrap = |e: Error| Error::GramEntry { row: i, col: j, source: Box::new(e) };
        let table = IncrementTable::new(&family[i], &family[j]).map_err(wrap)?;
        let rho = table.max_abs_rho();
        let (result, converged) = match (&fixed, policy) {
            (Some(p), _) => (p.run(&table, false), true),
            (None, TruncationPolicy::Adaptive { tol }) => {
                let choice = estimate_order(rho, tol);
                (
                    Propagator::new(choice.order).and_then(|p| p.run(&table, false)),
                    choice.converged,
                )
            }
            (None, TruncationPolicy::Fixed(_)) => unreachable!(),
        };
        let r = result.map_err(wrap)?;
        Ok((
            rho,
            Entry {
                value: r.value,
                order: r.order,
                converged,
                peak: r.peak_live_series,
            },
        ))
    };

    let entries: Vec<Result<(f64, Entry)>> = match execution {
        Execution::Sequential => pairs.iter().map(entry).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            pairs.par_iter().map(entry).collect()
        }
    };

    let mut values = vec![0.0; m * m];
    let mut orders = vec![0; m * m];
    let mut max_abs_rho = 0.0f64;
    let mut orders_converged = true;
    let mut peak_live_series = 0;
    for (&(i, j), e) in pairs.iter().zip(entries) {
        let (rho, e) = e?;
        max_abs_rho = max_abs_rho.max(rho);
        orders_converged &= e.converged;
        peak_live_series = peak_live_series.max(e.peak);
        for (a, b) in [(i, j), (j, i)] {
            values[a * m + b] = e.value;
            orders[a * m + b] = e.order;
        }
    }
    let min_order = orders.iter().copied().min().unwrap_or(0);
    let bound = if len >= 2 {
        gram_error_bound(&ErrorBoundInputs {
            family_size: m,
            len,
            max_abs_rho,
            order: min_order,
        })?
    } else {
        0.0
    };
    Ok(GramResult {
        size: m,
        values,
        orders,
        orders_converged,
        max_abs_rho,
        len,
        bound,
        peak_live_series,
    })
}

/// Outcome of [`mape`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mape {
    /// Mean relative error as a fraction.
    pub value: f64,
    /// Entries skipped because the reference was zero.
    pub excluded: usize,
}

/// Mean of `|g − r| / |r|` over entries with nonzero reference.
pub fn mape(values: &[f64], reference: &[f64]) -> Result<Mape> {
    if values.len() != reference.len() {
        return Err(Error::invalid("matrices differ in shape"));
    }
    let mut sum = 0.0;
    let mut used = 0usize;
    for (g, r) in values.iter().zip(reference) {
        if *r == 0.0 {
            continue;
        }
        sum += (g - r).abs() / r.abs();
        used += 1;
    }
    if used == 0 {
        return Err(Error::invalid("every reference entry is zero"));
    }
    Ok(Mape {
        value: sum / used as f64,
        excluded: values.len() - used,
    })
}
