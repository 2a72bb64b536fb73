//! Per-tile power-series algebra.
//!
//! On a tile with coefficient `δ` and local coordinates `(u, v) ∈ [0,1]²`, the
//! kernel is `Σ c[i][j] u^i v^j` with
//!
//! ```text
//! c[i][j] = δ^min(i,j) · b[i][j] · w[i][j],
//! b[i][j] = alpha[j − i]  if j ≥ i      (left-edge series, powers of v)
//!           beta[i − j]   if i > j      (bottom-edge series, powers of u)
//! w[i][j] = |i − j|! / (max(i,j)! · min(i,j)!)
//! ```
//!
//! The tile's top edge (`v = 1`) is the row-sum series in `u`; it becomes the
//! bottom-edge series of the tile above. The right edge (`u = 1`) is the
//! column-sum series in `v`, the left-edge series of the tile to the right.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::MAX_ORDER;

/// Relative tolerance on the corner value shared by the two entering edge series.
pub const CORNER_TOL: f64 = 1e-9;

/// Which local variable a [`BoundarySeries`] is a power series in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    /// Powers of `u`: the series along a bottom or top edge.
    U,
    /// Powers of `v`: the series along a left or right edge.
    V,
}

/// Coefficients `a[0..=N]` of a univariate series along one tile edge.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundarySeries {
    axis: Axis,
    coeffs: Vec<f64>,
}

impl BoundarySeries {
    pub fn new(axis: Axis, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.len() > MAX_ORDER + 1 {
            return Err(Error::InvalidArgument(alloc::format!(
                "boundary series needs between 1 and {} coefficients, got {}",
                MAX_ORDER + 1,
                coeffs.len()
            )));
        }
        Ok(Self { axis, coeffs })
    }

    /// The constant-one series `(1, 0, …, 0)` carried by the domain edges.
    pub fn unit(axis: Axis, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = 1.0;
        Self { axis, coeffs }
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Value at the edge's starting corner.
    pub fn corner(&self) -> f64 {
        self.coeffs[0]
    }

    /// Horner evaluation at local offset `x`.
    pub fn eval(&self, x: f64) -> f64 {
        horner(&self.coeffs, x)
    }
}

/// `(1, x, x², …, x^N)` with `0⁰ = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerVector(Vec<f64>);

impl PowerVector {
    pub fn new(x: f64, order: usize) -> Self {
        let mut v = vec![0.0; order + 1];
        fill_powers(x, &mut v);
        Self(v)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[inline]
pub(crate) fn fill_powers(x: f64, out: &mut [f64]) {
    let mut p = 1.0;
    for slot in out.iter_mut() {
        *slot = p;
        p *= x;
    }
}

#[inline]
fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// A square `(N+1)×(N+1)` table, row-major. Used for coefficient matrices and
/// for the `A`, `B` factor tables.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffMatrix {
    order: usize,
    entries: Vec<f64>,
}

impl CoeffMatrix {
    pub fn zeros(order: usize) -> Self {
        Self {
            order,
            entries: vec![0.0; (order + 1) * (order + 1)],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("coefficient matrix must be square and non-empty"));
        }
        Ok(Self {
            order: n - 1,
            entries: rows.concat(),
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * (self.order + 1) + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.entries[i * (self.order + 1) + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n1 = self.order + 1;
        &self.entries[i * n1..(i + 1) * n1]
    }

    pub fn rows(&self) -> impl DoubleEndedIterator<Item = &[f64]> + ExactSizeIterator {
        self.entries.chunks_exact(self.order + 1)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|c| c.is_finite())
    }
}

/// The factorial weights `w[i][j]` for one truncation order.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightTable {
    order: usize,
    w: Vec<f64>,
}

impl WeightTable {
    pub fn new(order: usize) -> Result<Self> {
        check_order(order)?;
        let n1 = order + 1;
        let mut w = vec![0.0; n1 * n1];
        for i in 0..n1 {
            for j in 0..n1 {
                w[i * n1 + j] = weight(i, j);
            }
        }
        Ok(Self { order, w })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.w[i * (self.order + 1) + j]
    }

    #[inline]
    pub(crate) fn row(&self, i: usize) -> &[f64] {
        let n1 = self.order + 1;
        &self.w[i * n1..(i + 1) * n1]
    }

    /// Negates entry `(i, j)`. Fault-injection hook for negative-control runs;
    /// a table altered this way no longer produces the kernel.
    #[doc(hidden)]
    pub fn with_flipped_entry(mut self, i: usize, j: usize) -> Self {
        let n1 = self.order + 1;
        self.w[i * n1 + j] = -self.w[i * n1 + j];
        self
    }
}

/// `|i−j|! / (max(i,j)!·min(i,j)!)`, evaluated as `1 / (min! · (max−min+1)···max)`.
fn weight(i: usize, j: usize) -> f64 {
    let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
    let mut denom = 1.0;
    for t in 1..=lo {
        denom *= t as f64;
    }
    for t in (hi - lo + 1)..=hi {
        denom *= t as f64;
    }
    1.0 / denom
}

pub(crate) fn check_order(order: usize) -> Result<()> {
    if order > MAX_ORDER {
        return Err(Error::InvalidArgument(alloc::format!(
            "truncation order {order} exceeds the maximum of {MAX_ORDER}"
        )));
    }
    Ok(())
}

pub fn build_w(order: usize) -> Result<WeightTable> {
    WeightTable::new(order)
}

/// `a[i][j] = δ^min(i,j)`, with `0⁰ = 1`.
pub fn build_a(delta: f64, order: usize) -> Result<CoeffMatrix> {
    check_order(order)?;
    let mut pows = vec![0.0; order + 1];
    fill_powers(delta, &mut pows);
    let mut a = CoeffMatrix::zeros(order);
    for i in 0..=order {
        for j in 0..=order {
            a.set(i, j, pows[i.min(j)]);
        }
    }
    Ok(a)
}

/// Toeplitz table with `alpha` on and above the diagonal and `beta` below it.
///
/// `alpha` is the left-edge series (powers of `v`), `beta` the bottom-edge
/// series (powers of `u`). Their leading coefficients are both the value at
/// the tile's lower-left corner and must agree to [`CORNER_TOL`].
pub fn build_b(alpha: &BoundarySeries, beta: &BoundarySeries, order: usize) -> Result<CoeffMatrix> {
    build_b_with_tolerance(alpha, beta, order, CORNER_TOL)
}

pub fn build_b_with_tolerance(
    alpha: &BoundarySeries,
    beta: &BoundarySeries,
    order: usize,
    tol: f64,
) -> Result<CoeffMatrix> {
    check_inputs(alpha, beta, order)?;
    check_corner(alpha, beta, tol)?;
    let mut b = CoeffMatrix::zeros(order);
    for i in 0..=order {
        for j in 0..=order {
            let v = if j >= i {
                alpha.coeffs[j - i]
            } else {
                beta.coeffs[i - j]
            };
            b.set(i, j, v);
        }
    }
    Ok(b)
}

fn check_inputs(alpha: &BoundarySeries, beta: &BoundarySeries, order: usize) -> Result<()> {
    check_order(order)?;
    if alpha.axis != Axis::V || beta.axis != Axis::U {
        return Err(Error::invalid(
            "alpha must be a left-edge series in v and beta a bottom-edge series in u",
        ));
    }
    if alpha.order() != order || beta.order() != order {
        return Err(Error::InvalidArgument(alloc::format!(
            "edge series orders ({}, {}) do not match truncation order {order}",
            alpha.order(),
            beta.order()
        )));
    }
    Ok(())
}

pub(crate) fn check_corner(alpha: &BoundarySeries, beta: &BoundarySeries, tol: f64) -> Result<()> {
    corner_consistent(&alpha.coeffs, &beta.coeffs, tol)
}

/// Corner agreement relative to the larger of 1 and the two series' ℓ1 norms.
#[inline]
pub(crate) fn corner_consistent(alpha: &[f64], beta: &[f64], tol: f64) -> Result<()> {
    let (a0, b0) = (alpha[0], beta[0]);
    let diff = (a0 - b0).abs();
    if diff <= tol {
        return Ok(());
    }
    let l1 = |s: &[f64]| s.iter().map(|c| c.abs()).sum::<f64>();
    let scale = 1.0f64.max(l1(alpha)).max(l1(beta));
    if diff <= tol * scale {
        Ok(())
    } else {
        Err(Error::InconsistentBoundary {
            left_corner: a0,
            bottom_corner: b0,
        })
    }
}

/// Tile coefficients `A ⊙ B ⊙ W` for coefficient `delta` and entering edge
/// series `alpha` (left, in `v`) and `beta` (bottom, in `u`).
pub fn tile_coeffs(
    delta: f64,
    alpha: &BoundarySeries,
    beta: &BoundarySeries,
    weights: &WeightTable,
) -> Result<CoeffMatrix> {
    let order = weights.order();
    let a = build_a(delta, order)?;
    let b = build_b(alpha, beta, order)?;
    let mut c = CoeffMatrix::zeros(order);
    for i in 0..=order {
        for j in 0..=order {
            c.set(i, j, (a.get(i, j) * b.get(i, j)) * weights.get(i, j));
        }
    }
    Ok(c)
}

/// `Σ c[i][j] u^i v^j` by nested Horner recurrence.
pub fn eval_series(c: &CoeffMatrix, u: f64, v: f64) -> f64 {
    c.rows().rev().fold(0.0, |acc, row| acc * u + horner(row, v))
}

/// Restriction to the top edge `v = 1`: row sums, a series in `u`.
pub fn top_boundary(c: &CoeffMatrix) -> BoundarySeries {
    let coeffs = c.rows().map(|row| row.iter().fold(0.0, |s, &x| s + x)).collect();
    BoundarySeries {
        axis: Axis::U,
        coeffs,
    }
}

/// Restriction to the right edge `u = 1`: column sums, a series in `v`.
pub fn right_boundary(c: &CoeffMatrix) -> BoundarySeries {
    let mut coeffs = vec![0.0; c.order() + 1];
    for row in c.rows() {
        for (acc, &x) in coeffs.iter_mut().zip(row) {
            *acc += x;
        }
    }
    BoundarySeries {
        axis: Axis::V,
        coeffs,
    }
}

/// Coefficients from the plain Neumann iteration `C_{n+1} = δ·S·C_n·T`, where
/// `S` shifts rows down dividing row `i` by `i` and `T` shifts columns right
/// dividing column `j` by `j`. Returns `Σ_{n ≤ iters} C_n` truncated to order `N`.
pub fn neumann_coeffs_slow(
    delta: f64,
    alpha: &BoundarySeries,
    beta: &BoundarySeries,
    order: usize,
    iters: usize,
) -> Result<CoeffMatrix> {
    check_inputs(alpha, beta, order)?;
    check_corner(alpha, beta, CORNER_TOL)?;
    if iters == 0 {
        return Err(Error::invalid("the Neumann iteration needs at least one step"));
    }
    // C_0 = alpha_j δ_{0i} + beta_i δ_{0j} − γ δ_{0i} δ_{0j} with γ = beta_0
    let mut term = CoeffMatrix::zeros(order);
    for j in 0..=order {
        term.set(0, j, alpha.coeffs[j]);
    }
    for i in 1..=order {
        term.set(i, 0, beta.coeffs[i]);
    }
    let mut total = term.clone();
    for _ in 0..iters {
        let shifted = shift_columns(&shift_rows(&term));
        term = scale(&shifted, delta);
        add_assign(&mut total, &term);
    }
    Ok(total)
}

/// `S·C`: row `i` of the result is row `i−1` of `C` divided by `i` (0/0 := 0).
fn shift_rows(c: &CoeffMatrix) -> CoeffMatrix {
    let n = c.order();
    let mut out = CoeffMatrix::zeros(n);
    for i in 1..=n {
        for j in 0..=n {
            out.set(i, j, c.get(i - 1, j) / i as f64);
        }
    }
    out
}

/// `C·T`: column `j` of the result is column `j−1` of `C` divided by `j`.
fn shift_columns(c: &CoeffMatrix) -> CoeffMatrix {
    let n = c.order();
    let mut out = CoeffMatrix::zeros(n);
    for i in 0..=n {
        for j in 1..=n {
            out.set(i, j, c.get(i, j - 1) / j as f64);
        }
    }
    out
}

fn scale(c: &CoeffMatrix, s: f64) -> CoeffMatrix {
    CoeffMatrix {
        order: c.order,
        entries: c.entries.iter().map(|x| x * s).collect(),
    }
}

fn add_assign(acc: &mut CoeffMatrix, c: &CoeffMatrix) {
    for (a, b) in acc.entries.iter_mut().zip(&c.entries) {
        *a += b;
    }
}

/// Coefficient of `u^{l+n} v^n` in `T^n(u^l)` on a tile with coefficient
/// `delta`: `δ^n · l! / ((l+n)! · n!)`.
pub fn monomial_propagation(delta: f64, power: usize, n: usize) -> f64 {
    let mut value = 1.0;
    for t in 1..=n {
        value *= delta / (t as f64 * (power + t) as f64);
    }
    value
}

/// Series for the tile above and the tile to the right.
#[derive(Clone, Debug, PartialEq)]
pub struct TileOutputs {
    /// Top edge (`v = 1`), a series in `u`.
    pub top: BoundarySeries,
    /// Right edge (`u = 1`), a series in `v`.
    pub right: BoundarySeries,
}
