//! Truncation-order selection and a-priori error bounds.

use crate::error::{Error, Result};
use crate::MAX_ORDER;

/// Smallest order considered by the adaptive search.
pub const SEARCH_MIN_ORDER: usize = 8;
/// Largest order considered by the adaptive search.
pub const SEARCH_MAX_ORDER: usize = MAX_ORDER;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TruncationPolicy {
    /// Same order `N` on every tile.
    Fixed(usize),
    /// Order chosen per kernel evaluation from the worst tile.
    Adaptive { tol: f64 },
}

impl TruncationPolicy {
    pub const DEFAULT_FIXED_ORDER: usize = 7;
    pub const DEFAULT_TOL: f64 = 1e-12;

    pub fn fixed(order: usize) -> Result<Self> {
        if order == 0 || order > MAX_ORDER {
            return Err(Error::InvalidArgument(alloc::format!(
                "fixed order must lie in 1..={MAX_ORDER}, got {order}"
            )));
        }
        Ok(Self::Fixed(order))
    }

    pub fn adaptive(tol: f64) -> Result<Self> {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Error::invalid("tolerance must be positive and finite"));
        }
        Ok(Self::Adaptive { tol })
    }
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self::Fixed(Self::DEFAULT_FIXED_ORDER)
    }
}

/// `I₀(x) = Σ (x/2)^{2k} / (k!)²`, summed until the next term drops below
/// machine epsilon relative to the partial sum.
pub fn bessel_i0(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::invalid("bessel_i0 needs a non-negative argument"));
    }
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= q / (k * k);
        if term <= f64::EPSILON * sum || !sum.is_finite() {
            return Ok(sum + term);
        }
        sum += term;
        k += 1.0;
    }
}

/// Size of the first omitted band of a unit-boundary tile with coefficient
/// `max_abs_rho` truncated at `order`: the entries of row and column `N+1`,
/// which reduce to `2·|δ|^{N+1} / ((N+1)!)²`.
pub fn tail_estimate(max_abs_rho: f64, order: usize) -> f64 {
    let r = max_abs_rho.abs();
    let mut term = 1.0;
    for t in 1..=order + 1 {
        let t = t as f64;
        term *= r / (t * t);
    }
    2.0 * term
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OrderChoice {
    pub order: usize,
    /// False when no order in the search range met the tolerance.
    pub converged: bool,
}

/// Smallest order in `8..=64` whose [`tail_estimate`] is below `tol`.
pub fn estimate_order(max_abs_rho: f64, tol: f64) -> OrderChoice {
    (SEARCH_MIN_ORDER..=SEARCH_MAX_ORDER)
        .find(|&n| tail_estimate(max_abs_rho, n) < tol)
        .map(|order| OrderChoice { order, converged: true })
        .unwrap_or(OrderChoice {
            order: SEARCH_MAX_ORDER,
            converged: false,
        })
}

/// Inputs of the Gram-matrix truncation bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorBoundInputs {
    /// Family size `m`.
    pub family_size: usize,
    /// Common series length `ℓ`.
    pub len: usize,
    /// Largest bare `|⟨Δ_k x^(i), Δ_l x^(j)⟩|` over all pairs and tiles. The
    /// bound itself is stated for the PDE coefficient on the unit square,
    /// `X = (ℓ−1)²·max_abs_rho`.
    pub max_abs_rho: f64,
    pub order: usize,
}

/// Frobenius-norm bound on the order-`N` Gram truncation error:
/// `γ · X^{N+1} · ζ_N / ((N+1)!)²` with `X = (ℓ−1)²·max|δ|` and
/// `γ = (m/2) Π_{ν=0}^{2ℓ−2} I₀(2√(νX)/(ℓ−1))` and
/// `ζ_N = (1 + (2ℓ−2)/(N+2)) · (2/(ℓ−1))^{N+1}`.
pub fn gram_error_bound(inp: &ErrorBoundInputs) -> Result<f64> {
    if inp.family_size == 0 || inp.len < 2 {
        return Err(Error::invalid("the bound needs m ≥ 1 and ℓ ≥ 2"));
    }
    if !(inp.max_abs_rho >= 0.0) {
        return Err(Error::invalid("max_abs_rho must be non-negative"));
    }
    let lp = (inp.len - 1) as f64;
    let x = lp * lp * inp.max_abs_rho;
    let mut gamma = inp.family_size as f64 / 2.0;
    for nu in 0..=(2 * inp.len - 2) {
        gamma *= bessel_i0(2.0 * libm::sqrt(nu as f64 * x) / lp)?;
    }
    let n = inp.order as f64;
    let mut power = 1.0;
    for t in 1..=inp.order + 1 {
        let t = t as f64;
        power *= x * (2.0 / lp) / (t * t);
    }
    let zeta_prefactor = 1.0 + (2.0 * lp) / (n + 2.0);
    Ok(gamma * zeta_prefactor * power)
}
