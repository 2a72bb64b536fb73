//! On-demand validation suites comparing the propagation engine with
//! independent oracles.

use std::fmt;

use sigkernel_core::datagen::Xoshiro256;
use sigkernel_core::oracles::{bessel_series_kernel, goursat_fd_solve, truncated_signature_kernel, two_tile_closed_form};
use sigkernel_core::truncation::gram_error_bound;
use sigkernel_core::{ErrorBoundInputs, Execution, Propagator, TimeSeries, WeightTable};

use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    ClosedForm,
    OracleTriangle,
    Bound,
    Invariance,
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::ClosedForm => "closed-form",
            Suite::OracleTriangle => "oracle-triangle",
            Suite::Bound => "bound",
            Suite::Invariance => "invariance",
        })
    }
}

pub const CLOSED_FORM_RHOS: [f64; 7] = [-4.0, -1.0, -0.1, 0.0, 0.1, 1.0, 4.0];
pub const CLOSED_FORM_ORDER: usize = 24;
pub const BESSEL_TOL: f64 = 1e-12;
pub const TWO_TILE_TOL: f64 = 1e-10;
pub const TRIANGLE_ORDER: usize = 24;
pub const TRIANGLE_DEPTH: usize = 20;
pub const TRIANGLE_REFINEMENT: usize = 64;
pub const TRIANGLE_MAX_LEN: usize = 10;
pub const TRIANGLE_MAX_STEP: f64 = 0.8;
pub const TRIANGLE_SIGNATURE_TOL: f64 = 1e-8;
pub const TRIANGLE_FD_TOL: f64 = 1e-4;
pub const BOUND_ORDERS: [usize; 3] = [8, 12, 16];
pub const SYMMETRY_TOL: f64 = 1e-12;
pub const REFINEMENT_TOL: f64 = 1e-10;

/// Weight entry negated by the fault-injection hook.
pub const FAULT_ENTRY: (usize, usize) = (1, 1);

#[derive(Clone, Debug)]
pub struct ValidateOptions {
    pub seed: u64,
    pub cases: usize,
    /// Replaces every check's own tolerance when set.
    pub tol: Option<f64>,
    pub inject_fault: bool,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            seed: sigkernel_core::datagen::DEFAULT_SEED,
            cases: 100,
            tol: None,
            inject_fault: false,
        }
    }
}

/// One named check: the largest error seen over its cases.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub cases: usize,
    pub max_error: f64,
    pub tolerance: f64,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.max_error <= self.tolerance
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<40} cases={:<4} max_error={:.3e} tol={:.1e}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.cases,
            self.max_error,
            self.tolerance
        )
    }
}

#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub suite: Suite,
    pub checks: Vec<CheckReport>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckReport::passed)
    }
}

struct Checker<'a> {
    opts: &'a ValidateOptions,
    checks: Vec<CheckReport>,
}

impl Checker<'_> {
    fn engine(&self, order: usize) -> Result<Propagator> {
        let weights = WeightTable::new(order)?;
        let weights = if self.opts.inject_fault {
            weights.with_flipped_entry(FAULT_ENTRY.0, FAULT_ENTRY.1)
        } else {
            weights
        };
        Ok(Propagator::with_weights(weights))
    }

    fn record(&mut self, name: impl Into<String>, errors: impl IntoIterator<Item = f64>, tolerance: f64) {
        let mut cases = 0;
        let mut max_error = 0.0f64;
        for e in errors {
            cases += 1;
            // NaN counts as an unbounded error
            max_error = if e.is_nan() { f64::INFINITY } else { max_error.max(e) };
        }
        self.checks.push(CheckReport {
            name: name.into(),
            cases,
            max_error,
            tolerance: self.opts.tol.unwrap_or(tolerance),
        });
    }
}

/// Random path starting at the origin whose increments lie in the ball of
/// radius `max_step`.
pub fn random_walk(rng: &mut Xoshiro256, len: usize, dim: usize, max_step: f64) -> TimeSeries {
    let mut data = vec![0.0; dim];
    for k in 1..len {
        let dir: Vec<f64> = (0..dim).map(|_| rng.next_gaussian()).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        let radius = max_step * rng.next_uniform().powf(1.0 / dim as f64);
        for c in 0..dim {
            let prev = data[(k - 1) * dim + c];
            data.push(prev + radius * dir[c] / norm);
        }
    }
    TimeSeries::from_flat(dim, data).expect("finite by construction")
}

fn uniform(rng: &mut Xoshiro256, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.next_uniform()
}

fn below(rng: &mut Xoshiro256, n: usize) -> usize {
    (rng.next_u64() % n as u64) as usize
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

pub fn run_suite(suite: Suite, opts: &ValidateOptions) -> Result<SuiteReport> {
    let mut c = Checker { opts, checks: Vec::new() };
    let mut rng = Xoshiro256::seed_from_u64(opts.seed);
    match suite {
        Suite::ClosedForm => closed_form(&mut c, &mut rng)?,
        Suite::OracleTriangle => oracle_triangle(&mut c, &mut rng)?,
        Suite::Bound => bound(&mut c, &mut rng)?,
        Suite::Invariance => invariance(&mut c, &mut rng)?,
    }
    Ok(SuiteReport { suite, checks: c.checks })
}

fn closed_form(c: &mut Checker, rng: &mut Xoshiro256) -> Result<()> {
    let engine = c.engine(CLOSED_FORM_ORDER)?;
    let unit = TimeSeries::from_scalars(&[0.0, 1.0])?;
    for rho in CLOSED_FORM_RHOS {
        let y = TimeSeries::from_scalars(&[0.0, rho])?;
        let v = engine.kernel(&unit, &y)?.value;
        let err = (v - bessel_series_kernel(rho, CLOSED_FORM_ORDER)).abs();
        c.record(format!("single tile rho={rho}"), [err], BESSEL_TOL);
    }
    let mut vs_two_tile = Vec::new();
    let mut vs_merged = Vec::new();
    for _ in 0..c.opts.cases {
        let a = uniform(rng, -1.0, 1.0);
        let b1 = uniform(rng, -1.0, 1.0);
        let b2 = uniform(rng, -1.0, 1.0);
        let x = TimeSeries::from_scalars(&[0.0, a])?;
        let y = TimeSeries::from_scalars(&[0.0, b1, b1 + b2])?;
        let v = engine.kernel(&x, &y)?.value;
        vs_two_tile.push((v - two_tile_closed_form(a * b1, a * b2, CLOSED_FORM_ORDER)).abs());
        vs_merged.push((v - bessel_series_kernel(a * (b1 + b2), CLOSED_FORM_ORDER)).abs());
    }
    c.record("two tiles vs closed form", vs_two_tile, TWO_TILE_TOL);
    c.record("two tiles vs merged segment", vs_merged, TWO_TILE_TOL);
    Ok(())
}

fn oracle_triangle(c: &mut Checker, rng: &mut Xoshiro256) -> Result<()> {
    let engine = c.engine(TRIANGLE_ORDER)?;
    let (mut sig, mut fd_fast, mut fd_sig) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..c.opts.cases {
        let len = 2 + below(rng, TRIANGLE_MAX_LEN - 1);
        let x = random_walk(rng, len, 2, TRIANGLE_MAX_STEP);
        let y = random_walk(rng, len, 2, TRIANGLE_MAX_STEP);
        let fast = engine.kernel(&x, &y)?.value;
        let s = truncated_signature_kernel(&x, &y, TRIANGLE_DEPTH)?;
        let f = goursat_fd_solve(&x, &y, TRIANGLE_REFINEMENT)?;
        sig.push(rel(fast, s));
        fd_fast.push((f - fast).abs());
        fd_sig.push((f - s).abs());
    }
    c.record("propagate vs truncated signature", sig, TRIANGLE_SIGNATURE_TOL);
    c.record("finite differences vs propagate (abs)", fd_fast, TRIANGLE_FD_TOL);
    c.record("finite differences vs signature (abs)", fd_sig, TRIANGLE_FD_TOL);
    Ok(())
}

/// Scales a pair so that `(ℓ−1)²·max|δ| ≤ 1`.
pub fn normalise_pair(x: &TimeSeries, y: &TimeSeries) -> Result<(TimeSeries, TimeSeries)> {
    let lp = (x.len().max(y.len()) - 1) as f64;
    let big_x = sigkernel_core::path::max_abs_rho(x, y)? * lp * lp;
    if big_x <= 1.0 {
        return Ok((x.clone(), y.clone()));
    }
    let s = 1.0 / big_x.sqrt();
    Ok((x.scaled(s), y.scaled(s)))
}

fn bound(c: &mut Checker, rng: &mut Xoshiro256) -> Result<()> {
    let reference = Propagator::new(sigkernel_core::MAX_ORDER)?;
    let engines: Vec<Propagator> = BOUND_ORDERS.iter().map(|&n| c.engine(n)).collect::<Result<_>>()?;
    let mut ratios = vec![Vec::new(); BOUND_ORDERS.len()];
    for _ in 0..c.opts.cases {
        let len = 2 + below(rng, 7);
        let dim = 1 + below(rng, 3);
        let x = random_walk(rng, len, dim, 1.0);
        let y = random_walk(rng, len, dim, 1.0);
        let (x, y) = normalise_pair(&x, &y)?;
        let rho = sigkernel_core::path::max_abs_rho(&x, &y)?;
        let exact = reference.kernel(&x, &y)?.value;
        for (slot, (engine, &order)) in engines.iter().zip(&BOUND_ORDERS).enumerate() {
            let err = (engine.kernel(&x, &y)?.value - exact).abs();
            let b = gram_error_bound(&ErrorBoundInputs { family_size: 1, len, max_abs_rho: rho, order })?;
            // err ≤ bound, reported as the excess over the bound
            ratios[slot].push(err - b);
        }
    }
    for (r, order) in ratios.into_iter().zip(BOUND_ORDERS) {
        c.record(format!("error minus bound, N={order}"), r, 0.0);
    }
    Ok(())
}

fn invariance(c: &mut Checker, rng: &mut Xoshiro256) -> Result<()> {
    let engine = c.engine(TRIANGLE_ORDER)?;
    let parallel = engine.clone().with_execution(Execution::Parallel);
    let (mut sym, mut refine, mut det, mut pos) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for _ in 0..c.opts.cases {
        let len = 2 + below(rng, 9);
        let dim = 1 + below(rng, 3);
        let x = random_walk(rng, len, dim, 1.0);
        let len_y = 2 + below(rng, 9);
        let y = random_walk(rng, len_y, dim, 1.0);
        let a = engine.kernel(&x, &y)?.value;
        let b = engine.kernel(&y, &x)?.value;
        sym.push(rel(b, a));

        let k = below(rng, len - 1);
        let t = uniform(rng, 0.05, 0.95);
        let mut pts: Vec<Vec<f64>> = x.points().map(<[f64]>::to_vec).collect();
        let inner: Vec<f64> = pts[k].iter().zip(&pts[k + 1]).map(|(p, q)| p + t * (q - p)).collect();
        pts.insert(k + 1, inner);
        let refined = TimeSeries::from_points(&pts)?;
        refine.push(rel(engine.kernel(&refined, &y)?.value, a));

        let p = parallel.kernel(&x, &y)?.value;
        det.push(if p.to_bits() == a.to_bits() { 0.0 } else { f64::INFINITY });

        let s = engine.kernel(&x, &x)?.value;
        pos.push((1.0 - s).max(0.0));
    }
    c.record("symmetry", sym, SYMMETRY_TOL);
    c.record("collinear refinement", refine, REFINEMENT_TOL);
    c.record("parallel sweep bit-identical", det, 0.0);
    c.record("self kernel at least one", pos, 0.0);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(inject_fault: bool) -> ValidateOptions {
        ValidateOptions { cases: 10, inject_fault, ..ValidateOptions::default() }
    }

    #[test]
    fn suites_pass_on_a_correct_build() {
        for suite in [Suite::ClosedForm, Suite::OracleTriangle, Suite::Bound, Suite::Invariance] {
            let report = run_suite(suite, &quick(false)).unwrap();
            assert!(report.passed(), "{suite}: {:#?}", report.checks);
        }
    }

    #[test]
    fn injected_fault_is_caught() {
        for suite in [Suite::ClosedForm, Suite::OracleTriangle] {
            assert!(!run_suite(suite, &quick(true)).unwrap().passed(), "{suite}");
        }
    }

    #[test]
    fn random_walk_respects_step_bound() {
        let mut rng = Xoshiro256::seed_from_u64(3);
        let x = random_walk(&mut rng, 200, 3, 0.8);
        let inc = x.increments().unwrap();
        assert!(inc.chunks(3).all(|v| v.iter().map(|a| a * a).sum::<f64>().sqrt() <= 0.8 + 1e-12));
    }
}
