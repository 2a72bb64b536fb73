//! Timing and memory scaling of the propagation engine.

use std::io::Write;
use std::time::Instant;

use sigkernel_core::datagen::brownian;
use sigkernel_core::oracles::signature_kernel_by_words;
use sigkernel_core::{Execution, Propagator};

use crate::error::Result;

/// Longest series for which the accuracy column is filled.
pub const ORACLE_MAX_LEN: usize = 64;
/// Signature level of the accuracy reference.
pub const ORACLE_DEPTH: usize = 21;

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub lengths: Vec<usize>,
    pub dims: Vec<usize>,
    pub order: usize,
    pub repeats: usize,
    pub seed: u64,
    pub execution: Execution,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub len: usize,
    pub dim: usize,
    pub order: usize,
    pub mean_seconds: f64,
    pub stdev_seconds: f64,
    pub peak_live_series: usize,
    /// Relative error against the truncated-signature reference.
    pub mape: Option<f64>,
}

pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    let engine = Propagator::new(cfg.order)?.with_execution(cfg.execution);
    let mut rows = Vec::new();
    for &dim in &cfg.dims {
        for &len in &cfg.lengths {
            let x = brownian(len, dim, cfg.seed)?;
            let y = brownian(len, dim, cfg.seed.wrapping_add(1))?;
            let mut times = Vec::with_capacity(cfg.repeats);
            let mut last = None;
            for _ in 0..cfg.repeats.max(1) {
                let start = Instant::now();
                let r = engine.kernel(&x, &y)?;
                times.push(start.elapsed().as_secs_f64());
                last = Some(r);
            }
            let r = last.expect("at least one repeat");
            let n = times.len() as f64;
            let mean = times.iter().sum::<f64>() / n;
            let var = if times.len() > 1 {
                times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            let mape = if len <= ORACLE_MAX_LEN {
                let reference = signature_kernel_by_words(&x, &y, ORACLE_DEPTH)?;
                Some((r.value - reference).abs() / reference.abs())
            } else {
                None
            };
            rows.push(BenchRow {
                len,
                dim,
                order: cfg.order,
                mean_seconds: mean,
                stdev_seconds: var.sqrt(),
                peak_live_series: r.peak_live_series,
                mape,
            });
        }
    }
    Ok(rows)
}

pub fn write_bench_csv(rows: &[BenchRow], out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "len,dim,order,mean_seconds,stdev_seconds,peak_live_series,mape")?;
    for r in rows {
        let mape = r.mape.map(|m| format!("{m:e}")).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{:e},{:e},{},{}",
            r.len, r.dim, r.order, r.mean_seconds, r.stdev_seconds, r.peak_live_series, mape
        )?;
    }
    Ok(())
}

/// Least-squares slope, intercept and R² of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, my - slope * mx, r2)
}

/// Parses `129`, `2^7+1` or `2^7` style length tokens.
pub fn parse_length(token: &str) -> Option<usize> {
    let t = token.trim();
    if let Some(rest) = t.strip_prefix("2^") {
        let (exp, plus) = match rest.split_once('+') {
            Some((e, p)) => (e, p.trim().parse::<usize>().ok()?),
            None => (rest, 0),
        };
        let exp: u32 = exp.trim().parse().ok()?;
        return 1usize.checked_shl(exp)?.checked_add(plus);
    }
    t.parse().ok()
}
