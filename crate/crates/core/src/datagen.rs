//! Deterministic synthetic time series.
//!
//! Randomness comes from xoshiro256** seeded through SplitMix64, both
//! implemented here so a seed reproduces the same bits on every platform.
//! Uniforms are `((x >> 11) + 1)·2⁻⁵³ ∈ (0, 1]`; Gaussians use the cosine
//! branch of Box–Muller, `√(−2 ln u₁)·cos(2π u₂)`, consuming two uniforms per
//! draw. Transcendentals go through `libm`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::Cholesky;
use crate::path::TimeSeries;

/// Largest length accepted by [`fbm`].
pub const FBM_MAX_LEN: usize = 4096;

/// Seed used by callers that do not supply one.
pub const DEFAULT_SEED: u64 = 0x5eed;

/// SplitMix64 step, used to expand a seed into generator state.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// xoshiro256** generator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Xoshiro256 {
    s: [u64; 4],
}

impl Xoshiro256 {
    pub fn seed_from_u64(seed: u64) -> Self {
        let mut sm = seed;
        Self {
            s: [
                splitmix64(&mut sm),
                splitmix64(&mut sm),
                splitmix64(&mut sm),
                splitmix64(&mut sm),
            ],
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let result = self.s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform on `(0, 1]`.
    pub fn next_uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_gaussian(&mut self) -> f64 {
        let u1 = self.next_uniform();
        let u2 = self.next_uniform();
        libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * PI * u2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GenKind {
    Brownian,
    Fbm { hurst: f64 },
    NearPeriodic { period: f64, amplitude: f64, noise: f64 },
}

/// Full description of a generated series; the output is a pure function of it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GenSpec {
    pub kind: GenKind,
    pub len: usize,
    pub dim: usize,
    pub seed: u64,
}

impl GenSpec {
    pub fn generate(&self) -> Result<TimeSeries> {
        match self.kind {
            GenKind::Brownian => brownian(self.len, self.dim, self.seed),
            GenKind::Fbm { hurst } => fbm(self.len, self.dim, hurst, self.seed),
            GenKind::NearPeriodic {
                period,
                amplitude,
                noise,
            } => near_periodic(self.len, self.dim, period, amplitude, noise, self.seed),
        }
    }
}

fn check_shape(len: usize, dim: usize) -> Result<()> {
    if len < 2 || dim == 0 {
        return Err(Error::invalid("generated series need len ≥ 2 and dim ≥ 1"));
    }
    Ok(())
}

/// Brownian motion on the uniform grid of `[0,1]` started at the origin.
/// Draws run step by step, coordinates innermost.
pub fn brownian(len: usize, dim: usize, seed: u64) -> Result<TimeSeries> {
    check_shape(len, dim)?;
    let mut rng = Xoshiro256::seed_from_u64(seed);
    let scale = libm::sqrt(1.0 / (len - 1) as f64);
    let mut data = vec![0.0; len * dim];
    for k in 1..len {
        for c in 0..dim {
            data[k * dim + c] = data[(k - 1) * dim + c] + scale * rng.next_gaussian();
        }
    }
    TimeSeries::from_flat(dim, data)
}

/// `½(s^{2H} + t^{2H} − |s − t|^{2H})`.
pub fn fbm_covariance(s: f64, t: f64, hurst: f64) -> f64 {
    let h2 = 2.0 * hurst;
    0.5 * (libm::pow(s, h2) + libm::pow(t, h2) - libm::pow((s - t).abs(), h2))
}

/// Fractional Brownian motion via Cholesky factorisation of its covariance on
/// the nonzero grid times; the origin is prepended. Coordinates are drawn one
/// after another, each from `len − 1` fresh Gaussians.
pub fn fbm(len: usize, dim: usize, hurst: f64, seed: u64) -> Result<TimeSeries> {
    check_shape(len, dim)?;
    if !(hurst > 0.0 && hurst < 1.0) {
        return Err(Error::invalid("the Hurst index must lie in (0, 1)"));
    }
    if len > FBM_MAX_LEN {
        return Err(Error::InvalidArgument(alloc::format!(
            "fbm length {len} exceeds {FBM_MAX_LEN}"
        )));
    }
    let n = len - 1;
    let times: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64).collect();
    let mut cov = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let c = fbm_covariance(times[i], times[j], hurst);
            cov[i * n + j] = c;
            cov[j * n + i] = c;
        }
    }
    let chol = Cholesky::new(&cov, n)?;
    let mut rng = Xoshiro256::seed_from_u64(seed);
    let mut data = vec![0.0; len * dim];
    for c in 0..dim {
        let z: Vec<f64> = (0..n).map(|_| rng.next_gaussian()).collect();
        for (i, v) in chol.mul_lower(&z).into_iter().enumerate() {
            data[(i + 1) * dim + c] = v;
        }
    }
    TimeSeries::from_flat(dim, data)
}

/// Per coordinate, `amplitude·sin(2π t/period + φ_c)` plus Gaussian noise of
/// standard deviation `noise`, on the uniform grid `t = i/(len−1)`. Phases
/// `φ_c = 2π u` are drawn first, then the noise step by step. When a period
/// spans a whole number `p` of grid steps the phase argument uses `i mod p`,
/// so noiseless output repeats bit for bit.
pub fn near_periodic(
    len: usize,
    dim: usize,
    period: f64,
    amplitude: f64,
    noise: f64,
    seed: u64,
) -> Result<TimeSeries> {
    check_shape(len, dim)?;
    if !(period > 0.0 && period.is_finite()) {
        return Err(Error::invalid("period must be positive"));
    }
    if !(noise >= 0.0 && noise.is_finite() && amplitude.is_finite()) {
        return Err(Error::invalid("noise must be non-negative and amplitude finite"));
    }
    let mut rng = Xoshiro256::seed_from_u64(seed);
    let phases: Vec<f64> = (0..dim).map(|_| 2.0 * PI * rng.next_uniform()).collect();
    let span = (len - 1) as f64;
    let steps = period * span;
    let whole = libm::round(steps);
    let wrap = (whole >= 1.0 && (steps - whole).abs() <= 1e-9 * steps).then_some(whole as usize);
    let mut data = vec![0.0; len * dim];
    for i in 0..len {
        let idx = wrap.map_or(i, |p| i % p);
        let t = idx as f64 / span;
        for c in 0..dim {
            data[i * dim + c] = amplitude * libm::sin(2.0 * PI * t / period + phases[c]) + noise * rng.next_gaussian();
        }
    }
    TimeSeries::from_flat(dim, data)
}
