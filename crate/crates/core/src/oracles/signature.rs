//! Truncated signatures of piecewise-linear paths and their inner products.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::path::TimeSeries;

/// Default cap on the number of reals a single [`SignatureTensor`] may hold.
pub const DEFAULT_TENSOR_BUDGET: usize = 1 << 26;

/// Levels `0..=M` of a signature; level `m` holds `d^m` coordinates indexed by
/// words in base `d`, first letter most significant.
#[derive(Clone, Debug, PartialEq)]
pub struct SignatureTensor {
    dim: usize,
    levels: Vec<Vec<f64>>,
}

fn tensor_size(dim: usize, depth: usize) -> Option<usize> {
    let mut total = 0usize;
    let mut level = 1usize;
    for _ in 0..=depth {
        total = total.checked_add(level)?;
        level = level.checked_mul(dim)?;
    }
    Some(total)
}

fn segments(ts: &TimeSeries) -> impl Iterator<Item = Vec<f64>> + '_ {
    let d = ts.dim();
    (1..ts.len()).map(move |k| {
        let (a, b) = (ts.point(k - 1), ts.point(k));
        (0..d).map(|c| b[c] - a[c]).collect()
    })
}

impl SignatureTensor {
    /// Signature of the trivial path: `1` at level zero.
    pub fn identity(dim: usize, depth: usize, budget: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        let needed = tensor_size(dim, depth).unwrap_or(usize::MAX);
        if needed > budget {
            return Err(Error::ResourceExhausted { needed, budget });
        }
        let mut levels = Vec::with_capacity(depth + 1);
        let mut size = 1;
        for _ in 0..=depth {
            levels.push(vec![0.0; size]);
            size *= dim;
        }
        levels[0][0] = 1.0;
        Ok(Self { dim, levels })
    }

    /// Signature of `ts` truncated at level `depth`.
    pub fn of_path(ts: &TimeSeries, depth: usize, budget: usize) -> Result<Self> {
        let mut sig = Self::identity(ts.dim(), depth, budget)?;
        for inc in segments(ts) {
            sig.extend_by_segment(&inc);
        }
        Ok(sig)
    }

    /// Signature of one straight segment: level `m` is `Δ^{⊗m} / m!`.
    pub fn of_segment(inc: &[f64], depth: usize, budget: usize) -> Result<Self> {
        let mut sig = Self::identity(inc.len(), depth, budget)?;
        for m in 1..=depth {
            let prev = sig.levels[m - 1].clone();
            let level = &mut sig.levels[m];
            for (w, p) in prev.iter().enumerate() {
                for (c, x) in inc.iter().enumerate() {
                    level[w * inc.len() + c] = p * x / m as f64;
                }
            }
        }
        Ok(sig)
    }

    /// Chen product `self ⊗ other`: level `m` is `Σ_{p+q=m} self_p ⊗ other_q`.
    pub fn chen(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim || self.depth() != other.depth() {
            return Err(Error::invalid("Chen product needs equal dimension and depth"));
        }
        let mut out = self.clone();
        for m in 1..=self.depth() {
            let level = &mut out.levels[m];
            level.iter_mut().for_each(|v| *v = 0.0);
            for p in 0..=m {
                let (a, b) = (&self.levels[p], &other.levels[m - p]);
                for (i, x) in a.iter().enumerate() {
                    if *x == 0.0 {
                        continue;
                    }
                    let row = &mut level[i * b.len()..(i + 1) * b.len()];
                    for (r, y) in row.iter_mut().zip(b) {
                        *r += x * y;
                    }
                }
            }
        }
        Ok(out)
    }

    /// In-place `self ⊗ exp(Δ)`, evaluated per level with Horner's rule from
    /// the top level down so lower levels are still the old values when read.
    fn extend_by_segment(&mut self, inc: &[f64]) {
        let d = self.dim;
        let mut t = Vec::new();
        let mut next = Vec::new();
        for m in (1..=self.depth()).rev() {
            t.clear();
            t.push(1.0);
            for p in 1..=m {
                let scale = 1.0 / (m - p + 1) as f64;
                next.clear();
                next.resize(t.len() * d, 0.0);
                for (w, tw) in t.iter().enumerate() {
                    for (c, x) in inc.iter().enumerate() {
                        next[w * d + c] = tw * x * scale;
                    }
                }
                let sp = &self.levels[p];
                for (n, s) in next.iter_mut().zip(sp) {
                    *n += s;
                }
                core::mem::swap(&mut t, &mut next);
            }
            self.levels[m].copy_from_slice(&t);
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, m: usize) -> &[f64] {
        &self.levels[m]
    }

    /// `⟨S_m(self), S_m(other)⟩` for every level `m`.
    pub fn level_products(&self, other: &Self) -> Vec<f64> {
        self.levels
            .iter()
            .zip(&other.levels)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).sum())
            .collect()
    }
}

/// `Σ_{m≤M} ⟨S_m(x), S_m(y)⟩` through explicit signature tensors, capped at
/// [`DEFAULT_TENSOR_BUDGET`] reals per tensor.
pub fn truncated_signature_kernel(x: &TimeSeries, y: &TimeSeries, depth: usize) -> Result<f64> {
    truncated_signature_kernel_with_budget(x, y, depth, DEFAULT_TENSOR_BUDGET)
}

pub fn truncated_signature_kernel_with_budget(
    x: &TimeSeries,
    y: &TimeSeries,
    depth: usize,
    budget: usize,
) -> Result<f64> {
    check_dims(x, y)?;
    let sx = SignatureTensor::of_path(x, depth, budget)?;
    let sy = SignatureTensor::of_path(y, depth, budget)?;
    Ok(sx.level_products(&sy).iter().sum())
}

fn check_dims(x: &TimeSeries, y: &TimeSeries) -> Result<()> {
    if x.dim() != y.dim() {
        return Err(Error::InvalidArgument(alloc::format!(
            "dimension mismatch: {} vs {}",
            x.dim(),
            y.dim()
        )));
    }
    Ok(())
}

/// `⟨S_m(x), S_m(y)⟩` for `m = 0..=M` without forming any tensor.
///
/// Level `m` of a piecewise-linear signature is a sum over non-decreasing
/// segment words `i_1 ≤ … ≤ i_m`, weighted by `Π 1/r!` over the run lengths
/// `r`. Pairing two such words gives `Π_t δ(i_t, j_t)`. The dynamic program
/// walks positions `t` with state (segment, run length) for each path; a
/// repeated segment contributes the factor `1/r` for its `r`-th occurrence.
/// Cost is `O(n_x n_y M³)` time and `O(n_x n_y M²)` memory.
pub fn signature_level_products(x: &TimeSeries, y: &TimeSeries, depth: usize) -> Result<Vec<f64>> {
    check_dims(x, y)?;
    let xs: Vec<Vec<f64>> = segments(x).collect();
    let ys: Vec<Vec<f64>> = segments(y).collect();
    let (nx, ny) = (xs.len(), ys.len());
    let mut out = vec![0.0; depth + 1];
    out[0] = 1.0;
    if nx == 0 || ny == 0 || depth == 0 {
        return Ok(out);
    }
    let rho: Vec<f64> = xs
        .iter()
        .flat_map(|a| ys.iter().map(move |b| a.iter().zip(b).map(|(p, q)| p * q).sum()))
        .collect();

    // state[((i * depth + (r-1)) * ny + j) * depth + (s-1)]
    let idx = |i: usize, r: usize, j: usize, s: usize| ((i * depth + r) * ny + j) * depth + s;
    let mut state = vec![0.0; nx * depth * ny * depth];
    let mut next = vec![0.0; state.len()];
    for i in 0..nx {
        for j in 0..ny {
            state[idx(i, 0, j, 0)] = rho[i * ny + j];
        }
    }
    out[1] = state.iter().sum();

    // Marginals over run lengths, with exclusive prefix sums over segments.
    let mut both = vec![0.0; nx * ny]; // Σ_{i'<i, j'<j} Σ_{r,s}
    let mut over_j = vec![0.0; nx * depth * ny]; // Σ_{j'<j} Σ_s, fixed (i, r)
    let mut over_i = vec![0.0; nx * ny * depth]; // Σ_{i'<i} Σ_r, fixed (j, s)
    for m in 2..=depth {
        let mut t = vec![0.0; nx * ny];
        for i in 0..nx {
            for r in 0..depth {
                for j in 0..ny {
                    let row = &state[idx(i, r, j, 0)..idx(i, r, j, 0) + depth];
                    t[i * ny + j] += row.iter().sum::<f64>();
                }
            }
        }
        for i in 0..nx {
            for j in 0..ny {
                both[i * ny + j] = if i > 0 && j > 0 {
                    both[(i - 1) * ny + j] + both[i * ny + j - 1] - both[(i - 1) * ny + j - 1]
                        + t[(i - 1) * ny + j - 1]
                } else {
                    0.0
                };
            }
        }
        for i in 0..nx {
            for r in 0..depth {
                let mut acc = 0.0;
                for j in 0..ny {
                    over_j[(i * depth + r) * ny + j] = acc;
                    acc += state[idx(i, r, j, 0)..idx(i, r, j, 0) + depth].iter().sum::<f64>();
                }
            }
        }
        for j in 0..ny {
            for s in 0..depth {
                let mut acc = 0.0;
                for i in 0..nx {
                    over_i[(j * depth + s) * nx + i] = acc;
                    acc += (0..depth).map(|r| state[idx(i, r, j, s)]).sum::<f64>();
                }
            }
        }

        next.iter_mut().for_each(|v| *v = 0.0);
        let runs = m;
        for i in 0..nx {
            for j in 0..ny {
                let d = rho[i * ny + j];
                next[idx(i, 0, j, 0)] = d * both[i * ny + j];
                for s in 1..runs {
                    next[idx(i, 0, j, s)] = d * over_i[(j * depth + s - 1) * nx + i] / (s + 1) as f64;
                }
                for r in 1..runs {
                    next[idx(i, r, j, 0)] = d * over_j[(i * depth + r - 1) * ny + j] / (r + 1) as f64;
                    for s in 1..runs {
                        next[idx(i, r, j, s)] =
                            d * state[idx(i, r - 1, j, s - 1)] / ((r + 1) * (s + 1)) as f64;
                    }
                }
            }
        }
        core::mem::swap(&mut state, &mut next);
        out[m] = state.iter().sum();
    }
    Ok(out)
}

/// `Σ_{m≤M} ⟨S_m(x), S_m(y)⟩` via [`signature_level_products`]; usable at
/// depths where the tensors themselves would not fit in memory.
pub fn signature_kernel_by_words(x: &TimeSeries, y: &TimeSeries, depth: usize) -> Result<f64> {
    Ok(signature_level_products(x, y, depth)?.iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn ts(points: &[[f64; 2]]) -> TimeSeries {
        TimeSeries::from_points(points).unwrap()
    }

    #[test]
    fn constant_series_has_trivial_signature() {
        let c = ts(&[[0.3, -1.0], [0.3, -1.0], [0.3, -1.0]]);
        assert_eq!(truncated_signature_kernel(&c, &c, 6).unwrap(), 1.0);
        assert_eq!(signature_kernel_by_words(&c, &c, 6).unwrap(), 1.0);
    }

    #[test]
    fn one_dimensional_unit_segment() {
        let x = TimeSeries::from_scalars(&[0.0, 1.0]).unwrap();
        assert_relative_eq!(truncated_signature_kernel(&x, &x, 16).unwrap(), 2.279_585_302_336_067, max_relative = 1e-15);
        assert_relative_eq!(signature_kernel_by_words(&x, &x, 16).unwrap(), 2.279_585_302_336_067, max_relative = 1e-15);
    }

    #[test]
    fn levels_scale_homogeneously() {
        let x = ts(&[[0.0, 0.0], [0.4, -0.2], [0.1, 0.5], [0.9, 0.3]]);
        let c = -1.7;
        let a = SignatureTensor::of_path(&x, 5, 1 << 20).unwrap();
        let b = SignatureTensor::of_path(&x.scaled(c), 5, 1 << 20).unwrap();
        for m in 0..=5 {
            for (p, q) in a.level(m).iter().zip(b.level(m)) {
                assert_relative_eq!(p * c.powi(m as i32), *q, max_relative = 1e-13, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn segment_levels_are_tensor_powers() {
        let s = SignatureTensor::of_segment(&[2.0, -1.0], 3, 64).unwrap();
        assert_eq!(s.level(1), &[2.0, -1.0]);
        assert_eq!(s.level(2), &[2.0, -1.0, -1.0, 0.5]);
        assert_relative_eq!(s.level(3)[0], 8.0 / 6.0);
    }

    #[test]
    fn budget_is_enforced() {
        let x = ts(&[[0.0, 0.0], [1.0, 1.0]]);
        let err = truncated_signature_kernel_with_budget(&x, &x, 10, 100).unwrap_err();
        assert_eq!(err, Error::ResourceExhausted { needed: 2047, budget: 100 });
    }

    #[test]
    fn chen_is_associative() {
        let d = 3;
        let segs = [[0.3, -0.1, 0.7], [-0.5, 0.2, 0.1], [0.9, 0.4, -0.3]];
        let s: Vec<SignatureTensor> = segs.iter().map(|v| SignatureTensor::of_segment(v, 4, 1 << 12).unwrap()).collect();
        let left = s[0].chen(&s[1]).unwrap().chen(&s[2]).unwrap();
        let right = s[0].chen(&s[1].chen(&s[2]).unwrap()).unwrap();
        let mut pts = vec![[0.0; 3]];
        for v in &segs {
            let last = *pts.last().unwrap();
            pts.push([last[0] + v[0], last[1] + v[1], last[2] + v[2]]);
        }
        let direct = SignatureTensor::of_path(&TimeSeries::from_points(&pts).unwrap(), 4, 1 << 12).unwrap();
        assert_eq!(left.dim(), d);
        for m in 0..=4 {
            for ((a, b), c) in left.level(m).iter().zip(right.level(m)).zip(direct.level(m)) {
                assert!((a - b).abs() <= 1e-13 && (a - c).abs() <= 1e-13);
            }
        }
    }

    #[test]
    fn level_products_decay() {
        let x = ts(&[[0.0, 0.0], [0.6, 0.3], [0.2, 1.1], [1.0, 0.8]]);
        let y = ts(&[[0.0, 0.0], [-0.4, 0.9], [0.5, 0.5]]);
        let p = signature_level_products(&x, &y, 30).unwrap();
        let mut fact = 1.0;
        for (m, v) in p.iter().enumerate().skip(1) {
            fact *= m as f64;
            assert!(v.abs() * fact <= 10f64.powi(m as i32));
        }
        assert!(p[30].abs() < 1e-30);
    }

    fn series(max_len: usize, dim: usize) -> impl Strategy<Value = TimeSeries> {
        (1..=max_len).prop_flat_map(move |len| {
            proptest::collection::vec(-1.0f64..1.0, len * dim)
                .prop_map(move |data| TimeSeries::from_flat(dim, data).unwrap())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn word_route_matches_tensor_route(
            (x, y) in (1usize..=3).prop_flat_map(|d| (series(6, d), series(6, d))),
            depth in 0usize..=6,
        ) {
            let a = SignatureTensor::of_path(&x, depth, 1 << 20).unwrap();
            let b = SignatureTensor::of_path(&y, depth, 1 << 20).unwrap();
            let tensor = a.level_products(&b);
            let words = signature_level_products(&x, &y, depth).unwrap();
            for (t, w) in tensor.iter().zip(&words) {
                prop_assert!((t - w).abs() <= 1e-12 * (1.0 + t.abs()), "{t} vs {w}");
            }
        }
    }
}
