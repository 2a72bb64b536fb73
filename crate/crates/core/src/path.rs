//! Time series on a uniform grid, their increments and per-tile coefficients.
//!
//! All tile-level quantities use tile-local unit coordinates: on tile `(k, l)`
//! the kernel satisfies `∂²K/∂u∂v = δ_{k,l}·K` with the bare increment product
//! `δ_{k,l} = ⟨Δ_k x, Δ_l y⟩`. This is the global equation (coefficient
//! `(ℓ−1)²·δ` on tiles of side `1/(ℓ−1)`) after rescaling each tile to the
//! unit square. Tile indices are 0-based throughout.

#[cfg(feature = "diagnostics")]
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// A sequence of `len` points in `R^dim`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    dim: usize,
    data: Vec<f64>,
}

impl TimeSeries {
    /// Builds a series from a flat row-major buffer.
    pub fn from_flat(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("time series dimension must be at least 1"));
        }
        if data.is_empty() {
            return Err(Error::invalid("time series must contain at least one point"));
        }
        if data.len() % dim != 0 {
            return Err(Error::invalid("flat buffer length is not a multiple of the dimension"));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(alloc::format!(
                "non-finite coordinate at point {}, dimension {}",
                pos / dim,
                pos % dim
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn from_points<P: AsRef<[f64]>>(points: &[P]) -> Result<Self> {
        let dim = points.first().map(|p| p.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.iter().enumerate() {
            if p.as_ref().len() != dim {
                return Err(Error::InvalidArgument(alloc::format!(
                    "point {i} has dimension {}, expected {dim}",
                    p.as_ref().len()
                )));
            }
            data.extend_from_slice(p.as_ref());
        }
        Self::from_flat(dim, data)
    }

    /// One-dimensional series from scalar samples.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::from_flat(1, values.to_vec())
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Multiplies every coordinate by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    /// Extends the series to `len` points by repeating its final point.
    pub fn pad_to_length(&self, len: usize) -> Result<Self> {
        let cur = self.len();
        if len < cur {
            return Err(Error::InvalidArgument(alloc::format!(
                "cannot pad a series of length {cur} down to {len}"
            )));
        }
        let mut data = self.data.clone();
        let last = self.point(cur - 1).to_vec();
        for _ in cur..len {
            data.extend_from_slice(&last);
        }
        Ok(Self { dim: self.dim, data })
    }

    /// The `len − 1` increments `x_{k+1} − x_k`, row-major.
    pub fn increments(&self) -> Result<Vec<f64>> {
        if self.len() < 2 {
            return Err(Error::invalid("a series needs at least two points to have increments"));
        }
        Ok(self
            .data
            .windows(2 * self.dim)
            .step_by(self.dim)
            .flat_map(|w| {
                let (a, b) = w.split_at(self.dim);
                b.iter().zip(a).map(|(hi, lo)| hi - lo)
            })
            .collect())
    }
}

/// Free-function form of [`TimeSeries::pad_to_length`].
pub fn pad_to_length(ts: &TimeSeries, len: usize) -> Result<TimeSeries> {
    ts.pad_to_length(len)
}

/// Free-function form of [`TimeSeries::increments`].
pub fn increments(ts: &TimeSeries) -> Result<Vec<f64>> {
    ts.increments()
}

/// Pads every series to the longest length in the family.
pub fn pad_family(family: &[TimeSeries]) -> Result<Vec<TimeSeries>> {
    let len = family.iter().map(TimeSeries::len).max().unwrap_or(0);
    family.iter().map(|ts| ts.pad_to_length(len)).collect()
}

/// Knot geometry of the tile partition of `[0,1]²`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TileGrid {
    pub len_x: usize,
    pub len_y: usize,
}

impl TileGrid {
    pub fn new(len_x: usize, len_y: usize) -> Result<Self> {
        if len_x < 2 || len_y < 2 {
            return Err(Error::invalid("both series need at least two points"));
        }
        Ok(Self { len_x, len_y })
    }

    /// Knot `σ_k = k/(ℓ_x − 1)` along the first axis (0-based).
    pub fn sigma(&self, k: usize) -> f64 {
        knot(k, self.len_x)
    }

    /// Knot `τ_l = l/(ℓ_y − 1)` along the second axis (0-based).
    pub fn tau(&self, l: usize) -> f64 {
        knot(l, self.len_y)
    }

    pub fn tiles_x(&self) -> usize {
        self.len_x - 1
    }

    pub fn tiles_y(&self) -> usize {
        self.len_y - 1
    }

    pub fn tile_count(&self) -> usize {
        self.tiles_x() * self.tiles_y()
    }

    /// The closed tile `[σ_k, σ_{k+1}] × [τ_l, τ_{l+1}]`.
    pub fn tile_bounds(&self, k: usize, l: usize) -> ([f64; 2], [f64; 2]) {
        (
            [self.sigma(k), self.sigma(k + 1)],
            [self.tau(l), self.tau(l + 1)],
        )
    }
}

fn knot(i: usize, len: usize) -> f64 {
    // exact at both ends
    if i + 1 == len {
        1.0
    } else {
        i as f64 / (len - 1) as f64
    }
}

/// Increments of a pair of series, plus the largest `|δ_{k,l}|`.
///
/// `δ_{k,l}` is computed on demand; the full `(ℓ_x−1)×(ℓ_y−1)` table is never
/// stored except through the `diagnostics` feature.
#[derive(Clone, Debug)]
pub struct IncrementTable {
    dim: usize,
    x_incs: Vec<f64>,
    y_incs: Vec<f64>,
    max_abs_rho: f64,
}

impl IncrementTable {
    pub fn new(x: &TimeSeries, y: &TimeSeries) -> Result<Self> {
        if x.dim() != y.dim() {
            return Err(Error::InvalidArgument(alloc::format!(
                "dimension mismatch: {} vs {}",
                x.dim(),
                y.dim()
            )));
        }
        let x_incs = x.increments()?;
        let y_incs = y.increments()?;
        let dim = x.dim();
        let mut max_abs_rho = 0.0f64;
        for a in x_incs.chunks_exact(dim) {
            for b in y_incs.chunks_exact(dim) {
                max_abs_rho = max_abs_rho.max(dot(a, b).abs());
            }
        }
        Ok(Self {
            dim,
            x_incs,
            y_incs,
            max_abs_rho,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of tiles along the first (x) axis.
    pub fn tiles_x(&self) -> usize {
        self.x_incs.len() / self.dim
    }

    /// Number of tiles along the second (y) axis.
    pub fn tiles_y(&self) -> usize {
        self.y_incs.len() / self.dim
    }

    pub fn x_increment(&self, k: usize) -> &[f64] {
        &self.x_incs[k * self.dim..(k + 1) * self.dim]
    }

    pub fn y_increment(&self, l: usize) -> &[f64] {
        &self.y_incs[l * self.dim..(l + 1) * self.dim]
    }

    pub fn max_abs_rho(&self) -> f64 {
        self.max_abs_rho
    }

    /// `δ_{k,l} = ⟨Δ_k x, Δ_l y⟩` without bounds reporting; panics when out of range.
    #[inline]
    pub fn rho_unchecked(&self, k: usize, l: usize) -> f64 {
        dot(self.x_increment(k), self.y_increment(l))
    }

    /// `δ_{k,l} = ⟨Δ_k x, Δ_l y⟩` for 0-based tile indices.
    pub fn rho(&self, k: usize, l: usize) -> Result<f64> {
        if k >= self.tiles_x() || l >= self.tiles_y() {
            return Err(Error::InvalidArgument(alloc::format!(
                "tile ({k}, {l}) outside the {}x{} tile grid",
                self.tiles_x(),
                self.tiles_y()
            )));
        }
        Ok(self.rho_unchecked(k, l))
    }

    /// Materializes the full tile table, row-major in `k`.
    #[cfg(feature = "diagnostics")]
    pub fn rho_table(&self) -> Vec<f64> {
        let (nx, ny) = (self.tiles_x(), self.tiles_y());
        let mut table = vec![0.0; nx * ny];
        for k in 0..nx {
            for l in 0..ny {
                table[k * ny + l] = self.rho_unchecked(k, l);
            }
        }
        table
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// Largest `|⟨Δ_k x, Δ_l y⟩|` over all tiles of a pair.
pub fn max_abs_rho(x: &TimeSeries, y: &TimeSeries) -> Result<f64> {
    Ok(IncrementTable::new(x, y)?.max_abs_rho())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s1(v: &[f64]) -> TimeSeries {
        TimeSeries::from_scalars(v).unwrap()
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert!(TimeSeries::from_flat(0, vec![1.0]).is_err());
        assert!(TimeSeries::from_flat(2, vec![]).is_err());
        assert!(TimeSeries::from_flat(2, vec![1.0, 2.0, 3.0]).is_err());
        assert!(TimeSeries::from_flat(1, vec![1.0, f64::NAN]).is_err());
        assert!(TimeSeries::from_points(&[vec![0.0, 1.0], vec![2.0]]).is_err());
        let ts = TimeSeries::from_points(&[[0.0, 1.0], [2.0, 3.0]]).unwrap();
        assert_eq!((ts.len(), ts.dim(), ts.point(1)), (2, 2, &[2.0, 3.0][..]));
    }

    #[test]
    fn padding_examples() {
        assert_eq!(s1(&[0.0, 1.0]).pad_to_length(2).unwrap(), s1(&[0.0, 1.0]));
        assert_eq!(pad_to_length(&s1(&[0.0, 1.0]), 4).unwrap(), s1(&[0.0, 1.0, 1.0, 1.0]));
        let p = TimeSeries::from_points(&[[0.0, 0.0]]).unwrap().pad_to_length(3).unwrap();
        assert_eq!(p.as_flat(), &[0.0; 6]);
        assert!(s1(&[0.0, 1.0, 2.0]).pad_to_length(2).is_err());
        let fam = pad_family(&[s1(&[0.0]), s1(&[0.0, 1.0, 2.0])]).unwrap();
        assert_eq!(fam[0].len(), 3);
    }

    #[test]
    fn increment_examples() {
        assert_eq!(increments(&s1(&[0.0, 1.0, 3.0])).unwrap(), vec![1.0, 2.0]);
        assert_eq!(s1(&[4.0, 4.0, 4.0]).increments().unwrap(), vec![0.0, 0.0]);
        let ts = TimeSeries::from_points(&[[0.0, 0.0], [1.0, 2.0]]).unwrap();
        assert_eq!(ts.increments().unwrap(), vec![1.0, 2.0]);
        assert!(s1(&[1.0]).increments().is_err());
    }

    #[test]
    fn rho_examples() {
        let x = TimeSeries::from_points(&[[0.0, 0.0], [1.0, 0.0], [1.0, 0.0]]).unwrap();
        let y = TimeSeries::from_points(&[[0.0, 0.0], [0.0, 1.0], [1.0, 1.0]]).unwrap();
        let t = IncrementTable::new(&x, &y).unwrap();
        assert_eq!(t.rho(0, 0).unwrap(), 0.0);
        assert_eq!(t.rho(0, 1).unwrap(), 1.0);
        assert_eq!(t.rho(1, 1).unwrap(), 0.0);
        assert!(t.rho(2, 0).is_err());
        assert!(t.rho(0, 2).is_err());
        assert_eq!(t.max_abs_rho(), 1.0);
        assert!(IncrementTable::new(&x, &s1(&[0.0, 1.0])).is_err());
    }

    #[test]
    fn grid_knots() {
        let g = TileGrid::new(4, 7).unwrap();
        assert_eq!((g.sigma(0), g.sigma(3), g.tau(0), g.tau(6)), (0.0, 1.0, 0.0, 1.0));
        assert_eq!(g.tile_count(), 18);
        assert_eq!(g.tile_bounds(1, 2), ([1.0 / 3.0, 2.0 / 3.0], [2.0 / 6.0, 3.0 / 6.0]));
        assert!(TileGrid::new(1, 3).is_err());
        // Tiles partition the unit square.
        let g = TileGrid::new(13, 9).unwrap();
        let area: f64 = (0..12)
            .flat_map(|k| (0..8).map(move |l| (k, l)))
            .map(|(k, l)| {
                let (s, t) = g.tile_bounds(k, l);
                (s[1] - s[0]) * (t[1] - t[0])
            })
            .sum();
        assert!((area - 1.0).abs() < 1e-14);
    }

    fn series(max_len: usize) -> impl Strategy<Value = TimeSeries> {
        (1usize..=3, 2..=max_len).prop_flat_map(|(dim, len)| {
            proptest::collection::vec(-5.0f64..5.0, dim * len).prop_map(move |d| TimeSeries::from_flat(dim, d).unwrap())
        })
    }

    proptest! {
        #[test]
        fn max_abs_rho_is_exhaustive_maximum(x in series(64), seed in 0u64..1000) {
            let y = TimeSeries::from_flat(
                x.dim(),
                x.as_flat().iter().enumerate().map(|(i, v)| (v * 1.3 + (i as u64 ^ seed) as f64 * 0.01).sin()).collect(),
            ).unwrap();
            let t = IncrementTable::new(&x, &y).unwrap();
            let mut m = 0.0f64;
            for k in 0..t.tiles_x() {
                for l in 0..t.tiles_y() {
                    let r = t.rho(k, l).unwrap();
                    prop_assert_eq!(r, dot(t.x_increment(k), t.y_increment(l)));
                    m = m.max(r.abs());
                }
            }
            prop_assert_eq!(m, t.max_abs_rho());
            #[cfg(feature = "diagnostics")]
            {
                let table = t.rho_table();
                for k in 0..t.tiles_x() {
                    for l in 0..t.tiles_y() {
                        prop_assert_eq!(table[k * t.tiles_y() + l], t.rho(k, l).unwrap());
                    }
                }
            }
        }

        #[test]
        fn rho_is_linear_in_x(x in series(10), c in -3.0f64..3.0) {
            let t = IncrementTable::new(&x, &x).unwrap();
            let ts = IncrementTable::new(&x.scaled(c), &x).unwrap();
            for k in 0..t.tiles_x() {
                for l in 0..t.tiles_y() {
                    let (a, b) = (t.rho(k, l).unwrap() * c, ts.rho(k, l).unwrap());
                    prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
                }
            }
        }

        #[test]
        fn midpoint_splits_increment(x in series(10), k_raw in 0usize..100) {
            let k = k_raw % (x.len() - 1);
            let mut pts: Vec<Vec<f64>> = x.points().map(<[f64]>::to_vec).collect();
            let mid: Vec<f64> = pts[k].iter().zip(&pts[k + 1]).map(|(a, b)| 0.5 * (a + b)).collect();
            pts.insert(k + 1, mid);
            let refined = TimeSeries::from_points(&pts).unwrap();
            let (orig, inc) = (x.increments().unwrap(), refined.increments().unwrap());
            let d = x.dim();
            for c in 0..d {
                let sum = inc[k * d + c] + inc[(k + 1) * d + c];
                prop_assert!((sum - orig[k * d + c]).abs() <= 1e-12 * (1.0 + orig[k * d + c].abs()));
            }
        }
    }
}
