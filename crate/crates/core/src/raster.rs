//! Row-major 2D rasters used for depth, thermal, fused and mask images.
//!
//! Depth and fused rasters use NaN as the invalid marker. A depth value is
//! valid when it is finite and strictly positive.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct Raster<P> {
    width: usize,
    height: usize,
    data: Vec<P>,
}

/// Radial distances in meters; NaN (or any non-positive value) marks a missing measurement.
pub type DepthImage<T> = Raster<T>;
/// Temperatures in °C.
pub type ThermalImage<T> = Raster<T>;
/// Temperatures in °C at depth resolution; NaN marks pixels without a fused value.
pub type FusedImage<T> = Raster<T>;
pub type Mask = Raster<bool>;

impl<P: Clone> Raster<P> {
    pub fn filled(width: usize, height: usize, value: P) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }
}

impl<P> Raster<P> {
    pub fn from_vec(width: usize, height: usize, data: Vec<P>) -> Result<Self> {
        let expected = width
            .checked_mul(height)
            .ok_or_else(|| Error::ShapeMismatch(format!("{width}x{height} overflows")))?;
        if data.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "{width}x{height} raster needs {expected} values, got {}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> P) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[P] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [P] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<P> {
        self.data
    }

    #[inline]
    pub fn index_of(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.width && y < self.height);
        y * self.width + x
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> &P {
        &self.data[self.index_of(x, y)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: P) {
        let i = self.index_of(x, y);
        self.data[i] = value;
    }

    pub fn map<Q>(&self, f: impl FnMut(&P) -> Q) -> Raster<Q> {
        Raster {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn same_shape<Q>(&self, other: &Raster<Q>) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn ensure_same_shape<Q>(&self, other: &Raster<Q>, what: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "{what}: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )))
        }
    }
}

#[inline]
pub fn is_valid_depth<T: Real>(d: T) -> bool {
    d.is_finite() && d > T::zero()
}

impl<T: Real> Raster<T> {
    /// Validity mask: finite values (and, for depth, see [`is_valid_depth`]).
    pub fn finite_mask(&self) -> Mask {
        self.map(|v| v.is_finite())
    }

    /// Minimum and maximum over finite values.
    pub fn finite_range(&self) -> Option<(T, T)> {
        self.data
            .iter()
            .copied()
            .filter(|v| v.is_finite())
            .fold(None, |acc, v| match acc {
                None => Some((v, v)),
                Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
            })
    }
}

impl Mask {
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// 8-connected components of set pixels, each as a list of `(x, y)` in
    /// scan order of discovery. Components are ordered by their first pixel
    /// in row-major order.
    pub fn components(&self) -> Vec<Vec<(usize, usize)>> {
        let (w, h) = self.dims();
        let mut seen = vec![false; self.len()];
        let mut out = Vec::new();
        let mut stack = Vec::new();
        for start in 0..self.len() {
            if !self.data[start] || seen[start] {
                continue;
            }
            seen[start] = true;
            stack.push(start);
            let mut comp = Vec::new();
            while let Some(i) = stack.pop() {
                let (x, y) = (i % w, i / w);
                comp.push((x, y));
                for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                    for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                        let j = ny * w + nx;
                        if self.data[j] && !seen[j] {
                            seen[j] = true;
                            stack.push(j);
                        }
                    }
                }
            }
            out.push(comp);
        }
        out
    }
}
