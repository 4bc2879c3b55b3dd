//! Depth-guided thermal upsampling.
//!
//! Every valid TOF pixel is back-projected, moved into the IR frame and
//! projected onto the thermopile array ([`build_projection_map`]). The
//! resulting continuous IR coordinates drive four upsampling algorithms:
//! nearest neighbour, bilinear, depth-weighted interpolation and segment
//! decomposition ([`fuse_segment`]).

mod segment;

pub use segment::{
    fuse_segment, optimal_two_split, segment_footprint, MixedPixel, PixelSegments, Segment,
    SegmentDiagnostics, SegmentFusion, SegmentParams, TwoSplit,
};

use crate::error::{Error, Result};
use crate::geometry::{
    depth_to_point, project_point, transform_point, Extrinsics, Intrinsics, PixelCoord,
};
use crate::raster::{is_valid_depth, DepthImage, FusedImage, Raster, ThermalImage};
use crate::scalar::Real;

/// Continuous IR coordinate for every TOF pixel, `None` where the pixel has no
/// valid depth, lands behind the IR camera or falls off the IR array.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMap<T> {
    coords: Raster<Option<PixelCoord<T>>>,
    ir_width: usize,
    ir_height: usize,
}

impl<T: Real> ProjectionMap<T> {
    pub fn from_coords(
        coords: Raster<Option<PixelCoord<T>>>,
        ir_width: usize,
        ir_height: usize,
    ) -> Self {
        Self {
            coords,
            ir_width,
            ir_height,
        }
    }

    pub fn tof_dims(&self) -> (usize, usize) {
        self.coords.dims()
    }

    pub fn ir_dims(&self) -> (usize, usize) {
        (self.ir_width, self.ir_height)
    }

    pub fn coords(&self) -> &Raster<Option<PixelCoord<T>>> {
        &self.coords
    }

    #[inline]
    pub fn get(&self, tof_index: usize) -> Option<PixelCoord<T>> {
        self.coords.data()[tof_index]
    }

    pub fn valid_count(&self) -> usize {
        self.coords.data().iter().filter(|c| c.is_some()).count()
    }

    /// IR pixel whose center is nearest to `p`. Ties round up, which equals
    /// round-half-away-from-zero everywhere on the valid range except at
    /// exactly `-0.5`; the result is clamped onto the array.
    #[inline]
    pub fn nearest_ir(&self, p: PixelCoord<T>) -> (usize, usize) {
        let half = T::lit(0.5);
        let snap = |c: T, n: usize| {
            let i = (c + half).floor().max(T::zero());
            i.to_usize().unwrap_or(0).min(n - 1)
        };
        (snap(p.u, self.ir_width), snap(p.v, self.ir_height))
    }

    /// For each IR pixel (row-major), the TOF pixel indices projecting into it.
    pub fn footprints(&self) -> Vec<Vec<usize>> {
        let mut fp = vec![Vec::new(); self.ir_width * self.ir_height];
        for (i, c) in self.coords.data().iter().enumerate() {
            if let Some(p) = c {
                let (x, y) = self.nearest_ir(*p);
                fp[y * self.ir_width + x].push(i);
            }
        }
        fp
    }

    fn check_thermal(&self, thermal: &ThermalImage<T>) -> Result<()> {
        if thermal.dims() != self.ir_dims() {
            return Err(Error::ShapeMismatch(format!(
                "thermal image is {}x{}, projection map expects {}x{}",
                thermal.width(),
                thermal.height(),
                self.ir_width,
                self.ir_height
            )));
        }
        Ok(())
    }

    fn check_depth(&self, depth: &DepthImage<T>) -> Result<()> {
        self.coords
            .ensure_same_shape(depth, "depth vs projection map")
    }
}

/// Projects every TOF pixel onto the IR array.
pub fn build_projection_map<T: Real>(
    depth: &DepthImage<T>,
    k_tof: &Intrinsics<T>,
    k_ir: &Intrinsics<T>,
    ext: &Extrinsics<T>,
) -> Result<ProjectionMap<T>> {
    if depth.dims() != (k_tof.width, k_tof.height) {
        return Err(Error::ShapeMismatch(format!(
            "depth image is {}x{}, TOF intrinsics describe {}x{}",
            depth.width(),
            depth.height(),
            k_tof.width,
            k_tof.height
        )));
    }
    let coords = Raster::from_fn(depth.width(), depth.height(), |x, y| {
        let d = *depth.get(x, y);
        if !is_valid_depth(d) {
            return None;
        }
        let px = PixelCoord::new(T::from_usize_lossy(x), T::from_usize_lossy(y));
        let p = depth_to_point(px, d, k_tof).ok()?;
        let q = project_point(&transform_point(&p, ext), k_ir).ok()?;
        k_ir.contains(q).then_some(q)
    });
    Ok(ProjectionMap::from_coords(coords, k_ir.width, k_ir.height))
}

/// Each valid TOF pixel takes the temperature of the nearest IR pixel.
pub fn fuse_nearest<T: Real>(
    map: &ProjectionMap<T>,
    thermal: &ThermalImage<T>,
) -> Result<FusedImage<T>> {
    map.check_thermal(thermal)?;
    let (w, h) = map.tof_dims();
    Ok(Raster::from_fn(w, h, |x, y| match *map.coords.get(x, y) {
        Some(p) => {
            let (ix, iy) = map.nearest_ir(p);
            *thermal.get(ix, iy)
        }
        None => T::nan(),
    }))
}

/// Bilinear cell around `p`: the four surrounding IR pixel centers and the
/// fractional offsets inside the cell. Coordinates beyond the outermost
/// centers clamp to the border row/column.
#[derive(Debug, Clone, Copy)]
struct Cell<T> {
    x0: usize,
    x1: usize,
    y0: usize,
    y1: usize,
    fx: T,
    fy: T,
}

impl<T: Real> Cell<T> {
    fn around(p: PixelCoord<T>, w: usize, h: usize) -> Self {
        let axis = |c: T, n: usize| {
            let hi = T::from_usize_lossy(n - 1);
            let c = c.max(T::zero()).min(hi);
            let i0 = c.floor().to_usize().unwrap_or(0).min(n - 1);
            let i1 = (i0 + 1).min(n - 1);
            (i0, i1, c - T::from_usize_lossy(i0))
        };
        let (x0, x1, fx) = axis(p.u, w);
        let (y0, y1, fy) = axis(p.v, h);
        Self {
            x0,
            x1,
            y0,
            y1,
            fx,
            fy,
        }
    }

    /// Distinct corner pixels, in the order (x0,y0), (x1,y0), (x0,y1), (x1,y1).
    fn corners(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(4);
        for c in [
            (self.x0, self.y0),
            (self.x1, self.y0),
            (self.x0, self.y1),
            (self.x1, self.y1),
        ] {
            if !out.contains(&c) {
                out.push(c);
            }
        }
        out
    }
}

/// Convex combination of `values` clamped into their range, so rounding can
/// never leave `[min, max]` and equal inputs come back unchanged.
fn convex_combination<T: Real>(weights: &[T], values: &[T]) -> T {
    let mut acc = T::zero();
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    for (&w, &v) in weights.iter().zip(values) {
        acc = acc + w * v;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if acc.is_nan() {
        return acc;
    }
    acc.max(lo).min(hi)
}

/// Standard bilinear interpolation between the four surrounding IR pixel
/// centers, weighted by the relative position of the projection.
pub fn fuse_bilinear<T: Real>(
    map: &ProjectionMap<T>,
    thermal: &ThermalImage<T>,
) -> Result<FusedImage<T>> {
    map.check_thermal(thermal)?;
    let (w, h) = map.tof_dims();
    let (iw, ih) = map.ir_dims();
    Ok(Raster::from_fn(w, h, |x, y| match *map.coords.get(x, y) {
        Some(p) => {
            let c = Cell::around(p, iw, ih);
            let one = T::one();
            let weights = [
                (one - c.fx) * (one - c.fy),
                c.fx * (one - c.fy),
                (one - c.fx) * c.fy,
                c.fx * c.fy,
            ];
            let values = [
                *thermal.get(c.x0, c.y0),
                *thermal.get(c.x1, c.y0),
                *thermal.get(c.x0, c.y1),
                *thermal.get(c.x1, c.y1),
            ];
            convex_combination(&weights, &values)
        }
        None => T::nan(),
    }))
}

/// How depth differences turn into interpolation weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DepthWeightMode {
    /// Inverse depth difference: neighbours at a similar depth dominate.
    #[default]
    Similarity,
    /// `W_i = |D - D_i| / sum_j |D - D_j|`, literally.
    AsPrinted,
}

/// Depth differences at or below this count as an exact match (meters).
pub const DEPTH_MATCH_EPS: f64 = 1e-6;

/// Normalized weights for the neighbours at `neighbour_depths` given the depth
/// `d` of the current TOF pixel. Always sums to one.
pub fn depth_weights<T: Real>(d: T, neighbour_depths: &[T], mode: DepthWeightMode) -> Vec<T> {
    let n = neighbour_depths.len();
    if n == 0 {
        return Vec::new();
    }
    let uniform = || vec![T::one() / T::from_usize_lossy(n); n];
    let diffs: Vec<T> = neighbour_depths.iter().map(|&di| (d - di).abs()).collect();
    match mode {
        DepthWeightMode::Similarity => {
            let eps = T::lit(DEPTH_MATCH_EPS);
            let exact = diffs.iter().filter(|&&e| e <= eps).count();
            if exact > 0 {
                let share = T::one() / T::from_usize_lossy(exact);
                return diffs
                    .iter()
                    .map(|&e| if e <= eps { share } else { T::zero() })
                    .collect();
            }
            let inv: Vec<T> = diffs.iter().map(|&e| T::one() / e).collect();
            let sum: T = inv.iter().copied().sum();
            inv.into_iter().map(|v| v / sum).collect()
        }
        DepthWeightMode::AsPrinted => {
            let sum: T = diffs.iter().copied().sum();
            if sum <= T::zero() || !sum.is_finite() {
                return uniform();
            }
            diffs.into_iter().map(|e| e / sum).collect()
        }
    }
}

/// Mean depth of every IR pixel's footprint, `None` for empty footprints.
pub fn footprint_mean_depths<T: Real>(
    map: &ProjectionMap<T>,
    depth: &DepthImage<T>,
) -> Result<Vec<Option<T>>> {
    map.check_depth(depth)?;
    Ok(map
        .footprints()
        .iter()
        .map(|fp| {
            if fp.is_empty() {
                None
            } else {
                let sum: T = fp.iter().map(|&i| depth.data()[i]).sum();
                Some(sum / T::from_usize_lossy(fp.len()))
            }
        })
        .collect())
}

/// Interpolation over the bilinear cell where weights come from how close
/// each neighbour's mean footprint depth is to the current pixel's depth.
/// Neighbours with empty footprints are dropped; when all are dropped the
/// pixel falls back to nearest neighbour.
pub fn fuse_depth_weighted<T: Real>(
    map: &ProjectionMap<T>,
    thermal: &ThermalImage<T>,
    depth: &DepthImage<T>,
    mode: DepthWeightMode,
) -> Result<FusedImage<T>> {
    map.check_thermal(thermal)?;
    let means = footprint_mean_depths(map, depth)?;
    let (w, h) = map.tof_dims();
    let (iw, ih) = map.ir_dims();
    Ok(Raster::from_fn(w, h, |x, y| {
        let Some(p) = *map.coords.get(x, y) else {
            return T::nan();
        };
        let d = *depth.get(x, y);
        let mut ds = Vec::with_capacity(4);
        let mut ts = Vec::with_capacity(4);
        for (cx, cy) in Cell::around(p, iw, ih).corners() {
            if let Some(m) = means[cy * iw + cx] {
                ds.push(m);
                ts.push(*thermal.get(cx, cy));
            }
        }
        if ds.is_empty() {
            let (nx, ny) = map.nearest_ir(p);
            return *thermal.get(nx, ny);
        }
        convex_combination(&depth_weights(d, &ds, mode), &ts)
    }))
}

/// The upsampling algorithms offered by the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FusionMethod {
    Nearest,
    Bilinear,
    DepthWeighted(DepthWeightMode),
    Segment,
}

impl std::str::FromStr for FusionMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nearest" => Ok(Self::Nearest),
            "bilinear" => Ok(Self::Bilinear),
            "depth" | "depth-similarity" => Ok(Self::DepthWeighted(DepthWeightMode::Similarity)),
            "depth-as-printed" => Ok(Self::DepthWeighted(DepthWeightMode::AsPrinted)),
            "segment" => Ok(Self::Segment),
            other => Err(Error::InvalidParameter(format!(
                "unknown fusion method '{other}'"
            ))),
        }
    }
}

/// Runs `method` with default parameters where the method has any.
pub fn fuse<T: Real>(
    method: FusionMethod,
    map: &ProjectionMap<T>,
    thermal: &ThermalImage<T>,
    depth: &DepthImage<T>,
    segment_params: &SegmentParams<T>,
) -> Result<FusedImage<T>> {
    match method {
        FusionMethod::Nearest => fuse_nearest(map, thermal),
        FusionMethod::Bilinear => fuse_bilinear(map, thermal),
        FusionMethod::DepthWeighted(mode) => fuse_depth_weighted(map, thermal, depth, mode),
        FusionMethod::Segment => fuse_segment(map, thermal, depth, segment_params).map(|s| s.image),
    }
}
