//! Segment decomposition of mixed thermopile pixels.
//!
//! A thermopile pixel integrates everything inside its footprint, so a pixel
//! straddling a depth discontinuity reports an area-weighted blend
//! `Tm = A1*T1 + A2*T2`. The depth samples in the footprint are split into
//! two segments; one of them borrows the temperature of a homogeneous
//! neighbour at a matching depth and the other is solved for:
//! `T2 = (Tm - T1*A1) / A2`.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::raster::{DepthImage, FusedImage, Raster, ThermalImage};
use crate::scalar::Real;

use super::ProjectionMap;

#[derive(Debug, Clone, PartialEq)]
pub struct Segment<T> {
    pub mean_depth: T,
    /// TOF pixel indices belonging to the segment.
    pub members: Vec<usize>,
    /// Fraction of the footprint, in `(0, 1]`.
    pub area: T,
}

/// Segments of one IR pixel footprint, ordered by increasing mean depth.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelSegments<T> {
    pub segments: Vec<Segment<T>>,
    /// Population standard deviation of all footprint depths.
    pub std_dev: T,
    /// `max - min` of all footprint depths.
    pub spread: T,
    pub mean_depth: T,
}

impl<T: Real> PixelSegments<T> {
    pub fn is_homogeneous(&self) -> bool {
        self.segments.len() == 1
    }
}

/// Optimal 1D two-cluster partition (minimum within-cluster sum of squares).
#[derive(Debug, Clone, PartialEq)]
pub struct TwoSplit<T> {
    /// Indices into the input of the lower-valued cluster.
    pub near: Vec<usize>,
    /// Indices into the input of the higher-valued cluster.
    pub far: Vec<usize>,
    pub near_mean: T,
    pub far_mean: T,
    /// Within-cluster sum of squared deviations.
    pub sse: T,
}

/// Exact 2-means on scalars. In one dimension the optimal clusters are
/// contiguous in sorted order, so every split point between distinct values
/// is scored and the best kept. The optimum is a fixed point of Lloyd's
/// iteration. Returns `None` when there are fewer than two distinct values.
pub fn optimal_two_split<T: Real>(values: &[T]) -> Option<TwoSplit<T>> {
    let n = values.len();
    if n < 2 {
        return None;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        values[a]
            .partial_cmp(&values[b])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    let nf = T::from_usize_lossy(n);
    let mean = values.iter().copied().sum::<T>() / nf;
    // prefix sums over centered values
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(T::zero());
    for &i in &order {
        let last = *prefix.last().unwrap();
        prefix.push(last + (values[i] - mean));
    }
    let total = prefix[n];
    let mut best: Option<(usize, T)> = None;
    for k in 1..n {
        if !(values[order[k - 1]] < values[order[k]]) {
            continue;
        }
        let kl = T::from_usize_lossy(k);
        let kr = T::from_usize_lossy(n - k);
        let ml = prefix[k] / kl;
        let mr = (total - prefix[k]) / kr;
        let between = kl * kr / nf * (ml - mr) * (ml - mr);
        if best.is_none_or(|(_, b)| between > b) {
            best = Some((k, between));
        }
    }
    let (k, _) = best?;
    let near: Vec<usize> = order[..k].to_vec();
    let far: Vec<usize> = order[k..].to_vec();
    let mean_of =
        |ids: &[usize]| ids.iter().map(|&i| values[i]).sum::<T>() / T::from_usize_lossy(ids.len());
    let near_mean = mean_of(&near);
    let far_mean = mean_of(&far);
    let sse = near
        .iter()
        .map(|&i| (values[i] - near_mean).powi(2))
        .chain(far.iter().map(|&i| (values[i] - far_mean).powi(2)))
        .sum();
    Some(TwoSplit {
        near,
        far,
        near_mean,
        far_mean,
        sse,
    })
}

/// Splits the depth samples `(tof_index, depth)` of one IR pixel into one
/// segment (standard deviation at most `homogeneity_tol`) or two segments
/// (optimal 2-means on depth).
pub fn segment_footprint<T: Real>(
    samples: &[(usize, T)],
    homogeneity_tol: T,
) -> Result<PixelSegments<T>> {
    if samples.is_empty() {
        return Err(Error::EmptyFootprint);
    }
    let n = T::from_usize_lossy(samples.len());
    let depths: Vec<T> = samples.iter().map(|s| s.1).collect();
    let mean_depth = depths.iter().copied().sum::<T>() / n;
    let var = depths.iter().map(|&d| (d - mean_depth).powi(2)).sum::<T>() / n;
    let std_dev = var.sqrt();
    let (lo, hi) = depths
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &d| {
            (lo.min(d), hi.max(d))
        });
    let spread = hi - lo;
    let single = || Segment {
        mean_depth,
        members: samples.iter().map(|s| s.0).collect(),
        area: T::one(),
    };
    let segments = if std_dev <= homogeneity_tol {
        vec![single()]
    } else {
        match optimal_two_split(&depths) {
            None => vec![single()],
            Some(split) => [(split.near, split.near_mean), (split.far, split.far_mean)]
                .into_iter()
                .map(|(ids, m)| Segment {
                    mean_depth: m,
                    area: T::from_usize_lossy(ids.len()) / n,
                    members: ids.into_iter().map(|i| samples[i].0).collect(),
                })
                .collect(),
        }
    };
    Ok(PixelSegments {
        segments,
        std_dev,
        spread,
        mean_depth,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentParams<T> {
    /// Footprints whose depth standard deviation is at most this (meters)
    /// are a single segment and count as homogeneous neighbours.
    pub homogeneity_tol: T,
    /// Lower bound on the solved segment's area fraction when dividing by it,
    /// which caps the gain on `Tm - T1`; `None` disables it.
    pub area_floor: Option<T>,
    /// A neighbour can only lend its temperature to a segment whose mean
    /// depth is within this distance of its own (meters); `None` disables it.
    pub depth_match_tol: Option<T>,
}

impl<T: Real> Default for SegmentParams<T> {
    fn default() -> Self {
        Self {
            homogeneity_tol: T::lit(0.05),
            area_floor: Some(T::lit(0.02)),
            depth_match_tol: Some(T::lit(0.25)),
        }
    }
}

/// Solved state of one two-segment IR pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedPixel<T> {
    pub ir: (usize, usize),
    /// Homogeneous neighbour used, `None` when the pixel fell back to `Tm`.
    pub neighbour: Option<(usize, usize)>,
    pub measured: T,
    pub near_area: T,
    pub far_area: T,
    pub near_temp: T,
    pub far_temp: T,
    /// The area floor was applied to the solved segment.
    pub clamped: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SegmentDiagnostics<T> {
    pub mixed: Vec<MixedPixel<T>>,
}

impl<T> SegmentDiagnostics<T> {
    pub fn fallbacks(&self) -> impl Iterator<Item = &MixedPixel<T>> {
        self.mixed.iter().filter(|m| m.neighbour.is_none())
    }

    pub fn clamped(&self) -> impl Iterator<Item = &MixedPixel<T>> {
        self.mixed.iter().filter(|m| m.clamped)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentFusion<T> {
    pub image: FusedImage<T>,
    pub diagnostics: SegmentDiagnostics<T>,
}

/// Segment-decomposition upsampling.
///
/// Homogeneous IR pixels hand their measurement to every TOF pixel in the
/// footprint. For a two-segment pixel the 3x3 neighbourhood is searched for
/// the homogeneous neighbour with the smallest depth spread (ties broken by
/// depth agreement); its temperature goes to the segment with the closest
/// mean depth and the other segment is solved from the area balance.
pub fn fuse_segment<T: Real>(
    map: &ProjectionMap<T>,
    thermal: &ThermalImage<T>,
    depth: &DepthImage<T>,
    params: &SegmentParams<T>,
) -> Result<SegmentFusion<T>> {
    map.check_thermal(thermal)?;
    map.check_depth(depth)?;
    let (iw, ih) = map.ir_dims();
    let (tw, th) = map.tof_dims();
    let footprints = map.footprints();
    let segs: Vec<Option<PixelSegments<T>>> = footprints
        .iter()
        .map(|fp| {
            if fp.is_empty() {
                return None;
            }
            let samples: Vec<(usize, T)> = fp.iter().map(|&i| (i, depth.data()[i])).collect();
            segment_footprint(&samples, params.homogeneity_tol).ok()
        })
        .collect();

    let mut image = Raster::filled(tw, th, T::nan());
    let mut diagnostics = SegmentDiagnostics { mixed: Vec::new() };

    for iy in 0..ih {
        for ix in 0..iw {
            let Some(ps) = &segs[iy * iw + ix] else {
                continue;
            };
            let tm = *thermal.get(ix, iy);
            if ps.is_homogeneous() {
                for &i in &ps.segments[0].members {
                    image.data_mut()[i] = tm;
                }
                continue;
            }
            let (near, far) = (&ps.segments[0], &ps.segments[1]);

            // (spread, depth mismatch, matches near segment, position)
            let mut best: Option<(T, T, bool, (usize, usize))> = None;
            for ny in iy.saturating_sub(1)..=(iy + 1).min(ih - 1) {
                for nx in ix.saturating_sub(1)..=(ix + 1).min(iw - 1) {
                    if (nx, ny) == (ix, iy) {
                        continue;
                    }
                    let Some(nb) = &segs[ny * iw + nx] else {
                        continue;
                    };
                    if !nb.is_homogeneous() || !thermal.get(nx, ny).is_finite() {
                        continue;
                    }
                    let dn = (nb.mean_depth - near.mean_depth).abs();
                    let df = (nb.mean_depth - far.mean_depth).abs();
                    let (mismatch, to_near) = if dn <= df { (dn, true) } else { (df, false) };
                    if params.depth_match_tol.is_some_and(|tol| mismatch > tol) {
                        continue;
                    }
                    let better = match best {
                        None => true,
                        Some((s, m, _, _)) => nb.spread < s || (nb.spread == s && mismatch < m),
                    };
                    if better {
                        best = Some((nb.spread, mismatch, to_near, (nx, ny)));
                    }
                }
            }

            let mut record = MixedPixel {
                ir: (ix, iy),
                neighbour: None,
                measured: tm,
                near_area: near.area,
                far_area: far.area,
                near_temp: tm,
                far_temp: tm,
                clamped: false,
            };
            if let Some((_, _, to_near, pos)) = best {
                let t1 = *thermal.get(pos.0, pos.1);
                let (a1, a2) = if to_near {
                    (near.area, far.area)
                } else {
                    (far.area, near.area)
                };
                let mut denom = a2;
                if let Some(floor) = params.area_floor {
                    if a2 < floor {
                        denom = floor;
                        record.clamped = true;
                    }
                }
                // (tm - a1*t1) / a2 rewritten with a1 + a2 = 1; a uniform
                // neighbourhood then returns tm exactly
                let t2 = tm + (tm - t1) * a1 / denom;
                record.neighbour = Some(pos);
                if to_near {
                    record.near_temp = t1;
                    record.far_temp = t2;
                } else {
                    record.near_temp = t2;
                    record.far_temp = t1;
                }
            }
            for &i in &near.members {
                image.data_mut()[i] = record.near_temp;
            }
            for &i in &far.members {
                image.data_mut()[i] = record.far_temp;
            }
            diagnostics.mixed.push(record);
        }
    }
    Ok(SegmentFusion { image, diagnostics })
}
