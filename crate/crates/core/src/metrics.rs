//! Accuracy of an upsampled image against ground truth.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::raster::{FusedImage, Raster, ThermalImage};
use crate::scalar::Real;

/// `|fused - truth|` per pixel; NaN where either side is invalid.
pub fn error_map<T: Real>(fused: &FusedImage<T>, truth: &ThermalImage<T>) -> Result<Raster<T>> {
    fused.ensure_same_shape(truth, "fused vs truth")?;
    let data = fused
        .data()
        .iter()
        .zip(truth.data())
        .map(|(&f, &t)| {
            if f.is_finite() && t.is_finite() {
                (f - t).abs()
            } else {
                T::nan()
            }
        })
        .collect();
    Raster::from_vec(fused.width(), fused.height(), data)
}

fn valid_errors<T: Real>(errors: &Raster<T>) -> impl Iterator<Item = T> + '_ {
    errors.data().iter().copied().filter(|e| e.is_finite())
}

/// Mean of [`error_map`] over valid pixels.
pub fn mean_abs_error<T: Real>(fused: &FusedImage<T>, truth: &ThermalImage<T>) -> Result<T> {
    let map = error_map(fused, truth)?;
    let (sum, n) = valid_errors(&map).fold((T::zero(), 0usize), |(s, n), e| (s + e, n + 1));
    if n == 0 {
        return Err(Error::EmptyStatistics);
    }
    Ok(sum / T::from_usize_lossy(n))
}

/// Cumulative sum of the sorted (ascending) per-pixel errors, sampled at
/// `n_bins` evenly spaced pixel ranks. Each point is `(rank, cumulative
/// error of the `rank` smallest errors)`; the last point covers every valid
/// pixel, so its value is the total error.
pub fn accumulated_error_curve<T: Real>(errors: &Raster<T>, n_bins: usize) -> Vec<(usize, T)> {
    let mut sorted: Vec<T> = valid_errors(errors).collect();
    let n = sorted.len();
    if n == 0 || n_bins == 0 {
        return Vec::new();
    }
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let bins = n_bins.min(n);
    let mut curve = Vec::with_capacity(bins);
    let mut acc = T::zero();
    let mut taken = 0;
    for b in 1..=bins {
        let rank = (b * n).div_ceil(bins);
        while taken < rank {
            acc = acc + sorted[taken];
            taken += 1;
        }
        curve.push((rank, acc));
    }
    curve
}

/// Summary of one comparison against ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport<T> {
    pub error_map: Raster<T>,
    pub mean_abs_error: T,
    pub max_abs_error: T,
    pub valid_pixels: usize,
    pub accumulated_curve: Vec<(usize, T)>,
}

impl<T: Real> ErrorReport<T> {
    pub fn compute(fused: &FusedImage<T>, truth: &ThermalImage<T>, n_bins: usize) -> Result<Self> {
        let error_map = error_map(fused, truth)?;
        let (sum, max, n) = valid_errors(&error_map)
            .fold((T::zero(), T::zero(), 0usize), |(s, m, n), e| {
                (s + e, m.max(e), n + 1)
            });
        if n == 0 {
            return Err(Error::EmptyStatistics);
        }
        let accumulated_curve = accumulated_error_curve(&error_map, n_bins);
        Ok(Self {
            mean_abs_error: sum / T::from_usize_lossy(n),
            max_abs_error: max,
            valid_pixels: n,
            accumulated_curve,
            error_map,
        })
    }

    pub fn total_error(&self) -> T {
        self.accumulated_curve.last().map_or(T::zero(), |p| p.1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identical_images_have_zero_error() {
        let a = Raster::from_fn(4, 3, |x, y| (x + y) as f64);
        assert!(error_map(&a, &a).unwrap().data().iter().all(|&e| e == 0.0));
        assert_eq!(mean_abs_error(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn uniform_offset() {
        let a = Raster::from_fn(4, 3, |x, y| (x + y) as f64);
        let b = a.map(|v| v + 2.0);
        assert!(error_map(&b, &a).unwrap().data().iter().all(|&e| e == 2.0));
    }

    #[test]
    fn half_off_by_two() {
        let t = Raster::filled(4, 2, 10.0);
        let f = Raster::from_fn(4, 2, |_, y| if y == 0 { 12.0 } else { 10.0 });
        assert_eq!(mean_abs_error(&f, &t).unwrap(), 1.0);
    }

    #[test]
    fn invalid_pixels_excluded() {
        let t = Raster::filled(2, 1, 10.0);
        let f = Raster::from_vec(2, 1, vec![f64::NAN, 13.0]).unwrap();
        assert_eq!(mean_abs_error(&f, &t).unwrap(), 3.0);
        let none = Raster::filled(2, 1, f64::NAN);
        assert!(matches!(
            mean_abs_error(&none, &t),
            Err(Error::EmptyStatistics)
        ));
    }

    #[test]
    fn shape_mismatch() {
        let a = Raster::filled(2, 2, 0.0);
        let b = Raster::filled(2, 3, 0.0);
        assert!(matches!(error_map(&a, &b), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn curve_examples() {
        let zero = Raster::filled(5, 5, 0.0f64);
        let c = accumulated_error_curve(&zero, 5);
        assert!(c.iter().all(|p| p.1 == 0.0));
        assert_eq!(c.last().unwrap().0, 25);

        let mut one = Raster::filled(3, 3, 0.0f64);
        one.set(1, 2, 3.0);
        let c = accumulated_error_curve(&one, 9);
        assert_eq!(c.len(), 9);
        assert!(c[..8].iter().all(|p| p.1 == 0.0));
        assert_eq!(c[8], (9, 3.0));
    }

    #[test]
    fn curve_endpoint_is_count_times_mae() {
        let t = Raster::from_fn(13, 7, |x, y| ((x * 31 + y * 17) % 11) as f64 * 0.37);
        let f = Raster::from_fn(13, 7, |x, y| ((x * 7 + y * 5) % 13) as f64 * 0.29);
        let r = ErrorReport::compute(&f, &t, 10).unwrap();
        assert_abs_diff_eq!(
            r.total_error(),
            r.valid_pixels as f64 * r.mean_abs_error,
            epsilon = 1e-9
        );
        assert!(r
            .accumulated_curve
            .windows(2)
            .all(|w| w[0].1 <= w[1].1 && w[0].0 < w[1].0));
    }
}
