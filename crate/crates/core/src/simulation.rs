//! Synthetic evaluation scenes.
//!
//! A scene is a set of flat, uniformly warm primitives in front of a
//! background. Rendering gives the high-resolution temperature and depth
//! ground truth; the simulated sensors add Gaussian noise to both and
//! area-integrate the thermal raster down to thermopile resolution.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::{Extrinsics, Intrinsics};
use crate::raster::{DepthImage, Raster, ThermalImage};
use crate::scalar::Real;

pub const DEFAULT_CANVAS: (usize, usize) = (160, 120);
pub const DEFAULT_THERMAL: (usize, usize) = (16, 16);
pub const DEFAULT_SIGMA_DEPTH: f64 = 0.01;
pub const DEFAULT_SIGMA_TEMP: f64 = 0.5;
/// Focal length of the simulated TOF camera, in TOF pixels.
pub const DEFAULT_TOF_FOCAL: f64 = 150.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape<T> {
    /// Covers pixel centers with `x <= u < x + w` and `y <= v < y + h`.
    Rect { x: T, y: T, w: T, h: T },
    /// Covers pixel centers within distance `r` of `(cx, cy)`.
    Disc { cx: T, cy: T, r: T },
}

impl<T: Real> Shape<T> {
    pub fn covers(&self, u: T, v: T) -> bool {
        match *self {
            Shape::Rect { x, y, w, h } => u >= x && u < x + w && v >= y && v < y + h,
            Shape::Disc { cx, cy, r } => {
                let (du, dv) = (u - cx, v - cy);
                du * du + dv * dv <= r * r
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Primitive<T> {
    pub shape: Shape<T>,
    pub depth: T,
    pub temp: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec<T> {
    pub sigma_depth: T,
    pub sigma_temp: T,
    pub seed: u64,
}

impl<T: Real> Default for NoiseSpec<T> {
    fn default() -> Self {
        Self {
            sigma_depth: T::lit(DEFAULT_SIGMA_DEPTH),
            sigma_temp: T::lit(DEFAULT_SIGMA_TEMP),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec<T> {
    pub width: usize,
    pub height: usize,
    pub background_depth: T,
    pub background_temp: T,
    pub primitives: Vec<Primitive<T>>,
    pub noise: NoiseSpec<T>,
}

impl<T: Real> SceneSpec<T> {
    pub fn empty(width: usize, height: usize, background_depth: T, background_temp: T) -> Self {
        Self {
            width,
            height,
            background_depth,
            background_temp,
            primitives: Vec::new(),
            noise: NoiseSpec::default(),
        }
    }

    /// The scene used for the accuracy comparisons: a person, a box, a small
    /// hot cup and a cold window in front of a wall, each separated from the
    /// others by background.
    pub fn default_scene() -> Self {
        let (w, h) = DEFAULT_CANVAS;
        let mut s = Self::empty(w, h, T::lit(4.0), T::lit(20.0));
        let rect = |x: f64, y: f64, w: f64, h: f64, depth: f64, temp: f64| Primitive {
            shape: Shape::Rect {
                x: T::lit(x),
                y: T::lit(y),
                w: T::lit(w),
                h: T::lit(h),
            },
            depth: T::lit(depth),
            temp: T::lit(temp),
        };
        let disc = |cx: f64, cy: f64, r: f64, depth: f64, temp: f64| Primitive {
            shape: Shape::Disc {
                cx: T::lit(cx),
                cy: T::lit(cy),
                r: T::lit(r),
            },
            depth: T::lit(depth),
            temp: T::lit(temp),
        };
        s.primitives = vec![
            rect(23.0, 13.0, 24.0, 96.0, 2.0, 34.0),
            rect(67.0, 58.0, 36.0, 44.0, 3.0, 22.0),
            disc(126.0, 38.0, 4.0, 2.5, 60.0),
            rect(114.0, 81.0, 33.0, 28.0, 3.6, 12.0),
        ];
        s
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidScene("canvas must be at least 1x1".into()));
        }
        let ok = |d: T| d.is_finite() && d > T::zero();
        if !ok(self.background_depth) || !self.background_temp.is_finite() {
            return Err(Error::InvalidScene(
                "background depth must be positive".into(),
            ));
        }
        for (i, p) in self.primitives.iter().enumerate() {
            if !ok(p.depth) {
                return Err(Error::InvalidScene(format!(
                    "primitive {i} has non-positive depth {}",
                    p.depth
                )));
            }
            if !p.temp.is_finite() {
                return Err(Error::InvalidScene(format!(
                    "primitive {i} temperature not finite"
                )));
            }
        }
        if self.noise.sigma_depth < T::zero() || self.noise.sigma_temp < T::zero() {
            return Err(Error::InvalidScene(
                "noise sigmas must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth<T> {
    pub thermal_hi: ThermalImage<T>,
    pub depth_hi: DepthImage<T>,
}

/// Rasterizes the scene. The nearest primitive covering a pixel center wins;
/// among equally deep primitives the later one wins.
pub fn render_scene<T: Real>(spec: &SceneSpec<T>) -> Result<GroundTruth<T>> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let mut depth = Raster::filled(w, h, spec.background_depth);
    let mut temp = Raster::filled(w, h, spec.background_temp);
    for y in 0..h {
        let v = T::from_usize_lossy(y);
        for x in 0..w {
            let u = T::from_usize_lossy(x);
            let mut best: Option<&Primitive<T>> = None;
            for p in &spec.primitives {
                if p.shape.covers(u, v) && best.is_none_or(|b| p.depth <= b.depth) {
                    best = Some(p);
                }
            }
            if let Some(p) = best {
                if p.depth <= spec.background_depth {
                    depth.set(x, y, p.depth);
                    temp.set(x, y, p.temp);
                }
            }
        }
    }
    Ok(GroundTruth {
        thermal_hi: temp,
        depth_hi: depth,
    })
}

/// Standard normal sample for element `index` under `seed`. Each element has
/// its own ChaCha stream, so the value does not depend on evaluation order.
pub fn normal_sample(seed: u64, index: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng.sample(StandardNormal)
}

/// Adds independent zero-mean Gaussian noise. `sigma == 0` returns the input
/// unchanged; non-finite values stay as they are.
pub fn add_noise<T: Real>(raster: &Raster<T>, sigma: T, seed: u64) -> Raster<T> {
    if sigma == T::zero() {
        return raster.clone();
    }
    let mut out = raster.clone();
    for (i, v) in out.data_mut().iter_mut().enumerate() {
        if v.is_finite() {
            *v = *v + sigma * T::lit(normal_sample(seed, i as u64));
        }
    }
    out
}

/// Overlap weights of input cells `[c, c+1)` with output cell `[i*s, (i+1)*s)`,
/// `s = n_in / n_out`, as `(first input index, weights)` per output cell.
fn axis_weights<T: Real>(n_in: usize, n_out: usize) -> Vec<(usize, Vec<T>)> {
    let ni = T::from_usize_lossy(n_in);
    let no = T::from_usize_lossy(n_out);
    (0..n_out)
        .map(|i| {
            // exact for integer ratios; boundaries in input units
            let lo = T::from_usize_lossy(i) * ni / no;
            let hi = T::from_usize_lossy(i + 1) * ni / no;
            let first = lo.floor().to_usize().unwrap_or(0);
            let last = (hi.ceil().to_usize().unwrap_or(n_in)).min(n_in);
            let weights = (first..last)
                .map(|c| {
                    let c0 = T::from_usize_lossy(c);
                    let c1 = c0 + T::one();
                    (hi.min(c1) - lo.max(c0)).max(T::zero())
                })
                .collect();
            (first, weights)
        })
        .collect()
}

/// Area-integrating downsample: each output pixel is the area-weighted mean
/// of the input pixels under its footprint, including fractional edges.
pub fn downsample_area<T: Real>(
    thermal_hi: &ThermalImage<T>,
    out_w: usize,
    out_h: usize,
) -> Result<ThermalImage<T>> {
    let (w, h) = thermal_hi.dims();
    if out_w == 0 || out_h == 0 || out_w > w || out_h > h {
        return Err(Error::InvalidDownsample(format!(
            "cannot downsample {w}x{h} to {out_w}x{out_h}"
        )));
    }
    let wx = axis_weights::<T>(w, out_w);
    let wy = axis_weights::<T>(h, out_h);
    let area = T::from_usize_lossy(w) / T::from_usize_lossy(out_w) * T::from_usize_lossy(h)
        / T::from_usize_lossy(out_h);
    Ok(Raster::from_fn(out_w, out_h, |ox, oy| {
        let (x0, ref xs) = wx[ox];
        let (y0, ref ys) = wy[oy];
        let mut acc = T::zero();
        for (dy, &wyv) in ys.iter().enumerate() {
            let mut row = T::zero();
            for (dx, &wxv) in xs.iter().enumerate() {
                row = row + wxv * *thermal_hi.get(x0 + dx, y0 + dy);
            }
            acc = acc + wyv * row;
        }
        acc / area
    }))
}

/// Co-located TOF and IR cameras sharing one field of view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulatedRig<T> {
    pub k_tof: Intrinsics<T>,
    pub k_ir: Intrinsics<T>,
    pub ext: Extrinsics<T>,
}

impl<T: Real> SimulatedRig<T> {
    /// TOF camera with focal length `focal` centered on its canvas; IR camera
    /// covering the same field of view so that every IR pixel sees exactly the
    /// block of TOF pixels it integrates in [`downsample_area`].
    pub fn aligned(tof: (usize, usize), ir: (usize, usize), focal: T) -> Result<Self> {
        let half = T::lit(0.5);
        let k_tof = Intrinsics::new(
            focal,
            focal,
            T::from_usize_lossy(tof.0) / (T::one() + T::one()) - half,
            T::from_usize_lossy(tof.1) / (T::one() + T::one()) - half,
            tof.0,
            tof.1,
        )?;
        let k_ir = k_tof.rescaled(ir.0, ir.1)?;
        Ok(Self {
            k_tof,
            k_ir,
            ext: Extrinsics::identity(),
        })
    }

    pub fn for_scene(spec: &SceneSpec<T>, ir: (usize, usize)) -> Result<Self> {
        Self::aligned((spec.width, spec.height), ir, T::lit(DEFAULT_TOF_FOCAL))
    }
}

/// One simulated capture: clean ground truth plus what the sensors report.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedFrame<T> {
    pub truth: GroundTruth<T>,
    /// Noisy depth at TOF resolution; non-positive noisy values become NaN.
    pub depth: DepthImage<T>,
    /// Noisy thermal image at thermopile resolution.
    pub thermal: ThermalImage<T>,
}

/// Seed used for the thermal noise, distinct from the depth noise stream.
fn thermal_seed(seed: u64) -> u64 {
    seed ^ 0x9e37_79b9_7f4a_7c15
}

/// Renders `spec`, adds noise to both rasters and integrates the thermal
/// raster down to `ir` resolution.
pub fn simulate<T: Real>(spec: &SceneSpec<T>, ir: (usize, usize)) -> Result<SimulatedFrame<T>> {
    let truth = render_scene(spec)?;
    let depth = add_noise(&truth.depth_hi, spec.noise.sigma_depth, spec.noise.seed).map(|&d| {
        if d > T::zero() {
            d
        } else {
            T::nan()
        }
    });
    let noisy_temp = add_noise(
        &truth.thermal_hi,
        spec.noise.sigma_temp,
        thermal_seed(spec.noise.seed),
    );
    let thermal = downsample_area(&noisy_temp, ir.0, ir.1)?;
    Ok(SimulatedFrame {
        truth,
        depth,
        thermal,
    })
}
