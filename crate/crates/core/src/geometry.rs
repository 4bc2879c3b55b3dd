//! Pinhole camera models, rigid transforms and the Tait-Bryan rotation.
//!
//! Pixel coordinates are `(u, v) = (column, row)` with the origin at the
//! center of the top-left pixel, so pixel `(i, j)` covers
//! `[i - 0.5, i + 0.5) x [j - 0.5, j + 0.5)`.
//!
//! Depth values are radial: the length of the ray from the optical center,
//! not the planar `z` coordinate.

use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Pinhole intrinsics of one sensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intrinsics<T> {
    pub fx: T,
    pub fy: T,
    pub cx: T,
    pub cy: T,
    pub width: usize,
    pub height: usize,
}

impl<T: Real> Intrinsics<T> {
    pub fn new(fx: T, fy: T, cx: T, cy: T, width: usize, height: usize) -> Result<Self> {
        let k = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.fx, self.fy, self.cx, self.cy]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("intrinsics must be finite".into()));
        }
        if self.fx <= T::zero() || self.fy <= T::zero() {
            return Err(Error::InvalidParameter(
                "focal lengths must be positive".into(),
            ));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidParameter(
                "resolution must be at least 1x1".into(),
            ));
        }
        let w = T::from_usize_lossy(self.width);
        let h = T::from_usize_lossy(self.height);
        if self.cx < T::zero() || self.cx >= w || self.cy < T::zero() || self.cy >= h {
            return Err(Error::InvalidParameter(
                "principal point must lie inside the sensor".into(),
            ));
        }
        Ok(())
    }

    /// Intrinsics of a sensor covering the same field of view as `self` on a
    /// `width x height` grid. Each new pixel integrates a block of
    /// `self.width / width` by `self.height / height` original pixels.
    pub fn rescaled(&self, width: usize, height: usize) -> Result<Self> {
        let sx = T::from_usize_lossy(width) / T::from_usize_lossy(self.width);
        let sy = T::from_usize_lossy(height) / T::from_usize_lossy(self.height);
        let half = T::lit(0.5);
        Self::new(
            self.fx * sx,
            self.fy * sy,
            (self.cx + half) * sx - half,
            (self.cy + half) * sy - half,
            width,
            height,
        )
    }

    /// True when `p` lies in `[-0.5, width - 0.5) x [-0.5, height - 0.5)`.
    pub fn contains(&self, p: PixelCoord<T>) -> bool {
        let half = T::lit(0.5);
        let w = T::from_usize_lossy(self.width);
        let h = T::from_usize_lossy(self.height);
        p.u >= -half && p.u < w - half && p.v >= -half && p.v < h - half
    }
}

/// The three rotation parameters, in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TaitBryanAngles<T> {
    pub a1: T,
    pub a2: T,
    pub a3: T,
}

impl<T: Real> TaitBryanAngles<T> {
    pub fn new(a1: T, a2: T, a3: T) -> Self {
        Self { a1, a2, a3 }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn as_array(&self) -> [T; 3] {
        [self.a1, self.a2, self.a3]
    }

    pub fn from_array(a: [T; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    /// Wraps each angle into `[-pi, pi]`.
    pub fn canonical(&self) -> Self {
        let wrap = |a: T| {
            let two_pi = T::PI() + T::PI();
            let mut r = a % two_pi;
            if r > T::PI() {
                r = r - two_pi;
            } else if r < -T::PI() {
                r = r + two_pi;
            }
            r
        };
        Self::new(wrap(self.a1), wrap(self.a2), wrap(self.a3))
    }
}

/// Rotation (angles) plus translation from the TOF frame into the IR frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Extrinsics<T> {
    pub angles: TaitBryanAngles<T>,
    pub t: Point3<T>,
}

impl<T: Real> Extrinsics<T> {
    pub fn new(angles: TaitBryanAngles<T>, t: Point3<T>) -> Self {
        Self { angles, t }
    }

    pub fn identity() -> Self {
        Self::new(TaitBryanAngles::zero(), Point3::origin())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Point3<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn origin() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn dot(&self, o: &Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(&self) -> T {
        self.dot(self).sqrt()
    }

    pub fn scale(&self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl<T: Real> Add for Point3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> Sub for Point3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

/// Continuous pixel coordinate; may lie outside the sensor.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PixelCoord<T> {
    pub u: T,
    pub v: T,
}

impl<T: Real> PixelCoord<T> {
    pub fn new(u: T, v: T) -> Self {
        Self { u, v }
    }

    pub fn distance(&self, o: &Self) -> T {
        (self.u - o.u).hypot(self.v - o.v)
    }
}

/// Row-major 3x3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matrix3<T>(pub [[T; 3]; 3]);

impl<T: Real> Matrix3<T> {
    pub fn identity() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self([[o, z, z], [z, o, z], [z, z, o]])
    }

    #[inline]
    pub fn row(&self, i: usize) -> [T; 3] {
        self.0[i]
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        Self(std::array::from_fn(|i| std::array::from_fn(|j| m[j][i])))
    }

    pub fn determinant(&self) -> T {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn apply(&self, p: &Point3<T>) -> Point3<T> {
        let m = &self.0;
        Point3::new(
            m[0][0] * p.x + m[0][1] * p.y + m[0][2] * p.z,
            m[1][0] * p.x + m[1][1] * p.y + m[1][2] * p.z,
            m[2][0] * p.x + m[2][1] * p.y + m[2][2] * p.z,
        )
    }

    /// Largest absolute element.
    pub fn max_abs(&self) -> T {
        self.0
            .iter()
            .flatten()
            .fold(T::zero(), |acc, v| acc.max(v.abs()))
    }
}

impl<T: Real> Mul for Matrix3<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let (a, b) = (&self.0, &o.0);
        Self(std::array::from_fn(|i| {
            std::array::from_fn(|j| a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j])
        }))
    }
}

impl<T: Real> Sub for Matrix3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self(std::array::from_fn(|i| {
            std::array::from_fn(|j| self.0[i][j] - o.0[i][j])
        }))
    }
}

/// ZYX (yaw-pitch-roll) Tait-Bryan rotation.
///
/// ```text
/// | c1c3              c1s3              -s1  |
/// | s2s1c3 - c2s3     s2s1s3 + c2c3     c1s2 |
/// | c2s1c3 + s2s3     c2s1s3 - s2c3     c1c2 |
/// ```
///
/// Equivalent to the frame rotations `Rx(a2) * Ry(a1) * Rz(a3)`.
pub fn rotation_from_angles<T: Real>(angles: &TaitBryanAngles<T>) -> Matrix3<T> {
    let (s1, c1) = angles.a1.sin_cos();
    let (s2, c2) = angles.a2.sin_cos();
    let (s3, c3) = angles.a3.sin_cos();
    Matrix3([
        [c1 * c3, c1 * s3, -s1],
        [s2 * s1 * c3 - c2 * s3, s2 * s1 * s3 + c2 * c3, c1 * s2],
        [c2 * s1 * c3 + s2 * s3, c2 * s1 * s3 - s2 * c3, c1 * c2],
    ])
}

/// Partial derivatives of [`rotation_from_angles`] with respect to `a1`, `a2`, `a3`.
pub fn rotation_derivatives<T: Real>(angles: &TaitBryanAngles<T>) -> [Matrix3<T>; 3] {
    let (s1, c1) = angles.a1.sin_cos();
    let (s2, c2) = angles.a2.sin_cos();
    let (s3, c3) = angles.a3.sin_cos();
    let z = T::zero();
    [
        Matrix3([
            [-s1 * c3, -s1 * s3, -c1],
            [s2 * c1 * c3, s2 * c1 * s3, -s1 * s2],
            [c2 * c1 * c3, c2 * c1 * s3, -s1 * c2],
        ]),
        Matrix3([
            [z, z, z],
            [c2 * s1 * c3 + s2 * s3, c2 * s1 * s3 - s2 * c3, c1 * c2],
            [-s2 * s1 * c3 + c2 * s3, -s2 * s1 * s3 - c2 * c3, -c1 * s2],
        ]),
        Matrix3([
            [-c1 * s3, c1 * c3, z],
            [-s2 * s1 * s3 - c2 * c3, s2 * s1 * c3 - c2 * s3, z],
            [-c2 * s1 * s3 + s2 * c3, c2 * s1 * c3 + s2 * s3, z],
        ]),
    ]
}

/// Back-projects a pixel with a radial depth measurement into a 3D point.
pub fn depth_to_point<T: Real>(
    pixel: PixelCoord<T>,
    depth: T,
    k: &Intrinsics<T>,
) -> Result<Point3<T>> {
    if !(depth.is_finite() && depth > T::zero()) {
        return Err(Error::InvalidMeasurement(format!(
            "depth must be positive and finite, got {depth}"
        )));
    }
    if !k.contains(pixel) {
        return Err(Error::InvalidParameter(format!(
            "pixel ({}, {}) outside {}x{} sensor",
            pixel.u, pixel.v, k.width, k.height
        )));
    }
    let ray = Point3::new((pixel.u - k.cx) / k.fx, (pixel.v - k.cy) / k.fy, T::one());
    Ok(ray.scale(depth / ray.norm()))
}

/// `R * p + t` with `R` from [`rotation_from_angles`].
pub fn transform_point<T: Real>(p: &Point3<T>, ext: &Extrinsics<T>) -> Point3<T> {
    rotation_from_angles(&ext.angles).apply(p) + ext.t
}

/// Pinhole projection. No clamping; callers decide what is off-sensor.
pub fn project_point<T: Real>(p: &Point3<T>, k: &Intrinsics<T>) -> Result<PixelCoord<T>> {
    if !(p.z > T::zero()) {
        return Err(Error::BehindCamera {
            z: p.z.to_f64_lossy(),
        });
    }
    Ok(PixelCoord::new(
        k.fx * p.x / p.z + k.cx,
        k.fy * p.y / p.z + k.cy,
    ))
}
