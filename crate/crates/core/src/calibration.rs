//! Extrinsic rotation between the TOF camera and the thermopile array.
//!
//! A heated disc in front of an unheated wall is visible in both sensors.
//! Its center is located in every image pair ([`detect_target_thermal`],
//! [`detect_target_depth`]) and the three rotation angles are fitted by
//! minimizing the squared reprojection error of the TOF centers onto the IR
//! centers ([`estimate_rotation`]). The translation is measured by hand and
//! stays fixed.

use crate::error::{Error, Result};
use crate::fusion::optimal_two_split;
use crate::geometry::{
    depth_to_point, project_point, rotation_derivatives, rotation_from_angles, Extrinsics,
    Intrinsics, PixelCoord, Point3, TaitBryanAngles,
};
use crate::raster::{is_valid_depth, DepthImage, Mask, ThermalImage};
use crate::scalar::{median, Real};

/// Default offset of the thermal threshold above the image median, °C.
pub const DEFAULT_THRESHOLD_OFFSET: f64 = 5.0;
/// Default minimum distance of the target in front of the wall, meters.
pub const DEFAULT_BACKGROUND_GAP: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TargetMethod {
    /// Center of gravity weighted by each pixel's excess over the median.
    #[default]
    WeightedCentroid,
    /// Plain mean of the above-threshold pixel positions.
    MaskCentroid,
    /// Best circle of a Hough vote over the thresholded mask boundary.
    Hough,
}

impl std::str::FromStr for TargetMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "centroid" | "weighted" => Ok(Self::WeightedCentroid),
            "mask" | "mask-centroid" => Ok(Self::MaskCentroid),
            "hough" => Ok(Self::Hough),
            other => Err(Error::InvalidParameter(format!(
                "unknown target method '{other}'"
            ))),
        }
    }
}

/// Sub-pixel center of the hot target in a thermal image. Pixels warmer
/// than `median + threshold_offset` belong to the target.
pub fn detect_target_thermal<T: Real>(
    img: &ThermalImage<T>,
    method: TargetMethod,
    threshold_offset: T,
) -> Result<PixelCoord<T>> {
    let finite: Vec<T> = img
        .data()
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .collect();
    let base = median(&finite)
        .ok_or_else(|| Error::TargetNotFound("thermal image has no finite pixels".into()))?;
    let threshold = base + threshold_offset;
    let mask = img.map(|&t| t.is_finite() && t > threshold);
    if mask.count() == 0 {
        return Err(Error::TargetNotFound(format!(
            "no pixel above {threshold} (median {base})"
        )));
    }
    match method {
        TargetMethod::WeightedCentroid => Ok(weighted_centroid(img, &mask, |t| t - base)),
        TargetMethod::MaskCentroid => Ok(weighted_centroid(img, &mask, |_| T::one())),
        TargetMethod::Hough => hough_center(&mask),
    }
}

fn weighted_centroid<T: Real>(
    img: &ThermalImage<T>,
    mask: &Mask,
    weight: impl Fn(T) -> T,
) -> PixelCoord<T> {
    let (mut su, mut sv, mut sw) = (T::zero(), T::zero(), T::zero());
    for y in 0..img.height() {
        for x in 0..img.width() {
            if *mask.get(x, y) {
                let w = weight(*img.get(x, y));
                su = su + w * T::from_usize_lossy(x);
                sv = sv + w * T::from_usize_lossy(y);
                sw = sw + w;
            }
        }
    }
    PixelCoord::new(su / sw, sv / sw)
}

/// Circle Hough transform on the boundary of `mask`. Candidate centers lie on
/// a half-pixel grid inside the mask's bounding box and radii run over
/// `1..=min(w, h) / 2`. A boundary pixel votes for `(center, r)` when its
/// distance to the center is within half a pixel of `r`. All top-scoring
/// candidates are averaged.
fn hough_center<T: Real>(mask: &Mask) -> Result<PixelCoord<T>> {
    let (w, h) = mask.dims();
    let inside = |x: isize, y: isize| {
        x >= 0
            && y >= 0
            && (x as usize) < w
            && (y as usize) < h
            && *mask.get(x as usize, y as usize)
    };
    let mut boundary = Vec::new();
    let (mut x0, mut x1, mut y0, mut y1) = (usize::MAX, 0, usize::MAX, 0);
    for y in 0..h {
        for x in 0..w {
            if !*mask.get(x, y) {
                continue;
            }
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
            let (xi, yi) = (x as isize, y as isize);
            if !(inside(xi - 1, yi)
                && inside(xi + 1, yi)
                && inside(xi, yi - 1)
                && inside(xi, yi + 1))
            {
                boundary.push((T::from_usize_lossy(x), T::from_usize_lossy(y)));
            }
        }
    }
    let max_r = (w.min(h) / 2).max(1);
    let half = T::lit(0.5);
    let mut best = 0usize;
    let mut sum_u = T::zero();
    let mut sum_v = T::zero();
    let mut ties = 0usize;
    for cy2 in (2 * y0)..=(2 * y1) {
        let cv = T::from_usize_lossy(cy2) * half;
        for cx2 in (2 * x0)..=(2 * x1) {
            let cu = T::from_usize_lossy(cx2) * half;
            let dists: Vec<T> = boundary
                .iter()
                .map(|&(bu, bv)| (bu - cu).hypot(bv - cv))
                .collect();
            for r in 1..=max_r {
                let rf = T::from_usize_lossy(r);
                let score = dists.iter().filter(|&&d| (d - rf).abs() <= half).count();
                if score > best {
                    best = score;
                    sum_u = cu;
                    sum_v = cv;
                    ties = 1;
                } else if score == best && score > 0 {
                    sum_u = sum_u + cu;
                    sum_v = sum_v + cv;
                    ties += 1;
                }
            }
        }
    }
    if ties == 0 {
        return Err(Error::TargetNotFound("no circle candidates".into()));
    }
    let n = T::from_usize_lossy(ties);
    Ok(PixelCoord::new(sum_u / n, sum_v / n))
}

/// 3D center of the target in the TOF frame. The wall level is the median
/// of the far cluster of an optimal two-way depth split; pixels at least
/// `background_gap` nearer belong to the foreground, and the largest
/// 8-connected foreground component is the target. Its mean pixel position
/// is back-projected with the component's median depth.
pub fn detect_target_depth<T: Real>(
    img: &DepthImage<T>,
    k: &Intrinsics<T>,
    background_gap: T,
) -> Result<Point3<T>> {
    if img.dims() != (k.width, k.height) {
        return Err(Error::ShapeMismatch(format!(
            "depth image is {}x{}, intrinsics describe {}x{}",
            img.width(),
            img.height(),
            k.width,
            k.height
        )));
    }
    let valid: Vec<T> = img
        .data()
        .iter()
        .copied()
        .filter(|&d| is_valid_depth(d))
        .collect();
    if valid.is_empty() {
        return Err(Error::TargetNotFound(
            "depth image has no valid pixels".into(),
        ));
    }
    let wall = match optimal_two_split(&valid) {
        Some(split) => {
            let far: Vec<T> = split.far.iter().map(|&i| valid[i]).collect();
            median(&far).unwrap_or(split.far_mean)
        }
        None => valid[0],
    };
    let cut = wall - background_gap;
    let fg: Mask = img.map(|&d| is_valid_depth(d) && d <= cut);
    let target = fg
        .components()
        .into_iter()
        .max_by_key(|c| c.len())
        .ok_or_else(|| Error::TargetNotFound(format!("nothing nearer than {cut} m")))?;
    let n = T::from_usize_lossy(target.len());
    let u = target.iter().map(|p| T::from_usize_lossy(p.0)).sum::<T>() / n;
    let v = target.iter().map(|p| T::from_usize_lossy(p.1)).sum::<T>() / n;
    let depths: Vec<T> = target.iter().map(|&(x, y)| *img.get(x, y)).collect();
    let d = median(&depths).expect("non-empty component");
    depth_to_point(PixelCoord::new(u, v), d, k)
}

/// One target sighting: center in the TOF frame and on the IR array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibObservation<T> {
    pub tof_point: Point3<T>,
    pub ir_center: PixelCoord<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibResult<T> {
    pub angles: TaitBryanAngles<T>,
    /// Root mean square of the per-observation pixel distances.
    pub residual_rms: T,
    /// Accepted optimizer steps.
    pub iterations: usize,
    pub converged: bool,
    /// Cost `0.5 * sum of squared residuals` at the start and after every
    /// accepted step.
    pub cost_history: Vec<T>,
}

/// Stopping rules for [`estimate_rotation`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions<T> {
    pub max_iterations: usize,
    pub step_tol: T,
    pub rel_cost_tol: T,
    pub initial_lambda: T,
}

impl<T: Real> Default for LmOptions<T> {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            step_tol: T::lit(1e-10),
            rel_cost_tol: T::lit(1e-12),
            initial_lambda: T::lit(1e-3),
        }
    }
}

/// Pixel distance between the observed IR center and the projection of the
/// TOF center under `angles` and `t`.
pub fn reprojection_error<T: Real>(
    obs: &CalibObservation<T>,
    angles: &TaitBryanAngles<T>,
    t: &Point3<T>,
    k_ir: &Intrinsics<T>,
) -> Result<T> {
    let q = rotation_from_angles(angles).apply(&obs.tof_point) + *t;
    let p = project_point(&q, k_ir)?;
    Ok(obs.ir_center.distance(&p))
}

/// Stacked residuals `projection - observed`, or `None` if a point is behind
/// the IR camera.
fn residuals<T: Real>(
    obs: &[CalibObservation<T>],
    angles: &TaitBryanAngles<T>,
    t: &Point3<T>,
    k: &Intrinsics<T>,
) -> Option<Vec<T>> {
    let r = rotation_from_angles(angles);
    let mut out = Vec::with_capacity(2 * obs.len());
    for o in obs {
        let q = r.apply(&o.tof_point) + *t;
        let p = project_point(&q, k).ok()?;
        out.push(p.u - o.ir_center.u);
        out.push(p.v - o.ir_center.v);
    }
    Some(out)
}

/// Analytic Jacobian of [`residuals`], one `[d/da1, d/da2, d/da3]` row per residual.
fn jacobian<T: Real>(
    obs: &[CalibObservation<T>],
    angles: &TaitBryanAngles<T>,
    t: &Point3<T>,
    k: &Intrinsics<T>,
) -> Vec<[T; 3]> {
    let r = rotation_from_angles(angles);
    let dr = rotation_derivatives(angles);
    let mut rows = Vec::with_capacity(2 * obs.len());
    for o in obs {
        let q = r.apply(&o.tof_point) + *t;
        let iz = T::one() / q.z;
        let mut ju = [T::zero(); 3];
        let mut jv = [T::zero(); 3];
        for (a, d) in dr.iter().enumerate() {
            let dq = d.apply(&o.tof_point);
            ju[a] = k.fx * (dq.x * iz - q.x * dq.z * iz * iz);
            jv[a] = k.fy * (dq.y * iz - q.y * dq.z * iz * iz);
        }
        rows.push(ju);
        rows.push(jv);
    }
    rows
}

fn half_sq_norm<T: Real>(r: &[T]) -> T {
    r.iter().map(|&v| v * v).sum::<T>() * T::lit(0.5)
}

/// Solves the 3x3 system `a x = b` by Gaussian elimination with partial pivoting.
fn solve3<T: Real>(mut a: [[T; 3]; 3], mut b: [T; 3]) -> Option<[T; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| {
            a[i][col]
                .abs()
                .partial_cmp(&a[j][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if a[piv][col].abs() <= T::min_positive_value() {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for c in col..3 {
                a[row][c] = a[row][c] - f * a[col][c];
            }
            b[row] = b[row] - f * b[col];
        }
    }
    let mut x = [T::zero(); 3];
    for row in (0..3).rev() {
        let mut s = b[row];
        for c in row + 1..3 {
            s = s - a[row][c] * x[c];
        }
        x[row] = s / a[row][row];
    }
    Some(x)
}

/// Fits the rotation angles with Levenberg-Marquardt starting from zero.
pub fn estimate_rotation<T: Real>(
    obs: &[CalibObservation<T>],
    t: &Point3<T>,
    k_ir: &Intrinsics<T>,
) -> Result<CalibResult<T>> {
    estimate_rotation_with(obs, t, k_ir, TaitBryanAngles::zero(), &LmOptions::default())
}

pub fn estimate_rotation_with<T: Real>(
    obs: &[CalibObservation<T>],
    t: &Point3<T>,
    k_ir: &Intrinsics<T>,
    initial: TaitBryanAngles<T>,
    opts: &LmOptions<T>,
) -> Result<CalibResult<T>> {
    if obs.len() < 2 {
        return Err(Error::Underdetermined {
            needed: 2,
            got: obs.len(),
        });
    }
    let r0 = rotation_from_angles(&initial);
    for (index, o) in obs.iter().enumerate() {
        if !(o.tof_point.is_finite() && o.ir_center.u.is_finite() && o.ir_center.v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "observation {index} is not finite"
            )));
        }
        if !((r0.apply(&o.tof_point) + *t).z > T::zero()) {
            return Err(Error::DegenerateObservation { index });
        }
    }

    let mut x = initial.as_array();
    let mut res = residuals(obs, &initial, t, k_ir).expect("checked in front of camera");
    let mut cost = half_sq_norm(&res);
    let mut history = vec![cost];
    let mut lambda = opts.initial_lambda;
    let mut iterations = 0;
    let mut converged = false;
    let lambda_max = T::lit(1e32);

    'outer: while iterations < opts.max_iterations {
        if cost == T::zero() {
            converged = true;
            break;
        }
        let angles = TaitBryanAngles::from_array(x);
        let jac = jacobian(obs, &angles, t, k_ir);
        let mut jtj = [[T::zero(); 3]; 3];
        let mut jtr = [T::zero(); 3];
        for (row, &ri) in jac.iter().zip(&res) {
            for i in 0..3 {
                jtr[i] = jtr[i] + row[i] * ri;
                for j in 0..3 {
                    jtj[i][j] = jtj[i][j] + row[i] * row[j];
                }
            }
        }
        loop {
            let mut a = jtj;
            for (i, row) in a.iter_mut().enumerate() {
                row[i] = row[i] + lambda * jtj[i][i].max(T::epsilon());
            }
            let Some(step) = solve3(a, [-jtr[0], -jtr[1], -jtr[2]]) else {
                lambda = lambda * T::lit(10.0);
                if lambda > lambda_max {
                    break 'outer;
                }
                continue;
            };
            let step_norm = step.iter().map(|&s| s * s).sum::<T>().sqrt();
            if step_norm < opts.step_tol {
                converged = true;
                break 'outer;
            }
            let trial = [x[0] + step[0], x[1] + step[1], x[2] + step[2]];
            let trial_res = residuals(obs, &TaitBryanAngles::from_array(trial), t, k_ir);
            let trial_cost = trial_res.as_deref().map_or(T::infinity(), half_sq_norm);
            if trial_cost < cost {
                let rel = (cost - trial_cost) / cost;
                x = trial;
                res = trial_res.expect("finite cost implies residuals");
                cost = trial_cost;
                history.push(cost);
                iterations += 1;
                lambda = (lambda / T::lit(10.0)).max(T::lit(1e-12));
                if rel < opts.rel_cost_tol {
                    converged = true;
                    break 'outer;
                }
                break;
            }
            lambda = lambda * T::lit(10.0);
            if lambda > lambda_max {
                break 'outer;
            }
        }
    }

    let n = T::from_usize_lossy(obs.len());
    let residual_rms = (cost * (T::one() + T::one()) / n).sqrt();
    Ok(CalibResult {
        angles: TaitBryanAngles::from_array(x),
        residual_rms,
        iterations,
        converged,
        cost_history: history,
    })
}

/// Everything needed to map TOF pixels onto the IR array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigCalibration<T> {
    pub ir: Intrinsics<T>,
    pub tof: Intrinsics<T>,
    pub ext: Extrinsics<T>,
}

/// Detects the target in every `(depth, thermal)` pair and fits the rotation.
pub fn calibrate_from_images<T: Real>(
    pairs: &[(DepthImage<T>, ThermalImage<T>)],
    tof: &Intrinsics<T>,
    ir: &Intrinsics<T>,
    t: Point3<T>,
    method: TargetMethod,
    threshold_offset: T,
    background_gap: T,
) -> Result<(RigCalibration<T>, CalibResult<T>)> {
    let mut obs = Vec::with_capacity(pairs.len());
    for (depth, thermal) in pairs {
        if thermal.dims() != (ir.width, ir.height) {
            return Err(Error::ShapeMismatch(format!(
                "thermal image is {}x{}, IR intrinsics describe {}x{}",
                thermal.width(),
                thermal.height(),
                ir.width,
                ir.height
            )));
        }
        obs.push(CalibObservation {
            tof_point: detect_target_depth(depth, tof, background_gap)?,
            ir_center: detect_target_thermal(thermal, method, threshold_offset)?,
        });
    }
    let result = estimate_rotation(&obs, &t, ir)?;
    let calib = RigCalibration {
        ir: *ir,
        tof: *tof,
        ext: Extrinsics::new(result.angles, t),
    };
    Ok((calib, result))
}
