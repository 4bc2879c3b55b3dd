//! Helpers shared by the integration tests: independent oracles and
//! synthetic data builders.
#![allow(dead_code)]

use thermofuse::calibration::CalibObservation;
use thermofuse::geometry::{
    depth_to_point, project_point, transform_point, Extrinsics, Intrinsics, PixelCoord, Point3,
    TaitBryanAngles,
};
use thermofuse::raster::{DepthImage, Mask, Raster, ThermalImage};
use thermofuse::simulation::{Primitive, SceneSpec, Shape};

pub type M3 = [[f64; 3]; 3];

pub fn matmul(a: &M3, b: &M3) -> M3 {
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    m
}

/// Passive frame rotations about x, y, z.
pub fn rx(a: f64) -> M3 {
    let (s, c) = a.sin_cos();
    [[1.0, 0.0, 0.0], [0.0, c, s], [0.0, -s, c]]
}

pub fn ry(a: f64) -> M3 {
    let (s, c) = a.sin_cos();
    [[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]]
}

pub fn rz(a: f64) -> M3 {
    let (s, c) = a.sin_cos();
    [[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]]
}

/// Rotation built by composing single-axis rotations, `Rx(a2) Ry(a1) Rz(a3)`.
pub fn composed_rotation(a1: f64, a2: f64, a3: f64) -> M3 {
    matmul(&matmul(&rx(a2), &ry(a1)), &rz(a3))
}

/// The first two rows written out term by term.
pub fn printed_rows(a1: f64, a2: f64, a3: f64) -> [[f64; 3]; 2] {
    let (s1, c1) = a1.sin_cos();
    let (s2, c2) = a2.sin_cos();
    let (s3, c3) = a3.sin_cos();
    [
        [c1 * c3, c1 * s3, -s1],
        [s2 * s1 * c3 - c2 * s3, s2 * s1 * s3 + c2 * c3, c1 * s2],
    ]
}

/// Exhaustive optimal 2-split: tries every threshold between consecutive
/// distinct sorted values and recomputes each cluster's SSE from scratch.
/// Returns `(sse, threshold)` where the near cluster is `v <= threshold`.
pub fn brute_force_split(values: &[f64]) -> Option<(f64, f64)> {
    let mut distinct: Vec<f64> = values.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 2 {
        return None;
    }
    let sse = |c: &[f64]| {
        let m = c.iter().sum::<f64>() / c.len() as f64;
        c.iter().map(|v| (v - m) * (v - m)).sum::<f64>()
    };
    let mut best: Option<(f64, f64)> = None;
    for &thr in &distinct[..distinct.len() - 1] {
        let near: Vec<f64> = values.iter().copied().filter(|&v| v <= thr).collect();
        let far: Vec<f64> = values.iter().copied().filter(|&v| v > thr).collect();
        let cost = sse(&near) + sse(&far);
        if best.is_none_or(|(b, _)| cost < b) {
            best = Some((cost, thr));
        }
    }
    best
}

/// 8-connected component count by explicit stack flood fill.
pub fn flood_fill_components(mask: &Mask) -> usize {
    let (w, h) = mask.dims();
    let mut seen = vec![false; w * h];
    let mut count = 0;
    for start in 0..w * h {
        if !mask.data()[start] || seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(i) = stack.pop() {
            let (x, y) = ((i % w) as i64, (i / w) as i64);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if mask.data()[j] && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
    }
    count
}

pub fn disc(cx: f64, cy: f64, r: f64, depth: f64, temp: f64) -> Primitive<f64> {
    Primitive {
        shape: Shape::Disc { cx, cy, r },
        depth,
        temp,
    }
}

pub fn rect(x: f64, y: f64, w: f64, h: f64, depth: f64, temp: f64) -> Primitive<f64> {
    Primitive {
        shape: Shape::Rect { x, y, w, h },
        depth,
        temp,
    }
}

/// Camera pair used by the calibration tests: a 160x120 TOF camera and a
/// 16x16 thermopile with a field of view similar to the TOF camera's.
pub fn calibration_rig() -> (Intrinsics<f64>, Intrinsics<f64>) {
    let tof = Intrinsics::new(150.0, 150.0, 79.5, 59.5, 160, 120).unwrap();
    let ir = Intrinsics::new(15.0, 15.0, 7.5, 7.5, 16, 16).unwrap();
    (tof, ir)
}

/// Exact correspondences for `n` target positions spread over the TOF view.
pub fn synthetic_observations(
    n: usize,
    ext: &Extrinsics<f64>,
    tof: &Intrinsics<f64>,
    ir: &Intrinsics<f64>,
    rng: &mut impl rand::Rng,
) -> Vec<CalibObservation<f64>> {
    let mut obs = Vec::with_capacity(n);
    while obs.len() < n {
        let px = PixelCoord::new(
            rng.random_range(10.0..tof.width as f64 - 10.0),
            rng.random_range(10.0..tof.height as f64 - 10.0),
        );
        let d = rng.random_range(1.0..4.0);
        let p = depth_to_point(px, d, tof).unwrap();
        let Ok(c) = project_point(&transform_point(&p, ext), ir) else {
            continue;
        };
        if !ir.contains(c) {
            continue;
        }
        obs.push(CalibObservation {
            tof_point: p,
            ir_center: c,
        });
    }
    obs
}

/// Calibration image pair: a warm disc target in front of a wall, seen by
/// the TOF camera directly and by the IR camera through `ext`. The IR image
/// is formed by splatting every TOF pixel's temperature onto the IR pixel it
/// projects to and averaging.
pub fn target_pair(
    ext: &Extrinsics<f64>,
    tof: &Intrinsics<f64>,
    ir: &Intrinsics<f64>,
    center: (f64, f64),
    radius: f64,
) -> (DepthImage<f64>, ThermalImage<f64>, Point3<f64>) {
    let (wall_d, wall_t, target_d, target_t) = (4.0, 20.0, 2.0, 60.0);
    let mut scene = SceneSpec::empty(tof.width, tof.height, wall_d, wall_t);
    scene
        .primitives
        .push(disc(center.0, center.1, radius, target_d, target_t));
    let truth = thermofuse::simulation::render_scene(&scene).unwrap();
    let mut sum = vec![0.0; ir.width * ir.height];
    let mut cnt = vec![0usize; ir.width * ir.height];
    for y in 0..tof.height {
        for x in 0..tof.width {
            let p = depth_to_point(
                PixelCoord::new(x as f64, y as f64),
                *truth.depth_hi.get(x, y),
                tof,
            )
            .unwrap();
            let Ok(c) = project_point(&transform_point(&p, ext), ir) else {
                continue;
            };
            if !ir.contains(c) {
                continue;
            }
            let (ix, iy) = ((c.u + 0.5).floor() as usize, (c.v + 0.5).floor() as usize);
            sum[iy * ir.width + ix] += *truth.thermal_hi.get(x, y);
            cnt[iy * ir.width + ix] += 1;
        }
    }
    let thermal = Raster::from_vec(
        ir.width,
        ir.height,
        sum.iter()
            .zip(&cnt)
            .map(|(&s, &n)| if n == 0 { wall_t } else { s / n as f64 })
            .collect(),
    )
    .unwrap();
    let target = depth_to_point(PixelCoord::new(center.0, center.1), target_d, tof).unwrap();
    (truth.depth_hi, thermal, target)
}

/// Target centers on a grid over the central part of the TOF view.
pub fn target_grid() -> Vec<(f64, f64)> {
    let mut v = Vec::new();
    for &u in &[40.0, 80.0, 120.0] {
        for &w in &[30.0, 60.0, 90.0] {
            v.push((u, w));
        }
    }
    v
}

pub fn rig_extrinsics(a1: f64, a2: f64, a3: f64) -> Extrinsics<f64> {
    Extrinsics::new(
        TaitBryanAngles::new(a1, a2, a3),
        Point3::new(0.05, 0.0, 0.0),
    )
}

/// Piecewise-constant scene on a 160x160 canvas where every IR pixel of a
/// 16x16 array covers a 10x10 block and each mixed block straddles exactly
/// one object edge next to a homogeneous block.
pub fn exact_recovery_scene() -> SceneSpec<f64> {
    let mut s = SceneSpec::empty(160, 160, 4.0, 20.0);
    s.primitives = vec![
        rect(23.0, 13.0, 24.0, 96.0, 2.0, 34.0),
        rect(67.0, 58.0, 36.0, 44.0, 3.0, 22.0),
        disc(126.0, 38.0, 4.0, 2.5, 60.0),
        rect(114.0, 81.0, 33.0, 28.0, 3.6, 12.0),
        disc(70.0, 135.0, 9.0, 1.5, 36.5),
    ];
    s.noise.sigma_depth = 0.0;
    s.noise.sigma_temp = 0.0;
    s
}

/// Position of the warm and the cold disc in frame `f` of the tracking
/// sequence; both move at most 3 px per frame.
pub fn sequence_positions(f: usize) -> ((f64, f64), (f64, f64)) {
    let f = f as f64;
    let person = (25.0 + 1.5 * f, 40.0 + f / 3.0);
    let chair = (135.0 - 1.0 * f, 100.0);
    (person, chair)
}

pub const PERSON_RADIUS: f64 = 15.0;
pub const CHAIR_RADIUS: f64 = 10.0;

/// Scene for frame `f`; `None` renders the empty room.
pub fn sequence_scene(f: Option<usize>, seed: u64) -> SceneSpec<f64> {
    let mut s = SceneSpec::empty(160, 120, 4.0, 20.0);
    if let Some(f) = f {
        let (p, c) = sequence_positions(f);
        s.primitives = vec![
            disc(p.0, p.1, PERSON_RADIUS, 2.0, 34.0),
            disc(c.0, c.1, CHAIR_RADIUS, 2.5, 20.0),
        ];
    }
    s.noise.seed = seed;
    s
}
