//! Moving-object detection and person tracking on fused range/thermal frames.
//!
//! A static depth background is learned from the first frames; anything
//! sufficiently nearer than the background is foreground. Foreground blobs
//! get the mean fused temperature of their pixels, which separates people
//! from furniture and doors, and a gated nearest-centroid tracker links the
//! blobs over time.

use crate::calibration::RigCalibration;
use crate::error::{Error, Result};
use crate::fusion::{build_projection_map, fuse, FusionMethod, SegmentParams};
use crate::geometry::PixelCoord;
use crate::raster::{is_valid_depth, DepthImage, FusedImage, Mask, Raster, ThermalImage};
use crate::scalar::{median, Real};

pub const DEFAULT_DELTA: f64 = 0.3;
pub const DEFAULT_MIN_BLOB_AREA: usize = 20;
pub const DEFAULT_T_MIN: f64 = 26.0;
pub const DEFAULT_T_MAX: f64 = 40.0;
pub const DEFAULT_GATE: f64 = 10.0;
pub const DEFAULT_MAX_MISSES: usize = 5;
pub const DEFAULT_N_INIT: usize = 10;

/// Per-pixel reference depth; NaN where the pixel was mostly invalid.
#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundModel<T> {
    pub reference: DepthImage<T>,
}

impl<T: Real> BackgroundModel<T> {
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        is_valid_depth(*self.reference.get(x, y))
    }
}

/// Median depth over the first `n_init` frames, per pixel, using only pixels
/// valid in at least half of those frames.
pub fn build_background<T: Real>(
    frames: &[DepthImage<T>],
    n_init: usize,
) -> Result<BackgroundModel<T>> {
    if n_init == 0 {
        return Err(Error::InvalidParameter("n_init must be at least 1".into()));
    }
    let used = &frames[..n_init.min(frames.len())];
    let first = used
        .first()
        .ok_or_else(|| Error::EmptyInput("no frames for the background model".into()))?;
    for f in used {
        first.ensure_same_shape(f, "background frames")?;
    }
    let (w, h) = first.dims();
    let mut samples = Vec::with_capacity(used.len());
    let reference = Raster::from_fn(w, h, |x, y| {
        samples.clear();
        samples.extend(
            used.iter()
                .map(|f| *f.get(x, y))
                .filter(|&d| is_valid_depth(d)),
        );
        if 2 * samples.len() >= used.len() {
            median(&samples).unwrap_or(T::nan())
        } else {
            T::nan()
        }
    });
    Ok(BackgroundModel { reference })
}

/// Pixels at least `delta` nearer than the background. Pixels that are
/// farther never count, since a moving object can only occlude the scene.
pub fn extract_foreground<T: Real>(
    model: &BackgroundModel<T>,
    frame: &DepthImage<T>,
    delta: T,
) -> Result<Mask> {
    if !(delta > T::zero()) {
        return Err(Error::InvalidParameter("delta must be positive".into()));
    }
    model
        .reference
        .ensure_same_shape(frame, "background vs frame")?;
    Ok(Raster::from_fn(frame.width(), frame.height(), |x, y| {
        let d = *frame.get(x, y);
        let r = *model.reference.get(x, y);
        is_valid_depth(d) && is_valid_depth(r) && d <= r - delta
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Blob<T> {
    pub pixels: Vec<(usize, usize)>,
    /// Unweighted mean pixel position (TOF pixel coordinates).
    pub centroid: PixelCoord<T>,
    pub mean_depth: T,
    /// Mean fused temperature over the blob's valid fused pixels.
    pub mean_temp: Option<T>,
}

impl<T> Blob<T> {
    pub fn area(&self) -> usize {
        self.pixels.len()
    }
}

/// 8-connected foreground components with at least `min_blob_area` pixels.
pub fn extract_blobs<T: Real>(
    mask: &Mask,
    depth: &DepthImage<T>,
    fused: &FusedImage<T>,
    min_blob_area: usize,
) -> Result<Vec<Blob<T>>> {
    mask.ensure_same_shape(depth, "mask vs depth")?;
    mask.ensure_same_shape(fused, "mask vs fused")?;
    Ok(mask
        .components()
        .into_iter()
        .filter(|c| c.len() >= min_blob_area.max(1))
        .map(|pixels| {
            let n = T::from_usize_lossy(pixels.len());
            let u = pixels.iter().map(|p| T::from_usize_lossy(p.0)).sum::<T>() / n;
            let v = pixels.iter().map(|p| T::from_usize_lossy(p.1)).sum::<T>() / n;
            let mean_depth = pixels.iter().map(|&(x, y)| *depth.get(x, y)).sum::<T>() / n;
            let temps: Vec<T> = pixels
                .iter()
                .map(|&(x, y)| *fused.get(x, y))
                .filter(|t| t.is_finite())
                .collect();
            let mean_temp = (!temps.is_empty())
                .then(|| temps.iter().copied().sum::<T>() / T::from_usize_lossy(temps.len()));
            Blob {
                pixels,
                centroid: PixelCoord::new(u, v),
                mean_depth,
                mean_temp,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Person,
    NotPerson,
    /// The blob has no valid fused temperature.
    Unclassifiable,
}

/// Person iff `t_min <= mean temperature <= t_max`.
pub fn classify_person<T: Real>(blob: &Blob<T>, t_min: T, t_max: T) -> Classification {
    match blob.mean_temp {
        None => Classification::Unclassifiable,
        Some(t) if t >= t_min && t <= t_max => Classification::Person,
        Some(_) => Classification::NotPerson,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackState {
    Active,
    Lost,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackPoint<T> {
    pub frame: usize,
    pub centroid: PixelCoord<T>,
    pub mean_temp: Option<T>,
    pub class: Classification,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track<T> {
    pub id: u64,
    pub history: Vec<TrackPoint<T>>,
    pub state: TrackState,
    /// Consecutive frames without an associated blob.
    pub misses: usize,
}

impl<T: Real> Track<T> {
    pub fn last(&self) -> &TrackPoint<T> {
        self.history
            .last()
            .expect("tracks are created with one point")
    }

    /// Majority vote over the classifiable history entries.
    pub fn is_person(&self) -> bool {
        let (p, n) = self.history.iter().fold((0, 0), |(p, n), h| match h.class {
            Classification::Person => (p + 1, n),
            Classification::NotPerson => (p, n + 1),
            Classification::Unclassifiable => (p, n),
        });
        p > n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpawnPolicy {
    /// Every unmatched blob starts a track; person status is kept per track.
    #[default]
    AllBlobs,
    /// Only unmatched blobs classified as persons start a track.
    PersonsOnly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerConfig<T> {
    /// Maximum centroid distance for an association, TOF pixels.
    pub gate: T,
    /// A track survives this many consecutive misses and is lost on the next.
    pub max_misses: usize,
    pub t_min: T,
    pub t_max: T,
    pub spawn: SpawnPolicy,
}

impl<T: Real> Default for TrackerConfig<T> {
    fn default() -> Self {
        Self {
            gate: T::lit(DEFAULT_GATE),
            max_misses: DEFAULT_MAX_MISSES,
            t_min: T::lit(DEFAULT_T_MIN),
            t_max: T::lit(DEFAULT_T_MAX),
            spawn: SpawnPolicy::default(),
        }
    }
}

/// Associates `blobs` with the active tracks and extends, ages or spawns
/// tracks. Candidate pairs within the gate are taken greedily in ascending
/// distance order, each track and blob at most once.
pub fn track_update<T: Real>(
    tracks: &mut Vec<Track<T>>,
    blobs: &[Blob<T>],
    frame_idx: usize,
    cfg: &TrackerConfig<T>,
) -> Result<()> {
    if tracks.iter().any(|t| t.last().frame >= frame_idx) {
        return Err(Error::InvalidParameter(format!(
            "frame {frame_idx} is not newer than every track history"
        )));
    }
    let mut pairs: Vec<(T, usize, usize)> = Vec::new();
    for (ti, t) in tracks.iter().enumerate() {
        if t.state != TrackState::Active {
            continue;
        }
        for (bi, b) in blobs.iter().enumerate() {
            let d = t.last().centroid.distance(&b.centroid);
            if d <= cfg.gate {
                pairs.push((d, ti, bi));
            }
        }
    }
    pairs.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    let mut track_used = vec![false; tracks.len()];
    let mut blob_used = vec![false; blobs.len()];
    let point = |b: &Blob<T>| TrackPoint {
        frame: frame_idx,
        centroid: b.centroid,
        mean_temp: b.mean_temp,
        class: classify_person(b, cfg.t_min, cfg.t_max),
    };
    for (_, ti, bi) in pairs {
        if track_used[ti] || blob_used[bi] {
            continue;
        }
        track_used[ti] = true;
        blob_used[bi] = true;
        let t = &mut tracks[ti];
        t.history.push(point(&blobs[bi]));
        t.misses = 0;
    }
    for (t, used) in tracks.iter_mut().zip(&track_used) {
        if t.state == TrackState::Active && !used {
            t.misses += 1;
            if t.misses > cfg.max_misses {
                t.state = TrackState::Lost;
            }
        }
    }
    let mut next_id = tracks.iter().map(|t| t.id + 1).max().unwrap_or(0);
    for (b, used) in blobs.iter().zip(&blob_used) {
        if *used {
            continue;
        }
        let p = point(b);
        if cfg.spawn == SpawnPolicy::PersonsOnly && p.class != Classification::Person {
            continue;
        }
        tracks.push(Track {
            id: next_id,
            history: vec![p],
            state: TrackState::Active,
            misses: 0,
        });
        next_id += 1;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionConfig<T> {
    pub delta: T,
    pub min_blob_area: usize,
    pub method: FusionMethod,
    pub segment: SegmentParams<T>,
    pub tracker: TrackerConfig<T>,
}

impl<T: Real> Default for DetectionConfig<T> {
    fn default() -> Self {
        Self {
            delta: T::lit(DEFAULT_DELTA),
            min_blob_area: DEFAULT_MIN_BLOB_AREA,
            method: FusionMethod::Segment,
            segment: SegmentParams::default(),
            tracker: TrackerConfig::default(),
        }
    }
}

/// Sequential per-frame pipeline: fuse, subtract background, extract blobs,
/// update tracks.
#[derive(Debug, Clone)]
pub struct DetectionPipeline<T> {
    pub calib: RigCalibration<T>,
    pub background: BackgroundModel<T>,
    pub config: DetectionConfig<T>,
    pub tracks: Vec<Track<T>>,
    last_frame: Option<usize>,
}

impl<T: Real> DetectionPipeline<T> {
    pub fn new(
        calib: RigCalibration<T>,
        background: BackgroundModel<T>,
        config: DetectionConfig<T>,
    ) -> Self {
        Self {
            calib,
            background,
            config,
            tracks: Vec::new(),
            last_frame: None,
        }
    }

    /// Processes the next frame and returns its blobs.
    pub fn process(
        &mut self,
        frame_idx: usize,
        depth: &DepthImage<T>,
        thermal: &ThermalImage<T>,
    ) -> Result<Vec<Blob<T>>> {
        if self.last_frame.is_some_and(|f| f >= frame_idx) {
            return Err(Error::InvalidParameter(format!(
                "frame {frame_idx} out of order"
            )));
        }
        let map = build_projection_map(depth, &self.calib.tof, &self.calib.ir, &self.calib.ext)?;
        let fused = fuse(
            self.config.method,
            &map,
            thermal,
            depth,
            &self.config.segment,
        )?;
        let mask = extract_foreground(&self.background, depth, self.config.delta)?;
        let blobs = extract_blobs(&mask, depth, &fused, self.config.min_blob_area)?;
        track_update(&mut self.tracks, &blobs, frame_idx, &self.config.tracker)?;
        self.last_frame = Some(frame_idx);
        Ok(blobs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn blob_at(u: f64, v: f64, temp: Option<f64>) -> Blob<f64> {
        Blob {
            pixels: vec![(u as usize, v as usize)],
            centroid: PixelCoord::new(u, v),
            mean_depth: 2.0,
            mean_temp: temp,
        }
    }

    #[test]
    fn background_of_identical_frames() {
        let f = Raster::from_fn(4, 3, |x, y| 2.0 + (x + y) as f64);
        let m = build_background(&[f.clone(), f.clone(), f.clone()], 3).unwrap();
        assert_eq!(m.reference, f);
    }

    #[test]
    fn background_rejects_transient() {
        let frames: Vec<_> = [2.0, 2.0, 9.0]
            .iter()
            .map(|&d| Raster::filled(1, 1, d))
            .collect();
        assert_eq!(
            *build_background(&frames, 3).unwrap().reference.get(0, 0),
            2.0
        );
        assert!(matches!(
            build_background::<f64>(&[], 3),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn background_needs_half_valid() {
        let frames: Vec<_> = [f64::NAN, f64::NAN, 3.0]
            .iter()
            .map(|&d| Raster::filled(1, 1, d))
            .collect();
        assert!(!build_background(&frames, 3).unwrap().is_valid(0, 0));
        let frames: Vec<_> = [f64::NAN, 3.0]
            .iter()
            .map(|&d| Raster::filled(1, 1, d))
            .collect();
        assert!(build_background(&frames, 2).unwrap().is_valid(0, 0));
    }

    #[test]
    fn foreground_examples() {
        let bg = Raster::filled(6, 4, 4.0);
        let model = BackgroundModel {
            reference: bg.clone(),
        };
        assert_eq!(extract_foreground(&model, &bg, 0.3).unwrap().count(), 0);
        let frame = Raster::from_fn(6, 4, |x, _| {
            if x < 2 {
                2.0
            } else if x == 5 {
                6.0
            } else {
                4.0
            }
        });
        let m = extract_foreground(&model, &frame, 0.3).unwrap();
        assert_eq!(m.count(), 8);
        assert!(!*m.get(5, 0));
        assert!(extract_foreground(&model, &frame, 0.0).is_err());
    }

    #[test]
    fn rectangle_blob_centroid() {
        let mask = Raster::from_fn(20, 20, |x, y| (4..10).contains(&x) && (2..7).contains(&y));
        let depth = Raster::filled(20, 20, 2.0);
        let fused = Raster::filled(20, 20, 34.0);
        let blobs = extract_blobs(&mask, &depth, &fused, 20).unwrap();
        assert_eq!(blobs.len(), 1);
        assert_abs_diff_eq!(blobs[0].centroid.u, 6.5, epsilon = 1e-12);
        assert_abs_diff_eq!(blobs[0].centroid.v, 4.0, epsilon = 1e-12);
        assert_eq!(blobs[0].area(), 30);
        assert_eq!(blobs[0].mean_temp, Some(34.0));
        assert!(extract_blobs(&mask, &depth, &fused, 31).unwrap().is_empty());
    }

    #[test]
    fn diagonal_pixels_form_one_blob() {
        let mask = Raster::from_vec(2, 2, vec![true, false, false, true]).unwrap();
        let depth = Raster::filled(2, 2, 2.0);
        let fused = Raster::filled(2, 2, f64::NAN);
        let blobs = extract_blobs(&mask, &depth, &fused, 1).unwrap();
        assert_eq!(blobs.len(), 1);
        assert_eq!(blobs[0].mean_temp, None);
    }

    #[test]
    fn classification_band() {
        let c = |t| classify_person(&blob_at(0.0, 0.0, t), 26.0, 40.0);
        assert_eq!(c(Some(34.0)), Classification::Person);
        assert_eq!(c(Some(20.0)), Classification::NotPerson);
        assert_eq!(c(Some(26.0)), Classification::Person);
        assert_eq!(c(Some(40.0)), Classification::Person);
        assert_eq!(c(None), Classification::Unclassifiable);
    }

    #[test]
    fn association_within_gate() {
        let cfg = TrackerConfig {
            gate: 10.0,
            ..Default::default()
        };
        let mut tracks = Vec::new();
        track_update(&mut tracks, &[blob_at(50.0, 50.0, Some(34.0))], 0, &cfg).unwrap();
        track_update(&mut tracks, &[blob_at(52.0, 50.0, Some(34.0))], 1, &cfg).unwrap();
        assert_eq!(tracks.len(), 1);
        assert_eq!(tracks[0].history.len(), 2);
        assert_eq!(tracks[0].history[1].centroid.u, 52.0);
    }

    #[test]
    fn blob_beyond_gate_spawns() {
        let cfg = TrackerConfig {
            gate: 10.0,
            ..Default::default()
        };
        let mut tracks = Vec::new();
        track_update(&mut tracks, &[blob_at(50.0, 50.0, Some(34.0))], 0, &cfg).unwrap();
        track_update(&mut tracks, &[blob_at(70.0, 50.0, Some(34.0))], 1, &cfg).unwrap();
        assert_eq!(tracks.len(), 2);
        assert_eq!(tracks[0].misses, 1);
        assert_eq!(tracks[1].id, 1);
    }

    #[test]
    fn tracks_get_lost_after_max_misses() {
        let cfg = TrackerConfig {
            max_misses: 2,
            ..Default::default()
        };
        let mut tracks = Vec::new();
        track_update(&mut tracks, &[blob_at(5.0, 5.0, Some(34.0))], 0, &cfg).unwrap();
        for f in 1..=2 {
            track_update(&mut tracks, &[], f, &cfg).unwrap();
            assert_eq!(tracks[0].state, TrackState::Active);
        }
        track_update(&mut tracks, &[], 3, &cfg).unwrap();
        assert_eq!(tracks[0].state, TrackState::Lost);
        // lost tracks are not revived
        track_update(&mut tracks, &[blob_at(5.0, 5.0, Some(34.0))], 4, &cfg).unwrap();
        assert_eq!(tracks.len(), 2);
    }

    #[test]
    fn stale_frame_index_rejected() {
        let cfg = TrackerConfig::default();
        let mut tracks = Vec::new();
        track_update(&mut tracks, &[blob_at(5.0, 5.0, Some(34.0))], 3, &cfg).unwrap();
        assert!(track_update(&mut tracks, &[], 3, &cfg).is_err());
    }

    #[test]
    fn persons_only_policy() {
        let cfg = TrackerConfig {
            spawn: SpawnPolicy::PersonsOnly,
            ..Default::default()
        };
        let mut tracks = Vec::new();
        track_update(
            &mut tracks,
            &[
                blob_at(5.0, 5.0, Some(20.0)),
                blob_at(50.0, 5.0, Some(33.0)),
            ],
            0,
            &cfg,
        )
        .unwrap();
        assert_eq!(tracks.len(), 1);
        assert!(tracks[0].is_person());
    }

    #[test]
    fn crossing_pairs_match_brute_force() {
        let cfg = TrackerConfig {
            gate: 20.0,
            ..Default::default()
        };
        let starts = [(10.0, 10.0), (20.0, 10.0)];
        let blobs = [
            blob_at(18.0, 12.0, Some(34.0)),
            blob_at(13.0, 9.0, Some(34.0)),
        ];
        let mut tracks = Vec::new();
        track_update(
            &mut tracks,
            &starts.map(|(u, v)| blob_at(u, v, Some(34.0))),
            0,
            &cfg,
        )
        .unwrap();
        track_update(&mut tracks, &blobs, 1, &cfg).unwrap();
        let d = |a: (f64, f64), b: &Blob<f64>| (a.0 - b.centroid.u).hypot(a.1 - b.centroid.v);
        let straight = d(starts[0], &blobs[0]) + d(starts[1], &blobs[1]);
        let swapped = d(starts[0], &blobs[1]) + d(starts[1], &blobs[0]);
        let best_first = if straight <= swapped { 0 } else { 1 };
        assert_eq!(tracks[0].last().centroid, blobs[best_first].centroid);
        assert_eq!(tracks.len(), 2);
    }
}
