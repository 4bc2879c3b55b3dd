//! On-disk forms of rasters, calibrations, scenes and reports.
//!
//! * depth images: binary 16-bit PGM (`P5`, maxval 65535, big-endian samples
//!   as Netpbm requires), value in millimeters, 0 = invalid
//! * thermal and fused images: CSV, one raster row per line, `nan` = invalid;
//!   values are written in shortest round-trip form so text round trips are exact
//! * masks: binary 8-bit PGM, 0 / 255
//! * calibration and config files: `key = value` per line, `#` comments
//! * scene files: one primitive per line (`rect x y w h depth temp`,
//!   `disc cx cy r depth temp`) plus `canvas`, `background` and `noise` headers
//!
//! All text output uses LF line endings.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::calibration::RigCalibration;
use crate::detection::{Classification, Track};
use crate::error::{Error, Result};
use crate::geometry::{Extrinsics, Intrinsics, Point3, TaitBryanAngles};
use crate::metrics::ErrorReport;
use crate::raster::{is_valid_depth, DepthImage, Mask, Raster, ThermalImage};
use crate::scalar::Real;
use crate::simulation::{NoiseSpec, Primitive, SceneSpec, Shape};

/// Largest accepted raster side, guards header-driven allocations.
pub const MAX_DIMENSION: usize = 1 << 16;

// ---------------------------------------------------------------- PGM

struct PgmHeader {
    width: usize,
    height: usize,
    maxval: usize,
    data_offset: usize,
}

fn parse_pgm_header(bytes: &[u8]) -> Result<PgmHeader> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(Error::parse_at_offset(
            0,
            "not a binary PGM (missing P5 magic)",
        ));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for (k, field) in fields.iter_mut().enumerate() {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(Error::parse_at_offset(pos, "truncated PGM header")),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|b| b.is_ascii_digit()) {
            pos += 1;
        }
        if start == pos {
            return Err(Error::parse_at_offset(
                pos,
                "expected a decimal number in PGM header",
            ));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).expect("ascii digits");
        *field = text
            .parse()
            .map_err(|_| Error::parse_at_offset(start, "header number overflows"))?;
        if k < 2 && (*field == 0 || *field > MAX_DIMENSION) {
            return Err(Error::parse_at_offset(
                start,
                format!("dimension {field} out of range"),
            ));
        }
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => {
            return Err(Error::parse_at_offset(
                pos,
                "missing whitespace after maxval",
            ))
        }
    }
    let [width, height, maxval] = fields;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::parse_at_offset(
            pos,
            format!("maxval {maxval} out of range"),
        ));
    }
    Ok(PgmHeader {
        width,
        height,
        maxval,
        data_offset: pos,
    })
}

fn pgm_samples<'a>(
    bytes: &'a [u8],
    header: &PgmHeader,
    bytes_per_sample: usize,
) -> Result<&'a [u8]> {
    let need = header
        .width
        .checked_mul(header.height)
        .and_then(|n| n.checked_mul(bytes_per_sample))
        .ok_or_else(|| Error::parse_at_offset(0, "dimension overflow"))?;
    let body = &bytes[header.data_offset..];
    if body.len() < need {
        return Err(Error::parse_at_offset(
            bytes.len(),
            format!("truncated PGM data: need {need} bytes, have {}", body.len()),
        ));
    }
    if body.len() > need {
        return Err(Error::parse_at_offset(
            header.data_offset + need,
            "trailing bytes after PGM data",
        ));
    }
    Ok(body)
}

/// Writes a depth image as 16-bit PGM in millimeters.
pub fn write_depth_pgm<T: Real, W: Write>(img: &DepthImage<T>, mut out: W) -> Result<()> {
    let mut buf = format!("P5\n{} {}\n65535\n", img.width(), img.height()).into_bytes();
    buf.reserve(img.len() * 2);
    let thousand = T::lit(1000.0);
    for (i, &d) in img.data().iter().enumerate() {
        let mm: u16 = if is_valid_depth(d) {
            let mm = (d * thousand).round();
            if mm < T::one() || mm > T::lit(65535.0) {
                return Err(Error::InvalidParameter(format!(
                    "depth {d} m at pixel {i} does not fit 1..=65535 mm"
                )));
            }
            mm.to_u16().expect("range checked")
        } else {
            0
        };
        buf.extend_from_slice(&mm.to_be_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_depth_pgm<T: Real, R: Read>(mut input: R) -> Result<DepthImage<T>> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let header = parse_pgm_header(&bytes)?;
    if header.maxval < 256 {
        return Err(Error::parse_at_offset(
            0,
            "depth PGM must be 16-bit (maxval > 255)",
        ));
    }
    let body = pgm_samples(&bytes, &header, 2)?;
    let thousand = T::lit(1000.0);
    let data = body
        .chunks_exact(2)
        .map(|c| match u16::from_be_bytes([c[0], c[1]]) {
            0 => T::nan(),
            mm => T::from_u16(mm).expect("u16 fits") / thousand,
        })
        .collect();
    Raster::from_vec(header.width, header.height, data)
}

pub fn write_mask_pgm<W: Write>(mask: &Mask, mut out: W) -> Result<()> {
    let mut buf = format!("P5\n{} {}\n255\n", mask.width(), mask.height()).into_bytes();
    buf.extend(mask.data().iter().map(|&b| if b { 255u8 } else { 0 }));
    out.write_all(&buf)?;
    Ok(())
}

/// Reads an 8-bit PGM mask; any non-zero sample is set.
pub fn read_mask_pgm<R: Read>(mut input: R) -> Result<Mask> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let header = parse_pgm_header(&bytes)?;
    if header.maxval > 255 {
        return Err(Error::parse_at_offset(0, "mask PGM must be 8-bit"));
    }
    let body = pgm_samples(&bytes, &header, 1)?;
    Raster::from_vec(
        header.width,
        header.height,
        body.iter().map(|&b| b != 0).collect(),
    )
}

/// 8-bit grayscale rendering of a temperature raster. Gray is
/// `round(255 * (t - min) / (max - min))` with `min`/`max` taken from the
/// finite values unless given; invalid pixels are 0. The mapping is recorded
/// in a header comment.
pub fn write_visualization_pgm<T: Real, W: Write>(
    img: &ThermalImage<T>,
    range: Option<(T, T)>,
    mut out: W,
) -> Result<()> {
    let (lo, hi) = range
        .or_else(|| img.finite_range())
        .unwrap_or((T::zero(), T::one()));
    let span = hi - lo;
    let mut buf = format!(
        "P5\n# linear temperature min={lo} max={hi} gray=round(255*(t-min)/(max-min))\n{} {}\n255\n",
        img.width(),
        img.height()
    )
    .into_bytes();
    let full = T::lit(255.0);
    buf.extend(img.data().iter().map(|&t| {
        if !t.is_finite() || span <= T::zero() {
            0u8
        } else {
            ((t - lo) / span * full)
                .round()
                .max(T::zero())
                .min(full)
                .to_u8()
                .unwrap_or(0)
        }
    }));
    out.write_all(&buf)?;
    Ok(())
}

// ---------------------------------------------------------------- CSV rasters

fn format_value<T: Real>(v: T) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v}")
    }
}

/// Writes a thermal or fused raster as CSV.
pub fn write_raster_csv<T: Real, W: Write>(img: &Raster<T>, mut out: W) -> Result<()> {
    let mut s = String::with_capacity(img.len() * 8);
    for y in 0..img.height() {
        for x in 0..img.width() {
            if x > 0 {
                s.push(',');
            }
            s.push_str(&format_value(*img.get(x, y)));
        }
        s.push('\n');
    }
    out.write_all(s.as_bytes())?;
    Ok(())
}

pub fn read_raster_csv<T: Real, R: Read>(input: R) -> Result<Raster<T>> {
    let mut data = Vec::new();
    let mut width = None;
    let mut height = 0usize;
    for (i, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            continue;
        }
        let mut n = 0;
        for (col, field) in line.split(',').enumerate() {
            let f = field.trim();
            let v = if f.eq_ignore_ascii_case("nan") {
                T::nan()
            } else {
                let v: T = f.parse().map_err(|_| Error::Parse {
                    location: format!("line {lineno}, column {}", col + 1),
                    message: format!("not a number: '{f}'"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        location: format!("line {lineno}, column {}", col + 1),
                        message: format!("non-finite value '{f}'"),
                    });
                }
                v
            };
            data.push(v);
            n += 1;
        }
        match width {
            None => width = Some(n),
            Some(w) if w != n => {
                return Err(Error::parse_at_line(
                    lineno,
                    format!("row has {n} values, expected {w}"),
                ))
            }
            _ => {}
        }
        height += 1;
        if n > MAX_DIMENSION || height > MAX_DIMENSION {
            return Err(Error::parse_at_line(lineno, "dimension overflow"));
        }
    }
    let width = width.ok_or_else(|| Error::parse_at_line(1, "empty raster"))?;
    Raster::from_vec(width, height, data)
}

// ---------------------------------------------------------------- key = value

/// One `key = value` entry with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyValue {
    pub line: usize,
    pub key: String,
    pub value: String,
}

/// Parses `key = value` lines; blank lines and `#` comments are skipped and
/// duplicate keys are rejected.
pub fn parse_key_values(text: &str) -> Result<Vec<KeyValue>> {
    let mut out: Vec<KeyValue> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::parse_at_line(i + 1, "expected 'key = value'"))?;
        let key = k.trim().to_string();
        if key.is_empty() {
            return Err(Error::parse_at_line(i + 1, "empty key"));
        }
        if out.iter().any(|kv| kv.key == key) {
            return Err(Error::parse_at_line(
                i + 1,
                format!("duplicate key '{key}'"),
            ));
        }
        out.push(KeyValue {
            line: i + 1,
            key,
            value: v.trim().to_string(),
        });
    }
    Ok(out)
}

pub(crate) fn parse_value<V: std::str::FromStr>(kv: &KeyValue) -> Result<V> {
    kv.value.parse().map_err(|_| {
        Error::parse_at_line(
            kv.line,
            format!("invalid value '{}' for '{}'", kv.value, kv.key),
        )
    })
}

fn parse_real<T: Real>(kv: &KeyValue) -> Result<T> {
    let v: T = parse_value(kv)?;
    if !v.is_finite() {
        return Err(Error::parse_at_line(
            kv.line,
            format!("'{}' must be finite", kv.key),
        ));
    }
    Ok(v)
}

pub const CALIBRATION_KEYS: [&str; 18] = [
    "ir.fx",
    "ir.fy",
    "ir.cx",
    "ir.cy",
    "ir.width",
    "ir.height",
    "tof.fx",
    "tof.fy",
    "tof.cx",
    "tof.cy",
    "tof.width",
    "tof.height",
    "t.x",
    "t.y",
    "t.z",
    "angles.a1",
    "angles.a2",
    "angles.a3",
];

pub fn calibration_to_string<T: Real>(c: &RigCalibration<T>) -> String {
    let mut s = String::new();
    let mut put = |k: &str, v: String| {
        s.push_str(k);
        s.push_str(" = ");
        s.push_str(&v);
        s.push('\n');
    };
    for (prefix, k) in [("ir", &c.ir), ("tof", &c.tof)] {
        put(&format!("{prefix}.fx"), k.fx.to_string());
        put(&format!("{prefix}.fy"), k.fy.to_string());
        put(&format!("{prefix}.cx"), k.cx.to_string());
        put(&format!("{prefix}.cy"), k.cy.to_string());
        put(&format!("{prefix}.width"), k.width.to_string());
        put(&format!("{prefix}.height"), k.height.to_string());
    }
    put("t.x", c.ext.t.x.to_string());
    put("t.y", c.ext.t.y.to_string());
    put("t.z", c.ext.t.z.to_string());
    put("angles.a1", c.ext.angles.a1.to_string());
    put("angles.a2", c.ext.angles.a2.to_string());
    put("angles.a3", c.ext.angles.a3.to_string());
    s
}

/// Parses a calibration file. Every key in [`CALIBRATION_KEYS`] is required
/// and no other key is allowed.
pub fn parse_calibration<T: Real>(text: &str) -> Result<RigCalibration<T>> {
    let entries = parse_key_values(text)?;
    let mut map: BTreeMap<&str, &KeyValue> = BTreeMap::new();
    for kv in &entries {
        if !CALIBRATION_KEYS.contains(&kv.key.as_str()) {
            return Err(Error::parse_at_line(
                kv.line,
                format!("unknown key '{}'", kv.key),
            ));
        }
        map.insert(kv.key.as_str(), kv);
    }
    let get = |k: &str| -> Result<&KeyValue> {
        map.get(k).copied().ok_or_else(|| Error::Parse {
            location: "calibration file".into(),
            message: format!("missing key '{k}'"),
        })
    };
    let real = |k: &str| get(k).and_then(parse_real::<T>);
    let size = |k: &str| get(k).and_then(parse_value::<usize>);
    let intr = |p: &str| -> Result<Intrinsics<T>> {
        Intrinsics::new(
            real(&format!("{p}.fx"))?,
            real(&format!("{p}.fy"))?,
            real(&format!("{p}.cx"))?,
            real(&format!("{p}.cy"))?,
            size(&format!("{p}.width"))?,
            size(&format!("{p}.height"))?,
        )
    };
    Ok(RigCalibration {
        ir: intr("ir")?,
        tof: intr("tof")?,
        ext: Extrinsics::new(
            TaitBryanAngles::new(real("angles.a1")?, real("angles.a2")?, real("angles.a3")?),
            Point3::new(real("t.x")?, real("t.y")?, real("t.z")?),
        ),
    })
}

// ---------------------------------------------------------------- scenes

pub fn parse_scene<T: Real>(text: &str) -> Result<SceneSpec<T>> {
    let mut canvas = None;
    let mut background = None;
    let mut noise = NoiseSpec::default();
    let mut primitives = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tok = line.split_whitespace();
        let kind = tok.next().expect("non-empty line");
        let args: Vec<&str> = tok.collect();
        let want = |n: usize| -> Result<()> {
            if args.len() == n {
                Ok(())
            } else {
                Err(Error::parse_at_line(
                    lineno,
                    format!("'{kind}' takes {n} values, got {}", args.len()),
                ))
            }
        };
        let real = |s: &str| -> Result<T> {
            s.parse::<T>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse_at_line(lineno, format!("invalid number '{s}'")))
        };
        let int = |s: &str| -> Result<usize> {
            s.parse::<usize>()
                .map_err(|_| Error::parse_at_line(lineno, format!("invalid integer '{s}'")))
        };
        match kind {
            "canvas" => {
                want(2)?;
                let (w, h) = (int(args[0])?, int(args[1])?);
                if w == 0 || h == 0 || w > MAX_DIMENSION || h > MAX_DIMENSION {
                    return Err(Error::parse_at_line(lineno, "canvas size out of range"));
                }
                canvas = Some((w, h));
            }
            "background" => {
                want(2)?;
                background = Some((real(args[0])?, real(args[1])?));
            }
            "noise" => {
                want(3)?;
                noise = NoiseSpec {
                    sigma_depth: real(args[0])?,
                    sigma_temp: real(args[1])?,
                    seed: args[2].parse().map_err(|_| {
                        Error::parse_at_line(lineno, format!("invalid seed '{}'", args[2]))
                    })?,
                };
            }
            "rect" => {
                want(6)?;
                let v: Vec<T> = args.iter().map(|s| real(s)).collect::<Result<_>>()?;
                primitives.push(Primitive {
                    shape: Shape::Rect {
                        x: v[0],
                        y: v[1],
                        w: v[2],
                        h: v[3],
                    },
                    depth: v[4],
                    temp: v[5],
                });
            }
            "disc" => {
                want(5)?;
                let v: Vec<T> = args.iter().map(|s| real(s)).collect::<Result<_>>()?;
                primitives.push(Primitive {
                    shape: Shape::Disc {
                        cx: v[0],
                        cy: v[1],
                        r: v[2],
                    },
                    depth: v[3],
                    temp: v[4],
                });
            }
            other => {
                return Err(Error::parse_at_line(
                    lineno,
                    format!("unknown directive '{other}'"),
                ))
            }
        }
    }
    let (width, height) = canvas.unwrap_or(crate::simulation::DEFAULT_CANVAS);
    let (background_depth, background_temp) = background
        .ok_or_else(|| Error::parse_at_line(1, "missing 'background depth temp' line"))?;
    let spec = SceneSpec {
        width,
        height,
        background_depth,
        background_temp,
        primitives,
        noise,
    };
    spec.validate()?;
    Ok(spec)
}

pub fn scene_to_string<T: Real>(s: &SceneSpec<T>) -> String {
    let mut out = format!(
        "canvas {} {}\nbackground {} {}\nnoise {} {} {}\n",
        s.width,
        s.height,
        s.background_depth,
        s.background_temp,
        s.noise.sigma_depth,
        s.noise.sigma_temp,
        s.noise.seed
    );
    for p in &s.primitives {
        match p.shape {
            Shape::Rect { x, y, w, h } => {
                out.push_str(&format!("rect {x} {y} {w} {h} {} {}\n", p.depth, p.temp))
            }
            Shape::Disc { cx, cy, r } => {
                out.push_str(&format!("disc {cx} {cy} {r} {} {}\n", p.depth, p.temp))
            }
        }
    }
    out
}

// ---------------------------------------------------------------- reports

pub fn report_to_string<T: Real>(r: &ErrorReport<T>) -> String {
    format!(
        "mae = {}\nmax_abs_error = {}\nvalid_pixels = {}\ntotal_error = {}\n\
         curve = cumulative sum of the rank smallest per-pixel absolute errors (degC) versus rank\n",
        r.mean_abs_error,
        r.max_abs_error,
        r.valid_pixels,
        r.total_error()
    )
}

pub fn write_curve_csv<T: Real, W: Write>(curve: &[(usize, T)], mut out: W) -> Result<()> {
    let mut s = String::from("rank,cumulative_error\n");
    for (rank, c) in curve {
        s.push_str(&format!("{rank},{c}\n"));
    }
    out.write_all(s.as_bytes())?;
    Ok(())
}

/// `frame,track_id,u,v,mean_temp_C,is_person`, rows ordered by frame then id.
pub fn write_tracks_csv<T: Real, W: Write>(tracks: &[Track<T>], mut out: W) -> Result<()> {
    let mut rows = Vec::new();
    for t in tracks {
        for p in &t.history {
            rows.push((p.frame, t.id, p));
        }
    }
    rows.sort_by_key(|r| (r.0, r.1));
    let mut s = String::from("frame,track_id,u,v,mean_temp_C,is_person\n");
    for (frame, id, p) in rows {
        let temp = p
            .mean_temp
            .map_or_else(|| "nan".to_string(), |t| t.to_string());
        let person = u8::from(p.class == Classification::Person);
        s.push_str(&format!(
            "{frame},{id},{},{},{temp},{person}\n",
            p.centroid.u, p.centroid.v
        ));
    }
    out.write_all(s.as_bytes())?;
    Ok(())
}

// ---------------------------------------------------------------- path helpers

pub fn load_depth<T: Real>(path: &Path) -> Result<DepthImage<T>> {
    read_depth_pgm(fs::File::open(path)?)
}

pub fn save_depth<T: Real>(img: &DepthImage<T>, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_depth_pgm(img, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_raster_csv<T: Real>(path: &Path) -> Result<Raster<T>> {
    read_raster_csv(fs::File::open(path)?)
}

pub fn save_raster_csv<T: Real>(img: &Raster<T>, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_raster_csv(img, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_calibration<T: Real>(path: &Path) -> Result<RigCalibration<T>> {
    parse_calibration(&fs::read_to_string(path)?)
}

pub fn save_calibration<T: Real>(c: &RigCalibration<T>, path: &Path) -> Result<()> {
    fs::write(path, calibration_to_string(c))?;
    Ok(())
}
