//! Command-line front end.
//!
//! Settings resolve in three layers: built-in defaults, then a config file
//! (`--config F` or the `THERMOFUSE_CONFIG` variable, `key = value` lines),
//! then command-line flags. `--print-defaults` prints the defaults in config
//! file form.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};

use crate::calibration::{
    calibrate_from_images, TargetMethod, DEFAULT_BACKGROUND_GAP, DEFAULT_THRESHOLD_OFFSET,
};
use crate::detection::{
    build_background, DetectionConfig, DetectionPipeline, SpawnPolicy, TrackerConfig,
    DEFAULT_DELTA, DEFAULT_GATE, DEFAULT_MAX_MISSES, DEFAULT_MIN_BLOB_AREA, DEFAULT_N_INIT,
    DEFAULT_T_MAX, DEFAULT_T_MIN,
};
use crate::formats;
use crate::fusion::{build_projection_map, fuse, fuse_segment, FusionMethod, SegmentParams};
use crate::geometry::Point3;
use crate::metrics::ErrorReport;
use crate::simulation::{simulate, SceneSpec, SimulatedRig, DEFAULT_THERMAL};

pub const CONFIG_ENV: &str = "THERMOFUSE_CONFIG";

/// Every tunable of the pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub method: FusionMethod,
    pub homogeneity_tol: f64,
    pub area_floor: Option<f64>,
    pub depth_match_tol: Option<f64>,
    pub target_method: TargetMethod,
    pub threshold_offset: f64,
    pub background_gap: f64,
    pub ir_width: usize,
    pub ir_height: usize,
    pub curve_bins: usize,
    pub delta: f64,
    pub min_blob_area: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub gate: f64,
    pub max_misses: usize,
    pub n_init: usize,
    pub spawn: SpawnPolicy,
}

impl Default for Settings {
    fn default() -> Self {
        let seg = SegmentParams::<f64>::default();
        Self {
            method: FusionMethod::Segment,
            homogeneity_tol: seg.homogeneity_tol,
            area_floor: seg.area_floor,
            depth_match_tol: seg.depth_match_tol,
            target_method: TargetMethod::default(),
            threshold_offset: DEFAULT_THRESHOLD_OFFSET,
            background_gap: DEFAULT_BACKGROUND_GAP,
            ir_width: DEFAULT_THERMAL.0,
            ir_height: DEFAULT_THERMAL.1,
            curve_bins: 100,
            delta: DEFAULT_DELTA,
            min_blob_area: DEFAULT_MIN_BLOB_AREA,
            t_min: DEFAULT_T_MIN,
            t_max: DEFAULT_T_MAX,
            gate: DEFAULT_GATE,
            max_misses: DEFAULT_MAX_MISSES,
            n_init: DEFAULT_N_INIT,
            spawn: SpawnPolicy::default(),
        }
    }
}

fn method_name(m: FusionMethod) -> &'static str {
    use crate::fusion::DepthWeightMode::*;
    match m {
        FusionMethod::Nearest => "nearest",
        FusionMethod::Bilinear => "bilinear",
        FusionMethod::DepthWeighted(Similarity) => "depth",
        FusionMethod::DepthWeighted(AsPrinted) => "depth-as-printed",
        FusionMethod::Segment => "segment",
    }
}

fn optional(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), |x| x.to_string())
}

fn parse_optional(s: &str) -> Result<Option<f64>, String> {
    if s == "none" {
        return Ok(None);
    }
    parse_number(s).map(Some)
}

fn parse_number<V: std::str::FromStr>(s: &str) -> Result<V, String> {
    s.parse().map_err(|_| format!("invalid value '{s}'"))
}

impl Settings {
    pub fn to_config_string(&self) -> String {
        let target = match self.target_method {
            TargetMethod::WeightedCentroid => "centroid",
            TargetMethod::MaskCentroid => "mask",
            TargetMethod::Hough => "hough",
        };
        let spawn = match self.spawn {
            SpawnPolicy::AllBlobs => "all",
            SpawnPolicy::PersonsOnly => "persons",
        };
        let rows: [(&str, String); 18] = [
            ("method", method_name(self.method).into()),
            ("homogeneity_tol", self.homogeneity_tol.to_string()),
            ("area_floor", optional(self.area_floor)),
            ("depth_match_tol", optional(self.depth_match_tol)),
            ("target_method", target.into()),
            ("threshold_offset", self.threshold_offset.to_string()),
            ("background_gap", self.background_gap.to_string()),
            ("ir_width", self.ir_width.to_string()),
            ("ir_height", self.ir_height.to_string()),
            ("curve_bins", self.curve_bins.to_string()),
            ("delta", self.delta.to_string()),
            ("min_blob_area", self.min_blob_area.to_string()),
            ("t_min", self.t_min.to_string()),
            ("t_max", self.t_max.to_string()),
            ("gate", self.gate.to_string()),
            ("max_misses", self.max_misses.to_string()),
            ("n_init", self.n_init.to_string()),
            ("spawn", spawn.into()),
        ];
        rows.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "method" => self.method = value.parse().map_err(|e| format!("{e}"))?,
            "homogeneity_tol" => self.homogeneity_tol = parse_number(value)?,
            "area_floor" => self.area_floor = parse_optional(value)?,
            "depth_match_tol" => self.depth_match_tol = parse_optional(value)?,
            "target_method" => self.target_method = value.parse().map_err(|e| format!("{e}"))?,
            "threshold_offset" => self.threshold_offset = parse_number(value)?,
            "background_gap" => self.background_gap = parse_number(value)?,
            "ir_width" => self.ir_width = parse_number(value)?,
            "ir_height" => self.ir_height = parse_number(value)?,
            "curve_bins" => self.curve_bins = parse_number(value)?,
            "delta" => self.delta = parse_number(value)?,
            "min_blob_area" => self.min_blob_area = parse_number(value)?,
            "t_min" => self.t_min = parse_number(value)?,
            "t_max" => self.t_max = parse_number(value)?,
            "gate" => self.gate = parse_number(value)?,
            "max_misses" => self.max_misses = parse_number(value)?,
            "n_init" => self.n_init = parse_number(value)?,
            "spawn" => {
                self.spawn = match value {
                    "all" => SpawnPolicy::AllBlobs,
                    "persons" => SpawnPolicy::PersonsOnly,
                    _ => return Err(format!("invalid value '{value}', expected all or persons")),
                }
            }
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    pub fn apply_config(&mut self, text: &str) -> crate::error::Result<()> {
        for kv in formats::parse_key_values(text)? {
            self.set(&kv.key, &kv.value)
                .map_err(|m| crate::error::Error::parse_at_line(kv.line, m))?;
        }
        Ok(())
    }

    pub fn segment_params(&self) -> SegmentParams<f64> {
        SegmentParams {
            homogeneity_tol: self.homogeneity_tol,
            area_floor: self.area_floor,
            depth_match_tol: self.depth_match_tol,
        }
    }

    pub fn detection_config(&self) -> DetectionConfig<f64> {
        DetectionConfig {
            delta: self.delta,
            min_blob_area: self.min_blob_area,
            method: self.method,
            segment: self.segment_params(),
            tracker: TrackerConfig {
                gate: self.gate,
                max_misses: self.max_misses,
                t_min: self.t_min,
                t_max: self.t_max,
                spawn: self.spawn,
            },
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "thermofuse",
    version,
    about = "Depth-guided thermal upsampling for a TOF + thermopile rig"
)]
pub struct Cli {
    /// Config file with `key = value` settings (overrides the THERMOFUSE_CONFIG variable)
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Override one setting, e.g. `--set gate=8` (repeatable)
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Print the default settings in config-file form and exit
    #[arg(long)]
    pub print_defaults: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a scene and write truth, sensor images and the rig calibration
    Simulate(SimulateArgs),
    /// Estimate the IR rotation from target image pairs
    Calibrate(CalibrateArgs),
    /// Upsample a thermal image onto the depth image grid
    Fuse(FuseArgs),
    /// Compare a fused image with ground truth
    Evaluate(EvaluateArgs),
    /// Detect and track warm objects over a frame sequence
    Track(TrackArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scene file; the built-in default scene when omitted
    #[arg(long)]
    pub scene: Option<PathBuf>,
    /// Output directory (created if missing)
    #[arg(long)]
    pub out: PathBuf,
    /// Thermal resolution as WxH
    #[arg(long, value_name = "WxH", value_parser = parse_size)]
    pub ir_size: Option<(usize, usize)>,
    /// Replace the scene's noise seed
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Directory of `<name>_depth.pgm` / `<name>_thermal.csv` pairs
    #[arg(long)]
    pub pairs: PathBuf,
    /// Known IR-from-TOF translation in meters
    #[arg(long, value_name = "TX,TY,TZ", value_parser = parse_translation, allow_hyphen_values = true)]
    pub translation: (f64, f64, f64),
    /// Calibration file supplying both intrinsics [default: <pairs>/intrinsics.txt]
    #[arg(long)]
    pub intrinsics: Option<PathBuf>,
    /// Calibration file to write
    #[arg(long)]
    pub out: PathBuf,
    /// centroid, mask or hough
    #[arg(long)]
    pub target_method: Option<TargetMethod>,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    /// nearest, bilinear, depth, depth-as-printed or segment
    #[arg(long)]
    pub method: Option<FusionMethod>,
    /// Rig calibration file
    #[arg(long)]
    pub calib: PathBuf,
    /// Depth image (16-bit PGM, millimeters)
    #[arg(long)]
    pub depth: PathBuf,
    /// Thermal image CSV
    #[arg(long)]
    pub thermal: PathBuf,
    /// Fused image CSV
    #[arg(long)]
    pub out: PathBuf,
    /// Also write an 8-bit grayscale rendering
    #[arg(long)]
    pub vis: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Fused image CSV
    #[arg(long)]
    pub fused: PathBuf,
    /// Ground-truth temperature CSV at depth resolution
    #[arg(long)]
    pub truth: PathBuf,
    /// Report file to write
    #[arg(long)]
    pub report: PathBuf,
    /// Accumulated error curve CSV [default: report path with .curve.csv]
    #[arg(long)]
    pub curve: Option<PathBuf>,
    /// Write the per-pixel error map as CSV
    #[arg(long)]
    pub error_map: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrackArgs {
    /// Rig calibration file
    #[arg(long)]
    pub calib: PathBuf,
    /// Directory of `<name>_depth.pgm` / `<name>_thermal.csv` frames, in name order
    #[arg(long)]
    pub frames: PathBuf,
    /// Tracks CSV
    #[arg(long)]
    pub out: PathBuf,
    /// Frames used for the background model
    #[arg(long)]
    pub n_init: Option<usize>,
}

fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WxH, got '{s}'"))?;
    let w: usize = parse_number(w.trim())?;
    let h: usize = parse_number(h.trim())?;
    if w == 0 || h == 0 {
        return Err("sizes must be positive".into());
    }
    Ok((w, h))
}

fn parse_translation(s: &str) -> Result<(f64, f64, f64), String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| parse_number::<f64>(p.trim()))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [x, y, z] if v.iter().all(|c| c.is_finite()) => Ok((x, y, z)),
        _ => Err(format!("expected three finite numbers TX,TY,TZ, got '{s}'")),
    }
}

/// Parses `args` (including the program name) and runs the command,
/// writing human-readable output to `out`.
pub fn run<I, S>(args: I, out: &mut dyn Write) -> anyhow::Result<()>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            write!(out, "{e}")?;
            return Ok(());
        }
        Err(e) => {
            let text = e.render().to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            bail!("{}; try --help", first.trim_start_matches("error: "));
        }
    };
    if cli.print_defaults {
        out.write_all(Settings::default().to_config_string().as_bytes())?;
        return Ok(());
    }
    let mut settings = Settings::default();
    let config = cli
        .config
        .clone()
        .or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
    if let Some(path) = config {
        let text = fs::read_to_string(&path)
            .with_context(|| format!("reading config {}", path.display()))?;
        settings
            .apply_config(&text)
            .with_context(|| format!("in config {}", path.display()))?;
    }
    for o in &cli.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| anyhow!("--set expects KEY=VALUE, got '{o}'"))?;
        settings
            .set(k.trim(), v.trim())
            .map_err(|m| anyhow!("--set {o}: {m}"))?;
    }
    match cli.command {
        None => bail!("no command given; try --help"),
        Some(Command::Simulate(a)) => cmd_simulate(a, &settings, out),
        Some(Command::Calibrate(a)) => cmd_calibrate(a, &settings, out),
        Some(Command::Fuse(a)) => cmd_fuse(a, &settings, out),
        Some(Command::Evaluate(a)) => cmd_evaluate(a, &settings, out),
        Some(Command::Track(a)) => cmd_track(a, &settings, out),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn cmd_simulate(a: SimulateArgs, s: &Settings, out: &mut dyn Write) -> anyhow::Result<()> {
    let mut scene: SceneSpec<f64> = match &a.scene {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            formats::parse_scene(&text).with_context(|| format!("in scene {}", p.display()))?
        }
        None => SceneSpec::default_scene(),
    };
    if let Some(seed) = a.seed {
        scene.noise.seed = seed;
    }
    let ir = a.ir_size.unwrap_or((s.ir_width, s.ir_height));
    let frame = simulate(&scene, ir)?;
    let rig = SimulatedRig::for_scene(&scene, ir)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;

    let mut buf = Vec::new();
    formats::write_raster_csv(&frame.truth.thermal_hi, &mut buf)?;
    write_file(&a.out.join("truth_thermal.csv"), &buf)?;
    buf.clear();
    formats::write_depth_pgm(&frame.truth.depth_hi, &mut buf)?;
    write_file(&a.out.join("truth_depth.pgm"), &buf)?;
    buf.clear();
    formats::write_depth_pgm(&frame.depth, &mut buf)?;
    write_file(&a.out.join("depth.pgm"), &buf)?;
    buf.clear();
    formats::write_raster_csv(&frame.thermal, &mut buf)?;
    write_file(&a.out.join("thermal.csv"), &buf)?;
    let calib = crate::calibration::RigCalibration {
        ir: rig.k_ir,
        tof: rig.k_tof,
        ext: rig.ext,
    };
    write_file(
        &a.out.join("calib.txt"),
        formats::calibration_to_string(&calib).as_bytes(),
    )?;
    write_file(
        &a.out.join("scene.txt"),
        formats::scene_to_string(&scene).as_bytes(),
    )?;
    writeln!(
        out,
        "simulated {}x{} depth and {}x{} thermal into {}",
        scene.width,
        scene.height,
        ir.0,
        ir.1,
        a.out.display()
    )?;
    Ok(())
}

/// `(stem, depth path, thermal path)` for every complete pair in `dir`, sorted by stem.
fn list_pairs(dir: &Path) -> anyhow::Result<Vec<(String, PathBuf, PathBuf)>> {
    let mut pairs = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        if let Some(stem) = name.strip_suffix("_depth.pgm") {
            let thermal = dir.join(format!("{stem}_thermal.csv"));
            if !thermal.exists() {
                bail!("{} has no matching {}", path.display(), thermal.display());
            }
            pairs.push((stem.to_string(), path.clone(), thermal));
        }
    }
    pairs.sort_by(|a, b| a.0.cmp(&b.0));
    if pairs.is_empty() {
        bail!("no <name>_depth.pgm files in {}", dir.display());
    }
    Ok(pairs)
}

fn load_pair(
    depth: &Path,
    thermal: &Path,
) -> anyhow::Result<(
    crate::raster::DepthImage<f64>,
    crate::raster::ThermalImage<f64>,
)> {
    let d = formats::load_depth(depth).with_context(|| format!("reading {}", depth.display()))?;
    let t = formats::load_raster_csv(thermal)
        .with_context(|| format!("reading {}", thermal.display()))?;
    Ok((d, t))
}

fn cmd_calibrate(a: CalibrateArgs, s: &Settings, out: &mut dyn Write) -> anyhow::Result<()> {
    let intr_path = a
        .intrinsics
        .clone()
        .unwrap_or_else(|| a.pairs.join("intrinsics.txt"));
    let intr = formats::load_calibration::<f64>(&intr_path)
        .with_context(|| format!("reading intrinsics {}", intr_path.display()))?;
    let mut images = Vec::new();
    for (_, d, t) in list_pairs(&a.pairs)? {
        images.push(load_pair(&d, &t)?);
    }
    let (tx, ty, tz) = a.translation;
    let method = a.target_method.unwrap_or(s.target_method);
    let (calib, result) = calibrate_from_images(
        &images,
        &intr.tof,
        &intr.ir,
        Point3::new(tx, ty, tz),
        method,
        s.threshold_offset,
        s.background_gap,
    )?;
    write_file(&a.out, formats::calibration_to_string(&calib).as_bytes())?;
    writeln!(
        out,
        "pairs = {}\nangles = {} {} {}\nresidual_rms_px = {}\niterations = {}\nconverged = {}",
        images.len(),
        result.angles.a1,
        result.angles.a2,
        result.angles.a3,
        result.residual_rms,
        result.iterations,
        result.converged
    )?;
    Ok(())
}

fn cmd_fuse(a: FuseArgs, s: &Settings, out: &mut dyn Write) -> anyhow::Result<()> {
    let calib = formats::load_calibration::<f64>(&a.calib)
        .with_context(|| format!("reading {}", a.calib.display()))?;
    let (depth, thermal) = load_pair(&a.depth, &a.thermal)?;
    let method = a.method.unwrap_or(s.method);
    let map = build_projection_map(&depth, &calib.tof, &calib.ir, &calib.ext)?;
    let params = s.segment_params();
    let fused = if method == FusionMethod::Segment {
        let r = fuse_segment(&map, &thermal, &depth, &params)?;
        writeln!(
            out,
            "mixed_pixels = {}\nfallbacks = {}\nclamped = {}",
            r.diagnostics.mixed.len(),
            r.diagnostics.fallbacks().count(),
            r.diagnostics.clamped().count()
        )?;
        r.image
    } else {
        fuse(method, &map, &thermal, &depth, &params)?
    };
    let mut buf = Vec::new();
    formats::write_raster_csv(&fused, &mut buf)?;
    write_file(&a.out, &buf)?;
    if let Some(vis) = &a.vis {
        buf.clear();
        formats::write_visualization_pgm(&fused, None, &mut buf)?;
        write_file(vis, &buf)?;
    }
    writeln!(
        out,
        "method = {}\nvalid_pixels = {}",
        method_name(method),
        map.valid_count()
    )?;
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs, s: &Settings, out: &mut dyn Write) -> anyhow::Result<()> {
    let fused = formats::load_raster_csv::<f64>(&a.fused)
        .with_context(|| format!("reading {}", a.fused.display()))?;
    let truth = formats::load_raster_csv::<f64>(&a.truth)
        .with_context(|| format!("reading {}", a.truth.display()))?;
    let report = ErrorReport::compute(&fused, &truth, s.curve_bins)?;
    let text = formats::report_to_string(&report);
    write_file(&a.report, text.as_bytes())?;
    let curve = a
        .curve
        .clone()
        .unwrap_or_else(|| a.report.with_extension("curve.csv"));
    let mut buf = Vec::new();
    formats::write_curve_csv(&report.accumulated_curve, &mut buf)?;
    write_file(&curve, &buf)?;
    if let Some(p) = &a.error_map {
        buf.clear();
        formats::write_raster_csv(&report.error_map, &mut buf)?;
        write_file(p, &buf)?;
    }
    out.write_all(text.as_bytes())?;
    Ok(())
}

fn cmd_track(a: TrackArgs, s: &Settings, out: &mut dyn Write) -> anyhow::Result<()> {
    let calib = formats::load_calibration::<f64>(&a.calib)
        .with_context(|| format!("reading {}", a.calib.display()))?;
    let frames = list_pairs(&a.frames)?;
    let n_init = a.n_init.unwrap_or(s.n_init);
    let mut init = Vec::new();
    for (_, d, _) in frames.iter().take(n_init) {
        init.push(formats::load_depth(d).with_context(|| format!("reading {}", d.display()))?);
    }
    let background = build_background(&init, n_init)?;
    drop(init);
    let mut pipeline = DetectionPipeline::new(calib, background, s.detection_config());
    for (idx, (_, d, t)) in frames.iter().enumerate() {
        let (depth, thermal) = load_pair(d, t)?;
        pipeline
            .process(idx, &depth, &thermal)
            .with_context(|| format!("processing frame {idx} ({})", d.display()))?;
    }
    let mut buf = Vec::new();
    formats::write_tracks_csv(&pipeline.tracks, &mut buf)?;
    write_file(&a.out, &buf)?;
    let persons = pipeline.tracks.iter().filter(|t| t.is_person()).count();
    writeln!(
        out,
        "frames = {}\ntracks = {}\nperson_tracks = {}",
        frames.len(),
        pipeline.tracks.len(),
        persons
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_config() {
        let text = Settings::default().to_config_string();
        let mut s = Settings {
            method: FusionMethod::Nearest,
            area_floor: None,
            ..Settings::default()
        };
        s.apply_config(&text).unwrap();
        assert_eq!(s, Settings::default());
    }

    #[test]
    fn config_errors_name_the_line() {
        let e = Settings::default()
            .apply_config("gate = 3\nbogus = 1\n")
            .unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
        assert!(Settings::default().apply_config("gate = x\n").is_err());
    }

    #[test]
    fn size_and_translation_parsers() {
        assert_eq!(parse_size("16x12"), Ok((16, 12)));
        assert!(parse_size("16").is_err());
        assert!(parse_size("0x4").is_err());
        assert_eq!(parse_translation("0.05,-0.01,0"), Ok((0.05, -0.01, 0.0)));
        assert!(parse_translation("1,2").is_err());
        assert!(parse_translation("1,2,inf").is_err());
    }

    #[test]
    fn print_defaults_matches_settings() {
        let mut out = Vec::new();
        run(["thermofuse", "--print-defaults"], &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            Settings::default().to_config_string()
        );
    }

    #[test]
    fn help_goes_to_output() {
        let mut out = Vec::new();
        run(["thermofuse", "--help"], &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        for cmd in ["simulate", "calibrate", "fuse", "evaluate", "track"] {
            assert!(text.contains(cmd), "{text}");
        }
    }
}
