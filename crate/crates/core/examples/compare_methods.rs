//! Mean absolute error of every fusion method on the default scene,
//! averaged over noise seeds.
//!
//! cargo run --release --example compare_methods -- [seeds]

use thermofuse::fusion::{
    build_projection_map, fuse, DepthWeightMode, FusionMethod, SegmentParams,
};
use thermofuse::metrics::mean_abs_error;
use thermofuse::simulation::{simulate, SceneSpec, SimulatedRig, DEFAULT_THERMAL};

fn main() -> thermofuse::Result<()> {
    let seeds: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(10);
    let methods = [
        ("nearest", FusionMethod::Nearest),
        ("bilinear", FusionMethod::Bilinear),
        (
            "depth",
            FusionMethod::DepthWeighted(DepthWeightMode::Similarity),
        ),
        (
            "depth-as-printed",
            FusionMethod::DepthWeighted(DepthWeightMode::AsPrinted),
        ),
        ("segment", FusionMethod::Segment),
    ];
    let mut sums = [0.0f64; 5];
    for seed in 0..seeds {
        let mut scene = SceneSpec::<f64>::default_scene();
        scene.noise.seed = seed;
        let frame = simulate(&scene, DEFAULT_THERMAL)?;
        let rig = SimulatedRig::for_scene(&scene, DEFAULT_THERMAL)?;
        let map = build_projection_map(&frame.depth, &rig.k_tof, &rig.k_ir, &rig.ext)?;
        for (sum, (_, m)) in sums.iter_mut().zip(methods) {
            let fused = fuse(
                m,
                &map,
                &frame.thermal,
                &frame.depth,
                &SegmentParams::default(),
            )?;
            *sum += mean_abs_error(&fused, &frame.truth.thermal_hi)?;
        }
    }
    for ((name, _), sum) in methods.iter().zip(sums) {
        println!("{name:>16}  {:.4} degC", sum / seeds as f64);
    }
    println!("segment / nearest = {:.4}", sums[4] / sums[0]);
    Ok(())
}
