//! Egocentric top view of a segmented room: per-instance range, bearing
//! sector, occupied sectors and feature points.
//!
//! `cargo run --release --example topview`

use hida::cloudio::{random_scene_spec, synth_scene, RandomSceneParams};
use hida::pipeline::{run_pipeline, PipelineConfig};
use hida::topview::{build_topview, Pose2D, Sector, TopViewConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (cloud, _) = synth_scene(&random_scene_spec(&RandomSceneParams::default(), 12))?;
    let out = run_pipeline(&cloud, &PipelineConfig::default(), &Pose2D::origin())?;

    // in a corner, facing the room diagonal
    let pose = Pose2D::new(0.3, 0.3, std::f64::consts::FRAC_PI_4)?;
    let tv = build_topview(&out.cloud, &out.predictions, out.cloud.class_table(), &pose, &TopViewConfig::default())?;
    let scanned: Vec<&str> = tv.scanned_sectors.iter().map(Sector::name).collect();
    println!("scanned: {}", scanned.join(", "));
    for i in &tv.instances {
        let occ: Vec<u8> = i.occupied_sectors.iter().map(Sector::index).collect();
        let c = i.feature_points.closest;
        println!(
            "  #{:<2} {:<10} {:>5.2} m  {:<17} occupies {:?}  closest point {} at ({:.2}, {:.2})",
            i.instance, i.class, i.range_m, i.sector.name(), occ, c.index, c.world[0], c.world[1]
        );
    }
    Ok(())
}
