//! Writes a labeled cloud as HLC1 and as binary PLY, reads both back and
//! compares what survived.
//!
//! `cargo run --example cloud_formats`

use hida::cloudio::{load_cloud_auto, random_scene_spec, save_cloud_auto, synth_scene, RandomSceneParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = RandomSceneParams { total_points: 20_000, ..RandomSceneParams::default() };
    let (cloud, _) = synth_scene(&random_scene_spec(&params, 1))?;
    let dir = tempfile::tempdir()?;

    for name in ["room.hlc1", "room.ply"] {
        let path = dir.path().join(name);
        save_cloud_auto(&cloud, &path)?;
        let back = load_cloud_auto(&path)?;
        println!(
            "{name:<10} {:>8} bytes  points equal: {}  labels: {}  offsets: {}  instance ids: {}",
            std::fs::metadata(&path)?.len(),
            back.points() == cloud.points(),
            back.labels().is_some(),
            back.offsets().is_some(),
            back.instance_ids().is_some(),
        );
    }
    Ok(())
}
