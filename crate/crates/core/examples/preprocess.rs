//! Caps a large scan at 200k points and removes statistical outliers.
//!
//! `cargo run --release --example preprocess`

use hida::cloudio::{random_scene_spec, synth_scene, RandomSceneParams};
use hida::preprocess::{preprocess, PreprocessConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = RandomSceneParams { total_points: 500_000, ..RandomSceneParams::default() };
    let (cloud, _) = synth_scene(&random_scene_spec(&params, 3))?;
    let cfg = PreprocessConfig::default();
    let (out, report) = preprocess(&cloud, &cfg)?;
    println!("config: {}", serde_json::to_string(&cfg)?);
    println!(
        "{} -> {} points ({} outliers removed) in {:.2} s",
        report.input_points, out.len(), report.removed_outliers, report.seconds
    );
    Ok(())
}
