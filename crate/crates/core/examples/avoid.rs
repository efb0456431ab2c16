//! Obstacle-avoidance query: free sectors, suggested headings and the
//! spoken answer in both styles.
//!
//! `cargo run --release --example avoid`

use hida::assist::{avoid, narrate, Answer, AvoidanceQuery, NarrationStyle};
use hida::cloudio::{synth_scene, SceneSpec};
use hida::pipeline::{run_pipeline, PipelineConfig};
use hida::topview::{Pose2D, Sector};

const SPEC: &str = r#"{
  "room": { "size": [6.0, 5.0, 2.5], "surface_points": 10000 },
  "objects": [
    { "class": "table",   "min": [3.0, 2.0, 0.0], "max": [3.8, 3.0, 0.75], "points": 3000 },
    { "class": "chair",   "min": [2.2, 3.4, 0.0], "max": [2.6, 3.8, 0.9],  "points": 1500 },
    { "class": "chair",   "min": [2.2, 1.2, 0.0], "max": [2.6, 1.6, 0.9],  "points": 1500 },
    { "class": "cabinet", "min": [0.2, 3.8, 0.0], "max": [0.8, 4.8, 1.8],  "points": 3000 },
    { "class": "sofa",    "min": [4.5, 0.3, 0.0], "max": [5.8, 1.2, 0.8],  "points": 3000 }
  ],
  "seed": 2
}"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (cloud, _) = synth_scene(&serde_json::from_str::<SceneSpec>(SPEC)?)?;
    let out = run_pipeline(&cloud, &PipelineConfig::default(), &Pose2D::new(1.5, 2.5, 0.0)?)?;

    for range in [1.0, 2.0, 4.0] {
        let a = avoid(&out.topview, &AvoidanceQuery::new(range)?);
        let free: Vec<&str> = a.free_sectors.iter().map(Sector::name).collect();
        println!("range {range} m: {} obstacles, free: {}", a.obstacles_in_range.len(), free.join(", "));
        for line in &a.narration {
            println!("  {line}");
        }
        if a.obstacles_in_range.len() > 3 {
            println!("  brief:");
            for line in narrate(Answer::Avoid(&a), NarrationStyle::Brief) {
                println!("    {line}");
            }
        }
    }
    Ok(())
}
