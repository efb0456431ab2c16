//! Object search: nearest instance of a class and what lies on the way.
//!
//! `cargo run --release --example find`

use hida::assist::{find_object, FindQuery};
use hida::cloudio::{synth_scene, SceneSpec};
use hida::pipeline::{run_pipeline, PipelineConfig};
use hida::topview::Pose2D;

const SPEC: &str = r#"{
  "room": { "size": [5.0, 4.0, 2.5], "surface_points": 8000 },
  "objects": [
    { "class": "desk",  "min": [3.2, 1.4, 0.0], "max": [4.0, 2.6, 0.75], "points": 5000 },
    { "class": "chair", "min": [2.3, 1.85, 0.0], "max": [2.6, 2.15, 0.9], "points": 600 },
    { "class": "bed",   "min": [0.2, 2.6, 0.0], "max": [2.2, 3.8, 0.6],  "points": 9000 }
  ],
  "seed": 5
}"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (cloud, _) = synth_scene(&serde_json::from_str::<SceneSpec>(SPEC)?)?;
    let out = run_pipeline(&cloud, &PipelineConfig::default(), &Pose2D::new(1.0, 2.0, 0.0)?)?;
    for class in ["desk", "bed", "toilet"] {
        let f = find_object(&out.topview, &FindQuery::new(class));
        println!("find {class}:");
        for line in &f.narration {
            println!("  {line}");
        }
    }
    Ok(())
}
