//! Samples a furnished room from a JSON spec and a random one, then prints
//! what came out.
//!
//! `cargo run --example synth_scene`

use hida::cloudio::{random_scene_spec, synth_scene, RandomSceneParams, SceneSpec};

const SPEC: &str = r#"{
  "room": { "size": [5.0, 4.0, 2.5], "surface_points": 8000 },
  "objects": [
    { "class": "desk",  "min": [3.2, 1.4, 0.0], "max": [4.0, 2.6, 0.75], "points": 5000 },
    { "class": "chair", "min": [2.3, 1.85, 0.0], "max": [2.6, 2.15, 0.9], "points": 600 },
    { "class": "sofa",  "min": [0.2, 0.2, 0.0], "max": [1.8, 1.0, 0.8],  "points": 4000 }
  ],
  "seed": 5
}"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec: SceneSpec = serde_json::from_str(SPEC)?;
    let (cloud, gt) = synth_scene(&spec)?;
    println!("spec scene: {} points, {} instances", cloud.len(), gt.len());
    for g in gt.instances() {
        println!("  instance {:>2}  {:<8} {:>5} points", g.id, cloud.class_table().name(g.class_id), g.point_indices.len());
    }

    let params = RandomSceneParams { total_points: 100_000, ..RandomSceneParams::default() };
    let spec = random_scene_spec(&params, 42);
    let (cloud, gt) = synth_scene(&spec)?;
    println!("random scene: {} points, {} instances in a {:.1} x {:.1} m room", cloud.len(), gt.len(), spec.room.size[0], spec.room.size[1]);
    Ok(())
}
