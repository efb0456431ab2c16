//! AP25, AP50 and mAP as oracle label noise grows.
//!
//! `cargo run --release --example eval_noise_sweep`

use hida::cloudio::{random_scene_spec, synth_scene, OracleConfig, RandomSceneParams};
use hida::evalmetrics::evaluate;
use hida::pipeline::{run_pipeline, PipelineConfig};
use hida::topview::Pose2D;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = RandomSceneParams { total_points: 40_000, ..RandomSceneParams::default() };
    let scenes: Vec<_> = (0..5).map(|s| synth_scene(&random_scene_spec(&params, 2000 + s))).collect::<Result<_, _>>()?;

    println!("{:>9} {:>7} {:>7} {:>7}", "flip rate", "AP25", "AP50", "mAP");
    for rate in [0.0, 0.05, 0.1, 0.2, 0.4] {
        let (mut ap25, mut ap50, mut map) = (0.0, 0.0, 0.0);
        for (k, (cloud, _)) in scenes.iter().enumerate() {
            let cfg = PipelineConfig { oracle: OracleConfig::new(rate, 0.0, k as u64)?, ..PipelineConfig::default() };
            let out = run_pipeline(cloud, &cfg, &Pose2D::origin())?;
            let r = evaluate(&out.predictions, out.gt.as_ref().expect("synthetic ground truth"), cloud.class_table())?;
            ap25 += r.ap25;
            ap50 += r.ap50;
            map += r.map;
        }
        let n = scenes.len() as f64;
        println!("{rate:>9.2} {:>7.3} {:>7.3} {:>7.3}", ap25 / n, ap50 / n, map / n);
    }
    Ok(())
}
