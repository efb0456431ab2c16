//! Stage timing on synthetic rooms sized like the four reference scans.
//!
//! `cargo run --release --example bench -- [scenes]`

use hida::pipeline::{bench, PipelineConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenes = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(4);
    let report = bench(scenes, 0, &PipelineConfig::default())?;
    report.validate(scenes)?;
    println!("{:>5} {:>9} {:>9} {:>7} {:>7} {:>7} {:>7}", "scene", "points", "after", "PRE", "CL", "DET", "total");
    for r in &report.rows {
        let s = r.seconds;
        println!("{:>5} {:>9} {:>9} {:>7.3} {:>7.3} {:>7.3} {:>7.3}", r.scene, r.points_in, r.points_after_pre, s.pre, s.cl, s.det, s.total);
    }
    let a = &report.averages;
    let s = a.seconds;
    println!("{:>5} {:>9.0} {:>9.0} {:>7.3} {:>7.3} {:>7.3} {:>7.3}", "avg", a.points_in, a.points_after_pre, s.pre, s.cl, s.det, s.total);
    Ok(())
}
