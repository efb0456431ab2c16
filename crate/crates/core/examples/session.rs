//! Simulator session: walk the avatar toward a chair, watch the pose cache
//! and collision events, ask questions, and save the event log.
//!
//! `cargo run --release --example session`

use hida::assist::{AvoidanceQuery, FindQuery};
use hida::cloudio::SceneSpec;
use hida::session::{load_events, SceneSource, Session, SessionRequest};
use hida::topview::Pose2D;

const SPEC: &str = r#"{
  "room": { "size": [5.0, 4.0, 2.5], "surface_points": 6000 },
  "objects": [
    { "class": "chair", "min": [2.0, 1.0, 0.0], "max": [2.5, 1.5, 0.9], "points": 900 },
    { "class": "table", "min": [3.2, 2.2, 0.0], "max": [4.2, 3.0, 0.75], "points": 1500 }
  ],
  "seed": 11
}"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut req = SessionRequest::new(SceneSource::Synth(serde_json::from_str::<SceneSpec>(SPEC)?));
    req.pose = Some(Pose2D::new(0.5, 1.25, 0.0)?);
    let mut s = Session::create("demo", &req)?;
    println!("{}", serde_json::to_string(&s.created_report())?);

    for x in [0.9, 1.3, 1.7, 1.9, 1.3] {
        let (u, events) = s.update_pose(Pose2D::new(x, 1.25, 0.0)?)?;
        let hits: Vec<String> = u.collisions.iter().map(|c| format!("{} at {:.2} m", c.class, c.range_m)).collect();
        println!("x = {x}: cache hit {}, {} events, collisions [{}]", u.cache_hit, events.len(), hits.join(", "));
    }
    let (a, _) = s.query_avoid(&AvoidanceQuery::new(1.0)?)?;
    println!("avoid: {}", a.narration.join(" / "));
    let (f, _) = s.query_find(&FindQuery::new("table"))?;
    println!("find: {}", f.narration.join(" / "));

    let dir = tempfile::tempdir()?;
    let log = dir.path().join("events.jsonl");
    s.save_events(&log)?;
    let back = load_events(&log)?;
    println!("event log: {} events, round trip equal: {}", back.len(), back == s.events());
    Ok(())
}
