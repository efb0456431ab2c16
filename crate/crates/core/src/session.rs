//! Interactive simulation state: one scene, an avatar pose, a pose-keyed
//! top-view cache and an append-only event log.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::assist::{avoid, find_object, AvoidanceAnswer, AvoidanceQuery, FindAnswer, FindQuery};
use crate::cloudio::{load_cloud_auto, synth_scene, LabeledCloud, SceneSpec};
use crate::grouping::{instances_to_json, InstancePrediction};
use crate::pipeline::{run_pipeline, PipelineConfig, StageSeconds};
use crate::topview::{build_topview, Pose2D, TopViewScene};
use crate::{Error, Result};

pub const DEFAULT_COLLISION_DISTANCE: f64 = 0.15;

/// Where a session's scene comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneSource {
    Synth(SceneSpec),
    Path(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRequest {
    pub source: SceneSource,
    #[serde(default)]
    pub config: PipelineConfig,
    #[serde(default)]
    pub pose: Option<Pose2D>,
    #[serde(default = "default_collision")]
    pub collision_distance: f64,
}

fn default_collision() -> f64 {
    DEFAULT_COLLISION_DISTANCE
}

impl SessionRequest {
    pub fn new(source: SceneSource) -> Self {
        SessionRequest { source, config: PipelineConfig::default(), pose: None, collision_distance: DEFAULT_COLLISION_DISTANCE }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    PoseUpdate,
    Query,
    Answer,
    Collision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimEvent {
    pub seq: u64,
    /// Seconds since the session was created; never decreases.
    pub t: f64,
    pub kind: EventKind,
    pub payload: Value,
}

/// Cache key: position in centimeters, heading in whole degrees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PoseKey {
    pub x_cm: i64,
    pub y_cm: i64,
    pub heading_deg: i64,
}

impl PoseKey {
    pub fn of(p: &Pose2D) -> Self {
        PoseKey {
            x_cm: (p.x * 100.0).round() as i64,
            y_cm: (p.y * 100.0).round() as i64,
            heading_deg: (p.heading.to_degrees().round() as i64).rem_euclid(360),
        }
    }

    /// The pose this key stands for; queries run against it.
    pub fn pose(&self) -> Pose2D {
        Pose2D::new(self.x_cm as f64 / 100.0, self.y_cm as f64 / 100.0, (self.heading_deg as f64).to_radians())
            .expect("finite pose")
    }
}

/// Snaps a pose onto the 1 cm / 1 degree cache grid.
pub fn quantize_pose(p: &Pose2D) -> Pose2D {
    PoseKey::of(p).pose()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Collision {
    pub instance: usize,
    pub class: String,
    pub range_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseUpdate {
    pub pose: Pose2D,
    pub cache_hit: bool,
    /// Time spent producing the top view (near zero on a cache hit).
    pub seconds: f64,
    pub instances: usize,
    pub scanned_sectors: crate::topview::SectorSet,
    pub collisions: Vec<Collision>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionCreated {
    pub id: String,
    pub points: usize,
    pub instances: usize,
    pub timing: StageSeconds,
}

pub struct Session {
    id: String,
    cloud: LabeledCloud,
    predictions: Vec<InstancePrediction>,
    config: PipelineConfig,
    collision_distance: f64,
    pose: Pose2D,
    cache: HashMap<PoseKey, TopViewScene>,
    events: Vec<SimEvent>,
    created: Instant,
    timing: StageSeconds,
}

impl Session {
    pub fn create(id: impl Into<String>, req: &SessionRequest) -> Result<Session> {
        if !(req.collision_distance >= 0.0 && req.collision_distance.is_finite()) {
            return Err(Error::Invalid("collision_distance must be >= 0".into()));
        }
        let cloud = match &req.source {
            SceneSource::Synth(spec) => synth_scene(spec)?.0,
            SceneSource::Path(p) => load_cloud_auto(p)?,
        };
        let pose = quantize_pose(&req.pose.unwrap_or_default());
        let out = run_pipeline(&cloud, &req.config, &pose)?;
        let mut cache = HashMap::new();
        cache.insert(PoseKey::of(&pose), out.topview);
        Ok(Session {
            id: id.into(),
            cloud: out.cloud,
            predictions: out.predictions,
            config: req.config,
            collision_distance: req.collision_distance,
            pose,
            cache,
            events: Vec::new(),
            created: Instant::now(),
            timing: out.timing,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn created_report(&self) -> SessionCreated {
        SessionCreated { id: self.id.clone(), points: self.cloud.len(), instances: self.predictions.len(), timing: self.timing }
    }

    pub fn cloud(&self) -> &LabeledCloud {
        &self.cloud
    }

    pub fn predictions(&self) -> &[InstancePrediction] {
        &self.predictions
    }

    pub fn pose(&self) -> Pose2D {
        self.pose
    }

    pub fn events(&self) -> &[SimEvent] {
        &self.events
    }

    pub fn instances_json(&self) -> String {
        instances_to_json(&self.predictions, self.cloud.class_table())
    }

    fn push(&mut self, kind: EventKind, payload: Value) -> SimEvent {
        let now = self.created.elapsed().as_secs_f64();
        let t = self.events.last().map_or(now, |e| e.t.max(now));
        let ev = SimEvent { seq: self.events.len() as u64, t, kind, payload };
        self.events.push(ev.clone());
        ev
    }

    fn topview_at(&mut self, pose: &Pose2D) -> Result<(bool, &TopViewScene)> {
        let key = PoseKey::of(pose);
        let hit = self.cache.contains_key(&key);
        if !hit {
            let tv = build_topview(&self.cloud, &self.predictions, self.cloud.class_table(), pose, &self.config.topview)?;
            self.cache.insert(key, tv);
        }
        Ok((hit, &self.cache[&key]))
    }

    /// Top view at the current pose.
    pub fn topview(&mut self) -> Result<TopViewScene> {
        let pose = self.pose;
        Ok(self.topview_at(&pose)?.1.clone())
    }

    /// Moves the avatar. Emits a pose event and one collision event per
    /// instance whose closest point is within the collision distance.
    pub fn update_pose(&mut self, pose: Pose2D) -> Result<(PoseUpdate, Vec<SimEvent>)> {
        let pose = quantize_pose(&pose);
        let start = Instant::now();
        let limit = self.collision_distance;
        let (cache_hit, tv) = self.topview_at(&pose)?;
        let seconds = start.elapsed().as_secs_f64();
        let collisions: Vec<Collision> = tv
            .instances
            .iter()
            .filter(|i| i.range_m <= limit)
            .map(|i| Collision { instance: i.instance, class: i.class.clone(), range_m: i.range_m })
            .collect();
        let update = PoseUpdate {
            pose,
            cache_hit,
            seconds,
            instances: tv.instances.len(),
            scanned_sectors: tv.scanned_sectors,
            collisions,
        };
        self.pose = pose;
        let mut emitted = vec![self.push(EventKind::PoseUpdate, json!({ "pose": pose, "cache_hit": cache_hit }))];
        for c in &update.collisions {
            emitted.push(self.push(EventKind::Collision, serde_json::to_value(c)?));
        }
        Ok((update, emitted))
    }

    pub fn query_avoid(&mut self, q: &AvoidanceQuery) -> Result<(AvoidanceAnswer, Vec<SimEvent>)> {
        let tv = self.topview()?;
        let a = avoid(&tv, q);
        let e1 = self.push(EventKind::Query, json!({ "avoid": q }));
        let e2 = self.push(EventKind::Answer, json!({ "avoid": a }));
        Ok((a, vec![e1, e2]))
    }

    pub fn query_find(&mut self, q: &FindQuery) -> Result<(FindAnswer, Vec<SimEvent>)> {
        let tv = self.topview()?;
        let a = find_object(&tv, q);
        let e1 = self.push(EventKind::Query, json!({ "find": q }));
        let e2 = self.push(EventKind::Answer, json!({ "find": a }));
        Ok((a, vec![e1, e2]))
    }

    /// Writes the event log as JSON lines.
    pub fn save_events(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        for e in &self.events {
            serde_json::to_writer(&mut f, e)?;
            f.write_all(b"\n")?;
        }
        f.flush()?;
        Ok(())
    }
}

/// Reads an event log written by [`Session::save_events`].
pub fn load_events(path: impl AsRef<Path>) -> Result<Vec<SimEvent>> {
    let f = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    for line in f.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}
