//! Egocentric top view: ground-plane projection, five feature points per
//! instance and the 12-sector bearing model.
//!
//! Sector `k` covers bearings `[30k - 15, 30k + 15)` degrees, counted
//! counterclockwise from the user's forward direction; sector 0 is straight
//! ahead, 3 is left, 6 behind and 9 right.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cloudio::{ClassTable, LabeledCloud};
use crate::grouping::InstancePrediction;

pub const SECTOR_COUNT: u8 = 12;
pub const SECTOR_WIDTH_DEG: f64 = 30.0;
/// Points above this height (m) are ceiling, not obstacles.
pub const DEFAULT_HEADROOM: f64 = 2.2;

const SECTOR_NAMES: [&str; 12] = [
    "directly forward",
    "forward-left",
    "left-front",
    "directly left",
    "left-rear",
    "rear-left",
    "directly behind",
    "rear-right",
    "right-rear",
    "directly right",
    "right-front",
    "forward-right",
];

#[derive(Debug, Error, PartialEq)]
pub enum TopViewError {
    #[error("bearing undefined at origin")]
    Origin,
    #[error("prediction {prediction} references point {index} but the cloud has {len} points")]
    IndexOutOfRange { prediction: usize, index: u32, len: usize },
    #[error("invalid pose: {0}")]
    Pose(String),
    #[error("invalid config: {0}")]
    Config(String),
}

/// User position on the ground plane and facing direction (radians,
/// counterclockwise from world +X), normalized to `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPose")]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

#[derive(Deserialize)]
struct RawPose {
    x: f64,
    y: f64,
    heading: f64,
}

impl TryFrom<RawPose> for Pose2D {
    type Error = TopViewError;
    fn try_from(r: RawPose) -> Result<Self, Self::Error> {
        Pose2D::new(r.x, r.y, r.heading)
    }
}

pub fn normalize_heading(h: f64) -> f64 {
    let t = h.rem_euclid(2.0 * PI);
    if t > PI {
        t - 2.0 * PI
    } else {
        t
    }
}

impl Pose2D {
    pub fn new(x: f64, y: f64, heading: f64) -> Result<Self, TopViewError> {
        if !(x.is_finite() && y.is_finite() && heading.is_finite()) {
            return Err(TopViewError::Pose("non-finite component".into()));
        }
        Ok(Pose2D { x, y, heading: normalize_heading(heading) })
    }

    pub fn origin() -> Self {
        Pose2D { x: 0.0, y: 0.0, heading: 0.0 }
    }

    pub fn heading_deg(&self) -> f64 {
        self.heading.to_degrees()
    }
}

impl Default for Pose2D {
    fn default() -> Self {
        Pose2D::origin()
    }
}

/// A point in the user frame: `x_fwd` ahead, `y_left` to the left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EgoPoint {
    pub x_fwd: f64,
    pub y_left: f64,
}

impl EgoPoint {
    pub fn range(&self) -> f64 {
        self.x_fwd.hypot(self.y_left)
    }

    /// Degrees counterclockwise from forward, in `(-180, 180]`.
    pub fn bearing_deg(&self) -> f64 {
        self.y_left.atan2(self.x_fwd).to_degrees()
    }
}

pub fn to_ego_xy(x: f64, y: f64, pose: &Pose2D) -> EgoPoint {
    let (s, c) = pose.heading.sin_cos();
    let dx = x - pose.x;
    let dy = y - pose.y;
    EgoPoint { x_fwd: c * dx + s * dy, y_left: -s * dx + c * dy }
}

/// Drops z, translates to the pose and rotates by `-heading`.
pub fn to_ego(p: crate::cloudio::Point3, pose: &Pose2D) -> EgoPoint {
    to_ego_xy(p.x as f64, p.y as f64, pose)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Sector(u8);

impl TryFrom<u8> for Sector {
    type Error = String;
    fn try_from(v: u8) -> Result<Self, String> {
        Sector::new(v).ok_or_else(|| format!("sector {v} out of range 0..12"))
    }
}

impl From<Sector> for u8 {
    fn from(s: Sector) -> u8 {
        s.0
    }
}

impl Sector {
    pub fn new(index: u8) -> Option<Sector> {
        (index < SECTOR_COUNT).then_some(Sector(index))
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn name(self) -> &'static str {
        SECTOR_NAMES[self.0 as usize]
    }

    pub fn all() -> impl Iterator<Item = Sector> {
        (0..SECTOR_COUNT).map(Sector)
    }

    pub fn from_bearing_deg(bearing: f64) -> Sector {
        let k = ((bearing + SECTOR_WIDTH_DEG / 2.0) / SECTOR_WIDTH_DEG).floor() as i64;
        Sector(k.rem_euclid(SECTOR_COUNT as i64) as u8)
    }

    /// Sector `steps` positions counterclockwise (negative: clockwise).
    pub fn offset(self, steps: i32) -> Sector {
        Sector((self.0 as i32 + steps).rem_euclid(SECTOR_COUNT as i32) as u8)
    }

    /// Circular distance in sectors, 0..=6.
    pub fn distance(self, other: Sector) -> u8 {
        let d = (self.0 as i32 - other.0 as i32).rem_euclid(SECTOR_COUNT as i32) as u8;
        d.min(SECTOR_COUNT - d)
    }
}

pub fn bearing_sector(e: EgoPoint) -> Result<Sector, TopViewError> {
    if e.x_fwd == 0.0 && e.y_left == 0.0 {
        return Err(TopViewError::Origin);
    }
    Ok(Sector::from_bearing_deg(e.bearing_deg()))
}

/// A set of sectors, serialized as an ascending index list.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u8>", into = "Vec<u8>")]
pub struct SectorSet(u16);

impl TryFrom<Vec<u8>> for SectorSet {
    type Error = String;
    fn try_from(v: Vec<u8>) -> Result<Self, String> {
        let mut s = SectorSet::empty();
        for i in v {
            s.insert(Sector::try_from(i)?);
        }
        Ok(s)
    }
}

impl From<SectorSet> for Vec<u8> {
    fn from(s: SectorSet) -> Vec<u8> {
        s.iter().map(|x| x.0).collect()
    }
}

impl FromIterator<Sector> for SectorSet {
    fn from_iter<T: IntoIterator<Item = Sector>>(iter: T) -> Self {
        let mut s = SectorSet::empty();
        for x in iter {
            s.insert(x);
        }
        s
    }
}

impl SectorSet {
    pub const fn empty() -> Self {
        SectorSet(0)
    }

    pub const fn full() -> Self {
        SectorSet((1 << SECTOR_COUNT) - 1)
    }

    pub fn insert(&mut self, s: Sector) {
        self.0 |= 1 << s.0;
    }

    pub fn contains(&self, s: Sector) -> bool {
        self.0 & (1 << s.0) != 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn union(self, o: SectorSet) -> SectorSet {
        SectorSet(self.0 | o.0)
    }

    pub fn intersection(self, o: SectorSet) -> SectorSet {
        SectorSet(self.0 & o.0)
    }

    pub fn difference(self, o: SectorSet) -> SectorSet {
        SectorSet(self.0 & !o.0)
    }

    pub fn complement(self) -> SectorSet {
        SectorSet::full().difference(self)
    }

    pub fn iter(&self) -> impl Iterator<Item = Sector> + '_ {
        Sector::all().filter(move |s| self.contains(*s))
    }

    /// Maximal circular runs as `(first sector, length)`, ordered by first
    /// sector. A full set is one run of 12 starting at sector 0.
    pub fn runs(&self) -> Vec<(Sector, u8)> {
        if *self == SectorSet::full() {
            return vec![(Sector(0), SECTOR_COUNT)];
        }
        let mut out = Vec::new();
        for s in Sector::all() {
            if self.contains(s) && !self.contains(s.offset(-1)) {
                let mut len = 1;
                while self.contains(s.offset(len)) {
                    len += 1;
                }
                out.push((s, len as u8));
            }
        }
        out
    }
}

/// One feature point in world and user coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeaturePoint {
    pub index: u32,
    pub world: [f64; 2],
    pub ego: EgoPoint,
}

/// Closest point to the user plus the four world-axis extreme points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeaturePoints {
    pub closest: FeaturePoint,
    pub xmin: FeaturePoint,
    pub xmax: FeaturePoint,
    pub ymin: FeaturePoint,
    pub ymax: FeaturePoint,
}

impl FeaturePoints {
    pub fn all(&self) -> [FeaturePoint; 5] {
        [self.closest, self.xmin, self.xmax, self.ymin, self.ymax]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopViewInstance {
    /// Position of the prediction in the input list.
    pub instance: usize,
    pub class: String,
    pub score: f64,
    pub range_m: f64,
    pub sector: Sector,
    pub occupied_sectors: SectorSet,
    pub feature_points: FeaturePoints,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopViewScene {
    pub pose: Pose2D,
    pub instances: Vec<TopViewInstance>,
    pub scanned_sectors: SectorSet,
}

impl TopViewScene {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("topview serializes") + "\n"
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TopViewConfig {
    pub headroom: f64,
}

impl Default for TopViewConfig {
    fn default() -> Self {
        TopViewConfig { headroom: DEFAULT_HEADROOM }
    }
}

/// Random access to point coordinates, so the single-pass contract can be
/// observed by wrapping the source.
pub trait PointSource {
    fn len(&self) -> usize;
    fn xyz(&self, i: usize) -> [f64; 3];
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl PointSource for LabeledCloud {
    fn len(&self) -> usize {
        LabeledCloud::len(self)
    }
    fn xyz(&self, i: usize) -> [f64; 3] {
        self.points()[i].to_f64()
    }
}

impl PointSource for [[f64; 3]] {
    fn len(&self) -> usize {
        <[[f64; 3]]>::len(self)
    }
    fn xyz(&self, i: usize) -> [f64; 3] {
        self[i]
    }
}

#[derive(Clone, Copy)]
struct Acc {
    closest: (f64, u32, [f64; 2]),
    xmin: (u32, [f64; 2]),
    xmax: (u32, [f64; 2]),
    ymin: (u32, [f64; 2]),
    ymax: (u32, [f64; 2]),
}

impl Acc {
    fn new(i: u32, xy: [f64; 2], range: f64) -> Self {
        Acc { closest: (range, i, xy), xmin: (i, xy), xmax: (i, xy), ymin: (i, xy), ymax: (i, xy) }
    }

    // points arrive in ascending index order, so strict comparisons keep the
    // lowest index on ties
    fn push(&mut self, i: u32, xy: [f64; 2], range: f64) {
        if range < self.closest.0 {
            self.closest = (range, i, xy);
        }
        if xy[0] < self.xmin.1[0] {
            self.xmin = (i, xy);
        }
        if xy[0] > self.xmax.1[0] {
            self.xmax = (i, xy);
        }
        if xy[1] < self.ymin.1[1] {
            self.ymin = (i, xy);
        }
        if xy[1] > self.ymax.1[1] {
            self.ymax = (i, xy);
        }
    }
}

/// Bearings of `points` are covered by the shortest counterclockwise arc;
/// returns the sectors that arc passes through. Among equally short arcs the
/// one whose middle lies nearest `anchor_deg` wins, then the one starting at
/// the smallest bearing.
pub fn occupied_span(points: &[EgoPoint], anchor_deg: f64) -> SectorSet {
    let bearings: Vec<f64> = points
        .iter()
        .filter(|e| !(e.x_fwd == 0.0 && e.y_left == 0.0))
        .map(|e| e.bearing_deg().rem_euclid(360.0))
        .collect();
    if bearings.is_empty() {
        return SectorSet::full();
    }
    let ccw = |from: f64, to: f64| (to - from).rem_euclid(360.0);
    let ang_dist = |a: f64, b: f64| {
        let d = (a - b).rem_euclid(360.0);
        d.min(360.0 - d)
    };
    // (length, distance of middle to anchor, start, end)
    let mut best: Option<(f64, f64, f64, f64)> = None;
    for &s in &bearings {
        let mut len = 0.0;
        let mut end = s;
        for &b in &bearings {
            let d = ccw(s, b);
            if d > len {
                len = d;
                end = b;
            }
        }
        let mid_dist = ang_dist(s + len / 2.0, anchor_deg);
        let cand = (len, mid_dist, s, end);
        best = Some(match best {
            None => cand,
            Some(b) => {
                let key = |c: &(f64, f64, f64, f64)| (c.0, c.1, c.2);
                if key(&cand).partial_cmp(&key(&b)) == Some(std::cmp::Ordering::Less) {
                    cand
                } else {
                    b
                }
            }
        });
    }
    let (len, _, start, end) = best.expect("nonempty");
    let first = Sector::from_bearing_deg(start);
    let last = Sector::from_bearing_deg(end);
    let steps = (last.0 as i32 - first.0 as i32).rem_euclid(SECTOR_COUNT as i32);
    if steps == 0 && len >= SECTOR_WIDTH_DEG {
        return SectorSet::full();
    }
    let mut set: SectorSet = (0..=steps).map(|k| first.offset(k)).collect();
    for &b in &bearings {
        set.insert(Sector::from_bearing_deg(b));
    }
    set
}

/// Reads every point once: instance members below the headroom update their
/// instance's feature points, and every point marks its bearing sector as
/// scanned. Instances with no point below the headroom are left out.
pub fn build_topview<S: PointSource + ?Sized>(
    source: &S,
    predictions: &[InstancePrediction],
    class_table: &ClassTable,
    pose: &Pose2D,
    cfg: &TopViewConfig,
) -> Result<TopViewScene, TopViewError> {
    if !cfg.headroom.is_finite() {
        return Err(TopViewError::Config("headroom must be finite".into()));
    }
    let n = source.len();
    // point -> predictions, as a compressed row list
    let mut counts = vec![0u32; n + 1];
    for (k, p) in predictions.iter().enumerate() {
        for &i in &p.point_indices {
            if i as usize >= n {
                return Err(TopViewError::IndexOutOfRange { prediction: k, index: i, len: n });
            }
            counts[i as usize + 1] += 1;
        }
    }
    for i in 0..n {
        counts[i + 1] += counts[i];
    }
    let mut fill = counts.clone();
    let mut owners = vec![0u32; counts[n] as usize];
    for (k, p) in predictions.iter().enumerate() {
        for &i in &p.point_indices {
            owners[fill[i as usize] as usize] = k as u32;
            fill[i as usize] += 1;
        }
    }

    let mut acc: Vec<Option<Acc>> = vec![None; predictions.len()];
    let mut scanned = SectorSet::empty();
    for i in 0..n {
        let [x, y, z] = source.xyz(i);
        let dx = x - pose.x;
        let dy = y - pose.y;
        let range = dx.hypot(dy);
        let ego = to_ego_xy(x, y, pose);
        if let Ok(s) = bearing_sector(ego) {
            scanned.insert(s);
        }
        if z > cfg.headroom {
            continue;
        }
        for &k in &owners[counts[i] as usize..counts[i + 1] as usize] {
            let slot = &mut acc[k as usize];
            match slot {
                None => *slot = Some(Acc::new(i as u32, [x, y], range)),
                Some(a) => a.push(i as u32, [x, y], range),
            }
        }
    }

    let fp = |(i, xy): (u32, [f64; 2])| FeaturePoint { index: i, world: xy, ego: to_ego_xy(xy[0], xy[1], pose) };
    let mut instances = Vec::new();
    for (k, a) in acc.into_iter().enumerate() {
        let Some(a) = a else { continue };
        let feature_points = FeaturePoints {
            closest: fp((a.closest.1, a.closest.2)),
            xmin: fp(a.xmin),
            xmax: fp(a.xmax),
            ymin: fp(a.ymin),
            ymax: fp(a.ymax),
        };
        let range_m = a.closest.0;
        let (sector, occupied_sectors) = match bearing_sector(feature_points.closest.ego) {
            Ok(s) if range_m > 0.0 => {
                let ego: Vec<EgoPoint> = feature_points.all().iter().map(|f| f.ego).collect();
                (s, occupied_span(&ego, feature_points.closest.ego.bearing_deg()))
            }
            // standing on the object: every direction is blocked
            _ => (Sector(0), SectorSet::full()),
        };
        let p = &predictions[k];
        instances.push(TopViewInstance {
            instance: k,
            class: class_table.name(p.class_id).to_string(),
            score: p.score,
            range_m,
            sector,
            occupied_sectors,
            feature_points,
        });
    }
    Ok(TopViewScene { pose: *pose, instances, scanned_sectors: scanned })
}
