//! Obstacle avoidance and object finding over a top view, with text
//! narration standing in for speech output.

use serde::{Deserialize, Serialize};

use crate::topview::{Sector, SectorSet, TopViewInstance, TopViewScene};

pub const DEFAULT_CORRIDOR_HALFWIDTH: u8 = 1;
/// Obstacle lines kept by the brief narration style.
pub const BRIEF_OBSTACLE_CAP: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AvoidanceQuery {
    pub range: f64,
}

impl AvoidanceQuery {
    pub fn new(range: f64) -> Result<Self, String> {
        if range.is_finite() && range > 0.0 {
            Ok(AvoidanceQuery { range })
        } else {
            Err(format!("avoidance range must be a positive number, got {range}"))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FindQuery {
    pub class: String,
    #[serde(default = "default_halfwidth")]
    pub corridor_halfwidth: u8,
}

fn default_halfwidth() -> u8 {
    DEFAULT_CORRIDOR_HALFWIDTH
}

impl FindQuery {
    pub fn new(class: impl Into<String>) -> Self {
        FindQuery { class: class.into(), corridor_halfwidth: DEFAULT_CORRIDOR_HALFWIDTH }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub instance: usize,
    pub class: String,
    pub range_m: f64,
    pub sector: Sector,
    pub occupied_sectors: SectorSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sighting {
    pub instance: usize,
    pub class: String,
    pub range_m: f64,
    pub sector: Sector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvoidanceAnswer {
    pub range: f64,
    pub free_sectors: SectorSet,
    pub suggested: Vec<Sector>,
    pub fallback_unscanned: Vec<Sector>,
    pub obstacles_in_range: Vec<Obstacle>,
    pub narration: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FindAnswer {
    pub class: String,
    pub found: bool,
    pub target: Option<Sighting>,
    pub alerts: Vec<Sighting>,
    pub narration: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NarrationStyle {
    #[default]
    Full,
    Brief,
}

pub enum Answer<'a> {
    Avoid(&'a AvoidanceAnswer),
    Find(&'a FindAnswer),
}

fn forward_distance(s: Sector) -> u8 {
    s.distance(Sector::new(0).expect("sector 0"))
}

/// Center of a run; for even lengths the middle sector nearer forward.
fn run_center(first: Sector, len: u8) -> Sector {
    if len == 12 {
        return Sector::new(0).expect("sector 0");
    }
    if len % 2 == 1 {
        return first.offset((len / 2) as i32);
    }
    let a = first.offset((len / 2) as i32 - 1);
    let b = first.offset((len / 2) as i32);
    if (forward_distance(b), b) < (forward_distance(a), a) {
        b
    } else {
        a
    }
}

/// Run centers ranked by run length, then nearness to forward, then index.
pub fn ranked_run_centers(set: SectorSet) -> Vec<Sector> {
    let mut runs: Vec<(u8, Sector)> = set.runs().into_iter().map(|(first, len)| (len, run_center(first, len))).collect();
    runs.sort_by(|a, b| b.0.cmp(&a.0).then(forward_distance(a.1).cmp(&forward_distance(b.1))).then(a.1.cmp(&b.1)));
    runs.into_iter().map(|(_, c)| c).collect()
}

fn by_range(a: &TopViewInstance, b: &TopViewInstance) -> std::cmp::Ordering {
    a.range_m.total_cmp(&b.range_m).then(a.sector.cmp(&b.sector)).then(a.instance.cmp(&b.instance))
}

pub fn avoid(scene: &TopViewScene, q: &AvoidanceQuery) -> AvoidanceAnswer {
    let mut in_range: Vec<&TopViewInstance> = scene.instances.iter().filter(|i| i.range_m <= q.range).collect();
    in_range.sort_by(|a, b| by_range(a, b));
    let blocked = in_range.iter().fold(SectorSet::empty(), |acc, i| acc.union(i.occupied_sectors));
    let free_sectors = scene.scanned_sectors.difference(blocked);
    let (suggested, fallback_unscanned) = if free_sectors.is_empty() {
        let mut fb = ranked_run_centers(scene.scanned_sectors.complement());
        fb.truncate(2);
        (fb.clone(), fb)
    } else {
        (ranked_run_centers(free_sectors), Vec::new())
    };
    let mut answer = AvoidanceAnswer {
        range: q.range,
        free_sectors,
        suggested,
        fallback_unscanned,
        obstacles_in_range: in_range
            .into_iter()
            .map(|i| Obstacle {
                instance: i.instance,
                class: i.class.clone(),
                range_m: i.range_m,
                sector: i.sector,
                occupied_sectors: i.occupied_sectors,
            })
            .collect(),
        narration: Vec::new(),
    };
    answer.narration = narrate(Answer::Avoid(&answer), NarrationStyle::Full);
    answer
}

pub fn find_object(scene: &TopViewScene, q: &FindQuery) -> FindAnswer {
    let target = scene
        .instances
        .iter()
        .filter(|i| i.class == q.class)
        .min_by(|a, b| {
            a.range_m
                .total_cmp(&b.range_m)
                .then(b.score.total_cmp(&a.score))
                .then(a.sector.cmp(&b.sector))
                .then(a.instance.cmp(&b.instance))
        });
    let sighting = |i: &TopViewInstance| Sighting { instance: i.instance, class: i.class.clone(), range_m: i.range_m, sector: i.sector };
    let mut answer = match target {
        None => FindAnswer { class: q.class.clone(), found: false, target: None, alerts: Vec::new(), narration: Vec::new() },
        Some(t) => {
            let mut alerts: Vec<&TopViewInstance> = scene
                .instances
                .iter()
                .filter(|i| i.instance != t.instance)
                .filter(|i| i.sector.distance(t.sector) <= q.corridor_halfwidth && i.range_m < t.range_m)
                .collect();
            alerts.sort_by(|a, b| by_range(a, b));
            FindAnswer {
                class: q.class.clone(),
                found: true,
                target: Some(sighting(t)),
                alerts: alerts.into_iter().map(sighting).collect(),
                narration: Vec::new(),
            }
        }
    };
    answer.narration = narrate(Answer::Find(&answer), NarrationStyle::Full);
    answer
}

fn article(word: &str) -> &'static str {
    match word.chars().next().map(|c| c.to_ascii_lowercase()) {
        Some('a' | 'e' | 'i' | 'o' | 'u') => "an",
        _ => "a",
    }
}

fn meters(d: f64) -> String {
    format!("{d:.1}")
}

fn list_sectors(s: &[Sector]) -> String {
    s.iter().map(|x| x.name()).collect::<Vec<_>>().join(", ")
}

fn more_line(n: usize) -> String {
    if n == 1 {
        "and 1 more obstacle".to_string()
    } else {
        format!("and {n} more obstacles")
    }
}

fn capped<T>(items: &[T], style: NarrationStyle, mut line: impl FnMut(&T) -> String) -> Vec<String> {
    let keep = match style {
        NarrationStyle::Full => items.len(),
        NarrationStyle::Brief => items.len().min(BRIEF_OBSTACLE_CAP),
    };
    let mut out: Vec<String> = items[..keep].iter().map(&mut line).collect();
    if keep < items.len() {
        out.push(more_line(items.len() - keep));
    }
    out
}

/// Expands an answer into text lines. Distances are given to 0.1 m.
pub fn narrate(answer: Answer<'_>, style: NarrationStyle) -> Vec<String> {
    match answer {
        Answer::Avoid(a) => {
            let mut out = Vec::new();
            if !a.free_sectors.is_empty() {
                let label = if a.suggested.len() == 1 { "Passable direction" } else { "Passable directions" };
                out.push(format!("{label}: {}", list_sectors(&a.suggested)));
            } else if !a.fallback_unscanned.is_empty() {
                out.push("No passable direction in the scanned area".to_string());
                let label = if a.fallback_unscanned.len() == 1 { "Unscanned direction" } else { "Unscanned directions" };
                out.push(format!("{label} to try: {}", list_sectors(&a.fallback_unscanned)));
            } else {
                out.push("No passable direction".to_string());
            }
            out.extend(capped(&a.obstacles_in_range, style, |o| {
                format!(
                    "Obstacle: {} {}, distance {} meters, direction in {}",
                    article(&o.class),
                    o.class,
                    meters(o.range_m),
                    o.sector.name()
                )
            }));
            out
        }
        Answer::Find(f) => match &f.target {
            None => vec![format!("No {} found in the scanned area", f.class)],
            Some(t) => {
                let mut out = vec![format!(
                    "Found {} {}, distance {} meters, direction in {}",
                    article(&t.class),
                    t.class,
                    meters(t.range_m),
                    t.sector.name()
                )];
                out.extend(capped(&f.alerts, style, |a| {
                    format!("Attention, {} {} in this direction, distance {} meters", article(&a.class), a.class, meters(a.range_m))
                }));
                out
            }
        },
    }
}
