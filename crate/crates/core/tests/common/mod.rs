//! Brute-force reference implementations and random scene builders shared by
//! the integration tests. Everything here is written from the definitions,
//! with no shared code beyond plain data types.

#![allow(dead_code)]

pub mod parity;

use std::collections::{BTreeSet, HashSet};

use hida::assist::{AvoidanceAnswer, FindAnswer};
use hida::cloudio::{ClassTable, LabeledCloud, Point3};
use hida::grouping::InstancePrediction;
use hida::topview::{EgoPoint, FeaturePoint, FeaturePoints, Pose2D, Sector, SectorSet, TopViewInstance, TopViewScene};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- clustering

/// Same-label connected components over all O(N^2) pairs, background
/// excluded, small components dropped, ordered by smallest member.
pub fn brute_components(pos: &[[f64; 3]], labels: &[u16], table: &ClassTable, radius: f64, min_points: usize) -> Vec<(u16, Vec<u32>)> {
    let n = pos.len();
    let r2 = radius * radius;
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for s in 0..n {
        if seen[s] || table.is_background(labels[s]) {
            continue;
        }
        let mut comp = vec![s];
        seen[s] = true;
        let mut head = 0;
        while head < comp.len() {
            let i = comp[head];
            head += 1;
            for j in 0..n {
                if seen[j] || labels[j] != labels[i] {
                    continue;
                }
                let dx = pos[i][0] - pos[j][0];
                let dy = pos[i][1] - pos[j][1];
                let dz = pos[i][2] - pos[j][2];
                if dx * dx + dy * dy + dz * dz <= r2 {
                    seen[j] = true;
                    comp.push(j);
                }
            }
        }
        if comp.len() >= min_points {
            let mut idx: Vec<u32> = comp.into_iter().map(|i| i as u32).collect();
            idx.sort_unstable();
            out.push((labels[s], idx));
        }
    }
    out.sort_by_key(|c| c.1[0]);
    out
}

/// Random labeled cloud of up to `max_n` points: a few dense blobs and
/// chains per class plus scattered noise, some points on an exact 0.03 m
/// lattice so edge-length ties at the radius occur.
pub fn random_cluster_cloud(seed: u64, max_n: usize) -> LabeledCloud {
    let mut r = rng(seed);
    let table = ClassTable::scannet();
    let n = r.random_range(1..=max_n);
    let classes = [0u16, 1, 4, 5, 13];
    let mut pts = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut offsets = Vec::with_capacity(n);
    let blobs: Vec<[f64; 3]> = (0..r.random_range(1..6))
        .map(|_| [r.random_range(0.0..1.0), r.random_range(0.0..1.0), r.random_range(0.0..0.5)])
        .collect();
    for _ in 0..n {
        let kind = r.random_range(0..10);
        let p: [f64; 3] = if kind < 6 {
            let b = blobs[r.random_range(0..blobs.len())];
            let s = r.random_range(0.01..0.08);
            [b[0] + r.random_range(-s..s), b[1] + r.random_range(-s..s), b[2] + r.random_range(-s..s)]
        } else if kind < 8 {
            let k = r.random_range(0..30) as f64;
            [0.03 * k, 0.5, 0.03 * r.random_range(0..3) as f64]
        } else {
            [r.random_range(0.0..1.2), r.random_range(0.0..1.2), r.random_range(0.0..0.6)]
        };
        pts.push(Point3::new(p[0] as f32, p[1] as f32, p[2] as f32));
        labels.push(classes[r.random_range(0..classes.len())]);
        let o = if r.random_bool(0.5) {
            [0.0; 3]
        } else {
            [r.random_range(-0.05..0.05f32), r.random_range(-0.05..0.05f32), r.random_range(-0.05..0.05f32)]
        };
        offsets.push(o);
    }
    LabeledCloud::new(pts, table).unwrap().with_labels(labels).unwrap().with_offsets(offsets).unwrap()
}

// ----------------------------------------------------------------------- knn

pub fn brute_knn(pos: &[[f64; 3]], k: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(pos.len() * k);
    for (i, a) in pos.iter().enumerate() {
        let mut d: Vec<f64> = pos
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, b)| {
                let dx = a[0] - b[0];
                let dy = a[1] - b[1];
                let dz = a[2] - b[2];
                (dx * dx + dy * dy + dz * dz).sqrt()
            })
            .collect();
        d.sort_by(f64::total_cmp);
        out.extend_from_slice(&d[..k]);
    }
    out
}

// ------------------------------------------------------------------------ ap

fn iou_set(a: &[u32], b: &[u32]) -> (usize, usize) {
    let sa: HashSet<u32> = a.iter().copied().collect();
    let sb: HashSet<u32> = b.iter().copied().collect();
    (sa.intersection(&sb).count(), sa.union(&sb).count())
}

/// AP by the textbook definition: precision at rank k is interpolated as
/// the maximum precision at any rank j >= k, and AP sums that over the ranks
/// of true positives, each worth 1 / n_gt of recall.
fn ap_definition(tp: &[bool], n_gt: usize) -> f64 {
    let prec: Vec<f64> = (0..tp.len()).map(|k| tp[..=k].iter().filter(|t| **t).count() as f64 / (k + 1) as f64).collect();
    let mut ap = 0.0;
    for k in 0..tp.len() {
        if tp[k] {
            let best = prec[k..].iter().cloned().fold(0.0, f64::max);
            ap += best / n_gt as f64;
        }
    }
    ap
}

/// AP of one class at `threshold` with ground truth given as index sets.
/// Tries every input order of the predictions; each is ranked by score,
/// then size, then smallest index, and matched greedily to the unmatched GT
/// of highest IoU (first on ties). Panics if two orders disagree.
pub fn exhaustive_ap(preds: &[(Vec<u32>, f64)], gts: &[Vec<u32>], threshold_bp: u32) -> f64 {
    let mut perm: Vec<usize> = (0..preds.len()).collect();
    let mut result: Option<f64> = None;
    permute(&mut perm, 0, &mut |order| {
        let mut ranked: Vec<&(Vec<u32>, f64)> = order.iter().map(|&i| &preds[i]).collect();
        ranked.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap()
                .then(b.0.len().cmp(&a.0.len()))
                .then(a.0.iter().min().cmp(&b.0.iter().min()))
        });
        let mut used = vec![false; gts.len()];
        let mut tp = Vec::new();
        for p in ranked {
            let mut best: Option<(usize, f64)> = None;
            for (g, gt) in gts.iter().enumerate() {
                if used[g] {
                    continue;
                }
                let (i, u) = iou_set(&p.0, gt);
                if i == 0 || (i as u64) * 10_000 < threshold_bp as u64 * u as u64 {
                    continue;
                }
                let iou = i as f64 / u as f64;
                if best.is_none_or(|(_, b)| iou > b) {
                    best = Some((g, iou));
                }
            }
            if let Some((g, _)) = best {
                used[g] = true;
            }
            tp.push(best.is_some());
        }
        let ap = ap_definition(&tp, gts.len());
        match result {
            None => result = Some(ap),
            Some(r) => assert!((r - ap).abs() < 1e-12, "order dependence: {r} vs {ap}"),
        }
    });
    result.unwrap_or(0.0)
}

fn permute(v: &mut Vec<usize>, k: usize, f: &mut dyn FnMut(&[usize])) {
    if k == v.len() {
        f(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, f);
        v.swap(k, i);
    }
}

// ------------------------------------------------------------------- sectors

pub fn sector(i: u8) -> Sector {
    Sector::new(i).unwrap()
}

/// Circular sector distance, counted by walking.
fn walk_distance(a: u8, b: u8) -> u8 {
    let mut best = 12;
    for step in 0..12u8 {
        if (a + step) % 12 == b || (b + step) % 12 == a {
            best = best.min(step);
        }
    }
    best
}

/// Every maximal circular run of `set` as its member list (starting at the
/// clockwise end), found by testing each sector's neighbors.
fn brute_runs(set: &[bool; 12]) -> Vec<Vec<u8>> {
    if set.iter().all(|&b| b) {
        return vec![(0..12).collect()];
    }
    let mut runs = Vec::new();
    for s in 0..12u8 {
        let prev = (s + 11) % 12;
        if set[s as usize] && !set[prev as usize] {
            let mut run = vec![s];
            let mut t = (s + 1) % 12;
            while set[t as usize] {
                run.push(t);
                t = (t + 1) % 12;
            }
            runs.push(run);
        }
    }
    runs
}

fn center_of(run: &[u8]) -> u8 {
    if run.len() == 12 {
        return 0;
    }
    let cands: Vec<u8> = if run.len() % 2 == 1 { vec![run[run.len() / 2]] } else { vec![run[run.len() / 2 - 1], run[run.len() / 2]] };
    *cands.iter().min_by_key(|&&c| (walk_distance(c, 0), c)).unwrap()
}

fn ranked_centers(set: &[bool; 12]) -> Vec<u8> {
    let mut v: Vec<(usize, u8)> = brute_runs(set).iter().map(|r| (r.len(), center_of(r))).collect();
    v.sort_by_key(|&(len, c)| (std::cmp::Reverse(len), walk_distance(c, 0), c));
    v.into_iter().map(|(_, c)| c).collect()
}

/// Avoidance answer computed sector by sector.
pub fn brute_avoid(scene: &TopViewScene, range: f64) -> (Vec<u8>, Vec<u8>, Vec<u8>, Vec<usize>) {
    let mut free = [false; 12];
    for s in 0..12u8 {
        let scanned = scene.scanned_sectors.contains(sector(s));
        let blocked = scene.instances.iter().any(|i| i.range_m <= range && i.occupied_sectors.contains(sector(s)));
        free[s as usize] = scanned && !blocked;
    }
    let free_list: Vec<u8> = (0..12).filter(|&s| free[s as usize]).collect();
    let mut obstacles: Vec<&TopViewInstance> = scene.instances.iter().filter(|i| i.range_m <= range).collect();
    obstacles.sort_by(|a, b| a.range_m.partial_cmp(&b.range_m).unwrap().then(a.sector.cmp(&b.sector)).then(a.instance.cmp(&b.instance)));
    let obstacle_ids = obstacles.iter().map(|i| i.instance).collect();
    if !free_list.is_empty() {
        (free_list, ranked_centers(&free), Vec::new(), obstacle_ids)
    } else {
        let mut unscanned = [false; 12];
        for s in 0..12u8 {
            unscanned[s as usize] = !scene.scanned_sectors.contains(sector(s));
        }
        let mut fb = ranked_centers(&unscanned);
        fb.truncate(2);
        (free_list, fb.clone(), fb, obstacle_ids)
    }
}

pub fn avoid_matches(a: &AvoidanceAnswer, scene: &TopViewScene, range: f64) -> bool {
    let (free, suggested, fallback, obstacles) = brute_avoid(scene, range);
    Vec::<u8>::from(a.free_sectors) == free
        && a.suggested.iter().map(|s| s.index()).collect::<Vec<_>>() == suggested
        && a.fallback_unscanned.iter().map(|s| s.index()).collect::<Vec<_>>() == fallback
        && a.obstacles_in_range.iter().map(|o| o.instance).collect::<Vec<_>>() == obstacles
}

/// `(target instance, alert instances)` by scanning every instance.
pub fn brute_find(scene: &TopViewScene, class: &str, halfwidth: u8) -> Option<(usize, Vec<usize>)> {
    let mut target: Option<&TopViewInstance> = None;
    for i in scene.instances.iter().filter(|i| i.class == class) {
        target = match target {
            None => Some(i),
            Some(t) => {
                let better = i.range_m < t.range_m
                    || (i.range_m == t.range_m
                        && (i.score > t.score
                            || (i.score == t.score && (i.sector < t.sector || (i.sector == t.sector && i.instance < t.instance)))));
                Some(if better { i } else { t })
            }
        };
    }
    let t = target?;
    let mut alerts: Vec<&TopViewInstance> = scene
        .instances
        .iter()
        .filter(|i| i.instance != t.instance && i.range_m < t.range_m)
        .filter(|i| walk_distance(i.sector.index(), t.sector.index()) <= halfwidth)
        .collect();
    alerts.sort_by(|a, b| a.range_m.partial_cmp(&b.range_m).unwrap().then(a.sector.cmp(&b.sector)).then(a.instance.cmp(&b.instance)));
    Some((t.instance, alerts.iter().map(|i| i.instance).collect()))
}

pub fn find_matches(a: &FindAnswer, scene: &TopViewScene, class: &str, halfwidth: u8) -> bool {
    match (brute_find(scene, class, halfwidth), &a.target) {
        (None, None) => !a.found && a.alerts.is_empty(),
        (Some((t, alerts)), Some(target)) => {
            a.found && target.instance == t && a.alerts.iter().map(|x| x.instance).collect::<Vec<_>>() == alerts
        }
        _ => false,
    }
}

pub const SCENE_CLASSES: [&str; 5] = ["chair", "desk", "table", "sofa", "ottoman"];

/// Random top view: contiguous occupied arcs, ranges on a 0.1 m lattice so
/// ties happen, random scan coverage.
pub fn random_topview(seed: u64) -> TopViewScene {
    let mut r = rng(seed);
    let n = r.random_range(0..9);
    let fp = FeaturePoint { index: 0, world: [0.0, 0.0], ego: EgoPoint { x_fwd: 1.0, y_left: 0.0 } };
    let instances = (0..n)
        .map(|k| {
            let s = r.random_range(0..12u8);
            let left = r.random_range(0..4);
            let right = r.random_range(0..4);
            let occupied: SectorSet = (-right..=left).map(|d| sector(s).offset(d)).collect();
            TopViewInstance {
                instance: k,
                class: SCENE_CLASSES[r.random_range(0..SCENE_CLASSES.len())].to_string(),
                score: [0.5, 0.8, 1.0][r.random_range(0..3)],
                range_m: r.random_range(1..50) as f64 / 10.0,
                sector: sector(s),
                occupied_sectors: occupied,
                feature_points: FeaturePoints { closest: fp, xmin: fp, xmax: fp, ymin: fp, ymax: fp },
            }
        })
        .collect();
    let scanned: SectorSet = (0..12u8).filter(|_| r.random_bool(0.8)).map(sector).collect();
    TopViewScene { pose: Pose2D::origin(), instances, scanned_sectors: scanned }
}

// ------------------------------------------------------------------- topview

/// Per-instance feature points by a separate scan of each instance's
/// members: argmin of planar distance and arg-extrema of world x and y,
/// lowest index on ties, points above `headroom` skipped.
pub fn brute_features(pts: &[[f64; 3]], preds: &[InstancePrediction], pose: &Pose2D, headroom: f64) -> Vec<Option<[u32; 5]>> {
    preds
        .iter()
        .map(|p| {
            let members: BTreeSet<u32> = p.point_indices.iter().copied().filter(|&i| pts[i as usize][2] <= headroom).collect();
            if members.is_empty() {
                return None;
            }
            let pick = |key: &dyn Fn(u32) -> f64| -> u32 {
                let mut best = *members.iter().next().unwrap();
                for &i in &members {
                    if key(i) < key(best) {
                        best = i;
                    }
                }
                best
            };
            let range = |i: u32| (pts[i as usize][0] - pose.x).hypot(pts[i as usize][1] - pose.y);
            Some([
                pick(&range),
                pick(&|i| pts[i as usize][0]),
                pick(&|i| -pts[i as usize][0]),
                pick(&|i| pts[i as usize][1]),
                pick(&|i| -pts[i as usize][1]),
            ])
        })
        .collect()
}

/// Random scene for top-view checks: points on a coarse lattice (ties),
/// some above the headroom, overlapping predictions.
pub fn random_topview_input(seed: u64) -> (Vec<[f64; 3]>, Vec<InstancePrediction>, Pose2D) {
    let mut r = rng(seed);
    let n = r.random_range(1..400);
    let pts: Vec<[f64; 3]> = (0..n)
        .map(|_| [r.random_range(-20..20) as f64 * 0.1, r.random_range(-20..20) as f64 * 0.1, r.random_range(0..30) as f64 * 0.1])
        .collect();
    let preds = (0..r.random_range(0..6))
        .map(|_| {
            let mut idx: Vec<u32> = (0..n as u32).filter(|_| r.random_bool(0.2)).collect();
            if idx.is_empty() {
                idx.push(r.random_range(0..n as u32));
            }
            idx.sort_unstable();
            InstancePrediction { point_indices: idx, class_id: 4, score: 1.0 }
        })
        .collect();
    let pose = Pose2D::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(-4.0..4.0)).unwrap();
    (pts, preds, pose)
}
