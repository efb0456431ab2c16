//! Library-versus-oracle sweeps. Each returns the number of cases compared
//! or a description of the first mismatch.

use std::collections::BTreeMap;

use hida::assist::{avoid, find_object, AvoidanceQuery, FindQuery};
use hida::cloudio::{ClassTable, GroundTruthInstances};
use hida::evalmetrics::{match_and_ap, AP25_BP, MAP_THRESHOLDS_BP};
use hida::grouping::{cluster_branch, ClusterConfig, Coordinates, InstancePrediction};
use hida::preprocess::knn_distances;
use hida::topview::{build_topview, TopViewConfig};
use rand::Rng;

use super::*;

macro_rules! check {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

/// Both clustering branches on `clouds` random clouds of up to 2000 points.
pub fn clustering(clouds: u64) -> Result<usize, String> {
    let mut cases = 0;
    for seed in 0..clouds {
        let cloud = random_cluster_cloud(seed, 2000);
        let mut r = rng(seed + 10_000);
        let cfg = ClusterConfig {
            radius: [0.03, 0.03, 0.05, 0.1][r.random_range(0..4)],
            min_points: r.random_range(1..20),
            voxel_size: [0.02, 0.01, 0.2][r.random_range(0..3)],
            ..ClusterConfig::default()
        };
        let labels = cloud.labels().unwrap();
        for coords in [Coordinates::Original, Coordinates::Shifted] {
            let pos: Vec<[f64; 3]> = (0..cloud.len())
                .map(|i| match coords {
                    Coordinates::Original => cloud.points()[i].to_f64(),
                    Coordinates::Shifted => cloud.shifted(i),
                })
                .collect();
            let want = brute_components(&pos, labels, cloud.class_table(), cfg.radius, cfg.min_points);
            let got: Vec<(u16, Vec<u32>)> = cluster_branch(&cloud, coords, &cfg)
                .map_err(|e| e.to_string())?
                .into_iter()
                .map(|p| (p.class_id, p.point_indices))
                .collect();
            check!(got == want, "clustering seed {seed} {coords:?}: {} vs {} components", got.len(), want.len());
            cases += 1;
        }
    }
    Ok(cases)
}

pub fn knn(clouds: u64) -> Result<usize, String> {
    let mut cases = 0;
    for seed in 0..clouds {
        let mut r = rng(seed);
        let n = r.random_range(18..800);
        let spread = [0.05, 1.0, 20.0][r.random_range(0..3)];
        let pts: Vec<[f64; 3]> = (0..n)
            .map(|_| {
                if r.random_bool(0.3) {
                    // lattice points give exact distance ties
                    [r.random_range(0..5) as f64 * 0.1, r.random_range(0..5) as f64 * 0.1, 0.0]
                } else {
                    [r.random_range(0.0..spread), r.random_range(0.0..spread), r.random_range(0.0..spread * 0.2)]
                }
            })
            .collect();
        for k in [1, 4, 16] {
            check!(knn_distances(&pts, k) == brute_knn(&pts, k), "knn seed {seed} n {n} k {k}");
            cases += 1;
        }
    }
    Ok(cases)
}

/// Up to 6 predictions against up to 6 ground-truth instances, at AP25 and
/// every mAP threshold.
pub fn ap(sets: u64) -> Result<usize, String> {
    let thresholds: Vec<u32> = std::iter::once(AP25_BP).chain(MAP_THRESHOLDS_BP).collect();
    let mut cases = 0;
    for seed in 0..sets {
        let mut r = rng(seed);
        let n = r.random_range(20..60);
        let n_gt = r.random_range(1..=6);
        let ids: Vec<i32> = (0..n).map(|_| r.random_range(-1..n_gt)).collect();
        let classes: BTreeMap<i32, u16> = (0..n_gt).filter(|id| ids.contains(id)).map(|id| (id, 4)).collect();
        if classes.is_empty() {
            continue;
        }
        let gt = GroundTruthInstances::new(ids.clone(), classes.clone()).unwrap();
        let gt_sets: Vec<Vec<u32>> = classes.keys().map(|&id| (0..n as u32).filter(|&i| ids[i as usize] == id).collect()).collect();

        let mut used_first = Vec::new();
        let mut preds = Vec::new();
        for _ in 0..r.random_range(0..=6) {
            let mut idx: Vec<u32> = if r.random_bool(0.6) {
                // a ground-truth instance with some points swapped
                let g = &gt_sets[r.random_range(0..gt_sets.len())];
                let mut v: Vec<u32> = g.iter().copied().filter(|_| r.random_bool(0.8)).collect();
                v.extend((0..n as u32).filter(|_| r.random_bool(0.05)));
                v
            } else {
                (0..n as u32).filter(|_| r.random_bool(0.3)).collect()
            };
            idx.sort_unstable();
            idx.dedup();
            // distinct smallest members keep the ranking a strict order
            if idx.is_empty() || used_first.contains(&idx[0]) {
                continue;
            }
            used_first.push(idx[0]);
            preds.push(InstancePrediction { point_indices: idx, class_id: 4, score: [0.5, 0.7, 0.9][r.random_range(0..3)] });
        }
        let oracle_preds: Vec<(Vec<u32>, f64)> = preds.iter().map(|p| (p.point_indices.clone(), p.score)).collect();
        for &bp in &thresholds {
            let got = match_and_ap(&preds, &gt, bp as f64 / 10_000.0, 4).map_err(|e| e.to_string())?.unwrap();
            let want = exhaustive_ap(&oracle_preds, &gt_sets, bp);
            check!((got - want).abs() < 1e-12, "ap seed {seed} bp {bp}: {got} vs {want}");
            cases += 1;
        }
        check!(match_and_ap(&preds, &gt, 0.5, 7) == Ok(None), "ap seed {seed}: class without ground truth");
    }
    Ok(cases)
}

pub fn avoid_find(scenes: u64) -> Result<usize, String> {
    let mut cases = 0;
    for seed in 0..scenes {
        let scene = random_topview(seed);
        let mut r = rng(seed + 77);
        let range = r.random_range(1..60) as f64 / 10.0;
        let a = avoid(&scene, &AvoidanceQuery::new(range).unwrap());
        check!(avoid_matches(&a, &scene, range), "avoid seed {seed} range {range}");
        cases += 1;
        for class in SCENE_CLASSES.iter().chain(["bathtub"].iter()) {
            let halfwidth = r.random_range(0..4);
            let f = find_object(&scene, &FindQuery { class: class.to_string(), corridor_halfwidth: halfwidth });
            check!(find_matches(&f, &scene, class, halfwidth), "find seed {seed} {class}");
            cases += 1;
        }
    }
    Ok(cases)
}

pub fn topview_features(scenes: u64) -> Result<usize, String> {
    let table = ClassTable::scannet();
    let mut cases = 0;
    for seed in 0..scenes {
        let (pts, preds, pose) = random_topview_input(seed);
        let headroom = [2.2, 1.0, 10.0][seed as usize % 3];
        let scene = build_topview(pts.as_slice(), &preds, &table, &pose, &TopViewConfig { headroom }).map_err(|e| e.to_string())?;
        let want = brute_features(&pts, &preds, &pose, headroom);
        let kept: Vec<usize> = (0..preds.len()).filter(|&k| want[k].is_some()).collect();
        check!(scene.instances.iter().map(|i| i.instance).collect::<Vec<_>>() == kept, "topview seed {seed}: kept instances");
        for inst in &scene.instances {
            let got: Vec<u32> = inst.feature_points.all().iter().map(|f| f.index).collect();
            check!(got == want[inst.instance].unwrap().to_vec(), "topview seed {seed} instance {}", inst.instance);
            let c = pts[got[0] as usize];
            check!(inst.range_m == (c[0] - pose.x).hypot(c[1] - pose.y), "topview seed {seed}: range");
            cases += 1;
        }
    }
    Ok(cases)
}
