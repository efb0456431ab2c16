//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use hida::assist::{find_object, FindQuery};
use hida::cloudio::{random_scene_spec, synth_scene, ObjectSpec, OracleConfig, RandomSceneParams, RoomSpec, SceneSpec};
use hida::evalmetrics::{evaluate, map_thresholds, MAP_THRESHOLDS_BP};
use hida::grouping::{ClusterConfig, DEFAULT_MIN_POINTS, DEFAULT_RADIUS};
use hida::pipeline::{bench, run_pipeline, BenchReport, PipelineConfig, BENCH_SCENE_POINTS};
use hida::preprocess::{PreprocessConfig, DEFAULT_MAX_POINTS, DEFAULT_VOXEL_SIZE};
use hida::topview::{EgoPoint, FeaturePoint, FeaturePoints, Pose2D, Sector, SectorSet, TopViewInstance, TopViewScene, SECTOR_COUNT};

/// Per-scene runtime ceiling for a 200k-point scene, seconds.
const MAX_SECONDS_200K: f64 = 5.0;
/// Floor on mean mAP at label_flip_rate 0.05.
const MIN_MAP_AT_FLIP_005: f64 = 0.8;
/// Reference PRE + CL + DET average to beat, seconds.
const STAGE_SUM_BAR: f64 = 2.483 + 0.289 + 3.729;
const FLIP_RATES: [f64; 4] = [0.0, 0.05, 0.1, 0.2];

type Outcome = Result<String, String>;

fn oracle_exactness() -> Outcome {
    let cfg = PipelineConfig::default();
    for seed in 0..25u64 {
        let (cloud, gt) = synth_scene(&random_scene_spec(&RandomSceneParams::default(), 1000 + seed)).map_err(|e| e.to_string())?;
        let out = run_pipeline(&cloud, &cfg, &Pose2D::origin()).map_err(|e| e.to_string())?;
        let gt_pre = out.gt.as_ref().ok_or("no ground truth after preprocessing")?;
        let r = evaluate(&out.predictions, gt_pre, cloud.class_table()).map_err(|e| e.to_string())?;
        if (r.map, r.ap50, r.ap25) != (1.0, 1.0, 1.0) {
            return Err(format!("scene seed {}: {} instances, map {} ap50 {} ap25 {}", 1000 + seed, gt.len(), r.map, r.ap50, r.ap25));
        }
    }
    let params = RandomSceneParams { total_points: 200_000, ..RandomSceneParams::default() };
    let (cloud, _) = synth_scene(&random_scene_spec(&params, 77)).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let out = run_pipeline(&cloud, &cfg, &Pose2D::origin()).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let r = evaluate(&out.predictions, out.gt.as_ref().unwrap(), cloud.class_table()).map_err(|e| e.to_string())?;
    if secs >= MAX_SECONDS_200K || r.map != 1.0 {
        return Err(format!("200k scene: {secs:.3} s, map {}", r.map));
    }
    Ok(format!("25 scenes at mAP = AP50 = AP25 = 1; 200k-point scene {secs:.2} s"))
}

fn noise_monotonicity() -> Outcome {
    let params = RandomSceneParams { total_points: 40_000, ..RandomSceneParams::default() };
    let scenes: Vec<_> = (0..10u64).map(|s| synth_scene(&random_scene_spec(&params, 2000 + s)).unwrap().0).collect();
    let mut means = Vec::new();
    for &rate in &FLIP_RATES {
        let mut sum = 0.0;
        for (k, cloud) in scenes.iter().enumerate() {
            let cfg = PipelineConfig { oracle: OracleConfig::new(rate, 0.0, k as u64).unwrap(), ..PipelineConfig::default() };
            let out = run_pipeline(cloud, &cfg, &Pose2D::origin()).map_err(|e| e.to_string())?;
            sum += evaluate(&out.predictions, out.gt.as_ref().unwrap(), cloud.class_table()).map_err(|e| e.to_string())?.map;
        }
        means.push(sum / scenes.len() as f64);
    }
    let shown: Vec<String> = FLIP_RATES.iter().zip(&means).map(|(r, m)| format!("{r}: {m:.4}")).collect();
    let monotone = means.windows(2).all(|w| w[1] <= w[0]);
    if monotone && means[1] >= MIN_MAP_AT_FLIP_005 {
        Ok(format!("mean mAP {}", shown.join(", ")))
    } else {
        Err(format!("mean mAP {}", shown.join(", ")))
    }
}

fn brute_force_parity() -> Outcome {
    let c = common::parity::clustering(200)?;
    let k = common::parity::knn(60)?;
    let a = common::parity::ap(300)?;
    let f = common::parity::avoid_find(500)?;
    let t = common::parity::topview_features(200)?;
    Ok(format!("0 mismatches: clustering {c}, knn {k}, ap {a}, avoid/find {f}, topview {t} cases"))
}

fn constants() -> Outcome {
    let pre = PreprocessConfig::default();
    let cl = ClusterConfig::default();
    let want: Vec<f64> = (0..10).map(|k| 0.5 + 0.05 * k as f64).collect();
    let checks = [
        ("point cap", pre.max_points == 200_000 && DEFAULT_MAX_POINTS == 200_000),
        ("voxel", pre.voxel_size == 0.02 && DEFAULT_VOXEL_SIZE == 0.02 && cl.voxel_size == 0.02),
        ("radius", cl.radius == 0.03 && DEFAULT_RADIUS == 0.03),
        ("min cluster", cl.min_points == 50 && DEFAULT_MIN_POINTS == 50),
        ("thresholds", MAP_THRESHOLDS_BP.len() == 10 && map_thresholds().iter().zip(&want).all(|(a, b)| (a - b).abs() < 1e-12)),
        ("sectors", SECTOR_COUNT == 12 && Sector::all().count() == 12),
        ("bench sizes", BENCH_SCENE_POINTS == [819_073, 269_273, 169_791, 258_496]),
    ];
    match checks.iter().find(|c| !c.1) {
        None => Ok("cap 200000, voxel 0.02, radius 0.03, min 50, thresholds 0.50..0.95, 12 sectors".into()),
        Some((name, _)) => Err(format!("{name} default differs")),
    }
}

const FOUND_DESK: &str = "Found a desk, distance 2.2 meters, direction in directly forward";
const ATTENTION_CHAIR: &str = "Attention, a chair in this direction, distance 1.3 meters";

fn narration() -> Outcome {
    // the scene as a top view
    let fp = FeaturePoint { index: 0, world: [0.0, 0.0], ego: EgoPoint { x_fwd: 1.0, y_left: 0.0 } };
    let inst = |k: usize, class: &str, range_m: f64| TopViewInstance {
        instance: k,
        class: class.into(),
        score: 1.0,
        range_m,
        sector: Sector::new(0).unwrap(),
        occupied_sectors: SectorSet::try_from(vec![0u8]).unwrap(),
        feature_points: FeaturePoints { closest: fp, xmin: fp, xmax: fp, ymin: fp, ymax: fp },
    };
    let scene = TopViewScene {
        pose: Pose2D::origin(),
        instances: vec![inst(0, "desk", 2.2), inst(1, "chair", 1.3)],
        scanned_sectors: SectorSet::full(),
    };
    let direct = find_object(&scene, &FindQuery::new("desk")).narration;
    if direct != [FOUND_DESK, ATTENTION_CHAIR] {
        return Err(format!("constructed top view: {direct:?}"));
    }

    // the same arrangement as a point cloud through the whole pipeline: the
    // user at (1, 2) facing +x, a chair face at x = 2.3 and a desk face at x = 3.2
    let obj = |class: &str, min: [f64; 3], max: [f64; 3]| ObjectSpec { class: class.into(), min, max, density: None, points: Some(3000) };
    let spec = SceneSpec {
        room: RoomSpec { size: [5.0, 4.0, 2.5], surface_density: None, surface_points: Some(8000) },
        objects: vec![obj("desk", [3.2, 1.4, 0.0], [4.0, 2.6, 0.75]), obj("chair", [2.3, 1.85, 0.0], [2.6, 2.15, 0.9])],
        classes: None,
        seed: 5,
        min_gap: 0.03,
    };
    let (cloud, _) = synth_scene(&spec).map_err(|e| e.to_string())?;
    let out = run_pipeline(&cloud, &PipelineConfig::default(), &Pose2D::new(1.0, 2.0, 0.0).unwrap()).map_err(|e| e.to_string())?;
    let piped = find_object(&out.topview, &FindQuery::new("desk")).narration;
    if piped != [FOUND_DESK, ATTENTION_CHAIR] {
        return Err(format!("pipeline scene: {piped:?}"));
    }
    Ok("both sentences byte-exact on the constructed top view and the point-cloud scene".into())
}

fn timing_report() -> Outcome {
    let report = bench(4, 0, &PipelineConfig::default()).map_err(|e| e.to_string())?;
    report.validate(4)?;
    let text = report.to_json();
    let back: BenchReport = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    back.validate(4)?;
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    for key in ["total", "pre", "cl", "det"] {
        if !v["averages"]["seconds"][key].is_f64() || !v["rows"][0]["seconds"][key].is_f64() {
            return Err(format!("missing stage {key}"));
        }
    }
    let sizes: Vec<usize> = report.rows.iter().map(|r| r.points_in).collect();
    if sizes != BENCH_SCENE_POINTS {
        return Err(format!("scene sizes {sizes:?}"));
    }
    let s = report.averages.seconds;
    let sum = s.pre + s.cl + s.det;
    let msg = format!("PRE {:.3} + CL {:.3} + DET {:.3} = {sum:.3} s (bar {STAGE_SUM_BAR:.3} s), total {:.3} s", s.pre, s.cl, s.det, s.total);
    if sum < STAGE_SUM_BAR {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn run_cli(args: &[&str]) -> Result<(Vec<u8>, Vec<u8>), String> {
    let o = Command::new(env!("CARGO_BIN_EXE_hida")).args(args).output().map_err(|e| e.to_string())?;
    if !o.status.success() {
        return Err(format!("{args:?}: {}", String::from_utf8_lossy(&o.stderr)));
    }
    Ok((o.stdout, o.stderr))
}

/// Drops the wall-clock fields, which are the only run-to-run variation.
fn mask_seconds(bytes: &[u8]) -> Vec<u8> {
    fn strip(v: &mut serde_json::Value) {
        match v {
            serde_json::Value::Object(m) => {
                for key in ["seconds", "total", "pre", "cl", "det", "cluster", "score_nms"] {
                    if m.get(key).is_some_and(|x| x.is_number()) {
                        m.insert(key.into(), serde_json::Value::Null);
                    }
                }
                m.values_mut().for_each(strip);
            }
            serde_json::Value::Array(a) => a.iter_mut().for_each(strip),
            _ => {}
        }
    }
    match serde_json::from_slice::<serde_json::Value>(bytes) {
        Ok(mut v) => {
            strip(&mut v);
            v.to_string().into_bytes()
        }
        Err(_) => bytes.to_vec(),
    }
}

fn cli_run(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let p = |n: &str| dir.join(n).to_str().unwrap().to_string();
    let steps: Vec<Vec<String>> = vec![
        vec!["synth".into(), "--random".into(), "--points".into(), "40000".into(), "--seed".into(), "9".into(), "--out".into(), p("scene.hlc1")],
        vec!["convert".into(), p("scene.hlc1"), p("scene.ply")],
        vec!["preprocess".into(), p("scene.hlc1"), p("pre.hlc1")],
        vec!["oracle".into(), p("pre.hlc1"), p("pred.hlc1"), "--flip-rate".into(), "0.1".into(), "--offset-sigma".into(), "0.01".into(), "--seed".into(), "3".into()],
        vec!["segment".into(), p("pred.hlc1"), "--out".into(), p("instances.json")],
        vec!["eval".into(), "--pred".into(), p("instances.json"), "--gt".into(), p("pre.hlc1"), "--out".into(), p("eval.json")],
        vec!["topview".into(), "--cloud".into(), p("pred.hlc1"), "--pred".into(), p("instances.json"), "--pose".into(), "2,2,1.0".into(), "--out".into(), p("tv.json")],
        vec!["query".into(), "avoid".into(), "--topview".into(), p("tv.json"), "--range".into(), "2.5".into(), "--out".into(), p("avoid.json")],
        vec!["query".into(), "find".into(), "--topview".into(), p("tv.json"), "--class".into(), "table".into(), "--brief".into(), "--out".into(), p("find.json")],
        vec!["bench".into(), "--scenes".into(), "1".into(), "--seed".into(), "4".into()],
    ];
    let mut outputs = Vec::new();
    for args in &steps {
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        let (out, err) = run_cli(&refs)?;
        outputs.push((format!("{} stdout", args[0]), mask_seconds(&out)));
        outputs.push((format!("{} stderr", args[0]), mask_seconds(&err)));
    }
    for f in ["scene.hlc1", "scene.ply", "pre.hlc1", "pred.hlc1", "instances.json", "eval.json", "tv.json", "avoid.json", "find.json"] {
        outputs.push((f.to_string(), std::fs::read(dir.join(f)).map_err(|e| e.to_string())?));
    }
    Ok(outputs)
}

fn determinism() -> Outcome {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ra = cli_run(a.path())?;
    let rb = cli_run(b.path())?;
    for ((name, x), (_, y)) in ra.iter().zip(&rb) {
        if x != y {
            return Err(format!("{name} differs between runs"));
        }
    }
    Ok(format!("{} outputs byte-identical across two runs (timing fields masked)", ra.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("oracle exactness", oracle_exactness),
        ("noise degradation monotonicity", noise_monotonicity),
        ("brute-force parity", brute_force_parity),
        ("constants end to end", constants),
        ("narration fidelity", narration),
        ("timing report shape", timing_report),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(msg) => println!("PASS  {name}: {msg} [{secs:.1} s]"),
            Err(msg) => {
                failed += 1;
                println!("FAIL  {name}: {msg} [{secs:.1} s]");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
