use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ClassInfo, ClassTable, CloudError, GroundTruthInstances, LabeledCloud, Point3, NO_INSTANCE};

/// Room shell: floor plus four walls spanning `[0, size]` on each axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomSpec {
    pub size: [f64; 3],
    /// Background points per square meter of floor and wall.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surface_density: Option<f64>,
    /// Exact number of background points; overrides `surface_density`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surface_points: Option<usize>,
}

/// One object instance: an axis-aligned box filled uniformly with points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub class: String,
    pub min: [f64; 3],
    pub max: [f64; 3],
    /// Points per cubic meter.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<f64>,
    /// Exact point count; overrides `density`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub room: RoomSpec,
    #[serde(default)]
    pub objects: Vec<ObjectSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classes: Option<Vec<ClassInfo>>,
    #[serde(default)]
    pub seed: u64,
    /// Same-class boxes closer than this are rejected as inseparable.
    #[serde(default = "default_min_gap")]
    pub min_gap: f64,
}

fn default_min_gap() -> f64 {
    0.03
}

const PALETTE: [[u8; 3]; 10] = [
    [174, 199, 232],
    [152, 223, 138],
    [31, 119, 180],
    [255, 187, 120],
    [188, 189, 34],
    [140, 86, 75],
    [255, 152, 150],
    [214, 39, 40],
    [197, 176, 213],
    [148, 103, 189],
];

fn box_gap(a: &ObjectSpec, b: &ObjectSpec) -> f64 {
    (0..3)
        .map(|k| {
            let d = (a.min[k] - b.max[k]).max(b.min[k] - a.max[k]).max(0.0);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

fn invalid(msg: impl Into<String>) -> CloudError {
    CloudError::Invalid(msg.into())
}

/// Samples a labeled scene with exact ground-truth offsets.
///
/// Object points get `offset = centroid(instance) - point`, background
/// (floor, wall) points get zero offsets and instance id `-1`.
pub fn synth_scene(spec: &SceneSpec) -> Result<(LabeledCloud, GroundTruthInstances), CloudError> {
    let table = match &spec.classes {
        Some(c) => ClassTable::new(c.clone())?,
        None => ClassTable::scannet(),
    };
    let size = spec.room.size;
    if size.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
        return Err(invalid("room size must be positive"));
    }

    let mut object_classes = Vec::with_capacity(spec.objects.len());
    for (i, o) in spec.objects.iter().enumerate() {
        let class = table
            .id_of(&o.class)
            .ok_or_else(|| invalid(format!("object {i}: unknown class {:?}", o.class)))?;
        if table.is_background(class) {
            return Err(invalid(format!("object {i}: class {:?} is a background class", o.class)));
        }
        for k in 0..3 {
            if !(o.min[k].is_finite() && o.max[k].is_finite()) || o.min[k] > o.max[k] {
                return Err(invalid(format!("object {i}: box min must not exceed max")));
            }
            if o.min[k] < 0.0 || o.max[k] > size[k] {
                return Err(invalid(format!("object {i}: box lies outside the room")));
            }
        }
        match (o.points, o.density) {
            (Some(0), _) => return Err(invalid(format!("object {i}: zero points"))),
            (Some(_), _) => {}
            (None, Some(d)) if d > 0.0 && d.is_finite() => {}
            (None, _) => return Err(invalid(format!("object {i}: density must be positive"))),
        }
        object_classes.push(class);
    }
    for i in 0..spec.objects.len() {
        for j in 0..i {
            if object_classes[i] == object_classes[j] && box_gap(&spec.objects[i], &spec.objects[j]) <= spec.min_gap {
                return Err(CloudError::InseparableScene(format!(
                    "objects {j} and {i} ({}) are within {} m of each other",
                    spec.objects[i].class, spec.min_gap
                )));
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut points: Vec<Point3> = Vec::new();
    let mut labels: Vec<u16> = Vec::new();
    let mut ids: Vec<i32> = Vec::new();

    // floor, then walls at x=0, x=sx, y=0, y=sy
    let [sx, sy, sz] = size;
    let surfaces: [(f64, &str); 5] = [
        (sx * sy, "floor"),
        (sy * sz, "wall"),
        (sy * sz, "wall"),
        (sx * sz, "wall"),
        (sx * sz, "wall"),
    ];
    let total_area: f64 = surfaces.iter().map(|s| s.0).sum();
    let surface_counts: Vec<usize> = match (spec.room.surface_points, spec.room.surface_density) {
        (Some(total), _) => {
            // largest remainder split proportional to area
            let exact: Vec<f64> = surfaces.iter().map(|s| total as f64 * s.0 / total_area).collect();
            let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
            let mut order: Vec<usize> = (0..surfaces.len()).collect();
            order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
            let missing = total - counts.iter().sum::<usize>();
            for &k in order.iter().take(missing) {
                counts[k] += 1;
            }
            counts
        }
        (None, Some(d)) if d >= 0.0 && d.is_finite() => surfaces.iter().map(|s| (s.0 * d).round() as usize).collect(),
        (None, None) => vec![0; surfaces.len()],
        (None, Some(_)) => return Err(invalid("surface density must be non-negative")),
    };
    for (k, (&count, &(_, class))) in surface_counts.iter().zip(surfaces.iter()).enumerate() {
        if count == 0 {
            continue;
        }
        let label = table
            .id_of(class)
            .ok_or_else(|| invalid(format!("class table lacks background class {class:?}")))?;
        for _ in 0..count {
            let (u, v) = (rng.random::<f64>(), rng.random::<f64>());
            let p = match k {
                0 => [u * sx, v * sy, 0.0],
                1 => [0.0, u * sy, v * sz],
                2 => [sx, u * sy, v * sz],
                3 => [u * sx, 0.0, v * sz],
                _ => [u * sx, sy, v * sz],
            };
            points.push(Point3::new(p[0] as f32, p[1] as f32, p[2] as f32));
            labels.push(label);
            ids.push(NO_INSTANCE);
        }
    }
    let background = points.len();

    let mut spans = Vec::with_capacity(spec.objects.len());
    for (i, o) in spec.objects.iter().enumerate() {
        let volume: f64 = (0..3).map(|k| o.max[k] - o.min[k]).product();
        let count = o.points.unwrap_or_else(|| ((volume * o.density.unwrap()).round() as usize).max(1));
        let start = points.len();
        for _ in 0..count {
            let mut p = [0.0f32; 3];
            for k in 0..3 {
                p[k] = (o.min[k] + rng.random::<f64>() * (o.max[k] - o.min[k])) as f32;
            }
            points.push(Point3::new(p[0], p[1], p[2]));
            labels.push(object_classes[i]);
            ids.push(i as i32);
        }
        spans.push(start..points.len());
    }
    if points.is_empty() {
        return Err(invalid("scene produced no points"));
    }

    let mut offsets = vec![[0.0f32; 3]; points.len()];
    for span in &spans {
        let n = span.len() as f64;
        let mut c = [0.0f64; 3];
        for p in &points[span.clone()] {
            let p = p.to_f64();
            for k in 0..3 {
                c[k] += p[k];
            }
        }
        let c = c.map(|v| v / n);
        for i in span.clone() {
            let p = points[i].to_f64();
            offsets[i] = [(c[0] - p[0]) as f32, (c[1] - p[1]) as f32, (c[2] - p[2]) as f32];
        }
    }

    let colors = labels.iter().map(|&l| PALETTE[l as usize % PALETTE.len()]).collect();
    debug_assert!(ids[..background].iter().all(|&i| i == NO_INSTANCE));
    let cloud = LabeledCloud::new(points, table)?
        .with_colors(colors)?
        .with_labels(labels)?
        .with_offsets(offsets)?
        .with_instance_ids(ids)?;
    let gt = GroundTruthInstances::from_cloud(&cloud)?;
    Ok((cloud, gt))
}

/// Knobs for [`random_scene_spec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomSceneParams {
    pub min_instances: usize,
    pub max_instances: usize,
    pub total_points: usize,
    /// Share of points on floor and walls.
    pub background_fraction: f64,
    /// Minimum distance between any two object boxes.
    pub min_gap: f64,
    /// Upper bound on object point density (points per cubic meter).
    pub max_object_density: f64,
    pub classes: Vec<String>,
}

impl Default for RandomSceneParams {
    fn default() -> Self {
        RandomSceneParams {
            min_instances: 3,
            max_instances: 8,
            total_points: 50_000,
            background_fraction: 0.6,
            min_gap: 0.1,
            // mean neighbor count within 0.03 m stays near 0.9, so no
            // 50-point chains form in the original coordinates
            max_object_density: 8_000.0,
            classes: ["chair", "table", "desk", "sofa", "bookshelf", "cabinet", "bed", "door"]
                .map(String::from)
                .to_vec(),
        }
    }
}

/// Draws a random furnished room whose point total is exactly
/// `params.total_points`, with every pair of object boxes more than
/// `params.min_gap` apart.
pub fn random_scene_spec(params: &RandomSceneParams, seed: u64) -> SceneSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5ce7e);
    let lo = params.min_instances.max(1);
    let n = rng.random_range(lo..=params.max_instances.max(lo));
    let object_total = ((params.total_points as f64) * (1.0 - params.background_fraction)).round() as usize;
    let object_total = object_total.clamp(n, params.total_points);
    let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
    let wsum: f64 = weights.iter().sum();
    let mut counts: Vec<usize> = weights.iter().map(|w| ((w / wsum) * object_total as f64).floor() as usize).collect();
    let rem = object_total - counts.iter().sum::<usize>();
    for c in counts.iter_mut().take(rem) {
        *c += 1;
    }
    let counts: Vec<usize> = counts.into_iter().map(|c| c.max(1)).collect();

    let mut dims = Vec::with_capacity(n);
    for &c in &counts {
        let density = params.max_object_density * rng.random_range(0.5..1.0);
        let volume = c as f64 / density;
        let h = rng.random_range(0.4..1.2f64).min(2.0);
        let area = volume / h;
        let aspect = rng.random_range(0.5..2.0f64);
        let w = (area * aspect).sqrt();
        let d = area / w;
        dims.push([w, d, h]);
    }
    let footprint: f64 = dims.iter().map(|d| (d[0] + params.min_gap) * (d[1] + params.min_gap)).sum();
    let mut side = (4.0 * footprint).sqrt().max(4.0) + 1.0;
    let max_w = dims.iter().map(|d| d[0].max(d[1])).fold(0.0, f64::max);
    side = side.max(max_w + 1.0);

    let classes = &params.classes;
    let objects = 'place: loop {
        let mut placed: Vec<ObjectSpec> = Vec::with_capacity(n);
        for (i, d) in dims.iter().enumerate() {
            let mut ok = false;
            for _ in 0..2000 {
                let x = rng.random_range(0.2..(side - 0.2 - d[0]).max(0.21));
                let y = rng.random_range(0.2..(side - 0.2 - d[1]).max(0.21));
                let cand = ObjectSpec {
                    class: classes[rng.random_range(0..classes.len())].clone(),
                    min: [x, y, 0.0],
                    max: [x + d[0], y + d[1], d[2]],
                    density: None,
                    points: Some(counts[i]),
                };
                if cand.max[0] > side || cand.max[1] > side {
                    continue;
                }
                if placed.iter().all(|o| box_gap(o, &cand) > params.min_gap) {
                    placed.push(cand);
                    ok = true;
                    break;
                }
            }
            if !ok {
                side *= 1.25;
                continue 'place;
            }
        }
        break placed;
    };

    SceneSpec {
        room: RoomSpec {
            size: [side, side, 3.0],
            surface_density: None,
            surface_points: Some(params.total_points - counts.iter().sum::<usize>().min(params.total_points)),
        },
        objects,
        classes: None,
        seed,
        min_gap: params.min_gap.min(0.03),
    }
}
