//! The `hida` command line. Machine outputs are JSON files (or JSON on
//! stdout); narration goes to stdout as plain lines.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

use std::ffi::OsString;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::assist::{avoid, find_object, narrate, Answer, AvoidanceQuery, FindQuery, NarrationStyle};
use crate::cloudio::{
    load_cloud_auto, oracle_predict, random_scene_spec, save_cloud_auto, synth_scene, GroundTruthInstances, OracleConfig,
    RandomSceneParams, SceneSpec,
};
use crate::evalmetrics::evaluate;
use crate::grouping::{instances_from_json, instances_to_json, segment_instances_timed, ClusterConfig, ScoreMode};
use crate::pipeline::{bench, PipelineConfig};
use crate::preprocess::{preprocess, PreprocessConfig};
use crate::topview::{build_topview, Pose2D, TopViewConfig, TopViewScene};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "hida", version, about = "Instance segmentation, top view and navigation queries on labeled point clouds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Convert between .ply and .hlc1 (format from the extension)
    Convert { input: PathBuf, output: PathBuf },
    /// Sample a labeled scene from a JSON spec or at random
    Synth(SynthArgs),
    /// Replace labels and offsets with noisy oracle predictions
    Oracle(OracleArgs),
    /// Downsample to the point cap and remove outliers
    Preprocess(PreprocessArgs),
    /// Cluster, score and suppress into instances.json
    Segment(SegmentArgs),
    /// AP25, AP50 and mAP of predictions against ground truth
    Eval(EvalArgs),
    /// Egocentric top view at a pose
    Topview(TopviewArgs),
    /// Avoidance and object-finding queries on a top view
    Query {
        #[command(subcommand)]
        query: QueryCommand,
    },
    /// HTTP service with the simulator endpoints
    Serve(ServeArgs),
    /// Time the pipeline stages on synthetic scenes
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Scene spec (JSON)
    #[arg(long, required_unless_present = "random")]
    pub spec: Option<PathBuf>,
    /// Draw a random furnished room instead of reading a spec
    #[arg(long, conflicts_with = "spec")]
    pub random: bool,
    /// Point total of a random room
    #[arg(long, default_value_t = 50_000)]
    pub points: usize,
    /// Overrides the scene file's seed
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    pub input: PathBuf,
    pub output: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    pub flip_rate: f64,
    #[arg(long, default_value_t = 0.0)]
    pub offset_sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct PreprocessArgs {
    pub input: PathBuf,
    pub output: PathBuf,
    #[arg(long, default_value_t = crate::preprocess::DEFAULT_MAX_POINTS)]
    pub max_points: usize,
    #[arg(long, default_value_t = crate::preprocess::DEFAULT_OUTLIER_K)]
    pub outlier_k: usize,
    #[arg(long, default_value_t = crate::preprocess::DEFAULT_OUTLIER_SIGMA)]
    pub outlier_sigma: f64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ScoreArg {
    Compactness,
    Size,
}

#[derive(Args, Debug)]
pub struct SegmentArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = crate::grouping::DEFAULT_RADIUS)]
    pub radius: f64,
    #[arg(long, default_value_t = crate::grouping::DEFAULT_MIN_POINTS)]
    pub min_points: usize,
    #[arg(long, default_value_t = crate::grouping::DEFAULT_NMS_IOU)]
    pub nms_iou: f64,
    #[arg(long, value_enum, default_value_t = ScoreArg::Compactness)]
    pub score: ScoreArg,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub pred: PathBuf,
    /// Cloud carrying ground-truth instance ids
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct TopviewArgs {
    #[arg(long)]
    pub cloud: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
    /// `x,y,heading` with heading in radians
    #[arg(long, allow_hyphen_values = true, value_parser = parse_pose)]
    pub pose: Pose2D,
    #[arg(long, default_value_t = crate::topview::DEFAULT_HEADROOM)]
    pub headroom: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum QueryCommand {
    /// Passable directions within a range
    Avoid {
        #[arg(long)]
        topview: PathBuf,
        #[arg(long)]
        range: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        brief: bool,
    },
    /// Nearest instance of a class and obstacles on the way
    Find {
        #[arg(long)]
        topview: PathBuf,
        #[arg(long = "class")]
        class: String,
        #[arg(long, default_value_t = crate::assist::DEFAULT_CORRIDOR_HALFWIDTH)]
        corridor: u8,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        brief: bool,
    },
}

#[derive(Args, Debug)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Directory of static UI files served at /
    #[arg(long)]
    pub static_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 4)]
    pub scenes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn parse_pose(s: &str) -> std::result::Result<Pose2D, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected x,y,heading, got {s:?}"));
    }
    let v: Vec<f64> = parts
        .iter()
        .map(|p| p.parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    Pose2D::new(v[0], v[1], v[2]).map_err(|e| e.to_string())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    Ok(std::fs::write(path, text)?)
}

fn json_line<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("serializes") + "\n"
}

fn style(brief: bool) -> NarrationStyle {
    if brief {
        NarrationStyle::Brief
    } else {
        NarrationStyle::Full
    }
}

fn execute(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Convert { input, output } => {
            let c = load_cloud_auto(&input)?;
            save_cloud_auto(&c, &output)?;
        }
        Command::Synth(a) => {
            let mut spec: SceneSpec = match (&a.spec, a.random) {
                (Some(p), _) => read_json(p)?,
                (None, _) => {
                    let params = RandomSceneParams { total_points: a.points, ..RandomSceneParams::default() };
                    random_scene_spec(&params, a.seed.unwrap_or(0))
                }
            };
            if let Some(s) = a.seed {
                spec.seed = s;
            }
            let (cloud, gt) = synth_scene(&spec)?;
            save_cloud_auto(&cloud, &a.out)?;
            out.write_all(json_line(&serde_json::json!({ "points": cloud.len(), "instances": gt.len() })).as_bytes())?;
        }
        Command::Oracle(a) => {
            let cloud = load_cloud_auto(&a.input)?;
            let gt = GroundTruthInstances::from_cloud(&cloud)?;
            let cfg = OracleConfig::new(a.flip_rate, a.offset_sigma, a.seed)?;
            let pred = oracle_predict(&cloud, &gt, &cfg)?;
            save_cloud_auto(&pred, &a.output)?;
        }
        Command::Preprocess(a) => {
            let cloud = load_cloud_auto(&a.input)?;
            let cfg = PreprocessConfig {
                max_points: a.max_points,
                outlier_k: a.outlier_k,
                outlier_sigma: a.outlier_sigma,
                ..PreprocessConfig::default()
            };
            let (c, report) = preprocess(&cloud, &cfg)?;
            save_cloud_auto(&c, &a.output)?;
            out.write_all(json_line(&report).as_bytes())?;
        }
        Command::Segment(a) => {
            let cloud = load_cloud_auto(&a.input)?;
            let cfg = ClusterConfig {
                radius: a.radius,
                min_points: a.min_points,
                nms_iou: a.nms_iou,
                score_mode: match a.score {
                    ScoreArg::Compactness => ScoreMode::CentroidCompactness,
                    ScoreArg::Size => ScoreMode::SizeNormalized,
                },
                ..ClusterConfig::default()
            };
            let (preds, timing) = segment_instances_timed(&cloud, &cfg)?;
            write_text(&a.out, &instances_to_json(&preds, cloud.class_table()))?;
            err.write_all(json_line(&serde_json::json!({ "instances": preds.len(), "seconds": timing })).as_bytes())?;
        }
        Command::Eval(a) => {
            let gt_cloud = load_cloud_auto(&a.gt)?;
            let gt = GroundTruthInstances::from_cloud(&gt_cloud)?;
            let preds = instances_from_json(&std::fs::read_to_string(&a.pred)?, gt_cloud.class_table(), gt_cloud.len())?;
            let r = evaluate(&preds, &gt, gt_cloud.class_table())?;
            write_text(&a.out, &r.to_json())?;
            out.write_all(json_line(&serde_json::json!({ "map": r.map, "ap50": r.ap50, "ap25": r.ap25 })).as_bytes())?;
        }
        Command::Topview(a) => {
            let cloud = load_cloud_auto(&a.cloud)?;
            let preds = instances_from_json(&std::fs::read_to_string(&a.pred)?, cloud.class_table(), cloud.len())?;
            let tv = build_topview(&cloud, &preds, cloud.class_table(), &a.pose, &TopViewConfig { headroom: a.headroom })?;
            write_text(&a.out, &tv.to_json())?;
        }
        Command::Query { query } => match query {
            QueryCommand::Avoid { topview, range, out: path, brief } => {
                let tv: TopViewScene = read_json(&topview)?;
                let q = AvoidanceQuery::new(range).map_err(Error::Invalid)?;
                let answer = avoid(&tv, &q);
                for line in narrate(Answer::Avoid(&answer), style(brief)) {
                    writeln!(out, "{line}")?;
                }
                if let Some(p) = path {
                    write_text(&p, &(serde_json::to_string_pretty(&answer)? + "\n"))?;
                }
            }
            QueryCommand::Find { topview, class, corridor, out: path, brief } => {
                let tv: TopViewScene = read_json(&topview)?;
                let answer = find_object(&tv, &FindQuery { class, corridor_halfwidth: corridor });
                for line in narrate(Answer::Find(&answer), style(brief)) {
                    writeln!(out, "{line}")?;
                }
                if let Some(p) = path {
                    write_text(&p, &(serde_json::to_string_pretty(&answer)? + "\n"))?;
                }
            }
        },
        Command::Serve(a) => {
            let addr: SocketAddr = format!("{}:{}", a.host, a.port)
                .parse()
                .map_err(|e| Error::Invalid(format!("bad address: {e}")))?;
            let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
            rt.block_on(crate::service::serve(addr, a.static_dir))?;
        }
        Command::Bench(a) => {
            if a.scenes == 0 {
                return Err(Error::Invalid("--scenes must be >= 1".into()));
            }
            let report = bench(a.scenes, a.seed, &PipelineConfig::default())?;
            let text = report.to_json();
            match a.out {
                Some(p) => write_text(&p, &text)?,
                None => out.write_all(text.as_bytes())?,
            }
        }
    }
    Ok(())
}

/// Parses `args` (program name first) and runs the command, writing to the
/// given streams. Returns the exit code.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(cli.command, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error ({}): {e}", e.stage());
            EXIT_DATA
        }
    }
}

/// Entry point for the binary.
pub fn run() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
