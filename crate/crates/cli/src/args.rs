use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub const CONFIG_ENV: &str = "ORTK_CONFIG";

const AFTER_HELP: &str = "\
Settings are resolved in this order: command-line flag, then the config
file (--config or $ORTK_CONFIG), then the built-in default.

Exit status: 0 success, 1 invalid input or arguments, 2 I/O failure,
3 internal error.";

/// Dataset conversion, box geometry and detection evaluation for
/// operating-room perception data.
#[derive(Debug, Parser)]
#[command(name = "ortk", version, after_help = AFTER_HELP, propagate_version = true)]
pub struct Cli {
    /// TOML file supplying defaults for any subcommand.
    #[arg(long, global = true, env = CONFIG_ENV, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Seed for every random choice (split shuffles, anchor seeding).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Print progress details on stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert annotations or point clouds between formats.
    #[command(subcommand)]
    Convert(Convert),
    /// Split a dataset into train and test frame lists.
    Split(SplitArgs),
    /// Count frames per source and instances per class.
    Stats(StatsArgs),
    /// Fit anchor boxes to a dataset by k-means over box sizes.
    Anchors(AnchorsArgs),
    /// Score detections against ground truth.
    Eval(EvalArgs),
    /// Point-cloud operations.
    #[command(subcommand)]
    Pcl(Pcl),
    /// Link per-frame detections into tubes.
    Tubes(TubesArgs),
    /// Build local tube graphs over frame windows.
    Graphs(GraphsArgs),
}

#[derive(Debug, Subcommand)]
pub enum Convert {
    /// COCO JSON to one YOLO label file per image, plus classes.txt.
    Coco2yolo(ConvertOne),
    /// PLY clouds to PCD.
    Ply2pcd(ConvertClouds),
    /// PCD clouds to headerless KITTI binary.
    Pcd2bin(ConvertClouds),
    /// Dataset JSON with 3D boxes to one KITTI label file per frame.
    Json2kitti(ConvertOne),
}

#[derive(Debug, Args)]
pub struct ConvertOne {
    pub input: PathBuf,
    /// Output directory.
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ConvertClouds {
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Output directory.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Output encoding.
    #[arg(long, value_enum, default_value_t = EncodingArg::Binary)]
    pub encoding: EncodingArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EncodingArg {
    Ascii,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CloudFormatArg {
    Ply,
    Pcd,
    Bin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GeometryArg {
    Aa,
    Rot,
    #[value(name = "3d")]
    ThreeD,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Dataset JSON, COCO JSON or YOLO label directory.
    pub input: PathBuf,
    /// Fraction of frames assigned to train, in (0, 1). Default 0.7.
    #[arg(long)]
    pub ratio: Option<f64>,
    /// Split each source separately instead of the pooled frame list.
    #[arg(long)]
    pub per_source: bool,
    /// Class names file used when the input is a label directory.
    #[arg(long, value_name = "PATH")]
    pub catalog: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Dataset JSON, COCO JSON or YOLO label directory.
    pub input: PathBuf,
    /// Print the machine-readable document instead of the table.
    #[arg(long)]
    pub json: bool,
    #[arg(long, value_name = "PATH")]
    pub catalog: Option<PathBuf>,
    /// Also write stats.json and stats.txt here.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnchorsArgs {
    /// Dataset JSON or COCO JSON (image sizes are needed).
    pub input: PathBuf,
    /// Anchors per feature level. Default 3.
    #[arg(long)]
    pub per_level: Option<usize>,
    /// Number of feature levels. Default 3.
    #[arg(long)]
    pub levels: Option<usize>,
    /// Training resolution boxes are rescaled to. Default 640.
    #[arg(long)]
    pub img_size: Option<u32>,
    /// Size-ratio limit for best possible recall. Default 4.
    #[arg(long)]
    pub ratio_threshold: Option<f64>,
    /// Print the machine-readable document instead of the config block.
    #[arg(long)]
    pub json: bool,
    /// Also write anchors.json and anchors.txt here.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Ground truth: dataset JSON, COCO JSON or label directory.
    pub gt: PathBuf,
    /// Detections: dataset JSON, COCO JSON or label directory.
    pub det: PathBuf,
    /// Box kind; selects the IoU kernel and the label-directory format
    /// (aa: YOLO, rot: `class cx cy w h theta [score]`, 3d: KITTI).
    #[arg(long, value_enum)]
    pub geometry: Option<GeometryArg>,
    /// IoU threshold for the per-class rows, mAP@0.5 and F1. Default 0.5.
    #[arg(long)]
    pub iou: Option<f64>,
    /// Precision interpolation. Default coco101.
    #[arg(long, value_enum)]
    pub interp: Option<InterpArg>,
    /// Print one row per class.
    #[arg(long)]
    pub per_class: bool,
    /// Count classes without ground truth as AP 0 in the means.
    #[arg(long)]
    pub strict: bool,
    /// Class names file for label directories (one name per line).
    #[arg(long, value_name = "PATH")]
    pub catalog: Option<PathBuf>,
    /// Print the machine-readable report instead of the table.
    #[arg(long)]
    pub json: bool,
    /// Also write eval.json and eval.txt here.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InterpArg {
    Coco101,
    Allpoints,
}

#[derive(Debug, Subcommand)]
pub enum Pcl {
    /// Replace the points of each occupied cell by their centroid.
    Downsample(DownsampleArgs),
    /// Keep points inside an axis-aligned range.
    Crop(CropArgs),
    /// Bucket points into a voxel grid and write it as JSON.
    Voxelize(VoxelizeArgs),
}

#[derive(Debug, Args)]
pub struct CloudOut {
    /// Output directory.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Output format; defaults to the input format.
    #[arg(long, value_enum)]
    pub to: Option<CloudFormatArg>,
    /// Output encoding for PLY and PCD.
    #[arg(long, value_enum, default_value_t = EncodingArg::Binary)]
    pub encoding: EncodingArg,
}

#[derive(Debug, Args)]
pub struct DownsampleArgs {
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Cell edge in metres. Default 0.05.
    #[arg(long)]
    pub voxel: Option<f64>,
    #[command(flatten)]
    pub output: CloudOut,
}

#[derive(Debug, Args)]
pub struct CropArgs {
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// `x0,x1,y0,y1,z0,z1`, half-open. Default -3,3,-3,3,0,3.
    #[arg(long, allow_hyphen_values = true)]
    pub range: Option<String>,
    #[command(flatten)]
    pub output: CloudOut,
}

#[derive(Debug, Args)]
pub struct VoxelizeArgs {
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Voxel edge, either one value or `x,y,z`. Default 0.05.
    #[arg(long)]
    pub voxel: Option<String>,
    /// `x0,x1,y0,y1,z0,z1`, half-open. Default -3,3,-3,3,0,3.
    #[arg(long, allow_hyphen_values = true)]
    pub range: Option<String>,
    /// Points stored per voxel. Default 32.
    #[arg(long)]
    pub max_points: Option<usize>,
    /// Output directory.
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TubesArgs {
    /// Dataset JSON of one video; frames are ordered by id.
    pub input: PathBuf,
    /// Minimum IoU to extend a tube. Default 0.3.
    #[arg(long)]
    pub iou: Option<f64>,
    /// Frames a tube may go undetected. Default 2.
    #[arg(long)]
    pub max_gap: Option<usize>,
    /// Optimal per-frame assignment instead of greedy claiming.
    #[arg(long)]
    pub hungarian: bool,
    /// Video id recorded in the output. Default: input file stem.
    #[arg(long)]
    pub video_id: Option<String>,
    /// Output directory.
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GraphsArgs {
    /// tubes.json written by `ortk tubes`.
    pub input: PathBuf,
    /// Topologies to build. Default: all three.
    #[arg(long, value_delimiter = ',')]
    pub topology: Vec<String>,
    /// Window lengths in frames. Default 12,18,24,30.
    #[arg(long, value_delimiter = ',')]
    pub window: Vec<usize>,
    /// Frames between window starts. Default: the window length.
    #[arg(long)]
    pub stride: Option<usize>,
    /// Output directory.
    #[arg(long, short)]
    pub out: PathBuf,
}
