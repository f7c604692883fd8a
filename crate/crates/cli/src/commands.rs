use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use ortk_core::anchors::{generate_anchors, AnchorConfig};
use ortk_core::dataset_ops::{split, stats, SplitManifest, SplitSpec};
use ortk_core::eval::{evaluate, EvalOptions, Interpolation};
use ortk_core::formats::coco::parse_coco;
use ortk_core::formats::kitti::{read_kitti_dir, write_kitti_dir};
use ortk_core::formats::rot::read_rot_dir;
use ortk_core::formats::yolo::{
    class_names_text, label_path, parse_class_names, read_yolo_dir, read_yolo_dir_normalized, write_yolo_dir,
};
use ortk_core::formats::{read_cloud, read_dataset_json, write_cloud, CloudFormat, ConversionReport, Encoding};
use ortk_core::geometry::iou;
use ortk_core::pointcloud::{
    crop_range, voxel_downsample, voxelize, PointCloud, RangeSpec, Voxel, VoxelSummary, DEFAULT_RANGE,
    DEFAULT_VOXEL_SIZE,
};
use ortk_core::tubes::{
    build_local_graph, link_tubes, windows, Association, GraphDocument, GraphEntry, LinkConfig, Topology,
    TubeDocument, DEFAULT_WINDOWS, GRAPHS_SCHEMA, TUBES_SCHEMA,
};
use ortk_core::{ClassCatalog, Dataset, Frame, GeometryKind};
use serde::Serialize;

use crate::args::*;
use crate::config::FileConfig;
use crate::failure::{Failure, Outcome};

pub const VOXELS_SCHEMA: &str = "ortk.voxels/v1";
const DEFAULT_RATIO: f64 = 0.7;
const DEFAULT_MAX_POINTS: usize = 32;

struct Ctx {
    cfg: FileConfig,
    seed: u64,
    verbose: bool,
}

impl Ctx {
    fn note(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn catalog_flag<'a>(&'a self, flag: &'a Option<PathBuf>) -> Option<&'a Path> {
        flag.as_deref().or(self.cfg.catalog.as_deref())
    }
}

pub fn run(cli: Cli) -> Outcome {
    let cfg = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    let ctx = Ctx { cfg, seed, verbose: cli.verbose };
    match cli.command {
        Command::Convert(c) => convert(&ctx, c),
        Command::Split(a) => split_cmd(&ctx, a),
        Command::Stats(a) => stats_cmd(&ctx, a),
        Command::Anchors(a) => anchors_cmd(&ctx, a),
        Command::Eval(a) => eval_cmd(&ctx, a),
        Command::Pcl(p) => pcl(&ctx, p),
        Command::Tubes(a) => tubes_cmd(&ctx, a),
        Command::Graphs(a) => graphs_cmd(&ctx, a),
    }
}

// ------------------------------------------------------------------ output

fn prepare_out(dir: &Path) -> Outcome<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Failure::io(format!("{}: {e}", dir.display())))?;
    Ok(dir.to_path_buf())
}

fn write_file(dir: &Path, name: &str, bytes: impl AsRef<[u8]>) -> Outcome<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn json<T: Serialize>(value: &T) -> Outcome<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Failure::internal(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn file_names(paths: &[PathBuf]) -> Vec<PathBuf> {
    let mut names: Vec<PathBuf> = paths.iter().filter_map(|p| p.file_name().map(PathBuf::from)).collect();
    names.sort();
    names
}

/// Output path for a per-input file, refusing to overwrite an input or to
/// let two inputs map to the same output.
fn output_for(out: &Path, input: &Path, ext: &str, taken: &mut BTreeSet<PathBuf>) -> Outcome<PathBuf> {
    let stem = input
        .file_stem()
        .ok_or_else(|| Failure::invalid(format!("{}: no file name", input.display())))?;
    let path = out.join(format!("{}.{ext}", stem.to_string_lossy()));
    if let (Ok(a), Ok(b)) = (fs::canonicalize(input), fs::canonicalize(&path)) {
        if a == b {
            return Err(Failure::invalid(format!("{}: output would overwrite the input", path.display())));
        }
    }
    if !taken.insert(path.clone()) {
        return Err(Failure::invalid(format!("{}: two inputs map to this output", path.display())));
    }
    Ok(path)
}

// ------------------------------------------------------------------- input

fn read_catalog(path: &Path) -> Outcome<ClassCatalog> {
    let text = fs::read_to_string(path).map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
    parse_class_names(&text).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))
}

/// Catalog for a label directory: explicit file, then `classes.txt` in the
/// directory, then `fallback`, then the built-in endoscope classes.
fn dir_catalog(dir: &Path, flag: Option<&Path>, fallback: Option<&ClassCatalog>) -> Outcome<ClassCatalog> {
    if let Some(path) = flag {
        return read_catalog(path);
    }
    let local = dir.join("classes.txt");
    if local.is_file() {
        return read_catalog(&local);
    }
    Ok(fallback.cloned().unwrap_or_else(ClassCatalog::endoscope))
}

fn ensure_exists(path: &Path) -> Outcome {
    if path.exists() {
        Ok(())
    } else {
        Err(Failure::io(format!("{}: no such file or directory", path.display())))
    }
}

/// Dataset JSON (native or COCO) or a YOLO label directory.
fn load_dataset(path: &Path, catalog: Option<&Path>) -> Outcome<Dataset> {
    ensure_exists(path)?;
    if path.is_dir() {
        let cat = dir_catalog(path, catalog, None)?;
        Ok(read_yolo_dir_normalized(path, cat)?)
    } else {
        Ok(read_dataset_json(path)?)
    }
}

fn load_eval_input(
    path: &Path,
    geometry: GeometryKind,
    catalog: Option<&Path>,
    reference: Option<&Dataset>,
) -> Outcome<Dataset> {
    ensure_exists(path)?;
    if !path.is_dir() {
        return Ok(read_dataset_json(path)?);
    }
    let cat = dir_catalog(path, catalog, reference.map(|d| &d.catalog))?;
    let ds = match geometry {
        GeometryKind::Aa => match reference {
            // Label files are normalized; reuse the ground-truth image sizes
            // unless the ground truth is itself a normalized directory.
            Some(gt) if gt.frames.iter().any(|f| f.width > 1 || f.height > 1) => {
                let frames: Vec<Frame> = gt
                    .frames
                    .iter()
                    .filter(|f| label_path(path, &f.id).is_file())
                    .map(|f| Frame::new(f.id.clone(), f.width, f.height).with_source(f.source.clone()))
                    .collect();
                read_yolo_dir(path, cat, frames)?
            }
            _ => read_yolo_dir_normalized(path, cat)?,
        },
        GeometryKind::Rot => read_rot_dir(path, cat)?,
        GeometryKind::ThreeD => read_kitti_dir(path, cat)?,
    };
    Ok(ds)
}

fn check_geometry(ds: &Dataset, kind: GeometryKind, label: &str) -> Outcome {
    for frame in &ds.frames {
        for a in &frame.annotations {
            let got = a.geometry.kind();
            let ok = got == kind || (kind == GeometryKind::Rot && got == GeometryKind::Aa);
            if !ok {
                return Err(Failure::invalid(format!(
                    "{label}: frame {:?} has a {} box but --geometry is {}",
                    frame.id, got, kind
                )));
            }
        }
    }
    Ok(())
}

fn parse_geometry(s: &str) -> Outcome<GeometryKind> {
    match s {
        "aa" => Ok(GeometryKind::Aa),
        "rot" => Ok(GeometryKind::Rot),
        "3d" => Ok(GeometryKind::ThreeD),
        other => Err(Failure::invalid(format!("unknown geometry {other:?} (expected aa, rot or 3d)"))),
    }
}

fn encoding(e: EncodingArg) -> Encoding {
    match e {
        EncodingArg::Ascii => Encoding::Ascii,
        EncodingArg::Binary => Encoding::Binary,
    }
}

fn cloud_format(f: CloudFormatArg) -> CloudFormat {
    match f {
        CloudFormatArg::Ply => CloudFormat::Ply,
        CloudFormatArg::Pcd => CloudFormat::Pcd,
        CloudFormatArg::Bin => CloudFormat::Bin,
    }
}

// ----------------------------------------------------------------- convert

fn convert(ctx: &Ctx, c: Convert) -> Outcome {
    match c {
        Convert::Coco2yolo(a) => {
            ensure_exists(&a.input)?;
            let bytes = fs::read(&a.input).map_err(|e| Failure::io(format!("{}: {e}", a.input.display())))?;
            let import = parse_coco(&bytes).map_err(|e| e.in_file(&a.input))?;
            let out = prepare_out(&a.out)?;
            let mut written = write_yolo_dir(&import.dataset, &out)?;
            written.push(write_file(&out, "classes.txt", class_names_text(&import.dataset.catalog))?);
            let mut report = ConversionReport::new("coco2yolo", Some(&import.dataset));
            report.id_remap = import.category_map.iter().map(|(k, v)| (k.to_string(), *v)).collect();
            report.files_written = file_names(&written);
            write_file(&out, "report.json", json(&report)?)?;
            println!(
                "converted {} frames, {} boxes to {}",
                import.dataset.frames.len(),
                import.dataset.annotation_count(),
                out.display()
            );
            Ok(())
        }
        Convert::Json2kitti(a) => {
            let ds = read_dataset_json(&a.input)?;
            let out = prepare_out(&a.out)?;
            let mut written = write_kitti_dir(&ds, &out)?;
            written.push(write_file(&out, "classes.txt", class_names_text(&ds.catalog))?);
            let mut report = ConversionReport::new("json2kitti", Some(&ds));
            report.files_written = file_names(&written);
            write_file(&out, "report.json", json(&report)?)?;
            println!("converted {} frames, {} boxes to {}", ds.frames.len(), ds.annotation_count(), out.display());
            Ok(())
        }
        Convert::Ply2pcd(a) => convert_clouds(ctx, a, "ply2pcd", CloudFormat::Ply, CloudFormat::Pcd),
        Convert::Pcd2bin(a) => convert_clouds(ctx, a, "pcd2bin", CloudFormat::Pcd, CloudFormat::Bin),
    }
}

fn convert_clouds(ctx: &Ctx, a: ConvertClouds, name: &str, from: CloudFormat, to: CloudFormat) -> Outcome {
    let out = prepare_out(&a.out)?;
    let mut taken = BTreeSet::new();
    let mut written = Vec::new();
    for input in &a.inputs {
        ensure_exists(input)?;
        let cloud = read_cloud(input, Some(from))?;
        let path = output_for(&out, input, &to.to_string(), &mut taken)?;
        write_cloud(&cloud, &path, Some(to), encoding(a.encoding))?;
        ctx.note(format!("{} -> {} ({} points)", input.display(), path.display(), cloud.len()));
        println!("{}: {} points", path.display(), cloud.len());
        written.push(path);
    }
    let mut report = ConversionReport::new(name, None);
    report.files_written = file_names(&written);
    write_file(&out, "report.json", json(&report)?)?;
    Ok(())
}

// ----------------------------------------------------------- dataset ops

fn split_cmd(ctx: &Ctx, a: SplitArgs) -> Outcome {
    let ds = load_dataset(&a.input, ctx.catalog_flag(&a.catalog))?;
    let ratio = a.ratio.or(ctx.cfg.split.ratio).unwrap_or(DEFAULT_RATIO);
    let per_source = a.per_source || ctx.cfg.split.per_source.unwrap_or(false);
    let spec = SplitSpec::new(ratio, ctx.seed)?.per_source(per_source);
    let (train, test) = split(&ds, &spec)?;
    let manifest = SplitManifest::new(spec, &train, &test);
    let out = prepare_out(&a.out)?;
    let lines = |ids: &[String]| ids.iter().map(|i| format!("{i}\n")).collect::<String>();
    write_file(&out, "train.txt", lines(&manifest.train))?;
    write_file(&out, "test.txt", lines(&manifest.test))?;
    write_file(&out, "split.json", json(&manifest)?)?;
    println!("train {}\ntest {}", manifest.train.len(), manifest.test.len());
    Ok(())
}

fn stats_cmd(ctx: &Ctx, a: StatsArgs) -> Outcome {
    let ds = load_dataset(&a.input, ctx.catalog_flag(&a.catalog))?;
    let s = stats(&ds);
    let (doc, table) = (json(&s)?, s.to_table());
    if let Some(dir) = &a.out {
        let out = prepare_out(dir)?;
        write_file(&out, "stats.json", &doc)?;
        write_file(&out, "stats.txt", &table)?;
    }
    print!("{}", if a.json { doc } else { table });
    Ok(())
}

fn anchors_cmd(ctx: &Ctx, a: AnchorsArgs) -> Outcome {
    ensure_exists(&a.input)?;
    if a.input.is_dir() {
        return Err(Failure::invalid(format!(
            "{}: anchors need image sizes; pass a dataset or COCO JSON file",
            a.input.display()
        )));
    }
    let ds = read_dataset_json(&a.input)?;
    let c = &ctx.cfg.anchors;
    let d = AnchorConfig::default();
    let cfg = AnchorConfig {
        n_per_level: a.per_level.or(c.per_level).unwrap_or(d.n_per_level),
        levels: a.levels.or(c.levels).unwrap_or(d.levels),
        img_size: a.img_size.or(c.img_size).unwrap_or(d.img_size),
        ratio_threshold: a.ratio_threshold.or(c.ratio_threshold).unwrap_or(d.ratio_threshold),
        seed: ctx.seed,
        ..d
    };
    if cfg.img_size == 0 || cfg.ratio_threshold.is_nan() || cfg.ratio_threshold <= 1.0 {
        return Err(Failure::invalid("img-size must be positive and ratio-threshold above 1"));
    }
    let run = generate_anchors(&ds, &cfg)?;
    ctx.note(format!(
        "{} boxes used, {} excluded, {} k-means iterations",
        run.boxes_used,
        run.boxes_excluded,
        run.objective_history.len()
    ));
    let doc = json(&run)?;
    let block = run.anchors.to_config_block();
    if let Some(dir) = &a.out {
        let out = prepare_out(dir)?;
        write_file(&out, "anchors.json", &doc)?;
        write_file(&out, "anchors.txt", &block)?;
    }
    print!("{}", if a.json { doc } else { block });
    Ok(())
}

// ---------------------------------------------------------------- eval

fn eval_cmd(ctx: &Ctx, a: EvalArgs) -> Outcome {
    let c = &ctx.cfg.eval;
    let geometry = match a.geometry {
        Some(GeometryArg::Aa) => GeometryKind::Aa,
        Some(GeometryArg::Rot) => GeometryKind::Rot,
        Some(GeometryArg::ThreeD) => GeometryKind::ThreeD,
        None => parse_geometry(c.geometry.as_deref().unwrap_or("aa"))?,
    };
    let interpolation = match a.interp {
        Some(InterpArg::Coco101) => Interpolation::Coco101,
        Some(InterpArg::Allpoints) => Interpolation::AllPoints,
        None => c.interp.as_deref().unwrap_or("coco101").parse::<Interpolation>()?,
    };
    let options = EvalOptions {
        iou_threshold: a.iou.or(c.iou).unwrap_or(0.5),
        interpolation,
        strict: a.strict || c.strict.unwrap_or(false),
        ..EvalOptions::default()
    };
    let catalog = ctx.catalog_flag(&a.catalog);
    let gt = load_eval_input(&a.gt, geometry, catalog, None)?;
    let det = load_eval_input(&a.det, geometry, catalog, Some(&gt))?;
    check_geometry(&gt, geometry, "ground truth")?;
    check_geometry(&det, geometry, "detections")?;
    ctx.note(format!(
        "{} gt frames ({} boxes), {} detection frames ({} boxes)",
        gt.frames.len(),
        gt.annotation_count(),
        det.frames.len(),
        det.annotation_count()
    ));
    let report = evaluate(&gt, &det, iou, &options)?;
    let doc = json(&report)?;
    let table = report.to_table(a.per_class);
    if let Some(dir) = &a.out {
        let out = prepare_out(dir)?;
        write_file(&out, "eval.json", &doc)?;
        write_file(&out, "eval.txt", &table)?;
    }
    print!("{}", if a.json { doc } else { table });
    Ok(())
}

// ------------------------------------------------------------------- pcl

fn range_arg(flag: &Option<String>, cfg: &Option<String>) -> Outcome<RangeSpec> {
    match flag.as_ref().or(cfg.as_ref()) {
        Some(s) => Ok(RangeSpec::parse(s)?),
        None => Ok(DEFAULT_RANGE),
    }
}

fn voxel_arg(flag: &Option<String>, cfg: Option<f64>) -> Outcome<[f64; 3]> {
    let Some(s) = flag else {
        return Ok([cfg.unwrap_or(DEFAULT_VOXEL_SIZE); 3]);
    };
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| Failure::invalid(format!("bad voxel size {s:?}"))))
        .collect::<Outcome<_>>()?;
    match parts[..] {
        [v] => Ok([v; 3]),
        [x, y, z] => Ok([x, y, z]),
        _ => Err(Failure::invalid(format!("voxel size {s:?} must be one value or x,y,z"))),
    }
}

fn transform_clouds(
    ctx: &Ctx,
    inputs: &[PathBuf],
    output: &CloudOut,
    op: impl Fn(&PointCloud) -> Outcome<PointCloud>,
) -> Outcome {
    let out = prepare_out(&output.out)?;
    let mut taken = BTreeSet::new();
    for input in inputs {
        ensure_exists(input)?;
        let from = CloudFormat::from_path(input).map_err(|e| e.in_file(input))?;
        let to = output.to.map(cloud_format).unwrap_or(from);
        let cloud = read_cloud(input, Some(from))?;
        let result = op(&cloud)?;
        let path = output_for(&out, input, &to.to_string(), &mut taken)?;
        write_cloud(&result, &path, Some(to), encoding(output.encoding))?;
        ctx.note(format!("{} -> {}", input.display(), path.display()));
        println!("{}: {} -> {} points", path.display(), cloud.len(), result.len());
    }
    Ok(())
}

#[derive(Serialize)]
struct VoxelDocument<'a> {
    schema: &'static str,
    source: &'a str,
    range: RangeSpec,
    summary: VoxelSummary,
    voxels: &'a [Voxel],
}

fn pcl(ctx: &Ctx, p: Pcl) -> Outcome {
    let c = &ctx.cfg.pcl;
    match p {
        Pcl::Downsample(a) => {
            let leaf = a.voxel.or(c.voxel).unwrap_or(DEFAULT_VOXEL_SIZE);
            transform_clouds(ctx, &a.inputs, &a.output, |pc| Ok(voxel_downsample(pc, leaf)?))
        }
        Pcl::Crop(a) => {
            let range = range_arg(&a.range, &c.range)?;
            transform_clouds(ctx, &a.inputs, &a.output, |pc| Ok(crop_range(pc, &range)))
        }
        Pcl::Voxelize(a) => {
            let size = voxel_arg(&a.voxel, c.voxel)?;
            let range = range_arg(&a.range, &c.range)?;
            let max_points = a.max_points.or(c.max_points).unwrap_or(DEFAULT_MAX_POINTS);
            let out = prepare_out(&a.out)?;
            let mut taken = BTreeSet::new();
            for input in &a.inputs {
                ensure_exists(input)?;
                let cloud = read_cloud(input, None)?;
                let grid = voxelize(&cloud, size, &range, max_points)?;
                let summary = grid.summary();
                let doc = VoxelDocument {
                    schema: VOXELS_SCHEMA,
                    source: &cloud.source_id,
                    range: grid.range,
                    summary: summary.clone(),
                    voxels: &grid.voxels,
                };
                let mut text = serde_json::to_string(&doc).map_err(|e| Failure::internal(e.to_string()))?;
                text.push('\n');
                let path = output_for(&out, input, "voxels.json", &mut taken)?;
                fs::write(&path, text).map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
                println!(
                    "{}: dims {:?}, {} occupied voxels, {} of {} points in range, {} truncated voxels",
                    path.display(),
                    summary.dims,
                    summary.occupied_voxels,
                    summary.points_in_range,
                    cloud.len(),
                    summary.truncated_voxels
                );
            }
            Ok(())
        }
    }
}

// ----------------------------------------------------------- tubes/graphs

fn tubes_cmd(ctx: &Ctx, a: TubesArgs) -> Outcome {
    let mut ds = load_dataset(&a.input, ctx.cfg.catalog.as_deref())?;
    ds.frames.sort_by(|x, y| x.id.cmp(&y.id));
    let c = &ctx.cfg.tubes;
    let association = if a.hungarian {
        Association::Hungarian
    } else {
        match c.association.as_deref().unwrap_or("greedy") {
            "greedy" => Association::Greedy,
            "hungarian" => Association::Hungarian,
            other => return Err(Failure::invalid(format!("unknown association {other:?}"))),
        }
    };
    let d = LinkConfig::default();
    let cfg = LinkConfig {
        iou_threshold: a.iou.or(c.iou).unwrap_or(d.iou_threshold),
        max_gap: a.max_gap.or(c.max_gap).unwrap_or(d.max_gap),
        association,
    };
    let tubes = link_tubes(&ds.frames, &cfg)?;
    let video_id = a
        .video_id
        .clone()
        .or_else(|| a.input.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .unwrap_or_default();
    let doc = TubeDocument {
        schema: TUBES_SCHEMA.to_owned(),
        video_id,
        frame_count: ds.frames.len(),
        frame_ids: ds.frames.iter().map(|f| f.id.clone()).collect(),
        tubes,
    };
    let out = prepare_out(&a.out)?;
    write_file(&out, "tubes.json", json(&doc)?)?;
    println!("{} tubes over {} frames", doc.tubes.len(), doc.frame_count);
    Ok(())
}

fn graphs_cmd(ctx: &Ctx, a: GraphsArgs) -> Outcome {
    ensure_exists(&a.input)?;
    let bytes = fs::read(&a.input).map_err(|e| Failure::io(format!("{}: {e}", a.input.display())))?;
    let doc: TubeDocument =
        serde_json::from_slice(&bytes).map_err(|e| Failure::invalid(format!("{}: {e}", a.input.display())))?;
    if doc.schema != TUBES_SCHEMA {
        return Err(Failure::invalid(format!(
            "{}: expected schema {TUBES_SCHEMA}, found {:?}",
            a.input.display(),
            doc.schema
        )));
    }
    let c = &ctx.cfg.graphs;
    let names: Vec<String> = if !a.topology.is_empty() {
        a.topology.clone()
    } else {
        c.topology.clone().unwrap_or_else(|| Topology::ALL.iter().map(Topology::to_string).collect())
    };
    let topologies = names.iter().map(|n| n.parse::<Topology>()).collect::<Result<Vec<_>, _>>()?;
    let lengths: Vec<usize> = if !a.window.is_empty() {
        a.window.clone()
    } else {
        c.window.clone().unwrap_or_else(|| DEFAULT_WINDOWS.to_vec())
    };
    let mut graphs = Vec::new();
    for &len in &lengths {
        let stride = a.stride.or(c.stride).unwrap_or(len);
        for w in windows(doc.frame_count, len, stride)? {
            for &t in &topologies {
                graphs.push(GraphEntry::from(&build_local_graph(&doc.tubes, w, t)?));
            }
        }
    }
    ctx.note(format!("{} tubes, windows {lengths:?}", doc.tubes.len()));
    let out_doc = GraphDocument {
        schema: GRAPHS_SCHEMA.to_owned(),
        video_id: doc.video_id.clone(),
        graphs,
    };
    let out = prepare_out(&a.out)?;
    write_file(&out, "graphs.json", json(&out_doc)?)?;
    println!("{} graphs for video {:?}", out_doc.graphs.len(), out_doc.video_id);
    Ok(())
}
