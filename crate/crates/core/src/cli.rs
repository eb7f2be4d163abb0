//! Command-line front end. `run` returns the process exit code:
//! 0 on success or help, 1 for usage errors, 2 for data errors.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::benchmark::{self, TestsetOptions};
use crate::dataset::{self, AssetCatalog, DatasetConfig};
use crate::error::{Error, Result};
use crate::io::{self, BitDepth, DisparityFormat};
use crate::metrics::{self, Metric, RmMode, RoiMask};
use crate::model::{BokehParams, DisparityMap, FocalSpec, VideoClip};
use crate::perturb::{self, MorphOp, PerturbPreset};
use crate::raytrace::{self, LensConfig, PlanarScene};
use crate::service::{self, ServiceConfig};
use crate::temporal::{self, Blend};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "vbokeh", version, about = "Layered video bokeh rendering and evaluation")]
pub struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render bokeh for a frame sequence.
    Render(RenderArgs),
    /// Generate a synthetic paired test set.
    Dataset(DatasetArgs),
    /// Compare predicted frames against references, or score a test set.
    Eval(EvalArgs),
    /// Write a perturbed copy of a disparity sequence.
    Perturb(PerturbArgs),
    /// Start the HTTP preview service.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RendererChoice {
    Mpi,
    Raytrace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BlendChoice {
    Cosine,
    Linear,
}

impl From<BlendChoice> for Blend {
    fn from(b: BlendChoice) -> Self {
        match b {
            BlendChoice::Cosine => Blend::Cosine,
            BlendChoice::Linear => Blend::Linear,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DepthChoice {
    #[value(name = "8")]
    Eight,
    #[value(name = "16")]
    Sixteen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RmModeChoice {
    Paired,
    Solo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MorphChoice {
    Dilate,
    Erode,
    Open,
    Close,
}

impl From<MorphChoice> for MorphOp {
    fn from(m: MorphChoice) -> Self {
        match m {
            MorphChoice::Dilate => MorphOp::Dilate,
            MorphChoice::Erode => MorphOp::Erode,
            MorphChoice::Open => MorphOp::Open,
            MorphChoice::Close => MorphOp::Close,
        }
    }
}

/// Pixel and frame used to pick the focal disparity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FocusPixel {
    pub x: usize,
    pub y: usize,
    pub t: usize,
}

fn parse_focus_px(s: &str) -> std::result::Result<FocusPixel, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err("expected x,y,t".into());
    }
    let n = |p: &str| p.parse::<usize>().map_err(|_| format!("`{p}` is not a non-negative integer"));
    Ok(FocusPixel {
        x: n(parts[0])?,
        y: n(parts[1])?,
        t: n(parts[2])?,
    })
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Frame directory (mpi) or directory of scene files (raytrace).
    #[arg(long)]
    pub input: PathBuf,
    /// Disparity sequence directory; required for the mpi renderer.
    #[arg(long)]
    pub disparity: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, conflicts_with = "focus_px", required_unless_present = "focus_px")]
    pub focus_disparity: Option<f64>,
    /// Focus on the disparity found at pixel x,y of frame t.
    #[arg(long, value_parser = parse_focus_px)]
    pub focus_px: Option<FocusPixel>,
    /// Blur strength K.
    #[arg(long)]
    pub strength: f64,
    #[arg(long, default_value_t = 16)]
    pub layers: usize,
    #[arg(long, default_value_t = 8)]
    pub segment_len: usize,
    #[arg(long, default_value_t = 4)]
    pub overlap: usize,
    #[arg(long, value_enum, default_value_t = BlendChoice::Cosine)]
    pub blend: BlendChoice,
    #[arg(long, value_enum, default_value_t = RendererChoice::Mpi)]
    pub renderer: RendererChoice,
    /// Lens samples per pixel for the raytrace renderer.
    #[arg(long, default_value_t = raytrace::DEFAULT_SAMPLES_PER_PIXEL)]
    pub spp: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = DepthChoice::Eight)]
    pub bit_depth: DepthChoice,
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    /// Catalog with backgrounds/ and foregrounds/ PNG directories.
    #[arg(long, required_unless_present = "synthetic_assets")]
    pub assets: Option<PathBuf>,
    /// Write a procedural catalog of this many assets per kind under <out>/assets.
    #[arg(long)]
    pub synthetic_assets: Option<usize>,
    #[arg(long)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1024)]
    pub width: usize,
    #[arg(long, default_value_t = 576)]
    pub height: usize,
    #[arg(long, default_value_t = 25)]
    pub frames: usize,
    #[arg(long, default_value_t = raytrace::DEFAULT_SAMPLES_PER_PIXEL)]
    pub spp: usize,
    #[arg(long, default_value_t = 16)]
    pub layers: usize,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, required_unless_present = "testset", requires = "gt")]
    pub pred: Option<PathBuf>,
    #[arg(long)]
    pub gt: Option<PathBuf>,
    /// Score the layered renderer over a generated test set instead.
    #[arg(long, conflicts_with_all = ["pred", "gt"])]
    pub testset: Option<PathBuf>,
    /// Comma-separated subset of rm, ssim, psnr, vepi, texture.
    #[arg(long, default_value = "rm,ssim,psnr")]
    pub metrics: String,
    /// ROI mask sequence; required for vepi with --pred/--gt.
    #[arg(long)]
    pub roi: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = RmModeChoice::Paired)]
    pub rm_mode: RmModeChoice,
    /// Perturbation preset applied to test-set disparity before rendering.
    #[arg(long, requires = "testset")]
    pub perturb_preset: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the table here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PerturbArgs {
    #[arg(long)]
    pub disparity: PathBuf,
    /// Output directory; defaults to `<disparity>.perturbed`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, conflicts_with_all = ["elastic_alpha", "perlin_amp", "morph"])]
    pub preset: Option<String>,
    #[arg(long, default_value_t = 0.0)]
    pub elastic_alpha: f64,
    #[arg(long, default_value_t = 4.0)]
    pub elastic_sigma: f64,
    /// Perlin amplitude in disparity units.
    #[arg(long, default_value_t = 0.0)]
    pub perlin_amp: f64,
    #[arg(long, default_value_t = 32.0)]
    pub perlin_scale: f64,
    #[arg(long, value_enum)]
    pub morph: Option<MorphChoice>,
    #[arg(long, default_value_t = 1)]
    pub morph_radius: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Decoded frames kept in memory.
    #[arg(long, default_value_t = 64)]
    pub cache_frames: usize,
    /// Pending render jobs before requests are refused.
    #[arg(long, default_value_t = 8)]
    pub queue: usize,
}

/// Parses and runs; never panics on bad input.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let threads = cli.threads;
    let exec = move || match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_data_error() {
                EXIT_DATA
            } else {
                EXIT_USAGE
            }
        }
    };
    match threads {
        Some(0) => {
            eprintln!("error: --threads must be >= 1");
            EXIT_USAGE
        }
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(exec),
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_DATA
            }
        },
        None => exec(),
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Render(a) => cmd_render(a),
        Command::Dataset(a) => cmd_dataset(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Perturb(a) => cmd_perturb(a),
        Command::Serve(a) => cmd_serve(a, cli.threads),
    }
}

fn bit_depth(depth: DepthChoice) -> BitDepth {
    match depth {
        DepthChoice::Eight => BitDepth::Eight,
        DepthChoice::Sixteen => BitDepth::Sixteen,
    }
}

/// Disparity at a pixel of a frame, with bounds checks.
pub fn focus_from_pixel(disparities: &[DisparityMap], px: FocusPixel) -> Result<FocalSpec> {
    let d = disparities
        .get(px.t)
        .ok_or_else(|| Error::invalid(format!("focus frame {} outside 0..{}", px.t, disparities.len())))?;
    let (w, h) = d.dims();
    if px.x >= w || px.y >= h {
        return Err(Error::invalid(format!("focus pixel ({}, {}) outside {w}x{h}", px.x, px.y)));
    }
    FocalSpec::new(d.get(px.x, px.y) as f64)
}

fn resolve_focus(a: &RenderArgs, disparities: impl FnOnce() -> Result<Vec<DisparityMap>>) -> Result<FocalSpec> {
    match (a.focus_disparity, a.focus_px) {
        (Some(d), None) => FocalSpec::new(d),
        (None, Some(px)) => focus_from_pixel(&disparities()?, px),
        _ => Err(Error::invalid("give exactly one of --focus-disparity or --focus-px")),
    }
}

fn cmd_render(a: RenderArgs) -> Result<()> {
    if a.overlap < 1 || a.segment_len != 2 * a.overlap {
        return Err(Error::invalid("--segment-len must be twice --overlap"));
    }
    let started = Instant::now();
    let (clip, focal) = match a.renderer {
        RendererChoice::Mpi => {
            let dir = a
                .disparity
                .as_ref()
                .ok_or_else(|| Error::invalid("--disparity is required for the mpi renderer"))?;
            let clip = io::load_frame_sequence(&a.input)?;
            let disparities = io::load_disparity_sequence(dir)?;
            let focal = resolve_focus(&a, || Ok(disparities.clone()))?;
            let params = BokehParams::new(focal, a.strength, a.layers)?;
            (
                temporal::render_segmented(&clip, &disparities, &params, a.overlap, a.blend.into())?,
                focal,
            )
        }
        RendererChoice::Raytrace => {
            let scenes = load_scenes(&a.input)?;
            let focal = resolve_focus(&a, || scenes.iter().map(dataset::scene_disparity).collect())?;
            let lens = LensConfig::new(a.strength, a.spp, a.seed)?;
            (raytrace::render_reference_clip(&scenes, focal, &lens)?, focal)
        }
    };
    let elapsed = started.elapsed();
    let paths = io::save_frame_sequence(&clip, &a.out, bit_depth(a.bit_depth))?;
    println!(
        "rendered {} frames at {}x{} (focus disparity {}, strength {}) in {:.3} s, {:.3} s/frame",
        clip.len(),
        clip.dims().0,
        clip.dims().1,
        focal.disparity(),
        a.strength,
        elapsed.as_secs_f64(),
        elapsed.as_secs_f64() / clip.len() as f64
    );
    for p in paths {
        println!("{}", p.display());
    }
    Ok(())
}

/// Scene description files in a directory, in name order.
fn load_scenes(dir: &Path) -> Result<Vec<PlanarScene>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "txt" || e == "scene") {
            files.push(path);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(Error::Empty("no scene files (*.txt or *.scene) in input directory"));
    }
    files.iter().map(|p| PlanarScene::load(p)).collect()
}

fn cmd_dataset(a: DatasetArgs) -> Result<()> {
    if a.count == 0 {
        return Err(Error::invalid("--count must be >= 1"));
    }
    let catalog = match (&a.assets, a.synthetic_assets) {
        (Some(dir), _) => AssetCatalog::from_dir(dir)?,
        (None, Some(n)) => {
            if n == 0 {
                return Err(Error::invalid("--synthetic-assets must be >= 1"));
            }
            dataset::write_synthetic_catalog(&a.out.join("assets"), n, n, a.seed)?
        }
        (None, None) => return Err(Error::invalid("--assets or --synthetic-assets is required")),
    };
    let config = DatasetConfig {
        width: a.width,
        height: a.height,
        frames: a.frames,
        samples_per_pixel: a.spp,
        layers: a.layers,
        ..DatasetConfig::default()
    };
    let manifest = dataset::generate_testset(a.count, &catalog, &config, a.seed, &a.out)?;
    println!("generated {} videos", manifest.entries.len());
    println!("{}", a.out.join(dataset::MANIFEST_NAME).display());
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let metrics_list = Metric::parse_list(&a.metrics)?;
    let rm_mode = match a.rm_mode {
        RmModeChoice::Paired => RmMode::Paired,
        RmModeChoice::Solo => RmMode::Solo,
    };
    let rows = if let Some(dir) = &a.testset {
        let perturb = match &a.perturb_preset {
            Some(name) => Some((PerturbPreset::by_name(name)?, a.seed)),
            None => None,
        };
        let options = TestsetOptions {
            metrics: metrics_list.clone(),
            rm_mode,
            perturb,
            ..TestsetOptions::default()
        };
        let mut rows = benchmark::evaluate_testset(dir, &options)?;
        let mean = benchmark::mean_report(&rows);
        rows.push(("mean".into(), mean));
        rows
    } else {
        let (pred_dir, gt_dir) = (a.pred.as_ref().expect("clap"), a.gt.as_ref().expect("clap"));
        let pred = io::load_frame_sequence(pred_dir)?;
        let gt = io::load_frame_sequence(gt_dir)?;
        if metrics_list.contains(&Metric::Vepi) && a.roi.is_none() {
            return Err(Error::invalid("--metrics vepi requires --roi"));
        }
        let rois = match &a.roi {
            Some(dir) => Some(load_rois(dir)?),
            None => None,
        };
        let report = metrics::evaluate_clip_pair(&pred, &gt, rois.as_deref(), &metrics_list, rm_mode)?;
        let name = pred_dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "pred".into());
        vec![(name, report)]
    };
    let table = metrics::format_table(&rows, &metrics_list);
    print!("{table}");
    if let Some(out) = &a.out {
        std::fs::write(out, &table).map_err(|e| Error::io(out, e))?;
        println!("{}", out.display());
    }
    Ok(())
}

fn load_rois(dir: &Path) -> Result<Vec<RoiMask>> {
    io::list_sequence(dir)?.iter().map(|p| RoiMask::read(p)).collect()
}

/// `<dir>.perturbed` next to the input.
pub fn default_perturb_dir(dir: &Path) -> PathBuf {
    let mut name = dir.file_name().map(|n| n.to_os_string()).unwrap_or_else(|| "disparity".into());
    name.push(".perturbed");
    dir.with_file_name(name)
}

fn cmd_perturb(a: PerturbArgs) -> Result<()> {
    let maps = io::load_disparity_sequence(&a.disparity)?;
    let out_dir = a.out.clone().unwrap_or_else(|| default_perturb_dir(&a.disparity));
    let out = if let Some(name) = &a.preset {
        let preset = PerturbPreset::by_name(name)?;
        let (maps, applied) = preset.apply_clip(&maps, a.seed)?;
        println!(
            "preset {name}: {}",
            if applied { "applied" } else { "skipped by coin flip" }
        );
        maps
    } else {
        maps.iter()
            .enumerate()
            .map(|(t, d)| {
                let seed = crate::rng::derive_seed(a.seed, t as u64);
                let d = perturb::elastic_transform(d, a.elastic_alpha, a.elastic_sigma, seed)?;
                let d = perturb::perlin_noise_add(&d, a.perlin_amp, a.perlin_scale, a.seed)?;
                match a.morph {
                    Some(op) => perturb::morphological(&d, op.into(), a.morph_radius),
                    None => Ok(d),
                }
            })
            .collect::<Result<Vec<_>>>()?
    };
    let paths = io::save_disparity_sequence(&out, &out_dir, DisparityFormat::Pfm)?;
    println!("wrote {} maps", paths.len());
    println!("{}", out_dir.display());
    Ok(())
}

fn cmd_serve(a: ServeArgs, threads: Option<usize>) -> Result<()> {
    let config = ServiceConfig {
        host: a.host,
        port: a.port,
        cache_frames: a.cache_frames,
        queue_capacity: a.queue,
        worker_threads: threads,
        ..ServiceConfig::default()
    };
    service::serve_blocking(config)
}

/// Loads a clip and its disparity with matching lengths.
pub fn load_clip_pair(frames: &Path, disparity: &Path) -> Result<(VideoClip, Vec<DisparityMap>)> {
    let clip = io::load_frame_sequence(frames)?;
    let maps = io::load_disparity_sequence(disparity)?;
    if maps.len() != clip.len() {
        return Err(Error::LengthMismatch {
            expected: clip.len(),
            found: maps.len(),
        });
    }
    Ok((clip, maps))
}
