//! Synthetic paired all-in-focus / bokeh video generation.
//!
//! RGBA foreground sprites move along linear 3D trajectories over a planar
//! background. Every layer carries a disparity plane, the all-in-focus frame
//! is the pinhole composite and the bokeh frame comes from the thin-lens
//! reference renderer.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::{self, BitDepth, DisparityFormat, Sidecar};
use crate::model::{BokehParams, DisparityMap, FocalSpec, Frame, RgbaImage, VideoClip};
use crate::raytrace::{self, LensConfig, PlanarLayer, PlanarScene, Plane};
use crate::rng;

pub const MANIFEST_NAME: &str = "manifest.tsv";
pub const META_NAME: &str = "meta.txt";

/// Disparity slots for up to three foregrounds, back to front.
const FOREGROUND_SLOTS: [(f64, f64); 3] = [(0.4, 0.5), (0.6, 0.7), (0.8, 0.9)];
const BACKGROUND_RANGE: (f64, f64) = (0.05, 0.3);
/// Relative depth scale range; narrow enough that slots never cross.
const Z_RANGE: (f64, f64) = (0.95, 1.05);

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetConfig {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub samples_per_pixel: usize,
    /// Layer count recorded for the layered renderer.
    pub layers: usize,
    pub strength_range: (f64, f64),
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            width: 1024,
            height: 576,
            frames: 25,
            samples_per_pixel: raytrace::DEFAULT_SAMPLES_PER_PIXEL,
            layers: 16,
            strength_range: (2.0, 30.0),
        }
    }
}

impl DatasetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::invalid("dataset dimensions must be positive"));
        }
        if self.frames == 0 {
            return Err(Error::invalid("frames must be >= 1"));
        }
        if self.samples_per_pixel == 0 {
            return Err(Error::invalid("samples_per_pixel must be >= 1"));
        }
        let (lo, hi) = self.strength_range;
        if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
            return Err(Error::invalid("strength range must satisfy 0 <= min <= max"));
        }
        Ok(())
    }
}

/// Background and foreground asset files.
#[derive(Debug, Clone, PartialEq)]
pub struct AssetCatalog {
    pub backgrounds: Vec<PathBuf>,
    pub foregrounds: Vec<PathBuf>,
}

impl AssetCatalog {
    /// Reads `backgrounds/` and `foregrounds/` PNG listings under `root`.
    pub fn from_dir(root: &Path) -> Result<Self> {
        let list = |sub: &str| -> Result<Vec<PathBuf>> {
            let dir = root.join(sub);
            let entries = std::fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))?;
            let mut files = Vec::new();
            for entry in entries {
                let path = entry.map_err(|e| Error::io(&dir, e))?.path();
                if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) {
                    files.push(path);
                }
            }
            files.sort();
            Ok(files)
        };
        Ok(AssetCatalog {
            backgrounds: list("backgrounds")?,
            foregrounds: list("foregrounds")?,
        })
    }

    fn check(&self) -> Result<()> {
        if self.backgrounds.is_empty() {
            return Err(Error::Empty("asset catalog has no backgrounds"));
        }
        if self.foregrounds.is_empty() {
            return Err(Error::Empty("asset catalog has no foregrounds"));
        }
        Ok(())
    }
}

/// Writes a small procedural catalog: textured backgrounds and soft-edged sprites.
pub fn write_synthetic_catalog(
    root: &Path,
    backgrounds: usize,
    foregrounds: usize,
    seed: u64,
) -> Result<AssetCatalog> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bg_dir = root.join("backgrounds");
    let fg_dir = root.join("foregrounds");
    for dir in [&bg_dir, &fg_dir] {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    for i in 0..backgrounds {
        let (fx, fy, phase): (f64, f64, f64) = (
            rng.random_range(0.02..0.12),
            rng.random_range(0.02..0.12),
            rng.random_range(0.0..6.28),
        );
        let tint: [f64; 3] = [rng.random(), rng.random(), rng.random()];
        let frame = Frame::from_fn(256, 144, |x, y| {
            let (x, y) = (x as f64, y as f64);
            let wave = 0.5 + 0.25 * (fx * x + phase).sin() + 0.25 * (fy * y - phase).cos();
            let check = if ((x / 16.0) as i64 + (y / 16.0) as i64) % 2 == 0 { 0.15 } else { 0.0 };
            let v = |k: usize| (0.2 + 0.6 * tint[k] * wave + check) as f32;
            [v(0), v(1), v(2)]
        })?;
        io::write_frame(&frame, &bg_dir.join(format!("bg_{i:03}.png")), BitDepth::Eight)?;
    }
    for i in 0..foregrounds {
        let color: [f32; 3] = [rng.random(), rng.random(), rng.random()];
        let (rx, ry): (f64, f64) = (rng.random_range(0.6..1.0), rng.random_range(0.6..1.0));
        let size = 96usize;
        let half = (size as f64 - 1.0) / 2.0;
        let mut data = Vec::with_capacity(size * size);
        for y in 0..size {
            for x in 0..size {
                let nx = (x as f64 - half) / (half * rx);
                let ny = (y as f64 - half) / (half * ry);
                let r = (nx * nx + ny * ny).sqrt();
                let alpha = ((1.0 - r) * 12.0).clamp(0.0, 1.0) as f32;
                let stripe = if (x / 8 + y / 8) % 2 == 0 { 1.0 } else { 0.6 };
                data.push([color[0] * stripe, color[1] * stripe, color[2] * stripe, alpha]);
            }
        }
        let sprite = RgbaImage::from_straight(size, size, &data)?;
        io::write_rgba(&sprite, &fg_dir.join(format!("fg_{i:03}.png")))?;
    }
    AssetCatalog::from_dir(root)
}

/// Linear motion between two `(x px, y px, z scale)` offsets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySpec {
    pub start: [f64; 3],
    pub end: [f64; 3],
    pub frames: usize,
}

impl TrajectorySpec {
    pub fn new(start: [f64; 3], end: [f64; 3], frames: usize) -> Result<Self> {
        if frames == 0 {
            return Err(Error::invalid("trajectory needs at least one frame"));
        }
        if start.iter().chain(&end).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("trajectory endpoint"));
        }
        // Linear interpolation keeps z positive iff both endpoints are.
        if start[2] <= 0.0 || end[2] <= 0.0 {
            return Err(Error::invalid("trajectory z-scale must stay > 0"));
        }
        Ok(TrajectorySpec { start, end, frames })
    }

    pub fn at(&self, t: usize) -> [f64; 3] {
        let s = if self.frames > 1 {
            t as f64 / (self.frames - 1) as f64
        } else {
            0.0
        };
        std::array::from_fn(|k| self.start[k] + s * (self.end[k] - self.start[k]))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundSpec {
    pub asset: PathBuf,
    pub plane: Plane,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForegroundSpec {
    pub asset: PathBuf,
    pub trajectory: TrajectorySpec,
    /// Disparity plane at z = 1; scaled by z along the trajectory.
    pub plane: Plane,
    /// Sprite scale at z = 1.
    pub base_scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneRecipe {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub samples_per_pixel: usize,
    pub background: BackgroundSpec,
    /// Front to back.
    pub foregrounds: Vec<ForegroundSpec>,
    pub params: BokehParams,
    pub seed: u64,
}

/// Deterministic draw of a scene from `seed`.
pub fn sample_recipe(assets: &AssetCatalog, config: &DatasetConfig, seed: u64) -> Result<SceneRecipe> {
    assets.check()?;
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (config.width as f64, config.height as f64);

    let bg_asset = assets.backgrounds[rng.random_range(0..assets.backgrounds.len())].clone();
    let bg_center = rng.random_range(BACKGROUND_RANGE.0..=BACKGROUND_RANGE.1);
    let bg_plane = Plane::from_center_gradient(
        bg_center,
        bg_center * rng.random_range(-0.1..=0.1),
        bg_center * rng.random_range(-0.1..=0.1),
    )?;

    let count = rng.random_range(1..=3usize);
    let mut slots: Vec<usize> = (0..FOREGROUND_SLOTS.len()).collect();
    // Partial Fisher-Yates over the slot list.
    for i in 0..count {
        let j = rng.random_range(i..slots.len());
        slots.swap(i, j);
    }
    let mut chosen = slots[..count].to_vec();
    chosen.sort_unstable_by(|a, b| b.cmp(a));

    let mut foregrounds = Vec::with_capacity(count);
    for slot in chosen {
        let asset = assets.foregrounds[rng.random_range(0..assets.foregrounds.len())].clone();
        let (lo, hi) = FOREGROUND_SLOTS[slot];
        let center = rng.random_range(lo..=hi);
        let plane = Plane::from_center_gradient(
            center,
            center * rng.random_range(-0.03..=0.03),
            center * rng.random_range(-0.03..=0.03),
        )?;
        let endpoint = |rng: &mut ChaCha8Rng| {
            [
                rng.random_range(0.1 * w..=0.9 * w),
                rng.random_range(0.1 * h..=0.9 * h),
                rng.random_range(Z_RANGE.0..=Z_RANGE.1),
            ]
        };
        let start = endpoint(&mut rng);
        let end = endpoint(&mut rng);
        let trajectory = TrajectorySpec::new(start, end, config.frames)?;
        let base_scale = rng.random_range(0.2..=0.45) * h / 96.0;
        foregrounds.push(ForegroundSpec {
            asset,
            trajectory,
            plane,
            base_scale,
        });
    }

    // Focus lands on one of the layers as seen at frame 0.
    let mut candidates: Vec<f64> = foregrounds
        .iter()
        .map(|f| f.plane.eval_normalized(0.5, 0.5) * f.trajectory.at(0)[2])
        .collect();
    candidates.push(bg_plane.eval_normalized(0.5, 0.5));
    let focus = candidates[rng.random_range(0..candidates.len())];
    let (klo, khi) = config.strength_range;
    let strength = if khi > klo { rng.random_range(klo..=khi) } else { klo };

    Ok(SceneRecipe {
        width: config.width,
        height: config.height,
        frames: config.frames,
        samples_per_pixel: config.samples_per_pixel,
        background: BackgroundSpec {
            asset: bg_asset,
            plane: bg_plane,
        },
        foregrounds,
        params: BokehParams::new(FocalSpec::new(focus)?, strength, config.layers)?,
        seed,
    })
}

/// Bilinear sample with transparent outside the image.
fn sample_transparent(img: &RgbaImage, x: f64, y: f64) -> [f32; 4] {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = ((x - x0) as f32, (y - y0) as f32);
    let (x0, y0) = (x0 as i64, y0 as i64);
    let tap = |xi: i64, yi: i64| {
        if xi < 0 || yi < 0 || xi >= w || yi >= h {
            [0.0; 4]
        } else {
            img.get(xi as usize, yi as usize)
        }
    };
    let (a, b, c, d) = (tap(x0, y0), tap(x0 + 1, y0), tap(x0, y0 + 1), tap(x0 + 1, y0 + 1));
    std::array::from_fn(|k| {
        let top = a[k] + fx * (b[k] - a[k]);
        let bot = c[k] + fx * (d[k] - c[k]);
        top + fy * (bot - top)
    })
}

/// Stretches an image to `width` x `height` with edge-clamped bilinear sampling.
fn resample_to(img: &RgbaImage, width: usize, height: usize) -> Result<RgbaImage> {
    if img.dims() == (width, height) {
        return Ok(img.clone());
    }
    let (sx, sy) = (img.width() as f64 / width as f64, img.height() as f64 / height as f64);
    let mut data = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            data.push(img.sample_bilinear((x as f64 + 0.5) * sx - 0.5, (y as f64 + 0.5) * sy - 0.5));
        }
    }
    RgbaImage::new(width, height, data)
}

/// Loaded assets for one recipe.
struct SceneAssets {
    background: RgbaImage,
    sprites: Vec<RgbaImage>,
}

fn load_assets(recipe: &SceneRecipe) -> Result<SceneAssets> {
    let bg = io::read_frame(&recipe.background.asset)?;
    Ok(SceneAssets {
        background: resample_to(&RgbaImage::opaque(&bg), recipe.width, recipe.height)?,
        sprites: recipe
            .foregrounds
            .iter()
            .map(|f| io::read_rgba(&f.asset))
            .collect::<Result<_>>()?,
    })
}

fn scene_at(recipe: &SceneRecipe, assets: &SceneAssets, t: usize) -> Result<PlanarScene> {
    let (w, h) = (recipe.width, recipe.height);
    let mut layers = Vec::with_capacity(recipe.foregrounds.len() + 1);
    for (fg, sprite) in recipe.foregrounds.iter().zip(&assets.sprites) {
        let [cx, cy, z] = fg.trajectory.at(t);
        if z <= 0.0 {
            return Err(Error::invalid("trajectory z-scale must stay > 0"));
        }
        let scale = fg.base_scale * z;
        let (hx, hy) = ((sprite.width() as f64 - 1.0) / 2.0, (sprite.height() as f64 - 1.0) / 2.0);
        let mut data = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                let sx = (x as f64 - cx) / scale + hx;
                let sy = (y as f64 - cy) / scale + hy;
                data.push(sample_transparent(sprite, sx, sy));
            }
        }
        layers.push(PlanarLayer {
            rgba: RgbaImage::new(w, h, data)?,
            plane: fg.plane.scaled(z)?,
        });
    }
    layers.push(PlanarLayer {
        rgba: assets.background.clone(),
        plane: recipe.background.plane,
    });
    PlanarScene::new(layers)
}

/// Per-frame planar scenes for a recipe.
pub fn build_scenes(recipe: &SceneRecipe) -> Result<Vec<PlanarScene>> {
    let assets = load_assets(recipe)?;
    (0..recipe.frames)
        .into_par_iter()
        .map(|t| scene_at(recipe, &assets, t))
        .collect()
}

/// Disparity of the front-most layer whose alpha exceeds one half.
pub fn scene_disparity(scene: &PlanarScene) -> Result<DisparityMap> {
    let (w, h) = scene.dims();
    let layers = scene.layers();
    DisparityMap::from_fn(w, h, |x, y| {
        let layer = layers
            .iter()
            .find(|l| l.rgba.get(x, y)[3] > 0.5)
            .unwrap_or_else(|| layers.last().expect("non-empty scene"));
        layer.plane.eval(x as f64, y as f64, w, h) as f32
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesizedPair {
    pub aif: VideoClip,
    pub bokeh: VideoClip,
    pub disparity: Vec<DisparityMap>,
    pub meta: Sidecar,
}

pub fn recipe_meta(recipe: &SceneRecipe) -> Sidecar {
    let mut meta = Sidecar::default();
    meta.set("seed", recipe.seed);
    meta.set("width", recipe.width);
    meta.set("height", recipe.height);
    meta.set("frames", recipe.frames);
    meta.set("samples_per_pixel", recipe.samples_per_pixel);
    meta.set("focus_disparity", recipe.params.focal.disparity());
    meta.set("strength", recipe.params.strength);
    meta.set("layers", recipe.params.layers);
    let file_name = |p: &Path| p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    meta.set("background", file_name(&recipe.background.asset));
    let p = recipe.background.plane;
    meta.set("background_plane", format!("{} {} {}", p.a, p.b, p.c));
    meta.set("foreground_count", recipe.foregrounds.len());
    for (i, fg) in recipe.foregrounds.iter().enumerate() {
        let p = fg.plane;
        let (s, e) = (fg.trajectory.start, fg.trajectory.end);
        meta.set(&format!("foreground_{i}"), file_name(&fg.asset));
        meta.set(&format!("foreground_{i}_plane"), format!("{} {} {}", p.a, p.b, p.c));
        meta.set(&format!("foreground_{i}_scale"), fg.base_scale);
        meta.set(
            &format!("foreground_{i}_trajectory"),
            format!("{} {} {} -> {} {} {}", s[0], s[1], s[2], e[0], e[1], e[2]),
        );
    }
    meta
}

/// Renders the all-in-focus clip, the reference bokeh clip and per-frame disparity.
pub fn synthesize_pair(recipe: &SceneRecipe) -> Result<SynthesizedPair> {
    let scenes = build_scenes(recipe)?;
    let aif = scenes
        .par_iter()
        .map(raytrace::pinhole_composite)
        .collect::<Result<Vec<_>>>()?;
    let lens = LensConfig::new(recipe.params.strength, recipe.samples_per_pixel, recipe.seed)?;
    let bokeh = raytrace::render_reference_clip(&scenes, recipe.params.focal, &lens)?;
    let disparity = scenes
        .par_iter()
        .map(scene_disparity)
        .collect::<Result<Vec<_>>>()?;
    Ok(SynthesizedPair {
        aif: VideoClip::from_frames(aif)?,
        bokeh,
        disparity,
        meta: recipe_meta(recipe),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub id: String,
    /// Directory relative to the manifest.
    pub path: PathBuf,
    pub focus_disparity: f64,
    pub strength: f64,
    pub frames: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = String::from("id\tpath\tfocus_disparity\tstrength\tframes\tseed\n");
        for e in &self.entries {
            let _ = writeln!(
                text,
                "{}\t{}\t{}\t{}\t{}\t{}",
                e.id,
                e.path.display(),
                e.focus_disparity,
                e.strength,
                e.frames,
                e.seed
            );
        }
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let bad = |line: usize| Error::Decode {
            path: path.to_path_buf(),
            message: format!("malformed manifest line {line}"),
        };
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 6 {
                return Err(bad(i + 1));
            }
            entries.push(ManifestEntry {
                id: f[0].to_string(),
                path: PathBuf::from(f[1]),
                focus_disparity: f[2].parse().map_err(|_| bad(i + 1))?,
                strength: f[3].parse().map_err(|_| bad(i + 1))?,
                frames: f[4].parse().map_err(|_| bad(i + 1))?,
                seed: f[5].parse().map_err(|_| bad(i + 1))?,
            });
        }
        Ok(Manifest { entries })
    }
}

/// Subdirectories of one generated video.
pub const AIF_DIR: &str = "aif";
pub const BOKEH_DIR: &str = "bokeh";
pub const DISPARITY_DIR: &str = "disparity";

/// Generates `count` videos under `out_dir` and writes the manifest.
pub fn generate_testset(
    count: usize,
    assets: &AssetCatalog,
    config: &DatasetConfig,
    master_seed: u64,
    out_dir: &Path,
) -> Result<Manifest> {
    if count == 0 {
        return Err(Error::invalid("count must be >= 1"));
    }
    assets.check()?;
    config.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let entries = (0..count)
        .into_par_iter()
        .map(|i| {
            let seed = rng::derive_seed(master_seed, i as u64);
            let recipe = sample_recipe(assets, config, seed)?;
            let pair = synthesize_pair(&recipe)?;
            let id = format!("video_{i:04}");
            let dir = out_dir.join(&id);
            io::save_frame_sequence(&pair.aif, &dir.join(AIF_DIR), BitDepth::Eight)?;
            io::save_frame_sequence(&pair.bokeh, &dir.join(BOKEH_DIR), BitDepth::Eight)?;
            io::save_disparity_sequence(&pair.disparity, &dir.join(DISPARITY_DIR), DisparityFormat::Pfm)?;
            let mut meta = pair.meta;
            meta.set("id", &id);
            meta.write(&dir.join(META_NAME))?;
            Ok(ManifestEntry {
                path: PathBuf::from(&id),
                id,
                focus_disparity: recipe.params.focal.disparity(),
                strength: recipe.params.strength,
                frames: recipe.frames,
                seed,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = Manifest { entries };
    manifest.write(&out_dir.join(MANIFEST_NAME))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> DatasetConfig {
        DatasetConfig {
            width: 48,
            height: 32,
            frames: 3,
            samples_per_pixel: 4,
            layers: 8,
            strength_range: (2.0, 30.0),
        }
    }

    fn catalog(dir: &Path, bg: usize, fg: usize) -> AssetCatalog {
        write_synthetic_catalog(dir, bg, fg, 11).unwrap()
    }

    #[test]
    fn recipe_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let cat = catalog(dir.path(), 2, 3);
        let a = sample_recipe(&cat, &tiny(), 99).unwrap();
        let b = sample_recipe(&cat, &tiny(), 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn neighbouring_seeds_differ() {
        let dir = tempfile::tempdir().unwrap();
        let cat = catalog(dir.path(), 2, 3);
        for s in 0..100u64 {
            let a = sample_recipe(&cat, &tiny(), s).unwrap();
            let b = sample_recipe(&cat, &tiny(), s + 1).unwrap();
            assert_ne!(a, b, "seed {s}");
        }
    }

    #[test]
    fn recipe_ranges() {
        let dir = tempfile::tempdir().unwrap();
        let cat = catalog(dir.path(), 1, 1);
        for s in 0..50u64 {
            let r = sample_recipe(&cat, &tiny(), s).unwrap();
            assert_eq!(r.background.asset, cat.backgrounds[0]);
            assert!(r.foregrounds.iter().all(|f| f.asset == cat.foregrounds[0]));
            assert!((1..=3).contains(&r.foregrounds.len()));
            assert!((2.0..=30.0).contains(&r.params.strength));
            let mut centers: Vec<f64> = r
                .foregrounds
                .iter()
                .map(|f| f.plane.eval_normalized(0.5, 0.5) * f.trajectory.at(0)[2])
                .collect();
            centers.push(r.background.plane.eval_normalized(0.5, 0.5));
            assert!(centers.iter().any(|&c| c == r.params.focal.disparity()));
            for f in &r.foregrounds {
                for t in 0..r.frames {
                    let [x, y, z] = f.trajectory.at(t);
                    assert!(x >= 0.0 && x < r.width as f64 && y >= 0.0 && y < r.height as f64 && z > 0.0);
                }
            }
        }
    }

    #[test]
    fn empty_catalog_rejected() {
        let cat = AssetCatalog {
            backgrounds: vec![],
            foregrounds: vec![PathBuf::from("x.png")],
        };
        assert!(sample_recipe(&cat, &tiny(), 0).is_err());
    }

    #[test]
    fn zero_strength_bokeh_matches_aif() {
        let dir = tempfile::tempdir().unwrap();
        let cat = catalog(dir.path(), 1, 2);
        let config = DatasetConfig {
            strength_range: (0.0, 0.0),
            ..tiny()
        };
        let pair = synthesize_pair(&sample_recipe(&cat, &config, 3).unwrap()).unwrap();
        assert_eq!(pair.aif, pair.bokeh);
    }

    #[test]
    fn static_trajectory_gives_static_frames() {
        let dir = tempfile::tempdir().unwrap();
        let cat = catalog(dir.path(), 1, 1);
        let mut recipe = sample_recipe(&cat, &tiny(), 5).unwrap();
        for f in &mut recipe.foregrounds {
            f.trajectory.end = f.trajectory.start;
        }
        let pair = synthesize_pair(&recipe).unwrap();
        let frames = pair.aif.frames();
        assert!(frames.iter().all(|f| f == &frames[0]));
    }

    #[test]
    fn zero_z_scale_rejected() {
        assert!(TrajectorySpec::new([0.0, 0.0, 1.0], [0.0, 0.0, 0.0], 3).is_err());
        assert!(TrajectorySpec::new([0.0, 0.0, 1.0], [0.0, 0.0, 1.0], 0).is_err());
    }

    #[test]
    fn testset_rejects_zero_count() {
        let dir = tempfile::tempdir().unwrap();
        let cat = catalog(dir.path(), 1, 1);
        assert!(generate_testset(0, &cat, &tiny(), 1, &dir.path().join("out")).is_err());
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = Manifest {
            entries: vec![ManifestEntry {
                id: "video_0000".into(),
                path: "video_0000".into(),
                focus_disparity: 0.45,
                strength: 12.5,
                frames: 25,
                seed: 42,
            }],
        };
        let p = dir.path().join(MANIFEST_NAME);
        m.write(&p).unwrap();
        assert_eq!(Manifest::read(&p).unwrap(), m);
    }
}
