//! Thin-lens Monte Carlo reference renderer for layered planar scenes.
//!
//! Each layer is an RGBA image whose disparity varies as a plane over the
//! image, `d(x, y) = (1 - a x - b y) / c` in normalized coordinates. For a
//! lens sample `(u, v)` on a disk of radius `K`, a layer at disparity `d` is
//! seen displaced by `(u, v) * (d - d_f)` pixels, which spreads a point over a
//! disk of radius `K |d - d_f|`. Samples composite front to back.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{FocalSpec, Frame, RgbaImage, VideoClip};
use crate::rng;

/// Default lens sample count for dataset generation.
pub const DEFAULT_SAMPLES_PER_PIXEL: usize = 128;

/// Disparity plane `d = (1 - a x - b y) / c` over normalized pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Plane {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && c.is_finite()) {
            return Err(Error::NonFinite("plane coefficients"));
        }
        if c == 0.0 {
            return Err(Error::invalid("plane coefficient c must be non-zero"));
        }
        Ok(Plane { a, b, c })
    }

    /// Fronto-parallel plane at constant disparity.
    pub fn constant(disparity: f64) -> Result<Self> {
        Plane::new(0.0, 0.0, 1.0 / disparity)
    }

    /// Plane with disparity `center` at the image center and the given change
    /// across the full image width and height.
    pub fn from_center_gradient(center: f64, dx: f64, dy: f64) -> Result<Self> {
        let origin = center - 0.5 * dx - 0.5 * dy;
        if origin == 0.0 {
            return Err(Error::invalid("plane passes through zero disparity at the origin"));
        }
        let c = 1.0 / origin;
        Plane::new(-dx * c, -dy * c, c)
    }

    /// Disparity at normalized coordinates.
    #[inline]
    pub fn eval_normalized(&self, xn: f64, yn: f64) -> f64 {
        (1.0 - self.a * xn - self.b * yn) / self.c
    }

    /// Disparity at pixel coordinates of a `width` x `height` image.
    #[inline]
    pub fn eval(&self, x: f64, y: f64, width: usize, height: usize) -> f64 {
        self.eval_normalized((x + 0.5) / width as f64, (y + 0.5) / height as f64)
    }

    /// Checks the plane is finite and positive over the whole image rectangle.
    pub fn validate_positive(&self) -> Result<()> {
        for (x, y) in [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)] {
            let d = self.eval_normalized(x, y);
            if !d.is_finite() {
                return Err(Error::NonFinite("plane disparity"));
            }
            if d <= 0.0 {
                return Err(Error::invalid(format!(
                    "plane disparity {d} is not positive at normalized corner ({x}, {y})"
                )));
            }
        }
        Ok(())
    }

    /// Scales disparity by `factor`, as when the layer moves closer by that ratio.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Plane::new(self.a, self.b, self.c / factor)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanarLayer {
    /// Premultiplied linear RGBA.
    pub rgba: RgbaImage,
    pub plane: Plane,
}

/// Front-to-back ordered layers; the last one is an opaque background.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarScene {
    width: usize,
    height: usize,
    layers: Vec<PlanarLayer>,
}

impl PlanarScene {
    pub fn new(layers: Vec<PlanarLayer>) -> Result<Self> {
        let first = layers.first().ok_or(Error::Empty("scene has no layers"))?;
        let (width, height) = first.rgba.dims();
        for layer in &layers {
            if layer.rgba.dims() != (width, height) {
                return Err(Error::dims((width, height), layer.rgba.dims()));
            }
            layer.plane.validate_positive()?;
        }
        let background = layers.last().expect("non-empty");
        if background.rgba.data().iter().any(|p| p[3] < 1.0) {
            return Err(Error::invalid("background layer must be fully opaque"));
        }
        let centers: Vec<f64> = layers
            .iter()
            .map(|l| l.plane.eval_normalized(0.5, 0.5))
            .collect();
        if centers.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::invalid(
                "layers must be ordered front to back (strictly decreasing disparity at the image center)",
            ));
        }
        Ok(PlanarScene {
            width,
            height,
            layers,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn layers(&self) -> &[PlanarLayer] {
        &self.layers
    }

    /// Loads a scene description: one layer per line, front to back,
    /// `<image path> <a> <b> <c> [<order>]`. Paths are relative to the file.
    /// When the optional order column is present, layers are sorted by it.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut entries: Vec<(f64, usize, PathBuf, Plane)> = Vec::new();
        for (line_no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: &str| Error::Decode {
                path: path.to_path_buf(),
                message: format!("line {}: {msg}", line_no + 1),
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 && fields.len() != 5 {
                return Err(bad("expected `<image> <a> <b> <c> [<order>]`"));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad("bad number"));
            let plane = Plane::new(num(fields[1])?, num(fields[2])?, num(fields[3])?)?;
            let order = if fields.len() == 5 {
                num(fields[4])?
            } else {
                entries.len() as f64
            };
            entries.push((order, entries.len(), base.join(fields[0]), plane));
        }
        entries.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let layers = entries
            .into_iter()
            .map(|(_, _, image, plane)| {
                Ok(PlanarLayer {
                    rgba: crate::io::read_rgba(&image)?,
                    plane,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        PlanarScene::new(layers)
    }
}

/// Writes a scene description referencing already-saved layer images.
pub fn write_scene_file(path: &Path, entries: &[(String, Plane)]) -> Result<()> {
    let mut text = String::from("# image a b c (front to back)\n");
    for (image, p) in entries {
        text.push_str(&format!("{image} {} {} {}\n", p.a, p.b, p.c));
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LensConfig {
    /// Lens radius in blur-per-disparity units; the CoC radius is `K |d - d_f|`.
    pub strength: f64,
    pub samples_per_pixel: usize,
    pub seed: u64,
}

impl LensConfig {
    pub fn new(strength: f64, samples_per_pixel: usize, seed: u64) -> Result<Self> {
        let lens = LensConfig {
            strength,
            samples_per_pixel,
            seed,
        };
        lens.validate()?;
        Ok(lens)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.strength.is_finite() || self.strength < 0.0 {
            return Err(Error::invalid("lens strength must be finite and >= 0"));
        }
        if self.samples_per_pixel < 1 {
            return Err(Error::invalid("samples_per_pixel must be >= 1"));
        }
        Ok(())
    }
}

/// Composites the scene as seen through one lens offset (in pixels per unit
/// disparity difference).
#[inline]
fn trace(scene: &PlanarScene, df: f64, x: f64, y: f64, lens: (f64, f64)) -> [f64; 3] {
    let (w, h) = (scene.width, scene.height);
    let mut color = [0.0f64; 3];
    let mut alpha = 0.0f64;
    for layer in &scene.layers {
        let (sx, sy) = if lens == (0.0, 0.0) {
            (x, y)
        } else {
            // One fixed-point step so tilted planes are hit where the shifted ray lands.
            let d0 = layer.plane.eval(x, y, w, h);
            let (qx, qy) = (x + lens.0 * (d0 - df), y + lens.1 * (d0 - df));
            let d1 = layer.plane.eval(qx, qy, w, h);
            (x + lens.0 * (d1 - df), y + lens.1 * (d1 - df))
        };
        let s = layer.rgba.sample_bilinear(sx, sy);
        let t = 1.0 - alpha;
        color[0] += t * s[0] as f64;
        color[1] += t * s[1] as f64;
        color[2] += t * s[2] as f64;
        alpha += t * s[3] as f64;
        if alpha >= 1.0 {
            break;
        }
    }
    color
}

/// Monte Carlo estimate for one pixel of frame `t`.
pub fn render_pixel(
    scene: &PlanarScene,
    focal: FocalSpec,
    lens: &LensConfig,
    t: u64,
    x: usize,
    y: usize,
) -> [f64; 3] {
    let df = focal.disparity();
    let (fx, fy) = (x as f64, y as f64);
    if lens.strength == 0.0 {
        return trace(scene, df, fx, fy, (0.0, 0.0));
    }
    let mut sum = [0.0f64; 3];
    for s in 0..lens.samples_per_pixel as u64 {
        let key = [lens.seed, t, x as u64, y as u64, s];
        let u = rng::unit_f64(rng::hash_key(&[key[0], key[1], key[2], key[3], key[4], 0]));
        let v = rng::unit_f64(rng::hash_key(&[key[0], key[1], key[2], key[3], key[4], 1]));
        let (lx, ly) = rng::concentric_disk(u, v);
        let c = trace(scene, df, fx, fy, (lx * lens.strength, ly * lens.strength));
        for i in 0..3 {
            sum[i] += c[i];
        }
    }
    let n = lens.samples_per_pixel as f64;
    [sum[0] / n, sum[1] / n, sum[2] / n]
}

fn render_frame_at(
    scene: &PlanarScene,
    focal: FocalSpec,
    lens: &LensConfig,
    t: u64,
) -> Result<Frame> {
    let (w, h) = scene.dims();
    let data: Vec<f32> = (0..h)
        .into_par_iter()
        .flat_map_iter(|y| {
            (0..w).flat_map(move |x| {
                let c = render_pixel(scene, focal, lens, t, x, y);
                [c[0] as f32, c[1] as f32, c[2] as f32]
            })
        })
        .collect();
    Frame::new(w, h, data)
}

/// Renders a single frame (frame index 0 in the sample key).
pub fn render_reference(scene: &PlanarScene, focal: FocalSpec, lens: &LensConfig) -> Result<Frame> {
    lens.validate()?;
    render_frame_at(scene, focal, lens, 0)
}

/// Front-to-back composite of the unshifted layers.
pub fn pinhole_composite(scene: &PlanarScene) -> Result<Frame> {
    let (w, h) = scene.dims();
    let data: Vec<f32> = (0..h)
        .into_par_iter()
        .flat_map_iter(|y| {
            (0..w).flat_map(move |x| {
                let c = trace(scene, 1.0, x as f64, y as f64, (0.0, 0.0));
                [c[0] as f32, c[1] as f32, c[2] as f32]
            })
        })
        .collect();
    Frame::new(w, h, data)
}

/// Renders one frame per scene; frame `t` draws its lens samples from keys
/// `(seed, t, x, y, sample)`, so output is independent of scheduling.
pub fn render_reference_clip(
    scenes: &[PlanarScene],
    focal: FocalSpec,
    lens: &LensConfig,
) -> Result<VideoClip> {
    lens.validate()?;
    let first = scenes.first().ok_or(Error::Empty("no scenes to render"))?;
    if let Some(bad) = scenes.iter().find(|s| s.dims() != first.dims()) {
        return Err(Error::dims(first.dims(), bad.dims()));
    }
    let frames = scenes
        .par_iter()
        .enumerate()
        .map(|(t, s)| render_frame_at(s, focal, lens, t as u64))
        .collect::<Result<Vec<_>>>()?;
    VideoClip::from_frames(frames)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layer_from_fn(
        w: usize,
        h: usize,
        plane: Plane,
        f: impl Fn(usize, usize) -> [f32; 4],
    ) -> PlanarLayer {
        let mut data = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                data.push(f(x, y));
            }
        }
        PlanarLayer {
            rgba: RgbaImage::from_straight(w, h, &data).unwrap(),
            plane,
        }
    }

    fn checker(x: usize, y: usize) -> [f32; 4] {
        let v = if (x / 3 + y / 3) % 2 == 0 { 0.9 } else { 0.1 };
        [v, 0.5 * v, 1.0 - v, 1.0]
    }

    #[test]
    fn plane_from_center_gradient() {
        let p = Plane::from_center_gradient(0.3, 0.1, -0.05).unwrap();
        assert!((p.eval_normalized(0.5, 0.5) - 0.3).abs() < 1e-12);
        assert!((p.eval_normalized(1.0, 0.5) - p.eval_normalized(0.0, 0.5) - 0.1).abs() < 1e-12);
        assert!(Plane::new(0.0, 0.0, 0.0).is_err());
        assert!(Plane::new(2.0, 0.0, 1.0).unwrap().validate_positive().is_err());
    }

    #[test]
    fn scene_validation() {
        let fg = layer_from_fn(8, 8, Plane::constant(0.8).unwrap(), |_, _| [1.0, 0.0, 0.0, 0.5]);
        let bg = layer_from_fn(8, 8, Plane::constant(0.2).unwrap(), checker);
        assert!(PlanarScene::new(vec![]).is_err());
        assert!(PlanarScene::new(vec![bg.clone(), fg.clone()]).is_err());
        assert!(PlanarScene::new(vec![fg.clone()]).is_err());
        assert!(PlanarScene::new(vec![fg, bg]).is_ok());
    }

    #[test]
    fn zero_strength_equals_pinhole() {
        let fg = layer_from_fn(16, 12, Plane::constant(0.8).unwrap(), |x, _| {
            [0.2, 0.7, 0.1, if x > 6 { 1.0 } else { 0.3 }]
        });
        let bg = layer_from_fn(16, 12, Plane::constant(0.2).unwrap(), checker);
        let scene = PlanarScene::new(vec![fg, bg]).unwrap();
        let pin = pinhole_composite(&scene).unwrap();
        for spp in [1, 7, 64] {
            let lens = LensConfig::new(0.0, spp, 5).unwrap();
            let out = render_reference(&scene, FocalSpec::new(0.5).unwrap(), &lens).unwrap();
            assert_eq!(out, pin);
        }
    }

    #[test]
    fn constant_layer_renders_constant() {
        let bg = layer_from_fn(12, 10, Plane::from_center_gradient(0.3, 0.1, 0.05).unwrap(), |_, _| {
            [0.3, 0.6, 0.9, 1.0]
        });
        let scene = PlanarScene::new(vec![bg]).unwrap();
        let lens = LensConfig::new(20.0, 32, 1).unwrap();
        let out = render_reference(&scene, FocalSpec::new(0.9).unwrap(), &lens).unwrap();
        for p in out.data().chunks_exact(3) {
            assert!((p[0] - 0.3).abs() <= 1e-6 && (p[1] - 0.6).abs() <= 1e-6 && (p[2] - 0.9).abs() <= 1e-6);
        }
    }

    #[test]
    fn in_focus_layer_is_unchanged() {
        let bg = layer_from_fn(14, 9, Plane::constant(0.5).unwrap(), checker);
        let scene = PlanarScene::new(vec![bg]).unwrap();
        let pin = pinhole_composite(&scene).unwrap();
        let lens = LensConfig::new(30.0, 16, 2).unwrap();
        let out = render_reference(&scene, FocalSpec::new(0.5).unwrap(), &lens).unwrap();
        assert!(out.max_abs_diff(&pin) <= 1.0 / 255.0);
    }

    #[test]
    fn clip_rejects_empty_and_mixed() {
        let lens = LensConfig::new(1.0, 1, 0).unwrap();
        let f = FocalSpec::new(0.5).unwrap();
        assert!(render_reference_clip(&[], f, &lens).is_err());
        let a = PlanarScene::new(vec![layer_from_fn(4, 4, Plane::constant(0.2).unwrap(), checker)]).unwrap();
        let b = PlanarScene::new(vec![layer_from_fn(5, 4, Plane::constant(0.2).unwrap(), checker)]).unwrap();
        assert!(render_reference_clip(&[a, b], f, &lens).is_err());
    }

    #[test]
    fn scene_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let fg = layer_from_fn(6, 5, Plane::constant(0.8).unwrap(), |x, _| [0.5, 0.5, 0.5, if x < 3 { 1.0 } else { 0.0 }]);
        let bg = layer_from_fn(6, 5, Plane::from_center_gradient(0.2, 0.02, 0.0).unwrap(), checker);
        crate::io::write_rgba(&fg.rgba, &dir.path().join("fg.png")).unwrap();
        crate::io::write_rgba(&bg.rgba, &dir.path().join("bg.png")).unwrap();
        let scene_path = dir.path().join("scene.txt");
        write_scene_file(&scene_path, &[("fg.png".into(), fg.plane), ("bg.png".into(), bg.plane)]).unwrap();
        let scene = PlanarScene::load(&scene_path).unwrap();
        assert_eq!(scene.layers().len(), 2);
        assert_eq!(scene.layers()[1].plane, bg.plane);
    }
}
