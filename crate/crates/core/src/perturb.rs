//! Disparity corruptions used to probe renderer robustness: elastic warps,
//! Perlin noise and gray-scale morphology.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::blur::gaussian_blur_plane;
use crate::error::{Error, Result};
use crate::model::DisparityMap;
use crate::rng;

/// Smallest disparity a perturbation may produce.
pub const MIN_DISPARITY: f32 = 1e-6;

/// Stream tags keep independent noise fields apart under one seed.
const TAG_DX: u64 = 1;
const TAG_DY: u64 = 2;
const TAG_APPLY: u64 = 3;

/// Smoothed displacement fields with max |component| equal to `alpha`.
pub fn elastic_displacement(
    width: usize,
    height: usize,
    alpha: f64,
    sigma: f64,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid("elastic sigma must be > 0"));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::invalid("elastic alpha must be >= 0"));
    }
    let field = |tag: u64| {
        let noise: Vec<f64> = (0..width * height)
            .map(|i| {
                let (x, y) = ((i % width) as u64, (i / width) as u64);
                2.0 * rng::uniform(&[seed, tag, x, y]) - 1.0
            })
            .collect();
        let mut smooth = gaussian_blur_plane(&noise, width, height, sigma);
        let peak = smooth.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let k = if peak > 0.0 { alpha / peak } else { 0.0 };
        smooth.iter_mut().for_each(|v| *v *= k);
        smooth
    };
    Ok((field(TAG_DX), field(TAG_DY)))
}

fn sample_clamped(d: &DisparityMap, x: f64, y: f64) -> f32 {
    let (w, h) = d.dims();
    let x = x.clamp(0.0, (w - 1) as f64);
    let y = y.clamp(0.0, (h - 1) as f64);
    let (x0, y0) = (x.floor() as usize, y.floor() as usize);
    let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
    let (fx, fy) = ((x - x0 as f64) as f32, (y - y0 as f64) as f32);
    let top = d.get(x0, y0) + fx * (d.get(x1, y0) - d.get(x0, y0));
    let bot = d.get(x0, y1) + fx * (d.get(x1, y1) - d.get(x0, y1));
    top + fy * (bot - top)
}

/// Warps `d` by a random smooth displacement of at most `alpha` pixels.
pub fn elastic_transform(d: &DisparityMap, alpha: f64, sigma: f64, seed: u64) -> Result<DisparityMap> {
    let (w, h) = d.dims();
    let (dx, dy) = elastic_displacement(w, h, alpha, sigma, seed)?;
    if alpha == 0.0 {
        return Ok(d.clone());
    }
    DisparityMap::from_fn(w, h, |x, y| {
        let i = y * w + x;
        sample_clamped(d, x as f64 + dx[i], y as f64 + dy[i]).max(MIN_DISPARITY)
    })
}

/// Seeded 2D gradient noise with lattice spacing `scale` pixels.
#[derive(Debug, Clone)]
pub struct Perlin {
    perm: [u8; 512],
    scale: f64,
}

impl Perlin {
    pub fn new(scale: f64, seed: u64) -> Result<Self> {
        if !(scale >= 2.0 && scale.is_finite()) {
            return Err(Error::invalid("perlin scale must be >= 2"));
        }
        let mut p: Vec<u8> = (0..=255).collect();
        p.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let perm = std::array::from_fn(|i| p[i & 255]);
        Ok(Perlin { perm, scale })
    }

    fn gradient(&self, ix: i64, iy: i64, fx: f64, fy: f64) -> f64 {
        let h = self.perm[self.perm[(ix & 255) as usize] as usize + (iy & 255) as usize] & 7;
        const D: f64 = std::f64::consts::FRAC_1_SQRT_2;
        let (gx, gy) = match h {
            0 => (1.0, 0.0),
            1 => (-1.0, 0.0),
            2 => (0.0, 1.0),
            3 => (0.0, -1.0),
            4 => (D, D),
            5 => (-D, D),
            6 => (D, -D),
            _ => (-D, -D),
        };
        gx * fx + gy * fy
    }

    /// Noise at pixel coordinates, in [-1, 1]; zero on lattice points.
    pub fn at(&self, x: f64, y: f64) -> f64 {
        let (x, y) = (x / self.scale, y / self.scale);
        let (x0, y0) = (x.floor(), y.floor());
        let (fx, fy) = (x - x0, y - y0);
        let (ix, iy) = (x0 as i64, y0 as i64);
        let fade = |t: f64| t * t * t * (t * (t * 6.0 - 15.0) + 10.0);
        let (u, v) = (fade(fx), fade(fy));
        let n00 = self.gradient(ix, iy, fx, fy);
        let n10 = self.gradient(ix + 1, iy, fx - 1.0, fy);
        let n01 = self.gradient(ix, iy + 1, fx, fy - 1.0);
        let n11 = self.gradient(ix + 1, iy + 1, fx - 1.0, fy - 1.0);
        let a = n00 + u * (n10 - n00);
        let b = n01 + u * (n11 - n01);
        ((a + v * (b - a)) * std::f64::consts::SQRT_2).clamp(-1.0, 1.0)
    }
}

/// Adds `amplitude * noise`, clamping to stay positive.
pub fn perlin_noise_add(d: &DisparityMap, amplitude: f64, scale: f64, seed: u64) -> Result<DisparityMap> {
    if !(amplitude >= 0.0 && amplitude.is_finite()) {
        return Err(Error::invalid("perlin amplitude must be >= 0"));
    }
    let noise = Perlin::new(scale, seed)?;
    if amplitude == 0.0 {
        return Ok(d.clone());
    }
    let (w, h) = d.dims();
    let raw: Vec<f32> = (0..w * h)
        .map(|i| {
            let (x, y) = (i % w, i / w);
            (d.get(x, y) as f64 + amplitude * noise.at(x as f64, y as f64)) as f32
        })
        .collect();
    if raw.iter().all(|&v| v <= 0.0) {
        return Err(Error::invalid("perlin noise drives every disparity non-positive"));
    }
    DisparityMap::new(w, h, raw.into_iter().map(|v| v.max(MIN_DISPARITY)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MorphOp {
    Dilate,
    Erode,
    Open,
    Close,
}

impl std::str::FromStr for MorphOp {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dilate" => Ok(MorphOp::Dilate),
            "erode" => Ok(MorphOp::Erode),
            "open" => Ok(MorphOp::Open),
            "close" => Ok(MorphOp::Close),
            other => Err(Error::invalid(format!("unknown morphology op `{other}`"))),
        }
    }
}

fn disk_offsets(radius: usize) -> Vec<(isize, isize)> {
    let r = radius as isize;
    let mut out = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r * r {
                out.push((dx, dy));
            }
        }
    }
    out
}

/// Neighbourhood extreme over in-bounds disk offsets.
fn rank_filter(d: &DisparityMap, offsets: &[(isize, isize)], max: bool) -> DisparityMap {
    let (w, h) = d.dims();
    DisparityMap::from_fn(w, h, |x, y| {
        let mut acc = d.get(x, y);
        for &(dx, dy) in offsets {
            let (nx, ny) = (x as isize + dx, y as isize + dy);
            if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                continue;
            }
            let v = d.get(nx as usize, ny as usize);
            acc = if max { acc.max(v) } else { acc.min(v) };
        }
        acc
    })
    .expect("rank filter preserves positivity")
}

/// Gray-scale morphology with a disk structuring element.
pub fn morphological(d: &DisparityMap, op: MorphOp, radius: usize) -> Result<DisparityMap> {
    if radius < 1 {
        return Err(Error::invalid("morphology radius must be >= 1"));
    }
    let se = disk_offsets(radius);
    Ok(match op {
        MorphOp::Dilate => rank_filter(d, &se, true),
        MorphOp::Erode => rank_filter(d, &se, false),
        MorphOp::Open => rank_filter(&rank_filter(d, &se, false), &se, true),
        MorphOp::Close => rank_filter(&rank_filter(d, &se, true), &se, false),
    })
}

/// Gaussian smoothing of disparity, the blur corruption of baseline comparisons.
pub fn gaussian_blur(d: &DisparityMap, sigma: f64) -> Result<DisparityMap> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::invalid("blur sigma must be >= 0"));
    }
    let (w, h) = d.dims();
    let values: Vec<f64> = d.values().iter().map(|&v| v as f64).collect();
    let out = gaussian_blur_plane(&values, w, h, sigma);
    DisparityMap::new(w, h, out.into_iter().map(|v| (v as f32).max(MIN_DISPARITY)).collect())
}

/// Magnitudes for the standard robustness benchmark.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbPreset {
    pub elastic_alpha: f64,
    pub elastic_sigma: f64,
    /// Perlin amplitude as a fraction of the clip disparity range.
    pub perlin_fraction: f64,
    pub perlin_scale: f64,
    pub close_radius: usize,
    /// Chance that a given clip is perturbed at all.
    pub probability: f64,
}

impl PerturbPreset {
    pub fn stage2_default() -> Self {
        PerturbPreset {
            elastic_alpha: 6.0,
            elastic_sigma: 4.0,
            perlin_fraction: 0.05,
            perlin_scale: 32.0,
            close_radius: 2,
            probability: 0.5,
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "stage2-default" => Ok(PerturbPreset::stage2_default()),
            other => Err(Error::invalid(format!("unknown perturbation preset `{other}`"))),
        }
    }

    /// Whether a clip with this seed is perturbed.
    pub fn applies(&self, seed: u64) -> bool {
        rng::uniform(&[seed, TAG_APPLY]) < self.probability
    }

    /// Elastic warp, Perlin noise and closing on one frame.
    pub fn apply_frame(&self, d: &DisparityMap, perlin_amplitude: f64, seed: u64) -> Result<DisparityMap> {
        let warped = elastic_transform(d, self.elastic_alpha, self.elastic_sigma, seed)?;
        let noisy = perlin_noise_add(&warped, perlin_amplitude, self.perlin_scale, seed)?;
        if self.close_radius == 0 {
            return Ok(noisy);
        }
        morphological(&noisy, MorphOp::Close, self.close_radius)
    }

    /// Perturbs a whole clip, or returns it unchanged when the coin flip says so.
    /// The Perlin field is shared across frames; elastic fields vary per frame.
    pub fn apply_clip(&self, clip: &[DisparityMap], seed: u64) -> Result<(Vec<DisparityMap>, bool)> {
        if !self.applies(seed) {
            return Ok((clip.to_vec(), false));
        }
        let (lo, hi) = clip.iter().fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), d| {
            let (a, b) = d.min_max();
            (lo.min(a), hi.max(b))
        });
        let amplitude = self.perlin_fraction * (hi - lo).max(0.0) as f64;
        let out = clip
            .iter()
            .enumerate()
            .map(|(t, d)| {
                let warped = elastic_transform(
                    d,
                    self.elastic_alpha,
                    self.elastic_sigma,
                    rng::derive_seed(seed, t as u64),
                )?;
                let noisy = perlin_noise_add(&warped, amplitude, self.perlin_scale, seed)?;
                if self.close_radius == 0 {
                    Ok(noisy)
                } else {
                    morphological(&noisy, MorphOp::Close, self.close_radius)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((out, true))
    }
}
