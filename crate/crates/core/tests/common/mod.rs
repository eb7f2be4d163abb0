#![allow(dead_code)]

use vbokeh::raytrace::{PlanarLayer, PlanarScene, Plane};
use vbokeh::rng::uniform;
use vbokeh::{DisparityMap, Frame, RgbaImage, VideoClip};

/// Smooth multi-frequency colour texture.
pub fn texture(w: usize, h: usize, seed: u64) -> Vec<[f32; 4]> {
    let r = |k: u64| uniform(&[seed, k]);
    let (fx, fy, ph) = (0.05 + 0.15 * r(0), 0.05 + 0.15 * r(1), 6.28 * r(2));
    let tint = [r(3), r(4), r(5)];
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (xf, yf) = (x as f64, y as f64);
            let wave = 0.5 + 0.2 * (fx * xf + ph).sin() + 0.2 * (fy * yf - ph).cos();
            let px: [f32; 3] = std::array::from_fn(|c| (0.15 + 0.7 * (0.5 * tint[c] + 0.5 * wave)) as f32);
            out.push([px[0], px[1], px[2], 1.0]);
        }
    }
    out
}

/// Axis-aligned opaque square over a planar background.
pub struct TwoPlaneScene {
    pub scene: PlanarScene,
    pub square: (usize, usize, usize, usize),
    pub fg_disparity: f64,
    pub bg_disparity: f64,
}

pub fn two_plane_scene(size: usize, seed: u64) -> TwoPlaneScene {
    let r = |k: u64| uniform(&[seed, 100 + k]);
    let side = size / 4 + (r(0) * (size / 4) as f64) as usize;
    let x0 = size / 16 + (r(1) * (size - side - size / 8) as f64) as usize;
    let y0 = size / 16 + (r(2) * (size - side - size / 8) as f64) as usize;
    let fg_d = 0.6 + 0.4 * r(3);
    let bg_d = 0.1 + 0.3 * r(4);
    let fg_tex = texture(size, size, seed ^ 0xf00d);
    let fg: Vec<[f32; 4]> = (0..size * size)
        .map(|i| {
            let (x, y) = (i % size, i / size);
            let inside = x >= x0 && x < x0 + side && y >= y0 && y < y0 + side;
            if inside { fg_tex[i] } else { [0.0; 4] }
        })
        .collect();
    let fg_plane = Plane::from_center_gradient(fg_d, fg_d * (r(5) - 0.5) * 0.04, fg_d * (r(6) - 0.5) * 0.04).unwrap();
    let bg_plane = Plane::from_center_gradient(bg_d, bg_d * (r(7) - 0.5) * 0.1, bg_d * (r(8) - 0.5) * 0.1).unwrap();
    let scene = PlanarScene::new(vec![
        PlanarLayer { rgba: RgbaImage::from_straight(size, size, &fg).unwrap(), plane: fg_plane },
        PlanarLayer { rgba: RgbaImage::from_straight(size, size, &texture(size, size, seed)).unwrap(), plane: bg_plane },
    ])
    .unwrap();
    TwoPlaneScene { scene, square: (x0, y0, side, side), fg_disparity: fg_d, bg_disparity: bg_d }
}

/// Euclidean distance from a pixel centre to the boundary of a rectangle.
pub fn distance_to_rect_boundary(x: usize, y: usize, rect: (usize, usize, usize, usize)) -> f64 {
    let (x0, y0, w, h) = rect;
    let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
    let (l, t, r, b) = (x0 as f64, y0 as f64, (x0 + w) as f64, (y0 + h) as f64);
    let inside = px > l && px < r && py > t && py < b;
    if inside {
        (px - l).min(r - px).min(py - t).min(b - py)
    } else {
        let dx = (l - px).max(0.0).max(px - r);
        let dy = (t - py).max(0.0).max(py - b);
        (dx * dx + dy * dy).sqrt()
    }
}

pub fn random_frame(w: usize, h: usize, seed: u64) -> Frame {
    Frame::from_fn(w, h, |x, y| {
        let c = |k: u64| uniform(&[seed, x as u64, y as u64, k]) as f32;
        [c(0), c(1), c(2)]
    })
    .unwrap()
}

pub fn random_disparity(w: usize, h: usize, seed: u64) -> DisparityMap {
    DisparityMap::from_fn(w, h, |x, y| (0.05 + 0.95 * uniform(&[seed, x as u64, y as u64, 9])) as f32).unwrap()
}

pub fn random_clip(frames: usize, w: usize, h: usize, seed: u64) -> (VideoClip, Vec<DisparityMap>) {
    let clip = VideoClip::from_frames((0..frames).map(|t| random_frame(w, h, seed * 1000 + t as u64)).collect()).unwrap();
    let disp = (0..frames).map(|t| random_disparity(w, h, seed * 1000 + t as u64)).collect();
    (clip, disp)
}

/// PSNR over the pixels selected by `keep`.
pub fn masked_psnr(a: &Frame, b: &Frame, keep: &[bool]) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for (i, &k) in keep.iter().enumerate() {
        if !k {
            continue;
        }
        for c in 0..3 {
            let d = a.data()[i * 3 + c] as f64 - b.data()[i * 3 + c] as f64;
            sum += d * d;
        }
        n += 3;
    }
    if n == 0 {
        return None;
    }
    let mse = sum / n as f64;
    Some(if mse == 0.0 { f64::INFINITY } else { 10.0 * (1.0 / mse).log10() })
}
