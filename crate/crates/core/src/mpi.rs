//! Layered scatter-gather bokeh renderer.
//!
//! A frame is split into the exclusive bands of its focal-plane-adapted mask.
//! Each band is further split by which side of the focal plane its pixels lie
//! on, so that compositing order follows depth. Every resulting layer is
//! hole-filled behind its occluders, blurred with a disk of its circle of
//! confusion, and composited back to front with the over operator. The
//! accumulated color is finally divided by the accumulated alpha.

use rayon::prelude::*;

use crate::blur::{disk_blur_rgba, DiskKernel};
use crate::error::{Error, Result};
use crate::model::{BokehParams, DisparityMap, Frame, VideoClip};
use crate::optics::{build_mpi_mask_with, clip_norm_constant, coc_radius, layer_thresholds};

/// Iterations of nearest-valid dilation used to extend layers behind occluders.
pub const HOLE_FILL_ITERATIONS: usize = 8;

/// Accumulated alpha below which the input pixel is kept.
pub const MIN_ALPHA: f32 = 1e-4;

/// Which side of the focal plane a layer lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Farther than the focal plane (`d <= d_f`).
    Behind,
    /// Nearer than the focal plane (`d > d_f`).
    Front,
}

/// Per-layer record, exposed for debugging.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerInfo {
    /// 1-based band index.
    pub band: usize,
    pub side: Side,
    pub pixel_count: usize,
    /// Mean disparity of the layer, or the band-midpoint fallback when empty.
    pub disparity: f64,
    pub radius: f64,
}

#[derive(Debug, Clone)]
struct LayerStats {
    sum: f64,
    count: usize,
    bbox: (usize, usize, usize, usize),
}

fn check_inputs(frame: &Frame, disparity: &DisparityMap, params: &BokehParams) -> Result<()> {
    params.validate()?;
    if frame.dims() != disparity.dims() {
        return Err(Error::dims(frame.dims(), disparity.dims()));
    }
    Ok(())
}

/// Renders one frame. `norm_ref` is the clip-wide maximum `|d - d_f|`.
pub fn render_bokeh_frame(
    frame: &Frame,
    disparity: &DisparityMap,
    params: &BokehParams,
    norm_ref: f64,
) -> Result<Frame> {
    render_bokeh_frame_debug(frame, disparity, params, norm_ref).map(|(f, _)| f)
}

/// Like [`render_bokeh_frame`], also returning the per-layer breakdown.
pub fn render_bokeh_frame_debug(
    frame: &Frame,
    disparity: &DisparityMap,
    params: &BokehParams,
    norm_ref: f64,
) -> Result<(Frame, Vec<LayerInfo>)> {
    check_inputs(frame, disparity, params)?;
    let (w, h) = frame.dims();
    let focal = params.focal;
    let df = focal.disparity();
    let schedule = layer_thresholds(params.layers, focal)?;
    let mask = build_mpi_mask_with(disparity, focal, &schedule, norm_ref)?;
    let n = params.layers;

    // Label = 2 * (band - 1) + side.
    let labels: Vec<u16> = mask
        .first_layers()
        .iter()
        .zip(disparity.values())
        .map(|(&band, &d)| 2 * (band - 1) + u16::from(d as f64 > df))
        .collect();
    let mut stats: Vec<LayerStats> = (0..2 * n)
        .map(|_| LayerStats {
            sum: 0.0,
            count: 0,
            bbox: (usize::MAX, usize::MAX, 0, 0),
        })
        .collect();
    for y in 0..h {
        for x in 0..w {
            let p = y * w + x;
            let s = &mut stats[labels[p] as usize];
            s.sum += disparity.values()[p] as f64;
            s.count += 1;
            s.bbox.0 = s.bbox.0.min(x);
            s.bbox.1 = s.bbox.1.min(y);
            s.bbox.2 = s.bbox.2.max(x);
            s.bbox.3 = s.bbox.3.max(y);
        }
    }

    let mut infos = Vec::with_capacity(2 * n);
    for (label, s) in stats.iter().enumerate() {
        let band = label / 2 + 1;
        let side = if label % 2 == 1 { Side::Front } else { Side::Behind };
        let disparity = if s.count > 0 {
            s.sum / s.count as f64
        } else {
            let offset = schedule.band_midpoint(band) * norm_ref.max(0.0);
            match side {
                Side::Front => df + offset,
                Side::Behind => (df - offset).max(f64::MIN_POSITIVE),
            }
        };
        let radius = coc_radius(disparity, focal, params.strength)?;
        infos.push(LayerInfo {
            band,
            side,
            pixel_count: s.count,
            disparity,
            radius,
        });
    }

    // Back-to-front order over non-empty layers.
    let mut order: Vec<usize> = (0..2 * n).filter(|&l| stats[l].count > 0).collect();
    order.sort_by(|&a, &b| {
        infos[a]
            .disparity
            .total_cmp(&infos[b].disparity)
            .then(a.cmp(&b))
    });
    let mut rank_of_label = vec![usize::MAX; 2 * n];
    for (rank, &l) in order.iter().enumerate() {
        rank_of_label[l] = rank;
    }
    let rank: Vec<u32> = labels
        .iter()
        .map(|&l| rank_of_label[l as usize] as u32)
        .collect();

    let mut acc = vec![[0.0f32; 4]; w * h];
    for (k, &label) in order.iter().enumerate() {
        let kernel = DiskKernel::new(infos[label].radius);
        composite_layer(frame, &rank, k as u32, stats[label].bbox, &kernel, &mut acc);
    }

    let data: Vec<f32> = acc
        .par_iter()
        .zip(frame.data().par_chunks_exact(3))
        .flat_map_iter(|(a, src)| {
            if a[3] > MIN_ALPHA {
                let inv = 1.0 / a[3];
                [a[0] * inv, a[1] * inv, a[2] * inv]
            } else {
                [src[0], src[1], src[2]]
            }
        })
        .collect();
    Ok((Frame::new(w, h, data)?, infos))
}

/// Builds layer `k`, extends it behind nearer layers, blurs it and composites
/// it over `acc`.
fn composite_layer(
    frame: &Frame,
    rank: &[u32],
    k: u32,
    bbox: (usize, usize, usize, usize),
    kernel: &DiskKernel,
    acc: &mut [[f32; 4]],
) {
    let (w, h) = frame.dims();
    let margin = HOLE_FILL_ITERATIONS + 1 + if kernel.is_identity() { 0 } else { kernel.reach() };
    let rx0 = bbox.0.saturating_sub(margin);
    let ry0 = bbox.1.saturating_sub(margin);
    let rx1 = (bbox.2 + margin).min(w - 1);
    let ry1 = (bbox.3 + margin).min(h - 1);
    let rw = rx1 - rx0 + 1;
    let rh = ry1 - ry0 + 1;

    let src = frame.data();
    let mut layer = vec![[0.0f32; 4]; rw * rh];
    let mut valid = vec![false; rw * rh];
    let mut frontier = Vec::new();
    for y in bbox.1..=bbox.3 {
        for x in bbox.0..=bbox.2 {
            let p = y * w + x;
            if rank[p] == k {
                let l = (y - ry0) * rw + (x - rx0);
                layer[l] = [src[p * 3], src[p * 3 + 1], src[p * 3 + 2], 1.0];
                valid[l] = true;
                frontier.push(l);
            }
        }
    }

    // Nearest-valid dilation into pixels owned by nearer layers.
    let mut stamp = vec![0u8; rw * rh];
    let (mut nx0, mut ny0, mut nx1, mut ny1) = (
        bbox.0 - rx0,
        bbox.1 - ry0,
        bbox.2 - rx0,
        bbox.3 - ry0,
    );
    for iter in 1..=HOLE_FILL_ITERATIONS as u8 {
        let mut candidates = Vec::new();
        for &l in &frontier {
            let (lx, ly) = (l % rw, l / rw);
            for_neighbors(lx, ly, rw, rh, |q| {
                if !valid[q] && stamp[q] != iter {
                    let (qx, qy) = (q % rw + rx0, q / rw + ry0);
                    if rank[qy * w + qx] > k {
                        stamp[q] = iter;
                        candidates.push(q);
                    }
                }
            });
        }
        if candidates.is_empty() {
            break;
        }
        let fills: Vec<[f32; 4]> = candidates
            .iter()
            .map(|&q| {
                let mut sum = [0.0f32; 3];
                let mut count = 0.0f32;
                for_neighbors(q % rw, q / rw, rw, rh, |n| {
                    if valid[n] {
                        let c = layer[n];
                        sum[0] += c[0];
                        sum[1] += c[1];
                        sum[2] += c[2];
                        count += 1.0;
                    }
                });
                [sum[0] / count, sum[1] / count, sum[2] / count, 1.0]
            })
            .collect();
        for (&q, fill) in candidates.iter().zip(fills) {
            layer[q] = fill;
            valid[q] = true;
            let (qx, qy) = (q % rw, q / rw);
            nx0 = nx0.min(qx);
            ny0 = ny0.min(qy);
            nx1 = nx1.max(qx);
            ny1 = ny1.max(qy);
        }
        frontier = candidates;
    }

    let patch = disk_blur_rgba(&layer, rw, rh, (nx0, ny0, nx1, ny1), kernel);
    let ox = rx0 + patch.x0;
    let oy = ry0 + patch.y0;
    for (py, row) in patch.data.chunks_exact(patch.width).enumerate() {
        let dst = &mut acc[(oy + py) * w + ox..(oy + py) * w + ox + patch.width];
        for (a, c) in dst.iter_mut().zip(row) {
            let t = 1.0 - c[3];
            a[0] = c[0] + t * a[0];
            a[1] = c[1] + t * a[1];
            a[2] = c[2] + t * a[2];
            a[3] = c[3] + t * a[3];
        }
    }
}

#[inline]
fn for_neighbors(x: usize, y: usize, w: usize, h: usize, mut f: impl FnMut(usize)) {
    let x0 = x.saturating_sub(1);
    let y0 = y.saturating_sub(1);
    let x1 = (x + 1).min(w - 1);
    let y1 = (y + 1).min(h - 1);
    for ny in y0..=y1 {
        for nx in x0..=x1 {
            if nx != x || ny != y {
                f(ny * w + nx);
            }
        }
    }
}

/// Renders a clip with one normalization constant for all frames.
pub fn render_bokeh_clip(
    clip: &VideoClip,
    disparities: &[DisparityMap],
    params: &BokehParams,
) -> Result<VideoClip> {
    if clip.len() != disparities.len() {
        return Err(Error::LengthMismatch {
            expected: clip.len(),
            found: disparities.len(),
        });
    }
    let norm = clip_norm_constant(disparities, params.focal);
    render_bokeh_clip_with_norm(clip.frames(), disparities, params, norm)
        .and_then(|frames| VideoClip::new(frames, clip.frame_rate()))
}

/// Renders frames with an externally supplied clip normalization constant;
/// used when a clip is rendered in segments.
pub fn render_bokeh_clip_with_norm(
    frames: &[Frame],
    disparities: &[DisparityMap],
    params: &BokehParams,
    norm_ref: f64,
) -> Result<Vec<Frame>> {
    if frames.len() != disparities.len() {
        return Err(Error::LengthMismatch {
            expected: frames.len(),
            found: disparities.len(),
        });
    }
    frames
        .par_iter()
        .zip(disparities.par_iter())
        .map(|(f, d)| render_bokeh_frame(f, d, params, norm_ref))
        .collect()
}
