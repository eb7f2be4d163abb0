//! Disk and Gaussian blur kernels.

use rayon::prelude::*;

use crate::model::Frame;

/// Rectangular piece of a premultiplied RGBA raster positioned inside a larger image.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub x0: usize,
    pub y0: usize,
    pub width: usize,
    pub height: usize,
    pub data: Vec<[f32; 4]>,
}

impl Patch {
    pub fn get(&self, x: usize, y: usize) -> [f32; 4] {
        self.data[(y - self.y0) * self.width + (x - self.x0)]
    }
}

/// Normalized disk kernel with an area-exact antialiased rim.
///
/// Each kernel row `dy` covers the chord `|dx| <= sqrt(r^2 - dy^2)` of the
/// circle; pixels cut by the chord end contribute their covered fraction.
/// Radii up to 0.5 px are the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct DiskKernel {
    radius: f64,
    rows: Vec<(isize, f64)>,
    total: f64,
}

impl DiskKernel {
    pub fn new(radius: f64) -> Self {
        let radius = if radius.is_finite() { radius.max(0.0) } else { 0.0 };
        let reach = radius.floor() as isize;
        let rows: Vec<(isize, f64)> = (-reach..=reach)
            .map(|dy| (dy, (radius * radius - (dy * dy) as f64).max(0.0).sqrt()))
            .filter(|&(_, w)| w > 0.0)
            .collect();
        let total = rows.iter().map(|&(_, w)| 2.0 * w).sum();
        DiskKernel {
            radius,
            rows,
            total,
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn is_identity(&self) -> bool {
        self.radius <= 0.5
    }

    /// Vertical and horizontal reach in whole pixels.
    pub fn reach(&self) -> usize {
        self.radius.ceil() as usize + 1
    }

    /// Explicit weights `(dx, dy, w)` with non-zero `w`; they sum to one.
    pub fn weights(&self) -> Vec<(isize, isize, f64)> {
        if self.is_identity() {
            return vec![(0, 0, 1.0)];
        }
        let mut out = Vec::new();
        for &(dy, w) in &self.rows {
            let reach = (w + 0.5).ceil() as isize;
            for dx in -reach..=reach {
                // Overlap of pixel [dx - 0.5, dx + 0.5] with chord [-w, w].
                let lo = (dx as f64 - 0.5).max(-w);
                let hi = (dx as f64 + 0.5).min(w);
                if hi > lo {
                    out.push((dx, dy, (hi - lo) / self.total));
                }
            }
        }
        out
    }
}

/// Blurs a premultiplied RGBA raster with a disk kernel, reading outside the
/// image by clamping to the edge.
///
/// `bounds` is the inclusive bounding box `(x0, y0, x1, y1)` of the non-zero
/// input pixels; everything outside it must be zero. Only the area the kernel
/// can reach from there is computed and returned.
pub fn disk_blur_rgba(
    data: &[[f32; 4]],
    width: usize,
    height: usize,
    bounds: (usize, usize, usize, usize),
    kernel: &DiskKernel,
) -> Patch {
    let (bx0, by0, bx1, by1) = bounds;
    if kernel.is_identity() {
        let w = bx1 - bx0 + 1;
        let mut out = Vec::with_capacity(w * (by1 - by0 + 1));
        for y in by0..=by1 {
            out.extend_from_slice(&data[y * width + bx0..=y * width + bx1]);
        }
        return Patch {
            x0: bx0,
            y0: by0,
            width: w,
            height: by1 - by0 + 1,
            data: out,
        };
    }

    let reach = kernel.reach();
    let pad = reach + 1;
    let (ox0, oy0, ox1, oy1) = (
        bx0.saturating_sub(reach),
        by0.saturating_sub(reach),
        (bx1 + reach).min(width - 1),
        (by1 + reach).min(height - 1),
    );
    let out_w = ox1 - ox0 + 1;
    let out_h = oy1 - oy0 + 1;

    // Padded source rows over columns [ox0 - pad, ox1 + pad] and their prefix
    // sums, interleaved RGBA in f64.
    let padded = out_w + 2 * pad;
    let rows_in = by1 - by0 + 1;
    let mut values = vec![0.0f64; rows_in * padded * 4];
    let mut prefix = vec![0.0f64; rows_in * (padded + 1) * 4];
    values
        .par_chunks_mut(padded * 4)
        .zip(prefix.par_chunks_mut((padded + 1) * 4))
        .enumerate()
        .for_each(|(r, (vrow, prow))| {
            let y = by0 + r;
            let src = &data[y * width..(y + 1) * width];
            for k in 0..padded {
                let x = (ox0 as isize + k as isize - pad as isize).clamp(0, width as isize - 1)
                    as usize;
                let px = src[x];
                for c in 0..4 {
                    vrow[k * 4 + c] = px[c] as f64;
                    prow[(k + 1) * 4 + c] = prow[k * 4 + c] + px[c] as f64;
                }
            }
        });

    // Per kernel row: integer offsets and fractions of the chord endpoints.
    let taps: Vec<(isize, usize, f64, usize, f64)> = kernel
        .rows
        .iter()
        .map(|&(dy, w)| {
            let ur = pad as f64 + 0.5 + w;
            let ul = pad as f64 + 0.5 - w;
            let ir = ur.floor();
            let il = ul.floor();
            (dy, ir as usize, ur - ir, il as usize, ul - il)
        })
        .collect();
    let inv_total = 1.0 / kernel.total;

    let mut out = vec![[0.0f32; 4]; out_w * out_h];
    out.par_chunks_mut(out_w).enumerate().for_each_init(
        || vec![0.0f64; out_w * 4],
        |acc, (row, out_row)| {
            let y = (oy0 + row) as isize;
            acc.iter_mut().for_each(|a| *a = 0.0);
            for &(dy, ir, fr, il, fl) in &taps {
                let sy = (y + dy).clamp(0, height as isize - 1) as usize;
                if sy < by0 || sy > by1 {
                    continue;
                }
                let r = sy - by0;
                let vrow = &values[r * padded * 4..(r + 1) * padded * 4];
                let prow = &prefix[r * (padded + 1) * 4..(r + 1) * (padded + 1) * 4];
                let n = out_w * 4;
                let pr = &prow[ir * 4..ir * 4 + n];
                let vr = &vrow[ir * 4..ir * 4 + n];
                let pl = &prow[il * 4..il * 4 + n];
                let vl = &vrow[il * 4..il * 4 + n];
                for j in 0..n {
                    acc[j] += (pr[j] - pl[j]) + (fr * vr[j] - fl * vl[j]);
                }
            }
            for (o, a) in out_row.iter_mut().zip(acc.chunks_exact(4)) {
                *o = [
                    (a[0] * inv_total) as f32,
                    (a[1] * inv_total) as f32,
                    (a[2] * inv_total) as f32,
                    (a[3] * inv_total) as f32,
                ];
            }
        },
    );
    Patch {
        x0: ox0,
        y0: oy0,
        width: out_w,
        height: out_h,
        data: out,
    }
}

/// Normalized 1-D Gaussian taps with radius `ceil(3 sigma)`.
pub fn gaussian_taps(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil().max(1.0) as isize;
    let mut taps: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

/// Separable Gaussian blur of a scalar plane with edge clamping.
pub fn gaussian_blur_plane(values: &[f64], width: usize, height: usize, sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return values.to_vec();
    }
    let taps = gaussian_taps(sigma);
    let r = (taps.len() / 2) as isize;
    let mut tmp = vec![0.0; values.len()];
    tmp.par_chunks_mut(width).enumerate().for_each(|(y, row)| {
        let src = &values[y * width..(y + 1) * width];
        for (x, o) in row.iter_mut().enumerate() {
            *o = taps
                .iter()
                .enumerate()
                .map(|(k, t)| {
                    let sx = (x as isize + k as isize - r).clamp(0, width as isize - 1);
                    t * src[sx as usize]
                })
                .sum();
        }
    });
    let mut out = vec![0.0; values.len()];
    out.par_chunks_mut(width).enumerate().for_each(|(y, row)| {
        for (x, o) in row.iter_mut().enumerate() {
            *o = taps
                .iter()
                .enumerate()
                .map(|(k, t)| {
                    let sy = (y as isize + k as isize - r).clamp(0, height as isize - 1);
                    t * tmp[sy as usize * width + x]
                })
                .sum();
        }
    });
    out
}

/// Gaussian blur of each color channel.
pub fn gaussian_blur_frame(frame: &Frame, sigma: f64) -> Frame {
    let (w, h) = frame.dims();
    let channels: Vec<Vec<f64>> = (0..3)
        .map(|c| {
            let plane: Vec<f64> = frame.data().iter().skip(c).step_by(3).map(|&v| v as f64).collect();
            gaussian_blur_plane(&plane, w, h, sigma)
        })
        .collect();
    let data = (0..w * h)
        .flat_map(|i| [channels[0][i] as f32, channels[1][i] as f32, channels[2][i] as f32])
        .collect();
    Frame::new(w, h, data).expect("dimensions preserved")
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct gather with the explicit weight list and edge clamping.
    fn gather(data: &[[f32; 4]], w: usize, h: usize, k: &DiskKernel) -> Vec<[f64; 4]> {
        let weights = k.weights();
        let mut out = vec![[0.0f64; 4]; w * h];
        for y in 0..h {
            for x in 0..w {
                for &(dx, dy, wt) in &weights {
                    let sx = (x as isize + dx).clamp(0, w as isize - 1) as usize;
                    let sy = (y as isize + dy).clamp(0, h as isize - 1) as usize;
                    for c in 0..4 {
                        out[y * w + x][c] += wt * data[sy * w + sx][c] as f64;
                    }
                }
            }
        }
        out
    }

    #[test]
    fn weights_sum_to_one() {
        for r in [0.0, 0.3, 0.5, 0.75, 1.0, 1.4, 2.5, 3.7, 8.0, 12.25, 30.0] {
            let s: f64 = DiskKernel::new(r).weights().iter().map(|w| w.2).sum();
            assert!((s - 1.0).abs() < 1e-12, "r={r} sum={s}");
        }
    }

    #[test]
    fn small_radius_is_identity() {
        assert_eq!(DiskKernel::new(0.4).weights(), vec![(0, 0, 1.0)]);
        assert!(DiskKernel::new(0.5).is_identity());
        assert!(!DiskKernel::new(0.6).is_identity());
    }

    #[test]
        // rows sampled at integer offsets lose the cap slivers
    fn kernel_area_matches_disk() {
        let k = DiskKernel::new(10.0);
        assert!((k.total - std::f64::consts::PI * 100.0).abs() / (std::f64::consts::PI * 100.0) < 0.02);
    }

    #[test]
    fn prefix_blur_matches_direct_gather() {
        let (w, h) = (23, 17);
        let data: Vec<[f32; 4]> = (0..w * h)
            .map(|i| {
                let v = ((i * 37) % 11) as f32 / 10.0;
                [v, 1.0 - v, 0.5 * v, if i % 3 == 0 { 1.0 } else { 0.5 }]
            })
            .collect();
        for r in [0.8, 1.5, 2.0, 3.3, 6.9] {
            let k = DiskKernel::new(r);
            let patch = disk_blur_rgba(&data, w, h, (0, 0, w - 1, h - 1), &k);
            let reference = gather(&data, w, h, &k);
            for y in 0..h {
                for x in 0..w {
                    let a = patch.get(x, y);
                    let b = reference[y * w + x];
                    for c in 0..4 {
                        assert!((a[c] as f64 - b[c]).abs() < 1e-5, "r={r} ({x},{y}) {a:?} {b:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn bounded_blur_matches_full_blur() {
        let (w, h) = (40, 30);
        let mut data = vec![[0.0f32; 4]; w * h];
        for y in 12..18 {
            for x in 15..22 {
                data[y * w + x] = [0.3, 0.6, 0.9, 1.0];
            }
        }
        let k = DiskKernel::new(4.2);
        let part = disk_blur_rgba(&data, w, h, (15, 12, 21, 17), &k);
        let full = disk_blur_rgba(&data, w, h, (0, 0, w - 1, h - 1), &k);
        for y in 0..h {
            for x in 0..w {
                let f = full.get(x, y);
                let inside = x >= part.x0 && x < part.x0 + part.width && y >= part.y0 && y < part.y0 + part.height;
                let p = if inside { part.get(x, y) } else { [0.0; 4] };
                for c in 0..4 {
                    assert!((f[c] - p[c]).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn constant_image_is_preserved() {
        let (w, h) = (64, 48);
        let data = vec![[0.25f32, 0.5, 0.75, 1.0]; w * h];
        let patch = disk_blur_rgba(&data, w, h, (0, 0, w - 1, h - 1), &DiskKernel::new(13.6));
        for p in &patch.data {
            for c in 0..4 {
                assert!((p[c] - data[0][c]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn gaussian_preserves_constants() {
        let v = vec![0.7; 50];
        let out = gaussian_blur_plane(&v, 10, 5, 1.5);
        assert!(out.iter().all(|&x| (x - 0.7).abs() < 1e-12));
    }
}
