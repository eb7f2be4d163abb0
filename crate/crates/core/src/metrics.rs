//! Fidelity, temporal-consistency and edge-preservation metrics.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{DisparityMap, FocalSpec, Frame, VideoClip};

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_C1: f64 = 0.01 * 0.01;
const SSIM_C2: f64 = 0.03 * 0.03;

fn same_dims(a: &Frame, b: &Frame) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::dims(b.dims(), a.dims()));
    }
    Ok(())
}

/// Peak signal-to-noise ratio over all channels with unit peak; identical
/// frames give `f64::INFINITY`.
pub fn psnr(pred: &Frame, gt: &Frame) -> Result<f64> {
    same_dims(pred, gt)?;
    let sum: f64 = pred
        .data()
        .iter()
        .zip(gt.data())
        .map(|(&a, &b)| {
            let d = a as f64 - b as f64;
            d * d
        })
        .sum();
    let mse = sum / pred.data().len() as f64;
    Ok(if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (1.0 / mse).log10()
    })
}

fn gaussian_window() -> Vec<f64> {
    let half = (SSIM_WINDOW / 2) as f64;
    let w: Vec<f64> = (0..SSIM_WINDOW)
        .map(|i| {
            let x = i as f64 - half;
            (-x * x / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp()
        })
        .collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// Separable weighted mean over every fully contained window.
fn filter_valid(values: &[f64], width: usize, height: usize, taps: &[f64]) -> Vec<f64> {
    let n = taps.len();
    let (ow, oh) = (width + 1 - n, height + 1 - n);
    let mut horiz = vec![0.0; ow * height];
    for y in 0..height {
        let row = &values[y * width..(y + 1) * width];
        for x in 0..ow {
            horiz[y * ow + x] = taps.iter().zip(&row[x..x + n]).map(|(t, v)| t * v).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = taps.iter().enumerate().map(|(k, t)| t * horiz[(y + k) * ow + x]).sum();
        }
    }
    out
}

/// Mean structural similarity of Rec.709 luma over valid 11x11 Gaussian windows.
pub fn ssim(pred: &Frame, gt: &Frame) -> Result<f64> {
    same_dims(pred, gt)?;
    let (w, h) = pred.dims();
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::invalid(format!(
            "SSIM needs frames of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {w}x{h}"
        )));
    }
    let (x, y) = (pred.luma(), gt.luma());
    let taps = gaussian_window();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a * b).collect();
    let [mx, my, exx, eyy, exy] = [&x, &y, &xx, &yy, &xy].map(|v| filter_valid(v, w, h, &taps));
    let n = mx.len();
    let total: f64 = (0..n)
        .map(|i| {
            let (ux, uy) = (mx[i], my[i]);
            let vx = exx[i] - ux * ux;
            let vy = eyy[i] - uy * uy;
            let cov = exy[i] - ux * uy;
            ((2.0 * ux * uy + SSIM_C1) * (2.0 * cov + SSIM_C2))
                / ((ux * ux + uy * uy + SSIM_C1) * (vx + vy + SSIM_C2))
        })
        .sum();
    Ok(total / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RmMode {
    /// Discrepancy between predicted and reference temporal differences.
    #[default]
    Paired,
    /// Mean magnitude of predicted temporal differences alone.
    Solo,
}

impl std::str::FromStr for RmMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paired" => Ok(RmMode::Paired),
            "solo" => Ok(RmMode::Solo),
            other => Err(Error::invalid(format!("unknown rm mode `{other}`"))),
        }
    }
}

fn check_clips(pred: &VideoClip, gt: &VideoClip) -> Result<()> {
    if pred.len() != gt.len() {
        return Err(Error::LengthMismatch {
            expected: gt.len(),
            found: pred.len(),
        });
    }
    if pred.dims() != gt.dims() {
        return Err(Error::dims(gt.dims(), pred.dims()));
    }
    Ok(())
}

/// Temporal-difference discrepancy, averaged over frame pairs, pixels and channels.
pub fn rm(pred: &VideoClip, gt: &VideoClip, mode: RmMode) -> Result<f64> {
    check_clips(pred, gt)?;
    if pred.len() < 2 {
        return Err(Error::invalid("RM needs at least two frames"));
    }
    let p = pred.frames();
    let g = gt.frames();
    let per_pair: Vec<f64> = (0..p.len() - 1)
        .into_par_iter()
        .map(|t| {
            let (p0, p1) = (p[t].data(), p[t + 1].data());
            let (g0, g1) = (g[t].data(), g[t + 1].data());
            let sum: f64 = (0..p0.len())
                .map(|i| {
                    let dp = p1[i] as f64 - p0[i] as f64;
                    match mode {
                        RmMode::Paired => (dp - (g1[i] as f64 - g0[i] as f64)).abs(),
                        RmMode::Solo => dp.abs(),
                    }
                })
                .sum();
            sum / p0.len() as f64
        })
        .collect();
    Ok(per_pair.iter().sum::<f64>() / per_pair.len() as f64)
}

/// Region of interest for edge preservation, typically the sharp foreground.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoiMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl RoiMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::LengthMismatch {
                expected: width * height,
                found: bits.len(),
            });
        }
        Ok(RoiMask { width, height, bits })
    }

    pub fn full(width: usize, height: usize) -> Self {
        RoiMask {
            width,
            height,
            bits: vec![true; width * height],
        }
    }

    /// Pixels whose disparity lies within `tolerance` of the focal plane.
    pub fn in_focus(disparity: &DisparityMap, focal: FocalSpec, tolerance: f64) -> Self {
        let df = focal.disparity();
        let (width, height) = disparity.dims();
        let bits = disparity
            .values()
            .iter()
            .map(|&d| (d as f64 - df).abs() <= tolerance)
            .collect();
        RoiMask { width, height, bits }
    }

    /// Non-zero pixels of a gray or colour PNG are inside the ROI.
    pub fn read(path: &Path) -> Result<Self> {
        let png = crate::io::read_png(path)?;
        let c = png.channels;
        let color = if c == 2 || c == 4 { c - 1 } else { c };
        let bits = png
            .samples
            .chunks_exact(c)
            .map(|px| px[..color].iter().any(|&v| v > 0))
            .collect();
        RoiMask::new(png.width, png.height, bits)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// 4-neighbour Laplacian of luma with edge clamping.
fn laplacian(luma: &[f64], w: usize, h: usize) -> Vec<f64> {
    let at = |x: isize, y: isize| {
        let xc = x.clamp(0, w as isize - 1) as usize;
        let yc = y.clamp(0, h as isize - 1) as usize;
        luma[yc * w + xc]
    };
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            out.push(at(x - 1, y) + at(x + 1, y) + at(x, y - 1) + at(x, y + 1) - 4.0 * at(x, y));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VepiScore {
    pub value: f64,
    /// Set when either Laplacian response is constant over the ROI.
    pub degenerate: bool,
}

/// Pearson correlation of Laplacian responses over the ROI.
pub fn vepi_detailed(pred: &Frame, reference: &Frame, roi: &RoiMask) -> Result<VepiScore> {
    same_dims(pred, reference)?;
    if roi.dims() != pred.dims() {
        return Err(Error::dims(pred.dims(), roi.dims()));
    }
    let n = roi.count();
    if n == 0 {
        return Err(Error::Empty("VEPI region of interest"));
    }
    let (w, h) = pred.dims();
    let lp = laplacian(&pred.luma(), w, h);
    let lr = laplacian(&reference.luma(), w, h);
    let inside = || roi.bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i);
    let mp = inside().map(|i| lp[i]).sum::<f64>() / n as f64;
    let mr = inside().map(|i| lr[i]).sum::<f64>() / n as f64;
    let (mut cov, mut vp, mut vr) = (0.0, 0.0, 0.0);
    for i in inside() {
        let (a, b) = (lp[i] - mp, lr[i] - mr);
        cov += a * b;
        vp += a * a;
        vr += b * b;
    }
    if vp == 0.0 || vr == 0.0 {
        return Ok(VepiScore {
            value: 0.0,
            degenerate: true,
        });
    }
    Ok(VepiScore {
        value: (cov / (vp * vr).sqrt()).clamp(-1.0, 1.0),
        degenerate: false,
    })
}

pub fn vepi(pred: &Frame, reference: &Frame, roi: &RoiMask) -> Result<f64> {
    Ok(vepi_detailed(pred, reference, roi)?.value)
}

/// Squared differences of forward-difference gradients summed over pixels
/// and channels; `normalize` divides by the pixel count.
pub fn texture_loss(pred: &Frame, gt: &Frame, normalize: bool) -> Result<f64> {
    same_dims(pred, gt)?;
    let (w, h) = pred.dims();
    let (p, g) = (pred.data(), gt.data());
    let at = |d: &[f32], x: usize, y: usize, c: usize| d[(y * w + x) * 3 + c] as f64;
    let mut total = 0.0;
    for y in 0..h {
        for x in 0..w {
            for c in 0..3 {
                if x + 1 < w {
                    let d = (at(p, x + 1, y, c) - at(p, x, y, c)) - (at(g, x + 1, y, c) - at(g, x, y, c));
                    total += d * d;
                }
                if y + 1 < h {
                    let d = (at(p, x, y + 1, c) - at(p, x, y, c)) - (at(g, x, y + 1, c) - at(g, x, y, c));
                    total += d * d;
                }
            }
        }
    }
    Ok(if normalize { total / (w * h) as f64 } else { total })
}

/// Report column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    Rm,
    Ssim,
    Psnr,
    Vepi,
    Texture,
}

impl Metric {
    pub const ALL: [Metric; 5] = [Metric::Rm, Metric::Ssim, Metric::Psnr, Metric::Vepi, Metric::Texture];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Rm => "RM",
            Metric::Ssim => "SSIM",
            Metric::Psnr => "PSNR",
            Metric::Vepi => "VEPI",
            Metric::Texture => "TEXTURE",
        }
    }

    /// Parses a comma-separated list, returned in report order without duplicates.
    pub fn parse_list(s: &str) -> Result<Vec<Metric>> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let m = match part.to_ascii_lowercase().as_str() {
                "rm" => Metric::Rm,
                "ssim" => Metric::Ssim,
                "psnr" => Metric::Psnr,
                "vepi" => Metric::Vepi,
                "texture" | "texture_loss" => Metric::Texture,
                other => return Err(Error::invalid(format!("unknown metric `{other}`"))),
            };
            out.push(m);
        }
        if out.is_empty() {
            return Err(Error::invalid("no metrics requested"));
        }
        out.sort();
        out.dedup();
        Ok(out)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricReport {
    pub rm: Option<f64>,
    pub ssim: Option<f64>,
    pub psnr: Option<f64>,
    pub vepi: Option<f64>,
    pub texture_loss: Option<f64>,
    /// Frames whose VEPI fell back to 0 because a response was constant.
    pub vepi_degenerate_frames: usize,
}

impl MetricReport {
    pub fn get(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::Rm => self.rm,
            Metric::Ssim => self.ssim,
            Metric::Psnr => self.psnr,
            Metric::Vepi => self.vepi,
            Metric::Texture => self.texture_loss,
        }
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Frame metrics averaged over frames; RM over the whole clip.
pub fn evaluate_clip_pair(
    pred: &VideoClip,
    gt: &VideoClip,
    rois: Option<&[RoiMask]>,
    metrics: &[Metric],
    rm_mode: RmMode,
) -> Result<MetricReport> {
    check_clips(pred, gt)?;
    let wants = |m: Metric| metrics.contains(&m);
    if wants(Metric::Vepi) {
        match rois {
            None => return Err(Error::invalid("VEPI requires ROI masks")),
            Some(r) if r.len() != pred.len() => {
                return Err(Error::LengthMismatch {
                    expected: pred.len(),
                    found: r.len(),
                })
            }
            Some(_) => {}
        }
    }
    let pairs: Vec<(&Frame, &Frame)> = pred.frames().iter().zip(gt.frames()).collect();
    let per_frame = |f: &(dyn Fn(&Frame, &Frame) -> Result<f64> + Sync)| -> Result<f64> {
        let v = pairs.par_iter().map(|(p, g)| f(p, g)).collect::<Result<Vec<_>>>()?;
        Ok(mean(&v))
    };
    let mut report = MetricReport::default();
    if wants(Metric::Rm) {
        report.rm = Some(rm(pred, gt, rm_mode)?);
    }
    if wants(Metric::Ssim) {
        report.ssim = Some(per_frame(&ssim)?);
    }
    if wants(Metric::Psnr) {
        report.psnr = Some(per_frame(&psnr)?);
    }
    if wants(Metric::Vepi) {
        let rois = rois.expect("checked above");
        let scores = pairs
            .par_iter()
            .zip(rois)
            .map(|((p, g), r)| vepi_detailed(p, g, r))
            .collect::<Result<Vec<_>>>()?;
        report.vepi_degenerate_frames = scores.iter().filter(|s| s.degenerate).count();
        report.vepi = Some(mean(&scores.iter().map(|s| s.value).collect::<Vec<_>>()));
    }
    if wants(Metric::Texture) {
        report.texture_loss = Some(per_frame(&|p, g| texture_loss(p, g, true))?);
    }
    Ok(report)
}

fn format_value(v: Option<f64>) -> String {
    match v {
        None => "-".into(),
        Some(v) if v.is_infinite() => "inf".into(),
        Some(v) => format!("{v:.6}"),
    }
}

/// Tab-separated table with a leading `name` column.
pub fn format_table(rows: &[(String, MetricReport)], metrics: &[Metric]) -> String {
    let mut cols: Vec<Metric> = metrics.to_vec();
    cols.sort();
    cols.dedup();
    let mut out = String::from("name");
    for m in &cols {
        out.push('\t');
        out.push_str(m.name());
    }
    out.push('\n');
    for (name, report) in rows {
        out.push_str(name);
        for m in &cols {
            let _ = write!(out, "\t{}", format_value(report.get(*m)));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn noise_frame(w: usize, h: usize, seed: u64) -> Frame {
        Frame::from_fn(w, h, |x, y| {
            let r = |c: u64| rng::uniform(&[seed, x as u64, y as u64, c]) as f32;
            [r(0), r(1), r(2)]
        })
        .unwrap()
    }

    #[test]
    fn psnr_examples() {
        let a = noise_frame(16, 16, 1);
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        let z = Frame::filled(4, 4, [0.0; 3]).unwrap();
        let h = Frame::filled(4, 4, [0.5; 3]).unwrap();
        assert!((psnr(&h, &z).unwrap() - 6.020599913279624).abs() < 1e-9);
    }

    #[test]
    fn psnr_matches_scalar_loop() {
        let (a, b) = (noise_frame(13, 9, 2), noise_frame(13, 9, 3));
        let mut sum = 0.0f64;
        for i in 0..a.data().len() {
            let d = a.data()[i] as f64 - b.data()[i] as f64;
            sum += d * d;
        }
        let expected = 10.0 * (1.0 / (sum / a.data().len() as f64)).log10();
        assert!((psnr(&a, &b).unwrap() - expected).abs() < 1e-9);
        assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
    }

    #[test]
    fn ssim_identity_and_symmetry() {
        let a = noise_frame(24, 20, 4);
        let b = noise_frame(24, 20, 5);
        assert_eq!(ssim(&a, &a).unwrap(), 1.0);
        let c = Frame::filled(16, 16, [0.5; 3]).unwrap();
        assert_eq!(ssim(&c, &c).unwrap(), 1.0);
        assert_eq!(ssim(&a, &b).unwrap(), ssim(&b, &a).unwrap());
        assert!(ssim(&noise_frame(10, 20, 1), &noise_frame(10, 20, 1)).is_err());
    }

    #[test]
    fn ssim_degrades_with_noise() {
        for seed in 0..5u64 {
            let gt = Frame::from_fn(32, 32, |x, y| {
                let v = 0.5 + 0.3 * ((x as f32) * 0.4).sin() * ((y as f32) * 0.3).cos();
                [v, v, v]
            })
            .unwrap();
            let noisy = |sigma: f64| {
                let d: Vec<f32> = gt
                    .data()
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| {
                        let u1 = rng::uniform(&[seed, i as u64, 0]).max(1e-12);
                        let u2 = rng::uniform(&[seed, i as u64, 1]);
                        let n = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
                        (v as f64 + sigma * n) as f32
                    })
                    .collect();
                Frame::new(32, 32, d).unwrap()
            };
            assert!(ssim(&noisy(0.05), &gt).unwrap() < ssim(&noisy(0.01), &gt).unwrap());
        }
    }

    fn one_px_clip(values: &[f32]) -> VideoClip {
        VideoClip::from_frames(values.iter().map(|&v| Frame::filled(1, 1, [v; 3]).unwrap()).collect()).unwrap()
    }

    #[test]
    fn rm_examples() {
        let gt = one_px_clip(&[0.1, 0.3]);
        let pred = one_px_clip(&[0.1, 0.6]);
        assert!((rm(&pred, &gt, RmMode::Paired).unwrap() - 0.3).abs() < 1e-6);
        assert_eq!(rm(&gt, &gt, RmMode::Paired).unwrap(), 0.0);
        let shifted = one_px_clip(&[0.35, 0.55]);
        assert!(rm(&shifted, &gt, RmMode::Paired).unwrap() < 1e-6);
        assert!((rm(&pred, &gt, RmMode::Solo).unwrap() - 0.5).abs() < 1e-6);
        assert!(rm(&one_px_clip(&[0.1]), &one_px_clip(&[0.1]), RmMode::Paired).is_err());
    }

    #[test]
    fn vepi_identity_and_degenerate() {
        let a = noise_frame(20, 20, 6);
        let roi = RoiMask::full(20, 20);
        assert_eq!(vepi(&a, &a, &roi).unwrap(), 1.0);
        let flat = Frame::filled(20, 20, [0.4; 3]).unwrap();
        let s = vepi_detailed(&flat, &a, &roi).unwrap();
        assert!(s.degenerate && s.value == 0.0);
        let empty = RoiMask::new(20, 20, vec![false; 400]).unwrap();
        assert!(vepi(&a, &a, &empty).is_err());
    }

    #[test]
    fn vepi_decreases_with_blur() {
        let a = noise_frame(48, 48, 7);
        let roi = RoiMask::full(48, 48);
        let scores: Vec<f64> = [1.0, 2.0, 4.0]
            .iter()
            .map(|&s| vepi(&crate::blur::gaussian_blur_frame(&a, s), &a, &roi).unwrap())
            .collect();
        assert!(scores.windows(2).all(|w| w[0] > w[1]), "{scores:?}");
    }

    #[test]
    fn texture_loss_examples() {
        let gt = Frame::new(2, 1, vec![0.0; 6]).unwrap();
        let pred = Frame::new(2, 1, vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(texture_loss(&pred, &gt, false).unwrap(), 1.0);
        assert_eq!(texture_loss(&pred, &gt, true).unwrap(), 0.5);
        let a = Frame::from_fn(8, 8, |x, y| [x as f32 / 16.0, y as f32 / 16.0, 0.25]).unwrap();
        let shifted = Frame::from_fn(8, 8, |x, y| [x as f32 / 16.0 + 0.5, y as f32 / 16.0 + 0.5, 0.75]).unwrap();
        assert!(texture_loss(&shifted, &a, false).unwrap() < 1e-10);
    }

    #[test]
    fn report_contains_only_requested() {
        let clip = VideoClip::from_frames(vec![noise_frame(16, 16, 1), noise_frame(16, 16, 2)]).unwrap();
        let r = evaluate_clip_pair(&clip, &clip, None, &[Metric::Psnr], RmMode::Paired).unwrap();
        assert_eq!(r.psnr, Some(f64::INFINITY));
        assert!(r.ssim.is_none() && r.rm.is_none() && r.vepi.is_none() && r.texture_loss.is_none());
        let all = evaluate_clip_pair(
            &clip,
            &clip,
            None,
            &[Metric::Rm, Metric::Ssim, Metric::Psnr, Metric::Texture],
            RmMode::Paired,
        )
        .unwrap();
        assert_eq!((all.ssim, all.rm, all.texture_loss), (Some(1.0), Some(0.0), Some(0.0)));
        assert!(evaluate_clip_pair(&clip, &clip, None, &[Metric::Vepi], RmMode::Paired).is_err());
    }

    #[test]
    fn table_column_order() {
        let metrics = Metric::parse_list("psnr,vepi,rm,ssim").unwrap();
        let report = MetricReport {
            psnr: Some(f64::INFINITY),
            ssim: Some(1.0),
            rm: Some(0.0),
            vepi: Some(1.0),
            ..Default::default()
        };
        let table = format_table(&[("clip".into(), report)], &metrics);
        let mut lines = table.lines();
        assert_eq!(lines.next().unwrap(), "name\tRM\tSSIM\tPSNR\tVEPI");
        assert_eq!(lines.next().unwrap(), "clip\t0.000000\t1.000000\tinf\t1.000000");
        assert!(Metric::parse_list("fd").is_err());
    }
}
