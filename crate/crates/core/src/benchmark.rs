//! Evaluates the layered renderer against a generated test set, optionally
//! with corrupted disparity.

use std::path::Path;

use rayon::prelude::*;

use crate::dataset::{Manifest, AIF_DIR, BOKEH_DIR, DISPARITY_DIR, MANIFEST_NAME, META_NAME};
use crate::error::Result;
use crate::io::{self, Sidecar};
use crate::metrics::{self, Metric, MetricReport, RmMode, RoiMask};
use crate::model::{BokehParams, FocalSpec};
use crate::perturb::PerturbPreset;
use crate::rng;
use crate::temporal::{self, Blend};

#[derive(Debug, Clone, PartialEq)]
pub struct TestsetOptions {
    pub metrics: Vec<Metric>,
    pub rm_mode: RmMode,
    /// Corrupts each clip's disparity before rendering; the seed is per run.
    pub perturb: Option<(PerturbPreset, u64)>,
    /// Overrides the layer count stored with each video.
    pub layers: Option<usize>,
    pub overlap: usize,
    pub blend: Blend,
}

impl Default for TestsetOptions {
    fn default() -> Self {
        TestsetOptions {
            metrics: vec![Metric::Rm, Metric::Ssim, Metric::Psnr],
            rm_mode: RmMode::Paired,
            perturb: None,
            layers: None,
            overlap: 4,
            blend: Blend::Cosine,
        }
    }
}

/// Per-video reports in manifest order.
pub fn evaluate_testset(dir: &Path, options: &TestsetOptions) -> Result<Vec<(String, MetricReport)>> {
    let manifest = Manifest::read(&dir.join(MANIFEST_NAME))?;
    manifest
        .entries
        .par_iter()
        .enumerate()
        .map(|(i, entry)| {
            let video = dir.join(&entry.path);
            let aif = io::load_frame_sequence(&video.join(AIF_DIR))?;
            let gt = io::load_frame_sequence(&video.join(BOKEH_DIR))?;
            let clean = io::load_disparity_sequence(&video.join(DISPARITY_DIR))?;
            let meta = Sidecar::read_optional(&video.join(META_NAME))?;
            let layers = options
                .layers
                .or_else(|| meta.get("layers").and_then(|v| v.parse().ok()))
                .unwrap_or(16);
            let focal = FocalSpec::new(entry.focus_disparity)?;
            let params = BokehParams::new(focal, entry.strength, layers)?;
            let disparity = match &options.perturb {
                Some((preset, seed)) => preset.apply_clip(&clean, rng::derive_seed(*seed, i as u64))?.0,
                None => clean.clone(),
            };
            let pred = temporal::render_segmented(&aif, &disparity, &params, options.overlap, options.blend)?;
            // Sharp region: circle of confusion under half a pixel, widened to
            // follow the focused layer as depth motion rescales its disparity.
            let tolerance = (0.5 / entry.strength.max(1e-9)).max(0.06 * entry.focus_disparity);
            let rois: Vec<RoiMask> = clean.iter().map(|d| RoiMask::in_focus(d, focal, tolerance)).collect();
            let others: Vec<Metric> = options.metrics.iter().copied().filter(|&m| m != Metric::Vepi).collect();
            let mut report = metrics::evaluate_clip_pair(&pred, &gt, None, &others, options.rm_mode)?;
            if options.metrics.contains(&Metric::Vepi) {
                // Frames where nothing is in focus have no ROI and are skipped.
                let mut scores = Vec::new();
                for ((p, g), roi) in pred.frames().iter().zip(gt.frames()).zip(&rois) {
                    if roi.count() == 0 {
                        report.vepi_degenerate_frames += 1;
                        continue;
                    }
                    let s = metrics::vepi_detailed(p, g, roi)?;
                    report.vepi_degenerate_frames += usize::from(s.degenerate);
                    scores.push(s.value);
                }
                report.vepi = (!scores.is_empty()).then(|| scores.iter().sum::<f64>() / scores.len() as f64);
            }
            Ok((entry.id.clone(), report))
        })
        .collect()
}

/// Mean of each metric across reports.
pub fn mean_report(reports: &[(String, MetricReport)]) -> MetricReport {
    let avg = |m: Metric| {
        let v: Vec<f64> = reports.iter().filter_map(|(_, r)| r.get(m)).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    };
    MetricReport {
        rm: avg(Metric::Rm),
        ssim: avg(Metric::Ssim),
        psnr: avg(Metric::Psnr),
        vepi: avg(Metric::Vepi),
        texture_loss: avg(Metric::Texture),
        vepi_degenerate_frames: reports.iter().map(|(_, r)| r.vepi_degenerate_frames).sum(),
    }
}
