//! Applies each disparity corruption to a synthetic map and reports how far
//! it moved.

use vbokeh::perturb::{self, MorphOp, PerturbPreset};
use vbokeh::DisparityMap;

fn summary(name: &str, clean: &DisparityMap, d: &DisparityMap) {
    let diffs: Vec<f32> = clean.values().iter().zip(d.values()).map(|(a, b)| (a - b).abs()).collect();
    let mean = diffs.iter().sum::<f32>() / diffs.len() as f32;
    let max = diffs.iter().copied().fold(0.0, f32::max);
    let (lo, hi) = d.min_max();
    println!("{name:<14} mean |Δ| {mean:.4}  max |Δ| {max:.4}  range [{lo:.3}, {hi:.3}]");
}

fn main() -> vbokeh::Result<()> {
    let clean = DisparityMap::from_fn(128, 96, |x, y| {
        let (dx, dy) = (x as f32 - 64.0, y as f32 - 48.0);
        if dx * dx + dy * dy < 30.0 * 30.0 { 0.8 } else { 0.2 + 0.1 * x as f32 / 128.0 }
    })?;

    summary("elastic", &clean, &perturb::elastic_transform(&clean, 6.0, 4.0, 1)?);
    summary("perlin", &clean, &perturb::perlin_noise_add(&clean, 0.05, 32.0, 1)?);
    for op in [MorphOp::Dilate, MorphOp::Erode, MorphOp::Open, MorphOp::Close] {
        summary(&format!("{op:?}").to_lowercase(), &clean, &perturb::morphological(&clean, op, 3)?);
    }
    summary("gaussian", &clean, &perturb::gaussian_blur(&clean, 2.0)?);

    let preset = PerturbPreset::stage2_default();
    let clip = vec![clean.clone(); 4];
    for seed in 0..4 {
        let (out, applied) = preset.apply_clip(&clip, seed)?;
        if applied {
            summary(&format!("preset seed {seed}"), &clean, &out[0]);
        } else {
            println!("preset seed {seed}  skipped");
        }
    }
    Ok(())
}
