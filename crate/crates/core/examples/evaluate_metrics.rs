//! Scores progressively blurred copies of a textured clip with every metric
//! and prints the table.

use vbokeh::blur::gaussian_blur_frame;
use vbokeh::metrics::{self, Metric, RmMode, RoiMask};
use vbokeh::{Frame, VideoClip};

fn main() -> vbokeh::Result<()> {
    let frames: Vec<Frame> = (0..6)
        .map(|t| {
            Frame::from_fn(96, 64, |x, y| {
                let v = ((x as f32 * 0.7 + t as f32).sin() * (y as f32 * 0.45).cos()) * 0.4 + 0.5;
                [v, 1.0 - v, 0.5 * v]
            })
        })
        .collect::<vbokeh::Result<_>>()?;
    let gt = VideoClip::from_frames(frames)?;
    // Left half counts as the in-focus region for the edge metric.
    let roi = RoiMask::new(96, 64, (0..96 * 64).map(|i| i % 96 < 48).collect())?;
    let rois = vec![roi; gt.len()];

    let mut rows = Vec::new();
    for sigma in [0.0, 1.0, 2.0, 4.0] {
        let pred = if sigma == 0.0 {
            gt.clone()
        } else {
            VideoClip::from_frames(gt.frames().iter().map(|f| gaussian_blur_frame(f, sigma)).collect())?
        };
        let report = metrics::evaluate_clip_pair(&pred, &gt, Some(&rois), &Metric::ALL, RmMode::Paired)?;
        rows.push((format!("sigma={sigma}"), report));
    }
    print!("{}", metrics::format_table(&rows, &Metric::ALL));
    Ok(())
}
