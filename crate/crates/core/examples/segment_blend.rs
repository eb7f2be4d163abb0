//! Splits a 25-frame clip into overlapping segments, prints the blend
//! weights and checks the merged result against a whole-clip render.

use vbokeh::temporal::{self, Blend};
use vbokeh::{mpi, BokehParams, DisparityMap, FocalSpec, Frame, VideoClip};

fn main() -> vbokeh::Result<()> {
    let overlap = 4;
    let plan = temporal::plan_segments(25, overlap)?;
    for (i, s) in plan.segments().iter().enumerate() {
        println!("segment {i}: frames {:>2}..{:>2}", s.start, s.end);
    }
    println!(" j  cosine  linear");
    for j in 0..=overlap {
        println!("{j:>2}  {:.4}  {:.4}", temporal::blend_weight(j, overlap, Blend::Cosine)?, temporal::blend_weight(j, overlap, Blend::Linear)?);
    }

    let frames: Vec<Frame> = (0..25)
        .map(|t| Frame::from_fn(96, 64, |x, y| [((x + t) % 12) as f32 / 12.0, (y % 9) as f32 / 9.0, 0.5]))
        .collect::<vbokeh::Result<_>>()?;
    let disparity: Vec<DisparityMap> = (0..25)
        .map(|t| DisparityMap::from_fn(96, 64, |x, _| 0.2 + 0.6 * ((x + 2 * t) % 96) as f32 / 96.0))
        .collect::<vbokeh::Result<_>>()?;
    let clip = VideoClip::from_frames(frames)?;
    let params = BokehParams::new(FocalSpec::new(0.5)?, 10.0, 16)?;
    let whole = mpi::render_bokeh_clip(&clip, &disparity, &params)?;
    let merged = temporal::render_segmented(&clip, &disparity, &params, overlap, Blend::Cosine)?;
    let worst = merged.frames().iter().zip(whole.frames()).map(|(a, b)| a.max_abs_diff(b)).fold(0.0, f32::max);
    println!("merged vs whole-clip render: max difference {worst:e}");
    Ok(())
}
