//! Renders the same synthetic clip focused on the foreground and on the
//! background, and prints the layer breakdown of one frame.
//!
//! ```text
//! cargo run --release --example refocus [out_dir]
//! ```

use std::path::PathBuf;

use vbokeh::io::{self, BitDepth};
use vbokeh::{mpi, optics, BokehParams, DisparityMap, FocalSpec, Frame, VideoClip};

const W: usize = 320;
const H: usize = 180;
const FRAMES: usize = 12;

/// Checkerboard background with a disk sliding across it.
fn synthetic_clip() -> (VideoClip, Vec<DisparityMap>) {
    let mut frames = Vec::new();
    let mut maps = Vec::new();
    for t in 0..FRAMES {
        let cx = 60.0 + 16.0 * t as f64;
        let inside = |x: usize, y: usize| {
            let (dx, dy) = (x as f64 - cx, y as f64 - 90.0);
            dx * dx + dy * dy < 40.0 * 40.0
        };
        frames.push(
            Frame::from_fn(W, H, |x, y| {
                if inside(x, y) {
                    [0.9, 0.35, 0.1]
                } else if (x / 16 + y / 16) % 2 == 0 {
                    [0.8, 0.8, 0.8]
                } else {
                    [0.1, 0.2, 0.4]
                }
            })
            .unwrap(),
        );
        maps.push(
            DisparityMap::from_fn(W, H, |x, y| if inside(x, y) { 0.8 } else { 0.1 + 0.2 * y as f32 / H as f32 })
                .unwrap(),
        );
    }
    (VideoClip::from_frames(frames).unwrap(), maps)
}

fn main() -> vbokeh::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("vbokeh-refocus"));
    let (clip, disparity) = synthetic_clip();

    for (name, focus) in [("near", 0.8), ("far", 0.2)] {
        let params = BokehParams::new(FocalSpec::new(focus)?, 24.0, 16)?;
        let rendered = mpi::render_bokeh_clip(&clip, &disparity, &params)?;
        let paths = io::save_frame_sequence(&rendered, &out.join(name), BitDepth::Eight)?;
        println!("{name}: {} frames in {}", paths.len(), out.join(name).display());
    }

    let focal = FocalSpec::new(0.8)?;
    let params = BokehParams::new(focal, 24.0, 16)?;
    let norm = optics::clip_norm_constant(&disparity, focal);
    let (_, layers) = mpi::render_bokeh_frame_debug(&clip.frames()[0], &disparity[0], &params, norm)?;
    println!("band  side    pixels  disparity  radius");
    for l in layers.iter().filter(|l| l.pixel_count > 0) {
        println!("{:>4}  {:<6} {:>7}  {:>9.3}  {:>6.2}", l.band, format!("{:?}", l.side), l.pixel_count, l.disparity, l.radius);
    }
    Ok(())
}
