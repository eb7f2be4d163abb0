//! Renders a two-plane scene with the thin-lens tracer at increasing sample
//! counts and compares the layered renderer against it.

use vbokeh::raytrace::{self, LensConfig, PlanarLayer, PlanarScene, Plane};
use vbokeh::{dataset, metrics, mpi, optics, BokehParams, FocalSpec, RgbaImage};

const SIZE: usize = 128;

fn main() -> vbokeh::Result<()> {
    let background: Vec<[f32; 4]> = (0..SIZE * SIZE)
        .map(|i| {
            let (x, y) = ((i % SIZE) as f32, (i / SIZE) as f32);
            let v = 0.5 + 0.4 * (x * 0.3).sin() * (y * 0.2).cos();
            [v, 0.6 * v, 0.3, 1.0]
        })
        .collect();
    let square: Vec<[f32; 4]> = (0..SIZE * SIZE)
        .map(|i| {
            let (x, y) = (i % SIZE, i / SIZE);
            if (40..88).contains(&x) && (40..88).contains(&y) {
                [0.95, 0.9, 0.2 + 0.6 * ((x + y) % 8) as f32 / 8.0, 1.0]
            } else {
                [0.0; 4]
            }
        })
        .collect();
    let scene = PlanarScene::new(vec![
        PlanarLayer { rgba: RgbaImage::from_straight(SIZE, SIZE, &square)?, plane: Plane::constant(0.8)? },
        PlanarLayer { rgba: RgbaImage::from_straight(SIZE, SIZE, &background)?, plane: Plane::from_center_gradient(0.25, 0.05, 0.02)? },
    ])?;

    let focal = FocalSpec::new(0.8)?;
    let strength = 12.0;
    let truth = raytrace::render_reference(&scene, focal, &LensConfig::new(strength, 1024, 0)?)?;
    for spp in [4, 16, 64, 256] {
        let frame = raytrace::render_reference(&scene, focal, &LensConfig::new(strength, spp, 1)?)?;
        println!("raytrace {spp:>4} spp: {:.2} dB vs 1024 spp", metrics::psnr(&frame, &truth)?);
    }

    let aif = raytrace::pinhole_composite(&scene)?;
    let disparity = dataset::scene_disparity(&scene)?;
    let norm = optics::clip_norm_constant(std::slice::from_ref(&disparity), focal);
    for layers in [4, 8, 16, 32] {
        let out = mpi::render_bokeh_frame(&aif, &disparity, &BokehParams::new(focal, strength, layers)?, norm)?;
        println!("layered N={layers:>2}:      {:.2} dB vs 1024 spp", metrics::psnr(&out, &truth)?);
    }
    Ok(())
}
