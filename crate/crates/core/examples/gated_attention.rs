//! Builds token masks from a layer decomposition and runs the gated masked
//! attention reference, showing how the gate and the mask shape the output.

use vbokeh::attention::{layer_token_mask, mpi_attention, GateParams, TokenMatrix};
use vbokeh::optics;
use vbokeh::{DisparityMap, FocalSpec};

fn main() -> vbokeh::Result<()> {
    let disparity = DisparityMap::from_fn(64, 64, |x, _| 0.1 + 0.8 * x as f32 / 63.0)?;
    let focal = FocalSpec::new(0.5)?;
    let norm = optics::clip_norm_constant(std::slice::from_ref(&disparity), focal);
    let mask = optics::build_mpi_mask(&disparity, focal, 4, norm)?;

    let (grid_w, grid_h) = (4, 4);
    let visual = TokenMatrix::random(grid_w * grid_h, 6, 1)?;
    let queries = TokenMatrix::random(3, 8, 2)?;

    for layer in 1..=4 {
        let tokens = layer_token_mask(&mask, layer, grid_w, grid_h)?;
        let open = tokens.admissible().iter().filter(|&&b| b).count();
        for gamma in [0.0, 1.0] {
            let params = GateParams::random(8, 6, 4, gamma, 3)?;
            let out = mpi_attention(&queries, &visual, 12.0, &tokens, &params)?;
            let moved = out.output.values().iter().zip(queries.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let global = out.weights[0][0];
            println!("layer {layer}  admissible keys {open:>2}  gamma {gamma}  max |Δq| {moved:.4}  weight on global token {global:.3}");
        }
    }
    Ok(())
}
