//! Numeric reference for mask-gated cross attention between query tokens
//! and visual tokens, conditioned on blur strength.
//!
//! Query tokens receive a projected Fourier embedding of the strength and
//! attend over `[global token, visual tokens]`, where the global token is the
//! mean of the projected visual tokens and is always admissible. The result is
//! added back through a `tanh` gate, so a zero gate is an exact identity.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::optics::MpiMask;

#[derive(Debug, Clone, PartialEq)]
pub struct TokenMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl TokenMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Empty("token matrix"));
        }
        if values.len() != rows * cols {
            return Err(Error::LengthMismatch {
                expected: rows * cols,
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("token values"));
        }
        Ok(TokenMatrix { rows, cols, values })
    }

    /// Uniform entries in [-1, 1).
    pub fn random(rows: usize, cols: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        TokenMatrix::new(rows, cols, (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Dense affine map `y = W x + b` with `W` stored row-major as `out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub inputs: usize,
    pub outputs: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Linear {
    pub fn new(inputs: usize, outputs: usize, weight: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if weight.len() != inputs * outputs || bias.len() != outputs {
            return Err(Error::invalid("linear map weight/bias shape mismatch"));
        }
        if weight.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("linear map parameters"));
        }
        Ok(Linear {
            inputs,
            outputs,
            weight,
            bias,
        })
    }

    /// Scaled uniform init.
    pub fn random(inputs: usize, outputs: usize, rng: &mut ChaCha8Rng) -> Self {
        let s = 1.0 / (inputs as f64).sqrt();
        Linear {
            inputs,
            outputs,
            weight: (0..inputs * outputs).map(|_| rng.random_range(-s..s)).collect(),
            bias: (0..outputs).map(|_| rng.random_range(-s..s)).collect(),
        }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.outputs)
            .map(|o| {
                let w = &self.weight[o * self.inputs..(o + 1) * self.inputs];
                self.bias[o] + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect()
    }
}

/// Stack of linear maps with ReLU between them.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Linear>,
}

impl Mlp {
    pub fn new(layers: Vec<Linear>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Empty("mlp layers"));
        }
        if layers.windows(2).any(|p| p[0].outputs != p[1].inputs) {
            return Err(Error::invalid("mlp layer shapes do not chain"));
        }
        Ok(Mlp { layers })
    }

    pub fn random(dims: &[usize], rng: &mut ChaCha8Rng) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::invalid("mlp needs input and output sizes"));
        }
        Mlp::new(dims.windows(2).map(|p| Linear::random(p[0], p[1], rng)).collect())
    }

    pub fn inputs(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn outputs(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut v = x.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            v = layer.apply(&v);
            if i + 1 < self.layers.len() {
                v.iter_mut().for_each(|a| *a = a.max(0.0));
            }
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateParams {
    pub gamma: f64,
    /// Strength embedding to query feature space.
    pub phi_m: Mlp,
    /// Visual token features to query feature space.
    pub phi_a: Mlp,
    pub n_freq: usize,
}

impl GateParams {
    /// Single-layer maps with random weights; `gamma` starts wherever the caller says.
    pub fn random(dim: usize, visual_dim: usize, n_freq: usize, gamma: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(GateParams {
            gamma,
            phi_m: Mlp::random(&[2 * n_freq + 1, dim], &mut rng)?,
            phi_a: Mlp::random(&[visual_dim, dim], &mut rng)?,
            n_freq,
        })
    }
}

/// `[sin(2^k pi K), cos(2^k pi K)]` for each band, followed by `K` itself.
pub fn fourier_embed(strength: f64, n_freq: usize) -> Result<Vec<f64>> {
    if n_freq < 1 {
        return Err(Error::invalid("n_freq must be >= 1"));
    }
    let mut out = Vec::with_capacity(2 * n_freq + 1);
    for k in 0..n_freq {
        let a = (1u64 << k) as f64 * std::f64::consts::PI * strength;
        out.push(a.sin());
        out.push(a.cos());
    }
    out.push(strength);
    Ok(out)
}

/// Admissibility over `[global token, visual tokens]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttentionMask {
    admissible: Vec<bool>,
}

impl AttentionMask {
    /// Prepends the always-admissible global token to per-visual-token flags.
    pub fn from_tokens(tokens: &[bool]) -> Self {
        let mut admissible = Vec::with_capacity(tokens.len() + 1);
        admissible.push(true);
        admissible.extend_from_slice(tokens);
        AttentionMask { admissible }
    }

    pub fn all(tokens: usize) -> Self {
        AttentionMask::from_tokens(&vec![true; tokens])
    }

    pub fn admissible(&self) -> &[bool] {
        &self.admissible
    }

    pub fn len(&self) -> usize {
        self.admissible.len()
    }

    pub fn is_empty(&self) -> bool {
        self.admissible.is_empty()
    }
}

/// Downsamples a raster mask to a token grid: bilinear sample at each token
/// center, admissible when the sampled coverage is at least one half.
pub fn raster_to_tokens(
    bits: &[bool],
    width: usize,
    height: usize,
    grid_w: usize,
    grid_h: usize,
) -> Result<Vec<bool>> {
    if bits.len() != width * height {
        return Err(Error::LengthMismatch {
            expected: width * height,
            found: bits.len(),
        });
    }
    if width == 0 || height == 0 || grid_w == 0 || grid_h == 0 {
        return Err(Error::Empty("mask raster or token grid"));
    }
    let at = |x: usize, y: usize| if bits[y * width + x] { 1.0 } else { 0.0 };
    let mut out = Vec::with_capacity(grid_w * grid_h);
    for gy in 0..grid_h {
        for gx in 0..grid_w {
            let x = ((gx as f64 + 0.5) * width as f64 / grid_w as f64 - 0.5).clamp(0.0, (width - 1) as f64);
            let y = ((gy as f64 + 0.5) * height as f64 / grid_h as f64 - 0.5).clamp(0.0, (height - 1) as f64);
            let (x0, y0) = (x.floor() as usize, y.floor() as usize);
            let (x1, y1) = ((x0 + 1).min(width - 1), (y0 + 1).min(height - 1));
            let (fx, fy) = (x - x0 as f64, y - y0 as f64);
            let top = at(x0, y0) * (1.0 - fx) + at(x1, y0) * fx;
            let bot = at(x0, y1) * (1.0 - fx) + at(x1, y1) * fx;
            out.push(top * (1.0 - fy) + bot * fy >= 0.5);
        }
    }
    Ok(out)
}

/// Token mask for one cumulative layer of a layered mask.
pub fn layer_token_mask(mask: &MpiMask, layer: usize, grid_w: usize, grid_h: usize) -> Result<AttentionMask> {
    if layer < 1 || layer > mask.layer_count() {
        return Err(Error::invalid(format!(
            "layer {layer} outside 1..={}",
            mask.layer_count()
        )));
    }
    let (w, h) = mask.dims();
    Ok(AttentionMask::from_tokens(&raster_to_tokens(&mask.layer(layer), w, h, grid_w, grid_h)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionOutput {
    pub output: TokenMatrix,
    /// One row per query over `[global, visual tokens]`.
    pub weights: Vec<Vec<f64>>,
}

/// Gated masked attention; see the module docs.
pub fn mpi_attention(
    queries: &TokenMatrix,
    visual: &TokenMatrix,
    strength: f64,
    mask: &AttentionMask,
    params: &GateParams,
) -> Result<AttentionOutput> {
    let dim = queries.cols;
    if params.phi_m.inputs() != 2 * params.n_freq + 1 || params.phi_m.outputs() != dim {
        return Err(Error::invalid("phi_m shape does not match embedding and query dimensions"));
    }
    if params.phi_a.inputs() != visual.cols || params.phi_a.outputs() != dim {
        return Err(Error::invalid("phi_a shape does not match visual and query dimensions"));
    }
    if mask.len() != visual.rows + 1 {
        return Err(Error::LengthMismatch {
            expected: visual.rows + 1,
            found: mask.len(),
        });
    }
    if !mask.admissible[0] {
        return Err(Error::invalid("global token must stay admissible"));
    }
    if !params.gamma.is_finite() {
        return Err(Error::NonFinite("gate"));
    }

    let cond = params.phi_m.apply(&fourier_embed(strength, params.n_freq)?);
    let projected: Vec<Vec<f64>> = (0..visual.rows).map(|r| params.phi_a.apply(visual.row(r))).collect();
    let mut keys = Vec::with_capacity(visual.rows + 1);
    keys.push((0..dim).map(|c| projected.iter().map(|t| t[c]).sum::<f64>() / visual.rows as f64).collect::<Vec<_>>());
    keys.extend(projected);

    let gate = params.gamma.tanh();
    let scale = 1.0 / (dim as f64).sqrt();
    let mut out = Vec::with_capacity(queries.values.len());
    let mut weights = Vec::with_capacity(queries.rows);
    for r in 0..queries.rows {
        let q: Vec<f64> = queries.row(r).iter().zip(&cond).map(|(a, b)| a + b).collect();
        let scores: Vec<f64> = keys
            .iter()
            .zip(&mask.admissible)
            .map(|(k, &ok)| {
                if ok {
                    scale * q.iter().zip(k).map(|(a, b)| a * b).sum::<f64>()
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        let peak = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = scores.iter().map(|s| (s - peak).exp()).collect();
        let total: f64 = exps.iter().sum();
        let w: Vec<f64> = exps.iter().map(|e| e / total).collect();
        for c in 0..dim {
            let attended: f64 = w.iter().zip(&keys).map(|(wi, k)| wi * k[c]).sum();
            out.push(queries.row(r)[c] + gate * attended);
        }
        weights.push(w);
    }
    Ok(AttentionOutput {
        output: TokenMatrix::new(queries.rows, dim, out)?,
        weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fourier_examples() {
        let e = fourier_embed(0.0, 4).unwrap();
        assert_eq!(e.len(), 9);
        for k in 0..4 {
            assert_eq!(e[2 * k], 0.0);
            assert_eq!(e[2 * k + 1], 1.0);
        }
        assert_eq!(e[8], 0.0);
        let one = fourier_embed(1.0, 1).unwrap();
        assert!(one[0].abs() < 1e-12);
        assert_eq!(one[1], -1.0);
        assert_eq!(fourier_embed(3.0, 8).unwrap().len(), 17);
        assert!(fourier_embed(1.0, 0).is_err());
    }

    fn instance(seed: u64, gamma: f64) -> (TokenMatrix, TokenMatrix, GateParams) {
        (
            TokenMatrix::random(6, 8, seed).unwrap(),
            TokenMatrix::random(10, 5, seed + 1).unwrap(),
            GateParams::random(8, 5, 8, gamma, seed + 2).unwrap(),
        )
    }

    #[test]
    fn zero_gate_is_identity() {
        let (q, v, p) = instance(1, 0.0);
        let out = mpi_attention(&q, &v, 12.0, &AttentionMask::all(10), &p).unwrap();
        assert_eq!(out.output, q);
    }

    #[test]
    fn global_only_is_one_hot() {
        let (q, v, p) = instance(2, 0.7);
        let out = mpi_attention(&q, &v, 5.0, &AttentionMask::from_tokens(&[false; 10]), &p).unwrap();
        for row in &out.weights {
            assert_eq!(row[0], 1.0);
            assert!(row[1..].iter().all(|&w| w == 0.0));
        }
    }

    #[test]
    fn bounded_update() {
        let (q, v, p) = instance(3, 1.3);
        let out = mpi_attention(&q, &v, 9.0, &AttentionMask::all(10), &p).unwrap();
        let projected: Vec<Vec<f64>> = (0..v.rows()).map(|r| p.phi_a.apply(v.row(r))).collect();
        let vmax = projected.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
        let delta = out.output.values().iter().zip(q.values()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(delta <= 1.3f64.tanh() * vmax + 1e-12);
    }

    #[test]
    fn shape_errors() {
        let (q, v, p) = instance(4, 0.5);
        assert!(mpi_attention(&q, &v, 1.0, &AttentionMask::all(9), &p).is_err());
        let wrong = GateParams::random(7, 5, 8, 0.5, 1).unwrap();
        assert!(mpi_attention(&q, &v, 1.0, &AttentionMask::all(10), &wrong).is_err());
        assert!(TokenMatrix::new(1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn raster_downsampling() {
        // Left half set on an 8x4 raster, 4x2 grid.
        let bits: Vec<bool> = (0..32).map(|i| i % 8 < 4).collect();
        let t = raster_to_tokens(&bits, 8, 4, 4, 2).unwrap();
        assert_eq!(t, vec![true, true, false, false, true, true, false, false]);
        let all = vec![true; 32];
        assert!(raster_to_tokens(&all, 8, 4, 3, 3).unwrap().iter().all(|&b| b));
    }
}
