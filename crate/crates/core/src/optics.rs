//! Circle-of-confusion math and the focal-plane-adapted layer decomposition.
//!
//! The blur radius of a point at disparity `d` is `K * |d - d_f|`. Layer
//! boundaries are placed at normalized distances `h_i = (i / N)^e` from the
//! focal plane with `e = min(1, 1 / d_f)`, so a deep focal plane (small `d_f`)
//! keeps uniform spacing while a shallow one spreads the thresholds.

use crate::error::{Error, Result};
use crate::model::{DisparityMap, FocalSpec};

/// Lower bound applied to the threshold exponent.
pub const MIN_EXPONENT: f64 = 1e-3;

/// Circle-of-confusion radius in pixels.
pub fn coc_radius(disparity: f64, focal: FocalSpec, strength: f64) -> Result<f64> {
    if !disparity.is_finite() || !strength.is_finite() {
        return Err(Error::NonFinite("circle-of-confusion inputs"));
    }
    if disparity <= 0.0 {
        return Err(Error::invalid("disparity must be > 0"));
    }
    if strength < 0.0 {
        return Err(Error::invalid("blur strength must be >= 0"));
    }
    Ok(strength * (disparity - focal.disparity()).abs())
}

/// The `N - 1` layer thresholds for one focal plane.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSchedule {
    layers: usize,
    thresholds: Vec<f64>,
    exponent: f64,
}

impl ThresholdSchedule {
    pub fn layer_count(&self) -> usize {
        self.layers
    }

    /// `h_1 .. h_{N-1}`, strictly increasing in (0, 1).
    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    /// Threshold of layer `i` (1-based); the outermost layer uses an implicit 1.
    pub fn threshold(&self, layer: usize) -> f64 {
        if layer >= self.layers {
            1.0
        } else {
            self.thresholds[layer - 1]
        }
    }

    /// Normalized distance at the middle of band `i` (1-based).
    pub fn band_midpoint(&self, band: usize) -> f64 {
        let lo = if band <= 1 {
            0.0
        } else {
            self.threshold(band - 1)
        };
        0.5 * (lo + self.threshold(band))
    }
}

pub fn layer_thresholds(layers: usize, focal: FocalSpec) -> Result<ThresholdSchedule> {
    if layers < 2 {
        return Err(Error::invalid(format!(
            "layer count must be >= 2, got {layers}"
        )));
    }
    let exponent = (1.0 / focal.disparity()).min(1.0).max(MIN_EXPONENT);
    let thresholds = (1..layers)
        .map(|i| (i as f64 / layers as f64).powf(exponent))
        .collect();
    Ok(ThresholdSchedule {
        layers,
        thresholds,
        exponent,
    })
}

/// Largest `|d - d_f|` over a whole clip.
pub fn clip_norm_constant(disparities: &[DisparityMap], focal: FocalSpec) -> f64 {
    let df = focal.disparity();
    disparities
        .iter()
        .flat_map(|m| m.values())
        .map(|&d| (d as f64 - df).abs())
        .fold(0.0, f64::max)
}

/// Same as [`clip_norm_constant`] but from a cached disparity range.
pub fn norm_constant_from_range(min: f64, max: f64, focal: FocalSpec) -> f64 {
    let df = focal.disparity();
    (max - df).abs().max((min - df).abs())
}

/// Normalized `|d - d_f|` for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct VdMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
    norm_constant: f64,
}

impl VdMap {
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm_constant(&self) -> f64 {
        self.norm_constant
    }
}

/// Normalizes one frame's distance-to-focus by an externally supplied constant.
pub fn vd_map(disparity: &DisparityMap, focal: FocalSpec, norm_constant: f64) -> VdMap {
    let df = focal.disparity();
    let values = disparity
        .values()
        .iter()
        .map(|&d| {
            if norm_constant > 0.0 {
                ((d as f64 - df).abs() / norm_constant).min(1.0)
            } else {
                0.0
            }
        })
        .collect();
    VdMap {
        width: disparity.width(),
        height: disparity.height(),
        values,
        norm_constant,
    }
}

/// Normalized disparity-difference maps for a clip, using one clip-wide maximum.
pub fn disparity_difference_map(
    disparities: &[DisparityMap],
    focal: FocalSpec,
) -> Result<Vec<VdMap>> {
    if disparities.is_empty() {
        return Err(Error::Empty("disparity sequence"));
    }
    let norm = clip_norm_constant(disparities, focal);
    Ok(disparities
        .iter()
        .map(|d| vd_map(d, focal, norm))
        .collect())
}

/// Nested focal-plane-adapted layers `m_1 ⊆ m_2 ⊆ ... ⊆ m_N`.
///
/// Stored as the index of the first layer containing each pixel, which makes
/// nesting hold by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct MpiMask {
    width: usize,
    height: usize,
    layers: usize,
    first_layer: Vec<u16>,
}

impl MpiMask {
    /// Builds a mask from explicit layer rasters, checking the nesting.
    pub fn from_layers(width: usize, height: usize, layers: &[Vec<bool>]) -> Result<Self> {
        let n = layers.len();
        if n < 2 {
            return Err(Error::invalid("a mask needs at least two layers"));
        }
        if let Some(bad) = layers.iter().find(|l| l.len() != width * height) {
            return Err(Error::LengthMismatch {
                expected: width * height,
                found: bad.len(),
            });
        }
        let mut first_layer = vec![0u16; width * height];
        for (p, first) in first_layer.iter_mut().enumerate() {
            let mut found = None;
            for (i, layer) in layers.iter().enumerate() {
                match (found, layer[p]) {
                    (None, true) => found = Some(i + 1),
                    (Some(_), false) => return Err(Error::NestingViolation { layer: i }),
                    _ => {}
                }
            }
            match found {
                Some(i) => *first = i as u16,
                None => return Err(Error::invalid("outermost mask layer must cover every pixel")),
            }
        }
        Ok(MpiMask {
            width,
            height,
            layers: n,
            first_layer,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn layer_count(&self) -> usize {
        self.layers
    }

    /// 1-based index of the innermost layer containing each pixel.
    pub fn first_layers(&self) -> &[u16] {
        &self.first_layer
    }

    pub fn contains(&self, layer: usize, pixel: usize) -> bool {
        self.first_layer[pixel] as usize <= layer
    }

    /// Raster of layer `i` (1-based).
    pub fn layer(&self, layer: usize) -> Vec<bool> {
        self.first_layer
            .iter()
            .map(|&f| f as usize <= layer)
            .collect()
    }
}

pub fn build_mpi_mask(
    disparity: &DisparityMap,
    focal: FocalSpec,
    layers: usize,
    norm_ref: f64,
) -> Result<MpiMask> {
    let schedule = layer_thresholds(layers, focal)?;
    build_mpi_mask_with(disparity, focal, &schedule, norm_ref)
}

pub fn build_mpi_mask_with(
    disparity: &DisparityMap,
    focal: FocalSpec,
    schedule: &ThresholdSchedule,
    norm_ref: f64,
) -> Result<MpiMask> {
    let df = focal.disparity();
    let n = schedule.layer_count();
    let h = schedule.thresholds();
    let degenerate = !(norm_ref > 0.0);
    let mut first_layer = Vec::with_capacity(disparity.values().len());
    for &d in disparity.values() {
        let dist = (d as f64 - df).abs();
        if degenerate {
            if dist > 0.0 {
                return Err(Error::invalid(
                    "normalization constant must be > 0 when pixels lie off the focal plane",
                ));
            }
            first_layer.push(1);
            continue;
        }
        let t = dist / norm_ref;
        // First i with t < h_i; thresholds are sorted.
        let idx = h.partition_point(|&hi| hi <= t);
        first_layer.push((idx + 1).min(n) as u16);
    }
    Ok(MpiMask {
        width: disparity.width(),
        height: disparity.height(),
        layers: n,
        first_layer,
    })
}

/// Disjoint bands `m_i \ m_{i-1}` that partition the pixel grid.
pub fn exclusive_bands(mask: &MpiMask) -> Vec<Vec<bool>> {
    (1..=mask.layers)
        .map(|i| mask.first_layer.iter().map(|&f| f as usize == i).collect())
        .collect()
}
