//! In-memory data model: frames, clips, disparity maps and render parameters.
//!
//! All color data is linear light. sRGB transfer is applied only by [`crate::io`].

use crate::error::{Error, Result};

/// Linear-light RGB raster, row-major, channel values in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl Frame {
    /// Builds a frame from interleaved RGB samples.
    ///
    /// Values are clamped into [0, 1] and NaN is stored as 0.
    pub fn new(width: usize, height: usize, mut data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("frame dimensions must be at least 1x1"));
        }
        if data.len() != width * height * 3 {
            return Err(Error::LengthMismatch {
                expected: width * height * 3,
                found: data.len(),
            });
        }
        for v in &mut data {
            *v = clamp_unit(*v);
        }
        Ok(Frame {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [f32; 3]) -> Result<Self> {
        let data = (0..width * height).flat_map(|_| rgb).collect();
        Frame::new(width, height, data)
    }

    /// Builds a frame by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [f32; 3],
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Frame::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    /// Interleaved RGB samples.
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f32; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Rec.709 luma of every pixel.
    pub fn luma(&self) -> Vec<f64> {
        self.data
            .chunks_exact(3)
            .map(|p| 0.2126 * p[0] as f64 + 0.7152 * p[1] as f64 + 0.0722 * p[2] as f64)
            .collect()
    }

    /// Largest absolute per-channel difference.
    pub fn max_abs_diff(&self, other: &Frame) -> f32 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f32::max)
    }
}

#[inline]
pub(crate) fn clamp_unit(v: f32) -> f32 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

/// Ordered frames with uniform dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoClip {
    frames: Vec<Frame>,
    frame_rate: f64,
}

pub const DEFAULT_FRAME_RATE: f64 = 25.0;

impl VideoClip {
    pub fn new(frames: Vec<Frame>, frame_rate: f64) -> Result<Self> {
        let first = frames.first().ok_or(Error::Empty("video clip has no frames"))?;
        let dims = first.dims();
        if let Some(bad) = frames.iter().find(|f| f.dims() != dims) {
            return Err(Error::dims(dims, bad.dims()));
        }
        Ok(VideoClip { frames, frame_rate })
    }

    pub fn from_frames(frames: Vec<Frame>) -> Result<Self> {
        VideoClip::new(frames, DEFAULT_FRAME_RATE)
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<Frame> {
        self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frame_rate(&self) -> f64 {
        self.frame_rate
    }

    pub fn dims(&self) -> (usize, usize) {
        self.frames[0].dims()
    }
}

/// Per-pixel disparity (inverse depth), finite and strictly positive.
///
/// The scale is arbitrary; nothing assumes values lie in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct DisparityMap {
    width: usize,
    height: usize,
    values: Vec<f32>,
}

impl DisparityMap {
    pub fn new(width: usize, height: usize, values: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("disparity dimensions must be at least 1x1"));
        }
        if values.len() != width * height {
            return Err(Error::LengthMismatch {
                expected: width * height,
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("disparity map"));
        }
        if values.iter().any(|&v| v <= 0.0) {
            return Err(Error::invalid("disparity values must be strictly positive"));
        }
        Ok(DisparityMap {
            width,
            height,
            values,
        })
    }

    pub fn constant(width: usize, height: usize, value: f32) -> Result<Self> {
        DisparityMap::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f32,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        DisparityMap::new(width, height, values)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.values[y * self.width + x]
    }

    pub fn min_max(&self) -> (f32, f32) {
        self.values
            .iter()
            .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

/// Focal plane expressed as a disparity; the focal depth is its reciprocal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FocalSpec {
    disparity: f64,
}

impl FocalSpec {
    pub fn new(disparity: f64) -> Result<Self> {
        if !disparity.is_finite() || disparity <= 0.0 {
            return Err(Error::invalid(format!(
                "focal disparity must be finite and > 0, got {disparity}"
            )));
        }
        Ok(FocalSpec { disparity })
    }

    pub fn from_depth(depth: f64) -> Result<Self> {
        FocalSpec::new(1.0 / depth)
    }

    pub fn disparity(&self) -> f64 {
        self.disparity
    }

    pub fn depth(&self) -> f64 {
        1.0 / self.disparity
    }
}

/// The user-facing render contract: where to focus, how strong, how many layers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BokehParams {
    pub focal: FocalSpec,
    /// Blur radius in pixels per unit of disparity difference.
    pub strength: f64,
    /// Number of focal-plane-adapted layers.
    pub layers: usize,
}

impl BokehParams {
    pub fn new(focal: FocalSpec, strength: f64, layers: usize) -> Result<Self> {
        let p = BokehParams {
            focal,
            strength,
            layers,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.strength.is_finite() || self.strength < 0.0 {
            return Err(Error::invalid(format!(
                "blur strength must be finite and >= 0, got {}",
                self.strength
            )));
        }
        if self.layers < 2 {
            return Err(Error::invalid(format!(
                "layer count must be >= 2, got {}",
                self.layers
            )));
        }
        Ok(())
    }
}

/// Premultiplied linear RGBA raster.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbaImage {
    width: usize,
    height: usize,
    data: Vec<[f32; 4]>,
}

impl RgbaImage {
    pub fn new(width: usize, height: usize, data: Vec<[f32; 4]>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("image dimensions must be at least 1x1"));
        }
        if data.len() != width * height {
            return Err(Error::LengthMismatch {
                expected: width * height,
                found: data.len(),
            });
        }
        if data.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("rgba image"));
        }
        Ok(RgbaImage {
            width,
            height,
            data,
        })
    }

    pub fn transparent(width: usize, height: usize) -> Self {
        RgbaImage {
            width,
            height,
            data: vec![[0.0; 4]; width * height],
        }
    }

    /// An opaque layer holding the frame's colors.
    pub fn opaque(frame: &Frame) -> Self {
        let data = frame
            .data()
            .chunks_exact(3)
            .map(|p| [p[0], p[1], p[2], 1.0])
            .collect();
        RgbaImage {
            width: frame.width(),
            height: frame.height(),
            data,
        }
    }

    /// From straight (non-premultiplied) RGBA.
    pub fn from_straight(width: usize, height: usize, straight: &[[f32; 4]]) -> Result<Self> {
        let data = straight
            .iter()
            .map(|&[r, g, b, a]| {
                let a = clamp_unit(a);
                [clamp_unit(r) * a, clamp_unit(g) * a, clamp_unit(b) * a, a]
            })
            .collect();
        RgbaImage::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[[f32; 4]] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> [f32; 4] {
        self.data[y * self.width + x]
    }

    /// Bilinear sample at continuous pixel coordinates (pixel centers on
    /// integers), clamping reads to the image edge.
    #[inline]
    pub fn sample_bilinear(&self, x: f64, y: f64) -> [f32; 4] {
        let max_x = (self.width - 1) as f64;
        let max_y = (self.height - 1) as f64;
        let x = x.clamp(0.0, max_x);
        let y = y.clamp(0.0, max_y);
        let x0 = x.floor();
        let y0 = y.floor();
        let fx = (x - x0) as f32;
        let fy = (y - y0) as f32;
        let x0 = x0 as usize;
        let y0 = y0 as usize;
        if fx == 0.0 && fy == 0.0 {
            return self.get(x0, y0);
        }
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let p00 = self.get(x0, y0);
        let p10 = self.get(x1, y0);
        let p01 = self.get(x0, y1);
        let p11 = self.get(x1, y1);
        let mut out = [0.0f32; 4];
        for c in 0..4 {
            let top = p00[c] + (p10[c] - p00[c]) * fx;
            let bot = p01[c] + (p11[c] - p01[c]) * fx;
            out[c] = top + (bot - top) * fy;
        }
        out
    }
}
