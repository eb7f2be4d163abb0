//! Overlapping-segment processing for long clips: split into windows of
//! `2L` frames that stride by `L`, process each, and cross-fade overlaps.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::model::{BokehParams, DisparityMap, Frame, VideoClip};
use crate::{mpi, optics};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Blend {
    #[default]
    Cosine,
    Linear,
}

impl std::str::FromStr for Blend {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine" => Ok(Blend::Cosine),
            "linear" => Ok(Blend::Linear),
            other => Err(Error::invalid(format!("unknown blend `{other}`"))),
        }
    }
}

/// Weight of the earlier segment at overlap-local index `j` of `len`.
pub fn blend_weight(j: usize, len: usize, blend: Blend) -> Result<f64> {
    if len == 0 {
        return Err(Error::invalid("overlap length must be >= 1"));
    }
    if j > len {
        return Err(Error::invalid(format!("overlap index {j} exceeds length {len}")));
    }
    let s = j as f64 / len as f64;
    Ok(match blend {
        Blend::Cosine => (1.0 + (std::f64::consts::PI * s).cos()) / 2.0,
        Blend::Linear => 1.0 - s,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentPlan {
    overlap: usize,
    total: usize,
    segments: Vec<Range<usize>>,
}

impl SegmentPlan {
    pub fn overlap(&self) -> usize {
        self.overlap
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn segments(&self) -> &[Range<usize>] {
        &self.segments
    }

    /// Number of segments covering frame `t`.
    pub fn coverage(&self, t: usize) -> usize {
        self.segments.iter().filter(|r| r.contains(&t)).count()
    }
}

/// Windows of `2 * overlap` frames at stride `overlap`, plus a final window
/// anchored at the end when the stride leaves frames uncovered.
pub fn plan_segments(total: usize, overlap: usize) -> Result<SegmentPlan> {
    if overlap < 1 {
        return Err(Error::invalid("overlap must be >= 1"));
    }
    if total < 1 {
        return Err(Error::invalid("clip must have at least one frame"));
    }
    let len = 2 * overlap;
    let mut segments = Vec::new();
    if total <= len {
        segments.push(0..total);
    } else {
        let mut start = 0;
        while start + len <= total {
            segments.push(start..start + len);
            start += overlap;
        }
        if segments.last().is_some_and(|r| r.end < total) {
            segments.push(total - len..total);
        }
    }
    Ok(SegmentPlan {
        overlap,
        total,
        segments,
    })
}

/// Folds segments left to right; each overlap is cross-faded over its actual length.
pub fn merge_segments(plan: &SegmentPlan, rendered: &[VideoClip], blend: Blend) -> Result<VideoClip> {
    if rendered.len() != plan.segments.len() {
        return Err(Error::LengthMismatch {
            expected: plan.segments.len(),
            found: rendered.len(),
        });
    }
    for (range, clip) in plan.segments.iter().zip(rendered) {
        if clip.len() != range.len() {
            return Err(Error::LengthMismatch {
                expected: range.len(),
                found: clip.len(),
            });
        }
    }
    let dims = rendered[0].dims();
    if let Some(bad) = rendered.iter().find(|c| c.dims() != dims) {
        return Err(Error::dims(dims, bad.dims()));
    }
    let mut out: Vec<Frame> = rendered[0].frames().to_vec();
    for (range, clip) in plan.segments.iter().zip(rendered).skip(1) {
        let ov = out.len().saturating_sub(range.start);
        for j in 0..ov {
            let gamma = blend_weight(j, ov, blend)?;
            let earlier = &out[range.start + j];
            let later = &clip.frames()[j];
            // later + gamma * (earlier - later) is exact when both agree.
            let data = earlier
                .data()
                .iter()
                .zip(later.data())
                .map(|(&a, &b)| (b as f64 + gamma * (a as f64 - b as f64)) as f32)
                .collect();
            out[range.start + j] = Frame::new(dims.0, dims.1, data)?;
        }
        out.extend_from_slice(&clip.frames()[ov..]);
    }
    VideoClip::new(out, rendered[0].frame_rate())
}

/// Renders a clip segment by segment with the layered renderer and merges.
/// The focal normalization uses the whole clip so segments stay consistent.
pub fn render_segmented(
    clip: &VideoClip,
    disparities: &[DisparityMap],
    params: &BokehParams,
    overlap: usize,
    blend: Blend,
) -> Result<VideoClip> {
    if disparities.len() != clip.len() {
        return Err(Error::LengthMismatch {
            expected: clip.len(),
            found: disparities.len(),
        });
    }
    let plan = plan_segments(clip.len(), overlap)?;
    let norm = optics::clip_norm_constant(disparities, params.focal);
    let rendered = plan
        .segments()
        .iter()
        .map(|r| {
            let frames = mpi::render_bokeh_clip_with_norm(
                &clip.frames()[r.clone()],
                &disparities[r.clone()],
                params,
                norm,
            )?;
            VideoClip::new(frames, clip.frame_rate())
        })
        .collect::<Result<Vec<_>>>()?;
    merge_segments(&plan, &rendered, blend)
}
