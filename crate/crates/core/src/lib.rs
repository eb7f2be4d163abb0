//! Layered video bokeh rendering, reference ray tracing, dataset synthesis and
//! evaluation.

pub mod attention;
pub mod benchmark;
pub mod blur;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod io;
pub mod metrics;
pub mod model;
pub mod mpi;
pub mod optics;
pub mod perturb;
pub mod raytrace;
pub mod rng;
pub mod service;
pub mod temporal;

pub use error::{Error, Result};
pub use model::{BokehParams, DisparityMap, FocalSpec, Frame, RgbaImage, VideoClip};
