//! Luminance frame containers, YUV4MPEG2/raw planar readers and the SI/TI
//! complexity indices computed from them.

mod siti;
mod y4m;

pub use siti::{
    classify, classify_siti, compute_siti, frame_si, frame_ti, siti_report, sobel_magnitude,
    Aggregation, FrameRecord, GradientField, SiTiCategory, SiTiLabel, SiTiProfile, SiTiReport,
    SiTiSummary, SiTiThresholds,
};
pub use y4m::{parse_raw_planar, parse_y4m, write_y4m, ChromaFormat};

use crate::error::{Error, Result};

/// One 8-bit luminance plane, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LumaFrame {
    width: usize,
    height: usize,
    samples: Vec<u8>,
}

impl LumaFrame {
    pub fn new(width: usize, height: usize, samples: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(format!(
                "frame dimensions must be positive, got {width}x{height}"
            )));
        }
        if samples.len() != width * height {
            return Err(Error::invalid(format!(
                "frame of {width}x{height} needs {} samples, got {}",
                width * height,
                samples.len()
            )));
        }
        Ok(Self {
            width,
            height,
            samples,
        })
    }

    /// A frame with every sample set to `value`.
    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Builds a frame by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> u8,
    ) -> Result<Self> {
        let mut samples = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                samples.push(f(x, y));
            }
        }
        Self::new(width, height, samples)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> u8 {
        self.samples[y * self.width + x]
    }

    pub fn into_samples(self) -> Vec<u8> {
        self.samples
    }
}

/// An ordered run of equally sized luminance frames.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoSequence {
    frames: Vec<LumaFrame>,
    frame_rate: f64,
}

impl VideoSequence {
    pub fn new(frames: Vec<LumaFrame>, frame_rate: f64) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::invalid("a video sequence needs at least one frame"))?;
        if !(frame_rate.is_finite() && frame_rate > 0.0) {
            return Err(Error::invalid(format!(
                "frame rate must be positive, got {frame_rate}"
            )));
        }
        let (w, h) = (first.width, first.height);
        if let Some((i, f)) = frames
            .iter()
            .enumerate()
            .find(|(_, f)| f.width != w || f.height != h)
        {
            return Err(Error::invalid(format!(
                "frame {i} is {}x{}, expected {w}x{h}",
                f.width, f.height
            )));
        }
        Ok(Self { frames, frame_rate })
    }

    pub fn frames(&self) -> &[LumaFrame] {
        &self.frames
    }

    pub fn frame_rate(&self) -> f64 {
        self.frame_rate
    }

    pub fn width(&self) -> usize {
        self.frames[0].width
    }

    pub fn height(&self) -> usize {
        self.frames[0].height
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}
