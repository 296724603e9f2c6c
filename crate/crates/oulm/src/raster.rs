//! Row-major raster containers shared by every stage of the pipeline.
//!
//! `GrayImage` keeps real-valued intensities in `[0, 255]` and is only
//! quantized to 8 bit when exported; the blur/noise/normalization chains in
//! the generator would lose precision if each step rounded.

use crate::error::{Error, Result};

/// Grayscale raster with real-valued intensities in `[0, 255]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

/// Binary foreground/background raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

/// Per-pixel real-valued map; holds probabilities or base-2 binary entropies,
/// both of which live in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMap {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

fn check_len(kind: &str, width: usize, height: usize, len: usize) -> Result<()> {
    if len != width * height {
        return Err(Error::Domain(format!(
            "{kind}: data length {len} does not match {width}x{height}"
        )));
    }
    Ok(())
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        check_len("GrayImage", width, height, data.len())?;
        if let Some(v) = data.iter().find(|v| !v.is_finite() || **v < 0.0 || **v > 255.0) {
            return Err(Error::Domain(format!("GrayImage: intensity {v} outside [0, 255]")));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Self {
        Self { width, height, data: vec![value; width * height] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    /// Intensity quantized for 8-bit export: round half away from zero, clamp.
    #[inline]
    pub fn quantize(v: f32) -> u8 {
        v.round().clamp(0.0, 255.0) as u8
    }
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        check_len("BinaryMask", width, height, data.len())?;
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Self {
        Self { width, height, data: vec![value; width * height] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.data[y * self.width + x] = value;
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.data
    }

    pub fn count_foreground(&self) -> usize {
        self.data.iter().filter(|v| **v).count()
    }

    pub fn same_size(&self, other: &BinaryMask) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch {
                expected_w: self.width,
                expected_h: self.height,
                got_w: other.width,
                got_h: other.height,
            });
        }
        Ok(())
    }

    /// True iff the foreground is nonempty and forms one 4-connected component.
    pub fn is_single_component(&self) -> bool {
        let total = self.count_foreground();
        if total == 0 {
            return false;
        }
        let start = self.data.iter().position(|v| *v).unwrap();
        let mut seen = vec![false; self.data.len()];
        let mut stack = vec![start];
        seen[start] = true;
        let mut reached = 0usize;
        while let Some(idx) = stack.pop() {
            reached += 1;
            let (x, y) = (idx % self.width, idx / self.width);
            let mut push = |nx: usize, ny: usize| {
                let nidx = ny * self.width + nx;
                if self.data[nidx] && !seen[nidx] {
                    seen[nidx] = true;
                    stack.push(nidx);
                }
            };
            if x > 0 {
                push(x - 1, y);
            }
            if x + 1 < self.width {
                push(x + 1, y);
            }
            if y > 0 {
                push(x, y - 1);
            }
            if y + 1 < self.height {
                push(x, y + 1);
            }
        }
        reached == total
    }
}

impl ProbMap {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        check_len("ProbMap", width, height, data.len())?;
        if let Some(v) = data.iter().find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0) {
            return Err(Error::Domain(format!("ProbMap: value {v} outside [0, 1]")));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Self {
        Self { width, height, data: vec![value; width * height] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn same_size(&self, other: &ProbMap) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch {
                expected_w: self.width,
                expected_h: self.height,
                got_w: other.width,
                got_h: other.height,
            });
        }
        Ok(())
    }

    /// Thresholds at `p >= 0.5` into a foreground mask.
    pub fn threshold(&self) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|p| *p >= 0.5).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn length_mismatch_rejected() {
        assert!(GrayImage::new(2, 2, vec![0.0; 3]).is_err());
        assert!(BinaryMask::new(2, 2, vec![false; 5]).is_err());
        assert!(ProbMap::new(1, 2, vec![0.5]).is_err());
    }

    #[test]
    fn domain_bounds_enforced() {
        assert!(GrayImage::new(1, 1, vec![256.0]).is_err());
        assert!(GrayImage::new(1, 1, vec![-0.1]).is_err());
        assert!(ProbMap::new(1, 1, vec![1.2]).is_err());
        assert!(ProbMap::new(1, 1, vec![f32::NAN]).is_err());
    }

    #[test]
    fn quantize_rounds_half_away_and_clamps() {
        assert_eq!(GrayImage::quantize(254.5), 255);
        assert_eq!(GrayImage::quantize(-3.0), 0);
        assert_eq!(GrayImage::quantize(0.49), 0);
        assert_eq!(GrayImage::quantize(300.0), 255);
    }

    #[test]
    fn single_component_detection() {
        let mut m = BinaryMask::filled(4, 4, false);
        assert!(!m.is_single_component());
        m.set(0, 0, true);
        m.set(1, 0, true);
        assert!(m.is_single_component());
        m.set(3, 3, true);
        assert!(!m.is_single_component());
        m.set(2, 0, true);
        m.set(3, 0, true);
        m.set(3, 1, true);
        m.set(3, 2, true);
        assert!(m.is_single_component());
    }

    #[test]
    fn threshold_at_half() {
        let p = ProbMap::new(2, 1, vec![0.5, 0.49]).unwrap();
        let m = p.threshold();
        assert!(m.get(0, 0));
        assert!(!m.get(1, 0));
    }
}
