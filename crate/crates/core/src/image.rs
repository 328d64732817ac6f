use crate::error::GeometryError;
use serde::{Deserialize, Serialize};

/// Sentinel for "no data" pixels. Every operation treats 0.0 as missing,
/// never as a range of zero meters.
pub const INVALID_DEPTH: f32 = 0.0;

/// Rectangular grid of range measurements in meters, row-major.
///
/// Valid pixels are strictly positive and finite; everything else is the
/// invalid sentinel. Matches the 640x480 depth maps the sensor produces.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    width: u32,
    height: u32,
    data: Vec<f32>,
}

impl DepthImage {
    /// All-invalid image of the given size.
    pub fn new_invalid(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            data: vec![INVALID_DEPTH; (width as usize) * (height as usize)],
        }
    }

    /// Builds an image from row-major data, rejecting negative, NaN or
    /// infinite samples. Zero is the invalid sentinel and passes through.
    pub fn from_data(width: u32, height: u32, data: Vec<f32>) -> Result<Self, GeometryError> {
        if data.len() != (width as usize) * (height as usize) {
            return Err(GeometryError::DimensionMismatch(format!(
                "{}x{} image needs {} samples, got {}",
                width,
                height,
                (width as usize) * (height as usize),
                data.len()
            )));
        }
        for (i, &d) in data.iter().enumerate() {
            if d != INVALID_DEPTH && !(d.is_finite() && d > 0.0) {
                return Err(GeometryError::InvalidDepth(format!(
                    "sample {i} = {d} is neither valid range nor the invalid sentinel"
                )));
            }
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> ImageDims {
        ImageDims {
            width: self.width,
            height: self.height,
        }
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn index(&self, u: u32, v: u32) -> usize {
        (v as usize) * (self.width as usize) + u as usize
    }

    #[inline]
    pub fn get(&self, u: u32, v: u32) -> f32 {
        self.data[self.index(u, v)]
    }

    #[inline]
    pub fn set(&mut self, u: u32, v: u32, value: f32) {
        let i = self.index(u, v);
        self.data[i] = value;
    }

    #[inline]
    pub fn is_valid(&self, u: u32, v: u32) -> bool {
        self.get(u, v) != INVALID_DEPTH
    }

    /// Number of valid pixels.
    pub fn valid_count(&self) -> usize {
        self.data.iter().filter(|&&d| d != INVALID_DEPTH).count()
    }

    /// Invalidates every pixel excluded by `keep`.
    pub fn masked(&self, keep: &PixelMask) -> Result<Self, GeometryError> {
        if keep.width != self.width || keep.height != self.height {
            return Err(GeometryError::DimensionMismatch(format!(
                "mask {}x{} vs image {}x{}",
                keep.width, keep.height, self.width, self.height
            )));
        }
        let data = self
            .data
            .iter()
            .zip(keep.bits.iter())
            .map(|(&d, &k)| if k { d } else { INVALID_DEPTH })
            .collect();
        Ok(Self {
            width: self.width,
            height: self.height,
            data,
        })
    }
}

/// Boolean mask over an image grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelMask {
    pub width: u32,
    pub height: u32,
    pub bits: Vec<bool>,
}

impl PixelMask {
    pub fn new(width: u32, height: u32, value: bool) -> Self {
        Self {
            width,
            height,
            bits: vec![value; (width as usize) * (height as usize)],
        }
    }

    #[inline]
    pub fn get(&self, u: u32, v: u32) -> bool {
        self.bits[(v as usize) * (self.width as usize) + u as usize]
    }

    #[inline]
    pub fn set(&mut self, u: u32, v: u32, value: bool) {
        self.bits[(v as usize) * (self.width as usize) + u as usize] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// True iff every set bit of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &PixelMask) -> bool {
        self.width == other.width
            && self.height == other.height
            && self
                .bits
                .iter()
                .zip(other.bits.iter())
                .all(|(&a, &b)| !a || b)
    }

    pub fn invert(&self) -> PixelMask {
        PixelMask {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|&b| !b).collect(),
        }
    }

    /// Intersection-over-union against an equally sized mask. Two empty
    /// masks agree perfectly (1.0).
    pub fn iou(&self, other: &PixelMask) -> f64 {
        assert_eq!((self.width, self.height), (other.width, other.height));
        let mut inter = 0usize;
        let mut union = 0usize;
        for (a, b) in self.bits.iter().zip(&other.bits) {
            if *a && *b {
                inter += 1;
            }
            if *a || *b {
                union += 1;
            }
        }
        if union == 0 {
            1.0
        } else {
            inter as f64 / union as f64
        }
    }

    /// Number of 4-connected components of set pixels.
    pub fn connected_components(&self) -> usize {
        let w = self.width as usize;
        let h = self.height as usize;
        let mut seen = vec![false; self.bits.len()];
        let mut components = 0;
        let mut stack = Vec::new();
        for start in 0..self.bits.len() {
            if !self.bits[start] || seen[start] {
                continue;
            }
            components += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(n) = stack.pop() {
                let (u, v) = (n % w, n / w);
                let mut visit = |nu: usize, nv: usize| {
                    let m = nv * w + nu;
                    if self.bits[m] && !seen[m] {
                        seen[m] = true;
                        stack.push(m);
                    }
                };
                if u > 0 {
                    visit(u - 1, v);
                }
                if u + 1 < w {
                    visit(u + 1, v);
                }
                if v > 0 {
                    visit(u, v - 1);
                }
                if v + 1 < h {
                    visit(u, v + 1);
                }
            }
        }
        components
    }
}

/// 8-bit RGB image, row-major, interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            data: vec![0; (width as usize) * (height as usize) * 3],
        }
    }

    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        let mut img = Self::new(width, height);
        for chunk in img.data.chunks_exact_mut(3) {
            chunk.copy_from_slice(&rgb);
        }
        img
    }

    pub fn from_data(width: u32, height: u32, data: Vec<u8>) -> Result<Self, GeometryError> {
        if data.len() != (width as usize) * (height as usize) * 3 {
            return Err(GeometryError::DimensionMismatch(format!(
                "{}x{} rgb image needs {} bytes, got {}",
                width,
                height,
                (width as usize) * (height as usize) * 3,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, u: u32, v: u32) -> [u8; 3] {
        let i = ((v as usize) * (self.width as usize) + u as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set(&mut self, u: u32, v: u32, rgb: [u8; 3]) {
        let i = ((v as usize) * (self.width as usize) + u as usize) * 3;
        self.data[i] = rgb[0];
        self.data[i + 1] = rgb[1];
        self.data[i + 2] = rgb[2];
    }
}

/// Pixel dimensions used in configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageDims {
    pub width: u32,
    pub height: u32,
}

impl ImageDims {
    pub const VGA: ImageDims = ImageDims {
        width: 640,
        height: 480,
    };
}
