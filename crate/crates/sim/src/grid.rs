use serde::{Deserialize, Serialize};

/// Rectangular node grid over the membrane, nodes indexed (i, j) with i
/// along x (the long side) and j along y, node n = j*nx + i. The physical
/// extent is fixed by the sensor (355 mm x 205 mm by default) while the
/// resolution is configurable, so the two cell spacings generally differ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MembraneGrid {
    pub nx: usize,
    pub ny: usize,
    pub width_m: f64,
    pub height_m: f64,
    /// Center of the membrane rectangle in the camera frame (x, y).
    pub center_x: f64,
    pub center_y: f64,
}

impl Default for MembraneGrid {
    fn default() -> Self {
        Self {
            nx: 128,
            ny: 128,
            width_m: 0.355,
            height_m: 0.205,
            center_x: 0.0,
            center_y: 0.0,
        }
    }
}

impl MembraneGrid {
    pub fn node_count(&self) -> usize {
        self.nx * self.ny
    }

    pub fn hx(&self) -> f64 {
        self.width_m / (self.nx - 1) as f64
    }

    pub fn hy(&self) -> f64 {
        self.height_m / (self.ny - 1) as f64
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    #[inline]
    pub fn node_x(&self, i: usize) -> f64 {
        self.center_x - 0.5 * self.width_m + i as f64 * self.hx()
    }

    #[inline]
    pub fn node_y(&self, j: usize) -> f64 {
        self.center_y - 0.5 * self.height_m + j as f64 * self.hy()
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.nx - 1 || j == self.ny - 1
    }

    pub fn x_min(&self) -> f64 {
        self.center_x - 0.5 * self.width_m
    }

    pub fn y_min(&self) -> f64 {
        self.center_y - 0.5 * self.height_m
    }

    pub fn x_max(&self) -> f64 {
        self.center_x + 0.5 * self.width_m
    }

    pub fn y_max(&self) -> f64 {
        self.center_y + 0.5 * self.height_m
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min() && x <= self.x_max() && y >= self.y_min() && y <= self.y_max()
    }

    /// Nearest node to a physical (x, y), or None outside the rectangle.
    pub fn nearest_node(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        if !self.contains(x, y) {
            return None;
        }
        let i = ((x - self.x_min()) / self.hx()).round() as usize;
        let j = ((y - self.y_min()) / self.hy()).round() as usize;
        Some((i.min(self.nx - 1), j.min(self.ny - 1)))
    }

    /// Bilinear interpolation of a node field at physical (x, y).
    pub fn interpolate(&self, field: &[f64], x: f64, y: f64) -> Option<f64> {
        if !self.contains(x, y) {
            return None;
        }
        let fx = (x - self.x_min()) / self.hx();
        let fy = (y - self.y_min()) / self.hy();
        let i0 = (fx.floor() as usize).min(self.nx - 2);
        let j0 = (fy.floor() as usize).min(self.ny - 2);
        let tx = fx - i0 as f64;
        let ty = fy - j0 as f64;
        let z00 = field[self.index(i0, j0)];
        let z10 = field[self.index(i0 + 1, j0)];
        let z01 = field[self.index(i0, j0 + 1)];
        let z11 = field[self.index(i0 + 1, j0 + 1)];
        Some(z00 * (1.0 - tx) * (1.0 - ty) + z10 * tx * (1.0 - ty) + z01 * (1.0 - tx) * ty + z11 * tx * ty)
    }
}

/// Boolean mask over grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMask {
    pub nx: usize,
    pub ny: usize,
    bits: Vec<bool>,
}

impl GridMask {
    pub fn new(nx: usize, ny: usize) -> Self {
        Self {
            nx,
            ny,
            bits: vec![false; nx * ny],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[j * self.nx + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        self.bits[j * self.nx + i] = v;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn is_subset_of(&self, other: &GridMask) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && self
                .bits
                .iter()
                .zip(&other.bits)
                .all(|(a, b)| !*a || *b)
    }

    pub fn iou(&self, other: &GridMask) -> f64 {
        assert_eq!((self.nx, self.ny), (other.nx, other.ny));
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
            // two empty masks agree perfectly
            1.0
        } else {
            inter as f64 / union as f64
        }
    }

    /// Number of 4-connected components of set nodes.
    pub fn connected_components(&self) -> usize {
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
                let (i, j) = (n % self.nx, n / self.nx);
                let mut visit = |ni: usize, nj: usize| {
                    let m = nj * self.nx + ni;
                    if self.bits[m] && !seen[m] {
                        seen[m] = true;
                        stack.push(m);
                    }
                };
                if i > 0 {
                    visit(i - 1, j);
                }
                if i + 1 < self.nx {
                    visit(i + 1, j);
                }
                if j > 0 {
                    visit(i, j - 1);
                }
                if j + 1 < self.ny {
                    visit(i, j + 1);
                }
            }
        }
        components
    }
}
