use nalgebra::Point3;
use std::collections::HashMap;

/// Nearest-neighbor queries over a fixed set of points.
///
/// Small sets use brute force. Larger sets use a uniform hash grid whose
/// cell edge is twice the median nearest-neighbor spacing, searched in
/// expanding shells until the best candidate provably beats any unvisited
/// cell — results are exact, not approximate. Ties break on (distance,
/// index) so queries are order-independent.
pub struct NeighborIndex {
    points: Vec<Point3<f64>>,
    grid: Option<HashGrid>,
}

const BRUTE_FORCE_LIMIT: usize = 2000;

struct HashGrid {
    cell: f64,
    cells: HashMap<(i64, i64, i64), Vec<u32>>,
}

impl HashGrid {
    fn key(&self, p: &Point3<f64>) -> (i64, i64, i64) {
        (
            (p.x / self.cell).floor() as i64,
            (p.y / self.cell).floor() as i64,
            (p.z / self.cell).floor() as i64,
        )
    }
}

impl NeighborIndex {
    pub fn build(points: &[Point3<f64>]) -> Self {
        let points = points.to_vec();
        if points.len() <= BRUTE_FORCE_LIMIT {
            return Self { points, grid: None };
        }
        let cell = (2.0 * median_spacing_sampled(&points)).max(1e-9);
        let mut cells: HashMap<(i64, i64, i64), Vec<u32>> = HashMap::new();
        let grid = HashGrid {
            cell,
            cells: HashMap::new(),
        };
        for (i, p) in points.iter().enumerate() {
            cells.entry(grid.key(p)).or_default().push(i as u32);
        }
        Self {
            points,
            grid: Some(HashGrid { cell, cells }),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point3<f64>] {
        &self.points
    }

    /// Index and squared distance of the nearest point, or None when empty.
    pub fn nearest(&self, q: &Point3<f64>) -> Option<(usize, f64)> {
        self.k_nearest(q, 1).into_iter().next()
    }

    /// The k nearest points to `q` as (index, squared distance), closest
    /// first. May return fewer than k when the set is small.
    pub fn k_nearest(&self, q: &Point3<f64>, k: usize) -> Vec<(usize, f64)> {
        if k == 0 || self.points.is_empty() {
            return Vec::new();
        }
        match &self.grid {
            None => self.k_nearest_brute(q, k),
            Some(grid) => self.k_nearest_grid(grid, q, k),
        }
    }

    fn k_nearest_brute(&self, q: &Point3<f64>, k: usize) -> Vec<(usize, f64)> {
        let mut all: Vec<(usize, f64)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| (i, (p - q).norm_squared()))
            .collect();
        all.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        all.truncate(k);
        all
    }

    fn k_nearest_grid(&self, grid: &HashGrid, q: &Point3<f64>, k: usize) -> Vec<(usize, f64)> {
        let (qx, qy, qz) = grid.key(q);
        // best[k-1] holds the current worst of the kept candidates
        let mut best: Vec<(f64, u32)> = Vec::with_capacity(k + 1);
        let mut radius = 0i64;
        loop {
            for cx in (qx - radius)..=(qx + radius) {
                for cy in (qy - radius)..=(qy + radius) {
                    for cz in (qz - radius)..=(qz + radius) {
                        // only the new shell, not the interior already seen
                        let on_shell = (cx - qx).abs() == radius
                            || (cy - qy).abs() == radius
                            || (cz - qz).abs() == radius;
                        if !on_shell {
                            continue;
                        }
                        let Some(ids) = grid.cells.get(&(cx, cy, cz)) else {
                            continue;
                        };
                        for &i in ids {
                            let d2 = (self.points[i as usize] - q).norm_squared();
                            let cand = (d2, i);
                            let pos = best
                                .binary_search_by(|b| {
                                    b.0.total_cmp(&cand.0).then(b.1.cmp(&cand.1))
                                })
                                .unwrap_or_else(|e| e);
                            if pos < k {
                                best.insert(pos, cand);
                                best.truncate(k);
                            }
                        }
                    }
                }
            }
            // After visiting shells 0..=radius, any unvisited point lies at
            // least radius*cell away; stop once the kept set beats that.
            let shell_min_dist = radius as f64 * grid.cell;
            let want = k.min(self.points.len());
            if best.len() >= want && best[want - 1].0 <= shell_min_dist * shell_min_dist {
                break;
            }
            radius += 1;
            if radius as f64 * grid.cell > 1e7 {
                return self.k_nearest_brute(q, k);
            }
        }
        best.into_iter().map(|(d2, i)| (i as usize, d2)).collect()
    }
}

/// Median nearest-neighbor spacing, estimated from a deterministic stride
/// subsample for large clouds.
pub fn median_spacing_sampled(points: &[Point3<f64>]) -> f64 {
    if points.len() < 2 {
        return 1e-3;
    }
    const MAX_SAMPLES: usize = 512;
    let stride = (points.len() / MAX_SAMPLES).max(1);
    let mut spacings: Vec<f64> = Vec::new();
    for i in (0..points.len()).step_by(stride) {
        let p = &points[i];
        let mut best = f64::INFINITY;
        for (j, r) in points.iter().enumerate() {
            if i == j {
                continue;
            }
            let d2 = (r - p).norm_squared();
            if d2 < best {
                best = d2;
            }
        }
        if best.is_finite() {
            spacings.push(best.sqrt());
        }
    }
    if spacings.is_empty() {
        return 1e-3;
    }
    spacings.sort_by(f64::total_cmp);
    spacings[spacings.len() / 2]
}
