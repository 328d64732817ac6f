/// Symmetric positive-definite banded matrix in lower-band storage:
/// `band[d]` holds the d-th subdiagonal, `band[d][j] = A[j+d][j]`.
pub struct BandedSpd {
    pub n: usize,
    pub bandwidth: usize,
    bands: Vec<Vec<f64>>,
}

impl BandedSpd {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        let bands = (0..=bandwidth).map(|d| vec![0.0; n - d]).collect();
        Self {
            n,
            bandwidth,
            bands,
        }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        let (hi, lo) = if row >= col { (row, col) } else { (col, row) };
        let d = hi - lo;
        if d > self.bandwidth {
            0.0
        } else {
            self.bands[d][lo]
        }
    }

    /// Sets A[row][col] (and its mirror) — only within the band.
    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        let (hi, lo) = if row >= col { (row, col) } else { (col, row) };
        let d = hi - lo;
        assert!(d <= self.bandwidth, "entry ({row}, {col}) outside band");
        self.bands[d][lo] = value;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for (d, band) in self.bands.iter().enumerate() {
            if d == 0 {
                for (j, &a) in band.iter().enumerate() {
                    y[j] += a * x[j];
                }
            } else {
                for (j, &a) in band.iter().enumerate() {
                    y[j + d] += a * x[j];
                    y[j] += a * x[j + d];
                }
            }
        }
        y
    }

    /// In-place banded Cholesky, A = L·Lᵀ. Fails on non-positive pivots.
    pub fn cholesky(mut self) -> Option<BandedCholesky> {
        let n = self.n;
        let bw = self.bandwidth;
        for j in 0..n {
            let start = j.saturating_sub(bw);
            let mut diag = self.bands[0][j];
            for k in start..j {
                let l_jk = self.bands[j - k][k];
                diag -= l_jk * l_jk;
            }
            if diag <= 0.0 || !diag.is_finite() {
                return None;
            }
            let l_jj = diag.sqrt();
            self.bands[0][j] = l_jj;
            let row_end = (j + bw + 1).min(n);
            for i in (j + 1)..row_end {
                let mut v = self.bands[i - j][j];
                let kstart = i.saturating_sub(bw).max(start);
                for k in kstart..j {
                    v -= self.bands[i - k][k] * self.bands[j - k][k];
                }
                self.bands[i - j][j] = v / l_jj;
            }
        }
        Some(BandedCholesky { l: self })
    }
}

pub struct BandedCholesky {
    l: BandedSpd,
}

impl BandedCholesky {
    /// Solves A x = b via the stored factor.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.l.n;
        let bw = self.l.bandwidth;
        assert_eq!(b.len(), n);
        // forward: L y = b
        let mut y = b.to_vec();
        for j in 0..n {
            let yj = y[j] / self.l.bands[0][j];
            y[j] = yj;
            let row_end = (j + bw + 1).min(n);
            for i in (j + 1)..row_end {
                y[i] -= self.l.bands[i - j][j] * yj;
            }
        }
        // backward: Lᵀ x = y
        for j in (0..n).rev() {
            let row_end = (j + bw + 1).min(n);
            let mut v = y[j];
            for i in (j + 1)..row_end {
                v -= self.l.bands[i - j][j] * y[i];
            }
            y[j] = v / self.l.bands[0][j];
        }
        y
    }
}
