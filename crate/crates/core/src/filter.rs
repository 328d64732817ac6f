use crate::cloud::PointCloud;
use crate::error::GeometryError;
use crate::spatial::NeighborIndex;

/// Result of a statistical outlier pass.
pub struct FilterOutcome {
    pub cloud: PointCloud,
    /// True when the input was too small to estimate neighborhood
    /// statistics and was passed through untouched.
    pub undersized: bool,
    /// Indices (into the input cloud) of removed points.
    pub removed: Vec<usize>,
}

/// Removes points whose mean distance to their `k` nearest neighbors
/// exceeds the population mean by more than `std_ratio` standard
/// deviations.
///
/// Clouds with k or fewer points pass through unchanged — with that few
/// points the neighborhood statistic is the whole cloud and everything
/// would look like its own outlier.
pub fn statistical_outlier_filter(
    cloud: &PointCloud,
    k: usize,
    std_ratio: f64,
) -> Result<FilterOutcome, GeometryError> {
    if k == 0 {
        return Err(GeometryError::InvalidParameter(
            "outlier filter needs k >= 1".into(),
        ));
    }
    if !std_ratio.is_finite() || std_ratio <= 0.0 {
        return Err(GeometryError::InvalidParameter(format!(
            "std_ratio must be positive, got {std_ratio}"
        )));
    }
    let n = cloud.len();
    if n <= k {
        return Ok(FilterOutcome {
            cloud: cloud.clone(),
            undersized: true,
            removed: Vec::new(),
        });
    }

    let index = NeighborIndex::build(cloud.points());
    let mut mean_dists = Vec::with_capacity(n);
    for p in cloud.points() {
        // k+1 because the query point finds itself at distance zero
        let neighbors = index.k_nearest(p, k + 1);
        let sum: f64 = neighbors.iter().skip(1).map(|(_, d2)| d2.sqrt()).sum();
        mean_dists.push(sum / k as f64);
    }

    let mean: f64 = mean_dists.iter().sum::<f64>() / n as f64;
    let var: f64 = mean_dists.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n as f64;
    let threshold = mean + std_ratio * var.sqrt();

    let keep: Vec<bool> = mean_dists.iter().map(|&d| d <= threshold).collect();
    let removed = keep
        .iter()
        .enumerate()
        .filter(|(_, &kept)| !kept)
        .map(|(i, _)| i)
        .collect();
    Ok(FilterOutcome {
        cloud: cloud.filtered(&keep),
        undersized: false,
        removed,
    })
}
