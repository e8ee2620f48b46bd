//! Load-diagram distance and the Mean Index Adequacy (MIA) compactness
//! measure.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{member_sums, AsHourly, ClusteringResult, HOURS};

/// RMS difference between two load diagrams. Panics if the lengths differ.
pub fn profile_distance(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "profile_distance: length mismatch");
    assert!(!a.is_empty(), "profile_distance: empty diagrams");
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (sum / a.len() as f64).sqrt()
}

/// How member distances are pooled within a cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MiaVariant {
    /// Squared distances summed over all members of each cluster, then
    /// averaged over clusters.
    #[default]
    Paper,
    /// Squared distances averaged within each cluster first.
    PerClusterMean,
}

impl fmt::Display for MiaVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MiaVariant::Paper => "paper",
            MiaVariant::PerClusterMean => "per-cluster-mean",
        })
    }
}

impl FromStr for MiaVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(MiaVariant::Paper),
            "per-cluster-mean" => Ok(MiaVariant::PerClusterMean),
            other => Err(Error::Parameter(format!("unknown MIA variant '{other}'"))),
        }
    }
}

/// MIA over the non-empty clusters of `result`, using its stored centroids.
pub fn mia<P: AsHourly>(result: &ClusteringResult, profiles: &[P], variant: MiaVariant) -> Result<f64> {
    if profiles.len() != result.assignments.len() {
        return Err(Error::Parameter(format!(
            "{} profiles but {} assignments",
            profiles.len(),
            result.assignments.len()
        )));
    }
    let mut sums = vec![0.0; result.k];
    let mut counts = vec![0usize; result.k];
    for (p, &c) in profiles.iter().zip(&result.assignments) {
        let d = profile_distance(p.hourly(), &result.centroids[c]);
        sums[c] += d * d;
        counts[c] += 1;
    }
    let live: Vec<(f64, usize)> = sums.into_iter().zip(counts).filter(|(_, n)| *n > 0).collect();
    if live.is_empty() {
        return Err(Error::NoClusters);
    }
    let total: f64 = match variant {
        MiaVariant::Paper => live.iter().map(|(s, _)| s).sum(),
        MiaVariant::PerClusterMean => live.iter().map(|(s, n)| s / *n as f64).sum(),
    };
    Ok((total / live.len() as f64).sqrt())
}

/// Cross-checks the MIA route (stored centroids, RMS distance) against WCSS
/// computed from member means with plain Euclidean distance:
/// `MIA^2 * K * H == WCSS` within `1e-9 * max(1, WCSS)`.
///
/// Fails when a stored centroid is not its members' mean.
pub fn mia_wcss_identity_check<P: AsHourly>(result: &ClusteringResult, profiles: &[P]) -> bool {
    let Ok(m) = mia(result, profiles, MiaVariant::Paper) else {
        return false;
    };
    let (sums, counts) = member_sums(result.k, &result.assignments, profiles);
    let means: Vec<_> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &n)| s.map(|v| v / n.max(1) as f64))
        .collect();
    let wcss: f64 = profiles
        .iter()
        .zip(&result.assignments)
        .map(|(p, &c)| crate::kmeans::euclidean_distance(p.hourly(), &means[c]).powi(2))
        .sum();
    let k_live = counts.iter().filter(|&&n| n > 0).count() as f64;
    (m * m * k_live * HOURS as f64 - wcss).abs() <= 1e-9 * wcss.max(1.0)
}

/// Rounds to the seven decimals used in reports.
pub fn round7(x: f64) -> f64 {
    (x * 1e7).round() / 1e7
}
