//! Reference answers for small instances: exhaustive Kmeans and the
//! adjusted Rand index for comparing partitions.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::{Hourly, HOURS};

pub const MAX_ORACLE_POINTS: usize = 12;
pub const MAX_ORACLE_K: usize = 3;

fn partition_wcss(points: &[Hourly], labels: &[usize], blocks: usize) -> f64 {
    let mut total = 0.0;
    for b in 0..blocks {
        let members: Vec<&Hourly> = points.iter().zip(labels).filter(|(_, &l)| l == b).map(|(p, _)| p).collect();
        let n = members.len() as f64;
        let mut centre = [0.0; HOURS];
        for m in &members {
            for h in 0..HOURS {
                centre[h] += m[h];
            }
        }
        for c in &mut centre {
            *c /= n;
        }
        for m in &members {
            for h in 0..HOURS {
                let d = m[h] - centre[h];
                total += d * d;
            }
        }
    }
    total
}

/// Minimum WCSS over every partition of `points` into at most `k`
/// non-empty blocks, with the lexicographically smallest optimal labelling
/// (blocks numbered in order of first appearance).
pub fn brute_force_kmeans(points: &[Hourly], k: usize) -> Result<(f64, Vec<usize>)> {
    if points.len() > MAX_ORACLE_POINTS || k > MAX_ORACLE_K {
        return Err(Error::InstanceTooLarge { n: points.len(), k });
    }
    if points.is_empty() || k == 0 {
        return Err(Error::Parameter("need at least one point and one cluster".into()));
    }
    let n = points.len();
    let mut labels = vec![0usize; n];
    let mut best: Option<(f64, Vec<usize>)> = None;

    // Restricted growth strings in lexicographic order.
    fn walk(i: usize, used: usize, k: usize, labels: &mut Vec<usize>, points: &[Hourly], best: &mut Option<(f64, Vec<usize>)>) {
        if i == labels.len() {
            let w = partition_wcss(points, labels, used);
            if best.as_ref().is_none_or(|(b, _)| w < *b) {
                *best = Some((w, labels.clone()));
            }
            return;
        }
        for l in 0..=used.min(k - 1) {
            labels[i] = l;
            walk(i + 1, used.max(l + 1), k, labels, points, best);
        }
    }
    walk(1, 1, k, &mut labels, points, &mut best);
    Ok(best.expect("at least one partition"))
}

fn pairs(n: u64) -> f64 {
    (n * n.saturating_sub(1)) as f64 / 2.0
}

/// Adjusted Rand index between two labellings of the same items.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labellings differ in length");
    let n = a.len() as u64;
    let mut table: HashMap<(usize, usize), u64> = HashMap::new();
    let mut rows: HashMap<usize, u64> = HashMap::new();
    let mut cols: HashMap<usize, u64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&c| pairs(c)).sum();
    let sum_rows: f64 = rows.values().map(|&c| pairs(c)).sum();
    let sum_cols: f64 = cols.values().map(|&c| pairs(c)).sum();
    let total = pairs(n);
    if total == 0.0 {
        return 1.0;
    }
    let expected = sum_rows * sum_cols / total;
    let max = (sum_rows + sum_cols) / 2.0;
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}
