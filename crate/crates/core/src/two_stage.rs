//! Two-stage clustering (SOM lattice, then Kmeans over its codebooks) and
//! the three-way method comparison.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kmeans::{self, best_of_restarts_points, KmeansParams};
use crate::metrics::{mia, round7, MiaVariant};
use crate::model::{AsHourly, ClusteringResult, Hourly, MeanLoadProfile, Method, MethodParams, SomGrid};
use crate::som::{self, bmu, SomParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoStageParams {
    pub som: SomParams,
    pub kmeans: KmeansParams,
    /// Weight each codebook by the number of households mapped to it.
    pub weighted: bool,
}

impl TwoStageParams {
    /// 10x7 intermediate map reduced to `k` clusters.
    pub fn new(k: usize, som_seed: u64, kmeans_seed: u64) -> Self {
        Self {
            som: SomParams::new(10, 7, som_seed),
            kmeans: KmeansParams::new(k, kmeans_seed),
            weighted: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TwoStageOutput {
    pub result: ClusteringResult,
    pub grid: SomGrid,
    /// Final cluster of every SOM node.
    pub node_clusters: Vec<usize>,
    /// BMU node of every household, in input order.
    pub household_nodes: Vec<usize>,
}

pub fn two_stage_cluster(profiles: &[MeanLoadProfile], params: &TwoStageParams) -> Result<TwoStageOutput> {
    if profiles.len() < params.kmeans.k {
        return Err(Error::Parameter(format!(
            "k = {} exceeds the {} profiles",
            params.kmeans.k,
            profiles.len()
        )));
    }
    let grid = som::train_som(profiles, &params.som)?;
    cluster_grid(grid, profiles, params)
}

/// Second stage on an already trained grid.
pub fn cluster_grid(grid: SomGrid, profiles: &[MeanLoadProfile], params: &TwoStageParams) -> Result<TwoStageOutput> {
    let household_nodes: Vec<usize> = profiles.iter().map(|p| bmu(&grid, p.hourly())).collect();

    let node_clusters = if params.weighted {
        // Each codebook appears once per household it holds.
        let mut points = Vec::new();
        let mut first_copy = vec![None; grid.len()];
        for (node, w) in grid.codebooks().iter().enumerate() {
            let n = household_nodes.iter().filter(|&&b| b == node).count();
            if n > 0 {
                first_copy[node] = Some(points.len());
            }
            points.extend(std::iter::repeat_n(*w, n));
        }
        let fit = best_of_restarts_points(&points, &params.kmeans)?;
        grid.codebooks()
            .iter()
            .enumerate()
            .map(|(node, w)| match first_copy[node] {
                Some(i) => fit.labels[i],
                None => nearest_centroid(w, &fit.centroids),
            })
            .collect::<Vec<_>>()
    } else {
        best_of_restarts_points(grid.codebooks(), &params.kmeans)?.labels
    };
    // Keep stage-two centres for clusters no household reaches.
    let stage_two = stage_two_centres(&grid, &node_clusters, params.kmeans.k);

    let assignments = household_nodes.iter().map(|&n| node_clusters[n]).collect();
    let result = ClusteringResult::from_assignments(
        Method::TwoStage,
        params.kmeans.k,
        profiles.iter().map(|p| p.household_id.clone()).collect(),
        assignments,
        profiles,
        &stage_two,
        params.kmeans.base_seed,
        MethodParams::TwoStage {
            som: params.som.clone(),
            kmeans: params.kmeans.clone(),
            weighted: params.weighted,
        },
    )?;
    Ok(TwoStageOutput {
        result,
        grid,
        node_clusters,
        household_nodes,
    })
}

fn nearest_centroid(w: &Hourly, centroids: &[Hourly]) -> usize {
    let mut best = 0;
    for (i, c) in centroids.iter().enumerate() {
        if kmeans::squared_distance(w, c) < kmeans::squared_distance(w, &centroids[best]) {
            best = i;
        }
    }
    best
}

fn stage_two_centres(grid: &SomGrid, node_clusters: &[usize], k: usize) -> Vec<Hourly> {
    (0..k)
        .map(|c| {
            let members: Vec<&Hourly> = grid
                .codebooks()
                .iter()
                .zip(node_clusters)
                .filter(|(_, &l)| l == c)
                .map(|(w, _)| w)
                .collect();
            if members.is_empty() {
                [0.0; crate::model::HOURS]
            } else {
                kmeans::hourly_mean(&members)
            }
        })
        .collect()
}

/// Everything `compare_methods` needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareParams {
    pub kmeans: KmeansParams,
    pub som: SomParams,
    pub two_stage: TwoStageParams,
    pub mia_variant: MiaVariant,
}

impl CompareParams {
    /// Kmeans at `k`, a 3x3 SOM and a 10x7 two-stage run.
    pub fn new(k: usize, kmeans_seed: u64, som_seed: u64) -> Self {
        Self {
            kmeans: KmeansParams::new(k, kmeans_seed),
            som: SomParams::new(3, 3, som_seed),
            two_stage: TwoStageParams::new(k, som_seed, kmeans_seed),
            mia_variant: MiaVariant::Paper,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub method: Method,
    pub mia: f64,
    pub wcss: f64,
    pub sizes: Vec<usize>,
    pub best: bool,
}

/// A clustering plus the lattice it came from, if any.
#[derive(Debug, Clone)]
pub struct MethodRun {
    pub result: ClusteringResult,
    pub grid: Option<SomGrid>,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    pub runs: Vec<MethodRun>,
}

/// Runs Kmeans, SOM and two-stage on the same profiles and flags the
/// method with the lowest MIA. Results are canonically ordered.
pub fn compare_methods(profiles: &[MeanLoadProfile], params: &CompareParams) -> Result<Comparison> {
    let (km, (som, two)) = rayon::join(
        || kmeans::best_of_restarts(profiles, &params.kmeans),
        || {
            rayon::join(
                || som::som_cluster(profiles, &params.som),
                || two_stage_cluster(profiles, &params.two_stage),
            )
        },
    );
    let (som_result, som_grid) = som?;
    let two = two?;
    let runs = vec![
        MethodRun { result: km?, grid: None },
        MethodRun {
            result: som_result,
            grid: Some(som_grid),
        },
        MethodRun {
            result: two.result,
            grid: Some(two.grid),
        },
    ];
    compare_runs(runs, profiles, params.mia_variant)
}

/// Scores existing runs; shared with the pipeline.
pub fn compare_runs<P: AsHourly>(mut runs: Vec<MethodRun>, profiles: &[P], variant: MiaVariant) -> Result<Comparison> {
    let mut rows = Vec::with_capacity(runs.len());
    for run in &mut runs {
        run.result.canonicalize();
        rows.push(ComparisonRow {
            method: run.result.method,
            mia: mia(&run.result, profiles, variant)?,
            wcss: kmeans::wcss(&run.result, profiles),
            sizes: run.result.sizes(),
            best: false,
        });
    }
    let best = rows
        .iter()
        .enumerate()
        .fold(None, |acc: Option<(usize, f64)>, (i, r)| match acc {
            Some((_, m)) if r.mia >= m => acc,
            _ => Some((i, r.mia)),
        })
        .map(|(i, _)| i);
    if let Some(i) = best {
        rows[i].best = true;
    }
    Ok(Comparison { rows, runs })
}

fn join_sizes(sizes: &[usize]) -> String {
    sizes.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

/// `method,mia,wcss,sizes,best` with seven-decimal metrics and
/// space-separated sizes.
pub fn write_comparison_csv<W: Write>(rows: &[ComparisonRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["method", "mia", "wcss", "sizes", "best"])?;
    for r in rows {
        w.write_record([
            r.method.to_string(),
            format!("{:.7}", r.mia),
            format!("{:.7}", r.wcss),
            join_sizes(&r.sizes),
            r.best.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn comparison_json(rows: &[ComparisonRow]) -> serde_json::Value {
    serde_json::Value::Array(
        rows.iter()
            .map(|r| {
                serde_json::json!({
                    "method": r.method,
                    "mia": round7(r.mia),
                    "wcss": round7(r.wcss),
                    "sizes": r.sizes,
                    "best": r.best,
                })
            })
            .collect(),
    )
}
