//! CSV and JSON artifacts written into a run directory.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kmeans::ElbowPoint;
use crate::metrics::{round7, MiaVariant};
use crate::model::{ClusteringResult, Hourly, MethodParams, NodeCoord, SomGrid, HOURS};

fn hour_columns() -> impl Iterator<Item = String> {
    (0..HOURS).map(|h| format!("h{h}"))
}

fn six(values: &Hourly) -> impl Iterator<Item = String> + '_ {
    values.iter().map(|v| format!("{v:.6}"))
}

fn parse_hourly(fields: &[&str], line: u64) -> Result<Hourly> {
    if fields.len() != HOURS {
        return Err(Error::Format(format!("line {line}: expected {HOURS} hourly values")));
    }
    let mut v = [0.0; HOURS];
    for (slot, f) in v.iter_mut().zip(fields) {
        *slot = f
            .parse()
            .map_err(|_| Error::Format(format!("line {line}: invalid value '{f}'")))?;
    }
    Ok(v)
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

/// `household_id,cluster,label`; `cluster` is 0-based, `label` 1-based.
pub fn write_assignments<W: Write>(result: &ClusteringResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["household_id", "cluster", "label"])?;
    for (id, &c) in result.household_ids.iter().zip(&result.assignments) {
        w.write_record([id.clone(), c.to_string(), ClusteringResult::label(c)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_assignments<R: Read>(input: R) -> Result<Vec<(String, usize)>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let cluster = rec
            .get(1)
            .and_then(|c| c.parse().ok())
            .ok_or_else(|| Error::Format(format!("line {line}: invalid cluster index")))?;
        out.push((rec[0].to_string(), cluster));
    }
    Ok(out)
}

/// `cluster,label,size,empty,h0..h23`.
pub fn write_centroids<W: Write>(result: &ClusteringResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["cluster".to_string(), "label".into(), "size".into(), "empty".into()];
    header.extend(hour_columns());
    w.write_record(header)?;
    let sizes = result.sizes();
    for (c, centroid) in result.centroids.iter().enumerate() {
        let mut rec = vec![
            c.to_string(),
            ClusteringResult::label(c),
            sizes[c].to_string(),
            result.empty[c].to_string(),
        ];
        rec.extend(six(centroid));
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Centroids and empty flags, in cluster order.
pub fn read_centroids<R: Read>(input: R) -> Result<(Vec<Hourly>, Vec<bool>)> {
    let mut r = csv::Reader::from_reader(input);
    let mut centroids = Vec::new();
    let mut empty = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let fields: Vec<&str> = rec.iter().collect();
        if fields.len() != 4 + HOURS {
            return Err(Error::Format(format!("line {}: wrong centroid field count", line_of(&rec))));
        }
        empty.push(fields[3] == "true");
        centroids.push(parse_hourly(&fields[4..], line_of(&rec))?);
    }
    Ok((centroids, empty))
}

/// `node_row,node_col,h0..h23`, row-major.
pub fn write_codebooks<W: Write>(grid: &SomGrid, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["node_row".to_string(), "node_col".into()];
    header.extend(hour_columns());
    w.write_record(header)?;
    for (i, cb) in grid.codebooks().iter().enumerate() {
        let c = grid.coord(i);
        let mut rec = vec![c.row.to_string(), c.col.to_string()];
        rec.extend(six(cb));
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_codebooks<R: Read>(input: R) -> Result<SomGrid> {
    let mut r = csv::Reader::from_reader(input);
    let mut nodes = BTreeMap::new();
    for rec in r.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let fields: Vec<&str> = rec.iter().collect();
        if fields.len() != 2 + HOURS {
            return Err(Error::Format(format!("line {line}: wrong codebook field count")));
        }
        let bad = || Error::Format(format!("line {line}: invalid node coordinate"));
        let row: usize = fields[0].parse().map_err(|_| bad())?;
        let col: usize = fields[1].parse().map_err(|_| bad())?;
        nodes.insert((row, col), parse_hourly(&fields[2..], line)?);
    }
    let height = nodes.keys().map(|(r, _)| r + 1).max().unwrap_or(0);
    let width = nodes.keys().map(|(_, c)| c + 1).max().unwrap_or(0);
    let mut codebooks = Vec::with_capacity(width * height);
    for row in 0..height {
        for col in 0..width {
            let cb = nodes
                .get(&(row, col))
                .ok_or_else(|| Error::Format(format!("codebook for node {:?} is missing", NodeCoord::new(col, row))))?;
            codebooks.push(*cb);
        }
    }
    SomGrid::new(width, height, codebooks)
}

pub fn write_elbow<W: Write>(curve: &[ElbowPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "wcss"])?;
    for p in curve {
        w.write_record([p.k.to_string(), format!("{:.7}", p.wcss)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_elbow<R: Read>(input: R) -> Result<Vec<ElbowPoint>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let bad = || Error::Format(format!("line {}: invalid elbow row", line_of(&rec)));
        let k = rec.get(0).and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        let wcss = rec.get(1).and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        out.push(ElbowPoint { k, wcss });
    }
    Ok(out)
}

/// Contents of `metrics.json`.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport<'a> {
    pub method: String,
    pub k: usize,
    pub non_empty_clusters: usize,
    pub mia: f64,
    pub mia_variant: MiaVariant,
    pub wcss: f64,
    pub sizes: Vec<usize>,
    pub seed: u64,
    pub identity_check: bool,
    pub params: &'a MethodParams,
}

impl<'a> MetricsReport<'a> {
    pub fn new(result: &'a ClusteringResult, mia: f64, variant: MiaVariant, wcss: f64, identity_check: bool) -> Self {
        Self {
            method: result.method.to_string(),
            k: result.k,
            non_empty_clusters: result.non_empty_count(),
            mia: round7(mia),
            mia_variant: variant,
            wcss: round7(wcss),
            sizes: result.sizes(),
            seed: result.seed,
            identity_check,
            params: &result.params,
        }
    }
}

/// `household_id,kept,dropped` per household.
pub fn write_cleaning<W: Write>(kept: &BTreeMap<String, usize>, dropped: &BTreeMap<String, usize>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["household_id", "kept", "dropped"])?;
    for (id, d) in dropped {
        w.write_record([id.clone(), kept.get(id).copied().unwrap_or(0).to_string(), d.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `household_id,reason`.
pub fn write_excluded<W: Write>(excluded: &[String], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["household_id", "reason"])?;
    for id in excluded {
        w.write_record([id.as_str(), "no valid days in stratum"])?;
    }
    w.flush()?;
    Ok(())
}
