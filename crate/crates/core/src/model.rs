//! Shared domain types: household-days, strata, load profiles, clustering
//! results and the hexagonal SOM lattice.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kmeans::KmeansParams;
use crate::som::SomParams;

/// Hourly slots per day.
pub const HOURS: usize = 24;

/// A 24-value hourly vector.
pub type Hourly = [f64; HOURS];

/// Anything that can be viewed as a 24-value hourly vector.
pub trait AsHourly {
    fn hourly(&self) -> &Hourly;
}

impl AsHourly for Hourly {
    fn hourly(&self) -> &Hourly {
        self
    }
}

impl<T: AsHourly + ?Sized> AsHourly for &T {
    fn hourly(&self) -> &Hourly {
        (**self).hourly()
    }
}

/// One household-day of hourly kWh readings; `None` marks a missing hour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourlyDay {
    pub household_id: String,
    pub date: NaiveDate,
    pub readings: [Option<f64>; HOURS],
}

impl HourlyDay {
    pub fn new(household_id: impl Into<String>, date: NaiveDate, readings: [Option<f64>; HOURS]) -> Result<Self> {
        for (hour, r) in readings.iter().enumerate() {
            if let Some(v) = r {
                if !v.is_finite() || *v < 0.0 {
                    return Err(Error::Range(format!("hour {hour} reading {v} is not a finite non-negative kWh value")));
                }
            }
        }
        Ok(Self {
            household_id: household_id.into(),
            date,
            readings,
        })
    }

    /// A day with every hour present.
    pub fn complete(household_id: impl Into<String>, date: NaiveDate, kwh: Hourly) -> Result<Self> {
        Self::new(household_id, date, kwh.map(Some))
    }

    pub fn missing_count(&self) -> usize {
        self.readings.iter().filter(|r| r.is_none()).count()
    }

    pub fn is_complete(&self) -> bool {
        self.readings.iter().all(Option::is_some)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Season {
    Winter,
    Summer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DayType {
    Weekday,
    Weekend,
}

/// A (season, day type) slice of the calendar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Stratum {
    pub season: Season,
    pub day_type: DayType,
}

impl Stratum {
    pub const ALL: [Stratum; 4] = [
        Stratum::new(Season::Winter, DayType::Weekday),
        Stratum::new(Season::Winter, DayType::Weekend),
        Stratum::new(Season::Summer, DayType::Weekday),
        Stratum::new(Season::Summer, DayType::Weekend),
    ];

    pub const fn new(season: Season, day_type: DayType) -> Self {
        Self { season, day_type }
    }

    pub fn parts(self) -> (Season, DayType) {
        (self.season, self.day_type)
    }
}

impl From<(Season, DayType)> for Stratum {
    fn from((season, day_type): (Season, DayType)) -> Self {
        Self { season, day_type }
    }
}

impl fmt::Display for Stratum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let season = match self.season {
            Season::Winter => "winter",
            Season::Summer => "summer",
        };
        let day = match self.day_type {
            DayType::Weekday => "weekday",
            DayType::Weekend => "weekend",
        };
        write!(f, "{season}-{day}")
    }
}

impl FromStr for Stratum {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let (season, day) = lower
            .split_once(['-', '_', ' '])
            .ok_or_else(|| Error::Parameter(format!("stratum '{s}' must look like 'winter-weekend'")))?;
        let season = match season {
            "winter" => Season::Winter,
            "summer" => Season::Summer,
            _ => return Err(Error::Parameter(format!("unknown season '{season}'"))),
        };
        let day_type = match day {
            "weekday" => DayType::Weekday,
            "weekend" => DayType::Weekend,
            _ => return Err(Error::Parameter(format!("unknown day type '{day}'"))),
        };
        Ok(Self { season, day_type })
    }
}

impl Serialize for Stratum {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Stratum {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A normalised daily shape: 24 values in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadProfile(Hourly);

impl LoadProfile {
    pub fn new(values: Hourly) -> Result<Self> {
        for (hour, v) in values.iter().enumerate() {
            if !v.is_finite() || !(0.0..=1.0).contains(v) {
                return Err(Error::Range(format!("profile value {v} at hour {hour} is outside [0, 1]")));
            }
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &Hourly {
        &self.0
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

impl AsHourly for LoadProfile {
    fn hourly(&self) -> &Hourly {
        &self.0
    }
}

/// A household's representative profile for one stratum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanLoadProfile {
    pub household_id: String,
    pub stratum: Stratum,
    pub profile: LoadProfile,
    pub n_days: usize,
}

impl MeanLoadProfile {
    pub fn new(household_id: impl Into<String>, stratum: Stratum, profile: LoadProfile, n_days: usize) -> Result<Self> {
        if n_days == 0 {
            return Err(Error::Parameter("a mean profile needs at least one day".into()));
        }
        Ok(Self {
            household_id: household_id.into(),
            stratum,
            profile,
            n_days,
        })
    }
}

impl AsHourly for MeanLoadProfile {
    fn hourly(&self) -> &Hourly {
        self.profile.values()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Kmeans,
    Som,
    TwoStage,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Kmeans, Method::Som, Method::TwoStage];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Kmeans => "kmeans",
            Method::Som => "som",
            Method::TwoStage => "two-stage",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "kmeans" => Ok(Method::Kmeans),
            "som" => Ok(Method::Som),
            "two-stage" | "two_stage" | "twostage" => Ok(Method::TwoStage),
            other => Err(Error::Parameter(format!("unknown method '{other}'"))),
        }
    }
}

/// Parameters echoed into a result for provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum MethodParams {
    Kmeans(KmeansParams),
    Som(SomParams),
    TwoStage {
        som: SomParams,
        kmeans: KmeansParams,
        weighted: bool,
    },
}

/// K centroids plus a household → cluster assignment.
///
/// `household_ids[i]` is assigned to `assignments[i]`. Clusters without
/// members are flagged in `empty`; their centroid is whatever the method
/// last held for them (a codebook or stage-two centre).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringResult {
    pub method: Method,
    pub k: usize,
    pub centroids: Vec<Hourly>,
    pub empty: Vec<bool>,
    pub household_ids: Vec<String>,
    pub assignments: Vec<usize>,
    pub seed: u64,
    pub params: MethodParams,
}

impl ClusteringResult {
    /// Builds a result whose centroids are the member means of `points`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_assignments<P: AsHourly>(
        method: Method,
        k: usize,
        household_ids: Vec<String>,
        assignments: Vec<usize>,
        points: &[P],
        fallback_centroids: &[Hourly],
        seed: u64,
        params: MethodParams,
    ) -> Result<Self> {
        if household_ids.len() != assignments.len() || assignments.len() != points.len() {
            return Err(Error::Parameter("ids, assignments and profiles must have equal length".into()));
        }
        if fallback_centroids.len() != k {
            return Err(Error::Parameter(format!("expected {k} fallback centroids, got {}", fallback_centroids.len())));
        }
        if let Some(&bad) = assignments.iter().find(|&&a| a >= k) {
            return Err(Error::Range(format!("cluster index {bad} is not below k = {k}")));
        }
        let mut result = Self {
            method,
            k,
            centroids: fallback_centroids.to_vec(),
            empty: vec![false; k],
            household_ids,
            assignments,
            seed,
            params,
        };
        result.recompute_centroids(points);
        Ok(result)
    }

    /// Replaces every non-empty centroid by its members' hour-wise mean and
    /// refreshes the empty flags.
    pub fn recompute_centroids<P: AsHourly>(&mut self, points: &[P]) {
        let (sums, counts) = member_sums(self.k, &self.assignments, points);
        for c in 0..self.k {
            self.empty[c] = counts[c] == 0;
            if counts[c] > 0 {
                let n = counts[c] as f64;
                self.centroids[c] = sums[c].map(|s| s / n);
            }
        }
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }

    pub fn non_empty_count(&self) -> usize {
        self.empty.iter().filter(|e| !**e).count()
    }

    pub fn cluster_of(&self, household_id: &str) -> Option<usize> {
        self.household_ids
            .iter()
            .position(|h| h == household_id)
            .map(|i| self.assignments[i])
    }

    /// Relabels clusters by descending size, then lexicographic centroid.
    pub fn canonicalize(&mut self) {
        let sizes = self.sizes();
        let mut order: Vec<usize> = (0..self.k).collect();
        order.sort_by(|&a, &b| {
            sizes[b]
                .cmp(&sizes[a])
                .then_with(|| lexicographic(&self.centroids[a], &self.centroids[b]))
                .then(a.cmp(&b))
        });
        let mut new_label = vec![0; self.k];
        for (new, &old) in order.iter().enumerate() {
            new_label[old] = new;
        }
        self.centroids = order.iter().map(|&o| self.centroids[o]).collect();
        self.empty = order.iter().map(|&o| self.empty[o]).collect();
        for a in &mut self.assignments {
            *a = new_label[*a];
        }
    }

    /// Report label for a 0-based cluster index.
    pub fn label(cluster: usize) -> String {
        format!("Cluster{}", cluster + 1)
    }
}

fn lexicographic(a: &Hourly, b: &Hourly) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

pub(crate) fn member_sums<P: AsHourly>(k: usize, assignments: &[usize], points: &[P]) -> (Vec<Hourly>, Vec<usize>) {
    let mut sums = vec![[0.0; HOURS]; k];
    let mut counts = vec![0usize; k];
    for (p, &a) in points.iter().zip(assignments) {
        counts[a] += 1;
        for (s, v) in sums[a].iter_mut().zip(p.hourly()) {
            *s += v;
        }
    }
    (sums, counts)
}

/// Column/row address of a node on the hexagonal lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NodeCoord {
    pub col: usize,
    pub row: usize,
}

impl NodeCoord {
    pub const fn new(col: usize, row: usize) -> Self {
        Self { col, row }
    }
}

/// Vertical distance between hexagonal rows.
pub const HEX_ROW_SPACING: f64 = 0.866_025_403_784_438_6;

/// A hexagonal lattice of codebook vectors, row-major, odd rows shifted
/// right by half a column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SomGrid {
    width: usize,
    height: usize,
    codebooks: Vec<Hourly>,
}

impl SomGrid {
    pub fn new(width: usize, height: usize, codebooks: Vec<Hourly>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Parameter(format!("grid dimensions {width}x{height} must be positive")));
        }
        if codebooks.len() != width * height {
            return Err(Error::Parameter(format!(
                "a {width}x{height} grid needs {} codebooks, got {}",
                width * height,
                codebooks.len()
            )));
        }
        if codebooks.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Range("codebook values must be finite".into()));
        }
        Ok(Self { width, height, codebooks })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.codebooks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codebooks.is_empty()
    }

    pub fn codebooks(&self) -> &[Hourly] {
        &self.codebooks
    }

    pub(crate) fn codebooks_mut(&mut self) -> &mut [Hourly] {
        &mut self.codebooks
    }

    pub fn coord(&self, index: usize) -> NodeCoord {
        NodeCoord::new(index % self.width, index / self.width)
    }

    pub fn index(&self, coord: NodeCoord) -> Result<usize> {
        self.check(coord)?;
        Ok(coord.row * self.width + coord.col)
    }

    fn check(&self, c: NodeCoord) -> Result<()> {
        if c.col >= self.width || c.row >= self.height {
            return Err(Error::Range(format!(
                "node ({}, {}) lies outside the {}x{} grid",
                c.col, c.row, self.width, self.height
            )));
        }
        Ok(())
    }

    /// Planar centre of a node in the hexagonal layout.
    pub fn position(&self, coord: NodeCoord) -> (f64, f64) {
        hex_position(coord)
    }

    pub fn hex_node_distance(&self, a: NodeCoord, b: NodeCoord) -> Result<f64> {
        self.check(a)?;
        self.check(b)?;
        Ok(hex_distance_unchecked(a, b))
    }

    /// Distance between two nodes given by row-major index.
    pub fn node_distance(&self, a: usize, b: usize) -> f64 {
        hex_distance_unchecked(self.coord(a), self.coord(b))
    }

    /// Whether two distinct nodes are lattice neighbours.
    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        a != b && (self.node_distance(a, b) - 1.0).abs() <= 1e-9
    }
}

fn hex_position(c: NodeCoord) -> (f64, f64) {
    let shift = if c.row % 2 == 1 { 0.5 } else { 0.0 };
    (c.col as f64 + shift, c.row as f64 * HEX_ROW_SPACING)
}

fn hex_distance_unchecked(a: NodeCoord, b: NodeCoord) -> f64 {
    let (ax, ay) = hex_position(a);
    let (bx, by) = hex_position(b);
    (ax - bx).hypot(ay - by)
}

/// Euclidean distance between node centres on a `width` x `height` hexagonal
/// lattice.
pub fn hex_node_distance(width: usize, height: usize, a: NodeCoord, b: NodeCoord) -> Result<f64> {
    for c in [a, b] {
        if c.col >= width || c.row >= height {
            return Err(Error::Range(format!(
                "node ({}, {}) lies outside the {width}x{height} grid",
                c.col, c.row
            )));
        }
    }
    Ok(hex_distance_unchecked(a, b))
}
