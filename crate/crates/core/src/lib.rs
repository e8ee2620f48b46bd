//! Clustering of domestic electricity load profiles.
//!
//! Hourly smart-meter readings are cleaned (days with a missing hour are
//! dropped), peak-normalised, split by season and day type, and averaged
//! into one representative profile per household. Those profiles are
//! clustered with Kmeans, a hexagonal self-organising map, or a two-stage
//! SOM-then-Kmeans pipeline, and the methods are compared with the Mean
//! Index Adequacy (MIA).

pub mod config;
pub mod error;
pub mod ingest;
pub mod kmeans;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod pipeline;
pub mod preprocess;
pub mod report;
pub mod som;
pub mod synth;
pub mod two_stage;

pub use error::{Error, Result};
pub use model::{
    AsHourly, ClusteringResult, DayType, Hourly, HourlyDay, LoadProfile, MeanLoadProfile, Method, MethodParams,
    NodeCoord, Season, SomGrid, Stratum, HOURS,
};
