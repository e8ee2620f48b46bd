use std::path::PathBuf;

use chrono::NaiveDate;
use thiserror::Error;

/// Errors raised across the load-profile pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("cannot read {path}: {source}")]
    Path {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    /// Malformed file structure (bad header, wrong schema).
    #[error("format error: {0}")]
    Format(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("value out of range: {0}")]
    Range(String),

    #[error("degenerate day: household {household_id} on {date} has no consumption")]
    DegenerateDay {
        household_id: String,
        date: NaiveDate,
    },

    #[error("incomplete day: household {household_id} on {date} has missing hours")]
    IncompleteDay {
        household_id: String,
        date: NaiveDate,
    },

    #[error("household excluded: {0} has no valid days in the target stratum")]
    HouseholdExcluded(String),

    #[error("instance too large for exhaustive enumeration: n = {n}, k = {k}")]
    InstanceTooLarge { n: usize, k: usize },

    /// A numerical contract check failed (e.g. the MIA/WCSS identity).
    #[error("numerical contract violated: {0}")]
    Contract(String),

    #[error("no non-empty clusters")]
    NoClusters,

    #[error("output directory {0} is locked by another run")]
    Locked(PathBuf),

    #[error("stage '{stage}' failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// True for failures of numerical contracts rather than bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Contract(_) | Error::NoClusters => true,
            Error::Stage { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numerical_classification_sees_through_stages() {
        let wrapped = Error::Stage {
            stage: "metrics",
            source: Box::new(Error::NoClusters),
        };
        assert!(wrapped.is_numerical());
        assert!(Error::Contract("x".into()).is_numerical());
        assert!(!Error::Parameter("k".into()).is_numerical());
        assert!(!Error::Stage {
            stage: "ingest",
            source: Box::new(Error::Format("header".into())),
        }
        .is_numerical());
    }
}
