//! Seeded synthetic household datasets with known archetype labels.
//!
//! Each household follows one archetypal daily shape. A day's readings are
//! the shape plus Gaussian noise, truncated at zero and scaled by a random
//! daily volume. Output uses the ingestion CSV schema.

use std::io::Write;

use chrono::NaiveDate;
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::READINGS_HEADER;
use crate::model::{Hourly, HourlyDay, Stratum, HOURS};
use crate::preprocess::stratify;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Archetype {
    pub name: String,
    pub base_shape: Hourly,
    pub day_noise_sd: f64,
    pub scale_range: (f64, f64),
}

impl Archetype {
    /// Builds an archetype, rescaling `shape` so its peak is 1.
    pub fn new(name: impl Into<String>, shape: Hourly, day_noise_sd: f64, scale_range: (f64, f64)) -> Result<Self> {
        let peak = shape.iter().copied().fold(0.0, f64::max);
        if peak <= 0.0 || shape.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Parameter("archetype shape must be non-negative with a positive peak".into()));
        }
        if day_noise_sd.is_nan() || day_noise_sd < 0.0 {
            return Err(Error::Parameter("day_noise_sd must be non-negative".into()));
        }
        let (lo, hi) = scale_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::Parameter(format!("invalid scale range ({lo}, {hi})")));
        }
        Ok(Self {
            name: name.into(),
            base_shape: shape.map(|v| v / peak),
            day_noise_sd,
            scale_range,
        })
    }
}

fn bumps(floor: f64, peaks: &[(f64, f64, f64)]) -> Hourly {
    let mut v = [floor; HOURS];
    for (h, slot) in v.iter_mut().enumerate() {
        for &(centre, width, height) in peaks {
            let z = (h as f64 - centre) / width;
            *slot += height * (-0.5 * z * z).exp();
        }
    }
    v
}

fn plateau(floor: f64, from: usize, to: usize, level: f64) -> Hourly {
    let mut v = [floor; HOURS];
    for slot in &mut v[from..=to] {
        *slot = level;
    }
    v
}

/// Nine daily shapes spanning typical domestic usage patterns.
pub fn default_archetypes(day_noise_sd: f64) -> Vec<Archetype> {
    let scale = (0.5, 3.0);
    let shapes: [(&str, Hourly); 9] = [
        ("breakfast-peak", bumps(0.1, &[(7.5, 1.0, 0.9), (19.0, 1.5, 0.25)])),
        ("evening-peak", bumps(0.1, &[(18.5, 1.3, 0.9)])),
        ("flat", bumps(0.75, &[(12.0, 6.0, 0.25)])),
        ("night-heavy", {
            let mut v = plateau(0.15, 0, 6, 1.0);
            v[23] = 0.7;
            v
        }),
        ("daytime-occupied", plateau(0.1, 9, 16, 0.85)),
        ("twin-peak", bumps(0.1, &[(7.0, 1.0, 0.85), (18.0, 1.0, 0.85)])),
        ("late-evening", bumps(0.1, &[(22.5, 1.0, 0.9)])),
        ("morning-only", plateau(0.05, 6, 11, 0.9)),
        ("constant-low", bumps(0.3, &[(13.0, 0.6, 0.7)])),
    ];
    shapes
        .into_iter()
        .map(|(name, shape)| Archetype::new(name, shape, day_noise_sd, scale).expect("built-in shapes are valid"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub archetypes: Vec<Archetype>,
    pub n_households: usize,
    /// Inclusive range of days drawn per household and stratum.
    pub days_range: (usize, usize),
    pub start: NaiveDate,
    pub end: NaiveDate,
    /// Probability that any single hourly reading is left empty.
    pub missing_rate: f64,
    /// Sd of a fixed per-household perturbation of the archetype shape.
    pub household_sd: f64,
    pub strata: Vec<Stratum>,
    pub seed: u64,
}

impl SynthConfig {
    pub fn new(archetypes: Vec<Archetype>, seed: u64) -> Self {
        Self {
            archetypes,
            n_households: 93,
            days_range: (25, 111),
            start: NaiveDate::from_ymd_opt(1988, 10, 1).expect("valid date"),
            end: NaiveDate::from_ymd_opt(1991, 3, 31).expect("valid date"),
            missing_rate: 0.01,
            household_sd: 0.0,
            strata: Stratum::ALL.to_vec(),
            seed,
        }
    }

    /// Nine archetypes with day noise 0.02, 93 households.
    pub fn default_with_seed(seed: u64) -> Self {
        Self::new(default_archetypes(0.02), seed)
    }

    pub fn validate(&self) -> Result<()> {
        if self.archetypes.is_empty() {
            return Err(Error::Parameter("at least one archetype is required".into()));
        }
        if self.n_households == 0 {
            return Err(Error::Parameter("n_households must be positive".into()));
        }
        let (lo, hi) = self.days_range;
        if lo == 0 || lo > hi {
            return Err(Error::Parameter(format!("invalid days range ({lo}, {hi})")));
        }
        if self.start > self.end {
            return Err(Error::Parameter("date span start is after its end".into()));
        }
        if !(0.0..1.0).contains(&self.missing_rate) {
            return Err(Error::Parameter(format!("missing_rate {} must lie in [0, 1)", self.missing_rate)));
        }
        if self.household_sd.is_nan() || self.household_sd < 0.0 {
            return Err(Error::Parameter("household_sd must be non-negative".into()));
        }
        if self.strata.is_empty() {
            return Err(Error::Parameter("at least one stratum must be generated".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthHousehold {
    pub id: String,
    pub archetype: usize,
    pub days: Vec<(NaiveDate, [Option<f64>; HOURS])>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub archetype_names: Vec<String>,
    pub households: Vec<SynthHousehold>,
}

impl SynthDataset {
    /// Ground-truth archetype index per household, in household order.
    pub fn labels(&self) -> Vec<usize> {
        self.households.iter().map(|h| h.archetype).collect()
    }

    pub fn hourly_days(&self) -> Vec<HourlyDay> {
        self.households
            .iter()
            .flat_map(|h| {
                h.days.iter().map(|(date, readings)| HourlyDay {
                    household_id: h.id.clone(),
                    date: *date,
                    readings: *readings,
                })
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(READINGS_HEADER)?;
        for h in &self.households {
            for (date, readings) in &h.days {
                let date = date.to_string();
                for (hour, r) in readings.iter().enumerate() {
                    let kwh = r.map(|v| v.to_string()).unwrap_or_default();
                    w.write_record([h.id.as_str(), &date, &hour.to_string(), &kwh])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("CSV output is UTF-8")
    }

    /// `household_id,archetype` with archetype names.
    pub fn write_labels<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["household_id", "archetype"])?;
        for h in &self.households {
            w.write_record([h.id.as_str(), &self.archetype_names[h.archetype]])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn generate_dataset(config: &SynthConfig) -> Result<SynthDataset> {
    config.validate()?;
    let n = config.n_households;
    let mut assignment: Vec<usize> = (0..n).map(|i| i % config.archetypes.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    assignment.shuffle(&mut rng);

    let calendar: Vec<(Stratum, Vec<NaiveDate>)> = config
        .strata
        .iter()
        .map(|&s| {
            let dates = config.start.iter_days().take_while(|d| *d <= config.end).filter(|d| stratify(*d) == s).collect();
            (s, dates)
        })
        .collect();

    let width = n.to_string().len().max(3);
    let households = assignment
        .par_iter()
        .enumerate()
        .map(|(i, &archetype)| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(i as u64 + 1);
            SynthHousehold {
                id: format!("H{:0width$}", i + 1),
                archetype,
                days: household_days(&mut rng, &config.archetypes[archetype], &calendar, config),
            }
        })
        .collect();
    Ok(SynthDataset {
        archetype_names: config.archetypes.iter().map(|a| a.name.clone()).collect(),
        households,
    })
}

fn household_days(
    rng: &mut ChaCha8Rng,
    archetype: &Archetype,
    calendar: &[(Stratum, Vec<NaiveDate>)],
    config: &SynthConfig,
) -> Vec<(NaiveDate, [Option<f64>; HOURS])> {
    let mut shape = archetype.base_shape;
    if config.household_sd > 0.0 {
        for v in &mut shape {
            let e: f64 = rng.sample(StandardNormal);
            *v = (*v + config.household_sd * e).max(0.0);
        }
    }

    let (lo, hi) = config.days_range;
    let mut dates = Vec::new();
    for (_, available) in calendar {
        let wanted = rng.random_range(lo..=hi).min(available.len());
        dates.extend(index::sample(rng, available.len(), wanted).into_iter().map(|i| available[i]));
    }
    dates.sort();

    let (s_lo, s_hi) = archetype.scale_range;
    dates
        .into_iter()
        .map(|date| {
            let scale = if s_hi > s_lo { rng.random_range(s_lo..=s_hi) } else { s_lo };
            let mut readings = [None; HOURS];
            for (slot, base) in readings.iter_mut().zip(&shape) {
                let e: f64 = rng.sample(StandardNormal);
                let missing = rng.random::<f64>() < config.missing_rate;
                let kwh = scale * (base + archetype.day_noise_sd * e).max(0.0);
                if !missing {
                    *slot = Some(kwh);
                }
            }
            (date, readings)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{assemble_days, drop_incomplete_days, parse_readings};
    use crate::preprocess::normalize_day;

    fn small(seed: u64) -> SynthConfig {
        let mut c = SynthConfig::default_with_seed(seed);
        c.n_households = 12;
        c.days_range = (3, 6);
        c
    }

    #[test]
    fn archetypes_peak_at_one() {
        let a = default_archetypes(0.02);
        assert_eq!(a.len(), 9);
        for x in &a {
            let peak = x.base_shape.iter().copied().fold(0.0, f64::max);
            assert!((peak - 1.0).abs() < 1e-15, "{}", x.name);
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let a = generate_dataset(&small(5)).unwrap().to_csv_string();
        let b = generate_dataset(&small(5)).unwrap().to_csv_string();
        let c = generate_dataset(&small(6)).unwrap().to_csv_string();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn no_missing_means_every_day_survives() {
        let mut c = small(8);
        c.missing_rate = 0.0;
        let data = generate_dataset(&c).unwrap();
        let (rows, diags) = parse_readings(data.to_csv_string().as_bytes()).unwrap();
        assert!(diags.is_empty());
        let days = assemble_days(&rows);
        let n = days.len();
        let cleaned = drop_incomplete_days(days);
        assert_eq!(cleaned.kept.len(), n);
        assert_eq!(cleaned.total_dropped(), 0);
    }

    #[test]
    fn noiseless_days_normalize_to_base_shape() {
        let archetypes: Vec<_> = default_archetypes(0.0)
            .into_iter()
            .map(|mut a| {
                a.scale_range = (1.7, 1.7);
                a
            })
            .collect();
        let mut c = SynthConfig::new(archetypes.clone(), 3);
        c.n_households = 9;
        c.days_range = (2, 4);
        c.missing_rate = 0.0;
        let data = generate_dataset(&c).unwrap();
        let labels = data.labels();
        for day in data.hourly_days() {
            let h: usize = day.household_id[1..].parse().unwrap();
            let p = normalize_day(&day).unwrap();
            let base = archetypes[labels[h - 1]].base_shape;
            for (a, b) in p.values().iter().zip(&base) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn round_robin_covers_archetypes() {
        let data = generate_dataset(&SynthConfig::default_with_seed(42)).unwrap();
        let mut counts = [0usize; 9];
        for l in data.labels() {
            counts[l] += 1;
        }
        assert!(counts.iter().all(|&c| c == 10 || c == 11));
        assert_eq!(counts.iter().sum::<usize>(), 93);
    }

    #[test]
    fn day_counts_respect_range() {
        let mut c = small(9);
        c.strata = vec![Stratum::ALL[1]];
        let data = generate_dataset(&c).unwrap();
        for h in &data.households {
            assert!((3..=6).contains(&h.days.len()));
            assert!(h.days.iter().all(|(d, _)| stratify(*d) == Stratum::ALL[1]));
        }
    }

    #[test]
    fn rejects_bad_config() {
        let mut c = small(1);
        c.missing_rate = 1.0;
        assert!(generate_dataset(&c).is_err());
        let mut c = small(1);
        c.days_range = (5, 2);
        assert!(generate_dataset(&c).is_err());
        let mut c = small(1);
        c.archetypes.clear();
        assert!(generate_dataset(&c).is_err());
    }
}
