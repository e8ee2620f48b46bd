//! Peak normalisation, season/day-type stratification and per-household
//! mean load profiles.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::{Datelike, NaiveDate, Weekday};

use crate::error::{Error, Result};
use crate::model::{DayType, HourlyDay, LoadProfile, MeanLoadProfile, Season, Stratum, HOURS};

/// Scales a complete day so its peak hour equals 1.
pub fn normalize_day(day: &HourlyDay) -> Result<LoadProfile> {
    let mut kwh = [0.0; HOURS];
    for (slot, r) in kwh.iter_mut().zip(&day.readings) {
        *slot = r.ok_or_else(|| Error::IncompleteDay {
            household_id: day.household_id.clone(),
            date: day.date,
        })?;
    }
    let peak = kwh.iter().copied().fold(0.0, f64::max);
    if peak <= 0.0 {
        return Err(Error::DegenerateDay {
            household_id: day.household_id.clone(),
            date: day.date,
        });
    }
    LoadProfile::new(kwh.map(|v| v / peak))
}

/// Winter is November through April; Saturday and Sunday are weekend.
pub fn stratify(date: NaiveDate) -> Stratum {
    let season = match date.month() {
        11 | 12 | 1 | 2 | 3 | 4 => Season::Winter,
        _ => Season::Summer,
    };
    let day_type = match date.weekday() {
        Weekday::Sat | Weekday::Sun => DayType::Weekend,
        _ => DayType::Weekday,
    };
    Stratum { season, day_type }
}

/// Hour-wise mean of the profiles falling in `target`.
pub fn mean_profile(household_id: &str, profiles: &[(Stratum, LoadProfile)], target: Stratum) -> Result<MeanLoadProfile> {
    let mut sums = [0.0; HOURS];
    let mut n = 0usize;
    for (_, p) in profiles.iter().filter(|(s, _)| *s == target) {
        n += 1;
        for (s, v) in sums.iter_mut().zip(p.values()) {
            *s += v;
        }
    }
    if n == 0 {
        return Err(Error::HouseholdExcluded(household_id.to_string()));
    }
    let profile = LoadProfile::new(sums.map(|s| (s / n as f64).min(1.0)))?;
    MeanLoadProfile::new(household_id, target, profile, n)
}

/// Mean profiles for one stratum plus the bookkeeping of what was left out.
#[derive(Debug, Clone, Default)]
pub struct PreparedProfiles {
    pub profiles: Vec<MeanLoadProfile>,
    /// Households with no usable day in the target stratum.
    pub excluded: Vec<String>,
    /// All-zero days, which have no shape to normalise.
    pub degenerate: Vec<(String, NaiveDate)>,
}

/// Normalises cleaned days and averages them per household for `target`.
///
/// Households are emitted in id order.
pub fn build_mean_profiles(days: &[HourlyDay], target: Stratum) -> Result<PreparedProfiles> {
    let mut by_household: BTreeMap<&str, Vec<(Stratum, LoadProfile)>> = BTreeMap::new();
    let mut out = PreparedProfiles::default();
    for day in days {
        let entry = by_household.entry(day.household_id.as_str()).or_default();
        match normalize_day(day) {
            Ok(p) => entry.push((stratify(day.date), p)),
            Err(Error::DegenerateDay { household_id, date }) => out.degenerate.push((household_id, date)),
            Err(e) => return Err(e),
        }
    }
    for (household, profiles) in by_household {
        match mean_profile(household, &profiles, target) {
            Ok(m) => out.profiles.push(m),
            Err(Error::HouseholdExcluded(h)) => out.excluded.push(h),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

fn profile_header() -> Vec<String> {
    let mut h = vec!["household_id".to_string(), "n_days".to_string()];
    h.extend((0..HOURS).map(|i| format!("h{i}")));
    h
}

/// Writes `household_id,n_days,h0..h23` with six decimals.
pub fn write_mean_profiles<W: Write>(profiles: &[MeanLoadProfile], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(profile_header())?;
    for p in profiles {
        let mut rec = vec![p.household_id.clone(), p.n_days.to_string()];
        rec.extend(p.profile.values().iter().map(|v| format!("{v:.6}")));
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the mean-profile export back; every row is tagged with `stratum`.
pub fn read_mean_profiles<R: Read>(input: R, stratum: Stratum) -> Result<Vec<MeanLoadProfile>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != profile_header() {
        return Err(Error::Format("expected header household_id,n_days,h0..h23".into()));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let bad = |what: &str| Error::Format(format!("line {}: invalid {what}", rec.position().map_or(0, |p| p.line())));
        let n_days: usize = rec[1].parse().map_err(|_| bad("n_days"))?;
        let mut values = [0.0; HOURS];
        for (h, v) in values.iter_mut().enumerate() {
            *v = rec[h + 2].parse().map_err(|_| bad("profile value"))?;
        }
        out.push(MeanLoadProfile::new(&rec[0], stratum, LoadProfile::new(values)?, n_days)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    fn day(kwh: [f64; HOURS]) -> HourlyDay {
        HourlyDay::complete("H1", date(1990, 1, 6), kwh).unwrap()
    }

    fn profile(pairs: &[(usize, f64)]) -> LoadProfile {
        let mut v = [0.0; HOURS];
        for &(h, x) in pairs {
            v[h] = x;
        }
        LoadProfile::new(v).unwrap()
    }

    #[test]
    fn normalizes_by_peak() {
        let mut kwh = [0.0; HOURS];
        kwh[..3].copy_from_slice(&[2.0, 4.0, 8.0]);
        let p = normalize_day(&day(kwh)).unwrap();
        assert_eq!(&p.values()[..3], &[0.25, 0.5, 1.0]);
        assert!(p.values()[3..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_day_is_all_ones() {
        let p = normalize_day(&day([0.37; HOURS])).unwrap();
        assert!(p.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn zero_day_is_degenerate() {
        assert!(matches!(normalize_day(&day([0.0; HOURS])), Err(Error::DegenerateDay { .. })));
    }

    #[test]
    fn missing_hour_is_rejected() {
        let mut d = day([1.0; HOURS]);
        d.readings[4] = None;
        assert!(matches!(normalize_day(&d), Err(Error::IncompleteDay { .. })));
    }

    #[test]
    fn stratify_examples() {
        // 1990-01-06 was a Saturday, 1990-07-04 a Wednesday.
        assert_eq!(date(1990, 1, 6).weekday(), Weekday::Sat);
        assert_eq!(date(1990, 7, 4).weekday(), Weekday::Wed);
        assert_eq!(stratify(date(1990, 1, 6)), Stratum::new(Season::Winter, DayType::Weekend));
        assert_eq!(stratify(date(1990, 7, 4)), Stratum::new(Season::Summer, DayType::Weekday));
        assert_eq!(stratify(date(1990, 4, 30)).season, Season::Winter);
        assert_eq!(stratify(date(1990, 5, 1)).season, Season::Summer);
        assert_eq!(stratify(date(1990, 10, 31)).season, Season::Summer);
        assert_eq!(stratify(date(1990, 11, 1)).season, Season::Winter);
    }

    #[test]
    fn mean_of_one_day() {
        let ww = Stratum::new(Season::Winter, DayType::Weekend);
        let p = profile(&[(3, 1.0), (4, 0.5)]);
        let m = mean_profile("H1", &[(ww, p)], ww).unwrap();
        assert_eq!(m.profile, p);
        assert_eq!(m.n_days, 1);
    }

    #[test]
    fn mean_of_identical_days() {
        let ww = Stratum::new(Season::Winter, DayType::Weekend);
        let p = profile(&[(23, 1.0)]);
        let m = mean_profile("H1", &[(ww, p), (ww, p)], ww).unwrap();
        assert_eq!(m.profile, p);
        assert_eq!(m.n_days, 2);
    }

    #[test]
    fn hour_wise_mean() {
        let ww = Stratum::new(Season::Winter, DayType::Weekend);
        let other = Stratum::new(Season::Summer, DayType::Weekend);
        let days = [
            (ww, profile(&[(7, 0.2), (18, 1.0)])),
            (ww, profile(&[(7, 0.4), (18, 1.0)])),
            (other, profile(&[(0, 1.0)])),
        ];
        let m = mean_profile("H1", &days, ww).unwrap();
        assert!((m.profile.values()[7] - 0.3).abs() < 1e-12);
        assert_eq!(m.profile.values()[18], 1.0);
        assert_eq!(m.profile.values()[0], 0.0);
        assert_eq!(m.n_days, 2);
    }

    #[test]
    fn no_matching_day_excludes_household() {
        let ww = Stratum::new(Season::Winter, DayType::Weekend);
        let sw = Stratum::new(Season::Summer, DayType::Weekday);
        match mean_profile("H9", &[(sw, profile(&[(0, 1.0)]))], ww) {
            Err(Error::HouseholdExcluded(h)) => assert_eq!(h, "H9"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn build_reports_excluded_and_degenerate() {
        let ww = Stratum::new(Season::Winter, DayType::Weekend);
        let days = vec![
            HourlyDay::complete("A", date(1990, 1, 6), [1.0; HOURS]).unwrap(),
            HourlyDay::complete("A", date(1990, 1, 7), [0.0; HOURS]).unwrap(),
            HourlyDay::complete("B", date(1990, 7, 4), [1.0; HOURS]).unwrap(),
        ];
        let prepared = build_mean_profiles(&days, ww).unwrap();
        assert_eq!(prepared.profiles.len(), 1);
        assert_eq!(prepared.profiles[0].household_id, "A");
        assert_eq!(prepared.excluded, vec!["B".to_string()]);
        assert_eq!(prepared.degenerate, vec![("A".to_string(), date(1990, 1, 7))]);
    }

    #[test]
    fn mean_profile_csv_round_trip() {
        let ww = Stratum::new(Season::Winter, DayType::Weekend);
        let m = MeanLoadProfile::new("H7", ww, profile(&[(1, 0.123456), (2, 1.0)]), 12).unwrap();
        let mut buf = Vec::new();
        write_mean_profiles(std::slice::from_ref(&m), &mut buf).unwrap();
        let back = read_mean_profiles(buf.as_slice(), ww).unwrap();
        assert_eq!(back, vec![m]);
    }
}
