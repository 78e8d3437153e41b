use std::f64::consts::PI;

use chrono::{DateTime, Datelike, NaiveDateTime, Timelike, Utc};

use crate::{Error, Result};

/// Projects a cyclic quantity onto the unit circle.
pub fn embed_time(t: f64, period: f64) -> Result<(f64, f64)> {
    if !(period > 0.0) || !period.is_finite() {
        return Err(Error::invalid(format!("embedding period must be positive, got {period}")));
    }
    let phase = 2.0 * PI * t / period;
    Ok((phase.sin(), phase.cos()))
}

/// Hour-of-day, day-of-week and week-of-year embeddings for one timestamp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeEmbedding {
    pub hour: (f64, f64),
    pub weekday: (f64, f64),
    pub week: (f64, f64),
}

impl TimeEmbedding {
    pub const NAMES: [&'static str; 6] = ["hour_sin", "hour_cos", "dow_sin", "dow_cos", "woy_sin", "woy_cos"];

    pub fn at(timestamp: i64) -> Self {
        let dt = to_datetime(timestamp);
        let emb = |t: f64, p: f64| embed_time(t, p).expect("positive period");
        Self {
            hour: emb(dt.hour() as f64, 24.0),
            weekday: emb(dt.weekday().num_days_from_monday() as f64, 7.0),
            week: emb((dt.ordinal0() / 7) as f64, 52.0),
        }
    }

    pub fn values(&self) -> [f64; 6] {
        [self.hour.0, self.hour.1, self.weekday.0, self.weekday.1, self.week.0, self.week.1]
    }
}

pub(crate) fn to_datetime(timestamp: i64) -> DateTime<Utc> {
    DateTime::from_timestamp(timestamp * 3600, 0).expect("timestamp within chrono range")
}

pub fn calendar_year(timestamp: i64) -> i32 {
    to_datetime(timestamp).year()
}

/// Hours since the epoch for a UTC calendar hour.
pub fn timestamp_of(year: i32, month: u32, day: u32, hour: u32) -> Option<i64> {
    let date = chrono::NaiveDate::from_ymd_opt(year, month, day)?;
    let dt = date.and_hms_opt(hour, 0, 0)?;
    Some(dt.and_utc().timestamp() / 3600)
}

/// ISO-8601 UTC, hour resolution.
pub fn format_timestamp(timestamp: i64) -> String {
    to_datetime(timestamp).format("%Y-%m-%dT%H:00:00Z").to_string()
}

pub fn parse_timestamp(s: &str) -> Result<i64> {
    let s = s.trim();
    let dt = DateTime::parse_from_rfc3339(s)
        .map(|d| d.with_timezone(&Utc))
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S").map(|n| n.and_utc()))
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M").map(|n| n.and_utc()))
        .map_err(|_| Error::Data(format!("unparseable timestamp `{s}`")))?;
    if dt.minute() != 0 || dt.second() != 0 {
        return Err(Error::Data(format!("timestamp `{s}` is not on the hour")));
    }
    Ok(dt.timestamp() / 3600)
}

/// True when `a -> b` is the 25 h jump across a removed 29 February.
pub(crate) fn skips_leap_day(a: i64, b: i64) -> bool {
    if b - a != 25 {
        return false;
    }
    let da = to_datetime(a);
    let db = to_datetime(b);
    da.month() == 2 && da.day() == 28 && db.month() == 3 && db.day() == 1 && da.hour() == 23 && db.hour() == 0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: (f64, f64), b: (f64, f64)) -> bool {
        (a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12
    }

    #[test]
    fn embedding_reference_points() {
        assert!(close(embed_time(0.0, 24.0).unwrap(), (0.0, 1.0)));
        assert!(close(embed_time(6.0, 24.0).unwrap(), (1.0, 0.0)));
        assert!(close(embed_time(12.0, 24.0).unwrap(), (0.0, -1.0)));
    }

    #[test]
    fn embedding_rejects_bad_period() {
        assert!(embed_time(1.0, 0.0).is_err());
        assert!(embed_time(1.0, -3.0).is_err());
    }

    #[test]
    fn timestamp_roundtrip() {
        let t = timestamp_of(2016, 2, 28, 23).unwrap();
        assert_eq!(parse_timestamp(&format_timestamp(t)).unwrap(), t);
        assert_eq!(format_timestamp(t), "2016-02-28T23:00:00Z");
        assert!(skips_leap_day(t, timestamp_of(2016, 3, 1, 0).unwrap()));
        assert!(parse_timestamp("2016-02-28T23:30:00Z").is_err());
    }

    proptest::proptest! {
        #[test]
        fn embedding_on_unit_circle(t in -1e5f64..1e5, period in 0.1f64..1000.0) {
            let (s, c) = embed_time(t, period).unwrap();
            proptest::prop_assert!((s * s + c * c - 1.0).abs() < 1e-12);
        }
    }
}
