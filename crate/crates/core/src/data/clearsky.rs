//! Analytic clear-sky irradiance on the prime meridian.
//!
//! Solar time is taken equal to UTC (longitude 0, no equation of time).

const SOLAR_CONSTANT_EFFECTIVE: f64 = 1098.0;
const EXTINCTION: f64 = 0.057;
const TROPICAL_YEAR_DAYS: f64 = 365.2422;
/// Days from the Unix epoch to 2000-01-01.
const J2000_OFFSET_DAYS: f64 = 10957.0;

/// Solar elevation angle in degrees for a (possibly fractional) hour count
/// since the epoch.
pub fn solar_elevation_deg(hours: f64, latitude: f64) -> f64 {
    let days = hours / 24.0;
    // Day-of-year phase on the tropical year keeps the declination continuous
    // across calendar boundaries.
    let day_of_year = (days - J2000_OFFSET_DAYS).rem_euclid(TROPICAL_YEAR_DAYS) + 1.0;
    let declination = 23.45_f64.to_radians() * (2.0 * std::f64::consts::PI * (284.0 + day_of_year) / 365.0).sin();
    let hour_of_day = hours.rem_euclid(24.0);
    let hour_angle = (15.0 * (hour_of_day - 12.0)).to_radians();
    let lat = latitude.to_radians();
    let sin_el = lat.sin() * declination.sin() + lat.cos() * declination.cos() * hour_angle.cos();
    sin_el.clamp(-1.0, 1.0).asin().to_degrees()
}

/// Clear-sky global horizontal irradiance in W/m².
///
/// `1098 · sin(el) · exp(-0.057 / sin(el))` above the horizon, zero otherwise.
pub fn clearsky_curve(hours: f64, latitude: f64) -> f64 {
    let sin_el = solar_elevation_deg(hours, latitude).to_radians().sin();
    if sin_el <= 0.0 {
        return 0.0;
    }
    SOLAR_CONSTANT_EFFECTIVE * sin_el * (-EXTINCTION / sin_el).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::timestamp_of;

    #[test]
    fn winter_midnight_is_dark() {
        let t = timestamp_of(2016, 12, 21, 0).unwrap() as f64;
        assert_eq!(clearsky_curve(t, 60.0), 0.0);
    }

    #[test]
    fn summer_noon_at_sixty_north() {
        let t = timestamp_of(2016, 6, 21, 12).unwrap() as f64;
        // Independent evaluation: el = 90 - 60 + 23.45 at the solstice noon.
        let el = (90.0_f64 - 60.0 + 23.45).to_radians();
        let expected = 1098.0 * el.sin() * (-0.057 / el.sin()).exp();
        let got = clearsky_curve(t, 60.0);
        assert!((700.0..=1000.0).contains(&got), "{got}");
        assert!((got - expected).abs() < 3.0, "{got} vs {expected}");
    }

    #[test]
    fn zero_at_horizon_and_monotone_in_elevation() {
        // sin(el) = 0 exactly is handled by the guard.
        let f = |s: f64| if s <= 0.0 { 0.0 } else { 1098.0 * s * (-0.057 / s).exp() };
        assert_eq!(f(0.0), 0.0);
        let mut prev = 0.0;
        for i in 1..=1000 {
            let v = f(i as f64 / 1000.0);
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn increases_with_elevation_along_a_morning() {
        let t0 = timestamp_of(2017, 6, 1, 3).unwrap() as f64;
        let mut prev_el = f64::NEG_INFINITY;
        let mut prev_cs = -1.0;
        for m in 0..(9 * 60) {
            let t = t0 + m as f64 / 60.0;
            let el = solar_elevation_deg(t, 60.0);
            let cs = clearsky_curve(t, 60.0);
            assert!(el > prev_el);
            if el > 0.0 {
                assert!(cs > prev_cs);
            }
            prev_el = el;
            prev_cs = cs;
        }
    }

    #[test]
    fn continuous_across_new_year() {
        let t = timestamp_of(2017, 1, 1, 0).unwrap() as f64;
        let a = solar_elevation_deg(t - 1e-3, 45.0);
        let b = solar_elevation_deg(t + 1e-3, 45.0);
        assert!((a - b).abs() < 1e-3);
    }
}
