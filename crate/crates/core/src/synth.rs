//! Seeded minute-level weather and power series for end-to-end runs.
//!
//! Each day has a half-sine direct-irradiance profile between 06:00 and
//! 18:00 peaking at 1000 W/m2, optional cloud dips, and correlated
//! diffuse, global, inclined, temperature, humidity and wind channels.
//! Per-day turbidity and haze factors keep the global and diffuse channels
//! from being exact copies of the direct one. The solar azimuth sweeps
//! 90 to 270 degrees over daylight.
//! Power comes from the physical plant model with multiplicative noise.

use std::f64::consts::PI;

use chrono::{Duration, NaiveDate, NaiveDateTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::ensemble::derive_seed;
use crate::error::{Error, Result};
use crate::physical::{calculated_power, PvPlantParams};

pub const MINUTES_PER_DAY: usize = 1440;
pub const SUNRISE_MINUTE: usize = 360;
pub const SUNSET_MINUTE: usize = 1080;
pub const PEAK_DIRECT_IRRADIANCE: f64 = 1000.0;
pub const POWER_COLUMN: &str = "Power";

/// Weather columns in output order.
pub const WEATHER_COLUMNS: [&str; 9] = [
    "RH_Avg", "AT_Avg", "WS_Avg", "WD_Avg", "GR_Avg", "DiffR_Avg", "DirR_Avg", "ISR_Avg", "SA_Avg",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub n_days: usize,
    pub minutes_per_sample: usize,
    pub seed: u64,
    /// Standard deviation of the multiplicative power noise.
    pub noise_sigma_fraction: f64,
    /// Mean number of cloud events per day.
    pub cloud_event_rate: f64,
    pub plant: PvPlantParams,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_days: 210,
            minutes_per_sample: 1,
            seed: 73,
            noise_sigma_fraction: 0.05,
            cloud_event_rate: 4.0,
            plant: PvPlantParams::default(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_days < 1 {
            return Err(Error::invalid("n_days must be >= 1"));
        }
        if self.minutes_per_sample < 1 || !MINUTES_PER_DAY.is_multiple_of(self.minutes_per_sample) {
            return Err(Error::invalid("minutes_per_sample must divide 1440"));
        }
        if !(0.0..1.0).contains(&self.noise_sigma_fraction) {
            return Err(Error::invalid("noise_sigma_fraction must be in [0, 1)"));
        }
        if !(self.cloud_event_rate >= 0.0 && self.cloud_event_rate.is_finite()) {
            return Err(Error::invalid("cloud_event_rate must be >= 0"));
        }
        Ok(())
    }
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

/// Clear-sky shape: `sin(pi (t - 06:00) / 12 h)` in daylight, 0 otherwise.
pub fn daylight_fraction(minute_of_day: usize) -> f64 {
    if (SUNRISE_MINUTE..=SUNSET_MINUTE).contains(&minute_of_day) {
        let phase = (minute_of_day - SUNRISE_MINUTE) as f64 / (SUNSET_MINUTE - SUNRISE_MINUTE) as f64;
        (PI * phase).sin().max(0.0)
    } else {
        0.0
    }
}

struct CloudEvent {
    start: usize,
    end: usize,
    factor: f64,
}

fn cloud_events<R: Rng>(rate: f64, rng: &mut R) -> Vec<CloudEvent> {
    if rate <= 0.0 {
        return Vec::new();
    }
    let count = Poisson::new(rate).expect("positive rate").sample(rng) as usize;
    (0..count)
        .map(|_| {
            let start = rng.random_range(SUNRISE_MINUTE..SUNSET_MINUTE);
            let duration = rng.random_range(5..=30);
            CloudEvent {
                start,
                end: start + duration,
                factor: rng.random_range(0.2..0.7),
            }
        })
        .collect()
}

fn start_time() -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2019, 1, 1)
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .expect("valid start date")
}

/// Nine weather columns; the dataset target is `DirR_Avg` until power is added.
pub fn generate_weather_series(cfg: &SynthConfig) -> Result<Dataset> {
    cfg.validate()?;
    let per_day = MINUTES_PER_DAY / cfg.minutes_per_sample;
    let n = cfg.n_days * per_day;
    let mut cols: Vec<Vec<f64>> = vec![Vec::with_capacity(n); WEATHER_COLUMNS.len()];
    let mut timestamps = Vec::with_capacity(n);
    let t0 = start_time();
    let noise = |sd: f64| Normal::new(0.0, sd).expect("finite sd");

    for day in 0..cfg.n_days {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, day as u64));
        let clouds = cloud_events(cfg.cloud_event_rate, &mut rng);
        let day_temp = 24.0 + noise(1.5).sample(&mut rng);
        // share of the beam reaching the horizontal sensor, and diffuse scale
        let turbidity: f64 = rng.random_range(0.55..1.0);
        let haze: f64 = rng.random_range(0.5..2.0);
        for k in 0..per_day {
            let minute = k * cfg.minutes_per_sample;
            timestamps.push(t0 + Duration::minutes((day * MINUTES_PER_DAY + minute) as i64));
            let s = daylight_fraction(minute);
            let c: f64 = clouds
                .iter()
                .filter(|e| (e.start..e.end).contains(&minute))
                .map(|e| e.factor)
                .product();
            let day_on = if s > 0.0 { 1.0 } else { 0.0 };

            let dir = PEAK_DIRECT_IRRADIANCE * s * c;
            let diff = (day_on * (haze * 80.0 * s + 120.0 * s * (1.0 - c) + noise(3.0).sample(&mut rng))).max(0.0);
            let gr = (day_on * (turbidity * dir + diff) * (1.0 + noise(0.04).sample(&mut rng))).max(0.0);
            let isr = (day_on * (1.05 * gr + noise(5.0).sample(&mut rng))).max(0.0);
            let at = day_temp
                + 8.0 * (2.0 * PI * (minute as f64 - 540.0) / MINUTES_PER_DAY as f64).sin()
                + noise(0.2).sample(&mut rng);
            let rh = (85.0 - 1.8 * (at - 20.0) + noise(2.0).sample(&mut rng)).clamp(5.0, 100.0);
            let ws = (1.5 + 1.5 * s + noise(0.5).sample(&mut rng)).max(0.0);
            let wd = (180.0
                + 40.0 * (2.0 * PI * minute as f64 / MINUTES_PER_DAY as f64).sin()
                + noise(15.0).sample(&mut rng))
            .rem_euclid(360.0);
            let sweep = (minute as f64 - SUNRISE_MINUTE as f64) / (SUNSET_MINUTE - SUNRISE_MINUTE) as f64;
            let sa = 90.0 + 180.0 * sweep.clamp(0.0, 1.0);

            for (col, v) in cols.iter_mut().zip([rh, at, ws, wd, gr, diff, dir, isr, sa]) {
                col.push(round2(v));
            }
        }
    }
    Dataset::new(
        WEATHER_COLUMNS.iter().map(|s| s.to_string()).collect(),
        cols,
        "DirR_Avg",
        timestamps,
    )
}

/// Adds `Power = calculated_power(DirR_Avg, WS_Avg) (1 + eps)`, `eps ~ N(0, sigma^2)`,
/// clipped at zero, and makes it the target. Rows below the irradiance guard get 0.
pub fn generate_power_from_physical(
    weather: &Dataset,
    plant: &PvPlantParams,
    noise_sigma_fraction: f64,
    seed: u64,
) -> Result<Dataset> {
    let dir = weather
        .column("DirR_Avg")
        .ok_or_else(|| Error::MissingColumn("DirR_Avg".into()))?;
    let ws = weather
        .column("WS_Avg")
        .ok_or_else(|| Error::MissingColumn("WS_Avg".into()))?;
    if !(0.0..1.0).contains(&noise_sigma_fraction) {
        return Err(Error::invalid("noise_sigma_fraction must be in [0, 1)"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, u64::MAX));
    let normal = Normal::new(0.0, noise_sigma_fraction).expect("finite sd");
    let mut power = Vec::with_capacity(dir.len());
    for (&si, &wi) in dir.iter().zip(ws) {
        let eps = if noise_sigma_fraction > 0.0 {
            normal.sample(&mut rng)
        } else {
            0.0
        };
        let p = match calculated_power(plant, si, wi) {
            Ok(pc) => (pc * (1.0 + eps)).max(0.0),
            Err(Error::NonPositiveIrradiance(_)) => 0.0,
            Err(e) => return Err(e),
        };
        power.push(p);
    }
    weather.with_column(POWER_COLUMN, power)?.with_target(POWER_COLUMN)
}

/// Weather plus power in one call, seeded by `cfg.seed`.
pub fn generate_dataset(cfg: &SynthConfig) -> Result<Dataset> {
    let weather = generate_weather_series(cfg)?;
    generate_power_from_physical(&weather, &cfg.plant, cfg.noise_sigma_fraction, cfg.seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet(n_days: usize) -> SynthConfig {
        SynthConfig {
            n_days,
            noise_sigma_fraction: 0.0,
            cloud_event_rate: 0.0,
            ..Default::default()
        }
    }

    #[test]
    fn one_day_shape() {
        let d = generate_dataset(&quiet(1)).unwrap();
        assert_eq!(d.n_rows(), 1440);
        assert_eq!(d.n_cols(), 10);
        assert_eq!(d.target_name(), "Power");
        assert_eq!(d.feature_names().len(), 9);
    }

    #[test]
    fn clear_sky_is_half_sine_and_unimodal() {
        let d = generate_weather_series(&quiet(2)).unwrap();
        let dir = d.column("DirR_Avg").unwrap();
        for (i, &v) in dir.iter().enumerate() {
            assert_eq!(v, round2(1000.0 * daylight_fraction(i % 1440)));
        }
        let day = &dir[..1440];
        let peak = day.iter().cloned().fold(f64::MIN, f64::max);
        let at = day.iter().position(|&v| v == peak).unwrap();
        assert!(day[..=at].windows(2).all(|w| w[0] <= w[1]));
        assert!(day[at..].windows(2).all(|w| w[0] >= w[1]));
        assert_eq!(dir[0], 0.0);
    }

    #[test]
    fn noiseless_power_matches_model() {
        let cfg = quiet(1);
        let d = generate_dataset(&cfg).unwrap();
        let (dir, ws, p) = (d.column("DirR_Avg").unwrap(), d.column("WS_Avg").unwrap(), d.target());
        for i in 0..d.n_rows() {
            match calculated_power(&cfg.plant, dir[i], ws[i]) {
                Ok(v) => assert_eq!(p[i], v.max(0.0)),
                Err(_) => assert_eq!(p[i], 0.0),
            }
        }
        assert_eq!(p[0], 0.0);
    }

    #[test]
    fn same_seed_same_data() {
        let cfg = SynthConfig {
            n_days: 2,
            ..Default::default()
        };
        assert_eq!(generate_dataset(&cfg).unwrap(), generate_dataset(&cfg).unwrap());
        let other = SynthConfig { seed: 74, ..cfg.clone() };
        assert_ne!(generate_dataset(&cfg).unwrap(), generate_dataset(&other).unwrap());
    }

    #[test]
    fn missing_columns_are_reported() {
        let d = generate_weather_series(&quiet(1)).unwrap();
        let d = d.select_columns(&["DirR_Avg", "AT_Avg"]).unwrap().0;
        assert!(matches!(
            generate_power_from_physical(&d, &PvPlantParams::default(), 0.0, 1),
            Err(Error::MissingColumn(_))
        ));
    }
}
