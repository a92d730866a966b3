//! Shared fixtures for the criterion benchmarks.

use solarens::dataset::average_reading_columns;
use solarens::{generate_dataset, Dataset, SynthConfig};

/// Daylight rows of a seeded synthetic series, as the `preprocess` command leaves them.
pub fn daylight_rows(n_days: usize, seed: u64) -> Dataset {
    let cfg = SynthConfig {
        n_days,
        seed,
        ..Default::default()
    };
    let d = generate_dataset(&cfg).expect("valid synthetic config");
    let keep = average_reading_columns(&d);
    solarens::dataset::clean_pipeline(&d, &keep, 500.0)
        .expect("synthetic data cleans")
        .0
}
