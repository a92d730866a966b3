//! Analytic PV power model driven by direct irradiance and wind speed.
//!
//! Chain: incident irradiance `Si` is projected onto the tilted module
//! (`Sm = Si sin(alpha + beta)`), a wind-cooled module temperature index is
//! derived from `Sm`, and power follows a log-polynomial in `Sm` and the
//! temperature index.

use std::io::Write;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::eval;

/// Below this inclined irradiance (W/m2) the log terms are not evaluated.
pub const MIN_INCLINED_IRRADIANCE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogBase {
    #[default]
    Ten,
    Natural,
}

impl LogBase {
    fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Ten => x.log10(),
            LogBase::Natural => x.ln(),
        }
    }
}

/// Site geometry and module constants. `alpha` is always derived from
/// `phi` and `beta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "PlantConfig", into = "PlantConfig")]
pub struct PvPlantParams {
    /// Site latitude, degrees.
    pub phi: f64,
    /// Module tilt, degrees.
    pub beta: f64,
    alpha: f64,
    /// Packing ratio: module efficiency times array area (m2).
    pub pr: f64,
    pub k: [f64; 6],
    pub log_base: LogBase,
}

impl Default for PvPlantParams {
    fn default() -> Self {
        PvPlantParams::new(
            26.2,
            26.0,
            12.36,
            [-0.06689, -0.012844, -0.002262, 0.0002276, 0.000159, -0.000006],
            LogBase::Ten,
        )
    }
}

impl PvPlantParams {
    pub fn new(phi: f64, beta: f64, pr: f64, k: [f64; 6], log_base: LogBase) -> Self {
        PvPlantParams {
            phi,
            beta,
            alpha: 90.0 - phi + beta,
            pr,
            k,
            log_base,
        }
    }

    /// Elevation angle in degrees, `90 - phi + beta`.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn with_log_base(mut self, base: LogBase) -> Self {
        self.log_base = base;
        self
    }
}

/// Serialized form of [`PvPlantParams`]; omits `alpha`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlantConfig {
    pub phi: f64,
    pub beta: f64,
    pub pr: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    pub k5: f64,
    pub k6: f64,
    pub log_base: LogBase,
}

impl Default for PlantConfig {
    fn default() -> Self {
        PvPlantParams::default().into()
    }
}

impl From<PlantConfig> for PvPlantParams {
    fn from(c: PlantConfig) -> Self {
        PvPlantParams::new(c.phi, c.beta, c.pr, [c.k1, c.k2, c.k3, c.k4, c.k5, c.k6], c.log_base)
    }
}

impl From<PvPlantParams> for PlantConfig {
    fn from(p: PvPlantParams) -> Self {
        let [k1, k2, k3, k4, k5, k6] = p.k;
        PlantConfig {
            phi: p.phi,
            beta: p.beta,
            pr: p.pr,
            k1,
            k2,
            k3,
            k4,
            k5,
            k6,
            log_base: p.log_base,
        }
    }
}

pub fn horizontal_irradiance(si: f64, alpha_deg: f64) -> f64 {
    si * alpha_deg.to_radians().sin()
}

pub fn inclined_irradiance(si: f64, alpha_deg: f64, beta_deg: f64) -> f64 {
    si * (alpha_deg + beta_deg).to_radians().sin()
}

/// Module temperature index for inclined irradiance `sm` and wind speed `wi` (m/s).
pub fn module_temperature(sm: f64, wi: f64) -> f64 {
    sm / (26.9 + 6.2 * wi)
}

/// Power from inclined irradiance directly, bypassing the angle projection.
///
/// `Pc = Pr Sm (1 + k1 L + k2 L2 + k3 Ti) + k4 Ti L + k5 Ti L2 + k6 Ti^2`
/// with `L = log Sm`, `L2 = log Sm^2 = 2L`. Only the first four terms are
/// scaled by `Pr Sm`.
pub fn power_from_inclined(params: &PvPlantParams, sm: f64, wi: f64) -> Result<f64> {
    if !(sm >= MIN_INCLINED_IRRADIANCE) {
        return Err(Error::NonPositiveIrradiance(sm));
    }
    let [k1, k2, k3, k4, k5, k6] = params.k;
    let l = params.log_base.log(sm);
    let l2 = 2.0 * l;
    let ti = module_temperature(sm, wi);
    Ok(params.pr * sm * (1.0 + k1 * l + k2 * l2 + k3 * ti) + k4 * ti * l + k5 * ti * l2 + k6 * ti * ti)
}

/// Power (W) for direct irradiance `si` (W/m2) and wind speed `wi` (m/s).
pub fn calculated_power(params: &PvPlantParams, si: f64, wi: f64) -> Result<f64> {
    let sm = inclined_irradiance(si, params.alpha, params.beta);
    power_from_inclined(params, sm, wi)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerComparison {
    #[serde(serialize_with = "crate::dataset::serialize_timestamp")]
    pub timestamp: NaiveDateTime,
    pub actual_power: f64,
    pub calculated_power: f64,
}

pub fn rmse_vs_actual(rows: &[PowerComparison]) -> Result<f64> {
    let actual: Vec<f64> = rows.iter().map(|r| r.actual_power).collect();
    let calc: Vec<f64> = rows.iter().map(|r| r.calculated_power).collect();
    eval::rmse(&actual, &calc)
}

/// Calculated power for every row of `d` against its target column.
/// Rows below the irradiance guard are skipped; their count is returned.
pub fn compare_with_actual(
    params: &PvPlantParams,
    d: &Dataset,
    irradiance_column: &str,
    wind_column: &str,
) -> Result<(Vec<PowerComparison>, usize)> {
    let si = d
        .column(irradiance_column)
        .ok_or_else(|| Error::MissingColumn(irradiance_column.into()))?;
    let wi = d
        .column(wind_column)
        .ok_or_else(|| Error::MissingColumn(wind_column.into()))?;
    let mut rows = Vec::with_capacity(d.n_rows());
    let mut skipped = 0;
    for i in 0..d.n_rows() {
        match calculated_power(params, si[i], wi[i]) {
            Ok(pc) => rows.push(PowerComparison {
                timestamp: d.timestamps()[i],
                actual_power: d.target()[i],
                calculated_power: pc,
            }),
            Err(Error::NonPositiveIrradiance(_)) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok((rows, skipped))
}

/// Writes `timestamp,actual_power,calculated_power` rows.
pub fn write_comparisons_csv<W: Write>(rows: &[PowerComparison], w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record(["timestamp", "actual_power", "calculated_power"])?;
    }
    w.flush().map_err(|e| Error::io("<comparison writer>", e))
}
