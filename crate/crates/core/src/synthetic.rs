//! Deterministic stand-in profiles for demos and tests.
//!
//! Real inputs come from irradiance data, fleet simulation and grid emission
//! models. These generators only need the right shape: a daylight bell for
//! solar, weekday-only freight load, and a diurnal grid carbon intensity.

use std::f64::consts::PI;

use crate::error::Result;
use crate::profiles::{HourlyProfile, Unit};

/// Daylight bell between 06:00 and 18:00 scaled by a mild seasonal swing.
///
/// `peak_cf` is the noon capacity factor at the summer solstice.
pub fn solar_capacity_factor(horizon: usize, peak_cf: f64) -> Result<HourlyProfile> {
    let values = (0..horizon)
        .map(|t| {
            let hour = (t % 24) as f64;
            let day = (t / 24) as f64;
            let bell = (PI * (hour - 6.0) / 12.0).sin().max(0.0);
            let season = 0.8 + 0.2 * (2.0 * PI * (day - 171.0) / 365.0).cos();
            (peak_cf * bell * season).clamp(0.0, 1.0)
        })
        .collect();
    HourlyProfile::new(values, Unit::CapacityFactor, "synthetic solar cf")
}

/// Shape of a weekday freight charging load.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadShape {
    /// Load inside the operating block, MW.
    pub block_mw: f64,
    /// Load outside the block on working days, MW.
    pub base_mw: f64,
    pub block_start_hour: usize,
    pub block_end_hour: usize,
    /// Working days per week, counted from the first day of the horizon.
    pub working_days: usize,
}

impl Default for LoadShape {
    fn default() -> Self {
        Self {
            block_mw: 30.0,
            base_mw: 8.0,
            block_start_hour: 7,
            block_end_hour: 19,
            working_days: 5,
        }
    }
}

/// Working days follow the block shape; remaining days carry no excess load.
pub fn weekday_block_load(horizon: usize, shape: &LoadShape) -> Result<HourlyProfile> {
    let values = (0..horizon)
        .map(|t| {
            let hour = t % 24;
            let weekday = (t / 24) % 7;
            if weekday >= shape.working_days {
                0.0
            } else if (shape.block_start_hour..shape.block_end_hour).contains(&hour) {
                shape.block_mw
            } else {
                shape.base_mw
            }
        })
        .collect();
    HourlyProfile::new(values, Unit::Megawatt, "synthetic load")
}

/// Hourly grid intensity, kg/MWh, peaking at `peak_hour`.
pub fn diurnal_intensity(horizon: usize, mean: f64, amplitude: f64, peak_hour: f64) -> Vec<f64> {
    (0..horizon)
        .map(|t| {
            let hour = (t % 24) as f64;
            (mean + amplitude * (2.0 * PI * (hour - peak_hour) / 24.0).cos()).max(0.0)
        })
        .collect()
}

/// Excess emissions of serving `load` from a grid with the given intensity.
pub fn carbon_from_intensity(load: &HourlyProfile, intensity_kg_per_mwh: &[f64]) -> Result<HourlyProfile> {
    let values = load
        .values()
        .iter()
        .zip(intensity_kg_per_mwh)
        .map(|(l, ci)| l * ci)
        .collect();
    HourlyProfile::new(values, Unit::KgCo2PerHour, "synthetic carbon")
}

/// A port-city-like year: weekday drayage load, Southeast-US sun and an
/// evening-peaking grid.
#[derive(Debug, Clone)]
pub struct SyntheticRegion {
    pub load: HourlyProfile,
    pub solar_cf: HourlyProfile,
    pub carbon: HourlyProfile,
}

pub fn port_region(horizon: usize) -> Result<SyntheticRegion> {
    let load = weekday_block_load(horizon, &LoadShape::default())?;
    let solar_cf = solar_capacity_factor(horizon, 0.85)?;
    let intensity = diurnal_intensity(horizon, 420.0, 80.0, 19.0);
    let carbon = carbon_from_intensity(&load, &intensity)?;
    Ok(SyntheticRegion {
        load,
        solar_cf,
        carbon,
    })
}

/// Capacity-factor variants of the regional profile for a set of sites.
///
/// Site `i` of `n` has its peak scaled between 0.8 and 1.0 so that sites
/// differ in yield but share the daily shape.
pub fn site_capacity_factors(horizon: usize, n: usize) -> Result<Vec<HourlyProfile>> {
    (0..n)
        .map(|i| {
            let f = if n > 1 { 0.8 + 0.2 * i as f64 / (n - 1) as f64 } else { 1.0 };
            Ok(solar_capacity_factor(horizon, 0.85 * f)?.with_label(format!("site {}", i + 1)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solar_is_dark_at_night() {
        let cf = solar_capacity_factor(8760, 0.9).unwrap();
        assert_eq!(cf.values()[0], 0.0);
        assert_eq!(cf.values()[23], 0.0);
        let winter_noon = cf.values()[12];
        let summer_noon = cf.values()[171 * 24 + 12];
        assert!((summer_noon - 0.9).abs() < 1e-12);
        assert!(winter_noon > 0.5 && winter_noon < summer_noon);
    }

    #[test]
    fn weekends_have_no_load_or_carbon() {
        let r = port_region(24 * 7).unwrap();
        for t in 24 * 5..24 * 7 {
            assert_eq!(r.load.values()[t], 0.0);
            assert_eq!(r.carbon.values()[t], 0.0);
        }
        assert!(r.load.values()[..24 * 5].iter().all(|&l| l > 0.0));
    }
}
