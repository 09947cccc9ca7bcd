//! Cost metrics seen by the utility and by the fleet operator.

use serde::{Deserialize, Serialize};

use crate::costs::SOLAR_LIFE_YEARS;
use crate::error::{Error, Result};

/// Excess CO₂ avoided by the microgrid, kg.
pub fn co2_removed(c_base: f64, c_renew: f64) -> Result<f64> {
    if c_renew < 0.0 || c_base < 0.0 {
        return Err(Error::invalid("emissions must be non-negative"));
    }
    // solver round-off can leave c_renew a hair above c_base
    let slack = 1e-9 * c_base.max(1.0);
    if c_renew > c_base + slack {
        return Err(Error::invalid(format!(
            "renewable-case emissions {c_renew} exceed baseline {c_base}"
        )));
    }
    Ok((c_base - c_renew).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityInputs {
    pub occ_pv: f64,
    pub occ_batt: f64,
    /// $/MWh.
    pub tec: f64,
    pub annual_load_mwh: f64,
    #[serde(default = "default_solar_life")]
    pub solar_life_years: f64,
    /// Zero when there is no battery.
    pub battery_cycles_eol: f64,
    pub cycles_per_year: f64,
}

fn default_solar_life() -> f64 {
    SOLAR_LIFE_YEARS
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityTco {
    pub tco_usd: f64,
    pub years_op: f64,
}

/// Capital plus energy cost over the shorter of solar and battery life.
pub fn utility_tco(inputs: &UtilityInputs) -> Result<UtilityTco> {
    let i = inputs;
    if [i.occ_pv, i.occ_batt, i.tec, i.annual_load_mwh, i.battery_cycles_eol, i.cycles_per_year]
        .iter()
        .any(|v| *v < 0.0 || !v.is_finite())
        || !(i.solar_life_years > 0.0)
    {
        return Err(Error::invalid(format!("invalid utility inputs: {inputs:?}")));
    }
    let years_op = if i.cycles_per_year > 0.0 && i.battery_cycles_eol > 0.0 {
        i.solar_life_years.min(i.battery_cycles_eol / i.cycles_per_year)
    } else {
        i.solar_life_years
    };
    Ok(UtilityTco {
        tco_usd: i.occ_pv + i.occ_batt + i.tec * i.annual_load_mwh * years_op,
        years_op,
    })
}

/// TCO per kg of CO₂ removed; undefined when nothing was removed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum UtilityMetric {
    UsdPerKg(f64),
    Undefined,
}

impl UtilityMetric {
    pub fn value(&self) -> Option<f64> {
        match self {
            Self::UsdPerKg(v) => Some(*v),
            Self::Undefined => None,
        }
    }
}

impl std::fmt::Display for UtilityMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::UsdPerKg(v) => write!(f, "{v}"),
            Self::Undefined => f.write_str("undefined"),
        }
    }
}

pub fn utility_metric(tco_usd: f64, kg_removed: f64) -> Result<UtilityMetric> {
    if kg_removed < 0.0 {
        return Err(Error::invalid("removed emissions must be non-negative"));
    }
    if kg_removed == 0.0 {
        return Ok(UtilityMetric::Undefined);
    }
    Ok(UtilityMetric::UsdPerKg(tco_usd / kg_removed))
}

/// How the fleet pays for energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EnergyTerm {
    /// Electricity bought at the total electricity cost.
    Electric,
    /// Fuel at a flat $/mile.
    Diesel { fuel_usd_per_mile: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FleetParams {
    pub n_veh: f64,
    pub msrp: f64,
    pub registration: f64,
    pub subsidy: f64,
    /// Per vehicle-year.
    pub insurance: f64,
    /// $/mile.
    pub maintenance: f64,
    /// Share of MSRP recovered at resale.
    pub residual_frac: f64,
    pub years_op: f64,
    /// Fleet-aggregate miles per year.
    pub vmt_total: f64,
    /// Dwell-time and payload penalty, $/mile.
    pub penalty: f64,
    pub energy: EnergyTerm,
}

/// Full fleet size.
pub const FULL_FLEET_TRUCKS: f64 = 1825.0;
/// Trucks in the partially electrified scenario.
pub const PARTIAL_FLEET_TRUCKS: f64 = 1087.0;
/// Annual miles per truck in the partially electrified scenario.
pub const PARTIAL_FLEET_MILES_PER_TRUCK: f64 = 84_932.0;

impl FleetParams {
    /// Battery-electric trucks; `vmt_total` must be supplied by the caller.
    pub fn electric(n_veh: f64, vmt_total: f64) -> Self {
        Self {
            n_veh,
            msrp: 334_313.0,
            registration: 1_500.0,
            subsidy: 40_000.0,
            insurance: 11_700.0,
            maintenance: 0.055,
            residual_frac: 0.25,
            years_op: 5.0,
            vmt_total,
            penalty: 0.5,
            energy: EnergyTerm::Electric,
        }
    }

    /// Diesel trucks with the benchmark fuel cost.
    pub fn diesel(n_veh: f64, vmt_total: f64) -> Self {
        Self {
            n_veh,
            msrp: 133_841.0,
            registration: 1_500.0,
            subsidy: 0.0,
            insurance: 8_000.0,
            maintenance: 0.086,
            residual_frac: 0.35,
            years_op: 5.0,
            vmt_total,
            penalty: 0.0,
            energy: EnergyTerm::Diesel {
                fuel_usd_per_mile: 0.68,
            },
        }
    }

    /// The partially electrified fleet: fewer trucks, fixed per-truck mileage.
    pub fn partial_electric() -> Self {
        Self::electric(
            PARTIAL_FLEET_TRUCKS,
            PARTIAL_FLEET_TRUCKS * PARTIAL_FLEET_MILES_PER_TRUCK,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let fuel = match self.energy {
            EnergyTerm::Electric => 0.0,
            EnergyTerm::Diesel { fuel_usd_per_mile } => fuel_usd_per_mile,
        };
        let non_negative = [
            self.n_veh,
            self.msrp,
            self.registration,
            self.subsidy,
            self.insurance,
            self.maintenance,
            self.years_op,
            self.vmt_total,
            self.penalty,
            fuel,
        ]
        .iter()
        .all(|v| *v >= 0.0 && v.is_finite());
        if !non_negative || !(0.0..=1.0).contains(&self.residual_frac) {
            return Err(Error::invalid(format!("invalid fleet parameters: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FleetTco {
    pub tco_usd: f64,
    /// Set when the subsidy exceeds the net purchase and registration cost.
    pub negative_initial_cost: bool,
}

/// Fleet cost of ownership over `years_op`.
///
/// `tec` ($/MWh) and `annual_load_mwh` are used only by the electric variant.
pub fn fleet_tco(params: &FleetParams, tec: f64, annual_load_mwh: f64) -> Result<FleetTco> {
    params.validate()?;
    let p = params;
    let initial = (1.0 - p.residual_frac) * p.msrp + p.registration - p.subsidy;
    let negative_initial_cost = initial < 0.0;
    if negative_initial_cost {
        log::warn!("subsidy exceeds net vehicle cost ({initial} $ per vehicle)");
    }
    let per_vehicle = initial + p.insurance * p.years_op;
    let maintenance = p.maintenance * p.vmt_total * p.years_op;
    let energy = match p.energy {
        EnergyTerm::Electric => {
            if tec < 0.0 || annual_load_mwh < 0.0 {
                return Err(Error::invalid("TEC and load must be non-negative"));
            }
            tec * annual_load_mwh * p.years_op
        }
        EnergyTerm::Diesel { fuel_usd_per_mile } => fuel_usd_per_mile * p.vmt_total * p.years_op,
    };
    Ok(FleetTco {
        tco_usd: p.n_veh * per_vehicle + maintenance + energy,
        negative_initial_cost,
    })
}

pub fn fleet_cost_per_mile(tco_usd: f64, vmt_total: f64, years_op: f64, penalty: f64) -> Result<f64> {
    let miles = vmt_total * years_op;
    if !(miles > 0.0) {
        return Err(Error::invalid("fleet mileage must be positive"));
    }
    Ok(tco_usd / miles + penalty)
}

/// Fleet mileage at which `params` yields `target_usd_per_mile`.
///
/// The cost per mile is `A / VMT + b`, so the answer is closed-form. Used to
/// back out a fleet-average mileage from a published benchmark.
pub fn calibrate_vmt(
    params: &FleetParams,
    tec: f64,
    annual_load_mwh: f64,
    target_usd_per_mile: f64,
) -> Result<f64> {
    let mut p = *params;
    p.vmt_total = 0.0;
    let fixed = fleet_tco(&p, tec, annual_load_mwh)?.tco_usd / p.years_op;
    let per_mile = p.maintenance
        + match p.energy {
            EnergyTerm::Electric => 0.0,
            EnergyTerm::Diesel { fuel_usd_per_mile } => fuel_usd_per_mile,
        }
        + p.penalty;
    let margin = target_usd_per_mile - per_mile;
    if !(margin > 0.0) || !(fixed > 0.0) {
        return Err(Error::invalid("target cost per mile is not reachable"));
    }
    Ok(fixed / margin)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn removed_examples() {
        assert_eq!(co2_removed(100.0, 100.0).unwrap(), 0.0);
        assert_eq!(co2_removed(100.0, 0.0).unwrap(), 100.0);
        assert!((co2_removed(10.0, 1.5).unwrap() - 8.5).abs() < 1e-12);
        assert!(co2_removed(10.0, 11.0).is_err());
    }

    fn utility(occ_pv: f64, eol: f64, cycles: f64) -> UtilityInputs {
        UtilityInputs {
            occ_pv,
            occ_batt: 0.0,
            tec: 100.0,
            annual_load_mwh: 1000.0,
            solar_life_years: 30.0,
            battery_cycles_eol: eol,
            cycles_per_year: cycles,
        }
    }

    #[test]
    fn utility_examples() {
        let t = utility_tco(&utility(10e6, 0.0, 0.0)).unwrap();
        assert_eq!((t.tco_usd, t.years_op), (13e6, 30.0));
        assert_eq!(utility_tco(&utility(0.0, 6000.0, 300.0)).unwrap().years_op, 20.0);
        assert_eq!(utility_tco(&utility(0.0, 2000.0, 50.0)).unwrap().years_op, 30.0);

        assert_eq!(utility_metric(13e6, 1e6).unwrap(), UtilityMetric::UsdPerKg(13.0));
        assert_eq!(utility_metric(5.0, 0.0).unwrap(), UtilityMetric::Undefined);
        assert_eq!(
            utility_metric(26e6, 2e6).unwrap(),
            utility_metric(13e6, 1e6).unwrap()
        );
    }

    #[test]
    fn fleet_examples() {
        let zero = FleetParams {
            n_veh: 0.0,
            msrp: 0.0,
            registration: 0.0,
            subsidy: 0.0,
            insurance: 0.0,
            maintenance: 0.0,
            residual_frac: 0.0,
            years_op: 5.0,
            vmt_total: 0.0,
            penalty: 0.0,
            energy: EnergyTerm::Electric,
        };
        assert_eq!(fleet_tco(&zero, 0.0, 0.0).unwrap().tco_usd, 0.0);
        let resale = FleetParams {
            n_veh: 3.0,
            msrp: 100.0,
            residual_frac: 1.0,
            ..zero
        };
        assert_eq!(fleet_tco(&resale, 0.0, 0.0).unwrap().tco_usd, 0.0);

        let mut one = FleetParams::electric(1.0, 0.0);
        one.years_op = 1.0;
        let t = fleet_tco(&one, 0.0, 0.0).unwrap();
        assert!((t.tco_usd - 223_934.75).abs() < 1e-6);
        assert!(!t.negative_initial_cost);

        assert_eq!(fleet_cost_per_mile(0.0, 1.0, 1.0, 0.5).unwrap(), 0.5);
        assert!((fleet_cost_per_mile(3e6, 300_000.0, 5.0, 0.5).unwrap() - 2.5).abs() < 1e-12);
        assert!(fleet_cost_per_mile(1.0, 0.0, 5.0, 0.5).is_err());
    }

    #[test]
    fn calibration_inverts_cost_per_mile() {
        let diesel = FleetParams::diesel(FULL_FLEET_TRUCKS, 0.0);
        let vmt = calibrate_vmt(&diesel, 0.0, 0.0, 1.63).unwrap();
        let mut p = diesel;
        p.vmt_total = vmt;
        let tco = fleet_tco(&p, 0.0, 0.0).unwrap().tco_usd;
        let cpm = fleet_cost_per_mile(tco, vmt, p.years_op, p.penalty).unwrap();
        assert!((cpm - 1.63).abs() < 1e-9);
    }
}
