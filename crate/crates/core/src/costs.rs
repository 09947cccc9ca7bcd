//! Battery pack sizing, capital costs and levelized electricity costs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profiles::{HourlyProfile, Unit};

/// Grid electricity price, $/MWh.
pub const DEFAULT_GEP_USD_PER_MWH: f64 = 160.0;

/// Operating life of a solar farm, years.
pub const SOLAR_LIFE_YEARS: f64 = 30.0;

/// Parallel module strings × modules per row × rows.
const MODULE_STRINGS: f64 = 2.0;
const SERIES_MODULES: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Chemistry {
    #[serde(rename = "NMC811", alias = "NMC")]
    Nmc811,
    #[serde(rename = "NCA")]
    Nca,
    #[serde(rename = "LFP")]
    Lfp,
}

impl Chemistry {
    pub const ALL: [Chemistry; 3] = [Chemistry::Nmc811, Chemistry::Nca, Chemistry::Lfp];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Nmc811 => "NMC811",
            Self::Nca => "NCA",
            Self::Lfp => "LFP",
        }
    }
}

impl std::fmt::Display for Chemistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Chemistry {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "NMC811" | "NMC" => Ok(Self::Nmc811),
            "NCA" => Ok(Self::Nca),
            "LFP" => Ok(Self::Lfp),
            _ => Err(Error::invalid(format!("unknown chemistry {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChemistryParams {
    pub chemistry: Chemistry,
    pub pack_cost_usd_per_kwh: f64,
    /// Full cycles until end of life.
    pub cycles_eol: f64,
    pub cell_nominal_voltage: f64,
    pub cell_capacity_ah: f64,
    pub pack_voltage_target: f64,
}

impl ChemistryParams {
    pub fn defaults(chemistry: Chemistry) -> Self {
        let (cost, cycles, volts) = match chemistry {
            Chemistry::Nmc811 => (150.98, 2000.0, 3.68),
            Chemistry::Nca => (194.03, 1400.0, 3.67),
            Chemistry::Lfp => (216.17, 6000.0, 3.31),
        };
        Self {
            chemistry,
            pack_cost_usd_per_kwh: cost,
            cycles_eol: cycles,
            cell_nominal_voltage: volts,
            cell_capacity_ah: 15.0,
            pack_voltage_target: 800.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all_positive = [
            self.pack_cost_usd_per_kwh,
            self.cycles_eol,
            self.cell_nominal_voltage,
            self.cell_capacity_ah,
            self.pack_voltage_target,
        ]
        .iter()
        .all(|v| v.is_finite() && *v > 0.0);
        if all_positive {
            Ok(())
        } else {
            Err(Error::invalid(format!("chemistry parameters must be positive: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatteryPackSpec {
    pub rated_energy_mwh: f64,
    pub chemistry: Chemistry,
    /// Cells in parallel within a module.
    pub cells_parallel: u64,
    pub series_per_module: u64,
    /// Cells per module.
    pub cells_per_module: u64,
    pub rated_power_mw: f64,
}

/// Sizes the pack for the given energy and a `duration_h`-hour power rating.
pub fn configure_pack(
    rated_energy_mwh: f64,
    chem: &ChemistryParams,
    duration_h: f64,
) -> Result<BatteryPackSpec> {
    if !(rated_energy_mwh > 0.0) || !rated_energy_mwh.is_finite() {
        return Err(Error::invalid("battery energy must be positive"));
    }
    if !(duration_h > 0.0) {
        return Err(Error::invalid("battery duration must be positive"));
    }
    chem.validate()?;
    let wh = rated_energy_mwh * 1e6;
    let per_string = wh / (chem.pack_voltage_target * chem.cell_capacity_ah);
    // guard against 4166.99999 style representation error before the ceiling
    let cells_parallel = ((per_string / MODULE_STRINGS) - 1e-9).ceil().max(1.0) as u64;
    let series_per_module =
        ((chem.pack_voltage_target / chem.cell_nominal_voltage) / SERIES_MODULES).round().max(1.0) as u64;
    Ok(BatteryPackSpec {
        rated_energy_mwh,
        chemistry: chem.chemistry,
        cells_parallel,
        series_per_module,
        cells_per_module: series_per_module * cells_parallel,
        rated_power_mw: rated_energy_mwh / duration_h,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostStackParams {
    pub sbos_frac: f64,
    pub pcs_usd_per_kw: f64,
    /// Control & communication rate, $/kW, as (MW, $/kW) knots.
    pub cnc_knots: [(f64, f64); 3],
    pub integration_frac: f64,
    pub epc_frac: f64,
    pub projdev_frac: f64,
    pub grid_integration_frac: f64,
}

impl Default for CostStackParams {
    fn default() -> Self {
        Self {
            sbos_frac: 0.23,
            pcs_usd_per_kw: 45.0,
            cnc_knots: [(1.0, 3.9), (10.0, 7.8), (100.0, 10.374)],
            integration_frac: 0.05,
            epc_frac: 0.20,
            projdev_frac: 0.20,
            grid_integration_frac: 0.015,
        }
    }
}

impl CostStackParams {
    pub fn validate(&self) -> Result<()> {
        let fracs = [
            self.sbos_frac,
            self.integration_frac,
            self.epc_frac,
            self.projdev_frac,
            self.grid_integration_frac,
        ];
        if fracs.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(Error::invalid("cost stack fractions must lie in [0, 1]"));
        }
        if self.pcs_usd_per_kw < 0.0 || self.cnc_knots.iter().any(|k| k.1 < 0.0) {
            return Err(Error::invalid("cost stack rates must be non-negative"));
        }
        let [a, b, c] = self.cnc_knots;
        if !(a.0 < b.0 && b.0 < c.0) {
            return Err(Error::invalid("C&C knots must have increasing power"));
        }
        Ok(())
    }

    /// C&C rate at `power_mw`; the flag is set when the power was clamped.
    pub fn cnc_rate(&self, power_mw: f64) -> (f64, bool) {
        let [a, b, c] = self.cnc_knots;
        let p = power_mw.clamp(a.0, c.0);
        let clamped = p != power_mw;
        let (lo, hi) = if p <= b.0 { (a, b) } else { (b, c) };
        let w = (p - lo.0) / (hi.0 - lo.0);
        let rate = lo.1 * (1.0 - w) + hi.1 * w;
        (rate, clamped)
    }
}

/// One line of the battery cost stack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostLine {
    pub item: String,
    pub cost_usd: f64,
    /// Running total after this line.
    pub cumulative_usd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryCost {
    pub lines: Vec<CostLine>,
    pub total_usd: f64,
    /// Set when the power rating fell outside the C&C interpolation range.
    pub cnc_clamped: bool,
}

impl BatteryCost {
    pub fn line(&self, item: &str) -> Option<&CostLine> {
        self.lines.iter().find(|l| l.item == item)
    }
}

/// Itemized capital cost; percentage items apply to everything above them.
pub fn battery_capital_cost(
    spec: &BatteryPackSpec,
    chem: &ChemistryParams,
    stack: &CostStackParams,
) -> Result<BatteryCost> {
    chem.validate()?;
    stack.validate()?;
    let kwh = spec.rated_energy_mwh * 1000.0;
    let kw = spec.rated_power_mw * 1000.0;
    let (cnc_rate, cnc_clamped) = stack.cnc_rate(spec.rated_power_mw);
    if cnc_clamped {
        log::warn!(
            "power {} MW outside the C&C interpolation range, rate clamped",
            spec.rated_power_mw
        );
    }
    let mut lines = Vec::new();
    let mut total = 0.0;
    let mut push = |item: &str, cost: f64, total: &mut f64| {
        *total += cost;
        lines.push(CostLine {
            item: item.to_string(),
            cost_usd: cost,
            cumulative_usd: *total,
        });
    };
    let pack = chem.pack_cost_usd_per_kwh * kwh;
    push("battery_pack", pack, &mut total);
    push("storage_balance_of_system", stack.sbos_frac * pack, &mut total);
    push("power_conversion_system", stack.pcs_usd_per_kw * kw, &mut total);
    push("controls_and_communication", cnc_rate * kw, &mut total);
    for (item, frac) in [
        ("system_integration", stack.integration_frac),
        ("engineering_procurement_construction", stack.epc_frac),
        ("project_development", stack.projdev_frac),
        ("grid_integration", stack.grid_integration_frac),
    ] {
        let cost = frac * total;
        push(item, cost, &mut total);
    }
    Ok(BatteryCost {
        lines,
        total_usd: total,
        cnc_clamped,
    })
}

/// Solar farm overnight capital cost, $.
pub fn solar_capital_cost(nameplate_mw: f64, cost_per_wdc: Option<f64>) -> Result<f64> {
    let cost = cost_per_wdc.ok_or_else(|| Error::invalid("solar unit cost ($/W_DC) is required"))?;
    if !(nameplate_mw > 0.0) {
        return Err(Error::invalid("nameplate must be positive"));
    }
    if !(cost > 0.0) {
        return Err(Error::invalid("solar unit cost must be positive"));
    }
    Ok(nameplate_mw * 1e6 * cost)
}

/// Levelized cost of solar energy over the farm life, $/MWh.
pub fn lcopr(occ_pv: f64, years_op: f64, solar: &HourlyProfile) -> Result<f64> {
    if solar.unit() != Unit::Megawatt {
        return Err(Error::UnitMismatch {
            expected: Unit::Megawatt.to_string(),
            found: solar.unit().to_string(),
        });
    }
    let annual = solar.sum();
    if !(annual > 0.0) || !(years_op > 0.0) {
        return Err(Error::invalid("LCOPR needs positive annual solar output and life"));
    }
    Ok(occ_pv / (years_op * annual))
}

/// Levelized cost of battery discharge, $/MWh.
pub fn lcos(occ_batt: f64, cycles_eol: f64, rated_energy_mwh: f64) -> Result<f64> {
    let denom = cycles_eol * rated_energy_mwh;
    if !(denom > 0.0) {
        return Err(Error::invalid("LCOS needs positive cycle life and energy"));
    }
    Ok(occ_batt / denom)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChargingCost {
    pub usd_per_mwh: f64,
    /// The battery never charged; the cost is reported as zero.
    pub never_charged: bool,
}

pub fn cost_of_charging(f_chg_solar: f64, f_chg_grid: f64, lcopr: f64, gep: f64) -> Result<ChargingCost> {
    for f in [f_chg_solar, f_chg_grid] {
        if !(-1e-9..=1.0 + 1e-9).contains(&f) {
            return Err(Error::invalid(format!("charging fraction {f} outside [0, 1]")));
        }
    }
    if f_chg_solar == 0.0 && f_chg_grid == 0.0 {
        return Ok(ChargingCost {
            usd_per_mwh: 0.0,
            never_charged: true,
        });
    }
    if (f_chg_solar + f_chg_grid - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("charging fractions must sum to one"));
    }
    Ok(ChargingCost {
        usd_per_mwh: f_chg_solar * lcopr + f_chg_grid * gep,
        never_charged: false,
    })
}

/// Blended cost of the electricity served to the load, $/MWh.
pub fn total_electricity_cost(
    f_solar: f64,
    f_batt: f64,
    f_grid: f64,
    lcopr: f64,
    lcos: f64,
    coc: f64,
    gep: f64,
) -> Result<f64> {
    if (f_solar + f_batt + f_grid - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "utilization fractions sum to {}, not 1",
            f_solar + f_batt + f_grid
        )));
    }
    Ok(f_solar * lcopr + f_batt * (coc + lcos) + f_grid * gep)
}

/// Every cost metric of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub occ_pv_usd: f64,
    pub occ_batt_usd: f64,
    pub battery_lines: Vec<CostLine>,
    pub lcopr_usd_per_mwh: f64,
    pub lcos_usd_per_mwh: Option<f64>,
    pub coc_usd_per_mwh: f64,
    pub tec_usd_per_mwh: f64,
}

/// Parameters of the cost chain, loadable from a config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CostConfig {
    #[serde(default)]
    pub chemistries: Vec<ChemistryParams>,
    #[serde(default)]
    pub stack: Option<CostStackParams>,
    pub solar_cost_usd_per_wdc: Option<f64>,
    #[serde(default)]
    pub gep_usd_per_mwh: Option<f64>,
}

impl CostConfig {
    pub fn chemistry(&self, chemistry: Chemistry) -> ChemistryParams {
        self.chemistries
            .iter()
            .find(|c| c.chemistry == chemistry)
            .copied()
            .unwrap_or_else(|| ChemistryParams::defaults(chemistry))
    }

    pub fn stack(&self) -> CostStackParams {
        self.stack.unwrap_or_default()
    }

    pub fn gep(&self) -> f64 {
        self.gep_usd_per_mwh.unwrap_or(DEFAULT_GEP_USD_PER_MWH)
    }
}
