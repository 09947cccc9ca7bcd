//! Hourly optimal dispatch of solar, battery and grid power.
//!
//! The dispatch maximises the percentage reduction of excess CO₂ emissions
//! relative to serving the whole excess load from the grid. It is a
//! mixed-integer linear program; the only integer decision is the per-hour
//! charge/discharge indicator of the battery.

mod bnb;
mod metrics;
mod model;
mod result;

use serde::{Deserialize, Serialize};

pub use metrics::{
    baseline_emissions, check_invariants, count_cycles, renewable_emissions, utilization,
    InvariantReport, Utilization,
};
pub use result::{
    read_trajectory_csv, write_trajectory_csv, DispatchResult, DispatchSummary, SolveStatus, TrajectoryFile,
    Trajectories,
};

use crate::error::{Error, Result};
use crate::profiles::{HourlyProfile, Unit, ZERO_LOAD_MW};

/// Battery system parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatterySpec {
    /// Rated (nominal) energy, the "battery size". Zero means no battery.
    pub rated_energy_mwh: f64,
    /// Rated energy divided by maximum charge/discharge power.
    #[serde(default = "BatterySpec::default_duration")]
    pub duration_h: f64,
    #[serde(default = "BatterySpec::default_efficiency")]
    pub roundtrip_efficiency: f64,
    #[serde(default = "BatterySpec::default_soc_min")]
    pub soc_min_frac: f64,
    #[serde(default = "BatterySpec::default_soc_max")]
    pub soc_max_frac: f64,
    #[serde(default = "BatterySpec::default_initial")]
    pub initial_soc_frac: f64,
}

impl BatterySpec {
    fn default_duration() -> f64 {
        4.0
    }
    fn default_efficiency() -> f64 {
        0.85
    }
    fn default_soc_min() -> f64 {
        0.1
    }
    fn default_soc_max() -> f64 {
        0.9
    }
    fn default_initial() -> f64 {
        0.5
    }

    /// A battery of the given size with the default 4-hour, 85 % roundtrip
    /// efficiency, 10–90 % window, half-full start.
    pub fn new(rated_energy_mwh: f64) -> Self {
        Self {
            rated_energy_mwh,
            duration_h: Self::default_duration(),
            roundtrip_efficiency: Self::default_efficiency(),
            soc_min_frac: Self::default_soc_min(),
            soc_max_frac: Self::default_soc_max(),
            initial_soc_frac: Self::default_initial(),
        }
    }

    pub fn none() -> Self {
        Self::new(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.rated_energy_mwh.is_finite()
            && self.rated_energy_mwh >= 0.0
            && self.duration_h.is_finite()
            && self.duration_h > 0.0
            && self.roundtrip_efficiency > 0.0
            && self.roundtrip_efficiency <= 1.0
            && 0.0 <= self.soc_min_frac
            && self.soc_min_frac <= self.initial_soc_frac
            && self.initial_soc_frac <= self.soc_max_frac
            && self.soc_max_frac <= 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid battery parameters: {self:?}")))
        }
    }

    pub fn has_battery(&self) -> bool {
        self.rated_energy_mwh > 0.0
    }

    pub fn max_power_mw(&self) -> f64 {
        self.rated_energy_mwh / self.duration_h
    }

    pub fn min_energy_mwh(&self) -> f64 {
        self.soc_min_frac * self.rated_energy_mwh
    }

    pub fn max_energy_mwh(&self) -> f64 {
        self.soc_max_frac * self.rated_energy_mwh
    }

    pub fn initial_energy_mwh(&self) -> f64 {
        self.initial_soc_frac * self.rated_energy_mwh
    }

    /// Energy between the window limits.
    pub fn usable_energy_mwh(&self) -> f64 {
        (self.soc_max_frac - self.soc_min_frac) * self.rated_energy_mwh
    }
}

/// Validated inputs of one dispatch problem.
#[derive(Debug, Clone, PartialEq)]
pub struct DispatchInstance {
    load: HourlyProfile,
    solar: HourlyProfile,
    carbon: HourlyProfile,
    battery: BatterySpec,
}

impl DispatchInstance {
    pub fn load(&self) -> &HourlyProfile {
        &self.load
    }

    pub fn solar(&self) -> &HourlyProfile {
        &self.solar
    }

    pub fn carbon(&self) -> &HourlyProfile {
        &self.carbon
    }

    pub fn battery(&self) -> &BatterySpec {
        &self.battery
    }

    pub fn horizon(&self) -> usize {
        self.load.horizon()
    }

    /// True when hour `t` (0-based) carries excess load.
    pub fn has_load(&self, t: usize) -> bool {
        self.load.values()[t] >= ZERO_LOAD_MW
    }

    /// Annual excess load energy, MWh.
    pub fn total_load_mwh(&self) -> f64 {
        self.load.sum()
    }
}

fn expect_unit(p: &HourlyProfile, unit: Unit) -> Result<()> {
    if p.unit() != unit {
        return Err(Error::UnitMismatch {
            expected: unit.to_string(),
            found: p.unit().to_string(),
        });
    }
    Ok(())
}

/// Checks horizons, units and the zero-load/zero-carbon coupling.
pub fn build_instance(
    load: HourlyProfile,
    solar: HourlyProfile,
    carbon: HourlyProfile,
    battery: BatterySpec,
) -> Result<DispatchInstance> {
    expect_unit(&load, Unit::Megawatt)?;
    expect_unit(&solar, Unit::Megawatt)?;
    expect_unit(&carbon, Unit::KgCo2PerHour)?;
    battery.validate()?;
    let horizon = load.horizon();
    for (what, p) in [("solar", &solar), ("carbon", &carbon)] {
        if p.horizon() != horizon {
            return Err(Error::HorizonMismatch {
                what: what.to_string(),
                expected: horizon,
                got: p.horizon(),
            });
        }
    }
    for (t, (&l, &c)) in load.values().iter().zip(carbon.values()).enumerate() {
        if l < ZERO_LOAD_MW && c > 0.0 {
            return Err(Error::CarbonAtZeroLoad { hour: t + 1 });
        }
    }
    Ok(DispatchInstance {
        load,
        solar,
        carbon,
        battery,
    })
}

/// How the mixed-integer program is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverBackend {
    /// LP relaxation with this crate's branch-and-bound on the indicators.
    #[default]
    BranchAndBound,
    /// Hand the full MILP to the HiGHS MIP solver.
    HighsMip,
}

impl std::str::FromStr for SolverBackend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bnb" | "branch-and-bound" => Ok(Self::BranchAndBound),
            "highs" | "highs-mip" => Ok(Self::HighsMip),
            other => Err(Error::invalid(format!("unknown solver backend {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    /// Relative optimality gap at which the search stops.
    pub tolerance: f64,
    pub time_limit_s: f64,
    pub backend: SolverBackend,
    /// Primal feasibility tolerance, MW / MWh.
    pub feasibility_tol: f64,
    /// Largest `min(charge, discharge)` accepted as complementary, MW.
    pub integrality_tol: f64,
    pub max_nodes: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-4,
            time_limit_s: 300.0,
            backend: SolverBackend::BranchAndBound,
            feasibility_tol: 1e-6,
            integrality_tol: 1e-5,
            max_nodes: 10_000,
        }
    }
}

/// Solves the dispatch problem and derives emissions and utilization metrics.
pub fn solve_dispatch(instance: &DispatchInstance, options: &SolveOptions) -> Result<DispatchResult> {
    let start = std::time::Instant::now();
    let outcome = if !instance.battery.has_battery() {
        model::solve_without_battery(instance)
    } else {
        let lp = model::DispatchLp::new(instance);
        let mut outcome = match options.backend {
            SolverBackend::BranchAndBound => bnb::branch_and_bound(&lp, options)?,
            SolverBackend::HighsMip => lp.solve_mip(options)?,
        };
        // remove overlaps left inside the integrality tolerance
        outcome.vars = outcome.vars.repaired(lp.efficiency()).0;
        outcome
    };
    let mut result = DispatchResult::from_outcome(instance, outcome)?;
    result.wall_time_s = start.elapsed().as_secs_f64();
    Ok(result)
}
