//! Emissions, utilization and cycle metrics of a dispatch, and invariant checks.

use serde::{Deserialize, Serialize};

use super::result::Trajectories;
use super::{BatterySpec, DispatchInstance};
use crate::error::{Error, Result};
use crate::profiles::{HourlyProfile, ZERO_LOAD_MW};

/// Total excess emissions if the grid serves all excess load, kg.
pub fn baseline_emissions(carbon: &HourlyProfile) -> f64 {
    carbon.sum()
}

/// Emissions still attributed to grid draw after dispatch, kg.
///
/// Each hour with load contributes its grid share of that hour's baseline
/// emissions; zero-load hours are skipped.
pub fn renewable_emissions(traj: &Trajectories, instance: &DispatchInstance) -> f64 {
    let load = instance.load().values();
    let carbon = instance.carbon().values();
    (0..instance.horizon())
        .filter(|&t| instance.has_load(t))
        .map(|t| traj.grid[t] / load[t] * carbon[t])
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Utilization {
    pub f_grid: f64,
    pub f_solar: f64,
    pub f_batt_dchg: f64,
    pub f_chg_grid: f64,
    pub f_chg_solar: f64,
    /// Hours with positive load.
    pub load_hours: usize,
    /// Hours in which the battery charged.
    pub charging_hours: usize,
    /// Set when the battery never charged; the charging fractions are then 0.
    pub no_charging: bool,
}

/// Average share of each source in serving load and in charging the battery.
pub fn utilization(traj: &Trajectories, instance: &DispatchInstance) -> Result<Utilization> {
    let load = instance.load().values();
    let (mut g, mut s, mut b, mut n) = (0.0, 0.0, 0.0, 0usize);
    for t in (0..instance.horizon()).filter(|&t| instance.has_load(t)) {
        g += traj.grid_to_load[t] / load[t];
        s += traj.solar_to_load[t] / load[t];
        b += traj.battery_to_load[t] / load[t];
        n += 1;
    }
    if n == 0 {
        return Err(Error::UndefinedUtilization);
    }
    let (mut cg, mut cs, mut m) = (0.0, 0.0, 0usize);
    for t in 0..instance.horizon() {
        let charge = traj.battery_charge[t];
        if charge > ZERO_LOAD_MW {
            cg += traj.grid_to_battery[t] / charge;
            cs += traj.solar_to_battery[t] / charge;
            m += 1;
        }
    }
    let nf = n as f64;
    let (f_chg_grid, f_chg_solar) = if m == 0 {
        (0.0, 0.0)
    } else {
        (cg / m as f64, cs / m as f64)
    };
    Ok(Utilization {
        f_grid: g / nf,
        f_solar: s / nf,
        f_batt_dchg: b / nf,
        f_chg_grid,
        f_chg_solar,
        load_hours: n,
        charging_hours: m,
        no_charging: m == 0,
    })
}

/// Equivalent full cycles: total discharge over the usable energy window.
pub fn count_cycles(traj: &Trajectories, battery: &BatterySpec) -> Result<f64> {
    let window = battery.usable_energy_mwh();
    if !battery.has_battery() || window <= 0.0 {
        return Err(Error::invalid("cycle count needs a battery with a usable window"));
    }
    Ok(traj.battery_to_load.iter().sum::<f64>() / window)
}

/// Largest residuals of the physical constraints over a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct InvariantReport {
    /// Solar, charge, grid and load balances, MW.
    pub balance: f64,
    /// Stored-energy recursion, MWh.
    pub energy_recursion: f64,
    /// Distance outside the state-of-charge window, MWh.
    pub soc_window: f64,
    /// |E(T) − E(0)|, MWh.
    pub cyclic: f64,
    /// Largest discharge × charge product, MW².
    pub exclusion: f64,
    /// Largest grid draw at a zero-load hour, MW.
    pub zero_load_grid: f64,
    /// Most negative power value, reported as a positive number, MW.
    pub negativity: f64,
    /// Charge or discharge above the power rating, MW.
    pub power_limit: f64,
}

impl InvariantReport {
    pub fn holds(&self) -> bool {
        self.balance <= 1e-6
            && self.energy_recursion <= 1e-6
            && self.soc_window <= 1e-6
            && self.cyclic <= 1e-6
            && self.exclusion <= 1e-6
            && self.zero_load_grid <= 1e-9
            && self.negativity <= 1e-9
            && self.power_limit <= 1e-6
    }
}

/// Measures how far a trajectory is from satisfying the dispatch constraints.
pub fn check_invariants(
    traj: &Trajectories,
    load: &HourlyProfile,
    solar: &HourlyProfile,
    battery: &BatterySpec,
) -> Result<InvariantReport> {
    let horizon = load.horizon();
    if traj.len() != horizon || solar.horizon() != horizon {
        return Err(Error::HorizonMismatch {
            what: "trajectory".into(),
            expected: horizon,
            got: traj.len(),
        });
    }
    let l = load.values();
    let s = solar.values();
    let mu = battery.roundtrip_efficiency;
    let p_max = battery.max_power_mw();
    let (lo, hi) = (battery.min_energy_mwh(), battery.max_energy_mwh());
    let e0 = battery.initial_energy_mwh();
    let mut r = InvariantReport::default();
    let mut prev = e0;
    for t in 0..horizon {
        let residuals = [
            s[t] - traj.solar_to_load[t] - traj.solar_to_battery[t] - traj.curtailed[t],
            traj.battery_charge[t] - traj.solar_to_battery[t] - traj.grid_to_battery[t],
            traj.grid[t] - traj.grid_to_battery[t] - traj.grid_to_load[t],
            l[t] - traj.solar_to_load[t] - traj.battery_to_load[t] - traj.grid_to_load[t],
        ];
        for x in residuals {
            r.balance = r.balance.max(x.abs());
        }
        let e = traj.energy[t];
        let step = e - prev - mu * traj.battery_charge[t] + traj.battery_to_load[t];
        r.energy_recursion = r.energy_recursion.max(step.abs());
        r.soc_window = r.soc_window.max(lo - e).max(e - hi);
        prev = e;
        r.exclusion = r
            .exclusion
            .max(traj.battery_to_load[t] * traj.battery_charge[t]);
        if l[t] < ZERO_LOAD_MW {
            r.zero_load_grid = r.zero_load_grid.max(traj.grid[t]);
        }
        for v in traj.powers_at(t) {
            r.negativity = r.negativity.max(-v);
        }
        r.power_limit = r
            .power_limit
            .max(traj.battery_charge[t] - p_max)
            .max(traj.battery_to_load[t] - p_max);
    }
    if horizon > 0 {
        r.cyclic = (traj.energy[horizon - 1] - e0).abs();
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::Unit;

    #[test]
    fn baseline_sums() {
        let zero = HourlyProfile::zeros(3, Unit::KgCo2PerHour);
        assert_eq!(baseline_emissions(&zero), 0.0);
        let c = HourlyProfile::new(vec![5.0, 5.0], Unit::KgCo2PerHour, "").unwrap();
        assert_eq!(baseline_emissions(&c), 10.0);
    }
}
