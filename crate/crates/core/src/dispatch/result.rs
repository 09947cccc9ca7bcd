//! Dispatch results, their CSV/JSON forms and the trajectory reader.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::metrics::{baseline_emissions, count_cycles, renewable_emissions, utilization, Utilization};
use super::model::Outcome;
use super::DispatchInstance;
use crate::error::{Error, Result};
use crate::profiles::{HourlyProfile, Unit};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum SolveStatus {
    ProvenOptimal,
    /// Stopped early; the objective is within `relative_gap` of optimal.
    Gap { relative_gap: f64 },
    Infeasible,
}

impl SolveStatus {
    pub fn relative_gap(&self) -> Option<f64> {
        match self {
            Self::ProvenOptimal => Some(0.0),
            Self::Gap { relative_gap } => Some(*relative_gap),
            Self::Infeasible => None,
        }
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::ProvenOptimal => write!(f, "proven-optimal"),
            Self::Gap { relative_gap } => write!(f, "gap({relative_gap:.3e})"),
            Self::Infeasible => write!(f, "infeasible"),
        }
    }
}

/// Per-hour power (MW) and energy (MWh) flows.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trajectories {
    pub grid_to_load: Vec<f64>,
    pub solar_to_load: Vec<f64>,
    pub battery_to_load: Vec<f64>,
    pub solar_to_battery: Vec<f64>,
    pub grid_to_battery: Vec<f64>,
    pub curtailed: Vec<f64>,
    /// Total grid draw.
    pub grid: Vec<f64>,
    /// Total battery charging power.
    pub battery_charge: Vec<f64>,
    /// Stored energy at the end of each hour.
    pub energy: Vec<f64>,
    /// Charge/discharge indicator; true while discharging.
    pub discharging: Vec<bool>,
}

const COLUMNS: [&str; 14] = [
    "hour",
    "load_mw",
    "solar_mw",
    "carbon_kg_per_h",
    "p_g_load",
    "p_s_load",
    "p_b_load",
    "p_s_batt",
    "p_g_batt",
    "p_s_curtail",
    "p_g",
    "p_batt",
    "e_batt",
    "delta",
];

impl Trajectories {
    pub fn len(&self) -> usize {
        self.energy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energy.is_empty()
    }

    /// All power flows at hour `t`.
    pub fn powers_at(&self, t: usize) -> [f64; 8] {
        [
            self.grid_to_load[t],
            self.solar_to_load[t],
            self.battery_to_load[t],
            self.solar_to_battery[t],
            self.grid_to_battery[t],
            self.curtailed[t],
            self.grid[t],
            self.battery_charge[t],
        ]
    }

    pub fn total_grid_mwh(&self) -> f64 {
        self.grid.iter().sum()
    }

    fn from_vars(instance: &DispatchInstance, outcome: &Outcome) -> Self {
        let v = &outcome.vars;
        let load = instance.load().values();
        let solar = instance.solar().values();
        let horizon = instance.horizon();
        let mut t = Self::default();
        for h in 0..horizon {
            let (sl, sb, gb, bl) = (
                v.solar_to_load[h],
                v.solar_to_battery[h],
                v.grid_to_battery[h],
                v.battery_to_load[h],
            );
            let gl = if instance.has_load(h) {
                (load[h] - sl - bl).max(0.0)
            } else {
                0.0
            };
            t.grid_to_load.push(gl);
            t.solar_to_load.push(sl);
            t.battery_to_load.push(bl);
            t.solar_to_battery.push(sb);
            t.grid_to_battery.push(gb);
            t.curtailed.push((solar[h] - sl - sb).max(0.0));
            t.grid.push(gl + gb);
            t.battery_charge.push(sb + gb);
            t.energy.push(v.energy[h]);
            t.discharging.push(bl > 0.0);
        }
        t
    }
}

/// Optimal dispatch and the metrics derived from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchResult {
    pub trajectories: Trajectories,
    /// Percentage reduction of excess emissions, J.
    pub objective_pct: f64,
    pub c_base_kg: f64,
    pub c_renew_kg: f64,
    /// `None` when no hour carries load.
    pub utilization: Option<Utilization>,
    pub positive_load_hours: usize,
    /// Equivalent full cycles over the horizon; `None` without a battery.
    pub cycles: Option<f64>,
    pub status: SolveStatus,
    pub nodes: usize,
    pub lp_solves: usize,
    pub wall_time_s: f64,
}

/// The JSON summary of a dispatch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchSummary {
    pub objective_pct: f64,
    pub c_base_kg: f64,
    pub c_renew_kg: f64,
    pub f_grid: Option<f64>,
    pub f_solar: Option<f64>,
    pub f_batt_dchg: Option<f64>,
    pub f_chg_grid: Option<f64>,
    pub f_chg_solar: Option<f64>,
    pub no_charging: bool,
    pub positive_load_hours: usize,
    pub cycles: Option<f64>,
    #[serde(flatten)]
    pub status: SolveStatus,
    pub gap: Option<f64>,
    pub nodes: usize,
    pub wall_time_s: f64,
}

impl DispatchResult {
    pub(crate) fn from_outcome(instance: &DispatchInstance, outcome: Outcome) -> Result<Self> {
        let trajectories = Trajectories::from_vars(instance, &outcome);
        let c_base_kg = baseline_emissions(instance.carbon());
        let c_renew_kg = renewable_emissions(&trajectories, instance);
        let objective_pct = if c_base_kg > 0.0 {
            (100.0 * (1.0 - c_renew_kg / c_base_kg)).clamp(0.0, 100.0)
        } else {
            0.0
        };
        let utilization = match utilization(&trajectories, instance) {
            Ok(u) => Some(u),
            Err(Error::UndefinedUtilization) => None,
            Err(e) => return Err(e),
        };
        let positive_load_hours = (0..instance.horizon())
            .filter(|&t| instance.has_load(t))
            .count();
        let cycles = if instance.battery().has_battery() {
            Some(count_cycles(&trajectories, instance.battery())?)
        } else {
            None
        };
        Ok(Self {
            trajectories,
            objective_pct,
            c_base_kg,
            c_renew_kg,
            utilization,
            positive_load_hours,
            cycles,
            status: outcome.status,
            nodes: outcome.nodes,
            lp_solves: outcome.lp_solves,
            wall_time_s: 0.0,
        })
    }

    pub fn summary(&self) -> DispatchSummary {
        let u = self.utilization.as_ref();
        DispatchSummary {
            objective_pct: self.objective_pct,
            c_base_kg: self.c_base_kg,
            c_renew_kg: self.c_renew_kg,
            f_grid: u.map(|u| u.f_grid),
            f_solar: u.map(|u| u.f_solar),
            f_batt_dchg: u.map(|u| u.f_batt_dchg),
            f_chg_grid: u.map(|u| u.f_chg_grid),
            f_chg_solar: u.map(|u| u.f_chg_solar),
            no_charging: u.is_none_or(|u| u.no_charging),
            positive_load_hours: self.positive_load_hours,
            cycles: self.cycles,
            status: self.status,
            gap: self.status.relative_gap(),
            nodes: self.nodes,
            wall_time_s: self.wall_time_s,
        }
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary()).expect("summary serializes")
    }

    /// One row per hour: inputs followed by every trajectory.
    pub fn write_csv<W: Write>(&self, instance: &DispatchInstance, out: W) -> std::io::Result<()> {
        write_trajectory_csv(
            &self.trajectories,
            instance.load(),
            instance.solar(),
            instance.carbon(),
            out,
        )
    }
}

pub fn write_trajectory_csv<W: Write>(
    t: &Trajectories,
    load: &HourlyProfile,
    solar: &HourlyProfile,
    carbon: &HourlyProfile,
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "{}", COLUMNS.join(","))?;
    for h in 0..t.len() {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            h + 1,
            load.values()[h],
            solar.values()[h],
            carbon.values()[h],
            t.grid_to_load[h],
            t.solar_to_load[h],
            t.battery_to_load[h],
            t.solar_to_battery[h],
            t.grid_to_battery[h],
            t.curtailed[h],
            t.grid[h],
            t.battery_charge[h],
            t.energy[h],
            u8::from(t.discharging[h]),
        )?;
    }
    Ok(())
}

/// Inputs and trajectories read back from a dispatch CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryFile {
    pub load: HourlyProfile,
    pub solar: HourlyProfile,
    pub carbon: HourlyProfile,
    pub trajectories: Trajectories,
}

pub fn read_trajectory_csv(path: &Path) -> Result<TrajectoryFile> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_trajectory_csv(std::io::BufReader::new(file), path)
}

fn parse_trajectory_csv<R: BufRead>(reader: R, path: &Path) -> Result<TrajectoryFile> {
    let mut lines = reader.lines().enumerate();
    let header = match lines.next() {
        Some((_, l)) => l.map_err(|e| Error::io(path, e))?,
        None => return Err(Error::format(path, "empty trajectory file")),
    };
    if header.trim() != COLUMNS.join(",") {
        return Err(Error::format(path, "unexpected trajectory header"));
    }
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); COLUMNS.len()];
    for (i, line) in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != COLUMNS.len() {
            return Err(Error::Unparseable { line: i + 1, text: line.clone() });
        }
        for (c, f) in cols.iter_mut().zip(&fields) {
            let v: f64 = f.trim().parse().map_err(|_| Error::Unparseable {
                line: i + 1,
                text: line.clone(),
            })?;
            c.push(v);
        }
        let hour = cols[0].len();
        if cols[0][hour - 1] != hour as f64 {
            return Err(Error::HourIndex {
                row: hour,
                expected: hour,
                found: fields[0].trim().to_string(),
            });
        }
    }
    let mut it = cols.into_iter().skip(1);
    let mut next = || it.next().unwrap_or_default();
    let load = HourlyProfile::new(next(), Unit::Megawatt, "load")?;
    let solar = HourlyProfile::new(next(), Unit::Megawatt, "solar")?;
    let carbon = HourlyProfile::new(next(), Unit::KgCo2PerHour, "carbon")?;
    let trajectories = Trajectories {
        grid_to_load: next(),
        solar_to_load: next(),
        battery_to_load: next(),
        solar_to_battery: next(),
        grid_to_battery: next(),
        curtailed: next(),
        grid: next(),
        battery_charge: next(),
        energy: next(),
        discharging: next().into_iter().map(|d| d != 0.0).collect(),
    };
    Ok(TrajectoryFile {
        load,
        solar,
        carbon,
        trajectories,
    })
}
