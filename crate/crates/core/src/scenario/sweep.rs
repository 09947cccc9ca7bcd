//! Cross-product sweeps of the dispatch → costs → stakeholder chain.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config;
use crate::costs::{
    battery_capital_cost, configure_pack, cost_of_charging, lcopr, lcos, solar_capital_cost,
    total_electricity_cost, Chemistry, CostConfig, SOLAR_LIFE_YEARS,
};
use crate::dispatch::{
    build_instance, solve_dispatch, write_trajectory_csv, BatterySpec, DispatchResult, SolveOptions,
};
use crate::error::{Error, Result};
use crate::profiles::{available_capacity, read_profile, shift_profile, HourlyProfile, Unit};
use crate::siting::SiteCatalog;
use crate::stakeholders::{
    co2_removed, fleet_cost_per_mile, fleet_tco, utility_metric, utility_tco, FleetParams,
    UtilityInputs, FULL_FLEET_TRUCKS, PARTIAL_FLEET_TRUCKS,
};

/// Which solar resources the sweep visits.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SiteSelection {
    /// Site catalog JSON with representative profiles attached.
    #[serde(default)]
    pub catalog: Option<PathBuf>,
    /// 1-based catalog indices; empty means every parcel.
    #[serde(default)]
    pub indices: Vec<usize>,
    /// Capacity-factor CSVs used as sites 1..n when no catalog is given.
    #[serde(default)]
    pub profiles: Vec<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FleetSpec {
    /// Fully electrified fleet.
    #[serde(default)]
    pub full: Option<FleetParams>,
    /// Partially electrified fleet.
    #[serde(default)]
    pub partial: Option<FleetParams>,
    /// Load of the partial fleet relative to the full one.
    #[serde(default)]
    pub partial_load_scale: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Hours in every profile.
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    pub load: PathBuf,
    pub carbon: PathBuf,
    pub sites: SiteSelection,
    /// Empty means each catalog parcel's own nameplate.
    #[serde(default)]
    pub nameplates_mw: Vec<f64>,
    pub battery_mwh: Vec<f64>,
    #[serde(default = "default_chemistries")]
    pub chemistries: Vec<Chemistry>,
    #[serde(default = "default_shifts")]
    pub shifts_h: Vec<i64>,
    /// Shift the carbon profile together with the load.
    #[serde(default = "default_true")]
    pub shift_carbon: bool,
    pub solar_cost_usd_per_wdc: Option<f64>,
    /// Optional chemistry/stack overrides.
    #[serde(default)]
    pub costs: Option<PathBuf>,
    #[serde(default)]
    pub gep_usd_per_mwh: Option<f64>,
    #[serde(default)]
    pub battery_duration_h: Option<f64>,
    #[serde(default)]
    pub fleet: FleetSpec,
    #[serde(default)]
    pub solver: SolveOptions,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub write_trajectories: bool,
}

fn default_chemistries() -> Vec<Chemistry> {
    vec![Chemistry::Lfp]
}

fn default_horizon() -> usize {
    crate::profiles::HOURS_PER_YEAR
}

fn default_shifts() -> Vec<i64> {
    vec![0]
}

fn default_true() -> bool {
    true
}

impl SweepSpec {
    pub fn load(path: &Path) -> Result<Self> {
        config::load(path)
    }

    pub fn validate(&self) -> Result<()> {
        if self.battery_mwh.is_empty() || self.chemistries.is_empty() || self.shifts_h.is_empty() {
            return Err(Error::invalid("sweep axes must be non-empty"));
        }
        if self.battery_mwh.iter().chain(&self.nameplates_mw).any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::invalid("nameplates and battery sizes must be non-negative"));
        }
        if self.sites.catalog.is_none() && self.sites.profiles.is_empty() {
            return Err(Error::invalid("sweep needs a site catalog or explicit profiles"));
        }
        if self.sites.catalog.is_none() && self.nameplates_mw.is_empty() {
            return Err(Error::invalid("explicit site profiles need a nameplate list"));
        }
        Ok(())
    }

    /// Reads every file the spec names; relative paths resolve against `base_dir`.
    pub fn resolve_inputs(&self, base_dir: &Path) -> Result<SweepInputs> {
        self.validate()?;
        let horizon = self.horizon;
        let load = read_profile(&base_dir.join(&self.load), Some(Unit::Megawatt), horizon)?;
        let carbon = read_profile(&base_dir.join(&self.carbon), Some(Unit::KgCo2PerHour), horizon)?;
        let mut sites = Vec::new();
        if let Some(cat_path) = &self.sites.catalog {
            let path = base_dir.join(cat_path);
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let catalog = SiteCatalog::from_json(&text)?;
            let wanted: Vec<usize> = if self.sites.indices.is_empty() {
                catalog.parcels.iter().map(|p| p.site_index).collect()
            } else {
                self.sites.indices.clone()
            };
            for idx in wanted {
                let parcel = catalog
                    .site(idx)
                    .ok_or_else(|| Error::invalid(format!("site {idx} not in catalog")))?;
                let cf = parcel.representative_profile.clone().ok_or_else(|| {
                    Error::invalid(format!("site {idx} has no representative profile"))
                })?;
                sites.push(SiteInput {
                    index: idx,
                    label: format!("block {},{}", parcel.block_row, parcel.block_col),
                    capacity_factor: cf,
                    nameplate_mw: Some(parcel.nameplate_mw),
                });
            }
        } else {
            for (i, p) in self.sites.profiles.iter().enumerate() {
                let cf = read_profile(&base_dir.join(p), Some(Unit::CapacityFactor), horizon)?;
                sites.push(SiteInput {
                    index: i + 1,
                    label: p.display().to_string(),
                    capacity_factor: cf,
                    nameplate_mw: None,
                });
            }
        }
        let costs = match &self.costs {
            Some(p) => config::load(&base_dir.join(p))?,
            None => CostConfig::default(),
        };
        Ok(SweepInputs {
            load,
            carbon,
            sites,
            costs,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiteInput {
    pub index: usize,
    pub label: String,
    pub capacity_factor: HourlyProfile,
    /// The parcel's own capacity, used when the sweep has no nameplate list.
    pub nameplate_mw: Option<f64>,
}

/// Everything a sweep reads, already validated.
#[derive(Debug, Clone)]
pub struct SweepInputs {
    pub load: HourlyProfile,
    pub carbon: HourlyProfile,
    pub sites: Vec<SiteInput>,
    pub costs: CostConfig,
}

/// One point of the cross product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub site_index: usize,
    pub nameplate_mw: f64,
    pub battery_mwh: f64,
    pub chemistry: Chemistry,
    pub shift_h: i64,
}

impl Cell {
    /// Stable textual key used for resuming.
    pub fn id(&self) -> String {
        format!(
            "s{}|np{}|b{}|{}|h{}",
            self.site_index, self.nameplate_mw, self.battery_mwh, self.chemistry, self.shift_h
        )
    }

    fn sort_key(&self, other: &Self) -> std::cmp::Ordering {
        self.site_index
            .cmp(&other.site_index)
            .then(self.nameplate_mw.total_cmp(&other.nameplate_mw))
            .then(self.battery_mwh.total_cmp(&other.battery_mwh))
            .then(self.chemistry.cmp(&other.chemistry))
            .then(self.shift_h.cmp(&other.shift_h))
    }
}

/// Every cell of the sweep, in output order.
pub fn plan_cells(spec: &SweepSpec, inputs: &SweepInputs) -> Result<Vec<Cell>> {
    spec.validate()?;
    if inputs.sites.is_empty() {
        return Err(Error::invalid("sweep selects no sites"));
    }
    let mut cells = Vec::new();
    for site in &inputs.sites {
        let nameplates = if spec.nameplates_mw.is_empty() {
            vec![site.nameplate_mw.ok_or_else(|| {
                Error::invalid(format!("site {} has no nameplate", site.index))
            })?]
        } else {
            spec.nameplates_mw.clone()
        };
        for &nameplate_mw in &nameplates {
            for &battery_mwh in &spec.battery_mwh {
                for &chemistry in &spec.chemistries {
                    for &shift_h in &spec.shifts_h {
                        cells.push(Cell {
                            site_index: site.index,
                            nameplate_mw,
                            battery_mwh,
                            chemistry,
                            shift_h,
                        });
                    }
                }
            }
        }
    }
    cells.sort_by(Cell::sort_key);
    let unique: BTreeSet<String> = cells.iter().map(Cell::id).collect();
    if unique.len() != cells.len() {
        return Err(Error::invalid("sweep axes contain duplicate values"));
    }
    Ok(cells)
}

/// Metrics of one cell. Fields are `None` where the quantity is undefined
/// or the cell failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub cell_id: String,
    #[serde(flatten)]
    pub cell: Cell,
    pub status: String,
    pub gap: Option<f64>,
    pub error: Option<String>,
    pub objective_pct: Option<f64>,
    pub c_base_kg: Option<f64>,
    pub c_renew_kg: Option<f64>,
    pub co2_removed_kg: Option<f64>,
    pub f_grid: Option<f64>,
    pub f_solar: Option<f64>,
    pub f_batt_dchg: Option<f64>,
    pub f_chg_grid: Option<f64>,
    pub f_chg_solar: Option<f64>,
    pub cycles_per_year: Option<f64>,
    pub occ_pv_usd: Option<f64>,
    pub occ_batt_usd: Option<f64>,
    pub lcopr_usd_per_mwh: Option<f64>,
    pub lcos_usd_per_mwh: Option<f64>,
    pub coc_usd_per_mwh: Option<f64>,
    pub tec_usd_per_mwh: Option<f64>,
    pub utility_tco_usd: Option<f64>,
    pub years_op: Option<f64>,
    pub usd_per_kg: Option<f64>,
    pub fleet_usd_per_mile: Option<f64>,
    pub partial_fleet_usd_per_mile: Option<f64>,
    pub trajectory_file: Option<String>,
    pub wall_time_s: f64,
}

impl ScenarioResult {
    fn failed(cell: Cell, status: &str, error: String, wall_time_s: f64) -> Self {
        Self {
            cell_id: cell.id(),
            cell,
            status: status.to_string(),
            gap: None,
            error: Some(error),
            objective_pct: None,
            c_base_kg: None,
            c_renew_kg: None,
            co2_removed_kg: None,
            f_grid: None,
            f_solar: None,
            f_batt_dchg: None,
            f_chg_grid: None,
            f_chg_solar: None,
            cycles_per_year: None,
            occ_pv_usd: None,
            occ_batt_usd: None,
            lcopr_usd_per_mwh: None,
            lcos_usd_per_mwh: None,
            coc_usd_per_mwh: None,
            tec_usd_per_mwh: None,
            utility_tco_usd: None,
            years_op: None,
            usd_per_kg: None,
            fleet_usd_per_mile: None,
            partial_fleet_usd_per_mile: None,
            trajectory_file: None,
            wall_time_s,
        }
    }
}

/// Parameters of the cost and stakeholder chain shared by every cell.
#[derive(Debug, Clone)]
pub struct ChainParams {
    pub costs: CostConfig,
    pub solar_cost_usd_per_wdc: Option<f64>,
    pub gep: f64,
    pub battery_duration_h: f64,
    pub fleet: Option<FleetParams>,
    pub partial_fleet: Option<FleetParams>,
    pub partial_load_scale: f64,
}

impl ChainParams {
    pub fn from_spec(spec: &SweepSpec, costs: &CostConfig) -> Self {
        Self {
            costs: costs.clone(),
            solar_cost_usd_per_wdc: spec.solar_cost_usd_per_wdc.or(costs.solar_cost_usd_per_wdc),
            gep: spec.gep_usd_per_mwh.unwrap_or_else(|| costs.gep()),
            battery_duration_h: spec.battery_duration_h.unwrap_or(4.0),
            fleet: spec.fleet.full,
            partial_fleet: spec.fleet.partial,
            partial_load_scale: spec
                .fleet
                .partial_load_scale
                .unwrap_or(PARTIAL_FLEET_TRUCKS / FULL_FLEET_TRUCKS),
        }
    }
}

/// Costs and stakeholder metrics for a solved dispatch.
pub fn evaluate_chain(
    cell: Cell,
    dispatch: &DispatchResult,
    solar: &HourlyProfile,
    annual_load_mwh: f64,
    params: &ChainParams,
) -> Result<ScenarioResult> {
    let u = dispatch
        .utilization
        .ok_or(Error::UndefinedUtilization)?;
    let mut r = ScenarioResult::failed(cell, &dispatch.status.to_string(), String::new(), dispatch.wall_time_s);
    r.error = None;
    r.gap = dispatch.status.relative_gap();
    r.objective_pct = Some(dispatch.objective_pct);
    r.c_base_kg = Some(dispatch.c_base_kg);
    r.c_renew_kg = Some(dispatch.c_renew_kg);
    let removed = co2_removed(dispatch.c_base_kg, dispatch.c_renew_kg)?;
    r.co2_removed_kg = Some(removed);
    r.f_grid = Some(u.f_grid);
    r.f_solar = Some(u.f_solar);
    r.f_batt_dchg = Some(u.f_batt_dchg);
    r.f_chg_grid = Some(u.f_chg_grid);
    r.f_chg_solar = Some(u.f_chg_solar);
    r.cycles_per_year = dispatch.cycles;

    let (occ_pv, lcopr_v) = if cell.nameplate_mw > 0.0 {
        let occ = solar_capital_cost(cell.nameplate_mw, params.solar_cost_usd_per_wdc)?;
        (occ, Some(lcopr(occ, SOLAR_LIFE_YEARS, solar)?))
    } else {
        (0.0, None)
    };
    let chem = params.costs.chemistry(cell.chemistry);
    let (occ_batt, lcos_v, cycles_eol) = if cell.battery_mwh > 0.0 {
        let pack = configure_pack(cell.battery_mwh, &chem, params.battery_duration_h)?;
        let cost = battery_capital_cost(&pack, &chem, &params.costs.stack())?;
        let l = lcos(cost.total_usd, chem.cycles_eol, cell.battery_mwh)?;
        (cost.total_usd, Some(l), chem.cycles_eol)
    } else {
        (0.0, None, 0.0)
    };
    let coc = cost_of_charging(u.f_chg_solar, u.f_chg_grid, lcopr_v.unwrap_or(0.0), params.gep)?;
    let tec = total_electricity_cost(
        u.f_solar,
        u.f_batt_dchg,
        u.f_grid,
        lcopr_v.unwrap_or(0.0),
        lcos_v.unwrap_or(0.0),
        coc.usd_per_mwh,
        params.gep,
    )?;
    r.occ_pv_usd = Some(occ_pv);
    r.occ_batt_usd = Some(occ_batt);
    r.lcopr_usd_per_mwh = lcopr_v;
    r.lcos_usd_per_mwh = lcos_v;
    r.coc_usd_per_mwh = Some(coc.usd_per_mwh);
    r.tec_usd_per_mwh = Some(tec);

    let utility = utility_tco(&UtilityInputs {
        occ_pv,
        occ_batt,
        tec,
        annual_load_mwh,
        solar_life_years: SOLAR_LIFE_YEARS,
        battery_cycles_eol: cycles_eol,
        cycles_per_year: dispatch.cycles.unwrap_or(0.0),
    })?;
    r.utility_tco_usd = Some(utility.tco_usd);
    r.years_op = Some(utility.years_op);
    r.usd_per_kg = utility_metric(utility.tco_usd, removed)?.value();

    let per_mile = |fleet: &FleetParams, load: f64| -> Result<f64> {
        let t = fleet_tco(fleet, tec, load)?;
        fleet_cost_per_mile(t.tco_usd, fleet.vmt_total, fleet.years_op, fleet.penalty)
    };
    if let Some(f) = &params.fleet {
        r.fleet_usd_per_mile = Some(per_mile(f, annual_load_mwh)?);
    }
    if let Some(f) = &params.partial_fleet {
        r.partial_fleet_usd_per_mile = Some(per_mile(f, annual_load_mwh * params.partial_load_scale)?);
    }
    Ok(r)
}

/// Carbon for a shifted load when emissions stay tied to the clock hour.
///
/// The intensity of each hour is carbon/load; hours without load borrow the
/// intensity of the nearest hour with load (earlier hour on ties).
pub fn recouple_carbon(
    load: &HourlyProfile,
    carbon: &HourlyProfile,
    shifted_load: &HourlyProfile,
) -> Result<HourlyProfile> {
    let l = load.values();
    let c = carbon.values();
    let n = l.len();
    let known: Vec<usize> = (0..n).filter(|&t| l[t] >= crate::profiles::ZERO_LOAD_MW).collect();
    if known.is_empty() {
        return Ok(HourlyProfile::zeros(n, Unit::KgCo2PerHour));
    }
    let intensity = |t: usize| -> f64 {
        if l[t] >= crate::profiles::ZERO_LOAD_MW {
            return c[t] / l[t];
        }
        let mut best = (usize::MAX, known[0]);
        for &k in &known {
            let d = (t as i64 - k as i64).unsigned_abs() as usize;
            let d = d.min(n - d);
            let earlier_tie = d == best.0 && (t + n - k) % n < (t + n - best.1) % n;
            if d < best.0 || earlier_tie {
                best = (d, k);
            }
        }
        c[best.1] / l[best.1]
    };
    let values = shifted_load
        .values()
        .iter()
        .enumerate()
        .map(|(t, &sl)| sl * intensity(t))
        .collect();
    HourlyProfile::new(values, Unit::KgCo2PerHour, "carbon")
}

/// Where and how a sweep runs.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Results, partial log and trajectories go here when set.
    pub out_dir: Option<PathBuf>,
    /// Worker threads; 0 uses all cores.
    pub workers: usize,
    /// Skip cells already present in the partial log.
    pub resume: bool,
    pub write_trajectories: bool,
}

pub const PARTIAL_LOG: &str = "results.partial.jsonl";

fn read_partial(path: &Path) -> Result<Vec<ScenarioResult>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        // a torn last line from an interrupted run is dropped and recomputed
        match serde_json::from_str::<ScenarioResult>(line) {
            Ok(r) => out.push(r),
            Err(e) => log::warn!("skipping unreadable line in {}: {e}", path.display()),
        }
    }
    Ok(out)
}

struct Group {
    site_pos: usize,
    nameplate_mw: f64,
    battery_mwh: f64,
    shift_h: i64,
    cells: Vec<Cell>,
}

enum Message {
    Result(Box<ScenarioResult>),
    Trajectory { name: String, body: Vec<u8> },
}

fn trajectory_name(g: &Group, site_index: usize) -> String {
    format!(
        "site{}_np{}_b{}_h{}.csv",
        site_index, g.nameplate_mw, g.battery_mwh, g.shift_h
    )
}

/// Runs every cell, writing results as they finish.
///
/// Cells that share a site, nameplate, battery size and shift share one
/// dispatch solve. The returned list is sorted by cell.
pub fn run_sweep(
    spec: &SweepSpec,
    inputs: &SweepInputs,
    run: &RunOptions,
) -> Result<Vec<ScenarioResult>> {
    let cells = plan_cells(spec, inputs)?;
    log::info!("sweep has {} cells", cells.len());
    let params = ChainParams::from_spec(spec, &inputs.costs);

    let mut done: BTreeMap<String, ScenarioResult> = BTreeMap::new();
    let partial_path = run.out_dir.as_ref().map(|d| d.join(PARTIAL_LOG));
    if let Some(dir) = &run.out_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        if run.write_trajectories {
            let tdir = dir.join("trajectories");
            std::fs::create_dir_all(&tdir).map_err(|e| Error::io(&tdir, e))?;
        }
    }
    if let (true, Some(p)) = (run.resume, &partial_path) {
        let wanted: BTreeSet<String> = cells.iter().map(Cell::id).collect();
        for r in read_partial(p)? {
            if wanted.contains(&r.cell_id) {
                done.insert(r.cell_id.clone(), r);
            }
        }
        log::info!("resuming: {} cells already done", done.len());
        // rewrite the log so a torn last line cannot swallow the next append
        let mut body = String::new();
        for r in done.values() {
            body.push_str(&serde_json::to_string(r).expect("result serializes"));
            body.push('\n');
        }
        let tmp = p.with_extension("jsonl.tmp");
        std::fs::write(&tmp, body).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, p).map_err(|e| Error::io(p, e))?;
    } else if let Some(p) = &partial_path {
        if p.exists() {
            std::fs::remove_file(p).map_err(|e| Error::io(p, e))?;
        }
    }

    let site_pos: BTreeMap<usize, usize> = inputs
        .sites
        .iter()
        .enumerate()
        .map(|(i, s)| (s.index, i))
        .collect();
    let mut groups: Vec<Group> = Vec::new();
    let mut group_of: BTreeMap<(usize, u64, u64, i64), usize> = BTreeMap::new();
    for cell in cells.iter().filter(|c| !done.contains_key(&c.id())) {
        let pos = site_pos[&cell.site_index];
        let key = (pos, cell.nameplate_mw.to_bits(), cell.battery_mwh.to_bits(), cell.shift_h);
        let i = *group_of.entry(key).or_insert_with(|| {
            groups.push(Group {
                site_pos: pos,
                nameplate_mw: cell.nameplate_mw,
                battery_mwh: cell.battery_mwh,
                shift_h: cell.shift_h,
                cells: Vec::new(),
            });
            groups.len() - 1
        });
        groups[i].cells.push(*cell);
    }

    let mut shifted: BTreeMap<i64, (HourlyProfile, HourlyProfile)> = BTreeMap::new();
    for &h in &spec.shifts_h {
        let load = shift_profile(&inputs.load, h)?;
        let carbon = if spec.shift_carbon {
            shift_profile(&inputs.carbon, h)?
        } else {
            recouple_carbon(&inputs.load, &inputs.carbon, &load)?
        };
        shifted.insert(h, (load, carbon));
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(run.workers)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;

    let (tx, rx) = mpsc::channel::<Message>();
    let write_traj = run.write_trajectories && run.out_dir.is_some();
    let fresh = std::thread::scope(|scope| -> Result<Vec<ScenarioResult>> {
        let writer = scope.spawn(|| -> Result<Vec<ScenarioResult>> {
            let mut file = match &partial_path {
                Some(p) => Some(
                    std::fs::OpenOptions::new()
                        .create(true)
                        .append(true)
                        .open(p)
                        .map_err(|e| Error::io(p, e))?,
                ),
                None => None,
            };
            let mut out = Vec::new();
            for msg in rx {
                match msg {
                    Message::Result(r) => {
                        if let (Some(f), Some(p)) = (file.as_mut(), &partial_path) {
                            let line = serde_json::to_string(&r).expect("result serializes");
                            writeln!(f, "{line}").and_then(|_| f.flush()).map_err(|e| Error::io(p, e))?;
                        }
                        out.push(*r);
                    }
                    Message::Trajectory { name, body } => {
                        if let Some(dir) = &run.out_dir {
                            let p = dir.join("trajectories").join(name);
                            std::fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
                        }
                    }
                }
            }
            Ok(out)
        });
        pool.install(|| {
            groups.par_iter().for_each_with(tx, |tx, g| {
                let site = &inputs.sites[g.site_pos];
                let (load, carbon) = &shifted[&g.shift_h];
                for msg in solve_group(g, site, load, carbon, spec, &params, write_traj) {
                    // the writer only stops early on an I/O error, reported below
                    let _ = tx.send(msg);
                }
            });
        });
        writer.join().expect("writer thread panicked")
    })?;

    for r in fresh {
        done.insert(r.cell_id.clone(), r);
    }
    let mut results: Vec<ScenarioResult> = done.into_values().collect();
    results.sort_by(|a, b| a.cell.sort_key(&b.cell));
    Ok(results)
}

fn solve_group(
    g: &Group,
    site: &SiteInput,
    load: &HourlyProfile,
    carbon: &HourlyProfile,
    spec: &SweepSpec,
    params: &ChainParams,
    write_traj: bool,
) -> Vec<Message> {
    let start = Instant::now();
    let attempt = || -> Result<(DispatchResult, HourlyProfile, crate::dispatch::DispatchInstance)> {
        let solar = available_capacity(&site.capacity_factor, g.nameplate_mw)?;
        let mut battery = BatterySpec::new(g.battery_mwh);
        battery.duration_h = params.battery_duration_h;
        let inst = build_instance(load.clone(), solar.clone(), carbon.clone(), battery)?;
        let r = solve_dispatch(&inst, &spec.solver)?;
        Ok((r, solar, inst))
    };
    let mut msgs = Vec::new();
    match attempt() {
        Err(e) => {
            let status = match e.class() {
                crate::error::ErrorClass::Solver => "solver-error",
                _ => "error",
            };
            let t = start.elapsed().as_secs_f64();
            for &cell in &g.cells {
                msgs.push(Message::Result(Box::new(ScenarioResult::failed(cell, status, e.to_string(), t))));
            }
        }
        Ok((dispatch, solar, inst)) => {
            let traj_name = write_traj.then(|| trajectory_name(g, site.index));
            if let Some(name) = &traj_name {
                let mut body = Vec::new();
                write_trajectory_csv(&dispatch.trajectories, inst.load(), inst.solar(), inst.carbon(), &mut body)
                    .expect("writing to memory");
                msgs.push(Message::Trajectory { name: name.clone(), body });
            }
            let annual_load = load.sum();
            for &cell in &g.cells {
                let r = match evaluate_chain(cell, &dispatch, &solar, annual_load, params) {
                    Ok(mut r) => {
                        r.trajectory_file = traj_name.as_ref().map(|n| format!("trajectories/{n}"));
                        r
                    }
                    Err(e) => ScenarioResult::failed(cell, "error", e.to_string(), dispatch.wall_time_s),
                };
                msgs.push(Message::Result(Box::new(r)));
            }
        }
    }
    msgs
}
