//! Result tables and per-figure plot data.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::sweep::ScenarioResult;
use crate::error::{Error, Result};

const CSV_COLUMNS: [&str; 31] = [
    "site_index",
    "nameplate_mw",
    "battery_mwh",
    "chemistry",
    "shift_h",
    "status",
    "gap",
    "error",
    "objective_pct",
    "c_base_kg",
    "c_renew_kg",
    "co2_removed_kg",
    "f_grid",
    "f_solar",
    "f_batt_dchg",
    "f_chg_grid",
    "f_chg_solar",
    "cycles_per_year",
    "occ_pv_usd",
    "occ_batt_usd",
    "lcopr_usd_per_mwh",
    "lcos_usd_per_mwh",
    "coc_usd_per_mwh",
    "tec_usd_per_mwh",
    "utility_tco_usd",
    "years_op",
    "usd_per_kg",
    "fleet_usd_per_mile",
    "partial_fleet_usd_per_mile",
    "trajectory_file",
    "cell_id",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// The results table; wall time is left out so reruns compare byte for byte.
pub fn results_csv(results: &[ScenarioResult]) -> String {
    let mut out = CSV_COLUMNS.join(",");
    out.push('\n');
    for r in results {
        let c = &r.cell;
        let fields = [
            c.site_index.to_string(),
            c.nameplate_mw.to_string(),
            c.battery_mwh.to_string(),
            c.chemistry.to_string(),
            c.shift_h.to_string(),
            r.status.clone(),
            opt(r.gap),
            quote(r.error.as_deref().unwrap_or("")),
            opt(r.objective_pct),
            opt(r.c_base_kg),
            opt(r.c_renew_kg),
            opt(r.co2_removed_kg),
            opt(r.f_grid),
            opt(r.f_solar),
            opt(r.f_batt_dchg),
            opt(r.f_chg_grid),
            opt(r.f_chg_solar),
            opt(r.cycles_per_year),
            opt(r.occ_pv_usd),
            opt(r.occ_batt_usd),
            opt(r.lcopr_usd_per_mwh),
            opt(r.lcos_usd_per_mwh),
            opt(r.coc_usd_per_mwh),
            opt(r.tec_usd_per_mwh),
            opt(r.utility_tco_usd),
            opt(r.years_op),
            opt(r.usd_per_kg),
            opt(r.fleet_usd_per_mile),
            opt(r.partial_fleet_usd_per_mile),
            quote(r.trajectory_file.as_deref().unwrap_or("")),
            quote(&r.cell_id),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

fn write(path: &Path, body: &str) -> Result<PathBuf> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, body).map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

pub fn read_results_json(path: &Path) -> Result<Vec<ScenarioResult>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
}

/// Writes `results.csv`, `results.json` and the plot data under `dir`.
pub fn export_results(results: &[ScenarioResult], dir: &Path) -> Result<Vec<PathBuf>> {
    if results.is_empty() {
        return Err(Error::invalid("no results to export"));
    }
    let mut written = vec![write(&dir.join("results.csv"), &results_csv(results))?];
    let json = serde_json::to_string_pretty(results).expect("results serialize");
    written.push(write(&dir.join("results.json"), &json)?);
    written.extend(write_plot_data(results, &dir.join("plots"))?);
    Ok(written)
}

type Metric = (&'static str, fn(&ScenarioResult) -> Option<f64>);

const CONTOUR_METRICS: [Metric; 4] = [
    ("reduction_pct", |r| r.objective_pct),
    ("tec_usd_per_mwh", |r| r.tec_usd_per_mwh),
    ("usd_per_kg", |r| r.usd_per_kg),
    ("fleet_usd_per_mile", |r| r.fleet_usd_per_mile),
];

fn table(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

/// Per-figure tables: metric versus site and nameplate × battery grids.
pub fn write_plot_data(results: &[ScenarioResult], dir: &Path) -> Result<Vec<PathBuf>> {
    if results.is_empty() {
        return Err(Error::invalid("no results to export"));
    }
    let mut written = Vec::new();
    let coords = |r: &ScenarioResult| {
        vec![
            r.cell.site_index.to_string(),
            r.cell.nameplate_mw.to_string(),
            r.cell.battery_mwh.to_string(),
            r.cell.chemistry.to_string(),
            r.cell.shift_h.to_string(),
        ]
    };
    let head = ["site_index", "nameplate_mw", "battery_mwh", "chemistry", "shift_h"];

    // reduction does not depend on chemistry, keep one row per dispatch
    let mut seen = BTreeSet::new();
    let reduction = results
        .iter()
        .filter(|r| {
            seen.insert((
                r.cell.site_index,
                r.cell.nameplate_mw.to_bits(),
                r.cell.battery_mwh.to_bits(),
                r.cell.shift_h,
            ))
        })
        .map(|r| {
            vec![
                r.cell.site_index.to_string(),
                r.cell.nameplate_mw.to_string(),
                r.cell.battery_mwh.to_string(),
                r.cell.shift_h.to_string(),
                opt(r.objective_pct),
            ]
        });
    written.push(write(
        &dir.join("reduction_vs_site.csv"),
        &table(&["site_index", "nameplate_mw", "battery_mwh", "shift_h", "reduction_pct"], reduction),
    )?);

    let with = |extra: &[Metric]| {
        let mut h: Vec<&str> = head.to_vec();
        h.extend(extra.iter().map(|m| m.0));
        let rows = results.iter().map(|r| {
            let mut row = coords(r);
            row.extend(extra.iter().map(|m| opt((m.1)(r))));
            row
        });
        table(&h, rows)
    };
    written.push(write(
        &dir.join("tec_vs_site.csv"),
        &with(&[
            ("tec_usd_per_mwh", |r| r.tec_usd_per_mwh),
            ("lcopr_usd_per_mwh", |r| r.lcopr_usd_per_mwh),
            ("lcos_usd_per_mwh", |r| r.lcos_usd_per_mwh),
        ]),
    )?);
    written.push(write(
        &dir.join("utility_metric.csv"),
        &with(&[("usd_per_kg", |r| r.usd_per_kg), ("years_op", |r| r.years_op)]),
    )?);
    written.push(write(
        &dir.join("cost_per_mile.csv"),
        &with(&[
            ("fleet_usd_per_mile", |r| r.fleet_usd_per_mile),
            ("partial_fleet_usd_per_mile", |r| r.partial_fleet_usd_per_mile),
        ]),
    )?);

    // one grid per site × chemistry × shift
    let mut grids: BTreeMap<(usize, String, i64), Vec<&ScenarioResult>> = BTreeMap::new();
    for r in results {
        grids
            .entry((r.cell.site_index, r.cell.chemistry.to_string(), r.cell.shift_h))
            .or_default()
            .push(r);
    }
    for ((site, chem, shift), members) in grids {
        let mut nameplates: Vec<f64> = members.iter().map(|r| r.cell.nameplate_mw).collect();
        let mut batteries: Vec<f64> = members.iter().map(|r| r.cell.battery_mwh).collect();
        nameplates.sort_by(f64::total_cmp);
        nameplates.dedup();
        batteries.sort_by(f64::total_cmp);
        batteries.dedup();
        for (name, metric) in CONTOUR_METRICS {
            let mut body = String::from("nameplate_mw\\battery_mwh");
            for b in &batteries {
                let _ = write!(body, ",{b}");
            }
            body.push('\n');
            for np in &nameplates {
                let _ = write!(body, "{np}");
                for b in &batteries {
                    let v = members
                        .iter()
                        .find(|r| r.cell.nameplate_mw == *np && r.cell.battery_mwh == *b)
                        .and_then(|r| metric(r));
                    let _ = write!(body, ",{}", opt(v));
                }
                body.push('\n');
            }
            let file = format!("site{site}_{chem}_h{shift}_{name}.csv");
            written.push(write(&dir.join("contours").join(file), &body)?);
        }
    }
    Ok(written)
}
