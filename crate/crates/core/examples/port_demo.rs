//! End-to-end run on synthetic inputs: rasters, siting, a sweep and export.
//!
//! ```text
//! cargo run --release -p microgrid-core --example port_demo -- [OUT_DIR] [HOURS]
//! ```
//!
//! Every intermediate file is written under `OUT_DIR` (default `demo_out`)
//! in the same formats the command line tool reads.

use std::path::{Path, PathBuf};

use microgrid_core::config;
use microgrid_core::dispatch::read_trajectory_csv;
use microgrid_core::profiles::HOURS_PER_YEAR;
use microgrid_core::scenario::{export_results, run_sweep, RunOptions, SweepSpec};
use microgrid_core::siting::{
    run_siting_config, write_ascii_grid, Distance, ExclusionRule, GridRaster, LayerSpec, ResourcePoint,
    SitingConfig,
};
use microgrid_core::synthetic::{port_region, solar_capacity_factor};
use microgrid_core::Result;

const ROWS: usize = 128;
const COLS: usize = 128;
const CELL_M: f64 = 100.0;
const BLOCK: usize = 32;

fn write_profile(p: &microgrid_core::profiles::HourlyProfile, path: &Path) -> Result<()> {
    let mut body = Vec::new();
    p.write_csv(&mut body).expect("write to memory");
    std::fs::write(path, body).map_err(|e| microgrid_core::Error::io(path, e))
}

/// Radiation falls off towards the west, a ridge runs down the middle and a
/// protected reserve sits in the north-east.
fn rasters() -> Result<Vec<(&'static str, GridRaster, Option<&'static str>, ExclusionRule)>> {
    let radiation = GridRaster::from_fn(ROWS, COLS, CELL_M, |_, c| 4.4 + 1.4 * c as f64 / COLS as f64)?;
    let slope = GridRaster::from_fn(ROWS, COLS, CELL_M, |r, c| {
        let ridge = (c as f64 - 64.0 - 10.0 * (r as f64 / 20.0).sin()).abs();
        if ridge < 4.0 { 12.0 } else { 2.0 }
    })?;
    let protected = GridRaster::from_fn(ROWS, COLS, CELL_M, |r, c| {
        if (8..14).contains(&r) && (110..118).contains(&c) { 1.0 } else { 0.0 }
    })?;
    Ok(vec![
        (
            "solar_radiation",
            radiation,
            Some("kWh/m2/day"),
            ExclusionRule::below("solar_radiation", 4.8, "kWh/m2/day"),
        ),
        ("slope", slope, Some("%"), ExclusionRule::above("slope", 5.0, "%")),
        (
            "protected_lands",
            protected,
            None,
            ExclusionRule::no_go("protected_lands").with_buffer(Distance::metres(500.0)),
        ),
    ])
}

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "demo_out".into()));
    let hours: usize = args
        .next()
        .map(|h| h.parse().expect("HOURS must be an integer"))
        .unwrap_or(HOURS_PER_YEAR);
    let inputs = out.join("inputs");
    std::fs::create_dir_all(&inputs).map_err(|e| microgrid_core::Error::io(&inputs, e))?;

    // siting
    let mut layers = Vec::new();
    let mut radiation = None;
    for (name, raster, unit, rule) in rasters()? {
        let file = format!("{name}.asc");
        write_ascii_grid(&raster, &inputs.join(&file))?;
        if name == "solar_radiation" {
            radiation = Some(raster);
        }
        layers.push(LayerSpec {
            path: file.into(),
            layer_unit: unit.map(str::to_string),
            rule,
        });
    }
    let radiation = radiation.expect("radiation layer");
    let points: Vec<ResourcePoint> = (0..ROWS / 16)
        .flat_map(|i| (0..COLS / 16).map(move |j| (i * 16 + 8, j * 16 + 8)))
        .map(|(row, col)| {
            let peak = 0.85 * radiation.get(row, col) / 5.8;
            Ok(ResourcePoint {
                row,
                col,
                profile: solar_capacity_factor(hours, peak)?,
            })
        })
        .collect::<Result<_>>()?;
    let points_path = inputs.join("resource_points.json");
    std::fs::write(&points_path, serde_json::to_string(&points).expect("points serialize"))
        .map_err(|e| microgrid_core::Error::io(&points_path, e))?;
    let siting = SitingConfig {
        block_cells: BLOCK,
        power_density_mw_per_km2: 10.0,
        layers,
        resource_points: Some("resource_points.json".into()),
    };
    let siting_path = inputs.join("siting.toml");
    std::fs::write(&siting_path, toml::to_string(&siting).expect("siting config serializes"))
        .map_err(|e| microgrid_core::Error::io(&siting_path, e))?;

    let cfg = SitingConfig::load(&siting_path)?;
    let sited = run_siting_config(&cfg, &inputs)?;
    write_ascii_grid(&sited.composite.to_raster(), &out.join("composite.asc"))?;
    let catalog_path = inputs.join("catalog.json");
    std::fs::write(&catalog_path, sited.catalog.to_json()?)
        .map_err(|e| microgrid_core::Error::io(&catalog_path, e))?;
    println!("siting: {} parcels, {:.0} MW total", sited.catalog.len(), sited.catalog.total_nameplate_mw());
    for p in &sited.catalog.parcels {
        println!(
            "  site {:>2} block ({},{}) {:>5} cells {:>6.1} MW",
            p.site_index, p.block_row, p.block_col, p.viable_cells, p.nameplate_mw
        );
    }

    // the smallest, a middle and the largest parcel
    let n = sited.catalog.len();
    let mut picks = vec![1, n.div_ceil(2), n];
    picks.dedup();

    let region = port_region(hours)?;
    write_profile(&region.load, &inputs.join("load.csv"))?;
    write_profile(&region.carbon, &inputs.join("carbon.csv"))?;
    let sweep_text = format!(
        "horizon = {hours}\nload = \"load.csv\"\ncarbon = \"carbon.csv\"\n\
         battery_mwh = [0.0, 50.0, 150.0]\nchemistries = [\"LFP\", \"NMC811\"]\n\
         solar_cost_usd_per_wdc = 1.2\nwrite_trajectories = true\n\
         [sites]\ncatalog = \"catalog.json\"\nindices = {picks:?}\n"
    );
    let sweep_path = inputs.join("sweep.toml");
    std::fs::write(&sweep_path, &sweep_text).map_err(|e| microgrid_core::Error::io(&sweep_path, e))?;

    let spec: SweepSpec = config::load(&sweep_path)?;
    let sweep_inputs = spec.resolve_inputs(&inputs)?;
    let run = RunOptions {
        out_dir: Some(out.clone()),
        workers: 0,
        resume: false,
        write_trajectories: true,
    };
    let results = run_sweep(&spec, &sweep_inputs, &run)?;
    let written = export_results(&results, &out)?;

    println!("\nsite  MW     MWh   chem    J %    TEC $/MWh  $/kg");
    for r in &results {
        println!(
            "{:>4} {:>6.1} {:>5} {:>7} {:>6.2} {:>10.2} {:>6}",
            r.cell.site_index,
            r.cell.nameplate_mw,
            r.cell.battery_mwh,
            r.cell.chemistry.to_string(),
            r.objective_pct.unwrap_or(f64::NAN),
            r.tec_usd_per_mwh.unwrap_or(f64::NAN),
            r.usd_per_kg.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into()),
        );
    }
    if let Some(file) = results.iter().find_map(|r| r.trajectory_file.as_ref()) {
        let traj = read_trajectory_csv(&out.join(file))?;
        println!("\nre-read {file}: {} hours", traj.trajectories.len());
    }
    println!("{} files written under {}", written.len(), out.display());
    Ok(())
}

