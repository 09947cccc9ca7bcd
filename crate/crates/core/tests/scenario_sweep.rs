use std::path::Path;

use microgrid_core::config;
use microgrid_core::costs::{
    battery_capital_cost, configure_pack, cost_of_charging, lcopr, lcos, solar_capital_cost,
    total_electricity_cost, ChemistryParams, CostStackParams,
};
use microgrid_core::dispatch::{
    build_instance, check_invariants, read_trajectory_csv, solve_dispatch, BatterySpec,
};
use microgrid_core::profiles::{available_capacity, shift_profile};
use microgrid_core::scenario::{
    export_results, results_csv, run_sweep, RunOptions, ScenarioResult, SweepInputs, SweepSpec,
    PARTIAL_LOG,
};
use microgrid_core::stakeholders::{utility_tco, FleetParams, UtilityInputs};
use microgrid_core::synthetic::{port_region, site_capacity_factors};

const HORIZON: usize = 24 * 7;

/// Writes a week of synthetic inputs under `dir` and returns the parsed spec.
fn fixture(dir: &Path, axes: &str) -> (SweepSpec, SweepInputs) {
    let region = port_region(HORIZON).unwrap();
    let save = |name: &str, p: &microgrid_core::profiles::HourlyProfile| {
        let mut f = std::fs::File::create(dir.join(name)).unwrap();
        p.write_csv(&mut f).unwrap();
    };
    save("load.csv", &region.load);
    save("carbon.csv", &region.carbon);
    for (i, cf) in site_capacity_factors(HORIZON, 2).unwrap().iter().enumerate() {
        save(&format!("site{}.csv", i + 1), cf);
    }
    let text = format!(
        "horizon = {HORIZON}\nload = \"load.csv\"\ncarbon = \"carbon.csv\"\n\
         solar_cost_usd_per_wdc = 0.05\n{axes}\n"
    );
    let path = dir.join("sweep.toml");
    std::fs::write(&path, text).unwrap();
    let mut spec: SweepSpec = config::load(&path).unwrap();
    spec.fleet.full = Some(FleetParams::electric(1825.0, 1825.0 * 84_932.0));
    let inputs = spec.resolve_inputs(dir).unwrap();
    (spec, inputs)
}

const ONE_SITE: &str = "[sites]\nprofiles = [\"site1.csv\"]";

#[test]
fn single_cell_equals_direct_chain() {
    let dir = tempfile::tempdir().unwrap();
    let axes = format!("nameplates_mw = [40.0]\nbattery_mwh = [40.0]\nchemistries = [\"NMC811\"]\n{ONE_SITE}");
    let (spec, inputs) = fixture(dir.path(), &axes);
    let results = run_sweep(&spec, &inputs, &RunOptions::default()).unwrap();
    assert_eq!(results.len(), 1);
    let r = &results[0];
    assert_eq!(r.status, "proven-optimal");

    let solar = available_capacity(&inputs.sites[0].capacity_factor, 40.0).unwrap();
    let inst = build_instance(
        inputs.load.clone(),
        solar.clone(),
        inputs.carbon.clone(),
        BatterySpec::new(40.0),
    )
    .unwrap();
    let d = solve_dispatch(&inst, &spec.solver).unwrap();
    let u = d.utilization.unwrap();
    assert_eq!(r.objective_pct, Some(d.objective_pct));
    assert_eq!(r.co2_removed_kg, Some(d.c_base_kg - d.c_renew_kg));

    let occ_pv = solar_capital_cost(40.0, Some(0.05)).unwrap();
    let lp = lcopr(occ_pv, 30.0, &solar).unwrap();
    let chem = ChemistryParams::defaults(microgrid_core::costs::Chemistry::Nmc811);
    let pack = configure_pack(40.0, &chem, 4.0).unwrap();
    let occ_b = battery_capital_cost(&pack, &chem, &CostStackParams::default()).unwrap().total_usd;
    let ls = lcos(occ_b, chem.cycles_eol, 40.0).unwrap();
    let coc = cost_of_charging(u.f_chg_solar, u.f_chg_grid, lp, 160.0).unwrap().usd_per_mwh;
    let tec = total_electricity_cost(u.f_solar, u.f_batt_dchg, u.f_grid, lp, ls, coc, 160.0).unwrap();
    let close = |a: Option<f64>, b: f64| (a.unwrap() - b).abs() <= 1e-9 * b.abs().max(1.0);
    assert!(close(r.lcopr_usd_per_mwh, lp));
    assert!(close(r.lcos_usd_per_mwh, ls));
    assert!(close(r.tec_usd_per_mwh, tec));
    let tco = utility_tco(&UtilityInputs {
        occ_pv,
        occ_batt: occ_b,
        tec,
        annual_load_mwh: inputs.load.sum(),
        solar_life_years: 30.0,
        battery_cycles_eol: chem.cycles_eol,
        cycles_per_year: d.cycles.unwrap(),
    })
    .unwrap();
    assert!(close(r.utility_tco_usd, tco.tco_usd));
    assert!(close(r.usd_per_kg, tco.tco_usd / (d.c_base_kg - d.c_renew_kg)));
    assert!(r.fleet_usd_per_mile.unwrap() > 0.0);
}

#[test]
fn cross_product_has_one_record_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let axes = format!(
        "nameplates_mw = [30.0]\nbattery_mwh = [0.0, 20.0, 60.0]\nchemistries = [\"LFP\", \"NCA\"]\n{ONE_SITE}"
    );
    let (spec, inputs) = fixture(dir.path(), &axes);
    let results = run_sweep(&spec, &inputs, &RunOptions::default()).unwrap();
    assert_eq!(results.len(), 6);
    let out = dir.path().join("out");
    export_results(&results, &out).unwrap();
    let csv = std::fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
    assert!(export_results(&[], &out).is_err());
    // chemistry does not change the dispatch
    for pair in results.chunks(2) {
        assert_eq!(pair[0].objective_pct, pair[1].objective_pct);
    }
}

fn grid_axes() -> String {
    "nameplates_mw = [10.0, 30.0, 60.0]\nbattery_mwh = [0.0, 30.0, 90.0]\nshifts_h = [0, 3]\n\
     [sites]\nprofiles = [\"site1.csv\", \"site2.csv\"]"
        .to_string()
}

#[test]
fn csv_does_not_depend_on_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let (spec, inputs) = fixture(dir.path(), &grid_axes());
    let mut csvs = Vec::new();
    for workers in [1, 4, 1] {
        let run = RunOptions { workers, ..RunOptions::default() };
        csvs.push(results_csv(&run_sweep(&spec, &inputs, &run).unwrap()));
    }
    assert_eq!(csvs[0].lines().count(), 2 * 3 * 3 * 2 + 1);
    assert_eq!(csvs[0], csvs[1]);
    assert_eq!(csvs[0], csvs[2]);
}

#[test]
fn reduction_grows_along_both_axes() {
    let dir = tempfile::tempdir().unwrap();
    let (spec, inputs) = fixture(dir.path(), &grid_axes());
    let results = run_sweep(&spec, &inputs, &RunOptions::default()).unwrap();
    let j = |site: usize, np: f64, b: f64, h: i64| -> f64 {
        results
            .iter()
            .find(|r| {
                let c = &r.cell;
                (c.site_index, c.nameplate_mw, c.battery_mwh, c.shift_h) == (site, np, b, h)
            })
            .unwrap()
            .objective_pct
            .unwrap()
    };
    for site in [1, 2] {
        for h in [0, 3] {
            for np in [10.0, 30.0, 60.0] {
                assert!(j(site, np, 0.0, h) <= j(site, np, 30.0, h) + 1e-6);
                assert!(j(site, np, 30.0, h) <= j(site, np, 90.0, h) + 1e-6);
            }
            for b in [0.0, 30.0, 90.0] {
                assert!(j(site, 10.0, b, h) <= j(site, 30.0, b, h) + 1e-6);
                assert!(j(site, 30.0, b, h) <= j(site, 60.0, b, h) + 1e-6);
            }
        }
    }
}

fn partial_lines(dir: &Path) -> Vec<String> {
    std::fs::read_to_string(dir.join(PARTIAL_LOG))
        .unwrap()
        .lines()
        .map(str::to_string)
        .collect()
}

#[test]
fn resume_skips_logged_cells() {
    let dir = tempfile::tempdir().unwrap();
    let (spec, inputs) = fixture(dir.path(), &grid_axes());
    let out = dir.path().join("out");
    let run = RunOptions { out_dir: Some(out.clone()), workers: 2, ..RunOptions::default() };
    let first = run_sweep(&spec, &inputs, &run).unwrap();
    let lines = partial_lines(&out);
    assert_eq!(lines.len(), first.len());

    // keep five finished cells and a torn line, as after a crash
    let mut kept = lines[..5].join("\n");
    kept.push_str("\n{\"cell_id\": \"s1|np");
    std::fs::write(out.join(PARTIAL_LOG), kept).unwrap();
    let kept_ids: Vec<ScenarioResult> =
        lines[..5].iter().map(|l| serde_json::from_str(l).unwrap()).collect();

    let resumed = run_sweep(&spec, &inputs, &RunOptions { resume: true, ..run.clone() }).unwrap();
    assert_eq!(results_csv(&resumed), results_csv(&first));
    // resumed cells come straight from the log, wall time included
    for k in &kept_ids {
        let r = resumed.iter().find(|r| r.cell_id == k.cell_id).unwrap();
        assert_eq!(r.wall_time_s, k.wall_time_s);
    }
    let after: Vec<ScenarioResult> = partial_lines(&out)
        .iter()
        .filter_map(|l| serde_json::from_str(l).ok())
        .collect();
    assert_eq!(after.len(), first.len());
}

#[test]
fn written_trajectories_revalidate() {
    let dir = tempfile::tempdir().unwrap();
    let axes = "nameplates_mw = [20.0, 50.0]\nbattery_mwh = [0.0, 40.0]\nshifts_h = [0, -5]\n\
                shift_carbon = false\n[sites]\nprofiles = [\"site2.csv\"]";
    let (spec, inputs) = fixture(dir.path(), axes);
    let out = dir.path().join("out");
    let run = RunOptions { out_dir: Some(out.clone()), write_trajectories: true, ..RunOptions::default() };
    let results = run_sweep(&spec, &inputs, &run).unwrap();
    assert_eq!(results.len(), 8);
    for r in &results {
        let file = read_trajectory_csv(&out.join(r.trajectory_file.as_ref().unwrap())).unwrap();
        let shifted = shift_profile(&inputs.load, r.cell.shift_h).unwrap();
        assert_eq!(file.load.values(), shifted.values());
        let report = check_invariants(
            &file.trajectories,
            &file.load,
            &file.solar,
            &BatterySpec::new(r.cell.battery_mwh),
        )
        .unwrap();
        assert!(report.holds(), "{}: {report:?}", r.cell_id);
        let f = r.f_grid.unwrap() + r.f_solar.unwrap() + r.f_batt_dchg.unwrap();
        assert!((f - 1.0).abs() < 1e-9);
    }
}
