//! Command-line front end for siting, dispatch, costs and scenario sweeps.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use microgrid_core::costs::{
    battery_capital_cost, configure_pack, lcos, Chemistry, CostConfig, DEFAULT_GEP_USD_PER_MWH,
};
use microgrid_core::dispatch::{build_instance, solve_dispatch, BatterySpec, SolveOptions, SolverBackend};
use microgrid_core::profiles::{available_capacity, read_profile, shift_profile, Unit};
use microgrid_core::scenario::{
    capacity_gap, evaluate_chain, export_results, read_results_json, recouple_carbon, run_sweep,
    write_plot_data, Cell, ChainParams, GapInput, RunOptions, SweepSpec,
};
use microgrid_core::siting::{run_siting_config, write_ascii_grid, SitingConfig};
use microgrid_core::stakeholders::{FULL_FLEET_TRUCKS, PARTIAL_FLEET_TRUCKS};
use microgrid_core::{config, Error, ErrorClass, Result};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "microgrid", version, about = "Solar + battery microgrid analysis for electrified freight")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Turn exclusion rasters into a site catalog.
    Site {
        /// Siting configuration (TOML or JSON) listing layers and rules.
        config: PathBuf,
        #[arg(long, default_value = "siting-out")]
        out: PathBuf,
    },
    /// Solve one dispatch instance.
    Dispatch(DispatchArgs),
    /// Run a sweep described by a spec file.
    Sweep {
        spec: PathBuf,
        /// Overrides the spec's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; 0 uses every core.
        #[arg(long)]
        workers: Option<usize>,
        /// Skip cells already logged by an earlier run.
        #[arg(long)]
        resume: bool,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Battery pack configuration and capital cost stack.
    Costs {
        #[arg(long)]
        battery_mwh: f64,
        #[arg(long, default_value = "LFP")]
        chemistry: Chemistry,
        #[arg(long, default_value_t = 4.0)]
        duration_h: f64,
        /// Optional chemistry and stack overrides.
        #[arg(long)]
        costs: Option<PathBuf>,
    },
    /// Compare peak demand with local capacity limits.
    Gap {
        /// File with `peaks` and `limits` tables keyed by location.
        input: PathBuf,
    },
    /// Regenerate plot data from a results.json.
    Report {
        results: PathBuf,
        #[arg(long, default_value = "plots")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SolverArgs {
    /// Seconds before the search stops and reports its gap.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Relative optimality gap.
    #[arg(long)]
    gap_tol: Option<f64>,
    /// `bnb` or `highs`.
    #[arg(long)]
    backend: Option<SolverBackend>,
}

impl SolverArgs {
    fn apply(&self, mut opts: SolveOptions) -> SolveOptions {
        if let Some(t) = self.time_limit {
            opts.time_limit_s = t;
        }
        if let Some(g) = self.gap_tol {
            opts.tolerance = g;
        }
        if let Some(b) = self.backend {
            opts.backend = b;
        }
        opts
    }
}

#[derive(Args)]
struct DispatchArgs {
    /// Excess load, MW.
    #[arg(long)]
    profile: PathBuf,
    /// Solar in MW, or a capacity factor profile when --nameplate-mw is set.
    #[arg(long)]
    solar: PathBuf,
    /// Excess emissions of the baseline, kg/h.
    #[arg(long)]
    carbon: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    battery_mwh: f64,
    #[arg(long)]
    nameplate_mw: Option<f64>,
    #[arg(long, default_value_t = 8760)]
    horizon: usize,
    /// Circular delay applied to the load, hours.
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    shift_hours: i64,
    /// Keep carbon tied to the clock hour instead of shifting it with the load.
    #[arg(long)]
    fixed_carbon: bool,
    /// With --solar-cost and --nameplate-mw, also price the result.
    #[arg(long, default_value = "LFP")]
    chemistry: Chemistry,
    #[arg(long)]
    solar_cost: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_GEP_USD_PER_MWH)]
    gep: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("output serializes"));
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn base_dir(file: &Path) -> PathBuf {
    file.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn site(config_path: &Path, out: &Path) -> Result<ExitCode> {
    let cfg = SitingConfig::load(config_path)?;
    let result = run_siting_config(&cfg, &base_dir(config_path))?;
    create_dir(out)?;
    write_ascii_grid(&result.composite.to_raster(), &out.join("composite.asc"))?;
    let path = out.join("catalog.json");
    std::fs::write(&path, result.catalog.to_json()?).map_err(|e| Error::io(&path, e))?;
    println!(
        "{} sites, {:.2} MW total nameplate, catalog at {}",
        result.catalog.len(),
        result.catalog.total_nameplate_mw(),
        path.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn dispatch(args: &DispatchArgs) -> Result<ExitCode> {
    let load = read_profile(&args.profile, Some(Unit::Megawatt), args.horizon)?;
    let carbon = read_profile(&args.carbon, Some(Unit::KgCo2PerHour), args.horizon)?;
    let raw_solar = read_profile(&args.solar, None, args.horizon)?;
    let solar = match (raw_solar.unit(), args.nameplate_mw) {
        (Unit::CapacityFactor, Some(np)) => available_capacity(&raw_solar, np)?,
        (Unit::CapacityFactor, None) => {
            return Err(Error::invalid("capacity factor solar needs --nameplate-mw"))
        }
        (Unit::Megawatt, _) => raw_solar,
        (u, _) => {
            return Err(Error::UnitMismatch {
                expected: "MW or cf".into(),
                found: u.to_string(),
            })
        }
    };
    let shifted = shift_profile(&load, args.shift_hours)?;
    let carbon = if args.fixed_carbon {
        recouple_carbon(&load, &carbon, &shifted)?
    } else {
        shift_profile(&carbon, args.shift_hours)?
    };
    let inst = build_instance(shifted, solar.clone(), carbon, BatterySpec::new(args.battery_mwh))?;
    let opts = args.solver.apply(SolveOptions::default());
    let result = solve_dispatch(&inst, &opts)?;

    if let Some(dir) = &args.out {
        create_dir(dir)?;
        let path = dir.join("trajectory.csv");
        let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        result
            .write_csv(&inst, std::io::BufWriter::new(file))
            .map_err(|e| Error::io(&path, e))?;
        let path = dir.join("summary.json");
        std::fs::write(&path, result.summary_json()).map_err(|e| Error::io(&path, e))?;
    }

    match (args.nameplate_mw, args.solar_cost) {
        (Some(np), Some(cost)) => {
            let params = ChainParams {
                costs: CostConfig::default(),
                solar_cost_usd_per_wdc: Some(cost),
                gep: args.gep,
                battery_duration_h: inst.battery().duration_h,
                fleet: None,
                partial_fleet: None,
                partial_load_scale: PARTIAL_FLEET_TRUCKS / FULL_FLEET_TRUCKS,
            };
            let cell = Cell {
                site_index: 0,
                nameplate_mw: np,
                battery_mwh: args.battery_mwh,
                chemistry: args.chemistry,
                shift_h: args.shift_hours,
            };
            let chained = evaluate_chain(cell, &result, &solar, inst.total_load_mwh(), &params)?;
            print_json(&chained);
        }
        _ => print_json(&result.summary()),
    }
    Ok(ExitCode::SUCCESS)
}

fn sweep(
    spec_path: &Path,
    out: Option<PathBuf>,
    workers: Option<usize>,
    resume: bool,
    solver: &SolverArgs,
) -> Result<ExitCode> {
    let mut spec = SweepSpec::load(spec_path)?;
    spec.solver = solver.apply(spec.solver);
    let base = base_dir(spec_path);
    let inputs = spec.resolve_inputs(&base)?;
    let out_dir = out
        .or_else(|| spec.output_dir.as_ref().map(|d| base.join(d)))
        .unwrap_or_else(|| PathBuf::from("sweep-out"));
    let run = RunOptions {
        out_dir: Some(out_dir.clone()),
        workers: workers.or(spec.workers).unwrap_or(0),
        resume,
        write_trajectories: spec.write_trajectories,
    };
    let results = run_sweep(&spec, &inputs, &run)?;
    export_results(&results, &out_dir)?;
    let failed = results.iter().filter(|r| r.error.is_some()).count();
    let solver_failed = results.iter().filter(|r| r.status == "solver-error").count();
    println!(
        "{} cells, {} failed, results in {}",
        results.len(),
        failed,
        out_dir.display()
    );
    Ok(if solver_failed > 0 {
        ExitCode::from(2)
    } else if failed > 0 {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

#[derive(Serialize)]
struct CostsReport {
    pack: microgrid_core::costs::BatteryPackSpec,
    cost: microgrid_core::costs::BatteryCost,
    lcos_usd_per_mwh: f64,
}

fn costs(battery_mwh: f64, chemistry: Chemistry, duration_h: f64, overrides: Option<&Path>) -> Result<ExitCode> {
    let cfg: CostConfig = match overrides {
        Some(p) => config::load(p)?,
        None => CostConfig::default(),
    };
    let chem = cfg.chemistry(chemistry);
    let pack = configure_pack(battery_mwh, &chem, duration_h)?;
    let cost = battery_capital_cost(&pack, &chem, &cfg.stack())?;
    let lcos_usd_per_mwh = lcos(cost.total_usd, chem.cycles_eol, battery_mwh)?;
    print_json(&CostsReport {
        pack,
        cost,
        lcos_usd_per_mwh,
    });
    Ok(ExitCode::SUCCESS)
}

fn gap(input: &Path) -> Result<ExitCode> {
    let gi: GapInput = config::load(input)?;
    let report = capacity_gap(&gi.peaks, &gi.limits)?;
    print_json(&report);
    Ok(ExitCode::SUCCESS)
}

fn report(results: &Path, out: &Path) -> Result<ExitCode> {
    let rows = read_results_json(results)?;
    let written = write_plot_data(&rows, out)?;
    println!("{} plot files in {}", written.len(), out.display());
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Site { config, out } => site(&config, &out),
        Command::Dispatch(args) => dispatch(&args),
        Command::Sweep {
            spec,
            out,
            workers,
            resume,
            solver,
        } => sweep(&spec, out, workers, resume, &solver),
        Command::Costs {
            battery_mwh,
            chemistry,
            duration_h,
            costs: overrides,
        } => costs(battery_mwh, chemistry, duration_h, overrides.as_deref()),
        Command::Gap { input } => gap(&input),
        Command::Report { results, out } => report(&results, &out),
    }
}

fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Validation => 1,
        ErrorClass::Solver => 2,
        ErrorClass::Io => 3,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors are validation errors, not solver failures
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.class()))
        }
    }
}
