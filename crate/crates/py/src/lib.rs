//! Python bindings for the microgrid toolkit.
//!
//! Structured results cross the boundary as plain dicts and lists built from
//! the same JSON the command line writes, so both views agree field for field.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use microgrid_core::costs::{self, Chemistry, CostConfig};
use microgrid_core::dispatch::{self, BatterySpec, SolveOptions, SolverBackend};
use microgrid_core::profiles::{HourlyProfile, Unit};
use microgrid_core::scenario::{capacity_gap as gap, export_results, run_sweep, RunOptions, SweepSpec};
use microgrid_core::siting::{run_siting_config, SitingConfig};
use microgrid_core::{Error, ErrorClass};

fn py_err(e: Error) -> PyErr {
    match e.class() {
        ErrorClass::Validation => PyValueError::new_err(e.to_string()),
        ErrorClass::Solver => PyRuntimeError::new_err(e.to_string()),
        ErrorClass::Io => PyOSError::new_err(e.to_string()),
    }
}

fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn profile(values: Vec<f64>, unit: Unit, label: &str) -> PyResult<HourlyProfile> {
    HourlyProfile::new(values, unit, label).map_err(py_err)
}

fn chemistry(name: &str) -> PyResult<Chemistry> {
    name.parse().map_err(py_err)
}

/// Battery parameters for a dispatch run.
#[pyclass(name = "Battery", frozen, from_py_object)]
#[derive(Clone)]
struct PyBattery {
    inner: BatterySpec,
}

#[pymethods]
impl PyBattery {
    #[new]
    #[pyo3(signature = (rated_energy_mwh, duration_h=4.0, roundtrip_efficiency=0.85, soc_min=0.1, soc_max=0.9, initial_soc=0.5))]
    fn new(
        rated_energy_mwh: f64,
        duration_h: f64,
        roundtrip_efficiency: f64,
        soc_min: f64,
        soc_max: f64,
        initial_soc: f64,
    ) -> PyResult<Self> {
        let inner = BatterySpec {
            rated_energy_mwh,
            duration_h,
            roundtrip_efficiency,
            soc_min_frac: soc_min,
            soc_max_frac: soc_max,
            initial_soc_frac: initial_soc,
        };
        inner.validate().map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn rated_energy_mwh(&self) -> f64 {
        self.inner.rated_energy_mwh
    }

    #[getter]
    fn max_power_mw(&self) -> f64 {
        self.inner.max_power_mw()
    }

    #[getter]
    fn usable_energy_mwh(&self) -> f64 {
        self.inner.usable_energy_mwh()
    }

    fn __repr__(&self) -> String {
        let b = &self.inner;
        format!(
            "Battery(rated_energy_mwh={}, duration_h={}, roundtrip_efficiency={})",
            b.rated_energy_mwh, b.duration_h, b.roundtrip_efficiency
        )
    }
}

/// Outcome of one dispatch solve.
#[pyclass(name = "DispatchResult", frozen)]
struct PyDispatchResult {
    inner: dispatch::DispatchResult,
}

#[pymethods]
impl PyDispatchResult {
    /// Percentage reduction of excess emissions.
    #[getter]
    fn objective_pct(&self) -> f64 {
        self.inner.objective_pct
    }

    #[getter]
    fn c_base_kg(&self) -> f64 {
        self.inner.c_base_kg
    }

    #[getter]
    fn c_renew_kg(&self) -> f64 {
        self.inner.c_renew_kg
    }

    #[getter]
    fn cycles(&self) -> Option<f64> {
        self.inner.cycles
    }

    #[getter]
    fn status(&self) -> String {
        self.inner.status.to_string()
    }

    #[getter]
    fn gap(&self) -> Option<f64> {
        self.inner.status.relative_gap()
    }

    #[getter]
    fn total_grid_mwh(&self) -> f64 {
        self.inner.trajectories.total_grid_mwh()
    }

    /// Utilization fractions, or None when no hour carries load.
    fn utilization<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.utilization)
    }

    /// Hourly flows keyed by name.
    fn trajectories<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.trajectories)
    }

    fn summary<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.summary())
    }

    fn __repr__(&self) -> String {
        format!(
            "DispatchResult(objective_pct={:.4}, status={})",
            self.inner.objective_pct, self.inner.status
        )
    }
}

/// Solves the storage dispatch for hourly load (MW), available solar (MW)
/// and excess carbon (kg/h).
#[pyfunction]
#[pyo3(signature = (load, solar, carbon, battery=None, time_limit_s=300.0, gap_tol=1e-4, backend="bnb"))]
fn solve_dispatch(
    py: Python<'_>,
    load: Vec<f64>,
    solar: Vec<f64>,
    carbon: Vec<f64>,
    battery: Option<PyBattery>,
    time_limit_s: f64,
    gap_tol: f64,
    backend: &str,
) -> PyResult<PyDispatchResult> {
    let battery = battery.map(|b| b.inner).unwrap_or_else(BatterySpec::none);
    let instance = dispatch::build_instance(
        profile(load, Unit::Megawatt, "load")?,
        profile(solar, Unit::Megawatt, "solar")?,
        profile(carbon, Unit::KgCo2PerHour, "carbon")?,
        battery,
    )
    .map_err(py_err)?;
    let options = SolveOptions {
        tolerance: gap_tol,
        time_limit_s,
        backend: backend.parse::<SolverBackend>().map_err(py_err)?,
        ..SolveOptions::default()
    };
    let inner = py
        .detach(|| dispatch::solve_dispatch(&instance, &options))
        .map_err(py_err)?;
    Ok(PyDispatchResult { inner })
}

/// Cell and module layout of a pack.
#[pyfunction]
#[pyo3(signature = (rated_energy_mwh, chemistry="LFP", duration_h=4.0))]
fn configure_pack<'py>(
    py: Python<'py>,
    rated_energy_mwh: f64,
    chemistry: &str,
    duration_h: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let chem = CostConfig::default().chemistry(self::chemistry(chemistry)?);
    let pack = costs::configure_pack(rated_energy_mwh, &chem, duration_h).map_err(py_err)?;
    to_py(py, &pack)
}

/// Itemized capital cost with the resulting LCOS, $/MWh.
#[pyfunction]
#[pyo3(signature = (rated_energy_mwh, chemistry="LFP", duration_h=4.0))]
fn battery_cost<'py>(
    py: Python<'py>,
    rated_energy_mwh: f64,
    chemistry: &str,
    duration_h: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let config = CostConfig::default();
    let chem = config.chemistry(self::chemistry(chemistry)?);
    let pack = costs::configure_pack(rated_energy_mwh, &chem, duration_h).map_err(py_err)?;
    let cost = costs::battery_capital_cost(&pack, &chem, &config.stack()).map_err(py_err)?;
    let lcos = costs::lcos(cost.total_usd, chem.cycles_eol, rated_energy_mwh).map_err(py_err)?;
    let out = PyDict::new(py);
    out.set_item("pack", to_py(py, &pack)?)?;
    out.set_item("lines", to_py(py, &cost.lines)?)?;
    out.set_item("total_usd", cost.total_usd)?;
    out.set_item("cnc_clamped", cost.cnc_clamped)?;
    out.set_item("lcos_usd_per_mwh", lcos)?;
    Ok(out.into_any())
}

/// Blended cost of served electricity, $/MWh.
#[pyfunction]
fn total_electricity_cost(
    f_solar: f64,
    f_batt: f64,
    f_grid: f64,
    lcopr: f64,
    lcos: f64,
    coc: f64,
    gep: f64,
) -> PyResult<f64> {
    costs::total_electricity_cost(f_solar, f_batt, f_grid, lcopr, lcos, coc, gep).map_err(py_err)
}

/// Peak excess demand against grid limits, both keyed by location.
#[pyfunction]
fn capacity_gap<'py>(
    py: Python<'py>,
    peaks: BTreeMap<String, f64>,
    limits: BTreeMap<String, f64>,
) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &gap(&peaks, &limits).map_err(py_err)?.entries)
}

/// Runs the siting pipeline from a config file and returns the site catalog.
#[pyfunction]
fn run_siting(py: Python<'_>, config_path: PathBuf) -> PyResult<Bound<'_, PyAny>> {
    let cfg = SitingConfig::load(&config_path).map_err(py_err)?;
    let base = config_path.parent().unwrap_or(Path::new("")).to_path_buf();
    let out = py.detach(|| run_siting_config(&cfg, &base)).map_err(py_err)?;
    to_py(py, &out.catalog)
}

/// Runs a scenario sweep; results are also exported when `out_dir` is given.
#[pyfunction]
#[pyo3(signature = (spec_path, out_dir=None, workers=0, resume=false))]
fn sweep(
    py: Python<'_>,
    spec_path: PathBuf,
    out_dir: Option<PathBuf>,
    workers: usize,
    resume: bool,
) -> PyResult<Bound<'_, PyAny>> {
    let spec = SweepSpec::load(&spec_path).map_err(py_err)?;
    let base = spec_path.parent().unwrap_or(Path::new("")).to_path_buf();
    let results = py
        .detach(|| {
            let inputs = spec.resolve_inputs(&base)?;
            let run = RunOptions {
                out_dir: out_dir.clone(),
                workers,
                resume,
                write_trajectories: out_dir.is_some(),
            };
            let results = run_sweep(&spec, &inputs, &run)?;
            if let Some(dir) = &out_dir {
                export_results(&results, dir)?;
            }
            Ok::<_, Error>(results)
        })
        .map_err(py_err)?;
    to_py(py, &results)
}

#[pymodule]
fn microgrid(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBattery>()?;
    m.add_class::<PyDispatchResult>()?;
    m.add_function(wrap_pyfunction!(solve_dispatch, m)?)?;
    m.add_function(wrap_pyfunction!(configure_pack, m)?)?;
    m.add_function(wrap_pyfunction!(battery_cost, m)?)?;
    m.add_function(wrap_pyfunction!(total_electricity_cost, m)?)?;
    m.add_function(wrap_pyfunction!(capacity_gap, m)?)?;
    m.add_function(wrap_pyfunction!(run_siting, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    Ok(())
}
