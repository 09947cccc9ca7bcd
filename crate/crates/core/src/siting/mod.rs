//! Raster siting pipeline: exclusion layers → composite map → site catalog.

mod parcels;
mod raster;
mod rules;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use parcels::{
    aggregate_parcels, attach_profiles, representative_profile, Parcel, ResourcePoint,
    SiteCatalog, DEFAULT_BLOCK_CELLS, DEFAULT_POWER_DENSITY_MW_PER_KM2,
};
pub use raster::{
    format_ascii_grid, parse_ascii_grid, read_ascii_grid, write_ascii_grid, GridRaster,
    DEFAULT_CELL_SIZE_M,
};
pub use rules::{
    apply_exclusion_rule, buffer_violations, composite, decision_layer, solar_exclusion_rules,
    CompositeMap, Distance, DistanceUnit, ExclusionRule, RuleMode, METRES_PER_MILE,
};

use crate::config;
use crate::error::{Error, Result};

/// One exclusion layer as listed in a siting configuration file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerSpec {
    /// Path to an ESRI ASCII grid, relative to the configuration file.
    pub path: PathBuf,
    /// Unit of the layer samples; checked against the rule's threshold unit.
    #[serde(default)]
    pub layer_unit: Option<String>,
    #[serde(flatten)]
    pub rule: ExclusionRule,
}

fn default_block_cells() -> usize {
    DEFAULT_BLOCK_CELLS
}

fn default_density() -> f64 {
    DEFAULT_POWER_DENSITY_MW_PER_KM2
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SitingConfig {
    #[serde(default = "default_block_cells")]
    pub block_cells: usize,
    #[serde(default = "default_density")]
    pub power_density_mw_per_km2: f64,
    pub layers: Vec<LayerSpec>,
    /// Optional JSON list of [`ResourcePoint`]s used for representative profiles.
    #[serde(default)]
    pub resource_points: Option<PathBuf>,
}

impl SitingConfig {
    pub fn load(path: &Path) -> Result<Self> {
        config::load(path)
    }
}

#[derive(Debug, Clone)]
pub struct SitingOutput {
    pub decision_layers: Vec<(String, GridRaster)>,
    pub composite: CompositeMap,
    pub catalog: SiteCatalog,
}

/// Runs rule application, buffering, overlay and aggregation on in-memory layers.
pub fn run_siting(
    layers: &[(GridRaster, ExclusionRule)],
    block_cells: usize,
    power_density_mw_per_km2: f64,
    resource_points: Option<&[ResourcePoint]>,
) -> Result<SitingOutput> {
    let decision_layers: Vec<(String, GridRaster)> = layers
        .par_iter()
        .map(|(layer, rule)| Ok((rule.layer_name.clone(), decision_layer(layer, rule)?)))
        .collect::<Result<_>>()?;
    let binaries: Vec<GridRaster> = decision_layers.iter().map(|(_, r)| r.clone()).collect();
    let composite = composite(&binaries)?;
    let mut catalog = aggregate_parcels(&composite, block_cells, power_density_mw_per_km2)?;
    if let Some(points) = resource_points {
        attach_profiles(&mut catalog, points)?;
    }
    Ok(SitingOutput {
        decision_layers,
        composite,
        catalog,
    })
}

/// Loads every layer named in `config` (paths relative to `base_dir`) and runs the pipeline.
pub fn run_siting_config(config: &SitingConfig, base_dir: &Path) -> Result<SitingOutput> {
    let mut layers = Vec::with_capacity(config.layers.len());
    for spec in &config.layers {
        let path = base_dir.join(&spec.path);
        let raster = read_ascii_grid(&path)?.with_unit(spec.layer_unit.clone());
        layers.push((raster, spec.rule.clone()));
    }
    let points: Option<Vec<ResourcePoint>> = match &config.resource_points {
        Some(p) => {
            let path = base_dir.join(p);
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            Some(serde_json::from_str(&text).map_err(|e| Error::format(&path, e.to_string()))?)
        }
        None => None,
    };
    run_siting(
        &layers,
        config.block_cells,
        config.power_density_mw_per_km2,
        points.as_deref(),
    )
}
