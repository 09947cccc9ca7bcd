//! Exclusion rules, buffers, and the composite conflict map.

use serde::{Deserialize, Serialize};

use super::raster::GridRaster;
use crate::error::{Error, Result};

/// Metres per statute mile.
pub const METRES_PER_MILE: f64 = 1609.344;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceUnit {
    M,
    Km,
    Mi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Distance {
    pub value: f64,
    pub unit: DistanceUnit,
}

impl Distance {
    pub const ZERO: Distance = Distance {
        value: 0.0,
        unit: DistanceUnit::M,
    };

    pub fn metres(value: f64) -> Self {
        Self {
            value,
            unit: DistanceUnit::M,
        }
    }

    pub fn km(value: f64) -> Self {
        Self {
            value,
            unit: DistanceUnit::Km,
        }
    }

    pub fn miles(value: f64) -> Self {
        Self {
            value,
            unit: DistanceUnit::Mi,
        }
    }

    pub fn to_metres(self) -> f64 {
        match self.unit {
            DistanceUnit::M => self.value,
            DistanceUnit::Km => self.value * 1000.0,
            DistanceUnit::Mi => self.value * METRES_PER_MILE,
        }
    }
}

impl Default for Distance {
    fn default() -> Self {
        Self::ZERO
    }
}

/// How a layer is turned into a 0/1 decision layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum RuleMode {
    /// Any non-zero cell is a violation.
    NoGo,
    /// Cells strictly above the threshold are violations.
    ThresholdAbove { threshold: f64, unit: String },
    /// Cells strictly below the threshold are violations.
    ThresholdBelow { threshold: f64, unit: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExclusionRule {
    pub layer_name: String,
    #[serde(flatten)]
    pub mode: RuleMode,
    #[serde(default)]
    pub buffer: Distance,
}

impl ExclusionRule {
    pub fn no_go(layer_name: impl Into<String>) -> Self {
        Self {
            layer_name: layer_name.into(),
            mode: RuleMode::NoGo,
            buffer: Distance::ZERO,
        }
    }

    pub fn above(layer_name: impl Into<String>, threshold: f64, unit: impl Into<String>) -> Self {
        Self {
            layer_name: layer_name.into(),
            mode: RuleMode::ThresholdAbove {
                threshold,
                unit: unit.into(),
            },
            buffer: Distance::ZERO,
        }
    }

    pub fn below(layer_name: impl Into<String>, threshold: f64, unit: impl Into<String>) -> Self {
        Self {
            layer_name: layer_name.into(),
            mode: RuleMode::ThresholdBelow {
                threshold,
                unit: unit.into(),
            },
            buffer: Distance::ZERO,
        }
    }

    pub fn with_buffer(mut self, buffer: Distance) -> Self {
        self.buffer = buffer;
        self
    }
}

/// Exclusion criteria for utility-scale solar.
///
/// Layer names match the keys expected in a siting configuration.
pub fn solar_exclusion_rules() -> Vec<ExclusionRule> {
    vec![
        ExclusionRule::above("population_density", 500.0, "people/mi2")
            .with_buffer(Distance::miles(20.0)),
        ExclusionRule::no_go("protected_lands").with_buffer(Distance::km(3.0)),
        ExclusionRule::no_go("wetlands_open_water"),
        ExclusionRule::no_go("floodplains_100yr"),
        ExclusionRule::no_go("landslide_hazards"),
        ExclusionRule::above("slope", 5.0, "%"),
        ExclusionRule::no_go("major_roads"),
        ExclusionRule::below("solar_radiation", 4.8, "kWh/m2/day"),
    ]
}

fn normalize_unit(u: &str) -> String {
    u.chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| match c {
            '²' => '2',
            c => c.to_ascii_lowercase(),
        })
        .collect()
}

/// Converts a data layer into a decision layer: 1 = violation, 0 = suitable.
///
/// Nodata cells count as violations.
pub fn apply_exclusion_rule(layer: &GridRaster, rule: &ExclusionRule) -> Result<GridRaster> {
    if let (Some(layer_unit), RuleMode::ThresholdAbove { unit, .. } | RuleMode::ThresholdBelow { unit, .. }) =
        (layer.unit(), &rule.mode)
    {
        if normalize_unit(layer_unit) != normalize_unit(unit) {
            return Err(Error::UnitMismatch {
                expected: unit.clone(),
                found: layer_unit.to_string(),
            });
        }
    }
    let flag = |v: f64| -> bool {
        if layer.is_nodata(v) {
            return true;
        }
        match &rule.mode {
            RuleMode::NoGo => v != 0.0,
            RuleMode::ThresholdAbove { threshold, .. } => v > *threshold,
            RuleMode::ThresholdBelow { threshold, .. } => v < *threshold,
        }
    };
    let cells = layer
        .cells()
        .iter()
        .map(|&v| if flag(v) { 1.0 } else { 0.0 })
        .collect();
    Ok(layer.with_cells(cells).with_nodata(None).with_unit(None))
}

/// Exact squared Euclidean distance transform of a 1-D sampled function.
fn distance_transform_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    if n == 0 {
        return;
    }
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let qf = q as f64;
        loop {
            let p = v[k] as f64;
            let s = ((f[q] + qf * qf) - (f[v[k]] + p * p)) / (2.0 * qf - 2.0 * p);
            if s <= z[k] {
                // k > 0 here because z[0] is -inf
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = f64::INFINITY;
                break;
            }
        }
    }
    k = 0;
    for (q, slot) in out.iter_mut().enumerate() {
        let qf = q as f64;
        while z[k + 1] < qf {
            k += 1;
        }
        let d = qf - v[k] as f64;
        *slot = d * d + f[v[k]];
    }
}

/// Squared distance, in cell units, from every cell to the nearest non-zero cell.
fn squared_distance_to_violation(b: &GridRaster, far: f64) -> Vec<f64> {
    let (rows, cols) = b.shape();
    let mut grid: Vec<f64> = b
        .cells()
        .iter()
        .map(|&x| if x != 0.0 { 0.0 } else { far })
        .collect();
    let n = rows.max(cols);
    let mut f = vec![0.0; n];
    let mut out = vec![0.0; n];
    let mut v = vec![0usize; n];
    let mut z = vec![0.0; n + 1];

    for c in 0..cols {
        for r in 0..rows {
            f[r] = grid[r * cols + c];
        }
        distance_transform_1d(&f[..rows], &mut out[..rows], &mut v, &mut z);
        for r in 0..rows {
            grid[r * cols + c] = out[r];
        }
    }
    for r in 0..rows {
        let row = &mut grid[r * cols..(r + 1) * cols];
        f[..cols].copy_from_slice(row);
        distance_transform_1d(&f[..cols], &mut out[..cols], &mut v, &mut z);
        row.copy_from_slice(&out[..cols]);
    }
    grid
}

/// Marks every cell within `distance_m` of a violation as a violation.
///
/// The kernel is a Euclidean disc whose radius in cells is
/// `ceil(distance_m / cell_size_m)`.
pub fn buffer_violations(b: &GridRaster, distance_m: f64) -> Result<GridRaster> {
    if !(distance_m >= 0.0) || !distance_m.is_finite() {
        return Err(Error::invalid(format!(
            "buffer distance must be non-negative, got {distance_m}"
        )));
    }
    if !b.is_binary() {
        return Err(Error::invalid("buffer input must be a binary layer"));
    }
    let radius = (distance_m / b.cell_size_m()).ceil();
    if radius == 0.0 || b.count_nonzero() == 0 {
        return Ok(b.clone());
    }
    let span = (b.rows() + b.cols()) as f64;
    let far = 4.0 * span * span;
    let r2 = (radius * radius).min(span * span);
    let d2 = squared_distance_to_violation(b, far);
    let cells = d2.iter().map(|&d| if d <= r2 { 1.0 } else { 0.0 }).collect();
    Ok(b.with_cells(cells))
}

/// Applies the rule then its buffer.
pub fn decision_layer(layer: &GridRaster, rule: &ExclusionRule) -> Result<GridRaster> {
    let binary = apply_exclusion_rule(layer, rule)?;
    buffer_violations(&binary, rule.buffer.to_metres())
}

/// Per-cell count of conflicting decision layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeMap {
    rows: usize,
    cols: usize,
    cell_size_m: f64,
    layers: u32,
    counts: Vec<u32>,
}

impl CompositeMap {
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn cell_size_m(&self) -> f64 {
        self.cell_size_m
    }

    pub fn layer_count(&self) -> u32 {
        self.layers
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn count(&self, row: usize, col: usize) -> u32 {
        self.counts[row * self.cols + col]
    }

    pub fn is_viable(&self, row: usize, col: usize) -> bool {
        self.count(row, col) == 0
    }

    pub fn viable_cells(&self) -> usize {
        self.counts.iter().filter(|&&c| c == 0).count()
    }

    /// The composite as a raster (counts as values).
    pub fn to_raster(&self) -> GridRaster {
        GridRaster::new(
            self.rows,
            self.cols,
            self.counts.iter().map(|&c| c as f64).collect(),
            self.cell_size_m,
        )
        .expect("composite geometry was validated on construction")
    }
}

/// Overlays binary decision layers into a conflict-count map.
pub fn composite(layers: &[GridRaster]) -> Result<CompositeMap> {
    let first = layers
        .first()
        .ok_or_else(|| Error::invalid("at least one layer required"))?;
    let shape = first.shape();
    let mut counts = vec![0u32; shape.0 * shape.1];
    for (i, layer) in layers.iter().enumerate() {
        if layer.shape() != shape {
            return Err(Error::invalid(format!(
                "layer {i} has shape {:?}, expected {shape:?}",
                layer.shape()
            )));
        }
        if !layer.is_binary() {
            return Err(Error::invalid(format!("layer {i} is not binary")));
        }
        for (acc, &v) in counts.iter_mut().zip(layer.cells()) {
            *acc += v as u32;
        }
    }
    Ok(CompositeMap {
        rows: shape.0,
        cols: shape.1,
        cell_size_m: first.cell_size_m(),
        layers: layers.len() as u32,
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn raster(rows: usize, cols: usize, cells: &[f64]) -> GridRaster {
        GridRaster::new(rows, cols, cells.to_vec(), 90.0).unwrap()
    }

    fn single_center(n: usize) -> GridRaster {
        GridRaster::from_fn(n, n, 90.0, |r, c| {
            if r == n / 2 && c == n / 2 {
                1.0
            } else {
                0.0
            }
        })
        .unwrap()
    }

    /// Brute-force disc dilation used as an oracle for the distance transform.
    fn naive_buffer(b: &GridRaster, radius: i64) -> Vec<f64> {
        let (rows, cols) = b.shape();
        let mut out = vec![0.0; rows * cols];
        for r in 0..rows as i64 {
            for c in 0..cols as i64 {
                if b.get(r as usize, c as usize) == 0.0 {
                    continue;
                }
                for dr in -radius..=radius {
                    for dc in -radius..=radius {
                        if dr * dr + dc * dc > radius * radius {
                            continue;
                        }
                        let (rr, cc) = (r + dr, c + dc);
                        if rr >= 0 && cc >= 0 && rr < rows as i64 && cc < cols as i64 {
                            out[rr as usize * cols + cc as usize] = 1.0;
                        }
                    }
                }
            }
        }
        out
    }

    #[test]
    fn slope_threshold_above() {
        let layer = raster(1, 2, &[3.0, 6.0]).with_unit(Some("%".into()));
        let out = apply_exclusion_rule(&layer, &ExclusionRule::above("slope", 5.0, "%")).unwrap();
        assert_eq!(out.cells(), &[0.0, 1.0]);
    }

    #[test]
    fn radiation_threshold_below() {
        let layer = raster(1, 2, &[5.1, 4.2]).with_unit(Some("kWh/m²/day".into()));
        let rule = ExclusionRule::below("solar_radiation", 4.8, "kWh/m2/day");
        assert_eq!(apply_exclusion_rule(&layer, &rule).unwrap().cells(), &[0.0, 1.0]);
    }

    #[test]
    fn no_go_zero_layer_passes_through() {
        let layer = raster(2, 2, &[0.0; 4]);
        let out = apply_exclusion_rule(&layer, &ExclusionRule::no_go("wetlands")).unwrap();
        assert_eq!(out.count_nonzero(), 0);
    }

    #[test]
    fn nodata_is_a_violation() {
        let layer = raster(1, 3, &[1.0, -9999.0, 9.0]).with_nodata(Some(-9999.0));
        let out = apply_exclusion_rule(&layer, &ExclusionRule::above("slope", 5.0, "%")).unwrap();
        assert_eq!(out.cells(), &[0.0, 1.0, 1.0]);
    }

    #[test]
    fn unit_mismatch_rejected() {
        let layer = raster(1, 1, &[1.0]).with_unit(Some("degrees".into()));
        let err = apply_exclusion_rule(&layer, &ExclusionRule::above("slope", 5.0, "%"));
        assert!(matches!(err, Err(Error::UnitMismatch { .. })));
    }

    #[test]
    fn buffer_zero_is_identity() {
        let b = single_center(5);
        assert_eq!(buffer_violations(&b, 0.0).unwrap(), b);
    }

    #[test]
    fn buffer_one_cell_gives_plus_shape() {
        let out = buffer_violations(&single_center(5), 90.0).unwrap();
        assert_eq!(out.count_nonzero(), 5);
        for (r, c) in [(2, 2), (1, 2), (3, 2), (2, 1), (2, 3)] {
            assert_eq!(out.get(r, c), 1.0);
        }
    }

    #[test]
    fn buffer_two_cells_matches_enumerated_disc() {
        // integer offsets with dx^2 + dy^2 <= 4: 1 + 4 + 4 + 4 = 13
        let disc = (-2i64..=2)
            .flat_map(|dx| (-2i64..=2).map(move |dy| (dx, dy)))
            .filter(|(dx, dy)| dx * dx + dy * dy <= 4)
            .count();
        assert_eq!(disc, 13);
        let out = buffer_violations(&single_center(7), 180.0).unwrap();
        assert_eq!(out.count_nonzero(), disc);
    }

    #[test]
    fn buffer_rounds_radius_up() {
        let a = buffer_violations(&single_center(7), 91.0).unwrap();
        let b = buffer_violations(&single_center(7), 180.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn buffer_rejects_negative_and_non_binary() {
        assert!(buffer_violations(&single_center(3), -1.0).is_err());
        assert!(buffer_violations(&raster(1, 1, &[2.0]), 90.0).is_err());
    }

    #[test]
    fn composite_examples() {
        let zero = raster(1, 2, &[0.0, 0.0]);
        assert_eq!(composite(&[zero]).unwrap().counts(), &[0, 0]);
        let a = raster(1, 2, &[0.0, 1.0]);
        let b = raster(1, 2, &[1.0, 1.0]);
        let c = composite(&[a, b]).unwrap();
        assert_eq!(c.counts(), &[1, 2]);
        assert_eq!(c.viable_cells(), 0);
        assert_eq!(
            composite(&[]).unwrap_err().to_string(),
            "at least one layer required"
        );
        let mismatched = [raster(1, 2, &[0.0, 0.0]), raster(2, 1, &[0.0, 0.0])];
        assert!(composite(&mismatched).is_err());
    }

    #[test]
    fn mile_conversion() {
        assert_eq!(Distance::miles(20.0).to_metres(), 32186.88);
        assert_eq!(Distance::km(3.0).to_metres(), 3000.0);
    }

    fn binary_strategy() -> impl Strategy<Value = GridRaster> {
        (1usize..12, 1usize..12).prop_flat_map(|(r, c)| {
            prop::collection::vec(prop::bool::weighted(0.08), r * c).prop_map(move |bits| {
                GridRaster::new(r, c, bits.iter().map(|&b| b as u8 as f64).collect(), 90.0)
                    .unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn buffer_matches_naive_disc(b in binary_strategy(), radius in 0i64..6) {
            let out = buffer_violations(&b, radius as f64 * 90.0).unwrap();
            prop_assert_eq!(out.cells(), &naive_buffer(&b, radius)[..]);
        }

        #[test]
        fn buffer_is_monotone_in_distance(b in binary_strategy(), d1 in 0.0f64..400.0, extra in 0.0f64..400.0) {
            let small = buffer_violations(&b, d1).unwrap();
            let large = buffer_violations(&b, d1 + extra).unwrap();
            for (s, l) in small.cells().iter().zip(large.cells()) {
                prop_assert!(s <= l);
            }
        }

        #[test]
        fn composite_is_cellwise_sum(layers in prop::collection::vec(prop::collection::vec(prop::bool::ANY, 12), 1..6)) {
            let rasters: Vec<GridRaster> = layers
                .iter()
                .map(|bits| raster(3, 4, &bits.iter().map(|&b| b as u8 as f64).collect::<Vec<_>>()))
                .collect();
            let c = composite(&rasters).unwrap();
            for i in 0..12 {
                let expected: u32 = layers.iter().map(|l| l[i] as u32).sum();
                prop_assert_eq!(c.counts()[i], expected);
                prop_assert!(c.counts()[i] <= c.layer_count());
            }
        }
    }
}
