//! Supply-curve style rollup of viable cells into candidate sites.

use serde::{Deserialize, Serialize};

use super::rules::CompositeMap;
use crate::error::{Error, Result};
use crate::profiles::{HourlyProfile, Unit};

/// Cells per parcel edge; 64 cells of 90 m give roughly 33 km² parcels.
pub const DEFAULT_BLOCK_CELLS: usize = 64;

/// Nameplate solar capacity per unit of viable land, MW/km².
pub const DEFAULT_POWER_DENSITY_MW_PER_KM2: f64 = 36.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parcel {
    /// 1-based rank by increasing nameplate.
    pub site_index: usize,
    pub block_row: usize,
    pub block_col: usize,
    /// Raster row/column of the block's north-west corner.
    pub origin_row: usize,
    pub origin_col: usize,
    pub viable_cells: usize,
    pub block_area_km2: f64,
    pub viable_area_km2: f64,
    pub nameplate_mw: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub representative_profile: Option<HourlyProfile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteCatalog {
    pub block_cells: usize,
    pub cell_size_m: f64,
    pub power_density_mw_per_km2: f64,
    pub parcels: Vec<Parcel>,
}

impl SiteCatalog {
    pub fn len(&self) -> usize {
        self.parcels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parcels.is_empty()
    }

    pub fn site(&self, site_index: usize) -> Option<&Parcel> {
        self.parcels.iter().find(|p| p.site_index == site_index)
    }

    pub fn total_nameplate_mw(&self) -> f64 {
        self.parcels.iter().map(|p| p.nameplate_mw).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::invalid(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("bad site catalog: {e}")))
    }
}

/// Tiles the composite into square blocks and keeps blocks with viable land.
///
/// Edge blocks may be partial when the raster size is not a multiple of the
/// block size. Parcels are ranked by nameplate, ties broken by block position.
pub fn aggregate_parcels(
    c: &CompositeMap,
    block_cells: usize,
    power_density_mw_per_km2: f64,
) -> Result<SiteCatalog> {
    if block_cells == 0 {
        return Err(Error::invalid("block size must be at least one cell"));
    }
    if !(power_density_mw_per_km2 >= 0.0) || !power_density_mw_per_km2.is_finite() {
        return Err(Error::invalid("power density must be non-negative"));
    }
    let (rows, cols) = c.shape();
    let cell_km = c.cell_size_m() / 1000.0;
    let cell_area_km2 = cell_km * cell_km;

    let mut parcels = Vec::new();
    for block_row in 0..rows.div_ceil(block_cells) {
        for block_col in 0..cols.div_ceil(block_cells) {
            let r0 = block_row * block_cells;
            let c0 = block_col * block_cells;
            let r1 = (r0 + block_cells).min(rows);
            let c1 = (c0 + block_cells).min(cols);
            let viable = (r0..r1)
                .flat_map(|r| (c0..c1).map(move |cc| (r, cc)))
                .filter(|&(r, cc)| c.is_viable(r, cc))
                .count();
            if viable == 0 {
                continue;
            }
            let viable_area_km2 = viable as f64 * cell_area_km2;
            parcels.push(Parcel {
                site_index: 0,
                block_row,
                block_col,
                origin_row: r0,
                origin_col: c0,
                viable_cells: viable,
                block_area_km2: ((r1 - r0) * (c1 - c0)) as f64 * cell_area_km2,
                viable_area_km2,
                nameplate_mw: viable_area_km2 * power_density_mw_per_km2,
                representative_profile: None,
            });
        }
    }
    parcels.sort_by(|a, b| {
        a.nameplate_mw
            .total_cmp(&b.nameplate_mw)
            .then(a.block_row.cmp(&b.block_row))
            .then(a.block_col.cmp(&b.block_col))
    });
    for (i, p) in parcels.iter_mut().enumerate() {
        p.site_index = i + 1;
    }
    Ok(SiteCatalog {
        block_cells,
        cell_size_m: c.cell_size_m(),
        power_density_mw_per_km2,
        parcels,
    })
}

/// Picks the member closest (L2) to the element-wise mean profile.
///
/// Returns the chosen member's index alongside a copy of it. Ties go to the
/// lowest index.
pub fn representative_profile(members: &[HourlyProfile]) -> Result<(usize, HourlyProfile)> {
    let first = members
        .first()
        .ok_or_else(|| Error::invalid("representative profile needs at least one member"))?;
    let horizon = first.horizon();
    if let Some(bad) = members.iter().find(|m| m.horizon() != horizon) {
        return Err(Error::HorizonMismatch {
            what: format!("member profile {:?}", bad.label()),
            expected: horizon,
            got: bad.horizon(),
        });
    }
    let n = members.len() as f64;
    let mut mean = vec![0.0; horizon];
    for m in members {
        for (acc, v) in mean.iter_mut().zip(m.values()) {
            *acc += v;
        }
    }
    mean.iter_mut().for_each(|v| *v /= n);

    let mut best = (0usize, f64::INFINITY);
    for (i, m) in members.iter().enumerate() {
        let d: f64 = m
            .values()
            .iter()
            .zip(&mean)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        if d < best.1 {
            best = (i, d);
        }
    }
    Ok((best.0, members[best.0].clone()))
}

/// A capacity-factor profile located at a raster cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourcePoint {
    pub row: usize,
    pub col: usize,
    pub profile: HourlyProfile,
}

/// Assigns each parcel the meanoid of the resource points inside its block.
///
/// Parcels with no point inside fall back to the point nearest the block
/// centre (ties to the lowest point index).
pub fn attach_profiles(catalog: &mut SiteCatalog, points: &[ResourcePoint]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::invalid("no resource points supplied"));
    }
    if let Some(p) = points
        .iter()
        .find(|p| p.profile.unit() != Unit::CapacityFactor)
    {
        return Err(Error::UnitMismatch {
            expected: Unit::CapacityFactor.to_string(),
            found: p.profile.unit().to_string(),
        });
    }
    let b = catalog.block_cells;
    for parcel in &mut catalog.parcels {
        let inside: Vec<HourlyProfile> = points
            .iter()
            .filter(|p| {
                (parcel.origin_row..parcel.origin_row + b).contains(&p.row)
                    && (parcel.origin_col..parcel.origin_col + b).contains(&p.col)
            })
            .map(|p| p.profile.clone())
            .collect();
        let profile = if inside.is_empty() {
            let cr = parcel.origin_row as f64 + b as f64 / 2.0;
            let cc = parcel.origin_col as f64 + b as f64 / 2.0;
            let mut best = (0usize, f64::INFINITY);
            for (i, p) in points.iter().enumerate() {
                let d = (p.row as f64 + 0.5 - cr).powi(2) + (p.col as f64 + 0.5 - cc).powi(2);
                if d < best.1 {
                    best = (i, d);
                }
            }
            points[best.0].profile.clone()
        } else {
            representative_profile(&inside)?.1
        };
        parcel.representative_profile = Some(profile);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::siting::raster::GridRaster;
    use crate::siting::rules::composite;

    fn composite_from(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> f64) -> CompositeMap {
        composite(&[GridRaster::from_fn(rows, cols, 90.0, f).unwrap()]).unwrap()
    }

    fn cf(values: &[f64]) -> HourlyProfile {
        HourlyProfile::new(values.to_vec(), Unit::CapacityFactor, "").unwrap()
    }

    #[test]
    fn fully_viable_block() {
        let c = composite_from(64, 64, |_, _| 0.0);
        let cat = aggregate_parcels(&c, 64, 36.0).unwrap();
        assert_eq!(cat.len(), 1);
        let p = &cat.parcels[0];
        // 64^2 cells x 0.0081 km^2
        assert!((p.viable_area_km2 - 33.1776).abs() < 1e-9);
        assert!((p.nameplate_mw - 1194.3936).abs() < 1e-6);
        assert_eq!(p.site_index, 1);
    }

    #[test]
    fn excluded_block_is_dropped_and_single_cell_kept() {
        let c = composite_from(64, 128, |r, col| if (r, col) == (10, 100) { 0.0 } else { 1.0 });
        let cat = aggregate_parcels(&c, 64, 36.0).unwrap();
        assert_eq!(cat.len(), 1);
        let p = &cat.parcels[0];
        assert_eq!(p.block_col, 1);
        assert!((p.viable_area_km2 - 0.0081).abs() < 1e-12);
        assert!((p.nameplate_mw - 0.2916).abs() < 1e-12);
    }

    #[test]
    fn catalog_ranked_by_nameplate() {
        // block (0,0) fully viable, block (0,1) a quarter viable
        let c = composite_from(4, 8, |r, col| {
            if col >= 4 && (r >= 2 || col >= 6) {
                1.0
            } else {
                0.0
            }
        });
        let cat = aggregate_parcels(&c, 4, 36.0).unwrap();
        assert_eq!(cat.len(), 2);
        assert_eq!(cat.parcels[0].block_col, 1);
        assert_eq!(cat.parcels[0].site_index, 1);
        assert!(cat.parcels[0].nameplate_mw <= cat.parcels[1].nameplate_mw);
        assert!(cat.parcels.iter().all(|p| p.viable_area_km2 <= p.block_area_km2));
    }

    #[test]
    fn meanoid_examples() {
        let (i, p) = representative_profile(&[cf(&[0.3, 0.2])]).unwrap();
        assert_eq!((i, p.values()), (0, &[0.3, 0.2][..]));

        let same = [cf(&[0.5, 0.5]), cf(&[0.5, 0.5])];
        assert_eq!(representative_profile(&same).unwrap().0, 0);

        let members = [cf(&[0.0, 0.0]), cf(&[1.0, 1.0]), cf(&[0.4, 0.4])];
        let (i, p) = representative_profile(&members).unwrap();
        assert_eq!(i, 2);
        assert_eq!(p.values(), &[0.4, 0.4]);

        assert!(representative_profile(&[]).is_err());
        assert!(representative_profile(&[cf(&[0.1]), cf(&[0.1, 0.2])]).is_err());
    }

    #[test]
    fn attach_uses_points_inside_or_nearest() {
        let c = composite_from(4, 8, |_, _| 0.0);
        let mut cat = aggregate_parcels(&c, 4, 36.0).unwrap();
        let points = vec![
            ResourcePoint { row: 1, col: 1, profile: cf(&[0.1, 0.1]) },
            ResourcePoint { row: 2, col: 2, profile: cf(&[0.3, 0.3]) },
            ResourcePoint { row: 3, col: 3, profile: cf(&[0.2, 0.2]) },
        ];
        attach_profiles(&mut cat, &points).unwrap();
        let west = cat.parcels.iter().find(|p| p.block_col == 0).unwrap();
        assert_eq!(west.representative_profile.as_ref().unwrap().values(), &[0.2, 0.2]);
        let east = cat.parcels.iter().find(|p| p.block_col == 1).unwrap();
        assert_eq!(east.representative_profile.as_ref().unwrap().values(), &[0.2, 0.2]);
    }
}
