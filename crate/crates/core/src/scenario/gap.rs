//! Peak excess demand against local grid capacity.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapEntry {
    pub location: String,
    pub peak_demand_mw: f64,
    pub capacity_limit_mw: f64,
    pub excess_mw: f64,
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityGapReport {
    pub entries: Vec<GapEntry>,
}

impl CapacityGapReport {
    pub fn violations(&self) -> impl Iterator<Item = &GapEntry> {
        self.entries.iter().filter(|e| e.violated)
    }

    pub fn total_excess_mw(&self) -> f64 {
        self.entries.iter().map(|e| e.excess_mw).sum()
    }
}

/// Input file layout for the capacity check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapInput {
    pub peaks: BTreeMap<String, f64>,
    pub limits: BTreeMap<String, f64>,
}

/// Excess of each location's peak over its limit; locations in name order.
pub fn capacity_gap(
    peaks: &BTreeMap<String, f64>,
    limits: &BTreeMap<String, f64>,
) -> Result<CapacityGapReport> {
    let mut entries = Vec::with_capacity(peaks.len());
    for (location, &peak) in peaks {
        let &limit = limits
            .get(location)
            .ok_or_else(|| Error::invalid(format!("no capacity limit for location {location:?}")))?;
        if !(peak >= 0.0) || !(limit >= 0.0) {
            return Err(Error::invalid(format!("negative peak or limit at {location:?}")));
        }
        let excess_mw = (peak - limit).max(0.0);
        entries.push(GapEntry {
            location: location.clone(),
            peak_demand_mw: peak,
            capacity_limit_mw: limit,
            excess_mw,
            violated: excess_mw > 0.0,
        });
    }
    Ok(CapacityGapReport { entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(peak: f64, limit: f64) -> GapEntry {
        let p = BTreeMap::from([("a".to_string(), peak)]);
        let l = BTreeMap::from([("a".to_string(), limit)]);
        capacity_gap(&p, &l).unwrap().entries.remove(0)
    }

    #[test]
    fn gap_examples() {
        let e = one(10.0, 20.0);
        assert_eq!((e.excess_mw, e.violated), (0.0, false));
        let e = one(20.0, 20.0);
        assert_eq!((e.excess_mw, e.violated), (0.0, false));
        let e = one(32.5, 21.25);
        assert_eq!((e.excess_mw, e.violated), (11.25, true));
    }

    #[test]
    fn missing_limit_is_an_error() {
        let p = BTreeMap::from([("dock".to_string(), 5.0)]);
        let err = capacity_gap(&p, &BTreeMap::new()).unwrap_err();
        assert!(err.to_string().contains("dock"));
    }
}
