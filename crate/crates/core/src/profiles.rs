//! Hourly time series: load, solar availability, and carbon emissions.
//!
//! Profiles are validated once at construction and never mutated afterwards.
//! Transformations return new profiles.

use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hours in a non-leap year.
pub const HOURS_PER_YEAR: usize = 8760;

/// Load samples below this are treated as zero-load hours.
pub const ZERO_LOAD_MW: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Unit {
    #[serde(rename = "MW")]
    Megawatt,
    #[serde(rename = "cf")]
    CapacityFactor,
    #[serde(rename = "kg/h")]
    KgCo2PerHour,
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Unit::Megawatt => "MW",
            Unit::CapacityFactor => "cf",
            Unit::KgCo2PerHour => "kg/h",
        })
    }
}

impl FromStr for Unit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mw" => Ok(Unit::Megawatt),
            "cf" | "capacity_factor" | "capacity-factor" | "dimensionless" | "-" => {
                Ok(Unit::CapacityFactor)
            }
            "kg/h" | "kg" | "kgco2/h" | "kg_co2_per_hour" => Ok(Unit::KgCo2PerHour),
            other => Err(Error::invalid(format!("unknown profile unit {other:?}"))),
        }
    }
}

/// A fixed-horizon, non-negative hourly series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourlyProfile {
    values: Vec<f64>,
    unit: Unit,
    #[serde(default)]
    label: String,
}

impl HourlyProfile {
    pub fn new(values: Vec<f64>, unit: Unit, label: impl Into<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("profile must contain at least one sample"));
        }
        for (i, &v) in values.iter().enumerate() {
            let hour = i + 1;
            if !v.is_finite() {
                return Err(Error::invalid(format!("non-finite sample at hour {hour}")));
            }
            if v < 0.0 {
                return Err(Error::NegativeSample { hour });
            }
            if unit == Unit::CapacityFactor && v > 1.0 {
                return Err(Error::CapacityFactorAboveOne { hour });
            }
        }
        Ok(Self {
            values,
            unit,
            label: label.into(),
        })
    }

    pub fn zeros(horizon: usize, unit: Unit) -> Self {
        Self {
            values: vec![0.0; horizon.max(1)],
            unit,
            label: String::new(),
        }
    }

    pub fn constant(horizon: usize, value: f64, unit: Unit) -> Result<Self> {
        Self::new(vec![value; horizon], unit, "")
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn horizon(&self) -> usize {
        self.values.len()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Writes the profile in the `hour,value` CSV layout with a unit line.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# unit: {}", self.unit)?;
        writeln!(out, "hour,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(out, "{},{}", i + 1, v)?;
        }
        Ok(())
    }
}

/// Parses a `hour,value` CSV with exactly `horizon` data rows.
///
/// A `# unit: <unit>` metadata line may declare the unit. When both the file
/// and `expected_unit` name a unit they must agree.
pub fn load_profile<R: BufRead>(
    source: R,
    expected_unit: Option<Unit>,
    horizon: usize,
) -> Result<HourlyProfile> {
    let mut declared: Option<Unit> = None;
    let mut seen_header = false;
    let mut values = Vec::with_capacity(horizon);

    for (lineno, line) in source.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<profile>", e))?;
        let line = line.trim_end_matches('\r');
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(meta) = trimmed.strip_prefix('#') {
            if let Some((key, value)) = meta.split_once(':') {
                if key.trim().eq_ignore_ascii_case("unit") {
                    declared = Some(value.parse()?);
                }
            }
            continue;
        }
        if !seen_header {
            let header: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            if header != ["hour", "value"] {
                return Err(Error::invalid(format!(
                    "expected header `hour,value`, found {trimmed:?}"
                )));
            }
            seen_header = true;
            continue;
        }

        let (hour_text, value_text) = trimmed.split_once(',').ok_or_else(|| Error::Unparseable {
            line: lineno + 1,
            text: trimmed.to_string(),
        })?;
        let row = values.len() + 1;
        match hour_text.trim().parse::<usize>() {
            Ok(h) if h == row => {}
            _ => {
                return Err(Error::HourIndex {
                    row,
                    expected: row,
                    found: hour_text.trim().to_string(),
                })
            }
        }
        let value: f64 = value_text
            .trim()
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| Error::Unparseable {
                line: lineno + 1,
                text: value_text.trim().to_string(),
            })?;
        if value < 0.0 {
            return Err(Error::NegativeSample { hour: row });
        }
        values.push(value);
    }

    if !seen_header {
        return Err(Error::invalid("missing `hour,value` header"));
    }
    if values.len() != horizon {
        return Err(Error::RowCount {
            expected: horizon,
            got: values.len(),
        });
    }
    let unit = match (declared, expected_unit) {
        (Some(d), Some(e)) if d != e => {
            return Err(Error::UnitMismatch {
                expected: e.to_string(),
                found: d.to_string(),
            })
        }
        (Some(u), _) | (None, Some(u)) => u,
        (None, None) => return Err(Error::invalid("profile unit not declared")),
    };
    HourlyProfile::new(values, unit, "")
}

/// Reads a profile from disk; see [`load_profile`].
pub fn read_profile(
    path: &std::path::Path,
    expected_unit: Option<Unit>,
    horizon: usize,
) -> Result<HourlyProfile> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    load_profile(std::io::BufReader::new(file), expected_unit, horizon).map(|p| p.with_label(label))
}

/// Circularly shifts the series by `hours` (positive delays the signal).
pub fn shift_profile(p: &HourlyProfile, hours: i64) -> Result<HourlyProfile> {
    let n = p.horizon() as i64;
    if hours.abs() >= n {
        return Err(Error::invalid(format!(
            "shift of {hours} h must be smaller than the horizon {n}"
        )));
    }
    let k = hours.rem_euclid(n) as usize;
    let mut out = p.values.clone();
    out.rotate_right(k);
    Ok(HourlyProfile {
        values: out,
        unit: p.unit,
        label: p.label.clone(),
    })
}

/// Multiplies every sample by a non-negative factor, keeping the unit.
pub fn scale_profile(p: &HourlyProfile, factor: f64) -> Result<HourlyProfile> {
    if !(factor >= 0.0) || !factor.is_finite() {
        return Err(Error::invalid(format!(
            "scale factor must be a finite non-negative number, got {factor}"
        )));
    }
    HourlyProfile::new(
        p.values.iter().map(|v| v * factor).collect(),
        p.unit,
        p.label.clone(),
    )
}

/// Hourly available solar power for a farm of the given nameplate rating.
pub fn available_capacity(cf: &HourlyProfile, nameplate_mw: f64) -> Result<HourlyProfile> {
    if cf.unit != Unit::CapacityFactor {
        return Err(Error::UnitMismatch {
            expected: Unit::CapacityFactor.to_string(),
            found: cf.unit.to_string(),
        });
    }
    if !(nameplate_mw >= 0.0) || !nameplate_mw.is_finite() {
        return Err(Error::invalid(format!(
            "nameplate must be non-negative, got {nameplate_mw}"
        )));
    }
    HourlyProfile::new(
        cf.values.iter().map(|v| v * nameplate_mw).collect(),
        Unit::Megawatt,
        cf.label.clone(),
    )
}
