//! Gridded layers and the ESRI ASCII grid format.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default resolution of the suitability layers, in metres.
pub const DEFAULT_CELL_SIZE_M: f64 = 90.0;

/// A rectangular grid of samples stored row-major, north row first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRaster {
    rows: usize,
    cols: usize,
    cells: Vec<f64>,
    cell_size_m: f64,
    nodata: Option<f64>,
    xll: f64,
    yll: f64,
    /// Physical unit of the samples, when known.
    unit: Option<String>,
}

impl GridRaster {
    pub fn new(rows: usize, cols: usize, cells: Vec<f64>, cell_size_m: f64) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("raster must have at least one row and column"));
        }
        if cells.len() != rows * cols {
            return Err(Error::invalid(format!(
                "raster of {rows}x{cols} needs {} cells, got {}",
                rows * cols,
                cells.len()
            )));
        }
        if !(cell_size_m > 0.0) || !cell_size_m.is_finite() {
            return Err(Error::invalid(format!(
                "cell size must be positive, got {cell_size_m}"
            )));
        }
        Ok(Self {
            rows,
            cols,
            cells,
            cell_size_m,
            nodata: None,
            xll: 0.0,
            yll: 0.0,
            unit: None,
        })
    }

    pub fn filled(rows: usize, cols: usize, value: f64, cell_size_m: f64) -> Result<Self> {
        Self::new(rows, cols, vec![value; rows * cols], cell_size_m)
    }

    /// Builds a raster by evaluating `f(row, col)` for every cell.
    pub fn from_fn(
        rows: usize,
        cols: usize,
        cell_size_m: f64,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut cells = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                cells.push(f(r, c));
            }
        }
        Self::new(rows, cols, cells, cell_size_m)
    }

    pub fn with_nodata(mut self, nodata: Option<f64>) -> Self {
        self.nodata = nodata;
        self
    }

    pub fn with_unit(mut self, unit: Option<String>) -> Self {
        self.unit = unit;
        self
    }

    pub fn with_origin(mut self, xll: f64, yll: f64) -> Self {
        self.xll = xll;
        self.yll = yll;
        self
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn cell_size_m(&self) -> f64 {
        self.cell_size_m
    }

    pub fn nodata(&self) -> Option<f64> {
        self.nodata
    }

    pub fn unit(&self) -> Option<&str> {
        self.unit.as_deref()
    }

    pub fn origin(&self) -> (f64, f64) {
        (self.xll, self.yll)
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.cells[row * self.cols + col]
    }

    pub fn is_nodata(&self, value: f64) -> bool {
        value.is_nan() || self.nodata.is_some_and(|nd| value == nd)
    }

    /// True when every cell is exactly 0 or 1.
    pub fn is_binary(&self) -> bool {
        self.cells.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    pub fn count_nonzero(&self) -> usize {
        self.cells.iter().filter(|&&v| v != 0.0).count()
    }

    /// Copies geometry (size, origin, nodata) onto a new cell buffer.
    pub(crate) fn with_cells(&self, cells: Vec<f64>) -> Self {
        debug_assert_eq!(cells.len(), self.cells.len());
        Self {
            cells,
            ..self.clone()
        }
    }
}

fn parse_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::format(path, msg)
}

/// Parses an ESRI ASCII grid.
///
/// Accepts both `xllcorner`/`xllcenter` origin conventions and an optional
/// `NODATA_value`. Header keys are case-insensitive.
pub fn parse_ascii_grid<R: BufRead>(source: R, path: &Path) -> Result<GridRaster> {
    let mut ncols = None;
    let mut nrows = None;
    let mut xll = 0.0;
    let mut yll = 0.0;
    let mut cellsize = None;
    let mut nodata = None;
    let mut cells: Vec<f64> = Vec::new();

    for line in source.lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let first = trimmed.split_whitespace().next().unwrap_or_default();
        if cells.is_empty() && first.chars().next().is_some_and(|c| c.is_ascii_alphabetic()) {
            let mut parts = trimmed.split_whitespace();
            let key = parts.next().unwrap_or_default().to_ascii_lowercase();
            let value = parts
                .next()
                .ok_or_else(|| parse_err(path, format!("header {key} has no value")))?;
            let num: f64 = value
                .parse()
                .map_err(|_| parse_err(path, format!("header {key}: bad number {value:?}")))?;
            match key.as_str() {
                "ncols" => ncols = Some(num as usize),
                "nrows" => nrows = Some(num as usize),
                "xllcorner" | "xllcenter" => xll = num,
                "yllcorner" | "yllcenter" => yll = num,
                "cellsize" => cellsize = Some(num),
                "nodata_value" => nodata = Some(num),
                other => return Err(parse_err(path, format!("unknown header key {other}"))),
            }
            continue;
        }
        for tok in trimmed.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| parse_err(path, format!("bad cell value {tok:?}")))?;
            cells.push(v);
        }
    }

    let ncols = ncols.ok_or_else(|| parse_err(path, "missing ncols"))?;
    let nrows = nrows.ok_or_else(|| parse_err(path, "missing nrows"))?;
    let cellsize = cellsize.ok_or_else(|| parse_err(path, "missing cellsize"))?;
    if cells.len() != ncols * nrows {
        return Err(parse_err(
            path,
            format!(
                "expected {} cell values for {nrows}x{ncols}, found {}",
                ncols * nrows,
                cells.len()
            ),
        ));
    }
    Ok(GridRaster::new(nrows, ncols, cells, cellsize)
        .map_err(|e| parse_err(path, e.to_string()))?
        .with_nodata(nodata)
        .with_origin(xll, yll))
}

pub fn read_ascii_grid(path: &Path) -> Result<GridRaster> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_ascii_grid(std::io::BufReader::new(file), path)
}

pub fn format_ascii_grid(raster: &GridRaster) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "ncols {}", raster.cols);
    let _ = writeln!(s, "nrows {}", raster.rows);
    let _ = writeln!(s, "xllcorner {}", raster.xll);
    let _ = writeln!(s, "yllcorner {}", raster.yll);
    let _ = writeln!(s, "cellsize {}", raster.cell_size_m);
    if let Some(nd) = raster.nodata {
        let _ = writeln!(s, "NODATA_value {nd}");
    }
    for row in raster.cells.chunks(raster.cols) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    s
}

pub fn write_ascii_grid(raster: &GridRaster, path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(format_ascii_grid(raster).as_bytes())
        .map_err(|e| Error::io(path, e))
}
