//! Text file formats.
//!
//! Grid CSV: the first row holds the literal `nu_i\nu_s` followed by the
//! signal frequencies in Hz; each following row holds one idler frequency in
//! Hz followed by the cell values. Every number is written in scientific
//! notation with 9 significant digits, lines end in `\n`, and there are no
//! trailing separators. Axes must be strictly ascending.
//!
//! Sweep, limit and analysis tables use the same number format under a fixed header.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::experiments::{LimitRow, SweepPoint};
use crate::jsa::{FrequencyGrid, JointAmplitude, JointIntensity};

pub const GRID_CORNER: &str = "nu_i\\nu_s";
pub const SWEEP_HEADER: &str = "eta,delta_tau_ps,q,purity_true,purity_flat,purity_error,relative_brightness";
pub const LIMIT_HEADER: &str = "ratio,purity_true,purity_flat";
pub const ANALYSIS_HEADER: &str = "purity_flat,purity_error,schmidt_number";

/// One analyzed JSI file.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalysisRow {
    pub purity_flat: f64,
    pub purity_error: f64,
    pub schmidt_number: f64,
}

/// Format with 9 significant digits, e.g. `1.93900000e14`.
pub fn format_number(x: f64) -> String {
    // Negative zero prints as "-0..." and would make byte output depend on
    // rounding history.
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.8e}")
}

fn parse_err(row: usize, column: Option<usize>, message: impl Into<String>) -> Error {
    Error::Parse {
        path: None,
        row,
        column,
        message: message.into(),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Axes and values read from a grid CSV, before any physical validation.
#[derive(Clone, Debug, PartialEq)]
pub struct GridData {
    pub signal_axis: Vec<f64>,
    pub idler_axis: Vec<f64>,
    /// Rows index idler, columns index signal.
    pub values: DMatrix<f64>,
}

impl GridData {
    pub fn grid(&self) -> Result<FrequencyGrid> {
        FrequencyGrid::from_axes(self.signal_axis.clone(), self.idler_axis.clone())
    }

    /// Validate as a JSI: the first negative cell is reported with its file
    /// location.
    pub fn into_intensity(self) -> Result<JointIntensity> {
        let (rows, cols) = self.values.shape();
        for r in 0..rows {
            for c in 0..cols {
                let v = self.values[(r, c)];
                if v < 0.0 {
                    return Err(parse_err(r + 2, Some(c + 2), format!("negative intensity {v}")));
                }
            }
        }
        let grid = self.grid()?;
        JointIntensity::new(grid, self.values)
    }
}

pub fn format_grid(grid: &FrequencyGrid, values: &DMatrix<f64>) -> Result<String> {
    if values.shape() != grid.shape() {
        return Err(Error::GridMismatch(format!(
            "matrix shape {:?} does not match grid shape {:?}",
            values.shape(),
            grid.shape()
        )));
    }
    let mut out = String::with_capacity(16 * (values.len() + values.nrows() + values.ncols() + 1));
    out.push_str(GRID_CORNER);
    for &nu in grid.signal_axis() {
        out.push(',');
        out.push_str(&format_number(nu));
    }
    out.push('\n');
    for (r, &nu) in grid.idler_axis().iter().enumerate() {
        out.push_str(&format_number(nu));
        for c in 0..values.ncols() {
            out.push(',');
            out.push_str(&format_number(values[(r, c)]));
        }
        out.push('\n');
    }
    Ok(out)
}

fn parse_cell(cell: &str, row: usize, column: usize) -> Result<f64> {
    let v: f64 = cell
        .trim()
        .parse()
        .map_err(|_| parse_err(row, Some(column), format!("non-numeric cell `{cell}`")))?;
    if !v.is_finite() {
        return Err(parse_err(row, Some(column), format!("non-finite cell `{cell}`")));
    }
    Ok(v)
}

pub fn parse_grid(text: &str) -> Result<GridData> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, None, "empty file"))?;
    let mut head = header.split(',');
    let corner = head.next().unwrap_or_default().trim();
    if corner != GRID_CORNER {
        return Err(parse_err(1, Some(1), format!("expected `{GRID_CORNER}`, found `{corner}`")));
    }
    let signal_axis = head
        .enumerate()
        .map(|(k, cell)| parse_cell(cell, 1, k + 2))
        .collect::<Result<Vec<_>>>()?;
    if signal_axis.is_empty() {
        return Err(parse_err(1, None, "header has no signal frequencies"));
    }
    if let Some(k) = signal_axis.windows(2).position(|w| w[1] <= w[0]) {
        return Err(parse_err(1, Some(k + 3), "signal axis is not strictly ascending"));
    }

    let cols = signal_axis.len();
    let mut idler_axis = Vec::new();
    let mut data = Vec::new();
    for (idx, line) in lines {
        let row = idx + 1;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != cols + 1 {
            return Err(parse_err(
                row,
                None,
                format!("ragged row: expected {} cells, found {}", cols + 1, cells.len()),
            ));
        }
        let nu = parse_cell(cells[0], row, 1)?;
        if let Some(&prev) = idler_axis.last() {
            if nu <= prev {
                return Err(parse_err(row, Some(1), "idler axis is not strictly ascending"));
            }
        }
        idler_axis.push(nu);
        for (k, cell) in cells[1..].iter().enumerate() {
            data.push(parse_cell(cell, row, k + 2)?);
        }
    }
    if idler_axis.is_empty() {
        return Err(parse_err(2, None, "no data rows"));
    }
    let values = DMatrix::from_row_slice(idler_axis.len(), cols, &data);
    Ok(GridData {
        signal_axis,
        idler_axis,
        values,
    })
}

pub fn write_grid_csv(path: impl AsRef<Path>, grid: &FrequencyGrid, values: &DMatrix<f64>) -> Result<()> {
    write_text(path.as_ref(), &format_grid(grid, values)?)
}

pub fn read_grid_csv(path: impl AsRef<Path>) -> Result<GridData> {
    let path = path.as_ref();
    parse_grid(&read_text(path)?).map_err(|e| e.with_path(path))
}

/// Paths of the real and imaginary part files for a JSA prefix.
pub fn jsa_paths(prefix: impl AsRef<Path>) -> (PathBuf, PathBuf) {
    let base = prefix.as_ref().as_os_str().to_owned();
    let mut re = base.clone();
    re.push(".re.csv");
    let mut im = base;
    im.push(".im.csv");
    (PathBuf::from(re), PathBuf::from(im))
}

pub fn write_jsa_csv(prefix: impl AsRef<Path>, jsa: &JointAmplitude) -> Result<()> {
    let (re, im) = jsa_paths(prefix);
    write_grid_csv(re, jsa.grid(), &jsa.values().map(|v| v.re))?;
    write_grid_csv(im, jsa.grid(), &jsa.values().map(|v| v.im))
}

pub fn read_jsa_csv(prefix: impl AsRef<Path>) -> Result<JointAmplitude> {
    let (re_path, im_path) = jsa_paths(prefix);
    let re = read_grid_csv(&re_path)?;
    let im = read_grid_csv(&im_path)?;
    if re.signal_axis != im.signal_axis || re.idler_axis != im.idler_axis {
        return Err(Error::GridMismatch(format!(
            "{} and {} have different axes",
            re_path.display(),
            im_path.display()
        )));
    }
    let grid = re.grid()?;
    let values = re.values.zip_map(&im.values, num_complex::Complex64::new);
    JointAmplitude::new(grid, values)
}

pub fn format_sweep_table(points: &[SweepPoint]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for p in points {
        let cells = [
            p.eta,
            p.delta_tau * 1e12,
            p.q,
            p.purity_true,
            p.purity_flat,
            p.purity_error,
            p.relative_brightness,
        ];
        let line: Vec<String> = cells.iter().map(|&v| format_number(v)).collect();
        let _ = writeln!(out, "{}", line.join(","));
    }
    out
}

fn parse_table(text: &str, header: &str) -> Result<Vec<Vec<f64>>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines.next().ok_or_else(|| parse_err(1, None, "empty file"))?;
    if first.trim() != header {
        return Err(parse_err(1, None, format!("expected header `{header}`")));
    }
    let width = header.split(',').count();
    lines
        .map(|(idx, line)| {
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != width {
                return Err(parse_err(
                    idx + 1,
                    None,
                    format!("ragged row: expected {width} cells, found {}", cells.len()),
                ));
            }
            cells
                .iter()
                .enumerate()
                .map(|(k, c)| parse_cell(c, idx + 1, k + 1))
                .collect()
        })
        .collect()
}

pub fn parse_sweep_table(text: &str) -> Result<Vec<SweepPoint>> {
    Ok(parse_table(text, SWEEP_HEADER)?
        .into_iter()
        .map(|r| SweepPoint {
            eta: r[0],
            delta_tau: r[1] * 1e-12,
            q: r[2],
            purity_true: r[3],
            purity_flat: r[4],
            purity_error: r[5],
            relative_brightness: r[6],
        })
        .collect())
}

pub fn write_sweep_table(path: impl AsRef<Path>, points: &[SweepPoint]) -> Result<()> {
    write_text(path.as_ref(), &format_sweep_table(points))
}

pub fn read_sweep_table(path: impl AsRef<Path>) -> Result<Vec<SweepPoint>> {
    let path = path.as_ref();
    parse_sweep_table(&read_text(path)?).map_err(|e| e.with_path(path))
}

pub fn format_limit_table(rows: &[LimitRow]) -> String {
    let mut out = String::from(LIMIT_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{}",
            format_number(r.ratio),
            format_number(r.purity_true),
            format_number(r.purity_flat)
        );
    }
    out
}

pub fn parse_limit_table(text: &str) -> Result<Vec<LimitRow>> {
    Ok(parse_table(text, LIMIT_HEADER)?
        .into_iter()
        .map(|r| LimitRow {
            ratio: r[0],
            purity_true: r[1],
            purity_flat: r[2],
        })
        .collect())
}

pub fn write_limit_table(path: impl AsRef<Path>, rows: &[LimitRow]) -> Result<()> {
    write_text(path.as_ref(), &format_limit_table(rows))
}

pub fn read_limit_table(path: impl AsRef<Path>) -> Result<Vec<LimitRow>> {
    let path = path.as_ref();
    parse_limit_table(&read_text(path)?).map_err(|e| e.with_path(path))
}

pub fn format_analysis_table(rows: &[AnalysisRow]) -> String {
    let mut out = String::from(ANALYSIS_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{}",
            format_number(r.purity_flat),
            format_number(r.purity_error),
            format_number(r.schmidt_number)
        );
    }
    out
}

pub fn parse_analysis_table(text: &str) -> Result<Vec<AnalysisRow>> {
    Ok(parse_table(text, ANALYSIS_HEADER)?
        .into_iter()
        .map(|r| AnalysisRow {
            purity_flat: r[0],
            purity_error: r[1],
            schmidt_number: r[2],
        })
        .collect())
}

pub fn write_analysis_table(path: impl AsRef<Path>, rows: &[AnalysisRow]) -> Result<()> {
    write_text(path.as_ref(), &format_analysis_table(rows))
}

pub fn read_analysis_table(path: impl AsRef<Path>) -> Result<Vec<AnalysisRow>> {
    let path = path.as_ref();
    parse_analysis_table(&read_text(path)?).map_err(|e| e.with_path(path))
}
