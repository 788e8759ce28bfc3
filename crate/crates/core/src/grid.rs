//! Uniform rectangular grids read from CSV, with bilinear interpolation.

use std::ops::{Add, Mul};
use std::path::Path;

use crate::error::{Error, Result};
use crate::vec2::Vec2;

/// Samples on `x0 + i dx`, `y0 + j dy`, stored with x varying fastest.
#[derive(Debug, Clone)]
pub struct UniformGrid<T> {
    pub x0: f64,
    pub y0: f64,
    pub dx: f64,
    pub dy: f64,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<T>,
}

impl<T> UniformGrid<T>
where
    T: Copy + Add<Output = T> + Mul<f64, Output = T>,
{
    /// Builds the grid from scattered `(x, y, value)` rows, in any order.
    pub fn from_rows(rows: &[(f64, f64, T)]) -> Result<Self> {
        if rows.len() < 4 {
            return Err(Error::InvalidInput("a tabulated grid needs at least 2x2 samples".into()));
        }
        let xs = distinct_sorted(rows.iter().map(|r| r.0));
        let ys = distinct_sorted(rows.iter().map(|r| r.1));
        let (nx, ny) = (xs.len(), ys.len());
        if nx < 2 || ny < 2 || nx * ny != rows.len() {
            return Err(Error::InvalidInput(format!(
                "tabulated samples do not form a full grid: {nx} x {ny} nodes but {} rows",
                rows.len()
            )));
        }
        let dx = uniform_step(&xs, "x")?;
        let dy = uniform_step(&ys, "y")?;
        let (x0, y0) = (xs[0], ys[0]);
        let mut slots: Vec<Option<T>> = vec![None; nx * ny];
        for &(x, y, v) in rows {
            let i = ((x - x0) / dx).round() as usize;
            let j = ((y - y0) / dy).round() as usize;
            let slot = &mut slots[j * nx + i];
            if slot.is_some() {
                return Err(Error::InvalidInput(format!("duplicate grid node ({x}, {y})")));
            }
            *slot = Some(v);
        }
        let values = slots.into_iter().map(|v| v.unwrap()).collect();
        Ok(Self { x0, y0, dx, dy, nx, ny, values })
    }

    pub fn node(&self, i: usize, j: usize) -> Vec2 {
        Vec2::new(self.x0 + i as f64 * self.dx, self.y0 + j as f64 * self.dy)
    }

    pub fn at(&self, i: usize, j: usize) -> T {
        self.values[j * self.nx + i]
    }

    pub fn x_max(&self) -> f64 {
        self.x0 + (self.nx - 1) as f64 * self.dx
    }

    pub fn y_max(&self) -> f64 {
        self.y0 + (self.ny - 1) as f64 * self.dy
    }

    pub fn contains(&self, p: Vec2) -> bool {
        let slack = 1e-12 * (self.dx + self.dy);
        p.x >= self.x0 - slack
            && p.x <= self.x_max() + slack
            && p.y >= self.y0 - slack
            && p.y <= self.y_max() + slack
    }

    /// Bilinear interpolation; returns the stored sample exactly at a node.
    pub fn interpolate(&self, p: Vec2) -> Option<T> {
        if !self.contains(p) {
            return None;
        }
        let (i, tx) = cell(p.x, self.x0, self.dx, self.nx);
        let (j, ty) = cell(p.y, self.y0, self.dy, self.ny);
        if tx == 0.0 && ty == 0.0 {
            return Some(self.at(i, j));
        }
        let v00 = self.at(i, j);
        let v10 = self.at(i + 1, j);
        let v01 = self.at(i, j + 1);
        let v11 = self.at(i + 1, j + 1);
        Some(
            v00 * ((1.0 - tx) * (1.0 - ty))
                + v10 * (tx * (1.0 - ty))
                + v01 * ((1.0 - tx) * ty)
                + v11 * (tx * ty),
        )
    }
}

/// Index of the lower-left node and the fractional offset, snapped to nodes.
fn cell(x: f64, x0: f64, dx: f64, n: usize) -> (usize, f64) {
    let s = (x - x0) / dx;
    let nearest = s.round();
    if (s - nearest).abs() < 1e-9 {
        let k = (nearest.max(0.0) as usize).min(n - 1);
        return if k == n - 1 { (n - 2, 1.0) } else { (k, 0.0) };
    }
    let k = (s.floor().max(0.0) as usize).min(n - 2);
    (k, (s - k as f64).clamp(0.0, 1.0))
}

fn distinct_sorted(it: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = it.collect();
    v.sort_by(|a, b| a.total_cmp(b));
    let mut out: Vec<f64> = Vec::new();
    for x in v {
        match out.last() {
            Some(&last) if (x - last).abs() <= 1e-9 * (1.0 + x.abs()) => {}
            _ => out.push(x),
        }
    }
    out
}

fn uniform_step(nodes: &[f64], axis: &str) -> Result<f64> {
    let step = (nodes[nodes.len() - 1] - nodes[0]) / (nodes.len() - 1) as f64;
    for (k, &x) in nodes.iter().enumerate() {
        if (x - (nodes[0] + k as f64 * step)).abs() > 1e-6 * step {
            return Err(Error::InvalidInput(format!(
                "tabulated {axis} nodes are not uniformly spaced near {x}"
            )));
        }
    }
    Ok(step)
}

/// Reads a headed CSV of floats, checking the header names.
pub fn read_csv(path: &Path, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    let found: Vec<String> = reader
        .headers()
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_owned)
        .collect();
    if found != header {
        return Err(Error::InvalidInput(format!(
            "{}: expected header {:?}, found {:?}",
            path.display(),
            header,
            found
        )));
    }
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
        let row = record
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| {
                Error::InvalidInput(format!("{}: row {}: {e}", path.display(), line + 2))
            })?;
        rows.push(row);
    }
    Ok(rows)
}
