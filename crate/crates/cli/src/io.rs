//! File ingestion and deterministic artifact emission.

use anyhow::{anyhow, bail, Context, Result};
use std::path::{Path, PathBuf};
use tvk_core::field::{AnyField, GridField};
use tvk_core::Mat;

/// Matrix CSV: one row per line, comma-separated entries.
pub fn read_matrix(path: &Path) -> Result<Mat> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row: Result<Vec<f64>> = line
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<f64>()
                    .map_err(|e| anyhow!("{}:{}: bad number {tok:?}: {e}", path.display(), lineno + 1))
            })
            .collect();
        rows.push(row?);
    }
    if rows.is_empty() {
        bail!("{}: empty matrix", path.display());
    }
    Ok(Mat::from_rows(&rows)?)
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| {
        anyhow!("{}:{}:{}: {}", path.display(), e.line(), e.column(), e)
    })
}

/// Deterministic JSON artifact: pretty, stable field order, trailing newline.
pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn json_to_stdout<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string(value)?);
    Ok(())
}

/// Grid sidecar path convention for CSV grids: values.csv + values.meta.json.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta.json")
}

/// A field from disk: full JSON, or a CSV of cell values with its metadata
/// sidecar next to it.
pub fn read_field(path: &Path) -> Result<AnyField> {
    if path.extension().and_then(|e| e.to_str()) == Some("csv") {
        let meta_path = sidecar_path(path);
        let meta: serde_json::Value = read_json(&meta_path)?;
        let text = std::fs::read_to_string(path)?;
        let mut values = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            for tok in line.split(',') {
                values.push(tok.trim().parse::<f64>().with_context(|| format!("bad value {tok:?}"))?);
            }
        }
        let mut obj = meta;
        obj["values"] = serde_json::Value::from(values);
        let grid: GridField = serde_json::from_value(obj)?;
        Ok(AnyField::Grid(grid))
    } else {
        read_json(path)
    }
}

/// Writes a grid as CSV (one cell per line, n columns) plus a sidecar with
/// everything except the values.
pub fn write_grid_csv(prefix: &Path, grid: &GridField) -> Result<(PathBuf, PathBuf)> {
    let csv_path = prefix.with_extension("csv");
    let meta_path = sidecar_path(&csv_path);
    if let Some(dir) = csv_path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let mut out = String::new();
    for idx in 0..grid.cells() {
        let row: Vec<String> = grid.value(idx).iter().map(|v| format!("{v}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    std::fs::write(&csv_path, out)?;
    let mut meta = serde_json::to_value(grid)?;
    meta.as_object_mut().unwrap().remove("values");
    write_json(&meta_path, &meta)?;
    Ok((csv_path, meta_path))
}

/// Sample data CSV for the solver: location, then n value columns per line.
pub fn read_samples(path: &Path) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut locations = Vec::new();
    let mut data = Vec::new();
    let mut n = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split(',').collect();
        if toks.len() < 2 {
            bail!("{}:{}: need a location and at least one value", path.display(), lineno + 1);
        }
        if n == 0 {
            n = toks.len() - 1;
        } else if toks.len() - 1 != n {
            bail!("{}:{}: inconsistent number of value columns", path.display(), lineno + 1);
        }
        locations.push(toks[0].trim().parse::<f64>().with_context(|| format!("line {}", lineno + 1))?);
        for tok in &toks[1..] {
            data.push(tok.trim().parse::<f64>().with_context(|| format!("line {}", lineno + 1))?);
        }
    }
    if locations.is_empty() {
        bail!("{}: no samples", path.display());
    }
    Ok((locations, data, n))
}
