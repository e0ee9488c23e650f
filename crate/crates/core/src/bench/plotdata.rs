//! Converts aggregate CSVs into whitespace-separated column files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::aggregate::AGGREGATE_HEADER;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub label: String,
    pub reference: f64,
    pub sites: f64,
    /// `(shots, median gap, median suffix gap, mean log10 gap, log10 mean gap)`.
    pub points: Vec<[f64; 5]>,
}

fn field(values: &[&str], i: usize, line: usize) -> Result<f64> {
    values[i]
        .parse()
        .map_err(|_| Error::parse(line, format!("bad number '{}'", values[i])))
}

pub fn parse_aggregate(text: &str) -> Result<PlotSeries> {
    let mut lines = text.lines().enumerate();
    let (_, meta) = lines.next().ok_or_else(|| Error::parse(1, "empty aggregate"))?;
    let meta: BTreeMap<&str, &str> = meta
        .strip_prefix('#')
        .ok_or_else(|| Error::parse(1, "missing metadata line"))?
        .split_whitespace()
        .filter_map(|kv| kv.split_once('='))
        .collect();
    let get = |k: &str| meta.get(k).copied().ok_or_else(|| Error::parse(1, format!("metadata lacks '{k}'")));
    let num = |k: &str| -> Result<f64> {
        get(k)?.parse().map_err(|_| Error::parse(1, format!("bad '{k}' value")))
    };
    let reference = num("reference")?;
    let sites = num("sites")?;
    let label = format!("{}_n{}_{}", get("task")?, get("n")?, get("optimizer")?);

    match lines.next() {
        Some((_, h)) if h == AGGREGATE_HEADER => {}
        Some((i, _)) => return Err(Error::parse(i + 1, "unexpected aggregate header")),
        None => return Err(Error::parse(2, "missing aggregate header")),
    }
    let width = AGGREGATE_HEADER.split(',').count();
    let mut points = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let v: Vec<&str> = line.split(',').collect();
        if v.len() != width {
            return Err(Error::parse(i + 1, format!("expected {width} fields, got {}", v.len())));
        }
        let gap = |x: f64| (x - reference) / sites;
        points.push([
            field(&v, 0, i + 1)?,
            gap(field(&v, 3, i + 1)?),
            gap(field(&v, 5, i + 1)?),
            field(&v, 7, i + 1)?,
            field(&v, 8, i + 1)?,
        ]);
    }
    if points.is_empty() {
        return Err(Error::parse(3, "aggregate has no rows"));
    }
    Ok(PlotSeries {
        label,
        reference,
        sites,
        points,
    })
}

pub fn render(series: &PlotSeries) -> String {
    let mut s = format!(
        "# {} reference={} sites={}\n# shots median_gap median_suffix_gap mean_log10_gap log10_mean_gap\n",
        series.label, series.reference, series.sites
    );
    for p in &series.points {
        let _ = writeln!(s, "{} {} {} {} {}", p[0], p[1], p[2], p[3], p[4]);
    }
    s
}

/// Parses every input before writing anything, so a bad input leaves no output.
pub fn export(inputs: &[PathBuf], out_dir: &Path) -> Result<Vec<PathBuf>> {
    if inputs.is_empty() {
        return Err(Error::arg("no aggregate files given"));
    }
    let mut rendered = Vec::with_capacity(inputs.len());
    for p in inputs {
        let text = fs::read_to_string(p)?;
        let series = parse_aggregate(&text)?;
        let mut path = out_dir.join(format!("{}.dat", series.label));
        if rendered.iter().any(|(q, _)| *q == path) {
            path = out_dir.join(format!("{}_{}.dat", series.label, rendered.len()));
        }
        rendered.push((path, render(&series)));
    }
    fs::create_dir_all(out_dir)?;
    for (path, body) in &rendered {
        fs::write(path, body)?;
    }
    Ok(rendered.into_iter().map(|(p, _)| p).collect())
}
