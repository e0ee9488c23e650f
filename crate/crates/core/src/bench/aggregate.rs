//! Shot-bucketed statistics over many runs.

use crate::sglbo::TraceRow;

/// Buckets per decade of the logarithmic shot grid.
const PER_DECADE: u32 = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub shots: u64,
    pub median_cost: f64,
    pub mean_cost: f64,
    pub median_suffix_cost: f64,
    pub mean_suffix_cost: f64,
    /// Mean over runs of `log10(gap)`.
    pub mean_log10_gap: f64,
    /// `log10` of the mean gap.
    pub log10_mean_gap: f64,
}

pub const AGGREGATE_HEADER: &str = "shots,runs_ok,runs_failed,median_cost,mean_cost,median_suffix_cost,mean_suffix_cost,mean_log10_gap,log10_mean_gap";

/// `0`, then `ceil(10^(k/20))` from 100 shots up, ending exactly at `max_shots`.
pub fn shot_grid(max_shots: u64) -> Vec<u64> {
    let mut grid = vec![0];
    let mut k = 2 * PER_DECADE;
    loop {
        let g = 10f64.powf(k as f64 / PER_DECADE as f64).ceil() as u64;
        if g >= max_shots {
            break;
        }
        if g > *grid.last().unwrap() {
            grid.push(g);
        }
        k += 1;
    }
    if max_shots > 0 {
        grid.push(max_shots);
    }
    grid
}

/// The last row recorded at or before `shots`.
pub fn row_at(rows: &[TraceRow], shots: u64) -> Option<&TraceRow> {
    let idx = rows.partition_point(|r| r.cumulative_shots <= shots);
    idx.checked_sub(1).map(|i| &rows[i])
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Mean over sorted values so the result does not depend on run order.
pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.iter().sum::<f64>() / v.len() as f64
}

/// Aggregates successful runs on a common grid. `gap` maps a cost to the
/// positive distance from the reference minimum.
pub fn aggregate(runs: &[&[TraceRow]], gap: impl Fn(f64) -> f64) -> Vec<AggregateRow> {
    let max = runs
        .iter()
        .filter_map(|r| r.last())
        .map(|r| r.cumulative_shots)
        .max()
        .unwrap_or(0);
    shot_grid(max)
        .into_iter()
        .map(|shots| {
            let at: Vec<&TraceRow> = runs.iter().filter_map(|r| row_at(r, shots)).collect();
            let cost: Vec<f64> = at.iter().map(|r| r.cost).collect();
            let suffix: Vec<f64> = at.iter().map(|r| r.suffix_cost).collect();
            let gaps: Vec<f64> = cost.iter().map(|&c| gap(c).max(f64::MIN_POSITIVE)).collect();
            let logs: Vec<f64> = gaps.iter().map(|g| g.log10()).collect();
            AggregateRow {
                shots,
                median_cost: median(&cost),
                mean_cost: mean(&cost),
                median_suffix_cost: median(&suffix),
                mean_suffix_cost: mean(&suffix),
                mean_log10_gap: mean(&logs),
                log10_mean_gap: mean(&gaps).log10(),
            }
        })
        .collect()
}
