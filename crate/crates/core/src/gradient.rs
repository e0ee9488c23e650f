//! Parameter-shift gradients.

use std::f64::consts::FRAC_PI_2;

use rand::RngCore;

use crate::cost::Objective;
use crate::error::{Error, Result};

/// Shot-sampled gradient with per-component statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate {
    pub g_hat: Vec<f64>,
    pub s_per_component: Vec<u64>,
    /// Sample standard deviation of the per-shot gradient values.
    pub emp_std: Vec<f64>,
    /// `2 * sum(s_per_component)`.
    pub total_shots: u64,
}

impl GradientEstimate {
    pub fn norm(&self) -> f64 {
        self.g_hat.iter().map(|g| g * g).sum::<f64>().sqrt()
    }
}

fn shifted(theta: &[f64], i: usize, delta: f64) -> Vec<f64> {
    let mut t = theta.to_vec();
    t[i] += delta;
    t
}

/// `(f(theta + pi/2 e_i) - f(theta - pi/2 e_i)) / 2` for every component.
pub fn exact_gradient<O: Objective + ?Sized>(cost: &O, theta: &[f64]) -> Result<Vec<f64>> {
    (0..theta.len())
        .map(|i| {
            let plus = cost.exact_value(&shifted(theta, i, FRAC_PI_2))?;
            let minus = cost.exact_value(&shifted(theta, i, -FRAC_PI_2))?;
            Ok((plus - minus) / 2.0)
        })
        .collect()
}

/// Draws `s[i]` paired single-shot values at `theta +- pi/2 e_i`.
pub fn estimate_gradient<O: Objective + ?Sized>(
    cost: &O,
    theta: &[f64],
    s: &[u64],
    rng: &mut dyn RngCore,
) -> Result<GradientEstimate> {
    if s.len() != theta.len() {
        return Err(Error::arg(format!(
            "{} shot sizes for {} parameters",
            s.len(),
            theta.len()
        )));
    }
    if let Some(i) = s.iter().position(|&si| si < 2) {
        return Err(Error::arg(format!(
            "component {i} has {} shots; at least 2 are needed",
            s[i]
        )));
    }
    let mut g_hat = Vec::with_capacity(s.len());
    let mut emp_std = Vec::with_capacity(s.len());
    for (i, &si) in s.iter().enumerate() {
        let plus = cost.single_shot_estimates(&shifted(theta, i, FRAC_PI_2), si, rng)?;
        let minus = cost.single_shot_estimates(&shifted(theta, i, -FRAC_PI_2), si, rng)?;
        let diffs: Vec<f64> = plus.iter().zip(&minus).map(|(p, m)| (p - m) / 2.0).collect();
        let mean = diffs.iter().sum::<f64>() / si as f64;
        let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (si - 1) as f64;
        g_hat.push(mean);
        emp_std.push(var.sqrt());
    }
    Ok(GradientEstimate {
        g_hat,
        s_per_component: s.to_vec(),
        emp_std,
        total_shots: 2 * s.iter().sum::<u64>(),
    })
}
