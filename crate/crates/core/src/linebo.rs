//! Bayesian optimization of the step size along the estimated gradient direction.

use rand::{Rng, RngCore};

use crate::cost::Objective;
use crate::error::{Error, Result};
use crate::gp::{
    argmin_closest_to_zero, fit_hyperparams, posterior_mean, symmetric_grid, thompson_pick,
    GpBounds, GpDataset, GpHyperparams,
};

#[derive(Debug, Clone, PartialEq)]
pub struct LineBoConfig {
    pub n_init: usize,
    pub n_eval: usize,
    /// Thompson-sampling candidate grid size.
    pub candidates: usize,
    /// Grid size for the final predictive-mean argmin.
    pub final_grid: usize,
    pub restarts: usize,
    pub bounds: GpBounds,
}

impl Default for LineBoConfig {
    fn default() -> Self {
        Self {
            n_init: 5,
            n_eval: 5,
            candidates: 101,
            final_grid: 1001,
            restarts: 10,
            bounds: GpBounds::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineBoResult {
    pub eta_star: f64,
    pub next_point: Vec<f64>,
    pub shots_used: u64,
    pub dataset: GpDataset,
    pub hyperparams: GpHyperparams,
}

fn step(theta: &[f64], g_hat: &[f64], eta: f64) -> Vec<f64> {
    theta.iter().zip(g_hat).map(|(t, g)| t - eta * g).collect()
}

fn centered(data: &GpDataset) -> GpDataset {
    let mean = data.values.iter().sum::<f64>() / data.len() as f64;
    GpDataset {
        points: data.points.clone(),
        values: data.values.iter().map(|v| v - mean).collect(),
    }
}

/// Searches `eta in [-eta_max, eta_max]` for the minimum of `f(theta - eta g_hat)`
/// with `s_cost` shots per evaluation.
pub fn line_bo<O: Objective + ?Sized>(
    cost: &O,
    theta: &[f64],
    g_hat: &[f64],
    eta_max: f64,
    s_cost: u64,
    config: &LineBoConfig,
    rng: &mut dyn RngCore,
) -> Result<LineBoResult> {
    if theta.len() != g_hat.len() {
        return Err(Error::arg("direction and point differ in length"));
    }
    if g_hat.iter().all(|&g| g == 0.0) {
        return Err(Error::arg("search direction is zero"));
    }
    if s_cost == 0 || config.n_init == 0 {
        return Err(Error::arg("line search needs shots and at least one initial point"));
    }
    if !(eta_max > 0.0 && eta_max.is_finite()) {
        return Err(Error::arg(format!("invalid step bound {eta_max}")));
    }

    let mut data = GpDataset {
        points: Vec::with_capacity(config.n_init + config.n_eval),
        values: Vec::with_capacity(config.n_init + config.n_eval),
    };
    let mut shots = 0;
    let mut evaluate = |eta: f64, data: &mut GpDataset, rng: &mut dyn RngCore| -> Result<()> {
        let q = cost.noisy_query(&step(theta, g_hat, eta), s_cost, rng)?;
        shots += q.shots_used;
        data.push(eta, q.value);
        Ok(())
    };

    evaluate(0.0, &mut data, rng)?;
    for _ in 1..config.n_init {
        let eta = rng.random_range(-eta_max..=eta_max);
        evaluate(eta, &mut data, rng)?;
    }
    let candidates = symmetric_grid(eta_max, config.candidates);
    for _ in 0..config.n_eval {
        let c = centered(&data);
        let hp = fit_hyperparams(&c, &config.bounds, config.restarts, rng)?;
        let eta = thompson_pick(&c, &hp, &candidates, rng)?;
        evaluate(eta, &mut data, rng)?;
    }

    let c = centered(&data);
    let hp = fit_hyperparams(&c, &config.bounds, config.restarts, rng)?;
    let grid = symmetric_grid(eta_max, config.final_grid);
    let mean = posterior_mean(&c, &hp, &grid)?;
    let eta_star = argmin_closest_to_zero(&grid, &mean);
    Ok(LineBoResult {
        eta_star,
        next_point: step(theta, g_hat, eta_star),
        shots_used: shots,
        dataset: data,
        hyperparams: hp,
    })
}
