//! The SGLBO iteration: sampled gradients, line Bayesian optimization along
//! them, norm-test shot adaptation and suffix averaging.

use std::f64::consts::PI;

use rand::RngCore;

use crate::cost::Objective;
use crate::error::{Error, Result};
use crate::gradient::{estimate_gradient, GradientEstimate};
use crate::linebo::{line_bo, LineBoConfig};

/// Iterations over which `G_grad` averages past shot sizes.
pub const SHOT_HISTORY: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct SglboConfig {
    /// Norm-test precision, in `[0, 1)`.
    pub kappa: f64,
    /// Suffix-average fraction, in `(0, 1]`.
    pub alpha: f64,
    /// Line-search bound scale: `eta_max = min(beta / ||H||, pi)`.
    pub beta: f64,
    pub budget: u64,
    pub s_init: u64,
    /// Cost-estimation precision; sets the `||H||^2 / epsilon^2` floor on cost shots.
    pub epsilon: f64,
    pub line: LineBoConfig,
}

impl Default for SglboConfig {
    fn default() -> Self {
        Self {
            kappa: 0.99,
            alpha: 0.1,
            beta: 3.0,
            budget: 1_000_000,
            s_init: 2,
            epsilon: 0.1,
            line: LineBoConfig::default(),
        }
    }
}

impl SglboConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.kappa) {
            return Err(Error::Config(format!("kappa {} outside [0, 1)", self.kappa)));
        }
        check_alpha(self.alpha)?;
        if !(self.beta > 0.0) || !(self.epsilon > 0.0) {
            return Err(Error::Config("beta and epsilon must be positive".into()));
        }
        if self.s_init < 2 {
            return Err(Error::Config("initial shot size must be at least 2".into()));
        }
        if self.line.n_init + self.line.n_eval == 0 {
            return Err(Error::Config("line search needs evaluations".into()));
        }
        Ok(())
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("alpha {alpha} outside (0, 1]")))
    }
}

/// One progress record: the iterate after `t` updates.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: usize,
    pub cumulative_shots: u64,
    /// Noiseless exact cost at the iterate.
    pub cost: f64,
    /// Noiseless exact cost at the suffix average of the iterates so far.
    pub suffix_cost: f64,
    pub s_grad_mean: f64,
    pub s_cost: u64,
    pub eta: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunTrace {
    /// `theta^(0)` through the final update.
    pub iterates: Vec<Vec<f64>>,
    /// Cumulative shots after each update (one entry per update).
    pub cumulative_shots: Vec<u64>,
    pub s_grad_history: Vec<Vec<u64>>,
    pub s_cost_history: Vec<u64>,
    pub eta_history: Vec<f64>,
    pub rows: Vec<TraceRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub suffix_average: Vec<f64>,
    pub final_point: Vec<f64>,
    pub trace: RunTrace,
    pub total_shots: u64,
}

/// `min(beta / ||H||, pi)`.
pub fn eta_max_for(operator_norm: f64, beta: f64) -> f64 {
    if operator_norm <= 0.0 {
        PI
    } else {
        (beta / operator_norm).min(PI)
    }
}

/// `G_grad`: 1 for `t <= 10`, otherwise the rounded-up mean shot size over all
/// components of the last ten iterations.
pub fn grad_shot_floor(history: &[Vec<u64>], t: usize) -> u64 {
    if t <= SHOT_HISTORY {
        return 1;
    }
    let recent = &history[history.len().saturating_sub(SHOT_HISTORY)..];
    let (sum, count) = recent
        .iter()
        .flatten()
        .fold((0u128, 0u128), |(s, c), &v| (s + v as u128, c + 1));
    if count == 0 {
        1
    } else {
        sum.div_ceil(count) as u64
    }
}

/// Norm-test forecast `max(ceil(S_i^2 D / (kappa^2 ||g||^2)), G_grad)`, floored at 2
/// and capped at `cap`.
pub fn next_grad_shots(est: &GradientEstimate, kappa: f64, floor: u64, cap: u64) -> Vec<u64> {
    let d = est.g_hat.len() as f64;
    let g2 = est.g_hat.iter().map(|g| g * g).sum::<f64>();
    let lower = floor.max(2);
    est.emp_std
        .iter()
        .map(|&s| {
            let forecast = if g2 > 0.0 {
                (s * s * d / (kappa * kappa * g2)).ceil()
            } else {
                0.0
            };
            // `as` saturates, so huge forecasts land on the cap.
            (forecast as u64).max(lower).min(cap.max(lower))
        })
        .collect()
}

/// `max(ceil(mean(s)), ceil(||H||^2 / epsilon^2))`.
pub fn next_cost_shots(s: &[u64], operator_norm: f64, epsilon: f64) -> u64 {
    let mean = if s.is_empty() {
        0
    } else {
        (s.iter().map(|&v| v as u128).sum::<u128>()).div_ceil(s.len() as u128) as u64
    };
    let floor = (operator_norm * operator_norm / (epsilon * epsilon)).ceil() as u64;
    mean.max(floor)
}

/// Mean of the last `max(1, ceil(alpha T))` iterates.
pub fn suffix_average(iterates: &[Vec<f64>], alpha: f64) -> Result<Vec<f64>> {
    check_alpha(alpha).map_err(|_| Error::arg(format!("alpha {alpha} outside (0, 1]")))?;
    let t = iterates.len();
    if t == 0 {
        return Err(Error::arg("no iterates to average"));
    }
    let m = ((alpha * t as f64).ceil() as usize).clamp(1, t);
    let mut avg = vec![0.0; iterates[0].len()];
    for x in &iterates[t - m..] {
        for (a, v) in avg.iter_mut().zip(x) {
            *a += v;
        }
    }
    for a in &mut avg {
        *a /= m as f64;
    }
    Ok(avg)
}

/// Shared bookkeeping for optimizer traces.
pub(crate) struct Recorder<'a, O: ?Sized> {
    cost: &'a O,
    alpha: f64,
    trace: RunTrace,
    observer: &'a mut dyn FnMut(&TraceRow),
}

impl<'a, O: Objective + ?Sized> Recorder<'a, O> {
    pub(crate) fn start(
        cost: &'a O,
        alpha: f64,
        theta0: &[f64],
        s_init: &[u64],
        observer: &'a mut dyn FnMut(&TraceRow),
    ) -> Result<Self> {
        let mut r = Self {
            cost,
            alpha,
            trace: RunTrace::default(),
            observer,
        };
        r.trace.iterates.push(theta0.to_vec());
        let c = cost.noiseless_value(theta0)?;
        r.emit(TraceRow {
            t: 0,
            cumulative_shots: 0,
            cost: c,
            suffix_cost: c,
            s_grad_mean: mean_u64(s_init),
            s_cost: 0,
            eta: 0.0,
        });
        Ok(r)
    }

    fn emit(&mut self, row: TraceRow) {
        (self.observer)(&row);
        self.trace.rows.push(row);
    }

    pub(crate) fn shots(&self) -> u64 {
        self.trace.cumulative_shots.last().copied().unwrap_or(0)
    }

    pub(crate) fn record(
        &mut self,
        theta: Vec<f64>,
        spent: u64,
        s_grad: Vec<u64>,
        s_cost: u64,
        eta: f64,
    ) -> Result<()> {
        let cumulative = self.shots() + spent;
        let cost = self.cost.noiseless_value(&theta)?;
        self.trace.iterates.push(theta);
        let avg = suffix_average(&self.trace.iterates, self.alpha)?;
        let suffix_cost = self.cost.noiseless_value(&avg)?;
        let row = TraceRow {
            t: self.trace.iterates.len() - 1,
            cumulative_shots: cumulative,
            cost,
            suffix_cost,
            s_grad_mean: mean_u64(&s_grad),
            s_cost,
            eta,
        };
        self.trace.cumulative_shots.push(cumulative);
        self.trace.s_grad_history.push(s_grad);
        self.trace.s_cost_history.push(s_cost);
        self.trace.eta_history.push(eta);
        self.emit(row);
        Ok(())
    }

    pub(crate) fn history(&self) -> &[Vec<u64>] {
        &self.trace.s_grad_history
    }

    pub(crate) fn finish(self, use_suffix: bool) -> Result<RunResult> {
        let final_point = self.trace.iterates.last().cloned().expect("theta0 recorded");
        let suffix = if use_suffix {
            suffix_average(&self.trace.iterates, self.alpha)?
        } else {
            final_point.clone()
        };
        Ok(RunResult {
            suffix_average: suffix,
            final_point,
            total_shots: self.shots(),
            trace: self.trace,
        })
    }
}

fn mean_u64(v: &[u64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().map(|&x| x as f64).sum::<f64>() / v.len() as f64
    }
}

/// Runs SGLBO until the cumulative shot count reaches `config.budget`.
pub fn run_sglbo<O: Objective + ?Sized>(
    cost: &O,
    config: &SglboConfig,
    theta0: &[f64],
    rng: &mut dyn RngCore,
    observer: &mut dyn FnMut(&TraceRow),
) -> Result<RunResult> {
    config.validate()?;
    let d = cost.dim();
    if theta0.len() != d {
        return Err(Error::arg(format!("theta0 has {} entries, expected {d}", theta0.len())));
    }
    let norm = cost.operator_norm();
    let evals = (config.line.n_init + config.line.n_eval) as u64;
    let mut s = vec![config.s_init; d];
    let first = 2 * config.s_init * d as u64 + evals * next_cost_shots(&s, norm, config.epsilon);
    if config.budget < first {
        return Err(Error::Config(format!(
            "budget {} is below one iteration ({first} shots)",
            config.budget
        )));
    }
    let eta_max = eta_max_for(norm, config.beta);
    let mut rec = Recorder::start(cost, config.alpha, theta0, &s, observer)?;
    let mut theta = theta0.to_vec();
    let mut t = 0;
    while rec.shots() < config.budget {
        let s_cost = next_cost_shots(&s, norm, config.epsilon);
        let est = estimate_gradient(cost, &theta, &s, rng)?;
        let (next, spent_cost, eta) = if est.norm() > 0.0 {
            let r = line_bo(cost, &theta, &est.g_hat, eta_max, s_cost, &config.line, rng)?;
            (r.next_point, r.shots_used, r.eta_star)
        } else {
            (theta.clone(), 0, 0.0)
        };
        let recorded_cost = if spent_cost > 0 { s_cost } else { 0 };
        rec.record(next.clone(), est.total_shots + spent_cost, s.clone(), recorded_cost, eta)?;
        theta = next;
        let floor = grad_shot_floor(rec.history(), t);
        s = next_grad_shots(&est, config.kappa, floor, config.budget);
        t += 1;
    }
    rec.finish(true)
}
