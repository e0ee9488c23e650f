//! Adam and NFT comparison optimizers under the same shot accounting as SGLBO.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::RngCore;

use crate::cost::Objective;
use crate::error::{Error, Result};
use crate::gradient::estimate_gradient;
use crate::sglbo::{
    check_alpha, grad_shot_floor, next_grad_shots, suffix_average, Recorder, RunResult, TraceRow,
};

#[derive(Debug, Clone, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Per-component gradient shots when the adaptive strategy is off.
    pub shots: u64,
    /// Norm-test shot schedule instead of fixed shots.
    pub adaptive_shots: bool,
    pub kappa: f64,
    pub s_init: u64,
    /// Report the suffix average instead of the last iterate.
    pub suffix_average: bool,
    pub alpha: f64,
    pub budget: u64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            shots: 1000,
            adaptive_shots: false,
            kappa: 0.99,
            s_init: 2,
            suffix_average: false,
            alpha: 0.1,
            budget: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NftConfig {
    /// Shots per cost evaluation.
    pub shots: u64,
    pub suffix_average: bool,
    pub alpha: f64,
    pub budget: u64,
}

impl Default for NftConfig {
    fn default() -> Self {
        Self {
            shots: 1000,
            suffix_average: false,
            alpha: 0.1,
            budget: 1_000_000,
        }
    }
}

pub fn run_adam<O: Objective + ?Sized>(
    cost: &O,
    config: &AdamConfig,
    theta0: &[f64],
    rng: &mut dyn RngCore,
    observer: &mut dyn FnMut(&TraceRow),
) -> Result<RunResult> {
    if !(config.learning_rate > 0.0) {
        return Err(Error::Config("Adam needs a positive step size".into()));
    }
    if !(0.0..1.0).contains(&config.beta1) || !(0.0..1.0).contains(&config.beta2) {
        return Err(Error::Config("moment decays must lie in [0, 1)".into()));
    }
    check_alpha(config.alpha)?;
    let d = cost.dim();
    if theta0.len() != d {
        return Err(Error::arg(format!("theta0 has {} entries, expected {d}", theta0.len())));
    }
    let start = if config.adaptive_shots {
        config.s_init
    } else {
        config.shots
    };
    if start < 2 {
        return Err(Error::Config("gradient shots must be at least 2".into()));
    }
    let mut s = vec![start; d];
    if config.budget < 2 * start * d as u64 {
        return Err(Error::Config(format!(
            "budget {} is below one gradient evaluation",
            config.budget
        )));
    }

    let mut rec = Recorder::start(cost, config.alpha, theta0, &s, observer)?;
    let mut theta = theta0.to_vec();
    let mut m = vec![0.0; d];
    let mut v = vec![0.0; d];
    let mut t = 0;
    while rec.shots() < config.budget {
        let est = estimate_gradient(cost, &theta, &s, rng)?;
        let k = (t + 1) as i32;
        let c1 = 1.0 - config.beta1.powi(k);
        let c2 = 1.0 - config.beta2.powi(k);
        for i in 0..d {
            let g = est.g_hat[i];
            m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g;
            v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g * g;
            theta[i] -= config.learning_rate * (m[i] / c1) / ((v[i] / c2).sqrt() + config.epsilon);
        }
        rec.record(theta.clone(), est.total_shots, s.clone(), 0, config.learning_rate)?;
        if config.adaptive_shots {
            let floor = grad_shot_floor(rec.history(), t);
            s = next_grad_shots(&est, config.kappa, floor, config.budget);
        }
        t += 1;
    }
    rec.finish(config.suffix_average)
}

/// Wraps an angle into `(-pi, pi]`.
fn wrap_angle(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Angle offset minimizing `b cos x + c sin x`; zero when both vanish.
fn sinusoid_argmin(b: f64, c: f64) -> f64 {
    if b == 0.0 && c == 0.0 {
        0.0
    } else {
        c.atan2(b) + PI
    }
}

/// Coordinate-wise sinusoid fitting: three evaluations per coordinate, then a jump
/// to the fitted minimum.
pub fn run_nft<O: Objective + ?Sized>(
    cost: &O,
    config: &NftConfig,
    theta0: &[f64],
    rng: &mut dyn RngCore,
    observer: &mut dyn FnMut(&TraceRow),
) -> Result<RunResult> {
    check_alpha(config.alpha)?;
    let d = cost.dim();
    if theta0.len() != d || d == 0 {
        return Err(Error::arg(format!("theta0 has {} entries, expected {d}", theta0.len())));
    }
    if config.shots == 0 {
        return Err(Error::Config("NFT needs at least one shot per evaluation".into()));
    }
    if config.budget < 3 * config.shots {
        return Err(Error::Config(format!(
            "budget {} is below one coordinate update",
            config.budget
        )));
    }
    let mut rec = Recorder::start(cost, config.alpha, theta0, &[], observer)?;
    let mut theta = theta0.to_vec();
    let mut i = 0;
    while rec.shots() < config.budget {
        let mut probe = theta.clone();
        let f0 = cost.noisy_query(&probe, config.shots, rng)?;
        probe[i] = theta[i] + FRAC_PI_2;
        let fp = cost.noisy_query(&probe, config.shots, rng)?;
        probe[i] = theta[i] - FRAC_PI_2;
        let fm = cost.noisy_query(&probe, config.shots, rng)?;
        let a = 0.5 * (fp.value + fm.value);
        let c = 0.5 * (fp.value - fm.value);
        let b = f0.value - a;
        let delta = sinusoid_argmin(b, c);
        if delta != 0.0 {
            theta[i] = wrap_angle(theta[i] + delta);
        }
        let spent = f0.shots_used + fp.shots_used + fm.shots_used;
        rec.record(theta.clone(), spent, Vec::new(), config.shots, delta)?;
        i = (i + 1) % d;
    }
    rec.finish(config.suffix_average)
}

/// Suffix average of an existing trace, without further sampling.
pub fn wrap_suffix_average(iterates: &[Vec<f64>], alpha: f64) -> Result<Vec<f64>> {
    suffix_average(iterates, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{Gate, ParamCircuit};
    use crate::cost::{CostFunction, CostQuery, ExactQueries, ShotCounter};
    use crate::pauli::PauliSum;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    struct Bowl(Vec<f64>);

    impl Objective for Bowl {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn exact_value(&self, x: &[f64]) -> Result<f64> {
            Ok(x.iter().zip(&self.0).map(|(a, c)| (a - c).powi(2)).sum())
        }
        fn noisy_query(&self, x: &[f64], shots: u64, _: &mut dyn RngCore) -> Result<CostQuery> {
            Ok(CostQuery {
                value: self.exact_value(x)?,
                shots_used: shots,
            })
        }
        fn single_shot_estimates(&self, x: &[f64], shots: u64, _: &mut dyn RngCore) -> Result<Vec<f64>> {
            Ok(vec![self.exact_value(x)?; shots as usize])
        }
        fn operator_norm(&self) -> f64 {
            1.0
        }
    }

    // The shift rule on a quadratic returns the true gradient scaled by pi/2.
    #[test]
    fn adam_converges_on_quadratic() {
        let bowl = Bowl(vec![0.3, -0.2]);
        let config = AdamConfig {
            budget: 500 * 2 * 2 * 1000,
            learning_rate: 0.05,
            ..AdamConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let mut costs = Vec::new();
        let r = run_adam(&bowl, &config, &[1.0, 1.0], &mut rng, &mut |row| costs.push(row.cost)).unwrap();
        assert_eq!(r.trace.iterates.len(), 501);
        assert!(bowl.exact_value(&r.final_point).unwrap() < 1e-3);
        assert!(r.trace.cumulative_shots.iter().enumerate().all(|(k, &c)| c == (k as u64 + 1) * 4000));
    }

    #[test]
    fn adam_small_step_descends_after_warmup() {
        let bowl = Bowl(vec![0.3, -0.2]);
        let config = AdamConfig {
            budget: 200 * 2 * 2 * 1000,
            learning_rate: 0.001,
            ..AdamConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(62);
        let mut costs = Vec::new();
        run_adam(&bowl, &config, &[1.0, 1.0], &mut rng, &mut |row| costs.push(row.cost)).unwrap();
        assert!(costs[10..].windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn adaptive_shots_stay_at_floor_for_exact_cost() {
        let bowl = Bowl(vec![0.3, -0.2]);
        let config = AdamConfig {
            budget: 400,
            adaptive_shots: true,
            ..AdamConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(63);
        let r = run_adam(&bowl, &config, &[1.0, 1.0], &mut rng, &mut |_| {}).unwrap();
        assert!(r.trace.s_grad_history.iter().flatten().all(|&s| s == 2));
        assert_eq!(r.total_shots, 400);
    }

    fn rx_z() -> CostFunction {
        let c = ParamCircuit::new(1, vec![Gate::Rx { qubit: 0, param: 0 }]).unwrap();
        CostFunction::vqe(c, PauliSum::parse_text("1 Z").unwrap()).unwrap()
    }

    #[test]
    fn nft_single_rotation_lands_on_minimum() {
        let f = ExactQueries(rx_z());
        let config = NftConfig {
            budget: 3000,
            ..NftConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(64);
        let r = run_nft(&f, &config, &[0.0], &mut rng, &mut |_| {}).unwrap();
        assert!((r.final_point[0] - PI).abs() < 1e-9);
        assert_eq!(r.total_shots, 3000);
    }

    #[test]
    fn nft_flat_coordinate_is_kept() {
        struct Flat;
        impl Objective for Flat {
            fn dim(&self) -> usize {
                1
            }
            fn exact_value(&self, _: &[f64]) -> Result<f64> {
                Ok(0.25)
            }
            fn noisy_query(&self, _: &[f64], shots: u64, _: &mut dyn RngCore) -> Result<CostQuery> {
                Ok(CostQuery { value: 0.25, shots_used: shots })
            }
            fn single_shot_estimates(&self, _: &[f64], s: u64, _: &mut dyn RngCore) -> Result<Vec<f64>> {
                Ok(vec![0.25; s as usize])
            }
            fn operator_norm(&self) -> f64 {
                1.0
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(65);
        let r = run_nft(&Flat, &NftConfig { budget: 6000, ..NftConfig::default() }, &[0.7], &mut rng, &mut |_| {}).unwrap();
        assert_eq!(r.final_point, vec![0.7]);
    }

    #[test]
    fn nft_exact_updates_never_increase_cost() {
        let c = crate::circuit::build_ansatz(3, 2).unwrap();
        let obs = crate::pauli::tfim_hamiltonian(3, 1.0, 1.5).unwrap();
        let f = ExactQueries(CostFunction::vqe(c, obs).unwrap());
        let counted = ShotCounter::new(&f);
        let theta0 = vec![0.3; f.dim()];
        let mut rng = ChaCha8Rng::seed_from_u64(66);
        let mut costs = Vec::new();
        let r = run_nft(&counted, &NftConfig { budget: 60 * 3000, ..NftConfig::default() }, &theta0, &mut rng, &mut |row| costs.push(row.cost)).unwrap();
        assert!(costs.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        assert_eq!(counted.shots(), r.total_shots);
        assert_eq!(r.total_shots, 60 * 3000);
    }

    #[test]
    fn angle_helpers() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert_eq!(sinusoid_argmin(0.0, 0.0), 0.0);
        assert!((sinusoid_argmin(1.0, 0.0) - PI).abs() < 1e-15);
    }

    #[test]
    fn suffix_wrapper_matches_examples() {
        let its: Vec<Vec<f64>> = (0..10).map(|k| vec![k as f64]).collect();
        assert_eq!(wrap_suffix_average(&its, 0.1).unwrap(), vec![9.0]);
        assert_eq!(wrap_suffix_average(&its, 1.0).unwrap(), vec![4.5]);
        let four = vec![vec![0.0, 0.0], vec![2.0, 2.0], vec![4.0, 4.0], vec![6.0, 6.0]];
        assert_eq!(wrap_suffix_average(&four, 0.5).unwrap(), vec![5.0, 5.0]);
    }
}
