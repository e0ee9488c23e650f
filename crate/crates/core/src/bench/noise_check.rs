//! Sanity checks of a noise table against the density-matrix simulator.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::build_ansatz;
use crate::cost::{CostFunction, Objective};
use crate::density::{simulate_density, MAX_DENSITY_QUBITS};
use crate::error::Result;
use crate::noise::NoiseModel;

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseReport {
    pub qubits: usize,
    pub trials: usize,
    pub max_trace_error: f64,
    pub max_hermiticity_error: f64,
    pub min_eigenvalue: f64,
    /// Exact VQC cost at the target point under the noise model.
    pub vqc_cost_at_target: f64,
}

/// Simulates `trials` random ansatz instances with noise on the first
/// `min(device, 6)` qubits and reports how physical the resulting states are.
pub fn noise_check(model: &NoiseModel, r: usize, trials: usize, seed: u64) -> Result<NoiseReport> {
    let n = model.num_qubits().min(MAX_DENSITY_QUBITS);
    let circuit = build_ansatz(n, r)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = NoiseReport {
        qubits: n,
        trials,
        max_trace_error: 0.0,
        max_hermiticity_error: 0.0,
        min_eigenvalue: f64::INFINITY,
        vqc_cost_at_target: 0.0,
    };
    for _ in 0..trials {
        let theta: Vec<f64> = (0..circuit.num_params()).map(|_| rng.random_range(-PI..=PI)).collect();
        let rho = simulate_density(&circuit, &theta, model)?;
        report.max_trace_error = report.max_trace_error.max((rho.trace().re - 1.0).abs());
        report.max_hermiticity_error = report.max_hermiticity_error.max(rho.hermiticity_error());
        let low = rho.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        report.min_eigenvalue = report.min_eigenvalue.min(low);
    }
    let target = vec![0.0; circuit.num_params()];
    let cost = CostFunction::vqc(circuit, target.clone())?.with_noise(model.clone())?;
    report.vqc_cost_at_target = cost.exact_value(&target)?;
    Ok(report)
}

pub fn render(model: &NoiseModel, report: &NoiseReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "qubits: {}", model.num_qubits());
    for q in 0..model.num_qubits() {
        let _ = writeln!(
            s,
            "  q{q}: single {:e}  readout {:e}",
            model.single_qubit_rate(q),
            model.readout_error(q)
        );
    }
    for &(a, b) in model.coupling() {
        let _ = writeln!(
            s,
            "  cnot q{a}-q{b}: {:e} / {:e}",
            model.cnot_rate(a, b).unwrap_or(f64::NAN),
            model.cnot_rate(b, a).unwrap_or(f64::NAN)
        );
    }
    let _ = writeln!(s, "simulated qubits: {}", report.qubits);
    let _ = writeln!(s, "random circuits: {}", report.trials);
    let _ = writeln!(s, "max |tr(rho) - 1|: {:e}", report.max_trace_error);
    let _ = writeln!(s, "max hermiticity error: {:e}", report.max_hermiticity_error);
    let _ = writeln!(s, "min eigenvalue: {:e}", report.min_eigenvalue);
    let _ = writeln!(s, "vqc cost at target: {}", report.vqc_cost_at_target);
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_device_stays_physical() {
        let model = NoiseModel::default_device();
        let r = noise_check(&model, 1, 3, 1).unwrap();
        assert_eq!(r.qubits, 5);
        assert!(r.max_trace_error < 1e-12);
        assert!(r.max_hermiticity_error < 1e-12);
        assert!(r.min_eigenvalue > -1e-12);
        assert!(r.vqc_cost_at_target > 0.0 && r.vqc_cost_at_target < 0.2);
    }

    #[test]
    fn noiseless_table_gives_zero_cost() {
        let model = NoiseModel::uniform(3, 0.0, 0.0, 0.0).unwrap();
        let r = noise_check(&model, 2, 1, 2).unwrap();
        assert!(r.vqc_cost_at_target.abs() < 1e-12);
    }
}
