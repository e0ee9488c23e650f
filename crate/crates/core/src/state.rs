//! Statevector simulation and finite-shot Pauli measurements.

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::RngCore;

use crate::circuit::{Gate, ParamCircuit};
use crate::error::{Error, Result};
use crate::pauli::{PauliOp, PauliString, PauliSum};

/// Largest register simulated as a statevector.
pub const MAX_STATE_QUBITS: usize = 24;

pub(crate) type Mat2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub(crate) fn rx_matrix(theta: f64) -> Mat2 {
    let (s, c) = (theta / 2.0).sin_cos();
    [
        [Complex64::new(c, 0.0), Complex64::new(0.0, -s)],
        [Complex64::new(0.0, -s), Complex64::new(c, 0.0)],
    ]
}

pub(crate) fn rz_matrix(theta: f64) -> Mat2 {
    let (s, c) = (theta / 2.0).sin_cos();
    [
        [Complex64::new(c, -s), ZERO],
        [ZERO, Complex64::new(c, s)],
    ]
}

/// Unitary mapping the eigenbasis of `op` onto the computational basis
/// (`H` for X, `H S^dagger` for Y, identity otherwise).
pub(crate) fn basis_change(op: PauliOp) -> Option<Mat2> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match op {
        PauliOp::X => Some([
            [Complex64::new(h, 0.0), Complex64::new(h, 0.0)],
            [Complex64::new(h, 0.0), Complex64::new(-h, 0.0)],
        ]),
        PauliOp::Y => Some([
            [Complex64::new(h, 0.0), Complex64::new(0.0, -h)],
            [Complex64::new(h, 0.0), Complex64::new(0.0, h)],
        ]),
        PauliOp::I | PauliOp::Z => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>` on `n` qubits.
    pub fn zero(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_STATE_QUBITS {
            return Err(Error::Resource(format!(
                "statevector size {n} outside 1..={MAX_STATE_QUBITS}"
            )));
        }
        let mut amplitudes = vec![ZERO; 1 << n];
        amplitudes[0] = ONE;
        Ok(Self { n, amplitudes })
    }

    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::arg("amplitude count must be a power of two >= 2"));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::arg(format!("state is not normalized (|psi|^2 = {norm})")));
        }
        Ok(Self {
            n: len.trailing_zeros() as usize,
            amplitudes,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub(crate) fn apply_1q(&mut self, u: &Mat2, qubit: usize) {
        let stride = 1usize << (self.n - 1 - qubit);
        let dim = self.amplitudes.len();
        let mut base = 0;
        while base < dim {
            for i in base..base + stride {
                let a0 = self.amplitudes[i];
                let a1 = self.amplitudes[i + stride];
                self.amplitudes[i] = u[0][0] * a0 + u[0][1] * a1;
                self.amplitudes[i + stride] = u[1][0] * a0 + u[1][1] * a1;
            }
            base += 2 * stride;
        }
    }

    pub(crate) fn apply_cnot(&mut self, control: usize, target: usize) {
        let cbit = 1usize << (self.n - 1 - control);
        let tbit = 1usize << (self.n - 1 - target);
        for i in 0..self.amplitudes.len() {
            if i & cbit != 0 && i & tbit == 0 {
                self.amplitudes.swap(i, i | tbit);
            }
        }
    }

    fn apply_gate(&mut self, gate: &Gate, theta: &[f64], sign: f64) {
        match *gate {
            Gate::Rx { qubit, param } => self.apply_1q(&rx_matrix(sign * theta[param]), qubit),
            Gate::Rz { qubit, param } => self.apply_1q(&rz_matrix(sign * theta[param]), qubit),
            Gate::Cnot { control, target } => self.apply_cnot(control, target),
        }
    }

    /// Applies `U(theta)`.
    pub fn apply_circuit(&mut self, circuit: &ParamCircuit, theta: &[f64]) -> Result<()> {
        self.check_circuit(circuit, theta)?;
        for g in circuit.gates() {
            self.apply_gate(g, theta, 1.0);
        }
        Ok(())
    }

    /// Applies `U(theta)^dagger`: gates reversed with negated angles.
    pub fn apply_circuit_adjoint(&mut self, circuit: &ParamCircuit, theta: &[f64]) -> Result<()> {
        self.check_circuit(circuit, theta)?;
        for g in circuit.gates().iter().rev() {
            self.apply_gate(g, theta, -1.0);
        }
        Ok(())
    }

    fn check_circuit(&self, circuit: &ParamCircuit, theta: &[f64]) -> Result<()> {
        if circuit.num_qubits() != self.n {
            return Err(Error::arg(format!(
                "circuit acts on {} qubits, state has {}",
                circuit.num_qubits(),
                self.n
            )));
        }
        circuit.check_params(theta)
    }

    /// `<psi| P |psi>` for one Pauli string.
    pub fn pauli_expectation(&self, string: &PauliString) -> Result<f64> {
        if string.num_qubits() != self.n {
            return Err(Error::arg("Pauli string size does not match the state"));
        }
        let m = string.masks();
        let value: Complex64 = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| self.amplitudes[i ^ m.x].conj() * m.phase(i) * a)
            .sum();
        Ok(value.re)
    }

    /// `<psi| O |psi>`; the imaginary residue of a Hermitian sum is discarded.
    pub fn expectation(&self, sum: &PauliSum) -> Result<f64> {
        if sum.num_qubits() != self.n {
            return Err(Error::arg(format!(
                "observable acts on {} qubits, state has {}",
                sum.num_qubits(),
                self.n
            )));
        }
        let mut total = 0.0;
        for (c, p) in sum.terms() {
            total += c * self.pauli_expectation(p)?;
        }
        Ok(total)
    }

    /// Computational-basis probabilities after rotating into the eigenbasis of `string`.
    pub fn rotated_probabilities(&self, string: &PauliString) -> Vec<f64> {
        let mut rotated = self.clone();
        for (q, &op) in string.ops().iter().enumerate() {
            if let Some(u) = basis_change(op) {
                rotated.apply_1q(&u, q);
            }
        }
        rotated.probabilities()
    }

    /// Measures `string` shot by shot; each outcome is the product of the +-1
    /// eigenvalues over the non-identity positions.
    pub fn sample_pauli(
        &self,
        string: &PauliString,
        shots: u64,
        rng: &mut dyn RngCore,
    ) -> Result<Vec<i8>> {
        if shots == 0 {
            return Err(Error::arg("shots must be positive"));
        }
        if string.num_qubits() != self.n {
            return Err(Error::arg("Pauli string size does not match the state"));
        }
        if string.is_identity() {
            return Ok(vec![1; shots as usize]);
        }
        let support = support_mask(string);
        let dist = WeightedIndex::new(self.rotated_probabilities(string))
            .map_err(|e| Error::Numeric(format!("outcome distribution: {e}")))?;
        Ok((0..shots)
            .map(|_| parity_sign(dist.sample(rng), support))
            .collect())
    }
}

/// Bits of the qubits on which `string` acts non-trivially.
pub(crate) fn support_mask(string: &PauliString) -> usize {
    let n = string.num_qubits();
    string
        .ops()
        .iter()
        .enumerate()
        .filter(|(_, &op)| op != PauliOp::I)
        .fold(0, |m, (q, _)| m | (1 << (n - 1 - q)))
}

#[inline]
pub(crate) fn parity_sign(outcome: usize, support: usize) -> i8 {
    if (outcome & support).count_ones() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// `U(theta)|0...0>`.
pub fn simulate_state(circuit: &ParamCircuit, theta: &[f64]) -> Result<StateVector> {
    let mut state = StateVector::zero(circuit.num_qubits())?;
    state.apply_circuit(circuit, theta)?;
    Ok(state)
}
