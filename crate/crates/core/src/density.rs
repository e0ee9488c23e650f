//! Density-matrix simulation for noisy circuits.

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, RngCore};

use crate::circuit::{Gate, ParamCircuit};
use crate::error::{Error, Result};
use crate::noise::{apply_gate_noise, NoiseModel};
use crate::pauli::PauliString;
use crate::state::{basis_change, rx_matrix, rz_matrix, Mat2, StateVector};

/// Largest register simulated as a density matrix (4^n entries).
pub const MAX_DENSITY_QUBITS: usize = 6;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    dim: usize,
    /// Row-major `dim x dim` entries.
    data: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn zero_state(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_DENSITY_QUBITS {
            return Err(Error::Resource(format!(
                "density matrix for {n} qubits outside 1..={MAX_DENSITY_QUBITS}"
            )));
        }
        let dim = 1 << n;
        let mut data = vec![ZERO; dim * dim];
        data[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n, dim, data })
    }

    /// `|psi><psi|`.
    pub fn from_pure(state: &StateVector) -> Self {
        let a = state.amplitudes();
        let dim = a.len();
        let mut data = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                data.push(a[r] * a[c].conj());
            }
        }
        Self {
            n: state.num_qubits(),
            dim,
            data,
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Largest `|rho_ij - conj(rho_ji)|`.
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.dim {
            for c in r..self.dim {
                worst = worst.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        worst
    }

    pub fn frobenius_distance(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let m = nalgebra::DMatrix::from_row_slice(self.dim, self.dim, &self.data);
        nalgebra::SymmetricEigen::new(m).eigenvalues.iter().copied().collect()
    }

    /// Computational-basis probabilities (the real diagonal, clamped at 0).
    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i).re.max(0.0)).collect()
    }

    /// Probabilities after rotating into the eigenbasis of `string`.
    pub fn rotated_probabilities(&self, string: &PauliString) -> Vec<f64> {
        let mut rotated = self.clone();
        for (q, &op) in string.ops().iter().enumerate() {
            if let Some(u) = basis_change(op) {
                rotated.apply_1q(&u, q);
            }
        }
        rotated.probabilities()
    }

    /// `rho -> U rho U^dagger` for a single-qubit `U`.
    pub(crate) fn apply_1q(&mut self, u: &Mat2, qubit: usize) {
        let dim = self.dim;
        let bit = 1usize << (self.n - 1 - qubit);
        for r0 in (0..dim).filter(|r| r & bit == 0) {
            let r1 = r0 | bit;
            for c in 0..dim {
                let a = self.data[r0 * dim + c];
                let b = self.data[r1 * dim + c];
                self.data[r0 * dim + c] = u[0][0] * a + u[0][1] * b;
                self.data[r1 * dim + c] = u[1][0] * a + u[1][1] * b;
            }
        }
        let ud = [
            [u[0][0].conj(), u[0][1].conj()],
            [u[1][0].conj(), u[1][1].conj()],
        ];
        for r in 0..dim {
            let row = &mut self.data[r * dim..(r + 1) * dim];
            for c0 in (0..dim).filter(|c| c & bit == 0) {
                let c1 = c0 | bit;
                let a = row[c0];
                let b = row[c1];
                row[c0] = a * ud[0][0] + b * ud[0][1];
                row[c1] = a * ud[1][0] + b * ud[1][1];
            }
        }
    }

    pub(crate) fn apply_cnot(&mut self, control: usize, target: usize) {
        let cbit = 1usize << (self.n - 1 - control);
        let tbit = 1usize << (self.n - 1 - target);
        let perm = |i: usize| if i & cbit != 0 { i ^ tbit } else { i };
        let dim = self.dim;
        let mut out = vec![ZERO; dim * dim];
        for r in 0..dim {
            let pr = perm(r);
            for c in 0..dim {
                out[pr * dim + perm(c)] = self.data[r * dim + c];
            }
        }
        self.data = out;
    }

    fn apply_gate(&mut self, gate: &Gate, theta: &[f64], sign: f64) {
        match *gate {
            Gate::Rx { qubit, param } => self.apply_1q(&rx_matrix(sign * theta[param]), qubit),
            Gate::Rz { qubit, param } => self.apply_1q(&rz_matrix(sign * theta[param]), qubit),
            Gate::Cnot { control, target } => self.apply_cnot(control, target),
        }
    }

    /// With probability `p` the qubit is replaced by the maximally mixed state.
    pub fn depolarize_1q(&mut self, qubit: usize, p: f64) {
        if p == 0.0 {
            return;
        }
        let dim = self.dim;
        let bit = 1usize << (self.n - 1 - qubit);
        let old = self.data.clone();
        for r in 0..dim {
            for c in 0..dim {
                let idx = r * dim + c;
                if (r & bit) == (c & bit) {
                    self.data[idx] =
                        old[idx] * (1.0 - p / 2.0) + old[(r ^ bit) * dim + (c ^ bit)] * (p / 2.0);
                } else {
                    self.data[idx] = old[idx] * (1.0 - p);
                }
            }
        }
    }

    /// With probability `p` the pair is replaced by the two-qubit maximally mixed state.
    pub fn depolarize_2q(&mut self, q1: usize, q2: usize, p: f64) {
        if p == 0.0 {
            return;
        }
        let dim = self.dim;
        let b1 = 1usize << (self.n - 1 - q1);
        let b2 = 1usize << (self.n - 1 - q2);
        let mask = b1 | b2;
        let old = self.data.clone();
        for r in 0..dim {
            for c in 0..dim {
                let idx = r * dim + c;
                let mut v = old[idx] * (1.0 - p);
                if (r & mask) == (c & mask) {
                    let (rb, cb) = (r & !mask, c & !mask);
                    let traced: Complex64 = [0, b1, b2, mask]
                        .iter()
                        .map(|&s| old[(rb | s) * dim + (cb | s)])
                        .sum();
                    v += traced * (p / 4.0);
                }
                self.data[idx] = v;
            }
        }
    }

    /// Applies the circuit gate by gate, each followed by its noise channel.
    /// With `adjoint`, gates run in reverse order with negated angles.
    pub fn apply_circuit(
        &mut self,
        circuit: &ParamCircuit,
        theta: &[f64],
        noise: Option<&NoiseModel>,
        adjoint: bool,
    ) -> Result<()> {
        if circuit.num_qubits() != self.n {
            return Err(Error::arg("circuit and density matrix sizes differ"));
        }
        circuit.check_params(theta)?;
        if let Some(m) = noise {
            m.check_register(self.n)?;
        }
        let sign = if adjoint { -1.0 } else { 1.0 };
        let mut step = |g: &Gate| -> Result<()> {
            self.apply_gate(g, theta, sign);
            if let Some(m) = noise {
                apply_gate_noise(self, g, m)?;
            }
            Ok(())
        };
        if adjoint {
            circuit.gates().iter().rev().try_for_each(&mut step)
        } else {
            circuit.gates().iter().try_for_each(&mut step)
        }
    }
}

/// Noisy `U(theta)` on `|0...0><0...0|`.
pub fn simulate_density(
    circuit: &ParamCircuit,
    theta: &[f64],
    noise: &NoiseModel,
) -> Result<DensityMatrix> {
    let mut rho = DensityMatrix::zero_state(circuit.num_qubits())?;
    rho.apply_circuit(circuit, theta, Some(noise), false)?;
    Ok(rho)
}

/// Flips bit of qubit `j` with probability `errors[j]`.
pub(crate) fn apply_readout(
    outcome: usize,
    n: usize,
    errors: &[f64],
    rng: &mut dyn RngCore,
) -> usize {
    let mut out = outcome;
    for (q, &e) in errors.iter().take(n).enumerate() {
        if e > 0.0 && rng.random::<f64>() < e {
            out ^= 1 << (n - 1 - q);
        }
    }
    out
}

/// Samples computational-basis outcomes (qubit 0 is the most significant bit),
/// then applies each qubit's readout assignment error independently.
pub fn sample_with_readout(
    rho: &DensityMatrix,
    shots: u64,
    noise: &NoiseModel,
    rng: &mut dyn RngCore,
) -> Result<Vec<usize>> {
    if shots == 0 {
        return Err(Error::arg("shots must be positive"));
    }
    noise.check_register(rho.num_qubits())?;
    let dist = WeightedIndex::new(rho.probabilities())
        .map_err(|e| Error::Numeric(format!("outcome distribution: {e}")))?;
    let errors = noise.readout_errors();
    Ok((0..shots)
        .map(|_| apply_readout(dist.sample(rng), rho.num_qubits(), errors, rng))
        .collect())
}
