//! VQE and VQC cost functions with exact and finite-shot evaluation.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::RngCore;

use crate::circuit::ParamCircuit;
use crate::density::{apply_readout, DensityMatrix, MAX_DENSITY_QUBITS};
use crate::error::{Error, Result};
use crate::noise::NoiseModel;
use crate::pauli::{PauliOp, PauliString, PauliSum};
use crate::state::{parity_sign, support_mask, StateVector};

/// Result of one finite-shot cost estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostQuery {
    pub value: f64,
    pub shots_used: u64,
}

/// Anything the optimizers can minimize: exact evaluation plus shot-sampled estimates.
pub trait Objective: Send + Sync {
    /// Number of circuit parameters `D`.
    fn dim(&self) -> usize;

    fn exact_value(&self, theta: &[f64]) -> Result<f64>;

    /// Exact value on a noiseless simulator. Used for reporting progress.
    fn noiseless_value(&self, theta: &[f64]) -> Result<f64> {
        self.exact_value(theta)
    }

    fn noisy_query(&self, theta: &[f64], shots: u64, rng: &mut dyn RngCore) -> Result<CostQuery>;

    /// Per-shot unbiased estimates of the cost.
    fn single_shot_estimates(
        &self,
        theta: &[f64],
        shots: u64,
        rng: &mut dyn RngCore,
    ) -> Result<Vec<f64>>;

    /// Scale `||H||` of the cost, used to bound line searches and cost shot counts.
    fn operator_norm(&self) -> f64;
}

impl<T: Objective + ?Sized> Objective for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn exact_value(&self, theta: &[f64]) -> Result<f64> {
        (**self).exact_value(theta)
    }
    fn noiseless_value(&self, theta: &[f64]) -> Result<f64> {
        (**self).noiseless_value(theta)
    }
    fn noisy_query(&self, theta: &[f64], shots: u64, rng: &mut dyn RngCore) -> Result<CostQuery> {
        (**self).noisy_query(theta, shots, rng)
    }
    fn single_shot_estimates(
        &self,
        theta: &[f64],
        shots: u64,
        rng: &mut dyn RngCore,
    ) -> Result<Vec<f64>> {
        (**self).single_shot_estimates(theta, shots, rng)
    }
    fn operator_norm(&self) -> f64 {
        (**self).operator_norm()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CostKind {
    /// Energy `<psi(theta)| H |psi(theta)>`.
    Vqe { observable: PauliSum },
    /// `1 - (1/n) sum_j Pr[qubit j reads 0]` on `U(theta)^dagger U(target)|0>`.
    Vqc { target: Vec<f64> },
}

#[derive(Debug, Clone)]
pub struct CostFunction {
    circuit: ParamCircuit,
    kind: CostKind,
    noise: Option<NoiseModel>,
    norm: f64,
    /// `U(target)|0>` for VQC, noiseless and (if noise is attached) noisy.
    target_state: Option<StateVector>,
    target_density: Option<DensityMatrix>,
}

enum Prepared {
    Pure(StateVector),
    Mixed(DensityMatrix),
}

impl Prepared {
    fn probabilities(&self) -> Vec<f64> {
        match self {
            Prepared::Pure(s) => s.probabilities(),
            Prepared::Mixed(r) => r.probabilities(),
        }
    }

    fn rotated_probabilities(&self, string: &PauliString) -> Vec<f64> {
        match self {
            Prepared::Pure(s) => s.rotated_probabilities(string),
            Prepared::Mixed(r) => r.rotated_probabilities(string),
        }
    }
}

fn outcome_distribution(probs: Vec<f64>) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(probs).map_err(|e| Error::Numeric(format!("outcome distribution: {e}")))
}

/// Groups Pauli terms by measurement basis so that terms sharing a basis
/// share one outcome distribution.
fn basis_key(string: &PauliString) -> Vec<u8> {
    string
        .ops()
        .iter()
        .map(|op| match op {
            PauliOp::X => 1,
            PauliOp::Y => 2,
            PauliOp::I | PauliOp::Z => 0,
        })
        .collect()
}

fn zero_fraction(outcome: usize, n: usize) -> f64 {
    (n as u32 - (outcome & ((1 << n) - 1)).count_ones()) as f64 / n as f64
}

struct TermSampler {
    dists: Vec<WeightedIndex<f64>>,
    /// Per term: distribution index and support mask; `None` for identity terms.
    terms: Vec<Option<(usize, usize)>>,
}

impl TermSampler {
    fn new(observable: &PauliSum, state: &Prepared) -> Result<Self> {
        let mut keys: Vec<Vec<u8>> = Vec::new();
        let mut dists = Vec::new();
        let mut terms = Vec::with_capacity(observable.len());
        for (_, p) in observable.terms() {
            if p.is_identity() {
                terms.push(None);
                continue;
            }
            let key = basis_key(p);
            let idx = match keys.iter().position(|k| *k == key) {
                Some(i) => i,
                None => {
                    dists.push(outcome_distribution(state.rotated_probabilities(p))?);
                    keys.push(key);
                    dists.len() - 1
                }
            };
            terms.push(Some((idx, support_mask(p))));
        }
        Ok(Self { dists, terms })
    }

    fn measure(
        &self,
        term: usize,
        n: usize,
        readout: Option<&[f64]>,
        rng: &mut dyn RngCore,
    ) -> f64 {
        match self.terms[term] {
            None => 1.0,
            Some((d, support)) => {
                let mut outcome = self.dists[d].sample(rng);
                if let Some(errors) = readout {
                    outcome = apply_readout(outcome, n, errors, rng);
                }
                parity_sign(outcome, support) as f64
            }
        }
    }
}

impl CostFunction {
    pub fn vqe(circuit: ParamCircuit, observable: PauliSum) -> Result<Self> {
        if observable.num_qubits() != circuit.num_qubits() {
            return Err(Error::arg(format!(
                "observable acts on {} qubits, circuit on {}",
                observable.num_qubits(),
                circuit.num_qubits()
            )));
        }
        if observable.is_empty() {
            return Err(Error::arg("observable has no terms"));
        }
        let norm = observable.operator_norm()?.value;
        Ok(Self {
            circuit,
            kind: CostKind::Vqe { observable },
            noise: None,
            norm,
            target_state: None,
            target_density: None,
        })
    }

    pub fn vqc(circuit: ParamCircuit, target: Vec<f64>) -> Result<Self> {
        circuit.check_params(&target)?;
        let mut state = StateVector::zero(circuit.num_qubits())?;
        state.apply_circuit(&circuit, &target)?;
        Ok(Self {
            circuit,
            kind: CostKind::Vqc { target },
            noise: None,
            norm: 1.0,
            target_state: Some(state),
            target_density: None,
        })
    }

    /// Attaches gate and readout noise; switches evaluation to density matrices.
    pub fn with_noise(mut self, noise: NoiseModel) -> Result<Self> {
        let n = self.circuit.num_qubits();
        noise.check_register(n)?;
        if n > MAX_DENSITY_QUBITS {
            return Err(Error::Resource(format!(
                "noisy simulation limited to {MAX_DENSITY_QUBITS} qubits, got {n}"
            )));
        }
        if let CostKind::Vqc { target } = &self.kind {
            let mut rho = DensityMatrix::zero_state(n)?;
            rho.apply_circuit(&self.circuit, target, Some(&noise), false)?;
            self.target_density = Some(rho);
        }
        self.noise = Some(noise);
        Ok(self)
    }

    /// The same cost without its noise model.
    pub fn noiseless(&self) -> Self {
        let mut c = self.clone();
        c.noise = None;
        c.target_density = None;
        c
    }

    pub fn circuit(&self) -> &ParamCircuit {
        &self.circuit
    }

    pub fn kind(&self) -> &CostKind {
        &self.kind
    }

    pub fn noise(&self) -> Option<&NoiseModel> {
        self.noise.as_ref()
    }

    fn num_qubits(&self) -> usize {
        self.circuit.num_qubits()
    }

    fn prepare(&self, theta: &[f64], noisy: bool) -> Result<Prepared> {
        self.circuit.check_params(theta)?;
        let noise = if noisy { self.noise.as_ref() } else { None };
        match (&self.kind, noise) {
            (CostKind::Vqe { .. }, None) => {
                let mut s = StateVector::zero(self.num_qubits())?;
                s.apply_circuit(&self.circuit, theta)?;
                Ok(Prepared::Pure(s))
            }
            (CostKind::Vqe { .. }, Some(m)) => {
                let mut r = DensityMatrix::zero_state(self.num_qubits())?;
                r.apply_circuit(&self.circuit, theta, Some(m), false)?;
                Ok(Prepared::Mixed(r))
            }
            (CostKind::Vqc { .. }, None) => {
                let mut s = self.target_state.clone().expect("VQC target state cached");
                s.apply_circuit_adjoint(&self.circuit, theta)?;
                Ok(Prepared::Pure(s))
            }
            (CostKind::Vqc { .. }, Some(m)) => {
                let mut r = self.target_density.clone().expect("noisy VQC target cached");
                r.apply_circuit(&self.circuit, theta, Some(m), true)?;
                Ok(Prepared::Mixed(r))
            }
        }
    }

    fn value_of(&self, state: &Prepared) -> f64 {
        let n = self.num_qubits();
        match (&self.kind, state) {
            (CostKind::Vqe { observable }, Prepared::Pure(s)) => {
                s.expectation(observable).expect("sizes checked at construction")
            }
            (CostKind::Vqe { observable }, Prepared::Mixed(_)) => observable
                .terms()
                .iter()
                .map(|(c, p)| {
                    if p.is_identity() {
                        return *c;
                    }
                    let support = support_mask(p);
                    let e: f64 = state
                        .rotated_probabilities(p)
                        .iter()
                        .enumerate()
                        .map(|(i, pr)| pr * parity_sign(i, support) as f64)
                        .sum();
                    c * e
                })
                .sum(),
            (CostKind::Vqc { .. }, _) => {
                let probs = state.probabilities();
                let expected_zeros: f64 = probs
                    .iter()
                    .enumerate()
                    .map(|(i, p)| p * zero_fraction(i, n))
                    .sum();
                (1.0 - expected_zeros).clamp(0.0, 1.0)
            }
        }
    }

    fn readout(&self) -> Option<&[f64]> {
        self.noise.as_ref().map(|m| m.readout_errors())
    }

    fn check_shots(shots: u64) -> Result<()> {
        if shots == 0 {
            Err(Error::arg("shots must be at least 1"))
        } else {
            Ok(())
        }
    }
}

impl Objective for CostFunction {
    fn dim(&self) -> usize {
        self.circuit.num_params()
    }

    /// With noise attached this is the noisy expectation (readout excluded).
    fn exact_value(&self, theta: &[f64]) -> Result<f64> {
        Ok(self.value_of(&self.prepare(theta, true)?))
    }

    fn noiseless_value(&self, theta: &[f64]) -> Result<f64> {
        Ok(self.value_of(&self.prepare(theta, false)?))
    }

    fn noisy_query(&self, theta: &[f64], shots: u64, rng: &mut dyn RngCore) -> Result<CostQuery> {
        Self::check_shots(shots)?;
        let state = self.prepare(theta, true)?;
        let n = self.num_qubits();
        let value = match &self.kind {
            CostKind::Vqe { observable } => {
                let alloc = observable.allocate_shots(shots, rng)?;
                let sampler = TermSampler::new(observable, &state)?;
                let w = observable.l1_norm();
                // Importance-weighted: c_k / p_k = sign(c_k) * W per shot.
                let mut acc = 0.0;
                for (k, (&count, (c, _))) in alloc.counts.iter().zip(observable.terms()).enumerate()
                {
                    let mut sum = 0.0;
                    for _ in 0..count {
                        sum += sampler.measure(k, n, self.readout(), rng);
                    }
                    acc += c.signum() * sum;
                }
                w * acc / shots as f64
            }
            CostKind::Vqc { .. } => {
                let dist = outcome_distribution(state.probabilities())?;
                let mut zeros = 0.0;
                for _ in 0..shots {
                    let mut o = dist.sample(rng);
                    if let Some(errors) = self.readout() {
                        o = apply_readout(o, n, errors, rng);
                    }
                    zeros += zero_fraction(o, n);
                }
                1.0 - zeros / shots as f64
            }
        };
        Ok(CostQuery {
            value,
            shots_used: shots,
        })
    }

    fn single_shot_estimates(
        &self,
        theta: &[f64],
        shots: u64,
        rng: &mut dyn RngCore,
    ) -> Result<Vec<f64>> {
        Self::check_shots(shots)?;
        let state = self.prepare(theta, true)?;
        let n = self.num_qubits();
        match &self.kind {
            CostKind::Vqe { observable } => {
                let w = observable.l1_norm();
                let picker = outcome_distribution(
                    observable.terms().iter().map(|(c, _)| c.abs()).collect(),
                )?;
                let sampler = TermSampler::new(observable, &state)?;
                Ok((0..shots)
                    .map(|_| {
                        let k = picker.sample(rng);
                        let o = sampler.measure(k, n, self.readout(), rng);
                        observable.terms()[k].0.signum() * w * o
                    })
                    .collect())
            }
            CostKind::Vqc { .. } => {
                let dist = outcome_distribution(state.probabilities())?;
                Ok((0..shots)
                    .map(|_| {
                        let mut o = dist.sample(rng);
                        if let Some(errors) = self.readout() {
                            o = apply_readout(o, n, errors, rng);
                        }
                        1.0 - zero_fraction(o, n)
                    })
                    .collect())
            }
        }
    }

    fn operator_norm(&self) -> f64 {
        self.norm
    }
}

/// Counts every shot requested from the wrapped objective.
#[derive(Debug)]
pub struct ShotCounter<O> {
    inner: O,
    shots: AtomicU64,
}

impl<O: Objective> ShotCounter<O> {
    pub fn new(inner: O) -> Self {
        Self {
            inner,
            shots: AtomicU64::new(0),
        }
    }

    pub fn shots(&self) -> u64 {
        self.shots.load(Ordering::Relaxed)
    }

    pub fn into_inner(self) -> O {
        self.inner
    }
}

impl<O: Objective> Objective for ShotCounter<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn exact_value(&self, theta: &[f64]) -> Result<f64> {
        self.inner.exact_value(theta)
    }
    fn noiseless_value(&self, theta: &[f64]) -> Result<f64> {
        self.inner.noiseless_value(theta)
    }
    fn noisy_query(&self, theta: &[f64], shots: u64, rng: &mut dyn RngCore) -> Result<CostQuery> {
        let q = self.inner.noisy_query(theta, shots, rng)?;
        self.shots.fetch_add(q.shots_used, Ordering::Relaxed);
        Ok(q)
    }
    fn single_shot_estimates(
        &self,
        theta: &[f64],
        shots: u64,
        rng: &mut dyn RngCore,
    ) -> Result<Vec<f64>> {
        let v = self.inner.single_shot_estimates(theta, shots, rng)?;
        self.shots.fetch_add(v.len() as u64, Ordering::Relaxed);
        Ok(v)
    }
    fn operator_norm(&self) -> f64 {
        self.inner.operator_norm()
    }
}

/// Replaces every sampled estimate by the exact value (shots are still counted).
#[derive(Debug, Clone)]
pub struct ExactQueries<O>(pub O);

impl<O: Objective> Objective for ExactQueries<O> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn exact_value(&self, theta: &[f64]) -> Result<f64> {
        self.0.exact_value(theta)
    }
    fn noiseless_value(&self, theta: &[f64]) -> Result<f64> {
        self.0.noiseless_value(theta)
    }
    fn noisy_query(&self, theta: &[f64], shots: u64, _rng: &mut dyn RngCore) -> Result<CostQuery> {
        CostFunction::check_shots(shots)?;
        Ok(CostQuery {
            value: self.0.exact_value(theta)?,
            shots_used: shots,
        })
    }
    fn single_shot_estimates(
        &self,
        theta: &[f64],
        shots: u64,
        _rng: &mut dyn RngCore,
    ) -> Result<Vec<f64>> {
        CostFunction::check_shots(shots)?;
        Ok(vec![self.0.exact_value(theta)?; shots as usize])
    }
    fn operator_norm(&self) -> f64 {
        self.0.operator_norm()
    }
}
