//! Pauli strings, weighted Pauli sums and shot allocation across terms.
//!
//! Qubit `q` of an `n`-qubit register maps to bit `n - 1 - q` of a basis-state
//! index, so the first label character is the leftmost Kronecker factor.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};

/// Largest register for which dense matrices and exact norms are computed.
pub const MAX_DENSE_QUBITS: usize = 12;

const NORM_TOLERANCE: f64 = 1e-9;
const NORM_MAX_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PauliOp {
    I,
    X,
    Y,
    Z,
}

impl PauliOp {
    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(PauliOp::I),
            'X' => Some(PauliOp::X),
            'Y' => Some(PauliOp::Y),
            'Z' => Some(PauliOp::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            PauliOp::I => 'I',
            PauliOp::X => 'X',
            PauliOp::Y => 'Y',
            PauliOp::Z => 'Z',
        }
    }
}

/// Tensor product of single-qubit Pauli operators.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    ops: Vec<PauliOp>,
}

impl PauliString {
    pub fn new(ops: Vec<PauliOp>) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::arg("Pauli string must act on at least one qubit"));
        }
        Ok(Self { ops })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new(vec![PauliOp::I; n])
    }

    /// Builds a string with the given operators at the listed qubits and identity elsewhere.
    pub fn from_sparse(n: usize, factors: &[(usize, PauliOp)]) -> Result<Self> {
        let mut ops = vec![PauliOp::I; n];
        for &(q, op) in factors {
            if q >= n {
                return Err(Error::arg(format!("qubit {q} out of range for n={n}")));
            }
            ops[q] = op;
        }
        Self::new(ops)
    }

    pub fn num_qubits(&self) -> usize {
        self.ops.len()
    }

    pub fn ops(&self) -> &[PauliOp] {
        &self.ops
    }

    pub fn is_identity(&self) -> bool {
        self.ops.iter().all(|&p| p == PauliOp::I)
    }

    pub fn label(&self) -> String {
        self.ops.iter().map(|p| p.as_char()).collect()
    }

    /// Bit masks describing the action on basis states:
    /// `P|i> = i^{n_y} (-1)^{popcount(i & z_mask)} |i ^ x_mask>`.
    pub(crate) fn masks(&self) -> PauliMasks {
        let n = self.ops.len();
        let mut m = PauliMasks::default();
        for (q, op) in self.ops.iter().enumerate() {
            let bit = 1usize << (n - 1 - q);
            match op {
                PauliOp::I => {}
                PauliOp::X => m.x |= bit,
                PauliOp::Y => {
                    m.x |= bit;
                    m.z |= bit;
                    m.n_y += 1;
                }
                PauliOp::Z => m.z |= bit,
            }
        }
        m
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let ops = s
            .chars()
            .map(|c| {
                PauliOp::from_char(c)
                    .ok_or_else(|| Error::arg(format!("invalid Pauli label '{c}' in '{s}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(ops)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct PauliMasks {
    pub x: usize,
    pub z: usize,
    pub n_y: u32,
}

impl PauliMasks {
    /// Phase picked up by basis state `i`.
    #[inline]
    pub fn phase(&self, i: usize) -> Complex64 {
        let sign = if (i & self.z).count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        let base = match self.n_y % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
        base * sign
    }
}

/// Real-weighted sum of Pauli strings on a common register.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    n: usize,
    terms: Vec<(f64, PauliString)>,
}

impl PauliSum {
    /// Builds a sum, merging duplicate strings (first occurrence keeps its position).
    pub fn new(n: usize, terms: Vec<(f64, PauliString)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::arg("Pauli sum needs at least one qubit"));
        }
        let mut merged: Vec<(f64, PauliString)> = Vec::with_capacity(terms.len());
        let mut index: HashMap<PauliString, usize> = HashMap::new();
        for (c, p) in terms {
            if p.num_qubits() != n {
                return Err(Error::arg(format!(
                    "term {p} has {} qubits, expected {n}",
                    p.num_qubits()
                )));
            }
            if !c.is_finite() {
                return Err(Error::arg(format!("non-finite coefficient for term {p}")));
            }
            match index.get(&p) {
                Some(&k) => merged[k].0 += c,
                None => {
                    index.insert(p.clone(), merged.len());
                    merged.push((c, p));
                }
            }
        }
        Ok(Self { n, terms: merged })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `sum_k |c_k|`, the trivial upper bound on the operator norm.
    pub fn l1_norm(&self) -> f64 {
        self.terms.iter().map(|(c, _)| c.abs()).sum()
    }

    /// Dense `2^n x 2^n` matrix.
    pub fn dense_matrix(&self) -> Result<DMatrix<Complex64>> {
        if self.n > MAX_DENSE_QUBITS {
            return Err(Error::Resource(format!(
                "dense matrix for {} qubits exceeds the {MAX_DENSE_QUBITS}-qubit cap",
                self.n
            )));
        }
        let dim = 1usize << self.n;
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for (c, p) in &self.terms {
            let masks = p.masks();
            for i in 0..dim {
                m[(i ^ masks.x, i)] += masks.phase(i) * *c;
            }
        }
        Ok(m)
    }

    /// Matrix-free product `out = O v`.
    pub fn apply(&self, v: &[Complex64], out: &mut [Complex64]) {
        debug_assert_eq!(v.len(), 1usize << self.n);
        out.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
        for (c, p) in &self.terms {
            let masks = p.masks();
            for (i, amp) in v.iter().enumerate() {
                out[i ^ masks.x] += masks.phase(i) * *amp * *c;
            }
        }
    }

    /// Operator norm: power iteration for `n <= 12`, otherwise the `sum |c_k|` bound.
    pub fn operator_norm(&self) -> Result<OperatorNorm> {
        if self.n > MAX_DENSE_QUBITS {
            return Ok(OperatorNorm {
                value: self.l1_norm(),
                upper_bound: true,
            });
        }
        let dim = 1usize << self.n;
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0f_4a11);
        let mut v: Vec<Complex64> = (0..dim)
            .map(|_| {
                let re = (rng.next_u32() as f64 / u32::MAX as f64) - 0.5;
                let im = (rng.next_u32() as f64 / u32::MAX as f64) - 0.5;
                Complex64::new(re, im)
            })
            .collect();
        normalize(&mut v);
        let mut w = vec![Complex64::new(0.0, 0.0); dim];
        let mut previous = f64::INFINITY;
        for _ in 0..NORM_MAX_ITERATIONS {
            self.apply(&v, &mut w);
            let lambda = norm(&w);
            if lambda == 0.0 {
                return Ok(OperatorNorm {
                    value: 0.0,
                    upper_bound: false,
                });
            }
            if (lambda - previous).abs() <= NORM_TOLERANCE * lambda.max(1.0) {
                return Ok(OperatorNorm {
                    value: lambda,
                    upper_bound: false,
                });
            }
            previous = lambda;
            for (vi, wi) in v.iter_mut().zip(&w) {
                *vi = *wi / lambda;
            }
        }
        Err(Error::Numeric(format!(
            "power iteration did not converge in {NORM_MAX_ITERATIONS} iterations"
        )))
    }

    /// Multinomial split of `total` shots with `p_k = |c_k| / sum_j |c_j|`.
    pub fn allocate_shots(&self, total: u64, rng: &mut dyn RngCore) -> Result<TermAllocation> {
        if total == 0 {
            return Err(Error::arg("shot total must be positive"));
        }
        let weight = self.l1_norm();
        if weight == 0.0 {
            return Err(Error::arg("cannot allocate shots: all coefficients are zero"));
        }
        let mut counts = vec![0u64; self.terms.len()];
        let mut remaining = total;
        let mut remaining_weight = weight;
        let last = self.terms.len() - 1;
        for (k, (c, _)) in self.terms.iter().enumerate() {
            if remaining == 0 {
                break;
            }
            if k == last {
                counts[k] = remaining;
                break;
            }
            let p = (c.abs() / remaining_weight).clamp(0.0, 1.0);
            let draw = Binomial::new(remaining, p)
                .map_err(|e| Error::Numeric(format!("binomial draw: {e}")))?
                .sample(rng);
            counts[k] = draw;
            remaining -= draw;
            remaining_weight -= c.abs();
        }
        // A trailing zero-weight term must not receive shots.
        if self.terms[last].0 == 0.0 && counts[last] > 0 {
            let moved = counts[last];
            counts[last] = 0;
            let k = self
                .terms
                .iter()
                .rposition(|(c, _)| *c != 0.0)
                .expect("nonzero term exists");
            counts[k] += moved;
        }
        Ok(TermAllocation { counts, total })
    }

    /// Line-oriented text form: `<coefficient> <label>` per term.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (c, p) in &self.terms {
            s.push_str(&format!("{c} {p}\n"));
        }
        s
    }

    /// Parses the text form; blank lines and `#` comments are ignored.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        let mut n = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(coef), Some(label), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::parse(lineno + 1, "expected '<coefficient> <label>'"));
            };
            let c: f64 = coef
                .parse()
                .map_err(|_| Error::parse(lineno + 1, format!("bad coefficient '{coef}'")))?;
            let p: PauliString = label
                .parse()
                .map_err(|e: Error| Error::parse(lineno + 1, e.to_string()))?;
            match n {
                None => n = Some(p.num_qubits()),
                Some(m) if m != p.num_qubits() => {
                    return Err(Error::parse(lineno + 1, "inconsistent qubit count"))
                }
                _ => {}
            }
            terms.push((c, p));
        }
        let n = n.ok_or_else(|| Error::parse(0, "no terms"))?;
        Self::new(n, terms)
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Result of [`PauliSum::operator_norm`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorNorm {
    pub value: f64,
    /// `true` when `value` is the `sum |c_k|` bound rather than the exact norm.
    pub upper_bound: bool,
}

/// Shots assigned to each term of a sum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermAllocation {
    pub counts: Vec<u64>,
    pub total: u64,
}

/// Transverse-field Ising chain with open boundaries:
/// `-J (sum_j Z_j Z_{j+1} + g sum_j X_j)`.
pub fn tfim_hamiltonian(n: usize, coupling: f64, field_ratio: f64) -> Result<PauliSum> {
    if n < 2 {
        return Err(Error::arg(format!("TFIM needs at least 2 sites, got {n}")));
    }
    let mut terms = Vec::with_capacity(2 * n - 1);
    for j in 0..n - 1 {
        terms.push((
            -coupling,
            PauliString::from_sparse(n, &[(j, PauliOp::Z), (j + 1, PauliOp::Z)])?,
        ));
    }
    for j in 0..n {
        terms.push((
            -coupling * field_ratio,
            PauliString::from_sparse(n, &[(j, PauliOp::X)])?,
        ));
    }
    // A vanishing field leaves only the coupling terms.
    if field_ratio == 0.0 {
        terms.truncate(n - 1);
    }
    PauliSum::new(n, terms)
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn normalize(v: &mut [Complex64]) {
    let s = norm(v);
    v.iter_mut().for_each(|x| *x /= s);
}
