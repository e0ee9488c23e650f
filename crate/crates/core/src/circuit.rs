//! Parameterized circuits built from RX/RZ rotations and CNOTs.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    /// `exp(-i theta X / 2)` on `qubit`, angle taken from `theta[param]`.
    Rx { qubit: usize, param: usize },
    /// `exp(-i theta Z / 2)` on `qubit`, angle taken from `theta[param]`.
    Rz { qubit: usize, param: usize },
    Cnot { control: usize, target: usize },
}

impl Gate {
    pub fn param(&self) -> Option<usize> {
        match *self {
            Gate::Rx { param, .. } | Gate::Rz { param, .. } => Some(param),
            Gate::Cnot { .. } => None,
        }
    }

    fn max_qubit(&self) -> usize {
        match *self {
            Gate::Rx { qubit, .. } | Gate::Rz { qubit, .. } => qubit,
            Gate::Cnot { control, target } => control.max(target),
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Gate::Rx { qubit, param } => write!(f, "RX q{qubit} p{param}"),
            Gate::Rz { qubit, param } => write!(f, "RZ q{qubit} p{param}"),
            Gate::Cnot { control, target } => write!(f, "CNOT q{control} q{target}"),
        }
    }
}

/// Ordered gate list where every angle index in `[0, D)` is used by exactly one gate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamCircuit {
    n: usize,
    gates: Vec<Gate>,
    num_params: usize,
}

impl ParamCircuit {
    pub fn new(n: usize, gates: Vec<Gate>) -> Result<Self> {
        if n == 0 {
            return Err(Error::arg("circuit needs at least one qubit"));
        }
        let num_params = gates.iter().filter(|g| g.param().is_some()).count();
        let mut seen = vec![false; num_params];
        for g in &gates {
            if g.max_qubit() >= n {
                return Err(Error::arg(format!("gate '{g}' addresses a qubit outside 0..{n}")));
            }
            if let Gate::Cnot { control, target } = *g {
                if control == target {
                    return Err(Error::arg(format!("CNOT with control == target ({control})")));
                }
            }
            if let Some(p) = g.param() {
                if p >= num_params || seen[p] {
                    return Err(Error::arg(format!(
                        "parameter index p{p} must be unique and below {num_params}"
                    )));
                }
                seen[p] = true;
            }
        }
        Ok(Self {
            n,
            gates,
            num_params,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn num_params(&self) -> usize {
        self.num_params
    }

    pub(crate) fn check_params(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.num_params {
            return Err(Error::arg(format!(
                "expected {} parameters, got {}",
                self.num_params,
                theta.len()
            )));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for g in &self.gates {
            s.push_str(&g.to_string());
            s.push('\n');
        }
        s
    }

    /// Parses the line format produced by [`ParamCircuit::to_text`].
    pub fn parse_text(n: usize, text: &str) -> Result<Self> {
        let mut gates = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let index = |tok: &str, prefix: char| -> Result<usize> {
                tok.strip_prefix(prefix)
                    .and_then(|d| d.parse().ok())
                    .ok_or_else(|| Error::parse(lineno + 1, format!("bad operand '{tok}'")))
            };
            let gate = match fields.as_slice() {
                ["RX", q, p] => Gate::Rx {
                    qubit: index(q, 'q')?,
                    param: index(p, 'p')?,
                },
                ["RZ", q, p] => Gate::Rz {
                    qubit: index(q, 'q')?,
                    param: index(p, 'p')?,
                },
                ["CNOT", c, t] => Gate::Cnot {
                    control: index(c, 'q')?,
                    target: index(t, 'q')?,
                },
                _ => return Err(Error::parse(lineno + 1, format!("unrecognized gate '{line}'"))),
            };
            gates.push(gate);
        }
        Self::new(n, gates)
    }
}

/// Hardware-efficient ansatz: an RX layer and an RZ layer on every qubit, then `r`
/// blocks of {CNOT chain 0->1->...->n-1, RX layer, RZ layer}. `D = 2n(r+1)`.
pub fn build_ansatz(n: usize, r: usize) -> Result<ParamCircuit> {
    if n < 2 {
        return Err(Error::arg(format!("ansatz needs at least 2 qubits, got {n}")));
    }
    let mut gates = Vec::with_capacity(2 * n * (r + 1) + r * (n - 1));
    let mut next = 0;
    let mut rotation_layers = |gates: &mut Vec<Gate>| {
        for q in 0..n {
            gates.push(Gate::Rx { qubit: q, param: next });
            next += 1;
        }
        for q in 0..n {
            gates.push(Gate::Rz { qubit: q, param: next });
            next += 1;
        }
    };
    rotation_layers(&mut gates);
    for _ in 0..r {
        for q in 0..n - 1 {
            gates.push(Gate::Cnot {
                control: q,
                target: q + 1,
            });
        }
        rotation_layers(&mut gates);
    }
    ParamCircuit::new(n, gates)
}
