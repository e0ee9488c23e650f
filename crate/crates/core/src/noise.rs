//! Device error model: per-gate depolarizing rates, readout assignment errors
//! and the coupling graph that constrains CNOT placement.
//!
//! Ansatz qubit `j` runs on device qubit `Q j`. The text format has three
//! sections, each row one qubit or one directed CNOT pair:
//!
//! ```text
//! [single]
//! q0 1.775e-4
//! [cnot]
//! q0 q1 8.622e-3
//! [readout]
//! q0 1.58e-2
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::circuit::Gate;
use crate::density::DensityMatrix;
use crate::error::{Error, Result};

/// Default table: the five-qubit linear-chain device used for the noisy benchmarks.
pub const DEFAULT_TABLE: &str = include_str!("../data/bogota.noise");

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    single_qubit_rate: Vec<f64>,
    cnot_rate: BTreeMap<(usize, usize), f64>,
    readout_error: Vec<f64>,
    coupling: BTreeSet<(usize, usize)>,
}

impl NoiseModel {
    pub fn new(
        single_qubit_rate: Vec<f64>,
        cnot_rate: BTreeMap<(usize, usize), f64>,
        readout_error: Vec<f64>,
    ) -> Result<Self> {
        if single_qubit_rate.len() != readout_error.len() {
            return Err(Error::arg(format!(
                "{} single-qubit rates but {} readout errors",
                single_qubit_rate.len(),
                readout_error.len()
            )));
        }
        let n = single_qubit_rate.len();
        for &r in single_qubit_rate.iter().chain(&readout_error).chain(cnot_rate.values()) {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::arg(format!("rate {r} outside [0, 1]")));
            }
        }
        let mut coupling = BTreeSet::new();
        for &(a, b) in cnot_rate.keys() {
            if a == b || a >= n || b >= n {
                return Err(Error::arg(format!("invalid CNOT pair ({a}, {b})")));
            }
            coupling.insert((a.min(b), a.max(b)));
        }
        Ok(Self {
            single_qubit_rate,
            cnot_rate,
            readout_error,
            coupling,
        })
    }

    /// Linear chain of `n` qubits with the same rates everywhere.
    pub fn uniform(n: usize, single: f64, cnot: f64, readout: f64) -> Result<Self> {
        let mut pairs = BTreeMap::new();
        for q in 0..n.saturating_sub(1) {
            pairs.insert((q, q + 1), cnot);
            pairs.insert((q + 1, q), cnot);
        }
        Self::new(vec![single; n], pairs, vec![readout; n])
    }

    /// The shipped default table.
    pub fn default_device() -> Self {
        Self::parse_table(DEFAULT_TABLE).expect("bundled noise table is valid")
    }

    pub fn num_qubits(&self) -> usize {
        self.single_qubit_rate.len()
    }

    pub fn single_qubit_rate(&self, qubit: usize) -> f64 {
        self.single_qubit_rate[qubit]
    }

    pub fn readout_error(&self, qubit: usize) -> f64 {
        self.readout_error[qubit]
    }

    pub fn readout_errors(&self) -> &[f64] {
        &self.readout_error
    }

    pub fn coupling(&self) -> &BTreeSet<(usize, usize)> {
        &self.coupling
    }

    /// Depolarizing rate for CNOT(control, target). A direction missing from the
    /// table falls back to the reverse direction's value.
    pub fn cnot_rate(&self, control: usize, target: usize) -> Result<f64> {
        self.cnot_rate
            .get(&(control, target))
            .or_else(|| self.cnot_rate.get(&(target, control)))
            .copied()
            .ok_or_else(|| {
                Error::Topology(format!("no coupler between Q{control} and Q{target}"))
            })
    }

    pub fn is_noiseless(&self) -> bool {
        self.single_qubit_rate
            .iter()
            .chain(&self.readout_error)
            .chain(self.cnot_rate.values())
            .all(|&r| r == 0.0)
    }

    pub fn load_table(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_table(&text)
    }

    pub fn parse_table(text: &str) -> Result<Self> {
        #[derive(Clone, Copy, PartialEq)]
        enum Section {
            None,
            Single,
            Cnot,
            Readout,
        }
        let mut section = Section::None;
        let mut single = BTreeMap::new();
        let mut readout = BTreeMap::new();
        let mut cnot = BTreeMap::new();
        let mut rows = 0;

        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            match line {
                "[single]" => section = Section::Single,
                "[cnot]" => section = Section::Cnot,
                "[readout]" => section = Section::Readout,
                _ => {
                    let fields: Vec<&str> = line.split_whitespace().collect();
                    let qubit = |tok: &str| -> Result<usize> {
                        tok.strip_prefix('q')
                            .and_then(|d| d.parse().ok())
                            .ok_or_else(|| Error::parse(lineno, format!("bad qubit '{tok}'")))
                    };
                    let rate = |tok: &str| -> Result<f64> {
                        let r: f64 = tok
                            .parse()
                            .map_err(|_| Error::parse(lineno, format!("bad rate '{tok}'")))?;
                        if !(0.0..=1.0).contains(&r) {
                            return Err(Error::parse(lineno, format!("rate {r} outside [0, 1]")));
                        }
                        Ok(r)
                    };
                    let duplicate = || Error::parse(lineno, "duplicate row");
                    match (section, fields.as_slice()) {
                        (Section::Single, [q, r]) => {
                            if single.insert(qubit(q)?, rate(r)?).is_some() {
                                return Err(duplicate());
                            }
                        }
                        (Section::Readout, [q, r]) => {
                            if readout.insert(qubit(q)?, rate(r)?).is_some() {
                                return Err(duplicate());
                            }
                        }
                        (Section::Cnot, [c, t, r]) => {
                            let (c, t) = (qubit(c)?, qubit(t)?);
                            if c == t {
                                return Err(Error::parse(lineno, "CNOT pair needs two qubits"));
                            }
                            if cnot.insert((c, t), rate(r)?).is_some() {
                                return Err(duplicate());
                            }
                        }
                        (Section::None, _) => {
                            return Err(Error::parse(lineno, "row before any section header"))
                        }
                        _ => return Err(Error::parse(lineno, format!("malformed row '{line}'"))),
                    }
                    rows += 1;
                }
            }
        }
        if rows == 0 {
            return Err(Error::parse(1, "noise table is empty"));
        }
        let n = single.len();
        let dense = |m: &BTreeMap<usize, f64>, what: &str| -> Result<Vec<f64>> {
            if m.len() != n || m.keys().enumerate().any(|(i, &q)| i != q) {
                return Err(Error::parse(
                    0,
                    format!("{what} section must list q0..q{} exactly once", n.saturating_sub(1)),
                ));
            }
            Ok(m.values().copied().collect())
        };
        let single = dense(&single, "[single]")?;
        let readout = dense(&readout, "[readout]")?;
        if let Some(&(c, t)) = cnot.keys().find(|&&(c, t)| c >= n || t >= n) {
            return Err(Error::parse(0, format!("CNOT pair q{c} q{t} references unknown qubit")));
        }
        Self::new(single, cnot, readout)
    }

    /// Canonical text form (sections in fixed order, rows sorted).
    pub fn to_table(&self) -> String {
        let mut s = String::from("[single]\n");
        for (q, r) in self.single_qubit_rate.iter().enumerate() {
            s.push_str(&format!("q{q} {r:e}\n"));
        }
        s.push_str("[cnot]\n");
        for ((c, t), r) in &self.cnot_rate {
            s.push_str(&format!("q{c} q{t} {r:e}\n"));
        }
        s.push_str("[readout]\n");
        for (q, r) in self.readout_error.iter().enumerate() {
            s.push_str(&format!("q{q} {r:e}\n"));
        }
        s
    }

    pub(crate) fn check_register(&self, n: usize) -> Result<()> {
        if n > self.num_qubits() {
            return Err(Error::Topology(format!(
                "circuit uses {n} qubits but the device has {}",
                self.num_qubits()
            )));
        }
        Ok(())
    }
}

/// Applies the error channel that follows `gate`: RX depolarizes its qubit, RZ is
/// error-free, CNOT depolarizes the pair jointly.
pub fn apply_gate_noise(rho: &mut DensityMatrix, gate: &Gate, model: &NoiseModel) -> Result<()> {
    model.check_register(rho.num_qubits())?;
    match *gate {
        Gate::Rx { qubit, .. } => rho.depolarize_1q(qubit, model.single_qubit_rate(qubit)),
        Gate::Rz { .. } => {}
        Gate::Cnot { control, target } => {
            let pair = (control.min(target), control.max(target));
            if !model.coupling().contains(&pair) {
                return Err(Error::Topology(format!(
                    "CNOT q{control} q{target} is not on a coupler"
                )));
            }
            rho.depolarize_2q(control, target, model.cnot_rate(control, target)?);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::StateVector;

    fn normalize_ws(s: &str) -> String {
        s.lines()
            .map(|l| l.split_whitespace().collect::<Vec<_>>().join(" "))
            .filter(|l| !l.is_empty())
            .collect::<Vec<_>>()
            .join("\n")
    }

    #[test]
    fn default_table_values() {
        let m = NoiseModel::default_device();
        assert_eq!(m.num_qubits(), 5);
        assert_eq!(m.single_qubit_rate(0), 1.775e-4);
        assert_eq!(m.readout_error(0), 1.58e-2);
        assert_eq!(m.cnot_rate(0, 1).unwrap(), 8.622e-3);
        assert_eq!(m.cnot_rate(2, 3).unwrap(), 1.008e-2);
        assert_eq!(m.readout_error(3), 1.044e-1);
        assert_eq!(m.single_qubit_rate(3), 7.687e-4);
        assert_eq!(m.coupling().len(), 4);
        assert!(matches!(m.cnot_rate(0, 2), Err(Error::Topology(_))));
    }

    #[test]
    fn roundtrip_is_identical_modulo_whitespace() {
        let m = NoiseModel::parse_table(DEFAULT_TABLE).unwrap();
        assert_eq!(normalize_ws(&m.to_table()), normalize_ws(DEFAULT_TABLE));
    }

    #[test]
    fn load_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.noise");
        std::fs::write(&path, DEFAULT_TABLE).unwrap();
        assert_eq!(NoiseModel::load_table(&path).unwrap(), NoiseModel::default_device());
    }

    #[test]
    fn parse_errors_carry_row_numbers() {
        assert!(matches!(NoiseModel::parse_table(""), Err(Error::Parse { .. })));
        let bad_rate = "[single]\nq0 1e-3\n[readout]\nq0 1.5\n";
        assert!(matches!(
            NoiseModel::parse_table(bad_rate),
            Err(Error::Parse { line: 4, .. })
        ));
        let malformed = "[single]\nq0 1e-3 7\n";
        assert!(matches!(
            NoiseModel::parse_table(malformed),
            Err(Error::Parse { line: 2, .. })
        ));
        let orphan = "q0 1e-3\n";
        assert!(matches!(
            NoiseModel::parse_table(orphan),
            Err(Error::Parse { line: 1, .. })
        ));
        let missing_readout = "[single]\nq0 1e-3\n";
        assert!(NoiseModel::parse_table(missing_readout).is_err());
    }

    #[test]
    fn reverse_direction_fallback() {
        let mut pairs = BTreeMap::new();
        pairs.insert((0, 1), 0.02);
        let m = NoiseModel::new(vec![0.0; 2], pairs, vec![0.0; 2]).unwrap();
        assert_eq!(m.cnot_rate(1, 0).unwrap(), 0.02);
    }

    #[test]
    fn gate_noise_channels() {
        let ket0 = StateVector::zero(1).unwrap();
        let rx = Gate::Rx { qubit: 0, param: 0 };
        let rz = Gate::Rz { qubit: 0, param: 0 };

        let mut rho = DensityMatrix::from_pure(&ket0);
        apply_gate_noise(&mut rho, &rx, &NoiseModel::uniform(1, 0.0, 0.0, 0.0).unwrap())
            .unwrap();
        assert_eq!(rho, DensityMatrix::from_pure(&ket0));

        let mut rho = DensityMatrix::from_pure(&ket0);
        apply_gate_noise(&mut rho, &rx, &NoiseModel::uniform(1, 1.0, 0.0, 0.0).unwrap())
            .unwrap();
        assert!((rho.get(0, 0).re - 0.5).abs() < 1e-15);
        assert!((rho.get(1, 1).re - 0.5).abs() < 1e-15);

        let p = 0.1;
        let mut rho = DensityMatrix::from_pure(&ket0);
        apply_gate_noise(&mut rho, &rx, &NoiseModel::uniform(1, p, 0.0, 0.0).unwrap()).unwrap();
        assert!((rho.get(0, 0).re - (1.0 - p / 2.0)).abs() < 1e-15);
        assert!((rho.get(1, 1).re - p / 2.0).abs() < 1e-15);

        let mut rho = DensityMatrix::from_pure(&ket0);
        apply_gate_noise(&mut rho, &rz, &NoiseModel::uniform(1, 1.0, 0.0, 0.0).unwrap()).unwrap();
        assert_eq!(rho, DensityMatrix::from_pure(&ket0));
    }

    #[test]
    fn uncoupled_cnot_is_rejected() {
        let m = NoiseModel::default_device();
        let mut rho = DensityMatrix::from_pure(&StateVector::zero(3).unwrap());
        let g = Gate::Cnot {
            control: 0,
            target: 2,
        };
        assert!(matches!(apply_gate_noise(&mut rho, &g, &m), Err(Error::Topology(_))));
    }
}
