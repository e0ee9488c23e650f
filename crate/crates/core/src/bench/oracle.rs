//! Reference values: exact ground energies and ansatz-constrained minima.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cost::Objective;
use crate::error::{Error, Result};
use crate::gradient::exact_gradient;
use crate::minimize::{minimize_box, BfgsOptions};
use crate::pauli::{PauliSum, MAX_DENSE_QUBITS};

/// Krylov dimension used before the subspace is declared converged.
const MAX_KRYLOV: usize = 300;

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Smallest eigenvalue of `h` by Lanczos with full reorthogonalization.
/// Exact when the Krylov space exhausts the Hilbert space.
pub fn ground_energy(h: &PauliSum) -> Result<f64> {
    let n = h.num_qubits();
    if n > MAX_DENSE_QUBITS {
        return Err(Error::Resource(format!(
            "ground energy limited to {MAX_DENSE_QUBITS} qubits, got {n}"
        )));
    }
    let dim = 1usize << n;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);

    let mut basis: Vec<Vec<Complex64>> = vec![v];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![Complex64::new(0.0, 0.0); dim];
    let mut last = f64::INFINITY;
    loop {
        let k = basis.len() - 1;
        h.apply(&basis[k], &mut w);
        let a = dot(&basis[k], &w).re;
        alpha.push(a);
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let m = alpha.len();
        let t = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j {
                beta[i]
            } else if j + 1 == i {
                beta[j]
            } else {
                0.0
            }
        });
        let ground = SymmetricEigen::new(t).eigenvalues.min();
        let b = norm(&w);
        let converged = (last - ground).abs() < 1e-13 * ground.abs().max(1.0);
        if m == dim || b < 1e-12 || m >= MAX_KRYLOV || (m > 20 && converged) {
            return Ok(ground);
        }
        last = ground;
        beta.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    }
}

#[derive(Debug, Clone)]
pub struct ConstrainedMinimum {
    pub value: f64,
    pub point: Vec<f64>,
    pub starts: usize,
    pub converged: usize,
}

/// Multi-start quasi-Newton on the exact cost from uniform points in `[-pi, pi]^D`.
pub fn constrained_minimum<O: Objective + ?Sized>(
    cost: &O,
    starts: usize,
    seed: u64,
) -> Result<ConstrainedMinimum> {
    if starts == 0 {
        return Err(Error::arg("need at least one start"));
    }
    let d = cost.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = vec![f64::NEG_INFINITY; d];
    let hi = vec![f64::INFINITY; d];
    let opts = BfgsOptions {
        max_iter: 2000,
        grad_tol: 1e-10,
        f_tol: 1e-14,
    };
    let mut best: Option<ConstrainedMinimum> = None;
    let mut converged = 0;
    for _ in 0..starts {
        let x0: Vec<f64> = (0..d).map(|_| rng.random_range(-PI..=PI)).collect();
        let m = minimize_box(
            |x| Ok((cost.exact_value(x)?, exact_gradient(cost, x)?)),
            &x0,
            &lo,
            &hi,
            opts,
        )?;
        converged += usize::from(m.converged);
        if best.as_ref().is_none_or(|b| m.value < b.value) {
            best = Some(ConstrainedMinimum {
                value: m.value,
                point: m.x,
                starts,
                converged: 0,
            });
        }
    }
    let mut best = best.expect("at least one start");
    best.converged = converged;
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::build_ansatz;
    use crate::cost::CostFunction;
    use crate::pauli::tfim_hamiltonian;

    fn dense_ground(h: &PauliSum) -> f64 {
        let m = h.dense_matrix().unwrap();
        let d = m.nrows();
        // Real embedding [[A, -B], [B, A]] doubles each eigenvalue's multiplicity.
        let big = DMatrix::from_fn(2 * d, 2 * d, |i, j| {
            let z = m[(i % d, j % d)];
            match (i < d, j < d) {
                (true, true) | (false, false) => z.re,
                (true, false) => -z.im,
                (false, true) => z.im,
            }
        });
        SymmetricEigen::new(big).eigenvalues.min()
    }

    #[test]
    fn two_site_tfim_closed_form() {
        // H = -J Z0 Z1 - g J (X0 + X1); ground energy -sqrt(J^2 + 4 g^2 J^2).
        let h = tfim_hamiltonian(2, 1.0, 1.5).unwrap();
        let e = ground_energy(&h).unwrap();
        assert!((e + (1.0f64 + 9.0).sqrt()).abs() < 1e-12, "{e}");
    }

    #[test]
    fn lanczos_matches_dense() {
        for n in 2..=6 {
            for &(j, g) in &[(1.0, 1.5), (0.7, 0.3), (1.0, 1.0)] {
                let h = tfim_hamiltonian(n, j, g).unwrap();
                let a = ground_energy(&h).unwrap();
                let b = dense_ground(&h);
                assert!((a - b).abs() < 1e-9, "n={n} {a} {b}");
            }
        }
    }

    #[test]
    fn variational_bound() {
        let h = tfim_hamiltonian(2, 1.0, 1.5).unwrap();
        let ground = ground_energy(&h).unwrap();
        let cost = CostFunction::vqe(build_ansatz(2, 1).unwrap(), h).unwrap();
        let m = constrained_minimum(&cost, 5, 3).unwrap();
        assert!(m.value >= ground - 1e-9);
        assert!(m.value - ground < 1e-6, "{} {ground}", m.value);
    }

    #[test]
    fn vqc_minimum_is_zero() {
        let cost = CostFunction::vqc(build_ansatz(2, 1).unwrap(), vec![0.0; 8]).unwrap();
        let m = constrained_minimum(&cost, 3, 4).unwrap();
        assert!(m.value.abs() < 1e-9, "{}", m.value);
    }
}
