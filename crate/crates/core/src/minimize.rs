//! Box-constrained BFGS used for GP hyperparameters and the variational oracle.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct BfgsOptions {
    pub max_iter: usize,
    /// Stop when the projected gradient's max-norm falls below this.
    pub grad_tol: f64,
    /// Stop when the relative decrease of one step falls below this.
    pub f_tol: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            grad_tol: 1e-8,
            f_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn project(x: &DVector<f64>, lo: &[f64], hi: &[f64]) -> DVector<f64> {
    DVector::from_iterator(x.len(), x.iter().enumerate().map(|(i, v)| v.clamp(lo[i], hi[i])))
}

/// Minimizes `f` (returning value and gradient) over the box `[lo, hi]`.
/// Infinite bounds give an unconstrained search.
pub fn minimize_box<F>(
    mut f: F,
    x0: &[f64],
    lo: &[f64],
    hi: &[f64],
    opts: BfgsOptions,
) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let d = x0.len();
    if lo.len() != d || hi.len() != d || lo.iter().zip(hi).any(|(l, h)| l > h) {
        return Err(Error::arg("inconsistent bounds"));
    }
    let mut x = project(&DVector::from_column_slice(x0), lo, hi);
    let (mut fx, g0) = f(x.as_slice())?;
    if !fx.is_finite() {
        return Err(Error::Numeric("objective not finite at the start point".into()));
    }
    let mut g = DVector::from_vec(g0);
    let mut h = DMatrix::<f64>::identity(d, d);
    let mut fresh = true;

    for iter in 0..opts.max_iter {
        let free: Vec<bool> = (0..d)
            .map(|i| !((x[i] <= lo[i] && g[i] > 0.0) || (x[i] >= hi[i] && g[i] < 0.0)))
            .collect();
        let pg = (0..d)
            .filter(|&i| free[i])
            .map(|i| g[i].abs())
            .fold(0.0, f64::max);
        if pg < opts.grad_tol {
            return Ok(Minimum {
                x: x.as_slice().to_vec(),
                value: fx,
                iterations: iter,
                converged: true,
            });
        }
        let mut dir = -(&h * &g);
        for i in 0..d {
            if !free[i] {
                dir[i] = 0.0;
            }
        }
        if dir.dot(&g) >= 0.0 {
            h = DMatrix::identity(d, d);
            fresh = true;
            dir = DVector::from_iterator(d, (0..d).map(|i| if free[i] { -g[i] } else { 0.0 }));
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = project(&(&x + &dir * step), lo, hi);
            let s = &trial - &x;
            if s.amax() == 0.0 {
                break;
            }
            if let Ok((ft, gt)) = f(trial.as_slice()) {
                if ft.is_finite() && ft <= fx + 1e-4 * g.dot(&s) {
                    accepted = Some((trial, ft, DVector::from_vec(gt)));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((xn, fnew, gn)) = accepted else {
            if fresh {
                return Ok(Minimum {
                    x: x.as_slice().to_vec(),
                    value: fx,
                    iterations: iter,
                    converged: false,
                });
            }
            h = DMatrix::identity(d, d);
            fresh = true;
            continue;
        };

        let s = &xn - &x;
        let y = &gn - &g;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            if fresh {
                // Scale the initial inverse Hessian to the observed curvature.
                h *= sy / y.dot(&y);
            }
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            h += (&s * s.transpose()) * (rho * rho * yhy + rho)
                - (&hy * s.transpose() + &s * hy.transpose()) * rho;
            fresh = false;
        }
        let decrease = fx - fnew;
        x = xn;
        fx = fnew;
        g = gn;
        if decrease <= opts.f_tol * fx.abs().max(1.0) {
            return Ok(Minimum {
                x: x.as_slice().to_vec(),
                value: fx,
                iterations: iter + 1,
                converged: true,
            });
        }
    }
    Ok(Minimum {
        x: x.as_slice().to_vec(),
        value: fx,
        iterations: opts.max_iter,
        converged: false,
    })
}
