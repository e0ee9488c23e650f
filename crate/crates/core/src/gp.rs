//! One-dimensional Gaussian-process regression with an RBF kernel.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::minimize::{minimize_box, BfgsOptions};

const JITTER: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpHyperparams {
    pub signal_variance: f64,
    pub length_scale: f64,
    pub noise_variance: f64,
}

/// Box for hyperparameter fitting, as `(lower, upper)` pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpBounds {
    pub signal_variance: (f64, f64),
    pub length_scale: (f64, f64),
    pub noise_variance: (f64, f64),
}

impl Default for GpBounds {
    fn default() -> Self {
        Self {
            signal_variance: (1e-3, 5.0),
            length_scale: (1e-3, 1.0),
            noise_variance: (1e-5, 5.0),
        }
    }
}

impl GpBounds {
    fn pairs(&self) -> [(f64, f64); 3] {
        [self.signal_variance, self.length_scale, self.noise_variance]
    }

    pub fn contains(&self, hp: &GpHyperparams) -> bool {
        let v = [hp.signal_variance, hp.length_scale, hp.noise_variance];
        self.pairs()
            .iter()
            .zip(v)
            .all(|(&(lo, hi), x)| (lo..=hi).contains(&x))
    }

    /// The fixed restart `tau^2 = 0.2`, `l = 0.7`, noise at the midpoint of its range.
    pub fn default_start(&self) -> GpHyperparams {
        GpHyperparams {
            signal_variance: 0.2_f64.clamp(self.signal_variance.0, self.signal_variance.1),
            length_scale: 0.7_f64.clamp(self.length_scale.0, self.length_scale.1),
            noise_variance: 0.5 * (self.noise_variance.0 + self.noise_variance.1),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GpDataset {
    pub points: Vec<f64>,
    pub values: Vec<f64>,
}

impl GpDataset {
    pub fn new(points: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let d = Self { points, values };
        d.validate()?;
        Ok(d)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn push(&mut self, point: f64, value: f64) {
        self.points.push(point);
        self.values.push(value);
    }

    fn validate(&self) -> Result<()> {
        if self.points.len() != self.values.len() {
            return Err(Error::arg("points and values differ in length"));
        }
        if self.points.is_empty() {
            return Err(Error::arg("dataset is empty"));
        }
        Ok(())
    }
}

/// `tau^2 exp(-(a - b)^2 / (2 l^2))`.
pub fn kernel(a: f64, b: f64, hp: &GpHyperparams) -> f64 {
    let d = a - b;
    hp.signal_variance * (-d * d / (2.0 * hp.length_scale * hp.length_scale)).exp()
}

fn gram(points: &[f64], hp: &GpHyperparams) -> DMatrix<f64> {
    let n = points.len();
    DMatrix::from_fn(n, n, |i, j| kernel(points[i], points[j], hp))
}

fn cross(queries: &[f64], points: &[f64], hp: &GpHyperparams) -> DMatrix<f64> {
    DMatrix::from_fn(queries.len(), points.len(), |i, j| kernel(queries[i], points[j], hp))
}

/// Cholesky of `K + sigma^2 I`, retried once with a small diagonal jitter.
fn factor(points: &[f64], hp: &GpHyperparams) -> Result<Cholesky<f64, Dyn>> {
    let mut k = gram(points, hp);
    for i in 0..points.len() {
        k[(i, i)] += hp.noise_variance;
    }
    if let Some(c) = Cholesky::new(k.clone()) {
        return Ok(c);
    }
    for i in 0..points.len() {
        k[(i, i)] += JITTER;
    }
    Cholesky::new(k).ok_or_else(|| Error::Numeric("kernel matrix is not positive definite".into()))
}

fn log_det(chol: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
}

pub fn log_marginal_likelihood(data: &GpDataset, hp: &GpHyperparams) -> Result<f64> {
    data.validate()?;
    let chol = factor(&data.points, hp)?;
    let y = DVector::from_column_slice(&data.values);
    let alpha = chol.solve(&y);
    let n = data.len() as f64;
    Ok(-0.5 * y.dot(&alpha) - 0.5 * log_det(&chol) - 0.5 * n * (2.0 * PI).ln())
}

/// Negative log marginal likelihood and its gradient in log-hyperparameters.
fn neg_lml_log_space(data: &GpDataset, log_hp: &[f64]) -> Result<(f64, Vec<f64>)> {
    let hp = GpHyperparams {
        signal_variance: log_hp[0].exp(),
        length_scale: log_hp[1].exp(),
        noise_variance: log_hp[2].exp(),
    };
    let chol = factor(&data.points, &hp)?;
    let y = DVector::from_column_slice(&data.values);
    let alpha = chol.solve(&y);
    let n = data.len();
    let lml = -0.5 * y.dot(&alpha) - 0.5 * log_det(&chol) - 0.5 * n as f64 * (2.0 * PI).ln();

    // dL/dp = 1/2 tr((alpha alpha^T - K^-1) dK/dp)
    let w = &alpha * alpha.transpose() - chol.inverse();
    let kf = gram(&data.points, &hp);
    let l2 = hp.length_scale * hp.length_scale;
    let mut g = [0.0; 3];
    for i in 0..n {
        for j in 0..n {
            let d = data.points[i] - data.points[j];
            g[0] += w[(i, j)] * kf[(i, j)];
            g[1] += w[(i, j)] * kf[(i, j)] * d * d / l2;
        }
        g[2] += w[(i, i)] * hp.noise_variance;
    }
    Ok((-lml, g.iter().map(|v| -0.5 * v).collect()))
}

/// Maximizes the marginal likelihood from `restarts` uniform starts plus the
/// fixed default start, keeping the best result.
pub fn fit_hyperparams(
    data: &GpDataset,
    bounds: &GpBounds,
    restarts: usize,
    rng: &mut dyn RngCore,
) -> Result<GpHyperparams> {
    data.validate()?;
    let pairs = bounds.pairs();
    let lo: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let hi: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let fixed = bounds.default_start();
    let mut starts = vec![[
        fixed.signal_variance.ln(),
        fixed.length_scale.ln(),
        fixed.noise_variance.ln(),
    ]];
    for _ in 0..restarts {
        let mut s = [0.0; 3];
        for (k, &(a, b)) in pairs.iter().enumerate() {
            s[k] = rng.random_range(a..=b).ln();
        }
        starts.push(s);
    }

    let mut best: Option<(f64, Vec<f64>)> = None;
    for s in &starts {
        let Ok(m) = minimize_box(|x| neg_lml_log_space(data, x), s, &lo, &hi, BfgsOptions::default())
        else {
            continue;
        };
        if best.as_ref().is_none_or(|(v, _)| m.value < *v) {
            best = Some((m.value, m.x));
        }
    }
    Ok(match best {
        Some((_, x)) => GpHyperparams {
            signal_variance: x[0].exp().clamp(pairs[0].0, pairs[0].1),
            length_scale: x[1].exp().clamp(pairs[1].0, pairs[1].1),
            noise_variance: x[2].exp().clamp(pairs[2].0, pairs[2].1),
        },
        None => fixed,
    })
}

#[derive(Debug, Clone)]
pub struct Posterior {
    pub mean: Vec<f64>,
    pub covariance: DMatrix<f64>,
}

/// Predictive mean only.
pub fn posterior_mean(data: &GpDataset, hp: &GpHyperparams, queries: &[f64]) -> Result<Vec<f64>> {
    data.validate()?;
    let chol = factor(&data.points, hp)?;
    let alpha = chol.solve(&DVector::from_column_slice(&data.values));
    Ok((cross(queries, &data.points, hp) * alpha).as_slice().to_vec())
}

fn raw_posterior(data: &GpDataset, hp: &GpHyperparams, queries: &[f64]) -> Result<Posterior> {
    data.validate()?;
    if queries.is_empty() {
        return Err(Error::arg("no query points"));
    }
    let chol = factor(&data.points, hp)?;
    let alpha = chol.solve(&DVector::from_column_slice(&data.values));
    let ks = cross(queries, &data.points, hp);
    let mean = (&ks * alpha).as_slice().to_vec();
    let v = chol.solve(&ks.transpose());
    let mut cov = gram(queries, hp) - &ks * v;
    cov = (&cov + cov.transpose()) * 0.5;
    Ok(Posterior {
        mean,
        covariance: cov,
    })
}

/// Posterior at `queries`; the covariance is symmetrized and its eigenvalues floored at 0.
pub fn posterior(data: &GpDataset, hp: &GpHyperparams, queries: &[f64]) -> Result<Posterior> {
    let mut p = raw_posterior(data, hp, queries)?;
    let eig = SymmetricEigen::new(p.covariance.clone());
    if eig.eigenvalues.iter().any(|&e| e < 0.0) {
        let floored = eig.eigenvalues.map(|e| e.max(0.0));
        p.covariance =
            &eig.eigenvectors * DMatrix::from_diagonal(&floored) * eig.eigenvectors.transpose();
    }
    Ok(p)
}

/// A matrix `A` with `A A^T` equal to the (floored) covariance.
fn sampling_factor(cov: &DMatrix<f64>) -> DMatrix<f64> {
    let n = cov.nrows();
    let scale = cov.diagonal().amax().max(f64::MIN_POSITIVE);
    let mut jittered = cov.clone();
    for i in 0..n {
        jittered[(i, i)] += 1e-10 * scale;
    }
    if let Some(c) = Cholesky::new(jittered) {
        return c.unpack();
    }
    let eig = SymmetricEigen::new(cov.clone());
    let roots = eig.eigenvalues.map(|e| e.max(0.0).sqrt());
    eig.eigenvectors * DMatrix::from_diagonal(&roots)
}

/// Draws one joint posterior sample over `candidates` and returns the minimizer.
/// Ties go to the smallest `|eta|`.
pub fn thompson_pick(
    data: &GpDataset,
    hp: &GpHyperparams,
    candidates: &[f64],
    rng: &mut dyn RngCore,
) -> Result<f64> {
    if candidates.is_empty() {
        return Err(Error::arg("no candidates"));
    }
    if candidates.len() == 1 {
        return Ok(candidates[0]);
    }
    let p = raw_posterior(data, hp, candidates)?;
    let a = sampling_factor(&p.covariance);
    let z = DVector::from_iterator(
        candidates.len(),
        (0..candidates.len()).map(|_| rng.sample::<f64, _>(StandardNormal)),
    );
    let draw = DVector::from_vec(p.mean) + a * z;
    Ok(argmin_closest_to_zero(candidates, draw.as_slice()))
}

pub(crate) fn argmin_closest_to_zero(xs: &[f64], values: &[f64]) -> f64 {
    let mut best = 0;
    for i in 1..xs.len() {
        if values[i] < values[best] || (values[i] == values[best] && xs[i].abs() < xs[best].abs())
        {
            best = i;
        }
    }
    xs[best]
}

/// `count` equispaced points covering `[-half_width, half_width]`.
pub fn symmetric_grid(half_width: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![0.0];
    }
    (0..count)
        .map(|i| -half_width + 2.0 * half_width * i as f64 / (count - 1) as f64)
        .collect()
}
