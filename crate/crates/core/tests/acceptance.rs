//! End-to-end acceptance checks. Each criterion prints exactly one PASS or FAIL
//! line; supporting numbers follow on indented lines.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sglbo::baselines::wrap_suffix_average;
use sglbo::bench::aggregate::median;
use sglbo::bench::config::{ExperimentConfig, NoiseSource, OptimizerKind, Reference, Task};
use sglbo::bench::oracle::constrained_minimum;
use sglbo::bench::runner::build_objective;
use sglbo::bench::{run_experiment, Experiment};
use sglbo::gp::{kernel, log_marginal_likelihood, posterior, GpDataset, GpHyperparams};
use sglbo::{
    build_ansatz, estimate_gradient, exact_gradient, tfim_hamiltonian, CostFunction, Gate,
    Objective, ParamCircuit, PauliOp, PauliString, PauliSum,
};

const SEED: u64 = 20_240_601;

struct Outcome {
    passed: usize,
    failed: Vec<u32>,
}

impl Outcome {
    fn report(&mut self, id: u32, title: &str, pass: bool, details: &[String], started: Instant) {
        let tag = if pass { "PASS" } else { "FAIL" };
        println!("[{tag}] criterion {id}: {title} ({:.1} s)", started.elapsed().as_secs_f64());
        for d in details {
            println!("        {d}");
        }
        if pass {
            self.passed += 1;
        } else {
            self.failed.push(id);
        }
    }
}

fn info(line: String) {
    println!("        {line}");
}

fn random_theta(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-PI..=PI)).collect()
}

fn random_circuit(rng: &mut ChaCha8Rng, n: usize, r: usize) -> ParamCircuit {
    let mut gates = Vec::new();
    let mut p = 0;
    for layer in 0..=r {
        if layer > 0 {
            for _ in 0..n {
                let c = rng.random_range(0..n);
                let t = (c + rng.random_range(1..n)) % n;
                gates.push(Gate::Cnot { control: c, target: t });
            }
        }
        for q in 0..n {
            for _ in 0..2 {
                gates.push(if rng.random() {
                    Gate::Rx { qubit: q, param: p }
                } else {
                    Gate::Rz { qubit: q, param: p }
                });
                p += 1;
            }
        }
    }
    ParamCircuit::new(n, gates).unwrap()
}

fn random_observable(rng: &mut ChaCha8Rng, n: usize) -> PauliSum {
    let ops = [PauliOp::I, PauliOp::X, PauliOp::Y, PauliOp::Z];
    let terms = (0..rng.random_range(1..=6))
        .map(|_| {
            let s = PauliString::new((0..n).map(|_| ops[rng.random_range(0..4)]).collect()).unwrap();
            (rng.random_range(-1.0..1.0), s)
        })
        .collect();
    PauliSum::new(n, terms).unwrap()
}

fn criterion_1(out: &mut Outcome) {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.random_range(2..=4);
        let r = rng.random_range(0..=2);
        let cost = CostFunction::vqe(random_circuit(&mut rng, n, r), random_observable(&mut rng, n)).unwrap();
        let theta = random_theta(&mut rng, cost.dim());
        let g = exact_gradient(&cost, &theta).unwrap();
        for i in 0..theta.len() {
            let mut a = theta.clone();
            let mut b = theta.clone();
            a[i] += h;
            b[i] -= h;
            let fd = (cost.exact_value(&a).unwrap() - cost.exact_value(&b).unwrap()) / (2.0 * h);
            worst = worst.max((fd - g[i]).abs());
        }
    }
    let pass = worst < 1e-8 && t0.elapsed().as_secs() < 60;
    out.report(
        1,
        "parameter-shift gradient vs central differences",
        pass,
        &[format!("50 circuits, max |error| = {worst:.3e} (limit 1e-8)")],
        t0,
    );
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

fn criterion_2(out: &mut Outcome) {
    let t0 = Instant::now();
    let cost = CostFunction::vqe(build_ansatz(4, 4).unwrap(), tfim_hamiltonian(4, 1.0, 1.5).unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let mut worst_value: f64 = 0.0;
    let mut worst_grad: f64 = 0.0;
    let mut violations = 0;
    for _ in 0..10 {
        let theta = random_theta(&mut rng, cost.dim());
        let exact = cost.exact_value(&theta).unwrap();
        let samples: Vec<f64> = (0..200)
            .map(|_| cost.noisy_query(&theta, 10_000, &mut rng).unwrap().value)
            .collect();
        let (m, se) = mean_and_se(&samples);
        let z = (m - exact).abs() / se;
        worst_value = worst_value.max(z);
        violations += usize::from(z > 4.0);

        let g = exact_gradient(&cost, &theta).unwrap();
        let s = vec![1000; cost.dim()];
        let draws: Vec<Vec<f64>> = (0..200)
            .map(|_| estimate_gradient(&cost, &theta, &s, &mut rng).unwrap().g_hat)
            .collect();
        for i in 0..cost.dim() {
            let col: Vec<f64> = draws.iter().map(|d| d[i]).collect();
            let (m, se) = mean_and_se(&col);
            let dev = (m - g[i]).abs();
            if dev > 4.0 * se + 1e-12 {
                violations += 1;
            }
            if se > 0.0 {
                worst_grad = worst_grad.max(dev / se);
            }
        }
    }
    out.report(
        2,
        "unbiased cost and gradient estimators (TFIM n=4)",
        violations == 0,
        &[
            format!("cost: worst |mean - exact| = {worst_value:.2} standard errors over 10 points"),
            format!("gradient: worst {worst_grad:.2} standard errors over 400 components; limit 4"),
        ],
        t0,
    );
}

/// Posterior by explicit inversion of `K + sigma^2 I`.
fn brute_posterior(data: &GpDataset, hp: &GpHyperparams, q: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let n = data.len();
    let mut k = DMatrix::from_fn(n, n, |i, j| kernel(data.points[i], data.points[j], hp));
    for i in 0..n {
        k[(i, i)] += hp.noise_variance;
    }
    let inv = k.try_inverse().expect("invertible");
    let ks = DMatrix::from_fn(q.len(), n, |i, j| kernel(q[i], data.points[j], hp));
    let kss = DMatrix::from_fn(q.len(), q.len(), |i, j| kernel(q[i], q[j], hp));
    let y = DVector::from_column_slice(&data.values);
    let mean = (&ks * &inv * y).as_slice().to_vec();
    let cov = kss - &ks * inv * ks.transpose();
    (mean, cov)
}

fn criterion_3(out: &mut Outcome) {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let log_uniform = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| (rng.random_range(lo.ln()..hi.ln())).exp();
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.random_range(1..=20);
        let mut data = GpDataset::default();
        for _ in 0..n {
            data.push(rng.random_range(-1.0..1.0), rng.random_range(-2.0..2.0));
        }
        let hp = GpHyperparams {
            signal_variance: log_uniform(&mut rng, 1e-3, 5.0),
            length_scale: log_uniform(&mut rng, 1e-3, 1.0),
            noise_variance: log_uniform(&mut rng, 1e-5, 5.0),
        };
        let q: Vec<f64> = (0..15).map(|_| rng.random_range(-1.5..1.5)).collect();
        let p = posterior(&data, &hp, &q).unwrap();
        let (m, c) = brute_posterior(&data, &hp, &q);
        for i in 0..q.len() {
            worst = worst.max((p.mean[i] - m[i]).abs());
            for j in 0..q.len() {
                worst = worst.max((p.covariance[(i, j)] - c[(i, j)]).abs());
            }
        }
    }

    // One observation y = 3 at the origin: closed forms.
    let hp = GpHyperparams {
        signal_variance: 0.2,
        length_scale: 0.7,
        noise_variance: 1e-5,
    };
    let one = GpDataset::new(vec![0.0], vec![3.0]).unwrap();
    let p = posterior(&one, &hp, &[0.0, 50.0]).unwrap();
    let s = hp.signal_variance + hp.noise_variance;
    let closed_mean = 3.0 * hp.signal_variance / s;
    let closed_var = hp.signal_variance - hp.signal_variance.powi(2) / s;
    let zero = GpDataset::new(vec![0.4], vec![0.0]).unwrap();
    let lml = log_marginal_likelihood(&zero, &hp).unwrap();
    let closed_lml = -0.5 * s.ln() - 0.5 * (2.0 * PI).ln();
    let closed_err = [
        (p.mean[0] - closed_mean).abs(),
        (p.covariance[(0, 0)] - closed_var).abs(),
        p.mean[1].abs(),
        (p.covariance[(1, 1)] - hp.signal_variance).abs(),
        (lml - closed_lml).abs(),
        (kernel(0.0, 0.0, &hp) - 0.2).abs(),
        (kernel(0.0, 1.0, &GpHyperparams { signal_variance: 1.0, length_scale: 1.0, noise_variance: 1e-5 })
            - (-0.5f64).exp())
        .abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    out.report(
        3,
        "GP posterior vs direct inversion",
        worst < 1e-8 && closed_err < 1e-12,
        &[
            format!("200 datasets (N <= 20): max |difference| = {worst:.3e} (limit 1e-8)"),
            format!("single-point closed forms: max error {closed_err:.3e}"),
        ],
        t0,
    );
}

fn jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

struct Runs {
    experiments: Vec<Experiment>,
}

impl Runs {
    fn run(&mut self, cfg: ExperimentConfig) -> usize {
        let started = Instant::now();
        let e = run_experiment(&cfg).expect("experiment configuration is valid");
        info(format!(
            "{} n={} {} {}: {} runs ({} ok), median final cost {:.6}, {:.1} s",
            cfg.task,
            cfg.n,
            cfg.optimizer,
            match cfg.noise {
                NoiseSource::None => "noiseless",
                _ => "noisy",
            },
            e.runs.len(),
            e.runs_ok(),
            median(&e.final_costs()),
            started.elapsed().as_secs_f64()
        ));
        self.experiments.push(e);
        self.experiments.len() - 1
    }

    fn get(&self, k: usize) -> &Experiment {
        &self.experiments[k]
    }
}

fn vqe_config(n: usize, optimizer: OptimizerKind, reps: (usize, usize), budget: u64, reference: f64) -> ExperimentConfig {
    ExperimentConfig {
        task: Task::Vqe,
        n,
        r: 4,
        coupling: 1.0,
        field: 1.5,
        optimizer,
        budget,
        initial_points: reps.0,
        repeats: reps.1,
        seed: SEED,
        jobs: jobs(),
        reference: Reference::Value(reference),
        ..ExperimentConfig::default()
    }
}

fn optimizers() -> [OptimizerKind; 3] {
    [OptimizerKind::SGLBO, OptimizerKind::adam(false, false), OptimizerKind::nft(false)]
}

fn write_all(runs: &Runs, ids: &[usize], root: &Path) -> Vec<PathBuf> {
    ids.iter()
        .map(|&k| {
            let e = runs.get(k);
            let dir = root.join(e.config.optimizer.to_string());
            e.write(&dir).unwrap();
            dir
        })
        .collect()
}

fn criterion_4(out: &mut Outcome, runs: &mut Runs, store: &Path) -> Vec<usize> {
    let t0 = Instant::now();
    let circuit = build_ansatz(4, 4).unwrap();
    let h = tfim_hamiltonian(4, 1.0, 1.5).unwrap();
    let oracle = constrained_minimum(&CostFunction::vqe(circuit, h).unwrap(), 200, SEED).unwrap();
    info(format!(
        "n=4 constrained minimum {:.10} ({} of 200 starts converged)",
        oracle.value, oracle.converged
    ));
    let ids: Vec<usize> = optimizers()
        .into_iter()
        .map(|o| runs.run(vqe_config(4, o, (15, 2), 1_000_000, oracle.value)))
        .collect();
    write_all(runs, &ids, store);
    let de: Vec<f64> = ids
        .iter()
        .map(|&k| {
            let e = runs.get(k);
            e.gap(median(&e.final_costs()))
        })
        .collect();
    let mut details = vec![format!(
        "n=4 median final dE/site: sglbo {:.4e}, adam {:.4e}, nft {:.4e}",
        de[0], de[1], de[2]
    )];
    let a = de[0] < 1e-2;
    let b = de[0] < de[1] && de[0] < de[2];
    details.push(format!("(a) sglbo < 1e-2: {}", if a { "yes" } else { "no" }));
    details.push(format!("(b) sglbo below adam and nft: {}", if b { "yes" } else { "no" }));

    let mut smoke = true;
    for n in [8, 12] {
        let costs: Vec<f64> = optimizers()
            .into_iter()
            .map(|o| {
                let k = runs.run(vqe_config(n, o, (3, 1), 1_000_000, 0.0));
                median(&runs.get(k).final_costs())
            })
            .collect();
        let ok = costs[0] < costs[1] && costs[0] < costs[2];
        smoke &= ok;
        details.push(format!(
            "n={n} (3x1) median final energy: sglbo {:.5}, adam {:.5}, nft {:.5}; (b) {}",
            costs[0],
            costs[1],
            costs[2],
            if ok { "yes" } else { "no" }
        ));
    }
    out.report(4, "VQE TFIM reproduction at 1e6 shots", a && b && smoke, &details, t0);
    ids
}

/// Larger-budget reference for the VQE comparison; not a criterion.
fn vqe_budget_note(runs: &mut Runs) {
    println!("[INFO] VQE n=4 at 1e7 shots (5x1), for comparison with criterion 4");
    let oracle_ref = runs.get(0).reference;
    let de: Vec<f64> = [OptimizerKind::SGLBO, OptimizerKind::nft(false)]
        .into_iter()
        .map(|o| {
            let k = runs.run(vqe_config(4, o, (5, 1), 10_000_000, oracle_ref));
            let e = runs.get(k);
            e.gap(median(&e.final_costs()))
        })
        .collect();
    info(format!("median final dE/site: sglbo {:.4e}, nft {:.4e}", de[0], de[1]));
}

fn vqc_config(optimizer: OptimizerKind, noisy: bool) -> ExperimentConfig {
    ExperimentConfig {
        task: Task::Vqc,
        n: 4,
        r: 6,
        optimizer,
        budget: 1_000_000,
        initial_points: 15,
        repeats: 2,
        seed: SEED,
        jobs: jobs(),
        noise: if noisy {
            NoiseSource::File(Path::new(env!("CARGO_MANIFEST_DIR")).join("data/bogota.noise"))
        } else {
            NoiseSource::None
        },
        ..ExperimentConfig::default()
    }
}

fn criterion_5(out: &mut Outcome, runs: &mut Runs) -> usize {
    let t0 = Instant::now();
    let cfg = vqc_config(OptimizerKind::SGLBO, false);
    let cost = build_objective(&cfg).unwrap();
    let target = vec![0.0; cost.dim()];
    let at_target = cost.exact_value(&target).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 5);
    let sampled = cost.noisy_query(&target, 1000, &mut rng).unwrap().value;
    let k = runs.run(cfg);
    let m = median(&runs.get(k).final_costs());
    out.report(
        5,
        "VQC noiseless (n=4, r=6, target 0)",
        m < 1e-2 && at_target == 0.0 && sampled == 0.0,
        &[
            format!("sglbo median final cost {m:.4e} (limit 1e-2)"),
            format!("cost at target: exact {at_target}, 1000-shot estimate {sampled}"),
        ],
        t0,
    );
    k
}

fn criterion_6(out: &mut Outcome, runs: &mut Runs, noiseless: usize) -> [usize; 3] {
    let t0 = Instant::now();
    let ids = [
        runs.run(vqc_config(OptimizerKind::SGLBO, true)),
        runs.run(vqc_config(OptimizerKind::adam(false, false), true)),
        runs.run(vqc_config(OptimizerKind::nft(false), true)),
    ];
    let clean = median(&runs.get(noiseless).final_costs());
    let m: Vec<f64> = ids.iter().map(|&k| median(&runs.get(k).final_costs())).collect();
    let ratio = m[0] / clean;
    let within = m[0] <= 3.0 * clean && clean <= 3.0 * m[0];
    let best = m[0] < m[1] && m[0] < m[2];
    out.report(
        6,
        "VQC with device noise",
        within && best,
        &[
            format!("sglbo noisy {:.4e} vs noiseless {clean:.4e}: ratio {ratio:.3} (limit 3)", m[0]),
            format!("noisy medians: adam {:.4e}, nft {:.4e}", m[1], m[2]),
        ],
        t0,
    );
    ids
}

/// Median noiseless cost at the suffix averages of recorded iterates.
fn replayed_suffix_median(e: &Experiment, alpha: f64) -> f64 {
    let cost = build_objective(&e.config).unwrap();
    let v: Vec<f64> = e
        .runs
        .iter()
        .filter_map(|r| r.result.as_ref().ok())
        .map(|res| {
            let avg = wrap_suffix_average(&res.trace.iterates, alpha).unwrap();
            cost.noiseless_value(&avg).unwrap()
        })
        .collect();
    median(&v)
}

fn criterion_7(out: &mut Outcome, runs: &Runs, noisy: [usize; 3]) {
    let t0 = Instant::now();
    let sglbo = median(&runs.get(noisy[0]).final_costs());
    let adam = runs.get(noisy[1]);
    let nft = runs.get(noisy[2]);
    let adam_plain = median(&adam.final_costs());
    let nft_plain = median(&nft.final_costs());
    let adam_sa = replayed_suffix_median(adam, adam.config.alpha);
    let nft_sa = replayed_suffix_median(nft, nft.config.alpha);
    let iters = |e: &Experiment| {
        let v: Vec<f64> = e
            .runs
            .iter()
            .filter_map(|r| r.result.as_ref().ok())
            .map(|r| (r.trace.iterates.len() - 1) as f64)
            .collect();
        median(&v)
    };
    let adam_ok = adam_sa < adam_plain;
    let nft_ok = nft_sa < nft_plain;
    let smallest = sglbo < adam_sa && sglbo < nft_sa;
    out.report(
        7,
        "suffix averaging on noisy VQC",
        adam_ok && nft_ok && smallest,
        &[
            format!("adam {adam_plain:.4e} -> adam+sa {adam_sa:.4e} (median {} iterations)", iters(adam)),
            format!("nft {nft_plain:.4e} -> nft+sa {nft_sa:.4e} (median {} iterations)", iters(nft)),
            format!("sglbo {sglbo:.4e}"),
        ],
        t0,
    );
}

fn criterion_8(out: &mut Outcome, runs: &mut Runs) {
    let t0 = Instant::now();
    let plain = runs.run(vqc_config(OptimizerKind::adam(false, false), false));
    let ass = runs.run(vqc_config(OptimizerKind::adam(false, true), false));
    let a = median(&runs.get(plain).final_costs());
    let b = median(&runs.get(ass).final_costs());
    out.report(
        8,
        "adaptive shots for Adam on noiseless VQC",
        b <= a,
        &[format!("adam {a:.4e}, adam+ass {b:.4e}")],
        t0,
    );
}

fn criterion_9(out: &mut Outcome, runs: &Runs) {
    let t0 = Instant::now();
    let mut checked = 0;
    let mut mismatched = 0;
    let mut failed = 0;
    for e in &runs.experiments {
        for r in &e.runs {
            checked += 1;
            match &r.result {
                Ok(res) => {
                    let last = r.rows.last().map_or(0, |x| x.cumulative_shots);
                    if res.total_shots != r.audited_shots || last != r.audited_shots {
                        mismatched += 1;
                    }
                }
                Err(_) => failed += 1,
            }
        }
    }
    out.report(
        9,
        "shot ledger matches audited sampling calls",
        mismatched == 0 && failed == 0,
        &[format!("{checked} runs audited, {mismatched} mismatches, {failed} failed runs")],
        t0,
    );
}

fn criterion_10(out: &mut Outcome, runs: &mut Runs, first: &[usize], store: &Path) {
    let t0 = Instant::now();
    let again: Vec<usize> = first
        .iter()
        .map(|&k| {
            let cfg = runs.get(k).config.clone();
            runs.run(cfg)
        })
        .collect();
    let second = store.join("rerun");
    write_all(runs, &again, &second);
    let mut files = 0;
    let mut differ = Vec::new();
    for k in first {
        let name = runs.get(*k).config.optimizer.to_string();
        let a = store.join(&name);
        let b = second.join(&name);
        let mut names: Vec<_> = fs::read_dir(&a)
            .unwrap()
            .map(|d| d.unwrap().file_name())
            .filter(|n| n != "timings.csv")
            .collect();
        names.sort();
        for n in names {
            files += 1;
            if fs::read(a.join(&n)).unwrap() != fs::read(b.join(&n)).ok().unwrap_or_default() {
                differ.push(format!("{name}/{}", n.to_string_lossy()));
            }
        }
    }
    out.report(
        10,
        "rerun of criterion 4 is byte-identical",
        differ.is_empty() && files > 0,
        &[format!("{files} CSV files compared, {} differ {:?}", differ.len(), differ)],
        t0,
    );
}

fn main() {
    let all = Instant::now();
    let store = tempfile::tempdir().unwrap();
    let mut out = Outcome {
        passed: 0,
        failed: Vec::new(),
    };
    let mut runs = Runs {
        experiments: Vec::new(),
    };
    criterion_1(&mut out);
    criterion_2(&mut out);
    criterion_3(&mut out);
    let vqe = criterion_4(&mut out, &mut runs, store.path());
    let clean = criterion_5(&mut out, &mut runs);
    let noisy = criterion_6(&mut out, &mut runs, clean);
    criterion_7(&mut out, &runs, noisy);
    criterion_8(&mut out, &mut runs);
    criterion_9(&mut out, &runs);
    criterion_10(&mut out, &mut runs, &vqe, store.path());
    vqe_budget_note(&mut runs);
    println!(
        "acceptance: {}/10 criteria passed; failed {:?} ({:.0} s)",
        out.passed,
        out.failed,
        all.elapsed().as_secs_f64()
    );
}
