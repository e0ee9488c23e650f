use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::aggregate::{aggregate, AggregateRow, AGGREGATE_HEADER};
use super::config::{ExperimentConfig, Method, NoiseSource, Reference, Task};
use super::oracle::{constrained_minimum, ground_energy};
use crate::baselines::{run_adam, run_nft};
use crate::circuit::build_ansatz;
use crate::cost::{CostFunction, CostKind, Objective, ShotCounter};
use crate::error::{Error, Result};
use crate::noise::NoiseModel;
use crate::pauli::tfim_hamiltonian;
use crate::sglbo::{run_sglbo, RunResult, TraceRow};

pub const RUN_HEADER: &str = "run,t,cumulative_shots,cost,suffix_cost,s_grad_mean,s_cost,eta";

/// Generator for the starting point of initial point `init`, shared by its repeats.
pub fn init_rng(seed: u64, init: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((init as u64) << 32);
    rng
}

/// Generator for the sampling noise of run `(init, repeat)`.
pub fn run_rng(seed: u64, init: usize, repeat: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((init as u64) << 32) | (repeat as u64 + 1));
    rng
}

/// Uniform draw from `[-pi, pi]^dim`.
pub fn initial_point(seed: u64, init: usize, dim: usize) -> Vec<f64> {
    let mut rng = init_rng(seed, init);
    (0..dim).map(|_| rng.random_range(-PI..=PI)).collect()
}

pub fn load_noise(source: &NoiseSource) -> Result<Option<NoiseModel>> {
    Ok(match source {
        NoiseSource::None => None,
        NoiseSource::Default => Some(NoiseModel::default_device()),
        NoiseSource::File(p) => Some(NoiseModel::load_table(p)?),
    })
}

pub fn build_objective(cfg: &ExperimentConfig) -> Result<CostFunction> {
    let circuit = build_ansatz(cfg.n, cfg.r)?;
    let cost = match cfg.task {
        Task::Vqe => CostFunction::vqe(circuit, tfim_hamiltonian(cfg.n, cfg.coupling, cfg.field)?)?,
        Task::Vqc => {
            let target = cfg.target.clone().unwrap_or_else(|| vec![0.0; circuit.num_params()]);
            CostFunction::vqc(circuit, target)?
        }
    };
    match load_noise(&cfg.noise)? {
        Some(model) => cost.with_noise(model),
        None => Ok(cost),
    }
}

/// Starts used when the constrained minimum is requested.
pub const ORACLE_STARTS: usize = 200;

/// Baseline for gap columns: `(value, label)`.
pub fn reference(cfg: &ExperimentConfig, cost: &CostFunction) -> Result<(f64, &'static str)> {
    match (cfg.reference, cost.kind()) {
        (Reference::Value(v), _) => Ok((v, "given")),
        (_, CostKind::Vqc { .. }) => Ok((0.0, "zero")),
        (Reference::Auto, CostKind::Vqe { observable }) => Ok((ground_energy(observable)?, "ground")),
        (Reference::Constrained, CostKind::Vqe { .. }) => {
            let exact = cost.noiseless();
            Ok((constrained_minimum(&exact, ORACLE_STARTS, cfg.seed)?.value, "constrained"))
        }
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub id: usize,
    pub init: usize,
    pub repeat: usize,
    /// Every row emitted, including those before a failure.
    pub rows: Vec<TraceRow>,
    pub result: std::result::Result<RunResult, String>,
    /// Shots seen by the sampling interface, counted independently of the optimizer.
    pub audited_shots: u64,
    /// Noiseless cost at the returned point.
    pub final_cost: f64,
    pub wall_ms: f64,
}

impl RunOutcome {
    pub fn is_ok(&self) -> bool {
        self.result.is_ok()
    }
}

pub fn run_single<O: Objective + ?Sized>(
    cost: &O,
    cfg: &ExperimentConfig,
    init: usize,
    repeat: usize,
) -> RunOutcome {
    let start = Instant::now();
    let theta0 = initial_point(cfg.seed, init, cost.dim());
    let mut rng = run_rng(cfg.seed, init, repeat);
    let counted = ShotCounter::new(cost);
    let mut rows = Vec::new();
    let mut observe = |r: &TraceRow| rows.push(r.clone());
    let result = match cfg.optimizer.method {
        Method::Sglbo => run_sglbo(&counted, &cfg.sglbo(), &theta0, &mut rng, &mut observe),
        Method::Adam => run_adam(&counted, &cfg.adam(), &theta0, &mut rng, &mut observe),
        Method::Nft => run_nft(&counted, &cfg.nft(), &theta0, &mut rng, &mut observe),
    };
    let result = result.and_then(|r| {
        let v = cost.noiseless_value(&r.suffix_average)?;
        Ok((r, v))
    });
    let (result, final_cost) = match result {
        Ok((r, v)) => (Ok(r), v),
        Err(e) => (Err(e.to_string()), f64::NAN),
    };
    RunOutcome {
        id: init * cfg.repeats + repeat,
        init,
        repeat,
        rows,
        result,
        audited_shots: counted.shots(),
        final_cost,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    }
}

#[derive(Debug)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub reference: f64,
    pub reference_kind: &'static str,
    /// Divisor of the gap: `n` for VQE, 1 for VQC.
    pub sites: usize,
    pub runs: Vec<RunOutcome>,
}

/// Runs every `(initial point, repeat)` pair, up to `cfg.jobs` at a time.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Experiment> {
    cfg.validate()?;
    let cost = build_objective(cfg)?;
    let (reference, reference_kind) = reference(cfg, &cost)?;
    let pairs: Vec<(usize, usize)> = (0..cfg.initial_points)
        .flat_map(|i| (0..cfg.repeats).map(move |j| (i, j)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::Resource(e.to_string()))?;
    let runs = pool.install(|| {
        pairs
            .par_iter()
            .map(|&(i, j)| run_single(&cost, cfg, i, j))
            .collect()
    });
    Ok(Experiment {
        config: cfg.clone(),
        reference,
        reference_kind,
        sites: match cfg.task {
            Task::Vqe => cfg.n,
            Task::Vqc => 1,
        },
        runs,
    })
}

impl Experiment {
    pub fn runs_ok(&self) -> usize {
        self.runs.iter().filter(|r| r.is_ok()).count()
    }

    pub fn gap(&self, cost: f64) -> f64 {
        (cost - self.reference) / self.sites as f64
    }

    /// Noiseless costs at the returned points of successful runs.
    pub fn final_costs(&self) -> Vec<f64> {
        self.runs.iter().filter(|r| r.is_ok()).map(|r| r.final_cost).collect()
    }

    pub fn aggregate(&self) -> Vec<AggregateRow> {
        let ok: Vec<&[TraceRow]> = self
            .runs
            .iter()
            .filter(|r| r.is_ok())
            .map(|r| r.rows.as_slice())
            .collect();
        aggregate(&ok, |c| self.gap(c))
    }

    pub fn run_file_name(run: &RunOutcome) -> String {
        format!("run_{:03}_{:02}.csv", run.init, run.repeat)
    }

    pub fn run_csv(run: &RunOutcome) -> String {
        let mut s = String::from(RUN_HEADER);
        s.push('\n');
        for r in &run.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                run.id, r.t, r.cumulative_shots, r.cost, r.suffix_cost, r.s_grad_mean, r.s_cost, r.eta
            );
        }
        s
    }

    pub fn aggregate_csv(&self) -> String {
        let c = &self.config;
        let mut s = format!(
            "# task={} n={} r={} optimizer={} budget={} seed={} reference={} reference_kind={} sites={}\n",
            c.task, c.n, c.r, c.optimizer, c.budget, c.seed, self.reference, self.reference_kind, self.sites
        );
        s.push_str(AGGREGATE_HEADER);
        s.push('\n');
        let ok = self.runs_ok();
        let failed = self.runs.len() - ok;
        for a in self.aggregate() {
            let _ = writeln!(
                s,
                "{},{ok},{failed},{},{},{},{},{},{}",
                a.shots,
                a.median_cost,
                a.mean_cost,
                a.median_suffix_cost,
                a.mean_suffix_cost,
                a.mean_log10_gap,
                a.log10_mean_gap
            );
        }
        s
    }

    pub fn summary_csv(&self) -> String {
        let mut s = String::from("run,init,repeat,status,total_shots,audited_shots,final_cost,message\n");
        for r in &self.runs {
            let (status, total, msg) = match &r.result {
                Ok(res) => ("ok", res.total_shots, String::new()),
                Err(e) => ("failed", r.rows.last().map_or(0, |x| x.cumulative_shots), e.replace([',', '\n'], ";")),
            };
            let _ = writeln!(
                s,
                "{},{},{},{status},{total},{},{},{msg}",
                r.id, r.init, r.repeat, r.audited_shots, r.final_cost
            );
        }
        s
    }

    pub fn timings_csv(&self) -> String {
        let mut s = String::from("run,wall_ms\n");
        for r in &self.runs {
            let _ = writeln!(s, "{},{:.3}", r.id, r.wall_ms);
        }
        s
    }

    /// Writes one CSV per run, `aggregate.csv`, `summary.csv` and the
    /// wall-clock sidecar `timings.csv`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for r in &self.runs {
            fs::write(dir.join(Self::run_file_name(r)), Self::run_csv(r))?;
        }
        fs::write(dir.join("aggregate.csv"), self.aggregate_csv())?;
        fs::write(dir.join("summary.csv"), self.summary_csv())?;
        fs::write(dir.join("timings.csv"), self.timings_csv())?;
        Ok(())
    }
}
