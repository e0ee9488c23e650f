use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sglbo::bench::aggregate::median;
use sglbo::bench::config::{ExperimentConfig, NoiseSource, Task};
use sglbo::bench::noise_check::{noise_check, render};
use sglbo::bench::oracle::{constrained_minimum, ground_energy};
use sglbo::bench::plotdata::export;
use sglbo::bench::run_experiment;
use sglbo::bench::runner::load_noise;
use sglbo::{build_ansatz, tfim_hamiltonian, CostFunction, Error, NoiseModel, Objective};

#[derive(Parser)]
#[command(name = "sglbo", version, about = "Shot-frugal optimization of parameterized quantum circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a batch of seeded optimizations and write CSV traces.
    Run(RunArgs),
    /// Print the exact ground energy and the ansatz-constrained minimum.
    Oracle(OracleArgs),
    /// Turn aggregate CSVs into plot-ready column files.
    Plotdata(PlotArgs),
    /// Check a noise table with the density-matrix simulator.
    NoiseCheck(NoiseArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Key-value configuration file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    task: Option<String>,
    /// sglbo, adam, adam+sa, adam+ass, adam+sa+ass, nft or nft+sa.
    #[arg(long)]
    optimizer: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    r: Option<String>,
    /// Total shot budget per run.
    #[arg(long)]
    budget: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Initial points x repeats, e.g. 15x2.
    #[arg(long)]
    reps: Option<String>,
    /// Noise table path, or `default` for the bundled device.
    #[arg(long)]
    noise_table: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    jobs: Option<String>,
    #[arg(long)]
    coupling: Option<String>,
    #[arg(long)]
    field: Option<String>,
    /// Comma-separated VQC target angles, or `zero`.
    #[arg(long)]
    target: Option<String>,
    /// Minimum for gap columns: `auto` (ground energy), `constrained` (ansatz minimum) or a number.
    #[arg(long)]
    reference: Option<String>,
    #[arg(long)]
    kappa: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    s_init: Option<String>,
    /// Shots per evaluation for the baselines.
    #[arg(long)]
    shots: Option<String>,
    #[arg(long)]
    lr: Option<String>,
    #[arg(long)]
    adam_beta1: Option<String>,
    #[arg(long)]
    adam_beta2: Option<String>,
    #[arg(long)]
    adam_epsilon: Option<String>,
    /// Any configuration key as key=value; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl RunArgs {
    fn config(&self) -> sglbo::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        let flags = [
            ("task", &self.task),
            ("optimizer", &self.optimizer),
            ("n", &self.n),
            ("r", &self.r),
            ("budget", &self.budget),
            ("seed", &self.seed),
            ("reps", &self.reps),
            ("noise", &self.noise_table),
            ("out", &self.out),
            ("jobs", &self.jobs),
            ("coupling", &self.coupling),
            ("field", &self.field),
            ("target", &self.target),
            ("reference", &self.reference),
            ("kappa", &self.kappa),
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("epsilon", &self.epsilon),
            ("s_init", &self.s_init),
            ("shots", &self.shots),
            ("learning_rate", &self.lr),
            ("adam_beta1", &self.adam_beta1),
            ("adam_beta2", &self.adam_beta2),
            ("adam_epsilon", &self.adam_epsilon),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                cfg.set(k, v)?;
            }
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got '{kv}'")))?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value = "vqe")]
    task: String,
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    r: usize,
    #[arg(long, default_value_t = 1.0)]
    coupling: f64,
    #[arg(long, default_value_t = 1.5)]
    field: f64,
    /// Number of uniform random starts for the constrained minimum.
    #[arg(long, default_value_t = 200)]
    starts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct PlotArgs {
    /// Aggregate CSV files.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, default_value = "plots")]
    out: PathBuf,
}

#[derive(Args)]
struct NoiseArgs {
    /// Noise table; the bundled device when omitted.
    #[arg(long)]
    noise_table: Option<PathBuf>,
    #[arg(long, default_value_t = 6)]
    r: usize,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn cmd_run(args: &RunArgs) -> Result<ExitCode, Failure> {
    let cfg = args.config().map_err(Failure::Usage)?;
    let exp = run_experiment(&cfg)?;
    exp.write(&cfg.out)?;
    let ok = exp.runs_ok();
    let failed = exp.runs.len() - ok;
    for r in exp.runs.iter().filter(|r| !r.is_ok()) {
        if let Err(e) = &r.result {
            eprintln!("run {} (init {}, repeat {}) failed: {e}", r.id, r.init, r.repeat);
        }
    }
    let finals = exp.final_costs();
    println!("{} {} runs: {ok} ok, {failed} failed", cfg.task, cfg.optimizer);
    if ok > 0 {
        let m = median(&finals);
        println!("median final cost: {m}");
        println!("median final gap: {} (reference {}, {})", exp.gap(m), exp.reference, exp.reference_kind);
    }
    println!("output: {}", cfg.out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_oracle(args: &OracleArgs) -> Result<ExitCode, Failure> {
    let task: Task = args.task.parse().map_err(Failure::Usage)?;
    let circuit = build_ansatz(args.n, args.r)?;
    let cost = match task {
        Task::Vqe => {
            let h = tfim_hamiltonian(args.n, args.coupling, args.field)?;
            println!("ground energy: {}", ground_energy(&h)?);
            CostFunction::vqe(circuit, h)?
        }
        Task::Vqc => {
            let target = vec![0.0; circuit.num_params()];
            let cost = CostFunction::vqc(circuit, target.clone())?;
            println!("cost at target: {}", cost.exact_value(&target)?);
            cost
        }
    };
    let m = constrained_minimum(&cost, args.starts, args.seed)?;
    println!("constrained minimum: {}", m.value);
    println!("converged starts: {}/{}", m.converged, m.starts);
    if task == Task::Vqe {
        println!("constrained minimum per site: {}", m.value / args.n as f64);
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_plotdata(args: &PlotArgs) -> Result<ExitCode, Failure> {
    for p in export(&args.inputs, &args.out)? {
        println!("{}", p.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_noise_check(args: &NoiseArgs) -> Result<ExitCode, Failure> {
    let model = match &args.noise_table {
        Some(p) => load_noise(&NoiseSource::File(p.clone()))?.expect("file source"),
        None => NoiseModel::default_device(),
    };
    let report = noise_check(&model, args.r, args.trials, args.seed)?;
    print!("{}", render(&model, &report));
    Ok(ExitCode::SUCCESS)
}

enum Failure {
    Usage(Error),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Plotdata(a) => cmd_plotdata(a),
        Command::NoiseCheck(a) => cmd_noise_check(a),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
