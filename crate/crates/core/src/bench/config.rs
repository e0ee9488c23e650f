use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::baselines::{AdamConfig, NftConfig};
use crate::error::{Error, Result};
use crate::sglbo::SglboConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Vqe,
    Vqc,
}

impl FromStr for Task {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "vqe" => Ok(Task::Vqe),
            "vqc" => Ok(Task::Vqc),
            _ => Err(Error::Config(format!("unknown task '{s}' (expected vqe or vqc)"))),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Vqe => "vqe",
            Task::Vqc => "vqc",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Sglbo,
    Adam,
    Nft,
}

/// An optimizer with its wrappers, written like `adam+sa+ass`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OptimizerKind {
    pub method: Method,
    pub suffix_average: bool,
    pub adaptive_shots: bool,
}

impl OptimizerKind {
    pub const SGLBO: Self = Self {
        method: Method::Sglbo,
        suffix_average: true,
        adaptive_shots: true,
    };

    pub fn adam(suffix_average: bool, adaptive_shots: bool) -> Self {
        Self {
            method: Method::Adam,
            suffix_average,
            adaptive_shots,
        }
    }

    pub fn nft(suffix_average: bool) -> Self {
        Self {
            method: Method::Nft,
            suffix_average,
            adaptive_shots: false,
        }
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        let mut parts = lower.split('+');
        let base = parts.next().unwrap_or_default();
        let mut sa = false;
        let mut ass = false;
        for p in parts {
            match p {
                "sa" if !sa => sa = true,
                "ass" if !ass => ass = true,
                _ => return Err(Error::Config(format!("unknown optimizer modifier '{p}' in '{s}'"))),
            }
        }
        match base {
            "sglbo" if !sa && !ass => Ok(Self::SGLBO),
            "adam" => Ok(Self::adam(sa, ass)),
            "nft" if !ass => Ok(Self::nft(sa)),
            _ => Err(Error::Config(format!(
                "unknown optimizer '{s}' (sglbo, adam[+sa][+ass], nft[+sa])"
            ))),
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.method {
            Method::Sglbo => return f.write_str("sglbo"),
            Method::Adam => f.write_str("adam")?,
            Method::Nft => f.write_str("nft")?,
        }
        if self.suffix_average {
            f.write_str("+sa")?;
        }
        if self.adaptive_shots {
            f.write_str("+ass")?;
        }
        Ok(())
    }
}

/// Minimum subtracted in gap columns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reference {
    /// Ground energy for VQE, 0 for VQC.
    Auto,
    /// Multi-start minimum over the ansatz (VQE); 0 for VQC.
    Constrained,
    Value(f64),
}

/// Where the noise model comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSource {
    None,
    /// The built-in device table.
    Default,
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub task: Task,
    pub n: usize,
    pub r: usize,
    pub coupling: f64,
    pub field: f64,
    /// VQC target angles; `None` means all zeros.
    pub target: Option<Vec<f64>>,
    pub optimizer: OptimizerKind,
    pub budget: u64,
    pub initial_points: usize,
    pub repeats: usize,
    pub seed: u64,
    pub noise: NoiseSource,
    pub out: PathBuf,
    pub jobs: usize,
    pub reference: Reference,
    pub kappa: f64,
    pub alpha: f64,
    /// `None` picks 3 for VQE and 6 for VQC.
    pub beta: Option<f64>,
    pub epsilon: f64,
    pub s_init: u64,
    pub shots: u64,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        let sg = SglboConfig::default();
        Self {
            task: Task::Vqe,
            n: 4,
            r: 4,
            coupling: 1.0,
            field: 1.5,
            target: None,
            optimizer: OptimizerKind::SGLBO,
            budget: 1_000_000,
            initial_points: 15,
            repeats: 2,
            seed: 0,
            noise: NoiseSource::None,
            out: PathBuf::from("runs"),
            jobs: 1,
            reference: Reference::Auto,
            kappa: sg.kappa,
            alpha: sg.alpha,
            beta: None,
            epsilon: sg.epsilon,
            s_init: sg.s_init,
            shots: adam.shots,
            learning_rate: adam.learning_rate,
            adam_beta1: adam.beta1,
            adam_beta2: adam.beta2,
            adam_epsilon: adam.epsilon,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value '{value}' for '{key}'")))
}

/// Integer shot count; also accepts exact scientific notation such as `1e6`.
fn parse_shots(key: &str, value: &str) -> Result<u64> {
    if let Ok(v) = value.parse() {
        return Ok(v);
    }
    match value.parse::<f64>() {
        Ok(f) if f >= 0.0 && f.fract() == 0.0 && f < u64::MAX as f64 => Ok(f as u64),
        _ => Err(Error::Config(format!("invalid value '{value}' for '{key}'"))),
    }
}

/// Parses `15x2` (initial points x repeats) or a bare point count.
pub fn parse_reps(value: &str) -> Result<(usize, usize)> {
    let (a, b) = match value.split_once(['x', 'X']) {
        Some((a, b)) => (parse_num("reps", a.trim())?, parse_num("reps", b.trim())?),
        None => (parse_num("reps", value)?, 1),
    };
    if a == 0 || b == 0 {
        return Err(Error::Config("repetition counts must be positive".into()));
    }
    Ok((a, b))
}

impl ExperimentConfig {
    /// Reads a flat `key = value` file; `#` starts a comment.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(lineno + 1, format!("expected key = value, got '{line}'")))?;
            self.set(k.trim(), v.trim())
                .map_err(|e| Error::parse(lineno + 1, e.to_string()))?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "task" => self.task = value.parse()?,
            "n" => self.n = parse_num(key, value)?,
            "r" => self.r = parse_num(key, value)?,
            "coupling" | "J" => self.coupling = parse_num(key, value)?,
            "field" | "g" => self.field = parse_num(key, value)?,
            "target" => {
                self.target = if value == "zero" {
                    None
                } else {
                    Some(
                        value
                            .split(',')
                            .map(|t| parse_num(key, t.trim()))
                            .collect::<Result<_>>()?,
                    )
                }
            }
            "optimizer" => self.optimizer = value.parse()?,
            "budget" => self.budget = parse_shots(key, value)?,
            "reps" => (self.initial_points, self.repeats) = parse_reps(value)?,
            "initial_points" => self.initial_points = parse_num(key, value)?,
            "repeats" => self.repeats = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "noise" | "noise_table" => {
                self.noise = match value {
                    "" | "none" => NoiseSource::None,
                    "default" => NoiseSource::Default,
                    path => NoiseSource::File(PathBuf::from(path)),
                }
            }
            "out" => self.out = PathBuf::from(value),
            "jobs" => self.jobs = parse_num(key, value)?,
            "reference" => {
                self.reference = match value {
                    "auto" => Reference::Auto,
                    "constrained" => Reference::Constrained,
                    v => Reference::Value(parse_num(key, v)?),
                }
            }
            "kappa" => self.kappa = parse_num(key, value)?,
            "alpha" => self.alpha = parse_num(key, value)?,
            "beta" => self.beta = Some(parse_num(key, value)?),
            "epsilon" => self.epsilon = parse_num(key, value)?,
            "s_init" => self.s_init = parse_num(key, value)?,
            "shots" => self.shots = parse_num(key, value)?,
            "learning_rate" | "lr" => self.learning_rate = parse_num(key, value)?,
            "adam_beta1" => self.adam_beta1 = parse_num(key, value)?,
            "adam_beta2" => self.adam_beta2 = parse_num(key, value)?,
            "adam_epsilon" => self.adam_epsilon = parse_num(key, value)?,
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config("n must be at least 2".into()));
        }
        if self.initial_points == 0 || self.repeats == 0 {
            return Err(Error::Config("repetition counts must be positive".into()));
        }
        if self.jobs == 0 {
            return Err(Error::Config("jobs must be positive".into()));
        }
        if self.budget == 0 {
            return Err(Error::Config("budget must be positive".into()));
        }
        if self.task == Task::Vqe && self.target.is_some() {
            return Err(Error::Config("target applies to vqc only".into()));
        }
        self.sglbo().validate()
    }

    pub fn beta(&self) -> f64 {
        self.beta.unwrap_or(match self.task {
            Task::Vqe => 3.0,
            Task::Vqc => 6.0,
        })
    }

    pub fn sglbo(&self) -> SglboConfig {
        SglboConfig {
            kappa: self.kappa,
            alpha: self.alpha,
            beta: self.beta(),
            budget: self.budget,
            s_init: self.s_init,
            epsilon: self.epsilon,
            ..SglboConfig::default()
        }
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            epsilon: self.adam_epsilon,
            shots: self.shots,
            adaptive_shots: self.optimizer.adaptive_shots,
            kappa: self.kappa,
            s_init: self.s_init,
            suffix_average: self.optimizer.suffix_average,
            alpha: self.alpha,
            budget: self.budget,
        }
    }

    pub fn nft(&self) -> NftConfig {
        NftConfig {
            shots: self.shots,
            suffix_average: self.optimizer.suffix_average,
            alpha: self.alpha,
            budget: self.budget,
        }
    }

    pub fn runs(&self) -> usize {
        self.initial_points * self.repeats
    }
}
